//! Explicit finite probability tables over bit-vector configurations.
//!
//! Small enough instances (up to ~20 binary sites) are checked exactly:
//! configurations are u64 masks and probabilities plain f64 summing to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROB_SUM_TOL: f64 = 1e-12;

/// A probability table over configurations of `n_bits` binary sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMeasure {
    pub n_bits: usize,
    pub configs: Vec<u64>,
    pub probs: Vec<f64>,
}

impl ExactMeasure {
    pub fn new(n_bits: usize, configs: Vec<u64>, probs: Vec<f64>) -> Result<ExactMeasure> {
        if configs.len() != probs.len() {
            return Err(Error::InvalidParameter(
                "configs and probs length mismatch".into(),
            ));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParameter("negative probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &c in &configs {
            if n_bits < 64 && c >> n_bits != 0 {
                return Err(Error::InvalidParameter("config out of range".into()));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidParameter("duplicate configuration".into()));
            }
        }
        Ok(ExactMeasure {
            n_bits,
            configs,
            probs,
        })
    }

    /// Normalize nonnegative weights into a measure.
    pub fn from_weights(n_bits: usize, configs: Vec<u64>, weights: Vec<f64>) -> Result<ExactMeasure> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidParameter("weights do not normalize".into()));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        ExactMeasure::new(n_bits, configs, probs)
    }

    /// The full table of a product Bernoulli(p) measure on m sites.
    pub fn product_bernoulli(m: usize, p: f64) -> Result<ExactMeasure> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p={p} outside [0,1]")));
        }
        if m > 20 {
            return Err(Error::EnumerationGuard {
                faces: m,
                limit: 20,
            });
        }
        let configs: Vec<u64> = (0..1u64 << m).collect();
        let probs = configs
            .iter()
            .map(|&c| {
                let ones = c.count_ones() as i32;
                p.powi(ones) * (1.0 - p).powi(m as i32 - ones)
            })
            .collect();
        ExactMeasure::new(m, configs, probs)
    }

    pub fn point_mass(m: usize, config: u64) -> ExactMeasure {
        ExactMeasure {
            n_bits: m,
            configs: vec![config],
            probs: vec![1.0],
        }
    }

    pub fn prob_of(&self, config: u64) -> f64 {
        self.configs
            .iter()
            .position(|&c| c == config)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    /// Probability of an event given as a predicate on configurations.
    pub fn prob(&self, event: impl Fn(u64) -> bool) -> f64 {
        self.configs
            .iter()
            .zip(&self.probs)
            .filter(|(&c, _)| event(c))
            .map(|(_, &p)| p)
            .sum()
    }

    /// Push the measure forward through a configuration map.
    pub fn push_forward(&self, n_bits: usize, f: impl Fn(u64) -> u64) -> ExactMeasure {
        let mut acc: std::collections::HashMap<u64, f64> = std::collections::HashMap::new();
        for (&c, &p) in self.configs.iter().zip(&self.probs) {
            *acc.entry(f(c)).or_insert(0.0) += p;
        }
        let mut configs: Vec<u64> = acc.keys().copied().collect();
        configs.sort_unstable();
        let probs = configs.iter().map(|c| acc[c]).collect();
        ExactMeasure {
            n_bits,
            configs,
            probs,
        }
    }

    pub fn to_json(&self) -> String {
        let bits = |c: u64| -> Vec<u8> { (0..self.n_bits).map(|i| (c >> i & 1) as u8).collect() };
        let doc = MeasureJson {
            configs: self.configs.iter().map(|&c| bits(c)).collect(),
            probs: self.probs.clone(),
        };
        serde_json::to_string(&doc).expect("measure serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<ExactMeasure> {
        let doc: MeasureJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let n_bits = doc.configs.first().map(|c| c.len()).unwrap_or(0);
        let configs = doc
            .configs
            .iter()
            .map(|bits| {
                bits.iter()
                    .enumerate()
                    .fold(0u64, |m, (i, &b)| m | (b as u64) << i)
            })
            .collect();
        ExactMeasure::new(n_bits, configs, doc.probs)
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    configs: Vec<Vec<u8>>,
    probs: Vec<f64>,
}

/// Total variation distance between two measures on the same configuration
/// space (configs may be listed in different orders or supports).
pub fn tv_distance(a: &ExactMeasure, b: &ExactMeasure) -> f64 {
    let mut diff: std::collections::HashMap<u64, f64> = std::collections::HashMap::new();
    for (&c, &p) in a.configs.iter().zip(&a.probs) {
        *diff.entry(c).or_insert(0.0) += p;
    }
    for (&c, &p) in b.configs.iter().zip(&b.probs) {
        *diff.entry(c).or_insert(0.0) -= p;
    }
    0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
}

/// Total variation between empirical counts and an exact measure.
pub fn tv_empirical(counts: &std::collections::HashMap<u64, u64>, total: u64, exact: &ExactMeasure) -> f64 {
    let mut tv = 0.0;
    let mut seen = std::collections::HashSet::new();
    for (&c, &p) in exact.configs.iter().zip(&exact.probs) {
        let emp = counts.get(&c).copied().unwrap_or(0) as f64 / total as f64;
        tv += (emp - p).abs();
        seen.insert(c);
    }
    for (&c, &k) in counts {
        if !seen.contains(&c) {
            tv += k as f64 / total as f64;
        }
    }
    0.5 * tv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_bernoulli_normalizes_and_has_right_marginals() {
        let m = ExactMeasure::product_bernoulli(3, 0.3).unwrap();
        assert_eq!(m.configs.len(), 8);
        let sum: f64 = m.probs.iter().sum();
        assert!((sum - 1.0).abs() < PROB_SUM_TOL);
        for i in 0..3 {
            let marg = m.prob(|c| c >> i & 1 == 1);
            assert!((marg - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn tv_of_identical_measures_is_zero() {
        let m = ExactMeasure::product_bernoulli(2, 0.4).unwrap();
        assert_eq!(tv_distance(&m, &m), 0.0);
        let p = ExactMeasure::point_mass(2, 0b11);
        let q = ExactMeasure::point_mass(2, 0b00);
        assert!((tv_distance(&p, &q) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let m = ExactMeasure::product_bernoulli(2, 0.25).unwrap();
        let s = m.to_json();
        let back = ExactMeasure::from_json(&s).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(ExactMeasure::new(2, vec![0, 1], vec![0.5, 0.6]).is_err());
        assert!(ExactMeasure::new(2, vec![0, 0], vec![0.5, 0.5]).is_err());
        assert!(ExactMeasure::new(1, vec![2], vec![1.0]).is_err());
    }
}
