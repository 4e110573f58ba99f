//! Arm events on cut sets, the greedy arc-splitting selection, and the
//! deterministic crossing-component inequality.
//!
//! Connectivity is always "from the cut set outward": an arc connects to the
//! outer boundary in a given state when one of its vertices carries that
//! state and reaches the boundary through vertices strictly outside the
//! enclosed region.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::percolation::{clusters, SiteConfig};
use crate::planar::CutSet;

/// Per-position reachability of one sample: bit i set when cut vertex i
/// (in walk order) is open-connected to the outer boundary through the
/// exterior.
type ReachMask = Vec<u64>;

fn mask_range_empty(mask: &ReachMask, a: usize, b: usize) -> bool {
    (a..b).all(|i| mask[i / 64] >> (i % 64) & 1 == 0)
}

/// Which cut positions connect to `outer` through exterior vertices in the
/// given state? Inclusive: the cut vertex itself must carry the state.
pub fn cut_reach(cfg: &SiteConfig, cut: &CutSet, outer: &[u32], state: bool) -> Vec<bool> {
    let g = &cfg.graph;
    let ext = cut.exterior_mask();
    // Flood from the outer boundary through exterior vertices of the state.
    let mut reached = vec![false; g.n];
    let mut stack: Vec<u32> = outer
        .iter()
        .copied()
        .filter(|&v| ext[v as usize] && cfg.open[v as usize] == state)
        .collect();
    for &v in &stack {
        reached[v as usize] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in &g.adj[v as usize] {
            if ext[w as usize] && cfg.open[w as usize] == state && !reached[w as usize] {
                reached[w as usize] = true;
                stack.push(w);
            }
        }
    }
    cut.s_n
        .iter()
        .map(|&v| {
            cfg.open[v as usize] == state && g.adj[v as usize].iter().any(|&w| reached[w as usize])
        })
        .collect()
}

/// A partition of the ordered cut set into 2k consecutive arcs. `splits`
/// holds the half-open end positions, strictly increasing, the last equal to
/// the cut length.
#[derive(Debug, Clone, Serialize)]
pub struct ArcDecomposition {
    pub len: usize,
    pub splits: Vec<usize>,
    /// Greedy threshold certificates (p-hat per arc) when produced by
    /// `iterated_split`; empty for manual decompositions.
    pub arc_estimates: Vec<f64>,
    /// Arcs whose certificate sits within two standard errors of the
    /// threshold; reported, not failed.
    pub borderline: Vec<usize>,
}

impl ArcDecomposition {
    pub fn equal_split(len: usize, k: usize) -> Result<ArcDecomposition> {
        let parts = 2 * k;
        if parts == 0 || len < parts {
            return Err(Error::InvalidParameter(format!(
                "cannot split {len} cut vertices into {parts} arcs"
            )));
        }
        let splits = (1..=parts).map(|j| j * len / parts).collect::<Vec<_>>();
        ArcDecomposition::from_splits(len, splits)
    }

    pub fn from_splits(len: usize, splits: Vec<usize>) -> Result<ArcDecomposition> {
        if splits.is_empty()
            || splits.last() != Some(&len)
            || splits[0] == 0
            || splits.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParameter("bad arc split indices".into()));
        }
        Ok(ArcDecomposition {
            len,
            splits,
            arc_estimates: Vec::new(),
            borderline: Vec::new(),
        })
    }

    pub fn arc_count(&self) -> usize {
        self.splits.len()
    }

    pub fn k(&self) -> usize {
        self.splits.len() / 2
    }

    /// Half-open position ranges of the arcs.
    pub fn arcs(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.splits.len());
        let mut start = 0;
        for &end in &self.splits {
            out.push(start..end);
            start = end;
        }
        out
    }
}

/// Monte Carlo table of arc-to-boundary non-connection probabilities,
/// evaluated lazily from per-sample reach masks. Only the O(L * 2k) interval
/// queries made by the greedy split are ever materialized.
#[derive(Debug, Clone)]
pub struct PijTable {
    pub len: usize,
    pub samples: u64,
    reach: Vec<ReachMask>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PijEntry {
    pub from: usize,
    pub to: usize,
    pub p_hat: f64,
    /// Two standard errors of the estimate.
    pub half_width: f64,
}

impl PijTable {
    /// Estimated probability that no vertex of positions [a, b) connects,
    /// with a two-standard-error half width.
    pub fn p_hat(&self, a: usize, b: usize) -> PijEntry {
        let misses = self
            .reach
            .iter()
            .filter(|m| mask_range_empty(m, a, b))
            .count() as f64;
        let n = self.samples as f64;
        let p = misses / n;
        PijEntry {
            from: a,
            to: b,
            p_hat: p,
            half_width: 2.0 * (p * (1.0 - p) / n).sqrt(),
        }
    }

    /// The non-increasing one-arm row p(0..i) for i in 1..=len.
    pub fn prefix_row(&self) -> Vec<f64> {
        (1..=self.len).map(|i| self.p_hat(0, i).p_hat).collect()
    }

    pub fn to_json(&self, entries: &[PijEntry]) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            len: usize,
            samples: u64,
            entries: &'a [PijEntry],
        }
        serde_json::to_string(&Doc {
            len: self.len,
            samples: self.samples,
            entries,
        })
        .expect("pij serialization cannot fail")
    }
}

/// Estimate the non-connection table: one configuration and one flood per
/// sample index. The sampler receives the sample index and must derive its
/// own randomness from it.
pub fn estimate_pij<F>(sampler: F, cut: &CutSet, outer: &[u32], n_samples: u64) -> PijTable
where
    F: Fn(u64) -> SiteConfig,
{
    let len = cut.s_n.len();
    let words = len.div_ceil(64);
    let mut reach = Vec::with_capacity(n_samples as usize);
    for s in 0..n_samples {
        let cfg = sampler(s);
        let bits = cut_reach(&cfg, cut, outer, true);
        let mut mask = vec![0u64; words];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                mask[i / 64] |= 1 << (i % 64);
            }
        }
        reach.push(mask);
    }
    PijTable {
        len,
        samples: n_samples,
        reach,
    }
}

/// First index whose one-arm estimate drops below sqrt(2 eps). `row[i]` is
/// the non-connection probability of the prefix ending at position i+1; the
/// returned index is 1-based like the prefix length it names. Errors when
/// even the full boundary fails the threshold.
pub fn arc_split(row: &[f64], eps: f64) -> Result<usize> {
    if row.is_empty() || row.windows(2).any(|w| w[1] > w[0] + 1e-12) {
        return Err(Error::InvalidParameter(
            "one-arm row must be non-increasing".into(),
        ));
    }
    let threshold = (2.0 * eps).sqrt();
    let last = *row.last().unwrap();
    if last >= threshold {
        return Err(Error::OneArmTooWeak(last));
    }
    Ok(row
        .iter()
        .position(|&p| p < threshold)
        .expect("last entry passes the threshold")
        + 1)
}

/// Greedy split of the cut set into 2k arcs, each with estimated
/// non-connection probability at most eps/4k. Errors when the full-boundary
/// estimate is too weak or the greedy selection exhausts the cut set.
pub fn iterated_split(table: &PijTable, eps: f64, k: usize) -> Result<ArcDecomposition> {
    if k == 0 || eps <= 0.0 {
        return Err(Error::InvalidParameter("need k >= 1 and eps > 0".into()));
    }
    let parts = 2 * k;
    let eps_prime = (eps / (8.0 * k as f64)).powi(2 * k as i32);
    let whole = table.p_hat(0, table.len);
    if whole.p_hat >= eps_prime {
        return Err(Error::OneArmTooWeak(whole.p_hat));
    }
    let threshold = eps / (4.0 * k as f64);
    let mut splits = Vec::with_capacity(parts);
    let mut estimates = Vec::with_capacity(parts);
    let mut borderline = Vec::new();
    let mut start = 0usize;
    for arc in 0..parts - 1 {
        let mut found = None;
        for end in start + 1..=table.len.saturating_sub(parts - 1 - arc) {
            let entry = table.p_hat(start, end);
            if entry.p_hat <= threshold {
                found = Some((end, entry));
                break;
            }
        }
        let (end, entry) = found.ok_or(Error::InsufficientOneArm { arcs: arc })?;
        if (entry.p_hat - threshold).abs() <= entry.half_width {
            borderline.push(arc);
        }
        splits.push(end);
        estimates.push(entry.p_hat);
        start = end;
    }
    // The final arc must pass the same threshold.
    let entry = table.p_hat(start, table.len);
    if entry.p_hat > threshold {
        return Err(Error::InsufficientOneArm { arcs: parts - 1 });
    }
    if (entry.p_hat - threshold).abs() <= entry.half_width {
        borderline.push(parts - 1);
    }
    splits.push(table.len);
    estimates.push(entry.p_hat);
    let mut dec = ArcDecomposition::from_splits(table.len, splits)?;
    dec.arc_estimates = estimates;
    dec.borderline = borderline;
    Ok(dec)
}

/// The 2k-arm event: every arc connects to the outer boundary by an open
/// path and by a closed path, simultaneously.
pub fn arm_event(cfg: &SiteConfig, cut: &CutSet, arcs: &ArcDecomposition, outer: &[u32]) -> bool {
    let open_reach = cut_reach(cfg, cut, outer, true);
    let closed_reach = cut_reach(cfg, cut, outer, false);
    arcs.arcs().into_iter().all(|range| {
        range.clone().any(|i| open_reach[i]) && range.clone().any(|i| closed_reach[i])
    })
}

/// Number of state-clusters meeting both vertex sets.
pub fn crossing_components(
    cfg: &SiteConfig,
    inner: &[u32],
    outer: &[u32],
    state: bool,
) -> Result<usize> {
    if inner.iter().any(|v| outer.contains(v)) {
        return Err(Error::InvalidParameter(
            "inner and outer vertex sets must be disjoint".into(),
        ));
    }
    let cl = clusters(cfg, state);
    let mut inner_hit = vec![false; cl.sizes.len()];
    for &v in inner {
        let l = cl.label[v as usize];
        if l != u32::MAX {
            inner_hit[l as usize] = true;
        }
    }
    let mut seen = vec![false; cl.sizes.len()];
    let mut count = 0;
    for &v in outer {
        let l = cl.label[v as usize];
        if l != u32::MAX && inner_hit[l as usize] && !seen[l as usize] {
            seen[l as usize] = true;
            count += 1;
        }
    }
    Ok(count)
}

/// The crossing-component inequality: under the arm event for a monotone
/// pair, open crossings of sigma plus closed crossings of tau total at least
/// k + 1.
pub fn catalan_check(
    sigma: &SiteConfig,
    tau: &SiteConfig,
    cut: &CutSet,
    arcs: &ArcDecomposition,
    outer: &[u32],
) -> Result<bool> {
    if sigma.open.iter().zip(&tau.open).any(|(&s, &t)| s && !t) {
        return Err(Error::Hypothesis("pair is not monotone".into()));
    }
    if !arm_event(sigma, cut, arcs, outer) || !arm_event(tau, cut, arcs, outer) {
        return Err(Error::Hypothesis("arm event does not hold".into()));
    }
    let open = crossing_components(sigma, &cut.s_n, outer, true)?;
    let closed = crossing_components(tau, &cut.s_n, outer, false)?;
    Ok(open + closed >= arcs.k() + 1)
}

/// One row of a rejection-sampled catalan sweep.
#[derive(Debug, Clone, Serialize)]
pub struct CatalanRow {
    pub seed: u64,
    pub k: usize,
    pub premise_ok: bool,
    pub conclusion_ok: bool,
    pub c_open: usize,
    pub c_closed: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hex::build_hex_patch;
    use crate::percolation::{bernoulli_sites, monotone_coupling, Graph};
    use crate::planar::PlanarGraph;
    use crate::rng::derive_seed;
    use std::sync::Arc;

    /// Hex patch test rig: graph, cut set at the given radius around a
    /// central vertex, and the outer boundary.
    fn rig(r: u32, n: u32) -> (Arc<Graph>, CutSet, Vec<u32>) {
        let patch = build_hex_patch(r);
        let planar = PlanarGraph::from_hex_patch(&patch);
        let root = patch
            .vertex_id(crate::hex::HexVertex::up(0, 0))
            .expect("central vertex");
        let cut = planar.cut_set(root, n).unwrap();
        let outer = planar.outer_vertices();
        (Arc::new(Graph::from_hex_patch(&patch)), cut, outer)
    }

    #[test]
    fn reach_and_pij_extremes() {
        let (g, cut, outer) = rig(3, 2);
        let all_open = SiteConfig::constant(g.clone(), true);
        let reach = cut_reach(&all_open, &cut, &outer, true);
        assert!(reach.iter().all(|&b| b), "all-open reaches everywhere");
        let table = estimate_pij(|_| all_open.clone(), &cut, &outer, 50);
        for i in 1..=cut.s_n.len() {
            assert_eq!(table.p_hat(0, i).p_hat, 0.0);
        }
        let all_closed = SiteConfig::constant(g.clone(), false);
        let table = estimate_pij(|_| all_closed.clone(), &cut, &outer, 50);
        assert_eq!(table.p_hat(0, cut.s_n.len()).p_hat, 1.0);
    }

    #[test]
    fn single_closed_vertex_blocks_its_own_arm() {
        // Non-connection of a singleton arc is at least the probability that
        // the vertex itself is closed.
        let (g, cut, outer) = rig(3, 2);
        let n = 4000;
        let table = estimate_pij(
            |s| bernoulli_sites(&g, 0.5, derive_seed(99, s)).unwrap(),
            &cut,
            &outer,
            n,
        );
        let single = table.p_hat(0, 1);
        assert!(
            single.p_hat >= 0.5 - single.half_width,
            "p_hat {} too small",
            single.p_hat
        );
    }

    #[test]
    fn arc_split_examples() {
        assert_eq!(arc_split(&[0.9, 0.5, 0.05], 0.02).unwrap(), 3);
        assert_eq!(arc_split(&[0.01], 0.02).unwrap(), 1);
        assert!(matches!(
            arc_split(&[0.9, 0.9], 0.02),
            Err(Error::OneArmTooWeak(_))
        ));
        assert!(arc_split(&[0.1, 0.5], 0.9).is_err());
    }

    #[test]
    fn iterated_split_extremes() {
        let (g, cut, outer) = rig(3, 2);
        let all_open = SiteConfig::constant(g.clone(), true);
        let table = estimate_pij(|_| all_open.clone(), &cut, &outer, 50);
        let k = 2;
        let dec = iterated_split(&table, 0.1, k).unwrap();
        assert_eq!(dec.arc_count(), 2 * k);
        // Every singleton passes, so the first 2k-1 arcs are singletons.
        assert_eq!(&dec.splits[..2 * k - 1], &[1, 2, 3]);
        assert_eq!(*dec.splits.last().unwrap(), cut.s_n.len());
        let all_closed = SiteConfig::constant(g.clone(), false);
        let table = estimate_pij(|_| all_closed.clone(), &cut, &outer, 50);
        assert!(iterated_split(&table, 0.1, k).is_err());
    }

    #[test]
    fn iterated_split_respects_its_threshold() {
        let (g, cut, outer) = rig(4, 2);
        let table = estimate_pij(
            |s| bernoulli_sites(&g, 0.65, derive_seed(7, s)).unwrap(),
            &cut,
            &outer,
            2000,
        );
        if let Ok(dec) = iterated_split(&table, 0.4, 1) {
            let threshold = 0.4 / 4.0;
            for (range, &est) in dec.arcs().iter().zip(&dec.arc_estimates) {
                let re = table.p_hat(range.start, range.end);
                assert!(re.p_hat <= threshold + 1e-12);
                assert_eq!(re.p_hat, est);
            }
        }
    }

    #[test]
    fn arm_event_is_complement_invariant() {
        let (g, cut, outer) = rig(3, 2);
        let arcs = ArcDecomposition::equal_split(cut.s_n.len(), 1).unwrap();
        for s in 0..200 {
            let cfg = bernoulli_sites(&g, 0.5, derive_seed(31, s)).unwrap();
            assert_eq!(
                arm_event(&cfg, &cut, &arcs, &outer),
                arm_event(&cfg.complement(), &cut, &arcs, &outer)
            );
        }
    }

    #[test]
    fn all_open_has_no_closed_arms() {
        let (g, cut, outer) = rig(3, 2);
        let arcs = ArcDecomposition::equal_split(cut.s_n.len(), 1).unwrap();
        let all_open = SiteConfig::constant(g.clone(), true);
        assert!(!arm_event(&all_open, &cut, &arcs, &outer));
    }

    #[test]
    fn crossing_component_examples() {
        let (g, cut, outer) = rig(3, 2);
        let all_open = SiteConfig::constant(g.clone(), true);
        assert_eq!(
            crossing_components(&all_open, &cut.s_n, &outer, true).unwrap(),
            1
        );
        assert_eq!(
            crossing_components(&all_open, &cut.s_n, &outer, false).unwrap(),
            0
        );
        let overlapping = vec![outer[0]];
        assert!(crossing_components(&all_open, &overlapping, &outer, true).is_err());
    }

    #[test]
    fn closing_one_vertex_moves_the_count_by_at_most_degree_minus_one() {
        let (g, cut, outer) = rig(3, 2);
        let mut checked = 0;
        for s in 0..300u64 {
            let cfg = bernoulli_sites(&g, 0.55, derive_seed(13, s)).unwrap();
            let before = crossing_components(&cfg, &cut.s_n, &outer, true).unwrap() as i64;
            for v in (0..g.n).step_by(17) {
                if !cfg.open[v] {
                    continue;
                }
                let mut closed = cfg.clone();
                closed.open[v] = false;
                let after =
                    crossing_components(&closed, &cut.s_n, &outer, true).unwrap() as i64;
                let deg = g.adj[v].len() as i64;
                assert!(
                    (after - before).abs() <= deg - 1,
                    "closing vertex {v} moved the count from {before} to {after}"
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn catalan_needs_its_hypotheses() {
        let (g, cut, outer) = rig(3, 2);
        let arcs = ArcDecomposition::equal_split(cut.s_n.len(), 1).unwrap();
        let all_open = SiteConfig::constant(g.clone(), true);
        let all_closed = SiteConfig::constant(g.clone(), false);
        // Not monotone: sigma has an open vertex where tau is closed.
        assert!(matches!(
            catalan_check(&all_open, &all_closed, &cut, &arcs, &outer),
            Err(Error::Hypothesis(_))
        ));
        // Monotone but no arm event.
        assert!(matches!(
            catalan_check(&all_closed, &all_open, &cut, &arcs, &outer),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn catalan_holds_on_rejection_sampled_pairs() {
        let (g, cut, outer) = rig(3, 2);
        let k = 1;
        let arcs = ArcDecomposition::equal_split(cut.s_n.len(), k).unwrap();
        let mut accepted = 0;
        let mut seed = 0u64;
        while accepted < 300 && seed < 200_000 {
            let (sigma, tau) = monotone_coupling(&g, 0.5, derive_seed(777, seed)).unwrap();
            seed += 1;
            if !arm_event(&sigma, &cut, &arcs, &outer) || !arm_event(&tau, &cut, &arcs, &outer)
            {
                continue;
            }
            accepted += 1;
            assert!(catalan_check(&sigma, &tau, &cut, &arcs, &outer).unwrap());
        }
        assert!(accepted >= 300, "arm event too rare: {accepted} accepted");
    }
}
