//! Property tests for the structural invariants.

use std::sync::Arc;

use proptest::prelude::*;

use hexloop_core::coupling::{default_anchor, dw, dw_inverse};
use hexloop_core::hex::{build_hex_patch, surrounds_dir, Domain, FaceCoord, HexPatch};
use hexloop_core::loopmodel::{decompose, face_flip, flip_log_ratio, LoopConfig};
use hexloop_core::percolation::{monotone_coupling, Graph};

fn config_from_mask(patch: &Arc<HexPatch>, mask: u64) -> LoopConfig {
    let mut edges = patch.empty_edge_set();
    for f in 0..patch.faces.len().min(64) {
        if mask >> f & 1 == 1 {
            edges.xor_assign(patch.hex_mask(f as u32));
        }
    }
    LoopConfig::validate(patch.clone(), edges).expect("hexagon sums are valid")
}

proptest! {
    #[test]
    fn surround_test_agrees_in_all_six_directions(mask in 0u64..(1 << 13), k in -2i32..=2, l in -2i32..=2) {
        let patch = Arc::new(build_hex_patch(2));
        let omega = config_from_mask(&patch, mask);
        let whole = Domain::whole(patch.clone());
        let face = FaceCoord::new(k, l);
        prop_assume!(patch.contains_face(face));
        for comp in decompose(&omega, &whole).loops {
            let edges = comp.edge_set(&patch);
            let reference = surrounds_dir(&patch, &edges, face, 0);
            for dir in 1..6 {
                prop_assert_eq!(surrounds_dir(&patch, &edges, face, dir), reference);
            }
        }
    }

    #[test]
    fn face_flip_is_an_involution_preserving_validity(mask in 0u64..(1 << 13), face in 0u32..13) {
        let patch = Arc::new(build_hex_patch(2));
        let whole = Domain::whole(patch.clone());
        let omega = config_from_mask(&patch, mask);
        let once = face_flip(&omega, &whole, face).unwrap();
        prop_assert!(LoopConfig::validate(patch.clone(), once.edges.clone()).is_ok());
        let twice = face_flip(&once, &whole, face).unwrap();
        prop_assert_eq!(twice.edges, omega.edges);
    }

    #[test]
    fn domain_walls_invert_exactly(mask in 0u64..(1 << 13)) {
        let patch = Arc::new(build_hex_patch(2));
        let omega = config_from_mask(&patch, mask);
        let sigma = dw_inverse(&omega, default_anchor(&patch), 1);
        prop_assert_eq!(dw(&sigma).edges, omega.edges);
    }

    #[test]
    fn local_flip_ratio_matches_global_recount(mask in 0u64..(1 << 13), face in 0u32..13) {
        let patch = Arc::new(build_hex_patch(2));
        let whole = Domain::whole(patch.clone());
        let omega = config_from_mask(&patch, mask);
        let ell_before = decompose(&omega, &whole).ell as f64;
        let e_before = omega.edges.count() as f64;
        let mut edges = omega.edges.clone();
        // log weights with distinguishable bases: ratio = dl*ln(n) + de*ln(x)
        let (log_n, log_x) = (std::f64::consts::LN_2, -0.25);
        let ratio = flip_log_ratio(&patch, &mut edges, face, log_n, log_x);
        let flipped = LoopConfig::validate(patch.clone(), edges).unwrap();
        let ell_after = decompose(&flipped, &whole).ell as f64;
        let e_after = flipped.edges.count() as f64;
        let expect = (ell_after - ell_before) * log_n + (e_after - e_before) * log_x;
        prop_assert!((ratio - expect).abs() < 1e-12, "{} vs {}", ratio, expect);
    }

    #[test]
    fn monotone_coupling_never_violates_order(p in 0.0f64..=0.5, seed in 0u64..1000) {
        let g = Arc::new(Graph::triangular_rhombus(8));
        let (sigma, tau) = monotone_coupling(&g, p, seed).unwrap();
        prop_assert!(sigma.open.iter().zip(&tau.open).all(|(&s, &t)| s <= t));
    }

    #[test]
    fn ell_counts_only_loops_meeting_the_domain(mask in 0u64..(1 << 13)) {
        let patch = Arc::new(build_hex_patch(2));
        let omega = config_from_mask(&patch, mask);
        let b1 = Domain::ball(patch.clone(), 1).unwrap();
        let dec = decompose(&omega, &b1);
        let by_hand = dec
            .loops
            .iter()
            .filter(|c| c.vertices.iter().any(|&v| b1.vertex_mask[v as usize]))
            .count();
        prop_assert_eq!(dec.ell, by_hand);
    }
}
