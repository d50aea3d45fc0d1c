mod common;

use proptest::prelude::*;
use tinopt::gap::{gap_certificate, rate_outer_bounds, tin_rates, FiniteSnrChannel};
use tinopt::*;

fn channel(max_k: usize) -> impl Strategy<Value = ChannelMatrix> {
    (1..=max_k).prop_flat_map(|k| {
        prop::collection::vec(prop::collection::vec(0.0..1.0f64, k), k)
            .prop_map(|rows| ChannelMatrix::new(rows).unwrap())
    })
}

fn condition_channel(max_k: usize) -> impl Strategy<Value = ChannelMatrix> {
    (2..=max_k, any::<u64>()).prop_map(|(k, seed)| {
        let mut rng = common::rng(seed);
        common::random_condition_channel(&mut rng, k)
    })
}

fn with_power(max_k: usize) -> impl Strategy<Value = (ChannelMatrix, Vec<f64>)> {
    channel(max_k).prop_flat_map(|ch| {
        let k = ch.users();
        (Just(ch), prop::collection::vec(-2.0..=0.0f64, k))
    })
}

fn with_unit_point(max_k: usize) -> impl Strategy<Value = (ChannelMatrix, Vec<f64>)> {
    channel(max_k).prop_flat_map(|ch| {
        let k = ch.users();
        (Just(ch), prop::collection::vec(0.0..=1.0f64, k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tin_dominates_relaxation_and_is_nonnegative((ch, r) in with_power(5)) {
        let r = PowerExponents::from_levels(&r).unwrap();
        let g = tin_gdof(&ch, &r).unwrap();
        let relaxed = polyhedral_tin_gdof(&ch, &r).unwrap();
        for (a, b) in g.as_slice().iter().zip(&relaxed) {
            prop_assert!(*a >= 0.0);
            prop_assert!(*a >= *b);
            prop_assert_eq!(*a, b.max(0.0));
        }
    }

    #[test]
    fn condition_is_transpose_invariant(ch in channel(6)) {
        prop_assert_eq!(check_tin_condition(&ch).holds, check_tin_condition(&ch.transpose()).holds);
    }

    #[test]
    fn condition_is_scale_invariant(ch in channel(6), c in 0.1..10.0f64) {
        let scaled = ch.scaled(c).unwrap();
        let a = check_tin_condition(&ch);
        let b = check_tin_condition(&scaled);
        // margins scale exactly, so only near-ties can flip
        let near_tie = a.users.iter().any(|u| u.margin.abs() < 1e-8);
        prop_assume!(!near_tie);
        prop_assert_eq!(a.holds, b.holds);
        let p = polyhedral_region(&ch, &[]).unwrap();
        let q = polyhedral_region(&scaled, &[]).unwrap();
        for (x, y) in p.cycles().iter().zip(q.cycles()) {
            prop_assert!((x.rhs * c - y.rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn link_budget_round_trip(ch in channel(4), log_p in 1.0..30.0f64) {
        let p = 10f64.powf(log_p);
        let k = ch.users();
        let snr: Vec<f64> = (0..k).map(|i| p.powf(ch.direct(i))).collect();
        let inr: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| p.powf(ch.get(i, j))).collect()).collect();
        let back = ChannelMatrix::from_link_budget(&snr, &inr, p).unwrap();
        for i in 0..k {
            for j in 0..k {
                prop_assert!((back.get(i, j) - ch.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn membership_matches_inequalities((ch, u) in with_unit_point(5)) {
        let a = common::rows(&ch);
        let d: Vec<f64> = u.iter().enumerate().map(|(i, x)| x * a[i][i]).collect();
        let margin = common::min_margin(&a, &[], &d);
        prop_assume!(margin.abs() > 1e-9);
        let cert = recover_power_allocation(&ch, &GdofTuple::new(d.clone()).unwrap()).unwrap();
        prop_assert_eq!(cert.is_feasible(), margin > 0.0);
        match &cert {
            MembershipCertificate::Feasible { r } => {
                let g = polyhedral_tin_gdof(&ch, r).unwrap();
                for (g, d) in g.iter().zip(&d) {
                    prop_assert!(*g >= d - 1e-9);
                }
            }
            MembershipCertificate::Infeasible { bound, cycle, .. } => {
                prop_assert!(bound.margin() < 0.0);
                let lhs: f64 = bound.users.iter().map(|&i| d[i]).sum();
                prop_assert!((lhs - bound.lhs).abs() < 1e-12);
                prop_assert!(!cycle.is_empty());
            }
        }
    }

    #[test]
    fn zero_set_reduction_matches_union((ch, u) in with_unit_point(4), zeros in prop::collection::vec(any::<bool>(), 4)) {
        let a = common::rows(&ch);
        let d: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(i, x)| if zeros[i] { 0.0 } else { x * a[i][i] })
            .collect();
        let k = a.len();
        let near = (0u32..1 << k).any(|mask| {
            let silent: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            silent.iter().all(|&s| d[s] == 0.0) && common::min_margin(&a, &silent, &d).abs() < 1e-9
        });
        prop_assume!(!near);
        let m = point_in_tin_region(&ch, &GdofTuple::new(d.clone()).unwrap()).unwrap();
        prop_assert_eq!(m.is_member(), common::in_union(&a, &d, 0.0));
        if let Some(r) = m.certificate.power() {
            let g = tin_gdof(&ch, r).unwrap();
            for (g, d) in g.as_slice().iter().zip(&d) {
                prop_assert!(*g >= d - 1e-9);
            }
        }
    }

    #[test]
    fn minimized_region_is_the_same_set((ch, u) in with_unit_point(4)) {
        let p = polyhedral_region(&ch, &[]).unwrap();
        let q = p.minimized();
        let d: Vec<f64> = u.iter().map(|x| 1.2 * x).collect();
        prop_assume!(p.min_margin(&d).abs() > 1e-9);
        prop_assert_eq!(p.contains(&d, 0.0), q.contains(&d, 0.0));
    }

    #[test]
    fn weighted_optimum_beats_vertices(ch in channel(3), w in prop::collection::vec(0.0..1.0f64, 3)) {
        let p = polyhedral_region(&ch, &[]).unwrap();
        prop_assume!(!p.is_empty());
        let w = &w[..ch.users()];
        let opt = region::max_weighted_gdof(&p, w).unwrap();
        prop_assert!(opt.certified);
        prop_assert!(p.contains(&opt.point, 1e-9));
        let best = p
            .vertices()
            .unwrap()
            .iter()
            .map(|v| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((best - opt.value).abs() < 1e-9);
        let at_point: f64 = opt.point.iter().zip(w).map(|(a, b)| a * b).sum();
        prop_assert!((at_point - opt.value).abs() < 1e-9);
    }

    #[test]
    fn vertices_lie_in_region(ch in channel(4)) {
        let p = polyhedral_region(&ch, &[]).unwrap();
        for v in p.vertices().unwrap() {
            prop_assert!(p.contains(&v, 1e-9));
        }
    }

    #[test]
    fn finite_snr_sandwich(ch in condition_channel(4), u in prop::collection::vec(0.05..1.0f64, 4), log_p in 1.0..8.0f64) {
        let a = common::rows(&ch);
        let d = common::boundary_point(&a, &u[..a.len()]);
        let fc = FiniteSnrChannel::new(ch.clone(), 10f64.powf(log_p)).unwrap();
        for b in rate_outer_bounds(&fc).unwrap().bounds {
            prop_assert!(b.exact <= b.linearized + 1e-9);
        }
        let rep = gap_certificate(&fc, &GdofTuple::new(d).unwrap()).unwrap();
        prop_assert!(rep.holds(1e-6));
        for m in rep.inner_margins() {
            prop_assert!(m >= -1e-6);
        }
    }

    #[test]
    fn kappa_limit_collapses_under_condition(ch in condition_channel(4)) {
        let k = ch.users();
        let users: Vec<usize> = (0..k).collect();
        for seq in enumerate_cycles(&users) {
            let s = seq.users();
            let m = s.len();
            for j in 0..m {
                let (prev, cur, next) = (s[(j + m - 1) % m], s[j], s[(j + 1) % m]);
                let own = ch.direct(cur) - ch.get(prev, cur);
                let collapsed = own.max(ch.get(cur, next)).max(0.0);
                prop_assert!((collapsed - own).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn tin_rates_bracket_gdof() {
    let mut rng = common::rng(11);
    for trial in 0..50 {
        let k = 2 + trial % 3;
        let ch = common::random_channel(&mut rng, k);
        let r: Vec<f64> = (0..k).map(|i| -0.1 * i as f64).collect();
        let r = PowerExponents::from_levels(&r).unwrap();
        let g = tin_gdof(&ch, &r).unwrap();
        for p in [1e2, 1e4, 1e8] {
            let fc = FiniteSnrChannel::new(ch.clone(), p).unwrap();
            let rates = tin_rates(&fc, &r).unwrap();
            for (rate, g) in rates.iter().zip(g.as_slice()) {
                let excess = rate - g * p.log2();
                assert!(excess <= 1.0 + 1e-9, "trial {trial}: {excess}");
                assert!(excess >= -(k as f64).log2() - 1e-9, "trial {trial}: {excess}");
            }
        }
    }
}
