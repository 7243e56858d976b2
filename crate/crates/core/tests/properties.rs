use basso_core::analysis::pi_from_moments;
use basso_core::harness::{performance_profile, performance_profile_with, LowerBound, ProfileInput};
use basso_core::math;
use basso_core::quadreg::{fit_quadreg, minimize_quad_in_box, penalized_loss, pi_quadreg};
use basso_core::strategies::{
    strategy_a_observed_best, strategy_b_sample_variance, strategy_c_gp_range, strategy_d_confidence_bounds,
};
use basso_core::{BoxDomain, PartitionState, RngStream, RunTrace, Subregion};
use proptest::prelude::*;

/// Subregions tiling `[0, m]` along one axis, each holding its own values.
fn subregions(values: &[Vec<f64>]) -> Vec<Subregion> {
    values
        .iter()
        .enumerate()
        .map(|(i, vs)| {
            let lo = i as f64;
            let mut s = Subregion::new(i, BoxDomain::new(vec![lo], vec![lo + 1.0]).unwrap(), 1);
            for (j, v) in vs.iter().enumerate() {
                s.push(vec![lo + (j as f64 + 0.5) / vs.len() as f64], *v);
            }
            s
        })
        .collect()
}

fn sorted_all(subs: &[Subregion]) -> Vec<f64> {
    math::sorted_copy(&subs.iter().flat_map(|s| s.values()).collect::<Vec<_>>())
}

fn incumbent(subs: &[Subregion]) -> (usize, f64) {
    subs.iter()
        .enumerate()
        .map(|(i, s)| (i, s.best_value))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
}

fn archive() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2..6), 2..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_strategy_is_a_distribution(values in archive(), iteration in 1usize..5) {
        let subs = subregions(&values);
        let (inc_i, inc) = incumbent(&subs);
        let sorted = sorted_all(&subs);
        let all = [
            strategy_a_observed_best(&subs, inc).unwrap(),
            strategy_b_sample_variance(&subs, iteration).unwrap(),
            strategy_c_gp_range(&subs, &sorted).unwrap(),
            strategy_d_confidence_bounds(&subs, inc, inc_i).unwrap(),
        ];
        for p in &all {
            prop_assert_eq!(p.len(), subs.len());
            prop_assert!(p.is_proper(), "{:?}", p);
        }
    }

    #[test]
    fn strategies_follow_a_relabelling(values in archive()) {
        let subs = subregions(&values);
        let mut reversed = values.clone();
        reversed.reverse();
        let rev = subregions(&reversed);
        let (_, inc) = incumbent(&subs);
        let sorted = sorted_all(&subs);
        let pairs = [
            (strategy_a_observed_best(&subs, inc).unwrap(), strategy_a_observed_best(&rev, inc).unwrap()),
            (strategy_b_sample_variance(&subs, 2).unwrap(), strategy_b_sample_variance(&rev, 2).unwrap()),
            (strategy_c_gp_range(&subs, &sorted).unwrap(), strategy_c_gp_range(&rev, &sorted).unwrap()),
        ];
        for (p, q) in &pairs {
            let m = p.len();
            for i in 0..m {
                prop_assert!((p.probs[i] - q.probs[m - 1 - i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn observed_best_prefers_lower_bests(values in archive()) {
        let subs = subregions(&values);
        let (_, inc) = incumbent(&subs);
        let p = strategy_a_observed_best(&subs, inc).unwrap();
        for i in 0..subs.len() {
            for j in 0..subs.len() {
                if subs[i].best_value < subs[j].best_value {
                    prop_assert!(p.probs[i] >= p.probs[j] - 1e-12);
                }
            }
        }
    }

    #[test]
    fn confidence_bounds_keep_the_incumbent(values in archive()) {
        let subs = subregions(&values);
        let (inc_i, inc) = incumbent(&subs);
        let p = strategy_d_confidence_bounds(&subs, inc, inc_i).unwrap();
        prop_assert!(p.probs[inc_i] > 0.0);
    }

    #[test]
    fn normal_pi_is_monotone(mean in -10.0f64..10.0, sd in 0.0f64..5.0, a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p, q) = (pi_from_moments(mean, sd, lo), pi_from_moments(mean, sd, hi));
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
        prop_assert!(p <= q + 1e-15);
    }

    #[test]
    fn empirical_cdf_is_monotone(values in prop::collection::vec(-100.0f64..100.0, 1..40), a in -120.0f64..120.0, b in -120.0f64..120.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p, q) = (math::empirical_cdf(&values, lo), math::empirical_cdf(&values, hi));
        prop_assert!(p <= q);
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn traces_stay_well_formed(values in prop::collection::vec(-1e3f64..1e3, 1..80)) {
        let mut t = RunTrace::new();
        for (i, v) in values.iter().enumerate() {
            t.push(vec![*v], *v, i % 3);
        }
        prop_assert!(t.is_well_formed());
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(t.final_incumbent(), Some(min));
    }

    #[test]
    fn branching_keeps_a_partition(seed in any::<u64>(), dim in 1usize..4, splits in 1usize..12) {
        let mut rng = RngStream::new(seed, 0);
        let mut state = PartitionState::new(BoxDomain::cube(dim, -1.0, 2.0).unwrap());
        for _ in 0..20 {
            let x = state.domain.uniform_point(&mut rng);
            let v = x.iter().map(|c| c * c).sum();
            state.record(0, x, v);
        }
        for _ in 0..splits {
            let i = rng.index(state.len());
            state.branch(i);
        }
        prop_assert!(state.validate(500, &mut rng).is_ok());
        let count: usize = state.subregions.iter().map(|s| s.len()).sum();
        prop_assert_eq!(count, 20);
    }

    #[test]
    fn quadreg_loss_grows_with_lambda(
        pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -5.0f64..5.0), 6..20),
        l1 in 0.0f64..2.0,
        l2 in 0.0f64..2.0,
    ) {
        let samples: Vec<_> = pts
            .iter()
            .map(|&(a, b, y)| basso_core::domain::Sample { point: vec![a, b], value: y })
            .collect();
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let (m_lo, m_hi) = (fit_quadreg(&samples, lo).unwrap(), fit_quadreg(&samples, hi).unwrap());
        let loss_lo = penalized_loss(&samples, m_lo.beta(), lo);
        let loss_hi = penalized_loss(&samples, m_hi.beta(), hi);
        prop_assert!(loss_lo <= loss_hi + 1e-6 * (1.0 + loss_hi));
    }

    #[test]
    fn quadreg_minimizer_and_pi_behave(
        pts in prop::collection::vec((-2.0f64..2.0, -5.0f64..5.0), 5..15),
        seed in any::<u64>(),
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let samples: Vec<_> = pts
            .iter()
            .map(|&(x, y)| basso_core::domain::Sample { point: vec![x], value: y })
            .collect();
        let model = fit_quadreg(&samples, 0.1).unwrap();
        let domain = BoxDomain::new(vec![-2.0], vec![2.0]).unwrap();
        let x = minimize_quad_in_box(&model, &domain, &mut RngStream::new(seed, 1)).unwrap();
        prop_assert!(domain.contains(&x));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p = pi_quadreg(&model, &x, lo).unwrap();
        let q = pi_quadreg(&model, &x, hi).unwrap();
        prop_assert!(p <= q + 1e-12);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn profiles_are_bounded_and_monotone(
        curves in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 5..30), 6),
        tau in 0.0f64..1.0,
    ) {
        let mut inputs = Vec::new();
        for (i, c) in curves.iter().enumerate() {
            let start = c[0];
            let mut running = c.clone();
            for k in 1..running.len() {
                running[k] = running[k].min(running[k - 1]);
            }
            let problem = format!("p{}", i / 2);
            let solver = if i % 2 == 0 { "s0" } else { "s1" };
            inputs.push(ProfileInput::from_curves(problem, solver, &[start], &[running]).unwrap());
        }
        let grid: Vec<usize> = (1..=30).collect();
        let within = performance_profile(&inputs, tau, &grid).unwrap();
        prop_assert!(within.iter().all(|r| (0.0..=1.0).contains(&r.d)));
        let rows = performance_profile_with(&inputs, tau, &grid, LowerBound::WholeRun).unwrap();
        for solver in ["s0", "s1"] {
            let ds: Vec<f64> = rows.iter().filter(|r| r.solver == solver).map(|r| r.d).collect();
            prop_assert_eq!(ds.len(), grid.len());
            prop_assert!(ds.iter().all(|d| (0.0..=1.0).contains(d)));
            prop_assert!(ds.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
