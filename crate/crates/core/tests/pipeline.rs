use basso_core::engine::{run, run_replication};
use basso_core::harness::run_replications;
use basso_core::objectives::{BenchmarkKind, BenchmarkSpec};
use basso_core::{BassoConfig, SamplerKind, StrategyKind};

#[test]
fn every_variation_spends_its_budget() {
    let problem = BenchmarkSpec::new(BenchmarkKind::Ackley, 2).unwrap().problem();
    for strategy in StrategyKind::ALL {
        for sampler in [SamplerKind::A, SamplerKind::B, SamplerKind::C] {
            let config = BassoConfig::new(strategy, sampler, 60).with_seed(3);
            let trace = run(&problem, &config).unwrap();
            assert_eq!(trace.len(), 60, "{strategy}{sampler}");
            assert!(trace.is_well_formed());
            assert!(trace.records.iter().all(|r| problem.domain.contains(&r.point)));
        }
    }
}

#[test]
fn benchmarks_run_in_higher_dimension() {
    for kind in BenchmarkKind::ALL {
        let problem = BenchmarkSpec::new(kind, 6).unwrap().problem();
        let config = BassoConfig::new(StrategyKind::A, SamplerKind::C, 80).with_seed(11);
        let trace = run(&problem, &config).unwrap();
        assert_eq!(trace.len(), 80);
        assert!(trace.final_incumbent().unwrap() <= trace.first_value().unwrap());
    }
}

#[test]
fn replications_are_reproducible_and_distinct() {
    let problem = BenchmarkSpec::new(BenchmarkKind::Rosenbrock, 2).unwrap().problem();
    let config = BassoConfig::new(StrategyKind::D, SamplerKind::A, 40).with_seed(5);
    let a = run_replications(&problem, &config, 3).unwrap();
    let b = run_replications(&problem, &config, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].records[0].point, a[1].records[0].point);
    assert_eq!(run_replication(&problem, &config, 2).unwrap().0, a[2]);
}

#[test]
fn audit_rows_are_well_formed() {
    let problem = BenchmarkSpec::new(BenchmarkKind::ShiftedSinusoidal, 2).unwrap().problem();
    let mut config = BassoConfig::new(StrategyKind::C, SamplerKind::A, 120).with_seed(2);
    config.instrumentation.assumption1_audit = true;
    config.instrumentation.mc_points = 2000;
    let (_, rows) = run_replication(&problem, &config, 0).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r.y <= r.z);
        if !r.indeterminate {
            assert_eq!(r.violated, r.lhs < r.rhs);
        }
    }
}
