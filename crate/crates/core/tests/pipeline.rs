use std::path::Path;

use csl_fisher::dynamics::initial_state;
use csl_fisher::estimation::{classical_fisher, quantum_fisher};
use csl_fisher::gaussian::{extract_mode, ModeIndex};
use csl_fisher::scenario::{effective_params, run, ScenarioConfig, Strategy};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn example(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../examples")
        .join(name);
    ScenarioConfig::from_path(&path).unwrap()
}

#[test]
fn examples_round_trip_through_serialization() {
    for name in ["fig2.cfg", "fig3.cfg"] {
        let cfg = example(name);
        let back = ScenarioConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn single_point_at_zero_uses_the_initial_cavity_block() {
    let mut cfg = example("fig2.cfg");
    cfg.grid = csl_fisher::scenario::Grid::Transient {
        start: 0.0,
        stop: 0.0,
        steps: 1,
    };
    let table = run(&cfg, Strategy::Classical).unwrap();
    assert_eq!(table.rows.len(), 1);
    let cell = table.rows[0].classical.unwrap();

    let init = initial_state(&effective_params(&cfg).unwrap()).unwrap();
    let s = extract_mode(&init.sigma, ModeIndex::CAVITY1).unwrap();
    let sp = DMatrix::from_fn(2, 2, |i, j| init.sensitivity[(2 + i, 2 + j)]);
    let cfi = classical_fisher(&s, &sp, &cfg.measurement.local()).unwrap();
    let qfi = quantum_fisher(&s, &sp).unwrap();
    assert_eq!(cell.cfi, cfi);
    assert_eq!(cell.qfi, Some(qfi));
    assert!(cfi > 0.0);
}

#[test]
fn quantum_strategy_at_zero_sees_the_same_initial_state() {
    let mut cfg = example("fig2.cfg");
    cfg.grid = csl_fisher::scenario::Grid::Transient {
        start: 0.0,
        stop: 0.0,
        steps: 1,
    };
    cfg.noise.r = 0.0;
    cfg.noise.n1 = 0.0;
    cfg.noise.n2 = 0.0;
    let a = run(&cfg, Strategy::Both).unwrap();
    cfg.noise.r = 1.5;
    cfg.noise.n1 = 4.0;
    let b = run(&cfg, Strategy::Both).unwrap();
    assert_eq!(a.rows[0].classical, b.rows[0].classical);
    assert_eq!(a.rows[0].quantum, b.rows[0].quantum);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_fisher_is_ordered_for_any_squeezing(r in 0.0f64..2.5, theta in 0.0f64..3.2, l in 0.05f64..20.0) {
        let mut cfg = example("fig3.cfg");
        cfg.sweep = None;
        cfg.noise.r = r;
        cfg.measurement.theta = theta;
        cfg.measurement.l = l;
        let table = run(&cfg, Strategy::Both).unwrap();
        prop_assert_eq!(table.rows.len(), 1);
        prop_assert_eq!(table.rows[0].ordering_violations().count(), 0);
    }
}
