//! Randomized invariant tests over generated instances.

use num_rational::BigRational;
use proptest::collection::vec;
use proptest::prelude::*;

use hk::config::{neighbors, read_instance, write_instance, Configuration, Point};
use hk::jsonl;
use hk::one_dim::sorted_order;
use hk::scalar::Scalar;
use hk::sim::{simulate, step, SimParams};

fn float_config(n: usize, d: usize, coords: Vec<f64>) -> Configuration<f64> {
    let positions = coords
        .chunks_exact(d)
        .take(n.max(1))
        .map(|c| Point::new(c.to_vec()))
        .collect();
    Configuration::new(positions, 0).expect("uniform dimension")
}

fn exact_line(numers: &[i32]) -> Configuration<BigRational> {
    let xs = numers
        .iter()
        .map(|&k| BigRational::from_ratio(k as i64, 8))
        .collect();
    Configuration::from_1d(xs, 0).expect("n >= 1")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbor_relation_is_symmetric(
        n in 1usize..=30,
        d in 1usize..=5,
        coords in vec(-4.0f64..4.0, 150),
    ) {
        let config = float_config(n, d, coords);
        let params = SimParams::<f64>::float_defaults(1);
        for i in 0..config.n() {
            for j in neighbors(&config, i, &params).unwrap() {
                let back = neighbors(&config, j, &params).unwrap();
                prop_assert!(back.contains(&i), "{i} sees {j} but not back");
            }
        }
    }

    #[test]
    fn mean_stays_in_neighbor_hull(
        n in 1usize..=20,
        d in 1usize..=3,
        coords in vec(-3.0f64..3.0, 60),
    ) {
        let config = float_config(n, d, coords);
        let params = SimParams::<f64>::float_defaults(1);
        let (next, _) = step(&config, &params);
        for i in 0..config.n() {
            let nbrs = neighbors(&config, i, &params).unwrap();
            for k in 0..d {
                let lo = nbrs.iter().map(|&j| config.positions[j].coords[k]).fold(f64::INFINITY, f64::min);
                let hi = nbrs.iter().map(|&j| config.positions[j].coords[k]).fold(f64::NEG_INFINITY, f64::max);
                let x = next.positions[i].coords[k];
                prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12, "agent {i} coord {k} left hull");
            }
        }
    }

    #[test]
    fn coincident_agents_never_separate(numers in vec(-40i32..40, 2..12)) {
        // duplicate one agent, then watch the pair through the whole run
        let mut with_twin = numers.clone();
        with_twin.push(numers[0]);
        let config = exact_line(&with_twin);
        let n = config.n();
        let params = SimParams::exact(hk::sim::cubic_budget(n));
        let traj = simulate(&config, &params);
        for c in &traj.configs {
            prop_assert_eq!(c.x(0), c.x(n - 1));
        }
    }

    #[test]
    fn order_is_preserved_in_1d(numers in vec(-40i32..40, 1..12)) {
        let config = exact_line(&numers);
        let params = SimParams::exact(hk::sim::cubic_budget(config.n()));
        let traj = simulate(&config, &params);
        let initial_order = sorted_order(traj.initial()).unwrap();
        for c in &traj.configs {
            let mut prev = None;
            for &i in &initial_order {
                if let Some(p) = prev {
                    prop_assert!(c.x(p) <= c.x(i), "order broke at t={}", c.time);
                }
                prev = Some(i);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic(numers in vec(-40i32..40, 1..10)) {
        let config = exact_line(&numers);
        let params = SimParams::exact(hk::sim::cubic_budget(config.n()));
        let a = simulate(&config, &params);
        let b = simulate(&config, &params);
        prop_assert_eq!(a.configs, b.configs);
        prop_assert_eq!(a.converged_at, b.converged_at);
    }

    #[test]
    fn instance_file_round_trips_exactly(numers in vec(-400i32..400, 1..10)) {
        let config = exact_line(&numers);
        let mut buf = Vec::new();
        write_instance(&config, &mut buf).unwrap();
        let back: Configuration<BigRational> = read_instance(buf.as_slice()).unwrap();
        prop_assert_eq!(back.positions, config.positions);
    }

    #[test]
    fn trajectory_jsonl_round_trips_exactly(numers in vec(-40i32..40, 1..8)) {
        let config = exact_line(&numers);
        let params = SimParams::exact(hk::sim::cubic_budget(config.n()));
        let traj = simulate(&config, &params);
        let mut buf = Vec::new();
        jsonl::write_trajectory(&traj, &mut buf).unwrap();
        let back = jsonl::read_trajectory::<BigRational, _>(buf.as_slice()).unwrap();
        prop_assert_eq!(back.configs, traj.configs);
        prop_assert_eq!(back.converged_at, traj.converged_at);
    }
}
