//! Verification suites: fixed seeded instance distributions on which every
//! per-step certificate and invariant is checked. The CLI `verify`
//! subcommand and the acceptance tests both run these.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::config::Configuration;
use crate::instances;
use crate::noisy::{noisy_leftmove_certificate, sample_etas, simulate_noisy, NoisyParams};
use crate::one_dim::{
    convergence_bound_check, leftmost_active, leftmove_certificate, sorted_order,
};
use crate::scalar::Scalar;
use crate::sim::{simulate, cubic_budget, MonitorId, SimParams, Trajectory};

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: String,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl PropertyResult {
    fn new(name: &str) -> Self {
        PropertyResult {
            name: name.to_string(),
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn pass(&mut self) {
        self.checked += 1;
    }

    fn fail(&mut self, msg: String) {
        self.checked += 1;
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if ok {
            self.pass();
        } else {
            self.fail(msg());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }

    pub fn render(&self) -> String {
        let mut out = format!("suite {}\n", self.suite);
        for p in &self.properties {
            out.push_str(&format!(
                "  {:<28} {:>8} checked  {}\n",
                p.name,
                p.checked,
                if p.passed() { "pass" } else { "FAIL" }
            ));
            for f in &p.failures {
                out.push_str(&format!("    {f}\n"));
            }
        }
        out
    }
}

fn instance_rng(seed: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_exact_line(rng: &mut ChaCha8Rng, n: usize) -> Configuration<BigRational> {
    let span = BigRational::from_int(n as i64);
    let xs = (0..n)
        .map(|_| <BigRational as Scalar>::sample_unit(rng) * span.clone())
        .collect();
    Configuration::from_1d(xs, 0).expect("n >= 1")
}

fn monitor_violations<'a>(traj: &'a Trajectory<BigRational>, name: &str) -> Vec<&'a String> {
    let tag = format!(" {name}:");
    traj.violations.iter().filter(|v| v.contains(&tag)).collect()
}

fn monitor_violations_f64<'a>(traj: &'a Trajectory<f64>, name: &str) -> Vec<&'a String> {
    let tag = format!(" {name}:");
    traj.violations.iter().filter(|v| v.contains(&tag)).collect()
}

/// 200 seeded exact-mode 1D instances (n <= 30, rational positions in
/// [0, n]): invariant monitors, the even-step progress certificate, the
/// cubic step budget, and determinism.
pub fn one_dim_suite(seed: u64, count: usize, corrupt: bool) -> SuiteReport {
    let mut invariants = PropertyResult::new("monitor_invariants");
    let mut budget = PropertyResult::new("cubic_budget");
    let mut certificate = PropertyResult::new("leftmove_certificate");
    let mut rank = PropertyResult::new("leftmost_rank_monotone");
    let mut travel = PropertyResult::new("leftmost_travel_bound");
    let mut dichotomy = PropertyResult::new("movefar_dichotomy");
    let mut determinism = PropertyResult::new("determinism");
    for k in 0..count {
        let mut rng = instance_rng(seed, k as u64);
        let n = rng.gen_range(2..=30);
        let initial = random_exact_line(&mut rng, n);
        let mut monitors = MonitorId::all_invariants();
        monitors.insert(MonitorId::Movefar);
        // the corrupted update never converges, so a short budget keeps the
        // negative control cheap; violations surface within a step or two
        let max_steps = if corrupt { 10 } else { cubic_budget(n) };
        let mut params = SimParams::exact(max_steps).with_monitors(monitors);
        params.corrupt_step = corrupt;
        let traj = simulate(&initial, &params);

        let movefar_bad = monitor_violations(&traj, "movefar");
        dichotomy.check(movefar_bad.is_empty(), || {
            format!("instance {k}: {}", movefar_bad[0])
        });
        let other_bad: Vec<&String> = traj
            .violations
            .iter()
            .filter(|v| !v.contains(" movefar:"))
            .collect();
        invariants.check(other_bad.is_empty(), || {
            format!("instance {k}: {}", other_bad[0])
        });
        budget.check(convergence_bound_check(&traj), || {
            format!(
                "instance {k}: n={n} converged_at={:?} budget={}",
                traj.converged_at,
                cubic_budget(n)
            )
        });

        if let Some(t_conv) = traj.converged_at {
            // certificate at every even non-converged step
            let mut t = traj.initial().time;
            while t < t_conv {
                match leftmove_certificate(&traj, t, &params) {
                    Ok(v) => certificate.check(!v.is_violated(), || {
                        format!("instance {k}: violated at t={t} (ell={})", v.ell)
                    }),
                    Err(e) => certificate.fail(format!("instance {k}: t={t}: {e}")),
                }
                t += 2;
            }

            // rank of the leftmost active agent is non-decreasing, and the
            // total rightward travel telescopes to at most the initial span
            let order0 = sorted_order(traj.initial()).expect("1d");
            let rank_of = |i: usize| order0.iter().position(|&j| j == i).unwrap();
            let mut last_rank = 0usize;
            let mut last_pos: Option<BigRational> = None;
            let mut travel_total = BigRational::from_int(0);
            for t in traj.initial().time..t_conv {
                let c = traj.config_at(t).unwrap();
                if let Some(ell) = leftmost_active(c, &params).unwrap() {
                    let rk = rank_of(ell);
                    rank.check(rk >= last_rank, || {
                        format!("instance {k}: rank fell at t={t}")
                    });
                    last_rank = rk;
                    let pos = c.x(ell).clone();
                    if let Some(prev) = &last_pos {
                        let inc = pos.clone() - prev.clone();
                        travel.check(inc >= BigRational::from_int(0), || {
                            format!("instance {k}: leftmost-active position fell at t={t}")
                        });
                        travel_total += inc;
                    }
                    last_pos = Some(pos);
                }
            }
            let span = traj
                .initial()
                .x(order0[n - 1])
                .clone()
                - traj.initial().x(order0[0]).clone();
            travel.check(travel_total <= span, || {
                format!("instance {k}: travel {travel_total} exceeds span {span}")
            });
        }

        let again = simulate(&initial, &params);
        determinism.check(
            again.configs.len() == traj.configs.len()
                && again
                    .configs
                    .iter()
                    .zip(&traj.configs)
                    .all(|(a, b)| a.positions == b.positions)
                && again.converged_at == traj.converged_at,
            || format!("instance {k}: repeat run diverged"),
        );
    }
    SuiteReport {
        suite: "one_dim".into(),
        properties: vec![
            invariants,
            budget,
            certificate,
            rank,
            travel,
            dichotomy,
            determinism,
        ],
    }
}

/// Noisy variant: seeded exact instances with eta = 1/2, convergence within
/// the cubic budget, zero violated certificates, bounded asymmetry, order
/// swaps recorded but never failing.
pub fn noisy_suite(seed: u64, count: usize) -> SuiteReport {
    let mut budget = PropertyResult::new("budget_convergence");
    let mut certificate = PropertyResult::new("noisy_certificate");
    let mut asymmetry = PropertyResult::new("asymmetry_bounded");
    let mut determinism = PropertyResult::new("determinism");
    let mut swaps = PropertyResult::new("order_swaps_recorded");
    let eta = BigRational::from_ratio(1, 2);
    for k in 0..count {
        let mut rng = instance_rng(seed, 0x4E01_5E00 ^ k as u64);
        let n = rng.gen_range(2..=20);
        let initial = random_exact_line(&mut rng, n);
        let etas = sample_etas(n, &eta, rng.gen());
        let noisy = NoisyParams::new(eta.clone(), etas).expect("valid etas");
        let params = SimParams::exact(cubic_budget(n))
            .with_monitors([MonitorId::OrderSwaps].into());
        let traj = simulate_noisy(&initial, &params, &noisy).expect("valid run");

        budget.check(
            matches!(traj.converged_at, Some(t) if t <= cubic_budget(n)),
            || format!("instance {k}: converged_at={:?}", traj.converged_at),
        );
        swaps.check(traj.violations.is_empty(), || {
            format!("instance {k}: {}", traj.violations[0])
        });

        if let Some(t_conv) = traj.converged_at {
            let mut t = traj.initial().time;
            while t < t_conv {
                match noisy_leftmove_certificate(&traj, t, &params, &noisy) {
                    Ok(v) => certificate.check(!v.is_violated(), || {
                        format!("instance {k}: violated at t={t} (ell={})", v.ell)
                    }),
                    Err(e) => certificate.fail(format!("instance {k}: t={t}: {e}")),
                }
                t += 2;
            }

            // one-sided non-neighbors sit in [-1, -1+eta_i)
            for t in traj.initial().time..=t_conv {
                let c = traj.config_at(t).unwrap();
                let nbrs: Vec<Vec<usize>> = (0..n)
                    .map(|i| crate::noisy::noisy_neighbors(c, i, &noisy).unwrap())
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        if !nbrs[i].contains(&j) && nbrs[j].contains(&i) {
                            let diff = c.x(j).clone() - c.x(i).clone();
                            let lo = BigRational::from_int(-1);
                            let hi = noisy.etas[i].clone() - BigRational::from_int(1);
                            asymmetry.check(diff >= lo && diff < hi, || {
                                format!("instance {k}: t={t} pair ({i},{j}) diff {diff}")
                            });
                        }
                    }
                }
            }
        }

        let again = simulate_noisy(&initial, &params, &noisy).expect("valid run");
        determinism.check(
            again.configs.len() == traj.configs.len()
                && again
                    .configs
                    .iter()
                    .zip(&traj.configs)
                    .all(|(a, b)| a.positions == b.positions),
            || format!("instance {k}: repeat run diverged"),
        );
    }
    SuiteReport {
        suite: "noisy".into(),
        properties: vec![budget, certificate, asymmetry, swaps, determinism],
    }
}

/// Random float instances (n <= 20, d <= 3) plus exact 1D instances:
/// potential decrease with its quantified slack, the movefar dichotomy with
/// the calibrated constant, merge-step counting, and the invariant monitors.
pub fn potential_suite(seed: u64, float_count: usize, exact_count: usize) -> SuiteReport {
    let mut slack_float = PropertyResult::new("potential_slack_float");
    let mut slack_exact = PropertyResult::new("potential_slack_exact");
    let mut dichotomy = PropertyResult::new("movefar_dichotomy");
    let mut invariants = PropertyResult::new("monitor_invariants");
    let mut converged = PropertyResult::new("converged_in_budget");
    let mut determinism = PropertyResult::new("determinism");

    let monitors_float = |d: usize| {
        let mut m: std::collections::BTreeSet<MonitorId> = [
            MonitorId::Potential,
            MonitorId::Movefar,
            MonitorId::NeighborSymmetry,
            MonitorId::WeightMonotonicity,
            MonitorId::MeanContainment,
        ]
        .into();
        if d == 1 {
            m.insert(MonitorId::OrderPreservation);
            m.insert(MonitorId::GapPersistence);
        }
        m
    };

    for k in 0..float_count {
        let mut rng = instance_rng(seed, 0xF10A_7000 ^ k as u64);
        let n: usize = rng.gen_range(2..=20);
        let d: usize = rng.gen_range(1..=3);
        let side = 0.5 + rng.gen::<f64>() * ((n as f64).min(8.0) - 0.5);
        let initial = instances::random_box::<f64>(n, d, &side, rng.gen());
        let params = SimParams::float_defaults(20_000).with_monitors(monitors_float(d));
        let traj = simulate(&initial, &params);

        let bad_pot = monitor_violations_f64(&traj, "potential");
        slack_float.check(bad_pot.is_empty(), || {
            format!("float instance {k}: {}", bad_pot[0])
        });
        let bad_mf = monitor_violations_f64(&traj, "movefar");
        dichotomy.check(bad_mf.is_empty(), || {
            format!("float instance {k}: {}", bad_mf[0])
        });
        let other: Vec<&String> = traj
            .violations
            .iter()
            .filter(|v| !v.contains(" movefar:") && !v.contains(" potential:"))
            .collect();
        invariants.check(other.is_empty(), || {
            format!("float instance {k}: {}", other[0])
        });
        converged.check(traj.converged_at.is_some(), || {
            format!("float instance {k}: budget exhausted after {} steps", traj.steps.len())
        });
        if k % 10 == 0 {
            let again = simulate(&initial, &params);
            determinism.check(
                again
                    .configs
                    .iter()
                    .zip(&traj.configs)
                    .all(|(a, b)| a.positions == b.positions)
                    && again.configs.len() == traj.configs.len(),
                || format!("float instance {k}: repeat run diverged"),
            );
        }
    }

    for k in 0..exact_count {
        let mut rng = instance_rng(seed, 0xE8AC_7000 ^ k as u64);
        let n = rng.gen_range(2..=20);
        let initial = random_exact_line(&mut rng, n);
        let mut monitors = MonitorId::all_invariants();
        monitors.insert(MonitorId::Potential);
        monitors.insert(MonitorId::Movefar);
        let params = SimParams::exact(cubic_budget(n)).with_monitors(monitors);
        let traj = simulate(&initial, &params);

        let bad_pot = monitor_violations(&traj, "potential");
        slack_exact.check(bad_pot.is_empty(), || {
            format!("exact instance {k}: {}", bad_pot[0])
        });
        let bad_mf = monitor_violations(&traj, "movefar");
        dichotomy.check(bad_mf.is_empty(), || {
            format!("exact instance {k}: {}", bad_mf[0])
        });
        let other: Vec<&String> = traj
            .violations
            .iter()
            .filter(|v| !v.contains(" movefar:") && !v.contains(" potential:"))
            .collect();
        invariants.check(other.is_empty(), || {
            format!("exact instance {k}: {}", other[0])
        });
        converged.check(traj.converged_at.is_some(), || {
            format!("exact instance {k}: budget exhausted")
        });
    }

    SuiteReport {
        suite: "potential".into(),
        properties: vec![
            slack_float,
            slack_exact,
            dichotomy,
            invariants,
            converged,
            determinism,
        ],
    }
}

/// Regular n-gon family for n in {8, 16, 32}: the quadratic lower bound,
/// regularity over the analyzed horizon, agreement with the analytic
/// recurrence, and the non-adjacent-distance derivation it rests on.
pub fn ngon_suite() -> SuiteReport {
    let mut lower = PropertyResult::new("lower_bound");
    let mut regular = PropertyResult::new("regular_over_horizon");
    let mut induction = PropertyResult::new("induction_side_bound");
    let mut oracle = PropertyResult::new("oracle_agreement");
    let mut horizon = PropertyResult::new("validity_horizon");
    let mut symmetrized = PropertyResult::new("symmetrized_recurrence");
    let mut dichotomy = PropertyResult::new("movefar_dichotomy");

    for n in [8usize, 16, 32] {
        let initial = instances::ngon(n).expect("n >= 4");
        let params = SimParams::float_defaults(20_000)
            .with_monitors([MonitorId::Movefar, MonitorId::NeighborSymmetry].into());
        let traj = simulate(&initial, &params);
        let bad_mf = monitor_violations_f64(&traj, "movefar");
        dichotomy.check(bad_mf.is_empty(), || format!("n={n}: {}", bad_mf[0]));

        let t_conv = match traj.converged_at {
            Some(t) => t,
            None => {
                lower.fail(format!("n={n}: did not converge"));
                continue;
            }
        };
        lower.check(t_conv >= instances::ngon_lower_bound(n), || {
            format!(
                "n={n}: converged at {t_conv} < bound {}",
                instances::ngon_lower_bound(n)
            )
        });

        let horizon_t = n * n / 28;
        let analyzed_end = horizon_t.min(traj.configs.len() - 1);
        for t in 0..=analyzed_end {
            let c = &traj.configs[t];
            let sides: Vec<f64> = (0..n).map(|i| c.sqdist(i, (i + 1) % n).sqrt()).collect();
            let min = sides.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = sides.iter().cloned().fold(0.0, f64::max);
            regular.check(max - min <= 1e-6, || {
                format!("n={n} t={t}: side spread {}", max - min)
            });
            let bound = (1.0 - 14.0 / (n * n) as f64).powi(t as i32) - 1e-6;
            induction.check(min >= bound, || {
                format!("n={n} t={t}: side {min} below bound {bound}")
            });
            let (cx, cy) = centroid(c);
            regular.check(cx.hypot(cy) <= 1e-9, || {
                format!("n={n} t={t}: circumcenter drifted {}", cx.hypot(cy))
            });
        }

        // follow the analytic recurrence while it stays valid
        let mut state = instances::NGonOracleState::new(n).expect("n >= 4");
        loop {
            let t = state.t;
            if t >= traj.configs.len() {
                break;
            }
            let c = &traj.configs[t];
            let mean_side: f64 =
                (0..n).map(|i| c.sqdist(i, (i + 1) % n).sqrt()).sum::<f64>() / n as f64;
            oracle.check(
                (mean_side - state.side).abs() <= 1e-6 * state.side,
                || format!("n={n} t={t}: sim side {mean_side} vs oracle {}", state.side),
            );
            if state.valid {
                // non-adjacent vertices stay strictly outside the unit ball
                let mut min_nonadj = f64::INFINITY;
                for i in 0..n {
                    for j in i + 2..n {
                        if i == 0 && j == n - 1 {
                            continue;
                        }
                        min_nonadj = min_nonadj.min(c.sqdist(i, j).sqrt());
                    }
                }
                horizon.check(min_nonadj > 1.0, || {
                    format!("n={n} t={t}: non-adjacent distance {min_nonadj}")
                });
                state = state.step().expect("valid state");
            } else {
                break;
            }
        }

        // drift-free run: re-project onto the exact polygon each step and
        // compare the measured radius ratio against the shrink factor
        let factor = instances::ngon_shrink_factor(n);
        let mut config = instances::ngon(n).expect("n >= 4");
        let mut state = instances::NGonOracleState::new(n).expect("n >= 4");
        while state.valid && state.t < 60 {
            let r_before = mean_radius(&config);
            let (next, _) = crate::sim::step(&config, &params);
            let r_after = mean_radius(&next);
            let ratio = r_after / r_before;
            symmetrized.check((ratio - factor).abs() <= 1e-9, || {
                format!("n={n} t={}: ratio {ratio} vs factor {factor}", state.t)
            });
            state = state.step().expect("valid state");
            config = reproject_ngon(n, r_after, next.time);
        }
    }

    SuiteReport {
        suite: "ngon".into(),
        properties: vec![
            lower,
            regular,
            induction,
            oracle,
            horizon,
            symmetrized,
            dichotomy,
        ],
    }
}

fn centroid(c: &Configuration<f64>) -> (f64, f64) {
    let n = c.n() as f64;
    let cx = c.positions.iter().map(|p| p.coords[0]).sum::<f64>() / n;
    let cy = c.positions.iter().map(|p| p.coords[1]).sum::<f64>() / n;
    (cx, cy)
}

fn mean_radius(c: &Configuration<f64>) -> f64 {
    c.positions
        .iter()
        .map(|p| p.coords[0].hypot(p.coords[1]))
        .sum::<f64>()
        / c.n() as f64
}

fn reproject_ngon(n: usize, radius: f64, time: usize) -> Configuration<f64> {
    let mut config = instances::ngon(n).expect("n >= 4");
    let base = 1.0 / (2.0 * (std::f64::consts::PI / n as f64).sin());
    for p in &mut config.positions {
        p.coords[0] *= radius / base;
        p.coords[1] *= radius / base;
    }
    config.time = time;
    config
}

/// Minimum normalized good-direction margin over a random instance family;
/// gated against the calibrated floor.
pub fn gooddir_suite(seed: u64, count: usize) -> SuiteReport {
    let mut positive = PropertyResult::new("margin_positive");
    let mut floor = PropertyResult::new("normalized_margin_floor");
    let c0 = crate::calibration::get().gooddir_c0;
    for k in 0..count {
        let mut rng = instance_rng(seed, 0x600D_D100 ^ k as u64);
        let n: usize = rng.gen_range(2..=15);
        let d: usize = rng.gen_range(1..=4);
        let side = 0.5 + rng.gen::<f64>() * 3.0;
        let config = instances::random_box::<f64>(n, d, &side, rng.gen());
        match analysis::good_direction(&config, 10_000, rng.gen()) {
            Ok(rep) => {
                positive.check(rep.margin > 0.0, || format!("instance {k}: zero margin"));
                floor.check(rep.normalized_margin >= c0, || {
                    format!(
                        "instance {k}: normalized margin {} below floor {c0}",
                        rep.normalized_margin
                    )
                });
            }
            Err(crate::error::HkError::NoDistinctPairs) => positive.pass(),
            Err(e) => positive.fail(format!("instance {k}: {e}")),
        }
    }
    SuiteReport {
        suite: "gooddir".into(),
        properties: vec![positive, floor],
    }
}

pub fn all_suites(seed: u64) -> Vec<SuiteReport> {
    vec![
        one_dim_suite(seed, 200, false),
        noisy_suite(seed, 100),
        potential_suite(seed, 100, 50),
        ngon_suite(),
        gooddir_suite(seed, 40),
    ]
}
