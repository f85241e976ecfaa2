//! The synchronous update rule, convergence detection, and the simulation
//! loop with monitor hooks.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde_json::Value;

use crate::config::{neighbors, Configuration, Point};
use crate::error::{HkError, Result};
use crate::monitors::MonitorState;
use crate::scalar::Scalar;

/// Per-step checks that run between steps and record verdicts into the
/// step reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MonitorId {
    /// 1D order of positions never changes (homogeneous model).
    OrderPreservation,
    /// A sorted adjacent gap > 1 never shrinks back to <= 1.
    GapPersistence,
    /// Each agent's weight is non-decreasing.
    WeightMonotonicity,
    /// j in N_i iff i in N_j.
    NeighborSymmetry,
    /// New positions lie in the componentwise hull of old neighbor positions.
    MeanContainment,
    /// Potential V and its quantified per-step decrease.
    Potential,
    /// Merge-or-big-move dichotomy with the calibrated constant.
    Movefar,
    /// Records 1D order swaps without failing (noisy runs only; order is
    /// not preserved there).
    OrderSwaps,
}

impl MonitorId {
    pub fn parse(s: &str) -> Option<MonitorId> {
        Some(match s {
            "order" => MonitorId::OrderPreservation,
            "gaps" => MonitorId::GapPersistence,
            "weights" => MonitorId::WeightMonotonicity,
            "symmetry" => MonitorId::NeighborSymmetry,
            "hull" => MonitorId::MeanContainment,
            "potential" => MonitorId::Potential,
            "movefar" => MonitorId::Movefar,
            "order_swaps" => MonitorId::OrderSwaps,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MonitorId::OrderPreservation => "order",
            MonitorId::GapPersistence => "gaps",
            MonitorId::WeightMonotonicity => "weights",
            MonitorId::NeighborSymmetry => "symmetry",
            MonitorId::MeanContainment => "hull",
            MonitorId::Potential => "potential",
            MonitorId::Movefar => "movefar",
            MonitorId::OrderSwaps => "order_swaps",
        }
    }

    pub fn all_invariants() -> BTreeSet<MonitorId> {
        [
            MonitorId::OrderPreservation,
            MonitorId::GapPersistence,
            MonitorId::WeightMonotonicity,
            MonitorId::NeighborSymmetry,
            MonitorId::MeanContainment,
        ]
        .into_iter()
        .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimParams<T> {
    /// Added to the squared-distance threshold (0 in exact mode).
    pub neighbor_eps: T,
    /// Fixed-point slack on per-agent displacement (0 in exact mode).
    pub conv_tol: T,
    /// Coincidence tolerance (0 in exact mode).
    pub merge_tol: T,
    pub max_steps: usize,
    pub monitors: BTreeSet<MonitorId>,
    /// Calibrated constant for the movefar dichotomy threshold c*n^-4*d^-1.
    pub movefar_c: f64,
    /// Test-only hook: deliberately breaks the update rule so negative
    /// controls can confirm the verification suites actually fail.
    pub corrupt_step: bool,
}

impl<T: Scalar> SimParams<T> {
    pub fn exact(max_steps: usize) -> Self {
        SimParams {
            neighbor_eps: T::zero(),
            conv_tol: T::zero(),
            merge_tol: T::zero(),
            max_steps,
            monitors: BTreeSet::new(),
            movefar_c: crate::calibration::get().movefar_c,
            corrupt_step: false,
        }
    }

    pub fn float_defaults(max_steps: usize) -> Self {
        SimParams {
            neighbor_eps: T::from_f64_exact(1e-9),
            conv_tol: T::from_f64_exact(1e-12),
            merge_tol: T::from_f64_exact(1e-9),
            max_steps,
            monitors: BTreeSet::new(),
            movefar_c: crate::calibration::get().movefar_c,
            corrupt_step: false,
        }
    }

    pub fn with_monitors(mut self, monitors: BTreeSet<MonitorId>) -> Self {
        self.monitors = monitors;
        self
    }
}

/// Default step budget: the proven cubic bound 2(n+2n^3)+2 in one dimension,
/// a pragmatic n^4*d^2 cap otherwise.
pub fn default_max_steps(n: usize, d: usize) -> usize {
    if d <= 1 {
        cubic_budget(n)
    } else {
        n.pow(4) * d * d
    }
}

/// 2(n + 2n^3) + 2, the step budget after which a 1D system must have
/// converged.
pub fn cubic_budget(n: usize) -> usize {
    2 * (n + 2 * n * n * n) + 2
}

#[derive(Debug, Clone)]
pub struct StepReport<T> {
    /// Time index of the resulting configuration.
    pub time: usize,
    /// Squared per-agent displacements over this step.
    pub sq_displacements: Vec<T>,
    pub max_sq_displacement: T,
    /// Pairs distinct at t and coincident at t+1.
    pub merge_events: Vec<(usize, usize)>,
    /// Potential of the resulting configuration, when the monitor is on.
    pub potential: Option<T>,
    pub monitor_outcomes: BTreeMap<String, Value>,
    /// Largest coordinate bit-size after the step (exact mode only).
    pub max_bits: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    /// Configurations at consecutive times, starting at the initial one.
    pub configs: Vec<Configuration<T>>,
    pub steps: Vec<StepReport<T>>,
    pub converged_at: Option<usize>,
    pub budget_exhausted: bool,
    /// Monitor violations, one human-readable line each.
    pub violations: Vec<String>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn initial(&self) -> &Configuration<T> {
        &self.configs[0]
    }

    pub fn final_config(&self) -> &Configuration<T> {
        self.configs.last().unwrap()
    }

    pub fn n(&self) -> usize {
        self.initial().n()
    }

    /// Configuration at an absolute time index. Past convergence the fixed
    /// point extends indefinitely.
    pub fn config_at(&self, time: usize) -> Result<&Configuration<T>> {
        let t0 = self.initial().time;
        if time < t0 {
            return Err(HkError::TrajectoryTooShort { t: time, t_end: t0 });
        }
        let k = time - t0;
        if k < self.configs.len() {
            Ok(&self.configs[k])
        } else if self.converged_at.is_some() {
            Ok(self.final_config())
        } else {
            Err(HkError::TrajectoryTooShort {
                t: time,
                t_end: t0 + self.configs.len() - 1,
            })
        }
    }
}

/// One synchronous application of the mass-center rule: every agent moves
/// to the arithmetic mean of its neighbors' old positions.
pub fn step<T: Scalar>(
    config: &Configuration<T>,
    params: &SimParams<T>,
) -> (Configuration<T>, StepReport<T>) {
    let n = config.n();
    let d = config.dim;
    let mut new_positions = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = neighbors(config, i, params).expect("index in range");
        let count = T::from_int(nbrs.len() as i64);
        let mut mean = vec![T::zero(); d];
        for &j in &nbrs {
            for (k, c) in config.positions[j].coords.iter().enumerate() {
                mean[k] = mean[k].clone() + c.clone();
            }
        }
        for m in &mut mean {
            *m = m.clone() / count.clone();
        }
        new_positions.push(Point::new(mean));
    }
    if params.corrupt_step {
        // Shift agent 0 left by 1/4; breaks mean containment and the
        // convergence budget, so suites running with this hook must fail.
        new_positions[0].coords[0] =
            new_positions[0].coords[0].clone() - T::from_ratio(1, 4);
    }
    let next = Configuration {
        positions: new_positions,
        dim: d,
        time: config.time + 1,
    };
    let report = build_report(config, &next, params);
    (next, report)
}

pub(crate) fn build_report<T: Scalar>(
    before: &Configuration<T>,
    after: &Configuration<T>,
    params: &SimParams<T>,
) -> StepReport<T> {
    let n = before.n();
    let sq_displacements: Vec<T> = (0..n)
        .map(|i| before.positions[i].sqdist(&after.positions[i]))
        .collect();
    let max_sq_displacement = sq_displacements
        .iter()
        .cloned()
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let mut merge_events = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let was_distinct = !crate::config::coincide(
                &before.positions[i],
                &before.positions[j],
                &params.merge_tol,
            );
            if was_distinct
                && crate::config::coincide(
                    &after.positions[i],
                    &after.positions[j],
                    &params.merge_tol,
                )
            {
                merge_events.push((i, j));
            }
        }
    }
    StepReport {
        time: after.time,
        sq_displacements,
        max_sq_displacement,
        merge_events,
        potential: None,
        monitor_outcomes: BTreeMap::new(),
        max_bits: after.max_bits(),
    }
}

/// True iff one application of the update rule moves every agent by at most
/// conv_tol (exactly zero in exact mode).
pub fn is_converged<T: Scalar>(config: &Configuration<T>, params: &SimParams<T>) -> bool {
    let (_, report) = step(config, params);
    report.max_sq_displacement <= params.conv_tol.clone() * params.conv_tol.clone()
}

pub fn simulate<T: Scalar>(initial: &Configuration<T>, params: &SimParams<T>) -> Trajectory<T> {
    simulate_with(initial, params, |c| step(c, params))
}

/// Simulation loop shared by the homogeneous and noisy dynamics. The
/// stepper must be a pure function of the previous configuration.
pub(crate) fn simulate_with<T, F>(
    initial: &Configuration<T>,
    params: &SimParams<T>,
    stepper: F,
) -> Trajectory<T>
where
    T: Scalar,
    F: Fn(&Configuration<T>) -> (Configuration<T>, StepReport<T>),
{
    let conv_sq = params.conv_tol.clone() * params.conv_tol.clone();
    let mut configs = vec![initial.clone()];
    let mut steps: Vec<StepReport<T>> = Vec::new();
    let mut violations = Vec::new();
    let mut converged_at = None;
    let mut monitors = MonitorState::new(initial, params);
    for _ in 0..params.max_steps {
        let cur = configs.last().unwrap();
        let (next, mut report) = stepper(cur);
        if report.max_sq_displacement <= conv_sq {
            converged_at = Some(cur.time);
            break;
        }
        monitors.observe(cur, &next, &mut report, &mut violations);
        steps.push(report);
        configs.push(next);
    }
    if converged_at.is_none() {
        let cur = configs.last().unwrap();
        let (_, probe) = stepper(cur);
        if probe.max_sq_displacement <= conv_sq {
            converged_at = Some(cur.time);
        }
    }
    Trajectory {
        budget_exhausted: converged_at.is_none(),
        configs,
        steps,
        converged_at,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(n: i64) -> BigRational {
        BigRational::from_int(n)
    }

    fn rq(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn symmetric_pair_meets_at_midpoint() {
        let c = Configuration::from_1d(vec![r(0), r(1)], 0).unwrap();
        let p = SimParams::exact(10);
        let (next, report) = step(&c, &p);
        assert_eq!(next.x(0), &rq(1, 2));
        assert_eq!(next.x(1), &rq(1, 2));
        assert_eq!(report.merge_events, vec![(0, 1)]);
    }

    #[test]
    fn triangle_example_step() {
        // (0,0), (1,0), (1/2,1) -> (1/2,0), (1/2,0), (1/2,1)
        let c = Configuration::new(
            vec![
                Point::new(vec![r(0), r(0)]),
                Point::new(vec![r(1), r(0)]),
                Point::new(vec![rq(1, 2), r(1)]),
            ],
            0,
        )
        .unwrap();
        let p = SimParams::exact(10);
        let (next, _) = step(&c, &p);
        assert_eq!(next.positions[0].coords, vec![rq(1, 2), r(0)]);
        assert_eq!(next.positions[1].coords, vec![rq(1, 2), r(0)]);
        assert_eq!(next.positions[2].coords, vec![rq(1, 2), r(1)]);
        // weight of (1/2, 0) after the step
        let w = crate::config::weight(&next, &Point::new(vec![rq(1, 2), r(0)]), &r(0));
        assert_eq!(w, 2);
    }

    #[test]
    fn isolated_agents_do_not_move() {
        let c = Configuration::from_1d(vec![r(0), rq(3, 2)], 0).unwrap();
        let p = SimParams::exact(10);
        let (next, _) = step(&c, &p);
        assert_eq!(next.positions, c.positions);
        assert!(is_converged(&c, &p));
    }

    #[test]
    fn pair_at_unit_distance_not_converged() {
        let c = Configuration::from_1d(vec![r(0), r(1)], 0).unwrap();
        assert!(!is_converged(&c, &SimParams::exact(10)));
    }

    #[test]
    fn triangle_two_step_convergence() {
        // (1/2,0) x2 and (1/2,1): not converged; one step reaches
        // (1/2,1/3) for all, which is a fixed point.
        let c = Configuration::new(
            vec![
                Point::new(vec![rq(1, 2), r(0)]),
                Point::new(vec![rq(1, 2), r(0)]),
                Point::new(vec![rq(1, 2), r(1)]),
            ],
            1,
        )
        .unwrap();
        let p = SimParams::exact(10);
        assert!(!is_converged(&c, &p));
        let (next, _) = step(&c, &p);
        for i in 0..3 {
            assert_eq!(next.positions[i].coords, vec![rq(1, 2), rq(1, 3)]);
        }
        assert!(is_converged(&next, &p));
    }

    #[test]
    fn line_of_three_converges_at_two() {
        let c = Configuration::from_1d(vec![r(0), r(1), r(2)], 0).unwrap();
        let traj = simulate(&c, &SimParams::exact(100));
        assert_eq!(traj.converged_at, Some(2));
        assert_eq!(traj.steps.len(), 2);
        for i in 0..3 {
            assert_eq!(traj.final_config().x(i), &r(1));
        }
        // t=1 midway positions
        assert_eq!(traj.configs[1].x(0), &rq(1, 2));
        assert_eq!(traj.configs[1].x(2), &rq(3, 2));
    }

    #[test]
    fn single_agent_converged_immediately() {
        let c = Configuration::from_1d(vec![rq(7, 3)], 0).unwrap();
        let traj = simulate(&c, &SimParams::exact(10));
        assert_eq!(traj.converged_at, Some(0));
        assert!(traj.steps.is_empty());
    }

    #[test]
    fn budget_exhaustion_is_reported_not_fatal() {
        let c = Configuration::from_1d(vec![r(0), r(1), r(2), r(3)], 0).unwrap();
        let mut p = SimParams::exact(1);
        p.max_steps = 1;
        let traj = simulate(&c, &p);
        assert!(traj.budget_exhausted);
        assert_eq!(traj.converged_at, None);
        assert_eq!(traj.steps.len(), 1);
    }

    #[test]
    fn corrupt_step_breaks_hull_monitor() {
        let c = Configuration::from_1d(vec![r(0), r(1)], 0).unwrap();
        let mut p = SimParams::exact(5).with_monitors(MonitorId::all_invariants());
        p.corrupt_step = true;
        let traj = simulate(&c, &p);
        assert!(!traj.violations.is_empty());
    }
}
