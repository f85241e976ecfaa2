//! Per-step runtime monitors. Each one turns a proved statement into a
//! check that runs between steps and records a verdict in the step report;
//! violations are collected on the trajectory instead of aborting the run.

use serde_json::{json, Value};

use crate::analysis;
use crate::config::{agent_weight, neighbors, Configuration};
use crate::scalar::Scalar;
use crate::sim::{MonitorId, SimParams, StepReport};

/// Float-mode slack for order/gap/hull comparisons; exact mode uses zero.
pub const FLOAT_INV_SLACK: f64 = 1e-12;
/// Float-mode slack on the potential-decrease inequality.
pub const FLOAT_POTENTIAL_SLACK: f64 = 1e-9;

fn inv_slack<T: Scalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64_exact(FLOAT_INV_SLACK)
    }
}

pub(crate) struct MonitorState<T> {
    params: SimParams<T>,
    /// Agent indices in initial sorted order (1D monitors only).
    order0: Option<Vec<usize>>,
    /// Per sorted-rank adjacent pair: last seen gap once it exceeded 1.
    marked_gaps: Vec<Option<T>>,
    weights_prev: Vec<usize>,
    merge_steps: usize,
    order_swaps: usize,
}

fn sorted_indices<T: Scalar>(config: &Configuration<T>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..config.n()).collect();
    idx.sort_by(|&a, &b| {
        config
            .x(a)
            .partial_cmp(config.x(b))
            .expect("comparable coordinates")
            .then(a.cmp(&b))
    });
    idx
}

impl<T: Scalar> MonitorState<T> {
    pub fn new(initial: &Configuration<T>, params: &SimParams<T>) -> Self {
        let one_dim = initial.dim == 1;
        let order0 = if one_dim
            && (params.monitors.contains(&MonitorId::OrderPreservation)
                || params.monitors.contains(&MonitorId::OrderSwaps))
        {
            Some(sorted_indices(initial))
        } else {
            None
        };
        let weights_prev = (0..initial.n())
            .map(|i| agent_weight(initial, i, &params.merge_tol))
            .collect();
        MonitorState {
            params: params.clone(),
            order0,
            marked_gaps: vec![None; initial.n().saturating_sub(1)],
            weights_prev,
            merge_steps: 0,
            order_swaps: 0,
        }
    }

    pub fn observe(
        &mut self,
        prev: &Configuration<T>,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        let monitors = self.params.monitors.clone();
        for m in &monitors {
            match m {
                MonitorId::OrderPreservation => self.order_preservation(next, report, violations),
                MonitorId::GapPersistence => self.gap_persistence(prev, next, report, violations),
                MonitorId::WeightMonotonicity => self.weight_monotonicity(next, report, violations),
                MonitorId::NeighborSymmetry => self.neighbor_symmetry(prev, report, violations),
                MonitorId::MeanContainment => self.mean_containment(prev, next, report, violations),
                MonitorId::Potential => self.potential(prev, next, report, violations),
                MonitorId::Movefar => self.movefar(prev, next, report, violations),
                MonitorId::OrderSwaps => self.order_swaps(prev, next, report),
            }
        }
    }

    fn record(report: &mut StepReport<T>, id: MonitorId, value: Value) {
        report.monitor_outcomes.insert(id.name().to_string(), value);
    }

    fn order_preservation(
        &mut self,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        let Some(order) = &self.order0 else {
            return;
        };
        let slack = inv_slack::<T>();
        let mut ok = true;
        for w in order.windows(2) {
            if next.x(w[0]).clone() > next.x(w[1]).clone() + slack.clone() {
                ok = false;
                violations.push(format!(
                    "t={}: order: agents {} and {} swapped",
                    next.time, w[0], w[1]
                ));
            }
        }
        Self::record(report, MonitorId::OrderPreservation, json!({ "ok": ok }));
    }

    fn gap_persistence(
        &mut self,
        prev: &Configuration<T>,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        if prev.dim != 1 {
            return;
        }
        let slack = inv_slack::<T>();
        let one_eps = T::one() + self.params.neighbor_eps.clone();
        let prev_sorted = sorted_indices(prev);
        let next_sorted = sorted_indices(next);
        let mut ok = true;
        for k in 0..prev.n().saturating_sub(1) {
            let gap_prev = prev.x(prev_sorted[k + 1]).clone() - prev.x(prev_sorted[k]).clone();
            if self.marked_gaps[k].is_none() && gap_prev.clone() * gap_prev.clone() > one_eps {
                self.marked_gaps[k] = Some(gap_prev);
            }
            if let Some(marked) = &self.marked_gaps[k] {
                let gap_next =
                    next.x(next_sorted[k + 1]).clone() - next.x(next_sorted[k]).clone();
                // once a gap exceeds 1 the two sides evolve independently
                // and the gap can only grow
                if gap_next.clone() + slack.clone() < marked.clone() {
                    ok = false;
                    violations.push(format!(
                        "t={}: gaps: sorted gap {} shrank after exceeding 1",
                        next.time, k
                    ));
                }
                if &gap_next > marked {
                    self.marked_gaps[k] = Some(gap_next);
                }
            }
        }
        Self::record(report, MonitorId::GapPersistence, json!({ "ok": ok }));
    }

    fn weight_monotonicity(
        &mut self,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        let mut ok = true;
        for i in 0..next.n() {
            let w = agent_weight(next, i, &self.params.merge_tol);
            if w < self.weights_prev[i] {
                ok = false;
                violations.push(format!(
                    "t={}: weights: agent {} weight fell {} -> {}",
                    next.time, i, self.weights_prev[i], w
                ));
            }
            self.weights_prev[i] = w;
        }
        Self::record(report, MonitorId::WeightMonotonicity, json!({ "ok": ok }));
    }

    fn neighbor_symmetry(
        &mut self,
        prev: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        let n = prev.n();
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| neighbors(prev, i, &self.params).expect("index in range"))
            .collect();
        let mut ok = true;
        for i in 0..n {
            for &j in &adj[i] {
                if !adj[j].contains(&i) {
                    ok = false;
                    violations.push(format!(
                        "t={}: symmetry: {} neighbors {} but not conversely",
                        prev.time, i, j
                    ));
                }
            }
            if !adj[i].contains(&i) {
                ok = false;
                violations.push(format!("t={}: symmetry: {} missing self-loop", prev.time, i));
            }
        }
        Self::record(report, MonitorId::NeighborSymmetry, json!({ "ok": ok }));
    }

    fn mean_containment(
        &mut self,
        prev: &Configuration<T>,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        let slack = inv_slack::<T>();
        let mut ok = true;
        for i in 0..prev.n() {
            let nbrs = neighbors(prev, i, &self.params).expect("index in range");
            for k in 0..prev.dim {
                let mut lo = prev.positions[nbrs[0]].coords[k].clone();
                let mut hi = lo.clone();
                for &j in &nbrs[1..] {
                    let c = prev.positions[j].coords[k].clone();
                    if c < lo {
                        lo = c.clone();
                    }
                    if c > hi {
                        hi = c;
                    }
                }
                let x = next.positions[i].coords[k].clone();
                if x.clone() + slack.clone() < lo || x > hi + slack.clone() {
                    ok = false;
                    violations.push(format!(
                        "t={}: hull: agent {} coord {} left the neighbor hull",
                        next.time, i, k
                    ));
                }
            }
        }
        Self::record(report, MonitorId::MeanContainment, json!({ "ok": ok }));
    }

    fn potential(
        &mut self,
        prev: &Configuration<T>,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        let rep = analysis::potential_decrease_check(prev, next).expect("matched sizes");
        let slack_tol = if T::EXACT {
            T::zero()
        } else {
            T::from_f64_exact(-FLOAT_POTENTIAL_SLACK)
        };
        let ok = rep.slack >= slack_tol;
        if !ok {
            violations.push(format!(
                "t={}: potential: slack {} negative",
                next.time,
                rep.slack.to_f64().unwrap_or(f64::NAN)
            ));
        }
        Self::record(
            report,
            MonitorId::Potential,
            json!({
                "v_before": rep.v_before.render(),
                "v_after": rep.v_after.render(),
                "sum_sq_disp": rep.sum_sq_disp.render(),
                "cross_term": rep.cross_term.render(),
                "slack": rep.slack.render(),
                "ok": ok,
            }),
        );
        report.potential = Some(rep.v_after);
    }

    fn movefar(
        &mut self,
        prev: &Configuration<T>,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
        violations: &mut Vec<String>,
    ) {
        let verdict = analysis::movefar_check(prev, next, &self.params).expect("matched sizes");
        let mut ok = true;
        if let analysis::MovefarVerdict::Violated { .. } = verdict {
            ok = false;
            violations.push(format!(
                "t={}: movefar: neither merge nor big move (c={})",
                next.time, self.params.movefar_c
            ));
        }
        if let analysis::MovefarVerdict::Merge { .. } = verdict {
            self.merge_steps += 1;
            if self.merge_steps > prev.n() {
                ok = false;
                violations.push(format!(
                    "t={}: movefar: more than n={} merge steps",
                    next.time,
                    prev.n()
                ));
            }
        }
        Self::record(
            report,
            MonitorId::Movefar,
            json!({
                "kind": verdict.kind(),
                "merge_steps": self.merge_steps,
                "ok": ok,
            }),
        );
    }

    fn order_swaps(
        &mut self,
        prev: &Configuration<T>,
        next: &Configuration<T>,
        report: &mut StepReport<T>,
    ) {
        if prev.dim != 1 {
            return;
        }
        let swapped = sorted_indices(prev) != sorted_indices(next);
        if swapped {
            self.order_swaps += 1;
        }
        Self::record(
            report,
            MonitorId::OrderSwaps,
            json!({ "swapped": swapped, "total": self.order_swaps }),
        );
    }
}
