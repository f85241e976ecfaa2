//! Trajectory JSONL format: a leading header record, one record per step,
//! and a trailing summary record. Positions serialize as strings ("p/q" in
//! exact mode, shortest round-trip decimals in float mode) so re-reading a
//! trajectory reproduces them exactly.

use std::io::{BufRead, Write};

use serde_json::{json, Map, Value};

use crate::config::{Configuration, Point};
use crate::error::{HkError, Result};
use crate::scalar::Scalar;
use crate::sim::Trajectory;

pub const FORMAT: &str = "hk-trajectory";
pub const VERSION: u32 = 1;

fn positions_json<T: Scalar>(config: &Configuration<T>) -> Value {
    Value::Array(
        config
            .positions
            .iter()
            .map(|p| {
                Value::Array(
                    p.coords
                        .iter()
                        .map(|c| Value::String(c.render()))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn write_trajectory<T: Scalar, W: Write>(traj: &Trajectory<T>, mut w: W) -> Result<()> {
    let initial = traj.initial();
    let header = json!({
        "format": FORMAT,
        "version": VERSION,
        "mode": if T::EXACT { "exact" } else { "float" },
        "n": initial.n(),
        "d": initial.dim,
        "t0": initial.time,
        "initial_positions": positions_json(initial),
    });
    writeln!(w, "{header}")?;
    for (k, step) in traj.steps.iter().enumerate() {
        let config = &traj.configs[k + 1];
        let record = json!({
            "t": step.time,
            "positions": positions_json(config),
            "max_sq_displacement": step.max_sq_displacement.render(),
            "merge_events": step.merge_events,
            "potential": step.potential.as_ref().map(|p| p.render()),
            "monitor_outcomes": step.monitor_outcomes,
            "max_bits": step.max_bits,
        });
        writeln!(w, "{record}")?;
    }
    let summary = json!({
        "summary": true,
        "converged_at": traj.converged_at,
        "budget_exhausted": traj.budget_exhausted,
        "steps": traj.steps.len(),
        "violations": traj.violations,
    });
    writeln!(w, "{summary}")?;
    Ok(())
}

fn bad_data(msg: impl Into<String>) -> HkError {
    HkError::Io(std::io::Error::new(
        std::io::ErrorKind::InvalidData,
        msg.into(),
    ))
}

fn parse_positions<T: Scalar>(value: &Value, time: usize) -> Result<Configuration<T>> {
    let agents = value
        .as_array()
        .ok_or_else(|| bad_data("positions must be an array"))?;
    let mut positions = Vec::with_capacity(agents.len());
    for agent in agents {
        let coords = agent
            .as_array()
            .ok_or_else(|| bad_data("agent coordinates must be an array"))?
            .iter()
            .map(|c| {
                let s = c.as_str().ok_or_else(|| bad_data("coordinate must be a string"))?;
                T::parse_coord(s).map_err(|reason| HkError::Parse {
                    line: 0,
                    text: s.to_string(),
                    reason,
                })
            })
            .collect::<Result<Vec<T>>>()?;
        positions.push(Point::new(coords));
    }
    let mut config = Configuration::new(positions, 0)?;
    config.time = time;
    Ok(config)
}

/// Re-reads the configurations and summary of a trajectory stream.
pub struct ReadBack<T> {
    pub configs: Vec<Configuration<T>>,
    pub converged_at: Option<usize>,
    pub budget_exhausted: bool,
}

pub fn read_trajectory<T: Scalar, R: BufRead>(reader: R) -> Result<ReadBack<T>> {
    let mut configs = Vec::new();
    let mut converged_at = None;
    let mut budget_exhausted = false;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Map<String, Value> = serde_json::from_str(&line)
            .map_err(|e| bad_data(format!("bad JSONL record: {e}")))?;
        if record.get("format").is_some() {
            let t0 = record.get("t0").and_then(Value::as_u64).unwrap_or(0) as usize;
            let positions = record
                .get("initial_positions")
                .ok_or_else(|| bad_data("header missing initial_positions"))?;
            configs.push(parse_positions(positions, t0)?);
        } else if record.get("summary").is_some() {
            converged_at = record
                .get("converged_at")
                .and_then(Value::as_u64)
                .map(|v| v as usize);
            budget_exhausted = record
                .get("budget_exhausted")
                .and_then(Value::as_bool)
                .unwrap_or(false);
        } else {
            let t = record
                .get("t")
                .and_then(Value::as_u64)
                .ok_or_else(|| bad_data("step record missing t"))? as usize;
            let positions = record
                .get("positions")
                .ok_or_else(|| bad_data("step record missing positions"))?;
            configs.push(parse_positions(positions, t)?);
        }
    }
    if configs.is_empty() {
        return Err(bad_data("no configurations in trajectory stream"));
    }
    Ok(ReadBack {
        configs,
        converged_at,
        budget_exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, MonitorId, SimParams};
    use num_rational::BigRational;

    #[test]
    fn exact_round_trip_is_string_exact() {
        let c = crate::instances::unit_line::<BigRational>(3);
        let params = SimParams::exact(100).with_monitors(MonitorId::all_invariants());
        let traj = simulate(&c, &params);
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        let back: ReadBack<BigRational> = read_trajectory(&buf[..]).unwrap();
        assert_eq!(back.converged_at, Some(2));
        assert_eq!(back.configs.len(), traj.configs.len());
        for (a, b) in back.configs.iter().zip(&traj.configs) {
            assert_eq!(a.positions, b.positions);
            assert_eq!(a.time, b.time);
        }
    }

    #[test]
    fn float_round_trip() {
        let c = crate::instances::ngon(8).unwrap();
        let params = SimParams::float_defaults(500);
        let traj = simulate(&c, &params);
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        let back: ReadBack<f64> = read_trajectory(&buf[..]).unwrap();
        for (a, b) in back.configs.iter().zip(&traj.configs) {
            assert_eq!(a.positions, b.positions);
        }
    }

    #[test]
    fn deterministic_bytes() {
        let c = crate::instances::random_box::<f64>(8, 2, &2.0, 5);
        let params = SimParams::float_defaults(1000)
            .with_monitors([MonitorId::Potential, MonitorId::Movefar].into());
        let mut buf1 = Vec::new();
        write_trajectory(&simulate(&c, &params), &mut buf1).unwrap();
        let mut buf2 = Vec::new();
        write_trajectory(&simulate(&c, &params), &mut buf2).unwrap();
        assert_eq!(buf1, buf2);
    }
}
