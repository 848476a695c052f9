//! CSV persistence for trajectories and aggregates.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! read-back reproduces every numeric field bit for bit; absent values
//! (no feasible point yet, no AL state on design rows) are empty fields.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::problems::Evaluation;
use crate::strategies::{AlSnapshot, Trajectory};

use super::{AggregateResult, HarnessError};

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64, HarnessError> {
    field.parse::<f64>().map_err(|_| {
        HarnessError::Malformed(format!("line {line}: bad {what} value {field:?}"))
    })
}

fn parse_opt_f64(field: &str, what: &str, line: usize) -> Result<Option<f64>, HarnessError> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, what, line).map(Some)
    }
}

/// Render one trajectory as CSV with the per-restart schema
/// `restart,eval,x0..,f,c0..,feasible,best_feasible,lambda0..,rho`.
pub fn trajectory_to_csv(restart: usize, t: &Trajectory) -> String {
    let (d, m) = t
        .evaluations()
        .first()
        .map(|e| (e.x.len(), e.c.len()))
        .unwrap_or((0, 0));
    let mut out = String::new();
    out.push_str("restart,eval");
    for j in 0..d {
        let _ = write!(out, ",x{j}");
    }
    out.push_str(",f");
    for j in 0..m {
        let _ = write!(out, ",c{j}");
    }
    out.push_str(",feasible,best_feasible");
    for j in 0..m {
        let _ = write!(out, ",lambda{j}");
    }
    out.push_str(",rho\n");

    for (i, e) in t.evaluations().iter().enumerate() {
        let _ = write!(out, "{restart},{}", i + 1);
        for v in &e.x {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(out, ",{}", e.f);
        for v in &e.c {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(out, ",{}", e.feasible);
        match t.best_feasible()[i] {
            Some(b) => {
                let _ = write!(out, ",{b}");
            }
            None => out.push(','),
        }
        match &t.al_states()[i] {
            Some(s) => {
                for v in &s.lambda {
                    let _ = write!(out, ",{v}");
                }
                let _ = write!(out, ",{}", s.rho);
            }
            None => {
                for _ in 0..=m {
                    out.push(',');
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(
    restart: usize,
    t: &Trajectory,
    path: &Path,
) -> Result<(), HarnessError> {
    fs::write(path, trajectory_to_csv(restart, t))?;
    Ok(())
}

/// Parse a per-restart CSV back into `(restart, Trajectory)`. The running
/// best-feasible column is recomputed on push and checked against the file.
pub fn read_trajectory_csv(path: &Path) -> Result<(usize, Trajectory), HarnessError> {
    let text = fs::read_to_string(path)?;
    parse_trajectory_csv(&text)
}

pub fn parse_trajectory_csv(text: &str) -> Result<(usize, Trajectory), HarnessError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| HarnessError::Malformed("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let d = cols.iter().filter(|c| c.starts_with('x')).count();
    let m = cols.iter().filter(|c| c.starts_with('c')).count();
    let expected_cols = 2 + d + 1 + m + 2 + m + 1;
    if cols.len() != expected_cols || d == 0 || m == 0 {
        return Err(HarnessError::Malformed(format!(
            "unrecognized trajectory header {header:?}"
        )));
    }

    let mut restart = 0usize;
    let mut t = Trajectory::default();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_cols {
            return Err(HarnessError::Malformed(format!(
                "line {lineno}: {} fields, expected {expected_cols}",
                fields.len()
            )));
        }
        restart = fields[0]
            .parse()
            .map_err(|_| HarnessError::Malformed(format!("line {lineno}: bad restart")))?;
        let mut at = 2; // skip restart, eval
        let x: Vec<f64> = (0..d)
            .map(|j| parse_f64(fields[at + j], "x", lineno))
            .collect::<Result<_, _>>()?;
        at += d;
        let f = parse_f64(fields[at], "f", lineno)?;
        at += 1;
        let c: Vec<f64> = (0..m)
            .map(|j| parse_f64(fields[at + j], "c", lineno))
            .collect::<Result<_, _>>()?;
        at += m;
        let feasible_flag = fields[at] == "true";
        at += 1;
        let stored_best = parse_opt_f64(fields[at], "best_feasible", lineno)?;
        at += 1;
        let lambda: Vec<Option<f64>> = (0..m)
            .map(|j| parse_opt_f64(fields[at + j], "lambda", lineno))
            .collect::<Result<_, _>>()?;
        at += m;
        let rho = parse_opt_f64(fields[at], "rho", lineno)?;

        let eval = Evaluation::new(x, f, c);
        if eval.feasible != feasible_flag {
            return Err(HarnessError::Malformed(format!(
                "line {lineno}: feasibility flag disagrees with constraint values"
            )));
        }
        let state = match (rho, lambda.iter().all(|l| l.is_some())) {
            (Some(rho), true) => Some(AlSnapshot {
                lambda: lambda.into_iter().map(|l| l.unwrap()).collect(),
                rho,
            }),
            (None, _) => None,
            _ => {
                return Err(HarnessError::Malformed(format!(
                    "line {lineno}: partial AL state"
                )))
            }
        };
        t.push(eval, state);
        let recomputed = *t.best_feasible().last().unwrap();
        if recomputed != stored_best {
            return Err(HarnessError::Malformed(format!(
                "line {lineno}: best_feasible {stored_best:?} does not match history {recomputed:?}"
            )));
        }
    }
    Ok((restart, t))
}

/// Aggregate schema: `eval,mean_best_feasible,stderr,n_included` with one
/// row per evaluation; means are empty until every included restart has
/// found a feasible point.
pub fn aggregate_to_csv(a: &AggregateResult) -> String {
    let mut out = String::from("eval,mean_best_feasible,stderr,n_included\n");
    for i in 0..a.mean_trajectory.len() {
        let _ = write!(out, "{}", i + 1);
        match a.mean_trajectory[i] {
            Some(v) => {
                let _ = write!(out, ",{v}");
            }
            None => out.push(','),
        }
        match a.stderr_trajectory[i] {
            Some(v) => {
                let _ = write!(out, ",{v}");
            }
            None => out.push(','),
        }
        let _ = write!(out, ",{}", a.n_included);
        out.push('\n');
    }
    out
}

pub fn write_aggregate_csv(a: &AggregateResult, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, aggregate_to_csv(a))?;
    Ok(())
}

pub fn read_aggregate_csv(path: &Path) -> Result<AggregateResult, HarnessError> {
    let text = fs::read_to_string(path)?;
    parse_aggregate_csv(&text)
}

pub fn parse_aggregate_csv(text: &str) -> Result<AggregateResult, HarnessError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| HarnessError::Malformed("empty file".into()))?;
    if header != "eval,mean_best_feasible,stderr,n_included" {
        return Err(HarnessError::Malformed(format!(
            "unrecognized aggregate header {header:?}"
        )));
    }
    let mut mean_trajectory = Vec::new();
    let mut stderr_trajectory = Vec::new();
    let mut n_included = 0usize;
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarnessError::Malformed(format!(
                "line {lineno}: expected 4 fields"
            )));
        }
        mean_trajectory.push(parse_opt_f64(fields[1], "mean", lineno)?);
        stderr_trajectory.push(parse_opt_f64(fields[2], "stderr", lineno)?);
        n_included = fields[3]
            .parse()
            .map_err(|_| HarnessError::Malformed(format!("line {lineno}: bad n_included")))?;
    }
    let final_mean = mean_trajectory
        .last()
        .copied()
        .flatten()
        .ok_or_else(|| HarnessError::Malformed("aggregate has no defined final mean".into()))?;
    let final_stderr = stderr_trajectory.last().copied().flatten().unwrap_or(0.0);
    Ok(AggregateResult {
        mean_trajectory,
        stderr_trajectory,
        final_mean,
        final_stderr,
        n_included,
        n_excluded: 0,
    })
}
