//! File formats: system and weight JSON, trajectory CSV.
//!
//! Trajectory CSV has a header `t,u1..um,y1..yp[,x1..xn]` and one row per
//! consecutive time step. A step whose input and output fields are all empty or
//! `NaN` is missing. State columns are used by input/state experiments, where
//! the final row carries the terminal state and no input.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::SignalSegment;
use crate::ident::{CorruptedTrajectory, Sample};
use crate::lqr::LqrWeights;
use crate::lti::{LtiSystem, StateTrajectory};

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], cols_if_empty: usize) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(cols_if_empty, Vec::len);
    if let Some(r) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::dim(format!(
            "{name}: row {r} has {} entries, expected {ncols}",
            rows[r].len()
        )));
    }
    Ok(DMatrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

/// Parses `{"A": [[..]], "B": .., "C": .., "D": ..}` (row-major nested arrays).
/// For `n = 0` use `"A": [], "B": [], "C": [[], ..]`.
pub fn system_from_json(text: &str) -> Result<LtiSystem> {
    let raw: SystemJson = serde_json::from_str(text)?;
    let d = matrix_from_rows("D", &raw.d, 0)?;
    let (p, m) = d.shape();
    let n = raw.a.len();
    let a = matrix_from_rows("A", &raw.a, 0)?;
    let b = matrix_from_rows("B", &raw.b, m)?;
    let c = matrix_from_rows("C", &raw.c, n)?;
    if c.nrows() != p {
        return Err(Error::dim(format!("C has {} rows but D has {p}", c.nrows())));
    }
    LtiSystem::new(a, b, c, d)
}

pub fn system_to_json(sys: &LtiSystem) -> String {
    let raw = SystemJson {
        a: matrix_to_rows(sys.a()),
        b: matrix_to_rows(sys.b()),
        c: matrix_to_rows(sys.c()),
        d: matrix_to_rows(sys.d()),
    };
    serde_json::to_string_pretty(&raw).expect("serializable")
}

pub fn read_system(path: &Path) -> Result<LtiSystem> {
    system_from_json(&std::fs::read_to_string(path)?)
}

#[derive(Serialize, Deserialize)]
struct WeightsJson {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
}

pub fn weights_from_json(text: &str) -> Result<LqrWeights> {
    let raw: WeightsJson = serde_json::from_str(text)?;
    Ok(LqrWeights::new(matrix_from_rows("Q", &raw.q, 0)?, matrix_from_rows("R", &raw.r, 0)?))
}

pub fn read_weights(path: &Path) -> Result<LqrWeights> {
    weights_from_json(&std::fs::read_to_string(path)?)
}

#[derive(Serialize)]
pub struct GainJson {
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
}

pub fn gain_to_json(k: &DMatrix<f64>, p: &DMatrix<f64>) -> String {
    serde_json::to_string_pretty(&GainJson { k: matrix_to_rows(k), p: matrix_to_rows(p) }).expect("serializable")
}

/// One row of a trajectory table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub u: Option<DVector<f64>>,
    pub y: Option<DVector<f64>>,
    pub x: Option<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryTable {
    pub origin: i64,
    pub m: usize,
    pub p: usize,
    pub n: usize,
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Copy, PartialEq)]
enum Col {
    U(usize),
    Y(usize),
    X(usize),
}

fn parse_header(fields: &csv::StringRecord) -> Result<(Vec<Col>, usize, usize, usize)> {
    let perr = |msg: String| Error::Parse { line: 1, msg };
    if fields.get(0).map(str::trim) != Some("t") {
        return Err(perr("first column must be `t`".into()));
    }
    let mut cols = Vec::new();
    let (mut m, mut p, mut n) = (0, 0, 0);
    for f in fields.iter().skip(1) {
        let f = f.trim();
        let (kind, idx) = f.split_at(f.len().min(1));
        let idx: usize = idx
            .parse()
            .map_err(|_| perr(format!("unrecognized column `{f}`")))?;
        let (counter, col) = match kind {
            "u" => (&mut m, Col::U(idx - 1)),
            "y" => (&mut p, Col::Y(idx - 1)),
            "x" => (&mut n, Col::X(idx - 1)),
            _ => return Err(perr(format!("unrecognized column `{f}`"))),
        };
        if idx != *counter + 1 {
            return Err(perr(format!("column `{f}` out of order")));
        }
        *counter += 1;
        cols.push(col);
    }
    if m == 0 {
        return Err(perr("no input columns".into()));
    }
    Ok((cols, m, p, n))
}

fn group(values: &[Option<f64>], line: usize, what: &str) -> Result<Option<DVector<f64>>> {
    if values.is_empty() {
        return Ok(None);
    }
    let present = values.iter().filter(|v| v.is_some()).count();
    if present == 0 {
        return Ok(None);
    }
    if present != values.len() {
        return Err(Error::Parse {
            line,
            msg: format!("{what} fields are partially missing"),
        });
    }
    Ok(Some(DVector::from_iterator(values.len(), values.iter().map(|v| v.unwrap()))))
}

pub fn parse_trajectory_csv(text: &str) -> Result<TrajectoryTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .clone();
    let (cols, m, p, n) = parse_header(&header)?;

    let mut origin = None;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let t: i64 = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Parse { line, msg: "time index must be an integer".into() })?;
        match origin {
            None => origin = Some(t),
            Some(o) if t != o + rows.len() as i64 => {
                return Err(Error::Parse { line, msg: format!("time {t} is not consecutive") });
            }
            _ => {}
        }
        let mut u = vec![None; m];
        let mut y = vec![None; p];
        let mut x = vec![None; n];
        for (col, field) in cols.iter().zip(rec.iter().skip(1)) {
            let v = if field.is_empty() {
                None
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Parse { line, msg: format!("`{field}` is not a number") })?;
                (!v.is_nan()).then_some(v)
            };
            if matches!(v, Some(v) if !v.is_finite()) {
                return Err(Error::Parse { line, msg: "infinite value".into() });
            }
            match *col {
                Col::U(k) => u[k] = v,
                Col::Y(k) => y[k] = v,
                Col::X(k) => x[k] = v,
            }
        }
        rows.push(TableRow {
            u: group(&u, line, "input")?,
            y: group(&y, line, "output")?,
            x: group(&x, line, "state")?,
        });
    }
    let origin = origin.ok_or(Error::Parse { line: 2, msg: "no data rows".into() })?;
    Ok(TrajectoryTable { origin, m, p, n, rows })
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryTable> {
    parse_trajectory_csv(&std::fs::read_to_string(path)?)
}

impl TrajectoryTable {
    /// Table of a simulated run. With `with_states`, state columns are added and
    /// a final row carries the terminal state only.
    pub fn from_trajectory(traj: &StateTrajectory, with_states: bool) -> Self {
        let m = traj.u.first().map_or(0, |u| u.len());
        let p = traj.y.first().map_or(0, |y| y.len());
        let n = if with_states { traj.final_state.len() } else { 0 };
        let mut rows: Vec<TableRow> = (0..traj.len())
            .map(|t| TableRow {
                u: Some(traj.u[t].clone()),
                y: Some(traj.y[t].clone()),
                x: with_states.then(|| traj.x[t].clone()),
            })
            .collect();
        if with_states {
            rows.push(TableRow { u: None, y: None, x: Some(traj.final_state.clone()) });
        }
        Self { origin: traj.start_time, m, p, n, rows }
    }

    /// Blanks input and output of the given time steps; states are kept.
    pub fn knock_out(&mut self, times: &[i64]) {
        for &t in times {
            if let Some(r) = usize::try_from(t - self.origin).ok().and_then(|i| self.rows.get_mut(i)) {
                r.u = None;
                r.y = None;
            }
        }
    }

    /// Input/output record; a step is missing unless both signals are present.
    pub fn to_corrupted(&self) -> Result<CorruptedTrajectory> {
        if self.p == 0 {
            return Err(Error::invalid("trajectory has no output columns"));
        }
        let entries: Vec<Sample> = self
            .rows
            .iter()
            .map(|r| match (&r.u, &r.y) {
                (Some(u), Some(y)) => Some((u.clone(), y.clone())),
                _ => None,
            })
            .collect();
        CorruptedTrajectory::new(self.origin, self.m, self.p, entries)
    }

    /// Input/state experiment `(x(0..T), u(0..T−1))`: every row has a state and
    /// all rows except the last have an input.
    pub fn to_experiment(&self) -> Result<(SignalSegment, SignalSegment)> {
        if self.n == 0 {
            return Err(Error::invalid("experiment has no state columns"));
        }
        let xs = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.x.clone().ok_or(Error::Parse { line: i + 2, msg: "missing state".into() })
            })
            .collect::<Result<Vec<_>>>()?;
        let t_len = self.rows.len().saturating_sub(1);
        let us = self.rows[..t_len]
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.u.clone().ok_or(Error::Parse { line: i + 2, msg: "missing input".into() })
            })
            .collect::<Result<Vec<_>>>()?;
        if us.is_empty() {
            return Err(Error::invalid("experiment needs at least two rows"));
        }
        Ok((SignalSegment::new(xs, self.origin)?, SignalSegment::new(us, self.origin)?))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for (prefix, count) in [("u", self.m), ("y", self.p), ("x", self.n)] {
            for k in 1..=count {
                let _ = write!(out, ",{prefix}{k}");
            }
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(out, "{}", self.origin + i as i64);
            for (v, count) in [(&r.u, self.m), (&r.y, self.p), (&r.x, self.n)] {
                for k in 0..count {
                    match v {
                        Some(v) => {
                            let _ = write!(out, ",{}", v[k]);
                        }
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}
