//! Data matrices built from one or several input/output experiments, and the
//! operations the fundamental lemma makes available on them: rank conditions,
//! trajectory synthesis, membership tests and data-driven simulation.
//!
//! Trajectories of length `L` are handled in stacked (time-major) form:
//! `ū = (u(0), …, u(L−1))` of length `mL` and `ȳ` of length `pL`, which is also
//! the row layout of every data matrix column.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::{mosaic_hankel, SignalSegment};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::lti::{LtiSystem, StateTrajectory};

/// Default relative residual above which a past window is declared inconsistent.
pub const DEFAULT_PAST_TOL: f64 = 1e-6;

/// Time-aligned input and output segment of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct IoSegment {
    input: SignalSegment,
    output: SignalSegment,
}

impl IoSegment {
    pub fn new(input: SignalSegment, output: SignalSegment) -> Result<Self> {
        if input.len() != output.len() {
            return Err(Error::dim(format!(
                "input has {} samples but output has {}",
                input.len(),
                output.len()
            )));
        }
        if input.start_time() != output.start_time() {
            return Err(Error::invalid(format!(
                "input starts at t={} but output at t={}",
                input.start_time(),
                output.start_time()
            )));
        }
        Ok(Self { input, output })
    }

    /// Input/output part of a simulated trajectory.
    pub fn from_trajectory(traj: &StateTrajectory) -> Result<Self> {
        Self::new(
            SignalSegment::new(traj.u.clone(), traj.start_time)?,
            SignalSegment::new(traj.y.clone(), traj.start_time)?,
        )
    }

    pub fn input(&self) -> &SignalSegment {
        &self.input
    }

    pub fn output(&self) -> &SignalSegment {
        &self.output
    }

    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    pub fn start_time(&self) -> i64 {
        self.input.start_time()
    }
}

/// Stacked input and output mosaic-Hankel matrices of depth `L`.
#[derive(Clone, Debug)]
pub struct DataDictionary {
    segments: Vec<IoSegment>,
    depth: usize,
    m: usize,
    p: usize,
    data_matrix: DMatrix<f64>,
}

impl DataDictionary {
    pub fn depth(&self) -> usize {
        self.depth
    }
    pub fn input_dim(&self) -> usize {
        self.m
    }
    pub fn output_dim(&self) -> usize {
        self.p
    }
    pub fn segments(&self) -> &[IoSegment] {
        &self.segments
    }
    /// `(m + p)L × N`, input rows on top.
    pub fn data_matrix(&self) -> &DMatrix<f64> {
        &self.data_matrix
    }
    pub fn columns(&self) -> usize {
        self.data_matrix.ncols()
    }
    pub fn input_rows(&self) -> DMatrix<f64> {
        self.data_matrix.rows(0, self.m * self.depth).into_owned()
    }
    pub fn output_rows(&self) -> DMatrix<f64> {
        self.data_matrix.rows(self.m * self.depth, self.p * self.depth).into_owned()
    }
    pub fn rank(&self, tol: f64) -> usize {
        linalg::numerical_rank(&self.data_matrix, tol)
    }
}

/// Split of a depth-`L` window into known past samples and samples to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub past_len: usize,
    pub future_len: usize,
}

impl WindowSpec {
    pub fn for_depth(depth: usize, past_len: usize) -> Result<Self> {
        if past_len >= depth {
            return Err(Error::invalid(format!(
                "past length {past_len} leaves no room in a depth-{depth} window"
            )));
        }
        Ok(Self { past_len, future_len: depth - past_len })
    }

    pub fn depth(&self) -> usize {
        self.past_len + self.future_len
    }
}

pub fn build_data_matrix(io_segments: &[IoSegment], depth: usize) -> Result<DataDictionary> {
    if io_segments.is_empty() {
        return Err(Error::invalid("data matrix needs at least one experiment"));
    }
    let inputs: Vec<SignalSegment> = io_segments.iter().map(|s| s.input.clone()).collect();
    let outputs: Vec<SignalSegment> = io_segments.iter().map(|s| s.output.clone()).collect();
    let hu = mosaic_hankel(&inputs, depth)?;
    let hy = mosaic_hankel(&outputs, depth)?;
    let data_matrix = linalg::vconcat(&[&hu.assembled, &hy.assembled])?;
    Ok(DataDictionary {
        segments: io_segments.to_vec(),
        depth,
        m: inputs[0].dim(),
        p: outputs[0].dim(),
        data_matrix,
    })
}

/// `[H_1(x_[0,T_i−L]) blocks ; mosaic H_L(u)]` for simulated experiments.
pub fn rank_condition_matrix(
    sys: &LtiSystem,
    experiments: &[StateTrajectory],
    depth: usize,
) -> Result<DMatrix<f64>> {
    if experiments.is_empty() {
        return Err(Error::invalid("rank condition needs at least one experiment"));
    }
    let n = sys.n();
    let mut state_blocks = Vec::with_capacity(experiments.len());
    let mut inputs = Vec::with_capacity(experiments.len());
    for (i, traj) in experiments.iter().enumerate() {
        if traj.len() < depth {
            return Err(Error::DepthExceedsLength { depth, len: traj.len(), index: i });
        }
        if let Some(x) = traj.x.iter().find(|x| x.len() != n) {
            return Err(Error::dim(format!(
                "experiment {i} has states of dimension {}, expected {n}",
                x.len()
            )));
        }
        let cols = traj.len() - depth + 1;
        let mut block = DMatrix::zeros(n, cols);
        for (c, x) in traj.x.iter().take(cols).enumerate() {
            block.set_column(c, x);
        }
        state_blocks.push(block);
        inputs.push(SignalSegment::new(traj.u.clone(), traj.start_time)?);
    }
    let hu = mosaic_hankel(&inputs, depth)?;
    if hu.assembled.nrows() != sys.m() * depth {
        return Err(Error::dim(format!(
            "inputs have dimension {}, system expects {}",
            inputs[0].dim(),
            sys.m()
        )));
    }
    let states = linalg::hconcat(&state_blocks, n)?;
    linalg::vconcat(&[&states, &hu.assembled])
}

/// True iff the initial-state/input matrix has full row rank `n + mL`.
pub fn check_rank_condition(
    sys: &LtiSystem,
    experiments: &[StateTrajectory],
    depth: usize,
    tol: f64,
) -> Result<bool> {
    let m = rank_condition_matrix(sys, experiments, depth)?;
    Ok(linalg::numerical_rank(&m, tol) == sys.n() + sys.m() * depth)
}

/// `data_matrix · g`, split into stacked input and output.
pub fn synthesize_trajectory(dict: &DataDictionary, g: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    if g.len() != dict.columns() {
        return Err(Error::dim(format!(
            "coefficient vector has length {}, dictionary has {} columns",
            g.len(),
            dict.columns()
        )));
    }
    let w = &dict.data_matrix * g;
    let mu = dict.m * dict.depth;
    Ok((w.rows(0, mu).into_owned(), w.rows(mu, dict.p * dict.depth).into_owned()))
}

#[derive(Clone, Debug)]
pub struct Membership {
    pub is_member: bool,
    /// `‖D g − w‖ / ‖w‖` (absolute when `w = 0`).
    pub residual: f64,
    /// Minimum-norm least-squares coefficients.
    pub g: DVector<f64>,
}

pub fn is_system_trajectory(
    dict: &DataDictionary,
    u: &DVector<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> Result<Membership> {
    let (mu, py) = (dict.m * dict.depth, dict.p * dict.depth);
    if u.len() != mu || y.len() != py {
        return Err(Error::dim(format!(
            "expected stacked input of length {mu} and output of length {py}, got {} and {}",
            u.len(),
            y.len()
        )));
    }
    let w = linalg::stack_vectors(&[u.clone(), y.clone()]);
    let g = linalg::lstsq_min_norm_vec(&dict.data_matrix, &w, DEFAULT_RANK_TOL)?;
    let residual = linalg::relative_residual((&dict.data_matrix * &g - &w).norm(), w.norm());
    Ok(Membership { is_member: residual <= tol, residual, g })
}

/// Row selection of a depth-`L` dictionary for a window with `past` known outputs
/// and `steps` samples to complete. Returns (known rows, unknown rows).
fn window_rows(dict: &DataDictionary, past: usize, steps: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, p, depth) = (dict.m, dict.p, dict.depth);
    let d = &dict.data_matrix;
    let n_in = m * (past + steps);
    let mut known = DMatrix::zeros(n_in + p * past, d.ncols());
    known.rows_mut(0, n_in).copy_from(&d.rows(0, n_in));
    known
        .rows_mut(n_in, p * past)
        .copy_from(&d.rows(m * depth, p * past));
    let unknown = d.rows(m * depth + p * past, p * steps).into_owned();
    (known, unknown)
}

/// Continues a trajectory using only the data dictionary.
///
/// The past window length `P = past_u.len()` must be smaller than the depth `L`;
/// each solve completes `L − P` outputs (one for the usual `P = L − 1`). The
/// known rows of every window are solved for a minimum-norm `g`, and the unknown
/// outputs are read off the remaining rows. The result is unique when the past
/// window pins the state, e.g. `P ≥ n` for an observable system.
pub fn datadriven_simulate(
    dict: &DataDictionary,
    past_u: &[DVector<f64>],
    past_y: &[DVector<f64>],
    future_u: &[DVector<f64>],
    tol: f64,
) -> Result<Vec<DVector<f64>>> {
    let window = WindowSpec::for_depth(dict.depth, past_u.len())?;
    if past_y.len() != past_u.len() {
        return Err(Error::dim(format!(
            "past has {} inputs but {} outputs",
            past_u.len(),
            past_y.len()
        )));
    }
    let check = |v: &[DVector<f64>], dim: usize, what: &str| -> Result<()> {
        match v.iter().position(|s| s.len() != dim) {
            Some(t) => Err(Error::dim(format!(
                "{what} sample {t} has dimension {}, expected {dim}",
                v[t].len()
            ))),
            None => Ok(()),
        }
    };
    check(past_u, dict.m, "past input")?;
    check(past_y, dict.p, "past output")?;
    check(future_u, dict.m, "future input")?;

    let past = window.past_len;
    let mut u_hist: Vec<DVector<f64>> = past_u.to_vec();
    let mut y_hist: Vec<DVector<f64>> = past_y.to_vec();
    let mut out = Vec::with_capacity(future_u.len());

    let (full_known, full_unknown) = window_rows(dict, past, window.future_len);
    let full_pinv = linalg::pinv(&full_known, DEFAULT_RANK_TOL)?;

    let mut next = 0;
    while next < future_u.len() {
        let steps = window.future_len.min(future_u.len() - next);
        let h = u_hist.len();
        let mut known_u: Vec<DVector<f64>> = u_hist[h - past..].to_vec();
        known_u.extend_from_slice(&future_u[next..next + steps]);
        let mut parts = known_u;
        parts.extend_from_slice(&y_hist[h - past..]);
        let w = linalg::stack_vectors(&parts);

        let (g, known_rows, unknown_rows) = if steps == window.future_len {
            (&full_pinv * &w, None, None)
        } else {
            let (k, u) = window_rows(dict, past, steps);
            let g = linalg::lstsq_min_norm_vec(&k, &w, DEFAULT_RANK_TOL)?;
            (g, Some(k), Some(u))
        };
        let known = known_rows.as_ref().unwrap_or(&full_known);
        let unknown = unknown_rows.as_ref().unwrap_or(&full_unknown);

        let residual = linalg::relative_residual((known * &g - &w).norm(), w.norm());
        if !(residual <= tol) {
            return Err(Error::InconsistentPast { residual, tol });
        }
        let y_new = unknown * &g;
        for (s, y) in linalg::unstack_vector(&y_new, dict.p).into_iter().enumerate() {
            u_hist.push(future_u[next + s].clone());
            y_hist.push(y.clone());
            out.push(y);
        }
        next += steps;
    }
    Ok(out)
}
