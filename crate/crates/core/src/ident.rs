//! Identification from a single record with missing samples.
//!
//! The record is cut into its complete stretches, the stretches are used
//! jointly as a mosaic data dictionary, the impulse response is completed by
//! data-driven simulation and a state-space model is realized from it with
//! Ho-Kalman.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, StageExt};
use crate::hankel::{is_collectively_pe, SignalSegment};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::lti::{markov_parameters, LtiSystem};
use crate::willems::{build_data_matrix, datadriven_simulate, IoSegment, DEFAULT_PAST_TOL};

/// One time step of a record: both signals present, or the step is missing.
pub type Sample = Option<(DVector<f64>, DVector<f64>)>;

#[derive(Clone, Debug, PartialEq)]
pub struct CorruptedTrajectory {
    origin: i64,
    m: usize,
    p: usize,
    entries: Vec<Sample>,
}

impl CorruptedTrajectory {
    pub fn new(origin: i64, m: usize, p: usize, entries: Vec<Sample>) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::invalid("input and output dimensions must be positive"));
        }
        for (t, e) in entries.iter().enumerate() {
            if let Some((u, y)) = e {
                if u.len() != m || y.len() != p {
                    return Err(Error::dim(format!(
                        "sample at t={} has dimensions ({}, {}), expected ({m}, {p})",
                        origin + t as i64,
                        u.len(),
                        y.len()
                    )));
                }
            }
        }
        if entries.iter().all(Option::is_none) {
            return Err(Error::NoUsableData("record has no present samples".into()));
        }
        Ok(Self { origin, m, p, entries })
    }

    /// Scalar record; `None` marks a missing step.
    pub fn from_scalars(origin: i64, u: &[Option<f64>], y: &[Option<f64>]) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::dim("input and output columns differ in length"));
        }
        let entries = u
            .iter()
            .zip(y)
            .map(|(u, y)| match (u, y) {
                (Some(u), Some(y)) => Some((DVector::from_element(1, *u), DVector::from_element(1, *y))),
                _ => None,
            })
            .collect();
        Self::new(origin, 1, 1, entries)
    }

    /// Complete record of a simulated input/output trajectory.
    pub fn from_segment(seg: &IoSegment) -> Result<Self> {
        let entries = seg
            .input()
            .samples()
            .iter()
            .zip(seg.output().samples())
            .map(|(u, y)| Some((u.clone(), y.clone())))
            .collect();
        Self::new(seg.start_time(), seg.input().dim(), seg.output().dim(), entries)
    }

    /// Marks the given absolute time indices as missing.
    pub fn knock_out(&mut self, times: &[i64]) {
        for &t in times {
            let idx = t - self.origin;
            if idx >= 0 && (idx as usize) < self.entries.len() {
                self.entries[idx as usize] = None;
            }
        }
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn entries(&self) -> &[Sample] {
        &self.entries
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    pub segments: Vec<IoSegment>,
    /// `(start, length)` of complete runs shorter than the minimum length.
    pub discarded: Vec<(i64, usize)>,
}

/// Maximal complete runs of the record, in time order.
pub fn segment_trajectory(ct: &CorruptedTrajectory, min_len: usize) -> Result<Segmentation> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, e) in ct.entries.iter().enumerate() {
        match (e.is_some(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, ct.entries.len() - s));
    }

    let mut segments = Vec::new();
    let mut discarded = Vec::new();
    for (s, len) in runs {
        let t0 = ct.origin + s as i64;
        if len < min_len.max(1) {
            discarded.push((t0, len));
            continue;
        }
        let (us, ys): (Vec<_>, Vec<_>) = ct.entries[s..s + len]
            .iter()
            .map(|e| e.clone().expect("run contains present samples only"))
            .unzip();
        segments.push(IoSegment::new(SignalSegment::new(us, t0)?, SignalSegment::new(ys, t0)?)?);
    }
    if segments.is_empty() {
        return Err(Error::NoUsableData(format!(
            "no complete run of length ≥ {min_len} (runs found: {})",
            discarded.len()
        )));
    }
    Ok(Segmentation { segments, discarded })
}

/// Behavioral order estimate `rank([H_L(u); H_L(y)]) − mL`.
///
/// Each depth `L` uses the segments of length at least `L`. The estimate is
/// taken at the largest `L ≤ max_depth` whose dictionary has at least
/// `(m + p)L` columns, and must agree with the estimate at `L − 1`.
pub fn estimate_order(segments: &[IoSegment], max_depth: usize, tol: f64) -> Result<usize> {
    let first = segments
        .first()
        .ok_or_else(|| Error::NoUsableData("no segments for order estimation".into()))?;
    let (m, p) = (first.input().dim(), first.output().dim());
    let usable = |depth: usize| -> Vec<IoSegment> { segments.iter().filter(|s| s.len() >= depth).cloned().collect() };
    let columns = |depth: usize| -> usize { usable(depth).iter().map(|s| s.len() + 1 - depth).sum() };
    let depth = (1..=max_depth)
        .rev()
        .find(|&l| columns(l) >= (m + p) * l)
        .ok_or_else(|| Error::OrderUndetermined("too few samples for any depth".into()))?;
    if depth < 2 {
        return Err(Error::OrderUndetermined(format!(
            "need two feasible depths to confirm the estimate, only depth {depth} available"
        )));
    }
    let estimate = |l: usize| -> Result<usize> {
        let dict = build_data_matrix(&usable(l), l)?;
        Ok(dict.rank(tol).saturating_sub(m * l))
    };
    let (hi, lo) = (estimate(depth)?, estimate(depth - 1)?);
    if hi != lo {
        return Err(Error::OrderUndetermined(format!(
            "estimate {lo} at depth {} but {hi} at depth {depth}",
            depth - 1
        )));
    }
    Ok(hi)
}

/// Impulse response `(D, CB, CAB, …)` completed from data, one run per input channel.
///
/// Uses dictionaries of depth `n + 1` built from the segments long enough to
/// enter a depth `2n + 1` excitation test; those inputs must be collectively
/// persistently exciting of order `2n + 1`.
pub fn recover_markov_parameters(
    segments: &[IoSegment],
    n: usize,
    count: usize,
    tol: f64,
) -> Result<Vec<DMatrix<f64>>> {
    if count == 0 {
        return Err(Error::invalid("Markov parameter count must be at least 1"));
    }
    let first = segments
        .first()
        .ok_or_else(|| Error::NoUsableData("no segments for impulse recovery".into()))?;
    let (m, p) = (first.input().dim(), first.output().dim());
    let depth = n + 1;
    let required = n + depth;
    let usable: Vec<IoSegment> = segments.iter().filter(|s| s.len() >= required).cloned().collect();
    if usable.is_empty() {
        return Err(Error::InsufficientExcitation { required });
    }
    let inputs: Vec<SignalSegment> = usable.iter().map(|s| s.input().clone()).collect();
    if !is_collectively_pe(&inputs, required, tol)? {
        return Err(Error::InsufficientExcitation { required });
    }
    let dict = build_data_matrix(&usable, depth)?;

    let mut markov = vec![DMatrix::zeros(p, m); count];
    for j in 0..m {
        let mut future_u = vec![DVector::zeros(m); count];
        future_u[0][j] = 1.0;
        let y = datadriven_simulate(
            &dict,
            &vec![DVector::zeros(m); n],
            &vec![DVector::zeros(p); n],
            &future_u,
            DEFAULT_PAST_TOL,
        )?;
        for (k, yk) in y.iter().enumerate() {
            markov[k].set_column(j, yk);
        }
    }
    Ok(markov)
}

/// Ho-Kalman realization of order `order` from `(D, CB, CAB, …)`.
///
/// The Markov parameters after `D` fill a block Hankel matrix; its truncated SVD
/// is split as `Σ^{1/2}` into observability and controllability factors
/// (balanced form). `A` comes from the one-block-shifted Hankel.
pub fn ho_kalman(markov: &[DMatrix<f64>], order: usize, tol: f64) -> Result<LtiSystem> {
    let d = markov
        .first()
        .ok_or_else(|| Error::invalid("Ho-Kalman needs at least one Markov parameter"))?
        .clone();
    let (p, m) = d.shape();
    if let Some(k) = markov.iter().position(|h| h.shape() != (p, m)) {
        return Err(Error::dim(format!("Markov parameter {k} is not {p}x{m}")));
    }
    if order == 0 {
        return LtiSystem::static_gain(d);
    }
    if markov.len() < 2 * order + 1 {
        return Err(Error::invalid(format!(
            "order {order} needs at least {} Markov parameters, got {}",
            2 * order + 1,
            markov.len()
        )));
    }
    let avail = markov.len() - 1;
    // block_rows + block_cols = avail, so the shifted Hankel still fits the data
    let block_rows = avail.div_ceil(2);
    let block_cols = avail / 2;
    let build = |shift: usize| {
        let mut h = DMatrix::zeros(block_rows * p, block_cols * m);
        for r in 0..block_rows {
            for c in 0..block_cols {
                h.view_mut((r * p, c * m), (p, m)).copy_from(&markov[1 + r + c + shift]);
            }
        }
        h
    };
    let (h0, h1) = (build(0), build(1));

    let dec = linalg::svd(&h0)?;
    let rank = linalg::rank_from_singular_values(&dec.singular_values, tol);
    if rank < order {
        return Err(Error::OrderInfeasible { rank, order });
    }
    if rank > order {
        log::warn!("Ho-Kalman: Hankel rank {rank} exceeds requested order {order}; truncating");
    }
    let u_n = dec.u.columns(0, order).into_owned();
    let vt_n = dec.v.columns(0, order).transpose();
    let sqrt_s = DVector::from_iterator(order, dec.singular_values.iter().take(order).map(|s| s.sqrt()));
    let inv_sqrt = sqrt_s.map(|s| 1.0 / s);
    let obs = &u_n * DMatrix::from_diagonal(&sqrt_s);
    let ctr = DMatrix::from_diagonal(&sqrt_s) * &vt_n;
    let a = DMatrix::from_diagonal(&inv_sqrt) * u_n.transpose() * &h1 * vt_n.transpose() * DMatrix::from_diagonal(&inv_sqrt);
    let b = ctr.columns(0, m).into_owned();
    let c = obs.rows(0, p).into_owned();
    LtiSystem::new(a, b, c, d)
}

#[derive(Clone, Debug)]
pub struct IdentifyOptions {
    /// Complete runs shorter than this are dropped before anything else.
    pub min_segment_len: usize,
    /// Largest depth used for order estimation; defaults to the longest kept run.
    pub max_depth: Option<usize>,
    /// Reject estimated orders above this bound.
    pub max_order: Option<usize>,
    /// Number of Markov parameters to recover; defaults to `2n + 1`.
    pub markov_count: Option<usize>,
    pub rank_tol: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            min_segment_len: 2,
            max_depth: None,
            max_order: None,
            markov_count: None,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdentificationResult {
    pub system: LtiSystem,
    pub order: usize,
    pub markov: Vec<DMatrix<f64>>,
    /// `(start, length)` of the runs used.
    pub segment_report: Vec<(i64, usize)>,
    pub discarded: Vec<(i64, usize)>,
    /// Largest entrywise mismatch between recovered and realized Markov parameters.
    pub residual: f64,
}

pub fn identify(ct: &CorruptedTrajectory, opts: &IdentifyOptions) -> Result<IdentificationResult> {
    let seg = segment_trajectory(ct, opts.min_segment_len).stage("segmentation")?;
    let longest = seg.segments.iter().map(IoSegment::len).max().unwrap_or(0);
    let max_depth = opts.max_depth.unwrap_or(longest).min(longest);
    let order = estimate_order(&seg.segments, max_depth, opts.rank_tol).stage("order estimation")?;
    if let Some(max) = opts.max_order {
        if order > max {
            return Err(Error::OrderUndetermined(format!(
                "estimated order {order} exceeds the maximum {max}"
            )))
            .stage("order estimation");
        }
    }
    let count = opts.markov_count.unwrap_or(2 * order + 1).max(2 * order + 1);
    let markov = recover_markov_parameters(&seg.segments, order, count, opts.rank_tol)
        .stage("impulse response recovery")?;
    let system = ho_kalman(&markov, order, opts.rank_tol).stage("realization")?;
    let realized = markov_parameters(&system, markov.len()).stage("realization")?;
    let residual = markov
        .iter()
        .zip(&realized)
        .map(|(a, b)| (a - b).abs().max())
        .fold(0.0, f64::max);
    Ok(IdentificationResult {
        system,
        order,
        markov,
        segment_report: seg.segments.iter().map(|s| (s.start_time(), s.len())).collect(),
        discarded: seg.discarded,
        residual,
    })
}

/// The 20-sample record with steps 5, 12 and 19 missing.
pub fn missing_data_record() -> CorruptedTrajectory {
    let u = [
        Some(1.0), Some(0.0), Some(2.0), Some(-1.0), Some(0.0), None, Some(1.0), Some(1.0), Some(-1.0), Some(-5.0),
        Some(0.0), Some(-1.0), None, Some(1.0), Some(-6.0), Some(2.0), Some(-2.0), Some(0.0), Some(1.0), None,
    ];
    let y = [
        Some(3.0), Some(3.0), Some(7.0), Some(6.0), Some(11.0), None, Some(18.0), Some(21.0), Some(23.0), Some(24.0),
        Some(33.0), Some(31.0), None, Some(30.0), Some(20.0), Some(26.0), Some(14.0), Some(10.0), Some(3.0), None,
    ];
    CorruptedTrajectory::from_scalars(0, &u, &y).expect("valid record")
}
