//! Infinite-horizon LQR from input/state data of one or many experiments.
//!
//! The stabilizing Riccati solution is the maximizer of
//!
//! ```text
//! maximize tr P  subject to  P = Pᵀ ⪰ 0,  L(P) ⪯ 0
//! L(P) = X₋ᵀ P X₋ − X₊ᵀ P X₊ − X₋ᵀ Q X₋ − U₋ᵀ R U₋
//! ```
//!
//! No semidefinite solver is embedded. When `[X₋; U₋]` has full row rank the
//! pair `(A, B)` is determined exactly by the data, so the maximizer is computed
//! as the stabilizing Riccati solution and then certified against the data-side
//! constraint. The gain comes from a right inverse `X†` of `X₋` with
//! `L(P) X† = 0`, as `K = U₋ X†`. [`export_sdp`] writes the program in SDPA
//! sparse format for an external cross-check.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::hankel::{is_collectively_pe, SignalSegment};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::lti::{simulate, LtiSystem, StateTrajectory};

pub const DEFAULT_CERT_TOL: f64 = 1e-6;
pub const DEFAULT_RICCATI_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Doubling iterations before falling back to fixed-point iteration.
const DOUBLING_MAX_ITER: usize = 100;

/// Concatenated data matrices `X₋`, `X₊`, `U₋` of several experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentBatch {
    xm: DMatrix<f64>,
    xp: DMatrix<f64>,
    um: DMatrix<f64>,
    offsets: Vec<usize>,
}

impl ExperimentBatch {
    /// States `x(0..T−1)`, all experiments side by side.
    pub fn xm(&self) -> &DMatrix<f64> {
        &self.xm
    }
    /// Shifted states `x(1..T)`.
    pub fn xp(&self) -> &DMatrix<f64> {
        &self.xp
    }
    pub fn um(&self) -> &DMatrix<f64> {
        &self.um
    }
    /// First column of each experiment.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
    pub fn n(&self) -> usize {
        self.xm.nrows()
    }
    pub fn m(&self) -> usize {
        self.um.nrows()
    }
    pub fn columns(&self) -> usize {
        self.xm.ncols()
    }
    /// `[X₋; U₋]`
    pub fn state_input_matrix(&self) -> DMatrix<f64> {
        linalg::vconcat(&[&self.xm, &self.um]).expect("equal column counts")
    }
}

/// Builds the batch from `(states x(0..T_i), inputs u(0..T_i−1))` pairs.
pub fn assemble_batch(experiments: &[(SignalSegment, SignalSegment)]) -> Result<ExperimentBatch> {
    let (x0, u0) = experiments
        .first()
        .ok_or_else(|| Error::invalid("batch needs at least one experiment"))?;
    let (n, m) = (x0.dim(), u0.dim());
    let total: usize = experiments.iter().map(|(_, u)| u.len()).sum();
    let mut xm = DMatrix::zeros(n, total);
    let mut xp = DMatrix::zeros(n, total);
    let mut um = DMatrix::zeros(m, total);
    let mut offsets = Vec::with_capacity(experiments.len());
    let mut col = 0;
    for (i, (xs, us)) in experiments.iter().enumerate() {
        if xs.dim() != n || us.dim() != m {
            return Err(Error::dim(format!(
                "experiment {i} has (state, input) dimensions ({}, {}), expected ({n}, {m})",
                xs.dim(),
                us.dim()
            )));
        }
        if xs.len() != us.len() + 1 {
            return Err(Error::dim(format!(
                "experiment {i} has {} states for {} inputs; expected one more state than inputs",
                xs.len(),
                us.len()
            )));
        }
        offsets.push(col);
        for t in 0..us.len() {
            xm.set_column(col + t, &xs.samples()[t]);
            xp.set_column(col + t, &xs.samples()[t + 1]);
            um.set_column(col + t, &us.samples()[t]);
        }
        col += us.len();
    }
    Ok(ExperimentBatch { xm, xp, um, offsets })
}

/// Batch from simulated experiments (states including the terminal one).
pub fn batch_from_trajectories(experiments: &[StateTrajectory]) -> Result<ExperimentBatch> {
    let pairs = experiments
        .iter()
        .map(|t| {
            Ok((
                SignalSegment::new(t.states_with_final(), t.start_time)?,
                SignalSegment::new(t.u.clone(), t.start_time)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_batch(&pairs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqrWeights {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl LqrWeights {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Self {
        Self { q, r }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self::new(DMatrix::identity(n, n), DMatrix::identity(m, m))
    }

    /// Checks `Q = Qᵀ ⪰ 0` and `R = Rᵀ ≻ 0` for state dimension `n` and input dimension `m`.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.q.shape() != (n, n) || self.r.shape() != (m, m) {
            return Err(Error::dim(format!(
                "weights must be Q {n}x{n} and R {m}x{m}, got {:?} and {:?}",
                self.q.shape(),
                self.r.shape()
            )));
        }
        let sym_tol = |a: &DMatrix<f64>| 1e-12 * (1.0 + a.norm());
        if (&self.q - self.q.transpose()).norm() > sym_tol(&self.q)
            || (&self.r - self.r.transpose()).norm() > sym_tol(&self.r)
        {
            return Err(Error::invalid("weights must be symmetric"));
        }
        if n > 0 && linalg::min_sym_eigenvalue(&self.q) < -sym_tol(&self.q) {
            return Err(Error::invalid("Q must be positive semidefinite"));
        }
        if linalg::min_sym_eigenvalue(&self.r) <= 0.0 {
            return Err(Error::invalid("R must be positive definite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DareSolution {
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    /// `‖P − Ric(P)‖_F / ‖P‖_F`
    pub residual: f64,
    pub iterations: usize,
    pub closed_loop_radius: f64,
}

fn riccati_map(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gain = lqr_gain(a, b, r, p)?;
    // AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q = AᵀPA + AᵀPB K + Q
    Ok(linalg::symmetrize(&(a.transpose() * p * a + a.transpose() * p * b * gain + q)))
}

/// `K = −(R + BᵀPB)⁻¹ BᵀPA`
pub fn lqr_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = r + b.transpose() * p * b;
    let rhs = -(b.transpose() * p * a);
    s.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::invalid("R + BᵀPB is singular"))
}

fn riccati_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    let next = riccati_map(a, b, q, r, p)?;
    Ok(linalg::relative_residual((p - next).norm(), p.norm()))
}

/// Structure-preserving doubling; `None` if a step hits a singular matrix or it stalls.
fn doubling(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<(DMatrix<f64>, usize)> {
    let n = a.nrows();
    let r_inv_bt = r.clone().lu().solve(&b.transpose())?;
    let mut ak = a.clone();
    let mut gk = linalg::symmetrize(&(b * r_inv_bt));
    let mut hk = q.clone();
    let eye = DMatrix::<f64>::identity(n, n);
    for it in 1..=DOUBLING_MAX_ITER {
        let w = (&eye + &gk * &hk).lu();
        let w_a = w.solve(&ak)?;
        let w_g = w.solve(&gk)?;
        let a_next = &ak * &w_a;
        let g_next = linalg::symmetrize(&(&gk + &ak * w_g * ak.transpose()));
        let h_next = linalg::symmetrize(&(&hk + ak.transpose() * &hk * &w_a));
        if !h_next.iter().all(|v| v.is_finite()) {
            return None;
        }
        let change = (&h_next - &hk).norm();
        let converged = change <= 1e-15 * h_next.norm().max(f64::MIN_POSITIVE);
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if converged || ak.norm() <= f64::EPSILON {
            return Some((hk, it));
        }
    }
    Some((hk, DOUBLING_MAX_ITER))
}

/// Stabilizing (largest) solution of the discrete algebraic Riccati equation
/// `P = AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q` and the optimal gain.
pub fn dare_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(Error::dim(format!(
            "A must be square and B must have {} rows (got A {:?}, B {:?})",
            a.nrows(),
            a.shape(),
            b.shape()
        )));
    }
    LqrWeights::new(q.clone(), r.clone()).validate(n, b.ncols())?;

    let mut solved = doubling(a, b, q, r).and_then(|(p, it)| {
        let res = riccati_residual(a, b, q, r, &p).ok()?;
        (res <= tol).then_some((p, it, res))
    });
    if solved.is_none() {
        log::debug!("doubling did not reach tolerance, falling back to fixed-point iteration");
        let mut p = q.clone();
        let mut last = f64::INFINITY;
        for it in 1..=max_iter {
            p = riccati_map(a, b, q, r, &p)?;
            last = riccati_residual(a, b, q, r, &p)?;
            if !last.is_finite() {
                break;
            }
            if last <= tol {
                solved = Some((p.clone(), it, last));
                break;
            }
        }
        if solved.is_none() {
            return Err(Error::RiccatiDivergence { iterations: max_iter, residual: last });
        }
    }
    let (p, iterations, residual) = solved.expect("checked above");
    let k = lqr_gain(a, b, r, &p)?;
    let closed_loop_radius = linalg::spectral_radius(&(a + b * &k))?;
    if closed_loop_radius >= 1.0 {
        return Err(Error::NotStabilizing { radius: closed_loop_radius });
    }
    Ok(DareSolution { p, k, residual, iterations, closed_loop_radius })
}

fn check_batch_dims(batch: &ExperimentBatch, p: &DMatrix<f64>, w: &LqrWeights) -> Result<()> {
    let (n, m) = (batch.n(), batch.m());
    if p.shape() != (n, n) || w.q.shape() != (n, n) || w.r.shape() != (m, m) {
        return Err(Error::dim(format!(
            "batch has n={n}, m={m} but P is {:?}, Q is {:?}, R is {:?}",
            p.shape(),
            w.q.shape(),
            w.r.shape()
        )));
    }
    Ok(())
}

fn lmi_terms(p: &DMatrix<f64>, batch: &ExperimentBatch, w: &LqrWeights) -> [DMatrix<f64>; 4] {
    let (xm, xp, um) = (&batch.xm, &batch.xp, &batch.um);
    [
        xm.transpose() * p * xm,
        xp.transpose() * p * xp,
        xm.transpose() * &w.q * xm,
        um.transpose() * &w.r * um,
    ]
}

/// `L(P) = X₋ᵀPX₋ − X₊ᵀPX₊ − X₋ᵀQX₋ − U₋ᵀRU₋`, symmetrized.
pub fn lmi_operator(p: &DMatrix<f64>, batch: &ExperimentBatch, w: &LqrWeights) -> Result<DMatrix<f64>> {
    check_batch_dims(batch, p, w)?;
    let [a, b, c, d] = lmi_terms(p, batch, w);
    Ok(linalg::symmetrize(&(a - b - c - d)))
}

/// Sum of the Frobenius norms of the four terms of `L(P)`.
pub fn lmi_scale(p: &DMatrix<f64>, batch: &ExperimentBatch, w: &LqrWeights) -> Result<f64> {
    check_batch_dims(batch, p, w)?;
    Ok(lmi_terms(p, batch, w).iter().map(|t| t.norm()).sum())
}

fn require_full_row_rank(batch: &ExperimentBatch, tol: f64) -> Result<DMatrix<f64>> {
    let stacked = batch.state_input_matrix();
    let rank = linalg::numerical_rank(&stacked, tol);
    let required = batch.n() + batch.m();
    if rank < required {
        return Err(Error::InsufficientData { rank, required });
    }
    Ok(stacked)
}

/// Least-squares `[A B] = X₊ [X₋; U₋]⁺`, exact on noise-free full-row-rank data.
pub fn identify_ab(batch: &ExperimentBatch, tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let stacked = require_full_row_rank(batch, tol)?;
    let ab_t = linalg::lstsq_min_norm(&stacked.transpose(), &batch.xp.transpose(), tol)?;
    let ab = ab_t.transpose();
    let n = batch.n();
    Ok((ab.columns(0, n).into_owned(), ab.columns(n, batch.m()).into_owned()))
}

#[derive(Clone, Debug)]
pub struct LqrOptions {
    pub rank_tol: f64,
    /// Relative bound on the largest eigenvalue of `L(P)`.
    pub cert_tol: f64,
    pub riccati_tol: f64,
    pub max_iter: usize,
}

impl Default for LqrOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            cert_tol: DEFAULT_CERT_TOL,
            riccati_tol: DEFAULT_RICCATI_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LqrSolution {
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    /// Largest eigenvalue of `L(P)`.
    pub lmi_max_eig: f64,
    pub lmi_scale: f64,
    pub riccati_residual: f64,
    pub closed_loop_radius: f64,
    /// `‖X₋X† − I‖_F + ‖L(P) X†‖_F / max|L(P)|` of the constrained right inverse.
    pub right_inverse_residual: f64,
    pub a_identified: DMatrix<f64>,
    pub b_identified: DMatrix<f64>,
}

pub fn lqr_from_data(batch: &ExperimentBatch, w: &LqrWeights, opts: &LqrOptions) -> Result<LqrSolution> {
    let (n, m) = (batch.n(), batch.m());
    w.validate(n, m)?;
    let (a, b) = identify_ab(batch, opts.rank_tol)?;
    let dare = dare_solve(&a, &b, &w.q, &w.r, opts.riccati_tol, opts.max_iter)?;

    let lmi = lmi_operator(&dare.p, batch, w)?;
    let scale = lmi_scale(&dare.p, batch, w)?;
    let lmi_max_eig = linalg::max_sym_eigenvalue(&lmi);
    if lmi_max_eig > opts.cert_tol * scale {
        return Err(Error::CertificationFailed { lmi_max_eig, scale, tol: opts.cert_tol });
    }

    // At the Riccati solution L(P) = −(U₋ − K X₋)ᵀ (R + BᵀPB) (U₋ − K X₋) has rank m.
    // Its kernel is spanned by the eigenvectors of the T − m eigenvalues closest
    // to zero; a relative rank cut on [X₋; L] would misjudge this when the
    // states of long runs grow large.
    let kernel = lmi_kernel(&lmi, batch.columns() - m);
    let reduced = &batch.xm * &kernel;
    let right_inv = &kernel * linalg::lstsq_min_norm(&reduced, &DMatrix::identity(n, n), opts.rank_tol)?;
    let lmi_norm = lmi.abs().max();
    let right_inverse_residual = (&batch.xm * &right_inv - DMatrix::<f64>::identity(n, n)).norm()
        + if lmi_norm > 0.0 { (&lmi * &right_inv).norm() / lmi_norm } else { 0.0 };
    let k = &batch.um * &right_inv;
    let closed_loop_radius = linalg::spectral_radius(&(&a + &b * &k))?;
    if right_inverse_residual > 1e-6 {
        log::warn!("right inverse residual {right_inverse_residual:.3e}: data gain may differ from the Riccati gain");
    }
    // a nearly uncontrollable pair can give a numerically stabilizing Riccati gain
    // that the data cannot reproduce
    if !(closed_loop_radius < 1.0) {
        return Err(Error::NotStabilizing { radius: closed_loop_radius });
    }

    Ok(LqrSolution {
        p: dare.p,
        k,
        lmi_max_eig,
        lmi_scale: scale,
        riccati_residual: dare.residual,
        closed_loop_radius,
        right_inverse_residual,
        a_identified: a,
        b_identified: b,
    })
}

/// Orthonormal basis of the `dim` eigenvectors of symmetric `l` with the smallest |λ|.
fn lmi_kernel(l: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let eig = l.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..l.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()));
    DMatrix::from_fn(l.nrows(), dim, |r, c| eig.eigenvectors[(r, order[c])])
}

/// Writes `max tr P  s.t.  P ⪰ 0, −L(P) ⪰ 0` in SDPA sparse format.
///
/// Variables are the upper-triangle entries `P_ij (i ≤ j)`, row by row. SDPA
/// minimizes `cᵀx` subject to `Σ F_k x_k − F_0 ⪰ 0`, so `c` selects `−tr P`,
/// block 1 carries `P`, and block 2 carries `−L(P)`, whose constant part
/// `X₋ᵀQX₋ + U₋ᵀRU₋` appears as `F_0 = −(X₋ᵀQX₋ + U₋ᵀRU₋)`.
pub fn export_sdp<W: Write>(batch: &ExperimentBatch, w: &LqrWeights, out: &mut W) -> Result<()> {
    let (n, m, cols) = (batch.n(), batch.m(), batch.columns());
    if n == 0 || cols == 0 {
        return Err(Error::invalid("cannot export an empty batch"));
    }
    if w.q.shape() != (n, n) || w.r.shape() != (m, m) {
        return Err(Error::dim("weights do not match the batch dimensions"));
    }
    let vars: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();

    writeln!(out, "* data-driven LQR: maximize tr P s.t. P >= 0, -L(P) >= 0")?;
    writeln!(out, "* variables: upper triangle of P ({n}x{n}), row-major")?;
    writeln!(out, "{}", vars.len())?;
    writeln!(out, "2")?;
    writeln!(out, "{n} {cols}")?;
    let c: Vec<String> = vars
        .iter()
        .map(|&(i, j)| if i == j { "-1".to_string() } else { "0".to_string() })
        .collect();
    writeln!(out, "{}", c.join(" "))?;

    let constant = (batch.xm.transpose() * &w.q * &batch.xm) + (batch.um.transpose() * &w.r * &batch.um);
    write_block(out, 0, 2, &(-linalg::symmetrize(&constant)))?;
    for (k, &(i, j)) in vars.iter().enumerate() {
        writeln!(out, "{} 1 {} {} 1", k + 1, i + 1, j + 1)?;
        write_block(out, k + 1, 2, &lmi_coefficient(batch, i, j))?;
    }
    Ok(())
}

/// Coefficient of `P_ij` in `−L(P)`: `X₊ᵀ E_ij X₊ − X₋ᵀ E_ij X₋` with `E_ij` the
/// symmetric unit matrix.
pub fn lmi_coefficient(batch: &ExperimentBatch, i: usize, j: usize) -> DMatrix<f64> {
    let sym_outer = |x: &DMatrix<f64>| {
        let (ri, rj) = (x.row(i).transpose(), x.row(j).transpose());
        if i == j {
            &ri * ri.transpose()
        } else {
            &ri * rj.transpose() + &rj * ri.transpose()
        }
    };
    sym_outer(&batch.xp) - sym_outer(&batch.xm)
}

fn write_block<W: Write>(out: &mut W, mat: usize, block: usize, m: &DMatrix<f64>) -> Result<()> {
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            let v = m[(r, c)];
            if v != 0.0 {
                writeln!(out, "{mat} {block} {} {} {v:e}", r + 1, c + 1)?;
            }
        }
    }
    Ok(())
}

pub fn export_sdp_string(batch: &ExperimentBatch, w: &LqrWeights) -> Result<String> {
    let mut buf = Vec::new();
    export_sdp(batch, w, &mut buf)?;
    Ok(String::from_utf8(buf).expect("SDPA output is ASCII"))
}

#[derive(Clone, Debug)]
pub struct InstabilityReport {
    /// `‖x(t)‖` for `t = 0, …, T`.
    pub step_norms: Vec<f64>,
    pub max_norm: f64,
}

pub fn instability_report(sys: &LtiSystem, x0: &DVector<f64>, u_seq: &[DVector<f64>]) -> Result<InstabilityReport> {
    let traj = simulate(sys, x0, u_seq)?;
    let step_norms: Vec<f64> = traj.states_with_final().iter().map(|x| x.norm()).collect();
    let max_norm = step_norms.iter().copied().fold(0.0, f64::max);
    Ok(InstabilityReport { step_norms, max_norm })
}

/// Samples uniform on `[0, 1)`.
pub fn uniform_inputs<R: Rng + ?Sized>(rng: &mut R, m: usize, len: usize) -> Vec<DVector<f64>> {
    (0..len)
        .map(|_| DVector::from_fn(m, |_, _| rng.random::<f64>()))
        .collect()
}

/// Uniform `[0, 1)` direction scaled to unit norm.
pub fn random_unit_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let x = DVector::from_fn(n, |_, _| rng.random::<f64>());
        let norm = x.norm();
        if norm > 0.0 || n == 0 {
            return if n == 0 { x } else { x / norm };
        }
    }
}

/// Simulates `q` experiments of length `len` from uniform random initial states
/// and inputs, redrawing the inputs until they are collectively persistently
/// exciting of order `pe_order`.
pub fn generate_experiments<R: Rng + ?Sized>(
    sys: &LtiSystem,
    q: usize,
    len: usize,
    pe_order: usize,
    rng: &mut R,
    max_retries: usize,
) -> Result<Vec<StateTrajectory>> {
    if q == 0 || len == 0 {
        return Err(Error::invalid("need at least one experiment of positive length"));
    }
    for _ in 0..=max_retries {
        let inputs: Vec<Vec<DVector<f64>>> = (0..q).map(|_| uniform_inputs(rng, sys.m(), len)).collect();
        let segs = inputs
            .iter()
            .map(|u| SignalSegment::new(u.clone(), 0))
            .collect::<Result<Vec<_>>>()?;
        if pe_order > 0 && !is_collectively_pe(&segs, pe_order, DEFAULT_RANK_TOL)? {
            continue;
        }
        return inputs
            .iter()
            .map(|u| {
                let x0 = DVector::from_fn(sys.n(), |_, _| rng.random::<f64>());
                simulate(sys, &x0, u)
            })
            .collect();
    }
    Err(Error::InsufficientExcitation { required: pe_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::batch_reactor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn unstabilizable_data_is_rejected() {
        // x+ = 2x, the input has no effect
        let xs = SignalSegment::from_scalars(&[1.0, 2.0, 4.0, 8.0], 0).unwrap();
        let us = SignalSegment::from_scalars(&[1.0, -1.0, 0.5], 0).unwrap();
        let batch = assemble_batch(&[(xs, us)]).unwrap();
        let err = lqr_from_data(&batch, &LqrWeights::identity(1, 1), &LqrOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotStabilizing { .. } | Error::RiccatiDivergence { .. }), "{err:?}");
    }

    #[test]
    fn zero_dynamics_give_p_equal_q() {
        let sol = dare_solve(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(1.0), 1e-12, 100).unwrap();
        assert_eq!(sol.p[(0, 0)], 1.0);
        assert_eq!(sol.k[(0, 0)], 0.0);
    }

    #[test]
    fn scalar_integrator_gives_golden_ratio() {
        // P² − P − 1 = 0
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let sol = dare_solve(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0), 1e-12, 100).unwrap();
        assert!((sol.p[(0, 0)] - golden).abs() < 1e-12);
        assert!((sol.k[(0, 0)] + golden / (1.0 + golden)).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_r() {
        let res = dare_solve(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(0.0), 1e-12, 100);
        assert!(matches!(res, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn unstabilizable_pair_fails() {
        // unstable mode that the input cannot reach
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let res = dare_solve(&a, &b, &DMatrix::identity(2, 2), &scalar(1.0), 1e-12, 200);
        assert!(res.is_err());
    }

    #[test]
    fn batch_reactor_riccati() {
        let sys = batch_reactor();
        let sol = dare_solve(sys.a(), sys.b(), &DMatrix::identity(4, 4), &DMatrix::identity(2, 2), 1e-12, 10_000)
            .unwrap();
        assert!(sol.residual <= 1e-10);
        assert!((sol.closed_loop_radius - 0.188).abs() < 1e-3);
    }

    #[test]
    fn batch_assembly_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let exps = generate_experiments(&batch_reactor(), 5, 6, 5, &mut rng, 50).unwrap();
        let batch = batch_from_trajectories(&exps).unwrap();
        assert_eq!(batch.columns(), 30);
        assert_eq!(batch.offsets(), &[0, 6, 12, 18, 24]);
        let sys = batch_reactor();
        let resid = batch.xp() - sys.a() * batch.xm() - sys.b() * batch.um();
        assert!(resid.norm() < 1e-12);
        assert!(assemble_batch(&[]).is_err());
    }

    #[test]
    fn batch_rejects_length_mismatch() {
        let xs = SignalSegment::from_scalars(&[1.0, 2.0], 0).unwrap();
        let us = SignalSegment::from_scalars(&[1.0, 2.0], 0).unwrap();
        assert!(matches!(assemble_batch(&[(xs, us)]), Err(Error::Dimension(_))));
    }

    #[test]
    fn lmi_operator_of_zero_weights_is_zero() {
        let xs = SignalSegment::from_scalars(&[1.0, 2.0, 0.5], 0).unwrap();
        let us = SignalSegment::from_scalars(&[1.0, -1.0], 0).unwrap();
        let batch = assemble_batch(&[(xs, us)]).unwrap();
        let w = LqrWeights::new(scalar(0.0), scalar(0.0));
        let l = lmi_operator(&scalar(0.0), &batch, &w).unwrap();
        assert_eq!(l, DMatrix::zeros(2, 2));
    }

    #[test]
    fn rank_deficient_batch_is_rejected() {
        let sys = batch_reactor();
        let traj = simulate(&sys, &DVector::zeros(4), &vec![DVector::zeros(2); 10]).unwrap();
        let batch = batch_from_trajectories(&[traj]).unwrap();
        assert!(matches!(
            lqr_from_data(&batch, &LqrWeights::identity(4, 2), &LqrOptions::default()),
            Err(Error::InsufficientData { rank: 0, required: 6 })
        ));
        assert!(identify_ab(&batch, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn instability_of_zero_dynamics() {
        let sys = LtiSystem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let u = vec![DVector::from_vec(vec![0.3, 0.4]); 4];
        let rep = instability_report(&sys, &DVector::from_vec(vec![10.0, 0.0]), &u).unwrap();
        assert_eq!(rep.step_norms[0], 10.0);
        assert!(rep.step_norms[1..].iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert_eq!(rep.max_norm, 10.0);
    }

    #[test]
    fn sdpa_header() {
        let xs = SignalSegment::from_scalars(&[1.0, 2.0, 0.5], 0).unwrap();
        let us = SignalSegment::from_scalars(&[1.0, -1.0], 0).unwrap();
        let batch = assemble_batch(&[(xs, us)]).unwrap();
        let text = export_sdp_string(&batch, &LqrWeights::identity(1, 1)).unwrap();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('*')).collect();
        assert_eq!(&lines[..4], &["1", "2", "1 2", "-1"]);
    }
}
