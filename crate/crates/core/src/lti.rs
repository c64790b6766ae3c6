//! Discrete-time LTI state-space systems
//!
//! ```text
//! x(t+1) = A x(t) + B u(t)
//! y(t)   = C x(t) + D u(t)
//! ```
//!
//! Exact simulation and the structural quantities (controllability, Markov
//! parameters, extended observability and Toeplitz maps) that the data-driven
//! modules are checked against.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl LtiSystem {
    /// Builds a system, checking that `A` is n×n, `B` n×m, `C` p×n and `D` p×m
    /// with `m, p ≥ 1`. `n = 0` is allowed (static map `y = D u`).
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let (p, m) = d.shape();
        if !a.is_square() {
            return Err(Error::dim(format!("A must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        if m == 0 || p == 0 {
            return Err(Error::dim(format!("D must be p×m with m, p ≥ 1, got {p}x{m}")));
        }
        if b.shape() != (n, m) {
            return Err(Error::dim(format!("B must be {n}x{m}, got {}x{}", b.nrows(), b.ncols())));
        }
        if c.shape() != (p, n) {
            return Err(Error::dim(format!("C must be {p}x{n}, got {}x{}", c.nrows(), c.ncols())));
        }
        let all_finite = [&a, &b, &c, &d].iter().all(|mat| mat.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(Error::invalid("system matrices contain non-finite entries"));
        }
        Ok(Self { a, b, c, d })
    }

    /// Static map `y = D u` with no state.
    pub fn static_gain(d: DMatrix<f64>) -> Result<Self> {
        let (p, m) = d.shape();
        Self::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, m), DMatrix::zeros(p, 0), d)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// `(S A S⁻¹, S B, C S⁻¹, D)`
    pub fn similarity_transform(&self, s: &DMatrix<f64>) -> Result<Self> {
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("similarity transform is singular"))?;
        Self::new(s * &self.a * &s_inv, s * &self.b, &self.c * &s_inv, self.d.clone())
    }
}

/// Input/state/output trajectory produced by [`simulate`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrajectory {
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub start_time: i64,
    /// `x(T)`, the state after the last input.
    pub final_state: DVector<f64>,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// States `x(0), …, x(T)` including the terminal one.
    pub fn states_with_final(&self) -> Vec<DVector<f64>> {
        let mut xs = self.x.clone();
        xs.push(self.final_state.clone());
        xs
    }
}

pub fn simulate(sys: &LtiSystem, x0: &DVector<f64>, u_seq: &[DVector<f64>]) -> Result<StateTrajectory> {
    if x0.len() != sys.n() {
        return Err(Error::dim(format!("x0 has length {}, expected {}", x0.len(), sys.n())));
    }
    let mut x = x0.clone();
    let mut xs = Vec::with_capacity(u_seq.len());
    let mut ys = Vec::with_capacity(u_seq.len());
    for (t, u) in u_seq.iter().enumerate() {
        if u.len() != sys.m() {
            return Err(Error::dim(format!(
                "input sample {t} has length {}, expected {}",
                u.len(),
                sys.m()
            )));
        }
        ys.push(&sys.c * &x + &sys.d * u);
        let next = &sys.a * &x + &sys.b * u;
        xs.push(std::mem::replace(&mut x, next));
    }
    Ok(StateTrajectory {
        x: xs,
        u: u_seq.to_vec(),
        y: ys,
        start_time: 0,
        final_state: x,
    })
}

/// Checks the state-space equations sample by sample, relative to the sample magnitude.
pub fn verify_trajectory(sys: &LtiSystem, traj: &StateTrajectory, tol: f64) -> bool {
    let t_len = traj.u.len();
    if traj.x.len() != t_len || traj.y.len() != t_len {
        return false;
    }
    let close = |a: &DVector<f64>, b: &DVector<f64>| {
        a.len() == b.len() && (a - b).norm() <= tol * (1.0 + b.norm())
    };
    (0..t_len).all(|t| {
        let x_next = if t + 1 < t_len { &traj.x[t + 1] } else { &traj.final_state };
        traj.x[t].len() == sys.n()
            && traj.u[t].len() == sys.m()
            && close(&(&sys.a * &traj.x[t] + &sys.b * &traj.u[t]), x_next)
            && close(&(&sys.c * &traj.x[t] + &sys.d * &traj.u[t]), &traj.y[t])
    })
}

/// `[B, AB, …, A^{n−1}B]`
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::dim(format!("A must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::dim(format!("B must have {n} rows, got {}", b.nrows())));
    }
    let m = b.ncols();
    let mut out = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.columns_mut(k * m, m).copy_from(&blk);
        blk = a * blk;
    }
    Ok(out)
}

pub fn is_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let ctrb = controllability_matrix(a, b)?;
    Ok(linalg::numerical_rank(&ctrb, tol) == a.nrows())
}

pub fn is_observable(sys: &LtiSystem, tol: f64) -> bool {
    let obs = observability_matrix(sys, sys.n().max(1));
    linalg::numerical_rank(&obs, tol) == sys.n()
}

/// `[C; CA; …; CA^{depth−1}]`
pub fn observability_matrix(sys: &LtiSystem, depth: usize) -> DMatrix<f64> {
    let (n, p) = (sys.n(), sys.p());
    let mut out = DMatrix::zeros(p * depth, n);
    let mut blk = sys.c.clone();
    for k in 0..depth {
        out.rows_mut(k * p, p).copy_from(&blk);
        blk = blk * &sys.a;
    }
    out
}

/// `(D, CB, CAB, …, CA^{count−2}B)`
pub fn markov_parameters(sys: &LtiSystem, count: usize) -> Result<Vec<DMatrix<f64>>> {
    if count == 0 {
        return Err(Error::invalid("Markov parameter count must be at least 1"));
    }
    let mut out = Vec::with_capacity(count);
    out.push(sys.d.clone());
    let mut ca = sys.c.clone();
    for _ in 1..count {
        out.push(&ca * &sys.b);
        ca = ca * &sys.a;
    }
    Ok(out)
}

/// Extended observability matrix `O_L` (pL×n) and block lower-triangular Toeplitz
/// matrix `T_L` (pL×mL) such that `y_[0,L−1] = O_L x(0) + T_L u_[0,L−1]`.
pub fn response_maps(sys: &LtiSystem, depth: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if depth == 0 {
        return Err(Error::invalid("response map depth must be at least 1"));
    }
    let (m, p) = (sys.m(), sys.p());
    let obs = observability_matrix(sys, depth);
    let markov = markov_parameters(sys, depth)?;
    let mut toeplitz = DMatrix::zeros(p * depth, m * depth);
    for row in 0..depth {
        for col in 0..=row {
            toeplitz
                .view_mut((row * p, col * m), (p, m))
                .copy_from(&markov[row - col]);
        }
    }
    Ok((obs, toeplitz))
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    linalg::spectral_radius(m)
}

/// The pre-discretized (0.5 s) unstable batch reactor, entries as printed to three decimals.
pub fn batch_reactor() -> LtiSystem {
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            2.622, 0.320, 1.834, -1.066, //
            -0.238, 0.187, -0.136, 0.202, //
            0.161, 0.789, 0.286, 0.606, //
            -0.104, 0.764, 0.089, 0.736,
        ],
    );
    let b = DMatrix::from_row_slice(
        4,
        2,
        &[
            0.465, -1.550, //
            1.314, 0.085, //
            2.055, -0.673, //
            2.023, -0.160,
        ],
    );
    LtiSystem::new(a, b, DMatrix::identity(4, 4), DMatrix::zeros(4, 2)).expect("valid batch reactor")
}

/// Second-order SISO system `A=[[1,0],[1,1]], B=[1;0], C=[0,1], D=1`
/// (impulse response 1, 0, 1, 2, 3, …).
pub fn double_integrator_example() -> LtiSystem {
    LtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        DMatrix::from_element(1, 1, 1.0),
    )
    .expect("valid example system")
}
