#![allow(dead_code)]

use fundlemma::hankel::{is_collectively_pe, SignalSegment};
use fundlemma::linalg::{self, DEFAULT_RANK_TOL};
use fundlemma::lti::{controllability_matrix, observability_matrix, simulate, LtiSystem, StateTrajectory};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vec<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_signal<R: Rng>(rng: &mut R, dim: usize, len: usize) -> Vec<DVector<f64>> {
    (0..len).map(|_| uniform_vec(rng, dim)).collect()
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = linalg::singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Random stable system (spectral radius in [0.5, 0.95]) that is controllable
/// and observable with reasonably conditioned rank tests.
pub fn random_minimal_system<R: Rng>(rng: &mut R, n: usize, m: usize, p: usize) -> LtiSystem {
    loop {
        let mut a = uniform_matrix(rng, n, n);
        if n > 0 {
            let rho = linalg::spectral_radius(&a).unwrap();
            if rho < 1e-3 {
                continue;
            }
            a *= rng.random_range(0.5..0.95) / rho;
        }
        let sys = LtiSystem::new(a, uniform_matrix(rng, n, m), uniform_matrix(rng, p, n), uniform_matrix(rng, p, m))
            .unwrap();
        if n == 0 {
            return sys;
        }
        let ctrb = controllability_matrix(sys.a(), sys.b()).unwrap();
        let obs = observability_matrix(&sys, n);
        let ctrb_cond = condition(&(&ctrb * ctrb.transpose()));
        let obs_cond = condition(&(obs.transpose() * &obs));
        if ctrb_cond < 1e6 && obs_cond < 1e6 {
            return sys;
        }
    }
}

/// Random controllable system, no stability or observability requirement.
pub fn random_controllable_system<R: Rng>(rng: &mut R, n: usize, m: usize, p: usize) -> LtiSystem {
    loop {
        let sys = LtiSystem::new(
            uniform_matrix(rng, n, n),
            uniform_matrix(rng, n, m),
            uniform_matrix(rng, p, n),
            uniform_matrix(rng, p, m),
        )
        .unwrap();
        if n == 0 {
            return sys;
        }
        let ctrb = controllability_matrix(sys.a(), sys.b()).unwrap();
        if condition(&(&ctrb * ctrb.transpose())) < 1e8 {
            return sys;
        }
    }
}

/// `q` experiments whose inputs are collectively persistently exciting of order
/// `order`; every experiment is at least `order` long and the lengths are
/// randomized around the counting bound.
pub fn pe_experiments<R: Rng>(rng: &mut R, sys: &LtiSystem, q: usize, order: usize) -> Vec<StateTrajectory> {
    let m = sys.m();
    let cols_needed = m * order;
    loop {
        let lens: Vec<usize> = (0..q)
            .map(|_| order - 1 + cols_needed.div_ceil(q) + rng.random_range(0..3))
            .collect();
        let inputs: Vec<Vec<DVector<f64>>> = lens.iter().map(|&t| uniform_signal(rng, m, t)).collect();
        let segs: Vec<SignalSegment> = inputs.iter().map(|u| SignalSegment::new(u.clone(), 0).unwrap()).collect();
        if !is_collectively_pe(&segs, order, DEFAULT_RANK_TOL).unwrap() {
            continue;
        }
        return inputs
            .iter()
            .map(|u| simulate(sys, &uniform_vec(rng, sys.n()), u).unwrap())
            .collect();
    }
}
