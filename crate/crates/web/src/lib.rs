//! Browser bindings. Every export takes plain values and returns a JSON string;
//! failures come back as `{"error": "..."}` so the page never has to catch.

use fundlemma::hankel::{self, SignalSegment};
use fundlemma::ident::{self, IdentifyOptions};
use fundlemma::io;
use fundlemma::linalg::DEFAULT_RANK_TOL;
use fundlemma::lqr::{self, LqrOptions, LqrWeights};
use fundlemma::lti;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn respond(result: fundlemma::Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Excitation check of the input columns of a trajectory CSV; missing rows split segments.
#[wasm_bindgen]
pub fn pe_check(csv: &str, order: usize) -> String {
    respond(pe_check_impl(csv, order))
}

fn pe_check_impl(csv: &str, order: usize) -> fundlemma::Result<Value> {
    if order == 0 {
        return Err(fundlemma::Error::InvalidInput("order must be at least 1".into()));
    }
    let table = io::parse_trajectory_csv(csv)?;
    let mut segs = Vec::new();
    let mut run = Vec::new();
    let mut start = table.origin;
    for (i, row) in table.rows.iter().enumerate() {
        match &row.u {
            Some(u) => {
                if run.is_empty() {
                    start = table.origin + i as i64;
                }
                run.push(u.clone());
            }
            None if !run.is_empty() => segs.push(SignalSegment::new(std::mem::take(&mut run), start)?),
            None => {}
        }
    }
    if !run.is_empty() {
        segs.push(SignalSegment::new(run, start)?);
    }
    let usable: Vec<SignalSegment> = segs.iter().filter(|s| s.len() >= order).cloned().collect();
    let (rank, cols) = if usable.is_empty() {
        (0, 0)
    } else {
        let mosaic = hankel::mosaic_hankel(&usable, order)?;
        (mosaic.rank(DEFAULT_RANK_TOL), mosaic.assembled.ncols())
    };
    let required = table.m * order;
    Ok(json!({
        "segments": segs.iter().map(|s| json!({
            "start": s.start_time(),
            "length": s.len(),
            "pe_order": hankel::pe_order(s, DEFAULT_RANK_TOL),
        })).collect::<Vec<_>>(),
        "rows": required,
        "columns": cols,
        "rank": rank,
        "collective_pe_order": hankel::collective_pe_order(&segs, DEFAULT_RANK_TOL),
        "collectively_pe": rank == required,
    }))
}

/// Identification of the 20-sample example record after blanking `knockouts`
/// (comma separated time steps) in addition to the steps already missing.
#[wasm_bindgen]
pub fn identify_record(knockouts: &str) -> String {
    respond(identify_impl(knockouts))
}

fn identify_impl(knockouts: &str) -> fundlemma::Result<Value> {
    let times = knockouts
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<i64>()
                .map_err(|_| fundlemma::Error::InvalidInput(format!("`{s}` is not a time step")))
        })
        .collect::<fundlemma::Result<Vec<_>>>()?;
    let mut record = ident::missing_data_record();
    record.knock_out(&times);
    let present: Vec<bool> = record.entries().iter().map(Option::is_some).collect();
    let res = ident::identify(&record, &IdentifyOptions::default())?;
    Ok(json!({
        "present": present,
        "segments": res.segment_report,
        "order": res.order,
        "markov": res.markov.iter().map(rows).collect::<Vec<_>>(),
        "residual": res.residual,
        "a": rows(res.system.a()),
        "b": rows(res.system.b()),
        "c": rows(res.system.c()),
        "d": rows(res.system.d()),
    }))
}

/// Data-driven LQR for the batch reactor from `experiments` seeded runs of
/// `len` samples, next to the state growth of one run of `long_len` samples.
#[wasm_bindgen]
pub fn reactor_lqr(seed: u32, experiments: usize, len: usize, long_len: usize) -> String {
    respond(reactor_impl(u64::from(seed), experiments, len, long_len))
}

fn reactor_impl(seed: u64, experiments: usize, len: usize, long_len: usize) -> fundlemma::Result<Value> {
    let sys = lti::batch_reactor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = lqr::random_unit_state(&mut rng, sys.n());
    let u = lqr::uniform_inputs(&mut rng, sys.m(), long_len);
    let growth = lqr::instability_report(&sys, &x0, &u)?;

    let runs = lqr::generate_experiments(&sys, experiments, len, 0, &mut rng, 0)?;
    let batch = lqr::batch_from_trajectories(&runs)?;
    let data_rank = fundlemma::linalg::numerical_rank(&batch.state_input_matrix(), DEFAULT_RANK_TOL);
    let w = LqrWeights::identity(sys.n(), sys.m());
    let max_norm = runs
        .iter()
        .flat_map(|r| r.states_with_final())
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    let base = json!({
        "growth": growth.step_norms,
        "max_norm_short": max_norm,
        "data_rank": data_rank,
        "data_rows": sys.n() + sys.m(),
        "columns": batch.columns(),
    });
    let mut out = base;
    match lqr::lqr_from_data(&batch, &w, &LqrOptions::default()) {
        Ok(sol) => {
            out["k"] = json!(rows(&sol.k));
            out["p"] = json!(rows(&sol.p));
            out["radius"] = json!(sol.closed_loop_radius);
            out["lmi_max_eig"] = json!(sol.lmi_max_eig);
            out["lmi_scale"] = json!(sol.lmi_scale);
        }
        Err(e) => out["lqr_error"] = json!(e.to_string()),
    }
    Ok(out)
}
