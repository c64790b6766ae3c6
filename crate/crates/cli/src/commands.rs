use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fundlemma::hankel::{self, SignalSegment};
use fundlemma::ident::{self, IdentifyOptions};
use fundlemma::io::{self, TrajectoryTable};
use fundlemma::lqr::{self, LqrOptions, LqrWeights};
use fundlemma::lti::{self, LtiSystem};
use fundlemma::willems;
use fundlemma::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Command;

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Generate { system, len, experiments, order, knockout, states, seed, out } => {
            generate(&system, len, experiments, order, &knockout, states, seed, &out)
        }
        Command::PeCheck { files, order, tol } => pe_check(&files, order, tol.rank),
        Command::DdSimulate { files, depth, past, future, tol_past, out } => {
            dd_simulate(&files, depth, &past, &future, tol_past, out.as_deref())
        }
        Command::Identify { file, max_order, depth, min_segment, tol, out } => {
            let opts = IdentifyOptions {
                min_segment_len: min_segment,
                max_depth: depth,
                max_order,
                rank_tol: tol.rank,
                ..Default::default()
            };
            identify(&file, &opts, out.as_deref())
        }
        Command::Lqr { files, weights, tol, tol_cert, out } => {
            let opts = LqrOptions { rank_tol: tol.rank, cert_tol: tol_cert, ..Default::default() };
            lqr_cmd(&files, weights.as_deref(), &opts, out.as_deref())
        }
        Command::ExportSdp { files, weights, out } => export_sdp(&files, weights.as_deref(), &out),
        Command::DemoInstability { system, len, seed, out } => demo_instability(&system, len, seed, out.as_deref()),
    }
}

fn load_system(spec: &str) -> Result<LtiSystem> {
    match spec {
        "batch-reactor" => Ok(lti::batch_reactor()),
        "example" => Ok(lti::double_integrator_example()),
        path => io::read_system(Path::new(path)),
    }
}

fn load_weights(path: Option<&Path>, n: usize, m: usize) -> Result<LqrWeights> {
    match path {
        Some(p) => io::read_weights(p),
        None => Ok(LqrWeights::identity(n, m)),
    }
}

fn numbered_path(out: &Path, i: usize, count: usize) -> PathBuf {
    if count == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-{}.{}", i + 1, ext.to_string_lossy()),
        None => format!("{stem}-{}", i + 1),
    };
    out.with_file_name(name)
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} ({}x{}):", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:>14.6}", m[(r, c)])).collect();
        let _ = writeln!(out, "  {}", row.join(""));
    }
}

fn format_vector(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

#[allow(clippy::too_many_arguments)]
fn generate(
    system: &str,
    len: usize,
    experiments: usize,
    order: Option<usize>,
    knockout: &[i64],
    states: bool,
    seed: u64,
    out: &Path,
) -> Result<u8> {
    let sys = load_system(system)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let runs = lqr::generate_experiments(&sys, experiments, len, order.unwrap_or(0), &mut rng, 10_000)?;
    for (i, traj) in runs.iter().enumerate() {
        let mut table = TrajectoryTable::from_trajectory(traj, states);
        table.knock_out(knockout);
        let path = numbered_path(out, i, runs.len());
        fs::write(&path, table.to_csv())?;
        println!("wrote {} ({} samples)", path.display(), traj.len());
    }
    Ok(0)
}

/// Maximal runs of rows with an input sample.
fn input_segments(table: &TrajectoryTable) -> Result<Vec<SignalSegment>> {
    let mut segs = Vec::new();
    let mut current: Vec<DVector<f64>> = Vec::new();
    let mut start = table.origin;
    for (i, row) in table.rows.iter().enumerate() {
        match &row.u {
            Some(u) => {
                if current.is_empty() {
                    start = table.origin + i as i64;
                }
                current.push(u.clone());
            }
            None if !current.is_empty() => segs.push(SignalSegment::new(std::mem::take(&mut current), start)?),
            None => {}
        }
    }
    if !current.is_empty() {
        segs.push(SignalSegment::new(current, start)?);
    }
    Ok(segs)
}

fn pe_check(files: &[PathBuf], order: usize, tol: f64) -> Result<u8> {
    if order == 0 {
        return Err(Error::InvalidInput("--order must be at least 1".into()));
    }
    let mut segs = Vec::new();
    let mut report = String::new();
    let _ = writeln!(report, "{:<32} {:>7} {:>6} {:>7} {:>9}", "file", "segment", "start", "length", "pe_order");
    let mut dim = None;
    for file in files {
        let table = io::read_trajectory_csv(file)?;
        if *dim.get_or_insert(table.m) != table.m {
            return Err(Error::Dimension(format!("{} has {} inputs, expected {}", file.display(), table.m, dim.unwrap())));
        }
        for (i, s) in input_segments(&table)?.into_iter().enumerate() {
            let _ = writeln!(
                report,
                "{:<32} {:>7} {:>6} {:>7} {:>9}",
                file.display(),
                i + 1,
                s.start_time(),
                s.len(),
                hankel::pe_order(&s, tol)
            );
            segs.push(s);
        }
    }
    // segments shorter than the order contribute no window of that depth
    let usable: Vec<SignalSegment> = segs.iter().filter(|s| s.len() >= order).cloned().collect();
    let m = dim.unwrap_or(1);
    let rows = m * order;
    let (rank, cols) = if usable.is_empty() {
        (0, 0)
    } else {
        let mosaic = hankel::mosaic_hankel(&usable, order)?;
        (mosaic.rank(tol), mosaic.assembled.ncols())
    };
    let verdict = rank == rows;
    let _ = writeln!(report, "segments: {} total, {} of length >= {order}", segs.len(), usable.len());
    let _ = writeln!(report, "mosaic Hankel of depth {order}: {rows}x{cols}, rank {rank}");
    let _ = writeln!(report, "collective PE order: {}", hankel::collective_pe_order(&segs, tol));
    let _ = writeln!(
        report,
        "verdict at order {order}: {}",
        if verdict { "collectively persistently exciting" } else { "not collectively persistently exciting" }
    );
    print!("{report}");
    Ok(if verdict { 0 } else { 2 })
}

fn io_rows(table: &TrajectoryTable, file: &Path) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let mut us = Vec::with_capacity(table.rows.len());
    let mut ys = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        match (&r.u, &r.y) {
            (Some(u), Some(y)) => {
                us.push(u.clone());
                ys.push(y.clone());
            }
            _ => {
                return Err(Error::Parse { line: i + 2, msg: format!("{}: past window must be complete", file.display()) })
            }
        }
    }
    Ok((us, ys))
}

fn dd_simulate(files: &[PathBuf], depth: usize, past: &Path, future: &Path, tol: f64, out: Option<&Path>) -> Result<u8> {
    let mut segments = Vec::new();
    for file in files {
        let ct = io::read_trajectory_csv(file)?.to_corrupted()?;
        let seg = ident::segment_trajectory(&ct, depth.max(1))?;
        segments.extend(seg.segments);
    }
    let dict = willems::build_data_matrix(&segments, depth)?;
    let past_table = io::read_trajectory_csv(past)?;
    let (past_u, past_y) = io_rows(&past_table, past)?;
    let future_table = io::read_trajectory_csv(future)?;
    let future_u = future_table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.u.clone().ok_or(Error::Parse { line: i + 2, msg: "missing future input".into() }))
        .collect::<Result<Vec<_>>>()?;
    let y = willems::datadriven_simulate(&dict, &past_u, &past_y, &future_u, tol)?;

    let start = past_table.origin + past_table.rows.len() as i64;
    let table = TrajectoryTable {
        origin: start,
        m: dict.input_dim(),
        p: dict.output_dim(),
        n: 0,
        rows: future_u
            .iter()
            .zip(&y)
            .map(|(u, y)| io::TableRow { u: Some(u.clone()), y: Some(y.clone()), x: None })
            .collect(),
    };
    println!(
        "dictionary: {} segments, depth {depth}, {}x{} rank {}",
        segments.len(),
        dict.data_matrix().nrows(),
        dict.columns(),
        dict.rank(fundlemma::linalg::DEFAULT_RANK_TOL)
    );
    println!("past window: {} samples; simulated {} steps", past_u.len(), y.len());
    match out {
        Some(path) => {
            fs::write(path, table.to_csv())?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(0)
}

fn identify(file: &Path, opts: &IdentifyOptions, out: Option<&Path>) -> Result<u8> {
    let ct = io::read_trajectory_csv(file)?.to_corrupted()?;
    let res = ident::identify(&ct, opts)?;
    let mut report = String::new();
    let _ = writeln!(report, "segments used (start, length): {:?}", res.segment_report);
    if !res.discarded.is_empty() {
        let _ = writeln!(report, "segments discarded (start, length): {:?}", res.discarded);
    }
    let _ = writeln!(report, "estimated order: {}", res.order);
    let _ = writeln!(report, "Markov parameters:");
    for (k, h) in res.markov.iter().enumerate() {
        let entries: Vec<String> = h.row_iter().map(|r| format_vector(&r.transpose())).collect();
        let _ = writeln!(report, "  h({k}) = {}", entries.join(" "));
    }
    let _ = writeln!(report, "realization residual (max abs Markov mismatch): {:.3e}", res.residual);
    write_matrix(&mut report, "A", res.system.a());
    write_matrix(&mut report, "B", res.system.b());
    write_matrix(&mut report, "C", res.system.c());
    write_matrix(&mut report, "D", res.system.d());
    print!("{report}");
    if let Some(path) = out {
        fs::write(path, io::system_to_json(&res.system))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn load_batch(files: &[PathBuf]) -> Result<lqr::ExperimentBatch> {
    let pairs = files
        .iter()
        .map(|f| io::read_trajectory_csv(f)?.to_experiment())
        .collect::<Result<Vec<_>>>()?;
    lqr::assemble_batch(&pairs)
}

fn lqr_cmd(files: &[PathBuf], weights: Option<&Path>, opts: &LqrOptions, out: Option<&Path>) -> Result<u8> {
    let batch = load_batch(files)?;
    let w = load_weights(weights, batch.n(), batch.m())?;
    let sol = lqr::lqr_from_data(&batch, &w, opts)?;
    let mut report = String::new();
    let _ = writeln!(
        report,
        "experiments: {}, columns: {}, n = {}, m = {}",
        files.len(),
        batch.columns(),
        batch.n(),
        batch.m()
    );
    write_matrix(&mut report, "K", &sol.k);
    write_matrix(&mut report, "P", &sol.p);
    let _ = writeln!(report, "lmi_max_eig: {:.6e} (scale {:.6e})", sol.lmi_max_eig, sol.lmi_scale);
    let _ = writeln!(report, "riccati_residual: {:.6e}", sol.riccati_residual);
    let _ = writeln!(report, "right_inverse_residual: {:.6e}", sol.right_inverse_residual);
    let _ = writeln!(report, "closed_loop_spectral_radius: {:.6}", sol.closed_loop_radius);
    print!("{report}");
    if let Some(path) = out {
        fs::write(path, io::gain_to_json(&sol.k, &sol.p))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn export_sdp(files: &[PathBuf], weights: Option<&Path>, out: &Path) -> Result<u8> {
    let batch = load_batch(files)?;
    let w = load_weights(weights, batch.n(), batch.m())?;
    let text = lqr::export_sdp_string(&batch, &w)?;
    fs::write(out, &text)?;
    let n = batch.n();
    println!(
        "wrote {} ({} variables, blocks {}x{} and {}x{})",
        out.display(),
        n * (n + 1) / 2,
        n,
        n,
        batch.columns(),
        batch.columns()
    );
    Ok(0)
}

fn demo_instability(system: &str, len: usize, seed: u64, out: Option<&Path>) -> Result<u8> {
    let sys = load_system(system)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = lqr::random_unit_state(&mut rng, sys.n());
    let u = lqr::uniform_inputs(&mut rng, sys.m(), len);
    let report = lqr::instability_report(&sys, &x0, &u)?;
    println!("{:>4} {:>14}", "t", "||x(t)||");
    for (t, v) in report.step_norms.iter().enumerate() {
        println!("{t:>4} {v:>14.6e}");
    }
    println!("max ||x||: {:.6e}", report.max_norm);
    println!("spectral radius of A: {:.6}", lti::spectral_radius(sys.a())?);
    if let Some(path) = out {
        let traj = lti::simulate(&sys, &x0, &u)?;
        fs::write(path, TrajectoryTable::from_trajectory(&traj, true).to_csv())?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}
