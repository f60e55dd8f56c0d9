use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mongeo::ch::{ch_evolve_partial, compute_pressure, minimality_certificate, peakon_demo, ChEvolution};
use mongeo::flow::{collapse_demo, fill_jumps};
use mongeo::hellinger::hellinger_path;
use mongeo::io::GridData;
use mongeo::solver::{solve_geodesic, Init, SolverOptions};
use mongeo::{
    eulerian_energy, lagrangian_energy, relaxed_energy, FisherRaoOptions, JumpFormula, JumpRecord, MonotoneMap,
    PathGrid, SpaceGrid,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{trace_csv, Output};
use crate::settings::{at_least_two, positive, read_grid, Settings};
use crate::svg::{line_plot, snapshots, Series};
use crate::{
    CertifyArgs, CollapseArgs, EnergyArgs, EvolveArgs, FillArgs, Formula, GeodesicArgs, HellingerArgs, InitKind,
    InputError, PeakonArgs, Status,
};

fn status_text(status: &Status) -> String {
    match status {
        Status::Complete => "complete".into(),
        Status::Incomplete(msg) => format!("incomplete: {msg}"),
    }
}

fn input_error(path: &Path, e: impl std::fmt::Display) -> anyhow::Error {
    InputError(format!("{}: {e}", path.display())).into()
}

fn read_map(path: &Path, nx: Option<usize>) -> Result<MonotoneMap> {
    let map = read_grid(path)?.to_map().map_err(|e| input_error(path, e))?;
    match nx {
        Some(n) if n != map.grid().cells() => {
            let grid = SpaceGrid::new(n)?;
            Ok(MonotoneMap::from_fn(grid, |x| map.eval(x).expect("grid nodes lie in [0, 1]"))?)
        }
        _ => Ok(map),
    }
}

#[derive(Deserialize)]
struct JumpsFile {
    locations: Vec<f64>,
}

fn read_jumps(path: &Path, on: &PathGrid) -> Result<Vec<JumpRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: JumpsFile = serde_json::from_str(&text).map_err(|e| input_error(path, e))?;
    file.locations
        .iter()
        .map(|&x| JumpRecord::from_path(on, x).map_err(|e| input_error(path, e)))
        .collect()
}

fn path_rows(path: &PathGrid) -> Vec<Vec<f64>> {
    path.values().rows().into_iter().map(|r| r.to_vec()).collect()
}

fn path_snapshots(title: &str, path: &PathGrid) -> String {
    snapshots(title, &path.sgrid().nodes(), &path.tgrid().nodes(), &path_rows(path))
}

pub fn energy(a: EnergyArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let path_file = s.input_opt(a.path, "path")?;
    let velocity_file = s.input_opt(a.velocity, "velocity")?;
    let jumps_file = s.input_opt(a.jumps, "jumps")?;
    let formula: Formula = s.pick(a.formula, "formula", Formula::Metric)?;
    let mut out = Output::new(dir);
    let config;
    match (&path_file, &velocity_file) {
        (Some(p), None) => {
            let path = read_grid(p)?.to_path().map_err(|e| input_error(p, e))?;
            out.record_input(p)?;
            let breakdown = match &jumps_file {
                Some(j) => {
                    let jumps = read_jumps(j, &path)?;
                    out.record_input(j)?;
                    let f = match formula {
                        Formula::ClosedForm => JumpFormula::ClosedForm,
                        Formula::AsPrinted => JumpFormula::AsPrinted,
                        Formula::Metric => JumpFormula::Metric,
                    };
                    relaxed_energy(&path, &jumps, FisherRaoOptions::strict(), f)?
                }
                None => lagrangian_energy(&path, FisherRaoOptions::strict())?,
            };
            out.write_json("energy.json", &breakdown)?;
            config = json!({ "path": p, "jumps": jumps_file, "formula": formula });
        }
        (None, Some(v)) => {
            if jumps_file.is_some() {
                return Err(InputError("--jumps applies to --path only".into()).into());
            }
            let field = read_grid(v)?.to_velocity().map_err(|e| input_error(v, e))?;
            out.record_input(v)?;
            out.write_json("energy.json", &json!({ "total": eulerian_energy(&field) }))?;
            config = json!({ "velocity": v });
        }
        _ => return Err(InputError("pass exactly one of --path and --velocity".into()).into()),
    }
    out.finish("energy", config, "complete")?;
    Ok(Status::Complete)
}

#[derive(Serialize)]
struct GeodesicConfig {
    from: PathBuf,
    to: PathBuf,
    nx: usize,
    nt: usize,
    init: InitKind,
    max_iters: usize,
    grad_tol: f64,
}

pub fn geodesic(a: GeodesicArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let from = s.input(a.from, "from")?;
    let to = s.input(a.to, "to")?;
    let nx = s.pick_opt(a.nx, "nx")?.map(|n| at_least_two("nx", n)).transpose()?;
    let defaults = SolverOptions::default();
    let nt = at_least_two("nt", s.pick(a.nt, "nt", defaults.steps)?)?;
    let init = s.pick(a.init, "init", InitKind::Hellinger)?;
    let max_iters = s.pick(a.max_iters, "max_iters", defaults.max_iters)?;
    let grad_tol = positive("grad_tol", s.pick(a.grad_tol, "grad_tol", defaults.grad_tol)?)?;
    let phi0 = read_map(&from, nx)?;
    let phi1 = read_map(&to, nx)?;
    if phi0.grid() != phi1.grid() {
        return Err(InputError(format!(
            "maps have {} and {} cells; pass --nx to resample",
            phi0.grid().cells(),
            phi1.grid().cells()
        ))
        .into());
    }
    let config = GeodesicConfig { from, to, nx: phi0.grid().cells(), nt, init, max_iters, grad_tol };
    let opts = SolverOptions {
        steps: nt,
        max_iters,
        grad_tol,
        init: match init {
            InitKind::Hellinger => Init::Hellinger,
            InitKind::Linear => Init::Linear,
        },
        ..defaults
    };
    let result = solve_geodesic(&phi0, &phi1, &opts)?;

    let mut out = Output::new(dir);
    out.record_input(&config.from)?;
    out.record_input(&config.to)?;
    out.write("path.csv", GridData::from_path(&result.path).to_csv())?;
    out.write_json("result.json", &result)?;
    out.write("snapshots.svg", path_snapshots("geodesic φ(t, ·)", &result.path))?;
    let status = if result.converged {
        Status::Complete
    } else {
        Status::Incomplete(format!(
            "solver did not converge in {} iterations (gradient norm {:e})",
            result.iterations, result.grad_norm
        ))
    };
    out.finish("geodesic", serde_json::to_value(&config)?, &status_text(&status))?;
    Ok(status)
}

fn read_profile(path: &Path) -> Result<Vec<f64>> {
    read_grid(path)?.single_row().map_err(|e| input_error(path, e))
}

fn evolve_run(v0_file: &Path, horizon: f64, nt: usize) -> Result<ChEvolution> {
    let v0 = read_profile(v0_file)?;
    ch_evolve_partial(&v0, horizon, nt).map_err(|e| match e {
        mongeo::Error::BlowupDetected { .. } => e.into(),
        other => input_error(v0_file, other),
    })
}

fn write_evolution(out: &mut Output, run: &ChEvolution) -> Result<()> {
    out.write("velocity.csv", GridData::from_velocity(&run.field).to_csv())?;
    let times = run.field.tgrid().nodes();
    let mut csv = trace_csv(&["t", "E"], times.iter().zip(&run.energy).map(|(t, e)| vec![*t, *e]));
    if let Some(e) = &run.blowup {
        csv.push_str(&format!("# truncated after {} of {} steps: {e}\n", times.len() - 1, run.requested_steps));
    }
    out.write("energy.csv", csv)?;
    let series = [Series { label: "E(t)".into(), x: times, y: run.energy.clone() }];
    out.write("energy.svg", line_plot("energy E(t) = ∫ v² + ¼ vₓ²", "t", "E", &series, false))?;
    Ok(())
}

fn blowup_status(run: &ChEvolution) -> Status {
    match &run.blowup {
        Some(e) => Status::Incomplete(format!("{e}; partial results written")),
        None => Status::Complete,
    }
}

pub fn evolve(a: EvolveArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let v0 = s.input(a.v0, "v0")?;
    let horizon = positive("T", s.pick(a.horizon, "T", 0.3)?)?;
    let nt = at_least_two("nt", s.pick(a.nt, "nt", 256)?)?;
    let run = evolve_run(&v0, horizon, nt)?;
    let mut out = Output::new(dir);
    out.record_input(&v0)?;
    write_evolution(&mut out, &run)?;
    out.write_json(
        "evolve.json",
        &json!({
            "steps_done": run.field.tgrid().len() - 1,
            "requested_steps": run.requested_steps,
            "energy_drift": run.energy_drift(),
            "truncated": run.truncated(),
        }),
    )?;
    let status = blowup_status(&run);
    out.finish("evolve", json!({ "v0": v0, "T": horizon, "nt": nt }), &status_text(&status))?;
    Ok(status)
}

pub fn certify(a: CertifyArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let v0 = s.input_opt(a.v0, "v0")?;
    let field_file = s.input_opt(a.field, "field")?;
    let include_boundary = a.include_boundary || s.pick(None, "include_boundary", false)?;
    let mut out = Output::new(dir);
    let (field, horizon, config, status) = match (v0, field_file) {
        (Some(v0), None) => {
            let horizon = positive("T", s.pick(a.horizon, "T", 0.3)?)?;
            let nt = at_least_two("nt", s.pick(a.nt, "nt", 256)?)?;
            let run = evolve_run(&v0, horizon, nt)?;
            out.record_input(&v0)?;
            write_evolution(&mut out, &run)?;
            let status = blowup_status(&run);
            let config = json!({ "v0": v0, "T": horizon, "nt": nt, "include_boundary": include_boundary });
            (run.field, horizon, config, status)
        }
        (None, Some(f)) => {
            let field = read_grid(&f)?.to_velocity().map_err(|e| input_error(&f, e))?;
            out.record_input(&f)?;
            let horizon = positive("T", s.pick(a.horizon, "T", field.tgrid().horizon())?)?;
            let config = json!({ "field": f, "T": horizon, "include_boundary": include_boundary });
            (field, horizon, config, Status::Complete)
        }
        _ => return Err(InputError("pass exactly one of --v0 and --field".into()).into()),
    };
    if matches!(status, Status::Complete) {
        let pressure = compute_pressure(&field)?;
        let cert = minimality_certificate(&field, horizon, include_boundary)?;
        out.write_json(
            "certificate.json",
            &json!({
                "T": cert.horizon,
                "sup_opnorm": cert.sup_opnorm,
                "margin": cert.margin,
                "verdict": cert.verdict,
                "consistency_residual": pressure.residual,
                "relative_residual": pressure.relative_residual,
                "flagged_non_solution": pressure.flagged(),
            }),
        )?;
        if pressure.flagged() {
            eprintln!(
                "warning: the field does not look like a solution (relative residual {:.3}); the certificate does not apply",
                pressure.relative_residual
            );
        }
    }
    out.finish("certify", config, &status_text(&status))?;
    Ok(status)
}

pub fn hellinger(a: HellingerArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let from = s.input(a.from, "from")?;
    let to = s.input(a.to, "to")?;
    let nx = s.pick_opt(a.nx, "nx")?.map(|n| at_least_two("nx", n)).transpose()?;
    let steps = at_least_two("steps", s.pick(a.steps, "steps", 32)?)?;
    let phi0 = read_map(&from, nx)?;
    let phi1 = read_map(&to, nx)?;
    let report = hellinger_path(&phi0, &phi1, steps).map_err(|e| InputError(e.to_string()))?;
    let mut out = Output::new(dir);
    out.record_input(&from)?;
    out.record_input(&to)?;
    out.write("path.csv", GridData::from_path(&report.path).to_csv())?;
    out.write_json(
        "report.json",
        &json!({
            "d_squared": report.d_squared,
            "energy": report.energy,
            "bound": report.bound,
            "within_bound": report.within_bound(),
            "max_velocity": report.max_velocity,
            "velocity_bound": report.velocity_bound(),
            "max_root_rate": report.max_root_rate,
            "root_rate_bound": report.root_rate_bound(),
        }),
    )?;
    out.write("snapshots.svg", path_snapshots("Hellinger path φ(t, ·)", &report.path))?;
    out.finish("hellinger", json!({ "from": from, "to": to, "nx": phi0.grid().cells(), "steps": steps }), "complete")?;
    Ok(Status::Complete)
}

pub fn fill(a: FillArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let path_file = s.input(a.path, "path")?;
    let jumps_file = s.input(a.jumps, "jumps")?;
    let eps = positive("eps", s.pick(a.eps, "eps", 0.1)?)?;
    let path = read_grid(&path_file)?.to_path().map_err(|e| input_error(&path_file, e))?;
    let jumps = read_jumps(&jumps_file, &path)?;
    let report = fill_jumps(&path, &jumps, eps)?;
    let mut out = Output::new(dir);
    out.record_input(&path_file)?;
    out.record_input(&jumps_file)?;
    out.write("filled.csv", GridData::from_path(&report.path).to_csv())?;
    out.write_json("report.json", &report)?;
    out.write("snapshots.svg", path_snapshots("filled path φ(t, ·)", &report.path))?;
    out.finish("fill", json!({ "path": path_file, "jumps": jumps_file, "eps": eps }), "complete")?;
    Ok(Status::Complete)
}

pub fn collapse(a: CollapseArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let nx = at_least_two("nx", s.pick(a.nx, "nx", 2048)?)?;
    let nt = at_least_two("nt", s.pick(a.nt, "nt", 2000)?)?;
    let horizon = positive("T", s.pick(a.horizon, "T", 1.0)?)?;
    let start: f64 = s.pick(a.start, "start", 0.75)?;
    let demo = collapse_demo(nx, nt, horizon, start).map_err(|e| InputError(e.to_string()))?;
    let mut out = Output::new(dir);
    let rows = (0..demo.times.len()).map(|k| vec![demo.times[k], demo.moving[k], demo.moving_exact[k], demo.resting[k]]);
    out.write("collapse.csv", trace_csv(&["t", "moving", "moving_exact", "resting"], rows))?;
    out.write_json("collapse.json", &json!({
        "start": demo.start,
        "arrival_time": demo.arrival_time,
        "arrival_time_exact": demo.arrival_time_exact,
        "arrival_error": demo.arrival_error(),
        "resting_drift": demo.resting_drift,
    }))?;
    let series = [
        Series { label: format!("computed, from x = {:.3}", demo.start), x: demo.times.clone(), y: demo.moving.clone() },
        Series { label: "closed form".into(), x: demo.times.clone(), y: demo.moving_exact.clone() },
        Series { label: "computed, from x = ½".into(), x: demo.times.clone(), y: demo.resting.clone() },
    ];
    out.write("collapse.svg", line_plot("trajectories of v = -∛(x - ½)", "t", "position", &series, false))?;
    out.finish("demo collapse", json!({ "nx": nx, "nt": nt, "T": horizon, "start": start }), "complete")?;
    Ok(Status::Complete)
}

pub fn peakon(a: PeakonArgs, s: &Settings, dir: PathBuf) -> Result<Status> {
    let nx = at_least_two("nx", s.pick(a.nx, "nx", 1024)?)?;
    let nt = at_least_two("nt", s.pick(a.nt, "nt", 4000)?)?;
    let horizon = positive("T", s.pick(a.horizon, "T", 1.0)?)?;
    let amplitude: f64 = s.pick(a.amplitude, "amplitude", 1.0)?;
    let width = positive("width", s.pick(a.width, "width", 0.05)?)?;
    let report = peakon_demo(nx, nt, horizon, amplitude, width).map_err(|e| InputError(e.to_string()))?;
    let mut out = Output::new(dir);
    let rows = (0..report.times.len()).map(|k| vec![report.times[k], report.min_density[k], report.energy[k]]);
    let mut csv = trace_csv(&["t", "min_density", "E"], rows);
    if let Some(msg) = &report.blowup {
        csv.push_str(&format!("# truncated: {msg}\n"));
    }
    out.write("peakon.csv", csv)?;
    out.write_json("peakon.json", &json!({
        "final_min_density": report.final_min_density,
        "final_time": report.times.last(),
        "monotone": report.monotone,
        "blowup": report.blowup,
    }))?;
    let series = [Series { label: "min ∂ₓφ".into(), x: report.times.clone(), y: report.min_density.clone() }];
    out.write("peakon.svg", line_plot("peakon-antipeakon collision", "t", "min ∂ₓφ (log scale)", &series, true))?;
    let status = match &report.blowup {
        Some(msg) => Status::Incomplete(format!("{msg}; min density reached {:.3e}", report.final_min_density)),
        None => Status::Complete,
    };
    out.finish(
        "demo peakon",
        json!({ "nx": nx, "nt": nt, "T": horizon, "amplitude": amplitude, "width": width }),
        &status_text(&status),
    )?;
    Ok(status)
}
