use std::path::{Path, PathBuf};

use log::{info, warn};
use mhd_regularity::identities::{
    condition_a_monitor, condition_b_monitor, identity_28, identity_weighted, local_energy_ratios, tail_energy_about,
};
use mhd_regularity::kernels::{kernel_sweep, DEFAULT_ALPHAS, DEFAULT_RATIOS};
use mhd_regularity::logpot::{
    d1_d2_split, dyadic_radii, lemma11_check, orlicz_l32_norm, strided_centers, uniform_decay_profile,
    weighted_local_sup,
};
use mhd_regularity::pressure::{pressure_freespace, pressure_periodic};
use mhd_regularity::solver::{
    self, random_solenoidal_init, taylor_green_init, DiagnosticsHook, DiagnosticsRecord, RunOptions, SimState,
};
use mhd_regularity::{Grid, Point, ScalarField};
use serde::{Deserialize, Serialize};

use crate::config::{InitKind, OutputFormat, RunConfig};
use crate::error::CliError;
use crate::output::{emit_plot_data, ensure_dir, load_fields, read_plot_data, save_fields, write_json};

/// One line of `snapshots.csv`, the trajectory index read by `diagnose`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub step: usize,
    pub t: f64,
    pub file: String,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    version: &'static str,
    config: &'a RunConfig,
    steps: usize,
    records: usize,
    t_final: f64,
    energy_initial: f64,
    energy_final: f64,
    max_step_energy_residual: f64,
    max_divergence_final: f64,
    snapshots: &'a [SnapshotEntry],
}

fn initial_state(cfg: &RunConfig) -> Result<SimState, CliError> {
    let grid = Grid::new(cfg.grid.n, cfg.grid.length)?;
    Ok(match cfg.init.kind {
        InitKind::TaylorGreen => taylor_green_init(grid),
        InitKind::Random => random_solenoidal_init(grid, cfg.init.seed, cfg.init.spectrum_slope)?,
        InitKind::File => {
            let path = cfg.init.path.as_deref().expect("validated");
            let state = SimState::from_fields(load_fields(path)?, 0.0)?;
            let g = state.grid();
            if g.n() != cfg.grid.n || g.length() != cfg.grid.length {
                return Err(CliError::validation(format!(
                    "config key `grid.n`: init.path holds n = {}, L = {} but the config asks for n = {}, L = {}",
                    g.n(),
                    g.length(),
                    cfg.grid.n,
                    cfg.grid.length
                )));
            }
            state.ensure_finite()?;
            state
        }
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let initial = initial_state(cfg)?;
    let params = cfg.solver.params();
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;

    let d = &cfg.diagnostics;
    let centers = strided_centers(initial.grid(), d.center_stride);
    let mut hook = |state: &SimState, rec: &mut DiagnosticsRecord| -> mhd_regularity::Result<()> {
        let bundle = pressure_periodic(&state.u, &state.b)?;
        rec.orlicz_p_minus = orlicz_l32_norm(&bundle.p_minus, d.gamma)?;
        rec.orlicz_bernoulli_plus = orlicz_l32_norm(&bundle.bernoulli_plus(), d.gamma)?;
        if !d.r_set.is_empty() {
            let table = local_energy_ratios(state, &centers, &d.r_set)?;
            rec.local_energy_sup_u = table.sup_u;
            rec.local_energy_sup_b = table.sup_b;
        }
        if let Some(r) = d.tail_radius {
            rec.tail_energy = tail_energy_about(state, state.grid().center(), r)?;
        }
        Ok(())
    };
    let hook_ref: Option<&mut DiagnosticsHook<'_>> = if d.enabled { Some(&mut hook) } else { None };
    let options = RunOptions {
        record_every: cfg.output.record_every,
        snapshot_every: cfg.output.snapshot_every,
    };
    let run = solver::run(&initial, &params, options, hook_ref)?;

    let mut entries = Vec::new();
    if cfg.output.wants(OutputFormat::Binary) {
        for (step, state) in &run.snapshots {
            let file = format!("snapshot_{step:06}.mhdf");
            save_fields(&dir.join(&file), &state.fields())?;
            entries.push(SnapshotEntry {
                step: *step,
                t: state.t,
                file,
            });
        }
        let steps = params.steps();
        if entries.last().map(|e| e.step) != Some(steps) {
            let file = format!("snapshot_{steps:06}.mhdf");
            save_fields(&dir.join(&file), &run.final_state.fields())?;
            entries.push(SnapshotEntry {
                step: steps,
                t: run.final_state.t,
                file,
            });
        }
        emit_plot_data(&entries, &dir.join("snapshots.csv"))?;
    }
    if cfg.output.wants(OutputFormat::Csv) {
        if run.records.is_empty() {
            warn!("no step reached output.record_every; series.csv not written");
        } else {
            emit_plot_data(&run.records, &dir.join("series.csv"))?;
        }
    }
    if cfg.output.wants(OutputFormat::Json) {
        let meta = RunMetadata {
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            steps: params.steps(),
            records: run.records.len(),
            t_final: run.final_state.t,
            energy_initial: initial.energy(),
            energy_final: run.final_state.energy(),
            max_step_energy_residual: run.max_step_energy_residual,
            max_divergence_final: run.final_state.max_divergence()?,
            snapshots: &entries,
        };
        write_json(&meta, &dir.join("run.json"))?;
    }
    info!(
        "simulate: {} steps, E {:.6e} -> {:.6e}",
        params.steps(),
        initial.energy(),
        run.final_state.energy()
    );
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionARow {
    pub t: f64,
    pub orlicz_p_minus: f64,
    pub running_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionBRow {
    pub t: f64,
    pub orlicz_bernoulli_plus: f64,
    pub running_sup: f64,
}

#[derive(Serialize)]
struct DiagnoseSummary {
    gamma: f64,
    snapshots: usize,
    t_first: f64,
    t_last: f64,
    sup_orlicz_p_minus: f64,
    sup_orlicz_bernoulli_plus: f64,
}

pub fn diagnose(cfg: &RunConfig, traj: &Path, gamma: f64) -> Result<(), CliError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(CliError::validation(format!("--gamma must be positive, got {gamma}")));
    }
    let entries: Vec<SnapshotEntry> = read_plot_data(&traj.join("snapshots.csv"))?;
    if entries.is_empty() {
        return Err(CliError::validation(format!("{} lists no snapshots", traj.display())));
    }
    let states = entries
        .iter()
        .map(|e| Ok(SimState::from_fields(load_fields(&traj.join(&e.file))?, e.t)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    for s in &states {
        s.ensure_finite()?;
    }
    let a = condition_a_monitor(&states, gamma)?;
    let b = condition_b_monitor(&states, gamma)?;
    let rows_a: Vec<ConditionARow> = a
        .iter()
        .map(|m| ConditionARow {
            t: m.t,
            orlicz_p_minus: m.value,
            running_sup: m.running_sup,
        })
        .collect();
    let rows_b: Vec<ConditionBRow> = b
        .iter()
        .map(|m| ConditionBRow {
            t: m.t,
            orlicz_bernoulli_plus: m.value,
            running_sup: m.running_sup,
        })
        .collect();
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    emit_plot_data(&rows_a, &dir.join("condition_a.csv"))?;
    emit_plot_data(&rows_b, &dir.join("condition_b.csv"))?;
    if cfg.output.wants(OutputFormat::Json) {
        let summary = DiagnoseSummary {
            gamma,
            snapshots: states.len(),
            t_first: states[0].t,
            t_last: states[states.len() - 1].t,
            sup_orlicz_p_minus: rows_a.last().map_or(0.0, |r| r.running_sup),
            sup_orlicz_bernoulli_plus: rows_b.last().map_or(0.0, |r| r.running_sup),
        };
        write_json(&summary, &dir.join("diagnose.json"))?;
    }
    Ok(())
}

pub fn pressure(input: &Path, out: &Path, freespace: bool, pad: usize) -> Result<(), CliError> {
    let state = SimState::from_fields(load_fields(input)?, 0.0)?;
    state.ensure_finite()?;
    let bundle = if freespace {
        pressure_freespace(&state.u, &state.b, pad)?
    } else {
        pressure_periodic(&state.u, &state.b)?
    };
    bundle.p.ensure_finite("pressure")?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    save_fields(out, &bundle.fields())
}

pub fn verify_kernels(
    cfg: &RunConfig,
    alphas: Option<&[f64]>,
    ratios: Option<&[f64]>,
    report: &Path,
    tol: f64,
) -> Result<(), CliError> {
    let rows = kernel_sweep(alphas.unwrap_or(&DEFAULT_ALPHAS), ratios.unwrap_or(&DEFAULT_RATIOS))?;
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    emit_plot_data(&rows, &dir.join(report))?;
    let worst = rows
        .iter()
        .map(|r| (r.potential_rel_error.max(r.hessian_rel_error).max(r.trace_error), r))
        .fold(None::<(f64, _)>, |acc, (e, r)| match acc {
            Some((best, _)) if e <= best => acc,
            _ => Some((e, r)),
        });
    if let Some((err, row)) = worst {
        println!("verify-kernels: {} rows, worst relative error {err:.3e}", rows.len());
        if !(err <= tol) {
            return Err(CliError::numerical(format!(
                "kernel sweep error {err:.3e} at alpha = {}, ratio = {} exceeds {tol:e}",
                row.alpha, row.ratio
            )));
        }
    }
    Ok(())
}

/// Parses `x,y,z;x,y,z;...`.
pub fn parse_centers(text: &str) -> Result<Vec<Point>, CliError> {
    let bad = |why: String| CliError::validation(format!("--centers: {why}"));
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|triple| {
            let v = triple
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| bad(format!("`{c}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            <[f64; 3]>::try_from(v).map_err(|v| bad(format!("`{triple}` has {} coordinates, need 3", v.len())))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|c| if c.is_empty() { Err(bad("no centers".into())) } else { Ok(c) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub identity: String,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub alpha: Option<f64>,
    #[serde(rename = "R")]
    pub radius: f64,
    pub lhs: f64,
    pub mid: Option<f64>,
    pub rhs: f64,
    pub restated: Option<f64>,
    pub rel_residual: f64,
}

pub fn verify_identities(
    cfg: &RunConfig,
    field: &Path,
    alpha: f64,
    radius: f64,
    centers: Option<Vec<Point>>,
    report: &Path,
    tol: f64,
) -> Result<(), CliError> {
    let mut fields = load_fields(field)?;
    let p = match fields.len() {
        6 => None,
        7 => fields.pop(),
        k => {
            return Err(CliError::validation(format!(
                "{} holds {k} fields, expected 6 (u, b) or 7 (u, b, p)",
                field.display()
            )))
        }
    };
    let state = SimState::from_fields(fields, 0.0)?;
    state.ensure_finite()?;
    let p = match p {
        Some(p) => {
            p.ensure_finite("pressure")?;
            p
        }
        None => pressure_freespace(&state.u, &state.b, 2)?.p,
    };
    let centers = centers.unwrap_or_else(|| vec![state.grid().center()]);
    let mut rows = Vec::with_capacity(2 * centers.len());
    for x0 in centers {
        let w = identity_weighted(&state.u, &state.b, &p, x0, radius, alpha)?;
        let t = identity_28(&state.u, &state.b, &p, x0, radius)?;
        for (name, rep, a) in [("weighted", w, Some(alpha)), ("three_way", t, None)] {
            rows.push(IdentityRow {
                identity: name.into(),
                x0: x0[0],
                y0: x0[1],
                z0: x0[2],
                alpha: a,
                radius,
                lhs: rep.lhs,
                mid: rep.mid,
                rhs: rep.rhs,
                restated: rep.restated,
                rel_residual: rep.rel_residual,
            });
        }
    }
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    emit_plot_data(&rows, &dir.join(report))?;
    if let Some(row) = rows.iter().find(|r| !(r.rel_residual <= tol)) {
        return Err(CliError::numerical(format!(
            "{} identity at ({}, {}, {}) has relative residual {:.3e} above {tol:e}",
            row.identity, row.x0, row.y0, row.z0, row.rel_residual
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma {
    L11,
    L12,
    Cor1,
}

pub struct LemmaRequest<'a> {
    pub which: Lemma,
    pub gamma: f64,
    pub fields: &'a [PathBuf],
    pub component: usize,
    pub rmin: Option<f64>,
    pub rmax: f64,
    pub stride: usize,
    pub report: &'a Path,
}

/// One scan row. Columns that do not apply to the chosen check stay empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub field: usize,
    pub r: f64,
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub z0: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    #[serde(rename = "J1")]
    pub j1: Option<f64>,
    #[serde(rename = "J2")]
    pub j2: Option<f64>,
    #[serde(rename = "D1")]
    pub d1: Option<f64>,
    #[serde(rename = "D2")]
    pub d2: Option<f64>,
    pub potential: Option<f64>,
    pub bound1: Option<f64>,
    pub bound2: Option<f64>,
}

fn center_columns(c: Point) -> (Option<f64>, Option<f64>, Option<f64>) {
    (Some(c[0]), Some(c[1]), Some(c[2]))
}

pub fn lemma_check(cfg: &RunConfig, req: LemmaRequest<'_>) -> Result<(), CliError> {
    let fields = req
        .fields
        .iter()
        .map(|path| {
            let mut all = load_fields(path)?;
            if req.component >= all.len() {
                return Err(CliError::validation(format!(
                    "--component {} out of range: {} holds {} fields",
                    req.component,
                    path.display(),
                    all.len()
                )));
            }
            let f: ScalarField = all.swap_remove(req.component);
            f.ensure_finite("field")?;
            Ok(f)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let grid = *fields[0].grid();
    let rmin = req.rmin.unwrap_or(3.0 * grid.spacing());
    let radii = dyadic_radii(rmin, req.rmax.min(0.5));
    if radii.is_empty() {
        return Err(CliError::validation(format!(
            "no dyadic radius in [{rmin}, {}]",
            req.rmax.min(0.5)
        )));
    }
    let centers = strided_centers(&grid, req.stride);
    let mut rows = Vec::new();
    let mut breach = None;
    match req.which {
        Lemma::L11 => {
            for (k, f) in fields.iter().enumerate() {
                let rep = lemma11_check(f, req.gamma, &radii, &centers)?;
                if let Some(r) = rep.violations().first() {
                    breach.get_or_insert(format!("field {k}: J exceeds the envelope sum at r = {r}"));
                }
                for row in &rep.rows {
                    let (x0, y0, z0) = center_columns(row.center);
                    rows.push(LemmaRow {
                        field: k,
                        r: row.r,
                        x0,
                        y0,
                        z0,
                        j: Some(row.j),
                        j1: Some(row.j1),
                        j2: Some(row.j2),
                        bound1: Some(row.j1_envelope),
                        bound2: Some(row.j2_envelope),
                        ..Default::default()
                    });
                }
            }
        }
        Lemma::L12 => {
            for (k, f) in fields.iter().enumerate() {
                let scan = weighted_local_sup(f, req.gamma, &radii, &centers)?;
                for e in &scan.entries {
                    let d = d1_d2_split(f, e.center, e.r, req.gamma)?;
                    let slack = 1.0 + 1e-12;
                    if d.d1 > d.bound1 * slack || d.d2 > d.bound2 * slack {
                        breach.get_or_insert(format!("field {k}: D split exceeds its bound at r = {}", e.r));
                    }
                    let (x0, y0, z0) = center_columns(e.center);
                    rows.push(LemmaRow {
                        field: k,
                        r: e.r,
                        x0,
                        y0,
                        z0,
                        j: Some(e.j),
                        j1: Some(e.j1),
                        j2: Some(e.j2),
                        d1: Some(d.d1),
                        d2: Some(d.d2),
                        potential: Some(d.d1 + d.d2),
                        bound1: Some(d.bound1),
                        bound2: Some(d.bound2),
                    });
                }
            }
        }
        Lemma::Cor1 => {
            let profile = uniform_decay_profile(&fields, req.gamma, &radii, &centers)?;
            for row in &profile.rows {
                if row.sup_potential > row.bound * (1.0 + 1e-12) {
                    breach.get_or_insert(format!(
                        "uniform potential {:.3e} exceeds its bound {:.3e} at r = {}",
                        row.sup_potential, row.bound, row.r
                    ));
                }
                rows.push(LemmaRow {
                    r: row.r,
                    potential: Some(row.sup_potential),
                    bound1: Some(row.bound),
                    ..Default::default()
                });
            }
        }
    }
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    emit_plot_data(&rows, &dir.join(req.report))?;
    match breach {
        Some(msg) => Err(CliError::numerical(msg)),
        None => Ok(()),
    }
}
