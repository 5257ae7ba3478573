use std::fmt;

use prethermal::coupling::{
    alpha_scan, default_scan_ratios, effective_potential, CouplingMatrix,
};
use prethermal::exact::{
    build_full_ising_capped, build_xy_sector, diagonal_ensemble, evolve_with, excitation_drift,
    final_distribution, full_pair_gaps, observable_c, ExcitationPattern, HamiltonianRep, QuenchTrace,
    DENSE_DIM_LIMIT,
};
use prethermal::lattice::exact_modes;
use prethermal::linalg::sym_eigen;
use prethermal::spinwave::{build_spinwave, evolve_spinwave, min_weighted_gap, pair_gap_spectrum, GgeState, PairGap};
use prethermal::stochastic::{noise_average, postselect, prepare_and_measure, sample_shots, NoiseDraw};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, CouplingSource, Model, RunConfig};
use crate::io::{self, pattern_label, OutDir};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(prethermal::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numeric(e) => write!(f, "numerical error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<prethermal::Error> for CliError {
    fn from(e: prethermal::Error) -> Self {
        match e {
            prethermal::Error::Io(io) => CliError::Io(io),
            other => CliError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn manifest(command: &str, cfg: &RunConfig, jm: &CouplingMatrix, results: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "j_max_rad_per_s": jm.j_max(),
        "alpha_fit": jm.alpha_fit(),
        "config": cfg,
        "results": results,
    })
}

/// Sample times in seconds for `t_max` given in units of 1/J_max.
fn time_grid(cfg: &RunConfig, j_max: f64) -> Vec<f64> {
    let t_end = cfg.t_max / j_max;
    let last = (cfg.n_points - 1) as f64;
    (0..cfg.n_points).map(|k| t_end * k as f64 / last).collect()
}

fn hamiltonian(cfg: &RunConfig, jm: &CouplingMatrix, b: f64, k: usize) -> prethermal::Result<HamiltonianRep> {
    match cfg.model {
        Model::Xy => build_xy_sector(jm, b, k),
        _ => build_full_ising_capped(jm, b, cfg.exact_cap),
    }
}

fn run_model(
    cfg: &RunConfig,
    jm: &CouplingMatrix,
    psi0: &ExcitationPattern,
    times: &[f64],
    draw: NoiseDraw,
) -> prethermal::Result<QuenchTrace> {
    let jm = jm.scaled(draw.j_scale);
    let b = cfg.b_field() + draw.b_offset;
    match cfg.model {
        Model::Spinwave => evolve_spinwave(&build_spinwave(&jm, b)?, psi0, times),
        _ => evolve_with(&hamiltonian(cfg, &jm, b, psi0.excitations())?, psi0, times, cfg.propagation),
    }
}

pub fn couplings(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let (jm, trap) = cfg.couplings()?;
    io::write_couplings(&out.file("couplings.csv"), &jm)?;
    let spectrum: Vec<f64> = sym_eigen(jm.j_script())?.values.iter().copied().collect();
    io::write_indexed(&out.file("modes.csv"), &spectrum)?;
    let mut results = json!({ "n_pairs": jm.n() * (jm.n() - 1) / 2 });
    if let Some(trap) = &trap {
        let pot = effective_potential(&jm)?;
        io::write_potential(&out.file("potential.csv"), &pot)?;
        let phonons = exact_modes(trap)?.frequencies.unwrap_or_default();
        io::write_indexed(&out.file("phonons.csv"), &phonons)?;
        results["mu_rad_per_s"] = json!(trap.mu);
        results["rabi_rad_per_s"] = json!(trap.rabi);
        results["detuning_ratio"] = json!(trap.detuning_ratio());
        results["barrier_height_rad_per_s"] = json!(pot.barrier_height);
        results["has_interior_maximum"] = json!(pot.has_interior_maximum());
    }
    io::write_json(&out.file("couplings.json"), &manifest("couplings", cfg, &jm, results))?;
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary {
    pattern: Vec<usize>,
    label: String,
    c_cumulative_final: f64,
    c_time_average: Option<f64>,
    c_gge: f64,
    c_diagonal_ensemble: Option<f64>,
    excitation_drift: f64,
    noise_samples: Option<usize>,
}

pub fn evolve(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let (jm, _) = cfg.couplings()?;
    let times = time_grid(cfg, jm.j_max());
    let sys = build_spinwave(&jm, cfg.b_field())?;
    let model = cfg.noise_model();
    let mut summaries = Vec::new();
    for psi0 in cfg.pattern_list() {
        let label = pattern_label(&psi0);
        let run = |d| run_model(cfg, &jm, &psi0, &times, d);
        let trace = if cfg.noise_samples > 0 {
            noise_average(run, &model, cfg.noise_samples)?
        } else {
            run(NoiseDraw::NONE)?
        };
        io::write_trace(&out.file(&format!("trace_{label}.csv")), &trace)?;
        io::write_summary(&out.file(&format!("summary_{label}.csv")), &trace)?;
        let gge = GgeState::new(&sys, &psi0)?;
        io::write_site_values(&out.file(&format!("gge_{label}.csv")), "sz_gge", &gge.sz_gge)?;
        let de = match cfg.model {
            Model::Spinwave => None,
            _ => {
                let h = hamiltonian(cfg, &jm, cfg.b_field(), psi0.excitations())?;
                if h.dimension() <= DENSE_DIM_LIMIT {
                    Some(diagonal_ensemble(&h, &psi0)?)
                } else {
                    None
                }
            }
        };
        if let Some(de) = &de {
            io::write_site_values(&out.file(&format!("de_{label}.csv")), "sz_de", de)?;
        }
        summaries.push(EvolveSummary {
            pattern: psi0.flipped().to_vec(),
            label,
            c_cumulative_final: *trace.c_cumulative().last().expect("n_points >= 2"),
            c_time_average: trace.time_average_c(),
            c_gge: observable_c(&gge.sz_gge)?,
            c_diagonal_ensemble: de.as_deref().map(observable_c).transpose()?,
            excitation_drift: excitation_drift(&trace)?,
            noise_samples: trace.noise_samples(),
        });
    }
    io::write_json(&out.file("evolve.json"), &manifest("evolve", cfg, &jm, json!(summaries)))?;
    Ok(())
}

pub fn gge(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let (jm, _) = cfg.couplings()?;
    let sys = build_spinwave(&jm, cfg.b_field())?;
    let mut results = Vec::new();
    for psi0 in cfg.pattern_list() {
        let label = pattern_label(&psi0);
        let gge = GgeState::new(&sys, &psi0)?;
        io::write_site_values(&out.file(&format!("gge_{label}.csv")), "sz_gge", &gge.sz_gge)?;
        io::write_indexed(&out.file(&format!("gge_occupations_{label}.csv")), &gge.d_occupations)?;
        results.push(json!({
            "pattern": psi0.flipped(),
            "label": label,
            "c_gge": observable_c(&gge.sz_gge)?,
            "lambdas": gge.lambdas,
        }));
    }
    io::write_json(&out.file("gge.json"), &manifest("gge", cfg, &jm, json!(results)))?;
    Ok(())
}

struct GapRow {
    alpha: f64,
    alpha_fit: Option<f64>,
    j_max: f64,
    gaps: Vec<PairGap>,
}

pub fn gaps(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let psi0 = cfg.pattern_list().remove(0);
    if psi0.excitations() != 1 {
        return Err(ConfigError(format!(
            "config key `patterns`: gaps need a single-excitation first pattern, got {psi0}"
        ))
        .into());
    }
    let rows = cfg
        .alpha_grid
        .par_iter()
        .map(|&alpha| -> Result<GapRow> {
            let (jm, _) = cfg.couplings_at(Some(alpha))?;
            let gaps = match cfg.model {
                Model::Exact => full_pair_gaps(&build_full_ising_capped(&jm, cfg.b_field(), cfg.exact_cap)?, &psi0)?,
                _ => pair_gap_spectrum(&build_spinwave(&jm, cfg.b_field())?, &psi0)?,
            };
            Ok(GapRow {
                alpha,
                alpha_fit: jm.alpha_fit(),
                j_max: jm.j_max(),
                gaps,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut all = io::Table::new(&["alpha", "gap_over_J_max", "weight"]);
    let mut minima = io::Table::new(&["alpha", "alpha_fit", "min_gap_over_J_max"]);
    let mut results = Vec::new();
    for row in &rows {
        for g in &row.gaps {
            all.row(&[io::num(row.alpha), io::num(g.gap / row.j_max), io::num(g.weight)]);
        }
        let min = min_weighted_gap(&row.gaps, cfg.gap_min_weight).map(|g| g / row.j_max);
        minima.row(&[
            io::num(row.alpha),
            row.alpha_fit.map_or("nan".into(), io::num),
            min.map_or("nan".into(), io::num),
        ]);
        results.push(json!({
            "alpha": row.alpha,
            "alpha_fit": row.alpha_fit,
            "min_gap_over_j_max": min,
        }));
    }
    all.write(&out.file("gaps.csv"))?;
    minima.write(&out.file("gaps_min.csv"))?;
    let (jm, _) = cfg.couplings_at(Some(cfg.alpha_grid[0]))?;
    io::write_json(&out.file("gaps.json"), &manifest("gaps", cfg, &jm, json!(results)))?;
    Ok(())
}

pub fn shots(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let (jm, _) = cfg.couplings()?;
    let t = cfg.shot_time.unwrap_or(cfg.t_max) / jm.j_max();
    let model = cfg.noise_model();
    let b = cfg.b_field();
    let full = match cfg.model {
        Model::Exact => Some(build_full_ising_capped(&jm, b, cfg.exact_cap)?),
        _ => None,
    };
    let mut results = Vec::new();
    for (stream, psi0) in cfg.pattern_list().iter().enumerate() {
        let label = pattern_label(psi0);
        let (mut records, sampling) = match cfg.model {
            Model::Spinwave => {
                let sz = evolve_spinwave(&build_spinwave(&jm, b)?, psi0, &[t])?.sz()[0].clone();
                (sample_shots(&sz, &model, cfg.n_shots, stream as u64)?, "product")
            }
            _ => {
                let records = prepare_and_measure(psi0, &model, cfg.n_shots, stream as u64, |p| match &full {
                    Some(h) => final_distribution(h, p, t, cfg.propagation),
                    None => final_distribution(&build_xy_sector(&jm, b, p.excitations())?, p, t, cfg.propagation),
                })?;
                (records, "joint")
            }
        };
        let sel = postselect(&mut records, psi0.excitations())?;
        io::write_shots(&out.file(&format!("shots_{label}.txt")), &records)?;
        io::write_postselection(&out.file(&format!("postselected_{label}.csv")), &sel)?;
        results.push(json!({
            "pattern": psi0.flipped(),
            "label": label,
            "sampling": sampling,
            "time_seconds": t,
            "accepted": sel.accepted,
            "total": sel.total,
            "accepted_fraction": sel.accepted_fraction,
            "c_estimate": observable_c(&sel.sz_estimate)?,
        }));
    }
    io::write_json(&out.file("shots.json"), &manifest("shots", cfg, &jm, json!(results)))?;
    Ok(())
}

pub fn sweep_alpha(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    if cfg.coupling != CouplingSource::Trap {
        return Err(ConfigError("config key `coupling`: sweep-alpha needs coupling = \"trap\"".into()).into());
    }
    let points = alpha_scan(&cfg.trap(), &default_scan_ratios())?;
    let mut t = io::Table::new(&["detuning_ratio", "mu_rad_per_s", "alpha", "J_max_rad_per_s"]);
    for p in &points {
        t.row(&[io::num(p.detuning_ratio), io::num(p.mu), io::num(p.alpha), io::num(p.j_max)]);
    }
    t.write(&out.file("sweep_alpha.csv"))?;
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.alpha), hi.max(p.alpha)));
    let results = json!({ "points": points.len(), "alpha_min": lo, "alpha_max": hi });
    let doc = json!({
        "command": "sweep-alpha",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "results": results,
    });
    io::write_json(&out.file("sweep_alpha.json"), &doc)?;
    Ok(())
}
