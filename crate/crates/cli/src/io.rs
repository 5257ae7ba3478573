//! Output files. Every CSV starts with a `#` line naming its columns, numbers
//! use the shortest representation that round-trips, lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use prethermal::coupling::{CouplingMatrix, EffectivePotential};
use prethermal::exact::{ExcitationPattern, QuenchTrace};
use prethermal::stochastic::{PostSelection, ShotRecord};
use serde::Serialize;

/// Shortest round-trip decimal form of `x`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub struct Table {
    text: String,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            text: format!("# {}\n", columns.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, &self.text)
    }
}

/// File-name label for a pattern: `p1`, `p2-4`, `p0` for no flips.
pub fn pattern_label(p: &ExcitationPattern) -> String {
    if p.flipped().is_empty() {
        return "p0".into();
    }
    let sites: Vec<String> = p.flipped().iter().map(|s| s.to_string()).collect();
    format!("p{}", sites.join("-"))
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(path)?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

pub fn write_couplings(path: &Path, jm: &CouplingMatrix) -> std::io::Result<()> {
    let mut t = Table::new(&["i", "j", "J_rad_per_s"]);
    let n = jm.n();
    for i in 0..n {
        for j in i + 1..n {
            t.row(&[(i + 1).to_string(), (j + 1).to_string(), num(jm.j()[(i, j)])]);
        }
    }
    t.write(path)
}

pub fn write_potential(path: &Path, pot: &EffectivePotential) -> std::io::Result<()> {
    let mut t = Table::new(&["site", "U_rad_per_s"]);
    for (i, u) in pot.u.iter().enumerate() {
        t.row(&[(i + 1).to_string(), num(*u)]);
    }
    t.write(path)
}

pub fn write_indexed(path: &Path, values: &[f64]) -> std::io::Result<()> {
    let mut t = Table::new(&["index", "value"]);
    for (k, v) in values.iter().enumerate() {
        t.row(&[k.to_string(), num(*v)]);
    }
    t.write(path)
}

/// Long format, one row per (time, site).
pub fn write_trace(path: &Path, trace: &QuenchTrace) -> std::io::Result<()> {
    let mut t = Table::new(&["t_seconds", "site", "sz"]);
    for (time, row) in trace.times().iter().zip(trace.sz()) {
        for (i, s) in row.iter().enumerate() {
            t.row(&[num(*time), (i + 1).to_string(), num(*s)]);
        }
    }
    t.write(path)
}

pub fn write_summary(path: &Path, trace: &QuenchTrace) -> std::io::Result<()> {
    let samples = trace.noise_samples();
    let mut columns = vec!["t_seconds", "C", "C_cumulative"];
    if samples.is_some() {
        columns.push("n_samples");
    }
    let mut t = Table::new(&columns);
    for k in 0..trace.len() {
        let mut cells = vec![
            num(trace.times()[k]),
            num(trace.c_series()[k]),
            num(trace.c_cumulative()[k]),
        ];
        if let Some(n) = samples {
            cells.push(n.to_string());
        }
        t.row(&cells);
    }
    t.write(path)
}

pub fn write_site_values(path: &Path, column: &str, values: &[f64]) -> std::io::Result<()> {
    let mut t = Table::new(&["site", column]);
    for (i, v) in values.iter().enumerate() {
        t.row(&[(i + 1).to_string(), num(*v)]);
    }
    t.write(path)
}

pub fn write_shots(path: &Path, shots: &[ShotRecord]) -> std::io::Result<()> {
    let mut text = String::with_capacity(shots.len() * (shots.first().map_or(0, |s| s.bits.len()) + 1));
    for s in shots {
        let _ = writeln!(text, "{}", s.bitstring());
    }
    fs::write(path, text)
}

pub fn write_postselection(path: &Path, sel: &PostSelection) -> std::io::Result<()> {
    let mut t = Table::new(&["site", "sz_estimate", "sz_stderr"]);
    for (i, (e, s)) in sel.sz_estimate.iter().zip(&sel.sz_stderr).enumerate() {
        t.row(&[(i + 1).to_string(), num(*e), num(*s)]);
    }
    t.write(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}
