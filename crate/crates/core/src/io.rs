//! CSV tables with JSON sidecars. Floats are written with 17 significant
//! digits so that they read back bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Parity, RadialField};
use crate::flow::{Bound, FlowRun};
use crate::grid::{make_grid, RadialGrid};
use crate::profiles::{Profile, ProfileSource};
use crate::spectrum::SpectrumReport;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path.file_name().ok_or_else(|| Error::Format(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })
}

/// A CSV document with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("empty CSV document".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Format(format!(
                    "row {} has {} fields, header has {}",
                    k + 1,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column {name}")))
    }

    pub fn float_column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .map(|row| row[j].parse::<f64>().map_err(|e| Error::Format(format!("column {name}: {e}"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub nodes: usize,
    pub r_max: f64,
    pub stretch: f64,
    pub hash: String,
}

impl GridMeta {
    pub fn of(grid: &RadialGrid) -> Self {
        Self { nodes: grid.len(), r_max: grid.r_max(), stretch: grid.stretch(), hash: grid.hash_hex() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub n: usize,
    pub a_n: f64,
    pub tail_c: f64,
    pub residual_sup: f64,
    pub grid: GridMeta,
    pub source: ProfileSource,
}

impl ProfileMeta {
    pub fn of(profile: &Profile) -> Self {
        Self {
            n: profile.n(),
            a_n: profile.a(),
            tail_c: profile.tail_c(),
            residual_sup: profile.residual_sup(),
            grid: GridMeta::of(profile.grid()),
            source: profile.source().clone(),
        }
    }
}

/// Columns `r, phi, dphi`.
pub fn profile_table(profile: &Profile) -> Table {
    let mut t = Table::new(["r", "phi", "dphi"]);
    let (r, p, d) = (profile.grid().nodes(), profile.phi().values(), profile.dphi().values());
    for i in 0..r.len() {
        t.push_floats(&[r[i], p[i], d[i]]);
    }
    t
}

/// Rebuilds a profile from its table and sidecar, checking the grid.
pub fn read_profile(table: &Table, meta: &ProfileMeta) -> Result<Profile> {
    let grid = make_grid(meta.grid.nodes, meta.grid.r_max, meta.grid.stretch)?;
    if grid.hash_hex() != meta.grid.hash {
        return Err(Error::Format("grid hash in the sidecar does not match its parameters".into()));
    }
    let r = table.float_column("r")?;
    if r.len() != grid.len() || r.iter().zip(grid.nodes()).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err(Error::Format("profile nodes differ from the sidecar grid".into()));
    }
    let phi = RadialField::with_parity(&grid, table.float_column("phi")?, Parity::Even)?;
    let dphi = RadialField::with_parity(&grid, table.float_column("dphi")?, Parity::Odd)?;
    let profile = Profile::restore(meta.n, meta.a_n, meta.tail_c, phi, dphi, meta.source.clone())?;
    // Recomputed from the samples, so only agreement to round-off is expected.
    let (got, want) = (profile.residual_sup(), meta.residual_sup);
    if !((got - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::Format(format!(
            "stored residual {:e} does not match the samples ({:e})",
            meta.residual_sup,
            profile.residual_sup()
        )));
    }
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub profile_n: usize,
    pub nonpositive_count: usize,
    pub gap: Option<f64>,
    pub complete: bool,
    pub grid: GridMeta,
    pub extrapolated: Option<Vec<f64>>,
}

impl SpectrumMeta {
    pub fn of(report: &SpectrumReport, profile_n: usize, grid: &RadialGrid) -> Self {
        Self {
            profile_n,
            nonpositive_count: report.nonpositive_count,
            gap: report.gap,
            complete: report.complete,
            grid: GridMeta::of(grid),
            extrapolated: report.extrapolated.clone(),
        }
    }
}

/// Columns `index, eigenvalue, residual, tail_slope`; a missing slope is `nan`.
pub fn spectrum_table(report: &SpectrumReport, tail_slopes: &[Option<f64>]) -> Table {
    let mut t = Table::new(["index", "eigenvalue", "residual", "tail_slope"]);
    for (k, p) in report.pairs.iter().enumerate() {
        let slope = tail_slopes.get(k).copied().flatten().unwrap_or(f64::NAN);
        t.rows.push(vec![p.index.to_string(), fmt_f64(p.eigenvalue), fmt_f64(p.residual), fmt_f64(slope)]);
    }
    t
}

fn bound_code(b: Bound) -> u8 {
    match b {
        Bound::Scaling => 1,
        Bound::Unstable => 2,
        Bound::EpsL2 => 3,
        Bound::EpsInf => 4,
        Bound::Weighted => 5,
        Bound::Gradient => 6,
        Bound::Tube => 7,
    }
}

/// One row per recorded sample. `exit_flag` is 0, or on the exit row the
/// violated bound numbered 1 (scaling) to 6 (gradient), 7 for the tube.
pub fn trajectory_table(run: &FlowRun) -> Table {
    let k = run.final_state.a.len();
    let mut header: Vec<String> = ["s", "lambda", "lambda_e_s2", "t"].iter().map(|s| s.to_string()).collect();
    header.extend((0..k).map(|j| format!("a_{}", j + 2)));
    header.extend(["eps_L2rho", "eps_Linf", "weighted_sup", "grad_sup", "exit_flag"].iter().map(|s| s.to_string()));
    let mut t = Table { header, rows: Vec::with_capacity(run.samples.len()) };
    let last = run.samples.len().saturating_sub(1);
    for (i, p) in run.samples.iter().enumerate() {
        let mut row = vec![fmt_f64(p.s), fmt_f64(p.lambda), fmt_f64(p.lambda * (0.5 * p.s).exp()), fmt_f64(p.t)];
        row.extend(p.a.iter().map(|a| fmt_f64(*a)));
        row.extend([p.eps_l2, p.eps_inf, p.weighted_sup, p.grad_sup].iter().map(|v| fmt_f64(*v)));
        let flag = match run.exit {
            Some(e) if i == last => bound_code(e.bound),
            _ => 0,
        };
        row.push(flag.to_string());
        t.rows.push(row);
    }
    t
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
