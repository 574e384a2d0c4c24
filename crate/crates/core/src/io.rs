//! File formats: coefficient JSON for polynomials and Toeplitz generators,
//! sample-grid CSV, filter-bank JSON and filter-bank design configs.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::filterbank::{
    desired_from_tiling, DesignSpec, FilterBank, InitStrategy, PenaltySchedule, SynthesisBank,
    WedgeTiling,
};
use crate::poly::{SampleGrid, TrigPoly};
use crate::toeplitz::ToeplitzSpec;

/// Value of `kind` marking a Toeplitz generator file.
pub const TOEPLITZ_KIND: &str = "toeplitz";

/// Coefficients flattened row-major over `{-n..n}^d`, first index slowest.
/// A missing `coeffs_imag` means a real coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFile {
    pub dim: usize,
    pub degree: usize,
    pub coeffs_real: Vec<f64>,
    #[serde(default)]
    pub coeffs_imag: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl PolyFile {
    pub fn from_poly(p: &TrigPoly) -> Self {
        Self {
            dim: p.dim(),
            degree: p.degree(),
            coeffs_real: p.coeffs().iter().map(|c| c.re).collect(),
            coeffs_imag: p.coeffs().iter().map(|c| c.im).collect(),
            kind: None,
        }
    }

    pub fn to_poly(&self) -> Result<TrigPoly> {
        let len = self.coeffs_real.len();
        if !self.coeffs_imag.is_empty() && self.coeffs_imag.len() != len {
            return Err(argument(format!(
                "coeffs_imag has {} entries, coeffs_real has {len}",
                self.coeffs_imag.len()
            )));
        }
        let flat = (0..len)
            .map(|i| Complex64::new(self.coeffs_real[i], self.coeffs_imag.get(i).copied().unwrap_or(0.0)))
            .collect();
        TrigPoly::from_flat(self.dim, self.degree, flat)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads a polynomial; files tagged as Toeplitz generators are accepted too.
pub fn read_poly(path: &Path) -> Result<TrigPoly> {
    read_json::<PolyFile>(path)?.to_poly()
}

pub fn write_poly(path: &Path, p: &TrigPoly) -> Result<()> {
    write_json(path, &PolyFile::from_poly(p))
}

/// Reads a generator file; `kind`, when present, must be `"toeplitz"`.
pub fn read_toeplitz(path: &Path) -> Result<ToeplitzSpec> {
    let file: PolyFile = read_json(path)?;
    match file.kind.as_deref() {
        None | Some(TOEPLITZ_KIND) => Ok(ToeplitzSpec::from(file.to_poly()?)),
        Some(other) => Err(argument(format!("expected kind \"toeplitz\", found \"{other}\""))),
    }
}

pub fn write_toeplitz(path: &Path, spec: &ToeplitzSpec) -> Result<()> {
    let mut file = PolyFile::from_poly(spec.symbol());
    file.kind = Some(TOEPLITZ_KIND.to_string());
    write_json(path, &file)
}

/// Header `# dim=d N=N`, then one `re,im` line per sample in row-major order.
pub fn write_grid_csv<W: Write>(grid: &SampleGrid, mut out: W) -> Result<()> {
    writeln!(out, "# dim={} N={}", grid.dim(), grid.grid_size())?;
    for v in grid.values().iter() {
        writeln!(out, "{},{}", v.re, v.im)?;
    }
    Ok(())
}

pub fn read_grid_csv<R: BufRead>(input: R) -> Result<SampleGrid> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))??;
    let field = |key: &str| -> Result<usize> {
        header
            .trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
            .ok_or_else(|| Error::Parse(format!("grid header lacks {key}=: {header:?}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad {key} in grid header: {e}")))
    };
    let (dim, n) = (field("dim")?, field("N")?);
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |s: Option<&str>| -> Result<f64> {
            s.map(str::trim)
                .ok_or_else(|| Error::Parse(format!("line {}: expected re,im", lineno + 2)))?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
        };
        let mut parts = line.split(',');
        values.push(Complex64::new(parse(parts.next())?, parse(parts.next())?));
    }
    let shape = vec![n; dim];
    let values = ArrayD::from_shape_vec(IxDyn(&shape), values)
        .map_err(|_| Error::Parse(format!("grid file does not hold N^d = {n}^{dim} samples")))?;
    SampleGrid::from_values(values)
}

pub fn read_grid_file(path: &Path) -> Result<SampleGrid> {
    read_grid_csv(std::io::BufReader::new(fs::File::open(path)?))
}

fn nested(a: &Array3<f64>) -> Vec<Vec<Vec<f64>>> {
    a.outer_iter()
        .map(|m| m.outer_iter().map(|row| row.to_vec()).collect())
        .collect()
}

fn from_nested(v: &[Vec<Vec<f64>>], shape: (usize, usize, usize), what: &str) -> Result<Array3<f64>> {
    let flat: Vec<f64> = v.iter().flatten().flatten().copied().collect();
    let ok = v.len() == shape.0 && v.iter().all(|m| m.len() == shape.1 && m.iter().all(|r| r.len() == shape.2));
    if !ok {
        return Err(argument(format!("{what} filters must have shape {shape:?}")));
    }
    Ok(Array3::from_shape_vec(shape, flat).expect("length checked"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisFile {
    pub size: usize,
    pub origin: usize,
    pub filters: Vec<Vec<Vec<f64>>>,
}

/// Analysis filters as `channels x size x size` nested arrays, optionally
/// with synthesis filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankFile {
    pub channels: usize,
    pub size: usize,
    pub s: usize,
    pub filters: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisFile>,
}

impl BankFile {
    pub fn new(analysis: &FilterBank, synthesis: Option<&SynthesisBank>) -> Self {
        Self {
            channels: analysis.channels(),
            size: analysis.size(),
            s: analysis.s(),
            filters: nested(analysis.filters()),
            synthesis: synthesis.map(|g| SynthesisFile {
                size: g.size(),
                origin: g.origin(),
                filters: nested(g.filters()),
            }),
        }
    }

    pub fn analysis(&self) -> Result<FilterBank> {
        let h = from_nested(&self.filters, (self.channels, self.size, self.size), "analysis")?;
        FilterBank::new(self.s, h)
    }

    pub fn synthesis(&self) -> Result<Option<SynthesisBank>> {
        let Some(g) = &self.synthesis else {
            return Ok(None);
        };
        let taps = from_nested(&g.filters, (self.channels, g.size, g.size), "synthesis")?;
        SynthesisBank::new(self.s, g.origin, taps).map(Some)
    }
}

pub fn read_bank(path: &Path) -> Result<BankFile> {
    read_json(path)
}

pub fn write_bank(path: &Path, bank: &BankFile) -> Result<()> {
    write_json(path, bank)
}

/// Where desired responses come from: a named tiling, or one grid CSV per
/// channel with `null` for channels without a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesiredSource {
    Tiling(String),
    Csv(Vec<Option<PathBuf>>),
}

fn default_alpha() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    10.0
}
fn default_iters() -> usize {
    5000
}
fn default_lr() -> f64 {
    1e-2
}

/// Design configuration file. `channels` may be omitted for tilings; CSV
/// paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default)]
    pub channels: Option<usize>,
    /// Analysis filter side length.
    pub size: usize,
    pub s: usize,
    #[serde(rename = "N")]
    pub grid_size: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_alpha")]
    pub gamma: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_lr", alias = "lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitStrategy,
    pub desired: DesiredSource,
    /// Per-channel scalar weight applied on the whole grid; defaults to 1
    /// for every channel with a target.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub penalty: PenaltySchedule,
}

impl DesignConfig {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Builds the design spec, loading CSV targets relative to `base`.
    pub fn to_spec(&self, base: &Path) -> Result<DesignSpec> {
        let n = self.grid_size;
        let mut spec = match &self.desired {
            DesiredSource::Tiling(name) => {
                let tiling = WedgeTiling::by_name(name)?;
                if self.channels.is_some_and(|c| c != tiling.channels()) {
                    return Err(argument(format!(
                        "tiling {name} has {} channels, config says {}",
                        tiling.channels(),
                        self.channels.unwrap_or(0)
                    )));
                }
                let mut spec = DesignSpec::new(tiling.channels(), self.size, self.s, n)?;
                spec.desired = desired_from_tiling(&tiling, n)?;
                spec.weights.fill(1.0);
                spec
            }
            DesiredSource::Csv(paths) => {
                let nc = self.channels.unwrap_or(paths.len());
                if nc != paths.len() {
                    return Err(argument(format!("{nc} channels but {} desired entries", paths.len())));
                }
                let mut spec = DesignSpec::new(nc, self.size, self.s, n)?;
                for (c, path) in paths.iter().enumerate() {
                    if let Some(path) = path {
                        spec.set_desired(c, &read_desired(&base.join(path), n)?)?;
                    }
                }
                spec
            }
        };
        if let Some(w) = &self.weights {
            if w.len() != spec.channels {
                return Err(argument(format!("{} weights for {} channels", w.len(), spec.channels)));
            }
            for (c, &wc) in w.iter().enumerate() {
                spec.weights.index_axis_mut(ndarray::Axis(0), c).mapv_inplace(|v| v * wc);
            }
        }
        spec.alpha = self.alpha;
        spec.beta = self.beta;
        spec.gamma = self.gamma;
        spec.iters = self.iters;
        spec.learning_rate = self.learning_rate;
        spec.seed = self.seed;
        spec.penalty = self.penalty;
        spec.validate()?;
        Ok(spec)
    }
}

/// A real `N x N` grid from a grid CSV.
fn read_desired(path: &Path, grid_size: usize) -> Result<Array2<f64>> {
    let grid = read_grid_file(path)?;
    if grid.dim() != 2 || grid.grid_size() != grid_size {
        return Err(argument(format!(
            "{}: expected a 2-D grid with N = {grid_size}",
            path.display()
        )));
    }
    Ok(grid
        .values()
        .view()
        .into_dimensionality::<ndarray::Ix2>()
        .expect("two axes")
        .mapv(|v| v.re))
}
