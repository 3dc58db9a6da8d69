//! Versioned plain-text cache for eigenpairs.
//!
//! Layout: a key header (format version, order, grid, mode count,
//! tolerance) followed by eigenvalues and node samples, every number
//! printed with 17 significant digits so rewrites are byte-identical and
//! reads round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{FracOrder, Grid, SpectralBasis};
use crate::error::{Error, Result};

pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Identity of a cached eigensolve; any mismatch forces recomputation.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheKey {
    pub s: f64,
    pub n_cells: usize,
    pub n_modes: usize,
    pub residual_tol: f64,
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a basis (uniform grids only) to the cache text format.
pub fn render_cache(basis: &SpectralBasis, residual_tol: f64) -> Result<String> {
    if !basis.grid().is_uniform() {
        return Err(Error::CacheFormat(
            "only uniform grids are cached".into(),
        ));
    }
    let mut out = String::new();
    let _ = writeln!(out, "fracheat-eigen-cache {CACHE_FORMAT_VERSION}");
    let _ = writeln!(out, "s = {}", fmt17(basis.s().value()));
    let _ = writeln!(out, "grid = uniform {}", basis.grid().n_cells());
    let _ = writeln!(out, "modes = {}", basis.len());
    let _ = writeln!(out, "residual_tol = {}", fmt17(residual_tol));
    let _ = writeln!(out, "eigenvalues");
    for (i, l) in basis.eigenvalues().iter().enumerate() {
        let _ = writeln!(out, "{} {}", i + 1, fmt17(*l));
    }
    for k in 1..=basis.len() {
        let _ = writeln!(out, "mode {k}");
        for v in basis.mode(k) {
            let _ = writeln!(out, "{}", fmt17(*v));
        }
    }
    let _ = writeln!(out, "end");
    Ok(out)
}

pub fn write_cache(path: &Path, basis: &SpectralBasis, residual_tol: f64) -> Result<()> {
    let text = render_cache(basis, residual_tol)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a cache file; `Ok(None)` when the key does not match (stale or
/// foreign cache), `Err` when the file is malformed.
pub fn read_cache(path: &Path, key: &CacheKey) -> Result<Option<SpectralBasis>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = text.lines();
    let bad = |msg: &str| Error::CacheFormat(msg.to_string());

    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let version: u32 = header
        .strip_prefix("fracheat-eigen-cache ")
        .ok_or_else(|| bad("missing magic"))?
        .parse()
        .map_err(|_| bad("bad version"))?;
    if version != CACHE_FORMAT_VERSION {
        return Ok(None);
    }

    let parse_kv = |line: Option<&str>, key: &str| -> Result<String> {
        let line = line.ok_or_else(|| bad("truncated header"))?;
        line.strip_prefix(&format!("{key} = "))
            .map(|v| v.to_string())
            .ok_or_else(|| bad(&format!("expected `{key} = ...`, got `{line}`")))
    };

    let s: f64 = parse_kv(lines.next(), "s")?
        .parse()
        .map_err(|_| bad("bad s"))?;
    let grid_line = lines.next().ok_or_else(|| bad("truncated header"))?;
    let n_cells: usize = grid_line
        .strip_prefix("grid = uniform ")
        .ok_or_else(|| bad("bad grid line"))?
        .parse()
        .map_err(|_| bad("bad grid size"))?;
    let n_modes: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("modes = "))
        .ok_or_else(|| bad("bad modes line"))?
        .parse()
        .map_err(|_| bad("bad mode count"))?;
    let residual_tol: f64 = parse_kv(lines.next(), "residual_tol")?
        .parse()
        .map_err(|_| bad("bad tolerance"))?;

    if s != key.s
        || n_cells != key.n_cells
        || n_modes != key.n_modes
        || residual_tol != key.residual_tol
    {
        return Ok(None);
    }

    if lines.next() != Some("eigenvalues") {
        return Err(bad("missing eigenvalues section"));
    }
    let mut eigenvalues = Vec::with_capacity(n_modes);
    for i in 1..=n_modes {
        let line = lines.next().ok_or_else(|| bad("truncated eigenvalues"))?;
        let mut parts = line.split_whitespace();
        let idx: usize = parts
            .next()
            .ok_or_else(|| bad("bad eigenvalue row"))?
            .parse()
            .map_err(|_| bad("bad eigenvalue index"))?;
        if idx != i {
            return Err(bad("eigenvalue rows out of order"));
        }
        let v: f64 = parts
            .next()
            .ok_or_else(|| bad("bad eigenvalue row"))?
            .parse()
            .map_err(|_| bad("bad eigenvalue"))?;
        eigenvalues.push(v);
    }
    let n_interior = n_cells - 1;
    let mut modes = Vec::with_capacity(n_modes);
    for k in 1..=n_modes {
        if lines.next() != Some(format!("mode {k}").as_str()) {
            return Err(bad("missing mode section"));
        }
        let mut vals = Vec::with_capacity(n_interior);
        for _ in 0..n_interior {
            let v: f64 = lines
                .next()
                .ok_or_else(|| bad("truncated mode"))?
                .parse()
                .map_err(|_| bad("bad mode sample"))?;
            vals.push(v);
        }
        modes.push(vals);
    }
    if lines.next() != Some("end") {
        return Err(bad("missing end marker"));
    }

    let grid = Grid::uniform(n_cells)?;
    let s = FracOrder::new(s)?;
    // Recompute the defect instead of trusting the file.
    let mass = super::assembly::assemble_mass(&grid);
    let mut defect = 0.0f64;
    for i in 0..n_modes {
        for j in i..n_modes {
            let ip = mass.inner(&modes[i], &modes[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((ip - target).abs());
        }
    }
    Ok(Some(SpectralBasis::from_parts(
        s,
        grid,
        eigenvalues,
        modes,
        defect,
    )))
}
