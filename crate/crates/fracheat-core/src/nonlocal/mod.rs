//! Pointwise nonlocal operators on sampled functions: the singular-integral
//! fractional Laplacian, the exterior normal derivative, energy seminorms,
//! and the exterior observation Gram data built from them.

mod forms;
mod gram;
mod pointwise;

pub use forms::{gagliardo_bilinear, gagliardo_seminorm, integration_by_parts_residual, Domain};
pub use gram::{exterior_gram, lower_bound_eta, TraceSet};
pub use pointwise::{frac_laplacian_pv, nonlocal_normal_derivative, trace_on_points};

use crate::error::{Error, Result};
use crate::spectral::{eval_piecewise_linear_open, FracOrder, Grid};

/// Piecewise-linear sampled function: an optional constant offset plus a
/// compactly supported piecewise-linear part that is zero-extended.
///
/// The zero extension is exact: with zero offset, evaluation outside the
/// sample window returns exactly 0.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    offset: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    /// Function supported in [-1, 1]: interior node samples on `grid`,
    /// pinned to zero at ±1 and outside.
    pub fn interior(grid: &Grid, interior_values: &[f64]) -> Result<Self> {
        if interior_values.len() != grid.n_interior() {
            return Err(Error::Mismatch(format!(
                "expected {} interior samples, got {}",
                grid.n_interior(),
                interior_values.len()
            )));
        }
        let mut values = Vec::with_capacity(grid.nodes().len());
        values.push(0.0);
        values.extend_from_slice(interior_values);
        values.push(0.0);
        Ok(SampledFunction {
            offset: 0.0,
            nodes: grid.nodes().to_vec(),
            values,
        })
    }

    /// Mode n of a spectral basis as a sampled function.
    pub fn from_mode(basis: &crate::spectral::SpectralBasis, n: usize) -> Self {
        SampledFunction::interior(basis.grid(), basis.mode(n))
            .expect("basis modes always match their grid")
    }

    /// Arbitrary compactly supported function; end samples must vanish.
    pub fn global(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::Mismatch(
                "global sample needs matching nodes/values, at least 2".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must strictly increase".into()));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 0.0 {
            return Err(Error::Mismatch(
                "zero-extended sample must vanish at its end nodes".into(),
            ));
        }
        Ok(SampledFunction {
            offset: 0.0,
            nodes,
            values,
        })
    }

    /// The constant function c on all of R.
    pub fn constant(c: f64) -> Self {
        SampledFunction {
            offset: c,
            nodes: vec![-1.0, 1.0],
            values: vec![0.0, 0.0],
        }
    }

    /// Piecewise-linear samples without the zero-end requirement. The
    /// implied extension jumps at the window ends, so such functions are
    /// only admissible where no operation looks across them (e.g. the
    /// region-internal Gagliardo integral); `kinks()` rejects them.
    pub fn open(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::Mismatch(
                "open sample needs matching nodes/values, at least 2".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must strictly increase".into()));
        }
        Ok(SampledFunction {
            offset: 0.0,
            nodes,
            values,
        })
    }

    #[inline]
    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Support of the piecewise-linear part.
    pub fn support(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.offset + eval_piecewise_linear_open(&self.nodes, &self.values, x)
    }

    /// Scales the function by c in place.
    pub fn scale(&mut self, c: f64) {
        self.offset *= c;
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub(crate) fn kinks(&self) -> Result<crate::spectral::KinkExpansion> {
        crate::spectral::KinkExpansion::from_samples(&self.nodes, &self.values)
    }

    /// Distance from x to the nearest slope break, and whether x is a node.
    pub(crate) fn nearest_kink(&self, x: f64) -> (f64, Option<usize>) {
        let idx = self
            .nodes
            .binary_search_by(|v| v.partial_cmp(&x).unwrap());
        match idx {
            Ok(i) => (0.0, Some(i)),
            Err(i) => {
                let mut d = f64::INFINITY;
                if i > 0 {
                    d = d.min(x - self.nodes[i - 1]);
                }
                if i < self.nodes.len() {
                    d = d.min(self.nodes[i] - x);
                }
                (d, None)
            }
        }
    }
}

/// Open control/observation set: a finite union of intervals in the
/// complement of (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorRegion {
    intervals: Vec<(f64, f64)>,
}

impl ExteriorRegion {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidRegion("region must be nonempty".into()));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidRegion(format!(
                    "interval ({a}, {b}) is empty or unbounded"
                )));
            }
            if !(b <= -1.0 || a >= 1.0) {
                return Err(Error::InvalidRegion(format!(
                    "interval ({a}, {b}) meets (-1, 1)"
                )));
            }
        }
        intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidRegion(format!(
                    "intervals ({}, {}) and ({}, {}) overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(ExteriorRegion { intervals })
    }

    /// Single interval (a, b).
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        ExteriorRegion::new(vec![(a, b)])
    }

    /// Parses "a:b[,c:d,...]".
    pub fn parse(text: &str) -> Result<Self> {
        let mut intervals = Vec::new();
        for part in text.split(',') {
            let (a, b) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidRegion(format!("expected a:b, got `{part}`")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::InvalidRegion(format!("bad number `{a}`")))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| Error::InvalidRegion(format!("bad number `{b}`")))?;
            intervals.push((a, b));
        }
        ExteriorRegion::new(intervals)
    }

    #[inline]
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| x > a && x < b)
    }

    /// True when every interval of `self` is contained in one of `other`.
    pub fn is_subset_of(&self, other: &ExteriorRegion) -> bool {
        self.intervals.iter().all(|&(a, b)| {
            other
                .intervals
                .iter()
                .any(|&(c, d)| c <= a && b <= d)
        })
    }

    /// Smallest distance from the region to the interval [-1, 1].
    pub fn distance_to_domain(&self) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| {
                if a >= 1.0 {
                    a - 1.0
                } else {
                    -1.0 - b
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Kernel mass of the complement of (-1,1) seen from x inside:
/// w(x) = int_{|y|>1} |x-y|^{-1-2s} dy = ((1-x)^{-2s} + (1+x)^{-2s}) / 2s.
pub fn exterior_kernel_weight(x: f64, s: FracOrder) -> f64 {
    let two_s = 2.0 * s.value();
    ((1.0 - x).powf(-two_s) + (1.0 + x).powf(-two_s)) / two_s
}
