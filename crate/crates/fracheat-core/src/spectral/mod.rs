//! Dirichlet spectral data of the fractional Laplacian on (-1, 1):
//! Galerkin eigenpairs, closed-form eigenvalue asymptotics, and the
//! half-line approximate eigenfunctions used for sign fixing and
//! validation.

mod approx;
mod assembly;
mod cache;
mod eigen;

pub use approx::{f_alpha, gamma_density, laplace_transform_g, q_profile, rho, HalfLineFamily};
pub use assembly::{
    assemble_mass, assemble_stiffness, bilinear_form, kink_kernel, mass_inner, KinkExpansion,
    MassMatrix,
};
pub use cache::{read_cache, render_cache, write_cache, CacheKey, CACHE_FORMAT_VERSION};
pub use eigen::{eigen_solve, smallest_eigenpair, EigenOptions, SignConvention};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Fractional order s of the operator, constrained to 0 < s < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.0 && s < 1.0 {
            Ok(FracOrder(s))
        } else {
            Err(Error::InvalidParameter {
                name: "s",
                value: s,
                constraint: "0 < s < 1",
            })
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Partition of [-1, 1] carrying the piecewise-linear trial space.
///
/// `h` is the maximum spacing between consecutive nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    h: f64,
    uniform: bool,
}

impl Grid {
    /// Uniform grid with `n` subintervals (n - 1 interior nodes).
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 subintervals, got {n}"
            )));
        }
        let h = 2.0 / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| -1.0 + i as f64 * h).collect();
        nodes[n] = 1.0;
        Ok(Grid {
            nodes,
            h,
            uniform: true,
        })
    }

    /// Uniform interior spacing with geometric refinement into both
    /// endpoints, down to a first cell of width about `delta_min`.
    ///
    /// Eigenfunctions behave like dist^s at ±1; resolving quantities that
    /// live close to the boundary (exterior traces on nearby regions)
    /// needs cells at the scale of that distance, which uniform grids
    /// cannot afford.
    pub fn boundary_refined(n_cells: usize, delta_min: f64, ratio: f64) -> Result<Self> {
        if !(delta_min > 0.0 && delta_min < 0.1 && ratio > 1.0) {
            return Err(Error::InvalidGrid(format!(
                "boundary refinement needs 0 < delta_min < 0.1 and ratio > 1, got {delta_min}, {ratio}"
            )));
        }
        let h = 2.0 / n_cells as f64;
        // Geometric distances from the boundary until the uniform scale.
        let mut offsets = vec![delta_min];
        while *offsets.last().unwrap() < h {
            let next = offsets.last().unwrap() * ratio;
            offsets.push(next);
        }
        let cutoff = *offsets.last().unwrap();
        let mut nodes = Vec::new();
        nodes.push(-1.0);
        for d in offsets.iter() {
            nodes.push(-1.0 + d);
        }
        // Uniform fill between the refined collars.
        let inner_lo = -1.0 + cutoff;
        let inner_hi = 1.0 - cutoff;
        let inner_cells = ((inner_hi - inner_lo) / h).round().max(1.0) as usize;
        for j in 1..inner_cells {
            nodes.push(inner_lo + (inner_hi - inner_lo) * j as f64 / inner_cells as f64);
        }
        for d in offsets.iter().rev() {
            nodes.push(1.0 - d);
        }
        nodes.push(1.0);
        Grid::from_nodes(nodes)
    }

    /// Grid from explicit nodes; must strictly increase from -1 to 1.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid("need at least 3 nodes".into()));
        }
        if nodes[0] != -1.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidGrid(
                "first node must be -1 and last node must be 1".into(),
            ));
        }
        let mut h: f64 = 0.0;
        let mut min_h = f64::INFINITY;
        for w in nodes.windows(2) {
            let d = w[1] - w[0];
            if d <= 0.0 {
                return Err(Error::InvalidGrid("nodes must strictly increase".into()));
            }
            h = h.max(d);
            min_h = min_h.min(d);
        }
        let uniform = (h - min_h) <= 1e-12 * h;
        Ok(Grid { nodes, h, uniform })
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Maximum spacing between consecutive nodes.
    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Number of subintervals.
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of interior nodes (dimension of the trial space).
    #[inline]
    pub fn n_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Interior nodes only.
    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }
}

/// Normalization constant of the fractional Laplacian,
/// C_s = s 4^s Gamma((2s+1)/2) / (sqrt(pi) Gamma(1-s)).
pub fn normalization_constant(s: FracOrder) -> f64 {
    let s = s.value();
    s * 2f64.powf(2.0 * s) * gamma(s + 0.5) / (std::f64::consts::PI.sqrt() * gamma(1.0 - s))
}

/// Shifted momenta mu_k = k pi/2 - (1-s) pi/4 of the half-line problem.
///
/// mu_k^{2s} is the leading eigenvalue asymptote; see [`eigenvalue_asymptotic`].
pub fn mu(k: usize, s: FracOrder) -> f64 {
    assert!(k >= 1, "mode index starts at 1");
    let pi = std::f64::consts::PI;
    k as f64 * pi / 2.0 - (1.0 - s.value()) * pi / 4.0
}

/// Leading-order eigenvalue asymptote (n pi/2 - (2-2s) pi/8)^{2s}.
///
/// The remainder is O(1/n) with an unquantified constant, so comparisons
/// against discrete eigenvalues must budget both that gap and the
/// discretization error.
pub fn eigenvalue_asymptotic(n: usize, s: FracOrder) -> f64 {
    assert!(n >= 1, "mode index starts at 1");
    mu(n, s).powf(2.0 * s.value())
}

/// Spectral data: the first N Dirichlet eigenpairs on a grid.
///
/// Eigenvalues are ascending; eigenvector node samples are L2-normalized
/// through the mass matrix and sign-fixed against the half-line
/// approximants (largest-magnitude sample positive as fallback).
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    s: FracOrder,
    grid: Grid,
    eigenvalues: Vec<f64>,
    /// Interior node samples, one column per mode.
    modes: Vec<Vec<f64>>,
    /// Largest orthonormality defect observed at build time.
    ortho_defect: f64,
}

impl SpectralBasis {
    pub(crate) fn from_parts(
        s: FracOrder,
        grid: Grid,
        eigenvalues: Vec<f64>,
        modes: Vec<Vec<f64>>,
        ortho_defect: f64,
    ) -> Self {
        SpectralBasis {
            s,
            grid,
            eigenvalues,
            modes,
            ortho_defect,
        }
    }

    /// Assembles the Galerkin system on `grid` and solves for the first
    /// `n_modes` eigenpairs.
    pub fn compute(grid: Grid, s: FracOrder, n_modes: usize) -> Result<Self> {
        Self::compute_with(grid, s, n_modes, &EigenOptions::default())
    }

    pub fn compute_with(
        grid: Grid,
        s: FracOrder,
        n_modes: usize,
        opts: &EigenOptions,
    ) -> Result<Self> {
        let stiffness = assemble_stiffness(&grid, s)?;
        let mass = assemble_mass(&grid);
        eigen_solve(&grid, s, &stiffness, &mass, n_modes, opts)
    }

    #[inline]
    pub fn s(&self) -> FracOrder {
        self.s
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    #[inline]
    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.eigenvalues[n - 1]
    }

    #[inline]
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Interior node samples of mode n (1-based).
    #[inline]
    pub fn mode(&self, n: usize) -> &[f64] {
        &self.modes[n - 1]
    }

    pub fn ortho_defect(&self) -> f64 {
        self.ortho_defect
    }

    /// Piecewise-linear evaluation of mode n at any x, zero outside (-1, 1).
    pub fn eval_mode(&self, n: usize, x: f64) -> f64 {
        eval_piecewise_linear(self.grid.nodes(), self.mode(n), x)
    }
}

/// Piecewise-linear interpolation of interior-node samples on `nodes`,
/// with the function pinned to zero at both ends and outside.
pub(crate) fn eval_piecewise_linear(nodes: &[f64], interior: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    debug_assert_eq!(interior.len(), n - 2);
    if x <= nodes[0] || x >= nodes[n - 1] {
        return 0.0;
    }
    // Index of the cell containing x.
    let j = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => {
            // Exactly at a node.
            return value_at_node(interior, n, i);
        }
        Err(i) => i - 1,
    };
    let left = value_at_node(interior, n, j);
    let right = value_at_node(interior, n, j + 1);
    let t = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
    left + t * (right - left)
}

#[inline]
fn value_at_node(interior: &[f64], n_nodes: usize, i: usize) -> f64 {
    if i == 0 || i == n_nodes - 1 {
        0.0
    } else {
        interior[i - 1]
    }
}

/// Piecewise-linear interpolation with values given at every node
/// (including the ends), zero outside the node window.
pub(crate) fn eval_piecewise_linear_open(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    debug_assert_eq!(values.len(), n);
    if x < nodes[0] || x > nodes[n - 1] {
        return 0.0;
    }
    match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => values[i],
        Err(i) => {
            let t = (x - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
            values[i - 1] + t * (values[i] - values[i - 1])
        }
    }
}
