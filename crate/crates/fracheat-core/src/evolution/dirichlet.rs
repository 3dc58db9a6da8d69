//! Stationary exterior Dirichlet problem: harmonic extension of exterior
//! data through the Galerkin system.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::nonlocal::SampledFunction;
use crate::spectral::{assemble_stiffness, bilinear_form, FracOrder, Grid, KinkExpansion};

/// Solves
///
///   (-d^2/dx^2)^s v = 0 in (-1,1),   v = g in R \ (-1,1),
///
/// for piecewise-linear exterior data g (zero on [-1,1], compact support).
/// The data is lifted to a global piecewise-linear function that vanishes
/// at the interior nodes, the lifting energy moves to the right-hand
/// side, and the interior correction solves the stiffness system. The
/// returned function equals g outside [-1,1] exactly.
pub fn solve_dirichlet(
    g: &SampledFunction,
    grid: &Grid,
    s: FracOrder,
) -> Result<SampledFunction> {
    if g.offset() != 0.0 {
        return Err(Error::Mismatch(
            "exterior data must be compactly supported (zero offset)".into(),
        ));
    }
    // The data must vanish strictly inside (-1, 1); boundary values at ±1
    // are taken from the exterior side.
    for (&x, &v) in g.nodes().iter().zip(g.values()) {
        if x > -1.0 && x < 1.0 && v != 0.0 {
            return Err(Error::Mismatch(format!(
                "exterior data has a nonzero sample at x = {x} inside (-1,1)"
            )));
        }
    }

    // Merged node set: exterior data nodes plus the interior grid.
    let mut nodes: Vec<f64> = g
        .nodes()
        .iter()
        .copied()
        .filter(|&x| x <= -1.0 || x >= 1.0)
        .chain(grid.nodes().iter().copied())
        .collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup();

    // Lifting: g at exterior nodes and at ±1, zero at interior nodes.
    let lift_values: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            if x <= -1.0 || x >= 1.0 {
                g.eval(x)
            } else {
                0.0
            }
        })
        .collect();
    let lift = KinkExpansion::from_samples(&nodes, &lift_values)?;

    let stiffness = assemble_stiffness(grid, s)?;
    let n = grid.n_interior();
    let mut rhs = DVector::zeros(n);
    for (i, &_x) in grid.interior_nodes().iter().enumerate() {
        let hat = KinkExpansion::hat(grid, i + 1);
        rhs[i] = -bilinear_form(&lift, &hat, s);
    }
    let chol = nalgebra::Cholesky::new(stiffness).ok_or_else(|| {
        Error::SingularSystem("stiffness matrix lost positive definiteness".into())
    })?;
    let w = chol.solve(&rhs);

    // Final function: lifting plus interior correction on the merged grid.
    let interior_nodes = grid.interior_nodes();
    let values: Vec<f64> = nodes
        .iter()
        .zip(&lift_values)
        .map(|(&x, &lv)| {
            if x > -1.0 && x < 1.0 {
                match interior_nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                    Ok(i) => lv + w[i],
                    Err(_) => lv,
                }
            } else {
                lv
            }
        })
        .collect();
    SampledFunction::global(nodes, values)
}

/// Exterior Dirichlet data: samples of `f` on uniform sub-grids of
/// [lo, -1] and [1, hi], forced to zero at the outer ends. No node falls
/// strictly inside (-1, 1); the one-sided values at ±1 carry the trace
/// the harmonic extension attaches to.
pub fn exterior_data_from_fn(
    lo: f64,
    hi: f64,
    samples_per_side: usize,
    f: impl Fn(f64) -> f64,
) -> Result<SampledFunction> {
    if !(lo < -1.0 && hi > 1.0 && samples_per_side >= 2) {
        return Err(Error::InvalidParameter {
            name: "exterior window",
            value: lo,
            constraint: "lo < -1 < 1 < hi with at least 2 samples per side",
        });
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for j in 0..=samples_per_side {
        let x = lo + (-1.0 - lo) * j as f64 / samples_per_side as f64;
        nodes.push(if j == samples_per_side { -1.0 } else { x });
        values.push(if j == 0 { 0.0 } else { f(*nodes.last().unwrap()) });
    }
    for j in 0..=samples_per_side {
        let x = 1.0 + (hi - 1.0) * j as f64 / samples_per_side as f64;
        nodes.push(if j == 0 { 1.0 } else { x });
        values.push(if j == samples_per_side {
            0.0
        } else {
            f(*nodes.last().unwrap())
        });
    }
    SampledFunction::global(nodes, values)
}
