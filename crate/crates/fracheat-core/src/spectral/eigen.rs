//! Generalized symmetric eigensolve for the Galerkin pair (A, M).

use nalgebra::{DMatrix, DVector};

use super::assembly::MassMatrix;
use super::{FracOrder, Grid, HalfLineFamily, SpectralBasis};
use crate::error::{Error, Result};

/// How eigenvector signs are pinned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// Positive correlation with the half-line approximant rho_n, falling
    /// back to the largest-sample rule when the correlation is negligible.
    Approximant,
    /// Largest-magnitude node sample positive.
    LargestSample,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Relative residual bound checked on every returned pair.
    pub residual_tol: f64,
    /// Eigenvalues closer than this relative gap are treated as a cluster.
    pub cluster_rel_gap: f64,
    /// Below this relative correlation the approximant cannot fix the sign.
    pub sign_correlation_floor: f64,
    pub sign_convention: SignConvention,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            residual_tol: 1e-8,
            cluster_rel_gap: 1e-8,
            sign_correlation_floor: 1e-3,
            sign_convention: SignConvention::Approximant,
        }
    }
}

/// Solves A x = lambda M x for the `count` smallest eigenpairs.
///
/// M is reduced by its bidiagonal Cholesky factor, the dense symmetric
/// problem is solved in full, and eigenvectors are mapped back and
/// M-normalized. Near-degenerate clusters are re-orthonormalized in the
/// M inner product and every member gets the sign convention applied.
pub fn eigen_solve(
    grid: &Grid,
    s: FracOrder,
    stiffness: &DMatrix<f64>,
    mass: &MassMatrix,
    count: usize,
    opts: &EigenOptions,
) -> Result<SpectralBasis> {
    let n = mass.dim();
    if stiffness.nrows() != n || stiffness.ncols() != n {
        return Err(Error::Mismatch(format!(
            "stiffness is {}x{}, mass dimension is {n}",
            stiffness.nrows(),
            stiffness.ncols()
        )));
    }
    if count == 0 || count > n {
        return Err(Error::InvalidParameter {
            name: "count",
            value: count as f64,
            constraint: "1 <= count <= interior dimension",
        });
    }
    let (d, e) = mass.cholesky()?;

    // C = L^{-1} A L^{-T}.
    let mut c = stiffness.clone();
    // Forward solve on each column: rows of L^{-1} A.
    for j in 0..n {
        c[(0, j)] /= d[0];
        for i in 1..n {
            c[(i, j)] = (c[(i, j)] - e[i - 1] * c[(i - 1, j)]) / d[i];
        }
    }
    // Right-multiply by L^{-T}: forward recurrence along each row.
    for i in 0..n {
        c[(i, 0)] /= d[0];
        for j in 1..n {
            c[(i, j)] = (c[(i, j)] - e[j - 1] * c[(i, j - 1)]) / d[j];
        }
    }
    // Kill rounding asymmetry before the symmetric solver.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }

    let eig = nalgebra::SymmetricEigen::new(c.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues must be finite")
    });

    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let mut eigenvalues = Vec::with_capacity(count);
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(count);
    for &k in order.iter().take(count) {
        let lambda = eig.eigenvalues[k];
        let y = eig.eigenvectors.column(k);
        // Residual in the reduced problem.
        let r = (&c * y - lambda * DVector::from_column_slice(y.as_slice())).norm();
        if r > opts.residual_tol * scale.max(1.0) {
            return Err(Error::EigenFailure {
                residual: r / scale.max(1.0),
                tolerance: opts.residual_tol,
            });
        }
        // x = L^{-T} y.
        let mut x = y.as_slice().to_vec();
        x[n - 1] /= d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - e[i] * x[i + 1]) / d[i];
        }
        let norm = mass.norm(&x);
        for v in &mut x {
            *v /= norm;
        }
        eigenvalues.push(lambda);
        modes.push(x);
    }

    // Cluster detection and in-cluster M-orthonormalization.
    let mut start = 0;
    while start < count {
        let mut end = start + 1;
        while end < count
            && eigenvalues[end] - eigenvalues[end - 1]
                <= opts.cluster_rel_gap * eigenvalues[end].abs()
        {
            end += 1;
        }
        if end - start > 1 {
            gram_schmidt_m(&mut modes[start..end], mass);
        }
        start = end;
    }

    apply_sign_convention(grid, s, &mut modes, opts)?;

    // Orthonormality defect over the returned block.
    let mut defect = 0.0f64;
    let m_modes: Vec<Vec<f64>> = modes.iter().map(|x| mass.mul_vec(x)).collect();
    for i in 0..count {
        for j in i..count {
            let ip: f64 = modes[i].iter().zip(&m_modes[j]).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((ip - target).abs());
        }
    }

    Ok(SpectralBasis::from_parts(
        s,
        grid.clone(),
        eigenvalues,
        modes,
        defect,
    ))
}

fn gram_schmidt_m(block: &mut [Vec<f64>], mass: &MassMatrix) {
    for i in 0..block.len() {
        for j in 0..i {
            let proj = mass.inner(&block[i], &block[j]);
            let (head, tail) = block.split_at_mut(i);
            for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                *a -= proj * b;
            }
        }
        let norm = mass.norm(&block[i]);
        for v in &mut block[i] {
            *v /= norm;
        }
    }
}

fn apply_sign_convention(
    grid: &Grid,
    s: FracOrder,
    modes: &mut [Vec<f64>],
    opts: &EigenOptions,
) -> Result<()> {
    let mass = super::assembly::assemble_mass(grid);
    let family = match opts.sign_convention {
        SignConvention::Approximant => Some(HalfLineFamily::shared(s)?),
        SignConvention::LargestSample => None,
    };
    for (idx, x) in modes.iter_mut().enumerate() {
        let k = idx + 1;
        let mut flip = None;
        if let Some(fam) = &family {
            let rho = fam.rho_samples(k, grid.interior_nodes())?;
            let rho_norm = mass.norm(&rho);
            if rho_norm > 0.0 {
                let corr = mass.inner(x, &rho) / rho_norm;
                if corr.abs() >= opts.sign_correlation_floor {
                    flip = Some(corr < 0.0);
                }
            }
        }
        let flip = flip.unwrap_or_else(|| {
            // Largest-magnitude sample positive; first occurrence wins.
            let mut best = 0.0f64;
            let mut sign_neg = false;
            for &v in x.iter() {
                if v.abs() > best {
                    best = v.abs();
                    sign_neg = v < 0.0;
                }
            }
            sign_neg
        });
        if flip {
            for v in x.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok(())
}

/// Smallest eigenpair by inverse iteration; cheap on fine grids where the
/// full dense solve is not worth it. Cross-checks the dense path.
pub fn smallest_eigenpair(
    grid: &Grid,
    s: FracOrder,
    stiffness: &DMatrix<f64>,
    mass: &MassMatrix,
) -> Result<(f64, Vec<f64>)> {
    let n = mass.dim();
    let chol = nalgebra::Cholesky::new(stiffness.clone())
        .ok_or_else(|| Error::SingularSystem("stiffness not positive definite".into()))?;
    // Start from the half-period cosine bump, already close to the ground
    // state for every s.
    let mut x: Vec<f64> = grid
        .interior_nodes()
        .iter()
        .map(|&t| (std::f64::consts::PI * t / 2.0).cos())
        .collect();
    let norm = mass.norm(&x);
    x.iter_mut().for_each(|v| *v /= norm);
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..500 {
        let b = DVector::from_vec(mass.mul_vec(&x));
        let z = chol.solve(&b);
        let mut z = z.as_slice().to_vec();
        let norm = mass.norm(&z);
        z.iter_mut().for_each(|v| *v /= norm);
        // Rayleigh quotient (M-normalized).
        let az = {
            let zv = DVector::from_column_slice(&z);
            let azv = stiffness * zv;
            azv.as_slice()
                .iter()
                .zip(&z)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        x = z;
        if (az - lambda_prev).abs() <= 1e-14 * az.abs() {
            lambda_prev = az;
            break;
        }
        lambda_prev = az;
        if n == 1 {
            break;
        }
    }
    let mut modes = vec![x];
    apply_sign_convention(grid, s, &mut modes, &EigenOptions::default())?;
    Ok((lambda_prev, modes.pop().unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{
        assemble_mass, assemble_stiffness, eigenvalue_asymptotic, SpectralBasis,
    };

    #[test]
    fn coarse_half_order_ground_state_near_asymptote() {
        // 9 interior nodes, s = 1/2: within 25% of 3 pi / 8.
        let s = FracOrder::new(0.5).unwrap();
        let grid = Grid::uniform(10).unwrap();
        let basis = SpectralBasis::compute(grid, s, 1).unwrap();
        let target = 3.0 * std::f64::consts::PI / 8.0;
        let rel = (basis.eigenvalue(1) - target).abs() / target;
        assert!(rel < 0.25, "lambda_1 = {}, rel gap {rel}", basis.eigenvalue(1));
    }

    #[test]
    fn eigenvalues_positive_ascending_orthonormal() {
        let s = FracOrder::new(0.75).unwrap();
        let grid = Grid::uniform(64).unwrap();
        let basis = SpectralBasis::compute(grid, s, 8).unwrap();
        assert!(basis.eigenvalue(1) > 0.0);
        for n in 1..8 {
            assert!(basis.eigenvalue(n) <= basis.eigenvalue(n + 1));
        }
        assert!(
            basis.ortho_defect() < 1e-10,
            "orthonormality defect {}",
            basis.ortho_defect()
        );
    }

    #[test]
    fn tenth_eigenvalue_tracks_asymptote() {
        let s = FracOrder::new(0.75).unwrap();
        let grid = Grid::uniform(256).unwrap();
        let basis = SpectralBasis::compute(grid.clone(), s, 10).unwrap();
        let asym = eigenvalue_asymptotic(10, s);
        let rel = (basis.eigenvalue(10) - asym).abs() / asym;
        // O(1/n) asymptote gap plus discretization; band set by refinement
        // experiments.
        assert!(rel < 0.02, "lambda_10 = {}, asym = {asym}, rel {rel}", basis.eigenvalue(10));
    }

    #[test]
    fn discrete_eigenvalues_decrease_under_refinement() {
        let s = FracOrder::new(0.6).unwrap();
        let mut prev = f64::INFINITY;
        for n in [32, 64, 128, 256] {
            let grid = Grid::uniform(n).unwrap();
            let basis = SpectralBasis::compute(grid, s, 1).unwrap();
            let l1 = basis.eigenvalue(1);
            assert!(
                l1 < prev,
                "lambda_1 must decrease monotonically: {l1} !< {prev} at n = {n}"
            );
            prev = l1;
        }
    }

    #[test]
    fn ground_state_sign_positive() {
        let s = FracOrder::new(0.5).unwrap();
        let grid = Grid::uniform(40).unwrap();
        let basis = SpectralBasis::compute(grid, s, 3).unwrap();
        // Mode 1 correlates positively with the positive approximant.
        let mid = basis.mode(1)[19];
        assert!(mid > 0.0, "ground state should be positive at the middle");
    }

    #[test]
    fn inverse_iteration_matches_dense_path() {
        let s = FracOrder::new(0.65).unwrap();
        let grid = Grid::uniform(96).unwrap();
        let a = assemble_stiffness(&grid, s).unwrap();
        let m = assemble_mass(&grid);
        let dense = SpectralBasis::compute(grid.clone(), s, 1).unwrap();
        let (l1, v1) = smallest_eigenpair(&grid, s, &a, &m).unwrap();
        assert!(
            (l1 - dense.eigenvalue(1)).abs() < 1e-10 * dense.eigenvalue(1),
            "inverse iteration {l1} vs dense {}",
            dense.eigenvalue(1)
        );
        let dot = m.inner(&v1, dense.mode(1));
        assert!((dot.abs() - 1.0).abs() < 1e-8);
        assert!(dot > 0.0, "sign conventions must agree");
    }

    #[test]
    fn count_validation() {
        let s = FracOrder::new(0.5).unwrap();
        let grid = Grid::uniform(8).unwrap();
        let a = assemble_stiffness(&grid, s).unwrap();
        let m = assemble_mass(&grid);
        assert!(eigen_solve(&grid, s, &a, &m, 8, &EigenOptions::default()).is_err());
        assert!(eigen_solve(&grid, s, &a, &m, 0, &EigenOptions::default()).is_err());
    }
}
