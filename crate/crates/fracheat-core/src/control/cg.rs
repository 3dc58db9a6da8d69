//! Jacobi-preconditioned conjugate gradient for the (shifted) Gramian.

use nalgebra::DMatrix;

/// Outcome of a CG solve; `x` is the best iterate seen (by residual).
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Solves (A + shift I) x = b from a zero start. The iteration count is
/// itself a conditioning diagnostic for these systems.
pub fn cg_solve(
    a: &DMatrix<f64>,
    shift: f64,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut acc = shift * v[i];
            for j in 0..n {
                acc += a[(i, j)] * v[j];
            }
            out[i] = acc;
        }
    };
    let precond: Vec<f64> = (0..n)
        .map(|i| {
            let d = a[(i, i)] + shift;
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();

    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(ri, pi)| ri * pi).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];

    let mut best_x = x.clone();
    let mut best_res = 1.0f64;
    let mut iterations = 0;
    for it in 1..=max_iter {
        apply(&p, &mut q);
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if pq <= 0.0 || !pq.is_finite() {
            // Curvature lost to rounding; the best iterate stands.
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations = it;
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        if res <= rel_tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        x: best_x,
        iterations,
        rel_residual: best_res,
        converged: best_res <= rel_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let n = 12;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = 1.0 / (1.0 + (i as f64 - j as f64).abs());
            }
            a[(i, i)] += 2.0;
        }
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)] * xs[j]).sum())
            .collect();
        let out = cg_solve(&a, 0.0, &b, 1e-13, 200);
        assert!(out.converged, "rel residual {}", out.rel_residual);
        for (got, want) in out.x.iter().zip(&xs) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_is_trivial() {
        let a = DMatrix::identity(4, 4);
        let out = cg_solve(&a, 0.0, &[0.0; 4], 1e-12, 10);
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shift_regularizes_singular_matrix() {
        // Rank-1 PSD matrix plus shift.
        let mut a = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = ((i + 1) * (j + 1)) as f64;
            }
        }
        let out = cg_solve(&a, 1e-6, &[1.0, 0.0, -1.0], 1e-12, 100);
        assert!(out.converged);
    }
}
