//! Exact Galerkin assembly for the fractional energy form on piecewise
//! linear functions.
//!
//! For compactly supported piecewise-linear u, v the form
//!
//!   F(u,v) = (C_s/2) iint (u(x)-u(y))(v(x)-v(y)) / |x-y|^{1+2s} dx dy
//!
//! reduces to a finite double sum over the slope breaks of u and v:
//! writing u'' = sum_p a_p delta_{x_p} (distributionally), one has
//!
//!   F(u,v) = sum_{p,q} a_p b_q g_s(x_p - x_q),
//!
//! where g_s is the kernel with Fourier symbol |xi|^{2s-4}. Both kink
//! expansions have two vanishing moments, so g_s may be shifted by any
//! cubic; subtracting z^2 from |z|^{3-2s} keeps the evaluation stable
//! through s = 1/2, where the kernel degenerates to z^2 ln|z| / (2 pi).
//!
//! On a uniform grid the hat-hat entries depend only on the index offset,
//! which makes the stiffness matrix Toeplitz and the assembly O(n).

use nalgebra::DMatrix;
use statrs::function::gamma::gamma;

use super::{FracOrder, Grid};
use crate::error::{Error, Result};

/// cos(pi s) evaluated as sin(pi (1/2 - s)) to stay accurate near s = 1/2.
#[inline]
pub(crate) fn cos_pi_s(s: f64) -> f64 {
    (std::f64::consts::PI * (0.5 - s)).sin()
}

/// Kernel with Fourier symbol |xi|^{2s-4}, shifted by a multiple of z^2.
///
/// Only meaningful when paired against expansions with two vanishing
/// moments, which is what [`KinkExpansion`] guarantees.
pub fn kink_kernel(z: f64, s: FracOrder) -> f64 {
    let s = s.value();
    if z == 0.0 {
        return 0.0;
    }
    let az = z.abs();
    if s == 0.5 {
        return z * z * az.ln() / (2.0 * std::f64::consts::PI);
    }
    // |z|^{3-2s} - z^2 = z^2 expm1((1-2s) ln|z|)
    let num = z * z * ((1.0 - 2.0 * s) * az.ln()).exp_m1();
    num / (2.0 * gamma(4.0 - 2.0 * s) * cos_pi_s(s))
}

/// Distributional second derivative of a compactly supported piecewise
/// linear function: weighted Dirac masses at the slope breaks.
#[derive(Debug, Clone)]
pub struct KinkExpansion {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KinkExpansion {
    /// Expansion of the piecewise-linear interpolant of `values` on
    /// `nodes`, extended by zero outside. The end values must vanish,
    /// otherwise the extension has a jump and the energy form is infinite.
    pub fn from_samples(nodes: &[f64], values: &[f64]) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::Mismatch(format!(
                "kink expansion needs matching nodes/values, got {}/{}",
                nodes.len(),
                values.len()
            )));
        }
        let m = nodes.len() - 1;
        if values[0] != 0.0 || values[m] != 0.0 {
            return Err(Error::Mismatch(
                "zero-extended function must vanish at the ends of its sample grid".into(),
            ));
        }
        let mut points = Vec::with_capacity(nodes.len());
        let mut weights = Vec::with_capacity(nodes.len());
        for i in 0..=m {
            let slope_left = if i == 0 {
                0.0
            } else {
                (values[i] - values[i - 1]) / (nodes[i] - nodes[i - 1])
            };
            let slope_right = if i == m {
                0.0
            } else {
                (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i])
            };
            let w = slope_right - slope_left;
            if w != 0.0 {
                points.push(nodes[i]);
                weights.push(w);
            }
        }
        Ok(KinkExpansion { points, weights })
    }

    /// Expansion of the interior hat centered at node `i` of `grid`.
    pub fn hat(grid: &Grid, i: usize) -> Self {
        let nodes = grid.nodes();
        let hl = nodes[i] - nodes[i - 1];
        let hr = nodes[i + 1] - nodes[i];
        KinkExpansion {
            points: vec![nodes[i - 1], nodes[i], nodes[i + 1]],
            weights: vec![1.0 / hl, -1.0 / hl - 1.0 / hr, 1.0 / hr],
        }
    }
}

/// Energy form F(u, v) of two zero-extended piecewise-linear functions.
pub fn bilinear_form(u: &KinkExpansion, v: &KinkExpansion, s: FracOrder) -> f64 {
    let mut acc = 0.0;
    for (&xp, &ap) in u.points.iter().zip(&u.weights) {
        let mut row = 0.0;
        for (&yq, &bq) in v.points.iter().zip(&v.weights) {
            row += bq * kink_kernel(xp - yq, s);
        }
        acc += ap * row;
    }
    acc
}

/// Stiffness matrix of the energy form over the interior hat functions.
///
/// Exact up to rounding: uniform grids go through the Toeplitz fast path
/// (series evaluation of the fourth difference of the kernel for well
/// separated indices), general grids through the pairwise kink sum.
pub fn assemble_stiffness(grid: &Grid, s: FracOrder) -> Result<DMatrix<f64>> {
    let n = grid.n_interior();
    if n == 0 {
        return Err(Error::InvalidGrid("no interior nodes".into()));
    }
    if grid.is_uniform() {
        let h = 2.0 / grid.n_cells() as f64;
        let t = toeplitz_entries(n, h, s);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = t[i.abs_diff(j)];
            }
        }
        Ok(a)
    } else {
        let nodes = grid.nodes();
        let m = nodes.len();
        // Kernel values at all pairwise node differences.
        let mut k = DMatrix::zeros(m, m);
        for p in 0..m {
            for q in 0..=p {
                let v = kink_kernel(nodes[p] - nodes[q], s);
                k[(p, q)] = v;
                k[(q, p)] = v;
            }
        }
        let hats: Vec<[f64; 3]> = (1..=n)
            .map(|i| {
                let hl = nodes[i] - nodes[i - 1];
                let hr = nodes[i + 1] - nodes[i];
                [1.0 / hl, -1.0 / hl - 1.0 / hr, 1.0 / hr]
            })
            .collect();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let wi = &hats[i];
                let wj = &hats[j];
                let mut acc = 0.0;
                for (p, &wip) in wi.iter().enumerate() {
                    for (q, &wjq) in wj.iter().enumerate() {
                        acc += wip * wjq * k[(i + p, j + q)];
                    }
                }
                a[(i, j)] = acc;
                a[(j, i)] = acc;
            }
        }
        Ok(a)
    }
}

/// Toeplitz entries t_d = F(hat_0, hat_d), d = 0..n-1, for uniform spacing h.
fn toeplitz_entries(n: usize, h: f64, s: FracOrder) -> Vec<f64> {
    let sv = s.value();
    let mut t = Vec::with_capacity(n);
    for d in 0..n {
        let v = if d < 8 {
            // Direct fourth difference; cancellation is at most ~d^4 eps here.
            let mut acc = 0.0;
            for (m, w) in [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
                let z = (d as i64 + m) as f64 * h;
                acc += w * kink_kernel(z, s);
            }
            acc / (h * h)
        } else if sv == 0.5 {
            psi_log_series(d as f64) / (2.0 * std::f64::consts::PI)
        } else {
            let alpha = 3.0 - 2.0 * sv;
            h.powf(1.0 - 2.0 * sv) * psi_power_series(d as f64, alpha)
                / (2.0 * gamma(4.0 - 2.0 * sv) * cos_pi_s(sv))
        };
        t.push(v);
    }
    t
}

/// Fourth central difference sum_m w_m (d+m)^alpha via the binomial series,
/// accurate for d >= 8 where direct evaluation cancels catastrophically.
fn psi_power_series(d: f64, alpha: f64) -> f64 {
    // sum_{j>=4 even} binom(alpha, j) (2^{j+1} - 8) d^{alpha - j}
    let mut acc = 0.0;
    // binom(alpha, 4)
    let mut binom = alpha * (alpha - 1.0) * (alpha - 2.0) * (alpha - 3.0) / 24.0;
    let mut pow2 = 32.0; // 2^{j+1} at j = 4
    let mut dpow = d.powf(alpha - 4.0);
    let inv_d2 = 1.0 / (d * d);
    let mut j = 4.0;
    for _ in 0..40 {
        let term = binom * (pow2 - 8.0) * dpow;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
        binom *= (alpha - j) * (alpha - j - 1.0) / ((j + 1.0) * (j + 2.0));
        pow2 *= 4.0;
        dpow *= inv_d2;
        j += 2.0;
    }
    acc
}

/// Fourth central difference of z^2 ln z at integer offset d, by series.
fn psi_log_series(d: f64) -> f64 {
    // sum_{k>=4 even} a_k (2^{k+1} - 8) d^{2-k},
    // a_k = (-1)^{k+1} (1/k - 2/(k-1) + 1/(k-2))
    let mut acc = 0.0;
    let mut k = 4.0;
    let mut pow2 = 32.0;
    let mut dpow = d.powi(-2);
    let inv_d2 = 1.0 / (d * d);
    for _ in 0..40 {
        let a = -(1.0 / k - 2.0 / (k - 1.0) + 1.0 / (k - 2.0));
        let term = a * (pow2 - 8.0) * dpow;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
        pow2 *= 4.0;
        dpow *= inv_d2;
        k += 2.0;
    }
    acc
}

/// Symmetric tridiagonal P1 mass matrix over interior nodes.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
}

pub fn assemble_mass(grid: &Grid) -> MassMatrix {
    let nodes = grid.nodes();
    let n = grid.n_interior();
    let mut diag = vec![0.0; n];
    let mut sub = vec![0.0; n.saturating_sub(1)];
    for i in 1..=n {
        let hl = nodes[i] - nodes[i - 1];
        let hr = nodes[i + 1] - nodes[i];
        diag[i - 1] = (hl + hr) / 3.0;
        if i < n {
            sub[i - 1] = hr / 6.0;
        }
    }
    MassMatrix { diag, sub }
}

impl MassMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sub[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// L2(-1,1) inner product of two piecewise-linear interior samples.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mv = self.mul_vec(v);
        u.iter().zip(&mv).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Cholesky factor M = L L^T with L lower bidiagonal: (diag d, subdiag e).
    pub fn cholesky(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n.saturating_sub(1)];
        let mut prev_e = 0.0;
        for i in 0..n {
            let v = self.diag[i] - prev_e * prev_e;
            if v <= 0.0 {
                return Err(Error::SingularSystem(format!(
                    "mass matrix not positive definite at row {i}"
                )));
            }
            d[i] = v.sqrt();
            if i + 1 < n {
                e[i] = self.sub[i] / d[i];
                prev_e = e[i];
            }
        }
        Ok((d, e))
    }
}

/// Exact L2(-1,1) inner product of two piecewise-linear functions given by
/// interior samples on the same grid.
pub fn mass_inner(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    assemble_mass(grid).inner(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlocal::exterior_kernel_weight;
    use crate::quad::{adaptive_gk, integrate_panels, power_edges};
    use crate::spectral::normalization_constant;

    fn hat_fn(grid: &Grid, i: usize) -> impl Fn(f64) -> f64 + '_ {
        move |x: f64| {
            let nodes = grid.nodes();
            if x <= nodes[i - 1] || x >= nodes[i + 1] {
                0.0
            } else if x <= nodes[i] {
                (x - nodes[i - 1]) / (nodes[i] - nodes[i - 1])
            } else {
                (nodes[i + 1] - x) / (nodes[i + 1] - nodes[i])
            }
        }
    }

    /// Brute-force energy form by iterated singular quadrature:
    /// (C_s/2) iint_{O x O} + C_s int_O u v w_ext with the analytic
    /// complement weight w_ext. Slow; used only on coarse grids.
    fn brute_force_form(grid: &Grid, i: usize, j: usize, s: FracOrder) -> f64 {
        let cs = normalization_constant(s);
        let u = hat_fn(grid, i);
        let v = hat_fn(grid, j);
        let two_s = 2.0 * s.value();
        let inner = |x: f64| {
            let ux = u(x);
            let vx = v(x);
            let f = |y: f64| {
                if (x - y).abs() < 1e-300 {
                    return 0.0;
                }
                (ux - u(y)) * (vx - v(y)) / (x - y).abs().powf(1.0 + two_s)
            };
            let (a, _) = adaptive_gk(-1.0, x, 1e-8, 2e-9, 20000, "bf-inner-left", f).unwrap();
            let (b, _) = adaptive_gk(x, 1.0, 1e-8, 2e-9, 20000, "bf-inner-right", f).unwrap();
            a + b
        };
        // Outer integral: per-cell panels graded toward the cell ends where
        // the inner integral loses smoothness.
        let mut onon = 0.0;
        for c in grid.nodes().windows(2) {
            let mid = 0.5 * (c[0] + c[1]);
            let left = power_edges(c[0], mid, 6, 2.5);
            onon += integrate_panels(&left, 10, inner);
            let mut right = power_edges(c[1], mid, 6, 2.5);
            right.reverse();
            onon += integrate_panels(&right, 10, inner);
        }
        // Complement term: 2 * int u v w_ext with w_ext(x) = int_{|y|>1} K.
        let wext = |x: f64| u(x) * v(x) * exterior_kernel_weight(x, s);
        let mut compl = 0.0;
        for c in grid.nodes().windows(2) {
            let edges = power_edges(c[0], c[1], 4, 1.0);
            compl += integrate_panels(&edges, 12, wext);
        }
        cs / 2.0 * onon + cs * compl
    }

    #[test]
    fn stiffness_matches_brute_force_quadrature() {
        for s in [0.3, 0.5, 0.75] {
            let s = FracOrder::new(s).unwrap();
            let grid = Grid::uniform(4).unwrap();
            let a = assemble_stiffness(&grid, s).unwrap();
            for i in 1..=3usize {
                for j in i..=3usize {
                    let bf = brute_force_form(&grid, i, j, s);
                    let rel = (a[(i - 1, j - 1)] - bf).abs() / bf.abs().max(1e-12);
                    assert!(
                        rel < 2e-6,
                        "s={} entry ({i},{j}): assembled {} vs quadrature {} (rel {rel:.2e})",
                        s.value(),
                        a[(i - 1, j - 1)],
                        bf
                    );
                }
            }
        }
    }

    #[test]
    fn stiffness_nonuniform_matches_uniform_on_same_nodes() {
        // A uniform grid passed through the generic pairwise path must give
        // the same matrix as the Toeplitz path.
        let s = FracOrder::new(0.7).unwrap();
        let grid = Grid::uniform(16).unwrap();
        let a = assemble_stiffness(&grid, s).unwrap();
        let mut nodes = grid.nodes().to_vec();
        // Nudge one node to force the generic path, then restore: instead,
        // build a grid with the same nodes through from_nodes and mark it
        // non-uniform by perturbing far below the detection threshold is not
        // possible; so compare hat-by-hat with the generic bilinear form.
        nodes[0] = -1.0;
        for i in 1..=grid.n_interior() {
            for j in 1..=grid.n_interior() {
                let hi = KinkExpansion::hat(&grid, i);
                let hj = KinkExpansion::hat(&grid, j);
                let v = bilinear_form(&hi, &hj, s);
                let rel = (a[(i - 1, j - 1)] - v).abs() / v.abs().max(1e-14);
                assert!(rel < 1e-9, "entry ({i},{j}) rel {rel:.2e}");
            }
        }
    }

    #[test]
    fn toeplitz_series_consistent_with_direct_difference() {
        // The series path takes over at d = 8; check it against the direct
        // fourth difference where both are still accurate.
        for s in [0.25, 0.5, 0.85] {
            let s = FracOrder::new(s).unwrap();
            let h = 1.0 / 64.0;
            let t = toeplitz_entries(32, h, s);
            for d in 8..14usize {
                let mut acc = 0.0;
                for (m, w) in [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
                    acc += w * kink_kernel((d as i64 + m) as f64 * h, s);
                }
                acc /= h * h;
                let rel = (t[d] - acc).abs() / acc.abs();
                assert!(rel < 1e-8, "s={} d={d}: {} vs {}", s.value(), t[d], acc);
            }
        }
    }

    #[test]
    fn stiffness_symmetric_and_positive_definite() {
        let s = FracOrder::new(0.6).unwrap();
        let grid = Grid::uniform(24).unwrap();
        let a = assemble_stiffness(&grid, s).unwrap();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                assert_eq!(a[(i, j)], a[(j, i)], "exact symmetry");
            }
        }
        // Positive definiteness via Cholesky.
        assert!(
            nalgebra::Cholesky::new(a.clone()).is_some(),
            "stiffness must be positive definite"
        );
        // x^T A x > 0 for a few fixed nonzero vectors.
        for seed in 1..5u64 {
            let x: Vec<f64> = (0..a.nrows())
                .map(|i| ((seed as f64 + 1.3) * (i as f64 + 0.7)).sin())
                .collect();
            let xv = nalgebra::DVector::from_vec(x);
            let q = (xv.transpose() * &a * &xv)[(0, 0)];
            assert!(q > 0.0);
        }
    }

    #[test]
    fn flat_top_profile_matches_dyda_identity() {
        // (-d^2/dx^2)^s (1-x^2)_+^s = 4^s Gamma(1+s) Gamma(1/2+s) / Gamma(1/2)
        // on (-1,1) (Dyda 2012), so pairing against a hat integrates the
        // constant: F(u_s, hat_i) = Lambda * h. Sampling error of the cusp at
        // the boundary limits the accuracy, hence the loose tolerance.
        for s in [0.35, 0.5, 0.75] {
            let so = FracOrder::new(s).unwrap();
            let n = 2048usize;
            let grid = Grid::uniform(n).unwrap();
            let vals: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&x| (1.0 - x * x).max(0.0).powf(s))
                .collect();
            let u = KinkExpansion::from_samples(grid.nodes(), &vals).unwrap();
            let lambda = 4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 + s)
                / std::f64::consts::PI.sqrt();
            let h = grid.h();
            for i in [n / 2, n / 3] {
                let hat = KinkExpansion::hat(&grid, i);
                let f = bilinear_form(&u, &hat, so);
                let rel = (f - lambda * h).abs() / (lambda * h);
                assert!(
                    rel < 2e-3,
                    "s={s} hat {i}: form {} vs {} (rel {rel:.2e})",
                    f,
                    lambda * h
                );
            }
        }
    }

    #[test]
    fn mass_matrix_inner_products() {
        let grid = Grid::uniform(8).unwrap();
        let m = assemble_mass(&grid);
        // ||hat||^2 = 2h/3 for the uniform interior hat.
        assert!((m.diag[3] - 2.0 * grid.h() / 3.0).abs() < 1e-15);
        // Inner product against the PL interpolant of x+1 equals the exact
        // integral of hat * (x+1): h * (x_i + 1).
        let vals: Vec<f64> = grid.interior_nodes().iter().map(|&x| x + 1.0).collect();
        let mut hat3 = vec![0.0; grid.n_interior()];
        hat3[3] = 1.0;
        let ip = m.inner(&hat3, &vals);
        let expect = grid.h() * (grid.interior_nodes()[3] + 1.0);
        assert!((ip - expect).abs() < 1e-14);
    }

    #[test]
    fn kink_expansion_rejects_jump_extension() {
        let r = KinkExpansion::from_samples(&[-1.0, 0.0, 1.0], &[0.0, 1.0, 0.5]);
        assert!(r.is_err());
    }

    #[test]
    fn kernel_continuous_across_half() {
        let below = FracOrder::new(0.5 - 1e-9).unwrap();
        let at = FracOrder::new(0.5).unwrap();
        let above = FracOrder::new(0.5 + 1e-9).unwrap();
        for z in [0.013, 0.4, 1.7, 25.0] {
            let a = kink_kernel(z, below);
            let b = kink_kernel(z, at);
            let c = kink_kernel(z, above);
            assert!((a - b).abs() < 1e-7 * b.abs().max(1e-3), "z={z}: {a} vs {b}");
            assert!((c - b).abs() < 1e-7 * b.abs().max(1e-3), "z={z}: {c} vs {b}");
        }
    }
}
