//! Quadrature primitives: Gauss-Legendre rules, adaptive Gauss-Kronrod,
//! and graded panel meshes for endpoint singularities.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Computes the rule by Newton iteration on the Legendre polynomial.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1, "rule order must be at least 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_eval(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Integrates `f` over [a, b] with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + r * x);
        }
        acc * r
    }
}

/// Evaluates (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared cache of Gauss-Legendre rules by order.
pub fn gauss_rule(n: usize) -> &'static GaussRule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("gauss rule cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussRule::legendre(n))))
}

/// Integrates `f` over [a, b] with composite Gauss-Legendre panels.
pub fn composite_gauss<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
    mut f: F,
) -> f64 {
    let rule = gauss_rule(order);
    let mut acc = 0.0;
    let width = (b - a) / panels as f64;
    for j in 0..panels {
        let pa = a + j as f64 * width;
        let pb = if j + 1 == panels { b } else { pa + width };
        acc += rule.integrate(pa, pb, &mut f);
    }
    acc
}

/// Panel edges graded geometrically toward `a` starting from distance `d0`.
///
/// Produces edges a + d0, a + d0*ratio, ... capped at b, prepended with a.
/// Used for integrands with an algebraic singularity at (or just beyond) `a`.
pub fn geometric_edges(a: f64, b: f64, d0: f64, ratio: f64) -> Vec<f64> {
    debug_assert!(d0 > 0.0 && ratio > 1.0 && b > a);
    let mut edges = vec![a];
    let mut d = d0;
    while a + d < b {
        edges.push(a + d);
        d *= ratio;
        if edges.len() > 4000 {
            break;
        }
    }
    edges.push(b);
    edges
}

/// Panel edges with power-law grading toward `a`: a + (j/n)^p (b-a).
pub fn power_edges(a: f64, b: f64, n: usize, p: f64) -> Vec<f64> {
    let mut edges = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = (j as f64 / n as f64).powf(p);
        edges.push(a + t * (b - a));
    }
    edges[n] = b;
    edges
}

/// Integrates over a list of panel edges with a fixed-order rule.
pub fn integrate_panels<F: FnMut(f64) -> f64>(edges: &[f64], order: usize, mut f: F) -> f64 {
    let rule = gauss_rule(order);
    let mut acc = 0.0;
    for w in edges.windows(2) {
        acc += rule.integrate(w[0], w[1], &mut f);
    }
    acc
}

// 15-point Kronrod extension of the 7-point Gauss rule (positive abscissae).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// One Gauss-Kronrod 7/15 evaluation on [a, b]: (value, error estimate).
fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = WG[3] * fc;
    let mut res_k = WGK[7] * fc;
    let mut res_abs = WGK[7] * fc.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let x = r * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let value = res_k * r;
    let res_abs = res_abs * r.abs();
    let res_asc = res_asc * r.abs();
    let mut err = ((res_k - res_g) * r).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if floor > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (value, err)
}

/// Adaptive Gauss-Kronrod integration over [a, b].
///
/// Bisects the worst interval until the global error estimate satisfies
/// `|err| <= max(abs_tol, rel_tol * |value|)` or the subdivision budget is
/// exhausted, in which case an error carrying the achieved estimate is
/// returned. Deterministic for a given integrand.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
    context: &'static str,
    mut f: F,
) -> Result<(f64, f64)> {
    #[derive(Debug)]
    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (v0, e0) = gk15(a, b, &mut f);
    let mut segs = vec![Seg {
        a,
        b,
        value: v0,
        err: e0,
    }];
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol || err <= 1e-300 {
            return Ok((total, err));
        }
        if segs.len() >= max_intervals {
            return Err(Error::QuadratureFailure {
                context,
                achieved: err,
                requested: tol,
            });
        }
        // Split the segment with the largest error estimate. Ties broken by
        // position so the refinement order is reproducible.
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|(i, x), (j, y)| {
                x.err
                    .partial_cmp(&y.err)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(j.cmp(i))
            })
            .expect("segment list cannot be empty");
        let Seg { a: sa, b: sb, .. } = segs[idx];
        let mid = 0.5 * (sa + sb);
        if mid <= sa || mid >= sb {
            // Interval at machine resolution: accept its estimate as-is.
            let achieved = err;
            let seg = &mut segs[idx];
            seg.err = 0.0;
            if segs.iter().map(|s| s.err).sum::<f64>() <= tol {
                continue;
            }
            return Err(Error::QuadratureFailure {
                context,
                achieved,
                requested: tol,
            });
        }
        let (vl, el) = gk15(sa, mid, &mut f);
        let (vr, er) = gk15(mid, sb, &mut f);
        segs[idx] = Seg {
            a: sa,
            b: mid,
            value: vl,
            err: el,
        };
        segs.push(Seg {
            a: mid,
            b: sb,
            value: vr,
            err: er,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_nodes_match_known_values() {
        let r = GaussRule::legendre(2);
        let x = 1.0 / 3.0f64.sqrt();
        assert!((r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r5 = GaussRule::legendre(5);
        assert!((r5.nodes[4] - 0.906_179_845_938_664).abs() < 1e-13);
        assert!((r5.weights[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        // n-point rule is exact through degree 2n-1.
        let r = gauss_rule(6);
        let v = r.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2.0f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // \int_0^1 x^{-1/2} dx = 2, integrable singularity at 0.
        let (v, _) = adaptive_gk(1e-300, 1.0, 1e-10, 0.0, 2000, "test", |x| {
            1.0 / x.sqrt()
        })
        .unwrap();
        assert!((v - 2.0).abs() < 1e-7, "got {v}");
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = adaptive_gk(0.0, 1.0, 1e-14, 0.0, 4, "test", |x| (1.0 / (x + 1e-8)).sin());
        assert!(r.is_err());
    }

    #[test]
    fn graded_edges_cover_interval() {
        let e = geometric_edges(1.0, 3.0, 1e-6, 2.0);
        assert_eq!(e[0], 1.0);
        assert_eq!(*e.last().unwrap(), 3.0);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        let p = power_edges(0.0, 1.0, 8, 3.0);
        assert_eq!(p.len(), 9);
        assert_eq!(p[8], 1.0);
    }
}
