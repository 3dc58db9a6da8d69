//! Closed-form approximate eigenfunctions built from the half-line
//! generalized eigenfunctions of the fractional Laplacian.
//!
//! On (0, infinity) with zero exterior condition the generalized
//! eigenfunction at momentum alpha is
//!
//!   F_alpha(x) = sin(alpha x + (1-s) pi/4) - G(alpha x),   x > 0,
//!
//! where G is the Laplace transform of an explicit density gamma
//! (Kwasnicki, J. Funct. Anal. 262 (2012)). Reflecting one copy from each
//! endpoint of (-1,1) and blending with the C^1 cutoff q gives the
//! interval approximant rho_k with approximate eigenvalue mu_k^{2s}.
//!
//! G is needed at many arguments, so each order s gets a tabulated
//! log-log cubic Hermite interpolant of gamma with analytic power-law
//! head and tail corrections; the table is built once and shared.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use super::{mu, FracOrder};
use crate::error::{Error, Result};
use crate::quad::adaptive_gk;

/// C^1 ramp profile: 0 left of -1/3, 1 right of 1/3, glued parabolas
/// in between. Satisfies q(x) + q(-x) = 1.
pub fn q_profile(x: f64) -> f64 {
    if x <= -1.0 / 3.0 {
        0.0
    } else if x < 0.0 {
        4.5 * (x + 1.0 / 3.0) * (x + 1.0 / 3.0)
    } else if x < 1.0 / 3.0 {
        1.0 - 4.5 * (x - 1.0 / 3.0) * (x - 1.0 / 3.0)
    } else {
        1.0
    }
}

/// log of (1 - u^{2s}) / (1 - u^2) at L = ln u, stable for all u > 0.
fn log_ratio(big_l: f64, s: f64) -> f64 {
    if big_l.abs() < 1e-9 {
        // removable point u = 1: ratio -> s (1 + (s-1) L + O(L^2))
        s.ln() + (s - 1.0) * big_l
    } else if big_l < 0.0 {
        ((-f64::exp_m1(2.0 * s * big_l)) / (-f64::exp_m1(2.0 * big_l))).ln()
    } else {
        2.0 * (s - 1.0) * big_l + (-(-2.0 * s * big_l).exp()).ln_1p()
            - (-(-2.0 * big_l).exp()).ln_1p()
    }
}

/// Density gamma(y) whose Laplace transform enters F_alpha.
///
/// The inner integral over r is split at r = 1/y where the integrand's
/// smoothness degrades, and the unbounded part is mapped to (0,1).
/// gamma(y) ~ B y^{2s} as y -> 0 and ~ B y^{-1-s} as y -> infinity with
/// B = sqrt(s) sin(pi s) / pi.
pub fn gamma_density(y: f64, s: FracOrder) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidParameter {
            name: "y",
            value: y,
            constraint: "y > 0",
        });
    }
    let sv = s.value();
    let ln_y = y.ln();
    let integrand = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        log_ratio(ln_y + r.ln(), sv) / (1.0 + r * r)
    };
    let split = 1.0 / y;
    let (near, _) = adaptive_gk(0.0, split, 1e-10, 1e-14, 4000, "gamma inner head", integrand)?;
    // r = split + v/(1-v) maps (0,1) onto (split, inf).
    let (far, _) = adaptive_gk(
        0.0,
        1.0,
        1e-10,
        1e-14,
        4000,
        "gamma inner tail",
        |v: f64| {
            let om = 1.0 - v;
            if om <= 0.0 {
                return 0.0;
            }
            let r = split + v / om;
            integrand(r) / (om * om)
        },
    )?;
    let inner = (near + far) / std::f64::consts::PI;

    let pi = std::f64::consts::PI;
    let y2s = (2.0 * sv * ln_y).exp();
    let c = (pi * sv).cos();
    let denom = (y2s - c) * (y2s - c) + (pi * sv).sin() * (pi * sv).sin();
    let pref = (4.0 * sv).sqrt() * (pi * sv).sin() / (2.0 * pi);
    Ok(pref * y2s / denom * inner.exp())
}

/// Tabulated gamma on a uniform grid in t = ln y, interpolated in ln gamma.
#[derive(Debug)]
struct GammaTable {
    t0: f64,
    dt: f64,
    ln_gamma: Vec<f64>,
    slope: Vec<f64>,
}

impl GammaTable {
    fn build(s: FracOrder) -> Result<Self> {
        let sv = s.value();
        // Range chosen so the power-law head/tail corrections outside the
        // table are below ~1e-16 relative for moderate s.
        let t_max = (37.0 / (2.0 * sv) + 4.0).min(600.0);
        let dt = 1.0 / 32.0;
        let n = (2.0 * t_max / dt).ceil() as usize + 1;
        let t0 = -t_max;
        let mut ln_gamma = Vec::with_capacity(n);
        for i in 0..n {
            let y = (t0 + i as f64 * dt).exp();
            let g = gamma_density(y, s)?;
            ln_gamma.push(g.ln());
        }
        // Fourth-order interior slopes, one-sided at the ends.
        let mut slope = vec![0.0; n];
        for i in 0..n {
            slope[i] = if i >= 2 && i + 2 < n {
                (8.0 * (ln_gamma[i + 1] - ln_gamma[i - 1]) - (ln_gamma[i + 2] - ln_gamma[i - 2]))
                    / (12.0 * dt)
            } else if i == 0 {
                (ln_gamma[1] - ln_gamma[0]) / dt
            } else if i == n - 1 {
                (ln_gamma[n - 1] - ln_gamma[n - 2]) / dt
            } else if i == 1 {
                (ln_gamma[2] - ln_gamma[0]) / (2.0 * dt)
            } else {
                (ln_gamma[n - 1] - ln_gamma[n - 3]) / (2.0 * dt)
            };
        }
        Ok(GammaTable {
            t0,
            dt,
            ln_gamma,
            slope,
        })
    }

    fn t_min(&self) -> f64 {
        self.t0
    }

    fn t_max(&self) -> f64 {
        self.t0 + (self.ln_gamma.len() - 1) as f64 * self.dt
    }

    /// gamma(e^t) by cubic Hermite interpolation of ln gamma.
    fn eval(&self, t: f64) -> f64 {
        let n = self.ln_gamma.len();
        let pos = (t - self.t0) / self.dt;
        let i = (pos.floor() as usize).min(n - 2);
        let u = pos - i as f64;
        let (f0, f1) = (self.ln_gamma[i], self.ln_gamma[i + 1]);
        let (m0, m1) = (self.slope[i] * self.dt, self.slope[i + 1] * self.dt);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        (h00 * f0 + h10 * m0 + h01 * f1 + h11 * m1).exp()
    }
}

/// Half-line eigenfunction family at a fixed order s, with the shared
/// gamma table behind the Laplace transform G.
#[derive(Debug)]
pub struct HalfLineFamily {
    s: FracOrder,
    table: GammaTable,
    /// B = sqrt(s) sin(pi s) / pi: coefficient of both power-law ends.
    b_coeff: f64,
}

impl HalfLineFamily {
    pub fn new(s: FracOrder) -> Result<Self> {
        let table = GammaTable::build(s)?;
        let sv = s.value();
        let b_coeff = sv.sqrt() * (std::f64::consts::PI * sv).sin() / std::f64::consts::PI;
        Ok(HalfLineFamily { s, table, b_coeff })
    }

    /// Fetches (building on first use) the shared family for this order.
    pub fn shared(s: FracOrder) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<HalfLineFamily>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = s.value().to_bits();
        if let Some(hit) = cache.lock().expect("family cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let fresh = Arc::new(HalfLineFamily::new(s)?);
        cache
            .lock()
            .expect("family cache poisoned")
            .insert(key, fresh.clone());
        Ok(fresh)
    }

    pub fn s(&self) -> FracOrder {
        self.s
    }

    /// Laplace transform G(x) = int_0^inf e^{-xy} gamma(y) dy, x >= 0.
    ///
    /// Monotone decreasing, G(0) = sin((1-s) pi / 4).
    pub fn g(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameter {
                name: "x",
                value: x,
                constraint: "x >= 0",
            });
        }
        let sv = self.s.value();
        let y_lo = self.table.t_min().exp();
        let y_hi = self.table.t_max().exp();

        // Head: gamma ~ B y^{2s} on (0, y_lo).
        let a = 2.0 * sv + 1.0;
        let z = x * y_lo;
        let head = if z < 1e-8 {
            self.b_coeff * y_lo.powf(a) * (1.0 / a - z / (a + 1.0))
        } else {
            self.b_coeff * x.powf(-a) * gamma(a) * gamma_lr(a, z)
        };

        // Body over the table range, integrated in t = ln y.
        let (body, _) = adaptive_gk(
            self.table.t_min(),
            self.table.t_max(),
            1e-9,
            1e-16,
            4000,
            "laplace transform body",
            |t: f64| {
                let y = t.exp();
                let w = -x * y;
                if w < -700.0 {
                    return 0.0;
                }
                w.exp() * self.table.eval(t) * y
            },
        )?;

        // Tail: gamma ~ B y^{-1-s} on (y_hi, inf);
        // int_Y^inf e^{-xy} y^{-1-s} dy = x^s UpperGamma(-s, xY).
        let zt = x * y_hi;
        let tail = if zt > 600.0 {
            0.0
        } else if zt < 1e-300 {
            self.b_coeff * y_hi.powf(-sv) / sv
        } else {
            let upper_1ms = gamma(1.0 - sv) * gamma_ur(1.0 - sv, zt);
            let upper_neg = (zt.powf(-sv) * (-zt).exp() - upper_1ms) / sv;
            self.b_coeff * x.powf(sv) * upper_neg
        };

        Ok(head + body + tail)
    }

    /// F_alpha(x) = sin(alpha x + (1-s) pi/4) - G(alpha x) for x > 0,
    /// extended by zero to x <= 0.
    pub fn f_alpha(&self, x: f64, alpha: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let sv = self.s.value();
        let phase = (1.0 - sv) * std::f64::consts::PI / 4.0;
        Ok((alpha * x + phase).sin() - self.g(alpha * x)?)
    }

    /// Interval approximant of the k-th eigenfunction:
    ///
    ///   rho_k(x) = q(-x) F_{mu_k}(1+x) + (-1)^{k+1} q(x) F_{mu_k}(1-x).
    ///
    /// Both reflected copies carry the cutoff so that rho_k vanishes
    /// identically outside (-1,1); the relative sign makes the two bulk
    /// waves coincide (mu_k(1+x) and mu_k(1-x) phases sum to k pi), so the
    /// blend is a single wave away from the endpoints. Approximate
    /// eigenvalue: mu_k^{2s}.
    pub fn rho(&self, k: usize, x: f64) -> Result<f64> {
        assert!(k >= 1, "mode index starts at 1");
        if x <= -1.0 || x >= 1.0 {
            return Ok(0.0);
        }
        let m = mu(k, self.s);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let left = q_profile(-x) * self.f_alpha(1.0 + x, m)?;
        let right = sign * q_profile(x) * self.f_alpha(1.0 - x, m)?;
        Ok(left + right)
    }

    /// rho_k sampled at a list of points.
    pub fn rho_samples(&self, k: usize, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.rho(k, x)).collect()
    }
}

/// Laplace transform G(x) through the shared per-order family.
pub fn laplace_transform_g(x: f64, s: FracOrder) -> Result<f64> {
    HalfLineFamily::shared(s)?.g(x)
}

/// Half-line eigenfunction F_alpha(x) through the shared family.
pub fn f_alpha(x: f64, alpha: f64, s: FracOrder) -> Result<f64> {
    HalfLineFamily::shared(s)?.f_alpha(x, alpha)
}

/// Approximant rho_k(x) through the shared per-order family.
pub fn rho(k: usize, x: f64, s: FracOrder) -> Result<f64> {
    HalfLineFamily::shared(s)?.rho(k, x)
}
