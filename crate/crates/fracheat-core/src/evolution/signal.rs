//! Separable exterior control signals g(x,t) = sum_j c_j(t) p_j(x) with
//! closed-form exponential time integrals.

use crate::error::{Error, Result};
use crate::nonlocal::{ExteriorRegion, TraceSet};

/// Partition 0 = t_0 < t_1 < ... < t_M = T of the control window.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(Error::InvalidParameter {
                name: "time grid",
                value: *points.first().unwrap_or(&f64::NAN),
                constraint: "must start at 0 with at least two breakpoints",
            });
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "time grid",
                value: f64::NAN,
                constraint: "breakpoints must strictly increase",
            });
        }
        Ok(TimeGrid { points })
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn n_segments(&self) -> usize {
        self.points.len() - 1
    }
}

/// Time coefficient of one separable component.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeCoeff {
    /// Piecewise polynomial on a time grid.
    Poly(PiecewisePoly),
    /// c(t) = amplitude * e^{-rate (horizon - t)}; the natural shape of
    /// observability-based controls.
    ExpDecay {
        amplitude: f64,
        rate: f64,
        horizon: f64,
    },
}

/// Piecewise polynomial: on segment [t_j, t_{j+1}],
/// c(t) = sum_m coeffs[j][m] (t - t_j)^m.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    grid: TimeGrid,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn new(grid: TimeGrid, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != grid.n_segments() {
            return Err(Error::Mismatch(format!(
                "{} segments but {} coefficient rows",
                grid.n_segments(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| c.is_empty() || c.len() > 8) {
            return Err(Error::Mismatch(
                "segment polynomials must have degree 0..=7".into(),
            ));
        }
        Ok(PiecewisePoly { grid, coeffs })
    }

    /// Piecewise-constant coefficient from (start_time, value) steps; the
    /// first step must start at 0.
    pub fn steps(steps: &[(f64, f64)], horizon: f64) -> Result<Self> {
        let mut points: Vec<f64> = steps.iter().map(|s| s.0).collect();
        points.push(horizon);
        let grid = TimeGrid::new(points)?;
        let coeffs = steps.iter().map(|s| vec![s.1]).collect();
        PiecewisePoly::new(grid, coeffs)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let pts = self.grid.points();
        if t < pts[0] || t > self.grid.horizon() {
            return 0.0;
        }
        let j = match pts.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.grid.n_segments() - 1),
            Err(i) => i - 1,
        };
        let local = t - pts[j];
        let mut acc = 0.0;
        for &c in self.coeffs[j].iter().rev() {
            acc = acc * local + c;
        }
        acc
    }
}

/// K_m = int_0^L sigma^m e^{-lambda (base - sigma)} d sigma with
/// 0 <= L <= base; stable for small and large lambda L.
fn exp_moments(lambda: f64, l: f64, base: f64, max_m: usize) -> Vec<f64> {
    debug_assert!(l >= 0.0 && base >= l && lambda > 0.0);
    let mut k = vec![0.0; max_m + 1];
    if l == 0.0 {
        return k;
    }
    if lambda * l < 0.5 {
        // Series: K_m = e^{-lambda base} sum_i lambda^i L^{m+i+1} / (i! (m+i+1)).
        // The recurrence loses (m / lambda L)^m digits for small lambda L,
        // so the series branch takes over well before that bites.
        let damp = (-lambda * base).exp();
        for (m, slot) in k.iter_mut().enumerate() {
            let mut term = l.powi(m as i32 + 1);
            let mut acc = term / (m as f64 + 1.0);
            let mut fact = 1.0;
            for i in 1..30 {
                term *= lambda * l;
                fact *= i as f64;
                let add = term / (fact * (m as f64 + i as f64 + 1.0));
                acc += add;
                if add.abs() <= 1e-18 * acc.abs() {
                    break;
                }
            }
            *slot = damp * acc;
        }
        return k;
    }
    let e_top = (-lambda * (base - l)).exp();
    k[0] = (-lambda * base).exp() * (lambda * l).exp_m1() / lambda;
    for m in 1..=max_m {
        k[m] = l.powi(m as i32) * e_top / lambda - (m as f64 / lambda) * k[m - 1];
    }
    k
}

impl TimeCoeff {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeCoeff::Poly(p) => p.eval(t),
            TimeCoeff::ExpDecay {
                amplitude,
                rate,
                horizon,
            } => {
                if t < 0.0 || t > *horizon {
                    0.0
                } else {
                    amplitude * (-rate * (horizon - t)).exp()
                }
            }
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            TimeCoeff::Poly(p) => p.grid.horizon(),
            TimeCoeff::ExpDecay { horizon, .. } => *horizon,
        }
    }

    /// Forced modal response int_0^t c(tau) e^{-lambda (t - tau)} d tau,
    /// exact per segment.
    pub fn forced_response(&self, lambda: f64, t: f64) -> f64 {
        match self {
            TimeCoeff::Poly(p) => {
                let pts = p.grid.points();
                let mut acc = 0.0;
                for j in 0..p.grid.n_segments() {
                    let a = pts[j];
                    if a >= t {
                        break;
                    }
                    let b = pts[j + 1].min(t);
                    let lseg = b - a;
                    let base = t - a;
                    let deg = p.coeffs[j].len() - 1;
                    let k = exp_moments(lambda, lseg, base, deg);
                    for (m, &c) in p.coeffs[j].iter().enumerate() {
                        acc += c * k[m];
                    }
                }
                acc
            }
            TimeCoeff::ExpDecay {
                amplitude,
                rate,
                horizon,
            } => {
                // int_0^t a e^{-rate (T - tau)} e^{-lambda (t - tau)} d tau.
                let denom = rate + lambda;
                amplitude * ((-rate * (horizon - t)).exp() - (-(rate * horizon + lambda * t)).exp())
                    / denom
            }
        }
    }
}

/// One separable component: spatial profile sampled at the region
/// quadrature nodes times a time coefficient.
#[derive(Debug, Clone)]
pub struct SignalComponent {
    profile: Vec<f64>,
    coeff: TimeCoeff,
}

impl SignalComponent {
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn coeff(&self) -> &TimeCoeff {
        &self.coeff
    }
}

/// Exterior control g(x,t) = sum_j c_j(t) p_j(x), identically zero outside
/// (region) x (0, horizon).
#[derive(Debug, Clone)]
pub struct ControlSignal {
    region: ExteriorRegion,
    nodes: Vec<f64>,
    horizon: f64,
    components: Vec<SignalComponent>,
}

impl ControlSignal {
    pub fn new(
        traces: &TraceSet,
        horizon: f64,
        components: Vec<(Vec<f64>, TimeCoeff)>,
    ) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: horizon,
                constraint: "T > 0",
            });
        }
        let mut built = Vec::with_capacity(components.len());
        for (profile, coeff) in components {
            if profile.len() != traces.nodes().len() {
                return Err(Error::Mismatch(format!(
                    "profile has {} samples, region quadrature has {}",
                    profile.len(),
                    traces.nodes().len()
                )));
            }
            if (coeff.horizon() - horizon).abs() > 1e-14 * horizon {
                return Err(Error::Mismatch(
                    "component horizon differs from signal horizon".into(),
                ));
            }
            built.push(SignalComponent { profile, coeff });
        }
        Ok(ControlSignal {
            region: traces.region().clone(),
            nodes: traces.nodes().to_vec(),
            horizon,
            components: built,
        })
    }

    /// Single piecewise-constant component.
    pub fn piecewise_constant(
        traces: &TraceSet,
        horizon: f64,
        profile: Vec<f64>,
        steps: &[(f64, f64)],
    ) -> Result<Self> {
        let coeff = TimeCoeff::Poly(PiecewisePoly::steps(steps, horizon)?);
        ControlSignal::new(traces, horizon, vec![(profile, coeff)])
    }

    pub fn region(&self) -> &ExteriorRegion {
        &self.region
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn components(&self) -> &[SignalComponent] {
        &self.components
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Verifies the signal was sampled on this trace set.
    pub fn check_traces(&self, traces: &TraceSet) -> Result<()> {
        if self.region != *traces.region() || self.nodes.len() != traces.nodes().len() {
            return Err(Error::Mismatch(
                "control region does not match the trace region".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise evaluation; exactly zero outside region x (0, horizon).
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        if t < 0.0 || t > self.horizon || !self.region.contains(x) {
            return 0.0;
        }
        self.components
            .iter()
            .map(|c| c.coeff.eval(t) * interp_sorted(&self.nodes, &c.profile, x))
            .sum()
    }

    /// Scales every component amplitude by c.
    pub fn scale(&mut self, c: f64) {
        for comp in &mut self.components {
            match &mut comp.coeff {
                TimeCoeff::Poly(p) => {
                    for row in &mut p.coeffs {
                        for v in row {
                            *v *= c;
                        }
                    }
                }
                TimeCoeff::ExpDecay { amplitude, .. } => *amplitude *= c,
            }
        }
    }
}

fn interp_sorted(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_gk;

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(vec![0.0, 0.5, 1.0]).is_ok());
        assert!(TimeGrid::new(vec![0.1, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn poly_eval_and_steps() {
        let p = PiecewisePoly::steps(&[(0.0, 2.0), (0.5, -1.0)], 1.0).unwrap();
        assert_eq!(p.eval(0.2), 2.0);
        assert_eq!(p.eval(0.7), -1.0);
        assert_eq!(p.eval(1.5), 0.0);
        let q = PiecewisePoly::new(
            TimeGrid::new(vec![0.0, 1.0]).unwrap(),
            vec![vec![1.0, -2.0, 0.5]],
        )
        .unwrap();
        assert!((q.eval(0.4) - (1.0 - 0.8 + 0.5 * 0.16)).abs() < 1e-15);
    }

    #[test]
    fn forced_response_matches_quadrature() {
        // Closed-form exponential moments against adaptive quadrature.
        let horizon = 1.2;
        let poly = TimeCoeff::Poly(
            PiecewisePoly::new(
                TimeGrid::new(vec![0.0, 0.4, horizon]).unwrap(),
                vec![vec![0.3, 1.7, -2.0], vec![-0.4, 0.9]],
            )
            .unwrap(),
        );
        let expd = TimeCoeff::ExpDecay {
            amplitude: 0.8,
            rate: 2.3,
            horizon,
        };
        for coeff in [poly, expd] {
            for lambda in [1e-6, 0.37, 4.0, 95.0] {
                for t in [0.3, 0.4, 0.9, horizon] {
                    let closed = coeff.forced_response(lambda, t);
                    let (quad, _) = adaptive_gk(0.0, t, 1e-13, 1e-16, 4000, "test", |tau| {
                        coeff.eval(tau) * (-lambda * (t - tau)).exp()
                    })
                    .unwrap();
                    assert!(
                        (closed - quad).abs() <= 1e-10 * quad.abs().max(1e-8),
                        "lambda={lambda} t={t}: closed {closed} vs quad {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn exp_moment_series_branch_agrees_with_recurrence() {
        // Just above and below the branch threshold.
        for (lambda, l) in [(1e-4, 1.0), (0.6, 1.0), (0.4, 1.0)] {
            let base = 1.5;
            let a = exp_moments(lambda, l, base, 3);
            let (q, _) = adaptive_gk(0.0, l, 1e-12, 1e-16, 2000, "test", |sig| {
                sig * sig * sig * (-lambda * (base - sig)).exp()
            })
            .unwrap();
            assert!((a[3] - q).abs() < 1e-12 * q.abs(), "{} vs {q}", a[3]);
        }
    }
}
