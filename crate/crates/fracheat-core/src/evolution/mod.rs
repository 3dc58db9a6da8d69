//! Modal evolution: forward controlled flow, backward dual flow, exterior
//! trace of the dual, and the duality pairing. Everything is diagonal in
//! the spectral basis and all time integrals are closed-form, so no
//! time-stepping error enters.

mod dirichlet;
mod signal;

pub use dirichlet::{exterior_data_from_fn, solve_dirichlet};
pub use signal::{ControlSignal, PiecewisePoly, SignalComponent, TimeCoeff, TimeGrid};

use crate::error::{Error, Result};
use crate::nonlocal::TraceSet;
use crate::spectral::{normalization_constant, SpectralBasis};

/// Spectral coefficients of a state at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub time: f64,
    pub coeffs: Vec<f64>,
}

impl ModalState {
    pub fn new(time: f64, coeffs: Vec<f64>) -> Self {
        ModalState { time, coeffs }
    }

    /// Initial datum at t = 0.
    pub fn initial(coeffs: Vec<f64>) -> Self {
        ModalState::new(0.0, coeffs)
    }

    /// e_n basis datum with `n_modes` coefficients (1-based mode index).
    pub fn mode(n: usize, n_modes: usize) -> Self {
        let mut c = vec![0.0; n_modes];
        c[n - 1] = 1.0;
        ModalState::initial(c)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// L2(-1,1) norm (the basis is orthonormal).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

fn check_modes(state: &ModalState, basis: &SpectralBasis) -> Result<()> {
    if state.len() > basis.len() {
        return Err(Error::Mismatch(format!(
            "state has {} coefficients, basis only {} modes",
            state.len(),
            basis.len()
        )));
    }
    Ok(())
}

/// Forward solution of the controlled system at time t:
///
///   u_n(t) = u_{0,n} e^{-lambda_n t}
///          - int_0^t (g(.,tau), N_s phi_n)_{L2(O)} e^{-lambda_n (t-tau)} dtau.
///
/// The minus sign is forced by three independent consistency checks: the
/// t -> infinity limit under constant data must match the stationary
/// harmonic extension (whose modal coefficients are -(g, N_s phi_n)/lambda_n
/// by the Green identity), nonnegative exterior data must produce a
/// nonnegative state, and the duality pairing must close exactly.
///
/// The tau-integral is exact per component (polynomial segments through
/// exponential moments, exponential coefficients in closed form).
pub fn solve_forward(
    u0: &ModalState,
    control: Option<(&ControlSignal, &TraceSet)>,
    basis: &SpectralBasis,
    t: f64,
) -> Result<ModalState> {
    check_modes(u0, basis)?;
    if u0.time != 0.0 {
        return Err(Error::InvalidParameter {
            name: "u0.time",
            value: u0.time,
            constraint: "initial datum must sit at t = 0",
        });
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            constraint: "t >= 0",
        });
    }
    let mut coeffs: Vec<f64> = u0
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (-basis.eigenvalue(i + 1) * t).exp())
        .collect();
    if let Some((g, traces)) = control {
        if t > g.horizon() {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                constraint: "t <= control horizon",
            });
        }
        g.check_traces(traces)?;
        for comp in g.components() {
            for (i, c) in coeffs.iter_mut().enumerate() {
                let lambda = basis.eigenvalue(i + 1);
                let pairing = traces.weighted_dot(comp.profile(), traces.values(i + 1));
                *c -= pairing * comp.coeff().forced_response(lambda, t);
            }
        }
    }
    Ok(ModalState::new(t, coeffs))
}

/// Backward dual solution psi_n(t) = psi_{0,n} e^{-lambda_n (T-t)} where
/// psi0 is the terminal datum at time T = psi0.time.
pub fn solve_dual(psi0: &ModalState, basis: &SpectralBasis, t: f64) -> Result<ModalState> {
    check_modes(psi0, basis)?;
    let horizon = psi0.time;
    if !(t >= 0.0 && t <= horizon) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            constraint: "0 <= t <= T",
        });
    }
    let coeffs = psi0
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (-basis.eigenvalue(i + 1) * (horizon - t)).exp())
        .collect();
    Ok(ModalState::new(t, coeffs))
}

/// Value plus truncation bookkeeping for the dual exterior trace series.
#[derive(Debug, Clone, Copy)]
pub struct TraceValue {
    pub value: f64,
    /// Bound on the dropped terms: the explicitly known coefficients past
    /// `n_terms` plus a Cauchy-Schwarz envelope for everything beyond the
    /// stored modes.
    pub remainder_bound: f64,
}

/// Exterior trace of the dual solution at (x, t), truncated at `n_terms`:
///
///   N_s psi(x, t) = sum_n psi_{0,n} e^{-lambda_n (T-t)} N_s phi_n(x).
///
/// Rejected at t = T, where the series need not converge in L2.
pub fn dual_normal_trace(
    psi0: &ModalState,
    basis: &SpectralBasis,
    t: f64,
    x: f64,
    n_terms: usize,
    tolerance: Option<f64>,
) -> Result<TraceValue> {
    check_modes(psi0, basis)?;
    let horizon = psi0.time;
    if t >= horizon {
        return Err(Error::InvalidPoint {
            x: t,
            reason: "dual trace series is only summed for t < T",
        });
    }
    if x.abs() <= 1.0 {
        return Err(Error::InvalidPoint {
            x,
            reason: "dual trace lives outside [-1, 1]",
        });
    }
    let n_terms = n_terms.min(psi0.len());
    let mut value = 0.0;
    for n in 1..=n_terms {
        let u = crate::nonlocal::SampledFunction::from_mode(basis, n);
        let trace = crate::nonlocal::frac_laplacian_pv(&u, x, basis.s())?;
        value += psi0.coeffs[n - 1] * (-basis.eigenvalue(n) * (horizon - t)).exp() * trace;
    }
    // Dropped but known coefficients.
    let mut remainder = 0.0;
    for n in (n_terms + 1)..=psi0.len() {
        let u = crate::nonlocal::SampledFunction::from_mode(basis, n);
        let trace = crate::nonlocal::frac_laplacian_pv(&u, x, basis.s())?;
        remainder += (psi0.coeffs[n - 1] * (-basis.eigenvalue(n) * (horizon - t)).exp() * trace).abs();
    }
    // Envelope for modes beyond the basis: |N_s phi(x)| <= C_s ||phi||
    // sqrt(int_{-1}^1 |x-y|^{-2-4s} dy) and unit-norm coefficients, with
    // the spectral gap turned into a geometric bound.
    let s = basis.s().value();
    let cs = normalization_constant(basis.s());
    let d = x.abs() - 1.0;
    let env = cs
        * (((d).powf(-1.0 - 4.0 * s) - (d + 2.0).powf(-1.0 - 4.0 * s)) / (1.0 + 4.0 * s)).sqrt();
    let last = basis.len();
    let gap = if last >= 2 {
        (basis.eigenvalue(last) - basis.eigenvalue(last - 1)).max(1e-300)
    } else {
        basis.eigenvalue(last)
    };
    let psi_norm = psi0.norm();
    let lead = (-basis.eigenvalue(last) * (horizon - t)).exp();
    let tail_env = psi_norm * env * lead * (-(gap) * (horizon - t)).exp()
        / (-(-(gap) * (horizon - t)).exp()).ln_1p().abs().max(1e-300);
    // Geometric series sum e^{-gap dt} / (1 - e^{-gap dt}).
    let q = (-(gap) * (horizon - t)).exp();
    let tail_env = if q < 1.0 {
        psi_norm * env * lead * q / (1.0 - q)
    } else {
        tail_env
    };
    let bound = remainder + tail_env;
    if let Some(tol) = tolerance {
        if bound > tol {
            return Err(Error::TruncationRemainder {
                estimate: bound,
                tolerance: tol,
            });
        }
    }
    Ok(TraceValue {
        value,
        remainder_bound: bound,
    })
}

/// Duality mismatch
///
///   | (u(0), psi(0)) - (u(T), psi(T)) - int_0^T (g, N_s psi)_{L2(O)} dt |
///
/// computed from the same modal data on both sides; zero up to rounding
/// by construction.
pub fn duality_residual(
    u0: &ModalState,
    control: Option<(&ControlSignal, &TraceSet)>,
    psi0: &ModalState,
    basis: &SpectralBasis,
) -> Result<f64> {
    check_modes(u0, basis)?;
    check_modes(psi0, basis)?;
    let horizon = psi0.time;
    let n = u0.len().min(psi0.len());
    let psi_at_0 = solve_dual(psi0, basis, 0.0)?;
    let opening: f64 = (0..n)
        .map(|i| u0.coeffs[i] * psi_at_0.coeffs[i])
        .sum();
    let u_terminal = solve_forward(u0, control, basis, horizon)?;
    let closing: f64 = (0..u_terminal.len().min(psi0.len()))
        .map(|i| u_terminal.coeffs[i] * psi0.coeffs[i])
        .sum();
    let mut pairing = 0.0;
    if let Some((g, traces)) = control {
        g.check_traces(traces)?;
        for comp in g.components() {
            for (i, &p0) in psi0.coeffs.iter().enumerate() {
                let lambda = basis.eigenvalue(i + 1);
                let spatial = traces.weighted_dot(comp.profile(), traces.values(i + 1));
                // int_0^T c_j(t) e^{-lambda (T-t)} dt is the forced response
                // evaluated at the horizon.
                pairing += p0 * spatial * comp.coeff().forced_response(lambda, horizon);
            }
        }
    }
    Ok((opening - closing - pairing).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlocal::ExteriorRegion;
    use crate::spectral::{FracOrder, Grid};

    fn fixture(n_modes: usize) -> (SpectralBasis, TraceSet) {
        let s = FracOrder::new(0.75).unwrap();
        let grid = Grid::uniform(96).unwrap();
        let basis = SpectralBasis::compute(grid, s, n_modes).unwrap();
        let region = ExteriorRegion::interval(1.5, 2.5).unwrap();
        let traces = TraceSet::compute(&basis, &region, n_modes).unwrap();
        (basis, traces)
    }

    #[test]
    fn free_decay_single_mode() {
        let (basis, _) = fixture(4);
        let u0 = ModalState::mode(1, 4);
        let u = solve_forward(&u0, None, &basis, 0.7).unwrap();
        let expect = (-basis.eigenvalue(1) * 0.7).exp();
        assert!((u.coeffs[0] - expect).abs() < 1e-15);
        assert!(u.coeffs[1..].iter().all(|&c| c == 0.0));
        // Zero datum stays zero.
        let z = solve_forward(&ModalState::initial(vec![0.0; 4]), None, &basis, 0.3).unwrap();
        assert!(z.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn free_decay_semigroup_and_monotone() {
        let (basis, _) = fixture(6);
        let u0 = ModalState::initial(vec![0.4, -0.2, 0.7, 0.1, -0.5, 0.3]);
        let one = solve_forward(&u0, None, &basis, 0.9).unwrap();
        let a = solve_forward(&u0, None, &basis, 0.4).unwrap();
        let two = solve_forward(&ModalState::initial(a.coeffs.clone()), None, &basis, 0.5).unwrap();
        for (x, y) in one.coeffs.iter().zip(&two.coeffs) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        let mut prev = u0.norm();
        for k in 1..6 {
            let t = k as f64 * 0.2;
            let n = solve_forward(&u0, None, &basis, t).unwrap().norm();
            assert!(n <= prev + 1e-15, "norm must not grow: {n} after {prev}");
            prev = n;
        }
    }

    #[test]
    fn constant_control_closed_form() {
        // u0 = 0, g(x,t) = p(x): u_n(T) = -(p, N_s phi_n) (1 - e^{-l T}) / l,
        // cross-checked against adaptive quadrature of the tau-integral.
        let (basis, traces) = fixture(5);
        let horizon = 1.3;
        let profile = vec![1.0; traces.nodes().len()];
        let g = ControlSignal::piecewise_constant(&traces, horizon, profile.clone(), &[(0.0, 1.0)])
            .unwrap();
        let u0 = ModalState::initial(vec![0.0; 5]);
        let u = solve_forward(&u0, Some((&g, &traces)), &basis, horizon).unwrap();
        for n in 1..=5 {
            let l = basis.eigenvalue(n);
            let pairing = traces.weighted_dot(&profile, traces.values(n));
            let expect = -pairing * (1.0 - (-l * horizon).exp()) / l;
            assert!(
                (u.coeffs[n - 1] - expect).abs() < 1e-14 * expect.abs().max(1e-10),
                "mode {n}: {} vs {expect}",
                u.coeffs[n - 1]
            );
            let (quad, _) = crate::quad::adaptive_gk(
                0.0,
                horizon,
                1e-13,
                1e-16,
                2000,
                "test",
                |tau| (-l * (horizon - tau)).exp(),
            )
            .unwrap();
            let expect_quad = -pairing * quad;
            assert!(
                (u.coeffs[n - 1] - expect_quad).abs() < 1e-10 * expect_quad.abs().max(1e-10),
                "mode {n} vs quadrature: {} vs {expect_quad}",
                u.coeffs[n - 1]
            );
        }
        // Nonnegative data pushes the state nonnegative: the ground-state
        // coefficient must come out positive (traces are negative).
        assert!(u.coeffs[0] > 0.0, "u_1(T) = {}", u.coeffs[0]);
    }

    #[test]
    fn forward_affine_superposition() {
        let (basis, traces) = fixture(4);
        let horizon = 0.8;
        let profile: Vec<f64> = traces.nodes().iter().map(|&x| (x - 2.0).cos()).collect();
        let g = ControlSignal::piecewise_constant(&traces, horizon, profile, &[(0.0, 0.7)]).unwrap();
        let a = ModalState::initial(vec![0.3, -0.4, 0.1, 0.9]);
        let b = ModalState::initial(vec![-0.6, 0.2, 0.5, -0.1]);
        let sum = ModalState::initial(
            a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        );
        let ua = solve_forward(&a, Some((&g, &traces)), &basis, horizon).unwrap();
        let ub = solve_forward(&b, None, &basis, horizon).unwrap();
        let usum = solve_forward(&sum, Some((&g, &traces)), &basis, horizon).unwrap();
        for i in 0..4 {
            let lin = ua.coeffs[i] + ub.coeffs[i];
            assert!((usum.coeffs[i] - lin).abs() < 1e-12 * lin.abs().max(1.0));
        }
    }

    #[test]
    fn dual_terminal_condition_and_bound() {
        let (basis, _) = fixture(5);
        let psi0 = ModalState::new(2.0, vec![0.5, -0.3, 0.2, 0.1, -0.7]);
        let at_t = solve_dual(&psi0, &basis, 2.0).unwrap();
        assert_eq!(at_t.coeffs, psi0.coeffs);
        // Single mode decays with e^{-lambda (T-t)}.
        let e1 = ModalState::new(2.0, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let mid = solve_dual(&e1, &basis, 0.5).unwrap();
        assert!((mid.coeffs[0] - (-basis.eigenvalue(1) * 1.5).exp()).abs() < 1e-15);
        // ||psi(t)|| <= ||psi0|| with constant one.
        for t in [0.0, 0.5, 1.0, 1.9] {
            assert!(solve_dual(&psi0, &basis, t).unwrap().norm() <= psi0.norm());
        }
        assert!(solve_dual(&psi0, &basis, 2.5).is_err());
    }

    #[test]
    fn dual_trace_single_mode_and_t_horizon_policy() {
        let (basis, _) = fixture(3);
        let horizon = 1.0;
        let psi0 = ModalState::new(horizon, vec![1.0, 0.0, 0.0]);
        let x = 1.8;
        let tv = dual_normal_trace(&psi0, &basis, 0.25, x, 3, None).unwrap();
        let u = crate::nonlocal::SampledFunction::from_mode(&basis, 1);
        let direct = crate::nonlocal::frac_laplacian_pv(&u, x, basis.s()).unwrap()
            * (-basis.eigenvalue(1) * 0.75).exp();
        assert!((tv.value - direct).abs() < 1e-14 * direct.abs());
        assert!(dual_normal_trace(&psi0, &basis, horizon, x, 3, None).is_err());
        // Zero terminal datum has zero trace.
        let z = ModalState::new(horizon, vec![0.0, 0.0, 0.0]);
        assert_eq!(
            dual_normal_trace(&z, &basis, 0.5, x, 3, None).unwrap().value,
            0.0
        );
    }

    #[test]
    fn duality_residual_free_and_controlled() {
        let (basis, traces) = fixture(6);
        let horizon = 1.1;
        let u0 = ModalState::initial(vec![0.2, -0.5, 0.3, 0.8, -0.1, 0.4]);
        let psi0 = ModalState::new(horizon, vec![-0.3, 0.6, 0.2, -0.9, 0.5, 0.1]);
        let free = duality_residual(&u0, None, &psi0, &basis).unwrap();
        assert!(free < 1e-14, "free duality residual {free}");
        let profile: Vec<f64> = traces.nodes().iter().map(|&x| 1.0 / x).collect();
        let g = ControlSignal::piecewise_constant(&traces, horizon, profile, &[(0.0, 0.35), (0.6, -0.2)])
            .unwrap();
        let controlled = duality_residual(&u0, Some((&g, &traces)), &psi0, &basis).unwrap();
        assert!(controlled < 1e-13, "controlled duality residual {controlled}");
    }
}
