//! Summability diagnostic for the reciprocal eigenvalue series.
//!
//! Null controllability hinges on sum_n 1/lambda_n being finite, which
//! with lambda_n ~ (n pi/2 - (1-s) pi/4)^{2s} happens exactly when
//! 2s > 1. The partial sums use the closed-form asymptote so the range
//! can reach 10^6 terms and beyond.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{eigenvalue_asymptotic, FracOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MuntzVerdict {
    /// 2s > 1: the series converges, a p-series tail bound applies.
    Convergent,
    /// 2s <= 1: harmonic-like growth, partial sums are unbounded.
    Divergent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuntzReport {
    pub s: f64,
    pub n_max: usize,
    /// (N, S_N) at decade checkpoints, doubling points and N_max.
    pub partial_sums: Vec<(u64, f64)>,
    pub verdict: MuntzVerdict,
    /// For divergent orders: c with S_N ~ c ln N, estimated from the last
    /// decade (exactly 2/pi at s = 1/2).
    pub log_slope: Option<f64>,
    /// For convergent orders: integral-test bound on the dropped tail.
    pub tail_bound: Option<f64>,
}

/// Partial sums of 1/lambda_n with the asymptotic eigenvalues.
pub fn muntz_report(s: FracOrder, n_max: usize) -> Result<MuntzReport> {
    if n_max < 10 {
        return Err(Error::InvalidParameter {
            name: "n_max",
            value: n_max as f64,
            constraint: "need at least 10 terms",
        });
    }
    let mut checkpoints: Vec<usize> = Vec::new();
    let mut c = 100usize;
    while c < n_max {
        checkpoints.push(c);
        if c.checked_mul(2).map(|d| d < n_max).unwrap_or(false) {
            checkpoints.push(c * 2);
        }
        c *= 10;
    }
    checkpoints.push(n_max);
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let mut sums = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0f64;
    let mut comp = 0.0f64; // Kahan correction
    let mut next = 0usize;
    for n in 1..=n_max {
        let term = 1.0 / eigenvalue_asymptotic(n, s);
        let y = term - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        if next < checkpoints.len() && n == checkpoints[next] {
            sums.push((n as u64, acc));
            next += 1;
        }
    }

    let sv = s.value();
    let verdict = if 2.0 * sv > 1.0 {
        MuntzVerdict::Convergent
    } else {
        MuntzVerdict::Divergent
    };
    let (log_slope, tail_bound) = match verdict {
        MuntzVerdict::Divergent => {
            // Slope of S against ln N over the last decade of checkpoints.
            let hi = sums.last().copied().unwrap();
            let lo = sums
                .iter()
                .rev()
                .find(|(n, _)| (*n as f64) <= hi.0 as f64 / 8.0)
                .copied()
                .unwrap_or(sums[0]);
            let slope = (hi.1 - lo.1) / ((hi.0 as f64).ln() - (lo.0 as f64).ln());
            (Some(slope), None)
        }
        MuntzVerdict::Convergent => {
            // Integral test: sum_{n > N} mu_n^{-2s} <= (2/pi) mu_N^{1-2s}/(2s-1).
            let mu_n = crate::spectral::mu(n_max, s);
            let bound = 2.0 / std::f64::consts::PI * mu_n.powf(1.0 - 2.0 * sv) / (2.0 * sv - 1.0);
            (None, Some(bound))
        }
    };
    Ok(MuntzReport {
        s: sv,
        n_max,
        partial_sums: sums,
        verdict,
        log_slope,
        tail_bound,
    })
}
