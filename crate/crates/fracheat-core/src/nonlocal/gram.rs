//! Exterior observation data: traces of the basis modes on a region
//! quadrature, their Gram matrix, and the uniform lower bound.

use nalgebra::DMatrix;

use super::pointwise::trace_rows;
use super::ExteriorRegion;
use crate::error::{Error, Result};
use crate::quad::{gauss_rule, geometric_edges};
use crate::spectral::SpectralBasis;

/// Composite quadrature over the region plus the exterior traces
/// N_s phi_k of the first K modes at its nodes.
///
/// Panels refine geometrically toward any interval end that approaches
/// ±1, where the traces grow like dist^{-s}.
#[derive(Debug, Clone)]
pub struct TraceSet {
    region: ExteriorRegion,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// values[k][q] = N_s phi_{k+1} at node q.
    values: Vec<Vec<f64>>,
}

/// Quadrature nodes and weights over one interval of the region.
fn interval_rule(a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    // Distance from the interval to the near domain endpoint (+1 or -1).
    let (near, d) = if a >= 1.0 {
        (1.0, a - 1.0)
    } else {
        (-1.0, -1.0 - b)
    };
    let len = b - a;
    let edges = if d < 0.75 {
        // Geometric refinement toward the singular side.
        let d0 = (d.max(1e-14)).min(len / 4.0);
        let local = geometric_edges(0.0, len, d0, 1.7);
        if near > 0.0 {
            local.iter().map(|&t| a + t).collect::<Vec<_>>()
        } else {
            let mut e: Vec<f64> = local.iter().map(|&t| b - t).collect();
            e.reverse();
            e
        }
    } else {
        let n = ((len / 0.25).ceil() as usize).max(2);
        (0..=n).map(|j| a + len * j as f64 / n as f64).collect()
    };
    let rule = gauss_rule(12);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in edges.windows(2) {
        let c = 0.5 * (w[0] + w[1]);
        let r = 0.5 * (w[1] - w[0]);
        if r <= 0.0 {
            continue;
        }
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(c + r * x);
            weights.push(wt * r);
        }
    }
    (nodes, weights)
}

impl TraceSet {
    /// Evaluates the traces of the first `count` modes of `basis` on the
    /// region quadrature. Rejects region/order combinations with a
    /// non-integrable endpoint: an interval touching ±1 with s >= 1/2.
    pub fn compute(basis: &SpectralBasis, region: &ExteriorRegion, count: usize) -> Result<Self> {
        if count == 0 || count > basis.len() {
            return Err(Error::Mismatch(format!(
                "trace count {count} exceeds basis size {}",
                basis.len()
            )));
        }
        if region.distance_to_domain() == 0.0 && basis.s().value() >= 0.5 {
            return Err(Error::DivergentIntegral(
                "L2 norm of the trace diverges when the region touches ±1 and s >= 1/2".into(),
            ));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(a, b) in region.intervals() {
            let (n, w) = interval_rule(a, b);
            nodes.extend(n);
            weights.extend(w);
        }
        let values = trace_rows(basis, &nodes, count);
        Ok(TraceSet {
            region: region.clone(),
            nodes,
            weights,
            values,
        })
    }

    #[inline]
    pub fn region(&self) -> &ExteriorRegion {
        &self.region
    }

    #[inline]
    pub fn len_modes(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trace samples of mode k (1-based) at the quadrature nodes.
    #[inline]
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k - 1]
    }

    /// L2(region) inner product of two node-sampled functions.
    pub fn weighted_dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// (f, N_s phi_k)_{L2(region)} for node-sampled f.
    pub fn project(&self, f: &[f64], k: usize) -> f64 {
        self.weighted_dot(f, self.values(k))
    }

    /// ||N_s phi_k||_{L2(region)}.
    pub fn trace_norm(&self, k: usize) -> f64 {
        self.weighted_dot(self.values(k), self.values(k)).sqrt()
    }
}

/// Gram matrix kappa_{nm} = (N_s phi_n, N_s phi_m)_{L2(region)} of the
/// first K traces. Symmetric positive semidefinite by construction.
pub fn exterior_gram(traces: &TraceSet, k: usize) -> Result<DMatrix<f64>> {
    if k == 0 || k > traces.len_modes() {
        return Err(Error::Mismatch(format!(
            "gram order {k} exceeds available traces {}",
            traces.len_modes()
        )));
    }
    let mut g = DMatrix::zeros(k, k);
    for n in 0..k {
        for m in n..k {
            let v = traces.weighted_dot(&traces.values[n], &traces.values[m]);
            g[(n, m)] = v;
            g[(m, n)] = v;
        }
    }
    Ok(g)
}

/// Uniform observation floor: min_{k <= K} ||N_s phi_k||_{L2(region)}.
///
/// Strictly positive for every valid region; this is the computable face
/// of unique continuation for the exterior trace.
pub fn lower_bound_eta(traces: &TraceSet, k: usize) -> Result<f64> {
    if k == 0 || k > traces.len_modes() {
        return Err(Error::Mismatch(format!(
            "eta order {k} exceeds available traces {}",
            traces.len_modes()
        )));
    }
    Ok((1..=k)
        .map(|i| traces.trace_norm(i))
        .fold(f64::INFINITY, f64::min))
}
