//! Experiment report: a self-contained JSON document that can be
//! re-checked without rebuilding the basis.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "fracheat.report/1";

/// Everything a control experiment produced, with enough raw data
/// (Gramian, right-hand side, solution) for independent re-verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub s: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub region: Vec<(f64, f64)>,
    #[serde(rename = "N")]
    pub n_modes: usize,
    pub grid: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub eigenvalues: Vec<f64>,
    pub eta: f64,
    pub gramian_condition: f64,
    #[serde(rename = "control_cost_L2")]
    pub control_cost_l2: f64,
    #[serde(rename = "control_cost_Hs")]
    pub control_cost_hs: f64,
    pub terminal_defect: f64,
    pub exact_null: bool,
    pub muntz_partial_sums: Vec<(u64, f64)>,
    pub u0: Vec<f64>,
    pub psi0: Vec<f64>,
    pub rhs: Vec<f64>,
    pub gramian: Vec<Vec<f64>>,
    pub terminal_modes: Vec<f64>,
    pub free_terminal_modes: Vec<f64>,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub duality_probe_max_residual: f64,
}

impl ExperimentReport {
    /// JSON with 17-significant-digit numbers and a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, Json17Formatter::new());
        self.serialize(&mut ser)
            .map_err(|e| Error::CacheFormat(format!("report serialization failed: {e}")))?;
        buf.push(b'\n');
        String::from_utf8(buf).map_err(|e| Error::CacheFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::CacheFormat(format!("report parse failed: {e}")))
    }
}

/// JSON formatter printing every float with 17 significant digits and one
/// object key per line, so emitted reports are byte-stable, diffable and
/// round-trip exactly.
struct Json17Formatter {
    indent_level: usize,
}

impl Json17Formatter {
    fn new() -> Self {
        Json17Formatter { indent_level: 0 }
    }
}

impl serde_json::ser::Formatter for Json17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        debug_assert!(value.is_finite(), "reports must not carry NaN/inf");
        write!(writer, "{value:.16e}")
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.indent_level += 1;
        writer.write_all(b"{")
    }

    fn end_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.indent_level -= 1;
        writer.write_all(b"\n")?;
        for _ in 0..self.indent_level {
            writer.write_all(b"  ")?;
        }
        writer.write_all(b"}")
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, _first: bool) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        if !_first {
            writer.write_all(b",")?;
        }
        writer.write_all(b"\n")?;
        for _ in 0..self.indent_level {
            writer.write_all(b"  ")?;
        }
        Ok(())
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        writer.write_all(b": ")
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        if !first {
            writer.write_all(b", ")?;
        }
        Ok(())
    }
}

/// One verification check on a stored report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub checks: Vec<ReportCheck>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Re-derives the report's defect, cost and solve residual from its own
/// Gramian, solution and right-hand side; any edit to one of them breaks
/// a check.
pub fn verify_report(r: &ExperimentReport) -> VerifyOutcome {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(ReportCheck {
            name: name.to_string(),
            passed,
            detail,
        });
    };

    push(
        "schema",
        r.schema == REPORT_SCHEMA,
        format!("schema `{}`", r.schema),
    );

    let n = r.n_modes;
    let shape_ok = r.eigenvalues.len() == n
        && r.psi0.len() == n
        && r.rhs.len() == n
        && r.gramian.len() == n
        && r.gramian.iter().all(|row| row.len() == n)
        && r.terminal_modes.len() == n
        && r.free_terminal_modes.len() == n;
    push("shape", shape_ok, format!("N = {n}"));
    if !shape_ok {
        return VerifyOutcome { checks };
    }

    let ascending = r.eigenvalues.windows(2).all(|w| w[1] >= w[0])
        && r.eigenvalues.first().map(|&l| l > 0.0).unwrap_or(false);
    push(
        "eigenvalues",
        ascending,
        "positive and ascending".to_string(),
    );

    // rhs_n = -u0_n e^{-lambda_n T}.
    let mut rhs_err = 0.0f64;
    for i in 0..n {
        let u = r.u0.get(i).copied().unwrap_or(0.0);
        let expect = -u * (-r.eigenvalues[i] * r.horizon).exp();
        rhs_err = rhs_err.max((r.rhs[i] - expect).abs());
    }
    let rhs_scale = vec_norm(&r.rhs).max(1e-300);
    push(
        "rhs",
        rhs_err <= 1e-12 * rhs_scale,
        format!("max deviation {rhs_err:.3e}"),
    );

    // (G + eps I) psi0 ~ rhs within the reported CG residual.
    let mut gpsi = vec![0.0; n];
    for i in 0..n {
        let mut acc = r.epsilon * r.psi0[i];
        for j in 0..n {
            acc += r.gramian[i][j] * r.psi0[j];
        }
        gpsi[i] = acc;
    }
    let solve_res: f64 = gpsi
        .iter()
        .zip(&r.rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / rhs_scale;
    let solve_ok = solve_res <= (3.0 * r.cg_residual).max(1e-11) || r.rhs.iter().all(|&x| x == 0.0);
    push(
        "gramian_solve",
        solve_ok,
        format!("recomputed residual {solve_res:.3e}, reported {:.3e}", r.cg_residual),
    );

    // Terminal modes: u_n(T) = u0_n e^{-lambda T} + (G psi0)_n.
    let mut term_err = 0.0f64;
    let mut gp = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += r.gramian[i][j] * r.psi0[j];
        }
        gp[i] = acc;
        let expect = r.free_terminal_modes[i] + acc;
        term_err = term_err.max((r.terminal_modes[i] - expect).abs());
    }
    let term_scale = vec_norm(&r.free_terminal_modes).max(1e-300);
    push(
        "terminal_modes",
        term_err <= 1e-11 * term_scale,
        format!("max deviation {term_err:.3e}"),
    );

    // Defect.
    let free_norm = vec_norm(&r.free_terminal_modes);
    let defect = if free_norm == 0.0 {
        0.0
    } else {
        vec_norm(&r.terminal_modes) / free_norm
    };
    let defect_ok = if r.exact_null {
        free_norm == 0.0 && r.terminal_defect == 0.0
    } else {
        (defect - r.terminal_defect).abs() <= 1e-12 * defect.max(1.0)
    };
    push(
        "terminal_defect",
        defect_ok,
        format!("recomputed {defect:.6e}, stored {:.6e}", r.terminal_defect),
    );

    // Cost: psi0^T G psi0.
    let cost: f64 = r
        .psi0
        .iter()
        .zip(&gp)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .max(0.0)
        .sqrt();
    push(
        "control_cost_L2",
        (cost - r.control_cost_l2).abs() <= 1e-10 * cost.max(1e-300),
        format!("recomputed {cost:.6e}, stored {:.6e}", r.control_cost_l2),
    );

    push(
        "eta",
        r.eta > 0.0,
        format!("eta = {:.6e}", r.eta),
    );

    let muntz_ok = r.muntz_partial_sums.windows(2).all(|w| w[1].1 > w[0].1);
    push("muntz_monotone", muntz_ok, "partial sums increase".to_string());

    VerifyOutcome { checks }
}
