//! Command implementations: thin orchestration over the library modules
//! plus deterministic file I/O.

use std::path::Path;

use fracheat_core::control::{
    assemble_gramian, muntz_report, observability_constant_estimate, synthesize_null_control,
    verify_null_control, verify_report, ExperimentReport, REPORT_SCHEMA,
};
use fracheat_core::evolution::{
    dual_normal_trace, solve_dual, solve_forward, ControlSignal, ModalState,
};
use fracheat_core::nonlocal::{lower_bound_eta, SampledFunction, TraceSet};
use fracheat_core::spectral::{
    eigenvalue_asymptotic, read_cache, write_cache, CacheKey, FracOrder, Grid, SpectralBasis,
};

use crate::config::{RunConfig, SolveControl};
use crate::output::{fmt17, write_file, CacheLock, Csv, CsvCell};
use crate::CliError;

/// Loads the eigenbasis from the cache or computes and stores it.
fn basis_with_cache(cfg: &RunConfig, s: FracOrder) -> Result<SpectralBasis, CliError> {
    let key = CacheKey {
        s: cfg.s,
        n_cells: cfg.grid,
        n_modes: cfg.modes,
        residual_tol: cfg.eigen_residual_tol,
    };
    let file = cfg.cache_dir.join(format!(
        "eigen_s{}_g{}_m{}.txt",
        cfg.s, cfg.grid, cfg.modes
    ));
    let _lock = CacheLock::acquire(&cfg.cache_dir)?;
    if let Some(hit) = read_cache(&file, &key)? {
        return Ok(hit);
    }
    let grid = Grid::uniform(cfg.grid)?;
    let basis = SpectralBasis::compute(grid, s, cfg.modes)?;
    write_cache(&file, &basis, cfg.eigen_residual_tol)?;
    Ok(basis)
}

pub fn cmd_eigen(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.validate()?;
    let basis = basis_with_cache(cfg, s)?;
    let mut csv = Csv::new("n,lambda,lambda_asymptotic");
    for n in 1..=basis.len() {
        csv.row(&[
            CsvCell::Int(n as i64),
            CsvCell::Num(basis.eigenvalue(n)),
            CsvCell::Num(eigenvalue_asymptotic(n, s)),
        ]);
    }
    let path = cfg.out_dir.join("eigenvalues.csv");
    write_file(&path, &csv.finish())?;
    println!(
        "eigen: {} modes on a {}-cell grid, lambda_1 = {}, table at {}",
        basis.len(),
        cfg.grid,
        fmt17(basis.eigenvalue(1)),
        path.display()
    );
    Ok(())
}

/// Sample points inside a region interval: midpoints of a uniform split,
/// so endpoint blowups of the traces are never touched.
fn interval_samples(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| a + (b - a) * (j as f64 + 0.5) / count as f64)
        .collect()
}

pub fn cmd_trace(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.validate()?;
    let basis = basis_with_cache(cfg, s)?;
    let mut csv = Csv::new("k,x,N_s_phi_k");
    for k in 1..=basis.len() {
        let mode = SampledFunction::from_mode(&basis, k);
        for &(a, b) in cfg.region.intervals() {
            for x in interval_samples(a, b, cfg.trace_points) {
                let v = fracheat_core::nonlocal::frac_laplacian_pv(&mode, x, s)?;
                csv.row(&[CsvCell::Int(k as i64), CsvCell::Num(x), CsvCell::Num(v)]);
            }
        }
    }
    let path = cfg.out_dir.join("traces.csv");
    write_file(&path, &csv.finish())?;
    println!(
        "trace: {} modes x {} points per interval at {}",
        basis.len(),
        cfg.trace_points,
        path.display()
    );
    Ok(())
}

fn configured_control(
    cfg: &RunConfig,
    traces: &TraceSet,
) -> Result<Option<ControlSignal>, CliError> {
    match cfg.solve_control {
        SolveControl::None => Ok(None),
        SolveControl::Constant(amplitude) => {
            let profile = vec![1.0; traces.nodes().len()];
            let signal = ControlSignal::piecewise_constant(
                traces,
                cfg.horizon,
                profile,
                &[(0.0, amplitude)],
            )?;
            Ok(Some(signal))
        }
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.validate()?;
    let basis = basis_with_cache(cfg, s)?;
    let traces = TraceSet::compute(&basis, &cfg.region, cfg.modes)?;
    let control = configured_control(cfg, &traces)?;
    let u0 = ModalState::initial(cfg.u0.realize(cfg.modes, cfg.seed)?);

    let mut csv = Csv::new("t,n,u_n");
    let mut profile_csv = Csv::new("t,x,u");
    for j in 0..cfg.t_samples {
        let t = cfg.horizon * j as f64 / (cfg.t_samples - 1) as f64;
        let state = solve_forward(
            &u0,
            control.as_ref().map(|g| (g, &traces)),
            &basis,
            t,
        )?;
        for (i, c) in state.coeffs.iter().enumerate() {
            csv.row(&[
                CsvCell::Num(t),
                CsvCell::Int((i + 1) as i64),
                CsvCell::Num(*c),
            ]);
        }
        if cfg.profile_points > 0 {
            for p in 0..=cfg.profile_points {
                let x = -1.0 + 2.0 * p as f64 / cfg.profile_points as f64;
                let u: f64 = state
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * basis.eval_mode(i + 1, x))
                    .sum();
                csv_profile_row(&mut profile_csv, t, x, u);
            }
        }
    }
    let path = cfg.out_dir.join("trajectory.csv");
    write_file(&path, &csv.finish())?;
    if cfg.profile_points > 0 {
        write_file(&cfg.out_dir.join("trajectory_profile.csv"), &profile_csv.finish())?;
    }
    println!(
        "solve: {} time samples, {} modes, trajectory at {}",
        cfg.t_samples,
        cfg.modes,
        path.display()
    );
    Ok(())
}

fn csv_profile_row(csv: &mut Csv, t: f64, x: f64, u: f64) {
    csv.row(&[CsvCell::Num(t), CsvCell::Num(x), CsvCell::Num(u)]);
}

pub fn cmd_dual(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.validate()?;
    let basis = basis_with_cache(cfg, s)?;
    let psi0 = ModalState::new(cfg.horizon, cfg.psi0.realize(cfg.modes, cfg.seed)?);

    let mut csv = Csv::new("t,n,psi_n");
    for j in 0..cfg.t_samples {
        let t = cfg.horizon * j as f64 / (cfg.t_samples - 1) as f64;
        let state = solve_dual(&psi0, &basis, t)?;
        for (i, c) in state.coeffs.iter().enumerate() {
            csv.row(&[
                CsvCell::Num(t),
                CsvCell::Int((i + 1) as i64),
                CsvCell::Num(*c),
            ]);
        }
    }
    write_file(&cfg.out_dir.join("dual_trajectory.csv"), &csv.finish())?;

    // Exterior trace of the dual at the configured time t < T.
    let mut trace_csv = Csv::new("t,x,N_s_psi,remainder_bound");
    for &(a, b) in cfg.region.intervals() {
        for x in interval_samples(a, b, cfg.trace_points) {
            let tv = dual_normal_trace(&psi0, &basis, cfg.dual_t, x, cfg.modes, None)?;
            trace_csv.row(&[
                CsvCell::Num(cfg.dual_t),
                CsvCell::Num(x),
                CsvCell::Num(tv.value),
                CsvCell::Num(tv.remainder_bound),
            ]);
        }
    }
    let path = cfg.out_dir.join("dual_trace.csv");
    write_file(&path, &trace_csv.finish())?;
    println!(
        "dual: trajectory and exterior trace at t = {} written to {}",
        cfg.dual_t,
        path.display()
    );
    Ok(())
}

pub fn cmd_control(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.validate()?;
    let basis = basis_with_cache(cfg, s)?;
    let traces = TraceSet::compute(&basis, &cfg.region, cfg.modes)?;
    let eta = lower_bound_eta(&traces, cfg.modes)?;
    let u0 = ModalState::initial(cfg.u0.realize(cfg.modes, cfg.seed)?);

    let result = synthesize_null_control(&u0, &basis, &traces, cfg.horizon, cfg.modes, cfg.epsilon)?;
    let verification = verify_null_control(&result, &u0, &basis, &traces, cfg.seed, 10)?;
    let muntz = muntz_report(s, cfg.muntz_n_max)?;
    let gram = &result.gramian;
    let diag = gram.diagnostics.as_ref().expect("solve ran");

    // Closed-loop trajectory export.
    let mut csv = Csv::new("t,n,u_n");
    for j in 0..cfg.t_samples {
        let t = cfg.horizon * j as f64 / (cfg.t_samples - 1) as f64;
        let state = solve_forward(&u0, Some((&result.signal, &traces)), &basis, t)?;
        for (i, c) in state.coeffs.iter().enumerate() {
            csv.row(&[
                CsvCell::Num(t),
                CsvCell::Int((i + 1) as i64),
                CsvCell::Num(*c),
            ]);
        }
    }
    write_file(&cfg.out_dir.join("controlled_trajectory.csv"), &csv.finish())?;

    let report = ExperimentReport {
        schema: REPORT_SCHEMA.to_string(),
        s: cfg.s,
        horizon: cfg.horizon,
        region: cfg.region.intervals().to_vec(),
        n_modes: cfg.modes,
        grid: cfg.grid,
        epsilon: gram.epsilon,
        seed: cfg.seed,
        eigenvalues: basis.eigenvalues().to_vec(),
        eta,
        gramian_condition: gram.condition_estimate(),
        control_cost_l2: result.cost_l2,
        control_cost_hs: result.cost_hs,
        terminal_defect: result.terminal_defect,
        exact_null: result.exact_null,
        muntz_partial_sums: muntz.partial_sums.clone(),
        u0: u0.coeffs.clone(),
        psi0: gram.psi0.clone(),
        rhs: gram.rhs.clone(),
        gramian: (0..cfg.modes)
            .map(|i| (0..cfg.modes).map(|j| gram.matrix[(i, j)]).collect())
            .collect(),
        terminal_modes: result.terminal_modes.clone(),
        free_terminal_modes: result.free_terminal_modes.clone(),
        cg_iterations: diag.iterations,
        cg_residual: diag.residual,
        duality_probe_max_residual: verification.max_probe_residual,
    };
    let path = cfg.out_dir.join("control_report.json");
    write_file(&path, &report.to_json()?)?;

    // Observability quotient on the truncated space: a conditioning
    // diagnostic, deliberately not part of the report schema.
    let obs = assemble_gramian(&basis, &traces, cfg.horizon, cfg.modes)
        .and_then(|g| observability_constant_estimate(&basis, &g));
    let regularized = gram.epsilon > 0.0;
    println!(
        "control: defect {} cost_L2 {} eta {} cg {} iters{}{}",
        fmt17(result.terminal_defect),
        fmt17(result.cost_l2),
        fmt17(eta),
        diag.iterations,
        if regularized {
            format!(" (regularized, epsilon {})", fmt17(gram.epsilon))
        } else {
            String::new()
        },
        match obs {
            Ok(c) => format!(", observability estimate {}", fmt17(c)),
            Err(e) => format!(", observability estimate unavailable ({e})"),
        }
    );
    println!("control: report at {}", path.display());
    Ok(())
}

pub fn cmd_muntz(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.validate()?;
    let report = muntz_report(s, cfg.muntz_n_max)?;
    let mut csv = Csv::new("N,partial_sum");
    for (n, sum) in &report.partial_sums {
        csv.row(&[CsvCell::Int(*n as i64), CsvCell::Num(*sum)]);
    }
    let path = cfg.out_dir.join("muntz.csv");
    write_file(&path, &csv.finish())?;
    match (report.log_slope, report.tail_bound) {
        (Some(slope), _) => println!(
            "muntz: divergent (2s <= 1); S_N ~ c ln N with c = {} (2/pi = {})",
            fmt17(slope),
            fmt17(2.0 / std::f64::consts::PI)
        ),
        (_, Some(tail)) => println!(
            "muntz: convergent (2s > 1); tail beyond N = {} bounded by {}",
            cfg.muntz_n_max,
            fmt17(tail)
        ),
        _ => unreachable!("report always carries one fit"),
    }
    println!("muntz: partial sums at {}", path.display());
    Ok(())
}

pub fn cmd_verify(report_path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", report_path.display())))?;
    let report = ExperimentReport::from_json(&text)?;
    let outcome = verify_report(&report);
    for check in &outcome.checks {
        println!(
            "[{}] {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if outcome.passed() {
        println!("verify: report is internally consistent");
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "report {} failed verification",
            report_path.display()
        )))
    }
}
