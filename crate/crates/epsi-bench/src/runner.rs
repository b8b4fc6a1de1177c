//! Experiment execution: one process invocation runs one configured
//! experiment (optionally repeated over consecutive seeds) and writes the
//! trace CSV atomically.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use epsi_core::baselines::{self, BaselineMethod};
use epsi_core::lazy::LazyOptions;
use epsi_core::sketch;
use epsi_core::trace::ConvergenceTrace;
use epsi_core::{
    epsi_solve, gen_low_rank_noise, gen_synthetic, lazy_epsi_solve, load_matrix_market,
    DistortionMode, NystromApprox, ReferenceDecomposition, Shift, SolveError, SpectrumSpec,
    SymmetricOperator,
};

use crate::config::{ExperimentConfig, MatrixSource, Method, ReferenceMode, ShiftSpec};
use crate::HarnessError;

/// Materialized inputs for one experiment.
pub struct PreparedMatrix {
    pub op: SymmetricOperator,
    /// Exact decomposition when the generator provides one for free.
    pub exact_reference: Option<ReferenceDecomposition>,
}

/// Load or generate the configured matrix. Generated matrices always use the
/// experiment's base seed, so repeated runs share one matrix and vary only
/// the solver-side randomness.
pub fn build_matrix(source: &MatrixSource, seed: u64) -> Result<PreparedMatrix, HarnessError> {
    match source {
        MatrixSource::MarketFile(path) => Ok(PreparedMatrix {
            op: load_matrix_market(path)?,
            exact_reference: None,
        }),
        MatrixSource::ExpDecay { n, kappa } => {
            let spec = SpectrumSpec::exp_decay(*n, *kappa);
            let (op, reference) = gen_synthetic(&spec, seed)?;
            Ok(PreparedMatrix {
                op,
                exact_reference: Some(reference),
            })
        }
        MatrixSource::LowRankNoise { n, s, sigma1, sigma2 } => Ok(PreparedMatrix {
            op: gen_low_rank_noise(*n, *s, *sigma1, *sigma2, seed)?,
            exact_reference: None,
        }),
    }
}

fn build_preconditioner(
    op: &SymmetricOperator,
    cfg: &ExperimentConfig,
    solver_seed: u64,
) -> Result<NystromApprox, HarnessError> {
    if let Some(cache) = &cfg.sketch_cache {
        if cache.exists() {
            let nys = NystromApprox::load_binary(cache)?;
            if nys.n() != op.n() {
                return Err(HarnessError::Config(format!(
                    "sketch cache {} has n = {}, matrix has n = {}",
                    cache.display(),
                    nys.n(),
                    op.n()
                )));
            }
            return Ok(nys);
        }
    }
    let base = sketch::nystrom_approximate(op, cfg.sketch, solver_seed)?;
    let shifted = match cfg.shift {
        ShiftSpec::Auto => sketch::apply_shift(op, &base, Shift::Auto)?,
        ShiftSpec::Value(c) => sketch::apply_shift(op, &base, Shift::Value(c))?,
    };
    if let Some(cache) = &cfg.sketch_cache {
        shifted.save_binary(cache)?;
    }
    Ok(shifted)
}

fn run_one(
    op: &SymmetricOperator,
    reference: Option<&ReferenceDecomposition>,
    cfg: &ExperimentConfig,
    solver_seed: u64,
) -> Result<(ConvergenceTrace, f64, f64), HarnessError> {
    let single_opts = epsi_core::SolveOptions::new(cfg.tol, cfg.max_iters, solver_seed);
    let sweep_opts = LazyOptions::new(cfg.k, cfg.max_iters, cfg.tol, solver_seed);
    // (trace, worst final residual, top eigenvalue estimate)
    let out = match cfg.method {
        Method::Epsi => {
            let nys = build_preconditioner(op, cfg, solver_seed)?;
            let (state, trace) = epsi_solve(op, &nys, None, &single_opts, reference)?;
            (trace, state.residual, state.lambda_r)
        }
        Method::LazyEpsi => {
            let nys = build_preconditioner(op, cfg, solver_seed)?;
            let (state, trace) = lazy_epsi_solve(op, &nys, None, &sweep_opts, reference)?;
            let worst = worst_residual(op, &state);
            (trace, worst, state.lambdas[0])
        }
        Method::Power => {
            let (state, trace) = baselines::power_iteration(op, None, &single_opts, reference)?;
            (trace, state.residual, state.lambda_r)
        }
        Method::Subspace => {
            let (state, trace) = baselines::subspace_iteration(op, None, &sweep_opts, reference)?;
            let worst = worst_residual(op, &state);
            (trace, worst, state.lambdas[0])
        }
        Method::Davidson => {
            let (state, trace) = baselines::davidson_method(op, None, &single_opts, reference)?;
            (trace, state.residual, state.lambda_r)
        }
        Method::InexactRqi => {
            let method =
                BaselineMethod::inexact_rqi(cfg.inner_tol, cfg.inner_max, cfg.init_power_steps);
            let (state, trace) =
                baselines::inexact_rqi(op, None, &single_opts, &method, reference)?;
            (trace, state.residual, state.lambda_r)
        }
    };
    Ok(out)
}

fn worst_residual(op: &SymmetricOperator, state: &epsi_core::SubspaceState) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..state.basis.ncols() {
        let au = op.matvec_quiet(state.basis.col(i));
        let r = (&au - state.basis.col(i) * state.lambdas[i]).norm_l2();
        worst = worst.max(r);
    }
    worst
}

/// Outcome summary printed by the CLI.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: Method,
    pub runs: usize,
    pub all_converged: bool,
    /// Worst final absolute residual across runs, and relative to the top
    /// eigenvalue estimate.
    pub final_residual: f64,
    pub final_relative_residual: f64,
    pub total_wall_s: f64,
    pub total_matvecs: u64,
    pub rows_written: usize,
}

impl RunSummary {
    pub fn one_line(&self) -> String {
        format!(
            "method={} runs={} converged={} final_worst_residual={:.3e} (relative {:.3e}) wall_s={:.3} matvecs={}",
            self.method.as_str(),
            self.runs,
            self.all_converged,
            self.final_residual,
            self.final_relative_residual,
            self.total_wall_s,
            self.total_matvecs
        )
    }
}

/// Run the experiment and write its CSV atomically (temp file in the target
/// directory, then rename). Non-convergence is recorded in the trace flags
/// and is not an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let wall = Instant::now();
    let prepared = build_matrix(&cfg.matrix, cfg.seed)?;
    let op = &prepared.op;
    if cfg.reference == ReferenceMode::Dense && op.n() > crate::config::DENSE_REFERENCE_CAP {
        return Err(HarnessError::Config(format!(
            "dense reference is capped at n = {}, matrix has n = {}",
            crate::config::DENSE_REFERENCE_CAP,
            op.n()
        )));
    }
    if cfg.method.uses_sketch() && cfg.sketch > op.n() {
        return Err(HarnessError::Config(format!(
            "sketch size {} exceeds matrix dimension {}",
            cfg.sketch,
            op.n()
        )));
    }
    let reference = match cfg.reference {
        ReferenceMode::None => None,
        ReferenceMode::Dense => Some(match prepared.exact_reference {
            Some(ref exact) => exact.clone(),
            None => ReferenceDecomposition::compute(op)?,
        }),
    };

    let repeats = cfg.repeat.unwrap_or(1);
    let mut traces = Vec::with_capacity(repeats);
    let mut all_converged = true;
    let mut final_residual = 0.0f64;
    let mut final_relative = 0.0f64;
    for rep in 0..repeats {
        let solver_seed = cfg.seed + rep as u64;
        let (trace, worst, lam_top) = run_one(op, reference.as_ref(), cfg, solver_seed)?;
        all_converged &= trace.converged;
        final_residual = final_residual.max(worst);
        if lam_top > 0.0 {
            final_relative = final_relative.max(worst / lam_top);
        }
        traces.push((solver_seed, trace));
    }

    let tmp = cfg.out.with_extension("csv.tmp");
    if let Some(parent) = cfg.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    {
        let file = fs::File::create(&tmp)?;
        let mut w = std::io::BufWriter::new(file);
        for (idx, (seed, trace)) in traces.iter().enumerate() {
            let seed_col = if cfg.repeat.is_some() { Some(*seed) } else { None };
            trace.write_csv(&mut w, seed_col, cfg.deterministic_output, idx == 0)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, &cfg.out)?;

    let rows = traces.iter().map(|(_, t)| t.rows.len()).sum();
    Ok(RunSummary {
        method: cfg.method,
        runs: repeats,
        all_converged,
        final_residual,
        final_relative_residual: final_relative,
        total_wall_s: wall.elapsed().as_secs_f64(),
        total_matvecs: op.matvec_count(),
        rows_written: rows,
    })
}

/// Preconditioner diagnostics for `epsi-bench sketch-info`.
#[derive(Debug, Clone)]
pub struct SketchInfo {
    pub n: usize,
    pub ell: usize,
    pub nu: f64,
    /// Power-residual estimate (a lower bound on the true distortion).
    pub eta_estimate: f64,
    pub eta_iters: usize,
    pub lambda_head: Vec<f64>,
}

pub fn sketch_info(
    source: &MatrixSource,
    ell: usize,
    seed: u64,
) -> Result<SketchInfo, HarnessError> {
    let prepared = build_matrix(source, seed)?;
    let nys = sketch::nystrom_approximate(&prepared.op, ell, seed)?;
    let estimate = sketch::estimate_distortion(&prepared.op, &nys, DistortionMode::PowerResidual)?;
    let head = nys.lambda_hat().iter().take(8).copied().collect();
    Ok(SketchInfo {
        n: prepared.op.n(),
        ell: nys.ell(),
        nu: nys.nu(),
        eta_estimate: estimate.eta,
        eta_iters: estimate.iters_used,
        lambda_head: head,
    })
}

impl SketchInfo {
    pub fn print(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "n = {}", self.n)?;
        writeln!(w, "ell = {}", self.ell)?;
        writeln!(w, "nu = {:.6e}", self.nu)?;
        writeln!(
            w,
            "eta ~ {:.6e} (power_residual lower bound, {} iterations)",
            self.eta_estimate, self.eta_iters
        )?;
        let head: Vec<String> = self.lambda_head.iter().map(|v| format!("{v:.6e}")).collect();
        writeln!(w, "lambda_hat[0..{}] = [{}]", head.len(), head.join(", "))?;
        Ok(())
    }
}

// Quiet-path matvec residual needs access to faer column ops.
use epsi_core::SubspaceState as _SubspaceStateCheck;
#[allow(dead_code)]
fn _assert_state_type(s: _SubspaceStateCheck) -> usize {
    s.sweep
}
