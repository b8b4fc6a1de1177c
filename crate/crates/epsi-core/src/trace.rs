//! Per-iteration convergence records shared by every solver, so the harness
//! compares methods like-for-like, plus the flat CSV serialization.
//!
//! Rows are long-format `(iter, pair, metric, value, wall_s, matvecs, flag)`.
//! Residual rows are always present; eigenvalue and subspace errors appear
//! when a dense reference decomposition is supplied. Matvec counts are read
//! from the operator's tally, so preconditioner construction done before a
//! solve is visible in the solve's cumulative counts.

use std::io::{BufRead, Write};
use std::time::Instant;

use faer::{ColRef, MatRef};
use thiserror::Error;

use crate::matrix::{ReferenceDecomposition, SymmetricOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    EigErr,
    Residual,
    SubspaceErr,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::EigErr => "eig_err",
            MetricKind::Residual => "residual",
            MetricKind::SubspaceErr => "subspace_err",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "eig_err" => Some(MetricKind::EigErr),
            "residual" => Some(MetricKind::Residual),
            "subspace_err" => Some(MetricKind::SubspaceErr),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowFlag {
    #[default]
    None,
    Converged,
    NotConverged,
    Breakdown,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::None => "",
            RowFlag::Converged => "converged",
            RowFlag::NotConverged => "not_converged",
            RowFlag::Breakdown => "breakdown",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "" => Some(RowFlag::None),
            "converged" => Some(RowFlag::Converged),
            "not_converged" => Some(RowFlag::NotConverged),
            "breakdown" => Some(RowFlag::Breakdown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub pair: usize,
    pub metric: MetricKind,
    pub value: f64,
    pub wall_s: f64,
    pub matvecs: u64,
    pub flag: RowFlag,
}

pub const CSV_HEADER: &str = "iter,pair,metric,value,wall_s,matvecs,flag";

#[derive(Debug, Error)]
pub enum TraceCsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace csv parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// The full convergence record of one solve.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub breakdown_sweeps: Vec<usize>,
}

impl ConvergenceTrace {
    pub fn not_converged(&self) -> bool {
        !self.converged
    }

    /// First iteration index at which `metric` for `pair` drops to or below
    /// `threshold`.
    pub fn iterations_to(&self, metric: MetricKind, pair: usize, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.pair == pair && r.value <= threshold)
            .map(|r| r.iter)
    }

    /// Cumulative matvecs at the first record where `metric` for `pair`
    /// reaches `threshold`.
    pub fn matvecs_to(&self, metric: MetricKind, pair: usize, threshold: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.pair == pair && r.value <= threshold)
            .map(|r| r.matvecs)
    }

    /// Values of one metric series for a pair, in iteration order.
    pub fn series(&self, metric: MetricKind, pair: usize) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric && r.pair == pair)
            .map(|r| (r.iter, r.value))
            .collect()
    }

    pub fn last_iter(&self) -> usize {
        self.rows.iter().map(|r| r.iter).max().unwrap_or(0)
    }

    /// Serialize to the flat CSV schema. `seed` appends a trailing seed
    /// column (multi-seed runs); `zero_wall` writes `0` for wall seconds so
    /// byte-identical output is achievable across runs.
    pub fn write_csv<W: Write>(
        &self,
        w: &mut W,
        seed: Option<u64>,
        zero_wall: bool,
        include_header: bool,
    ) -> std::io::Result<()> {
        if include_header {
            match seed {
                Some(_) => writeln!(w, "{CSV_HEADER},seed")?,
                None => writeln!(w, "{CSV_HEADER}")?,
            }
        }
        for r in &self.rows {
            let wall = if zero_wall { 0.0 } else { r.wall_s };
            match seed {
                Some(s) => writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    r.iter,
                    r.pair,
                    r.metric.as_str(),
                    r.value,
                    wall,
                    r.matvecs,
                    r.flag.as_str(),
                    s
                )?,
                None => writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.iter,
                    r.pair,
                    r.metric.as_str(),
                    r.value,
                    wall,
                    r.matvecs,
                    r.flag.as_str()
                )?,
            }
        }
        Ok(())
    }

    /// Parse a single-seed CSV back into a trace. Exact inverse of
    /// [`Self::write_csv`] without a seed column: float values round-trip
    /// bit-for-bit through the shortest-representation formatting.
    pub fn parse_csv<R: BufRead>(r: R) -> Result<Self, TraceCsvError> {
        let mut rows = Vec::new();
        let mut converged = false;
        let mut breakdown_sweeps = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim() != CSV_HEADER {
                    return Err(TraceCsvError::Parse {
                        line: lineno,
                        message: format!("unexpected header `{line}`"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(TraceCsvError::Parse {
                    line: lineno,
                    message: format!("expected 7 fields, got {}", fields.len()),
                });
            }
            let parse_err = |what: &str| TraceCsvError::Parse {
                line: lineno,
                message: format!("bad {what} field"),
            };
            let row = TraceRow {
                iter: fields[0].parse().map_err(|_| parse_err("iter"))?,
                pair: fields[1].parse().map_err(|_| parse_err("pair"))?,
                metric: MetricKind::parse(fields[2]).ok_or_else(|| parse_err("metric"))?,
                value: fields[3].parse().map_err(|_| parse_err("value"))?,
                wall_s: fields[4].parse().map_err(|_| parse_err("wall_s"))?,
                matvecs: fields[5].parse().map_err(|_| parse_err("matvecs"))?,
                flag: RowFlag::parse(fields[6]).ok_or_else(|| parse_err("flag"))?,
            };
            match row.flag {
                RowFlag::Converged => converged = true,
                RowFlag::Breakdown => {
                    if breakdown_sweeps.last() != Some(&row.iter) {
                        breakdown_sweeps.push(row.iter);
                    }
                }
                _ => {}
            }
            rows.push(row);
        }
        Ok(Self {
            rows,
            converged,
            breakdown_sweeps,
        })
    }
}

/// Incremental trace builder used inside the solvers.
pub(crate) struct Recorder<'a> {
    op: &'a SymmetricOperator,
    reference: Option<&'a ReferenceDecomposition>,
    start: Instant,
    matvec_base: u64,
    trace: ConvergenceTrace,
}

impl<'a> Recorder<'a> {
    pub fn new(op: &'a SymmetricOperator, reference: Option<&'a ReferenceDecomposition>) -> Self {
        Self {
            op,
            reference,
            start: Instant::now(),
            matvec_base: op.matvec_count(),
            trace: ConvergenceTrace::default(),
        }
    }

    fn stamp(&self) -> (f64, u64) {
        (
            self.start.elapsed().as_secs_f64(),
            self.op.matvec_count() - self.matvec_base,
        )
    }

    pub fn record_single(
        &mut self,
        iter: usize,
        u: ColRef<'_, f64>,
        lambda: f64,
        residual: f64,
        flag: RowFlag,
    ) {
        let (wall_s, matvecs) = self.stamp();
        let mut push = |metric, value| {
            self.trace.rows.push(TraceRow {
                iter,
                pair: 0,
                metric,
                value,
                wall_s,
                matvecs,
                flag,
            })
        };
        push(MetricKind::Residual, residual);
        if let Some(reference) = self.reference {
            push(MetricKind::EigErr, (lambda - reference.values()[0]).abs());
            push(MetricKind::SubspaceErr, reference.subspace_error_vec(u, 1));
        }
        if flag == RowFlag::Converged {
            self.trace.converged = true;
        }
        if flag == RowFlag::Breakdown {
            self.trace.breakdown_sweeps.push(iter);
        }
    }

    pub fn record_subspace(
        &mut self,
        sweep: usize,
        basis: MatRef<'_, f64>,
        lambdas: &[f64],
        residuals: &[f64],
        flag: RowFlag,
    ) {
        let (wall_s, matvecs) = self.stamp();
        let k = lambdas.len();
        for i in 0..k {
            self.trace.rows.push(TraceRow {
                iter: sweep,
                pair: i,
                metric: MetricKind::Residual,
                value: residuals[i],
                wall_s,
                matvecs,
                flag,
            });
        }
        if let Some(reference) = self.reference {
            for i in 0..k {
                self.trace.rows.push(TraceRow {
                    iter: sweep,
                    pair: i,
                    metric: MetricKind::EigErr,
                    value: (lambdas[i] - reference.values()[i]).abs(),
                    wall_s,
                    matvecs,
                    flag,
                });
            }
            let (spectral, _) = reference.subspace_error(basis, k);
            self.trace.rows.push(TraceRow {
                iter: sweep,
                pair: 0,
                metric: MetricKind::SubspaceErr,
                value: spectral,
                wall_s,
                matvecs,
                flag,
            });
        }
        if flag == RowFlag::Converged {
            self.trace.converged = true;
        }
        if flag == RowFlag::Breakdown {
            self.trace.breakdown_sweeps.push(sweep);
        }
    }

    pub fn mark_breakdown(&mut self, sweep: usize) {
        if self.trace.breakdown_sweeps.last() != Some(&sweep) {
            self.trace.breakdown_sweeps.push(sweep);
        }
    }

    pub fn finish(self) -> ConvergenceTrace {
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = ConvergenceTrace {
            rows: vec![
                TraceRow {
                    iter: 0,
                    pair: 0,
                    metric: MetricKind::Residual,
                    value: 0.1234567890123456789,
                    wall_s: 0.25,
                    matvecs: 3,
                    flag: RowFlag::None,
                },
                TraceRow {
                    iter: 1,
                    pair: 2,
                    metric: MetricKind::EigErr,
                    value: 3.5e-17,
                    wall_s: 0.5,
                    matvecs: 9,
                    flag: RowFlag::Converged,
                },
            ],
            converged: true,
            breakdown_sweeps: vec![],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, None, false, true).unwrap();
        let parsed = ConvergenceTrace::parse_csv(&buf[..]).unwrap();
        assert_eq!(parsed.rows, trace.rows);
        assert!(parsed.converged);
    }

    #[test]
    fn seed_column_only_when_requested() {
        let trace = ConvergenceTrace {
            rows: vec![TraceRow {
                iter: 0,
                pair: 0,
                metric: MetricKind::Residual,
                value: 1.0,
                wall_s: 0.0,
                matvecs: 1,
                flag: RowFlag::None,
            }],
            converged: false,
            breakdown_sweeps: vec![],
        };
        let mut plain = Vec::new();
        trace.write_csv(&mut plain, None, true, true).unwrap();
        assert!(String::from_utf8(plain).unwrap().starts_with("iter,pair,metric,value,wall_s,matvecs,flag\n"));
        let mut seeded = Vec::new();
        trace.write_csv(&mut seeded, Some(7), true, true).unwrap();
        let text = String::from_utf8(seeded).unwrap();
        assert!(text.starts_with("iter,pair,metric,value,wall_s,matvecs,flag,seed\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",7"));
    }

    #[test]
    fn bad_header_is_rejected() {
        let res = ConvergenceTrace::parse_csv(&b"iter,pair\n"[..]);
        assert!(matches!(res, Err(TraceCsvError::Parse { line: 1, .. })));
    }
}
