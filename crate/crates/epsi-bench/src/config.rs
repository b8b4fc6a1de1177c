//! Experiment configuration: matrix sources, method selection, and the JSON
//! config file that mirrors the CLI flags (flags override file values).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use crate::HarnessError;

/// Cap on dense reference decompositions.
pub const DENSE_REFERENCE_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// `mm:PATH` — Matrix Market coordinate file, real symmetric.
    MarketFile(PathBuf),
    /// `gen:exp,n=N,kappa=K` — Haar-rotated exponential spectrum.
    ExpDecay { n: usize, kappa: f64 },
    /// `gen:lrn,n=N,s=S,s1=V,s2=V` — low-rank-plus-noise product operator.
    LowRankNoise {
        n: usize,
        s: usize,
        sigma1: f64,
        sigma2: f64,
    },
}

impl FromStr for MatrixSource {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("mm:") {
            if path.is_empty() {
                return Err(HarnessError::Config("mm: requires a path".into()));
            }
            return Ok(MatrixSource::MarketFile(PathBuf::from(path)));
        }
        let Some(spec) = s.strip_prefix("gen:") else {
            return Err(HarnessError::Config(format!(
                "matrix source `{s}` must start with mm: or gen:"
            )));
        };
        let mut parts = spec.split(',');
        let kind = parts.next().unwrap_or_default();
        let mut fields = std::collections::BTreeMap::new();
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("expected key=value in matrix source, got `{part}`"))
            })?;
            fields.insert(key.to_string(), value.to_string());
        }
        let get_usize = |fields: &std::collections::BTreeMap<String, String>, key: &str| {
            fields
                .get(key)
                .ok_or_else(|| HarnessError::Config(format!("matrix source missing `{key}`")))?
                .parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                .map(|v| v as usize)
                .ok_or_else(|| HarnessError::Config(format!("bad integer for `{key}`")))
        };
        let get_f64 = |fields: &std::collections::BTreeMap<String, String>, key: &str| {
            fields
                .get(key)
                .ok_or_else(|| HarnessError::Config(format!("matrix source missing `{key}`")))?
                .parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("bad float for `{key}`")))
        };
        match kind {
            "exp" => Ok(MatrixSource::ExpDecay {
                n: get_usize(&fields, "n")?,
                kappa: get_f64(&fields, "kappa")?,
            }),
            "lrn" => Ok(MatrixSource::LowRankNoise {
                n: get_usize(&fields, "n")?,
                s: get_usize(&fields, "s")?,
                sigma1: get_f64(&fields, "s1")?,
                sigma2: get_f64(&fields, "s2")?,
            }),
            other => Err(HarnessError::Config(format!(
                "unknown generator `{other}` (expected exp or lrn)"
            ))),
        }
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSource::MarketFile(p) => write!(f, "mm:{}", p.display()),
            MatrixSource::ExpDecay { n, kappa } => write!(f, "gen:exp,n={n},kappa={kappa}"),
            MatrixSource::LowRankNoise { n, s, sigma1, sigma2 } => {
                write!(f, "gen:lrn,n={n},s={s},s1={sigma1},s2={sigma2}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Epsi,
    LazyEpsi,
    Power,
    Subspace,
    Davidson,
    InexactRqi,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Epsi => "epsi",
            Method::LazyEpsi => "lazy-epsi",
            Method::Power => "power",
            Method::Subspace => "subspace",
            Method::Davidson => "davidson",
            Method::InexactRqi => "irqi",
        }
    }

    pub fn uses_sketch(self) -> bool {
        matches!(self, Method::Epsi | Method::LazyEpsi)
    }

    pub fn is_single_vector(self) -> bool {
        !matches!(self, Method::LazyEpsi | Method::Subspace)
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "epsi" => Ok(Method::Epsi),
            "lazy-epsi" => Ok(Method::LazyEpsi),
            "power" => Ok(Method::Power),
            "subspace" => Ok(Method::Subspace),
            "davidson" => Ok(Method::Davidson),
            "irqi" => Ok(Method::InexactRqi),
            other => Err(HarnessError::Config(format!(
                "unknown method `{other}` (epsi|lazy-epsi|power|subspace|davidson|irqi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftSpec {
    Auto,
    Value(f64),
}

impl FromStr for ShiftSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(ShiftSpec::Auto);
        }
        s.parse::<f64>()
            .map(ShiftSpec::Value)
            .map_err(|_| HarnessError::Config(format!("shift must be `auto` or a float, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMode {
    #[default]
    None,
    Dense,
}

impl FromStr for ReferenceMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense" => Ok(ReferenceMode::Dense),
            "none" => Ok(ReferenceMode::None),
            other => Err(HarnessError::Config(format!(
                "unknown reference mode `{other}` (dense|none)"
            ))),
        }
    }
}

/// One experiment: matrix, method, solver knobs, and output location.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub matrix: MatrixSource,
    pub method: Method,
    pub k: usize,
    /// Sketch size; required by the sketch-based methods.
    pub sketch: usize,
    pub shift: ShiftSpec,
    pub tol: f64,
    /// Iteration cap for single-vector methods, sweep cap for subspace ones.
    pub max_iters: usize,
    pub seed: u64,
    pub reference: ReferenceMode,
    /// Run this many seeds `seed..seed+N` sequentially, appending a seed
    /// column to the CSV.
    pub repeat: Option<usize>,
    pub out: PathBuf,
    /// Write wall_s as 0 so identical configs produce byte-identical CSVs.
    pub deterministic_output: bool,
    /// Binary sidecar reused across runs for the sketch-based methods.
    pub sketch_cache: Option<PathBuf>,
    // inexact RQI knobs
    pub inner_tol: f64,
    pub inner_max: usize,
    pub init_power_steps: usize,
}

impl ExperimentConfig {
    pub fn matrix_dim(&self) -> Option<usize> {
        match &self.matrix {
            MatrixSource::MarketFile(_) => None,
            MatrixSource::ExpDecay { n, .. } => Some(*n),
            MatrixSource::LowRankNoise { n, .. } => Some(*n),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.k < 1 {
            return Err(HarnessError::Config("k must be >= 1".into()));
        }
        if self.method.is_single_vector() && self.k != 1 {
            return Err(HarnessError::Config(format!(
                "method {} computes a single eigenpair; use k = 1 (got {})",
                self.method.as_str(),
                self.k
            )));
        }
        if self.method.uses_sketch() {
            if self.sketch < 1 {
                return Err(HarnessError::Config(
                    "sketch size is required for sketch-based methods".into(),
                ));
            }
            if self.sketch < self.k {
                return Err(HarnessError::Config(format!(
                    "sketch size {} must be at least k = {}",
                    self.sketch, self.k
                )));
            }
        }
        if !(self.tol > 0.0) {
            return Err(HarnessError::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters < 1 {
            return Err(HarnessError::Config("max-iters must be >= 1".into()));
        }
        if let Some(n) = self.matrix_dim() {
            if self.reference == ReferenceMode::Dense && n > DENSE_REFERENCE_CAP {
                return Err(HarnessError::Config(format!(
                    "dense reference is capped at n = {DENSE_REFERENCE_CAP}, matrix has n = {n}"
                )));
            }
            if self.method.uses_sketch() && self.sketch > n {
                return Err(HarnessError::Config(format!(
                    "sketch size {} exceeds dimension {n}",
                    self.sketch
                )));
            }
        }
        if let MatrixSource::LowRankNoise { n, s, .. } = &self.matrix {
            if *s < 1 || s > n {
                return Err(HarnessError::Config(format!(
                    "low-rank source needs 1 <= s <= n, got s = {s}, n = {n}"
                )));
            }
        }
        if let Some(repeat) = self.repeat {
            if repeat < 1 {
                return Err(HarnessError::Config("repeat must be >= 1".into()));
            }
            if self.sketch_cache.is_some() {
                return Err(HarnessError::Config(
                    "sketch-cache reuses one sketch and is incompatible with repeat".into(),
                ));
            }
        }
        if !(self.inner_tol > 0.0 && self.inner_tol < 1.0) {
            return Err(HarnessError::Config(format!(
                "inner-tol must lie in (0, 1), got {}",
                self.inner_tol
            )));
        }
        if self.inner_max < 1 {
            return Err(HarnessError::Config("inner-max must be >= 1".into()));
        }
        Ok(())
    }
}

/// JSON config file; keys mirror the CLI flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub matrix: Option<String>,
    pub method: Option<String>,
    pub k: Option<usize>,
    pub sketch: Option<usize>,
    pub shift: Option<String>,
    pub tol: Option<f64>,
    #[serde(rename = "max-iters")]
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub reference: Option<String>,
    pub repeat: Option<usize>,
    pub out: Option<String>,
    #[serde(rename = "deterministic-output")]
    pub deterministic_output: Option<bool>,
    #[serde(rename = "sketch-cache")]
    pub sketch_cache: Option<String>,
    #[serde(rename = "inner-tol")]
    pub inner_tol: Option<f64>,
    #[serde(rename = "inner-max")]
    pub inner_max: Option<usize>,
    #[serde(rename = "init-power-steps")]
    pub init_power_steps: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("bad config file {}: {e}", path.display())))
    }

    /// Resolve the file values and CLI overrides into a full config.
    #[allow(clippy::too_many_arguments)]
    pub fn resolve(
        &self,
        matrix: Option<MatrixSource>,
        method: Option<Method>,
        k: Option<usize>,
        sketch: Option<usize>,
        shift: Option<ShiftSpec>,
        tol: Option<f64>,
        max_iters: Option<usize>,
        seed: Option<u64>,
        reference: Option<ReferenceMode>,
        repeat: Option<usize>,
        out: Option<PathBuf>,
        deterministic_output: bool,
        sketch_cache: Option<PathBuf>,
        inner_tol: Option<f64>,
        inner_max: Option<usize>,
        init_power_steps: Option<usize>,
    ) -> Result<ExperimentConfig, HarnessError> {
        let matrix = match matrix {
            Some(m) => m,
            None => self
                .matrix
                .as_deref()
                .ok_or_else(|| HarnessError::Config("missing --matrix".into()))?
                .parse()?,
        };
        let method = match method {
            Some(m) => m,
            None => self
                .method
                .as_deref()
                .ok_or_else(|| HarnessError::Config("missing --method".into()))?
                .parse()?,
        };
        let shift = match shift {
            Some(s) => s,
            None => match self.shift.as_deref() {
                Some(s) => s.parse()?,
                None => ShiftSpec::Auto,
            },
        };
        let reference = match reference {
            Some(r) => r,
            None => match self.reference.as_deref() {
                Some(r) => r.parse()?,
                None => ReferenceMode::None,
            },
        };
        let out = match out {
            Some(o) => o,
            None => PathBuf::from(
                self.out
                    .as_deref()
                    .ok_or_else(|| HarnessError::Config("missing --out".into()))?,
            ),
        };
        let cfg = ExperimentConfig {
            matrix,
            method,
            k: k.or(self.k).unwrap_or(1),
            sketch: sketch.or(self.sketch).unwrap_or(0),
            shift,
            tol: tol.or(self.tol).unwrap_or(1e-8),
            max_iters: max_iters.or(self.max_iters).unwrap_or(1000),
            seed: seed.or(self.seed).unwrap_or(0),
            reference,
            repeat: repeat.or(self.repeat),
            out,
            deterministic_output: deterministic_output
                || self.deterministic_output.unwrap_or(false),
            sketch_cache: sketch_cache
                .or_else(|| self.sketch_cache.as_ref().map(PathBuf::from)),
            inner_tol: inner_tol.or(self.inner_tol).unwrap_or(1e-2),
            inner_max: inner_max.or(self.inner_max).unwrap_or(200),
            init_power_steps: init_power_steps.or(self.init_power_steps).unwrap_or(20),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_source_grammar() {
        assert_eq!(
            "mm:data/x.mtx".parse::<MatrixSource>().unwrap(),
            MatrixSource::MarketFile(PathBuf::from("data/x.mtx"))
        );
        assert_eq!(
            "gen:exp,n=300,kappa=1e3".parse::<MatrixSource>().unwrap(),
            MatrixSource::ExpDecay { n: 300, kappa: 1e3 }
        );
        assert_eq!(
            "gen:lrn,n=2000,s=100,s1=0.1,s2=0.05".parse::<MatrixSource>().unwrap(),
            MatrixSource::LowRankNoise { n: 2000, s: 100, sigma1: 0.1, sigma2: 0.05 }
        );
        assert!("gen:foo,n=3".parse::<MatrixSource>().is_err());
        assert!("plain.mtx".parse::<MatrixSource>().is_err());
        assert!("gen:exp,n=300".parse::<MatrixSource>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "mm:data/x.mtx",
            "gen:exp,n=300,kappa=1000",
            "gen:lrn,n=2000,s=100,s1=0.1,s2=0.05",
        ] {
            let parsed: MatrixSource = s.parse().unwrap();
            assert_eq!(parsed.to_string().parse::<MatrixSource>().unwrap(), parsed);
        }
    }
}
