//! Experiment configuration files.
//!
//! One experiment per TOML file. Top-level keys pick the experiment and its
//! parameters, an optional `[family]` table names the sign family and an
//! optional `[assert]` table holds the pass/fail thresholds.
//!
//! ```toml
//! kind = "walk-scaling"
//! ns = [16, 64, 256, 1024]
//! order = 1
//! trials = 10000
//! seed = 7
//!
//! [family]
//! kind = "adversarial-stage"
//! stage = "H"
//!
//! [assert]
//! min_r2 = 0.9
//! ```

use std::path::{Path, PathBuf};

use kwise_core::streams::StreamKind;
use kwise_core::{FamilyKind, FamilySpec, Stage};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FamilyVerify,
    WalkScaling,
    MatrixCheck,
    MaximalMc,
    StreamTrack,
    NetAudit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FamilyVerify => "family-verify",
            ExperimentKind::WalkScaling => "walk-scaling",
            ExperimentKind::MatrixCheck => "matrix-check",
            ExperimentKind::MaximalMc => "maximal-mc",
            ExperimentKind::StreamTrack => "stream-track",
            ExperimentKind::NetAudit => "net-audit",
        }
    }
}

/// A family without its domain size; experiments fill in n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub stage: Option<Stage>,
    #[serde(default)]
    pub seed: u64,
}

impl FamilyConfig {
    pub fn kwise(k: usize) -> Self {
        FamilyConfig {
            kind: FamilyKind::PolynomialKwise,
            k: Some(k),
            stage: None,
            seed: 0,
        }
    }

    pub fn adversarial(stage: Stage) -> Self {
        FamilyConfig {
            kind: FamilyKind::AdversarialStage,
            k: None,
            stage: Some(stage),
            seed: 0,
        }
    }

    pub fn spec(&self, n: usize) -> FamilySpec {
        FamilySpec {
            kind: self.kind,
            n,
            k: self.k,
            stage: self.stage,
            seed: self.seed,
        }
    }
}

/// Thresholds. A missing key means the corresponding assertion is not made.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    /// Positive growth slope with at least this R².
    pub min_r2: Option<f64>,
    /// |slope| at most this many standard errors.
    pub flat_slope_sigmas: Option<f64>,
    /// max/min of the normalized statistic.
    pub max_spread: Option<f64>,
    /// max/min of the normalized statistic after dividing by lg^order.
    pub max_spread_lg: Option<f64>,
    /// Standard errors of slack for Monte-Carlo comparisons.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub ms: Vec<usize>,
    #[serde(default)]
    pub streams: Vec<StreamKind>,
    #[serde(default)]
    pub order: Option<u32>,
    /// Thresholds as multiples of `sqrt(Σσ²)`.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub decades: Option<f64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub assert: Assertions,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Err(CliError::Usage("config file is empty".into()));
        }
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = o.trials {
            self.trials = Some(t);
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn trials_or(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }

    pub fn family_or(&self, default: FamilyConfig) -> FamilyConfig {
        self.family.clone().unwrap_or(default)
    }

    pub fn streams_or_all(&self) -> Vec<StreamKind> {
        if self.streams.is_empty() {
            StreamKind::ALL.to_vec()
        } else {
            self.streams.clone()
        }
    }

    pub fn require_ns(&self) -> Result<&[usize], CliError> {
        if self.ns.is_empty() {
            return Err(CliError::Usage(format!(
                "{} needs a nonempty `ns` list",
                self.kind.name()
            )));
        }
        Ok(&self.ns)
    }

    pub fn require_ms(&self) -> Result<&[usize], CliError> {
        if self.ms.is_empty() {
            return Err(CliError::Usage(format!(
                "{} needs a nonempty `ms` list",
                self.kind.name()
            )));
        }
        Ok(&self.ms)
    }
}
