use std::io::Write;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::map_trials;
use crate::rng::{derive_seed, trial_rng, TrialRng};
use crate::sign_families::{FamilySpec, Sampler};

const VARIANCE_STREAM: u64 = 0x5641_5249;

/// `n` variances `10^{decades·U}` with U uniform on [0, 1).
pub fn log_uniform_variances(n: usize, decades: f64, seed: u64) -> Vec<f64> {
    let mut rng = TrialRng::seed_from_u64(derive_seed(seed, VARIANCE_STREAM));
    (0..n)
        .map(|_| 10f64.powf(decades * rng.random::<f64>()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub lambda: f64,
    pub empirical_p: f64,
    pub stderr: f64,
    /// `Σσ²/λ²`.
    pub bound: f64,
}

impl TailRow {
    /// Whether the empirical frequency sits below the bound plus `z` standard errors.
    pub fn within_bound(&self, z: f64) -> bool {
        self.empirical_p <= self.bound + z * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTable {
    pub family: String,
    pub n: usize,
    pub sum_sq: f64,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<TailRow>,
    /// `max_λ p̂·λ²/Σσ²`: the smallest constant C with `p̂ ≤ C·Σσ²/λ²` on every row.
    pub fitted_constant: f64,
}

impl TailTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda", "empirical_p", "stderr", "bound"])?;
        for r in &self.rows {
            out.write_record([
                r.lambda.to_string(),
                r.empirical_p.to_string(),
                r.stderr.to_string(),
                r.bound.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Empirical `P(max_i |σ_1h_1 + … + σ_ih_i| ≥ λ)` for each λ.
pub fn mc_tail(
    spec: &FamilySpec,
    sigmas: &[f64],
    lambdas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<TailTable> {
    if !spec.is_k_wise(4) {
        return Err(Error::invalid(format!(
            "the tail experiment needs a 4-wise independent family, got {}",
            spec.label()
        )));
    }
    let sampler = Sampler::new(spec)?;
    let n = sampler.n();
    if sigmas.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: sigmas.len(),
        });
    }
    if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid("scalings must be finite and nonnegative"));
    }
    if lambdas.iter().any(|l| l.is_nan() || *l <= 0.0) {
        return Err(Error::invalid("thresholds must be positive"));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let sum_sq: f64 = sigmas.iter().map(|s| s * s).sum();
    let sups = map_trials(trials, |t| {
        let mut h = vec![0i8; n];
        sampler.sample_into(&mut trial_rng(seed, t), &mut h);
        let mut s = 0.0f64;
        let mut sup = 0.0f64;
        for (&x, &sigma) in h.iter().zip(sigmas) {
            s += sigma * x as f64;
            sup = sup.max(s.abs());
        }
        sup
    });
    let tf = trials as f64;
    let rows: Vec<TailRow> = lambdas
        .iter()
        .map(|&lambda| {
            let hits = sups.iter().filter(|&&s| s >= lambda).count() as f64;
            let p = hits / tf;
            TailRow {
                lambda,
                empirical_p: p,
                stderr: (p * (1.0 - p) / tf).sqrt(),
                bound: sum_sq / (lambda * lambda),
            }
        })
        .collect();
    let fitted_constant = rows
        .iter()
        .map(|r| r.empirical_p * r.lambda * r.lambda / sum_sq)
        .fold(0.0, f64::max);
    Ok(TailTable {
        family: spec.label(),
        n,
        sum_sq,
        trials,
        seed,
        rows,
        fitted_constant,
    })
}
