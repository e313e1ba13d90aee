//! Prefix-sum excursions of sampled sign vectors and the scaling experiments
//! built on them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::map_trials;
use crate::rng::{derive_seed, trial_rng};
use crate::sign_families::{AdversarialParams, FamilySpec, Rational, Sampler};
use crate::stats::{is_power_of_four, linear_fit, mean_stderr, LinearFit};

/// `S_0 = 0, S_i = S_{i−1} + v_i`.
pub fn prefix_sums(v: &[i8]) -> Vec<i64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut s = 0i64;
    out.push(0);
    for &x in v {
        s += x as i64;
        out.push(s);
    }
    out
}

/// `max_{1 ≤ i ≤ n} |S_i|`.
pub fn sup_abs_prefix(v: &[i8]) -> u64 {
    let mut s = 0i64;
    let mut best = 0u64;
    for &x in v {
        s += x as i64;
        best = best.max(s.unsigned_abs());
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub moment_order: u32,
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub n: usize,
}

pub const MIN_TRIALS: u64 = 100;

/// Mean and standard error of `stat(h)` over `trials` draws from `sampler`.
pub fn estimate_statistic<F>(sampler: &Sampler, trials: u64, seed: u64, stat: F) -> (f64, f64)
where
    F: Fn(&[i8]) -> f64 + Sync + Send,
{
    let n = sampler.n();
    let values = map_trials(trials, |t| {
        let mut buf = vec![0i8; n];
        sampler.sample_into(&mut trial_rng(seed, t), &mut buf);
        stat(&buf)
    });
    mean_stderr(&values)
}

/// Estimate `E[(sup_t |S_t|)^order]`.
pub fn estimate_sup_moment(
    spec: &FamilySpec,
    moment_order: u32,
    trials: u64,
    seed: u64,
) -> Result<SupEstimate> {
    let sampler = Sampler::new(spec)?;
    estimate_sup_moment_with(&sampler, moment_order, trials, seed)
}

pub fn estimate_sup_moment_with(
    sampler: &Sampler,
    moment_order: u32,
    trials: u64,
    seed: u64,
) -> Result<SupEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    if moment_order == 0 {
        return Err(Error::invalid("moment order must be positive"));
    }
    let (mean, stderr) = estimate_statistic(sampler, trials, seed, |h| {
        (sup_abs_prefix(h) as f64).powi(moment_order as i32)
    });
    Ok(SupEstimate {
        moment_order,
        mean,
        stderr,
        trials,
        n: sampler.n(),
    })
}

/// Exact `E[S_{c√n}]` under the first adversarial stage.
pub fn drift_check_h1(params: &AdversarialParams, c: usize) -> Result<Rational> {
    params.drift_h1(c)
}

/// One [`SupEstimate`] per domain size for a fixed family template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub family: String,
    pub seed: u64,
    pub rows: Vec<SupEstimate>,
}

impl ScalingTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "moment_order", "mean", "stderr", "trials", "seed"])?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                r.moment_order.to_string(),
                r.mean.to_string(),
                r.stderr.to_string(),
                r.trials.to_string(),
                self.seed.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `mean / n^{order/2}` per row.
    pub fn normalized(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.mean / (r.n as f64).powf(r.moment_order as f64 / 2.0))
            .collect()
    }
}

/// Run [`estimate_sup_moment`] for each n; row n uses seed `derive_seed(seed, n)`.
pub fn scaling_table(
    template: &FamilySpec,
    ns: &[usize],
    moment_order: u32,
    trials: u64,
    seed: u64,
) -> Result<ScalingTable> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("domain sizes must be strictly increasing"));
    }
    if let Some(bad) = ns.iter().find(|&&n| !is_power_of_four(n)) {
        return Err(Error::invalid(format!(
            "domain size {bad} is not a power of 4"
        )));
    }
    let rows = ns
        .iter()
        .map(|&n| {
            estimate_sup_moment(
                &template.with_n(n),
                moment_order,
                trials,
                derive_seed(seed, n as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingTable {
        family: template.label(),
        seed,
        rows,
    })
}

/// Least-squares fit of `mean / n^{order/2}` against `lg n`.
pub fn fit_log_growth(table: &ScalingTable) -> Result<LinearFit> {
    if table.rows.len() < 3 {
        return Err(Error::invalid("a growth fit needs at least three rows"));
    }
    let xs: Vec<f64> = table.rows.iter().map(|r| (r.n as f64).log2()).collect();
    linear_fit(&xs, &table.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sign_families::Stage;
    use proptest::prelude::*;

    #[test]
    fn prefix_examples() {
        assert_eq!(prefix_sums(&[1, 1, -1, -1]), vec![0, 1, 2, 1, 0]);
        assert_eq!(prefix_sums(&[1; 8]), (0..=8).collect::<Vec<i64>>());
        assert_eq!(sup_abs_prefix(&[1, -1, 1, -1]), 1);
        assert_eq!(sup_abs_prefix(&[-1; 16]), 16);
        assert_eq!(sup_abs_prefix(&[1, 1, 1, -1, -1, -1, -1, -1]), 3);
    }

    fn row(n: usize, mean: f64) -> SupEstimate {
        SupEstimate {
            moment_order: 1,
            mean,
            stderr: 0.0,
            trials: 100,
            n,
        }
    }

    #[test]
    fn synthetic_fits() {
        let ns = [16usize, 64, 256, 1024];
        let t = ScalingTable {
            family: "synthetic".into(),
            seed: 0,
            rows: ns
                .iter()
                .map(|&n| row(n, (n as f64).sqrt() * (n as f64).log2()))
                .collect(),
        };
        let fit = fit_log_growth(&t).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
        let flat = ScalingTable {
            rows: ns.iter().map(|&n| row(n, (n as f64).sqrt())).collect(),
            ..t.clone()
        };
        assert!(fit_log_growth(&flat).unwrap().slope.abs() < 1e-12);
        let short = ScalingTable {
            rows: t.rows[..2].to_vec(),
            ..t
        };
        assert!(fit_log_growth(&short).is_err());
    }

    #[test]
    fn single_step_second_moment_is_one() {
        let e = estimate_sup_moment(&FamilySpec::fully_independent(1, 0), 2, 100, 4).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn h1_drift_matches_harmonic_sums() {
        use crate::sign_families::adversarial_params;
        use num_rational::BigRational;
        let p16 = adversarial_params(16).unwrap();
        assert_eq!(
            drift_check_h1(&p16, 2).unwrap(),
            BigRational::from_integer(6.into())
        );
        assert_eq!(
            drift_check_h1(&p16, 4).unwrap(),
            BigRational::from_integer(0.into())
        );
        assert!(drift_check_h1(&p16, 5).is_err());
        let p64 = adversarial_params(64).unwrap();
        let harmonic: BigRational = (1..=4i64)
            .map(|j| BigRational::new(1.into(), j.into()))
            .fold(BigRational::from_integer(0.into()), |a, b| a + b);
        assert_eq!(
            drift_check_h1(&p64, 4).unwrap(),
            harmonic * BigRational::from_integer(8.into())
        );
    }

    #[test]
    fn too_few_trials_rejected() {
        assert!(estimate_sup_moment(&FamilySpec::fully_independent(4, 0), 1, 99, 0).is_err());
    }

    #[test]
    fn simple_walk_is_order_root_n() {
        let n = 1024usize;
        let e = estimate_sup_moment(&FamilySpec::fully_independent(n, 0), 1, 4000, 11).unwrap();
        let r = e.mean / (n as f64).sqrt();
        assert!((0.7..=1.5).contains(&r), "ratio {r}");
    }

    #[test]
    fn table_rejects_bad_domains() {
        let spec = FamilySpec::fully_independent(16, 0);
        assert!(scaling_table(&spec, &[64, 16], 1, 100, 0).is_err());
        assert!(scaling_table(&spec, &[16, 32], 1, 100, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let spec = FamilySpec::adversarial(16, Stage::H, 0);
        let t = scaling_table(&spec, &[16, 64], 1, 100, 5).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,moment_order,mean,stderr,trials,seed"));
        assert!(lines.next().unwrap().starts_with("16,1,"));
        assert!(lines.next().unwrap().ends_with(",100,5"));
    }

    proptest! {
        #[test]
        fn sup_bounds_and_negation(bits in proptest::collection::vec(any::<bool>(), 1..200)) {
            let v: Vec<i8> = bits.iter().map(|&b| if b { 1 } else { -1 }).collect();
            let neg: Vec<i8> = v.iter().map(|&x| -x).collect();
            let sup = sup_abs_prefix(&v);
            let s = prefix_sums(&v);
            prop_assert!(sup >= 1);
            prop_assert!(sup >= s.last().unwrap().unsigned_abs());
            prop_assert_eq!(sup, sup_abs_prefix(&neg));
            prop_assert_eq!(sup, s[1..].iter().map(|x| x.unsigned_abs()).max().unwrap());
        }
    }
}
