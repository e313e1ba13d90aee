use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{sup_inner_signs, InsertionStream};
use crate::error::{Error, Result};
use crate::gf2::Gf2Field;
use crate::sign_families::{FamilySpec, KWiseFamily, Rational, Sampler};
use crate::walks::{estimate_statistic, SupEstimate, MIN_TRIALS};

/// `E⟨v, X⟩^k ≤ B_k·||v||₂^k` for ±1 steps that are k-wise independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBound {
    pub k: u32,
    pub b_k: f64,
}

impl MomentBound {
    pub fn new(k: u32) -> Result<Self> {
        let b_k = match k {
            2 => 1.0,
            4 => 3.0,
            _ => return Err(Error::invalid(format!("no moment constant for k = {k}"))),
        };
        Ok(MomentBound { k, b_k })
    }

    pub fn bound(&self, norm_sq: f64) -> f64 {
        self.b_k * norm_sq.powi(self.k as i32 / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub k: u32,
    pub moment: f64,
    /// Zero for exhaustive checks.
    pub stderr: f64,
    pub exact: Option<Rational>,
    pub bound: f64,
    pub holds: bool,
}

/// Size of the field used by the exhaustive check.
const EXACT_FIELD_WIDTH: u32 = 4;

/// `E⟨v, X⟩^k` over every polynomial of degree below k on GF(16), with v
/// padded to 16 coordinates.
pub fn mz_moment_exact(v: &[i64], k: u32) -> Result<MomentCheck> {
    let bound = MomentBound::new(k)?;
    let field = Gf2Field::new(EXACT_FIELD_WIDTH)?;
    let q = field.order();
    let n = q as usize;
    if v.is_empty() || v.len() > n {
        return Err(Error::invalid(format!(
            "exhaustive moments need 1 to {n} coordinates, got {}",
            v.len()
        )));
    }
    let mut padded = v.to_vec();
    padded.resize(n, 0);
    let family = KWiseFamily::with_field(n, k as usize, field)?;
    let total = q.pow(k);
    let mut coeffs = vec![0u64; k as usize];
    let mut signs = vec![0i8; n];
    let mut sum = BigInt::zero();
    for idx in 0..total {
        let mut r = idx;
        for c in coeffs.iter_mut() {
            *c = r % q;
            r /= q;
        }
        family.evaluate_signs(&coeffs, &mut signs);
        let dot: i128 = signs
            .iter()
            .zip(&padded)
            .map(|(&s, &x)| s as i128 * x as i128)
            .sum();
        sum += BigInt::from(dot).pow(k);
    }
    let exact = Rational::new(sum, BigInt::from(total));
    let norm_sq: BigInt = padded.iter().map(|&x| BigInt::from(x) * x).sum();
    let b_k = BigInt::from(bound.b_k as i64);
    let exact_bound = Rational::from_integer(b_k * norm_sq.pow(k / 2));
    Ok(MomentCheck {
        k,
        moment: exact.to_f64().unwrap_or(f64::NAN),
        stderr: 0.0,
        holds: exact <= exact_bound,
        bound: exact_bound.to_f64().unwrap_or(f64::INFINITY),
        exact: Some(exact),
    })
}

/// Monte-Carlo `E⟨v, X⟩^k` for a family that is at least k-wise independent.
pub fn mz_moment_mc(
    spec: &FamilySpec,
    v: &[f64],
    k: u32,
    trials: u64,
    seed: u64,
) -> Result<MomentCheck> {
    let bound = MomentBound::new(k)?;
    if !spec.is_k_wise(k as usize) {
        return Err(Error::invalid(format!(
            "{} is not {k}-wise independent",
            spec.label()
        )));
    }
    let sampler = Sampler::new(spec)?;
    if v.len() != sampler.n() {
        return Err(Error::LengthMismatch {
            expected: sampler.n(),
            actual: v.len(),
        });
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let (moment, stderr) = estimate_statistic(&sampler, trials, seed, |h| {
        let dot: f64 = h.iter().zip(v).map(|(&s, &x)| s as f64 * x).sum();
        dot.powi(k as i32)
    });
    let b = bound.bound(v.iter().map(|x| x * x).sum());
    Ok(MomentCheck {
        k,
        moment,
        stderr,
        exact: None,
        bound: b,
        holds: moment <= b + 4.0 * stderr,
    })
}

/// Empirical `E[sup_t |⟨X, z^(t)⟩|^k]` for even k.
pub fn mc_sup_moment(
    stream: &InsertionStream,
    spec: &FamilySpec,
    k: u32,
    trials: u64,
    seed: u64,
) -> Result<SupEstimate> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "moment order must be even, got {k}"
        )));
    }
    if !spec.is_k_wise(k as usize) {
        return Err(Error::invalid(format!(
            "{} is not {k}-wise independent",
            spec.label()
        )));
    }
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let sampler = Sampler::new(spec)?;
    stream.check_dim(sampler.n())?;
    let (mean, stderr) = estimate_statistic(&sampler, trials, seed, |h| {
        let sup = sup_inner_signs(stream, h).expect("dimension checked");
        (sup as f64).powi(k as i32)
    });
    Ok(SupEstimate {
        moment_order: k,
        mean,
        stderr,
        trials,
        n: stream.n(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sign_families::Stage;
    use crate::streams::{NetHierarchy, StreamKind};
    use crate::walks::estimate_sup_moment;

    #[test]
    fn constants() {
        assert_eq!(MomentBound::new(2).unwrap().b_k, 1.0);
        assert_eq!(MomentBound::new(4).unwrap().b_k, 3.0);
        assert!(MomentBound::new(3).is_err());
        assert!(MomentBound::new(6).is_err());
    }

    #[test]
    fn exact_second_moment_is_the_squared_norm() {
        let v = [3, -1, 4, 1, -5, 9, 2, -6];
        let c = mz_moment_exact(&v, 2).unwrap();
        let norm_sq: i64 = v.iter().map(|x| x * x).sum();
        assert_eq!(c.exact.unwrap(), Rational::from_integer(norm_sq.into()));
        assert!(c.holds);
    }

    #[test]
    fn unit_vector_moments() {
        for k in [2, 4] {
            let c = mz_moment_exact(&[1], k).unwrap();
            assert_eq!(c.exact.unwrap(), Rational::from_integer(1.into()));
            assert!(c.holds);
        }
        assert!(mz_moment_exact(&[], 4).is_err());
        assert!(mz_moment_exact(&[1; 17], 4).is_err());
    }

    #[test]
    fn monte_carlo_moments() {
        let v: Vec<f64> = (1..=64).map(|i| (i % 7) as f64 - 3.0).collect();
        let spec = FamilySpec::kwise(64, 4, 0);
        let c = mz_moment_mc(&spec, &v, 4, 20_000, 1).unwrap();
        assert!(c.holds, "{c:?}");
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        let rademacher = 3.0 * norm_sq * norm_sq - 2.0 * v.iter().map(|x| x.powi(4)).sum::<f64>();
        assert!((c.moment - rademacher).abs() <= 5.0 * c.stderr);
        let h = FamilySpec::adversarial(64, Stage::H, 0);
        assert!(mz_moment_mc(&h, &v, 4, 100, 0).is_err());
        let c2 = mz_moment_mc(&h, &v, 2, 20_000, 2).unwrap();
        assert!((c2.moment - norm_sq).abs() <= 5.0 * c2.stderr);
    }

    #[test]
    fn independence_requirements() {
        let s = StreamKind::Identity.generate(64, 64, 0).unwrap();
        assert!(mc_sup_moment(&s, &FamilySpec::adversarial(64, Stage::H, 0), 2, 100, 0).is_ok());
        assert!(mc_sup_moment(&s, &FamilySpec::adversarial(64, Stage::H, 0), 4, 100, 0).is_err());
        assert!(mc_sup_moment(&s, &FamilySpec::adversarial(64, Stage::H2, 0), 2, 100, 0).is_err());
        assert!(mc_sup_moment(&s, &FamilySpec::kwise(64, 2, 0), 4, 100, 0).is_err());
        assert!(mc_sup_moment(&s, &FamilySpec::kwise(64, 4, 0), 4, 100, 0).is_ok());
        assert!(mc_sup_moment(&s, &FamilySpec::fully_independent(64, 0), 4, 100, 0).is_ok());
        assert!(mc_sup_moment(&s, &FamilySpec::kwise(64, 4, 0), 3, 100, 0).is_err());
        assert!(mc_sup_moment(&s, &FamilySpec::kwise(32, 4, 0), 4, 100, 0).is_err());
    }

    #[test]
    fn identity_stream_matches_the_walk_estimate() {
        let spec = FamilySpec::adversarial(256, Stage::H, 0);
        let s = StreamKind::Identity.generate(256, 256, 0).unwrap();
        let a = mc_sup_moment(&s, &spec, 2, 500, 5).unwrap();
        let b = estimate_sup_moment(&spec, 2, 500, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_form_expectation_contract() {
        let s = StreamKind::UniformRandom.generate(256, 256, 3).unwrap();
        let nets = NetHierarchy::build(&s);
        let spec = FamilySpec::adversarial(256, Stage::H, 0);
        let sampler = Sampler::new(&spec).unwrap();
        let (mean, stderr) = estimate_statistic(&sampler, 2000, 4, |h| {
            let x: Vec<f64> = h.iter().map(|&v| v as f64).collect();
            nets.chain_form_quadratic(&s, &x).unwrap()
        });
        let limit = 2.0 * (nets.top() as f64) * nets.norm_sq() as f64;
        assert!(mean <= limit + 4.0 * stderr, "{mean} vs {limit}");
    }
}
