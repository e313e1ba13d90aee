//! Sign families `h: [n] → {−1, +1}`.
//!
//! Three kinds are supported: fully independent signs, the polynomial k-wise
//! independent family over GF(2^w), and the stages H1 → H2 → H3 → H of the
//! adversarial pairwise family whose walks drift by Θ(√n lg n).

mod adversarial;
mod kwise;
mod moments;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::is_power_of_four;

pub use adversarial::{
    adversarial_params, f_values, g_entry, g_table, shift_blocks, AdversarialParams,
    AdversarialSampler, PairMode, Rational,
};
pub use kwise::{make_kwise, KWiseFamily};
pub use moments::{
    empirical_moments, exact_moments, h2_cross_mass_ratio, stage_moments, write_moments_csv,
    EmpiricalMoments, ExactMoments,
};

/// One sampled hash function viewed as a vector of signs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if let Some(pos) = entries.iter().position(|&e| e != 1 && e != -1) {
            return Err(Error::invalid(format!(
                "entry {} of a sign vector is {}",
                pos + 1,
                entries[pos]
            )));
        }
        Ok(SignVector(entries))
    }

    pub fn from_bools(plus: impl IntoIterator<Item = bool>) -> Self {
        SignVector(plus.into_iter().map(|b| if b { 1 } else { -1 }).collect())
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        SignVector(self.0.iter().map(|&e| -e).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&e| e as f64).collect()
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

impl AsRef<[i8]> for SignVector {
    fn as_ref(&self) -> &[i8] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    FullyIndependent,
    PolynomialKwise,
    AdversarialStage,
}

/// Stages of the adversarial construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    H1,
    H2,
    H3,
    H,
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H1" | "h1" => Ok(Stage::H1),
            "H2" | "h2" => Ok(Stage::H2),
            "H3" | "h3" => Ok(Stage::H3),
            "H" | "h" => Ok(Stage::H),
            other => Err(Error::invalid(format!("unknown stage {other:?}"))),
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::H1 => "H1",
            Stage::H2 => "H2",
            Stage::H3 => "H3",
            Stage::H => "H",
        };
        f.write_str(s)
    }
}

/// Which family to sample, over which domain.
///
/// Numeric fields serialise as decimal strings so a config fragment survives
/// round trips through tools that mangle 64-bit integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    #[serde(with = "decimal")]
    pub n: usize,
    #[serde(default, with = "decimal_opt", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    #[serde(default, with = "decimal")]
    pub seed: u64,
}

impl FamilySpec {
    pub fn fully_independent(n: usize, seed: u64) -> Self {
        FamilySpec {
            kind: FamilyKind::FullyIndependent,
            n,
            k: None,
            stage: None,
            seed,
        }
    }

    pub fn kwise(n: usize, k: usize, seed: u64) -> Self {
        FamilySpec {
            kind: FamilyKind::PolynomialKwise,
            n,
            k: Some(k),
            stage: None,
            seed,
        }
    }

    pub fn adversarial(n: usize, stage: Stage, seed: u64) -> Self {
        FamilySpec {
            kind: FamilyKind::AdversarialStage,
            n,
            k: None,
            stage: Some(stage),
            seed,
        }
    }

    /// Same family over a different domain size.
    pub fn with_n(&self, n: usize) -> Self {
        FamilySpec { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        match self.kind {
            FamilyKind::FullyIndependent => Ok(()),
            FamilyKind::PolynomialKwise => {
                let k = self
                    .k
                    .ok_or_else(|| Error::invalid("polynomial family needs k"))?;
                if k < 2 || k > self.n {
                    return Err(Error::invalid(format!(
                        "independence order k={k} must satisfy 2 <= k <= n={}",
                        self.n
                    )));
                }
                Ok(())
            }
            FamilyKind::AdversarialStage => {
                if self.stage.is_none() {
                    return Err(Error::invalid("adversarial family needs a stage"));
                }
                if !is_power_of_four(self.n) || self.n < 16 {
                    return Err(Error::invalid(format!(
                        "adversarial family needs n a power of 4 with n >= 16, got {}",
                        self.n
                    )));
                }
                Ok(())
            }
        }
    }

    /// Largest k such that any k coordinates are independent uniform signs.
    /// `None` means full independence; `Some(0)` means not even uniform marginals.
    pub fn independence(&self) -> Option<usize> {
        match self.kind {
            FamilyKind::FullyIndependent => None,
            FamilyKind::PolynomialKwise => self.k,
            FamilyKind::AdversarialStage => match self.stage {
                Some(Stage::H) => Some(2),
                _ => Some(0),
            },
        }
    }

    /// Whether every `k` coordinates are jointly uniform.
    pub fn is_k_wise(&self, k: usize) -> bool {
        self.independence().is_none_or(|d| d >= k)
    }

    pub fn label(&self) -> String {
        match self.kind {
            FamilyKind::FullyIndependent => "full".to_string(),
            FamilyKind::PolynomialKwise => format!("{}-wise", self.k.unwrap_or(0)),
            FamilyKind::AdversarialStage => self.stage.map(|s| s.to_string()).unwrap_or_default(),
        }
    }
}

/// An immutable sampler for one family. Cheap to share across threads.
#[derive(Debug, Clone)]
pub enum Sampler {
    Full { n: usize },
    KWise(KWiseFamily),
    Adversarial(AdversarialSampler),
}

impl Sampler {
    pub fn new(spec: &FamilySpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            FamilyKind::FullyIndependent => Sampler::Full { n: spec.n },
            FamilyKind::PolynomialKwise => {
                Sampler::KWise(KWiseFamily::new(spec.n, spec.k.expect("validated"))?)
            }
            FamilyKind::AdversarialStage => {
                let params = adversarial_params(spec.n)?;
                Sampler::Adversarial(AdversarialSampler::new(
                    params,
                    spec.stage.expect("validated"),
                ))
            }
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Sampler::Full { n } => *n,
            Sampler::KWise(f) => f.n(),
            Sampler::Adversarial(s) => s.params().n,
        }
    }

    /// Fill `out` (length n) with one draw.
    pub fn sample_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        assert_eq!(out.len(), self.n(), "output buffer must have length n");
        match self {
            Sampler::Full { .. } => {
                for chunk in out.chunks_mut(64) {
                    let bits = rng.next_u64();
                    for (i, e) in chunk.iter_mut().enumerate() {
                        *e = if (bits >> i) & 1 == 0 { 1 } else { -1 };
                    }
                }
            }
            Sampler::KWise(f) => f.sample_into(rng, out),
            Sampler::Adversarial(s) => s.sample_into(rng, out),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> SignVector {
        let mut out = vec![0i8; self.n()];
        self.sample_into(rng, &mut out);
        SignVector(out)
    }
}

/// Uniform random sign.
#[inline]
pub(crate) fn rademacher<R: RngCore + ?Sized>(rng: &mut R) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

mod decimal {
    use serde::{de, Deserialize, Deserializer, Serializer};
    use std::fmt::Display;
    use std::str::FromStr;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Int(u64),
    }

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr + TryFrom<u64>,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        match Raw::deserialize(d)? {
            Raw::Str(s) => s.trim().parse().map_err(de::Error::custom),
            Raw::Int(i) => T::try_from(i).map_err(|_| de::Error::custom("integer out of range")),
        }
    }
}

mod decimal_opt {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::decimal::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        super::decimal::deserialize(d).map(Some)
    }
}
