//! The adversarial pairwise family and its intermediate stages.
//!
//! `[n]` is cut into √n blocks of √n consecutive indices (blocks are 1-based
//! in this API). Writing ℓ = √n/2:
//!
//! * **H1** draws every sign independently with mean `f_c` for block c, where
//!   `f_c = 1/(ℓ+1−c)` for c ≤ ℓ and `f_c = −1/(c−ℓ)` otherwise.
//! * **H2** draws from H1 and rotates the vector by a uniform number of whole
//!   blocks. Its cross-block correlations `g_{c1c2}` depend only on `c2 − c1`
//!   modulo √n.
//! * **H3** mixes H2 (weight `1/g`) with one "pair mode" per block pair
//!   `c1 < c2` (weight `|g_{c1c2}|/g`) that pins the two blocks to constant
//!   signs chosen to cancel the H2 cross-block correlation.
//! * **H** mixes a randomly negated H3 draw (weight p) with independent
//!   balanced blocks (weight 1−p), which cancels the remaining within-block
//!   correlation. The result is exactly pairwise independent.
//!
//! All constants are exact rationals; sampling converts them to `f64` once.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore};

use super::{rademacher, SignVector, Stage};
use crate::error::{Error, Result};
use crate::stats::is_power_of_four;

pub type Rational = BigRational;

pub(crate) fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub(crate) fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn check_root(root: usize) -> Result<()> {
    if root < 2 || !root.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "block count must be even and at least 2, got {root}"
        )));
    }
    Ok(())
}

/// Block means `f_1 .. f_root` of H1.
pub fn f_values(root: usize) -> Result<Vec<Rational>> {
    check_root(root)?;
    let ell = (root / 2) as i64;
    Ok((1..=root as i64)
        .map(|c| {
            if c <= ell {
                frac(1, ell + 1 - c)
            } else {
                frac(-1, c - ell)
            }
        })
        .collect())
}

/// `g_{c1c2} = (1/√n) Σ_d f_{c1+d} f_{c2+d}` with f periodic; blocks are 1-based.
pub fn g_entry(f: &[Rational], c1: usize, c2: usize) -> Rational {
    let root = f.len();
    let sum = (0..root).fold(Rational::zero(), |acc, d| {
        acc + &f[(c1 - 1 + d) % root] * &f[(c2 - 1 + d) % root]
    });
    sum / int(root as i64)
}

/// The full √n × √n table of H2 cross-block correlations (0-based storage).
///
/// The first row is summed directly; the rest follows from
/// `g_{c1c2} = g_{(c1+1)(c2+1)}`.
pub fn g_table(root: usize) -> Result<Vec<Vec<Rational>>> {
    let f = f_values(root)?;
    let first: Vec<Rational> = (1..=root).map(|c2| g_entry(&f, 1, c2)).collect();
    Ok((0..root)
        .map(|c1| {
            (0..root)
                .map(|c2| first[(c2 + root - c1) % root].clone())
                .collect()
        })
        .collect())
}

/// One H3 pair mode: block `first` is all +1 and block `second` is all
/// `second_sign`; blocks are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMode {
    pub first: usize,
    pub second: usize,
    pub second_sign: i8,
    pub weight: Rational,
}

/// Closed-form constants of the adversarial construction for one n.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialParams {
    pub n: usize,
    pub root: usize,
    pub ell: usize,
    pub f: Vec<Rational>,
    /// 0-based storage: `g[c1 - 1][c2 - 1]`.
    pub g: Vec<Vec<Rational>>,
    pub g_scale: Rational,
    pub c6: Rational,
    pub p: Rational,
}

pub fn adversarial_params(n: usize) -> Result<AdversarialParams> {
    if !is_power_of_four(n) || n < 16 {
        return Err(Error::invalid(format!(
            "adversarial family needs n a power of 4 with n >= 16, got {n}"
        )));
    }
    let root = 1usize << (n.trailing_zeros() / 2);
    let f = f_values(root)?;
    let g = g_table(root)?;
    let mut g_scale = Rational::one();
    for (c1, row) in g.iter().enumerate() {
        for x in &row[c1 + 1..] {
            g_scale += x.abs();
        }
    }
    let row_sum = g[0].iter().fold(Rational::zero(), |acc, x| acc + x.abs());
    let root_q = int(root as i64);
    let c6 = &row_sum / &g_scale * &root_q;
    let p = Rational::one() / (Rational::one() + &c6 * int(root as i64 - 1) / &root_q);
    Ok(AdversarialParams {
        n,
        root,
        ell: root / 2,
        f,
        g,
        g_scale,
        c6,
        p,
    })
}

impl AdversarialParams {
    /// 1-based block of 1-based index `i`.
    pub fn block_of(&self, i: usize) -> usize {
        (i - 1) / self.root + 1
    }

    /// `g_{c1c2}` for 1-based blocks.
    pub fn g_at(&self, c1: usize, c2: usize) -> &Rational {
        &self.g[c1 - 1][c2 - 1]
    }

    /// Weight of the H2 branch inside H3.
    pub fn h2_weight(&self) -> Rational {
        Rational::one() / &self.g_scale
    }

    /// H3 pair modes in lexicographic order of `(c1, c2)`.
    pub fn pair_modes(&self) -> Vec<PairMode> {
        let mut modes = Vec::with_capacity(self.root * (self.root - 1) / 2);
        for c1 in 1..=self.root {
            for c2 in c1 + 1..=self.root {
                let g = self.g_at(c1, c2);
                modes.push(PairMode {
                    first: c1,
                    second: c2,
                    second_sign: if g.is_negative() { 1 } else { -1 },
                    weight: g.abs() / &self.g_scale,
                });
            }
        }
        modes
    }

    /// `p·C6/√n − (1−p)/(√n−1)`, zero when H's within-block correlation cancels.
    pub fn zero_covariance_residual(&self) -> Rational {
        let one_minus_p = Rational::one() - &self.p;
        &self.p * &self.c6 / int(self.root as i64) - one_minus_p / int(self.root as i64 - 1)
    }

    /// Exact `E[S_{c√n}]` under H1: `√n · Σ_{c' ≤ c} f_{c'}`.
    pub fn drift_h1(&self, c: usize) -> Result<Rational> {
        if c == 0 || c > self.root {
            return Err(Error::OutOfRange {
                index: c,
                lo: 1,
                hi: self.root,
            });
        }
        let partial = self.f[..c].iter().fold(Rational::zero(), |acc, x| acc + x);
        Ok(partial * int(self.root as i64))
    }

    /// Copy with the sign of `g_{c1c2}` (and its mirror) flipped. Only useful
    /// for mutation testing of the moment checks.
    pub fn with_g_sign_flipped(&self, c1: usize, c2: usize) -> Self {
        let mut out = self.clone();
        out.g[c1 - 1][c2 - 1] = -out.g[c1 - 1][c2 - 1].clone();
        if c1 != c2 {
            out.g[c2 - 1][c1 - 1] = -out.g[c2 - 1][c1 - 1].clone();
        }
        out
    }
}

/// Sampler for one stage, with the exact constants pre-converted to `f64`.
#[derive(Debug, Clone)]
pub struct AdversarialSampler {
    params: Arc<AdversarialParams>,
    stage: Stage,
    plus_prob: Vec<f64>,
    /// Cumulative H3 branch probabilities: H2 first, then pair modes in order.
    h3_cdf: Vec<f64>,
    pairs: Vec<(usize, usize, i8)>,
    p_h3: f64,
}

impl AdversarialSampler {
    pub fn new(params: AdversarialParams, stage: Stage) -> Self {
        let half = frac(1, 2);
        let plus_prob = params
            .f
            .iter()
            .map(|f| (&half + f * &half).to_f64().expect("finite"))
            .collect();
        let modes = params.pair_modes();
        let mut cumulative = params.h2_weight();
        let mut h3_cdf = vec![cumulative.to_f64().expect("finite")];
        let mut pairs = Vec::with_capacity(modes.len());
        for m in &modes {
            cumulative += &m.weight;
            h3_cdf.push(cumulative.to_f64().expect("finite"));
            pairs.push((m.first, m.second, m.second_sign));
        }
        let p_h3 = params.p.to_f64().expect("finite");
        AdversarialSampler {
            params: Arc::new(params),
            stage,
            plus_prob,
            h3_cdf,
            pairs,
            p_h3,
        }
    }

    pub fn params(&self) -> &AdversarialParams {
        &self.params
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn sample_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        match self.stage {
            Stage::H1 => self.sample_h1_into(rng, out),
            Stage::H2 => self.sample_h2_into(rng, out),
            Stage::H3 => self.sample_h3_into(rng, out),
            Stage::H => self.sample_h_into(rng, out),
        }
    }

    pub fn sample_h1<R: RngCore + ?Sized>(&self, rng: &mut R) -> SignVector {
        self.draw(rng, Self::sample_h1_into)
    }

    pub fn sample_h2<R: RngCore + ?Sized>(&self, rng: &mut R) -> SignVector {
        self.draw(rng, Self::sample_h2_into)
    }

    pub fn sample_h3<R: RngCore + ?Sized>(&self, rng: &mut R) -> SignVector {
        self.draw(rng, Self::sample_h3_into)
    }

    pub fn sample_h<R: RngCore + ?Sized>(&self, rng: &mut R) -> SignVector {
        self.draw(rng, Self::sample_h_into)
    }

    fn draw<R: RngCore + ?Sized>(
        &self,
        rng: &mut R,
        f: impl Fn(&Self, &mut R, &mut [i8]),
    ) -> SignVector {
        let mut out = vec![0i8; self.params.n];
        f(self, rng, &mut out);
        SignVector(out)
    }

    pub fn sample_h1_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        let root = self.params.root;
        for (block, q) in out.chunks_mut(root).zip(&self.plus_prob) {
            for e in block {
                *e = if rng.random::<f64>() < *q { 1 } else { -1 };
            }
        }
    }

    pub fn sample_h2_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        self.sample_h1_into(rng, out);
        let d = rng.random_range(0..self.params.root);
        shift_blocks(out, d, self.params.root);
    }

    pub fn sample_h3_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        let u = rng.random::<f64>();
        let branch = self.h3_cdf.partition_point(|&c| c <= u);
        if branch == 0 {
            self.sample_h2_into(rng, out);
        } else {
            let (c1, c2, sign) = self.pairs[(branch - 1).min(self.pairs.len() - 1)];
            self.pair_mode_into(rng, c1, c2, sign, out);
        }
    }

    /// Block `c1` all +1, block `c2` all `second_sign`, everything else uniform.
    pub fn pair_mode_into<R: RngCore + ?Sized>(
        &self,
        rng: &mut R,
        c1: usize,
        c2: usize,
        second_sign: i8,
        out: &mut [i8],
    ) {
        let root = self.params.root;
        for (b, block) in out.chunks_mut(root).enumerate() {
            let c = b + 1;
            if c == c1 {
                block.fill(1);
            } else if c == c2 {
                block.fill(second_sign);
            } else {
                for e in block {
                    *e = rademacher(rng);
                }
            }
        }
    }

    pub fn sample_h_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        if rng.random::<f64>() < self.p_h3 {
            self.sample_h3_into(rng, out);
            if rng.random::<bool>() {
                out.iter_mut().for_each(|e| *e = -*e);
            }
        } else {
            self.balanced_blocks_into(rng, out);
        }
    }

    /// Each block independently gets a uniform ℓ-subset of +1 entries.
    pub fn balanced_blocks_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        let (root, ell) = (self.params.root, self.params.ell);
        for block in out.chunks_mut(root) {
            block.fill(-1);
            for idx in rand::seq::index::sample(rng, root, ell).iter() {
                block[idx] = 1;
            }
        }
    }
}

/// Rotate a vector by `d` whole blocks: `out'_i = out_{i + d·root}` (indices mod n).
pub fn shift_blocks(v: &mut [i8], d: usize, root: usize) {
    let n = v.len();
    v.rotate_left((d * root) % n);
}
