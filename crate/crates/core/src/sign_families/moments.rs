//! First and second moments of sign families: exact for the adversarial
//! stages, empirical for anything that can be sampled.

use std::io::Write;

use num_traits::{One, Signed, Zero};

use super::adversarial::{frac, int, AdversarialParams, Rational};
use super::{FamilyKind, FamilySpec, Sampler, Stage};
use crate::error::{Error, Result};
use crate::parallel::map_trials;
use crate::rng::trial_rng;

/// Largest domain accepted by [`exact_moments`].
pub const EXACT_MOMENTS_LIMIT: usize = 4096;

/// Block-level moments: entries depend only on the blocks of i and j and on
/// whether i = j (the diagonal of `E[h_i h_j]` is always 1).
#[derive(Debug, Clone, PartialEq)]
struct BlockMoments {
    mean: Vec<Rational>,
    cov: Vec<Vec<Rational>>,
}

impl BlockMoments {
    fn zero(root: usize) -> Self {
        BlockMoments {
            mean: vec![Rational::zero(); root],
            cov: vec![vec![Rational::zero(); root]; root],
        }
    }

    fn add_scaled(&mut self, other: &BlockMoments, w: &Rational) {
        for (a, b) in self.mean.iter_mut().zip(&other.mean) {
            *a += b * w;
        }
        for (ra, rb) in self.cov.iter_mut().zip(&other.cov) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b * w;
            }
        }
    }

    fn negated_mean(&self) -> BlockMoments {
        BlockMoments {
            mean: self.mean.iter().map(|m| -m).collect(),
            cov: self.cov.clone(),
        }
    }
}

/// Exact `E[h_i]` and `E[h_i h_j]` for one adversarial stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    pub n: usize,
    pub root: usize,
    pub stage: Stage,
    block: BlockMoments,
}

impl ExactMoments {
    /// `E[h_i]`, 1-based.
    pub fn mean(&self, i: usize) -> &Rational {
        &self.block.mean[(i - 1) / self.root]
    }

    /// `E[h_i h_j]`, 1-based.
    pub fn cov(&self, i: usize, j: usize) -> Rational {
        if i == j {
            Rational::one()
        } else {
            self.block.cov[(i - 1) / self.root][(j - 1) / self.root].clone()
        }
    }

    /// Zero mean and identity second-moment matrix, exactly.
    pub fn is_centered_identity(&self) -> bool {
        let root = self.root;
        self.block.mean.iter().all(Zero::is_zero)
            && (0..root).all(|a| {
                (0..root).all(|b| {
                    // Same-block off-diagonal pairs exist because blocks have >= 2 entries.
                    self.block.cov[a][b].is_zero()
                })
            })
    }

    /// Off-diagonal value for a pair of distinct indices in blocks `c1`, `c2` (1-based).
    pub fn block_cov(&self, c1: usize, c2: usize) -> &Rational {
        &self.block.cov[c1 - 1][c2 - 1]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_moments_csv(w, self.n, |i, j| {
            let v = self.cov(i, j);
            v.to_string()
        })
    }
}

/// Exact moments of an adversarial stage; other families are rejected.
pub fn exact_moments(spec: &FamilySpec) -> Result<ExactMoments> {
    spec.validate()?;
    if spec.kind != FamilyKind::AdversarialStage {
        return Err(Error::invalid(
            "exact moments are only tabulated for adversarial stages",
        ));
    }
    if spec.n > EXACT_MOMENTS_LIMIT {
        return Err(Error::TooLarge {
            what: "moment table",
            size: spec.n,
            limit: EXACT_MOMENTS_LIMIT,
        });
    }
    let params = super::adversarial_params(spec.n)?;
    Ok(stage_moments(&params, spec.stage.expect("validated")))
}

/// Moments of `stage` evaluated from the mixture structure of `params`.
///
/// H2 is computed as the block-shift average of H1 straight from the bias
/// profile, while the H3 pair modes use the stored g-table, so a corrupted
/// table shows up as nonzero cross-block covariance.
pub fn stage_moments(params: &AdversarialParams, stage: Stage) -> ExactMoments {
    let block = match stage {
        Stage::H1 => h1_block(params),
        Stage::H2 => h2_block(params),
        Stage::H3 => h3_block(params),
        Stage::H => h_block(params),
    };
    ExactMoments {
        n: params.n,
        root: params.root,
        stage,
        block,
    }
}

fn h1_block(params: &AdversarialParams) -> BlockMoments {
    let f = &params.f;
    BlockMoments {
        mean: f.clone(),
        cov: f
            .iter()
            .map(|a| f.iter().map(|b| a * b).collect())
            .collect(),
    }
}

fn h2_block(params: &AdversarialParams) -> BlockMoments {
    let root = params.root;
    let h1 = h1_block(params);
    let w = frac(1, root as i64);
    let mut out = BlockMoments::zero(root);
    for d in 0..root {
        let shifted = BlockMoments {
            mean: (0..root).map(|c| h1.mean[(c + d) % root].clone()).collect(),
            cov: (0..root)
                .map(|a| {
                    (0..root)
                        .map(|b| h1.cov[(a + d) % root][(b + d) % root].clone())
                        .collect()
                })
                .collect(),
        };
        out.add_scaled(&shifted, &w);
    }
    out
}

fn h3_block(params: &AdversarialParams) -> BlockMoments {
    let root = params.root;
    let mut out = BlockMoments::zero(root);
    out.add_scaled(&h2_block(params), &params.h2_weight());
    for m in params.pair_modes() {
        let (a, b) = (m.first - 1, m.second - 1);
        let s = int(m.second_sign as i64);
        let ws = &m.weight * &s;
        out.mean[a] += &m.weight;
        out.mean[b] += &ws;
        out.cov[a][a] += &m.weight;
        out.cov[b][b] += &m.weight;
        out.cov[a][b] += &ws;
        out.cov[b][a] += &ws;
    }
    out
}

fn balanced_block(params: &AdversarialParams) -> BlockMoments {
    let (root, ell) = (params.root as i64, params.ell as i64);
    // Ordered pairs of distinct positions in a block that share a sign.
    let same = frac(2 * ell * (ell - 1), root * (root - 1));
    let within = &same * int(2) - Rational::one();
    let mut out = BlockMoments::zero(params.root);
    for c in 0..params.root {
        out.cov[c][c] = within.clone();
    }
    out
}

fn h_block(params: &AdversarialParams) -> BlockMoments {
    let h3 = h3_block(params);
    let half = frac(1, 2);
    let mut out = BlockMoments::zero(params.root);
    let w = &params.p * &half;
    out.add_scaled(&h3, &w);
    out.add_scaled(&h3.negated_mean(), &w);
    out.add_scaled(&balanced_block(params), &(Rational::one() - &params.p));
    out
}

/// `Σ_{i≠j} |E_{H2}[h_i h_j]| / n`, exactly.
pub fn h2_cross_mass_ratio(params: &AdversarialParams) -> Rational {
    let root = params.root as i64;
    let mut total = Rational::zero();
    for a in 0..params.root {
        for b in 0..params.root {
            let g = params.g[a][b].abs();
            total += if a == b { g * frac(root - 1, root) } else { g };
        }
    }
    total
}

/// Sample means of `h_i` and `h_i h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    pub n: usize,
    pub trials: u64,
    pub mean: Vec<f64>,
    /// Row-major n × n.
    pub cov: Vec<f64>,
}

impl EmpiricalMoments {
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[(i - 1) * self.n + (j - 1)]
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i - 1]
    }

    /// Largest `|E[h_i h_j] − target(i, j)|` over `i ≠ j`.
    pub fn max_offdiag_deviation(&self, target: impl Fn(usize, usize) -> f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..=self.n {
            for j in 1..=self.n {
                if i != j {
                    worst = worst.max((self.cov(i, j) - target(i, j)).abs());
                }
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_moments_csv(w, self.n, |i, j| format!("{}", self.cov(i, j)))
    }
}

const CHUNK: u64 = 4096;

/// Empirical moments over `trials` draws, trial t using stream `(seed, t)`.
///
/// Counts are accumulated as integers, so the result does not depend on how
/// the trials are split across workers.
pub fn empirical_moments(sampler: &Sampler, trials: u64, seed: u64) -> Result<EmpiricalMoments> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let n = sampler.n();
    let chunks = trials.div_ceil(CHUNK);
    let partials = map_trials(chunks, |c| {
        let mut sum = vec![0i64; n];
        let mut prod = vec![0i64; n * n];
        let mut buf = vec![0i8; n];
        for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            sampler.sample_into(&mut trial_rng(seed, t), &mut buf);
            for (i, &hi) in buf.iter().enumerate() {
                sum[i] += hi as i64;
                let row = &mut prod[i * n..(i + 1) * n];
                for (p, &hj) in row.iter_mut().zip(&buf) {
                    *p += (hi * hj) as i64;
                }
            }
        }
        (sum, prod)
    });
    let mut sum = vec![0i64; n];
    let mut prod = vec![0i64; n * n];
    for (s, p) in partials {
        sum.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        prod.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    let tf = trials as f64;
    Ok(EmpiricalMoments {
        n,
        trials,
        mean: sum.iter().map(|&s| s as f64 / tf).collect(),
        cov: prod.iter().map(|&s| s as f64 / tf).collect(),
    })
}

/// CSV with columns `row,col,value` for every entry of an n × n table (1-based).
pub fn write_moments_csv<W: Write>(
    w: W,
    n: usize,
    cell: impl Fn(usize, usize) -> String,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["row", "col", "value"])?;
    for i in 1..=n {
        for j in 1..=n {
            out.write_record([i.to_string(), j.to_string(), cell(i, j)])?;
        }
    }
    out.flush()?;
    Ok(())
}
