//! Nested variance-balanced intervals and the chain decomposition of prefix
//! sums, plus the Monte-Carlo tail experiment for scaled 4-wise walks.
//!
//! A [`VarianceProfile`] fixes the normalized cumulative variances `T_i`.
//! [`IntervalTree::build`] splits `[0, n]` recursively: a node `[a, b]` is cut
//! at the smallest `t` with `0.45 ≤ (T_t − T_a)/(T_b − T_a) ≤ 0.55` when one
//! exists, giving the good children `[a, t]` and `[t, b]`. Otherwise it is cut
//! into the bad children `[a, t − 1]` and `[t, b]`, where `t` is the first
//! index past the window. Every bad split throws away at least a tenth of the
//! parent's variance, which is what drives [`IntervalTree::bad_mass`] down
//! geometrically in the rank.

mod chain;
mod tail;
mod tree;

pub use chain::{chain_path, ChainPath, Hop, HopKind};
pub use tail::{log_uniform_variances, mc_tail, TailRow, TailTable};
pub use tree::{classify_and_rank, IntervalNode, IntervalTree};

use crate::error::{Error, Result};

/// Normalized cumulative variances of a sequence of independent-ish steps.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    /// Length of the original sequence, zero-variance steps included.
    n: usize,
    /// `t[j]` for the compressed sequence; `t[0] = 0`, last entry 1.
    t: Vec<f64>,
    /// `pos[j]` is the original prefix index of compressed prefix j.
    pos: Vec<usize>,
}

impl VarianceProfile {
    /// Build from per-step variances; zero entries are dropped and remembered.
    pub fn from_variances(variances: &[f64]) -> Result<Self> {
        if let Some((i, v)) = variances
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidProfile(format!(
                "variance {v} at index {} is not a finite nonnegative number",
                i + 1
            )));
        }
        let total: f64 = variances.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidProfile("all variances are zero".into()));
        }
        let mut t = vec![0.0];
        let mut pos = vec![0];
        let mut acc = 0.0;
        for (i, &v) in variances.iter().enumerate() {
            if v > 0.0 {
                acc += v;
                t.push(acc / total);
                pos.push(i + 1);
            }
        }
        *t.last_mut().unwrap() = 1.0;
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProfile(
                "variances too small to separate in floating point".into(),
            ));
        }
        Ok(VarianceProfile {
            n: variances.len(),
            t,
            pos,
        })
    }

    /// Build from `T_0 = 0, T_1, …, T_n`, which must be strictly increasing.
    pub fn from_cumulative(cumulative: &[f64]) -> Result<Self> {
        if cumulative.len() < 2 || cumulative[0] != 0.0 {
            return Err(Error::InvalidProfile(
                "cumulative profile must start at 0 and have at least two entries".into(),
            ));
        }
        if let Some(i) = cumulative
            .windows(2)
            .position(|w| w[0] >= w[1] || w[0].is_nan() || !w[1].is_finite())
        {
            return Err(Error::InvalidProfile(format!(
                "T is not strictly increasing at index {}",
                i + 1
            )));
        }
        let total = *cumulative.last().unwrap();
        let mut t: Vec<f64> = cumulative.iter().map(|x| x / total).collect();
        *t.last_mut().unwrap() = 1.0;
        Ok(VarianceProfile {
            n: cumulative.len() - 1,
            pos: (0..cumulative.len()).collect(),
            t,
        })
    }

    /// Original sequence length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of positive-variance steps.
    pub fn compressed_len(&self) -> usize {
        self.t.len() - 1
    }

    /// Normalized `T` over compressed prefixes.
    pub fn cumulative(&self) -> &[f64] {
        &self.t
    }

    /// Original prefix index of compressed prefix `j`.
    pub fn original_index(&self, j: usize) -> usize {
        self.pos[j]
    }

    /// Largest compressed prefix whose original index is at most `i`.
    pub fn compressed_index(&self, i: usize) -> usize {
        self.pos.partition_point(|&p| p <= i) - 1
    }
}
