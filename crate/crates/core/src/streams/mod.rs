//! Insertion-only streams `p_1, …, p_m ∈ [n]`, the greedy ε-net hierarchy of
//! their prefix vectors `z^(t)`, and the chain forms that bound the running
//! inner product `⟨X, z^(t)⟩` for a random sign vector X.

mod moments;
mod nets;

use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, trial_rng};

pub use moments::{mc_sup_moment, mz_moment_exact, mz_moment_mc, MomentBound, MomentCheck};
pub use nets::{dominance_constant, NetHierarchy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionStream {
    n: usize,
    items: Vec<u32>,
}

impl InsertionStream {
    /// Items are 1-based; the length must be a power of two.
    pub fn new(n: usize, items: Vec<u32>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("stream is empty"));
        }
        if !items.len().is_power_of_two() {
            return Err(Error::invalid(format!(
                "stream length {} is not a power of two",
                items.len()
            )));
        }
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::invalid(format!("dimension {n} out of range")));
        }
        if let Some(&bad) = items.iter().find(|&&p| p == 0 || p as usize > n) {
            return Err(Error::OutOfRange {
                index: bad as usize,
                lo: 1,
                hi: n,
            });
        }
        Ok(InsertionStream { n, items })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn lg_m(&self) -> u32 {
        self.items.len().trailing_zeros()
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    /// The prefix vector `z^(t)` as dense counts.
    pub fn prefix_vector(&self, t: usize) -> Vec<u64> {
        let mut z = vec![0u64; self.n];
        for &p in &self.items[..t] {
            z[p as usize - 1] += 1;
        }
        z
    }

    /// `||z^(t)||₂²` for every t = 0..=m.
    pub fn prefix_norms_sq(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n];
        let mut acc = 0u64;
        let mut out = Vec::with_capacity(self.m() + 1);
        out.push(0);
        for &p in &self.items {
            let c = &mut counts[p as usize - 1];
            acc += 2 * *c + 1;
            *c += 1;
            out.push(acc);
        }
        out
    }

    /// `||z||₂²` of the final frequency vector.
    pub fn norm_sq(&self) -> u64 {
        *self.prefix_norms_sq().last().unwrap()
    }

    /// `P(t) = ⟨X, z^(t)⟩` for t = 0..=m.
    pub fn prefix_inner<T>(&self, x: &[T]) -> Result<Vec<T>>
    where
        T: Copy + std::ops::Add<Output = T> + Default,
    {
        self.check_dim(x.len())?;
        let mut acc = T::default();
        let mut out = Vec::with_capacity(self.m() + 1);
        out.push(acc);
        for &p in &self.items {
            acc = acc + x[p as usize - 1];
            out.push(acc);
        }
        Ok(out)
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }

    /// Newline-delimited decimal item indices.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.items {
            writeln!(w, "{p}")?;
        }
        Ok(())
    }

    /// Parse newline-delimited items; blank lines are skipped. Without an
    /// explicit dimension the largest item is used.
    pub fn read_from<R: BufRead>(r: R, n: Option<usize>) -> Result<Self> {
        let mut items = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            let p = text.parse::<u32>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("{text:?}: {e}"),
            })?;
            items.push(p);
        }
        let n = n.unwrap_or_else(|| items.iter().copied().max().unwrap_or(0) as usize);
        Self::new(n, items)
    }
}

/// `max_t |⟨X, z^(t)⟩|`, updating the inner product by `X_{p_t}` per item.
pub fn sup_inner(stream: &InsertionStream, x: &[f64]) -> Result<f64> {
    stream.check_dim(x.len())?;
    let mut acc = 0.0f64;
    let mut best = 0.0f64;
    for &p in stream.items() {
        acc += x[p as usize - 1];
        best = best.max(acc.abs());
    }
    Ok(best)
}

/// Integer-valued [`sup_inner`] for sign vectors.
pub fn sup_inner_signs(stream: &InsertionStream, h: &[i8]) -> Result<u64> {
    stream.check_dim(h.len())?;
    let mut acc = 0i64;
    let mut best = 0u64;
    for &p in stream.items() {
        acc += h[p as usize - 1] as i64;
        best = best.max(acc.unsigned_abs());
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    /// `p_t = t`.
    Identity,
    /// Every item is 1.
    SingleItem,
    /// A uniformly random first half over items 2..=n, then item 1 repeated.
    TwoPhaseHeavy,
    UniformRandom,
    /// Runs of one item with lengths m/2, m/4, …, 1, 1, cycling through items.
    DyadicBursts,
}

impl StreamKind {
    pub const ALL: [StreamKind; 5] = [
        StreamKind::Identity,
        StreamKind::SingleItem,
        StreamKind::TwoPhaseHeavy,
        StreamKind::UniformRandom,
        StreamKind::DyadicBursts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StreamKind::Identity => "identity",
            StreamKind::SingleItem => "single-item",
            StreamKind::TwoPhaseHeavy => "two-phase-heavy",
            StreamKind::UniformRandom => "uniform-random",
            StreamKind::DyadicBursts => "dyadic-bursts",
        }
    }

    /// Generate a stream of length m over `[n]`.
    pub fn generate(self, n: usize, m: usize, seed: u64) -> Result<InsertionStream> {
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::invalid(format!(
                "stream length {m} is not a power of two"
            )));
        }
        if n == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let mut rng = trial_rng(derive_seed(seed, self as u64), 0);
        let items: Vec<u32> = match self {
            StreamKind::Identity => {
                if n < m {
                    return Err(Error::invalid(format!(
                        "identity stream of length {m} needs n ≥ {m}, got {n}"
                    )));
                }
                (1..=m as u32).collect()
            }
            StreamKind::SingleItem => vec![1; m],
            StreamKind::TwoPhaseHeavy => {
                if n < 2 {
                    return Err(Error::invalid("two-phase stream needs n ≥ 2"));
                }
                let mut v: Vec<u32> = (0..m / 2).map(|_| rng.random_range(2..=n as u32)).collect();
                v.resize(m, 1);
                v
            }
            StreamKind::UniformRandom => (0..m).map(|_| rng.random_range(1..=n as u32)).collect(),
            StreamKind::DyadicBursts => {
                let mut v = Vec::with_capacity(m);
                let mut len = m / 2;
                let mut item = 0usize;
                while v.len() < m {
                    let run = len.max(1).min(m - v.len());
                    v.extend(std::iter::repeat_n((item % n) as u32 + 1, run));
                    item += 1;
                    len /= 2;
                }
                v
            }
        };
        InsertionStream::new(n, items)
    }
}

impl std::fmt::Display for StreamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StreamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StreamKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown stream kind {s:?}")))
    }
}
