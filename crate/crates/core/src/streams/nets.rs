use std::io::Write;

use super::InsertionStream;
use crate::error::{Error, Result};

/// Greedy nets of the prefixes `z^(0), …, z^(m)` at radii `2^{−r/2}·||z||₂`
/// for `r = 0..=2 lg m + 1`.
///
/// Net points are stored as stream times. A level starts at `t = 0` and adds
/// the first time whose prefix is strictly farther than the radius from the
/// last net point, comparing `2^r·dist²` with `||z||₂²` in integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetHierarchy {
    m: usize,
    norm_sq: u64,
    prefix_norms_sq: Vec<u64>,
    times: Vec<Vec<usize>>,
    /// `parents[r][s]`: index into level r − 1; empty at level 0.
    parents: Vec<Vec<usize>>,
}

impl NetHierarchy {
    pub fn build(stream: &InsertionStream) -> Self {
        let m = stream.m();
        let top = 2 * stream.lg_m() + 1;
        let prefix_norms_sq = stream.prefix_norms_sq();
        let norm_sq = prefix_norms_sq[m];
        let mut delta = vec![0u64; stream.n()];
        let mut touched: Vec<usize> = Vec::new();
        let mut times = Vec::with_capacity(top as usize + 1);
        for r in 0..=top {
            let mut level = vec![0usize];
            let mut dist_sq = 0u64;
            for (t, &p) in stream.items().iter().enumerate() {
                let i = p as usize - 1;
                if delta[i] == 0 {
                    touched.push(i);
                }
                dist_sq += 2 * delta[i] + 1;
                delta[i] += 1;
                if ((dist_sq as u128) << r) > norm_sq as u128 {
                    level.push(t + 1);
                    for &j in &touched {
                        delta[j] = 0;
                    }
                    touched.clear();
                    dist_sq = 0;
                }
            }
            for &j in &touched {
                delta[j] = 0;
            }
            touched.clear();
            times.push(level);
        }
        let mut parents = vec![Vec::new()];
        for r in 1..times.len() {
            let coarse = &times[r - 1];
            let mut s_prev = 0usize;
            let level: Vec<usize> = times[r]
                .iter()
                .map(|&t| {
                    while s_prev + 1 < coarse.len() && coarse[s_prev + 1] <= t {
                        s_prev += 1;
                    }
                    s_prev
                })
                .collect();
            parents.push(level);
        }
        NetHierarchy {
            m,
            norm_sq,
            prefix_norms_sq,
            times,
            parents,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Index of the finest level, `2 lg m + 1`.
    pub fn top(&self) -> u32 {
        self.times.len() as u32 - 1
    }

    pub fn norm_sq(&self) -> u64 {
        self.norm_sq
    }

    pub fn prefix_norms_sq(&self) -> &[u64] {
        &self.prefix_norms_sq
    }

    /// Net point times of level r, starting with 0.
    pub fn level(&self, r: u32) -> &[usize] {
        &self.times[r as usize]
    }

    /// `d_r`: the largest index s at level r.
    pub fn d(&self, r: u32) -> usize {
        self.times[r as usize].len() - 1
    }

    /// `f(r, s)` for r ≥ 1.
    pub fn parent(&self, r: u32, s: usize) -> usize {
        self.parents[r as usize][s]
    }

    /// Pairs `(time of a_{r,s}, time of a_{r−1,f(r,s)})` over r ≥ 1 and all s.
    pub fn differences(&self) -> impl Iterator<Item = (u32, usize, usize)> + '_ {
        (1..=self.top()).flat_map(move |r| {
            let coarse = &self.times[r as usize - 1];
            self.times[r as usize]
                .iter()
                .zip(&self.parents[r as usize])
                .map(move |(&t, &f)| (r, t, coarse[f]))
        })
    }

    /// Every prefix lies within `2^{−r/2}·||z||₂` of the last level-r net
    /// point at or before it, checked in exact integer arithmetic.
    pub fn coverage_check(&self, stream: &InsertionStream, r: u32) -> bool {
        let level = self.level(r);
        let mut delta = vec![0u64; stream.n()];
        let mut touched: Vec<usize> = Vec::new();
        let mut dist_sq = 0u64;
        let mut next = 1usize;
        for (t, &p) in (1..=self.m).zip(stream.items()) {
            let i = p as usize - 1;
            if delta[i] == 0 {
                touched.push(i);
            }
            dist_sq += 2 * delta[i] + 1;
            delta[i] += 1;
            if next < level.len() && level[next] == t {
                for &j in &touched {
                    delta[j] = 0;
                }
                touched.clear();
                dist_sq = 0;
                next += 1;
            }
            if ((dist_sq as u128) << r) > self.norm_sq as u128 {
                return false;
            }
        }
        true
    }

    /// `Σ_{r ≥ 1} Σ_s ⟨a_{r,s} − a_{r−1,f(r,s)}, X⟩²`.
    pub fn chain_form_quadratic(&self, stream: &InsertionStream, x: &[f64]) -> Result<f64> {
        let p = stream.prefix_inner(x)?;
        Ok(self
            .differences()
            .map(|(_, t, tp)| {
                let d = p[t] - p[tp];
                d * d
            })
            .sum())
    }

    /// `Σ_{r ≥ 1} 2^{r/2} Σ_s ⟨a_{r,s} − a_{r−1,f(r,s)}, X⟩^k` for even k ≥ 4.
    pub fn chain_form_k(&self, stream: &InsertionStream, x: &[f64], k: u32) -> Result<f64> {
        check_even_order(k)?;
        let p = stream.prefix_inner(x)?;
        let mut total = 0.0;
        for r in 1..=self.top() {
            let coarse = &self.times[r as usize - 1];
            let level: f64 = self.times[r as usize]
                .iter()
                .zip(&self.parents[r as usize])
                .map(|(&t, &f)| (p[t] - p[coarse[f]]).powi(k as i32))
                .sum();
            total += 2f64.powf(r as f64 / 2.0) * level;
        }
        Ok(total)
    }

    /// Net CSV with columns `r,s,time,parent_s`; level 0 has no parent.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "s", "time", "parent_s"])?;
        for (r, level) in self.times.iter().enumerate() {
            for (s, &t) in level.iter().enumerate() {
                let parent = if r == 0 {
                    String::new()
                } else {
                    self.parents[r][s].to_string()
                };
                out.write_record([r.to_string(), s.to_string(), t.to_string(), parent])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn check_even_order(k: u32) -> Result<()> {
    if k < 4 || !k.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "chain form order must be even and at least 4, got {k}"
        )));
    }
    Ok(())
}

/// `c(k, m) = ((1 − ρ)/(1 − ρ^L))^k` with `ρ = 2^{−1/(2k)}` and `L = 2 lg m + 1`.
pub fn dominance_constant(k: u32, m: usize) -> Result<f64> {
    check_even_order(k)?;
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::invalid(format!(
            "stream length {m} is not a power of two"
        )));
    }
    let levels = 2 * m.trailing_zeros() as i32 + 1;
    let rho = 2f64.powf(-1.0 / (2.0 * k as f64));
    Ok(((1.0 - rho) / (1.0 - rho.powi(levels))).powi(k as i32))
}
