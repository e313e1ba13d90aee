//! The dyadic certificate matrix `A_{ij} = lg n − κ(i, j)`, where κ is the
//! smallest level at which i and j share a dyadic block.
//!
//! `xᵀAx` is the sum over levels `r = 0..lg n − 1` of the squared block sums
//! of x, which is how [`DyadicMatrix::quadratic_form`] evaluates it. Dense
//! copies are only built for factorization and inspection.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest order accepted by the dense routines.
pub const DENSE_LIMIT: usize = 4096;
/// Largest order the CSV dump accepts.
pub const DUMP_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicMatrix {
    n: usize,
    lg: u32,
}

/// The prefix indicator `v^i = (1, …, 1, 0, …, 0)` with i leading ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixIndicator {
    pub n: usize,
    pub i: usize,
}

impl PrefixIndicator {
    pub fn new(n: usize, i: usize) -> Result<Self> {
        if i == 0 || i > n {
            return Err(Error::OutOfRange {
                index: i,
                lo: 1,
                hi: n,
            });
        }
        Ok(PrefixIndicator { n, i })
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        x[..self.i].iter().sum()
    }

    pub fn to_dense(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |r, _| if r < self.i { 1.0 } else { 0.0 })
    }
}

impl DyadicMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "matrix order {n} must be a power of two and at least 4"
            )));
        }
        Ok(DyadicMatrix {
            n,
            lg: n.trailing_zeros(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lg(&self) -> u32 {
        self.lg
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::OutOfRange {
                index: i,
                lo: 1,
                hi: self.n,
            });
        }
        Ok(())
    }

    /// 1-based entry `A_{ij}`.
    pub fn entry(&self, i: usize, j: usize) -> Result<u32> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.entry_unchecked(i - 1, j - 1))
    }

    #[inline]
    fn entry_unchecked(&self, i0: usize, j0: usize) -> u32 {
        let kappa = usize::BITS - (i0 ^ j0).leading_zeros();
        self.lg - kappa
    }

    /// `Tr(A) = n lg n`.
    pub fn trace(&self) -> u64 {
        self.n as u64 * self.lg as u64
    }

    fn check_dense(&self) -> Result<()> {
        if self.n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                what: "dense dyadic matrix",
                size: self.n,
                limit: DENSE_LIMIT,
            });
        }
        Ok(())
    }

    pub fn dense(&self) -> Result<DMatrix<f64>> {
        self.check_dense()?;
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| {
            self.entry_unchecked(i, j) as f64
        }))
    }

    /// Σ over dyadic blocks of length `2^r`, `r < lg n`, of the all-ones block matrix.
    pub fn dense_from_blocks(&self) -> Result<DMatrix<u32>> {
        self.check_dense()?;
        let mut a = DMatrix::<u32>::zeros(self.n, self.n);
        for r in 0..self.lg {
            let len = 1usize << r;
            for start in (0..self.n).step_by(len) {
                for i in start..start + len {
                    for j in start..start + len {
                        a[(i, j)] += 1;
                    }
                }
            }
        }
        Ok(a)
    }

    /// `xᵀAx` via dyadic level sums in O(n lg n).
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut level = x.to_vec();
        let mut total = 0.0;
        for _ in 0..self.lg {
            total += level.iter().map(|s| s * s).sum::<f64>();
            level = level.chunks_exact(2).map(|p| p[0] + p[1]).collect();
        }
        Ok(total)
    }

    /// Integer version of [`Self::quadratic_form`] for sign vectors.
    pub fn quadratic_form_signs(&self, h: &[i8]) -> Result<i64> {
        if h.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: h.len(),
            });
        }
        let mut level: Vec<i64> = h.iter().map(|&v| v as i64).collect();
        let mut total = 0i64;
        for _ in 0..self.lg {
            total += level.iter().map(|s| s * s).sum::<i64>();
            level = level.chunks_exact(2).map(|p| p[0] + p[1]).collect();
        }
        Ok(total)
    }

    /// Whether `xᵀAx ≥ (x_1 + … + x_i)² / lg n` up to 1e-9.
    pub fn prefix_lower_bound_check(&self, x: &[f64], i: usize) -> Result<bool> {
        let v = PrefixIndicator::new(self.n, i)?;
        let q = self.quadratic_form(x)?;
        let p = v.dot(x);
        Ok(q >= p * p / self.lg as f64 - 1e-9)
    }

    fn cholesky(&self) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        Cholesky::new(self.dense()?).ok_or(Error::NotPositiveDefinite)
    }

    /// `min { wᵀAw : ⟨v^i, w⟩ = 1 } = 1 / ⟨v^i, A⁻¹v^i⟩`.
    pub fn constrained_min(&self, i: usize) -> Result<f64> {
        let v = PrefixIndicator::new(self.n, i)?;
        let y = self.cholesky()?.solve(&v.to_dense());
        Ok(1.0 / y.rows(0, i).sum())
    }

    /// `⟨v^i, A⁻¹v^i⟩` for every i, from one inverse and running sums.
    pub fn prefix_quadratics(&self) -> Result<Vec<f64>> {
        let inv = self.cholesky()?.inverse();
        let mut out = Vec::with_capacity(self.n);
        let mut q = 0.0;
        for i in 0..self.n {
            let cross: f64 = (0..i).map(|b| inv[(i, b)]).sum();
            q += 2.0 * cross + inv[(i, i)];
            out.push(q);
        }
        Ok(out)
    }

    /// `Tr(A) · max_i ⟨v^i, A⁻¹v^i⟩`.
    pub fn corollary_ratio(&self) -> Result<f64> {
        let max = self
            .prefix_quadratics()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(self.trace() as f64 * max)
    }

    /// Dense A as CSV rows `i,j,value`, 1-based.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        if self.n > DUMP_LIMIT {
            return Err(Error::TooLarge {
                what: "matrix dump",
                size: self.n,
                limit: DUMP_LIMIT,
            });
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "value"])?;
        for i in 0..self.n {
            for j in 0..self.n {
                out.write_record([
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    self.entry_unchecked(i, j).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
