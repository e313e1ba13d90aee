//! The polynomial k-wise independent sign family.
//!
//! A draw picks k uniform coefficients in GF(2^w) and evaluates the degree
//! k−1 polynomial at the distinct field points 0, 1, ..., n−1 (index i maps to
//! the element i−1). Any k evaluations of a uniformly random polynomial of degree
//! below k are independent uniform field elements, so their least-significant
//! bits are independent uniform signs: bit 0 → +1, bit 1 → −1.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::gf2::{Gf2Field, WindowTable};

#[derive(Debug, Clone)]
pub struct KWiseFamily {
    n: usize,
    k: usize,
    field: Gf2Field,
    /// `powers[i * k + j]` is `x_i^j`.
    powers: Vec<u64>,
}

/// The k-wise family over GF(2^64).
pub fn make_kwise(n: usize, k: usize) -> Result<KWiseFamily> {
    KWiseFamily::new(n, k)
}

impl KWiseFamily {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Self::with_field(n, k, Gf2Field::new(64)?)
    }

    pub fn with_field(n: usize, k: usize, field: Gf2Field) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::invalid(format!(
                "independence order k={k} must satisfy 2 <= k <= n={n}"
            )));
        }
        if field.width() < 64 && n as u64 > field.order() {
            return Err(Error::invalid(format!(
                "GF(2^{}) has fewer than n={n} points",
                field.width()
            )));
        }
        let mut powers = Vec::with_capacity(n * k);
        for i in 0..n as u64 {
            let mut p = 1u64;
            for _ in 0..k {
                powers.push(p);
                p = field.mul(p, i);
            }
        }
        Ok(KWiseFamily {
            n,
            k,
            field,
            powers,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> Gf2Field {
        self.field
    }

    pub fn sample_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i8]) {
        let mask = self.field.mask();
        let coeffs: Vec<u64> = (0..self.k).map(|_| rng.next_u64() & mask).collect();
        self.evaluate_signs(&coeffs, out);
    }

    /// Signs of the polynomial with coefficients `coeffs` (constant term first).
    pub fn evaluate_signs(&self, coeffs: &[u64], out: &mut [i8]) {
        assert_eq!(coeffs.len(), self.k, "expected k coefficients");
        assert_eq!(out.len(), self.n, "output must have length n");
        #[cfg(target_arch = "x86_64")]
        {
            if crate::gf2::has_hardware_clmul() {
                // SAFETY: pclmulqdq availability was checked at runtime.
                unsafe { self.evaluate_hw(coeffs, out) };
                return;
            }
        }
        self.evaluate_soft(coeffs, out);
    }

    /// Field values of the polynomial at every point.
    pub fn evaluate(&self, coeffs: &[u64]) -> Vec<u64> {
        assert_eq!(coeffs.len(), self.k, "expected k coefficients");
        (0..self.n)
            .map(|i| {
                let row = &self.powers[i * self.k..(i + 1) * self.k];
                row.iter()
                    .zip(coeffs)
                    .fold(0u64, |acc, (&p, &c)| acc ^ self.field.mul(c, p))
            })
            .collect()
    }

    fn evaluate_soft(&self, coeffs: &[u64], out: &mut [i8]) {
        let tables: Vec<WindowTable> = coeffs[1..].iter().map(|&c| WindowTable::new(c)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.powers[i * self.k + 1..(i + 1) * self.k];
            let mut acc = coeffs[0];
            for (t, &p) in tables.iter().zip(row) {
                acc ^= self.field.reduce(t.mul(p));
            }
            *o = sign_of(acc);
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "pclmulqdq")]
    unsafe fn evaluate_hw(&self, coeffs: &[u64], out: &mut [i8]) {
        use std::arch::x86_64::{_mm_clmulepi64_si128, _mm_cvtsi64_si128, _mm_extract_epi64};
        let cs: Vec<_> = coeffs[1..]
            .iter()
            .map(|&c| _mm_cvtsi64_si128(c as i64))
            .collect();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.powers[i * self.k + 1..(i + 1) * self.k];
            let mut acc = coeffs[0];
            for (&c, &p) in cs.iter().zip(row) {
                let prod = _mm_clmulepi64_si128(c, _mm_cvtsi64_si128(p as i64), 0x00);
                let lo = _mm_extract_epi64(prod, 0) as u64 as u128;
                let hi = _mm_extract_epi64(prod, 1) as u64 as u128;
                acc ^= self.field.reduce((hi << 64) | lo);
            }
            *o = sign_of(acc);
        }
    }
}

#[inline]
fn sign_of(value: u64) -> i8 {
    if value & 1 == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    /// Walsh–Hadamard transform of a histogram over sign patterns.
    fn character_sums(hist: &mut [i64]) {
        let mut h = 1;
        while h < hist.len() {
            for block in hist.chunks_mut(2 * h) {
                let (a, b) = block.split_at_mut(h);
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = u + v;
                    *y = u - v;
                }
            }
            h *= 2;
        }
    }

    /// Histogram of sign patterns (bit i set ⇔ h_{i+1} = −1) over every polynomial.
    fn pattern_histogram(fam: &KWiseFamily) -> Vec<i64> {
        let q = fam.field().order();
        let mut hist = vec![0i64; 1 << fam.n()];
        let mut coeffs = vec![0u64; fam.k()];
        let mut out = vec![0i8; fam.n()];
        let total = q.pow(fam.k() as u32);
        for idx in 0..total {
            let mut r = idx;
            for c in coeffs.iter_mut() {
                *c = r % q;
                r /= q;
            }
            fam.evaluate_signs(&coeffs, &mut out);
            let mask = out
                .iter()
                .enumerate()
                .fold(0usize, |m, (i, &s)| m | (((s < 0) as usize) << i));
            hist[mask] += 1;
        }
        hist
    }

    #[test]
    fn pairwise_over_gf4_is_exactly_uniform_on_pairs() {
        let fam = KWiseFamily::with_field(4, 2, Gf2Field::new(2).unwrap()).unwrap();
        let hist = pattern_histogram(&fam);
        assert_eq!(hist.iter().sum::<i64>(), 16);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let mut counts = [0i64; 4];
                for (mask, &c) in hist.iter().enumerate() {
                    counts[((mask >> i) & 1) * 2 + ((mask >> j) & 1)] += c;
                }
                assert_eq!(counts, [4, 4, 4, 4], "pair ({i}, {j})");
            }
        }
    }

    #[test]
    fn four_wise_over_gf16_kills_every_low_order_character() {
        let fam = KWiseFamily::with_field(16, 4, Gf2Field::new(4).unwrap()).unwrap();
        let mut hist = pattern_histogram(&fam);
        character_sums(&mut hist);
        assert_eq!(hist[0], 65536);
        for (set, &sum) in hist.iter().enumerate().skip(1) {
            if set.count_ones() <= 4 {
                assert_eq!(sum, 0, "character {set:#06x}");
            }
        }
        // Odd-size sets never correlate; the first dependent sets have size 6.
        assert!(hist
            .iter()
            .enumerate()
            .all(|(s, &v)| s.count_ones() % 2 == 0 || v == 0));
        assert!(hist
            .iter()
            .enumerate()
            .any(|(s, &v)| s.count_ones() == 6 && v != 0));
    }

    #[test]
    fn hardware_and_portable_evaluation_agree() {
        let fam = KWiseFamily::new(300, 4).unwrap();
        let mut rng = trial_rng(1, 0);
        for _ in 0..20 {
            let coeffs: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
            let mut a = vec![0i8; 300];
            let mut b = vec![0i8; 300];
            fam.evaluate_signs(&coeffs, &mut a);
            fam.evaluate_soft(&coeffs, &mut b);
            assert_eq!(a, b);
            let values = fam.evaluate(&coeffs);
            let c: Vec<i8> = values.iter().map(|&v| sign_of(v)).collect();
            assert_eq!(a, c);
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(KWiseFamily::new(8, 1).is_err());
        assert!(KWiseFamily::new(8, 9).is_err());
        assert!(KWiseFamily::with_field(17, 2, Gf2Field::new(4).unwrap()).is_err());
    }
}
