//! Arithmetic in GF(2^w) for the widths used by the polynomial hash families.
//!
//! Elements are bit-vectors of polynomial coefficients over GF(2), stored in the
//! low `w` bits of a `u64`. Products are carry-less multiplications reduced by a
//! fixed low-weight irreducible polynomial per width.

use crate::error::{Error, Result};

/// Reduction polynomials without the leading `x^w` term.
///
/// | w  | polynomial                  |
/// |----|-----------------------------|
/// | 2  | x^2 + x + 1                 |
/// | 4  | x^4 + x + 1                 |
/// | 8  | x^8 + x^4 + x^3 + x + 1     |
/// | 16 | x^16 + x^5 + x^3 + x^2 + 1  |
/// | 32 | x^32 + x^7 + x^3 + x^2 + 1  |
/// | 64 | x^64 + x^4 + x^3 + x + 1    |
const REDUCTION_TAILS: [(u32, u64); 6] = [
    (2, 0b11),
    (4, 0b11),
    (8, 0x1b),
    (16, 0x2d),
    (32, 0x8d),
    (64, 0x1b),
];

/// The finite field GF(2^w).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2Field {
    width: u32,
    tail: u64,
}

impl Gf2Field {
    pub fn new(width: u32) -> Result<Self> {
        REDUCTION_TAILS
            .iter()
            .find(|(w, _)| *w == width)
            .map(|&(width, tail)| Gf2Field { width, tail })
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unsupported field width {width}; expected one of 2, 4, 8, 16, 32, 64"
                ))
            })
    }

    /// Smallest supported field with at least `n` elements.
    pub fn for_domain(n: usize) -> Result<Self> {
        REDUCTION_TAILS
            .iter()
            .find(|(w, _)| *w == 64 || (n as u128) <= (1u128 << w))
            .map(|&(width, tail)| Gf2Field { width, tail })
            .ok_or_else(|| Error::invalid("domain too large"))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Reduction polynomial as a 128-bit value including the leading term.
    pub fn modulus(&self) -> u128 {
        (1u128 << self.width) | self.tail as u128
    }

    pub fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    /// Number of field elements, saturating at `u64::MAX` for w = 64.
    pub fn order(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            1u64 << self.width
        }
    }

    #[inline]
    pub fn reduce(&self, mut x: u128) -> u64 {
        let w = self.width;
        let mask = self.mask() as u128;
        loop {
            let hi = x >> w;
            if hi == 0 {
                return x as u64;
            }
            let mut folded = x & mask;
            let mut tail = self.tail;
            while tail != 0 {
                let b = tail.trailing_zeros();
                folded ^= hi << b;
                tail &= tail - 1;
            }
            x = folded;
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(clmul(a, b))
    }

    pub fn pow(&self, mut base: u64, mut exp: u128) -> u64 {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}

/// Carry-less product of two 64-bit polynomials.
#[inline]
pub fn clmul(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { clmul_pclmul(a, b) };
        }
    }
    clmul_soft(a, b)
}

/// Portable carry-less multiply using 4-bit windows of `b`.
pub fn clmul_soft(a: u64, b: u64) -> u128 {
    let table = WindowTable::new(a);
    table.mul(b)
}

/// Precomputed multiples of a fixed left operand for repeated software products.
#[derive(Clone)]
pub struct WindowTable([u128; 16]);

impl WindowTable {
    pub fn new(a: u64) -> Self {
        let a = a as u128;
        let mut t = [0u128; 16];
        t[1] = a;
        t[2] = a << 1;
        t[4] = a << 2;
        t[8] = a << 3;
        for i in 1..16usize {
            let low = i & i.wrapping_neg();
            t[i] = t[low] ^ t[i ^ low];
        }
        WindowTable(t)
    }

    #[inline]
    pub fn mul(&self, b: u64) -> u128 {
        let mut r = 0u128;
        for k in (0..16).rev() {
            r = (r << 4) ^ self.0[((b >> (4 * k)) & 0xf) as usize];
        }
        r
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq")]
unsafe fn clmul_pclmul(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::{_mm_clmulepi64_si128, _mm_cvtsi64_si128, _mm_extract_epi64};
    let x = _mm_cvtsi64_si128(a as i64);
    let y = _mm_cvtsi64_si128(b as i64);
    let p = _mm_clmulepi64_si128(x, y, 0x00);
    let lo = _mm_extract_epi64(p, 0) as u64 as u128;
    let hi = _mm_extract_epi64(p, 1) as u64 as u128;
    (hi << 64) | lo
}

/// Whether the hardware carry-less multiply path is in use.
pub fn has_hardware_clmul() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("pclmulqdq")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_clmul(a: u64, b: u64) -> u128 {
        (0..64)
            .filter(|i| (b >> i) & 1 == 1)
            .fold(0u128, |acc, i| acc ^ ((a as u128) << i))
    }

    fn poly_mod(mut a: u128, m: u128) -> u128 {
        let dm = 127 - m.leading_zeros();
        while a != 0 && 127 - a.leading_zeros() >= dm {
            let da = 127 - a.leading_zeros();
            a ^= m << (da - dm);
        }
        a
    }

    fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            let r = poly_mod(a, b);
            a = b;
            b = r;
        }
        a
    }

    /// x^(2^j) in the field, by repeated squaring of the element `x`.
    fn frobenius_of_x(f: &Gf2Field, j: u32) -> u64 {
        (0..j).fold(2u64, |e, _| f.mul(e, e))
    }

    #[test]
    fn small_fields_have_inverses() {
        for w in [2, 4, 8, 16] {
            let f = Gf2Field::new(w).unwrap();
            let q = 1u128 << w;
            for a in 1..(1u64 << w) {
                // a^(q-1) = 1 for all nonzero a iff the multiplicative group has order q-1.
                assert_eq!(f.pow(a, q - 1), 1, "w={w} a={a}");
            }
        }
    }

    #[test]
    fn wide_moduli_pass_rabin_test() {
        // w is a power of two, so the only prime divisor to check is 2.
        for w in [2u32, 4, 8, 16, 32, 64] {
            let f = Gf2Field::new(w).unwrap();
            assert_eq!(frobenius_of_x(&f, w), 2, "x^(2^w) != x for w={w}");
            let half = frobenius_of_x(&f, w / 2) as u128 ^ 2;
            assert_eq!(poly_gcd(f.modulus(), half), 1, "w={w}");
        }
    }

    #[test]
    fn domain_selection() {
        assert_eq!(Gf2Field::for_domain(4).unwrap().width(), 2);
        assert_eq!(Gf2Field::for_domain(16).unwrap().width(), 4);
        assert_eq!(Gf2Field::for_domain(17).unwrap().width(), 8);
        assert_eq!(Gf2Field::for_domain(1 << 20).unwrap().width(), 32);
        assert!(Gf2Field::new(3).is_err());
    }

    proptest! {
        #[test]
        fn clmul_paths_agree(a: u64, b: u64) {
            let n = naive_clmul(a, b);
            prop_assert_eq!(clmul_soft(a, b), n);
            prop_assert_eq!(clmul(a, b), n);
        }

        #[test]
        fn gf64_is_a_commutative_ring(a: u64, b: u64, c: u64) {
            let f = Gf2Field::new(64).unwrap();
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
            prop_assert_eq!(f.mul(a, 1), a);
        }

        #[test]
        fn reduction_matches_long_division(a: u64, b: u64) {
            let f = Gf2Field::new(64).unwrap();
            prop_assert_eq!(f.mul(a, b) as u128, poly_mod(naive_clmul(a, b), f.modulus()));
        }
    }
}
