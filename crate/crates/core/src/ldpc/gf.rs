//! Arithmetic in GF(2^k) through log/antilog tables.

use crate::error::{Error, Result};

/// Primitive polynomials indexed by `k`, bit `i` holding the coefficient of `x^i`.
const PRIMITIVE: [u32; 9] = [0, 0b11, 0b111, 0b1011, 0b10011, 0b100101, 0b1000011, 0b10001001, 0b100011101];

/// The field GF(2^k), `1 <= k <= 8`. Elements are integers whose bits are the
/// polynomial coefficients; GF(16) uses `x^4 + x + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf {
    bits: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Gf {
    pub fn new(bits: usize) -> Result<Self> {
        if !(1..=8).contains(&bits) {
            return Err(Error::param("field_bits", format!("{bits} is outside 1..=8")));
        }
        let order = 1usize << bits;
        let poly = PRIMITIVE[bits];
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order];
        let mut a = 1u32;
        for i in 0..order - 1 {
            exp[i] = a as u16;
            log[a as usize] = i as u16;
            a <<= 1;
            if a & (1 << bits) != 0 {
                a ^= poly;
            }
        }
        for i in order - 1..2 * order {
            exp[i] = exp[i - (order - 1)];
        }
        Ok(Gf { bits, exp, log })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Number of field elements `2^k`.
    pub fn order(&self) -> usize {
        1 << self.bits
    }

    pub fn primitive_polynomial(&self) -> u32 {
        PRIMITIVE[self.bits]
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    pub fn inv(&self, a: u16) -> Result<u16> {
        if a == 0 {
            return Err(Error::param("a", "zero has no inverse"));
        }
        Ok(self.exp[(self.order() - 1 - self.log[a as usize] as usize) % (self.order() - 1)])
    }

    pub fn div(&self, a: u16, b: u16) -> Result<u16> {
        Ok(self.mul(a, self.inv(b)?))
    }
}
