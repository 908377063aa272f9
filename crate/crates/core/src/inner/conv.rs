//! Feed-forward binary convolutional code whose output bits are packed into q-ary symbols.

use crate::error::{Error, Result};

/// Rate-1/g binary convolutional code with generators given in octal.
///
/// The register holds `(u_t, u_{t-1}, .., u_{t-m})` with the current input in the
/// most significant bit; generator bit `m - j` taps `u_{t-j}`. The `g` output bits
/// of each step are packed most-significant-first into `g / log2(q)` symbols, so
/// for `q = 4` and two generators the bit pair `(b1, b2)` becomes `2 b1 + b2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCode {
    generators: Vec<u32>,
    memory: usize,
    bits_per_symbol: usize,
}

impl ConvCode {
    /// `generators_octal` are read as octal literals, e.g. `[5, 7]` for `[101, 111]`.
    pub fn new(generators_octal: &[u32], q: usize) -> Result<Self> {
        if !q.is_power_of_two() || q < 2 {
            return Err(Error::param("q", "convolutional inner code needs q = 2^b"));
        }
        let bits_per_symbol = q.trailing_zeros() as usize;
        if generators_octal.is_empty() || generators_octal.len() % bits_per_symbol != 0 {
            return Err(Error::param(
                "generators",
                format!(
                    "{} generators cannot be packed into {bits_per_symbol}-bit symbols",
                    generators_octal.len()
                ),
            ));
        }
        let mut generators = Vec::with_capacity(generators_octal.len());
        for &g in generators_octal {
            generators.push(octal_to_binary(g)?);
        }
        let memory = generators
            .iter()
            .map(|g| 31 - g.leading_zeros() as usize)
            .max()
            .unwrap_or(0);
        if memory > 12 {
            return Err(Error::param("generators", "memory above 12 is not supported"));
        }
        Ok(ConvCode {
            generators,
            memory,
            bits_per_symbol,
        })
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    /// Output q-ary symbols per input bit.
    pub fn n(&self) -> usize {
        self.generators.len() / self.bits_per_symbol
    }

    /// Generators in octal notation.
    pub fn generators_octal(&self) -> Vec<u32> {
        self.generators
            .iter()
            .map(|&g| {
                let mut out = 0;
                let mut scale = 1;
                let mut rest = g;
                while rest > 0 {
                    out += (rest & 7) * scale;
                    scale *= 10;
                    rest >>= 3;
                }
                out
            })
            .collect()
    }

    /// Output symbols and next state for input `bit` from `state`.
    pub fn step(&self, state: usize, bit: u8, out: &mut Vec<u8>) -> usize {
        let reg = ((bit as u32 & 1) << self.memory) | state as u32;
        for chunk in self.generators.chunks(self.bits_per_symbol) {
            let mut sym = 0u8;
            for &g in chunk {
                sym = (sym << 1) | ((g & reg).count_ones() & 1) as u8;
            }
            out.push(sym);
        }
        (reg >> 1) as usize
    }

    /// Encodes `bits` and appends `memory` zero inputs so the encoder ends in state 0.
    pub fn encode_terminated(&self, bits: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity((bits.len() + self.memory) * self.n());
        let mut state = 0;
        for &b in bits.iter().chain(std::iter::repeat(&0).take(self.memory)) {
            state = self.step(state, b, &mut out);
        }
        debug_assert_eq!(state, 0);
        out
    }
}

fn octal_to_binary(g: u32) -> Result<u32> {
    let mut value = 0u32;
    let mut scale = 1u32;
    let mut rest = g;
    while rest > 0 {
        let digit = rest % 10;
        if digit > 7 {
            return Err(Error::param("generators", format!("{g} is not an octal literal")));
        }
        value += digit * scale;
        scale *= 8;
        rest /= 10;
    }
    if value == 0 {
        return Err(Error::param("generators", "zero generator"));
    }
    Ok(value)
}
