//! Edit-lattice branch metrics for one block of channel inputs.

use crate::channel::ChannelParams;

/// Per-symbol emission weights of the insertion-capped channel.
///
/// A channel state emits `r <= cap` inserted symbols followed by either nothing
/// (deletion) or one symbol (transmission). Paths with more insertions are
/// dropped. With `renormalize`, the deletion and transmission probabilities after
/// the `cap`-th insertion are divided by `1 - p_ins` instead, which turns the
/// capped channel into a proper distribution.
#[derive(Debug, Clone)]
pub struct SymbolKernel {
    /// `del[r]`: weight of emitting exactly the `r` inserted symbols and deleting.
    del: Vec<f64>,
    /// `trans[r]`: weight of `r` inserted symbols followed by a transmission, before the
    /// match/substitution factor of the last emitted symbol. `trans[0]` is unused.
    trans: Vec<f64>,
    p_match: f64,
    p_mismatch: f64,
    cap: usize,
}

impl SymbolKernel {
    pub fn new(params: &ChannelParams, cap: usize, renormalize: bool) -> Self {
        let q = params.alphabet_size as f64;
        let ins = params.p_ins / q;
        let renorm = 1.0 - params.p_ins;
        let mut del = Vec::with_capacity(cap + 1);
        let mut trans = vec![0.0; cap + 2];
        let mut weight = 1.0;
        for r in 0..=cap {
            let (pd, pt) = if r == cap && renormalize {
                (params.p_del / renorm, params.p_trans() / renorm)
            } else {
                (params.p_del, params.p_trans())
            };
            del.push(weight * pd);
            trans[r + 1] = weight * pt;
            weight *= ins;
        }
        SymbolKernel {
            del,
            trans,
            p_match: 1.0 - params.p_sub,
            p_mismatch: params.p_sub / (q - 1.0),
            cap,
        }
    }

    /// Largest number of output symbols one input symbol can produce.
    pub fn max_emission(&self) -> usize {
        self.cap + 1
    }

    /// Weight of input symbol `x` producing exactly `z`.
    #[inline]
    pub fn weight(&self, x: u8, z: &[u8]) -> f64 {
        let len = z.len();
        let mut w = if len <= self.cap { self.del[len] } else { 0.0 };
        if len >= 1 && len <= self.cap + 1 {
            let e = if z[len - 1] == x {
                self.p_match
            } else {
                self.p_mismatch
            };
            w += self.trans[len] * e;
        }
        w
    }
}

/// Probability of `block` producing each prefix of `y`.
///
/// On return `out[l]` is the probability that the channel turns `block` into
/// exactly `y[..l]`, for `l` up to `out.len() - 1`; entries beyond `y.len()` are
/// zero. `scratch` must have the same length as `out`.
pub fn block_lattice(block: &[u8], y: &[u8], kernel: &SymbolKernel, out: &mut [f64], scratch: &mut [f64]) {
    let width = out.len();
    let avail = y.len().min(width - 1);
    out.iter_mut().for_each(|v| *v = 0.0);
    out[0] = 1.0;
    let mut reach = 0usize;
    let emit = kernel.max_emission();
    for &x in block {
        scratch.iter_mut().for_each(|v| *v = 0.0);
        let mut next_reach = 0;
        for l in 0..=reach {
            let f = out[l];
            if f == 0.0 {
                continue;
            }
            let top = emit.min(avail - l.min(avail));
            for len in 0..=top {
                let w = kernel.weight(x, &y[l..l + len]);
                if w != 0.0 {
                    scratch[l + len] += f * w;
                    next_reach = next_reach.max(l + len);
                }
            }
        }
        reach = next_reach;
        out.copy_from_slice(scratch);
    }
}

/// `p(y_segment, d' | d, block)` for a block that starts at drift `d` and ends at
/// drift `d'`; zero when the segment length does not equal `n + d' - d`.
pub fn branch_metric(
    block: &[u8],
    y_segment: &[u8],
    d: i64,
    d_next: i64,
    params: &ChannelParams,
    insertion_cap: usize,
) -> f64 {
    let expected = block.len() as i64 + d_next - d;
    if expected != y_segment.len() as i64 {
        return 0.0;
    }
    let kernel = SymbolKernel::new(params, insertion_cap, false);
    let width = block.len() * kernel.max_emission() + 1;
    if y_segment.len() >= width {
        return 0.0;
    }
    let mut out = vec![0.0; width];
    let mut scratch = vec![0.0; width];
    block_lattice(block, y_segment, &kernel, &mut out, &mut scratch);
    out[y_segment.len()]
}
