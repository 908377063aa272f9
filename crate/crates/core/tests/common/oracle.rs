//! Exhaustive reference computations for tiny instances.
//!
//! Everything here works on plain symbol vectors so it shares no code with the
//! trellis decoder it checks.

#![allow(dead_code)]

/// IDS channel restricted to at most `cap` insertions per channel state.
#[derive(Debug, Clone, Copy)]
pub struct CappedIds {
    pub p_ins: f64,
    pub p_del: f64,
    pub p_sub: f64,
    pub q: usize,
    pub cap: usize,
    /// Divide deletion/transmission by `1 - p_ins` after the last allowed insertion.
    pub renormalize: bool,
}

impl CappedIds {
    /// Sum over every event sequence turning `x` into exactly `y`.
    pub fn p_read(&self, x: &[u8], y: &[u8]) -> f64 {
        self.rec(x, y, 0)
    }

    fn rec(&self, x: &[u8], y: &[u8], inserted: usize) -> f64 {
        if x.is_empty() {
            return if y.is_empty() { 1.0 } else { 0.0 };
        }
        let q = self.q as f64;
        let p_trans = 1.0 - self.p_ins - self.p_del;
        let (pi, pd, pt) = if inserted == self.cap {
            let r = if self.renormalize { 1.0 - self.p_ins } else { 1.0 };
            (0.0, self.p_del / r, p_trans / r)
        } else {
            (self.p_ins, self.p_del, p_trans)
        };
        let mut total = 0.0;
        if pd > 0.0 {
            total += pd * self.rec(&x[1..], y, 0);
        }
        if let Some((&first, rest)) = y.split_first() {
            if pi > 0.0 {
                total += pi / q * self.rec(x, rest, inserted + 1);
            }
            let e = if first == x[0] {
                1.0 - self.p_sub
            } else {
                self.p_sub / (q - 1.0)
            };
            if pt * e > 0.0 {
                total += pt * e * self.rec(&x[1..], rest, 0);
            }
        }
        total
    }
}

/// Every sequence of `len` symbols over `0..q`, in lexicographic order.
pub fn all_sequences(len: usize, q: usize) -> Vec<Vec<u8>> {
    let count = q.pow(len as u32);
    (0..count)
        .map(|mut c| {
            let mut s = vec![0u8; len];
            for slot in s.iter_mut().rev() {
                *slot = (c % q) as u8;
                c /= q;
            }
            s
        })
        .collect()
}

/// Exhaustive Bayes quantities for a uniform message set.
#[derive(Debug, Clone)]
pub struct Exhaustive {
    /// `p(y)` with all reads.
    pub p_y: f64,
    /// `p(w, y)` per candidate, in input order.
    pub joint: Vec<f64>,
    /// `p(w_i = a | y)` per position `i` and label `a`.
    pub app: Vec<Vec<f64>>,
}

/// `candidates` lists every outer sequence `w` with its channel input `x`; all
/// are equally likely. `reads` are independent channel outputs of the same `x`.
pub fn exhaustive(
    channel: &CappedIds,
    candidates: &[(Vec<u16>, Vec<u8>)],
    labels: usize,
    reads: &[Vec<u8>],
) -> Exhaustive {
    let prior = 1.0 / candidates.len() as f64;
    let positions = candidates[0].0.len();
    let joint: Vec<f64> = candidates
        .iter()
        .map(|(_, x)| prior * reads.iter().map(|y| channel.p_read(x, y)).product::<f64>())
        .collect();
    let p_y: f64 = joint.iter().sum();
    let mut app = vec![vec![0.0; labels]; positions];
    for ((w, _), pj) in candidates.iter().zip(&joint) {
        for (i, &a) in w.iter().enumerate() {
            app[i][a as usize] += pj / p_y;
        }
    }
    Exhaustive { p_y, joint, app }
}

/// Maximum-likelihood choice among `candidates` given per-position likelihoods
/// `lik[i][a] = p(observation_i | w_i = a)`.
pub fn ml_codeword<'a>(candidates: &'a [Vec<u16>], lik: &[Vec<f64>]) -> &'a [u16] {
    let score = |w: &Vec<u16>| -> f64 { w.iter().enumerate().map(|(i, &a)| lik[i][a as usize].ln()).sum() };
    candidates
        .iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)))
        .expect("at least one candidate")
}
