//! Sum-product decoding over GF(2^k) with Walsh-Hadamard check updates.

use super::code::LdpcCode;

/// Output of [`decode_bp`].
#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput {
    /// `p(w_v | everything)` per variable.
    pub posteriors: Vec<Vec<f64>>,
    /// Product of the incoming check messages, normalized; uniform when no
    /// iteration ran.
    pub extrinsic: Vec<Vec<f64>>,
    pub hard: Vec<u16>,
    pub converged: bool,
    pub iterations: usize,
}

/// In-place unnormalized Walsh-Hadamard transform; applying it twice scales by `len`.
fn wht(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Clamps rounding residue and normalizes; falls back to uniform on zero mass.
fn normalize(v: &mut [f64]) {
    let mut sum = 0.0;
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
        sum += *x;
    }
    if sum > 0.0 && sum.is_finite() {
        let inv = 1.0 / sum;
        v.iter_mut().for_each(|x| *x *= inv);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

fn argmax(v: &[f64]) -> u16 {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best as u16
}

/// Belief propagation with flooding schedule.
///
/// Stops as soon as the hard decision satisfies every check, which is tested
/// before the first iteration too, so codeword point masses return after zero
/// iterations.
pub fn decode_bp(code: &LdpcCode, priors: &[Vec<f64>], max_iter: usize) -> BpOutput {
    let q = code.order();
    let n = code.len();
    assert_eq!(priors.len(), n, "one prior per code symbol");
    let gf = &code.gf;
    let edges = &code.edges;
    let mut priors: Vec<Vec<f64>> = priors.to_vec();
    priors.iter_mut().for_each(|p| normalize(p));
    // mul_table[h][a] = h * a
    let mul_table: Vec<Vec<usize>> = (0..q as u16)
        .map(|h| (0..q as u16).map(|a| gf.mul(h, a) as usize).collect())
        .collect();
    let mut v2c: Vec<Vec<f64>> = edges.iter().map(|e| priors[e.var].clone()).collect();
    let mut c2v: Vec<Vec<f64>> = vec![vec![1.0 / q as f64; q]; edges.len()];
    let mut hard: Vec<u16> = priors.iter().map(|p| argmax(p)).collect();
    let mut posteriors = priors.clone();
    let mut extrinsic = vec![vec![1.0 / q as f64; q]; n];
    let mut iterations = 0;
    let mut converged = code.is_codeword(&hard);
    let mut spectra: Vec<Vec<f64>> = Vec::new();
    let mut prefix = vec![0.0; q];
    while !converged && iterations < max_iter {
        iterations += 1;
        for c in 0..code.num_checks() {
            let range = code.check_start[c]..code.check_start[c + 1];
            let deg = range.len();
            spectra.resize(deg, vec![0.0; q]);
            for (k, e) in range.clone().enumerate() {
                let s = &mut spectra[k];
                s.iter_mut().for_each(|x| *x = 0.0);
                let m = &mul_table[edges[e].label as usize];
                for (a, &p) in v2c[e].iter().enumerate() {
                    s[m[a]] += p;
                }
                wht(s);
            }
            for (k, e) in range.clone().enumerate() {
                prefix.iter_mut().for_each(|x| *x = 1.0);
                for (j, s) in spectra.iter().take(deg).enumerate() {
                    if j != k {
                        for (p, &x) in prefix.iter_mut().zip(s) {
                            *p *= x;
                        }
                    }
                }
                wht(&mut prefix);
                // prefix[z] is now proportional to p(h_e w_e = z)
                let m = &mul_table[edges[e].label as usize];
                let out = &mut c2v[e];
                for a in 0..q {
                    out[a] = prefix[m[a]];
                }
                normalize(out);
            }
        }
        for v in 0..n {
            let es = &code.var_edges[v];
            let ext = &mut extrinsic[v];
            ext.iter_mut().for_each(|x| *x = 1.0);
            for &e in es {
                for (x, &m) in ext.iter_mut().zip(&c2v[e]) {
                    *x *= m;
                }
            }
            normalize(ext);
            let post = &mut posteriors[v];
            for ((p, &x), &pr) in post.iter_mut().zip(ext.iter()).zip(&priors[v]) {
                *p = x * pr;
            }
            normalize(post);
            hard[v] = argmax(post);
            for &e in es {
                let out = &mut v2c[e];
                out.copy_from_slice(&priors[v]);
                for &f in es {
                    if f != e {
                        for (x, &m) in out.iter_mut().zip(&c2v[f]) {
                            *x *= m;
                        }
                    }
                }
                normalize(out);
            }
        }
        converged = code.is_codeword(&hard);
    }
    BpOutput {
        posteriors,
        extrinsic,
        hard,
        converged,
        iterations,
    }
}
