//! Scaled forward/backward recursions over the joint (code state, drift tuple) space.

use std::borrow::Cow;
use std::f64::consts::LN_2;
use std::io::{self, Write};

use super::{block_lattice, Observation, TrellisSpec};
use crate::error::{DecodeFailure, Error, Result};

/// Shape of the joint state space of one trellis.
#[derive(Debug, Clone, Copy)]
struct Dims {
    /// Drift values per read.
    width: usize,
    reads: usize,
    /// Drift tuples per code state, `width^reads`.
    block: usize,
    /// Possible output lengths of one block.
    lattice: usize,
    n: usize,
    states: usize,
}

impl Dims {
    fn new(spec: &TrellisSpec, obs: &Observation) -> Self {
        let width = spec.drift_width();
        let reads = obs.num_reads();
        Dims {
            width,
            reads,
            block: width.pow(reads as u32),
            lattice: spec.lattice_width(),
            n: spec.n,
            states: spec.num_states,
        }
    }

    fn cells(&self) -> usize {
        self.states * self.block
    }

    /// Flat index of the drift tuple with every read at drift zero.
    fn origin(&self) -> usize {
        let centre = self.width / 2;
        (0..self.reads).map(|j| centre * self.width.pow(j as u32)).sum()
    }

    fn tuple_index(&self, per_read: &[usize]) -> usize {
        per_read
            .iter()
            .enumerate()
            .map(|(j, &d)| d * self.width.pow(j as u32))
            .sum()
    }
}

/// Branch metrics of one step: for each read a `[word][drift][output length]` array.
#[derive(Debug, Clone)]
pub(crate) struct StepGamma {
    per_read: Vec<Vec<f64>>,
}

impl StepGamma {
    fn compute(spec: &TrellisSpec, obs: &Observation, step: usize, needed: Option<&[bool]>) -> Self {
        let st = &spec.steps[step];
        let width = spec.drift_width();
        let lw = spec.lattice_width();
        let window = spec.window as i64;
        let mut scratch = vec![0.0; lw];
        let per_read = obs
            .reads
            .iter()
            .map(|y| {
                let mut g = vec![0.0; st.words.len() * width * lw];
                for (w, word) in st.words.iter().enumerate() {
                    if needed.is_some_and(|m| !m[w]) {
                        continue;
                    }
                    for di in 0..width {
                        let start = (step * spec.n) as i64 + di as i64 - window;
                        if start < 0 || start as usize > y.len() {
                            continue;
                        }
                        let at = (w * width + di) * lw;
                        block_lattice(
                            word,
                            &y[start as usize..],
                            &spec.kernel,
                            &mut g[at..at + lw],
                            &mut scratch,
                        );
                    }
                }
                g
            })
            .collect();
        StepGamma { per_read }
    }

    fn word(&self, read: usize, word: usize, dims: &Dims) -> &[f64] {
        let len = dims.width * dims.lattice;
        &self.per_read[read][word * len..(word + 1) * len]
    }
}

/// Branch metrics of every step of a frame, reused across decoding passes.
#[derive(Debug, Clone)]
pub struct BranchMetrics {
    steps: Vec<StepGamma>,
}

impl BranchMetrics {
    pub fn compute(spec: &TrellisSpec, obs: &Observation) -> Self {
        BranchMetrics {
            steps: (0..spec.num_steps())
                .map(|i| StepGamma::compute(spec, obs, i, None))
                .collect(),
        }
    }
}

fn step_gamma<'a>(
    spec: &TrellisSpec,
    obs: &Observation,
    cached: Option<&'a BranchMetrics>,
    step: usize,
    needed: Option<&[bool]>,
) -> Cow<'a, StepGamma> {
    match cached {
        Some(m) => Cow::Borrowed(&m.steps[step]),
        None => Cow::Owned(StepGamma::compute(spec, obs, step, needed)),
    }
}

/// Accumulates `factor * G src` (or `factor * G^T src`) along one read's drift axis
/// into `dst`. `g` is the `[drift][output length]` table of one block word.
fn apply_axis(src: &[f64], dst: &mut [f64], dims: &Dims, axis: usize, g: &[f64], transpose: bool, factor: f64) {
    let w = dims.width;
    let lw = dims.lattice;
    let n = dims.n;
    let stride = w.pow(axis as u32);
    let outer = dims.block / (w * stride);
    let scalar = outer * stride == 1;
    for d in 0..w {
        if scalar && !transpose && src[d] == 0.0 {
            continue;
        }
        let row = &g[d * lw..(d + 1) * lw];
        let lo = n.saturating_sub(d);
        let hi = lw.min(w + n - d);
        for (l, &gv) in row.iter().enumerate().take(hi).skip(lo) {
            if gv == 0.0 {
                continue;
            }
            let gv = gv * factor;
            let dn = d + l - n;
            let (from, to) = if transpose { (dn, d) } else { (d, dn) };
            if scalar {
                dst[to] += gv * src[from];
                continue;
            }
            for o in 0..outer {
                let base = o * w * stride;
                let s = &src[base + from * stride..base + (from + 1) * stride];
                let t = &mut dst[base + to * stride..base + (to + 1) * stride];
                for (t, s) in t.iter_mut().zip(s) {
                    *t += gv * s;
                }
            }
        }
    }
}

/// Workspace for multi-read transfers.
struct Transfer {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Transfer {
    fn new(dims: &Dims) -> Self {
        let len = if dims.reads > 1 { dims.block } else { 0 };
        Transfer {
            a: vec![0.0; len],
            b: vec![0.0; len],
        }
    }

    /// `dst += factor * (G_M ⊗ .. ⊗ G_1) src`, or the transposed map.
    fn apply(
        &mut self,
        src: &[f64],
        dst: &mut [f64],
        dims: &Dims,
        gamma: &StepGamma,
        word: usize,
        transpose: bool,
        factor: f64,
    ) {
        if dims.reads == 1 {
            apply_axis(src, dst, dims, 0, gamma.word(0, word, dims), transpose, factor);
            return;
        }
        self.a.iter_mut().for_each(|v| *v = 0.0);
        apply_axis(src, &mut self.a, dims, 0, gamma.word(0, word, dims), transpose, 1.0);
        for axis in 1..dims.reads - 1 {
            self.b.iter_mut().for_each(|v| *v = 0.0);
            apply_axis(&self.a, &mut self.b, dims, axis, gamma.word(axis, word, dims), transpose, 1.0);
            std::mem::swap(&mut self.a, &mut self.b);
        }
        let last = dims.reads - 1;
        apply_axis(&self.a, dst, dims, last, gamma.word(last, word, dims), transpose, factor);
    }
}

fn check_priors(spec: &TrellisSpec, priors: &[Vec<f64>]) -> Result<()> {
    if priors.len() != spec.outer_len {
        return Err(Error::param(
            "priors",
            format!("expected {} distributions, got {}", spec.outer_len, priors.len()),
        ));
    }
    if priors.iter().any(|p| p.len() != spec.labels) {
        return Err(Error::param("priors", format!("each prior needs {} entries", spec.labels)));
    }
    Ok(())
}

fn branch_prior(spec: &TrellisSpec, priors: &[Vec<f64>], constraint: Option<&[u16]>, step: usize, label: usize) -> f64 {
    if step >= spec.outer_len {
        return 1.0;
    }
    if let Some(w) = constraint {
        if w[step] as usize != label {
            return 0.0;
        }
    }
    priors[step][label]
}

/// Normalizes `v` to unit sum and returns the natural log of the removed factor.
fn normalize(v: &mut [f64], step: usize) -> Result<f64> {
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::DecodeFailure(DecodeFailure::ZeroMass { step }));
    }
    let inv = 1.0 / sum;
    v.iter_mut().for_each(|x| *x *= inv);
    Ok(sum.ln())
}

/// Normalized forward slices `α̂_i` and cumulative log scale factors.
///
/// The unnormalized `α_i(σ) = p(y_1^{i n + d}, σ)` equals `α̂_i(σ) exp(log_scale[i])`.
#[derive(Debug, Clone)]
pub struct ForwardTable {
    slices: Vec<Vec<f64>>,
    log_scales: Vec<f64>,
    dims_width: usize,
    reads: usize,
    states: usize,
}

/// Normalized backward slices `β̂_i` and cumulative log scale factors.
#[derive(Debug, Clone)]
pub struct BackwardTable {
    slices: Vec<Vec<f64>>,
    log_scales: Vec<f64>,
}

impl ForwardTable {
    pub fn num_slices(&self) -> usize {
        self.log_scales.len()
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        &self.slices[i]
    }

    /// Natural-log scale factor of slice `i`.
    pub fn log_scale(&self, i: usize) -> f64 {
        self.log_scales[i]
    }

    /// `ln Σ_σ α_i(σ) β_i(σ)`, which equals `ln p(y)` for every `i`.
    pub fn log_joint_mass(&self, beta: &BackwardTable, i: usize) -> f64 {
        let dot: f64 = self.slices[i].iter().zip(&beta.slices[i]).map(|(a, b)| a * b).sum();
        dot.ln() + self.log_scales[i] + beta.log_scales[i]
    }

    /// Writes every slice as `step state drift.. value` lines (nonzero entries only).
    pub fn dump(&self, out: &mut impl Write) -> io::Result<()> {
        let w = self.dims_width;
        let half = (w / 2) as i64;
        let block = w.pow(self.reads as u32);
        writeln!(out, "# step state drifts alpha_hat log_scale")?;
        for (i, slice) in self.slices.iter().enumerate() {
            for s in 0..self.states {
                for t in 0..block {
                    let v = slice[s * block + t];
                    if v == 0.0 {
                        continue;
                    }
                    write!(out, "{i} {s}")?;
                    let mut rest = t;
                    for _ in 0..self.reads {
                        write!(out, " {}", (rest % w) as i64 - half)?;
                        rest /= w;
                    }
                    writeln!(out, " {v:.6e} {:.6}", self.log_scales[i])?;
                }
            }
        }
        Ok(())
    }
}

impl BackwardTable {
    pub fn num_slices(&self) -> usize {
        self.log_scales.len()
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        &self.slices[i]
    }

    pub fn log_scale(&self, i: usize) -> f64 {
        self.log_scales[i]
    }
}

pub(crate) struct ForwardRun {
    pub table: ForwardTable,
    pub log2_mass: f64,
}

/// Forward recursion. With `constraint`, only branches labelled `w_i` survive at
/// step `i`, giving `p(w, y)` instead of `p(y)`.
pub(crate) fn forward(
    spec: &TrellisSpec,
    obs: &Observation,
    priors: &[Vec<f64>],
    constraint: Option<&[u16]>,
    cached: Option<&BranchMetrics>,
    keep: bool,
) -> Result<ForwardRun> {
    check_priors(spec, priors)?;
    if let Some(w) = constraint {
        if w.len() != spec.outer_len || w.iter().any(|&s| s as usize >= spec.labels) {
            return Err(Error::param("w", "constraint sequence does not fit the trellis"));
        }
    }
    let dims = Dims::new(spec, obs);
    let mut alpha = vec![0.0; dims.cells()];
    alpha[dims.origin()] = 1.0;
    let mut log_scale = 0.0;
    let mut slices = Vec::new();
    let mut log_scales = Vec::with_capacity(spec.num_steps() + 1);
    log_scales.push(0.0);
    let mut transfer = Transfer::new(&dims);
    let mut next = vec![0.0; dims.cells()];
    for (i, step) in spec.steps.iter().enumerate() {
        let needed: Option<Vec<bool>> = constraint.map(|_| {
            let mut mask = vec![false; step.words.len()];
            for b in &step.branches {
                if branch_prior(spec, priors, constraint, i, b.label) != 0.0 {
                    mask[b.word] = true;
                }
            }
            mask
        });
        let gamma = step_gamma(spec, obs, cached, i, needed.as_deref());
        next.iter_mut().for_each(|v| *v = 0.0);
        for b in &step.branches {
            let p = branch_prior(spec, priors, constraint, i, b.label);
            if p == 0.0 {
                continue;
            }
            let src = &alpha[b.from * dims.block..(b.from + 1) * dims.block];
            let dst = &mut next[b.to * dims.block..(b.to + 1) * dims.block];
            transfer.apply(src, dst, &dims, &gamma, b.word, false, p);
        }
        log_scale += normalize(&mut next, i + 1)?;
        std::mem::swap(&mut alpha, &mut next);
        if keep {
            if slices.is_empty() {
                let mut first = vec![0.0; dims.cells()];
                first[dims.origin()] = 1.0;
                slices.push(first);
            }
            slices.push(alpha.clone());
        }
        log_scales.push(log_scale);
    }
    let end = dims.tuple_index(&obs.final_index);
    let mass: f64 = (0..dims.states).map(|s| alpha[s * dims.block + end]).sum();
    if !(mass > 0.0) {
        return Err(Error::DecodeFailure(DecodeFailure::ZeroMass {
            step: spec.num_steps(),
        }));
    }
    let log2_mass = (mass.ln() + log_scale) / LN_2;
    Ok(ForwardRun {
        table: ForwardTable {
            slices,
            log_scales,
            dims_width: dims.width,
            reads: dims.reads,
            states: dims.states,
        },
        log2_mass,
    })
}

/// Backward recursion from the pinned final drift. When `alpha` is supplied, also
/// returns, for every outer step, the per-label sums `Σ α̂_i γ β̂_{i+1}` without the
/// prior factor (proportional to the extrinsic distribution).
pub(crate) fn backward(
    spec: &TrellisSpec,
    obs: &Observation,
    priors: &[Vec<f64>],
    alpha: Option<&ForwardTable>,
    cached: Option<&BranchMetrics>,
) -> Result<(BackwardTable, Vec<Vec<f64>>)> {
    check_priors(spec, priors)?;
    let dims = Dims::new(spec, obs);
    let steps = spec.num_steps();
    let mut beta = vec![0.0; dims.cells()];
    let end = dims.tuple_index(&obs.final_index);
    for s in 0..dims.states {
        beta[s * dims.block + end] = 1.0;
    }
    let mut log_scale = normalize(&mut beta, steps)?;
    let mut slices = vec![Vec::new(); steps + 1];
    let mut log_scales = vec![0.0; steps + 1];
    slices[steps] = beta.clone();
    log_scales[steps] = log_scale;
    let mut ext = vec![vec![0.0; spec.labels]; if alpha.is_some() { spec.outer_len } else { 0 }];
    let mut transfer = Transfer::new(&dims);
    let mut prev = vec![0.0; dims.cells()];
    let mut u = vec![0.0; dims.block];
    for i in (0..steps).rev() {
        let step = &spec.steps[i];
        let gamma = step_gamma(spec, obs, cached, i, None);
        prev.iter_mut().for_each(|v| *v = 0.0);
        for b in &step.branches {
            let p = branch_prior(spec, priors, None, i, b.label);
            let want_ext = alpha.is_some() && i < spec.outer_len;
            if p == 0.0 && !want_ext {
                continue;
            }
            u.iter_mut().for_each(|v| *v = 0.0);
            let src = &beta[b.to * dims.block..(b.to + 1) * dims.block];
            transfer.apply(src, &mut u, &dims, &gamma, b.word, true, 1.0);
            let dst = &mut prev[b.from * dims.block..(b.from + 1) * dims.block];
            if p != 0.0 {
                for (d, v) in dst.iter_mut().zip(&u) {
                    *d += p * v;
                }
            }
            if let (true, Some(a)) = (want_ext, alpha) {
                let a = &a.slices[i][b.from * dims.block..(b.from + 1) * dims.block];
                ext[i][b.label] += a.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>();
            }
        }
        log_scale += normalize(&mut prev, i)?;
        std::mem::swap(&mut beta, &mut prev);
        slices[i] = beta.clone();
        log_scales[i] = log_scale;
    }
    Ok((BackwardTable { slices, log_scales }, ext))
}

/// APPs and extrinsic distributions of every outer symbol.
#[derive(Debug, Clone)]
pub struct Posteriors {
    /// `p(w_i | y)`.
    pub app: Vec<Vec<f64>>,
    /// `p(w_i | y) / p(w_i)`, renormalized.
    pub extrinsic: Vec<Vec<f64>>,
    pub log2_p_y: f64,
}

pub(crate) fn posteriors(
    spec: &TrellisSpec,
    obs: &Observation,
    priors: &[Vec<f64>],
    cached: Option<&BranchMetrics>,
) -> Result<Posteriors> {
    let fwd = forward(spec, obs, priors, None, cached, true)?;
    let (_, ext) = backward(spec, obs, priors, Some(&fwd.table), cached)?;
    let mut app = Vec::with_capacity(ext.len());
    let mut extrinsic = Vec::with_capacity(ext.len());
    for (i, e) in ext.into_iter().enumerate() {
        let mut a: Vec<f64> = e.iter().zip(&priors[i]).map(|(x, p)| x * p).collect();
        normalize(&mut a, i + 1)?;
        let mut e = e;
        normalize(&mut e, i + 1)?;
        app.push(a);
        extrinsic.push(e);
    }
    Ok(Posteriors {
        app,
        extrinsic,
        log2_p_y: fwd.log2_mass,
    })
}
