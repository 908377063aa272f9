//! Drift-augmented trellis of the inner code and the channel.
//!
//! A trellis step consumes one inner-code input symbol and produces a block of
//! `n` channel inputs. The hidden state is the code state together with the drift
//! of every read at the block boundary, so step `i` of read `j` emits the segment
//! `y_j[i n + d .. (i + 1) n + d']`. Branch metrics come from [`lattice`].
//!
//! Forward and backward recursions keep each slice normalized to unit sum and
//! accumulate the natural-log scale factors, so absolute log-probabilities are
//! recovered for long frames without underflow.

mod lattice;
mod recursion;

pub use lattice::{block_lattice, branch_metric, SymbolKernel};
pub use recursion::{BackwardTable, BranchMetrics, ForwardTable, Posteriors};

use crate::channel::{drift_std, ChannelParams, ReadSet};
use crate::error::{DecodeFailure, Error, Result};
use crate::inner::{add_offset, FrameLayout, InnerCode, InnerScheme};

/// Decoder-side modelling choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DecoderOptions {
    /// Maximum insertions per channel state considered by the decoder.
    pub insertion_cap: usize,
    /// Drift window half-width; `None` uses `ceil(5 * drift_std(N, p_del))`.
    pub window: Option<usize>,
    /// Renormalize deletion/transmission after the last allowed insertion instead
    /// of dropping longer insertion runs.
    pub renormalize_cap: bool,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        DecoderOptions {
            insertion_cap: 2,
            window: None,
            renormalize_cap: false,
        }
    }
}

/// Half-width of the drift window: five standard deviations of the final drift.
pub fn default_window(len: usize, params: &ChannelParams) -> usize {
    match drift_std(len, params.p_del) {
        Ok(sd) => (5.0 * sd).ceil() as usize,
        Err(_) => len,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Branch {
    pub from: usize,
    pub to: usize,
    pub label: usize,
    pub word: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct StepSpec {
    /// Distinct channel-input blocks of this step (offset already applied).
    pub words: Vec<Vec<u8>>,
    pub branches: Vec<Branch>,
}

/// The trellis of one frame layout; shared by every read and every decoding pass.
#[derive(Debug, Clone)]
pub struct TrellisSpec {
    pub n: usize,
    /// Channel alphabet size.
    pub q: usize,
    pub num_states: usize,
    /// Number of outer symbols `N_o`; later steps are termination steps.
    pub outer_len: usize,
    /// Outer alphabet size `q_o`.
    pub labels: usize,
    /// Transmitted length `N`.
    pub len: usize,
    pub window: usize,
    pub insertion_cap: usize,
    pub params: ChannelParams,
    pub(crate) steps: Vec<StepSpec>,
    pub(crate) kernel: SymbolKernel,
}

impl TrellisSpec {
    pub fn new(
        scheme: &InnerScheme,
        layout: &FrameLayout,
        outer_len: usize,
        params: &ChannelParams,
        options: &DecoderOptions,
    ) -> Result<Self> {
        params.validate()?;
        if params.alphabet_size != scheme.q {
            return Err(Error::param(
                "q",
                format!(
                    "channel alphabet {} differs from inner code alphabet {}",
                    params.alphabet_size, scheme.q
                ),
            ));
        }
        if outer_len == 0 {
            return Err(Error::param("outer_len", "must be positive"));
        }
        let n = scheme.n();
        let total_steps = scheme.steps(outer_len);
        let len = total_steps * n;
        if layout.offset.len() != len {
            return Err(Error::param("layout", "offset length does not match the frame"));
        }
        let mut steps = Vec::with_capacity(total_steps);
        match &scheme.code {
            InnerCode::Conv(cc) => {
                for i in 0..total_steps {
                    let inputs: &[u8] = if i < outer_len { &[0, 1] } else { &[0] };
                    let offset = &layout.offset[i * n..(i + 1) * n];
                    let mut step = StepSpec {
                        words: Vec::new(),
                        branches: Vec::new(),
                    };
                    for from in 0..cc.num_states() {
                        for &bit in inputs {
                            let mut out = Vec::with_capacity(n);
                            let to = cc.step(from, bit, &mut out);
                            let word = add_offset(&out, offset, scheme.q);
                            let idx = match step.words.iter().position(|w| *w == word) {
                                Some(idx) => idx,
                                None => {
                                    step.words.push(word);
                                    step.words.len() - 1
                                }
                            };
                            step.branches.push(Branch {
                                from,
                                to,
                                label: bit as usize,
                                word: idx,
                            });
                        }
                    }
                    steps.push(step);
                }
            }
            InnerCode::Block { codebooks, .. } => {
                if layout.pattern.len() != total_steps {
                    return Err(Error::param("layout", "pattern length does not match the frame"));
                }
                for (i, &book) in layout.pattern.iter().enumerate() {
                    let offset = &layout.offset[i * n..(i + 1) * n];
                    let cb = &codebooks[book];
                    let words: Vec<Vec<u8>> = cb
                        .entries()
                        .iter()
                        .map(|w| add_offset(w, offset, scheme.q))
                        .collect();
                    let branches = (0..words.len())
                        .map(|label| Branch {
                            from: 0,
                            to: 0,
                            label,
                            word: label,
                        })
                        .collect();
                    steps.push(StepSpec { words, branches });
                }
            }
        }
        let window = options.window.unwrap_or_else(|| default_window(len, params));
        Ok(TrellisSpec {
            n,
            q: scheme.q,
            num_states: scheme.num_states(),
            outer_len,
            labels: scheme.outer_alphabet(),
            len,
            window,
            insertion_cap: options.insertion_cap,
            params: *params,
            steps,
            kernel: SymbolKernel::new(params, options.insertion_cap, options.renormalize_cap),
        })
    }

    /// Trellis for the layout the scheme assigns to `frame_seed`.
    pub fn for_frame(
        scheme: &InnerScheme,
        outer_len: usize,
        frame_seed: u64,
        params: &ChannelParams,
        options: &DecoderOptions,
    ) -> Result<Self> {
        let layout = scheme.layout(outer_len, frame_seed);
        Self::new(scheme, &layout, outer_len, params, options)
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Number of drift values per read, `2 D + 1`.
    pub fn drift_width(&self) -> usize {
        2 * self.window + 1
    }

    /// Emission span of one block: `n (cap + 1) + 1` possible output lengths.
    pub(crate) fn lattice_width(&self) -> usize {
        self.n * (self.insertion_cap + 1) + 1
    }

    /// Channel-input block of `branch_label` leaving `state` at step `step`, if any.
    pub fn block(&self, step: usize, state: usize, label: usize) -> Option<&[u8]> {
        let s = self.steps.get(step)?;
        s.branches
            .iter()
            .find(|b| b.from == state && b.label == label)
            .map(|b| s.words[b.word].as_slice())
    }
}

/// Uniform distributions over `labels` symbols for `len` steps.
pub fn uniform_priors(len: usize, labels: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0 / labels as f64; labels]; len]
}

/// Received reads checked against a trellis.
#[derive(Debug, Clone)]
pub struct Observation {
    pub(crate) reads: Vec<Vec<u8>>,
    /// Final drift of each read as an index into the drift window.
    pub(crate) final_index: Vec<usize>,
}

impl Observation {
    /// Fails with [`DecodeFailure::DriftOverflow`] when a read's length implies a
    /// final drift outside the window.
    pub fn new(spec: &TrellisSpec, reads: &ReadSet) -> Result<Self> {
        if reads.is_empty() {
            return Err(Error::param("reads", "at least one read is required"));
        }
        let mut final_index = Vec::with_capacity(reads.len());
        for y in &reads.reads {
            let drift = y.len() as i64 - spec.len as i64;
            if drift.unsigned_abs() as usize > spec.window {
                return Err(Error::DecodeFailure(DecodeFailure::DriftOverflow));
            }
            final_index.push((drift + spec.window as i64) as usize);
        }
        let width = spec.drift_width();
        let cells = width
            .checked_pow(reads.len() as u32)
            .and_then(|c| c.checked_mul(spec.num_states))
            .filter(|&c| c <= 1 << 28)
            .ok_or_else(|| Error::param("reads", "joint drift state space is too large"))?;
        debug_assert!(cells > 0);
        Ok(Observation {
            reads: reads.reads.iter().map(|y| y.symbols().to_vec()).collect(),
            final_index,
        })
    }

    pub fn num_reads(&self) -> usize {
        self.reads.len()
    }
}

/// Forward recursion with the given priors; returns the table and `log2 p(y)`.
pub fn forward(spec: &TrellisSpec, reads: &ReadSet, priors: &[Vec<f64>]) -> Result<(ForwardTable, f64)> {
    let obs = Observation::new(spec, reads)?;
    recursion::forward(spec, &obs, priors, None, None, true)
        .map(|run| {
            let log2 = run.log2_mass;
            (run.table, log2)
        })
}

/// Backward recursion initialized at the pinned final drift(s).
pub fn backward(spec: &TrellisSpec, reads: &ReadSet, priors: &[Vec<f64>]) -> Result<BackwardTable> {
    let obs = Observation::new(spec, reads)?;
    recursion::backward(spec, &obs, priors, None, None).map(|(table, _)| table)
}

/// Per-step posterior distributions `p(w_i | y)`.
pub fn app(spec: &TrellisSpec, reads: &ReadSet, priors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let obs = Observation::new(spec, reads)?;
    recursion::posteriors(spec, &obs, priors, None).map(|p| p.app)
}

/// `log2 p(w, y)`: the forward recursion restricted to the branches labelled by `w`.
pub fn constrained_forward(spec: &TrellisSpec, reads: &ReadSet, w: &[u16]) -> Result<f64> {
    let obs = Observation::new(spec, reads)?;
    let priors = uniform_priors(spec.outer_len, spec.labels);
    recursion::forward(spec, &obs, &priors, Some(w), None, false).map(|run| run.log2_mass)
}

/// `log2 p(y)` under uniform priors and `log2 p(w, y)`, sharing one observation.
pub fn joint_and_marginal(spec: &TrellisSpec, obs: &Observation, w: &[u16]) -> Result<(f64, f64)> {
    let priors = uniform_priors(spec.outer_len, spec.labels);
    let marginal = recursion::forward(spec, obs, &priors, None, None, false)?.log2_mass;
    let joint = recursion::forward(spec, obs, &priors, Some(w), None, false)?.log2_mass;
    Ok((joint, marginal))
}

/// Inner decoder for one frame: caches branch metrics across turbo iterations.
#[derive(Debug)]
pub struct FrameDecoder<'a> {
    spec: &'a TrellisSpec,
    obs: Observation,
    metrics: BranchMetrics,
}

impl<'a> FrameDecoder<'a> {
    pub fn new(spec: &'a TrellisSpec, reads: &ReadSet) -> Result<Self> {
        let obs = Observation::new(spec, reads)?;
        let metrics = BranchMetrics::compute(spec, &obs);
        Ok(FrameDecoder { spec, obs, metrics })
    }

    /// APPs and extrinsic distributions of the outer symbols given `priors`.
    pub fn posteriors(&self, priors: &[Vec<f64>]) -> Result<Posteriors> {
        recursion::posteriors(self.spec, &self.obs, priors, Some(&self.metrics))
    }

    pub fn forward(&self, priors: &[Vec<f64>]) -> Result<(ForwardTable, f64)> {
        recursion::forward(self.spec, &self.obs, priors, None, Some(&self.metrics), true)
            .map(|run| (run.table, run.log2_mass))
    }

    pub fn backward(&self, priors: &[Vec<f64>]) -> Result<BackwardTable> {
        recursion::backward(self.spec, &self.obs, priors, None, Some(&self.metrics)).map(|(t, _)| t)
    }
}
