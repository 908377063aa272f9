//! Information density sampling and the Monte-Carlo dependency-testing bound.

use std::borrow::Cow;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{transmit_multi, ChannelParams, ReadSet};
use crate::error::{DecodeFailure, Error, Result};
use crate::inner::{InnerScheme, LayoutPolicy};
use crate::rng::{self, Stream};
use crate::trellis::{joint_and_marginal, DecoderOptions, Observation, TrellisSpec};

/// One realization of `i(w; y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    /// Information density in bits; `-inf` when the decoder model gives `p(w, y) = 0`.
    pub i_bits: f64,
    pub seed: u64,
    /// `N' - N` of every read.
    pub final_drifts: Vec<i64>,
    /// False when a read overflowed the drift window or `p(y)` vanished.
    pub valid: bool,
}

/// How drift-overflow samples enter the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvalidPolicy {
    /// Drop them from the average (their fraction is still reported).
    #[default]
    Exclude,
    /// Count each as a summand of 1.
    Pessimistic,
}

/// Log2 of the message count used in the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Threshold {
    /// `R N` bits for a code of rate `R` bits per symbol.
    RateMatched { rate: f64 },
    /// `N_o log2 q_o`: every outer sequence is a message.
    Literal,
    /// An explicit value in bits.
    Bits { bits: f64 },
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::RateMatched { rate: 0.5 }
    }
}

impl Threshold {
    pub fn bits(&self, len: usize, outer_len: usize, labels: usize) -> f64 {
        match *self {
            Threshold::RateMatched { rate } => rate * len as f64,
            Threshold::Literal => outer_len as f64 * (labels as f64).log2(),
            Threshold::Bits { bits } => bits,
        }
    }
}

/// Monte-Carlo estimate of the DT bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtEstimate {
    pub bound: f64,
    pub stderr: f64,
    /// Samples averaged.
    pub samples: usize,
    pub invalid_frac: f64,
    pub threshold_bits: f64,
    /// Transmitted length `N`.
    pub len: usize,
    pub reads: usize,
    /// Mean information density in bits over the valid samples with finite density.
    pub mean_density_bits: f64,
}

impl DtEstimate {
    /// Mean information density per transmitted symbol.
    pub fn mean_rate(&self) -> f64 {
        self.mean_density_bits / self.len as f64
    }
}

/// `i(w; y) = N_o log2 q_o + log2 p(w, y) - log2 p(y)`.
pub fn information_density(spec: &TrellisSpec, w: &[u16], reads: &ReadSet, seed: u64) -> Result<DensitySample> {
    let final_drifts: Vec<i64> = reads
        .reads
        .iter()
        .map(|y| y.len() as i64 - spec.len as i64)
        .collect();
    let invalid = DensitySample {
        i_bits: f64::NAN,
        seed,
        final_drifts: final_drifts.clone(),
        valid: false,
    };
    let obs = match Observation::new(spec, reads) {
        Ok(obs) => obs,
        Err(Error::DecodeFailure(DecodeFailure::DriftOverflow)) => return Ok(invalid),
        Err(e) => return Err(e),
    };
    let log2_pw = -(spec.outer_len as f64) * (spec.labels as f64).log2();
    let i_bits = match joint_and_marginal(spec, &obs, w) {
        Ok((joint, marginal)) => joint - marginal - log2_pw,
        Err(Error::DecodeFailure(DecodeFailure::ZeroMass { .. })) => {
            // p(y) > 0 but the transmitted path is outside the decoder model
            match crate::trellis::forward(spec, reads, &crate::trellis::uniform_priors(spec.outer_len, spec.labels)) {
                Ok(_) => f64::NEG_INFINITY,
                Err(Error::DecodeFailure(_)) => return Ok(invalid),
                Err(e) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    };
    Ok(DensitySample {
        i_bits,
        seed,
        final_drifts,
        valid: true,
    })
}

/// `(1/V) Σ 2^{-(i_v - (b - 1))^+}` with its standard error.
pub fn dt_bound(samples: &[DensitySample], threshold_bits: f64, policy: InvalidPolicy) -> Result<DtEstimate> {
    if !(threshold_bits > 0.0) {
        return Err(Error::param("threshold_bits", "must be positive"));
    }
    let invalid = samples.iter().filter(|s| !s.valid).count();
    let mut terms: Vec<f64> = samples
        .iter()
        .filter(|s| s.valid)
        .map(|s| dt_summand(s.i_bits, threshold_bits))
        .collect();
    if policy == InvalidPolicy::Pessimistic {
        terms.extend(std::iter::repeat(1.0).take(invalid));
    }
    if terms.is_empty() {
        return Err(Error::EmptySamples);
    }
    let v = terms.len() as f64;
    let bound = terms.iter().sum::<f64>() / v;
    let stderr = if terms.len() > 1 {
        let var = terms.iter().map(|t| (t - bound).powi(2)).sum::<f64>() / (v - 1.0);
        (var / v).sqrt()
    } else {
        0.0
    };
    let finite: Vec<f64> = samples
        .iter()
        .filter(|s| s.valid && s.i_bits.is_finite())
        .map(|s| s.i_bits)
        .collect();
    let mean_bits = if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok(DtEstimate {
        bound: bound.clamp(0.0, 1.0),
        stderr,
        samples: terms.len(),
        invalid_frac: if samples.is_empty() {
            0.0
        } else {
            invalid as f64 / samples.len() as f64
        },
        threshold_bits,
        len: 0,
        reads: samples.first().map_or(0, |s| s.final_drifts.len()),
        mean_density_bits: mean_bits,
    })
}

fn dt_summand(i_bits: f64, threshold_bits: f64) -> f64 {
    let excess = i_bits - (threshold_bits - 1.0);
    if excess > 0.0 {
        (-excess).exp2()
    } else {
        1.0
    }
}

/// Parameters of a density sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    /// Outer length `N_o`.
    pub outer_len: usize,
    /// Number of samples `V`.
    pub samples: usize,
    /// Reads per sample `M`.
    pub reads: usize,
    pub seed: u64,
    pub decoder: DecoderOptions,
}

/// Draws `V` uniform outer sequences, sends each through `M` reads and computes
/// its information density. Sample `v` depends only on `(seed, v)`.
pub fn sample_densities(scheme: &InnerScheme, params: &ChannelParams, cfg: &SampleConfig) -> Result<Vec<DensitySample>> {
    if cfg.samples == 0 {
        return Err(Error::param("samples", "at least one sample is required"));
    }
    if cfg.reads == 0 {
        return Err(Error::param("reads", "at least one read is required"));
    }
    let shared = match scheme.layout {
        LayoutPolicy::Fixed => Some(TrellisSpec::for_frame(scheme, cfg.outer_len, 0, params, &cfg.decoder)?),
        LayoutPolicy::PerFrame => None,
    };
    (0..cfg.samples)
        .into_par_iter()
        .map(|v| {
            let (seed, spec, w, reads) = draw_frame(scheme, params, cfg, v, shared.as_ref())?;
            information_density(&spec, &w, &reads, seed)
        })
        .collect()
}

/// Outer sequence, reads and trellis of one density sample.
#[derive(Debug, Clone)]
pub struct SampleFrame {
    pub seed: u64,
    pub spec: TrellisSpec,
    pub w: Vec<u16>,
    pub reads: ReadSet,
}

/// Regenerates sample `v` of [`sample_densities`].
pub fn sample_frame(scheme: &InnerScheme, params: &ChannelParams, cfg: &SampleConfig, v: usize) -> Result<SampleFrame> {
    let (seed, spec, w, reads) = draw_frame(scheme, params, cfg, v, None)?;
    Ok(SampleFrame {
        seed,
        spec: spec.into_owned(),
        w,
        reads,
    })
}

fn draw_frame<'a>(
    scheme: &InnerScheme,
    params: &ChannelParams,
    cfg: &SampleConfig,
    v: usize,
    shared: Option<&'a TrellisSpec>,
) -> Result<(u64, Cow<'a, TrellisSpec>, Vec<u16>, ReadSet)> {
    let seed = rng::split_seed(cfg.seed, Stream::Sample, v as u64);
    let spec = match shared {
        Some(spec) => Cow::Borrowed(spec),
        None => Cow::Owned(TrellisSpec::for_frame(scheme, cfg.outer_len, seed, params, &cfg.decoder)?),
    };
    let mut rng = rng::stream_rng(seed, Stream::Message, 0);
    let w: Vec<u16> = (0..cfg.outer_len)
        .map(|_| rng.gen_range(0..spec.labels) as u16)
        .collect();
    let x = scheme.encode(&w, seed)?;
    let reads = transmit_multi(&x, params, cfg.reads, seed)?;
    Ok((seed, spec, w, reads))
}

/// [`sample_densities`] followed by [`dt_bound`].
pub fn sample_dt(
    scheme: &InnerScheme,
    params: &ChannelParams,
    cfg: &SampleConfig,
    threshold: Threshold,
    policy: InvalidPolicy,
) -> Result<DtEstimate> {
    let samples = sample_densities(scheme, params, cfg)?;
    let len = scheme.coded_len(cfg.outer_len);
    let bits = threshold.bits(len, cfg.outer_len, scheme.outer_alphabet());
    let mut est = dt_bound(&samples, bits, policy)?;
    est.len = len;
    Ok(est)
}

/// Result of [`normalized_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRate {
    /// Largest message count (log2) whose bound meets the target.
    pub b_star: f64,
    /// `b* / N` in bits per symbol.
    pub r_max: f64,
    /// `actual_rate / r_max`; infinite when no positive threshold meets the target.
    pub normalized: f64,
    pub degenerate: bool,
}

/// Ratio between `actual_rate` and the largest rate whose DT bound on
/// `samples` is at most `target_fer`, found by bisection to 0.1 bits.
pub fn normalized_rate(
    samples: &[DensitySample],
    target_fer: f64,
    len: usize,
    actual_rate: f64,
    policy: InvalidPolicy,
) -> Result<NormalizedRate> {
    if !(target_fer > 0.0 && target_fer < 1.0) {
        return Err(Error::param("target_fer", "must lie in (0, 1)"));
    }
    if len == 0 {
        return Err(Error::param("len", "must be positive"));
    }
    let bound_at = |b: f64| dt_bound(samples, b, policy).map(|e| e.bound);
    let degenerate = NormalizedRate {
        b_star: 0.0,
        r_max: 0.0,
        normalized: f64::INFINITY,
        degenerate: true,
    };
    let tol = 0.1;
    let mut lo = tol;
    if bound_at(lo)? > target_fer {
        return Ok(degenerate);
    }
    let top = samples
        .iter()
        .filter(|s| s.valid && s.i_bits.is_finite())
        .map(|s| s.i_bits)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = (top + 2.0).max(lo + tol);
    if bound_at(hi)? <= target_fer {
        lo = hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if bound_at(mid)? <= target_fer {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r_max = lo / len as f64;
    Ok(NormalizedRate {
        b_star: lo,
        r_max,
        normalized: actual_rate / r_max,
        degenerate: false,
    })
}
