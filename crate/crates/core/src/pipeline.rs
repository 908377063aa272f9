//! Concatenated encoder/decoder with turbo iterations, and the frame-error-rate harness.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{transmit_multi, ChannelParams, DnaSequence, ReadSet};
use crate::error::{Error, Result};
use crate::inner::{InnerScheme, LayoutPolicy};
use crate::ldpc::{decode_bp, LdpcCode};
use crate::rng::{self, Stream};
use crate::trellis::{uniform_priors, DecoderOptions, FrameDecoder, TrellisSpec};

/// Smallest probability passed between the inner and outer decoders.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Inner scheme, outer code and decoder settings of one experiment.
#[derive(Debug, Clone)]
pub struct System {
    pub scheme: InnerScheme,
    pub outer: LdpcCode,
    /// Reads per frame `M`.
    pub reads: usize,
    pub turbo_iters: usize,
    pub bp_iters: usize,
    pub decoder: DecoderOptions,
}

/// How a frame decode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameStatus {
    /// The outer hard decision satisfied every check.
    Converged,
    /// The turbo budget ran out with unsatisfied checks.
    NotConverged,
    /// A read overflowed the drift window or the trellis lost all mass.
    ChannelFailure,
}

/// Result of [`System::decode_frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDecode {
    /// Message estimate; `None` on channel failure.
    pub u_hat: Option<Vec<u16>>,
    pub status: FrameStatus,
    pub turbo_iters: usize,
}

impl System {
    pub fn new(
        scheme: InnerScheme,
        outer: LdpcCode,
        reads: usize,
        turbo_iters: usize,
        bp_iters: usize,
        decoder: DecoderOptions,
    ) -> Result<Self> {
        if outer.order() != scheme.outer_alphabet() {
            return Err(Error::param(
                "field_bits",
                format!(
                    "outer field has {} elements but the inner code takes {}-ary symbols",
                    outer.order(),
                    scheme.outer_alphabet()
                ),
            ));
        }
        if reads == 0 {
            return Err(Error::param("reads", "at least one read is required"));
        }
        if turbo_iters == 0 {
            return Err(Error::param("turbo_iters", "at least one turbo iteration is required"));
        }
        Ok(System {
            scheme,
            outer,
            reads,
            turbo_iters,
            bp_iters,
            decoder,
        })
    }

    /// Outer length `N_o`.
    pub fn outer_len(&self) -> usize {
        self.outer.len()
    }

    /// Transmitted length `N`.
    pub fn len(&self) -> usize {
        self.scheme.coded_len(self.outer_len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Message length `K` in outer symbols.
    pub fn dimension(&self) -> usize {
        self.outer.dimension()
    }

    /// `R = K k / N` bits per transmitted symbol.
    pub fn rate(&self) -> f64 {
        (self.dimension() * self.scheme.k()) as f64 / self.len() as f64
    }

    /// Trellis for the frame with seed `frame_seed` at channel point `params`.
    pub fn trellis(&self, params: &ChannelParams, frame_seed: u64) -> Result<TrellisSpec> {
        TrellisSpec::for_frame(&self.scheme, self.outer_len(), frame_seed, params, &self.decoder)
    }

    /// `x = inner(outer(u))`.
    pub fn encode_frame(&self, u: &[u16], frame_seed: u64) -> Result<DnaSequence> {
        let w = self.outer.encode(u)?;
        self.scheme.encode(&w, frame_seed)
    }

    /// Turbo decoding: trellis extrinsics feed belief propagation, whose extrinsics
    /// become the next trellis priors, until the checks are satisfied or the
    /// turbo budget is spent.
    pub fn decode_frame(&self, spec: &TrellisSpec, reads: &ReadSet) -> Result<FrameDecode> {
        let failure = FrameDecode {
            u_hat: None,
            status: FrameStatus::ChannelFailure,
            turbo_iters: 0,
        };
        let decoder = match FrameDecoder::new(spec, reads) {
            Ok(d) => d,
            Err(Error::DecodeFailure(_)) => return Ok(failure),
            Err(e) => return Err(e),
        };
        let mut priors = uniform_priors(self.outer_len(), self.outer.order());
        let mut hard = Vec::new();
        for it in 1..=self.turbo_iters {
            let post = match decoder.posteriors(&priors) {
                Ok(p) => p,
                Err(Error::DecodeFailure(_)) => return Ok(FrameDecode { turbo_iters: it, ..failure }),
                Err(e) => return Err(e),
            };
            let inner_ext = floored(post.extrinsic);
            let bp = decode_bp(&self.outer, &inner_ext, self.bp_iters);
            hard = bp.hard;
            if bp.converged {
                return Ok(FrameDecode {
                    u_hat: Some(self.outer.extract_message(&hard)),
                    status: FrameStatus::Converged,
                    turbo_iters: it,
                });
            }
            priors = floored(bp.extrinsic);
        }
        Ok(FrameDecode {
            u_hat: Some(self.outer.extract_message(&hard)),
            status: FrameStatus::NotConverged,
            turbo_iters: self.turbo_iters,
        })
    }

    /// Message, reads and decode of frame `index` under experiment `seed`.
    pub fn simulate_frame(
        &self,
        params: &ChannelParams,
        seed: u64,
        index: u64,
        shared: Option<&TrellisSpec>,
    ) -> Result<FrameOutcome> {
        let frame_seed = rng::split_seed(seed, Stream::Frame, index);
        let mut rng = rng::stream_rng(frame_seed, Stream::Message, 0);
        let q = self.outer.order();
        let u: Vec<u16> = (0..self.dimension()).map(|_| rng.gen_range(0..q) as u16).collect();
        let x = self.encode_frame(&u, frame_seed)?;
        let reads = transmit_multi(&x, params, self.reads, frame_seed)?;
        let owned;
        let spec = match shared {
            Some(s) => s,
            None => {
                owned = self.trellis(params, frame_seed)?;
                &owned
            }
        };
        let decode = self.decode_frame(spec, &reads)?;
        Ok(FrameOutcome {
            error: decode.u_hat.as_deref() != Some(u.as_slice()),
            status: decode.status,
            turbo_iters: decode.turbo_iters,
        })
    }
}

fn floored(mut dists: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for d in dists.iter_mut() {
        let mut sum = 0.0;
        for x in d.iter_mut() {
            *x = x.max(PROBABILITY_FLOOR);
            sum += *x;
        }
        d.iter_mut().for_each(|x| *x /= sum);
    }
    dists
}

/// Per-frame summary used by the FER harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOutcome {
    /// `û != u`, including channel failures.
    pub error: bool,
    pub status: FrameStatus,
    pub turbo_iters: usize,
}

/// When to stop simulating a channel point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_errors: 100,
            max_frames: 100_000,
        }
    }
}

/// FER estimate at one channel point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerPoint {
    /// Channel parameter `p = p_ins = p_del`.
    pub p: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    /// 95% Wilson score interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub overflows: u64,
    /// Frames whose turbo budget ran out without satisfying the checks.
    pub not_converged: u64,
    pub mean_turbo_iters: f64,
}

impl FerPoint {
    pub fn overflow_frac(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.overflows as f64 / self.frames as f64
        }
    }
}

/// Wilson score interval for `errors` successes out of `frames` trials.
pub fn wilson_interval(errors: u64, frames: u64, z: f64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Simulates frames `0, 1, ..` until the stop rule fires. Frames are decoded in
/// parallel batches but counted in index order, so the result does not depend
/// on the number of workers.
pub fn run_fer(system: &System, params: &ChannelParams, stop: StopRule, seed: u64) -> Result<FerPoint> {
    let shared = match system.scheme.layout {
        LayoutPolicy::Fixed => Some(system.trellis(params, seed)?),
        LayoutPolicy::PerFrame => None,
    };
    let batch = (4 * rayon::current_num_threads()).max(8) as u64;
    let (mut frames, mut errors, mut overflows, mut not_converged, mut iters) = (0u64, 0u64, 0u64, 0u64, 0u64);
    'outer: while frames < stop.max_frames && errors < stop.max_errors {
        let end = (frames + batch).min(stop.max_frames);
        let outcomes: Vec<FrameOutcome> = (frames..end)
            .into_par_iter()
            .map(|i| system.simulate_frame(params, seed, i, shared.as_ref()))
            .collect::<Result<_>>()?;
        for o in outcomes {
            frames += 1;
            iters += o.turbo_iters as u64;
            match o.status {
                FrameStatus::ChannelFailure => overflows += 1,
                FrameStatus::NotConverged => not_converged += 1,
                FrameStatus::Converged => {}
            }
            if o.error {
                errors += 1;
                if errors >= stop.max_errors {
                    break 'outer;
                }
            }
        }
    }
    let (ci_lo, ci_hi) = wilson_interval(errors, frames, 1.96);
    Ok(FerPoint {
        p: params.p_ins,
        frames,
        errors,
        fer: if frames == 0 { 0.0 } else { errors as f64 / frames as f64 },
        ci_lo,
        ci_hi,
        overflows,
        not_converged,
        mean_turbo_iters: if frames == 0 { 0.0 } else { iters as f64 / frames as f64 },
    })
}

/// [`run_fer`] at `p_ins = p_del = p` for every `p` in `p_list`, with substitution
/// probability `p_sub` and alphabet size `q`. Point `j` uses seed `split_seed(seed, Frame, j)`.
pub fn run_curve(
    system: &System,
    p_list: &[f64],
    p_sub: f64,
    q: usize,
    stop: StopRule,
    seed: u64,
) -> Result<Vec<FerPoint>> {
    p_list
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let params = ChannelParams::new(p, p, p_sub, q)?;
            run_fer(system, &params, stop, curve_seed(seed, j))
        })
        .collect()
}

/// Seed of point `j` of a sweep.
pub fn curve_seed(seed: u64, j: usize) -> u64 {
    rng::split_seed(seed, Stream::Frame, u64::MAX - j as u64)
}

/// Channel parameter where the FER first crosses `target`, interpolating
/// `log10 FER` linearly in `p` between the bracketing points of a sweep sorted
/// by `p`. `None` when no adjacent pair brackets the target.
pub fn fer_crossing(points: &[FerPoint], target: f64) -> Option<f64> {
    let floor = |f: f64| f.max(0.5 / 1e12).log10();
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if (a.fer < target) == (b.fer < target) {
            return None;
        }
        let (la, lb, lt) = (floor(a.fer), floor(b.fer), target.log10());
        Some(if (lb - la).abs() < 1e-12 {
            0.5 * (a.p + b.p)
        } else {
            a.p + (lt - la) * (b.p - a.p) / (lb - la)
        })
    })
}
