//! Sectioned TOML configuration, flag overrides, and resolution into core objects.

use std::path::{Path, PathBuf};

use dnafb::infodensity::{InvalidPolicy, Threshold};
use dnafb::inner::{parse_codebooks, LayoutPolicy};
use dnafb::ldpc::{BaseMatrix, LdpcCode, LdpcParams, LiftMethod};
use dnafb::pipeline::{StopRule, System};
use dnafb::{make_scheme, ChannelParams, DecoderOptions, InnerScheme, SchemeConfig, SchemeKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

pub fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub channel: ChannelSection,
    pub inner: InnerSection,
    pub outer: OuterSection,
    pub pipeline: PipelineSection,
    pub sampling: SamplingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Sweep of `p = p_ins = p_del`.
    pub p_list: Vec<f64>,
    pub p_sub: f64,
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InnerSection {
    /// `cc`, `wm`, `tvc1` or `tvc2`.
    pub scheme: String,
    /// Transmitted length `N`.
    pub len: usize,
    pub codebook: Option<PathBuf>,
    pub generators: Vec<u32>,
    pub strict: bool,
    pub offset: Option<bool>,
    /// `fixed` or `per-frame`.
    pub layout: String,
    pub insertion_cap: usize,
    pub window: Option<usize>,
    pub renormalize_cap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OuterSection {
    /// `b1`, `b2` or a path to a base matrix file.
    pub base: String,
    /// Lifting factor; derived from `inner.len` when absent.
    pub lift: Option<usize>,
    /// Field `GF(2^field_bits)`; defaults to the inner code's symbol size.
    pub field_bits: Option<usize>,
    /// `peg` or `random`.
    pub method: String,
    /// Lifting and labelling seed; defaults to the global seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    /// Reads per frame `M`.
    pub reads: usize,
    pub turbo_iters: usize,
    pub bp_iters: usize,
    pub max_errors: u64,
    pub max_frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    /// Samples per point `V`.
    pub samples: usize,
    /// `rate`, `literal` or `bits`.
    pub threshold: String,
    pub rate: f64,
    pub bits: Option<f64>,
    /// `exclude` or `pessimistic`.
    pub invalid: String,
    pub target_fer: f64,
    pub n_list: Vec<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            channel: ChannelSection::default(),
            inner: InnerSection::default(),
            outer: OuterSection::default(),
            pipeline: PipelineSection::default(),
            sampling: SamplingSection::default(),
        }
    }
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            p_list: vec![0.1],
            p_sub: 0.0,
            q: 4,
        }
    }
}

impl Default for InnerSection {
    fn default() -> Self {
        let d = DecoderOptions::default();
        InnerSection {
            scheme: "tvc2".into(),
            len: 960,
            codebook: None,
            generators: SchemeConfig::default().generators,
            strict: false,
            offset: None,
            layout: "fixed".into(),
            insertion_cap: d.insertion_cap,
            window: d.window,
            renormalize_cap: d.renormalize_cap,
        }
    }
}

impl Default for OuterSection {
    fn default() -> Self {
        OuterSection {
            base: "b2".into(),
            lift: None,
            field_bits: None,
            method: "peg".into(),
            seed: None,
        }
    }
}

impl Default for PipelineSection {
    fn default() -> Self {
        let stop = StopRule::default();
        PipelineSection {
            reads: 1,
            turbo_iters: 100,
            bp_iters: 100,
            max_errors: stop.max_errors,
            max_frames: stop.max_frames,
        }
    }
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            samples: 200,
            threshold: "rate".into(),
            rate: 0.5,
            bits: None,
            invalid: "exclude".into(),
            target_fer: 1e-2,
            n_list: vec![120, 240, 480, 960, 1920],
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(toml::from_str(&text)?)
    }

    /// The resolved configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn kind(&self) -> Result<SchemeKind, ConfigError> {
        self.inner.scheme.parse().map_err(|_| {
            invalid(
                "inner.scheme",
                format!("unknown scheme `{}` (expected cc, wm, tvc1 or tvc2)", self.inner.scheme),
            )
        })
    }

    pub fn channel(&self, p: f64) -> Result<ChannelParams, ConfigError> {
        ChannelParams::new(p, p, self.channel.p_sub, self.channel.q).map_err(|e| invalid("channel", e))
    }

    pub fn p_list(&self) -> Result<&[f64], ConfigError> {
        if self.channel.p_list.is_empty() {
            return Err(invalid("channel.p_list", "at least one channel point is required"));
        }
        for &p in &self.channel.p_list {
            self.channel(p)?;
        }
        Ok(&self.channel.p_list)
    }

    pub fn decoder(&self) -> DecoderOptions {
        DecoderOptions {
            insertion_cap: self.inner.insertion_cap,
            window: self.inner.window,
            renormalize_cap: self.inner.renormalize_cap,
        }
    }

    pub fn scheme(&self) -> Result<InnerScheme, ConfigError> {
        let kind = self.kind()?;
        let codebooks = match &self.inner.codebook {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                Some(parse_codebooks(&text, self.channel.q).map_err(|e| invalid("inner.codebook", e))?)
            }
            None => None,
        };
        let layout = match self.inner.layout.as_str() {
            "fixed" => LayoutPolicy::Fixed,
            "per-frame" => LayoutPolicy::PerFrame,
            other => return Err(invalid("inner.layout", format!("`{other}` is not `fixed` or `per-frame`"))),
        };
        let config = SchemeConfig {
            codebooks,
            generators: self.inner.generators.clone(),
            strict: self.inner.strict,
            offset: self.inner.offset,
            layout,
            q: self.channel.q,
        };
        make_scheme(kind, &config, self.seed).map_err(|e| invalid("inner", e))
    }

    /// Outer length `N_o` whose inner encoding has `len` symbols.
    pub fn outer_len(&self, scheme: &InnerScheme, len: usize) -> Result<usize, ConfigError> {
        let outer_len = scheme.outer_len_for(len);
        if outer_len == 0 || scheme.coded_len(outer_len) != len {
            return Err(invalid(
                "inner.len",
                format!("N = {len} is not a valid length for the {} scheme", scheme.kind),
            ));
        }
        Ok(outer_len)
    }

    pub fn threshold(&self) -> Result<Threshold, ConfigError> {
        match self.sampling.threshold.as_str() {
            "rate" => Ok(Threshold::RateMatched {
                rate: self.sampling.rate,
            }),
            "literal" => Ok(Threshold::Literal),
            "bits" => match self.sampling.bits {
                Some(bits) => Ok(Threshold::Bits { bits }),
                None => Err(invalid("sampling.bits", "required when sampling.threshold = \"bits\"")),
            },
            other => Err(invalid(
                "sampling.threshold",
                format!("`{other}` is not `rate`, `literal` or `bits`"),
            )),
        }
    }

    pub fn invalid_policy(&self) -> Result<InvalidPolicy, ConfigError> {
        match self.sampling.invalid.as_str() {
            "exclude" => Ok(InvalidPolicy::Exclude),
            "pessimistic" => Ok(InvalidPolicy::Pessimistic),
            other => Err(invalid(
                "sampling.invalid",
                format!("`{other}` is not `exclude` or `pessimistic`"),
            )),
        }
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            max_errors: self.pipeline.max_errors,
            max_frames: self.pipeline.max_frames,
        }
    }

    /// Concatenated system with transmitted length `len`. The lift is
    /// `N_o / 6` unless `outer.lift` is set, in which case `len` is ignored.
    pub fn system(&self, len: usize) -> Result<System, ConfigError> {
        let scheme = self.scheme()?;
        let base = BaseMatrix::by_name(&self.outer.base).map_err(|e| invalid("outer.base", e))?;
        let lift = match self.outer.lift {
            Some(lift) => lift,
            None => {
                let outer_len = self.outer_len(&scheme, len)?;
                if outer_len % base.cols() != 0 {
                    return Err(invalid(
                        "inner.len",
                        format!(
                            "N = {len} gives N_o = {outer_len}, not a multiple of the {} base columns",
                            base.cols()
                        ),
                    ));
                }
                outer_len / base.cols()
            }
        };
        let symbol_bits = scheme.outer_alphabet().trailing_zeros() as usize;
        let method = match self.outer.method.as_str() {
            "peg" => LiftMethod::Peg,
            "random" => LiftMethod::Random,
            other => return Err(invalid("outer.method", format!("`{other}` is not `peg` or `random`"))),
        };
        let outer = LdpcCode::build(&LdpcParams {
            base,
            lift,
            field_bits: self.outer.field_bits.unwrap_or(symbol_bits),
            method,
            seed: self.outer.seed.unwrap_or(self.seed),
        })
        .map_err(|e| invalid("outer", e))?;
        System::new(
            scheme,
            outer,
            self.pipeline.reads,
            self.pipeline.turbo_iters,
            self.pipeline.bp_iters,
            self.decoder(),
        )
        .map_err(|e| invalid("pipeline", e))
    }
}
