//! Finite-blocklength evaluation of concatenated codes on the DNA storage channel.
//!
//! The channel inserts, deletes and substitutes symbols independently at every
//! position. On top of it the crate provides inner synchronization codes, a
//! drift-augmented trellis decoder, Monte-Carlo estimates of the
//! dependency-testing achievability bound, nonbinary protograph LDPC outer codes
//! and a turbo decoding pipeline with a frame-error-rate harness.

pub mod channel;
pub mod error;
pub mod infodensity;
pub mod inner;
pub mod ldpc;
pub mod pipeline;
pub mod rng;
pub mod trellis;

pub use channel::{ChannelParams, DnaSequence, EventTrace, ReadSet};
pub use error::{DecodeFailure, Error, Result};
pub use inner::{make_scheme, InnerScheme, SchemeConfig, SchemeKind};
pub use trellis::{DecoderOptions, TrellisSpec};
