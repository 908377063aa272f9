//! Protograph-based nonbinary LDPC outer codes.

mod bp;
mod code;
mod gf;
mod protograph;

pub use bp::{decode_bp, BpOutput};
pub use code::{Edge, LdpcCode, LdpcParams};
pub use gf::Gf;
pub use protograph::{lift_protograph, BaseMatrix, LiftMethod, Lifted, B1, B2};
