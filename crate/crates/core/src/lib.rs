//! Exact computations in the spherical Hecke algebra of
//! `(SL_n(Q_p), SL_n(Z_p))`: Cartan and Iwasawa decompositions, double coset
//! enumeration, convolution, spherical functions in Satake parameters, and
//! positive-definiteness certificates.

pub mod cli;
pub mod cosets;
pub mod coweight;
pub mod eigen;
pub mod error;
pub mod hecke;
pub mod json;
pub mod lab;
pub mod matrix;
pub mod padic;
pub mod positivity;
pub mod spherical;

pub use coweight::DominantCoweight;
pub use error::{Result, SphError};
pub use hecke::HeckeElement;
pub use lab::Lab;
pub use matrix::{ExactScalar, RatMatrix};
pub use padic::{GroupElement, PrimeContext};
pub use spherical::SatakeParameter;
