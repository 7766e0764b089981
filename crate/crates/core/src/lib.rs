//! Approximation numbers of composition operators on Hardy spaces of
//! products of balls.
//!
//! The pipeline runs bottom-up: [`multiindex`] fixes the graded monomial
//! order, [`powerseries`] expands symbols and their powers, [`hardy`]
//! supplies norms and kernels, [`galerkin`] assembles the compression and
//! its singular values, [`certificates`] brackets the true values, and
//! [`decayfit`] turns a sample into decay exponents.

pub mod certificates;
pub mod cli;
pub mod decayfit;
pub mod error;
pub mod galerkin;
pub mod hardy;
pub mod multiindex;
pub mod powerseries;
pub mod spec;
pub mod symbols;

pub use certificates::{BoundReport, CertificateConfig};
pub use decayfit::{gamma_estimate, DecayFit, Window};
pub use error::{Error, Result};
pub use galerkin::{approx_numbers, assemble, AssembleOptions, CompressionMatrix};
pub use hardy::{DomainSpec, Point};
pub use multiindex::{count_exact, count_upto, rank, unrank, MultiIndex};
pub use powerseries::TruncatedSeries;
pub use spec::SpecDocument;
pub use symbols::{SelfMap, Symbol};
