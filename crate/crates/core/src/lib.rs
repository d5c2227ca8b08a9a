//! Injury severity aggregation rules and the tooling to audit them.
//!
//! The crate scores AIS injury profiles with power-sum or tabulated rules,
//! enumerates the 55-triple domain those rules act on, counts rank
//! reversals between rules, measures association with mortality (Pearson,
//! Spearman, plug-in mutual information), searches exhaustively for
//! violations of compensation, monotone-ordering and independence
//! properties, and selects rules by Monte-Carlo simulation.
//!
//! Statistics are generic over the floating scalar ([`Real`]); scores are
//! exact rationals. The aliases below fix the common instantiations.

pub mod aggregator;
pub mod axioms;
pub mod cohort;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod lattice;
pub mod model;
pub mod plot;
pub mod reproduce;
pub mod sim;
pub mod stats;

pub use aggregator::{Aggregator, CustomTable, Score};
pub use error::{Error, Result};
pub use model::{
    triple_from_profile, triple_iss, triple_niss, AisProfile, AisRegion, Injury, InjuryCase, IssRegion,
    RegionGrade, RegionMapping, SeverityTriple,
};

/// Exact score arithmetic.
pub type Rational = num_rational::Ratio<i64>;

/// Floating scalar the statistics are generic over.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + std::iter::Sum + std::fmt::Debug + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float + num_traits::FromPrimitive + std::iter::Sum + std::fmt::Debug + Send + Sync + 'static
{
}

pub type PairedSample64 = stats::PairedSample<f64>;
pub type PairedSample32 = stats::PairedSample<f32>;
pub type AssociationStats64 = stats::AssociationStats<f64>;
pub type AssociationStats32 = stats::AssociationStats<f32>;
