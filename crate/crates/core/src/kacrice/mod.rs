//! Finite-`N` checks: the spherical Kac–Rice integral and brute-force
//! critical-point counts on sampled fields in dimension 2 and 3.

mod census;
mod field;
mod integral;

pub use census::{count_critical_points, CensusOptions, CriticalPoint, CriticalPointCensus};
pub use field::{sample_field, FieldSample, MIN_FEATURES};
pub use integral::{kac_rice_integral, KacRiceOptions, KacRiceResult};
