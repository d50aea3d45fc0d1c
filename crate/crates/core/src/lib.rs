//! Treating interference as noise (TIN) in K-user interference channels.
//!
//! The crate decides when power control plus TIN is GDoF-optimal, builds the
//! polyhedral and general TIN regions in H-representation, certifies
//! membership with explicit power allocations (or a violated cycle bound),
//! checks finite-SNR constant-gap guarantees, and estimates how often the
//! optimality condition holds in random cellular layouts.
//!
//! User indices are 0-based throughout the library. The JSON/CSV documents in
//! [`format`] use 1-based user labels.

pub mod channel;
pub mod error;
pub mod format;
pub mod gap;
pub mod lp;
pub mod netsim;
pub mod potential;
pub mod region;

pub use channel::{
    check_tin_condition, polyhedral_tin_gdof, tin_gdof, ChannelMatrix, ConditionReport, GdofTuple,
    Power, PowerExponents, EPS_COND,
};
pub use error::{Result, TinError};
pub use potential::{
    build_graph, decide_membership, recover_power_allocation, MembershipCertificate,
    PotentialGraph, ViolatedBound, EPS_LEN,
};
pub use region::{
    enumerate_cycles, general_tin_region, max_weighted_gdof, point_in_tin_region,
    polyhedral_region, CyclicSequence, LinearInequality, Polyhedron, RegionMembership, TinRegion,
};
