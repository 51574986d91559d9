//! Isometry-invariant density fingerprints of periodic point sets.
//!
//! The pipeline: a periodic set (lattice + motif) is decomposed, per motif
//! point, into higher-order Voronoi zone cells; ball-cell intersection
//! volumes turn the zones into coverage densities psi_k(t) and the density
//! fingerprint rho_k(t) = psi_k(t) - psi_{k+1}(t); fingerprints of two sets
//! are compared by a damped sup distance, with a bottleneck metric on
//! motifs and perturbation trials closing the stability loop.

pub mod compare;
pub mod error;
pub mod fingerprint;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod volumes;
pub mod zones;

pub use compare::{
    bottleneck_distance, common_lattice_check, compare_sets, default_lattice_tol,
    lipschitz_constant, perturb, stability_trial, ComparisonReport, Metric, StabilityReport,
    StabilityTrial, BOUND_SLACK,
};
pub use error::{Error, ErrorClass, Result};
pub use fingerprint::{
    default_tgrid, fingerprint, fingerprint_distance, psi_table, psi_table_raw, rho_from_psi,
    DensityTable, FingerprintConfig, Method, TableMeta,
};
pub use geometry::{CloudPoint, Lattice, PeriodicSet, RadiiReport};
pub use io::{
    export_zone_geometry, parse_pps, write_density_csv, write_pps, write_stability_csv,
};
pub use volumes::{
    ball_cell_profile, ball_cell_volume, oracle_level_distances, oracle_psi, OracleMode,
    VolumeEstimate, VolumeMethod,
};
pub use zones::{
    build_zones, build_zones_with_covering, build_zones_with_fallback, cutoff_radius,
    multiplicity, zone_volume, ConvexCell, Halfspace, MultiplicityEntry, MultiplicityTable,
    ZoneComplex,
};
