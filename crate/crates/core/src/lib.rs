//! Power flow for radial distribution feeders by backward/forward sweep.
//!
//! The pipeline is: [`network`] records → [`ordering`] (layered numbering) →
//! [`topology`] (`T`, `D_Z`, `TRX`) → [`solver`] (sweep iteration). The
//! [`oracle`] module checks solutions without using any of that machinery, and
//! [`io`] reads network files and renders results.

pub mod error;
pub mod io;
pub mod network;
pub mod oracle;
pub mod ordering;
pub mod solver;
pub mod topology;

pub use error::{Error, ErrorKind, Result};
pub use network::{
    net_injection, to_per_unit, to_physical, BranchRecord, BusRecord, NetworkInput, PerUnitBases,
    Units,
};
pub use oracle::{
    check_residuals, reference_solve, reference_solve_at, two_node_closed_form, ReferenceSolution,
    ResidualReport,
};
pub use ordering::{build_ordering, RadialOrdering};
pub use solver::{
    solve, ConvergenceMeasure, PreparedNetwork, SolveResult, SweepMode, SweepOptions, SweepState,
};
pub use topology::{build_t, build_trx, DrivingMatrix, ImpedanceDiagonal, TopologyMatrix};

pub use num_complex::Complex64;
