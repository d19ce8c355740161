//! Unambiguous discrimination of `d` symmetric pure states in `d` dimensions.
//!
//! The crate is split along the data flow of a discrimination experiment:
//!
//! * [`states`] builds the symmetric input states, their orthogonal
//!   complements and the `(d+1)`-dimensional measurement basis obtained by
//!   adding one ancillary dimension.
//! * [`theory`] holds the closed-form overlap, success/inconclusive
//!   probabilities and the minimum-error discrimination bound.
//! * [`experiment`] simulates heralded photon counting with Poisson
//!   statistics, accidental coincidences and a depolarizing imperfection.
//! * [`analysis`] turns counts back into probabilities with Gaussian error
//!   propagation and classifies the mean error against the bound.
//! * [`sweep`] drives parameter sweeps and renders CSV/JSON rows.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod linalg;
mod serde_f64;
pub mod states;
pub mod sweep;
pub mod theory;

pub use analysis::{
    analyze, error_summary, gaussian_propagation, normalize_probabilities, quantum_contrast,
    ErrorSummary, OutcomeTable, Propagation, Verdict,
};
pub use error::{Result, UsdError};
pub use experiment::{
    apply_noise, epsilon_for_cell_error, expected_counts, ideal_detection_matrix, run_experiment,
    spiral_weights, CountsRecord, ExpectedCounts, ExperimentConfig,
};
pub use states::{
    build_complements, build_projected_vectors, build_state_family, lift_to_basis, oam_map,
    ComplementSet, DiscriminationBasis, OamMap, StateFamily,
};
pub use theory::{
    mesd_bound, mesd_bound_general, overlap, theory_point, theta_for_overlap, theta_max,
    usd_probabilities, TheoryPoint, UsdProbabilities,
};
