//! Derivative-free optimization via non-commutative maps.
//!
//! The algorithms in this crate approximate gradient-descent steps without
//! derivative information by composing `m` non-commutative transition maps.
//! Each map probes the objective along a column of an *exploration matrix*
//! `W` and scales the probe through a pair of *generating functions*
//! `(f, g)`. When `W` solves the quadratic system `W P W^T = T_d`,
//! `W 1 = 0` and `(f, g)` matches the target matrix `T_d`, the `m`-step
//! composition reproduces `x - h grad J(x)` up to `O(h^{3/2})`.
//!
//! Module map:
//! - [`matrix`]: small dense matrix kernels.
//! - [`spectral`]: orthogonal block-diagonalization of skew-symmetric and
//!   normal matrices.
//! - [`sequence`]: exploration-sequence design — the `P`/`P~` matrices, the
//!   direct `T(W)` sum, eigenvalue-interlacing machinery, and the full
//!   constructive factorization of `W`.
//! - [`genfun`]: the catalog of generating-function pairs and the algebraic
//!   identities they satisfy.
//! - [`engine`]: the optimization loop, step schedules and run records.
//! - [`verify`]: numerical certification of the structural identities.
//!
//! ```
//! use ncmap_core::{
//!     construct_w, counter_rotation, objectives, run, GeneratingPair, MapParameters,
//!     RunSettings, Schedule, StopCriteria, TargetFamily, TargetSpec,
//! };
//!
//! // Design a four-step exploration sequence for a rank-collapsed rotation
//! // target, then drive a quadratic objective with it.
//! let params = MapParameters::two_point();
//! let target = TargetSpec::new(TargetFamily::H2, 2)
//!     .with_a(1.0)
//!     .with_b(1.0)
//!     .with_q(counter_rotation(2));
//! let pair = GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
//! let em = construct_w(&target, &params, &[2.0, 2.0]).unwrap();
//! assert_eq!(em.m, 4);
//! assert!(em.zero_sum_defect() <= 1e-9);
//! assert!(em.reconstruction_residual().unwrap() <= 1e-7);
//!
//! let settings = RunSettings {
//!     schedule: Schedule::constant(0.05),
//!     stop: StopCriteria::max_iters(800),
//! };
//! let mut objective = objectives::quadratic(&[1.0, 2.0]);
//! let record = run(&em, &pair, &params, &settings, &mut objective, &[0.0, 1.0]).unwrap();
//! let x = record.final_iterate();
//! let dist = ((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2)).sqrt();
//! assert!(dist < 0.3, "converged to {x:?}");
//! ```

pub mod engine;
pub mod genfun;
pub mod matrix;
pub mod objectives;
pub mod presets;
pub mod rng;
pub mod sequence;
pub mod spectral;
pub mod verify;

pub use engine::{
    harmonic_schedule, run, transition_step, EngineError, ObjectivePort, RunRecord, RunSettings,
    Schedule, StopCriteria, StopReason,
};
pub use genfun::{bracket_residual, GenFunError, GeneratingPair};
pub use matrix::Mat;
pub use presets::{simulation_preset, ObjectiveKind, SimulationPreset};
pub use rng::SplitMix64;
pub use sequence::construct::{construct_w, find_sequence_length, SequenceLength};
pub use sequence::embedding::{calc_ps_matrix, calc_theta, calc_theta_sub};
pub use sequence::target::{counter_rotation, TargetFamily, TargetSpec};
pub use sequence::{
    build_c, build_p, build_p_tilde, check_interlacing, compute_t_direct, compute_t_via_p,
    epsilon, parse_w_file, read_w_file, reference_coordinate_sequence, ExplorationMatrix,
    InterlacingReport, MapParameters, SequenceError, StoredExploration,
};
pub use spectral::{
    normal_block_diagonalize, orthogonality_defect, skew_block_diagonalize, skew_delta_values,
    BlockSpectrum, SpectralError,
};
pub use verify::{
    brockett_check, brockett_residuals, catalog_sweep, corrupt_exploration, default_catalog,
    gradient_order_check, interlacing_check, shoelace_areas, shoelace_check, CatalogCase,
    VerificationReport,
};
