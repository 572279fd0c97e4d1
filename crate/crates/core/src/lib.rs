//! Pilot-wave diffraction laboratory.
//!
//! A real 2D Klein-Gordon field is locally coupled to a relativistic point
//! particle: the particle sources the field through a regularized delta and
//! the field pushes back through its gradient. Ensembles of such runs
//! through slit apparatuses build diffraction statistics, which the stats
//! layer compares against far-field slit-diffraction predictions with an
//! effective de Broglie wavelength set by the coupling.
//!
//! Natural units `hbar = m = c = 1` throughout the API; file formats use
//! Compton wavelengths and periods (see [`units`] and [`io`]).

pub mod error;
pub mod experiment;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod particle;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
pub use experiment::{
    extract_angle, preset_experiments, run_ensemble, run_single, run_single_observed,
    EnsembleSpec, ExperimentPreset, Outcome, RunConfig, RunResult, Simulation,
};
pub use field::{
    apply_sponge, deposit_source, field_energy, sample_gradient, step_field, FieldState,
    SourceTerm, SpongeLayer, SpongeProfile,
};
pub use geometry::{build_apparatus, default_specs, Apparatus, ApparatusKind, ApparatusSpec};
pub use grid::{Boundary, Field2, Grid2D, Vec2};
pub use particle::{measure_steady_state, step_particle, ParticleState, SteadyState};
pub use stats::{
    analyze_ensemble, central_node_width, central_node_width_of_density, chi_square,
    diffraction_map, effective_wavelength, fold_peaks, fraunhofer_density, gaussian_reference,
    lyapunov_local, smooth_density, smoothing_sigma, smoothness_classifier, weighted_histogram,
    AngularHistogram, DiffractionMap, EnsembleAnalysis, FitReport, FraunhoferModel,
    SmoothnessClass, TabulatedDensity,
};
