//! Driven Tavis-Cummings model of N trapped ions sharing one vibrational mode.
//!
//! The collective spin lives on the (N+1)-dimensional Dicke basis and the
//! centre-of-mass mode on a truncated Fock space. Units: hbar = 1, energies
//! in inverse time.

extern crate openblas_src;

pub mod ansatz;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod lindblad;
pub mod model;
pub mod observables;
pub mod ode;
pub mod semiclassical;
pub mod spin;

pub use ansatz::{
    above_threshold_moments, analytic_scaled_moments, below_threshold_moments, build_ansatz_state, residual,
    solve_ansatz, AnsatzSolution, ScaledMoments,
};
pub use error::{Error, Result};
pub use fock::{build_boson_operators, squeeze_operator, squeezed_vacuum, BosonOperators, SqueezeParams};
pub use linalg::C64;
pub use lindblad::{
    dissipator, evolve_master, master_rhs, DensityOp, Evolution, EvolveConfig, HeatingParams, MasterEquation,
    MomentSample,
};
pub use model::{
    build_hamiltonian, build_scaled_hamiltonian, symmetric_subspace_oracle, track_zero_state, ModelParams, Operators,
    ProductSpace, Regime, TrackConfig, TrackedState, ZeroStateTracker,
};
pub use observables::{
    adiabatic_sweep, expectation, quadrature_variance, scan_phase_transition, Quadratures, RampConfig, ScanConfig,
    ScanOutcome, ScanRow, SweepOutcome, SweepSample,
};
pub use semiclassical::{
    canonical_transform, eom_rhs, fixed_point, integrate, linearize, sde_integrate, zero_energy_curve, EnsembleStats,
    Linearization, PhasePoint, SweepConfig, Trajectory, ZeroEnergyCurve,
};
pub use spin::{build_spin_operators, rotation_operator, SpinOperators};
