//! Symbolic differential algebra for one-dimensional diffusion–convection
//! models: exact verification and construction of conservation laws,
//! potential systems layered over them, the point-symmetry equivalence
//! group, and a numeric cross-check layer.

pub mod equiv;
pub mod error;
pub mod expr;
pub mod jet;
pub mod laws;
pub mod numeric;
pub mod potential;

pub use equiv::{
    transform_conserved_vector, transform_expr, transform_model, transform_system,
    EquivTransform,
};
pub use error::EngineError;
pub use expr::{
    canonical, collect, diff, equal, is_zero, normalize, parse, substitute, AntiKind, ArgVar,
    Bindings, Context, Dep, Expr, ExprError, FuncSym, IndepVar, Indeterminate, Rat, RelationSet,
};
pub use jet::{
    total_derivative, Coefficient, DifferentialSystem, ModelBuilder, OnShell, PDEModel,
    PotentialLevel, DEFAULT_CLOSURE_ORDER,
};
pub use laws::{
    classifying_residual, determining_system, from_characteristic, order_of, trivial_shift,
    verify_conservation_law, Characteristic, ConservedVector, DeterminingSystem,
    VerificationReport,
};
pub use numeric::{
    case_instances, compile, sample_on_shell, simulate, track_conserved, Boundary, CaseInstance,
    DriftReport, FuncInstance, GridRun, Instance, Program, SampleReport, Trajectory,
};
pub use potential::{
    build_potential_system, compatibility_residuals, next_level, verify_potential_system,
    registry::{all_cases, case, TableCase, CASE_IDS},
};
