//! Pollicott-Ruelle resonances of open hyperbolic flows.
//!
//! The crate computes weighted periodic-orbit trace sums and dynamical zeta
//! functions for a small family of solvable models, continues the trace data
//! meromorphically past its abscissa of convergence, and extracts resonances
//! (poles of the continued trace) together with their residues (ranks).
//!
//! Models are described by [`ModelDescriptor`]; the solvable examples are the
//! open linear flow on a solid torus ([`basic_example`]), suspensions of
//! hyperbolic toral automorphisms ([`cat_suspension`]), and a linear horseshoe
//! suspension ([`horseshoe_suspension`]). Each carries an exact resonance
//! oracle so every numerical pipeline stage can be cross-checked.

pub mod matrix;
pub mod models;
pub mod orbit;
pub mod orbits;
pub mod quad;
pub mod resonances;
pub mod traces;
pub mod transport;

pub use matrix::{IMat2, SqMatrix};
pub use models::{
    basic_example, cat_suspension, degenerate_drift, horseshoe_suspension, model_from_config,
    ModelDescriptor, ModelError, ModelKind, OraclePole, Region,
};
pub use orbit::{
    check_orientability, expand_repetitions, orbit_weight, wedge_trace, ClosedOrbit, OrbitError,
    Potential, PrimitiveCycle, WeightParams,
};
pub use orbits::{
    cat_fixed_points, count_orbits, group_into_cycles, lyndon_cycles, lyndon_words,
    necklace_count, poincare_of_cycle, EnumError, OrbitCountTable, TorusPoint,
};
pub use resonances::{
    contour_residue_sum, locate_resonances, model_continuation, residue_at,
    verify_against_oracle, Method, ResonanceError, ResonanceReport, VerificationReport,
};
pub use traces::{
    continue_basic, continue_basic_unchecked, continue_cat, continue_cat_unchecked,
    continue_horseshoe, continue_horseshoe_unchecked, trace_sum, zeta_log_derivative,
    zeta_product, TraceError, TraceValue, HORSESHOE_J_DEFAULT,
};
pub use transport::{
    certify_cones, check_convexity, escape_time, escape_time_numeric, flow, pde_residual,
    resolvent_apply, trapped_set_approx, BumpField, ConeCertificate, ConvexityReport,
    EscapeResult, EscapeTime, QuadRule, QuadratureParams, ResolventValue, TestField,
    TransportError, TrappedMasks,
};
