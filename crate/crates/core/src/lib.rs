//! Randomized approximate model counting for k-CNF formulas.
//!
//! The counter grows a set of small, variable-disjoint subformulas (structs),
//! explores a pruned elimination tree until either the exact count is known
//! or a threshold number of models is certified, and otherwise estimates the
//! count by sampling from the assignments that satisfy every struct.
//!
//! ```
//! use sharpk_core::{approx_count, parse_dimacs, Strategy};
//!
//! let phi = parse_dimacs("p cnf 3 2\n-1 2 0\n-2 3 0\n").unwrap();
//! let est = approx_count(&phi, 0.1, 0.1, Strategy::IndepStructs, 7).unwrap();
//! assert_eq!(est.value_f64(), 4.0);
//! ```

pub mod cnf;
pub mod cut;
pub mod decider;
pub mod error;
pub mod exact;
pub mod generate;
pub mod mc;
pub mod params;
pub mod ras;
pub mod rng;
pub mod stats;
pub mod structs;

pub use cnf::{
    parse_dimacs, parse_dimacs_with_report, serialize_dimacs, Clause, CnfFormula, Literal,
    ParseReport, PartialAssignment, Var,
};
pub use cut::{
    cut, ell_for_cut, BranchingStrategy, CutKind, CutOptions, CutResult, EliminationOrder,
};
pub use decider::{DecisionOutcome, ExactDecider, SatDecider, SchoeningDecider};
pub use error::{Error, Result};
pub use exact::{brute_force_count, count_2sat_exact, count_exact, ExactCount, BRUTE_FORCE_LIMIT};
pub use generate::{generate, GeneratorMode, GeneratorSpec};
pub use mc::{
    mc_estimate, median_boost, sample_size, sample_universe, Estimate, McOptions, Universe,
    WorkCounters,
};
pub use params::{params_for, params_with_alphas, ParamSet, Strategy};
pub use ras::{approx_count, approx_count_with, DeciderKind, RasConfig};
pub use stats::{chi_square_from_counts, chi_square_uniformity};
pub use structs::{
    build_structs, red_clauses, red_structs, struct_stats, RedOutcome, Struct, StructLibrary,
    StructSet, StructStats,
};
