//! Prototype-based clustering of probability vectors under the
//! Kullback-Leibler divergence: the CM (Clustering-Minimisation) algorithm,
//! regularized selection of the number of clusters, cluster-merge bounds,
//! simplex-geometry checks, synthetic data generation and CSV/JSON IO.
//!
//! All divergences and entropies are in nats.

pub mod cm;
pub mod datagen;
pub mod divergence;
pub mod error;
pub mod io;
pub mod risk;
pub mod select;
pub mod simplex;
pub mod theory;

pub use cm::{
    assign, fixed_distortion, init_codebook, run_cm, run_cm_restarts, update_centers, CmConfig,
    CmRun, CmTrace, Codebook, InitPolicy, Termination,
};
pub use datagen::{generate, preset, preset_names, MixtureSpec};
pub use divergence::{kl, kl_smoothed, kls, structural_loss, xi, eta, EtaVector, XiVector};
pub use error::{Error, Result};
pub use io::{
    consistency_curve_csv, export_dataset_csv, ingest_csv, read_mixture_spec, run_to_json,
    selection_report_csv, write_consistency_csv, write_consistency_json, write_json,
    write_mixture_spec, write_run_json, write_selection_csv, write_selection_json,
};
pub use risk::{
    apply_merge, empirical_risk, merge_bound, plan_merge, risk_decomposition, ClusterRisk,
    MergePlan, RiskReport,
};
pub use select::{
    check_constraints, cost, select_k, ConstraintCheck, RegularizationParams, SelectionConfig,
    SelectionReport, SelectionRow,
};
pub use simplex::{Assignment, Dataset, ProbVector, SIMPLEX_TOLERANCE};
pub use theory::{
    ball_contains, extremal_pair, min_ball_radius, rho_bounds_check, rho_bracket,
    run_consistency, run_theory_checks, sup_loss, ConsistencyConfig, ConsistencyCurve,
    ConsistencyRow, RhoBracket, RhoCheck, TheoryReport,
};
