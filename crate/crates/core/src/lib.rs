//! Method-of-characteristics solver for the expansion of a supersonic gas
//! stream around a sharp convex corner into vacuum, for general convex
//! barotropic equations of state.

pub mod eos;
pub mod error;
pub mod goursat;
pub mod monitor;
pub mod node;
pub mod numerics;
pub mod thermo;
pub mod validation;
pub mod waves;

pub use eos::{build_delta_bar_profile, DeltaBarProfile, EosFamily, EosModel, PressureLaw};
pub use error::{FlowError, Result};
pub use thermo::ThermoTable;
pub use node::{char_angles, lambda_plus, CharNode};
pub use waves::{interaction_point, planar_wave_state, BoundaryCurve, CornerProblem, Family, GasState, VacuumCut};
pub use goursat::{extract_level_curve, extract_vacuum_boundary, march_grid, solve_node, CharGrid, LevelCurve, NodeStatus, SolverOptions, VacuumBoundary};
pub use monitor::{alpha0_at_p, audit_grid, hypothesis_check, invariant_box, m1_bound, AuditReport, HypothesisReport, InvariantBox};
pub use validation::{commutator_check, convergence_study, decomposition_residual, pde_residual, second_order_residual, ConvergenceStudy, ResidualReport, SyntheticTriple};
