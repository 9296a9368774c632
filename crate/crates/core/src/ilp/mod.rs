//! Integer linear programming encoding over one-hot indicators, with gates
//! expressed as activity-relaxed equalities and an LP-relaxation mode.

mod emit;
mod lp_file;
mod solve;

pub use emit::{emit_ilp, CellRef, IlpMode, IlpModel, IlpVar, Row, Sense};
pub use lp_file::write_lp_file;
pub use solve::{
    lp_bound_report, parse_solution, run_ilp_solver, solve_ilp, synthesize, IlpOutcome, IlpRun, LpBoundReport,
    RawSolution, SolutionError, SolutionStatus,
};
