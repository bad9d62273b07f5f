//! Two-stage stochastic scheduling of a grid-connected microgrid with CHP
//! units, plug-in hybrid vehicles and deferrable loads.
//!
//! The pipeline is: ingest a [`MicrogridConfig`], generate and reduce a
//! [`ScenarioSet`], assemble the deterministic equivalent with
//! [`formulation::build`], solve it with [`lpcore`], and map the solution back
//! to a [`Schedule`].

pub mod formulation;
pub mod io;
pub mod lpcore;
pub mod model;
pub mod scenario;

pub use formulation::{build, extract_schedule, FormulationOptions, ParkingMode, StageMode, VariableIndex};
pub use lpcore::{solve_lp, solve_milp, LpProblem, LpSolution, LpStatus, SolveSettings};
pub use model::{
    check_balance, evaluate_cost, validate_config, ChpUnit, DeferrableLoad, Dispatch, GridTariff, MicrogridConfig,
    Phev, Scenario, ScenarioSchedule, Schedule,
};
pub use scenario::{generate, reduce_fast_forward, DistanceWeights, GenerationSpec, ScenarioSet};
