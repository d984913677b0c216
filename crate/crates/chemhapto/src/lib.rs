//! Deterministic 2D finite-volume solver for a chemotaxis-haptotaxis system
//! of tumor-invasion type, paired with a harness that monitors the
//! quantitative estimates the model admits along every computed trajectory.
//!
//! The system couples a diffusing, drifting and proliferating cell density
//! `u`, a diffusing enzyme `v` produced by the cells, and an immobile tissue
//! `w` degraded on contact:
//!
//! ```text
//! u_t = Lap u - chi div(u grad v) - xi div(u grad w) + mu u (1 - u - w)
//! v_t = Lap v - v + u
//! w_t = -v w
//! ```
//!
//! on a rectangle with zero-flux boundaries. Alongside the simulation the
//! crate evaluates, at every record time, the quantities whose boundedness
//! characterizes the global behavior of this system (mass, entropy, Lebesgue
//! norms of `u` and `grad v`, sup norms) together with two sharper discrete
//! checks: a pointwise bound tying `-Lap w` to `v`, and per-exponent energy
//! inequalities. See the `book/` guide for the narrative version.
//!
//! Quick tour:
//!
//! ```
//! use chemhapto::grid::GridSpec;
//! use chemhapto::model::{make_initial_state, compute_constants, Params, Preset, WInit};
//! use chemhapto::integrator::{run, StepPolicy};
//!
//! let grid = GridSpec::unit_square(32)?;
//! let preset = Preset::GaussianBump {
//!     amplitude: 4.0, sigma: 0.1, floor: 0.01, v: 0.1, w: WInit::CosineTissue,
//! };
//! let state = make_initial_state(grid, &preset)?;
//! let consts = compute_constants(&state.u, &state.w)?;
//! let params = Params::new(1.0, 1.0, 1.0)?;
//! let policy = StepPolicy { dt_max: 0.05, cfl_safety: 0.9, t_end: 0.5, record_every: 0.1 };
//! let final_state = run(state, &params, &policy, 1e-10, &mut |s| {
//!     println!("t = {}", s.t);
//!     Ok(())
//! })?;
//! assert_eq!(final_state.t, 0.5);
//! # Ok::<(), chemhapto::Error>(())
//! ```

// `!(x > 0.0)` guards reject NaN along with the out-of-range values; the
// equivalent positive comparison would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
mod error;
pub mod grid;
pub mod integrator;
pub mod mms;
pub mod model;
pub mod operators;
pub mod verify;

pub use error::{Error, Result};

// The guide's code samples compile and run as doc-tests, keeping the book in
// sync with the library.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    pub struct ModelChapter;
    #[doc = include_str!("../../../book/src/grid.md")]
    pub struct GridChapter;
    #[doc = include_str!("../../../book/src/operators.md")]
    pub struct OperatorsChapter;
    #[doc = include_str!("../../../book/src/integration.md")]
    pub struct IntegrationChapter;
    #[doc = include_str!("../../../book/src/monitoring.md")]
    pub struct MonitoringChapter;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct CliChapter;
}
