//! Time integration of the coupled system.
//!
//! One step advances the state through a fixed substep order:
//!
//! 1. `v`: solve `(I + dt I - dt Lap) v1 = v0 + dt u0` (implicit diffusion
//!    and decay, explicit source);
//! 2. `w`: `w1 = w0 exp(-dt (v0 + v1) / 2)`, the exact solution of the tissue
//!    ODE with a trapezoidal exponent;
//! 3. `u`: explicit upwind taxis and logistic reaction against the fresh
//!    potentials, then an implicit diffusion solve `(I - dt Lap) u1 = rhs`;
//! 4. accumulators for `int v`, `int grad v` and `int Lap v` advance with the
//!    same trapezoidal rule, which makes `w = w0 exp(-acc_v)` an identity of
//!    the scheme rather than an approximation.
//!
//! The scheme is first order in time overall. `w` inherits positivity and
//! monotone decay exactly: the update multiplies by `exp` of a nonpositive
//! number, so `0 < w1 <= w0` holds to rounding at every cell and step.

use crate::error::{Error, Result};
use crate::grid::{sup_norm, Field};
use crate::model::{Params, State};
use crate::operators::{
    gradient_neumann, laplacian_neumann, solve_diffusion_implicit_tol, taxis_divergence,
    DEFAULT_SOLVER_TOL, NEGATIVITY_TOLERANCE,
};

/// Step-size policy and run horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub record_every: f64,
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt_max",
                value: self.dt_max,
                reason: "must be positive",
            });
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "cfl_safety",
                value: self.cfl_safety,
                reason: "must lie in (0, 1]",
            });
        }
        // t_end = 0 is allowed: run() then returns the initial state after
        // emitting its single record.
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: self.t_end,
                reason: "must be nonnegative",
            });
        }
        if !(self.record_every > 0.0) {
            return Err(Error::InvalidParameter {
                name: "record_every",
                value: self.record_every,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

/// Largest admissible step for the current state, before policy limits:
/// the upwind CFL bound per axis and a bound keeping the explicit logistic
/// update monotonicity-safe.
fn raw_stability_bound(state: &State, params: &Params) -> Result<f64> {
    let g = state.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let v = state.v.values();
    let w = state.w.values();
    let (inv_dx, inv_dy) = (1.0 / g.dx(), 1.0 / g.dy());
    let mut speed_x = 0.0_f64;
    for j in 0..ny {
        for i in 0..nx - 1 {
            let k = j * nx + i;
            let s = params.chi * (v[k + 1] - v[k]).abs() * inv_dx
                + params.xi * (w[k + 1] - w[k]).abs() * inv_dx;
            speed_x = speed_x.max(s);
        }
    }
    let mut speed_y = 0.0_f64;
    for j in 0..ny - 1 {
        for i in 0..nx {
            let k = j * nx + i;
            let s = params.chi * (v[k + nx] - v[k]).abs() * inv_dy
                + params.xi * (w[k + nx] - w[k]).abs() * inv_dy;
            speed_y = speed_y.max(s);
        }
    }
    let mut bound = f64::INFINITY;
    if speed_x > 0.0 {
        bound = bound.min(g.dx() / (2.0 * speed_x));
    }
    if speed_y > 0.0 {
        bound = bound.min(g.dy() / (2.0 * speed_y));
    }
    let reaction = 1.0 / (params.mu * (1.0 + sup_norm(&state.u)? + sup_norm(&state.w)?));
    Ok(bound.min(reaction))
}

/// Stable step size under the policy: `cfl_safety` times the minimum of
/// `dt_max`, the per-axis upwind CFL bounds, and the reaction bound.
/// Never returns less than `1e-12`.
pub fn stable_dt(state: &State, params: &Params, policy: &StepPolicy) -> Result<f64> {
    let raw = raw_stability_bound(state, params)?;
    Ok((policy.cfl_safety * raw.min(policy.dt_max)).max(1e-12))
}

/// Per-cell trapezoid increment `dt (f0 + f1) / 2`.
fn trapezoid_increment(f0: &Field, f1: &Field, dt: f64) -> Field {
    let half_dt = 0.5 * dt;
    let mut out = f0.clone();
    let o = out.values_mut();
    let b = f1.values();
    for k in 0..o.len() {
        o[k] = half_dt * (o[k] + b[k]);
    }
    out
}

/// Exponential tissue update `w * exp(-increment)` against the same
/// trapezoid increment that advances `acc_v`, so `w == w0 exp(-acc_v)` is an
/// identity of the scheme.
fn w_exponential_update(w: &Field, v_increment: &Field) -> Field {
    let mut out = w.clone();
    let o = out.values_mut();
    let inc = v_increment.values();
    for k in 0..o.len() {
        o[k] *= (-inc[k]).exp();
    }
    out
}

/// Advance one step of size `dt` with the default solver tolerance.
pub fn step(state: &State, params: &Params, dt: f64) -> Result<State> {
    step_with_tol(state, params, dt, DEFAULT_SOLVER_TOL)
}

/// Advance one step of size `dt`.
///
/// `dt` must satisfy the stability bound for the current state; the upwind
/// flux and explicit reaction then keep the new `u` nonnegative up to
/// rounding, and any negative entry within `-1e-12` is clamped to zero.
pub fn step_with_tol(state: &State, params: &Params, dt: f64, solver_tol: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be positive",
        });
    }
    let bound = raw_stability_bound(state, params)?;
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, bound });
    }
    let t_new = state.t + dt;

    // (a) enzyme: implicit diffusion and decay, explicit source.
    let rhs_v = state.v.zip_with(&state.u, |v, u| v + dt * u)?;
    let mut v_new = solve_diffusion_implicit_tol(&rhs_v, dt, 1.0, 1.0, solver_tol)?;
    clamp_nonnegative(&mut v_new, "v", t_new)?;

    // (b) tissue: exact exponential with trapezoidal exponent. v >= 0 makes
    // the factor <= 1, so positivity and monotone decay hold exactly.
    let v_increment = trapezoid_increment(&state.v, &v_new, dt);
    let w_new = w_exponential_update(&state.w, &v_increment);
    check_w_invariants(&state.w, &w_new, t_new)?;

    // (c) cells: explicit taxis against the fresh potentials, explicit
    // logistic reaction, implicit diffusion.
    let taxis_v = taxis_divergence(&state.u, &v_new, params.chi)?;
    let taxis_w = taxis_divergence(&state.u, &w_new, params.xi)?;
    let mut rhs_u = state.u.clone();
    {
        let r = rhs_u.values_mut();
        let u = state.u.values();
        let w = w_new.values();
        let tv = taxis_v.values();
        let tw = taxis_w.values();
        for k in 0..r.len() {
            r[k] = u[k] + dt * (-tv[k] - tw[k] + params.mu * u[k] * (1.0 - u[k] - w[k]));
        }
    }
    let mut u_new = solve_diffusion_implicit_tol(&rhs_u, dt, 1.0, 0.0, solver_tol)?;
    clamp_nonnegative(&mut u_new, "u", t_new)?;

    // (d) trapezoidal accumulators; acc_v advances by the exact increment
    // the w-update just exponentiated.
    let acc_v = state.acc_v.zip_with(&v_increment, |acc, inc| acc + inc)?;
    let g0 = gradient_neumann(&state.v);
    let g1 = gradient_neumann(&v_new);
    let acc_gv = crate::operators::GradientField {
        gx: add_increment(&state.acc_gv.gx, &trapezoid_increment(&g0.gx, &g1.gx, dt)),
        gy: add_increment(&state.acc_gv.gy, &trapezoid_increment(&g0.gy, &g1.gy, dt)),
    };
    let l0 = laplacian_neumann(&state.v);
    let l1 = laplacian_neumann(&v_new);
    let acc_lv = add_increment(&state.acc_lv, &trapezoid_increment(&l0, &l1, dt));

    Ok(State {
        t: t_new,
        u: u_new,
        v: v_new,
        w: w_new,
        acc_v,
        acc_gv,
        acc_lv,
    })
}

fn add_increment(acc: &Field, increment: &Field) -> Field {
    let mut out = acc.clone();
    let o = out.values_mut();
    let inc = increment.values();
    for k in 0..o.len() {
        o[k] += inc[k];
    }
    out
}

/// Error on entries below `-1e-12`, clamp the rounding-level rest to zero.
fn clamp_nonnegative(f: &mut Field, name: &'static str, t: f64) -> Result<()> {
    let g = f.grid();
    let nx = g.nx();
    let v = f.values_mut();
    for (k, val) in v.iter_mut().enumerate() {
        if *val < 0.0 {
            if *val < -NEGATIVITY_TOLERANCE {
                return Err(Error::PositivityFailure {
                    field: name,
                    i: k % nx,
                    j: k / nx,
                    value: *val,
                    t,
                });
            }
            *val = 0.0;
        }
    }
    Ok(())
}

fn check_w_invariants(w_old: &Field, w_new: &Field, t: f64) -> Result<()> {
    let nx = w_new.grid().nx();
    for (k, (&new, &old)) in w_new.values().iter().zip(w_old.values()).enumerate() {
        if !(new > 0.0) || new > old {
            return Err(Error::PositivityFailure {
                field: "w",
                i: k % nx,
                j: k / nx,
                value: new,
                t,
            });
        }
    }
    Ok(())
}

/// Advance until `t >= t_end`, choosing `stable_dt` steps capped so the
/// trajectory lands exactly on every record time (multiples of
/// `record_every`) and on `t_end`. The sink is invoked on the initial state
/// and on every landing; given identical inputs the whole trajectory,
/// including the step sequence, is reproducible bit for bit.
pub fn run(
    initial: State,
    params: &Params,
    policy: &StepPolicy,
    solver_tol: f64,
    sink: &mut dyn FnMut(&State) -> Result<()>,
) -> Result<State> {
    policy.validate()?;
    let mut state = initial;
    sink(&state)?;
    if policy.t_end <= state.t {
        return Ok(state);
    }
    // First record index strictly ahead of the starting time, so a restarted
    // run continues the same record grid.
    let mut rec_index = (state.t / policy.record_every).floor() as u64 + 1;
    while (rec_index as f64) * policy.record_every <= state.t {
        rec_index += 1;
    }
    let mut step_index: usize = 0;
    loop {
        let next_record = rec_index as f64 * policy.record_every;
        let target = next_record.min(policy.t_end);
        let dt = stable_dt(&state, params, policy)?.min(target - state.t);
        let t_before = state.t;
        state = step_with_tol(&state, params, dt, solver_tol).map_err(|e| Error::StepFailed {
            index: step_index,
            t: t_before,
            source: Box::new(e),
        })?;
        step_index += 1;
        // Landing on the target is exact by construction of dt up to one
        // rounding; snap the clock so record times stay clean.
        if state.t >= target - 1e-12 * target.max(1.0) {
            state.t = target;
            sink(&state)?;
            if target >= policy.t_end {
                return Ok(state);
            }
            rec_index += 1;
        }
    }
}
