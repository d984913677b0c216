//! The self-verification suite behind `chemhapto verify`: operator exactness,
//! convergence orders, solver and oracle cross-checks, and the `t = 0`
//! pointwise estimate across all bundled presets.

use std::f64::consts::PI;

use crate::analysis::{ledger, scalar_bound_l};
use crate::error::Result;
use crate::grid::{integrate, sup_norm, Field, GridSpec};
use crate::integrator::{run, step, StepPolicy};
use crate::mms;
use crate::model::{compute_constants, make_initial_state, Params, Preset, WInit};
use crate::operators::{
    gradient_neumann, laplacian_neumann, solve_diffusion_implicit, taxis_divergence,
};

/// Outcome of one named check: `measured` must not exceed `bound`.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, bound: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            passed: measured.is_finite() && measured <= bound,
            detail,
        }
    }

    fn at_least(name: impl Into<String>, measured: f64, bound: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            passed: measured.is_finite() && measured >= bound,
            detail,
        }
    }
}

/// Hooks for fault-injection tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Replace the Laplacian in the convergence check by a miscalibrated one;
    /// the suite must then fail.
    pub break_stencil: bool,
}

fn stencil_convergence(break_stencil: bool) -> Result<Check> {
    let lap = |f: &Field| {
        let mut l = laplacian_neumann(f);
        if break_stencil {
            l.map_in_place(|v| v * 1.001);
        }
        l
    };
    let errs: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&n| -> Result<f64> {
            let grid = GridSpec::unit_square(n)?;
            let f = Field::from_fn(grid, |x, _| (PI * x).cos());
            let exact = Field::from_fn(grid, |x, _| -PI * PI * (PI * x).cos());
            let diff = lap(&f).zip_with(&exact, |a, b| a - b)?;
            sup_norm(&diff)
        })
        .collect::<Result<_>>()?;
    let order = errs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    Ok(Check::at_least(
        "laplacian convergence order",
        order,
        1.9,
        format!("errors {errs:?}"),
    ))
}

fn operator_exactness() -> Result<Vec<Check>> {
    let grid = GridSpec::unit_square(32)?;
    let mut checks = Vec::new();

    let lap_const = laplacian_neumann(&Field::constant(grid, 3.7));
    checks.push(Check::at_most(
        "laplacian on constants",
        sup_norm(&lap_const)?,
        0.0,
        "must vanish identically".into(),
    ));

    let lap_quad = laplacian_neumann(&Field::from_fn(grid, |x, _| x * x));
    let mut interior_err = 0.0_f64;
    for j in 1..grid.ny() - 1 {
        for i in 1..grid.nx() - 1 {
            interior_err = interior_err.max((lap_quad.get(i, j) - 2.0).abs());
        }
    }
    checks.push(Check::at_most(
        "laplacian on x^2 (interior)",
        interior_err,
        1e-9,
        "five-point stencil is exact on quadratics".into(),
    ));

    let grad = gradient_neumann(&Field::from_fn(grid, |_, y| y));
    let mut gy_err = 0.0_f64;
    for j in 1..grid.ny() - 1 {
        for i in 0..grid.nx() {
            gy_err = gy_err.max((grad.gy.get(i, j) - 1.0).abs());
        }
    }
    checks.push(Check::at_most(
        "gradient on linears (interior rows)",
        gy_err,
        1e-12,
        "centered differences are exact on linears".into(),
    ));

    let u = Field::from_fn(grid, |x, y| 1.0 + (3.0 * x).sin().abs() + y);
    let pot = Field::from_fn(grid, |x, y| (2.0 * x + y).cos());
    let div = taxis_divergence(&u, &pot, 1.3)?;
    checks.push(Check::at_most(
        "taxis flux telescoping",
        integrate(&div)?.abs(),
        1e-12 * sup_norm(&u)? * sup_norm(&pot)? / grid.dx(),
        "conservative form sums to zero".into(),
    ));

    let rhs = Field::from_fn(grid, |x, y| (5.0 * x).sin() * (3.0 * y).cos() + 0.3);
    let sol = solve_diffusion_implicit(&rhs, 0.05, 1.0, 1.0)?;
    // Forward application must recover the right-hand side.
    let lap_sol = laplacian_neumann(&sol);
    let forward = sol.zip_with(&lap_sol, |s, l| 1.05 * s - 0.05 * l)?;
    let defect = forward.zip_with(&rhs, |a, b| a - b)?;
    let rel = {
        let num: f64 = defect.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let den: f64 = rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        num / den
    };
    checks.push(Check::at_most(
        "implicit solve forward defect",
        rel,
        1e-9,
        "relative l2 defect of (I + dt I - dt Lap) against rhs".into(),
    ));

    Ok(checks)
}

/// RK4 reference for the homogeneous reduction
/// `u' = mu u (1 - u - w), v' = u - v, w' = -v w`.
pub fn homogeneous_ode_reference(y0: [f64; 3], mu: f64, dt: f64, t_end: f64) -> [f64; 3] {
    let f = |y: [f64; 3]| {
        [
            mu * y[0] * (1.0 - y[0] - y[2]),
            y[0] - y[1],
            -y[1] * y[2],
        ]
    };
    let at = |y: [f64; 3], k: [f64; 3], s: f64| {
        [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]]
    };
    let mut y = y0;
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        let k1 = f(y);
        let k2 = f(at(y, k1, dt / 2.0));
        let k3 = f(at(y, k2, dt / 2.0));
        let k4 = f(at(y, k3, dt));
        for c in 0..3 {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y
}

/// Run the full scheme on homogeneous data and report the max relative error
/// against the RK4 reference at `t_end`.
pub fn homogeneous_ode_error(dt: f64, t_end: f64) -> Result<f64> {
    let y0 = [0.5, 0.2, 1.0];
    let params = Params::new(1.0, 1.0, 1.0)?;
    let reference = homogeneous_ode_reference(y0, params.mu, 1e-5, t_end);
    let mut state = make_initial_state(
        GridSpec::unit_square(8)?,
        &Preset::Constant {
            u: y0[0],
            v: y0[1],
            w: y0[2],
        },
    )?;
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        state = step(&state, &params, dt)?;
    }
    let got = [state.u.get(4, 4), state.v.get(4, 4), state.w.get(4, 4)];
    Ok((0..3)
        .map(|c| (got[c] - reference[c]).abs() / reference[c].abs())
        .fold(0.0_f64, f64::max))
}

fn ode_oracle_check() -> Result<Check> {
    // The splitting is first order; its measured error constant on this
    // trajectory is ~0.156 dt (dominated by the explicit logistic update),
    // so 0.25 dt is the honest envelope for a healthy build.
    let dt = 1e-3;
    let err = homogeneous_ode_error(dt, 5.0)?;
    Ok(Check::at_most(
        "homogeneous run vs 3-ODE reference (dt=1e-3, t=5)",
        err,
        0.25 * dt,
        "max relative error over (u, v, w); first-order envelope".into(),
    ))
}

fn scalar_bound_checks() -> Result<Vec<Check>> {
    // Direct definition, independent of the implementation's internals.
    let phi =
        |z: f64, mu: f64, a: f64| (1.0 + mu) * z * z.ln() + a * z * z - mu * z * z * z.ln();
    let mut checks = Vec::new();
    for (mu, a, samples) in [(1.0, 0.0, 10_000_000usize), (0.5, 2.0, 1_000_000)] {
        let sb = scalar_bound_l(mu, a)?;
        let z_max = 10.0 * sb.z_star + 10.0;
        let mut excess: f64 = f64::NEG_INFINITY;
        for k in 1..=samples {
            let z = z_max * k as f64 / samples as f64;
            excess = excess.max(phi(z, mu, a) - sb.l);
        }
        checks.push(Check::at_most(
            format!("scalar bound dense scan (mu={mu}, A={a})"),
            excess,
            1e-9,
            format!("L = {}, z* = {}, {} samples", sb.l, sb.z_star, samples),
        ));
        checks.push(Check::at_least(
            format!("scalar bound dominates phi(1) (mu={mu}, A={a})"),
            sb.l,
            a,
            "phi(1) = A exactly".into(),
        ));
    }
    Ok(checks)
}

/// All bundled presets with their default parameters.
pub fn bundled_presets() -> Vec<Preset> {
    vec![
        Preset::Constant {
            u: 1.0,
            v: 1.0,
            w: 1.0,
        },
        Preset::GaussianBump {
            amplitude: 4.0,
            sigma: 0.1,
            floor: 0.01,
            v: 0.1,
            w: WInit::CosineTissue,
        },
        Preset::CosineTissue { u: 1.0, v: 0.1 },
        Preset::Random {
            u_mean: 1.0,
            eps: 0.1,
            seed: 42,
            v: 0.1,
            w: WInit::Constant(1.0),
        },
    ]
}

fn initial_pointwise_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in [64usize, 128] {
        let mut worst = f64::NEG_INFINITY;
        let mut which = String::new();
        for preset in bundled_presets() {
            let state = make_initial_state(GridSpec::unit_square(n)?, &preset)?;
            let consts = compute_constants(&state.u, &state.w)?;
            let rec = ledger(&state, &state.w, &consts, &[2, 3])?;
            if rec.pointwise_residual > worst {
                worst = rec.pointwise_residual;
                which = preset.name().to_string();
            }
        }
        checks.push(Check::at_most(
            format!("t=0 pointwise estimate, all presets at {n}^2"),
            worst,
            1e-12,
            format!("worst preset: {which}"),
        ));
    }
    Ok(checks)
}

fn closed_form_identity_check() -> Result<Check> {
    let state = make_initial_state(
        GridSpec::unit_square(32)?,
        &Preset::GaussianBump {
            amplitude: 4.0,
            sigma: 0.1,
            floor: 0.01,
            v: 0.1,
            w: WInit::CosineTissue,
        },
    )?;
    let w0 = state.w.clone();
    let w0_sup = sup_norm(&w0)?;
    let params = Params::new(1.0, 1.0, 1.0)?;
    let policy = StepPolicy {
        dt_max: 0.05,
        cfl_safety: 0.9,
        t_end: 2.0,
        record_every: 0.5,
    };
    let mut worst = 0.0_f64;
    run(state, &params, &policy, 1e-10, &mut |s| {
        let closed = w0.zip_with(&s.acc_v, |w, a| w * (-a).exp())?;
        let diff = s.w.zip_with(&closed, |a, b| (a - b).abs())?;
        worst = worst.max(sup_norm(&diff)?);
        Ok(())
    })?;
    Ok(Check::at_most(
        "closed-form tissue identity over a run",
        worst / w0_sup,
        1e-12,
        "sup |w - w0 exp(-acc_v)| / ||w0||_inf at every record".into(),
    ))
}

/// Run every check; the suite passes iff all checks pass.
pub fn run_all(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut checks = operator_exactness()?;
    checks.push(stencil_convergence(opts.break_stencil)?);
    for report in mms::run_all()? {
        let order = report.orders.iter().fold(f64::INFINITY, |m, &o| m.min(o));
        checks.push(Check::at_least(
            format!("mms {} spatial order", report.name),
            order,
            report.threshold,
            format!("errors {:?}", report.errors),
        ));
    }
    checks.push(ode_oracle_check()?);
    checks.extend(scalar_bound_checks()?);
    checks.extend(initial_pointwise_checks()?);
    checks.push(closed_form_identity_check()?);
    Ok(checks)
}

/// Fixed-width table, one line per check.
pub fn render_table(checks: &[Check]) -> String {
    let mut out = String::new();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {}  measured {:>13.6e}  bound {:>13.6e}  ({})\n",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.measured,
            c.bound,
            c.detail,
            width = width
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!(
        "{} checks, {} failed\n",
        checks.len(),
        failed
    ));
    out
}
