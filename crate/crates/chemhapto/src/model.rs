//! Model parameters, solution state, initial-data presets, and the derived
//! constants that drive the monitored estimates.
//!
//! The system evolves a cell density `u`, an enzyme concentration `v` and a
//! non-diffusing tissue density `w`:
//!
//! ```text
//! u_t = Lap u - chi div(u grad v) - xi div(u grad w) + mu u (1 - u - w)
//! v_t = Lap v - v + u
//! w_t = -v w
//! ```
//!
//! with zero-flux boundaries. Initial data must satisfy `u0 >= 0` with
//! positive total mass, `v0 >= 0`, and `w0 > 0` with vanishing normal
//! derivative; the bundled presets are built so the last condition holds
//! exactly under the mirror-ghost discretization (constants, or cosine
//! profiles spanning a full half period).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{integrate, sup_norm, Field, GridSpec};
use crate::operators::{gradient_neumann, laplacian_neumann, GradientField};

/// The three model coefficients, all required positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub chi: f64,
    pub xi: f64,
    pub mu: f64,
}

impl Params {
    pub fn new(chi: f64, xi: f64, mu: f64) -> Result<Self> {
        for (name, value) in [("chi", chi), ("xi", xi), ("mu", mu)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: match name {
                        "chi" => "chi",
                        "xi" => "xi",
                        _ => "mu",
                    },
                    value,
                    reason: "must be strictly positive",
                });
            }
        }
        Ok(Self { chi, xi, mu })
    }
}

/// Full solution state at one instant, including the per-cell time integrals
/// of `v`, `grad v` and `Lap v` needed by the closed-form representation of
/// `w` and its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Field,
    pub w: Field,
    /// Per-cell accumulated `int_0^t v ds` (trapezoidal in time).
    pub acc_v: Field,
    /// Per-cell accumulated `int_0^t grad v ds`.
    pub acc_gv: GradientField,
    /// Per-cell accumulated `int_0^t Lap v ds`.
    pub acc_lv: Field,
}

impl State {
    pub fn grid(&self) -> GridSpec {
        self.u.grid()
    }
}

/// Constants computed once from the initial data.
///
/// `k_const` bounds `-Lap w` pointwise through `||w0||_inf * v + K`;
/// `m_star` is the mass ceiling `max(|Omega|, int u0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub k_const: f64,
    pub m_star: f64,
    pub w0_sup: f64,
}

/// Choice of initial tissue profile for presets that allow either a constant
/// or the cosine profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WInit {
    Constant(f64),
    /// `w0(x) = 1 + cos(pi x / lx) / 2`: strictly positive, and even about
    /// both x boundaries so the mirror-ghost extension is exact.
    CosineTissue,
}

impl WInit {
    fn build(&self, grid: GridSpec) -> Field {
        match *self {
            WInit::Constant(c) => Field::constant(grid, c),
            WInit::CosineTissue => Field::from_fn(grid, |x, _| {
                1.0 + 0.5 * (std::f64::consts::PI * x / grid.lx()).cos()
            }),
        }
    }

    /// Analytic value at an arbitrary point, used by tests to probe the
    /// mirror extension at ghost-cell centers.
    pub fn eval(&self, grid: GridSpec, x: f64, _y: f64) -> f64 {
        match *self {
            WInit::Constant(c) => c,
            WInit::CosineTissue => 1.0 + 0.5 * (std::f64::consts::PI * x / grid.lx()).cos(),
        }
    }
}

/// Named initial-data presets.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `u = u_bar`, `v = v_bar`, `w = w_bar` everywhere.
    Constant { u: f64, v: f64, w: f64 },
    /// `u0 = amplitude * exp(-r^2 / (2 sigma^2)) + floor` around the domain
    /// center, constant `v0`, and `w0` either constant or cosine tissue.
    GaussianBump {
        amplitude: f64,
        sigma: f64,
        floor: f64,
        v: f64,
        w: WInit,
    },
    /// Cosine tissue profile with constant `u0` and `v0`.
    CosineTissue { u: f64, v: f64 },
    /// `u0 = u_mean * (1 + eps * noise)` from a seeded generator, clamped at
    /// zero; constant `v0`; `w0` constant or cosine tissue.
    Random {
        u_mean: f64,
        eps: f64,
        seed: u64,
        v: f64,
        w: WInit,
    },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constant { .. } => "constant",
            Preset::GaussianBump { .. } => "gaussian-bump",
            Preset::CosineTissue { .. } => "cosine-tissue",
            Preset::Random { .. } => "random",
        }
    }

    /// Seed recorded in run outputs; `None` for deterministic presets.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Preset::Random { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// The tissue profile this preset starts from.
    pub fn w_init(&self) -> WInit {
        match self {
            Preset::Constant { w, .. } => WInit::Constant(*w),
            Preset::GaussianBump { w, .. } | Preset::Random { w, .. } => *w,
            Preset::CosineTissue { .. } => WInit::CosineTissue,
        }
    }

    fn build_fields(&self, grid: GridSpec) -> (Field, Field, Field) {
        match self {
            Preset::Constant { u, v, w } => (
                Field::constant(grid, *u),
                Field::constant(grid, *v),
                Field::constant(grid, *w),
            ),
            Preset::GaussianBump {
                amplitude,
                sigma,
                floor,
                v,
                w,
            } => {
                let (cx, cy) = (grid.lx() / 2.0, grid.ly() / 2.0);
                let two_sigma2 = 2.0 * sigma * sigma;
                let u = Field::from_fn(grid, |x, y| {
                    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                    amplitude * (-r2 / two_sigma2).exp() + floor
                });
                (u, Field::constant(grid, *v), w.build(grid))
            }
            Preset::CosineTissue { u, v } => (
                Field::constant(grid, *u),
                Field::constant(grid, *v),
                WInit::CosineTissue.build(grid),
            ),
            Preset::Random {
                u_mean,
                eps,
                seed,
                v,
                w,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut u = Field::zeros(grid);
                for cell in u.values_mut() {
                    let noise = 2.0 * rng.gen::<f64>() - 1.0;
                    *cell = (u_mean * (1.0 + eps * noise)).max(0.0);
                }
                (u, Field::constant(grid, *v), w.build(grid))
            }
        }
    }
}

/// Build the state at `t = 0` for a preset, with all accumulators zero.
///
/// Rejects data violating the admissible class: `u0` identically zero,
/// negative `u0` or `v0`, or `w0 <= 0` anywhere.
pub fn make_initial_state(grid: GridSpec, preset: &Preset) -> Result<State> {
    let (u, v, w) = preset.build_fields(grid);
    for (name, field) in [("u0", &u), ("v0", &v)] {
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let val = field.get(i, j);
                if !val.is_finite() || val < 0.0 {
                    return Err(Error::InvalidInitialData(format!(
                        "preset {} produced {name}({i}, {j}) = {val}",
                        preset.name()
                    )));
                }
            }
        }
    }
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let val = w.get(i, j);
            if !val.is_finite() || val <= 0.0 {
                return Err(Error::InvalidInitialData(format!(
                    "preset {} produced w0({i}, {j}) = {val}; w0 must be positive",
                    preset.name()
                )));
            }
        }
    }
    if integrate(&u)? <= 0.0 {
        return Err(Error::InvalidInitialData(format!(
            "preset {} produced u0 with zero mass",
            preset.name()
        )));
    }
    Ok(State {
        t: 0.0,
        u,
        v,
        w,
        acc_v: Field::zeros(grid),
        acc_gv: GradientField::zeros(grid),
        acc_lv: Field::zeros(grid),
    })
}

/// Compute `K`, `m*` and `||w0||_inf` from the initial data.
///
/// `K = ||Lap_h w0||_inf + 4 ||grad_h sqrt(w0)||_inf^2 + ||w0||_inf / e`,
/// using the same Neumann stencils as the solver so the `t = 0` pointwise
/// estimate holds exactly at the discrete level.
pub fn compute_constants(u0: &Field, w0: &Field) -> Result<DerivedConstants> {
    let grid = w0.grid();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let val = w0.get(i, j);
            if !(val > 0.0) {
                return Err(Error::InvalidInitialData(format!(
                    "compute_constants requires w0 > 0, got w0({i}, {j}) = {val}"
                )));
            }
        }
    }
    let w0_sup = sup_norm(w0)?;
    let lap_sup = sup_norm(&laplacian_neumann(w0))?;
    let mut sqrt_w0 = w0.clone();
    sqrt_w0.map_in_place(f64::sqrt);
    let grad_sqrt_sup = sup_norm(&gradient_neumann(&sqrt_w0).magnitude())?;
    let k_const = lap_sup + 4.0 * grad_sqrt_sup * grad_sqrt_sup + w0_sup / std::f64::consts::E;
    let m_star = grid.area().max(integrate(u0)?);
    Ok(DerivedConstants {
        k_const,
        m_star,
        w0_sup,
    })
}
