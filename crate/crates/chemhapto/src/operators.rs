//! Discrete spatial operators under homogeneous Neumann (zero-flux) boundary
//! conditions.
//!
//! All operators use mirror ghost cells: the ghost value outside a boundary
//! face equals the adjacent interior value, which imposes a vanishing normal
//! derivative to second order on the cell-centered grid. The taxis divergence
//! is written in conservative face-flux form with first-order upwinding, so
//! it conserves mass exactly and preserves positivity under the CFL bound the
//! integrator enforces.

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// Threshold separating rounding noise from a genuine negative value.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// Default relative-residual tolerance of the implicit diffusion solve.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Per-cell gradient components produced by [`gradient_neumann`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Field,
    pub gy: Field,
}

impl GradientField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            gx: Field::zeros(grid),
            gy: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.gx.grid()
    }

    /// Pointwise Euclidean magnitude `sqrt(gx^2 + gy^2)`.
    pub fn magnitude(&self) -> Field {
        self.gx
            .zip_with(&self.gy, |a, b| a.hypot(b))
            .expect("components share a grid")
    }

    /// Pointwise squared magnitude, cheaper than [`Self::magnitude`].
    pub fn magnitude_squared(&self) -> Field {
        self.gx
            .zip_with(&self.gy, |a, b| a * a + b * b)
            .expect("components share a grid")
    }
}

#[inline]
fn mirror_dec(i: usize) -> usize {
    if i == 0 {
        0
    } else {
        i - 1
    }
}

#[inline]
fn mirror_inc(i: usize, n: usize) -> usize {
    if i + 1 >= n {
        i
    } else {
        i + 1
    }
}

/// Five-point Laplacian with mirror ghosts; exact on quadratics in the
/// interior and zero on constants everywhere.
pub fn laplacian_neumann(f: &Field) -> Field {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inv_dx2 = 1.0 / (g.dx() * g.dx());
    let inv_dy2 = 1.0 / (g.dy() * g.dy());
    let v = f.values();
    let mut out = Field::zeros(g);
    let o = out.values_mut();
    for j in 0..ny {
        let (js, jn) = (mirror_dec(j), mirror_inc(j, ny));
        for i in 0..nx {
            let (iw, ie) = (mirror_dec(i), mirror_inc(i, nx));
            let c = v[j * nx + i];
            o[j * nx + i] = (v[j * nx + ie] + v[j * nx + iw] - 2.0 * c) * inv_dx2
                + (v[jn * nx + i] + v[js * nx + i] - 2.0 * c) * inv_dy2;
        }
    }
    out
}

/// Centered-difference gradient with mirror ghosts. In boundary cells the
/// mirrored neighbor collapses the normal component to a one-sided half
/// difference, consistent with the zero-flux condition.
pub fn gradient_neumann(f: &Field) -> GradientField {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inv_2dx = 0.5 / g.dx();
    let inv_2dy = 0.5 / g.dy();
    let v = f.values();
    let mut grad = GradientField::zeros(g);
    let gx = grad.gx.values_mut();
    for j in 0..ny {
        for i in 0..nx {
            let (iw, ie) = (mirror_dec(i), mirror_inc(i, nx));
            gx[j * nx + i] = (v[j * nx + ie] - v[j * nx + iw]) * inv_2dx;
        }
    }
    let gy = grad.gy.values_mut();
    for j in 0..ny {
        let (js, jn) = (mirror_dec(j), mirror_inc(j, ny));
        for i in 0..nx {
            gy[j * nx + i] = (v[jn * nx + i] - v[js * nx + i]) * inv_2dy;
        }
    }
    grad
}

/// Conservative upwind divergence `coeff * div(u grad potential)`.
///
/// The face velocity across each interior face is `coeff` times the potential
/// difference over the cell spacing; `u` at the face is taken from the upwind
/// side. Boundary faces carry zero flux, so the returned field sums to zero
/// exactly up to rounding.
pub fn taxis_divergence(u: &Field, potential: &Field, coeff: f64) -> Result<Field> {
    let g = u.grid();
    if potential.grid() != g {
        return Err(Error::GridMismatch);
    }
    let (nx, ny) = (g.nx(), g.ny());
    let uv = u.values();
    for j in 0..ny {
        for i in 0..nx {
            let val = uv[j * nx + i];
            if val < -NEGATIVITY_TOLERANCE {
                return Err(Error::Negative {
                    what: "taxis_divergence input u".to_string(),
                    i,
                    j,
                    value: val,
                });
            }
        }
    }
    let pv = potential.values();
    let inv_dx = 1.0 / g.dx();
    let inv_dy = 1.0 / g.dy();
    let mut out = Field::zeros(g);
    let o = out.values_mut();
    // x faces between (i, j) and (i+1, j)
    for j in 0..ny {
        for i in 0..nx - 1 {
            let k = j * nx + i;
            let vel = coeff * (pv[k + 1] - pv[k]) * inv_dx;
            let uf = if vel > 0.0 { uv[k] } else { uv[k + 1] };
            let flux = vel * uf;
            o[k] += flux * inv_dx;
            o[k + 1] -= flux * inv_dx;
        }
    }
    // y faces between (i, j) and (i, j+1)
    for j in 0..ny - 1 {
        for i in 0..nx {
            let k = j * nx + i;
            let vel = coeff * (pv[k + nx] - pv[k]) * inv_dy;
            let uf = if vel > 0.0 { uv[k] } else { uv[k + nx] };
            let flux = vel * uf;
            o[k] += flux * inv_dy;
            o[k + nx] -= flux * inv_dy;
        }
    }
    Ok(out)
}

/// Apply `(1 + dt*mass_coeff) I - dt*kappa*Laplacian` into `out`.
fn apply_helmholtz(f: &[f64], g: GridSpec, dt: f64, kappa: f64, mass_coeff: f64, out: &mut [f64]) {
    let (nx, ny) = (g.nx(), g.ny());
    let ax = dt * kappa / (g.dx() * g.dx());
    let ay = dt * kappa / (g.dy() * g.dy());
    let diag = 1.0 + dt * mass_coeff;
    for j in 0..ny {
        let (js, jn) = (mirror_dec(j), mirror_inc(j, ny));
        for i in 0..nx {
            let (iw, ie) = (mirror_dec(i), mirror_inc(i, nx));
            let k = j * nx + i;
            let c = f[k];
            let lap = (f[j * nx + ie] + f[j * nx + iw] - 2.0 * c) * ax
                + (f[jn * nx + i] + f[js * nx + i] - 2.0 * c) * ay;
            out[k] = diag * c - lap;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `(I + dt*mass_coeff*I - dt*kappa*Laplacian) f = rhs` with the
/// Neumann Laplacian, by plain conjugate gradients on the symmetric
/// positive-definite operator.
///
/// The iteration is sequential and deterministic; it stops once the residual
/// drops below `DEFAULT_SOLVER_TOL` times the right-hand-side norm.
pub fn solve_diffusion_implicit(
    rhs: &Field,
    dt: f64,
    kappa: f64,
    mass_coeff: f64,
) -> Result<Field> {
    solve_diffusion_implicit_tol(rhs, dt, kappa, mass_coeff, DEFAULT_SOLVER_TOL)
}

/// [`solve_diffusion_implicit`] with an explicit relative-residual tolerance.
pub fn solve_diffusion_implicit_tol(
    rhs: &Field,
    dt: f64,
    kappa: f64,
    mass_coeff: f64,
    tol: f64,
) -> Result<Field> {
    cg_solve(rhs, dt, kappa, mass_coeff, tol, MAX_CG_ITERATIONS)
}

const MAX_CG_ITERATIONS: usize = 100_000;

fn cg_solve(
    rhs: &Field,
    dt: f64,
    kappa: f64,
    mass_coeff: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be positive",
        });
    }
    if kappa < 0.0 {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            reason: "must be nonnegative",
        });
    }
    if mass_coeff < 0.0 {
        return Err(Error::InvalidParameter {
            name: "mass_coeff",
            value: mass_coeff,
            reason: "must be nonnegative",
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "relative residual tolerance must lie in (0, 1)",
        });
    }
    let g = rhs.grid();
    let n = g.cell_count();
    let b = rhs.values();
    let b_norm = dot(b, b).sqrt();
    let mut x = Field::zeros(g);
    if b_norm == 0.0 {
        return Ok(x);
    }
    // Starting guess: for small dt the solution is close to rhs scaled by the
    // mass diagonal.
    {
        let scale = 1.0 / (1.0 + dt * mass_coeff);
        let xv = x.values_mut();
        for k in 0..n {
            xv[k] = b[k] * scale;
        }
    }
    let mut ap = vec![0.0; n];
    apply_helmholtz(x.values(), g, dt, kappa, mass_coeff, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bk, ak)| bk - ak).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    for _ in 0..max_iter {
        if rs.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        apply_helmholtz(&p, g, dt, kappa, mass_coeff, &mut ap);
        let alpha = rs / dot(&p, &ap);
        if !alpha.is_finite() {
            return Err(Error::SolverDiverged {
                iterations: max_iter,
                residual: rs.sqrt() / b_norm,
            });
        }
        let xv = x.values_mut();
        for k in 0..n {
            xv[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rs = rs_new;
    }
    if rs.sqrt() <= tol * b_norm {
        Ok(x)
    } else {
        Err(Error::SolverDiverged {
            iterations: max_iter,
            residual: rs.sqrt() / b_norm,
        })
    }
}
