//! Uniform cell-centered rectangular grids, scalar fields, and the grid
//! quadratures every norm and integral in the crate is built on.
//!
//! The domain is an axis-aligned rectangle `(0, lx) x (0, ly)` split into
//! `nx * ny` equal cells. Values live at cell centers `((i+1/2) dx, (j+1/2) dy)`
//! and are stored row-major with `i` (the x index) fastest. Integrals are
//! midpoint quadratures, which are second-order accurate and exact on fields
//! that are linear in each coordinate.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Geometry of a uniform cell-centered grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl GridSpec {
    /// Requires `nx, ny >= 4` (the stencils need interior cells) and positive
    /// side lengths.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 cells per axis, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0) || !(ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "side lengths must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Unit square helper used throughout the tests.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Area of one cell, `dx * dy`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Domain area `|Omega| = lx * ly`.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Center of cell `(i, j)`.
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (i as f64 + 0.5) * self.dx(),
            (j as f64 + 0.5) * self.dy(),
        )
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Grid with x and y swapped.
    pub fn transposed(&self) -> GridSpec {
        GridSpec {
            nx: self.ny,
            ny: self.nx,
            lx: self.ly,
            ly: self.lx,
        }
    }
}

/// A scalar value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.cell_count()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.cell_count()],
        }
    }

    /// Sample `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cell_count());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid {} x {}",
                values.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Apply `f` to every value in place.
    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.values {
            *v = f(*v);
        }
    }

    /// New field with values `f(self, other)` cell by cell.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    /// The same data on the transposed grid (x and y swapped).
    pub fn transposed(&self) -> Field {
        let g = self.grid.transposed();
        let mut out = Field::zeros(g);
        for j in 0..self.grid.ny() {
            for i in 0..self.grid.nx() {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    fn check_finite(&self, what: &str) -> Result<()> {
        for j in 0..self.grid.ny() {
            for i in 0..self.grid.nx() {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: what.to_string(),
                        i,
                        j,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Midpoint quadrature: `sum f(i,j) * dx * dy`.
pub fn integrate(f: &Field) -> Result<f64> {
    f.check_finite("integrate")?;
    let sum: f64 = f.values().iter().sum();
    Ok(sum * f.grid().cell_area())
}

/// Discrete `L^inf` norm: `max |f(i,j)|`.
pub fn sup_norm(f: &Field) -> Result<f64> {
    f.check_finite("sup_norm")?;
    Ok(f.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// `integrate(f^p)` for real `p >= 1`; non-integer `p` requires `f >= 0`.
pub fn lp_integral(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "exponent must be >= 1",
        });
    }
    f.check_finite("lp_integral")?;
    let integer = p.fract() == 0.0;
    if !integer {
        for j in 0..f.grid().ny() {
            for i in 0..f.grid().nx() {
                let v = f.get(i, j);
                if v < 0.0 {
                    return Err(Error::Negative {
                        what: format!("lp_integral with p = {p}"),
                        i,
                        j,
                        value: v,
                    });
                }
            }
        }
    }
    let sum: f64 = if integer && p <= 4.0 {
        let k = p as i32;
        f.values().iter().map(|v| v.powi(k)).sum()
    } else {
        f.values().iter().map(|v| v.powf(p)).sum()
    };
    Ok(sum * f.grid().cell_area())
}

/// Write a field snapshot: header line `nx ny lx ly t`, then `ny` lines of
/// `nx` space-separated values at full round-trip precision.
pub fn write_snapshot(path: &Path, f: &Field, t: f64) -> Result<()> {
    let g = f.grid();
    let mut text = String::new();
    let _ = writeln!(text, "{} {} {} {} {}", g.nx(), g.ny(), g.lx(), g.ly(), t);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            if i > 0 {
                text.push(' ');
            }
            let _ = write!(text, "{}", f.get(i, j));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(Error::io(path))
}

/// Read a snapshot written by [`write_snapshot`]; round-trips bit-exactly.
pub fn read_snapshot(path: &Path) -> Result<(Field, f64)> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let bad = |line: usize, message: String| Error::SnapshotFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(bad(1, format!("expected `nx ny lx ly t`, got {header:?}")));
    }
    let nx: usize = parts[0].parse().map_err(|e| bad(1, format!("nx: {e}")))?;
    let ny: usize = parts[1].parse().map_err(|e| bad(1, format!("ny: {e}")))?;
    let lx: f64 = parts[2].parse().map_err(|e| bad(1, format!("lx: {e}")))?;
    let ly: f64 = parts[3].parse().map_err(|e| bad(1, format!("ly: {e}")))?;
    let t: f64 = parts[4].parse().map_err(|e| bad(1, format!("t: {e}")))?;
    let grid = GridSpec::new(nx, ny, lx, ly)?;
    let mut values = Vec::with_capacity(grid.cell_count());
    for (j, line) in lines.enumerate() {
        if j >= ny {
            if line.trim().is_empty() {
                continue;
            }
            return Err(bad(j + 2, "trailing data".into()));
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse::<f64>).collect();
        let row = row.map_err(|e| bad(j + 2, e.to_string()))?;
        if row.len() != nx {
            return Err(bad(j + 2, format!("expected {nx} values, got {}", row.len())));
        }
        values.extend_from_slice(&row);
    }
    if values.len() != grid.cell_count() {
        return Err(bad(
            ny + 1,
            format!("expected {} rows of data", ny),
        ));
    }
    Ok((Field { grid, values }, t))
}
