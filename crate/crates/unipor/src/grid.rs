//! 1D cell-centered mesh with homogeneous Neumann boundary.
//!
//! Cells are `x_i = (i + 1/2) h`, `h = L / n`. Ghost values are reflected
//! (`u_{-1} = u_0`, `u_n = u_{n-1}`), which keeps the discrete Laplacian
//! exact on constants and, more importantly, makes the discrete
//! integration by parts
//!
//! ```text
//!     sum_i (-Lap u)_i v_i h = sum_edges (du/h)(dv/h) h
//! ```
//!
//! hold to machine precision. The Dirichlet energy below is exactly the
//! quadratic form whose negative gradient is the Laplacian, which the sign
//! argument for the constraint multiplier depends on.

use crate::{Error, Result};

/// Uniform interval mesh. A single-cell grid is allowed as the degenerate
/// scalar case (no interior edges; the Laplacian vanishes identically).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    length: f64,
    h: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Domain("grid needs at least one cell".into()));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Domain(format!("grid length must be positive, got {length}")));
        }
        Ok(Self { n_cells, length, h: length / n_cells as f64 })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Cell width `L / n`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.cell_center(i)).collect()
    }

    fn check_size(&self, u: &Field) -> Result<()> {
        if u.len() == self.n_cells {
            Ok(())
        } else {
            Err(Error::SizeMismatch { expected: self.n_cells, got: u.len() })
        }
    }

    /// Discrete Neumann Laplacian with reflected ghost cells. Every row of
    /// the implied matrix sums to zero, so constants map to zero exactly.
    pub fn laplacian_neumann(&self, u: &Field) -> Result<Field> {
        self.check_size(u)?;
        let n = self.n_cells;
        let inv_h2 = 1.0 / (self.h * self.h);
        let v = &u.values;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let left = if i == 0 { v[0] } else { v[i - 1] };
            let right = if i + 1 == n { v[n - 1] } else { v[i + 1] };
            out[i] = (left - 2.0 * v[i] + right) * inv_h2;
        }
        Ok(Field::new(out))
    }

    /// `(sum_i |u_i|^q h)^(1/q)`; `q = inf` gives the max norm.
    pub fn lp_norm(&self, u: &Field, q: f64) -> Result<f64> {
        self.check_size(u)?;
        if !(q >= 1.0) {
            return Err(Error::Domain(format!("lp_norm: q must be >= 1, got {q}")));
        }
        if q.is_infinite() {
            return Ok(u.values.iter().fold(0.0, |m, &x| m.max(x.abs())));
        }
        let sum: f64 = u.values.iter().map(|&x| x.abs().powf(q) * self.h).sum();
        Ok(sum.powf(1.0 / q))
    }

    /// `sum_edges ((u_{i+1} - u_i)/h)^2 h`; zero iff `u` is constant. Its
    /// gradient as a quadratic form is `-2 h * laplacian_neumann(u)`.
    pub fn dirichlet_energy(&self, u: &Field) -> Result<f64> {
        self.check_size(u)?;
        let mut acc = 0.0;
        for w in u.values.windows(2) {
            let d = w[1] - w[0];
            acc += d * d;
        }
        Ok(acc / self.h)
    }

    /// The bilinear form `sum_edges (du/h)(dv/h) h` paired with
    /// [`Self::dirichlet_energy`]; equals `sum_i (-Lap u)_i v_i h` exactly.
    pub fn gradient_pairing(&self, u: &Field, v: &Field) -> Result<f64> {
        self.check_size(u)?;
        self.check_size(v)?;
        let mut acc = 0.0;
        for (wu, wv) in u.values.windows(2).zip(v.values.windows(2)) {
            acc += (wu[1] - wu[0]) * (wv[1] - wv[0]);
        }
        Ok(acc / self.h)
    }
}

/// A grid function stored as cell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    /// Builds a field by sampling `f` at cell centers.
    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self { values: grid.cell_centers().into_iter().map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    /// Componentwise `max(self, other)`.
    pub fn sup(&self, other: &Field) -> Field {
        Field::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        )
    }

    /// Componentwise `min(self, other)`.
    pub fn inf(&self, other: &Field) -> Field {
        Field::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a.min(b))
                .collect(),
        )
    }

    /// True when `self <= other` holds in every cell.
    pub fn le(&self, other: &Field) -> bool {
        self.values.iter().zip(&other.values).all(|(&a, &b)| a <= b)
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for Field {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}
