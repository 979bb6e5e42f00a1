//! Staggered uniform grid on `(0, L)` and the conservative difference
//! operators built on it.
//!
//! Velocity lives on the `N + 1` nodes `y_i = i dy`; the Jacobian, the
//! temperature, the density and everything derived from them (pressure,
//! effective flux) live on the `N` cells centred at `(i + 1/2) dy`. With this
//! placement the Jacobian update `J += dt * dv/dy` is a cell-local difference
//! of node values, so `dy * sum(J)` telescopes and mass is conserved to
//! round-off.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub cells: usize,
}

impl Grid {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: format!("must be positive and finite, got {length}"),
            });
        }
        if cells == 0 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: "need at least one cell".into(),
            });
        }
        Ok(Self { length, cells })
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.length / self.cells as f64
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.cells + 1
    }

    pub fn node(&self, i: usize) -> f64 {
        // exact endpoint instead of N * (L / N)
        if i == self.cells {
            self.length
        } else {
            i as f64 * self.dy()
        }
    }

    pub fn center(&self, c: usize) -> f64 {
        (c as f64 + 0.5) * self.dy()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.node(i)).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|c| self.center(c)).collect()
    }

    /// Trapezoid weights on nodes.
    pub fn node_weights(&self) -> Vec<f64> {
        let dy = self.dy();
        let mut w = vec![dy; self.node_count()];
        w[0] = 0.5 * dy;
        w[self.cells] = 0.5 * dy;
        w
    }
}

/// Homogeneous temperature boundary conditions at `y = 0` and `y = L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaBc {
    #[default]
    NeumannNeumann,
    DirichletDirichlet,
    DirichletNeumann,
    NeumannDirichlet,
}

impl ThetaBc {
    pub fn left_dirichlet(self) -> bool {
        matches!(self, Self::DirichletDirichlet | Self::DirichletNeumann)
    }

    pub fn right_dirichlet(self) -> bool {
        matches!(self, Self::DirichletDirichlet | Self::NeumannDirichlet)
    }

    pub fn is_pure_neumann(self) -> bool {
        self == Self::NeumannNeumann
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NeumannNeumann => "neumann-neumann",
            Self::DirichletDirichlet => "dirichlet-dirichlet",
            Self::DirichletNeumann => "dirichlet-neumann",
            Self::NeumannDirichlet => "neumann-dirichlet",
        }
    }
}

impl std::str::FromStr for ThetaBc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neumann-neumann" => Ok(Self::NeumannNeumann),
            "dirichlet-dirichlet" => Ok(Self::DirichletDirichlet),
            "dirichlet-neumann" => Ok(Self::DirichletNeumann),
            "neumann-dirichlet" => Ok(Self::NeumannDirichlet),
            other => Err(Error::InvalidParameter {
                name: "bc",
                reason: format!("unknown temperature boundary condition `{other}`"),
            }),
        }
    }
}

/// `(f[c+1] - f[c]) / dy` on every cell.
pub fn cell_gradient(node_field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    check_len("node_field", node_field.len(), grid.node_count())?;
    let inv = 1.0 / grid.dy();
    Ok(node_field.windows(2).map(|w| (w[1] - w[0]) * inv).collect())
}

/// `(f[c] - f[c-1]) / dy` on interior nodes `1..N`, i.e. the cell-to-node
/// gradient used for the pressure force.
pub fn node_gradient(cell_field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    check_len("cell_field", cell_field.len(), grid.cells)?;
    let inv = 1.0 / grid.dy();
    Ok(cell_field.windows(2).map(|w| (w[1] - w[0]) * inv).collect())
}

fn check_positive(what: &str, coef: &[f64]) -> Result<()> {
    if let Some((i, a)) = coef.iter().enumerate().find(|(_, a)| !(**a > 0.0)) {
        return Err(Error::DegenerateJacobian(format!(
            "{what}[{i}] = {a} is not positive"
        )));
    }
    Ok(())
}

/// `d/dy (a df/dy)` at the interior nodes, with `a` given on cells.
///
/// Returns `N - 1` values, one per interior node.
pub fn node_div_flux(cell_coef: &[f64], node_field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    check_len("cell_coef", cell_coef.len(), grid.cells)?;
    check_len("node_field", node_field.len(), grid.node_count())?;
    check_positive("cell_coef", cell_coef)?;
    let inv2 = 1.0 / (grid.dy() * grid.dy());
    Ok((1..grid.cells)
        .map(|i| {
            let right = cell_coef[i] * (node_field[i + 1] - node_field[i]);
            let left = cell_coef[i - 1] * (node_field[i] - node_field[i - 1]);
            (right - left) * inv2
        })
        .collect())
}

/// Node values of a cell coefficient: arithmetic mean of the two adjacent
/// cells inside, the adjacent cell value on the two boundary nodes.
pub fn face_average(cell_coef: &[f64]) -> Vec<f64> {
    let n = cell_coef.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push(cell_coef[0]);
    out.extend(cell_coef.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(cell_coef[n - 1]);
    out
}

/// Diffusive fluxes `b df/dy` on all `N + 1` nodes for a cell field.
///
/// Neumann ends carry zero flux; Dirichlet ends use the reflected ghost value
/// `-f`, so the boundary value is zero.
pub fn node_fluxes(face_coef: &[f64], cell_field: &[f64], grid: &Grid, bc: ThetaBc) -> Vec<f64> {
    let n = grid.cells;
    let inv = 1.0 / grid.dy();
    let mut flux = vec![0.0; n + 1];
    for i in 1..n {
        flux[i] = face_coef[i] * (cell_field[i] - cell_field[i - 1]) * inv;
    }
    if bc.left_dirichlet() {
        flux[0] = face_coef[0] * 2.0 * cell_field[0] * inv;
    }
    if bc.right_dirichlet() {
        flux[n] = -face_coef[n] * 2.0 * cell_field[n - 1] * inv;
    }
    flux
}

/// Conservative `d/dy (b df/dy)` on cells; `face_coef` is given on all
/// `N + 1` nodes (see [`face_average`]).
pub fn cell_div_flux(
    face_coef: &[f64],
    cell_field: &[f64],
    grid: &Grid,
    bc: ThetaBc,
) -> Result<Vec<f64>> {
    check_len("face_coef", face_coef.len(), grid.node_count())?;
    check_len("cell_field", cell_field.len(), grid.cells)?;
    check_positive("face_coef", face_coef)?;
    let flux = node_fluxes(face_coef, cell_field, grid, bc);
    let inv = 1.0 / grid.dy();
    Ok(flux.windows(2).map(|w| (w[1] - w[0]) * inv).collect())
}

/// Midpoint rule: `dy * sum(f)`.
pub fn integrate(cell_field: &[f64], grid: &Grid) -> f64 {
    grid.dy() * cell_field.iter().sum::<f64>()
}

/// Running midpoint integral from `y = 0` to every node.
pub fn cumulative_integral(cell_field: &[f64], grid: &Grid) -> Vec<f64> {
    let dy = grid.dy();
    let mut out = Vec::with_capacity(cell_field.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for f in cell_field {
        acc += dy * f;
        out.push(acc);
    }
    out
}

/// Trapezoid integral of a node field over `(0, L)`.
pub fn integrate_nodes(node_field: &[f64], grid: &Grid) -> f64 {
    let dy = grid.dy();
    let n = node_field.len();
    dy * (node_field[1..n - 1].iter().sum::<f64>() + 0.5 * (node_field[0] + node_field[n - 1]))
}

/// Integral of a node field from `y = 0` to every cell centre:
/// `dy * (f_0 / 2 + f_1 + ... + f_c)`.
///
/// Each interior node carries the dual cell `[y_k - dy/2, y_k + dy/2]`, so the
/// sum is a second-order quadrature up to the centre of cell `c`, and it is the
/// same sum that appears when the discrete momentum balance is telescoped from
/// the left wall.
pub fn node_cumulative_to_cells(node_field: &[f64], grid: &Grid) -> Vec<f64> {
    let dy = grid.dy();
    let mut acc = 0.5 * dy * node_field[0];
    (0..grid.cells)
        .map(|c| {
            if c > 0 {
                acc += dy * node_field[c];
            }
            acc
        })
        .collect()
}

pub fn sup_norm(field: &[f64]) -> f64 {
    field.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn cell_l2(cell_field: &[f64], grid: &Grid) -> f64 {
    (grid.dy() * cell_field.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn node_l2(node_field: &[f64], grid: &Grid) -> f64 {
    let sq: Vec<f64> = node_field.iter().map(|x| x * x).collect();
    integrate_nodes(&sq, grid).sqrt()
}

/// First derivative of a cell field at cell centres, second order everywhere.
pub fn cell_derivative(f: &[f64], dy: f64) -> Vec<f64> {
    let n = f.len();
    match n {
        0 | 1 => vec![0.0; n],
        2 => vec![(f[1] - f[0]) / dy; 2],
        _ => (0..n)
            .map(|c| {
                if c == 0 {
                    (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dy)
                } else if c == n - 1 {
                    (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dy)
                } else {
                    (f[c + 1] - f[c - 1]) / (2.0 * dy)
                }
            })
            .collect(),
    }
}

/// Second derivative on equally spaced samples; one-sided second-order stencils
/// at the two ends (first order when fewer than four samples exist).
pub fn second_derivative(f: &[f64], dy: f64) -> Vec<f64> {
    let n = f.len();
    let h2 = dy * dy;
    match n {
        0..=2 => vec![0.0; n],
        3 => vec![(f[0] - 2.0 * f[1] + f[2]) / h2; 3],
        _ => (0..n)
            .map(|c| {
                if c == 0 {
                    (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
                } else if c == n - 1 {
                    (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2
                } else {
                    (f[c + 1] - 2.0 * f[c] + f[c - 1]) / h2
                }
            })
            .collect(),
    }
}

/// Node-to-cell average.
pub fn node_to_cells(node_field: &[f64]) -> Vec<f64> {
    node_field.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}
