//! Flow map reconstruction and transport of Lagrangian fields to Euler
//! coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::model::Problem;
use crate::stepper::State;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMap {
    /// `eta = y + int_0^t v` on nodes.
    pub eta: Vec<f64>,
    /// `max |1 + d(acc_eta)/dy - J|`.
    pub consistency_error: f64,
}

/// Node positions of the deformed domain; fails unless strictly increasing.
pub fn flow_map(state: &State, grid: &Grid) -> Result<FlowMap> {
    let eta: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&state.acc_eta)
        .map(|(y, d)| y + d)
        .collect();
    if let Some(i) = (1..eta.len()).find(|&i| !(eta[i] > eta[i - 1])) {
        return Err(Error::DegenerateMap(format!(
            "eta[{}] = {} is not above eta[{}] = {} at t = {}",
            i,
            eta[i],
            i - 1,
            eta[i - 1],
            state.t
        )));
    }
    let d = grid::cell_gradient(&state.acc_eta, grid)?;
    let consistency_error = d
        .iter()
        .zip(&state.jac)
        .fold(0.0_f64, |m, (d, j)| m.max((1.0 + d - j).abs()));
    Ok(FlowMap {
        eta,
        consistency_error,
    })
}

/// Euler fields sampled at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerFrame {
    pub t: f64,
    pub eta: Vec<f64>,
    pub x: Vec<f64>,
    /// Lagrangian label `y` with `eta(y) = x`.
    pub y: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    /// `sum_c rho_c (eta_{c+1} - eta_c)`, the Euler mass.
    pub mass: f64,
}

/// Linear interpolation of a cell-centred field at `y`, constant beyond the
/// outermost centres.
fn interp_cells(field: &[f64], grid: &Grid, y: f64) -> f64 {
    let n = field.len();
    let s = y / grid.dy() - 0.5;
    if s <= 0.0 {
        return field[0];
    }
    if s >= (n - 1) as f64 {
        return field[n - 1];
    }
    let c = s.floor() as usize;
    let w = s - c as f64;
    (1.0 - w) * field[c] + w * field[c + 1]
}

/// Samples `rho = rho0 / J`, `u` and `theta` at the sorted positions
/// `x_query`. The density uses the regularized `rho0 + eps` the problem was
/// solved with.
pub fn to_euler(state: &State, problem: &Problem, x_query: &[f64]) -> Result<EulerFrame> {
    let g = &problem.grid;
    let map = flow_map(state, g)?;
    let eta = map.eta;
    if x_query.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Structural("query positions must be sorted".into()));
    }
    let (lo, hi) = (eta[0], eta[g.cells]);
    let rho_cells: Vec<f64> = problem
        .rho
        .iter()
        .zip(&state.jac)
        .map(|(r, j)| r / j)
        .collect();
    let dy = g.dy();
    let mut frame = EulerFrame {
        t: state.t,
        x: x_query.to_vec(),
        y: Vec::with_capacity(x_query.len()),
        rho: Vec::with_capacity(x_query.len()),
        u: Vec::with_capacity(x_query.len()),
        theta: Vec::with_capacity(x_query.len()),
        mass: (0..g.cells)
            .map(|c| rho_cells[c] * (eta[c + 1] - eta[c]))
            .sum(),
        eta: Vec::new(),
    };
    for &x in x_query {
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange { x, lo, hi });
        }
        // last node with eta <= x, kept inside 0..N-1
        let c = eta
            .partition_point(|e| *e <= x)
            .saturating_sub(1)
            .min(g.cells - 1);
        let w = (x - eta[c]) / (eta[c + 1] - eta[c]);
        let y = g.node(c) + w * dy;
        frame.y.push(y);
        frame.u.push((1.0 - w) * state.v[c] + w * state.v[c + 1]);
        frame.rho.push(interp_cells(&rho_cells, g, y));
        frame.theta.push(interp_cells(&state.theta, g, y));
    }
    frame.eta = eta;
    Ok(frame)
}
