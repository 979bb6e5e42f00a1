//! Parameters, initial data, pointwise constitutive relations, hypothesis
//! checks on the data, and the explicitly computable a-priori constants.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::grid::{self, Grid, ThetaBc};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Viscosity.
    pub mu: f64,
    /// Heat conductivity.
    pub kappa: f64,
    /// Gas constant in `p = R rho theta`.
    #[serde(rename = "R")]
    pub gas_constant: f64,
    /// Specific heat at constant volume.
    pub c_v: f64,
    /// Domain length.
    #[serde(rename = "L")]
    pub length: f64,
    /// Vacuum regularization offset added to both density and temperature.
    pub eps: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            kappa: 1.0,
            gas_constant: 1.0,
            c_v: 1.0,
            length: 1.0,
            eps: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu", self.mu),
            ("kappa", self.kappa),
            ("R", self.gas_constant),
            ("c_v", self.c_v),
            ("L", self.length),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!("must be nonnegative and finite, got {}", self.eps),
            });
        }
        Ok(())
    }
}

/// Optional analytic derivatives of the initial data, sampled at cell centres.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataDerivatives {
    pub rho0_d1: Option<Vec<f64>>,
    pub rho0_d2: Option<Vec<f64>>,
    pub v0_d1: Option<Vec<f64>>,
    pub v0_d2: Option<Vec<f64>>,
    pub theta0_d1: Option<Vec<f64>>,
    pub theta0_d2: Option<Vec<f64>>,
}

/// Initial density and temperature on cells, initial velocity on nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub rho0: Vec<f64>,
    pub v0: Vec<f64>,
    pub theta0: Vec<f64>,
    #[serde(default)]
    pub derivatives: DataDerivatives,
}

/// Cell-centre derivatives actually used: analytic when supplied, finite
/// differences otherwise.
#[derive(Debug, Clone)]
pub struct ResolvedDerivatives {
    pub rho0_d1: Vec<f64>,
    pub rho0_d2: Vec<f64>,
    pub v0_d1: Vec<f64>,
    pub v0_d2: Vec<f64>,
    pub theta0_d1: Vec<f64>,
    pub theta0_d2: Vec<f64>,
}

impl InitialData {
    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        check_len("rho0", self.rho0.len(), grid.cells)?;
        check_len("v0", self.v0.len(), grid.node_count())?;
        check_len("theta0", self.theta0.len(), grid.cells)?;
        check_finite("rho0", &self.rho0)?;
        check_finite("v0", &self.v0)?;
        check_finite("theta0", &self.theta0)?;
        let d = &self.derivatives;
        let optional = [
            ("rho0_d1", &d.rho0_d1),
            ("rho0_d2", &d.rho0_d2),
            ("v0_d1", &d.v0_d1),
            ("v0_d2", &d.v0_d2),
            ("theta0_d1", &d.theta0_d1),
            ("theta0_d2", &d.theta0_d2),
        ];
        for (name, field) in optional {
            if let Some(values) = field {
                check_len(name, values.len(), grid.cells)?;
                check_finite(name, values)?;
            }
        }
        Ok(())
    }

    /// The shifted data `(rho0 + eps, v0, theta0 + eps)`.
    pub fn regularized(&self, eps: f64) -> Self {
        if eps == 0.0 {
            return self.clone();
        }
        Self {
            rho0: self.rho0.iter().map(|r| r + eps).collect(),
            v0: self.v0.clone(),
            theta0: self.theta0.iter().map(|t| t + eps).collect(),
            derivatives: self.derivatives.clone(),
        }
    }

    pub fn resolved_derivatives(&self, grid: &Grid) -> ResolvedDerivatives {
        let dy = grid.dy();
        let d = &self.derivatives;
        let pick = |given: &Option<Vec<f64>>, fallback: &dyn Fn() -> Vec<f64>| {
            given.clone().unwrap_or_else(fallback)
        };
        ResolvedDerivatives {
            rho0_d1: pick(&d.rho0_d1, &|| grid::cell_derivative(&self.rho0, dy)),
            rho0_d2: pick(&d.rho0_d2, &|| grid::second_derivative(&self.rho0, dy)),
            v0_d1: pick(&d.v0_d1, &|| {
                self.v0.windows(2).map(|w| (w[1] - w[0]) / dy).collect()
            }),
            v0_d2: pick(&d.v0_d2, &|| {
                grid::node_to_cells(&grid::second_derivative(&self.v0, dy))
            }),
            theta0_d1: pick(&d.theta0_d1, &|| grid::cell_derivative(&self.theta0, dy)),
            theta0_d2: pick(&d.theta0_d2, &|| grid::second_derivative(&self.theta0, dy)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    NegativeDensity {
        cell: usize,
        value: f64,
    },
    NegativeTemperature {
        cell: usize,
        value: f64,
    },
    EndpointVelocity {
        side: Side,
        value: f64,
    },
    EndpointTemperatureGradient {
        side: Side,
        value: f64,
        tolerance: f64,
    },
    /// The compatibility numerators do not vanish on a cell within one cell
    /// width of vacuum, so `g0` or `h0` blows up there.
    IncompatibleNearVacuum {
        cell: usize,
        rho0: f64,
        g_numerator: f64,
        h_numerator: f64,
    },
}

impl Violation {
    pub fn is_vacuum_related(&self) -> bool {
        matches!(self, Self::IncompatibleNearVacuum { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegativeDensity { cell, value } => {
                write!(f, "negative density {value} at cell {cell}")
            }
            Self::NegativeTemperature { cell, value } => {
                write!(f, "negative temperature {value} at cell {cell}")
            }
            Self::EndpointVelocity { side, value } => {
                write!(f, "endpoint velocity nonzero ({side:?}: {value})")
            }
            Self::EndpointTemperatureGradient {
                side,
                value,
                tolerance,
            } => write!(
                f,
                "endpoint temperature gradient nonzero ({side:?}: {value}, tolerance {tolerance})"
            ),
            Self::IncompatibleNearVacuum { cell, rho0, .. } => write!(
                f,
                "compatibility quotient unbounded near vacuum at cell {cell} (rho0 = {rho0})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// `(mu v0'' - R (rho0 theta0)') / sqrt(rho0)`, zero on cells where rho0 = 0.
    pub g0: Vec<f64>,
    /// `(kappa theta0'' + mu (v0')^2 - R v0' rho0 theta0) / sqrt(rho0)`.
    pub h0: Vec<f64>,
    /// Cells with `rho0 <= dy * |rho0'|_inf`, i.e. within one cell of vacuum.
    pub near_vacuum_cells: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when every violation stems from vacuum, which the eps shift removes.
    pub fn only_vacuum_flags(&self) -> bool {
        self.violations.iter().all(Violation::is_vacuum_related)
    }
}

/// Compatibility numerators `(sqrt(rho0) g0, sqrt(rho0) h0)` on cells.
pub fn compatibility_numerators(
    data: &InitialData,
    params: &PhysicalParams,
    grid: &Grid,
) -> (Vec<f64>, Vec<f64>) {
    let d = data.resolved_derivatives(grid);
    let (mu, kappa, r) = (params.mu, params.kappa, params.gas_constant);
    let gn = (0..grid.cells)
        .map(|c| {
            let d_rho_theta = d.rho0_d1[c] * data.theta0[c] + data.rho0[c] * d.theta0_d1[c];
            mu * d.v0_d2[c] - r * d_rho_theta
        })
        .collect();
    let hn = (0..grid.cells)
        .map(|c| {
            kappa * d.theta0_d2[c] + mu * d.v0_d1[c] * d.v0_d1[c]
                - r * d.v0_d1[c] * data.rho0[c] * data.theta0[c]
        })
        .collect();
    (gn, hn)
}

/// Second-order estimate of `theta'(0)` and `theta'(L)` from the three cells
/// nearest each end.
fn endpoint_slopes(theta: &[f64], dy: f64) -> (f64, f64) {
    let n = theta.len();
    if n < 3 {
        if n == 2 {
            let s = (theta[1] - theta[0]) / dy;
            return (s, s);
        }
        return (0.0, 0.0);
    }
    let left = (-2.0 * theta[0] + 3.0 * theta[1] - theta[2]) / dy;
    let right = (2.0 * theta[n - 1] - 3.0 * theta[n - 2] + theta[n - 3]) / dy;
    (left, right)
}

pub fn validate_initial_data(
    data: &InitialData,
    params: &PhysicalParams,
    grid: &Grid,
    bc: ThetaBc,
) -> Result<ValidationReport> {
    params.validate()?;
    data.check_shape(grid)?;
    let mut violations = Vec::new();
    for (cell, &value) in data.rho0.iter().enumerate() {
        if value < 0.0 {
            violations.push(Violation::NegativeDensity { cell, value });
        }
    }
    for (cell, &value) in data.theta0.iter().enumerate() {
        if value < 0.0 {
            violations.push(Violation::NegativeTemperature { cell, value });
        }
    }
    let v_scale = 1e-12 * (1.0 + grid::sup_norm(&data.v0));
    for (side, value) in [(Side::Left, data.v0[0]), (Side::Right, data.v0[grid.cells])] {
        if value.abs() > v_scale {
            violations.push(Violation::EndpointVelocity { side, value });
        }
    }

    let derivs = data.resolved_derivatives(grid);
    let dy = grid.dy();
    let (left, right) = endpoint_slopes(&data.theta0, dy);
    // curvature next to the walls bounds the stencil error
    let k = grid.cells.min(4);
    let d2 = &derivs.theta0_d2;
    let wall_curvature = grid::sup_norm(&d2[..k]).max(grid::sup_norm(&d2[grid.cells - k..]));
    let tolerance = 1e-9 * (1.0 + grid::sup_norm(&data.theta0)) / grid.length + dy * wall_curvature;
    if !bc.left_dirichlet() && left.abs() > tolerance {
        violations.push(Violation::EndpointTemperatureGradient {
            side: Side::Left,
            value: left,
            tolerance,
        });
    }
    if !bc.right_dirichlet() && right.abs() > tolerance {
        violations.push(Violation::EndpointTemperatureGradient {
            side: Side::Right,
            value: right,
            tolerance,
        });
    }

    let (gn, hn) = compatibility_numerators(data, params, grid);
    let vacuum_distance = dy * grid::sup_norm(&derivs.rho0_d1);
    let num_tol = 1e-8 * (1.0 + grid::sup_norm(&gn).max(grid::sup_norm(&hn)));
    let mut g0 = vec![0.0; grid.cells];
    let mut h0 = vec![0.0; grid.cells];
    let mut near_vacuum_cells = Vec::new();
    for c in 0..grid.cells {
        let rho = data.rho0[c].max(0.0);
        let near_vacuum = rho == 0.0 || rho <= vacuum_distance;
        if near_vacuum {
            near_vacuum_cells.push(c);
            if gn[c].abs() > num_tol || hn[c].abs() > num_tol {
                violations.push(Violation::IncompatibleNearVacuum {
                    cell: c,
                    rho0: data.rho0[c],
                    g_numerator: gn[c],
                    h_numerator: hn[c],
                });
            }
        }
        if rho > 0.0 {
            let s = rho.sqrt();
            g0[c] = gn[c] / s;
            h0[c] = hn[c] / s;
        }
    }
    Ok(ValidationReport {
        violations,
        g0,
        h0,
        near_vacuum_cells,
    })
}

/// `R rho0 theta / J`.
pub fn pressure(gas_constant: f64, rho0: f64, theta: f64, jac: f64) -> Result<f64> {
    if !(jac > 0.0) {
        return Err(Error::DegenerateJacobian(format!("J = {jac}")));
    }
    Ok(gas_constant * rho0 * theta / jac)
}

/// Effective viscous flux `mu dv/dy / J - pi`.
pub fn effective_flux(dv_dy: f64, jac: f64, pi: f64, mu: f64) -> Result<f64> {
    if !(jac > 0.0) {
        return Err(Error::DegenerateJacobian(format!("J = {jac}")));
    }
    Ok(mu * dv_dy / jac - pi)
}

/// `v^2 / 2 + c_v theta`.
#[inline]
pub fn specific_energy(v: f64, theta: f64, c_v: f64) -> f64 {
    0.5 * v * v + c_v * theta
}

/// Density on nodes: mean of adjacent cells inside, adjacent cell on the ends.
pub fn node_density(rho_cells: &[f64]) -> Vec<f64> {
    grid::face_average(rho_cells)
}

/// Discrete total energy `int (rho v^2 / 2 + c_v rho theta) dy` with the
/// kinetic part on nodes (trapezoid, nodal density) and the internal part on
/// cells (midpoint).
pub fn total_energy(rho_cells: &[f64], v: &[f64], theta: &[f64], c_v: f64, grid: &Grid) -> f64 {
    let rho_node = node_density(rho_cells);
    let kinetic: Vec<f64> = rho_node
        .iter()
        .zip(v)
        .map(|(r, v)| 0.5 * r * v * v)
        .collect();
    let internal: Vec<f64> = rho_cells
        .iter()
        .zip(theta)
        .map(|(r, t)| c_v * r * t)
        .collect();
    grid::integrate_nodes(&kinetic, grid) + grid::integrate(&internal, grid)
}

/// Constants of the a-priori estimates, for the (eps-shifted) data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriConstants {
    pub e0: f64,
    pub rho_bar: f64,
    pub omega0: f64,
    pub rho_l1: f64,
    pub rho_d1_sup: f64,
    pub m1: f64,
    pub m_lower: f64,
    pub n1: f64,
    /// `|sqrt(rho0) v0^2|_2 + |sqrt(rho0) theta0|_2 + |v0'|_2`.
    pub n2: f64,
    /// `|sqrt(rho0) v0^2|_2 + |sqrt(rho0) v0|_2 + |v0'|_2`, the variant used
    /// when bounding the shifted data uniformly.
    pub n2_alt: f64,
    pub n3: f64,
    pub g0_l2: f64,
    pub h0_l2: f64,
    pub rho_d2_l2: f64,
    pub g0: Vec<f64>,
    pub h0: Vec<f64>,
    gas_constant: f64,
    mu: f64,
    c_v: f64,
    length: f64,
}

impl AprioriConstants {
    /// `f1(t) = m1 exp(R m1^2 E0 t / (mu c_v L))`.
    pub fn f1(&self, t: f64) -> f64 {
        self.m1
            * (self.gas_constant * self.m1 * self.m1 * self.e0 * t
                / (self.mu * self.c_v * self.length))
                .exp()
    }

    /// Lower bound `(m1 f1(t))^-1` on the Jacobian.
    pub fn j_lower(&self, t: f64) -> f64 {
        1.0 / (self.m1 * self.f1(t))
    }

    /// Upper bound on the Jacobian given `int_0^t rho0 theta`.
    pub fn j_upper(&self, t: f64, rho_theta_integral: f64) -> f64 {
        self.m1 * self.m1
            + self.gas_constant / self.mu * self.m1.powi(3) * self.f1(t) * rho_theta_integral
    }
}

/// Node-field L2 norm of `w * f` type products, with `w` on nodes.
fn node_weighted_l2(weight: &[f64], f: &[f64], grid: &Grid) -> f64 {
    let prod: Vec<f64> = weight.iter().zip(f).map(|(w, x)| w * x).collect();
    grid::node_l2(&prod, grid)
}

/// Constants for the data `(rho0 + eps, v0, theta0 + eps)` with `eps` taken
/// from `params`.
pub fn apriori_constants(
    data: &InitialData,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<AprioriConstants> {
    params.validate()?;
    data.check_shape(grid)?;
    let shifted = data.regularized(params.eps);
    let rho = &shifted.rho0;
    let rho_bar = rho.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    if !(rho_bar > 0.0) {
        return Err(Error::DegenerateData(
            "initial density vanishes identically (omega0 = 0)".into(),
        ));
    }
    let dy = grid.dy();
    let omega0 = dy * rho.iter().filter(|r| **r >= 0.5 * rho_bar).count() as f64;
    let rho_l1 = grid::integrate(&rho.iter().map(|r| r.abs()).collect::<Vec<_>>(), grid);
    let e0 = total_energy(rho, &shifted.v0, &shifted.theta0, params.c_v, grid);
    let m1 = ((2.0 / params.mu) * (2.0 * rho_l1 * e0).sqrt()).exp();

    let derivs = shifted.resolved_derivatives(grid);
    let rho_d1_sup = grid::sup_norm(&derivs.rho0_d1);
    let n1 = e0 / params.c_v
        + rho_bar
        + 1.0 / rho_bar
        + grid.length
        + 1.0 / grid.length
        + 1.0 / omega0
        + rho_d1_sup;

    let rho_node_sqrt: Vec<f64> = node_density(rho)
        .iter()
        .map(|r| r.max(0.0).sqrt())
        .collect();
    let v_sq: Vec<f64> = shifted.v0.iter().map(|v| v * v).collect();
    let sqrt_rho_theta: Vec<f64> = rho
        .iter()
        .zip(&shifted.theta0)
        .map(|(r, t)| r.max(0.0).sqrt() * t)
        .collect();
    let dv_l2 = grid::cell_l2(&derivs.v0_d1, grid);
    let n2 = node_weighted_l2(&rho_node_sqrt, &v_sq, grid)
        + grid::cell_l2(&sqrt_rho_theta, grid)
        + dv_l2;
    let n2_alt = node_weighted_l2(&rho_node_sqrt, &v_sq, grid)
        + node_weighted_l2(&rho_node_sqrt, &shifted.v0, grid)
        + dv_l2;

    let report = validate_initial_data(&shifted, params, grid, ThetaBc::DirichletDirichlet)?;
    let g0_l2 = grid::cell_l2(&report.g0, grid);
    let h0_l2 = grid::cell_l2(&report.h0, grid);
    let rho_d2_l2 = grid::cell_l2(&derivs.rho0_d2, grid);
    Ok(AprioriConstants {
        e0,
        rho_bar,
        omega0,
        rho_l1,
        rho_d1_sup,
        m1,
        m_lower: 1.0 / m1,
        n1,
        n2,
        n2_alt,
        n3: rho_d2_l2 + g0_l2 + h0_l2,
        g0_l2,
        h0_l2,
        rho_d2_l2,
        g0: report.g0,
        h0: report.h0,
        gas_constant: params.gas_constant,
        mu: params.mu,
        c_v: params.c_v,
        length: params.length,
    })
}

/// The regularized discrete problem the stepper actually integrates.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub bc: ThetaBc,
    /// `rho0 + eps` on cells.
    pub rho: Vec<f64>,
    /// `rho0 + eps` on nodes.
    pub rho_node: Vec<f64>,
    pub v0: Vec<f64>,
    /// `theta0 + eps` on cells.
    pub theta0: Vec<f64>,
    /// The shifted data, including derivative samples.
    pub data: InitialData,
}

impl Problem {
    pub fn new(
        data: &InitialData,
        params: &PhysicalParams,
        grid: Grid,
        bc: ThetaBc,
    ) -> Result<Self> {
        params.validate()?;
        if (grid.length - params.length).abs() > 1e-12 * params.length {
            return Err(Error::Structural(format!(
                "grid length {} differs from L = {}",
                grid.length, params.length
            )));
        }
        data.check_shape(&grid)?;
        let shifted = data.regularized(params.eps);
        if let Some((c, r)) = shifted.rho0.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::DegenerateData(format!(
                "effective density rho0 + eps = {r} at cell {c}; use eps > 0 for vacuum data"
            )));
        }
        Ok(Self {
            grid,
            params: *params,
            bc,
            rho: shifted.rho0.clone(),
            rho_node: node_density(&shifted.rho0),
            v0: shifted.v0.clone(),
            theta0: shifted.theta0.clone(),
            data: shifted,
        })
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho.iter().fold(0.0, |m, x| m.max(*x))
    }

    pub fn constants(&self) -> Result<AprioriConstants> {
        let params = PhysicalParams {
            eps: 0.0,
            ..self.params
        };
        apriori_constants(&self.data, &params, &self.grid)
    }
}
