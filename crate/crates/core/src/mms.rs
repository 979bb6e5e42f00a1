//! Closed-form manufactured solutions and the source terms that make them
//! exact solutions of the forced Lagrangian system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, ThetaBc};
use crate::model::{DataDerivatives, InitialData, PhysicalParams};
use crate::stepper::Forcing;

/// Point values of a manufactured solution and the derivatives the sources
/// need. `jac` must satisfy `jac_t = v_y` and `jac(y, 0) = 1`.
pub trait ManufacturedSolution: Send + Sync {
    fn rho0(&self) -> f64;
    fn v(&self, y: f64, t: f64) -> f64;
    fn v_t(&self, y: f64, t: f64) -> f64;
    fn v_y(&self, y: f64, t: f64) -> f64;
    fn v_yy(&self, y: f64, t: f64) -> f64;
    fn jac(&self, y: f64, t: f64) -> f64;
    fn jac_y(&self, y: f64, t: f64) -> f64;
    fn theta(&self, y: f64, t: f64) -> f64;
    fn theta_t(&self, y: f64, t: f64) -> f64;
    fn theta_y(&self, y: f64, t: f64) -> f64;
    fn theta_yy(&self, y: f64, t: f64) -> f64;
}

/// `v = A sin(ky) sin t` with `k = pi / L`, and a temperature whose spatial
/// shape matches the boundary condition:
///
/// | bc                  | theta                      |
/// |---------------------|----------------------------|
/// | neumann-neumann     | `2 + cos(ky) cos t`        |
/// | dirichlet-dirichlet | `sin(ky) (2 + cos t)`      |
/// | dirichlet-neumann   | `sin(ky/2) (2 + cos t)`    |
/// | neumann-dirichlet   | `cos(ky/2) (2 + cos t)`    |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineManufactured {
    pub amplitude: f64,
    pub length: f64,
    pub rho: f64,
    pub bc: ThetaBc,
}

impl SineManufactured {
    pub fn new(amplitude: f64, length: f64, bc: ThetaBc) -> Self {
        Self {
            amplitude,
            length,
            rho: 1.0,
            bc,
        }
    }

    fn k(&self) -> f64 {
        PI / self.length
    }

    /// Spatial shape S, S', S'' and time factor T, T', plus offset.
    fn theta_parts(&self, y: f64, t: f64) -> ([f64; 3], [f64; 2], f64) {
        let k = self.k();
        match self.bc {
            ThetaBc::NeumannNeumann => {
                let s = [(k * y).cos(), -k * (k * y).sin(), -k * k * (k * y).cos()];
                (s, [t.cos(), -t.sin()], 2.0)
            }
            ThetaBc::DirichletDirichlet => {
                let s = [(k * y).sin(), k * (k * y).cos(), -k * k * (k * y).sin()];
                (s, [2.0 + t.cos(), -t.sin()], 0.0)
            }
            ThetaBc::DirichletNeumann => {
                let h = 0.5 * k;
                let s = [(h * y).sin(), h * (h * y).cos(), -h * h * (h * y).sin()];
                (s, [2.0 + t.cos(), -t.sin()], 0.0)
            }
            ThetaBc::NeumannDirichlet => {
                let h = 0.5 * k;
                let s = [(h * y).cos(), -h * (h * y).sin(), -h * h * (h * y).cos()];
                (s, [2.0 + t.cos(), -t.sin()], 0.0)
            }
        }
    }
}

impl ManufacturedSolution for SineManufactured {
    fn rho0(&self) -> f64 {
        self.rho
    }
    fn v(&self, y: f64, t: f64) -> f64 {
        self.amplitude * (self.k() * y).sin() * t.sin()
    }
    fn v_t(&self, y: f64, t: f64) -> f64 {
        self.amplitude * (self.k() * y).sin() * t.cos()
    }
    fn v_y(&self, y: f64, t: f64) -> f64 {
        self.amplitude * self.k() * (self.k() * y).cos() * t.sin()
    }
    fn v_yy(&self, y: f64, t: f64) -> f64 {
        let k = self.k();
        -self.amplitude * k * k * (k * y).sin() * t.sin()
    }
    fn jac(&self, y: f64, t: f64) -> f64 {
        1.0 + self.amplitude * self.k() * (self.k() * y).cos() * (1.0 - t.cos())
    }
    fn jac_y(&self, y: f64, t: f64) -> f64 {
        let k = self.k();
        -self.amplitude * k * k * (k * y).sin() * (1.0 - t.cos())
    }
    fn theta(&self, y: f64, t: f64) -> f64 {
        let (s, tt, c) = self.theta_parts(y, t);
        c + s[0] * tt[0]
    }
    fn theta_t(&self, y: f64, t: f64) -> f64 {
        let (s, tt, _) = self.theta_parts(y, t);
        s[0] * tt[1]
    }
    fn theta_y(&self, y: f64, t: f64) -> f64 {
        let (s, tt, _) = self.theta_parts(y, t);
        s[1] * tt[0]
    }
    fn theta_yy(&self, y: f64, t: f64) -> f64 {
        let (s, tt, _) = self.theta_parts(y, t);
        s[2] * tt[0]
    }
}

/// The trivial solution `v = 0`, `J = 1`, `theta = theta_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestManufactured {
    pub rho: f64,
    pub theta: f64,
}

impl ManufacturedSolution for RestManufactured {
    fn rho0(&self) -> f64 {
        self.rho
    }
    fn v(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn v_t(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn v_y(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn v_yy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn jac(&self, _: f64, _: f64) -> f64 {
        1.0
    }
    fn jac_y(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn theta(&self, _: f64, _: f64) -> f64 {
        self.theta
    }
    fn theta_t(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn theta_y(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn theta_yy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// Momentum source `rho v_t - mu (v_y / J)_y + pi_y`.
pub fn momentum_source<M: ManufacturedSolution + ?Sized>(
    m: &M,
    params: &PhysicalParams,
    y: f64,
    t: f64,
) -> f64 {
    let rho = m.rho0();
    let (j, jy) = (m.jac(y, t), m.jac_y(y, t));
    let (vy, vyy) = (m.v_y(y, t), m.v_yy(y, t));
    let (th, thy) = (m.theta(y, t), m.theta_y(y, t));
    let viscous = vyy / j - vy * jy / (j * j);
    let pi_y = params.gas_constant * rho * (thy * j - th * jy) / (j * j);
    rho * m.v_t(y, t) - params.mu * viscous + pi_y
}

/// Temperature source `c_v rho theta_t + v_y pi - kappa (theta_y / J)_y - mu v_y^2 / J`.
pub fn temperature_source<M: ManufacturedSolution + ?Sized>(
    m: &M,
    params: &PhysicalParams,
    y: f64,
    t: f64,
) -> f64 {
    let rho = m.rho0();
    let (j, jy) = (m.jac(y, t), m.jac_y(y, t));
    let vy = m.v_y(y, t);
    let (th, thy, thyy) = (m.theta(y, t), m.theta_y(y, t), m.theta_yy(y, t));
    let pi = params.gas_constant * rho * th / j;
    let conduction = thyy / j - thy * jy / (j * j);
    params.c_v * rho * m.theta_t(y, t) + vy * pi
        - params.kappa * conduction
        - params.mu * vy * vy / j
}

/// Adapts a manufactured solution to the stepper's [`Forcing`] hook.
pub struct MmsForcing<M> {
    pub solution: M,
    pub params: PhysicalParams,
}

impl<M: ManufacturedSolution> Forcing for MmsForcing<M> {
    fn momentum(&self, y: f64, t: f64) -> f64 {
        momentum_source(&self.solution, &self.params, y, t)
    }
    fn temperature(&self, y: f64, t: f64) -> f64 {
        temperature_source(&self.solution, &self.params, y, t)
    }
}

/// Initial data sampled from a manufactured solution at `t = 0`.
pub fn initial_data<M: ManufacturedSolution + ?Sized>(m: &M, grid: &Grid) -> InitialData {
    let centers = grid.centers();
    InitialData {
        rho0: vec![m.rho0(); grid.cells],
        v0: grid.nodes().iter().map(|y| m.v(*y, 0.0)).collect(),
        theta0: centers.iter().map(|y| m.theta(*y, 0.0)).collect(),
        derivatives: DataDerivatives {
            rho0_d1: Some(vec![0.0; grid.cells]),
            rho0_d2: Some(vec![0.0; grid.cells]),
            v0_d1: Some(centers.iter().map(|y| m.v_y(*y, 0.0)).collect()),
            v0_d2: Some(centers.iter().map(|y| m.v_yy(*y, 0.0)).collect()),
            theta0_d1: Some(centers.iter().map(|y| m.theta_y(*y, 0.0)).collect()),
            theta0_d2: Some(centers.iter().map(|y| m.theta_yy(*y, 0.0)).collect()),
        },
    }
}

/// Checks that the manufactured fields honour the boundary conditions.
pub fn check_boundary_conditions<M: ManufacturedSolution + ?Sized>(
    m: &M,
    length: f64,
    bc: ThetaBc,
    t: f64,
) -> crate::Result<()> {
    let tol = 1e-12;
    let fail = |what: String| Err(crate::Error::Structural(what));
    for (y, dirichlet) in [(0.0, bc.left_dirichlet()), (length, bc.right_dirichlet())] {
        if m.v(y, t).abs() > tol {
            return fail(format!("manufactured velocity does not vanish at y = {y}"));
        }
        if dirichlet && m.theta(y, t).abs() > tol {
            return fail(format!(
                "manufactured temperature does not vanish at y = {y}"
            ));
        }
        if !dirichlet && m.theta_y(y, t).abs() > tol {
            return fail(format!(
                "manufactured temperature slope does not vanish at y = {y}"
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL_BC: [ThetaBc; 4] = [
        ThetaBc::NeumannNeumann,
        ThetaBc::DirichletDirichlet,
        ThetaBc::DirichletNeumann,
        ThetaBc::NeumannDirichlet,
    ];

    fn d_dy(f: impl Fn(f64) -> f64, y: f64) -> f64 {
        let h = 1e-5;
        (f(y + h) - f(y - h)) / (2.0 * h)
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        for bc in ALL_BC {
            let m = SineManufactured::new(0.7, 1.3, bc);
            for &(y, t) in &[(0.2, 0.1), (0.61, 0.4), (1.1, 0.9)] {
                let tol = 1e-6;
                assert!((d_dy(|s| m.v(y, s), t) - m.v_t(y, t)).abs() < tol);
                assert!((d_dy(|s| m.v(s, t), y) - m.v_y(y, t)).abs() < tol);
                assert!((d_dy(|s| m.v_y(s, t), y) - m.v_yy(y, t)).abs() < tol);
                assert!((d_dy(|s| m.jac(y, s), t) - m.v_y(y, t)).abs() < tol);
                assert!((d_dy(|s| m.jac(s, t), y) - m.jac_y(y, t)).abs() < tol);
                assert!((d_dy(|s| m.theta(y, s), t) - m.theta_t(y, t)).abs() < tol);
                assert!((d_dy(|s| m.theta(s, t), y) - m.theta_y(y, t)).abs() < tol);
                assert!((d_dy(|s| m.theta_y(s, t), y) - m.theta_yy(y, t)).abs() < tol);
            }
            assert_eq!(m.jac(0.4, 0.0), 1.0);
            check_boundary_conditions(&m, 1.3, bc, 0.37).unwrap();
        }
    }

    #[test]
    fn sources_match_pde_residual_by_finite_differences() {
        // oracle: residual of the conservative equations with every derivative
        // taken numerically from the point values alone
        let params = PhysicalParams {
            mu: 0.8,
            kappa: 1.7,
            gas_constant: 0.6,
            c_v: 2.5,
            length: 1.0,
            eps: 0.0,
        };
        for bc in ALL_BC {
            let m = SineManufactured::new(0.4, 1.0, bc);
            let (y, t) = (0.37, 0.55);
            let rho = m.rho0();
            let pi = |s: f64| params.gas_constant * rho * m.theta(s, t) / m.jac(s, t);
            let visc = |s: f64| d_dy(|q| m.v(q, t), s) / m.jac(s, t);
            let cond = |s: f64| d_dy(|q| m.theta(q, t), s) / m.jac(s, t);
            let vt = d_dy(|s| m.v(y, s), t);
            let tht = d_dy(|s| m.theta(y, s), t);
            let vy = d_dy(|q| m.v(q, t), y);
            let sv = rho * vt - params.mu * d_dy(visc, y) + d_dy(pi, y);
            let st = params.c_v * rho * tht + vy * pi(y)
                - params.kappa * d_dy(cond, y)
                - params.mu * vy * vy / m.jac(y, t);
            assert!(
                (sv - momentum_source(&m, &params, y, t)).abs() < 1e-4,
                "{bc:?}"
            );
            assert!(
                (st - temperature_source(&m, &params, y, t)).abs() < 1e-4,
                "{bc:?}"
            );
        }
    }

    #[test]
    fn rest_state_has_no_sources() {
        let m = RestManufactured {
            rho: 1.0,
            theta: 2.0,
        };
        let p = PhysicalParams::default();
        assert_eq!(momentum_source(&m, &p, 0.3, 0.2), 0.0);
        assert_eq!(temperature_source(&m, &p, 0.3, 0.2), 0.0);
    }

    #[test]
    fn bc_mismatch_is_structural() {
        let m = SineManufactured::new(1.0, 1.0, ThetaBc::NeumannNeumann);
        assert!(check_boundary_conditions(&m, 1.0, ThetaBc::DirichletDirichlet, 0.2).is_err());
    }
}
