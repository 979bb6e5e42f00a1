//! Built-in initial data with analytic derivative samples.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, ThetaBc};
use crate::mms::{self, SineManufactured};
use crate::model::{DataDerivatives, InitialData};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// Uniform gas at rest.
    Constant {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "one")]
        theta: f64,
    },
    /// `rho0 = 1`, `v0 = A sin(pi y / L)`, `theta0 = 1`.
    SineVelocity {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `rho0 = max(0, 1 - 4 (y - L/2)^2 / L^2)`, vanishing at both walls,
    /// `v0 = A sin(2 pi y / L)`, `theta0 = 1`.
    VacuumBump {
        #[serde(default = "half")]
        amplitude: f64,
    },
    /// The manufactured solution of [`crate::mms::SineManufactured`] at `t = 0`.
    Mms {
        #[serde(default = "half")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::SineVelocity { .. } => "sine-velocity",
            Self::VacuumBump { .. } => "vacuum-bump",
            Self::Mms { .. } => "mms",
        }
    }

    pub fn sample(&self, grid: &Grid, bc: ThetaBc) -> InitialData {
        match *self {
            Self::Constant { rho, theta } => constant(grid, rho, theta),
            Self::SineVelocity { amplitude } => sine_velocity(grid, amplitude),
            Self::VacuumBump { amplitude } => vacuum_bump(grid, amplitude),
            Self::Mms { amplitude } => {
                mms::initial_data(&SineManufactured::new(amplitude, grid.length, bc), grid)
            }
        }
    }
}

pub fn constant(grid: &Grid, rho: f64, theta: f64) -> InitialData {
    let n = grid.cells;
    InitialData {
        rho0: vec![rho; n],
        v0: vec![0.0; n + 1],
        theta0: vec![theta; n],
        derivatives: DataDerivatives {
            rho0_d1: Some(vec![0.0; n]),
            rho0_d2: Some(vec![0.0; n]),
            v0_d1: Some(vec![0.0; n]),
            v0_d2: Some(vec![0.0; n]),
            theta0_d1: Some(vec![0.0; n]),
            theta0_d2: Some(vec![0.0; n]),
        },
    }
}

/// Velocity `A sin(k y)` on nodes with its derivatives at cell centres.
fn sine_mode(grid: &Grid, amplitude: f64, k: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut v: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|y| amplitude * (k * y).sin())
        .collect();
    // exact zeros at the walls regardless of rounding in sin(k L)
    v[0] = 0.0;
    v[grid.cells] = 0.0;
    let yc = grid.centers();
    let d1 = yc.iter().map(|y| amplitude * k * (k * y).cos()).collect();
    let d2 = yc
        .iter()
        .map(|y| -amplitude * k * k * (k * y).sin())
        .collect();
    (v, d1, d2)
}

pub fn sine_velocity(grid: &Grid, amplitude: f64) -> InitialData {
    let n = grid.cells;
    let (v0, d1, d2) = sine_mode(grid, amplitude, PI / grid.length);
    InitialData {
        rho0: vec![1.0; n],
        v0,
        theta0: vec![1.0; n],
        derivatives: DataDerivatives {
            rho0_d1: Some(vec![0.0; n]),
            rho0_d2: Some(vec![0.0; n]),
            v0_d1: Some(d1),
            v0_d2: Some(d2),
            theta0_d1: Some(vec![0.0; n]),
            theta0_d2: Some(vec![0.0; n]),
        },
    }
}

pub fn vacuum_bump(grid: &Grid, amplitude: f64) -> InitialData {
    let n = grid.cells;
    let l = grid.length;
    let yc = grid.centers();
    let (v0, d1, d2) = sine_mode(grid, amplitude, 2.0 * PI / l);
    let s = |y: f64| (y - 0.5 * l) / l;
    InitialData {
        rho0: yc
            .iter()
            .map(|&y| (1.0 - 4.0 * s(y) * s(y)).max(0.0))
            .collect(),
        v0,
        theta0: vec![1.0; n],
        derivatives: DataDerivatives {
            rho0_d1: Some(yc.iter().map(|&y| -8.0 * s(y) / l).collect()),
            rho0_d2: Some(vec![-8.0 / (l * l); n]),
            v0_d1: Some(d1),
            v0_d2: Some(d2),
            theta0_d1: Some(vec![0.0; n]),
            theta0_d2: Some(vec![0.0; n]),
        },
    }
}
