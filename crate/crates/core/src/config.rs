//! TOML run configuration.
//!
//! Only `params.L`, `grid.N`, `time.t_end` and an `[initial]` block are
//! required. [`RunConfig::echo`] renders the document with every default
//! spelled out, and parsing the echo gives back the same configuration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audit::AuditConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, ThetaBc};
use crate::model::{InitialData, PhysicalParams};
use crate::profiles::Profile;
use crate::stepper::{Fault, Scheme, SchemeConfig};
use crate::studies::MmsPlan;

/// Initial data as a function of the grid.
pub type Sampler = Arc<dyn Fn(&Grid) -> InitialData + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(rename = "R", default = "one")]
    pub gas_constant: f64,
    #[serde(default = "one")]
    pub c_v: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(default)]
    pub eps: f64,
}

impl ParamsSection {
    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            mu: self.mu,
            kappa: self.kappa,
            gas_constant: self.gas_constant,
            c_v: self.c_v,
            length: self.length,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "N")]
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    #[serde(default = "defaults::dt_initial")]
    pub dt_initial: f64,
    #[serde(default = "defaults::dt_min")]
    pub dt_min: f64,
    #[serde(default = "defaults::dt_max")]
    pub dt_max: f64,
    #[serde(default = "defaults::safety")]
    pub safety: f64,
    #[serde(default = "defaults::j_floor")]
    pub j_floor: f64,
    #[serde(default = "defaults::theta_negative_tolerance")]
    pub theta_negative_tolerance: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Extra output times in `(0, t_end)`; `0` and `t_end` are always written.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

mod defaults {
    use crate::stepper::SchemeConfig;

    pub fn dt_initial() -> f64 {
        SchemeConfig::default().dt_initial
    }
    pub fn dt_min() -> f64 {
        SchemeConfig::default().dt_min
    }
    pub fn dt_max() -> f64 {
        SchemeConfig::default().dt_max
    }
    pub fn safety() -> f64 {
        SchemeConfig::default().safety
    }
    pub fn j_floor() -> f64 {
        SchemeConfig::default().j_floor
    }
    pub fn theta_negative_tolerance() -> f64 {
        SchemeConfig::default().theta_negative_tolerance
    }
}

/// Either a built-in profile or sampled arrays (`rho0`, `theta0` on cells,
/// `v0` on nodes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub eps_list: Vec<f64>,
    /// Refinement levels; level `k` uses `N 2^k` cells and `base_dt / 2^k`.
    pub levels: usize,
    pub base_dt: f64,
    /// Order between the two finest levels that every refinement quantity
    /// must reach.
    pub min_order: f64,
    pub mms_amplitude: f64,
    pub mms_spatial_order: f64,
    pub mms_temporal_order: f64,
    pub mms: MmsPlan,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            levels: 4,
            base_dt: 4e-3,
            min_order: 0.9,
            mms_amplitude: 0.5,
            mms_spatial_order: 1.9,
            mms_temporal_order: 0.9,
            mms: MmsPlan::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub timeseries: String,
    pub audit: String,
    pub study: String,
    pub euler: String,
    /// Number of equally spaced Euler sample points on `[0, L]`.
    pub euler_points: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            timeseries: "timeseries.csv".into(),
            audit: "audit.json".into(),
            study: "study.json".into(),
            euler: "euler.csv".into(),
            euler_points: 101,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebugSection {
    /// Deliberately broken update, for exercising the failure paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub bc: ThetaBc,
    pub params: ParamsSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub debug: DebugSection,
}

fn one() -> f64 {
    1.0
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// The normalized document with every default explicit.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.physical().validate()?;
        self.grid()?;
        self.scheme().validate()?;
        let t = &self.time;
        if !(t.t_end > 0.0 && t.t_end.is_finite()) {
            return Err(invalid(
                "t_end",
                format!("must be positive and finite, got {}", t.t_end),
            ));
        }
        if let Some(x) = t
            .snapshot_times
            .iter()
            .find(|x| !(**x >= 0.0 && **x <= t.t_end))
        {
            return Err(invalid(
                "snapshot_times",
                format!("{x} is outside [0, t_end]"),
            ));
        }
        self.audit.validate()?;
        let s = &self.study;
        if let Some(e) = s.eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(invalid(
                "eps_list",
                format!("entries must be positive, got {e}"),
            ));
        }
        if !(s.base_dt > 0.0 && s.base_dt.is_finite()) {
            return Err(invalid(
                "base_dt",
                format!("must be positive, got {}", s.base_dt),
            ));
        }
        if s.levels < 3 {
            return Err(invalid(
                "levels",
                format!("need at least 3, got {}", s.levels),
            ));
        }
        if self.output.euler_points < 2 {
            return Err(invalid("euler_points", "need at least 2 points"));
        }
        let i = &self.initial;
        let arrays = [&i.rho0, &i.v0, &i.theta0];
        match (&i.profile, arrays.iter().filter(|a| a.is_some()).count()) {
            (Some(_), 0) => Ok(()),
            (None, 3) => self.initial_data().map(|_| ()),
            (Some(_), _) => Err(Error::Config(
                "`initial`: give either `profile` or the arrays `rho0`, `v0`, `theta0`, not both"
                    .into(),
            )),
            (None, _) => Err(Error::Config(
                "`initial`: needs `profile` or all of `rho0`, `v0`, `theta0`".into(),
            )),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.grid.cells == 0 {
            return Err(invalid("N", "need at least one cell"));
        }
        Grid::new(self.params.length, self.grid.cells)
    }

    pub fn physical(&self) -> PhysicalParams {
        self.params.physical()
    }

    pub fn scheme(&self) -> SchemeConfig {
        let t = &self.time;
        SchemeConfig {
            dt_initial: t.dt_initial,
            dt_min: t.dt_min,
            dt_max: t.dt_max,
            safety: t.safety,
            j_floor: t.j_floor,
            theta_negative_tolerance: t.theta_negative_tolerance,
            scheme: t.scheme,
            forcing: None,
            fault: self.debug.fault,
        }
    }

    /// Initial data sampled on an arbitrary grid; inline arrays only fit the
    /// configured one.
    pub fn sample(&self, grid: &Grid) -> Result<InitialData> {
        if let Some(p) = &self.initial.profile {
            return Ok(p.sample(grid, self.bc));
        }
        let data = InitialData {
            rho0: self.initial.rho0.clone().unwrap_or_default(),
            v0: self.initial.v0.clone().unwrap_or_default(),
            theta0: self.initial.theta0.clone().unwrap_or_default(),
            derivatives: Default::default(),
        };
        data.check_shape(grid)?;
        Ok(data)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        self.sample(&self.grid()?)
    }

    /// A sampler usable at every resolution, or an error for inline data.
    pub fn sampler(&self) -> Result<Sampler> {
        match self.initial.profile {
            Some(p) => {
                let bc = self.bc;
                Ok(Arc::new(move |g: &Grid| p.sample(g, bc)))
            }
            None => Err(Error::Config(
                "`initial`: refinement needs a named profile, inline arrays fix the grid".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[params]
L = 1.0
[grid]
N = 16
[time]
t_end = 0.1
[initial]
profile = { name = "sine-velocity" }
"#;

    #[test]
    fn minimal_document_fills_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.bc, ThetaBc::NeumannNeumann);
        assert_eq!(c.physical(), PhysicalParams::default());
        assert_eq!(c.time.dt_max, 1e-2);
        assert_eq!(c.audit, AuditConfig::default());
        assert_eq!(
            c.initial.profile,
            Some(Profile::SineVelocity { amplitude: 1.0 })
        );
        let echo = c.echo();
        for key in [
            "mu",
            "kappa",
            "R",
            "c_v",
            "eps",
            "dt_min",
            "scheme",
            "mass_tol",
            "eps_list",
            "amplitude",
        ] {
            assert!(echo.contains(key), "echo lacks {key}:\n{echo}");
        }
    }

    #[test]
    fn echo_is_a_fixed_point() {
        let inline = r#"
bc = "dirichlet-dirichlet"
[params]
L = 2.0
eps = 0.001
[grid]
N = 2
[time]
t_end = 0.5
scheme = "imex-cn"
snapshot_times = [0.25]
[initial]
rho0 = [1.0, 2.0]
v0 = [0.0, 0.1, 0.0]
theta0 = [1.0, 1.5]
[debug]
fault = { kind = "jacobian-sink", rate = 2.0 }
"#;
        for text in [MINIMAL, inline] {
            let a = RunConfig::parse(text).unwrap();
            let b = RunConfig::parse(&a.echo()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.echo(), b.echo());
        }
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            (MINIMAL.replace("L = 1.0", "L = 1.0\nmu = -1.0"), "mu"),
            (MINIMAL.replace("N = 16", "N = 0"), "N"),
            (
                MINIMAL.replace("L = 1.0", "L = 1.0\nviscosity = 2.0"),
                "viscosity",
            ),
            (MINIMAL.replace("N = 16", ""), "N"),
            (MINIMAL.replace("t_end = 0.1", "dt_max = 0.1"), "t_end"),
            (MINIMAL.replace("L = 1.0", "L = \"one\""), "L"),
            (
                MINIMAL.replace("[initial]\nprofile = { name = \"sine-velocity\" }", ""),
                "initial",
            ),
        ];
        for (text, key) in cases {
            let e = RunConfig::parse(&text).unwrap_err().to_string();
            assert!(e.contains(key), "{key} missing from: {e}");
        }
    }

    #[test]
    fn bc_and_initial_forms() {
        let c = RunConfig::parse(&format!("bc = \"dirichlet-neumann\"\n{MINIMAL}")).unwrap();
        assert_eq!(c.bc, ThetaBc::DirichletNeumann);
        let both = MINIMAL.replace("[initial]", "[initial]\nrho0 = [1.0]");
        assert!(matches!(RunConfig::parse(&both), Err(Error::Config(_))));
        let short = MINIMAL.replace(
            "profile = { name = \"sine-velocity\" }",
            "rho0 = [1.0]\nv0 = [0.0, 0.0]\ntheta0 = [1.0]",
        );
        assert!(matches!(
            RunConfig::parse(&short),
            Err(Error::Structural(_))
        ));
        assert!(RunConfig::parse(&short)
            .unwrap_err()
            .to_string()
            .contains("rho0"));
        assert!(RunConfig::parse(&short.replace("N = 16", "N = 1"))
            .unwrap()
            .sampler()
            .is_err());
    }
}
