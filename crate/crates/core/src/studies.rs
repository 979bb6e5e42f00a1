//! Experiment drivers: continuation in the regularization offset, refinement
//! order measurement, and manufactured-solution verification.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audit;
use crate::error::{Error, Result};
use crate::grid::{self, Grid, ThetaBc};
use crate::mms::{self, ManufacturedSolution, MmsForcing};
use crate::model::{apriori_constants, AprioriConstants, InitialData, PhysicalParams, Problem};
use crate::stepper::{self, SchemeConfig, State};

/// Observed convergence order; `Exact` when every error is at round-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Exact,
    Observed(f64),
}

impl Order {
    /// True for `Exact` or an observed order of at least `p`.
    pub fn at_least(self, p: f64) -> bool {
        match self {
            Self::Exact => true,
            Self::Observed(q) => q >= p,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact => f.write_str("exact"),
            Self::Observed(q) => write!(f, "{q:.3}"),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Exact => s.serialize_str("exact"),
            Self::Observed(q) => s.serialize_f64(*q),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Number(q) => Ok(Self::Observed(q)),
            Raw::Word(w) if w == "exact" => Ok(Self::Exact),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("unknown order `{w}`"))),
        }
    }
}

/// Errors at or below this level count as round-off. Rounding accumulated
/// over 10^4 steps on a few hundred cells reaches a few times 1e-12.
pub const ROUND_OFF: f64 = 1e-10;

/// Error table for one quantity with pairwise and least-squares orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub quantity: String,
    /// Step sizes (`dy` or `dt`), coarsest first.
    pub resolutions: Vec<f64>,
    pub errors: Vec<f64>,
    pub pairwise: Vec<Order>,
    /// Least-squares slope of `log(error)` against `log(resolution)`.
    pub fitted: Order,
}

impl OrderReport {
    pub fn new(
        quantity: impl Into<String>,
        resolutions: Vec<f64>,
        errors: Vec<f64>,
    ) -> Result<Self> {
        if resolutions.len() != errors.len() || resolutions.len() < 2 {
            return Err(Error::Structural(format!(
                "order fit needs matching tables of at least two entries, got {} and {}",
                resolutions.len(),
                errors.len()
            )));
        }
        let pairwise = (0..errors.len() - 1)
            .map(|i| fit_order(&resolutions[i..i + 2], &errors[i..i + 2]))
            .collect();
        let fitted = fit_order(&resolutions, &errors);
        Ok(Self {
            quantity: quantity.into(),
            resolutions,
            errors,
            pairwise,
            fitted,
        })
    }

    /// Order between the two finest resolutions.
    pub fn finest(&self) -> Order {
        *self.pairwise.last().expect("at least one pair")
    }

    /// True when every successive error is smaller than the one before.
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }
}

/// Least-squares slope of `log e` against `log h`; `Exact` when every error
/// is at round-off.
pub fn fit_order(resolutions: &[f64], errors: &[f64]) -> Order {
    if errors.iter().all(|e| e.abs() <= ROUND_OFF) {
        return Order::Exact;
    }
    let pts: Vec<(f64, f64)> = resolutions
        .iter()
        .zip(errors)
        .map(|(h, e)| (h.ln(), e.abs().max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Order::Observed(sxy / sxx)
}

/// Sup-norm differences of `(J, v, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldDifference {
    pub jac: f64,
    pub v: f64,
    pub theta: f64,
}

impl FieldDifference {
    pub fn max(&self) -> f64 {
        self.jac.max(self.v).max(self.theta)
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn state_difference(a: &State, b: &State) -> FieldDifference {
    FieldDifference {
        jac: sup_diff(&a.jac, &b.jac),
        v: sup_diff(&a.v, &b.v),
        theta: sup_diff(&a.theta, &b.theta),
    }
}

/// Constants of one regularized problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsConstants {
    pub e0: f64,
    pub m1: f64,
    pub n1: f64,
    pub n2: f64,
    pub n2_alt: f64,
    pub n3: f64,
}

impl From<&AprioriConstants> for EpsConstants {
    fn from(c: &AprioriConstants) -> Self {
        Self {
            e0: c.e0,
            m1: c.m1,
            n1: c.n1,
            n2: c.n2,
            n2_alt: c.n2_alt,
            n3: c.n3,
        }
    }
}

/// Upper and lower caps that hold uniformly in `eps` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsCaps {
    /// `E0` of the unshifted data.
    pub e0_lower: f64,
    /// `E0 + |v0|_2^2 + c_v (|rho0|_1 + |theta0|_1 + L)`.
    pub e0_upper: f64,
    /// `m1` of the unshifted data.
    pub m1_lower: f64,
    /// `m1` at `eps = 1`.
    pub m1_upper: f64,
    pub n1_upper: f64,
    /// Cap for the `|sqrt(rho) v0|_2` variant of `N2`.
    pub n2_alt_upper: f64,
    pub n3_upper: f64,
}

/// Caps built from the unshifted data and the `eps = 1` energy.
pub fn eps_caps(data: &InitialData, params: &PhysicalParams, grid: &Grid) -> Result<EpsCaps> {
    let base = apriori_constants(
        data,
        &PhysicalParams {
            eps: 0.0,
            ..*params
        },
        grid,
    )?;
    let unit = apriori_constants(
        data,
        &PhysicalParams {
            eps: 1.0,
            ..*params
        },
        grid,
    )?;
    let derivs = data.resolved_derivatives(grid);
    let c_v = params.c_v;
    let r = params.gas_constant;
    let l = grid.length;
    let abs = |f: &[f64]| f.iter().map(|x| x.abs()).collect::<Vec<_>>();
    let v_l2 = grid::node_l2(&data.v0, grid);
    let e0_upper = base.e0
        + v_l2 * v_l2
        + c_v
            * (grid::integrate(&abs(&data.rho0), grid)
                + grid::integrate(&abs(&data.theta0), grid)
                + l);
    let n1_upper = unit.e0 / c_v
        + base.rho_bar
        + 1.0
        + 1.0 / base.rho_bar
        + l
        + 1.0 / l
        + 1.0 / base.omega0
        + base.rho_d1_sup;

    let sqrt_rho = crate::model::node_density(&data.rho0)
        .iter()
        .map(|r| r.max(0.0).sqrt())
        .collect::<Vec<_>>();
    let weighted = |w: &[f64], f: &[f64]| {
        let p: Vec<f64> = w.iter().zip(f).map(|(a, b)| a * b).collect();
        grid::node_l2(&p, grid)
    };
    let v_sq: Vec<f64> = data.v0.iter().map(|v| v * v).collect();
    let dv_l2 = grid::cell_l2(&derivs.v0_d1, grid);
    let n2_alt_upper = weighted(&sqrt_rho, &v_sq)
        + grid::node_l2(&v_sq, grid)
        + weighted(&sqrt_rho, &data.v0)
        + v_l2
        + dv_l2;
    let n3_upper = base.g0_l2
        + r * (grid::cell_l2(&derivs.rho0_d1, grid) + grid::cell_l2(&derivs.theta0_d1, grid))
        + base.h0_l2
        + r * dv_l2 * (grid::sup_norm(&data.rho0) + grid::sup_norm(&data.theta0) + 1.0)
        + base.rho_d2_l2;
    Ok(EpsCaps {
        e0_lower: base.e0,
        e0_upper,
        m1_lower: base.m1,
        m1_upper: unit.m1,
        n1_upper,
        n2_alt_upper,
        n3_upper,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRun {
    pub eps: f64,
    pub constants: EpsConstants,
    /// Present when the run completed.
    pub final_state: Option<State>,
    pub failure: Option<String>,
    pub min_jac: f64,
    /// Smallest `min J - (m1 f1(t))^-1` over every accepted step.
    pub min_j_lower_margin: f64,
    /// All constants within their caps.
    pub within_caps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub eps: Vec<f64>,
    pub t_end: f64,
    pub cells: usize,
    pub caps: EpsCaps,
    pub runs: Vec<EpsRun>,
    /// `X(eps_k) - X(eps_{k+1})` at `t_end`.
    pub differences: Vec<FieldDifference>,
    pub differences_decreasing: bool,
    /// `E0` and `m1` nondecreasing in `eps`.
    pub monotone_in_eps: bool,
    pub completed: bool,
    pub passed: bool,
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter {
            name: "eps_list",
            reason: "must not be empty".into(),
        });
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::InvalidParameter {
            name: "eps_list",
            reason: format!("entries must lie in (0, 1), got {eps_list:?}"),
        });
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter {
            name: "eps_list",
            reason: format!("must be strictly decreasing, got {eps_list:?}"),
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eps_run(
    data: &InitialData,
    params: &PhysicalParams,
    grid: &Grid,
    cfg: &SchemeConfig,
    bc: ThetaBc,
    t_end: f64,
    eps: f64,
    caps: &EpsCaps,
) -> Result<EpsRun> {
    let params = PhysicalParams { eps, ..*params };
    let problem = Problem::new(data, &params, *grid, bc)?;
    let constants = problem.constants()?;
    let c = EpsConstants::from(&constants);
    let slack = |x: f64| 1e-12 * (1.0 + x.abs());
    let within_caps = c.e0 >= caps.e0_lower - slack(caps.e0_lower)
        && c.e0 <= caps.e0_upper + slack(caps.e0_upper)
        && c.m1 >= caps.m1_lower - slack(caps.m1_lower)
        && c.m1 <= caps.m1_upper + slack(caps.m1_upper)
        && c.n1 <= caps.n1_upper + slack(caps.n1_upper)
        && c.n2_alt <= caps.n2_alt_upper + slack(caps.n2_alt_upper)
        && c.n3 <= caps.n3_upper + slack(caps.n3_upper);
    let mut margin = f64::INFINITY;
    let outcome = stepper::run_observed(&problem, cfg, t_end, &[], &mut |_, next| {
        margin = margin.min(next.min_jac() - constants.j_lower(next.t));
    });
    Ok(match outcome {
        Ok(traj) => EpsRun {
            eps,
            constants: c,
            min_jac: traj.meta.min_jac,
            final_state: Some(traj.last().clone()),
            failure: None,
            min_j_lower_margin: margin,
            within_caps,
        },
        Err(e) => EpsRun {
            eps,
            constants: c,
            final_state: None,
            failure: Some(e.to_string()),
            min_jac: f64::NAN,
            min_j_lower_margin: margin,
            within_caps,
        },
    })
}

/// Solves the problem for each `eps` on the same grid and compares
/// consecutive final states. Runs execute on separate threads; the report
/// keeps the order of `eps_list`.
pub fn eps_continuation(
    data: &InitialData,
    params: &PhysicalParams,
    grid: &Grid,
    cfg: &SchemeConfig,
    bc: ThetaBc,
    t_end: f64,
    eps_list: &[f64],
) -> Result<ContinuationReport> {
    check_eps_list(eps_list)?;
    params.validate()?;
    data.check_shape(grid)?;
    let caps = eps_caps(data, params, grid)?;
    let runs: Vec<Result<EpsRun>> = std::thread::scope(|s| {
        let handles: Vec<_> = eps_list
            .iter()
            .map(|&eps| {
                let caps = &caps;
                s.spawn(move || eps_run(data, params, grid, cfg, bc, t_end, eps, caps))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("continuation worker panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let completed = runs.iter().all(|r| r.final_state.is_some());
    let differences: Vec<FieldDifference> = runs
        .windows(2)
        .filter_map(|w| match (&w[0].final_state, &w[1].final_state) {
            (Some(a), Some(b)) => Some(state_difference(a, b)),
            _ => None,
        })
        .collect();
    let differences_decreasing = completed
        && differences
            .windows(2)
            .all(|w| w[1].jac < w[0].jac && w[1].v < w[0].v && w[1].theta < w[0].theta);
    // eps_list is decreasing, so the constants must not increase along it
    let monotone_in_eps = runs
        .windows(2)
        .all(|w| w[1].constants.e0 <= w[0].constants.e0 && w[1].constants.m1 <= w[0].constants.m1);
    let passed = completed
        && differences_decreasing
        && monotone_in_eps
        && runs
            .iter()
            .all(|r| r.within_caps && r.min_j_lower_margin >= 0.0);
    Ok(ContinuationReport {
        eps: eps_list.to_vec(),
        t_end,
        cells: grid.cells,
        caps,
        runs,
        differences,
        differences_decreasing,
        monotone_in_eps,
        completed,
        passed,
    })
}

/// Restriction of a fine cell field to the grid with half as many cells.
fn restrict_cells(fine: &[f64]) -> Vec<f64> {
    fine.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

fn restrict_nodes(fine: &[f64]) -> Vec<f64> {
    fine.iter().step_by(2).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub cells: usize,
    pub dt: f64,
}

/// Audit quantities of one refinement level at `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelAudit {
    pub energy_drift: f64,
    pub ks_residual_sup: f64,
    /// `std_y(h_field) / (1 + |h|)`.
    pub h_spread: f64,
    pub flux_gradient_residual: f64,
    pub flux_evolution_residual: f64,
    /// `max |boundary difference of G| / dy^2`.
    pub boundary_flux_scaled: f64,
    pub g_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub levels: Vec<Level>,
    pub audits: Vec<LevelAudit>,
    /// Successive differences between levels, measured on the coarser grid.
    pub solution: Vec<OrderReport>,
    pub energy_drift: OrderReport,
    pub ks_residual: OrderReport,
    pub h_spread: OrderReport,
    pub flux_gradient_residual: OrderReport,
    pub flux_evolution_residual: OrderReport,
}

/// Runs level `k` with `base_cells * 2^k` cells and fixed step
/// `base_dt / 2^k`; initial data are sampled on each grid by `sample`.
#[allow(clippy::too_many_arguments)]
pub fn refinement_study(
    sample: &(dyn Fn(&Grid) -> InitialData + Sync),
    params: &PhysicalParams,
    cfg: &SchemeConfig,
    bc: ThetaBc,
    t_end: f64,
    base_cells: usize,
    base_dt: f64,
    levels: usize,
    delta_mask: f64,
) -> Result<RefinementReport> {
    if levels < 3 {
        return Err(Error::InvalidParameter {
            name: "levels",
            reason: format!("need at least 3 refinement levels, got {levels}"),
        });
    }
    let plan: Vec<Level> = (0..levels)
        .map(|k| Level {
            cells: base_cells << k,
            dt: base_dt / (1u64 << k) as f64,
        })
        .collect();
    let results: Vec<Result<(State, LevelAudit)>> = std::thread::scope(|s| {
        let handles: Vec<_> = plan
            .iter()
            .map(|&level| {
                s.spawn(move || refinement_level(sample, params, cfg, bc, t_end, level, delta_mask))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("refinement worker panicked"))
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (states, audits): (Vec<State>, Vec<LevelAudit>) = results.into_iter().unzip();

    let dts: Vec<f64> = plan.iter().map(|l| l.dt).collect();
    let mut jac = Vec::new();
    let mut v = Vec::new();
    let mut theta = Vec::new();
    for w in states.windows(2) {
        jac.push(sup_diff(&w[0].jac, &restrict_cells(&w[1].jac)));
        v.push(sup_diff(&w[0].v, &restrict_nodes(&w[1].v)));
        theta.push(sup_diff(&w[0].theta, &restrict_cells(&w[1].theta)));
    }
    let diff_res = dts[..levels - 1].to_vec();
    let series = |name: &str, f: &dyn Fn(&LevelAudit) -> f64| {
        OrderReport::new(name, dts.clone(), audits.iter().map(f).collect())
    };
    Ok(RefinementReport {
        solution: vec![
            OrderReport::new("jac", diff_res.clone(), jac)?,
            OrderReport::new("v", diff_res.clone(), v)?,
            OrderReport::new("theta", diff_res, theta)?,
        ],
        energy_drift: series("energy_drift", &|a| a.energy_drift)?,
        ks_residual: series("ks_residual", &|a| a.ks_residual_sup)?,
        h_spread: series("h_spread", &|a| a.h_spread)?,
        flux_gradient_residual: series("flux_gradient_residual", &|a| a.flux_gradient_residual)?,
        flux_evolution_residual: series("flux_evolution_residual", &|a| a.flux_evolution_residual)?,
        levels: plan,
        audits,
    })
}

fn refinement_level(
    sample: &(dyn Fn(&Grid) -> InitialData + Sync),
    params: &PhysicalParams,
    cfg: &SchemeConfig,
    bc: ThetaBc,
    t_end: f64,
    level: Level,
    delta_mask: f64,
) -> Result<(State, LevelAudit)> {
    let grid = Grid::new(params.length, level.cells)?;
    let data = sample(&grid);
    let problem = Problem::new(&data, params, grid, bc)?;
    let constants = problem.constants()?;
    let cfg = SchemeConfig {
        dt_initial: level.dt,
        dt_min: level.dt,
        dt_max: level.dt,
        ..cfg.clone()
    };
    let traj = stepper::run(&problem, &cfg, t_end, &[])?;
    let snap = traj.snapshots.last().expect("trajectory is never empty");
    let state = &snap.state;
    let prev = snap
        .prev
        .as_ref()
        .ok_or_else(|| Error::Structural("run took no steps".into()))?;
    let (_, energy) = audit::conservation_check(state, &problem, &constants);
    let ks = audit::ks_fields(state, &problem)?;
    let residual = audit::ks_identity_residual(state, &problem)?;
    let flux = audit::flux_checks(state, prev, &problem, delta_mask * problem.rho_bar())?;
    let dy = problem.grid.dy();
    Ok((
        state.clone(),
        LevelAudit {
            energy_drift: energy.abs(),
            ks_residual_sup: grid::sup_norm(&residual),
            h_spread: ks.spread / (1.0 + ks.h.abs()),
            flux_gradient_residual: flux.gradient_residual,
            flux_evolution_residual: flux.evolution_residual,
            boundary_flux_scaled: flux.boundary_left.abs().max(flux.boundary_right.abs())
                / (dy * dy),
            g_sup: flux.g_sup,
        },
    ))
}

/// Resolutions for a manufactured-solution study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsPlan {
    /// Cell counts of the spatial study.
    pub spatial_cells: Vec<usize>,
    /// `dt = spatial_dt_factor * dy^2` in the spatial study.
    pub spatial_dt_factor: f64,
    /// Cell count of the temporal study.
    pub temporal_cells: usize,
    /// Steps of the temporal study.
    pub temporal_dts: Vec<f64>,
}

impl Default for MmsPlan {
    fn default() -> Self {
        Self {
            spatial_cells: vec![16, 32, 64],
            spatial_dt_factor: 0.25,
            temporal_cells: 512,
            temporal_dts: vec![0.02, 0.01, 0.005],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsReport {
    pub bc: ThetaBc,
    pub t_end: f64,
    /// Max over `J`, `v`, `theta` of the sup error at `t_end`, against `dy`.
    pub spatial: OrderReport,
    /// Same against `dt`.
    pub temporal: OrderReport,
    pub spatial_fields: Vec<OrderReport>,
    pub temporal_fields: Vec<OrderReport>,
}

/// Sup errors of `(J, v, theta)` against the manufactured fields at `t_end`.
fn mms_errors<M>(
    solution: &M,
    params: &PhysicalParams,
    bc: ThetaBc,
    cfg: &SchemeConfig,
    cells: usize,
    dt: f64,
    t_end: f64,
) -> Result<FieldDifference>
where
    M: ManufacturedSolution + Clone + 'static,
{
    let grid = Grid::new(params.length, cells)?;
    let data = mms::initial_data(solution, &grid);
    let problem = Problem::new(&data, params, grid, bc)?;
    let forcing = Arc::new(MmsForcing {
        solution: solution.clone(),
        params: *params,
    });
    let cfg = SchemeConfig {
        dt_initial: dt,
        dt_min: dt,
        dt_max: dt,
        forcing: Some(forcing),
        ..cfg.clone()
    };
    let traj = stepper::run(&problem, &cfg, t_end, &[])?;
    let s = traj.last();
    let centers = grid.centers();
    let nodes = grid.nodes();
    let exact_j: Vec<f64> = centers.iter().map(|y| solution.jac(*y, t_end)).collect();
    let exact_v: Vec<f64> = nodes.iter().map(|y| solution.v(*y, t_end)).collect();
    let exact_t: Vec<f64> = centers.iter().map(|y| solution.theta(*y, t_end)).collect();
    Ok(FieldDifference {
        jac: sup_diff(&s.jac, &exact_j),
        v: sup_diff(&s.v, &exact_v),
        theta: sup_diff(&s.theta, &exact_t),
    })
}

/// Runs the forced system against a closed-form solution and measures the
/// spatial order (with `dt` proportional to `dy^2`) and the temporal order
/// (on a fixed fine grid).
pub fn mms_run<M>(
    solution: &M,
    params: &PhysicalParams,
    cfg: &SchemeConfig,
    bc: ThetaBc,
    t_end: f64,
    plan: &MmsPlan,
) -> Result<MmsReport>
where
    M: ManufacturedSolution + Clone + 'static,
{
    if params.eps != 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: "manufactured solutions are run without the regularization shift".into(),
        });
    }
    if plan.spatial_cells.len() < 3 || plan.temporal_dts.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "levels",
            reason: "need at least 3 resolutions per study".into(),
        });
    }
    for k in 0..=8 {
        mms::check_boundary_conditions(solution, params.length, bc, t_end * k as f64 / 8.0)?;
    }
    let spatial_runs: Vec<(usize, f64)> = plan
        .spatial_cells
        .iter()
        .map(|&n| {
            let dy = params.length / n as f64;
            (n, plan.spatial_dt_factor * dy * dy)
        })
        .collect();
    let temporal_runs: Vec<(usize, f64)> = plan
        .temporal_dts
        .iter()
        .map(|&dt| (plan.temporal_cells, dt))
        .collect();
    let all: Vec<(usize, f64)> = spatial_runs.iter().chain(&temporal_runs).copied().collect();
    let errors: Vec<Result<FieldDifference>> = std::thread::scope(|s| {
        let handles: Vec<_> = all
            .iter()
            .map(|&(n, dt)| s.spawn(move || mms_errors(solution, params, bc, cfg, n, dt, t_end)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mms worker panicked"))
            .collect()
    });
    let errors = errors.into_iter().collect::<Result<Vec<_>>>()?;
    let (spatial_err, temporal_err) = errors.split_at(spatial_runs.len());
    let dys: Vec<f64> = plan
        .spatial_cells
        .iter()
        .map(|n| params.length / *n as f64)
        .collect();
    let dts = plan.temporal_dts.clone();
    let fields = |res: &[f64], errs: &[FieldDifference]| -> Result<Vec<OrderReport>> {
        Ok(vec![
            OrderReport::new("jac", res.to_vec(), errs.iter().map(|e| e.jac).collect())?,
            OrderReport::new("v", res.to_vec(), errs.iter().map(|e| e.v).collect())?,
            OrderReport::new(
                "theta",
                res.to_vec(),
                errs.iter().map(|e| e.theta).collect(),
            )?,
        ])
    };
    Ok(MmsReport {
        bc,
        t_end,
        spatial: OrderReport::new(
            "spatial",
            dys.clone(),
            spatial_err.iter().map(FieldDifference::max).collect(),
        )?,
        temporal: OrderReport::new(
            "temporal",
            dts.clone(),
            temporal_err.iter().map(FieldDifference::max).collect(),
        )?,
        spatial_fields: fields(&dys, spatial_err)?,
        temporal_fields: fields(&dts, temporal_err)?,
    })
}
