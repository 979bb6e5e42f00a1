//! Exact identities and explicit-constant bounds evaluated along a trajectory.
//!
//! Every graded quantity is stored together with the threshold and the rule
//! that judged it. Estimates whose constants are not explicit are only logged
//! as [`Diagnostics`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, ThetaBc};
use crate::model::{total_energy, AprioriConstants, Problem};
use crate::stepper::{RunMeta, State, Trajectory};

/// Fields of the Kazhikhov-Shelukhin construction.
///
/// `h_field = int_0^y rho0 (v - v0) - mu log J + int_0^t pi` is constant in
/// `y` for the continuous problem; `h` is its average, `H = exp(h / mu)` and
/// `B = exp(-(1/mu) int_0^y rho0 (v - v0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsFields {
    pub h_field: Vec<f64>,
    pub h: f64,
    pub big_h: f64,
    pub b: Vec<f64>,
    /// Population standard deviation of `h_field`.
    pub spread: f64,
}

pub fn ks_fields(state: &State, problem: &Problem) -> Result<KsFields> {
    let g = &problem.grid;
    let mu = problem.params.mu;
    let momentum: Vec<f64> = problem
        .rho_node
        .iter()
        .zip(state.v.iter().zip(&problem.v0))
        .map(|(r, (v, v0))| r * (v - v0))
        .collect();
    let integral = grid::node_cumulative_to_cells(&momentum, g);
    let mut h_field = Vec::with_capacity(g.cells);
    for c in 0..g.cells {
        let j = state.jac[c];
        if !(j > 0.0) {
            return Err(Error::DegenerateJacobian(format!("J[{c}] = {j}")));
        }
        h_field.push(integral[c] - mu * j.ln() + state.acc_pi[c]);
    }
    let n = g.cells as f64;
    let h = h_field.iter().sum::<f64>() / n;
    let spread = (h_field.iter().map(|x| (x - h) * (x - h)).sum::<f64>() / n).sqrt();
    Ok(KsFields {
        h,
        big_h: (h / mu).exp(),
        b: integral.iter().map(|i| (-i / mu).exp()).collect(),
        spread,
        h_field,
    })
}

/// `1 + (R/mu) rho0 int_0^t theta H B - J H B` on cells.
pub fn ks_identity_residual(state: &State, problem: &Problem) -> Result<Vec<f64>> {
    let ks = ks_fields(state, problem)?;
    let k = problem.params.gas_constant / problem.params.mu;
    Ok((0..problem.grid.cells)
        .map(|c| 1.0 + k * problem.rho[c] * state.acc_ks[c] - state.jac[c] * ks.big_h * ks.b[c])
        .collect())
}

/// Margins of the two-sided Jacobian bound; both must be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub lower: f64,
    pub upper: f64,
}

pub fn j_bounds_check(state: &State, constants: &AprioriConstants) -> Margins {
    let lower = state.min_jac() - constants.j_lower(state.t);
    let upper = state
        .jac
        .iter()
        .zip(&state.acc_rho_theta)
        .map(|(j, a)| constants.j_upper(state.t, *a) - j)
        .fold(f64::INFINITY, f64::min);
    Margins { lower, upper }
}

/// Both sides of the two density-weighted sup bounds on the temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSides {
    /// `|rho0^2 theta|_inf^2`.
    pub weighted_lhs: f64,
    pub weighted_rhs: f64,
    /// `|theta|_inf`.
    pub sup_lhs: f64,
    pub sup_rhs: f64,
}

impl EmbeddingSides {
    pub fn margins(&self) -> Margins {
        Margins {
            lower: self.weighted_rhs - self.weighted_lhs,
            upper: self.sup_rhs - self.sup_lhs,
        }
    }
}

/// `|theta_y / sqrt(J)|_2` with node differences of the cell values and
/// face-averaged `J`. Dirichlet ends contribute their half cell.
pub fn dissipation_norm(state: &State, problem: &Problem) -> f64 {
    let g = &problem.grid;
    let n = g.cells;
    let dy = g.dy();
    let face_j = grid::face_average(&state.jac);
    let mut sum = 0.0;
    for i in 1..n {
        let d = (state.theta[i] - state.theta[i - 1]) / dy;
        sum += dy * d * d / face_j[i];
    }
    if problem.bc.left_dirichlet() {
        let d = 2.0 * state.theta[0] / dy;
        sum += 0.5 * dy * d * d / face_j[0];
    }
    if problem.bc.right_dirichlet() {
        let d = 2.0 * state.theta[n - 1] / dy;
        sum += 0.5 * dy * d * d / face_j[n];
    }
    sum.sqrt()
}

pub fn embedding_check(
    state: &State,
    problem: &Problem,
    constants: &AprioriConstants,
) -> EmbeddingSides {
    let e = constants.e0 / problem.params.c_v;
    let rho_bar = constants.rho_bar;
    let length = problem.grid.length;
    let d = dissipation_norm(state, problem);
    let j_sup = grid::sup_norm(&state.jac);
    let weighted = state
        .theta
        .iter()
        .zip(&problem.rho)
        .fold(0.0_f64, |m, (t, r)| m.max((r * r * t).abs()));
    EmbeddingSides {
        weighted_lhs: weighted * weighted,
        weighted_rhs: e
            * e
            * (8.0 * rho_bar * rho_bar / (length * length)
                + 32.0 * constants.rho_d1_sup * constants.rho_d1_sup)
            + 6.0
                * rho_bar.powf(10.0 / 3.0)
                * e.powf(2.0 / 3.0)
                * d.powf(4.0 / 3.0)
                * j_sup.powf(2.0 / 3.0),
        sup_lhs: grid::sup_norm(&state.theta),
        sup_rhs: length.sqrt() * d + 2.0 * e / (constants.omega0 * rho_bar),
    }
}

/// Residuals of the effective-flux relations between two accepted states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    /// `sup_i |(G_i - G_{i-1}) / dy - rho (v^{n+1} - v^n) / dt|` over interior nodes.
    pub gradient_residual: f64,
    /// `G_1 - G_0`.
    pub boundary_left: f64,
    /// `G_{N-1} - G_{N-2}`.
    pub boundary_right: f64,
    pub g_sup: f64,
    /// Sup of the evolution-equation residual over unmasked cells.
    pub evolution_residual: f64,
    pub delta_mask: f64,
    pub masked_cells: usize,
}

/// Effective viscous flux `mu v_y / J - pi` on cells.
pub fn flux_field(state: &State, problem: &Problem) -> Vec<f64> {
    state.effective_flux(problem)
}

pub fn flux_checks(
    state: &State,
    prev: &State,
    problem: &Problem,
    delta_mask: f64,
) -> Result<FluxReport> {
    let dt = state.t - prev.t;
    if !(dt > 0.0) {
        return Err(Error::Structural(format!(
            "flux checks need two distinct times, got dt = {dt}"
        )));
    }
    let g = &problem.grid;
    let n = g.cells;
    let dy = g.dy();
    let p = &problem.params;
    let big_g = flux_field(state, problem);
    let big_g_prev = flux_field(prev, problem);

    let dg = grid::node_gradient(&big_g, g)?;
    let gradient_residual = (1..n)
        .map(|i| (dg[i - 1] - problem.rho_node[i] * (state.v[i] - prev.v[i]) / dt).abs())
        .fold(0.0, f64::max);

    // d/dy (G_y / rho) with G_y = 0 on the walls
    let mut flux = vec![0.0; n + 1];
    for i in 1..n {
        flux[i] = dg[i - 1] / problem.rho_node[i];
    }
    let inv_j: Vec<f64> = state.jac.iter().map(|j| 1.0 / j).collect();
    let cond = grid::cell_div_flux(&grid::face_average(&inv_j), &state.theta, g, problem.bc)?;
    let strain = grid::cell_gradient(&state.v, g)?;
    let mut evolution_residual: f64 = 0.0;
    let mut masked_cells = 0;
    for c in 0..n {
        if problem.rho[c] < delta_mask {
            masked_cells += 1;
            continue;
        }
        let dgdt = (big_g[c] - big_g_prev[c]) / dt;
        let visc = p.mu * inv_j[c] * (flux[c + 1] - flux[c]) / dy;
        let heat = p.kappa * p.gas_constant / p.c_v * inv_j[c] * cond[c];
        let work = (1.0 + p.gas_constant / p.c_v) * strain[c] * inv_j[c] * big_g[c];
        evolution_residual = evolution_residual.max((dgdt - visc + heat + work).abs());
    }
    Ok(FluxReport {
        gradient_residual,
        boundary_left: if n > 1 { big_g[1] - big_g[0] } else { 0.0 },
        boundary_right: if n > 1 {
            big_g[n - 1] - big_g[n - 2]
        } else {
            0.0
        },
        g_sup: grid::sup_norm(&big_g),
        evolution_residual,
        delta_mask,
        masked_cells,
    })
}

/// `(integrate(J) - L, E(t) - E0)` for the shifted data.
pub fn conservation_check(
    state: &State,
    problem: &Problem,
    constants: &AprioriConstants,
) -> (f64, f64) {
    let energy = total_energy(
        &problem.rho,
        &state.v,
        &state.theta,
        problem.params.c_v,
        &problem.grid,
    );
    (state.mass_error(problem), energy - constants.e0)
}

/// Norms logged without a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub g_l2: f64,
    pub jac_y_l2: f64,
    /// `|sqrt(rho0) theta_t|_2`, from the previous accepted state.
    pub sqrt_rho_theta_t_l2: Option<f64>,
    pub theta_yy_l2: f64,
    pub theta_sup: f64,
    pub min_jac: f64,
}

pub fn diagnostics(state: &State, prev: Option<&State>, problem: &Problem) -> Result<Diagnostics> {
    let g = &problem.grid;
    let big_g = flux_field(state, problem);
    let jy = grid::node_gradient(&state.jac, g)?;
    let jy_sq: f64 = jy.iter().map(|x| g.dy() * x * x).sum();
    let ones = vec![1.0; g.node_count()];
    let theta_yy = grid::cell_div_flux(&ones, &state.theta, g, problem.bc)?;
    let sqrt_rho_theta_t_l2 = match prev {
        Some(p) if state.t > p.t => {
            let dt = state.t - p.t;
            let f: Vec<f64> = (0..g.cells)
                .map(|c| problem.rho[c].sqrt() * (state.theta[c] - p.theta[c]) / dt)
                .collect();
            Some(grid::cell_l2(&f, g))
        }
        _ => None,
    };
    Ok(Diagnostics {
        g_l2: grid::cell_l2(&big_g, g),
        jac_y_l2: jy_sq.sqrt(),
        sqrt_rho_theta_t_l2,
        theta_yy_l2: grid::cell_l2(&theta_yy, g),
        theta_sup: grid::sup_norm(&state.theta),
        min_jac: state.min_jac(),
    })
}

/// Comparison used to grade a value against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `|value| <= threshold`
    AbsAtMost,
    /// `value <= threshold`
    AtMost,
    /// `value >= threshold`
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Graded {
    pub value: f64,
    pub threshold: f64,
    #[serde(rename = "verdict", with = "verdict")]
    pub pass: bool,
    pub rule: Rule,
}

/// `pass` as the string `"pass"` or `"fail"`.
mod verdict {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(pass: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if *pass { "pass" } else { "fail" })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match String::deserialize(d)?.as_str() {
            "pass" => Ok(true),
            "fail" => Ok(false),
            other => Err(D::Error::custom(format!("unknown verdict `{other}`"))),
        }
    }
}

impl Graded {
    pub fn new(value: f64, threshold: f64, rule: Rule) -> Self {
        let pass = match rule {
            Rule::AbsAtMost => value.abs() <= threshold,
            Rule::AtMost => value <= threshold,
            Rule::AtLeast => value >= threshold,
        };
        Self {
            value,
            threshold,
            pass,
            rule,
        }
    }
}

/// Thresholds for every graded item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// `|integrate(J) - L| <= mass_tol * L`.
    pub mass_tol: f64,
    /// `|E(t) - E0| <= energy_tol * E0`; one-sided for Dirichlet ends.
    pub energy_tol: f64,
    /// `sup |KS residual| <= ks_tol * (1 + sup J H B)`.
    pub ks_tol: f64,
    /// Slack on the B bounds.
    pub b_tol: f64,
    /// Relative slack on the H bounds, times `f1(t)`.
    pub h_tol: f64,
    /// Slack on the Jacobian and embedding margins.
    pub margin_tol: f64,
    /// `max |1 + d(eta)/dy - J| <= flow_map_tol`.
    pub flow_map_tol: f64,
    /// Boundary differences of G: `<= boundary_factor * dy^2 * (1 + |G|_inf)`.
    pub boundary_factor: f64,
    /// Mask for the G evolution residual, relative to `max(rho0 + eps)`.
    pub delta_mask: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            mass_tol: 1e-12,
            energy_tol: 5e-2,
            ks_tol: 5e-2,
            b_tol: 1e-12,
            h_tol: 1e-9,
            margin_tol: 0.0,
            flow_map_tol: 1e-10,
            boundary_factor: 50.0,
            delta_mask: 1e-2,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass_tol", self.mass_tol),
            ("energy_tol", self.energy_tol),
            ("ks_tol", self.ks_tol),
            ("b_tol", self.b_tol),
            ("h_tol", self.h_tol),
            ("margin_tol", self.margin_tol),
            ("flow_map_tol", self.flow_map_tol),
            ("boundary_factor", self.boundary_factor),
            ("delta_mask", self.delta_mask),
        ];
        for (name, value) in fields {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and nonnegative, got {value}"),
                });
            }
        }
        Ok(())
    }
}

/// Audit of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub t: f64,
    pub mass_error: Graded,
    pub energy_error: Graded,
    pub ks_residual_sup: Graded,
    pub h: f64,
    pub h_spread: f64,
    pub big_h: f64,
    pub b_lower: Graded,
    pub b_upper: Graded,
    pub h_lower: Graded,
    pub h_upper: Graded,
    pub j_lower_margin: Graded,
    pub j_upper_margin: Graded,
    pub embedding_weighted_margin: Graded,
    pub embedding_sup_margin: Graded,
    pub flow_map_error: Graded,
    pub boundary_flux: Option<Graded>,
    pub flux: Option<FluxReport>,
    pub diagnostics: Diagnostics,
}

impl AuditRecord {
    pub fn graded(&self) -> Vec<(&'static str, &Graded)> {
        let mut out = vec![
            ("mass_error", &self.mass_error),
            ("energy_error", &self.energy_error),
            ("ks_residual_sup", &self.ks_residual_sup),
            ("b_lower", &self.b_lower),
            ("b_upper", &self.b_upper),
            ("h_lower", &self.h_lower),
            ("h_upper", &self.h_upper),
            ("j_lower_margin", &self.j_lower_margin),
            ("j_upper_margin", &self.j_upper_margin),
            ("embedding_weighted_margin", &self.embedding_weighted_margin),
            ("embedding_sup_margin", &self.embedding_sup_margin),
            ("flow_map_error", &self.flow_map_error),
        ];
        if let Some(b) = &self.boundary_flux {
            out.push(("boundary_flux", b));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.graded().iter().all(|(_, g)| g.pass)
    }
}

/// Summary of the constants the bounds were evaluated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSummary {
    pub e0: f64,
    pub rho_bar: f64,
    pub omega0: f64,
    pub m1: f64,
    pub m_lower: f64,
    pub n1: f64,
    pub n2: f64,
    pub n2_alt: f64,
    pub n3: f64,
}

impl From<&AprioriConstants> for ConstantsSummary {
    fn from(c: &AprioriConstants) -> Self {
        Self {
            e0: c.e0,
            rho_bar: c.rho_bar,
            omega0: c.omega0,
            m1: c.m1,
            m_lower: c.m_lower,
            n1: c.n1,
            n2: c.n2,
            n2_alt: c.n2_alt,
            n3: c.n3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub bc: ThetaBc,
    pub config: AuditConfig,
    pub constants: ConstantsSummary,
    pub run: Option<RunMeta>,
    /// Largest mass error over every accepted step of the run.
    pub run_mass_error: Option<Graded>,
    /// Largest flow-map error over every accepted step of the run.
    pub run_flow_map_error: Option<Graded>,
    pub records: Vec<AuditRecord>,
    pub passed: bool,
}

impl AuditReport {
    /// Names and times of the failing graded items.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, g) in [
            ("run_mass_error", &self.run_mass_error),
            ("run_flow_map_error", &self.run_flow_map_error),
        ] {
            if let Some(g) = g {
                if !g.pass {
                    out.push(format!(
                        "{name}: value {:e}, threshold {:e}",
                        g.value, g.threshold
                    ));
                }
            }
        }
        for r in &self.records {
            for (name, g) in r.graded() {
                if !g.pass {
                    out.push(format!(
                        "t = {}: {name}: value {:e}, threshold {:e}",
                        r.t, g.value, g.threshold
                    ));
                }
            }
        }
        out
    }
}

/// Audits one snapshot, with flux checks when the previous accepted state is known.
pub fn audit_state(
    state: &State,
    prev: Option<&State>,
    problem: &Problem,
    constants: &AprioriConstants,
    cfg: &AuditConfig,
) -> Result<AuditRecord> {
    let g = &problem.grid;
    let (mass, energy) = conservation_check(state, problem, constants);
    let ks = ks_fields(state, problem)?;
    let k = problem.params.gas_constant / problem.params.mu;
    let mut ks_sup: f64 = 0.0;
    let mut jhb_sup: f64 = 0.0;
    for c in 0..g.cells {
        let jhb = state.jac[c] * ks.big_h * ks.b[c];
        jhb_sup = jhb_sup.max(jhb);
        ks_sup = ks_sup.max((1.0 + k * problem.rho[c] * state.acc_ks[c] - jhb).abs());
    }
    let b_min = ks.b.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let b_max = ks.b.iter().fold(0.0_f64, |m, x| m.max(*x));
    let f1 = constants.f1(state.t);
    let h_slack = cfg.h_tol * f1;
    let jm = j_bounds_check(state, constants);
    let em = embedding_check(state, problem, constants).margins();
    let energy_rule = if problem.bc.is_pure_neumann() {
        Rule::AbsAtMost
    } else {
        Rule::AtMost
    };
    let flux = match prev {
        Some(p) if state.t > p.t => Some(flux_checks(
            state,
            p,
            problem,
            cfg.delta_mask * problem.rho_bar(),
        )?),
        _ => None,
    };
    let boundary_flux = flux.as_ref().map(|f| {
        let dy = g.dy();
        Graded::new(
            f.boundary_left.abs().max(f.boundary_right.abs()),
            cfg.boundary_factor * dy * dy * (1.0 + f.g_sup),
            Rule::AtMost,
        )
    });
    Ok(AuditRecord {
        t: state.t,
        mass_error: Graded::new(mass, cfg.mass_tol * g.length, Rule::AbsAtMost),
        energy_error: Graded::new(energy, cfg.energy_tol * constants.e0, energy_rule),
        ks_residual_sup: Graded::new(ks_sup, cfg.ks_tol * (1.0 + jhb_sup), Rule::AtMost),
        h: ks.h,
        h_spread: ks.spread,
        big_h: ks.big_h,
        b_lower: Graded::new(b_min - constants.m_lower, -cfg.b_tol, Rule::AtLeast),
        b_upper: Graded::new(constants.m1 - b_max, -cfg.b_tol, Rule::AtLeast),
        h_lower: Graded::new(ks.big_h - 1.0 / constants.m1, -h_slack, Rule::AtLeast),
        h_upper: Graded::new(f1 - ks.big_h, -h_slack, Rule::AtLeast),
        j_lower_margin: Graded::new(jm.lower, -cfg.margin_tol, Rule::AtLeast),
        j_upper_margin: Graded::new(jm.upper, -cfg.margin_tol, Rule::AtLeast),
        embedding_weighted_margin: Graded::new(em.lower, -cfg.margin_tol, Rule::AtLeast),
        embedding_sup_margin: Graded::new(em.upper, -cfg.margin_tol, Rule::AtLeast),
        flow_map_error: Graded::new(
            state.flow_map_error(problem),
            cfg.flow_map_tol,
            Rule::AtMost,
        ),
        boundary_flux,
        flux,
        diagnostics: diagnostics(state, prev, problem)?,
    })
}

pub fn audit_trajectory(
    traj: &Trajectory,
    problem: &Problem,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    cfg.validate()?;
    let constants = problem.constants()?;
    let records = traj
        .snapshots
        .iter()
        .map(|s| audit_state(&s.state, s.prev.as_ref(), problem, &constants, cfg))
        .collect::<Result<Vec<_>>>()?;
    let run_mass_error = Graded::new(
        traj.meta.max_mass_error,
        cfg.mass_tol * problem.grid.length,
        Rule::AbsAtMost,
    );
    let run_flow_map_error =
        Graded::new(traj.meta.max_flow_map_error, cfg.flow_map_tol, Rule::AtMost);
    let passed =
        run_mass_error.pass && run_flow_map_error.pass && records.iter().all(AuditRecord::passed);
    Ok(AuditReport {
        bc: problem.bc,
        config: cfg.clone(),
        constants: ConstantsSummary::from(&constants),
        run: Some(traj.meta.clone()),
        run_mass_error: Some(run_mass_error),
        run_flow_map_error: Some(run_flow_map_error),
        records,
        passed,
    })
}
