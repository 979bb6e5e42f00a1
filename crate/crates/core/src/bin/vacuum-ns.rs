//! Command-line driver.
//!
//! Exit codes: 0 when everything ran and every graded check passed, 2 when a
//! graded check failed, 1 for configuration, input or solver errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vacuum_ns::audit::audit_trajectory;
use vacuum_ns::config::RunConfig;
use vacuum_ns::euler::{flow_map, to_euler};
use vacuum_ns::mms::SineManufactured;
use vacuum_ns::model::Problem;
use vacuum_ns::output;
use vacuum_ns::stepper::{self, Trajectory};
use vacuum_ns::studies::{self, Order, OrderReport};
use vacuum_ns::Result;

/// Optional override of the output directory, below `--out`.
const OUT_ENV: &str = "VACUUM_NS_OUT";

#[derive(Parser)]
#[command(
    name = "vacuum-ns",
    version,
    about = "Lagrangian compressible Navier-Stokes solver with audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the time series.
    Run(Common),
    /// Solve, audit every snapshot and write the audit report.
    Audit(Common),
    /// Vacuum continuation over `study.eps_list`.
    Continuation(Common),
    /// Simultaneous space-time refinement study.
    Refine(Common),
    /// Manufactured-solution convergence study.
    Mms(Common),
    /// Solve and write Euler-coordinate samples of every snapshot.
    EulerExport(Common),
}

/// A study-level convergence requirement, graded on the order between the
/// two finest levels.
#[derive(Serialize)]
struct OrderCheck {
    quantity: String,
    observed: Order,
    min_order: f64,
    verdict: &'static str,
}

impl OrderCheck {
    fn new(report: &OrderReport, min_order: f64) -> Self {
        Self {
            quantity: report.quantity.clone(),
            observed: report.finest(),
            min_order,
            verdict: if report.finest().at_least(min_order) {
                "pass"
            } else {
                "fail"
            },
        }
    }

    fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

#[derive(Serialize)]
struct StudyOutput<'a, T> {
    report: &'a T,
    checks: Vec<OrderCheck>,
    extra_failures: Vec<String>,
    passed: bool,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn load(common: &Common) -> Result<Self> {
        let cfg = RunConfig::from_path(&common.config)?;
        let out = common
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
        Ok(Self {
            cfg,
            out,
            quiet: common.quiet,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn problem(&self) -> Result<Problem> {
        Problem::new(
            &self.cfg.initial_data()?,
            &self.cfg.physical(),
            self.cfg.grid()?,
            self.cfg.bc,
        )
    }

    fn solve(&self, problem: &Problem) -> Result<Trajectory> {
        let t = &self.cfg.time;
        stepper::run(problem, &self.cfg.scheme(), t.t_end, &t.snapshot_times)
    }

    fn write_echo(&self) -> Result<()> {
        output::write_file(&self.path("config.toml"), &self.cfg.echo())
    }
}

fn run_cmd(ctx: &Ctx) -> Result<bool> {
    let problem = ctx.problem()?;
    let traj = ctx.solve(&problem)?;
    ctx.write_echo()?;
    let path = ctx.path(&ctx.cfg.output.timeseries);
    output::write_timeseries(&traj, &problem, &path)?;
    let m = &traj.meta;
    ctx.say(format!(
        "t_end {} after {} steps ({} rejected), min J {:.6e}, max mass error {:.3e}",
        m.t_end, m.accepted_steps, m.rejected_steps, m.min_jac, m.max_mass_error
    ));
    ctx.say(format!("wrote {}", path.display()));
    Ok(true)
}

fn audit_cmd(ctx: &Ctx) -> Result<bool> {
    let problem = ctx.problem()?;
    let traj = ctx.solve(&problem)?;
    let report = audit_trajectory(&traj, &problem, &ctx.cfg.audit)?;
    ctx.write_echo()?;
    output::write_timeseries(&traj, &problem, &ctx.path(&ctx.cfg.output.timeseries))?;
    let path = ctx.path(&ctx.cfg.output.audit);
    output::write_json(&report, &path)?;
    for f in report.failures() {
        ctx.say(format!("FAIL {f}"));
    }
    ctx.say(format!(
        "{} snapshots audited, {}; wrote {}",
        report.records.len(),
        if report.passed {
            "all checks pass"
        } else {
            "checks failed"
        },
        path.display()
    ));
    Ok(report.passed)
}

fn continuation_cmd(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let grid = c.grid()?;
    let report = studies::eps_continuation(
        &c.initial_data()?,
        &c.physical(),
        &grid,
        &c.scheme(),
        c.bc,
        c.time.t_end,
        &c.study.eps_list,
    )?;
    ctx.write_echo()?;
    let path = ctx.path(&c.output.study);
    output::write_json(&report, &path)?;
    for (k, d) in report.differences.iter().enumerate() {
        ctx.say(format!(
            "eps {:e} -> {:e}: sup difference {:.3e}",
            report.eps[k],
            report.eps[k + 1],
            d.max()
        ));
    }
    ctx.say(format!(
        "continuation {}; wrote {}",
        if report.passed { "passes" } else { "fails" },
        path.display()
    ));
    Ok(report.passed)
}

fn refine_cmd(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let sampler = c.sampler()?;
    let report = studies::refinement_study(
        &*sampler,
        &c.physical(),
        &c.scheme(),
        c.bc,
        c.time.t_end,
        c.grid.cells,
        c.study.base_dt,
        c.study.levels,
        c.audit.delta_mask,
    )?;
    let p = c.study.min_order;
    let mut checks: Vec<OrderCheck> = report
        .solution
        .iter()
        .map(|r| OrderCheck::new(r, p))
        .collect();
    if c.bc.is_pure_neumann() {
        checks.push(OrderCheck::new(&report.energy_drift, p));
    }
    checks.push(OrderCheck::new(&report.ks_residual, p));
    checks.push(OrderCheck::new(&report.flux_gradient_residual, p));
    let mut extra = Vec::new();
    if !report.h_spread.strictly_decreasing() && report.h_spread.finest() != Order::Exact {
        extra.push("h_spread does not decrease under refinement".to_owned());
    }
    for (level, a) in report.levels.iter().zip(&report.audits) {
        let limit = c.audit.boundary_factor * (1.0 + a.g_sup);
        let within = a.boundary_flux_scaled <= limit;
        if !within {
            extra.push(format!(
                "N = {}: boundary difference of G is {:.3e} dy^2, above {:.3e} dy^2",
                level.cells, a.boundary_flux_scaled, limit
            ));
        }
    }
    let passed = checks.iter().all(OrderCheck::passed) && extra.is_empty();
    for ch in &checks {
        ctx.say(format!(
            "{:<28} order {:<8} (min {}) {}",
            ch.quantity,
            ch.observed.to_string(),
            ch.min_order,
            ch.verdict
        ));
    }
    for e in &extra {
        ctx.say(format!("FAIL {e}"));
    }
    ctx.write_echo()?;
    let path = ctx.path(&c.output.study);
    output::write_json(
        &StudyOutput {
            report: &report,
            checks,
            extra_failures: extra,
            passed,
        },
        &path,
    )?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(passed)
}

fn mms_cmd(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let solution = SineManufactured::new(c.study.mms_amplitude, c.params.length, c.bc);
    let report = studies::mms_run(
        &solution,
        &c.physical(),
        &c.scheme(),
        c.bc,
        c.time.t_end,
        &c.study.mms,
    )?;
    let checks = vec![
        OrderCheck::new(&report.spatial, c.study.mms_spatial_order),
        OrderCheck::new(&report.temporal, c.study.mms_temporal_order),
    ];
    let passed = checks.iter().all(OrderCheck::passed);
    for ch in &checks {
        ctx.say(format!(
            "{:<8} order {} (min {}) {}",
            ch.quantity, ch.observed, ch.min_order, ch.verdict
        ));
    }
    ctx.write_echo()?;
    let path = ctx.path(&c.output.study);
    output::write_json(
        &StudyOutput {
            report: &report,
            checks,
            extra_failures: Vec::new(),
            passed,
        },
        &path,
    )?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(passed)
}

fn euler_cmd(ctx: &Ctx) -> Result<bool> {
    let problem = ctx.problem()?;
    let traj = ctx.solve(&problem)?;
    let k = ctx.cfg.output.euler_points;
    let mut frames = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let eta = flow_map(&snap.state, &problem.grid)?.eta;
        let (lo, hi) = (eta[0], eta[eta.len() - 1]);
        let xs: Vec<f64> = (0..k)
            .map(|i| {
                if i + 1 == k {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (k - 1) as f64
                }
            })
            .collect();
        frames.push(to_euler(&snap.state, &problem, &xs)?);
    }
    ctx.write_echo()?;
    let path = ctx.path(&ctx.cfg.output.euler);
    output::write_file(&path, &output::euler_csv(&frames))?;
    ctx.say(format!("{} frames; wrote {}", frames.len(), path.display()));
    Ok(true)
}

fn dispatch(cmd: &Command) -> Result<bool> {
    let (common, f): (&Common, fn(&Ctx) -> Result<bool>) = match cmd {
        Command::Run(c) => (c, run_cmd),
        Command::Audit(c) => (c, audit_cmd),
        Command::Continuation(c) => (c, continuation_cmd),
        Command::Refine(c) => (c, refine_cmd),
        Command::Mms(c) => (c, mms_cmd),
        Command::EulerExport(c) => (c, euler_cmd),
    };
    f(&Ctx::load(common)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
