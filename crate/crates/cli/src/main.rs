//! Command-line driver: simulations, barrier certificates, grow-up data
//! construction, mass sweeps, ordering and energy checks. Every run writes
//! its artifacts (CSVs, reports, a gnuplot script) to an output directory
//! together with a manifest of content hashes.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure,
//! 4 failed certificate or check.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use chemomass::comparison::{
    barrier_series, build_growup_data, certify_inner_early, certify_inner_late, certify_outer,
    certify_supersolution, compare_trajectories, context_from_data, growup_constants,
    initial_mass_function, supersolution_bound, supersolution_eps_t0,
};
use chemomass::error::Error;
use chemomass::experiments::{
    boundedness_classifier, energy_holds_fraction, mass_sweep, sweep_warnings, DataFamily,
    SweepConfig,
};
use chemomass::params::ModelParams;
use chemomass::primal::{run_primal, PrimalConfig};
use chemomass::radial::{fmt_g17, RadialGrid, RadialProfile, XiGrid};
use chemomass::trajectory::TrajectoryRecord;
use chemomass::transformed::{run_transformed, MassState};

mod output;
use output::OutputDir;

#[derive(Parser)]
#[command(
    name = "chemomass",
    version,
    about = "Radial chemotaxis laboratory with indirect signal production"
)]
struct Cli {
    /// Flat key=value config file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (env CHEMOMASS_OUT overrides the default "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the primal system and record diagnostics.
    SimulatePrimal(SimArgs),
    /// Integrate the transformed mass-function equation.
    SimulateTransformed(SimArgs),
    /// Pointwise sign certificates for the barrier families.
    VerifyBarrier(BarrierArgs),
    /// Construct concentrated grow-up data and verify its conditions.
    BuildData(BuildArgs),
    /// Classify boundedness across a list of masses.
    SweepMass(SweepArgs),
    /// Evolve randomized ordered pairs under shared coefficients.
    CheckComparison(CompareArgs),
    /// Evaluate the energy inequality along a primal run.
    EnergyCheck(EnergyArgs),
}

#[derive(Args, Clone)]
struct ModelFlags {
    /// Decay rate delta >= 0.
    #[arg(long)]
    delta: Option<f64>,
    /// Relaxation time tau > 0.
    #[arg(long)]
    tau: Option<f64>,
    /// Total cell mass; accepts "Npi" literals such as 4pi or 1.5pi.
    #[arg(long, value_parser = parse_mass)]
    m: Option<f64>,
}

impl ModelFlags {
    fn params(&self) -> Result<ModelParams, Error> {
        let m = self.m.ok_or_else(|| Error::invalid("missing required flag --m"))?;
        ModelParams::new(self.delta.unwrap_or(1.0), self.tau.unwrap_or(1.0), m)
    }
}

#[derive(Args, Clone)]
struct SimArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Initial data family: homogeneous | concentrated | growup.
    #[arg(long, default_value = "concentrated")]
    data: String,
    /// Radial cells (primal run and data construction).
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// xi nodes (transformed solver).
    #[arg(long, default_value_t = 512)]
    nxi: usize,
    /// Grade the xi grid down to this floor (e.g. 1e-100); omit for uniform.
    #[arg(long)]
    xi_min: Option<f64>,
    /// Grade the radial grid down to this face radius; omit for uniform.
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 0.5)]
    record_every: f64,
    /// Abort level for sup u; default 1e6 m/pi.
    #[arg(long)]
    blowup_threshold: Option<f64>,
    /// Bump radius of concentrated u0.
    #[arg(long, default_value_t = 0.05)]
    r_u: f64,
    /// Bump radius of concentrated w0.
    #[arg(long, default_value_t = 0.15)]
    r_w: f64,
    /// Amplitude of concentrated w0 (0 = equilibrium level).
    #[arg(long, default_value_t = 0.0)]
    w_amp: f64,
    /// Barrier margin eta for --data growup.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Times at which profile snapshots are written (comma-separated).
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Vec<f64>,
    /// Classifier window; defaults to t_end/10.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args, Clone)]
struct BarrierArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// inner | outer | sub | super.
    #[arg(long)]
    mode: String,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 50.0)]
    t_max: f64,
    /// Sample counts per axis.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Clone)]
struct BuildArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 768)]
    n: usize,
    #[arg(long, default_value_t = 1e-5)]
    r_min: f64,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Comma-separated masses; "Npi" literals allowed.
    #[arg(long, value_delimiter = ',', value_parser = parse_mass)]
    masses: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 200.0)]
    horizon: f64,
    #[arg(long, default_value_t = 5e-3)]
    dt: f64,
    #[arg(long, default_value_t = 0.5)]
    record_every: f64,
    #[arg(long, default_value_t = 40.0)]
    window: f64,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = 3000)]
    nxi: usize,
    /// Graded xi floor for the sweep rows.
    #[arg(long, default_value_t = 1e-100)]
    xi_min: f64,
    #[arg(long, default_value_t = 0.05)]
    r_u: f64,
    #[arg(long, default_value_t = 0.15)]
    r_w: f64,
    #[arg(long, default_value_t = 0.0)]
    w_amp: f64,
    /// Bisection rounds localizing the verdict transition between the
    /// bracketing sweep masses (0 = off).
    #[arg(long, default_value_t = 0)]
    refine: usize,
}

#[derive(Args, Clone)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, default_value_t = 10)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 257)]
    nxi: usize,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
}

#[derive(Args, Clone)]
struct EnergyArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 50.0)]
    t_end: f64,
    #[arg(long, default_value_t = 0.5)]
    record_every: f64,
    /// Energy exponent p > 1.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Required fraction of recorded steps satisfying the inequality.
    #[arg(long, default_value_t = 0.99)]
    require: f64,
}

/// Parse a mass literal: plain float or "Npi" (e.g. "4pi", "1.5pi").
fn parse_mass(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim();
        let factor: f64 = if head.is_empty() {
            1.0
        } else {
            head.parse().map_err(|_| format!("bad mass literal: {s}"))?
        };
        Ok(factor * PI)
    } else {
        t.parse().map_err(|_| format!("bad mass literal: {s}"))
    }
}

/// Inject `key = value` lines from the config file as trailing `--key value`
/// arguments unless the flag was given explicitly (flags win).
fn merge_config(mut argv: Vec<String>) -> Result<Vec<String>, String> {
    let cfg_pos = argv.iter().position(|a| a == "--config");
    let path = match cfg_pos {
        Some(i) => match argv.get(i + 1) {
            Some(p) => p.clone(),
            None => return Err("--config needs a file path".into()),
        },
        None => return Ok(argv),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {path}: {e}"))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key = value", lineno + 1))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        if !argv.contains(&flag) {
            argv.push(flag);
            argv.push(value.trim().to_string());
        }
    }
    Ok(argv)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };

    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("CHEMOMASS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let result = match &cli.command {
        Command::SimulatePrimal(args) => cmd_simulate_primal(args, &out_dir),
        Command::SimulateTransformed(args) => cmd_simulate_transformed(args, &out_dir),
        Command::VerifyBarrier(args) => cmd_verify_barrier(args, &out_dir),
        Command::BuildData(args) => cmd_build_data(args, &out_dir),
        Command::SweepMass(args) => cmd_sweep_mass(args, &out_dir),
        Command::CheckComparison(args) => cmd_check_comparison(args, &out_dir),
        Command::EnergyCheck(args) => cmd_energy_check(args, &out_dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn build_family(args: &SimArgs) -> DataFamily {
    match args.data.as_str() {
        "homogeneous" => DataFamily::Homogeneous,
        _ => DataFamily::Concentrated { r_u: args.r_u, r_w: args.r_w, w_amp: args.w_amp },
    }
}

fn radial_grid(n: usize, r_min: Option<f64>) -> Result<Arc<RadialGrid>, Error> {
    Ok(Arc::new(match r_min {
        Some(rm) => RadialGrid::graded(n, rm)?,
        None => RadialGrid::uniform(n)?,
    }))
}

/// Initial data for a simulation command, including the grow-up family.
fn initial_data(
    args: &SimArgs,
    p: &ModelParams,
) -> Result<(RadialProfile, RadialProfile, Option<chemomass::comparison::GrowupConstants>), Error>
{
    if args.data == "growup" {
        let consts = growup_constants(p, args.eta)?;
        let grid = radial_grid(args.n, Some(args.r_min.unwrap_or(1e-5)))?;
        let (u0, w0, _) = build_growup_data(&consts, p, &grid)?;
        Ok((u0, w0, Some(consts)))
    } else {
        let grid = radial_grid(args.n, args.r_min)?;
        let (u0, w0) = build_family(args).build(p, &grid)?;
        Ok((u0, w0, None))
    }
}

fn sim_config(args: &SimArgs, p: &ModelParams) -> Result<PrimalConfig, Error> {
    let threshold = args.blowup_threshold.unwrap_or(1e6 * p.m / PI);
    PrimalConfig::new(args.dt, args.t_end, args.record_every, threshold)
}

fn classify_line(traj: &TrajectoryRecord, window: f64) -> String {
    match boundedness_classifier(traj, window) {
        Ok(c) => match (c.verdict, c.growth_rate, c.r2) {
            (chemomass::experiments::Verdict::Growing, Some(rate), Some(r2)) => {
                format!("verdict=Growing alpha_hat={rate:.6} r2={r2:.6}")
            }
            (v, _, _) => format!("verdict={v}"),
        },
        Err(_) => "verdict=Undecided (trajectory too short to classify)".into(),
    }
}

fn cmd_simulate_primal(args: &SimArgs, out_dir: &Path) -> Result<ExitCode, Error> {
    let p = args.model.params()?;
    let (u0, w0, _) = initial_data(args, &p)?;
    let mut cfg = sim_config(args, &p)?;
    cfg.xi_diag = Some(XiGrid::uniform(args.nxi.max(3))?);
    cfg.snapshot_times = args.snapshot_times.clone();
    let run = run_primal(&u0, &w0, &p, &cfg)?;

    let mut out = OutputDir::create(out_dir)?;
    out.write("trajectory.csv", &run.trajectory.to_csv())?;
    out.write("u_final.csv", &run.final_state.u.to_csv("r"))?;
    out.write("w_final.csv", &run.final_state.w.to_csv("r"))?;
    out.write("v_final.csv", &run.final_state.v.to_csv("r"))?;
    for (ts, u_snap, w_snap) in &run.snapshots {
        out.write(&format!("u_t{ts}.csv"), &u_snap.to_csv("r"))?;
        out.write(&format!("w_t{ts}.csv"), &w_snap.to_csv("r"))?;
    }
    if let Some(series) = &run.u_series {
        for &ts in &args.snapshot_times {
            if let Some(k) = series.times.iter().position(|t| (t - ts).abs() < 1e-9) {
                let mut csv = String::from("xi,value\n");
                for (x, v) in series.xi.iter().zip(&series.values[k]) {
                    csv.push_str(&format!("{},{}\n", fmt_g17(*x), fmt_g17(*v)));
                }
                out.write(&format!("U_t{ts}.csv"), &csv)?;
            }
        }
    }
    out.write("plots.gp", &output::trajectory_plot_script("trajectory.csv"))?;
    out.finish()?;

    let window = args.window.unwrap_or(args.t_end / 10.0);
    println!(
        "simulate-primal: t_end={} sup_u_final={:.6e} mass_drift={:.3e} {}{}",
        args.t_end,
        run.trajectory.column("sup_u")?.last().unwrap(),
        {
            let mu = run.trajectory.column("mass_u")?;
            (mu.last().unwrap() - mu[0]) / mu[0]
        },
        classify_line(&run.trajectory, window),
        if run.trajectory.blowup_flagged { " [blow-up threshold hit]" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate_transformed(args: &SimArgs, out_dir: &Path) -> Result<ExitCode, Error> {
    let p = args.model.params()?;
    let (u0, w0, consts) = initial_data(args, &p)?;
    let cfg = sim_config(args, &p)?;
    let xig = match args.xi_min {
        Some(x) => XiGrid::graded(args.nxi, x)?,
        None => XiGrid::uniform(args.nxi)?,
    };
    let ctx = context_from_data(&p, &w0, &xig)?;
    let u0_xi = initial_mass_function(&u0, &p, &xig)?;
    let run = run_transformed(u0_xi, &ctx, &cfg)?;

    let mut out = OutputDir::create(out_dir)?;
    out.write("trajectory.csv", &run.trajectory.to_csv())?;
    let snapshot = |k: usize| {
        let mut csv = String::from("xi,U,I\n");
        for (j, x) in run.series.xi.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_g17(*x),
                fmt_g17(run.series.values[k][j]),
                fmt_g17(run.memory_series.values[k][j])
            ));
        }
        csv
    };
    for &ts in &args.snapshot_times {
        if let Some(k) = run.series.times.iter().position(|t| (t - ts).abs() < 1e-9) {
            out.write(&format!("U_t{ts}.csv"), &snapshot(k))?;
        }
    }
    out.write("state_final.csv", &snapshot(run.series.times.len() - 1))?;

    let mut ordering_note = String::new();
    if let Some(c) = &consts {
        let bar = barrier_series(&c.spec, &run.series.xi, &run.series.times);
        let report = compare_trajectories(&bar, &run.series, p.m)?;
        ordering_note = format!(
            " barrier_ordering={} (max violation {:.3e})",
            if report.passed { "OK" } else { "VIOLATED" },
            report.max_violation
        );
    }
    out.write("plots.gp", &output::trajectory_plot_script("trajectory.csv"))?;
    out.finish()?;

    let window = args.window.unwrap_or(args.t_end / 10.0);
    println!(
        "simulate-transformed: t_end={} U_slope_final={:.6e} {}{}",
        args.t_end,
        run.trajectory.column("U_slope_0")?.last().unwrap(),
        classify_line(&run.trajectory, window),
        ordering_note
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_barrier(args: &BarrierArgs, out_dir: &Path) -> Result<ExitCode, Error> {
    let p = args.model.params()?;
    let ns = args.samples;
    let reports = match args.mode.as_str() {
        "outer" => {
            let c = growup_constants(&p, args.eta)?;
            vec![certify_outer(&c.spec, &p, c.eta0, args.t_max, ns, ns)]
        }
        "inner" => {
            let c = growup_constants(&p, args.eta)?;
            vec![
                certify_inner_late(&c.spec, &p, args.t_max, ns, ns),
                certify_inner_early(&c.spec, &p, c.w0_floor, ns, ns),
            ]
        }
        "sub" => {
            let c = growup_constants(&p, args.eta)?;
            vec![
                certify_outer(&c.spec, &p, c.eta0, args.t_max, ns, ns),
                certify_inner_late(&c.spec, &p, args.t_max, ns, ns),
                certify_inner_early(&c.spec, &p, c.w0_floor, ns, ns),
            ]
        }
        "super" => {
            // Subcritical: run the transformed solver to the activation time,
            // take the recorded max of U, certify the fitted supersolution.
            let grid = Arc::new(RadialGrid::uniform(256)?);
            let (u0, w0) = DataFamily::default_concentrated().build(&p, &grid)?;
            let (_, t0) = supersolution_eps_t0(&p, w0.max())?;
            let xig = XiGrid::uniform(257)?;
            let ctx = context_from_data(&p, &w0, &xig)?;
            let u0_xi = initial_mass_function(&u0, &p, &xig)?;
            let horizon = t0.max(0.5);
            let cfg = PrimalConfig::new(1e-3, horizon, horizon / 64.0, 1e308)?;
            let run = run_transformed(u0_xi, &ctx, &cfg)?;
            let mut umax = vec![0.0f64; xig.len()];
            for vals in &run.series.values {
                for (mx, v) in umax.iter_mut().zip(vals) {
                    *mx = f64::max(*mx, *v);
                }
            }
            let bound = supersolution_bound(&p, w0.max(), &umax, &xig)?;
            println!(
                "supersolution parameters: eps={:.4} t0={:.4} b={:.6e} a={:.6e} C={:.6e}",
                bound.eps, bound.t0, bound.b, bound.a, bound.big_c
            );
            vec![certify_supersolution(&bound, &p, &ctx, args.t_max, ns, ns)]
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown --mode {other}; expected inner|outer|sub|super"
            )))
        }
    };

    let mut out = OutputDir::create(out_dir)?;
    let mut text = String::new();
    let mut all_pass = true;
    for (k, r) in reports.iter().enumerate() {
        text.push_str(&r.summary());
        text.push('\n');
        for (xi, t) in &r.violating_points {
            text.push_str(&format!("  violation at xi={xi:.6e} t={t:.6e}\n"));
        }
        all_pass &= r.passed;
        let tag = r.region.replace(' ', "_").replace(['(', ')'], "");
        out.write(&format!("residuals_{k}_{tag}.csv"), &r.residuals_csv())?;
    }
    out.write("barrier_report.txt", &text)?;
    out.finish()?;

    for r in &reports {
        println!("{}", r.summary());
    }
    if all_pass {
        println!("PASS max residual <= 0");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL: sign certificate violated");
        Ok(ExitCode::from(4))
    }
}

fn cmd_build_data(args: &BuildArgs, out_dir: &Path) -> Result<ExitCode, Error> {
    let p = args.model.params()?;
    let consts = growup_constants(&p, args.eta)?;
    let grid = radial_grid(args.n, Some(args.r_min))?;
    let (u0, w0, report) = build_growup_data(&consts, &p, &grid)?;

    let mut out = OutputDir::create(out_dir)?;
    out.write("u0.csv", &u0.to_csv("r"))?;
    out.write("w0.csv", &w0.to_csv("r"))?;
    let s = &consts.spec;
    let mut text = format!(
        "radius = {}\nxi0 = {}\nb0 = {}\nalpha = {}\nt0 = {}\neps = {}\nc1 = {}\n\
         gamma_u = {}\ngamma_tail = {}\ngamma_w = {}\nw0_floor = {}\neta0 = {}\n",
        fmt_g17(consts.radius),
        fmt_g17(s.xi0),
        fmt_g17(s.b0),
        fmt_g17(s.alpha),
        fmt_g17(s.t0),
        fmt_g17(s.eps),
        fmt_g17(s.c1),
        fmt_g17(consts.gamma_u),
        fmt_g17(consts.gamma_tail),
        fmt_g17(consts.gamma_w),
        fmt_g17(consts.w0_floor),
        fmt_g17(consts.eta0),
    );
    if consts.limit_case {
        text.push_str("limit_case = true  # delta = 0 degenerate-limit recipe\n");
    }
    text.push_str(&format!(
        "\n# grid-verified margins\ninner_avg_holds_until = {}\nordering_margin = {}\n\
         u_tail_margin = {}\nw_inner_margin = {}\nw_tail_margin = {}\n",
        fmt_g17(report.inner_avg_holds_until),
        fmt_g17(report.ordering_margin),
        fmt_g17(report.u_tail_margin),
        fmt_g17(report.w_inner_margin),
        fmt_g17(report.w_tail_margin),
    ));
    out.write("constants.txt", &text)?;
    out.finish()?;

    println!(
        "build-data: mass={} sup_u0={:.4e} sup_w0={:.4e} ordering_margin={:.3e}",
        fmt_g17(p.m),
        u0.max(),
        w0.max(),
        report.ordering_margin
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep_mass(args: &SweepArgs, out_dir: &Path) -> Result<ExitCode, Error> {
    if args.masses.is_empty() {
        return Err(Error::invalid("missing required flag --masses"));
    }
    let family = DataFamily::Concentrated { r_u: args.r_u, r_w: args.r_w, w_amp: args.w_amp };
    let cfg = SweepConfig {
        masses: args.masses.clone(),
        delta: args.delta,
        tau: args.tau,
        family,
        horizon: args.horizon,
        dt: args.dt,
        record_every: args.record_every,
        window: args.window,
        n_r: args.n,
        nxi: args.nxi,
        xi_min: Some(args.xi_min),
        r_min: Some(1e-5),
    };
    let mut rows = mass_sweep(&cfg)?;

    // Optional transition localization: bisect between the largest mass that
    // did not grow and the smallest that did.
    for _ in 0..args.refine {
        let hi = rows
            .iter()
            .find(|r| r.verdict == Some(chemomass::experiments::Verdict::Growing))
            .map(|r| r.m);
        let lo = rows
            .iter()
            .filter(|r| {
                r.verdict.is_some()
                    && r.verdict != Some(chemomass::experiments::Verdict::Growing)
                    && hi.map_or(true, |h| r.m < h)
            })
            .map(|r| r.m)
            .fold(f64::NEG_INFINITY, f64::max);
        let Some(hi) = hi else { break };
        if !lo.is_finite() || hi <= lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let mut probe = cfg.clone();
        probe.masses = vec![mid];
        let mut extra = mass_sweep(&probe)?;
        rows.append(&mut extra);
        rows.sort_by(|a, b| a.m.partial_cmp(&b.m).unwrap());
    }

    let mut out = OutputDir::create(out_dir)?;
    let mut csv = String::from(chemomass::experiments::SweepRow::csv_header());
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv_line());
        csv.push('\n');
    }
    out.write("sweep.csv", &csv)?;
    out.write("plots.gp", &output::sweep_plot_script("sweep.csv", rows.len()))?;
    out.finish()?;

    for row in &rows {
        println!(
            "m/pi={:>8.4} m/m_c={:>8.4} -> {}",
            row.m / PI,
            row.m_over_critical,
            match (&row.verdict, &row.error) {
                (Some(v), _) => format!("{v} (alpha_hat={:.4e}, r2={:.4})", row.alpha_hat, row.r2),
                (None, Some(e)) => format!("Error: {e}"),
                _ => "Undecided".into(),
            }
        );
    }
    for w in sweep_warnings(&rows) {
        println!("warning: {w}");
    }
    println!("sweep-mass: {} rows written", rows.len());
    Ok(ExitCode::SUCCESS)
}

fn rand_seed(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(stream),
    )
}

fn cmd_check_comparison(args: &CompareArgs, out_dir: &Path) -> Result<ExitCode, Error> {
    use rand::Rng;
    let p = args.model.params()?;
    let xig = XiGrid::uniform(args.nxi)?;
    let grid = Arc::new(RadialGrid::uniform(256)?);
    let (_, w0) = DataFamily::default_concentrated().build(&p, &grid)?;
    let ctx = context_from_data(&p, &w0, &xig)?;
    let bv = p.m / (2.0 * PI);

    let mut text = String::new();
    let mut worst = f64::NEG_INFINITY;
    for pair in 0..args.pairs {
        let mut rng = rand_seed(args.seed, pair as u64);
        // Random monotone upper mass function with pinned endpoints.
        let n = xig.len();
        let mut incr: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = incr.iter().sum();
        for v in &mut incr {
            *v *= bv / total;
        }
        let mut upper = vec![0.0];
        for v in &incr {
            upper.push(upper.last().unwrap() + v);
        }
        let theta = rng.gen_range(0.5..0.95);
        let lower: Vec<f64> = upper.iter().map(|v| theta * v).collect();
        let mut lo = MassState::with_boundary(lower, &ctx, theta * bv)?;
        let mut up = MassState::new(upper, &ctx)?;
        let steps = (args.t_end / args.dt).ceil() as usize;
        let mut max_violation = f64::NEG_INFINITY;
        for _ in 0..steps {
            let (l2, u2) = chemomass::transformed::step_pair_shared(&lo, &up, &ctx, args.dt)?;
            lo = l2;
            up = u2;
            let v = lo
                .u
                .iter()
                .zip(&up.u)
                .map(|(l, u)| l - u)
                .fold(f64::NEG_INFINITY, f64::max);
            max_violation = max_violation.max(v);
        }
        worst = worst.max(max_violation);
        text.push_str(&format!("pair {pair}: max violation {max_violation:.6e}\n"));
    }
    let tol = 1e-8 * p.m;
    let passed = worst <= tol;
    text.push_str(&format!("worst = {worst:.6e}, tolerance = {tol:.3e}, passed = {passed}\n"));

    let mut out = OutputDir::create(out_dir)?;
    out.write("comparison_report.txt", &text)?;
    out.finish()?;

    println!(
        "check-comparison: {} pairs, worst ordering violation {:.3e} (tol {:.3e}) -> {}",
        args.pairs,
        worst,
        tol,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn cmd_energy_check(args: &EnergyArgs, out_dir: &Path) -> Result<ExitCode, Error> {
    let p = args.model.params()?;
    let grid = Arc::new(RadialGrid::uniform(args.n)?);
    let (u0, w0) = DataFamily::default_concentrated().build(&p, &grid)?;
    let mut cfg = PrimalConfig::new(args.dt, args.t_end, args.record_every, 1e6 * p.m / PI)?;
    cfg.energy_p = args.p;
    let run = run_primal(&u0, &w0, &p, &cfg)?;
    let frac = energy_holds_fraction(&run.trajectory, 1e-3)?;

    let mut out = OutputDir::create(out_dir)?;
    out.write("trajectory.csv", &run.trajectory.to_csv())?;
    out.finish()?;

    let passed = frac >= args.require;
    println!(
        "energy-check: inequality holds at {:.2}% of recorded steps (required {:.2}%) -> {}",
        100.0 * frac,
        100.0 * args.require,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(4) })
}
