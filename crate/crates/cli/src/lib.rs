//! Command-line front end. Every subcommand reads its inputs, calls the library
//! and writes a document; exit codes are 0 (success), 1 (infeasible point or
//! violated condition) and 2 (bad input).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tinopt::format::{self, ChannelFile, RegionDoc};
use tinopt::gap::{self, FiniteSnrChannel, GAP_CSV_HEADER};
use tinopt::netsim::{self, Shadowing, SimConfig, Terrain};
use tinopt::{
    check_tin_condition, enumerate_cycles, general_tin_region, point_in_tin_region,
    polyhedral_region, tin_gdof, ChannelMatrix, CyclicSequence, GdofTuple, TinError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Tolerance of the GDoF-limit convergence verdict.
const LIMIT_TOL: f64 = 0.02;
/// Slack, in bits, allowed when checking a gap certificate.
const GAP_SLACK: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "tinopt", version, about = "GDoF optimality of treating interference as noise")]
pub struct Cli {
    /// Master seed for simulations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per estimate.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the document here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-user check of the TIN optimality condition.
    CheckCondition { channel: PathBuf },
    /// Polyhedral TIN region; the input may also be a region document, which is re-emitted canonically.
    Region(RegionArgs),
    /// Decide whether a GDoF tuple is achievable by TIN with power control.
    Membership(PointArgs),
    /// Power exponents achieving a GDoF tuple and the GDoF they actually give.
    PowerAlloc(PointArgs),
    /// Finite-SNR constant-gap certificate for a GDoF tuple.
    GapCheck(GapArgs),
    /// Convergence of the normalized cyclic bound quantities.
    GdofLimits(LimitArgs),
    /// Probability that a random layout satisfies the condition.
    Simulate(SimArgs),
    /// `simulate` over a grid of user counts and coverage radii.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    pub input: PathBuf,
    /// Silent users, 1-based, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub silent_set: Vec<usize>,
    /// Drop implied inequalities.
    #[arg(long)]
    pub minimize: bool,
    /// The union over all silent sets.
    #[arg(long, conflicts_with = "silent_set")]
    pub union: bool,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    pub channel: PathBuf,
    /// GDoF tuple, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub point: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Nominal power; defaults to `nominal_P` of the channel file.
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long, default_value = "instance")]
    pub instance_id: String,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    pub channel: PathBuf,
    /// Cyclic sequence, 1-based; every cycle of the network when absent.
    #[arg(long, value_delimiter = ',')]
    pub cycle: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1e2, 1e4, 1e8])]
    pub powers: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    #[arg(long, default_value_t = 1000.0)]
    pub cell_radius: f64,
    /// Shadowing model: off, erceg or lognormal:<sigma_db>.
    #[arg(long, default_value = "erceg")]
    pub shadowing: Shadowing,
    #[arg(long, default_value = "B")]
    pub terrain: Terrain,
    /// Median SNR at the coverage boundary, in dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub boundary_snr: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 10)]
    pub users: usize,
    #[arg(long, default_value_t = 100.0)]
    pub radius: f64,
    #[command(flatten)]
    pub net: NetArgs,
    /// Emit the layout of this trial instead of an estimate.
    #[arg(long)]
    pub dump_instance: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2, 5, 10, 15])]
    pub users: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [50.0, 100.0, 200.0])]
    pub radii: Vec<f64>,
    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Violation(String),
}

impl From<TinError> for Failure {
    fn from(e: TinError) -> Self {
        match e {
            TinError::ConditionViolated(users) => {
                let users: Vec<usize> = users.iter().map(|u| u + 1).collect();
                Failure::Violation(format!("the TIN optimality condition fails for users {users:?}"))
            }
            TinError::InfeasiblePoint | TinError::EmptyRegion => Failure::Violation(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

/// A finished command: the document and whether the result is a violation.
struct Outcome {
    body: String,
    violation: bool,
    note: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            violation: false,
            note: None,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            code
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let outcome = match dispatch(cli) {
        Ok(o) => o,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_INPUT;
        }
        Err(Failure::Violation(msg)) => {
            let _ = writeln!(err, "{msg}");
            return EXIT_VIOLATION;
        }
    };
    let written = match &cli.output {
        Some(path) => fs::write(path, &outcome.body)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => out.write_all(outcome.body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_INPUT;
    }
    if let Some(note) = &outcome.note {
        let _ = writeln!(err, "{note}");
    }
    if outcome.violation {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::CheckCondition { channel } => check_condition(channel),
        Command::Region(a) => region(a, cli.format),
        Command::Membership(a) => membership(a),
        Command::PowerAlloc(a) => power_alloc(a),
        Command::GapCheck(a) => gap_check(a, cli.format),
        Command::GdofLimits(a) => gdof_limits(a),
        Command::Simulate(a) => simulate(a, cli),
        Command::Sweep(a) => sweep(a, cli),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn load_channel(path: &Path) -> Result<(ChannelMatrix, Option<f64>), Failure> {
    let file = ChannelFile::parse(&read(path)?).map_err(|e| parse_error(path, e))?;
    let ch = file.channel().map_err(|e| parse_error(path, e))?;
    Ok((ch, file.nominal_p))
}

fn zero_based(users: &[usize], k: usize) -> Result<Vec<usize>, Failure> {
    users
        .iter()
        .map(|&u| {
            if u == 0 || u > k {
                Err(Failure::Input(format!("user {u} out of range 1..={k}")))
            } else {
                Ok(u - 1)
            }
        })
        .collect()
}

fn point(ch: &ChannelMatrix, values: &[f64]) -> Result<GdofTuple, Failure> {
    ch.check_len(values.len())?;
    Ok(GdofTuple::new(values.to_vec())?)
}

fn check_condition(path: &Path) -> Result<Outcome, Failure> {
    let (ch, _) = load_channel(path)?;
    let report = check_tin_condition(&ch);
    let failing: Vec<usize> = report.users.iter().filter(|u| !u.passes).map(|u| u.user + 1).collect();
    Ok(Outcome {
        body: format::to_pretty(&format::condition_json(&report)),
        violation: !report.holds,
        note: (!failing.is_empty()).then(|| format!("condition fails for users {failing:?}")),
    })
}

fn region(a: &RegionArgs, fmt: Option<Format>) -> Result<Outcome, Failure> {
    let text = read(&a.input)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| parse_error(&a.input, e))?;
    if a.union {
        let (ch, _) = load_channel(&a.input)?;
        let union = general_tin_region(&ch)?;
        return Ok(Outcome::ok(format::to_pretty(&format::union_json(&union))));
    }
    let poly = if value.get("alpha").is_some() {
        let (ch, _) = load_channel(&a.input)?;
        let silent = zero_based(&a.silent_set, ch.users())?;
        polyhedral_region(&ch, &silent)?
    } else {
        if !a.silent_set.is_empty() {
            return Err(Failure::Input("--silent-set needs a channel file".into()));
        }
        RegionDoc::parse(&text)
            .and_then(|d| d.to_polyhedron())
            .map_err(|e| parse_error(&a.input, e))?
    };
    let poly = if a.minimize { poly.minimized() } else { poly };
    let body = match fmt.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = RegionDoc::from_polyhedron(&poly).to_json();
            s.push('\n');
            s
        }
        Format::Csv => format::vertices_csv(poly.users(), &poly.vertices()?),
    };
    Ok(Outcome::ok(body))
}

fn membership(a: &PointArgs) -> Result<Outcome, Failure> {
    let (ch, _) = load_channel(&a.channel)?;
    let m = point_in_tin_region(&ch, &point(&ch, &a.point)?)?;
    let silent: Vec<String> = m.silent.iter().map(|u| (u + 1).to_string()).collect();
    let note = if m.is_member() {
        format!("IN via silent set {{{}}}", silent.join(","))
    } else {
        format!("OUT of the TIN region (decided with silent set {{{}}})", silent.join(","))
    };
    Ok(Outcome {
        body: format::to_pretty(&format::membership_json(&m)),
        violation: !m.is_member(),
        note: Some(note),
    })
}

fn power_alloc(a: &PointArgs) -> Result<Outcome, Failure> {
    let (ch, _) = load_channel(&a.channel)?;
    let d = point(&ch, &a.point)?;
    let m = point_in_tin_region(&ch, &d)?;
    let mut doc = format::membership_json(&m);
    let achieved = match m.certificate.power() {
        Some(r) => {
            let g = tin_gdof(&ch, r)?;
            json!(g.as_slice().iter().map(|&x| format::round_sig(x)).collect::<Vec<_>>())
        }
        None => Value::Null,
    };
    doc["achieved_gdof"] = achieved;
    Ok(Outcome {
        body: format::to_pretty(&doc),
        violation: !m.is_member(),
        note: None,
    })
}

fn gap_check(a: &GapArgs, fmt: Option<Format>) -> Result<Outcome, Failure> {
    let (ch, nominal) = load_channel(&a.point.channel)?;
    let p = a
        .power
        .or(nominal)
        .ok_or_else(|| Failure::Input("no nominal power: pass --power or set nominal_P".into()))?;
    let d = point(&ch, &a.point.point)?;
    let report = gap::gap_certificate(&FiniteSnrChannel::new(ch, p)?, &d)?;
    let holds = report.holds(GAP_SLACK);
    let body = match fmt.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from(GAP_CSV_HEADER);
            s.push('\n');
            for row in report.csv_rows(&a.instance_id) {
                s.push_str(&row);
                s.push('\n');
            }
            s
        }
        Format::Json => format::to_pretty(&format::gap_report_json(&report, GAP_SLACK)),
    };
    Ok(Outcome {
        body,
        violation: !holds,
        note: (!holds).then(|| "gap certificate does not hold".to_string()),
    })
}

fn gdof_limits(a: &LimitArgs) -> Result<Outcome, Failure> {
    let (ch, _) = load_channel(&a.channel)?;
    let cycles = if a.cycle.is_empty() {
        let users: Vec<usize> = (0..ch.users()).collect();
        enumerate_cycles(&users)
    } else {
        vec![CyclicSequence::new(zero_based(&a.cycle, ch.users())?)?]
    };
    let mut reports = Vec::with_capacity(cycles.len());
    let mut all = true;
    for c in &cycles {
        let r = gap::gdof_limit_checks(&ch, c, &a.powers)?;
        all &= r.converged(LIMIT_TOL);
        reports.push(format::limit_report_json(&r, LIMIT_TOL));
    }
    let doc = json!({ "converged": all, "cycles": reports });
    Ok(Outcome {
        body: format::to_pretty(&doc),
        violation: !all,
        note: (!all).then(|| "not every cycle converges monotonically within tolerance".to_string()),
    })
}

fn sim_config(cli: &Cli, net: &NetArgs, k: usize, radius: f64) -> Result<SimConfig, Failure> {
    let base = SimConfig::default().with_terrain(net.terrain);
    let cfg = SimConfig {
        k,
        coverage_radius_m: radius,
        cell_radius_m: net.cell_radius,
        shadowing: net.shadowing,
        boundary_snr_db: net.boundary_snr,
        trials: cli.trials.unwrap_or(base.trials),
        master_seed: cli.seed.unwrap_or(base.master_seed),
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: &SimArgs, cli: &Cli) -> Result<Outcome, Failure> {
    let cfg = sim_config(cli, &a.net, a.users, a.radius)?;
    if let Some(trial) = a.dump_instance {
        let inst = netsim::sample_network(&cfg, trial)?;
        return Ok(Outcome::ok(format::to_pretty(&format::instance_json(&inst))));
    }
    let est = netsim::condition_probability(&cfg)?;
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => format::to_pretty(&format::estimate_json(&est)),
        Format::Csv => netsim::sweep_csv(std::slice::from_ref(&est)),
    };
    Ok(Outcome::ok(body))
}

fn sweep(a: &SweepArgs, cli: &Cli) -> Result<Outcome, Failure> {
    let first_k = a.users.first().copied().unwrap_or(1);
    let first_r = a.radii.first().copied().unwrap_or(1.0);
    let cfg = sim_config(cli, &a.net, first_k, first_r)?;
    let est = netsim::sweep(&cfg, &a.users, &a.radii)?;
    let body = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => netsim::sweep_csv(&est),
        Format::Json => format::to_pretty(&Value::from(
            est.iter().map(format::estimate_json).collect::<Vec<_>>(),
        )),
    };
    Ok(Outcome::ok(body))
}
