//! `seagrid` command line: size, dispatch, sweep and compare the delivery
//! cases, writing CSV/JSON reports plus a manifest of hashes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use seagrid_core::defaults::{self, set_round_trip, Preset};
use seagrid_core::dispatch::{DispatchError, DEFAULT_SEGMENTS};
use seagrid_core::io::{self, IoError};
use seagrid_core::sizing::{sizing_table, SizingRow};
use seagrid_core::sweeps::{SweepError, SweepResult};
use seagrid_core::{
    build_dispatch, compare_cases, find_crossover, optimize_sizing, run_sweep, solve_dispatch,
    validate_inputs, verify_tightness, Axis, CaseId, ComponentCatalog, DayProfile, DispatchProblem,
    Evaluation, Scenario, SizingDecision, SizingError, SizingOptions, SweepSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "seagrid", version, about = "Plan offshore wind delivery by HVDC, hydrogen, or both")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the best build of one case or all cases.
    Size {
        #[command(flatten)]
        common: Common,
        /// HVDC, HYBRID, HP or all.
        #[arg(long, default_value = "all")]
        case: String,
    },
    /// Dispatch one build hour by hour.
    Dispatch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        case: CaseId,
        /// JSON file with a build; the optimal build is used when omitted.
        #[arg(long)]
        decision: Option<PathBuf>,
        /// Also write the dispatch LP in CPLEX LP text form.
        #[arg(long)]
        lp_dump: bool,
    },
    /// Re-size the cases along one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// round_trip_efficiency, conversion_cost_reduction, distance_km or farm_capacity_mw.
        #[arg(long)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "HVDC,HYBRID,HP")]
        cases: Vec<CaseId>,
    },
    /// Best build of every case side by side, with crossovers against HVDC
    /// when an axis grid is given.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Option<Axis>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario TOML; the bundled scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Component catalog TOML; the bundled catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Day profile CSV (hour,cf_farm1..cf_farmN,lmp).
    #[arg(long, conflicts_with = "synthetic")]
    profile: Option<PathBuf>,
    /// Generate a synthetic day from the seed instead of reading one.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// current or future_halved.
    #[arg(long, default_value = "current")]
    preset: Preset,
    /// Override the fuel-cell yield to give this round-trip efficiency.
    #[arg(long)]
    round_trip: Option<f64>,
    /// Sample points of the piecewise-linear loss and pressure models.
    #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
    segments: usize,
    /// Output directory.
    #[arg(long, env = "SEAGRID_OUT_DIR", default_value = "seagrid-out")]
    out: PathBuf,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::invalid(e.to_string())
    }
}

impl From<DispatchError> for CliError {
    fn from(e: DispatchError) -> Self {
        let code = match e {
            DispatchError::Invalid(_) => EXIT_INVALID,
            _ => EXIT_SOLVER,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<SizingError> for CliError {
    fn from(e: SizingError) -> Self {
        match e {
            SizingError::Invalid(v) => CliError::invalid(format!("invalid inputs:\n{v}")),
            SizingError::Dispatch(d) => d.into(),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Sizing(s) => s.into(),
            other => CliError::invalid(other.to_string()),
        }
    }
}

/// Everything a command reads.
#[derive(Debug, Clone, Serialize)]
struct Inputs {
    scenario: Scenario,
    catalog: ComponentCatalog,
    day: DayProfile,
    preset: Preset,
    round_trip: Option<f64>,
    segments: usize,
    seed: u64,
}

impl Inputs {
    fn load(c: &Common) -> Result<Self, CliError> {
        let scenario = match &c.scenario {
            Some(p) => io::load_scenario(p)?,
            None => defaults::scenario(),
        };
        let mut catalog = match &c.catalog {
            Some(p) => io::load_catalog(p)?,
            None => defaults::catalog(),
        };
        c.preset.apply(&mut catalog);
        if let Some(rt) = c.round_trip {
            if !(rt > 0.0 && rt < 1.0) {
                return Err(CliError::invalid(format!("--round-trip {rt} must lie in (0, 1)")));
            }
            set_round_trip(&mut catalog, rt);
        }
        let day = match (&c.profile, c.synthetic) {
            (Some(p), _) => io::load_day(p)?,
            (None, true) => io::generate_synthetic_day(scenario.farm_count, c.seed),
            (None, false) => {
                let day = defaults::day();
                if day.farm_count() != scenario.farm_count {
                    return Err(CliError::invalid(format!(
                        "bundled day has {} farms but the scenario has {}; pass --profile or --synthetic",
                        day.farm_count(),
                        scenario.farm_count
                    )));
                }
                day
            }
        };
        if c.segments < 2 {
            return Err(CliError::invalid("--segments must be at least 2"));
        }
        validate_inputs(&scenario, &catalog, &day).map_err(|v| CliError::invalid(format!("invalid inputs:\n{v}")))?;
        Ok(Inputs {
            scenario,
            catalog,
            day,
            preset: c.preset,
            round_trip: c.round_trip,
            segments: c.segments,
            seed: c.seed,
        })
    }

    fn options(&self) -> SizingOptions {
        SizingOptions { segments: self.segments, ..SizingOptions::default() }
    }

    fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("inputs serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Files produced by a command, written together with a manifest.
#[derive(Default)]
struct Outputs {
    files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    name: &'a str,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    seed: u64,
    files: Vec<ManifestFile<'a>>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.files.insert(name.into(), contents.into());
    }

    fn write(&self, dir: &Path, command: &str, inputs: &Inputs) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::invalid(format!("cannot create {}: {e}", dir.display())))?;
        let manifest = Manifest {
            command,
            config_sha256: inputs.hash(),
            seed: inputs.seed,
            files: self
                .files
                .iter()
                .map(|(name, body)| ManifestFile { name, sha256: hex::encode(Sha256::digest(body.as_bytes())) })
                .collect(),
        };
        let mut all: Vec<(&str, String)> = self.files.iter().map(|(n, b)| (n.as_str(), b.clone())).collect();
        let manifest = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        all.push(("manifest.json", manifest));
        for (name, body) in all {
            let path = dir.join(name);
            std::fs::write(&path, body)
                .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn parse_cases(arg: &str) -> Result<Vec<CaseId>, CliError> {
    if arg.eq_ignore_ascii_case("all") {
        return Ok(CaseId::ALL.to_vec());
    }
    arg.parse::<CaseId>().map(|c| vec![c]).map_err(|e| CliError::invalid(e.to_string()))
}

fn table_for(evals: &[Evaluation], s: &Scenario) -> String {
    let rows: Vec<SizingRow> = evals.iter().map(|e| SizingRow::new(e, s)).collect();
    sizing_table(&rows)
}

#[derive(Serialize)]
struct SizeReport<'a> {
    case: CaseId,
    decision: &'a SizingDecision,
    net_benefit_usd: f64,
    day_revenue_usd: f64,
    lifetime_revenue_usd: f64,
    cost: &'a seagrid_core::CostBreakdown,
    curtailed_mwh_per_day: f64,
}

fn size_reports(evals: &[Evaluation]) -> String {
    let reports: Vec<SizeReport> = evals
        .iter()
        .map(|e| SizeReport {
            case: e.decision.case,
            decision: &e.decision,
            net_benefit_usd: e.net_benefit_usd,
            day_revenue_usd: e.day_revenue_usd,
            lifetime_revenue_usd: e.lifetime_revenue_usd,
            cost: &e.cost,
            curtailed_mwh_per_day: e.dispatch.curtailed_mwh,
        })
        .collect();
    json(&reports)
}

fn sweep_outputs(out: &mut Outputs, r: &SweepResult) {
    let stem = format!("sweep_{}", r.axis);
    out.add(format!("{stem}.csv"), r.to_csv());
    out.add(format!("{stem}.json"), r.to_json() + "\n");
    for &case in &r.cases {
        if let Some(body) = r.case_csv(case) {
            out.add(format!("{stem}_{}.csv", case.as_str().to_ascii_lowercase()), body);
        }
    }
}

/// Run one parsed command, returning what was printed to stdout on success.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Size { common, case } => {
            let inputs = Inputs::load(&common)?;
            let cases = parse_cases(&case)?;
            let evals = compare_cases(&cases, &inputs.scenario, &inputs.catalog, &inputs.day, &inputs.options())?;
            let table = table_for(&evals, &inputs.scenario);
            let mut out = Outputs::default();
            out.add("sizing.json", size_reports(&evals));
            out.add("sizing_table.txt", table.clone());
            out.write(&common.out, "size", &inputs)?;
            Ok(table)
        }
        Command::Dispatch { common, case, decision, lp_dump } => {
            let inputs = Inputs::load(&common)?;
            let (s, c, day) = (&inputs.scenario, &inputs.catalog, &inputs.day);
            let decision = match decision {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
                    let d: SizingDecision = serde_json::from_str(&text)
                        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
                    if d.case != case {
                        return Err(CliError::invalid(format!("decision is for {}, not {case}", d.case)));
                    }
                    d
                }
                None => optimize_sizing(case, s, c, day, &inputs.options())?.best.decision,
            };
            let problem = DispatchProblem::new(s, c, day, decision)?.with_segments(inputs.segments)?;
            let result = solve_dispatch(&problem)?;
            let tightness = verify_tightness(&result, &problem)?;
            let tag = case.as_str().to_ascii_lowercase();
            let mut out = Outputs::default();
            out.add(format!("dispatch_{tag}.csv"), io::hourly_csv(&result));
            out.add(format!("dispatch_{tag}.json"), json(&result));
            out.add(format!("tightness_{tag}.json"), json(&tightness));
            if lp_dump {
                out.add(format!("dispatch_{tag}.lp"), build_dispatch(&problem)?.to_lp_format());
            }
            out.write(&common.out, "dispatch", &inputs)?;
            Ok(format!(
                "{case}: day revenue {:.2} USD, delivered {:.1} MWh, curtailed {:.1} MWh, relaxation {}\n",
                result.day_revenue_usd,
                result.delivered_mwh(),
                result.curtailed_mwh,
                if tightness.is_tight() { "tight" } else { "NOT tight" }
            ))
        }
        Command::Sweep { common, axis, values, cases } => {
            let inputs = Inputs::load(&common)?;
            let spec = SweepSpec { axis, values, cases, options: inputs.options() };
            let r = run_sweep(&spec, &inputs.scenario, &inputs.catalog, &inputs.day)?;
            let mut out = Outputs::default();
            sweep_outputs(&mut out, &r);
            out.write(&common.out, "sweep", &inputs)?;
            Ok(r.to_csv())
        }
        Command::Compare { common, axis, values } => {
            let inputs = Inputs::load(&common)?;
            let (s, c, day) = (&inputs.scenario, &inputs.catalog, &inputs.day);
            let opts = inputs.options();
            let evals = compare_cases(&CaseId::ALL, s, c, day, &opts)?;
            let mut printed = table_for(&evals, s);
            let mut out = Outputs::default();
            out.add("compare.json", size_reports(&evals));
            out.add("compare_table.txt", printed.clone());
            if let Some(axis) = axis {
                if values.len() < 2 {
                    return Err(CliError::invalid("--values needs at least two points for a crossover search"));
                }
                let mut grid = values.clone();
                grid.sort_by(f64::total_cmp);
                let reports = [CaseId::Hybrid, CaseId::Hp]
                    .into_iter()
                    .map(|h| find_crossover(h, CaseId::Hvdc, axis, &grid, s, c, day, &opts, 0.01))
                    .collect::<Result<Vec<_>, _>>()?;
                for r in &reports {
                    let line = match (r.crossings.first(), r.extrapolated) {
                        (Some(x), _) => format!("{} vs HVDC: crosses at {} = {:.4}\n", r.first, axis, x.midpoint()),
                        (None, Some(x)) => {
                            format!("{} vs HVDC: no crossing on grid; linear fit crosses at {:.4}\n", r.first, x)
                        }
                        (None, None) => format!("{} vs HVDC: no crossing\n", r.first),
                    };
                    printed.push_str(&line);
                }
                out.add(format!("crossover_{axis}.json"), json(&reports));
            }
            out.write(&common.out, "compare", &inputs)?;
            Ok(printed)
        }
    }
}

/// Parse `argv`, run, print, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(stdout) => {
            print!("{stdout}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
