//! `mlae`: sweeps, comparisons and checks for maximum-likelihood amplitude
//! estimation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mlae::conventional::QueryConvention;
use mlae::exec::set_worker_threads;
use mlae::experiments::{
    emit_outputs, run_appendix_comparison, run_mc_integration, run_sweep, to_csv, AppendixConfig,
    ErrorCurve, McConfig, OutputFormat, SweepConfig,
};
use mlae::mle::exhaustive_argmax;
use mlae::montecarlo::{
    amplified_ancilla_probability, exact_sum, q_matrix_from_circuit, q_matrix_literal,
    IntegralProblem,
};
use mlae::{
    fisher_information, fisher_oracle, good_probability, make_schedule, ml_estimate, sample_counts,
    Amplitude, BoundReport, Execution, MLConfig, Schedule, ScheduleKind,
};

#[derive(Parser)]
#[command(
    name = "mlae",
    version,
    about = "Maximum-likelihood amplitude estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error curve of one schedule kind over a range of M.
    Sweep(RunArgs),
    /// Conventional phase-estimation AE against EIS and classical sampling.
    CompareConventional {
        #[command(flatten)]
        run: RunArgs,
        /// Query count convention of the conventional curve.
        #[arg(long, value_name = "symmetric|controlled-q")]
        convention: Option<String>,
    },
    /// Statevector Monte Carlo integration of the sine integrand.
    McIntegrate {
        #[command(flatten)]
        run: RunArgs,
        /// Domain qubits.
        #[arg(long)]
        n: Option<usize>,
        /// Upper integration limit.
        #[arg(long)]
        bmax: Option<f64>,
    },
    /// Print Fisher information, query count and error bounds of a schedule.
    Bounds(RunArgs),
    /// Run the oracle-equivalence checks.
    Selftest {
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target probability, as a decimal or `p/q`. Repeatable.
    #[arg(long = "a", value_parser = parse_probability)]
    a: Vec<f64>,
    #[arg(long, value_name = "classical|lis|eis")]
    schedule: Option<String>,
    /// Sweep M = 0..=max-m.
    #[arg(long)]
    max_m: Option<u32>,
    /// Explicit comma-separated M values; overrides --max-m.
    #[arg(long, value_delimiter = ',')]
    m_values: Vec<u32>,
    /// Shots per depth. `compare-conventional` takes a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    shots: Vec<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    percentile: Option<f64>,
    #[arg(long)]
    nq_min: Option<f64>,
    #[arg(long)]
    nq_max: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "csv|csv+svg")]
    format: Option<String>,
    /// Worker threads; 1 runs serially.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|e| format!("{e}"))?;
            let q: f64 = q.trim().parse().map_err(|e| format!("{e}"))?;
            p / q
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(format!("{s} is not in (0, 1)"))
    }
}

const CONFIG_KEYS: &[&str] = &[
    "a",
    "schedule",
    "max-m",
    "m-values",
    "shots",
    "reps",
    "seed",
    "percentile",
    "nq-min",
    "nq-max",
    "out",
    "format",
    "threads",
    "convention",
    "n",
    "bmax",
];

/// Values of a config file, keyed by flag name without the dashes.
#[derive(Default)]
struct ConfigFile {
    values: HashMap<String, Vec<String>>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    fn parse(text: &str) -> Result<Self> {
        let mut values: HashMap<String, Vec<String>> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            let key = key.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", i + 1);
            }
            values
                .entry(key)
                .or_default()
                .extend(value.split(',').map(|v| v.trim().to_string()));
        }
        Ok(Self { values })
    }

    fn scalar<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key).and_then(|v| v.last()) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config `{key}`: {e}")),
            None => Ok(None),
        }
    }

    fn list<T, F>(&self, flag: Vec<T>, key: &str, parse: F) -> Result<Vec<T>>
    where
        F: Fn(&str) -> std::result::Result<T, String>,
    {
        if !flag.is_empty() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|vs| {
                vs.iter()
                    .map(|v| parse(v).map_err(|e| anyhow!("config `{key}`: {e}")))
                    .collect()
            })
            .unwrap_or_else(|| Ok(Vec::new()))
    }
}

fn parse_with<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// Flags merged with the config file; unset values are `None` or empty.
struct Resolved {
    a: Vec<f64>,
    schedule: Option<ScheduleKind>,
    max_m: Option<u32>,
    m_values: Vec<u32>,
    shots: Vec<u64>,
    reps: Option<usize>,
    seed: u64,
    percentile: f64,
    window: (f64, f64),
    out: PathBuf,
    format: OutputFormat,
    execution: Execution,
    file: ConfigFile,
}

impl Resolved {
    fn new(args: RunArgs) -> Result<Self> {
        let file = ConfigFile::load(args.config.as_deref())?;
        let schedule: Option<String> = file.scalar(args.schedule, "schedule")?;
        let schedule = schedule
            .map(|s| match s.parse::<ScheduleKind>()? {
                ScheduleKind::Custom => bail!("--schedule takes classical, lis or eis"),
                k => Ok(k),
            })
            .transpose()?;
        let format: Option<String> = file.scalar(args.format, "format")?;
        let threads = file.scalar(args.threads, "threads")?;
        let execution = configure_workers(threads)?;
        let defaults = mlae::experiments::DEFAULT_FIT_WINDOW;
        Ok(Self {
            a: file.list(args.a, "a", parse_probability)?,
            schedule,
            max_m: file.scalar(args.max_m, "max-m")?,
            m_values: file.list(args.m_values, "m-values", parse_with)?,
            shots: file.list(args.shots, "shots", parse_with)?,
            reps: file.scalar(args.reps, "reps")?,
            seed: file.scalar(args.seed, "seed")?.unwrap_or(0),
            percentile: file.scalar(args.percentile, "percentile")?.unwrap_or(81.0),
            window: (
                file.scalar(args.nq_min, "nq-min")?.unwrap_or(defaults.0),
                file.scalar(args.nq_max, "nq-max")?.unwrap_or(defaults.1),
            ),
            out: file
                .scalar(args.out, "out")?
                .unwrap_or_else(|| PathBuf::from(".")),
            format: format.map(|f| f.parse()).transpose()?.unwrap_or_default(),
            execution,
            file,
        })
    }

    fn targets(&self, default: f64) -> Vec<f64> {
        if self.a.is_empty() {
            vec![default]
        } else {
            self.a.clone()
        }
    }

    fn single_target(&self, default: f64) -> Result<f64> {
        match self.targets(default).as_slice() {
            [a] => Ok(*a),
            _ => bail!("this command takes a single --a"),
        }
    }

    fn m_values(&self, default_max: u32) -> Vec<u32> {
        if self.m_values.is_empty() {
            (0..=self.max_m.unwrap_or(default_max)).collect()
        } else {
            self.m_values.clone()
        }
    }

    fn single_shots(&self, default: u64) -> Result<u64> {
        match self.shots.as_slice() {
            [] => Ok(default),
            [n] => Ok(*n),
            _ => bail!("this command takes a single --shots"),
        }
    }

    fn ml(&self) -> MLConfig {
        MLConfig {
            execution: self.execution,
            ..MLConfig::default()
        }
    }
}

fn configure_workers(threads: Option<usize>) -> Result<Execution> {
    match threads {
        Some(1) => Ok(Execution::Serial),
        Some(n) => {
            set_worker_threads(n)?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

fn write_curve(curve: &ErrorCurve, r: &Resolved, stem: &str) -> Result<()> {
    for path in emit_outputs(curve, &r.out, stem, r.format)? {
        println!("wrote {}", path.display());
    }
    for (kind, a) in curve.series_keys() {
        if let Some(row) = curve.series(&kind, a).next() {
            match row.gamma_fit {
                Some(g) => println!("{kind} a={a}: gamma {g:.4}"),
                None => println!("{kind} a={a}: too few points in the fit window"),
            }
        }
    }
    Ok(())
}

fn sweep(args: RunArgs) -> Result<()> {
    let r = Resolved::new(args)?;
    let config = SweepConfig {
        a_targets: r.targets(1.0 / 48.0),
        kind: r.schedule.unwrap_or(ScheduleKind::Eis),
        m_values: r.m_values(10),
        shots: r.single_shots(100)?,
        repetitions: r.reps.unwrap_or(1000),
        seed: r.seed,
        percentile: r.percentile,
        fit_window: r.window,
        ml: r.ml(),
        execution: r.execution,
    };
    write_curve(&run_sweep(&config)?, &r, "sweep")
}

fn compare_conventional(args: RunArgs, convention: Option<String>) -> Result<()> {
    let r = Resolved::new(args)?;
    let convention: Option<String> = r.file.scalar(convention, "convention")?;
    let convention = match convention.as_deref() {
        None | Some("symmetric") => QueryConvention::Symmetric,
        Some("controlled-q") => QueryConvention::ControlledQ,
        Some(other) => bail!("unknown convention `{other}`"),
    };
    let defaults = AppendixConfig::default();
    let config = AppendixConfig {
        a: r.single_target(defaults.a)?,
        convention,
        eis_shots: if r.shots.is_empty() {
            defaults.eis_shots.clone()
        } else {
            r.shots.clone()
        },
        eis_m: r.m_values(12),
        repetitions: r.reps.unwrap_or(defaults.repetitions),
        seed: r.seed,
        percentile: r.percentile,
        fit_window: r.window,
        ml: r.ml(),
        execution: r.execution,
        ..defaults
    };
    write_curve(
        &run_appendix_comparison(&config)?,
        &r,
        "compare_conventional",
    )
}

fn mc_integrate(args: RunArgs, n: Option<usize>, bmax: Option<f64>) -> Result<()> {
    let r = Resolved::new(args)?;
    let config = McConfig {
        n: r.file.scalar(n, "n")?.unwrap_or(2),
        b_max: r.file.scalar(bmax, "bmax")?.unwrap_or(PI / 4.0),
        kind: r.schedule.unwrap_or(ScheduleKind::Eis),
        m_values: r.m_values(8),
        shots: r.single_shots(100)?,
        repetitions: r.reps.unwrap_or(100),
        seed: r.seed,
        percentile: r.percentile,
        fit_window: r.window,
        ml: r.ml(),
        execution: r.execution,
    };
    write_curve(&run_mc_integration(&config)?, &r, "mc_integrate")
}

fn bounds(args: RunArgs) -> Result<()> {
    let r = Resolved::new(args)?;
    let kind = r.schedule.unwrap_or(ScheduleKind::Eis);
    let max_m = r.max_m.unwrap_or(10);
    let schedule = make_schedule(kind, max_m, r.single_shots(100)?)?;
    for a in r.targets(1.0 / 48.0) {
        let b = BoundReport::new(&schedule, a)?;
        println!("schedule          {kind} M={max_m}");
        println!("a                 {a}");
        println!("n_queries         {}", b.n_queries);
        println!("fisher            {:e}", b.fisher);
        println!("crb_error         {:e}", b.crb_error);
        println!("classical_bound   {:e}", b.classical_bound);
        println!("heisenberg_bound  {:e}", b.heisenberg_bound);
        println!();
    }
    Ok(())
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check_fisher(exec: Execution) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for a in [0.05, 1.0 / 6.0, 0.5, 0.8] {
        for s in [
            make_schedule(ScheduleKind::Eis, 3, 9)?,
            make_schedule(ScheduleKind::Lis, 2, 20)?,
            Schedule::custom([(0, 4), (2, 6), (5, 30)])?,
        ] {
            let closed = fisher_information(&s, a)?;
            worst = worst.max((closed - fisher_oracle(&s, a, exec)?).abs() / closed);
        }
    }
    Ok(Check {
        name: "fisher information closed form vs enumeration",
        pass: worst <= 1e-9,
        detail: format!("relative gap {worst:.2e}"),
    })
}

fn check_amplitude_identity() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        for b in [PI / 8.0, PI / 4.0, PI / 2.0] {
            let problem = IntegralProblem::new(n, b)?;
            let theta = exact_sum(&problem).sqrt().asin();
            for m in 0..=16 {
                let circuit = amplified_ancilla_probability(&problem, m)?;
                worst = worst.max((circuit - good_probability(theta, m)?).abs());
            }
        }
    }
    Ok(Check {
        name: "statevector amplitude identity",
        pass: worst <= 1e-10,
        detail: format!("gap {worst:.2e}"),
    })
}

fn check_operator() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let problem = IntegralProblem::new(n, PI / 4.0)?;
        worst =
            worst.max(q_matrix_from_circuit(&problem)?.max_abs_diff(&q_matrix_literal(&problem)));
    }
    Ok(Check {
        name: "Grover operator: circuit vs literal",
        pass: worst <= 1e-12,
        detail: format!("gap {worst:.2e}"),
    })
}

fn check_exact_sum() -> Result<Check> {
    let s = exact_sum(&IntegralProblem::new(2, PI / 4.0)?);
    #[allow(clippy::excessive_precision)]
    let gap = (s - 0.179635569032311727650489).abs();
    Ok(Check {
        name: "integral sum vs extended-precision value",
        pass: gap <= 1e-12,
        detail: format!("gap {gap:.2e}"),
    })
}

fn check_ml(exec: Execution) -> Result<Check> {
    let schedule = make_schedule(ScheduleKind::Eis, 4, 100)?;
    let data = sample_counts(&schedule, Amplitude::from_probability(1.0 / 6.0)?, 11);
    let config = MLConfig {
        execution: exec,
        ..MLConfig::default()
    };
    let staged = ml_estimate(&data, &schedule, &config)?;
    let points = 1_000_000;
    let (theta, _) = exhaustive_argmax(&data, &schedule, points, config.prob_clamp, exec)?;
    let spacing = (PI / 2.0) / (points - 1) as f64;
    let gap = (staged.theta_hat - theta).abs();
    Ok(Check {
        name: "staged ML search vs exhaustive grid",
        pass: gap <= 2.0 * spacing.max(staged.final_spacing),
        detail: format!("gap {gap:.2e}"),
    })
}

fn check_determinism() -> Result<Check> {
    let config = |execution| SweepConfig {
        m_values: (0..=3).collect(),
        shots: 50,
        repetitions: 20,
        seed: 3,
        execution,
        ..SweepConfig::default()
    };
    let serial = to_csv(&run_sweep(&config(Execution::Serial))?);
    let parallel = to_csv(&run_sweep(&config(Execution::Parallel))?);
    Ok(Check {
        name: "serial and parallel CSV identical",
        pass: serial == parallel,
        detail: format!("{} bytes", serial.len()),
    })
}

fn selftest(threads: Option<usize>) -> Result<bool> {
    let exec = configure_workers(threads)?;
    let checks = [
        check_fisher(exec)?,
        check_amplitude_identity()?,
        check_operator()?,
        check_exact_sum()?,
        check_ml(exec)?,
        check_determinism()?,
    ];
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep(args) => sweep(args)?,
        Command::CompareConventional { run, convention } => compare_conventional(run, convention)?,
        Command::McIntegrate { run, n, bmax } => mc_integrate(run, n, bmax)?,
        Command::Bounds(args) => bounds(args)?,
        Command::Selftest { threads } => return selftest(threads),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<mlae::Error>(), Some(mlae::Error::Usage(_))));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let f = ConfigFile::parse("# comment\na = 1/48\na = 0.5\nmax_m = 4\nshots = 30, 100\n")
            .unwrap();
        assert_eq!(
            f.list(Vec::new(), "a", parse_probability).unwrap(),
            vec![1.0 / 48.0, 0.5]
        );
        assert_eq!(f.scalar::<u32>(None, "max-m").unwrap(), Some(4));
        assert_eq!(f.scalar(Some(7u32), "max-m").unwrap(), Some(7));
        assert_eq!(
            f.list(Vec::new(), "shots", parse_with::<u64>).unwrap(),
            vec![30, 100]
        );
        assert!(ConfigFile::parse("bogus = 1").is_err());
        assert!(ConfigFile::parse("no separator").is_err());
    }

    #[test]
    fn probability_parsing() {
        assert_eq!(parse_probability("1/6").unwrap(), 1.0 / 6.0);
        assert_eq!(parse_probability("0.25").unwrap(), 0.25);
        assert!(parse_probability("1").is_err());
        assert!(parse_probability("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
