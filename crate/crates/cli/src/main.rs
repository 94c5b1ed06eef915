use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use witfam::estimation::{ml_estimate, ml_set_check, ppt_separable, Conclusion};
use witfam::harness::{
    parse_csv_bins, run_experiment, write_report, ExperimentConfig, HistogramReport,
};
use witfam::measurement::Dataset;
use witfam::qcore::{concurrence, quantum_fidelity, DensityMatrix};
use witfam::schemes::{select_next_family, tomography_fallback, SchemeId, Verdict};
use witfam::waveplates::table_ii;
use witfam::Error;

#[derive(Parser)]
#[command(
    name = "witfam",
    version,
    about = "Adaptive two-qubit entanglement detection with witness families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over random or reference states.
    Simulate(Box<SimulateArgs>),
    /// Analyse one measured dataset with a scheme's decision rules.
    Detect {
        dataset: PathBuf,
        #[arg(long, default_value = "C")]
        scheme: SchemeId,
    },
    /// ML reconstruction of an informationally complete dataset.
    Tomography {
        dataset: PathBuf,
        /// State file to compare the estimate against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Print the wave-plate settings of the six families.
    Waveplates,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    num_states: Option<String>,
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    format: Option<String>,
    /// CSV report to compare the histogram against.
    #[arg(long)]
    reference: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) => 3,
                _ => 2,
            })
        }
    }
}

fn read(path: &Path) -> witfam::Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn run(cmd: Command) -> witfam::Result<()> {
    match cmd {
        Command::Simulate(args) => simulate(*args),
        Command::Detect { dataset, scheme } => detect(&Dataset::parse(&read(&dataset)?)?, scheme),
        Command::Tomography { dataset, reference } => {
            let reference = match reference {
                Some(p) => Some(DensityMatrix::parse(&read(&p)?)?),
                None => None,
            };
            tomography(&Dataset::parse(&read(&dataset)?)?, reference.as_ref())
        }
        Command::Waveplates => {
            println!(
                "{:<4} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8}",
                "U", "alpha", "beta", "gamma", "alpha°", "beta°", "gamma°"
            );
            for (name, t) in table_ii() {
                println!(
                    "{:<4} {:>10.6} {:>10.6} {:>10.6} {:>8.2} {:>8.2} {:>8.2}",
                    name,
                    t.alpha,
                    t.beta,
                    t.gamma,
                    t.alpha.to_degrees(),
                    t.beta.to_degrees(),
                    t.gamma.to_degrees()
                );
            }
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> witfam::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::parse(&read(p)?)?,
        None => ExperimentConfig::default(),
    };
    let overrides = [
        ("scheme", &args.scheme),
        ("class", &args.class),
        ("param", &args.param),
        ("num_states", &args.num_states),
        ("pairs", &args.pairs),
        ("seed", &args.seed),
        ("noise", &args.noise),
        ("delta", &args.delta),
        ("out", &args.out),
        ("format", &args.format),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    let reference = match &args.reference {
        Some(p) => Some(parse_csv_bins(&read(p)?)?),
        None => None,
    };
    let report = run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => write_report(&report, cfg.format, path)?,
        None => print!(
            "{}",
            match cfg.format {
                witfam::harness::Format::Csv => report.to_csv(),
                witfam::harness::Format::Json => report.to_json(),
            }
        ),
    }
    eprintln!("mean_n={:.4}", report.mean_n);
    if let Some(bins) = reference {
        let other = HistogramReport {
            bins,
            ..report.clone()
        };
        eprintln!("fidelity={:.6}", report.fidelity(&other));
    }
    Ok(())
}

fn detect(d: &Dataset, scheme: SchemeId) -> witfam::Result<()> {
    let mut entangled = false;
    for r in d.records() {
        let c = r.criterion();
        println!(
            "family={} S={:.6} conclusive={}",
            r.family.label(),
            c.s_value,
            c.conclusive
        );
        entangled |= c.conclusive;
    }
    if entangled {
        println!("verdict={} via=criterion", Verdict::Entangled);
        return Ok(());
    }
    if matches!(scheme, SchemeId::C | SchemeId::Cprime) && !d.is_empty() {
        let c = ml_set_check(d);
        println!(
            "log_l_max={:.6} log_l_sep={:.6} gap={:.6} flagged={}",
            c.log_l_max,
            c.log_l_sep,
            c.gap(),
            c.flagged
        );
        if c.conclusion == Conclusion::Entangled {
            println!("verdict={} via=ml-set-check", Verdict::Entangled);
            return Ok(());
        }
    }
    match tomography_fallback(d) {
        Ok((v, converged)) => {
            let v = if converged { v } else { Verdict::Inconclusive };
            println!("verdict={v} via=tomography converged={converged}");
        }
        Err(Error::NotInformationallyComplete(_)) => {
            println!("verdict={}", Verdict::Inconclusive);
            match select_next_family(scheme, d) {
                Ok(f) => println!("next_family={}", f.label()),
                Err(Error::Exhausted) => println!("next_family=none"),
                Err(e) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn tomography(d: &Dataset, reference: Option<&DensityMatrix>) -> witfam::Result<()> {
    let present = d.preset_indices().len();
    if present < 6 {
        return Err(Error::NotInformationallyComplete(format!(
            "{present} of 6 preset families measured"
        )));
    }
    let est = ml_estimate(d, 1e-3 / d.n_total().max(1) as f64, 20_000);
    print!("{}", est.estimate.to_text());
    print!("{}", est.diagnostics());
    println!("concurrence={:.6}", concurrence(&est.estimate));
    let verdict = if ppt_separable(&est.estimate, 1e-9) {
        Verdict::Separable
    } else {
        Verdict::Entangled
    };
    println!("ppt_verdict={verdict}");
    if let Some(truth) = reference {
        println!("fidelity={:.6}", quantum_fidelity(&est.estimate, truth));
    }
    Ok(())
}
