use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ktedge::artifacts::create_dir;
use ktedge::pipeline::{run_experiment, Experiment, Side};
use ktedge::{compare, load_config, ExpError};
use ktedge_core::kt::LabelSource;
use log::info;

#[derive(Parser)]
#[command(name = "ktedge", version, about = "Knowledge transfer between edge classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory. Defaults to $KTEDGE_OUT/<name>, or runs/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict a class-count sweep to one value.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Teacher,
    Student,
}

#[derive(Subcommand)]
enum Command {
    /// Every stage for every class count, then the comparison.
    Run(Common),
    /// Train the teacher.
    Pretrain(Common),
    /// Semi-train the student.
    Semitrain(Common),
    /// Run the online phase in process.
    RunKt {
        #[command(flatten)]
        common: Common,
        /// pseudo or ground_truth; default runs every configured arm.
        #[arg(long)]
        label_source: Option<LabelSource>,
    },
    /// Serve teacher labels over TCP.
    ServeTeacher {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:7070")]
        listen: String,
        /// Exit after this many connections.
        #[arg(long, default_value_t = 1)]
        max_connections: usize,
    },
    /// Run the pseudo-label arm against a remote teacher.
    RunStudent {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:7070")]
        connect: String,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
    },
    /// Score a checkpoint on the online stream.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "student")]
        side: SideArg,
    },
    /// Offsets between an expected and an actual run directory.
    Compare {
        #[arg(long)]
        expected: PathBuf,
        #[arg(long)]
        actual: PathBuf,
        /// Where to write the tables; nothing is written when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the config schema.
    Schema,
}

fn experiment(c: &Common) -> Result<Experiment, ExpError> {
    let mut cfg = load_config(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let out = match &c.out {
        Some(o) => o.clone(),
        None => {
            let root = std::env::var_os("KTEDGE_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
            root.join(&cfg.name)
        }
    };
    create_dir(&out)?;
    info!("output directory {}", out.display());
    Ok(Experiment::new(cfg, out))
}

fn print_report(title: &str, accuracy: f64, macro_f1: f64) {
    println!("{title}: accuracy {accuracy:.4}, macro F1 {macro_f1:.4}");
}

fn run(cli: Cli) -> Result<(), ExpError> {
    match cli.command {
        Command::Run(c) => {
            let mut exp = experiment(&c)?;
            for s in run_experiment(&mut exp, c.k)? {
                println!("k={} teacher accuracy {:.4}", s.k, s.teacher_ol_accuracy);
                for a in s.arms {
                    println!(
                        "k={} {}: {} steps, accuracy {}, stop {}",
                        s.k,
                        a.arm,
                        a.steps,
                        a.accuracy.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
                        a.stop_reason
                    );
                }
            }
        }
        Command::Pretrain(c) => {
            let mut exp = experiment(&c)?;
            for k in exp.class_counts(c.k)? {
                let prep = exp.prepare(k)?;
                let acc = exp.pretrain(&prep)?;
                println!("k={k} teacher accuracy {acc:.4}");
            }
        }
        Command::Semitrain(c) => {
            let mut exp = experiment(&c)?;
            for k in exp.class_counts(c.k)? {
                let prep = exp.prepare(k)?;
                exp.semitrain(&prep)?;
            }
        }
        Command::RunKt { common, label_source } => {
            let mut exp = experiment(&common)?;
            let arms = label_source.map(|a| vec![a]).unwrap_or_else(|| exp.config.arms.clone());
            for k in exp.class_counts(common.k)? {
                let prep = exp.prepare(k)?;
                for &arm in &arms {
                    let s = exp.run_arm(&prep, arm)?;
                    println!("k={k} {}: {} steps, accuracy {:?}", s.arm, s.steps, s.accuracy);
                }
                exp.compare_k(k)?;
            }
        }
        Command::ServeTeacher { common, listen, max_connections } => {
            let mut exp = experiment(&common)?;
            let k = exp.single_k(common.k)?;
            let prep = exp.prepare(k)?;
            let listener = TcpListener::bind(&listen).map_err(|e| ExpError::Runtime(format!("bind {listen}: {e}")))?;
            println!("listening on {}", listener.local_addr()?);
            exp.serve_teacher(&prep, listener, Some(max_connections))?;
        }
        Command::RunStudent { common, connect, timeout_ms } => {
            let mut exp = experiment(&common)?;
            let k = exp.single_k(common.k)?;
            let prep = exp.prepare(k)?;
            let s = exp.run_student(&prep, &connect, Duration::from_millis(timeout_ms))?;
            println!("k={k} {}: {} steps, accuracy {:?}, stop {}", s.arm, s.steps, s.accuracy, s.stop_reason);
            exp.compare_k(k)?;
            if s.stop_reason == "aborted" {
                return Err(ExpError::Runtime(format!("teacher link failed after {} steps", s.steps)));
            }
        }
        Command::Evaluate { common, checkpoint, side } => {
            let mut exp = experiment(&common)?;
            let k = exp.single_k(common.k)?;
            let prep = exp.prepare(k)?;
            let side = match side {
                SideArg::Teacher => Side::Teacher,
                SideArg::Student => Side::Student,
            };
            let rep = exp.evaluate(&prep, &checkpoint, side)?;
            print_report(&checkpoint.display().to_string(), rep.accuracy, rep.macro_avg.f1);
        }
        Command::Compare { expected, actual, out } => {
            let c = compare(&expected, &actual, out.as_deref())?;
            for r in &c.offsets {
                println!("{:<16} expected {:.4} actual {:.4} offset {:+.4}", r.metric, r.expected, r.actual, r.offset);
            }
        }
        Command::Validate { config } => {
            load_config(Path::new(&config))?;
            println!("{}: ok", config.display());
        }
        Command::Schema => print!("{}", ktedge::SCHEMA),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
