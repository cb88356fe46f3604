use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, ExitCode};

use clap::{Parser, Subcommand};

use semgap::cli::{cmd_corpus_dump, cmd_probe, cmd_query, cmd_report, RunManifest, SplitSource, OUT_ENV};
use semgap::corpus::Task;
use semgap::Error;

/// Probe-vs-query benchmark harness
#[derive(Parser, Debug)]
#[command(name = "semgap", version, about)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Run manifest (TOML, or JSON with a .json extension)
    #[arg(long)]
    manifest: PathBuf,

    /// Output directory; overrides $SEMGAP_OUT and the manifest
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for probe dev holdout; overrides the manifest
    #[arg(long)]
    seed: Option<u64>,

    /// Number of equal-width calibration bins
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Corpus utilities
    Corpus {
        #[command(subcommand)]
        action: CorpusCmd,
    },
    /// Train and evaluate a linear probe for one (task, model)
    Probe {
        #[command(flatten)]
        run: RunArgs,
        /// wic, ner or analogy
        #[arg(long)]
        task: Task,
        /// Model id as listed in the manifest
        #[arg(long)]
        model: String,
    },
    /// Score prompt answer-slot logits for one (task, model)
    Query {
        #[command(flatten)]
        run: RunArgs,
        /// wic, ner or analogy
        #[arg(long)]
        task: Task,
        /// Model id as listed in the manifest
        #[arg(long)]
        model: String,
    },
    /// Aggregate every report in the output directory
    Report {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the extraction sidecar (`semgap-extract`) for one job
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        job: String,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusCmd {
    /// Parse a corpus file and print canonical JSON lines
    Dump {
        #[arg(long)]
        task: Task,
        /// Data file (WiC data, CoNLL column file or BATS JSON lines)
        #[arg(long)]
        data: PathBuf,
        /// WiC gold file
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_manifest(run: &RunArgs) -> Result<RunManifest, Error> {
    let mut manifest = RunManifest::load(&run.manifest)?;
    if let Some(out) = run.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)) {
        manifest.output_dir = out;
    }
    if let Some(seed) = run.seed {
        manifest.seed = seed;
    }
    if let Some(bins) = run.bins {
        if bins == 0 {
            return Err(Error::InvalidInput("--bins must be positive".into()));
        }
        manifest.calibration_bins = Some(bins);
    }
    Ok(manifest)
}

fn run(args: Args) -> Result<(), Error> {
    match args.command {
        Cmd::Corpus {
            action: CorpusCmd::Dump { task, data, gold, out },
        } => {
            let source = match gold {
                Some(gold) => SplitSource::Paired { data, gold },
                None => SplitSource::File(data),
            };
            let n = match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    let n = cmd_corpus_dump(task, &source, &mut buf)?;
                    std::fs::write(path, buf)?;
                    n
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    let n = cmd_corpus_dump(task, &source, &mut lock)?;
                    lock.flush()?;
                    n
                }
            };
            eprintln!("{n} records");
        }
        Cmd::Probe { run, task, model } => {
            let manifest = load_manifest(&run)?;
            let outcome = cmd_probe(&manifest, task, &model)?;
            println!(
                "{model} {task} probe: accuracy {:.4}, ECE {:.4}",
                outcome.eval.accuracy, outcome.calibration.ece
            );
            if let Some(ner) = outcome.eval.ner {
                println!("  precision {:.4} recall {:.4} f1 {:.4}", ner.precision, ner.recall, ner.f1);
            }
        }
        Cmd::Query { run, task, model } => {
            let manifest = load_manifest(&run)?;
            let outcome = cmd_query(&manifest, task, &model)?;
            for t in &outcome.summary.templates {
                println!("  {:<16} score {:.4}", t.template_id, t.score);
            }
            println!(
                "{model} {task} query [{}]: accuracy {:.4}, ECE {:.4}",
                outcome.summary.selected, outcome.eval.accuracy, outcome.calibration.ece
            );
        }
        Cmd::Report { run } => {
            let manifest = load_manifest(&run)?;
            for path in cmd_report(&manifest)? {
                println!("{}", path.display());
            }
        }
        Cmd::Extract { manifest, job } => {
            if !manifest.exists() {
                return Err(Error::MissingInput(manifest));
            }
            let status = Command::new("semgap-extract")
                .arg("--manifest")
                .arg(&manifest)
                .arg("--job")
                .arg(&job)
                .status()
                .map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => Error::MissingInput(PathBuf::from("semgap-extract")),
                    _ => Error::Io(e),
                })?;
            if !status.success() {
                return Err(Error::Io(std::io::Error::other(format!(
                    "semgap-extract exited with {status}"
                ))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
