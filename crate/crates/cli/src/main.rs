use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use saltrack::bench::{
    auc, iou, load_dataset, load_sequence, parse_boxes, run_protocol, success_curve,
    track_sequence, Protocol,
};
use saltrack::config::read_config;
use saltrack::synthetic::{generate, write_sequence, SyntheticSpec};
use saltrack::{BoundingBox, Error, FusionConfig};

#[derive(Parser)]
#[command(
    name = "saltrack",
    version,
    about = "Saliency-weighted correlation filter tracker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one sequence and write per-frame boxes as CSV.
    Track {
        sequence_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the tracker over every sequence of a dataset directory.
    Bench {
        dataset_dir: PathBuf,
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output JSON report; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a box CSV against a ground-truth file.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Write synthetic sequences (a bright square over noise) as a dataset.
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        sequences: u64,
        #[arg(long, default_value_t = 60)]
        frames: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Ope,
    Sre,
    Tre,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Ope => Protocol::Ope,
            ProtocolArg::Sre => Protocol::Sre,
            ProtocolArg::Tre => Protocol::Tre,
        }
    }
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn load_config(path: Option<&Path>) -> Result<FusionConfig, Failure> {
    match path {
        None => Ok(FusionConfig::default()),
        Some(p) => read_config(p).map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| {
            Failure::Data(Error::Io {
                path: p.to_path_buf(),
                source: e,
            })
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn track(dir: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let seq = load_sequence(dir)?;
    let rows = track_sequence(&seq, 0, seq.truth[0], &cfg)?;
    let mut csv = String::from("frame,x,y,w,h,sim,w_t\n");
    for ((b, d), number) in rows.iter().zip(&seq.frame_numbers) {
        let sim = d.sim.map(|s| s.to_string()).unwrap_or_default();
        // written in the same 1-based convention as groundtruth_rect.txt
        writeln!(
            csv,
            "{number},{},{},{},{},{sim},{}",
            b.x + 1.0,
            b.y + 1.0,
            b.w,
            b.h,
            d.w
        )
        .expect("writing to a String");
    }
    emit(out, &csv)
}

fn bench(
    dir: &Path,
    protocol: Protocol,
    config: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let dataset = load_dataset(dir)?;
    let report = run_protocol(protocol, &dataset, &cfg)?;
    eprintln!(
        "{protocol}: AUC {:.4} over {} sequences, {} runs, {:.1} fps",
        report.overall_auc,
        report.per_sequence.len(),
        report.runs,
        report.fps
    );
    emit(out, &(report.to_json() + "\n"))
}

/// Reads boxes from a tracker CSV: a header line, then `frame,x,y,w,h,...`.
fn read_results(path: &Path) -> Result<Vec<BoundingBox>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let body: String = text
        .lines()
        .skip_while(|l| l.trim_start().starts_with("frame"))
        .map(|l| {
            let fields: Vec<&str> = l.split(',').collect();
            fields
                .get(1..5)
                .map(|f| f.join(","))
                .unwrap_or_else(|| l.to_string())
                + "\n"
        })
        .collect();
    parse_boxes(&body, path)
}

fn eval(results: &Path, truth: &Path) -> Result<(), Failure> {
    let boxes = read_results(results)?;
    let text = std::fs::read_to_string(truth).map_err(|e| Error::Io {
        path: truth.to_path_buf(),
        source: e,
    })?;
    let truth = parse_boxes(&text, truth)?;
    if boxes.len() != truth.len() {
        return Err(Failure::Data(Error::CountMismatch {
            frames: truth.len(),
            boxes: boxes.len(),
        }));
    }
    let overlaps: Vec<f64> = boxes.iter().zip(&truth).map(|(b, g)| iou(b, g)).collect();
    let curve = success_curve(&overlaps)?;
    let mut out = format!("auc,{}\nthreshold,rate\n", auc(&curve));
    for (t, r) in curve.thresholds.iter().zip(&curve.rates) {
        writeln!(out, "{t:.2},{r}").expect("writing to a String");
    }
    print!("{out}");
    Ok(())
}

fn synth(dir: &Path, sequences: u64, frames: usize, seed: u64) -> Result<(), Failure> {
    if sequences == 0 || frames == 0 {
        return Err(Failure::Usage(
            "need at least one sequence and one frame".into(),
        ));
    }
    for i in 0..sequences {
        let spec = SyntheticSpec {
            frames,
            seed: seed + i,
            ..SyntheticSpec::default()
        };
        write_sequence(&generate(&spec)?, &dir.join(format!("synth{:02}", i + 1)))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Track {
            sequence_dir,
            config,
            out,
        } => track(&sequence_dir, config.as_deref(), out.as_deref()),
        Command::Bench {
            dataset_dir,
            protocol,
            config,
            out,
        } => bench(
            &dataset_dir,
            protocol.into(),
            config.as_deref(),
            out.as_deref(),
        ),
        Command::Eval { results, truth } => eval(&results, &truth),
        Command::Synth {
            out_dir,
            sequences,
            frames,
            seed,
        } => synth(&out_dir, sequences, frames, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
