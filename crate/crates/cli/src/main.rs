use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use matra_core::corpus::{list_with_suffix, read_aligned, read_corpus, read_image, write_corpus, write_result};
use matra_core::eval::evaluate;
use matra_core::pipeline::{analyze_line, overlay_pngs, run_batch, train_from_lines, transcribe};
use matra_core::synth::generate_corpus;
use matra_core::{PipelineConfig, RecognitionModel, SynthSpec, TrainConfig};

#[derive(Parser)]
#[command(name = "matra", version, about = "Segment and recognize headline-script text lines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find words, headline, baseline and character boxes in one line image.
    Segment {
        image: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Write edges.png, binary.png and overlay.png here.
        #[arg(long)]
        dump_overlays: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment and recognize one line image.
    Recognize {
        image: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Process every .pgm/.png in a directory into <id>.json results.
    Batch {
        #[arg(long)]
        input: PathBuf,
        /// Recognize as well as segment.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a recognition model from a labelled corpus directory.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        max_templates_per_label: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        lines: usize,
        /// JSON generator settings; omitted fields take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score <id>.json results against <id>.truth.json files; prints JSON.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = PipelineConfig::default().iou)]
        iou: f64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Narrowest word gap, in edge-map columns [default: 2]
    #[arg(long)]
    min_gap_width: Option<usize>,
    /// Headline band as a fraction of the peak row count [default: 0.85]
    #[arg(long)]
    matra_band: Option<f64>,
    /// Column deviation bound of kerned-character scans [default: 3]
    #[arg(long)]
    max_dev: Option<usize>,
    /// Narrowest blank column run between characters [default: 1]
    #[arg(long)]
    min_char_gap: Option<usize>,
    /// Template width window as a fraction of the character width [default: 0.25]
    #[arg(long)]
    width_tol: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let d = PipelineConfig::default();
        let cfg = PipelineConfig {
            min_gap_width: self.min_gap_width.unwrap_or(d.min_gap_width),
            matra_band: self.matra_band.unwrap_or(d.matra_band),
            max_dev: self.max_dev.unwrap_or(d.max_dev),
            min_char_gap: self.min_char_gap.unwrap_or(d.min_char_gap),
            width_tol: self.width_tol.unwrap_or(d.width_tol),
            iou: d.iou,
        };
        if !(cfg.matra_band > 0.0 && cfg.matra_band <= 1.0) {
            bail!("--matra-band must lie in (0, 1]");
        }
        if !(cfg.width_tol >= 0.0 && cfg.width_tol.is_finite()) {
            bail!("--width-tol must be a non-negative number");
        }
        Ok(cfg)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path) -> Result<RecognitionModel> {
    RecognitionModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn process_one(image: &Path, model: Option<&RecognitionModel>, cfg: &PipelineConfig, out: &Path, overlays: Option<&Path>) -> Result<()> {
    let img = read_image(image)?;
    let analysis = analyze_line(&img, cfg)?;
    if let Some(dir) = overlays {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in overlay_pngs(&img, &analysis)? {
            fs::write(dir.join(name), bytes).with_context(|| format!("writing overlay {name}"))?;
        }
    }
    let result = transcribe(&img, &analysis, model, cfg);
    write_result(out, &result)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment { image, config, dump_overlays, out } => {
            process_one(&image, None, &config.resolve()?, &out, dump_overlays.as_deref())
        }
        Command::Recognize { image, model, config, out } => {
            let model = load_model(&model)?;
            process_one(&image, Some(&model), &config.resolve()?, &out, None)
        }
        Command::Batch { input, model, config, out } => {
            let cfg = config.resolve()?;
            let model = model.as_deref().map(load_model).transpose()?;
            let mut files = list_with_suffix(&input, ".pgm")?;
            files.extend(list_with_suffix(&input, ".png")?);
            files.sort();
            let images = files
                .iter()
                .map(|(_, p)| read_image(p))
                .collect::<matra_core::Result<Vec<_>>>()?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut failed = 0;
            for ((id, path), result) in files.iter().zip(run_batch(&images, model.as_ref(), &cfg)) {
                let result = result.with_context(|| format!("processing {}", path.display()))?;
                failed += result.failure.is_some() as usize;
                write_result(&out.join(format!("{id}.json")), &result)?;
            }
            eprintln!("{} lines processed, {failed} without line structure", files.len());
            Ok(())
        }
        Command::Train { corpus, config, max_epochs, max_templates_per_label, out } => {
            let cfg = config.resolve()?;
            let d = TrainConfig::default();
            let train = TrainConfig {
                max_epochs: max_epochs.unwrap_or(d.max_epochs),
                max_templates_per_label: max_templates_per_label.unwrap_or(d.max_templates_per_label),
                ..d
            };
            let lines: Vec<_> = read_corpus(&corpus)?.into_iter().map(|(_, img, t)| (img, t)).collect();
            if lines.is_empty() {
                bail!("no <id>.truth.json files in {}", corpus.display());
            }
            let model = train_from_lines(&lines, &cfg, &train)?;
            model.save(&out)?;
            Ok(())
        }
        Command::Synth { seed, lines, spec, out } => {
            let mut s: SynthSpec = match spec {
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => SynthSpec::default(),
            };
            s.seed = seed;
            write_corpus(&out, &generate_corpus(&s, lines)?)?;
            write_text(
                &out.join("spec.json"),
                &(serde_json::to_string_pretty(&s)? + "\n"),
            )?;
            Ok(())
        }
        Command::Eval { pred, truth, iou } => {
            let (results, truths) = read_aligned(&pred, &truth)?;
            let m = evaluate(&results, &truths, iou)?;
            let mut v = serde_json::to_value(&m)?;
            v["recognition_percent"] = m.recognition_percent().into();
            v["segmentation_percent"] = m.segmentation_percent().into();
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
