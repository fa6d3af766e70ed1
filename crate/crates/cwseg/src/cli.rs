//! Command-line pipeline: gray, sample, train, segment, eval.
//!
//! Every subcommand is deterministic given its inputs and seed. Exit codes:
//! 0 success, 2 input/format error, 3 data-capacity error, 4 training
//! non-convergence (the best model is still written).
//!
//! A `--config` file holds `key=value` lines (kebab-case keys matching the
//! flag names); explicit flags override config values.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{evaluate, segment_image, Classifier, Split};
use crate::gabor::{segment_gabor, GaborSpec, GaborStatus};
use crate::image::{mask_to_image, read_image, read_mask, rgb_to_gray, write_image, RasterImage};
use crate::mlp::{init_weights, load_model, save_model, train_lm, LayerSpec, TrainConfig};
use crate::nn::NNModel;
use crate::sampler::{sample_dataset, Dataset, SourceImage};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "cwseg",
    version,
    about = "Context-window pixel classification for image segmentation"
)]
pub struct Cli {
    /// Optional key=value defaults file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Convert a color PPM to a gray PGM.
    Gray {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a labeled context-window dataset from images and masks.
    Sample {
        /// Comma-separated image paths (P5 or P6), paired with --masks.
        #[arg(long, value_delimiter = ',')]
        images: Vec<PathBuf>,
        /// Comma-separated mask paths (P5, values 0/255).
        #[arg(long, value_delimiter = ',')]
        masks: Vec<PathBuf>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        total: Option<usize>,
        #[arg(long)]
        band: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the network on a dataset with Levenberg-Marquardt.
    Train {
        dataset: PathBuf,
        /// Layer sizes as `in,h1,h2,out`; defaults to dataset-width,18,10,2.
        #[arg(long)]
        layers: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        mse_goal: Option<f64>,
        /// Model output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional epoch,mse,lambda,accepted log path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Segment a whole image; writes <out>_mask.pgm and <out>_gray.pgm.
    Segment {
        image: PathBuf,
        /// Classifier kind: mlp, nn or gabor.
        #[arg(long)]
        kind: Option<String>,
        /// Model file (mlp) or dataset file (nn); ignored for gabor.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        window: Option<usize>,
        /// Clustering seed for gabor.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path prefix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print train/test efficiency reports for a classifier on a dataset.
    Eval {
        /// Model file (mlp) or dataset file used as the model (nn).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Classifier kind: mlp or nn.
        #[arg(long)]
        kind: Option<String>,
    },
}

/// Parses the CLI and runs it, mapping errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => EXIT_CAPACITY,
        _ => EXIT_INPUT,
    }
}

type Config = BTreeMap<String, String>;

fn load_config(path: Option<&Path>) -> Result<Config> {
    let mut map = Config::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::format(
                Some(path.into()),
                format!("line {}: expected key=value, got {line:?}", lineno + 1),
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn cfg_get<T: FromStr>(cfg: &Config, key: &str) -> Result<Option<T>> {
    match cfg.get(key) {
        None => Ok(None),
        Some(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::invalid(format!("config value {key}={s:?} cannot be parsed"))),
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(format!("missing required {what}")))
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("{t:?} is not a non-negative integer")))
        })
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("{t:?} is not a number")))
        })
        .collect()
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

fn layer_spec_from(text: &str) -> Result<LayerSpec> {
    let sizes = parse_usize_list(text)?;
    if sizes.len() != 4 {
        return Err(Error::invalid(format!(
            "--layers needs 4 comma-separated sizes, got {}",
            sizes.len()
        )));
    }
    LayerSpec::new([sizes[0], sizes[1], sizes[2], sizes[3]])
}

fn gray_of(image: &RasterImage) -> Result<RasterImage> {
    if image.channels() == 3 {
        rgb_to_gray(image)
    } else {
        Ok(image.clone())
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Gray { input, out } => {
            let out = require(out.or(cfg_get(&cfg, "out")?), "--out path")?;
            let image = read_image(&input)?;
            write_image(&rgb_to_gray(&image)?, &out)?;
            println!("gray: {} -> {}", input.display(), out.display());
            Ok(EXIT_OK)
        }

        Command::Sample {
            images,
            masks,
            window,
            total,
            band,
            seed,
            out,
        } => {
            let images = if images.is_empty() {
                cfg_get::<String>(&cfg, "images")?
                    .map(|s| s.split(',').map(PathBuf::from).collect())
                    .unwrap_or_default()
            } else {
                images
            };
            let masks = if masks.is_empty() {
                cfg_get::<String>(&cfg, "masks")?
                    .map(|s| s.split(',').map(PathBuf::from).collect())
                    .unwrap_or_default()
            } else {
                masks
            };
            if images.is_empty() || images.len() != masks.len() {
                return Err(Error::invalid(
                    "--images and --masks need the same non-zero number of paths",
                ));
            }
            let window = window.or(cfg_get(&cfg, "window")?).unwrap_or(9);
            let total = total.or(cfg_get(&cfg, "total")?).unwrap_or(1000);
            let band = band.or(cfg_get(&cfg, "band")?).unwrap_or(4);
            let seed = seed.or(cfg_get(&cfg, "seed")?).unwrap_or(1);
            let out = require(out.or(cfg_get(&cfg, "out")?), "--out path")?;

            let mut sources = Vec::with_capacity(images.len());
            for (img_path, mask_path) in images.iter().zip(&masks) {
                sources.push(SourceImage {
                    image: read_image(img_path)?,
                    mask: read_mask(mask_path)?,
                    id: file_stem(img_path),
                });
            }
            let dataset = sample_dataset(&sources, window, total, band, seed)?;
            dataset.save(&out)?;
            println!(
                "sampled {} train + {} test windows -> {}",
                dataset.train.len(),
                dataset.test.len(),
                out.display()
            );
            Ok(EXIT_OK)
        }

        Command::Train {
            dataset,
            layers,
            seed,
            max_epochs,
            mse_goal,
            out,
            log,
        } => {
            let ds = Dataset::load(&dataset)?;
            let layers = layers.or(cfg_get(&cfg, "layers")?);
            let spec = match layers {
                Some(text) => layer_spec_from(&text)?,
                None => LayerSpec::with_input(ds.feature_width())?,
            };
            let mut config = TrainConfig {
                seed: seed.or(cfg_get(&cfg, "seed")?).unwrap_or(1),
                ..TrainConfig::default()
            };
            if let Some(v) = max_epochs.or(cfg_get(&cfg, "max-epochs")?) {
                config.max_epochs = v;
            }
            if let Some(v) = mse_goal.or(cfg_get(&cfg, "mse-goal")?) {
                config.mse_goal = v;
            }
            let out = require(out.or(cfg_get(&cfg, "out")?), "--out model path")?;
            let log = log.or(cfg_get(&cfg, "log")?);

            let model = init_weights(spec, config.seed);
            let outcome = train_lm(model, &ds.train, &config)?;
            save_model(&outcome.model, &out)?;
            if let Some(log_path) = &log {
                fs::write(log_path, outcome.log_text()).map_err(|e| Error::io(log_path, e))?;
            }
            println!(
                "trained: status={:?} accepted_epochs={} final_mse={:.9e} -> {}",
                outcome.status,
                outcome.history.len() - 1,
                outcome.final_mse(),
                out.display()
            );
            if outcome.status.is_failure() {
                eprintln!("error: training did not converge (lambda overflow); best model written");
                return Ok(EXIT_NO_CONVERGENCE);
            }
            Ok(EXIT_OK)
        }

        Command::Segment {
            image,
            kind,
            model,
            window,
            seed,
            out,
        } => {
            let kind = kind
                .or(cfg_get(&cfg, "kind")?)
                .unwrap_or_else(|| "mlp".into());
            let window = window.or(cfg_get(&cfg, "window")?).unwrap_or(9);
            let seed = seed.or(cfg_get(&cfg, "seed")?).unwrap_or(1);
            let out = require(out.or(cfg_get(&cfg, "out")?), "--out prefix")?;
            let model = model.or(cfg_get(&cfg, "model")?);
            let img = read_image(&image)?;

            let (mask_img, gray_masked) = match kind.as_str() {
                "mlp" => {
                    let model = load_model(require(model, "--model file")?)?;
                    segment_image(&model, &img, window)?
                }
                "nn" => {
                    let ds = Dataset::load(require(model, "--model dataset file")?)?;
                    let nn = NNModel::from_samples(&ds.train)?;
                    segment_image(&nn, &img, window)?
                }
                "gabor" => {
                    let gray = gray_of(&img)?;
                    let spec = gabor_spec_from(&cfg)?;
                    let seg = segment_gabor(&gray, &spec, seed)?;
                    if seg.status == GaborStatus::DegenerateConstant {
                        eprintln!("warning: constant image, single cluster; labeling everything background");
                    }
                    let mask_img = mask_to_image(&seg.mask);
                    let masked: Vec<u8> = gray
                        .data()
                        .iter()
                        .zip(mask_img.data())
                        .map(|(&g, &m)| if m == 255 { g } else { 0 })
                        .collect();
                    let gray_masked = RasterImage::new(gray.width(), gray.height(), 1, masked)?;
                    (mask_img, gray_masked)
                }
                other => {
                    return Err(Error::invalid(format!(
                        "unknown --kind {other:?} (expected mlp, nn or gabor)"
                    )))
                }
            };

            let mask_path = out.with_file_name(format!(
                "{}_mask.pgm",
                out.file_name()
                    .map(|s| s.to_string_lossy())
                    .unwrap_or_default()
            ));
            let gray_path = out.with_file_name(format!(
                "{}_gray.pgm",
                out.file_name()
                    .map(|s| s.to_string_lossy())
                    .unwrap_or_default()
            ));
            write_image(&mask_img, &mask_path)?;
            write_image(&gray_masked, &gray_path)?;
            println!(
                "segmented {} -> {} + {}",
                image.display(),
                mask_path.display(),
                gray_path.display()
            );
            Ok(EXIT_OK)
        }

        Command::Eval {
            model,
            dataset,
            kind,
        } => {
            let kind = kind
                .or(cfg_get(&cfg, "kind")?)
                .unwrap_or_else(|| "mlp".into());
            let dataset = require(dataset.or(cfg_get(&cfg, "dataset")?), "--dataset file")?;
            let model = model.or(cfg_get(&cfg, "model")?);
            let ds = Dataset::load(&dataset)?;

            let classifier: Box<dyn Classifier> = match kind.as_str() {
                "mlp" => Box::new(load_model(require(model, "--model file")?)?),
                "nn" => {
                    let model_ds = Dataset::load(require(model, "--model dataset file")?)?;
                    Box::new(NNModel::from_samples(&model_ds.train)?)
                }
                other => {
                    return Err(Error::invalid(format!(
                        "unknown --kind {other:?} (expected mlp or nn)"
                    )))
                }
            };

            let train_report = evaluate(classifier.as_ref(), &ds.train, Split::Train)?;
            let test_report = evaluate(classifier.as_ref(), &ds.test, Split::Test)?;
            println!("{}", train_report.line());
            println!("{}", test_report.line());
            Ok(EXIT_OK)
        }
    }
}

fn gabor_spec_from(cfg: &Config) -> Result<GaborSpec> {
    let mut spec = GaborSpec::default();
    if let Some(s) = cfg.get("orientations") {
        spec.orientations_deg = parse_f64_list(s)?;
    }
    if let Some(s) = cfg.get("frequencies") {
        spec.frequencies = parse_f64_list(s)?;
    }
    if let Some(v) = cfg_get::<f64>(cfg, "sigma")? {
        spec.sigma = Some(v);
    }
    if let Some(v) = cfg_get::<usize>(cfg, "kernel-radius")? {
        spec.kernel_radius = Some(v);
    }
    Ok(spec)
}
