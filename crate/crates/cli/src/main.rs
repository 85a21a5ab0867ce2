mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use gaussot::imageio::{self, ColorSpace};
use gaussot::stats::{content_loss, estimate_stats, expected_content_cost, style_loss};
use gaussot::tensorio::{self, Dtype};
use gaussot::transforms::{apply_transform, build_transform, semantic_transform};
use gaussot::{Error, FeatureMap, LossReport, SymMatrix, TransformKind, WhiteningMethod};

use report::*;

#[derive(Parser)]
#[command(
    name = "gaussot",
    version,
    about = "Gaussian optimal-transport style transforms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ost,
    Wct,
    Adain,
    RotatedWct,
    WhitenZca,
    WhitenPca,
    WhitenCholesky,
}

impl Method {
    fn kind(self, seed: u64) -> TransformKind {
        match self {
            Method::Ost => TransformKind::Ost,
            Method::Wct => TransformKind::Wct,
            Method::Adain => TransformKind::AdaIn,
            Method::RotatedWct => TransformKind::RotatedWct { seed },
            Method::WhitenZca => TransformKind::WhitenOnly(WhiteningMethod::Zca),
            Method::WhitenPca => TransformKind::WhitenOnly(WhiteningMethod::Pca),
            Method::WhitenCholesky => TransformKind::WhitenOnly(WhiteningMethod::Cholesky),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Space {
    Rgb,
    Lab,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&a) {
        Ok(a)
    } else {
        Err(format!("alpha must lie in [0, 1], got {a}"))
    }
}

fn parse_ridge(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if r.is_finite() && r >= 0.0 {
        Ok(r)
    } else {
        Err(format!("ridge must be finite and non-negative, got {r}"))
    }
}

#[derive(clap::Args)]
struct TransformOpts {
    /// Transform family.
    #[arg(long, value_enum, default_value = "ost")]
    method: Method,
    /// Blend weight between stylized (1) and original (0) features.
    #[arg(long, default_value = "1.0", value_parser = parse_alpha)]
    alpha: f64,
    /// Relative ridge added to the content covariance before inversion.
    #[arg(long, default_value = "1e-5", value_parser = parse_ridge)]
    ridge: f64,
    /// Seed for the random rotation of rotated-wct.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Recolor a PNG with the color statistics of another.
    ColorTransfer {
        content: PathBuf,
        style: PathBuf,
        #[command(flatten)]
        opts: TransformOpts,
        #[arg(long, value_enum, default_value = "rgb")]
        colorspace: Space,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Transform a (C, N) or (C, H, W) feature tensor; writes float64.
    FeatureTransform {
        content: PathBuf,
        style: PathBuf,
        #[command(flatten)]
        opts: TransformOpts,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Region-wise transform driven by integer label masks.
    Semantic {
        content: PathBuf,
        style: PathBuf,
        mask_content: PathBuf,
        mask_style: PathBuf,
        #[command(flatten)]
        opts: TransformOpts,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Content and style losses of a stylized tensor.
    Eval {
        content: PathBuf,
        stylized: PathBuf,
        style: PathBuf,
        /// Name reported for the style loss entry.
        #[arg(long, default_value = "features")]
        layer: String,
    },
    /// Costs and residuals of OST, WCT, AdaIN and K rotated WCT maps.
    Compare {
        content: PathBuf,
        style: PathBuf,
        /// Number of rotated WCT maps; rotation i uses seed + i.
        #[arg(long, default_value_t = 0)]
        rotations: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1e-5", value_parser = parse_ridge)]
        ridge: f64,
        #[arg(long, default_value = "1.0", value_parser = parse_alpha)]
        alpha: f64,
    },
    /// Whitening residual and displacement of ZCA, PCA and Cholesky.
    WhitenCompare {
        content: PathBuf,
        #[arg(long, default_value = "1e-5", value_parser = parse_ridge)]
        ridge: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            print_error("UsageError", e.to_string().trim().to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            print_error(e.code(), e.to_string());
            ExitCode::from(1)
        }
    }
}

fn print_error(code: &str, message: String) {
    let line = ErrorLine {
        error: code,
        message,
    };
    eprintln!(
        "{}",
        serde_json::to_string(&line).expect("error line serializes")
    );
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

fn check_shapes(a: &FeatureMap, b: &FeatureMap, what: &str) -> gaussot::Result<()> {
    if a.channels() != b.channels() {
        return Err(Error::Shape(format!(
            "{what}: {} vs {} channels",
            a.channels(),
            b.channels()
        )));
    }
    Ok(())
}

fn load_pair(content: &Path, style: &Path) -> gaussot::Result<(FeatureMap, FeatureMap)> {
    let fc = tensorio::read_tensor(content)?;
    let fs = tensorio::read_tensor(style)?;
    check_shapes(&fc, &fs, "content and style")?;
    Ok((fc, fs))
}

fn run(command: Command) -> gaussot::Result<()> {
    match command {
        Command::ColorTransfer {
            content,
            style,
            opts,
            colorspace,
            output,
        } => {
            let space = match colorspace {
                Space::Rgb => ColorSpace::Rgb,
                Space::Lab => ColorSpace::Lab,
            };
            let c = imageio::load_png(&content)?;
            let s = imageio::load_png(&style)?;
            let kind = opts.method.kind(opts.seed);
            let out = imageio::color_transfer(&c, &s, kind, opts.alpha, space, opts.ridge)?;
            imageio::save_png(&out, &output)
        }
        Command::FeatureTransform {
            content,
            style,
            opts,
            output,
        } => {
            let (fc, fs) = load_pair(&content, &style)?;
            let kind = opts.method.kind(opts.seed);
            let t = build_transform(kind, &estimate_stats(&fc), &estimate_stats(&fs), opts.ridge)?;
            let out = apply_transform(&fc, &t, opts.alpha)?;
            tensorio::write_tensor(&out, &output, Dtype::F8)
        }
        Command::Semantic {
            content,
            style,
            mask_content,
            mask_style,
            opts,
            output,
        } => {
            let (fc, fs) = load_pair(&content, &style)?;
            let mc = tensorio::read_labels(&mask_content)?.align_to(&fc)?;
            let ms = tensorio::read_labels(&mask_style)?.align_to(&fs)?;
            let kind = opts.method.kind(opts.seed);
            let out = semantic_transform(&fc, &fs, &mc, &ms, kind, opts.alpha, opts.ridge)?;
            tensorio::write_tensor(&out, &output, Dtype::F8)
        }
        Command::Eval {
            content,
            stylized,
            style,
            layer,
        } => {
            let fc = tensorio::read_tensor(&content)?;
            let fo = tensorio::read_tensor(&stylized)?;
            let fs = tensorio::read_tensor(&style)?;
            let loss = LossReport::new(
                content_loss(&fc, &fo)?,
                vec![(layer, style_loss(&fo, &fs)?)],
            )?;
            print_json(&EvalReport {
                content_loss: loss.content_loss,
                style_loss: loss.style_losses.iter().map(|(_, v)| v).sum(),
                style_losses: loss
                    .style_losses
                    .into_iter()
                    .map(|(layer, style_loss)| LayerLoss { layer, style_loss })
                    .collect(),
            });
            Ok(())
        }
        Command::Compare {
            content,
            style,
            rotations,
            seed,
            ridge,
            alpha,
        } => {
            let (fc, fs) = load_pair(&content, &style)?;
            let (c, s) = (estimate_stats(&fc), estimate_stats(&fs));
            let mut runs = vec![
                ("ost", None, TransformKind::Ost),
                ("wct", None, TransformKind::Wct),
                ("adain", None, TransformKind::AdaIn),
            ];
            for i in 0..rotations {
                let r = seed.wrapping_add(i);
                runs.push((
                    "rotated-wct",
                    Some(r),
                    TransformKind::RotatedWct { seed: r },
                ));
            }
            let mut records = Vec::with_capacity(runs.len());
            for (method, rotation_seed, kind) in runs {
                let start = Instant::now();
                let t = build_transform(kind, &c, &s, ridge)?;
                let out = apply_transform(&fc, &t, alpha)?;
                records.push(CompareRecord {
                    method: method.to_string(),
                    rotation_seed,
                    expected_content_cost: expected_content_cost(&t, &c, &s)?,
                    eq2_residual: t.covariance_residual(&c.cov, &s.cov),
                    content_loss: content_loss(&fc, &out)?,
                    style_loss: style_loss(&out, &fs)?,
                    wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                });
            }
            print_json(&CompareReport {
                environment: CompareEnvironment { seed, ridge, alpha },
                records,
            });
            Ok(())
        }
        Command::WhitenCompare { content, ridge } => {
            let fc = tensorio::read_tensor(&content)?;
            let c = estimate_stats(&fc);
            let dim = c.dim();
            let shift = gaussot::linalg::ridge_shift(c.cov.mean_diag(), ridge);
            let regularized =
                SymMatrix::new(c.cov.as_array() + &(ndarray::Array2::<f64>::eye(dim) * shift))?;
            let centered = fc.data() - &c.mean.view().insert_axis(ndarray::Axis(1));
            let n = fc.positions() as f64;
            let mut records = Vec::new();
            for method in WhiteningMethod::ALL {
                let start = Instant::now();
                let t = build_transform(TransformKind::WhitenOnly(method), &c, &c, ridge)?;
                let white = t.matrix.dot(&centered);
                let displacement = (&white - &centered).iter().map(|v| v * v).sum::<f64>() / n;
                records.push(WhitenRecord {
                    method: method.name().to_string(),
                    whitening_residual: t
                        .covariance_residual(&regularized, &SymMatrix::identity(dim)),
                    displacement,
                    wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                });
            }
            print_json(&WhitenReport {
                environment: WhitenEnvironment { ridge },
                records,
            });
            Ok(())
        }
    }
}
