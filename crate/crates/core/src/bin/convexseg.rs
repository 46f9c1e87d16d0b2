use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use convexseg::imageio::{self, GREEN, RED};
use convexseg::projection::enforce_convex_prior_observed;
use convexseg::segment::parse_config_text;
use convexseg::synth::{self, NamedShape, Scene};
use convexseg::{
    convexity_defects, init_levelset, is_convex_region, load_image, segment, Error, InitSpec, PriorConfig,
    ProjectionConfig, RegionMask, Result, ScalarField, SegmentationConfig,
};

/// Iterations of the standalone prior whose state is written out.
const SNAPSHOTS: [usize; 4] = [1, 4, 25, 150];

#[derive(Debug, Parser)]
#[command(
    name = "convexseg",
    version,
    about = "Level-set segmentation with a convexity shape prior"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment an image with the Chan-Vese or edge-based model.
    ///
    /// The edge model has no area force: start it from a curve that encloses
    /// the object and lies close to it.
    Segment(SegmentArgs),
    /// Turn a binary mask into a convex region by alternating
    /// reinitialization and projection.
    Convexify(ConvexifyArgs),
    /// Write a synthetic test image and its ground-truth mask.
    Synth(SynthArgs),
    /// Exit 0 if the mask is convex within the slack, 1 otherwise.
    VerifyConvex(VerifyArgs),
}

#[derive(Debug, Args)]
struct SegmentArgs {
    image: PathBuf,
    /// cv or edge
    #[arg(long)]
    model: Option<String>,
    /// on or off
    #[arg(long)]
    convex_prior: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// circle:cx,cy,r | rect:x0,y0,x1,y1 | mask:<path> (x = column, y = row)
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Also write trace.csv.
    #[arg(long)]
    trace: bool,
    /// Write the final level-set function as a text matrix.
    #[arg(long)]
    dump_field: Option<PathBuf>,
    /// key=value file applied before the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Recorded in the summary; segmentation itself uses no randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ConvexifyArgs {
    mask: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, default_value_t = 300)]
    n_max: usize,
    #[arg(long, default_value_t = 30)]
    m_max: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// disk, square, octagon, star, pacman, l-shape, crescent, notch-thin,
    /// notch-wide, blob, occluded-octagon or two-objects
    #[arg(long)]
    kind: String,
    /// WIDTHxHEIGHT
    #[arg(long, default_value = "128x128", value_parser = parse_dims)]
    dims: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    mask: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    slack: f64,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let w = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    Ok((w, h))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn on_off(v: bool) -> &'static str {
    if v {
        "on"
    } else {
        "off"
    }
}

fn run_segment(args: &SegmentArgs) -> Result<()> {
    let mut pairs = match &args.config {
        Some(path) => parse_config_text(&fs::read_to_string(path).map_err(io_err(path))?)?,
        None => Vec::new(),
    };
    let flags = [
        ("model", args.model.clone()),
        ("convex_prior", args.convex_prior.clone()),
        ("mu", args.mu.map(|v| v.to_string())),
        ("lambda1", args.lambda1.map(|v| v.to_string())),
        ("lambda2", args.lambda2.map(|v| v.to_string())),
        ("dt", args.dt.map(|v| v.to_string())),
        ("init", args.init.clone()),
    ];
    pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    let cfg = SegmentationConfig::from_pairs(&pairs)?;

    let loaded = load_image(&args.image)?;
    let image = &loaded.intensity;
    let init = cfg.init.region(image.width(), image.height())?;
    let result = segment(image, &cfg)?;

    create_dir(&args.out)?;
    imageio::render_overlay(
        image,
        &[(&init, GREEN), (&result.region, RED)],
        &args.out.join("overlay.png"),
    )?;
    imageio::save_mask(&result.region, &args.out.join("region.png"))?;
    imageio::render_laplacian_map(&result.phi_final, &args.out.join("laplacian.png"))?;
    if args.trace {
        write_text(&args.out.join("trace.csv"), &result.trace_csv())?;
    }
    if let Some(path) = &args.dump_field {
        write_text(path, &result.phi_final.to_text())?;
    }

    let mut summary = vec![
        format!("model={:?}", cfg.model),
        format!("convex_prior={}", on_off(cfg.convex_prior)),
        format!("channel={}", loaded.chosen_channel),
        format!("outer_iterations={}", result.outer_iterations),
        format!("substeps={}", result.substeps),
        format!("converged={}", result.converged),
        format!("region_pixels={}", result.region.count()),
        format!("seed={}", args.seed),
    ];
    if let Some((c1, c2)) = result.means {
        summary.push(format!("c1={c1:.6}"));
        summary.push(format!("c2={c2:.6}"));
    }
    if let Some(cert) = result.convexity {
        summary.push(format!("convex={} slack={}", cert.convex, cert.slack));
    }
    let summary = summary.join("\n") + "\n";
    write_text(&args.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn mask_as_image(mask: &RegionMask) -> Result<ScalarField> {
    ScalarField::from_fn(
        mask.width(),
        mask.height(),
        |r, c| if mask.get(r, c) { 0.8 } else { 0.2 },
    )
}

fn run_convexify(args: &ConvexifyArgs) -> Result<()> {
    let mask = imageio::load_mask(&args.mask)?;
    let (w, h) = mask.dims();
    let phi = init_levelset(&InitSpec::Mask(mask.clone()), w, h)?;
    let backdrop = mask_as_image(&mask)?;
    let cfg = PriorConfig {
        eps: args.eps,
        n_max: args.n_max,
        projection: ProjectionConfig {
            m_max: args.m_max,
            ..ProjectionConfig::default()
        },
    };
    create_dir(&args.out)?;

    let snapshot = |tag: &str, field: &ScalarField| -> Result<()> {
        let region = RegionMask::from_sublevel(field);
        imageio::render_overlay(
            &backdrop,
            &[(&mask, GREEN), (&region, RED)],
            &args.out.join(format!("overlay_{tag}.png")),
        )?;
        imageio::render_laplacian_map(field, &args.out.join(format!("laplacian_{tag}.png")))
    };
    let mut failure = None;
    let (field, diag) = enforce_convex_prior_observed(&phi, &cfg, |record, field| {
        if failure.is_none() && SNAPSHOTS.contains(&record.outer) {
            failure = snapshot(&format!("{:04}", record.outer), field).err();
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    snapshot("final", &field)?;
    let region = RegionMask::from_sublevel(&field);
    imageio::save_mask(&region, &args.out.join("convex.png"))?;
    let trace: String = diag.trace_lines().map(|l| l + "\n").collect();
    write_text(&args.out.join("trace.txt"), &trace)?;
    println!(
        "iterations={} converged={} min_laplacian={:.3e} input_pixels={} output_pixels={}",
        diag.outer_iterations,
        diag.converged,
        diag.final_min_laplacian,
        mask.count(),
        region.count()
    );
    if !is_convex_region(&region, 1.0)? {
        return Err(Error::ConvexityViolation {
            detail: format!(
                "{} hull pixels lie more than 1 px outside the region after {} iterations",
                convexity_defects(&region, 1.0).len(),
                diag.outer_iterations
            ),
        });
    }
    Ok(())
}

fn scene_for(kind: &str, (w, h): (usize, usize), seed: u64, sigma: f64) -> Result<Scene> {
    let square = |s: usize| {
        if w == h {
            Ok(s)
        } else {
            Err(Error::InvalidInput(format!("{kind} needs a square image, got {w}x{h}")))
        }
    };
    let scene = match kind.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "occluded-octagon" => synth::occluded_octagon(square(w)?),
        "two-objects" => synth::two_objects(square(w)?),
        _ => {
            let spec = kind.parse::<NamedShape>()?.spec(w, h, seed);
            Scene {
                background: spec.background,
                ..Scene::new(w, h).with_object(spec.shape, spec.foreground)
            }
        }
    };
    Ok(scene.with_noise(sigma))
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let scene = scene_for(&args.kind, args.dims, args.seed, args.sigma)?;
    let (image, truth) = scene.render(args.seed)?;
    create_dir(&args.out)?;
    imageio::save_gray(&image.intensity, &args.out.join("image.png"))?;
    imageio::save_mask(&truth, &args.out.join("truth.png"))?;
    println!("pixels={} convex={}", truth.count(), is_convex_region(&truth, 1.0)?);
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let mask = imageio::load_mask(&args.mask)?;
    if mask.is_empty() {
        return Err(Error::InvalidInput(format!("{}: mask is empty", args.mask.display())));
    }
    let convex = is_convex_region(&mask, args.slack)?;
    if convex {
        println!("convex");
    } else {
        println!(
            "not convex: {} defect pixels",
            convexity_defects(&mask, args.slack).len()
        );
    }
    Ok(convex)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(5),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Segment(a) => run_segment(a).map(|_| true),
        Command::Convexify(a) => run_convexify(a).map(|_| true),
        Command::Synth(a) => run_synth(a).map(|_| true),
        Command::VerifyConvex(a) => run_verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
