//! Command-line driver behind the `texsplat` binary.
//!
//! Exit codes: 0 success, 2 validation or I/O failure, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use texsplat::atlas::{init_from_sh0, plan_textures_nearest, reinit_resample};
use texsplat::camera::Camera;
use texsplat::dataset::{load_camera, load_dataset, save_camera, save_dataset, BackgroundPolicy, Dataset, PosedImage};
use texsplat::editing::{paint, retexture, EditImage, Pattern, DEFAULT_DEPTH_TOLERANCE};
use texsplat::experiments::{run_sweep, sweep_csv};
use texsplat::image::Image;
use texsplat::imageio::{read_rgba, write_depth_png, write_png};
use texsplat::metrics::{psnr, ssim};
use texsplat::optimize::{heldout_psnr, optimize, OptimizeConfig, Precision};
use texsplat::ply::{export_splat_ply, import_splat_ply};
use texsplat::render::{render, render_color};
use texsplat::scene::Scene;
use texsplat::scene_file::{load_scene, save_scene};
use texsplat::synthetic::{coarse_init, make_synthetic, untextured_copy, SyntheticKind, SyntheticParams, PATTERN_EXTENT};
use texsplat::Error;

const FORMATS: &str = "\
File formats:
  scene files   .gstx, GSTX version 1 (little-endian, f32 values)
  splat PLY     .ply, binary_little_endian 1.0 with x y z, scale_0 scale_1 (log),
                rot_0..rot_3 (w x y z), opacity (logit), f_dc_0..2, f_rest_*
  datasets      directory with transforms_train.json and optional transforms_test.json
                (camera_angle_x, frames[].file_path, frames[].transform_matrix), 8-bit PNGs
  cameras       JSON with transform_matrix, fx, fy, cx, cy, width, height, near, far

Exit codes: 0 success, 2 validation or I/O failure, 3 numerical failure.";

#[derive(Parser)]
#[command(name = "texsplat", version, about = "Textured 2D Gaussian splatting", after_help = FORMATS)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Parameter precision during optimization; files always store f32.
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::F64)]
    precision: PrecisionArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic ground-truth scene and render its dataset.
    Synth(SynthArgs),
    /// Render a scene from dataset views or a camera file.
    Render(RenderArgs),
    /// Allocate textures, initialize them from the degree-0 colors and optimize.
    Optimize(OptimizeArgs),
    /// Paint an edited RGBA image into a scene's textures.
    Paint(PaintArgs),
    /// Replace every texture with a procedural pattern.
    Retexture(RetextureArgs),
    /// Train one model per (primitive count, texel budget) cell.
    Sweep(SweepArgs),
    /// PSNR and SSIM between two images.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory: dataset, ground_truth.gstx and init.gstx.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Plane)]
    kind: KindArg,
    /// Primitive count (a perfect square for `grid`).
    #[arg(long, default_value_t = 1)]
    primitives: usize,
    /// Ground-truth texel budget.
    #[arg(long, default_value_t = 65536)]
    texels: usize,
    #[arg(long, default_value_t = 1)]
    sh_degree: u32,
    #[arg(long, default_value_t = 10)]
    views: usize,
    /// Hold out every n-th view (0 keeps all views for training).
    #[arg(long, default_value_t = 5)]
    heldout_every: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Plane,
    Grid,
    Random,
}

#[derive(Args)]
struct ViewSource {
    /// Dataset directory providing cameras.
    #[arg(long, conflicts_with = "camera")]
    dataset: Option<PathBuf>,
    /// Which dataset split the view indices refer to.
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Camera JSON file.
    #[arg(long)]
    camera: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct RenderArgs {
    /// Scene file (.gstx or .ply).
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    source: ViewSource,
    /// Comma-separated view indices (default: all views).
    #[arg(long, value_delimiter = ',')]
    views: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write 16-bit median-depth PNGs.
    #[arg(long)]
    depth: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Initial scene (.gstx or .ply); untextured primitives are initialized from their degree-0 color.
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = BackgroundArg::White)]
    background: BackgroundArg,
    /// Total texel budget (0 = one texel per primitive).
    #[arg(long)]
    texels: usize,
    #[arg(long)]
    iters: u64,
    /// Output directory: scene.gstx, log.csv, before_*.png and after_*.png.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackgroundArg {
    White,
    Black,
    FromAlpha,
}

impl From<BackgroundArg> for BackgroundPolicy {
    fn from(b: BackgroundArg) -> Self {
        match b {
            BackgroundArg::White => BackgroundPolicy::White,
            BackgroundArg::Black => BackgroundPolicy::Black,
            BackgroundArg::FromAlpha => BackgroundPolicy::FromAlpha,
        }
    }
}

#[derive(Args)]
struct PaintArgs {
    #[arg(long)]
    scene: PathBuf,
    /// RGBA PNG with the same size as the view.
    #[arg(long)]
    edit: PathBuf,
    #[command(flatten)]
    source: ViewSource,
    /// View index in the dataset split (ignored with --camera).
    #[arg(long, default_value_t = 0)]
    view: usize,
    /// Normalized depth tolerance around the median surface.
    #[arg(long, default_value_t = DEFAULT_DEPTH_TOLERANCE)]
    depth_tolerance: f64,
    /// Output scene file.
    #[arg(long)]
    out: PathBuf,
    /// Re-render of the painted view (default: next to the output scene).
    #[arg(long)]
    render: Option<PathBuf>,
}

#[derive(Args)]
struct RetextureArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum)]
    pattern: PatternArg,
    /// Also zero the view-dependent SH residual.
    #[arg(long)]
    zero_sh: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    Circles,
    Stripes,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = BackgroundArg::White)]
    background: BackgroundArg,
    /// Primitive counts; each must be a perfect square (grid initialization).
    #[arg(long, value_delimiter = ',', required = true)]
    gaussians: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    texels: Vec<usize>,
    #[arg(long, default_value_t = 300)]
    iters: u64,
    /// Half-width of the initial grid on the z = 0 plane.
    #[arg(long, default_value_t = 0.8 * PATTERN_EXTENT)]
    extent: f64,
    /// SH degree of the initial primitives.
    #[arg(long, default_value_t = 1)]
    sh_degree: u32,
    /// Fill the seconds column (wall-clock, so the CSV is no longer reproducible).
    #[arg(long)]
    timing: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    a: PathBuf,
    b: PathBuf,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

/// Exit code for a library error: 3 for numerical failure, 2 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonFiniteLoss { .. } => 3,
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_scene(path: &Path) -> CliResult<Scene> {
    if !path.is_file() {
        return Err(invalid(format!("scene not found: {}", path.display())));
    }
    let is_ply = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    Ok(if is_ply { import_splat_ply(path)? } else { load_scene(path)? })
}

fn write_scene(scene: &Scene, path: &Path) -> CliResult<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply")) {
        export_splat_ply(scene, path)?;
    } else {
        save_scene(scene, path)?;
    }
    Ok(())
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Cameras named by `source`, restricted to `indices` when non-empty.
fn cameras(source: &ViewSource, indices: &[usize]) -> CliResult<Vec<(usize, Camera)>> {
    let all: Vec<Camera> = match (&source.dataset, &source.camera) {
        (Some(dir), None) => {
            let ds = load_dataset(dir, BackgroundPolicy::White)?;
            let split = if source.split == SplitArg::Train { ds.train } else { ds.test };
            split.into_iter().map(|v| v.camera).collect()
        }
        (None, Some(path)) => vec![load_camera(path)?],
        _ => return Err(invalid("give exactly one of --dataset or --camera")),
    };
    if indices.is_empty() {
        return Ok(all.into_iter().enumerate().collect());
    }
    indices
        .iter()
        .map(|&i| {
            all.get(i)
                .cloned()
                .map(|c| (i, c))
                .ok_or_else(|| invalid(format!("view {i} out of range ({} views)", all.len())))
        })
        .collect()
}

fn cmd_synth(args: &SynthArgs, seed: u64) -> CliResult<()> {
    let kind = match args.kind {
        KindArg::Plane => SyntheticKind::Plane,
        KindArg::Grid => SyntheticKind::Grid,
        KindArg::Random => SyntheticKind::Random,
    };
    let params = SyntheticParams {
        kind,
        primitive_count: args.primitives,
        texels: args.texels,
        sh_degree: args.sh_degree,
        view_count: args.views,
        heldout_every: args.heldout_every,
        width: args.width,
        height: args.height,
        ..SyntheticParams::plane()
    };
    let (scene, ds) = make_synthetic(&params, seed)?;
    create_dir(&args.out)?;
    save_dataset(&args.out, &ds)?;
    save_scene(&scene, args.out.join("ground_truth.gstx"))?;
    save_scene(&untextured_copy(&scene)?, args.out.join("init.gstx"))?;
    if let Some(v) = ds.train.first() {
        save_camera(args.out.join("camera_0.json"), &v.camera)?;
    }
    println!(
        "{} primitives, {} texels, {} train / {} held-out views -> {}",
        scene.len(),
        scene.atlas.len(),
        ds.train.len(),
        ds.test.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> CliResult<()> {
    let scene = read_scene(&args.scene)?;
    let views = cameras(&args.source, &args.views)?;
    create_dir(&args.out)?;
    for (i, camera) in views {
        let start = Instant::now();
        let out = render(&scene, &camera);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        write_png(args.out.join(format!("view_{i}.png")), &out.color)?;
        if args.depth {
            write_depth_png(args.out.join(format!("depth_{i}.png")), &out.median_depth, &camera)?;
        }
        println!("view {i}: {ms:.1} ms");
    }
    Ok(())
}

fn save_renders(scene: &Scene, views: &[PosedImage], dir: &Path, prefix: &str) -> CliResult<()> {
    for (i, v) in views.iter().enumerate() {
        write_png(dir.join(format!("{prefix}_{i}.png")), &render_color(scene, &v.camera))?;
    }
    Ok(())
}

/// Textures every untextured scene for `budget`, or re-lays out one that is
/// already textured.
fn allocate(scene: &mut Scene, budget: usize) -> CliResult<()> {
    let (plan, miss) = plan_textures_nearest(&scene.scales(), budget)?;
    if let Some(miss) = miss {
        eprintln!("warning: {miss}; using {} texels", plan.total());
    }
    if scene.is_textured() {
        reinit_resample(scene, &plan)?;
    } else {
        init_from_sh0(scene, &plan)?;
    }
    Ok(())
}

fn cmd_optimize(args: &OptimizeArgs, seed: u64, precision: Precision) -> CliResult<()> {
    let mut scene = read_scene(&args.scene)?;
    let ds = load_dataset(&args.dataset, args.background.into())?;
    if ds.train.is_empty() {
        return Err(invalid("dataset has no training views"));
    }
    create_dir(&args.out)?;
    allocate(&mut scene, args.texels)?;
    save_renders(&scene, &ds.test, &args.out, "before")?;
    let mut config = OptimizeConfig::new(args.iters, args.texels, seed);
    config.precision = precision;
    let log_path = args.out.join("log.csv");
    match optimize(&mut scene, &ds.train, &ds.test, &config) {
        Ok(log) => {
            write_text(&log_path, &log.to_csv())?;
            let scene_path = args.out.join("scene.gstx");
            save_scene(&scene, &scene_path)?;
            save_renders(&scene, &ds.test, &args.out, "after")?;
            if !ds.test.is_empty() {
                println!("held-out PSNR {:.2} dB", heldout_psnr(&scene, &ds.test)?);
            }
            println!("{} texels -> {}", scene.atlas.len(), scene_path.display());
            Ok(())
        }
        Err(failure) => {
            write_text(&log_path, &failure.log.to_csv())?;
            let mut err = Failure::from(failure.error);
            if err.code == 3 {
                let checkpoint = args.out.join("last_good.gstx");
                save_scene(&scene, &checkpoint)?;
                err.message = format!("{}; last good checkpoint: {}", err.message, checkpoint.display());
            }
            Err(err)
        }
    }
}

fn cmd_paint(args: &PaintArgs) -> CliResult<()> {
    let mut scene = read_scene(&args.scene)?;
    let (_, camera) = cameras(&args.source, &[if args.source.camera.is_some() { 0 } else { args.view }])?
        .pop()
        .expect("one view");
    let rgba = read_rgba(&args.edit)?;
    let edit = EditImage::new(rgba, camera.clone())?;
    let report = paint(&mut scene, &edit, args.depth_tolerance)?;
    write_scene(&scene, &args.out)?;
    let render_path = args.render.clone().unwrap_or_else(|| args.out.with_extension("png"));
    write_png(&render_path, &render_color(&scene, &camera))?;
    println!(
        "{} rays used, {} texels touched -> {}",
        report.rays_used,
        report.texels_touched,
        args.out.display()
    );
    Ok(())
}

fn cmd_retexture(args: &RetextureArgs) -> CliResult<()> {
    let mut scene = read_scene(&args.scene)?;
    let pattern = match args.pattern {
        PatternArg::Circles => Pattern::Circles,
        PatternArg::Stripes => Pattern::Stripes,
    };
    retexture(&mut scene, |p| pattern.eval(p), args.zero_sh)?;
    write_scene(&scene, &args.out)
}

fn cmd_sweep(args: &SweepArgs, seed: u64) -> CliResult<()> {
    let ds: Dataset = load_dataset(&args.dataset, args.background.into())?;
    if ds.test.is_empty() {
        return Err(invalid("sweep needs a held-out split (transforms_test.json)"));
    }
    if !(args.extent > 0.0) {
        return Err(invalid("--extent must be positive"));
    }
    let background = match args.background {
        BackgroundArg::Black => [0.0; 3],
        _ => [1.0; 3],
    };
    let init = |g: usize| coarse_init(&ds.train, g, args.extent, args.sh_degree, background);
    let rows = run_sweep(&ds, &args.gaussians, &args.texels, args.iters, seed, &init);
    for r in &rows {
        println!("{} gaussians, {} texels: PSNR {:.2} SSIM {:.4} ({})", r.gaussians, r.texels, r.psnr, r.ssim, r.status);
    }
    write_text(&args.out, &sweep_csv(&rows, args.timing))
}

fn load_rgb(path: &Path) -> CliResult<Image> {
    let rgba = read_rgba(path)?;
    Ok(Image {
        width: rgba.width,
        height: rgba.height,
        data: rgba.data.iter().map(|&[r, g, b, _]| [r, g, b]).collect(),
    })
}

fn cmd_metrics(args: &MetricsArgs) -> CliResult<()> {
    let (a, b) = (load_rgb(&args.a)?, load_rgb(&args.b)?);
    println!("psnr,ssim");
    println!("{},{}", psnr(&a, &b)?, ssim(&a, &b)?);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    let precision = match cli.precision {
        PrecisionArg::F32 => Precision::F32,
        PrecisionArg::F64 => Precision::F64,
    };
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, cli.seed),
        Command::Render(a) => cmd_render(a),
        Command::Optimize(a) => cmd_optimize(a, cli.seed, precision),
        Command::Paint(a) => cmd_paint(a),
        Command::Retexture(a) => cmd_retexture(a),
        Command::Sweep(a) => cmd_sweep(a, cli.seed),
        Command::Metrics(a) => cmd_metrics(a),
    }
}

/// Parses the process arguments, runs the subcommand and reports failures.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
