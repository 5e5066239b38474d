use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use texsplat::dataset::{load_dataset, BackgroundPolicy};
use texsplat::image::{Image, RgbaImage};
use texsplat::imageio::{read_rgba, write_rgba_png};
use texsplat::metrics::psnr;
use texsplat::scene_file::{load_scene, round_to_f32};
use texsplat::Error;

fn texsplat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texsplat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = texsplat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small plane dataset with five held-out views.
fn synth(dir: &TempDir) -> PathBuf {
    let out = dir.path().join("ds");
    ok(&[
        "--seed", "4", "synth", "--out", s(&out), "--width", "48", "--height", "48", "--views", "10",
        "--heldout-every", "2", "--texels", "4096",
    ]);
    out
}

fn rgb(path: &Path) -> Image {
    let rgba = read_rgba(path).unwrap();
    Image {
        width: rgba.width,
        height: rgba.height,
        data: rgba.data.iter().map(|&[r, g, b, _]| [r, g, b]).collect(),
    }
}

#[test]
fn render_reproduces_own_dataset() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let out = dir.path().join("r");
    ok(&["render", "--scene", s(&ds.join("ground_truth.gstx")), "--dataset", s(&ds), "--out", s(&out), "--depth"]);
    let data = load_dataset(&ds, BackgroundPolicy::White).unwrap();
    for (i, v) in data.test.iter().enumerate() {
        let rendered = rgb(&out.join(format!("view_{i}.png")));
        assert!(psnr(&rendered, &v.image).unwrap() >= 99.0);
        assert!(out.join(format!("depth_{i}.png")).exists());
    }
}

#[test]
fn render_selected_views_only() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let out = dir.path().join("r");
    ok(&["render", "--scene", s(&ds.join("ground_truth.gstx")), "--dataset", s(&ds), "--views", "0,3", "--out", s(&out)]);
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["view_0.png", "view_3.png"]);
}

#[test]
fn render_from_camera_file() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let out = dir.path().join("r");
    ok(&["render", "--scene", s(&ds.join("ground_truth.gstx")), "--camera", s(&ds.join("camera_0.json")), "--out", s(&out)]);
    assert!(out.join("view_0.png").exists());
}

#[test]
fn missing_scene_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = texsplat(&["render", "--scene", "no/such.gstx", "--camera", "x.json", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scene not found"));
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(texsplat(&["render", "--bogus"]).status.code(), Some(2));
    assert_eq!(texsplat(&["--precision", "f16", "metrics", "a", "b"]).status.code(), Some(2));
    assert_eq!(texsplat(&["--help"]).status.code(), Some(0));
}

#[test]
fn optimize_zero_iterations_only_allocates() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let out = dir.path().join("o");
    ok(&["optimize", "--scene", s(&ds.join("init.gstx")), "--dataset", s(&ds), "--texels", "4096", "--iters", "0", "--out", s(&out)]);
    assert_eq!(std::fs::read_to_string(out.join("log.csv")).unwrap(), "iteration,l1,dssim,total,heldout_psnr\n");

    let mut expected = load_scene(ds.join("init.gstx")).unwrap();
    let plan = texsplat::atlas::plan_textures(&expected.scales(), 4096).unwrap();
    texsplat::atlas::init_from_sh0(&mut expected, &plan).unwrap();
    round_to_f32(&mut expected);
    assert_eq!(load_scene(out.join("scene.gstx")).unwrap(), expected);
}

#[test]
fn optimize_is_deterministic_and_improves() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = ok(&[
            "--seed", "9", "optimize", "--scene", s(&ds.join("init.gstx")), "--dataset", s(&ds), "--texels", "4096",
            "--iters", "40", "--out", s(&out),
        ]);
        assert!(String::from_utf8_lossy(&o.stdout).contains("held-out PSNR"));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["scene.gstx", "log.csv", "after_0.png"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let data = load_dataset(&ds, BackgroundPolicy::White).unwrap();
    let before = psnr(&rgb(&a.join("before_0.png")), &data.test[0].image).unwrap();
    let after = psnr(&rgb(&a.join("after_0.png")), &data.test[0].image).unwrap();
    assert!(after > before, "{before} -> {after}");
}

#[test]
fn numerical_failure_maps_to_exit_3() {
    assert_eq!(texsplat_cli::exit_code(&Error::NonFiniteLoss { iteration: 4 }), 3);
    assert_eq!(texsplat_cli::exit_code(&Error::BadMagic), 2);
    assert_eq!(texsplat_cli::exit_code(&Error::InvalidArgument(String::new())), 2);
}

fn paint_with(dir: &TempDir, ds: &Path, edit: &RgbaImage) -> (PathBuf, Output) {
    let edit_path = dir.path().join("edit.png");
    write_rgba_png(&edit_path, edit).unwrap();
    let out = dir.path().join("painted.gstx");
    let o = texsplat(&[
        "paint", "--scene", s(&ds.join("ground_truth.gstx")), "--edit", s(&edit_path), "--dataset", s(ds), "--view", "1",
        "--out", s(&out),
    ]);
    (out, o)
}

#[test]
fn paint_transparent_edit_changes_nothing() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let (out, o) = paint_with(&dir, &ds, &RgbaImage::from_fn(48, 48, |_, _| [0.0, 1.0, 0.0, 0.0]));
    assert!(o.status.success());
    assert_eq!(std::fs::read(out).unwrap(), std::fs::read(ds.join("ground_truth.gstx")).unwrap());
}

#[test]
fn paint_opaque_green_renders_green() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let (out, o) = paint_with(&dir, &ds, &RgbaImage::from_fn(48, 48, |_, _| [0.0, 1.0, 0.0, 1.0]));
    assert!(o.status.success());
    let img = rgb(&out.with_extension("png"));
    // the plane fills the middle of every view
    let [r, g, b] = img.get(24, 24);
    assert!(r < 0.05 && g > 0.95 && b < 0.05, "{r} {g} {b}");
}

#[test]
fn paint_size_mismatch_exits_2() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let (_, o) = paint_with(&dir, &ds, &RgbaImage::from_fn(20, 20, |_, _| [0.0, 1.0, 0.0, 1.0]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn retexture_circles_sums_red_and_blue() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let out = dir.path().join("c.gstx");
    ok(&["retexture", "--scene", s(&ds.join("ground_truth.gstx")), "--pattern", "circles", "--out", s(&out)]);
    let scene = load_scene(&out).unwrap();
    // texels are stored as f32
    assert!(scene.atlas.texels.iter().all(|t| (t[0] + t[2] - 1.0).abs() < 1e-6 && t[1] == 0.0));
}

#[test]
fn sweep_single_cell_writes_one_row() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let out = dir.path().join("s.csv");
    ok(&["sweep", "--dataset", s(&ds), "--gaussians", "4", "--texels", "100", "--iters", "3", "--out", s(&out)]);
    let csv = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "gaussians,texels,psnr,ssim,seconds,status");
    assert!(lines[1].starts_with("4,100,") && lines[1].ends_with(",ok"));
}

#[test]
fn sweep_records_failed_cells() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let out = dir.path().join("s.csv");
    ok(&["sweep", "--dataset", s(&ds), "--gaussians", "3,4", "--texels", "100", "--iters", "2", "--out", s(&out)]);
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("failed"));
    assert!(csv.lines().nth(2).unwrap().ends_with(",ok"));
}

#[test]
fn metrics_of_identical_images() {
    let dir = TempDir::new().unwrap();
    let ds = synth(&dir);
    let img = ds.join("test").join("r_0.png");
    let o = ok(&["metrics", s(&img), s(&img)]);
    assert_eq!(String::from_utf8_lossy(&o.stdout), "psnr,ssim\n100,1\n");
}
