use std::path::Path;
use std::process::{Command, Output};

fn convexseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convexseg"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let disk = dir.path().join("disk");
    let out = convexseg(&["synth", "--kind", "disk", "--dims", "64x48", "--out", p(&disk)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("convex=true"));
    let img = image::open(disk.join("image.png")).unwrap();
    assert_eq!((img.width(), img.height()), (64, 48));
    assert_eq!(code(&convexseg(&["verify-convex", p(&disk.join("truth.png"))])), 0);

    let star = dir.path().join("star");
    assert_eq!(code(&convexseg(&["synth", "--kind", "star", "--out", p(&star)])), 0);
    let verdict = convexseg(&["verify-convex", p(&star.join("truth.png")), "--slack", "1"]);
    assert_eq!(code(&verdict), 1);
    assert!(stdout(&verdict).starts_with("not convex"));

    let noisy_a = dir.path().join("a");
    let noisy_b = dir.path().join("b");
    for d in [&noisy_a, &noisy_b] {
        let args = [
            "synth",
            "--kind",
            "occluded-octagon",
            "--dims",
            "64x64",
            "--sigma",
            "0.1",
            "--seed",
            "3",
            "--out",
            p(d),
        ];
        assert_eq!(code(&convexseg(&args)), 0);
    }
    assert_eq!(
        std::fs::read(noisy_a.join("image.png")).unwrap(),
        std::fs::read(noisy_b.join("image.png")).unwrap()
    );
}

#[test]
fn convexify_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = dir.path().join("shape");
    assert_eq!(
        code(&convexseg(&[
            "synth",
            "--kind",
            "l-shape",
            "--dims",
            "64x64",
            "--out",
            p(&shapes)
        ])),
        0
    );
    let out_dir = dir.path().join("convex");
    let out = convexseg(&["convexify", p(&shapes.join("truth.png")), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for tag in ["0001", "0004", "0025", "final"] {
        assert!(out_dir.join(format!("overlay_{tag}.png")).exists(), "{tag}");
        assert!(out_dir.join(format!("laplacian_{tag}.png")).exists(), "{tag}");
    }
    assert!(out_dir.join("trace.txt").exists());
    assert_eq!(code(&convexseg(&["verify-convex", p(&out_dir.join("convex.png"))])), 0);
}

#[test]
fn segment_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    assert_eq!(
        code(&convexseg(&[
            "synth",
            "--kind",
            "square",
            "--dims",
            "64x64",
            "--out",
            p(&scene)
        ])),
        0
    );
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        "# weaker length term for a small image\nmu = 1\nouter_max = 200\n",
    )
    .unwrap();
    let out_dir = dir.path().join("seg");
    let field = dir.path().join("phi.txt");
    let out = convexseg(&[
        "segment",
        p(&scene.join("image.png")),
        "--model",
        "cv",
        "--convex-prior",
        "on",
        "--init",
        "circle:31.5,31.5,12",
        "--config",
        p(&config),
        "--trace",
        "--dump-field",
        p(&field),
        "--out",
        p(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout(&out);
    assert!(summary.contains("convex_prior=on"));
    assert!(summary.contains("convex=true"));
    for name in ["overlay.png", "region.png", "laplacian.png", "trace.csv", "summary.txt"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let phi = convexseg::ScalarField::from_text(&std::fs::read_to_string(&field).unwrap()).unwrap();
    assert_eq!(phi.dims(), (64, 64));
    assert!(
        std::fs::read_to_string(out_dir.join("trace.csv"))
            .unwrap()
            .lines()
            .count()
            > 1
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&convexseg(&["--version"])), 0);
    assert_eq!(code(&convexseg(&["--help"])), 0);
    assert_eq!(code(&convexseg(&["frobnicate"])), 5);
    assert_eq!(
        code(&convexseg(&["synth", "--kind", "hexagram", "--out", p(dir.path())])),
        5
    );
    assert_eq!(
        code(&convexseg(&[
            "synth",
            "--kind",
            "disk",
            "--dims",
            "64",
            "--out",
            p(dir.path())
        ])),
        5
    );
    assert_eq!(
        code(&convexseg(&["verify-convex", p(&dir.path().join("missing.png"))])),
        4
    );

    let scene = dir.path().join("scene");
    assert_eq!(
        code(&convexseg(&[
            "synth",
            "--kind",
            "square",
            "--dims",
            "64x64",
            "--out",
            p(&scene)
        ])),
        0
    );
    let image = scene.join("image.png");
    let out = dir.path().join("seg");
    assert_eq!(
        code(&convexseg(&["segment", p(&image), "--out", p(&out)])),
        5,
        "init is required"
    );
    let bad_model = [
        "segment",
        p(&image),
        "--model",
        "snake",
        "--init",
        "circle:31,31,10",
        "--out",
        p(&out),
    ];
    assert_eq!(code(&convexseg(&bad_model)), 5);
    let off_grid = ["segment", p(&image), "--init", "circle:5,5,10", "--out", p(&out)];
    assert_eq!(code(&convexseg(&off_grid)), 5);
    // a small disk at the default length weight shrinks to nothing
    let collapse = ["segment", p(&image), "--init", "circle:31.5,31.5,5", "--out", p(&out)];
    let res = convexseg(&collapse);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));
}
