mod common;

use std::path::Path;
use std::process::{Command, Output};

fn lowlight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowlight"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn fixture(dir: &Path) -> String {
    let path = dir.join("in.png");
    lowlight::save_image(&common::scene(48), &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn enhance_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("out.png");
    let res = lowlight(&[
        "enhance",
        &input,
        "-o",
        out.to_str().unwrap(),
        "--order",
        "denoise-first",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let img = lowlight::load_image(&out).unwrap();
    assert_eq!((img.width(), img.height()), (48, 48));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "# tuned\nrbaf.sigma0 = 12\nhist.enabled = false\n").unwrap();
    let out = dir.path().join("out.ppm");
    let res = lowlight(&[
        "enhance",
        &input,
        "-o",
        out.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "color.alpha=1.2",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    std::fs::write(&cfg, "rbaf.sigma0 = 12\nbogus.key = 1\n").unwrap();
    let res = lowlight(&[
        "enhance",
        &input,
        "-o",
        out.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains('2'));

    let res = lowlight(&[
        "enhance",
        &input,
        "-o",
        out.to_str().unwrap(),
        "--set",
        "rbaf.sigma1=40",
    ]);
    assert_eq!(code(&res), 1);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&lowlight(&[])), 1);
    assert_eq!(code(&lowlight(&["enhance"])), 1);
    assert_eq!(
        code(&lowlight(&[
            "degrade", "a.png", "-o", "b.png", "--preset", "nope"
        ])),
        1
    );
    assert_eq!(code(&lowlight(&["--help"])), 0);
}

#[test]
fn io_and_format_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.png");
    let missing = lowlight(&["denoise", "/nonexistent/x.png", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&missing), 2);
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    let bad = lowlight(&[
        "denoise",
        junk.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&bad), 2);
    assert!(!String::from_utf8_lossy(&bad.stderr).is_empty());
}

#[test]
fn invalid_runtime_arguments_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("o.png");
    let res = lowlight(&[
        "degrade",
        &input,
        "-o",
        out.to_str().unwrap(),
        "--preset",
        "lll",
        "--t",
        "1.5",
    ]);
    assert_eq!(code(&res), 3);
    let res = lowlight(&[
        "denoise",
        &input,
        "-o",
        out.to_str().unwrap(),
        "--window",
        "4",
    ]);
    assert_ne!(code(&res), 0);
}

#[test]
fn metrics_to_stdout_and_mismatched_reference() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let small = dir.path().join("small.png");
    lowlight::save_image(&common::scene(16), &small).unwrap();
    let res = lowlight(&["metrics", &input, small.to_str().unwrap(), "--ref", &input]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,ssim,luminance,vcm,edge_energy");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].split(',').nth(1).unwrap().starts_with('1'));
    assert!(lines[2].contains("error: reference 48x48 vs image 16x16"));
}

#[test]
fn degrade_hdr_and_order_exp() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("hdr.png");
    let res = lowlight(&[
        "degrade",
        &input,
        "-o",
        out.to_str().unwrap(),
        "--preset",
        "hdr",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    let csv = dir.path().join("order.csv");
    let res = lowlight(&[
        "order-exp",
        &input,
        "--preset",
        "vlll",
        "--seed",
        "2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 3);
}
