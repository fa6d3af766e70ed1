//! End-to-end tests of the `cwseg` binary: every pipeline stage, the
//! documented exit codes, and byte-determinism of outputs.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cwseg::image::{mask_to_image, write_image};
use tempfile::TempDir;

fn cwseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Writes the synthetic scene as image + mask files and returns the paths.
fn scene_files(dir: &Path) -> (PathBuf, PathBuf) {
    let (image, mask) = common::two_texture_scene(7);
    let img_path = dir.join("scene.pgm");
    let mask_path = dir.join("scene_mask.pgm");
    write_image(&image, &img_path).unwrap();
    write_image(&mask_to_image(&mask), &mask_path).unwrap();
    (img_path, mask_path)
}

#[test]
fn gray_converts_red_to_76() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("red.ppm");
    fs::write(&input, b"P6\n1 1\n255\n\xff\x00\x00").unwrap();
    let out_path = dir.path().join("gray.pgm");

    let out = cwseg(&[
        "gray",
        input.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&out_path).unwrap(), b"P5\n1 1\n255\n\x4c"); // 76
}

#[test]
fn gray_of_gray_valued_rgb_matches_p5() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("g.ppm");
    // 2x1 image, both pixels gray-valued (v,v,v)
    fs::write(&input, b"P6\n2 1\n255\n\x10\x10\x10\xc8\xc8\xc8").unwrap();
    let out_path = dir.path().join("g.pgm");
    let out = cwseg(&[
        "gray",
        input.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(&out_path).unwrap(), b"P5\n2 1\n255\n\x10\xc8");
}

#[test]
fn gray_missing_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = cwseg(&[
        "gray",
        dir.path().join("absent.ppm").to_str().unwrap(),
        "--out",
        dir.path().join("o.pgm").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gray_rejects_p5_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("already.pgm");
    fs::write(&input, b"P5\n1 1\n255\n\x40").unwrap();
    let out = cwseg(&[
        "gray",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("o.pgm").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sample_writes_700_300_and_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let (img, mask) = scene_files(dir.path());
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");

    for out_path in [&out_a, &out_b] {
        let out = cwseg(&[
            "sample",
            "--images",
            img.to_str().unwrap(),
            "--masks",
            mask.to_str().unwrap(),
            "--window",
            "9",
            "--total",
            "1000",
            "--seed",
            "5",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout_of(&out).contains("700 train + 300 test"));
    }
    let bytes_a = fs::read(&out_a).unwrap();
    assert_eq!(bytes_a, fs::read(&out_b).unwrap());
    // header + 1000 sample rows
    assert_eq!(bytes_a.iter().filter(|&&b| b == b'\n').count(), 1001);
}

#[test]
fn sample_capacity_error_exits_3() {
    let dir = TempDir::new().unwrap();
    let img = dir.path().join("tiny.pgm");
    let mask = dir.path().join("tiny_mask.pgm");
    // 4x4 image: 16 pixels cannot supply 500 object samples
    fs::write(&img, [b"P5\n4 4\n255\n".as_ref(), &[100u8; 16]].concat()).unwrap();
    let mask_bytes: Vec<u8> = (0..16).map(|i| if i % 2 == 0 { 255 } else { 0 }).collect();
    fs::write(&mask, [b"P5\n4 4\n255\n".as_ref(), &mask_bytes].concat()).unwrap();
    let out = cwseg(&[
        "sample",
        "--images",
        img.to_str().unwrap(),
        "--masks",
        mask.to_str().unwrap(),
        "--window",
        "3",
        "--total",
        "1000",
        "--out",
        dir.path().join("d.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sample_small_total_splits_seven_three() {
    let dir = TempDir::new().unwrap();
    let (img, mask) = scene_files(dir.path());
    let out_path = dir.path().join("small.csv");
    let out = cwseg(&[
        "sample",
        "--images",
        img.to_str().unwrap(),
        "--masks",
        mask.to_str().unwrap(),
        "--window",
        "3",
        "--total",
        "10",
        "--seed",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout_of(&out).contains("7 train + 3 test"));
}

/// Builds a small dataset file for train/eval tests; window 3 on the
/// Gaussian scene keeps training fast.
fn small_dataset(dir: &Path) -> PathBuf {
    let (image, mask) = common::gaussian_texture_scene(3);
    let img_path = dir.join("gauss.pgm");
    let mask_path = dir.join("gauss_mask.pgm");
    write_image(&image, &img_path).unwrap();
    write_image(&mask_to_image(&mask), &mask_path).unwrap();
    let ds_path = dir.join("gauss.csv");
    let out = cwseg(&[
        "sample",
        "--images",
        img_path.to_str().unwrap(),
        "--masks",
        mask_path.to_str().unwrap(),
        "--window",
        "3",
        "--total",
        "120",
        "--seed",
        "9",
        "--out",
        ds_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    ds_path
}

#[test]
fn train_then_eval_reports_both_splits() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let model = dir.path().join("model.txt");
    let log = dir.path().join("train.log");

    let out = cwseg(&[
        "train",
        ds.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        model.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists());
    let log_text = fs::read_to_string(&log).unwrap();
    assert!(log_text.starts_with("epoch,mse,lambda,accepted\n"));
    assert!(log_text.lines().count() > 1);

    let out = cwseg(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--dataset",
        ds.to_str().unwrap(),
        "--kind",
        "mlp",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("train,84,"), "{}", lines[0]);
    assert!(lines[1].starts_with("test,36,"), "{}", lines[1]);

    // counts never exceed split sizes and efficiency is consistent
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let total: usize = fields[1].parse().unwrap();
        let correct: usize = fields[2].parse().unwrap();
        assert!(correct <= total);
        let expect = format!(
            "{:.2}",
            (correct as f64 * 10000.0 / total as f64).round() / 100.0
        );
        assert_eq!(fields[3], expect);
    }
}

#[test]
fn train_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let model_a = dir.path().join("a.txt");
    let model_b = dir.path().join("b.txt");
    for model in [&model_a, &model_b] {
        let out = cwseg(&[
            "train",
            ds.to_str().unwrap(),
            "--seed",
            "4",
            "--out",
            model.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&model_a).unwrap(), fs::read(&model_b).unwrap());
}

#[test]
fn train_layer_width_mismatch_exits_2() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let out = cwseg(&[
        "train",
        ds.to_str().unwrap(),
        "--layers",
        "81,18,10,2", // dataset width is 9
        "--out",
        dir.path().join("m.txt").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn contradictory_dataset_fails_convergence_with_model_written() {
    let dir = TempDir::new().unwrap();
    // two identical windows with opposite labels: the residual cannot go
    // below 1, improvements die out, lambda overflows
    let ds = dir.path().join("bad.csv");
    let mut text = String::from("label,category,source,x,y,f1,f2,f3,f4\n");
    for i in 0..10 {
        let label = if i % 2 == 0 { "OBJECT" } else { "BACKGROUND" };
        text.push_str(&format!("{label},INTERIOR,s,{i},0,0.5,0.5,0.5,0.5\n"));
    }
    fs::write(&ds, text).unwrap();
    let model = dir.path().join("m.txt");
    let out = cwseg(&[
        "train",
        ds.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists(), "best model must still be written");
}

/// A model file whose only non-zero parameters are b3 = (1, -1): every
/// window classifies as object.
fn always_object_model(dir: &Path) -> PathBuf {
    let path = dir.join("stub.txt");
    fs::write(&path, "9 1 1 2\n0 0 0 0 0 0 0 0 0\n0\n0\n0\n0\n0\n1 -1\n").unwrap();
    path
}

#[test]
fn segment_with_always_object_stub() {
    let dir = TempDir::new().unwrap();
    let (img, _mask) = scene_files(dir.path());
    let model = always_object_model(dir.path());
    let prefix = dir.path().join("seg");
    let out = cwseg(&[
        "segment",
        img.to_str().unwrap(),
        "--kind",
        "mlp",
        "--model",
        model.to_str().unwrap(),
        "--window",
        "3",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let mask_img = cwseg::image::read_image(dir.path().join("seg_mask.pgm")).unwrap();
    assert!(mask_img.data().iter().all(|&v| v == 255));
    let gray_img = cwseg::image::read_image(dir.path().join("seg_gray.pgm")).unwrap();
    let orig = cwseg::image::read_image(&img).unwrap();
    assert_eq!(gray_img.data(), orig.data());
}

#[test]
fn segment_kind_nn_uses_dataset_as_model() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let (image, _) = common::gaussian_texture_scene(3);
    let img_path = dir.path().join("gauss.pgm"); // written by small_dataset
    assert!(img_path.exists());
    let prefix = dir.path().join("nnseg");
    let out = cwseg(&[
        "segment",
        img_path.to_str().unwrap(),
        "--kind",
        "nn",
        "--model",
        ds.to_str().unwrap(),
        "--window",
        "3",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mask_img = cwseg::image::read_image(dir.path().join("nnseg_mask.pgm")).unwrap();
    assert_eq!(mask_img.width(), image.width());
    // both labels should appear on this separable scene
    assert!(mask_img.data().contains(&255));
    assert!(mask_img.data().contains(&0));
}

#[test]
fn segment_kind_gabor_ignores_model() {
    let dir = TempDir::new().unwrap();
    let (image, _mask) = common::stripes_vs_uniform_scene();
    let img_path = dir.path().join("stripes.pgm");
    write_image(&image, &img_path).unwrap();
    let prefix = dir.path().join("gab");
    let out = cwseg(&[
        "segment",
        img_path.to_str().unwrap(),
        "--kind",
        "gabor",
        "--seed",
        "3",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("gab_mask.pgm").exists());
    assert!(dir.path().join("gab_gray.pgm").exists());
}

#[test]
fn eval_nn_self_model_is_perfect_on_train() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let out = cwseg(&[
        "eval",
        "--model",
        ds.to_str().unwrap(),
        "--dataset",
        ds.to_str().unwrap(),
        "--kind",
        "nn",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    // every train query matches itself at distance zero
    assert!(text.lines().next().unwrap().ends_with("100.00"), "{text}");
}

#[test]
fn eval_perfect_stub_on_all_object_dataset() {
    let dir = TempDir::new().unwrap();
    let ds = dir.path().join("allobj.csv");
    let mut text = String::from("label,category,source,x,y,f1,f2,f3,f4,f5,f6,f7,f8,f9\n");
    for i in 0..10 {
        text.push_str(&format!(
            "OBJECT,INTERIOR,s,{i},0,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n"
        ));
    }
    fs::write(&ds, text).unwrap();
    let model = always_object_model(dir.path());
    let out = cwseg(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--dataset",
        ds.to_str().unwrap(),
        "--kind",
        "mlp",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert_eq!(text, "train,7,7,100.00\ntest,3,3,100.00\n");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let (img, mask) = scene_files(dir.path());
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# defaults\nwindow=3\ntotal=20\nseed=5\nout={}\n",
            dir.path().join("from_cfg.csv").display()
        ),
    )
    .unwrap();

    // config only
    let out = cwseg(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--images",
        img.to_str().unwrap(),
        "--masks",
        mask.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_of(&out).contains("14 train + 6 test"));

    // flag overrides config total
    let out2 = cwseg(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--images",
        img.to_str().unwrap(),
        "--masks",
        mask.to_str().unwrap(),
        "--total",
        "10",
        "--out",
        dir.path().join("flag.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out2), 0);
    assert!(stdout_of(&out2).contains("7 train + 3 test"));
}

#[test]
fn segment_unknown_kind_exits_2() {
    let dir = TempDir::new().unwrap();
    let (img, _mask) = scene_files(dir.path());
    let out = cwseg(&[
        "segment",
        img.to_str().unwrap(),
        "--kind",
        "forest",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}
