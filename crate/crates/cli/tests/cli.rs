use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use segsa::io::atb::{write_atb, AtTensorFile};
use segsa::io::manifest::{load_manifest, write_manifest, ClassDecl, Manifest, ManifestEntry};
use segsa::io::pgm::encode_pgm;
use segsa::synth::{self, SynthConfig};
use segsa::ClassId;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synth")
}

fn segsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segsa")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two 4x4 images, class 1 everywhere except one class-2 pixel in the first
/// label mask.
fn tiny_dataset(dir: &Path) -> PathBuf {
    let mut entries = Vec::new();
    for (i, id) in ["a", "b"].iter().enumerate() {
        let mut label = [1u8; 16];
        if i == 0 {
            label[0] = 2;
        }
        let traces: Vec<f32> = (0..32).map(|k| ((k * 31 + i * 7) % 11) as f32).collect();
        fs::write(dir.join(format!("{id}.atb")), write_atb(&AtTensorFile::new(4, 4, 2, traces).unwrap())).unwrap();
        fs::write(dir.join(format!("{id}.pred.pgm")), encode_pgm(4, 4, &label)).unwrap();
        fs::write(dir.join(format!("{id}.label.pgm")), encode_pgm(4, 4, &label)).unwrap();
        entries.push(ManifestEntry {
            image_id: id.to_string(),
            at_path: format!("{id}.atb"),
            pred_path: format!("{id}.pred.pgm"),
            label_path: Some(format!("{id}.label.pgm")),
            width: 4,
            height: 4,
        });
    }
    let classes = vec![ClassDecl { id: ClassId(1), name: "road".into() }, ClassDecl { id: ClassId(2), name: "sign".into() }];
    let path = dir.join("m.json");
    fs::write(&path, write_manifest(&Manifest::new(classes, vec![], entries).unwrap())).unwrap();
    path
}

#[test]
fn class_with_one_trace_is_skipped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_dataset(dir.path());
    let models = dir.path().join("models");
    let out = segsa(&["fit", "--manifest", s(&m), "--models", s(&models)]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning: class 2 (sign) skipped"), "{stderr}");
    assert!(models.join("class_1.mdsa.sam").is_file());
    assert!(!models.join("class_2.mdsa.sam").exists());
    let report = fs::read_to_string(models.join("fit_report.csv")).unwrap();
    assert!(report.contains("2,sign,1,0,"), "{report}");
}

#[test]
fn strict_fails_on_missing_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_dataset(dir.path());
    fs::remove_file(dir.path().join("b.atb")).unwrap();
    let models = dir.path().join("models");
    let out = segsa(&["fit", "--manifest", s(&m), "--models", s(&models), "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b.atb"));
    assert!(!models.exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(segsa(&["fit"]).status.code(), Some(2));
    assert_eq!(segsa(&["score", "--manifest", "m.json", "--models", "x", "--out", "o", "--method", "dsa"]).status.code(), Some(2));
    assert_eq!(segsa(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn fit_writes_one_model_per_class_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let train = fixture().join("train.json");
    for run in ["x", "y"] {
        let out = segsa(&["fit", "--manifest", s(&train), "--models", s(&dir.path().join(run)), "--method", "lsa", "--seed", "5"]);
        assert!(out.status.success());
    }
    for c in 1..=3 {
        let name = format!("class_{c}.lsa.sam");
        assert_eq!(fs::read(dir.path().join("x").join(&name)).unwrap(), fs::read(dir.path().join("y").join(&name)).unwrap());
    }
}

/// Fits on the fixture and scores the first `n` test images with labels removed.
fn scored_subset(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let fx = fixture();
    let models = dir.join("models");
    assert!(segsa(&["fit", "--manifest", s(&fx.join("train.json")), "--models", s(&models)]).status.success());
    let mut m = load_manifest(&fs::read_to_string(fx.join("test.json")).unwrap()).unwrap();
    m.entries.truncate(n);
    for e in &mut m.entries {
        e.at_path = s(&fx.join(&e.at_path)).to_string();
        e.pred_path = s(&fx.join(&e.pred_path)).to_string();
        e.label_path = None;
    }
    let manifest = dir.join("nolabels.json");
    fs::write(&manifest, write_manifest(&m)).unwrap();
    let scores = dir.join("scores.csv");
    let out = segsa(&["score", "--manifest", s(&manifest), "--models", s(&models), "--out", s(&scores)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (manifest, scores)
}

#[test]
fn scoring_works_without_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (_, scores) = scored_subset(dir.path(), 5);
    let text = fs::read_to_string(&scores).unwrap();
    assert!(text.starts_with("image_id,class_or_group,kind,sa,z,pixel_count\n"));
    assert!(text.lines().any(|l| l.starts_with("test_0000,lanes,group,")));
    let stats = fs::read_to_string(dir.path().join("scores.stats.csv")).unwrap();
    assert!(stats.starts_with("class,n_images,mean,std\n"));
}

#[test]
fn simulate_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let test = fixture().join("test.json");
    let models = dir.path().join("models");
    let scores = dir.path().join("scores.csv");
    let curves = dir.path().join("curves.csv");
    assert!(segsa(&["fit", "--manifest", s(&fixture().join("train.json")), "--models", s(&models)]).status.success());
    assert!(segsa(&["score", "--manifest", s(&test), "--models", s(&models), "--out", s(&scores)]).status.success());
    assert!(segsa(&["simulate", "--manifest", s(&test), "--scores", s(&scores), "--out", s(&curves)]).status.success());
    let text = fs::read_to_string(&curves).unwrap();
    for target in ["lane", "marking", "road", "lanes"] {
        let rows: Vec<&str> = text.lines().filter(|l| l.starts_with(&format!("{target},"))).collect();
        assert_eq!(rows.len(), 10 * 5 + 10, "{target}");
        assert_eq!(rows.iter().filter(|l| l.split(',').nth(2) == Some("iou")).count(), 10);
    }
}

#[test]
fn select_is_stable_and_high_pool_is_top_slice() {
    let dir = tempfile::tempdir().unwrap();
    let test = fixture().join("test.json");
    let models = dir.path().join("models");
    let scores = dir.path().join("scores.csv");
    assert!(segsa(&["fit", "--manifest", s(&fixture().join("train.json")), "--models", s(&models)]).status.success());
    assert!(segsa(&["score", "--manifest", s(&test), "--models", s(&models), "--out", s(&scores)]).status.success());
    let select = |size: &str, seed: &str, out: &str| {
        let path = dir.path().join(out);
        let o = segsa(&[
            "select",
            "--manifest",
            s(&test),
            "--scores",
            s(&scores),
            "--target",
            "road",
            "--level",
            "high",
            "--size",
            size,
            "--seed",
            seed,
            "--out",
            s(&path),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(path).unwrap()
    };
    let a = select("10", "1", "a.txt");
    assert_eq!(a, select("10", "1", "b.txt"));
    assert_eq!(a.lines().count(), 10);

    // 299 road images: the High pool is the top floor(0.3 * 299) = 89 by SA.
    let all = select("89", "3", "c.txt");
    let mut road: Vec<(String, f64)> = fs::read_to_string(&scores)
        .unwrap()
        .lines()
        .filter(|l| l.split(',').nth(1) == Some("road"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[3].parse().unwrap())
        })
        .collect();
    road.sort_by(|x, y| y.1.total_cmp(&x.1));
    let top: Vec<&str> = road[..89].iter().map(|r| r.0.as_str()).collect();
    assert_eq!(all.lines().collect::<Vec<_>>(), top);

    let o = segsa(&[
        "select",
        "--manifest",
        s(&test),
        "--scores",
        s(&scores),
        "--target",
        "road",
        "--level",
        "high",
        "--size",
        "90",
        "--out",
        s(&dir.path().join("d.txt")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn heatmap_names_and_threshold_masks() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = scored_subset(dir.path(), 2);
    let out = dir.path().join("heat");
    let o = segsa(&[
        "heatmap",
        "--manifest",
        s(&manifest),
        "--models",
        s(&dir.path().join("models")),
        "--range",
        "0,10",
        "--threshold",
        "3",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for c in 1..=3 {
        assert!(out.join(format!("test_0000.{c}.sa.pgm")).is_file());
        assert!(out.join(format!("test_0000.{c}.mask.pgm")).is_file());
    }
}

#[test]
fn fixtures_match_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    synth::generate(dir.path(), &SynthConfig::default()).unwrap();
    let fx = fixture();
    for name in ["train.json", "test.json", "truth.csv", "train/train_0003.atb", "test/test_0299.pred.pgm", "test/test_0150.atb"] {
        assert_eq!(fs::read(dir.path().join(name)).unwrap(), fs::read(fx.join(name)).unwrap(), "{name}");
    }
}
