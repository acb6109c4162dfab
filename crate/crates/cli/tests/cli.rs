use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hmkl::dataio::{write_labels, write_view_csv};
use hmkl::rng::SeededRng;
use hmkl::synthetic::{generate, SyntheticSpec};

fn hmkl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmkl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, body).unwrap();
    path
}

/// Two-view synthetic table written as view and label CSVs.
fn toy_table(dir: &Path) {
    let table = generate::<f64>(&SyntheticSpec::mixed(3, 10, 1, 1, 3.0), 7).unwrap();
    let ids = table.sample_ids().to_vec();
    for (f, name) in ["a", "b"].iter().enumerate() {
        write_view_csv(dir.join(format!("{name}.csv")), &ids, table.view(f), &[]).unwrap();
    }
    let classes: Vec<String> = table.labels().iter().map(|&l| table.class_names()[l].clone()).collect();
    write_labels(dir.join("labels.csv"), &ids, &classes, &[]).unwrap();
}

const TOY: &str = "[dataset]\nlabels = labels.csv\nviews = a.csv, b.csv\n\n[kernels]\nrbf_gammas = 10, 1, 0.1, 0.01\nchi2_gammas = 3, 2, 1, 0.5\n\n[svm]\nc_grid = 1, 5\ncv_folds = 3\n\n[mkl]\np = 1, 2\n\n[benchmark]\nfractions = 0.5\nrepetitions = 2\nseed = 3\n\n[output]\ndir = out\n";

fn image_folder(dir: &Path) {
    let mut rng = SeededRng::new(1, 1);
    for class in ["forest", "river"] {
        fs::create_dir_all(dir.join("images").join(class)).unwrap();
        for k in 0..2 {
            let img = image::RgbImage::from_fn(48, 48, |x, y| {
                let base = if class == "forest" { (x * 5) as u8 } else { (y * 5) as u8 };
                image::Rgb([base, (rng.unit() * 255.0) as u8, base / 2])
            });
            img.save(dir.join("images").join(class).join(format!("img{k}.png"))).unwrap();
        }
    }
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or("").to_string()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).count() - 1
}

#[test]
fn extract_writes_one_csv_per_descriptor_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    image_folder(dir.path());
    write_config(
        dir.path(),
        "[dataset]\nimages = images\n[features]\npatch = 8\nstep = 8\ncodebook_size = 4\ncodebook_iterations = 5\n[output]\ndir = out\n",
    );
    let o = hmkl(dir.path(), &["codebook", "--config", "run.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = hmkl(dir.path(), &["extract", "--config", "run.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    for name in ["moments.csv", "bag.csv", "labels.csv"] {
        assert_eq!(data_rows(&out.join(name)), 4, "{name}");
        assert!(first_line(&out.join(name)).starts_with("# hmkl "));
    }
    assert!(first_line(&out.join("codebook.txt")).starts_with("# hmkl "));
    let before: Vec<Vec<u8>> = ["moments.csv", "bag.csv"].iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    let o = hmkl(dir.path(), &["extract", "--config", "run.conf"]);
    assert!(o.status.success());
    let after: Vec<Vec<u8>> = ["moments.csv", "bag.csv"].iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn missing_image_folder_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "[dataset]\nimages = nowhere\n");
    let o = hmkl(dir.path(), &["extract", "--config", "run.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere"), "{}", stderr(&o));
}

#[test]
fn bag_without_codebook_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    image_folder(dir.path());
    write_config(dir.path(), "[dataset]\nimages = images\n[features]\ncodebook = missing.txt\n");
    let o = hmkl(dir.path(), &["extract", "--config", "run.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.txt"));
}

#[test]
fn bad_config_and_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    toy_table(dir.path());
    write_config(dir.path(), TOY);
    let o = hmkl(dir.path(), &["select", "--config", "run.conf", "--no-heuristic", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("0.5"));
    let o = hmkl(dir.path(), &["select", "--config", "run.conf", "--fraction", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hmkl(dir.path(), &["select"]);
    assert_eq!(o.status.code(), Some(2));
    write_config(dir.path(), "[mkl]\np = 0.2\n");
    let o = hmkl(dir.path(), &["select", "--config", "run.conf"]);
    assert_eq!(o.status.code(), Some(2));
    write_config(dir.path(), "[dataset]\nlabels = labels.csv\nviews = gone.csv\n");
    let o = hmkl(dir.path(), &["select", "--config", "run.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gone.csv"));
}

#[test]
fn select_writes_trace_and_spec_list() {
    let dir = tempfile::tempdir().unwrap();
    toy_table(dir.path());
    write_config(dir.path(), TOY);
    let o = hmkl(dir.path(), &["select", "--config", "run.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("selection.json")).unwrap()).unwrap();
    assert!(trace["provenance"].as_str().unwrap().starts_with("hmkl "));
    assert!(!trace["iterations"].as_array().unwrap().is_empty());
    let selected: Vec<String> = trace["selected"]["kernels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k.as_str().unwrap().to_string())
        .collect();
    let listed: Vec<String> = fs::read_to_string(out.join("selected.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect();
    assert_eq!(listed, selected);
}

#[test]
fn no_heuristic_trains_on_every_kernel() {
    let dir = tempfile::tempdir().unwrap();
    toy_table(dir.path());
    write_config(dir.path(), TOY);
    let o = hmkl(dir.path(), &["train", "--config", "run.conf", "--no-heuristic", "--p", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    assert!(!out.join("selection.json").exists());
    assert_eq!(data_rows(&out.join("selected.txt")) + 1, 18);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["p"].as_f64(), Some(2.0));
    assert_eq!(model["specs"].as_array().unwrap().len(), 18);
    assert!(model["selection"].is_null());
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    toy_table(dir.path());
    write_config(dir.path(), TOY);
    let o = hmkl(dir.path(), &["train", "--config", "run.conf", "--fraction", "0.5", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    assert!(first_line(&out.join("split.csv")).contains("seed=4"));
    let o = hmkl(dir.path(), &["predict", "--config", "run.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_rows(&out.join("predictions.csv")), 30);
    assert!(String::from_utf8_lossy(&o.stdout).contains("accuracy"));
}

#[test]
fn benchmark_table_plots_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    toy_table(dir.path());
    write_config(
        dir.path(),
        &TOY.replace("[benchmark]\n", "[benchmark]\nmethods = single_kernel:v0, mkl_lp:2, heuristic_mkl\n"),
    );
    let o = hmkl(dir.path(), &["benchmark", "--config", "run.conf", "--emit-plots", "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "method,0.5");
    assert_eq!(rows.len(), 4);
    assert!(table.starts_with("# hmkl "));
    assert!(out.join("curve_heuristic_mkl_0.5.csv").exists());
    assert!(out.join("weights_heuristic_mkl_0.5.csv").exists());
    assert!(out.join("weights_mkl_lp_2_0.5.csv").exists());
    assert!(first_line(&out.join("curve_heuristic_mkl_0.5.csv")).starts_with("# hmkl "));

    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"run_config\""));
    assert_eq!(fs::read_dir(out.join("cache").join("results")).unwrap().count(), 6);

    // The second run loads every repetition from the result cache.
    let o = hmkl(dir.path(), &["benchmark", "--config", "run.conf", "--emit-plots"]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out.join("report.json")).unwrap(), report);

    fs::remove_file(out.join("table.csv")).unwrap();
    let o = hmkl(dir.path(), &["report", "--config", "run.conf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("table.csv")).unwrap(), table);
}
