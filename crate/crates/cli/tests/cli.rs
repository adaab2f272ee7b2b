//! Drives the built binary through the per-stage flow and the config-driven
//! runner, checking the documented files land where they should.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exposure-audit"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawn exposure-audit");
    assert!(
        output.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn stage_by_stage_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    run_ok(bin().args([
        "synth",
        "--users",
        "150",
        "--items",
        "120",
        "--suppliers",
        "12",
        "--seed",
        "3",
        "--out",
    ])
    .arg(dir.join("data")));

    run_ok(bin()
        .args(["ingest", "--ratings"])
        .arg(dir.join("data/ratings.csv"))
        .arg("--suppliers")
        .arg(dir.join("data/suppliers.csv"))
        .args(["--min-ratings", "10", "--test-fraction", "0.2", "--seed", "3", "--out"])
        .arg(dir.join("stage")));
    for file in ["train.csv", "test.csv", "suppliers.csv", "stats.json"] {
        assert!(dir.join("stage").join(file).exists(), "{file} missing");
    }

    run_ok(bin()
        .args(["segment", "--train"])
        .arg(dir.join("stage/train.csv"))
        .arg("--suppliers")
        .arg(dir.join("stage/suppliers.csv"))
        .arg("--out")
        .arg(dir.join("stage")));
    for file in [
        "item_categories.csv",
        "user_groups.csv",
        "supplier_groups.csv",
        "longtail.csv",
    ] {
        assert!(dir.join("stage").join(file).exists(), "{file} missing");
    }

    run_ok(bin()
        .args(["train", "--algo", "most_popular", "--train"])
        .arg(dir.join("stage/train.csv"))
        .arg("--model-out")
        .arg(dir.join("stage/models/most_popular.json")));

    run_ok(bin()
        .args(["recommend", "--model"])
        .arg(dir.join("stage/models/most_popular.json"))
        .args(["--n", "10", "--out"])
        .arg(dir.join("stage/recs.csv")));
    let recs = std::fs::read_to_string(dir.join("stage/recs.csv")).unwrap();
    assert!(recs.starts_with("user,item,rank,score\n"));

    let stdout = run_ok(bin()
        .args(["evaluate", "--train"])
        .arg(dir.join("stage/train.csv"))
        .arg("--test")
        .arg(dir.join("stage/test.csv"))
        .arg("--recs")
        .arg(dir.join("stage/recs.csv"))
        .arg("--item-categories")
        .arg(dir.join("stage/item_categories.csv"))
        .arg("--user-groups")
        .arg(dir.join("stage/user_groups.csv"))
        .arg("--supplier-groups")
        .arg(dir.join("stage/supplier_groups.csv"))
        .arg("--suppliers")
        .arg(dir.join("stage/suppliers.csv"))
        .args(["--algo", "most_popular", "--out"])
        .arg(dir.join("stage/report.json")));
    assert!(stdout.contains("upd"));
    for file in ["report.json", "scatter.csv", "group_popularity.csv", "supplier_rank.csv"] {
        assert!(dir.join("stage").join(file).exists(), "{file} missing");
    }
    let report = std::fs::read_to_string(dir.join("stage/report.json")).unwrap();
    assert!(report.contains("\"algorithm\": \"most_popular\""));
}

#[test]
fn config_driven_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let config = format!(
        r#"{{
            "synthetic": {{"n_users": 100, "n_items": 80, "n_suppliers": 8,
                           "ratings_per_user_min": 10, "ratings_per_user_max": 20,
                           "seed": 4}},
            "min_ratings": 8,
            "seed": 4,
            "algorithms": [
                {{"algorithm": "most_popular"}},
                {{"algorithm": "biased_mf", "epochs": 5, "factors": 8}}
            ],
            "out_dir": {:?}
        }}"#,
        dir.join("out")
    );
    std::fs::write(dir.join("experiment.json"), config).unwrap();
    let stdout = run_ok(bin().args(["run", "--config"]).arg(dir.join("experiment.json")));
    assert!(stdout.contains("most_popular"));
    assert!(stdout.contains("biased_mf"));
    for file in ["MANIFEST.json", "summary.csv", "reports/biased_mf/report.json"] {
        assert!(dir.join("out").join(file).exists(), "{file} missing");
    }
}

#[test]
fn movielens_style_delimiter_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut body = String::new();
    for u in 1..=6 {
        for i in 1..=8 {
            body.push_str(&format!("{u}::{i}::{}::9783007\n", (u + i) % 5 + 1));
        }
    }
    std::fs::write(dir.join("ratings.dat"), body).unwrap();
    run_ok(bin()
        .args(["ingest", "--ratings"])
        .arg(dir.join("ratings.dat"))
        .args(["--min-ratings", "2", "--seed", "1", "--out"])
        .arg(dir.join("stage")));
    let stats = std::fs::read_to_string(dir.join("stage/stats.json")).unwrap();
    assert!(stats.contains("\"raw_ratings\": 48"));
}

#[test]
fn implicit_playcounts_become_ratings() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut body = String::new();
    // 5 users x 6 albums with skewed playcounts
    for u in 1..=5 {
        for i in 1..=6 {
            body.push_str(&format!("u{u},album{i},{}\n", u * i));
        }
    }
    std::fs::write(dir.join("plays.csv"), body).unwrap();
    run_ok(bin()
        .args(["ingest", "--ratings"])
        .arg(dir.join("plays.csv"))
        .args(["--format", "implicit_csv", "--min-ratings", "3", "--seed", "8", "--out"])
        .arg(dir.join("stage")));
    let train = std::fs::read_to_string(dir.join("stage/train.csv")).unwrap();
    for line in train.lines() {
        let value: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((1.0..=5.0).contains(&value), "converted rating {value}");
    }
}

#[test]
fn missing_input_exits_nonzero() {
    let output = bin()
        .args(["recommend", "--model", "/nonexistent/model.json", "--out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nonexistent"), "stderr: {stderr}");
}

#[test]
fn stage_error_is_tagged_in_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // a diverging learning rate aborts the train stage
    let config = format!(
        r#"{{
            "synthetic": {{"n_users": 60, "n_items": 40, "n_suppliers": 5,
                           "ratings_per_user_min": 8, "ratings_per_user_max": 16, "seed": 2}},
            "min_ratings": 5,
            "seed": 2,
            "algorithms": [{{"algorithm": "biased_mf", "learning_rate": 1e6, "epochs": 40}}],
            "out_dir": {:?}
        }}"#,
        dir.join("out")
    );
    std::fs::write(dir.join("experiment.json"), config).unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(dir.join("experiment.json"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("train stage failed"), "stderr: {stderr}");
    assert!(dir.join("out/MANIFEST.json").exists());

    assert!(Path::new(&dir.join("out/train.csv")).exists());
}
