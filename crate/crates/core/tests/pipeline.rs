//! End-to-end exercises of the command-line binary on the tiny preset:
//! artifact layout, exit codes, seed overrides, and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use gnm_sim::config::RunConfig;
use gnm_sim::hash::fnv1a64;
use gnm_sim::policy::io::save_policy;
use gnm_sim::policy::net::{Policy, PolicyMeta};
use gnm_sim::rng::{derive_seed, tag};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnm-sim"))
        .args(args)
        .env_remove("GNM_SIM_SEED")
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn read_dir_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, files: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, files);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_str().unwrap().into();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut files = Vec::new();
    walk(root, root, &mut files);
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

#[test]
fn tiny_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let dataset = root.join("dataset");
    let train = root.join("train");
    let graph_dir = root.join("graph");

    assert_ok(&bin(&[
        "--preset",
        "tiny",
        "--jobs",
        "1",
        "generate",
        "--out",
        dataset.to_str().unwrap(),
    ]));
    assert!(dataset.join("manifest.json").exists());

    assert_ok(&bin(&[
        "--preset",
        "tiny",
        "--jobs",
        "1",
        "train",
        "--data",
        dataset.to_str().unwrap(),
        "--out",
        train.to_str().unwrap(),
    ]));
    let params = train.join("policy.params");
    assert!(params.exists());
    let loss = std::fs::read_to_string(train.join("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,loss\n"));
    assert_eq!(loss.lines().count(), 1 + 3, "tiny preset trains 3 epochs");

    assert_ok(&bin(&[
        "--preset",
        "tiny",
        "--jobs",
        "1",
        "build-graph",
        "--params",
        params.to_str().unwrap(),
        "--world-seed",
        "123",
        "--out",
        graph_dir.to_str().unwrap(),
    ]));
    let graph = graph_dir.join("graph.json");
    assert!(graph.exists());

    let eval_out = root.join("evalout");
    assert_ok(&bin(&[
        "--preset",
        "tiny",
        "--jobs",
        "1",
        "eval",
        "--params",
        params.to_str().unwrap(),
        "--graph",
        graph.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(eval_out.join("eval.csv")).unwrap();
    assert!(csv.starts_with("condition,tier,mean_progress,stderr,n,seed_set,config_hash\n"));
    assert_eq!(csv.lines().count(), 2);
    assert!(eval_out.join("eval.txt").exists());

    // A seed override changes the trained parameters, so navigating the old
    // graph with them must be rejected as an invariant violation (exit 2).
    let train2 = root.join("train2");
    let out = Command::new(env!("CARGO_BIN_EXE_gnm-sim"))
        .args([
            "--preset",
            "tiny",
            "--jobs",
            "1",
            "train",
            "--data",
            dataset.to_str().unwrap(),
            "--out",
            train2.to_str().unwrap(),
        ])
        .env("GNM_SIM_SEED", "999")
        .output()
        .unwrap();
    assert_ok(&out);
    let mismatch = bin(&[
        "--preset",
        "tiny",
        "eval",
        "--params",
        train2.join("policy.params").to_str().unwrap(),
        "--graph",
        graph.to_str().unwrap(),
        "--out",
        root.join("evalout2").to_str().unwrap(),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn generate_twice_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert_ok(&bin(&[
            "--preset",
            "tiny",
            "--jobs",
            "1",
            "generate",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    let files_a = read_dir_bytes(&a);
    let files_b = read_dir_bytes(&b);
    assert!(files_a.len() > 1);
    assert_eq!(files_a, files_b);
}

#[test]
fn zero_learning_rate_leaves_parameters_at_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut config = RunConfig::preset("tiny").unwrap();
    config.train.learning_rate = 0.0;
    let config_path = root.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let dataset = root.join("dataset");
    assert_ok(&bin(&[
        "--config",
        config_path.to_str().unwrap(),
        "generate",
        "--out",
        dataset.to_str().unwrap(),
    ]));
    let train = root.join("train");
    assert_ok(&bin(&[
        "--config",
        config_path.to_str().unwrap(),
        "train",
        "--data",
        dataset.to_str().unwrap(),
        "--out",
        train.to_str().unwrap(),
    ]));

    let seed = derive_seed(
        config.seed,
        &[tag::ARM, fnv1a64(config.dataset.subset.as_bytes()), 0],
    );
    let expected = Policy::init(PolicyMeta::from_config(&config, &config.policy), seed);
    let expected_path = root.join("expected.params");
    save_policy(
        &expected_path,
        &expected,
        &config.hash_hex(),
        &config.dataset.subset,
    )
    .unwrap();
    assert_eq!(
        std::fs::read(train.join("policy.params")).unwrap(),
        std::fs::read(&expected_path).unwrap(),
    );
}

#[test]
fn usage_errors_exit_with_code_one() {
    let unknown = bin(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(1));

    let conflict = bin(&[
        "--config",
        "x.json",
        "--preset",
        "tiny",
        "generate",
        "--out",
        "d",
    ]);
    assert_eq!(conflict.status.code(), Some(1));

    let half_eval = bin(&["--preset", "tiny", "eval", "--params", "p.params"]);
    assert_eq!(half_eval.status.code(), Some(1));

    let missing_file = bin(&[
        "--preset",
        "tiny",
        "train",
        "--data",
        "/nonexistent",
        "--out",
        "d",
    ]);
    assert_eq!(missing_file.status.code(), Some(1));

    let help = bin(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
}
