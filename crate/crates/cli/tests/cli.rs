use std::path::Path;
use std::process::{Command, Output};

fn massart(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_massart"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn gen(dir: &Path, name: &str, n: &str, seed: &str) {
    let out = massart(
        &[
            "gen", "--dim", "5", "--gamma", "0.2", "--eta", "0.1", "--noise", "boundary:0.3", "--n", n, "--seed", seed,
            "--instance-seed", "11", "--out", name,
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "train.jsonl", "20000", "1");
    gen(d, "test.jsonl", "20000", "2");
    let out = massart(
        &["train", "sgd", "--data", "train.jsonl", "--eps", "0.1", "--out", "m.json"],
        d,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(model["format"], "massart-model/v1");
    assert_eq!(model["dim"], 5);
    assert_eq!(model["draws_used"], 20000);

    let out = massart(&["eval", "--model", "m.json", "--data", "test.jsonl"], d);
    assert_eq!(code(&out), 0);
    let err: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(err <= 0.1 + 0.1, "test error {err}");
}

#[test]
fn cutting_planes_model_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "test.jsonl", "5000", "2");
    let out = massart(
        &[
            "train", "cp", "--online", "--dim", "5", "--gamma", "0.2", "--eta", "0.1", "--noise", "boundary:0.3",
            "--instance-seed", "11", "--seed", "3", "--eps", "0.2", "--oracle-samples", "20000", "--out", "cp.json",
            "--diagnostics", "cp.diag.json",
        ],
        d,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("cp.json")).unwrap()).unwrap();
    assert_eq!(model["method"], "cutting-planes");
    let diag: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("cp.diag.json")).unwrap()).unwrap();
    assert!(diag["cuts"].is_array());
    let out = massart(&["eval", "--model", "cp.json", "--data", "test.jsonl"], d);
    assert_eq!(code(&out), 0);
}

#[test]
fn structural_diagnostic_is_nonnegative() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "d.jsonl", "1000", "4");
    let out = massart(&["diag", "structural", "--data", "d.jsonl", "--trials", "25"], dir.path());
    assert_eq!(code(&out), 0);
    let gap: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(gap >= -1e-9, "gap {gap}");
}

#[test]
fn bench_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("c.toml"),
        r#"
trials = 2
eval_n = 1000
master_seed = 5

[instance]
dim = 4
gamma = 0.2
eta = 0.1
noise = "hash"

[learner]
kind = "sgd"
epsilon = 0.2

[sweep]
n = [500, 2000]
"#,
    )
    .unwrap();
    let strip = |p: &str| -> String {
        let text = std::fs::read_to_string(d.join(p)).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let col = r.headers().unwrap().iter().position(|h| h == "wall_time_ms").unwrap();
        r.records()
            .map(|rec| {
                let rec = rec.unwrap();
                rec.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != col)
                    .map(|(_, f)| f)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    for (out, jobs) in [("a.csv", "1"), ("b.csv", "2")] {
        let o = massart(&["bench", "--config", "c.toml", "--out", out, "--jobs", jobs], d);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(strip("a.csv"), strip("b.csv"));
    assert_eq!(strip("a.csv").lines().count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.jsonl"), "{\"format\":\"other\"}\n").unwrap();
    std::fs::write(d.join("bad.toml"), "trials = 0\n").unwrap();
    gen(d, "small.jsonl", "50", "1");

    let out = massart(&["train", "sgd", "--data", "bad.jsonl", "--eps", "0.1", "--out", "m.json"], d);
    assert_eq!(code(&out), 3);
    let out = massart(&["bench", "--config", "bad.toml", "--out", "r.csv"], d);
    assert_eq!(code(&out), 2);
    let out = massart(&["train", "sgd", "--data", "small.jsonl", "--eps", "0.1", "--c", "0.5", "--out", "m.json"], d);
    assert_eq!(code(&out), 2);
    let out = massart(&["gen", "--dim", "3", "--n", "5", "--out", "x.jsonl"], d);
    assert_eq!(code(&out), 2);
    let out = massart(
        &["train", "sgd", "--data", "small.jsonl", "--eps", "0.1", "--iterations", "500", "--out", "m.json"],
        d,
    );
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("more examples needed"));
    let out = massart(&["eval", "--model", "missing.json", "--data", "small.jsonl"], d);
    assert_eq!(code(&out), 3);
}
