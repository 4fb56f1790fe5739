use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use editforge_core::audio::save_wav;
use editforge_core::audio::synth::sine;
use editforge_core::manifest::{read_manifest, Method};
use serde_json::Value;

const CAPTIONS: [&str; 10] = [
    "A man speaks as birds chirp",
    "A car accelerates",
    "Rain falls on a roof",
    "A dog barks while a cat meows",
    "Wind blows",
    "A bell rings",
    "A crowd cheers",
    "A man speaks while birds chirp and a dog barks",
    "Water flows, birds sing and wind blows",
    "Thunder rumbles as rain falls with a siren wailing",
];

fn editforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_editforge"))
        .args(args)
        .env_remove("EDITFORGE_SEED")
        .env_remove("EDITFORGE_LLM")
        .env_remove("EDITFORGE_GENERATOR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes tone clips with the given captions and a CSV corpus listing them.
fn corpus(dir: &Path, captions: &[&str]) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let mut csv = String::from("clip,caption,element_count\n");
    for (i, c) in captions.iter().enumerate() {
        let secs = 0.5 + 0.3 * (i % 4) as f64;
        let name = format!("clip{i}.wav");
        save_wav(&sine(200.0 + 90.0 * i as f64, 0.3, secs, 44_100, 2), dir.join(&name)).unwrap();
        let elements = if i % 3 == 0 { 2 } else { 1 };
        csv += &format!("{name},\"{c}\",{elements}\n");
    }
    let path = dir.join("corpus.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

#[test]
fn empty_corpus_succeeds_with_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("corpus.csv");
    std::fs::write(&c, "clip,caption\n").unwrap();
    let out = dir.path().join("prompts.jsonl");
    let o = editforge(&["generate-prompts", "--corpus", s(&c), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    assert_eq!(stdout_json(&o)["kept"], 0);
}

#[test]
fn ten_captions_keep_seven_and_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(&dir.path().join("src"), &CAPTIONS);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = editforge(&["generate-prompts", "--corpus", s(&c), "--out", s(&out), "--seed", "4"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (stdout_json(&o), std::fs::read(&out).unwrap())
    };
    let (summary, a) = run("a.jsonl");
    assert_eq!((summary["kept"].as_u64(), summary["rejected"].as_u64()), (Some(7), Some(3)));
    let (_, b) = run("b.jsonl");
    assert_eq!(a, b);
}

#[test]
fn exit_codes_separate_usage_backend_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let missing = editforge(&["generate-prompts", "--corpus", "/no/such/corpus.csv", "--out", s(&out)]);
    assert_eq!(code(&missing), 2);
    assert_eq!(code(&editforge(&["generate-prompts"])), 2);
    assert_eq!(code(&editforge(&["no-such-command"])), 2);

    let c = corpus(&dir.path().join("src"), &CAPTIONS[..2]);
    let bad_llm = editforge(&["generate-prompts", "--corpus", s(&c), "--out", s(&out), "--llm", "telnet://x"]);
    assert_eq!(code(&bad_llm), 2);
    let unreachable = Command::new(env!("CARGO_BIN_EXE_editforge"))
        .args(["generate-prompts", "--corpus", s(&c), "--out", s(&out), "--llm", "http://127.0.0.1:9"])
        .env("EDITFORGE_RETRIES", "0")
        .env("EDITFORGE_TIMEOUT_MS", "2000")
        .output()
        .unwrap();
    assert_eq!(code(&unreachable), 3, "{}", String::from_utf8_lossy(&unreachable.stderr));

    let manifest = dir.path().join("broken.jsonl");
    std::fs::write(&manifest, "{not json}\n").unwrap();
    assert_eq!(code(&editforge(&["verify", "--manifest", s(&manifest)])), 4);
}

#[test]
fn config_file_sits_between_env_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(&dir.path().join("src"), &CAPTIONS[..3]);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "llm = \"http://127.0.0.1:9\"\nretries = 0\n").unwrap();
    let out = dir.path().join("p.jsonl");
    let from_file = editforge(&["--config", s(&cfg), "generate-prompts", "--corpus", s(&c), "--out", s(&out)]);
    assert_eq!(code(&from_file), 3);
    let flag_wins =
        editforge(&["--config", s(&cfg), "--llm", "mock", "generate-prompts", "--corpus", s(&c), "--out", s(&out)]);
    assert_eq!(code(&flag_wins), 0, "{}", String::from_utf8_lossy(&flag_wins.stderr));
    std::fs::write(&cfg, "lm = \"mock\"\n").unwrap();
    let typo = editforge(&["--config", s(&cfg), "generate-prompts", "--corpus", s(&c), "--out", s(&out)]);
    assert_eq!(code(&typo), 2);
}

#[test]
fn full_pipeline_through_assembly_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let captions = ["Rain falls on a roof", "A dog barks", "A bell rings", "Wind blows", "A crowd cheers", "A car accelerates"];
    let c = corpus(&dir.path().join("src"), &captions);
    let work = dir.path().join("work");
    std::fs::create_dir_all(&work).unwrap();
    let p = |n: &str| work.join(n);
    let ok = |args: &[&str]| {
        let o = editforge(args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        stdout_json(&o)
    };

    ok(&["--seed", "9", "generate-prompts", "--corpus", s(&c), "--out", s(&p("prompts.jsonl"))]);
    let cands =
        ok(&["--seed", "9", "candidate-search", "--prompts", s(&p("prompts.jsonl")), "--out", s(&p("cands.jsonl"))]);
    assert!(cands["chosen"].as_u64().unwrap() >= 1, "{cands}");
    let p2p = ok(&[
        "--seed", "9", "optimize-p2p", "--candidates", s(&p("cands.jsonl")), "--manifest", s(&p("p2p.jsonl")),
        "--trials", "2",
    ]);
    assert!(p2p["written"].as_u64().unwrap() >= 1, "{p2p}");
    let ddpm = ok(&[
        "--seed", "9", "optimize-ddpm", "--prompts", s(&p("prompts.jsonl")), "--manifest", s(&p("ddpm.jsonl")),
        "--trials", "2",
    ]);
    assert_eq!(ddpm["written"], 6, "{ddpm}");
    let manual = ok(&["--seed", "9", "make-manual", "--corpus", s(&c), "--count", "12", "--manifest", s(&p("manual.jsonl"))]);
    assert!(manual["written"].as_u64().unwrap() >= 3, "{manual}");

    let assemble = |out: &Path| {
        ok(&[
            "--seed", "2", "assemble", "--p2p", s(&p("p2p.jsonl")), "--ddpm", s(&p("ddpm.jsonl")), "--manual",
            s(&p("manual.jsonl")), "--total", "3", "--out", s(out),
        ])
    };
    let summary = assemble(&dir.path().join("ds1.jsonl"));
    assemble(&dir.path().join("ds2.jsonl"));
    assert_eq!(summary["total"], 3);
    assert_eq!(
        std::fs::read(dir.path().join("ds1.jsonl")).unwrap(),
        std::fs::read(dir.path().join("ds2.jsonl")).unwrap()
    );
    let records = read_manifest(&dir.path().join("ds1.jsonl")).unwrap();
    for m in Method::ALL {
        assert_eq!(records.iter().filter(|r| r.method == m).count(), 1);
    }
    let report = ok(&["verify", "--manifest", s(&dir.path().join("ds1.jsonl"))]);
    assert_eq!(report["failed"], 0);
    let stats = ok(&["stats", "--manifest", s(&p("manual.jsonl"))]);
    assert_eq!(stats["total"], manual["written"]);

    let too_many = editforge(&[
        "assemble", "--p2p", s(&p("p2p.jsonl")), "--ddpm", s(&p("ddpm.jsonl")), "--manual", s(&p("manual.jsonl")),
        "--total", "300", "--out", s(&dir.path().join("big.jsonl")),
    ]);
    assert_eq!(code(&too_many), 4);

    let manual_path = p("manual.jsonl");
    let m = s(&manual_path);
    let table = ok(&["evaluate", "--manifest", m, "--original", m, "--regenerated", m]);
    let cols: Vec<&str> = table["columns"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(cols, ["FD", "LSD", "KL", "IS", "CLAP"]);
    let sig: Vec<&str> = table["signal_columns"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(sig, ["STFT", "MR-STFT", "MR-MEL", "SI-SDR", "SI-SNR"]);
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["values"]["LSD"].as_f64(), Some(0.0));
        assert!(row["values"]["FD"].as_f64().unwrap().abs() < 1e-6);
        assert!(row["values"]["KL"].as_f64().unwrap().abs() < 1e-9);
    }
    let bare = ok(&["--classifier", "none", "--embedder", "none", "evaluate", "--manifest", m, "--original", m]);
    for col in ["FD", "KL", "IS", "CLAP"] {
        assert_eq!(bare["rows"][0]["values"][col], "unavailable");
    }
    assert_eq!(bare["rows"][0]["values"]["LSD"].as_f64(), Some(0.0));
    let text = editforge(&["evaluate", "--manifest", m, "--original", m, "--format", "text"]);
    assert_eq!(code(&text), 0);
    assert!(String::from_utf8_lossy(&text.stdout).contains("SI-SDR"));
}
