use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use editforge_core::audio::synth::sine;
use editforge_core::audio::save_wav;
use editforge_core::bayesopt::{TrialOutcome, TrialParams, TrialRecord, P2P_OPTIMUM};
use editforge_core::edits::{EditParams, EditTask};
use editforge_core::objective::MetricReport;
use editforge_core::prompts::PromptTriplet;
use editforge_core::manifest::{
    append_record, assemble, assemble_files, read_manifest, verify, write_manifest, DatasetSpec, Method,
    TripletRecord, CHECK_DURATION, CHECK_READABLE,
};
use editforge_core::Error;

fn wav(dir: &Path, name: &str, secs: f64) -> PathBuf {
    let path = dir.join(name);
    if !path.exists() {
        save_wav(&sine(440.0, 0.2, secs, 44_100, 2), &path).unwrap();
    }
    PathBuf::from(name)
}

fn prompt() -> PromptTriplet {
    PromptTriplet {
        input_caption: "Rain falls".into(),
        edit_instruction: "Add thunder".into(),
        output_caption: "Rain falls with thunder".into(),
        element_count: 1,
        negative_input: None,
        negative_output: None,
        source_dataset: "test".into(),
    }
}

fn trial() -> TrialRecord {
    let report = MetricReport { m_out: 0.5, m_dir: 0.4, m_sim: 0.9, m_mel: 1.0 };
    TrialRecord {
        index: 0,
        params: TrialParams::P2p(P2P_OPTIMUM),
        seed: 1,
        steps: 50,
        outcome: TrialOutcome::Scored { report, objective: 20.0 },
    }
}

fn record(dir: &Path, id: &str, method: Method) -> TripletRecord {
    let manual = method == Method::Manual;
    TripletRecord {
        id: id.into(),
        input_wav: wav(dir, "in.wav", 0.05),
        output_wav: wav(dir, "out.wav", 0.05),
        instruction: "Muffle the recording".into(),
        method,
        task: manual.then_some(EditTask::LowPass),
        edit_params: manual.then_some(EditParams::LowPass),
        source_captions: vec!["rain".into()],
        prompt: (!manual).then(prompt),
        trial: (!manual).then(trial),
        objective: (!manual).then_some(20.0),
        backends: BTreeMap::new(),
        created_unix_ms: 1,
    }
}

#[test]
fn append_then_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let r = record(dir.path(), "a", Method::Manual);
    append_record(&m, &r).unwrap();
    assert_eq!(read_manifest(&m).unwrap(), vec![r]);
}

#[test]
fn missing_wav_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let mut r = record(dir.path(), "a", Method::Manual);
    r.output_wav = "nope.wav".into();
    assert!(matches!(append_record(&m, &r), Err(Error::Validation(_))));
    assert!(!m.exists() || read_manifest(&m).unwrap().is_empty());
}

#[test]
fn partial_tail_is_dropped_before_append() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    append_record(&m, &record(dir.path(), "a", Method::Manual)).unwrap();
    std::fs::OpenOptions::new().append(true).open(&m).unwrap().write_all(b"{\"id\":\"tr").unwrap();
    append_record(&m, &record(dir.path(), "b", Method::Manual)).unwrap();
    let ids: Vec<String> = read_manifest(&m).unwrap().into_iter().map(|r| r.id).collect();
    assert_eq!(ids, ["a", "b"]);
}

#[test]
fn concurrent_writers_never_interleave() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    record(dir.path(), "warm", Method::Manual);
    std::thread::scope(|s| {
        for w in 0..2 {
            let (m, d) = (&m, dir.path());
            s.spawn(move || {
                for i in 0..1000 {
                    append_record(m, &record(d, &format!("w{w}-{i}"), Method::Manual)).unwrap();
                }
            });
        }
    });
    let text = std::fs::read_to_string(&m).unwrap();
    assert_eq!(text.lines().count(), 2000);
    let records = read_manifest(&m).unwrap();
    assert_eq!(records.len(), 2000);
    let ids: std::collections::HashSet<_> = records.iter().map(|r| r.id.clone()).collect();
    assert_eq!(ids.len(), 2000);
}

#[test]
fn verify_flags_long_outputs_and_counts_add_up() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let mut long = record(dir.path(), "long", Method::Manual);
    long.output_wav = wav(dir.path(), "long.wav", 48.0);
    let mut gone = record(dir.path(), "gone", Method::Manual);
    let recs = vec![record(dir.path(), "ok", Method::Manual), long, gone.clone()];
    write_manifest(&m, &recs).unwrap();
    gone.output_wav = "vanished.wav".into();
    let mut all = recs.clone();
    all[2] = gone;
    write_manifest(&m, &all).unwrap();
    std::fs::OpenOptions::new().append(true).open(&m).unwrap().write_all(b"not json\n").unwrap();

    let report = verify(&m).unwrap();
    assert_eq!(report.total, 4);
    assert_eq!(report.passed + report.failed, report.total);
    assert_eq!(report.passed, 1);
    assert!(report.flagged(2, CHECK_DURATION));
    assert!(report.flagged(3, CHECK_READABLE));
}

fn pools(dir: &Path, n: usize) -> BTreeMap<Method, Vec<TripletRecord>> {
    Method::ALL
        .iter()
        .map(|&m| (m, (0..n).map(|i| record(dir, &format!("{m}-{i}"), m)).collect()))
        .collect()
}

#[test]
fn assembly_mixes_equal_thirds_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let pools = pools(dir.path(), 50);
    let spec = DatasetSpec::equal_thirds(150);
    let a = assemble(&spec, &pools, 42).unwrap();
    let mut counts = BTreeMap::new();
    for r in &a {
        *counts.entry(r.method).or_insert(0) += 1;
    }
    assert_eq!(counts.values().copied().collect::<Vec<_>>(), [50, 50, 50]);
    let ids = |v: &[TripletRecord]| v.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&a), ids(&assemble(&spec, &pools, 42).unwrap()));
    assert_ne!(ids(&a), ids(&assemble(&spec, &pools, 43).unwrap()));
    let three = assemble(&DatasetSpec::equal_thirds(3), &self::pools(dir.path(), 1), 0).unwrap();
    assert_eq!(three.len(), 3);
}

#[test]
fn short_pool_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = pools(dir.path(), 10);
    p.get_mut(&Method::Manual).unwrap().truncate(5);
    let spec = DatasetSpec {
        total: 10,
        proportions: BTreeMap::from([(Method::Manual, 1.0), (Method::P2p, 0.0), (Method::Ddpm, 0.0)]),
    };
    match assemble(&spec, &p, 1) {
        Err(Error::Capacity(msg)) => assert!(msg.contains("manual"), "{msg}"),
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn assembled_file_verifies_and_replays_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = BTreeMap::new();
    for (m, recs) in pools(dir.path(), 4) {
        let p = dir.path().join(format!("{m}.jsonl"));
        let recs: Vec<TripletRecord> =
            recs.into_iter().map(|r| TripletRecord { method: Method::Manual, ..record(dir.path(), &r.id, Method::Manual) }).collect();
        write_manifest(&p, &recs).unwrap();
        paths.insert(m, p);
    }
    // Pools are tagged by method, so mislabelled records must be refused.
    let out = dir.path().join("out").join("all.jsonl");
    std::fs::create_dir_all(out.parent().unwrap()).unwrap();
    assert!(matches!(
        assemble_files(&DatasetSpec::equal_thirds(6), &paths, &out, 9),
        Err(Error::Validation(_))
    ));
    let paths: BTreeMap<Method, PathBuf> = Method::ALL
        .iter()
        .map(|&m| {
            let p = dir.path().join(format!("ok-{m}.jsonl"));
            write_manifest(&p, &(0..4).map(|i| record(dir.path(), &format!("{m}-{i}"), m)).collect::<Vec<_>>()).unwrap();
            (m, p)
        })
        .collect();
    assemble_files(&DatasetSpec::equal_thirds(6), &paths, &out, 9).unwrap();
    let first = std::fs::read(&out).unwrap();
    assemble_files(&DatasetSpec::equal_thirds(6), &paths, &out, 9).unwrap();
    assert_eq!(first, std::fs::read(&out).unwrap());
    assert!(verify(&out).unwrap().is_clean());
}
