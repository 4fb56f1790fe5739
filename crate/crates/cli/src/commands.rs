use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use editforge_core::bayesopt::StudyConfig;
use editforge_core::elo::StudyStore;
use editforge_core::evaluate::{evaluate, load_items, Backends, ReferenceMode};
use editforge_core::manifest::{assemble_files, manifest_stats, verify, DatasetSpec, Method};
use editforge_core::metrics::StftConfig;
use editforge_core::objective::ObjectiveWeights;
use editforge_core::pipeline::{
    apply_split, check_disjoint, generate_prompts, load_corpus, load_split, make_manual, optimize_ddpm, optimize_p2p,
    read_jsonl, run_candidate_search, write_jsonl, CandidateEntry, CorpusEntry, ManualOptions, PromptEntry,
    StudySummary,
};
use editforge_core::prompts::{CandidateSearchConfig, RetryPolicy};
use editforge_core::Error;

use crate::backends::BackendFactory;
use crate::config::Settings;
use crate::{server, CliError};

#[derive(Debug, Parser)]
#[command(name = "editforge", version, about = "Build, score and curate audio-editing triplets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. They override the config file, which
/// overrides `EDITFORGE_*` environment variables.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; each stage derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `synthetic:<profile>` or an http(s) endpoint.
    #[arg(long, global = true)]
    pub generator: Option<String>,
    /// `mock` or an http(s) endpoint.
    #[arg(long, global = true)]
    pub llm: Option<String>,
    /// `mock` or an http(s) endpoint.
    #[arg(long, global = true)]
    pub judge: Option<String>,
    /// `mock`, `none` or an http(s) endpoint.
    #[arg(long, global = true)]
    pub embedder: Option<String>,
    /// `mock` or `none`.
    #[arg(long, global = true)]
    pub classifier: Option<String>,
    /// Cap on remote requests per second, shared by all clients.
    #[arg(long, global = true)]
    pub rate_limit: Option<f64>,
    /// Objective weights as `out,dir,sim,mel`.
    #[arg(long, global = true, value_parser = parse_weights)]
    pub weights: Option<[f64; 4]>,
}

fn parse_weights(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 4 weights, got {}", v.len()))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn corpus captions into prompt triplets and drop multi-source prompts.
    GeneratePrompts {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict the corpus to the clips listed in this file.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Dataset name recorded on every triplet.
        #[arg(long, default_value = "corpus")]
        source: String,
    },
    /// Generate candidate pairs per prompt and keep the best judged one.
    CandidateSearch {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Tune attention-swap parameters per chosen candidate.
    OptimizeP2p {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Tune inversion-edit parameters per prompt on its corpus clip.
    OptimizeDdpm {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Build triplets with deterministic signal edits.
    MakeManual {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Another method's split that must not share clips with `--split`.
        #[arg(long, requires = "split")]
        disjoint_from: Option<PathBuf>,
    },
    /// Sample a mixed dataset from per-method manifests.
    Assemble {
        #[arg(long)]
        p2p: Option<PathBuf>,
        #[arg(long)]
        ddpm: Option<PathBuf>,
        #[arg(long)]
        manual: Option<PathBuf>,
        #[arg(long)]
        total: usize,
        #[arg(long)]
        out: PathBuf,
        /// Method shares, e.g. `p2p=0.5,ddpm=0.25,manual=0.25`; equal thirds by default.
        #[arg(long, value_parser = parse_proportions)]
        proportions: Option<BTreeMap<Method, f64>>,
    },
    /// Check every record of a manifest; exits with the data status on failures.
    Verify {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Summarise a manifest.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Score edited outputs against original and/or regenerated references.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        original: Option<PathBuf>,
        #[arg(long)]
        regenerated: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the pairwise listening-study API.
    EloServe {
        /// Directory holding one event log per study.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Clip references in studies resolve against this directory.
        #[arg(long, default_value = ".")]
        media_root: PathBuf,
        #[arg(long, default_value_t = 100)]
        snapshot_every: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

fn parse_proportions(s: &str) -> Result<BTreeMap<Method, f64>, String> {
    s.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("{kv:?}: expected method=share"))?;
            let m: Method = k.trim().parse().map_err(|e: Error| e.to_string())?;
            let p: f64 = v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?;
            Ok((m, p))
        })
        .collect()
}

fn require_input(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input {} does not exist", path.display())))
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn settings(global: &GlobalArgs) -> Result<Settings, CliError> {
    let env = Settings::from_env(|k| std::env::var(k).ok())?;
    let file = match &global.config {
        Some(p) => {
            require_input(p)?;
            Settings::from_file(p)?
        }
        None => Settings::default(),
    };
    let flags = Settings {
        seed: global.seed,
        generator: global.generator.clone(),
        llm: global.llm.clone(),
        judge: global.judge.clone(),
        embedder: global.embedder.clone(),
        classifier: global.classifier.clone(),
        rate_limit: global.rate_limit,
        weights: global.weights,
        ..Settings::default()
    };
    Ok(env.overlay(&file).overlay(&flags))
}

fn weights(s: &Settings) -> ObjectiveWeights {
    match s.weights {
        Some([out, dir, sim, mel]) => ObjectiveWeights { out, dir, sim, mel },
        None => ObjectiveWeights::default(),
    }
}

fn corpus(path: &Path, split: Option<&Path>) -> Result<Vec<CorpusEntry>, CliError> {
    require_input(path)?;
    let entries = load_corpus(path)?;
    match split {
        Some(s) => {
            require_input(s)?;
            Ok(apply_split(entries, &load_split(s)?))
        }
        None => Ok(entries),
    }
}

fn budget(trials: Option<usize>) -> Result<Option<usize>, CliError> {
    match trials {
        Some(0) => Err(CliError::Usage("trial budget must be positive".into())),
        t => Ok(t),
    }
}

fn study_outcome(summary: &StudySummary) -> Result<(), CliError> {
    print_json(summary)?;
    if summary.written == 0 && summary.existing == 0 && !summary.failures.is_empty() {
        return Err(CliError::TotalFailure(summary.failures[0].reason.clone()));
    }
    Ok(())
}

#[derive(Serialize)]
struct PromptReport {
    kept: usize,
    rejected: usize,
    failures: Vec<editforge_core::pipeline::ItemFailure>,
}

#[derive(Serialize)]
struct CandidateReport {
    prompts: usize,
    chosen: usize,
    exhausted: usize,
    failed: usize,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let s = settings(&cli.global)?;
    let seed = s.seed.unwrap_or(0);
    let factory = BackendFactory::new(s.clone())?;
    match cli.command {
        Command::GeneratePrompts { corpus: path, out, split, source } => {
            let entries = corpus(&path, split.as_deref())?;
            let llm = factory.llm()?;
            let summary = generate_prompts(&entries, &source, llm.as_ref(), RetryPolicy::default());
            write_jsonl(&out, &summary.kept)?;
            write_jsonl(&out.with_extension("rejected.jsonl"), &summary.rejected)?;
            print_json(&PromptReport {
                kept: summary.kept.len(),
                rejected: summary.rejected.len(),
                failures: summary.failures.clone(),
            })?;
            if !entries.is_empty() && summary.failures.len() == entries.len() {
                return Err(CliError::TotalFailure(summary.failures[0].reason.clone()));
            }
            Ok(())
        }
        Command::CandidateSearch { prompts, out, pairs } => {
            require_input(&prompts)?;
            let prompts: Vec<PromptEntry> = read_jsonl(&prompts)?;
            let mut config = CandidateSearchConfig::default();
            if let Some(p) = pairs.or(s.candidate_pairs) {
                if p == 0 {
                    return Err(CliError::Usage("pairs must be positive".into()));
                }
                config.pairs = p;
            }
            let (generator, judge, embedder) = (factory.generator()?, factory.judge()?, factory.required_embedder()?);
            let entries =
                run_candidate_search(&prompts, generator.as_ref(), judge.as_ref(), embedder.as_ref(), &config, seed);
            write_jsonl(&out, &entries)?;
            let exhausted_msg = Error::Exhausted.to_string();
            let exhausted = entries.iter().filter(|e| e.error.as_deref() == Some(exhausted_msg.as_str())).count();
            let chosen = entries.iter().filter(|e| e.search.is_some()).count();
            let failed = entries.len() - chosen - exhausted;
            print_json(&CandidateReport { prompts: entries.len(), chosen, exhausted, failed })?;
            if !entries.is_empty() && failed == entries.len() {
                let reason = entries[0].error.clone().unwrap_or_default();
                return Err(CliError::TotalFailure(reason));
            }
            Ok(())
        }
        Command::OptimizeP2p { candidates, manifest, trials } => {
            require_input(&candidates)?;
            let candidates: Vec<CandidateEntry> = read_jsonl(&candidates)?;
            let mut config = StudyConfig::p2p_default().with_seed(seed);
            config.weights = weights(&s);
            if let Some(t) = budget(trials.or(s.p2p_trials))? {
                config.trials = t;
            }
            let (generator, embedder) = (factory.generator()?, factory.required_embedder()?);
            study_outcome(&optimize_p2p(&candidates, generator.as_ref(), embedder.as_ref(), &config, &manifest)?)
        }
        Command::OptimizeDdpm { prompts, manifest, trials } => {
            require_input(&prompts)?;
            let prompts: Vec<PromptEntry> = read_jsonl(&prompts)?;
            let mut config = StudyConfig::zeta_default().with_seed(seed);
            config.weights = weights(&s);
            if let Some(t) = budget(trials.or(s.ddpm_trials))? {
                config.trials = t;
            }
            let (generator, embedder) = (factory.generator()?, factory.required_embedder()?);
            study_outcome(&optimize_ddpm(&prompts, generator.as_ref(), embedder.as_ref(), &config, &manifest)?)
        }
        Command::MakeManual { corpus: path, count, manifest, split, disjoint_from } => {
            if let (Some(a), Some(b)) = (&split, &disjoint_from) {
                require_input(a)?;
                require_input(b)?;
                check_disjoint(&load_split(a)?, &load_split(b)?)?;
            }
            let entries = corpus(&path, split.as_deref())?;
            let llm = factory.llm()?;
            let summary = make_manual(&entries, llm.as_ref(), &manifest, &ManualOptions::new(count, seed))?;
            print_json(&summary)?;
            if summary.written == 0 && summary.existing == 0 && !summary.failed.is_empty() {
                return Err(CliError::TotalFailure(summary.failed[0].reason.clone()));
            }
            Ok(())
        }
        Command::Assemble { p2p, ddpm, manual, total, out, proportions } => {
            let spec = match proportions {
                Some(proportions) => DatasetSpec { total, proportions },
                None => DatasetSpec::equal_thirds(total),
            };
            let mut pools = BTreeMap::new();
            for (m, p) in [(Method::P2p, p2p), (Method::Ddpm, ddpm), (Method::Manual, manual)] {
                if let Some(p) = p {
                    require_input(&p)?;
                    pools.insert(m, p);
                }
            }
            let records = assemble_files(&spec, &pools, &out, seed)?;
            let mut by_method: BTreeMap<Method, usize> = BTreeMap::new();
            for r in &records {
                *by_method.entry(r.method).or_default() += 1;
            }
            print_json(&serde_json::json!({ "total": records.len(), "by_method": by_method }))
        }
        Command::Verify { manifest } => {
            require_input(&manifest)?;
            let report = verify(&manifest)?;
            print_json(&report)?;
            if report.is_clean() {
                Ok(())
            } else {
                Err(CliError::DataCheck(format!("{} of {} records failed verification", report.failed, report.total)))
            }
        }
        Command::Stats { manifest } => {
            require_input(&manifest)?;
            print_json(&manifest_stats(&manifest)?)
        }
        Command::Evaluate { manifest, original, regenerated, format, out } => {
            require_input(&manifest)?;
            let mut refs: BTreeMap<ReferenceMode, &Path> = BTreeMap::new();
            if let Some(p) = &original {
                refs.insert(ReferenceMode::Original, p);
            }
            if let Some(p) = &regenerated {
                refs.insert(ReferenceMode::Regenerated, p);
            }
            if refs.is_empty() {
                return Err(CliError::Usage("give --original and/or --regenerated".into()));
            }
            for p in refs.values() {
                require_input(p)?;
            }
            let modes: Vec<ReferenceMode> = refs.keys().copied().collect();
            let items = load_items(&manifest, &refs)?;
            let (classifier, embedder) = (factory.classifier()?, factory.embedder()?);
            let backends = Backends { classifier: classifier.as_deref(), embedder: embedder.as_deref() };
            let table = evaluate(&items, &modes, backends, &StftConfig::default())?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&table).map_err(|e| Error::Format(e.to_string()))?,
                Format::Text => table.to_text(),
            };
            match out {
                Some(p) => std::fs::write(&p, text + "\n")
                    .map_err(|e| CliError::Core(Error::Io { path: p.clone(), source: e })),
                None => {
                    println!("{text}");
                    Ok(())
                }
            }
        }
        Command::EloServe { data, addr, media_root, snapshot_every } => {
            if snapshot_every == 0 {
                return Err(CliError::Usage("snapshot interval must be positive".into()));
            }
            require_input(&media_root)?;
            let store = StudyStore::open(&data)?.with_snapshot_every(snapshot_every);
            server::serve(store, media_root, addr)
        }
    }
}
