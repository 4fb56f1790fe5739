//! Run settings merged from environment, a TOML file and command-line flags,
//! in increasing order of precedence.

use std::path::Path;

use serde::Deserialize;

use editforge_core::Error;

/// Every setting is optional so layers can be overlaid.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    /// `synthetic:<profile>` or an http(s) endpoint.
    pub generator: Option<String>,
    /// `mock` or an http(s) endpoint.
    pub llm: Option<String>,
    pub llm_model: Option<String>,
    /// `mock` or an http(s) endpoint.
    pub judge: Option<String>,
    /// Scoring instructions sent to a remote judge.
    pub judge_rubric: Option<String>,
    /// `mock`, `none` or an http(s) endpoint.
    pub embedder: Option<String>,
    pub embedder_dimension: Option<usize>,
    /// `mock` or `none`.
    pub classifier: Option<String>,
    /// Requests per second shared by all remote clients.
    pub rate_limit: Option<f64>,
    pub timeout_ms: Option<u64>,
    pub retries: Option<u32>,
    pub weights: Option<[f64; 4]>,
    pub p2p_trials: Option<usize>,
    pub ddpm_trials: Option<usize>,
    pub candidate_pairs: Option<usize>,
}

pub const ENV_PREFIX: &str = "EDITFORGE_";

macro_rules! overlay {
    ($dst:ident, $src:ident: $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

fn parse<T: std::str::FromStr>(key: &str, v: String) -> Result<T, Error> {
    v.trim().parse().map_err(|_| Error::Config(format!("{ENV_PREFIX}{key}: cannot parse {v:?}")))
}

impl Settings {
    /// Reads `EDITFORGE_*` variables through `get`.
    pub fn from_env(get: impl Fn(&str) -> Option<String>) -> Result<Self, Error> {
        let var = |k: &str| get(&format!("{ENV_PREFIX}{k}")).filter(|v| !v.trim().is_empty());
        let num = |k: &str| var(k).map(|v| parse(k, v)).transpose();
        Ok(Self {
            seed: num("SEED")?,
            generator: var("GENERATOR"),
            llm: var("LLM"),
            llm_model: var("LLM_MODEL"),
            judge: var("JUDGE"),
            judge_rubric: var("JUDGE_RUBRIC"),
            embedder: var("EMBEDDER"),
            embedder_dimension: var("EMBEDDER_DIMENSION").map(|v| parse("EMBEDDER_DIMENSION", v)).transpose()?,
            classifier: var("CLASSIFIER"),
            rate_limit: var("RATE_LIMIT").map(|v| parse("RATE_LIMIT", v)).transpose()?,
            timeout_ms: var("TIMEOUT_MS").map(|v| parse("TIMEOUT_MS", v)).transpose()?,
            retries: var("RETRIES").map(|v| parse("RETRIES", v)).transpose()?,
            ..Self::default()
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Values set in `top` replace ours.
    pub fn overlay(mut self, top: &Settings) -> Self {
        overlay!(self, top: seed, generator, llm, llm_model, judge, judge_rubric, embedder, embedder_dimension,
            classifier, rate_limit, timeout_ms, retries, weights, p2p_trials, ddpm_trials, candidate_pairs);
        self
    }
}

/// API key for a backend role, from `EDITFORGE_<ROLE>_API_KEY`.
pub fn api_key(role: &str, get: impl Fn(&str) -> Option<String>) -> Option<String> {
    get(&format!("{ENV_PREFIX}{}_API_KEY", role.to_ascii_uppercase())).filter(|k| !k.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_env() {
        let env = |k: &str| match k {
            "EDITFORGE_SEED" => Some("1".to_string()),
            "EDITFORGE_LLM" => Some("http://env".to_string()),
            "EDITFORGE_JUDGE" => Some("mock".to_string()),
            _ => None,
        };
        let env = Settings::from_env(env).unwrap();
        let file = Settings::from_toml("seed = 2\nllm = \"http://file\"\np2p_trials = 4\n").unwrap();
        let flags = Settings { seed: Some(3), ..Settings::default() };
        let s = env.overlay(&file).overlay(&flags);
        assert_eq!(s.seed, Some(3));
        assert_eq!(s.llm.as_deref(), Some("http://file"));
        assert_eq!(s.judge.as_deref(), Some("mock"));
        assert_eq!(s.p2p_trials, Some(4));
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(Settings::from_toml("sed = 1").is_err());
        let env = |k: &str| (k == "EDITFORGE_SEED").then(|| "x".to_string());
        assert!(matches!(Settings::from_env(env), Err(Error::Config(_))));
    }
}
