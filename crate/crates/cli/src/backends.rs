use std::sync::Arc;

use editforge_core::bayesopt::{make_synthetic_backend, GeneratorBackend};
use editforge_core::metrics::{BandClassifier, BandEmbedder, Classifier, Embedder};
use editforge_core::prompts::{EmbeddingJudge, JudgeClient, LlmClient, MockLlm};
use editforge_core::remote::{
    HttpConfig, HttpTransport, JudgeRubric, RemoteEmbedder, RemoteGenerator, RemoteJudge, RemoteLlm, TokenBucket,
};
use editforge_core::Error;

use crate::config::{api_key, Settings};

fn real_env(k: &str) -> Option<String> {
    std::env::var(k).ok()
}

fn is_url(spec: &str) -> bool {
    spec.starts_with("http://") || spec.starts_with("https://")
}

/// Builds clients from settings; remote ones share one rate limiter.
pub struct BackendFactory {
    settings: Settings,
    bucket: Option<Arc<TokenBucket>>,
    env: fn(&str) -> Option<String>,
}

impl BackendFactory {
    pub fn new(settings: Settings) -> Result<Self, Error> {
        if settings.rate_limit.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return Err(Error::Config("rate_limit must be positive".into()));
        }
        let bucket = settings.rate_limit.map(|r| Arc::new(TokenBucket::new(r)));
        Ok(Self { settings, bucket, env: real_env })
    }

    fn http(&self, role: &str, endpoint: &str) -> Result<HttpConfig, Error> {
        let mut c = HttpConfig::new(endpoint);
        c.api_key = api_key(role, self.env);
        if let Some(t) = self.settings.timeout_ms {
            c.timeout_ms = t;
        }
        if let Some(r) = self.settings.retries {
            c.retries = r;
        }
        // Validated here so a bad URL is a usage problem, not a backend one.
        HttpTransport::new(c.clone())?;
        Ok(c)
    }

    pub fn generator(&self) -> Result<Box<dyn GeneratorBackend>, Error> {
        let spec = self.settings.generator.as_deref().unwrap_or("synthetic:bowl");
        if let Some(profile) = spec.strip_prefix("synthetic:") {
            return Ok(Box::new(make_synthetic_backend(profile)?));
        }
        if is_url(spec) {
            return Ok(Box::new(RemoteGenerator::new(spec, self.http("generator", spec)?)?.with_limiter(self.bucket.clone())));
        }
        Err(Error::Config(format!("generator {spec:?}: expected synthetic:<profile> or an http(s) URL")))
    }

    pub fn llm(&self) -> Result<Box<dyn LlmClient>, Error> {
        match self.settings.llm.as_deref().unwrap_or("mock") {
            "mock" => Ok(Box::new(MockLlm::new())),
            url if is_url(url) => {
                let model = self.settings.llm_model.clone().unwrap_or_else(|| url.to_string());
                Ok(Box::new(RemoteLlm::new(model, self.http("llm", url)?)?.with_limiter(self.bucket.clone())))
            }
            other => Err(Error::Config(format!("llm {other:?}: expected mock or an http(s) URL"))),
        }
    }

    pub fn judge(&self) -> Result<Box<dyn JudgeClient>, Error> {
        match self.settings.judge.as_deref().unwrap_or("mock") {
            "mock" => Ok(Box::new(EmbeddingJudge::default())),
            url if is_url(url) => {
                let rubric = self.settings.judge_rubric.clone().map(JudgeRubric).unwrap_or_default();
                Ok(Box::new(RemoteJudge::new(url, rubric, self.http("judge", url)?)?.with_limiter(self.bucket.clone())))
            }
            other => Err(Error::Config(format!("judge {other:?}: expected mock or an http(s) URL"))),
        }
    }

    /// `None` when the embedder is configured as `none`.
    pub fn embedder(&self) -> Result<Option<Box<dyn Embedder>>, Error> {
        match self.settings.embedder.as_deref().unwrap_or("mock") {
            "mock" => Ok(Some(Box::new(BandEmbedder::default()))),
            "none" => Ok(None),
            url if is_url(url) => {
                let dim = self.settings.embedder_dimension.ok_or_else(|| {
                    Error::Config("a remote embedder needs embedder_dimension".into())
                })?;
                Ok(Some(Box::new(RemoteEmbedder::new(url, dim, self.http("embedder", url)?)?.with_limiter(self.bucket.clone()))))
            }
            other => Err(Error::Config(format!("embedder {other:?}: expected mock, none or an http(s) URL"))),
        }
    }

    pub fn required_embedder(&self) -> Result<Box<dyn Embedder>, Error> {
        self.embedder()?.ok_or_else(|| Error::Config("this command needs an embedder".into()))
    }

    pub fn classifier(&self) -> Result<Option<Box<dyn Classifier>>, Error> {
        match self.settings.classifier.as_deref().unwrap_or("mock") {
            "mock" => Ok(Some(Box::new(BandClassifier::default()))),
            "none" => Ok(None),
            other => Err(Error::Config(format!("classifier {other:?}: expected mock or none"))),
        }
    }
}
