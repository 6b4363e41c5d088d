//! Experiment manifest: a TOML file describing dataset paths, tokenizer
//! and backend settings, the evaluation grid, and the output directory.
//! Relative paths are resolved against the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use pcr_core::eval::FMode;
use pcr_core::tokenize::{TokenizerConfig, TokenizerMode};

use crate::CliError;

/// Environment variables overriding `[embedding]` endpoint settings.
pub const ENV_EMBED_URL: &str = "PCR_EMBED_URL";
pub const ENV_EMBED_MODEL: &str = "PCR_EMBED_MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Bm25,
    Dense,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendKind::Bm25 => "bm25",
            BackendKind::Dense => "dense",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bm25" => Ok(BackendKind::Bm25),
            "dense" => Ok(BackendKind::Dense),
            other => Err(format!(
                "unknown backend {other:?} (expected bm25 or dense)"
            )),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub backend: BackendKind,
    #[serde(default = "default_true")]
    pub exclude_self: bool,
    #[serde(default)]
    pub k_grid: Option<Vec<usize>>,
    pub dataset: DatasetPaths,
    #[serde(default)]
    pub tokenizer: TokenizerSection,
    #[serde(default)]
    pub bm25: Bm25Section,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_name() -> String {
    "dataset".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub queries: PathBuf,
    pub candidates: PathBuf,
    pub qrels: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerSection {
    #[serde(default)]
    pub mode: TokenizerMode,
    #[serde(default = "default_true")]
    pub lowercase: bool,
    #[serde(default)]
    pub stopwords_path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bm25Section {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Section {
    fn default() -> Self {
        Bm25Section { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Mock,
    Http,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub provider: ProviderKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_max_input_words")]
    pub max_input_words: usize,
    #[serde(default)]
    pub pooling: PoolingSection,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            provider: ProviderKind::Mock,
            dim: default_dim(),
            url: None,
            model: None,
            batch_size: default_batch_size(),
            max_in_flight: default_in_flight(),
            max_input_words: default_max_input_words(),
            pooling: PoolingSection::default(),
        }
    }
}

fn default_dim() -> usize {
    256
}

fn default_batch_size() -> usize {
    8
}

fn default_in_flight() -> usize {
    4
}

fn default_max_input_words() -> usize {
    32_000
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolingSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub chunk_words: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default)]
    pub f_mode: FMode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_tag")]
    pub tag: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
            tag: default_tag(),
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_tag() -> String {
    "pcr".into()
}

impl ProjectConfig {
    /// Parse a manifest and resolve its relative paths against the
    /// manifest's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: ProjectConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.dataset.queries = resolve(base, &config.dataset.queries);
        config.dataset.candidates = resolve(base, &config.dataset.candidates);
        config.dataset.qrels = resolve(base, &config.dataset.qrels);
        config.output.dir = resolve(base, &config.output.dir);
        if let Some(stopwords) = &config.tokenizer.stopwords_path {
            config.tokenizer.stopwords_path = Some(resolve(base, stopwords));
        }
        Ok(config)
    }

    /// Tokenizer settings with the stopword list loaded (one token per
    /// line, `#` comments allowed).
    pub fn tokenizer(&self) -> Result<TokenizerConfig, CliError> {
        let mut config = TokenizerConfig::new()
            .with_mode(self.tokenizer.mode)
            .with_lowercase(self.tokenizer.lowercase);
        if let Some(path) = &self.tokenizer.stopwords_path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read stopwords {}: {e}", path.display()))
            })?;
            let stopwords: HashSet<String> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect();
            config = config.with_stopwords(stopwords);
        }
        Ok(config)
    }

    pub fn index_path(&self) -> PathBuf {
        self.output.dir.join("index.pcrb")
    }

    pub fn store_path(&self, side: &str) -> PathBuf {
        self.output.dir.join(format!("{side}.pcrv"))
    }

    pub fn run_path(&self, backend: BackendKind) -> PathBuf {
        self.output.dir.join(format!("{}.run", backend.as_str()))
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
