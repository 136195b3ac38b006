//! Run configuration: TOML file values overlaid by command-line flags, on top
//! of built-in defaults.
//!
//! ```toml
//! corpus = "data/corpus.jsonl"
//! queries = "data/queries.jsonl"
//! index = "index/nq-sentence"
//! out_dir = "runs/nq"
//! mode = "sentence"
//! alpha = 0.8
//! k = 30
//! ks = [1, 5, 10, 20, 30]
//! threads = 8
//!
//! [encoder]
//! backend = "http"
//! endpoint = "http://localhost:8080/embed"
//! dim = 768
//!
//! [gen]
//! endpoint = "http://localhost:8000/v1/chat/completions"
//! model = "llama-2-7b-chat"
//! ```

use std::path::{Path, PathBuf};

use pareto_core::{Alpha, IndexMode};
use serde::{Deserialize, Serialize};

use crate::encoders::EncoderConfig;
use crate::error::{Error, Result};
use crate::genclient::GenConfig;

pub const DEFAULT_ALPHA: f64 = 0.8;
pub const DEFAULT_K: usize = 30;
pub const DEFAULT_BUDGET_WORDS: usize = 400;
pub const DEFAULT_KS: &[usize] = &[1, 5, 10, 20, 30];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricToggles {
    /// Write `histogram.json` next to the report.
    pub histogram: bool,
    /// Write `results.jsonl` next to the report.
    pub results: bool,
}

impl Default for MetricToggles {
    fn default() -> Self {
        Self {
            histogram: true,
            results: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub mode: Option<IndexMode>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub budget_words: Option<usize>,
    pub ks: Option<Vec<usize>>,
    pub threads: Option<usize>,
    pub metrics: MetricToggles,
    pub encoder: EncoderConfig,
    pub gen: GenConfig,
}

/// How many items to retrieve per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    TopK(usize),
    Budget(usize),
}

impl Limit {
    pub fn k(self) -> Option<usize> {
        match self {
            Limit::TopK(k) => Some(k),
            Limit::Budget(_) => None,
        }
    }

    pub fn budget(self) -> Option<usize> {
        match self {
            Limit::TopK(_) => None,
            Limit::Budget(b) => Some(b),
        }
    }
}

/// Inputs a subcommand cannot run without.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Need {
    Corpus,
    Queries,
    Index,
    Gen,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))
    }

    pub fn mode(&self) -> IndexMode {
        self.mode.unwrap_or(IndexMode::Sentence)
    }

    pub fn alpha_value(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }

    /// Alpha for sentence mode; `None` in passage mode.
    pub fn alpha(&self) -> Result<Option<Alpha>> {
        match self.mode() {
            IndexMode::Sentence => Ok(Some(Alpha::new(self.alpha_value())?)),
            IndexMode::Passage => Ok(None),
        }
    }

    pub fn limit(&self) -> Limit {
        match (self.k, self.budget_words) {
            (_, Some(b)) if self.k.is_none() => Limit::Budget(b),
            (Some(k), _) => Limit::TopK(k),
            _ => Limit::TopK(DEFAULT_K),
        }
    }

    pub fn ks(&self) -> Vec<usize> {
        self.ks.clone().unwrap_or_else(|| DEFAULT_KS.to_vec())
    }

    /// `flag` if given, else `<out_dir>/<name>`.
    pub fn output(&self, flag: Option<&Path>, name: &str) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out_dir.as_ref().map(|d| d.join(name)))
    }

    /// Every violation for a subcommand needing `needs`, not just the first.
    pub fn violations(&self, needs: &[Need]) -> Vec<String> {
        let mut v = Vec::new();
        let require = |v: &mut Vec<String>, field: &Option<PathBuf>, name: &str, flag: &str| {
            if field.is_none() {
                v.push(format!("{name} is required (--{flag} or `{name}` in the config file)"));
            }
        };
        for need in needs {
            match need {
                Need::Corpus => require(&mut v, &self.corpus, "corpus", "corpus"),
                Need::Queries => require(&mut v, &self.queries, "queries", "queries"),
                Need::Index => require(&mut v, &self.index, "index", "index"),
                Need::Gen => v.extend(self.gen.violations()),
            }
        }
        let alpha = self.alpha_value();
        if !(0.0..=1.0).contains(&alpha) {
            v.push(format!("alpha must lie in [0, 1], got {alpha}"));
        }
        if self.k.is_some() && self.budget_words.is_some() {
            v.push("set exactly one of k and budget_words".to_string());
        }
        if self.k == Some(0) {
            v.push("k must be >= 1".to_string());
        }
        if self.budget_words == Some(0) {
            v.push("budget_words must be >= 1".to_string());
        }
        if let Some(ks) = &self.ks {
            if ks.is_empty() || ks.contains(&0) {
                v.push("ks must be a nonempty list of values >= 1".to_string());
            }
        }
        if self.threads == Some(0) {
            v.push("threads must be >= 1".to_string());
        }
        v.extend(self.encoder.violations());
        v
    }

    pub fn validate(&self, needs: &[Need]) -> Result<()> {
        let v = self.violations(needs);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}
