//! Text pipeline: lowercase, split on non-alphanumeric runs, optional
//! suffix stemming. Stopwords are never removed here — the index keeps the
//! full token stream and filtering happens at query-side unigram scoring only.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stemmer {
    None,
    /// Strip one trailing 's' when the token is longer than three chars and
    /// does not end in "ss". Idempotent on its own output, which keeps
    /// tokenize re-applicable.
    SimpleSuffix,
}

impl Stemmer {
    pub fn apply(self, token: &str) -> String {
        match self {
            Stemmer::None => token.to_string(),
            Stemmer::SimpleSuffix => {
                if token.len() > 3 && token.ends_with('s') && !token.ends_with("ss") {
                    token[..token.len() - 1].to_string()
                } else {
                    token.to_string()
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub stemmer: Stemmer,
    /// Matched against post-pipeline terms at unigram scoring time.
    pub stopwords: BTreeSet<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lowercase: true,
            stemmer: Stemmer::SimpleSuffix,
            stopwords: BTreeSet::new(),
        }
    }
}

impl PipelineConfig {
    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }
}

/// Lowercase, split on runs of non-alphanumeric characters, stem, drop empties.
pub fn tokenize(raw_text: &str, cfg: &PipelineConfig) -> Vec<String> {
    let lowered;
    let text = if cfg.lowercase {
        lowered = raw_text.to_lowercase();
        &lowered
    } else {
        raw_text
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| cfg.stemmer.apply(s))
        .collect()
}

/// One term per line; blank lines and '#' comments ignored. Terms are passed
/// through the same pipeline so the list matches post-stem query terms.
pub fn load_stopwords(path: &Path, cfg: &PipelineConfig) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut set = BTreeSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in tokenize(line, cfg) {
            set.insert(tok);
        }
    }
    Ok(set)
}
