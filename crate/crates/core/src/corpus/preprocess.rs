use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::lexicon::{builtin_sources, english_lemmas, english_stopwords};
use super::{CorpusError, ProcessedDocument, RawDocument};
use crate::digest::FieldDigest;

/// Which shipped list a config starts from before its own additions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LexiconBase {
    #[default]
    English,
    None,
}

fn default_min_token_len() -> usize {
    3
}

fn default_join_char() -> char {
    '_'
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Exact phrases deleted from the lowercased text, e.g. `design/methodology/approach`.
    #[serde(default)]
    pub structural_phrases: Vec<String>,
    /// Terms removed like stopwords, e.g. the search keyword.
    #[serde(default)]
    pub removal_terms: Vec<String>,
    /// Multiword expressions joined into one token (`supply chain` -> `supply_chain`).
    #[serde(default)]
    pub collocations: Vec<String>,
    #[serde(default)]
    pub stopword_base: LexiconBase,
    /// Custom stopwords added to the base list.
    #[serde(default)]
    pub stopwords: Vec<String>,
    #[serde(default)]
    pub lemma_base: LexiconBase,
    /// Extra surface-form -> lemma entries; these override the base dictionary.
    #[serde(default)]
    pub lemmas: BTreeMap<String, String>,
    #[serde(default = "default_min_token_len")]
    pub min_token_len: usize,
    #[serde(default = "default_join_char")]
    pub join_char: char,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            structural_phrases: Vec::new(),
            removal_terms: Vec::new(),
            collocations: Vec::new(),
            stopword_base: LexiconBase::English,
            stopwords: Vec::new(),
            lemma_base: LexiconBase::English,
            lemmas: BTreeMap::new(),
            min_token_len: default_min_token_len(),
            join_char: default_join_char(),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InvalidConfig(msg));
        if self.min_token_len < 1 {
            return bad("min_token_len must be at least 1".into());
        }
        if self.join_char.is_alphanumeric() || self.join_char.is_whitespace() || self.join_char == '-' {
            return bad(format!("join_char {:?} must be a non-alphanumeric, non-space, non-hyphen character", self.join_char));
        }
        for c in &self.collocations {
            if c.split_whitespace().count() < 2 {
                return bad(format!("collocation `{c}` needs at least two words"));
            }
        }
        let texts = self
            .structural_phrases
            .iter()
            .chain(&self.removal_terms)
            .chain(&self.collocations)
            .chain(&self.stopwords)
            .chain(self.lemmas.keys())
            .chain(self.lemmas.values());
        for t in texts {
            if t.trim().is_empty() {
                return bad("config lists may not contain empty entries".into());
            }
            if *t != t.to_lowercase() {
                return bad(format!("config text must be lowercase: `{t}`"));
            }
        }
        Ok(())
    }
}

/// A validated config with its word lists materialized.
///
/// Stages, in order:
/// 1. NFKC normalization and lowercasing
/// 2. deletion of structural phrases
/// 3. tokenization: letters and the join character are kept, digits are
///    dropped in place, hyphens are held inside tokens, everything else splits
/// 4. collocation joining (longest match first), then hyphen splitting
/// 5. stopword and removal-term deletion
/// 6. lemmatization of single words (joined collocations keep their
///    configured form); a token whose lemma is a stopword or removal term
///    is dropped
/// 7. length filter
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    phrases: Vec<String>,
    collocations: HashMap<String, Vec<Vec<String>>>,
    blocked: HashSet<String>,
    lemmas: HashMap<String, String>,
    fingerprint: String,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Result<Self, CorpusError> {
        config.validate()?;

        let mut phrases = config.structural_phrases.clone();
        phrases.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        phrases.dedup();

        let mut collocations: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for c in &config.collocations {
            let words: Vec<String> = c.split_whitespace().map(str::to_owned).collect();
            collocations.entry(words[0].clone()).or_default().push(words);
        }
        for group in collocations.values_mut() {
            group.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
            group.dedup();
        }

        let mut blocked: HashSet<String> = config.stopwords.iter().cloned().collect();
        if config.stopword_base == LexiconBase::English {
            blocked.extend(english_stopwords().iter().map(|s| s.to_string()));
        }
        blocked.extend(config.removal_terms.iter().cloned());

        let mut raw: HashMap<String, String> = HashMap::new();
        if config.lemma_base == LexiconBase::English {
            raw.extend(english_lemmas().iter().map(|(k, v)| (k.to_string(), v.to_string())));
        }
        raw.extend(config.lemmas.iter().map(|(k, v)| (k.clone(), v.clone())));
        let lemmas = resolve_lemma_chains(raw);

        let fingerprint = fingerprint(&config);
        Ok(Preprocessor { config, phrases, collocations, blocked, lemmas, fingerprint })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    /// Digest of the resolved config, including the contents of any built-in list it uses.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn run(&self, doc: &RawDocument) -> ProcessedDocument {
        ProcessedDocument { id: doc.id.clone(), tokens: self.tokens(&doc.text) }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let join = self.config.join_char;

        let mut text: String = text.nfkc().collect::<String>().to_lowercase();

        for phrase in &self.phrases {
            if text.contains(phrase.as_str()) {
                text = text.replace(phrase.as_str(), " ");
            }
        }

        let mut raw_tokens = Vec::new();
        let mut current = String::new();
        for c in text.chars() {
            if c.is_alphabetic() || c == join || c == '-' {
                current.push(c);
            } else if c.is_numeric() {
                // dropped without splitting the surrounding word
            } else if !current.is_empty() {
                raw_tokens.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            raw_tokens.push(current);
        }

        let mut tokens = Vec::with_capacity(raw_tokens.len());
        let mut i = 0;
        while i < raw_tokens.len() {
            if let Some(len) = self.collocation_at(&raw_tokens[i..]) {
                let joined = raw_tokens[i..i + len].join(&join.to_string()).replace('-', &join.to_string());
                tokens.push(joined);
                i += len;
            } else {
                tokens.extend(raw_tokens[i].split('-').filter(|p| !p.is_empty() && *p != join.to_string()).map(str::to_owned));
                i += 1;
            }
        }

        tokens
            .into_iter()
            .filter(|t| !self.blocked.contains(t))
            .filter_map(|t| {
                let lemma = self.lemmatize(&t);
                (!self.blocked.contains(&lemma)).then_some(lemma)
            })
            .filter(|t| t.chars().count() >= self.config.min_token_len)
            .collect()
    }

    fn collocation_at(&self, tokens: &[String]) -> Option<usize> {
        let candidates = self.collocations.get(&tokens[0])?;
        candidates
            .iter()
            .find(|words| words.len() <= tokens.len() && words.iter().zip(tokens).all(|(w, t)| w == t))
            .map(Vec::len)
    }

    fn lemmatize(&self, token: &str) -> String {
        if token.contains(self.config.join_char) {
            return token.to_owned();
        }
        self.lemmas.get(token).cloned().unwrap_or_else(|| token.to_owned())
    }
}

/// Follows `a -> b -> c` chains to their end so lemmatization is idempotent.
/// Members of a cycle all map to the cycle's smallest member.
fn resolve_lemma_chains(raw: HashMap<String, String>) -> HashMap<String, String> {
    let mut resolved = HashMap::with_capacity(raw.len());
    for start in raw.keys() {
        let mut path = vec![start.as_str()];
        let mut current = start.as_str();
        let end = loop {
            match raw.get(current) {
                Some(next) if path.contains(&next.as_str()) => {
                    let pos = path.iter().position(|p| *p == next.as_str()).unwrap();
                    break path[pos..].iter().min().copied().unwrap();
                }
                Some(next) => {
                    path.push(next);
                    current = next;
                }
                None => break current,
            }
        };
        if end != start {
            resolved.insert(start.clone(), end.to_owned());
        }
    }
    resolved
}

fn fingerprint(config: &PreprocessConfig) -> String {
    let mut d = FieldDigest::new();
    d.field(serde_json::to_string(config).expect("config serializes").as_bytes());
    let (stop, lemmas) = builtin_sources();
    if config.stopword_base == LexiconBase::English {
        d.field(stop.as_bytes());
    }
    if config.lemma_base == LexiconBase::English {
        d.field(lemmas.as_bytes());
    }
    d.finish()
}

/// One-shot convenience over [`Preprocessor`].
pub fn preprocess(doc: &RawDocument, config: &PreprocessConfig) -> Result<ProcessedDocument, CorpusError> {
    Ok(Preprocessor::new(config.clone())?.run(doc))
}
