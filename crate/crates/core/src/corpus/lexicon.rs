//! Built-in word lists: a pinned English stopword snapshot and a
//! surface-form to lemma dictionary whose chains are already resolved to
//! fixed points.

use std::collections::HashMap;
use std::sync::OnceLock;

const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");
const LEMMAS_EN: &str = include_str!("../../data/lemmas_en.tsv");

pub fn english_stopwords() -> &'static [&'static str] {
    static LIST: OnceLock<Vec<&'static str>> = OnceLock::new();
    LIST.get_or_init(|| {
        STOPWORDS_EN
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn english_lemmas() -> &'static HashMap<&'static str, &'static str> {
    static MAP: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| {
        LEMMAS_EN
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('\t'))
            .collect()
    })
}

/// Raw text of the shipped lists, for fingerprinting a resolved config.
pub(crate) fn builtin_sources() -> (&'static str, &'static str) {
    (STOPWORDS_EN, LEMMAS_EN)
}
