use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{CorpusError, ProcessedDocument};
use crate::digest::FieldDigest;

const MAGIC: &[u8; 8] = b"TLDTM\0\0\0";
const FORMAT_VERSION: u32 = 1;

/// Lexicographically sorted unique terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Sorts and deduplicates.
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut terms: Vec<String> = terms.into_iter().map(Into::into).collect();
        terms.sort();
        terms.dedup();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn digest(&self) -> String {
        let mut d = FieldDigest::new();
        for t in &self.terms {
            d.field(t.as_bytes());
        }
        d.finish()
    }
}

/// One document's counts as `(term, count)` pairs, sorted by term, counts > 0.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SparseCounts {
    entries: Vec<(u32, u32)>,
}

impl SparseCounts {
    /// Merges repeated terms and drops zero counts.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut merged: BTreeMap<u32, u32> = BTreeMap::new();
        for (term, count) in pairs {
            if count > 0 {
                *merged.entry(term as u32).or_default() += count;
            }
        }
        SparseCounts { entries: merged.into_iter().collect() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = usize>) -> Self {
        Self::from_pairs(terms.into_iter().map(|t| (t, 1)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.entries.iter().map(|&(t, c)| (t as usize, c))
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }

    /// Number of distinct terms.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, term: usize) -> u32 {
        self.entries
            .binary_search_by_key(&(term as u32), |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Token-level expansion in term order: `{a:2, b:1}` -> `[a, a, b]`.
    pub fn tokens(&self) -> Vec<usize> {
        self.iter().flat_map(|(t, c)| (0..c).map(move |_| t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    doc_ids: Vec<String>,
    vocab: Vocabulary,
    rows: Vec<SparseCounts>,
    total_tokens: u64,
}

impl DocTermMatrix {
    /// Checks the full invariant set: no empty rows, no empty columns, term
    /// indices in range, unique doc ids.
    pub fn new(doc_ids: Vec<String>, vocab: Vocabulary, rows: Vec<SparseCounts>) -> Result<Self, CorpusError> {
        let dtm = Self::from_parts_unchecked(doc_ids, vocab, rows)?;
        if let Some(d) = dtm.rows.iter().position(SparseCounts::is_empty) {
            return Err(CorpusError::Format(format!("document `{}` has no tokens", dtm.doc_ids[d])));
        }
        if let Some(v) = dtm.doc_frequencies().iter().position(|&df| df == 0) {
            return Err(CorpusError::Format(format!("term `{}` occurs in no document", dtm.vocab.term(v))));
        }
        Ok(dtm)
    }

    fn from_parts_unchecked(doc_ids: Vec<String>, vocab: Vocabulary, rows: Vec<SparseCounts>) -> Result<Self, CorpusError> {
        if doc_ids.len() != rows.len() {
            return Err(CorpusError::Format(format!("{} doc ids for {} rows", doc_ids.len(), rows.len())));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &doc_ids {
            if !seen.insert(id) {
                return Err(CorpusError::DuplicateId(id.clone()));
            }
        }
        if rows.iter().flat_map(SparseCounts::iter).any(|(t, _)| t >= vocab.len()) {
            return Err(CorpusError::Format("term index out of range".into()));
        }
        let total_tokens = rows.iter().map(SparseCounts::total).sum();
        Ok(DocTermMatrix { doc_ids, vocab, rows, total_tokens })
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn row(&self, d: usize) -> &SparseCounts {
        &self.rows[d]
    }

    pub fn rows(&self) -> &[SparseCounts] {
        &self.rows
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == id)
    }

    /// Number of documents containing each term.
    pub fn doc_frequencies(&self) -> Vec<u32> {
        let mut df = vec![0u32; self.n_terms()];
        for row in &self.rows {
            for (t, _) in row.iter() {
                df[t] += 1;
            }
        }
        df
    }

    /// Corpus-wide count per term.
    pub fn term_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.n_terms()];
        for row in &self.rows {
            for (t, c) in row.iter() {
                totals[t] += c as u64;
            }
        }
        totals
    }

    /// Rows `indices` (in the given order) over the full vocabulary. Columns
    /// may end up empty, so the result is a training view, not a standalone DTM.
    pub fn select_docs(&self, indices: &[usize]) -> DocTermMatrix {
        let doc_ids = indices.iter().map(|&i| self.doc_ids[i].clone()).collect();
        let rows: Vec<SparseCounts> = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let total_tokens = rows.iter().map(SparseCounts::total).sum();
        DocTermMatrix { doc_ids, vocab: self.vocab.clone(), rows, total_tokens }
    }

    /// Versioned binary form: header (magic, version, D, V, total tokens,
    /// non-zeros), doc id block, vocabulary block, then `(doc, term, count)`
    /// triplets in row-major order. All integers little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let nnz: usize = self.rows.iter().map(SparseCounts::nnz).sum();
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u64::<LittleEndian>(self.n_docs() as u64)?;
        w.write_u64::<LittleEndian>(self.n_terms() as u64)?;
        w.write_u64::<LittleEndian>(self.total_tokens)?;
        w.write_u64::<LittleEndian>(nnz as u64)?;
        for s in self.doc_ids.iter().chain(self.vocab.terms()) {
            w.write_u32::<LittleEndian>(s.len() as u32)?;
            w.write_all(s.as_bytes())?;
        }
        for (d, row) in self.rows.iter().enumerate() {
            for (t, c) in row.iter() {
                w.write_u32::<LittleEndian>(d as u32)?;
                w.write_u32::<LittleEndian>(t as u32)?;
                w.write_u32::<LittleEndian>(c)?;
            }
        }
        w.flush()
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, CorpusError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CorpusError::Format("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(CorpusError::Format(format!("unsupported version {version}")));
        }
        let n_docs = r.read_u64::<LittleEndian>()? as usize;
        let n_terms = r.read_u64::<LittleEndian>()? as usize;
        let total = r.read_u64::<LittleEndian>()?;
        let nnz = r.read_u64::<LittleEndian>()? as usize;
        let read_str = |r: &mut R| -> Result<String, CorpusError> {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            String::from_utf8(buf).map_err(|e| CorpusError::Format(e.to_string()))
        };
        let doc_ids = (0..n_docs).map(|_| read_str(&mut r)).collect::<Result<Vec<_>, _>>()?;
        let terms = (0..n_terms).map(|_| read_str(&mut r)).collect::<Result<Vec<_>, _>>()?;
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CorpusError::Format("vocabulary not strictly sorted".into()));
        }
        let mut pairs: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n_docs];
        for _ in 0..nnz {
            let d = r.read_u32::<LittleEndian>()? as usize;
            let t = r.read_u32::<LittleEndian>()? as usize;
            let c = r.read_u32::<LittleEndian>()?;
            if d >= n_docs || t >= n_terms {
                return Err(CorpusError::Format(format!("triplet ({d}, {t}) out of range")));
            }
            pairs[d].push((t, c));
        }
        let rows = pairs.into_iter().map(SparseCounts::from_pairs).collect();
        let dtm = DocTermMatrix::new(doc_ids, Vocabulary::new(terms), rows)?;
        if dtm.total_tokens != total {
            return Err(CorpusError::Format(format!("header says {total} tokens, body has {}", dtm.total_tokens)));
        }
        Ok(dtm)
    }

    /// Human-readable export for inspection.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let nnz: usize = self.rows.iter().map(SparseCounts::nnz).sum();
        writeln!(w, "# topiclab dtm v{FORMAT_VERSION}")?;
        writeln!(w, "# docs {} terms {} tokens {} nnz {}", self.n_docs(), self.n_terms(), self.total_tokens, nnz)?;
        writeln!(w, "[vocab]")?;
        for (i, t) in self.vocab.terms().iter().enumerate() {
            writeln!(w, "{i}\t{t}")?;
        }
        writeln!(w, "[docs]")?;
        for (i, id) in self.doc_ids.iter().enumerate() {
            writeln!(w, "{i}\t{id}")?;
        }
        writeln!(w, "[counts]")?;
        for (d, row) in self.rows.iter().enumerate() {
            for (t, c) in row.iter() {
                writeln!(w, "{d}\t{t}\t{c}")?;
            }
        }
        w.flush()
    }
}

/// Builds the matrix over the surviving documents, in input order. Returns
/// the ids of documents dropped for having no tokens.
pub fn build_dtm(docs: &[ProcessedDocument]) -> Result<(DocTermMatrix, Vec<String>), CorpusError> {
    let (kept, dropped): (Vec<&ProcessedDocument>, Vec<&ProcessedDocument>) =
        docs.iter().partition(|d| !d.tokens.is_empty());
    if kept.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let vocab = Vocabulary::new(kept.iter().flat_map(|d| d.tokens.iter().cloned()));
    let rows = kept
        .iter()
        .map(|d| SparseCounts::from_terms(d.tokens.iter().map(|t| vocab.index_of(t).expect("term is in vocabulary"))))
        .collect();
    let doc_ids = kept.iter().map(|d| d.id.clone()).collect();
    let dtm = DocTermMatrix::new(doc_ids, vocab, rows)?;
    Ok((dtm, dropped.into_iter().map(|d| d.id.clone()).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub n_terms: usize,
    pub n_tokens: u64,
    pub tokens_per_doc_min: u64,
    pub tokens_per_doc_median: f64,
    pub tokens_per_doc_mean: f64,
    pub tokens_per_doc_max: u64,
}

pub fn corpus_stats(dtm: &DocTermMatrix) -> CorpusStats {
    let mut lengths: Vec<u64> = dtm.rows.iter().map(SparseCounts::total).collect();
    lengths.sort_unstable();
    let n = lengths.len();
    let median = if n % 2 == 1 {
        lengths[n / 2] as f64
    } else {
        (lengths[n / 2 - 1] + lengths[n / 2]) as f64 / 2.0
    };
    CorpusStats {
        n_docs: n,
        n_terms: dtm.n_terms(),
        n_tokens: dtm.total_tokens,
        tokens_per_doc_min: lengths[0],
        tokens_per_doc_median: median,
        tokens_per_doc_mean: dtm.total_tokens as f64 / n as f64,
        tokens_per_doc_max: lengths[n - 1],
    }
}
