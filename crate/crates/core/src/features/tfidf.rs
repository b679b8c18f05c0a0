use std::collections::{BTreeMap, BTreeSet};

use crate::text::words_lower;
use crate::{Error, Result};

/// Sparse vector as `(column, value)` pairs sorted by column.
pub type SparseVector = Vec<(usize, f64)>;

/// Smoothed-idf TF-IDF model fit on training fragments:
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, documents are fragments, rows are
/// L2-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    document_count: usize,
}

impl TfidfModel {
    pub fn from_parts(document_count: usize, terms: Vec<(String, f64)>) -> Result<Self> {
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(terms.len());
        for (i, (term, value)) in terms.into_iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("idf of {term:?}")));
            }
            if vocabulary.insert(term.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate term {term:?}")));
            }
            idf.push(value);
        }
        Ok(TfidfModel {
            vocabulary,
            idf,
            document_count,
        })
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    pub fn idf(&self, column: usize) -> f64 {
        self.idf[column]
    }

    /// Terms in column order.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        let mut terms: Vec<(&str, usize)> = self.vocabulary.iter().map(|(t, &c)| (t.as_str(), c)).collect();
        terms.sort_by_key(|&(_, c)| c);
        terms.into_iter().map(|(t, _)| t)
    }

    /// `PDTFIDF1 <document_count>` header, then `term<TAB>idf` per column.
    pub fn to_text(&self) -> String {
        let mut out = format!("PDTFIDF1 {}\n", self.document_count);
        for (i, term) in self.vocabulary().enumerate() {
            out.push_str(&format!("{term}\t{:?}\n", self.idf[i]));
        }
        out
    }

    pub fn from_text(content: &str) -> Result<Self> {
        let mut lines = content.lines();
        let n = lines
            .next()
            .and_then(|h| h.strip_prefix("PDTFIDF1 "))
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::parse("tfidf", 1, "missing PDTFIDF1 header"))?;
        let terms = lines
            .enumerate()
            .map(|(i, l)| {
                let (t, v) = l
                    .split_once('\t')
                    .ok_or_else(|| Error::parse("tfidf", i + 2, "expected term<TAB>idf"))?;
                let v = v.parse().map_err(|_| Error::parse("tfidf", i + 2, "bad idf"))?;
                Ok((t.to_string(), v))
            })
            .collect::<Result<_>>()?;
        TfidfModel::from_parts(n, terms)
    }
}

pub fn fit_tfidf<S: AsRef<str>>(fragments: &[S]) -> Result<TfidfModel> {
    if fragments.is_empty() {
        return Err(Error::Invalid("cannot fit TF-IDF on zero fragments".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for f in fragments {
        let unique: BTreeSet<String> = words_lower(f.as_ref()).into_iter().collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::Invalid("all fragments are empty".into()));
    }
    let n = fragments.len() as f64;
    let terms = df
        .into_iter()
        .map(|(t, d)| {
            let idf = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0;
            (t, idf)
        })
        .collect();
    TfidfModel::from_parts(fragments.len(), terms)
}

/// Raw term count × idf, out-of-vocabulary tokens ignored, L2-normalized.
pub fn transform_tfidf(model: &TfidfModel, fragment: &str) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for w in words_lower(fragment) {
        if let Some(c) = model.column(&w) {
            *counts.entry(c).or_default() += 1.0;
        }
    }
    let mut v: SparseVector = counts.into_iter().map(|(c, tf)| (c, tf * model.idf[c])).collect();
    let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, x) in &mut v {
            *x /= norm;
        }
    }
    v
}
