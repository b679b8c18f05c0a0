//! Fragment features for the logistic-regression submodel.
//!
//! A fragment is described by its raw length, a TF-IDF block, six boolean
//! cues (repetition, superlative, whatabout, doubt, slogan, supplement) and a
//! 10-dimensional emotion-intensity vector.

mod emotion;
mod lexical;
mod tfidf;

pub use emotion::emotion_vector;
pub use lexical::{
    doubt_feature, repetition_feature, slogan_feature, superlative_feature, supplement_feature, whatabout_feature,
    WordLists, REPETITION_THRESHOLD,
};
pub use tfidf::{fit_tfidf, transform_tfidf, SparseVector, TfidfModel};

use crate::corpus::{EmotionLexicon, EmotionVector, EMOTION_DIMENSIONS};

/// Everything feature extraction may look at for one fragment. There is no
/// label field.
#[derive(Debug, Clone, Copy)]
pub struct FragmentInput<'a> {
    pub fragment: &'a str,
    pub article_text: &'a str,
    /// Char offsets of the fragment in the article.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Raw char count.
    pub length: f64,
    pub tfidf: SparseVector,
    pub repetition: bool,
    pub superlative: bool,
    pub whatabout: bool,
    pub doubt: bool,
    pub slogan: bool,
    pub supplement: bool,
    pub emotion: EmotionVector,
}

/// Number of dense columns ahead of the TF-IDF block.
pub const FIXED_COLUMNS: usize = 7 + 10;

impl FeatureVector {
    pub fn booleans(&self) -> [bool; 6] {
        [
            self.repetition,
            self.superlative,
            self.whatabout,
            self.doubt,
            self.slogan,
            self.supplement,
        ]
    }

    /// Dense layout: length, six booleans as 0/1, emotion, then one column per
    /// TF-IDF vocabulary entry.
    pub fn to_dense(&self, vocab_size: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(FIXED_COLUMNS + vocab_size);
        out.push(self.length);
        out.extend(self.booleans().iter().map(|&b| if b { 1.0 } else { 0.0 }));
        out.extend_from_slice(&self.emotion);
        let base = out.len();
        out.resize(base + vocab_size, 0.0);
        for &(col, v) in &self.tfidf {
            out[base + col] = v;
        }
        out
    }
}

/// Column names matching [`FeatureVector::to_dense`].
pub fn column_names(model: &TfidfModel) -> Vec<String> {
    let mut names: Vec<String> = [
        "length",
        "repetition",
        "superlative",
        "whatabout",
        "doubt",
        "slogan",
        "supplement",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend(EMOTION_DIMENSIONS.iter().map(|d| format!("emotion_{d}")));
    names.extend(model.vocabulary().map(|t| format!("tfidf_{t}")));
    names
}

pub fn build_feature_vector(
    input: &FragmentInput<'_>,
    tfidf: &TfidfModel,
    lexicon: &EmotionLexicon,
    words: &WordLists,
) -> FeatureVector {
    FeatureVector {
        length: input.fragment.chars().count() as f64,
        tfidf: transform_tfidf(tfidf, input.fragment),
        repetition: repetition_feature(input.fragment, input.article_text),
        superlative: superlative_feature(input.fragment, words),
        whatabout: whatabout_feature(input.fragment),
        doubt: doubt_feature(input.fragment, words),
        slogan: slogan_feature(input.fragment),
        supplement: supplement_feature(input.fragment, input.article_text, input.start, input.end),
        emotion: emotion_vector(input.fragment, lexicon),
    }
}

/// Feature dump TSV with a header row of column names.
pub fn dump_tsv(ids: &[String], vectors: &[FeatureVector], model: &TfidfModel) -> String {
    let mut out = String::from("fragment_id\t");
    out.push_str(&column_names(model).join("\t"));
    out.push('\n');
    for (id, v) in ids.iter().zip(vectors) {
        out.push_str(id);
        for x in v.to_dense(model.len()) {
            out.push('\t');
            out.push_str(&format!("{x:?}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_layout_matches_column_names() {
        let model = fit_tfidf(&["we will win", "what about them"]).unwrap();
        let words = WordLists::default();
        let lex = EmotionLexicon::default();
        let text = "We will win. We will win.";
        let input = FragmentInput {
            fragment: "We will win",
            article_text: text,
            start: 0,
            end: 11,
        };
        let fv = build_feature_vector(&input, &model, &lex, &words);
        let dense = fv.to_dense(model.len());
        let names = column_names(&model);
        assert_eq!(dense.len(), names.len());
        assert_eq!(dense[0], 11.0);
        assert_eq!(dense[names.iter().position(|n| n == "slogan").unwrap()], 1.0);
        assert_eq!(dense[names.iter().position(|n| n == "doubt").unwrap()], 0.0);
        let win = names.iter().position(|n| n == "tfidf_win").unwrap();
        assert!(dense[win] > 0.0);
        assert_eq!(build_feature_vector(&input, &model, &lex, &words), fv);
    }

    #[test]
    fn plain_fragment_has_no_boolean_cues() {
        let model = fit_tfidf(&["x"]).unwrap();
        let input = FragmentInput {
            fragment: "plain text",
            article_text: "some plain text here",
            start: 5,
            end: 15,
        };
        let fv = build_feature_vector(&input, &model, &EmotionLexicon::default(), &WordLists::default());
        assert_eq!(fv.booleans(), [false; 6]);
        assert!(fv.length > 0.0);
    }
}
