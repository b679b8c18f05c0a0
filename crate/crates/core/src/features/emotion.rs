use crate::corpus::{EmotionLexicon, EmotionVector};
use crate::text::words_lower;

/// Per-dimension mean intensity over the fragment tokens found in the
/// lexicon; the zero vector when none match.
pub fn emotion_vector(fragment: &str, lexicon: &EmotionLexicon) -> EmotionVector {
    let mut sum = [0.0; 10];
    let mut hits = 0usize;
    for w in words_lower(fragment) {
        if let Some(v) = lexicon.get(&w) {
            hits += 1;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    if hits > 0 {
        for s in &mut sum {
            *s /= hits as f64;
        }
    }
    sum
}
