//! Combining the three technique classifiers.
//!
//! Each technique is owned by one submodel (the routing table). A fragment's
//! final label is resolved by priority: the lr model's prediction if lr owns
//! the label it predicted, else the cost-weighted model's prediction if it
//! owns its label, else the base model's prediction. A part-of-speech rule
//! then rewrites rare Repetition predictions.

mod pos;

pub use pos::{pos_tag, tag_word, PosSidecar, PosTaggedFragment};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{SpanAnnotation, Technique};
use crate::error::{Error, Result};
use crate::segmentation::merge_by_article;
use crate::text::count_occurrences;

/// Techniques with fewer training occurrences than this are minority classes.
pub const MINORITY_THRESHOLD: u64 = 110;

/// Repetition predictions are only corrected below this many occurrences.
pub const CORRECTION_MAX_OCCURRENCES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Submodel {
    Base,
    CostWeighted,
    Lr,
}

impl Submodel {
    pub const ALL: [Submodel; 3] = [Submodel::Base, Submodel::CostWeighted, Submodel::Lr];

    pub fn name(self) -> &'static str {
        match self {
            Submodel::Base => "base",
            Submodel::CostWeighted => "cost_weighted",
            Submodel::Lr => "lr",
        }
    }
}

impl fmt::Display for Submodel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Submodel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "base" => Ok(Submodel::Base),
            "cost_weighted" => Ok(Submodel::CostWeighted),
            "lr" => Ok(Submodel::Lr),
            other => Err(Error::Config(format!(
                "unknown submodel {other:?} (expected base, cost_weighted or lr)"
            ))),
        }
    }
}

pub fn is_minority(t: Technique) -> bool {
    Technique::TRAIN_COUNTS[t.index()] < MINORITY_THRESHOLD
}

/// Owner submodel for every technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingTable {
    owners: [Submodel; Technique::COUNT],
}

impl Default for RoutingTable {
    fn default() -> Self {
        let mut owners = [Submodel::Base; Technique::COUNT];
        for t in Technique::ALL {
            if is_minority(t) {
                owners[t.index()] = Submodel::CostWeighted;
            }
        }
        owners[Technique::Repetition.index()] = Submodel::Lr;
        RoutingTable { owners }
    }
}

impl RoutingTable {
    pub fn uniform(owner: Submodel) -> Self {
        RoutingTable {
            owners: [owner; Technique::COUNT],
        }
    }

    pub fn owner(&self, t: Technique) -> Submodel {
        self.owners[t.index()]
    }

    pub fn set(&mut self, t: Technique, owner: Submodel) {
        self.owners[t.index()] = owner;
    }

    /// Applies `technique=submodel` lines on top of the default table.
    pub fn parse(content: &str, origin: &str) -> Result<Self> {
        let mut table = RoutingTable::default();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (t, s) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected technique=submodel"))?;
            let technique: Technique = t.trim().parse()?;
            table.set(technique, s.parse()?);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        Technique::ALL
            .iter()
            .map(|t| format!("{}={}\n", t, self.owner(*t)))
            .collect()
    }
}

/// One prediction per fragment from each submodel, aligned by position.
#[derive(Debug, Clone, Default)]
pub struct SubmodelPredictions {
    pub base: Vec<Technique>,
    pub cost_weighted: Vec<Technique>,
    pub lr: Vec<Technique>,
}

/// Routed label for a single fragment.
pub fn route_one(base: Technique, cost_weighted: Technique, lr: Technique, table: &RoutingTable) -> Technique {
    if table.owner(lr) == Submodel::Lr {
        lr
    } else if table.owner(cost_weighted) == Submodel::CostWeighted {
        cost_weighted
    } else {
        base
    }
}

pub fn route(predictions: &SubmodelPredictions, table: &RoutingTable) -> Result<Vec<Technique>> {
    let n = predictions.base.len();
    for (name, len) in [
        ("cost_weighted", predictions.cost_weighted.len()),
        ("lr", predictions.lr.len()),
    ] {
        if len != n {
            return Err(Error::Invalid(format!(
                "missing submodel prediction: base has {n} fragments, {name} has {len}"
            )));
        }
    }
    Ok((0..n)
        .map(|i| {
            route_one(
                predictions.base[i],
                predictions.cost_weighted[i],
                predictions.lr[i],
                table,
            )
        })
        .collect())
}

/// Part-of-speech correction of a Repetition prediction whose fragment occurs
/// fewer than three times in its article.
pub fn correct(fragment: &str, predicted: Technique, article_text: &str, pos: &PosTaggedFragment) -> Technique {
    if predicted != Technique::Repetition {
        return predicted;
    }
    if count_occurrences(article_text, fragment.trim()) >= CORRECTION_MAX_OCCURRENCES {
        return predicted;
    }
    match pos.tag_sequence().as_slice() {
        ["NN", "NN"] | ["NN", "NNS"] | ["NNS"] => Technique::NameCallingLabeling,
        ["JJ"] | ["NN"] => Technique::LoadedLanguage,
        _ => predicted,
    }
}

/// Union of several SI prediction sets, merged per article.
pub fn union_si_predictions(pred_sets: &[Vec<SpanAnnotation>]) -> Vec<SpanAnnotation> {
    let all: Vec<SpanAnnotation> = pred_sets.iter().flatten().cloned().collect();
    merge_by_article(&all)
}
