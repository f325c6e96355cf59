//! Analytic predictors: the empty answer, the gold answer, and the most
//! frequent training answer per masked role.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::model::{PredictionRecord, QueryRecord, SrlRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Empty,
    Gt,
    MostFrequent,
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "empty" => Ok(BaselineKind::Empty),
            "gt" => Ok(BaselineKind::Gt),
            "most_frequent" | "most-frequent" => Ok(BaselineKind::MostFrequent),
            other => Err(format!("unknown baseline `{other}` (expected empty, gt or most_frequent)")),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Empty => "empty",
            BaselineKind::Gt => "gt",
            BaselineKind::MostFrequent => "most_frequent",
        })
    }
}

/// Most frequent answer text per role; ties go to the lexicographically
/// smallest text.
pub fn most_frequent_answers(train: &[QueryRecord]) -> HashMap<SrlRole, String> {
    let mut counts: HashMap<SrlRole, BTreeMap<String, usize>> = HashMap::new();
    for q in train {
        *counts
            .entry(q.masked_role.clone())
            .or_default()
            .entry(q.answer_text())
            .or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(role, texts)| {
            let mut best: Option<(String, usize)> = None;
            for (text, c) in texts {
                if best.as_ref().is_none_or(|(_, bc)| c > *bc) {
                    best = Some((text, c));
                }
            }
            (role, best.expect("non-empty").0)
        })
        .collect()
}

/// Predictions for `eval` in input order. Roles never seen in training get
/// the empty answer under `MostFrequent`.
pub fn baseline_predict(kind: BaselineKind, train: &[QueryRecord], eval: &[QueryRecord]) -> Vec<PredictionRecord> {
    let frequent = match kind {
        BaselineKind::MostFrequent => most_frequent_answers(train),
        _ => HashMap::new(),
    };
    eval.iter()
        .map(|q| PredictionRecord {
            query_id: q.query_id.clone(),
            answer_text: match kind {
                BaselineKind::Empty => String::new(),
                BaselineKind::Gt => q.answer_text(),
                BaselineKind::MostFrequent => frequent.get(&q.masked_role).cloned().unwrap_or_default(),
            },
        })
        .collect()
}
