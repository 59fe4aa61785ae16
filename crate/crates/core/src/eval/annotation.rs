use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// One annotator's judgement of one item, read from
/// `item_id,annotator,relevance,implicit,best_model` CSV rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub annotator: String,
    /// -2 (misleading) to +2 (very relevant).
    pub relevance: i8,
    pub implicit: bool,
    pub best_model: String,
}

#[derive(Deserialize)]
struct Row {
    item_id: String,
    annotator: String,
    relevance: i8,
    implicit: String,
    best_model: String,
}

pub fn read_annotations<R: Read>(reader: R) -> Result<Vec<AnnotationRecord>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, row) in rdr.deserialize::<Row>().enumerate() {
        // Header is line 1.
        let line = idx + 2;
        let bad = |reason: String| EvalError::Annotation { line, reason };
        let row = row.map_err(|e| bad(e.to_string()))?;
        if !(-2..=2).contains(&row.relevance) {
            return Err(bad(format!("relevance {} outside -2..=2", row.relevance)));
        }
        let implicit = match row.implicit.to_ascii_lowercase().as_str() {
            "yes" => true,
            "no" => false,
            other => return Err(bad(format!("implicit must be yes or no, got {other:?}"))),
        };
        if !seen.insert((row.item_id.clone(), row.annotator.clone())) {
            return Err(bad(format!("second record for item {:?} by {:?}", row.item_id, row.annotator)));
        }
        out.push(AnnotationRecord {
            item_id: row.item_id,
            annotator: row.annotator,
            relevance: row.relevance,
            implicit,
            best_model: row.best_model,
        });
    }
    Ok(out)
}

/// Labels from annotators `a` and `b` on the items both of them judged, in
/// item-id order, ready for [`super::cohens_kappa`].
pub fn paired_labels<L, F>(records: &[AnnotationRecord], a: &str, b: &str, label: F) -> (Vec<L>, Vec<L>)
where
    F: Fn(&AnnotationRecord) -> L,
{
    let mut by_item: BTreeMap<&str, (Option<L>, Option<L>)> = BTreeMap::new();
    for r in records {
        if r.annotator == a {
            by_item.entry(&r.item_id).or_insert((None, None)).0 = Some(label(r));
        } else if r.annotator == b {
            by_item.entry(&r.item_id).or_insert((None, None)).1 = Some(label(r));
        }
    }
    by_item.into_values().filter_map(|(x, y)| Some((x?, y?))).unzip()
}
