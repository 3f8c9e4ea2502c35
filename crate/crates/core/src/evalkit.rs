//! Exact-match scoring with a per-hop breakdown, and dataset count tables.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::ScoreError;
use crate::promptkit::{parse_response, PromptStyle};
use crate::relgraph::Relation;
use crate::taskgen::{Example, HOPS};

/// One line of a predictions file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub response: String,
}

/// A prediction joined with its gold example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PredictionRecord {
    pub id: String,
    pub response: String,
    pub parsed: Option<Relation>,
    pub gold: Relation,
    pub hop: usize,
}

impl PredictionRecord {
    pub fn correct(&self) -> bool {
        self.parsed == Some(self.gold)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HopScore {
    pub hop: usize,
    pub n: usize,
    pub correct: usize,
    pub unparseable: usize,
    /// `None` for an empty bucket.
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_hop: Vec<HopScore>,
    pub n: usize,
    pub correct: usize,
    pub unparseable: usize,
    pub overall: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Read `{id, response}` lines; blank lines are skipped.
pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<Prediction>, ScoreError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ScoreError::Json { line: n + 1, source })?);
    }
    Ok(out)
}

/// Join predictions with gold examples and parse every response.
pub fn records(predictions: &[Prediction], gold: &[Example], style: PromptStyle) -> Result<Vec<PredictionRecord>, ScoreError> {
    let by_id: HashMap<&str, &Example> = gold.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut seen = HashSet::new();
    predictions
        .iter()
        .map(|p| {
            let ex = by_id.get(p.id.as_str()).ok_or_else(|| ScoreError::UnknownId(p.id.clone()))?;
            if !seen.insert(p.id.as_str()) {
                return Err(ScoreError::DuplicateId(p.id.clone()));
            }
            Ok(PredictionRecord {
                id: p.id.clone(),
                response: p.response.clone(),
                parsed: parse_response(&p.response, style, ex.task).ok().map(|r| r.relation),
                gold: ex.answer,
                hop: ex.hop,
            })
        })
        .collect()
}

/// Per-hop exact-match accuracy. Unparseable responses count as wrong and
/// are tallied separately.
pub fn score(predictions: &[Prediction], gold: &[Example], style: PromptStyle) -> Result<ScoreReport, ScoreError> {
    Ok(summarize(&records(predictions, gold, style)?))
}

pub fn summarize(records: &[PredictionRecord]) -> ScoreReport {
    let mut buckets: BTreeMap<usize, HopScore> = HOPS.map(|h| (h, HopScore { hop: h, ..HopScore::default() })).collect();
    for r in records {
        let b = buckets.entry(r.hop).or_insert_with(|| HopScore {
            hop: r.hop,
            ..HopScore::default()
        });
        b.n += 1;
        b.correct += usize::from(r.correct());
        b.unparseable += usize::from(r.parsed.is_none());
    }
    let mut report = ScoreReport::default();
    for (_, mut b) in buckets {
        b.accuracy = ratio(b.correct, b.n);
        report.n += b.n;
        report.correct += b.correct;
        report.unparseable += b.unparseable;
        report.per_hop.push(b);
    }
    report.overall = ratio(report.correct, report.n);
    report
}

fn percent(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{:.1}", v * 100.0))
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>5}  {:>6}  {:>7}  {:>11}  {:>8}", "Hop", "N", "Correct", "Unparseable", "Acc (%)")?;
        for b in &self.per_hop {
            writeln!(f, "{:>5}  {:>6}  {:>7}  {:>11}  {:>8}", b.hop, b.n, b.correct, b.unparseable, percent(b.accuracy))?;
        }
        write!(
            f,
            "{:>5}  {:>6}  {:>7}  {:>11}  {:>8}",
            "Total",
            self.n,
            self.correct,
            self.unparseable,
            percent(self.overall)
        )
    }
}

/// Example counts per hop in the reference table layout.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsTable {
    /// Hops 2 to 10, plus any other hop present.
    pub rows: Vec<(usize, usize)>,
    pub total: usize,
}

impl StatsTable {
    pub fn count(&self, hop: usize) -> usize {
        self.rows.iter().find(|(h, _)| *h == hop).map_or(0, |(_, n)| *n)
    }
}

pub fn stats_table(examples: &[Example]) -> StatsTable {
    let mut counts: BTreeMap<usize, usize> = HOPS.map(|h| (h, 0)).collect();
    for e in examples {
        *counts.entry(e.hop).or_default() += 1;
    }
    StatsTable {
        total: examples.len(),
        rows: counts.into_iter().collect(),
    }
}

impl fmt::Display for StatsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>5}  {:>7}", "Hop", "Samples")?;
        for (hop, n) in &self.rows {
            writeln!(f, "{hop:>5}  {n:>7}")?;
        }
        write!(f, "{:>5}  {:>7}", "Total", self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promptkit::render_target;
    use crate::relgraph::Task;
    use crate::taskgen::{build_dataset, DatasetSpec};

    fn gold() -> Vec<Example> {
        build_dataset(&DatasetSpec::uniform(Task::Spatial, 2..=4, 2, 8)).unwrap()
    }

    #[test]
    fn gold_targets_score_perfectly() {
        let data = gold();
        for style in PromptStyle::ALL {
            let preds: Vec<_> = data
                .iter()
                .map(|e| Prediction {
                    id: e.id.clone(),
                    response: render_target(e, style),
                })
                .collect();
            let r = score(&preds, &data, style).unwrap();
            assert_eq!(r.overall, Some(1.0));
            assert!(r.per_hop.iter().filter(|b| b.n > 0).all(|b| b.accuracy == Some(1.0)));
        }
    }

    #[test]
    fn half_right_and_unparseable() {
        let data = gold();
        let hop2: Vec<_> = data.iter().filter(|e| e.hop == 2).collect();
        let preds = vec![
            Prediction {
                id: hop2[0].id.clone(),
                response: render_target(hop2[0], PromptStyle::Standard),
            },
            Prediction {
                id: hop2[1].id.clone(),
                response: "I don't know".into(),
            },
        ];
        let r = score(&preds, &data, PromptStyle::Standard).unwrap();
        assert_eq!(r.per_hop[0].accuracy, Some(0.5));
        assert_eq!(r.unparseable, 1);
    }

    #[test]
    fn unknown_and_duplicate_ids_fail() {
        let data = gold();
        let p = |id: &str| Prediction {
            id: id.into(),
            response: "left".into(),
        };
        assert!(matches!(score(&[p("nope")], &data, PromptStyle::Standard), Err(ScoreError::UnknownId(_))));
        let id = data[0].id.as_str();
        assert!(matches!(score(&[p(id), p(id)], &data, PromptStyle::Standard), Err(ScoreError::DuplicateId(_))));
    }

    #[test]
    fn empty_stats_have_all_rows() {
        let t = stats_table(&[]);
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.total, 0);
        assert!(t.to_string().ends_with("Total        0"));
    }
}
