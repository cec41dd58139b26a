//! STS datasets and evaluation metrics.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mapper::BilingualSpace;
use crate::scorer::{score_batch, SimilarityMethod};

pub const GOLD_MIN: f64 = 0.0;
pub const GOLD_MAX: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct StsPair {
    pub sent_a: String,
    pub sent_b: String,
    pub gold: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StsDataset {
    pub name: String,
    pub pairs: Vec<StsPair>,
}

impl StsDataset {
    /// Reads `sent_a<TAB>sent_b<TAB>gold` lines. The dataset is named after
    /// the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read(BufReader::new(file), name)
    }

    pub fn read<R: BufRead>(reader: R, name: impl Into<String>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let gold: f64 = fields[2].trim().parse().map_err(|_| {
                Error::parse(line_no, format!("non-numeric gold score {:?}", fields[2]))
            })?;
            if !(GOLD_MIN..=GOLD_MAX).contains(&gold) {
                return Err(Error::parse(
                    line_no,
                    format!("gold score {gold} outside [{GOLD_MIN}, {GOLD_MAX}]"),
                ));
            }
            pairs.push(StsPair {
                sent_a: fields[0].to_string(),
                sent_b: fields[1].to_string(),
                gold,
            });
        }
        Ok(StsDataset {
            name: name.into(),
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "pearson inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Domain(
            "pearson needs at least two observations".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    for (var, side, values) in [(sxx, "first", x), (syy, "second", y)] {
        if var == 0.0 {
            return Err(Error::Domain(format!(
                "{side} input has zero variance (all values equal {:.6})",
                values[0]
            )));
        }
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id_a: usize,
    pub id_b: usize,
    pub score: f64,
    pub label: bool,
}

/// Candidates ordered by nonincreasing score; equal scores keep input order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankedCandidates {
    items: Vec<Candidate>,
}

impl RankedCandidates {
    /// Sorts by score, stably.
    pub fn new(mut items: Vec<Candidate>) -> Self {
        items.sort_by(|a, b| b.score.total_cmp(&a.score));
        RankedCandidates { items }
    }

    /// Takes items already in ranked order (e.g. a ranking with its own tie
    /// policy) without re-sorting.
    pub fn from_ranked(items: Vec<Candidate>) -> Result<Self> {
        if items.windows(2).any(|w| w[0].score < w[1].score) {
            return Err(Error::Domain(
                "candidates are not sorted by nonincreasing score".into(),
            ));
        }
        Ok(RankedCandidates { items })
    }

    /// Builds a ranking directly from labels, scoring position `i` as `-i`.
    pub fn from_labels(labels: &[bool]) -> Self {
        RankedCandidates {
            items: labels
                .iter()
                .enumerate()
                .map(|(i, &label)| Candidate {
                    id_a: i,
                    id_b: i,
                    score: -(i as f64),
                    label,
                })
                .collect(),
        }
    }

    pub fn items(&self) -> &[Candidate] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|c| c.label).count()
    }

    fn require_positive(&self) -> Result<usize> {
        match self.positives() {
            0 => Err(Error::Domain("ranking has no positive labels".into())),
            p => Ok(p),
        }
    }
}

/// Mean of precision@i over the ranks `i` holding a positive.
pub fn average_precision(rc: &RankedCandidates) -> Result<f64> {
    let positives = rc.require_positive()?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, c) in rc.items().iter().enumerate() {
        if c.label {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Largest recall over ranking prefixes whose precision reaches `target`.
pub fn recall_at_precision(rc: &RankedCandidates, target: f64) -> Result<f64> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Domain(format!(
            "target precision {target} outside (0, 1]"
        )));
    }
    let positives = rc.require_positive()?;
    let mut hits = 0usize;
    let mut best = 0usize;
    for (i, c) in rc.items().iter().enumerate() {
        if c.label {
            hits += 1;
        }
        if hits as f64 / (i + 1) as f64 >= target {
            best = best.max(hits);
        }
    }
    Ok(best as f64 / positives as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StsReport {
    pub rho: f64,
    /// `None` where the pair could not be scored; those pairs count as 0.
    pub predictions: Vec<Option<f64>>,
}

impl StsReport {
    pub fn unscoreable(&self) -> usize {
        self.predictions.iter().filter(|p| p.is_none()).count()
    }
}

/// Pearson correlation between predicted scores and gold scores.
pub fn evaluate_sts(bi: &BilingualSpace, ds: &StsDataset, method: SimilarityMethod) -> Result<f64> {
    sts_report(bi, ds, method, 1).map(|r| r.rho)
}

pub fn sts_report(
    bi: &BilingualSpace,
    ds: &StsDataset,
    method: SimilarityMethod,
    jobs: usize,
) -> Result<StsReport> {
    if ds.is_empty() {
        return Err(Error::Domain(format!("dataset '{}' is empty", ds.name)));
    }
    let texts: Vec<(&str, &str)> = ds
        .pairs
        .iter()
        .map(|p| (p.sent_a.as_str(), p.sent_b.as_str()))
        .collect();
    let mut predictions = Vec::with_capacity(texts.len());
    for (i, result) in score_batch(bi, &texts, method, jobs)
        .into_iter()
        .enumerate()
    {
        match result {
            Ok(s) => predictions.push(Some(s.value)),
            Err(e) => {
                log::warn!("{} pair {}: unscoreable, scored 0 ({e})", ds.name, i + 1);
                predictions.push(None);
            }
        }
    }
    if predictions.iter().all(Option::is_none) {
        return Err(Error::Domain(format!(
            "no pair of dataset '{}' could be scored",
            ds.name
        )));
    }
    let scores: Vec<f64> = predictions.iter().map(|p| p.unwrap_or(0.0)).collect();
    let golds: Vec<f64> = ds.pairs.iter().map(|p| p.gold).collect();
    let rho = pearson(&scores, &golds).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!(
            "cannot correlate {method} predictions with gold scores: {msg}"
        )),
        other => other,
    })?;
    Ok(StsReport { rho, predictions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_dataset() {
        let ds = StsDataset::read("a cat\ta dog\t2.5\n".as_bytes(), "toy").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.pairs[0].gold, 2.5);
        assert_eq!(ds.pairs[0].sent_b, "a dog");
    }

    #[test]
    fn rejects_out_of_range_gold() {
        let err = StsDataset::read("x\ty\t1\nx\ty\t6.0\n".as_bytes(), "toy").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = StsDataset::read("x\ty\tfive\n".as_bytes(), "toy").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = StsDataset::read("x\t3\n".as_bytes(), "toy").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        assert!(StsDataset::read("".as_bytes(), "toy").unwrap().is_empty());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // deviations (−1, 0, 1) and (−1, 1, 0): cov 1, variances 2 and 2
        assert!((pearson(&x, &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pearson_domain_errors() {
        assert!(matches!(pearson(&[1.0], &[2.0]), Err(Error::Domain(_))));
        assert!(matches!(
            pearson(&[1.0, 1.0], &[2.0, 3.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[3.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ap_examples() {
        assert_eq!(
            average_precision(&RankedCandidates::from_labels(&[true, false])).unwrap(),
            1.0
        );
        assert_eq!(
            average_precision(&RankedCandidates::from_labels(&[false, true])).unwrap(),
            0.5
        );
        let ap = average_precision(&RankedCandidates::from_labels(&[true, false, true])).unwrap();
        assert_eq!(ap, 0.5 * (1.0 + 2.0 / 3.0));
        assert!(matches!(
            average_precision(&RankedCandidates::from_labels(&[false])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn recall_at_precision_examples() {
        let r = |labels: &[bool], p| {
            recall_at_precision(&RankedCandidates::from_labels(labels), p).unwrap()
        };
        assert_eq!(r(&[true, true, false], 0.9), 1.0);
        assert_eq!(r(&[false, true], 0.9), 0.0);
        assert_eq!(r(&[true], 1.0), 1.0);
        assert!(recall_at_precision(&RankedCandidates::from_labels(&[true]), 0.0).is_err());
        assert!(recall_at_precision(&RankedCandidates::from_labels(&[false]), 0.5).is_err());
    }

    #[test]
    fn ranking_is_stable_on_ties() {
        let c = |id, score, label| Candidate {
            id_a: id,
            id_b: 0,
            score,
            label,
        };
        let rc = RankedCandidates::new(vec![c(0, 0.5, false), c(1, 0.9, true), c(2, 0.5, true)]);
        let ids: Vec<usize> = rc.items().iter().map(|c| c.id_a).collect();
        assert_eq!(ids, [1, 0, 2]);
        assert!(RankedCandidates::from_ranked(vec![c(0, 0.1, true), c(1, 0.2, false)]).is_err());
    }
}
