//! Sentence-level cross-lingual similarity scores.
//!
//! Words are compared by the cosine between the mapped source vector and the
//! target vector. Three sentence scores are built on top of that:
//!
//! * greedy association: every word is paired with its most similar word on
//!   the other side (partners may repeat), averaged per direction, then the
//!   two directions are averaged;
//! * optimal alignment: the one-to-one alignment with the largest similarity
//!   sum, normalized by both sentence lengths;
//! * aggregation: cosine between the mean mapped source vector and the mean
//!   target vector.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::assignment::solve_max_assignment_flat;
use crate::error::{Error, Result};
use crate::mapper::BilingualSpace;
use crate::par;
use crate::textprep::TokenBag;
use crate::vecops;

/// Similarity given to padding tokens in the optimal alignment.
pub const PAD_SIMILARITY: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum SimilarityMethod {
    #[value(name = "gr-assoc")]
    GreedyAssociation,
    #[value(name = "opt-align")]
    OptimalAlignment,
    #[value(name = "aggreg")]
    Aggregation,
}

impl SimilarityMethod {
    pub const ALL: [SimilarityMethod; 3] = [
        SimilarityMethod::GreedyAssociation,
        SimilarityMethod::OptimalAlignment,
        SimilarityMethod::Aggregation,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SimilarityMethod::GreedyAssociation => "gr-assoc",
            SimilarityMethod::OptimalAlignment => "opt-align",
            SimilarityMethod::Aggregation => "aggreg",
        }
    }
}

impl fmt::Display for SimilarityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SimilarityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimilarityMethod::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Domain(format!("unknown similarity method '{s}'")))
    }
}

impl<'de> serde::Deserialize<'de> for SimilarityMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SentenceScore {
    pub value: f64,
    pub method: SimilarityMethod,
    pub oov_source: usize,
    pub oov_target: usize,
}

/// Cosine between the mapped source word and the target word; `None` if
/// either word is out of vocabulary.
pub fn word_sim(bi: &BilingualSpace, source_word: &str, target_word: &str) -> Result<Option<f64>> {
    let (Some(si), Some(ti)) = (
        bi.source().index_of(source_word),
        bi.target().index_of(target_word),
    ) else {
        return Ok(None);
    };
    let mapped = bi.map_row(si);
    let target = bi.target().row_f64(ti);
    vecops::cosine(&mapped, &target).map(Some).ok_or_else(|| {
        Error::Domain(format!(
            "degenerate embedding: zero-norm vector for '{source_word}' or '{target_word}'"
        ))
    })
}

pub fn greedy_association(
    bi: &BilingualSpace,
    s: &TokenBag,
    t: &TokenBag,
) -> Result<SentenceScore> {
    let sim = SimilarityMatrix::build(bi, s, t)?;
    let row_best: Vec<f64> = (0..sim.rows).map(|i| sim.row_max(i)).collect();
    let col_best: Vec<f64> = (0..sim.cols).map(|j| sim.col_max(j)).collect();
    let forward = ordered_sum(row_best) / sim.rows as f64;
    let backward = ordered_sum(col_best) / sim.cols as f64;
    Ok(score(
        0.5 * (forward + backward),
        SimilarityMethod::GreedyAssociation,
        s,
        t,
    ))
}

pub fn optimal_alignment(bi: &BilingualSpace, s: &TokenBag, t: &TokenBag) -> Result<SentenceScore> {
    let sim = SimilarityMatrix::build(bi, s, t)?;
    let align = sim.best_alignment()?;
    let (ns, nt) = (sim.rows as f64, sim.cols as f64);
    let value = align * (ns + nt) / (2.0 * ns * nt);
    Ok(score(value, SimilarityMethod::OptimalAlignment, s, t))
}

pub fn aggregation(bi: &BilingualSpace, s: &TokenBag, t: &TokenBag) -> Result<SentenceScore> {
    ensure_nonempty(s, t)?;
    // The map is linear, so mapping the mean equals the mean of the mapped vectors.
    let source_mean = mean_row(s.rows(), |r| bi.source().row(r), bi.source().dim());
    let mapped_mean = bi.map_vector(&source_mean)?;
    let target_mean = mean_row(t.rows(), |r| bi.target().row(r), bi.target().dim());
    let value = vecops::cosine(&mapped_mean, &target_mean)
        .ok_or_else(|| Error::Domain("zero aggregate vector".into()))?;
    Ok(score(value, SimilarityMethod::Aggregation, s, t))
}

pub fn score_bags(
    bi: &BilingualSpace,
    s: &TokenBag,
    t: &TokenBag,
    method: SimilarityMethod,
) -> Result<SentenceScore> {
    match method {
        SimilarityMethod::GreedyAssociation => greedy_association(bi, s, t),
        SimilarityMethod::OptimalAlignment => optimal_alignment(bi, s, t),
        SimilarityMethod::Aggregation => aggregation(bi, s, t),
    }
}

/// Tokenizes both texts against their spaces and scores them.
pub fn score_pair(
    bi: &BilingualSpace,
    text_s: &str,
    text_t: &str,
    method: SimilarityMethod,
) -> Result<SentenceScore> {
    let s = TokenBag::new(text_s, bi.source());
    let t = TokenBag::new(text_t, bi.target());
    score_bags(bi, &s, &t, method)
}

/// Scores many sentence pairs, in input order, on up to `jobs` threads.
pub fn score_batch<A, B>(
    bi: &BilingualSpace,
    pairs: &[(A, B)],
    method: SimilarityMethod,
    jobs: usize,
) -> Vec<Result<SentenceScore>>
where
    A: AsRef<str> + Sync,
    B: AsRef<str> + Sync,
{
    par::map_ordered(pairs, jobs, |(a, b)| {
        score_pair(bi, a.as_ref(), b.as_ref(), method)
    })
}

fn score(value: f64, method: SimilarityMethod, s: &TokenBag, t: &TokenBag) -> SentenceScore {
    SentenceScore {
        value,
        method,
        oov_source: s.oov_count(),
        oov_target: t.oov_count(),
    }
}

fn ensure_nonempty(s: &TokenBag, t: &TokenBag) -> Result<()> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::EmptyInput {
            oov_source: s.oov_count(),
            oov_target: t.oov_count(),
        });
    }
    Ok(())
}

/// Sums after sorting so the result does not depend on token order.
fn ordered_sum(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.into_iter().sum()
}

fn mean_row<'a>(rows: &[usize], row: impl Fn(usize) -> &'a [f32], dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0f64; dim];
    for &r in rows {
        for (a, &x) in acc.iter_mut().zip(row(r)) {
            *a += f64::from(x);
        }
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Pairwise word similarities between a source and a target bag, row-major
/// `|S| × |T|`.
struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    fn build(bi: &BilingualSpace, s: &TokenBag, t: &TokenBag) -> Result<Self> {
        ensure_nonempty(s, t)?;
        let degenerate =
            |w: &str| Error::Domain(format!("degenerate embedding: zero-norm vector for '{w}'"));

        let mut source = Vec::with_capacity(s.len());
        for (&r, word) in s.rows().iter().zip(s.tokens()) {
            let mut v = bi.map_row(r);
            if !vecops::normalize(&mut v) {
                return Err(degenerate(word));
            }
            source.push(v);
        }
        let mut target = Vec::with_capacity(t.len());
        for (&r, word) in t.rows().iter().zip(t.tokens()) {
            let mut v = bi.target().row_f64(r);
            if !vecops::normalize(&mut v) {
                return Err(degenerate(word));
            }
            target.push(v);
        }

        let mut values = Vec::with_capacity(source.len() * target.len());
        for a in &source {
            values.extend(target.iter().map(|b| unit_dot(a, b).clamp(-1.0, 1.0)));
        }
        Ok(SimilarityMatrix {
            rows: source.len(),
            cols: target.len(),
            values,
        })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// Best partner value for source token `i`; the first maximum wins.
    fn row_max(&self, i: usize) -> f64 {
        first_max((0..self.cols).map(|j| self.at(i, j)))
    }

    fn col_max(&self, j: usize) -> f64 {
        first_max((0..self.rows).map(|i| self.at(i, j)))
    }

    /// Largest sum of similarities over one-to-one alignments of the shorter
    /// bag into the longer one. The shorter side is padded with tokens of
    /// similarity −1 for the solver; those pairs are left out of the sum.
    fn best_alignment(&self) -> Result<f64> {
        let n = self.rows.max(self.cols);
        let mut square = vec![PAD_SIMILARITY; n * n];
        for i in 0..self.rows {
            square[i * n..i * n + self.cols]
                .copy_from_slice(&self.values[i * self.cols..(i + 1) * self.cols]);
        }
        let solution = solve_max_assignment_flat(&square, n)?;
        let real: Vec<f64> = solution
            .matching
            .iter()
            .enumerate()
            .filter(|&(i, &j)| i < self.rows && j < self.cols)
            .map(|(i, &j)| self.at(i, j))
            .collect();
        Ok(ordered_sum(real))
    }
}

fn first_max(values: impl Iterator<Item = f64>) -> f64 {
    values
        .reduce(|best, x| {
            if x.total_cmp(&best) == Ordering::Greater {
                x
            } else {
                best
            }
        })
        .expect("nonempty bag")
}

/// Dot product with four independent accumulators. The summation order is
/// fixed by position only, so equal inputs always give equal outputs.
#[inline]
fn unit_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
