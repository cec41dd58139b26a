//! Parallel-sentence mining: score every source sentence against every
//! target sentence of a comparable document pair and keep those at or above
//! a threshold.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::evalkit::{Candidate, RankedCandidates};
use crate::mapper::BilingualSpace;
use crate::par;
use crate::scorer::{score_bags, SimilarityMethod};
use crate::textprep::TokenBag;

#[derive(Clone, Debug, PartialEq)]
pub struct ComparablePair {
    pub doc_s: Vec<String>,
    pub doc_t: Vec<String>,
    gold: Option<HashSet<(usize, usize)>>,
}

impl ComparablePair {
    pub fn new(
        doc_s: Vec<String>,
        doc_t: Vec<String>,
        gold: Option<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if let Some(g) = &gold {
            if let Some(&(i, j)) = g
                .iter()
                .find(|&&(i, j)| i >= doc_s.len() || j >= doc_t.len())
            {
                return Err(Error::Domain(format!(
                    "gold alignment ({i}, {j}) out of range for documents of {} and {} sentences",
                    doc_s.len(),
                    doc_t.len()
                )));
            }
        }
        Ok(ComparablePair {
            doc_s,
            doc_t,
            gold: gold.map(|g| g.into_iter().collect()),
        })
    }

    /// Two one-sentence-per-line files and an optional
    /// `index_s<TAB>index_t` gold file (0-based line indices).
    pub fn load(
        doc_s: impl AsRef<Path>,
        doc_t: impl AsRef<Path>,
        gold: Option<&Path>,
    ) -> Result<Self> {
        let gold = match gold {
            Some(p) => {
                let f = File::open(p).map_err(|e| Error::io(p, e))?;
                Some(read_alignment_gold(BufReader::new(f))?)
            }
            None => None,
        };
        ComparablePair::new(read_sentences(doc_s)?, read_sentences(doc_t)?, gold)
    }

    pub fn gold(&self) -> Option<&HashSet<(usize, usize)>> {
        self.gold.as_ref()
    }
}

/// One sentence per line; line `i` is sentence `i`.
pub fn read_sentences(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(n, l)| {
            l.map(|s| s.trim_end_matches('\r').to_string())
                .map_err(|e| Error::parse(n + 1, e.to_string()))
        })
        .collect()
}

pub fn read_alignment_gold<R: BufRead>(reader: R) -> Result<Vec<(usize, usize)>> {
    let mut gold = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = match fields.as_slice() {
            [a, b] => a.trim().parse().ok().zip(b.trim().parse().ok()),
            _ => None,
        };
        let pair = parsed.ok_or_else(|| Error::parse(line_no, "expected 'index_s<TAB>index_t'"))?;
        gold.push(pair);
    }
    Ok(gold)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiningConfig {
    tau: Option<f64>,
    pub method: SimilarityMethod,
    pub jobs: usize,
}

impl MiningConfig {
    pub fn new(tau: Option<f64>, method: SimilarityMethod) -> Result<Self> {
        if let Some(t) = tau {
            if !(-1.0..=1.0).contains(&t) {
                return Err(Error::Domain(format!("threshold {t} outside [-1, 1]")));
            }
        }
        Ok(MiningConfig {
            tau,
            method,
            jobs: 1,
        })
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiningResult {
    /// The full cross product, best first. Labels come from the gold
    /// alignments (all `false` without them).
    pub ranked: RankedCandidates,
    /// Candidates scoring at least `tau`, in ranked order; empty when no
    /// threshold is set.
    pub emitted: Vec<Candidate>,
}

pub fn mine_parallel(
    bi: &BilingualSpace,
    cp: &ComparablePair,
    cfg: &MiningConfig,
) -> Result<MiningResult> {
    if cp.doc_s.is_empty() || cp.doc_t.is_empty() {
        return Err(Error::Domain(
            "both documents must contain sentences".into(),
        ));
    }
    let bags_s: Vec<TokenBag> = cp
        .doc_s
        .iter()
        .map(|s| TokenBag::new(s, bi.source()))
        .collect();
    let bags_t: Vec<TokenBag> = cp
        .doc_t
        .iter()
        .map(|t| TokenBag::new(t, bi.target()))
        .collect();

    let rows: Vec<usize> = (0..bags_s.len()).collect();
    let scored = par::map_ordered(&rows, cfg.jobs, |&i| {
        bags_t
            .iter()
            .enumerate()
            .map(|(j, t)| match score_bags(bi, &bags_s[i], t, cfg.method) {
                Ok(s) => s.value,
                Err(e) => {
                    log::debug!("sentence pair ({i}, {j}) unscoreable, scored 0: {e}");
                    0.0
                }
            })
            .collect::<Vec<f64>>()
    });

    let mut items = Vec::with_capacity(bags_s.len() * bags_t.len());
    for (i, row) in scored.into_iter().enumerate() {
        for (j, score) in row.into_iter().enumerate() {
            let label = cp.gold.as_ref().is_some_and(|g| g.contains(&(i, j)));
            items.push(Candidate {
                id_a: i,
                id_b: j,
                score,
                label,
            });
        }
    }
    let ranked = RankedCandidates::new(items);
    let emitted = match cfg.tau {
        Some(tau) => ranked
            .items()
            .iter()
            .filter(|c| c.score >= tau)
            .cloned()
            .collect(),
        None => Vec::new(),
    };
    Ok(MiningResult { ranked, emitted })
}

/// `index_s<TAB>index_t<TAB>score` lines, scores with 6 decimals.
pub fn write_candidates<W: Write + ?Sized>(
    w: &mut W,
    candidates: &[Candidate],
) -> std::io::Result<()> {
    for c in candidates {
        writeln!(w, "{}\t{}\t{:.6}", c.id_a, c.id_b, c.score)?;
    }
    Ok(())
}
