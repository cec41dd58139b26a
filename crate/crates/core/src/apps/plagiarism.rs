//! Cross-lingual plagiarism fragment retrieval.
//!
//! Documents are cut into overlapping windows of sentences. Each fragment of
//! a suspicious document (written in the source language of the bilingual
//! space) is compared with every fragment of the candidate source documents
//! (target language), and the best `k` are kept.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::mapper::BilingualSpace;
use crate::par;
use crate::scorer::{score_bags, SimilarityMethod};
use crate::textprep::TokenBag;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_STRIDE: usize = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub text: String,
    /// Character (not byte) offsets into the document, end exclusive.
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentedDoc {
    pub doc_id: String,
    pub fragments: Vec<Fragment>,
}

/// One sentence per line. Each fragment spans `window` consecutive
/// non-blank lines, starting every `stride` lines; the last window is cut
/// short when it would run past the end.
pub fn segment_document(
    doc_id: impl Into<String>,
    text: &str,
    window: usize,
    stride: usize,
) -> Result<FragmentedDoc> {
    if window < 1 || stride < 1 {
        return Err(Error::Domain("window and stride must be at least 1".into()));
    }

    // (char start, char end, byte start, byte end) per sentence
    let mut sentences = Vec::new();
    let mut char_pos = 0usize;
    let mut byte_pos = 0usize;
    for line in text.split('\n') {
        let body = line.strip_suffix('\r').unwrap_or(line);
        let chars = body.chars().count();
        if !body.trim().is_empty() {
            sentences.push((char_pos, char_pos + chars, byte_pos, byte_pos + body.len()));
        }
        char_pos += line.chars().count() + 1;
        byte_pos += line.len() + 1;
    }
    if sentences.is_empty() {
        return Err(Error::Domain("document has no sentences".into()));
    }

    let mut fragments = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + window).min(sentences.len());
        let first = sentences[start];
        let last = sentences[end - 1];
        fragments.push(Fragment {
            text: text[first.2..last.3].to_string(),
            char_start: first.0,
            char_end: last.1,
        });
        if end == sentences.len() {
            break;
        }
        start += stride;
        if start >= sentences.len() {
            break;
        }
    }
    Ok(FragmentedDoc {
        doc_id: doc_id.into(),
        fragments,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Retrieval {
    pub doc_id: String,
    pub fragment: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FragmentRanking {
    /// Retrieval depth the lists were cut to.
    pub k: usize,
    /// Number of source fragments every suspicious fragment was scored against.
    pub candidates: usize,
    /// Best-first retrievals for each suspicious fragment, in fragment order.
    pub per_fragment: Vec<Vec<Retrieval>>,
}

impl FragmentRanking {
    fn top(&self, fragment: usize, k: usize) -> &[Retrieval] {
        let list = &self.per_fragment[fragment];
        &list[..k.min(list.len())]
    }
}

/// Scores every suspicious fragment against every source fragment and keeps
/// the best `k` for each. Ties go to the smaller `(doc_id, fragment)`.
pub fn rank_fragments(
    bi: &BilingualSpace,
    suspicious: &FragmentedDoc,
    sources: &[FragmentedDoc],
    method: SimilarityMethod,
    k: usize,
    jobs: usize,
) -> Result<FragmentRanking> {
    if k < 1 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let targets: Vec<(&FragmentedDoc, usize, &Fragment, TokenBag)> = sources
        .iter()
        .flat_map(|doc| {
            doc.fragments
                .iter()
                .enumerate()
                .map(move |(i, f)| (doc, i, f, TokenBag::new(&f.text, bi.target())))
        })
        .collect();
    if targets.is_empty() {
        return Err(Error::Domain("no source fragments to rank".into()));
    }
    let queries: Vec<TokenBag> = suspicious
        .fragments
        .iter()
        .map(|f| TokenBag::new(&f.text, bi.source()))
        .collect();

    let per_fragment = par::map_ordered(&queries, jobs, |query| {
        let mut hits: Vec<Retrieval> = targets
            .iter()
            .map(|(doc, i, frag, bag)| Retrieval {
                doc_id: doc.doc_id.clone(),
                fragment: *i,
                char_start: frag.char_start,
                char_end: frag.char_end,
                score: score_bags(bi, query, bag, method)
                    .map(|s| s.value)
                    .unwrap_or(0.0),
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
                .then(a.fragment.cmp(&b.fragment))
        });
        hits.truncate(k);
        hits
    });
    Ok(FragmentRanking {
        k,
        candidates: targets.len(),
        per_fragment,
    })
}

/// A gold plagiarism case: a span of the suspicious document copied from a
/// span of a source document. Offsets are characters, end exclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlagiarismCase {
    pub susp_start: usize,
    pub susp_end: usize,
    pub source_doc_id: String,
    pub src_start: usize,
    pub src_end: usize,
}

/// `susp_start<TAB>susp_end<TAB>source_doc_id<TAB>src_start<TAB>src_end` lines.
pub fn read_plagiarism_gold<R: BufRead>(reader: R) -> Result<Vec<PlagiarismCase>> {
    let mut cases = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(
                line_no,
                format!("expected 5 tab-separated fields, found {}", f.len()),
            ));
        }
        let num = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad offset {s:?}")))
        };
        let case = PlagiarismCase {
            susp_start: num(f[0])?,
            susp_end: num(f[1])?,
            source_doc_id: f[2].trim().to_string(),
            src_start: num(f[3])?,
            src_end: num(f[4])?,
        };
        if case.susp_start >= case.susp_end || case.src_start >= case.src_end {
            return Err(Error::parse(
                line_no,
                "case spans must be nonempty (start < end)",
            ));
        }
        cases.push(case);
    }
    Ok(cases)
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0.max(b.0) < a.1.min(b.1)
}

/// Fraction of plagiarized characters recalled at depth `k`.
///
/// A character of a gold case is recalled when some suspicious fragment
/// containing it lists, among its top `k`, a fragment of the case's source
/// document that overlaps the case's source span.
pub fn char_recall_at_k(
    suspicious: &FragmentedDoc,
    ranking: &FragmentRanking,
    gold: &[PlagiarismCase],
    k: usize,
) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Domain("no gold plagiarism cases".into()));
    }
    if k < 1 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if k > ranking.k && ranking.k < ranking.candidates {
        return Err(Error::Domain(format!(
            "recall at {k} requested from a ranking cut at {}",
            ranking.k
        )));
    }
    if ranking.per_fragment.len() != suspicious.fragments.len() {
        return Err(Error::Domain(
            "ranking does not match the suspicious document".into(),
        ));
    }

    let mut total = 0usize;
    let mut recalled = 0usize;
    for case in gold {
        let span = (case.susp_start, case.susp_end);
        let mut covered = vec![false; span.1 - span.0];
        for (f, frag) in suspicious.fragments.iter().enumerate() {
            let fspan = (frag.char_start, frag.char_end);
            if !overlaps(fspan, span) {
                continue;
            }
            let hit = ranking.top(f, k).iter().any(|r| {
                r.doc_id == case.source_doc_id
                    && overlaps((r.char_start, r.char_end), (case.src_start, case.src_end))
            });
            if hit {
                let lo = fspan.0.max(span.0) - span.0;
                let hi = fspan.1.min(span.1) - span.0;
                covered[lo..hi].fill(true);
            }
        }
        total += covered.len();
        recalled += covered.iter().filter(|&&c| c).count();
    }
    Ok(recalled as f64 / total as f64)
}
