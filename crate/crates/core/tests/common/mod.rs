//! Fixtures and from-definition reference implementations shared by the
//! integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use clsts::embed::EmbeddingSpace;
use clsts::mapper::{BilingualSpace, MappingMethod, TranslationMatrix};
use rand::Rng;

pub fn space(lang: &str, dim: usize, rows: &[(&str, &[f32])]) -> EmbeddingSpace {
    EmbeddingSpace::from_rows(
        lang,
        dim,
        rows.iter().map(|(w, v)| (w.to_string(), v.to_vec())),
    )
    .unwrap()
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// `n` words `{prefix}{i}` with Gaussian components.
pub fn random_space(
    rng: &mut impl Rng,
    lang: &str,
    prefix: &str,
    n: usize,
    dim: usize,
) -> EmbeddingSpace {
    let rows: Vec<(String, Vec<f32>)> = (0..n)
        .map(|i| {
            let v: Vec<f32> = (0..dim).map(|_| gaussian(rng) as f32).collect();
            (format!("{prefix}{i}"), v)
        })
        .collect();
    EmbeddingSpace::from_rows(lang, dim, rows).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> TranslationMatrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| gaussian(rng)).collect();
    TranslationMatrix::from_row_major(rows, cols, data, MappingMethod::Identity).unwrap()
}

/// Source space `s*`, target space `t*` and a random map between them.
pub fn random_bilingual(rng: &mut impl Rng, words: usize, ds: usize, dt: usize) -> BilingualSpace {
    let source = random_space(rng, "xx", "s", words, ds);
    let target = random_space(rng, "yy", "t", words, dt);
    let m = random_matrix(rng, dt, ds);
    BilingualSpace::new(Arc::new(source), Arc::new(target), m).unwrap()
}

/// Sentence of `len` words drawn from `{prefix}0..{prefix}{vocab-1}`.
pub fn random_sentence(rng: &mut impl Rng, prefix: &str, vocab: usize, len: usize) -> String {
    (0..len)
        .map(|_| format!("{prefix}{}", rng.random_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

// ---- reference implementations ----

pub fn ref_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn ref_map(m: &TranslationMatrix, v: &[f32]) -> Vec<f64> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.get(r, c) * f64::from(v[c])).sum())
        .collect()
}

/// `sim[i][j]` between source words and target words, from scratch.
pub fn ref_sim_matrix(bi: &BilingualSpace, s: &[&str], t: &[&str]) -> Vec<Vec<f64>> {
    s.iter()
        .map(|ws| {
            let mapped = ref_map(bi.matrix(), bi.source().lookup(ws).unwrap());
            t.iter()
                .map(|wt| {
                    let tv: Vec<f64> = bi
                        .target()
                        .lookup(wt)
                        .unwrap()
                        .iter()
                        .map(|&x| f64::from(x))
                        .collect();
                    ref_cosine(&mapped, &tv)
                })
                .collect()
        })
        .collect()
}

/// Every permutation of `0..n`, lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Best total and the lexicographically first permutation attaining it
/// (ties within `tol`).
pub fn brute_assignment(w: &[Vec<f64>], tol: f64) -> (f64, Vec<usize>) {
    let n = w.len();
    let totals: Vec<(f64, Vec<usize>)> = permutations(n)
        .into_iter()
        .map(|p| ((0..n).map(|i| w[i][p[i]]).sum(), p))
        .collect();
    let best = totals
        .iter()
        .map(|(t, _)| *t)
        .fold(f64::NEG_INFINITY, f64::max);
    let first = totals.into_iter().find(|(t, _)| *t >= best - tol).unwrap();
    (best, first.1)
}

/// Maximum over injective maps of the smaller side into the larger.
pub fn brute_align(sim: &[Vec<f64>]) -> f64 {
    let (ns, nt) = (sim.len(), sim[0].len());
    let small = ns.min(nt);
    let large = ns.max(nt);
    let at = |i: usize, j: usize| if ns <= nt { sim[i][j] } else { sim[j][i] };
    let mut best = f64::NEG_INFINITY;
    for p in permutations(large) {
        let total: f64 = (0..small).map(|i| at(i, p[i])).sum();
        best = best.max(total);
    }
    best
}

pub fn brute_oas(sim: &[Vec<f64>]) -> f64 {
    let (ns, nt) = (sim.len() as f64, sim[0].len() as f64);
    brute_align(sim) * (ns + nt) / (2.0 * ns * nt)
}

pub fn brute_gas(sim: &[Vec<f64>]) -> f64 {
    let ns = sim.len();
    let nt = sim[0].len();
    let s_side: f64 = sim
        .iter()
        .map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / ns as f64;
    let t_side: f64 = (0..nt)
        .map(|j| (0..ns).map(|i| sim[i][j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / nt as f64;
    0.5 * (s_side + t_side)
}

/// Textbook formula `cov / (sd_x sd_y)` through raw moments.
pub fn ref_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Precision at every positive rank, averaged.
pub fn ref_average_precision(labels: &[bool]) -> f64 {
    let p = labels.iter().filter(|&&l| l).count();
    let mut total = 0.0;
    for (rank, _) in labels.iter().enumerate().filter(|(_, &l)| l) {
        let prefix = &labels[..=rank];
        let hits = prefix.iter().filter(|&&l| l).count();
        total += hits as f64 / prefix.len() as f64;
    }
    total / p as f64
}

/// Best recall over the nonempty prefixes that reach the target precision.
pub fn ref_recall_at_precision(labels: &[bool], target: f64) -> f64 {
    let p = labels.iter().filter(|&&l| l).count();
    (1..=labels.len())
        .filter_map(|len| {
            let hits = labels[..len].iter().filter(|&&l| l).count();
            (hits as f64 / len as f64 >= target).then_some(hits as f64 / p as f64)
        })
        .fold(0.0, f64::max)
}
