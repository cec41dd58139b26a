mod common;

use std::sync::Arc;

use clsts::apps::{
    char_recall_at_k, mine_parallel, rank_fragments, segment_document, ComparablePair,
    MiningConfig, PlagiarismCase,
};
use clsts::assignment::solve_max_assignment;
use clsts::embed::{EmbeddingFormat, EmbeddingSpace};
use clsts::evalkit::{average_precision, pearson, recall_at_precision, RankedCandidates};
use clsts::mapper::{
    evaluate_matrix, train_matrix, BilingualSpace, MappingMethod, TrainOptions, TranslationMatrix,
    TranslationPairSet,
};
use clsts::scorer::{score_bags, score_pair, SimilarityMethod};
use clsts::textprep::{tokenize, TokenBag};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bag_words(bag: &TokenBag) -> Vec<&str> {
    bag.tokens().iter().map(String::as_str).collect()
}

/// Monolingual space of `n` words `w{i}` with Gaussian components.
fn mono(seed: u64, n: usize, dim: usize) -> BilingualSpace {
    BilingualSpace::monolingual(Arc::new(random_space(&mut rng(seed), "xx", "w", n, dim)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embeddings_round_trip_bit_exact(
        rows in prop::collection::btree_map("[a-z]{1,6}", prop::collection::vec(-1e6f32..1e6f32, 3), 1..20)
    ) {
        let space = EmbeddingSpace::from_rows("xx", 3, rows.clone()).unwrap();
        let mut buf = Vec::new();
        space.write(&mut buf).unwrap();
        let back = EmbeddingSpace::read(buf.as_slice(), EmbeddingFormat::Auto, None).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (w, v) in &rows {
            let got = back.lookup(w).unwrap();
            prop_assert!(got.iter().zip(v).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn matrix_file_round_trip_is_exact(seed in any::<u64>(), r in 1usize..6, c in 1usize..6) {
        let m = random_matrix(&mut rng(seed), r, c).with_langs("es", "en");
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = TranslationMatrix::read(buf.as_slice()).unwrap();
        prop_assert_eq!(back.as_slice(), m.as_slice());
        prop_assert_eq!(back.source_lang, "es");
    }

    #[test]
    fn least_squares_beats_perturbations(seed in any::<u64>(), n in 3usize..30) {
        let mut g = rng(seed);
        let bi = random_bilingual(&mut g, n, 3, 4);
        let raw: Vec<(String, String)> = (0..n).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
        let pairs = TranslationPairSet::resolve(raw, bi.source(), bi.target());
        let m = train_matrix(bi.source(), bi.target(), &pairs, MappingMethod::LeastSquares, &TrainOptions::default()).unwrap();
        let base = m.mean_squared_residual(bi.source(), bi.target(), &pairs);
        let scale: f64 = m.as_slice().iter().map(|x| x * x).sum();
        for _ in 0..100 {
            let eps = 10f64.powi(g.random_range(-6..0));
            let data: Vec<f64> = m.as_slice().iter().map(|x| x + eps * gaussian(&mut g)).collect();
            let other = TranslationMatrix::from_row_major(m.rows(), m.cols(), data, MappingMethod::LeastSquares).unwrap();
            let loss = other.mean_squared_residual(bi.source(), bi.target(), &pairs);
            prop_assert!(loss * n as f64 >= base * n as f64 - 1e-6 * scale.max(1.0), "{loss} < {base}");
        }
    }

    #[test]
    fn mapping_is_linear(seed in any::<u64>(), alpha in -10.0f64..10.0, beta in -10.0f64..10.0) {
        let mut g = rng(seed);
        let m = random_matrix(&mut g, 4, 5);
        let bi = BilingualSpace::new(
            Arc::new(random_space(&mut g, "a", "s", 1, 5)),
            Arc::new(random_space(&mut g, "b", "t", 1, 4)),
            m,
        ).unwrap();
        let u: Vec<f64> = (0..5).map(|_| gaussian(&mut g)).collect();
        let v: Vec<f64> = (0..5).map(|_| gaussian(&mut g)).collect();
        let comb: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = bi.map_vector(&comb).unwrap();
        let (mu, mv) = (bi.map_vector(&u).unwrap(), bi.map_vector(&v).unwrap());
        for i in 0..4 {
            prop_assert!((lhs[i] - (alpha * mu[i] + beta * mv[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn precision_at_k_is_bounded_and_nondecreasing(seed in any::<u64>()) {
        let mut g = rng(seed);
        let bi = random_bilingual(&mut g, 40, 4, 4);
        let raw: Vec<(String, String)> = (0..20).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
        let pairs = TranslationPairSet::resolve(raw, bi.source(), bi.target());
        let ranks = [1, 2, 5, 10, 40];
        let p = evaluate_matrix(&bi, &pairs, &ranks).unwrap();
        let values: Vec<f64> = ranks.iter().map(|k| p[k]).collect();
        prop_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(values[4], 1.0);
    }

    #[test]
    fn assignment_matches_brute_force(seed in any::<u64>(), n in 1usize..7, shift in -5.0f64..5.0) {
        let mut g = rng(seed);
        let w: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
        let res = solve_max_assignment(&w).unwrap();
        let (best, _) = brute_assignment(&w, 0.0);
        prop_assert!((res.total - best).abs() < 1e-9);
        let mut seen = vec![false; n];
        for &j in &res.matching { prop_assert!(!seen[j]); seen[j] = true; }

        let shifted: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| x + shift).collect()).collect();
        let res2 = solve_max_assignment(&shifted).unwrap();
        prop_assert!((res2.total - (res.total + n as f64 * shift)).abs() < 1e-9);
        let (best2, _) = brute_assignment(&shifted, 0.0);
        prop_assert!((res2.total - best2).abs() < 1e-9);
    }

    #[test]
    fn assignment_tie_break_is_lexicographic(seed in any::<u64>(), n in 1usize..6) {
        let mut g = rng(seed);
        let w: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| f64::from(g.random_range(0..3u8))).collect()).collect();
        let res = solve_max_assignment(&w).unwrap();
        let (best, first) = brute_assignment(&w, 0.0);
        prop_assert_eq!(res.total, best);
        prop_assert_eq!(res.matching, first);
    }

    #[test]
    fn gas_is_symmetric(seed in any::<u64>(), ls in 1usize..8, lt in 1usize..8) {
        let bi = mono(seed, 12, 5);
        let mut g = rng(seed ^ 1);
        let a = random_sentence(&mut g, "w", 12, ls);
        let b = random_sentence(&mut g, "w", 12, lt);
        let ab = score_pair(&bi, &a, &b, SimilarityMethod::GreedyAssociation).unwrap().value;
        let ba = score_pair(&bi, &b, &a, SimilarityMethod::GreedyAssociation).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn scores_match_definitions(seed in any::<u64>(), ls in 1usize..7, lt in 1usize..7) {
        let mut g = rng(seed);
        let bi = random_bilingual(&mut g, 10, 4, 3);
        let s = TokenBag::new(&random_sentence(&mut g, "s", 10, ls), bi.source());
        let t = TokenBag::new(&random_sentence(&mut g, "t", 10, lt), bi.target());
        let sim = ref_sim_matrix(&bi, &bag_words(&s), &bag_words(&t));
        let oas = score_bags(&bi, &s, &t, SimilarityMethod::OptimalAlignment).unwrap().value;
        let gas = score_bags(&bi, &s, &t, SimilarityMethod::GreedyAssociation).unwrap().value;
        prop_assert!((oas - brute_oas(&sim)).abs() < 1e-9, "{oas} vs {}", brute_oas(&sim));
        prop_assert!((gas - brute_gas(&sim)).abs() < 1e-9);
    }

    #[test]
    fn scores_are_bounded_and_order_free(seed in any::<u64>(), ls in 1usize..10, lt in 1usize..10) {
        let mut g = rng(seed);
        let bi = random_bilingual(&mut g, 15, 6, 5);
        let s = TokenBag::new(&random_sentence(&mut g, "s", 15, ls), bi.source());
        let t = TokenBag::new(&random_sentence(&mut g, "t", 15, lt), bi.target());
        let mut order_s: Vec<usize> = (0..s.len()).collect();
        let mut order_t: Vec<usize> = (0..t.len()).collect();
        order_s.shuffle(&mut g);
        order_t.shuffle(&mut g);
        let (ps, pt) = (s.permuted(&order_s), t.permuted(&order_t));
        for method in SimilarityMethod::ALL {
            let a = score_bags(&bi, &s, &t, method).unwrap().value;
            let b = score_bags(&bi, &ps, &pt, method).unwrap().value;
            prop_assert!(a.abs() <= 1.0 + 1e-12);
            match method {
                SimilarityMethod::Aggregation => prop_assert!((a - b).abs() < 1e-12),
                _ => prop_assert_eq!(a.to_bits(), b.to_bits()),
            }
        }
    }

    #[test]
    fn negating_a_nonnegative_aligned_token_cannot_raise_oas(seed in any::<u64>(), ls in 1usize..6, lt in 1usize..6) {
        // Nonnegative components keep every cosine >= 0.
        let mut g = rng(seed);
        let rows: Vec<(String, Vec<f32>)> = (0..8)
            .map(|i| (format!("w{i}"), (0..4).map(|_| g.random_range(0.0f32..1.0) + 0.01).collect()))
            .collect();
        let mut negated = rows.clone();
        let victim = g.random_range(0..8);
        negated[victim].1.iter_mut().for_each(|x| *x = -*x);
        let target = Arc::new(EmbeddingSpace::from_rows("xx", 4, rows).unwrap());
        let before = BilingualSpace::new(Arc::clone(&target), Arc::clone(&target), TranslationMatrix::identity(4)).unwrap();
        let after = BilingualSpace::new(
            Arc::new(EmbeddingSpace::from_rows("xx", 4, negated).unwrap()),
            target,
            TranslationMatrix::identity(4),
        ).unwrap();
        let s = format!("w{victim} {}", random_sentence(&mut g, "w", 8, ls - 1));
        let t = random_sentence(&mut g, "w", 8, lt);
        let old = score_pair(&before, &s, &t, SimilarityMethod::OptimalAlignment).unwrap().value;
        let new = score_pair(&after, &s, &t, SimilarityMethod::OptimalAlignment).unwrap().value;
        prop_assert!(new <= old + 1e-12, "{new} > {old}");
        let sb = TokenBag::new(&s, after.source());
        let tb = TokenBag::new(&t, after.target());
        let sim = ref_sim_matrix(&after, &bag_words(&sb), &bag_words(&tb));
        prop_assert!((new - brute_oas(&sim)).abs() < 1e-9);
    }

    #[test]
    fn bag_counts_add_up(text in "[a-zA-Z ,.!']{0,40}") {
        let space = space("en", 2, &[("cat", &[1.0, 0.0]), ("dog", &[0.0, 1.0])]);
        let bag = TokenBag::new(&text, &space);
        prop_assert_eq!(bag.len() + bag.oov_count(), tokenize(&text).len());
    }

    #[test]
    fn metrics_match_definitions(labels in prop::collection::vec(any::<bool>(), 1..20), target in 0.01f64..=1.0) {
        prop_assume!(labels.iter().any(|&l| l));
        let rc = RankedCandidates::from_labels(&labels);
        prop_assert_eq!(average_precision(&rc).unwrap(), ref_average_precision(&labels));
        prop_assert_eq!(recall_at_precision(&rc, target).unwrap(), ref_recall_at_precision(&labels, target));
        let lower = recall_at_precision(&rc, target / 2.0).unwrap();
        prop_assert!(lower >= recall_at_precision(&rc, target).unwrap());
        let sorted = labels.iter().skip_while(|&&l| l).all(|&l| !l);
        prop_assert_eq!(average_precision(&rc).unwrap() == 1.0, sorted);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xs in prop::collection::vec(-10.0f64..10.0, 3..30),
        a in 0.1f64..10.0, b in -5.0f64..5.0, seed in any::<u64>()
    ) {
        let mut g = rng(seed);
        let ys: Vec<f64> = xs.iter().map(|x| x + gaussian(&mut g)).collect();
        let r = pearson(&xs, &ys).unwrap();
        let tx: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        prop_assert!((pearson(&tx, &ys).unwrap() - r).abs() < 1e-12);
        prop_assert!((r - ref_pearson(&xs, &ys)).abs() < 1e-12);
    }

    #[test]
    fn mining_threshold_is_monotone(seed in any::<u64>(), ns in 1usize..5, nt in 1usize..5, t1 in -1.0f64..1.0, t2 in -1.0f64..1.0) {
        let mut g = rng(seed);
        let bi = random_bilingual(&mut g, 10, 4, 4);
        let doc_s: Vec<String> = (0..ns).map(|_| random_sentence(&mut g, "s", 10, 3)).collect();
        let doc_t: Vec<String> = (0..nt).map(|_| random_sentence(&mut g, "t", 10, 3)).collect();
        let cp = ComparablePair::new(doc_s, doc_t, None).unwrap();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let count = |tau: f64| {
            let cfg = MiningConfig::new(Some(tau), SimilarityMethod::OptimalAlignment).unwrap();
            mine_parallel(&bi, &cp, &cfg).unwrap().emitted.len()
        };
        prop_assert!(count(lo) >= count(hi));
        prop_assert_eq!(count(-1.0), ns * nt);
    }

    #[test]
    fn fragment_retrieval_is_prefix_stable_and_recall_monotone(seed in any::<u64>(), window in 1usize..4, stride in 1usize..4) {
        let mut g = rng(seed);
        let bi = random_bilingual(&mut g, 10, 4, 4);
        let lines = |g: &mut ChaCha8Rng, p: &str, n: usize| (0..n).map(|_| random_sentence(g, p, 10, 3)).collect::<Vec<_>>().join("\n");
        let susp = segment_document("q", &lines(&mut g, "s", 6), window, stride).unwrap();
        let sources = vec![
            segment_document("a", &lines(&mut g, "t", 5), window, stride).unwrap(),
            segment_document("b", &lines(&mut g, "t", 4), window, stride).unwrap(),
        ];
        let full = rank_fragments(&bi, &susp, &sources, SimilarityMethod::GreedyAssociation, 100, 1).unwrap();
        let gold = vec![PlagiarismCase { susp_start: 0, susp_end: 20, source_doc_id: "a".into(), src_start: 5, src_end: 25 }];
        let mut last = 0.0;
        for k in 1..=6 {
            let top = rank_fragments(&bi, &susp, &sources, SimilarityMethod::GreedyAssociation, k, 1).unwrap();
            for (f, list) in top.per_fragment.iter().enumerate() {
                prop_assert_eq!(&list[..], &full.per_fragment[f][..list.len()]);
                prop_assert!(list.windows(2).all(|w| w[0].score >= w[1].score));
            }
            let r = char_recall_at_k(&susp, &full, &gold, k).unwrap();
            prop_assert!(r >= last && r <= 1.0);
            last = r;
        }
    }

    #[test]
    fn segments_cover_every_sentence_character(
        lines in prop::collection::vec("[a-z ]{0,8}", 1..12), window in 1usize..5, stride in 1usize..5
    ) {
        prop_assume!(stride <= window);
        prop_assume!(lines.iter().any(|l| !l.trim().is_empty()));
        let text = lines.join("\n");
        let doc = segment_document("d", &text, window, stride).unwrap();
        let mut pos = 0;
        for line in &lines {
            if !line.trim().is_empty() {
                for c in pos..pos + line.chars().count() {
                    prop_assert!(doc.fragments.iter().any(|f| f.char_start <= c && c < f.char_end), "char {c} uncovered");
                }
            }
            pos += line.chars().count() + 1;
        }
        for f in &doc.fragments {
            let text_chars: String = text.chars().skip(f.char_start).take(f.char_end - f.char_start).collect();
            prop_assert_eq!(&f.text, &text_chars);
        }
    }
}
