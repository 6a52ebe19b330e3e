//! Pipeline statistics against brute-force references that count n-grams
//! directly in the raw corpus and sort every distribution.

use mgtd_core::features::{cumulative_probability_of, entropy_of, probability_of, rank_of};
use mgtd_core::scoring::{
    score_sequence, train_ngram, LanguageModel, NextTokenDistribution, TokenSequence, TokenUnit, Vocabulary,
};
use mgtd_core::TextSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (p, rank, c, e) from a fully sorted copy of the distribution.
fn sorted_oracle(probs: &[f64], token: usize) -> (f64, u32, f64, f64) {
    let mut order: Vec<(f64, usize)> = probs.iter().copied().zip(0..).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let rank = order.iter().position(|&(_, id)| id == token).unwrap() as u32 + 1;
    let px = probs[token];
    let mut c = 0.0;
    for &(p, _) in &order {
        if p > px {
            c += p;
        } else {
            break;
        }
    }
    let e = order
        .iter()
        .map(|&(p, _)| if p == 0.0 { 0.0 } else { -p * p.ln() })
        .sum();
    (px, rank, c, e)
}

fn random_distribution(rng: &mut ChaCha8Rng, v: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..v)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => 0.5, // repeated weights create ties
            _ => rng.random::<f64>(),
        })
        .collect();
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

#[test]
fn feature_functions_match_sorted_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let v = rng.random_range(1..=50);
        let probs = random_distribution(&mut rng, v);
        let dist = NextTokenDistribution::new(probs.clone()).unwrap();
        let tok = rng.random_range(0..v);
        let (p, r, c, e) = sorted_oracle(&probs, tok);
        assert_eq!(probability_of(&dist, tok as u32), p);
        assert_eq!(rank_of(&dist, tok as u32), r);
        assert!((cumulative_probability_of(&dist, tok as u32) - c).abs() <= 1e-9);
        assert!((entropy_of(&dist) - e).abs() <= 1e-9);
    }
}

/// Smoothed n-gram probability by scanning the padded corpus for the context.
fn counted_distribution(texts: &[String], vocab: &Vocabulary, order: usize, alpha: f64, history: &[u32]) -> Vec<f64> {
    let ctx_len = order - 1;
    let bos = vocab.bos();
    let mut padded_hist = vec![bos; ctx_len];
    padded_hist.extend_from_slice(history);
    let ctx = &padded_hist[padded_hist.len() - ctx_len..];

    let mut counts = vec![0u64; vocab.size()];
    let mut unigram = vec![0u64; vocab.size()];
    for t in texts {
        let ids = vocab.tokenize(t, "").unwrap().ids;
        let mut padded = vec![bos; ctx_len];
        padded.extend_from_slice(&ids);
        for i in ctx_len..padded.len() {
            unigram[padded[i] as usize] += 1;
            if &padded[i - ctx_len..i] == ctx {
                counts[padded[i] as usize] += 1;
            }
        }
    }
    let table = if ctx_len > 0 && counts.iter().sum::<u64>() > 0 {
        counts
    } else {
        unigram
    };
    let total: u64 = table.iter().sum();
    let denom = total as f64 + alpha * vocab.size() as f64;
    table.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

#[test]
fn ngram_scoring_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphabet: Vec<char> = "abcdefghij klmno".chars().collect();
    let texts: Vec<String> = (0..30)
        .map(|_| {
            (0..rng.random_range(5..60))
                .map(|_| alphabet[rng.random_range(0..alphabet.len()).min(rng.random_range(0..alphabet.len()))])
                .collect()
        })
        .collect();
    let corpus: Vec<TextSample> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| TextSample::human(format!("d{i}"), t.clone()))
        .collect();

    for (order, alpha) in [(1, 1.0), (2, 1.0), (3, 0.1), (4, 0.5)] {
        let model = train_ngram(&corpus, order, alpha, TokenUnit::Char).unwrap();
        let vocab = model.vocab().clone();
        assert!(vocab.size() <= 50);
        for trial in 0..10 {
            // random 20-token sequences, including UNK
            let ids: Vec<u32> = (0..20)
                .map(|_| {
                    if rng.random_range(0..20) == 0 {
                        vocab.unk()
                    } else {
                        rng.random_range(0..vocab.num_regular() as u32)
                    }
                })
                .collect();
            let seq = TokenSequence::new(ids.clone(), format!("t{trial}"));
            let stats = score_sequence(&model, &seq).unwrap();
            assert_eq!(stats.len(), 20);
            for (i, s) in stats.iter().enumerate() {
                let probs = counted_distribution(&texts, &vocab, order, alpha, &ids[..i]);
                let (p, r, c, e) = sorted_oracle(&probs, ids[i] as usize);
                assert_eq!(s.position, i as u32 + 1);
                assert!((s.p - p).abs() <= 1e-9, "order {order} pos {i}: {} vs {p}", s.p);
                assert_eq!(s.r, r);
                assert!((s.c - c).abs() <= 1e-9);
                assert!((s.e - e).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn mode_token_has_rank_one_and_no_mass_above() {
    let corpus = vec![TextSample::human("a", "aaaab")];
    let model = train_ngram(&corpus, 2, 1.0, TokenUnit::Char).unwrap();
    let a = model.vocab().id("a");
    let stats = score_sequence(&model, &TokenSequence::new(vec![a, a, a], "x")).unwrap();
    for s in &stats {
        assert_eq!(s.r, 1);
        assert_eq!(s.c, 0.0);
    }
}

#[test]
fn scoring_is_deterministic() {
    let corpus = vec![TextSample::human("a", mgtd_core::BUNDLED_CORPUS[..5000].to_string())];
    let model = train_ngram(&corpus, 3, 0.5, TokenUnit::Char).unwrap();
    let seq = model.vocab().tokenize(&mgtd_core::BUNDLED_CORPUS[6000..6400], "x").unwrap();
    assert_eq!(score_sequence(&model, &seq).unwrap(), score_sequence(&model, &seq).unwrap());
}
