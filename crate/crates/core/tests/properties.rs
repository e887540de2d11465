use extsum::corpus::Document;
use extsum::metrics::{approx_randomization, lcs_len, rouge_l, rouge_n};
use extsum::oracle::generate_labels;
use extsum::pipeline::{extract_summary, weighted_loss};
use proptest::prelude::*;

fn tokens(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 0..max)
}

fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let mut best = 0;
    for mask in 0u32..1 << a.len() {
        let sub: Vec<u8> = (0..a.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| a[i])
            .collect();
        let mut it = b.iter();
        if sub.iter().all(|x| it.any(|y| y == x)) {
            best = best.max(sub.len());
        }
    }
    best
}

fn document(sentences: &[Vec<u8>], abstract_: &[u8]) -> Option<Document> {
    let words = |s: &[u8]| {
        s.iter()
            .map(|c| format!("t{c}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let body: Vec<String> = sentences.iter().map(|s| words(s)).collect();
    Document::from_sections("p", &[("body".to_string(), body)], &[words(abstract_)])
}

proptest! {
    #[test]
    fn precision_and_recall_swap(x in tokens(12), y in tokens(12), n in 1usize..3) {
        let a = rouge_n(&x, &y, n);
        let b = rouge_n(&y, &x, n);
        prop_assert_eq!(a.precision, b.recall);
        prop_assert_eq!(a.recall, b.precision);
        prop_assert_eq!(a.f1, b.f1);
    }

    #[test]
    fn scores_are_in_unit_interval(x in tokens(12), y in tokens(12)) {
        for s in [rouge_n(&x, &y, 1), rouge_n(&x, &y, 2), rouge_l(&x, &y)] {
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn rouge_l_of_itself_is_one(x in prop::collection::vec(0u8..4, 1..12)) {
        let s = rouge_l(&x, &x);
        prop_assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn lcs_matches_subsequence_search(a in tokens(9), b in tokens(9)) {
        prop_assert_eq!(lcs_len(&a, &b), brute_lcs(&a, &b));
        prop_assert_eq!(lcs_len(&a, &b), lcs_len(&b, &a));
    }

    #[test]
    fn extra_unmatched_reference_token_lowers_recall(x in prop::collection::vec(0u8..4, 1..10), y in prop::collection::vec(0u8..4, 1..10)) {
        let mut longer = y.clone();
        longer.push(9);
        prop_assert!(rouge_n(&x, &longer, 1).recall <= rouge_n(&x, &y, 1).recall);
    }

    #[test]
    fn randomization_ignores_argument_order(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..15),
        seed in any::<u64>(),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ab = approx_randomization(&a, &b, 200, seed).unwrap();
        let ba = approx_randomization(&b, &a, 200, seed).unwrap();
        prop_assert_eq!(ab.p_value, ba.p_value);
        prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
        prop_assert_eq!(ab.observed_delta, -ba.observed_delta);
    }

    #[test]
    fn weighted_loss_is_non_negative_and_reduces_to_bce(
        items in prop::collection::vec((0.001f64..0.999, 0u8..2), 1..20),
        w in 0.1f64..10.0,
    ) {
        let (p, y): (Vec<f64>, Vec<u8>) = items.into_iter().unzip();
        prop_assert!(weighted_loss(&p, &y, w).unwrap() >= 0.0);
        let bce: f64 = p.iter().zip(&y).map(|(&p, &y)| {
            let y = y as f64;
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        }).sum();
        prop_assert!((weighted_loss(&p, &y, 1.0).unwrap() - bce).abs() <= 1e-12 * bce.max(1.0));
    }

    #[test]
    fn extraction_meets_the_budget(
        sentences in prop::collection::vec(prop::collection::vec(0u8..6, 1..8), 1..10),
        seed_p in prop::collection::vec(0u8..4, 10),
        limit in 1usize..50,
    ) {
        let doc = document(&sentences, &[0]).unwrap();
        let p: Vec<f64> = seed_p[..doc.len()].iter().map(|&x| x as f64).collect();
        let chosen = extract_summary(&doc, &p, limit);
        prop_assert_eq!(&chosen, &extract_summary(&doc, &p, limit));
        prop_assert!(chosen.windows(2).all(|w| w[0] < w[1]));
        let total: usize = chosen.iter().map(|&i| doc.sentences[i].word_count).sum();
        prop_assert!(total >= limit || chosen.len() == doc.len());
    }

    #[test]
    fn oracle_labels_match_picks_and_stop(
        sentences in prop::collection::vec(prop::collection::vec(0u8..6, 1..6), 1..8),
        abstract_ in prop::collection::vec(0u8..6, 1..10),
        limit in 1usize..30,
    ) {
        let doc = document(&sentences, &abstract_).unwrap();
        let labeled = generate_labels(&doc, limit);
        prop_assert_eq!(labeled.labels.len(), doc.len());
        prop_assert_eq!(labeled.positives(), labeled.picked_order.len());
        // Only the last pick may push the word count past the limit.
        let words: Vec<usize> = labeled.picked_order.iter().map(|&i| doc.sentences[i].word_count).collect();
        if words.len() > 1 {
            prop_assert!(words[..words.len() - 1].iter().sum::<usize>() <= limit);
        }
    }
}
