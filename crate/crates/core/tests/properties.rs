mod common;

use proptest::prelude::*;

use common::{apply_edits, exhaustive_min_cost, tiny_setup};
use ged_core::corpus::{spans_to_token_labels, token_types};
use ged_core::edit_analysis::{align, align_edits, apply_script, classify_operation};
use ged_core::embeddings::{mix_layers, LayerMixParams};
use ged_core::evaluation::{accumulate, aggregate, f_beta, f_beta_from_pr, EvalCounts};
use ged_core::model::forward_batch;
use ged_core::training::{adadelta_step, batch_loss, make_batches, AdaDeltaState, Batch};
use ged_core::{Edit, Integration, Label, Operation, Sentence};

fn tokens(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::sample::select(vec!["the", "The", "walk", "walked", "dog", "dig", "a"]),
        0..=max,
    )
    .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

/// Non-overlapping edits over `n` tokens, built left to right.
fn edit_set(n: usize) -> impl Strategy<Value = Vec<Edit>> {
    prop::collection::vec((0usize..3, 0usize..3, any::<bool>()), 0..=n + 1).prop_map(move |plan| {
        let mut edits = Vec::new();
        let mut pos = 0;
        for (gap, len, keep) in plan {
            pos += gap;
            if pos > n {
                break;
            }
            let len = len.min(n - pos);
            let corr: Vec<String> = if keep || len == 0 { vec!["x".into()] } else { vec![] };
            edits.push(Edit::untyped(pos, pos + len, corr).unwrap());
            pos += len.max(1);
        }
        edits
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn labels_follow_span_rules((n, edits) in (1usize..10).prop_flat_map(|n| (Just(n), edit_set(n)))) {
        let labels = spans_to_token_labels(n, &edits);
        prop_assert_eq!(labels.len(), n);
        let types = token_types(n, &edits);
        for t in 0..n {
            let covered = edits.iter().any(|e| {
                if e.o_start == e.o_end { e.o_start.min(n - 1) == t } else { (e.o_start..e.o_end).contains(&t) }
            });
            prop_assert_eq!(labels[t] == Label::Incorrect, covered);
            prop_assert_eq!(types[t].is_some(), covered);
        }
    }

    #[test]
    fn alignment_is_optimal_and_replays(orig in tokens(6), corr in tokens(6)) {
        let script = align(&orig, &corr);
        prop_assert!((script.cost - exhaustive_min_cost(&orig, &corr)).abs() < 1e-12);
        prop_assert_eq!(apply_script(&orig, &script).unwrap(), corr.clone());
        let edits = align_edits(&orig, &corr);
        prop_assert_eq!(apply_edits(&orig, &edits), corr.clone());
        for w in edits.windows(2) {
            prop_assert!(w[0].o_end <= w[1].o_start);
        }
    }

    #[test]
    fn identical_sequences_align_for_free(orig in tokens(8)) {
        let script = align(&orig, &orig);
        prop_assert_eq!(script.cost, 0.0);
        prop_assert!(align_edits(&orig, &orig).is_empty());
    }

    #[test]
    fn operation_follows_span_shape(start in 0usize..5, len in 0usize..3, k in 0usize..3) {
        let c: Vec<String> = (0..k).map(|i| format!("t{i}")).collect();
        let got = classify_operation(start, start + len, &c);
        match (len, k) {
            (0, 0) => prop_assert!(got.is_err()),
            (0, _) => prop_assert_eq!(got.unwrap(), Operation::Missing),
            (_, 0) => prop_assert_eq!(got.unwrap(), Operation::Unnecessary),
            _ => prop_assert_eq!(got.unwrap(), Operation::Replacement),
        }
    }

    #[test]
    fn mix_weights_form_a_distribution(
        scalars in prop::collection::vec(-30.0f64..30.0, 1..5),
        scale in 0.1f64..3.0,
    ) {
        let mix = LayerMixParams { scalars: scalars.clone(), scale };
        let w = mix.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        // identical layers mix to the scaled layer
        let layer = vec![0.5, -1.0, 2.0];
        let layers: Vec<&[f64]> = scalars.iter().map(|_| layer.as_slice()).collect();
        let out = mix_layers(&layers, &mix).unwrap();
        for (o, x) in out.iter().zip(&layer) {
            prop_assert!((o - scale * x).abs() < 1e-9);
        }
    }

    #[test]
    fn first_adadelta_step_is_bounded(g in -1e3f64..1e3, lr in 0.01f64..2.0) {
        let (mut params, _, _) = tiny_setup(Integration::None, 0, 1);
        let mut grads = params.zeros_like();
        grads.detect.b[0] = g;
        let before = params.detect.b[0];
        let mut state = AdaDeltaState::new(&params);
        adadelta_step(&mut state, &grads, &mut params, lr, 0.95, 1e-6).unwrap();
        let step = (params.detect.b[0] - before).abs();
        prop_assert!(step <= lr * ((0.0 + 1e-6) / 1e-6f64).sqrt() * (1.0 + 1e-12));
        prop_assert!(state.sq_grad.iter().flatten().all(|&v| v >= 0.0));
        prop_assert!(state.sq_update.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn f_beta_is_symmetric_on_the_diagonal(x in 0.0f64..100.0, beta in 0.1f64..4.0) {
        prop_assert!((f_beta_from_pr(x, x, beta) - x).abs() < 1e-9);
    }

    #[test]
    fn accumulation_is_shard_invariant(
        rows in prop::collection::vec(prop::collection::vec((any::<bool>(), any::<bool>()), 1..8), 1..10),
        cut in 0usize..10,
    ) {
        let counts: Vec<EvalCounts> = rows.iter().map(|r| {
            let gold: Vec<Label> = r.iter().map(|&(g, _)| if g { Label::Incorrect } else { Label::Correct }).collect();
            let pred: Vec<Label> = r.iter().map(|&(_, p)| if p { Label::Incorrect } else { Label::Correct }).collect();
            accumulate(&gold, &pred, None).unwrap()
        }).collect();
        let cut = cut.min(counts.len());
        let mut sharded = aggregate(&counts[..cut]);
        sharded.merge(&aggregate(&counts[cut..]));
        let all = aggregate(&counts);
        prop_assert_eq!(&sharded, &all);
        prop_assert_eq!(all.tokens() as usize, rows.iter().map(Vec::len).sum::<usize>());
        let s = f_beta(&all, 0.5);
        prop_assert!(s.precision.is_finite() && s.recall.is_finite() && s.f.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn padding_columns_change_nothing(extra in 1usize..6, seed in 0u64..1000, mode in 0usize..3) {
        let mode = Integration::ALL[mode];
        let (params, corpus, store) = tiny_setup(mode, 2, seed % 7 + 1);
        let batch = Batch::from_indices(&corpus, vec![0, 3, 1]);
        let mut padded = batch.clone();
        padded.pad_to(batch.width() + extra);
        let (l1, g1) = batch_loss(&params, &batch, &corpus, store.as_ref(), 0.1, seed).unwrap();
        let (l2, g2) = batch_loss(&params, &padded, &corpus, store.as_ref(), 0.1, seed).unwrap();
        prop_assert!((l1 - l2).abs() <= 1e-12);
        for ((_, a), (_, b)) in g1.arrays().iter().zip(g2.arrays()) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
        prop_assert_eq!(padded.tokens(), batch.tokens());
    }

    #[test]
    fn label_distributions_sum_to_one(seed in 0u64..1000, mode in 0usize..3, training: bool) {
        let mode = Integration::ALL[mode];
        let (params, corpus, store) = tiny_setup(mode, 3, seed % 5 + 1);
        let batch: Vec<&Sentence> = corpus.iter().collect();
        for a in forward_batch(&params, &batch, store.as_ref(), training, seed).unwrap() {
            for row in a.label_distribution.rows() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-6);
            }
            prop_assert_eq!(a.lm_fwd_logits.nrows(), a.len());
            prop_assert_eq!(a.word_hidden.nrows(), a.len());
        }
    }

    #[test]
    fn batches_partition_the_corpus(n in 1usize..80, size in 1usize..40, seed: u64) {
        let corpus: Vec<Sentence> = (0..n)
            .map(|i| Sentence::from_line(i.to_string(), &"w ".repeat(1 + i % 4)).unwrap())
            .collect();
        let batches = make_batches(&corpus, size, seed).unwrap();
        let mut seen: Vec<usize> = batches.iter().flat_map(|b| b.indices.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for (i, b) in batches.iter().enumerate() {
            if i + 1 < batches.len() { prop_assert_eq!(b.len(), size); }
            let lengths = b.lengths();
            prop_assert_eq!(b.width(), *lengths.iter().max().unwrap());
            for (r, &idx) in b.indices.iter().enumerate() {
                prop_assert_eq!(lengths[r], corpus[idx].len());
            }
        }
    }
}
