mod common;

use common::{planted_contexts, small_head_config};
use propdetect::corpus::EmbeddingSequence;
use propdetect::optim::Objective;
use propdetect::span_heads::{
    decode_span, total_loss, train_heads, HeadConfig, SpanHeadModel, SpanObjective, SpanTarget, Variant,
};

#[test]
fn objective_value_matches_total_loss() {
    let config = small_head_config(Variant::DeepCombine);
    let data = planted_contexts(3, 4, 1);
    let model = SpanHeadModel::new(config.architecture().unwrap(), 4);
    let objective = SpanObjective::new(&config, &data).unwrap();
    let (value, _) = objective.value_and_gradient(&model.params);
    let manual: f64 = data
        .iter()
        .map(|(seq, t)| total_loss(&model.forward(seq).unwrap(), t, &config).unwrap().total)
        .sum::<f64>()
        / data.len() as f64;
    assert!((value - manual).abs() < 1e-12);
}

fn boundary_accuracy(model: &SpanHeadModel, data: &[(EmbeddingSequence, SpanTarget)]) -> f64 {
    let hits = data
        .iter()
        .filter(|(seq, target)| {
            let decoded = decode_span(&model.forward(seq).unwrap());
            match target.span {
                Some(span) => decoded.spans == vec![span],
                None => decoded.spans.is_empty(),
            }
        })
        .count();
    hits as f64 / data.len() as f64
}

#[test]
fn planted_signal_is_learned_by_every_variant() {
    let data = planted_contexts(10, 6, 3);
    for variant in Variant::ALL {
        let config = HeadConfig {
            embed_dim: 6,
            max_iters: 300,
            ..small_head_config(variant)
        };
        let trained = train_heads(&data, &config).unwrap();
        let h = &trained.report.history;
        assert!(h.windows(2).all(|w| w[1].loss <= w[0].loss), "{variant}");
        assert_eq!(boundary_accuracy(&trained.model, &data), 1.0, "{variant}");
    }
}

#[test]
fn no_span_dataset_predicts_nothing() {
    let data: Vec<_> = planted_contexts(12, 5, 9)
        .into_iter()
        .map(|(seq, _)| (seq, SpanTarget::none()))
        .collect();
    let config = HeadConfig {
        embed_dim: 5,
        max_iters: 100,
        ..small_head_config(Variant::Sent)
    };
    let trained = train_heads(&data, &config).unwrap();
    for (seq, _) in &data {
        assert!(decode_span(&trained.model.forward(seq).unwrap()).spans.is_empty());
    }
}

#[test]
fn training_is_deterministic() {
    let data = planted_contexts(5, 4, 2);
    let config = HeadConfig {
        max_iters: 20,
        seed: 42,
        ..small_head_config(Variant::DeepSep)
    };
    let a = train_heads(&data, &config).unwrap().model;
    let b = train_heads(&data, &config).unwrap().model;
    assert_eq!(a.to_checkpoint().to_text(), b.to_checkpoint().to_text());
}

#[test]
fn deep_sep_fits_boundaries_at_least_as_well_as_base() {
    let data = planted_contexts(10, 6, 3);
    let boundary_loss = |variant| {
        let config = HeadConfig {
            embed_dim: 6,
            max_iters: 300,
            ..small_head_config(variant)
        };
        let model = train_heads(&data, &config).unwrap().model;
        data.iter()
            .map(|(seq, t)| {
                let parts = total_loss(&model.forward(seq).unwrap(), t, &config).unwrap();
                parts.start + parts.end
            })
            .sum::<f64>()
    };
    let base = boundary_loss(Variant::Base);
    let deep = boundary_loss(Variant::DeepSep);
    assert!(deep <= base, "deep_sep {deep} > base {base}");
}
