mod common;

use common::routing_oracle;
use propdetect::corpus::Technique;
use propdetect::hybrid::{correct, pos_tag, route, RoutingTable, SubmodelPredictions};

#[test]
fn exhaustive_routing_matches_priority_rule() {
    let table = RoutingTable::default();
    let mut preds = SubmodelPredictions::default();
    let mut expected = Vec::new();
    for b in Technique::ALL {
        for c in Technique::ALL {
            for l in Technique::ALL {
                preds.base.push(b);
                preds.cost_weighted.push(c);
                preds.lr.push(l);
                expected.push(routing_oracle(b, c, l));
            }
        }
    }
    assert_eq!(expected.len(), 14 * 14 * 14);
    assert_eq!(route(&preds, &table).unwrap(), expected);
}

#[test]
fn routing_is_order_equivariant_and_identity_on_agreement() {
    let table = RoutingTable::default();
    let all = Technique::ALL.to_vec();
    let agree = SubmodelPredictions {
        base: all.clone(),
        cost_weighted: all.clone(),
        lr: all.clone(),
    };
    assert_eq!(route(&agree, &table).unwrap(), all);

    let preds = SubmodelPredictions {
        base: vec![Technique::Doubt, Technique::Slogans, Technique::LoadedLanguage],
        cost_weighted: vec![
            Technique::BandwagonReductioAdHitlerum,
            Technique::Doubt,
            Technique::Slogans,
        ],
        lr: vec![Technique::Doubt, Technique::Repetition, Technique::FlagWaving],
    };
    let out = route(&preds, &table).unwrap();
    let rev = |v: &Vec<Technique>| v.iter().rev().copied().collect::<Vec<_>>();
    let reversed = SubmodelPredictions {
        base: rev(&preds.base),
        cost_weighted: rev(&preds.cost_weighted),
        lr: rev(&preds.lr),
    };
    assert_eq!(route(&reversed, &table).unwrap(), rev(&out));
    assert_eq!(out[0], Technique::BandwagonReductioAdHitlerum);
}

#[test]
fn correction_fixtures_with_builtin_tagger() {
    let article = "Stop the crooked warmonger. He is a greatest fraud and a dangerous man.";
    let cases = [
        ("crooked warmonger", Technique::Repetition, Technique::Repetition),
        ("warmonger", Technique::Repetition, Technique::LoadedLanguage),
        ("dangerous", Technique::Repetition, Technique::LoadedLanguage),
        ("greatest fraud", Technique::Repetition, Technique::Repetition),
        ("warmonger", Technique::Doubt, Technique::Doubt),
    ];
    for (fragment, predicted, expected) in cases {
        let tags = pos_tag(fragment);
        assert_eq!(correct(fragment, predicted, article, &tags), expected, "{fragment}");
    }
    let tags = pos_tag("traitor thugs");
    assert_eq!(tags.tag_sequence(), vec!["NN", "NNS"]);
    assert_eq!(
        correct("traitor thugs", Technique::Repetition, "traitor thugs", &tags),
        Technique::NameCallingLabeling
    );
}
