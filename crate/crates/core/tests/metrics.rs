mod common;

use chansel::evalkit::{line_chart, chart_data, multilabel_metrics, oracle_eval, word_char_accuracy, Cell, Table};
use chansel::imagecore::Channel;
use chansel::mlselect::ChannelLabelVector;
use common::*;
use proptest::prelude::*;

fn labels_strategy() -> impl Strategy<Value = ChannelLabelVector> {
    proptest::array::uniform8(prop_oneof![Just(-1i8), Just(1i8)]).prop_map(|b| ChannelLabelVector::new(b).unwrap())
}

fn pairs_strategy() -> impl Strategy<Value = Vec<(ChannelLabelVector, ChannelLabelVector)>> {
    proptest::collection::vec((labels_strategy(), labels_strategy()), 1..40)
}

const WORDS: [&str; 6] = ["CAB", "BAD", "FACE", "HIDE", "JIG", "BEAD"];

fn hyp_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    proptest::collection::vec(proptest::collection::vec(0..WORDS.len(), n), 9)
}

#[test]
fn lengths_and_empty_inputs_are_rejected() {
    let l = ChannelLabelVector::all_negative();
    assert!(multilabel_metrics(&[l], &[]).is_err());
    assert!(multilabel_metrics(&[], &[]).is_err());
    assert!(word_char_accuracy::<&str, &str>(&[], &[]).is_err());
}

#[test]
fn report_table_formats_four_decimals() {
    let mut t = Table::new("t", &["method", "word_acc", "status"]);
    t.push(vec![Cell::from("R"), Cell::from(2.0 / 3.0), Cell::from("ok")]);
    t.push(vec![Cell::from("G"), Cell::Missing, Cell::from("failed")]);
    assert_eq!(t.to_csv(), "method,word_acc,status\nR,0.6667,ok\nG,,failed\n");
    assert!(t.is_partial());
}

#[test]
fn chart_embeds_its_data() {
    let pts = vec![(0.0, Some(0.9)), (5.0, None), (10.0, Some(0.5))];
    let svg = line_chart("noise", "level", "word_acc", &pts);
    assert!(svg.starts_with("<svg"));
    assert_eq!(chart_data(&svg).unwrap(), pts);
}

proptest! {
    #[test]
    fn matches_reference(pairs in pairs_strategy()) {
        let (truth, pred): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let m = multilabel_metrics(&truth, &pred).unwrap();
        prop_assert_eq!((m.accuracy, m.precision, m.recall), metrics_oracle(&truth, &pred));
        prop_assert_eq!(m.n, truth.len());
        for v in [m.accuracy, m.precision, m.recall] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall(pairs in pairs_strategy()) {
        let (truth, pred): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let a = multilabel_metrics(&truth, &pred).unwrap();
        let b = multilabel_metrics(&pred, &truth).unwrap();
        prop_assert_eq!(a.precision, b.recall);
        prop_assert_eq!(a.recall, b.precision);
        prop_assert_eq!(a.accuracy, b.accuracy);
    }

    #[test]
    fn oracle_dominates_every_channel(
        (truth, picks) in (1usize..12).prop_flat_map(|n| (proptest::collection::vec(0..WORDS.len(), n), hyp_strategy(n)))
    ) {
        let truth: Vec<String> = truth.iter().map(|&i| WORDS[i].to_string()).collect();
        let per: Vec<(Channel, Vec<String>)> = Channel::ALL
            .iter()
            .zip(&picks)
            .map(|(&c, p)| (c, p.iter().map(|&i| WORDS[i].to_string()).collect()))
            .collect();
        let oracle = oracle_eval(&per, &truth).unwrap();
        for (_, h) in &per {
            let (word, char_acc) = word_char_accuracy(&truth, h).unwrap();
            prop_assert!(oracle >= word);
            prop_assert!((0.0..=1.0).contains(&char_acc));
        }
    }
}
