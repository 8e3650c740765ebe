//! The whole core pipeline through the public API: generate, assemble,
//! sample a study, label it and compute agreement.

use textmanip_core::annotation::{AnnotationLabel, LabelBook, LabelValue, Stage};
use textmanip_core::datagen::{build_dataset, Label};
use textmanip_core::{EmbeddingIndex, ManipulationConfig, Sentence, SplitRatios, Token};

fn index() -> EmbeddingIndex {
    let rows: [(&str, [f32; 3]); 8] = [
        ("لبنان", [1.0, 0.0, 0.0]),
        ("ولبنان", [0.99, 0.05, 0.0]),
        ("بلبنان", [0.98, 0.08, 0.0]),
        ("سوريا", [0.9, 0.3, 0.0]),
        ("الاردن", [0.85, 0.4, 0.1]),
        ("كبير", [0.0, 1.0, 0.0]),
        ("صغير", [0.1, 0.9, 0.2]),
        ("ضخم", [0.0, 0.8, 0.5]),
    ];
    let mut b = EmbeddingIndex::builder(3).unwrap();
    for (t, v) in rows {
        b.push(t, &v).unwrap();
    }
    b.finish().0
}

fn sentences() -> Vec<Sentence> {
    (0..20)
        .map(|i| {
            let (w, t) = if i % 2 == 0 { ("لبنان", "N_PROP") } else { ("كبير", "ADJ") };
            let toks = vec![Token::new("زار", "PV").unwrap(), Token::new(w, t).unwrap(), Token::new("امس", "NOUN").unwrap()];
            Sentence::new(format!("s{i:02}"), toks).unwrap()
        })
        .collect()
}

#[test]
fn generate_sample_label_agree() {
    let cfg = ManipulationConfig { seed: 3, ..ManipulationConfig::default() };
    let (records, stats) = build_dataset(&sentences(), &index(), &cfg, 10, SplitRatios::default()).unwrap();
    assert_eq!(records.len(), 20);
    assert_eq!(stats.per_label.get("machine"), Some(&10));
    for r in records.iter().filter(|r| r.label == Label::Machine) {
        assert!(r.is_consistent());
        for m in r.records.iter().filter(|m| m.original == "لبنان") {
            // Clitic forms of the word itself are never chosen.
            assert!(m.substitute != "ولبنان" && m.substitute != "بلبنان", "{}", r.text);
            assert!(m.rank >= Some(2));
        }
    }
    let again = build_dataset(&sentences(), &index(), &cfg, 10, SplitRatios::default()).unwrap().0;
    assert_eq!(again, records);

    let tasks = textmanip_core::annotation::sample_study(&records, 4, 4, 1).unwrap();
    let mut book = LabelBook::new(tasks.clone());
    for t in tasks.iter().filter(|t| t.stage == Stage::One) {
        let truth = if t.gold_origin == Label::Human { LabelValue::Human } else { LabelValue::Machine };
        for who in ["x", "y"] {
            let label = AnnotationLabel {
                task_id: t.task_id.clone(),
                annotator_id: who.into(),
                stage: Stage::One,
                value: truth,
                timestamp: 0,
            };
            book.record_label(label).unwrap();
        }
    }
    let report = book.agreement("x", "y");
    assert_eq!(report.kappa_stage1, Some(1.0));
    assert_eq!(report.stage1.n_items, 8);
}
