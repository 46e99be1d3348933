//! Shared helpers for the criterion benchmarks.

use crsbench_core::corpus::{extract_instances, Dialogue, EvalInstance, Turn};
use crsbench_core::knowledge::KnowledgeBase;
use crsbench_core::types::{Domain, ItemId, Speaker};

pub fn toy_kb() -> KnowledgeBase {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/toy_kb.json");
    KnowledgeBase::load(path).expect("toy KB loads")
}

/// Synthetic instances cycling through a few answer shapes.
pub fn synthetic_instances(n: usize) -> Vec<EvalInstance> {
    let answers = [
        "I like watching horror movies",
        "I liked that scary story a lot",
        "I want a funny comedy for weekend nights",
        "I love fast action movies like The Fast and Furious",
        "She enjoys long drama movies with sad endings",
    ];
    let dialogues: Vec<Dialogue> = (0..n)
        .map(|i| Dialogue {
            id: format!("bench{i:05}"),
            domain: Domain::Movie,
            turns: vec![
                Turn {
                    speaker: Speaker::Seeker,
                    text: answers[i % answers.len()].to_string(),
                    mentioned_items: vec![],
                    ground_truth: vec![],
                },
                Turn {
                    speaker: Speaker::Recommender,
                    text: "try this one".to_string(),
                    mentioned_items: vec![ItemId::from("101")],
                    ground_truth: vec![ItemId::from("101")],
                },
            ],
        })
        .collect();
    extract_instances(&dialogues)
}
