mod common;

use common::Family;
use proptest::prelude::*;
use reasonforge_core::augment::{apply, AugmentedChain};
use reasonforge_core::kinship::KinshipLinks;
use reasonforge_core::oracle::answer_from_triples;
use reasonforge_core::relgraph::NamedTriple;
use reasonforge_core::sampler::{sample_chain_with, sample_split_chain};
use reasonforge_core::taskgen::{corrupt, default_graph_iterations};
use reasonforge_core::{grow_graph, seed, Augmentation, GrowthConfig, RelationalGraph, Relation, Task, Triple, World};

fn name(v: reasonforge_core::NodeId) -> String {
    format!("P{}", v.0)
}

fn named(t: &Triple) -> NamedTriple {
    NamedTriple::new(name(t.subject), t.relation, name(t.object))
}

/// A chain, its label and the graph it came from.
fn setup(task: Task, s: u64, hop: usize) -> Option<(RelationalGraph, reasonforge_core::ReasoningChain, Relation)> {
    let g = grow_graph(task, &GrowthConfig::new(task, default_graph_iterations(task), s)).unwrap();
    let mut rng = seed::rng(s.wrapping_mul(31));
    let chain = match task {
        Task::Kinship => sample_split_chain(&g, hop, 20, &mut rng, &KinshipLinks).ok()?,
        Task::Spatial => sample_chain_with(&g, hop, 1000, &mut rng).ok()?,
    };
    let label = corrupt(&chain, &g).ok()?.label;
    Some((g, chain, label))
}

fn oracle_answer(g: &RelationalGraph, aug: &AugmentedChain) -> Option<Relation> {
    let triples: Vec<NamedTriple> = aug.sentences().iter().map(|(t, _)| named(t)).collect();
    let gender = |n: &str| {
        let World::Kinship(k) = g.world() else { return None };
        Some(k.gender(reasonforge_core::NodeId(n[1..].parse().ok()?)))
    };
    answer_from_triples(g.task(), &triples, &name(aug.chain.head()), &name(aug.chain.tail()), &gender).ok()?
}

fn check(task: Task, aug: Augmentation, s: u64, hop: usize) -> Result<(), TestCaseError> {
    let Some((g, chain, label)) = setup(task, s, hop) else { return Ok(()) };
    let Ok(out) = apply(aug, chain.clone(), &g, s) else {
        // noise can run out of off-chain neighbours
        let noise = matches!(aug, Augmentation::EdgeNoise { .. });
        prop_assert!(noise);
        return Ok(());
    };
    prop_assert_eq!(out.core.len(), chain.hop());
    prop_assert_eq!(oracle_answer(&g, &out), Some(label), "{} changed the answer", aug);

    // each stated fact is true of the ground world
    let doc = g.to_document();
    let family = (task == Task::Kinship).then(|| Family::from_document(&doc));
    for (t, _) in out.sentences() {
        prop_assert_eq!(common::document_label(&doc, family.as_ref(), t.subject.0, t.object.0), Some(t.relation.as_str()));
    }
    // distractors hang off the chain and never join two chain nodes
    for d in &out.distractors {
        prop_assert!(chain.contains(d.triple.subject) != chain.contains(d.triple.object));
    }
    // the core is the chain's edges, up to order and orientation
    let undirected = |t: &Triple| {
        let (a, b) = (t.subject.min(t.object), t.subject.max(t.object));
        (a, b)
    };
    let mut want: Vec<_> = chain.stored_triples().iter().map(undirected).collect();
    let mut got: Vec<_> = out.core.iter().map(undirected).collect();
    want.sort();
    got.sort();
    prop_assert_eq!(got, want);
    Ok(())
}

fn aug_strategy() -> impl Strategy<Value = Augmentation> {
    prop_oneof![
        Just(Augmentation::Permutation),
        (1usize..=3).prop_map(|count| Augmentation::EdgeNoise { count }),
        (1usize..=4).prop_map(|count| Augmentation::DirectionFlip { count }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn augmentations_preserve_the_answer(kin in any::<bool>(), aug in aug_strategy(), s in any::<u64>(), hop in 2usize..=8) {
        check(if kin { Task::Kinship } else { Task::Spatial }, aug, s, hop)?;
    }
}

#[test]
fn a_thousand_of_each_kind_keep_their_answer() {
    for aug in [
        Augmentation::Permutation,
        Augmentation::EdgeNoise { count: 2 },
        Augmentation::DirectionFlip { count: 2 },
    ] {
        for task in [Task::Kinship, Task::Spatial] {
            let mut done = 0;
            let mut s = 0;
            while done < 1000 {
                if setup(task, s, 2 + (s % 5) as usize).is_some() {
                    check(task, aug, s, 2 + (s % 5) as usize).unwrap();
                    done += 1;
                }
                s += 1;
            }
        }
    }
}
