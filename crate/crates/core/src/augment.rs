//! Chain augmentations: permutation of the presented triples, distractor
//! edges, and direction flips. Exactly one augmentation is applied per
//! example; none of them changes the chain's head, tail, hop or answer.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::AugmentError;
use crate::relgraph::{RelationalGraph, Triple};
use crate::sampler::ReasoningChain;
use crate::seed;

/// The augmentation applied to an example, as recorded in the dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Augmentation {
    None,
    Permutation,
    EdgeNoise { count: usize },
    DirectionFlip { count: usize },
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Augmentation::None => f.write_str("none"),
            Augmentation::Permutation => f.write_str("permute"),
            Augmentation::EdgeNoise { count } => write!(f, "noise:{count}"),
            Augmentation::DirectionFlip { count } => write!(f, "flip:{count}"),
        }
    }
}

impl FromStr for Augmentation {
    type Err = AugmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AugmentError::Parse(s.to_string());
        let (kind, count) = match s.split_once(':') {
            Some((k, n)) => (k, Some(n.parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        match (kind, count) {
            ("none", None) => Ok(Augmentation::None),
            ("permute" | "permutation", None) => Ok(Augmentation::Permutation),
            ("noise" | "edge-noise", n) => Ok(Augmentation::EdgeNoise { count: n.unwrap_or(1) }),
            ("flip" | "direction-flip", n) => Ok(Augmentation::DirectionFlip { count: n.unwrap_or(1) }),
            _ => Err(bad()),
        }
    }
}

/// A distractor sentence and its index among all story sentences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Distractor {
    pub triple: Triple,
    pub position: usize,
}

/// A chain together with how its triples are presented in the story.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedChain {
    pub chain: ReasoningChain,
    /// Core triples in story order and orientation.
    pub core: Vec<Triple>,
    pub distractors: Vec<Distractor>,
    pub augmentation: Augmentation,
}

impl AugmentedChain {
    pub fn plain(chain: ReasoningChain) -> Self {
        let core = chain.stored_triples();
        AugmentedChain {
            chain,
            core,
            distractors: Vec::new(),
            augmentation: Augmentation::None,
        }
    }

    /// Every story triple in order; the flag marks distractors.
    pub fn sentences(&self) -> Vec<(Triple, bool)> {
        let total = self.core.len() + self.distractors.len();
        let mut out = Vec::with_capacity(total);
        let mut core = self.core.iter();
        let mut noise = self.distractors.iter().peekable();
        for pos in 0..total {
            match noise.peek() {
                Some(d) if d.position == pos => {
                    out.push((d.triple, true));
                    noise.next();
                }
                _ => out.push((*core.next().expect("positions leave room for the core"), false)),
            }
        }
        out
    }
}

/// Shuffle the presentation order of the core triples.
pub fn permute(chain: &AugmentedChain, seed: u64) -> AugmentedChain {
    let mut rng = seed::rng(seed);
    let mut out = chain.clone();
    out.core.shuffle(&mut rng);
    out.augmentation = Augmentation::Permutation;
    out
}

/// Add `k` distractor edges, each from a chain node to a distinct node off the
/// chain, at random story positions.
pub fn add_edge_noise(chain: &AugmentedChain, graph: &RelationalGraph, k: usize, seed: u64) -> Result<AugmentedChain, AugmentError> {
    let mut out = chain.clone();
    out.augmentation = Augmentation::EdgeNoise { count: k };
    if k == 0 {
        return Ok(out);
    }
    let mut rng = seed::rng(seed);
    let mut candidates: Vec<Triple> = Vec::new();
    for &v in &chain.chain.walk {
        for &w in graph.neighbors(v) {
            if chain.chain.contains(w) {
                continue;
            }
            if let Some(r) = graph.edge_label(v, w) {
                candidates.push(Triple::new(v, r, w));
            }
        }
    }
    candidates.shuffle(&mut rng);
    let mut picked: Vec<Triple> = Vec::with_capacity(k);
    for t in candidates {
        if picked.len() == k {
            break;
        }
        if picked.iter().all(|p| p.object != t.object) {
            picked.push(t);
        }
    }
    if picked.len() < k {
        return Err(AugmentError::NoiseUnavailable {
            requested: k,
            available: picked.len(),
        });
    }
    let old = chain.sentences();
    let total = old.len() + k;
    let mut slots = index::sample(&mut rng, total, k).into_vec();
    slots.sort_unstable();
    let mut old = old.into_iter();
    let mut new = picked.into_iter();
    out.distractors = (0..total)
        .filter_map(|pos| {
            let (triple, noise) = if slots.binary_search(&pos).is_ok() {
                (new.next().expect("one new distractor per slot"), true)
            } else {
                old.next().expect("remaining slots hold old sentences")
            };
            noise.then_some(Distractor { triple, position: pos })
        })
        .collect();
    Ok(out)
}

/// Reverse `count` distinct core triples, replacing each label by its inverse
/// so the stated fact is unchanged.
pub fn flip_edges(chain: &AugmentedChain, graph: &RelationalGraph, count: usize, seed: u64) -> Result<AugmentedChain, AugmentError> {
    let hop = chain.core.len();
    if count > hop {
        return Err(AugmentError::FlipCountExceedsHop { flip: count, hop });
    }
    let mut rng = seed::rng(seed);
    let mut out = chain.clone();
    out.augmentation = Augmentation::DirectionFlip { count };
    for i in index::sample(&mut rng, hop, count) {
        out.core[i] = flip(graph, out.core[i]);
    }
    Ok(out)
}

pub fn flip(graph: &RelationalGraph, t: Triple) -> Triple {
    Triple::new(t.object, graph.world().invert(t.relation, t.object), t.subject)
}

pub fn apply(aug: Augmentation, chain: ReasoningChain, graph: &RelationalGraph, seed: u64) -> Result<AugmentedChain, AugmentError> {
    let base = AugmentedChain::plain(chain);
    match aug {
        Augmentation::None => Ok(base),
        Augmentation::Permutation => Ok(permute(&base, seed)),
        Augmentation::EdgeNoise { count } => add_edge_noise(&base, graph, count, seed),
        Augmentation::DirectionFlip { count } => {
            let count = count.min(base.core.len());
            flip_edges(&base, graph, count, seed)
        }
    }
}

/// Weighted choice of augmentations, one drawn per example.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentMix {
    entries: Vec<(Augmentation, f64)>,
}

impl AugmentMix {
    /// Weights are normalized to sum to one.
    pub fn new(entries: Vec<(Augmentation, f64)>) -> Result<Self, AugmentError> {
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if entries.is_empty() || entries.iter().any(|e| !(e.1 >= 0.0) || !e.1.is_finite()) || !(total > 0.0) {
            return Err(AugmentError::Parse("augmentation weights must be non-negative with a positive sum".into()));
        }
        Ok(AugmentMix {
            entries: entries.into_iter().map(|(a, w)| (a, w / total)).collect(),
        })
    }

    pub fn single(aug: Augmentation) -> Self {
        AugmentMix {
            entries: vec![(aug, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(Augmentation, f64)] {
        &self.entries
    }

    pub fn choose(&self, rng: &mut seed::Rng) -> Augmentation {
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        for &(aug, w) in &self.entries {
            acc += w;
            if x < acc {
                return aug;
            }
        }
        self.entries
            .iter()
            .rev()
            .find(|e| e.1 > 0.0)
            .expect("positive total weight")
            .0
    }
}

impl Default for AugmentMix {
    /// Equal thirds of permutation, two distractors and two flips.
    fn default() -> Self {
        AugmentMix::new(vec![
            (Augmentation::Permutation, 1.0),
            (Augmentation::EdgeNoise { count: 2 }, 1.0),
            (Augmentation::DirectionFlip { count: 2 }, 1.0),
        ])
        .expect("valid weights")
    }
}

impl fmt::Display for AugmentMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [(aug, _)] = self.entries.as_slice() {
            return write!(f, "{aug}");
        }
        f.write_str("mix=")?;
        for (i, (aug, w)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{aug}@{w}")?;
        }
        Ok(())
    }
}

impl FromStr for AugmentMix {
    type Err = AugmentError;

    /// `KIND[:N]` or `mix=KIND[:N]@WEIGHT,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some(list) = s.strip_prefix("mix=") else {
            return Ok(AugmentMix::single(s.parse()?));
        };
        let entries = list
            .split(',')
            .map(|item| {
                let (aug, weight) = item.split_once('@').unwrap_or((item, "1"));
                let weight: f64 = weight.parse().map_err(|_| AugmentError::Parse(item.to_string()))?;
                Ok((aug.parse()?, weight))
            })
            .collect::<Result<Vec<_>, AugmentError>>()?;
        AugmentMix::new(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinship::{Gender, Genealogy, KinRelation};
    use crate::relgraph::{grow_graph, GrowthConfig, NodeId, Relation, Task, World};
    use crate::sampler::{sample_chain, SamplerConfig};

    fn spatial_chain(hop: usize, seed: u64) -> (RelationalGraph, AugmentedChain) {
        let g = grow_graph(Task::Spatial, &GrowthConfig::new(Task::Spatial, 1, 0)).unwrap();
        let c = sample_chain(&g, &SamplerConfig::new(hop, seed)).unwrap();
        (g, AugmentedChain::plain(c))
    }

    #[test]
    fn parse_and_display() {
        for s in ["none", "permute", "noise:3", "flip:2"] {
            assert_eq!(s.parse::<Augmentation>().unwrap().to_string(), s);
        }
        assert!("shuffle".parse::<Augmentation>().is_err());
        let mix: AugmentMix = "mix=permute@1,noise:2@3".parse().unwrap();
        assert_eq!(mix.entries()[1], (Augmentation::EdgeNoise { count: 2 }, 0.75));
        assert!("mix=permute@0".parse::<AugmentMix>().is_err());
        assert_eq!(AugmentMix::default().to_string().parse::<AugmentMix>().unwrap(), AugmentMix::default());
    }

    #[test]
    fn permutation_keeps_the_multiset() {
        let (_, c) = spatial_chain(3, 1);
        for seed in 0..20 {
            let p = permute(&c, seed);
            let mut a = p.core.clone();
            let mut b = c.core.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            assert_eq!(p.chain, c.chain);
        }
    }

    #[test]
    fn noise_connects_chain_to_distinct_outside_nodes() {
        let (g, c) = spatial_chain(2, 3);
        assert_eq!(add_edge_noise(&c, &g, 0, 1).unwrap().distractors.len(), 0);
        for seed in 0..50 {
            let n = add_edge_noise(&c, &g, 2, seed).unwrap();
            assert_eq!(n.distractors.len(), 2);
            assert_ne!(n.distractors[0].triple.object, n.distractors[1].triple.object);
            for d in &n.distractors {
                assert!(c.chain.contains(d.triple.subject));
                assert!(!c.chain.contains(d.triple.object));
                assert!(g.contains_edge(&d.triple));
            }
            let s = n.sentences();
            assert_eq!(s.len(), 4);
            let core: Vec<_> = s.iter().filter(|x| !x.1).map(|x| x.0).collect();
            assert_eq!(core, c.core);
        }
        assert!(matches!(
            add_edge_noise(&c, &g, 7, 0),
            Err(AugmentError::NoiseUnavailable { requested: 7, .. })
        ));
    }

    #[test]
    fn flipping_inverts_labels() {
        let mut gen = Genealogy::new(Gender::Female);
        let mut rng = seed::rng(0);
        let frances = gen.realize(NodeId(0), KinRelation::Daughter, &mut rng).unwrap().subject;
        let g = RelationalGraph::new(World::Kinship(gen));
        let t = Triple::new(frances, Relation::Kin(KinRelation::Daughter), NodeId(0));
        let f = flip(&g, t);
        assert_eq!(f, Triple::new(NodeId(0), Relation::Kin(KinRelation::Mother), frances));
        assert_eq!(flip(&g, f), t);
    }

    #[test]
    fn flip_count_bounds() {
        let (g, c) = spatial_chain(2, 5);
        assert_eq!(flip_edges(&c, &g, 0, 0).unwrap().core, c.core);
        let all = flip_edges(&c, &g, 2, 0).unwrap();
        assert!(all.core.iter().zip(&c.core).all(|(a, b)| a.subject == b.object));
        assert!(matches!(
            flip_edges(&c, &g, 3, 0),
            Err(AugmentError::FlipCountExceedsHop { flip: 3, hop: 2 })
        ));
    }

    #[test]
    fn mix_respects_weights() {
        let mix = AugmentMix::new(vec![(Augmentation::None, 0.0), (Augmentation::Permutation, 1.0)]).unwrap();
        let mut rng = seed::rng(1);
        assert!((0..100).all(|_| mix.choose(&mut rng) == Augmentation::Permutation));
    }
}
