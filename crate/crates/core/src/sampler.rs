//! Reasoning-chain sampling by non-repeating random walk.
//!
//! The start node is uniform over V; each step is uniform over the unvisited
//! walk neighbours of the current node. A walk that runs into a dead end is
//! discarded and restarted from a fresh start node.
//!
//! [`sample_split_chain`] draws walks whose head-to-tail relation is entailed
//! by the walk's own triples. Kinship labels compose only along particular
//! bracketings, so uniformly drawn long walks almost never qualify; splitting
//! a head-tail segment through intermediate nodes yields qualifying walks
//! directly.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::SampleError;
use crate::relgraph::{NodeId, Relation, RelationalGraph, Triple};
use crate::seed;

pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Number of hops `l`.
    pub length: usize,
    pub seed: u64,
    pub max_attempts: usize,
}

impl SamplerConfig {
    pub fn new(length: usize, seed: u64) -> Self {
        SamplerConfig {
            length,
            seed,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

/// One hop of a chain: the stored edge linking `walk[step]` and
/// `walk[step + 1]`. `reversed` is set when only the edge from
/// `walk[step + 1]` to `walk[step]` is stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainTriple {
    pub triple: Triple,
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub walk: Vec<NodeId>,
    pub triples: Vec<ChainTriple>,
}

impl ReasoningChain {
    pub fn hop(&self) -> usize {
        self.triples.len()
    }

    pub fn head(&self) -> NodeId {
        self.walk[0]
    }

    pub fn tail(&self) -> NodeId {
        *self.walk.last().expect("chains are nonempty")
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.walk.contains(&node)
    }

    /// The stored triples in reasoning order.
    pub fn stored_triples(&self) -> Vec<Triple> {
        self.triples.iter().map(|t| t.triple).collect()
    }

    /// Labels read along the walk, `walk[i]` is label `i` of `walk[i + 1]`.
    /// `None` when a hop is only stored against the walk direction.
    pub fn forward_labels(&self) -> Option<Vec<Relation>> {
        self.triples
            .iter()
            .map(|t| (!t.reversed).then_some(t.triple.relation))
            .collect()
    }
}

/// Uniform next-step distribution over unvisited neighbours of `current`.
/// An empty result signals a dead end.
pub fn transition_distribution(graph: &RelationalGraph, current: NodeId, visited: &[NodeId]) -> Vec<(NodeId, f64)> {
    let open: Vec<NodeId> = graph
        .neighbors(current)
        .iter()
        .copied()
        .filter(|n| !visited.contains(n))
        .collect();
    let p = 1.0 / open.len() as f64;
    open.into_iter().map(|n| (n, p)).collect()
}

pub fn sample_chain(graph: &RelationalGraph, config: &SamplerConfig) -> Result<ReasoningChain, SampleError> {
    let mut rng = seed::rng(config.seed);
    sample_chain_with(graph, config.length, config.max_attempts, &mut rng)
}

pub fn sample_chain_with(
    graph: &RelationalGraph,
    length: usize,
    max_attempts: usize,
    rng: &mut seed::Rng,
) -> Result<ReasoningChain, SampleError> {
    if length == 0 {
        return Err(SampleError::ZeroLength);
    }
    let n = graph.node_count();
    let exhausted = SampleError::Exhausted {
        length,
        attempts: max_attempts,
    };
    if n < length + 1 {
        return Err(exhausted);
    }
    let mut visited = vec![false; n];
    let mut open = Vec::new();
    for _ in 0..max_attempts {
        visited.iter_mut().for_each(|v| *v = false);
        let start = NodeId(rng.gen_range(0..n));
        let mut walk = vec![start];
        visited[start.0] = true;
        while walk.len() <= length {
            let current = *walk.last().expect("walk is nonempty");
            open.clear();
            open.extend(graph.neighbors(current).iter().copied().filter(|m| !visited[m.0]));
            let Some(&next) = open.choose(rng) else {
                break;
            };
            visited[next.0] = true;
            walk.push(next);
        }
        if walk.len() == length + 1 {
            return Ok(chain_from_walk(graph, walk));
        }
    }
    Err(exhausted)
}

/// Pairwise relation algebra used by [`sample_split_chain`].
pub trait LinkAlgebra {
    type Link: Copy + PartialEq;

    /// How `a` relates to `b`, if the algebra can express it.
    fn link(&self, graph: &RelationalGraph, a: NodeId, b: NodeId) -> Option<Self::Link>;

    /// Composition for pairwise distinct endpoints.
    fn compose(&self, first: Self::Link, second: Self::Link) -> Option<Self::Link>;

    /// Whether the link may appear as a stated chain triple.
    fn stateable(&self, link: Self::Link) -> bool;

    /// Whether the link may relate head and tail.
    fn answerable(&self, link: Self::Link) -> bool;
}

/// Sample a chain whose head-to-tail relation is entailed by its own triples.
///
/// A head is drawn uniformly and a tail uniformly among the nodes it has an
/// answerable link to. The segment is then split repeatedly: a random segment
/// (a, b) is replaced by (a, m), (m, b) for a uniformly drawn unused node m
/// whose links compose to the link of (a, b). The result is a non-repeating
/// path of graph edges, with a composition tree witnessing its label.
pub fn sample_split_chain<A: LinkAlgebra>(
    graph: &RelationalGraph,
    length: usize,
    max_attempts: usize,
    rng: &mut seed::Rng,
    algebra: &A,
) -> Result<ReasoningChain, SampleError> {
    if length == 0 {
        return Err(SampleError::ZeroLength);
    }
    let n = graph.node_count();
    let exhausted = SampleError::Exhausted {
        length,
        attempts: max_attempts,
    };
    if n < length + 1 {
        return Err(exhausted);
    }
    let mut used = vec![false; n];
    'attempt: for _ in 0..max_attempts {
        let head = NodeId(rng.gen_range(0..n));
        let tails: Vec<(NodeId, A::Link)> = graph
            .nodes()
            .filter(|&t| t != head)
            .filter_map(|t| algebra.link(graph, head, t).map(|l| (t, l)))
            .filter(|&(_, l)| algebra.answerable(l))
            .collect();
        let Some(&(tail, link)) = tails.choose(rng) else {
            continue;
        };
        used.iter_mut().for_each(|u| *u = false);
        used[head.0] = true;
        used[tail.0] = true;
        // Path nodes with the link from each node to its successor.
        let mut path = vec![(head, Some(link)), (tail, None)];
        let mut open: Vec<usize> = Vec::new();
        let mut candidates: Vec<(NodeId, A::Link, A::Link)> = Vec::new();
        while path.len() <= length {
            open.clear();
            open.extend(0..path.len() - 1);
            open.shuffle(rng);
            let mut split = None;
            for &i in &open {
                let (a, ab) = path[i];
                let ab = ab.expect("inner path nodes carry links");
                let b = path[i + 1].0;
                candidates.clear();
                for m in graph.nodes() {
                    if used[m.0] {
                        continue;
                    }
                    let (Some(am), Some(mb)) = (algebra.link(graph, a, m), algebra.link(graph, m, b)) else {
                        continue;
                    };
                    if algebra.compose(am, mb) == Some(ab) {
                        candidates.push((m, am, mb));
                    }
                }
                if let Some(&c) = candidates.choose(rng) {
                    split = Some((i, c));
                    break;
                }
            }
            let Some((i, (m, am, mb))) = split else {
                continue 'attempt;
            };
            used[m.0] = true;
            path[i].1 = Some(am);
            path.insert(i + 1, (m, Some(mb)));
        }
        if path.iter().filter_map(|p| p.1).any(|l| !algebra.stateable(l)) {
            continue;
        }
        let walk: Vec<NodeId> = path.iter().map(|p| p.0).collect();
        if walk.windows(2).any(|w| graph.edge_label(w[0], w[1]).is_none()) {
            continue;
        }
        return Ok(chain_from_walk(graph, walk));
    }
    Err(exhausted)
}

fn chain_from_walk(graph: &RelationalGraph, walk: Vec<NodeId>) -> ReasoningChain {
    let triples = walk
        .windows(2)
        .map(|w| match graph.edge_label(w[0], w[1]) {
            Some(r) => ChainTriple {
                triple: Triple::new(w[0], r, w[1]),
                reversed: false,
            },
            None => ChainTriple {
                triple: Triple::new(w[1], graph.edge_label(w[1], w[0]).expect("walk follows edges"), w[0]),
                reversed: true,
            },
        })
        .collect();
    ReasoningChain { walk, triples }
}
