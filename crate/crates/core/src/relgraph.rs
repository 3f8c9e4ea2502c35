//! Relational graphs and their iterative construction.
//!
//! A graph pairs engine-owned ground facts (a genealogy or a grid layout) with
//! the set of labelled edges deduced from them. Every stored edge reads
//! "subject is the <relation> of object".

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{GraphError, ParseLabelError};
use crate::kinship::{self, Gender, Genealogy, KinRelation};
use crate::seed;
use crate::spatial::{Layout, SpatialRelation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "clutrr", alias = "kinship")]
    Kinship,
    #[serde(rename = "stepgame", alias = "spatial")]
    Spatial,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Kinship => "clutrr",
            Task::Spatial => "stepgame",
        }
    }

    /// Every label of the task vocabulary, in prompt order.
    pub fn vocabulary(self) -> Vec<Relation> {
        match self {
            Task::Kinship => KinRelation::ALL.iter().map(|&r| Relation::Kin(r)).collect(),
            Task::Spatial => SpatialRelation::ALL
                .iter()
                .map(|&r| Relation::Spatial(r))
                .collect(),
        }
    }

    /// Growth set used when none is configured.
    pub fn default_growth_set(self) -> Vec<Relation> {
        match self {
            Task::Kinship => KinRelation::BASIC.iter().map(|&r| Relation::Kin(r)).collect(),
            Task::Spatial => SpatialRelation::MOVES
                .iter()
                .map(|&r| Relation::Spatial(r))
                .collect(),
        }
    }

    pub fn parse_relation(self, label: &str) -> Result<Relation, ParseLabelError> {
        match self {
            Task::Kinship => label.parse().map(Relation::Kin),
            Task::Spatial => label.parse().map(Relation::Spatial),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clutrr" | "kinship" => Ok(Task::Kinship),
            "stepgame" | "spatial" => Ok(Task::Spatial),
            other => Err(format!("unknown task `{other}` (expected clutrr or stepgame)")),
        }
    }
}

/// A label from one of the two task vocabularies. The vocabularies are
/// disjoint, so the bare label string identifies the relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Kin(KinRelation),
    Spatial(SpatialRelation),
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Kin(r) => r.as_str(),
            Relation::Spatial(r) => r.as_str(),
        }
    }

    pub fn task(self) -> Task {
        match self {
            Relation::Kin(_) => Task::Kinship,
            Relation::Spatial(_) => Task::Spatial,
        }
    }

    pub fn as_kin(self) -> Option<KinRelation> {
        match self {
            Relation::Kin(r) => Some(r),
            Relation::Spatial(_) => None,
        }
    }

    pub fn as_spatial(self) -> Option<SpatialRelation> {
        match self {
            Relation::Spatial(r) => Some(r),
            Relation::Kin(_) => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<KinRelation>()
            .map(Relation::Kin)
            .or_else(|_| s.parse::<SpatialRelation>().map(Relation::Spatial))
    }
}

impl Serialize for Relation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: NodeId,
    pub relation: Relation,
    pub object: NodeId,
}

impl Triple {
    pub fn new(subject: NodeId, relation: Relation, object: NodeId) -> Self {
        Triple {
            subject,
            relation,
            object,
        }
    }
}

/// A triple over rendered entity names: `(subject, relation, object)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NamedTriple(pub String, pub Relation, pub String);

impl NamedTriple {
    pub fn new(subject: impl Into<String>, relation: Relation, object: impl Into<String>) -> Self {
        NamedTriple(subject.into(), relation, object.into())
    }

    pub fn subject(&self) -> &str {
        &self.0
    }

    pub fn relation(&self) -> Relation {
        self.1
    }

    pub fn object(&self) -> &str {
        &self.2
    }
}

/// Engine-owned ground facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum World {
    Kinship(Genealogy),
    Spatial(Layout),
}

impl World {
    pub fn task(&self) -> Task {
        match self {
            World::Kinship(_) => Task::Kinship,
            World::Spatial(_) => Task::Spatial,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            World::Kinship(g) => g.len(),
            World::Spatial(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The deduction function: label for "u is ? of v", if any.
    pub fn derive(&self, u: NodeId, v: NodeId) -> Option<Relation> {
        if u == v {
            return None;
        }
        match self {
            World::Kinship(g) => g.derive(u, v).map(Relation::Kin),
            World::Spatial(l) => Some(Relation::Spatial(l.derive(u.0, v.0))),
        }
    }

    /// Label for "b is ? of a" given that "a is `relation` of b".
    pub fn invert(&self, relation: Relation, b: NodeId) -> Relation {
        match (self, relation) {
            (World::Kinship(g), Relation::Kin(r)) => Relation::Kin(kinship::invert(r, g.gender(b))),
            (_, Relation::Spatial(r)) => Relation::Spatial(r.invert()),
            (World::Spatial(_), Relation::Kin(_)) => panic!("kinship label on a spatial world"),
        }
    }

    /// Whether a walk may step between `u` and `v`. Spatial walks move by
    /// unit steps only, so that summing chain offsets recovers true
    /// displacements.
    fn walkable(&self, u: NodeId, v: NodeId) -> bool {
        match self {
            World::Kinship(_) => true,
            World::Spatial(l) => l.adjacent(u.0, v.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthConfig {
    /// Number of growth iterations `L`.
    pub iterations: usize,
    pub seed: u64,
    pub growth_set: Vec<Relation>,
    /// Kinship only; drawn from the seed when absent.
    pub root_gender: Option<Gender>,
}

impl GrowthConfig {
    pub fn new(task: Task, iterations: usize, seed: u64) -> Self {
        GrowthConfig {
            iterations,
            seed,
            growth_set: task.default_growth_set(),
            root_gender: None,
        }
    }
}

/// A growth attempt that could not be realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkippedGrowth {
    pub iteration: usize,
    pub target: NodeId,
    pub relation: Relation,
}

#[derive(Clone, Debug)]
pub struct RelationalGraph {
    world: World,
    edges: BTreeSet<Triple>,
    labels: HashMap<(NodeId, NodeId), Relation>,
    incoming: HashSet<(NodeId, Relation)>,
    /// Walk neighbours per node, ascending and deduplicated.
    neighbors: Vec<Vec<NodeId>>,
    skipped: Vec<SkippedGrowth>,
}

impl RelationalGraph {
    /// A graph over `world` with no edges.
    pub fn new(world: World) -> Self {
        let n = world.len();
        RelationalGraph {
            world,
            edges: BTreeSet::new(),
            labels: HashMap::new(),
            incoming: HashSet::new(),
            neighbors: vec![Vec::new(); n],
            skipped: Vec::new(),
        }
    }

    pub fn task(&self) -> Task {
        self.world.task()
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn node_count(&self) -> usize {
        self.world.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Triple> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, t: &Triple) -> bool {
        self.labels.get(&(t.subject, t.object)) == Some(&t.relation)
    }

    /// Growth attempts skipped because the engine could not realize them.
    pub fn skipped(&self) -> &[SkippedGrowth] {
        &self.skipped
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[node.0]
    }

    fn check(&self, node: NodeId) -> Result<(), GraphError> {
        if node.0 < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(node))
        }
    }

    /// Whether some node stands in `relation` to `node`.
    pub fn has_incoming_relation(&self, node: NodeId, relation: Relation) -> Result<bool, GraphError> {
        self.check(node)?;
        Ok(self.incoming.contains(&(node, relation)))
    }

    /// The stored label for "u is ? of v".
    pub fn edge_label(&self, u: NodeId, v: NodeId) -> Option<Relation> {
        self.labels.get(&(u, v)).copied()
    }

    /// The engine-deduced relation "u is ? of v" from the ground facts.
    pub fn relation_between(&self, u: NodeId, v: NodeId) -> Result<Option<Relation>, GraphError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.world.derive(u, v))
    }

    /// Insert an edge after checking it against the ground facts.
    pub fn add_edge(&mut self, t: Triple) -> Result<bool, GraphError> {
        self.check(t.subject)?;
        self.check(t.object)?;
        if t.relation.task() != self.task() {
            return Err(GraphError::WrongTask {
                relation: t.relation.to_string(),
            });
        }
        if self.world.derive(t.subject, t.object) != Some(t.relation) {
            return Err(GraphError::Inconsistent {
                subject: t.subject,
                relation: t.relation.to_string(),
                object: t.object,
            });
        }
        Ok(self.insert(t))
    }

    fn insert(&mut self, t: Triple) -> bool {
        if !self.edges.insert(t) {
            return false;
        }
        self.labels.insert((t.subject, t.object), t.relation);
        self.incoming.insert((t.object, t.relation));
        if self.world.walkable(t.subject, t.object) {
            link(&mut self.neighbors[t.subject.0], t.object);
            link(&mut self.neighbors[t.object.0], t.subject);
        }
        true
    }

    /// Add deduced edges in both directions between `node` and every node
    /// with a smaller id.
    fn close_over(&mut self, node: NodeId) {
        for other in (0..node.0).map(NodeId) {
            if let Some(r) = self.world.derive(node, other) {
                self.insert(Triple::new(node, r, other));
            }
            if let Some(r) = self.world.derive(other, node) {
                self.insert(Triple::new(other, r, node));
            }
        }
    }

    fn sync_nodes(&mut self) {
        let n = self.world.len();
        self.neighbors.resize(n, Vec::new());
    }

    pub fn to_document(&self) -> GraphDocument {
        let nodes = self
            .nodes()
            .map(|id| match &self.world {
                World::Kinship(g) => NodeAttrs {
                    id,
                    gender: Some(g.gender(id)),
                    xy: None,
                },
                World::Spatial(l) => NodeAttrs {
                    id,
                    gender: None,
                    xy: Some(l.position(id.0)),
                },
            })
            .collect();
        let mut edges: Vec<(NodeId, Relation, NodeId)> = self
            .edges
            .iter()
            .map(|t| (t.subject, t.relation, t.object))
            .collect();
        edges.sort_by(|a, b| (a.0, a.1.as_str(), a.2).cmp(&(b.0, b.1.as_str(), b.2)));
        let (parents, spouses) = match &self.world {
            World::Kinship(g) => (Some(g.parent_facts()), Some(g.spouse_facts())),
            World::Spatial(_) => (None, None),
        };
        GraphDocument {
            task: self.task(),
            nodes,
            edges,
            parents,
            spouses,
        }
    }
}

fn link(list: &mut Vec<NodeId>, node: NodeId) {
    if let Err(pos) = list.binary_search(&node) {
        list.insert(pos, node);
    }
}

/// Build `G_L` by iterative attachment. In iteration `l`, every node present
/// at the start of the iteration receives a new node for each growth relation
/// it has no incoming edge for; deduced edges between new and existing nodes
/// are added right after each attachment.
pub fn grow_graph(task: Task, config: &GrowthConfig) -> Result<RelationalGraph, GraphError> {
    if config.growth_set.is_empty() {
        return Err(GraphError::EmptyGrowthSet);
    }
    if let Some(r) = config.growth_set.iter().find(|r| r.task() != task) {
        return Err(GraphError::WrongTask {
            relation: r.to_string(),
        });
    }
    let mut rng = seed::rng(config.seed);
    let world = match task {
        Task::Kinship => {
            let gender = config.root_gender.unwrap_or_else(|| {
                if rng.gen_bool(0.5) {
                    Gender::Male
                } else {
                    Gender::Female
                }
            });
            World::Kinship(Genealogy::new(gender))
        }
        Task::Spatial => World::Spatial(Layout::new()),
    };
    let mut graph = RelationalGraph::new(world);
    for iteration in 1..=config.iterations {
        let frontier = graph.node_count();
        for v in (0..frontier).map(NodeId) {
            for &r in &config.growth_set {
                if graph.incoming.contains(&(v, r)) {
                    continue;
                }
                let created = match (&mut graph.world, r) {
                    (World::Kinship(g), Relation::Kin(kr)) => match g.realize(v, kr, &mut rng) {
                        Ok(out) => out.created,
                        Err(_) => {
                            graph.skipped.push(SkippedGrowth {
                                iteration,
                                target: v,
                                relation: r,
                            });
                            continue;
                        }
                    },
                    (World::Spatial(l), Relation::Spatial(sr)) => vec![NodeId(l.realize(v.0, sr))],
                    _ => unreachable!("growth set checked against task"),
                };
                graph.sync_nodes();
                for node in created {
                    graph.close_over(node);
                }
            }
        }
    }
    Ok(graph)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAttrs {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy: Option<(i64, i64)>,
}

/// JSON form of a graph. Kinship documents also carry the primitive facts
/// (`parents` as child/parent pairs, `spouses` as husband/wife pairs) so the
/// ground truth can be rebuilt without the engine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub task: Task,
    pub nodes: Vec<NodeAttrs>,
    pub edges: Vec<(NodeId, Relation, NodeId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parents: Option<Vec<(NodeId, NodeId)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spouses: Option<Vec<(NodeId, NodeId)>>,
}
