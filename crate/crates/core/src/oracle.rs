//! Brute-force verifiers that share no code path with the engines.
//!
//! Kinship labels are evaluated from the definitional canon by exhaustive
//! quantification over parent and spouse facts. Spatial labels come from a
//! private sign map over coordinates. Answers can also be recovered from
//! named triples alone, which is how generated datasets are checked.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::error::OracleError;
use crate::kinship::{Gender, KinRelation};
use crate::relgraph::{GraphDocument, NamedTriple, NodeId, Relation, RelationalGraph, Task};
use crate::spatial::SpatialRelation;

/// Ground facts rebuilt from a graph serialization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroundWorld {
    Kinship {
        genders: Vec<Gender>,
        /// (child, parent)
        parents: Vec<(NodeId, NodeId)>,
        spouses: Vec<(NodeId, NodeId)>,
    },
    Spatial {
        xy: Vec<(i64, i64)>,
    },
}

impl GroundWorld {
    pub fn from_document(doc: &GraphDocument) -> Result<Self, OracleError> {
        for (i, node) in doc.nodes.iter().enumerate() {
            if node.id != NodeId(i) {
                return Err(OracleError::UnknownNode(node.id));
            }
        }
        match doc.task {
            Task::Kinship => {
                let genders = doc
                    .nodes
                    .iter()
                    .map(|n| n.gender.ok_or(OracleError::UnknownNode(n.id)))
                    .collect::<Result<Vec<_>, _>>()?;
                let parents = doc.parents.clone().unwrap_or_default();
                let spouses = doc.spouses.clone().unwrap_or_default();
                for &(a, b) in parents.iter().chain(&spouses) {
                    for x in [a, b] {
                        if x.0 >= genders.len() {
                            return Err(OracleError::UnknownNode(x));
                        }
                    }
                }
                Ok(GroundWorld::Kinship {
                    genders,
                    parents,
                    spouses,
                })
            }
            Task::Spatial => {
                let xy = doc
                    .nodes
                    .iter()
                    .map(|n| n.xy.ok_or(OracleError::UnknownNode(n.id)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(GroundWorld::Spatial { xy })
            }
        }
    }

    pub fn from_graph(graph: &RelationalGraph) -> Self {
        GroundWorld::from_document(&graph.to_document()).expect("engine documents are complete")
    }

    pub fn len(&self) -> usize {
        match self {
            GroundWorld::Kinship { genders, .. } => genders.len(),
            GroundWorld::Spatial { xy } => xy.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Relation between two nodes by brute force, dispatching on the world kind.
pub fn relation(world: &GroundWorld, u: NodeId, v: NodeId) -> Result<Option<Relation>, OracleError> {
    match world {
        GroundWorld::Kinship { .. } => Ok(genealogy_relation(world, u, v)?.map(Relation::Kin)),
        GroundWorld::Spatial { .. } => Ok(Some(Relation::Spatial(coordinate_relation(world, u, v)?))),
    }
}

/// The unique kinship label for "u is ? of v", or `None` when no rule fires.
pub fn genealogy_relation(world: &GroundWorld, u: NodeId, v: NodeId) -> Result<Option<KinRelation>, OracleError> {
    let GroundWorld::Kinship {
        genders,
        parents,
        spouses,
    } = world
    else {
        return Ok(None);
    };
    for x in [u, v] {
        if x.0 >= genders.len() {
            return Err(OracleError::UnknownNode(x));
        }
    }
    let facts = Facts::new(genders.clone(), parents.iter().map(|&(c, p)| (p.0, c.0)), spouses.iter().map(|&(a, b)| (a.0, b.0)));
    unique(&facts, u.0, v.0).map_err(|labels| OracleError::Inconsistent {
        u,
        v,
        labels: labels.iter().map(|l| l.as_str().to_string()).collect(),
    })
}

/// Sign map of the coordinate difference u - v.
pub fn coordinate_relation(world: &GroundWorld, u: NodeId, v: NodeId) -> Result<SpatialRelation, OracleError> {
    let GroundWorld::Spatial { xy } = world else {
        return Err(OracleError::UnknownNode(u));
    };
    let a = *xy.get(u.0).ok_or(OracleError::UnknownNode(u))?;
    let b = *xy.get(v.0).ok_or(OracleError::UnknownNode(v))?;
    Ok(sign_label((a.0 - b.0).signum(), (a.1 - b.1).signum()))
}

fn sign_label(sx: i64, sy: i64) -> SpatialRelation {
    match (sx, sy) {
        (0, 0) => SpatialRelation::Overlaps,
        (0, 1) => SpatialRelation::Above,
        (0, -1) => SpatialRelation::Below,
        (-1, 0) => SpatialRelation::Left,
        (1, 0) => SpatialRelation::Right,
        (-1, 1) => SpatialRelation::UpperLeft,
        (1, 1) => SpatialRelation::UpperRight,
        (-1, -1) => SpatialRelation::LowerLeft,
        (1, -1) => SpatialRelation::LowerRight,
        _ => unreachable!("signum is -1, 0 or 1"),
    }
}

fn unit_step(r: SpatialRelation) -> (i64, i64) {
    match r {
        SpatialRelation::Overlaps => (0, 0),
        SpatialRelation::Above => (0, 1),
        SpatialRelation::Below => (0, -1),
        SpatialRelation::Left => (-1, 0),
        SpatialRelation::Right => (1, 0),
        SpatialRelation::UpperLeft => (-1, 1),
        SpatialRelation::UpperRight => (1, 1),
        SpatialRelation::LowerLeft => (-1, -1),
        SpatialRelation::LowerRight => (1, -1),
    }
}

/// Disagreement between a stored edge and the oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMismatch {
    pub subject: NodeId,
    pub object: NodeId,
    pub stored: Option<Relation>,
    pub oracle: Option<Relation>,
}

/// Compare every ordered pair of a serialized graph against the oracle: each
/// stored edge must carry the oracle label and no labelled pair may be absent.
/// Spatial graphs only store unit-step pairs when they were hand-built, so a
/// missing spatial edge is not reported.
pub fn check_graph(doc: &GraphDocument) -> Result<Vec<EdgeMismatch>, OracleError> {
    let world = GroundWorld::from_document(doc)?;
    let mut stored: HashMap<(NodeId, NodeId), Relation> = HashMap::new();
    let mut out = Vec::new();
    for &(s, r, o) in &doc.edges {
        if s.0 >= world.len() || o.0 >= world.len() {
            return Err(OracleError::UnknownNode(if s.0 >= world.len() { s } else { o }));
        }
        if let Some(prev) = stored.insert((s, o), r) {
            out.push(EdgeMismatch {
                subject: s,
                object: o,
                stored: Some(prev),
                oracle: None,
            });
        }
    }
    for u in (0..world.len()).map(NodeId) {
        for v in (0..world.len()).map(NodeId) {
            if u == v {
                continue;
            }
            let expected = relation(&world, u, v)?;
            let have = stored.get(&(u, v)).copied();
            let missing_ok = have.is_none() && doc.task == Task::Spatial;
            if have != expected && !missing_ok {
                out.push(EdgeMismatch {
                    subject: u,
                    object: v,
                    stored: have,
                    oracle: expected,
                });
            }
        }
    }
    Ok(out)
}

/// Answer entailed by named triples for "head is ? of tail".
///
/// `Ok(None)` means the triples are consistent but do not force a single
/// vocabulary label. `gender_of` supplies genders for kinship names; names it
/// does not know fall back on the genders their labels imply.
pub fn answer_from_triples(
    task: Task,
    triples: &[NamedTriple],
    head: &str,
    tail: &str,
    gender_of: &dyn Fn(&str) -> Option<Gender>,
) -> Result<Option<Relation>, OracleError> {
    match task {
        Task::Kinship => {
            let kin = triples
                .iter()
                .map(|t| match t.relation() {
                    Relation::Kin(r) => Ok((t.subject(), r, t.object())),
                    Relation::Spatial(_) => Err(OracleError::Contradiction),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(kinship_answer(&kin, head, tail, gender_of)?.map(Relation::Kin))
        }
        Task::Spatial => {
            let sp = triples
                .iter()
                .map(|t| match t.relation() {
                    Relation::Spatial(r) => Ok((t.subject(), r, t.object())),
                    Relation::Kin(_) => Err(OracleError::Contradiction),
                })
                .collect::<Result<Vec<_>, _>>()?;
            spatial_answer(&sp, head, tail).map(|r| Some(Relation::Spatial(r)))
        }
    }
}

/// Place every agent by unit steps from the head and read the head-to-tail
/// relation off the coordinates.
pub fn spatial_answer(triples: &[(&str, SpatialRelation, &str)], head: &str, tail: &str) -> Result<SpatialRelation, OracleError> {
    let mut adj: HashMap<&str, Vec<(&str, i64, i64)>> = HashMap::new();
    for &(s, r, o) in triples {
        let (dx, dy) = unit_step(r);
        adj.entry(o).or_default().push((s, dx, dy));
        adj.entry(s).or_default().push((o, -dx, -dy));
    }
    for name in [head, tail] {
        if !adj.contains_key(name) {
            return Err(OracleError::UnknownEntity(name.to_string()));
        }
    }
    let mut pos: HashMap<&str, (i64, i64)> = HashMap::new();
    pos.insert(head, (0, 0));
    let mut queue = VecDeque::from([head]);
    while let Some(n) = queue.pop_front() {
        let (x, y) = pos[n];
        for &(m, dx, dy) in &adj[n] {
            let p = (x + dx, y + dy);
            match pos.get(m) {
                Some(&q) if q != p => return Err(OracleError::Contradiction),
                Some(_) => {}
                None => {
                    pos.insert(m, p);
                    queue.push_back(m);
                }
            }
        }
    }
    let Some(&(tx, ty)) = pos.get(tail) else {
        return Err(OracleError::Disconnected);
    };
    Ok(sign_label((0 - tx).signum(), (0 - ty).signum()))
}

/// Relationship shapes of the definitional canon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Parent,
    Child,
    Sibling,
    Grandparent,
    Grandchild,
    ParentsSibling,
    SiblingsChild,
    SpousesParent,
    ChildsSpouse,
}

fn canon(label: KinRelation) -> (Shape, Gender) {
    use Gender::{Female as F, Male as M};
    use KinRelation::*;
    match label {
        Father => (Shape::Parent, M),
        Mother => (Shape::Parent, F),
        Son => (Shape::Child, M),
        Daughter => (Shape::Child, F),
        Brother => (Shape::Sibling, M),
        Sister => (Shape::Sibling, F),
        Grandfather => (Shape::Grandparent, M),
        Grandmother => (Shape::Grandparent, F),
        Grandson => (Shape::Grandchild, M),
        Granddaughter => (Shape::Grandchild, F),
        Uncle => (Shape::ParentsSibling, M),
        Aunt => (Shape::ParentsSibling, F),
        Nephew => (Shape::SiblingsChild, M),
        Niece => (Shape::SiblingsChild, F),
        FatherInLaw => (Shape::SpousesParent, M),
        MotherInLaw => (Shape::SpousesParent, F),
        SonInLaw => (Shape::ChildsSpouse, M),
        DaughterInLaw => (Shape::ChildsSpouse, F),
    }
}

fn label_of(shape: Shape, gender: Gender) -> KinRelation {
    use KinRelation::*;
    let male = gender == Gender::Male;
    match shape {
        Shape::Parent => if male { Father } else { Mother },
        Shape::Child => if male { Son } else { Daughter },
        Shape::Sibling => if male { Brother } else { Sister },
        Shape::Grandparent => if male { Grandfather } else { Grandmother },
        Shape::Grandchild => if male { Grandson } else { Granddaughter },
        Shape::ParentsSibling => if male { Uncle } else { Aunt },
        Shape::SiblingsChild => if male { Nephew } else { Niece },
        Shape::SpousesParent => if male { FatherInLaw } else { MotherInLaw },
        Shape::ChildsSpouse => if male { SonInLaw } else { DaughterInLaw },
    }
}

/// Flat primitive facts with dense lookup.
struct Facts {
    genders: Vec<Gender>,
    parent: Vec<bool>,
    spouse: Vec<bool>,
}

impl Facts {
    /// `parent_of` yields (parent, child); `married` yields unordered pairs.
    fn new(
        genders: Vec<Gender>,
        parent_of: impl IntoIterator<Item = (usize, usize)>,
        married: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let n = genders.len();
        let mut parent = vec![false; n * n];
        let mut spouse = vec![false; n * n];
        for (p, c) in parent_of {
            parent[p * n + c] = true;
        }
        for (a, b) in married {
            spouse[a * n + b] = true;
            spouse[b * n + a] = true;
        }
        Facts {
            genders,
            parent,
            spouse,
        }
    }

    fn n(&self) -> usize {
        self.genders.len()
    }

    fn is_parent(&self, p: usize, c: usize) -> bool {
        self.parent[p * self.n() + c]
    }

    fn is_spouse(&self, a: usize, b: usize) -> bool {
        a != b && self.spouse[a * self.n() + b]
    }

    fn is_sibling(&self, a: usize, b: usize) -> bool {
        a != b && (0..self.n()).any(|p| self.is_parent(p, a) && self.is_parent(p, b))
    }

    fn shapes(&self, u: usize, v: usize) -> Vec<Shape> {
        let all = 0..self.n();
        let mut out = Vec::new();
        if u == v {
            return out;
        }
        if self.is_parent(u, v) {
            out.push(Shape::Parent);
        }
        if self.is_parent(v, u) {
            out.push(Shape::Child);
        }
        if self.is_sibling(u, v) {
            out.push(Shape::Sibling);
        }
        if all.clone().any(|p| self.is_parent(u, p) && self.is_parent(p, v)) {
            out.push(Shape::Grandparent);
        }
        if all.clone().any(|p| self.is_parent(v, p) && self.is_parent(p, u)) {
            out.push(Shape::Grandchild);
        }
        if all.clone().any(|p| self.is_parent(p, v) && self.is_sibling(u, p)) {
            out.push(Shape::ParentsSibling);
        }
        if all.clone().any(|s| self.is_sibling(s, v) && self.is_parent(s, u)) {
            out.push(Shape::SiblingsChild);
        }
        if all.clone().any(|s| self.is_spouse(s, v) && self.is_parent(u, s)) {
            out.push(Shape::SpousesParent);
        }
        if all.clone().any(|c| self.is_parent(v, c) && self.is_spouse(u, c)) {
            out.push(Shape::ChildsSpouse);
        }
        out
    }
}

fn unique(facts: &Facts, u: usize, v: usize) -> Result<Option<KinRelation>, Vec<KinRelation>> {
    let labels: Vec<KinRelation> = facts
        .shapes(u, v)
        .into_iter()
        .map(|s| label_of(s, facts.genders[u]))
        .collect();
    match labels.len() {
        0 => Ok(None),
        1 => Ok(Some(labels[0])),
        _ => Err(labels),
    }
}

#[derive(Clone, Copy, Debug)]
enum GenderTerm {
    Known(Gender),
    /// Index of a branching variable.
    Var(usize),
    /// Opposite of another person's gender.
    OppositeOf(usize),
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
}

/// Persons and family equations extracted from kinship triples. Person `i`
/// has family terms `2i` (family born into) and `2i + 1` (family married
/// into, where `i` holds the slot of its gender).
struct Theory {
    named: usize,
    genders: Vec<GenderTerm>,
    equations: Vec<(usize, usize)>,
    distinct: Vec<(usize, usize)>,
    vars: usize,
}

fn born(p: usize) -> usize {
    2 * p
}

fn married(p: usize) -> usize {
    2 * p + 1
}

impl Theory {
    fn aux(&mut self, gender: GenderTerm) -> usize {
        self.genders.push(gender);
        self.genders.len() - 1
    }

    fn var(&mut self) -> GenderTerm {
        self.vars += 1;
        GenderTerm::Var(self.vars - 1)
    }

    fn add(&mut self, a: usize, shape: Shape, b: usize) {
        let eq = &mut self.equations;
        match shape {
            Shape::Parent => eq.push((married(a), born(b))),
            Shape::Child => eq.push((born(a), married(b))),
            Shape::Sibling => {
                eq.push((born(a), born(b)));
                self.distinct.push((a, b));
            }
            Shape::Grandparent => {
                let g = self.var();
                let p = self.aux(g);
                self.equations.push((born(b), married(p)));
                self.equations.push((born(p), married(a)));
            }
            Shape::Grandchild => {
                let g = self.var();
                let p = self.aux(g);
                self.equations.push((born(a), married(p)));
                self.equations.push((born(p), married(b)));
            }
            Shape::ParentsSibling => {
                let g = self.var();
                let p = self.aux(g);
                self.equations.push((born(b), married(p)));
                self.equations.push((born(a), born(p)));
                self.distinct.push((a, p));
            }
            Shape::SiblingsChild => {
                let g = self.var();
                let s = self.aux(g);
                self.equations.push((born(a), married(s)));
                self.equations.push((born(s), born(b)));
                self.distinct.push((s, b));
            }
            Shape::SpousesParent => {
                let s = self.aux(GenderTerm::OppositeOf(b));
                self.equations.push((married(s), married(b)));
                self.equations.push((born(s), married(a)));
            }
            Shape::ChildsSpouse => {
                let c = self.aux(GenderTerm::OppositeOf(a));
                self.equations.push((married(a), married(c)));
                self.equations.push((born(c), married(b)));
            }
        }
    }

    fn resolve(&self, assignment: u64) -> Vec<Gender> {
        let pick = |v: usize| {
            if assignment & (1 << v) != 0 {
                Gender::Female
            } else {
                Gender::Male
            }
        };
        let base = |t: GenderTerm| match t {
            GenderTerm::Known(g) => Some(g),
            GenderTerm::Var(v) => Some(pick(v)),
            GenderTerm::OppositeOf(_) => None,
        };
        self.genders
            .iter()
            .map(|&t| match t {
                GenderTerm::OppositeOf(p) => base(self.genders[p])
                    .expect("opposite-of terms point at base terms")
                    .opposite(),
                t => base(t).expect("base term"),
            })
            .collect()
    }

    /// Close the equations for one gender assignment and return the model's
    /// facts, or `None` when the assignment is inconsistent.
    fn model(&self, genders: &[Gender]) -> Option<(Facts, Vec<usize>)> {
        let n = genders.len();
        let mut persons = UnionFind::new(n);
        let mut families = UnionFind::new(2 * n);
        for &(a, b) in &self.equations {
            families.union(a, b);
        }
        // Slot congruence: one father and one mother per family.
        loop {
            let mut slot: HashMap<(usize, Gender), usize> = HashMap::new();
            let mut merges = Vec::new();
            for p in 0..n {
                if persons.find(p) != p {
                    continue;
                }
                let key = (families.find(married(p)), genders[p]);
                match slot.get(&key) {
                    Some(&q) => merges.push((q, p)),
                    None => {
                        slot.insert(key, p);
                    }
                }
            }
            if merges.is_empty() {
                break;
            }
            for (a, b) in merges {
                let (ra, rb) = (persons.find(a), persons.find(b));
                if ra == rb {
                    continue;
                }
                if ra < self.named && rb < self.named {
                    return None;
                }
                persons.union(ra, rb);
                families.union(born(ra), born(rb));
                families.union(married(ra), married(rb));
            }
        }
        for &(a, b) in &self.distinct {
            if persons.find(a) == persons.find(b) {
                return None;
            }
        }
        let reps: Vec<usize> = (0..n).filter(|&p| persons.find(p) == p).collect();
        // No one is their own ancestor: the born -> married family graph is
        // acyclic.
        let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
        for &p in &reps {
            next.entry(families.find(born(p)))
                .or_default()
                .push(families.find(married(p)));
        }
        if has_cycle(&next) {
            return None;
        }

        let index: HashMap<usize, usize> = reps.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut model_genders: Vec<Gender> = reps.iter().map(|&p| genders[p]).collect();
        let mut parent_of = Vec::new();
        let mut married_pairs = Vec::new();
        let mut by_marriage: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &p in &reps {
            by_marriage.entry(families.find(married(p))).or_default().push(index[&p]);
        }
        for members in by_marriage.values() {
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    married_pairs.push((a, b));
                }
            }
        }
        let mut born_groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &c in &reps {
            born_groups.entry(families.find(born(c))).or_default().push(index[&c]);
        }
        for (fam, children) in born_groups {
            let parents: Vec<usize> = by_marriage.get(&fam).cloned().unwrap_or_default();
            let parents = if parents.is_empty() && children.len() > 1 {
                // Siblings always share some parent; stand one in.
                model_genders.push(Gender::Male);
                vec![model_genders.len() - 1]
            } else {
                parents
            };
            for &p in &parents {
                for &c in &children {
                    parent_of.push((p, c));
                }
            }
        }
        let person_index: Vec<usize> = (0..n).map(|p| index[&persons.find(p)]).collect();
        Some((Facts::new(model_genders, parent_of, married_pairs), person_index))
    }
}

fn has_cycle(next: &HashMap<usize, Vec<usize>>) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: HashMap<usize, u8> = HashMap::new();
    let mut keys: Vec<usize> = next.keys().copied().collect();
    keys.sort_unstable();
    for start in keys {
        if state.get(&start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state.insert(start, 1);
        while let Some(&mut (node, ref mut i)) = stack.last_mut() {
            let succ = next.get(&node).map(Vec::as_slice).unwrap_or(&[]);
            if *i < succ.len() {
                let m = succ[*i];
                *i += 1;
                match state.get(&m).copied().unwrap_or(0) {
                    1 => return true,
                    0 => {
                        state.insert(m, 1);
                        stack.push((m, 0));
                    }
                    _ => {}
                }
            } else {
                state.insert(node, 2);
                stack.pop();
            }
        }
    }
    false
}

/// Branching beyond this many unknown genders is refused as undetermined.
const MAX_GENDER_VARS: usize = 20;

/// Kinship label entailed by the triples, under the canon's assumptions:
/// distinct names are distinct people, one father and one mother per person,
/// parents of a shared child are each other's only spouse, siblings are full
/// siblings and nobody is their own ancestor. Unknown genders (of unnamed
/// intermediaries or of names the lookup does not know) are enumerated; the
/// answer must agree across every consistent assignment.
pub fn kinship_answer(
    triples: &[(&str, KinRelation, &str)],
    head: &str,
    tail: &str,
    gender_of: &dyn Fn(&str) -> Option<Gender>,
) -> Result<Option<KinRelation>, OracleError> {
    let mut names: Vec<&str> = Vec::new();
    let mut ids: HashMap<&str, usize> = HashMap::new();
    for &(s, _, o) in triples {
        for name in [s, o] {
            if !ids.contains_key(name) {
                ids.insert(name, names.len());
                names.push(name);
            }
        }
    }
    let (&h, &t) = match (ids.get(head), ids.get(tail)) {
        (Some(h), Some(t)) => (h, t),
        (None, _) => return Err(OracleError::UnknownEntity(head.to_string())),
        (_, None) => return Err(OracleError::UnknownEntity(tail.to_string())),
    };
    let mut theory = Theory {
        named: names.len(),
        genders: Vec::new(),
        equations: Vec::new(),
        distinct: Vec::new(),
        vars: 0,
    };
    let mut implied: HashMap<&str, HashSet<Gender>> = HashMap::new();
    for &(s, r, _) in triples {
        implied.entry(s).or_default().insert(canon(r).1);
    }
    for &name in &names {
        let stated = implied.get(name);
        let gender = match gender_of(name) {
            Some(g) => {
                if stated.is_some_and(|set| set.iter().any(|&x| x != g)) {
                    return Err(OracleError::Contradiction);
                }
                GenderTerm::Known(g)
            }
            None => match stated {
                Some(set) if set.len() > 1 => return Err(OracleError::Contradiction),
                Some(set) => GenderTerm::Known(*set.iter().next().expect("nonempty")),
                None => theory.var(),
            },
        };
        theory.genders.push(gender);
    }
    for &(s, r, o) in triples {
        theory.add(ids[s], canon(r).0, ids[o]);
    }
    if theory.vars > MAX_GENDER_VARS {
        return Ok(None);
    }
    let mut answer: Option<Option<KinRelation>> = None;
    for assignment in 0..(1u64 << theory.vars) {
        let genders = theory.resolve(assignment);
        let Some((facts, at)) = theory.model(&genders) else {
            continue;
        };
        let label = unique(&facts, at[h], at[t]).unwrap_or(None);
        match answer {
            None => answer = Some(label),
            Some(prev) if prev != label => return Ok(None),
            Some(_) => {}
        }
        if label.is_none() {
            return Ok(None);
        }
    }
    answer.ok_or(OracleError::Contradiction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use KinRelation::*;

    fn no_names(_: &str) -> Option<Gender> {
        None
    }

    fn ask(triples: &[(&str, KinRelation, &str)], head: &str, tail: &str) -> Option<KinRelation> {
        kinship_answer(triples, head, tail, &no_names).unwrap()
    }

    fn world(genders: &[Gender], parents: &[(usize, usize)], spouses: &[(usize, usize)]) -> GroundWorld {
        GroundWorld::Kinship {
            genders: genders.to_vec(),
            parents: parents.iter().map(|&(c, p)| (NodeId(c), NodeId(p))).collect(),
            spouses: spouses.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect(),
        }
    }

    #[test]
    fn direct_rules() {
        use Gender::*;
        // 0 -> parent 1 -> parent 2 (male)
        let w = world(&[Female, Male, Male], &[(0, 1), (1, 2)], &[]);
        assert_eq!(genealogy_relation(&w, NodeId(2), NodeId(0)).unwrap(), Some(Grandfather));
        // 1 male spouse of 2, 2 daughter of 0
        let w = world(&[Female, Male, Female], &[(2, 0)], &[(1, 2)]);
        assert_eq!(genealogy_relation(&w, NodeId(1), NodeId(0)).unwrap(), Some(SonInLaw));
        let w = world(&[Female, Male], &[], &[]);
        assert_eq!(genealogy_relation(&w, NodeId(1), NodeId(0)).unwrap(), None);
    }

    #[test]
    fn conflicting_rules_are_reported() {
        use Gender::*;
        // 1 is both parent and sibling of 0
        let w = world(&[Male, Male, Female], &[(0, 1), (0, 2), (1, 2)], &[]);
        assert!(genealogy_relation(&w, NodeId(1), NodeId(0)).is_err());
    }

    #[test]
    fn coordinates() {
        let w = GroundWorld::Spatial {
            xy: vec![(0, 0), (0, 0), (2, 5), (2, 1), (-3, -3)],
        };
        assert_eq!(coordinate_relation(&w, NodeId(0), NodeId(1)).unwrap(), SpatialRelation::Overlaps);
        assert_eq!(coordinate_relation(&w, NodeId(2), NodeId(3)).unwrap(), SpatialRelation::Above);
        assert_eq!(coordinate_relation(&w, NodeId(4), NodeId(0)).unwrap(), SpatialRelation::LowerLeft);
    }

    #[test]
    fn paper_style_chain() {
        let triples = [
            ("Evelyn", Mother, "Sean"),
            ("Sean", Brother, "Pennie"),
            ("Pennie", Sister, "Darren"),
            ("Darren", Son, "Christian"),
            ("Christian", Father, "Nichole"),
        ];
        assert_eq!(ask(&triples, "Evelyn", "Nichole"), Some(Mother));
    }

    #[test]
    fn case_table_niece() {
        let triples = [
            ("Brittney", Daughter, "Elizabeth"),
            ("Elizabeth", Sister, "Morgan"),
        ];
        assert_eq!(ask(&triples, "Brittney", "Morgan"), Some(Niece));
    }

    #[test]
    fn ambiguous_chains_are_undetermined() {
        assert_eq!(ask(&[("A", Father, "B"), ("B", Son, "C")], "A", "C"), None);
        // the grandparent may be on either side
        assert_eq!(ask(&[("A", Grandfather, "B"), ("C", Mother, "B")], "A", "C"), None);
    }

    #[test]
    fn slot_merging_forces_identity() {
        // The grandfather's child is either B or D; only the first makes him
        // E's father.
        let triples = [
            ("B", Father, "A"),
            ("D", Mother, "A"),
            ("C", Grandfather, "A"),
            ("B", Brother, "E"),
        ];
        assert_eq!(ask(&triples, "C", "E"), None);
        let triples = [("B", Father, "A"), ("C", Father, "B"), ("B", Brother, "E")];
        assert_eq!(ask(&triples, "C", "E"), Some(Father));
    }

    #[test]
    fn contradictions_are_errors() {
        let triples = [("A", Father, "B"), ("C", Father, "B")];
        assert_eq!(kinship_answer(&triples, "A", "B", &no_names), Err(OracleError::Contradiction));
        let triples = [("A", Father, "B"), ("B", Father, "A")];
        assert_eq!(kinship_answer(&triples, "A", "B", &no_names), Err(OracleError::Contradiction));
    }

    #[test]
    fn spatial_placement() {
        use SpatialRelation::*;
        let triples = [("A", Above, "B"), ("B", Above, "C"), ("C", LowerLeft, "D")];
        assert_eq!(spatial_answer(&triples, "A", "D").unwrap(), UpperLeft);
        let bad = [("A", Above, "B"), ("A", Below, "B")];
        assert_eq!(spatial_answer(&bad, "A", "B"), Err(OracleError::Contradiction));
        let split = [("A", Above, "B"), ("C", Above, "D")];
        assert_eq!(spatial_answer(&split, "A", "D"), Err(OracleError::Disconnected));
    }
}
