//! Brute-force reference semantics shared by the integration tests. Written
//! from the relation definitions alone: labels are plain strings and no
//! engine table or offset constant is reused.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use reasonforge_core::kinship::{Genealogy, KinRelation};
use reasonforge_core::{grow_graph, seed, Gender, GraphDocument, GrowthConfig, NodeId, Relation, Task, World};

/// Unit displacement of "subject is `label` of object", y pointing up.
pub fn offset(label: &str) -> (i64, i64) {
    match label {
        "left" => (-1, 0),
        "right" => (1, 0),
        "above" => (0, 1),
        "below" => (0, -1),
        "upper-left" => (-1, 1),
        "upper-right" => (1, 1),
        "lower-left" => (-1, -1),
        "lower-right" => (1, -1),
        "overlaps" => (0, 0),
        other => panic!("not a spatial label: {other}"),
    }
}

pub const SPATIAL: [&str; 9] = [
    "left",
    "right",
    "above",
    "below",
    "upper-left",
    "upper-right",
    "lower-left",
    "lower-right",
    "overlaps",
];

/// Label of a displacement by brute search over the nine sign patterns.
pub fn spatial_label(dx: i64, dy: i64) -> &'static str {
    SPATIAL
        .iter()
        .copied()
        .find(|&l| {
            let (ox, oy) = offset(l);
            ox == dx.signum() && oy == dy.signum()
        })
        .expect("every sign pattern has a label")
}

/// Relation of the first agent to the last when label `i` reads
/// "agent i is labels[i] of agent i+1", by placing agents on a grid.
pub fn simulate_chain(labels: &[&str]) -> &'static str {
    let mut pos = vec![(0i64, 0i64)];
    for l in labels {
        let (x, y) = *pos.last().unwrap();
        let (ox, oy) = offset(l);
        // subject = object + offset, so the next agent sits at subject - offset
        pos.push((x - ox, y - oy));
    }
    let (hx, hy) = pos[0];
    let (tx, ty) = *pos.last().unwrap();
    spatial_label(hx - tx, hy - ty)
}

/// Explicit family: genders, parent lists and spouse pairs.
#[derive(Clone, Debug)]
pub struct Family {
    pub male: Vec<bool>,
    pub parents: Vec<Vec<usize>>,
    pub spouses: BTreeSet<(usize, usize)>,
}

impl Family {
    pub fn from_document(doc: &GraphDocument) -> Family {
        assert_eq!(doc.task, Task::Kinship);
        let n = doc.nodes.len();
        let male = doc
            .nodes
            .iter()
            .map(|a| serde_json::to_value(a.gender.expect("kinship node has a gender")).unwrap() == "m")
            .collect();
        let mut parents = vec![Vec::new(); n];
        for &(c, p) in doc.parents.as_ref().expect("kinship facts") {
            parents[c.0].push(p.0);
        }
        let mut spouses = BTreeSet::new();
        for &(a, b) in doc.spouses.as_ref().expect("kinship facts") {
            spouses.insert((a.0, b.0));
            spouses.insert((b.0, a.0));
        }
        Family { male, parents, spouses }
    }

    pub fn len(&self) -> usize {
        self.male.len()
    }

    fn is_parent(&self, p: usize, c: usize) -> bool {
        self.parents[c].contains(&p)
    }

    fn is_sibling(&self, a: usize, b: usize) -> bool {
        a != b && self.parents[a].iter().any(|p| self.parents[b].contains(p))
    }

    fn is_spouse(&self, a: usize, b: usize) -> bool {
        self.spouses.contains(&(a, b))
    }

    fn is_grandparent(&self, g: usize, c: usize) -> bool {
        self.parents[c].iter().any(|&p| self.is_parent(g, p))
    }

    /// Every label whose definition holds for "u is the ? of v".
    pub fn all_labels(&self, u: usize, v: usize) -> Vec<&'static str> {
        if u == v {
            return Vec::new();
        }
        let n = self.len();
        let m = self.male[u];
        let pick = |male: &'static str, female: &'static str| if m { male } else { female };
        let mut out = Vec::new();
        if self.is_parent(u, v) {
            out.push(pick("father", "mother"));
        }
        if self.is_parent(v, u) {
            out.push(pick("son", "daughter"));
        }
        if self.is_sibling(u, v) {
            out.push(pick("brother", "sister"));
        }
        if self.is_grandparent(u, v) {
            out.push(pick("grandfather", "grandmother"));
        }
        if self.is_grandparent(v, u) {
            out.push(pick("grandson", "granddaughter"));
        }
        if self.parents[v].iter().any(|&p| self.is_sibling(u, p)) {
            out.push(pick("uncle", "aunt"));
        }
        if self.parents[u].iter().any(|&p| self.is_sibling(p, v)) {
            out.push(pick("nephew", "niece"));
        }
        if (0..n).any(|s| self.is_spouse(v, s) && self.is_parent(u, s)) {
            out.push(pick("father-in-law", "mother-in-law"));
        }
        if (0..n).any(|c| self.is_parent(v, c) && self.is_spouse(u, c)) {
            out.push(pick("son-in-law", "daughter-in-law"));
        }
        out
    }

    /// The unique label for "u is the ? of v"; panics when two definitions hold.
    pub fn label(&self, u: usize, v: usize) -> Option<&'static str> {
        let all = self.all_labels(u, v);
        assert!(all.len() <= 1, "{u} -> {v} matches {all:?}");
        all.first().copied()
    }
}

/// Reference label for an ordered pair of a serialized graph.
pub fn document_label(doc: &GraphDocument, family: Option<&Family>, u: usize, v: usize) -> Option<&'static str> {
    match doc.task {
        Task::Kinship => family.expect("family for kinship").label(u, v),
        Task::Spatial => {
            let (ux, uy) = doc.nodes[u].xy.expect("spatial node has xy");
            let (vx, vy) = doc.nodes[v].xy.expect("spatial node has xy");
            Some(spatial_label(ux - vx, uy - vy))
        }
    }
}

impl Family {
    /// From genders, (child, parent) pairs and spouse pairs.
    pub fn from_facts(male: Vec<bool>, parent_facts: &[(usize, usize)], spouse_facts: &[(usize, usize)]) -> Family {
        let mut parents = vec![Vec::new(); male.len()];
        for &(c, p) in parent_facts {
            parents[c].push(p);
        }
        let mut spouses = BTreeSet::new();
        for &(a, b) in spouse_facts {
            spouses.insert((a, b));
            spouses.insert((b, a));
        }
        Family { male, parents, spouses }
    }
}

/// Head-to-tail label of named spatial triples (subject, label, object), by
/// placing every agent on the grid relative to the head.
pub fn grid_answer(triples: &[(String, String, String)], head: &str, tail: &str) -> &'static str {
    let mut pos: HashMap<&str, (i64, i64)> = HashMap::from([(head, (0, 0))]);
    let mut changed = true;
    while changed {
        changed = false;
        for (s, r, o) in triples {
            let (dx, dy) = offset(r);
            match (pos.get(s.as_str()).copied(), pos.get(o.as_str()).copied()) {
                (Some((x, y)), None) => {
                    pos.insert(o, (x - dx, y - dy));
                    changed = true;
                }
                (None, Some((x, y))) => {
                    pos.insert(s, (x + dx, y + dy));
                    changed = true;
                }
                (Some(a), Some(b)) => assert_eq!(a, (b.0 + dx, b.1 + dy), "inconsistent story"),
                (None, None) => {}
            }
        }
    }
    let (hx, hy) = pos[head];
    let (tx, ty) = pos[tail];
    spatial_label(hx - tx, hy - ty)
}

pub const GENDERS: [Gender; 2] = [Gender::Male, Gender::Female];

pub fn family(g: &Genealogy) -> Family {
    let n = g.len();
    let male = (0..n).map(|i| g.gender(NodeId(i)) == Gender::Male).collect();
    let parents: Vec<_> = g.parent_facts().iter().map(|&(c, p)| (c.0, p.0)).collect();
    let spouses: Vec<_> = g.spouse_facts().iter().map(|&(a, b)| (a.0, b.0)).collect();
    Family::from_facts(male, &parents, &spouses)
}

/// A world where `a` is `r1` of `b` and `b` is `r2` of `c`, all distinct.
/// Odd seeds first add a few random relatives so that `a` may attach
/// through people other than the minimal ones.
pub fn instantiate(r1: KinRelation, r2: KinRelation, root: Gender, seed: u64) -> Option<(Genealogy, usize, usize)> {
    let mut rng = seed::rng(seed);
    let mut g = Genealogy::new(root);
    let b = g.realize(NodeId(0), r2, &mut rng).ok()?.subject;
    if seed % 2 == 1 {
        for _ in 0..rng.gen_range(1..=4) {
            let mut near = g.parents(b);
            near.push(b);
            near.push(NodeId(rng.gen_range(0..g.len())));
            let target = *near.choose(&mut rng).unwrap();
            let r = *KinRelation::ALL.choose(&mut rng).unwrap();
            let _ = g.realize(target, r, &mut rng);
        }
    }
    let a = g.realize(b, r1, &mut rng).ok()?.subject;
    Some((g, a.0, 0))
}

pub type Outcomes = BTreeMap<(KinRelation, KinRelation), BTreeSet<Option<&'static str>>>;

fn record(out: &mut Outcomes, label_of: &dyn Fn(usize, usize) -> Option<&'static str>, a: usize, b: usize, c: usize) {
    let parse = |s: &str| s.parse::<KinRelation>().unwrap();
    if let (Some(r1), Some(r2)) = (label_of(a, b), label_of(b, c)) {
        out.entry((parse(r1), parse(r2))).or_default().insert(label_of(a, c));
    }
}

/// Outcomes of "a is r1 of b, b is r2 of c" over realized worlds and over
/// every distinct triple of persons in grown genealogies.
pub fn composition_outcomes() -> Outcomes {
    let mut out = Outcomes::new();
    for r1 in KinRelation::ALL {
        for r2 in KinRelation::ALL {
            for root in GENDERS {
                for s in 0..64 {
                    if let Some((g, a, c)) = instantiate(r1, r2, root, s) {
                        let f = family(&g);
                        out.entry((r1, r2)).or_default().insert(f.label(a, c));
                    }
                }
            }
        }
    }
    for s in 0..40u64 {
        let config = if s % 2 == 0 { GrowthConfig::new(Task::Kinship, 3, s) } else { all_labels_config(1, s) };
        let graph = grow_graph(Task::Kinship, &config).unwrap();
        let World::Kinship(g) = graph.world() else { unreachable!() };
        let f = family(g);
        let n = g.len();
        let labels: Vec<Vec<Option<&'static str>>> = (0..n).map(|u| (0..n).map(|v| f.label(u, v)).collect()).collect();
        let label_of = |u: usize, v: usize| labels[u][v];
        for a in 0..n {
            for b in 0..n {
                if labels[a][b].is_none() {
                    continue;
                }
                for c in 0..n {
                    if c != a && c != b {
                        record(&mut out, &label_of, a, b, c);
                    }
                }
            }
        }
    }
    out
}

pub fn all_labels_config(iterations: usize, seed: u64) -> GrowthConfig {
    let mut c = GrowthConfig::new(Task::Kinship, iterations, seed);
    c.growth_set = KinRelation::ALL.iter().map(|&r| Relation::Kin(r)).collect();
    c
}

