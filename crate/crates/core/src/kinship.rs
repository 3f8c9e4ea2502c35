//! Kinship deduction engine.
//!
//! Ground truth is a genealogy of persons grouped into families. A family is a
//! couple slot pair (father, mother) plus the children born into it, so the
//! engine's assumptions hold structurally:
//!
//! - every person has at most one father and one mother;
//! - siblings are always full siblings (they share a birth family);
//! - the two parents of a family are each other's only spouse.
//!
//! All 18 labels are defined from these primitives (blood-only collateral
//! relations; in-laws go through exactly one marriage).

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ParseLabelError;
use crate::relgraph::{NodeId, RelationalGraph, World};
use crate::sampler::LinkAlgebra;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "m")]
    Male,
    #[serde(rename = "f")]
    Female,
}

impl Gender {
    pub fn opposite(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Gender {
        if rng.gen_bool(0.5) {
            Gender::Male
        } else {
            Gender::Female
        }
    }
}

/// The 18 kinship labels, in the order the prompts list them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KinRelation {
    Aunt,
    Brother,
    Daughter,
    DaughterInLaw,
    Father,
    FatherInLaw,
    Granddaughter,
    Grandfather,
    Grandmother,
    Grandson,
    Mother,
    MotherInLaw,
    Nephew,
    Niece,
    Sister,
    Son,
    SonInLaw,
    Uncle,
}

/// Gender-free shape of a kinship label: "subject is the <kind> of object".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KinKind {
    Parent,
    Child,
    Sibling,
    Grandparent,
    Grandchild,
    /// Uncle or aunt: a sibling of a parent.
    ParentSibling,
    /// Nephew or niece: a child of a sibling.
    SiblingChild,
    /// Parent of a spouse.
    ParentInLaw,
    /// Spouse of a child.
    ChildInLaw,
}

impl KinKind {
    pub const ALL: [KinKind; 9] = [
        KinKind::Parent,
        KinKind::Child,
        KinKind::Sibling,
        KinKind::Grandparent,
        KinKind::Grandchild,
        KinKind::ParentSibling,
        KinKind::SiblingChild,
        KinKind::ParentInLaw,
        KinKind::ChildInLaw,
    ];

    pub fn inverse(self) -> KinKind {
        match self {
            KinKind::Parent => KinKind::Child,
            KinKind::Child => KinKind::Parent,
            KinKind::Sibling => KinKind::Sibling,
            KinKind::Grandparent => KinKind::Grandchild,
            KinKind::Grandchild => KinKind::Grandparent,
            KinKind::ParentSibling => KinKind::SiblingChild,
            KinKind::SiblingChild => KinKind::ParentSibling,
            KinKind::ParentInLaw => KinKind::ChildInLaw,
            KinKind::ChildInLaw => KinKind::ParentInLaw,
        }
    }
}

impl KinRelation {
    pub const ALL: [KinRelation; 18] = [
        KinRelation::Aunt,
        KinRelation::Brother,
        KinRelation::Daughter,
        KinRelation::DaughterInLaw,
        KinRelation::Father,
        KinRelation::FatherInLaw,
        KinRelation::Granddaughter,
        KinRelation::Grandfather,
        KinRelation::Grandmother,
        KinRelation::Grandson,
        KinRelation::Mother,
        KinRelation::MotherInLaw,
        KinRelation::Nephew,
        KinRelation::Niece,
        KinRelation::Sister,
        KinRelation::Son,
        KinRelation::SonInLaw,
        KinRelation::Uncle,
    ];

    /// Relations that attach a single new person without any auxiliary
    /// relatives; the default growth set.
    pub const BASIC: [KinRelation; 6] = [
        KinRelation::Brother,
        KinRelation::Daughter,
        KinRelation::Father,
        KinRelation::Mother,
        KinRelation::Sister,
        KinRelation::Son,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KinRelation::Aunt => "aunt",
            KinRelation::Brother => "brother",
            KinRelation::Daughter => "daughter",
            KinRelation::DaughterInLaw => "daughter-in-law",
            KinRelation::Father => "father",
            KinRelation::FatherInLaw => "father-in-law",
            KinRelation::Granddaughter => "granddaughter",
            KinRelation::Grandfather => "grandfather",
            KinRelation::Grandmother => "grandmother",
            KinRelation::Grandson => "grandson",
            KinRelation::Mother => "mother",
            KinRelation::MotherInLaw => "mother-in-law",
            KinRelation::Nephew => "nephew",
            KinRelation::Niece => "niece",
            KinRelation::Sister => "sister",
            KinRelation::Son => "son",
            KinRelation::SonInLaw => "son-in-law",
            KinRelation::Uncle => "uncle",
        }
    }

    /// Index into [`KinRelation::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Gender the label implies for its subject.
    pub fn gender(self) -> Gender {
        use KinRelation::*;
        match self {
            Brother | Father | FatherInLaw | Grandfather | Grandson | Nephew | Son | SonInLaw
            | Uncle => Gender::Male,
            Aunt | Daughter | DaughterInLaw | Granddaughter | Grandmother | Mother
            | MotherInLaw | Niece | Sister => Gender::Female,
        }
    }

    pub fn kind(self) -> KinKind {
        use KinRelation::*;
        match self {
            Father | Mother => KinKind::Parent,
            Son | Daughter => KinKind::Child,
            Brother | Sister => KinKind::Sibling,
            Grandfather | Grandmother => KinKind::Grandparent,
            Grandson | Granddaughter => KinKind::Grandchild,
            Uncle | Aunt => KinKind::ParentSibling,
            Nephew | Niece => KinKind::SiblingChild,
            FatherInLaw | MotherInLaw => KinKind::ParentInLaw,
            SonInLaw | DaughterInLaw => KinKind::ChildInLaw,
        }
    }

    pub fn from_kind(kind: KinKind, gender: Gender) -> KinRelation {
        use KinRelation::*;
        let (male, female) = match kind {
            KinKind::Parent => (Father, Mother),
            KinKind::Child => (Son, Daughter),
            KinKind::Sibling => (Brother, Sister),
            KinKind::Grandparent => (Grandfather, Grandmother),
            KinKind::Grandchild => (Grandson, Granddaughter),
            KinKind::ParentSibling => (Uncle, Aunt),
            KinKind::SiblingChild => (Nephew, Niece),
            KinKind::ParentInLaw => (FatherInLaw, MotherInLaw),
            KinKind::ChildInLaw => (SonInLaw, DaughterInLaw),
        };
        match gender {
            Gender::Male => male,
            Gender::Female => female,
        }
    }
}

impl fmt::Display for KinRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KinRelation {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KinRelation::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

/// Structural composition: if "A is `first` of B" and "B is `second` of C"
/// with A, B, C pairwise distinct, the shape of A's relation to C whenever it
/// is forced by the engine assumptions. `None` means several shapes are
/// possible or the forced shape has no label (cousins, spouses, great-*).
pub fn compose_kind(first: KinKind, second: KinKind) -> Option<KinKind> {
    use KinKind::*;
    match (first, second) {
        (Parent, Parent) => Some(Grandparent),
        (Parent, Sibling) => Some(Parent),
        (Parent, ParentSibling) => Some(Grandparent),
        (Child, Parent) => Some(Sibling),
        (Child, Child) => Some(Grandchild),
        (Child, Sibling) => Some(SiblingChild),
        // B's children are born into B's marriage, hence also the children of
        // C's child.
        (Child, ChildInLaw) => Some(Grandchild),
        (Sibling, Parent) => Some(ParentSibling),
        (Sibling, Child) => Some(Child),
        (Sibling, Sibling) => Some(Sibling),
        (Sibling, Grandchild) => Some(Grandchild),
        (Sibling, SiblingChild) => Some(SiblingChild),
        (Grandparent, Sibling) => Some(Grandparent),
        (ParentSibling, Sibling) => Some(ParentSibling),
        (SiblingChild, Child) => Some(Grandchild),
        // B's spouse is C's other parent.
        (ParentInLaw, Parent) => Some(Grandparent),
        _ => None,
    }
}

/// Label composition over the 18-label vocabulary. The result carries the
/// gender of `first`'s subject.
pub fn compose(first: KinRelation, second: KinRelation) -> Option<KinRelation> {
    compose_kind(first.kind(), second.kind()).map(|k| KinRelation::from_kind(k, first.gender()))
}

/// The full 18x18 composition table, row = first relation, column = second.
pub fn composition_table() -> [[Option<KinRelation>; 18]; 18] {
    let mut table = [[None; 18]; 18];
    for a in KinRelation::ALL {
        for b in KinRelation::ALL {
            table[a.index()][b.index()] = compose(a, b);
        }
    }
    table
}

/// If "A is `relation` of B", the relation "B is ? of A", given B's gender.
pub fn invert(relation: KinRelation, counterpart: Gender) -> KinRelation {
    KinRelation::from_kind(relation.kind().inverse(), counterpart)
}

/// A link between two people while reasoning over a chain: a vocabulary
/// label, or marriage. Marriage has no label of its own but composes back into
/// labels (a father's son's mother is the father's wife, whose daughter is his
/// daughter).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Link {
    Label(KinRelation),
    /// Subject is the spouse (of the given gender) of the object.
    Spouse(Gender),
}

const LINKS: usize = 20;

impl Link {
    fn index(self) -> usize {
        match self {
            Link::Label(r) => r.index(),
            Link::Spouse(Gender::Male) => 18,
            Link::Spouse(Gender::Female) => 19,
        }
    }

    fn from_index(i: usize) -> Link {
        match i {
            18 => Link::Spouse(Gender::Male),
            19 => Link::Spouse(Gender::Female),
            i => Link::Label(KinRelation::ALL[i]),
        }
    }

    fn gender(self) -> Gender {
        match self {
            Link::Label(r) => r.gender(),
            Link::Spouse(g) => g,
        }
    }

    fn shape(self) -> Option<KinKind> {
        match self {
            Link::Label(r) => Some(r.kind()),
            Link::Spouse(_) => None,
        }
    }
}

/// Composition of link shapes for pairwise distinct A, B, C, with `None`
/// standing for marriage. Extends [`compose_kind`] with the entries that pass
/// through marriage.
fn compose_link_shape(first: Option<KinKind>, second: Option<KinKind>) -> Option<Option<KinKind>> {
    use KinKind::*;
    match (first, second) {
        (Some(a), Some(b)) => match (a, b) {
            // Two distinct parents of B.
            (Parent, Child) => Some(None),
            // Both are parents of B's spouse.
            (ParentInLaw, ChildInLaw) => Some(None),
            _ => compose_kind(a, b).map(Some),
        },
        (None, Some(b)) => match b {
            Parent => Some(Some(Parent)),
            Child => Some(Some(ChildInLaw)),
            Grandparent => Some(Some(Grandparent)),
            ParentInLaw => Some(Some(ParentInLaw)),
            // A and C's child are both B's spouse.
            ChildInLaw => Some(Some(Child)),
            _ => None,
        },
        (Some(a), None) => match a {
            Parent => Some(Some(ParentInLaw)),
            Child => Some(Some(Child)),
            Grandchild => Some(Some(Grandchild)),
            ParentInLaw => Some(Some(Parent)),
            ChildInLaw => Some(Some(ChildInLaw)),
            _ => None,
        },
        (None, None) => None,
    }
}

/// Link composition; the result carries the gender of `first`'s subject.
pub fn compose_link(first: Link, second: Link) -> Option<Link> {
    compose_link_shape(first.shape(), second.shape()).map(|shape| match shape {
        Some(kind) => Link::Label(KinRelation::from_kind(kind, first.gender())),
        None => Link::Spouse(first.gender()),
    })
}

static COMPOSE_MASKS: LazyLock<[[u32; LINKS]; LINKS]> = LazyLock::new(|| {
    let mut table = [[0u32; LINKS]; LINKS];
    for (a, row) in table.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            if let Some(c) = compose_link(Link::from_index(a), Link::from_index(b)) {
                *cell = 1 << c.index();
            }
        }
    }
    table
});

fn compose_masks(left: u32, right: u32) -> u32 {
    let mut out = 0;
    for a in bits(left) {
        for b in bits(right) {
            out |= COMPOSE_MASKS[a][b];
        }
    }
    out
}

fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            return None;
        }
        let i = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        Some(i)
    })
}

/// Incremental entailment over a growing chain of labels, where label `i`
/// reads "v_i is labels\[i\] of v_{i+1}" and all v_i are distinct. Every
/// composition order is tried (interval dynamic programming), so the chain is
/// entailed when some bracketing reduces it to a single label.
#[derive(Clone, Debug, Default)]
pub struct ChainEntailment {
    /// `columns[j][i]`: bitmask of labels relating v_i to v_{j+1}.
    columns: Vec<Vec<u32>>,
}

impl ChainEntailment {
    pub fn new() -> Self {
        ChainEntailment::default()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.columns.truncate(len);
    }

    /// Append a label and return the links now entailed end to end.
    pub fn push(&mut self, label: KinRelation) -> Vec<Link> {
        let j = self.columns.len();
        let mut column = vec![0u32; j + 1];
        column[j] = 1 << label.index();
        for i in (0..j).rev() {
            let mut mask = 0;
            for k in i..j {
                let left = self.columns[k][i];
                let right = column[k + 1];
                if left != 0 && right != 0 {
                    mask |= compose_masks(left, right);
                }
            }
            column[i] = mask;
        }
        self.columns.push(column);
        self.entailed()
    }

    /// Links relating the first node to the last one.
    pub fn entailed(&self) -> Vec<Link> {
        match self.columns.last() {
            Some(column) => bits(column[0]).map(Link::from_index).collect(),
            None => Vec::new(),
        }
    }
}

/// The chain-splitting algebra over a kinship graph's genealogy: labels plus
/// marriage, with only labels stated or asked about.
#[derive(Clone, Copy, Debug, Default)]
pub struct KinshipLinks;

impl LinkAlgebra for KinshipLinks {
    type Link = Link;

    fn link(&self, graph: &RelationalGraph, a: NodeId, b: NodeId) -> Option<Link> {
        match graph.world() {
            World::Kinship(g) => g.link(a, b),
            World::Spatial(_) => None,
        }
    }

    fn compose(&self, first: Link, second: Link) -> Option<Link> {
        compose_link(first, second)
    }

    fn stateable(&self, link: Link) -> bool {
        matches!(link, Link::Label(_))
    }

    fn answerable(&self, link: Link) -> bool {
        matches!(link, Link::Label(_))
    }
}

/// Links entailed between the two ends of a chain of labels.
pub fn entailed(labels: &[KinRelation]) -> Vec<Link> {
    let mut chain = ChainEntailment::new();
    for &l in labels {
        chain.push(l);
    }
    chain.entailed()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyId(usize);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Family {
    father: Option<NodeId>,
    mother: Option<NodeId>,
    children: Vec<NodeId>,
}

impl Family {
    fn slot(&self, gender: Gender) -> Option<NodeId> {
        match gender {
            Gender::Male => self.father,
            Gender::Female => self.mother,
        }
    }

    fn slot_mut(&mut self, gender: Gender) -> &mut Option<NodeId> {
        match gender {
            Gender::Male => &mut self.father,
            Gender::Female => &mut self.mother,
        }
    }

    fn parents(&self) -> impl Iterator<Item = NodeId> {
        self.father.into_iter().chain(self.mother)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Person {
    gender: Gender,
    born: Option<FamilyId>,
    married: Option<FamilyId>,
}

/// Relation could not be attached to the target (e.g. a second father).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unrealizable;

/// Outcome of [`Genealogy::realize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Realized {
    /// The person that now stands in the requested relation to the target.
    pub subject: NodeId,
    /// Every person created, auxiliaries first, `subject` last.
    pub created: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Genealogy {
    persons: Vec<Person>,
    families: Vec<Family>,
}

impl Genealogy {
    /// A genealogy holding a single root person (id 0).
    pub fn new(root: Gender) -> Self {
        let mut g = Genealogy {
            persons: Vec::new(),
            families: Vec::new(),
        };
        g.add_person(root);
        g
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    pub fn contains(&self, p: NodeId) -> bool {
        p.0 < self.persons.len()
    }

    pub fn gender(&self, p: NodeId) -> Gender {
        self.persons[p.0].gender
    }

    pub fn father(&self, p: NodeId) -> Option<NodeId> {
        self.born(p).and_then(|f| f.father)
    }

    pub fn mother(&self, p: NodeId) -> Option<NodeId> {
        self.born(p).and_then(|f| f.mother)
    }

    pub fn parents(&self, p: NodeId) -> Vec<NodeId> {
        self.born(p).map(|f| f.parents().collect()).unwrap_or_default()
    }

    pub fn children(&self, p: NodeId) -> Vec<NodeId> {
        self.marriage(p).map(|f| f.children.clone()).unwrap_or_default()
    }

    pub fn siblings(&self, p: NodeId) -> Vec<NodeId> {
        self.born(p)
            .map(|f| f.children.iter().copied().filter(|&c| c != p).collect())
            .unwrap_or_default()
    }

    pub fn spouse(&self, p: NodeId) -> Option<NodeId> {
        let gender = self.gender(p);
        self.marriage(p).and_then(|f| f.slot(gender.opposite()))
    }

    /// Every (child, parent) fact, sorted.
    pub fn parent_facts(&self) -> Vec<(NodeId, NodeId)> {
        let mut facts: Vec<_> = (0..self.persons.len())
            .map(NodeId)
            .flat_map(|c| self.parents(c).into_iter().map(move |p| (c, p)))
            .collect();
        facts.sort();
        facts
    }

    /// Every spouse pair as (husband, wife), sorted.
    pub fn spouse_facts(&self) -> Vec<(NodeId, NodeId)> {
        let mut facts: Vec<_> = self
            .families
            .iter()
            .filter_map(|f| Some((f.father?, f.mother?)))
            .collect();
        facts.sort();
        facts
    }

    /// The label for "u is ? of v", or `None` when no label applies.
    /// Label of `u` relative to `v`, or marriage.
    pub fn link(&self, u: NodeId, v: NodeId) -> Option<Link> {
        if u == v {
            return None;
        }
        match self.derive(u, v) {
            Some(r) => Some(Link::Label(r)),
            None => (self.spouse(u) == Some(v)).then(|| Link::Spouse(self.gender(u))),
        }
    }

    pub fn derive(&self, u: NodeId, v: NodeId) -> Option<KinRelation> {
        if u == v {
            return None;
        }
        self.derive_kind(u, v)
            .map(|k| KinRelation::from_kind(k, self.gender(u)))
    }

    fn derive_kind(&self, u: NodeId, v: NodeId) -> Option<KinKind> {
        let born_u = self.persons[u.0].born;
        let born_v = self.persons[v.0].born;
        let parents_v = self.parents(v);
        let parents_u = self.parents(u);

        if parents_v.contains(&u) {
            return Some(KinKind::Parent);
        }
        if parents_u.contains(&v) {
            return Some(KinKind::Child);
        }
        if born_u.is_some() && born_u == born_v {
            return Some(KinKind::Sibling);
        }
        if parents_v.iter().any(|&p| self.parents(p).contains(&u)) {
            return Some(KinKind::Grandparent);
        }
        if parents_u.iter().any(|&p| self.parents(p).contains(&v)) {
            return Some(KinKind::Grandchild);
        }
        if born_u.is_some()
            && parents_v
                .iter()
                .any(|&p| p != u && self.persons[p.0].born == born_u)
        {
            return Some(KinKind::ParentSibling);
        }
        if born_v.is_some()
            && parents_u
                .iter()
                .any(|&p| p != v && self.persons[p.0].born == born_v)
        {
            return Some(KinKind::SiblingChild);
        }
        if let Some(s) = self.spouse(v) {
            if self.parents(s).contains(&u) {
                return Some(KinKind::ParentInLaw);
            }
        }
        if let Some(s) = self.spouse(u) {
            if self.parents(s).contains(&v) {
                return Some(KinKind::ChildInLaw);
            }
        }
        None
    }

    /// Add the minimal facts that make a new person stand in `relation` to
    /// `target`, creating auxiliary persons where the relation goes through
    /// someone who does not exist yet.
    pub fn realize<R: Rng + ?Sized>(
        &mut self,
        target: NodeId,
        relation: KinRelation,
        rng: &mut R,
    ) -> Result<Realized, Unrealizable> {
        let gender = relation.gender();
        let mut created = Vec::new();
        let subject = match relation.kind() {
            KinKind::Parent => self.fill_parent_slot(target, gender).ok_or(Unrealizable)?,
            KinKind::Child => self.add_child(target, gender),
            KinKind::Sibling => self.add_sibling(target, gender, rng, &mut created),
            KinKind::Grandparent => {
                let mut candidates: Vec<NodeId> = self
                    .parents(target)
                    .into_iter()
                    .filter(|&p| self.father_or_mother(p, gender).is_none())
                    .collect();
                if candidates.is_empty() {
                    let slot = self.free_parent_slot(target, rng).ok_or(Unrealizable)?;
                    let aux = self
                        .fill_parent_slot(target, slot)
                        .expect("free slot was just checked");
                    created.push(aux);
                    candidates.push(aux);
                }
                let parent = *candidates.choose(rng).expect("nonempty");
                self.fill_parent_slot(parent, gender)
                    .expect("candidate has a free slot")
            }
            KinKind::Grandchild => {
                let children = self.children(target);
                let child = match children.choose(rng) {
                    Some(&c) => c,
                    None => {
                        let aux = self.add_child(target, Gender::random(rng));
                        created.push(aux);
                        aux
                    }
                };
                self.add_child(child, gender)
            }
            KinKind::ParentSibling => {
                let parents = self.parents(target);
                let parent = match parents.choose(rng) {
                    Some(&p) => p,
                    None => {
                        let slot = self.free_parent_slot(target, rng).ok_or(Unrealizable)?;
                        let aux = self.fill_parent_slot(target, slot).expect("free slot");
                        created.push(aux);
                        aux
                    }
                };
                self.add_sibling(parent, gender, rng, &mut created)
            }
            KinKind::SiblingChild => {
                let siblings = self.siblings(target);
                let sibling = match siblings.choose(rng) {
                    Some(&s) => s,
                    None => {
                        let aux_gender = Gender::random(rng);
                        let aux = self.add_sibling(target, aux_gender, rng, &mut created);
                        created.push(aux);
                        aux
                    }
                };
                self.add_child(sibling, gender)
            }
            KinKind::ParentInLaw => {
                let spouse = match self.spouse(target) {
                    Some(s) => s,
                    None => {
                        let aux = self.add_spouse(target).expect("unmarried target");
                        created.push(aux);
                        aux
                    }
                };
                self.fill_parent_slot(spouse, gender).ok_or(Unrealizable)?
            }
            KinKind::ChildInLaw => {
                let want = gender.opposite();
                let unmarried: Vec<NodeId> = self
                    .children(target)
                    .into_iter()
                    .filter(|&c| self.gender(c) == want && self.spouse(c).is_none())
                    .collect();
                let child = match unmarried.choose(rng) {
                    Some(&c) => c,
                    None => {
                        let aux = self.add_child(target, want);
                        created.push(aux);
                        aux
                    }
                };
                self.add_spouse(child).expect("child is unmarried")
            }
        };
        created.push(subject);
        Ok(Realized { subject, created })
    }

    fn born(&self, p: NodeId) -> Option<&Family> {
        self.persons[p.0].born.map(|f| &self.families[f.0])
    }

    fn marriage(&self, p: NodeId) -> Option<&Family> {
        self.persons[p.0].married.map(|f| &self.families[f.0])
    }

    fn father_or_mother(&self, p: NodeId, gender: Gender) -> Option<NodeId> {
        self.born(p).and_then(|f| f.slot(gender))
    }

    fn free_parent_slot<R: Rng + ?Sized>(&self, p: NodeId, rng: &mut R) -> Option<Gender> {
        match self.born(p) {
            None => Some(Gender::random(rng)),
            Some(f) => match (f.father, f.mother) {
                (None, None) => Some(Gender::random(rng)),
                (None, Some(_)) => Some(Gender::Male),
                (Some(_), None) => Some(Gender::Female),
                (Some(_), Some(_)) => None,
            },
        }
    }

    fn add_person(&mut self, gender: Gender) -> NodeId {
        self.persons.push(Person {
            gender,
            born: None,
            married: None,
        });
        NodeId(self.persons.len() - 1)
    }

    fn new_family(&mut self, family: Family) -> FamilyId {
        self.families.push(family);
        FamilyId(self.families.len() - 1)
    }

    /// Family in which `p` is a parent, created on demand.
    fn ensure_marriage(&mut self, p: NodeId) -> FamilyId {
        if let Some(f) = self.persons[p.0].married {
            return f;
        }
        let mut family = Family::default();
        *family.slot_mut(self.gender(p)) = Some(p);
        let f = self.new_family(family);
        self.persons[p.0].married = Some(f);
        f
    }

    /// New parent of the given gender for `child` and all of its siblings.
    fn fill_parent_slot(&mut self, child: NodeId, gender: Gender) -> Option<NodeId> {
        match self.persons[child.0].born {
            Some(f) => {
                if self.families[f.0].slot(gender).is_some() {
                    return None;
                }
                let parent = self.add_person(gender);
                *self.families[f.0].slot_mut(gender) = Some(parent);
                self.persons[parent.0].married = Some(f);
                Some(parent)
            }
            None => {
                let parent = self.add_person(gender);
                let mut family = Family {
                    children: vec![child],
                    ..Family::default()
                };
                *family.slot_mut(gender) = Some(parent);
                let f = self.new_family(family);
                self.persons[parent.0].married = Some(f);
                self.persons[child.0].born = Some(f);
                Some(parent)
            }
        }
    }

    fn add_child(&mut self, parent: NodeId, gender: Gender) -> NodeId {
        let f = self.ensure_marriage(parent);
        let child = self.add_person(gender);
        self.persons[child.0].born = Some(f);
        self.families[f.0].children.push(child);
        child
    }

    /// New sibling of `p`. Siblings need a shared parent; when `p` has none an
    /// auxiliary parent of random gender is created first.
    fn add_sibling<R: Rng + ?Sized>(
        &mut self,
        p: NodeId,
        gender: Gender,
        rng: &mut R,
        created: &mut Vec<NodeId>,
    ) -> NodeId {
        let f = match self.persons[p.0].born {
            Some(f) => f,
            None => {
                let aux = self
                    .fill_parent_slot(p, Gender::random(rng))
                    .expect("no birth family yet");
                created.push(aux);
                self.persons[p.0].born.expect("family just created")
            }
        };
        let sibling = self.add_person(gender);
        self.persons[sibling.0].born = Some(f);
        self.families[f.0].children.push(sibling);
        sibling
    }

    /// New spouse for an unmarried `p`; also becomes the other parent of any
    /// children `p` already has.
    fn add_spouse(&mut self, p: NodeId) -> Option<NodeId> {
        let f = self.ensure_marriage(p);
        let other = self.gender(p).opposite();
        if self.families[f.0].slot(other).is_some() {
            return None;
        }
        let spouse = self.add_person(other);
        *self.families[f.0].slot_mut(other) = Some(spouse);
        self.persons[spouse.0].married = Some(f);
        Some(spouse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use KinRelation::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn labels_round_trip_through_strings() {
        for r in KinRelation::ALL {
            assert_eq!(r.as_str().parse::<KinRelation>().unwrap(), r);
            assert_eq!(KinRelation::from_kind(r.kind(), r.gender()), r);
        }
        assert!("cousin".parse::<KinRelation>().is_err());
    }

    #[test]
    fn realize_father_on_orphan() {
        let mut g = Genealogy::new(Gender::Female);
        let r = g.realize(NodeId(0), Father, &mut rng()).unwrap();
        assert_eq!(r.created, vec![NodeId(1)]);
        assert_eq!(g.gender(NodeId(1)), Gender::Male);
        assert_eq!(g.derive(NodeId(1), NodeId(0)), Some(Father));
        assert_eq!(g.derive(NodeId(0), NodeId(1)), Some(Daughter));
    }

    #[test]
    fn second_father_is_unrealizable() {
        let mut g = Genealogy::new(Gender::Male);
        g.realize(NodeId(0), Father, &mut rng()).unwrap();
        assert_eq!(g.realize(NodeId(0), Father, &mut rng()), Err(Unrealizable));
    }

    #[test]
    fn daughter_in_law_creates_son_only_when_needed() {
        let mut g = Genealogy::new(Gender::Female);
        let r = g.realize(NodeId(0), DaughterInLaw, &mut rng()).unwrap();
        assert_eq!(r.created.len(), 2);
        assert_eq!(g.derive(r.subject, NodeId(0)), Some(DaughterInLaw));
        assert_eq!(g.derive(r.created[0], NodeId(0)), Some(Son));

        let mut g = Genealogy::new(Gender::Female);
        g.realize(NodeId(0), Son, &mut rng()).unwrap();
        let r = g.realize(NodeId(0), DaughterInLaw, &mut rng()).unwrap();
        assert_eq!(r.created.len(), 1);
        assert_eq!(g.derive(r.subject, NodeId(0)), Some(DaughterInLaw));
    }

    #[test]
    fn every_label_is_realizable_on_a_lone_person() {
        for root in [Gender::Male, Gender::Female] {
            for r in KinRelation::ALL {
                let mut g = Genealogy::new(root);
                let out = g.realize(NodeId(0), r, &mut rng()).unwrap();
                assert_eq!(g.derive(out.subject, NodeId(0)), Some(r), "{r}");
                assert_eq!(*out.created.last().unwrap(), out.subject);
            }
        }
    }

    #[test]
    fn new_parent_joins_whole_sibling_group() {
        let mut g = Genealogy::new(Gender::Male);
        let mut rng = rng();
        let sis = g.realize(NodeId(0), Sister, &mut rng).unwrap();
        let aux = sis.created[0];
        let other = g.realize(NodeId(0), Father, &mut rng);
        let new_parent = match other {
            Ok(r) => r.subject,
            // aux parent happened to be the father; ask for the mother instead
            Err(_) => g.realize(NodeId(0), Mother, &mut rng).unwrap().subject,
        };
        assert!(g.parents(sis.subject).contains(&new_parent));
        assert_eq!(g.spouse(new_parent), Some(aux));
        assert_eq!(g.derive(new_parent, aux), None);
    }

    #[test]
    fn derive_examples() {
        // u female child of v
        let mut g = Genealogy::new(Gender::Male);
        let d = g.realize(NodeId(0), Daughter, &mut rng()).unwrap().subject;
        assert_eq!(g.derive(d, NodeId(0)), Some(Daughter));

        // u male parent of a parent of v
        let mut g = Genealogy::new(Gender::Female);
        let gf = g.realize(NodeId(0), Grandfather, &mut rng()).unwrap().subject;
        assert_eq!(g.derive(gf, NodeId(0)), Some(Grandfather));

        // first cousins have no label
        let mut g = Genealogy::new(Gender::Female);
        let mut rng = rng();
        let aunt = g.realize(NodeId(0), Aunt, &mut rng).unwrap().subject;
        let cousin = g.realize(aunt, Son, &mut rng).unwrap().subject;
        assert_eq!(g.derive(cousin, NodeId(0)), None);
        assert_eq!(g.derive(NodeId(0), cousin), None);
    }

    #[test]
    fn mother_of_brother_is_mother() {
        let mut g = Genealogy::new(Gender::Female);
        let mut rng = rng();
        let w = g.realize(NodeId(0), Brother, &mut rng).unwrap().subject;
        let mother = match g.mother(w) {
            Some(m) => m,
            None => g.realize(w, Mother, &mut rng).unwrap().subject,
        };
        assert_eq!(g.derive(mother, w), Some(Mother));
        assert_eq!(g.derive(mother, NodeId(0)), Some(Mother));
    }

    #[test]
    fn composition_examples() {
        assert_eq!(compose(Son, Son), Some(Grandson));
        assert_eq!(compose(Daughter, Sister), Some(Niece));
        assert_eq!(compose(Father, Son), None);
        assert_eq!(compose(Brother, Son), Some(Son));
        assert_eq!(compose(Son, Father), Some(Brother));
        assert_eq!(compose(FatherInLaw, Mother), Some(Grandfather));
    }

    #[test]
    fn composition_keeps_first_gender() {
        for a in KinRelation::ALL {
            for b in KinRelation::ALL {
                if let Some(c) = compose(a, b) {
                    assert_eq!(c.gender(), a.gender(), "{a} o {b}");
                }
            }
        }
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(invert(Daughter, Gender::Male), Father);
        assert_eq!(invert(Sister, Gender::Female), Sister);
        assert_eq!(invert(Uncle, Gender::Female), Niece);
        for r in KinRelation::ALL {
            for g in [Gender::Male, Gender::Female] {
                assert_eq!(invert(invert(r, g), r.gender()), r);
            }
        }
    }

    #[test]
    fn entailment_uses_any_bracketing() {
        let label = |r| vec![Link::Label(r)];
        assert_eq!(entailed(&[Sister, Sister, Daughter]), label(Daughter));
        assert_eq!(entailed(&[Sister, Brother]), label(Sister));
        assert_eq!(entailed(&[Father, Son]), vec![Link::Spouse(Gender::Male)]);
        assert_eq!(entailed(&[Father, Son, Mother]), label(Father));
        assert!(entailed(&[Father, Son, Brother]).is_empty());
        assert_eq!(entailed(&[Father]), label(Father));
        assert!(entailed(&[]).is_empty());
        assert_eq!(entailed(&[Mother, Brother, Sister, Son, Father]), label(Mother));
    }
}
