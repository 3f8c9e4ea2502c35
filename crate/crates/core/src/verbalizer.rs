//! Rule-based verbalizer: names for nodes, one templated sentence per triple,
//! and the fixed query and answer sentence forms.
//!
//! Templates are plain sentences with `{A}` (subject) and `{B}` (object)
//! slots. Each compiles to an anchored pattern, so a rendered story can be
//! parsed back into exactly the triples that produced it.

use std::collections::{BTreeMap, HashMap};
use std::sync::LazyLock;

use rand::seq::{index, SliceRandom};
use regex::Regex;
use serde::Deserialize;

use crate::data::{self, DataSource};
use crate::error::{DataError, VerbalizeError};
use crate::kinship::Gender;
use crate::relgraph::{NamedTriple, NodeId, Relation, RelationalGraph, Task, World};
use crate::seed;
use crate::spatial::SpatialRelation;

/// Names are a capital letter followed by letters.
pub const NAME_PATTERN: &str = "[A-Z][a-zA-Z]*";

/// Gendered first names for kinship stories.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct NamePool {
    pub male: Vec<String>,
    pub female: Vec<String>,
}

impl NamePool {
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let pool: NamePool = serde_json::from_str(text).map_err(|e| parse_error(data::NAMES, e))?;
        let name = Regex::new(&format!("^{NAME_PATTERN}$")).expect("valid pattern");
        let mut seen = HashMap::new();
        for (gender, list) in [(Gender::Male, &pool.male), (Gender::Female, &pool.female)] {
            for n in list {
                if !name.is_match(n) {
                    return Err(parse_error(data::NAMES, format!("bad name `{n}`")));
                }
                if seen.insert(n.as_str(), gender).is_some() {
                    return Err(parse_error(data::NAMES, format!("name `{n}` listed twice")));
                }
            }
        }
        Ok(pool)
    }

    pub fn load(source: &DataSource) -> Result<Self, DataError> {
        NamePool::from_json(&source.read(data::NAMES)?)
    }

    pub fn bundled() -> &'static NamePool {
        static POOL: LazyLock<NamePool> =
            LazyLock::new(|| NamePool::from_json(data::bundled(data::NAMES).expect("bundled")).expect("bundled names parse"));
        &POOL
    }

    pub fn names(&self, gender: Gender) -> &[String] {
        match gender {
            Gender::Male => &self.male,
            Gender::Female => &self.female,
        }
    }

    pub fn gender_of(&self, name: &str) -> Option<Gender> {
        if self.male.iter().any(|n| n == name) {
            Some(Gender::Male)
        } else if self.female.iter().any(|n| n == name) {
            Some(Gender::Female)
        } else {
            None
        }
    }
}

fn parse_error(path: &str, message: impl ToString) -> DataError {
    DataError::Parse {
        path: path.to_string(),
        message: message.to_string(),
    }
}

/// Injective naming of the nodes that appear in one example.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameTable {
    names: BTreeMap<NodeId, (String, Option<Gender>)>,
}

impl NameTable {
    /// Draw distinct names for `nodes`: gender-matched first names for
    /// kinship, capital letters for spatial agents.
    pub fn assign(graph: &RelationalGraph, nodes: &[NodeId], pool: &NamePool, rng: &mut seed::Rng) -> Result<Self, VerbalizeError> {
        let mut table = NameTable::default();
        match graph.world() {
            World::Kinship(g) => {
                for gender in [Gender::Male, Gender::Female] {
                    let group: Vec<NodeId> = nodes.iter().copied().filter(|&n| g.gender(n) == gender).collect();
                    let list = pool.names(gender);
                    if group.len() > list.len() {
                        return Err(VerbalizeError::NamePoolExhausted {
                            needed: group.len(),
                            available: list.len(),
                        });
                    }
                    let picks = index::sample(rng, list.len(), group.len());
                    for (node, i) in group.into_iter().zip(picks) {
                        table.names.insert(node, (list[i].clone(), Some(gender)));
                    }
                }
            }
            World::Spatial(_) => {
                let mut letters: Vec<char> = ('A'..='Z').collect();
                if nodes.len() > letters.len() {
                    return Err(VerbalizeError::NamePoolExhausted {
                        needed: nodes.len(),
                        available: letters.len(),
                    });
                }
                letters.shuffle(rng);
                for (&node, letter) in nodes.iter().zip(letters) {
                    table.names.insert(node, (letter.to_string(), None));
                }
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, node: NodeId, name: impl Into<String>, gender: Option<Gender>) {
        self.names.insert(node, (name.into(), gender));
    }

    pub fn name(&self, node: NodeId) -> Result<&str, VerbalizeError> {
        self.names
            .get(&node)
            .map(|(n, _)| n.as_str())
            .ok_or(VerbalizeError::MissingName(node))
    }

    pub fn gender(&self, node: NodeId) -> Option<Gender> {
        self.names.get(&node).and_then(|(_, g)| *g)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &str, Option<Gender>)> {
        self.names.iter().map(|(&id, (n, g))| (id, n.as_str(), *g))
    }
}

#[derive(Clone, Debug)]
struct Template {
    text: String,
    pattern: Regex,
}

impl Template {
    fn compile(text: &str) -> Result<Self, VerbalizeError> {
        let bad = |why: &str| VerbalizeError::BadTemplate(text.to_string(), why.to_string());
        if text.matches("{A}").count() != 1 || text.matches("{B}").count() != 1 {
            return Err(bad("needs exactly one {A} and one {B}"));
        }
        let literal = text.replace("{A}", "").replace("{B}", "");
        if literal.contains(['{', '}']) {
            return Err(bad("unknown slot"));
        }
        if !text.ends_with('.') || text[..text.len() - 1].contains('.') {
            return Err(bad("must be one sentence ending in a period"));
        }
        let mut pattern = String::from("^");
        let mut rest = text;
        while let Some(i) = rest.find('{') {
            pattern.push_str(&regex::escape(&rest[..i]));
            let slot = if rest[i..].starts_with("{A}") { "a" } else { "b" };
            pattern.push_str(&format!("(?P<{slot}>{NAME_PATTERN})"));
            rest = &rest[i + 3..];
        }
        pattern.push_str(&regex::escape(rest));
        pattern.push('$');
        Ok(Template {
            text: text.to_string(),
            pattern: Regex::new(&pattern).map_err(|e| bad(&e.to_string()))?,
        })
    }

    fn render(&self, subject: &str, object: &str) -> String {
        self.text.replace("{A}", subject).replace("{B}", object)
    }
}

/// Sentence templates for every label of one task.
#[derive(Clone, Debug)]
pub struct TemplatePool {
    task: Task,
    templates: Vec<(Relation, Vec<Template>)>,
}

impl TemplatePool {
    /// Parse a JSON object mapping each label to its template strings.
    pub fn from_json(task: Task, text: &str) -> Result<Self, VerbalizeError> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| VerbalizeError::BadTemplate("<pool>".into(), e.to_string()))?;
        let mut templates = Vec::new();
        for relation in task.vocabulary() {
            let list = raw
                .get(relation.as_str())
                .ok_or_else(|| VerbalizeError::NoTemplate(relation.to_string()))?;
            if list.len() < 2 {
                return Err(VerbalizeError::BadTemplate(
                    relation.to_string(),
                    "every label needs at least two templates".into(),
                ));
            }
            templates.push((relation, list.iter().map(|t| Template::compile(t)).collect::<Result<_, _>>()?));
        }
        if let Some(extra) = raw.keys().find(|k| task.parse_relation(k).is_err()) {
            return Err(VerbalizeError::BadTemplate(extra.clone(), "not a label of this task".into()));
        }
        let pool = TemplatePool { task, templates };
        pool.check_unambiguous()?;
        Ok(pool)
    }

    pub fn load(task: Task, source: &DataSource) -> Result<Self, DataError> {
        let path = template_path(task);
        let text = source.read(path)?;
        TemplatePool::from_json(task, &text).map_err(|e| parse_error(path, e))
    }

    pub fn bundled(task: Task) -> &'static TemplatePool {
        static KIN: LazyLock<TemplatePool> = LazyLock::new(|| bundled_pool(Task::Kinship));
        static SPATIAL: LazyLock<TemplatePool> = LazyLock::new(|| bundled_pool(Task::Spatial));
        match task {
            Task::Kinship => &KIN,
            Task::Spatial => &SPATIAL,
        }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn templates(&self, relation: Relation) -> Vec<&str> {
        self.entry(relation).map(|list| list.iter().map(|t| t.text.as_str()).collect()).unwrap_or_default()
    }

    fn entry(&self, relation: Relation) -> Option<&[Template]> {
        self.templates
            .iter()
            .find(|(r, _)| *r == relation)
            .map(|(_, list)| list.as_slice())
    }

    /// Every rendering must parse back to its own triple and nothing else.
    fn check_unambiguous(&self) -> Result<(), VerbalizeError> {
        for (relation, list) in &self.templates {
            for t in list {
                let sentence = t.render("Xavier", "Yolanda");
                let want = NamedTriple::new("Xavier", *relation, "Yolanda");
                let hits = self.matches(&sentence);
                if hits.iter().any(|h| *h != want) || hits.is_empty() {
                    return Err(VerbalizeError::BadTemplate(t.text.clone(), "rendering is ambiguous".into()));
                }
            }
        }
        Ok(())
    }

    fn matches(&self, sentence: &str) -> Vec<NamedTriple> {
        let mut out = Vec::new();
        for (relation, list) in &self.templates {
            for t in list {
                if let Some(c) = t.pattern.captures(sentence) {
                    out.push(NamedTriple::new(&c["a"], *relation, &c["b"]));
                }
            }
        }
        out
    }

    /// One sentence for a triple, template drawn uniformly.
    pub fn render(&self, triple: &NamedTriple, rng: &mut seed::Rng) -> Result<String, VerbalizeError> {
        let list = self
            .entry(triple.relation())
            .ok_or_else(|| VerbalizeError::NoTemplate(triple.relation().to_string()))?;
        let t = list.choose(rng).expect("pools have at least two templates");
        Ok(t.render(triple.subject(), triple.object()))
    }

    /// Recover the triple a single sentence was rendered from.
    pub fn extract_sentence(&self, sentence: &str) -> Option<NamedTriple> {
        let mut hits = self.matches(sentence.trim());
        hits.dedup();
        (hits.len() == 1).then(|| hits.remove(0))
    }

    /// Recover every story triple in order; `None` if any sentence fails.
    pub fn extract_story(&self, story: &str) -> Option<Vec<NamedTriple>> {
        split_sentences(story).iter().map(|s| self.extract_sentence(s)).collect()
    }
}

fn bundled_pool(task: Task) -> TemplatePool {
    TemplatePool::from_json(task, data::bundled(template_path(task)).expect("bundled")).expect("bundled templates parse")
}

fn template_path(task: Task) -> &'static str {
    match task {
        Task::Kinship => data::KINSHIP_TEMPLATES,
        Task::Spatial => data::SPATIAL_TEMPLATES,
    }
}

/// Split a story into its period-terminated sentences.
pub fn split_sentences(story: &str) -> Vec<String> {
    story
        .split_inclusive('.')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// One templated sentence per triple, joined by single spaces.
pub fn verbalize_story(triples: &[NamedTriple], pool: &TemplatePool, seed: u64) -> Result<String, VerbalizeError> {
    if triples.is_empty() {
        return Err(VerbalizeError::EmptyChain);
    }
    let mut rng = seed::rng(seed);
    let sentences = triples
        .iter()
        .map(|t| pool.render(t, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(sentences.join(" "))
}

pub fn render_query(head: &str, tail: &str, task: Task) -> String {
    match task {
        Task::Kinship => format!("What is the relationship of {head} to {tail}?"),
        Task::Spatial => format!("What is the relation of the agent {head} to the agent {tail}?"),
    }
}

/// Head and tail names of a rendered query.
pub fn parse_query(query: &str, task: Task) -> Option<(String, String)> {
    static KIN: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(&format!(r"^What is the relationship of ({NAME_PATTERN}) to ({NAME_PATTERN})\?$")).unwrap());
    static SPATIAL: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(&format!(r"^What is the relation of the agent ({NAME_PATTERN}) to the agent ({NAME_PATTERN})\?$")).unwrap()
    });
    let re = match task {
        Task::Kinship => &KIN,
        Task::Spatial => &SPATIAL,
    };
    re.captures(query.trim()).map(|c| (c[1].to_string(), c[2].to_string()))
}

/// The words between subject and object in the fixed answer form.
pub fn relation_phrase(relation: Relation) -> String {
    match relation {
        Relation::Kin(r) => format!("is the {r} of"),
        Relation::Spatial(r) => match r {
            SpatialRelation::Left => "is directly to the left of".into(),
            SpatialRelation::Right => "is directly to the right of".into(),
            SpatialRelation::Above => "is directly above".into(),
            SpatialRelation::Below => "is directly below".into(),
            SpatialRelation::Overlaps => "overlaps with".into(),
            diagonal => format!("is to the {diagonal} of"),
        },
    }
}

/// "head ⟨phrase⟩ tail", without terminal punctuation.
pub fn fact_sentence(subject: &str, relation: Relation, object: &str) -> String {
    format!("{subject} {} {object}", relation_phrase(relation))
}

/// The answer sentence. Kinship answers carry no period, spatial ones do.
pub fn render_answer(head: &str, tail: &str, relation: Relation) -> String {
    let s = fact_sentence(head, relation, tail);
    match relation {
        Relation::Kin(_) => s,
        Relation::Spatial(_) => s + ".",
    }
}

/// Parse one fact in the fixed answer form, with or without a period.
pub fn parse_fact(sentence: &str, task: Task) -> Option<NamedTriple> {
    static PATTERNS: LazyLock<Vec<(Relation, Regex)>> = LazyLock::new(|| {
        [Task::Kinship, Task::Spatial]
            .into_iter()
            .flat_map(|t| t.vocabulary())
            .map(|r| {
                let pattern = format!(r"^({NAME_PATTERN}) {} ({NAME_PATTERN})\.?$", regex::escape(&relation_phrase(r)));
                (r, Regex::new(&pattern).expect("valid pattern"))
            })
            .collect()
    });
    let sentence = sentence.trim();
    PATTERNS
        .iter()
        .filter(|(r, _)| r.task() == task)
        .find_map(|(r, re)| re.captures(sentence).map(|c| NamedTriple::new(&c[1], *r, &c[2])))
}
