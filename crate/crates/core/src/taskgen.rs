//! Corruption and dataset assembly.
//!
//! Each example owns its graph and randomness: every draw flows from
//! `derive_seed(dataset seed, [index, salt, attempt])`, so generation is
//! parallel and still byte-identical to a sequential run.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};
use std::ops::RangeInclusive;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{self, AugmentMix, Augmentation};
use crate::error::{DataError, GenerateError};
use crate::kinship::{self, KinshipLinks, Link};
use crate::oracle;
use crate::relgraph::{grow_graph, GrowthConfig, NamedTriple, Relation, RelationalGraph, Task, Triple};
use crate::sampler::{self, ReasoningChain};
use crate::seed;
use crate::verbalizer::{self, NamePool, NameTable, TemplatePool};

/// Hop buckets of the reference datasets.
pub const HOPS: RangeInclusive<usize> = 2..=10;

/// Resampling budget per example before generation gives up on a hop.
pub const DEFAULT_EXAMPLE_ATTEMPTS: usize = 200;

/// Upper bound on regeneration rounds for examples that repeat an earlier one.
const DEDUP_ROUNDS: u32 = 64;

/// Consecutive rounds without a new example before a hop counts as exhausted.
const PATIENCE: u32 = 4;

/// Split attempts per graph before a fresh graph is drawn.
const SPLIT_ATTEMPTS: usize = 20;

/// Growth iterations used when a spec does not set them.
pub fn default_graph_iterations(task: Task) -> usize {
    match task {
        Task::Kinship => 2,
        Task::Spatial => 3,
    }
}

/// Where an example's randomness came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedLineage {
    pub dataset: u64,
    pub index: u64,
    /// Regeneration round; nonzero when an earlier draw was a duplicate.
    pub salt: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub task: Task,
    pub hop: usize,
    /// Core triples in story order and orientation.
    pub triples: Vec<NamedTriple>,
    pub distractors: Vec<NamedTriple>,
    pub story: String,
    pub query: String,
    pub answer: Relation,
    /// Core triples in reasoning order, head to tail, read forward.
    pub gold_triples: Vec<NamedTriple>,
    pub augmentation: Augmentation,
    pub seed: SeedLineage,
}

impl Example {
    pub fn head(&self) -> &str {
        self.gold_triples.first().map(|t| t.subject()).unwrap_or_default()
    }

    pub fn tail(&self) -> &str {
        self.gold_triples.last().map(|t| t.object()).unwrap_or_default()
    }

    /// Gold label sequence, answer and augmentation: two examples with the same
    /// key pose the same problem up to names.
    pub fn diversity_key(&self) -> (Vec<Relation>, Relation, Augmentation) {
        (
            self.gold_triples.iter().map(|t| t.relation()).collect(),
            self.answer,
            self.augmentation,
        )
    }

    /// Story triples in story order, distractors included.
    pub fn story_triples(&self) -> Vec<NamedTriple> {
        let mut all = self.triples.clone();
        all.extend(self.distractors.iter().cloned());
        all
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub task: Task,
    /// Examples per hop.
    pub counts: BTreeMap<usize, usize>,
    pub augmentation: AugmentMix,
    pub seed: u64,
    pub graph_iterations: usize,
    pub growth_set: Vec<Relation>,
    /// Share this many graphs per hop instead of growing one per example.
    pub graphs_per_hop: Option<usize>,
    pub max_attempts: usize,
}

impl DatasetSpec {
    pub fn new(task: Task, counts: BTreeMap<usize, usize>, seed: u64) -> Self {
        DatasetSpec {
            task,
            counts,
            augmentation: AugmentMix::default(),
            seed,
            graph_iterations: default_graph_iterations(task),
            growth_set: task.default_growth_set(),
            graphs_per_hop: None,
            max_attempts: DEFAULT_EXAMPLE_ATTEMPTS,
        }
    }

    /// `count` examples for every hop in `hops`.
    pub fn uniform(task: Task, hops: RangeInclusive<usize>, count: usize, seed: u64) -> Self {
        DatasetSpec::new(task, hops.map(|h| (h, count)).collect(), seed)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let invalid = |m: String| Err(GenerateError::InvalidSpec(m));
        if self.counts.contains_key(&0) {
            return invalid("hop 0 is not a chain".into());
        }
        if self.growth_set.is_empty() {
            return invalid("growth set is empty".into());
        }
        if let Some(r) = self.growth_set.iter().find(|r| r.task() != self.task) {
            return invalid(format!("growth relation `{r}` is not a {} label", self.task));
        }
        if self.graphs_per_hop == Some(0) {
            return invalid("graphs per hop must be positive".into());
        }
        if self.max_attempts == 0 {
            return invalid("attempt budget must be positive".into());
        }
        let weight: f64 = self.augmentation.entries().iter().map(|(_, w)| w).sum();
        if (weight - 1.0).abs() > 1e-9 {
            return invalid("augmentation proportions must sum to 1".into());
        }
        Ok(())
    }
}

/// The chain's input triples and the withheld head-to-tail label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corruption {
    pub input: Vec<Triple>,
    pub label: Relation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    /// Head and tail are related by no vocabulary label.
    OutOfVocabulary,
    /// The chain's triples do not force the label.
    Undetermined,
}

/// Withhold the head-to-tail relation as the label. Kinship chains must also
/// entail that label from their own triples, or a reader could not recover it.
pub fn corrupt(chain: &ReasoningChain, graph: &RelationalGraph) -> Result<Corruption, Rejection> {
    let label = graph
        .world()
        .derive(chain.head(), chain.tail())
        .ok_or(Rejection::OutOfVocabulary)?;
    if let Relation::Kin(y) = label {
        let labels: Vec<_> = forward_triples(chain, graph)
            .iter()
            .map(|t| t.relation.as_kin().expect("kinship graph"))
            .collect();
        if kinship::entailed(&labels) != [Link::Label(y)] {
            return Err(Rejection::Undetermined);
        }
    }
    Ok(Corruption {
        input: chain.stored_triples(),
        label,
    })
}

/// The chain read head to tail: `walk[i]` is label `i` of `walk[i + 1]`.
pub fn forward_triples(chain: &ReasoningChain, graph: &RelationalGraph) -> Vec<Triple> {
    chain
        .walk
        .windows(2)
        .map(|w| {
            let r = graph.edge_label(w[0], w[1]).expect("walk steps relate both ways");
            Triple::new(w[0], r, w[1])
        })
        .collect()
}

struct Job {
    hop: usize,
    /// Index within the hop bucket.
    local: usize,
    /// Index within the dataset.
    global: usize,
}

struct Context<'a> {
    spec: &'a DatasetSpec,
    names: &'a NamePool,
    templates: &'a TemplatePool,
    graphs: HashMap<usize, Vec<RelationalGraph>>,
}

/// Generate the dataset with the bundled name pool and templates.
pub fn build_dataset(spec: &DatasetSpec) -> Result<Vec<Example>, GenerateError> {
    build_dataset_with(spec, NamePool::bundled(), TemplatePool::bundled(spec.task))
}

pub fn build_dataset_with(spec: &DatasetSpec, names: &NamePool, templates: &TemplatePool) -> Result<Vec<Example>, GenerateError> {
    spec.validate()?;
    if templates.task() != spec.task {
        return Err(GenerateError::InvalidSpec("template pool belongs to the other task".into()));
    }
    let mut jobs = Vec::with_capacity(spec.total());
    for (&hop, &count) in &spec.counts {
        for local in 0..count {
            jobs.push(Job {
                hop,
                local,
                global: jobs.len(),
            });
        }
    }
    let graphs = match spec.graphs_per_hop {
        Some(m) => spec
            .counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&hop, _)| {
                let pool = (0..m)
                    .map(|j| grow(spec, seed::derive_seed(spec.seed, &[seed::tag("graph"), hop as u64, j as u64])))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((hop, pool))
            })
            .collect::<Result<HashMap<_, _>, GenerateError>>()?,
        None => HashMap::new(),
    };
    let ctx = Context {
        spec,
        names,
        templates,
        graphs,
    };

    let mut examples = jobs
        .par_iter()
        .map(|job| generate(&ctx, job, 0))
        .collect::<Result<Vec<_>, _>>()?;

    // Duplicates are redrawn with a new salt; insertion stays in index order
    // so the outcome does not depend on scheduling.
    let mut seen: HashMap<usize, HashSet<_>> = HashMap::new();
    let mut pending = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        if !seen.entry(ex.hop).or_default().insert(ex.diversity_key()) {
            pending.push(i);
        }
    }
    let mut stalls: HashMap<usize, u32> = HashMap::new();
    for salt in 1..=DEDUP_ROUNDS {
        if pending.is_empty() {
            break;
        }
        let redrawn = pending
            .par_iter()
            .map(|&i| generate(&ctx, &jobs[i], salt))
            .collect::<Result<Vec<_>, _>>()?;
        let mut still = Vec::new();
        let mut progressed = HashSet::new();
        for (i, ex) in pending.into_iter().zip(redrawn) {
            if seen.entry(ex.hop).or_default().insert(ex.diversity_key()) {
                progressed.insert(ex.hop);
                examples[i] = ex;
            } else {
                still.push(i);
            }
        }
        for &i in &still {
            let hop = jobs[i].hop;
            let idle = stalls.entry(hop).or_insert(0);
            *idle = if progressed.contains(&hop) { 0 } else { *idle + 1 };
        }
        // A hop that keeps finding nothing new is treated as exhausted.
        still.retain(|&i| stalls[&jobs[i].hop] < PATIENCE);
        pending = still;
    }
    Ok(examples)
}

fn grow(spec: &DatasetSpec, seed: u64) -> Result<RelationalGraph, GenerateError> {
    let config = GrowthConfig {
        iterations: spec.graph_iterations,
        seed,
        growth_set: spec.growth_set.clone(),
        root_gender: None,
    };
    grow_graph(spec.task, &config).map_err(|e| GenerateError::InvalidSpec(e.to_string()))
}

fn generate(ctx: &Context<'_>, job: &Job, salt: u32) -> Result<Example, GenerateError> {
    let spec = ctx.spec;
    let exhausted = GenerateError::Exhausted { hop: job.hop };
    for attempt in 0..spec.max_attempts {
        let mut rng = seed::rng(seed::derive_seed(spec.seed, &[job.global as u64, salt as u64, attempt as u64]));
        let owned;
        let graph = match ctx.graphs.get(&job.hop) {
            Some(pool) => &pool[(job.local + attempt) % pool.len()],
            None => {
                owned = grow(spec, rng.gen())?;
                &owned
            }
        };
        let chain = match spec.task {
            Task::Kinship => sampler::sample_split_chain(graph, job.hop, SPLIT_ATTEMPTS, &mut rng, &KinshipLinks),
            Task::Spatial => sampler::sample_chain_with(graph, job.hop, sampler::DEFAULT_MAX_ATTEMPTS, &mut rng),
        };
        let Ok(chain) = chain else {
            continue;
        };
        let Ok(corruption) = corrupt(&chain, graph) else {
            continue;
        };
        let aug = spec.augmentation.choose(&mut rng);
        let Ok(augmented) = augment::apply(aug, chain, graph, rng.gen()) else {
            continue;
        };
        let mut nodes = augmented.chain.walk.clone();
        nodes.extend(augmented.distractors.iter().flat_map(|d| [d.triple.subject, d.triple.object]));
        nodes.sort_unstable();
        nodes.dedup();
        let names = NameTable::assign(graph, &nodes, ctx.names, &mut rng)?;
        let named = |t: &Triple| -> Result<NamedTriple, GenerateError> {
            Ok(NamedTriple::new(names.name(t.subject)?, t.relation, names.name(t.object)?))
        };
        let sentences = augmented
            .sentences()
            .iter()
            .map(|(t, _)| named(t))
            .collect::<Result<Vec<_>, _>>()?;
        let story = verbalizer::verbalize_story(&sentences, ctx.templates, rng.gen())?;
        let gold = forward_triples(&augmented.chain, graph)
            .iter()
            .map(named)
            .collect::<Result<Vec<_>, _>>()?;
        let head = names.name(augmented.chain.head())?;
        let tail = names.name(augmented.chain.tail())?;
        return Ok(Example {
            id: format!("{}-{}-{}", spec.task, job.hop, job.local),
            task: spec.task,
            hop: job.hop,
            triples: augmented.core.iter().map(named).collect::<Result<_, _>>()?,
            distractors: augmented
                .distractors
                .iter()
                .map(|d| named(&d.triple))
                .collect::<Result<_, _>>()?,
            story,
            query: verbalizer::render_query(head, tail, spec.task),
            answer: corruption.label,
            gold_triples: gold,
            augmentation: augmented.augmentation,
            seed: SeedLineage {
                dataset: spec.seed,
                index: job.global as u64,
                salt,
            },
        });
    }
    Err(exhausted)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub id: String,
    pub answer: Relation,
    /// The oracle's answer, when it reached one.
    pub oracle: Option<Relation>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub examples: usize,
    pub mismatches: Vec<Mismatch>,
    pub hops: BTreeMap<usize, usize>,
    pub labels: BTreeMap<String, usize>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-derive every answer with the oracle from the story triples alone.
/// Kinship genders come from the name pool.
pub fn verify_dataset(examples: &[Example], names: &NamePool) -> VerifyReport {
    let mut report = VerifyReport {
        examples: examples.len(),
        ..VerifyReport::default()
    };
    for ex in examples {
        *report.hops.entry(ex.hop).or_default() += 1;
        *report.labels.entry(ex.answer.to_string()).or_default() += 1;
    }
    report.mismatches = examples
        .par_iter()
        .filter_map(|ex| check_example(ex, names).err())
        .collect();
    report
}

fn check_example(ex: &Example, names: &NamePool) -> Result<(), Mismatch> {
    let fail = |oracle: Option<Relation>, reason: String| Mismatch {
        id: ex.id.clone(),
        answer: ex.answer,
        oracle,
        reason,
    };
    if ex.answer.task() != ex.task {
        return Err(fail(None, "answer is not a label of the task".into()));
    }
    if ex.triples.len() != ex.hop || ex.gold_triples.len() != ex.hop {
        return Err(fail(None, format!("hop {} does not match the triple count", ex.hop)));
    }
    let Some((head, tail)) = verbalizer::parse_query(&ex.query, ex.task) else {
        return Err(fail(None, "query is not in the fixed form".into()));
    };
    let gender_of = |n: &str| names.gender_of(n);
    match oracle::answer_from_triples(ex.task, &ex.story_triples(), &head, &tail, &gender_of) {
        Ok(Some(r)) if r == ex.answer => Ok(()),
        Ok(Some(r)) => Err(fail(Some(r), "oracle derives a different label".into())),
        Ok(None) => Err(fail(None, "triples do not determine a label".into())),
        Err(e) => Err(fail(None, e.to_string())),
    }
}

/// One example per line, newline-terminated.
pub fn write_jsonl<W: Write>(examples: &[Example], mut out: W) -> io::Result<()> {
    for ex in examples {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_jsonl(examples: &[Example]) -> String {
    let mut buf = Vec::new();
    write_jsonl(examples, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Parse a JSONL dataset; blank lines are skipped.
pub fn read_jsonl<R: BufRead>(input: R, path: &str) -> Result<Vec<Example>, DataError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: path.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DataError::Parse {
            path: path.to_string(),
            message: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinship::KinRelation;
    use crate::relgraph::NodeId;
    use crate::spatial::SpatialRelation;

    #[test]
    fn one_hop_chain_keeps_its_triple() {
        let g = grow_graph(Task::Kinship, &GrowthConfig::new(Task::Kinship, 1, 3)).unwrap();
        let t = g
            .edges()
            .find(|t| t.relation == Relation::Kin(KinRelation::Father))
            .copied()
            .unwrap();
        let chain = ReasoningChain {
            walk: vec![t.subject, t.object],
            triples: vec![sampler::ChainTriple { triple: t, reversed: false }],
        };
        let c = corrupt(&chain, &g).unwrap();
        assert_eq!(c.input, vec![t]);
        assert_eq!(c.label, Relation::Kin(KinRelation::Father));
    }

    #[test]
    fn spatial_label_is_the_offset_sum() {
        let g = grow_graph(Task::Spatial, &GrowthConfig::new(Task::Spatial, 1, 0)).unwrap();
        let root = NodeId(0);
        let mut found = false;
        for m in g.nodes() {
            if g.edge_label(m, root) == Some(Relation::Spatial(SpatialRelation::Above)) {
                for h in g.nodes() {
                    if g.edge_label(h, m) == Some(Relation::Spatial(SpatialRelation::Right)) {
                        let chain = ReasoningChain {
                            walk: vec![h, m, root],
                            triples: vec![
                                sampler::ChainTriple {
                                    triple: Triple::new(h, Relation::Spatial(SpatialRelation::Right), m),
                                    reversed: false,
                                },
                                sampler::ChainTriple {
                                    triple: Triple::new(m, Relation::Spatial(SpatialRelation::Above), root),
                                    reversed: false,
                                },
                            ],
                        };
                        assert_eq!(
                            corrupt(&chain, &g).unwrap().label,
                            Relation::Spatial(SpatialRelation::UpperRight)
                        );
                        found = true;
                    }
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn empty_spec_gives_empty_dataset() {
        let spec = DatasetSpec::uniform(Task::Kinship, HOPS, 0, 1);
        assert!(build_dataset(&spec).unwrap().is_empty());
        assert_eq!(verify_dataset(&[], NamePool::bundled()), VerifyReport::default());
    }

    #[test]
    fn small_datasets_verify_and_repeat() {
        for task in [Task::Kinship, Task::Spatial] {
            let spec = DatasetSpec::uniform(task, HOPS, 6, 11);
            let a = build_dataset(&spec).unwrap();
            assert_eq!(a.len(), 54);
            let report = verify_dataset(&a, NamePool::bundled());
            assert!(report.is_clean(), "{:?}", report.mismatches);
            assert_eq!(to_jsonl(&a), to_jsonl(&build_dataset(&spec).unwrap()));
            for ex in &a {
                assert_eq!(ex.triples.len(), ex.hop);
                assert!(ex.id.starts_with(&format!("{task}-{}-", ex.hop)));
            }
        }
    }

    #[test]
    fn corrupted_answer_is_reported() {
        let spec = DatasetSpec::uniform(Task::Spatial, 3..=3, 4, 2);
        let mut data = build_dataset(&spec).unwrap();
        let wrong = if data[1].answer == Relation::Spatial(SpatialRelation::Left) {
            SpatialRelation::Right
        } else {
            SpatialRelation::Left
        };
        data[1].answer = Relation::Spatial(wrong);
        let report = verify_dataset(&data, NamePool::bundled());
        assert_eq!(report.mismatches.len(), 1);
        assert_eq!(report.mismatches[0].id, data[1].id);
    }

    #[test]
    fn jsonl_round_trips() {
        let spec = DatasetSpec::uniform(Task::Kinship, 2..=4, 3, 5);
        let data = build_dataset(&spec).unwrap();
        let text = to_jsonl(&data);
        assert!(text.ends_with('\n'));
        assert_eq!(read_jsonl(text.as_bytes(), "mem").unwrap(), data);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let keys: Vec<_> = first.as_object().unwrap().keys().cloned().collect();
        let mut want = vec![
            "id", "task", "hop", "triples", "distractors", "story", "query", "answer", "gold_triples", "augmentation", "seed",
        ];
        want.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, want);
    }
}
