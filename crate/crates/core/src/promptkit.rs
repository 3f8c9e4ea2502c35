//! Standard (STD-P) and extract-then-answer (ETA-P) prompts, their gold
//! targets, few-shot assembly and response parsing.
//!
//! A prompt asset is an instruction followed by one example block:
//!
//! ```text
//! <instruction>
//!
//! ### Story:
//! [STORY]
//! ### Query:
//! [QUERY]
//!
//! ### Output:
//! <output template using [ANSWER] and, for ETA-P, [TRIPLES]>
//! ```
//!
//! Few-shot prompts repeat the block once per shot with the output filled in,
//! then close with the query block cut after `### Output:`.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::data::{self, DataSource};
use crate::error::{DataError, PromptError};
use crate::relgraph::{NamedTriple, Relation, Task};
use crate::seed;
use crate::taskgen::Example;
use crate::verbalizer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptStyle {
    #[serde(rename = "std-p")]
    Standard,
    #[serde(rename = "eta-p")]
    ExtractThenAnswer,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 2] = [PromptStyle::Standard, PromptStyle::ExtractThenAnswer];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptStyle::Standard => "std-p",
            PromptStyle::ExtractThenAnswer => "eta-p",
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "std-p" | "std" | "standard" => Ok(PromptStyle::Standard),
            "eta-p" | "eta" => Ok(PromptStyle::ExtractThenAnswer),
            _ => Err(format!("unknown prompt style `{s}` (expected std-p or eta-p)")),
        }
    }
}

const STORY: &str = "[STORY]";
const QUERY: &str = "[QUERY]";
const TRIPLES: &str = "[TRIPLES]";
const ANSWER: &str = "[ANSWER]";
const OUTPUT_HEADER: &str = "### Output:\n";

/// One parsed prompt asset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptAsset {
    instruction: String,
    /// Block text up to and including the output header.
    block_head: String,
    output: String,
}

impl PromptAsset {
    pub fn parse(text: &str, style: PromptStyle) -> Result<Self, PromptError> {
        let text = text.replace("\r\n", "\n");
        let start = text.find("### Story:").ok_or_else(|| PromptError::BadAsset("### Story:".into()))?;
        let (instruction, block) = text.split_at(start);
        let cut = block
            .find(OUTPUT_HEADER)
            .ok_or_else(|| PromptError::BadAsset("### Output:".into()))?
            + OUTPUT_HEADER.len();
        let (block_head, output) = block.split_at(cut);
        let mut required = vec![(STORY, block_head), (QUERY, block_head), (ANSWER, output)];
        if style == PromptStyle::ExtractThenAnswer {
            required.push((TRIPLES, output));
        }
        for (placeholder, part) in required {
            if !part.contains(placeholder) {
                return Err(PromptError::BadAsset(placeholder.into()));
            }
        }
        Ok(PromptAsset {
            instruction: instruction.trim_end().to_string(),
            block_head: block_head.to_string(),
            output: output.trim_end().to_string(),
        })
    }

    pub fn instruction(&self) -> &str {
        &self.instruction
    }

    fn block(&self, story: &str, query: &str) -> String {
        self.block_head.replace(STORY, story).replace(QUERY, query)
    }

    fn output(&self, triples: &str, answer: &str) -> String {
        self.output.replace(TRIPLES, triples).replace(ANSWER, answer)
    }
}

/// The four prompt assets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptSet {
    assets: [[PromptAsset; 2]; 2],
}

impl PromptSet {
    pub fn load(source: &DataSource) -> Result<Self, DataError> {
        let read = |task: Task, style: PromptStyle| -> Result<PromptAsset, DataError> {
            let path = data::prompt_path(task.as_str(), style.as_str());
            PromptAsset::parse(&source.read(&path)?, style).map_err(|e| DataError::Parse {
                path,
                message: e.to_string(),
            })
        };
        Ok(PromptSet {
            assets: [
                [read(Task::Kinship, PromptStyle::Standard)?, read(Task::Kinship, PromptStyle::ExtractThenAnswer)?],
                [read(Task::Spatial, PromptStyle::Standard)?, read(Task::Spatial, PromptStyle::ExtractThenAnswer)?],
            ],
        })
    }

    pub fn bundled() -> &'static PromptSet {
        static SET: LazyLock<PromptSet> =
            LazyLock::new(|| PromptSet::load(&DataSource::bundled()).expect("bundled prompts parse"));
        &SET
    }

    pub fn asset(&self, task: Task, style: PromptStyle) -> &PromptAsset {
        let t = match task {
            Task::Kinship => 0,
            Task::Spatial => 1,
        };
        let s = match style {
            PromptStyle::Standard => 0,
            PromptStyle::ExtractThenAnswer => 1,
        };
        &self.assets[t][s]
    }

    /// Gold completion for an example.
    pub fn render_target(&self, example: &Example, style: PromptStyle) -> String {
        let answer = verbalizer::render_answer(example.head(), example.tail(), example.answer);
        let triples = example
            .gold_triples
            .iter()
            .map(|t| verbalizer::fact_sentence(t.subject(), t.relation(), t.object()))
            .collect::<Vec<_>>()
            .join(". ");
        self.asset(example.task, style).output(&triples, &answer)
    }

    /// Instruction, completed shot blocks, then the open query block.
    pub fn render_prompt(&self, example: &Example, style: PromptStyle, shots: &[&Example]) -> Result<String, PromptError> {
        let asset = self.asset(example.task, style);
        let mut out = asset.instruction.clone();
        for shot in shots {
            if shot.id == example.id {
                return Err(PromptError::ShotOverlap(shot.id.clone()));
            }
            out.push_str("\n\n");
            out.push_str(&asset.block(&shot.story, &shot.query));
            out.push_str(&self.render_target(shot, style));
        }
        out.push_str("\n\n");
        out.push_str(&asset.block(&example.story, &example.query));
        Ok(out)
    }
}

pub fn render_target(example: &Example, style: PromptStyle) -> String {
    PromptSet::bundled().render_target(example, style)
}

pub fn render_prompt(example: &Example, style: PromptStyle, shots: &[&Example]) -> Result<String, PromptError> {
    PromptSet::bundled().render_prompt(example, style, shots)
}

/// Few-shot settings; five shots is the conventional default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FewShotConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for FewShotConfig {
    fn default() -> Self {
        FewShotConfig { k: 5, seed: 0 }
    }
}

/// Draw `k` shots of the query's task from `pool`, never the query itself.
/// The draw depends only on the seed and the query id.
pub fn select_shots<'a>(pool: &'a [Example], query: &Example, config: &FewShotConfig) -> Result<Vec<&'a Example>, PromptError> {
    if config.k == 0 {
        return Ok(Vec::new());
    }
    let usable: Vec<&Example> = pool.iter().filter(|e| e.task == query.task && e.id != query.id).collect();
    if usable.len() < config.k {
        return Err(PromptError::NotEnoughShots {
            needed: config.k,
            available: usable.len(),
        });
    }
    let mut rng = seed::rng(seed::derive_seed(config.seed, &[seed::tag(&query.id)]));
    Ok(usable.choose_multiple(&mut rng, config.k).copied().collect())
}

/// One rendered prompt/target pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub prompt: String,
    pub target: String,
}

/// What a response says.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedResponse {
    pub relation: Relation,
    /// ETA-P only: the extracted triples, when a list is present.
    pub triples: Option<Vec<NamedTriple>>,
}

static ANSWER_MARK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)therefore\s*,").unwrap());
static TRIPLES_MARK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)structured triples( are)?\s*:").unwrap());
static LIST_MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(?:[-*\u{2022}]|\d+[.)])\s*").unwrap());

fn label_pattern(task: Task) -> &'static Regex {
    static PATTERNS: LazyLock<[Regex; 2]> = LazyLock::new(|| {
        [Task::Kinship, Task::Spatial].map(|task| {
            let mut labels: Vec<String> = task.vocabulary().iter().map(|r| regex::escape(r.as_str())).collect();
            // Longest first, so `lower-left` wins over `left`.
            labels.sort_by_key(|l| std::cmp::Reverse(l.len()));
            Regex::new(&format!(r"(?i)\b(?:{})\b", labels.join("|"))).unwrap()
        })
    });
    &PATTERNS[match task {
        Task::Kinship => 0,
        Task::Spatial => 1,
    }]
}

/// Last vocabulary label mentioned in `text`.
fn last_label(text: &str, task: Task) -> Option<Relation> {
    label_pattern(task)
        .find_iter(text)
        .last()
        .and_then(|m| task.parse_relation(&m.as_str().to_ascii_lowercase()).ok())
}

/// Read the predicted relation off a response: the text after the last
/// "Therefore," when present, else the last sentence.
pub fn parse_response(text: &str, style: PromptStyle, task: Task) -> Result<ParsedResponse, PromptError> {
    let marker = ANSWER_MARK.find_iter(text).last();
    let segment = match marker {
        Some(m) => &text[m.end()..],
        None => last_sentence(text),
    };
    let relation = last_label(segment, task).ok_or(PromptError::Unparseable)?;
    let triples = match style {
        PromptStyle::Standard => None,
        PromptStyle::ExtractThenAnswer => {
            let end = marker.map_or(text.len(), |m| m.start());
            TRIPLES_MARK
                .find(&text[..end])
                .map(|m| extract_triples(&text[m.end()..end], task))
        }
    };
    Ok(ParsedResponse { relation, triples })
}

fn last_sentence(text: &str) -> &str {
    let trimmed = text.trim_end().trim_end_matches(['.', '!', '?']);
    let start = trimmed.rfind(['.', '!', '?', '\n']).map_or(0, |i| i + 1);
    &trimmed[start..]
}

/// Facts in the fixed answer form, one per sentence or list line.
fn extract_triples(block: &str, task: Task) -> Vec<NamedTriple> {
    block
        .split(['\n', '.'])
        .map(|s| LIST_MARKER.replace(s, ""))
        .filter_map(|s| verbalizer::parse_fact(&s, task))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgen::{build_dataset, DatasetSpec};

    fn parse(text: &str, task: Task) -> Option<Relation> {
        parse_response(text, PromptStyle::ExtractThenAnswer, task).ok().map(|p| p.relation)
    }

    #[test]
    fn reference_responses_parse() {
        let case1 = "The ordered structured triples are:\nBrittney is the sister of Elizabeth.\n\nTherefore,\nBrittney is the niece of Morgan";
        assert_eq!(parse(case1, Task::Kinship), Some("niece".parse().unwrap()));
        let case2 = "Evelyn is the grandmother of Nichole";
        assert_eq!(
            parse_response(case2, PromptStyle::Standard, Task::Kinship).unwrap().relation,
            Task::Kinship.parse_relation("grandmother").unwrap()
        );
        assert_eq!(parse("Therefore,\nM is directly to the left of O.", Task::Spatial), Some(Task::Spatial.parse_relation("left").unwrap()));
        assert_eq!(parse("Therefore, M is to the lower-left of O.", Task::Spatial), Some(Task::Spatial.parse_relation("lower-left").unwrap()));
        assert_eq!(parse("Therefore, S is to the upper-left of T.", Task::Spatial), Some(Task::Spatial.parse_relation("upper-left").unwrap()));
        assert_eq!(parse_response("I don't know", PromptStyle::Standard, Task::Kinship), Err(PromptError::Unparseable));
    }

    #[test]
    fn diagonals_never_parse_as_axes() {
        for r in Task::Spatial.vocabulary() {
            let text = format!("It is {r}.");
            assert_eq!(parse(&text, Task::Spatial), Some(r));
        }
    }

    #[test]
    fn numbered_lists_are_extracted() {
        let text = "The ordered structured triples are:\n1. T is directly below L.\n2. D is to the upper-right of L.\n\nTherefore, S is to the upper-left of T.";
        let p = parse_response(text, PromptStyle::ExtractThenAnswer, Task::Spatial).unwrap();
        assert_eq!(p.triples.unwrap().len(), 2);
    }

    #[test]
    fn targets_round_trip() {
        let data = build_dataset(&DatasetSpec::uniform(Task::Kinship, 2..=5, 5, 3)).unwrap();
        for ex in &data {
            for style in PromptStyle::ALL {
                let p = parse_response(&render_target(ex, style), style, ex.task).unwrap();
                assert_eq!(p.relation, ex.answer);
                if style == PromptStyle::ExtractThenAnswer {
                    assert_eq!(p.triples.as_deref(), Some(ex.gold_triples.as_slice()));
                }
            }
        }
    }

    #[test]
    fn prompts_hold_instruction_and_shots() {
        let data = build_dataset(&DatasetSpec::uniform(Task::Spatial, 2..=3, 4, 1)).unwrap();
        let q = &data[0];
        let p0 = render_prompt(q, PromptStyle::ExtractThenAnswer, &[]).unwrap();
        assert!(p0.contains("First break down the narrative into ordered structured triples"));
        assert!(p0.ends_with("### Output:\n"));
        let shots = select_shots(&data, q, &FewShotConfig { k: 5, seed: 9 }).unwrap();
        assert!(shots.iter().all(|s| s.id != q.id));
        let p5 = render_prompt(q, PromptStyle::Standard, &shots).unwrap();
        assert_eq!(p5.matches("### Story:").count(), 6);
        assert_eq!(p5.matches("### Output:").count(), 6);
        assert!(matches!(render_prompt(q, PromptStyle::Standard, &[q]), Err(PromptError::ShotOverlap(_))));
    }

    #[test]
    fn assets_need_placeholders() {
        assert_eq!(
            PromptAsset::parse("x\n### Story:\n[STORY]\n### Query:\n[QUERY]\n### Output:\n[ANSWER]", PromptStyle::ExtractThenAnswer),
            Err(PromptError::BadAsset(TRIPLES.into()))
        );
    }
}
