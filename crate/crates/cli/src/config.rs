//! Run configuration: preset file, then config file, then command-line flags,
//! later sources overriding earlier ones.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use reasonforge_core::data::{self, DataSource};
use reasonforge_core::{AugmentMix, PromptStyle, Task};

/// Every key is optional so partial files can be layered.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub hops: Option<String>,
    pub count: Option<usize>,
    pub counts: Option<BTreeMap<String, usize>>,
    pub aug: Option<String>,
    pub graph_iters: Option<usize>,
    pub graphs_per_hop: Option<usize>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub style: Option<String>,
    pub k: Option<usize>,
}

macro_rules! layer {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $(if $top.$field.is_some() { $base.$field = $top.$field; })*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        RunConfig::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `top` replace ours. Explicit counts clear a lower
    /// layer's hop range and the other way round.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        if top.counts.is_some() {
            self.hops = None;
            self.count = None;
        }
        if top.hops.is_some() || top.count.is_some() {
            self.counts = None;
        }
        layer!(self, top, task, preset, seed, hops, count, counts, aug, graph_iters, graphs_per_hop, workers, output, style, k);
        self
    }

    /// Resolve a named preset into a config layer for `task`.
    pub fn preset(name: &str, task: Task, source: &DataSource) -> Result<Self> {
        if name != "paper" {
            bail!("unknown preset `{name}` (available: paper)");
        }
        let text = source.read(&data::preset_path(task.as_str()))?;
        let preset = RunConfig::from_toml(&text).context("parsing preset")?;
        if preset.task.is_some_and(|t| t != task) {
            bail!("preset file for {task} names another task");
        }
        Ok(preset)
    }

    pub fn task(&self) -> Result<Task> {
        self.task.context("no task given (use --task clutrr|stepgame)")
    }

    pub fn style(&self) -> Result<PromptStyle> {
        match &self.style {
            Some(s) => s.parse().map_err(anyhow::Error::msg),
            None => Ok(PromptStyle::ExtractThenAnswer),
        }
    }

    pub fn augmentation(&self) -> Result<AugmentMix> {
        match &self.aug {
            Some(s) => Ok(s.parse()?),
            None => Ok(AugmentMix::default()),
        }
    }

    /// Per-hop counts from `counts`, or from `hops` with one shared `count`.
    pub fn hop_counts(&self) -> Result<BTreeMap<usize, usize>> {
        if let Some(counts) = &self.counts {
            return counts
                .iter()
                .map(|(h, &n)| Ok((h.trim().parse::<usize>().with_context(|| format!("bad hop `{h}`"))?, n)))
                .collect();
        }
        match (&self.hops, self.count) {
            (Some(hops), Some(n)) => Ok(parse_hops(hops)?.into_iter().map(|h| (h, n)).collect()),
            (None, Some(n)) => Ok((2..=10).map(|h| (h, n)).collect()),
            (Some(_), None) => bail!("--hops needs --count"),
            (None, None) => bail!("no example counts given (use --preset paper, --counts or --count)"),
        }
    }
}

/// `2:10`, `2,4,6` or a single hop.
pub fn parse_hops(text: &str) -> Result<Vec<usize>> {
    let hop = |s: &str| s.trim().parse::<usize>().with_context(|| format!("bad hop `{s}`"));
    let mut out = Vec::new();
    for part in text.split(',') {
        match part.split_once(':') {
            Some((a, b)) => {
                let (a, b) = (hop(a)?, hop(b)?);
                if a > b {
                    bail!("empty hop range `{part}`");
                }
                out.extend(a..=b);
            }
            None => out.push(hop(part)?),
        }
    }
    if out.contains(&0) {
        bail!("hops start at 1");
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `2=100,3=50`.
pub fn parse_counts(text: &str) -> Result<BTreeMap<String, usize>> {
    text.split(',')
        .map(|item| {
            let (h, n) = item.split_once('=').with_context(|| format!("expected HOP=COUNT, got `{item}`"))?;
            Ok((h.trim().to_string(), n.trim().parse().with_context(|| format!("bad count `{n}`"))?))
        })
        .collect()
}
