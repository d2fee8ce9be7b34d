//! Run configuration: CLI flags layered over an optional JSON config file
//! (flags win). The merged struct drives every solve path.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pdfp2o,
    Spdfp2o,
    Minibatch,
    Smspdfp2o,
    DistSync,
    DistAsync,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pdfp2o => "pdfp2o",
            Algorithm::Spdfp2o => "spdfp2o",
            Algorithm::Minibatch => "minibatch",
            Algorithm::Smspdfp2o => "smspdfp2o",
            Algorithm::DistSync => "dist-sync",
            Algorithm::DistAsync => "dist-async",
        }
    }

    pub fn needs_batches(self) -> bool {
        matches!(self, Algorithm::Minibatch | Algorithm::Smspdfp2o)
    }

    pub fn needs_graph(self) -> bool {
        matches!(self, Algorithm::DistSync | Algorithm::DistAsync)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Lasso,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Ring,
    Star,
    Complete,
    Er,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Contiguous,
    Strided,
    Random,
}

/// Step size: a number or "auto".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Auto(AutoTag),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl StepSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(StepSpec::Auto(AutoTag::Auto));
        }
        let v: f64 = s
            .parse()
            .with_context(|| format!("step size must be a number or `auto`, got `{s}`"))?;
        Ok(StepSpec::Value(v))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            StepSpec::Auto(_) => None,
            StepSpec::Value(v) => Some(v),
        }
    }
}

/// Activation/batch sampler spec: `uniform`, `full`, `independent:<p>`, or
/// `weighted:<w1,w2,...>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "arg")]
pub enum SamplerSpec {
    Uniform,
    Full,
    Independent(f64),
    Weighted(Vec<f64>),
}

impl SamplerSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(SamplerSpec::Uniform);
        }
        if s.eq_ignore_ascii_case("full") {
            return Ok(SamplerSpec::Full);
        }
        if let Some(p) = s.strip_prefix("independent:") {
            let p: f64 = p
                .parse()
                .with_context(|| format!("invalid inclusion probability `{p}`"))?;
            return Ok(SamplerSpec::Independent(p));
        }
        if let Some(ws) = s.strip_prefix("weighted:") {
            let weights = ws
                .split(',')
                .map(|w| {
                    w.parse::<f64>()
                        .with_context(|| format!("invalid weight `{w}`"))
                })
                .collect::<Result<Vec<f64>>>()?;
            return Ok(SamplerSpec::Weighted(weights));
        }
        bail!("unknown sampler `{s}` (expected uniform, full, independent:<p>, weighted:<w,...>)")
    }

    pub fn to_kind(&self, blocks: usize) -> pdfp::SamplerKind {
        match self {
            SamplerSpec::Uniform => pdfp::SamplerKind::SingleUniform,
            SamplerSpec::Full => pdfp::SamplerKind::AlwaysFull,
            SamplerSpec::Independent(p) => pdfp::SamplerKind::IndependentInclusion(*p),
            SamplerSpec::Weighted(w) => {
                let _ = blocks;
                pdfp::SamplerKind::SingleWeighted(w.clone())
            }
        }
    }
}

/// Everything a solve run needs. All fields optional so a JSON file and the
/// flag layer can each fill any subset; `finalize` applies defaults and
/// checks algorithm-specific requirements.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub algo: Option<Algorithm>,
    pub problem: Option<ProblemKind>,
    pub data: Option<PathBuf>,
    pub gen: Option<ProblemKind>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub q: Option<usize>,
    pub sparsity: Option<f64>,
    pub noise: Option<f64>,
    pub tau: Option<f64>,
    pub gamma: Option<StepSpec>,
    pub lambda: Option<StepSpec>,
    pub batches: Option<usize>,
    pub partition: Option<PartitionKind>,
    pub graph: Option<PathBuf>,
    pub graph_kind: Option<GraphKind>,
    pub nodes: Option<usize>,
    pub p_edge: Option<f64>,
    pub graph_seed: Option<u64>,
    pub sampler: Option<SamplerSpec>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub trace: Option<PathBuf>,
    pub log_every: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Overlay `flags` on top of `self`: any field present in `flags` wins.
    pub fn merged_with(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if flags.$field.is_some() { self.$field = flags.$field; })*
            };
        }
        take!(
            algo, problem, data, gen, p, m, q, sparsity, noise, tau, gamma, lambda, batches,
            partition, graph, graph_kind, nodes, p_edge, graph_seed, sampler, seed, tol,
            max_iters, trace, log_every
        );
        self
    }

    /// Fill defaults and check per-algorithm required fields.
    pub fn finalize(mut self) -> Result<Self> {
        let algo = match self.algo {
            Some(a) => a,
            None => bail!("missing required field `algo`"),
        };
        if self.data.is_none() && self.gen.is_none() {
            bail!("a problem source is required: --data <file> or --gen <lasso|logistic>");
        }
        if self.data.is_some() && self.gen.is_some() {
            bail!("--data and --gen are mutually exclusive");
        }
        if algo.needs_batches() && self.batches.is_none() {
            bail!("--batches is required for {:?}", algo);
        }
        if algo.needs_graph() && self.graph.is_none() && self.graph_kind.is_none() {
            bail!("--graph <file> or --graph-kind is required for {:?}", algo);
        }
        if self.seed.is_none() {
            self.seed = std::env::var("PDFP_SEED")
                .ok()
                .map(|s| s.parse::<u64>())
                .transpose()
                .context("PDFP_SEED must be an unsigned integer")?;
        }
        self.seed.get_or_insert(0);
        self.tau.get_or_insert(1.0);
        self.sparsity.get_or_insert(0.2);
        self.noise.get_or_insert(0.1);
        self.tol.get_or_insert(1e-8);
        self.max_iters.get_or_insert(100_000);
        self.log_every.get_or_insert(1);
        self.partition.get_or_insert(PartitionKind::Contiguous);
        self.sampler.get_or_insert(SamplerSpec::Uniform);
        self.gamma.get_or_insert(StepSpec::Auto(AutoTag::Auto));
        self.lambda.get_or_insert(StepSpec::Auto(AutoTag::Auto));
        Ok(self)
    }
}
