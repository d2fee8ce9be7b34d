//! Problem assembly from a run configuration: synthetic generation or
//! dataset files, centralized or batched.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use pdfp::linalg::{DenseMatrix, RowMatrix};
use pdfp::minibatch::BatchedProblem;
use pdfp::problems::{
    build_batched_lasso, build_batched_logistic, build_lasso, build_logistic, generate_synthetic,
    partition_dataset, Dataset, PartitionStrategy, SyntheticKind, SyntheticProblem, SyntheticSpec,
};
use pdfp::CompositeProblem;

use crate::config::{PartitionKind, ProblemKind, RunConfig};

/// The raw data a run operates on.
pub enum SourceData {
    Lasso { a: DenseMatrix, b: Vec<f64> },
    Logistic { data: Arc<Dataset> },
}

impl SourceData {
    pub fn sample_count(&self) -> usize {
        match self {
            SourceData::Lasso { a, .. } => a.rows(),
            SourceData::Logistic { data } => data.sample_count(),
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            SourceData::Lasso { a, .. } => a.cols(),
            SourceData::Logistic { data } => data.feature_count(),
        }
    }
}

fn densify(features: &RowMatrix) -> DenseMatrix {
    match features {
        RowMatrix::Dense(m) => m.clone(),
        RowMatrix::Sparse { .. } => {
            let mut data = Vec::with_capacity(features.rows() * features.cols());
            for i in 0..features.rows() {
                data.extend(features.dense_row(i));
            }
            DenseMatrix::from_vec(features.rows(), features.cols(), data)
                .expect("densify preserves the shape")
        }
    }
}

pub fn problem_kind(cfg: &RunConfig) -> Result<ProblemKind> {
    match (cfg.gen, cfg.problem) {
        (Some(k), _) => Ok(k),
        (None, Some(k)) => Ok(k),
        (None, None) => bail!("--problem <lasso|logistic> is required with --data"),
    }
}

/// Build the synthetic spec a config describes (used by both `solve --gen`
/// and the `gen` subcommand so the bytes agree).
pub fn synthetic_spec(cfg: &RunConfig, kind: ProblemKind) -> Result<SyntheticSpec> {
    let (m, kind_sy) = match kind {
        // LASSO rows are conventionally `p`, logistic samples `m`
        ProblemKind::Lasso => (cfg.p.or(cfg.m), SyntheticKind::Lasso),
        ProblemKind::Logistic => (cfg.m.or(cfg.p), SyntheticKind::Logistic),
    };
    let m = m.context("sample count is required (--p for lasso, --m for logistic)")?;
    let q = cfg.q.context("--q (feature count) is required")?;
    Ok(SyntheticSpec {
        kind: kind_sy,
        seed: cfg.seed.unwrap_or(0),
        m,
        q,
        sparsity: cfg.sparsity.unwrap_or(0.2),
        noise: cfg.noise.unwrap_or(0.1),
    })
}

pub fn load_source(cfg: &RunConfig) -> Result<SourceData> {
    let kind = problem_kind(cfg)?;
    if let Some(path) = &cfg.data {
        return load_source_file(path, kind);
    }
    let spec = synthetic_spec(cfg, kind)?;
    let (problem, _truth) = generate_synthetic(&spec)?;
    Ok(match problem {
        SyntheticProblem::Lasso { a, b } => SourceData::Lasso { a, b },
        SyntheticProblem::Logistic { data } => SourceData::Logistic {
            data: Arc::new(data),
        },
    })
}

pub fn load_source_file(path: &Path, kind: ProblemKind) -> Result<SourceData> {
    let mut dataset = pdfp::io::load_libsvm(path)?;
    Ok(match kind {
        ProblemKind::Lasso => SourceData::Lasso {
            a: densify(&dataset.features),
            b: dataset.labels.clone(),
        },
        ProblemKind::Logistic => {
            if dataset.normalize_binary_labels()? {
                eprintln!("warning: {{0,1}} labels remapped to {{-1,+1}}");
            }
            SourceData::Logistic {
                data: Arc::new(dataset),
            }
        }
    })
}

pub fn centralized_problem(source: &SourceData, tau: f64) -> Result<CompositeProblem> {
    Ok(match source {
        SourceData::Lasso { a, b } => build_lasso(a.clone(), b.clone(), tau)?,
        SourceData::Logistic { data } => build_logistic(data.clone(), tau)?,
    })
}

pub fn batched_problem(
    source: &SourceData,
    tau: f64,
    batches: usize,
    partition_kind: PartitionKind,
    seed: u64,
) -> Result<BatchedProblem> {
    let strategy = match partition_kind {
        PartitionKind::Contiguous => PartitionStrategy::Contiguous,
        PartitionKind::Strided => PartitionStrategy::Strided,
        PartitionKind::Random => PartitionStrategy::SeededRandom(seed),
    };
    let partition = partition_dataset(source.sample_count(), batches, strategy)?;
    Ok(match source {
        SourceData::Lasso { a, b } => build_batched_lasso(a, b, &partition, tau)?,
        SourceData::Logistic { data } => build_batched_logistic(data.clone(), &partition, tau)?,
    })
}

/// The smooth part of the centralized objective, for the oracle path.
pub fn oracle_smooth(source: &SourceData) -> Result<Arc<dyn pdfp::SmoothFn>> {
    Ok(match source {
        SourceData::Lasso { a, b } => Arc::new(pdfp::problems::QuadraticLoss::new(
            a.clone(),
            b.clone(),
        )?),
        SourceData::Logistic { data } => {
            Arc::new(pdfp::problems::LogisticLoss::full(data.clone())?)
        }
    })
}
