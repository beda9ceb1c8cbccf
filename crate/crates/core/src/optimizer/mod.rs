//! Two-stage search: equal-frequency initialization over a grid of partition
//! sizes with agglomerative co-clustering, then greedy post-optimization.

mod agglomerate;
mod post;
mod refine;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::{Criterion, CriterionOptions};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::CoclusterModel;
use crate::partition::PartitionSet;

pub use agglomerate::{agglomerative_cocluster, AgglomerationParams, AgglomerationStats};
pub use post::{post_optimize, PostResult};
pub use refine::refine_assignments;

/// Datasets with at least this many observations get the power-of-two grid.
pub const LARGE_DATASET: usize = 100_000;

/// Alternations of single-item refinement and agglomeration in stage 1.
const MAX_ROUNDS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Candidate partition sizes for the initial discretization.
    pub grid: Vec<usize>,
    /// Recorded with the result. The search itself is deterministic.
    pub seed: u64,
    pub max_sweeps: usize,
    /// Evaluate stage-2 moves, stage-1 neighbours and grid points on the
    /// rayon pool.
    pub parallel: bool,
    pub neighbors: usize,
    pub exhaustive_limit: usize,
    pub min_improvement: f64,
    pub criterion: CriterionOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid: (2..=10).collect(),
            seed: 0,
            max_sweeps: 1000,
            parallel: true,
            neighbors: 10,
            exhaustive_limit: 1000,
            min_improvement: 1e-9,
            criterion: CriterionOptions::default(),
        }
    }
}

impl OptimizerConfig {
    /// Defaults with the grid chosen from the dataset size.
    pub fn for_dataset(dataset: &Dataset) -> Self {
        let mut config = OptimizerConfig::default();
        if dataset.n_observations() >= LARGE_DATASET {
            config.grid = (1..=7).map(|e| 1usize << e).collect();
        }
        config
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::parameter("partition-size grid is empty"));
        }
        if self.grid.contains(&0) {
            return Err(Error::parameter("partition sizes must be at least 1"));
        }
        if self.neighbors == 0 {
            return Err(Error::parameter("neighbour count must be at least 1"));
        }
        if !(self.min_improvement.is_finite() && self.min_improvement >= 0.0) {
            return Err(Error::parameter("min_improvement must be finite and non-negative"));
        }
        Ok(())
    }

    fn agglomeration(&self) -> AgglomerationParams {
        AgglomerationParams {
            neighbors: self.neighbors,
            exhaustive_limit: self.exhaustive_limit,
            min_improvement: self.min_improvement,
            parallel: self.parallel,
        }
    }
}

/// Outcome of stage 1 for one partition size.
#[derive(Clone, Debug)]
pub struct Initialization {
    pub parts_per_variable: usize,
    pub model: CoclusterModel,
    pub criterion: f64,
    pub stats: AgglomerationStats,
    /// Single instance and part moves made between agglomeration rounds.
    pub refinement_moves: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub parts_per_variable: usize,
    pub criterion: f64,
    pub parts: usize,
    pub instance_clusters: usize,
    pub part_clusters: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stage1: Duration,
    pub stage2: Duration,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: CoclusterModel,
    pub criterion: f64,
    /// Criterion of the selected stage-1 model.
    pub initial_criterion: f64,
    /// Criterion after each accepted stage-2 move.
    pub trace: Vec<f64>,
    pub moves: Vec<crate::model::Move>,
    pub chosen_parts: usize,
    pub grid: Vec<GridPoint>,
    pub stage1_instance_merges: usize,
    pub stage1_part_merges: usize,
    /// Accepted stage-2 moves per kind, indexed by [`crate::model::Move::kind_index`].
    pub moves_by_kind: [usize; 5],
    pub sweeps: usize,
    pub converged: bool,
    pub seed: u64,
    pub timings: Timings,
}

/// Discretizes every variable into at most `parts` parts and co-clusters the
/// instance x part count matrix: agglomeration from singleton clusters, then
/// alternating single-item moves and further merges while they help.
pub fn stage1_initialize(dataset: &Dataset, parts: usize, config: &OptimizerConfig) -> Result<Initialization> {
    if parts == 0 {
        return Err(Error::parameter("partition size must be at least 1"));
    }
    if dataset.n_observations() == 0 {
        return Err(Error::EmptyDataset);
    }
    let partitions = PartitionSet::equal_frequency(dataset, parts)?;
    let start = CoclusterModel::singletons(dataset, partitions)?;
    let criterion = Criterion::for_model(&start, config.criterion);
    let params = config.agglomeration();
    let (mut model, mut stats) = agglomerative_cocluster(&start, &criterion, params);
    let mut value = criterion.total(&model);
    let mut refinement_moves = 0;
    for _ in 0..MAX_ROUNDS {
        let (refined, moved) = refine_assignments(dataset, &model, &criterion, config.min_improvement);
        if moved == 0 {
            break;
        }
        refinement_moves += moved;
        let (merged, more) = agglomerate_both_ways(&refined, &criterion, params);
        let next = criterion.total(&merged);
        model = merged;
        stats.instance_merges += more.instance_merges;
        stats.part_merges += more.part_merges;
        stats.explored += more.explored;
        stats.deltas.extend(more.deltas);
        if next >= value - config.min_improvement {
            value = next;
            break;
        }
        value = next;
    }
    stats.improvement = criterion.total(&start) - value;
    Ok(Initialization {
        parts_per_variable: parts,
        model,
        criterion: value,
        stats,
        refinement_moves,
    })
}

/// Agglomerates `model` as is and again with its part clusters reset to
/// singletons, keeping the better result (the former on ties).
fn agglomerate_both_ways(
    model: &CoclusterModel,
    criterion: &Criterion,
    params: AgglomerationParams,
) -> (CoclusterModel, AgglomerationStats) {
    let kept = agglomerative_cocluster(model, criterion, params);
    let singles: Vec<usize> = (0..model.n_parts()).collect();
    let reset = model
        .with_part_assignment(singles)
        .map(|m| agglomerative_cocluster(&m, criterion, params));
    match reset {
        Ok(r) if criterion.total(&r.0) < criterion.total(&kept.0) => r,
        _ => kept,
    }
}

/// Runs stage 1 for every distinct grid size and keeps the lowest criterion,
/// preferring the smaller size on ties. Returns all grid points too.
pub fn grid_search(dataset: &Dataset, config: &OptimizerConfig) -> Result<(Initialization, Vec<GridPoint>)> {
    config.validate()?;
    let mut sizes = config.grid.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let runs: Vec<Result<Initialization>> = if config.parallel {
        sizes
            .par_iter()
            .map(|&p| stage1_initialize(dataset, p, config))
            .collect()
    } else {
        sizes.iter().map(|&p| stage1_initialize(dataset, p, config)).collect()
    };
    let runs: Vec<Initialization> = runs.into_iter().collect::<Result<_>>()?;
    let points = runs
        .iter()
        .map(|r| GridPoint {
            parts_per_variable: r.parts_per_variable,
            criterion: r.criterion,
            parts: r.model.n_parts(),
            instance_clusters: r.model.n_instance_clusters(),
            part_clusters: r.model.n_part_clusters(),
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.criterion < best.criterion { r } else { best })
        .expect("grid is non-empty");
    Ok((best, points))
}

/// Full pipeline: grid search, then post-optimization of the best start.
pub fn fit(dataset: &Dataset, config: &OptimizerConfig) -> Result<FitResult> {
    config.validate()?;
    let t0 = Instant::now();
    let (init, grid) = grid_search(dataset, config)?;
    let stage1 = t0.elapsed();
    let t1 = Instant::now();
    let post = post_optimize(init.model, config);
    let stage2 = t1.elapsed();
    let mut moves_by_kind = [0usize; 5];
    for mv in &post.moves {
        moves_by_kind[mv.kind_index()] += 1;
    }
    Ok(FitResult {
        model: post.model,
        criterion: post.criterion,
        initial_criterion: init.criterion,
        trace: post.trace,
        moves: post.moves,
        chosen_parts: init.parts_per_variable,
        grid,
        stage1_instance_merges: init.stats.instance_merges,
        stage1_part_merges: init.stats.part_merges,
        moves_by_kind,
        sweeps: post.sweeps,
        converged: post.converged,
        seed: config.seed,
        timings: Timings { stage1, stage2 },
    })
}
