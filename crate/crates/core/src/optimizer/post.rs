use rayon::prelude::*;

use crate::criterion::Criterion;
use crate::model::{CoclusterModel, Move};

use super::OptimizerConfig;

#[derive(Clone, Debug)]
pub struct PostResult {
    pub model: CoclusterModel,
    pub criterion: f64,
    pub trace: Vec<f64>,
    pub moves: Vec<Move>,
    pub sweeps: usize,
    /// False when the sweep budget ran out with an improving move left.
    pub converged: bool,
}

fn better(a: (f64, Move), b: (f64, Move)) -> (f64, Move) {
    match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
        std::cmp::Ordering::Greater => b,
        _ => a,
    }
}

/// Best-improvement descent: each sweep evaluates every candidate move and
/// applies the one with the lowest delta, ties going to the smallest move.
pub fn post_optimize(model: CoclusterModel, config: &OptimizerConfig) -> PostResult {
    let criterion = Criterion::for_model(&model, config.criterion);
    let mut model = model;
    let mut current = criterion.total(&model);
    let mut trace = Vec::new();
    let mut moves = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let candidates = model.candidate_moves();
        let eval = |mv: &Move| -> Option<(f64, Move)> {
            criterion.delta(&model, mv).ok().map(|d| (d, *mv))
        };
        let best = if config.parallel {
            candidates.par_iter().filter_map(eval).reduce_with(better)
        } else {
            candidates.iter().filter_map(eval).reduce(better)
        };
        let Some((delta, mv)) = best else {
            converged = true;
            break;
        };
        if delta >= -config.min_improvement {
            converged = true;
            break;
        }
        let next = model.with_move(&mv).expect("candidate moves are legal");
        let value = criterion.total(&next);
        if value >= current {
            converged = true;
            break;
        }
        model = next;
        current = value;
        trace.push(value);
        moves.push(mv);
    }
    if !converged {
        converged = !model.candidate_moves().iter().any(|mv| {
            criterion
                .delta(&model, mv)
                .is_ok_and(|d| d < -config.min_improvement)
        });
    }
    PostResult {
        model,
        criterion: current,
        trace,
        moves,
        sweeps,
        converged,
    }
}
