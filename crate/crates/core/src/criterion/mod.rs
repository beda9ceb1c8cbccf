//! Exact evaluation of the MAP co-clustering criterion and of move deltas.
//!
//! The criterion is a negative log posterior in nats. It splits into a prior
//! block (choice of partition sizes, groupings, cluster counts, cluster
//! partitions and the multinomial parameters) and a likelihood block
//! (multinomial draws of the observations over cells, instances, parts and
//! categorical values).

mod combinatorics;

pub use combinatorics::{
    log_binomial, log_factorial, log_stirling2_cumulative, log_stirling2_cumulative_with,
    CombinatoricsCache, StirlingPolicy,
};

use serde::{Deserialize, Serialize};

use crate::dataset::VariableKind;
use crate::error::Result;
use crate::model::{ClusterStat, CoclusterModel, Move, MoveEffect, PartStat};

pub const TERM_LABELS: [&str; 12] = [
    "prior.partition-sizes",
    "prior.value-groupings",
    "prior.cluster-counts",
    "prior.cluster-partitions",
    "prior.cell-distribution",
    "prior.instance-distribution",
    "prior.part-distribution",
    "prior.value-distribution",
    "likelihood.cells",
    "likelihood.instances",
    "likelihood.parts",
    "likelihood.values",
];

const N_PRIOR_TERMS: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionOptions {
    /// Adds `-sum ln n_.kj!` over numeric parts to the likelihood. The printed
    /// formula has no such term; this switch exists for comparison only.
    #[serde(default)]
    pub numeric_part_factorials: bool,
    #[serde(default)]
    pub stirling: StirlingPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    pub total: f64,
    pub prior: f64,
    pub likelihood: f64,
    pub terms: Vec<Term>,
}

impl CriterionValue {
    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

fn sorted_pairs(a: &[u64], b: &[u64]) -> Vec<(u64, u64)> {
    let mut v: Vec<(u64, u64)> = a.iter().copied().zip(b.iter().copied()).collect();
    v.sort_unstable();
    v
}

/// Size parameters that enter the structural prior terms.
#[derive(Clone, Debug, PartialEq)]
struct Shape {
    g_u: u64,
    g_p: u64,
    parts: u64,
}

/// Criterion evaluator owning the combinatorics cache.
#[derive(Clone, Debug)]
pub struct Criterion {
    cache: CombinatoricsCache,
    options: CriterionOptions,
}

impl Criterion {
    /// Evaluator whose factorial table covers any model reachable from `model`
    /// by merges and moves.
    pub fn for_model(model: &CoclusterModel, options: CriterionOptions) -> Self {
        let n = model.n_observations();
        let g = (model.n_instance_clusters() * model.n_part_clusters()) as u64;
        let span = n + g + model.n_instances() as u64 + model.n_parts() as u64 + 2;
        Criterion::with_capacity(span, options)
    }

    pub fn with_capacity(max_n: u64, options: CriterionOptions) -> Self {
        Criterion {
            cache: CombinatoricsCache::new(max_n, options.stirling),
            options,
        }
    }

    pub fn options(&self) -> CriterionOptions {
        self.options
    }

    pub fn cache(&self) -> &CombinatoricsCache {
        &self.cache
    }

    #[inline]
    pub(crate) fn lf(&self, n: u64) -> f64 {
        self.cache.log_factorial(n)
    }

    /// `ln C(N + m - 1, m - 1)` plus `ln N!` for a cluster.
    #[inline]
    pub(crate) fn cluster_term(&self, s: ClusterStat) -> f64 {
        self.cache
            .log_binomial(s.observations + s.members - 1, s.members - 1)
            + self.lf(s.observations)
    }

    #[inline]
    fn part_term(&self, s: PartStat) -> f64 {
        if s.categorical {
            self.cache.log_binomial(s.observations + s.values - 1, s.values - 1)
        } else if self.options.numeric_part_factorials {
            -self.lf(s.observations)
        } else {
            0.0
        }
    }

    fn structure(&self, model: &CoclusterModel, shape: &Shape) -> f64 {
        let i = model.n_instances() as u64;
        let n = model.n_observations();
        let g = shape.g_u * shape.g_p;
        (shape.parts as f64).ln()
            + self.cache.log_stirling2_cumulative(i, shape.g_u)
            + self.cache.log_stirling2_cumulative(shape.parts, shape.g_p)
            + self.cache.log_binomial(n + g - 1, g - 1)
    }

    /// Full evaluation with the per-term breakdown.
    pub fn evaluate(&self, model: &CoclusterModel) -> CriterionValue {
        let parts = model.partitions();
        let n = model.n_observations();
        let i = model.n_instances() as u64;
        let j = model.n_parts() as u64;
        let (g_u, g_p) = (
            model.n_instance_clusters() as u64,
            model.n_part_clusters() as u64,
        );
        let g = g_u * g_p;
        let k_n = parts.numeric_modeled() as f64;

        let mut t = [0.0f64; 12];
        for (_, v_k, j_k) in parts.categorical_modeled() {
            t[0] += (v_k as f64).ln();
            t[1] += self.cache.log_stirling2_cumulative(v_k as u64, j_k as u64);
        }
        t[0] += k_n * (n as f64).ln();
        t[2] = (i as f64).ln() + (j as f64).ln();
        t[3] = self.cache.log_stirling2_cumulative(i, g_u)
            + self.cache.log_stirling2_cumulative(j, g_p);
        t[4] = self.cache.log_binomial(n + g - 1, g - 1);
        // Sums run over sorted counts so that relabeling clusters cannot
        // change a single bit of the result.
        for (tot, m) in sorted_pairs(model.row_totals(), model.row_sizes()) {
            t[5] += self.cache.log_binomial(tot + m - 1, m - 1);
        }
        for (tot, m) in sorted_pairs(model.col_totals(), model.col_sizes()) {
            t[6] += self.cache.log_binomial(tot + m - 1, m - 1);
        }
        for p in 0..model.n_parts() {
            let (k, jj) = parts.locate(p);
            if parts.kind(k) == VariableKind::Categorical {
                let m = parts.values_in_part(k, jj) as u64;
                t[7] += self.cache.log_binomial(parts.part_count(p) + m - 1, m - 1);
            }
        }

        t[8] = self.lf(n) - self.sum_lf(model.cells());
        t[9] = self.sum_lf(model.row_totals()) - self.sum_lf(model.instance_counts());
        t[10] = self.sum_lf(model.col_totals());
        if self.options.numeric_part_factorials {
            for p in 0..model.n_parts() {
                if parts.kind(parts.locate(p).0) == VariableKind::Numeric {
                    t[10] -= self.lf(parts.part_count(p));
                }
            }
        }
        t[11] = -parts
            .all_value_counts()
            .iter()
            .flatten()
            .map(|&c| self.lf(c))
            .sum::<f64>();

        let prior: f64 = t[..N_PRIOR_TERMS].iter().sum();
        let likelihood: f64 = t[N_PRIOR_TERMS..].iter().sum();
        CriterionValue {
            total: prior + likelihood,
            prior,
            likelihood,
            terms: TERM_LABELS
                .iter()
                .zip(t)
                .map(|(l, v)| Term {
                    label: l.to_string(),
                    value: v,
                })
                .collect(),
        }
    }

    fn sum_lf(&self, counts: &[u64]) -> f64 {
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        sorted.iter().map(|&c| self.lf(c)).sum()
    }

    pub fn total(&self, model: &CoclusterModel) -> f64 {
        self.evaluate(model).total
    }

    pub fn prior_cost(&self, model: &CoclusterModel) -> f64 {
        self.evaluate(model).prior
    }

    pub fn likelihood_cost(&self, model: &CoclusterModel) -> f64 {
        self.evaluate(model).likelihood
    }

    /// Criterion change caused by `mv`, touching only the terms it affects.
    pub fn delta(&self, model: &CoclusterModel, mv: &Move) -> Result<f64> {
        let effect = model.move_effect(mv)?;
        Ok(self.effect_delta(model, &effect))
    }

    pub fn effect_delta(&self, model: &CoclusterModel, e: &MoveEffect) -> f64 {
        let before = Shape {
            g_u: model.n_instance_clusters() as u64,
            g_p: model.n_part_clusters() as u64,
            parts: model.n_parts() as u64,
        };
        let after = Shape {
            g_u: e.instance_clusters as u64,
            g_p: e.part_clusters as u64,
            parts: e.parts as u64,
        };
        let mut d = 0.0;
        if before != after {
            d += self.structure(model, &after) - self.structure(model, &before);
        }
        if let Some((k, jk_new)) = e.variable_parts {
            if model.partitions().kind(k) == VariableKind::Categorical {
                let v_k = model.partitions().value_counts(k).len() as u64;
                let jk_old = model.partitions().parts_of(k) as u64;
                d += self.cache.log_stirling2_cumulative(v_k, jk_new as u64)
                    - self.cache.log_stirling2_cumulative(v_k, jk_old);
            }
        }
        for (old, new) in e.rows.iter().chain(&e.cols) {
            d -= self.cluster_term(*old);
            if let Some(s) = new {
                d += self.cluster_term(*s);
            }
        }
        for &(old, new) in &e.cells {
            d += self.lf(old) - self.lf(new);
        }
        for (old, new) in &e.part_stats {
            d -= self.part_term(*old);
            if let Some(s) = new {
                d += self.part_term(*s);
            }
        }
        d
    }

    /// Local part of an instance-cluster merge: everything except the terms
    /// that depend only on `G_u`. `cells_gain` is `sum_c ln a_c! + ln b_c! -
    /// ln (a_c + b_c)!` over the two rows.
    #[inline]
    pub(crate) fn merge_local(&self, a: ClusterStat, b: ClusterStat, cells_gain: f64) -> f64 {
        self.cluster_term(ClusterStat {
            observations: a.observations + b.observations,
            members: a.members + b.members,
        }) - self.cluster_term(a)
            - self.cluster_term(b)
            + cells_gain
    }

    /// `ln a! + ln b! - ln (a+b)!`.
    #[inline]
    pub(crate) fn pair_gain(&self, a: u64, b: u64) -> f64 {
        if a == 0 || b == 0 {
            0.0
        } else {
            self.lf(a) + self.lf(b) - self.lf(a + b)
        }
    }

    /// Change of the `G_u`/`G_p`-only terms when the cluster grid changes.
    pub(crate) fn grid_delta(
        &self,
        model_instances: u64,
        n: u64,
        parts: u64,
        from: (u64, u64),
        to: (u64, u64),
    ) -> f64 {
        let s = |g_u: u64, g_p: u64| {
            let g = g_u * g_p;
            self.cache.log_stirling2_cumulative(model_instances, g_u)
                + self.cache.log_stirling2_cumulative(parts, g_p)
                + self.cache.log_binomial(n + g - 1, g - 1)
        };
        s(to.0, to.1) - s(from.0, from.1)
    }
}
