//! Greedy bottom-up merging of instance clusters and part clusters.
//!
//! Merging continues down to a single cell; the best state seen is kept.
//! Instance-cluster pairs are kept in a candidate graph (all pairs for small
//! inputs, otherwise a cosine k-nearest-neighbour graph over cell profiles)
//! with cached merge deltas in a lazily invalidated heap. Part-cluster pairs
//! are few and are scanned exhaustively every step from a cached table of
//! cell terms.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use rayon::prelude::*;

use crate::criterion::Criterion;
use crate::model::{ClusterStat, CoclusterModel};

#[derive(Clone, Copy, Debug)]
struct Key(f64, usize, usize);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then(self.1.cmp(&other.1))
            .then(self.2.cmp(&other.2))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AgglomerationParams {
    /// Candidate partners per instance cluster when the input is large.
    pub neighbors: usize,
    /// Up to this many instance clusters every pair is a candidate.
    pub exhaustive_limit: usize,
    /// A later state must beat the best one by more than this to replace it.
    pub min_improvement: f64,
    pub parallel: bool,
}

#[derive(Clone, Debug, Default)]
pub struct AgglomerationStats {
    pub instance_merges: usize,
    pub part_merges: usize,
    /// Criterion change of each kept merge, in order.
    pub deltas: Vec<f64>,
    /// Merges performed, including those past the best state.
    pub explored: usize,
    /// Criterion decrease from the starting model to the returned one.
    pub improvement: f64,
}

struct State<'a> {
    crit: &'a Criterion,
    n_obs: u64,
    n_inst: u64,
    n_parts: u64,
    n_cols: usize,
    rows: Vec<Vec<u64>>,
    row_stat: Vec<ClusterStat>,
    row_alive: Vec<bool>,
    g_u: u64,
    col_stat: Vec<ClusterStat>,
    col_alive: Vec<bool>,
    g_p: u64,
    /// `sum_r gain(rows[r][x], rows[r][y])` for `x < y`, at `x * n_cols + y`.
    col_pairs: Vec<f64>,
    pairs: HashMap<(usize, usize), f64>,
    adj: Vec<BTreeSet<usize>>,
    heap: BinaryHeap<Reverse<Key>>,
    params: AgglomerationParams,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl<'a> State<'a> {
    fn new(model: &CoclusterModel, crit: &'a Criterion, params: AgglomerationParams) -> Self {
        let (g_u, g_p) = (model.n_instance_clusters(), model.n_part_clusters());
        let rows: Vec<Vec<u64>> = (0..g_u).map(|r| (0..g_p).map(|c| model.cell(r, c)).collect()).collect();
        let stat = |o: &[u64], m: &[u64]| -> Vec<ClusterStat> {
            o.iter()
                .zip(m)
                .map(|(&observations, &members)| ClusterStat {
                    observations,
                    members,
                })
                .collect()
        };
        let mut state = State {
            crit,
            n_obs: model.n_observations(),
            n_inst: model.n_instances() as u64,
            n_parts: model.n_parts() as u64,
            n_cols: g_p,
            row_stat: stat(model.row_totals(), model.row_sizes()),
            row_alive: vec![true; g_u],
            g_u: g_u as u64,
            col_stat: stat(model.col_totals(), model.col_sizes()),
            col_alive: vec![true; g_p],
            g_p: g_p as u64,
            col_pairs: vec![0.0; g_p * g_p],
            pairs: HashMap::new(),
            adj: vec![BTreeSet::new(); g_u],
            heap: BinaryHeap::new(),
            rows,
            params,
        };
        for r in 0..g_u {
            let nz = state.nonzero(r);
            for (i, &x) in nz.iter().enumerate() {
                for &y in &nz[i + 1..] {
                    state.col_pairs[x * g_p + y] += crit.pair_gain(state.rows[r][x], state.rows[r][y]);
                }
            }
        }
        state.init_row_candidates();
        state
    }

    fn nonzero(&self, r: usize) -> Vec<usize> {
        (0..self.n_cols).filter(|&c| self.rows[r][c] > 0).collect()
    }

    fn init_row_candidates(&mut self) {
        let g_u = self.rows.len();
        if g_u <= self.params.exhaustive_limit {
            for a in 0..g_u {
                for b in a + 1..g_u {
                    self.adj[a].insert(b);
                    self.adj[b].insert(a);
                }
            }
        } else {
            let lists: Vec<Vec<usize>> = if self.params.parallel {
                (0..g_u).into_par_iter().map(|a| self.nearest(a)).collect()
            } else {
                (0..g_u).map(|a| self.nearest(a)).collect()
            };
            for (a, list) in lists.into_iter().enumerate() {
                for b in list {
                    self.adj[a].insert(b);
                    self.adj[b].insert(a);
                }
            }
        }
        let mut all: Vec<(usize, usize)> = Vec::new();
        for a in 0..g_u {
            for &b in self.adj[a].range(a + 1..) {
                all.push((a, b));
            }
        }
        let values: Vec<f64> = if self.params.parallel {
            all.par_iter().map(|&(a, b)| self.row_local(a, b)).collect()
        } else {
            all.iter().map(|&(a, b)| self.row_local(a, b)).collect()
        };
        for ((a, b), v) in all.into_iter().zip(values) {
            self.pairs.insert((a, b), v);
            self.heap.push(Reverse(Key(v, a, b)));
        }
    }

    /// Most cosine-similar live rows to `a` (ties by index).
    fn nearest(&self, a: usize) -> Vec<usize> {
        let nz = self.nonzero(a);
        let norm = |r: usize| -> f64 {
            self.rows[r]
                .iter()
                .map(|&x| (x as f64) * (x as f64))
                .sum::<f64>()
                .sqrt()
        };
        let na = norm(a);
        let mut scored: Vec<(f64, usize)> = (0..self.rows.len())
            .filter(|&b| b != a && self.row_alive[b])
            .map(|b| {
                let dot: f64 = nz
                    .iter()
                    .map(|&c| self.rows[a][c] as f64 * self.rows[b][c] as f64)
                    .sum();
                let nb = norm(b);
                let cos = if na > 0.0 && nb > 0.0 { dot / (na * nb) } else { 0.0 };
                (cos, b)
            })
            .collect();
        let k = self.params.neighbors.max(1).min(scored.len());
        let cmp = |x: &(f64, usize), y: &(f64, usize)| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        scored.into_iter().map(|(_, b)| b).collect()
    }

    fn row_local(&self, a: usize, b: usize) -> f64 {
        let gain: f64 = self.rows[a]
            .iter()
            .zip(&self.rows[b])
            .map(|(&x, &y)| self.crit.pair_gain(x, y))
            .sum();
        self.crit.merge_local(self.row_stat[a], self.row_stat[b], gain)
    }

    fn best_row(&mut self) -> Option<Key> {
        while let Some(&Reverse(k)) = self.heap.peek() {
            match self.pairs.get(&(k.1, k.2)) {
                Some(v) if v.to_bits() == k.0.to_bits() => return Some(k),
                _ => {
                    self.heap.pop();
                }
            }
        }
        None
    }

    fn best_col(&self) -> Option<Key> {
        let live: Vec<usize> = (0..self.n_cols).filter(|&c| self.col_alive[c]).collect();
        let mut best: Option<Key> = None;
        for (i, &x) in live.iter().enumerate() {
            for &y in &live[i + 1..] {
                let v = self.crit.merge_local(
                    self.col_stat[x],
                    self.col_stat[y],
                    self.col_pairs[x * self.n_cols + y],
                );
                let k = Key(v, x, y);
                if best.is_none_or(|b| k < b) {
                    best = Some(k);
                }
            }
        }
        best
    }

    fn merge_rows(&mut self, a: usize, b: usize) {
        let n_cols = self.n_cols;
        let union: Vec<usize> = (0..n_cols)
            .filter(|&c| self.rows[a][c] > 0 || self.rows[b][c] > 0)
            .collect();
        for (i, &x) in union.iter().enumerate() {
            for &y in &union[i + 1..] {
                let (ax, ay, bx, by) = (self.rows[a][x], self.rows[a][y], self.rows[b][x], self.rows[b][y]);
                self.col_pairs[x * n_cols + y] += self.crit.pair_gain(ax + bx, ay + by)
                    - self.crit.pair_gain(ax, ay)
                    - self.crit.pair_gain(bx, by);
            }
        }
        let moved = std::mem::take(&mut self.rows[b]);
        for (x, y) in self.rows[a].iter_mut().zip(&moved) {
            *x += y;
        }
        self.rows[b] = vec![0; n_cols];
        self.row_stat[a].observations += self.row_stat[b].observations;
        self.row_stat[a].members += self.row_stat[b].members;
        self.row_alive[b] = false;
        self.g_u -= 1;

        let b_adj = std::mem::take(&mut self.adj[b]);
        for c in b_adj {
            self.pairs.remove(&key(b, c));
            self.adj[c].remove(&b);
            if c != a {
                self.adj[c].insert(a);
                self.adj[a].insert(c);
            }
        }
        self.adj[a].remove(&b);
        if self.adj[a].is_empty() && self.g_u > 1 {
            for c in self.nearest(a) {
                self.adj[a].insert(c);
                self.adj[c].insert(a);
            }
        }
        let partners: Vec<usize> = self.adj[a].iter().copied().collect();
        for c in partners {
            let v = self.row_local(a, c);
            let k = key(a, c);
            self.pairs.insert(k, v);
            self.heap.push(Reverse(Key(v, k.0, k.1)));
        }
    }

    fn merge_cols(&mut self, x: usize, y: usize) {
        let crit = self.crit;
        let rows = &self.rows;
        for (&(a, b), v) in self.pairs.iter_mut() {
            let (ax, ay, bx, by) = (rows[a][x], rows[a][y], rows[b][x], rows[b][y]);
            *v += crit.pair_gain(ax + ay, bx + by) - crit.pair_gain(ax, bx) - crit.pair_gain(ay, by);
        }
        let mut entries: Vec<Key> = self.pairs.iter().map(|(&(a, b), &v)| Key(v, a, b)).collect();
        entries.sort_unstable();
        self.heap = entries.into_iter().map(Reverse).collect();

        for r in 0..self.rows.len() {
            if self.row_alive[r] {
                self.rows[r][x] += self.rows[r][y];
                self.rows[r][y] = 0;
            }
        }
        self.col_stat[x].observations += self.col_stat[y].observations;
        self.col_stat[x].members += self.col_stat[y].members;
        self.col_alive[y] = false;
        self.g_p -= 1;

        let n_cols = self.n_cols;
        for z in 0..n_cols {
            if z == x || !self.col_alive[z] {
                continue;
            }
            let (lo, hi) = (x.min(z), x.max(z));
            let sum: f64 = (0..self.rows.len())
                .filter(|&r| self.row_alive[r])
                .map(|r| self.crit.pair_gain(self.rows[r][lo], self.rows[r][hi]))
                .sum();
            self.col_pairs[lo * n_cols + hi] = sum;
        }
    }

    /// Merges down to a single cell, logging every step.
    fn run(&mut self) -> Vec<(Merge, f64)> {
        let mut log = Vec::new();
        loop {
            let row = if self.g_u > 1 { self.best_row() } else { None };
            let col = if self.g_p > 1 { self.best_col() } else { None };
            let grid = |to: (u64, u64)| {
                self.crit
                    .grid_delta(self.n_inst, self.n_obs, self.n_parts, (self.g_u, self.g_p), to)
            };
            let row_total = row.map(|k| k.0 + grid((self.g_u - 1, self.g_p)));
            let col_total = col.map(|k| k.0 + grid((self.g_u, self.g_p - 1)));
            let take_row = match (row_total, col_total) {
                (Some(r), Some(c)) => r <= c,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_row {
                let k = row.unwrap();
                self.merge_rows(k.1, k.2);
                log.push((Merge::Rows(k.1, k.2), row_total.unwrap()));
            } else {
                let k = col.unwrap();
                self.merge_cols(k.1, k.2);
                log.push((Merge::Cols(k.1, k.2), col_total.unwrap()));
            }
        }
        log
    }
}

#[derive(Clone, Copy, Debug)]
enum Merge {
    Rows(usize, usize),
    Cols(usize, usize),
}

/// Dense labels after applying `merges` (each folds the second index into
/// the first) to `n` singletons.
fn replay(n: usize, merges: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for (a, b) in merges {
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
    }
    let mut map = vec![0; n];
    for (label, group) in members.iter().filter(|g| !g.is_empty()).enumerate() {
        for &m in group {
            map[m] = label;
        }
    }
    map
}

/// Merges instance clusters and part clusters of `model` greedily, always
/// taking the merge with the lowest criterion delta, down to a single cell,
/// and returns the best model met on the way.
pub fn agglomerative_cocluster(
    model: &CoclusterModel,
    criterion: &Criterion,
    params: AgglomerationParams,
) -> (CoclusterModel, AgglomerationStats) {
    let mut state = State::new(model, criterion, params);
    let log = state.run();
    let mut best = (0.0, 0);
    let mut acc = 0.0;
    for (step, (_, d)) in log.iter().enumerate() {
        acc += d;
        if acc < best.0 - params.min_improvement {
            best = (acc, step + 1);
        }
    }
    let kept = &log[..best.1];
    let rows = kept.iter().filter_map(|(m, _)| match *m {
        Merge::Rows(a, b) => Some((a, b)),
        Merge::Cols(..) => None,
    });
    let cols = kept.iter().filter_map(|(m, _)| match *m {
        Merge::Cols(a, b) => Some((a, b)),
        Merge::Rows(..) => None,
    });
    let row_map = replay(model.n_instance_clusters(), rows);
    let col_map = replay(model.n_part_clusters(), cols);
    let stats = AgglomerationStats {
        instance_merges: kept.iter().filter(|(m, _)| matches!(m, Merge::Rows(..))).count(),
        part_merges: kept.iter().filter(|(m, _)| matches!(m, Merge::Cols(..))).count(),
        deltas: kept.iter().map(|&(_, d)| d).collect(),
        explored: log.len(),
        improvement: -best.0,
    };
    let merged = model
        .regroup(&row_map, &col_map)
        .expect("label maps are dense by construction");
    (merged, stats)
}
