//! Single-item moves for stage 1: each instance, then each part, goes to the
//! cluster that lowers the criterion most, until a full pass moves nothing.

use crate::criterion::Criterion;
use crate::dataset::Dataset;
use crate::model::{densify, ClusterStat, CoclusterModel};

const MAX_PASSES: usize = 100;

/// One side of the grid (instances or parts) with its cluster statistics.
struct Side {
    label: Vec<usize>,
    stat: Vec<ClusterStat>,
    alive: usize,
    /// Sparse `(item on the other side, count)` per item.
    links: Vec<Vec<(usize, u64)>>,
}

struct Work<'a> {
    crit: &'a Criterion,
    n_obs: u64,
    n_inst: u64,
    n_parts: u64,
    rows: Side,
    cols: Side,
    n_cols: usize,
    cells: Vec<u64>,
    min_improvement: f64,
}

fn stats(labels: &[usize], weights: &[u64], n: usize) -> Vec<ClusterStat> {
    let mut s = vec![
        ClusterStat {
            observations: 0,
            members: 0
        };
        n
    ];
    for (&l, &w) in labels.iter().zip(weights) {
        s[l].observations += w;
        s[l].members += 1;
    }
    s
}

impl Work<'_> {
    fn term(&self, s: ClusterStat) -> f64 {
        if s.members == 0 {
            0.0
        } else {
            self.crit.cluster_term(s)
        }
    }

    fn cell(&self, row_side: bool, own: usize, other: usize) -> &u64 {
        if row_side {
            &self.cells[own * self.n_cols + other]
        } else {
            &self.cells[other * self.n_cols + own]
        }
    }

    /// Counts of `item` per cluster of the other side, sorted by cluster.
    fn profile(&self, row_side: bool, item: usize) -> Vec<(usize, u64)> {
        let (side, other) = if row_side {
            (&self.rows, &self.cols)
        } else {
            (&self.cols, &self.rows)
        };
        let mut p: Vec<(usize, u64)> = side.links[item]
            .iter()
            .map(|&(o, n)| (other.label[o], n))
            .collect();
        p.sort_unstable();
        p.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        p
    }

    fn move_delta(&self, row_side: bool, item: usize, to: usize, prof: &[(usize, u64)]) -> f64 {
        let side = if row_side { &self.rows } else { &self.cols };
        let from = side.label[item];
        let n: u64 = prof.iter().map(|p| p.1).sum();
        let (a, b) = (side.stat[from], side.stat[to]);
        let a_new = ClusterStat {
            observations: a.observations - n,
            members: a.members - 1,
        };
        let b_new = ClusterStat {
            observations: b.observations + n,
            members: b.members + 1,
        };
        let mut d = self.term(a_new) + self.term(b_new) - self.term(a) - self.term(b);
        if a_new.members == 0 {
            let (g_u, g_p) = (self.rows.alive as u64, self.cols.alive as u64);
            let to_shape = if row_side { (g_u - 1, g_p) } else { (g_u, g_p - 1) };
            d += self
                .crit
                .grid_delta(self.n_inst, self.n_obs, self.n_parts, (g_u, g_p), to_shape);
        }
        for &(c, x) in prof {
            let ca = *self.cell(row_side, from, c);
            let cb = *self.cell(row_side, to, c);
            d += self.crit.lf(ca) - self.crit.lf(ca - x) + self.crit.lf(cb) - self.crit.lf(cb + x);
        }
        d
    }

    fn apply(&mut self, row_side: bool, item: usize, to: usize, prof: &[(usize, u64)]) {
        let n: u64 = prof.iter().map(|p| p.1).sum();
        let n_cols = self.n_cols;
        let side = if row_side { &mut self.rows } else { &mut self.cols };
        let from = side.label[item];
        side.label[item] = to;
        side.stat[from].observations -= n;
        side.stat[from].members -= 1;
        side.stat[to].observations += n;
        side.stat[to].members += 1;
        if side.stat[from].members == 0 {
            side.alive -= 1;
        }
        for &(c, x) in prof {
            let (ia, ib) = if row_side {
                (from * n_cols + c, to * n_cols + c)
            } else {
                (c * n_cols + from, c * n_cols + to)
            };
            self.cells[ia] -= x;
            self.cells[ib] += x;
        }
    }

    /// One pass over the items of a side; returns the number of moves.
    fn pass(&mut self, row_side: bool) -> usize {
        let n_items = if row_side { self.rows.label.len() } else { self.cols.label.len() };
        let mut moved = 0;
        for item in 0..n_items {
            let side = if row_side { &self.rows } else { &self.cols };
            if side.alive < 2 {
                break;
            }
            let from = side.label[item];
            let prof = self.profile(row_side, item);
            let mut best: Option<(f64, usize)> = None;
            for to in 0..side.stat.len() {
                if to == from || side.stat[to].members == 0 {
                    continue;
                }
                let d = self.move_delta(row_side, item, to, &prof);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, to));
                }
            }
            if let Some((d, to)) = best {
                if d < -self.min_improvement {
                    self.apply(row_side, item, to, &prof);
                    moved += 1;
                }
            }
        }
        moved
    }
}

/// Moves single instances and single parts between existing clusters while
/// the criterion improves. Returns the refined model and the move count.
pub fn refine_assignments(
    dataset: &Dataset,
    model: &CoclusterModel,
    criterion: &Criterion,
    min_improvement: f64,
) -> (CoclusterModel, usize) {
    let partitions = model.partitions();
    let n_inst = model.n_instances();
    let n_parts = model.n_parts();
    let mut inst_links: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n_inst];
    for o in dataset.observations() {
        let p = partitions.global_part_of(o.variable as usize, o.value);
        inst_links[o.instance as usize].push((p, 1));
    }
    let mut part_links: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n_parts];
    for (i, links) in inst_links.iter_mut().enumerate() {
        links.sort_unstable();
        links.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        for &(p, n) in links.iter() {
            part_links[p].push((i, n));
        }
    }
    let (g_u, g_p) = (model.n_instance_clusters(), model.n_part_clusters());
    let mut work = Work {
        crit: criterion,
        n_obs: model.n_observations(),
        n_inst: n_inst as u64,
        n_parts: n_parts as u64,
        rows: Side {
            label: model.instance_assignment().to_vec(),
            stat: stats(model.instance_assignment(), model.instance_counts(), g_u),
            alive: g_u,
            links: inst_links,
        },
        cols: Side {
            label: model.part_assignment().to_vec(),
            stat: stats(model.part_assignment(), partitions.part_counts(), g_p),
            alive: g_p,
            links: part_links,
        },
        n_cols: g_p,
        cells: model.cells().to_vec(),
        min_improvement,
    };
    let mut total = 0;
    for _ in 0..MAX_PASSES {
        let moved = work.pass(true) + work.pass(false);
        total += moved;
        if moved == 0 {
            break;
        }
    }
    if total == 0 {
        return (model.clone(), 0);
    }
    let refined = CoclusterModel::build(
        dataset,
        partitions.clone(),
        densify(&work.rows.label),
        densify(&work.cols.label),
    )
    .expect("refined labels are dense and consistent");
    (refined, total)
}
