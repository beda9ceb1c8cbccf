//! Co-clustering model state: partitions, cluster assignments and every count
//! the criterion needs, kept consistent under the five structural moves.

use std::fmt;

use crate::dataset::{Dataset, Value, VariableKind};
use crate::error::{Error, Result};
use crate::partition::{PartitionSet, VariablePartition};

/// One structural edit. The derived order (variant first, then indices) is
/// the tie-breaking order used by the optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    MergeInstanceClusters { a: usize, b: usize },
    MergePartClusters { a: usize, b: usize },
    /// Merge parts `first` and `second` of `variable`; the merged part keeps
    /// the lower index and that part's cluster.
    MergeParts {
        variable: usize,
        first: usize,
        second: usize,
    },
    /// Move global part `part` to part cluster `to`.
    MovePart { part: usize, to: usize },
    /// Move a categorical token into group `to` of its variable.
    MoveValue {
        variable: usize,
        token: u32,
        to: usize,
    },
}

impl Move {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Move::MergeInstanceClusters { .. } => "merge-instance-clusters",
            Move::MergePartClusters { .. } => "merge-part-clusters",
            Move::MergeParts { .. } => "merge-parts",
            Move::MovePart { .. } => "move-part",
            Move::MoveValue { .. } => "move-value",
        }
    }

    pub fn kind_index(&self) -> usize {
        match self {
            Move::MergeInstanceClusters { .. } => 0,
            Move::MergePartClusters { .. } => 1,
            Move::MergeParts { .. } => 2,
            Move::MovePart { .. } => 3,
            Move::MoveValue { .. } => 4,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Move::MergeInstanceClusters { a, b } => write!(f, "merge-instance-clusters({a},{b})"),
            Move::MergePartClusters { a, b } => write!(f, "merge-part-clusters({a},{b})"),
            Move::MergeParts {
                variable,
                first,
                second,
            } => write!(f, "merge-parts(var {variable}: {first},{second})"),
            Move::MovePart { part, to } => write!(f, "move-part({part} -> {to})"),
            Move::MoveValue {
                variable,
                token,
                to,
            } => write!(f, "move-value(var {variable}: token {token} -> {to})"),
        }
    }
}

/// Observation total and member count of a cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterStat {
    pub observations: u64,
    pub members: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartStat {
    pub observations: u64,
    /// Values in a categorical part; 0 for an interval.
    pub values: u64,
    pub categorical: bool,
}

/// Counts a move changes, as `(before, after)` pairs; `None` means the item
/// disappears. Everything not listed is unchanged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MoveEffect {
    pub instance_clusters: usize,
    pub part_clusters: usize,
    pub parts: usize,
    /// `(variable, new J_k)` when a variable's part count changes.
    pub variable_parts: Option<(usize, usize)>,
    pub rows: Vec<(ClusterStat, Option<ClusterStat>)>,
    pub cols: Vec<(ClusterStat, Option<ClusterStat>)>,
    pub cells: Vec<(u64, u64)>,
    pub part_stats: Vec<(PartStat, Option<PartStat>)>,
}

/// Renumbers arbitrary labels densely, preserving their relative order.
pub fn densify(labels: &[usize]) -> Vec<usize> {
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    labels
        .iter()
        .map(|l| distinct.binary_search(l).expect("label present"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoclusterModel {
    partitions: PartitionSet,
    instance_cluster: Vec<usize>,
    part_cluster: Vec<usize>,
    n_instance_clusters: usize,
    n_part_clusters: usize,
    n_observations: u64,
    /// Row-major `G_u x G_p`.
    cells: Vec<u64>,
    row_totals: Vec<u64>,
    col_totals: Vec<u64>,
    row_sizes: Vec<u64>,
    col_sizes: Vec<u64>,
    instance_counts: Vec<u64>,
    /// `[part][instance cluster]` observation counts.
    part_profiles: Vec<Vec<u64>>,
    /// `[variable][token][instance cluster]`; empty for numeric variables.
    value_profiles: Vec<Vec<Vec<u64>>>,
}

fn cluster_count(labels: &[usize], what: &str) -> Result<usize> {
    let g = labels.iter().max().map_or(0, |m| m + 1);
    let mut used = vec![false; g];
    for &l in labels {
        used[l] = true;
    }
    if let Some(empty) = used.iter().position(|u| !u) {
        return Err(Error::structural(format!("{what} cluster {empty} is empty")));
    }
    Ok(g)
}

impl CoclusterModel {
    /// Builds a model in one pass over the observations. Cluster labels must
    /// be dense (`0..G` with every cluster used).
    pub fn build(
        dataset: &Dataset,
        partitions: PartitionSet,
        instance_assignment: Vec<usize>,
        part_assignment: Vec<usize>,
    ) -> Result<Self> {
        let n_inst = dataset.n_instances();
        if n_inst == 0 {
            return Err(Error::structural("dataset has no instances"));
        }
        if dataset.n_observations() == 0 {
            return Err(Error::EmptyDataset);
        }
        let n_parts = partitions.n_parts();
        if instance_assignment.len() != n_inst {
            return Err(Error::structural(format!(
                "{} instance labels for {} instances",
                instance_assignment.len(),
                n_inst
            )));
        }
        if part_assignment.len() != n_parts {
            return Err(Error::structural(format!(
                "{} part labels for {} parts",
                part_assignment.len(),
                n_parts
            )));
        }
        let g_u = cluster_count(&instance_assignment, "instance")?;
        let g_p = cluster_count(&part_assignment, "part")?;

        let mut cells = vec![0u64; g_u * g_p];
        let mut part_profiles = vec![vec![0u64; g_u]; n_parts];
        let mut value_profiles: Vec<Vec<Vec<u64>>> = (0..partitions.n_variables())
            .map(|k| match partitions.variable(k) {
                VariablePartition::Groups(g) => vec![vec![0u64; g_u]; g.n_values()],
                _ => Vec::new(),
            })
            .collect();
        for o in dataset.observations() {
            let k = o.variable as usize;
            let gu = instance_assignment[o.instance as usize];
            let part = partitions.global_part_of(k, o.value);
            cells[gu * g_p + part_assignment[part]] += 1;
            part_profiles[part][gu] += 1;
            if let Value::Categorical(t) = o.value {
                value_profiles[k][t as usize][gu] += 1;
            }
        }
        let mut model = CoclusterModel {
            partitions,
            instance_cluster: instance_assignment,
            part_cluster: part_assignment,
            n_instance_clusters: g_u,
            n_part_clusters: g_p,
            n_observations: dataset.n_observations() as u64,
            cells,
            row_totals: Vec::new(),
            col_totals: Vec::new(),
            row_sizes: Vec::new(),
            col_sizes: Vec::new(),
            instance_counts: dataset.observations_per_instance(),
            part_profiles,
            value_profiles,
        };
        model.recompute_margins();
        Ok(model)
    }

    /// Every instance and every part in its own cluster.
    pub fn singletons(dataset: &Dataset, partitions: PartitionSet) -> Result<Self> {
        let inst = (0..dataset.n_instances()).collect();
        let parts = (0..partitions.n_parts()).collect();
        Self::build(dataset, partitions, inst, parts)
    }

    /// One instance cluster and one part cluster.
    pub fn single_cluster(dataset: &Dataset, partitions: PartitionSet) -> Result<Self> {
        let inst = vec![0; dataset.n_instances()];
        let parts = vec![0; partitions.n_parts()];
        Self::build(dataset, partitions, inst, parts)
    }

    /// Assembles a model from stored statistics (model import). Margins are
    /// derived from the cells and checked against the profiles.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_stored(
        partitions: PartitionSet,
        instance_cluster: Vec<usize>,
        part_cluster: Vec<usize>,
        cells: Vec<u64>,
        instance_counts: Vec<u64>,
        part_profiles: Vec<Vec<u64>>,
        value_profiles: Vec<Vec<Vec<u64>>>,
    ) -> Result<Self> {
        let g_u = cluster_count(&instance_cluster, "instance")?;
        let g_p = cluster_count(&part_cluster, "part")?;
        if part_cluster.len() != partitions.n_parts()
            || cells.len() != g_u * g_p
            || part_profiles.len() != partitions.n_parts()
            || part_profiles.iter().any(|p| p.len() != g_u)
            || instance_counts.len() != instance_cluster.len()
            || value_profiles.len() != partitions.n_variables()
        {
            return Err(Error::structural("stored statistics have inconsistent shapes"));
        }
        let mut model = CoclusterModel {
            partitions,
            n_instance_clusters: g_u,
            n_part_clusters: g_p,
            n_observations: cells.iter().sum(),
            instance_cluster,
            part_cluster,
            cells,
            row_totals: Vec::new(),
            col_totals: Vec::new(),
            row_sizes: Vec::new(),
            col_sizes: Vec::new(),
            instance_counts,
            part_profiles,
            value_profiles,
        };
        model.recompute_margins();
        if let Some(problem) = model.internal_consistency() {
            return Err(Error::structural(problem));
        }
        Ok(model)
    }

    fn recompute_margins(&mut self) {
        let (g_u, g_p) = (self.n_instance_clusters, self.n_part_clusters);
        self.row_totals = (0..g_u)
            .map(|r| self.cells[r * g_p..(r + 1) * g_p].iter().sum())
            .collect();
        self.col_totals = (0..g_p)
            .map(|c| (0..g_u).map(|r| self.cells[r * g_p + c]).sum())
            .collect();
        self.row_sizes = vec![0; g_u];
        for &c in &self.instance_cluster {
            self.row_sizes[c] += 1;
        }
        self.col_sizes = vec![0; g_p];
        for &c in &self.part_cluster {
            self.col_sizes[c] += 1;
        }
    }

    /// Cross-checks redundant statistics against each other.
    fn internal_consistency(&self) -> Option<String> {
        let g_p = self.n_part_clusters;
        for c in 0..g_p {
            for r in 0..self.n_instance_clusters {
                let from_parts: u64 = (0..self.part_cluster.len())
                    .filter(|&p| self.part_cluster[p] == c)
                    .map(|p| self.part_profiles[p][r])
                    .sum();
                if from_parts != self.cell(r, c) {
                    return Some(format!("cell ({r},{c}) disagrees with part profiles"));
                }
            }
        }
        for (p, prof) in self.part_profiles.iter().enumerate() {
            if prof.iter().sum::<u64>() != self.partitions.part_count(p) {
                return Some(format!("part {p} profile disagrees with its count"));
            }
        }
        for r in 0..self.n_instance_clusters {
            let from_instances: u64 = self
                .instance_cluster
                .iter()
                .zip(&self.instance_counts)
                .filter(|(&c, _)| c == r)
                .map(|(_, &n)| n)
                .sum();
            if from_instances != self.row_totals[r] {
                return Some(format!("instance cluster {r} total disagrees with instance counts"));
            }
        }
        None
    }

    pub fn partitions(&self) -> &PartitionSet {
        &self.partitions
    }

    pub fn instance_assignment(&self) -> &[usize] {
        &self.instance_cluster
    }

    pub fn part_assignment(&self) -> &[usize] {
        &self.part_cluster
    }

    /// `G_u`.
    pub fn n_instance_clusters(&self) -> usize {
        self.n_instance_clusters
    }

    /// `G_p`.
    pub fn n_part_clusters(&self) -> usize {
        self.n_part_clusters
    }

    pub fn n_instances(&self) -> usize {
        self.instance_cluster.len()
    }

    pub fn n_parts(&self) -> usize {
        self.part_cluster.len()
    }

    pub fn n_observations(&self) -> u64 {
        self.n_observations
    }

    pub fn cell(&self, gu: usize, gp: usize) -> u64 {
        self.cells[gu * self.n_part_clusters + gp]
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    /// `N^(u)`.
    pub fn row_totals(&self) -> &[u64] {
        &self.row_totals
    }

    /// `N^(p)`.
    pub fn col_totals(&self) -> &[u64] {
        &self.col_totals
    }

    /// `m^(u)`.
    pub fn row_sizes(&self) -> &[u64] {
        &self.row_sizes
    }

    /// `m^(p)`.
    pub fn col_sizes(&self) -> &[u64] {
        &self.col_sizes
    }

    /// `n_i.`.
    pub fn instance_counts(&self) -> &[u64] {
        &self.instance_counts
    }

    pub fn part_profiles(&self) -> &[Vec<u64>] {
        &self.part_profiles
    }

    pub fn value_profiles(&self) -> &[Vec<Vec<u64>>] {
        &self.value_profiles
    }

    fn row_stat(&self, r: usize) -> ClusterStat {
        ClusterStat {
            observations: self.row_totals[r],
            members: self.row_sizes[r],
        }
    }

    fn col_stat(&self, c: usize) -> ClusterStat {
        ClusterStat {
            observations: self.col_totals[c],
            members: self.col_sizes[c],
        }
    }

    fn part_stat(&self, p: usize) -> PartStat {
        let (k, j) = self.partitions.locate(p);
        PartStat {
            observations: self.partitions.part_count(p),
            values: self.partitions.values_in_part(k, j) as u64,
            categorical: self.partitions.kind(k) == VariableKind::Categorical,
        }
    }

    fn check_pair(a: usize, b: usize, n: usize, what: &str) -> Result<()> {
        if a == b || a >= n || b >= n {
            return Err(Error::structural(format!(
                "invalid {what} cluster pair ({a}, {b}) with {n} clusters"
            )));
        }
        Ok(())
    }

    /// Describes which counts `mv` changes without applying it.
    pub fn move_effect(&self, mv: &Move) -> Result<MoveEffect> {
        let (g_u, g_p) = (self.n_instance_clusters, self.n_part_clusters);
        let mut e = MoveEffect {
            instance_clusters: g_u,
            part_clusters: g_p,
            parts: self.n_parts(),
            ..MoveEffect::default()
        };
        match *mv {
            Move::MergeInstanceClusters { a, b } => {
                Self::check_pair(a, b, g_u, "instance")?;
                let (sa, sb) = (self.row_stat(a), self.row_stat(b));
                e.rows.push((
                    sa,
                    Some(ClusterStat {
                        observations: sa.observations + sb.observations,
                        members: sa.members + sb.members,
                    }),
                ));
                e.rows.push((sb, None));
                for c in 0..g_p {
                    let (x, y) = (self.cell(a, c), self.cell(b, c));
                    if y > 0 {
                        e.cells.push((x, x + y));
                        e.cells.push((y, 0));
                    }
                }
                e.instance_clusters -= 1;
            }
            Move::MergePartClusters { a, b } => {
                Self::check_pair(a, b, g_p, "part")?;
                let (sa, sb) = (self.col_stat(a), self.col_stat(b));
                e.cols.push((
                    sa,
                    Some(ClusterStat {
                        observations: sa.observations + sb.observations,
                        members: sa.members + sb.members,
                    }),
                ));
                e.cols.push((sb, None));
                for r in 0..g_u {
                    let (x, y) = (self.cell(r, a), self.cell(r, b));
                    if y > 0 {
                        e.cells.push((x, x + y));
                        e.cells.push((y, 0));
                    }
                }
                e.part_clusters -= 1;
            }
            Move::MovePart { part, to } => {
                if part >= self.n_parts() || to >= g_p {
                    return Err(Error::structural(format!("invalid move of part {part} to {to}")));
                }
                let from = self.part_cluster[part];
                if from == to {
                    return Err(Error::structural(format!(
                        "part {part} is already in cluster {to}"
                    )));
                }
                let n = self.partitions.part_count(part);
                self.shift_profile(&mut e, &self.part_profiles[part], n, from, to, true, true);
            }
            Move::MergeParts {
                variable,
                first,
                second,
            } => {
                let (lo, hi) = self.partitions.check_merge(variable, first, second)?;
                let p = self.partitions.global_index(variable, lo);
                let q = self.partitions.global_index(variable, hi);
                let (sp, sq) = (self.part_stat(p), self.part_stat(q));
                e.part_stats.push((
                    sp,
                    Some(PartStat {
                        observations: sp.observations + sq.observations,
                        values: sp.values + sq.values,
                        categorical: sp.categorical,
                    }),
                ));
                e.part_stats.push((sq, None));
                e.parts -= 1;
                e.variable_parts = Some((variable, self.partitions.parts_of(variable) - 1));
                let (cp, cq) = (self.part_cluster[p], self.part_cluster[q]);
                if cp == cq {
                    let s = self.col_stat(cp);
                    e.cols.push((
                        s,
                        Some(ClusterStat {
                            observations: s.observations,
                            members: s.members - 1,
                        }),
                    ));
                } else {
                    self.shift_profile(&mut e, &self.part_profiles[q], sq.observations, cq, cp, true, false);
                }
            }
            Move::MoveValue {
                variable,
                token,
                to,
            } => {
                let source = self.partitions.check_move_value(variable, token, to)?;
                let ps = self.partitions.global_index(variable, source);
                let pt = self.partitions.global_index(variable, to);
                let n_v = self.partitions.value_counts(variable)[token as usize];
                let (ss, st) = (self.part_stat(ps), self.part_stat(pt));
                let emptied = ss.values == 1;
                e.part_stats.push((
                    ss,
                    (!emptied).then_some(PartStat {
                        observations: ss.observations - n_v,
                        values: ss.values - 1,
                        categorical: true,
                    }),
                ));
                e.part_stats.push((
                    st,
                    Some(PartStat {
                        observations: st.observations + n_v,
                        values: st.values + 1,
                        categorical: true,
                    }),
                ));
                if emptied {
                    e.parts -= 1;
                    e.variable_parts = Some((variable, self.partitions.parts_of(variable) - 1));
                }
                let (cs, ct) = (self.part_cluster[ps], self.part_cluster[pt]);
                let profile = &self.value_profiles[variable][token as usize];
                if cs != ct {
                    self.shift_profile(&mut e, profile, n_v, cs, ct, emptied, false);
                } else if emptied {
                    let s = self.col_stat(cs);
                    e.cols.push((
                        s,
                        Some(ClusterStat {
                            observations: s.observations,
                            members: s.members - 1,
                        }),
                    ));
                }
            }
        }
        Ok(e)
    }

    /// Records moving `profile` (total `n`) from part cluster `from` to `to`;
    /// `leaves`/`joins` say whether a member part leaves `from` or joins `to`.
    #[allow(clippy::too_many_arguments)]
    fn shift_profile(
        &self,
        e: &mut MoveEffect,
        profile: &[u64],
        n: u64,
        from: usize,
        to: usize,
        leaves: bool,
        joins: bool,
    ) {
        let (sf, st) = (self.col_stat(from), self.col_stat(to));
        let from_after = ClusterStat {
            observations: sf.observations - n,
            members: sf.members - u64::from(leaves),
        };
        e.cols.push((sf, (from_after.members > 0).then_some(from_after)));
        e.cols.push((
            st,
            Some(ClusterStat {
                observations: st.observations + n,
                members: st.members + u64::from(joins),
            }),
        ));
        if from_after.members == 0 {
            e.part_clusters -= 1;
        }
        for (r, &x) in profile.iter().enumerate() {
            if x > 0 {
                let (cf, ct) = (self.cell(r, from), self.cell(r, to));
                e.cells.push((cf, cf - x));
                e.cells.push((ct, ct + x));
            }
        }
    }

    /// Applies `mv` in place. On error the model is left unchanged.
    pub fn apply_move(&mut self, mv: &Move) -> Result<()> {
        match *mv {
            Move::MergeInstanceClusters { a, b } => {
                Self::check_pair(a, b, self.n_instance_clusters, "instance")?;
                self.merge_rows(a.min(b), a.max(b));
            }
            Move::MergePartClusters { a, b } => {
                Self::check_pair(a, b, self.n_part_clusters, "part")?;
                self.merge_cols(a.min(b), a.max(b));
            }
            Move::MovePart { part, to } => {
                if part >= self.n_parts() || to >= self.n_part_clusters {
                    return Err(Error::structural(format!("invalid move of part {part} to {to}")));
                }
                let from = self.part_cluster[part];
                if from == to {
                    return Err(Error::structural(format!(
                        "part {part} is already in cluster {to}"
                    )));
                }
                let profile = std::mem::take(&mut self.part_profiles[part]);
                self.shift_cells(&profile, from, to);
                self.part_profiles[part] = profile;
                self.col_sizes[from] -= 1;
                self.col_sizes[to] += 1;
                self.part_cluster[part] = to;
                if self.col_sizes[from] == 0 {
                    self.remove_col(from);
                }
            }
            Move::MergeParts {
                variable,
                first,
                second,
            } => {
                let (lo, hi) = self.partitions.check_merge(variable, first, second)?;
                let p = self.partitions.global_index(variable, lo);
                let q = self.partitions.global_index(variable, hi);
                let (cp, cq) = (self.part_cluster[p], self.part_cluster[q]);
                let q_profile = self.part_profiles.remove(q);
                if cp != cq {
                    self.shift_cells(&q_profile, cq, cp);
                }
                for (x, y) in self.part_profiles[p].iter_mut().zip(&q_profile) {
                    *x += y;
                }
                self.part_cluster.remove(q);
                self.col_sizes[cq] -= 1;
                self.partitions.merge_parts_mut(variable, lo, hi)?;
                if self.col_sizes[cq] == 0 {
                    self.remove_col(cq);
                }
            }
            Move::MoveValue {
                variable,
                token,
                to,
            } => {
                let source = self.partitions.check_move_value(variable, token, to)?;
                let ps = self.partitions.global_index(variable, source);
                let pt = self.partitions.global_index(variable, to);
                let (cs, ct) = (self.part_cluster[ps], self.part_cluster[pt]);
                let profile = std::mem::take(&mut self.value_profiles[variable][token as usize]);
                if cs != ct {
                    self.shift_cells(&profile, cs, ct);
                }
                for (r, &x) in profile.iter().enumerate() {
                    self.part_profiles[ps][r] -= x;
                    self.part_profiles[pt][r] += x;
                }
                self.value_profiles[variable][token as usize] = profile;
                if self.partitions.move_value_mut(variable, token, to)?.is_some() {
                    self.part_profiles.remove(ps);
                    self.part_cluster.remove(ps);
                    self.col_sizes[cs] -= 1;
                    if self.col_sizes[cs] == 0 {
                        self.remove_col(cs);
                    }
                }
            }
        }
        Ok(())
    }

    /// Pure variant of [`apply_move`](Self::apply_move).
    pub fn with_move(&self, mv: &Move) -> Result<Self> {
        let mut next = self.clone();
        next.apply_move(mv)?;
        Ok(next)
    }

    fn shift_cells(&mut self, profile: &[u64], from: usize, to: usize) {
        let g_p = self.n_part_clusters;
        let mut n = 0;
        for (r, &x) in profile.iter().enumerate() {
            self.cells[r * g_p + from] -= x;
            self.cells[r * g_p + to] += x;
            n += x;
        }
        self.col_totals[from] -= n;
        self.col_totals[to] += n;
    }

    fn merge_rows(&mut self, a: usize, b: usize) {
        let g_p = self.n_part_clusters;
        for c in 0..g_p {
            self.cells[a * g_p + c] += self.cells[b * g_p + c];
        }
        self.row_totals[a] += self.row_totals[b];
        self.row_sizes[a] += self.row_sizes[b];
        for prof in self.part_profiles.iter_mut() {
            prof[a] += prof[b];
        }
        for var in self.value_profiles.iter_mut() {
            for prof in var.iter_mut() {
                prof[a] += prof[b];
            }
        }
        for c in self.instance_cluster.iter_mut() {
            if *c == b {
                *c = a;
            }
        }
        self.remove_row(b);
    }

    fn remove_row(&mut self, b: usize) {
        let g_p = self.n_part_clusters;
        self.cells.drain(b * g_p..(b + 1) * g_p);
        self.row_totals.remove(b);
        self.row_sizes.remove(b);
        for prof in self.part_profiles.iter_mut() {
            prof.remove(b);
        }
        for var in self.value_profiles.iter_mut() {
            for prof in var.iter_mut() {
                prof.remove(b);
            }
        }
        for c in self.instance_cluster.iter_mut() {
            if *c > b {
                *c -= 1;
            }
        }
        self.n_instance_clusters -= 1;
    }

    fn merge_cols(&mut self, a: usize, b: usize) {
        let g_p = self.n_part_clusters;
        for r in 0..self.n_instance_clusters {
            self.cells[r * g_p + a] += self.cells[r * g_p + b];
            self.cells[r * g_p + b] = 0;
        }
        self.col_totals[a] += self.col_totals[b];
        self.col_totals[b] = 0;
        self.col_sizes[a] += self.col_sizes[b];
        self.col_sizes[b] = 0;
        for c in self.part_cluster.iter_mut() {
            if *c == b {
                *c = a;
            }
        }
        self.remove_col(b);
    }

    fn remove_col(&mut self, b: usize) {
        let g_p = self.n_part_clusters;
        let g_u = self.n_instance_clusters;
        let mut cells = Vec::with_capacity(g_u * (g_p - 1));
        for r in 0..g_u {
            for c in 0..g_p {
                if c != b {
                    cells.push(self.cells[r * g_p + c]);
                }
            }
        }
        self.cells = cells;
        self.col_totals.remove(b);
        self.col_sizes.remove(b);
        for c in self.part_cluster.iter_mut() {
            if *c > b {
                *c -= 1;
            }
        }
        self.n_part_clusters -= 1;
    }

    /// Aggregates clusters through label maps (`old cluster -> new cluster`);
    /// new labels must be dense.
    pub fn regroup(&self, instance_map: &[usize], part_map: &[usize]) -> Result<Self> {
        if instance_map.len() != self.n_instance_clusters || part_map.len() != self.n_part_clusters {
            return Err(Error::structural("cluster maps do not match the model"));
        }
        let g_u = cluster_count(instance_map, "instance")?;
        let g_p = cluster_count(part_map, "part")?;
        let mut cells = vec![0u64; g_u * g_p];
        for r in 0..self.n_instance_clusters {
            for c in 0..self.n_part_clusters {
                cells[instance_map[r] * g_p + part_map[c]] += self.cell(r, c);
            }
        }
        let fold = |prof: &Vec<u64>| {
            let mut out = vec![0u64; g_u];
            for (r, &x) in prof.iter().enumerate() {
                out[instance_map[r]] += x;
            }
            out
        };
        let mut model = CoclusterModel {
            partitions: self.partitions.clone(),
            instance_cluster: self.instance_cluster.iter().map(|&c| instance_map[c]).collect(),
            part_cluster: self.part_cluster.iter().map(|&c| part_map[c]).collect(),
            n_instance_clusters: g_u,
            n_part_clusters: g_p,
            n_observations: self.n_observations,
            cells,
            row_totals: Vec::new(),
            col_totals: Vec::new(),
            row_sizes: Vec::new(),
            col_sizes: Vec::new(),
            instance_counts: self.instance_counts.clone(),
            part_profiles: self.part_profiles.iter().map(fold).collect(),
            value_profiles: self
                .value_profiles
                .iter()
                .map(|var| var.iter().map(fold).collect())
                .collect(),
        };
        model.recompute_margins();
        Ok(model)
    }

    /// Same instance clusters, new part clusters given per part (dense).
    pub fn with_part_assignment(&self, part_cluster: Vec<usize>) -> Result<Self> {
        if part_cluster.len() != self.n_parts() {
            return Err(Error::structural("part labels do not match the model"));
        }
        let g_p = cluster_count(&part_cluster, "part")?;
        let g_u = self.n_instance_clusters;
        let mut cells = vec![0u64; g_u * g_p];
        for (p, prof) in self.part_profiles.iter().enumerate() {
            for (r, &x) in prof.iter().enumerate() {
                cells[r * g_p + part_cluster[p]] += x;
            }
        }
        let mut model = CoclusterModel {
            part_cluster,
            n_part_clusters: g_p,
            cells,
            ..self.clone()
        };
        model.recompute_margins();
        Ok(model)
    }

    /// Every legal move on this model, in tie-breaking order.
    pub fn candidate_moves(&self) -> Vec<Move> {
        let mut moves = Vec::new();
        let (g_u, g_p) = (self.n_instance_clusters, self.n_part_clusters);
        for a in 0..g_u {
            for b in a + 1..g_u {
                moves.push(Move::MergeInstanceClusters { a, b });
            }
        }
        for a in 0..g_p {
            for b in a + 1..g_p {
                moves.push(Move::MergePartClusters { a, b });
            }
        }
        for k in 0..self.partitions.n_variables() {
            let jk = self.partitions.parts_of(k);
            match self.partitions.variable(k) {
                VariablePartition::Intervals(_) => {
                    for j in 0..jk.saturating_sub(1) {
                        moves.push(Move::MergeParts {
                            variable: k,
                            first: j,
                            second: j + 1,
                        });
                    }
                }
                VariablePartition::Groups(_) => {
                    for j in 0..jk {
                        for j2 in j + 1..jk {
                            moves.push(Move::MergeParts {
                                variable: k,
                                first: j,
                                second: j2,
                            });
                        }
                    }
                }
                VariablePartition::Excluded => {}
            }
        }
        for part in 0..self.n_parts() {
            for to in 0..g_p {
                if to != self.part_cluster[part] {
                    moves.push(Move::MovePart { part, to });
                }
            }
        }
        for k in 0..self.partitions.n_variables() {
            if let VariablePartition::Groups(g) = self.partitions.variable(k) {
                if g.n_parts() < 2 {
                    continue;
                }
                for token in 0..g.n_values() as u32 {
                    for to in 0..g.n_parts() {
                        if to != g.group_of(token) {
                            moves.push(Move::MoveValue {
                                variable: k,
                                token,
                                to,
                            });
                        }
                    }
                }
            }
        }
        moves
    }
}

/// First statistic that differs between a model and a from-scratch rebuild.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discrepancy(pub String);

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Recomputes every statistic from the raw observations and compares exactly.
pub fn verify_counts(model: &CoclusterModel, dataset: &Dataset) -> std::result::Result<(), Discrepancy> {
    let partitions = PartitionSet::new(dataset, model.partitions.variables().to_vec())
        .map_err(|e| Discrepancy(format!("partitions do not fit the dataset: {e}")))?;
    if partitions.part_counts() != model.partitions.part_counts() {
        let p = partitions
            .part_counts()
            .iter()
            .zip(model.partitions.part_counts())
            .position(|(a, b)| a != b)
            .unwrap_or(0);
        return Err(Discrepancy(format!("part count n_.kj of part {p}")));
    }
    if partitions.all_value_counts() != model.partitions.all_value_counts() {
        return Err(Discrepancy("categorical value counts n_v".into()));
    }
    let fresh = CoclusterModel::build(
        dataset,
        partitions,
        model.instance_cluster.clone(),
        model.part_cluster.clone(),
    )
    .map_err(|e| Discrepancy(format!("assignments do not rebuild: {e}")))?;
    if fresh.n_instance_clusters != model.n_instance_clusters
        || fresh.n_part_clusters != model.n_part_clusters
    {
        return Err(Discrepancy("cluster counts".into()));
    }
    if fresh.n_observations != model.n_observations {
        return Err(Discrepancy("total observation count N".into()));
    }
    for r in 0..fresh.n_instance_clusters {
        for c in 0..fresh.n_part_clusters {
            if fresh.cell(r, c) != model.cell(r, c) {
                return Err(Discrepancy(format!(
                    "cell ({r},{c}): stored {} recomputed {}",
                    model.cell(r, c),
                    fresh.cell(r, c)
                )));
            }
        }
    }
    let checks: [(&str, &[u64], &[u64]); 5] = [
        ("instance cluster total", &model.row_totals, &fresh.row_totals),
        ("part cluster total", &model.col_totals, &fresh.col_totals),
        ("instance cluster size", &model.row_sizes, &fresh.row_sizes),
        ("part cluster size", &model.col_sizes, &fresh.col_sizes),
        ("instance count n_i", &model.instance_counts, &fresh.instance_counts),
    ];
    for (what, stored, recomputed) in checks {
        if let Some(i) = stored.iter().zip(recomputed).position(|(a, b)| a != b) {
            return Err(Discrepancy(format!(
                "{what} {i}: stored {} recomputed {}",
                stored[i], recomputed[i]
            )));
        }
        if stored.len() != recomputed.len() {
            return Err(Discrepancy(format!("{what} length")));
        }
    }
    if fresh.part_profiles != model.part_profiles {
        return Err(Discrepancy("part profiles".into()));
    }
    if fresh.value_profiles != model.value_profiles {
        return Err(Discrepancy("value profiles".into()));
    }
    Ok(())
}

#[cfg(test)]
impl CoclusterModel {
    pub(crate) fn corrupt_cell(&mut self, gu: usize, gp: usize) {
        self.cells[gu * self.n_part_clusters + gp] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetBuilder, Schema, Variable};
    use crate::synthetic::random_mixed as random_dataset;

    fn small() -> Dataset {
        let schema = Schema::new(vec![
            Variable::new("x", VariableKind::Numeric),
            Variable::new("c", VariableKind::Categorical),
        ])
        .unwrap();
        let mut b = DatasetBuilder::new(schema);
        let toks = ["a", "b", "a", "c", "b", "c"];
        for (i, tok) in toks.iter().enumerate() {
            let id = b.add_instance(&format!("i{i}"));
            b.push_numeric(id, 0, i as f64).unwrap();
            b.push_categorical(id, 1, tok).unwrap();
            if i % 2 == 0 {
                b.push_categorical(id, 1, "a").unwrap();
            }
        }
        b.build()
    }

    #[test]
    fn single_cell_holds_everything() {
        let ds = small();
        let parts = PartitionSet::equal_frequency(&ds, 2).unwrap();
        let m = CoclusterModel::single_cluster(&ds, parts).unwrap();
        assert_eq!(m.cells(), &[ds.n_observations() as u64]);
        assert!(verify_counts(&m, &ds).is_ok());
    }

    #[test]
    fn singletons_match_raw_tally() {
        let ds = small();
        let parts = PartitionSet::equal_frequency(&ds, 3).unwrap();
        let m = CoclusterModel::singletons(&ds, parts.clone()).unwrap();
        let mut tally = vec![0u64; ds.n_instances() * parts.n_parts()];
        for o in ds.observations() {
            let p = parts.global_part_of(o.variable as usize, o.value);
            tally[o.instance as usize * parts.n_parts() + p] += 1;
        }
        assert_eq!(m.cells(), &tally[..]);
    }

    #[test]
    fn gaps_in_labels_rejected() {
        let ds = small();
        let parts = PartitionSet::equal_frequency(&ds, 2).unwrap();
        let j = parts.n_parts();
        let err = CoclusterModel::build(&ds, parts, vec![0, 0, 2, 2, 0, 0], vec![0; j]).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
        assert_eq!(densify(&[5, 2, 5, 9]), vec![1, 0, 1, 2]);
    }

    #[test]
    fn row_merge_is_elementwise_sum() {
        let ds = small();
        let parts = PartitionSet::equal_frequency(&ds, 3).unwrap();
        let m = CoclusterModel::singletons(&ds, parts).unwrap();
        let g_p = m.n_part_clusters();
        let next = m.with_move(&Move::MergeInstanceClusters { a: 1, b: 3 }).unwrap();
        assert_eq!(next.n_instance_clusters(), m.n_instance_clusters() - 1);
        for c in 0..g_p {
            assert_eq!(next.cell(1, c), m.cell(1, c) + m.cell(3, c));
        }
        assert!(verify_counts(&next, &ds).is_ok());
    }

    #[test]
    fn invalid_moves_leave_model_unchanged() {
        let ds = small();
        let parts = PartitionSet::equal_frequency(&ds, 3).unwrap();
        let mut m = CoclusterModel::singletons(&ds, parts).unwrap();
        let before = m.clone();
        for mv in [
            Move::MergeInstanceClusters { a: 2, b: 2 },
            Move::MergePartClusters { a: 0, b: 99 },
            Move::MovePart { part: 0, to: 0 },
            Move::MergeParts {
                variable: 0,
                first: 0,
                second: 2,
            },
            Move::MoveValue {
                variable: 0,
                token: 0,
                to: 1,
            },
        ] {
            assert!(matches!(m.apply_move(&mv), Err(Error::Structural(_))), "{mv}");
            assert!(matches!(m.move_effect(&mv), Err(Error::Structural(_))), "{mv}");
            assert_eq!(m, before);
        }
    }

    #[test]
    fn corrupted_cell_is_reported() {
        let ds = small();
        let parts = PartitionSet::equal_frequency(&ds, 2).unwrap();
        let mut m = CoclusterModel::singletons(&ds, parts).unwrap();
        m.corrupt_cell(2, 1);
        let err = verify_counts(&m, &ds).unwrap_err();
        assert!(err.0.contains("cell (2,1)"), "{err}");
    }

    /// Every candidate move applied incrementally equals a rebuild.
    #[test]
    fn incremental_equals_rebuild_for_all_candidates() {
        for seed in 0..30 {
            let ds = random_dataset(seed, 8, 3, 4);
            let parts = PartitionSet::equal_frequency(&ds, 3).unwrap();
            let n_inst = ds.n_instances();
            let inst: Vec<usize> = (0..n_inst).map(|i| (i * 7 + seed as usize) % 3.min(n_inst)).collect();
            let inst = densify(&inst);
            let part: Vec<usize> = densify(&(0..parts.n_parts()).map(|p| p % 3).collect::<Vec<_>>());
            let m = CoclusterModel::build(&ds, parts, inst, part).unwrap();
            for mv in m.candidate_moves() {
                let next = m.with_move(&mv).unwrap();
                let rebuilt = CoclusterModel::build(
                    &ds,
                    PartitionSet::new(&ds, next.partitions().variables().to_vec()).unwrap(),
                    next.instance_assignment().to_vec(),
                    next.part_assignment().to_vec(),
                )
                .unwrap();
                assert_eq!(next, rebuilt, "seed {seed} move {mv}");
            }
        }
    }

    #[test]
    fn cell_multiset_invariant_under_relabeling() {
        let ds = small();
        let parts = PartitionSet::equal_frequency(&ds, 2).unwrap();
        let j = parts.n_parts();
        let a = CoclusterModel::build(&ds, parts.clone(), vec![0, 1, 0, 1, 2, 2], (0..j).map(|p| p % 2).collect())
            .unwrap();
        let b = CoclusterModel::build(&ds, parts, vec![2, 0, 2, 0, 1, 1], (0..j).map(|p| 1 - p % 2).collect())
            .unwrap();
        let mut ca = a.cells().to_vec();
        let mut cb = b.cells().to_vec();
        ca.sort_unstable();
        cb.sort_unstable();
        assert_eq!(ca, cb);
    }
}
