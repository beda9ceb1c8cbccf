//! Per-variable partitions: right-closed intervals for numeric variables and
//! value groups for categorical ones, with their observation counts.

use std::sync::Arc;

use crate::dataset::{Dataset, Schema, Value, VariableKind};
use crate::error::{Error, Result};

/// Intervals `]-inf;b1], ]b1;b2], ..., ]b_last;+inf[`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalPartition {
    boundaries: Vec<f64>,
}

impl IntervalPartition {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::parameter("interval boundaries must be finite"));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parameter("interval boundaries must be strictly increasing"));
        }
        Ok(IntervalPartition { boundaries })
    }

    pub fn single() -> Self {
        IntervalPartition { boundaries: Vec::new() }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn n_parts(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn part_of(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b < x)
    }

    /// Lower (exclusive) and upper (inclusive) bounds of part `j`; `None` is
    /// the infinite end.
    pub fn bounds(&self, j: usize) -> (Option<f64>, Option<f64>) {
        let lo = if j == 0 { None } else { Some(self.boundaries[j - 1]) };
        let hi = self.boundaries.get(j).copied();
        (lo, hi)
    }

    fn merge_with_next(&mut self, j: usize) {
        self.boundaries.remove(j);
    }
}

/// Disjoint value groups covering every observed token of one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueGrouping {
    tokens: Arc<Vec<String>>,
    groups: Vec<Vec<u32>>,
    group_of: Vec<usize>,
}

impl ValueGrouping {
    pub fn new(tokens: Arc<Vec<String>>, groups: Vec<Vec<u32>>) -> Result<Self> {
        let mut group_of = vec![usize::MAX; tokens.len()];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::structural(format!("value group {g} is empty")));
            }
            for &t in members {
                let slot = group_of
                    .get_mut(t as usize)
                    .ok_or_else(|| Error::Domain(format!("token id {t} out of range")))?;
                if *slot != usize::MAX {
                    return Err(Error::structural(format!("token id {t} assigned twice")));
                }
                *slot = g;
            }
        }
        if let Some(t) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::structural(format!(
                "token {:?} is not assigned to a group",
                tokens[t]
            )));
        }
        let mut groups = groups;
        for g in &mut groups {
            g.sort_unstable();
        }
        Ok(ValueGrouping {
            tokens,
            groups,
            group_of,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn groups(&self) -> &[Vec<u32>] {
        &self.groups
    }

    pub fn n_parts(&self) -> usize {
        self.groups.len()
    }

    pub fn n_values(&self) -> usize {
        self.tokens.len()
    }

    pub fn group_of(&self, token: u32) -> usize {
        self.group_of[token as usize]
    }

    pub fn group_size(&self, j: usize) -> usize {
        self.groups[j].len()
    }

    fn merge(&mut self, keep: usize, drop: usize) {
        let moved = self.groups.remove(drop);
        self.groups[keep].extend(moved);
        self.groups[keep].sort_unstable();
        self.reindex();
    }

    /// Returns the index of the source group when it became empty and was removed.
    fn move_token(&mut self, token: u32, target: usize) -> Option<usize> {
        let source = self.group_of[token as usize];
        self.groups[source].retain(|&t| t != token);
        self.groups[target].push(token);
        self.groups[target].sort_unstable();
        let removed = if self.groups[source].is_empty() {
            self.groups.remove(source);
            Some(source)
        } else {
            None
        };
        self.reindex();
        removed
    }

    fn reindex(&mut self) {
        for (g, members) in self.groups.iter().enumerate() {
            for &t in members {
                self.group_of[t as usize] = g;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VariablePartition {
    Intervals(IntervalPartition),
    Groups(ValueGrouping),
    /// Variable without observations; it takes no part in the model.
    Excluded,
}

impl VariablePartition {
    pub fn n_parts(&self) -> usize {
        match self {
            VariablePartition::Intervals(p) => p.n_parts(),
            VariablePartition::Groups(g) => g.n_parts(),
            VariablePartition::Excluded => 0,
        }
    }
}

/// A value to locate inside a variable's partition.
#[derive(Clone, Copy, Debug)]
pub enum PartValue<'a> {
    Number(f64),
    Token(&'a str),
}

/// Equal-frequency discretization into at most `parts` intervals.
///
/// Each of the `parts - 1` cut targets `i * n / parts` snaps to the nearest
/// gap between consecutive distinct sorted values (ties go to the later gap);
/// the boundary is the midpoint of that gap. Tied values are never split.
pub fn equal_frequency_intervals(values: &[f64], parts: usize) -> Result<IntervalPartition> {
    if parts < 1 {
        return Err(Error::parameter("part count must be at least 1"));
    }
    if values.is_empty() {
        return Err(Error::parameter("cannot discretize an empty value set"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // (cumulative count up to and including the lower value, midpoint)
    let gaps: Vec<(usize, f64)> = sorted
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < w[1])
        .map(|(i, w)| (i + 1, w[0] + (w[1] - w[0]) / 2.0))
        .collect();
    let mut boundaries: Vec<f64> = Vec::new();
    let mut last_gap: Option<usize> = None;
    for i in 1..parts {
        if gaps.is_empty() {
            break;
        }
        let target = (i * n) as f64 / parts as f64;
        let pos = gaps.partition_point(|&(c, _)| (c as f64) < target);
        let best = match (pos.checked_sub(1), gaps.get(pos)) {
            (Some(lo), Some(_)) => {
                let d_lo = target - gaps[lo].0 as f64;
                let d_hi = gaps[pos].0 as f64 - target;
                if d_lo < d_hi {
                    lo
                } else {
                    pos
                }
            }
            (Some(lo), None) => lo,
            (None, _) => pos,
        };
        if last_gap.is_some_and(|g| best <= g) {
            continue;
        }
        last_gap = Some(best);
        boundaries.push(gaps[best].1);
    }
    IntervalPartition::new(boundaries)
}

/// Groups categorical values into at most `parts` groups of balanced
/// frequency: values in decreasing count order (ties by token index) go to
/// the currently lightest group (ties by group index).
pub fn frequency_balanced_groups(
    tokens: Arc<Vec<String>>,
    value_counts: &[u64],
    parts: usize,
) -> Result<ValueGrouping> {
    if parts < 1 {
        return Err(Error::parameter("part count must be at least 1"));
    }
    if value_counts.is_empty() {
        return Err(Error::parameter("cannot group an empty value set"));
    }
    if value_counts.len() != tokens.len() {
        return Err(Error::parameter("value counts do not match the token list"));
    }
    let n_groups = parts.min(value_counts.len());
    let mut order: Vec<u32> = (0..value_counts.len() as u32).collect();
    order.sort_by(|&a, &b| {
        value_counts[b as usize]
            .cmp(&value_counts[a as usize])
            .then(a.cmp(&b))
    });
    let mut groups = vec![Vec::new(); n_groups];
    let mut loads = vec![0u64; n_groups];
    for t in order {
        let g = (0..n_groups)
            .min_by_key(|&g| (loads[g], g))
            .expect("at least one group");
        groups[g].push(t);
        loads[g] += value_counts[t as usize];
    }
    ValueGrouping::new(tokens, groups)
}

/// One partition per variable plus the part and value observation counts.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSet {
    variables: Vec<VariablePartition>,
    kinds: Vec<VariableKind>,
    offsets: Vec<usize>,
    part_counts: Vec<u64>,
    value_counts: Vec<Vec<u64>>,
}

impl PartitionSet {
    /// Checks `variables` against the dataset and tallies the counts.
    pub fn new(dataset: &Dataset, variables: Vec<VariablePartition>) -> Result<Self> {
        let schema = dataset.schema();
        if variables.len() != schema.len() {
            return Err(Error::structural(format!(
                "{} partitions for {} variables",
                variables.len(),
                schema.len()
            )));
        }
        let per_var = dataset.observations_per_variable();
        let mut value_counts = Vec::with_capacity(schema.len());
        for (k, p) in variables.iter().enumerate() {
            let kind = schema.kind(k);
            match (p, kind) {
                (VariablePartition::Excluded, _) if per_var[k] == 0 => {}
                (VariablePartition::Excluded, _) => {
                    return Err(Error::structural(format!(
                        "variable {:?} has observations but is excluded",
                        schema.name(k)
                    )))
                }
                (_, _) if per_var[k] == 0 => {
                    return Err(Error::structural(format!(
                        "variable {:?} has no observations and must be excluded",
                        schema.name(k)
                    )))
                }
                (VariablePartition::Intervals(_), VariableKind::Numeric) => {}
                (VariablePartition::Groups(g), VariableKind::Categorical) => {
                    if g.n_values() != dataset.distinct_values(k) {
                        return Err(Error::structural(format!(
                            "grouping of {:?} covers {} values, dataset has {}",
                            schema.name(k),
                            g.n_values(),
                            dataset.distinct_values(k)
                        )));
                    }
                }
                _ => {
                    return Err(Error::structural(format!(
                        "partition kind does not match variable {:?}",
                        schema.name(k)
                    )))
                }
            }
            value_counts.push(match kind {
                VariableKind::Categorical => dataset.token_counts(k),
                VariableKind::Numeric => Vec::new(),
            });
        }
        let mut set = PartitionSet {
            kinds: (0..schema.len()).map(|k| schema.kind(k)).collect(),
            offsets: Vec::new(),
            part_counts: Vec::new(),
            variables,
            value_counts,
        };
        set.rebuild_offsets();
        set.part_counts = vec![0; set.n_parts()];
        for o in dataset.observations() {
            let g = set.global_part_of(o.variable as usize, o.value);
            set.part_counts[g] += 1;
        }
        if let Some(g) = set.part_counts.iter().position(|&c| c == 0) {
            let (k, j) = set.locate(g);
            return Err(Error::structural(format!(
                "part {j} of variable {:?} holds no observation",
                schema.name(k)
            )));
        }
        Ok(set)
    }

    /// Assembles a set from stored counts without a dataset (model import).
    pub(crate) fn from_parts(
        variables: Vec<VariablePartition>,
        kinds: Vec<VariableKind>,
        part_counts: Vec<u64>,
        value_counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let mut set = PartitionSet {
            variables,
            kinds,
            offsets: Vec::new(),
            part_counts,
            value_counts,
        };
        set.rebuild_offsets();
        if set.part_counts.len() != set.n_parts() {
            return Err(Error::structural("part count list does not match partitions"));
        }
        for (k, p) in set.variables.iter().enumerate() {
            if let VariablePartition::Groups(g) = p {
                if set.value_counts[k].len() != g.n_values() {
                    return Err(Error::structural("value count list does not match grouping"));
                }
                for (j, members) in g.groups().iter().enumerate() {
                    let sum: u64 = members.iter().map(|&t| set.value_counts[k][t as usize]).sum();
                    if sum != set.part_counts[set.offsets[k] + j] {
                        return Err(Error::structural("part count differs from its value counts"));
                    }
                }
            }
        }
        Ok(set)
    }

    /// Equal-frequency initialization with `parts` target parts per variable.
    pub fn equal_frequency(dataset: &Dataset, parts: usize) -> Result<Self> {
        let schema = dataset.schema();
        let per_var = dataset.observations_per_variable();
        let mut variables = Vec::with_capacity(schema.len());
        for (k, &observed) in per_var.iter().enumerate().take(schema.len()) {
            if observed == 0 {
                variables.push(VariablePartition::Excluded);
                continue;
            }
            variables.push(match schema.kind(k) {
                VariableKind::Numeric => VariablePartition::Intervals(equal_frequency_intervals(
                    &dataset.numeric_values(k),
                    parts,
                )?),
                VariableKind::Categorical => VariablePartition::Groups(frequency_balanced_groups(
                    Arc::new(dataset.dictionary(k).to_vec()),
                    &dataset.token_counts(k),
                    parts,
                )?),
            });
        }
        PartitionSet::new(dataset, variables)
    }

    fn rebuild_offsets(&mut self) {
        let mut offsets = Vec::with_capacity(self.variables.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for v in &self.variables {
            acc += v.n_parts();
            offsets.push(acc);
        }
        self.offsets = offsets;
    }

    pub fn variables(&self) -> &[VariablePartition] {
        &self.variables
    }

    pub fn variable(&self, k: usize) -> &VariablePartition {
        &self.variables[k]
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn kind(&self, k: usize) -> VariableKind {
        self.kinds[k]
    }

    pub fn kinds(&self) -> &[VariableKind] {
        &self.kinds
    }

    pub fn is_modeled(&self, k: usize) -> bool {
        !matches!(self.variables[k], VariablePartition::Excluded)
    }

    /// `J`, total part count.
    pub fn n_parts(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// `J_k`.
    pub fn parts_of(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn global_index(&self, k: usize, j: usize) -> usize {
        self.offsets[k] + j
    }

    /// `(variable, local part)` of a global part index.
    pub fn locate(&self, global: usize) -> (usize, usize) {
        let k = self.offsets.partition_point(|&o| o <= global) - 1;
        (k, global - self.offsets[k])
    }

    /// `n_.kj` per global part.
    pub fn part_counts(&self) -> &[u64] {
        &self.part_counts
    }

    pub fn part_count(&self, global: usize) -> u64 {
        self.part_counts[global]
    }

    /// `n_v` per token of categorical variable `k` (empty for numeric).
    pub fn value_counts(&self, k: usize) -> &[u64] {
        &self.value_counts[k]
    }

    pub fn all_value_counts(&self) -> &[Vec<u64>] {
        &self.value_counts
    }

    /// Number of values `m^(k)_j` in part `j` (0 for an interval).
    pub fn values_in_part(&self, k: usize, j: usize) -> usize {
        match &self.variables[k] {
            VariablePartition::Groups(g) => g.group_size(j),
            _ => 0,
        }
    }

    /// Modeled numeric variable count `K_n`.
    pub fn numeric_modeled(&self) -> usize {
        (0..self.variables.len())
            .filter(|&k| self.is_modeled(k) && self.kinds[k] == VariableKind::Numeric)
            .count()
    }

    /// `(V_k, J_k)` for each modeled categorical variable.
    pub fn categorical_modeled(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.variables.iter().enumerate().filter_map(|(k, v)| match v {
            VariablePartition::Groups(g) => Some((k, g.n_values(), g.n_parts())),
            _ => None,
        })
    }

    /// Local part index of a value; numeric lookup is a binary search.
    pub fn part_of(&self, k: usize, value: PartValue<'_>) -> Result<usize> {
        match (&self.variables[k], value) {
            (VariablePartition::Intervals(p), PartValue::Number(x)) => Ok(p.part_of(x)),
            (VariablePartition::Groups(g), PartValue::Token(t)) => g
                .tokens()
                .iter()
                .position(|s| s == t)
                .map(|id| g.group_of(id as u32))
                .ok_or_else(|| Error::Domain(format!("unseen token {t:?} for variable {k}"))),
            (VariablePartition::Excluded, _) => {
                Err(Error::Domain(format!("variable {k} is excluded from the model")))
            }
            _ => Err(Error::Domain(format!("value kind does not match variable {k}"))),
        }
    }

    /// Global part index of a stored observation value.
    pub fn global_part_of(&self, k: usize, value: Value) -> usize {
        let j = match (&self.variables[k], value) {
            (VariablePartition::Intervals(p), Value::Numeric(x)) => p.part_of(x),
            (VariablePartition::Groups(g), Value::Categorical(t)) => g.group_of(t),
            _ => panic!("observation does not match partition of variable {k}"),
        };
        self.offsets[k] + j
    }

    /// Merges parts `j` and `j2` of variable `k` into the lower index.
    pub fn merge_parts(&self, k: usize, j: usize, j2: usize) -> Result<PartitionSet> {
        let mut next = self.clone();
        next.merge_parts_mut(k, j, j2)?;
        Ok(next)
    }

    pub(crate) fn check_merge(&self, k: usize, j: usize, j2: usize) -> Result<(usize, usize)> {
        if k >= self.variables.len() {
            return Err(Error::structural(format!("no variable {k}")));
        }
        let jk = self.parts_of(k);
        if jk <= 1 {
            return Err(Error::structural(format!("variable {k} has a single part")));
        }
        let (lo, hi) = (j.min(j2), j.max(j2));
        if lo == hi || hi >= jk {
            return Err(Error::structural(format!(
                "invalid part pair ({j}, {j2}) for variable {k}"
            )));
        }
        if matches!(self.variables[k], VariablePartition::Intervals(_)) && hi != lo + 1 {
            return Err(Error::structural(format!(
                "intervals {lo} and {hi} of variable {k} are not adjacent"
            )));
        }
        Ok((lo, hi))
    }

    pub(crate) fn merge_parts_mut(&mut self, k: usize, j: usize, j2: usize) -> Result<()> {
        let (lo, hi) = self.check_merge(k, j, j2)?;
        match &mut self.variables[k] {
            VariablePartition::Intervals(p) => p.merge_with_next(lo),
            VariablePartition::Groups(g) => g.merge(lo, hi),
            VariablePartition::Excluded => unreachable!(),
        }
        let base = self.offsets[k];
        let moved = self.part_counts.remove(base + hi);
        self.part_counts[base + lo] += moved;
        self.rebuild_offsets();
        Ok(())
    }

    /// Moves `token` of categorical variable `k` into group `target`; an
    /// emptied source group is removed.
    pub fn move_value(&self, k: usize, token: u32, target: usize) -> Result<PartitionSet> {
        let mut next = self.clone();
        next.move_value_mut(k, token, target)?;
        Ok(next)
    }

    pub(crate) fn check_move_value(&self, k: usize, token: u32, target: usize) -> Result<usize> {
        let g = match self.variables.get(k) {
            Some(VariablePartition::Groups(g)) => g,
            Some(_) => {
                return Err(Error::structural(format!(
                    "variable {k} is not a categorical variable in the model"
                )))
            }
            None => return Err(Error::structural(format!("no variable {k}"))),
        };
        if token as usize >= g.n_values() {
            return Err(Error::Domain(format!("token id {token} out of range")));
        }
        if target >= g.n_parts() {
            return Err(Error::structural(format!("no group {target} in variable {k}")));
        }
        let source = g.group_of(token);
        if source == target {
            return Err(Error::structural(format!(
                "token {token} is already in group {target}"
            )));
        }
        Ok(source)
    }

    /// Returns the removed group index, if the source group emptied.
    pub(crate) fn move_value_mut(&mut self, k: usize, token: u32, target: usize) -> Result<Option<usize>> {
        let source = self.check_move_value(k, token, target)?;
        let n_v = self.value_counts[k][token as usize];
        let base = self.offsets[k];
        self.part_counts[base + source] -= n_v;
        self.part_counts[base + target] += n_v;
        let removed = match &mut self.variables[k] {
            VariablePartition::Groups(g) => g.move_token(token, target),
            _ => unreachable!(),
        };
        if let Some(r) = removed {
            debug_assert_eq!(self.part_counts[base + r], 0);
            self.part_counts.remove(base + r);
            self.rebuild_offsets();
        }
        Ok(removed)
    }

    /// Human readable part label, e.g. `PetalWidth]0.8;1.65]` or `Class{setosa}`.
    pub fn part_label(&self, schema: &Schema, global: usize) -> String {
        let (k, j) = self.locate(global);
        let name = schema.name(k);
        match &self.variables[k] {
            VariablePartition::Intervals(p) => {
                let (lo, hi) = p.bounds(j);
                let lo = lo.map_or_else(|| "-inf".to_string(), |x| format!("{x}"));
                match hi {
                    Some(h) => format!("{name}]{lo};{h}]"),
                    None => format!("{name}]{lo};+inf["),
                }
            }
            VariablePartition::Groups(g) => {
                let tokens: Vec<&str> = g.groups()[j]
                    .iter()
                    .map(|&t| g.tokens()[t as usize].as_str())
                    .collect();
                format!("{name}{{{}}}", tokens.join(", "))
            }
            VariablePartition::Excluded => unreachable!("excluded variables have no parts"),
        }
    }
}

/// A part described by its label.
#[derive(Clone, Debug, PartialEq)]
pub enum PartSpec {
    Interval {
        variable: usize,
        lower: Option<f64>,
        upper: Option<f64>,
    },
    Group {
        variable: usize,
        tokens: Vec<String>,
    },
}

/// Parses a label produced by [`PartitionSet::part_label`]. The variable name
/// is matched against the schema (longest name first).
pub fn parse_part_label(schema: &Schema, label: &str) -> Result<PartSpec> {
    let mut candidates: Vec<usize> = (0..schema.len())
        .filter(|&k| label.starts_with(schema.name(k)))
        .collect();
    candidates.sort_by_key(|&k| std::cmp::Reverse(schema.name(k).len()));
    let bad = || Error::Document(format!("malformed part label {label:?}"));
    let k = *candidates.first().ok_or_else(bad)?;
    let rest = &label[schema.name(k).len()..];
    match schema.kind(k) {
        VariableKind::Numeric => {
            let inner = rest.strip_prefix(']').ok_or_else(bad)?;
            let (inner, open_end) = if let Some(s) = inner.strip_suffix('[') {
                (s, true)
            } else {
                (inner.strip_suffix(']').ok_or_else(bad)?, false)
            };
            let (lo, hi) = inner.split_once(';').ok_or_else(bad)?;
            let lower = match lo {
                "-inf" => None,
                s => Some(s.parse::<f64>().map_err(|_| bad())?),
            };
            let upper = match (hi, open_end) {
                ("+inf", true) => None,
                (s, false) => Some(s.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            };
            Ok(PartSpec::Interval {
                variable: k,
                lower,
                upper,
            })
        }
        VariableKind::Categorical => {
            let inner = rest
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(bad)?;
            Ok(PartSpec::Group {
                variable: k,
                tokens: inner.split(", ").map(str::to_string).collect(),
            })
        }
    }
}

impl PartitionSet {
    /// Structured description of a part, matching [`parse_part_label`].
    pub fn part_spec(&self, global: usize) -> PartSpec {
        let (k, j) = self.locate(global);
        match &self.variables[k] {
            VariablePartition::Intervals(p) => {
                let (lower, upper) = p.bounds(j);
                PartSpec::Interval {
                    variable: k,
                    lower,
                    upper,
                }
            }
            VariablePartition::Groups(g) => PartSpec::Group {
                variable: k,
                tokens: g.groups()[j]
                    .iter()
                    .map(|&t| g.tokens()[t as usize].clone())
                    .collect(),
            },
            VariablePartition::Excluded => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetBuilder, Variable};
    use proptest::prelude::*;

    fn tokens(names: &[&str]) -> Arc<Vec<String>> {
        Arc::new(names.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn equal_thirds() {
        let values: Vec<f64> = (1..=9).map(f64::from).collect();
        let p = equal_frequency_intervals(&values, 3).unwrap();
        assert_eq!(p.boundaries(), &[3.5, 6.5]);
        let mut counts = [0; 3];
        for v in values {
            counts[p.part_of(v)] += 1;
        }
        assert_eq!(counts, [3, 3, 3]);
    }

    #[test]
    fn single_part_and_caps() {
        assert_eq!(equal_frequency_intervals(&[1.0, 5.0, 2.0], 1).unwrap().n_parts(), 1);
        let p = equal_frequency_intervals(&[1.0, 1.0, 2.0, 2.0], 10).unwrap();
        assert_eq!(p.boundaries(), &[1.5]);
        let p = equal_frequency_intervals(&[4.0; 6], 3).unwrap();
        assert_eq!(p.n_parts(), 1);
        assert!(equal_frequency_intervals(&[1.0], 0).is_err());
    }

    #[test]
    fn ties_never_split() {
        let values = [1.0, 2.0, 2.0, 2.0, 2.0, 3.0];
        let p = equal_frequency_intervals(&values, 2).unwrap();
        for b in p.boundaries() {
            assert!(!values.contains(b));
        }
    }

    #[test]
    fn right_closed_lookup() {
        let p = IntervalPartition::new(vec![3.5, 6.5]).unwrap();
        assert_eq!(p.part_of(3.5), 0);
        assert_eq!(p.part_of(3.6), 1);
        assert_eq!(p.part_of(100.0), 2);
        assert_eq!(p.part_of(-1e9), 0);
    }

    #[test]
    fn balanced_groups() {
        let g = frequency_balanced_groups(tokens(&["a", "b", "c"]), &[5, 3, 2], 2).unwrap();
        assert_eq!(g.groups(), &[vec![0], vec![1, 2]]);
        let g = frequency_balanced_groups(tokens(&["a", "b", "c"]), &[5, 3, 2], 1).unwrap();
        assert_eq!(g.n_parts(), 1);
        let g = frequency_balanced_groups(tokens(&["x"]), &[4], 3).unwrap();
        assert_eq!(g.groups(), &[vec![0]]);
        assert!(frequency_balanced_groups(tokens(&["x"]), &[4], 0).is_err());
    }

    /// Exhaustive check of the greedy answer on the {a:5,b:3,c:2} example.
    #[test]
    fn balanced_groups_minimize_imbalance() {
        let counts = [5u64, 3, 2];
        let mut best = u64::MAX;
        for mask in 1u32..7 {
            let a: u64 = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| counts[i]).sum();
            let b = 10 - a;
            best = best.min(a.abs_diff(b));
        }
        assert_eq!(best, 0);
    }

    fn mixed_dataset() -> Dataset {
        let schema = Schema::new(vec![
            Variable::new("x", VariableKind::Numeric),
            Variable::new("c", VariableKind::Categorical),
        ])
        .unwrap();
        let mut b = DatasetBuilder::new(schema);
        for i in 0..9 {
            let id = b.add_instance(&format!("r{i}"));
            b.push_numeric(id, 0, (i + 1) as f64).unwrap();
            let tok = ["a", "a", "a", "a", "a", "b", "b", "b", "c"][i];
            b.push_categorical(id, 1, tok).unwrap();
        }
        b.build()
    }

    #[test]
    fn partition_set_counts() {
        let ds = mixed_dataset();
        let set = PartitionSet::equal_frequency(&ds, 3).unwrap();
        assert_eq!(set.n_parts(), 6);
        assert_eq!(set.part_counts(), &[3, 3, 3, 5, 3, 1]);
        assert_eq!(set.locate(4), (1, 1));
        assert_eq!(set.part_of(1, PartValue::Token("c")).unwrap(), 2);
        assert!(matches!(
            set.part_of(1, PartValue::Token("zzz")),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn merges() {
        let ds = mixed_dataset();
        let set = PartitionSet::equal_frequency(&ds, 3).unwrap();
        let merged = set.merge_parts(0, 0, 1).unwrap();
        assert_eq!(merged.parts_of(0), 2);
        assert_eq!(&merged.part_counts()[..2], &[6, 3]);
        assert!(matches!(set.merge_parts(0, 0, 2), Err(Error::Structural(_))));
        let cat = set.merge_parts(1, 2, 0).unwrap();
        assert_eq!(cat.part_counts(), &[3, 3, 3, 6, 3]);
        let single = merged.merge_parts(0, 0, 1).unwrap();
        assert_eq!(single.parts_of(0), 1);
        assert!(single.merge_parts(0, 0, 1).is_err());
    }

    #[test]
    fn move_value_semantics() {
        let toks = tokens(&["a", "b", "c"]);
        let schema = Schema::new(vec![Variable::new("c", VariableKind::Categorical)]).unwrap();
        let mut bld = DatasetBuilder::new(schema);
        let i = bld.add_instance("i");
        for t in ["a", "b", "c"] {
            bld.push_categorical(i, 0, t).unwrap();
        }
        let ds = bld.build();
        let g = ValueGrouping::new(toks, vec![vec![0], vec![1, 2]]).unwrap();
        let set = PartitionSet::new(&ds, vec![VariablePartition::Groups(g)]).unwrap();
        let moved = set.move_value(0, 1, 0).unwrap();
        match moved.variable(0) {
            VariablePartition::Groups(g) => assert_eq!(g.groups(), &[vec![0, 1], vec![2]]),
            _ => unreachable!(),
        }
        let back = moved.move_value(0, 1, 1).unwrap();
        assert_eq!(back, set);
        let emptied = moved.move_value(0, 2, 0).unwrap();
        assert_eq!(emptied.parts_of(0), 1);
        assert_eq!(emptied.part_counts(), &[3]);
        assert!(set.move_value(0, 1, 1).is_err());
    }

    #[test]
    fn move_value_rejects_numeric() {
        let ds = mixed_dataset();
        let set = PartitionSet::equal_frequency(&ds, 3).unwrap();
        assert!(matches!(set.move_value(0, 0, 1), Err(Error::Structural(_))));
    }

    #[test]
    fn labels_round_trip() {
        let ds = mixed_dataset();
        let set = PartitionSet::equal_frequency(&ds, 3).unwrap();
        assert_eq!(set.part_label(ds.schema(), 0), "x]-inf;3.5]");
        assert_eq!(set.part_label(ds.schema(), 1), "x]3.5;6.5]");
        assert_eq!(set.part_label(ds.schema(), 2), "x]6.5;+inf[");
        assert_eq!(set.part_label(ds.schema(), 3), "c{a}");
        for g in 0..set.n_parts() {
            let label = set.part_label(ds.schema(), g);
            assert_eq!(parse_part_label(ds.schema(), &label).unwrap(), set.part_spec(g));
        }
    }

    proptest! {
        #[test]
        fn equal_frequency_is_permutation_invariant(
            mut values in proptest::collection::vec(-50i32..50, 1..60),
            parts in 1usize..8,
            seed in any::<u64>(),
        ) {
            let xs: Vec<f64> = values.iter().map(|&v| v as f64 / 4.0).collect();
            let a = equal_frequency_intervals(&xs, parts).unwrap();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..values.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                values.swap(i, (s >> 33) as usize % (i + 1));
            }
            let ys: Vec<f64> = values.iter().map(|&v| v as f64 / 4.0).collect();
            let b = equal_frequency_intervals(&ys, parts).unwrap();
            prop_assert_eq!(&a, &b);
            let mut distinct = xs.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            prop_assert!(a.n_parts() <= parts.min(distinct.len()));
            // every interval holds a value
            let mut hit = vec![false; a.n_parts()];
            for x in &xs { hit[a.part_of(*x)] = true; }
            prop_assert!(hit.iter().all(|&h| h));
        }
    }
}
