//! Interpretation of a fitted model: mutual-information contributions of the
//! cells, cluster compositions, a JSON model document, an SVG heatmap and a
//! plain-text summary.

mod document;
mod svg;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::criterion::{Criterion, CriterionOptions, CriterionValue};
use crate::dataset::Dataset;
use crate::model::CoclusterModel;

pub use document::{export_json, import_json, ImportedModel, ModelDocument, FORMAT_NAME, FORMAT_VERSION};
pub use svg::{render_heatmap_svg, HeatmapOptions};

/// Per-cell contributions `p ln(p / (p_u p_p))` in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutualInformation {
    /// `[instance cluster][part cluster]`.
    pub values: Vec<Vec<f64>>,
    /// Cells holding no observation; their value is exactly 0.
    pub empty: Vec<Vec<bool>>,
}

impl MutualInformation {
    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    /// Largest absolute contribution.
    pub fn scale(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mutual-information contribution of every cell of the cluster grid.
pub fn mutual_information_matrix(model: &CoclusterModel) -> MutualInformation {
    let (g_u, g_p) = (model.n_instance_clusters(), model.n_part_clusters());
    let n = model.n_observations();
    let mut values = vec![vec![0.0; g_p]; g_u];
    let mut empty = vec![vec![false; g_p]; g_u];
    for r in 0..g_u {
        for c in 0..g_p {
            let cell = model.cell(r, c);
            if cell == 0 {
                empty[r][c] = true;
                continue;
            }
            let joint = cell as u128 * n as u128;
            let indep = model.row_totals()[r] as u128 * model.col_totals()[c] as u128;
            let p = cell as f64 / n as f64;
            values[r][c] = if joint == indep {
                0.0
            } else {
                p * (joint as f64 / indep as f64).ln()
            };
        }
    }
    MutualInformation { values, empty }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSummary {
    /// Global part index.
    pub part: usize,
    pub variable: String,
    pub label: String,
    pub observations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartClusterSummary {
    pub cluster: usize,
    pub observations: u64,
    pub parts: Vec<PartSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceClusterSummary {
    pub cluster: usize,
    pub size: usize,
    pub observations: u64,
    pub members: Vec<String>,
    /// Observation count `n_i.` of each member, aligned with `members`.
    pub member_observations: Vec<u64>,
    /// Part clusters with a positive contribution, strongest first.
    pub top_part_clusters: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoclusterReport {
    pub cells: Vec<Vec<u64>>,
    pub mutual_information: MutualInformation,
    pub instance_clusters: Vec<InstanceClusterSummary>,
    pub part_clusters: Vec<PartClusterSummary>,
    pub criterion: CriterionValue,
}

impl CoclusterReport {
    pub fn n_instance_clusters(&self) -> usize {
        self.cells.len()
    }

    pub fn n_part_clusters(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    /// Part cluster holding the part with this label.
    pub fn part_cluster_of(&self, label: &str) -> Option<usize> {
        self.part_clusters
            .iter()
            .find(|pc| pc.parts.iter().any(|p| p.label == label))
            .map(|pc| pc.cluster)
    }

    /// Plain-text description for terminals.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let c = &self.criterion;
        let _ = writeln!(s, "criterion {:.6} (prior {:.6}, likelihood {:.6})", c.total, c.prior, c.likelihood);
        for t in &c.terms {
            let _ = writeln!(s, "  {:<30} {:.6}", t.label, t.value);
        }
        let _ = writeln!(
            s,
            "{} instance clusters x {} part clusters, mutual information {:.6} nats",
            self.n_instance_clusters(),
            self.n_part_clusters(),
            self.mutual_information.total()
        );
        let _ = writeln!(s);
        for ic in &self.instance_clusters {
            let _ = writeln!(
                s,
                "instance cluster I{} : {} instances, {} observations",
                ic.cluster, ic.size, ic.observations
            );
            for &(pc, mi) in ic.top_part_clusters.iter().take(3) {
                let labels: Vec<&str> = self.part_clusters[pc]
                    .parts
                    .iter()
                    .map(|p| p.label.as_str())
                    .collect();
                let _ = writeln!(s, "  P{pc} ({mi:+.4}): {}", labels.join(" "));
            }
        }
        let _ = writeln!(s);
        for pc in &self.part_clusters {
            let _ = writeln!(s, "part cluster P{} : {} observations", pc.cluster, pc.observations);
            for p in &pc.parts {
                let _ = writeln!(s, "  {} ({})", p.label, p.observations);
            }
        }
        s
    }
}

/// Builds the full report for a model fitted on `dataset`.
pub fn cluster_summaries(model: &CoclusterModel, dataset: &Dataset, options: CriterionOptions) -> CoclusterReport {
    let criterion = Criterion::for_model(model, options).evaluate(model);
    summaries_with(model, dataset.schema(), dataset.instances(), criterion)
}

pub(crate) fn summaries_with(
    model: &CoclusterModel,
    schema: &crate::dataset::Schema,
    instances: &[String],
    criterion: CriterionValue,
) -> CoclusterReport {
    let (g_u, g_p) = (model.n_instance_clusters(), model.n_part_clusters());
    let mi = mutual_information_matrix(model);
    let cells = (0..g_u)
        .map(|r| (0..g_p).map(|c| model.cell(r, c)).collect())
        .collect();
    let mut instance_clusters: Vec<InstanceClusterSummary> = (0..g_u)
        .map(|r| {
            let mut top: Vec<(usize, f64)> = (0..g_p)
                .filter(|&c| mi.values[r][c] > 0.0)
                .map(|c| (c, mi.values[r][c]))
                .collect();
            top.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            InstanceClusterSummary {
                cluster: r,
                size: model.row_sizes()[r] as usize,
                observations: model.row_totals()[r],
                members: Vec::new(),
                member_observations: Vec::new(),
                top_part_clusters: top,
            }
        })
        .collect();
    for (i, &r) in model.instance_assignment().iter().enumerate() {
        instance_clusters[r].members.push(instances[i].clone());
        instance_clusters[r]
            .member_observations
            .push(model.instance_counts()[i]);
    }
    let partitions = model.partitions();
    let mut part_clusters: Vec<PartClusterSummary> = (0..g_p)
        .map(|c| PartClusterSummary {
            cluster: c,
            observations: model.col_totals()[c],
            parts: Vec::new(),
        })
        .collect();
    for (p, &c) in model.part_assignment().iter().enumerate() {
        let (k, _) = partitions.locate(p);
        part_clusters[c].parts.push(PartSummary {
            part: p,
            variable: schema.name(k).to_string(),
            label: partitions.part_label(schema, p),
            observations: partitions.part_count(p),
        });
    }
    CoclusterReport {
        cells,
        mutual_information: mi,
        instance_clusters,
        part_clusters,
        criterion,
    }
}

#[cfg(test)]
mod tests;
