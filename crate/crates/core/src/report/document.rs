use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::criterion::{Criterion, CriterionOptions, CriterionValue};
use crate::dataset::{Schema, VariableKind};
use crate::error::{Error, Result};
use crate::model::CoclusterModel;
use crate::partition::{IntervalPartition, PartitionSet, ValueGrouping, VariablePartition};

use super::{mutual_information_matrix, summaries_with, CoclusterReport};

pub const FORMAT_NAME: &str = "coclust-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PartitionRecord {
    Intervals { boundaries: Vec<f64> },
    Groups { groups: Vec<Vec<u32>> },
    Excluded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableRecord {
    pub name: String,
    pub kind: VariableKind,
    /// Dictionary of a categorical variable, in token-id order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tokens: Vec<String>,
    /// `n_v` per token (categorical) or empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub value_counts: Vec<u64>,
    pub partition: PartitionRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartRecord {
    pub index: usize,
    pub variable: String,
    pub label: String,
    pub observations: u64,
    pub cluster: usize,
}

/// Versioned on-disk form of a fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub schema: Schema,
    pub instances: Vec<String>,
    pub instance_observations: Vec<u64>,
    pub variables: Vec<VariableRecord>,
    pub parts: Vec<PartRecord>,
    pub instance_clusters: Vec<usize>,
    pub cells: Vec<Vec<u64>>,
    /// `[part][instance cluster]`.
    pub part_profiles: Vec<Vec<u64>>,
    /// `[variable][token][instance cluster]`, empty for numeric variables.
    pub value_profiles: Vec<Vec<Vec<u64>>>,
    pub criterion_options: CriterionOptions,
    pub criterion: CriterionValue,
    pub mutual_information: Vec<Vec<f64>>,
}

/// A model read back from its document.
#[derive(Clone, Debug)]
pub struct ImportedModel {
    pub schema: Schema,
    pub instances: Vec<String>,
    pub model: CoclusterModel,
    pub options: CriterionOptions,
    /// Criterion as stored in the document.
    pub stored: CriterionValue,
}

impl ImportedModel {
    /// Recomputes the criterion from the imported counts.
    pub fn recompute(&self) -> CriterionValue {
        Criterion::for_model(&self.model, self.options).evaluate(&self.model)
    }

    /// Label of the first criterion term whose bits differ from the stored one.
    pub fn first_divergent_term(&self) -> Option<String> {
        let fresh = self.recompute();
        for (a, b) in fresh.terms.iter().zip(&self.stored.terms) {
            if a.label != b.label || a.value.to_bits() != b.value.to_bits() {
                return Some(a.label.clone());
            }
        }
        if fresh.terms.len() != self.stored.terms.len() {
            return Some("term list".into());
        }
        if fresh.total.to_bits() != self.stored.total.to_bits() {
            return Some("total".into());
        }
        None
    }

    pub fn report(&self) -> CoclusterReport {
        summaries_with(&self.model, &self.schema, &self.instances, self.recompute())
    }
}

impl ModelDocument {
    pub fn new(
        model: &CoclusterModel,
        schema: &Schema,
        instances: &[String],
        options: CriterionOptions,
    ) -> Self {
        let partitions = model.partitions();
        let (g_u, g_p) = (model.n_instance_clusters(), model.n_part_clusters());
        let variables = (0..partitions.n_variables())
            .map(|k| {
                let (tokens, partition) = match partitions.variable(k) {
                    VariablePartition::Intervals(p) => (
                        Vec::new(),
                        PartitionRecord::Intervals {
                            boundaries: p.boundaries().to_vec(),
                        },
                    ),
                    VariablePartition::Groups(g) => (
                        g.tokens().to_vec(),
                        PartitionRecord::Groups {
                            groups: g.groups().to_vec(),
                        },
                    ),
                    VariablePartition::Excluded => (Vec::new(), PartitionRecord::Excluded),
                };
                VariableRecord {
                    name: schema.name(k).to_string(),
                    kind: partitions.kind(k),
                    tokens,
                    value_counts: partitions.value_counts(k).to_vec(),
                    partition,
                }
            })
            .collect();
        let parts = (0..model.n_parts())
            .map(|p| PartRecord {
                index: p,
                variable: schema.name(partitions.locate(p).0).to_string(),
                label: partitions.part_label(schema, p),
                observations: partitions.part_count(p),
                cluster: model.part_assignment()[p],
            })
            .collect();
        ModelDocument {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            schema: schema.clone(),
            instances: instances.to_vec(),
            instance_observations: model.instance_counts().to_vec(),
            variables,
            parts,
            instance_clusters: model.instance_assignment().to_vec(),
            cells: (0..g_u)
                .map(|r| (0..g_p).map(|c| model.cell(r, c)).collect())
                .collect(),
            part_profiles: model.part_profiles().to_vec(),
            value_profiles: model.value_profiles().to_vec(),
            criterion_options: options,
            criterion: Criterion::for_model(model, options).evaluate(model),
            mutual_information: mutual_information_matrix(model).values,
        }
    }

    pub fn into_model(self) -> Result<ImportedModel> {
        let bad = |m: &str| Error::Document(m.to_string());
        if self.format != FORMAT_NAME {
            return Err(bad("not a co-clustering model document"));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Document(format!("unsupported document version {}", self.version)));
        }
        if self.variables.len() != self.schema.len() {
            return Err(bad("variable records do not match the schema"));
        }
        if self.instances.len() != self.instance_clusters.len()
            || self.instances.len() != self.instance_observations.len()
        {
            return Err(bad("instance lists have different lengths"));
        }
        let mut variables = Vec::with_capacity(self.variables.len());
        let mut kinds = Vec::with_capacity(self.variables.len());
        let mut value_counts = Vec::with_capacity(self.variables.len());
        for (k, v) in self.variables.into_iter().enumerate() {
            if v.name != self.schema.name(k) || v.kind != self.schema.kind(k) {
                return Err(Error::Document(format!("variable record {k} does not match the schema")));
            }
            variables.push(match (v.kind, v.partition) {
                (VariableKind::Numeric, PartitionRecord::Intervals { boundaries }) => {
                    VariablePartition::Intervals(IntervalPartition::new(boundaries)?)
                }
                (VariableKind::Categorical, PartitionRecord::Groups { groups }) => {
                    VariablePartition::Groups(ValueGrouping::new(Arc::new(v.tokens), groups)?)
                }
                (_, PartitionRecord::Excluded) => VariablePartition::Excluded,
                _ => return Err(Error::Document(format!("partition of {:?} has the wrong type", v.name))),
            });
            kinds.push(v.kind);
            value_counts.push(v.value_counts);
        }
        let mut parts = self.parts;
        parts.sort_by_key(|p| p.index);
        let part_counts = parts.iter().map(|p| p.observations).collect();
        let part_cluster = parts.iter().map(|p| p.cluster).collect();
        let partitions = PartitionSet::from_parts(variables, kinds, part_counts, value_counts)?;
        let g_p = self.cells.first().map_or(0, Vec::len);
        if self.cells.iter().any(|r| r.len() != g_p) {
            return Err(bad("cell matrix is ragged"));
        }
        let model = CoclusterModel::from_stored(
            partitions,
            self.instance_clusters,
            part_cluster,
            self.cells.into_iter().flatten().collect(),
            self.instance_observations,
            self.part_profiles,
            self.value_profiles,
        )?;
        Ok(ImportedModel {
            schema: self.schema,
            instances: self.instances,
            model,
            options: self.criterion_options,
            stored: self.criterion,
        })
    }
}

/// Pretty-printed JSON document for a fitted model.
pub fn export_json(model: &CoclusterModel, schema: &Schema, instances: &[String], options: CriterionOptions) -> String {
    let doc = ModelDocument::new(model, schema, instances, options);
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

pub fn import_json(text: &str) -> Result<ImportedModel> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    doc.into_model()
}
