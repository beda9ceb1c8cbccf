use super::*;
use crate::dataset::{DatasetBuilder, Schema, Variable, VariableKind};
use crate::optimizer::{fit, OptimizerConfig};
use crate::partition::PartitionSet;
use crate::synthetic::random_mixed;

/// Two instance groups observing disjoint categorical variables.
fn diagonal(per: usize) -> (Dataset, CoclusterModel) {
    let schema = Schema::new(vec![
        Variable::new("a", VariableKind::Categorical),
        Variable::new("b", VariableKind::Categorical),
    ])
    .unwrap();
    let mut b = DatasetBuilder::new(schema);
    for i in 0..2 {
        let id = b.add_instance(&format!("r{i}"));
        for _ in 0..per {
            b.push_categorical(id, i as usize, "x").unwrap();
        }
    }
    let data = b.build();
    let parts = PartitionSet::equal_frequency(&data, 1).unwrap();
    let model = CoclusterModel::build(&data, parts, vec![0, 1], vec![0, 1]).unwrap();
    (data, model)
}

#[test]
fn diagonal_table_contributions() {
    let (_, model) = diagonal(50);
    let mi = mutual_information_matrix(&model);
    let half_ln2 = 0.5 * 2f64.ln();
    assert!((mi.values[0][0] - half_ln2).abs() < 1e-15);
    assert!((mi.values[1][1] - half_ln2).abs() < 1e-15);
    assert_eq!(mi.values[0][1], 0.0);
    assert!(mi.empty[0][1] && mi.empty[1][0]);
    assert!(!mi.empty[0][0]);
}

#[test]
fn independent_table_is_all_zero() {
    // cells 2,4 / 3,6 factorize exactly
    let schema = Schema::new(vec![
        Variable::new("a", VariableKind::Categorical),
        Variable::new("b", VariableKind::Categorical),
    ])
    .unwrap();
    let mut b = DatasetBuilder::new(schema);
    for (i, (na, nb)) in [(2, 4), (3, 6)].into_iter().enumerate() {
        let id = b.add_instance(&format!("r{i}"));
        for _ in 0..na {
            b.push_categorical(id, 0, "x").unwrap();
        }
        for _ in 0..nb {
            b.push_categorical(id, 1, "y").unwrap();
        }
    }
    let data = b.build();
    let parts = PartitionSet::equal_frequency(&data, 1).unwrap();
    let model = CoclusterModel::build(&data, parts, vec![0, 1], vec![0, 1]).unwrap();
    let mi = mutual_information_matrix(&model);
    assert!(mi.values.iter().flatten().all(|&v| v == 0.0));
    let report = cluster_summaries(&model, &data, CriterionOptions::default());
    let svg = render_heatmap_svg(&report, &HeatmapOptions::default());
    assert!(!svg.contains("#ff0000") && !svg.contains("#0000ff"));
    assert_eq!(svg.matches(r##"fill="#ffffff""##).count(), 4);
}

#[test]
fn mutual_information_is_non_negative() {
    for seed in 0..30 {
        let data = random_mixed(seed, 25, 3, 5);
        let parts = PartitionSet::equal_frequency(&data, 3).unwrap();
        let n_parts = parts.n_parts();
        let inst: Vec<usize> = (0..25).map(|i| i % 3).collect();
        let part: Vec<usize> = (0..n_parts).map(|p| p % 2.min(n_parts)).collect();
        let model = CoclusterModel::build(&data, parts, inst, crate::model::densify(&part)).unwrap();
        let mi = mutual_information_matrix(&model);
        assert!(mi.total() >= -1e-12, "seed {seed}: {}", mi.total());
    }
}

#[test]
fn null_model_report() {
    let data = random_mixed(4, 20, 3, 4);
    let parts = PartitionSet::equal_frequency(&data, 1).unwrap();
    let model = CoclusterModel::single_cluster(&data, parts).unwrap();
    let report = cluster_summaries(&model, &data, CriterionOptions::default());
    assert_eq!(report.instance_clusters.len(), 1);
    assert_eq!(report.instance_clusters[0].size, 20);
    assert_eq!(report.part_clusters.len(), 1);
    assert_eq!(report.mutual_information.values, vec![vec![0.0]]);
    let svg = render_heatmap_svg(&report, &HeatmapOptions::default());
    assert!(svg.contains(r##"fill="#ffffff""##));
}

#[test]
fn round_trip_is_bit_exact() {
    for seed in 0..6 {
        let data = random_mixed(seed, 40, 4, 6);
        let config = OptimizerConfig {
            grid: vec![2, 3],
            parallel: false,
            ..OptimizerConfig::default()
        };
        let r = fit(&data, &config).unwrap();
        let text = export_json(&r.model, data.schema(), data.instances(), config.criterion);
        let back = import_json(&text).unwrap();
        assert_eq!(back.model, r.model);
        crate::model::verify_counts(&back.model, &data).unwrap();
        assert_eq!(back.first_divergent_term(), None);
        assert_eq!(back.recompute().total.to_bits(), r.criterion.to_bits());
        let doc: ModelDocument = serde_json::from_str(&text).unwrap();
        let n: u64 = doc.cells.iter().flatten().sum();
        assert_eq!(n, data.n_observations() as u64);
        assert_eq!(export_json(&back.model, &back.schema, &back.instances, back.options), text);
    }
}

#[test]
fn tampered_document_is_rejected() {
    let (data, model) = diagonal(5);
    let text = export_json(&model, data.schema(), data.instances(), CriterionOptions::default());
    let mut doc: ModelDocument = serde_json::from_str(&text).unwrap();
    doc.cells[0][0] += 1;
    assert!(doc.into_model().is_err());
    assert!(import_json(&text[..text.len() / 2]).is_err());
    let mut doc: ModelDocument = serde_json::from_str(&text).unwrap();
    doc.criterion.terms[3].value += 1.0;
    let imported = doc.into_model().unwrap();
    assert_eq!(imported.first_divergent_term().as_deref(), Some("prior.cluster-partitions"));
}

#[test]
fn labels_in_report_round_trip() {
    let data = random_mixed(9, 30, 4, 6);
    let parts = PartitionSet::equal_frequency(&data, 3).unwrap();
    let model = CoclusterModel::singletons(&data, parts).unwrap();
    let report = cluster_summaries(&model, &data, CriterionOptions::default());
    for pc in &report.part_clusters {
        for p in &pc.parts {
            let spec = crate::partition::parse_part_label(data.schema(), &p.label).unwrap();
            assert_eq!(spec, model.partitions().part_spec(p.part));
        }
    }
}

#[test]
fn heatmap_is_deterministic() {
    let data = random_mixed(2, 30, 3, 5);
    let r = fit(&data, &OptimizerConfig { grid: vec![3], parallel: false, ..OptimizerConfig::default() }).unwrap();
    let report = cluster_summaries(&r.model, &data, CriterionOptions::default());
    let a = render_heatmap_svg(&report, &HeatmapOptions::default());
    let b = render_heatmap_svg(&report, &HeatmapOptions::default());
    assert_eq!(a, b);
    let rects = a.matches("<rect").count();
    assert_eq!(rects, r.model.n_instance_clusters() * r.model.n_part_clusters());
}

#[test]
fn top_part_clusters_are_positive_and_sorted() {
    let (data, model) = diagonal(10);
    let report = cluster_summaries(&model, &data, CriterionOptions::default());
    assert_eq!(report.instance_clusters[0].top_part_clusters.len(), 1);
    assert_eq!(report.instance_clusters[0].top_part_clusters[0].0, 0);
    assert_eq!(report.instance_clusters[1].top_part_clusters[0].0, 1);
    assert!(report.summary_text().contains("instance cluster I0"));
}
