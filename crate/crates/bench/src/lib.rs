//! Shared fixtures for the benchmarks.

use coclust::dataset::{parse_wide_table, WideOptions};
use coclust::synthetic::{planted_blocks, PlantedConfig};
use coclust::Dataset;

pub fn iris() -> Dataset {
    let text = include_str!("../../../data/iris.csv");
    parse_wide_table(text, None, &WideOptions::default()).expect("bundled iris parses")
}

/// Planted co-clusters with `instances` rows over ten variables.
pub fn planted(instances: usize) -> Dataset {
    planted_blocks(&PlantedConfig {
        instances,
        ..PlantedConfig::default()
    })
    .dataset
}
