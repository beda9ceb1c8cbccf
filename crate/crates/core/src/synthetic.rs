//! Seeded synthetic datasets: small random mixed tables for property tests
//! and planted block structures for scaling runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, DatasetBuilder, Schema, Variable, VariableKind};

/// Random mixed table: `instances` rows, `variables` columns alternating
/// numeric/categorical (first kind chosen by the seed), each with at most
/// `max_distinct` distinct values. Cells are missing or hold two values now
/// and then; every variable keeps at least one observation.
pub fn random_mixed(seed: u64, instances: usize, variables: usize, max_distinct: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_numeric = rng.random_bool(0.5);
    let vars: Vec<Variable> = (0..variables)
        .map(|k| {
            let numeric = (k % 2 == 0) == first_numeric;
            let kind = if numeric {
                VariableKind::Numeric
            } else {
                VariableKind::Categorical
            };
            Variable::new(format!("v{k}"), kind)
        })
        .collect();
    let schema = Schema::new(vars).expect("generated names are unique");
    let distinct: Vec<usize> = (0..variables)
        .map(|_| rng.random_range(1..=max_distinct.max(1)))
        .collect();
    let mut b = DatasetBuilder::new(schema);
    for i in 0..instances {
        let id = b.add_instance(&format!("i{i}"));
        for (k, &d) in distinct.iter().enumerate() {
            let forced = i == 0;
            let reps = if forced {
                1
            } else {
                match rng.random_range(0..10) {
                    0 => 0,
                    1 => 2,
                    _ => 1,
                }
            };
            for _ in 0..reps {
                let level = rng.random_range(0..d);
                match b.schema().kind(k) {
                    VariableKind::Numeric => b.push_numeric(id, k, level as f64 * 0.5).unwrap(),
                    VariableKind::Categorical => {
                        b.push_categorical(id, k, &format!("t{level}")).unwrap()
                    }
                }
            }
        }
    }
    b.build()
}

#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub seed: u64,
    pub instances: usize,
    pub numeric: usize,
    pub categorical: usize,
    /// Number of instance blocks; each variable gets as many value levels.
    pub blocks: usize,
    /// Probability that an observation ignores its block and picks a level
    /// uniformly.
    pub noise: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            seed: 7,
            instances: 10_000,
            numeric: 5,
            categorical: 5,
            blocks: 4,
            noise: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedData {
    pub dataset: Dataset,
    /// Planted block of each instance.
    pub truth: Vec<usize>,
}

/// Planted co-clusters: instance block `r` observes level `perm_k(r)` of
/// variable `k`, so the levels of all variables form `blocks` part clusters.
/// Numeric level `l` draws uniformly from `[l, l+1)`; categorical level `l`
/// uses three tokens of its own.
pub fn planted_blocks(cfg: &PlantedConfig) -> PlantedData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_vars = cfg.numeric + cfg.categorical;
    let vars: Vec<Variable> = (0..n_vars)
        .map(|k| {
            if k < cfg.numeric {
                Variable::new(format!("num{k}"), VariableKind::Numeric)
            } else {
                Variable::new(format!("cat{}", k - cfg.numeric), VariableKind::Categorical)
            }
        })
        .collect();
    let schema = Schema::new(vars).expect("unique names");
    let perms: Vec<Vec<usize>> = (0..n_vars)
        .map(|_| {
            let mut p: Vec<usize> = (0..cfg.blocks).collect();
            for i in (1..p.len()).rev() {
                let j = rng.random_range(0..=i);
                p.swap(i, j);
            }
            p
        })
        .collect();
    let mut b = DatasetBuilder::new(schema);
    let mut truth = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let block = rng.random_range(0..cfg.blocks);
        truth.push(block);
        let id = b.add_instance(&format!("i{i}"));
        for (k, perm) in perms.iter().enumerate() {
            let level = if rng.random_bool(cfg.noise) {
                rng.random_range(0..cfg.blocks)
            } else {
                perm[block]
            };
            if k < cfg.numeric {
                let x: f64 = level as f64 + rng.random_range(0.0..1.0);
                // two decimals keep ties realistic
                b.push_numeric(id, k, (x * 100.0).floor() / 100.0).unwrap();
            } else {
                let t = rng.random_range(0..3);
                b.push_categorical(id, k, &format!("L{level}_{t}")).unwrap();
            }
        }
    }
    PlantedData {
        dataset: b.build(),
        truth,
    }
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0f64; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1.0;
    }
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let sum_cells: f64 = table.iter().map(|&x| c2(x)).sum();
    let sum_a: f64 = (0..ka).map(|i| c2(table[i * kb..(i + 1) * kb].iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|j| c2((0..ka).map(|i| table[i * kb + j]).sum())).sum();
    let expected = sum_a * sum_b / c2(n);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (sum_cells - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_mixed_is_seeded() {
        assert_eq!(random_mixed(3, 5, 2, 4), random_mixed(3, 5, 2, 4));
        let ds = random_mixed(3, 5, 2, 4);
        assert!(ds.observations_per_variable().iter().all(|&c| c > 0));
    }

    #[test]
    fn ari_bounds() {
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]) - 1.0).abs() < 1e-12);
        assert!(adjusted_rand_index(&[0, 1, 0, 1], &[0, 0, 1, 1]) < 0.01);
    }

    #[test]
    fn planted_shape() {
        let p = planted_blocks(&PlantedConfig {
            instances: 100,
            ..PlantedConfig::default()
        });
        assert_eq!(p.dataset.n_observations(), 1000);
        assert_eq!(p.truth.len(), 100);
    }
}
