//! Synthetic age-regression data and the federation partitioners.
//!
//! Targets mimic an adult cohort: an affine trend plus mild nonlinearities
//! around a 62.5-year center, clamped to [45, 80]. Partitions cover the
//! dataset disjointly; IID assignment shuffles globally, non-IID sorts by
//! target and hands each learner a contiguous age block; uniform sizing
//! balances counts, skewed sizing follows a 0.7-ratio geometric decay.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::{FlError, Result};

pub const TARGET_MIN: f64 = 45.0;
pub const TARGET_MAX: f64 = 80.0;
const TARGET_CENTER: f64 = 62.5;

/// Geometric decay ratio for skewed partition sizes.
pub const SKEW_RATIO: f64 = 0.7;

/// A dense feature matrix with scalar targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// Row-major `examples x input_dim`.
    pub features: Vec<f64>,
    pub input_dim: usize,
    pub targets: Vec<f64>,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn features_of(&self, row: usize) -> &[f64] {
        &self.features[row * self.input_dim..(row + 1) * self.input_dim]
    }

    /// Generates `count` examples with standard-normal features and targets
    /// `clamp(62.5 + 7*g1 + 4*tanh(g2) + 2*sin(2*g3) + noise)`, where the
    /// g_i are fixed seed-derived projections of the features. Deterministic
    /// per seed; with `noise_sigma = 0` the targets are an exact function of
    /// the features.
    pub fn generate(count: usize, input_dim: usize, noise_sigma: f64, seed: u64) -> Self {
        assert!(count > 0, "empty dataset");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();

        // Unit projection directions, drawn before the features so the
        // target formula is pinned by the seed alone.
        let mut proj = vec![vec![0.0f64; input_dim]; 3];
        for p in proj.iter_mut() {
            for v in p.iter_mut() {
                *v = normal.sample(&mut rng);
            }
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            p.iter_mut().for_each(|x| *x /= norm);
        }

        let mut features = vec![0.0f64; count * input_dim];
        for v in features.iter_mut() {
            *v = normal.sample(&mut rng);
        }

        let noise = if noise_sigma > 0.0 {
            Some(Normal::new(0.0, noise_sigma).unwrap())
        } else {
            None
        };
        let targets = (0..count)
            .map(|row| {
                let x = &features[row * input_dim..(row + 1) * input_dim];
                // Unit-norm projections of standard-normal features: each
                // g_i is standard normal.
                let g: Vec<f64> = proj
                    .iter()
                    .map(|p| p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                    .collect();
                let mut t = TARGET_CENTER + 7.0 * g[0] + 4.0 * g[1].tanh() + 2.0 * (2.0 * g[2]).sin();
                if let Some(n) = &noise {
                    t += n.sample(&mut rng);
                }
                t.clamp(TARGET_MIN, TARGET_MAX)
            })
            .collect();

        Self {
            features,
            input_dim,
            targets,
            seed,
        }
    }

    /// Generates one cohort of `train_count + eval_count` examples under a
    /// single target function and splits it: the held-out set shares the
    /// function but no examples.
    pub fn generate_split(
        train_count: usize,
        eval_count: usize,
        input_dim: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> (Self, Self) {
        let full = Self::generate(train_count + eval_count, input_dim, noise_sigma, seed);
        let cut = train_count * input_dim;
        let train = Self {
            features: full.features[..cut].to_vec(),
            input_dim,
            targets: full.targets[..train_count].to_vec(),
            seed,
        };
        let eval = Self {
            features: full.features[cut..].to_vec(),
            input_dim,
            targets: full.targets[train_count..].to_vec(),
            seed,
        };
        (train, eval)
    }
}

/// How many examples each learner holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeScheme {
    Uniform,
    Skewed,
}

/// Whether local target distributions follow the global one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistScheme {
    Iid,
    NonIid,
}

/// A partition scheme: size x distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionScheme {
    pub size: SizeScheme,
    pub dist: DistScheme,
}

/// The three evaluation environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Environment {
    UniformIid,
    UniformNonIid,
    SkewedNonIid,
}

impl Environment {
    pub const ALL: [Environment; 3] = [
        Environment::UniformIid,
        Environment::UniformNonIid,
        Environment::SkewedNonIid,
    ];

    pub fn scheme(self) -> PartitionScheme {
        match self {
            Environment::UniformIid => PartitionScheme {
                size: SizeScheme::Uniform,
                dist: DistScheme::Iid,
            },
            Environment::UniformNonIid => PartitionScheme {
                size: SizeScheme::Uniform,
                dist: DistScheme::NonIid,
            },
            Environment::SkewedNonIid => PartitionScheme {
                size: SizeScheme::Skewed,
                dist: DistScheme::NonIid,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Environment::UniformIid => "uniform_iid",
            Environment::UniformNonIid => "uniform_noniid",
            Environment::SkewedNonIid => "skewed_noniid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Disjoint per-learner index lists covering the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    pub scheme: PartitionScheme,
    pub indices: Vec<Vec<usize>>,
}

impl PartitionPlan {
    /// Per-learner contribution sizes p_k.
    pub fn sizes(&self) -> Vec<u64> {
        self.indices.iter().map(|ix| ix.len() as u64).collect()
    }
}

/// Balanced sizes: counts differ by at most one, larger shards first.
fn uniform_sizes(count: usize, learners: usize) -> Vec<usize> {
    let base = count / learners;
    let rem = count % learners;
    (0..learners)
        .map(|k| base + usize::from(k < rem))
        .collect()
}

/// Geometric sizes with ratio [`SKEW_RATIO`], rounded by largest remainder
/// to sum exactly to `count`, then nudged to stay strictly decreasing.
fn skewed_sizes(count: usize, learners: usize) -> Result<Vec<usize>> {
    let weights: Vec<f64> = (0..learners).map(|k| SKEW_RATIO.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * count as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut leftover = count - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..learners).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap()
    });
    let mut i = 0usize;
    while leftover > 0 {
        sizes[order[i % learners]] += 1;
        leftover -= 1;
        i += 1;
    }
    // Strict decrease: rounding can only tie neighbours; push surplus up.
    for k in (1..learners).rev() {
        while sizes[k] >= sizes[k - 1] {
            sizes[k] -= 1;
            sizes[k - 1] += 1;
        }
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(FlError::PartitionTooSmall {
            examples: count,
            learners,
        });
    }
    debug_assert_eq!(sizes.iter().sum::<usize>(), count);
    Ok(sizes)
}

/// Splits `dataset` across `learners` according to `scheme`. Index lists
/// are disjoint and cover the whole set.
pub fn partition(
    dataset: &LabeledDataset,
    learners: usize,
    scheme: PartitionScheme,
    seed: u64,
) -> Result<PartitionPlan> {
    let count = dataset.len();
    if learners == 0 || learners > count {
        return Err(FlError::PartitionTooSmall {
            examples: count,
            learners,
        });
    }
    let sizes = match scheme.size {
        SizeScheme::Uniform => uniform_sizes(count, learners),
        SizeScheme::Skewed => skewed_sizes(count, learners)?,
    };

    let ordered: Vec<usize> = match scheme.dist {
        DistScheme::Iid => {
            let mut ix: Vec<usize> = (0..count).collect();
            ix.shuffle(&mut ChaCha20Rng::seed_from_u64(seed ^ 0x9e37_79b9));
            ix
        }
        DistScheme::NonIid => {
            // Contiguous target blocks: sort by target, ascending.
            let mut ix: Vec<usize> = (0..count).collect();
            ix.sort_by(|&a, &b| dataset.targets[a].partial_cmp(&dataset.targets[b]).unwrap());
            ix
        }
    };

    let mut indices = Vec::with_capacity(learners);
    let mut offset = 0usize;
    for s in sizes {
        indices.push(ordered[offset..offset + s].to_vec());
        offset += s;
    }
    Ok(PartitionPlan { scheme, indices })
}

/// Two-sample Kolmogorov-Smirnov distance between target samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < sa.len() && j < sb.len() {
        if sa[i] <= sb[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / sa.len() as f64;
        let fb = j as f64 / sb.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_bounded() {
        let a = LabeledDataset::generate(500, 32, 2.0, 42);
        let b = LabeledDataset::generate(500, 32, 2.0, 42);
        assert_eq!(a, b);
        assert!(a
            .targets
            .iter()
            .all(|&t| (TARGET_MIN..=TARGET_MAX).contains(&t) && t.is_finite()));
        assert!(a.features.iter().all(|x| x.is_finite()));
        let c = LabeledDataset::generate(500, 32, 2.0, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_noise_targets_are_reproducible_from_features() {
        // Regenerating with the same seed reproduces the exact targets;
        // noise-free targets depend only on seed-pinned projections.
        let a = LabeledDataset::generate(100, 16, 0.0, 7);
        let b = LabeledDataset::generate(100, 16, 0.0, 7);
        assert_eq!(a.targets, b.targets);
    }

    #[test]
    fn uniform_sizes_differ_by_at_most_one() {
        let sizes = uniform_sizes(8356, 8);
        assert_eq!(sizes.iter().sum::<usize>(), 8356);
        assert_eq!(sizes[0], 1045);
        assert_eq!(sizes[4], 1044);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn skewed_sizes_decay_geometrically() {
        let sizes = skewed_sizes(8356, 8).unwrap();
        assert_eq!(sizes.iter().sum::<usize>(), 8356);
        for k in 1..8 {
            let ratio = sizes[k] as f64 / sizes[k - 1] as f64;
            assert!(
                (0.6..=0.8).contains(&ratio),
                "ratio {ratio} at position {k}: {sizes:?}"
            );
            assert!(sizes[k] < sizes[k - 1]);
        }
    }

    #[test]
    fn partitions_are_disjoint_and_cover() {
        let ds = LabeledDataset::generate(1000, 8, 2.0, 3);
        for env in Environment::ALL {
            let plan = partition(&ds, 8, env.scheme(), 11).unwrap();
            let mut seen = vec![false; ds.len()];
            for learner in &plan.indices {
                for &i in learner {
                    assert!(!seen[i], "index {i} assigned twice in {env:?}");
                    seen[i] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "coverage gap in {env:?}");
        }
    }

    #[test]
    fn single_learner_gets_everything() {
        let ds = LabeledDataset::generate(50, 4, 1.0, 5);
        for env in Environment::ALL {
            let plan = partition(&ds, 1, env.scheme(), 0).unwrap();
            assert_eq!(plan.indices.len(), 1);
            assert_eq!(plan.indices[0].len(), 50);
        }
    }

    #[test]
    fn noniid_blocks_are_contiguous_in_target_order() {
        let ds = LabeledDataset::generate(500, 8, 2.0, 9);
        let plan = partition(
            &ds,
            8,
            PartitionScheme {
                size: SizeScheme::Uniform,
                dist: DistScheme::NonIid,
            },
            1,
        )
        .unwrap();
        for k in 1..8 {
            let prev_max = plan.indices[k - 1]
                .iter()
                .map(|&i| ds.targets[i])
                .fold(f64::MIN, f64::max);
            let next_min = plan.indices[k]
                .iter()
                .map(|&i| ds.targets[i])
                .fold(f64::MAX, f64::min);
            assert!(
                prev_max <= next_min,
                "blocks overlap between learners {} and {k}",
                k - 1
            );
        }
    }

    #[test]
    fn iid_learners_match_global_distribution() {
        let ds = LabeledDataset::generate(8356, 32, 2.0, 13);
        let plan = partition(
            &ds,
            8,
            PartitionScheme {
                size: SizeScheme::Uniform,
                dist: DistScheme::Iid,
            },
            17,
        )
        .unwrap();
        let global_mean = ds.targets.iter().sum::<f64>() / ds.len() as f64;
        for learner in &plan.indices {
            let targets: Vec<f64> = learner.iter().map(|&i| ds.targets[i]).collect();
            let mean = targets.iter().sum::<f64>() / targets.len() as f64;
            assert!((mean - global_mean).abs() < 0.5, "mean drift {mean}");
            assert!(ks_distance(&targets, &ds.targets) < 0.1);
        }
    }

    #[test]
    fn noniid_spans_are_narrow() {
        let ds = LabeledDataset::generate(8356, 32, 2.0, 19);
        let plan = partition(
            &ds,
            8,
            PartitionScheme {
                size: SizeScheme::Uniform,
                dist: DistScheme::NonIid,
            },
            23,
        )
        .unwrap();
        let global_span = TARGET_MAX - TARGET_MIN;
        let mean_span: f64 = plan
            .indices
            .iter()
            .map(|learner| {
                let mut lo = f64::MAX;
                let mut hi = f64::MIN;
                for &i in learner {
                    lo = lo.min(ds.targets[i]);
                    hi = hi.max(ds.targets[i]);
                }
                hi - lo
            })
            .sum::<f64>()
            / 8.0;
        assert!(
            mean_span < global_span / 8.0 * 2.0,
            "mean span {mean_span} too wide"
        );
    }

    #[test]
    fn partition_rejects_more_learners_than_examples() {
        let ds = LabeledDataset::generate(5, 4, 1.0, 5);
        assert!(matches!(
            partition(&ds, 6, Environment::UniformIid.scheme(), 0),
            Err(FlError::PartitionTooSmall { .. })
        ));
    }
}
