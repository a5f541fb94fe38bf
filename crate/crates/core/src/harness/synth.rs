use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::HarnessError;
use crate::embedset::{EmbeddingRecord, EmbeddingSet};

/// Isotropic clusters of unit vectors.
///
/// Each cluster center is a random unit vector. A sample is
/// `normalize(center + spread * g / sqrt(N))` with `g` standard normal, so
/// `spread` is roughly the noise-to-center length ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n_clusters: usize,
    pub per_cluster: usize,
    pub n_dim: usize,
    pub spread: f64,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field, reason: &str| {
            Err(HarnessError::InvalidConfig {
                field,
                reason: reason.into(),
            })
        };
        if self.n_clusters == 0 || self.n_clusters > u32::MAX as usize {
            return bad("clusters", "must be in 1..=u32::MAX");
        }
        if self.per_cluster == 0 {
            return bad("per_cluster", "must be positive");
        }
        if self.n_dim == 0 || self.n_dim > u32::MAX as usize {
            return bad("dim", "must be in 1..=u32::MAX");
        }
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return bad("spread", "must be finite and >= 0");
        }
        Ok(())
    }

    fn provenance(&self) -> String {
        format!(
            "synthetic clusters C={} per_cluster={} N={} spread={} seed={}",
            self.n_clusters, self.per_cluster, self.n_dim, self.spread, self.seed
        )
    }
}

fn unit(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Generates `n_clusters * per_cluster` records, cluster by cluster.
pub fn synth_clusters(spec: &SynthSpec) -> Result<EmbeddingSet, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_dim;
    let centers: Vec<Vec<f64>> = (0..spec.n_clusters)
        .map(|_| {
            let mut c = gaussian(&mut rng, n);
            unit(&mut c);
            c
        })
        .collect();

    let scale = spec.spread / (n as f64).sqrt();
    let mut records = Vec::with_capacity(spec.n_clusters * spec.per_cluster);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..spec.per_cluster {
            let vector = if spec.spread == 0.0 {
                center.iter().map(|&v| v as f32).collect()
            } else {
                let mut v: Vec<f64> = center
                    .iter()
                    .zip(gaussian(&mut rng, n))
                    .map(|(c, g)| c + scale * g)
                    .collect();
                unit(&mut v);
                v.into_iter().map(|x| x as f32).collect()
            };
            records.push(EmbeddingRecord::new(vector, label as u32));
        }
    }
    Ok(EmbeddingSet::new(
        n as u32,
        spec.n_clusters as u32,
        records,
        spec.provenance(),
    )?)
}

/// Generates one set and holds out the last `holdout` samples of every
/// cluster as a test split.
pub fn synth_split(
    spec: &SynthSpec,
    holdout: usize,
) -> Result<(EmbeddingSet, EmbeddingSet), HarnessError> {
    if holdout >= spec.per_cluster {
        return Err(HarnessError::InvalidConfig {
            field: "holdout",
            reason: format!("must be below per_cluster ({})", spec.per_cluster),
        });
    }
    let all = synth_clusters(spec)?;
    let keep = spec.per_cluster - holdout;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..spec.n_clusters {
        let base = c * spec.per_cluster;
        train.extend(base..base + keep);
        test.extend(base + keep..base + spec.per_cluster);
    }
    Ok((all.select(&train)?, all.select(&test)?))
}
