//! Built-in simulation truth resembling a county-level radon survey.
//!
//! 85 groups with a skewed size profile (920 observations, three singleton
//! groups). It was generated once: θ_j ~ N(1.313, 0.096), 1/σ²_j ~
//! gamma(4, 1.911) (prior mean of σ² equal to 0.637), then n_j observations
//! per group; the stored truth is each group's sample mean and sample variance
//! (the drawn σ²_j for singletons). Stored as text so it never depends on a
//! random number generator version.

use crate::data::GroupedData;
use crate::error::{FabError, Result};
use crate::rng::RngStream;

const RADON_LIKE: &str = include_str!("fixtures/radon_like.csv");

/// Fixed group means, variances and sizes used as simulation truth.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FixedTruth {
    pub ids: Vec<String>,
    pub n: Vec<usize>,
    pub theta: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl FixedTruth {
    pub fn new(ids: Vec<String>, n: Vec<usize>, theta: Vec<f64>, sigma2: Vec<f64>) -> Result<Self> {
        let p = ids.len();
        if p == 0 || n.len() != p || theta.len() != p || sigma2.len() != p {
            return Err(FabError::Config("truth vectors must be non-empty and of equal length".into()));
        }
        if n.iter().any(|&k| k == 0) {
            return Err(FabError::Config("group sizes must be positive".into()));
        }
        if theta.iter().any(|t| !t.is_finite()) || sigma2.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(FabError::Config("truth needs finite means and positive variances".into()));
        }
        Ok(Self { ids, n, theta, sigma2 })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// One dataset: `n_j` draws from `N(θ_j, σ²_j)` per group, in group order.
    pub fn sample(&self, rng: &mut RngStream) -> GroupedData {
        let mut d = GroupedData::new();
        for j in 0..self.len() {
            let sd = self.sigma2[j].sqrt();
            for _ in 0..self.n[j] {
                d.push(self.ids[j].clone(), rng.normal_with(self.theta[j], sd))
                    .expect("finite draw");
            }
        }
        d
    }
}

/// The radon-like truth described in the module docs.
pub fn radon_like() -> FixedTruth {
    let mut ids = Vec::new();
    let mut n = Vec::new();
    let mut theta = Vec::new();
    let mut sigma2 = Vec::new();
    for line in RADON_LIKE.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        ids.push(f[0].to_string());
        n.push(f[1].parse().expect("fixture size"));
        theta.push(f[2].parse().expect("fixture mean"));
        sigma2.push(f[3].parse().expect("fixture variance"));
    }
    FixedTruth::new(ids, n, theta, sigma2).expect("valid fixture")
}

/// One dataset drawn from the radon-like truth.
pub fn radon_like_sample(seed: u64) -> GroupedData {
    radon_like().sample(&mut RngStream::new(seed, 0))
}
