//! Deterministic synthetic mixture generation: labeled draws from a
//! mixture of vMF components, used for benchmarks and end-to-end tests.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;

use crate::hypersphere::{dot, norm2, UnitVector};
use crate::vmf::{sample_one, VmfError, VmfParams};

/// Full description of a generating mixture.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    components: Vec<VmfParams>,
    weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(components: Vec<VmfParams>, weights: Vec<f64>) -> Result<Self, VmfError> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(VmfError::InvalidArgument(format!(
                "need matching non-zero counts of components and weights, got {} and {}",
                components.len(),
                weights.len()
            )));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(VmfError::DimensionMismatch { left: d, right: 0 });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(VmfError::InvalidArgument(format!(
                "weights must be non-negative and sum to 1, got sum {total}"
            )));
        }
        Ok(Self {
            components,
            weights,
        })
    }

    /// Components at mutually orthonormal mean directions drawn from `seed`.
    pub fn orthonormal(
        dim: usize,
        weights: Vec<f64>,
        kappas: Vec<f64>,
        seed: u64,
    ) -> Result<Self, VmfError> {
        if kappas.len() != weights.len() {
            return Err(VmfError::InvalidArgument(
                "kappas and weights must have equal length".into(),
            ));
        }
        let means = orthonormal_directions(dim, weights.len(), seed)?;
        let components = means
            .into_iter()
            .zip(&kappas)
            .map(|(mu, &kappa)| VmfParams::new(mu, kappa))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(components, weights)
    }

    /// Components whose means share a common axis: every pair of means has
    /// cosine `shared_cos`, which controls how much the clusters contest the
    /// space between them.
    pub fn shared_axis(
        dim: usize,
        weights: Vec<f64>,
        kappas: Vec<f64>,
        shared_cos: f64,
        seed: u64,
    ) -> Result<Self, VmfError> {
        if kappas.len() != weights.len() {
            return Err(VmfError::InvalidArgument(
                "kappas and weights must have equal length".into(),
            ));
        }
        if !(0.0..1.0).contains(&shared_cos) {
            return Err(VmfError::InvalidArgument(format!(
                "shared cosine must lie in [0, 1), got {shared_cos}"
            )));
        }
        let k = weights.len();
        let frame = orthonormal_directions(dim, k + 1, seed)?;
        let axis = &frame[k];
        let rho = shared_cos.sqrt();
        let ortho = (1.0 - shared_cos).sqrt();
        let components = frame[..k]
            .iter()
            .zip(&kappas)
            .map(|(v, &kappa)| {
                let values: Vec<f64> = axis
                    .values()
                    .iter()
                    .zip(v.values())
                    .map(|(a, b)| rho * a + ortho * b)
                    .collect();
                VmfParams::new(UnitVector::from_unnormalized(values)?, kappa)
            })
            .collect::<Result<Vec<_>, VmfError>>()?;
        Self::new(components, weights)
    }

    pub fn components(&self) -> &[VmfParams] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }
}

impl From<crate::hypersphere::GeometryError> for VmfError {
    fn from(e: crate::hypersphere::GeometryError) -> Self {
        VmfError::InvalidArgument(e.to_string())
    }
}

/// Gram-Schmidt on Gaussian draws; deterministic in `seed`.
pub fn orthonormal_directions(
    dim: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<UnitVector>, VmfError> {
    if count > dim {
        return Err(VmfError::InvalidArgument(format!(
            "cannot place {count} orthonormal directions in {dim} dimensions"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut g: Vec<f64> = (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        for b in &basis {
            let along = dot(&g, b);
            for (gi, bi) in g.iter_mut().zip(b) {
                *gi -= along * bi;
            }
        }
        let norm = norm2(&g);
        if norm < 1e-8 {
            continue;
        }
        for gi in &mut g {
            *gi /= norm;
        }
        basis.push(g);
    }
    basis
        .into_iter()
        .map(|v| UnitVector::new(v).map_err(VmfError::from))
        .collect()
}

/// Draws `n` labeled points: component labels from the mixture weights, then
/// one vMF draw per point, all on a single seeded stream.
pub fn sample_labeled(spec: &MixtureSpec, n: usize, seed: u64) -> (Vec<UnitVector>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picker = WeightedIndex::new(spec.weights()).expect("validated weights");
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let h = picker.sample(&mut rng);
        points.push(sample_one(&spec.components()[h], &mut rng));
        labels.push(h);
    }
    (points, labels)
}
