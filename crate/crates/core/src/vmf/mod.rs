//! The von Mises-Fisher distribution on the unit hypersphere: log-density,
//! normalizing constant, concentration estimation, and a rejection sampler
//! used as the test-data generator.

mod bessel;

use std::f64::consts::PI;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, StandardNormal};
use thiserror::Error;

use crate::hypersphere::{dot, norm2, UnitVector};

pub use bessel::log_bessel_i;

/// Concentration cap. A singleton cluster has mean resultant length exactly 1
/// and the moment estimate diverges there; capping keeps the normalizing
/// constant finite and the E-step well-defined.
pub const KAPPA_MAX: f64 = 1e5;

#[derive(Debug, Error, PartialEq)]
pub enum VmfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cluster has zero total weight")]
    EmptyCluster,
}

/// Mean direction and concentration of one vMF component.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfParams {
    mu: UnitVector,
    kappa: f64,
}

impl VmfParams {
    pub fn new(mu: UnitVector, kappa: f64) -> Result<Self, VmfError> {
        if !(0.0..=KAPPA_MAX).contains(&kappa) {
            return Err(VmfError::InvalidArgument(format!(
                "kappa must lie in [0, {KAPPA_MAX:e}], got {kappa}"
            )));
        }
        Ok(Self { mu, kappa })
    }

    pub fn mu(&self) -> &UnitVector {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }
}

/// ln c_d(kappa) for the vMF density c_d(k) e^{k mu.x}:
/// (d/2 - 1) ln k - (d/2) ln(2 pi) - ln I_{d/2-1}(k), with the uniform-sphere
/// limit ln G(d/2) - ln 2 - (d/2) ln pi at kappa = 0.
pub fn log_norm_const(d: usize, kappa: f64) -> Result<f64, VmfError> {
    if d < 2 {
        return Err(VmfError::InvalidArgument(format!(
            "dimension must be >= 2, got {d}"
        )));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(VmfError::InvalidArgument(format!(
            "kappa must be finite and >= 0, got {kappa}"
        )));
    }
    let half_d = d as f64 / 2.0;
    if kappa == 0.0 {
        return Ok(bessel::lgamma(half_d) - std::f64::consts::LN_2 - half_d * PI.ln());
    }
    Ok((half_d - 1.0) * kappa.ln() - half_d * (2.0 * PI).ln() - log_bessel_i(half_d - 1.0, kappa)?)
}

/// Log-density of `x` under the component: ln c_d(kappa) + kappa (mu . x).
pub fn log_density(params: &VmfParams, x: &UnitVector) -> Result<f64, VmfError> {
    if params.dim() != x.dim() {
        return Err(VmfError::DimensionMismatch {
            left: params.dim(),
            right: x.dim(),
        });
    }
    Ok(log_norm_const(params.dim(), params.kappa)? + params.kappa * params.mu.dot_unchecked(x))
}

/// Moment estimate of the concentration from the mean resultant length:
/// kappa = (rbar d - rbar^3) / (1 - rbar^2), clamped to [0, KAPPA_MAX].
///
/// rbar is clamped into [0, 1 - 1e-12] first, so accumulation noise slightly
/// above 1 resolves to KAPPA_MAX instead of a division blow-up.
pub fn estimate_kappa(rbar: f64, d: usize) -> f64 {
    debug_assert!(d >= 2);
    let r = rbar.clamp(0.0, 1.0 - 1e-12);
    let est = (r * d as f64 - r * r * r) / (1.0 - r * r);
    est.clamp(0.0, KAPPA_MAX)
}

/// Ratio of Bessel functions A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa),
/// the expected cosine between a sample and the mean direction.
pub fn bessel_ratio(d: usize, kappa: f64) -> Result<f64, VmfError> {
    if d < 2 {
        return Err(VmfError::InvalidArgument(format!(
            "dimension must be >= 2, got {d}"
        )));
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(VmfError::InvalidArgument(format!(
            "kappa must be finite and > 0, got {kappa}"
        )));
    }
    let nu = d as f64 / 2.0 - 1.0;
    Ok((log_bessel_i(nu + 1.0, kappa)? - log_bessel_i(nu, kappa)?).exp())
}

/// Solves A_d(kappa) = rbar by safeguarded Newton iteration, for the exact
/// maximum-likelihood concentration. Falls back to bisection whenever a
/// Newton step leaves the current bracket.
pub fn estimate_kappa_exact(rbar: f64, d: usize) -> Result<f64, VmfError> {
    if d < 2 {
        return Err(VmfError::InvalidArgument(format!(
            "dimension must be >= 2, got {d}"
        )));
    }
    let r = rbar.clamp(0.0, 1.0 - 1e-12);
    if r == 0.0 {
        return Ok(0.0);
    }
    if bessel_ratio(d, KAPPA_MAX)? <= r {
        return Ok(KAPPA_MAX);
    }
    let mut lo = 0.0f64;
    let mut hi = KAPPA_MAX;
    let mut kappa = estimate_kappa(r, d).clamp(1e-8, KAPPA_MAX);
    for _ in 0..80 {
        let a = bessel_ratio(d, kappa)?;
        let f = a - r;
        if f.abs() <= 1e-11 {
            break;
        }
        if f > 0.0 {
            hi = kappa;
        } else {
            lo = kappa;
        }
        let slope = 1.0 - a * a - (d as f64 - 1.0) / kappa * a;
        let mut next = kappa - f / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - kappa).abs() <= 1e-12 * kappa {
            kappa = next;
            break;
        }
        kappa = next;
    }
    Ok(kappa)
}

/// Weighted resultant of a point set: the unnormalized sum, the total weight,
/// and the mean resultant length.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultantSummary {
    pub resultant: Vec<f64>,
    pub count_mass: f64,
    pub rbar: f64,
}

/// Accumulates sum w_i x_i in input order (deterministic summation).
pub fn mean_resultant(
    points: &[UnitVector],
    weights: &[f64],
) -> Result<ResultantSummary, VmfError> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(VmfError::InvalidArgument(format!(
            "need equal non-zero counts of points and weights, got {} and {}",
            points.len(),
            weights.len()
        )));
    }
    let d = points[0].dim();
    let mut resultant = vec![0.0; d];
    let mut count_mass = 0.0;
    for (p, &w) in points.iter().zip(weights) {
        if p.dim() != d {
            return Err(VmfError::DimensionMismatch {
                left: d,
                right: p.dim(),
            });
        }
        if w.is_nan() || w < 0.0 {
            return Err(VmfError::InvalidArgument(format!(
                "weights must be non-negative, got {w}"
            )));
        }
        for (r, x) in resultant.iter_mut().zip(p.values()) {
            *r += w * x;
        }
        count_mass += w;
    }
    if count_mass <= 0.0 {
        return Err(VmfError::EmptyCluster);
    }
    let rbar = norm2(&resultant) / count_mass;
    Ok(ResultantSummary {
        resultant,
        count_mass,
        rbar,
    })
}

/// Draws one vMF sample with Wood's rejection scheme: sample the cosine w to
/// the mean direction, then a uniform tangent direction.
pub fn sample_one<R: Rng + ?Sized>(params: &VmfParams, rng: &mut R) -> UnitVector {
    let d = params.dim();
    let df = d as f64;
    let kappa = params.kappa;
    let mu = params.mu.values();

    let b = (-2.0 * kappa + (4.0 * kappa * kappa + (df - 1.0) * (df - 1.0)).sqrt()) / (df - 1.0);
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + (df - 1.0) * (1.0 - x0 * x0).ln();
    let beta = Beta::new((df - 1.0) / 2.0, (df - 1.0) / 2.0).expect("valid beta shape");

    let w = loop {
        let z: f64 = beta.sample(rng);
        let u: f64 = rng.random();
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if kappa * w + (df - 1.0) * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };

    let tangent = loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let along = dot(&g, mu);
        let t: Vec<f64> = g.iter().zip(mu).map(|(gi, mi)| gi - along * mi).collect();
        let norm = norm2(&t);
        if norm > 1e-12 {
            break t.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
        }
    };

    let sine = (1.0 - w * w).max(0.0).sqrt();
    let values: Vec<f64> = mu
        .iter()
        .zip(&tangent)
        .map(|(m, t)| w * m + sine * t)
        .collect();
    UnitVector::from_unnormalized(values).expect("sampled vector has unit norm")
}

/// Draws `n` samples deterministically from the given seed; identical
/// `(params, n, seed)` reproduce the same output bit for bit.
pub fn sample_vmf(params: &VmfParams, n: usize, seed: u64) -> Vec<UnitVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_one(params, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(values: &[f64]) -> UnitVector {
        UnitVector::from_unnormalized(values.to_vec()).unwrap()
    }

    fn assert_rel(got: f64, want: f64, tol: f64) {
        let err = (got - want).abs() / want.abs();
        assert!(
            err <= tol,
            "got {got}, want {want}, rel err {err:.3e} > {tol:e}"
        );
    }

    #[test]
    fn norm_const_uniform_circle() {
        // c_2(0) = 1/(2 pi)
        assert_rel(log_norm_const(2, 0.0).unwrap(), -(2.0 * PI).ln(), 1e-14);
    }

    fn ln_c3(kappa: f64) -> f64 {
        // closed form c_3(k) = k / (4 pi sinh k)
        kappa.ln() - (4.0 * PI).ln() - kappa.sinh().ln()
    }

    #[test]
    fn norm_const_matches_d3_closed_form() {
        assert_rel(log_norm_const(3, 1.0).unwrap(), ln_c3(1.0), 1e-9);
        assert_rel(log_norm_const(3, 2.0).unwrap(), ln_c3(2.0), 1e-9);
        for i in 0..=40 {
            let kappa = 0.01 * (100.0f64 / 0.01).powf(i as f64 / 40.0);
            assert_rel(log_norm_const(3, kappa).unwrap(), ln_c3(kappa), 1e-9);
        }
    }

    #[test]
    fn norm_const_near_zero_is_continuous() {
        let at_zero = log_norm_const(5, 0.0).unwrap();
        let near_zero = log_norm_const(5, 1e-8).unwrap();
        assert_abs_diff_eq!(at_zero, near_zero, epsilon = 1e-10);
    }

    #[test]
    fn norm_const_rejects_bad_inputs() {
        assert!(log_norm_const(1, 1.0).is_err());
        assert!(log_norm_const(3, -1.0).is_err());
    }

    #[test]
    fn density_uniform_ignores_direction() {
        let mu = unit(&[1.0, 0.0, 0.0]);
        let params = VmfParams::new(mu, 0.0).unwrap();
        let x = unit(&[-0.3, 0.4, 1.0]);
        let expect = log_norm_const(3, 0.0).unwrap();
        assert_eq!(log_density(&params, &x).unwrap(), expect);
    }

    #[test]
    fn density_at_mode_d3() {
        let mu = unit(&[0.0, 0.0, 1.0]);
        let params = VmfParams::new(mu.clone(), 2.0).unwrap();
        assert_rel(log_density(&params, &mu).unwrap(), ln_c3(2.0) + 2.0, 1e-9);
    }

    #[test]
    fn density_dimension_mismatch() {
        let params = VmfParams::new(unit(&[1.0, 0.0, 0.0]), 1.0).unwrap();
        let x = unit(&[1.0, 0.0]);
        assert!(matches!(
            log_density(&params, &x),
            Err(VmfError::DimensionMismatch { .. })
        ));
    }

    /// Integrates exp(log_density) over the sphere with trapezoid (periodic,
    /// d=2) and Simpson x trapezoid (d=3) quadrature.
    pub(crate) fn sphere_integral(params: &VmfParams) -> f64 {
        match params.dim() {
            2 => {
                let n = 4000;
                let h = 2.0 * PI / n as f64;
                (0..n)
                    .map(|i| {
                        let theta = i as f64 * h;
                        let x = unit(&[theta.cos(), theta.sin()]);
                        log_density(params, &x).unwrap().exp() * h
                    })
                    .sum()
            }
            3 => {
                let (n_phi, n_theta) = (800, 1600);
                let h_phi = PI / n_phi as f64;
                let h_theta = 2.0 * PI / n_theta as f64;
                let mut total = 0.0;
                for i in 0..=n_phi {
                    let phi = i as f64 * h_phi;
                    let simpson = if i == 0 || i == n_phi {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let mut ring = 0.0;
                    for j in 0..n_theta {
                        let theta = j as f64 * h_theta;
                        let x = unit(&[
                            phi.sin() * theta.cos(),
                            phi.sin() * theta.sin(),
                            phi.cos(),
                        ]);
                        ring += log_density(params, &x).unwrap().exp();
                    }
                    total += simpson * ring * phi.sin();
                }
                total * h_phi / 3.0 * h_theta
            }
            other => panic!("no quadrature for dimension {other}"),
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for d in [2usize, 3] {
            for kappa in [0.0, 1.0, 10.0] {
                let mut values = vec![0.0; d];
                values[0] = 0.6;
                values[d - 1] = -0.8;
                let params = VmfParams::new(unit(&values), kappa).unwrap();
                let integral = sphere_integral(&params);
                assert!(
                    (integral - 1.0).abs() <= 1e-6,
                    "d={d} kappa={kappa}: integral {integral}"
                );
            }
        }
    }

    #[test]
    fn kappa_estimate_hand_values() {
        assert_eq!(estimate_kappa(0.0, 3), 0.0);
        assert_eq!(estimate_kappa(0.0, 75), 0.0);
        // (1.5 - 0.125) / 0.75
        assert_rel(estimate_kappa(0.5, 3), 1.375 / 0.75, 1e-12);
        // (67.5 - 0.729) / 0.19 at the 75-dim operating point
        assert_rel(estimate_kappa(0.9, 75), 66.771 / 0.19, 1e-12);
    }

    #[test]
    fn kappa_estimate_clamps_at_unit_resultant() {
        assert_eq!(estimate_kappa(1.0, 10), KAPPA_MAX);
        assert_eq!(estimate_kappa(1.0 - 1e-13, 10), KAPPA_MAX);
        assert_eq!(estimate_kappa(1.0 + 1e-10, 10), KAPPA_MAX);
    }

    #[test]
    fn kappa_estimate_strictly_increasing() {
        for d in [2usize, 3, 10, 75] {
            let mut prev = estimate_kappa(0.0, d);
            for i in 1..200 {
                let r = i as f64 / 200.0;
                let cur = estimate_kappa(r, d);
                assert!(cur > prev, "not increasing at r={r}, d={d}");
                prev = cur;
            }
        }
    }

    #[test]
    fn bessel_ratio_d3_closed_form() {
        // A_3(k) = coth k - 1/k
        let want = 1.0f64.tanh().recip() - 1.0;
        assert_rel(bessel_ratio(3, 1.0).unwrap(), want, 1e-10);
        assert_rel(bessel_ratio(3, 1.0).unwrap(), 0.31303528549933130, 1e-10);
    }

    #[test]
    fn bessel_ratio_large_kappa_asymptote() {
        let a = bessel_ratio(3, 1000.0).unwrap();
        assert!((a - 0.999).abs() <= 1e-3, "A_3(1000) = {a}");
    }

    #[test]
    fn bessel_ratio_reference_values() {
        // mpmath references
        assert_rel(bessel_ratio(10, 50.0).unwrap(), 0.91320959987374054, 1e-10);
        assert_rel(bessel_ratio(50, 10.0).unwrap(), 0.19283080165195554, 1e-10);
        assert_rel(bessel_ratio(50, 50.0).unwrap(), 0.62110469474030013, 1e-10);
        assert_rel(bessel_ratio(50, 200.0).unwrap(), 0.88470689959679210, 1e-10);
        assert_rel(bessel_ratio(2, 5.0).unwrap(), 0.89338313704408522, 1e-10);
        assert_rel(bessel_ratio(75, 300.0).unwrap(), 0.88406391430546030, 1e-10);
    }

    #[test]
    fn kappa_round_trip_through_ratio() {
        for &(d, kappa) in &[(50usize, 10.0f64), (50, 50.0), (50, 200.0)] {
            let rbar = bessel_ratio(d, kappa).unwrap();
            let est = estimate_kappa(rbar, d);
            assert!(
                (est - kappa).abs() / kappa <= 0.05,
                "eq10 round trip d={d} kappa={kappa}: {est}"
            );
        }
    }

    #[test]
    fn exact_kappa_inverts_ratio() {
        for &(d, kappa) in &[(3usize, 0.5f64), (10, 5.0), (50, 200.0), (75, 40.0)] {
            let rbar = bessel_ratio(d, kappa).unwrap();
            let est = estimate_kappa_exact(rbar, d).unwrap();
            assert_rel(est, kappa, 1e-7);
        }
        assert_eq!(estimate_kappa_exact(0.0, 10).unwrap(), 0.0);
        assert_eq!(estimate_kappa_exact(1.0, 10).unwrap(), KAPPA_MAX);
    }

    #[test]
    fn resultant_coincident_points() {
        let u = unit(&[0.6, 0.8, 0.0]);
        let points = vec![u.clone(); 5];
        let summary = mean_resultant(&points, &[1.0; 5]).unwrap();
        assert_abs_diff_eq!(summary.rbar, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(summary.count_mass, 5.0, epsilon = 0.0);
        for (r, m) in summary.resultant.iter().zip(u.values()) {
            assert_abs_diff_eq!(*r, 5.0 * m, epsilon = 1e-12);
        }
    }

    #[test]
    fn resultant_antipodal_cancellation() {
        let u = unit(&[1.0, 0.0]);
        let v = unit(&[-1.0, 0.0]);
        let summary = mean_resultant(&[u, v], &[1.0, 1.0]).unwrap();
        assert_eq!(summary.rbar, 0.0);
    }

    #[test]
    fn resultant_of_two_basis_vectors() {
        let e1 = unit(&[1.0, 0.0, 0.0]);
        let e2 = unit(&[0.0, 1.0, 0.0]);
        let summary = mean_resultant(&[e1, e2], &[1.0, 1.0]).unwrap();
        assert_eq!(summary.resultant, vec![1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(summary.rbar, 2.0f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn resultant_zero_weights_is_empty_cluster() {
        let e1 = unit(&[1.0, 0.0]);
        assert_eq!(
            mean_resultant(&[e1], &[0.0]),
            Err(VmfError::EmptyCluster)
        );
    }

    #[test]
    fn samples_live_on_the_sphere() {
        let params = VmfParams::new(unit(&[0.0, 1.0, 0.0, 0.0]), 25.0).unwrap();
        for x in sample_vmf(&params, 500, 42) {
            assert!((norm2(x.values()) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = VmfParams::new(unit(&[0.5, -0.5, 0.5, 0.5]), 7.5).unwrap();
        let a = sample_vmf(&params, 64, 9);
        let b = sample_vmf(&params, 64, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_samples_have_vanishing_resultant() {
        let n = 4096;
        let params = VmfParams::new(unit(&[1.0, 0.0, 0.0]), 0.0).unwrap();
        let samples = sample_vmf(&params, n, 11);
        let summary = mean_resultant(&samples, &vec![1.0; n]).unwrap();
        assert!(
            summary.rbar <= 4.0 / (n as f64).sqrt(),
            "uniform rbar {}",
            summary.rbar
        );
    }

    #[test]
    fn sample_mean_cosine_matches_bessel_ratio() {
        let (d, kappa, n) = (10usize, 50.0, 10_000usize);
        let mut mu = vec![0.0; d];
        mu[2] = 1.0;
        let params = VmfParams::new(unit(&mu), kappa).unwrap();
        let samples = sample_vmf(&params, n, 1234);
        let dots: Vec<f64> = samples
            .iter()
            .map(|x| x.dot_unchecked(params.mu()))
            .collect();
        let mean = dots.iter().sum::<f64>() / n as f64;
        let var = dots.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1) as f64;
        let expect = bessel_ratio(d, kappa).unwrap();
        let margin = 3.0 * (var / n as f64).sqrt();
        assert!(
            (mean - expect).abs() <= margin,
            "mean cosine {mean} vs A_d {expect} (margin {margin})"
        );
    }

    #[test]
    fn kappa_recovered_from_samples() {
        // statistical version of the round trip at fixed seeds
        for &(d, kappa, seed) in &[
            (10usize, 5.0f64, 21u64),
            (10, 200.0, 22),
            (50, 10.0, 23),
            (50, 50.0, 24),
            (50, 200.0, 25),
        ] {
            let n = 10_000;
            let mut mu = vec![0.0; d];
            mu[0] = -1.0;
            let params = VmfParams::new(unit(&mu), kappa).unwrap();
            let samples = sample_vmf(&params, n, seed);
            let summary = mean_resultant(&samples, &vec![1.0; n]).unwrap();
            let est = estimate_kappa(summary.rbar, d);
            assert!(
                (est - kappa).abs() / kappa <= 0.10,
                "d={d} kappa={kappa}: estimated {est}"
            );
        }
    }
}
