//! Hard-assignment EM for mixtures of von Mises-Fisher distributions, plus
//! the spherical K-means baseline.
//!
//! Each EM iteration hard-assigns every point to the component maximizing
//! ln a_h + ln c_d(k_h) + k_h (mu_h . x) — exactly n * N_c score evaluations,
//! all in the log domain — then refits weights, mean directions, and
//! concentrations from the induced clusters. Runs are single-threaded and
//! accumulate in input order, so a (data, config) pair reproduces bit
//! identical results.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hypersphere::{norm2, UnitVector};
use crate::vmf::{estimate_kappa, estimate_kappa_exact, log_norm_const, VmfError, VmfParams};

/// Concentration shared by all components in tied mode, and reported as the
/// placeholder by spherical K-means (which never estimates it). The
/// tied-mode argmax is invariant to this value.
pub const SHARED_KAPPA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("{got} points cannot fill {need} clusters")]
    TooFewPoints { need: usize, got: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no input points")]
    EmptyData,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Vmf(#[from] VmfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Full mixture: weights and per-component concentrations are estimated.
    #[default]
    Movmf,
    /// Weights and concentrations pinned uniform/shared; only means move.
    MovmfTied,
    /// Max-cosine assignment with renormalized centroids.
    SphericalKmeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaMode {
    /// Moment approximation (rbar d - rbar^3) / (1 - rbar^2).
    #[default]
    Eq10,
    /// Newton solve of A_d(kappa) = rbar.
    Exact,
}

#[derive(Debug, Clone)]
pub struct ClusterConfig {
    pub n_clusters: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub mode: Mode,
    pub kappa_mode: KappaMode,
    /// Record the label vector after every iteration (off by default; the
    /// algorithm itself only ever stores the current n labels).
    pub track_labels: bool,
}

impl ClusterConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            max_iters: 200,
            rel_tol: 1e-6,
            seed: 0,
            mode: Mode::default(),
            kappa_mode: KappaMode::default(),
            track_labels: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_kappa_mode(mut self, kappa_mode: KappaMode) -> Self {
        self.kappa_mode = kappa_mode;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_track_labels(mut self, track: bool) -> Self {
        self.track_labels = track;
        self
    }
}

/// Mixture weights plus per-component vMF parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    weights: Vec<f64>,
    components: Vec<VmfParams>,
    dim: usize,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<VmfParams>) -> Result<Self, ClusterError> {
        if components.is_empty() || weights.len() != components.len() {
            return Err(ClusterError::InvalidModel(format!(
                "need matching non-zero counts of weights and components, got {} and {}",
                weights.len(),
                components.len()
            )));
        }
        let dim = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(ClusterError::DimensionMismatch {
                left: dim,
                right: c.dim(),
            });
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(ClusterError::InvalidModel(
                "weights must be non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ClusterError::InvalidModel(format!(
                "weights sum to {total}, not 1 within 1e-12"
            )));
        }
        Ok(Self {
            weights,
            components,
            dim,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[VmfParams] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Hard assignment of every point to one cluster index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignments {
    labels: Vec<usize>,
}

impl Assignments {
    pub fn new(labels: Vec<usize>, n_clusters: usize) -> Result<Self, ClusterError> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_clusters) {
            return Err(ClusterError::InvalidModel(format!(
                "label {bad} out of range for {n_clusters} clusters"
            )));
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Fit output: final partition, final model, objective per iteration, and
/// (when tracked) the label vector after every iteration.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub assignments: Assignments,
    pub model: MixtureModel,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub label_history: Option<Vec<Vec<usize>>>,
}

fn check_points(points: &[UnitVector]) -> Result<usize, ClusterError> {
    let Some(first) = points.first() else {
        return Err(ClusterError::EmptyData);
    };
    let d = first.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(ClusterError::DimensionMismatch {
            left: d,
            right: p.dim(),
        });
    }
    Ok(d)
}

fn check_config(points: &[UnitVector], config: &ClusterConfig) -> Result<usize, ClusterError> {
    let d = check_points(points)?;
    if config.n_clusters == 0 {
        return Err(ClusterError::InvalidConfig("n_clusters must be >= 1".into()));
    }
    if points.len() < config.n_clusters {
        return Err(ClusterError::TooFewPoints {
            need: config.n_clusters,
            got: points.len(),
        });
    }
    if config.max_iters == 0 {
        return Err(ClusterError::InvalidConfig("max_iters must be >= 1".into()));
    }
    if config.rel_tol.is_nan() || config.rel_tol <= 0.0 {
        return Err(ClusterError::InvalidConfig("rel_tol must be > 0".into()));
    }
    Ok(d)
}

/// Greedy farthest-point seeding in cosine distance. The first seed is drawn
/// from `seed`; each next seed is the point minimizing its best similarity to
/// the chosen set, ties to the lowest index.
fn farthest_point_seeds(points: &[UnitVector], n_clusters: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut best_sim: Vec<f64> = points
        .iter()
        .map(|p| p.dot_unchecked(&points[first]))
        .collect();
    while chosen.len() < n_clusters {
        let mut next = usize::MAX;
        let mut next_sim = f64::INFINITY;
        for i in 0..n {
            if !taken[i] && best_sim[i] < next_sim {
                next_sim = best_sim[i];
                next = i;
            }
        }
        taken[next] = true;
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            let sim = p.dot_unchecked(&points[next]);
            if sim > best_sim[i] {
                best_sim[i] = sim;
            }
        }
    }
    chosen
}

/// Max-cosine assignment against explicit centers, ties to the lowest index.
fn assign_max_cosine(centers: &[UnitVector], points: &[UnitVector]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (h, c) in centers.iter().enumerate() {
                let sim = c.dot_unchecked(p);
                if sim > best_sim {
                    best_sim = sim;
                    best = h;
                }
            }
            best
        })
        .collect()
}

/// Seeds a model for the full movMF mode: farthest-point seeding, one
/// hard-assignment pass against the seed directions, then a moment M-step on
/// the induced clusters. Deterministic in `(points, n_clusters, seed)`.
pub fn init_model(
    points: &[UnitVector],
    n_clusters: usize,
    seed: u64,
) -> Result<MixtureModel, ClusterError> {
    let _ = check_points(points)?;
    if points.len() < n_clusters || n_clusters == 0 {
        return Err(ClusterError::TooFewPoints {
            need: n_clusters.max(1),
            got: points.len(),
        });
    }
    let seeds = farthest_point_seeds(points, n_clusters, seed);
    let centers: Vec<UnitVector> = seeds.iter().map(|&i| points[i].clone()).collect();
    let mut assign = Assignments::new(assign_max_cosine(&centers, points), n_clusters)?;
    m_step(points, &mut assign, n_clusters, KappaMode::Eq10)
}

/// Tied-mode initial model: the seed points themselves as means, uniform
/// weights, and the shared concentration.
fn tied_seed_model(
    points: &[UnitVector],
    n_clusters: usize,
    seed: u64,
) -> Result<MixtureModel, ClusterError> {
    let seeds = farthest_point_seeds(points, n_clusters, seed);
    let weights = vec![1.0 / n_clusters as f64; n_clusters];
    let components = seeds
        .iter()
        .map(|&i| VmfParams::new(points[i].clone(), SHARED_KAPPA))
        .collect::<Result<Vec<_>, _>>()?;
    MixtureModel::new(weights, components)
}

/// Hardened E-step: every point goes to argmax_h of
/// ln a_h + ln c_d(k_h) + k_h (mu_h . x), ties to the lowest index.
/// Components with zero weight are excluded from the argmax.
pub fn e_step_hard(
    model: &MixtureModel,
    points: &[UnitVector],
) -> Result<Assignments, ClusterError> {
    let d = check_points(points)?;
    if d != model.dim() {
        return Err(ClusterError::DimensionMismatch {
            left: model.dim(),
            right: d,
        });
    }
    let mut base = Vec::with_capacity(model.n_components());
    for (w, comp) in model.weights().iter().zip(model.components()) {
        base.push(if *w > 0.0 {
            w.ln() + log_norm_const(d, comp.kappa())?
        } else {
            f64::NEG_INFINITY
        });
    }
    let labels = points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (h, comp) in model.components().iter().enumerate() {
                let score = base[h] + comp.kappa() * comp.mu().dot_unchecked(p);
                if score > best_score {
                    best_score = score;
                    best = h;
                }
            }
            best
        })
        .collect();
    Assignments::new(labels, model.n_components())
}

struct ClusterAccumulator {
    count: usize,
    resultant: Vec<f64>,
    first_member: Option<usize>,
}

impl ClusterAccumulator {
    fn new(d: usize) -> Self {
        Self {
            count: 0,
            resultant: vec![0.0; d],
            first_member: None,
        }
    }

    fn add(&mut self, index: usize, point: &UnitVector) {
        self.count += 1;
        self.first_member.get_or_insert(index);
        for (r, x) in self.resultant.iter_mut().zip(point.values()) {
            *r += x;
        }
    }

    fn remove(&mut self, point: &UnitVector) {
        self.count -= 1;
        for (r, x) in self.resultant.iter_mut().zip(point.values()) {
            *r -= x;
        }
    }

    /// Mean direction and concentration for the accumulated cluster. A fully
    /// cancelled resultant has no direction; the first member stands in and
    /// the near-zero rbar drives kappa to the uniform limit anyway.
    fn params(
        &self,
        points: &[UnitVector],
        kappa_mode: KappaMode,
    ) -> Result<(VmfParams, f64), ClusterError> {
        let d = self.resultant.len();
        let norm = norm2(&self.resultant);
        let rbar = norm / self.count as f64;
        let mu = if norm > 1e-12 {
            UnitVector::from_unnormalized(self.resultant.clone())
                .map_err(|e| ClusterError::InvalidModel(e.to_string()))?
        } else {
            points[self.first_member.expect("non-empty cluster")].clone()
        };
        let kappa = match kappa_mode {
            KappaMode::Eq10 => estimate_kappa(rbar, d),
            KappaMode::Exact => estimate_kappa_exact(rbar, d)?,
        };
        Ok((VmfParams::new(mu, kappa)?, rbar))
    }
}

/// Maximization step: weights from counts, means from normalized resultants,
/// concentrations from the mean resultant lengths.
///
/// An empty cluster is reseeded instead of crashing: it steals the point with
/// the lowest log-score under its current assignment (donor clusters keep at
/// least one member), which sets the empty component's weight to 1/n. The
/// assignment is updated in place so model and labels stay consistent.
pub fn m_step(
    points: &[UnitVector],
    assign: &mut Assignments,
    n_clusters: usize,
    kappa_mode: KappaMode,
) -> Result<MixtureModel, ClusterError> {
    let d = check_points(points)?;
    let n = points.len();
    if assign.len() != n {
        return Err(ClusterError::DimensionMismatch {
            left: assign.len(),
            right: n,
        });
    }
    if let Some(&bad) = assign.labels().iter().find(|&&l| l >= n_clusters) {
        return Err(ClusterError::InvalidModel(format!(
            "label {bad} out of range for {n_clusters} clusters"
        )));
    }
    if n < n_clusters {
        return Err(ClusterError::TooFewPoints {
            need: n_clusters,
            got: n,
        });
    }

    let mut accs: Vec<ClusterAccumulator> =
        (0..n_clusters).map(|_| ClusterAccumulator::new(d)).collect();
    for (i, (&label, point)) in assign.labels.iter().zip(points).enumerate() {
        accs[label].add(i, point);
    }

    for h in 0..n_clusters {
        if accs[h].count > 0 {
            continue;
        }
        // score every point under its own (non-empty) cluster's fresh params
        let mut table: Vec<Option<(f64, f64, VmfParams)>> = Vec::with_capacity(n_clusters);
        for acc in &accs {
            table.push(if acc.count == 0 {
                None
            } else {
                let (params, _) = acc.params(points, kappa_mode)?;
                let base = (acc.count as f64 / n as f64).ln()
                    + log_norm_const(d, params.kappa())?;
                Some((base, params.kappa(), params))
            });
        }
        let mut worst = usize::MAX;
        let mut worst_score = f64::INFINITY;
        for (i, (&label, point)) in assign.labels.iter().zip(points).enumerate() {
            if accs[label].count <= 1 {
                continue;
            }
            let (base, kappa, params) = table[label].as_ref().expect("donor is non-empty");
            let score = base + kappa * params.mu().dot_unchecked(point);
            if score < worst_score {
                worst_score = score;
                worst = i;
            }
        }
        let donor = assign.labels[worst];
        accs[donor].remove(&points[worst]);
        assign.labels[worst] = h;
        if accs[donor].first_member == Some(worst) {
            accs[donor].first_member = assign.labels.iter().position(|&l| l == donor);
        }
        accs[h].add(worst, &points[worst]);
    }

    let weights: Vec<f64> = accs
        .iter()
        .map(|acc| acc.count as f64 / n as f64)
        .collect();
    let components = accs
        .iter()
        .map(|acc| acc.params(points, kappa_mode).map(|(p, _)| p))
        .collect::<Result<Vec<_>, _>>()?;
    MixtureModel::new(weights, components)
}

/// Centroid update shared by spherical K-means and the tied mode: normalized
/// cluster resultants, with empty clusters reseeded by the point of lowest
/// cosine to its own updated centroid.
fn centroid_update(
    points: &[UnitVector],
    labels: &mut [usize],
    n_clusters: usize,
) -> Result<Vec<UnitVector>, ClusterError> {
    let d = points[0].dim();
    let mut accs: Vec<ClusterAccumulator> =
        (0..n_clusters).map(|_| ClusterAccumulator::new(d)).collect();
    for (i, (&label, point)) in labels.iter().zip(points).enumerate() {
        accs[label].add(i, point);
    }
    let center_of = |acc: &ClusterAccumulator| -> Result<UnitVector, ClusterError> {
        let norm = norm2(&acc.resultant);
        if norm > 1e-12 {
            UnitVector::from_unnormalized(acc.resultant.clone())
                .map_err(|e| ClusterError::InvalidModel(e.to_string()))
        } else {
            Ok(points[acc.first_member.expect("non-empty cluster")].clone())
        }
    };
    for h in 0..n_clusters {
        if accs[h].count > 0 {
            continue;
        }
        let centers: Vec<Option<UnitVector>> = accs
            .iter()
            .map(|acc| {
                if acc.count == 0 {
                    None
                } else {
                    Some(center_of(acc).expect("non-empty cluster"))
                }
            })
            .collect();
        let mut worst = usize::MAX;
        let mut worst_sim = f64::INFINITY;
        for (i, (&label, point)) in labels.iter().zip(points).enumerate() {
            if accs[label].count <= 1 {
                continue;
            }
            let sim = centers[label]
                .as_ref()
                .expect("donor is non-empty")
                .dot_unchecked(point);
            if sim < worst_sim {
                worst_sim = sim;
                worst = i;
            }
        }
        let donor = labels[worst];
        accs[donor].remove(&points[worst]);
        labels[worst] = h;
        if accs[donor].first_member == Some(worst) {
            accs[donor].first_member = labels.iter().position(|&l| l == donor);
        }
        accs[h].add(worst, &points[worst]);
    }
    accs.iter().map(center_of).collect()
}

/// Complete-data log-likelihood: sum over points of
/// ln a_{label_i} + ln c_d(k_{label_i}) + k_{label_i} (mu_{label_i} . x_i).
pub fn objective(
    model: &MixtureModel,
    points: &[UnitVector],
    assign: &Assignments,
) -> Result<f64, ClusterError> {
    let d = check_points(points)?;
    if d != model.dim() {
        return Err(ClusterError::DimensionMismatch {
            left: model.dim(),
            right: d,
        });
    }
    if assign.len() != points.len() {
        return Err(ClusterError::DimensionMismatch {
            left: assign.len(),
            right: points.len(),
        });
    }
    let mut base = Vec::with_capacity(model.n_components());
    for (w, comp) in model.weights().iter().zip(model.components()) {
        base.push(if *w > 0.0 {
            w.ln() + log_norm_const(d, comp.kappa())?
        } else {
            f64::NEG_INFINITY
        });
    }
    let mut total = 0.0;
    for (&label, point) in assign.labels().iter().zip(points) {
        if label >= model.n_components() {
            return Err(ClusterError::InvalidModel(format!(
                "label {label} out of range for {} components",
                model.n_components()
            )));
        }
        let comp = &model.components()[label];
        total += base[label] + comp.kappa() * comp.mu().dot_unchecked(point);
    }
    Ok(total)
}

/// Log-density of `x` under the full mixture, via max-shifted log-sum-exp.
pub fn mixture_log_density(model: &MixtureModel, x: &UnitVector) -> Result<f64, ClusterError> {
    if model.dim() != x.dim() {
        return Err(ClusterError::DimensionMismatch {
            left: model.dim(),
            right: x.dim(),
        });
    }
    let mut logs = Vec::with_capacity(model.n_components());
    for (w, comp) in model.weights().iter().zip(model.components()) {
        if *w > 0.0 {
            logs.push(w.ln() + crate::vmf::log_density(comp, x)?);
        }
    }
    let max = logs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Ok(max);
    }
    Ok(max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln())
}

fn relative_improvement(prev: f64, current: f64) -> f64 {
    (current - prev).abs() / prev.abs().max(1e-12)
}

/// Runs hard-EM from an explicit initial model. Exposed so runs can share or
/// replay an initialization.
pub fn fit_movmf_from(
    points: &[UnitVector],
    init: MixtureModel,
    config: &ClusterConfig,
) -> Result<ClusteringResult, ClusterError> {
    let d = check_config(points, config)?;
    if init.dim() != d {
        return Err(ClusterError::DimensionMismatch {
            left: init.dim(),
            right: d,
        });
    }
    if init.n_components() != config.n_clusters {
        return Err(ClusterError::InvalidModel(format!(
            "initial model has {} components, config wants {}",
            init.n_components(),
            config.n_clusters
        )));
    }
    let tied = config.mode == Mode::MovmfTied;
    let mut model = init;
    let mut trace = Vec::new();
    let mut history = config.track_labels.then(Vec::new);
    let mut final_labels: Option<Assignments> = None;
    let mut converged = false;

    for _ in 0..config.max_iters {
        let mut labels = e_step_hard(&model, points)?;
        if final_labels.as_ref() == Some(&labels) {
            converged = true;
            break;
        }
        model = if tied {
            let centers = centroid_update(points, &mut labels.labels, config.n_clusters)?;
            let weights = vec![1.0 / config.n_clusters as f64; config.n_clusters];
            let components = centers
                .into_iter()
                .map(|mu| VmfParams::new(mu, SHARED_KAPPA))
                .collect::<Result<Vec<_>, _>>()?;
            MixtureModel::new(weights, components)?
        } else {
            m_step(points, &mut labels, config.n_clusters, config.kappa_mode)?
        };
        let obj = objective(&model, points, &labels)?;
        trace.push(obj);
        if let Some(h) = history.as_mut() {
            h.push(labels.labels().to_vec());
        }
        let done = trace.len() >= 2
            && relative_improvement(trace[trace.len() - 2], obj) < config.rel_tol;
        final_labels = Some(labels);
        if done {
            converged = true;
            break;
        }
    }

    let assignments = final_labels.expect("max_iters >= 1 guarantees one iteration");
    Ok(ClusteringResult {
        iterations: trace.len(),
        assignments,
        model,
        objective_trace: trace,
        converged,
        label_history: history,
    })
}

/// Algorithm entry point for the mixture modes. `SphericalKmeans` configs are
/// delegated to `fit_spherical_kmeans`.
pub fn fit_movmf(
    points: &[UnitVector],
    config: &ClusterConfig,
) -> Result<ClusteringResult, ClusterError> {
    check_config(points, config)?;
    match config.mode {
        Mode::SphericalKmeans => fit_spherical_kmeans(points, config),
        Mode::Movmf => {
            let init = init_model(points, config.n_clusters, config.seed)?;
            fit_movmf_from(points, init, config)
        }
        Mode::MovmfTied => {
            let init = tied_seed_model(points, config.n_clusters, config.seed)?;
            fit_movmf_from(points, init, config)
        }
    }
}

/// Spherical K-means: max-cosine assignment, centroids renormalized onto the
/// sphere each update. Seeding and convergence rules match `fit_movmf`; the
/// returned model carries uniform weights and the placeholder concentration.
/// The objective trace is the within-cluster cosine sum.
pub fn fit_spherical_kmeans(
    points: &[UnitVector],
    config: &ClusterConfig,
) -> Result<ClusteringResult, ClusterError> {
    check_config(points, config)?;
    let n_clusters = config.n_clusters;
    let seeds = farthest_point_seeds(points, n_clusters, config.seed);
    let mut centers: Vec<UnitVector> = seeds.iter().map(|&i| points[i].clone()).collect();

    let mut trace = Vec::new();
    let mut history = config.track_labels.then(Vec::new);
    let mut final_labels: Option<Vec<usize>> = None;
    let mut converged = false;

    for _ in 0..config.max_iters {
        let mut labels = assign_max_cosine(&centers, points);
        if final_labels.as_ref() == Some(&labels) {
            converged = true;
            break;
        }
        centers = centroid_update(points, &mut labels, n_clusters)?;
        let obj: f64 = labels
            .iter()
            .zip(points)
            .map(|(&l, p)| centers[l].dot_unchecked(p))
            .sum();
        trace.push(obj);
        if let Some(h) = history.as_mut() {
            h.push(labels.clone());
        }
        let done = trace.len() >= 2
            && relative_improvement(trace[trace.len() - 2], obj) < config.rel_tol;
        final_labels = Some(labels);
        if done {
            converged = true;
            break;
        }
    }

    let labels = final_labels.expect("max_iters >= 1 guarantees one iteration");
    let weights = vec![1.0 / n_clusters as f64; n_clusters];
    let components = centers
        .into_iter()
        .map(|mu| VmfParams::new(mu, SHARED_KAPPA))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClusteringResult {
        iterations: trace.len(),
        assignments: Assignments::new(labels, n_clusters)?,
        model: MixtureModel::new(weights, components)?,
        objective_trace: trace,
        converged,
        label_history: history,
    })
}

/// Dispatches on `config.mode`.
pub fn fit(
    points: &[UnitVector],
    config: &ClusterConfig,
) -> Result<ClusteringResult, ClusterError> {
    match config.mode {
        Mode::SphericalKmeans => fit_spherical_kmeans(points, config),
        _ => fit_movmf(points, config),
    }
}
