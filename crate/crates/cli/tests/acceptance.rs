//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p spherecluster-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use spherecluster::clustering::{ClusterConfig, KappaMode, Mode};
use spherecluster::metrics::{
    adjusted_rand_index, compute_der, compute_mi, entropy_bits, optimal_mapping, ClusterMapping,
    ContingencyTable, Segment, SegmentTimeline,
};
use spherecluster::synth::{sample_labeled, MixtureSpec};
use spherecluster::vmf::{
    bessel_ratio, estimate_kappa, log_bessel_i, log_density, mean_resultant, sample_vmf,
    VmfParams,
};
use spherecluster::{fit, fit_movmf, fit_spherical_kmeans, UnitVector};

fn main() {
    let criteria: Vec<(&str, fn())> = vec![
        ("01 bessel-accuracy", criterion_01_bessel_accuracy),
        ("02 density-normalization", criterion_02_density_normalization),
        ("03 kappa-round-trip", criterion_03_kappa_round_trip),
        ("04 hard-em-monotonicity", criterion_04_monotonicity),
        ("05 baseline-equivalence", criterion_05_baseline_equivalence),
        ("06 synthetic-recovery", criterion_06_synthetic_recovery),
        ("07 comparative-claim", criterion_07_comparative_claim),
        ("08 der-oracle", criterion_08_der_oracle),
        ("09 mi-oracle", criterion_09_mi_oracle),
        ("10 end-to-end-determinism", criterion_10_determinism),
    ];

    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(()) => {
                println!(
                    "[PASS] criterion {name} ({:.2} s)",
                    start.elapsed().as_secs_f64()
                );
            }
            Err(payload) => {
                failures += 1;
                let message = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".to_string());
                println!(
                    "[FAIL] criterion {name} ({:.2} s): {message}",
                    start.elapsed().as_secs_f64()
                );
            }
        }
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

fn assert_rel(got: f64, want: f64, tol: f64, context: &str) {
    let err = (got - want).abs() / want.abs();
    assert!(
        err <= tol,
        "{context}: got {got}, want {want}, rel err {err:.3e} > {tol:e}"
    );
}

fn unit(values: &[f64]) -> UnitVector {
    UnitVector::from_unnormalized(values.to_vec()).unwrap()
}

/// Criterion 1: ln I_nu against the order-1/2 closed form and the
/// high-precision reference table, 1e-10 relative, under one second.
fn criterion_01_bessel_accuracy() {
    let start = Instant::now();

    // mpmath (dps=50) table: orders {0, 1, 24.5, 36.5, 37.5},
    // arguments {0.01, 1, 10, 100, 1000}
    const TABLE: &[(f64, f64, f64)] = &[
        (0.0, 0.01, 2.4999843751736089e-5),
        (0.0, 1.0, 0.23591435850717865),
        (0.0, 10.0, 7.9429720831186956),
        (0.0, 100.0, 96.779732689942584),
        (0.0, 1000.0, 995.62730888986946),
        (1.0, 0.01, -5.2983048665740782),
        (1.0, 1.0, -0.57064798749083128),
        (1.0, 10.0, 7.8902038341042123),
        (1.0, 100.0, 96.774707457591448),
        (1.0, 1000.0, 995.62680863963998),
        (24.5, 0.01, -186.19794214375471),
        (24.5, 1.0, -73.361471458534497),
        (24.5, 10.0, -15.994871942746386),
        (24.5, 100.0, 93.778505951239638),
        (24.5, 1000.0, 995.32704871948783),
        (36.5, 0.01, -290.91035843522488),
        (36.5, 1.0, -122.81498122373027),
        (36.5, 10.0, -38.116270756233672),
        (36.5, 100.0, 90.158067641972790),
        (36.5, 1000.0, 994.96092461248360),
        (37.5, 0.01, -299.83301675206530),
        (37.5, 1.0, -127.13264245399705),
        (37.5, 10.0, -40.148070361141691),
        (37.5, 100.0, 89.794388189781224),
        (37.5, 1000.0, 994.92391455628746),
    ];
    for &(nu, x, want) in TABLE {
        assert_rel(log_bessel_i(nu, x).unwrap(), want, 1e-10, "reference table");
    }

    // I_{1/2}(x) = sqrt(2/(pi x)) sinh x on a log grid over [0.01, 500]
    for i in 0..=40 {
        let x: f64 = 0.01 * (500.0f64 / 0.01).powf(f64::from(i) / 40.0);
        let log_sinh = if x > 30.0 {
            x - std::f64::consts::LN_2 + (-((-2.0 * x).exp())).ln_1p()
        } else {
            x.sinh().ln()
        };
        let closed = 0.5 * (2.0 / (std::f64::consts::PI * x)).ln() + log_sinh;
        assert_rel(log_bessel_i(0.5, x).unwrap(), closed, 1e-10, "half order");
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "bessel checks took {elapsed:.3} s, budget 1 s");
}

/// Criterion 2: exp(log_density) integrates to 1 over the sphere for
/// d in {2, 3}, kappa in {0, 1, 10}, tolerance 1e-6.
fn criterion_02_density_normalization() {
    use std::f64::consts::PI;
    for d in [2usize, 3] {
        for kappa in [0.0, 1.0, 10.0] {
            let mut mu = vec![0.0; d];
            mu[0] = 0.6;
            mu[d - 1] = -0.8;
            let params = VmfParams::new(unit(&mu), kappa).unwrap();
            let integral = match d {
                2 => {
                    let n = 4000;
                    let h = 2.0 * PI / f64::from(n);
                    (0..n)
                        .map(|i| {
                            let theta = f64::from(i) * h;
                            let x = unit(&[theta.cos(), theta.sin()]);
                            log_density(&params, &x).unwrap().exp() * h
                        })
                        .sum::<f64>()
                }
                3 => {
                    let (n_phi, n_theta) = (800, 1600);
                    let h_phi = PI / f64::from(n_phi);
                    let h_theta = 2.0 * PI / f64::from(n_theta);
                    let mut total = 0.0;
                    for i in 0..=n_phi {
                        let phi = f64::from(i) * h_phi;
                        let simpson = if i == 0 || i == n_phi {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        let mut ring = 0.0;
                        for j in 0..n_theta {
                            let theta = f64::from(j) * h_theta;
                            let x = unit(&[
                                phi.sin() * theta.cos(),
                                phi.sin() * theta.sin(),
                                phi.cos(),
                            ]);
                            ring += log_density(&params, &x).unwrap().exp();
                        }
                        total += simpson * ring * phi.sin();
                    }
                    total * h_phi / 3.0 * h_theta
                }
                _ => unreachable!(),
            };
            assert!(
                (integral - 1.0).abs() <= 1e-6,
                "d={d} kappa={kappa}: integral {integral}"
            );
        }
    }
}

/// Criterion 3: estimate_kappa(bessel_ratio(d, k), d) within 5% for d=50,
/// kappa in {10, 50, 200}; within 10% from 1e4-sample draws.
fn criterion_03_kappa_round_trip() {
    let d = 50usize;
    for &kappa in &[10.0f64, 50.0, 200.0] {
        let rbar = bessel_ratio(d, kappa).unwrap();
        let est = estimate_kappa(rbar, d);
        assert!(
            (est - kappa).abs() / kappa <= 0.05,
            "analytic round trip kappa={kappa}: estimate {est}"
        );
    }
    for (i, &kappa) in [10.0f64, 50.0, 200.0].iter().enumerate() {
        let n = 10_000;
        let mut mu = vec![0.0; d];
        mu[i] = 1.0;
        let params = VmfParams::new(unit(&mu), kappa).unwrap();
        let samples = sample_vmf(&params, n, 4000 + i as u64);
        let summary = mean_resultant(&samples, &vec![1.0; n]).unwrap();
        let est = estimate_kappa(summary.rbar, d);
        assert!(
            (est - kappa).abs() / kappa <= 0.10,
            "sampled round trip kappa={kappa}: estimate {est}"
        );
    }
}

fn matrix_dataset(d: usize, n_clusters: usize, seed: u64) -> (Vec<UnitVector>, Vec<usize>) {
    let weights = vec![1.0 / n_clusters as f64; n_clusters];
    let kappas: Vec<f64> = (0..n_clusters)
        .map(|h| 30.0 + 10.0 * (h % 3) as f64)
        .collect();
    let spec = MixtureSpec::orthonormal(d, weights, kappas, seed).unwrap();
    sample_labeled(&spec, 400, seed.wrapping_add(1))
}

/// Criterion 4: objective trace non-decreasing (1e-9) with exact kappa, and
/// final >= initial with the moment estimate, over
/// d in {10, 50, 75} x N_c in {2, 4, 9} x 20 seeds, under 60 s.
fn criterion_04_monotonicity() {
    let start = Instant::now();
    for &d in &[10usize, 50, 75] {
        for &n_clusters in &[2usize, 4, 9] {
            for seed in 0..20u64 {
                let cell = (d * 1000 + n_clusters * 10) as u64 + seed * 31;
                let (points, _) = matrix_dataset(d, n_clusters, cell);

                let exact = fit_movmf(
                    &points,
                    &ClusterConfig::new(n_clusters)
                        .with_seed(seed)
                        .with_kappa_mode(KappaMode::Exact),
                )
                .unwrap();
                for pair in exact.objective_trace.windows(2) {
                    assert!(
                        pair[1] >= pair[0] - 1e-9,
                        "exact d={d} nc={n_clusters} seed={seed}: {} -> {}",
                        pair[0],
                        pair[1]
                    );
                }

                let eq10 = fit_movmf(
                    &points,
                    &ClusterConfig::new(n_clusters)
                        .with_seed(seed)
                        .with_kappa_mode(KappaMode::Eq10),
                )
                .unwrap();
                let first = eq10.objective_trace.first().copied().unwrap();
                let last = eq10.objective_trace.last().copied().unwrap();
                assert!(
                    last >= first - 1e-9,
                    "eq10 d={d} nc={n_clusters} seed={seed}: final {last} < initial {first}"
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "matrix took {elapsed:.1} s, budget 60 s");
}

/// Criterion 5: movmf-tied and spherical K-means produce identical label
/// sequences at every iteration from shared initialization, exactly.
fn criterion_05_baseline_equivalence() {
    for &d in &[10usize, 50, 75] {
        for &n_clusters in &[2usize, 4, 9] {
            for seed in 0..20u64 {
                let cell = (d * 1000 + n_clusters * 10) as u64 + seed * 31;
                let (points, _) = matrix_dataset(d, n_clusters, cell);
                let base = ClusterConfig::new(n_clusters)
                    .with_seed(seed)
                    .with_rel_tol(f64::MIN_POSITIVE)
                    .with_track_labels(true);
                let tied = fit_movmf(&points, &base.clone().with_mode(Mode::MovmfTied)).unwrap();
                let skm = fit_spherical_kmeans(
                    &points,
                    &base.clone().with_mode(Mode::SphericalKmeans),
                )
                .unwrap();
                assert_eq!(
                    tied.iterations, skm.iterations,
                    "iteration counts differ at d={d} nc={n_clusters} seed={seed}"
                );
                assert_eq!(
                    tied.label_history, skm.label_history,
                    "label sequences differ at d={d} nc={n_clusters} seed={seed}"
                );
                assert_eq!(
                    tied.assignments.labels(),
                    skm.assignments.labels(),
                    "final labels differ at d={d} nc={n_clusters} seed={seed}"
                );
            }
        }
    }
}

/// Criterion 6: 2000 points, d=50, 4 components at kappa 50 with orthogonal
/// means; movMF recovers the truth at ARI >= 0.95 in under 5 s.
fn criterion_06_synthetic_recovery() {
    let start = Instant::now();
    let spec = MixtureSpec::orthonormal(50, vec![0.25; 4], vec![50.0; 4], 600).unwrap();
    let (points, truth) = sample_labeled(&spec, 2000, 601);
    let result = fit_movmf(&points, &ClusterConfig::new(4).with_seed(602)).unwrap();
    let ari = adjusted_rand_index(result.assignments.labels(), &truth);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(ari >= 0.95, "ARI {ari}");
    assert!(elapsed < 5.0, "recovery took {elapsed:.2} s, budget 5 s");
}

/// Criterion 7: on mixtures with heterogeneous concentrations {20, 80} and
/// skewed weights (0.55, 0.25, 0.12, 0.08), the adaptive mixture beats
/// spherical K-means on mean ARI over 20 seeds.
fn criterion_07_comparative_claim() {
    let weights = vec![0.55, 0.25, 0.12, 0.08];
    let kappas = vec![20.0, 80.0, 20.0, 80.0];
    let mut movmf_total = 0.0;
    let mut skmeans_total = 0.0;
    for seed in 0..20u64 {
        let spec =
            MixtureSpec::shared_axis(50, weights.clone(), kappas.clone(), 0.3, 7000 + seed)
                .unwrap();
        let (points, truth) = sample_labeled(&spec, 1500, 8000 + seed);
        let movmf = fit(
            &points,
            &ClusterConfig::new(4).with_seed(seed).with_mode(Mode::Movmf),
        )
        .unwrap();
        let skmeans = fit(
            &points,
            &ClusterConfig::new(4)
                .with_seed(seed)
                .with_mode(Mode::SphericalKmeans),
        )
        .unwrap();
        movmf_total += adjusted_rand_index(movmf.assignments.labels(), &truth);
        skmeans_total += adjusted_rand_index(skmeans.assignments.labels(), &truth);
    }
    let movmf_mean = movmf_total / 20.0;
    let skmeans_mean = skmeans_total / 20.0;
    println!(
        "       comparative: movMF mean ARI {movmf_mean:.4}, spherical K-means {skmeans_mean:.4}"
    );
    assert!(
        movmf_mean > skmeans_mean,
        "movMF mean ARI {movmf_mean:.4} does not exceed K-means {skmeans_mean:.4}"
    );
}

fn mapped_mass(table: &ContingencyTable, mapping: &ClusterMapping) -> u64 {
    mapping
        .sys_to_ref
        .iter()
        .enumerate()
        .filter_map(|(j, row)| row.map(|i| table.counts()[i][j]))
        .sum()
}

fn brute_force_best(counts: &[Vec<u64>]) -> u64 {
    fn go(counts: &[Vec<u64>], row: usize, used: &mut Vec<bool>) -> u64 {
        if row == counts.len() {
            return 0;
        }
        let mut best = go(counts, row + 1, used);
        for j in 0..counts[row].len() {
            if !used[j] {
                used[j] = true;
                best = best.max(counts[row][j] + go(counts, row + 1, used));
                used[j] = false;
            }
        }
        best
    }
    let mut used = vec![false; counts[0].len()];
    go(counts, 0, &mut used)
}

fn two_speaker_reference() -> SegmentTimeline {
    SegmentTimeline::from_segments(vec![
        Segment::new(0.0, 10.0, Some("A".into())).unwrap(),
        Segment::new(10.0, 20.0, Some("B".into())).unwrap(),
    ])
}

/// Criterion 8: the three DER hand cases come out exact, and the optimal
/// mapping matches exhaustive enumeration on 200 random tables up to 5x5.
fn criterion_08_der_oracle() {
    let reference = two_speaker_reference();
    let perfect = compute_der(&reference, &reference, 0.010).unwrap();
    assert_eq!(perfect.der, 0.0, "perfect output must score 0");

    let permuted = SegmentTimeline::from_segments(vec![
        Segment::new(0.0, 10.0, Some("spk9".into())).unwrap(),
        Segment::new(10.0, 20.0, Some("spk4".into())).unwrap(),
    ]);
    let renamed = compute_der(&reference, &permuted, 0.010).unwrap();
    assert_eq!(renamed.der, 0.0, "label permutation must score 0");

    let merged = SegmentTimeline::from_segments(vec![
        Segment::new(0.0, 20.0, Some("X".into())).unwrap()
    ]);
    let half = compute_der(&reference, &merged, 0.010).unwrap();
    assert_eq!(half.der, 0.5, "merged speakers must score exactly 50%");

    let mut rng = ChaCha8Rng::seed_from_u64(880);
    for trial in 0..200 {
        let rows = rng.random_range(1..=5);
        let cols = rng.random_range(1..=5);
        let counts: Vec<Vec<u64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0..100u64)).collect())
            .collect();
        let table = ContingencyTable::from_counts(counts.clone()).unwrap();
        let mapping = optimal_mapping(&table);
        assert_eq!(
            mapped_mass(&table, &mapping),
            brute_force_best(&counts),
            "trial {trial}: table {counts:?}"
        );
    }
}

fn brute_force_mi(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len() as f64;
    let mut mi = 0.0;
    for f in 0..a.len() {
        let joint = a
            .iter()
            .zip(b)
            .filter(|(x, y)| **x == a[f] && **y == b[f])
            .count() as f64;
        let row = a.iter().filter(|x| **x == a[f]).count() as f64;
        let col = b.iter().filter(|y| **y == b[f]).count() as f64;
        mi += (joint * n / (row * col)).log2() / n;
    }
    mi
}

/// Criterion 9: compute_mi equals the per-frame brute force to 1e-12 on 100
/// random sequences, the even two-way split is exactly 1 bit, and MI never
/// exceeds either marginal entropy.
fn criterion_09_mi_oracle() {
    let even = ContingencyTable::from_counts(vec![vec![50, 0], vec![0, 50]]).unwrap();
    assert_eq!(compute_mi(&even).unwrap(), 1.0, "even split is exactly 1 bit");

    let mut rng = ChaCha8Rng::seed_from_u64(990);
    for trial in 0..100 {
        let len = rng.random_range(20..150);
        let a: Vec<u32> = (0..len).map(|_| rng.random_range(0..5)).collect();
        let b: Vec<u32> = (0..len).map(|_| rng.random_range(0..4)).collect();
        let rows = (*a.iter().max().unwrap() + 1) as usize;
        let cols = (*b.iter().max().unwrap() + 1) as usize;
        let mut counts = vec![vec![0u64; cols]; rows];
        for (x, y) in a.iter().zip(&b) {
            counts[*x as usize][*y as usize] += 1;
        }
        let table = ContingencyTable::from_counts(counts).unwrap();
        let fast = compute_mi(&table).unwrap();
        let slow = brute_force_mi(&a, &b);
        assert!(
            (fast - slow).abs() <= 1e-12,
            "trial {trial}: table MI {fast} vs brute force {slow}"
        );
        let bound = entropy_bits(table.row_sums()).min(entropy_bits(table.col_sums()));
        assert!(fast <= bound + 1e-12, "trial {trial}: MI {fast} above {bound}");
        assert!(fast >= -1e-12, "trial {trial}: MI {fast} negative");
    }
}

/// Criterion 10: synth -> cluster -> score, run twice with the same seeds,
/// produces byte-identical files and identical metric lines.
fn criterion_10_determinism() {
    let bin = env!("CARGO_BIN_EXE_spherecluster");
    let dir = tempfile::TempDir::new().unwrap();
    let mut outputs: Vec<[Vec<u8>; 6]> = Vec::new();

    for run in 0..2 {
        let base = dir.path().join(format!("run{run}"));
        std::fs::create_dir(&base).unwrap();
        let emb = base.join("emb.bin");
        let segs = base.join("segments.txt");
        let truth = base.join("truth.rttm");
        let sys = base.join("sys.rttm");

        let synth = Command::new(bin)
            .args([
                "synth",
                "--out-embeddings",
                emb.to_str().unwrap(),
                "--out-segments",
                segs.to_str().unwrap(),
                "--out-rttm",
                truth.to_str().unwrap(),
                "--nc",
                "4",
                "--dim",
                "40",
                "--n",
                "300",
                "--kappa",
                "25,75,25,75",
                "--alpha",
                "0.4,0.3,0.2,0.1",
                "--seed",
                "11",
                "--format",
                "binary",
            ])
            .output()
            .unwrap();
        assert!(synth.status.success(), "synth failed: {synth:?}");

        let cluster = Command::new(bin)
            .args([
                "cluster",
                "--embeddings",
                emb.to_str().unwrap(),
                "--segments",
                segs.to_str().unwrap(),
                "--out",
                sys.to_str().unwrap(),
                "--nc",
                "4",
                "--seed",
                "3",
                "--kappa",
                "exact",
            ])
            .output()
            .unwrap();
        assert!(cluster.status.success(), "cluster failed: {cluster:?}");

        let score = Command::new(bin)
            .args([
                "score",
                "--ref",
                truth.to_str().unwrap(),
                "--sys",
                sys.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(score.status.success(), "score failed: {score:?}");

        outputs.push([
            std::fs::read(&emb).unwrap(),
            std::fs::read(&segs).unwrap(),
            std::fs::read(&truth).unwrap(),
            std::fs::read(&sys).unwrap(),
            cluster.stdout,
            score.stdout,
        ]);
    }

    let names = [
        "embedding bytes",
        "segment bytes",
        "truth RTTM bytes",
        "system RTTM bytes",
        "cluster stdout",
        "score stdout",
    ];
    for (i, name) in names.iter().enumerate() {
        assert_eq!(outputs[0][i], outputs[1][i], "{name} differ between runs");
    }
}
