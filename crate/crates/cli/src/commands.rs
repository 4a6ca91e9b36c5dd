//! Command implementations. Machine-readable results go to stdout as a
//! single key=value line; logs and human-readable summaries go to stderr.
//! Numbers on the machine line use the shortest representation that parses
//! back to the identical f64.

use std::fmt;

use spherecluster::clustering::{ClusterConfig, KappaMode, Mode};
use spherecluster::dataio::{
    read_embeddings, read_rttm, read_segments, write_embeddings, write_rttm, write_segments,
    EmbeddingFormat,
};
use spherecluster::metrics::{
    compute_der, compute_mi, contingency, discretize_pair, entropy_bits, MetricsError, Segment,
    SegmentTimeline,
};
use spherecluster::synth::{orthonormal_directions, sample_labeled, MixtureSpec};
use spherecluster::vmf::VmfParams;
use spherecluster::{fit, fit_pca, length_normalize, pca_project, RawEmbedding, UnitVector};

use crate::args::{Cli, ClusterArgs, Command, FormatArg, KappaArg, ModeArg, ScoreArgs, SynthArgs};

/// Exit codes: 2 for I/O, parse, or specification problems; 3 for clustering
/// failures; 4 for scoring duration mismatches.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage={}: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

fn io_error(stage: &'static str, err: impl fmt::Display) -> CliError {
    CliError {
        stage,
        exit_code: 2,
        message: err.to_string(),
    }
}

fn cluster_error(stage: &'static str, err: impl fmt::Display) -> CliError {
    CliError {
        stage,
        exit_code: 3,
        message: err.to_string(),
    }
}

fn spec_error(stage: &'static str, err: impl fmt::Display) -> CliError {
    CliError {
        stage,
        exit_code: 2,
        message: err.to_string(),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Score(args) => cmd_score(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn cmd_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    let embeddings = read_embeddings(&args.embeddings).map_err(|e| io_error("read-embeddings", e))?;
    let timeline = read_segments(&args.segments).map_err(|e| io_error("read-segments", e))?;
    if embeddings.len() != timeline.segments().len() {
        return Err(spec_error(
            "align",
            format!(
                "{} embeddings vs {} segments; the files must be index-aligned",
                embeddings.len(),
                timeline.segments().len()
            ),
        ));
    }

    let reduced: Vec<RawEmbedding> = match args.pca_dim {
        Some(k) => {
            let model = fit_pca(&embeddings, k).map_err(|e| cluster_error("pca", e))?;
            embeddings
                .iter()
                .map(|v| pca_project(&model, v))
                .collect::<Result<_, _>>()
                .map_err(|e| cluster_error("pca", e))?
        }
        None => embeddings,
    };

    let points: Vec<UnitVector> = reduced
        .iter()
        .map(length_normalize)
        .collect::<Result<_, _>>()
        .map_err(|e| cluster_error("normalize", e))?;

    let config = ClusterConfig::new(args.nc)
        .with_seed(args.seed)
        .with_max_iters(args.max_iters)
        .with_rel_tol(args.tol)
        .with_mode(match args.mode {
            ModeArg::Movmf => Mode::Movmf,
            ModeArg::Skmeans => Mode::SphericalKmeans,
            ModeArg::MovmfTied => Mode::MovmfTied,
        })
        .with_kappa_mode(match args.kappa {
            KappaArg::Eq10 => KappaMode::Eq10,
            KappaArg::Exact => KappaMode::Exact,
        });
    let result = fit(&points, &config).map_err(|e| cluster_error("fit", e))?;

    eprintln!(
        "fit: n={} d={} nc={} iterations={} converged={}",
        points.len(),
        points[0].dim(),
        args.nc,
        result.iterations,
        result.converged
    );
    for (i, obj) in result.objective_trace.iter().enumerate() {
        eprintln!("iter {:>3}: objective {obj}", i + 1);
    }

    let labels: Vec<String> = result
        .assignments
        .labels()
        .iter()
        .map(|l| format!("C{l}"))
        .collect();
    let relabeled = timeline
        .relabeled(&labels)
        .map_err(|e| cluster_error("relabel", e))?;
    write_rttm(&args.out, &relabeled, &args.rec_id).map_err(|e| io_error("write-rttm", e))?;

    let final_objective = result
        .objective_trace
        .last()
        .copied()
        .unwrap_or(f64::NAN);
    println!(
        "mode={:?} n={} nc={} iterations={} converged={} objective={}",
        args.mode,
        points.len(),
        args.nc,
        result.iterations,
        result.converged,
        final_objective
    );
    Ok(())
}

fn cmd_score(args: &ScoreArgs) -> Result<(), CliError> {
    let (reference, ref_skipped) =
        read_rttm(&args.reference).map_err(|e| io_error("read-ref", e))?;
    let (system, sys_skipped) = read_rttm(&args.system).map_err(|e| io_error("read-sys", e))?;
    if ref_skipped + sys_skipped > 0 {
        eprintln!("score: skipped {ref_skipped}+{sys_skipped} non-SPEAKER lines");
    }

    let to_cli_error = |e: MetricsError| match e {
        MetricsError::DurationMismatch { .. } => CliError {
            stage: "score",
            exit_code: 4,
            message: e.to_string(),
        },
        other => spec_error("score", other),
    };

    let breakdown =
        compute_der(&reference, &system, args.frame_size).map_err(to_cli_error)?;
    let (ref_frames, sys_frames) =
        discretize_pair(&reference, &system, args.frame_size).map_err(to_cli_error)?;
    let table = contingency(&ref_frames, &sys_frames).map_err(to_cli_error)?;
    let mi = compute_mi(&table).map_err(to_cli_error)?;
    let ref_entropy = entropy_bits(table.row_sums());

    eprintln!(
        "DER {:.2}% (fa {:.3} s, miss {:.3} s, err {:.3} s, total {:.3} s)",
        100.0 * breakdown.der,
        breakdown.phi_fa,
        breakdown.phi_miss,
        breakdown.phi_err,
        breakdown.phi_total
    );
    eprintln!("MI {mi:.4} bits (reference entropy {ref_entropy:.4} bits)");

    println!(
        "phi_fa={} phi_miss={} phi_err={} phi_total={} der={} der_pct={} mi_bits={} ref_entropy_bits={}",
        breakdown.phi_fa,
        breakdown.phi_miss,
        breakdown.phi_err,
        breakdown.phi_total,
        breakdown.der,
        100.0 * breakdown.der,
        mi,
        ref_entropy
    );
    Ok(())
}

fn parse_list(raw: &str, expect: usize, what: &'static str) -> Result<Vec<f64>, CliError> {
    let values = raw
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| spec_error("synth", format!("bad {what} value {tok:?}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    match values.len() {
        1 => Ok(vec![values[0]; expect]),
        n if n == expect => Ok(values),
        n => Err(spec_error(
            "synth",
            format!("{what} list has {n} entries, expected 1 or {expect}"),
        )),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.nc == 0 || args.n == 0 || args.dim < 2 {
        return Err(spec_error(
            "synth",
            format!("need nc >= 1, n >= 1, dim >= 2; got nc={} n={} dim={}", args.nc, args.n, args.dim),
        ));
    }
    if args.nc > args.dim {
        return Err(spec_error(
            "synth",
            format!("orthonormal means need nc <= dim, got nc={} dim={}", args.nc, args.dim),
        ));
    }
    if args.seg_dur.is_nan() || args.seg_dur <= 0.0 {
        return Err(spec_error("synth", "seg-dur must be positive"));
    }
    let kappas = parse_list(&args.kappa, args.nc, "kappa")?;
    if kappas.iter().any(|k| k.is_nan() || *k < 0.0) {
        return Err(spec_error("synth", "kappa values must be >= 0"));
    }
    let weights = match &args.alpha {
        Some(raw) => {
            let alphas = parse_list(raw, args.nc, "alpha")?;
            let total: f64 = alphas.iter().sum();
            if alphas.iter().any(|a| a.is_nan() || *a < 0.0) || total <= 0.0 {
                return Err(spec_error(
                    "synth",
                    "alpha values must be non-negative with a positive sum",
                ));
            }
            alphas.iter().map(|a| a / total).collect()
        }
        None => vec![1.0 / args.nc as f64; args.nc],
    };

    let means =
        orthonormal_directions(args.dim, args.nc, args.seed).map_err(|e| spec_error("synth", e))?;
    let components = means
        .into_iter()
        .zip(&kappas)
        .map(|(mu, &kappa)| VmfParams::new(mu, kappa))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| spec_error("synth", e))?;
    let spec = MixtureSpec::new(components, weights).map_err(|e| spec_error("synth", e))?;
    // distinct stream from the means so the first draws do not correlate
    let (points, labels) = sample_labeled(&spec, args.n, args.seed.wrapping_add(1));

    let embeddings: Vec<RawEmbedding> = points
        .iter()
        .map(|p| RawEmbedding::new(p.values().to_vec()))
        .collect::<Result<_, _>>()
        .map_err(|e| spec_error("synth", e))?;
    let format = match args.format {
        FormatArg::Csv => EmbeddingFormat::Csv,
        FormatArg::Binary => EmbeddingFormat::Binary,
    };
    write_embeddings(&args.out_embeddings, &embeddings, format)
        .map_err(|e| io_error("write-embeddings", e))?;

    let name_of = |h: usize| {
        if args.overlap_cluster && h == args.nc - 1 {
            "OVERLAP".to_string()
        } else {
            format!("S{h}")
        }
    };
    let mut plain = Vec::with_capacity(args.n);
    let mut labeled = Vec::with_capacity(args.n);
    for (i, &h) in labels.iter().enumerate() {
        let start = i as f64 * args.seg_dur;
        let end = (i + 1) as f64 * args.seg_dur;
        plain.push(Segment::new(start, end, None).map_err(|e| spec_error("synth", e))?);
        labeled
            .push(Segment::new(start, end, Some(name_of(h))).map_err(|e| spec_error("synth", e))?);
    }
    write_segments(&args.out_segments, &SegmentTimeline::from_segments(plain))
        .map_err(|e| io_error("write-segments", e))?;
    write_rttm(
        &args.out_rttm,
        &SegmentTimeline::from_segments(labeled),
        &args.rec_id,
    )
    .map_err(|e| io_error("write-rttm", e))?;

    println!(
        "n={} dim={} nc={} seed={} seg_dur={}",
        args.n, args.dim, args.nc, args.seed, args.seg_dur
    );
    Ok(())
}
