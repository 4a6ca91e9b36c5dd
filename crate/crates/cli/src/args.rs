//! Command-line surface. All configuration is explicit on the command line;
//! no environment variables are consulted, so a run is reproducible from its
//! invocation alone.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spherecluster",
    about = "Cluster unit-norm embeddings with vMF mixtures and score diarization output"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster embeddings and emit a relabeled RTTM timeline.
    Cluster(ClusterArgs),
    /// Score a system RTTM against a reference (DER and frame-level MI).
    Score(ScoreArgs),
    /// Generate a synthetic labeled dataset (embeddings, segments, truth).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Full mixture with estimated weights and concentrations.
    Movmf,
    /// Spherical K-means baseline.
    Skmeans,
    /// Mixture with tied uniform weights and shared concentration.
    MovmfTied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KappaArg {
    /// Moment approximation of the concentration.
    Eq10,
    /// Newton solve of the Bessel-ratio equation.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Binary,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Embedding file (CSV or SCE1 binary), one row per segment.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Segments file (start end [label]), index-aligned with the embeddings.
    #[arg(long)]
    pub segments: PathBuf,
    /// Output RTTM path.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of clusters.
    #[arg(long, default_value_t = 9)]
    pub nc: usize,
    /// Reduce embeddings to this dimension before normalization; omit to
    /// skip the projection stage.
    #[arg(long)]
    pub pca_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Movmf)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = KappaArg::Eq10)]
    pub kappa: KappaArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Relative objective-improvement convergence threshold.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Recording id written into the RTTM.
    #[arg(long, default_value = "rec")]
    pub rec_id: String,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Reference RTTM.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// System RTTM.
    #[arg(long = "sys")]
    pub system: PathBuf,
    /// Scoring frame size in seconds.
    #[arg(long, default_value_t = 0.010)]
    pub frame_size: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_embeddings: PathBuf,
    #[arg(long)]
    pub out_segments: PathBuf,
    #[arg(long)]
    pub out_rttm: PathBuf,
    /// Number of mixture components.
    #[arg(long, default_value_t = 9)]
    pub nc: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 75)]
    pub dim: usize,
    /// Number of points (segments).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Concentration per component: one value for all, or a comma list.
    #[arg(long, default_value = "40")]
    pub kappa: String,
    /// Mixture weights as a comma list; omitted means uniform.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Duration of each synthetic segment in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub seg_dur: f64,
    /// Label the last component OVERLAP, mimicking an overlapped-speech
    /// cluster in the ground truth.
    #[arg(long, default_value_t = false)]
    pub overlap_cluster: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Recording id written into the RTTM.
    #[arg(long, default_value = "rec")]
    pub rec_id: String,
}
