use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qeclab", version, about = "Surface-code decoding lab", args_override_self = true)]
pub struct Cli {
    /// Worker threads for data generation and evaluation [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// File of `key = value` lines applied as flags of the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a labelled syndrome dataset
    Generate(GenerateArgs),
    /// Train a high-level decoder on a dataset
    Train(TrainArgs),
    /// Monte Carlo logical error rates, written as CSV
    Eval(EvalArgs),
    /// Build an enhanced set of chain records mixed with noise records
    Augment(AugmentArgs),
    /// Occlusion saliency map of one input
    Saliency(SaliencyArgs),
    /// Serve the HTTP API
    Serve(ServeArgs),
    /// Print the header of a dataset or model file
    Inspect(InspectArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseArg {
    Depolarizing,
    Phenomenological,
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    #[arg(long, value_enum, default_value = "depolarizing")]
    pub noise: NoiseArg,

    /// Measurement flip probability (phenomenological only)
    #[arg(long)]
    pub q: Option<f64>,

    /// Noisy measurement rounds (phenomenological only)
    #[arg(long)]
    pub cycles: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, short = 'd')]
    pub distance: usize,

    #[command(flatten)]
    pub noise: NoiseArgs,

    /// Data-qubit error probability
    #[arg(long)]
    pub p: f64,

    #[arg(long)]
    pub count: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchArg {
    Cnn,
    CnnDilated,
    Ffnn,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    #[arg(long, value_enum, default_value = "cnn")]
    pub arch: ArchArg,

    /// Hidden layer widths of the ffnn architecture
    #[arg(long, value_delimiter = ',', default_value = "512,256,128")]
    pub hidden: Vec<usize>,

    /// Start from the weights of this model file
    #[arg(long, value_name = "MODEL")]
    pub init_weights: Option<PathBuf>,

    #[arg(long, default_value_t = 20)]
    pub epochs: usize,

    #[arg(long, default_value_t = 32)]
    pub batch: usize,

    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Hold out this fraction of the dataset and report its loss per epoch
    #[arg(long)]
    pub eval_fraction: Option<f64>,

    #[arg(long)]
    pub out: PathBuf,

    /// Per-epoch history CSV [default: <out>.history.csv]
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderArg {
    Simple,
    Mwpm,
    Hld,
    AlwaysI,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Decoders to compare on the same samples
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mwpm")]
    pub decoder: Vec<DecoderArg>,

    /// Model file, required for the hld decoder
    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Code distance [default: the model's]
    #[arg(long, short = 'd')]
    pub distance: Option<usize>,

    #[arg(long, value_enum, default_value = "depolarizing")]
    pub noise: NoiseArg,

    /// Measurement flip probability, or `p` to follow each p of the sweep
    #[arg(long)]
    pub q: Option<String>,

    #[arg(long)]
    pub cycles: Option<usize>,

    #[arg(long, value_delimiter = ',', required = true)]
    pub p_list: Vec<f64>,

    /// Samples per point
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// CSV output [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long, short = 'd')]
    pub distance: usize,

    #[arg(long, default_value_t = 5)]
    pub chain_length: usize,

    /// Chain records, records at --p1, records at --p2
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<usize>,

    #[arg(long, default_value_t = 0.1)]
    pub p1: f64,

    #[arg(long, default_value_t = 0.13)]
    pub p2: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["input_json", "sample"])))]
pub struct SaliencyArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// JSON with `placed_errors` or `syndromes`, as accepted by the API
    #[arg(long)]
    pub input_json: Option<PathBuf>,

    /// Draw the input from the noise model of the model's training data
    #[arg(long)]
    pub sample: bool,

    #[arg(long, default_value_t = 0.1)]
    pub p: f64,

    #[arg(long)]
    pub q: Option<f64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Sample index under --seed
    #[arg(long, default_value_t = 0)]
    pub index: u64,

    #[arg(long, default_value_t = 2)]
    pub patch: usize,

    #[arg(long, default_value_t = 1)]
    pub stride: usize,

    /// Class the loss is measured against [default: the prediction]
    #[arg(long)]
    pub reference: Option<String>,

    /// Mask one input channel at a time and write one map per channel
    #[arg(long)]
    pub per_channel: bool,

    /// Output prefix; writes <out>.csv, <out>.upsampled.csv and <out>.pgm
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,

    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,

    #[arg(long, env = "QECLAB_MODELS_DIR")]
    pub models_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("target").required(true).args(["dataset", "model", "builtin", "architectures"])))]
pub struct InspectArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,

    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Reference CNN for this distance
    #[arg(long, value_name = "D")]
    pub builtin: Option<usize>,

    #[arg(long, value_enum, default_value = "depolarizing", requires = "builtin")]
    pub noise: NoiseArg,

    #[arg(long, requires = "builtin")]
    pub dilated: bool,

    /// List every reference architecture with its weight count
    #[arg(long)]
    pub architectures: bool,
}
