//! Subcommand implementations. Each returns `CliResult<()>`; `main` maps
//! errors to exit codes (1 I/O, 2 validation, 3 numerical, 4 check-negative).
//!
//! Output files are written only after all computation succeeds, so a failed
//! run never leaves partial artifacts behind.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use kernelfill::bioeval::{gram_matrix, Alphabet, SynthConfig};
use kernelfill::completion::{run_em, EmConfig, GammaPrior, IncompleteKernel};
use kernelfill::matcore::SymMatrix;
use kernelfill::models::check_doubly_autoparallel;

use crate::error::{CliError, CliResult};
use crate::io::{read_fasta, read_matrix, round_sig, write_fasta, write_labels, write_matrix};
use crate::logging;
use crate::sweep::{curve_csv, run_sweep, DatasetSource, ExperimentConfig};

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum AlphabetArg {
    Nucleotide,
    AminoAcid,
}

impl From<AlphabetArg> for Alphabet {
    fn from(value: AlphabetArg) -> Self {
        match value {
            AlphabetArg::Nucleotide => Alphabet::Nucleotide,
            AlphabetArg::AminoAcid => Alphabet::AminoAcid,
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("csv")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n")
        .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

/// Complete an incomplete kernel matrix against a base matrix.
#[derive(Args, Debug)]
pub struct CompleteArgs {
    /// Incomplete kernel CSV; missing samples appear as NA rows/columns.
    #[arg(long, conflicts_with = "sequences")]
    pub kernel: Option<PathBuf>,

    /// FASTA of all samples; the kernel is computed from bimer counts and the
    /// ids named by --missing are masked.
    #[arg(long)]
    pub sequences: Option<PathBuf>,

    /// Comma-separated sample ids to treat as missing (in addition to any NA
    /// pattern in --kernel).
    #[arg(long, value_delimiter = ',')]
    pub missing: Vec<String>,

    /// Complete base matrix: a CSV kernel or a FASTA to derive one from.
    #[arg(long)]
    pub base: PathBuf,

    /// Relative objective-change convergence threshold.
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,

    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,

    /// Gamma prior shape; enables the MAP m-step together with --map-alpha.
    #[arg(long)]
    pub map_nu: Option<f64>,

    /// Gamma prior scale.
    #[arg(long)]
    pub map_alpha: Option<f64>,

    /// Sequence alphabet for FASTA inputs.
    #[arg(long, value_enum, default_value_t = AlphabetArg::Nucleotide)]
    pub alphabet: AlphabetArg,

    /// Completed matrix output CSV (data-manifold point; observed entries
    /// preserved).
    #[arg(long)]
    pub out_completed: Option<PathBuf>,

    /// Estimated matrix output CSV (model-manifold point).
    #[arg(long)]
    pub out_estimated: Option<PathBuf>,

    /// JSON run report with the KL trace.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct CompleteReport {
    schema: u32,
    tool_version: String,
    sample_count: usize,
    missing_ids: Vec<String>,
    rel_tol: f64,
    max_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    map_nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    map_alpha: Option<f64>,
    converged: bool,
    iterations: usize,
    final_kl: f64,
    clamp_events: usize,
    kl_trace: Vec<f64>,
}

fn load_base(path: &Path, alphabet: Alphabet) -> CliResult<(SymMatrix, Option<Vec<String>>)> {
    if is_csv(path) {
        let file = read_matrix(path)?;
        let full = file.full()?.clone();
        let ids = if file.ids == (0..file.dim).map(|i| i.to_string()).collect::<Vec<_>>() {
            None
        } else {
            Some(file.ids)
        };
        Ok((full, ids))
    } else {
        let seqs = read_fasta(path, alphabet)?;
        let gram = gram_matrix(&seqs, true)?;
        Ok((gram, Some(seqs.into_iter().map(|s| s.id).collect())))
    }
}

pub fn cmd_complete(args: &CompleteArgs) -> CliResult<()> {
    let prior = match (args.map_nu, args.map_alpha) {
        (Some(nu), Some(alpha)) => Some(GammaPrior::new(nu, alpha)?),
        (None, None) => None,
        _ => {
            return Err(CliError::Validation(
                "MAP estimation needs both --map-nu and --map-alpha".to_string(),
            ))
        }
    };

    let (incomplete, ids): (IncompleteKernel, Vec<String>) = match (&args.kernel, &args.sequences) {
        (Some(kernel_path), None) => {
            let file = read_matrix(kernel_path)?;
            let incomplete = file.to_incomplete(&args.missing)?;
            (incomplete, file.ids)
        }
        (None, Some(fasta_path)) => {
            let seqs = read_fasta(fasta_path, args.alphabet.into())?;
            let ids: Vec<String> = seqs.iter().map(|s| s.id.clone()).collect();
            let gram = gram_matrix(&seqs, true)?;
            let missing: Vec<usize> = args
                .missing
                .iter()
                .map(|id| {
                    ids.iter()
                        .position(|known| known == id)
                        .ok_or_else(|| CliError::Validation(format!("unknown sample id {id:?}")))
                })
                .collect::<CliResult<_>>()?;
            (IncompleteKernel::from_complete(&gram, missing)?, ids)
        }
        _ => {
            return Err(CliError::Validation(
                "exactly one of --kernel or --sequences is required".to_string(),
            ))
        }
    };

    let (base, base_ids) = load_base(&args.base, args.alphabet.into())?;
    if base.dim() != incomplete.full_dim() {
        return Err(CliError::Validation(format!(
            "base matrix covers {} samples but the kernel has {}",
            base.dim(),
            incomplete.full_dim()
        )));
    }
    if let Some(base_ids) = &base_ids {
        let default: Vec<String> = (0..incomplete.full_dim()).map(|i| i.to_string()).collect();
        if ids != default && *base_ids != ids {
            return Err(CliError::Validation(
                "base and kernel sample ids disagree".to_string(),
            ));
        }
    }

    let config = EmConfig {
        max_iters: args.max_iters,
        rel_tol: args.rel_tol,
        prior,
    };
    let (completed, model, trace) = run_em(&incomplete, &base, &config)?;
    let estimated = model.materialize();
    logging::info(&format!(
        "completed {} samples ({} missing) in {} iterations, final objective {:.6e}",
        incomplete.full_dim(),
        incomplete.missing_count(),
        trace.iterations.len(),
        trace.final_kl
    ));

    let missing_ids: Vec<String> = incomplete
        .missing_indices()
        .iter()
        .map(|&i| ids[i].clone())
        .collect();
    if let Some(path) = &args.out_completed {
        write_matrix(path, &completed.matrix, &ids, &[])?;
    }
    if let Some(path) = &args.out_estimated {
        write_matrix(path, &estimated, &ids, &[])?;
    }
    if let Some(path) = &args.report {
        let report = CompleteReport {
            schema: 1,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            sample_count: incomplete.full_dim(),
            missing_ids,
            rel_tol: args.rel_tol,
            max_iters: args.max_iters,
            map_nu: args.map_nu,
            map_alpha: args.map_alpha,
            converged: trace.converged,
            iterations: trace.iterations.len(),
            final_kl: round_sig(trace.final_kl),
            clamp_events: trace.clamp_events,
            kl_trace: trace.kl_values().iter().map(|&v| round_sig(v)).collect(),
        };
        write_json(path, &report)?;
    }
    Ok(())
}

/// Run the missing-ratio sweep experiment.
#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Missing-sample ratios, ascending, in [0, 0.95].
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
    )]
    pub ratios: Vec<f64>,

    #[arg(long, default_value_t = 20)]
    pub trials: usize,

    /// Number of k-means clusters.
    #[arg(long, default_value_t = 3)]
    pub k: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,

    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,

    #[arg(long)]
    pub map_nu: Option<f64>,

    #[arg(long)]
    pub map_alpha: Option<f64>,

    /// k-means restarts per clustering.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,

    /// Ridge added to the expensive matrix before masking.
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,

    /// Expensive-marker FASTA (file-based dataset; needs --base-seqs and
    /// --labels). Without it a synthetic dataset is generated.
    #[arg(long, requires = "base_seqs", requires = "labels")]
    pub expensive: Option<PathBuf>,

    /// Base-marker FASTA.
    #[arg(long)]
    pub base_seqs: Option<PathBuf>,

    /// Ground-truth labels TSV (id, class).
    #[arg(long)]
    pub labels: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = AlphabetArg::Nucleotide)]
    pub alphabet: AlphabetArg,

    /// Synthetic dataset class sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,31,11")]
    pub class_sizes: Vec<usize>,

    /// Synthetic sequence length.
    #[arg(long, default_value_t = 200)]
    pub length: usize,

    /// Synthetic expensive-marker mutation rate.
    #[arg(long, default_value_t = 0.05)]
    pub rate_a: f64,

    /// Synthetic base-marker mutation rate.
    #[arg(long, default_value_t = 0.20)]
    pub rate_b: f64,

    /// Report JSON output path.
    #[arg(long)]
    pub report: PathBuf,

    /// Optional (ratio, series, mean, std) CSV of the curves.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

impl SweepArgs {
    pub fn to_config(&self) -> ExperimentConfig {
        let dataset = match (&self.expensive, &self.base_seqs, &self.labels) {
            (Some(expensive), Some(base), Some(labels)) => DatasetSource::Files {
                expensive: expensive.display().to_string(),
                base: base.display().to_string(),
                labels: labels.display().to_string(),
                alphabet: self.alphabet.into(),
            },
            _ => DatasetSource::Synthetic {
                synth: SynthConfig {
                    class_sizes: self.class_sizes.clone(),
                    alphabet: self.alphabet.into(),
                    length: self.length,
                    marker_a_rate: self.rate_a,
                    marker_b_rate: self.rate_b,
                    seed: self.seed,
                },
            },
        };
        ExperimentConfig {
            missing_ratios: self.ratios.clone(),
            trials: self.trials,
            clusters: self.k,
            seed: self.seed,
            rel_tol: self.rel_tol,
            max_iters: self.max_iters,
            map_nu: self.map_nu,
            map_alpha: self.map_alpha,
            kmeans_restarts: self.restarts,
            ridge: self.ridge,
            dataset,
        }
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let config = args.to_config();
    let report = run_sweep(&config)?;
    write_json(&args.report, &report)?;
    if let Some(curve) = &args.curve {
        fs::write(curve, curve_csv(&report))
            .map_err(|e| CliError::io(&format!("writing {}", curve.display()), e))?;
    }
    if report.any_ratio_fully_failed() {
        return Err(CliError::Numerical(
            "every trial failed at some missing ratio (see report)".to_string(),
        ));
    }
    Ok(())
}

/// Check whether base matrices span a doubly autoparallel manifold.
#[derive(Args, Debug)]
pub struct CheckAutoparallelArgs {
    /// Base matrix CSVs (comma-separated or repeated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub bases: Vec<PathBuf>,
}

pub fn cmd_check_autoparallel(args: &CheckAutoparallelArgs) -> CliResult<()> {
    if args.bases.is_empty() {
        return Err(CliError::Validation("no base matrices given".to_string()));
    }
    let mut matrices = Vec::with_capacity(args.bases.len());
    for path in &args.bases {
        let file = read_matrix(path)?;
        matrices.push(file.full()?.clone());
    }
    let report = check_doubly_autoparallel(&matrices)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    if report.is_doubly_autoparallel {
        Ok(())
    } else {
        Err(CliError::CheckNegative)
    }
}

/// Generate a synthetic paired-marker dataset as FASTA + labels TSV.
#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,31,11")]
    pub classes: Vec<usize>,

    #[arg(long, default_value_t = 200)]
    pub length: usize,

    #[arg(long, default_value_t = 0.05)]
    pub rate_a: f64,

    #[arg(long, default_value_t = 0.20)]
    pub rate_b: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = AlphabetArg::Nucleotide)]
    pub alphabet: AlphabetArg,

    /// Expensive-marker FASTA output.
    #[arg(long)]
    pub out_a: PathBuf,

    /// Base-marker FASTA output.
    #[arg(long)]
    pub out_b: PathBuf,

    /// Labels TSV output.
    #[arg(long)]
    pub out_labels: PathBuf,
}

pub fn cmd_gen_data(args: &GenDataArgs) -> CliResult<()> {
    let config = SynthConfig {
        class_sizes: args.classes.clone(),
        alphabet: args.alphabet.into(),
        length: args.length,
        marker_a_rate: args.rate_a,
        marker_b_rate: args.rate_b,
        seed: args.seed,
    };
    let data = kernelfill::bioeval::synth_dataset(&config)?;
    let labels: Vec<(String, usize)> = data
        .expensive
        .iter()
        .map(|s| (s.id.clone(), s.class_label.expect("generator labels")))
        .collect();
    write_fasta(&args.out_a, &data.expensive)?;
    write_fasta(&args.out_b, &data.base)?;
    write_labels(&args.out_labels, &labels)?;
    logging::info(&format!(
        "wrote {} samples to {}, {} and {}",
        data.len(),
        args.out_a.display(),
        args.out_b.display(),
        args.out_labels.display()
    ));
    Ok(())
}
