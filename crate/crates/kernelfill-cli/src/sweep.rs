//! The missing-ratio sweep experiment: mask a growing fraction of samples
//! from the expensive kernel matrix, complete it against the cheap base
//! matrix, and score all four matrices (completed, estimated, base, full) by
//! kernel k-means against the ground-truth classes.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use kernelfill::bioeval::{
    adjusted_rand_index, gram_matrix, kernel_kmeans_detailed, synth_dataset, Alphabet, Partition,
    Sequence, SynthConfig,
};
use kernelfill::completion::{run_em, EmConfig, GammaPrior, IncompleteKernel};
use kernelfill::matcore::SymMatrix;

use crate::error::{CliError, CliResult};
use crate::io::{read_fasta, read_labels, round_sig};
use crate::logging;

/// Where the paired marker sequences come from.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic {
        synth: SynthConfig,
    },
    Files {
        expensive: String,
        base: String,
        labels: String,
        alphabet: Alphabet,
    },
}

/// Full sweep settings, echoed verbatim into the report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub missing_ratios: Vec<f64>,
    pub trials: usize,
    pub clusters: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub map_nu: Option<f64>,
    pub map_alpha: Option<f64>,
    pub kmeans_restarts: usize,
    /// Ridge added once to the full expensive matrix before masking, so every
    /// observed block stays positive definite even when the bimer feature
    /// space has lower rank than the sample count.
    pub ridge: f64,
    pub dataset: DatasetSource,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.missing_ratios.is_empty() {
            return Err(CliError::Validation("no missing ratios".to_string()));
        }
        for &r in &self.missing_ratios {
            if !(0.0..=0.95).contains(&r) {
                return Err(CliError::Validation(format!(
                    "missing ratio {r} outside [0, 0.95]"
                )));
            }
        }
        if self.missing_ratios.windows(2).any(|w| w[0] > w[1]) {
            return Err(CliError::Validation(
                "missing ratios must be sorted ascending".to_string(),
            ));
        }
        if self.trials < 1 {
            return Err(CliError::Validation(
                "trials must be at least 1".to_string(),
            ));
        }
        if self.clusters < 1 {
            return Err(CliError::Validation("k must be at least 1".to_string()));
        }
        if self.kmeans_restarts < 1 {
            return Err(CliError::Validation(
                "k-means needs at least one restart".to_string(),
            ));
        }
        if !(self.ridge >= 0.0) {
            return Err(CliError::Validation(
                "ridge must be nonnegative".to_string(),
            ));
        }
        if self.map_nu.is_some() != self.map_alpha.is_some() {
            return Err(CliError::Validation(
                "MAP estimation needs both nu and alpha".to_string(),
            ));
        }
        Ok(())
    }

    fn em_config(&self) -> CliResult<EmConfig> {
        let prior = match (self.map_nu, self.map_alpha) {
            (Some(nu), Some(alpha)) => Some(GammaPrior::new(nu, alpha)?),
            _ => None,
        };
        Ok(EmConfig {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            prior,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesStats {
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

fn series_stats(values: &[f64]) -> SeriesStats {
    if values.is_empty() {
        return SeriesStats {
            count: 0,
            mean: None,
            std: None,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    SeriesStats {
        count: values.len(),
        mean: Some(round_sig(mean)),
        std: Some(round_sig(var.sqrt())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialAri {
    pub completed: f64,
    pub estimated: f64,
    pub base: f64,
    pub full: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub missing: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_kl: Option<f64>,
    pub kl_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ari: Option<TrialAri>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub ratio: f64,
    pub failures: usize,
    pub completed: SeriesStats,
    pub estimated: SeriesStats,
    pub base: SeriesStats,
    pub full: SeriesStats,
    pub trials: Vec<TrialReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema: u32,
    pub tool_version: String,
    pub sample_count: usize,
    pub config: ExperimentConfig,
    pub ratios: Vec<RatioReport>,
}

impl SweepReport {
    /// True when some ratio lost every trial.
    pub fn any_ratio_fully_failed(&self) -> bool {
        self.ratios.iter().any(|r| r.failures == r.trials.len())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-trial seed: the sweep seed xor-mixed with the ratio bits and trial
/// index through splitmix64.
pub fn trial_seed(seed: u64, ratio: f64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(ratio.to_bits() ^ splitmix64(trial.wrapping_add(1))))
}

struct SweepData {
    expensive: SymMatrix,
    base: SymMatrix,
    truth: Partition,
}

fn align_by_ids(
    expensive: Vec<Sequence>,
    base: Vec<Sequence>,
    labels: Vec<(String, usize)>,
) -> CliResult<(Vec<Sequence>, Vec<Sequence>, Vec<usize>)> {
    let find = |seqs: &[Sequence], id: &str| seqs.iter().position(|s| s.id == id);
    let mut base_sorted = Vec::with_capacity(expensive.len());
    let mut class_labels = Vec::with_capacity(expensive.len());
    if base.len() != expensive.len() {
        return Err(CliError::Validation(format!(
            "expensive and base files hold {} vs {} sequences",
            expensive.len(),
            base.len()
        )));
    }
    for seq in &expensive {
        let b = find(&base, &seq.id)
            .ok_or_else(|| CliError::Validation(format!("id {:?} missing from base", seq.id)))?;
        base_sorted.push(base[b].clone());
        let label = labels
            .iter()
            .find(|(id, _)| id == &seq.id)
            .map(|(_, l)| *l)
            .ok_or_else(|| CliError::Validation(format!("id {:?} has no label", seq.id)))?;
        class_labels.push(label);
    }
    Ok((expensive, base_sorted, class_labels))
}

fn load_dataset(config: &ExperimentConfig) -> CliResult<SweepData> {
    let (expensive_seqs, base_seqs, labels) = match &config.dataset {
        DatasetSource::Synthetic { synth } => {
            let data = synth_dataset(synth)?;
            let labels = data.labels();
            (data.expensive, data.base, labels)
        }
        DatasetSource::Files {
            expensive,
            base,
            labels,
            alphabet,
        } => {
            let expensive_seqs = read_fasta(Path::new(expensive), *alphabet)?;
            let base_seqs = read_fasta(Path::new(base), *alphabet)?;
            let label_pairs = read_labels(Path::new(labels))?;
            align_by_ids(expensive_seqs, base_seqs, label_pairs)?
        }
    };
    let expensive_raw = gram_matrix(&expensive_seqs, true)?;
    let base = gram_matrix(&base_seqs, true)?;
    let expensive = expensive_raw.add_scaled_identity(config.ridge);
    let k_truth = labels.iter().max().map(|m| m + 1).unwrap_or(1);
    let truth = Partition::new(labels, k_truth)?;
    Ok(SweepData {
        expensive,
        base,
        truth,
    })
}

/// Uniform sample without replacement via a seeded ChaCha8 shuffle; the
/// trial seed in the report makes every missing set reproducible.
fn sample_missing(count: usize, total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..total).collect();
    indices.shuffle(rng);
    let mut missing: Vec<usize> = indices.into_iter().take(count).collect();
    missing.sort_unstable();
    missing
}

fn cluster_ari(
    matrix: &SymMatrix,
    truth: &Partition,
    clusters: usize,
    seed: u64,
    restarts: usize,
) -> CliResult<f64> {
    let (partition, stats) = kernel_kmeans_detailed(matrix, clusters, seed, restarts)?;
    if stats.negative_distance_clamps > 0 {
        logging::debug(&format!(
            "clamped {} negative kernel distances",
            stats.negative_distance_clamps
        ));
    }
    Ok(adjusted_rand_index(&partition, truth)?.value)
}

/// Runs the whole sweep. Individual trial failures are recorded in the report
/// and excluded from the aggregates; the report is produced regardless.
pub fn run_sweep(config: &ExperimentConfig) -> CliResult<SweepReport> {
    config.validate()?;
    let em_config = config.em_config()?;
    let data = load_dataset(config)?;
    let total = data.expensive.dim();
    logging::info(&format!(
        "sweep over {} samples, {} ratios x {} trials",
        total,
        config.missing_ratios.len(),
        config.trials
    ));

    let mut ratios = Vec::with_capacity(config.missing_ratios.len());
    for &ratio in &config.missing_ratios {
        let mut trials = Vec::with_capacity(config.trials);
        let mut series: [Vec<f64>; 4] = Default::default();
        let mut failures = 0usize;
        for trial in 0..config.trials {
            let seed = trial_seed(config.seed, ratio, trial as u64);
            let missing_count = (ratio * total as f64).ceil() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let missing = sample_missing(missing_count, total, &mut rng);

            let outcome = (|| -> CliResult<(TrialAri, Vec<f64>, bool, usize, f64)> {
                if total.saturating_sub(missing_count) < 1 {
                    return Err(CliError::Validation(format!(
                        "ratio {ratio} leaves no observed samples"
                    )));
                }
                let incomplete = IncompleteKernel::from_complete(&data.expensive, missing.clone())?;
                let (completed, model, trace) = run_em(&incomplete, &data.base, &em_config)?;
                let estimated = model.materialize();
                let ari = TrialAri {
                    completed: round_sig(cluster_ari(
                        &completed.matrix,
                        &data.truth,
                        config.clusters,
                        seed,
                        config.kmeans_restarts,
                    )?),
                    estimated: round_sig(cluster_ari(
                        &estimated,
                        &data.truth,
                        config.clusters,
                        seed,
                        config.kmeans_restarts,
                    )?),
                    base: round_sig(cluster_ari(
                        &data.base,
                        &data.truth,
                        config.clusters,
                        seed,
                        config.kmeans_restarts,
                    )?),
                    full: round_sig(cluster_ari(
                        &data.expensive,
                        &data.truth,
                        config.clusters,
                        seed,
                        config.kmeans_restarts,
                    )?),
                };
                let kl_trace: Vec<f64> = trace.kl_values().iter().map(|&v| round_sig(v)).collect();
                Ok((
                    ari,
                    kl_trace,
                    trace.converged,
                    trace.iterations.len(),
                    round_sig(trace.final_kl),
                ))
            })();

            match outcome {
                Ok((ari, kl_trace, converged, iterations, final_kl)) => {
                    series[0].push(ari.completed);
                    series[1].push(ari.estimated);
                    series[2].push(ari.base);
                    series[3].push(ari.full);
                    trials.push(TrialReport {
                        trial,
                        seed,
                        missing,
                        converged: Some(converged),
                        iterations: Some(iterations),
                        final_kl: Some(final_kl),
                        kl_trace,
                        ari: Some(ari),
                        error: None,
                    });
                }
                Err(err) => {
                    failures += 1;
                    logging::warn(&format!("ratio {ratio} trial {trial} failed: {err}"));
                    trials.push(TrialReport {
                        trial,
                        seed,
                        missing,
                        converged: None,
                        iterations: None,
                        final_kl: None,
                        kl_trace: Vec::new(),
                        ari: None,
                        error: Some(err.to_string()),
                    });
                }
            }
        }
        ratios.push(RatioReport {
            ratio,
            failures,
            completed: series_stats(&series[0]),
            estimated: series_stats(&series[1]),
            base: series_stats(&series[2]),
            full: series_stats(&series[3]),
            trials,
        });
    }

    Ok(SweepReport {
        schema: 1,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        sample_count: total,
        config: config.clone(),
        ratios,
    })
}

/// Flattens the report into `(ratio, series, mean, std)` CSV rows for
/// external plotting.
pub fn curve_csv(report: &SweepReport) -> String {
    let mut out = String::from("ratio,series,mean,std\n");
    for ratio in &report.ratios {
        for (name, stats) in [
            ("completed", &ratio.completed),
            ("estimated", &ratio.estimated),
            ("base", &ratio.base),
            ("full", &ratio.full),
        ] {
            let mean = stats
                .mean
                .map(crate::io::format_float)
                .unwrap_or_else(|| "NA".to_string());
            let std = stats
                .std
                .map(crate::io::format_float)
                .unwrap_or_else(|| "NA".to_string());
            out.push_str(&format!("{},{},{},{}\n", ratio.ratio, name, mean, std));
        }
    }
    out
}
