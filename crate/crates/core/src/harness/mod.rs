//! Reproducible Monte Carlo ensembles over degrees and replicates, with
//! per-statistic summaries, deterministic parallel execution, and the
//! partial-sum / goodness-of-fit machinery.

mod kstats;
mod partial;

pub use kstats::{clt_check, summarize, CltCheck, SummaryStats};
pub use partial::{
    gof_statistics, partial_sum_ensemble, partial_sum_process, winf_covariance, PartialSumSample,
};

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::{
    empirical_measure, hermite2_from_coefficients, hermite_transform, BispectrumTable,
};
use crate::field::{sample_coefficients, synthesize};
use crate::sphere::{build_quadrature, SphereQuadrature};

/// Grid band limit used per degree unless configured otherwise.
pub const DEFAULT_BAND_LIMIT_FACTOR: u32 = 2;

/// Default truncation order of the Hermite variance series.
pub const DEFAULT_Q_MAX: u32 = 60;

/// Derives an independent 64-bit sub-seed for a replicate index
/// (SplitMix64 finalizer over the golden-ratio sequence), so replicates can
/// run in any order on any number of workers.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which per-replicate statistics an ensemble computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StatKind {
    /// Defect `4 pi - 2 Phi_l(0)`.
    Defect,
    /// `h_{l;2}` from the coefficients alone (no synthesis).
    Hermite2Coeff,
    /// `h_{l;q}` by grid quadrature.
    Hermite { q: u32 },
    /// `Phi_l(z)` at every configured level.
    MeasureAtLevels,
    /// `G_l(z)` at every configured level.
    ProcessAtLevels,
    /// `sup_z |S_l(z)|`.
    ReductionSup,
    /// Normalized bispectrum `I_lll` (coefficients only; NaN for odd `l`).
    Bispectrum,
}

impl StatKind {
    fn needs_field(self) -> bool {
        !matches!(self, StatKind::Hermite2Coeff | StatKind::Bispectrum)
    }

    fn columns(self, z_levels: &[f64]) -> Vec<String> {
        match self {
            StatKind::Defect => vec!["defect".into()],
            StatKind::Hermite2Coeff => vec!["h2_coeff".into()],
            StatKind::Hermite { q } => vec![format!("h{q}")],
            StatKind::MeasureAtLevels => {
                z_levels.iter().map(|z| format!("phi@{z}")).collect()
            }
            StatKind::ProcessAtLevels => z_levels.iter().map(|z| format!("G@{z}")).collect(),
            StatKind::ReductionSup => vec!["sup_S".into()],
            StatKind::Bispectrum => vec!["bispectrum".into()],
        }
    }
}

/// Ensemble description; `run_ensemble` is deterministic in everything here
/// except `workers`, which only affects scheduling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub master_seed: u64,
    pub degrees: Vec<u32>,
    pub replicates: u32,
    pub band_limit_factor: u32,
    pub z_levels: Vec<f64>,
    pub q_max: u32,
    /// 0 means the rayon default.
    pub workers: usize,
    pub statistics: Vec<StatKind>,
}

impl EnsembleConfig {
    pub fn new(master_seed: u64, degrees: Vec<u32>, replicates: u32) -> Self {
        EnsembleConfig {
            master_seed,
            degrees,
            replicates,
            band_limit_factor: DEFAULT_BAND_LIMIT_FACTOR,
            z_levels: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            q_max: DEFAULT_Q_MAX,
            workers: 0,
            statistics: vec![StatKind::Defect],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() {
            return Err(Error::Config("degrees must be nonempty".into()));
        }
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.band_limit_factor < 1 {
            return Err(Error::Config("band_limit_factor must be >= 1".into()));
        }
        if self.z_levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("z_levels must be sorted".into()));
        }
        if self.statistics.is_empty() {
            return Err(Error::Config("statistics must be nonempty".into()));
        }
        for s in &self.statistics {
            if let StatKind::Hermite { q } = s {
                if *q < 1 {
                    return Err(Error::Config("Hermite q must be >= 1".into()));
                }
            }
            if matches!(s, StatKind::MeasureAtLevels | StatKind::ProcessAtLevels)
                && self.z_levels.is_empty()
            {
                return Err(Error::Config("z_levels must be nonempty for level stats".into()));
            }
        }
        Ok(())
    }
}

/// One `(degree, replicate)` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub l: u32,
    pub replicate: u32,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// A task that could not run; the rest of the ensemble continues.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskFailure {
    pub l: u32,
    pub replicate: u32,
    pub message: String,
}

/// Per-(degree, column) summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatSummary {
    pub l: u32,
    pub column: String,
    #[serde(flatten)]
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub config: EnsembleConfig,
    pub columns: Vec<String>,
    pub rows: Vec<RawRow>,
    pub summaries: Vec<StatSummary>,
    pub failures: Vec<TaskFailure>,
    pub wall_seconds: f64,
}

struct SharedState {
    grids: HashMap<u32, std::result::Result<Arc<SphereQuadrature>, String>>,
    bispectra: HashMap<u32, Arc<BispectrumTable>>,
}

fn compute_row(
    config: &EnsembleConfig,
    shared: &SharedState,
    l: u32,
    replicate: u32,
) -> std::result::Result<RawRow, TaskFailure> {
    let seed = sub_seed(config.master_seed, u64::from(replicate));
    let coeffs = sample_coefficients(l, seed);
    let needs_field = config.statistics.iter().any(|s| s.needs_field());
    let field = if needs_field {
        let grid = match shared.grids.get(&l) {
            Some(Ok(g)) => Arc::clone(g),
            Some(Err(msg)) => {
                return Err(TaskFailure {
                    l,
                    replicate,
                    message: msg.clone(),
                })
            }
            None => unreachable!("grid prebuilt for every degree"),
        };
        match synthesize(&coeffs, &grid) {
            Ok(f) => Some(f),
            Err(e) => {
                return Err(TaskFailure {
                    l,
                    replicate,
                    message: e.to_string(),
                })
            }
        }
    } else {
        None
    };
    let curve = field.as_ref().map(empirical_measure);
    let mut values = Vec::new();
    for stat in &config.statistics {
        match stat {
            StatKind::Defect => values.push(curve.as_ref().unwrap().defect()),
            StatKind::Hermite2Coeff => values.push(hermite2_from_coefficients(&coeffs)),
            StatKind::Hermite { q } => {
                values.push(hermite_transform(field.as_ref().unwrap(), *q).value)
            }
            StatKind::MeasureAtLevels => {
                let c = curve.as_ref().unwrap();
                values.extend(config.z_levels.iter().map(|&z| c.measure(z)));
            }
            StatKind::ProcessAtLevels => {
                let c = curve.as_ref().unwrap();
                values.extend(config.z_levels.iter().map(|&z| c.process(z)));
            }
            StatKind::ReductionSup => {
                let h2 = hermite_transform(field.as_ref().unwrap(), 2).value;
                values.push(curve.as_ref().unwrap().sup_reduction_residual(h2));
            }
            StatKind::Bispectrum => {
                let table = shared.bispectra.get(&l).expect("table prebuilt");
                values.push(table.evaluate(&coeffs).unwrap_or(f64::NAN));
            }
        }
    }
    Ok(RawRow {
        l,
        replicate,
        seed,
        values,
    })
}

/// Runs the configured statistics over every `(degree, replicate)` pair.
/// Raw rows are bit-identical across runs and worker counts; per-task
/// resource failures are collected while the rest of the ensemble proceeds.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleReport> {
    config.validate()?;
    let start = Instant::now();

    // shared immutable state, built before the parallel section
    let needs_field = config.statistics.iter().any(|s| s.needs_field());
    let needs_bispectrum = config.statistics.contains(&StatKind::Bispectrum);
    let mut shared = SharedState {
        grids: HashMap::new(),
        bispectra: HashMap::new(),
    };
    for &l in &config.degrees {
        if needs_field {
            shared.grids.entry(l).or_insert_with(|| {
                build_quadrature(config.band_limit_factor * l)
                    .map(Arc::new)
                    .map_err(|e| e.to_string())
            });
        }
        if needs_bispectrum {
            shared
                .bispectra
                .entry(l)
                .or_insert_with(|| Arc::new(BispectrumTable::new(l)));
        }
    }

    let tasks: Vec<(u32, u32)> = config
        .degrees
        .iter()
        .flat_map(|&l| (0..config.replicates).map(move |r| (l, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<std::result::Result<RawRow, TaskFailure>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(l, r)| compute_row(config, &shared, l, r))
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }

    let columns: Vec<String> = config
        .statistics
        .iter()
        .flat_map(|s| s.columns(&config.z_levels))
        .collect();

    let mut summaries = Vec::new();
    for &l in &config.degrees {
        for (ci, column) in columns.iter().enumerate() {
            let samples: Vec<f64> = rows
                .iter()
                .filter(|row| row.l == l && row.values[ci].is_finite())
                .map(|row| row.values[ci])
                .collect();
            if samples.is_empty() {
                continue;
            }
            summaries.push(StatSummary {
                l,
                column: column.clone(),
                stats: summarize(&samples),
            });
        }
    }

    Ok(EnsembleReport {
        config: config.clone(),
        columns,
        rows,
        summaries,
        failures,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
