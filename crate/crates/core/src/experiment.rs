//! Monte-Carlo experiments: power curves and false-positive studies.
//!
//! Every dataset and every bootstrap stream is derived from the experiment
//! seed by grid index and replicate index, and rows are assembled in grid
//! order, so results are identical for any worker count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapMethod, DEFAULT_LN};
use crate::error::{Error, Result};
use crate::hypothesis::{
    composite_from_grams, pairwise_hsic_test, CompositeResult, Correction, SubTestResult,
    TestConfig,
};
use crate::kernels::{median_heuristic_bandwidth, KernelSpec};
use crate::rng::StreamSeed;
use crate::statistics::{GramSet, KernelTriple, StatisticKind, TripleSeries, Variable};
use crate::synthdata::{generate, ArKind, ArTripleSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PowerWeakPairwise,
    PowerStrongPairwise,
    FprStudy,
    SingleTest,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::PowerWeakPairwise => "power_weak_pairwise",
            ExperimentKind::PowerStrongPairwise => "power_strong_pairwise",
            ExperimentKind::FprStudy => "fpr_study",
            ExperimentKind::SingleTest => "single_test",
        }
    }

    fn generator(self) -> Option<ArKind> {
        match self {
            ExperimentKind::PowerWeakPairwise => Some(ArKind::WeakPairwise),
            ExperimentKind::PowerStrongPairwise => Some(ArKind::StrongPairwise),
            ExperimentKind::FprStudy => Some(ArKind::Independent),
            ExperimentKind::SingleTest => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed(KernelTriple),
    /// Median pairwise distance, per variable and per dataset.
    MedianHeuristic,
}

impl BandwidthRule {
    pub fn resolve(&self, t: &TripleSeries) -> Result<KernelTriple> {
        match self {
            BandwidthRule::Fixed(k) => Ok(*k),
            BandwidthRule::MedianHeuristic => {
                let k = |v| KernelSpec::gaussian(median_heuristic_bandwidth(t.get(v))?);
                Ok(KernelTriple::new(k(Variable::X)?, k(Variable::Y)?, k(Variable::Z)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    /// Dependence coefficients `d` (power curves) or AR coefficients `a`
    /// (false-positive study).
    pub grid: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub bootstraps: usize,
    pub l_n: f64,
    pub alpha: f64,
    pub bandwidth: BandwidthRule,
    pub burn_in: usize,
    pub seed: u64,
    /// Fill the `seconds` column with measured compute time. Off by default
    /// so that output files are reproducible byte for byte.
    pub record_timing: bool,
}

impl ExperimentSpec {
    /// Full-scale settings: n = 1200, 300 replications, 250 bootstraps for
    /// the power curves; n = 1000 and 200 replications for the false-positive
    /// study.
    pub fn paper(experiment: ExperimentKind) -> Self {
        let (n, replications) = match experiment {
            ExperimentKind::FprStudy => (1000, 200),
            _ => (1200, 300),
        };
        ExperimentSpec {
            experiment,
            grid: default_grid(experiment),
            n,
            replications,
            bootstraps: 250,
            l_n: DEFAULT_LN,
            alpha: 0.05,
            bandwidth: BandwidthRule::Fixed(KernelTriple::default()),
            burn_in: 0,
            seed: 0,
            record_timing: false,
        }
    }

    /// Reduced settings for minutes-scale runs.
    pub fn desk(experiment: ExperimentKind) -> Self {
        let (n, replications) = match experiment {
            ExperimentKind::FprStudy => (500, 200),
            _ => (600, 100),
        };
        ExperimentSpec {
            n,
            replications,
            bootstraps: 200,
            ..ExperimentSpec::paper(experiment)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("coefficient grid is empty"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.experiment == ExperimentKind::FprStudy {
            if let Some(a) = self.grid.iter().find(|a| a.is_nan() || a.abs() >= 1.0) {
                return Err(Error::invalid(format!(
                    "AR coefficient {a} in the grid is not stationary (|a| must be < 1)"
                )));
            }
        }
        self.test_config(0).validate()?;
        for &c in &self.grid {
            self.dataset_spec(c)?;
        }
        Ok(())
    }

    fn test_config(&self, seed: u64) -> TestConfig {
        TestConfig {
            kernels: KernelTriple::default(),
            bootstraps: self.bootstraps,
            l_n: self.l_n,
            alpha: self.alpha,
            correction: Correction::Simple,
            method: BootstrapMethod::Wild,
            seed,
        }
    }

    fn dataset_spec(&self, coeff: f64) -> Result<ArTripleSpec> {
        let kind = self.experiment.generator().ok_or_else(|| {
            Error::invalid("single_test is not a simulation experiment")
        })?;
        ArTripleSpec::new(kind, self.n, coeff, self.burn_in)
    }
}

pub fn default_grid(experiment: ExperimentKind) -> Vec<f64> {
    match experiment {
        ExperimentKind::PowerWeakPairwise => vec![0.0, 0.5, 1.0, 1.5, 2.0],
        ExperimentKind::PowerStrongPairwise => vec![0.0, 0.1, 0.2, 0.3],
        ExperimentKind::FprStudy => vec![0.0, 0.1, 0.3, 0.5, 0.7],
        ExperimentKind::SingleTest => vec![0.0],
    }
}

/// One aggregated line of output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub coefficient: f64,
    pub method: String,
    pub correction: String,
    /// Exactly `rejects / replications`.
    pub rejection_rate: f64,
    pub replications: usize,
    /// Mean over replications of the average sub-test statistic.
    pub mean_statistic: f64,
    pub seconds: f64,
}

/// Per-dataset record behind the rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetOutcome {
    pub coefficient: f64,
    pub replicate: usize,
    pub method: String,
    pub p_values: [f64; 3],
    pub reject_simple: bool,
    pub reject_holm_bonferroni: bool,
    pub mean_statistic: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub outcomes: Vec<DatasetOutcome>,
}

struct Arm {
    label: &'static str,
    kind: StatisticKind,
    method: BootstrapMethod,
}

const POWER_ARMS: [Arm; 2] = [
    Arm {
        label: "lancaster",
        kind: StatisticKind::Lancaster,
        method: BootstrapMethod::Wild,
    },
    Arm {
        label: "3way-hsic",
        kind: StatisticKind::ThreewayHsic,
        method: BootstrapMethod::Wild,
    },
];

const FPR_ARMS: [Arm; 2] = [
    Arm {
        label: "lancaster-wild",
        kind: StatisticKind::Lancaster,
        method: BootstrapMethod::Wild,
    },
    Arm {
        label: "lancaster-permutation",
        kind: StatisticKind::Lancaster,
        method: BootstrapMethod::Permutation,
    },
];

const CORRECTIONS: [Correction; 2] = [Correction::Simple, Correction::HolmBonferroni];

fn mean_statistic(r: &CompositeResult) -> f64 {
    r.sub.iter().map(|s| s.statistic).sum::<f64>() / 3.0
}

fn run_arms(spec: &ExperimentSpec, arms: &[Arm]) -> Result<ExperimentOutput> {
    spec.validate()?;
    let root = StreamSeed::new(spec.seed);
    let reps = spec.replications;
    let jobs: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|g| (0..reps).map(move |r| (g, r)))
        .collect();

    let per_job: Vec<Vec<(DatasetOutcome, f64)>> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let coeff = spec.grid[g];
            let job = root.child(g as u64).child(r as u64);
            let data = generate(&spec.dataset_spec(coeff)?, job.child(0))?;
            let mut cfg = spec.test_config(job.child(1).value());
            cfg.kernels = spec.bandwidth.resolve(&data)?;
            let grams = GramSet::new(&data, &cfg.kernels)?;
            arms.iter()
                .map(|arm| {
                    let start = Instant::now();
                    let cfg = TestConfig {
                        method: arm.method,
                        ..cfg.clone()
                    };
                    let res = composite_from_grams(&grams, &cfg, arm.kind)?;
                    let secs = if spec.record_timing {
                        start.elapsed().as_secs_f64()
                    } else {
                        0.0
                    };
                    let p = res.p_values();
                    Ok((
                        DatasetOutcome {
                            coefficient: coeff,
                            replicate: r,
                            method: arm.label.to_string(),
                            p_values: p,
                            reject_simple: Correction::Simple.rejects(p, spec.alpha),
                            reject_holm_bonferroni: Correction::HolmBonferroni.rejects(p, spec.alpha),
                            mean_statistic: mean_statistic(&res),
                        },
                        secs,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(spec.grid.len() * arms.len() * CORRECTIONS.len());
    for (g, &coeff) in spec.grid.iter().enumerate() {
        let block = &per_job[g * reps..(g + 1) * reps];
        for (a, arm) in arms.iter().enumerate() {
            let outcomes: Vec<&(DatasetOutcome, f64)> = block.iter().map(|j| &j[a]).collect();
            let mean_stat = outcomes.iter().map(|(o, _)| o.mean_statistic).sum::<f64>() / reps as f64;
            let seconds: f64 = outcomes.iter().map(|(_, s)| s).sum();
            for correction in CORRECTIONS {
                let rejects = outcomes
                    .iter()
                    .filter(|(o, _)| match correction {
                        Correction::Simple => o.reject_simple,
                        Correction::HolmBonferroni => o.reject_holm_bonferroni,
                    })
                    .count();
                rows.push(ResultRow {
                    experiment: spec.experiment.id().to_string(),
                    coefficient: coeff,
                    method: arm.label.to_string(),
                    correction: correction.label().to_string(),
                    rejection_rate: rejects as f64 / reps as f64,
                    replications: reps,
                    mean_statistic: mean_stat,
                    seconds,
                });
            }
        }
    }
    let outcomes = per_job.into_iter().flatten().map(|(o, _)| o).collect();
    Ok(ExperimentOutput { rows, outcomes })
}

/// Lancaster and 3-way HSIC power over the grid, both corrections, on the
/// weak- or strong-pairwise generator. The two statistics see the same
/// datasets and the same bootstrap streams.
pub fn run_power_curve_detailed(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    match spec.experiment {
        ExperimentKind::PowerWeakPairwise | ExperimentKind::PowerStrongPairwise => {
            run_arms(spec, &POWER_ARMS)
        }
        other => Err(Error::invalid(format!("{} is not a power experiment", other.id()))),
    }
}

pub fn run_power_curve(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    Ok(run_power_curve_detailed(spec)?.rows)
}

/// Lancaster rejection rates on independent AR(1) triples with wild and
/// permutation calibration.
pub fn run_fpr_study_detailed(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    if spec.experiment != ExperimentKind::FprStudy {
        return Err(Error::invalid(format!(
            "{} is not a false-positive study",
            spec.experiment.id()
        )));
    }
    run_arms(spec, &FPR_ARMS)
}

pub fn run_fpr_study(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    Ok(run_fpr_study_detailed(spec)?.rows)
}

/// Dispatches on `spec.experiment`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    match spec.experiment {
        ExperimentKind::FprStudy => run_fpr_study_detailed(spec),
        _ => run_power_curve_detailed(spec),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub pair: String,
    pub result: SubTestResult,
}

/// Everything run on a single dataset: the Lancaster and 3-way HSIC
/// composite tests and pairwise HSIC for each pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleTestReport {
    pub n: usize,
    pub kernels: KernelTriple,
    pub lancaster: CompositeResult,
    pub threeway_hsic: CompositeResult,
    pub pairwise_hsic: Vec<PairwiseResult>,
}

pub fn run_single_test(t: &TripleSeries, cfg: &TestConfig) -> Result<SingleTestReport> {
    cfg.validate()?;
    let grams = GramSet::new(t, &cfg.kernels)?;
    let lancaster = composite_from_grams(&grams, cfg, StatisticKind::Lancaster)?;
    let threeway_hsic = composite_from_grams(&grams, cfg, StatisticKind::ThreewayHsic)?;
    let pairs = [
        ("x-y", Variable::X, Variable::Y),
        ("x-z", Variable::X, Variable::Z),
        ("y-z", Variable::Y, Variable::Z),
    ];
    let pairwise_hsic = pairs
        .iter()
        .map(|&(label, a, b)| {
            let pair_cfg = TestConfig {
                kernels: KernelTriple::new(*cfg.kernels.get(a), *cfg.kernels.get(b), cfg.kernels.kz),
                ..cfg.clone()
            };
            Ok(PairwiseResult {
                pair: label.to_string(),
                result: pairwise_hsic_test(t.get(a), t.get(b), &pair_cfg)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SingleTestReport {
        n: t.len(),
        kernels: cfg.kernels,
        lancaster,
        threeway_hsic,
        pairwise_hsic,
    })
}
