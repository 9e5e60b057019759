//! Composite interaction tests.
//!
//! The null hypothesis `H_X ∨ H_Y ∨ H_Z` is rejected only when every
//! sub-hypothesis is rejected. Each sub-test is calibrated with its own
//! bootstrap stream; the three p-values are combined by a [`Correction`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, BootstrapDraws, BootstrapMethod, DEFAULT_LN};
use crate::error::{Error, Result};
use crate::kernels::Series;
use crate::rng::StreamSeed;
use crate::statistics::{
    hsic_core, GramSet, KernelTriple, StatisticKind, SubHypothesis, TripleSeries,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    /// Reject iff every p-value is at most α.
    Simple,
    /// Reject iff the sorted p-values are at most α/3, α/2, α.
    HolmBonferroni,
}

impl Correction {
    pub fn label(self) -> &'static str {
        match self {
            Correction::Simple => "simple",
            Correction::HolmBonferroni => "holm-bonferroni",
        }
    }

    pub fn rejects(self, pvals: [f64; 3], alpha: f64) -> bool {
        match self {
            Correction::Simple => correction_simple(pvals, alpha),
            Correction::HolmBonferroni => correction_holm_bonferroni(pvals, alpha),
        }
    }
}

/// Boundary inclusive: a p-value equal to α counts as rejection.
pub fn correction_simple(pvals: [f64; 3], alpha: f64) -> bool {
    pvals.iter().all(|&p| p <= alpha)
}

pub fn correction_holm_bonferroni(pvals: [f64; 3], alpha: f64) -> bool {
    let mut sorted = pvals;
    sorted.sort_by(f64::total_cmp);
    sorted[0] <= alpha / 3.0 && sorted[1] <= alpha / 2.0 && sorted[2] <= alpha
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub kernels: KernelTriple,
    /// Bootstrap draws per sub-test.
    pub bootstraps: usize,
    /// Dependence length of the wild multiplier process.
    pub l_n: f64,
    pub alpha: f64,
    pub correction: Correction,
    pub method: BootstrapMethod,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            kernels: KernelTriple::default(),
            bootstraps: 250,
            l_n: DEFAULT_LN,
            alpha: 0.05,
            correction: Correction::Simple,
            method: BootstrapMethod::Wild,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstraps == 0 {
            return Err(Error::invalid("bootstrap count must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.l_n.is_nan() || self.l_n <= 0.0 {
            return Err(Error::invalid(format!("l_n must be positive, got {}", self.l_n)));
        }
        Ok(())
    }

    /// Bootstrap stream of sub-test `index` (0..3 for X, Y, Z; 3 for pairwise HSIC).
    fn stream(&self, index: u64) -> StreamSeed {
        StreamSeed::new(self.seed).child(index)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubTestResult {
    pub target: Option<SubHypothesis>,
    pub statistic: f64,
    pub p: f64,
    pub n_draws: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeResult {
    pub kind: StatisticKind,
    /// Sub-tests for targets X, Y, Z in that order.
    pub sub: [SubTestResult; 3],
    pub reject_h0: bool,
    pub correction_used: Correction,
}

impl CompositeResult {
    pub fn p_values(&self) -> [f64; 3] {
        [self.sub[0].p, self.sub[1].p, self.sub[2].p]
    }

    /// Decision under a correction other than the one recorded.
    pub fn rejects_with(&self, correction: Correction, alpha: f64) -> bool {
        correction.rejects(self.p_values(), alpha)
    }
}

fn draws_for(
    grams: &GramSet,
    kind: StatisticKind,
    h: SubHypothesis,
    cfg: &TestConfig,
) -> Result<(f64, BootstrapDraws)> {
    let seed = cfg.stream(h.index() as u64);
    match cfg.method {
        BootstrapMethod::Wild => {
            let core = grams.core(kind, h);
            let draws = bootstrap::wild_draws(&core, cfg.l_n, cfg.bootstraps, seed)?;
            Ok((core.statistic(), draws))
        }
        BootstrapMethod::Permutation => {
            let pair = grams.pair_matrix(kind, h);
            let target = grams.centered(h.target);
            let observed = (&pair * target).sum() / grams.n() as f64;
            let draws = bootstrap::permutation_draws(&pair, target, cfg.bootstraps, seed)?;
            Ok((observed, draws))
        }
    }
}

/// Sub-test from precomputed Gram matrices.
pub fn subtest_from_grams(
    grams: &GramSet,
    h: SubHypothesis,
    cfg: &TestConfig,
    kind: StatisticKind,
) -> Result<SubTestResult> {
    cfg.validate()?;
    let (statistic, draws) = draws_for(grams, kind, h, cfg)?;
    Ok(SubTestResult {
        target: Some(h),
        statistic,
        p: bootstrap::p_value(statistic, &draws)?,
        n_draws: draws.len(),
    })
}

pub fn test_subhypothesis(
    t: &TripleSeries,
    h: SubHypothesis,
    cfg: &TestConfig,
    kind: StatisticKind,
) -> Result<SubTestResult> {
    cfg.validate()?;
    subtest_from_grams(&GramSet::new(t, &cfg.kernels)?, h, cfg, kind)
}

/// All three sub-tests on shared Gram matrices, combined with `cfg.correction`.
pub fn composite_from_grams(
    grams: &GramSet,
    cfg: &TestConfig,
    kind: StatisticKind,
) -> Result<CompositeResult> {
    cfg.validate()?;
    let subs: Vec<SubTestResult> = SubHypothesis::ALL
        .par_iter()
        .map(|&h| subtest_from_grams(grams, h, cfg, kind))
        .collect::<Result<_>>()?;
    let sub: [SubTestResult; 3] = subs.try_into().expect("three sub-hypotheses");
    let pvals = [sub[0].p, sub[1].p, sub[2].p];
    Ok(CompositeResult {
        kind,
        reject_h0: cfg.correction.rejects(pvals, cfg.alpha),
        sub,
        correction_used: cfg.correction,
    })
}

pub fn lancaster_test(t: &TripleSeries, cfg: &TestConfig) -> Result<CompositeResult> {
    cfg.validate()?;
    composite_from_grams(&GramSet::new(t, &cfg.kernels)?, cfg, StatisticKind::Lancaster)
}

pub fn threeway_hsic_test(t: &TripleSeries, cfg: &TestConfig) -> Result<CompositeResult> {
    cfg.validate()?;
    composite_from_grams(&GramSet::new(t, &cfg.kernels)?, cfg, StatisticKind::ThreewayHsic)
}

/// HSIC test of `a ⫫ b` using kernels `cfg.kernels.kx` and `cfg.kernels.ky`.
pub fn pairwise_hsic_test(a: &Series, b: &Series, cfg: &TestConfig) -> Result<SubTestResult> {
    cfg.validate()?;
    let core = hsic_core(a, b, &cfg.kernels.kx, &cfg.kernels.ky)?;
    let statistic = core.statistic();
    let seed = cfg.stream(3);
    let draws = match cfg.method {
        BootstrapMethod::Wild => bootstrap::wild_draws(&core, cfg.l_n, cfg.bootstraps, seed)?,
        BootstrapMethod::Permutation => {
            let k = crate::kernels::center_empirical(&crate::kernels::gram(&cfg.kernels.kx, a));
            let l = crate::kernels::center_empirical(&crate::kernels::gram(&cfg.kernels.ky, b));
            bootstrap::permutation_draws(k.values(), l.values(), cfg.bootstraps, seed)?
        }
    };
    Ok(SubTestResult {
        target: None,
        statistic,
        p: bootstrap::p_value(statistic, &draws)?,
        n_draws: draws.len(),
    })
}
