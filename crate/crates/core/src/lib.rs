//! Nonparametric detection of three-variable interaction in stationary time
//! series.
//!
//! The Lancaster interaction statistic is computed from empirically centred
//! Gaussian Gram matrices and calibrated with a wild bootstrap driven by a
//! Gaussian AR(1) multiplier process, so the test stays valid when the
//! observations are temporally dependent. HSIC-based baselines (pairwise and
//! "3-way" HSIC) share the same machinery.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernels`] | Gaussian kernel, Gram matrices, double centring, median heuristic |
//! | [`statistics`] | Lancaster / HSIC / 3-way HSIC statistics and bootstrap core matrices |
//! | [`bootstrap`] | wild and permutation resampling, Monte-Carlo p-values |
//! | [`hypothesis`] | composite tests and multiple-testing corrections |
//! | [`synthdata`] | seeded AR generators and small discrete joints |
//! | [`oracle`] | exhaustive small-instance checks of the algebra |
//! | [`experiment`] | power curves and false-positive studies |
//! | [`report`] | CSV ingestion and result emission (CSV, JSON, SVG) |
//!
//! ```
//! use lancaster::hypothesis::{lancaster_test, TestConfig};
//! use lancaster::rng::StreamSeed;
//! use lancaster::synthdata::{generate, ArKind, ArTripleSpec};
//!
//! let spec = ArTripleSpec::new(ArKind::WeakPairwise, 200, 2.0, 0).unwrap();
//! let data = generate(&spec, StreamSeed::new(7)).unwrap();
//! let mut cfg = TestConfig::default();
//! cfg.bootstraps = 50;
//! let result = lancaster_test(&data, &cfg).unwrap();
//! assert_eq!(result.sub.len(), 3);
//! ```

pub mod bootstrap;
pub mod error;
pub mod experiment;
pub mod hypothesis;
pub mod kernels;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod statistics;
pub mod synthdata;

pub use error::{Error, Result};
