//! Seeded Monte Carlo studies of the testing procedures: Type I error,
//! power, and the correlation structure of nested Dirichlet draws.
//!
//! Replicate `i` draws from its own ChaCha8 stream (`master_seed`, stream
//! `i`), so results depend only on the study configuration, never on the thread count.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{correlation_of, Composition, CompositionDataset, Group};
use crate::dirichlet::DirichletParams;
use crate::error::{Error, Result};
use crate::hypothesis::{self, Verdict};
use crate::nested::{NddParams, NestingTree};
use crate::numerics::Tolerance;

/// A study aborts when more than this fraction of replicates fail.
pub const FAILURE_BUDGET: f64 = 0.01;

pub const DEFAULT_REPLICATES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Dirichlet(DirichletParams),
    Ndd(NddParams),
}

impl Generator {
    pub fn n_components(&self) -> usize {
        match self {
            Generator::Dirichlet(p) => p.n_components(),
            Generator::Ndd(p) => p.n_components(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Composition> {
        match self {
            Generator::Dirichlet(p) => p.sample(n, rng),
            Generator::Ndd(p) => p.sample(n, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    /// Separate uniformity tests per group, classified by verdict.
    Maugard,
    DirichletLrt,
    NddLrt(NestingTree),
    ClrHotelling,
}

impl Procedure {
    pub fn categories(&self) -> &'static [&'static str] {
        match self {
            Procedure::Maugard => &["reject_both", "fail_both", "reject_one"],
            _ => &["reject", "fail_to_reject"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub generators: [Generator; 2],
    pub n_per_group: [usize; 2],
    pub replicates: usize,
    pub level: f64,
    pub procedure: Procedure,
    pub master_seed: u64,
    pub tolerance: Tolerance,
}

impl SimSpec {
    /// Both groups drawn from one generator.
    pub fn null(generator: Generator, n: usize, procedure: Procedure) -> Self {
        Self::power(generator.clone(), generator, n, procedure)
    }

    pub fn power(first: Generator, second: Generator, n: usize, procedure: Procedure) -> Self {
        SimSpec {
            generators: [first, second],
            n_per_group: [n, n],
            replicates: DEFAULT_REPLICATES,
            level: 0.05,
            procedure,
            master_seed: 0,
            tolerance: Tolerance::default(),
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test level must lie in (0, 1), got {}",
                self.level
            )));
        }
        let k = self.generators[0].n_components();
        if self.generators[1].n_components() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: self.generators[1].n_components(),
            });
        }
        if let Procedure::NddLrt(tree) = &self.procedure {
            if tree.n_components() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: tree.n_components(),
                });
            }
        }
        if self.n_per_group.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter(
                "each group needs at least 2 observations".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRate {
    pub category: String,
    pub count: usize,
    /// count / successful replicates
    pub rate: f64,
    /// √(rate(1 − rate)/successful replicates)
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub procedure: Procedure,
    pub replicates: usize,
    pub level: f64,
    pub master_seed: u64,
    pub categories: Vec<CategoryRate>,
    pub failed: usize,
    /// The first few failures, by replicate index.
    pub failures: Vec<ReplicateFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl SimResult {
    pub fn rate(&self, category: &str) -> Option<&CategoryRate> {
        self.categories.iter().find(|c| c.category == category)
    }

    /// Rejection rate for single-test procedures, P(RejectOne) for the
    /// separate-tests procedure.
    pub fn headline(&self) -> &CategoryRate {
        match self.procedure {
            Procedure::Maugard => self.rate("reject_one"),
            _ => self.rate("reject"),
        }
        .expect("category present")
    }
}

const KEPT_FAILURES: usize = 5;

enum Outcome {
    Category(usize),
    Failed(String),
}

/// Replicate `index` of a study seeded with `master_seed`.
pub fn replicate_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

fn run_replicate(spec: &SimSpec, index: usize) -> Outcome {
    let mut rng = replicate_rng(spec.master_seed, index);
    let k = spec.generators[0].n_components();
    let groups: Vec<Group> = spec
        .generators
        .iter()
        .zip(spec.n_per_group)
        .zip(["G1", "G2"])
        .map(|((g, n), label)| Group {
            label: label.into(),
            observations: g.sample(n, &mut rng),
        })
        .collect();
    let names = (1..=k).map(|j| format!("X{j}")).collect();
    let result = CompositionDataset::new(names, groups).and_then(|ds| {
        let tol = &spec.tolerance;
        match &spec.procedure {
            Procedure::Maugard => {
                hypothesis::maugard_procedure(&ds, spec.level, tol).map(|o| match o.verdict {
                    Verdict::RejectBoth => 0,
                    Verdict::FailBoth => 1,
                    Verdict::RejectOne => 2,
                })
            }
            Procedure::DirichletLrt => hypothesis::two_sample_dirichlet_lrt(&ds, tol).map(|r| reject_index(&r, spec.level)),
            Procedure::NddLrt(tree) => {
                hypothesis::two_sample_ndd_lrt(&ds, tree, tol).map(|r| reject_index(&r, spec.level))
            }
            Procedure::ClrHotelling => hypothesis::clr_hotelling_test(&ds).map(|r| reject_index(&r, spec.level)),
        }
    });
    match result {
        Ok(c) => Outcome::Category(c),
        Err(e) => Outcome::Failed(e.to_string()),
    }
}

fn reject_index(report: &hypothesis::TestReport, level: f64) -> usize {
    if report.rejects(level) {
        0
    } else {
        1
    }
}

fn run_study(spec: &SimSpec) -> Result<SimResult> {
    spec.validate()?;
    let start = Instant::now();
    let outcomes: Vec<Outcome> = (0..spec.replicates)
        .into_par_iter()
        .map(|i| run_replicate(spec, i))
        .collect();
    let names = spec.procedure.categories();
    let mut counts = vec![0usize; names.len()];
    let mut failed = 0;
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Outcome::Category(c) => counts[c] += 1,
            Outcome::Failed(error) => {
                failed += 1;
                if failures.len() < KEPT_FAILURES {
                    failures.push(ReplicateFailure { replicate: i, error });
                }
            }
        }
    }
    if failed as f64 > FAILURE_BUDGET * spec.replicates as f64 {
        return Err(Error::StudyFailed {
            failed,
            replicates: spec.replicates,
        });
    }
    let ok = (spec.replicates - failed) as f64;
    let categories = names
        .iter()
        .zip(counts)
        .map(|(name, count)| {
            let rate = count as f64 / ok;
            CategoryRate {
                category: name.to_string(),
                count,
                rate,
                mc_se: (rate * (1.0 - rate) / ok).sqrt(),
            }
        })
        .collect();
    Ok(SimResult {
        procedure: spec.procedure.clone(),
        replicates: spec.replicates,
        level: spec.level,
        master_seed: spec.master_seed,
        categories,
        failed,
        failures,
        wall_time_secs: Some(start.elapsed().as_secs_f64()),
    })
}

/// Rejection behaviour when both groups share one generator.
pub fn run_type1_study(spec: &SimSpec) -> Result<SimResult> {
    if spec.generators[0] != spec.generators[1] {
        return Err(Error::InvalidParameter(
            "a Type I error study needs one generator for both groups".into(),
        ));
    }
    run_study(spec)
}

/// Rejection rate when the groups come from different generators.
pub fn run_power_study(spec: &SimSpec) -> Result<SimResult> {
    run_study(spec)
}

/// Sample correlation matrix of `n` draws from `params`.
pub fn run_correlation_check(params: &NddParams, n: usize, master_seed: u64) -> Result<DMatrix<f64>> {
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, found: n });
    }
    let draws = params.sample(n, &mut ChaCha8Rng::seed_from_u64(master_seed));
    correlation_of(&draws)
}
