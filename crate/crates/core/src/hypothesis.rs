//! Hypothesis tests on compositional samples: the one-sample uniformity LRT
//! and the two-group procedure built on it, two-sample likelihood-ratio
//! tests under the Dirichlet and nested Dirichlet models, Bonferroni
//! intervals for differences of mean vectors, and the CLR + Hotelling T²
//! baseline.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::composition::{clr, Composition, CompositionDataset, Group, SufficientStats};
use crate::dirichlet::{self, log_likelihood_alpha, DirichletParams};
use crate::error::{Error, Result};
use crate::nested::{self, decompose, NestingTree};
use crate::numerics::{chi_square_sf, f_sf, normal_quantile, psi, psi1, Tolerance};

/// Negative likelihood-ratio statistics down to this value are rounding
/// noise and clamp to zero; anything lower is an optimizer failure.
pub const NEGATIVE_SLACK: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    OneSampleUniformity,
    TwoSampleDirichletLrt,
    TwoSampleNddLrt,
    ClrHotelling,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::OneSampleUniformity => "one-sample uniformity LRT",
            TestMethod::TwoSampleDirichletLrt => "two-sample Dirichlet LRT",
            TestMethod::TwoSampleNddLrt => "two-sample nested Dirichlet LRT",
            TestMethod::ClrHotelling => "CLR Hotelling T^2 (F-scaled)",
        })
    }
}

/// Dirichlet parameters fitted under one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedDirichlet {
    pub label: String,
    pub alpha: Vec<f64>,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtreeStatistic {
    pub node: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: TestMethod,
    pub statistic: f64,
    pub df: usize,
    /// Denominator degrees of freedom of F-scaled statistics.
    pub df2: Option<usize>,
    pub p_value: f64,
    pub h0_fit: Vec<FittedDirichlet>,
    pub h1_fit: Vec<FittedDirichlet>,
    pub subtree_statistics: Vec<SubtreeStatistic>,
}

impl TestReport {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

fn clamp_statistic(raw: f64) -> Result<f64> {
    if raw.is_nan() {
        return Err(Error::NegativeStatistic { statistic: raw });
    }
    if raw >= 0.0 {
        Ok(raw)
    } else if raw >= NEGATIVE_SLACK {
        Ok(0.0)
    } else {
        Err(Error::NegativeStatistic { statistic: raw })
    }
}

fn fitted(label: impl Into<String>, alpha: Vec<f64>, stats: &SufficientStats) -> FittedDirichlet {
    let log_likelihood = log_likelihood_alpha(&alpha, stats);
    FittedDirichlet {
        label: label.into(),
        alpha,
        log_likelihood,
    }
}

/// H0: every component has mean 1/K with free precision; H1: unrestricted
/// Dirichlet. df = K − 1.
pub fn one_sample_uniformity_test(group: &Group, tol: &Tolerance) -> Result<TestReport> {
    let stats = SufficientStats::from_observations(&group.observations)?;
    uniformity_test_from_stats(&stats, &group.label, tol)
}

pub fn uniformity_test_from_stats(
    stats: &SufficientStats,
    label: &str,
    tol: &Tolerance,
) -> Result<TestReport> {
    if stats.n < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: stats.n,
        });
    }
    let k = stats.n_components();
    let h1 = dirichlet::mle_from_stats(stats, tol)?;
    let a0 = uniform_precision_mle(stats, h1.params.precision(), tol)?;
    let h0 = fitted(label, vec![a0 / k as f64; k], stats);
    let statistic = clamp_statistic(2.0 * (h1.log_likelihood - h0.log_likelihood))?;
    let df = k - 1;
    Ok(TestReport {
        method: TestMethod::OneSampleUniformity,
        statistic,
        df,
        df2: None,
        p_value: chi_square_sf(statistic, df)?,
        h0_fit: vec![h0],
        h1_fit: vec![fitted(label, h1.params.alpha().to_vec(), stats)],
        subtree_statistics: Vec::new(),
    })
}

/// Precision maximizing the likelihood with every mean fixed at 1/K. The
/// profile is strictly concave in A, so a bracketed Newton iteration on the
/// score converges from any start.
fn uniform_precision_mle(stats: &SufficientStats, start: f64, tol: &Tolerance) -> Result<f64> {
    let k = stats.n_components() as f64;
    let mean_ml: f64 = stats.mean_log.iter().sum::<f64>() / k;
    // per-observation score and curvature
    let score = |a: f64| psi(a) - psi(a / k) + mean_ml;
    let curvature = |a: f64| psi1(a) - psi1(a / k) / k;
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut a = if start.is_finite() && start > 0.0 { start } else { k };
    for _ in 0..tol.max_iter {
        let s = score(a);
        if s.abs() < tol.abs_tol {
            return Ok(a);
        }
        if s > 0.0 {
            lo = lo.max(a);
        } else {
            hi = hi.min(a);
        }
        let mut next = a - s / curvature(a);
        if !(next > lo && next < hi) {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * a
            };
        }
        if ((next - a) / a).abs() < tol.rel_tol {
            return Ok(next);
        }
        a = next;
    }
    Err(Error::NonConvergence {
        what: "uniform-mean precision fit",
        iterations: tol.max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    RejectBoth,
    FailBoth,
    RejectOne,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::RejectBoth => "reject both",
            Verdict::FailBoth => "fail to reject both",
            Verdict::RejectOne => "reject one",
        })
    }
}

impl Verdict {
    pub fn from_rejections(first: bool, second: bool) -> Verdict {
        match (first, second) {
            (true, true) => Verdict::RejectBoth,
            (false, false) => Verdict::FailBoth,
            _ => Verdict::RejectOne,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateTestsOutcome {
    pub reports: [TestReport; 2],
    pub verdict: Verdict,
}

/// Separate uniformity tests on each of two groups, classified by how many
/// reject at `level`.
pub fn maugard_procedure(
    ds: &CompositionDataset,
    level: f64,
    tol: &Tolerance,
) -> Result<SeparateTestsOutcome> {
    let (g1, g2) = ds.two_groups()?;
    let r1 = one_sample_uniformity_test(g1, tol)?;
    let r2 = one_sample_uniformity_test(g2, tol)?;
    let verdict = Verdict::from_rejections(r1.rejects(level), r2.rejects(level));
    Ok(SeparateTestsOutcome {
        reports: [r1, r2],
        verdict,
    })
}

/// Two-sample Dirichlet LRT of equal mean vectors with group-specific
/// precisions. df = K − 1.
pub fn two_sample_dirichlet_lrt(ds: &CompositionDataset, tol: &Tolerance) -> Result<TestReport> {
    let (g1, g2) = ds.two_groups()?;
    let s1 = SufficientStats::from_observations(&g1.observations)?;
    let s2 = SufficientStats::from_observations(&g2.observations)?;
    two_sample_lrt_from_stats([&s1, &s2], [&g1.label, &g2.label], tol)
}

pub fn two_sample_lrt_from_stats(
    stats: [&SufficientStats; 2],
    labels: [&str; 2],
    tol: &Tolerance,
) -> Result<TestReport> {
    let k = stats[0].n_components();
    if stats[1].n_components() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: stats[1].n_components(),
        });
    }
    for s in stats {
        if s.n < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                found: s.n,
            });
        }
    }
    let h1: Vec<DirichletParams> = stats
        .iter()
        .map(|s| dirichlet::mle_from_stats(s, tol).map(|f| f.params))
        .collect::<Result<_>>()?;
    let h1_fit: Vec<FittedDirichlet> = h1
        .iter()
        .zip(stats)
        .zip(labels)
        .map(|((p, s), l)| fitted(l, p.alpha().to_vec(), s))
        .collect();

    let common = common_mean_fit(stats, &h1, tol)?;
    let h0_fit: Vec<FittedDirichlet> = common
        .precision
        .iter()
        .zip(stats)
        .zip(labels)
        .map(|((&a, s), l)| fitted(l, common.mean.iter().map(|p| a * p).collect(), s))
        .collect();

    let l1: f64 = h1_fit.iter().map(|f| f.log_likelihood).sum();
    let l0: f64 = h0_fit.iter().map(|f| f.log_likelihood).sum();
    let statistic = clamp_statistic(2.0 * (l1 - l0))?;
    let df = k - 1;
    Ok(TestReport {
        method: TestMethod::TwoSampleDirichletLrt,
        statistic,
        df,
        df2: None,
        p_value: chi_square_sf(statistic, df)?,
        h0_fit,
        h1_fit,
        subtree_statistics: Vec::new(),
    })
}

/// Maximizer of the two-group likelihood under a shared mean vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonMeanFit {
    pub mean: Vec<f64>,
    pub precision: [f64; 2],
    pub log_likelihood: f64,
    pub iterations: usize,
}

fn common_loglik(pi: &[f64], a: &[f64; 2], stats: [&SufficientStats; 2]) -> f64 {
    stats
        .iter()
        .zip(a)
        .map(|(s, &ag)| {
            let alpha: Vec<f64> = pi.iter().map(|p| ag * p).collect();
            log_likelihood_alpha(&alpha, s)
        })
        .sum()
}

/// Gradient and Hessian in (π_1, …, π_{K−1}, A_1, A_2) with π_K = 1 − Σπ_j.
fn common_derivatives(
    pi: &[f64],
    a: &[f64; 2],
    stats: [&SufficientStats; 2],
) -> (DVector<f64>, DMatrix<f64>) {
    let k = pi.len();
    let m = k - 1;
    let last = k - 1;
    let mut grad = DVector::<f64>::zeros(m + 2);
    let mut hess = DMatrix::<f64>::zeros(m + 2, m + 2);
    for (g, (s, &ag)) in stats.iter().zip(a).enumerate() {
        let n = s.n as f64;
        let resid: Vec<f64> = (0..k).map(|j| s.mean_log[j] - psi(ag * pi[j])).collect();
        let tri: Vec<f64> = (0..k).map(|j| psi1(ag * pi[j])).collect();
        let ia = m + g;
        for j in 0..m {
            let d = resid[j] - resid[last];
            grad[j] += n * ag * d;
            for l in 0..m {
                hess[(j, l)] -= n * ag * ag * tri[last];
            }
            hess[(j, j)] -= n * ag * ag * tri[j];
            let cross = n * d - n * ag * (pi[j] * tri[j] - pi[last] * tri[last]);
            hess[(j, ia)] += cross;
            hess[(ia, j)] += cross;
        }
        grad[ia] = n * (psi(ag) + (0..k).map(|j| pi[j] * resid[j]).sum::<f64>());
        hess[(ia, ia)] =
            n * (psi1(ag) - (0..k).map(|j| pi[j] * pi[j] * tri[j]).sum::<f64>());
    }
    (grad, hess)
}

const MAX_HALVINGS: usize = 40;

/// Block coordinate ascent for the shared-mean likelihood, polished by full
/// Newton steps whenever the Hessian is negative definite.
///
/// Each sweep takes (i) a Newton step in π on the simplex using the diagonal
/// of the π-Hessian, then (ii) a Newton step in each group's precision.
/// Every step is halved until the likelihood does not decrease.
pub fn common_mean_fit(
    stats: [&SufficientStats; 2],
    start: &[DirichletParams],
    tol: &Tolerance,
) -> Result<CommonMeanFit> {
    let k = stats[0].n_components();
    let total_n = (stats[0].n + stats[1].n) as f64;
    // start: sample-size weighted average of the unrestricted means
    let mut pi = vec![0.0; k];
    for (p, s) in start.iter().zip(stats) {
        for (acc, m) in pi.iter_mut().zip(p.mean()) {
            *acc += m * s.n as f64 / total_n;
        }
    }
    let mut a = [start[0].precision(), start[1].precision()];
    let mut ll = common_loglik(&pi, &a, stats);
    let slack = |l: f64| 1e-12 * l.abs().max(1.0);

    for it in 1..=tol.max_iter {
        let (grad, hess) = common_derivatives(&pi, &a, stats);
        if grad.amax() / total_n < tol.abs_tol {
            return Ok(CommonMeanFit {
                mean: pi,
                precision: a,
                log_likelihood: ll,
                iterations: it - 1,
            });
        }

        let mut moved = false;
        if let Some(chol) = (-&hess).cholesky() {
            let step = chol.solve(&grad);
            let mut t = 1.0;
            for _ in 0..MAX_HALVINGS {
                if let Some((p2, a2)) = apply_step(&pi, &a, &step, t) {
                    let l2 = common_loglik(&p2, &a2, stats);
                    if l2 >= ll - slack(ll) {
                        let rel = (0..k)
                            .map(|j| ((p2[j] - pi[j]) / pi[j]).abs())
                            .chain((0..2).map(|g| ((a2[g] - a[g]) / a[g]).abs()))
                            .fold(0.0, f64::max);
                        pi = p2;
                        a = a2;
                        ll = l2;
                        moved = true;
                        if t == 1.0 && rel < tol.rel_tol {
                            return Ok(CommonMeanFit {
                                mean: pi,
                                precision: a,
                                log_likelihood: ll,
                                iterations: it,
                            });
                        }
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        if !moved {
            let before = ll;
            ll = coordinate_sweep(&mut pi, &mut a, stats, ll);
            if ll <= before {
                // No direction improves the likelihood at working precision.
                if grad.amax() / total_n < tol.abs_tol.max(1e-5) {
                    return Ok(CommonMeanFit {
                        mean: pi,
                        precision: a,
                        log_likelihood: ll,
                        iterations: it,
                    });
                }
                break;
            }
        }
    }
    Err(Error::NonConvergence {
        what: "shared-mean fit",
        iterations: tol.max_iter,
    })
}

fn apply_step(pi: &[f64], a: &[f64; 2], step: &DVector<f64>, t: f64) -> Option<(Vec<f64>, [f64; 2])> {
    let k = pi.len();
    let m = k - 1;
    let mut p2: Vec<f64> = (0..m).map(|j| pi[j] + t * step[j]).collect();
    let rest = 1.0 - p2.iter().sum::<f64>();
    p2.push(rest);
    let a2 = [a[0] + t * step[m], a[1] + t * step[m + 1]];
    if p2.iter().all(|&p| p > 0.0) && a2.iter().all(|&x| x > 0.0 && x.is_finite()) {
        Some((p2, a2))
    } else {
        None
    }
}

fn coordinate_sweep(pi: &mut Vec<f64>, a: &mut [f64; 2], stats: [&SufficientStats; 2], mut ll: f64) -> f64 {
    let k = pi.len();
    // (i) common mean: maximize the diagonal quadratic model subject to Σδ = 0
    let mut g = vec![0.0; k];
    let mut h = vec![0.0; k];
    for (s, &ag) in stats.iter().zip(a.iter()) {
        let n = s.n as f64;
        for j in 0..k {
            g[j] += n * ag * (s.mean_log[j] - psi(ag * pi[j]));
            h[j] += n * ag * ag * psi1(ag * pi[j]);
        }
    }
    let lambda = (0..k).map(|j| g[j] / h[j]).sum::<f64>() / (0..k).map(|j| 1.0 / h[j]).sum::<f64>();
    let delta: Vec<f64> = (0..k).map(|j| (g[j] - lambda) / h[j]).collect();
    let mut t = 1.0;
    for _ in 0..MAX_HALVINGS {
        let p2: Vec<f64> = (0..k).map(|j| pi[j] + t * delta[j]).collect();
        if p2.iter().all(|&p| p > 0.0) {
            let sum: f64 = p2.iter().sum();
            let p2: Vec<f64> = p2.iter().map(|p| p / sum).collect();
            let l2 = common_loglik(&p2, a, stats);
            if l2 > ll {
                *pi = p2;
                ll = l2;
                break;
            }
        }
        t *= 0.5;
    }
    // (ii) precisions, Newton in log A
    for g in 0..2 {
        let s = stats[g];
        let n = s.n as f64;
        let ag = a[g];
        let d1 = n * (psi(ag)
            + (0..k)
                .map(|j| pi[j] * (s.mean_log[j] - psi(ag * pi[j])))
                .sum::<f64>());
        let d2 = n * (psi1(ag) - (0..k).map(|j| pi[j] * pi[j] * psi1(ag * pi[j])).sum::<f64>());
        // derivatives with respect to u = ln A
        let du = ag * d1;
        let duu = ag * d1 + ag * ag * d2;
        let step = if duu < 0.0 { -du / duu } else { du.signum() * 0.5 };
        let mut t = 1.0;
        for _ in 0..MAX_HALVINGS {
            let mut a2 = *a;
            a2[g] = ag * (t * step).clamp(-5.0, 5.0).exp();
            let l2 = common_loglik(pi, &a2, stats);
            if l2 > ll {
                *a = a2;
                ll = l2;
                break;
            }
            t *= 0.5;
        }
    }
    ll
}

/// Two-sample LRT under a nesting tree: one two-sample Dirichlet LRT per
/// internal node on the decomposed data, summed.
pub fn two_sample_ndd_lrt(
    ds: &CompositionDataset,
    tree: &NestingTree,
    tol: &Tolerance,
) -> Result<TestReport> {
    let (g1, g2) = ds.two_groups()?;
    if tree.n_components() != ds.n_components() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_components(),
            found: tree.n_components(),
        });
    }
    let d1 = decompose(tree, &g1.observations)?;
    let d2 = decompose(tree, &g2.observations)?;
    let names = ds.component_names();
    let mut subtree_statistics = Vec::new();
    let mut h0_fit = Vec::new();
    let mut h1_fit = Vec::new();
    for (b1, b2) in d1.subtrees.iter().zip(&d2.subtrees) {
        let label = b1.node.label(names);
        let report = (|| {
            let s1 = SufficientStats::from_observations(&b1.observations)?;
            let s2 = SufficientStats::from_observations(&b2.observations)?;
            two_sample_lrt_from_stats([&s1, &s2], [&g1.label, &g2.label], tol)
        })()
        .map_err(|e| e.in_subtree(label.clone()))?;
        subtree_statistics.push(SubtreeStatistic {
            node: label.clone(),
            statistic: report.statistic,
            df: report.df,
            p_value: report.p_value,
        });
        let tag = |mut f: FittedDirichlet| {
            f.label = format!("{} {}", label, f.label);
            f
        };
        h0_fit.extend(report.h0_fit.into_iter().map(tag));
        h1_fit.extend(report.h1_fit.into_iter().map(tag));
    }
    let (statistic, df, p_value) = aggregate_subtree_statistics(&subtree_statistics)?;
    Ok(TestReport {
        method: TestMethod::TwoSampleNddLrt,
        statistic,
        df,
        df2: None,
        p_value,
        h0_fit,
        h1_fit,
        subtree_statistics,
    })
}

/// Λ_overall = Σ Λ_i on Σ df_i degrees of freedom.
pub fn aggregate_subtree_statistics(subtrees: &[SubtreeStatistic]) -> Result<(f64, usize, f64)> {
    let statistic: f64 = subtrees.iter().map(|s| s.statistic).sum();
    let df: usize = subtrees.iter().map(|s| s.df).sum();
    if df == 0 {
        return Err(Error::InvalidParameter("no subtree statistics to aggregate".into()));
    }
    Ok((statistic, df, chi_square_sf(statistic, df)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanDifferenceCI {
    pub component: String,
    pub est_1: f64,
    pub est_2: f64,
    pub diff: f64,
    pub se_diff: f64,
    pub lower: f64,
    pub upper: f64,
    /// Per-interval confidence level after the Bonferroni adjustment.
    pub adjusted_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanModel {
    Dirichlet,
    Ndd(NestingTree),
}

/// Point estimates and variances of one group's mean vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimate {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn estimate_means(observations: &[Composition], model: &MeanModel, tol: &Tolerance) -> Result<MeanEstimate> {
    let n = observations.len();
    match model {
        MeanModel::Dirichlet => {
            let fit = dirichlet::mle(observations, tol)?;
            Ok(MeanEstimate {
                mean: fit.params.mean(),
                variance: dirichlet::mean_variances(&fit.params, n)?,
            })
        }
        MeanModel::Ndd(tree) => {
            let fit = nested::mle(tree, observations, tol)?;
            Ok(MeanEstimate {
                mean: fit.params.leaf_means(),
                variance: fit.params.delta_method_variances(n)?,
            })
        }
    }
}

/// Bonferroni-adjusted intervals for est₁ − est₂, one per component, with
/// z = Φ⁻¹(1 − (1 − overall_level)/(2K)).
pub fn pairwise_mean_cis(
    ds: &CompositionDataset,
    model: &MeanModel,
    overall_level: f64,
    tol: &Tolerance,
) -> Result<Vec<MeanDifferenceCI>> {
    let (g1, g2) = ds.two_groups()?;
    let e1 = estimate_means(&g1.observations, model, tol).map_err(|e| tag_group(e, g1))?;
    let e2 = estimate_means(&g2.observations, model, tol).map_err(|e| tag_group(e, g2))?;
    mean_difference_cis(ds.component_names(), &e1, &e2, overall_level)
}

fn tag_group(e: Error, g: &Group) -> Error {
    e.in_subtree(format!("group {}", g.label))
}

/// Intervals from already fitted Dirichlet parameters and group sizes.
pub fn dirichlet_mean_difference_cis(
    names: &[String],
    fits: [(&DirichletParams, usize); 2],
    overall_level: f64,
) -> Result<Vec<MeanDifferenceCI>> {
    let est = |(p, n): (&DirichletParams, usize)| -> Result<MeanEstimate> {
        Ok(MeanEstimate {
            mean: p.mean(),
            variance: dirichlet::mean_variances(p, n)?,
        })
    };
    mean_difference_cis(names, &est(fits[0])?, &est(fits[1])?, overall_level)
}

pub fn mean_difference_cis(
    names: &[String],
    e1: &MeanEstimate,
    e2: &MeanEstimate,
    overall_level: f64,
) -> Result<Vec<MeanDifferenceCI>> {
    let k = e1.mean.len();
    if e2.mean.len() != k || names.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: if e2.mean.len() != k { e2.mean.len() } else { names.len() },
        });
    }
    if !(overall_level > 0.0 && overall_level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {overall_level}"
        )));
    }
    let tail = (1.0 - overall_level) / (2.0 * k as f64);
    let z = normal_quantile(1.0 - tail)?;
    Ok((0..k)
        .map(|j| {
            let diff = e1.mean[j] - e2.mean[j];
            let se_diff = (e1.variance[j] + e2.variance[j]).sqrt();
            MeanDifferenceCI {
                component: names[j].clone(),
                est_1: e1.mean[j],
                est_2: e2.mean[j],
                diff,
                se_diff,
                lower: diff - z * se_diff,
                upper: diff + z * se_diff,
                adjusted_level: 1.0 - 2.0 * tail,
            }
        })
        .collect())
}

/// Two-sample Hotelling T² on CLR coordinates with the last coordinate
/// dropped, reported as F = (n₁+n₂−p−1)/(p(n₁+n₂−2))·T² on (p, n₁+n₂−p−1)
/// degrees of freedom, p = K − 1.
pub fn clr_hotelling_test(ds: &CompositionDataset) -> Result<TestReport> {
    let k = ds.n_components();
    clr_hotelling_dropping(ds, k - 1)
}

/// As [`clr_hotelling_test`], dropping CLR coordinate `drop` instead.
pub fn clr_hotelling_dropping(ds: &CompositionDataset, drop: usize) -> Result<TestReport> {
    let (g1, g2) = ds.two_groups()?;
    let k = ds.n_components();
    if drop >= k {
        return Err(Error::BadIndex { index: drop, len: k });
    }
    let p = k - 1;
    let (n1, n2) = (g1.observations.len(), g2.observations.len());
    if n1 + n2 < p + 3 {
        return Err(Error::InsufficientData {
            needed: p + 3,
            found: n1 + n2,
        });
    }
    let project = |g: &Group| -> Vec<DVector<f64>> {
        g.observations
            .iter()
            .map(|c| {
                let z = clr(c);
                DVector::from_iterator(
                    p,
                    z.into_iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, v)| v),
                )
            })
            .collect()
    };
    let (y1, y2) = (project(g1), project(g2));
    let mean = |ys: &[DVector<f64>]| ys.iter().fold(DVector::zeros(p), |acc, y| acc + y) / ys.len() as f64;
    let (m1, m2) = (mean(&y1), mean(&y2));
    let mut scatter = DMatrix::<f64>::zeros(p, p);
    for (ys, m) in [(&y1, &m1), (&y2, &m2)] {
        for y in ys.iter() {
            let d = y - m;
            scatter += &d * d.transpose();
        }
    }
    let dof = (n1 + n2 - 2) as f64;
    let pooled = scatter / dof;
    let d = &m1 - &m2;
    let chol = pooled
        .cholesky()
        .ok_or(Error::Singular("pooled CLR covariance"))?;
    let quad = d.dot(&chol.solve(&d));
    let t2 = (n1 * n2) as f64 / (n1 + n2) as f64 * quad;
    let df2 = n1 + n2 - p - 1;
    let statistic = df2 as f64 / (p as f64 * dof) * t2;
    Ok(TestReport {
        method: TestMethod::ClrHotelling,
        statistic,
        df: p,
        df2: Some(df2),
        p_value: f_sf(statistic, p, df2)?,
        h0_fit: Vec::new(),
        h1_fit: Vec::new(),
        subtree_statistics: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::TreeNode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(k: usize) -> Vec<String> {
        ["TQ", "AQ1", "OQ", "AQ2", "E", "F"][..k]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn two_groups(a1: &[f64], a2: &[f64], n: usize, seed: u64) -> CompositionDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d1 = DirichletParams::new(a1.to_vec()).unwrap().sample(n, &mut rng);
        let d2 = DirichletParams::new(a2.to_vec()).unwrap().sample(n, &mut rng);
        CompositionDataset::new(
            names(a1.len()),
            vec![
                Group {
                    label: "A".into(),
                    observations: d1,
                },
                Group {
                    label: "B".into(),
                    observations: d2,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn symmetric_data_gives_zero_uniformity_statistic() {
        // every cyclic shift of a base point: means exactly uniform
        let base = [0.4, 0.3, 0.2, 0.1];
        let obs: Vec<Composition> = (0..4)
            .map(|s| Composition::new((0..4).map(|j| base[(j + s) % 4]).collect()).unwrap())
            .collect();
        let g = Group {
            label: "sym".into(),
            observations: obs,
        };
        let r = one_sample_uniformity_test(&g, &Tolerance::default()).unwrap();
        assert!(r.statistic < 1e-6, "{}", r.statistic);
        assert!(r.p_value > 0.999);
        assert_eq!(r.df, 3);
    }

    #[test]
    fn identical_groups_give_zero_statistic() {
        let ds = two_groups(&[9.0, 6.0, 6.0, 6.0], &[1.0; 4], 12, 3);
        let g = ds.groups()[0].clone();
        let same = CompositionDataset::new(
            ds.component_names().to_vec(),
            vec![
                g.clone(),
                Group {
                    label: "copy".into(),
                    ..g
                },
            ],
        )
        .unwrap();
        let tol = Tolerance::default();
        let r = two_sample_dirichlet_lrt(&same, &tol).unwrap();
        assert!(r.statistic.abs() < 1e-8, "{}", r.statistic);
        assert!(r.p_value > 0.9999);
        let tree = NestingTree::new(TreeNode::internal(vec![
            TreeNode::internal(vec![TreeNode::leaf(0), TreeNode::leaf(3)]),
            TreeNode::internal(vec![TreeNode::leaf(1), TreeNode::leaf(2)]),
        ]))
        .unwrap();
        let r = two_sample_ndd_lrt(&same, &tree, &tol).unwrap();
        assert!(r.statistic.abs() < 1e-8);
        let h = clr_hotelling_test(&same).unwrap();
        assert!(h.statistic.abs() < 1e-12);
        assert!((h.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn common_mean_fit_is_stationary_and_dominated_by_h1() {
        let ds = two_groups(&[9.8, 6.1, 5.4, 5.9], &[12.0, 5.0, 5.0, 5.0], 7, 11);
        let r = two_sample_dirichlet_lrt(&ds, &Tolerance::default()).unwrap();
        assert_eq!(r.df, 3);
        assert!(r.statistic > 0.0);
        let l0: f64 = r.h0_fit.iter().map(|f| f.log_likelihood).sum();
        let l1: f64 = r.h1_fit.iter().map(|f| f.log_likelihood).sum();
        assert!((r.statistic - 2.0 * (l1 - l0)).abs() < 1e-9);
        // both H0 fits share one mean vector
        let m0: Vec<f64> = DirichletParams::new(r.h0_fit[0].alpha.clone()).unwrap().mean();
        let m1: Vec<f64> = DirichletParams::new(r.h0_fit[1].alpha.clone()).unwrap().mean();
        for (a, b) in m0.iter().zip(&m1) {
            assert!((a - b).abs() < 1e-12);
        }
        // gradient at the returned point
        let stats: Vec<SufficientStats> = ds
            .groups()
            .iter()
            .map(|g| SufficientStats::from_observations(&g.observations).unwrap())
            .collect();
        let a = [r.h0_fit[0].alpha.iter().sum(), r.h0_fit[1].alpha.iter().sum()];
        let (grad, _) = common_derivatives(&m0, &a, [&stats[0], &stats[1]]);
        assert!(grad.amax() / 14.0 < 1e-8, "{}", grad.amax());
    }

    #[test]
    fn flat_tree_ndd_lrt_matches_dirichlet_lrt() {
        let ds = two_groups(&[9.0, 6.0, 6.0, 6.0], &[7.0, 7.0, 6.0, 8.0], 10, 21);
        let tol = Tolerance::default();
        let flat = two_sample_ndd_lrt(&ds, &NestingTree::flat(4).unwrap(), &tol).unwrap();
        let direct = two_sample_dirichlet_lrt(&ds, &tol).unwrap();
        assert!((flat.statistic - direct.statistic).abs() < 1e-10);
        assert_eq!(flat.df, direct.df);
        assert_eq!(flat.subtree_statistics.len(), 1);
        assert_eq!(flat.subtree_statistics[0].node, "root");
    }

    #[test]
    fn ndd_lrt_df_counts_subtrees() {
        let ds = two_groups(&[9.0, 6.0, 6.0, 6.0], &[7.0, 7.0, 6.0, 8.0], 10, 22);
        let tree = NestingTree::new(TreeNode::internal(vec![
            TreeNode::internal(vec![TreeNode::leaf(1), TreeNode::leaf(2)]),
            TreeNode::internal(vec![TreeNode::leaf(3), TreeNode::leaf(0)]),
        ]))
        .unwrap();
        let r = two_sample_ndd_lrt(&ds, &tree, &Tolerance::default()).unwrap();
        assert_eq!(r.df, 3);
        assert_eq!(r.subtree_statistics.len(), 3);
        let sum: f64 = r.subtree_statistics.iter().map(|s| s.statistic).sum();
        assert!((sum - r.statistic).abs() < 1e-12);
        assert_eq!(r.subtree_statistics[1].node, "{TQ,AQ2}");
    }

    #[test]
    fn aggregation_of_reference_subtree_statistics() {
        let subs: Vec<SubtreeStatistic> = [2.735, 0.160, 3.182]
            .iter()
            .map(|&s| SubtreeStatistic {
                node: String::new(),
                statistic: s,
                df: 1,
                p_value: chi_square_sf(s, 1).unwrap(),
            })
            .collect();
        let (stat, df, p) = aggregate_subtree_statistics(&subs).unwrap();
        assert!((stat - 6.077).abs() < 1e-12);
        assert_eq!(df, 3);
        assert!((p - 0.108).abs() < 5e-4);
    }

    #[test]
    fn table_mean_difference_intervals() {
        let ad = DirichletParams::from_mean_precision(&[0.301, 0.255, 0.216, 0.228], 41.678).unwrap();
        let wt = DirichletParams::from_mean_precision(&[0.423, 0.194, 0.181, 0.202], 27.025).unwrap();
        let cis = dirichlet_mean_difference_cis(&names(4), [(&ad, 7), (&wt, 7)], 0.95).unwrap();
        let tq = &cis[0];
        assert!((tq.diff - -0.122).abs() < 1e-12);
        assert!((tq.se_diff - 0.044).abs() < 5e-4);
        assert!((tq.lower - -0.231).abs() < 1.5e-3);
        assert!((tq.upper - -0.012).abs() < 1.5e-3);
        assert!((tq.adjusted_level - 0.9875).abs() < 1e-12);
        for c in &cis {
            assert!(c.lower < c.upper);
        }
    }

    #[test]
    fn identical_fits_give_symmetric_intervals() {
        let p = DirichletParams::new(vec![3.0, 4.0, 5.0]).unwrap();
        let cis = dirichlet_mean_difference_cis(&names(3), [(&p, 9), (&p, 9)], 0.9).unwrap();
        for c in cis {
            assert_eq!(c.diff, 0.0);
            assert!((c.lower + c.upper).abs() < 1e-15);
        }
    }

    #[test]
    fn hotelling_is_invariant_to_dropped_coordinate() {
        let ds = two_groups(&[9.0, 6.0, 6.0, 6.0], &[5.0, 7.0, 6.0, 8.0], 8, 4);
        let base = clr_hotelling_test(&ds).unwrap();
        assert_eq!((base.df, base.df2), (3, Some(12)));
        for drop in 0..3 {
            let r = clr_hotelling_dropping(&ds, drop).unwrap();
            assert!((r.statistic - base.statistic).abs() < 1e-8);
        }
    }

    #[test]
    fn hotelling_needs_enough_observations() {
        let ds = two_groups(&[2.0, 2.0, 2.0, 2.0], &[2.0, 2.0, 2.0, 2.0], 2, 1);
        assert!(matches!(
            clr_hotelling_test(&ds),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn verdict_classification() {
        assert_eq!(Verdict::from_rejections(true, true), Verdict::RejectBoth);
        assert_eq!(Verdict::from_rejections(false, false), Verdict::FailBoth);
        assert_eq!(Verdict::from_rejections(true, false), Verdict::RejectOne);
        assert_eq!(Verdict::from_rejections(false, true), Verdict::RejectOne);
    }

    #[test]
    fn skewed_versus_uniform_rejects_one() {
        let ds = two_groups(&[30.0, 10.0, 10.0, 10.0], &[10.0; 4], 100, 8);
        let out = maugard_procedure(&ds, 0.05, &Tolerance::default()).unwrap();
        assert_eq!(out.verdict, Verdict::RejectOne);
    }

    #[test]
    fn clamp_rules() {
        assert_eq!(clamp_statistic(-5e-9).unwrap(), 0.0);
        assert!(clamp_statistic(-1e-6).is_err());
        assert_eq!(clamp_statistic(1.5).unwrap(), 1.5);
    }
}
