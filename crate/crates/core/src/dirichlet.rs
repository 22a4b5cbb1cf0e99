//! The Dirichlet distribution: density, moments, sampling, maximum
//! likelihood and Fisher-information standard errors of the mean vector.
//!
//! The single-sample log-likelihood used throughout is
//!
//! ```text
//! L(π, A) = n lnΓ(A) − n Σ lnΓ(Aπ_j) + n Σ (Aπ_j − 1) mean_log_j
//! ```
//!
//! with α_j = Aπ_j, so it depends on the data only through
//! [`SufficientStats`].

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::composition::{Composition, SufficientStats};
use crate::error::{Error, Result};
use crate::numerics::{inverse_digamma, lgamma, psi, psi1, Tolerance};

/// Floor applied to method-of-moments starting values.
const MIN_START_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::TooFewComponents(alpha.len()));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet shape parameters must be positive and finite, got {a}"
            )));
        }
        Ok(DirichletParams { alpha })
    }

    /// Builds α = A·π from a mean vector and a precision.
    pub fn from_mean_precision(mean: &[f64], precision: f64) -> Result<Self> {
        if !(precision > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "precision must be positive, got {precision}"
            )));
        }
        let sum: f64 = mean.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized { sum });
        }
        Self::new(mean.iter().map(|m| precision * m / sum).collect())
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n_components(&self) -> usize {
        self.alpha.len()
    }

    /// A = Σ α_j.
    pub fn precision(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// π_j = α_j / A.
    pub fn mean(&self) -> Vec<f64> {
        let a = self.precision();
        self.alpha.iter().map(|x| x / a).collect()
    }

    fn check_dim(&self, k: usize) -> Result<()> {
        if k != self.alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len(),
                found: k,
            });
        }
        Ok(())
    }

    /// Log normalizing constant lnΓ(A) − Σ lnΓ(α_j).
    fn log_norm(&self) -> f64 {
        lgamma(self.precision()) - self.alpha.iter().map(|&a| lgamma(a)).sum::<f64>()
    }

    pub fn log_density(&self, c: &Composition) -> Result<f64> {
        self.check_dim(c.len())?;
        Ok(self.log_norm()
            + self
                .alpha
                .iter()
                .zip(c.values())
                .map(|(a, x)| (a - 1.0) * x.ln())
                .sum::<f64>())
    }

    /// Mean vector and covariance matrix.
    pub fn moments(&self) -> (Vec<f64>, DMatrix<f64>) {
        let mean = self.mean();
        let scale = 1.0 / (self.precision() + 1.0);
        let k = mean.len();
        let cov = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                mean[i] * (1.0 - mean[i]) * scale
            } else {
                -mean[i] * mean[j] * scale
            }
        });
        (mean, cov)
    }

    /// Draws `n` compositions by normalizing independent Gamma(α_j, 1) variates.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Composition> {
        let samplers: Vec<LogGamma> = self.alpha.iter().map(|&a| LogGamma::new(a)).collect();
        let mut logs = vec![0.0; self.alpha.len()];
        (0..n)
            .map(|_| {
                for (l, s) in logs.iter_mut().zip(&samplers) {
                    *l = s.sample(rng);
                }
                composition_from_logs(&logs)
            })
            .collect()
    }

    /// Log-likelihood of a sample summarized by `stats`.
    pub fn log_likelihood(&self, stats: &SufficientStats) -> Result<f64> {
        self.check_dim(stats.n_components())?;
        Ok(log_likelihood_alpha(&self.alpha, stats))
    }

    /// Gradient of the log-likelihood with respect to α.
    pub fn gradient(&self, stats: &SufficientStats) -> Result<Vec<f64>> {
        self.check_dim(stats.n_components())?;
        let n = stats.n as f64;
        let psi_a = psi(self.precision());
        Ok(self
            .alpha
            .iter()
            .zip(&stats.mean_log)
            .map(|(&a, &ml)| n * (psi_a - psi(a) + ml))
            .collect())
    }
}

pub(crate) fn log_likelihood_alpha(alpha: &[f64], stats: &SufficientStats) -> f64 {
    let a: f64 = alpha.iter().sum();
    let mut ll = lgamma(a);
    for (&aj, &ml) in alpha.iter().zip(&stats.mean_log) {
        ll += (aj - 1.0) * ml - lgamma(aj);
    }
    stats.n as f64 * ll
}

/// Sampler for ln G with G ~ Gamma(shape, 1). Shapes below one use
/// G = G' · U^(1/shape) with G' ~ Gamma(shape + 1) so tiny draws do not
/// underflow to zero.
pub(crate) struct LogGamma {
    gamma: Gamma<f64>,
    boost: Option<f64>,
}

impl LogGamma {
    pub(crate) fn new(shape: f64) -> Self {
        let (s, boost) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        LogGamma {
            gamma: Gamma::new(s, 1.0).expect("positive shape"),
            boost,
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = self.gamma.sample(rng);
        match self.boost {
            None => g.ln(),
            Some(inv_shape) => {
                let u: f64 = rng.random();
                g.ln() + inv_shape * u.max(f64::MIN_POSITIVE).ln()
            }
        }
    }
}

pub(crate) fn composition_from_logs(logs: &[f64]) -> Composition {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let v: Vec<f64> = logs
        .iter()
        .map(|l| (l - max).exp().max(f64::MIN_POSITIVE))
        .collect();
    Composition::normalized(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: DirichletParams,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each fixed-point update.
    pub trace: Vec<f64>,
}

/// Maximum-likelihood fit to a single sample.
pub fn mle(observations: &[Composition], tol: &Tolerance) -> Result<FitResult> {
    mle_from_stats(&SufficientStats::from_observations(observations)?, tol)
}

/// Method-of-moments starting point: A from the averaged variance
/// identity Var[X_j] = π_j(1 − π_j)/(A + 1), floored at `MIN_START_ALPHA`.
pub fn moment_start(stats: &SufficientStats) -> Result<Vec<f64>> {
    let k = stats.n_components();
    let mut precision_sum = 0.0;
    for j in 0..k {
        let m = stats.mean[j];
        let var = stats.second_moment[j] - m * m;
        if !(var > 1e-14 * m * m) {
            return Err(Error::DegenerateData(format!(
                "component {j} is constant across observations"
            )));
        }
        precision_sum += m * (1.0 - m) / var - 1.0;
    }
    let precision = (precision_sum / k as f64).max(MIN_START_ALPHA * k as f64);
    Ok(stats
        .mean
        .iter()
        .map(|m| (m * precision).max(MIN_START_ALPHA))
        .collect())
}

/// Maximum likelihood by Minka's fixed-point iteration
/// Ψ(α_j') = Ψ(Σα) + mean_log_j, started from method of moments.
///
/// The fixed point contracts slowly when the precision is large, so each
/// iteration first tries a Newton step in α (the Hessian is diagonal plus
/// rank one, so the step costs O(K)); the step is halved until it stays
/// positive and does not lower the likelihood, and otherwise the plain
/// fixed-point update is used.
pub fn mle_from_stats(stats: &SufficientStats, tol: &Tolerance) -> Result<FitResult> {
    if stats.n < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: stats.n,
        });
    }
    let start = moment_start(stats)?;
    fixed_point(stats, start, tol)
}

const NEWTON_HALVINGS: usize = 8;

/// Newton step in α on the per-observation log-likelihood, or `None` if no
/// damped step keeps α positive without decreasing the likelihood.
fn newton_step(alpha: &[f64], grad: &[f64], stats: &SufficientStats, ll: f64) -> Option<(Vec<f64>, f64, bool)> {
    let a: f64 = alpha.iter().sum();
    let z = psi1(a);
    let q: Vec<f64> = alpha.iter().map(|&x| -psi1(x)).collect();
    let b = grad.iter().zip(&q).map(|(g, q)| g / q).sum::<f64>()
        / (1.0 / z + q.iter().map(|q| 1.0 / q).sum::<f64>());
    let step: Vec<f64> = grad.iter().zip(&q).map(|(g, q)| (g - b) / q).collect();
    let slack = 1e-12 * ll.abs().max(1.0);
    let mut t = 1.0;
    for _ in 0..NEWTON_HALVINGS {
        let next: Vec<f64> = alpha.iter().zip(&step).map(|(x, s)| x - t * s).collect();
        if next.iter().all(|x| x.is_finite() && *x > 0.0) {
            let l = log_likelihood_alpha(&next, stats);
            if l >= ll - slack {
                return Some((next, l, t == 1.0));
            }
        }
        t *= 0.5;
    }
    None
}

fn per_observation_gradient(alpha: &[f64], stats: &SufficientStats) -> Vec<f64> {
    let psi_a = psi(alpha.iter().sum());
    alpha
        .iter()
        .zip(&stats.mean_log)
        .map(|(&a, &ml)| psi_a - psi(a) + ml)
        .collect()
}

fn fixed_point(stats: &SufficientStats, mut alpha: Vec<f64>, tol: &Tolerance) -> Result<FitResult> {
    let mut trace = Vec::new();
    let mut ll = log_likelihood_alpha(&alpha, stats);
    let mut grad = per_observation_gradient(&alpha, stats);
    for it in 1..=tol.max_iter {
        let mut change: f64 = f64::INFINITY;
        match newton_step(&alpha, &grad, stats, ll) {
            Some((next, l, full)) => {
                if full {
                    change = next
                        .iter()
                        .zip(&alpha)
                        .map(|(n, a)| ((n - a) / a).abs())
                        .fold(0.0, f64::max);
                }
                alpha = next;
                ll = l;
            }
            None => {
                let psi_a = psi(alpha.iter().sum());
                for (a, &ml) in alpha.iter_mut().zip(&stats.mean_log) {
                    *a = inverse_digamma(psi_a + ml);
                }
                if alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) {
                    return Err(Error::DegenerateData(
                        "Dirichlet fit diverged; data may be too concentrated".into(),
                    ));
                }
                ll = log_likelihood_alpha(&alpha, stats);
            }
        }
        trace.push(ll);
        grad = per_observation_gradient(&alpha, stats);
        let grad_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if grad_norm < tol.abs_tol || change < tol.rel_tol {
            return Ok(FitResult {
                params: DirichletParams { alpha },
                log_likelihood: ll,
                iterations: it,
                converged: true,
                trace,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "Dirichlet fixed-point iteration",
        iterations: tol.max_iter,
    })
}

/// Expected information for one sample of size `n`, parameterized by
/// (π_1, …, π_{K−1}, A) with π_K = 1 − Σ π_j.
pub fn fisher_information(params: &DirichletParams, n: usize) -> Result<DMatrix<f64>> {
    if n < 1 {
        return Err(Error::InsufficientData { needed: 1, found: 0 });
    }
    let pi = params.mean();
    let a = params.precision();
    let k = pi.len();
    let n = n as f64;
    let last = k - 1;
    let t: Vec<f64> = pi.iter().map(|p| psi1(a * p)).collect();
    let mut info = DMatrix::<f64>::zeros(k, k);
    for j in 0..last {
        for l in 0..last {
            info[(j, l)] = n * a * a * t[last];
        }
        info[(j, j)] += n * a * a * t[j];
        let cross = n * a * (pi[j] * t[j] - pi[last] * t[last]);
        info[(j, last)] = cross;
        info[(last, j)] = cross;
    }
    info[(last, last)] = n * (pi.iter().zip(&t).map(|(p, tj)| p * p * tj).sum::<f64>() - psi1(a));
    Ok(info)
}

/// Asymptotic covariance of the full estimated mean vector (π̂_1, …, π̂_K).
pub fn mean_covariance(params: &DirichletParams, n: usize) -> Result<DMatrix<f64>> {
    let info = fisher_information(params, n)?;
    let inv = info
        .cholesky()
        .ok_or(Error::Singular("Dirichlet Fisher information"))?
        .inverse();
    let k = params.n_components();
    let last = k - 1;
    let mut cov = DMatrix::<f64>::zeros(k, k);
    for j in 0..last {
        for l in 0..last {
            cov[(j, l)] = inv[(j, l)];
        }
    }
    // π̂_K = 1 − Σ π̂_j
    let mut total = 0.0;
    for j in 0..last {
        let row: f64 = (0..last).map(|l| inv[(j, l)]).sum();
        cov[(j, last)] = -row;
        cov[(last, j)] = -row;
        total += row;
    }
    cov[(last, last)] = total;
    Ok(cov)
}

/// Asymptotic variances of π̂_1, …, π̂_K.
pub fn mean_variances(params: &DirichletParams, n: usize) -> Result<Vec<f64>> {
    let cov = mean_covariance(params, n)?;
    Ok((0..params.n_components()).map(|j| cov[(j, j)]).collect())
}

pub fn mean_standard_errors(params: &DirichletParams, n: usize) -> Result<Vec<f64>> {
    Ok(mean_variances(params, n)?
        .into_iter()
        .map(f64::sqrt)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn comp(v: &[f64]) -> Composition {
        Composition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn log_density_examples() {
        let flat = DirichletParams::new(vec![1.0; 3]).unwrap();
        let third = 1.0 / 3.0;
        let ld = flat.log_density(&comp(&[third, third, third])).unwrap();
        assert!((ld - 2f64.ln()).abs() < 1e-12);

        let beta = DirichletParams::new(vec![2.0, 2.0]).unwrap();
        assert!((beta.log_density(&comp(&[0.5, 0.5])).unwrap() - 1.5f64.ln()).abs() < 1e-12);

        // 50-digit reference value.
        let p = DirichletParams::new(vec![9.8, 6.1, 5.4, 5.9]).unwrap();
        let ld = p.log_density(&comp(&[0.42, 0.35, 0.15, 0.08])).unwrap();
        assert!(((ld - 2.478_299_161_743_852_5) / 2.478_299_161_743_852_5).abs() < 1e-10);

        assert!(matches!(
            p.log_density(&comp(&[0.5, 0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn moments_examples() {
        let (mean, cov) = DirichletParams::new(vec![1.0; 4]).unwrap().moments();
        assert!(mean.iter().all(|m| (m - 0.25).abs() < 1e-15));
        assert!((cov[(0, 0)] - 0.0375).abs() < 1e-15);
        assert!((cov[(0, 1)] + 0.0125).abs() < 1e-15);

        let p = DirichletParams::new(vec![9.8, 6.1, 5.4, 5.9]).unwrap();
        let (mean, cov) = p.moments();
        for (m, w) in mean.iter().zip([0.3603, 0.2243, 0.1985, 0.2169]) {
            assert!((m - w).abs() < 5e-5);
        }
        for i in 0..4 {
            assert!(cov.row(i).sum().abs() < 1e-15);
            for j in 0..4 {
                if i != j {
                    assert!(cov[(i, j)] <= 0.0);
                }
            }
        }
    }

    #[test]
    fn invalid_params() {
        assert!(DirichletParams::new(vec![1.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(DirichletParams::from_mean_precision(&[0.5, 0.5], -1.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_positive() {
        let p = DirichletParams::new(vec![0.05, 0.3, 2.0]).unwrap();
        let a = p.sample(200, &mut ChaCha8Rng::seed_from_u64(7));
        let b = p.sample(200, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert!(a.iter().all(|c| c.values().iter().all(|&v| v > 0.0)));
    }

    #[test]
    fn mle_needs_two_observations_and_variation() {
        let tol = Tolerance::default();
        assert!(matches!(
            mle(&[comp(&[0.3, 0.7])], &tol),
            Err(Error::InsufficientData { .. })
        ));
        let c = comp(&[0.3, 0.3, 0.4]);
        assert!(matches!(
            mle(&[c.clone(), c.clone(), c], &tol),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn mle_reports_non_convergence() {
        let p = DirichletParams::new(vec![3.0, 5.0, 2.0]).unwrap();
        let data = p.sample(50, &mut ChaCha8Rng::seed_from_u64(3));
        let tight = Tolerance::new(1e-300, 1e-300, 2).unwrap();
        assert!(matches!(
            mle(&data, &tight),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn fixed_point_is_monotone() {
        let p = DirichletParams::new(vec![9.8, 6.1, 5.4, 5.9]).unwrap();
        for seed in 0..20 {
            let data = p.sample(7, &mut ChaCha8Rng::seed_from_u64(seed));
            let fit = mle(&data, &Tolerance::default()).unwrap();
            for w in fit.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn fit_gradient_is_small() {
        let p = DirichletParams::new(vec![2.0, 0.7, 4.0]).unwrap();
        let data = p.sample(500, &mut ChaCha8Rng::seed_from_u64(11));
        let stats = SufficientStats::from_observations(&data).unwrap();
        let fit = mle_from_stats(&stats, &Tolerance::default()).unwrap();
        let g = fit.params.gradient(&stats).unwrap();
        let per_obs = g.iter().map(|v| v.abs() / 500.0).fold(0.0, f64::max);
        assert!(per_obs < 1e-8, "gradient {per_obs}");
    }

    #[test]
    fn symmetric_params_give_equal_standard_errors() {
        let p = DirichletParams::new(vec![5.0; 4]).unwrap();
        let se = mean_standard_errors(&p, 10).unwrap();
        for s in &se {
            assert!((s - se[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn maze_table_standard_errors() {
        let ad = DirichletParams::from_mean_precision(&[0.301, 0.255, 0.216, 0.228], 41.678)
            .unwrap();
        let wt = DirichletParams::from_mean_precision(&[0.423, 0.194, 0.181, 0.202], 27.025)
            .unwrap();
        let se_ad = mean_standard_errors(&ad, 7).unwrap();
        let se_wt = mean_standard_errors(&wt, 7).unwrap();
        for (s, w) in se_ad.iter().zip([0.026, 0.025, 0.023, 0.024]) {
            assert!((s - w).abs() <= 0.001, "AD {s} vs {w}");
        }
        for (s, w) in se_wt.iter().zip([0.035, 0.028, 0.027, 0.028]) {
            assert!((s - w).abs() <= 0.001, "WT {s} vs {w}");
        }
    }
}
