//! Compositions, labeled datasets, log-ratio transforms, correlation and
//! ternary-plot geometry.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum |sum − 1| accepted (and renormalized away) by [`Composition::new`].
pub const SUM_TOLERANCE: f64 = 1e-6;

/// One observation on the simplex: strictly positive parts summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    values: Vec<f64>,
}

impl Composition {
    /// Validates raw proportions. Zeros are rejected, never imputed.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::TooFewComponents(raw.len()));
        }
        for (index, &value) in raw.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::ZeroComponent { index, value });
            }
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self::normalized(raw))
    }

    /// Rescales strictly positive parts to unit sum. Caller guarantees positivity.
    pub(crate) fn normalized(mut values: Vec<f64>) -> Self {
        let sum: f64 = values.iter().sum();
        if sum != 1.0 {
            values.iter_mut().for_each(|v| *v /= sum);
        }
        Composition { values }
    }

    /// Additive replacement of zeros by `eps` followed by closure.
    ///
    /// Only used when the caller opts in; the sum check is applied to the
    /// raw values before replacement.
    pub fn with_zero_replacement(raw: Vec<f64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "zero replacement must lie in (0, 1), got {eps}"
            )));
        }
        if raw.len() < 2 {
            return Err(Error::TooFewComponents(raw.len()));
        }
        for (index, &value) in raw.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::ZeroComponent { index, value });
            }
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        let replaced = raw
            .into_iter()
            .map(|v| if v == 0.0 { eps } else { v })
            .collect();
        Ok(Self::normalized(replaced))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Shorthand for [`Composition::new`].
pub fn validate(raw: Vec<f64>) -> Result<Composition> {
    Composition::new(raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    pub observations: Vec<Composition>,
}

/// Labeled collection of compositions sharing one set of components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionDataset {
    component_names: Vec<String>,
    groups: Vec<Group>,
}

impl CompositionDataset {
    pub fn new(component_names: Vec<String>, groups: Vec<Group>) -> Result<Self> {
        let k = component_names.len();
        if k < 2 {
            return Err(Error::TooFewComponents(k));
        }
        if groups.is_empty() {
            return Err(Error::InvalidDataset("no groups".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.observations.is_empty() {
                return Err(Error::EmptyGroup(g.label.clone()));
            }
            if groups[..i].iter().any(|h| h.label == g.label) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate group label `{}`",
                    g.label
                )));
            }
            if let Some(c) = g.observations.iter().find(|c| c.len() != k) {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: c.len(),
                });
            }
        }
        Ok(CompositionDataset {
            component_names,
            groups,
        })
    }

    /// Single-group dataset with a generic label.
    pub fn single(component_names: Vec<String>, observations: Vec<Composition>) -> Result<Self> {
        Self::new(
            component_names,
            vec![Group {
                label: "all".into(),
                observations,
            }],
        )
    }

    pub fn component_names(&self) -> &[String] {
        &self.component_names
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn n_components(&self) -> usize {
        self.component_names.len()
    }

    pub fn total_observations(&self) -> usize {
        self.groups.iter().map(|g| g.observations.len()).sum()
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.component_names.iter().position(|n| n == name)
    }

    /// Every observation, groups concatenated in order.
    pub fn pooled(&self) -> Vec<Composition> {
        self.groups
            .iter()
            .flat_map(|g| g.observations.iter().cloned())
            .collect()
    }

    /// The two groups of a two-group dataset.
    pub fn two_groups(&self) -> Result<(&Group, &Group)> {
        match self.groups.as_slice() {
            [a, b] => Ok((a, b)),
            _ => Err(Error::InvalidDataset(format!(
                "expected exactly two groups, found {}",
                self.groups.len()
            ))),
        }
    }
}

/// Sample size and mean log-proportions of one sample, plus the first two
/// raw moments used for method-of-moments starting values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub n: usize,
    pub mean_log: Vec<f64>,
    pub mean: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl SufficientStats {
    pub fn from_observations(obs: &[Composition]) -> Result<Self> {
        let first = obs.first().ok_or(Error::InsufficientData {
            needed: 1,
            found: 0,
        })?;
        let k = first.len();
        let mut mean_log = vec![0.0; k];
        let mut mean = vec![0.0; k];
        let mut second_moment = vec![0.0; k];
        for c in obs {
            if c.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: c.len(),
                });
            }
            for (j, &x) in c.values().iter().enumerate() {
                mean_log[j] += x.ln();
                mean[j] += x;
                second_moment[j] += x * x;
            }
        }
        let n = obs.len() as f64;
        for j in 0..k {
            mean_log[j] /= n;
            mean[j] /= n;
            second_moment[j] /= n;
        }
        Ok(SufficientStats {
            n: obs.len(),
            mean_log,
            mean,
            second_moment,
        })
    }

    pub fn n_components(&self) -> usize {
        self.mean_log.len()
    }
}

/// Centered log-ratio transform.
pub fn clr(c: &Composition) -> Vec<f64> {
    let logs: Vec<f64> = c.values().iter().map(|x| x.ln()).collect();
    let centre = logs.iter().sum::<f64>() / logs.len() as f64;
    logs.into_iter().map(|l| l - centre).collect()
}

/// Inverse of [`clr`]: softmax back onto the simplex.
pub fn inverse_clr(z: &[f64]) -> Result<Composition> {
    if z.len() < 2 {
        return Err(Error::TooFewComponents(z.len()));
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    if exps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter(
            "log-ratio vector too spread to invert".into(),
        ));
    }
    Ok(Composition::normalized(exps))
}

/// Additive log-ratio transform against the component at `reference` (0-based).
pub fn alr(c: &Composition, reference: usize) -> Result<Vec<f64>> {
    let v = c.values();
    if reference >= v.len() {
        return Err(Error::BadIndex {
            index: reference,
            len: v.len(),
        });
    }
    let denom = v[reference].ln();
    Ok(v.iter()
        .enumerate()
        .filter(|&(j, _)| j != reference)
        .map(|(_, x)| x.ln() - denom)
        .collect())
}

/// Pearson correlation matrix of raw proportions.
///
/// With `pooled = true` all observations are treated as one sample. With
/// `pooled = false` each group is centred at its own mean first, giving the
/// pooled within-group correlation.
pub fn sample_correlation(ds: &CompositionDataset, pooled: bool) -> Result<DMatrix<f64>> {
    let k = ds.n_components();
    let n = ds.total_observations();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, found: n });
    }
    let mut centred: Vec<Vec<f64>> = Vec::with_capacity(n);
    if pooled {
        let all = ds.pooled();
        centred.extend(centre_rows(&all, k));
    } else {
        for g in ds.groups() {
            centred.extend(centre_rows(&g.observations, k));
        }
    }
    correlation_from_centred(&centred, k)
}

/// Pearson correlation of a plain list of compositions.
pub fn correlation_of(obs: &[Composition]) -> Result<DMatrix<f64>> {
    let k = obs.first().map(|c| c.len()).unwrap_or(0);
    if obs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: obs.len(),
        });
    }
    correlation_from_centred(&centre_rows(obs, k), k)
}

fn centre_rows(obs: &[Composition], k: usize) -> Vec<Vec<f64>> {
    let n = obs.len() as f64;
    let mut mean = vec![0.0; k];
    for c in obs {
        for (m, x) in mean.iter_mut().zip(c.values()) {
            *m += x / n;
        }
    }
    obs.iter()
        .map(|c| c.values().iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect()
}

fn correlation_from_centred(rows: &[Vec<f64>], k: usize) -> Result<DMatrix<f64>> {
    let mut cov = DMatrix::<f64>::zeros(k, k);
    for r in rows {
        for i in 0..k {
            for j in i..k {
                cov[(i, j)] += r[i] * r[j];
            }
        }
    }
    let sd: Vec<f64> = (0..k).map(|i| cov[(i, i)].sqrt()).collect();
    if let Some(i) = sd.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateData(format!(
            "component {i} has zero variance; correlation undefined"
        )));
    }
    let mut corr = DMatrix::<f64>::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let r = (cov[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0);
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    Ok(corr)
}

/// One observation placed in a ternary diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TernaryPoint {
    pub group: String,
    /// (axis 1, axis 2, remainder) proportions.
    pub sub_composition: [f64; 3],
    /// Planar position; axis 1 at (0, 0), axis 2 at (1, 0), remainder at (1/2, √3/2).
    pub xy: [f64; 2],
}

pub const TERNARY_VERTICES: [[f64; 3]; 2] = [[0.0, 1.0, 0.5], [0.0, 0.0, 0.866_025_403_784_438_6]];

/// Collapses each observation to (axis 1, axis 2, everything else) and maps
/// it to barycentric planar coordinates.
pub fn ternary_coordinates(
    ds: &CompositionDataset,
    axes: (usize, usize),
) -> Result<Vec<TernaryPoint>> {
    let k = ds.n_components();
    if k < 3 {
        return Err(Error::TooFewComponents(k));
    }
    let (a, b) = axes;
    for idx in [a, b] {
        if idx >= k {
            return Err(Error::BadIndex { index: idx, len: k });
        }
    }
    if a == b {
        return Err(Error::InvalidParameter(
            "ternary axes must be two distinct components".into(),
        ));
    }
    let mut out = Vec::with_capacity(ds.total_observations());
    for g in ds.groups() {
        for c in &g.observations {
            let v = c.values();
            let sub = [v[a], v[b], 1.0 - v[a] - v[b]];
            let xy = [
                sub[1] * TERNARY_VERTICES[0][1] + sub[2] * TERNARY_VERTICES[0][2],
                sub[2] * TERNARY_VERTICES[1][2],
            ];
            out.push(TernaryPoint {
                group: g.label.clone(),
                sub_composition: sub,
                xy,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(v: &[f64]) -> Composition {
        Composition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validate_accepts_and_renormalizes() {
        let c = comp(&[0.42, 0.35, 0.15, 0.08]);
        assert_eq!(c.values().iter().sum::<f64>(), 1.0);
        let u = comp(&[0.25; 4]);
        assert_eq!(u.values(), &[0.25; 4]);
        let nearly = comp(&[0.5, 0.5 + 5e-7]);
        assert!((nearly.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_bad_input() {
        assert!(matches!(
            Composition::new(vec![0.5, 0.5, 0.2]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            Composition::new(vec![0.5, 0.5, 0.0]),
            Err(Error::ZeroComponent { index: 2, .. })
        ));
        assert!(matches!(
            Composition::new(vec![1.0]),
            Err(Error::TooFewComponents(1))
        ));
    }

    #[test]
    fn zero_replacement_is_opt_in() {
        let c = Composition::with_zero_replacement(vec![0.5, 0.5, 0.0], 1e-3).unwrap();
        assert!(c.values().iter().all(|&v| v > 0.0));
        assert!((c.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clr_examples() {
        assert!(clr(&comp(&[0.25; 4])).iter().all(|v| v.abs() < 1e-15));
        assert!(clr(&comp(&[0.5, 0.5])).iter().all(|v| v.abs() < 1e-15));
        let z = clr(&comp(&[0.42, 0.35, 0.15, 0.08]));
        let want = [0.7175, 0.5352, -0.3121, -0.9407];
        for (a, b) in z.iter().zip(want) {
            assert!((a - b).abs() < 5e-5);
        }
        assert!(z.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn alr_examples() {
        assert!(alr(&comp(&[0.25; 4]), 3)
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-15));
        let z = alr(&comp(&[0.5, 0.25, 0.25]), 2).unwrap();
        assert!((z[0] - 2f64.ln()).abs() < 1e-15 && z[1].abs() < 1e-15);
        let z = alr(&comp(&[0.42, 0.35, 0.15, 0.08]), 3).unwrap();
        for (a, b) in z.iter().zip([1.6582, 1.4759, 0.6286]) {
            assert!((a - b).abs() < 5e-5);
        }
        assert!(matches!(
            alr(&comp(&[0.5, 0.5]), 2),
            Err(Error::BadIndex { .. })
        ));
    }

    #[test]
    fn correlation_of_two_part_compositions_is_minus_one() {
        let names = vec!["a".to_string(), "b".to_string()];
        let ds = CompositionDataset::single(
            names,
            vec![comp(&[0.2, 0.8]), comp(&[0.6, 0.4]), comp(&[0.3, 0.7])],
        )
        .unwrap();
        let r = sample_correlation(&ds, true).unwrap();
        assert!((r[(0, 1)] + 1.0).abs() < 1e-12);
        assert_eq!(r[(0, 0)], 1.0);
    }

    #[test]
    fn correlation_of_constant_rows_is_an_error() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let c = comp(&[0.2, 0.3, 0.5]);
        let ds = CompositionDataset::single(names, vec![c.clone(), c.clone(), c]).unwrap();
        assert!(matches!(
            sample_correlation(&ds, true),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn correlation_needs_three_rows() {
        let names = vec!["a".to_string(), "b".to_string()];
        let ds =
            CompositionDataset::single(names, vec![comp(&[0.2, 0.8]), comp(&[0.6, 0.4])]).unwrap();
        assert!(matches!(
            sample_correlation(&ds, true),
            Err(Error::InsufficientData { .. })
        ));
    }

    fn maze(rows: &[&[f64]]) -> CompositionDataset {
        let names = ["TQ", "AQ1", "OQ", "AQ2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        CompositionDataset::single(names, rows.iter().map(|r| comp(r)).collect()).unwrap()
    }

    #[test]
    fn ternary_remainders() {
        let ds = maze(&[&[0.42, 0.35, 0.15, 0.08], &[0.21, 0.22, 0.24, 0.33]]);
        let pts = ternary_coordinates(&ds, (0, 1)).unwrap();
        let s = pts[0].sub_composition;
        assert!((s[0] - 0.42).abs() < 1e-12 && (s[1] - 0.35).abs() < 1e-12);
        assert!((s[2] - 0.23).abs() < 1e-12);
        assert!((pts[1].sub_composition[2] - 0.57).abs() < 1e-12);
        assert!(ternary_coordinates(&ds, (0, 4)).is_err());
        assert!(ternary_coordinates(&ds, (1, 1)).is_err());
    }

    #[test]
    fn uniform_three_part_lands_on_centroid() {
        let names = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let third = 1.0 / 3.0;
        let ds = CompositionDataset::single(names, vec![comp(&[third, third, third])]).unwrap();
        let p = ternary_coordinates(&ds, (0, 1)).unwrap()[0].xy;
        let centroid = [0.5, TERNARY_VERTICES[1][2] / 3.0];
        assert!((p[0] - centroid[0]).abs() < 1e-12 && (p[1] - centroid[1]).abs() < 1e-12);
    }

    #[test]
    fn dataset_invariants() {
        let names: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let g = |l: &str| Group {
            label: l.into(),
            observations: vec![comp(&[0.5, 0.5])],
        };
        assert!(CompositionDataset::new(names.clone(), vec![g("x"), g("x")]).is_err());
        assert!(CompositionDataset::new(names.clone(), vec![]).is_err());
        assert!(CompositionDataset::new(
            names.clone(),
            vec![Group {
                label: "e".into(),
                observations: vec![]
            }]
        )
        .is_err());
        assert!(CompositionDataset::new(
            names,
            vec![Group {
                label: "w".into(),
                observations: vec![comp(&[0.2, 0.3, 0.5])]
            }]
        )
        .is_err());
    }
}
