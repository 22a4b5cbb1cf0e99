//! Exhaustive search over nesting trees: enumeration, removal of trees whose
//! implied correlation signs contradict the data, and selection by
//! maximized log-likelihood.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::Composition;
use crate::error::{Error, Result};
use crate::nested::{self, NddFit, NestingTree, TreeNode};
use crate::numerics::Tolerance;

pub const MAX_ENUMERATION_COMPONENTS: usize = 8;

/// A leaf pair under one internal node whose correlations with an outside
/// leaf disagree in sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignViolation {
    /// Internal node id (canonical pre-order).
    pub node: usize,
    pub node_leaves: Vec<usize>,
    pub u: usize,
    pub v: usize,
    pub outside: usize,
    pub corr_outside_u: f64,
    pub corr_outside_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeCandidate {
    pub tree: NestingTree,
    pub filtered: Option<SignViolation>,
}

impl TreeCandidate {
    pub fn new(tree: NestingTree) -> Self {
        TreeCandidate {
            tree,
            filtered: None,
        }
    }
}

/// Every rooted tree on components 0..k whose internal nodes have at least
/// two children, the flat tree included, each exactly once in canonical
/// form. Counts for k = 2..8: 1, 4, 26, 236, 2752, 39208, 660032.
pub fn enumerate_trees(k: usize) -> Result<Vec<TreeCandidate>> {
    if !(2..=MAX_ENUMERATION_COMPONENTS).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "tree enumeration supports 2 to {MAX_ENUMERATION_COMPONENTS} components, got {k}"
        )));
    }
    let mut memo = HashMap::new();
    let full = (1u32 << k) - 1;
    subtrees(full, &mut memo)
        .iter()
        .map(|root| NestingTree::new(root.clone()).map(TreeCandidate::new))
        .collect()
}

/// All trees on the leaf set `mask`; a singleton is a bare leaf.
fn subtrees(mask: u32, memo: &mut HashMap<u32, Vec<TreeNode>>) -> Vec<TreeNode> {
    if mask.count_ones() == 1 {
        return vec![TreeNode::leaf(mask.trailing_zeros() as usize)];
    }
    if let Some(found) = memo.get(&mask) {
        return found.clone();
    }
    let mut out = Vec::new();
    for blocks in set_partitions(mask) {
        if blocks.len() < 2 {
            continue;
        }
        // Cartesian product over the blocks' subtree choices
        let mut combos: Vec<Vec<TreeNode>> = vec![Vec::new()];
        for &b in &blocks {
            let options = subtrees(b, memo);
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |t| {
                        let mut next = prefix.clone();
                        next.push(t.clone());
                        next
                    })
                })
                .collect();
        }
        out.extend(combos.into_iter().map(TreeNode::internal));
    }
    memo.insert(mask, out.clone());
    out
}

/// Set partitions of the bits of `mask`, blocks ordered by lowest bit; the
/// all-singletons partition comes first.
fn set_partitions(mask: u32) -> Vec<Vec<u32>> {
    let bits: Vec<u32> = (0..32).filter(|b| mask & (1 << b) != 0).collect();
    let mut out = Vec::new();
    let mut blocks: Vec<u32> = Vec::new();
    fn rec(bits: &[u32], blocks: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        match bits.split_first() {
            None => out.push(blocks.clone()),
            Some((&b, rest)) => {
                blocks.push(1 << b);
                rec(rest, blocks, out);
                blocks.pop();
                for i in 0..blocks.len() {
                    blocks[i] |= 1 << b;
                    rec(rest, blocks, out);
                    blocks[i] &= !(1 << b);
                }
            }
        }
    }
    rec(&bits, &mut blocks, &mut out);
    out
}

/// First sign conflict of `tree` under correlation matrix `corr`, if any.
/// Zero correlations are compatible with either sign.
pub fn sign_violation(tree: &NestingTree, corr: &DMatrix<f64>) -> Option<SignViolation> {
    let k = tree.n_components();
    for node in tree.internal_nodes().into_iter().skip(1) {
        let inside = &node.leaves;
        for (a, &u) in inside.iter().enumerate() {
            for &v in &inside[a + 1..] {
                for w in (0..k).filter(|w| !inside.contains(w)) {
                    let (cu, cv) = (corr[(w, u)], corr[(w, v)]);
                    if cu * cv < 0.0 {
                        return Some(SignViolation {
                            node: node.id,
                            node_leaves: inside.clone(),
                            u,
                            v,
                            outside: w,
                            corr_outside_u: cu,
                            corr_outside_v: cv,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Marks every candidate whose nesting contradicts the sign pattern of
/// `corr`, recording the witness.
pub fn filter_impossible(candidates: Vec<TreeCandidate>, corr: &DMatrix<f64>) -> Result<Vec<TreeCandidate>> {
    if let Some(c) = candidates.first() {
        let k = c.tree.n_components();
        if corr.nrows() != k || corr.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: corr.nrows(),
            });
        }
    }
    Ok(candidates
        .into_iter()
        .map(|mut c| {
            c.filtered = sign_violation(&c.tree, corr);
            c
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriterion {
    #[default]
    LogLikelihood,
    Aic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTree {
    pub tree: NestingTree,
    pub log_likelihood: f64,
    pub n_parameters: usize,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedFit {
    pub tree: NestingTree,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSelection {
    pub best: NddFit,
    pub criterion: SelectionCriterion,
    /// Best first. Ties keep candidate order.
    pub ranking: Vec<RankedTree>,
    pub failures: Vec<FailedFit>,
}

/// Fits every unfiltered candidate and ranks by log-likelihood of the
/// compositions (or by AIC). Candidates are fitted in parallel; the result
/// does not depend on scheduling.
pub fn select_tree(
    observations: &[Composition],
    candidates: &[TreeCandidate],
    criterion: SelectionCriterion,
    tol: &Tolerance,
) -> Result<TreeSelection> {
    let surviving: Vec<&TreeCandidate> = candidates.iter().filter(|c| c.filtered.is_none()).collect();
    if surviving.is_empty() {
        return Err(Error::InvalidParameter("no candidate trees survive filtering".into()));
    }
    let fits: Vec<Result<NddFit>> = surviving
        .par_iter()
        .map(|c| nested::mle(&c.tree, observations, tol))
        .collect();

    let mut ranked: Vec<(RankedTree, NddFit)> = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (c, fit) in surviving.iter().zip(fits) {
        match fit {
            Ok(fit) => {
                let p = c.tree.n_parameters();
                ranked.push((
                    RankedTree {
                        tree: c.tree.clone(),
                        log_likelihood: fit.log_likelihood,
                        n_parameters: p,
                        aic: 2.0 * p as f64 - 2.0 * fit.log_likelihood,
                    },
                    fit,
                ));
            }
            Err(e) => {
                failures.push(FailedFit {
                    tree: c.tree.clone(),
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if ranked.is_empty() {
        return Err(first_error.expect("at least one candidate was fitted"));
    }
    // stable sort keeps candidate order among ties
    match criterion {
        SelectionCriterion::LogLikelihood => {
            ranked.sort_by(|a, b| b.0.log_likelihood.total_cmp(&a.0.log_likelihood))
        }
        SelectionCriterion::Aic => ranked.sort_by(|a, b| a.0.aic.total_cmp(&b.0.aic)),
    }
    let mut iter = ranked.into_iter();
    let (top, best) = iter.next().unwrap();
    let mut ranking = vec![top];
    ranking.extend(iter.map(|(r, _)| r));
    Ok(TreeSelection {
        best,
        criterion,
        ranking,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::NddParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    // Components ordered (TQ, AQ1, OQ, AQ2).
    fn observed_correlations() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.00, -0.66, -0.51, -0.32, //
                -0.66, 1.00, 0.15, -0.25, //
                -0.51, 0.15, 1.00, -0.27, //
                -0.32, -0.25, -0.27, 1.00,
            ],
        )
    }

    fn cherry_pair(a: usize, b: usize, rest: &[usize]) -> NestingTree {
        let mut children = vec![TreeNode::internal(vec![TreeNode::leaf(a), TreeNode::leaf(b)])];
        children.extend(rest.iter().map(|&c| TreeNode::leaf(c)));
        NestingTree::new(TreeNode::internal(children)).unwrap()
    }

    #[test]
    fn enumeration_counts() {
        let counts: Vec<usize> = (2..=6).map(|k| enumerate_trees(k).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 4, 26, 236, 2752]);
        assert!(enumerate_trees(1).is_err());
        assert!(enumerate_trees(9).is_err());
    }

    #[test]
    fn enumeration_has_no_duplicates_and_includes_flat() {
        let trees = enumerate_trees(5).unwrap();
        let keys: HashSet<String> = trees.iter().map(|c| format!("{:?}", c.tree)).collect();
        assert_eq!(keys.len(), trees.len());
        assert!(trees.iter().any(|c| c.tree.is_flat()));
        assert!(trees[0].tree.is_flat());
    }

    #[test]
    fn maze_tree_passes_sign_filter() {
        let tree = NestingTree::new(TreeNode::internal(vec![
            TreeNode::internal(vec![TreeNode::leaf(1), TreeNode::leaf(2)]),
            TreeNode::internal(vec![TreeNode::leaf(3), TreeNode::leaf(0)]),
        ]))
        .unwrap();
        assert!(sign_violation(&tree, &observed_correlations()).is_none());
    }

    #[test]
    fn tq_aq1_cherry_is_filtered_with_witness() {
        let tree = cherry_pair(0, 1, &[2, 3]);
        let v = sign_violation(&tree, &observed_correlations()).unwrap();
        assert_eq!((v.u, v.v, v.outside), (0, 1, 2));
        assert_eq!(v.corr_outside_u, -0.51);
        assert_eq!(v.corr_outside_v, 0.15);
    }

    #[test]
    fn uniform_signs_filter_nothing() {
        let mut corr = DMatrix::from_element(4, 4, -0.3);
        corr.fill_diagonal(1.0);
        let out = filter_impossible(enumerate_trees(4).unwrap(), &corr).unwrap();
        assert!(out.iter().all(|c| c.filtered.is_none()));
        let out = filter_impossible(enumerate_trees(4).unwrap(), &observed_correlations()).unwrap();
        let survivors = out.iter().filter(|c| c.filtered.is_none()).count();
        assert!(survivors > 0 && survivors < 26);
        assert!(out[0].filtered.is_none());
    }

    #[test]
    fn zero_correlations_are_compatible() {
        let mut corr = DMatrix::from_element(3, 3, 0.0);
        corr.fill_diagonal(1.0);
        corr[(0, 2)] = 0.4;
        corr[(2, 0)] = 0.4;
        assert!(sign_violation(&cherry_pair(0, 1, &[2]), &corr).is_none());
    }

    #[test]
    fn single_candidate_is_returned() {
        let d = crate::dirichlet::DirichletParams::new(vec![3.0, 4.0, 5.0]).unwrap();
        let data = d.sample(30, &mut ChaCha8Rng::seed_from_u64(2));
        let only = vec![TreeCandidate::new(cherry_pair(0, 2, &[1]))];
        let sel = select_tree(&data, &only, SelectionCriterion::LogLikelihood, &Tolerance::default()).unwrap();
        assert_eq!(sel.ranking.len(), 1);
        assert_eq!(sel.best.params.tree().topology(), only[0].tree);
    }

    #[test]
    fn selection_recovers_generating_tree() {
        let tree = NestingTree::new(TreeNode::internal(vec![
            TreeNode::internal(vec![
                TreeNode::leaf(1).with_alpha(11.6),
                TreeNode::leaf(2).with_alpha(10.3),
            ])
            .with_alpha(8.1),
            TreeNode::internal(vec![
                TreeNode::leaf(3).with_alpha(5.6),
                TreeNode::leaf(0).with_alpha(9.2),
            ])
            .with_alpha(11.2),
        ]))
        .unwrap();
        let params = NddParams::new(tree.clone()).unwrap();
        let data = params.sample(1000, &mut ChaCha8Rng::seed_from_u64(17));
        let candidates = enumerate_trees(4).unwrap();
        let sel = select_tree(&data, &candidates, SelectionCriterion::LogLikelihood, &Tolerance::default())
            .unwrap();
        assert_eq!(sel.ranking.len(), 26);
        assert_eq!(sel.ranking[0].tree, tree.topology());
        for w in sel.ranking.windows(2) {
            assert!(w[0].log_likelihood >= w[1].log_likelihood);
        }
    }
}
