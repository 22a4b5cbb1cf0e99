//! Nested Dirichlet (Dirichlet-tree) distributions.
//!
//! A [`NestingTree`] groups the K components under internal nodes. Each
//! internal node carries an independent Dirichlet over the masses of its
//! children, normalized by the node's own mass; a component's value is the
//! product of these fractions along its root-to-leaf path. Edge parameters
//! live on child edges, so the root carries none.
//!
//! Trees are stored in canonical form: the children of every internal node
//! are ordered by the smallest component index they contain. Internal nodes
//! are numbered in pre-order of that canonical form, with the root as 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::composition::{Composition, SufficientStats};
use crate::dirichlet::{self, composition_from_logs, DirichletParams, FitResult, LogGamma};
use crate::error::{Error, Result};
use crate::numerics::Tolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        component: usize,
        alpha: Option<f64>,
    },
    Internal {
        children: Vec<TreeNode>,
        alpha: Option<f64>,
    },
}

impl TreeNode {
    pub fn leaf(component: usize) -> Self {
        TreeNode::Leaf {
            component,
            alpha: None,
        }
    }

    pub fn internal(children: Vec<TreeNode>) -> Self {
        TreeNode::Internal {
            children,
            alpha: None,
        }
    }

    pub fn with_alpha(mut self, value: f64) -> Self {
        match &mut self {
            TreeNode::Leaf { alpha, .. } | TreeNode::Internal { alpha, .. } => *alpha = Some(value),
        }
        self
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            TreeNode::Leaf { alpha, .. } | TreeNode::Internal { alpha, .. } => *alpha,
        }
    }

    fn set_alpha(&mut self, value: Option<f64>) {
        match self {
            TreeNode::Leaf { alpha, .. } | TreeNode::Internal { alpha, .. } => *alpha = value,
        }
    }

    pub fn min_leaf(&self) -> usize {
        match self {
            TreeNode::Leaf { component, .. } => *component,
            TreeNode::Internal { children, .. } => {
                children.iter().map(|c| c.min_leaf()).min().unwrap_or(usize::MAX)
            }
        }
    }

    /// Component indices under this node, ascending.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out.sort_unstable();
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            TreeNode::Leaf { component, .. } => out.push(*component),
            TreeNode::Internal { children, .. } => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
        }
    }

    fn canonicalize(&mut self) {
        if let TreeNode::Internal { children, .. } = self {
            children.iter_mut().for_each(TreeNode::canonicalize);
            children.sort_by_key(TreeNode::min_leaf);
        }
    }

    fn strip_alpha(&mut self) {
        self.set_alpha(None);
        if let TreeNode::Internal { children, .. } = self {
            children.iter_mut().for_each(TreeNode::strip_alpha);
        }
    }
}

/// Summary of one internal node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalNode {
    pub id: usize,
    pub depth: usize,
    /// Component indices under the node, ascending.
    pub leaves: Vec<usize>,
    /// Leaf sets of the children, in canonical order.
    pub children: Vec<Vec<usize>>,
    pub child_alpha: Vec<Option<f64>>,
}

impl InternalNode {
    pub fn n_children(&self) -> usize {
        self.children.len()
    }

    /// "root" for the root, otherwise the component names under the node.
    pub fn label(&self, names: &[String]) -> String {
        if self.id == 0 {
            return "root".into();
        }
        let inner: Vec<&str> = self
            .leaves
            .iter()
            .map(|&i| names.get(i).map(String::as_str).unwrap_or("?"))
            .collect();
        format!("{{{}}}", inner.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestingTree {
    root: TreeNode,
    n_components: usize,
}

impl NestingTree {
    /// Validates and canonicalizes a tree whose leaves must be exactly the
    /// components 0..K.
    pub fn new(mut root: TreeNode) -> Result<Self> {
        if matches!(root, TreeNode::Leaf { .. }) {
            return Err(Error::InvalidTree(
                "the root must be an internal node".into(),
            ));
        }
        if root.alpha().is_some() {
            return Err(Error::InvalidTree("the root carries no edge parameter".into()));
        }
        check_node(&root)?;
        let leaves = root.leaves();
        let k = leaves.len();
        if k < 2 {
            return Err(Error::TooFewComponents(k));
        }
        for (i, &c) in leaves.iter().enumerate() {
            if c != i {
                if i > 0 && leaves[i - 1] == c {
                    return Err(Error::InvalidTree(format!("component {c} appears twice")));
                }
                return Err(Error::InvalidTree(format!(
                    "leaves must cover components 0..{k} exactly; component {i} is missing"
                )));
            }
        }
        root.canonicalize();
        Ok(NestingTree {
            root,
            n_components: k,
        })
    }

    /// Single internal node holding all K components.
    pub fn flat(k: usize) -> Result<Self> {
        Self::new(TreeNode::internal((0..k).map(TreeNode::leaf).collect()))
    }

    pub fn flat_with_alpha(alpha: &[f64]) -> Result<Self> {
        Self::new(TreeNode::internal(
            alpha
                .iter()
                .enumerate()
                .map(|(i, &a)| TreeNode::leaf(i).with_alpha(a))
                .collect(),
        ))
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn is_flat(&self) -> bool {
        match &self.root {
            TreeNode::Internal { children, .. } => {
                children.iter().all(|c| matches!(c, TreeNode::Leaf { .. }))
            }
            TreeNode::Leaf { .. } => false,
        }
    }

    /// Internal nodes in canonical pre-order; the root is first.
    pub fn internal_nodes(&self) -> Vec<InternalNode> {
        let mut out = Vec::new();
        collect_internal(&self.root, 0, &mut out);
        out
    }

    /// For each component, the (internal node id, child position) pairs on
    /// its root-to-leaf path.
    pub fn paths(&self) -> Vec<Vec<(usize, usize)>> {
        let mut paths = vec![Vec::new(); self.n_components];
        let mut next_id = 0;
        collect_paths(&self.root, &mut next_id, &mut Vec::new(), &mut paths);
        paths
    }

    /// Number of edge parameters (every non-root node carries one).
    pub fn n_parameters(&self) -> usize {
        fn count(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Internal { children, .. } => 1 + children.iter().map(count).sum::<usize>(),
            }
        }
        count(&self.root) - 1
    }

    pub fn has_all_alphas(&self) -> bool {
        fn all(node: &TreeNode) -> bool {
            match node {
                TreeNode::Leaf { alpha, .. } => alpha.is_some(),
                TreeNode::Internal { children, alpha } => {
                    alpha.is_some() && children.iter().all(all)
                }
            }
        }
        match &self.root {
            TreeNode::Internal { children, .. } => children.iter().all(all),
            TreeNode::Leaf { .. } => false,
        }
    }

    /// Same topology with every edge parameter cleared.
    pub fn topology(&self) -> NestingTree {
        let mut t = self.clone();
        t.root.strip_alpha();
        t
    }

    /// Sets the edge parameters of the children of internal node `id`.
    pub fn set_child_alphas(&mut self, id: usize, alphas: &[f64]) -> Result<()> {
        let mut counter = 0;
        match find_internal_mut(&mut self.root, id, &mut counter) {
            Some(TreeNode::Internal { children, .. }) => {
                if children.len() != alphas.len() {
                    return Err(Error::DimensionMismatch {
                        expected: children.len(),
                        found: alphas.len(),
                    });
                }
                for (c, &a) in children.iter_mut().zip(alphas) {
                    c.set_alpha(Some(a));
                }
                Ok(())
            }
            _ => Err(Error::InvalidTree(format!("no internal node with id {id}"))),
        }
    }
}

fn check_node(node: &TreeNode) -> Result<()> {
    match node {
        TreeNode::Leaf { alpha, .. } => check_alpha(*alpha),
        TreeNode::Internal { children, alpha } => {
            check_alpha(*alpha)?;
            if children.len() < 2 {
                return Err(Error::InvalidTree(
                    "every internal node needs at least two children".into(),
                ));
            }
            children.iter().try_for_each(check_node)
        }
    }
}

fn check_alpha(alpha: Option<f64>) -> Result<()> {
    match alpha {
        Some(a) if !(a > 0.0) || !a.is_finite() => Err(Error::InvalidTree(format!(
            "edge parameters must be positive, got {a}"
        ))),
        _ => Ok(()),
    }
}

fn collect_internal(node: &TreeNode, depth: usize, out: &mut Vec<InternalNode>) {
    if let TreeNode::Internal { children, .. } = node {
        out.push(InternalNode {
            id: out.len(),
            depth,
            leaves: node.leaves(),
            children: children.iter().map(TreeNode::leaves).collect(),
            child_alpha: children.iter().map(TreeNode::alpha).collect(),
        });
        for c in children {
            collect_internal(c, depth + 1, out);
        }
    }
}

fn collect_paths(
    node: &TreeNode,
    next_id: &mut usize,
    prefix: &mut Vec<(usize, usize)>,
    paths: &mut [Vec<(usize, usize)>],
) {
    match node {
        TreeNode::Leaf { component, .. } => paths[*component] = prefix.clone(),
        TreeNode::Internal { children, .. } => {
            let id = *next_id;
            *next_id += 1;
            for (pos, c) in children.iter().enumerate() {
                prefix.push((id, pos));
                collect_paths(c, next_id, prefix, paths);
                prefix.pop();
            }
        }
    }
}

fn find_internal_mut<'a>(
    node: &'a mut TreeNode,
    id: usize,
    counter: &mut usize,
) -> Option<&'a mut TreeNode> {
    if !matches!(node, TreeNode::Internal { .. }) {
        return None;
    }
    if *counter == id {
        return Some(node);
    }
    *counter += 1;
    if let TreeNode::Internal { children, .. } = node {
        for c in children.iter_mut() {
            if let Some(found) = find_internal_mut(c, id, counter) {
                return Some(found);
            }
        }
    }
    None
}

/// The compositions seen by one internal node: child masses divided by the
/// node's mass, one row per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtreeData {
    pub node: InternalNode,
    pub observations: Vec<Composition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtreeDecomposition {
    pub subtrees: Vec<SubtreeData>,
}

fn node_masses(node: &InternalNode, x: &[f64]) -> Vec<f64> {
    node.children
        .iter()
        .map(|leaves| leaves.iter().map(|&j| x[j]).sum())
        .collect()
}

/// Splits every observation into one sub-composition per internal node.
pub fn decompose(tree: &NestingTree, observations: &[Composition]) -> Result<SubtreeDecomposition> {
    let k = tree.n_components();
    if let Some(c) = observations.iter().find(|c| c.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: c.len(),
        });
    }
    let subtrees = tree
        .internal_nodes()
        .into_iter()
        .map(|node| {
            let observations = observations
                .iter()
                .map(|c| {
                    let masses = node_masses(&node, c.values());
                    debug_assert!(masses.iter().all(|&m| m > 0.0));
                    Composition::normalized(masses)
                })
                .collect();
            SubtreeData { node, observations }
        })
        .collect();
    Ok(SubtreeDecomposition { subtrees })
}

/// Rebuilds the original compositions from a decomposition by multiplying
/// fractions along each root-to-leaf path.
pub fn reassemble(tree: &NestingTree, decomposition: &SubtreeDecomposition) -> Result<Vec<Composition>> {
    let paths = tree.paths();
    let n_nodes = decomposition.subtrees.len();
    if n_nodes != tree.internal_nodes().len() {
        return Err(Error::DimensionMismatch {
            expected: tree.internal_nodes().len(),
            found: n_nodes,
        });
    }
    let n = decomposition
        .subtrees
        .first()
        .map(|s| s.observations.len())
        .unwrap_or(0);
    Ok((0..n)
        .map(|i| {
            let values = paths
                .iter()
                .map(|path| {
                    path.iter()
                        .map(|&(node, pos)| decomposition.subtrees[node].observations[i].values()[pos])
                        .product()
                })
                .collect();
            Composition::normalized(values)
        })
        .collect())
}

/// A nesting tree with every edge parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NddParams {
    tree: NestingTree,
}

impl NddParams {
    pub fn new(tree: NestingTree) -> Result<Self> {
        if !tree.has_all_alphas() {
            return Err(Error::InvalidTree(
                "every non-root node needs an edge parameter".into(),
            ));
        }
        Ok(NddParams { tree })
    }

    pub fn tree(&self) -> &NestingTree {
        &self.tree
    }

    pub fn n_components(&self) -> usize {
        self.tree.n_components()
    }

    /// Dirichlet parameters of each internal node's children, in node order.
    pub fn subtree_params(&self) -> Vec<DirichletParams> {
        self.tree
            .internal_nodes()
            .into_iter()
            .map(|node| {
                DirichletParams::new(node.child_alpha.iter().map(|a| a.unwrap()).collect())
                    .expect("validated edge parameters")
            })
            .collect()
    }

    /// Subtree mean vectors π_{N_i}, in node order.
    pub fn subtree_means(&self) -> Vec<Vec<f64>> {
        self.subtree_params().iter().map(DirichletParams::mean).collect()
    }

    /// p_j = product of subtree means along the path to component j.
    pub fn leaf_means(&self) -> Vec<f64> {
        let means = self.subtree_means();
        self.tree
            .paths()
            .iter()
            .map(|path| path.iter().map(|&(node, pos)| means[node][pos]).product())
            .collect()
    }

    /// Sum of the subtree Dirichlet log-densities of the decomposed point,
    /// i.e. the log-density in subtree coordinates.
    pub fn subtree_log_density(&self, c: &Composition) -> Result<f64> {
        let decomposition = decompose(&self.tree, std::slice::from_ref(c))?;
        self.subtree_params()
            .iter()
            .zip(&decomposition.subtrees)
            .map(|(p, s)| p.log_density(&s.observations[0]))
            .sum()
    }

    /// Log-density of the composition itself (same reference measure as the
    /// flat Dirichlet density): the subtree log-density plus the log-Jacobian
    /// −Σ (k_N − 1) ln(mass of N) over non-root internal nodes N.
    pub fn log_density(&self, c: &Composition) -> Result<f64> {
        Ok(self.subtree_log_density(c)? - log_jacobian(&self.tree, c.values()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Composition> {
        let nodes = self.tree.internal_nodes();
        let samplers: Vec<Vec<LogGamma>> = nodes
            .iter()
            .map(|node| {
                node.child_alpha
                    .iter()
                    .map(|a| LogGamma::new(a.unwrap()))
                    .collect()
            })
            .collect();
        let paths = self.tree.paths();
        let mut fractions: Vec<Composition> = Vec::with_capacity(nodes.len());
        (0..n)
            .map(|_| {
                fractions.clear();
                for s in &samplers {
                    let logs: Vec<f64> = s.iter().map(|g| g.sample(rng)).collect();
                    fractions.push(composition_from_logs(&logs));
                }
                let values = paths
                    .iter()
                    .map(|path| {
                        path.iter()
                            .map(|&(node, pos)| fractions[node].values()[pos])
                            .product()
                    })
                    .collect();
                Composition::normalized(values)
            })
            .collect()
    }

    /// Delta-method standard errors of the estimated leaf means for a sample
    /// of size `n`. Subtrees are independent and a path uses at most one
    /// entry per subtree, so only per-entry variances enter.
    pub fn delta_method_ses(&self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .delta_method_variances(n)?
            .into_iter()
            .map(f64::sqrt)
            .collect())
    }

    pub fn delta_method_variances(&self, n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, found: n });
        }
        let nodes = self.tree.internal_nodes();
        let params = self.subtree_params();
        let means: Vec<Vec<f64>> = params.iter().map(DirichletParams::mean).collect();
        let variances = params
            .iter()
            .zip(&nodes)
            .map(|(p, node)| {
                dirichlet::mean_variances(p, n).map_err(|e| e.in_subtree(format!("N{}", node.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .tree
            .paths()
            .iter()
            .map(|path| {
                let factors: Vec<f64> = path.iter().map(|&(node, pos)| means[node][pos]).collect();
                path.iter()
                    .enumerate()
                    .map(|(i, &(node, pos))| {
                        // ∂(Π π)/∂π_i is the product of the other factors.
                        let grad: f64 = factors
                            .iter()
                            .enumerate()
                            .filter(|&(m, _)| m != i)
                            .map(|(_, f)| f)
                            .product();
                        grad * grad * variances[node][pos]
                    })
                    .sum()
            })
            .collect())
    }
}

/// Σ over non-root internal nodes of (k_N − 1)·ln(mass of N).
fn log_jacobian(tree: &NestingTree, x: &[f64]) -> f64 {
    tree.internal_nodes()
        .iter()
        .skip(1)
        .map(|node| {
            let mass: f64 = node.leaves.iter().map(|&j| x[j]).sum();
            (node.n_children() as f64 - 1.0) * mass.ln()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NddFit {
    pub params: NddParams,
    /// One Dirichlet fit per internal node, in node order.
    pub subtree_fits: Vec<FitResult>,
    /// Σ of the subtree log-likelihoods (subtree coordinates).
    pub subtree_log_likelihood: f64,
    /// Log-likelihood of the compositions themselves; comparable across trees.
    pub log_likelihood: f64,
}

/// Maximum-likelihood fit: one Dirichlet fit per subtree decomposition.
pub fn mle(tree: &NestingTree, observations: &[Composition], tol: &Tolerance) -> Result<NddFit> {
    if observations.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: observations.len(),
        });
    }
    let decomposition = decompose(tree, observations)?;
    let mut fitted = tree.topology();
    let mut subtree_fits = Vec::with_capacity(decomposition.subtrees.len());
    for sub in &decomposition.subtrees {
        let stats = SufficientStats::from_observations(&sub.observations)?;
        let fit = dirichlet::mle_from_stats(&stats, tol)
            .map_err(|e| e.in_subtree(format!("N{}", sub.node.id)))?;
        fitted.set_child_alphas(sub.node.id, fit.params.alpha())?;
        subtree_fits.push(fit);
    }
    let subtree_log_likelihood: f64 = subtree_fits.iter().map(|f| f.log_likelihood).sum();
    let jacobian: f64 = observations
        .iter()
        .map(|c| log_jacobian(tree, c.values()))
        .sum();
    Ok(NddFit {
        params: NddParams::new(fitted)?,
        subtree_fits,
        subtree_log_likelihood,
        log_likelihood: subtree_log_likelihood - jacobian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Components ordered (TQ, AQ1, OQ, AQ2).
    fn maze_tree() -> NddParams {
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
        NddParams::new(tree).unwrap()
    }

    #[test]
    fn canonical_order_and_numbering() {
        let p = maze_tree();
        let nodes = p.tree().internal_nodes();
        assert_eq!(nodes.len(), 3);
        assert_eq!(nodes[0].children, vec![vec![0, 3], vec![1, 2]]);
        assert_eq!(nodes[1].leaves, vec![0, 3]);
        assert_eq!(nodes[1].children, vec![vec![0], vec![3]]);
        assert_eq!(nodes[2].leaves, vec![1, 2]);
        assert_eq!(p.tree().n_parameters(), 6);
        assert_eq!(p.tree().paths()[3], vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn invalid_trees() {
        let single = TreeNode::internal(vec![
            TreeNode::internal(vec![TreeNode::leaf(0)]),
            TreeNode::leaf(1),
        ]);
        assert!(NestingTree::new(single).is_err());
        let dup = TreeNode::internal(vec![TreeNode::leaf(0), TreeNode::leaf(0)]);
        assert!(NestingTree::new(dup).is_err());
        let gap = TreeNode::internal(vec![TreeNode::leaf(0), TreeNode::leaf(2)]);
        assert!(NestingTree::new(gap).is_err());
        let rooted_alpha =
            TreeNode::internal(vec![TreeNode::leaf(0), TreeNode::leaf(1)]).with_alpha(2.0);
        assert!(NestingTree::new(rooted_alpha).is_err());
        let unset = NestingTree::flat(3).unwrap();
        assert!(NddParams::new(unset).is_err());
    }

    #[test]
    fn decompose_maze_observation() {
        let p = maze_tree();
        let x = Composition::new(vec![0.42, 0.35, 0.15, 0.08]).unwrap();
        let d = decompose(p.tree(), std::slice::from_ref(&x)).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| (u - v).abs() < 1e-12);
        // root children: {TQ,AQ2}, {AQ1,OQ}
        assert!(close(d.subtrees[0].observations[0].values(), &[0.50, 0.50]));
        // {TQ, AQ2}
        assert!(close(d.subtrees[1].observations[0].values(), &[0.84, 0.16]));
        // {AQ1, OQ}
        assert!(close(d.subtrees[2].observations[0].values(), &[0.70, 0.30]));
    }

    #[test]
    fn flat_decomposition_is_identity() {
        let tree = NestingTree::flat(4).unwrap();
        let x = Composition::new(vec![0.42, 0.35, 0.15, 0.08]).unwrap();
        let d = decompose(&tree, std::slice::from_ref(&x)).unwrap();
        assert_eq!(d.subtrees.len(), 1);
        for (a, b) in d.subtrees[0].observations[0].values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn leaf_means_of_maze_tree() {
        let p = maze_tree();
        let m = p.leaf_means();
        assert!((m[0] - (11.2 / 19.3) * (9.2 / 14.8)).abs() < 1e-14);
        assert!((m[0] - 0.3607).abs() < 5e-5);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_leaf_means_and_uniform_tree() {
        let flat = NddParams::new(NestingTree::flat_with_alpha(&[2.0, 3.0, 5.0]).unwrap()).unwrap();
        let m = flat.leaf_means();
        for (a, b) in m.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        let uniform = NestingTree::new(TreeNode::internal(vec![
            TreeNode::internal(vec![
                TreeNode::leaf(0).with_alpha(3.0),
                TreeNode::leaf(1).with_alpha(3.0),
            ])
            .with_alpha(7.0),
            TreeNode::internal(vec![
                TreeNode::leaf(2).with_alpha(1.0),
                TreeNode::leaf(3).with_alpha(1.0),
            ])
            .with_alpha(7.0),
        ]))
        .unwrap();
        let m = NddParams::new(uniform).unwrap().leaf_means();
        assert!(m.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn flat_tree_density_matches_dirichlet() {
        let alpha = [2.5, 1.5, 4.0];
        let flat = NddParams::new(NestingTree::flat_with_alpha(&alpha).unwrap()).unwrap();
        let d = DirichletParams::new(alpha.to_vec()).unwrap();
        let x = Composition::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((flat.log_density(&x).unwrap() - d.log_density(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn maze_density_equals_subtree_sum_minus_jacobian() {
        let p = maze_tree();
        let x = Composition::new(vec![0.42, 0.35, 0.15, 0.08]).unwrap();
        let root = DirichletParams::new(vec![11.2, 8.1]).unwrap();
        let left = DirichletParams::new(vec![9.2, 5.6]).unwrap();
        let right = DirichletParams::new(vec![11.6, 10.3]).unwrap();
        let c = |v: &[f64]| Composition::new(v.to_vec()).unwrap();
        let sum = root.log_density(&c(&[0.5, 0.5])).unwrap()
            + left.log_density(&c(&[0.84, 0.16])).unwrap()
            + right.log_density(&c(&[0.7, 0.3])).unwrap();
        assert!((p.subtree_log_density(&x).unwrap() - sum).abs() < 1e-10);
        let jac = 0.5f64.ln() + 0.5f64.ln();
        assert!((p.log_density(&x).unwrap() - (sum - jac)).abs() < 1e-10);
    }

    #[test]
    fn flat_fit_matches_dirichlet_fit() {
        let d = DirichletParams::new(vec![4.0, 2.0, 3.0]).unwrap();
        let data = d.sample(40, &mut ChaCha8Rng::seed_from_u64(5));
        let tol = Tolerance::default();
        let flat = mle(&NestingTree::flat(3).unwrap(), &data, &tol).unwrap();
        let direct = dirichlet::mle(&data, &tol).unwrap();
        let got = flat.params.subtree_params()[0].alpha().to_vec();
        for (a, b) in got.iter().zip(direct.params.alpha()) {
            assert!(((a - b) / b).abs() < 1e-9);
        }
        assert!((flat.log_likelihood - direct.log_likelihood).abs() < 1e-8);
    }

    #[test]
    fn flat_delta_method_equals_dirichlet_ses() {
        let alpha = [9.8, 6.1, 5.4, 5.9];
        let flat = NddParams::new(NestingTree::flat_with_alpha(&alpha).unwrap()).unwrap();
        let d = DirichletParams::new(alpha.to_vec()).unwrap();
        assert_eq!(
            flat.delta_method_ses(7).unwrap(),
            dirichlet::mean_standard_errors(&d, 7).unwrap()
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = maze_tree();
        let a = p.sample(100, &mut ChaCha8Rng::seed_from_u64(9));
        let b = p.sample(100, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn set_child_alphas_checks_arity() {
        let mut t = NestingTree::flat(3).unwrap();
        assert!(t.set_child_alphas(0, &[1.0, 2.0]).is_err());
        assert!(t.set_child_alphas(1, &[1.0, 2.0, 3.0]).is_err());
        t.set_child_alphas(0, &[1.0, 2.0, 3.0]).unwrap();
        assert!(t.has_all_alphas());
    }
}
