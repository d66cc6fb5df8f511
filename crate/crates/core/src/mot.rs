//! Finite martingale-optimal-transport LPs on truncated grid-path trees.
//!
//! A [`PathTree`] enumerates grid-path histories with at most `m` jumps and
//! per-depth gap menus truncated to the first `J` elements of each menu
//! family. Stopping is allowed at every node, so a martingale measure is a
//! vector of per-node stop masses. The primal LP maximizes the expected
//! payoff subject to the per-(node, gap) sign-balance constraints and the
//! terminal law; the dual LP finds the cheapest semi-static super-hedge.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{MotError, Result};
use crate::lp::{Cmp, LpProblem, LpStatus, Sense};
use crate::marginals::GridMarginal;
use crate::paths::GridPath;
use crate::payoffs::Claim;

/// Default per-family gap-menu truncation.
pub const DEFAULT_GAP_MENU: usize = 3;
/// Default node-count guard.
pub const DEFAULT_NODE_CAP: usize = 20_000;

/// One history node. The virtual root (index 0) carries the pre-split price 1
/// and is not a stopping state; every other node is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Value = `(N + offset)/N`.
    pub offset: i64,
    /// Time at which this value was reached.
    pub elapsed: f64,
    /// Jumps taken so far (the initial split does not count).
    pub depth: usize,
    pub parent: usize,
    /// Index into the parent's gap menu; the two roots use 0.
    pub gap_index: usize,
    pub sign: i8,
    pub children: Vec<usize>,
}

/// Truncated enumeration of the grid-path class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTree {
    pub n: u32,
    pub max_jumps: usize,
    pub gap_menu_size: usize,
    /// Price cap: values stay in `[0, B]`; up-jumps beyond it are pruned.
    pub price_cap: f64,
    pub horizon: f64,
    /// `menus[k]` is the gap menu for the (k+1)-th jump, sorted ascending.
    pub menus: Vec<Vec<f64>>,
    pub nodes: Vec<TreeNode>,
}

/// Build configuration for [`build_tree`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub n: u32,
    pub max_jumps: usize,
    pub gap_menu_size: usize,
    pub price_cap: f64,
    pub horizon: f64,
    pub node_cap: usize,
}

impl TreeConfig {
    pub fn new(n: u32, max_jumps: usize) -> TreeConfig {
        TreeConfig {
            n,
            max_jumps,
            gap_menu_size: DEFAULT_GAP_MENU,
            price_cap: 1.0 + (max_jumps.max(1) as f64 + 1.0) / n as f64,
            horizon: 1.0,
            node_cap: DEFAULT_NODE_CAP,
        }
    }

    pub fn with_menu(mut self, j: usize) -> TreeConfig {
        self.gap_menu_size = j;
        self
    }

    pub fn with_cap(mut self, b: f64) -> TreeConfig {
        self.price_cap = b;
        self
    }
}

/// First `J` elements of each family of the depth-k menu, deduplicated.
fn gap_menu(k: u32, n: u32, j: usize) -> Vec<f64> {
    let q = 1.0 / (2.0_f64.powi(k as i32) * n as f64);
    let mut menu: Vec<f64> = (1..=j).map(|i| i as f64 * q).collect();
    menu.extend((2..=j).map(|i| q / i as f64));
    menu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    menu.dedup();
    menu
}

/// Enumerates all truncated grid-path histories.
///
/// A `(node, gap)` branching is kept only when both children stay in
/// `[0, B]` and the jump lands strictly before `T`; value 0 is absorbing.
pub fn build_tree(cfg: &TreeConfig) -> Result<PathTree> {
    if cfg.n == 0 {
        return Err(MotError::domain("resolution N must be positive"));
    }
    if cfg.gap_menu_size == 0 {
        return Err(MotError::domain("gap menu size J must be positive"));
    }
    if cfg.price_cap < 1.0 + 1.0 / cfg.n as f64 - 1e-12 {
        return Err(MotError::domain(format!(
            "price cap {} below 1 + 1/N; the roots would be cut off",
            cfg.price_cap
        )));
    }
    let menus: Vec<Vec<f64>> = (1..=cfg.max_jumps as u32)
        .map(|k| gap_menu(k, cfg.n, cfg.gap_menu_size))
        .collect();
    let cap_offset = (cfg.price_cap * cfg.n as f64 + 1e-9).floor() as i64 - cfg.n as i64;
    let mut nodes = vec![TreeNode {
        offset: 0,
        elapsed: 0.0,
        depth: 0,
        parent: 0,
        gap_index: 0,
        sign: 0,
        children: Vec::new(),
    }];
    for sign in [-1_i8, 1] {
        nodes.push(TreeNode {
            offset: sign as i64,
            elapsed: 0.0,
            depth: 0,
            parent: 0,
            gap_index: 0,
            sign,
            children: Vec::new(),
        });
        let idx = nodes.len() - 1;
        nodes[0].children.push(idx);
    }
    let mut frontier: Vec<usize> = nodes[0].children.clone();
    while let Some(v) = frontier.pop() {
        let (offset, elapsed, depth) = {
            let node = &nodes[v];
            (node.offset, node.elapsed, node.depth)
        };
        if depth >= cfg.max_jumps {
            continue;
        }
        // value 0 is absorbing
        if offset == -(cfg.n as i64) {
            continue;
        }
        for (gi, &gap) in menus[depth].iter().enumerate() {
            let t = elapsed + gap;
            if t >= cfg.horizon {
                continue;
            }
            // keep the branching only when both signs stay in [0, B]
            if offset + 1 > cap_offset || offset - 1 < -(cfg.n as i64) {
                continue;
            }
            for sign in [-1_i8, 1] {
                nodes.push(TreeNode {
                    offset: offset + sign as i64,
                    elapsed: t,
                    depth: depth + 1,
                    parent: v,
                    gap_index: gi,
                    sign,
                    children: Vec::new(),
                });
                let idx = nodes.len() - 1;
                nodes[v].children.push(idx);
                frontier.push(idx);
            }
            if nodes.len() > cfg.node_cap {
                return Err(MotError::TreeSize {
                    nodes: nodes.len(),
                    cap: cfg.node_cap,
                    suggest_m: cfg.max_jumps.saturating_sub(1).max(1) as u32,
                    suggest_j: cfg.gap_menu_size.saturating_sub(1).max(1) as u32,
                });
            }
        }
    }
    Ok(PathTree {
        n: cfg.n,
        max_jumps: cfg.max_jumps,
        gap_menu_size: cfg.gap_menu_size,
        price_cap: cfg.price_cap,
        horizon: cfg.horizon,
        menus,
        nodes,
    })
}

impl PathTree {
    pub fn value_of(&self, v: usize) -> f64 {
        (self.n as i64 + self.nodes[v].offset) as f64 / self.n as f64
    }

    /// Root-to-node chain, virtual root excluded, `v` last.
    pub fn chain(&self, v: usize) -> Vec<usize> {
        let mut chain = Vec::new();
        let mut cur = v;
        while cur != 0 {
            chain.push(cur);
            cur = self.nodes[cur].parent;
        }
        chain.reverse();
        chain
    }

    /// The grid path stopped at `v` and extended constantly to `T`.
    pub fn path_of(&self, v: usize) -> GridPath {
        let chain = self.chain(v);
        let initial_value = self.value_of(chain[0]);
        let jumps = chain[1..]
            .iter()
            .map(|&c| (self.nodes[c].elapsed, self.nodes[c].sign))
            .collect();
        GridPath {
            n: self.n,
            horizon: self.horizon,
            initial_value,
            jumps,
        }
    }

    /// Stopping states: every node except the virtual root.
    pub fn num_states(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Largest reachable grid index `k` (terminal value `k/N`).
    pub fn max_grid_index(&self) -> usize {
        self.nodes
            .iter()
            .skip(1)
            .map(|nd| (self.n as i64 + nd.offset) as usize)
            .max()
            .unwrap_or(0)
    }

    /// `(node, gap)` branchings, each with its `(up-child, down-child)` pair.
    pub fn branchings(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for (v, node) in self.nodes.iter().enumerate() {
            let mut by_gap: BTreeMap<usize, (Option<usize>, Option<usize>)> = BTreeMap::new();
            for &c in &node.children {
                let slot = by_gap.entry(self.nodes[c].gap_index).or_default();
                if self.nodes[c].sign > 0 {
                    slot.0 = Some(c);
                } else {
                    slot.1 = Some(c);
                }
            }
            for (gi, (up, down)) in by_gap {
                out.push((v, gi, up.expect("paired"), down.expect("paired")));
            }
        }
        out
    }

    /// Heuristic truncation diagnostic: reachable states, branchings, and the
    /// (unquantified) fact that the gap menus are finite truncations.
    pub fn diagnostics(&self) -> TreeDiagnostics {
        TreeDiagnostics {
            nodes: self.nodes.len(),
            states: self.num_states(),
            branchings: self.branchings().len(),
            menu_truncated: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDiagnostics {
    pub nodes: usize,
    pub states: usize,
    pub branchings: usize,
    /// Always true: the full gap menus are countably infinite.
    pub menu_truncated: bool,
}

/// Marginal constraint mode for the primal problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MarginalMode {
    /// Terminal law equals `ν` grid point by grid point.
    Exact,
    /// `Σ_k |Q(S_T = k/N) − ν(k/N)| ≤ kappa/N`.
    Band { kappa: f64 },
}

/// A martingale measure on the tree: stop mass per node (virtual root 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeMeasure {
    pub masses: Vec<f64>,
}

impl TreeMeasure {
    /// Total subtree mass below (and including) each node.
    pub fn subtree_masses(&self, tree: &PathTree) -> Vec<f64> {
        let mut sub = self.masses.clone();
        // children always follow parents in index order
        for v in (1..tree.nodes.len()).rev() {
            let parent = tree.nodes[v].parent;
            sub[parent] += sub[v];
        }
        sub
    }

    /// Terminal law induced by the stop masses.
    pub fn terminal_law(&self, tree: &PathTree) -> GridMarginal {
        let mut weights = vec![0.0; tree.max_grid_index() + 1];
        for v in 1..tree.nodes.len() {
            weights[(tree.n as i64 + tree.nodes[v].offset) as usize] += self.masses[v];
        }
        GridMarginal { n: tree.n, weights }
    }
}

/// Dual certificate: a static grid payoff and per-(node, gap) positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// `h[k]` is the static payoff at `k/N`; the cash leg is folded in.
    pub h: Vec<f64>,
    /// Position held over a `(node, gap)` branching, keyed by branching
    /// order of [`PathTree::branchings`]; entry 0 covers the initial split.
    pub positions: Vec<f64>,
}

/// Solver outcome for either side of the MOT problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotSolution {
    pub status: LpStatus,
    pub value: f64,
    pub iterations: usize,
    pub max_residual: f64,
    pub measure: Option<TreeMeasure>,
    pub certificate: Option<DualCertificate>,
}

fn check_shared_n(tree: &PathTree, nu: &GridMarginal) -> Result<()> {
    if tree.n != nu.n {
        return Err(MotError::config(format!(
            "tree resolution {} and marginal resolution {} differ",
            tree.n, nu.n
        )));
    }
    Ok(())
}

/// Primal problem: maximize `E_Q[G]` over tree martingale measures with the
/// configured terminal-law constraint.
pub fn primal_lp(
    tree: &PathTree,
    claim: &Claim,
    nu: &GridMarginal,
    mode: MarginalMode,
) -> Result<MotSolution> {
    check_shared_n(tree, nu)?;
    let nn = tree.nodes.len();
    let mut lp = LpProblem::new(Sense::Maximize);
    // one stop-mass variable per state, objective = payoff of stopping there
    let vars: Vec<usize> = (1..nn)
        .map(|v| lp.add_var(claim.eval_grid(&tree.path_of(v))))
        .collect();

    // per-(node, gap) sign balance on subtree masses, initial split included
    let branchings = tree.branchings();
    let mut balance_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); branchings.len()];
    let branch_of: BTreeMap<(usize, usize), usize> = branchings
        .iter()
        .enumerate()
        .map(|(bi, &(v, gi, _, _))| ((v, gi), bi))
        .collect();
    for v in 1..nn {
        // walk up: v belongs to the subtree of each ancestor-edge child
        let mut cur = v;
        while cur != 0 {
            let node = &tree.nodes[cur];
            let bi = branch_of[&(node.parent, node.gap_index)];
            balance_terms[bi].push((vars[v - 1], node.sign as f64));
            cur = node.parent;
        }
    }
    for terms in balance_terms {
        lp.add_constraint(terms, Cmp::Eq, 0.0);
    }

    // terminal-law constraint over the full reachable grid range
    let kmax = tree.max_grid_index().max(nu.weights.len().saturating_sub(1));
    let mut by_terminal: Vec<Vec<(usize, f64)>> = vec![Vec::new(); kmax + 1];
    for v in 1..nn {
        let k = (tree.n as i64 + tree.nodes[v].offset) as usize;
        by_terminal[k].push((vars[v - 1], 1.0));
    }
    match mode {
        MarginalMode::Exact => {
            for (k, terms) in by_terminal.into_iter().enumerate() {
                let target = nu.weights.get(k).copied().unwrap_or(0.0);
                lp.add_constraint(terms, Cmp::Eq, target);
            }
        }
        MarginalMode::Band { kappa } => {
            if kappa < 0.0 {
                return Err(MotError::config("band width must be nonnegative"));
            }
            lp.add_constraint(vars.iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
            let mut slack_sum = Vec::new();
            for (k, mut terms) in by_terminal.into_iter().enumerate() {
                let target = nu.weights.get(k).copied().unwrap_or(0.0);
                let plus = lp.add_var(0.0);
                let minus = lp.add_var(0.0);
                terms.push((plus, -1.0));
                terms.push((minus, 1.0));
                lp.add_constraint(terms, Cmp::Eq, target);
                slack_sum.push((plus, 1.0));
                slack_sum.push((minus, 1.0));
            }
            lp.add_constraint(slack_sum, Cmp::Le, kappa / tree.n as f64);
        }
    }

    let sol = lp.solve();
    let measure = if sol.status == LpStatus::Optimal {
        let mut masses = vec![0.0; nn];
        for v in 1..nn {
            masses[v] = sol.x[vars[v - 1]].max(0.0);
        }
        Some(TreeMeasure { masses })
    } else {
        None
    };
    Ok(MotSolution {
        status: sol.status,
        value: sol.value,
        iterations: sol.iterations,
        max_residual: sol.max_residual,
        measure,
        certificate: None,
    })
}

/// Dual problem (exact marginal): minimize `Σ_k h(k/N)·ν(k/N)` over static
/// payoffs `h` and predictable per-(node, gap) positions such that the
/// portfolio super-replicates the claim on every stopping state.
pub fn dual_lp(tree: &PathTree, claim: &Claim, nu: &GridMarginal) -> Result<MotSolution> {
    check_shared_n(tree, nu)?;
    let nn = tree.nodes.len();
    let step = 1.0 / tree.n as f64;
    let kmax = tree.max_grid_index().max(nu.weights.len().saturating_sub(1));
    let mut lp = LpProblem::new(Sense::Minimize);
    let h_vars: Vec<usize> = (0..=kmax)
        .map(|k| lp.add_free_var(nu.weights.get(k).copied().unwrap_or(0.0)))
        .collect();
    let branchings = tree.branchings();
    let branch_of: BTreeMap<(usize, usize), usize> = branchings
        .iter()
        .enumerate()
        .map(|(bi, &(v, gi, _, _))| ((v, gi), bi))
        .collect();
    let p_vars: Vec<usize> = branchings.iter().map(|_| lp.add_free_var(0.0)).collect();

    for v in 1..nn {
        let payoff = claim.eval_grid(&tree.path_of(v));
        let k = (tree.n as i64 + tree.nodes[v].offset) as usize;
        let mut terms = vec![(h_vars[k], 1.0)];
        let mut cur = v;
        while cur != 0 {
            let node = &tree.nodes[cur];
            let bi = branch_of[&(node.parent, node.gap_index)];
            terms.push((p_vars[bi], node.sign as f64 * step));
            cur = node.parent;
        }
        lp.add_constraint(terms, Cmp::Ge, payoff);
    }

    let sol = lp.solve();
    let certificate = if sol.status == LpStatus::Optimal {
        Some(DualCertificate {
            h: h_vars.iter().map(|&j| sol.x[j]).collect(),
            positions: p_vars.iter().map(|&j| sol.x[j]).collect(),
        })
    } else {
        None
    };
    Ok(MotSolution {
        status: sol.status,
        value: sol.value,
        iterations: sol.iterations,
        max_residual: sol.max_residual,
        measure: None,
        certificate,
    })
}

/// Replays a dual certificate on every stopping state; returns the minimal
/// super-replication margin (nonnegative means feasible).
pub fn replay_certificate(tree: &PathTree, claim: &Claim, cert: &DualCertificate) -> f64 {
    let step = 1.0 / tree.n as f64;
    let branchings = tree.branchings();
    let branch_of: BTreeMap<(usize, usize), usize> = branchings
        .iter()
        .enumerate()
        .map(|(bi, &(v, gi, _, _))| ((v, gi), bi))
        .collect();
    let mut worst = f64::INFINITY;
    for v in 1..tree.nodes.len() {
        let k = (tree.n as i64 + tree.nodes[v].offset) as usize;
        let mut lhs = cert.h[k];
        let mut cur = v;
        while cur != 0 {
            let node = &tree.nodes[cur];
            lhs += cert.positions[branch_of[&(node.parent, node.gap_index)]]
                * node.sign as f64
                * step;
            cur = node.parent;
        }
        worst = worst.min(lhs - claim.eval_grid(&tree.path_of(v)));
    }
    worst
}

/// One reported violation from [`verify_measure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceViolation {
    pub node: usize,
    pub gap_index: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub mass_residual: f64,
    pub worst_balance: f64,
    pub violations: Vec<BalanceViolation>,
    /// `Σ_k |Q(S_T = k/N) − ν(k/N)|`.
    pub terminal_l1: f64,
    pub ok: bool,
}

/// Checks normalization, per-(node, gap) sign balance, and the terminal-law
/// residual of a tree measure against `ν`; tolerance `1e−9`.
pub fn verify_measure(tree: &PathTree, q: &TreeMeasure, nu: &GridMarginal) -> Result<MeasureReport> {
    check_shared_n(tree, nu)?;
    if q.masses.len() != tree.nodes.len() {
        return Err(MotError::config("measure length does not match tree"));
    }
    if let Some(&bad) = q.masses.iter().find(|&&m| m < -1e-12) {
        return Err(MotError::domain(format!("negative stop mass {bad}")));
    }
    let sub = q.subtree_masses(tree);
    let mass_residual = (sub[0] - q.masses[0] - 1.0).abs();
    let mut worst_balance = 0.0_f64;
    let mut violations = Vec::new();
    for (node, gap_index, up, down) in tree.branchings() {
        let r = (sub[up] - sub[down]).abs();
        worst_balance = worst_balance.max(r);
        if r > 1e-9 {
            violations.push(BalanceViolation {
                node,
                gap_index,
                residual: r,
            });
        }
    }
    let law = q.terminal_law(tree);
    let kmax = law.weights.len().max(nu.weights.len());
    let mut terminal_l1 = 0.0;
    for k in 0..kmax {
        let a = law.weights.get(k).copied().unwrap_or(0.0);
        let b = nu.weights.get(k).copied().unwrap_or(0.0);
        terminal_l1 += (a - b).abs();
    }
    let ok = mass_residual <= 1e-9 && violations.is_empty();
    Ok(MeasureReport {
        mass_residual,
        worst_balance,
        violations,
        terminal_l1,
        ok,
    })
}

/// One row of a refinement experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineRow {
    pub n: u32,
    pub max_jumps: usize,
    pub gap_menu_size: usize,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub primal_status: LpStatus,
    pub dual_status: LpStatus,
}

/// Solves both sides across a (resolution-nondecreasing) schedule and reports
/// values and duality gaps. Trends are reported, never asserted: the `(m, J)`
/// truncation breaks exact nesting between rows.
pub fn refine_experiment(
    claim: &Claim,
    mu: &crate::marginals::Marginal,
    schedule: &[(u32, usize, usize)],
    horizon: f64,
) -> Result<Vec<RefineRow>> {
    let mut out = Vec::new();
    let mut last_n = 0;
    for &(n, m, j) in schedule {
        if n < last_n {
            return Err(MotError::config("refinement schedule must be nondecreasing in N"));
        }
        last_n = n;
        let nu = crate::marginals::project_marginal(mu, n)?;
        let mut cfg = TreeConfig::new(n, m).with_menu(j);
        cfg.horizon = horizon;
        let tree = build_tree(&cfg)?;
        let p = primal_lp(&tree, claim, &nu, MarginalMode::Exact)?;
        let d = dual_lp(&tree, claim, &nu)?;
        out.push(RefineRow {
            n,
            max_jumps: m,
            gap_menu_size: j,
            primal: p.value,
            dual: d.value,
            gap: d.value - p.value,
            primal_status: p.status,
            dual_status: d.status,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::Marginal;
    use crate::paths::validate_grid_path;
    use crate::payoffs::ClaimKind;
    use approx::assert_abs_diff_eq;

    fn two_point_nu(n: u32) -> GridMarginal {
        let mu = Marginal::atomic(vec![(0.5, 0.5), (1.5, 0.5)], 2.0).unwrap();
        crate::marginals::project_marginal(&mu, n).unwrap()
    }

    #[test]
    fn tree_shapes() {
        let t = build_tree(&TreeConfig::new(2, 0)).unwrap();
        assert_eq!(t.num_states(), 2); // just the two roots

        let t = build_tree(&TreeConfig::new(2, 1).with_menu(1)).unwrap();
        // menu U_1 for N=2, J=1: {1/4}; both roots branch once
        assert_eq!(t.num_states(), 6);
        for v in 1..t.nodes.len() {
            assert!(validate_grid_path(&t.path_of(v)).ok());
        }
    }

    #[test]
    fn tree_cap_is_absorbing_and_bounded() {
        let t = build_tree(&TreeConfig::new(2, 3).with_menu(2).with_cap(2.0)).unwrap();
        for v in 1..t.nodes.len() {
            let value = t.value_of(v);
            assert!((0.0..=2.0 + 1e-12).contains(&value));
        }
        // no node below value 0 means absorption worked
        let zero_nodes: Vec<usize> = (1..t.nodes.len())
            .filter(|&v| t.nodes[v].offset == -2)
            .collect();
        for v in zero_nodes {
            assert!(t.nodes[v].children.is_empty());
        }
    }

    #[test]
    fn tree_node_cap_errors_with_suggestion() {
        let mut cfg = TreeConfig::new(4, 6).with_menu(3);
        cfg.node_cap = 100;
        match build_tree(&cfg) {
            Err(MotError::TreeSize { suggest_m, suggest_j, .. }) => {
                assert!(suggest_m < 6 && suggest_j <= 3);
            }
            other => panic!("expected TreeSize, got {other:?}"),
        }
    }

    #[test]
    fn primal_terminal_identity() {
        // G = S_T pinned by the marginal: value = mean ν = 1
        let claim = Claim::new(ClaimKind::Composite {
            constant: 0.0,
            terminal: 1.0,
            minimum: 0.0,
            maximum: 0.0,
            average: 0.0,
        });
        let nu = two_point_nu(2);
        for m in [1, 2] {
            let tree = build_tree(&TreeConfig::new(2, m).with_menu(2)).unwrap();
            let sol = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn primal_vanilla_golden() {
        let claim = Claim::new(ClaimKind::VanillaCall { strike: 1.0 });
        let nu = two_point_nu(2);
        let tree = build_tree(&TreeConfig::new(2, 2).with_menu(2)).unwrap();
        let sol = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.value, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn primal_lookback_golden() {
        let claim = Claim::new(ClaimKind::LookbackMax);
        let nu = two_point_nu(2);
        for m in [1, 2] {
            let tree = build_tree(&TreeConfig::new(2, m).with_menu(2)).unwrap();
            let sol = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal, "m = {m}");
            assert_abs_diff_eq!(sol.value, 1.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn dual_matches_primal_and_replays() {
        let nu = two_point_nu(2);
        for claim in [
            Claim::new(ClaimKind::LookbackMax),
            Claim::new(ClaimKind::VanillaCall { strike: 1.0 }),
        ] {
            let tree = build_tree(&TreeConfig::new(2, 2).with_menu(2)).unwrap();
            let p = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
            let d = dual_lp(&tree, &claim, &nu).unwrap();
            assert_eq!(d.status, LpStatus::Optimal);
            assert!((d.value - p.value).abs() <= 1e-8 * (1.0 + p.value.abs()));
            let margin = replay_certificate(&tree, &claim, d.certificate.as_ref().unwrap());
            assert!(margin >= -1e-8, "margin {margin}");
        }
    }

    #[test]
    fn dual_zero_claim() {
        let claim = Claim::new(ClaimKind::Composite {
            constant: 0.0,
            terminal: 0.0,
            minimum: 0.0,
            maximum: 0.0,
            average: 0.0,
        });
        let nu = two_point_nu(2);
        let tree = build_tree(&TreeConfig::new(2, 1).with_menu(1)).unwrap();
        let d = dual_lp(&tree, &claim, &nu).unwrap();
        assert_abs_diff_eq!(d.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_marginal_is_reported() {
        // ν asks for mass at 3.0 which a 1-jump N=2 tree cannot reach
        let mu = Marginal::atomic(vec![(0.0, 0.6), (2.5, 0.4)], 2.0).unwrap();
        let nu = crate::marginals::project_marginal(&mu, 2).unwrap();
        let tree = build_tree(&TreeConfig::new(2, 1).with_menu(1)).unwrap();
        let claim = Claim::new(ClaimKind::LookbackMax);
        let sol = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn band_zero_equals_exact() {
        let claim = Claim::new(ClaimKind::LookbackMax);
        let nu = two_point_nu(2);
        let tree = build_tree(&TreeConfig::new(2, 2).with_menu(2)).unwrap();
        let exact = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
        let band = primal_lp(&tree, &claim, &nu, MarginalMode::Band { kappa: 0.0 }).unwrap();
        assert_abs_diff_eq!(exact.value, band.value, epsilon = 1e-9);
        // a positive band can only widen the feasible set
        let loose = primal_lp(&tree, &claim, &nu, MarginalMode::Band { kappa: 1.0 }).unwrap();
        assert!(loose.value >= exact.value - 1e-9);
    }

    #[test]
    fn verify_primal_optimum() {
        let claim = Claim::new(ClaimKind::LookbackMax);
        let nu = two_point_nu(2);
        let tree = build_tree(&TreeConfig::new(2, 2).with_menu(2)).unwrap();
        let sol = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
        let q = sol.measure.unwrap();
        let report = verify_measure(&tree, &q, &nu).unwrap();
        assert!(report.ok, "{report:?}");
        assert!(report.terminal_l1 <= 1e-9);

        // perturbing one stop mass breaks balance and is reported
        let mut bad = q.clone();
        let v = (1..tree.nodes.len())
            .find(|&v| tree.nodes[v].depth == 1 && tree.nodes[v].sign == 1)
            .unwrap();
        bad.masses[v] += 1e-3;
        let report = verify_measure(&tree, &bad, &nu).unwrap();
        assert!(!report.ok);
        assert!(!report.violations.is_empty());
    }

    #[test]
    fn refine_lookback_constant_rows() {
        let claim = Claim::new(ClaimKind::LookbackMax);
        let mu = Marginal::atomic(vec![(0.5, 0.5), (1.5, 0.5)], 2.0).unwrap();
        let schedule = [(2, 1, 2), (2, 2, 2), (2, 3, 2)];
        let rows = refine_experiment(&claim, &mu, &schedule, 1.0).unwrap();
        for row in &rows {
            assert_abs_diff_eq!(row.primal, 1.25, epsilon = 1e-8);
            assert!(row.dual >= row.primal - 1e-8);
            assert!(row.gap.abs() <= 1e-8 * (1.0 + row.primal.abs()));
        }
    }
}
