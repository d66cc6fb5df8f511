//! Monte Carlo realization of a tree martingale measure on a Brownian
//! driver.
//!
//! From a tree measure we tabulate conditional gap-survival and up-jump
//! probabilities, convert them into Gaussian comparison thresholds, and
//! simulate stopping times and jump signs from fresh normal increments. The
//! joint law of the simulated (gaps, signs) vector must reproduce the tree
//! law exactly in distribution; `verify_identity` tests this with a
//! chi-square fit and replays the value telescoping per sample.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::discretize::GRID_TOL;
use crate::error::{MotError, Result};
use crate::mot::{PathTree, TreeMeasure};
use crate::rng::stream;

/// Standard normal CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile; `0 → −∞`, `1 → +∞`. Rational approximation
/// with one Newton refinement against the CDF; absolute error below 1e−9.
pub fn gaussian_quantile(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(MotError::domain(format!("quantile argument {u} outside [0,1]")));
    }
    if u == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if u == 1.0 {
        return Ok(f64::INFINITY);
    }
    // Acklam's rational approximation
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const U_LOW: f64 = 0.02425;
    let mut x = if u < U_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - U_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let pdf = gaussian_pdf(x);
    if pdf > 0.0 {
        x -= (gaussian_cdf(x) - u) / pdf;
    }
    Ok(x)
}

/// One conditional outcome of the gap draw at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Branch at the alphabet gap into an (up, down) child pair.
    Branch { up: usize, down: usize },
    /// The path stops; the gap absorbs the remaining time to the horizon.
    Stop,
}

/// Exact conditional tables of a tree measure, indexed by node (= history).
#[derive(Debug, Clone)]
pub struct ConditionalTables {
    /// Decreasing gap alphabet, `alphabet[0] = T`.
    pub alphabet: Vec<f64>,
    /// Probability of an up initial value.
    pub phi0: f64,
    /// `psi[v][l]` = conditional probability that the next gap is `≥ t_l`,
    /// given the history reaching node `v`. Zero-mass histories are all-zero
    /// (the `0/0 ≡ 0` convention).
    pub psi: Vec<Vec<f64>>,
    /// `phi[v][l]` = conditional up probability given the gap `t_l` and
    /// continuation; `0/0 ≡ 0`.
    pub phi: Vec<Vec<f64>>,
    /// `outcomes[v]`: charged gap indices of node `v` with their targets.
    pub outcomes: Vec<BTreeMap<usize, Outcome>>,
}

fn alphabet_index(alphabet: &[f64], gap: f64) -> Option<usize> {
    alphabet
        .iter()
        .position(|&t| (t - gap).abs() <= GRID_TOL * t.max(1.0))
}

/// Tabulates the exact conditional laws of `q` over `tree`. The alphabet is
/// the union of charged branching gaps and stop gaps, with `T` first.
pub fn extract_conditionals(tree: &PathTree, q: &TreeMeasure) -> Result<ConditionalTables> {
    if q.masses.len() != tree.nodes.len() {
        return Err(MotError::config(format!(
            "measure has {} entries for {} nodes",
            q.masses.len(),
            tree.nodes.len()
        )));
    }
    let sub = q.subtree_masses(tree);
    let total = sub[0];
    if total <= 0.0 {
        return Err(MotError::domain("measure has no mass"));
    }

    // gap alphabet: horizon, branching gaps, and per-node stop gaps
    let mut alphabet = vec![tree.horizon];
    for (v, node) in tree.nodes.iter().enumerate() {
        for &c in &node.children {
            if v > 0 {
                let g = tree.menus[tree.nodes[v].depth][tree.nodes[c].gap_index];
                if alphabet_index(&alphabet, g).is_none() {
                    alphabet.push(g);
                }
            }
        }
        if v > 0 && q.masses[v] > 0.0 {
            let g = tree.horizon - node.elapsed;
            if alphabet_index(&alphabet, g).is_none() {
                alphabet.push(g);
            }
        }
    }
    alphabet.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let nn = tree.nodes.len();
    let ll = alphabet.len();
    let mut psi = vec![vec![0.0; ll]; nn];
    let mut phi = vec![vec![0.0; ll]; nn];
    let mut outcomes = vec![BTreeMap::new(); nn];

    for v in 1..nn {
        if sub[v] <= 0.0 {
            continue; // unreachable history: 0/0 ≡ 0
        }
        // charged outcomes: (alphabet index, kind, mass)
        let mut by_gap: BTreeMap<usize, (Option<usize>, Option<usize>)> = BTreeMap::new();
        for &c in &tree.nodes[v].children {
            if sub[c] <= 0.0 {
                continue;
            }
            let g = tree.menus[tree.nodes[v].depth][tree.nodes[c].gap_index];
            let l = alphabet_index(&alphabet, g)
                .ok_or_else(|| MotError::domain("branching gap missing from alphabet"))?;
            let slot = by_gap.entry(l).or_default();
            if tree.nodes[c].sign > 0 {
                slot.0 = Some(c);
            } else {
                slot.1 = Some(c);
            }
        }
        let mut masses: Vec<(usize, f64)> = Vec::new();
        for (&l, &(up, down)) in &by_gap {
            let m = up.map_or(0.0, |c| sub[c]) + down.map_or(0.0, |c| sub[c]);
            masses.push((l, m));
            let up_mass = up.map_or(0.0, |c| sub[c]);
            phi[v][l] = up_mass / m;
            // the dual-feasible trees always branch in pairs; a one-sided
            // charged branching would break the martingale property upstream
            outcomes[v].insert(
                l,
                Outcome::Branch {
                    up: up.unwrap_or(usize::MAX),
                    down: down.unwrap_or(usize::MAX),
                },
            );
        }
        if q.masses[v] > 0.0 {
            let g = tree.horizon - tree.nodes[v].elapsed;
            let l = alphabet_index(&alphabet, g).unwrap();
            masses.push((l, q.masses[v]));
            outcomes[v].insert(l, Outcome::Stop);
        }
        // survival Ψ by cumulative mass from the largest gap down
        masses.sort_by_key(|&(l, _)| l);
        let mut cum = 0.0;
        let mut iter = masses.iter().peekable();
        for l in 0..ll {
            while let Some(&&(ml, m)) = iter.peek() {
                if ml <= l {
                    // gaps are decreasing in l, so index ≤ l means gap ≥ t_l
                    cum += m;
                    iter.next();
                } else {
                    break;
                }
            }
            psi[v][l] = cum / sub[v];
        }
    }

    let phi0 = tree.nodes[0]
        .children
        .iter()
        .filter(|&&c| tree.nodes[c].sign > 0)
        .map(|&c| sub[c])
        .sum::<f64>()
        / total;

    Ok(ConditionalTables {
        alphabet,
        phi0,
        psi,
        phi,
        outcomes,
    })
}

/// Gaussian comparison thresholds per history; entries may be `±∞`.
#[derive(Debug, Clone)]
pub struct ThresholdTables {
    pub alphabet: Vec<f64>,
    /// Initial-sign threshold: up iff the driver at `T` falls below it.
    pub gamma0: f64,
    /// `theta[v][l]` compares the increment over `(t_{l+1}, t_l]`, variance
    /// `t_l − t_{l+1}`, against the survival ratio `Ψ(t_l)/Ψ(t_{l+1})`.
    pub theta: Vec<Vec<f64>>,
    /// `gamma[v][l]` compares an independent increment of variance `t_l`
    /// against the up probability `Φ(t_l)`.
    pub gamma: Vec<Vec<f64>>,
    pub outcomes: Vec<BTreeMap<usize, Outcome>>,
}

/// Converts conditional tables into Gaussian thresholds. A survival ratio of
/// 1 gives `Θ = +∞` (that gap is never selected); a ratio of 0 — including
/// `0/0` — gives `Θ = −∞`.
pub fn compute_thresholds(tables: &ConditionalTables) -> Result<ThresholdTables> {
    let ll = tables.alphabet.len();
    let horizon = tables.alphabet[0];
    let mut theta = Vec::with_capacity(tables.psi.len());
    let mut gamma = Vec::with_capacity(tables.psi.len());
    for v in 0..tables.psi.len() {
        let mut th = vec![f64::NEG_INFINITY; ll.saturating_sub(1)];
        let mut ga = vec![f64::NEG_INFINITY; ll];
        for l in 0..ll.saturating_sub(1) {
            let num = tables.psi[v][l];
            let den = tables.psi[v][l + 1];
            let ratio = if den == 0.0 { 0.0 } else { (num / den).min(1.0) };
            let var = tables.alphabet[l] - tables.alphabet[l + 1];
            th[l] = var.sqrt() * gaussian_quantile(ratio)?;
        }
        for l in 0..ll {
            ga[l] = tables.alphabet[l].sqrt() * gaussian_quantile(tables.phi[v][l])?;
        }
        theta.push(th);
        gamma.push(ga);
    }
    Ok(ThresholdTables {
        alphabet: tables.alphabet.clone(),
        gamma0: horizon.sqrt() * gaussian_quantile(tables.phi0)?,
        theta,
        gamma,
        outcomes: tables.outcomes.clone(),
    })
}

/// One simulated sample: the initial sign, the gap draws (alphabet indices),
/// the jump signs (0 marks the stop draw), and the node where the walk
/// stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftSample {
    pub initial_sign: i8,
    pub gap_indices: Vec<usize>,
    pub signs: Vec<i8>,
    pub terminal_node: usize,
}

#[derive(Debug, Clone)]
pub struct LiftSamples {
    pub samples: Vec<LiftSample>,
    /// Samples whose gap scan fell off the truncated alphabet.
    pub tail_count: usize,
    pub seed: u64,
}

/// Simulates the stopping-time construction on fresh Gaussian increments.
/// Deterministic given the seed; sample `i` uses stream `i`.
pub fn simulate_lift(
    tree: &PathTree,
    thresholds: &ThresholdTables,
    n_samples: usize,
    seed: u64,
) -> Result<LiftSamples> {
    let ll = thresholds.alphabet.len();
    let mut samples = Vec::with_capacity(n_samples);
    let mut tail_count = 0usize;
    // up/down roots
    let mut root_up = None;
    let mut root_down = None;
    for &c in &tree.nodes[0].children {
        if tree.nodes[c].sign > 0 {
            root_up = Some(c);
        } else {
            root_down = Some(c);
        }
    }
    let (root_up, root_down) = (
        root_up.ok_or_else(|| MotError::domain("missing up root"))?,
        root_down.ok_or_else(|| MotError::domain("missing down root"))?,
    );

    for i in 0..n_samples {
        let mut rng = stream(seed, i as u64);
        let horizon = thresholds.alphabet[0];
        let w0: f64 = rng.sample::<f64, _>(StandardNormal) * horizon.sqrt();
        let initial_sign: i8 = if w0 < thresholds.gamma0 { 1 } else { -1 };
        let mut node = if initial_sign > 0 { root_up } else { root_down };
        let mut gap_indices = Vec::new();
        let mut signs = Vec::new();
        let mut tail = false;
        loop {
            // scan the nested increments; the selected gap is one finer than
            // the coarsest exceedance, or the full horizon if none exceeds
            let mut k_star: Option<usize> = None;
            for j in 0..ll - 1 {
                let th = thresholds.theta[node][j];
                let inc: f64 = if th.is_finite() {
                    let var = thresholds.alphabet[j] - thresholds.alphabet[j + 1];
                    rng.sample::<f64, _>(StandardNormal) * var.sqrt()
                } else {
                    0.0 // comparison forced either way; keep the stream lean
                };
                let exceeds = if th == f64::INFINITY {
                    false
                } else if th == f64::NEG_INFINITY {
                    true
                } else {
                    inc > th
                };
                if exceeds {
                    k_star = Some(j);
                }
            }
            let l = match k_star {
                None => 0,
                Some(j) if j + 1 < ll => j + 1,
                Some(_) => {
                    tail = true;
                    break;
                }
            };
            match thresholds.outcomes[node].get(&l).copied() {
                Some(Outcome::Stop) => {
                    gap_indices.push(l);
                    signs.push(0);
                    break;
                }
                Some(Outcome::Branch { up, down }) => {
                    let var = thresholds.alphabet[l];
                    let w: f64 = rng.sample::<f64, _>(StandardNormal) * var.sqrt();
                    let sign: i8 = if w < thresholds.gamma[node][l] { 1 } else { -1 };
                    gap_indices.push(l);
                    signs.push(sign);
                    node = if sign > 0 { up } else { down };
                    if node == usize::MAX {
                        tail = true; // one-sided branching: off the charged tree
                        break;
                    }
                }
                None => {
                    tail = true; // drawn gap carries no mass at this history
                    break;
                }
            }
        }
        if tail {
            tail_count += 1;
        }
        samples.push(LiftSample {
            initial_sign,
            gap_indices,
            signs,
            terminal_node: node,
        });
    }
    Ok(LiftSamples {
        samples,
        tail_count,
        seed,
    })
}

/// Goodness-of-fit report for the simulated joint law.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Number of cells after pooling those with expected count < 5.
    pub cells: usize,
    pub pooled: usize,
    /// Worst deviation of the per-sample value telescoping identity.
    pub z_max_error: f64,
    pub tail_count: usize,
}

/// Chi-square test of the empirical stopped-node law against the exact tree
/// law, plus the exact replay of the value telescoping
/// `Z_{σ_k} = 1 + (1/N)·Σ_{i≤k} Y_i` per sample.
pub fn verify_identity(
    samples: &LiftSamples,
    tree: &PathTree,
    q: &TreeMeasure,
) -> Result<FitReport> {
    let n = samples.samples.len();
    if n == 0 {
        return Err(MotError::domain("no samples"));
    }
    let sub = q.subtree_masses(tree);
    let total = sub[0];

    // telescoping: the stopped node's value must equal the sign sum replay
    let mut z_max_error = 0.0f64;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &samples.samples {
        if s.signs.last().copied() != Some(0) {
            continue; // tail-flagged sample: no stop outcome recorded
        }
        *counts.entry(s.terminal_node).or_default() += 1;
        let sum: i64 = s.initial_sign as i64 + s.signs.iter().map(|&y| y as i64).sum::<i64>();
        let replay = (tree.n as i64 + sum) as f64 / tree.n as f64;
        z_max_error = z_max_error.max((replay - tree.value_of(s.terminal_node)).abs());
    }

    // cells: every charged stopping state
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (expected, observed)
    for v in 1..tree.nodes.len() {
        if q.masses[v] > 0.0 {
            let expected = q.masses[v] / total * n as f64;
            let observed = counts.get(&v).copied().unwrap_or(0) as f64;
            cells.push((expected, observed));
        }
    }
    // pool small cells (expected < 5) into the smallest-expected bucket
    cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut pooled = 0usize;
    while cells.len() > 1 && cells[0].0 < 5.0 {
        let (e, o) = cells.remove(0);
        cells[0].0 += e;
        cells[0].1 += o;
        pooled += 1;
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(e, o)| (o - e) * (o - e) / e)
        .sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(df as f64).unwrap().cdf(statistic)
    };
    Ok(FitReport {
        statistic,
        degrees_of_freedom: df,
        p_value,
        cells: cells.len(),
        pooled,
        z_max_error,
        tail_count: samples.tail_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::{project_marginal, Marginal};
    use crate::mot::{build_tree, primal_lp, MarginalMode, TreeConfig};
    use crate::payoffs::{Claim, ClaimKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_examples() {
        assert_abs_diff_eq!(gaussian_quantile(0.5).unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(gaussian_quantile(0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(gaussian_quantile(1.0).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(gaussian_quantile(0.975).unwrap(), 1.959964, epsilon = 1e-6);
        assert!(gaussian_quantile(-0.1).is_err());
        assert!(gaussian_quantile(1.1).is_err());
    }

    #[test]
    fn quantile_roundtrip_accuracy() {
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            let x = gaussian_quantile(u).unwrap();
            assert_abs_diff_eq!(gaussian_cdf(x), u, epsilon = 1e-9);
        }
        // strict monotonicity drives threshold monotonicity in Φ
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let x = gaussian_quantile(i as f64 / 200.0).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }

    /// Depth-2 lookback optimizer: a genuinely branching measure.
    fn depth2_instance() -> (PathTree, TreeMeasure) {
        let tree = build_tree(&TreeConfig::new(2, 2).with_menu(2)).unwrap();
        let mu = Marginal::atomic(vec![(0.5, 0.5), (1.5, 0.5)], 2.0).unwrap();
        let nu = project_marginal(&mu, 2).unwrap();
        let claim = Claim::new(ClaimKind::LookbackMax);
        let sol = primal_lp(&tree, &claim, &nu, MarginalMode::Exact).unwrap();
        (tree, sol.measure.unwrap())
    }

    #[test]
    fn conditionals_normalize_and_match_single_jump() {
        let (tree, q) = depth2_instance();
        let tables = extract_conditionals(&tree, &q).unwrap();
        assert_abs_diff_eq!(tables.alphabet[0], 1.0);
        let sub = q.subtree_masses(&tree);
        for v in 1..tree.nodes.len() {
            if sub[v] <= 0.0 {
                assert!(tables.psi[v].iter().all(|&p| p == 0.0));
                continue;
            }
            // Ψ at the finest gap must be 1: every outcome survives it
            let last = *tables.psi[v].last().unwrap();
            assert_abs_diff_eq!(last, 1.0, epsilon = 1e-12);
            for l in 1..tables.alphabet.len() {
                assert!(tables.psi[v][l] + 1e-12 >= tables.psi[v][l - 1]);
            }
            for (&l, outcome) in &tables.outcomes[v] {
                if let Outcome::Branch { .. } = outcome {
                    let phi = tables.phi[v][l];
                    assert!((0.0..=1.0).contains(&phi));
                }
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (tree, q) = depth2_instance();
        let tables = extract_conditionals(&tree, &q).unwrap();
        let th = compute_thresholds(&tables).unwrap();
        let a = simulate_lift(&tree, &th, 200, 7).unwrap();
        let b = simulate_lift(&tree, &th, 200, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = simulate_lift(&tree, &th, 200, 8).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn point_mass_measure_reproduced_exactly() {
        let tree = build_tree(&TreeConfig::new(2, 2).with_menu(2)).unwrap();
        // all mass stopped at the up root
        let up = tree.nodes[0]
            .children
            .iter()
            .copied()
            .find(|&c| tree.nodes[c].sign > 0)
            .unwrap();
        let mut masses = vec![0.0; tree.nodes.len()];
        masses[up] = 1.0;
        let q = TreeMeasure { masses };
        let tables = extract_conditionals(&tree, &q).unwrap();
        let th = compute_thresholds(&tables).unwrap();
        let samples = simulate_lift(&tree, &th, 500, 3).unwrap();
        assert_eq!(samples.tail_count, 0);
        for s in &samples.samples {
            assert_eq!(s.terminal_node, up);
            assert_eq!(s.signs, vec![0]);
        }
    }

    #[test]
    fn chi_square_accepts_true_law_and_z_exact() {
        let (tree, q) = depth2_instance();
        let tables = extract_conditionals(&tree, &q).unwrap();
        let th = compute_thresholds(&tables).unwrap();
        let samples = simulate_lift(&tree, &th, 20_000, 42).unwrap();
        assert_eq!(samples.tail_count, 0);
        let report = verify_identity(&samples, &tree, &q).unwrap();
        assert!(report.p_value > 0.001, "p = {}", report.p_value);
        assert!(report.z_max_error <= 1e-12);
    }

    #[test]
    fn chi_square_rejects_perturbed_thresholds() {
        let (tree, q) = depth2_instance();
        let tables = extract_conditionals(&tree, &q).unwrap();
        let mut th = compute_thresholds(&tables).unwrap();
        // shift the initial-sign conditional by 0.2
        let phi0 = (tables.phi0 + 0.2).min(1.0);
        th.gamma0 = tables.alphabet[0].sqrt() * gaussian_quantile(phi0).unwrap();
        let samples = simulate_lift(&tree, &th, 20_000, 42).unwrap();
        let report = verify_identity(&samples, &tree, &q).unwrap();
        assert!(report.p_value < 1e-6, "p = {}", report.p_value);
    }

    #[test]
    fn gap_frequencies_match_survival_differences() {
        let (tree, q) = depth2_instance();
        let tables = extract_conditionals(&tree, &q).unwrap();
        let th = compute_thresholds(&tables).unwrap();
        let n = 40_000usize;
        let samples = simulate_lift(&tree, &th, n, 11).unwrap();
        // first-gap frequencies conditional on the initial sign
        let mut counts: BTreeMap<(i8, usize), usize> = BTreeMap::new();
        for s in &samples.samples {
            *counts.entry((s.initial_sign, s.gap_indices[0])).or_default() += 1;
        }
        let sub = q.subtree_masses(&tree);
        for (&(sign, l), &c) in &counts {
            let root = tree.nodes[0]
                .children
                .iter()
                .copied()
                .find(|&v| tree.nodes[v].sign == sign)
                .unwrap();
            let p_gap = tables.psi[root][l]
                - if l == 0 { 0.0 } else { tables.psi[root][l - 1] };
            let p = (sub[root] / sub[0]) * p_gap;
            let freq = c as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * sigma + 1e-9,
                "gap {l} sign {sign}: freq {freq} vs p {p}"
            );
        }
    }
}
