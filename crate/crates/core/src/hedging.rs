//! Semi-static portfolios on continuous paths.
//!
//! A portfolio is a static terminal payoff plus a dynamic position that is
//! constant between consecutive crossing times. Rules receive only the
//! crossing prefix up to the current time, so predictability is structural.
//! Includes the explicit super-hedge of the maximal claim `α_K` and the lift
//! of a discrete tree hedge to continuous paths.

use crate::discretize::{crossing_times, u_floor, CrossingDecomposition, GRID_TOL};
use crate::error::{MotError, Result};
use crate::marginals::{lift_static, LiftedStatic};
use crate::mot::PathTree;
use crate::paths::SampledPath;
use crate::payoffs::Claim;

/// Dynamic position rule: the position held on `(τ_k, τ_{k+1}]`.
///
/// The slices hold crossings `0..=k` only; a rule cannot look ahead.
pub trait DynamicRule: Send + Sync {
    fn position(&self, taus: &[f64], values: &[f64]) -> Result<f64>;
}

pub struct ZeroRule;

impl DynamicRule for ZeroRule {
    fn position(&self, _: &[f64], _: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
}

pub struct ConstantRule(pub f64);

impl DynamicRule for ConstantRule {
    fn position(&self, _: &[f64], _: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
}

/// Static leg of a portfolio.
pub enum StaticLeg {
    Zero,
    /// Lift of a grid payoff vector.
    Lifted(LiftedStatic),
    /// The closed-form `g^{(N,K)}` of the `α_K` hedge.
    Alpha { n: u32, strike: f64, p: f64 },
}

impl StaticLeg {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            StaticLeg::Zero => 0.0,
            StaticLeg::Lifted(l) => l.eval(x),
            StaticLeg::Alpha { n, strike, p } => {
                let cp = p / (p - 1.0);
                let base = (cp * x).powf(*p);
                (1.0 / strike) * (1.0 + (base - cp).max(0.0))
                    + (base - (cp * (strike - 1.0)).powf(*p)).max(0.0)
                    + 2.0 / *n as f64
            }
        }
    }
}

/// Semi-static portfolio tied to crossing resolution `N`: a static terminal
/// payoff and a dynamic rule, with a declared admissibility witness `(M, p)`.
pub struct SemiStaticPortfolio {
    pub n: u32,
    pub static_leg: StaticLeg,
    pub dynamic: Box<dyn DynamicRule>,
    pub bound_m: f64,
    pub exponent_p: f64,
}

/// Dynamic gains `∫₀ᵗ γ dS` at each crossing time: entry `j` is the value at
/// `τ_j`. The Stieltjes integral collapses to a telescoping sum.
pub fn dynamic_gains(pi: &SemiStaticPortfolio, dec: &CrossingDecomposition) -> Result<Vec<f64>> {
    let mut gains = vec![0.0];
    let mut acc = 0.0;
    for k in 0..dec.h {
        let pos = pi
            .dynamic
            .position(&dec.taus[..=k], &dec.values_at_taus[..=k])?;
        acc += pos * (dec.values_at_taus[k + 1] - dec.values_at_taus[k]);
        gains.push(acc);
    }
    Ok(gains)
}

/// Portfolio value `Z_t`: the static leg pays only at `t = T`; the dynamic
/// leg accrues over whole crossing intervals plus the partial current one.
pub fn portfolio_value(pi: &SemiStaticPortfolio, s: &SampledPath, t: f64) -> Result<f64> {
    let horizon = s.horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(MotError::domain(format!("time {t} outside [0, {horizon}]")));
    }
    let dec = crossing_times(s, pi.n)?;
    let mut z = if t >= horizon {
        self_static(pi, s.terminal())
    } else {
        0.0
    };
    for k in 0..dec.h {
        if dec.taus[k] >= t {
            break;
        }
        let pos = pi
            .dynamic
            .position(&dec.taus[..=k], &dec.values_at_taus[..=k])?;
        let upper = if dec.taus[k + 1] <= t {
            dec.values_at_taus[k + 1]
        } else {
            s.value_at(t)?
        };
        z += pos * (upper - dec.values_at_taus[k]);
    }
    Ok(z)
}

fn self_static(pi: &SemiStaticPortfolio, x: f64) -> f64 {
    pi.static_leg.eval(x)
}

/// Per-path super-replication and admissibility report.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperRepReport {
    /// `min_path (Z_T − G)`.
    pub min_margin: f64,
    /// Paths with `Z_T − G < −1e−9`.
    pub violations: Vec<usize>,
    /// Paths where `Z_t < −M(1 + ‖S‖^p)` at some crossing time.
    pub admissibility_violations: Vec<usize>,
}

/// Checks `Z_T ≥ G(S)` and the admissibility floor at all crossing times,
/// path by path.
pub fn check_superreplication(
    pi: &SemiStaticPortfolio,
    claim: &Claim,
    paths: &[SampledPath],
) -> Result<SuperRepReport> {
    check_superreplication_with_slack(pi, claim, paths, 0.0)
}

/// [`check_superreplication`] against the claim reduced by
/// `slack · ‖S‖ / N`, the discretization allowance of a lifted tree hedge.
pub fn check_superreplication_with_slack(
    pi: &SemiStaticPortfolio,
    claim: &Claim,
    paths: &[SampledPath],
    slack: f64,
) -> Result<SuperRepReport> {
    let mut min_margin = f64::INFINITY;
    let mut violations = Vec::new();
    let mut admissibility_violations = Vec::new();
    for (i, s) in paths.iter().enumerate() {
        let dec = crossing_times(s, pi.n)?;
        let gains = dynamic_gains(pi, &dec)?;
        let z_t = self_static(pi, s.terminal()) + gains[dec.h];
        let margin = z_t - claim.eval_sampled(s) + slack * s.sup_norm() / pi.n as f64;
        min_margin = min_margin.min(margin);
        if margin < -1e-9 {
            violations.push(i);
        }
        let floor = -pi.bound_m * (1.0 + s.sup_norm().powf(pi.exponent_p));
        if gains.iter().any(|&z| z < floor - 1e-9) {
            admissibility_violations.push(i);
        }
    }
    Ok(SuperRepReport {
        min_margin,
        violations,
        admissibility_violations,
    })
}

/// Dynamic rule of the explicit `α_K` super-hedge: a short running-max term
/// scaled by `1/K`, plus a second short term active once the path has reached
/// `K − 1`.
struct AlphaRule {
    strike: f64,
    p: f64,
}

impl DynamicRule for AlphaRule {
    fn position(&self, _taus: &[f64], values: &[f64]) -> Result<f64> {
        let p = self.p;
        let powmax = |vals: &[f64]| -> f64 {
            vals.iter()
                .map(|v| v.powf(p - 1.0))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let scale = p * p / (p - 1.0);
        let mut pos = -(scale / self.strike) * powmax(values);
        if let Some(theta) = values.iter().position(|&v| v >= self.strike - 1.0) {
            pos -= scale * powmax(&values[theta..]);
        }
        Ok(pos)
    }
}

/// The explicit portfolio super-replicating `α_K`; requires `N > K > 1` and
/// `p > 1`.
pub fn alpha_hedge(n: u32, strike: f64, p: f64) -> Result<SemiStaticPortfolio> {
    if !(p > 1.0) {
        return Err(MotError::domain(format!("alpha hedge needs p > 1, got {p}")));
    }
    if !(strike > 1.0) || (n as f64) <= strike {
        return Err(MotError::domain(format!(
            "alpha hedge needs N > K > 1, got N = {n}, K = {strike}"
        )));
    }
    Ok(SemiStaticPortfolio {
        n,
        static_leg: StaticLeg::Alpha { n, strike, p },
        dynamic: Box::new(AlphaRule { strike, p }),
        // both dynamic terms are bounded by 2·p²/(p−1)·‖S‖^{p−1}
        bound_m: 4.0 * p * p / (p - 1.0),
        exponent_p: p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaHedgeCheck {
    pub min_margin: f64,
    pub ok: bool,
}

/// Verifies the pathwise inequality
/// `g^{(N,K)}(S_t) + ∫₀ᵗ γ dS ≥ S̄_t/K + S̄_t·χ{S̄_t ≥ K}`
/// at every crossing time of `s` (including `t = 0` and `t = T`).
pub fn verify_alpha_hedge(n: u32, strike: f64, p: f64, s: &SampledPath) -> Result<AlphaHedgeCheck> {
    let pi = alpha_hedge(n, strike, p)?;
    let dec = crossing_times(s, n)?;
    let gains = dynamic_gains(&pi, &dec)?;
    let mut min_margin = f64::INFINITY;
    for j in 0..=dec.h {
        let t = dec.taus[j];
        let s_t = dec.values_at_taus[j];
        let running_max = s.running_max(t)?;
        let rhs = running_max / strike
            + if running_max >= strike { running_max } else { 0.0 };
        let lhs = pi.static_leg.eval(s_t) + gains[j];
        min_margin = min_margin.min(lhs - rhs);
    }
    Ok(AlphaHedgeCheck {
        min_margin,
        ok: min_margin >= -1e-9,
    })
}

/// Dynamic rule replaying a tree hedge on continuous paths.
///
/// On `(τ_k, τ_{k+1}]` it holds the tree position into the k-th jump of the
/// embedded grid path: the branching from the node after `k − 1` embedded
/// jumps via the snapped gap `Δτ̂_k`. Zero before the first crossing.
struct TreeRule {
    tree: PathTree,
    positions: Vec<f64>,
    branch_index: std::collections::BTreeMap<(usize, usize), usize>,
}

impl TreeRule {
    fn menu_index(&self, depth: usize, gap: f64) -> Result<usize> {
        let menu = self.tree.menus.get(depth).ok_or_else(|| MotError::OutOfTree {
            depth,
            detail: format!("tree allows at most {} jumps", self.tree.menus.len()),
        })?;
        menu.iter()
            .position(|&g| (g - gap).abs() <= GRID_TOL * g.max(1.0))
            .ok_or_else(|| MotError::OutOfTree {
                depth,
                detail: format!("snapped gap {gap} not in the depth-{} menu", depth + 1),
            })
    }

    fn child(&self, node: usize, gap_index: usize, sign: i8, depth: usize) -> Result<usize> {
        self.tree.nodes[node]
            .children
            .iter()
            .copied()
            .find(|&c| {
                self.tree.nodes[c].gap_index == gap_index && self.tree.nodes[c].sign == sign
            })
            .ok_or_else(|| MotError::OutOfTree {
                depth,
                detail: format!(
                    "no child of node {node} with gap index {gap_index} and sign {sign}"
                ),
            })
    }
}

impl DynamicRule for TreeRule {
    fn position(&self, taus: &[f64], values: &[f64]) -> Result<f64> {
        let k = taus.len() - 1;
        if k == 0 {
            return Ok(0.0); // no position before the first crossing
        }
        let sign_of = |i: usize| -> i8 {
            if values[i] > values[i - 1] {
                1
            } else {
                -1
            }
        };
        // embedded initial value carries the first crossing's sign; the i-th
        // embedded jump carries the (i+1)-th crossing's sign
        let mut node = self.child(0, 0, sign_of(1), 0)?;
        for i in 1..k {
            let gap = u_floor(i as u32, self.tree.n, taus[i] - taus[i - 1])?;
            let gi = self.menu_index(i - 1, gap)?;
            node = self.child(node, gi, sign_of(i + 1), i)?;
        }
        // position into the k-th embedded jump
        let gap = u_floor(k as u32, self.tree.n, taus[k] - taus[k - 1])?;
        let gi = self.menu_index(k - 1, gap)?;
        let bi = self
            .branch_index
            .get(&(node, gi))
            .copied()
            .ok_or_else(|| MotError::OutOfTree {
                depth: k,
                detail: format!("no branching with gap index {gi} at this history"),
            })?;
        Ok(self.positions[bi])
    }
}

/// Lifts a discrete tree hedge `(h, γ̂)` to a continuous-path portfolio:
/// static leg `𝓛(h)`, dynamic leg via [`TreeRule`]. `positions` is keyed in
/// [`PathTree::branchings`] order, as returned by the dual solver.
pub fn lift_tree_hedge(
    tree: &PathTree,
    h: &[f64],
    positions: &[f64],
    bound_m: f64,
    exponent_p: f64,
) -> Result<SemiStaticPortfolio> {
    let branchings = tree.branchings();
    if positions.len() != branchings.len() {
        return Err(MotError::config(format!(
            "expected {} positions, got {}",
            branchings.len(),
            positions.len()
        )));
    }
    let branch_index = branchings
        .iter()
        .enumerate()
        .map(|(bi, &(v, gi, _, _))| ((v, gi), bi))
        .collect();
    Ok(SemiStaticPortfolio {
        n: tree.n,
        static_leg: StaticLeg::Lifted(lift_static(h, tree.n)),
        dynamic: Box::new(TreeRule {
            tree: tree.clone(),
            positions: positions.to_vec(),
            branch_index,
        }),
        bound_m,
        exponent_p,
    })
}
