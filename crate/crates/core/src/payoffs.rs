//! Path-dependent claims with tracked sup-norm Lipschitz constants.
//!
//! Every built-in claim is a function of the four path statistics
//! `(S_T, min S, max S, ∫S dt)`, optionally discounted at a constant rate and
//! clipped by the truncation transforms `G ∧ K` and `G ∨ (−c)`.

use serde::{Deserialize, Serialize};

use crate::error::{MotError, Result};
use crate::paths::{GridPath, SampledPath, StepPath};

/// Claim family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClaimKind {
    /// `(S_T − K)⁺`
    VanillaCall { strike: f64 },
    /// `max_t S_t`
    LookbackMax,
    /// `(1/T) ∫₀ᵀ S_t dt`
    AsianAverage,
    /// `(K − max_t S_t)⁺`
    LookbackPutOnMax { strike: f64 },
    /// `‖S‖·χ{‖S‖ ≥ K} + ‖S‖/K`; discontinuous in level, hedging target only
    AlphaK { strike: f64 },
    /// `c0 + c1·S_T + c2·min + c3·max + c4·average`
    Composite {
        constant: f64,
        terminal: f64,
        minimum: f64,
        maximum: f64,
        average: f64,
    },
}

/// A claim: a kind, a discount rate, and optional cap/floor truncations
/// applied in the order `(G ∧ cap) ∨ floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub kind: ClaimKind,
    pub rate: f64,
    pub cap: Option<f64>,
    pub floor: Option<f64>,
}

/// Exact path statistics shared by all claim kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStats {
    pub terminal: f64,
    pub minimum: f64,
    pub maximum: f64,
    pub integral: f64,
    pub horizon: f64,
}

impl PathStats {
    /// Trapezoid integral and knot extrema; both exact for affine segments.
    pub fn of_sampled(s: &SampledPath) -> PathStats {
        let mut integral = 0.0;
        let mut minimum = f64::INFINITY;
        let mut maximum = f64::NEG_INFINITY;
        for w in s.knots().windows(2) {
            integral += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        }
        for &(_, v) in s.knots() {
            minimum = minimum.min(v);
            maximum = maximum.max(v);
        }
        PathStats {
            terminal: s.terminal(),
            minimum,
            maximum,
            integral,
            horizon: s.horizon(),
        }
    }

    /// Rectangle integral over plateaus; the terminal value carries no time
    /// mass but does enter the extrema.
    pub fn of_step(p: &StepPath) -> PathStats {
        let mut integral = 0.0;
        let mut minimum = p.terminal;
        let mut maximum = p.terminal;
        for i in 0..p.values.len() {
            let t0 = p.times[i];
            let t1 = if i + 1 < p.times.len() { p.times[i + 1] } else { p.horizon };
            integral += p.values[i] * (t1 - t0);
            minimum = minimum.min(p.values[i]);
            maximum = maximum.max(p.values[i]);
        }
        PathStats {
            terminal: p.terminal,
            minimum,
            maximum,
            integral,
            horizon: p.horizon,
        }
    }

    /// Grid paths descend from continuous paths started at 1, so the extrema
    /// include that initial price even though the first plateau is `1 ± 1/N`.
    pub fn of_grid(g: &GridPath) -> PathStats {
        let mut stats = PathStats::of_step(&g.to_step());
        stats.minimum = stats.minimum.min(1.0);
        stats.maximum = stats.maximum.max(1.0);
        stats
    }
}

impl Claim {
    pub fn new(kind: ClaimKind) -> Claim {
        Claim {
            kind,
            rate: 0.0,
            cap: None,
            floor: None,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Claim {
        self.rate = rate;
        self
    }

    /// Sup-norm Lipschitz constant of the undiscounted payoff, or `None` for
    /// `alpha_K` (level-discontinuous).
    pub fn lipschitz(&self) -> Option<f64> {
        match &self.kind {
            ClaimKind::VanillaCall { .. }
            | ClaimKind::LookbackMax
            | ClaimKind::AsianAverage
            | ClaimKind::LookbackPutOnMax { .. } => Some(1.0),
            ClaimKind::AlphaK { .. } => None,
            ClaimKind::Composite {
                terminal,
                minimum,
                maximum,
                average,
                ..
            } => Some(terminal.abs() + minimum.abs() + maximum.abs() + average.abs()),
        }
    }

    fn raw_payoff(&self, st: &PathStats) -> f64 {
        match &self.kind {
            ClaimKind::VanillaCall { strike } => (st.terminal - strike).max(0.0),
            ClaimKind::LookbackMax => st.maximum,
            ClaimKind::AsianAverage => st.integral / st.horizon,
            ClaimKind::LookbackPutOnMax { strike } => (strike - st.maximum).max(0.0),
            ClaimKind::AlphaK { strike } => {
                let sup = st.maximum;
                let indicator = if sup >= *strike { sup } else { 0.0 };
                indicator + sup / strike
            }
            ClaimKind::Composite {
                constant,
                terminal,
                minimum,
                maximum,
                average,
            } => {
                constant
                    + terminal * st.terminal
                    + minimum * st.minimum
                    + maximum * st.maximum
                    + average * st.integral / st.horizon
            }
        }
    }

    /// Discounted, truncated payoff on precomputed statistics.
    pub fn eval_stats(&self, st: &PathStats) -> f64 {
        let mut v = (-self.rate * st.horizon).exp() * self.raw_payoff(st);
        if let Some(cap) = self.cap {
            v = v.min(cap);
        }
        if let Some(floor) = self.floor {
            v = v.max(floor);
        }
        v
    }

    pub fn eval_sampled(&self, s: &SampledPath) -> f64 {
        self.eval_stats(&PathStats::of_sampled(s))
    }

    pub fn eval_step(&self, p: &StepPath) -> f64 {
        self.eval_stats(&PathStats::of_step(p))
    }

    pub fn eval_grid(&self, g: &GridPath) -> f64 {
        self.eval_stats(&PathStats::of_grid(g))
    }
}

/// The maximal claim `α_K(S) = ‖S‖·χ{‖S‖ ≥ K} + ‖S‖/K`, `K > 1`.
pub fn alpha_claim(strike: f64) -> Result<Claim> {
    if !(strike > 1.0) {
        return Err(MotError::domain(format!("alpha_K needs K > 1, got {strike}")));
    }
    Ok(Claim::new(ClaimKind::AlphaK { strike }))
}

/// Pointwise `G ∧ cap`; preserves the Lipschitz constant.
pub fn truncate_above(mut claim: Claim, cap: f64) -> Claim {
    claim.cap = Some(match claim.cap {
        Some(c) => c.min(cap),
        None => cap,
    });
    claim
}

/// Pointwise `G ∨ (−c)`; preserves the Lipschitz constant.
pub fn floor_below(mut claim: Claim, c: f64) -> Claim {
    claim.floor = Some(match claim.floor {
        Some(f) => f.max(-c),
        None => -c,
    });
    claim
}

/// Result of the embedding-discrepancy bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Checks `|G(S) − G(F(S))| ≤ 4L‖S‖/N` where `F(S)` is the grid embedding of
/// `S` at resolution `N`.
pub fn discrepancy_bound_check(claim: &Claim, s: &SampledPath, n: u32) -> Result<DiscrepancyCheck> {
    let lip = claim.lipschitz().ok_or_else(|| {
        MotError::config("discrepancy bound needs a claim with a Lipschitz constant")
    })?;
    let lip = (-claim.rate * s.horizon()).exp() * lip;
    let embedded = crate::discretize::embed_f(s, n)?;
    let lhs = (claim.eval_sampled(s) - claim.eval_grid(&embedded)).abs();
    let rhs = 4.0 * lip * s.sup_norm() / n as f64;
    Ok(DiscrepancyCheck {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{
        generate_paths, sup_norm_distance, GeneratorModel, PathGeneratorConfig, PathView,
    };
    use approx::assert_abs_diff_eq;

    fn affine_up() -> SampledPath {
        SampledPath::new(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let s = affine_up();
        assert_abs_diff_eq!(Claim::new(ClaimKind::LookbackMax).eval_sampled(&s), 2.0);
        assert_abs_diff_eq!(
            Claim::new(ClaimKind::AsianAverage).eval_sampled(&SampledPath::constant_one(1.0)),
            1.0
        );
        let call = Claim::new(ClaimKind::VanillaCall { strike: 1.0 });
        let ends_at_1_5 = SampledPath::new(vec![(0.0, 1.0), (1.0, 1.5)]).unwrap();
        assert_abs_diff_eq!(call.eval_sampled(&ends_at_1_5), 0.5);
    }

    #[test]
    fn asian_integral_is_exact_on_affine_path() {
        // ∫₀¹ (1+t) dt = 1.5
        let s = affine_up();
        assert_abs_diff_eq!(Claim::new(ClaimKind::AsianAverage).eval_sampled(&s), 1.5);
    }

    #[test]
    fn alpha_examples() {
        let a = alpha_claim(2.0).unwrap();
        assert_abs_diff_eq!(a.eval_sampled(&SampledPath::constant_one(1.0)), 0.5);
        let peaked = SampledPath::new(vec![(0.0, 1.0), (0.5, 3.0), (1.0, 1.2)]).unwrap();
        assert_abs_diff_eq!(a.eval_sampled(&peaked), 4.5);
        let boundary = SampledPath::new(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_abs_diff_eq!(a.eval_sampled(&boundary), 3.0); // K + 1 at ‖S‖ = K
        assert!(alpha_claim(1.0).is_err());
        assert!(alpha_claim(0.5).is_err());
    }

    #[test]
    fn truncation_examples() {
        let s = affine_up();
        let capped = truncate_above(Claim::new(ClaimKind::LookbackMax), 1.0);
        assert_abs_diff_eq!(capped.eval_sampled(&s), 1.0);
        // cap above the payoff range is the identity
        let idle = truncate_above(Claim::new(ClaimKind::LookbackMax), 100.0);
        assert_abs_diff_eq!(idle.eval_sampled(&s), 2.0);
        let floored = floor_below(Claim::new(ClaimKind::LookbackPutOnMax { strike: 0.0 }), -0.5);
        assert!(floored.eval_sampled(&s) >= -0.5);
    }

    #[test]
    fn discounting_scales_payoff() {
        let s = affine_up();
        let claim = Claim::new(ClaimKind::LookbackMax).with_rate(0.1);
        assert_abs_diff_eq!(claim.eval_sampled(&s), 2.0 * (-0.1_f64).exp());
    }

    #[test]
    fn grid_extrema_include_initial_price() {
        // constant grid path at 0.5: the lookback still sees the start at 1
        let g = GridPath {
            n: 2,
            horizon: 1.0,
            initial_value: 0.5,
            jumps: vec![],
        };
        assert_abs_diff_eq!(Claim::new(ClaimKind::LookbackMax).eval_grid(&g), 1.0);
        assert_abs_diff_eq!(
            Claim::new(ClaimKind::AsianAverage).eval_grid(&g),
            0.5
        );
    }

    fn test_paths(seed: u64, count: usize) -> Vec<SampledPath> {
        let cfg = PathGeneratorConfig {
            model: GeneratorModel::GeometricBrownian,
            volatility: 0.5,
            step_count: 120,
            seed,
            horizon: 1.0,
        };
        generate_paths(&cfg, count).unwrap()
    }

    #[test]
    fn lipschitz_clause_one_on_random_pairs() {
        let paths = test_paths(17, 40);
        let claims = [
            Claim::new(ClaimKind::VanillaCall { strike: 1.1 }),
            Claim::new(ClaimKind::LookbackMax),
            Claim::new(ClaimKind::AsianAverage),
            Claim::new(ClaimKind::LookbackPutOnMax { strike: 1.3 }),
            Claim::new(ClaimKind::Composite {
                constant: 0.2,
                terminal: 1.0,
                minimum: -0.5,
                maximum: 0.7,
                average: 0.3,
            }),
        ];
        for claim in &claims {
            let lip = claim.lipschitz().unwrap();
            for pair in paths.chunks(2) {
                let d = sup_norm_distance(
                    &PathView::Sampled(&pair[0]),
                    &PathView::Sampled(&pair[1]),
                )
                .unwrap();
                let gap = (claim.eval_sampled(&pair[0]) - claim.eval_sampled(&pair[1])).abs();
                assert!(
                    gap <= lip * d + 1e-12,
                    "{:?}: |ΔG| = {gap} > L·d = {}",
                    claim.kind,
                    lip * d
                );
            }
        }
    }

    #[test]
    fn lipschitz_clause_two_time_perturbation() {
        // equal plateau values, jump times moved: |ΔG| ≤ L‖υ‖ Σ|Δt_k − Δt̃_k|
        let values = vec![1.0, 1.25, 1.5, 1.25];
        let a = StepPath {
            times: vec![0.0, 0.2, 0.5, 0.8],
            values: values.clone(),
            terminal: 1.25,
            horizon: 1.0,
        };
        let b = StepPath {
            times: vec![0.0, 0.25, 0.45, 0.85],
            values,
            terminal: 1.25,
            horizon: 1.0,
        };
        // gap deltas: Σ_k |Δt_k − Δt̃_k| over the four inter-jump gaps
        let gaps = |p: &StepPath| -> Vec<f64> {
            let mut ts = p.times.clone();
            ts.push(p.horizon);
            ts.windows(2).map(|w| w[1] - w[0]).collect()
        };
        let total: f64 = gaps(&a)
            .iter()
            .zip(gaps(&b))
            .map(|(x, y)| (x - y).abs())
            .sum();
        let sup = a.sup_abs();
        for claim in [
            Claim::new(ClaimKind::AsianAverage),
            Claim::new(ClaimKind::LookbackMax),
            Claim::new(ClaimKind::VanillaCall { strike: 1.0 }),
        ] {
            let lip = claim.lipschitz().unwrap();
            let gap = (claim.eval_step(&a) - claim.eval_step(&b)).abs();
            assert!(gap <= lip * sup * total + 1e-12);
        }
    }

    #[test]
    fn discrepancy_examples() {
        let s = affine_up();
        let check =
            discrepancy_bound_check(&Claim::new(ClaimKind::LookbackMax), &s, 4).unwrap();
        assert_abs_diff_eq!(check.rhs, 2.0);
        assert!(check.ok);
        assert!(discrepancy_bound_check(&alpha_claim(2.0).unwrap(), &s, 4).is_err());
    }

    #[test]
    fn discrepancy_sweep_small() {
        let paths = test_paths(99, 200);
        let claims = [
            Claim::new(ClaimKind::LookbackMax),
            Claim::new(ClaimKind::AsianAverage),
            Claim::new(ClaimKind::VanillaCall { strike: 1.0 }),
        ];
        for s in &paths {
            for claim in &claims {
                for n in [4_u32, 16] {
                    let check = discrepancy_bound_check(claim, s, n).unwrap();
                    assert!(check.ok, "lhs {} rhs {}", check.lhs, check.rhs);
                }
            }
        }
    }
}
