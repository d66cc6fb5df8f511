//! Crossing-time discretization.
//!
//! A continuous path is reduced to the times at which it has moved by exactly
//! `1/N` since the previous such time. From that decomposition we build the
//! piecewise-constant approximation `Ŝ`, snap the inter-crossing gaps onto
//! the dyadic-harmonic menus `U_k`, and embed the result as a [`GridPath`].

use crate::error::{MotError, Result};
use crate::paths::{GridPath, SampledPath, StepPath};

/// Tolerance for grid membership and value comparisons.
pub const GRID_TOL: f64 = 1e-9;

/// Smallest snapped gap we allow; smaller values are floored and flagged.
pub const SNAP_FLOOR: f64 = 2.220446049250313e-16; // 2^-52

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

fn unit(k: u32, n: u32) -> f64 {
    1.0 / (2.0_f64.powi(k as i32) * n as f64)
}

/// True when `gap` lies on the menu `U_k = {i·q} ∪ {q/i}` with `q = 1/(2^k N)`,
/// up to relative tolerance.
pub fn u_contains(k: u32, n: u32, gap: f64) -> bool {
    if !(gap > 0.0) {
        return false;
    }
    let q = unit(k, n);
    if gap >= q {
        let i = (gap / q).round();
        i >= 1.0 && (i * q - gap).abs() <= GRID_TOL * q.max(gap)
    } else {
        let i = (q / gap).round();
        i >= 1.0 && (q / i - gap).abs() <= GRID_TOL * gap
    }
}

/// Largest element of `U_k` strictly below `x`.
///
/// Exists for every `x > 0` since the harmonic branch of the menu accumulates
/// at zero.
pub fn u_floor(k: u32, n: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(MotError::domain(format!("u_floor needs x > 0, got {x}")));
    }
    let q = unit(k, n);
    // menu spacing below one ulp of x: the floor is indistinguishable from x
    if !(q > 0.0) || q <= x * f64::EPSILON {
        return Ok(next_down(x));
    }
    if x > q {
        let mut i = (x / q).floor();
        while i >= 1.0 && i * q >= x {
            i -= 1.0;
        }
        while (i + 1.0) * q < x {
            i += 1.0;
        }
        if i >= 1.0 {
            return Ok(i * q);
        }
    }
    let mut j = (q / x).floor().max(1.0);
    while q / j >= x {
        j += 1.0;
    }
    while j > 1.0 && q / (j - 1.0) < x {
        j -= 1.0;
    }
    Ok(q / j)
}

/// Crossing decomposition of a continuous path at resolution `N`.
///
/// `taus` is `τ_0 = 0 < τ_1 < … < τ_H = T` where `τ_k` is the first time the
/// path has moved by exactly `1/N` since `τ_{k−1}`, capped at `T`. `offsets`
/// holds the integer grid index `j_k` with `S_{τ_k} = 1 + j_k/N` for `k < H`;
/// the final entry of `values_at_taus` is the raw terminal value `S_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingDecomposition {
    pub n: u32,
    pub taus: Vec<f64>,
    pub h: usize,
    pub values_at_taus: Vec<f64>,
    pub offsets: Vec<i64>,
}

fn grid_value(n: u32, offset: i64) -> f64 {
    (n as i64 + offset) as f64 / n as f64
}

/// Computes the crossing times of `s` at resolution `n`.
///
/// Crossings are solved in closed form on each affine segment, so `H` does not
/// depend on any root-finding tolerance.
pub fn crossing_times(s: &SampledPath, n: u32) -> Result<CrossingDecomposition> {
    if n == 0 {
        return Err(MotError::domain("resolution N must be positive"));
    }
    let horizon = s.horizon();
    let mut taus = vec![0.0];
    let mut offsets = vec![0_i64];
    let mut values = vec![1.0];
    let mut j = 0_i64;
    // (a, ya): last event point; ya is exact on the grid after each crossing.
    let mut a = 0.0;
    let mut ya = 1.0;
    'outer: for w in s.knots().windows(2) {
        let (t0, y0) = w[0];
        let (t1, y1) = w[1];
        if a < t0 {
            a = t0;
            ya = y0;
        }
        loop {
            if a >= t1 {
                break;
            }
            let up = grid_value(n, j + 1);
            let dn = grid_value(n, j - 1);
            let (target, next_j) = if y1 > ya && y1 >= up {
                (up, j + 1)
            } else if y1 < ya && y1 <= dn {
                (dn, j - 1)
            } else {
                break;
            };
            let t_star = a + (target - ya) * (t1 - a) / (y1 - ya);
            let t_star = t_star.min(t1);
            taus.push(t_star);
            offsets.push(next_j);
            values.push(target);
            j = next_j;
            a = t_star;
            ya = target;
            if t_star >= horizon {
                break 'outer;
            }
        }
    }
    let h;
    if *taus.last().unwrap() >= horizon {
        h = taus.len() - 1;
        *taus.last_mut().unwrap() = horizon;
        *values.last_mut().unwrap() = s.terminal();
        offsets.pop();
    } else {
        h = taus.len();
        taus.push(horizon);
        values.push(s.terminal());
    }
    Ok(CrossingDecomposition {
        n,
        taus,
        h,
        values_at_taus: values,
        offsets,
    })
}

fn terminal_sign(dec: &CrossingDecomposition) -> f64 {
    // sign(0) := +1 so the terminal value stays on the grid
    let plateau = grid_value(dec.n, *dec.offsets.last().unwrap());
    let diff = dec.values_at_taus[dec.h] - plateau;
    if diff < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Piecewise-constant approximation `Ŝ` from a crossing decomposition:
/// `S_{τ_k}` on `[τ_k, τ_{k+1})`, with terminal value pushed to the adjacent
/// grid point in the direction of `S_T`.
pub fn hat_from_decomposition(dec: &CrossingDecomposition) -> StepPath {
    let horizon = *dec.taus.last().unwrap();
    let times: Vec<f64> = dec.taus[..dec.h].to_vec();
    let values: Vec<f64> = dec.offsets.iter().map(|&j| grid_value(dec.n, j)).collect();
    let terminal =
        grid_value(dec.n, *dec.offsets.last().unwrap()) + terminal_sign(dec) / dec.n as f64;
    StepPath {
        times,
        values,
        terminal,
        horizon,
    }
}

/// Convenience wrapper: crossing decomposition plus [`hat_from_decomposition`].
pub fn hat_path(s: &SampledPath, n: u32) -> Result<StepPath> {
    Ok(hat_from_decomposition(&crossing_times(s, n)?))
}

/// Gaps of a crossing decomposition snapped down onto the menus `U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnappedGaps {
    pub n: u32,
    /// `τ̂_0 = 0 < τ̂_1 < … < τ̂_{H−1} < τ̂_H = T`.
    pub hat_taus: Vec<f64>,
    /// `Δτ̂_k ∈ U_k` for `k = 1..H−1`.
    pub deltas: Vec<f64>,
    /// True when some gap hit the [`SNAP_FLOOR`] cutoff.
    pub floored: bool,
}

/// Snaps each interior gap `Δτ_k` to the largest menu element strictly below
/// it. Each per-gap error is below `1/(2^k N)`, so the total is below `1/N`.
pub fn snap_gaps(dec: &CrossingDecomposition) -> Result<SnappedGaps> {
    let horizon = *dec.taus.last().unwrap();
    let mut hat_taus = vec![0.0];
    let mut deltas = Vec::new();
    let mut floored = false;
    for k in 1..dec.h {
        let gap = dec.taus[k] - dec.taus[k - 1];
        let mut snapped = u_floor(k as u32, dec.n, gap)?;
        if snapped < SNAP_FLOOR {
            snapped = SNAP_FLOOR;
            floored = true;
        }
        deltas.push(snapped);
        hat_taus.push(hat_taus[k - 1] + snapped);
    }
    hat_taus.push(horizon);
    Ok(SnappedGaps {
        n: dec.n,
        hat_taus,
        deltas,
        floored,
    })
}

/// Embeds a continuous path into the grid path class.
///
/// The output drops the flat initial plateau of `Ŝ`: its k-th jump is the
/// (k+1)-th jump of `Ŝ`, placed at the snapped time `τ̂_k`. With no crossing
/// before `T` the result is the constant path `1 + sign(S_T − 1)/N`.
pub fn embed_f(s: &SampledPath, n: u32) -> Result<GridPath> {
    let dec = crossing_times(s, n)?;
    let snapped = snap_gaps(&dec)?;
    embed_from(&dec, &snapped)
}

/// [`embed_f`] on a precomputed decomposition.
pub fn embed_from(dec: &CrossingDecomposition, snapped: &SnappedGaps) -> Result<GridPath> {
    let n = dec.n;
    let horizon = *dec.taus.last().unwrap();
    let sign = terminal_sign(dec);
    if dec.h == 1 {
        return Ok(GridPath {
            n,
            horizon,
            initial_value: 1.0 + sign / n as f64,
            jumps: Vec::new(),
        });
    }
    let initial_value = grid_value(n, dec.offsets[1]);
    let mut jumps = Vec::with_capacity(dec.h - 1);
    for k in 1..dec.h - 1 {
        let sign_k = (dec.offsets[k + 1] - dec.offsets[k]) as i8;
        jumps.push((snapped.hat_taus[k], sign_k));
    }
    jumps.push((snapped.hat_taus[dec.h - 1], sign as i8));
    Ok(GridPath {
        n,
        horizon,
        initial_value,
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{
        generate_paths, validate_grid_path, GeneratorModel, PathGeneratorConfig,
    };
    use approx::assert_abs_diff_eq;

    #[test]
    fn u_floor_examples() {
        assert_abs_diff_eq!(u_floor(1, 1, 0.6).unwrap(), 0.5);
        assert_abs_diff_eq!(u_floor(1, 1, 0.5).unwrap(), 0.25);
        assert_abs_diff_eq!(u_floor(2, 1, 1e-6).unwrap(), 1.0 / 1000004.0);
        assert!(u_floor(1, 1, 0.0).is_err());
        assert!(u_floor(1, 1, -1.0).is_err());
    }

    #[test]
    fn u_floor_is_member_and_strictly_below() {
        for k in 1..6 {
            for n in [1_u32, 2, 4, 16] {
                for &x in &[1.7, 1.0, 0.31, 0.0625, 1e-3, 3e-8] {
                    let u = u_floor(k, n, x).unwrap();
                    assert!(u < x, "u_floor({k},{n},{x}) = {u} not below x");
                    assert!(u_contains(k, n, u), "u_floor({k},{n},{x}) = {u} off menu");
                }
            }
        }
    }

    #[test]
    fn crossing_times_trivial() {
        let s = SampledPath::constant_one(1.0);
        let dec = crossing_times(&s, 5).unwrap();
        assert_eq!(dec.taus, vec![0.0, 1.0]);
        assert_eq!(dec.h, 1);
    }

    #[test]
    fn crossing_times_affine_up() {
        let s = SampledPath::new(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let dec = crossing_times(&s, 4).unwrap();
        assert_eq!(dec.taus, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(dec.h, 4);
        assert_eq!(dec.offsets, vec![0, 1, 2, 3]);
        assert_eq!(dec.values_at_taus, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    }

    #[test]
    fn crossing_exactly_at_horizon() {
        // |ΔS| reaches 1/2 exactly at T: the crossing is T itself, H = 1
        let s = SampledPath::new(vec![(0.0, 1.0), (1.0, 0.5)]).unwrap();
        let dec = crossing_times(&s, 2).unwrap();
        assert_eq!(dec.taus, vec![0.0, 1.0]);
        assert_eq!(dec.h, 1);
        assert_eq!(dec.values_at_taus, vec![1.0, 0.5]);
    }

    #[test]
    fn hat_path_trivial_pushes_terminal_up() {
        let s = SampledPath::constant_one(1.0);
        let hat = hat_path(&s, 4).unwrap();
        assert_eq!(hat.value_at(0.9), 1.0);
        assert_abs_diff_eq!(hat.terminal, 1.25);
    }

    #[test]
    fn hat_path_affine() {
        let s = SampledPath::new(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let hat = hat_path(&s, 4).unwrap();
        assert_eq!(hat.value_at(0.1), 1.0);
        assert_eq!(hat.value_at(0.3), 1.25);
        assert_eq!(hat.value_at(0.6), 1.5);
        assert_eq!(hat.value_at(0.8), 1.75);
        assert_abs_diff_eq!(hat.terminal, 2.0);
    }

    #[test]
    fn hat_path_close_to_source_before_horizon() {
        let cfg = PathGeneratorConfig {
            model: GeneratorModel::GeometricBrownian,
            volatility: 0.4,
            step_count: 200,
            seed: 5,
            horizon: 1.0,
        };
        for s in generate_paths(&cfg, 30).unwrap() {
            for n in [2_u32, 8] {
                let hat = hat_path(&s, n).unwrap();
                for i in 0..100 {
                    let t = i as f64 / 100.0;
                    let d = (s.value_at(t).unwrap() - hat.value_at(t)).abs();
                    assert!(d <= 1.0 / n as f64 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn snap_gaps_examples() {
        let s = SampledPath::constant_one(1.0);
        let dec = crossing_times(&s, 1).unwrap();
        let sg = snap_gaps(&dec).unwrap();
        assert_eq!(sg.hat_taus, vec![0.0, 1.0]);
        assert!(sg.deltas.is_empty());

        // τ = (0, 0.6, 1.0) via the path 1 → 0 hitting 1 − 1/1 never, so
        // build it directly: one crossing at 0.6 down to 0, N = 1.
        let dec = CrossingDecomposition {
            n: 1,
            taus: vec![0.0, 0.6, 1.0],
            h: 2,
            values_at_taus: vec![1.0, 2.0, 2.3],
            offsets: vec![0, 1],
        };
        let sg = snap_gaps(&dec).unwrap();
        assert_eq!(sg.hat_taus, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn snap_gap_total_error_below_one_over_n() {
        let cfg = PathGeneratorConfig {
            model: GeneratorModel::GeometricBrownian,
            volatility: 0.5,
            step_count: 300,
            seed: 9,
            horizon: 1.0,
        };
        for s in generate_paths(&cfg, 50).unwrap() {
            for n in [2_u32, 8, 32] {
                let dec = crossing_times(&s, n).unwrap();
                let sg = snap_gaps(&dec).unwrap();
                let mut total = 0.0;
                for k in 1..dec.h {
                    let gap = dec.taus[k] - dec.taus[k - 1];
                    let err = gap - sg.deltas[k - 1];
                    assert!(err >= 0.0);
                    assert!(err <= 1.0 / (2.0_f64.powi(k as i32) * n as f64) + 1e-15);
                    assert!(sg.hat_taus[k] < dec.taus[k]);
                    total += err;
                }
                assert!(total <= 1.0 / n as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn embed_trivial_and_affine() {
        let s = SampledPath::constant_one(1.0);
        let g = embed_f(&s, 4).unwrap();
        assert_abs_diff_eq!(g.initial_value, 1.25);
        assert!(g.jumps.is_empty());
        assert!(validate_grid_path(&g).ok());

        let s = SampledPath::new(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let g = embed_f(&s, 4).unwrap();
        assert_abs_diff_eq!(g.initial_value, 1.25);
        assert_eq!(g.jumps.len(), 3);
        assert!(g.jumps.iter().all(|&(_, s)| s == 1));
        assert_abs_diff_eq!(g.terminal(), 2.0);
        assert!(validate_grid_path(&g).ok(), "{:?}", validate_grid_path(&g));
    }

    #[test]
    fn embed_always_validates() {
        let cfg = PathGeneratorConfig {
            model: GeneratorModel::GeometricBrownian,
            volatility: 0.6,
            step_count: 250,
            seed: 21,
            horizon: 1.0,
        };
        for s in generate_paths(&cfg, 40).unwrap() {
            for n in [1_u32, 2, 4, 16] {
                let g = embed_f(&s, n).unwrap();
                let report = validate_grid_path(&g);
                assert!(report.ok(), "{report:?}");
            }
        }
    }

    #[test]
    fn refinement_interlacing() {
        // every (τ^N_{k-1}, τ^N_k] interval contains a τ^{2N} point
        let cfg = PathGeneratorConfig {
            model: GeneratorModel::GeometricBrownian,
            volatility: 0.5,
            step_count: 200,
            seed: 33,
            horizon: 1.0,
        };
        for s in generate_paths(&cfg, 20).unwrap() {
            let coarse = crossing_times(&s, 4).unwrap();
            let fine = crossing_times(&s, 8).unwrap();
            for k in 1..=coarse.h {
                let lo = coarse.taus[k - 1];
                let hi = coarse.taus[k];
                let found = fine
                    .taus
                    .iter()
                    .any(|&t| t > lo && t <= hi + 1e-15);
                assert!(found || hi >= s.horizon());
            }
        }
    }
}
