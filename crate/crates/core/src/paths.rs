//! Path representations and generators.
//!
//! Continuous price trajectories are carried as piecewise-linear
//! [`SampledPath`]s normalized to start at 1. Discretized trajectories are
//! right-continuous step functions, either free-form ([`StepPath`]) or members
//! of the constrained grid class ([`GridPath`]): paths jumping by exactly
//! `1/N` whose k-th inter-jump gap is drawn from the dyadic-harmonic menu
//! `U_k`.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::discretize::{u_contains, GRID_TOL};
use crate::error::{MotError, Result};
use crate::rng;

/// Positivity floor for generators that could otherwise cross zero.
pub const POSITIVITY_FLOOR: f64 = 1e-9;

/// A strictly positive continuous path on `[0, T]`, piecewise-linear between
/// knots, with `S_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    knots: Vec<(f64, f64)>,
}

impl SampledPath {
    /// Builds a path from `(time, value)` knots spanning `[0, T]`.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(MotError::domain("path needs at least two knots"));
        }
        if knots[0].0 != 0.0 {
            return Err(MotError::domain("first knot time must be 0"));
        }
        if (knots[0].1 - 1.0).abs() > GRID_TOL {
            return Err(MotError::domain("path value at time 0 must be 1"));
        }
        let horizon = knots[knots.len() - 1].0;
        if !(horizon > 0.0) {
            return Err(MotError::domain("horizon must be positive"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(MotError::domain("knot times must be strictly increasing"));
            }
        }
        for &(_, v) in &knots {
            if !(v > 0.0) {
                return Err(MotError::domain("all knot values must be strictly positive"));
            }
        }
        Ok(SampledPath { knots })
    }

    /// Constant path `S ≡ 1` on `[0, T]`.
    pub fn constant_one(horizon: f64) -> Self {
        SampledPath::new(vec![(0.0, 1.0), (horizon, 1.0)]).unwrap()
    }

    pub fn horizon(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn terminal(&self) -> f64 {
        self.knots[self.knots.len() - 1].1
    }

    /// Value at `t`, affine interpolation between knots.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t > self.horizon() {
            return Err(MotError::domain(format!("time {t} outside [0, {}]", self.horizon())));
        }
        let idx = match self
            .knots
            .binary_search_by(|&(kt, _)| kt.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Ok(self.knots[i].1),
            Err(i) => i,
        };
        let (t0, y0) = self.knots[idx - 1];
        let (t1, y1) = self.knots[idx];
        Ok(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
    }

    /// Exact running maximum `max_{0 ≤ u ≤ t} S_u`.
    pub fn running_max(&self, t: f64) -> Result<f64> {
        let v_t = self.value_at(t)?;
        let mut best = v_t;
        for &(kt, kv) in &self.knots {
            if kt > t {
                break;
            }
            if kv > best {
                best = kv;
            }
        }
        Ok(best)
    }

    /// Exact running minimum over `[0, t]`.
    pub fn running_min(&self, t: f64) -> Result<f64> {
        let v_t = self.value_at(t)?;
        let mut best = v_t;
        for &(kt, kv) in &self.knots {
            if kt > t {
                break;
            }
            if kv < best {
                best = kv;
            }
        }
        Ok(best)
    }

    /// Sup norm `‖S‖ = max_t S_t` (paths are positive).
    pub fn sup_norm(&self) -> f64 {
        self.running_max(self.horizon()).unwrap()
    }
}

/// A right-continuous step function on `[0, T]` with an explicit value at `T`.
///
/// The function equals `values[i]` on `[times[i], times[i+1])`, equals
/// `values.last()` on `[times.last(), T)` and `terminal` at `t = T`. Crossing
/// discretizations carry a terminal value that may differ from the last
/// plateau.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub terminal: f64,
    pub horizon: f64,
}

impl StepPath {
    pub fn value_at(&self, t: f64) -> f64 {
        if t >= self.horizon {
            return self.terminal;
        }
        let idx = self.times.partition_point(|&x| x <= t);
        self.values[idx - 1]
    }

    /// Left limit at `t` (equals the value for continuity points).
    pub fn left_limit(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        let idx = self.times.partition_point(|&x| x < t);
        self.values[idx - 1]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .chain(std::iter::once(&self.terminal))
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

/// An element of (a truncation of) the grid path class: initial value
/// `1 ± 1/N`, jumps of exactly `±1/N` strictly before `T`, k-th gap in `U_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub n: u32,
    pub horizon: f64,
    pub initial_value: f64,
    /// `(jump_time, sign)` pairs, times strictly increasing.
    pub jumps: Vec<(f64, i8)>,
}

impl GridPath {
    /// Plateau values, starting with the initial value.
    pub fn values(&self) -> Vec<f64> {
        let step = 1.0 / self.n as f64;
        let mut vals = Vec::with_capacity(self.jumps.len() + 1);
        let mut v = self.initial_value;
        vals.push(v);
        for &(_, s) in &self.jumps {
            v += s as f64 * step;
            vals.push(v);
        }
        vals
    }

    pub fn terminal(&self) -> f64 {
        let step = 1.0 / self.n as f64;
        self.initial_value + self.jumps.iter().map(|&(_, s)| s as f64).sum::<f64>() * step
    }

    pub fn to_step(&self) -> StepPath {
        let vals = self.values();
        let mut times = Vec::with_capacity(vals.len());
        times.push(0.0);
        times.extend(self.jumps.iter().map(|&(t, _)| t));
        let terminal = *vals.last().unwrap();
        StepPath {
            times,
            values: vals,
            terminal,
            horizon: self.horizon,
        }
    }
}

/// One violated grid-path membership condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridViolation {
    /// Condition index: 1 initial value, 2 jump-time layout, 3 jump size,
    /// 4 gap menu, 5 nonnegativity.
    pub condition: u8,
    pub detail: String,
}

/// Membership report for the grid path class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridValidation {
    pub violations: Vec<GridViolation>,
}

impl GridValidation {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the four membership conditions plus nonnegativity; violations are
/// data, not errors.
pub fn validate_grid_path(f: &GridPath) -> GridValidation {
    let mut violations = Vec::new();
    let step = 1.0 / f.n as f64;
    let lo = 1.0 - step;
    let hi = 1.0 + step;
    if (f.initial_value - lo).abs() > GRID_TOL && (f.initial_value - hi).abs() > GRID_TOL {
        violations.push(GridViolation {
            condition: 1,
            detail: format!("initial value {} not in {{{lo}, {hi}}}", f.initial_value),
        });
    }
    let mut prev = 0.0;
    for (k, &(t, s)) in f.jumps.iter().enumerate() {
        if t <= prev {
            violations.push(GridViolation {
                condition: 2,
                detail: format!("jump time {t} at index {k} not strictly increasing"),
            });
        }
        if t >= f.horizon {
            violations.push(GridViolation {
                condition: 2,
                detail: format!("jump time {t} at index {k} not strictly before T = {}", f.horizon),
            });
        }
        if s != 1 && s != -1 {
            violations.push(GridViolation {
                condition: 3,
                detail: format!("jump sign {s} at index {k} not in {{-1, +1}}"),
            });
        }
        let gap = t - prev;
        if gap > 0.0 && !u_contains(k as u32 + 1, f.n, gap) {
            violations.push(GridViolation {
                condition: 4,
                detail: format!("gap {gap} at index {k} not in U_{}", k + 1),
            });
        }
        prev = t;
    }
    for (k, v) in f.values().iter().enumerate() {
        if *v < -GRID_TOL {
            violations.push(GridViolation {
                condition: 5,
                detail: format!("value {v} after jump {k} is negative"),
            });
        }
    }
    GridValidation { violations }
}

/// A uniform view over the three path representations, used by claim
/// evaluation and the sup-norm metric.
#[derive(Debug, Clone, Copy)]
pub enum PathView<'a> {
    Sampled(&'a SampledPath),
    Step(&'a StepPath),
    Grid(&'a StepPath),
}

impl<'a> PathView<'a> {
    pub fn horizon(&self) -> f64 {
        match self {
            PathView::Sampled(p) => p.horizon(),
            PathView::Step(p) | PathView::Grid(p) => p.horizon,
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            PathView::Sampled(p) => p.value_at(t).unwrap(),
            PathView::Step(p) | PathView::Grid(p) => p.value_at(t),
        }
    }

    pub fn left_limit(&self, t: f64) -> f64 {
        match self {
            PathView::Sampled(p) => p.value_at(t).unwrap(),
            PathView::Step(p) | PathView::Grid(p) => p.left_limit(t),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PathView::Sampled(p) => p.knots().iter().map(|&(t, _)| t).collect(),
            PathView::Step(p) | PathView::Grid(p) => {
                let mut ts = p.times.clone();
                ts.push(p.horizon);
                ts
            }
        }
    }
}

/// Exact sup-norm distance between two paths sharing the same horizon.
///
/// Both representations are affine or constant between breakpoints, so the
/// supremum is attained at a breakpoint (as a value or a left limit).
pub fn sup_norm_distance(a: &PathView, b: &PathView) -> Result<f64> {
    if (a.horizon() - b.horizon()).abs() > GRID_TOL {
        return Err(MotError::domain(format!(
            "mismatched horizons: {} vs {}",
            a.horizon(),
            b.horizon()
        )));
    }
    let mut points = a.breakpoints();
    points.extend(b.breakpoints());
    points.sort_by(|x, y| x.partial_cmp(y).unwrap());
    points.dedup();
    let mut sup = 0.0_f64;
    for &t in &points {
        sup = sup.max((a.value_at(t) - b.value_at(t)).abs());
        sup = sup.max((a.left_limit(t) - b.left_limit(t)).abs());
    }
    Ok(sup)
}

/// Generator model for synthetic test paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneratorModel {
    /// Geometric Brownian motion, exact log-Euler increments.
    GeometricBrownian,
    /// Arithmetic Brownian motion reflected at the positivity floor.
    ArithmeticBrownianReflected,
    /// Pass-through of explicit knot lists.
    PiecewiseLinearCustom(Vec<Vec<(f64, f64)>>),
}

impl GeneratorModel {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "geometric-brownian" | "gbm" => Ok(GeneratorModel::GeometricBrownian),
            "arithmetic-brownian-reflected" | "abm" => {
                Ok(GeneratorModel::ArithmeticBrownianReflected)
            }
            other => Err(MotError::config(format!("unknown generator model '{other}'"))),
        }
    }
}

/// Configuration for [`generate_paths`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGeneratorConfig {
    pub model: GeneratorModel,
    pub volatility: f64,
    pub step_count: usize,
    pub seed: u64,
    pub horizon: f64,
}

impl PathGeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_count < 2 {
            return Err(MotError::config("step_count must be at least 2"));
        }
        if !(self.volatility >= 0.0) {
            return Err(MotError::config("volatility must be nonnegative"));
        }
        if !(self.horizon > 0.0) {
            return Err(MotError::config("horizon must be positive"));
        }
        Ok(())
    }
}

/// Generates `count` paths, deterministically given the seed. Path `i` uses
/// random stream `i`, so subsets can be regenerated independently.
pub fn generate_paths(cfg: &PathGeneratorConfig, count: usize) -> Result<Vec<SampledPath>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(count);
    if let GeneratorModel::PiecewiseLinearCustom(knot_lists) = &cfg.model {
        for knots in knot_lists.iter().take(count) {
            out.push(SampledPath::new(knots.clone())?);
        }
        return Ok(out);
    }
    let dt = cfg.horizon / cfg.step_count as f64;
    let sqrt_dt = dt.sqrt();
    for i in 0..count {
        let mut rng = rng::stream(cfg.seed, i as u64);
        let mut knots = Vec::with_capacity(cfg.step_count + 1);
        let mut v = 1.0_f64;
        knots.push((0.0, v));
        for k in 1..=cfg.step_count {
            let z: f64 = rng.sample(StandardNormal);
            v = match cfg.model {
                GeneratorModel::GeometricBrownian => {
                    v * (cfg.volatility * sqrt_dt * z - 0.5 * cfg.volatility * cfg.volatility * dt)
                        .exp()
                }
                GeneratorModel::ArithmeticBrownianReflected => {
                    let mut w = v + cfg.volatility * sqrt_dt * z;
                    if w < POSITIVITY_FLOOR {
                        w = 2.0 * POSITIVITY_FLOOR - w;
                    }
                    w.max(POSITIVITY_FLOOR)
                }
                GeneratorModel::PiecewiseLinearCustom(_) => unreachable!(),
            };
            let t = if k == cfg.step_count { cfg.horizon } else { k as f64 * dt };
            knots.push((t, v));
        }
        out.push(SampledPath::new(knots)?);
    }
    Ok(out)
}

// --- CSV I/O ---------------------------------------------------------------

/// Writes paths as `t,value` rows; a row with `t = 0` starts a new path.
pub fn write_paths_csv<W: Write>(mut w: W, paths: &[SampledPath]) -> Result<()> {
    writeln!(w, "t,value")?;
    for p in paths {
        for &(t, v) in p.knots() {
            writeln!(w, "{t},{v}")?;
        }
    }
    Ok(())
}

/// Reads one or more paths from `t,value` rows (`t = 0` starts a new path).
pub fn read_paths_csv<R: BufRead>(r: R) -> Result<Vec<SampledPath>> {
    let mut paths = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with("t,") {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| MotError::config(format!("bad csv row at line {}", lineno + 1)))
        };
        let t = parse(parts.next())?;
        let v = parse(parts.next())?;
        if t == 0.0 && !current.is_empty() {
            paths.push(SampledPath::new(std::mem::take(&mut current))?);
        }
        current.push((t, v));
    }
    if !current.is_empty() {
        paths.push(SampledPath::new(current)?);
    }
    Ok(paths)
}

/// Writes a grid path: a `N,T,initial` header block then `jump_time,sign` rows.
pub fn write_grid_csv<W: Write>(mut w: W, g: &GridPath) -> Result<()> {
    writeln!(w, "N,T,initial")?;
    writeln!(w, "{},{},{}", g.n, g.horizon, g.initial_value)?;
    writeln!(w, "jump_time,sign")?;
    for &(t, s) in &g.jumps {
        writeln!(w, "{t},{s}")?;
    }
    Ok(())
}

/// Reads a grid path written by [`write_grid_csv`].
pub fn read_grid_csv<R: BufRead>(r: R) -> Result<GridPath> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| MotError::config("empty grid csv"))?;
    if header.trim() != "N,T,initial" {
        return Err(MotError::config("grid csv must start with 'N,T,initial'"));
    }
    let meta = lines
        .next()
        .transpose()?
        .ok_or_else(|| MotError::config("missing grid csv meta row"))?;
    let mut parts = meta.trim().split(',');
    let n: u32 = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| MotError::config("bad N in grid csv"))?;
    let horizon: f64 = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| MotError::config("bad T in grid csv"))?;
    let initial: f64 = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| MotError::config("bad initial value in grid csv"))?;
    let mut jumps = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == "jump_time,sign" {
            continue;
        }
        let mut parts = line.split(',');
        let t: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| MotError::config("bad jump row in grid csv"))?;
        let s: i8 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| MotError::config("bad jump sign in grid csv"))?;
        jumps.push((t, s));
    }
    Ok(GridPath {
        n,
        horizon,
        initial_value: initial,
        jumps,
    })
}
