//! Terminal-law handling.
//!
//! A [`Marginal`] is a probability measure on `ℝ₊` with mean 1 and a finite
//! p-th moment for some declared `p > 1`. The hat-function projection
//! [`project_marginal`] moves it onto the grid `A^(N) = {k/N}`, and
//! [`lift_static`] is its adjoint on payoff functions: the two are tied by the
//! pairing identity `∫h dμ^(N) = ∫𝓛(h) dμ`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{MotError, Result};

/// Total-mass tolerance.
pub const MASS_TOL: f64 = 1e-12;
/// Mean-one tolerance.
pub const MEAN_TOL: f64 = 1e-9;

/// Measure representation: finite atoms, or a piecewise-linear density on a
/// bounded interval (chosen so every projection integral is closed-form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MarginalRepr {
    /// `(location ≥ 0, weight > 0)` pairs, locations strictly increasing.
    Atomic(Vec<(f64, f64)>),
    /// Density knots `(x, f(x))` on `[0, B]`, affine between knots.
    Density(Vec<(f64, f64)>),
}

/// A terminal law: probability measure, mean 1, finite declared p-th moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub repr: MarginalRepr,
    /// Declared moment exponent, `p > 1`.
    pub p: f64,
}

/// Integrates `g` against an affine density segment exactly for `g` quadratic
/// (Simpson is exact through cubics).
fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, g: F) -> f64 {
    (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b))
}

impl Marginal {
    pub fn new(repr: MarginalRepr, p: f64) -> Result<Marginal> {
        if !(p > 1.0) {
            return Err(MotError::domain(format!("moment exponent p must exceed 1, got {p}")));
        }
        let m = Marginal { repr, p };
        m.validate()?;
        Ok(m)
    }

    pub fn atomic(atoms: Vec<(f64, f64)>, p: f64) -> Result<Marginal> {
        Marginal::new(MarginalRepr::Atomic(atoms), p)
    }

    fn validate(&self) -> Result<()> {
        match &self.repr {
            MarginalRepr::Atomic(atoms) => {
                if atoms.is_empty() {
                    return Err(MotError::domain("marginal needs at least one atom"));
                }
                for w in atoms.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(MotError::domain("atom locations must be strictly increasing"));
                    }
                }
                for &(x, w) in atoms {
                    if !(x >= 0.0) {
                        return Err(MotError::domain(format!("atom location {x} negative")));
                    }
                    if !(w > 0.0) {
                        return Err(MotError::domain(format!("atom weight {w} not positive")));
                    }
                }
            }
            MarginalRepr::Density(knots) => {
                if knots.len() < 2 {
                    return Err(MotError::domain("density needs at least two knots"));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(MotError::domain("density knots must be strictly increasing"));
                    }
                }
                for &(x, f) in knots {
                    if !(x >= 0.0) {
                        return Err(MotError::domain(format!("density knot {x} negative")));
                    }
                    if !(f >= 0.0) {
                        return Err(MotError::domain(format!("density value {f} negative")));
                    }
                }
            }
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(MotError::domain(format!("total mass {mass} is not 1")));
        }
        let mean = self.mean();
        if (mean - 1.0).abs() > MEAN_TOL {
            return Err(MotError::domain(format!("mean {mean} is not 1")));
        }
        let moment = self.moment(self.p);
        if !moment.is_finite() {
            return Err(MotError::domain("declared p-th moment is not finite"));
        }
        Ok(())
    }

    /// Exact integral `∫ g dμ` for `g` at most quadratic on each density
    /// segment (arbitrary `g` on atoms).
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        match &self.repr {
            MarginalRepr::Atomic(atoms) => atoms.iter().map(|&(x, w)| w * g(x)).sum(),
            MarginalRepr::Density(knots) => knots
                .windows(2)
                .map(|w| {
                    let (a, fa) = w[0];
                    let (b, fb) = w[1];
                    simpson(a, b, |x| {
                        let f = fa + (fb - fa) * (x - a) / (b - a);
                        f * g(x)
                    })
                })
                .sum(),
        }
    }

    /// Like [`integrate`](Self::integrate), but splits density segments at the
    /// given breakpoints first so `g` may kink there.
    pub fn integrate_piecewise<F: Fn(f64) -> f64>(&self, breakpoints: &[f64], g: F) -> f64 {
        match &self.repr {
            MarginalRepr::Atomic(_) => self.integrate(g),
            MarginalRepr::Density(knots) => {
                let density = |x: f64| -> f64 {
                    let i = knots.partition_point(|&(kx, _)| kx <= x).clamp(1, knots.len() - 1);
                    let (a, fa) = knots[i - 1];
                    let (b, fb) = knots[i];
                    fa + (fb - fa) * (x - a) / (b - a)
                };
                let lo = knots[0].0;
                let hi = knots[knots.len() - 1].0;
                let mut cuts: Vec<f64> = knots.iter().map(|&(x, _)| x).collect();
                cuts.extend(breakpoints.iter().copied().filter(|&x| x > lo && x < hi));
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.dedup();
                cuts.windows(2)
                    .map(|w| simpson(w[0], w[1], |x| density(x) * g(x)))
                    .sum()
            }
        }
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|x| x)
    }

    /// `∫ x^q dμ`; exact for atoms, closed-form-accurate for densities
    /// (per-segment power integrals).
    pub fn moment(&self, q: f64) -> f64 {
        match &self.repr {
            MarginalRepr::Atomic(atoms) => atoms.iter().map(|&(x, w)| w * x.powf(q)).sum(),
            MarginalRepr::Density(knots) => knots
                .windows(2)
                .map(|w| {
                    let (a, fa) = w[0];
                    let (b, fb) = w[1];
                    // f(x) = c0 + c1 x on [a,b]; ∫ x^q f(x) dx in closed form
                    let c1 = (fb - fa) / (b - a);
                    let c0 = fa - c1 * a;
                    let anti = |x: f64| {
                        if x == 0.0 {
                            0.0
                        } else {
                            c0 * x.powf(q + 1.0) / (q + 1.0) + c1 * x.powf(q + 2.0) / (q + 2.0)
                        }
                    };
                    anti(b) - anti(a)
                })
                .sum(),
        }
    }

    pub fn support_atoms(&self) -> Option<&[(f64, f64)]> {
        match &self.repr {
            MarginalRepr::Atomic(atoms) => Some(atoms),
            MarginalRepr::Density(_) => None,
        }
    }
}

/// A finitely supported probability measure on the grid `A^(N) = {k/N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMarginal {
    pub n: u32,
    /// `weights[k]` is the mass at `k/N`.
    pub weights: Vec<f64>,
}

impl GridMarginal {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * k as f64 / self.n as f64)
            .sum()
    }

    /// Nonzero atoms as `(location, weight)` pairs.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.weights
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > 0.0)
            .map(|(k, &w)| (k as f64 / self.n as f64, w))
            .collect()
    }

    pub fn to_marginal(&self, p: f64) -> Result<Marginal> {
        Marginal::atomic(self.atoms(), p)
    }
}

/// Hat-function projection of `μ` onto the grid `A^(N)`:
/// the mass near `k/N` is `∫ (1 − |Nx − k|)⁺ dμ`. Exact for atomic and
/// piecewise-linear-density representations; preserves mass and mean.
pub fn project_marginal(mu: &Marginal, n: u32) -> Result<GridMarginal> {
    if n == 0 {
        return Err(MotError::domain("resolution N must be positive"));
    }
    let nf = n as f64;
    let upper = match &mu.repr {
        MarginalRepr::Atomic(atoms) => atoms.last().unwrap().0,
        MarginalRepr::Density(knots) => knots.last().unwrap().0,
    };
    let kmax = (upper * nf).ceil() as usize + 1;
    let mut weights = vec![0.0; kmax + 1];
    match &mu.repr {
        MarginalRepr::Atomic(atoms) => {
            for &(x, w) in atoms {
                let scaled = x * nf;
                let k = scaled.floor() as usize;
                let frac = scaled - k as f64;
                weights[k] += w * (1.0 - frac);
                if frac > 0.0 {
                    weights[k + 1] += w * frac;
                }
            }
        }
        MarginalRepr::Density(_) => {
            let grid: Vec<f64> = (0..=kmax).map(|k| k as f64 / nf).collect();
            for (k, item) in weights.iter_mut().enumerate() {
                let kf = k as f64;
                *item = mu.integrate_piecewise(&grid, |x| (1.0 - (nf * x - kf).abs()).max(0.0));
            }
        }
    }
    while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
        weights.pop();
    }
    let gm = GridMarginal { n, weights };
    debug_assert!((gm.mass() - mu.mass()).abs() <= 1e-10);
    Ok(gm)
}

/// The lift `𝓛(h)` of a grid payoff vector: continuous, piecewise-linear,
/// equal to `h` on the grid, zero beyond the represented support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedStatic {
    pub n: u32,
    /// `h[k]` is the payoff at `k/N`.
    pub h: Vec<f64>,
}

impl LiftedStatic {
    pub fn eval(&self, x: f64) -> f64 {
        let nf = self.n as f64;
        let scaled = (x * nf).max(0.0);
        let k = scaled.floor() as usize;
        let frac = scaled - k as f64;
        let at = |i: usize| self.h.get(i).copied().unwrap_or(0.0);
        (1.0 - frac) * at(k) + frac * at(k + 1)
    }
}

/// Builds the piecewise-linear lift of a grid payoff.
pub fn lift_static(h: &[f64], n: u32) -> LiftedStatic {
    LiftedStatic { n, h: h.to_vec() }
}

/// Two sides of the pairing identity `∫h dμ^(N) = ∫𝓛(h) dμ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

pub fn pairing_identity_check(h: &[f64], mu: &Marginal, n: u32) -> Result<PairingCheck> {
    let grid = project_marginal(mu, n)?;
    let lhs: f64 = grid
        .weights
        .iter()
        .enumerate()
        .map(|(k, w)| w * h.get(k).copied().unwrap_or(0.0))
        .sum();
    let lifted = lift_static(h, n);
    let breakpoints: Vec<f64> = (0..=h.len()).map(|k| k as f64 / n as f64).collect();
    let rhs = mu.integrate_piecewise(&breakpoints, |x| lifted.eval(x));
    Ok(PairingCheck {
        lhs,
        rhs,
        ok: (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()),
    })
}

/// Largest exact-support size for the exhaustive Prokhorov computation.
pub const PROKHOROV_EXACT_CAP: usize = 20;

/// Prokhorov distance between two atomic measures.
///
/// Exact (exhaustive over union-of-atom events at the finitely many critical
/// radii) when both supports have at most [`PROKHOROV_EXACT_CAP`] atoms;
/// otherwise an upper bound via the monotone one-dimensional coupling.
pub fn prokhorov_distance(a: &Marginal, b: &Marginal) -> Result<f64> {
    let xa = a
        .support_atoms()
        .ok_or_else(|| MotError::Unsupported("prokhorov needs atomic marginals; project densities first".into()))?;
    let xb = b
        .support_atoms()
        .ok_or_else(|| MotError::Unsupported("prokhorov needs atomic marginals; project densities first".into()))?;
    if xa.len() <= PROKHOROV_EXACT_CAP && xb.len() <= PROKHOROV_EXACT_CAP {
        Ok(prokhorov_exact(xa, xb))
    } else {
        Ok(prokhorov_coupling_bound(xa, xb))
    }
}

/// Worst deficiency `max_A μ(A) − ν(A^δ)` over unions of `μ`-atoms, with the
/// δ-neighborhood structure given as per-atom bitmasks over `ν`-atoms.
fn max_deficiency(mu: &[(f64, f64)], nu: &[(f64, f64)], masks: &[u32]) -> f64 {
    let m = mu.len();
    let mut best = 0.0_f64;
    for subset in 1_u32..(1 << m) {
        let mut mass = 0.0;
        let mut cover = 0_u32;
        for (i, &(_, w)) in mu.iter().enumerate() {
            if subset >> i & 1 == 1 {
                mass += w;
                cover |= masks[i];
            }
        }
        let covered: f64 = nu
            .iter()
            .enumerate()
            .filter(|&(j, _)| cover >> j & 1 == 1)
            .map(|(_, &(_, w))| w)
            .sum();
        best = best.max(mass - covered);
    }
    best
}

fn prokhorov_exact(xa: &[(f64, f64)], xb: &[(f64, f64)]) -> f64 {
    // candidate radii: all pairwise distances (closed neighborhoods)
    let mut radii = vec![0.0];
    for &(x, _) in xa {
        for &(y, _) in xb {
            radii.push((x - y).abs());
        }
    }
    radii.sort_by(|p, q| p.partial_cmp(q).unwrap());
    radii.dedup();
    let masks = |pts: &[(f64, f64)], others: &[(f64, f64)], delta: f64| -> Vec<u32> {
        pts.iter()
            .map(|&(x, _)| {
                let mut m = 0_u32;
                for (j, &(y, _)) in others.iter().enumerate() {
                    if (x - y).abs() <= delta {
                        m |= 1 << j;
                    }
                }
                m
            })
            .collect()
    };
    // within each interval between consecutive radii the neighborhood
    // structure is fixed and the constraint is linear in δ
    let mut best = f64::INFINITY;
    for (t, &d) in radii.iter().enumerate() {
        let g_ab = max_deficiency(xa, xb, &masks(xa, xb, d));
        let g_ba = max_deficiency(xb, xa, &masks(xb, xa, d));
        let needed = d.max(g_ab.max(g_ba));
        let upper = radii.get(t + 1).copied().unwrap_or(f64::INFINITY);
        if needed < upper {
            best = best.min(needed);
        }
    }
    best
}

/// Upper bound from the monotone coupling: the smallest δ with
/// `P(|X − Y| > δ) ≤ δ` under the quantile pairing.
fn prokhorov_coupling_bound(xa: &[(f64, f64)], xb: &[(f64, f64)]) -> f64 {
    // build the monotone coupling's transport pieces (distance, mass)
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (xa[0].1, xb[0].1);
    while i < xa.len() && j < xb.len() {
        let m = ra.min(rb);
        pieces.push(((xa[i].0 - xb[j].0).abs(), m));
        ra -= m;
        rb -= m;
        if ra <= 0.0 {
            i += 1;
            if i < xa.len() {
                ra = xa[i].1;
            }
        }
        if rb <= 0.0 {
            j += 1;
            if j < xb.len() {
                rb = xb[j].1;
            }
        }
    }
    // smallest δ with mass moved farther than δ at most δ
    pieces.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let total: f64 = pieces.iter().map(|&(_, m)| m).sum();
    let mut tail = total;
    let mut best = pieces.last().map(|&(d, _)| d).unwrap_or(0.0);
    for &(d, m) in &pieces {
        // at radius d, mass strictly beyond d is tail - (mass at this d block)
        tail -= m;
        if tail <= d {
            best = best.min(d.max(tail));
            break;
        }
    }
    best
}

// --- CSV I/O ---------------------------------------------------------------

/// Writes a marginal as `x,weight` (atomic) or `x,density` (density) rows.
pub fn write_marginal_csv<W: Write>(mut w: W, m: &Marginal) -> Result<()> {
    match &m.repr {
        MarginalRepr::Atomic(atoms) => {
            writeln!(w, "x,weight")?;
            for &(x, wt) in atoms {
                writeln!(w, "{x},{wt}")?;
            }
        }
        MarginalRepr::Density(knots) => {
            writeln!(w, "x,density")?;
            for &(x, f) in knots {
                writeln!(w, "{x},{f}")?;
            }
        }
    }
    Ok(())
}

/// Reads a marginal; the header row selects the representation.
pub fn read_marginal_csv<R: BufRead>(r: R, p: f64) -> Result<Marginal> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| MotError::config("empty marginal csv"))?;
    let atomic = match header.trim() {
        "x,weight" => true,
        "x,density" => false,
        other => {
            return Err(MotError::config(format!(
                "marginal csv header must be 'x,weight' or 'x,density', got '{other}'"
            )))
        }
    };
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| MotError::config(format!("bad marginal row at line {}", lineno + 2)))
        };
        let x = parse(parts.next())?;
        let v = parse(parts.next())?;
        rows.push((x, v));
    }
    let repr = if atomic {
        MarginalRepr::Atomic(rows)
    } else {
        MarginalRepr::Density(rows)
    };
    Marginal::new(repr, p)
}
