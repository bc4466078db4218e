//! Action functionals on loops and on chords of the product tower, computed
//! from the boundary primitive `λ = ½ Σ (x_i dy_i − y_i dx_i)`.
//!
//! No filling disk is ever built. On a chord the two boundary pieces lying in
//! `Δ_n^0` and `Δ_n^1` drop out because matched copies carry opposite signs,
//! so only the path itself contributes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{build_level, Diagonal, LevelStructure};
use crate::hamiltonians::{Hamiltonian, LiftedHamiltonian, StructuredHamiltonian, TauVariant};
use crate::transforms::{psi_chain, DiscreteLoop, DiscretePath, TransformChain};

/// A loop in unwrapped coordinates together with its integer winding.
#[derive(Clone, Debug)]
pub struct LiftedLoop {
    pub path: DiscreteLoop,
    pub winding: Vec<i64>,
}

impl LiftedLoop {
    /// Unwraps node to node on the torus, assuming consecutive nodes are
    /// closer than half a period. Already continuous samples are kept as is.
    pub fn new(v: &DiscreteLoop) -> Result<Self> {
        if v.level != 0 {
            return Err(Error::LevelMismatch { expected: 0, found: v.level });
        }
        if !v.space.is_torus() {
            return Ok(LiftedLoop { path: v.clone(), winding: vec![0; v.dim()] });
        }
        let d = v.dim();
        let n = v.intervals();
        let mut samples = Vec::with_capacity((n + 1) * d);
        samples.extend_from_slice(v.node(0));
        for k in 1..=n {
            for c in 0..d {
                let prev = samples[(k - 1) * d + c];
                samples.push(prev + v.space.wrap_delta(v.node(k)[c] - prev));
            }
        }
        let winding = (0..d).map(|c| (samples[n * d + c] - samples[c]).round() as i64).collect();
        let bps: Vec<f64> = v.breakpoints();
        let mut path = DiscretePath::loop_from_nodes(v.space, n, samples, &bps[1..bps.len() - 1])?;
        if v.is_periodic_smooth() {
            path = DiscretePath::loop_from_nodes(v.space, n, path.samples_flat().to_vec(), &[])?;
        }
        Ok(LiftedLoop { path, winding })
    }

    pub fn is_contractible(&self) -> bool {
        self.winding.iter().all(|&w| w == 0)
    }
}

/// `½ Σ_i (x_i y'_i − x'_i y_i)` for points laid out as `(x_1..x_d, y_1..y_d)`:
/// `∫ λ` over the straight segment from `a` to `b`.
fn edge_lambda(a: &[f64], b: &[f64], shift: &[f64]) -> f64 {
    let d = a.len() / 2;
    (0..d)
        .map(|i| {
            let (xa, ya) = (a[i] + shift[i], a[d + i] + shift[d + i]);
            let (xb, yb) = (b[i] + shift[i], b[d + i] + shift[d + i]);
            0.5 * (xa * yb - xb * ya)
        })
        .sum()
}

/// `∫ λ` along the polygon through the nodes of copy `j`, shifted by `shift`.
/// The trapezoid rule on each edge is exact for `λ` on straight segments.
fn polyline_lambda(w: &DiscretePath, j: usize, shift: &[f64]) -> f64 {
    (0..w.intervals()).map(|k| edge_lambda(w.node_copy(k, j), w.node_copy(k + 1, j), shift)).sum()
}

fn trapezoid(n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let h = 1.0 / n as f64;
    let inner: f64 = (1..n).map(&mut f).sum();
    h * (inner + 0.5 * (f(0) + f(n)))
}

/// Signed area `∫_D v̄*ω` of a contractible loop, as `∮_v λ`.
pub fn loop_area(v: &DiscreteLoop) -> Result<f64> {
    let lifted = LiftedLoop::new(v)?;
    if !lifted.is_contractible() {
        return Err(Error::NonContractible { winding: lifted.winding });
    }
    let p = &lifted.path;
    let d = p.dim();
    // close the polygon exactly: the last node may differ from the first by roundoff
    let zero = vec![0.0; d];
    Ok(polyline_lambda(p, 0, &zero) + edge_lambda(p.node(p.intervals()), p.node(0), &zero))
}

/// `∫_0^1 H_t(v(t)) dt` by the trapezoid rule on the nodes.
pub fn hamiltonian_integral<H: Hamiltonian + ?Sized>(h: &H, w: &DiscretePath) -> Result<f64> {
    if h.level() != w.level {
        return Err(Error::LevelMismatch { expected: w.level, found: h.level() });
    }
    let n = w.intervals();
    let d = w.dim();
    Ok(trapezoid(n, |k| h.value(w.node(k), d, k as f64 / n as f64)))
}

/// The two contributions to an action value, each with the sign it enters with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub action: f64,
    /// `−∫ v̄*ω`
    pub area_term: f64,
    /// `−∫ H_t dt`
    pub perturbation_term: f64,
    pub winding: Vec<i64>,
}

impl ActionReport {
    fn new(area: f64, integral: f64, winding: Vec<i64>) -> Self {
        ActionReport { action: -area - integral, area_term: -area, perturbation_term: -integral, winding }
    }
}

pub fn action_loop_report<H: Hamiltonian + ?Sized>(h: &H, v: &DiscreteLoop) -> Result<ActionReport> {
    let area = loop_area(v)?;
    let integral = hamiltonian_integral(h, v)?;
    Ok(ActionReport::new(area, integral, vec![0; v.dim()]))
}

/// `A_H(v) = −∫_D v̄*ω − ∫_0^1 H_t(v(t)) dt`.
pub fn action_loop<H: Hamiltonian + ?Sized>(h: &H, v: &DiscreteLoop) -> Result<f64> {
    action_loop_report(h, v).map(|r| r.action)
}

/// Integer translations of each copy making matched boundary values equal,
/// found by walking the union cycle of the two matchings from copy 0.
/// A walk that does not close up means the glued loop winds.
pub fn compatible_shifts(w: &DiscretePath, level: &LevelStructure) -> Result<Vec<Vec<f64>>> {
    let d = w.dim();
    let copies = level.copies();
    let mut shifts = vec![vec![0.0; d]; copies];
    if !w.space.is_torus() {
        return Ok(shifts);
    }
    let end = w.intervals();
    let mut current = 0;
    let mut zero_side = true;
    loop {
        let (which, node) = if zero_side { (Diagonal::Zero, 0) } else { (Diagonal::One, end) };
        let next = level.partner(which, current).expect("perfect matching");
        let (a, b) = (w.node_copy(node, current), w.node_copy(node, next));
        let s: Vec<f64> = (0..d).map(|c| shifts[current][c] + (a[c] - b[c]).round()).collect();
        if next == 0 {
            let winding: Vec<i64> = s.iter().map(|&x| x as i64).collect();
            if winding.iter().any(|&x| x != 0) {
                return Err(Error::NonContractible { winding });
            }
            return Ok(shifts);
        }
        shifts[next] = s;
        current = next;
        zero_side = !zero_side;
    }
}

/// `∫_{D_+} w̄*ω_n = Σ_j ε_j ∫_{w_j} λ` with compatible torus lifts.
pub fn chord_area(w: &DiscretePath) -> Result<f64> {
    if w.level == 0 {
        return invalid("chords live on levels n ≥ 1");
    }
    let level = build_level(w.level)?;
    let shifts = compatible_shifts(w, &level)?;
    Ok((0..level.copies()).map(|j| level.sign(j) * polyline_lambda(w, j, &shifts[j])).sum())
}

pub fn action_chord_report<H: Hamiltonian + ?Sized>(k: &H, w: &DiscretePath) -> Result<ActionReport> {
    let area = chord_area(w)?;
    let integral = hamiltonian_integral(k, w)?;
    Ok(ActionReport::new(area, integral, vec![0; w.dim()]))
}

/// `A_K(w) = −∫_{D_+} w̄*ω_n − ∫_0^1 K_t(w(t)) dt`.
pub fn action_chord<H: Hamiltonian + ?Sized>(k: &H, w: &DiscretePath) -> Result<f64> {
    action_chord_report(k, w).map(|r| r.action)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub level: usize,
    pub intervals: usize,
    pub loop_action: f64,
    pub chord_action: f64,
    pub gap: f64,
}

/// `|A_{H^n}(Ψ^n v) − A_H(v)|` with the lift built from the chosen τ maps.
pub fn pushforward_report(h: &StructuredHamiltonian, v: &DiscreteLoop, chain: &TransformChain, variant: TauVariant) -> Result<PushforwardReport> {
    let loop_action = action_loop(h, v)?;
    let lifted = LiftedHamiltonian::new(h.clone(), chain.clone(), variant)?;
    let w = psi_chain(chain, &LiftedLoop::new(v)?.path)?;
    let chord_action = action_chord(&lifted, &w)?;
    Ok(PushforwardReport {
        level: chain.level(),
        intervals: v.intervals(),
        loop_action,
        chord_action,
        gap: (chord_action - loop_action).abs(),
    })
}

pub fn pushforward_gap(h: &StructuredHamiltonian, v: &DiscreteLoop, chain: &TransformChain) -> Result<f64> {
    pushforward_report(h, v, chain, TauVariant::Derived).map(|r| r.gap)
}

/// Least-squares slope of `−log2(gap)` against `log2(N)`.
pub fn observed_order(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, g)| *g > 0.0 && g.is_finite())
        .map(|&(n, g)| ((n as f64).log2(), -g.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(num / den)
}

/// `ε_a + ε_b = 0` over every pair of both matchings, which is what makes
/// `λ_n` vanish on `Δ_n^0` and `Δ_n^1`.
pub fn lambda_cancels(level: &LevelStructure) -> bool {
    [Diagonal::Zero, Diagonal::One]
        .into_iter()
        .all(|which| level.matching(which).iter().all(|&(a, b)| level.signs[a] + level.signs[b] == 0))
}
