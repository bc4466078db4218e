//! Loop ↔ path transforms `Ψ_{αβ}` / `Φ_{αβ}` on sampled curves, their chain
//! compositions, and the segment table derived from a chain.

pub mod curve;
pub mod reparam;
pub mod segments;

pub use curve::{node_index, DiscreteLoop, DiscretePath};
pub use reparam::{MonotoneReparam, MonotoneSpline, ReparamPair, StepSpec, TransformChain};
pub use segments::{copy_time_map, copy_time_maps, printed_tau_maps, segment_table, CopySegment, SegmentTable, TimeMap};

use crate::error::{invalid, Error, Result};
use crate::geometry::{build_level, Diagonal};

/// Boundary tolerance accepted by the transforms.
pub const BOUNDARY_TOL: f64 = 1e-6;

fn check_boundary(curve: &DiscretePath) -> Result<()> {
    let n = curve.intervals();
    if curve.level == 0 {
        if !curve.is_loop() {
            return invalid("level-0 input must be a loop");
        }
        let gap = curve.closure_gap();
        if gap > BOUNDARY_TOL {
            return Err(Error::BoundaryMismatch { time: 1.0, mismatch: gap });
        }
        return Ok(());
    }
    let level = build_level(curve.level)?;
    let start = level.diagonal_deviation(&curve.space, Diagonal::Zero, &curve.node_point(0));
    if start > BOUNDARY_TOL {
        return Err(Error::BoundaryMismatch { time: 0.0, mismatch: start });
    }
    let end = level.diagonal_deviation(&curve.space, Diagonal::One, &curve.node_point(n));
    if end > BOUNDARY_TOL {
        return Err(Error::BoundaryMismatch { time: 1.0, mismatch: end });
    }
    Ok(())
}

/// `Ψ_{αβ}(v)(t) = (v(α(t)), v(β(t)))`, raising the level by one.
pub fn psi_step(step: &ReparamPair, curve: &DiscretePath) -> Result<DiscretePath> {
    check_boundary(curve)?;
    let copies = curve.copies();
    let d = curve.dim();
    let n = curve.intervals();
    let mut out = DiscretePath::from_fn(curve.space, curve.level + 1, n, false, |t, buf| {
        let (a, b) = (step.alpha.eval(t), step.beta.eval(t));
        for j in 0..copies {
            curve.eval_copy_into(j, a, &mut buf[j * d..(j + 1) * d]);
            curve.eval_copy_into(j, b, &mut buf[(j + copies) * d..(j + copies + 1) * d]);
        }
    })?;
    let tau = step.tau();
    let mut kinks = Vec::new();
    if !curve.is_periodic_smooth() {
        for b in curve.breakpoints() {
            if b > 0.0 && b < tau {
                kinks.push(step.alpha.inverse_eval(b));
            }
            if b > tau && b < 1.0 {
                kinks.push(step.beta.inverse_eval(b));
            }
        }
    }
    out.set_breakpoints(&kinks)?;
    Ok(out)
}

/// `Φ_{αβ}(w)(t) = w_1(α^{-1}(t))` on `[0, τ]` and `w_2(β^{-1}(t))` on `[τ, 1]`,
/// lowering the level by one. On the torus the second block is translated by
/// integers so the two halves glue continuously at `τ`.
pub fn phi_step(step: &ReparamPair, curve: &DiscretePath) -> Result<DiscretePath> {
    if curve.level == 0 {
        return invalid("cannot lower a level-0 curve");
    }
    let n = curve.intervals();
    let tau = step.tau();
    let tau_node = node_index(tau, n)?;
    let half = curve.copies() / 2;
    let d = curve.dim();
    let space = curve.space;

    let mut shifts = vec![vec![0.0; d]; half];
    for (j, shift) in shifts.iter_mut().enumerate() {
        let (a, b) = (curve.node_copy(n, j), curve.node_copy(n, j + half));
        let gap = space.sup_distance(a, b);
        if gap > BOUNDARY_TOL {
            return Err(Error::BoundaryMismatch { time: 1.0, mismatch: gap });
        }
        if space.is_torus() {
            for c in 0..d {
                shift[c] = (a[c] - b[c]).round();
            }
        }
    }

    let out_level = curve.level - 1;
    let width = half * d;
    let mut samples = vec![0.0; (n + 1) * width];
    for (i, chunk) in samples.chunks_mut(width).enumerate() {
        let t = i as f64 / n as f64;
        for j in 0..half {
            let dst = &mut chunk[j * d..(j + 1) * d];
            if i <= tau_node {
                curve.eval_copy_into(j, step.alpha.inverse_eval(t), dst);
            } else {
                curve.eval_copy_into(j + half, step.beta.inverse_eval(t), dst);
                for (x, s) in dst.iter_mut().zip(&shifts[j]) {
                    *x += s;
                }
            }
        }
    }
    let mut kinks = vec![tau];
    for b in curve.breakpoints() {
        if b > 0.0 && b < 1.0 {
            kinks.push(step.alpha.eval(b));
            kinks.push(step.beta.eval(b));
        }
    }
    DiscretePath::from_raw(space, out_level, n, samples, out_level == 0, &kinks)
}

pub fn psi_chain(chain: &TransformChain, curve: &DiscretePath) -> Result<DiscretePath> {
    if curve.level != 0 {
        return Err(Error::LevelMismatch { expected: 0, found: curve.level });
    }
    chain.steps.iter().try_fold(curve.clone(), |c, step| psi_step(step, &c))
}

pub fn phi_chain(chain: &TransformChain, curve: &DiscretePath) -> Result<DiscretePath> {
    if curve.level != chain.level() {
        return Err(Error::LevelMismatch { expected: chain.level(), found: curve.level });
    }
    chain.steps.iter().rev().try_fold(curve.clone(), |c, step| phi_step(step, &c))
}
