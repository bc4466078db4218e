//! Uniformly sampled loops and paths on `M_n`, with piecewise cubic Hermite
//! interpolation that never crosses a breakpoint.

use crate::error::{invalid, Error, Result};
use crate::geometry::{PhaseSpace, ProductPoint};
use crate::transforms::reparam::hermite_basis;

/// Tolerance in units of the grid spacing for snapping a time to a node.
const NODE_SNAP: f64 = 1e-9;

/// Samples at `t_k = k/N`, `k = 0..=N`, stored flat and in lifted coordinates
/// (torus curves are continuous representatives in `R^{2d}`).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePath {
    pub space: PhaseSpace,
    pub level: usize,
    intervals: usize,
    copies: usize,
    samples: Vec<f64>,
    /// Node indices where smoothness is not assumed, always containing 0 and N.
    /// A loop whose list is exactly `[0, N]` and which is flagged periodic is
    /// treated as smooth across `t = 0`.
    segment_nodes: Vec<usize>,
    is_loop: bool,
    periodic_smooth: bool,
}

pub type DiscreteLoop = DiscretePath;

impl DiscretePath {
    pub fn from_fn(
        space: PhaseSpace,
        level: usize,
        intervals: usize,
        is_loop: bool,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        if intervals == 0 {
            return invalid("a discrete curve needs at least one interval");
        }
        let copies = 1usize << level;
        let width = copies * space.dim();
        let mut samples = vec![0.0; (intervals + 1) * width];
        for (k, chunk) in samples.chunks_mut(width).enumerate() {
            f(k as f64 / intervals as f64, chunk);
        }
        Ok(DiscretePath {
            space,
            level,
            intervals,
            copies,
            samples,
            segment_nodes: vec![0, intervals],
            is_loop,
            periodic_smooth: is_loop,
        })
    }

    /// A smooth periodic loop on `M` sampled from `f`.
    pub fn loop_from_fn(space: PhaseSpace, intervals: usize, f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        Self::from_fn(space, 0, intervals, true, f)
    }

    pub fn constant(space: PhaseSpace, level: usize, intervals: usize, point: &ProductPoint) -> Result<Self> {
        Self::from_fn(space, level, intervals, level == 0, |_, out| out.copy_from_slice(point.as_flat()))
    }

    /// A path (not a loop) from `N + 1` flat nodes, smooth between `0` and `1`.
    pub fn from_nodes(space: PhaseSpace, level: usize, intervals: usize, samples: Vec<f64>) -> Result<Self> {
        Self::from_raw(space, level, intervals, samples, false, &[])
    }

    /// A loop from `N + 1` flat nodes with kinks at the given breakpoints.
    pub fn loop_from_nodes(space: PhaseSpace, intervals: usize, samples: Vec<f64>, breakpoints: &[f64]) -> Result<Self> {
        Self::from_raw(space, 0, intervals, samples, true, breakpoints)
    }

    pub(crate) fn from_raw(
        space: PhaseSpace,
        level: usize,
        intervals: usize,
        samples: Vec<f64>,
        is_loop: bool,
        breakpoints: &[f64],
    ) -> Result<Self> {
        let copies = 1usize << level;
        if samples.len() != (intervals + 1) * copies * space.dim() {
            return invalid("sample buffer has the wrong length");
        }
        let mut c = DiscretePath {
            space,
            level,
            intervals,
            copies,
            samples,
            segment_nodes: vec![0, intervals],
            is_loop,
            periodic_smooth: false,
        };
        c.set_breakpoints(breakpoints)?;
        Ok(c)
    }

    /// Declares kinks at the given times; each must be a grid node.
    pub fn set_breakpoints(&mut self, times: &[f64]) -> Result<()> {
        let mut nodes = vec![0, self.intervals];
        for &b in times {
            nodes.push(node_index(b, self.intervals)?);
        }
        nodes.sort_unstable();
        nodes.dedup();
        self.segment_nodes = nodes;
        self.periodic_smooth = false;
        Ok(())
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_loop(&self) -> bool {
        self.is_loop
    }

    pub fn is_periodic_smooth(&self) -> bool {
        self.periodic_smooth
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.segment_nodes.iter().map(|&k| k as f64 / self.intervals as f64).collect()
    }

    pub fn segment_nodes(&self) -> &[usize] {
        &self.segment_nodes
    }

    fn width(&self) -> usize {
        self.copies * self.dim()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.samples[k * w..(k + 1) * w]
    }

    pub fn node_copy(&self, k: usize, j: usize) -> &[f64] {
        let d = self.dim();
        let w = self.width();
        &self.samples[k * w + j * d..k * w + (j + 1) * d]
    }

    pub fn node_point(&self, k: usize) -> ProductPoint {
        ProductPoint::from_flat(self.dim(), self.node(k).to_vec()).expect("consistent width")
    }

    pub fn samples_flat(&self) -> &[f64] {
        &self.samples
    }

    /// `v(1) − v(0)` rounded to integers on the torus (zero on the plane).
    pub fn winding(&self) -> Vec<i64> {
        if !self.space.is_torus() {
            return vec![0; self.width()];
        }
        let (a, b) = (self.node(0), self.node(self.intervals));
        a.iter().zip(b).map(|(x, y)| (y - x).round() as i64).collect()
    }

    /// `max |wrap(v(1) − v(0))|` for loops.
    pub fn closure_gap(&self) -> f64 {
        self.space.sup_distance(self.node(0), self.node(self.intervals))
    }

    /// Segment `[a, b]` of node indices containing interval `k` (`k < N`).
    fn segment_of(&self, k: usize) -> (usize, usize) {
        let i = self.segment_nodes.partition_point(|&n| n <= k);
        let i = i.clamp(1, self.segment_nodes.len() - 1);
        (self.segment_nodes[i - 1], self.segment_nodes[i])
    }

    /// Value of node `k` extended periodically for smooth loops.
    fn periodic_node(&self, k: isize, j: usize, c: usize) -> f64 {
        let n = self.intervals as isize;
        let wraps = k.div_euclid(n);
        let r = k.rem_euclid(n) as usize;
        let base = self.node_copy(r, j)[c];
        if wraps == 0 {
            base
        } else {
            let w = self.node_copy(self.intervals, j)[c] - self.node_copy(0, j)[c];
            base + wraps as f64 * w
        }
    }

    /// Slope (per grid step) at node `k` using differences inside `[a, b]`.
    fn node_slope(&self, k: usize, a: usize, b: usize, j: usize, c: usize) -> f64 {
        if self.periodic_smooth {
            let k = k as isize;
            return 0.5 * (self.periodic_node(k + 1, j, c) - self.periodic_node(k - 1, j, c));
        }
        let v = |i: usize| self.node_copy(i, j)[c];
        if b - a == 1 {
            return v(b) - v(a);
        }
        if k == a {
            0.5 * (-3.0 * v(a) + 4.0 * v(a + 1) - v(a + 2))
        } else if k == b {
            0.5 * (3.0 * v(b) - 4.0 * v(b - 1) + v(b - 2))
        } else {
            0.5 * (v(k + 1) - v(k - 1))
        }
    }

    /// Interpolated copy `j` at `t ∈ [0, 1]`, written into `out`.
    pub fn eval_copy_into(&self, j: usize, t: f64, out: &mut [f64]) {
        let n = self.intervals;
        let u = (t.clamp(0.0, 1.0)) * n as f64;
        let r = u.round();
        if (u - r).abs() < NODE_SNAP {
            out.copy_from_slice(self.node_copy(r as usize, j));
            return;
        }
        let k = (u.floor() as usize).min(n - 1);
        let s = u - k as f64;
        let (a, b) = self.segment_of(k);
        let (h00, h10, h01, h11) = hermite_basis(s);
        for (c, o) in out.iter_mut().enumerate() {
            let p0 = self.node_copy(k, j)[c];
            let p1 = self.node_copy(k + 1, j)[c];
            let m0 = self.node_slope(k, a, b, j, c);
            let m1 = self.node_slope(k + 1, a, b, j, c);
            *o = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
        }
    }

    pub fn eval_copy(&self, j: usize, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_copy_into(j, t, &mut out);
        out
    }

    /// Loop value at any real time, using `v(t + 1) = v(t) + winding`.
    pub fn eval_periodic_into(&self, j: usize, t: f64, out: &mut [f64]) {
        let mut shift = t.floor();
        let mut frac = t - shift;
        if frac >= 1.0 {
            frac = 0.0;
            shift += 1.0;
        }
        self.eval_copy_into(j, frac, out);
        if shift != 0.0 && self.space.is_torus() {
            for (c, o) in out.iter_mut().enumerate() {
                let w = self.node_copy(self.intervals, j)[c] - self.node_copy(0, j)[c];
                *o += shift * w.round();
            }
        }
    }

    pub fn eval_point(&self, t: f64) -> ProductPoint {
        let d = self.dim();
        let mut flat = vec![0.0; self.width()];
        for j in 0..self.copies {
            self.eval_copy_into(j, t, &mut flat[j * d..(j + 1) * d]);
        }
        ProductPoint::from_flat(d, flat).expect("consistent width")
    }

    /// Re-samples on `new_intervals` intervals; every breakpoint must stay a node.
    pub fn resample(&self, new_intervals: usize) -> Result<DiscretePath> {
        let bps = self.breakpoints();
        for &b in &bps {
            node_index(b, new_intervals)?;
        }
        let d = self.dim();
        let mut out = DiscretePath::from_fn(self.space, self.level, new_intervals, self.is_loop, |t, buf| {
            for j in 0..self.copies {
                self.eval_copy_into(j, t, &mut buf[j * d..(j + 1) * d]);
            }
        })?;
        if self.periodic_smooth {
            out.periodic_smooth = true;
        } else {
            out.set_breakpoints(&bps)?;
        }
        Ok(out)
    }

    /// Max over nodes of the sup-norm distance to `other` (same grid), wrapped on the torus.
    pub fn sup_distance(&self, other: &DiscretePath) -> Result<f64> {
        if self.intervals != other.intervals || self.width() != other.width() {
            return invalid("curves live on different grids");
        }
        Ok((0..=self.intervals)
            .map(|k| self.space.sup_distance(self.node(k), other.node(k)))
            .fold(0.0, f64::max))
    }

    /// Sup distance after both curves are evaluated on the coarser of the two grids.
    pub fn sup_distance_resampled(&self, other: &DiscretePath) -> Result<f64> {
        if self.intervals == other.intervals {
            return self.sup_distance(other);
        }
        let (fine, coarse) = if self.intervals > other.intervals { (self, other) } else { (other, self) };
        let r = fine.resample(coarse.intervals)?;
        r.sup_distance(coarse)
    }
}

/// Node index of `t` on an `N`-interval grid, or a grid-misalignment error.
pub fn node_index(t: f64, intervals: usize) -> Result<usize> {
    let u = t * intervals as f64;
    let r = u.round();
    if (u - r).abs() > 1e-9 || r < 0.0 || r > intervals as f64 {
        return Err(Error::GridMisaligned { intervals, breakpoint: t });
    }
    Ok(r as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(n: usize) -> DiscreteLoop {
        DiscretePath::loop_from_fn(PhaseSpace::plane(1), n, |t, out| {
            out[0] = (TAU * t).cos();
            out[1] = (TAU * t).sin();
        })
        .unwrap()
    }

    #[test]
    fn node_values_are_exact() {
        let c = circle(64);
        assert_eq!(c.eval_copy(0, 0.25), c.node_copy(16, 0).to_vec());
    }

    #[test]
    fn interpolation_is_accurate_off_nodes() {
        let c = circle(256);
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let t = (i as f64 + 0.37) / 1000.0;
            let v = c.eval_copy(0, t);
            worst = worst.max((v[0] - (TAU * t).cos()).abs()).max((v[1] - (TAU * t).sin()).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn resample_identity_and_constant() {
        let c = circle(64);
        assert_eq!(c.resample(64).unwrap(), c);
        let p = ProductPoint::repeated(&[0.3, 0.4], 1);
        let k = DiscretePath::constant(PhaseSpace::plane(1), 0, 16, &p).unwrap();
        let r = k.resample(48).unwrap();
        for i in 0..=48 {
            assert!((r.node(i)[0] - 0.3).abs() < 1e-15 && (r.node(i)[1] - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn resample_converges_second_order() {
        let err = |n: usize| {
            let c = circle(n);
            let fine = c.resample(2 * n).unwrap();
            let exact = circle(2 * n);
            fine.sup_distance(&exact).unwrap()
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn misaligned_breakpoints_are_rejected() {
        let mut c = circle(10);
        assert!(matches!(c.set_breakpoints(&[1.0 / 3.0]), Err(Error::GridMisaligned { .. })));
        c.set_breakpoints(&[0.5]).unwrap();
        assert!(c.resample(15).is_err());
    }

    #[test]
    fn periodic_evaluation_adds_winding() {
        let l = DiscretePath::loop_from_fn(PhaseSpace::torus(1), 32, |t, out| {
            out[0] = t;
            out[1] = 0.2;
        })
        .unwrap();
        assert_eq!(l.winding(), vec![1, 0]);
        let mut out = [0.0; 2];
        l.eval_periodic_into(0, 1.25, &mut out);
        assert!((out[0] - 1.25).abs() < 1e-12);
        l.eval_periodic_into(0, -0.25, &mut out);
        assert!((out[0] + 0.25).abs() < 1e-12);
    }
}
