//! Residual of a loop in a generated delay equation, and an independent
//! periodic collocation solver for that equation.

use serde::{Deserialize, Serialize};

use crate::delaygen::DelayEquationDescriptor;
use crate::error::{invalid, Result};
use crate::solvers::newton::{self, NewtonConfig};
use crate::transforms::{node_index, DiscreteLoop};

fn interior_breakpoints(d: &DelayEquationDescriptor) -> Vec<f64> {
    d.segments.iter().map(|s| s.start).filter(|&t| t > 0.0).collect()
}

fn breakpoint_nodes(d: &DelayEquationDescriptor, intervals: usize) -> Result<Vec<usize>> {
    let mut nodes = vec![0, intervals];
    for t in interior_breakpoints(d) {
        nodes.push(node_index(t, intervals)?);
    }
    nodes.sort_unstable();
    Ok(nodes)
}

/// `max |v̇(t_i) − rhs(t_i)|` over grid nodes off the breakpoints, with central
/// differences inside segments.
pub fn delay_residual(d: &DelayEquationDescriptor, v: &DiscreteLoop) -> Result<f64> {
    if v.level != 0 || !v.is_loop() {
        return invalid("delay residuals are defined for loops on M");
    }
    let n = v.intervals();
    let skip = breakpoint_nodes(d, n)?;
    let h = v.step();
    let mut worst: f64 = 0.0;
    for i in 1..n {
        if skip.binary_search(&i).is_ok() {
            continue;
        }
        let rhs = d.rhs_eval(v, i as f64 * h);
        let (a, b) = (v.node(i - 1), v.node(i + 1));
        for c in 0..v.dim() {
            worst = worst.max(((b[c] - a[c]) / (2.0 * h) - rhs[c]).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicConfig {
    /// Collocation intervals; every breakpoint must be a node.
    pub intervals: usize,
    pub newton: NewtonConfig,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        PeriodicConfig { intervals: 512, newton: NewtonConfig { max_iter: 20, tol: 1e-9, ..NewtonConfig::default() } }
    }
}

/// Newton on the midpoint collocation equations
/// `(v_{i+1} − v_i)/h = rhs(t_{i+½})`, with the local value `(v_i + v_{i+1})/2`
/// and delayed values read from the interpolant of the current iterate.
/// Unknowns are `v_0..v_{N−1}`; periodicity closes the system
/// (`v_N = v_0 + winding` on the torus).
pub fn solve_periodic_delay(d: &DelayEquationDescriptor, seed: &DiscreteLoop, cfg: &PeriodicConfig) -> Result<DiscreteLoop> {
    if seed.level != 0 || !seed.is_loop() {
        return invalid("the periodic solver needs a loop on M as seed");
    }
    let n = cfg.intervals;
    breakpoint_nodes(d, n)?;
    let seed = seed.resample(n)?;
    let dim = seed.dim();
    let space = seed.space;
    let winding: Vec<f64> = seed.winding().iter().map(|&w| w as f64).collect();
    let bps = interior_breakpoints(d);
    let h = 1.0 / n as f64;

    let build = |x: &[f64]| -> Result<DiscreteLoop> {
        let mut samples = Vec::with_capacity((n + 1) * dim);
        samples.extend_from_slice(x);
        samples.extend(x[..dim].iter().zip(&winding).map(|(a, w)| a + w));
        DiscreteLoop::loop_from_nodes(space, n, samples, &bps)
    };
    let equations = |x: &[f64]| -> Result<Vec<f64>> {
        let v = build(x)?;
        let mut out = Vec::with_capacity(n * dim);
        let mut mid = vec![0.0; dim];
        for i in 0..n {
            let (a, b) = (v.node(i), v.node(i + 1));
            for c in 0..dim {
                mid[c] = 0.5 * (a[c] + b[c]);
            }
            let rhs = d.rhs_eval_at(&v, (i as f64 + 0.5) * h, &mid);
            out.extend((0..dim).map(|c| (b[c] - a[c]) / h - rhs[c]));
        }
        Ok(out)
    };
    let x0 = seed.samples_flat()[..n * dim].to_vec();
    let solved = newton::solve(equations, &x0, &cfg.newton)?;
    let mut v = build(&solved.x)?;
    v.set_breakpoints(&bps)?;
    Ok(v)
}
