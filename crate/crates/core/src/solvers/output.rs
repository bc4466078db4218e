//! CSV and JSON views of chords, loops and orbit sets.

use std::fmt::Write;

use serde::Serialize;

use crate::solvers::chords::OrbitSet;
use crate::transforms::DiscretePath;

/// `t,copy,coord_index,value` with one-based copy and coordinate indices.
pub fn chord_csv(path: &DiscretePath) -> String {
    let mut s = String::from("t,copy,coord_index,value\n");
    for k in 0..=path.intervals() {
        let t = k as f64 * path.step();
        for j in 0..path.copies() {
            for (c, x) in path.node_copy(k, j).iter().enumerate() {
                writeln!(s, "{t},{},{},{x}", j + 1, c + 1).unwrap();
            }
        }
    }
    s
}

/// `t,coord_index,value` for a loop on `M`.
pub fn loop_csv(v: &DiscretePath) -> String {
    let mut s = String::from("t,coord_index,value\n");
    for k in 0..=v.intervals() {
        let t = k as f64 * v.step();
        for (c, x) in v.node_copy(k, 0).iter().enumerate() {
            writeln!(s, "{t},{},{x}", c + 1).unwrap();
        }
    }
    s
}

#[derive(Serialize)]
pub struct OrbitSummary {
    pub level: usize,
    pub count: usize,
    pub degenerate: bool,
    pub seeds: usize,
    pub converged: usize,
    pub failures: FailureTally,
    pub dedup_tol: f64,
    pub max_residual: f64,
    pub orbits: Vec<OrbitEntry>,
}

#[derive(Serialize)]
pub struct FailureTally {
    pub no_convergence: usize,
    pub singular_jacobian: usize,
    pub other: usize,
}

#[derive(Serialize)]
pub struct OrbitEntry {
    pub params: Vec<f64>,
    pub start_residual: f64,
    pub end_residual: f64,
    pub iterations: usize,
    /// `null` when not finite.
    pub condition: Option<f64>,
}

pub fn summary(set: &OrbitSet) -> OrbitSummary {
    OrbitSummary {
        level: set.level,
        count: set.count(),
        degenerate: set.degenerate,
        seeds: set.seeds,
        converged: set.converged,
        failures: FailureTally { no_convergence: set.no_convergence, singular_jacobian: set.singular, other: set.other_failures },
        dedup_tol: set.dedup_tol,
        max_residual: set.max_residual(),
        orbits: set
            .orbits
            .iter()
            .map(|c| OrbitEntry {
                params: c.params.clone(),
                start_residual: c.start_residual,
                end_residual: c.end_residual,
                iterations: c.iterations,
                condition: c.condition.is_finite().then_some(c.condition),
            })
            .collect(),
    }
}
