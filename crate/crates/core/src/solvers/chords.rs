//! Hamiltonian chords from `Δ_n^0` to `Δ_n^1` by shooting, their multistart
//! enumeration, pullback to loops, and the flow-map fixed-point baseline.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{build_level, BasePoint, Diagonal, LevelStructure, PhaseSpace, ProductPoint};
use crate::hamiltonians::{Hamiltonian, StructuredHamiltonian};
use crate::solvers::integrate::{flow_end, integrate, IntegratorConfig};
use crate::solvers::newton::{self, NewtonConfig};
use crate::transforms::{phi_chain, DiscreteLoop, DiscretePath, TransformChain};

/// Default sup distance below which two solutions are identified.
pub const DEDUP_TOL: f64 = 1e-5;

/// Upper bound on the number of multistart seeds.
pub const MAX_SEEDS: usize = 1 << 16;

fn embed(level: &LevelStructure, dim: usize, params: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; level.copies() * dim];
    for (i, &(a, b)) in level.matching0.iter().enumerate() {
        let p = &params[i * dim..(i + 1) * dim];
        z[a * dim..(a + 1) * dim].copy_from_slice(p);
        z[b * dim..(b + 1) * dim].copy_from_slice(p);
    }
    z
}

fn end_residual(level: &LevelStructure, space: &PhaseSpace, end: &[f64]) -> Vec<f64> {
    let dim = space.dim();
    level
        .matching1
        .iter()
        .flat_map(|&(a, b)| space.wrapped_difference(&end[a * dim..(a + 1) * dim], &end[b * dim..(b + 1) * dim]))
        .collect()
}

/// Number of real shooting parameters, `2^{n−1} · 2d`.
pub fn param_count(level: usize, space: &PhaseSpace) -> usize {
    (1usize << level.saturating_sub(1)) * space.dim()
}

/// Wrapped differences over the pairs of `Δ_n^1` at `t = 1` of the trajectory
/// starting at the point of `Δ_n^0` with the given parameters.
pub fn shoot_residual<H: Hamiltonian + ?Sized>(k: &H, space: &PhaseSpace, params: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let level = build_level(k.level())?;
    if level.level == 0 {
        return invalid("chords live on levels n ≥ 1");
    }
    if params.len() != param_count(level.level, space) {
        return invalid(format!("expected {} shooting parameters, got {}", param_count(level.level, space), params.len()));
    }
    let z0 = embed(&level, space.dim(), params);
    let end = flow_end(k, space.dim(), &z0, cfg)?;
    Ok(end_residual(&level, space, &end))
}

#[derive(Clone, Debug)]
pub struct Chord {
    pub level: usize,
    /// Start parameters on `Δ_n^0`, one point per matched pair, flat.
    pub params: Vec<f64>,
    pub path: DiscretePath,
    pub start_residual: f64,
    pub end_residual: f64,
    pub iterations: usize,
    pub condition: f64,
}

impl Chord {
    /// Integrates from the given parameters and records the boundary residuals.
    pub fn from_params<H: Hamiltonian + ?Sized>(k: &H, space: &PhaseSpace, params: &[f64], cfg: &IntegratorConfig) -> Result<Self> {
        let level = build_level(k.level())?;
        let dim = space.dim();
        let z0 = ProductPoint::from_flat(dim, embed(&level, dim, params))?;
        let path = integrate(k, *space, &z0, cfg)?;
        let start_residual = level.diagonal_deviation(space, Diagonal::Zero, &path.node_point(0));
        let end_residual = level.diagonal_deviation(space, Diagonal::One, &path.node_point(path.intervals()));
        Ok(Chord {
            level: level.level,
            params: params.to_vec(),
            path,
            start_residual,
            end_residual,
            iterations: 0,
            condition: f64::NAN,
        })
    }

    pub fn param_points(&self) -> Vec<BasePoint> {
        self.params.chunks(self.path.dim()).map(<[f64]>::to_vec).collect()
    }
}

fn normalized(space: &PhaseSpace, x: &[f64]) -> Vec<f64> {
    let mut x = x.to_vec();
    space.normalize(&mut x);
    x
}

pub fn solve_chord<H: Hamiltonian + ?Sized>(
    k: &H,
    space: &PhaseSpace,
    seed: &[f64],
    newton_cfg: &NewtonConfig,
    integ: &IntegratorConfig,
) -> Result<Chord> {
    let out = newton::solve(|p| shoot_residual(k, space, p, integ), seed, newton_cfg)?;
    let mut chord = Chord::from_params(k, space, &normalized(space, &out.x), integ)?;
    chord.iterations = out.iterations;
    chord.condition = out.condition;
    Ok(chord)
}

/// Seeds on a uniform cell-centred grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub points_per_dim: usize,
    /// Box `[lo, hi]` per coordinate; required on the plane, `[0, 1]` on the torus.
    pub bounds: Option<(f64, f64)>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points_per_dim: 8, bounds: None }
    }
}

impl GridSpec {
    fn seeds(&self, space: &PhaseSpace, dims: usize) -> Result<Vec<Vec<f64>>> {
        let (lo, hi) = match (self.bounds, space.is_torus()) {
            (Some(b), _) => b,
            (None, true) => (0.0, 1.0),
            (None, false) => return invalid("enumeration on the plane needs an explicit bounding box"),
        };
        let g = self.points_per_dim.max(1);
        let total = g.checked_pow(dims as u32).filter(|&t| t <= MAX_SEEDS).ok_or_else(|| {
            Error::InvalidInput(format!("{g}^{dims} seeds exceed the limit of {MAX_SEEDS}; lower the grid"))
        })?;
        Ok((0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; dims];
                for c in (0..dims).rev() {
                    p[c] = lo + (hi - lo) * ((idx % g) as f64 + 0.5) / g as f64;
                    idx /= g;
                }
                p
            })
            .collect())
    }
}

/// Distinct solutions of a multistart search.
#[derive(Clone, Debug)]
pub struct OrbitSet {
    pub level: usize,
    /// Canonically sorted by start parameters.
    pub orbits: Vec<Chord>,
    pub dedup_tol: f64,
    /// Set when solutions are not isolated (singular Jacobians).
    pub degenerate: bool,
    pub seeds: usize,
    pub converged: usize,
    pub no_convergence: usize,
    pub singular: usize,
    pub other_failures: usize,
}

impl OrbitSet {
    pub fn count(&self) -> usize {
        self.orbits.len()
    }

    pub fn max_residual(&self) -> f64 {
        self.orbits.iter().map(|c| c.end_residual.max(c.start_residual)).fold(0.0, f64::max)
    }

    fn empty(level: usize, seeds: usize) -> Self {
        OrbitSet {
            level,
            orbits: Vec::new(),
            dedup_tol: DEDUP_TOL,
            degenerate: false,
            seeds,
            converged: 0,
            no_convergence: 0,
            singular: 0,
            other_failures: 0,
        }
    }

    fn absorb(&mut self, space: &PhaseSpace, outcome: Result<Chord>, max_condition: f64) {
        match outcome {
            Ok(c) => {
                self.converged += 1;
                if !(c.condition <= max_condition) {
                    self.degenerate = true;
                }
                let dup = self.orbits.iter().any(|o| space.sup_distance(&o.params, &c.params) <= self.dedup_tol);
                if !dup {
                    self.orbits.push(c);
                }
            }
            Err(Error::NoConvergence { .. }) => self.no_convergence += 1,
            Err(Error::SingularJacobian { .. }) => {
                self.singular += 1;
                self.degenerate = true;
            }
            Err(_) => self.other_failures += 1,
        }
    }

    fn finish(mut self) -> Self {
        self.orbits.sort_by(|a, b| a.params.partial_cmp(&b.params).unwrap_or(std::cmp::Ordering::Equal));
        self
    }
}

pub fn enumerate_chords<H: Hamiltonian + ?Sized>(
    k: &H,
    space: &PhaseSpace,
    grid: &GridSpec,
    newton_cfg: &NewtonConfig,
    integ: &IntegratorConfig,
) -> Result<OrbitSet> {
    let dims = param_count(k.level(), space);
    let seeds = grid.seeds(space, dims)?;
    let mut set = OrbitSet::empty(k.level(), seeds.len());
    for seed in &seeds {
        set.absorb(space, solve_chord(k, space, seed, newton_cfg, integ), newton_cfg.max_condition);
    }
    Ok(set.finish())
}

/// `Φ^n` applied to the chord: a loop on `M` with kinks at segment boundaries.
pub fn pullback_chord(chord: &Chord, chain: &TransformChain) -> Result<DiscreteLoop> {
    if chord.level != chain.level() {
        return Err(Error::LevelMismatch { expected: chain.level(), found: chord.level });
    }
    phi_chain(chain, &chord.path)
}

/// Fixed points of the time-1 map of a base Hamiltonian on the torus: a grid
/// scan of `|φ¹(z) − z|`, Newton polish of the grid-local minima, deduplication.
pub fn flow_fixed_points(
    h: &StructuredHamiltonian,
    space: &PhaseSpace,
    points_per_dim: usize,
    newton_cfg: &NewtonConfig,
    integ: &IntegratorConfig,
) -> Result<OrbitSet> {
    if h.level != 0 {
        return Err(Error::LevelMismatch { expected: 0, found: h.level });
    }
    if !space.is_torus() {
        return invalid("the fixed-point scan needs a torus base");
    }
    let dim = space.dim();
    let grid = GridSpec { points_per_dim, bounds: Some((0.0, 1.0)) };
    let g = points_per_dim;
    let pts: Vec<Vec<f64>> = grid
        .seeds(space, dim)?
        .into_iter()
        .map(|p| p.iter().map(|x| x - 0.5 / g as f64).collect())
        .collect();
    let residual = |z: &[f64]| -> Result<Vec<f64>> {
        let end = flow_end(h, dim, z, integ)?;
        Ok(space.wrapped_difference(&end, z))
    };
    let values: Vec<f64> = pts.iter().map(|z| residual(z).map(|r| newton::sup_norm(&r))).collect::<Result<_>>()?;
    let mut set = OrbitSet::empty(0, pts.len());
    if values.iter().all(|&v| v <= newton_cfg.tol) {
        set.degenerate = true;
        return Ok(set);
    }
    let stride = |c: usize| g.pow((dim - 1 - c) as u32);
    for (idx, &v) in values.iter().enumerate() {
        let is_min = (0..dim).all(|c| {
            let s = stride(c);
            let digit = (idx / s) % g;
            let up = idx - digit * s + ((digit + 1) % g) * s;
            let down = idx - digit * s + ((digit + g - 1) % g) * s;
            v <= values[up] && v <= values[down]
        });
        if !is_min {
            continue;
        }
        let outcome = newton::solve(residual, &pts[idx], newton_cfg).and_then(|out| {
            let z = normalized(space, &out.x);
            let path = integrate(h, *space, &ProductPoint::from_flat(dim, z.clone())?, integ)?;
            let end_residual = space.sup_distance(path.node(0), path.node(path.intervals()));
            Ok(Chord {
                level: 0,
                params: z,
                path,
                start_residual: 0.0,
                end_residual,
                iterations: out.iterations,
                condition: out.condition,
            })
        });
        set.absorb(space, outcome, newton_cfg.max_condition);
    }
    Ok(set.finish())
}
