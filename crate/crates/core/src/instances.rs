//! Reference Hamiltonians and loops shared by the test suites, the presets
//! and the command-line tool.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::PhaseSpace;
use crate::hamiltonians::{Factor, Spatial, StructuredHamiltonian, Term, TimeProfile, TrigMode};
use crate::transforms::{DiscreteLoop, DiscretePath};

/// `0.05 (cos 2πx + cos 2πy)` on `T²`: four nondegenerate critical points
/// at the half-integer lattice.
pub fn torus_morse() -> StructuredHamiltonian {
    StructuredHamiltonian::sum_of(
        0,
        vec![
            Factor::autonomous(0, Spatial::trig(0.05, vec![1, 0], 0.0)),
            Factor::autonomous(0, Spatial::trig(0.05, vec![0, 1], 0.0)),
        ],
    )
    .expect("valid")
}

/// Critical points of [`torus_morse`].
pub fn torus_morse_critical_points() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [0.0, 0.5], [0.5, 0.0], [0.5, 0.5]]
}

/// `K_t(z₁, z₂) = 0.2 · F_t(z₁) G(z₂)` on `T² × T²` with small trig
/// polynomials whose gradients never vanish together, so its chords move.
pub fn product_k_t4() -> StructuredHamiltonian {
    let f = Factor::new(
        0,
        Spatial::TrigPoly {
            offset: 0.5,
            modes: vec![
                TrigMode { amp: 0.2, freq: vec![1, 0], phase: 0.0 },
                TrigMode { amp: 0.1, freq: vec![0, 1], phase: 0.5 },
            ],
        },
        TimeProfile::Trig { amp: 0.3, freq: 1, phase: 0.0, offset: 1.0 },
    );
    let g = Factor::autonomous(
        1,
        Spatial::TrigPoly {
            offset: 0.5,
            modes: vec![
                TrigMode { amp: 0.15, freq: vec![0, 1], phase: 0.0 },
                TrigMode { amp: 0.1, freq: vec![1, 1], phase: 1.0 },
            ],
        },
    );
    StructuredHamiltonian::product_of(1, vec![f, g]).expect("valid").scaled(0.2)
}

/// A generic autonomous factor on copy `copy` (zero-based), distinct per copy.
pub fn labelled_factor(copy: usize) -> Factor {
    let c = copy as f64;
    Factor::autonomous(copy, Spatial::trig(0.1 + 0.01 * c, vec![1, 1 - (copy as i64 % 3)], 0.3 * c))
}

/// `Σ_j F^j(z_j)` at the given level.
pub fn sum_of_factors(level: usize) -> StructuredHamiltonian {
    StructuredHamiltonian::sum_of(level, (0..1 << level).map(labelled_factor).collect()).expect("valid")
}

/// `Π_j F^j(z_j)` at the given level.
pub fn product_of_factors(level: usize) -> StructuredHamiltonian {
    StructuredHamiltonian::product_of(level, (0..1 << level).map(labelled_factor).collect()).expect("valid")
}

/// `F¹F⁴ + F²F³` on `M_2`, one-based copy labels.
pub fn one_four_two_three() -> StructuredHamiltonian {
    pairs(&[(1, 4), (2, 3)])
}

/// A sum of two-factor products, one-based copy labels, at level 2.
pub fn pairs(ps: &[(usize, usize)]) -> StructuredHamiltonian {
    let terms = ps.iter().map(|&(a, b)| Term::new(1.0, vec![labelled_factor(a - 1), labelled_factor(b - 1)])).collect();
    StructuredHamiltonian::new(2, terms).expect("valid")
}

/// A loop `c + Σ_k a_k cos 2πkt + b_k sin 2πkt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigLoop {
    pub center: Vec<f64>,
    /// `(k, a, b)` with `a`, `b` of the phase space dimension.
    pub modes: Vec<(u32, Vec<f64>, Vec<f64>)>,
}

impl TrigLoop {
    pub fn unit_circle() -> Self {
        TrigLoop { center: vec![0.0, 0.0], modes: vec![(1, vec![1.0, 0.0], vec![0.0, 1.0])] }
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.center);
        for (k, a, b) in &self.modes {
            let (c, s) = ((TAU * *k as f64 * t).cos(), (TAU * *k as f64 * t).sin());
            for (i, o) in out.iter_mut().enumerate() {
                *o += a[i] * c + b[i] * s;
            }
        }
    }

    pub fn sample(&self, space: PhaseSpace, intervals: usize) -> Result<DiscreteLoop> {
        DiscretePath::loop_from_fn(space, intervals, |t, z| self.eval(t, z))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random contractible loop on a 2-dimensional base: frequencies 1 and 2,
/// each coefficient at most 0.1 in size.
pub fn random_trig_loop(rng: &mut impl Rng) -> TrigLoop {
    let center = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    let modes = (1..=2)
        .map(|k| {
            let mut v = || (0..2).map(|_| rng.gen_range(-0.1..0.1)).collect::<Vec<f64>>();
            (k, v(), v())
        })
        .collect();
    TrigLoop { center, modes }
}

/// A random time-dependent trig Hamiltonian on a 2-dimensional base.
pub fn random_trig_hamiltonian(rng: &mut impl Rng) -> StructuredHamiltonian {
    let factors = (0..2)
        .map(|_| {
            let freq = vec![rng.gen_range(-2i64..=2), rng.gen_range(1i64..=2)];
            let space = Spatial::trig(rng.gen_range(0.1..0.5), freq, rng.gen_range(0.0..TAU));
            let time = TimeProfile::Trig {
                amp: rng.gen_range(0.1..0.5),
                freq: rng.gen_range(1i64..=2),
                phase: rng.gen_range(0.0..TAU),
                offset: rng.gen_range(0.5..1.0),
            };
            Factor::new(0, space, time)
        })
        .collect();
    StructuredHamiltonian::sum_of(0, factors).expect("valid")
}
