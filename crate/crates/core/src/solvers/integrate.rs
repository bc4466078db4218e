//! Fixed-step classical Runge–Kutta integration of `ż = X_K(z, t)` on `M_n`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{build_level, PhaseSpace, ProductPoint};
use crate::hamiltonians::{symplectic_gradient_with, Hamiltonian, X_SIGN};
use crate::rational::lcm_denominator;
use crate::transforms::{segment_table, DiscretePath, TransformChain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Number of RK4 steps on `[0, 1]`.
    pub intervals: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::with_exponent(10)
    }
}

impl IntegratorConfig {
    /// Step `2^{−m}`.
    pub fn with_exponent(m: u32) -> Self {
        IntegratorConfig { intervals: 1 << m }
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    /// Smallest multiple of the current step count that puts every breakpoint
    /// of the chain on a step boundary. Non-affine chains are left unchanged.
    pub fn aligned_to(&self, chain: &TransformChain) -> Result<Self> {
        if chain.level() == 0 {
            return Ok(*self);
        }
        let Some(bps) = segment_table(chain)?.breakpoints_exact() else {
            return Ok(*self);
        };
        let den = lcm_denominator(&bps) as usize;
        let g = num_integer::gcd(self.intervals, den);
        Ok(IntegratorConfig { intervals: self.intervals * (den / g) })
    }
}

/// The vector field of `K` at level `n` with an explicit orientation.
pub struct Field<'a, H: Hamiltonian + ?Sized> {
    pub k: &'a H,
    pub signs: Vec<i8>,
    pub dim: usize,
    pub orientation: f64,
    grad: Vec<f64>,
}

impl<'a, H: Hamiltonian + ?Sized> Field<'a, H> {
    pub fn new(k: &'a H, dim: usize) -> Result<Self> {
        Self::with_orientation(k, dim, X_SIGN)
    }

    pub fn with_orientation(k: &'a H, dim: usize, orientation: f64) -> Result<Self> {
        let level = build_level(k.level())?;
        let grad = vec![0.0; level.copies() * dim];
        Ok(Field { k, signs: level.signs, dim, orientation, grad })
    }

    pub fn eval(&mut self, z: &[f64], t: f64, out: &mut [f64]) {
        self.k.gradient_into(z, self.dim, t, &mut self.grad);
        symplectic_gradient_with(self.orientation, &self.signs, self.dim, &self.grad, out);
    }
}

/// RK4 over `[0, 1]`, returning all `N + 1` nodes flat.
pub fn rk4_nodes(mut f: impl FnMut(&[f64], f64, &mut [f64]), z0: &[f64], intervals: usize) -> Result<Vec<f64>> {
    let w = z0.len();
    let h = 1.0 / intervals as f64;
    let mut out = Vec::with_capacity((intervals + 1) * w);
    out.extend_from_slice(z0);
    let mut z = z0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w]);
    for i in 0..intervals {
        let t = i as f64 * h;
        f(&z, t, &mut k1);
        axpy(&z, 0.5 * h, &k1, &mut tmp);
        f(&tmp, t + 0.5 * h, &mut k2);
        axpy(&z, 0.5 * h, &k2, &mut tmp);
        f(&tmp, t + 0.5 * h, &mut k3);
        axpy(&z, h, &k3, &mut tmp);
        f(&tmp, t + h, &mut k4);
        for c in 0..w {
            z[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::Overflow(format!("trajectory left the finite range at t = {t}")));
        }
        out.extend_from_slice(&z);
    }
    Ok(out)
}

fn axpy(z: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(z).zip(k) {
        *o = x + a * y;
    }
}

/// Trajectory of `ż = X_K(z, t)` from `z0` on `[0, 1]`, in lifted coordinates.
pub fn integrate<H: Hamiltonian + ?Sized>(k: &H, space: PhaseSpace, z0: &ProductPoint, cfg: &IntegratorConfig) -> Result<DiscretePath> {
    let copies = 1usize << k.level();
    if z0.copies() != copies || z0.dim() != space.dim() {
        return invalid(format!("start point has {} copies of dimension {}, expected {copies} of {}", z0.copies(), z0.dim(), space.dim()));
    }
    let mut field = Field::new(k, space.dim())?;
    let nodes = rk4_nodes(|z, t, out| field.eval(z, t, out), z0.as_flat(), cfg.intervals)?;
    DiscretePath::from_nodes(space, k.level(), cfg.intervals, nodes)
}

/// End point of the flow from `z0`, without storing the trajectory.
pub fn flow_end<H: Hamiltonian + ?Sized>(k: &H, dim: usize, z0: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let mut field = Field::new(k, dim)?;
    flow_end_with(|z, t, out| field.eval(z, t, out), z0, cfg)
}

pub fn flow_end_with(mut f: impl FnMut(&[f64], f64, &mut [f64]), z0: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let w = z0.len();
    let h = cfg.step();
    let mut z = z0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w]);
    for i in 0..cfg.intervals {
        let t = i as f64 * h;
        f(&z, t, &mut k1);
        axpy(&z, 0.5 * h, &k1, &mut tmp);
        f(&tmp, t + 0.5 * h, &mut k2);
        axpy(&z, 0.5 * h, &k2, &mut tmp);
        f(&tmp, t + 0.5 * h, &mut k3);
        axpy(&z, h, &k3, &mut tmp);
        f(&tmp, t + h, &mut k4);
        for c in 0..w {
            z[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow("trajectory left the finite range".into()));
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{Factor, Monomial, Spatial, StructuredHamiltonian};
    use crate::rational::q;

    #[test]
    fn zero_hamiltonian_is_stationary() {
        let z0 = ProductPoint::from_flat(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let path = integrate(&StructuredHamiltonian::zero(1), PhaseSpace::torus(1), &z0, &IntegratorConfig::with_exponent(6)).unwrap();
        assert_eq!(path.node(64), z0.as_flat());
    }

    #[test]
    fn harmonic_oscillator_has_period_one() {
        let pi = std::f64::consts::PI;
        let osc = Spatial::Polynomial {
            terms: vec![Monomial { coeff: pi, powers: vec![2, 0] }, Monomial { coeff: pi, powers: vec![0, 2] }],
        };
        let h = StructuredHamiltonian::sum_of(0, vec![Factor::autonomous(0, osc)]).unwrap();
        let z0 = ProductPoint::from_flat(2, vec![1.0, 0.0]).unwrap();
        let path = integrate(&h, PhaseSpace::plane(1), &z0, &IntegratorConfig::default()).unwrap();
        let end = path.node(path.intervals());
        assert!((end[0] - 1.0).abs() < 1e-8 && end[1].abs() < 1e-8, "{end:?}");
        // a quarter period later the orientation fixed by X_SIGN is visible
        let quarter = path.node(path.intervals() / 4);
        assert!((quarter[1] - X_SIGN).abs() < 1e-8);
    }

    #[test]
    fn critical_point_stays_fixed() {
        let h = StructuredHamiltonian::sum_of(
            0,
            vec![Factor::autonomous(0, Spatial::trig(0.05, vec![1, 0], 0.0)), Factor::autonomous(0, Spatial::trig(0.05, vec![0, 1], 0.0))],
        )
        .unwrap();
        let z0 = ProductPoint::from_flat(2, vec![0.0, 0.0]).unwrap();
        let path = integrate(&h, PhaseSpace::torus(1), &z0, &IntegratorConfig::default()).unwrap();
        assert!(path.node(path.intervals()).iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn alignment_with_chain_breakpoints() {
        let cfg = IntegratorConfig::with_exponent(4);
        assert_eq!(cfg.aligned_to(&TransformChain::standard(3)).unwrap().intervals, 16);
        let chain = TransformChain::affine_r(&[q(1, 3), q(2, 5)]).unwrap();
        assert_eq!(cfg.aligned_to(&chain).unwrap().intervals % 15, 0);
    }
}
