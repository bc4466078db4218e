//! Structured Hamiltonians on `M_n` (weighted sums of products of per-copy
//! factors), their signed vector fields, and the lift `H ↦ H^n` along a chain.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{LevelStructure, PhaseSpace, ProductPoint, ProductTangent};
use crate::rational::{ratio_str, to_f64, Q};
use crate::transforms::{copy_time_maps, printed_tau_maps, TimeMap, TransformChain};

/// Orientation of Hamiltonian vector fields: `X_H = X_SIGN · J∇H` with
/// `J(ξ_x, ξ_y) = (−ξ_y, ξ_x)`.
///
/// With `ω = Σ dx_i ∧ dy_i` and `A_H(v) = −∫ v̄*ω − ∫ H_t(v) dt`, the critical
/// points of `A_H` solve `ι_{v̇} ω = dH`, i.e. `v̇ = −J∇H`. The value `−1`
/// makes chords and periodic orbits critical for the action; the action
/// module's criticality test checks this numerically.
pub const X_SIGN: f64 = -1.0;

/// Spatial part of a factor, a function on one copy of `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spatial {
    /// `amp · cos(2π ⟨freq, z⟩ + phase)`
    Trig {
        amp: f64,
        freq: Vec<i64>,
        #[serde(default)]
        phase: f64,
    },
    /// `offset + Σ amp · cos(2π ⟨freq, z⟩ + phase)` over the modes.
    TrigPoly {
        #[serde(default)]
        offset: f64,
        modes: Vec<TrigMode>,
    },
    Polynomial { terms: Vec<Monomial> },
    Const { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigMode {
    pub amp: f64,
    pub freq: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Spatial {
    pub fn trig(amp: f64, freq: Vec<i64>, phase: f64) -> Self {
        Spatial::Trig { amp, freq, phase }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            Spatial::Trig { amp, freq, phase } => amp * (TAU * dot(freq, z) + phase).cos(),
            Spatial::TrigPoly { offset, modes } => {
                offset + modes.iter().map(|m| m.amp * (TAU * dot(&m.freq, z) + m.phase).cos()).sum::<f64>()
            }
            Spatial::Polynomial { terms } => terms.iter().map(|m| m.coeff * monomial(&m.powers, z, None)).sum(),
            Spatial::Const { value } => *value,
        }
    }

    /// Adds `scale · ∇(self)(z)` to `out`.
    pub fn add_gradient(&self, z: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Spatial::Trig { amp, freq, phase } => {
                let s = -scale * amp * TAU * (TAU * dot(freq, z) + phase).sin();
                for (o, &k) in out.iter_mut().zip(freq) {
                    *o += s * k as f64;
                }
            }
            Spatial::TrigPoly { modes, .. } => {
                for m in modes {
                    let s = -scale * m.amp * TAU * (TAU * dot(&m.freq, z) + m.phase).sin();
                    for (o, &k) in out.iter_mut().zip(&m.freq) {
                        *o += s * k as f64;
                    }
                }
            }
            Spatial::Polynomial { terms } => {
                for m in terms {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += scale * m.coeff * monomial(&m.powers, z, Some(i));
                    }
                }
            }
            Spatial::Const { .. } => {}
        }
    }

    fn check(&self, space: &PhaseSpace) -> Result<()> {
        let dim = space.dim();
        match self {
            Spatial::Trig { freq, .. } if freq.len() != dim => {
                invalid(format!("trig factor has {} frequencies, expected {dim}", freq.len()))
            }
            Spatial::TrigPoly { modes, .. } if modes.iter().any(|m| m.freq.len() != dim) => {
                invalid(format!("trig modes need {dim} frequencies"))
            }
            Spatial::Polynomial { terms } => {
                if terms.iter().any(|m| m.powers.len() != dim) {
                    return invalid(format!("polynomial monomials need {dim} exponents"));
                }
                if space.is_torus() && terms.iter().any(|m| m.powers.iter().any(|&p| p > 0)) {
                    return invalid("non-constant polynomials are not defined on the torus");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn dot(k: &[i64], z: &[f64]) -> f64 {
    k.iter().zip(z).map(|(&k, &x)| k as f64 * x).sum()
}

/// `Π z_i^{p_i}`, or its partial derivative in `z_d` when `d` is given.
fn monomial(powers: &[u32], z: &[f64], d: Option<usize>) -> f64 {
    let mut v = 1.0;
    for (i, (&p, &x)) in powers.iter().zip(z).enumerate() {
        if Some(i) == d {
            if p == 0 {
                return 0.0;
            }
            v *= p as f64 * x.powi(p as i32 - 1);
        } else {
            v *= x.powi(p as i32);
        }
    }
    v
}

/// Time dependence of a factor; every profile is 1-periodic except `affine`,
/// which reparametrizes an inner profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Const {
        #[serde(default = "one")]
        value: f64,
    },
    /// `offset + amp · cos(2π freq t + phase)`
    Trig {
        amp: f64,
        freq: i64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Smooth bump of the given height supported on `|t − center| < width` (mod 1).
    Bump {
        center: f64,
        width: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// Periodic cubic Hermite through `[t, value]` knots with `t ∈ [0, 1)`.
    Tabulated { knots: Vec<[f64; 2]> },
    /// `inner(slope · t + offset)`
    Affine {
        #[serde(with = "ratio_str")]
        slope: Q,
        #[serde(with = "ratio_str")]
        offset: Q,
        inner: Box<TimeProfile>,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for TimeProfile {
    fn default() -> Self {
        TimeProfile::Const { value: 1.0 }
    }
}

impl TimeProfile {
    pub fn is_const(&self) -> bool {
        match self {
            TimeProfile::Const { .. } => true,
            TimeProfile::Affine { inner, .. } => inner.is_const(),
            _ => false,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Const { value } => *value,
            TimeProfile::Trig { amp, freq, phase, offset } => offset + amp * (TAU * *freq as f64 * t + phase).cos(),
            TimeProfile::Bump { center, width, height } => {
                let d = t - center;
                let s = (d - d.round()) / width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            TimeProfile::Tabulated { knots } => periodic_hermite(knots, t),
            TimeProfile::Affine { slope, offset, inner } => inner.value(to_f64(slope) * t + to_f64(offset)),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            TimeProfile::Bump { width, .. } if !(*width > 0.0 && *width <= 0.5) => {
                invalid("bump width must lie in (0, 1/2]")
            }
            TimeProfile::Tabulated { knots } => {
                if knots.len() < 2 {
                    return invalid("tabulated profile needs at least two knots");
                }
                if knots.windows(2).any(|w| w[1][0] <= w[0][0]) || knots[0][0] < 0.0 || knots[knots.len() - 1][0] >= 1.0 {
                    return invalid("tabulated knot times must increase inside [0, 1)");
                }
                Ok(())
            }
            TimeProfile::Affine { inner, .. } => inner.check(),
            _ => Ok(()),
        }
    }
}

fn periodic_hermite(knots: &[[f64; 2]], t: f64) -> f64 {
    let n = knots.len();
    let u = t - t.floor();
    // knot i extended periodically
    let at = |i: isize| {
        let k = knots[i.rem_euclid(n as isize) as usize];
        [k[0] + i.div_euclid(n as isize) as f64, k[1]]
    };
    let i = knots.partition_point(|k| k[0] <= u) as isize - 1;
    let (p0, p1) = (at(i), at(i + 1));
    let slope = |j: isize| {
        let (a, b) = (at(j - 1), at(j + 1));
        (b[1] - a[1]) / (b[0] - a[0])
    };
    let h = p1[0] - p0[0];
    let s = (u - p0[0]) / h;
    let (h00, h10, h01, h11) = crate::transforms::reparam::hermite_basis(s);
    h00 * p0[1] + h10 * h * slope(i) + h01 * p1[1] + h11 * h * slope(i + 1)
}

/// One factor `F(z_copy, t) = spatial(z_copy) · time(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    /// Zero-based copy index (one-based in JSON).
    #[serde(with = "one_based")]
    pub copy: usize,
    pub space: Spatial,
    #[serde(default)]
    pub time: TimeProfile,
}

mod one_based {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*x as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = usize::deserialize(d)?;
        v.checked_sub(1).ok_or_else(|| de::Error::custom("copy indices start at 1"))
    }
}

impl Factor {
    pub fn new(copy: usize, space: Spatial, time: TimeProfile) -> Self {
        Factor { copy, space, time }
    }

    pub fn autonomous(copy: usize, space: Spatial) -> Self {
        Factor::new(copy, space, TimeProfile::default())
    }

    pub fn value(&self, z: &[f64], t: f64) -> f64 {
        self.space.value(z) * self.time.value(t)
    }

    /// Spatial gradient of the factor at `(z, t)`, added into `out` with weight `scale`.
    pub fn add_gradient(&self, z: &[f64], t: f64, scale: f64, out: &mut [f64]) {
        self.space.add_gradient(z, scale * self.time.value(t), out);
    }

    pub fn is_zero(&self) -> bool {
        match &self.space {
            Spatial::Const { value } => *value == 0.0,
            Spatial::Trig { amp, .. } => *amp == 0.0,
            Spatial::TrigPoly { offset, modes } => *offset == 0.0 && modes.iter().all(|m| m.amp == 0.0),
            Spatial::Polynomial { terms } => terms.iter().all(|m| m.coeff == 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coeff: f64, factors: Vec<Factor>) -> Self {
        Term { coeff, factors }
    }

    pub fn factor_on(&self, copy: usize) -> Option<&Factor> {
        self.factors.iter().find(|f| f.copy == copy)
    }
}

/// `K(z, t) = Σ_p c_p Π_{j ∈ S_p} F^{p,j}(z_j, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredHamiltonian {
    pub level: usize,
    #[serde(default)]
    pub terms: Vec<Term>,
}

/// A time-dependent function on `M_n` with a spatial gradient, evaluated on
/// flat coordinates (`copies × dim`).
pub trait Hamiltonian {
    fn level(&self) -> usize;

    fn value(&self, z: &[f64], dim: usize, t: f64) -> f64;

    /// Writes `∇_z K(z, t)` into `out`.
    fn gradient_into(&self, z: &[f64], dim: usize, t: f64, out: &mut [f64]);
}

impl StructuredHamiltonian {
    pub fn zero(level: usize) -> Self {
        StructuredHamiltonian { level, terms: Vec::new() }
    }

    pub fn new(level: usize, terms: Vec<Term>) -> Result<Self> {
        let k = StructuredHamiltonian { level, terms };
        k.check_structure()?;
        Ok(k)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let k: StructuredHamiltonian = serde_json::from_str(s)?;
        k.check_structure()?;
        Ok(k)
    }

    /// `K = Σ_j F^j(z_j)`
    pub fn sum_of(level: usize, factors: Vec<Factor>) -> Result<Self> {
        Self::new(level, factors.into_iter().map(|f| Term::new(1.0, vec![f])).collect())
    }

    /// `K = Π_j F^j(z_j)`
    pub fn product_of(level: usize, factors: Vec<Factor>) -> Result<Self> {
        Self::new(level, vec![Term::new(1.0, factors)])
    }

    fn check_structure(&self) -> Result<()> {
        let copies = 1usize << self.level.min(crate::geometry::MAX_LEVEL);
        if self.level > crate::geometry::MAX_LEVEL {
            return Err(Error::LevelTooLarge(self.level));
        }
        for (p, term) in self.terms.iter().enumerate() {
            let mut seen = vec![false; copies];
            for f in &term.factors {
                if f.copy >= copies {
                    return invalid(format!("term {} uses copy {} but the level has {copies}", p + 1, f.copy + 1));
                }
                if std::mem::replace(&mut seen[f.copy], true) {
                    return invalid(format!("term {} uses copy {} twice", p + 1, f.copy + 1));
                }
                f.time.check()?;
            }
        }
        Ok(())
    }

    /// Structural checks plus compatibility of every factor with `space`.
    pub fn validate(&self, space: &PhaseSpace) -> Result<()> {
        self.check_structure()?;
        for term in &self.terms {
            for f in &term.factors {
                f.space.check(space)?;
            }
        }
        Ok(())
    }

    pub fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|t| t.factors.iter().all(|f| f.time.is_const()))
    }

    /// Multiplies every coefficient by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut k = self.clone();
        for t in &mut k.terms {
            t.coeff *= lambda;
        }
        k
    }

    pub fn eval(&self, z: &ProductPoint, t: f64) -> f64 {
        self.value(z.as_flat(), z.dim(), t)
    }
}

impl Hamiltonian for StructuredHamiltonian {
    fn level(&self) -> usize {
        self.level
    }

    fn value(&self, z: &[f64], dim: usize, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                term.coeff
                    * term
                        .factors
                        .iter()
                        .map(|f| f.value(&z[f.copy * dim..(f.copy + 1) * dim], t))
                        .product::<f64>()
            })
            .sum()
    }

    fn gradient_into(&self, z: &[f64], dim: usize, t: f64, out: &mut [f64]) {
        out.fill(0.0);
        let mut vals = Vec::new();
        for term in &self.terms {
            vals.clear();
            vals.extend(term.factors.iter().map(|f| f.value(&z[f.copy * dim..(f.copy + 1) * dim], t)));
            for (i, f) in term.factors.iter().enumerate() {
                let others: f64 = vals.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product();
                let scale = term.coeff * others;
                if scale != 0.0 {
                    let r = f.copy * dim..(f.copy + 1) * dim;
                    f.add_gradient(&z[r.clone()], t, scale, &mut out[r]);
                }
            }
        }
    }
}

/// Turns a gradient into the signed field: copy `j` gets `ε_j · X_SIGN · J ∇_{z_j}`.
pub fn symplectic_gradient(signs: &[i8], dim: usize, grad: &[f64], out: &mut [f64]) {
    symplectic_gradient_with(X_SIGN, signs, dim, grad, out)
}

/// As [`symplectic_gradient`] with an explicit orientation, used to compare conventions.
pub fn symplectic_gradient_with(orientation: f64, signs: &[i8], dim: usize, grad: &[f64], out: &mut [f64]) {
    let d = dim / 2;
    for (j, &s) in signs.iter().enumerate() {
        let k = orientation * f64::from(s);
        let g = &grad[j * dim..(j + 1) * dim];
        let o = &mut out[j * dim..(j + 1) * dim];
        for i in 0..d {
            o[i] = -k * g[d + i];
            o[d + i] = k * g[i];
        }
    }
}

pub fn vector_field_into<H: Hamiltonian + ?Sized>(k: &H, level: &LevelStructure, dim: usize, z: &[f64], t: f64, out: &mut [f64]) {
    let mut grad = vec![0.0; z.len()];
    k.gradient_into(z, dim, t, &mut grad);
    symplectic_gradient(&level.signs, dim, &grad, out);
}

pub fn vector_field<H: Hamiltonian + ?Sized>(k: &H, level: &LevelStructure, z: &ProductPoint, t: f64) -> ProductTangent {
    let mut buf = vec![0.0; z.as_flat().len()];
    vector_field_into(k, level, z.dim(), z.as_flat(), t, &mut buf);
    ProductPoint::from_flat(z.dim(), buf).expect("consistent width")
}

/// Central finite-difference gradient composed with `ε · X_SIGN · J`; a test oracle.
pub fn fd_gradient_oracle<H: Hamiltonian + ?Sized>(k: &H, level: &LevelStructure, z: &ProductPoint, t: f64, h: f64) -> ProductTangent {
    let dim = z.dim();
    let mut x = z.as_flat().to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let x0 = x[i];
        x[i] = x0 + h;
        let up = k.value(&x, dim, t);
        x[i] = x0 - h;
        let down = k.value(&x, dim, t);
        x[i] = x0;
        grad[i] = (up - down) / (2.0 * h);
    }
    let mut out = vec![0.0; grad.len()];
    symplectic_gradient(&level.signs, dim, &grad, &mut out);
    ProductPoint::from_flat(dim, out).expect("consistent width")
}

/// Which copy maps the lift reads its time arguments from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    /// Maps obtained by composing the chain's reparametrizations.
    Derived,
    /// The halving recursion `τ^{n+1}_j = τ^n_j / 2`, standard chains only.
    Printed,
}

/// `H^n(z, t) = Σ_j |τ̇_j(t)| · H(z_j, τ_j(t))` for a level-0 structured `H`.
#[derive(Clone, Debug)]
pub struct LiftedHamiltonian {
    pub base: StructuredHamiltonian,
    pub chain: TransformChain,
    pub variant: TauVariant,
    maps: Vec<TimeMap>,
}

impl LiftedHamiltonian {
    pub fn new(base: StructuredHamiltonian, chain: TransformChain, variant: TauVariant) -> Result<Self> {
        if base.level != 0 {
            return Err(Error::LevelMismatch { expected: 0, found: base.level });
        }
        let maps = match variant {
            TauVariant::Derived => copy_time_maps(&chain),
            TauVariant::Printed => {
                if !chain.is_standard() {
                    return invalid("the printed τ recursion is only defined for the standard chain");
                }
                printed_tau_maps(chain.level()).into_iter().map(TimeMap::Affine).collect()
            }
        };
        Ok(LiftedHamiltonian { base, chain, variant, maps })
    }

    pub fn tau_maps(&self) -> &[TimeMap] {
        &self.maps
    }
}

impl Hamiltonian for LiftedHamiltonian {
    fn level(&self) -> usize {
        self.chain.level()
    }

    fn value(&self, z: &[f64], dim: usize, t: f64) -> f64 {
        self.maps
            .iter()
            .enumerate()
            .map(|(j, m)| m.deriv(t).abs() * self.base.value(&z[j * dim..(j + 1) * dim], dim, m.eval(t)))
            .sum()
    }

    fn gradient_into(&self, z: &[f64], dim: usize, t: f64, out: &mut [f64]) {
        for (j, m) in self.maps.iter().enumerate() {
            let r = j * dim..(j + 1) * dim;
            self.base.gradient_into(&z[r.clone()], dim, m.eval(t), &mut out[r.clone()]);
            let w = m.deriv(t).abs();
            out[r].iter_mut().for_each(|g| *g *= w);
        }
    }
}

/// The lift of a level-0 `H` along an affine chain as a structured Hamiltonian:
/// every base term is copied onto each copy `j` with weight `|τ̇_j|` and its
/// time profile precomposed with `τ_j`.
pub fn lift_structured(base: &StructuredHamiltonian, chain: &TransformChain) -> Result<StructuredHamiltonian> {
    if base.level != 0 {
        return Err(Error::LevelMismatch { expected: 0, found: base.level });
    }
    if base.terms.iter().any(|t| t.factors.len() > 1) {
        return invalid("base terms must have at most one factor to be lifted");
    }
    let mut terms = Vec::new();
    for (j, map) in copy_time_maps(chain).iter().enumerate() {
        let Some(tau) = map.as_affine() else {
            return invalid("structured lifts need an affine chain");
        };
        let weight = to_f64(&tau.slope).abs();
        for term in &base.terms {
            let factors = term
                .factors
                .iter()
                .map(|f| Factor {
                    copy: j,
                    space: f.space.clone(),
                    time: TimeProfile::Affine { slope: tau.slope, offset: tau.offset, inner: Box::new(f.time.clone()) },
                })
                .collect();
            terms.push(Term::new(weight * term.coeff, factors));
        }
    }
    Ok(StructuredHamiltonian { level: chain.level(), terms })
}
