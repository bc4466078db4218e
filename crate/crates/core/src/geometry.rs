//! Base phase space, the product tower `M_n = M^{2^n}` with its signed
//! symplectic form, and the two Lagrangian diagonals as index matchings.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest tower level accepted by [`build_level`].
pub const MAX_LEVEL: usize = 12;

/// Default sup-norm tolerance for diagonal membership.
pub const DIAGONAL_TOL: f64 = 1e-9;

/// Coordinates `(x_1..x_d, y_1..y_d)` of a point of `M` or a tangent vector.
pub type BasePoint = Vec<f64>;
pub type BaseTangent = Vec<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Plane,
    /// `R^{2d} / Z^{2d}`
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSpace {
    pub half_dim: usize,
    pub topology: Topology,
}

impl PhaseSpace {
    pub fn new(half_dim: usize, topology: Topology) -> Result<Self> {
        if half_dim == 0 {
            return invalid("half_dim must be at least 1");
        }
        Ok(PhaseSpace { half_dim, topology })
    }

    pub fn plane(half_dim: usize) -> Self {
        PhaseSpace { half_dim: half_dim.max(1), topology: Topology::Plane }
    }

    pub fn torus(half_dim: usize) -> Self {
        PhaseSpace { half_dim: half_dim.max(1), topology: Topology::Torus }
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn is_torus(&self) -> bool {
        self.topology == Topology::Torus
    }

    /// Torus coordinates are mapped into `[0, 1)`; plane points are unchanged.
    pub fn normalize(&self, p: &mut [f64]) {
        if self.is_torus() {
            for x in p.iter_mut() {
                *x = wrap_unit(*x);
            }
        }
    }

    pub fn wrapped_difference(&self, a: &[f64], b: &[f64]) -> BaseTangent {
        a.iter().zip(b).map(|(x, y)| self.wrap_delta(x - y)).collect()
    }

    /// Nearest representative of a coordinate difference, in `(−1/2, 1/2]` on the torus.
    pub fn wrap_delta(&self, d: f64) -> f64 {
        match self.topology {
            Topology::Plane => d,
            Topology::Torus => d - (d - 0.5).ceil(),
        }
    }

    pub fn sup_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| self.wrap_delta(x - y).abs()).fold(0.0, f64::max)
    }
}

fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point of `M_n`, stored flat as `2^n` consecutive base points.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    dim: usize,
    coords: Vec<f64>,
}

pub type ProductTangent = ProductPoint;

impl ProductPoint {
    pub fn zeros(dim: usize, copies: usize) -> Self {
        ProductPoint { dim, coords: vec![0.0; dim * copies] }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return invalid(format!("{} coordinates do not split into copies of dimension {dim}", coords.len()));
        }
        Ok(ProductPoint { dim, coords })
    }

    pub fn from_copies(copies: &[BasePoint]) -> Result<Self> {
        let dim = copies.first().map(Vec::len).unwrap_or(0);
        if copies.iter().any(|c| c.len() != dim) {
            return invalid("copies have inconsistent dimensions");
        }
        Self::from_flat(dim, copies.concat())
    }

    /// The same base point repeated `copies` times.
    pub fn repeated(z: &[f64], copies: usize) -> Self {
        ProductPoint { dim: z.len(), coords: z.repeat(copies) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn copies(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn copy(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn copy_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coords
    }

    pub fn to_copies(&self) -> Vec<BasePoint> {
        self.coords.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagonal {
    Zero,
    One,
    Total,
}

/// The tower level `n`: signs of `ω_n` and the matchings defining `Δ_n^0`, `Δ_n^1`.
/// Copy indices are zero-based internally and one-based in JSON.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelStructure {
    pub level: usize,
    pub signs: Vec<i8>,
    pub matching0: Vec<(usize, usize)>,
    pub matching1: Vec<(usize, usize)>,
}

pub fn build_level(n: usize) -> Result<LevelStructure> {
    if n > MAX_LEVEL {
        return Err(Error::LevelTooLarge(n));
    }
    let mut signs = vec![1i8];
    for _ in 0..n {
        let neg: Vec<i8> = signs.iter().map(|s| -s).collect();
        signs.extend(neg);
    }
    let (matching0, matching1) = if n == 0 { (Vec::new(), Vec::new()) } else { (diagonal0(n), diagonal1(n)) };
    Ok(LevelStructure { level: n, signs, matching0, matching1 })
}

/// Pairs `j` with `j + 2^{n−1}`.
fn diagonal1(n: usize) -> Vec<(usize, usize)> {
    let half = 1usize << (n - 1);
    (0..half).map(|j| (j, j + half)).collect()
}

fn diagonal0(n: usize) -> Vec<(usize, usize)> {
    let mut m = vec![(0, 1)];
    for k in 1..n {
        let shift = 1usize << k;
        m.extend(diagonal1(k).into_iter().map(|(a, b)| (a + shift, b + shift)));
    }
    m
}

impl LevelStructure {
    pub fn copies(&self) -> usize {
        self.signs.len()
    }

    pub fn sign(&self, j: usize) -> f64 {
        f64::from(self.signs[j])
    }

    pub fn matching(&self, which: Diagonal) -> Vec<(usize, usize)> {
        match which {
            Diagonal::Zero => self.matching0.clone(),
            Diagonal::One => self.matching1.clone(),
            Diagonal::Total => (1..self.copies()).map(|j| (0, j)).collect(),
        }
    }

    /// Partner of `j` in the given matching.
    pub fn partner(&self, which: Diagonal, j: usize) -> Option<usize> {
        let m = match which {
            Diagonal::Zero => &self.matching0,
            Diagonal::One => &self.matching1,
            Diagonal::Total => return None,
        };
        m.iter().find_map(|&(a, b)| {
            if a == j {
                Some(b)
            } else if b == j {
                Some(a)
            } else {
                None
            }
        })
    }

    /// Walks the union graph of the two matchings from copy 0, alternating
    /// matching0 and matching1 edges. Returns the visiting order when the
    /// graph is one cycle through all copies.
    pub fn union_cycle(&self) -> Option<Vec<usize>> {
        if self.level == 0 {
            return Some(vec![0]);
        }
        let n = self.copies();
        let mut order = vec![0usize];
        let mut current = 0usize;
        let mut use_zero = true;
        loop {
            let which = if use_zero { Diagonal::Zero } else { Diagonal::One };
            let next = self.partner(which, current)?;
            use_zero = !use_zero;
            if next == 0 {
                break;
            }
            if order.contains(&next) {
                return None;
            }
            order.push(next);
            current = next;
        }
        (order.len() == n).then_some(order)
    }

    pub fn on_diagonal(&self, space: &PhaseSpace, which: Diagonal, p: &ProductPoint, tol: f64) -> bool {
        self.diagonal_deviation(space, which, p) <= tol
    }

    /// Largest sup-norm gap over the matched pairs of `which`.
    pub fn diagonal_deviation(&self, space: &PhaseSpace, which: Diagonal, p: &ProductPoint) -> f64 {
        if which == Diagonal::Total {
            return (0..p.copies())
                .flat_map(|a| (a + 1..p.copies()).map(move |b| (a, b)))
                .map(|(a, b)| space.sup_distance(p.copy(a), p.copy(b)))
                .fold(0.0, f64::max);
        }
        self.matching(which)
            .iter()
            .map(|&(a, b)| space.sup_distance(p.copy(a), p.copy(b)))
            .fold(0.0, f64::max)
    }

    /// Places `params[i]` on both copies of the `i`-th matched pair.
    pub fn embed_diagonal_params(&self, which: Diagonal, params: &[BasePoint]) -> Result<ProductPoint> {
        if which == Diagonal::Total || self.level == 0 {
            return invalid("diagonal parametrization requires level ≥ 1 and matching 0 or 1");
        }
        let pairs = self.matching(which);
        if params.len() != pairs.len() {
            return invalid(format!("expected {} diagonal parameters, got {}", pairs.len(), params.len()));
        }
        let dim = params[0].len();
        let mut p = ProductPoint::zeros(dim, self.copies());
        for (&(a, b), z) in pairs.iter().zip(params) {
            if z.len() != dim {
                return invalid("diagonal parameters have inconsistent dimensions");
            }
            p.copy_mut(a).copy_from_slice(z);
            p.copy_mut(b).copy_from_slice(z);
        }
        Ok(p)
    }

    pub fn reduce_diagonal_params(&self, space: &PhaseSpace, which: Diagonal, p: &ProductPoint) -> Result<Vec<BasePoint>> {
        if which == Diagonal::Total || self.level == 0 {
            return invalid("diagonal parametrization requires level ≥ 1 and matching 0 or 1");
        }
        let deviation = self.diagonal_deviation(space, which, p);
        if deviation > DIAGONAL_TOL {
            return Err(Error::NotOnDiagonal { deviation });
        }
        Ok(self.matching(which).iter().map(|&(a, _)| p.copy(a).to_vec()).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct LevelJson {
    level: usize,
    signs: Vec<i8>,
    matching0: Vec<[usize; 2]>,
    matching1: Vec<[usize; 2]>,
}

impl Serialize for LevelStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let one_based = |m: &[(usize, usize)]| m.iter().map(|&(a, b)| [a + 1, b + 1]).collect();
        LevelJson {
            level: self.level,
            signs: self.signs.clone(),
            matching0: one_based(&self.matching0),
            matching1: one_based(&self.matching1),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LevelStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = LevelJson::deserialize(d)?;
        let zero_based = |m: Vec<[usize; 2]>| -> std::result::Result<Vec<(usize, usize)>, D::Error> {
            m.into_iter()
                .map(|[a, b]| {
                    if a == 0 || b == 0 {
                        Err(serde::de::Error::custom("copy indices are one-based"))
                    } else {
                        Ok((a - 1, b - 1))
                    }
                })
                .collect()
        };
        Ok(LevelStructure {
            level: j.level,
            signs: j.signs,
            matching0: zero_based(j.matching0)?,
            matching1: zero_based(j.matching1)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_vectors() {
        assert_eq!(build_level(0).unwrap().signs, vec![1]);
        assert_eq!(build_level(1).unwrap().signs, vec![1, -1]);
        assert_eq!(build_level(2).unwrap().signs, vec![1, -1, -1, 1]);
        assert!(build_level(0).unwrap().matching0.is_empty());
    }

    #[test]
    fn level_two_matchings() {
        let l = build_level(2).unwrap();
        assert_eq!(l.matching1, vec![(0, 2), (1, 3)]);
        assert_eq!(l.matching0, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn rejects_huge_levels() {
        assert!(matches!(build_level(13), Err(Error::LevelTooLarge(13))));
        assert!(build_level(12).is_ok());
    }

    #[test]
    fn wrapped_differences() {
        let plane = PhaseSpace::plane(1);
        assert_eq!(plane.wrapped_difference(&[1.0, 0.0], &[0.0, 0.0]), vec![1.0, 0.0]);
        let torus = PhaseSpace::torus(1);
        let d = torus.wrapped_difference(&[0.9, 0.0], &[0.1, 0.0]);
        assert!((d[0] + 0.2).abs() < 1e-15 && d[1] == 0.0);
        assert_eq!(torus.wrapped_difference(&[0.3, 0.7], &[0.3, 0.7]), vec![0.0, 0.0]);
        assert_eq!(torus.wrap_delta(0.5), 0.5);
        assert_eq!(torus.wrap_delta(-0.5), 0.5);
    }

    #[test]
    fn normalization_is_idempotent() {
        let torus = PhaseSpace::torus(1);
        let mut p = vec![-0.25, 3.75];
        torus.normalize(&mut p);
        assert_eq!(p, vec![0.75, 0.75]);
        let once = p.clone();
        torus.normalize(&mut p);
        assert_eq!(p, once);
    }

    #[test]
    fn diagonal_membership() {
        let space = PhaseSpace::plane(1);
        let l = build_level(2).unwrap();
        let z = vec![0.3, -1.0];
        let w = vec![2.0, 0.5];
        let all = ProductPoint::repeated(&z, 4);
        for which in [Diagonal::Zero, Diagonal::One, Diagonal::Total] {
            assert!(l.on_diagonal(&space, which, &all, DIAGONAL_TOL));
        }
        let p = ProductPoint::from_copies(&[z.clone(), z, w.clone(), w]).unwrap();
        assert!(l.on_diagonal(&space, Diagonal::Zero, &p, DIAGONAL_TOL));
        assert!(!l.on_diagonal(&space, Diagonal::One, &p, DIAGONAL_TOL));
    }

    #[test]
    fn embed_examples() {
        let l1 = build_level(1).unwrap();
        let z = vec![0.1, 0.2];
        let p = l1.embed_diagonal_params(Diagonal::Zero, std::slice::from_ref(&z)).unwrap();
        assert_eq!(p.to_copies(), vec![z.clone(), z.clone()]);
        let l2 = build_level(2).unwrap();
        let z2 = vec![0.5, 0.6];
        let p = l2.embed_diagonal_params(Diagonal::One, &[z.clone(), z2.clone()]).unwrap();
        assert_eq!(p.to_copies(), vec![z.clone(), z2.clone(), z, z2]);
    }

    #[test]
    fn reduce_rejects_off_diagonal() {
        let l = build_level(1).unwrap();
        let p = ProductPoint::from_copies(&[vec![0.0, 0.0], vec![0.0, 1e-6]]).unwrap();
        assert!(matches!(
            l.reduce_diagonal_params(&PhaseSpace::plane(1), Diagonal::One, &p),
            Err(Error::NotOnDiagonal { .. })
        ));
    }

    #[test]
    fn json_uses_one_based_pairs() {
        let l = build_level(2).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(s, r#"{"level":2,"signs":[1,-1,-1,1],"matching0":[[1,2],[3,4]],"matching1":[[1,3],[2,4]]}"#);
        let back: LevelStructure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
