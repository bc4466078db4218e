//! Monotone reparametrizations of `[0, 1]`, the `(α, β)` pairs built from
//! them, and chains of such pairs.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rational::{q, ratio_str, to_f64, Affine, Q};

/// Tolerance for numerically inverting non-affine reparametrizations.
pub const INVERSE_TOL: f64 = 1e-12;

/// Strictly monotone cubic through the given knots (Fritsch–Butland slopes).
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneSpline {
    ts: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneSpline {
    pub fn new(ts: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if ts.len() != ys.len() || ts.len() < 2 {
            return invalid("spline needs at least two knots with matching values");
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("spline knot times must be strictly increasing");
        }
        let secants: Vec<f64> = ts.windows(2).zip(ys.windows(2)).map(|(t, y)| (y[1] - y[0]) / (t[1] - t[0])).collect();
        let increasing = secants[0] > 0.0;
        if secants.iter().any(|s| (*s > 0.0) != increasing || *s == 0.0) {
            return invalid("spline knot values must be strictly monotone");
        }
        let n = ts.len();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            // weighted harmonic mean keeps the interpolant strictly monotone
            let (ha, hb) = (ts[i] - ts[i - 1], ts[i + 1] - ts[i]);
            let w1 = 2.0 * hb + ha;
            let w2 = hb + 2.0 * ha;
            slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
        Ok(MonotoneSpline { ts, ys, slopes })
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.ts.len();
        match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.ts[i + 1] - self.ts[i];
        let s = (t - self.ts[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.ts[i + 1] - self.ts[i];
        let s = (t - self.ts[i]) / h;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        (d00 * self.ys[i] + d01 * self.ys[i + 1]) / h + d10 * self.slopes[i] + d11 * self.slopes[i + 1]
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.ts, &self.ys)
    }
}

pub(crate) fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2)
}

#[derive(Clone, Debug, PartialEq)]
pub enum MonotoneReparam {
    Affine(Affine),
    Spline(MonotoneSpline),
}

impl MonotoneReparam {
    pub fn halving_alpha() -> Self {
        MonotoneReparam::Affine(Affine::new(q(1, 2), Q::zero()))
    }

    pub fn halving_beta() -> Self {
        MonotoneReparam::Affine(Affine::new(q(-1, 2), Q::one()))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            MonotoneReparam::Affine(a) => a.eval(t),
            MonotoneReparam::Spline(s) => s.eval(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            MonotoneReparam::Affine(a) => to_f64(&a.slope),
            MonotoneReparam::Spline(s) => s.deriv(t),
        }
    }

    pub fn direction(&self) -> i8 {
        let d = match self {
            MonotoneReparam::Affine(a) => to_f64(&a.slope),
            MonotoneReparam::Spline(s) => s.slopes[0],
        };
        if d > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Inverse on the image of `[0, 1]`; bisection for splines.
    pub fn inverse_eval(&self, y: f64) -> f64 {
        match self {
            MonotoneReparam::Affine(a) => a.inverse().eval(y),
            MonotoneReparam::Spline(s) => {
                let increasing = self.direction() > 0;
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                // values outside the image clamp to the end points
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let above = s.eval(mid) > y;
                    if above == increasing {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo < INVERSE_TOL * 1e-3 {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    pub fn as_affine(&self) -> Option<Affine> {
        match self {
            MonotoneReparam::Affine(a) => Some(*a),
            MonotoneReparam::Spline(_) => None,
        }
    }
}

/// JSON form of a chain step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSpec {
    Halving,
    AffineR {
        #[serde(with = "ratio_str")]
        r: Q,
    },
    /// Knots `[t, α(t), β(t)]` from `t = 0` to `t = 1`.
    Spline { knots: Vec<[f64; 3]> },
}

/// A pair `(α, β)` with `α(0)=0`, `β(0)=1`, `α(1)=β(1)=τ`, `α` increasing, `β` decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct ReparamPair {
    pub spec: StepSpec,
    pub alpha: MonotoneReparam,
    pub beta: MonotoneReparam,
}

impl ReparamPair {
    pub fn halving() -> Self {
        ReparamPair {
            spec: StepSpec::Halving,
            alpha: MonotoneReparam::halving_alpha(),
            beta: MonotoneReparam::halving_beta(),
        }
    }

    /// `α_r(t) = rt`, `β_r(t) = 1 − (1 − r)t`.
    pub fn affine_r(r: Q) -> Result<Self> {
        if r <= Q::zero() || r >= Q::one() {
            return invalid(format!("r must lie in (0, 1), got {r}"));
        }
        Ok(ReparamPair {
            spec: StepSpec::AffineR { r },
            alpha: MonotoneReparam::Affine(Affine::new(r, Q::zero())),
            beta: MonotoneReparam::Affine(Affine::new(r - Q::one(), Q::one())),
        })
    }

    pub fn spline(knots: Vec<[f64; 3]>) -> Result<Self> {
        let ts: Vec<f64> = knots.iter().map(|k| k[0]).collect();
        let al: Vec<f64> = knots.iter().map(|k| k[1]).collect();
        let be: Vec<f64> = knots.iter().map(|k| k[2]).collect();
        let tol = 1e-14;
        if ts.first().is_none_or(|t| t.abs() > tol) || ts.last().is_none_or(|t| (t - 1.0).abs() > tol) {
            return invalid("spline knots must start at t = 0 and end at t = 1");
        }
        let last = knots.len() - 1;
        if al[0].abs() > tol || (be[0] - 1.0).abs() > tol {
            return invalid("spline pair needs α(0) = 0 and β(0) = 1");
        }
        if (al[last] - be[last]).abs() > tol || al[last] <= 0.0 || al[last] >= 1.0 {
            return invalid("spline pair needs α(1) = β(1) = τ ∈ (0, 1)");
        }
        let alpha = MonotoneSpline::new(ts.clone(), al)?;
        let beta = MonotoneSpline::new(ts, be)?;
        if alpha.slopes[0] < 0.0 || beta.slopes[0] > 0.0 {
            return invalid("α must increase and β must decrease");
        }
        Ok(ReparamPair {
            spec: StepSpec::Spline { knots },
            alpha: MonotoneReparam::Spline(alpha),
            beta: MonotoneReparam::Spline(beta),
        })
    }

    pub fn from_spec(spec: &StepSpec) -> Result<Self> {
        match spec {
            StepSpec::Halving => Ok(Self::halving()),
            StepSpec::AffineR { r } => Self::affine_r(*r),
            StepSpec::Spline { knots } => Self::spline(knots.clone()),
        }
    }

    pub fn tau(&self) -> f64 {
        self.alpha.eval(1.0)
    }

    pub fn tau_exact(&self) -> Option<Q> {
        self.alpha.as_affine().map(|a| a.eval_exact(Q::one()))
    }

    pub fn is_affine(&self) -> bool {
        self.alpha.as_affine().is_some() && self.beta.as_affine().is_some()
    }
}

/// Step `i` maps paths at level `i − 1` to paths at level `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformChain {
    pub steps: Vec<ReparamPair>,
}

impl TransformChain {
    pub fn standard(n: usize) -> Self {
        TransformChain { steps: vec![ReparamPair::halving(); n] }
    }

    pub fn affine_r(rs: &[Q]) -> Result<Self> {
        Ok(TransformChain { steps: rs.iter().map(|r| ReparamPair::affine_r(*r)).collect::<Result<_>>()? })
    }

    pub fn level(&self) -> usize {
        self.steps.len()
    }

    pub fn is_affine(&self) -> bool {
        self.steps.iter().all(ReparamPair::is_affine)
    }

    pub fn is_standard(&self) -> bool {
        self.steps.iter().all(|s| s.spec == StepSpec::Halving)
    }
}

#[derive(Serialize, Deserialize)]
struct ChainJson {
    steps: Vec<StepSpec>,
}

impl Serialize for TransformChain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChainJson { steps: self.steps.iter().map(|p| p.spec.clone()).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransformChain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ChainJson::deserialize(d)?;
        let steps = j
            .steps
            .iter()
            .map(ReparamPair::from_spec)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(TransformChain { steps })
    }
}
