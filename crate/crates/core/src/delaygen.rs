//! Compiles a structured Hamiltonian on `M_n` and a chain into the explicit
//! piecewise delay equation satisfied by pulled-back loops.
//!
//! On the segment `I_k` of copy `k`,
//! `v̇(t) = rate_k(t) Σ_{p: k ∈ S_p} c_p Π_{m ≠ k} F^{p,m}(v(δ^k_m(t)), θ_k(t)) · X_{F^{p,k}}(v(t), θ_k(t))`
//! with `δ^k_m = τ_m ∘ θ_k` read modulo 1 along periodic loops.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::{symplectic_gradient, Factor, StructuredHamiltonian};
use crate::rational::{fmt_q, to_f64, Affine, Q};
use crate::transforms::{segment_table, DiscreteLoop, SegmentTable, TimeMap, TransformChain};

#[derive(Clone, Debug)]
pub struct DelayCoefficient {
    pub copy: usize,
    pub factor: Factor,
    /// `δ^k_m = τ_m ∘ θ_k`, unreduced.
    pub delay: TimeMap,
    /// Exact delay translated by an integer so its value at the midpoint of
    /// `I_k` lies in `[0, 1)`.
    pub delay_reduced: Option<Affine>,
    /// True when `delay` leaves `[0, 1]` on `I_k` and is read through periodicity.
    pub mod1: bool,
}

#[derive(Clone, Debug)]
pub struct DelayTermSpec {
    /// Zero-based index of the term in the Hamiltonian.
    pub term: usize,
    pub coeff: f64,
    pub driver: Factor,
    /// Other factors of the term, `+t` maps before `−t` maps, each group by value.
    pub coefficients: Vec<DelayCoefficient>,
}

impl DelayTermSpec {
    /// True when the term vanishes identically.
    pub fn vanishes(&self) -> bool {
        self.coeff == 0.0 || self.driver.is_zero() || self.coefficients.iter().any(|c| c.factor.is_zero())
    }
}

#[derive(Clone, Debug)]
pub struct SegmentEquation {
    pub copy: usize,
    pub sign: i8,
    pub start: f64,
    pub end: f64,
    pub start_exact: Option<Q>,
    pub end_exact: Option<Q>,
    /// `θ_k`, the chord time read on this segment.
    pub theta: TimeMap,
    pub terms: Vec<DelayTermSpec>,
}

impl SegmentEquation {
    pub fn rate(&self, t: f64) -> f64 {
        f64::from(self.sign) * self.theta.deriv(t)
    }

    pub fn rate_exact(&self) -> Option<Q> {
        self.theta.as_affine().map(|a| a.slope * Q::from_integer(i64::from(self.sign)))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(DelayTermSpec::vanishes)
    }
}

#[derive(Clone, Debug)]
pub struct DelayEquationDescriptor {
    pub level: usize,
    pub chain: TransformChain,
    pub table: SegmentTable,
    /// Ordered by segment start.
    pub segments: Vec<SegmentEquation>,
}

pub fn generate(k: &StructuredHamiltonian, chain: &TransformChain) -> Result<DelayEquationDescriptor> {
    if k.level != chain.level() {
        return Err(Error::LevelMismatch { expected: chain.level(), found: k.level });
    }
    let table = segment_table(chain)?;
    let segments = table
        .order
        .iter()
        .map(|&c| {
            let seg = table.segment(c);
            let terms = k
                .terms
                .iter()
                .enumerate()
                .filter_map(|(p, term)| {
                    let driver = term.factor_on(c)?.clone();
                    let mut coefficients: Vec<DelayCoefficient> = term
                        .factors
                        .iter()
                        .filter(|f| f.copy != c)
                        .map(|f| coefficient(&table, c, f))
                        .collect();
                    let mid = 0.5 * (seg.start + seg.end);
                    // forward delays `t + s` first, then reflected ones `s − t`,
                    // each by the offset taken mod 1
                    coefficients.sort_by(|a, b| {
                        let key = |x: &DelayCoefficient| match x.delay_reduced {
                            Some(m) => {
                                let o = to_f64(&m.offset);
                                let r = if m.slope < Q::zero() { o - o.ceil() + 1.0 } else { o - o.floor() };
                                (m.slope < Q::zero(), r, to_f64(&m.slope).abs())
                            }
                            None => {
                                let v = x.delay.eval(mid);
                                (x.delay.deriv(mid) < 0.0, v - v.floor(), x.delay.deriv(mid).abs())
                            }
                        };
                        key(a).partial_cmp(&key(b)).unwrap()
                    });
                    Some(DelayTermSpec { term: p, coeff: term.coeff, driver, coefficients })
                })
                .collect();
            SegmentEquation {
                copy: c,
                sign: seg.sign,
                start: seg.start,
                end: seg.end,
                start_exact: seg.start_exact,
                end_exact: seg.end_exact,
                theta: seg.theta.clone(),
                terms,
            }
        })
        .collect();
    Ok(DelayEquationDescriptor { level: chain.level(), chain: chain.clone(), table, segments })
}

fn coefficient(table: &SegmentTable, k: usize, f: &Factor) -> DelayCoefficient {
    let seg = table.segment(k);
    let delay = table.delayed_time(k, f.copy);
    let (a, b) = (delay.eval(seg.start), delay.eval(seg.end));
    let tol = 1e-12;
    let mod1 = a.min(b) < -tol || a.max(b) > 1.0 + tol;
    DelayCoefficient { copy: f.copy, factor: f.clone(), delay_reduced: table.delayed_time_exact(k, f.copy), delay, mod1 }
}

impl DelayEquationDescriptor {
    /// Segment governing `t`, taking right limits at breakpoints; `t` is read mod 1.
    pub fn locate(&self, t: f64) -> &SegmentEquation {
        let t = t - t.floor();
        let idx = self.segments.partition_point(|s| s.start <= t);
        &self.segments[idx.saturating_sub(1)]
    }

    pub fn segment_for_copy(&self, copy: usize) -> Option<&SegmentEquation> {
        self.segments.iter().find(|s| s.copy == copy)
    }

    /// Right-hand side at time `t` along the periodic interpolant of `v`.
    pub fn rhs_eval(&self, v: &DiscreteLoop, t: f64) -> Vec<f64> {
        let t = t - t.floor();
        let here = v.eval_copy(0, t);
        self.rhs_eval_at(v, t, &here)
    }

    /// As [`Self::rhs_eval`] with the undelayed value `v(t)` supplied by the caller.
    pub fn rhs_eval_at(&self, v: &DiscreteLoop, t: f64, here: &[f64]) -> Vec<f64> {
        let dim = v.dim();
        let t = t - t.floor();
        let seg = self.locate(t);
        let s = seg.theta.eval(t);
        let mut grad = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for term in &seg.terms {
            let mut prod = term.coeff;
            for c in &term.coefficients {
                v.eval_periodic_into(0, c.delay.eval(t), &mut buf);
                prod *= c.factor.value(&buf, s);
            }
            if prod != 0.0 {
                term.driver.add_gradient(here, s, prod, &mut grad);
            }
        }
        let mut out = vec![0.0; dim];
        symplectic_gradient(&[1], dim, &grad, &mut out);
        let rate = seg.rate(t);
        out.iter_mut().for_each(|x| *x *= rate);
        out
    }

    /// The descriptor of `λK`: same maps, every coefficient scaled.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut d = self.clone();
        for seg in &mut d.segments {
            for term in &mut seg.terms {
                term.coeff *= lambda;
            }
        }
        d
    }

    fn copy_is_shared(&self, copy: usize) -> bool {
        let owners: std::collections::BTreeSet<usize> = self
            .segments
            .iter()
            .flat_map(|s| s.terms.iter())
            .filter(|t| t.driver.copy == copy || t.coefficients.iter().any(|c| c.copy == copy))
            .map(|t| t.term)
            .collect();
        owners.len() > 1
    }

    pub fn render(&self, format: RenderFormat) -> String {
        match format {
            RenderFormat::Text => self.render_text(),
            RenderFormat::Latex => self.render_latex(),
            RenderFormat::Json => serde_json::to_string_pretty(&self.to_json()).expect("descriptor serializes"),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            let (lhs, prefix) = match seg.rate_exact() {
                Some(r) if r.is_one() => ("v̇".to_string(), String::new()),
                Some(r) => (format!("{} v̇", fmt_q(&r.recip())), String::new()),
                None => ("v̇".to_string(), format!("{}θ̇{}(t) · ", if seg.sign < 0 { "−" } else { "" }, sub(seg.copy + 1))),
            };
            let time = compact(&seg.theta.display());
            let rhs = if seg.is_zero() {
                "0".to_string()
            } else {
                let parts: Vec<String> = seg
                    .terms
                    .iter()
                    .filter(|t| !t.vanishes())
                    .map(|term| {
                        let mut s = String::new();
                        if term.coeff != 1.0 {
                            s.push_str(&format!("{} ", term.coeff));
                        }
                        for c in &term.coefficients {
                            s.push_str(&format!("{}_{{{time}}}(v({})) ", self.label(term.term, c.copy), delay_text(c)));
                        }
                        s.push_str(&format!("X_{{{}_{{{time}}}}}(v(t))", self.label(term.term, seg.copy)));
                        s
                    })
                    .collect();
                format!("{prefix}{}", parts.join(" + "))
            };
            out.push_str(&format!("{lhs} = {rhs}, t ∈ [{},{}]\n", endpoint(seg.start_exact, seg.start), endpoint(seg.end_exact, seg.end)));
        }
        out
    }

    fn label(&self, term: usize, copy: usize) -> String {
        if self.copy_is_shared(copy) {
            format!("F{}[{}]", sup(copy + 1), term + 1)
        } else {
            format!("F{}", sup(copy + 1))
        }
    }

    fn render_latex(&self) -> String {
        let mut out = String::from("\\begin{array}{lll}\n");
        for seg in &self.segments {
            let rate = match seg.rate_exact() {
                Some(r) if r.is_one() => String::new(),
                Some(r) => format!("{} \\,", latex_q(&r.recip())),
                None => String::new(),
            };
            let time = latex_map(seg.theta.as_affine(), &seg.theta.display());
            let rhs = if seg.is_zero() {
                "0".to_string()
            } else {
                let parts: Vec<String> = seg
                    .terms
                    .iter()
                    .filter(|t| !t.vanishes())
                    .map(|term| {
                        let mut s = String::new();
                        if term.coeff != 1.0 {
                            s.push_str(&format!("{} \\, ", term.coeff));
                        }
                        for c in &term.coefficients {
                            let arg = latex_map(c.delay_reduced, &c.delay.display());
                            s.push_str(&format!("F^{{{}}}_{{{time}}} \\bigl( v({arg}) \\bigr) \\, ", c.copy + 1));
                        }
                        s.push_str(&format!("X_{{F^{{{}}}_{{{time}}}}} (v(t))", seg.copy + 1));
                        s
                    })
                    .collect();
                parts.join(" + ")
            };
            out.push_str(&format!(
                "{rate}\\dot v(t) &=& {rhs}, & t \\in \\bigl[ {}, {} \\bigr] \\\\\n",
                seg.start_exact.map_or(format!("{:.6}", seg.start), |x| latex_q(&x)),
                seg.end_exact.map_or(format!("{:.6}", seg.end), |x| latex_q(&x)),
            ));
        }
        out.push_str("\\end{array}\n");
        out
    }

    pub fn to_json(&self) -> DescriptorJson {
        DescriptorJson {
            level: self.level,
            chain: self.chain.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentJson {
                    copy: s.copy + 1,
                    sign: s.sign,
                    interval: [endpoint(s.start_exact, s.start), endpoint(s.end_exact, s.end)],
                    theta: s.theta.as_affine(),
                    rate: s.rate_exact().map(|r| fmt_q(&r)),
                    zero: s.is_zero(),
                    terms: s
                        .terms
                        .iter()
                        .map(|t| TermJson {
                            term: t.term + 1,
                            coeff: t.coeff,
                            driver: t.driver.clone(),
                            coefficients: t
                                .coefficients
                                .iter()
                                .map(|c| CoefficientJson {
                                    copy: c.copy + 1,
                                    delay: c.delay.as_affine(),
                                    delay_reduced: c.delay_reduced,
                                    mod1: c.mod1,
                                    factor: c.factor.clone(),
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Latex,
    Json,
}

impl std::str::FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(RenderFormat::Text),
            "latex" => Ok(RenderFormat::Latex),
            "json" => Ok(RenderFormat::Json),
            other => Err(Error::InvalidInput(format!("unknown render format {other:?}"))),
        }
    }
}

#[derive(Serialize)]
pub struct DescriptorJson {
    pub level: usize,
    pub chain: TransformChain,
    pub segments: Vec<SegmentJson>,
}

#[derive(Serialize)]
pub struct SegmentJson {
    pub copy: usize,
    pub sign: i8,
    pub interval: [String; 2],
    pub theta: Option<Affine>,
    pub rate: Option<String>,
    pub zero: bool,
    pub terms: Vec<TermJson>,
}

#[derive(Serialize)]
pub struct TermJson {
    pub term: usize,
    pub coeff: f64,
    pub driver: Factor,
    pub coefficients: Vec<CoefficientJson>,
}

#[derive(Serialize)]
pub struct CoefficientJson {
    pub copy: usize,
    pub delay: Option<Affine>,
    pub delay_reduced: Option<Affine>,
    pub mod1: bool,
    pub factor: Factor,
}

fn endpoint(exact: Option<Q>, x: f64) -> String {
    exact.map_or_else(|| format!("{x}"), |q| fmt_q(&q))
}

fn compact(s: &str) -> String {
    s.replace(' ', "")
}

fn delay_text(c: &DelayCoefficient) -> String {
    match c.delay_reduced {
        Some(a) => a.display_delay("t"),
        None => format!("δ{}(t)", sub(c.copy + 1)),
    }
}

const SUPERSCRIPTS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
const SUBSCRIPTS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

fn digits(n: usize, table: &[char; 10]) -> String {
    n.to_string().chars().map(|c| table[c.to_digit(10).unwrap() as usize]).collect()
}

fn sup(n: usize) -> String {
    digits(n, &SUPERSCRIPTS)
}

fn sub(n: usize) -> String {
    digits(n, &SUBSCRIPTS)
}

fn latex_q(x: &Q) -> String {
    if x.is_integer() {
        format!("{}", x.numer())
    } else {
        let sign = if x.is_negative() { "-" } else { "" };
        format!("{sign}\\tfrac{{{}}}{{{}}}", x.numer().abs(), x.denom())
    }
}

fn latex_map(a: Option<Affine>, fallback: &str) -> String {
    let Some(a) = a else {
        return fallback.to_string();
    };
    let mut s = String::new();
    if !a.offset.is_zero() {
        s.push_str(&latex_q(&a.offset));
    }
    if !a.slope.is_zero() {
        let m = a.slope.abs();
        let coeff = if m.is_one() { String::new() } else { latex_q(&m) };
        let sign = if a.slope.is_negative() { "-" } else if s.is_empty() { "" } else { "+" };
        s.push_str(&format!("{sign}{coeff}t"));
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// Exact values of all delays of a descriptor as `(segment copy, coefficient copy, map)`,
/// a convenience for comparing against printed tables.
pub fn exact_delays(d: &DelayEquationDescriptor) -> Vec<(usize, usize, Affine)> {
    d.segments
        .iter()
        .flat_map(|s| {
            s.terms
                .iter()
                .flat_map(move |t| t.coefficients.iter().filter_map(move |c| c.delay_reduced.map(|a| (s.copy, c.copy, a))))
        })
        .collect()
}

pub fn rate_values(d: &DelayEquationDescriptor) -> Vec<f64> {
    d.segments.iter().map(|s| s.rate_exact().map_or(f64::NAN, |r| to_f64(&r))).collect()
}
