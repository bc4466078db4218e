//! Per-copy time bookkeeping derived from a chain: the map `τ_m` reading copy
//! `m` off the base loop, its inverse `θ_m`, segments, rates and delayed times.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{build_level, LevelStructure};
use crate::rational::{fmt_q, q, to_f64, Affine, Q};
use crate::transforms::reparam::{MonotoneReparam, TransformChain};

/// A composition of monotone pieces, applied first to last. Collapses to an
/// exact affine map whenever every piece is affine.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeMap {
    Affine(Affine),
    Composite(Vec<(MonotoneReparam, bool)>),
}

impl TimeMap {
    pub fn identity() -> Self {
        TimeMap::Affine(Affine::identity())
    }

    fn from_pieces(pieces: Vec<(MonotoneReparam, bool)>) -> Self {
        let mut acc = Affine::identity();
        for (p, inverted) in &pieces {
            match p.as_affine() {
                Some(a) => {
                    let a = if *inverted { a.inverse() } else { a };
                    acc = a.compose(&acc);
                }
                None => return TimeMap::Composite(pieces),
            }
        }
        TimeMap::Affine(acc)
    }

    fn pieces(&self) -> Vec<(MonotoneReparam, bool)> {
        match self {
            TimeMap::Affine(a) => vec![(MonotoneReparam::Affine(*a), false)],
            TimeMap::Composite(p) => p.clone(),
        }
    }

    /// `self ∘ inner`
    pub fn after(&self, inner: &TimeMap) -> TimeMap {
        if let (TimeMap::Affine(a), TimeMap::Affine(b)) = (self, inner) {
            return TimeMap::Affine(a.compose(b));
        }
        let mut p = inner.pieces();
        p.extend(self.pieces());
        Self::from_pieces(p)
    }

    /// `self ∘ piece`
    pub fn after_reparam(&self, piece: &MonotoneReparam) -> TimeMap {
        let mut p = vec![(piece.clone(), false)];
        p.extend(self.pieces());
        Self::from_pieces(p)
    }

    pub fn inverse(&self) -> TimeMap {
        match self {
            TimeMap::Affine(a) => TimeMap::Affine(a.inverse()),
            TimeMap::Composite(p) => TimeMap::Composite(p.iter().rev().map(|(m, inv)| (m.clone(), !inv)).collect()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeMap::Affine(a) => a.eval(t),
            TimeMap::Composite(p) => p.iter().fold(t, |x, (m, inv)| if *inv { m.inverse_eval(x) } else { m.eval(x) }),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            TimeMap::Affine(a) => to_f64(&a.slope),
            TimeMap::Composite(p) => {
                let mut x = t;
                let mut d = 1.0;
                for (m, inv) in p {
                    if *inv {
                        let y = m.inverse_eval(x);
                        d /= m.deriv(y);
                        x = y;
                    } else {
                        d *= m.deriv(x);
                        x = m.eval(x);
                    }
                }
                d
            }
        }
    }

    pub fn as_affine(&self) -> Option<Affine> {
        match self {
            TimeMap::Affine(a) => Some(*a),
            TimeMap::Composite(_) => None,
        }
    }

    pub fn display(&self) -> String {
        match self {
            TimeMap::Affine(a) => a.to_string(),
            TimeMap::Composite(p) => format!("<composite of {} monotone pieces>", p.len()),
        }
    }
}

/// Copy `m`'s segment of `[0, 1]` together with its time maps.
#[derive(Clone, Debug)]
pub struct CopySegment {
    pub copy: usize,
    pub sign: i8,
    pub start: f64,
    pub end: f64,
    pub start_exact: Option<Q>,
    pub end_exact: Option<Q>,
    /// `τ_m`: chord time `s ∈ [0, 1]` to loop time in `[start, end]`.
    pub tau: TimeMap,
    /// `θ_m = τ_m^{-1}`
    pub theta: TimeMap,
}

impl CopySegment {
    pub fn theta_at(&self, t: f64) -> f64 {
        self.theta.eval(t)
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        self.theta.deriv(t)
    }

    /// `ε_m · θ̇_m(t)`; positive for every valid chain.
    pub fn rate(&self, t: f64) -> f64 {
        f64::from(self.sign) * self.theta_dot(t)
    }

    pub fn rate_exact(&self) -> Option<Q> {
        self.theta.as_affine().map(|a| a.slope * Q::from_integer(i64::from(self.sign)))
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Clone, Debug)]
pub struct SegmentTable {
    pub level: LevelStructure,
    /// Indexed by copy.
    pub copies: Vec<CopySegment>,
    /// Copy indices ordered by segment start.
    pub order: Vec<usize>,
}

/// Composition-derived copy maps: `τ^{k+1}_j = τ^k_j ∘ α_{k+1}` on the first
/// block and `τ^k_j ∘ β_{k+1}` on the second.
pub fn copy_time_maps(chain: &TransformChain) -> Vec<TimeMap> {
    let mut maps = vec![TimeMap::identity()];
    for step in &chain.steps {
        let first: Vec<TimeMap> = maps.iter().map(|m| m.after_reparam(&step.alpha)).collect();
        let second: Vec<TimeMap> = maps.iter().map(|m| m.after_reparam(&step.beta)).collect();
        maps = first.into_iter().chain(second).collect();
    }
    maps
}

pub fn copy_time_map(chain: &TransformChain, m: usize) -> Result<TimeMap> {
    let copies = 1usize << chain.level();
    if m >= copies {
        return invalid(format!("copy index {} out of range 1..={copies}", m + 1));
    }
    Ok(copy_time_maps(chain).swap_remove(m))
}

/// The printed recursion `τ^{n+1}_j = τ^n_j / 2`, `τ^{n+1}_{j+2^n} = 1 − τ^n_j / 2`
/// for the standard chain, kept for comparison against [`copy_time_maps`].
pub fn printed_tau_maps(n: usize) -> Vec<Affine> {
    let mut maps = vec![Affine::identity()];
    let half = Affine::new(q(1, 2), Q::zero());
    let reflect = Affine::new(q(-1, 2), Q::one());
    for _ in 0..n {
        let first: Vec<Affine> = maps.iter().map(|m| half.compose(m)).collect();
        let second: Vec<Affine> = maps.iter().map(|m| reflect.compose(m)).collect();
        maps = first.into_iter().chain(second).collect();
    }
    maps
}

pub fn segment_table(chain: &TransformChain) -> Result<SegmentTable> {
    if chain.level() == 0 {
        return invalid("segment table needs a chain of length ≥ 1");
    }
    let level = build_level(chain.level())?;
    let maps = copy_time_maps(chain);
    let copies: Vec<CopySegment> = maps
        .into_iter()
        .enumerate()
        .map(|(m, tau)| {
            let (a, b) = (tau.eval(0.0), tau.eval(1.0));
            let (start_exact, end_exact) = match tau.as_affine() {
                Some(af) => {
                    let (x, y) = (af.eval_exact(Q::zero()), af.eval_exact(Q::one()));
                    (Some(x.min(y)), Some(x.max(y)))
                }
                None => (None, None),
            };
            CopySegment {
                copy: m,
                sign: level.signs[m],
                start: a.min(b),
                end: a.max(b),
                start_exact,
                end_exact,
                theta: tau.inverse(),
                tau,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..copies.len()).collect();
    order.sort_by(|&x, &y| copies[x].start.partial_cmp(&copies[y].start).unwrap());
    Ok(SegmentTable { level, copies, order })
}

impl SegmentTable {
    pub fn segment(&self, copy: usize) -> &CopySegment {
        &self.copies[copy]
    }

    /// Segment containing `t ∈ [0, 1)`; at a breakpoint the right-hand segment.
    pub fn locate(&self, t: f64) -> &CopySegment {
        let t = t.clamp(0.0, 1.0);
        let idx = self.order.partition_point(|&c| self.copies[c].start <= t);
        &self.copies[self.order[idx.saturating_sub(1)]]
    }

    /// Interior and end breakpoints, sorted, including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.order.iter().map(|&c| self.copies[c].start).collect();
        b.push(1.0);
        b
    }

    pub fn breakpoints_exact(&self) -> Option<Vec<Q>> {
        let mut b = self.order.iter().map(|&c| self.copies[c].start_exact).collect::<Option<Vec<Q>>>()?;
        b.push(Q::one());
        Some(b)
    }

    /// `δ^k_m = τ_m ∘ θ_k`: loop time of coefficient copy `m` while segment `k` drives.
    pub fn delayed_time(&self, k: usize, m: usize) -> TimeMap {
        self.copies[m].tau.after(&self.copies[k].theta)
    }

    /// Exact delayed-time map reduced so its value at the midpoint of `I_k` lies in `[0, 1)`.
    pub fn delayed_time_exact(&self, k: usize, m: usize) -> Option<Affine> {
        let d = self.delayed_time(k, m).as_affine()?;
        let seg = &self.copies[k];
        Some(d.reduce_mod1_on(seg.start_exact?, seg.end_exact?))
    }

    /// Checks tiling, bijectivity onto `[0, 1]`, rate positivity and boundary
    /// compatibility on `samples` points per segment. Returns the first violation.
    pub fn check_invariants(&self, samples: usize) -> std::result::Result<(), String> {
        let tol = 1e-12;
        let mut prev_end = 0.0;
        for &c in &self.order {
            let s = &self.copies[c];
            if (s.start - prev_end).abs() > tol {
                return Err(format!("gap or overlap before copy {}", c + 1));
            }
            prev_end = s.end;
            if s.end - s.start <= 0.0 {
                return Err(format!("empty segment for copy {}", c + 1));
            }
            let (t0, t1) = (s.theta_at(s.start), s.theta_at(s.end));
            if !((t0.abs() < 1e-9 && (t1 - 1.0).abs() < 1e-9) || ((t0 - 1.0).abs() < 1e-9 && t1.abs() < 1e-9)) {
                return Err(format!("θ of copy {} is not onto [0,1]", c + 1));
            }
            for i in 0..=samples {
                let t = s.start + (s.end - s.start) * (i as f64 / samples as f64);
                if s.rate(t) <= 0.0 {
                    return Err(format!("non-positive rate for copy {} at t={t}", c + 1));
                }
                if (s.tau.eval(s.theta_at(t)) - t).abs() > 1e-12 {
                    return Err(format!("τ∘θ ≠ id for copy {} at t={t}", c + 1));
                }
            }
        }
        if (prev_end - 1.0).abs() > tol {
            return Err("segments do not reach 1".into());
        }
        let congruent = |x: f64, y: f64| {
            let d = x - y;
            (d - d.round()).abs() < 1e-12
        };
        for &(a, b) in &self.level.matching1 {
            if !congruent(self.copies[a].tau.eval(1.0), self.copies[b].tau.eval(1.0)) {
                return Err(format!("matching1 pair ({},{}) incompatible at chord time 1", a + 1, b + 1));
            }
        }
        for &(a, b) in &self.level.matching0 {
            if !congruent(self.copies[a].tau.eval(0.0), self.copies[b].tau.eval(0.0)) {
                return Err(format!("matching0 pair ({},{}) incompatible at chord time 0", a + 1, b + 1));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct SegmentJson {
    copy: usize,
    sign: i8,
    interval: [String; 2],
    theta: Option<Affine>,
    tau: Option<Affine>,
    rate: Option<String>,
}

impl Serialize for SegmentTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<SegmentJson> = self
            .order
            .iter()
            .map(|&c| {
                let seg = &self.copies[c];
                let end = |e: Option<Q>, f: f64| e.map(|x| fmt_q(&x)).unwrap_or_else(|| format!("{f}"));
                SegmentJson {
                    copy: c + 1,
                    sign: seg.sign,
                    interval: [end(seg.start_exact, seg.start), end(seg.end_exact, seg.end)],
                    theta: seg.theta.as_affine(),
                    tau: seg.tau.as_affine(),
                    rate: seg.rate_exact().map(|r| fmt_q(&r)),
                }
            })
            .collect();
        #[derive(Serialize)]
        struct TableJson {
            level: usize,
            segments: Vec<SegmentJson>,
        }
        TableJson { level: self.level.level, segments: rows }.serialize(s)
    }
}
