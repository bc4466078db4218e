//! Acceptance criteria 1 to 9. Each test prints one PASS/FAIL line with the
//! failed checks and the runtime against its budget, then asserts.

use std::time::{Duration, Instant};

use hamdelay::action::{lambda_cancels, observed_order, pushforward_report};
use hamdelay::delaygen::{generate, DelayEquationDescriptor, RenderFormat};
use hamdelay::geometry::{build_level, PhaseSpace, ProductPoint};
use hamdelay::hamiltonians::{fd_gradient_oracle, lift_structured, vector_field, Hamiltonian, TauVariant};
use hamdelay::instances::{
    one_four_two_three, pairs, product_k_t4, product_of_factors, random_trig_hamiltonian, random_trig_loop, rng, sum_of_factors,
    torus_morse, torus_morse_critical_points,
};
use hamdelay::rational::{q, Affine, Q};
use hamdelay::solvers::{
    delay_residual, enumerate_chords, flow_fixed_points, integrate, pullback_chord, solve_periodic_delay, GridSpec, IntegratorConfig,
    NewtonConfig, PeriodicConfig,
};
use hamdelay::transforms::{copy_time_map, phi_chain, printed_tau_maps, psi_chain, segment_table, TransformChain};
use rand::Rng;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    start: Instant,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: u32, name: &'static str, budget_secs: u64) -> Self {
        Criterion { id, name, budget: Duration::from_secs(budget_secs), start: Instant::now(), failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        let budget = self.budget;
        self.check(elapsed <= budget, || format!("runtime {elapsed:.2?} over budget {budget:?}"));
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {} {status}: {} ({:.2?} of {:?})", self.id, self.name, elapsed, self.budget);
        for f in &self.failures {
            println!("    {f}");
        }
        assert!(self.failures.is_empty(), "criterion {} failed: {:?}", self.id, self.failures);
    }
}

fn one() -> Q {
    Q::from_integer(1)
}

fn aff(slope: Q, offset: Q) -> Affine {
    Affine::new(slope, offset)
}

/// Sole coefficient on the segment driven by one-based copy `k`.
fn coefficient(d: &DelayEquationDescriptor, k: usize) -> Option<(usize, Affine)> {
    let seg = d.segment_for_copy(k - 1)?;
    match (seg.terms.as_slice(), seg.terms.first().map(|t| t.coefficients.as_slice())) {
        ([_], Some([c])) => Some((c.copy + 1, c.delay.as_affine()?)),
        _ => None,
    }
}

#[test]
fn criterion_1_eight_copy_product_system() {
    let mut c = Criterion::new(1, "eight-copy product system, standard n=3", 1);
    let chain = TransformChain::standard(3);
    let d = generate(&product_of_factors(3), &chain).unwrap();
    let drivers = [1, 5, 7, 3, 4, 8, 6, 2];
    let thetas = [(8, 0), (-8, 2), (8, -2), (-8, 4), (8, -4), (-8, 6), (8, -6), (-8, 8)];
    // coefficient copies per row in the order of the delayed times
    // t−3/4, t−1/2, t−1/4, 1/4−t, 1/2−t, 3/4−t, 1−t (mod 1)
    let rows = ["7465382", "3821746", "4612538", "8256174", "6178253", "2534617", "1743825", "5387461"];
    let slots = [(1, q(1, 4)), (1, q(1, 2)), (1, q(3, 4)), (-1, q(1, 4)), (-1, q(1, 2)), (-1, q(3, 4)), (-1, one())];
    let table = segment_table(&chain).unwrap();
    c.check(d.segments.len() == 8, || format!("{} rows", d.segments.len()));
    let mut maps = 0;
    for (i, seg) in d.segments.iter().enumerate().take(8) {
        let row = i + 1;
        c.check(seg.copy + 1 == drivers[i], || format!("row {row}: driver {}", seg.copy + 1));
        c.check(seg.start_exact == Some(q(i as i64, 8)) && seg.end_exact == Some(q(i as i64 + 1, 8)), || format!("row {row}: interval"));
        c.check(seg.theta.as_affine() == Some(aff(q(thetas[i].0, 1), q(thetas[i].1, 1))), || format!("row {row}: θ {}", seg.theta.display()));
        c.check(seg.rate_exact() == Some(q(8, 1)), || format!("row {row}: rate {:?}", seg.rate_exact()));
        let coefs = &seg.terms[0].coefficients;
        for (slot, ch) in rows[i].chars().enumerate() {
            let copy = ch.to_digit(10).unwrap() as usize;
            let (s, o) = slots[slot];
            let Some(cf) = coefs.get(slot) else {
                c.check(false, || format!("row {row}: missing slot {slot}"));
                continue;
            };
            let exact = cf.delay_reduced.is_some_and(|m| m.eq_mod1(&aff(q(s, 1), o)));
            c.check(cf.copy + 1 == copy && exact, || format!("row {row} slot {slot}: F{} at {}", cf.copy + 1, cf.delay.display()));
            // oracle: the delayed time sits on the coefficient copy at the same chord time
            for u in [0.2, 0.5, 0.8] {
                let t = seg.start + u * (seg.end - seg.start);
                let y = cf.delay.eval(t).rem_euclid(1.0);
                let m = table.segment(cf.copy);
                let ok = y >= m.start - 1e-12 && y <= m.end + 1e-12 && (m.theta_at(y) - table.segment(seg.copy).theta_at(t)).abs() < 1e-12;
                c.check(ok, || format!("row {row} slot {slot}: delayed time off copy at t={t}"));
            }
            maps += 1;
        }
    }
    c.check(maps == 56, || format!("{maps} delayed-time maps"));
    c.finish();
}

#[test]
fn criterion_2_one_delay_and_sum_systems() {
    let mut c = Criterion::new(2, "F¹F⁴ + F²F³ and the sum system, standard n=2", 1);
    let chain = TransformChain::standard(2);
    let d = generate(&one_four_two_three(), &chain).unwrap();
    let expect = "\
1/4 v̇ = F⁴_{4t}(v(t−1/2)) X_{F¹_{4t}}(v(t)), t ∈ [0,1/4]
1/4 v̇ = F²_{2−4t}(v(t−1/2)) X_{F³_{2−4t}}(v(t)), t ∈ [1/4,1/2]
1/4 v̇ = F¹_{−2+4t}(v(t−1/2)) X_{F⁴_{−2+4t}}(v(t)), t ∈ [1/2,3/4]
1/4 v̇ = F³_{4−4t}(v(t−1/2)) X_{F²_{4−4t}}(v(t)), t ∈ [3/4,1]
";
    c.check(d.render(RenderFormat::Text) == expect, || format!("1423 text:\n{}", d.render(RenderFormat::Text)));
    for (k, partner) in [(1, 4), (2, 3), (3, 2), (4, 1)] {
        match coefficient(&d, k) {
            Some((m, delay)) => {
                c.check(m == partner, || format!("driver {k}: coefficient copy {m}"));
                c.check(delay.slope == one() && delay.eq_mod1(&aff(one(), q(1, 2))), || format!("driver {k}: delay {delay}"));
            }
            None => c.check(false, || format!("driver {k}: not a single coefficient")),
        }
        c.check(d.segment_for_copy(k - 1).and_then(|s| s.rate_exact()) == Some(q(4, 1)), || format!("driver {k}: rate"));
    }
    let s = generate(&sum_of_factors(2), &chain).unwrap();
    let expect = "\
1/4 v̇ = X_{F¹_{4t}}(v(t)), t ∈ [0,1/4]
1/4 v̇ = X_{F³_{2−4t}}(v(t)), t ∈ [1/4,1/2]
1/4 v̇ = X_{F⁴_{−2+4t}}(v(t)), t ∈ [1/2,3/4]
1/4 v̇ = X_{F²_{4−4t}}(v(t)), t ∈ [3/4,1]
";
    c.check(s.render(RenderFormat::Text) == expect, || format!("sum text:\n{}", s.render(RenderFormat::Text)));
    c.check(s.segments.iter().all(|g| g.rate_exact() == Some(q(4, 1))), || "sum rates".into());
    c.finish();
}

#[test]
fn criterion_3_affine_chain_closed_forms() {
    let mut c = Criterion::new(3, "delayed times and intervals for affine chains r ∈ {1/3, 2/5}", 1);
    let rs = [q(1, 3), q(2, 5)];
    for &r1 in &rs {
        for &r2 in &rs {
            let d = generate(&one_four_two_three(), &TransformChain::affine_r(&[r1, r2]).unwrap()).unwrap();
            let (s1, s2) = (one() - r1, one() - r2);
            let m2 = r2 / r1 * s1 / s2;
            let m3 = r1 * r2 / (s1 * s2);
            let m4 = r1 / r2 * s2 / s1;
            let expect = [
                (1, 4, aff(s1 * s2 / (r1 * r2), r1)),
                (3, 2, aff(m2, one() - m2 * r1)),
                (4, 1, aff(m3, -m3 * r1)),
                (2, 3, aff(m4, r1 - m4)),
            ];
            for (k, m, map) in expect {
                c.check(coefficient(&d, k) == Some((m, map)), || format!("r=({r1},{r2}) driver {k}: {:?}", coefficient(&d, k)));
            }
            let b1 = one() - s1 * r2;
            let ends: Vec<_> = d.segments.iter().map(|s| (s.start_exact, s.end_exact)).collect();
            let want = vec![(Some(Q::from_integer(0)), Some(r1 * r2)), (Some(r1 * r2), Some(r1)), (Some(r1), Some(b1)), (Some(b1), Some(one()))];
            c.check(ends == want, || format!("r=({r1},{r2}) intervals"));
        }
    }
    for r in rs {
        let d = generate(&one_four_two_three(), &TransformChain::affine_r(&[r, r]).unwrap()).unwrap();
        let s = one() - r;
        let m = (r / s) * (r / s);
        let expect = [(1, aff((s / r) * (s / r), r)), (3, aff(one(), one() - r)), (4, aff(m, -m * r)), (2, aff(one(), r - one()))];
        for (k, map) in expect {
            c.check(coefficient(&d, k).map(|x| x.1) == Some(map), || format!("r={r} driver {k}"));
        }
        // F¹F⁴ with complementary parameters: segments 2 and 4 vanish
        let dz = generate(&pairs(&[(1, 4)]), &TransformChain::affine_r(&[r, s]).unwrap()).unwrap();
        let p = r * s;
        let zero: Vec<bool> = dz.segments.iter().map(|g| g.is_zero()).collect();
        c.check(zero == [false, true, false, true], || format!("r1r2 r={r}: zero pattern {zero:?}"));
        let ends: Vec<_> = dz.segments.iter().map(|g| (g.start_exact.unwrap(), g.end_exact.unwrap())).collect();
        c.check(ends == [(Q::from_integer(0), p), (p, r), (r, one() - s + p), (one() - s + p, one())], || format!("r1r2 r={r}: intervals"));
        c.check(coefficient(&dz, 1) == Some((4, aff(one(), r))) && coefficient(&dz, 4) == Some((1, aff(one(), -r))), || format!("r1r2 r={r}: delays"));
        // F²F³ with equal parameters: segments 1 and 3 vanish
        let dr = generate(&pairs(&[(2, 3)]), &TransformChain::affine_r(&[r, r]).unwrap()).unwrap();
        let zero: Vec<bool> = dr.segments.iter().map(|g| g.is_zero()).collect();
        c.check(zero == [true, false, true, false], || format!("rr r={r}: zero pattern {zero:?}"));
        let ends: Vec<_> = dr.segments.iter().map(|g| (g.start_exact.unwrap(), g.end_exact.unwrap())).collect();
        c.check(ends == [(Q::from_integer(0), r * r), (r * r, r), (r, s + r * r), (s + r * r, one())], || format!("rr r={r}: intervals"));
        c.check(coefficient(&dr, 3) == Some((2, aff(one(), s))) && coefficient(&dr, 2) == Some((3, aff(one(), -s))), || format!("rr r={r}: delays"));
    }
    c.finish();
}

#[test]
fn criterion_4_pushforward_identity() {
    let mut c = Criterion::new(4, "action pushforward, 20 instances, n = 1..3", 60);
    let mut r = rng(2024);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    for i in 0..20 {
        let space = if i % 2 == 0 { PhaseSpace::torus(1) } else { PhaseSpace::plane(1) };
        let (lp, h) = (random_trig_loop(&mut r), random_trig_hamiltonian(&mut r));
        for n in 1..=3 {
            let chain = TransformChain::standard(n);
            let mut pts = Vec::new();
            for m in 10..=13u32 {
                let rep = pushforward_report(&h, &lp.sample(space, 1 << m).unwrap(), &chain, TauVariant::Derived).unwrap();
                if m == 12 {
                    let bound = 10.0 / (rep.intervals as f64).powi(2) * rep.loop_action.abs().max(1.0);
                    worst_ratio = worst_ratio.max(rep.gap / bound);
                    c.check(rep.gap <= bound, || format!("instance {i} n={n}: gap {:.3e} over {bound:.3e}", rep.gap));
                }
                pts.push((rep.intervals, rep.gap));
            }
            let order = observed_order(&pts).unwrap_or(f64::INFINITY);
            worst_order = worst_order.min(order);
            // orders are read to one decimal
            c.check((order * 10.0).round() / 10.0 >= 2.0, || format!("instance {i} n={n}: order {order:.4}"));
        }
    }
    println!("    worst gap/bound {worst_ratio:.3}, minimum order {worst_order:.4}");
    c.finish();
}

#[test]
fn criterion_5_round_trip() {
    let mut c = Criterion::new(5, "Φ^n ∘ Ψ^n round trip, n ≤ 3", 10);
    let mut r = rng(3);
    for n in 1..=3 {
        let chain = TransformChain::standard(n);
        for space in [PhaseSpace::torus(1), PhaseSpace::plane(1)] {
            let lp = random_trig_loop(&mut r);
            for m in [8u32, 10] {
                let big_n = 1usize << m;
                let v = lp.sample(space, big_n).unwrap();
                let back = phi_chain(&chain, &psi_chain(&chain, &v).unwrap()).unwrap();
                c.check(back.samples_flat() == v.samples_flat(), || format!("n={n} N={big_n}: not exact at nodes"));
                let fine = 3 * big_n / 2;
                let w = psi_chain(&chain, &v).unwrap().resample(fine).unwrap();
                let err = phi_chain(&chain, &w).unwrap().sup_distance_resampled(&lp.sample(space, fine).unwrap()).unwrap();
                let bound = 10.0 / (big_n * big_n) as f64;
                c.check(err <= bound, || format!("n={n} N={big_n}: resampled error {err:.3e} over {bound:.3e}"));
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_6_arnold_count_on_the_torus() {
    let mut c = Criterion::new(6, "lifted Morse function on T²: exactly 4 chords", 120);
    let space = PhaseSpace::torus(1);
    let chain = TransformChain::standard(1);
    let h = torus_morse();
    let k = lift_structured(&h, &chain).unwrap();
    let integ = IntegratorConfig::with_exponent(10);
    let newton = NewtonConfig::default();
    let set = enumerate_chords(&k, &space, &GridSpec { points_per_dim: 4, bounds: None }, &newton, &integ).unwrap();
    c.check(set.count() == 4, || format!("{} chords", set.count()));
    c.check(!set.degenerate, || "flagged degenerate".into());
    c.check(set.count() >= 3, || "below cuplength + 1 = 3".into());
    let crit = torus_morse_critical_points();
    let mut hit = [false; 4];
    for ch in &set.orbits {
        let v = pullback_chord(ch, &chain).unwrap();
        match crit.iter().position(|p| space.sup_distance(&ch.params, p) < 1e-9) {
            Some(i) => {
                hit[i] = true;
                let flat = (0..=v.intervals()).all(|j| space.sup_distance(v.node(j), &crit[i]) < 1e-9);
                c.check(flat, || format!("pullback at {:?} is not constant", crit[i]));
            }
            None => c.check(false, || format!("chord at {:?} is not a critical point", ch.params)),
        }
    }
    c.check(hit.iter().all(|&x| x), || format!("critical points hit: {hit:?}"));
    let fp = flow_fixed_points(&h, &space, 8, &newton, &integ).unwrap();
    c.check(fp.count() == 4, || format!("{} fixed points of the time-one map", fp.count()));
    for a in &fp.orbits {
        let matched = set.orbits.iter().any(|b| space.sup_distance(&a.params, &b.params) < 1e-8);
        c.check(matched, || format!("fixed point {:?} has no chord", a.params));
    }
    c.finish();
}

#[test]
fn criterion_7_two_route_delay_verification() {
    let mut c = Criterion::new(7, "product K on T⁴: delay residual and periodic solver agree", 300);
    let space = PhaseSpace::torus(1);
    let chain = TransformChain::standard(1);
    let k = product_k_t4();
    let d = generate(&k, &chain).unwrap();
    let integ = IntegratorConfig::with_exponent(12);
    let set = enumerate_chords(&k, &space, &GridSpec { points_per_dim: 4, bounds: None }, &NewtonConfig::default(), &integ).unwrap();
    c.check(set.count() >= 1, || "no chords".into());
    let (mut worst_res, mut worst_sup): (f64, f64) = (0.0, 0.0);
    for ch in &set.orbits {
        let v = pullback_chord(ch, &chain).unwrap();
        let spread = (0..=v.intervals()).map(|i| space.sup_distance(v.node(i), v.node(0))).fold(0.0, f64::max);
        c.check(spread > 1e-2, || format!("chord {:?} does not move", ch.params));
        let res = delay_residual(&d, &v).unwrap();
        worst_res = worst_res.max(res);
        c.check(res <= 1e-4, || format!("chord {:?}: residual {res:.3e}", ch.params));
        match solve_periodic_delay(&d, &v, &PeriodicConfig::default()) {
            Ok(sol) => {
                let sup = v.sup_distance_resampled(&sol).unwrap();
                worst_sup = worst_sup.max(sup);
                c.check(sup <= 1e-4, || format!("chord {:?}: periodic sup distance {sup:.3e}", ch.params));
            }
            Err(e) => c.check(false, || format!("chord {:?}: periodic solver failed: {e}", ch.params)),
        }
    }
    println!("    {} chords, max residual {worst_res:.3e}, max sup distance {worst_sup:.3e}", set.count());
    c.finish();
}

#[test]
fn criterion_8_invariant_suites() {
    let mut c = Criterion::new(8, "tower, segment table, energy, λ and gradient invariants", 30);
    for n in 1..=5 {
        let l = build_level(n).unwrap();
        c.check(l.signs.iter().map(|&s| i32::from(s)).sum::<i32>() == 0, || format!("n={n}: sign sum"));
        let cycle = l.union_cycle();
        c.check(cycle.as_ref().is_some_and(|cy| cy.len() == l.copies()), || format!("n={n}: union of matchings is not one cycle"));
        c.check(lambda_cancels(&l), || format!("n={n}: λ does not cancel on the diagonals"));
        let t = segment_table(&TransformChain::standard(n)).unwrap();
        if let Err(e) = t.check_invariants(9) {
            c.check(false, || format!("standard n={n}: {e}"));
        }
    }
    for rs in [vec![q(1, 3)], vec![q(1, 3), q(2, 5)], vec![q(2, 7), q(1, 2), q(3, 4)], vec![q(1, 5), q(2, 3), q(1, 2), q(3, 7), q(5, 6)]] {
        let t = segment_table(&TransformChain::affine_r(&rs).unwrap()).unwrap();
        if let Err(e) = t.check_invariants(9) {
            c.check(false, || format!("affine {rs:?}: {e}"));
        }
    }

    let k = product_of_factors(1);
    let z0 = ProductPoint::from_flat(2, vec![0.1, 0.3, 0.7, 0.2]).unwrap();
    let path = integrate(&k, PhaseSpace::torus(1), &z0, &IntegratorConfig::with_exponent(10)).unwrap();
    let e0 = k.value(path.node(0), 2, 0.0);
    let drift = (0..=path.intervals()).map(|i| (k.value(path.node(i), 2, 0.0) - e0).abs()).fold(0.0, f64::max);
    c.check(drift <= 1e-8, || format!("energy drift {drift:.3e}"));

    let mut r = rng(8);
    let cases: Vec<(Box<dyn Hamiltonian>, usize)> =
        vec![(Box::new(product_k_t4()), 1), (Box::new(product_of_factors(3)), 3), (Box::new(one_four_two_three()), 2)];
    let mut worst: f64 = 0.0;
    for (k, n) in &cases {
        let lvl = build_level(*n).unwrap();
        for _ in 0..5 {
            let flat: Vec<f64> = (0..2 << n).map(|_| r.gen_range(0.0..1.0)).collect();
            let z = ProductPoint::from_flat(2, flat).unwrap();
            let t = r.gen_range(0.0..1.0);
            let a = vector_field(k.as_ref(), &lvl, &z, t);
            let b = fd_gradient_oracle(k.as_ref(), &lvl, &z, t, 1e-5);
            for (x, y) in a.as_flat().iter().zip(b.as_flat()) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    c.check(worst <= 1e-7, || format!("analytic vs finite-difference field: {worst:.3e}"));
    c.finish();
}

#[test]
fn criterion_9_copy_time_map_comparison() {
    let mut c = Criterion::new(9, "composed vs printed copy time maps", 10);
    let t = |s: (i64, i64), o: (i64, i64)| aff(q(s.0, s.1), q(o.0, o.1));
    let derived = |n: usize, copy: usize| copy_time_map(&TransformChain::standard(n), copy - 1).unwrap().as_affine().unwrap();
    c.check(derived(3, 6) == t((1, 8), (3, 4)) && printed_tau_maps(3)[5] == t((1, 8), (3, 4)), || "τ³₆ is not 3/4 + t/8 in both".into());
    c.check(derived(2, 1) == t((1, 4), (0, 1)) && printed_tau_maps(2)[0] == t((1, 4), (0, 1)), || "τ²₁ is not t/4 in both".into());
    c.check(derived(2, 2) == t((-1, 4), (1, 1)), || format!("derived τ²₂ = {}", derived(2, 2)));
    c.check(printed_tau_maps(2)[1] == t((-1, 4), (1, 2)), || format!("printed τ²₂ = {}", printed_tau_maps(2)[1]));
    c.check((0..2).all(|j| derived(1, j + 1) == printed_tau_maps(1)[j]), || "level 1 maps differ".into());
    for n in 2..=3 {
        let differing = (0..1 << n).filter(|&j| derived(n, j + 1) != printed_tau_maps(n)[j]).count();
        println!("    n={n}: {differing} of {} printed maps differ from the composed ones", 1 << n);
        c.check(differing > 0, || format!("n={n}: no discrepancy"));
    }

    // the composed maps satisfy the pushforward identity, the printed ones do not
    let mut r = rng(6);
    let (lp, h) = (random_trig_loop(&mut r), random_trig_hamiltonian(&mut r));
    for n in 1..=3 {
        let chain = TransformChain::standard(n);
        let gaps = |variant| -> Vec<(usize, f64)> {
            (10..=12u32)
                .map(|m| {
                    let rep = pushforward_report(&h, &lp.sample(PhaseSpace::plane(1), 1 << m).unwrap(), &chain, variant).unwrap();
                    (rep.intervals, rep.gap)
                })
                .collect()
        };
        let (dg, pg) = (gaps(TauVariant::Derived), gaps(TauVariant::Printed));
        let bound = 10.0 / (1u64 << 24) as f64;
        c.check(dg[2].1 <= bound, || format!("n={n}: composed gap {:.3e}", dg[2].1));
        c.check(observed_order(&dg).is_some_and(|o| (o * 10.0).round() / 10.0 >= 2.0), || format!("n={n}: composed order"));
        if n >= 2 {
            c.check(pg[2].1 > 1e3 * dg[2].1, || format!("n={n}: printed gap {:.3e} not separated", pg[2].1));
        }
        println!("    n={n}: composed gap {:.3e}, printed gap {:.3e} at N=2^12", dg[2].1, pg[2].1);
    }
    c.finish();
}
