//! Chord solving, pullback to delay orbits, and the two independent checks of
//! the correspondence: the delay residual and the periodic collocation solver.

use hamdelay::action::action_chord;
use hamdelay::delaygen::generate;
use hamdelay::geometry::{build_level, Diagonal, LevelStructure, PhaseSpace, ProductPoint};
use hamdelay::hamiltonians::{lift_structured, Hamiltonian, StructuredHamiltonian};
use hamdelay::instances::{product_k_t4, product_of_factors, torus_morse, torus_morse_critical_points};
use hamdelay::solvers::newton::NewtonConfig;
use hamdelay::solvers::{
    delay_residual, enumerate_chords, flow_fixed_points, integrate, pullback_chord, solve_chord, solve_periodic_delay, GridSpec,
    IntegratorConfig, PeriodicConfig,
};
use hamdelay::transforms::{DiscretePath, TransformChain};

#[test]
fn energy_is_conserved_for_autonomous_products() {
    let space = PhaseSpace::torus(1);
    let k = product_of_factors(1);
    let z0 = ProductPoint::from_flat(2, vec![0.1, 0.3, 0.7, 0.2]).unwrap();
    let path = integrate(&k, space, &z0, &IntegratorConfig::with_exponent(10)).unwrap();
    let e0 = k.value(path.node(0), 2, 0.0);
    let drift = (0..=path.intervals()).map(|i| (k.value(path.node(i), 2, 0.0) - e0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-8, "{drift}");
    assert!(path.sup_distance(&DiscretePath::constant(space, 1, 1024, &z0).unwrap()).unwrap() > 1e-3);
}

#[test]
fn lifted_morse_has_four_constant_chords() {
    let space = PhaseSpace::torus(1);
    let chain = TransformChain::standard(1);
    let k = lift_structured(&torus_morse(), &chain).unwrap();
    let integ = IntegratorConfig::with_exponent(8);
    let set = enumerate_chords(&k, &space, &GridSpec { points_per_dim: 4, bounds: None }, &NewtonConfig::default(), &integ).unwrap();
    assert_eq!(set.count(), 4);
    assert!(!set.degenerate);
    let d = generate(&k, &chain).unwrap();
    let crit = torus_morse_critical_points();
    let mut hit = [false; 4];
    for c in &set.orbits {
        let i = crit.iter().position(|p| space.sup_distance(&c.params, p) < 1e-9).expect("a critical point");
        hit[i] = true;
        let p = crit[i];
        let v = pullback_chord(c, &chain).unwrap();
        assert!((0..=v.intervals()).all(|i| space.sup_distance(v.node(i), &p) < 1e-9));
        assert!(delay_residual(&d, &v).unwrap() <= 1e-6);
    }
    assert!(hit.iter().all(|&h| h));
    let fp = flow_fixed_points(&torus_morse(), &space, 8, &NewtonConfig::default(), &integ).unwrap();
    assert_eq!(fp.count(), 4);
    for a in &fp.orbits {
        assert!(set.orbits.iter().any(|b| space.sup_distance(&a.params, &b.params) < 1e-8));
    }
}

#[test]
fn product_chord_pulls_back_to_a_delay_orbit() {
    let space = PhaseSpace::torus(1);
    let chain = TransformChain::standard(1);
    let k = product_k_t4();
    let d = generate(&k, &chain).unwrap();
    let c = solve_chord(&k, &space, &[0.5, 0.5], &NewtonConfig::default(), &IntegratorConfig::with_exponent(12)).unwrap();
    let v = pullback_chord(&c, &chain).unwrap();
    let spread = (0..=v.intervals()).map(|i| space.sup_distance(v.node(i), v.node(0))).fold(0.0, f64::max);
    assert!(spread > 1e-2, "the orbit should move: {spread}");
    assert!(delay_residual(&d, &v).unwrap() <= 1e-4);
    let sol = solve_periodic_delay(&d, &v, &PeriodicConfig::default()).unwrap();
    assert!(v.sup_distance_resampled(&sol).unwrap() <= 1e-4);
}

/// Variation vanishing nowhere in particular but tangent to `Δ^0` at `t = 0`
/// and to `Δ^1` at `t = 1`.
fn admissible_variation(level: &LevelStructure, n: usize, dim: usize) -> Vec<f64> {
    let copies = level.copies();
    let coef = |i: usize, a: usize, b: usize| ((i * a + b) as f64).sin();
    let mut out = vec![0.0; (n + 1) * copies * dim];
    for k in 0..=n {
        let t = k as f64 / n as f64;
        for j in 0..copies {
            let p0 = level.partner(Diagonal::Zero, j).unwrap().min(j);
            let p1 = level.partner(Diagonal::One, j).unwrap().min(j);
            for q in 0..dim {
                out[(k * copies + j) * dim + q] = (1.0 - t) * coef(p0 * dim + q, 7, 3)
                    + t * coef(p1 * dim + q, 5, 1)
                    + (std::f64::consts::PI * t).sin() * coef(j * dim + q, 3, 2);
            }
        }
    }
    out
}

fn directional_derivative(k: &StructuredHamiltonian, w: &DiscretePath, xi: &[f64], s: f64) -> f64 {
    let moved: Vec<f64> = w.samples_flat().iter().zip(xi).map(|(x, d)| x + s * d).collect();
    let wm = DiscretePath::from_nodes(w.space, w.level, w.intervals(), moved).unwrap();
    (action_chord(k, &wm).unwrap() - action_chord(k, w).unwrap()) / s
}

#[test]
fn chords_are_critical_for_the_action() {
    let space = PhaseSpace::torus(1);
    let level = build_level(1).unwrap();
    let k = product_k_t4();
    let integ = IntegratorConfig::with_exponent(10);
    let c = solve_chord(&k, &space, &[0.13, 0.37], &NewtonConfig::default(), &integ).unwrap();
    let xi = admissible_variation(&level, c.path.intervals(), 2);
    let dd = directional_derivative(&k, &c.path, &xi, 1e-6);
    assert!(dd.abs() <= 1e-4, "{dd}");
    // the opposite orientation of the field: chords of −K under the chosen sign
    let flipped = solve_chord(&k.scaled(-1.0), &space, &[0.13, 0.37], &NewtonConfig::default(), &integ).unwrap();
    let dd = directional_derivative(&k, &flipped.path, &xi, 1e-6);
    assert!(dd.abs() > 1e-3, "{dd}");
}

#[test]
fn zero_hamiltonian_orbits_are_flagged_degenerate() {
    let space = PhaseSpace::torus(1);
    let set = enumerate_chords(
        &StructuredHamiltonian::zero(1),
        &space,
        &GridSpec { points_per_dim: 2, bounds: None },
        &NewtonConfig::default(),
        &IntegratorConfig::with_exponent(4),
    )
    .unwrap();
    assert!(set.degenerate);
}
