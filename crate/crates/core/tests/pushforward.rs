//! The action of a loop against the action of its graph chord.

use hamdelay::action::{observed_order, pushforward_report};
use hamdelay::geometry::PhaseSpace;
use hamdelay::hamiltonians::{StructuredHamiltonian, TauVariant};
use hamdelay::instances::{random_trig_hamiltonian, random_trig_loop, rng, TrigLoop};
use hamdelay::transforms::TransformChain;

#[test]
fn gap_is_second_order_with_composed_maps() {
    let mut r = rng(5);
    let (lp, h) = (random_trig_loop(&mut r), random_trig_hamiltonian(&mut r));
    for n in 1..=3 {
        let chain = TransformChain::standard(n);
        let pts: Vec<(usize, f64)> = (9..=11)
            .map(|m| {
                let v = lp.sample(PhaseSpace::torus(1), 1 << m).unwrap();
                (1 << m, pushforward_report(&h, &v, &chain, TauVariant::Derived).unwrap().gap)
            })
            .collect();
        let order = observed_order(&pts).unwrap();
        assert!((order * 10.0).round() / 10.0 >= 2.0, "n={n}: {order}");
    }
}

#[test]
fn printed_maps_break_the_identity_from_level_two() {
    let mut r = rng(6);
    let (lp, h) = (random_trig_loop(&mut r), random_trig_hamiltonian(&mut r));
    let v = lp.sample(PhaseSpace::plane(1), 1 << 10).unwrap();
    let chain = TransformChain::standard(1);
    let g = pushforward_report(&h, &v, &chain, TauVariant::Printed).unwrap().gap;
    assert!(g < 1e-5);
    for n in 2..=3 {
        let chain = TransformChain::standard(n);
        let derived = pushforward_report(&h, &v, &chain, TauVariant::Derived).unwrap().gap;
        let printed = pushforward_report(&h, &v, &chain, TauVariant::Printed).unwrap().gap;
        assert!(derived < 1e-5 && printed > 1e3 * derived, "n={n}: {derived} {printed}");
    }
}

#[test]
fn zero_hamiltonian_circle() {
    let v = TrigLoop::unit_circle().sample(PhaseSpace::plane(1), 1 << 11).unwrap();
    let rep = pushforward_report(&StructuredHamiltonian::zero(0), &v, &TransformChain::standard(2), TauVariant::Derived).unwrap();
    assert!((rep.loop_action + std::f64::consts::PI).abs() < 1e-5);
    assert!(rep.gap < 1e-5);
}
