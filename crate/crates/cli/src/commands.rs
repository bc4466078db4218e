//! Subcommand pipelines. Each returns whether it surfaced a finding; errors
//! propagate to `main` and become exit code 2.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hamdelay::action::{action_loop_report, observed_order, pushforward_report, ActionReport, PushforwardReport};
use hamdelay::delaygen::{generate, DelayEquationDescriptor, RenderFormat};
use hamdelay::geometry::PhaseSpace;
use hamdelay::hamiltonians::{lift_structured, StructuredHamiltonian, TauVariant};
use hamdelay::instances::{random_trig_hamiltonian, random_trig_loop, rng};
use hamdelay::solvers::output::{chord_csv, loop_csv, summary};
use hamdelay::solvers::{delay_residual, enumerate_chords, flow_fixed_points, pullback_chord, solve_periodic_delay, OrbitSet};
use hamdelay::transforms::{copy_time_map, phi_chain, printed_tau_maps, psi_chain, TransformChain};
use serde::Serialize;

use crate::config::{ExperimentConfig, HamiltonianConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Finding,
}

impl Status {
    fn from_finding(found: bool) -> Self {
        if found {
            Status::Finding
        } else {
            Status::Ok
        }
    }
}

fn write_out(dir: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let p: PathBuf = dir.join(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn json<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("report serializes");
    s.push('\n');
    s
}

/// The symbolic system needs a structured `K`; lifts go through `lift_structured`.
fn descriptor(cfg: &ExperimentConfig) -> Result<DelayEquationDescriptor> {
    let chain = cfg.chain();
    let k = match &cfg.hamiltonian {
        HamiltonianConfig::Lift(h) => lift_structured(h, &chain).context("the lift has no structured form on this chain")?,
        _ => cfg.resolve()?.structured().cloned().expect("non-lift configs resolve to structured K"),
    };
    Ok(generate(&k, &chain)?)
}

pub fn delaygen(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Status> {
    let d = descriptor(cfg)?;
    let text = d.render(RenderFormat::Text);
    print!("{text}");
    write_out(out, "delay.txt", &text)?;
    write_out(out, "delay.tex", &d.render(RenderFormat::Latex))?;
    write_out(out, "delay.json", &(d.render(RenderFormat::Json) + "\n"))?;
    Ok(Status::Ok)
}

fn solve_orbits(cfg: &ExperimentConfig) -> Result<OrbitSet> {
    let k = cfg.resolve()?;
    let integ = cfg.integrator().aligned_to(&cfg.chain())?;
    Ok(enumerate_chords(k.as_dyn(), &cfg.space, &cfg.grid, &cfg.newton, &integ)?)
}

fn fmt_params(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

pub fn chords(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Status> {
    let chain = cfg.chain();
    let set = solve_orbits(cfg)?;
    println!(
        "level {}: {} chords ({} seeds, {} converged, {} no convergence, {} singular)",
        set.level,
        set.count(),
        set.seeds,
        set.converged,
        set.no_convergence,
        set.singular
    );
    for (i, c) in set.orbits.iter().enumerate() {
        println!("  chord {}: start {} residual {:.2e} cond {:.2e}", i + 1, fmt_params(&c.params), c.end_residual.max(c.start_residual), c.condition);
    }
    let mut finding = false;
    if set.degenerate {
        println!("degenerate: chords are not isolated, bound check skipped");
    } else if let Some(b) = cfg.bounds {
        let mark = |bound: usize| if set.count() >= bound { "✓" } else { "✗" };
        println!("bounds: ≥{} {}, ≥{} {}", b.cuplength_plus_one, mark(b.cuplength_plus_one), b.betti_sum, mark(b.betti_sum));
        finding |= set.count() < b.cuplength_plus_one.max(b.betti_sum);
    }

    // at level 1 the chords of a lift are the fixed points of the time-one map
    if let (Some(h), true, 1) = (cfg.base(), cfg.space.is_torus(), chain.level()) {
        let fp = flow_fixed_points(h, &cfg.space, 2 * cfg.grid.points_per_dim, &cfg.newton, &cfg.integrator())?;
        let matched = fp.orbits.iter().all(|a| set.orbits.iter().any(|b| cfg.space.sup_distance(&a.params, &b.params) < 1e-6));
        let agree = fp.count() == set.count() && matched;
        println!("fixed points of the time-one map: {} ({})", fp.count(), if agree { "match" } else { "MISMATCH" });
        finding |= !agree && !set.degenerate;
    }

    write_out(out, "orbits.json", &json(&summary(&set)))?;
    for (i, c) in set.orbits.iter().enumerate() {
        write_out(out, &format!("chord_{:03}.csv", i + 1), &chord_csv(&c.path))?;
        write_out(out, &format!("loop_{:03}.csv", i + 1), &loop_csv(&pullback_chord(c, &chain)?))?;
    }
    Ok(Status::from_finding(finding))
}

#[derive(Serialize)]
struct VerifyEntry {
    chord: usize,
    params: Vec<f64>,
    delay_residual: f64,
    /// `null` when the collocation cross-check is skipped.
    periodic_sup_distance: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    level: usize,
    step: f64,
    residual_tol: f64,
    sup_tol: f64,
    max_residual: f64,
    max_sup_distance: Option<f64>,
    chords: Vec<VerifyEntry>,
}

pub fn verify(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Status> {
    let chain = cfg.chain();
    let d = descriptor(cfg)?;
    let set = solve_orbits(cfg)?;
    let tol = cfg.verify;
    let mut entries = Vec::new();
    for (i, c) in set.orbits.iter().enumerate() {
        let v = pullback_chord(c, &chain)?;
        let residual = delay_residual(&d, &v)?;
        let sup = if tol.residual_only {
            None
        } else {
            let sol = solve_periodic_delay(&d, &v, &tol.periodic)?;
            Some(v.sup_distance_resampled(&sol)?)
        };
        let pass = residual <= tol.residual_tol && sup.is_none_or(|s| s <= tol.sup_tol);
        println!(
            "chord {}: delay residual {residual:.3e}, periodic sup distance {} {}",
            i + 1,
            sup.map_or("skipped".to_string(), |s| format!("{s:.3e}")),
            if pass { "ok" } else { "FAIL" }
        );
        entries.push(VerifyEntry { chord: i + 1, params: c.params.clone(), delay_residual: residual, periodic_sup_distance: sup, pass });
    }
    let max_residual = entries.iter().map(|e| e.delay_residual).fold(0.0, f64::max);
    let max_sup = entries.iter().filter_map(|e| e.periodic_sup_distance).reduce(f64::max);
    let finding = entries.iter().any(|e| !e.pass);
    println!(
        "{} chords, max residual {max_residual:.3e} (tol {:.0e}), max sup distance {} (tol {:.0e})",
        entries.len(),
        tol.residual_tol,
        max_sup.map_or("n/a".to_string(), |s| format!("{s:.3e}")),
        tol.sup_tol
    );
    let report = VerifyReport {
        level: chain.level(),
        step: cfg.integrator().aligned_to(&chain)?.step(),
        residual_tol: tol.residual_tol,
        sup_tol: tol.sup_tol,
        max_residual,
        max_sup_distance: max_sup,
        chords: entries,
    };
    write_out(out, "verify.json", &json(&report))?;
    Ok(Status::from_finding(finding))
}

#[derive(Serialize)]
struct ActionRow {
    loop_index: usize,
    space: &'static str,
    level: usize,
    /// Action of the loop on `M` at the finest grid.
    loop_report: ActionReport,
    derived: Vec<PushforwardReport>,
    derived_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    printed: Option<Vec<PushforwardReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    printed_order: Option<f64>,
    /// `gap ≤ 10 N^{−2} max(1, |A|)` at `N = 2^12` when that grid is swept.
    bound_ok: Option<bool>,
}

fn order_text(o: Option<f64>) -> String {
    o.map_or("exact".to_string(), |o| format!("{o:.2}"))
}

pub fn action(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Status> {
    let a = &cfg.action;
    if a.exponents.is_empty() || a.levels.is_empty() {
        bail!("the action sweep needs at least one level and one grid exponent");
    }
    let fixed: Option<StructuredHamiltonian> = match &cfg.hamiltonian {
        HamiltonianConfig::Random => None,
        HamiltonianConfig::Zero => Some(StructuredHamiltonian::zero(0)),
        HamiltonianConfig::Lift(h) => Some(h.clone()),
        _ => bail!("the action sweep needs a base hamiltonian: lift, zero or random"),
    };
    if cfg.space.dim() != 2 {
        bail!("the action sweep samples loops on a 2-dimensional base");
    }
    let mut r = rng(cfg.seed);
    let mut rows = Vec::new();
    let mut finding = false;
    let header: Vec<String> = a.exponents.iter().map(|m| format!("N=2^{m}")).collect();
    println!("loop space   n  {}  order", header.iter().map(|h| format!("{h:>10}")).collect::<Vec<_>>().join(" "));
    for i in 0..a.loops {
        let (space, name) = if i % 2 == 0 { (PhaseSpace::torus(1), "torus") } else { (PhaseSpace::plane(1), "plane") };
        let lp = random_trig_loop(&mut r);
        let h = match &fixed {
            Some(h) => h.clone(),
            None => random_trig_hamiltonian(&mut r),
        };
        let finest = *a.exponents.iter().max().expect("non-empty");
        let loop_report = action_loop_report(&h, &lp.sample(space, 1 << finest)?)?;
        for &n in &a.levels {
            let chain = TransformChain::standard(n);
            let sweep = |variant: TauVariant| -> Result<Vec<PushforwardReport>> {
                a.exponents.iter().map(|&m| Ok(pushforward_report(&h, &lp.sample(space, 1 << m)?, &chain, variant)?)).collect()
            };
            let derived = sweep(TauVariant::Derived)?;
            let order = observed_order(&derived.iter().map(|p| (p.intervals, p.gap)).collect::<Vec<_>>());
            let bound_ok = derived
                .iter()
                .find(|p| p.intervals == 1 << 12)
                .map(|p| p.gap <= 10.0 / (p.intervals as f64).powi(2) * p.loop_action.abs().max(1.0));
            // gaps at round-off level carry no order information
            let at_roundoff = derived.iter().all(|p| p.gap <= 1e-12 * p.loop_action.abs().max(1.0));
            let low = !at_roundoff && order.is_some_and(|o| o < a.min_order);
            finding |= low || bound_ok == Some(false);
            let gaps: Vec<String> = derived.iter().map(|p| format!("{:>10.3e}", p.gap)).collect();
            println!("{:>4} {name}  {n}  {}  {}{}", i + 1, gaps.join(" "), order_text(order), if low { " LOW" } else { "" });
            let (printed, printed_order) = if a.tau_compat {
                let p = sweep(TauVariant::Printed)?;
                let o = observed_order(&p.iter().map(|p| (p.intervals, p.gap)).collect::<Vec<_>>());
                let gaps: Vec<String> = p.iter().map(|p| format!("{:>10.3e}", p.gap)).collect();
                println!("     printed   {}  {}", gaps.join(" "), order_text(o));
                (Some(p), o)
            } else {
                (None, None)
            };
            rows.push(ActionRow {
                loop_index: i + 1,
                space: name,
                level: n,
                loop_report: loop_report.clone(),
                derived,
                derived_order: order,
                printed,
                printed_order,
                bound_ok,
            });
        }
    }
    let worst = rows.iter().filter_map(|r| r.derived_order).reduce(f64::min);
    println!("minimum observed order {} (threshold {})", order_text(worst), a.min_order);
    write_out(out, "action.json", &json(&rows))?;
    Ok(Status::from_finding(finding))
}

/// Which copy-time maps to print.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantArg {
    Derived,
    Printed,
    Both,
}

pub fn tau(level: usize, copy: usize, variant: VariantArg) -> Result<Status> {
    if level == 0 || copy == 0 || copy > 1 << level {
        bail!("need level ≥ 1 and copy in 1..={}", 1usize << level.max(1));
    }
    let derived = copy_time_map(&TransformChain::standard(level), copy - 1)?
        .as_affine()
        .expect("standard chains are affine");
    let printed = printed_tau_maps(level)[copy - 1];
    let mut s = String::new();
    if variant != VariantArg::Printed {
        writeln!(s, "τ^{level}_{copy} derived: {derived}").unwrap();
    }
    if variant != VariantArg::Derived {
        writeln!(s, "τ^{level}_{copy} printed: {printed}").unwrap();
    }
    if variant == VariantArg::Both {
        if derived == printed {
            s.push_str("agree\n");
        } else {
            s.push_str("DIFFER: the printed recursion does not compose α and β\n");
        }
    }
    print!("{s}");
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct RoundTripRow {
    level: usize,
    space: &'static str,
    intervals: usize,
    node_error: f64,
    resampled_error: f64,
    bound: f64,
}

pub fn roundtrip(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Status> {
    let n_int = cfg.roundtrip.intervals;
    if n_int < 4 || !n_int.is_multiple_of(2) {
        bail!("round-trip intervals must be even and at least 4");
    }
    let mut r = rng(cfg.seed);
    let mut rows = Vec::new();
    for &n in &cfg.roundtrip.levels {
        let chain = TransformChain::standard(n);
        for (space, name) in [(PhaseSpace::torus(1), "torus"), (PhaseSpace::plane(1), "plane")] {
            let lp = random_trig_loop(&mut r);
            let v = lp.sample(space, n_int)?;
            let back = phi_chain(&chain, &psi_chain(&chain, &v)?)?;
            let node_error = back.sup_distance(&v)?;
            let fine = 3 * n_int / 2;
            let w = psi_chain(&chain, &v)?.resample(fine)?;
            let resampled_error = phi_chain(&chain, &w)?.sup_distance_resampled(&lp.sample(space, fine)?)?;
            let bound = 10.0 / (n_int * n_int) as f64;
            println!(
                "n={n} {name}: nodes {node_error:.3e}, resampled {resampled_error:.3e} (bound {bound:.3e}) {}",
                if node_error == 0.0 && resampled_error <= bound { "ok" } else { "FAIL" }
            );
            rows.push(RoundTripRow { level: n, space: name, intervals: n_int, node_error, resampled_error, bound });
        }
    }
    let finding = rows.iter().any(|r| r.node_error != 0.0 || r.resampled_error > r.bound);
    write_out(out, "roundtrip.json", &json(&rows))?;
    Ok(Status::from_finding(finding))
}
