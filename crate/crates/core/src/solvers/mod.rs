//! Numerical engines: flow integration on `M_n`, the chord boundary value
//! problem, pullback to delay orbits, and the independent periodic solver.

pub mod chords;
pub mod delay;
pub mod integrate;
pub mod newton;
pub mod output;

pub use chords::{enumerate_chords, flow_fixed_points, param_count, pullback_chord, shoot_residual, solve_chord, Chord, GridSpec, OrbitSet};
pub use delay::{delay_residual, solve_periodic_delay, PeriodicConfig};
pub use integrate::{integrate, IntegratorConfig};
pub use newton::NewtonConfig;
