//! Deterministic sampling of admissible phase states, for property checks
//! and the fixed-point / bifurcation seed grids.

use super::{State, System, SystemId};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `count` admissible states drawn from a seeded generator. Constrained
/// systems are sampled directly on T*S^2.
pub fn random_states(system: &System, count: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = match system.id {
            SystemId::SphericalPendulum | SystemId::FreeSphere => {
                let mut x: DVector<f64> = DVector::zeros(6);
                // uniform-ish direction, tangent momentum
                loop {
                    for i in 0..3 {
                        x[i] = rng.random_range(-1.0..1.0);
                    }
                    let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    if n > 0.2 {
                        for i in 0..3 {
                            x[i] /= n;
                        }
                        break;
                    }
                }
                for i in 3..6 {
                    x[i] = rng.random_range(-1.5..1.5);
                }
                system.project(&mut x);
                x
            }
            SystemId::Resonance1m2 => {
                let mut x: DVector<f64> = DVector::zeros(4);
                for i in 0..4 {
                    x[i] = rng.random_range(-1.1..1.1);
                }
                x
            }
            _ => {
                let mut x: DVector<f64> = DVector::zeros(4);
                for i in 0..4 {
                    x[i] = rng.random_range(-1.6..1.6);
                }
                x
            }
        };
        if system.is_admissible(&x) {
            out.push(x);
        }
    }
    out
}
