//! Hamiltonian flow integration with conservation monitoring, constraint
//! projection and event detection.

mod dopri5;

pub use dopri5::{EventDirection, EventFn, EventHit, Ode, OdeSettings, OdeSolution};

use crate::error::{Error, Result};
use crate::systems::{State, System};

/// Integration options for the public flow operations.
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// accepted runs must keep max(|dH|, |dJ|) below this gate
    pub drift_gate: f64,
    pub max_steps: usize,
    pub dense: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-10,
            atol: 1e-12,
            drift_gate: 1e-9,
            max_steps: 40_000_000,
            dense: false,
        }
    }
}

impl FlowOptions {
    pub fn ode_settings(&self) -> OdeSettings {
        OdeSettings {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
            h_max: f64::INFINITY,
            dense: self.dense,
        }
    }
}

/// An accepted integration run: ordered samples and the worst conserved-
/// quantity drift observed over the run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, State)>,
    pub drift_h: f64,
    pub drift_j: f64,
}

impl Trajectory {
    pub fn end(&self) -> &(f64, State) {
        self.samples.last().expect("nonempty trajectory")
    }
}

/// The Hamiltonian vector field of `system` packaged for the integrator,
/// with constraint projection for the sphere systems.
pub fn hamiltonian_ode(system: &System) -> Ode<'static> {
    let sys = *system;
    let ode = Ode::new(move |_t, y: &State, dy: &mut State| sys.h_field(y, dy));
    if system.constrained() {
        ode.with_projection(move |y: &mut State| sys.project(y))
    } else {
        ode
    }
}

/// Integrate the H-flow of `system` from `start` for time `t_end` with the
/// given events. Conserved drift above the gate rejects the run.
pub fn integrate(
    system: &System,
    start: &State,
    t_end: f64,
    events: &[EventFn],
    opts: &FlowOptions,
) -> Result<(Trajectory, Vec<EventHit>)> {
    if t_end <= 0.0 {
        return Err(Error::RejectedInput("t_end must be positive".into()));
    }
    if !system.is_admissible(start) {
        return Err(Error::RejectedInput(format!(
            "start state is not admissible for {}",
            system.id
        )));
    }
    integrate_signed(system, start, 0.0, t_end, events, opts)
}

/// Signed-time variant used internally (time-reversal checks, backward runs).
pub fn integrate_signed(
    system: &System,
    start: &State,
    t0: f64,
    t1: f64,
    events: &[EventFn],
    opts: &FlowOptions,
) -> Result<(Trajectory, Vec<EventHit>)> {
    let sys = *system;
    let mut ode = Ode::new(move |_t, y: &State, dy: &mut State| sys.h_field(y, dy));
    if system.constrained() {
        ode = ode.with_projection(move |y: &mut State| sys.project(y));
    }
    let mut settings = opts.ode_settings();
    settings.dense = true; // needed for drift monitoring
    let sol = ode.solve(t0, start, t1, &settings, events)?;
    let h0 = system.hamiltonian(start);
    let j0 = system.momentum(start);
    let mut drift_h = 0.0f64;
    let mut drift_j = 0.0f64;
    for (_, y) in &sol.samples {
        drift_h = drift_h.max((system.hamiltonian(y) - h0).abs());
        drift_j = drift_j.max((system.momentum(y) - j0).abs());
    }
    if drift_h.max(drift_j) > opts.drift_gate {
        return Err(Error::DriftExceeded {
            drift: drift_h.max(drift_j),
            gate: opts.drift_gate,
            context: format!(
                "{} from t = {t0} to {t1}: |dH| = {drift_h:.3e}, |dJ| = {drift_j:.3e}",
                system.id
            ),
        });
    }
    let samples = if opts.dense {
        sol.samples
    } else {
        vec![
            sol.samples.first().cloned().expect("nonempty"),
            (sol.t_end, sol.y_end.clone()),
        ]
    };
    Ok((
        Trajectory {
            samples,
            drift_h,
            drift_j,
        },
        sol.events,
    ))
}

/// Advance `start` along the circle action by `angle` (closed form).
pub fn j_flow(system: &System, start: &State, angle: f64) -> State {
    system.j_flow(start, angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::random_states;
    use nalgebra::DVector;
    use std::f64::consts::TAU;

    #[test]
    fn oscillator_period_is_two_pi() {
        let sys = System::harmonic_oscillator();
        let x0 = DVector::from_row_slice(&[0.9, -0.1, 0.2, 0.8]);
        let (traj, _) = integrate(&sys, &x0, TAU, &[], &FlowOptions::default()).unwrap();
        assert!((&traj.end().1 - &x0).norm() < 1e-9);
    }

    #[test]
    fn pendulum_conserves_f_over_long_run() {
        let sys = System::spherical_pendulum();
        for x0 in random_states(&sys, 3, 99) {
            let (traj, _) = integrate(&sys, &x0, 10.0, &[], &FlowOptions::default()).unwrap();
            assert!(traj.drift_h < 1e-9, "dH = {:.3e}", traj.drift_h);
            assert!(traj.drift_j < 1e-9, "dJ = {:.3e}", traj.drift_j);
            // conservation oracle cross-checked at halved tolerance
            let tight = FlowOptions {
                rtol: 5e-11,
                ..Default::default()
            };
            let (traj2, _) = integrate(&sys, &x0, 10.0, &[], &tight).unwrap();
            assert!(traj2.drift_h <= traj.drift_h * 2.0 + 1e-12);
            let d_end = (&traj.end().1 - &traj2.end().1).norm();
            assert!(d_end < 1e-7, "solutions diverge: {d_end:.3e}");
        }
    }

    #[test]
    fn resonance_j_flow_integrated_is_periodic() {
        // integrate the J-field for 2 pi and compare with identity
        let sys = System::resonance_1m2();
        let ode = Ode::new(move |_t, y: &State, dy: &mut State| sys.j_field(y, dy));
        let x0 = DVector::from_row_slice(&[1.0, 1.0, 1.0, 1.0]); // z = w = 1 + i
        let sol = ode
            .solve(0.0, &x0, TAU, &OdeSettings::default(), &[])
            .unwrap();
        assert!((sol.y_end.clone() - &x0).norm() < 1e-9);
        // and against the closed form at a partial angle
        let sol2 = ode
            .solve(0.0, &x0, 1.1, &OdeSettings::default(), &[])
            .unwrap();
        assert!((sol2.y_end.clone() - sys.j_flow(&x0, 1.1)).norm() < 1e-9);
    }

    #[test]
    fn time_reversal_round_trip() {
        let opts = FlowOptions::default();
        for sys in [
            System::spherical_pendulum(),
            System::champagne_bottle(),
            System::resonance_1m2(),
            System::harmonic_oscillator(),
        ] {
            for x0 in random_states(&sys, 2, 7) {
                let (fwd, _) = integrate(&sys, &x0, 4.0, &[], &opts).unwrap();
                let (back, _) =
                    integrate_signed(&sys, &fwd.end().1, 4.0, 0.0, &[], &opts).unwrap();
                let err = (&back.end().1 - &x0).norm();
                assert!(err < 1e-8, "{}: reversal error {err:.3e}", sys.id);
            }
        }
    }

    #[test]
    fn h_and_j_flows_commute() {
        let opts = FlowOptions::default();
        for sys in [
            System::spherical_pendulum(),
            System::champagne_bottle(),
            System::resonance_1m2(),
        ] {
            for x0 in random_states(&sys, 2, 13) {
                let (t, s) = (1.3, 0.8);
                let (a, _) = integrate(&sys, &x0, t, &[], &opts).unwrap();
                let a = j_flow(&sys, &a.end().1, s);
                let b0 = j_flow(&sys, &x0, s);
                let (b, _) = integrate(&sys, &b0, t, &[], &opts).unwrap();
                let err = (&a - &b.end().1).norm();
                assert!(err < 1e-8, "{}: commutator {err:.3e}", sys.id);
            }
        }
    }

    #[test]
    fn event_state_satisfies_event_function() {
        // pendulum: section p_z = 0 located to 1e-10
        let sys = System::spherical_pendulum();
        let x0 = {
            let mut x = DVector::zeros(6);
            x[0] = 1.0; // equator
            x[4] = 0.6; // azimuthal momentum
            x[5] = 0.4; // meridian momentum
            x
        };
        let ev = EventFn::new(|_t, y: &State| y[5], EventDirection::Either, false);
        let (_, hits) = integrate(&sys, &x0, 8.0, &[ev], &FlowOptions::default()).unwrap();
        assert!(!hits.is_empty());
        for hit in hits {
            assert!(hit.state[5].abs() < 1e-10, "event residual {:.2e}", hit.state[5]);
        }
    }

    #[test]
    fn drift_gate_rejects_sloppy_runs() {
        let sys = System::spherical_pendulum();
        let x0 = random_states(&sys, 1, 3).pop().unwrap();
        let opts = FlowOptions {
            rtol: 1e-4,
            atol: 1e-6,
            drift_gate: 1e-13,
            ..Default::default()
        };
        match integrate(&sys, &x0, 10.0, &[], &opts) {
            Err(Error::DriftExceeded { .. }) => {}
            other => panic!("expected drift rejection, got {other:?}"),
        }
    }
}
