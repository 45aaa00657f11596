//! Dormand-Prince 5(4) adaptive integrator with event location.
//!
//! Embedded pair of order 5(4), step-size control on the mixed
//! absolute/relative error norm, optional post-step projection (used for
//! the constrained sphere systems), and event crossings located by sign
//! bracketing, Hermite pre-localization and secant refinement on exact
//! mini-steps. Supports both time directions.

use crate::error::{Error, Result};
use crate::systems::State;
use nalgebra::DVector;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
    /// keep all accepted samples (otherwise endpoints only)
    pub dense: bool,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 40_000_000,
            h_max: f64::INFINITY,
            dense: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventDirection {
    Increasing,
    Decreasing,
    Either,
}

pub struct EventFn<'a> {
    pub function: Box<dyn Fn(f64, &State) -> f64 + Sync + 'a>,
    pub direction: EventDirection,
    pub terminal: bool,
    /// count of crossings after which a terminal event stops the run
    pub hit_to_stop: usize,
}

impl<'a> EventFn<'a> {
    pub fn new(
        function: impl Fn(f64, &State) -> f64 + Sync + 'a,
        direction: EventDirection,
        terminal: bool,
    ) -> Self {
        EventFn {
            function: Box::new(function),
            direction,
            terminal,
            hit_to_stop: 1,
        }
    }

    pub fn stopping_after(mut self, hits: usize) -> Self {
        self.hit_to_stop = hits;
        self
    }
}

#[derive(Debug, Clone)]
pub struct EventHit {
    pub event_index: usize,
    pub t: f64,
    pub state: State,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub samples: Vec<(f64, State)>,
    pub events: Vec<EventHit>,
    pub t_end: f64,
    pub y_end: State,
    pub n_accepted: usize,
    pub n_rejected: usize,
    /// true when a terminal event ended the run before t1
    pub terminated_by_event: bool,
}

pub struct Ode<'a> {
    pub field: Box<dyn Fn(f64, &State, &mut State) + Sync + 'a>,
    pub project: Option<Box<dyn Fn(&mut State) + Sync + 'a>>,
}

impl<'a> Ode<'a> {
    pub fn new(field: impl Fn(f64, &State, &mut State) + Sync + 'a) -> Self {
        Ode {
            field: Box::new(field),
            project: None,
        }
    }

    pub fn with_projection(mut self, project: impl Fn(&mut State) + Sync + 'a) -> Self {
        self.project = Some(Box::new(project));
        self
    }

    fn eval(&self, t: f64, y: &State, out: &mut State) {
        (self.field)(t, y, out);
    }

    /// One exact DP5 step of size h from (t, y); no error control.
    fn single_step(&self, t: f64, y: &State, h: f64) -> State {
        let n = y.len();
        let mut k: Vec<State> = Vec::with_capacity(7);
        let mut buf = DVector::zeros(n);
        self.eval(t, y, &mut buf);
        k.push(buf.clone());
        for s in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            self.eval(t + C[s + 1] * h, &ys, &mut buf);
            k.push(buf.clone());
        }
        let mut y1 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y1.axpy(h * B5[j], kj, 1.0);
            }
        }
        y1
    }

    /// Integrate from (t0, y0) to t1 (either direction), locating events.
    pub fn solve(
        &self,
        t0: f64,
        y0: &State,
        t1: f64,
        settings: &OdeSettings,
        events: &[EventFn],
    ) -> Result<OdeSolution> {
        let n = y0.len();
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(OdeSolution {
                samples: vec![(t0, y0.clone())],
                events: Vec::new(),
                t_end: t0,
                y_end: y0.clone(),
                n_accepted: 0,
                n_rejected: 0,
                terminated_by_event: false,
            });
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0.clone();
        let mut k1 = DVector::zeros(n);
        self.eval(t, &y, &mut k1);
        let mut h = (initial_step(self, t, &y, &k1, settings) * dir)
            .clamp(-settings.h_max, settings.h_max);

        let mut g_prev: Vec<f64> = events.iter().map(|e| (e.function)(t, &y)).collect();
        let mut hit_counts = vec![0usize; events.len()];

        let mut sol = OdeSolution {
            samples: vec![(t, y.clone())],
            events: Vec::new(),
            t_end: t,
            y_end: y.clone(),
            n_accepted: 0,
            n_rejected: 0,
            terminated_by_event: false,
        };

        let mut k: Vec<State> = (0..7).map(|_| DVector::zeros(n)).collect();
        let mut err_prev: f64 = 1.0;
        for _ in 0..settings.max_steps {
            if (t1 - t) * dir <= 0.0 {
                break;
            }
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            // stages (FSAL: k1 already holds f(t, y))
            k[0].copy_from(&k1);
            for s in 0..6 {
                let mut ys = y.clone();
                for j in 0..=s {
                    if A[s][j] != 0.0 {
                        ys.axpy(h * A[s][j], &k[j], 1.0);
                    }
                }
                let (kl, kr) = k.split_at_mut(s + 1);
                let _ = kl;
                self.eval(t + C[s + 1] * h, &ys, &mut kr[0]);
            }
            let mut y1 = y.clone();
            let mut err_vec = DVector::zeros(n);
            for j in 0..7 {
                if B5[j] != 0.0 {
                    y1.axpy(h * B5[j], &k[j], 1.0);
                }
                let d = B5[j] - B4[j];
                if d != 0.0 {
                    err_vec.axpy(h * d, &k[j], 1.0);
                }
            }
            // scaled RMS error
            let mut err2 = 0.0;
            for i in 0..n {
                let sc = settings.atol + settings.rtol * y[i].abs().max(y1[i].abs());
                let e = err_vec[i] / sc;
                err2 += e * e;
            }
            let err = (err2 / n as f64).sqrt().max(1e-30);

            if err <= 1.0 {
                // accept
                let t_new = t + h;
                let mut y_new = y1;
                if let Some(p) = &self.project {
                    p(&mut y_new);
                }
                // events on [t, t_new]
                let mut first_hit: Option<(usize, f64, State)> = None;
                for (ie, ev) in events.iter().enumerate() {
                    let g0 = g_prev[ie];
                    let g1 = (ev.function)(t_new, &y_new);
                    let crossed = match ev.direction {
                        EventDirection::Increasing => g0 < 0.0 && g1 >= 0.0,
                        EventDirection::Decreasing => g0 > 0.0 && g1 <= 0.0,
                        EventDirection::Either => g0 * g1 < 0.0,
                    } && g0 != 0.0;
                    if crossed {
                        let (te, ye) = self.locate_event(t, &y, &k[0], t_new, &y_new, h, ev)?;
                        match &first_hit {
                            Some((_, tbest, _)) if (te - *tbest) * dir >= 0.0 => {}
                            _ => first_hit = Some((ie, te, ye)),
                        }
                    }
                    g_prev[ie] = g1;
                }
                if let Some((ie, te, ye)) = first_hit {
                    sol.events.push(EventHit {
                        event_index: ie,
                        t: te,
                        state: ye.clone(),
                    });
                    hit_counts[ie] += 1;
                    if events[ie].terminal && hit_counts[ie] >= events[ie].hit_to_stop {
                        if settings.dense {
                            sol.samples.push((te, ye.clone()));
                        }
                        sol.t_end = te;
                        sol.y_end = ye;
                        sol.n_accepted += 1;
                        sol.terminated_by_event = true;
                        if !settings.dense {
                            sol.samples.push((sol.t_end, sol.y_end.clone()));
                        }
                        return Ok(sol);
                    }
                    // refresh brackets at the step end
                    for (ieg, ev) in events.iter().enumerate() {
                        g_prev[ieg] = (ev.function)(t_new, &y_new);
                    }
                }
                t = t_new;
                y = y_new;
                self.eval(t, &y, &mut k1); // FSAL seed (after projection)
                sol.n_accepted += 1;
                if settings.dense {
                    sol.samples.push((t, y.clone()));
                }
                // PI-ish controller
                let fac = 0.9 * err.powf(-0.2) * err_prev.powf(0.04);
                h = (h * fac.clamp(0.2, 6.0)).clamp(-settings.h_max, settings.h_max);
                err_prev = err;
            } else {
                sol.n_rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
            if h.abs() < 1e-15 * t.abs().max(1.0) {
                return Err(Error::MissedEvent(format!(
                    "step size underflow at t = {t:.6e}"
                )));
            }
        }
        if (t1 - t) * dir > 0.0 {
            return Err(Error::NoReturn {
                t_max: t1,
                context: format!("max_steps = {} exhausted at t = {t:.6e}", settings.max_steps),
            });
        }
        sol.t_end = t;
        sol.y_end = y.clone();
        if !settings.dense {
            sol.samples.push((t, y));
        }
        Ok(sol)
    }

    /// Bracketed event refinement: cubic Hermite localization followed by
    /// secant iterations on exact mini-steps from the bracket start.
    fn locate_event(
        &self,
        t0: f64,
        y0: &State,
        k0: &State,
        t1: f64,
        y1: &State,
        h: f64,
        ev: &EventFn,
    ) -> Result<(f64, State)> {
        let n = y0.len();
        let mut k_end = DVector::zeros(n);
        self.eval(t1, y1, &mut k_end);
        let hermite = |theta: f64| -> State {
            let t2 = theta * theta;
            let t3 = t2 * theta;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + theta;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            let mut out = y0 * h00;
            out.axpy(h * h10, k0, 1.0);
            out.axpy(h01, y1, 1.0);
            out.axpy(h * h11, &k_end, 1.0);
            out
        };
        let g = |theta: f64| (ev.function)(t0 + theta * h, &hermite(theta));
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let (mut ga, mut gb) = (g(a), g(b));
        if ga == 0.0 {
            a = 1e-12;
            ga = g(a);
        }
        if ga * gb > 0.0 {
            return Err(Error::MissedEvent(format!(
                "sign lost during refinement of event on [{t0}, {t1}]"
            )));
        }
        for _ in 0..200 {
            if (b - a).abs() < 1e-15 {
                break;
            }
            // secant with bisection fallback
            let mut m = if (gb - ga).abs() > 1e-300 {
                a - ga * (b - a) / (gb - ga)
            } else {
                0.5 * (a + b)
            };
            if !(m > a && m < b) {
                m = 0.5 * (a + b);
            }
            let gm = g(m);
            if gm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if ga * gm < 0.0 {
                b = m;
                gb = gm;
            } else {
                a = m;
                ga = gm;
            }
        }
        let theta = 0.5 * (a + b);
        // polish on the exact flow: secant on theta -> g(single_step state)
        let exact = |theta: f64| -> State {
            let mut st = self.single_step(t0, y0, theta * h);
            if let Some(p) = &self.project {
                p(&mut st);
            }
            st
        };
        let mut th0 = theta;
        let mut f0 = (ev.function)(t0 + th0 * h, &exact(th0));
        let mut th1 = theta + 1e-7 * (b - a + 1e-9);
        let mut f1 = (ev.function)(t0 + th1 * h, &exact(th1));
        for _ in 0..8 {
            if f1 == f0 || f1.abs() < 1e-15 {
                break;
            }
            let th2 = th1 - f1 * (th1 - th0) / (f1 - f0);
            if !th2.is_finite() {
                break;
            }
            th0 = th1;
            f0 = f1;
            th1 = th2.clamp(-0.1, 1.1);
            f1 = (ev.function)(t0 + th1 * h, &exact(th1));
        }
        let te = t0 + th1 * h;
        Ok((te, exact(th1)))
    }
}

fn initial_step(ode: &Ode, t0: f64, y0: &State, k1: &State, s: &OdeSettings) -> f64 {
    // standard starting-step heuristic (Hairer-style)
    let n = y0.len() as f64;
    let sc = |y: &State, i: usize| s.atol + s.rtol * y[i].abs();
    let d0 = (y0
        .iter()
        .enumerate()
        .map(|(i, v)| (v / sc(y0, i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let d1 = (k1
        .iter()
        .enumerate()
        .map(|(i, v)| (v / sc(y0, i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = {
        let mut y = y0.clone();
        y.axpy(h0, k1, 1.0);
        y
    };
    let mut k2 = DVector::zeros(y0.len());
    ode.eval(t0 + h0, &y1, &mut k2);
    let d2 = ((&k2 - k1)
        .iter()
        .enumerate()
        .map(|(i, v)| (v / sc(y0, i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, TAU};

    fn harmonic() -> Ode<'static> {
        // q'' = -q as (q, p)
        Ode::new(|_t, y: &State, dy: &mut State| {
            dy[0] = y[1];
            dy[1] = -y[0];
        })
    }

    #[test]
    fn oscillator_one_period() {
        let ode = harmonic();
        let y0 = DVector::from_row_slice(&[1.0, 0.3]);
        let sol = ode
            .solve(0.0, &y0, TAU, &OdeSettings::default(), &[])
            .unwrap();
        assert!((sol.y_end - y0).norm() < 1e-9);
    }

    #[test]
    fn backward_integration_returns() {
        let ode = harmonic();
        let y0 = DVector::from_row_slice(&[0.7, -0.2]);
        let s = OdeSettings::default();
        let fwd = ode.solve(0.0, &y0, 3.7, &s, &[]).unwrap();
        let back = ode.solve(3.7, &fwd.y_end, 0.0, &s, &[]).unwrap();
        assert!((back.y_end - y0).norm() < 1e-10);
    }

    #[test]
    fn event_location_is_tight() {
        // q(t) = cos t crosses zero at pi/2, decreasing
        let ode = harmonic();
        let y0 = DVector::from_row_slice(&[1.0, 0.0]);
        let ev = EventFn::new(|_t, y: &State| y[0], EventDirection::Decreasing, true);
        let sol = ode
            .solve(0.0, &y0, 10.0, &OdeSettings::default(), &[ev])
            .unwrap();
        assert!(sol.terminated_by_event);
        let hit = &sol.events[0];
        assert_abs_diff_eq!(hit.t, PI / 2.0, epsilon = 1e-11);
        assert!(hit.state[0].abs() < 1e-10);
    }

    #[test]
    fn nonterminal_events_collect_all_crossings() {
        let ode = harmonic();
        let y0 = DVector::from_row_slice(&[1.0, 0.0]);
        let ev = EventFn::new(|_t, y: &State| y[0], EventDirection::Either, false);
        let sol = ode
            .solve(0.0, &y0, 4.0 * TAU, &OdeSettings::default(), &[ev])
            .unwrap();
        assert_eq!(sol.events.len(), 8);
        for (k, hit) in sol.events.iter().enumerate() {
            assert_abs_diff_eq!(hit.t, PI / 2.0 + k as f64 * PI, epsilon = 1e-10);
        }
    }

    #[test]
    fn stiff_ish_accuracy_scales_with_tolerance() {
        // y' = -50(y - cos t): solution approaches a limit cycle; compare
        // two tolerances against each other
        let ode = Ode::new(|t: f64, y: &State, dy: &mut State| {
            dy[0] = -50.0 * (y[0] - t.cos());
        });
        let y0 = DVector::from_row_slice(&[0.0]);
        let loose = ode
            .solve(
                0.0,
                &y0,
                2.0,
                &OdeSettings {
                    rtol: 1e-6,
                    atol: 1e-9,
                    ..Default::default()
                },
                &[],
            )
            .unwrap();
        let tight = ode
            .solve(
                0.0,
                &y0,
                2.0,
                &OdeSettings {
                    rtol: 1e-12,
                    atol: 1e-14,
                    ..Default::default()
                },
                &[],
            )
            .unwrap();
        assert!((loose.y_end[0] - tight.y_end[0]).abs() < 1e-5);
    }
}
