//! Catalog of the integrable systems used throughout the pipelines.
//!
//! Each system carries its energy-momentum map F = (H, J), analytic ambient
//! gradients, the (constrained) Hamiltonian vector fields of H and J, and
//! the closed-form flow of the circle action generated by J. All systems in
//! the catalog have a 2*pi-periodic J-flow.
//!
//! State layout is `[q..., p...]`: planar systems are `[q1, q2, p1, p2]`
//! (4-dimensional), spherical systems `[qx, qy, qz, px, py, pz]` restricted
//! to T*S^2 by |q| = 1, q.p = 0.

mod bifurcation;
mod sampling;

pub use bifurcation::{bifurcation_diagram, BifurcationPoint, CriticalKind};
pub use sampling::random_states;

use crate::error::{Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

pub type State = DVector<f64>;

/// Tolerance for constraint membership checks.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// A point (j, h) in the image of the energy-momentum map F = (J, H).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmValue {
    pub j: f64,
    pub h: f64,
}

impl EmValue {
    pub fn new(j: f64, h: f64) -> Self {
        EmValue { j, h }
    }

    pub fn dist(&self, other: &EmValue) -> f64 {
        ((self.j - other.j).powi(2) + (self.h - other.h).powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.j.is_finite() && self.h.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "kebab-case")]
pub enum SystemId {
    SphericalPendulum,
    ChampagneBottle,
    Resonance1m2,
    RadialScattering { v0: f64, sigma: f64 },
    FreeSphere,
    HarmonicOscillator2D,
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemId::SphericalPendulum => write!(f, "spherical-pendulum"),
            SystemId::ChampagneBottle => write!(f, "champagne-bottle"),
            SystemId::Resonance1m2 => write!(f, "resonance-1-2"),
            SystemId::RadialScattering { v0, sigma } => {
                write!(f, "radial-scattering(v0={v0},sigma={sigma})")
            }
            SystemId::FreeSphere => write!(f, "free-sphere"),
            SystemId::HarmonicOscillator2D => write!(f, "harmonic-oscillator-2d"),
        }
    }
}

impl FromStr for SystemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical-pendulum" => Ok(SystemId::SphericalPendulum),
            "champagne-bottle" => Ok(SystemId::ChampagneBottle),
            "resonance-1-2" | "resonance-1m2" | "1:-2" => Ok(SystemId::Resonance1m2),
            "radial-scattering" | "radial-bump" => Ok(SystemId::RadialScattering {
                v0: 1.0,
                sigma: 1.0,
            }),
            "free-sphere" => Ok(SystemId::FreeSphere),
            "harmonic-oscillator-2d" | "oscillator" => Ok(SystemId::HarmonicOscillator2D),
            other => Err(Error::InvalidConfig(format!("unknown system id '{other}'"))),
        }
    }
}

/// A catalogued integrable system. Immutable after construction; all
/// evaluations are pure functions, safe to share across threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct System {
    pub id: SystemId,
}

impl System {
    pub fn new(id: SystemId) -> Self {
        System { id }
    }

    pub fn spherical_pendulum() -> Self {
        Self::new(SystemId::SphericalPendulum)
    }
    pub fn champagne_bottle() -> Self {
        Self::new(SystemId::ChampagneBottle)
    }
    pub fn resonance_1m2() -> Self {
        Self::new(SystemId::Resonance1m2)
    }
    pub fn radial_scattering(v0: f64, sigma: f64) -> Self {
        Self::new(SystemId::RadialScattering { v0, sigma })
    }
    pub fn free_sphere() -> Self {
        Self::new(SystemId::FreeSphere)
    }
    pub fn harmonic_oscillator() -> Self {
        Self::new(SystemId::HarmonicOscillator2D)
    }

    /// Phase-space dimension (ambient for constrained systems).
    pub fn dim(&self) -> usize {
        match self.id {
            SystemId::SphericalPendulum | SystemId::FreeSphere => 6,
            _ => 4,
        }
    }

    pub fn constrained(&self) -> bool {
        matches!(self.id, SystemId::SphericalPendulum | SystemId::FreeSphere)
    }

    /// Period of the circle action generated by J.
    pub fn circle_period(&self) -> f64 {
        TAU
    }

    fn split<'a>(&self, x: &'a State) -> (&'a [f64], &'a [f64]) {
        let n = self.dim() / 2;
        (&x.as_slice()[..n], &x.as_slice()[n..])
    }

    pub fn hamiltonian(&self, x: &State) -> f64 {
        let (q, p) = self.split(x);
        let kin = 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        match self.id {
            SystemId::SphericalPendulum => kin + q[2],
            SystemId::FreeSphere => kin,
            SystemId::ChampagneBottle => {
                let r2 = q[0] * q[0] + q[1] * q[1];
                kin + r2 * r2 - r2
            }
            SystemId::HarmonicOscillator2D => {
                kin + 0.5 * (q[0] * q[0] + q[1] * q[1])
            }
            SystemId::RadialScattering { v0, sigma } => {
                let r2 = q[0] * q[0] + q[1] * q[1];
                kin + v0 * (-r2 / (sigma * sigma)).exp()
            }
            SystemId::Resonance1m2 => {
                let (q1, q2, p1, p2) = (q[0], q[1], p[0], p[1]);
                let r = 0.5 * (q1 * q1 + p1 * p1) + (q2 * q2 + p2 * p2);
                2.0 * q1 * p1 * q2 + (q1 * q1 - p1 * p1) * p2 + r * r
            }
        }
    }

    pub fn momentum(&self, x: &State) -> f64 {
        let (q, p) = self.split(x);
        match self.id {
            SystemId::Resonance1m2 => {
                let (q1, q2, p1, p2) = (q[0], q[1], p[0], p[1]);
                0.5 * (q1 * q1 + p1 * p1) - (q2 * q2 + p2 * p2)
            }
            // angular momentum about the vertical axis
            _ => q[0] * p[1] - q[1] * p[0],
        }
    }

    /// Ambient gradient of H, analytic.
    pub fn grad_h(&self, x: &State) -> State {
        let (q, p) = self.split(x);
        let n = self.dim() / 2;
        let mut g = DVector::zeros(self.dim());
        for i in 0..n {
            g[n + i] = p[i];
        }
        match self.id {
            SystemId::SphericalPendulum => g[2] = 1.0,
            SystemId::FreeSphere => {}
            SystemId::ChampagneBottle => {
                let r2 = q[0] * q[0] + q[1] * q[1];
                let dv = 4.0 * r2 - 2.0; // V'(r)/r with V = r^4 - r^2
                g[0] = dv * q[0];
                g[1] = dv * q[1];
            }
            SystemId::HarmonicOscillator2D => {
                g[0] = q[0];
                g[1] = q[1];
            }
            SystemId::RadialScattering { v0, sigma } => {
                let s2 = sigma * sigma;
                let r2 = q[0] * q[0] + q[1] * q[1];
                let du = -2.0 * v0 / s2 * (-r2 / s2).exp(); // dU/dq_i = du * q_i
                g[0] = du * q[0];
                g[1] = du * q[1];
            }
            SystemId::Resonance1m2 => {
                let (q1, q2, p1, p2) = (q[0], q[1], p[0], p[1]);
                let r = 0.5 * (q1 * q1 + p1 * p1) + (q2 * q2 + p2 * p2);
                g[0] = 2.0 * p1 * q2 + 2.0 * q1 * p2 + 2.0 * r * q1;
                g[1] = 2.0 * q1 * p1 + 4.0 * r * q2;
                g[2] = 2.0 * q1 * q2 - 2.0 * p1 * p2 + 2.0 * r * p1;
                g[3] = q1 * q1 - p1 * p1 + 4.0 * r * p2;
            }
        }
        g
    }

    /// Ambient gradient of J, analytic.
    pub fn grad_j(&self, x: &State) -> State {
        let (q, p) = self.split(x);
        let n = self.dim() / 2;
        let mut g = DVector::zeros(self.dim());
        match self.id {
            SystemId::Resonance1m2 => {
                g[0] = q[0];
                g[1] = -2.0 * q[1];
                g[2] = p[0];
                g[3] = -2.0 * p[1];
            }
            _ => {
                g[0] = p[1];
                g[1] = -p[0];
                g[n] = -q[1];
                g[n + 1] = q[0];
            }
        }
        g
    }

    /// Canonical Poisson bracket {H, J} evaluated through the analytic
    /// gradients. Vanishes identically for every catalog system.
    pub fn poisson_bracket(&self, x: &State) -> f64 {
        let n = self.dim() / 2;
        let gh = self.grad_h(x);
        let gj = self.grad_j(x);
        (0..n)
            .map(|i| gh[i] * gj[n + i] - gh[n + i] * gj[i])
            .sum()
    }

    /// Hamiltonian vector field of H. For constrained systems this is the
    /// field of the constrained dynamics on T*S^2.
    pub fn h_field(&self, x: &State, out: &mut State) {
        let (q, p) = self.split(x);
        let n = self.dim() / 2;
        match self.id {
            SystemId::SphericalPendulum | SystemId::FreeSphere => {
                // q' = p, p' = force + lambda q with lambda = -|p|^2 - q.force
                let fz = if self.id == SystemId::SphericalPendulum {
                    -1.0
                } else {
                    0.0
                };
                let p2 = p.iter().map(|v| v * v).sum::<f64>();
                let lambda = -p2 - q[2] * fz;
                for i in 0..3 {
                    out[i] = p[i];
                    out[3 + i] = lambda * q[i];
                }
                out[5] += fz;
            }
            _ => {
                let gh = self.grad_h(x);
                for i in 0..n {
                    out[i] = gh[n + i];
                    out[n + i] = -gh[i];
                }
            }
        }
    }

    /// Hamiltonian vector field of J (the circle-action generator).
    pub fn j_field(&self, x: &State, out: &mut State) {
        let (q, p) = self.split(x);
        let n = self.dim() / 2;
        match self.id {
            SystemId::Resonance1m2 => {
                out[0] = p[0];
                out[1] = -2.0 * p[1];
                out[2] = -q[0];
                out[3] = 2.0 * q[1];
            }
            _ => {
                out.fill(0.0);
                out[0] = -q[1];
                out[1] = q[0];
                out[n] = -p[1];
                out[n + 1] = p[0];
            }
        }
    }

    /// Closed-form J-flow by parameter `angle`.
    pub fn j_flow(&self, x: &State, angle: f64) -> State {
        let mut y = x.clone();
        let (c, s) = (angle.cos(), angle.sin());
        match self.id {
            SystemId::Resonance1m2 => {
                // z = p1 + i q1 -> e^{i t} z ; w = p2 + i q2 -> e^{-2 i t} w
                let (q1, q2, p1, p2) = (x[0], x[1], x[2], x[3]);
                y[2] = p1 * c - q1 * s;
                y[0] = p1 * s + q1 * c;
                let (c2, s2) = ((2.0 * angle).cos(), (2.0 * angle).sin());
                y[3] = p2 * c2 + q2 * s2;
                y[1] = -p2 * s2 + q2 * c2;
            }
            _ => {
                let n = self.dim() / 2;
                y[0] = c * x[0] - s * x[1];
                y[1] = s * x[0] + c * x[1];
                y[n] = c * x[n] - s * x[n + 1];
                y[n + 1] = s * x[n] + c * x[n + 1];
            }
        }
        y
    }

    /// Project a state onto the constraint manifold (no-op for planar systems).
    pub fn project(&self, x: &mut State) {
        if !self.constrained() {
            return;
        }
        let nq = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        for i in 0..3 {
            x[i] /= nq;
        }
        let qp = x[0] * x[3] + x[1] * x[4] + x[2] * x[5];
        for i in 0..3 {
            x[3 + i] -= qp * x[i];
        }
    }

    pub fn constraint_residual(&self, x: &State) -> f64 {
        if !self.constrained() {
            return 0.0;
        }
        let nq2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let qp = x[0] * x[3] + x[1] * x[4] + x[2] * x[5];
        (nq2 - 1.0).abs().max(qp.abs())
    }

    pub fn is_admissible(&self, x: &State) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && self.constraint_residual(x) < CONSTRAINT_TOL
    }

    /// The energy-momentum map F = (J, H). Rejects inadmissible states.
    pub fn energy_momentum(&self, x: &State) -> Result<EmValue> {
        if !self.is_admissible(x) {
            return Err(Error::RejectedInput(format!(
                "state violates constraints of {} (residual {:.2e})",
                self.id,
                self.constraint_residual(x)
            )));
        }
        Ok(EmValue::new(self.momentum(x), self.hamiltonian(x)))
    }

    /// Max-norm discrepancy between analytic gradients of H and J and a
    /// central finite difference with the given step.
    pub fn gradient_check(&self, x: &State, step: f64) -> Result<f64> {
        if step <= 0.0 {
            return Err(Error::RejectedInput("step must be positive".into()));
        }
        let mut worst = 0.0f64;
        let gh = self.grad_h(x);
        let gj = self.grad_j(x);
        for i in 0..self.dim() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            let fd_h = (self.hamiltonian(&xp) - self.hamiltonian(&xm)) / (2.0 * step);
            let fd_j = (self.momentum(&xp) - self.momentum(&xm)) / (2.0 * step);
            worst = worst.max((fd_h - gh[i]).abs()).max((fd_j - gj[i]).abs());
        }
        Ok(worst)
    }

    /// Fixed points of the circle action, closed form.
    pub fn action_fixed_points(&self) -> Vec<State> {
        match self.id {
            SystemId::SphericalPendulum | SystemId::FreeSphere => {
                let mut top = DVector::zeros(6);
                top[2] = 1.0;
                let mut bottom = DVector::zeros(6);
                bottom[2] = -1.0;
                vec![top, bottom]
            }
            _ => vec![DVector::zeros(4)],
        }
    }

    /// Isotropy strata of the circle action with finite non-trivial isotropy:
    /// (order, parametrized image curve in the (j, h) plane, witness state).
    /// Only the 1:(-2) resonance has one (Z_2 on q1 = p1 = 0, w != 0).
    pub fn isotropy_strata(&self) -> Vec<IsotropyStratum> {
        match self.id {
            SystemId::Resonance1m2 => vec![IsotropyStratum {
                order: 2,
                describe: "q1 = p1 = 0, w != 0 (Z_2 under (e^{it}z, e^{-2it}w))",
            }],
            _ => Vec::new(),
        }
    }

    /// For the 1:(-2) resonance: the witness state with Z_2 isotropy over
    /// (j, j^2), j < 0 — the point z = 0, |w|^2 = -j. None for other systems
    /// or when the value is off the stratum image.
    pub fn isotropy_witness(&self, em: &EmValue) -> Option<State> {
        if self.id != SystemId::Resonance1m2 || em.j >= 0.0 {
            return None;
        }
        if (em.h - em.j * em.j).abs() > 1e-9 * (1.0 + em.j * em.j) {
            return None;
        }
        let mut x = DVector::zeros(4);
        x[3] = (-em.j).sqrt(); // p2 = |w|
        Some(x)
    }

    /// Critical values of F from the closed-form relative-equilibrium
    /// parametrizations; used for loop validation, figures and as the oracle
    /// for the numerical bifurcation search. Sampled polylines, each tagged.
    pub fn critical_value_curves(&self) -> Vec<(CriticalKind, Vec<EmValue>)> {
        let mut out = Vec::new();
        match self.id {
            SystemId::SphericalPendulum => {
                out.push((CriticalKind::Isolated, vec![EmValue::new(0.0, 1.0)]));
                out.push((CriticalKind::Isolated, vec![EmValue::new(0.0, -1.0)]));
                // circular orbits: z in (-1, 0), omega^2 = -1/z
                let mut branch = Vec::new();
                for k in 0..=400 {
                    let z = -1.0 + 0.999_f64 * k as f64 / 400.0;
                    let omega = (-1.0 / z).sqrt();
                    let j = (1.0 - z * z) * omega;
                    let h = 0.5 * (1.0 - z * z) * omega * omega + z;
                    branch.push(EmValue::new(j, h));
                }
                let mirrored: Vec<EmValue> = branch
                    .iter()
                    .rev()
                    .map(|em| EmValue::new(-em.j, em.h))
                    .collect();
                out.push((CriticalKind::Branch, mirrored));
                out.push((CriticalKind::Branch, branch));
            }
            SystemId::FreeSphere => {
                // great-circle rotations: h = j^2 / 2
                let branch: Vec<EmValue> = (0..=200)
                    .map(|k| {
                        let j = -3.0 + 6.0 * k as f64 / 200.0;
                        EmValue::new(j, 0.5 * j * j)
                    })
                    .collect();
                out.push((CriticalKind::Branch, branch));
            }
            SystemId::ChampagneBottle => {
                out.push((CriticalKind::Isolated, vec![EmValue::new(0.0, 0.0)]));
                // circular orbits: r >= 1/sqrt(2), j^2 = 4 r^6 - 2 r^4
                let mut branch = Vec::new();
                for k in 0..=400 {
                    let r = (0.5_f64).sqrt() + 1.2 * k as f64 / 400.0;
                    let j2 = 4.0 * r.powi(6) - 2.0 * r.powi(4);
                    let j = j2.max(0.0).sqrt();
                    let h = 3.0 * r.powi(4) - 2.0 * r * r;
                    branch.push(EmValue::new(j, h));
                }
                let mirrored: Vec<EmValue> = branch
                    .iter()
                    .rev()
                    .map(|em| EmValue::new(-em.j, em.h))
                    .collect();
                out.push((CriticalKind::Branch, mirrored));
                out.push((CriticalKind::Branch, branch));
            }
            SystemId::HarmonicOscillator2D => {
                out.push((CriticalKind::Isolated, vec![EmValue::new(0.0, 0.0)]));
                for sign in [-1.0, 1.0] {
                    let branch: Vec<EmValue> = (0..=200)
                        .map(|k| {
                            let j = sign * 4.0 * k as f64 / 200.0;
                            EmValue::new(j, j.abs())
                        })
                        .collect();
                    out.push((CriticalKind::Branch, branch));
                }
            }
            SystemId::RadialScattering { v0, .. } => {
                out.push((CriticalKind::Isolated, vec![EmValue::new(0.0, v0)]));
            }
            SystemId::Resonance1m2 => {
                out.push((CriticalKind::Isolated, vec![EmValue::new(0.0, 0.0)]));
                // Z_2 stratum image: (j, j^2) for j < 0. Hyperbolic (curled
                // torus) for -1/4 < j < 0, elliptic boundary for j <= -1/4.
                let parab: Vec<EmValue> = (1..=600)
                    .map(|k| {
                        let j = -2.4 * k as f64 / 600.0;
                        EmValue::new(j, j * j)
                    })
                    .collect();
                out.push((CriticalKind::Branch, parab));
                // elliptic relative equilibria: tau = |w| in (1/4, 1/2)
                let mut branch = Vec::new();
                for k in 1..400 {
                    let tau = 0.25 + 0.25 * k as f64 / 400.0;
                    let rho2 = 4.0 * tau * tau * (2.0 * tau - 1.0) / (1.0 - 4.0 * tau);
                    if !(rho2.is_finite() && rho2 >= 0.0) {
                        continue;
                    }
                    let j = 0.5 * rho2 - tau * tau;
                    let r = 0.5 * rho2 + tau * tau;
                    let h = -rho2 * tau + r * r;
                    branch.push(EmValue::new(j, h));
                }
                branch.reverse(); // ascending j
                out.push((CriticalKind::Branch, branch));
            }
        }
        out
    }

    /// Distance from `em` to the closed-form critical set (polyline distance).
    pub fn distance_to_critical(&self, em: &EmValue) -> f64 {
        let mut best = f64::INFINITY;
        for (_, curve) in self.critical_value_curves() {
            for pt in &curve {
                best = best.min(em.dist(pt));
            }
            for seg in curve.windows(2) {
                best = best.min(dist_to_segment(em, &seg[0], &seg[1]));
            }
        }
        best
    }

    /// The hyperbolic segment of the 1:(-2) critical parabola, if any:
    /// (j, j^2) with -1/4 < j < 0.
    pub fn hyperbolic_branch_window(&self) -> Option<(f64, f64)> {
        match self.id {
            SystemId::Resonance1m2 => Some((-0.25, 0.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IsotropyStratum {
    pub order: u32,
    pub describe: &'static str,
}

pub(crate) fn dist_to_segment(p: &EmValue, a: &EmValue, b: &EmValue) -> f64 {
    let (abx, aby) = (b.j - a.j, b.h - a.h);
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.j - a.j) * abx + (p.h - a.h) * aby) / len2).clamp(0.0, 1.0);
    let proj = EmValue::new(a.j + t * abx, a.h + t * aby);
    p.dist(&proj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn state(v: &[f64]) -> State {
        DVector::from_row_slice(v)
    }

    #[test]
    fn pendulum_equilibrium_values() {
        let sys = System::spherical_pendulum();
        let bottom = state(&[0.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        let top = state(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let em_b = sys.energy_momentum(&bottom).unwrap();
        let em_t = sys.energy_momentum(&top).unwrap();
        assert_eq!((em_b.j, em_b.h), (0.0, -1.0));
        assert_eq!((em_t.j, em_t.h), (0.0, 1.0));
    }

    #[test]
    fn resonance_origin_is_zero() {
        let sys = System::resonance_1m2();
        let em = sys.energy_momentum(&state(&[0.0; 4])).unwrap();
        assert_eq!((em.j, em.h), (0.0, 0.0));
    }

    #[test]
    fn rejects_off_sphere_states() {
        let sys = System::spherical_pendulum();
        let bad = state(&[0.0, 0.0, 1.5, 0.0, 0.0, 0.0]);
        assert!(sys.energy_momentum(&bad).is_err());
    }

    #[test]
    fn gradient_check_pendulum_random() {
        let sys = System::spherical_pendulum();
        for x in random_states(&sys, 8, 7) {
            assert!(sys.gradient_check(&x, 1e-5).unwrap() < 1e-7);
        }
    }

    #[test]
    fn gradient_check_oscillator_tight() {
        let sys = System::harmonic_oscillator();
        for x in random_states(&sys, 8, 3) {
            assert!(sys.gradient_check(&x, 1e-5).unwrap() < 1e-9);
        }
    }

    #[test]
    fn gradient_check_resonance_origin_exact() {
        let sys = System::resonance_1m2();
        let err = sys.gradient_check(&state(&[0.0; 4]), 1e-3).unwrap();
        assert!(err < 1e-12);
    }

    #[test]
    fn poisson_bracket_vanishes() {
        for sys in [
            System::spherical_pendulum(),
            System::champagne_bottle(),
            System::resonance_1m2(),
            System::radial_scattering(1.0, 1.0),
            System::free_sphere(),
            System::harmonic_oscillator(),
        ] {
            for x in random_states(&sys, 25, 11) {
                assert!(
                    sys.poisson_bracket(&x).abs() < 1e-9,
                    "{{H,J}} != 0 for {}",
                    sys.id
                );
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let sys = System::spherical_pendulum();
        for x in random_states(&sys, 10, 23) {
            let mut y = x.clone();
            // perturb off the manifold, project back twice
            y[0] += 0.3;
            y[4] += 0.2;
            sys.project(&mut y);
            let em1 = sys.energy_momentum(&y).unwrap();
            let mut z = y.clone();
            sys.project(&mut z);
            let em2 = sys.energy_momentum(&z).unwrap();
            assert_abs_diff_eq!(em1.j, em2.j, epsilon = 1e-12);
            assert_abs_diff_eq!(em1.h, em2.h, epsilon = 1e-12);
            assert!((&y - &z).norm() < 1e-12);
        }
    }

    #[test]
    fn resonance_j_flow_closed_form() {
        // (e^{it} z, e^{-2it} w) with z = p1 + i q1, w = p2 + i q2
        let sys = System::resonance_1m2();
        let x = state(&[0.3, -0.2, 0.7, 0.4]);
        let z = (x[2], x[0]);
        let w = (x[3], x[1]);
        for k in 0..=24 {
            let t = TAU * k as f64 / 24.0;
            let y = sys.j_flow(&x, t);
            let (c, s) = (t.cos(), t.sin());
            // e^{it}(z_re + i z_im)
            assert_abs_diff_eq!(y[2], z.0 * c - z.1 * s, epsilon = 1e-10);
            assert_abs_diff_eq!(y[0], z.0 * s + z.1 * c, epsilon = 1e-10);
            let (c2, s2) = ((2.0 * t).cos(), (2.0 * t).sin());
            assert_abs_diff_eq!(y[3], w.0 * c2 + w.1 * s2, epsilon = 1e-10);
            assert_abs_diff_eq!(y[1], -w.0 * s2 + w.1 * c2, epsilon = 1e-10);
        }
        // 2 pi periodic
        let y = sys.j_flow(&x, TAU);
        assert!((&y - &x).norm() < 1e-12);
    }

    #[test]
    fn j_flow_preserves_f() {
        for sys in [
            System::spherical_pendulum(),
            System::champagne_bottle(),
            System::resonance_1m2(),
        ] {
            for x in random_states(&sys, 5, 41) {
                let em0 = sys.energy_momentum(&x).unwrap();
                let y = sys.j_flow(&x, 1.234);
                let em1 = sys.energy_momentum(&y).unwrap();
                assert_abs_diff_eq!(em0.h, em1.h, epsilon = 1e-12);
                assert_abs_diff_eq!(em0.j, em1.j, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn j_field_matches_flow_derivative() {
        for sys in [System::resonance_1m2(), System::champagne_bottle()] {
            for x in random_states(&sys, 4, 5) {
                let mut f = DVector::zeros(sys.dim());
                sys.j_field(&x, &mut f);
                let dt = 1e-6;
                let fd = (sys.j_flow(&x, dt) - sys.j_flow(&x, -dt)) / (2.0 * dt);
                assert!((&f - &fd).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn system_id_parsing() {
        assert_eq!(
            "spherical-pendulum".parse::<SystemId>().unwrap(),
            SystemId::SphericalPendulum
        );
        assert!("no-such-system".parse::<SystemId>().is_err());
    }
}
