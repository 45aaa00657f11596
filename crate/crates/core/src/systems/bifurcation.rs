//! Numerical bifurcation diagrams: critical values of the energy-momentum
//! map found by Newton refinement of the rank-deficiency condition
//! rank dF < 2, seeded from sampled states.

use super::{random_states, EmValue, State, System};
use crate::error::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Singular-value threshold below which dF is declared rank-deficient.
pub const CRITICAL_SV_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalKind {
    /// image of a rank-0 critical point (isolated singularity of F)
    Isolated,
    /// image of a rank-1 family (relative equilibria / one-dim branches)
    Branch,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub em: EmValue,
    pub kind: CriticalKind,
}

/// Rows (grad H, grad J) restricted to the constraint tangent space.
fn restricted_jacobian(system: &System, x: &State) -> DMatrix<f64> {
    let gh = system.grad_h(x);
    let gj = system.grad_j(x);
    let dim = system.dim();
    if !system.constrained() {
        return DMatrix::from_fn(2, dim, |r, c| if r == 0 { gh[c] } else { gj[c] });
    }
    // tangent space of {|q|^2 = 1, q.p = 0}: orthogonal complement of
    // grad c1 = (q, 0), grad c2 = (p, q)
    let mut c1 = DVector::zeros(6);
    let mut c2 = DVector::zeros(6);
    for i in 0..3 {
        c1[i] = x[i];
        c2[i] = x[3 + i];
        c2[3 + i] = x[i];
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(4);
    // Gram-Schmidt a basis of the orthogonal complement
    let mut normals = vec![c1.normalize()];
    let mut c2p = c2.clone();
    c2p -= normals[0].clone() * normals[0].dot(&c2);
    if c2p.norm() > 1e-12 {
        normals.push(c2p.normalize());
    }
    for k in 0..6 {
        let mut e = DVector::zeros(6);
        e[k] = 1.0;
        for n in &normals {
            let d = n.dot(&e);
            e -= n * d;
        }
        for b in &basis {
            let d = b.dot(&e);
            e -= b * d;
        }
        if e.norm() > 1e-8 {
            basis.push(e.normalize());
        }
        if basis.len() == 4 {
            break;
        }
    }
    DMatrix::from_fn(2, basis.len(), |r, c| {
        let g = if r == 0 { &gh } else { &gj };
        basis[c].dot(g)
    })
}

/// Smallest singular value of the restricted dF (zero iff rank < 2),
/// plus the largest (for scale).
fn singular_pair(system: &System, x: &State) -> (f64, f64) {
    let jac = restricted_jacobian(system, x);
    let svd = jac.svd(false, false);
    let mut svs: Vec<f64> = svd.singular_values.iter().copied().collect();
    svs.sort_by(f64::total_cmp);
    let min = svs.first().copied().unwrap_or(0.0);
    let max = svs.last().copied().unwrap_or(0.0);
    (min, max)
}

/// Residual of the dependency system: lambda grad H + mu grad J (+ Lagrange
/// terms for constraints), with (lambda, mu) = (cos a, sin a).
fn dependency_residual(system: &System, z: &DVector<f64>) -> DVector<f64> {
    let dim = system.dim();
    let x = DVector::from_iterator(dim, z.iter().take(dim).copied());
    let a = z[dim];
    let gh = system.grad_h(&x);
    let gj = system.grad_j(&x);
    if !system.constrained() {
        let mut r = DVector::zeros(dim);
        for i in 0..dim {
            r[i] = a.cos() * gh[i] + a.sin() * gj[i];
        }
        r
    } else {
        let (nu1, nu2) = (z[dim + 1], z[dim + 2]);
        let mut r = DVector::zeros(dim + 2);
        for i in 0..dim {
            r[i] = a.cos() * gh[i] + a.sin() * gj[i];
        }
        for i in 0..3 {
            r[i] += nu1 * x[i] + nu2 * x[3 + i];
            r[3 + i] += nu2 * x[i];
        }
        let nq2: f64 = (0..3).map(|i| x[i] * x[i]).sum();
        let qp: f64 = (0..3).map(|i| x[i] * x[3 + i]).sum();
        r[dim] = 0.5 * (nq2 - 1.0);
        r[dim + 1] = qp;
        r
    }
}

fn numerical_jacobian(
    system: &System,
    z: &DVector<f64>,
    f: &DVector<f64>,
) -> DMatrix<f64> {
    let n = z.len();
    let m = f.len();
    let mut jac = DMatrix::zeros(m, n);
    let h = 1e-6;
    for c in 0..n {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[c] += h;
        zm[c] -= h;
        let fp = dependency_residual(system, &zp);
        let fm = dependency_residual(system, &zm);
        for r in 0..m {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Gauss-Newton refinement towards the critical set; returns the refined
/// state when the restricted dF is rank-deficient there.
fn refine(system: &System, seed: &State) -> Option<(State, CriticalKind)> {
    let dim = system.dim();
    let extra = if system.constrained() { 3 } else { 1 };
    let mut z = DVector::zeros(dim + extra);
    for i in 0..dim {
        z[i] = seed[i];
    }
    // initial angle from the current gradient magnitudes: prefer killing
    // the larger combination
    let (gh, gj) = (system.grad_h(seed).norm(), system.grad_j(seed).norm());
    z[dim] = if gh > gj {
        (std::f64::consts::FRAC_PI_2 - (gj / (gh + 1e-300)).atan()).atan()
    } else {
        0.3
    };
    for _ in 0..60 {
        let f = dependency_residual(system, &z);
        if f.norm() < 1e-13 {
            break;
        }
        let jac = numerical_jacobian(system, &z, &f);
        let svd = jac.svd(true, true);
        let step = svd.solve(&f, 1e-10).ok()?;
        let damping = 1.0_f64.min(2.0 / (1.0 + step.norm()));
        z -= step * damping;
        if !z.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    let f = dependency_residual(system, &z);
    if f.norm() > 1e-9 {
        return None;
    }
    let mut x = DVector::from_iterator(dim, z.iter().take(dim).copied());
    system.project(&mut x);
    // near-rank-0 candidates get a dedicated polish on the full system
    // grad H = grad J = 0 so the singular-value gate is decisive
    if singular_pair(system, &x).1 < 1e-4 {
        polish_rank0(system, &mut x);
    }
    let (smin, smax) = singular_pair(system, &x);
    if smin > CRITICAL_SV_TOL * (1.0 + smax) {
        return None;
    }
    let kind = if smax < CRITICAL_SV_TOL {
        CriticalKind::Isolated
    } else {
        CriticalKind::Branch
    };
    Some((x, kind))
}

/// Gauss-Newton on [grad H; grad J; constraints] = 0 (rank-0 points).
fn polish_rank0(system: &System, x: &mut State) {
    let dim = system.dim();
    let residual = |x: &State| -> DVector<f64> {
        let gh = system.grad_h(x);
        let gj = system.grad_j(x);
        let extra = if system.constrained() { 2 } else { 0 };
        let mut r = DVector::zeros(2 * dim + extra);
        for i in 0..dim {
            r[i] = gh[i];
            r[dim + i] = gj[i];
        }
        if system.constrained() {
            let nq2: f64 = (0..3).map(|i| x[i] * x[i]).sum();
            let qp: f64 = (0..3).map(|i| x[i] * x[3 + i]).sum();
            r[2 * dim] = 0.5 * (nq2 - 1.0);
            r[2 * dim + 1] = qp;
        }
        r
    };
    for _ in 0..40 {
        let f = residual(x);
        if f.norm() < 1e-14 {
            break;
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(f.len(), dim);
        for c in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let fp = residual(&xp);
            let fm = residual(&xm);
            for r in 0..f.len() {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        let svd = jac.svd(true, true);
        match svd.solve(&f, 1e-10) {
            Ok(step) => *x -= step,
            Err(_) => break,
        }
    }
    system.project(x);
}

/// Critical values of F inside `window` = (j_min, j_max, h_min, h_max).
///
/// `resolution` controls the number of refinement seeds; both isolated
/// (rank-0) values and one-dimensional branches are reported, tagged. An
/// empty result is not an error.
pub fn bifurcation_diagram(
    system: &System,
    window: (f64, f64, f64, f64),
    resolution: usize,
) -> Result<Vec<BifurcationPoint>> {
    let (j0, j1, h0, h1) = window;
    let mut seeds = random_states(system, resolution.max(8), 2024);
    seeds.extend(system.action_fixed_points());
    // scaled copies reach critical circles at larger radius
    let extra: Vec<State> = seeds
        .iter()
        .map(|x| {
            let mut y = x * 1.7;
            system.project(&mut y);
            y
        })
        .collect();
    seeds.extend(extra);

    let mut found: Vec<(EmValue, CriticalKind)> = Vec::new();
    for seed in &seeds {
        if let Some((x, kind)) = refine(system, seed) {
            if let Ok(em) = system.energy_momentum(&x) {
                if em.j >= j0 && em.j <= j1 && em.h >= h0 && em.h <= h1 {
                    found.push((em, kind));
                }
            }
        }
    }
    // dedupe on a value grid; isolated beats branch on collision so that
    // rank-0 images keep their tag
    let cell = 1e-4 * ((j1 - j0).abs() + (h1 - h0).abs()).max(1e-6);
    let mut kept: Vec<BifurcationPoint> = Vec::new();
    for (em, kind) in found {
        if let Some(prev) = kept.iter_mut().find(|p| p.em.dist(&em) < cell) {
            if kind == CriticalKind::Isolated {
                prev.kind = CriticalKind::Isolated;
            }
            continue;
        }
        kept.push(BifurcationPoint { em, kind });
    }
    kept.sort_by(|a, b| (a.em.j, a.em.h).partial_cmp(&(b.em.j, b.em.h)).unwrap());
    Ok(kept)
}
