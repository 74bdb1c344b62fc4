//! Closed-form and brute-force reference solutions.
//!
//! Nothing in here calls into the solvers; only grid and state types are shared.

use crate::grid::Grid;
use crate::state::KineticState;

/// Spatially homogeneous Ornstein-Uhlenbeck relaxation with frozen fluid velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUParams {
    pub mean0: f64,
    /// Must be positive.
    pub var0: f64,
    pub u_star: f64,
    pub kappa_rho: f64,
}

/// Mean and variance at time `t` of `f_t = k ((v - u*) f + f_v)_v`.
pub fn ou_moments(p: &OUParams, t: f64) -> (f64, f64) {
    let decay = (-p.kappa_rho * t).exp();
    let mean = p.u_star + (p.mean0 - p.u_star) * decay;
    let var = 1.0 + (p.var0 - 1.0) * decay * decay;
    (mean, var)
}

/// `f0(x - v t, v)` by periodic linear interpolation between cell centers.
pub fn free_transport_exact(f0: &KineticState, t: f64, grid: &Grid) -> KineticState {
    let nx = grid.nx();
    let nv = grid.nv();
    let mut out = KineticState::zeros(grid);
    for (j, &v) in grid.v_centers().iter().enumerate() {
        // displacement in cells, reduced mod nx
        let mut s = (v * t / grid.dx()).rem_euclid(nx as f64);
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            s = r;
        }
        let shift = s.floor();
        let theta = s - shift;
        let k = shift as usize % nx;
        for i in 0..nx {
            // source point x_i - s dx lies between cells i-k-1 and i-k
            let a = (i + nx - k) % nx;
            let b = (a + nx - 1) % nx;
            let fa = f0.f[a * nv + j];
            let fb = f0.f[b * nv + j];
            out.f[i * nv + j] = if theta == 0.0 {
                fa
            } else {
                (1.0 - theta) * fa + theta * fb
            };
        }
    }
    out
}

fn unit_gaussian(n: f64, u: f64, v: f64) -> f64 {
    let d = v - u;
    n * (-0.5 * d * d).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `|| n1 N(u1, 1) - n2 N(u2, 1) ||_{L^1}` by quadrature of the absolute difference.
pub fn gaussian_l1_distance(n1: f64, u1: f64, n2: f64, u2: f64) -> f64 {
    let lo = u1.min(u2) - 40.0;
    let hi = u1.max(u2) + 40.0;
    let g = |v: f64| (unit_gaussian(n1, u1, v) - unit_gaussian(n2, u2, v)).abs();
    // split at the kinks so each piece is smooth
    let mut cuts = vec![lo, u1.min(u2), 0.5 * (u1 + u2), u1.max(u2), hi];
    if n1 > 0.0 && n2 > 0.0 && u1 != u2 {
        // crossing point of the two weighted Gaussians
        let c = 0.5 * (u1 + u2) + (n1 / n2).ln() / (u1 - u2);
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).map(|w| integrate(g, w[0], w[1], 1e-15)).sum()
}
