//! Quadrature rules shared by the kernel checks and the semi-norm tails.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Gauss-Legendre on `[a, b]`.
pub fn gauss_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_legendre(n).into_iter().map(|(x, w)| (mid + half * x, half * w)).collect()
}

/// Points and weights on the unit sphere `S^{d-1}`; `n` controls resolution.
///
/// d=1: the two points; d=2: `n` equispaced angles; d=3: Gauss in `cos(theta)` times `2n` angles.
pub fn sphere_rule(d: usize, n: usize) -> Vec<([f64; 3], f64)> {
    match d {
        1 => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
        2 => (0..n)
            .map(|k| {
                let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                ([th.cos(), th.sin(), 0.0], 2.0 * PI / n as f64)
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for (z, wz) in gauss_legendre(n) {
                let rho = (1.0 - z * z).sqrt();
                for k in 0..2 * n {
                    let ph = PI * (k as f64 + 0.5) / n as f64;
                    out.push(([rho * ph.cos(), rho * ph.sin(), z], wz * PI / n as f64));
                }
            }
            out
        }
    }
}

/// Cone decomposition of the exterior of the box `[lo, hi]` (origin inside):
/// every exterior point is `u z` with `u > 1` and `z` on one face.
/// Calls `f(z, weight)` with `weight = |z.n| dA` for face quadrature points.
fn for_face_points(lo: &[f64], hi: &[f64], base: &[(f64, f64)], mut f: impl FnMut(&[f64; 3], f64)) {
    let d = lo.len();
    let n = base.len();
    let scaled = |a: f64, b: f64| -> Vec<(f64, f64)> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        base.iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
    };
    for axis in 0..d {
        for &bound in &[lo[axis], hi[axis]] {
            let others: Vec<usize> = (0..d).filter(|&a| a != axis).collect();
            let rules: Vec<Vec<(f64, f64)>> = others.iter().map(|&a| scaled(lo[a], hi[a])).collect();
            let count = n.pow(others.len() as u32);
            for flat in 0..count {
                let mut z = [0.0; 3];
                z[axis] = bound;
                let mut w = bound.abs();
                let mut rest = flat;
                for (r, &a) in rules.iter().zip(&others) {
                    let (x, wx) = r[rest % n];
                    rest /= n;
                    z[a] = x;
                    w *= wx;
                }
                f(&z, w);
            }
        }
    }
}

/// `int_{R^d minus box} g(y) dy` for `g` decaying at least like `|y|^{-d-1}`.
pub fn box_exterior_integral(lo: &[f64], hi: &[f64], n: usize, g: impl Fn(&[f64]) -> f64) -> f64 {
    let d = lo.len();
    let radial = gauss_on(0.0, 1.0, n);
    let base = gauss_legendre(n);
    let mut total = 0.0;
    for_face_points(lo, hi, &base, |z, w| {
        // u = 1/tau, du u^{d-1} = tau^{-d-1} dtau
        let mut acc = 0.0;
        for &(tau, wt) in &radial {
            let mut y = [0.0; 3];
            for a in 0..d {
                y[a] = z[a] / tau;
            }
            acc += wt * g(&y[..d]) * tau.powi(-(d as i32) - 1);
        }
        total += w * acc;
    });
    total
}

/// `int_{R^d minus box} |y|^{-d-beta} phi(y/|y|) dy`, radial part done exactly.
pub fn box_exterior_homogeneous(lo: &[f64], hi: &[f64], beta: f64, n: usize, phi: impl Fn(&[f64]) -> f64) -> f64 {
    box_exterior_homogeneous_with(&gauss_legendre(n), lo, hi, beta, phi)
}

/// As [`box_exterior_homogeneous`] with a precomputed Gauss-Legendre rule on `[-1,1]`.
pub fn box_exterior_homogeneous_with(
    base: &[(f64, f64)],
    lo: &[f64],
    hi: &[f64],
    beta: f64,
    phi: impl Fn(&[f64]) -> f64,
) -> f64 {
    let d = lo.len();
    let mut total = 0.0;
    for_face_points(lo, hi, base, |z, w| {
        let r = z[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut e = [0.0; 3];
        for a in 0..d {
            e[a] = z[a] / r;
        }
        total += w * r.powf(-(d as f64) - beta) * phi(&e[..d]) / beta;
    });
    total
}
