//! Analytic test-field families.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{to_spatial, GridSpec, SpectralField, VectorField};
use crate::error::{param, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Family {
    /// `a exp(-|x-c|^2 / (2 sigma^2))`.
    GaussianBump { sigma: f64, amplitude: Vec<f64>, center: Vec<f64> },
    /// Sum of `count` Gaussian bumps with seeded widths, centers and amplitudes,
    /// each multiplied by a random affine polynomial.
    BumpMixture { seed: u64, count: usize, sigma_min: f64, sigma_max: f64, center_radius: f64 },
    /// `(W x + b) chi(|x|)` with `chi = 1` for `|x| <= inner`, `0` past `outer`.
    WindowedAffine { matrix: Vec<f64>, offset: Vec<f64>, inner: f64, outer: f64 },
    /// Zero-mean real trigonometric polynomial with modes `0 < |k|_inf <= kmax`.
    BandlimitedRandom { seed: u64, kmax: usize },
    /// `e x^alpha exp(-|x|^2 / (2 sigma^2))` with direction `e`.
    WindowedMonomial { exponents: Vec<u32>, direction: Vec<f64>, sigma: f64 },
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, `C^inf` in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Radial cutoff: 1 up to `inner`, 0 beyond `outer`.
pub fn radial_window(r: f64, inner: f64, outer: f64) -> f64 {
    1.0 - smooth_step((r - inner) / (outer - inner))
}

impl Family {
    pub fn gaussian(sigma: f64, amplitude: Vec<f64>) -> Self {
        let d = amplitude.len();
        Family::GaussianBump { sigma, amplitude, center: vec![0.0; d] }
    }

    /// Skew part of `matrix` is what survives in the projected semi-norm.
    pub fn windowed_skew_affine(d: usize, seed: u64, inner: f64, outer: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            for j in i + 1..d {
                let v: f64 = rng.sample(StandardNormal);
                w[i * d + j] = v;
                w[j * d + i] = -v;
            }
        }
        let offset = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        Family::WindowedAffine { matrix: w, offset, inner, outer }
    }

    pub fn windowed_symmetric_affine(d: usize, seed: u64, inner: f64, outer: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v: f64 = rng.sample(StandardNormal);
                w[i * d + j] = v;
                w[j * d + i] = v;
            }
        }
        Family::WindowedAffine { matrix: w, offset: vec![0.0; d], inner, outer }
    }

    /// Builds a family from its name and a flat parameter map, filling defaults.
    pub fn from_name(name: &str, d: usize, seed: u64, kv: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str, default: f64| kv.get(k).copied().unwrap_or(default);
        Ok(match name {
            "gaussian_bump" | "gaussian" => {
                let mut amplitude = vec![0.0; d];
                amplitude[0] = get("amplitude", 1.0);
                Family::GaussianBump { sigma: get("sigma", 1.0), amplitude, center: vec![0.0; d] }
            }
            "bump_mixture" | "bumps" => Family::BumpMixture {
                seed,
                count: get("count", 3.0) as usize,
                sigma_min: get("sigma_min", 0.5),
                sigma_max: get("sigma_max", 0.7),
                center_radius: get("center_radius", 0.5),
            },
            "windowed_skew_affine" => {
                Family::windowed_skew_affine(d, seed, get("inner", 1.0), get("outer", 2.0))
            }
            "windowed_symmetric_affine" => {
                Family::windowed_symmetric_affine(d, seed, get("inner", 1.0), get("outer", 2.0))
            }
            "bandlimited_random" | "bandlimited" => {
                Family::BandlimitedRandom { seed, kmax: get("kmax", 6.0) as usize }
            }
            "windowed_monomial" => {
                let mut exponents = vec![0; d];
                exponents[0] = get("degree", 1.0) as u32;
                let mut direction = vec![0.0; d];
                direction[0] = 1.0;
                Family::WindowedMonomial { exponents, direction, sigma: get("sigma", 1.0) }
            }
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::GaussianBump { .. } => "gaussian_bump",
            Family::BumpMixture { .. } => "bump_mixture",
            Family::WindowedAffine { .. } => "windowed_affine",
            Family::BandlimitedRandom { .. } => "bandlimited_random",
            Family::WindowedMonomial { .. } => "windowed_monomial",
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Family::BandlimitedRandom { .. })
    }

    pub fn descriptor(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| self.name().to_string())
    }
}

fn check_len(what: &str, v: &[f64], d: usize) -> Result<()> {
    if v.len() == d {
        Ok(())
    } else {
        param(format!("{what} has length {}, expected {d}", v.len()))
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

struct Bump {
    sigma: f64,
    center: Vec<f64>,
    amp: Vec<f64>,
    slope: Vec<f64>,
}

fn mixture(d: usize, seed: u64, count: usize, smin: f64, smax: f64, radius: f64) -> Vec<Bump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let sigma = smin + (smax - smin) * rng.gen::<f64>();
            let center = loop {
                let c: Vec<f64> = (0..d).map(|_| radius * (2.0 * rng.gen::<f64>() - 1.0)).collect();
                if c.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                    break c;
                }
            };
            let amp = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let slope = (0..d * d).map(|_| rng.sample::<f64, _>(StandardNormal) / sigma).collect();
            Bump { sigma, center, amp, slope }
        })
        .collect()
}

pub fn sample_family(family: &Family, grid: &GridSpec) -> Result<VectorField> {
    let d = grid.d();
    let field = match family {
        Family::GaussianBump { sigma, amplitude, center } => {
            check_len("amplitude", amplitude, d)?;
            check_len("center", center, d)?;
            let s2 = 2.0 * sigma * sigma;
            VectorField::from_fn(*grid, d, |x, o| {
                let g = (-dist2(x, center) / s2).exp();
                for j in 0..d {
                    o[j] = amplitude[j] * g;
                }
            })?
        }
        Family::BumpMixture { seed, count, sigma_min, sigma_max, center_radius } => {
            if *count == 0 || !(*sigma_min > 0.0 && sigma_max >= sigma_min) {
                return param("bump mixture needs count >= 1 and 0 < sigma_min <= sigma_max");
            }
            let bumps = mixture(d, *seed, *count, *sigma_min, *sigma_max, *center_radius);
            VectorField::from_fn(*grid, d, |x, o| {
                for b in &bumps {
                    let g = (-dist2(x, &b.center) / (2.0 * b.sigma * b.sigma)).exp();
                    for j in 0..d {
                        let lin: f64 = (0..d).map(|k| b.slope[j * d + k] * (x[k] - b.center[k])).sum();
                        o[j] += (b.amp[j] + lin) * g;
                    }
                }
            })?
        }
        Family::WindowedAffine { matrix, offset, inner, outer } => {
            check_len("offset", offset, d)?;
            if matrix.len() != d * d {
                return param("affine matrix must have d*d entries");
            }
            if !(*inner >= 0.0 && outer > inner) {
                return param("window radii must satisfy 0 <= inner < outer");
            }
            VectorField::from_fn(*grid, d, |x, o| {
                let w = radial_window(dist2(x, &[0.0; 3][..d]).sqrt(), *inner, *outer);
                for j in 0..d {
                    let v: f64 = (0..d).map(|k| matrix[j * d + k] * x[k]).sum::<f64>() + offset[j];
                    o[j] = v * w;
                }
            })?
        }
        Family::WindowedMonomial { exponents, direction, sigma } => {
            check_len("direction", direction, d)?;
            if exponents.len() != d {
                return param("need one exponent per axis");
            }
            let s2 = 2.0 * sigma * sigma;
            VectorField::from_fn(*grid, d, |x, o| {
                let mono: f64 = x.iter().zip(exponents).map(|(v, &e)| v.powi(e as i32)).product();
                let g = mono * (-x.iter().map(|v| v * v).sum::<f64>() / s2).exp();
                for j in 0..d {
                    o[j] = direction[j] * g;
                }
            })?
        }
        Family::BandlimitedRandom { seed, kmax } => bandlimited(grid, *seed, *kmax)?,
    };
    Ok(field.with_meta(family.descriptor(), family.is_periodic()))
}

/// Random Hermitian spectrum; the same seed gives the same continuous field on any grid.
fn bandlimited(grid: &GridSpec, seed: u64, kmax: usize) -> Result<VectorField> {
    let d = grid.d();
    let n = grid.n();
    if kmax == 0 || 2 * kmax >= n {
        return param(format!("kmax={kmax} must be in 1..N/2 (N={n})"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let km = kmax as i64;
    let side = (2 * km + 1) as usize;
    let mut coeffs = vec![vec![Complex64::default(); grid.len()]; d];
    let vol = grid.volume();
    let to_index = |k: i64| k.rem_euclid(n as i64) as usize;
    for flat in 0..side.pow(d as u32) {
        let mut k = [0i64; 3];
        let mut rest = flat;
        for a in (0..d).rev() {
            k[a] = (rest % side) as i64 - km;
            rest /= side;
        }
        // one representative of each pair {k, -k}: first nonzero entry positive
        match k[..d].iter().find(|&&v| v != 0) {
            Some(&v) if v > 0 => {}
            _ => continue,
        }
        let k2: i64 = k[..d].iter().map(|v| v * v).sum();
        let decay = 1.0 / (1.0 + k2 as f64);
        let mi: Vec<usize> = k[..d].iter().map(|&v| to_index(v)).collect();
        let mm: Vec<usize> = k[..d].iter().map(|&v| to_index(-v)).collect();
        let (i, im) = (grid.linear_index(&mi), grid.linear_index(&mm));
        for c in coeffs.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let imv: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, imv) * (0.5 * vol * decay);
            c[i] = z;
            c[im] = z.conj();
        }
    }
    to_spatial(&SpectralField::new(*grid, coeffs)?)
}
