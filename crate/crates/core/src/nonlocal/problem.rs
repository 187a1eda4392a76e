//! Node clouds, coefficients and forcing for the nonlocal system.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::FracParams;

/// Coefficient rule `A(x, y) = (c(x) + c(y)) / 2`, symmetric by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant { value: f64 },
    /// `alpha1` on even cells of side `scale`, `alpha2` on odd ones.
    Checkerboard { scale: f64, alpha1: f64, alpha2: f64 },
    /// `alpha1 + (alpha2 - alpha1) (1 + prod_a sin(pi x_a)) / 2`.
    Smooth { alpha1: f64, alpha2: f64 },
}

impl Coefficient {
    pub fn validate(&self) -> Result<()> {
        let (a1, a2) = self.bounds();
        if !(a1 > 0.0 && a2 >= a1 && a2.is_finite()) {
            return param(format!("coefficient bounds ({a1}, {a2}) need 0 < alpha1 <= alpha2 < inf"));
        }
        if let Coefficient::Checkerboard { scale, .. } = self {
            if !(*scale > 0.0 && scale.is_finite()) {
                return param(format!("checkerboard scale {scale} must be positive"));
            }
        }
        Ok(())
    }

    /// `(alpha1, alpha2)` with `alpha1 <= A <= alpha2`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Coefficient::Constant { value } => (value, value),
            Coefficient::Checkerboard { alpha1, alpha2, .. } | Coefficient::Smooth { alpha1, alpha2 } => {
                (alpha1.min(alpha2), alpha1.max(alpha2))
            }
        }
    }

    /// The one-point factor `c(x)`.
    pub fn site(&self, x: &[f64]) -> f64 {
        match *self {
            Coefficient::Constant { value } => value,
            Coefficient::Checkerboard { scale, alpha1, alpha2 } => {
                let parity: i64 = x.iter().map(|v| (v / scale).floor() as i64).sum();
                if parity.rem_euclid(2) == 0 {
                    alpha1
                } else {
                    alpha2
                }
            }
            Coefficient::Smooth { alpha1, alpha2 } => {
                let prod: f64 = x.iter().map(|v| (std::f64::consts::PI * v).sin()).product();
                alpha1 + (alpha2 - alpha1) * 0.5 * (1.0 + prod)
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        0.5 * (self.site(x) + self.site(y))
    }

    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            Coefficient::Constant { value } => Coefficient::Constant { value: k * value },
            Coefficient::Checkerboard { scale, alpha1, alpha2 } => {
                Coefficient::Checkerboard { scale, alpha1: k * alpha1, alpha2: k * alpha2 }
            }
            Coefficient::Smooth { alpha1, alpha2 } => Coefficient::Smooth { alpha1: k * alpha1, alpha2: k * alpha2 },
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant { value } => write!(f, "constant:{value}"),
            Coefficient::Checkerboard { scale, alpha1, alpha2 } => write!(f, "checkerboard:{scale}:{alpha1}:{alpha2}"),
            Coefficient::Smooth { alpha1, alpha2 } => write!(f, "smooth:{alpha1}:{alpha2}"),
        }
    }
}

/// `constant:v`, `checkerboard:scale:a1:a2` or `smooth:a1:a2`.
impl FromStr for Coefficient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or("");
        let nums: Vec<f64> = parts
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parameter(format!("bad number `{t}` in `{s}`"))))
            .collect::<Result<_>>()?;
        let c = match (kind, nums.as_slice()) {
            ("constant", [v]) => Coefficient::Constant { value: *v },
            ("checkerboard", [scale, a1, a2]) => Coefficient::Checkerboard { scale: *scale, alpha1: *a1, alpha2: *a2 },
            ("smooth", [a1, a2]) => Coefficient::Smooth { alpha1: *a1, alpha2: *a2 },
            _ => return param(format!("unknown coefficient `{s}`")),
        };
        c.validate()?;
        Ok(c)
    }
}

/// Integer lattice coordinates `x_i = h k_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub h: f64,
    pub coords: Vec<[i64; 3]>,
}

/// Discretized `Omega` with coefficient, forcing and exponents.
///
/// Vector quantities on nodes are flat, node-major: entry `i * d + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlocalProblem {
    pub d: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Nodes where `u = 0` is imposed.
    pub collar: Vec<bool>,
    pub coeff: Coefficient,
    /// Force density sampled at the nodes.
    pub forcing: Vec<f64>,
    pub params: FracParams,
    /// Set for lattice clouds; nearest-neighbour pairs then use the cell-averaged kernel.
    pub lattice: Option<Lattice>,
}

impl NonlocalProblem {
    /// Arbitrary cloud with the pointwise kernel.
    pub fn from_cloud(
        nodes: Vec<Vec<f64>>,
        weights: Vec<f64>,
        collar: Vec<bool>,
        coeff: Coefficient,
        forcing: Vec<f64>,
        params: FracParams,
    ) -> Result<Self> {
        let d = params.d;
        let mut pts = Vec::with_capacity(nodes.len());
        for x in &nodes {
            if x.len() != d {
                return Err(Error::Shape(format!("node has {} coordinates, expected {d}", x.len())));
            }
            let mut p = [0.0; 3];
            p[..d].copy_from_slice(x);
            pts.push(p);
        }
        let pb = Self { d, nodes: pts, weights, collar, coeff, forcing, params, lattice: None };
        pb.validate()?;
        Ok(pb)
    }

    /// Lattice `h Z^d` inside the closed ball of `radius` about 0, weights `h^d`,
    /// collar = nodes within `2h` of the sphere.
    pub fn lattice_ball(
        h: f64,
        radius: f64,
        coeff: Coefficient,
        forcing: impl Fn(&[f64], &mut [f64]),
        params: FracParams,
    ) -> Result<Self> {
        let d = params.d;
        if !(h > 0.0 && radius > 2.0 * h) {
            return param(format!("need 0 < 2h < radius, got h={h}, radius={radius}"));
        }
        let m = (radius / h).floor() as i64;
        let side = (2 * m + 1) as usize;
        let mut nodes = Vec::new();
        let mut coords = Vec::new();
        let mut collar = Vec::new();
        let mut f = Vec::new();
        for flat in 0..side.pow(d as u32) {
            let mut k = [0i64; 3];
            let mut rest = flat;
            for slot in k.iter_mut().take(d) {
                *slot = (rest % side) as i64 - m;
                rest /= side;
            }
            let mut x = [0.0; 3];
            for a in 0..d {
                x[a] = k[a] as f64 * h;
            }
            let r = x[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > radius {
                continue;
            }
            let mut fv = [0.0; 3];
            forcing(&x[..d], &mut fv[..d]);
            f.extend_from_slice(&fv[..d]);
            nodes.push(x);
            coords.push(k);
            collar.push(r > radius - 2.0 * h);
        }
        let weights = vec![h.powi(d as i32); nodes.len()];
        let pb = Self { d, nodes, weights, collar, coeff, forcing: f, params, lattice: Some(Lattice { h, coords }) };
        pb.validate()?;
        Ok(pb)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let d = self.d;
        if d != self.params.d {
            return Err(Error::Shape(format!("problem dimension {d} differs from params dimension {}", self.params.d)));
        }
        self.params.require_solver()?;
        self.coeff.validate()?;
        if self.weights.len() != n || self.collar.len() != n || self.forcing.len() != n * d {
            return Err(Error::Shape(format!(
                "{n} nodes but {} weights, {} collar flags, {} forcing values",
                self.weights.len(),
                self.collar.len(),
                self.forcing.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return param(format!("weight {w} must be positive"));
        }
        if !self.collar.iter().any(|&c| c) {
            return param("collar is empty; rigid motions would not be controlled");
        }
        if self.forcing.iter().any(|v| !v.is_finite()) {
            return param("forcing has non-finite entries");
        }
        let mut seen = HashSet::with_capacity(n);
        for x in &self.nodes {
            if x.iter().any(|v| !v.is_finite()) {
                return param("node with non-finite coordinates");
            }
            if !seen.insert([x[0].to_bits(), x[1].to_bits(), x[2].to_bits()]) {
                return param(format!("coincident nodes at {:?}", &x[..d]));
            }
        }
        if let Some(lat) = &self.lattice {
            if lat.coords.len() != n {
                return Err(Error::Shape("lattice coordinates do not match the nodes".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn free_count(&self) -> usize {
        self.collar.iter().filter(|&&c| !c).count()
    }

    pub fn with_coeff(mut self, coeff: Coefficient) -> Result<Self> {
        coeff.validate()?;
        self.coeff = coeff;
        Ok(self)
    }

    pub fn with_forcing(mut self, forcing: Vec<f64>) -> Result<Self> {
        self.forcing = forcing;
        self.validate()?;
        Ok(self)
    }

    /// Reads `x0..x{d-1}, weight, collar[, f0..f{d-1}]` with a header row.
    /// Missing force columns mean `F = 0`.
    pub fn read_csv(r: impl Read, coeff: Coefficient, s: f64, p: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let d = header.iter().filter(|h| h.starts_with('x')).count();
        let col = |name: &str| header.iter().position(|h| h == name);
        let xs: Vec<usize> = (0..d).map(|a| col(&format!("x{a}"))).collect::<Option<_>>().ok_or_else(|| {
            Error::Parameter("coordinate columns must be named x0, x1, ...".into())
        })?;
        let (wc, cc) = match (col("weight"), col("collar")) {
            (Some(w), Some(c)) => (w, c),
            _ => return param("csv needs `weight` and `collar` columns"),
        };
        let fs: Option<Vec<usize>> = (0..d).map(|a| col(&format!("f{a}"))).collect();
        let params = FracParams::new(s, p, 0.0, d)?;
        let (mut nodes, mut weights, mut collar, mut forcing) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let num = |k: usize| -> Result<f64> {
                let t = rec.get(k).unwrap_or("");
                t.parse::<f64>().map_err(|_| Error::Parameter(format!("row {}: bad number `{t}`", line + 1)))
            };
            nodes.push(xs.iter().map(|&k| num(k)).collect::<Result<Vec<f64>>>()?);
            weights.push(num(wc)?);
            collar.push(match rec.get(cc).unwrap_or("") {
                "1" | "true" => true,
                "0" | "false" => false,
                t => return param(format!("row {}: bad collar flag `{t}`", line + 1)),
            });
            match &fs {
                Some(fs) => {
                    for &k in fs {
                        forcing.push(num(k)?);
                    }
                }
                None => forcing.extend(std::iter::repeat(0.0).take(d)),
            }
        }
        Self::from_cloud(nodes, weights, collar, coeff, forcing, params)
    }

    /// Writes `x0.., weight, collar, f0..` in the format [`Self::read_csv`] accepts.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let d = self.d;
        let mut wtr = csv::Writer::from_writer(w);
        let mut head: Vec<String> = (0..d).map(|a| format!("x{a}")).collect();
        head.push("weight".into());
        head.push("collar".into());
        head.extend((0..d).map(|a| format!("f{a}")));
        wtr.write_record(&head).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.nodes[i][..d].iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{:e}", self.weights[i]));
            row.push(if self.collar[i] { "1".into() } else { "0".into() });
            row.extend(self.forcing[i * d..(i + 1) * d].iter().map(|v| format!("{v:e}")));
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Nodes and nodal values as CSV: `x0.., u0..`.
pub fn write_solution_csv(problem: &NonlocalProblem, u: &[f64], w: impl Write) -> Result<()> {
    let d = problem.d;
    if u.len() != problem.len() * d {
        return Err(Error::Shape(format!("solution has {} values for {} nodes", u.len(), problem.len())));
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut head: Vec<String> = (0..d).map(|a| format!("x{a}")).collect();
    head.extend((0..d).map(|a| format!("u{a}")));
    wtr.write_record(&head).map_err(csv_err)?;
    for i in 0..problem.len() {
        let row: Vec<String> =
            problem.nodes[i][..d].iter().chain(&u[i * d..(i + 1) * d]).map(|v| format!("{v:e}")).collect();
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FracParams {
        FracParams::new(0.5, 2.0, 0.0, 2).unwrap()
    }

    #[test]
    fn coefficient_parsing_and_bounds() {
        let c: Coefficient = "checkerboard:0.25:1:10".parse().unwrap();
        assert_eq!(c.bounds(), (1.0, 10.0));
        assert_eq!(c.to_string().parse::<Coefficient>().unwrap(), c);
        assert_eq!(c.site(&[0.1, 0.1]), 1.0);
        assert_eq!(c.site(&[0.3, 0.1]), 10.0);
        assert!("constant:0".parse::<Coefficient>().is_err());
        assert!("smooth:1".parse::<Coefficient>().is_err());
        let s = Coefficient::Smooth { alpha1: 1.0, alpha2: 3.0 };
        assert!((s.eval(&[0.2, 0.7], &[-0.4, 0.1]) - s.eval(&[-0.4, 0.1], &[0.2, 0.7])).abs() == 0.0);
    }

    #[test]
    fn lattice_ball_has_collar_and_weights() {
        let pb = NonlocalProblem::lattice_ball(0.1, 1.0, Coefficient::Constant { value: 1.0 }, |_, f| f[0] = 1.0, params())
            .unwrap();
        assert!(pb.free_count() > 0 && pb.free_count() < pb.len());
        assert!(pb.weights.iter().all(|&w| (w - 0.01).abs() < 1e-15));
        for (x, &c) in pb.nodes.iter().zip(&pb.collar) {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert_eq!(c, r > 0.8);
        }
    }

    #[test]
    fn rejects_bad_clouds() {
        let c = Coefficient::Constant { value: 1.0 };
        let nodes = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let e = NonlocalProblem::from_cloud(nodes, vec![1.0; 2], vec![true, false], c.clone(), vec![0.0; 4], params());
        assert!(e.is_err());
        let nodes = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let e = NonlocalProblem::from_cloud(nodes, vec![1.0; 2], vec![false, false], c, vec![0.0; 4], params());
        assert!(e.is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pb = NonlocalProblem::lattice_ball(0.25, 1.0, Coefficient::Constant { value: 2.0 }, |x, f| f[1] = x[0], params())
            .unwrap();
        let mut buf = Vec::new();
        pb.write_csv(&mut buf).unwrap();
        let back = NonlocalProblem::read_csv(buf.as_slice(), pb.coeff.clone(), 0.5, 2.0).unwrap();
        assert_eq!(back.nodes, pb.nodes);
        assert_eq!(back.collar, pb.collar);
        assert_eq!(back.forcing, pb.forcing);
        assert!(back.lattice.is_none());
    }
}
