//! Finite-radius estimates of the homogenized surface tension.
//!
//! For a periodic field the tension in direction nu is approximated by the
//! pinned ball problem of radius R, normalized by the area w_{d-1} R^{d-1}
//! of the flat disc it contains, and extrapolated along a radius ladder.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::lattice::{
    fnorm, idot, inorm, to_fvec, BondField, FVec, HalfSpaceTrace, IVec, Site, Spin, Strength, MAX_DIM,
};
use crate::mincut::{ball_instance, solve_min_cut, CutInstance};

/// Volume of the unit ball in R^k for k = 0, 1, 2 (1, 2, pi).
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        _ => {
            let k = k as f64;
            PI.powf(k / 2.0) / gamma_half_integer(k / 2.0 + 1.0)
        }
    }
}

fn gamma_half_integer(x: f64) -> f64 {
    // x is an integer or half-integer >= 1/2.
    if (x - 0.5).abs() < 1e-12 {
        return PI.sqrt();
    }
    if (x - 1.0).abs() < 1e-12 {
        return 1.0;
    }
    (x - 1.0) * gamma_half_integer(x - 1.0)
}

/// Area normalization w_{d-1} R^{d-1}.
pub fn disc_area(dim: usize, radius: f64) -> f64 {
    unit_ball_volume(dim - 1) * radius.powi(dim as i32 - 1)
}

/// Radius ladder, direction list and extrapolation order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub radii: Vec<f64>,
    pub directions: Vec<FVec>,
    /// 0: last value; 1: least-squares fit a + b/R.
    pub order: u8,
}

impl Schedule {
    pub fn new(radii: Vec<f64>, directions: Vec<FVec>, order: u8) -> Result<Self> {
        if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidTarget("radii must be strictly increasing".into()));
        }
        if order > 1 {
            return Err(Error::InvalidTarget(format!("extrapolation order {order} not in {{0, 1}}")));
        }
        if order == 1 && radii.len() < 2 {
            return Err(Error::InvalidTarget("order-1 extrapolation needs at least two radii".into()));
        }
        Ok(Self { radii, directions, order })
    }

    /// Default ladder for the dimension: R in {16, 32, 64, 128} in d = 2,
    /// {8, 12, 16} in d = 3; fitted to first order.
    pub fn default_for(dim: usize, directions: Vec<FVec>) -> Result<Self> {
        let radii = match dim {
            2 => vec![16.0, 32.0, 64.0, 128.0],
            3 => vec![8.0, 12.0, 16.0],
            _ => return Err(Error::Unsupported(format!("no default ladder in dimension {dim}"))),
        };
        Self::new(radii, directions, 1)
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().expect("nonempty ladder")
    }
}

/// `n` evenly spaced unit vectors in the plane. For even `n` the second
/// half is the exact negation of the first, so nu and -nu are both sampled
/// bit-for-bit.
pub fn sweep_directions(n: usize) -> Vec<FVec> {
    if n % 2 == 1 {
        return (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
    }
    let half: Vec<FVec> = (0..n / 2)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            // Snap the axis directions so that exact lattice planes are hit.
            let (c, s) = (a.cos(), a.sin());
            let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
            [snap(c), snap(s), 0.0]
        })
        .collect();
    let mut out = half.clone();
    out.extend(half.iter().map(|v| [-v[0], -v[1], -v[2]]));
    out
}

/// Quasi-uniform points on S^2 (Fibonacci lattice), closed under negation
/// when `n` is even.
pub fn sphere_directions(n: usize) -> Vec<FVec> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let half = n.div_ceil(2);
    let mut out: Vec<FVec> = (0..half)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / half as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect();
    let neg: Vec<FVec> = out.iter().map(|v| [-v[0], -v[1], -v[2]]).collect();
    out.extend(neg);
    out.truncate(n);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensionSample {
    pub radius: f64,
    /// Exact minimum of the pinned problem.
    #[serde(serialize_with = "ser_ratio")]
    pub raw: Strength,
    /// raw / (w_{d-1} R^{d-1}).
    pub normalized: f64,
}

fn ser_ratio<S: serde::Serializer>(r: &Strength, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensionEstimate {
    pub direction: FVec,
    pub samples: Vec<TensionSample>,
    pub phi_hat: f64,
    pub error_gauge: f64,
}

impl TensionEstimate {
    pub fn last_normalized(&self) -> f64 {
        self.samples.last().map(|s| s.normalized).unwrap_or(f64::NAN)
    }
}

/// Extrapolated value and error gauge |last - extrapolated|.
pub fn extrapolate(radii: &[f64], values: &[f64], order: u8) -> (f64, f64) {
    let last = *values.last().expect("nonempty ladder");
    if order == 0 || values.len() < 2 {
        return (last.max(0.0), 0.0);
    }
    // Least squares for v = a + b x with x = 1/R.
    let n = values.len() as f64;
    let xs: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = (my - b * mx).max(0.0);
    (a, (last - a).abs())
}

fn check_unit(nu: &FVec, dim: usize) -> Result<()> {
    if nu[dim..].iter().any(|&c| c != 0.0) || (fnorm(nu) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidTarget(format!("direction {nu:?} is not a unit vector in dimension {dim}")));
    }
    Ok(())
}

/// Exact pinned ball value with the oriented trace through `center`.
pub fn ball_value(field: &BondField, center: &FVec, nu: &FVec, radius: f64) -> Result<Strength> {
    let trace = HalfSpaceTrace::oriented(*center, *nu);
    let inst = ball_instance(field, center, radius, &trace)?;
    Ok(solve_min_cut(&inst)?.value)
}

fn sample(field: &BondField, nu: &FVec, radius: f64) -> Result<TensionSample> {
    let raw = ball_value(field, &[0.0; MAX_DIM], nu, radius)?;
    let normalized = crate::lattice::strength_f64(&raw) / disc_area(field.dim(), radius);
    Ok(TensionSample { radius, raw, normalized })
}

/// Ladder estimate of phi(nu) from balls centered at the origin.
pub fn estimate_phi(field: &BondField, nu: &FVec, schedule: &Schedule) -> Result<TensionEstimate> {
    if !field.is_periodic() {
        return Err(Error::Unsupported("estimate_phi needs a periodic field".into()));
    }
    check_unit(nu, field.dim())?;
    let samples = schedule
        .radii
        .par_iter()
        .map(|&r| sample(field, nu, r))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = samples.iter().map(|s| s.normalized).collect();
    let (phi_hat, error_gauge) = extrapolate(&schedule.radii, &values, schedule.order);
    Ok(TensionEstimate { direction: *nu, samples, phi_hat, error_gauge })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SweepWarning {
    TooFewDirections { n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub dim: usize,
    pub schedule: Schedule,
    pub estimates: Vec<TensionEstimate>,
    /// Vertices nu / phi_hat(nu) in sweep order (d = 2 only).
    pub polygon: Option<Vec<[f64; 2]>>,
    pub warnings: Vec<SweepWarning>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Sweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let rmax = self.schedule.max_radius();
        if self.dim == 2 {
            out.push_str("angle,nu_x,nu_y,phi_hat,err_gauge,R_max\n");
        } else {
            out.push_str("nu_x,nu_y,nu_z,phi_hat,err_gauge,R_max\n");
        }
        for e in &self.estimates {
            let nu = e.direction;
            let head = if self.dim == 2 {
                format!("{},{},{}", num(nu[1].atan2(nu[0])), num(nu[0]), num(nu[1]))
            } else {
                format!("{},{},{}", num(nu[0]), num(nu[1]), num(nu[2]))
            };
            let _ = writeln!(out, "{head},{},{},{}", num(e.phi_hat), num(e.error_gauge), num(rmax));
        }
        out
    }

    /// One `x y` vertex per line.
    pub fn polygon_text(&self) -> Option<String> {
        self.polygon.as_ref().map(|p| {
            p.iter().fold(String::new(), |mut s, v| {
                let _ = writeln!(s, "{} {}", num(v[0]), num(v[1]));
                s
            })
        })
    }

    pub fn summary_json(&self, field_hash: &str) -> serde_json::Value {
        let d = self.dim;
        let estimates: Vec<_> = self
            .estimates
            .iter()
            .map(|e| {
                json!({
                    "direction": &e.direction[..d],
                    "phi_hat": e.phi_hat,
                    "error_gauge": e.error_gauge,
                    "samples": e.samples,
                })
            })
            .collect();
        json!({
            "field_hash": field_hash,
            "dimension": d,
            "schedule": {
                "radii": self.schedule.radii,
                "order": self.schedule.order,
                "directions": self.schedule.directions.iter().map(|v| v[..d].to_vec()).collect::<Vec<_>>(),
            },
            "estimates": estimates,
            "warnings": self.warnings,
        })
    }
}

/// Estimates along every scheduled direction, plus the sublevel polygon in
/// the plane.
pub fn direction_sweep(field: &BondField, schedule: &Schedule) -> Result<Sweep> {
    let n = schedule.directions.len();
    let mut warnings = Vec::new();
    if n < 8 {
        log::warn!("direction sweep with only {n} directions");
        warnings.push(SweepWarning::TooFewDirections { n });
    }
    let estimates = schedule
        .directions
        .par_iter()
        .map(|nu| estimate_phi(field, nu, schedule))
        .collect::<Result<Vec<_>>>()?;
    let polygon = (field.dim() == 2).then(|| {
        estimates
            .iter()
            .map(|e| [e.direction[0] / e.phi_hat, e.direction[1] / e.phi_hat])
            .collect()
    });
    Ok(Sweep { dim: field.dim(), schedule: schedule.clone(), estimates, polygon, warnings })
}

/// Smallest integer vector p with p/|p| = nu (entries up to `max_entry`).
pub fn rational_direction(nu: &FVec, dim: usize, max_entry: i64) -> Result<IVec> {
    check_unit(nu, dim)?;
    let (j, big) = (0..dim)
        .map(|j| (j, nu[j].abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    for scale in 1..=max_entry {
        let lambda = scale as f64 / big;
        let mut p = [0i64; MAX_DIM];
        let mut ok = true;
        for i in 0..dim {
            let x = nu[i] * lambda;
            let r = x.round();
            if (x - r).abs() > 1e-9 * lambda.max(1.0) {
                ok = false;
                break;
            }
            p[i] = r as i64;
        }
        if ok && p[j] != 0 {
            let g = p.iter().fold(0i64, |a, &b| num_integer::gcd(a, b));
            return Ok(p.map(|c| c / g));
        }
    }
    Err(Error::RationalDirectionRequired(format!("{:?} has no integer multiple with entries up to {max_entry}", &nu[..dim])))
}

/// Unimodular matrix (columns) whose first column q has <p, q> = 1 and
/// whose remaining columns span the lattice orthogonal to p.
pub fn unimodular_completion(p: &IVec, dim: usize) -> Result<[IVec; MAX_DIM]> {
    let mut cols = [[0i64; MAX_DIM]; MAX_DIM];
    for (j, c) in cols.iter_mut().enumerate().take(dim) {
        c[j] = 1;
    }
    let mut r: Vec<i64> = p[..dim].to_vec();
    for j in 1..dim {
        if r[j] == 0 {
            continue;
        }
        let (g, x, y) = ext_gcd(r[0], r[j]);
        let (a, b) = (r[0] / g, r[j] / g);
        let c0 = cols[0];
        let cj = cols[j];
        for i in 0..MAX_DIM {
            cols[0][i] = x * c0[i] + y * cj[i];
            cols[j][i] = -b * c0[i] + a * cj[i];
        }
        r[0] = g;
        r[j] = 0;
    }
    match r[0] {
        1 => {}
        -1 => cols[0] = cols[0].map(|c| -c),
        g => return Err(Error::InvalidTarget(format!("direction {p:?} is not primitive (gcd {g})"))),
    }
    Ok(cols)
}

/// (g, x, y) with g = x a + y b = gcd(a, b) > 0 ... up to sign of inputs.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

fn det3(m: &[IVec; MAX_DIM]) -> i64 {
    // Columns m[0], m[1], m[2].
    m[0][0] * (m[1][1] * m[2][2] - m[2][1] * m[1][2]) - m[1][0] * (m[0][1] * m[2][2] - m[2][1] * m[0][2])
        + m[2][0] * (m[0][1] * m[1][2] - m[1][1] * m[0][2])
}

/// Coordinates of `v` in the unimodular column basis `b` (exact).
fn coords_in(b: &[IVec; MAX_DIM], dim: usize, v: &IVec) -> IVec {
    let mut full = *b;
    for (j, col) in full.iter_mut().enumerate().skip(dim) {
        *col = [0; MAX_DIM];
        col[j] = 1;
    }
    let det = det3(&full);
    let mut out = [0i64; MAX_DIM];
    for (j, o) in out.iter_mut().enumerate().take(dim) {
        let mut m = full;
        m[j] = *v;
        *o = det3(&m) / det;
    }
    out
}

/// Value of one periodic-affine plane problem on the twisted torus.
///
/// Sites are written y = sum_i a_i w_i + b q with the completion of the
/// primitive normal p; a is taken modulo `multiplier * T` and the layers
/// b in [shift - H, shift + H] are free, with H = max(M, 4 max|<p, xi>|).
/// Layers outside are pinned to +1 above the plane b = shift and -1 on or
/// below it. Returns the exact minimum and the cross-section area M^{d-1}|p|.
pub fn affine_plane_value(field: &BondField, p: &IVec, shift: i64, multiplier: usize) -> Result<(Strength, f64)> {
    let period = field
        .period()
        .ok_or_else(|| Error::Unsupported("the periodic-affine cell problem needs a periodic field".into()))?;
    if multiplier == 0 {
        return Err(Error::InvalidTarget("torus multiplier must be at least 1".into()));
    }
    let dim = field.dim();
    let basis = unimodular_completion(p, dim)?;
    let set = field.set();
    let m = (multiplier * period) as i64;
    let reach = set.directions().iter().map(|xi| idot(p, xi).abs()).max().unwrap_or(1);
    let h = m.max(4 * reach);
    let (lo, hi) = (shift - h, shift + h);
    let layers = (hi - lo + 1) as usize;
    let cross = (m as usize).pow(dim as u32 - 1);
    let xi_coords: Vec<IVec> = set.directions().iter().map(|xi| coords_in(&basis, dim, xi)).collect();

    // Node (a_1.., b) -> index; a in [0,M)^{d-1}.
    let index = |a: &[i64], b: i64| -> Option<usize> {
        if b < lo || b > hi {
            return None;
        }
        let mut idx = 0usize;
        for &ai in a.iter().rev() {
            idx = idx * m as usize + ai.rem_euclid(m) as usize;
        }
        Some(idx * layers + (b - lo) as usize)
    };
    let site_of = |a: &[i64], b: i64| -> Site {
        let mut y = [0i64; MAX_DIM];
        for i in 0..MAX_DIM {
            y[i] = b * basis[0][i];
            for (k, &ak) in a.iter().enumerate() {
                y[i] += ak * basis[k + 1][i];
            }
        }
        Site(y)
    };
    let pinned = |b: i64| if b > shift { Spin::Plus } else { Spin::Minus };

    let mut inst = CutInstance::new(cross * layers);
    let mut a = vec![0i64; dim - 1];
    for c in 0..cross {
        let mut rest = c;
        for ai in a.iter_mut() {
            *ai = (rest % m as usize) as i64;
            rest /= m as usize;
        }
        for b in lo..=hi {
            let here = index(&a, b).expect("free layer");
            let y = site_of(&a, b);
            for (k, xc) in xi_coords.iter().enumerate() {
                let fa: Vec<i64> = (0..dim - 1).map(|i| a[i] + xc[i + 1]).collect();
                let fb = b + xc[0];
                let c_fwd = field.strength(&y, k);
                match index(&fa, fb) {
                    Some(w) => inst.add_edge(here, w, c_fwd),
                    None => inst.add_fixed_neighbor(here, pinned(fb), c_fwd),
                }
                let ba: Vec<i64> = (0..dim - 1).map(|i| a[i] - xc[i + 1]).collect();
                let bb = b - xc[0];
                if index(&ba, bb).is_none() {
                    let back = site_of(&ba, bb);
                    inst.add_fixed_neighbor(here, pinned(bb), field.strength(&back, k));
                }
            }
        }
    }
    let value = solve_min_cut(&inst)?.value;
    let area = cross as f64 * inorm(p);
    Ok((value, area))
}

/// Experimental periodic-affine estimator: the mean over K plane shifts
/// s_k = floor(k T / K) of the twisted-torus plane problems, each divided
/// by its cross-section area. The gauge is the spread over shifts.
pub fn estimate_phi_affine(field: &BondField, nu: &FVec, levels: usize, multiplier: usize) -> Result<TensionEstimate> {
    let period = field
        .period()
        .ok_or_else(|| Error::Unsupported("the periodic-affine cell problem needs a periodic field".into()))?;
    if levels == 0 {
        return Err(Error::InvalidTarget("at least one level is required".into()));
    }
    let p = rational_direction(nu, field.dim(), 64)?;
    let samples = (0..levels)
        .into_par_iter()
        .map(|k| {
            let shift = (k * period / levels) as i64;
            let (raw, area) = affine_plane_value(field, &p, shift, multiplier)?;
            Ok(TensionSample { radius: shift as f64, raw, normalized: crate::lattice::strength_f64(&raw) / area })
        })
        .collect::<Result<Vec<_>>>()?;
    let vals: Vec<f64> = samples.iter().map(|s| s.normalized).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
    let unit = to_fvec(&p).map(|c| c / inorm(&p));
    Ok(TensionEstimate { direction: unit, samples, phi_hat: mean, error_gauge: spread })
}
