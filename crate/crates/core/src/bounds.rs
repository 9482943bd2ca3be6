//! Bounds on homogenized tensions, the G-closure membership test, and
//! crystalline approximation.

use std::f64::consts::PI;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::celltension::{sphere_directions, sweep_directions};
use crate::error::{Error, Result};
use crate::lattice::{
    fdot, fnorm, idot, ineg, strength_f64, to_fvec, volume_fractions, BondField, FVec, IVec, InteractionSet,
    Site, Strength, MAX_DIM,
};

/// An even, positively 1-homogeneous function on R^d.
pub trait Density: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, nu: &FVec) -> f64;
}

/// phi(nu) = sum_j c_j |<nu, nu_j>|.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrystallineDensity {
    pub dim: usize,
    pub terms: Vec<(f64, FVec)>,
}

impl CrystallineDensity {
    pub fn new(dim: usize, terms: Vec<(f64, FVec)>) -> Result<Self> {
        for (c, v) in &terms {
            if !(*c >= 0.0) || !c.is_finite() {
                return Err(Error::InconsistentInput(format!("coefficient {c} is not a nonnegative number")));
            }
            if fnorm(v) == 0.0 || v[dim..].iter().any(|&x| x != 0.0) {
                return Err(Error::InconsistentInput(format!("direction {v:?} is zero or exceeds dimension {dim}")));
            }
        }
        Ok(Self { dim, terms })
    }

    /// sum_xi c_xi |<nu, xi>| over an interaction set.
    pub fn from_interaction(set: &InteractionSet, coeffs: &[f64]) -> Self {
        let terms = set.directions().iter().zip(coeffs).map(|(xi, c)| (*c, to_fvec(xi))).collect();
        Self { dim: set.dim(), terms }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { dim: self.dim, terms: self.terms.iter().map(|(c, v)| (c * lambda, *v)).collect() }
    }
}

impl Density for CrystallineDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, nu: &FVec) -> f64 {
        self.terms.iter().map(|(c, v)| c * fdot(nu, v).abs()).sum()
    }
}

/// Wraps a closure as a density.
pub struct FnDensity<F: Fn(&FVec) -> f64 + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&FVec) -> f64 + Sync> Density for FnDensity<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, nu: &FVec) -> f64 {
        (self.f)(nu)
    }
}

/// Per-direction averaged strengths theta_xi beta_xi + (1 - theta_xi) alpha_xi.
pub fn averaging_coefficients(field: &BondField) -> Result<Vec<Strength>> {
    let vf = volume_fractions(field)?;
    let set = field.set();
    Ok((0..set.len())
        .map(|k| {
            let t = vf.per_direction[k];
            t * set.beta(k) + (Strength::one() - t) * set.alpha(k)
        })
        .collect())
}

pub fn averaging_density(field: &BondField) -> Result<CrystallineDensity> {
    let c: Vec<f64> = averaging_coefficients(field)?.iter().map(strength_f64).collect();
    Ok(CrystallineDensity::from_interaction(field.set(), &c))
}

/// Upper bound by averaging: sum_xi (theta_xi beta_xi + (1 - theta_xi) alpha_xi) |<nu, xi>|.
pub fn averaging_bound(field: &BondField, nu: &FVec) -> Result<f64> {
    Ok(averaging_density(field)?.eval(nu))
}

/// Pairwise orthogonal nonzero integer vectors xi_1..xi_d.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrthogonalBasis {
    pub dim: usize,
    pub vectors: Vec<IVec>,
}

impl OrthogonalBasis {
    pub fn new(dim: usize, vectors: Vec<IVec>) -> Result<Self> {
        if vectors.len() != dim {
            return Err(Error::InvalidBasis(format!("{} vectors for dimension {dim}", vectors.len())));
        }
        for (a, v) in vectors.iter().enumerate() {
            if v.iter().all(|&c| c == 0) || v[dim..].iter().any(|&c| c != 0) {
                return Err(Error::InvalidBasis(format!("vector {v:?} is zero or exceeds dimension {dim}")));
            }
            for w in &vectors[..a] {
                if idot(v, w) != 0 {
                    return Err(Error::InvalidBasis(format!("{w:?} and {v:?} are not orthogonal")));
                }
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn canonical(dim: usize) -> Self {
        let vectors = (0..dim)
            .map(|j| {
                let mut e = [0; MAX_DIM];
                e[j] = 1;
                e
            })
            .collect();
        Self { dim, vectors }
    }

    /// |det Xi| = volume of the fundamental parallelepiped.
    pub fn covolume(&self) -> i64 {
        let mut m = [[0i64; MAX_DIM]; MAX_DIM];
        for j in 0..MAX_DIM {
            m[j] = if j < self.dim { self.vectors[j] } else { unit(j) };
        }
        det3(&m).abs()
    }

    /// Lattice points of the half-open parallelepiped P_0(Xi): one
    /// representative per coset of Z^d modulo the lattice spanned by Xi.
    pub fn coset_representatives(&self) -> Vec<Site> {
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for v in &self.vectors {
            for i in 0..self.dim {
                if v[i] < 0 {
                    lo[i] += v[i];
                } else {
                    hi[i] += v[i];
                }
            }
        }
        let window = crate::lattice::BoxWindow::new(self.dim, lo, hi.map(|h| h + 1));
        let mut out: Vec<Site> = window
            .sites()
            .filter(|s| {
                self.vectors.iter().all(|v| {
                    // lambda = <s, v> / |v|^2 in [0, 1)
                    let num = idot(&s.0, v);
                    let den = idot(v, v);
                    num >= 0 && num < den
                })
            })
            .collect();
        out.sort();
        out
    }
}

fn unit(j: usize) -> IVec {
    let mut e = [0; MAX_DIM];
    e[j] = 1;
    e
}

pub(crate) fn det3(m: &[IVec; MAX_DIM]) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[2][1] * m[1][2]) - m[1][0] * (m[0][1] * m[2][2] - m[2][1] * m[0][2])
        + m[2][0] * (m[0][1] * m[1][2] - m[1][1] * m[0][2])
}

/// Index of `xi` or `-xi` in the interaction set.
fn bond_index(set: &InteractionSet, xi: &IVec) -> Option<usize> {
    set.index_of(xi).or_else(|| set.index_of(&ineg(xi)))
}

/// Strength of the bond between `i` and `i + xi` when `xi` or `-xi` is in V.
fn bond_strength(field: &BondField, k: usize, i: &Site, xi: &IVec) -> Strength {
    if field.set().direction(k) == *xi {
        field.strength(i, k)
    } else {
        field.strength(&(*i + *xi), k)
    }
}

/// Projection coefficients c^p_j for the sublattice z + span_Z(Xi):
/// (1 / (T^{d-1} |det Xi|)) times the sum over the T^{d-1} line offsets
/// z + sum_{i != j} mu_i xi_i of the minimum strength along the line in
/// direction xi_j. Directions outside +-V get 0.
pub fn projection_coefficients(field: &BondField, basis: &OrthogonalBasis, z: &Site) -> Result<Vec<Strength>> {
    let period = field
        .period()
        .ok_or_else(|| Error::Unsupported("projection bounds need a periodic field".into()))?;
    if basis.dim != field.dim() {
        return Err(Error::InvalidBasis("basis dimension differs from the field".into()));
    }
    let dim = basis.dim;
    let t = period as i64;
    let offsets = (t as usize).pow(dim as u32 - 1);
    let norm = Strength::new(1, t.pow(dim as u32 - 1) * basis.covolume());
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        let xi = basis.vectors[j];
        let Some(k) = bond_index(field.set(), &xi) else {
            out.push(Strength::zero());
            continue;
        };
        let others: Vec<IVec> = (0..dim).filter(|&i| i != j).map(|i| basis.vectors[i]).collect();
        let mut sum = Strength::zero();
        for idx in 0..offsets {
            let mut rest = idx;
            let mut base = *z;
            for v in &others {
                let mu = (rest % period) as i64;
                rest /= period;
                base = base + v.map(|c| c * mu);
            }
            let line_min = (0..t)
                .map(|lambda| bond_strength(field, k, &(base + xi.map(|c| c * lambda)), &xi))
                .min()
                .expect("nonempty line");
            sum += line_min;
        }
        out.push(sum * norm);
    }
    Ok(out)
}

/// sum_j c^p_j |<nu, xi_j>| for one sublattice.
pub fn projection_bound(field: &BondField, basis: &OrthogonalBasis, z: &Site, nu: &FVec) -> Result<f64> {
    let c = projection_coefficients(field, basis, z)?;
    Ok(basis.vectors.iter().zip(&c).map(|(v, c)| strength_f64(c) * fdot(nu, &to_fvec(v)).abs()).sum())
}

/// Sum of the projection bounds over all cosets of the basis lattice.
pub fn projection_bound_all_cosets(field: &BondField, basis: &OrthogonalBasis, nu: &FVec) -> Result<f64> {
    basis
        .coset_representatives()
        .iter()
        .map(|z| projection_bound(field, basis, z, nu))
        .sum()
}

/// Lower-bound coefficient per direction xi of V from lines in direction
/// xi alone: the average over one period cell of the minimum strength on
/// the line through each site, (1/T^d) sum_i min_lambda c_{i + lambda xi, xi}.
pub fn line_minimum_coefficients(field: &BondField) -> Result<Vec<Strength>> {
    let period = field
        .period()
        .ok_or_else(|| Error::Unsupported("line minima need a periodic field".into()))?;
    let dim = field.dim();
    let cell = crate::lattice::BoxWindow::cube(dim, 0, period as i64);
    let set = field.set();
    Ok((0..set.len())
        .map(|k| {
            let xi = set.direction(k);
            let sum = cell
                .sites()
                .map(|s| {
                    (0..period as i64)
                        .map(|l| field.strength(&(s + xi.map(|c| c * l)), k))
                        .min()
                        .expect("nonempty line")
                })
                .fold(Strength::zero(), |a, b| a + b);
            sum / Strength::from_integer(cell.len() as i64)
        })
        .collect())
}

/// Closest rational with denominator at most `max_den` (continued fractions).
pub fn rationalize(x: f64, max_den: i64) -> Ratio<i64> {
    if !x.is_finite() {
        return Ratio::zero();
    }
    let neg = x < 0.0;
    let mut y = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    loop {
        let a = y.floor();
        if a > 1e15 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = y - a as f64;
        if frac < 1e-15 || ((p1 as f64 / q1 as f64) - x.abs()).abs() < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    let r = if q1 == 0 { Ratio::from_integer(x.abs().round() as i64) } else { Ratio::new(p1, q1) };
    if neg {
        -r
    } else {
        r
    }
}

/// Relative tolerance of the sampled domination checks.
pub const DOMINATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Verdict {
    Feasible,
    /// phi falls below the all-alpha density somewhere.
    BelowTrivialBound,
    /// phi exceeds the all-beta density somewhere.
    AboveTrivialBound,
    /// The cheapest dominating mixture needs a larger total fraction.
    FractionTooSmall,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub direction: Vec<f64>,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub verdict: Verdict,
    /// The total fraction actually tested (a rational approximation of the input).
    #[serde(serialize_with = "ser_ratio")]
    pub theta: Ratio<i64>,
    /// Minimal per-direction fractions t_xi found by the linear program.
    pub required: Vec<f64>,
    /// (1/#V) sum t_xi.
    pub required_total: f64,
    /// Per-direction fractions in [0, 1] averaging exactly theta.
    #[serde(serialize_with = "ser_ratios")]
    pub certificate: Option<Vec<Ratio<i64>>>,
    pub tolerance: f64,
    pub rows: Vec<BoundsRow>,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_ratios<S: serde::Serializer>(r: &Option<Vec<Ratio<i64>>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        None => s.serialize_none(),
        Some(v) => s.collect_seq(v.iter().map(|x| x.to_string())),
    }
}

impl BoundsReport {
    pub fn is_feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Sample directions used by the membership test: `n` spread points plus the
/// unit directions of +-V and, in the plane, their perpendiculars.
pub fn membership_samples(set: &InteractionSet, n: usize) -> Vec<FVec> {
    let dim = set.dim();
    let mut out = if dim == 2 { sweep_directions(n) } else { sphere_directions(n) };
    for xi in set.directions() {
        let v = to_fvec(xi);
        let u = v.map(|c| c / fnorm(&v));
        out.push(u);
        out.push(u.map(|c| -c));
        if dim == 2 {
            out.push([-u[1], u[0], 0.0]);
            out.push([u[1], -u[0], 0.0]);
        }
    }
    out
}

/// Default sample count: 360 in the plane, 1024 in space.
pub fn default_samples(dim: usize) -> usize {
    if dim == 2 {
        360
    } else {
        1024
    }
}

/// Tests whether phi belongs to the closure of mixtures with total beta
/// fraction theta: phi must dominate the all-alpha density, and some
/// per-direction fractions t_xi with mean at most theta must give a
/// crystalline mixture density dominating phi on the samples.
pub fn membership_test(phi: &dyn Density, theta: f64, set: &InteractionSet, samples: usize) -> Result<BoundsReport> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidTarget(format!("total fraction {theta} outside [0, 1]")));
    }
    if phi.dim() != set.dim() {
        return Err(Error::InconsistentInput("density and interaction set differ in dimension".into()));
    }
    let theta_q = rationalize(theta, 1_000_000);
    let n = set.len();
    let dirs = membership_samples(set, samples);
    let alpha: Vec<f64> = set.alphas().iter().map(strength_f64).collect();
    let beta: Vec<f64> = set.betas().iter().map(strength_f64).collect();
    let values: Vec<f64> = dirs.iter().map(|nu| phi.eval(nu)).collect();
    let weights: Vec<Vec<f64>> = dirs
        .iter()
        .map(|nu| set.directions().iter().map(|xi| fdot(nu, &to_fvec(xi)).abs()).collect())
        .collect();
    let lower: Vec<f64> = weights.iter().map(|w| w.iter().zip(&alpha).map(|(a, b)| a * b).sum()).collect();
    let top: Vec<f64> = weights.iter().map(|w| w.iter().zip(&beta).map(|(a, b)| a * b).sum()).collect();
    let slack = |v: f64| DOMINATION_TOL * v.abs().max(1e-300);

    let mut report = BoundsReport {
        verdict: Verdict::Feasible,
        theta: theta_q,
        required: vec![],
        required_total: f64::NAN,
        certificate: None,
        tolerance: DOMINATION_TOL,
        rows: vec![],
    };
    let rows = |upper: &dyn Fn(usize) -> f64| -> Vec<BoundsRow> {
        (0..dirs.len())
            .map(|s| BoundsRow {
                direction: dirs[s][..set.dim()].to_vec(),
                value: values[s],
                lower: lower[s],
                upper: upper(s),
            })
            .collect()
    };
    let theta_f = theta_q.to_f64().unwrap_or(theta);
    let uniform_upper = |s: usize| {
        weights[s].iter().enumerate().map(|(k, w)| (alpha[k] + theta_f * (beta[k] - alpha[k])) * w).sum()
    };

    if values.iter().zip(&lower).any(|(v, l)| *v < l - slack(*l)) {
        report.verdict = Verdict::BelowTrivialBound;
        report.rows = rows(&uniform_upper);
        return Ok(report);
    }
    if values.iter().zip(&top).any(|(v, u)| *v > u + slack(*u)) {
        report.verdict = Verdict::AboveTrivialBound;
        report.rows = rows(&uniform_upper);
        return Ok(report);
    }

    // Minimize sum t subject to sum (alpha + t (beta - alpha)) w >= phi (1 - tol).
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(1.0, (0.0, 1.0))).collect();
    for s in 0..dirs.len() {
        let need = values[s] * (1.0 - DOMINATION_TOL) - lower[s];
        if need <= 0.0 {
            continue;
        }
        let expr: Vec<_> = (0..n)
            .filter(|&k| weights[s][k] > 0.0)
            .map(|k| (vars[k], (beta[k] - alpha[k]) * weights[s][k]))
            .collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, need);
    }
    let t: Vec<f64> = match lp.solve() {
        Ok(sol) => vars.iter().map(|v| sol[*v].clamp(0.0, 1.0)).collect(),
        Err(_) => {
            report.verdict = Verdict::AboveTrivialBound;
            report.rows = rows(&uniform_upper);
            return Ok(report);
        }
    };
    let total = t.iter().sum::<f64>() / n as f64;
    report.required = t.clone();
    report.required_total = total;
    if total > theta_f + 1e-12 {
        report.verdict = Verdict::FractionTooSmall;
        report.rows = rows(&uniform_upper);
        return Ok(report);
    }
    let cert = certificate(&t, theta_q, &|c: &[Ratio<i64>]| {
        let cf: Vec<f64> = c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        (0..dirs.len()).all(|s| {
            let up: f64 = (0..n).map(|k| (alpha[k] + cf[k] * (beta[k] - alpha[k])) * weights[s][k]).sum();
            up >= values[s] * (1.0 - 2.0 * DOMINATION_TOL)
        })
    });
    let cf: Vec<f64> = cert.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    report.rows = rows(&|s: usize| (0..n).map(|k| (alpha[k] + cf[k] * (beta[k] - alpha[k])) * weights[s][k]).sum());
    report.certificate = Some(cert);
    Ok(report)
}

/// Rational fractions >= the LP solution (as far as `dominates` needs),
/// padded in direction order so that their mean is exactly theta.
fn certificate(t: &[f64], theta: Ratio<i64>, dominates: &dyn Fn(&[Ratio<i64>]) -> bool) -> Vec<Ratio<i64>> {
    // Everything is kept as integer numerators over one denominator so that
    // sums never overflow.
    let small: Vec<Ratio<i64>> = t.iter().map(|&x| rationalize(x.clamp(0.0, 1.0), 4096)).collect();
    let lcm_small = small.iter().fold(*theta.denom(), |a, r| num_integer::lcm(a, *r.denom()));
    let (den, mut num): (i64, Vec<i64>) = if lcm_small <= 1 << 40 && dominates(&small) {
        (lcm_small, small.iter().map(|r| r.numer() * (lcm_small / r.denom())).collect())
    } else {
        let den = *theta.denom() << 20;
        (den, t.iter().map(|&x| ((x.clamp(0.0, 1.0) * den as f64).ceil() as i64).min(den)).collect())
    };
    let target = theta.numer() * (den / theta.denom()) * t.len() as i64;
    let mut sum: i64 = num.iter().sum();
    if sum > target {
        // Rounding overshoot of a few units: trim from the largest entries.
        let mut order: Vec<usize> = (0..num.len()).collect();
        order.sort_by(|&a, &b| num[b].cmp(&num[a]));
        for k in order {
            let cut = (sum - target).min(num[k]);
            num[k] -= cut;
            sum -= cut;
        }
    }
    for x in num.iter_mut() {
        let add = (target - sum).min(den - *x);
        *x += add;
        sum += add;
    }
    num.into_iter().map(|x| Ratio::new(x, den)).collect()
}

/// Result of a crystalline approximation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrystallineApprox {
    pub density: CrystallineDensity,
    /// sup over the check samples of (approximation - phi); the
    /// approximation lies in [phi, phi + gap] there.
    pub gap: f64,
}

/// Primitive integer vectors close to evenly spaced angles in [0, pi),
/// always containing the (primitive) directions of V.
pub fn rational_normals_2d(set: &InteractionSet, n: usize, max_entry: i64) -> Vec<IVec> {
    let canon = |v: IVec| -> IVec {
        let g = num_integer::gcd(v[0], v[1]).max(1);
        let mut w = [v[0] / g, v[1] / g, 0];
        if w[1] < 0 || (w[1] == 0 && w[0] < 0) {
            w = ineg(&w);
        }
        w
    };
    let angle = |v: &IVec| (v[1] as f64).atan2(v[0] as f64);
    let mut chosen: Vec<IVec> = Vec::new();
    for xi in set.directions() {
        let c = canon(*xi);
        if !chosen.contains(&c) {
            chosen.push(c);
        }
    }
    // Candidate pool: all primitive vectors in the upper half-plane.
    let mut pool = Vec::new();
    for a in -max_entry..=max_entry {
        for b in 0..=max_entry {
            if (a, b) != (0, 0) && num_integer::gcd(a, b) == 1 && (b > 0 || a > 0) {
                pool.push([a, b, 0]);
            }
        }
    }
    let mut k = 0usize;
    while chosen.len() < n && k < 8 * n + 64 {
        // Fill the widest angular gap with the pool vector closest to its middle.
        let mut angles: Vec<f64> = chosen.iter().map(angle).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut best_gap = (0.0, 0.0);
        for w in 0..angles.len() {
            let a = angles[w];
            let b = if w + 1 < angles.len() { angles[w + 1] } else { angles[0] + PI };
            if b - a > best_gap.1 - best_gap.0 {
                best_gap = (a, b);
            }
        }
        let mid = 0.5 * (best_gap.0 + best_gap.1);
        let mid = if mid >= PI { mid - PI } else { mid };
        let pick = pool
            .iter()
            .filter(|v| !chosen.contains(v))
            .min_by(|a, b| {
                let da = ang_dist(angle(a), mid);
                let db = ang_dist(angle(b), mid);
                da.partial_cmp(&db).unwrap().then(idot(a, a).cmp(&idot(b, b)))
            })
            .copied();
        match pick {
            Some(p) => chosen.push(p),
            None => break,
        }
        k += 1;
    }
    chosen.sort_by(|a, b| angle(a).partial_cmp(&angle(b)).unwrap());
    chosen
}

fn ang_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Coefficients c_j >= 0 with sum_j c_j |<kappa_i, n_j>| = value_i, where
/// n_j is kappa_j rotated by a right angle. The interpolant is the
/// crystalline density whose sublevel boundary has its corners on the rays
/// kappa_j.
fn interpolate_at_kinks(kinks: &[FVec], values: &[f64]) -> Result<Vec<(f64, FVec)>> {
    let m = kinks.len();
    let normals: Vec<FVec> = kinks.iter().map(|k| [-k[1], k[0], 0.0]).collect();
    let a = DMatrix::from_fn(m, m, |i, j| fdot(&kinks[i], &normals[j]).abs());
    let b = DVector::from_column_slice(values);
    let c = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric("singular interpolation system".into()))?;
    let scale = values.iter().fold(0.0f64, |x, v| x.max(v.abs()));
    let mut terms = Vec::with_capacity(m);
    for j in 0..m {
        let cj = c[j];
        if cj < -1e-9 * scale.max(1.0) {
            return Err(Error::InconsistentInput(format!(
                "samples are not convex near direction {:?} (coefficient {cj})",
                &kinks[j][..2]
            )));
        }
        terms.push((cj.max(0.0), normals[j]));
    }
    Ok(terms)
}

fn unit_f(v: &IVec) -> FVec {
    let f = to_fvec(v);
    f.map(|c| c / fnorm(&f))
}

/// Crystalline density on N rational directions (including V) close to phi.
///
/// In the plane the result interpolates phi at the N corner rays
/// perpendicular to the chosen directions, so for convex phi it dominates
/// phi and is exact for crystalline phi whose directions are among them.
/// In space the coefficients come from a linear program (dominate phi on
/// samples, minimize the total excess).
pub fn crystalline_approx(phi: &dyn Density, set: &InteractionSet, n: usize) -> Result<CrystallineApprox> {
    let dim = phi.dim();
    if n < set.len() {
        return Err(Error::InvalidTarget(format!("need at least {} directions, got {n}", set.len())));
    }
    let density = if dim == 2 {
        let dirs = rational_normals_2d(set, n, 64);
        // Corner rays kappa_j with n_j = rot(kappa_j) = unit(dir_j).
        let kinks: Vec<FVec> = dirs
            .iter()
            .map(|d| {
                let u = unit_f(d);
                [u[1], -u[0], 0.0]
            })
            .collect();
        let values: Vec<f64> = kinks.iter().map(|k| phi.eval(k)).collect();
        CrystallineDensity::new(2, interpolate_at_kinks(&kinks, &values)?)?
    } else {
        let dirs = rational_normals_3d(set, n);
        let samples = sphere_directions(default_samples(3));
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let units: Vec<FVec> = dirs.iter().map(unit_f).collect();
        let cost: Vec<f64> =
            units.iter().map(|u| samples.iter().map(|s| fdot(s, u).abs()).sum::<f64>()).collect();
        let vars: Vec<_> = cost.iter().map(|&c| lp.add_var(c, (0.0, f64::INFINITY))).collect();
        for s in &samples {
            let expr: Vec<_> = units.iter().zip(&vars).map(|(u, v)| (*v, fdot(s, u).abs())).collect();
            lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, phi.eval(s));
        }
        let sol = lp.solve().map_err(|e| Error::InconsistentInput(format!("no dominating density: {e}")))?;
        CrystallineDensity::new(3, vars.iter().zip(&units).map(|(v, u)| (sol[*v].max(0.0), *u)).collect())?
    };
    let check = if dim == 2 { sweep_directions(4096) } else { sphere_directions(4096) };
    let mut gap = 0.0f64;
    for nu in &check {
        gap = gap.max(density.eval(nu) - phi.eval(nu));
    }
    Ok(CrystallineApprox { density, gap })
}

/// V's directions plus small primitive vectors, up to n in total.
fn rational_normals_3d(set: &InteractionSet, n: usize) -> Vec<IVec> {
    let canon = |v: IVec| -> IVec {
        let g = v.iter().fold(0i64, |a, &b| num_integer::gcd(a, b)).max(1);
        let w = v.map(|c| c / g);
        if crate::lattice::lex_positive(&to_fvec(&w), 0.0) {
            w
        } else {
            ineg(&w)
        }
    };
    let mut chosen: Vec<IVec> = Vec::new();
    for xi in set.directions() {
        let c = canon(*xi);
        if !chosen.contains(&c) {
            chosen.push(c);
        }
    }
    let mut pool = Vec::new();
    let r = 3i64;
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                let v = [a, b, c];
                if v != [0, 0, 0] && canon(v) == v && v.iter().fold(0i64, |x, &y| num_integer::gcd(x, y)) == 1 {
                    pool.push(v);
                }
            }
        }
    }
    pool.sort_by_key(|v| (idot(v, v), *v));
    for v in pool {
        if chosen.len() >= n {
            break;
        }
        if !chosen.contains(&v) {
            chosen.push(v);
        }
    }
    chosen
}

/// Greatest convex, even, positively 1-homogeneous function that is at most
/// `values[k]` at xi_k/|xi_k| for every direction of V.
///
/// In the plane this is the gauge of the convex hull of the points
/// +-(xi/|xi|)/value, written exactly as a crystalline sum. In space the
/// greatest density in the crystalline family spanned by V and the pairwise
/// cross products of V is computed by a linear program.
pub fn convex_envelope_from_v(set: &InteractionSet, values: &[f64]) -> Result<CrystallineDensity> {
    if values.len() != set.len() || values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InconsistentInput("one positive value per direction of V is required".into()));
    }
    let dim = set.dim();
    let units: Vec<FVec> = set.directions().iter().map(unit_f).collect();
    if dim == 2 {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for (u, v) in units.iter().zip(values) {
            pts.push([u[0] / v, u[1] / v]);
            pts.push([-u[0] / v, -u[1] / v]);
        }
        let hull = convex_hull(&pts);
        // Keep one of each antipodal pair of vertices: the upper half.
        let mut kinks: Vec<(f64, FVec, f64)> = hull
            .iter()
            .filter(|p| p[1] > 1e-15 || (p[1].abs() <= 1e-15 && p[0] > 0.0))
            .map(|p| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                (p[1].atan2(p[0]), [p[0] / r, p[1] / r, 0.0], 1.0 / r)
            })
            .collect();
        kinks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let rays: Vec<FVec> = kinks.iter().map(|k| k.1).collect();
        let vals: Vec<f64> = kinks.iter().map(|k| k.2).collect();
        return CrystallineDensity::new(2, interpolate_at_kinks(&rays, &vals)?);
    }
    let mut normals: Vec<FVec> = units.clone();
    for a in 0..units.len() {
        for b in a + 1..units.len() {
            let (x, y) = (&units[a], &units[b]);
            let c = [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
            let n = fnorm(&c);
            if n > 1e-12 {
                let c = c.map(|t| t / n);
                if !normals.iter().any(|m| (fdot(m, &c).abs() - 1.0).abs() < 1e-12) {
                    normals.push(c);
                }
            }
        }
    }
    let samples = sphere_directions(default_samples(3));
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = normals
        .iter()
        .map(|m| lp.add_var(samples.iter().map(|s| fdot(s, m).abs()).sum(), (0.0, f64::INFINITY)))
        .collect();
    for (u, v) in units.iter().zip(values) {
        let expr: Vec<_> = normals.iter().zip(&vars).map(|(m, var)| (*var, fdot(u, m).abs())).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, *v);
    }
    let sol = lp.solve().map_err(|e| Error::Numeric(format!("envelope program failed: {e}")))?;
    CrystallineDensity::new(3, vars.iter().zip(&normals).map(|(v, m)| (sol[*v].max(0.0), *m)).collect())
}

/// Convex hull vertices in counter-clockwise order (collinear points dropped).
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let eps = 1e-12;
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for q in &p {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], q) <= eps {
            lower.pop();
        }
        lower.push(*q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for q in p.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], q) <= eps {
            upper.pop();
        }
        upper.push(*q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Exact sum_xi c_xi |<v, xi>| at an integer vector.
pub fn crystalline_at_integer(set: &InteractionSet, coeffs: &[Strength], v: &IVec) -> Strength {
    set.directions()
        .iter()
        .zip(coeffs)
        .map(|(xi, c)| *c * Strength::from_integer(idot(v, xi).abs()))
        .fold(Strength::zero(), |a, b| a + b)
}

/// Absolute value helper for exact comparisons in reports.
pub fn ratio_abs(r: &Strength) -> Strength {
    r.abs()
}
