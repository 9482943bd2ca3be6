//! Non-periodic fields: synthesis from a piecewise-constant volume-fraction
//! profile, coarse-grained volume fractions, and local ball tensions.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{membership_test, rationalize, default_samples};
use crate::celltension::{ball_value, disc_area};
use crate::designer::{design_microstructure, DesignResult, DesignTarget, DEFAULT_T_MAX};
use crate::error::{Error, Result};
use crate::lattice::{
    ball_sites, fdot, strength_f64, to_fvec, BondField, BoxWindow, FVec, InteractionSet, Label, Site, Strength,
    MAX_DIM,
};

/// Piecewise-constant volume fraction on the dyadic cubes of side 2^-level
/// tiling the box [lo, hi).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MacroProfile {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: u32,
    /// One value per cell, first coordinate fastest.
    pub theta: Vec<f64>,
}

impl MacroProfile {
    pub fn new(dim: usize, lo: Vec<f64>, hi: Vec<f64>, level: u32, theta: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) || lo.len() != dim || hi.len() != dim {
            return Err(Error::InconsistentInput("domain corners must have the profile dimension".into()));
        }
        let side = 0.5f64.powi(level as i32);
        let mut cells = 1usize;
        for j in 0..dim {
            let a = lo[j] / side;
            let n = (hi[j] - lo[j]) / side;
            if a.fract() != 0.0 || n.fract() != 0.0 || n < 1.0 {
                return Err(Error::InconsistentInput(format!(
                    "axis {j}: [{}, {}) is not a union of dyadic cells of side {side}",
                    lo[j], hi[j]
                )));
            }
            cells *= n as usize;
        }
        if theta.len() != cells {
            return Err(Error::InconsistentInput(format!("{} values for {cells} cells", theta.len())));
        }
        if let Some(t) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidTarget(format!("volume fraction {t} outside [0, 1]")));
        }
        Ok(Self { dim, lo, hi, level, theta })
    }

    pub fn constant(dim: usize, lo: Vec<f64>, hi: Vec<f64>, level: u32, theta: f64) -> Result<Self> {
        let side = 0.5f64.powi(level as i32);
        let cells = (0..dim).map(|j| ((hi[j] - lo[j]) / side).round().max(0.0) as usize).product();
        Self::new(dim, lo, hi, level, vec![theta; cells])
    }

    pub fn side(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn cells_per_axis(&self) -> Vec<usize> {
        (0..self.dim).map(|j| ((self.hi[j] - self.lo[j]) / self.side()).round() as usize).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.theta.len()
    }

    /// Center x_n of cell `n`; the centers form the shifted grid 2^-k (Z^d + 1/2).
    pub fn center(&self, n: usize) -> Vec<f64> {
        let per = self.cells_per_axis();
        let mut rest = n;
        (0..self.dim)
            .map(|j| {
                let m = rest % per[j];
                rest /= per[j];
                self.lo[j] + (m as f64 + 0.5) * self.side()
            })
            .collect()
    }

    /// Default per-cell designs: t_xi = theta_xi = theta(x_n), rounded to a
    /// fraction with denominator at most 64.
    pub fn default_targets(&self, set: &InteractionSet) -> Result<Vec<DesignTarget>> {
        self.theta.iter().map(|&t| DesignTarget::uniform(set.len(), rationalize(t, 64))).collect()
    }
}

/// A field on the lattice of spacing eps, with the macroscopic point eps * i
/// attached to site i.
#[derive(Clone, Debug)]
pub struct LocalField {
    pub field: BondField,
    pub eps: f64,
    /// Macroscopic box the field represents; None for periodic fields on all of R^d.
    pub domain: Option<(Vec<f64>, Vec<f64>)>,
}

impl LocalField {
    pub fn periodic(field: BondField, eps: f64) -> Self {
        Self { field, eps, domain: None }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    fn lattice_point(&self, x: &[f64]) -> FVec {
        let mut p = [0.0; MAX_DIM];
        for (j, v) in x.iter().enumerate() {
            p[j] = v / self.eps;
        }
        p
    }
}

#[derive(Clone, Debug)]
pub struct Synthesized {
    pub local: LocalField,
    pub profile: MacroProfile,
    pub sites_per_cell: usize,
    pub delta: f64,
    pub targets: Vec<DesignTarget>,
    /// Design periods per cell.
    pub periods: Vec<usize>,
}

/// Patches the periodic design of each cell into the cube of side
/// (1 - delta) times the cell side around its center and puts beta on
/// every bond based in the guard strips between those cubes.
///
/// The lattice spacing is eps = side / sites_per_cell.
pub fn synthesize_field(
    profile: &MacroProfile,
    set: &InteractionSet,
    sites_per_cell: usize,
    delta: f64,
    targets: Option<Vec<DesignTarget>>,
) -> Result<Synthesized> {
    if profile.dim != set.dim() {
        return Err(Error::InconsistentInput("profile and interaction set differ in dimension".into()));
    }
    if sites_per_cell < 8 {
        return Err(Error::InvalidTarget(format!("eps must be at most side / 8, got side / {sites_per_cell}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidTarget(format!("guard width {delta} outside [0, 1)")));
    }
    let targets = match targets {
        Some(t) if t.len() != profile.cell_count() => {
            return Err(Error::InconsistentInput(format!("{} targets for {} cells", t.len(), profile.cell_count())))
        }
        Some(t) => t,
        None => profile.default_targets(set)?,
    };
    let dim = set.dim();
    // One design per distinct target, each checked for membership.
    let mut designs: BTreeMap<String, DesignResult> = BTreeMap::new();
    for t in &targets {
        let key = serde_json::to_string(t).expect("targets serialize");
        if designs.contains_key(&key) {
            continue;
        }
        let psi = t.psi(set);
        let theta = t.total_theta().to_f64().unwrap_or(f64::NAN);
        let report = membership_test(&psi, theta, set, default_samples(dim))?;
        if !report.is_feasible() {
            return Err(Error::InfeasibleTarget(format!("cell target {key} fails membership: {:?}", report.verdict)));
        }
        designs.insert(key, design_microstructure(t, set, DEFAULT_T_MAX)?);
    }
    let keys: Vec<String> = targets.iter().map(|t| serde_json::to_string(t).expect("targets serialize")).collect();
    let per = profile.cells_per_axis();
    let s = sites_per_cell as i64;
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [1i64; MAX_DIM];
    for j in 0..dim {
        lo[j] = (profile.lo[j] / profile.side()).round() as i64 * s;
        hi[j] = lo[j] + per[j] as i64 * s;
    }
    let window = BoxWindow::new(dim, lo, hi);
    let half = s as f64 / 2.0;
    let inner = half * (1.0 - delta);
    let cell_of = |site: &Site| -> (usize, bool) {
        let mut n = 0usize;
        let mut stride = 1usize;
        let mut inside = true;
        for j in 0..dim {
            let r = site.0[j] - lo[j];
            let m = r.div_euclid(s);
            let local = (r - m * s) as f64;
            inside &= (local - half).abs() <= inner;
            n += m as usize * stride;
            stride *= per[j];
        }
        (n, inside)
    };
    let labels: Vec<Vec<Label>> = (0..set.len())
        .map(|k| {
            window
                .sites()
                .map(|site| {
                    let (n, inside) = cell_of(&site);
                    if inside {
                        designs[&keys[n]].field.label(&site, k)
                    } else {
                        Label::Beta
                    }
                })
                .collect()
        })
        .collect();
    let field = BondField::windowed(set.clone(), window, labels, Label::Beta)?;
    let eps = profile.side() / sites_per_cell as f64;
    let periods = keys.iter().map(|k| designs[k].period).collect();
    Ok(Synthesized {
        local: LocalField { field, eps, domain: Some((profile.lo.clone(), profile.hi.clone())) },
        profile: profile.clone(),
        sites_per_cell,
        delta,
        targets,
        periods,
    })
}

/// Exact beta counts on a grid of cubes of `cell_sites` lattice sites per side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseGrid {
    pub cell_sites: usize,
    pub cells_per_axis: Vec<usize>,
    pub cells: Vec<CoarseCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseCell {
    pub center: Vec<f64>,
    /// Sites of the cell that belong to the field.
    pub sites: usize,
    /// Beta bonds per direction based at those sites.
    pub beta: Vec<usize>,
}

impl CoarseCell {
    /// theta-hat per direction, undefined on empty cells.
    pub fn theta_xi(&self) -> Option<Vec<Ratio<i64>>> {
        (self.sites > 0).then(|| self.beta.iter().map(|&b| Ratio::new(b as i64, self.sites as i64)).collect())
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta_xi().map(|t| t.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).sum::<f64>() / t.len() as f64)
    }
}

impl CoarseGrid {
    /// Merges blocks of 2^d cells; counts add exactly.
    pub fn coarsen(&self, eps: f64) -> Result<CoarseGrid> {
        if self.cells_per_axis.iter().any(|n| n % 2 != 0) {
            return Err(Error::InconsistentInput("odd cell count along an axis".into()));
        }
        let dim = self.cells_per_axis.len();
        let per: Vec<usize> = self.cells_per_axis.iter().map(|n| n / 2).collect();
        let n: usize = per.iter().product();
        let nk = self.cells.first().map_or(0, |c| c.beta.len());
        let mut cells: Vec<CoarseCell> =
            (0..n).map(|_| CoarseCell { center: vec![0.0; dim], sites: 0, beta: vec![0; nk] }).collect();
        for (idx, c) in self.cells.iter().enumerate() {
            let mut rest = idx;
            let mut parent = 0usize;
            let mut stride = 1usize;
            for j in 0..dim {
                let m = rest % self.cells_per_axis[j];
                rest /= self.cells_per_axis[j];
                parent += (m / 2) * stride;
                stride *= per[j];
            }
            let p = &mut cells[parent];
            p.sites += c.sites;
            for k in 0..nk {
                p.beta[k] += c.beta[k];
            }
        }
        let side = 2.0 * self.cell_sites as f64 * eps;
        let origin: Vec<f64> =
            (0..dim).map(|j| self.cells[0].center[j] - 0.5 * self.cell_sites as f64 * eps).collect();
        for (idx, c) in cells.iter_mut().enumerate() {
            let mut rest = idx;
            for j in 0..dim {
                let m = rest % per[j];
                rest /= per[j];
                c.center[j] = origin[j] + (m as f64 + 0.5) * side;
            }
        }
        Ok(CoarseGrid { cell_sites: 2 * self.cell_sites, cells_per_axis: per, cells })
    }

    /// The cell containing the macroscopic point x, if any.
    pub fn cell_at(&self, x: &[f64], eps: f64) -> Option<&CoarseCell> {
        let origin: Vec<f64> = (0..x.len())
            .map(|j| self.cells[0].center[j] - 0.5 * self.cell_sites as f64 * eps)
            .collect();
        let mut idx = 0usize;
        let mut stride = 1usize;
        for j in 0..x.len() {
            let m = ((x[j] - origin[j]) / (self.cell_sites as f64 * eps)).floor();
            if m < 0.0 || m as usize >= self.cells_per_axis[j] {
                return None;
            }
            idx += m as usize * stride;
            stride *= self.cells_per_axis[j];
        }
        self.cells.get(idx)
    }
}

/// Box-averaged beta fractions of a windowed field on cubes of `cell_sites`
/// sites aligned with the window corner.
pub fn coarse_grain_theta(local: &LocalField, cell_sites: usize) -> Result<CoarseGrid> {
    if cell_sites < 4 {
        return Err(Error::InvalidTarget("coarse cells must be at least 4 sites wide".into()));
    }
    let window = local
        .field
        .window()
        .ok_or_else(|| Error::Unsupported("coarse graining needs a windowed field".into()))?;
    let dim = local.dim();
    let nk = local.field.set().len();
    let per: Vec<usize> = (0..dim).map(|j| window.extent(j).div_ceil(cell_sites)).collect();
    let n: usize = per.iter().product();
    let mut cells: Vec<CoarseCell> = (0..n)
        .map(|idx| {
            let mut rest = idx;
            let center = (0..dim)
                .map(|j| {
                    let m = rest % per[j];
                    rest /= per[j];
                    (window.lo[j] as f64 + (m as f64 + 0.5) * cell_sites as f64) * local.eps
                })
                .collect();
            CoarseCell { center, sites: 0, beta: vec![0; nk] }
        })
        .collect();
    for site in window.sites() {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for j in 0..dim {
            idx += ((site.0[j] - window.lo[j]) as usize / cell_sites) * stride;
            stride *= per[j];
        }
        let c = &mut cells[idx];
        c.sites += 1;
        for k in 0..nk {
            if local.field.label(&site, k).is_beta() {
                c.beta[k] += 1;
            }
        }
    }
    Ok(CoarseGrid { cell_sites, cells_per_axis: per, cells })
}

/// Minimum ball value m(x, nu, rho) in lattice units (the cut value) and
/// the ball radius rho / eps.
fn local_cut(local: &LocalField, x: &[f64], nu: &FVec, rho: f64) -> Result<(Strength, f64)> {
    let dim = local.dim();
    if x.len() != dim {
        return Err(Error::InconsistentInput("probe point has the wrong dimension".into()));
    }
    let radius = rho / local.eps;
    if radius < 16.0 {
        return Err(Error::InvalidTarget(format!("rho / eps = {radius} is below 16")));
    }
    if let Some((lo, hi)) = &local.domain {
        if (0..dim).any(|j| x[j] - rho < lo[j] || x[j] + rho > hi[j]) {
            return Err(Error::OutOfDomain(format!("ball of radius {rho} around {x:?} leaves the domain")));
        }
    }
    Ok((ball_value(&local.field, &local.lattice_point(x), nu, radius)?, radius))
}

/// m-hat(x, nu, rho) / (w_{d-1} rho^{d-1}) with the oriented flat trace through x.
pub fn local_tension(local: &LocalField, x: &[f64], nu: &FVec, rho: f64) -> Result<f64> {
    let (cut, radius) = local_cut(local, x, nu, rho)?;
    Ok(strength_f64(&cut) / disc_area(local.dim(), radius))
}

#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub x: Vec<f64>,
    pub nu: Vec<f64>,
    pub rho: f64,
    pub value: f64,
    /// sum alpha |<nu, xi>| - slack
    pub lower: f64,
    /// sum (theta-hat beta + (1 - theta-hat) alpha) |<nu, xi>| + slack
    pub upper: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalReport {
    pub eps: f64,
    pub cells: CoarseGrid,
    pub probes: Vec<Probe>,
    /// Absolute slack used in the sandwich: c_slack / (rho / eps).
    pub c_slack: f64,
    pub passed: bool,
}

impl LocalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,nu,rho,value,lower,upper,ok\n");
        for p in &self.probes {
            let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.16e}")).collect::<Vec<_>>().join(" ");
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                fmt(&p.x),
                fmt(&p.nu),
                p.rho,
                p.value,
                p.lower,
                p.upper,
                p.ok
            ));
        }
        out
    }
}

/// Probes every cell center of the profile in each direction and checks
/// the local sandwich with the coarse-grained fractions of that cell.
pub fn localize(synth: &Synthesized, directions: &[FVec], rho: f64, c_slack: f64) -> Result<LocalReport> {
    let local = &synth.local;
    let set = local.field.set();
    let grid = coarse_grain_theta(local, synth.sites_per_cell)?;
    let jobs: Vec<(usize, FVec)> =
        (0..synth.profile.cell_count()).flat_map(|n| directions.iter().map(move |nu| (n, *nu))).collect();
    let probes = jobs
        .par_iter()
        .map(|(n, nu)| {
            let x = synth.profile.center(*n);
            let value = local_tension(local, &x, nu, rho)?;
            let cell = grid.cell_at(&x, local.eps).expect("cell centers lie in the grid");
            let theta = cell.theta_xi().expect("cells are nonempty");
            let slack = c_slack / (rho / local.eps);
            let upper: f64 = (0..set.len())
                .map(|k| {
                    let c = theta[k] * set.beta(k) + (Ratio::from_integer(1) - theta[k]) * set.alpha(k);
                    strength_f64(&c) * fdot(nu, &to_fvec(&set.direction(k))).abs()
                })
                .sum::<f64>()
                + slack;
            let lower = set.alpha_density(nu) - slack;
            Ok(Probe {
                x,
                nu: nu[..set.dim()].to_vec(),
                rho,
                value,
                lower,
                upper,
                ok: lower <= value && value <= upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = probes.iter().all(|p| p.ok);
    Ok(LocalReport { eps: local.eps, cells: grid, probes, c_slack, passed })
}

#[derive(Clone, Debug, Serialize)]
pub struct AngularRow {
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
    pub rho: f64,
    /// |m(nu1) - m(nu2)| / rho^{d-1}, macroscopic units.
    pub modulus: f64,
    /// c * arccos <nu1, nu2> + 8 eps / rho
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NestedRow {
    pub nu: Vec<f64>,
    pub rho1: f64,
    pub rho2: f64,
    pub m1: f64,
    pub m2: f64,
    /// Flat-trace energy on the bonds reached by the larger ball only.
    pub annulus: f64,
    /// m2 <= m1 + annulus, exact.
    pub exact_ok: bool,
    /// m2 <= m1 + c (rho2^{d-1} - rho1^{d-1}) + 8 eps rho2^{d-2}.
    pub geometric_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub x: Vec<f64>,
    pub constant: f64,
    pub angular: Vec<AngularRow>,
    pub nested: Vec<NestedRow>,
    pub passed: bool,
}

/// Empirical regularity of m(x, ., .): angular differences against
/// c arccos <nu1, nu2> + 8 eps / rho, and concentric balls against the
/// flat-interface energy of the annulus.
pub fn m_regularity_probe(
    local: &LocalField,
    x: &[f64],
    pairs: &[(FVec, FVec)],
    rhos: &[f64],
    constant: f64,
) -> Result<RegularityReport> {
    let dim = local.dim();
    let macro_m = |cut: &Strength| strength_f64(cut) * local.eps.powi(dim as i32 - 1);
    let mut angular = Vec::new();
    for (a, b) in pairs {
        for &rho in rhos {
            let (ca, _) = local_cut(local, x, a, rho)?;
            let (cb, _) = if a == b { (ca, 0.0) } else { local_cut(local, x, b, rho)? };
            let modulus = (macro_m(&ca) - macro_m(&cb)).abs() / rho.powi(dim as i32 - 1);
            let angle = fdot(a, b).clamp(-1.0, 1.0).acos();
            let bound = constant * angle + 8.0 * local.eps / rho;
            angular.push(AngularRow {
                nu1: a[..dim].to_vec(),
                nu2: b[..dim].to_vec(),
                rho,
                modulus,
                bound,
                ok: modulus <= bound,
            });
        }
    }
    let mut nested = Vec::new();
    let mut nus: Vec<FVec> = pairs.iter().map(|p| p.0).collect();
    nus.dedup();
    for nu in &nus {
        for w in rhos.windows(2) {
            let (r1, r2) = (w[0].min(w[1]), w[0].max(w[1]));
            if r1 == r2 {
                continue;
            }
            let (c1, _) = local_cut(local, x, nu, r1)?;
            let (c2, _) = local_cut(local, x, nu, r2)?;
            let ann = annulus_energy(local, x, nu, r1, r2);
            let geometric = macro_m(&c1)
                + constant * (r2.powi(dim as i32 - 1) - r1.powi(dim as i32 - 1))
                + 8.0 * local.eps * r2.powi(dim as i32 - 2);
            nested.push(NestedRow {
                nu: nu[..dim].to_vec(),
                rho1: r1,
                rho2: r2,
                m1: macro_m(&c1),
                m2: macro_m(&c2),
                annulus: macro_m(&ann),
                exact_ok: c2 <= c1 + ann,
                geometric_ok: macro_m(&c2) <= geometric,
            });
        }
    }
    let passed = angular.iter().all(|r| r.ok) && nested.iter().all(|r| r.exact_ok && r.geometric_ok);
    Ok(RegularityReport { x: x.to_vec(), constant, angular, nested, passed })
}

/// Energy of the oriented flat trace through x on bonds touching the ball
/// of radius r2 but not the ball of radius r1 (lattice units).
fn annulus_energy(local: &LocalField, x: &[f64], nu: &FVec, r1: f64, r2: f64) -> Strength {
    let dim = local.dim();
    let center = local.lattice_point(x);
    let trace = crate::lattice::HalfSpaceTrace::oriented(center, *nu);
    let inner: std::collections::HashSet<Site> = ball_sites(dim, &center, r1 / local.eps).into_iter().collect();
    let outer: std::collections::HashSet<Site> = ball_sites(dim, &center, r2 / local.eps).into_iter().collect();
    let set = local.field.set();
    let mut total = Strength::from_integer(0);
    let mut seen = std::collections::HashSet::new();
    for s in &outer {
        for k in 0..set.len() {
            let xi = set.direction(k);
            for base in [*s, *s - xi] {
                let end = base + xi;
                if inner.contains(&base) || inner.contains(&end) || !seen.insert((base, k)) {
                    continue;
                }
                if trace.value(&base) != trace.value(&end) {
                    total += local.field.strength(&base, k);
                }
            }
        }
    }
    total
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderEntry {
    pub sites_per_cell: usize,
    pub eps: f64,
    pub rho: f64,
    pub value: Option<f64>,
    pub skipped: Option<String>,
}

/// Local tension at cell `n`'s center over a range of lattice spacings,
/// with rho = rho_sites * eps. Entries whose ball leaves the cell's
/// patched cube are skipped; no limit is asserted.
pub fn epsilon_ladder(
    profile: &MacroProfile,
    set: &InteractionSet,
    delta: f64,
    n: usize,
    nu: &FVec,
    sites_per_cell: &[usize],
    rho_sites: f64,
) -> Result<Vec<LadderEntry>> {
    let mut out = Vec::new();
    for &s in sites_per_cell {
        let eps = profile.side() / s as f64;
        let rho = rho_sites * eps;
        if rho > 0.5 * profile.side() * (1.0 - delta) {
            out.push(LadderEntry { sites_per_cell: s, eps, rho, value: None, skipped: Some("ball leaves the cell".into()) });
            continue;
        }
        let synth = synthesize_field(profile, set, s, delta, None)?;
        let value = local_tension(&synth.local, &profile.center(n), nu, rho)?;
        out.push(LadderEntry { sites_per_cell: s, eps, rho, value: Some(value), skipped: None });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_field, volume_fractions, FieldKind};
    use proptest::prelude::*;

    fn nn() -> InteractionSet {
        InteractionSet::nearest_neighbor(2, Strength::from_integer(1), Strength::from_integer(3)).unwrap()
    }

    fn two_phase() -> MacroProfile {
        MacroProfile::new(2, vec![0.0, 0.0], vec![2.0, 1.0], 0, vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn profiles_validate() {
        assert!(MacroProfile::new(2, vec![0.0, 0.0], vec![1.5, 1.0], 0, vec![0.0]).is_err());
        assert!(MacroProfile::new(2, vec![0.0, 0.0], vec![1.0, 1.0], 1, vec![0.0; 3]).is_err());
        assert!(MacroProfile::new(2, vec![0.0, 0.0], vec![1.0, 1.0], 0, vec![1.5]).is_err());
        let p = MacroProfile::constant(2, vec![0.0, 0.0], vec![1.0, 1.0], 2, 0.5).unwrap();
        assert_eq!(p.cell_count(), 16);
        assert_eq!(p.center(5), vec![0.375, 0.375]);
    }

    #[test]
    fn constant_alpha_without_guards_is_periodic() {
        let p = MacroProfile::constant(2, vec![0.0, 0.0], vec![1.0, 1.0], 1, 0.0).unwrap();
        let s = synthesize_field(&p, &nn(), 8, 0.0, None).unwrap();
        let w = s.local.field.window().unwrap();
        assert!(w.sites().all(|site| (0..2).all(|k| s.local.field.label(&site, k) == Label::Alpha)));
        let g = synthesize_field(&p, &nn(), 8, 0.25, None).unwrap();
        let grid = coarse_grain_theta(&g.local, 8).unwrap();
        // Guards: the 8x8 cell keeps the sites with |r - 4| <= 3, i.e. r in 1..=7.
        for c in &grid.cells {
            assert_eq!(c.theta_xi().unwrap(), vec![Ratio::new(64 - 49, 64); 2]);
        }
    }

    #[test]
    fn extreme_phases() {
        let s = synthesize_field(&two_phase(), &nn(), 16, 0.1, None).unwrap();
        let grid = coarse_grain_theta(&s.local, 16).unwrap();
        let left = grid.cells[0].theta().unwrap();
        let right = grid.cells[1].theta().unwrap();
        assert_eq!(right, 1.0);
        assert!(left > 0.0 && left < 0.25);
        assert!(matches!(synthesize_field(&two_phase(), &nn(), 4, 0.1, None), Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn coarse_grain_examples() {
        let set = nn();
        let f = make_field(FieldKind::HomogeneousBeta, &set, 1).unwrap();
        let w = BoxWindow::cube(2, 0, 32);
        let labels = (0..2).map(|k| w.sites().map(|s| f.label(&s, k)).collect()).collect();
        let local = LocalField {
            field: BondField::windowed(set.clone(), w, labels, Label::Alpha).unwrap(),
            eps: 1.0 / 32.0,
            domain: Some((vec![0.0, 0.0], vec![1.0, 1.0])),
        };
        let g = coarse_grain_theta(&local, 8).unwrap();
        assert!(g.cells.iter().all(|c| c.theta() == Some(1.0)));
        // Checkerboard.
        let labels: Vec<Vec<Label>> = (0..2)
            .map(|_| w.sites().map(|s| if (s.0[0] + s.0[1]) % 2 == 0 { Label::Beta } else { Label::Alpha }).collect())
            .collect();
        let local = LocalField { field: local.field.with_labels(labels).unwrap(), ..local };
        let g = coarse_grain_theta(&local, 8).unwrap();
        assert!(g.cells.iter().all(|c| c.theta() == Some(0.5)));
        let odd = coarse_grain_theta(&local, 5).unwrap();
        assert_eq!(odd.cells_per_axis, vec![7, 7]);
        assert!(odd.cells.iter().all(|c| (c.theta().unwrap() - 0.5).abs() <= 0.5 / c.sites as f64 + 1e-15));
    }

    #[test]
    fn guards_shrink_the_fraction_error() {
        let p = MacroProfile::constant(2, vec![0.0, 0.0], vec![1.0, 1.0], 0, 0.5).unwrap();
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&d| {
                let s = synthesize_field(&p, &nn(), 64, d, None).unwrap();
                let g = coarse_grain_theta(&s.local, 64).unwrap();
                (g.cells[0].theta().unwrap() - 0.5).abs()
            })
            .collect();
        assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{errs:?}");
    }

    #[test]
    fn probes_respect_the_domain() {
        let s = synthesize_field(&two_phase(), &nn(), 64, 0.1, None).unwrap();
        let rho = 16.0 * s.local.eps;
        assert!(matches!(local_tension(&s.local, &[0.1, 0.5], &[1.0, 0.0, 0.0], rho), Err(Error::OutOfDomain(_))));
        assert!(matches!(local_tension(&s.local, &[0.5, 0.5], &[1.0, 0.0, 0.0], 8.0 * s.local.eps), Err(Error::InvalidTarget(_))));
        let a = local_tension(&s.local, &[0.5, 0.5], &[0.6, 0.8, 0.0], rho).unwrap();
        let b = local_tension(&s.local, &[0.5, 0.5], &[-0.6, -0.8, 0.0], rho).unwrap();
        assert_eq!(a, b);
        let right = local_tension(&s.local, &[1.5, 0.5], &[1.0, 0.0, 0.0], rho).unwrap();
        assert!((right - 3.0).abs() < 0.05 * 3.0, "{right}");
    }

    #[test]
    fn two_phase_sandwich() {
        let s = synthesize_field(&two_phase(), &nn(), 64, 0.1, None).unwrap();
        let dirs = crate::celltension::sweep_directions(8);
        let rep = localize(&s, &dirs, 16.0 * s.local.eps, 4.0).unwrap();
        assert!(rep.passed, "{:?}", rep.probes.iter().filter(|p| !p.ok).collect::<Vec<_>>());
        assert_eq!(rep.to_csv().lines().count(), 1 + 16);
    }

    #[test]
    fn regularity_on_a_homogeneous_field() {
        let set = nn();
        let f = make_field(FieldKind::HomogeneousAlpha, &set, 1).unwrap();
        let local = LocalField::periodic(f, 1.0 / 64.0);
        let nu = |a: f64| [a.cos(), a.sin(), 0.0];
        let pairs = vec![(nu(0.3), nu(0.3)), (nu(0.0), nu(0.2)), (nu(0.5), nu(1.2))];
        let c = 4.0 * 2.0 * 3.0;
        let rep = m_regularity_probe(&local, &[0.0, 0.0], &pairs, &[0.25, 0.375, 0.5], c).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.angular.iter().filter(|r| r.nu1 == r.nu2).all(|r| r.modulus == 0.0));
    }

    #[test]
    fn ladder_skips_large_balls() {
        let p = MacroProfile::constant(2, vec![0.0, 0.0], vec![1.0, 1.0], 0, 0.0).unwrap();
        let l = epsilon_ladder(&p, &nn(), 0.1, 0, &[1.0, 0.0, 0.0], &[16, 64], 16.0).unwrap();
        assert!(l[0].skipped.is_some());
        assert!((l[1].value.unwrap() - 1.0).abs() < 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn refinement_is_additive(seed in 0u64..10_000, period in 1usize..5) {
            let set = nn();
            let f = make_field(FieldKind::Random { fractions: vec![0.4, 0.6], seed }, &set, period).unwrap();
            let w = BoxWindow::cube(2, 0, 32);
            let labels = (0..2).map(|k| w.sites().map(|s| f.label(&s, k)).collect()).collect();
            let local = LocalField {
                field: BondField::windowed(set.clone(), w, labels, Label::Alpha).unwrap(),
                eps: 1.0 / 32.0,
                domain: None,
            };
            let fine = coarse_grain_theta(&local, 4).unwrap();
            let coarse = coarse_grain_theta(&local, 8).unwrap();
            prop_assert_eq!(fine.coarsen(local.eps).unwrap(), coarse.clone());
            // The whole window reproduces the periodic fractions when the period divides it.
            if 32 % period == 0 {
                let all = coarse_grain_theta(&local, 32).unwrap();
                prop_assert_eq!(all.cells[0].theta_xi().unwrap(), volume_fractions(&f).unwrap().per_direction);
            }
        }
    }
}
