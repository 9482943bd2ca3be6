//! Lattice vocabulary shared by every other module: interaction sets,
//! two-valued bond fields, spin states, half-space traces, the interface
//! energy and volume fractions.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// Integer vector; coordinates past the lattice dimension are zero.
pub type IVec = [i64; MAX_DIM];

/// Real vector; coordinates past the lattice dimension are zero.
pub type FVec = [f64; MAX_DIM];

/// Exact bond strength (energy per broken bond).
pub type Strength = Ratio<i64>;

pub fn idot(a: &IVec, b: &IVec) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn fdot(a: &FVec, b: &FVec) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn to_fvec(v: &IVec) -> FVec {
    [v[0] as f64, v[1] as f64, v[2] as f64]
}

pub fn fnorm(v: &FVec) -> f64 {
    fdot(v, v).sqrt()
}

pub fn inorm(v: &IVec) -> f64 {
    (idot(v, v) as f64).sqrt()
}

pub fn ineg(v: &IVec) -> IVec {
    [-v[0], -v[1], -v[2]]
}

/// Pads a slice of at most [`MAX_DIM`] coordinates into a fixed vector.
pub fn fvec(coords: &[f64]) -> FVec {
    let mut out = [0.0; MAX_DIM];
    out[..coords.len()].copy_from_slice(coords);
    out
}

pub fn ivec(coords: &[i64]) -> IVec {
    let mut out = [0; MAX_DIM];
    out[..coords.len()].copy_from_slice(coords);
    out
}

/// True when the first nonzero coordinate (beyond `tol`) is positive.
pub fn lex_positive(v: &FVec, tol: f64) -> bool {
    for &c in v {
        if c > tol {
            return true;
        }
        if c < -tol {
            return false;
        }
    }
    false
}

pub fn strength_f64(s: &Strength) -> f64 {
    s.to_f64().unwrap_or(f64::NAN)
}

/// A lattice point of Z^d.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct Site(pub IVec);

impl Site {
    pub fn new(coords: &[i64]) -> Self {
        Site(ivec(coords))
    }

    pub fn origin() -> Self {
        Site([0; MAX_DIM])
    }

    pub fn to_fvec(&self) -> FVec {
        to_fvec(&self.0)
    }
}

impl Add<IVec> for Site {
    type Output = Site;
    fn add(self, rhs: IVec) -> Site {
        Site([self.0[0] + rhs[0], self.0[1] + rhs[1], self.0[2] + rhs[2]])
    }
}

impl Sub<IVec> for Site {
    type Output = Site;
    fn sub(self, rhs: IVec) -> Site {
        Site([self.0[0] - rhs[0], self.0[1] - rhs[1], self.0[2] - rhs[2]])
    }
}

/// The finite range set V with per-direction strengths alpha < beta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSet {
    dim: usize,
    directions: Vec<IVec>,
    alpha: Vec<Strength>,
    beta: Vec<Strength>,
}

impl InteractionSet {
    pub fn new(dim: usize, directions: Vec<IVec>, alpha: Vec<Strength>, beta: Vec<Strength>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInteractionSet(format!("dimension {dim} not in 1..={MAX_DIM}")));
        }
        if directions.len() != alpha.len() || directions.len() != beta.len() {
            return Err(Error::InvalidInteractionSet(format!(
                "{} directions but {} alpha and {} beta values",
                directions.len(),
                alpha.len(),
                beta.len()
            )));
        }
        for (k, xi) in directions.iter().enumerate() {
            if xi.iter().skip(dim).any(|&c| c != 0) {
                return Err(Error::InvalidInteractionSet(format!("direction {xi:?} exceeds dimension {dim}")));
            }
            if xi.iter().all(|&c| c == 0) {
                return Err(Error::InvalidInteractionSet("zero direction".into()));
            }
            if directions[..k].contains(xi) {
                return Err(Error::InvalidInteractionSet(format!("duplicate direction {xi:?}")));
            }
            if alpha[k] <= Strength::zero() || alpha[k] >= beta[k] {
                return Err(Error::InvalidInteractionSet(format!(
                    "need 0 < alpha < beta for {xi:?}, got alpha={} beta={}",
                    alpha[k], beta[k]
                )));
            }
        }
        for j in 0..dim {
            let mut e = [0; MAX_DIM];
            e[j] = 1;
            if !directions.contains(&e) {
                return Err(Error::InvalidInteractionSet(format!("missing basis vector e_{}", j + 1)));
            }
        }
        Ok(Self { dim, directions, alpha, beta })
    }

    /// Nearest neighbours with direction-independent strengths.
    pub fn nearest_neighbor(dim: usize, alpha: Strength, beta: Strength) -> Result<Self> {
        let directions = (0..dim)
            .map(|j| {
                let mut e = [0; MAX_DIM];
                e[j] = 1;
                e
            })
            .collect::<Vec<_>>();
        let n = directions.len();
        Self::new(dim, directions, vec![alpha; n], vec![beta; n])
    }

    /// Two-dimensional nearest and next-to-nearest neighbours:
    /// V = {e1, e2, e1+e2, e1-e2}.
    pub fn nn_diagonal(alpha: Strength, beta: Strength) -> Result<Self> {
        let directions = vec![[1, 0, 0], [0, 1, 0], [1, 1, 0], [1, -1, 0]];
        Self::new(2, directions, vec![alpha; 4], vec![beta; 4])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[IVec] {
        &self.directions
    }

    pub fn direction(&self, k: usize) -> IVec {
        self.directions[k]
    }

    pub fn alpha(&self, k: usize) -> Strength {
        self.alpha[k]
    }

    pub fn beta(&self, k: usize) -> Strength {
        self.beta[k]
    }

    pub fn alphas(&self) -> &[Strength] {
        &self.alpha
    }

    pub fn betas(&self) -> &[Strength] {
        &self.beta
    }

    pub fn strength(&self, k: usize, label: Label) -> Strength {
        match label {
            Label::Alpha => self.alpha[k],
            Label::Beta => self.beta[k],
        }
    }

    pub fn index_of(&self, xi: &IVec) -> Option<usize> {
        self.directions.iter().position(|d| d == xi)
    }

    /// Interaction range max_xi ||xi||_inf.
    pub fn range(&self) -> i64 {
        self.directions
            .iter()
            .map(|d| d.iter().map(|c| c.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// sum_xi c_xi |<nu, xi>| for per-direction coefficients.
    pub fn crystalline(&self, coeffs: &[f64], nu: &FVec) -> f64 {
        self.directions
            .iter()
            .zip(coeffs)
            .map(|(xi, c)| c * fdot(nu, &to_fvec(xi)).abs())
            .sum()
    }

    /// The trivial lower bound sum_xi alpha_xi |<nu, xi>|.
    pub fn alpha_density(&self, nu: &FVec) -> f64 {
        let c: Vec<f64> = self.alpha.iter().map(strength_f64).collect();
        self.crystalline(&c, nu)
    }

    /// The trivial upper bound sum_xi beta_xi |<nu, xi>|.
    pub fn beta_density(&self, nu: &FVec) -> f64 {
        let c: Vec<f64> = self.beta.iter().map(strength_f64).collect();
        self.crystalline(&c, nu)
    }

    /// Least common denominator of all strengths.
    pub fn common_denominator(&self) -> i64 {
        self.alpha
            .iter()
            .chain(self.beta.iter())
            .fold(1i64, |acc, s| num_integer::lcm(acc, *s.denom()))
    }
}

/// Two-valued bond label.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Label {
    Alpha,
    Beta,
}

impl Label {
    pub fn is_beta(self) -> bool {
        self == Label::Beta
    }
}

/// Ising spin.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Spin {
    Minus,
    Plus,
}

impl Spin {
    pub fn value(self) -> i8 {
        match self {
            Spin::Minus => -1,
            Spin::Plus => 1,
        }
    }
}

impl Neg for Spin {
    type Output = Spin;
    fn neg(self) -> Spin {
        match self {
            Spin::Minus => Spin::Plus,
            Spin::Plus => Spin::Minus,
        }
    }
}

/// Half-open axis-aligned box `lo <= i < hi` in Z^d.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BoxWindow {
    pub dim: usize,
    pub lo: IVec,
    pub hi: IVec,
}

impl BoxWindow {
    pub fn new(dim: usize, lo: IVec, hi: IVec) -> Self {
        let mut lo = lo;
        let mut hi = hi;
        for j in dim..MAX_DIM {
            lo[j] = 0;
            hi[j] = 1;
        }
        Self { dim, lo, hi }
    }

    /// The cube [lo, hi)^d.
    pub fn cube(dim: usize, lo: i64, hi: i64) -> Self {
        Self::new(dim, [lo; MAX_DIM], [hi; MAX_DIM])
    }

    /// Smallest box containing all the given sites.
    pub fn bounding(dim: usize, sites: &[Site]) -> Self {
        if sites.is_empty() {
            return Self::new(dim, [0; MAX_DIM], [0; MAX_DIM]);
        }
        let mut lo = [i64::MAX; MAX_DIM];
        let mut hi = [i64::MIN; MAX_DIM];
        for s in sites {
            for j in 0..dim {
                lo[j] = lo[j].min(s.0[j]);
                hi[j] = hi[j].max(s.0[j] + 1);
            }
        }
        Self::new(dim, lo, hi)
    }

    pub fn extent(&self, j: usize) -> usize {
        (self.hi[j] - self.lo[j]).max(0) as usize
    }

    pub fn len(&self) -> usize {
        (0..MAX_DIM).map(|j| self.extent(j)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: &Site) -> bool {
        (0..MAX_DIM).all(|j| s.0[j] >= self.lo[j] && s.0[j] < self.hi[j])
    }

    /// Row-major index with the first coordinate varying fastest.
    pub fn index(&self, s: &Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let mut idx = 0usize;
        for j in (0..MAX_DIM).rev() {
            idx = idx * self.extent(j) + (s.0[j] - self.lo[j]) as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> Site {
        let mut c = [0; MAX_DIM];
        for j in 0..MAX_DIM {
            let n = self.extent(j);
            c[j] = self.lo[j] + (idx % n) as i64;
            idx /= n;
        }
        Site(c)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |k| self.site(k))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    Periodic { period: usize },
    Window { window: BoxWindow, outside: Label },
}

/// An assignment of alpha/beta labels to every (site, direction) pair,
/// either periodic with period T or explicit on a finite window.
#[derive(Clone, Debug, PartialEq)]
pub struct BondField {
    set: InteractionSet,
    layout: Layout,
    /// `labels[k][idx]` for direction k, site index in the cell or window.
    labels: Vec<Vec<Label>>,
}

impl BondField {
    /// A periodic field from explicit per-direction label blocks of length T^d.
    pub fn periodic(set: InteractionSet, period: usize, labels: Vec<Vec<Label>>) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidTarget("period must be at least 1".into()));
        }
        let cell = period.pow(set.dim() as u32);
        if labels.len() != set.len() || labels.iter().any(|l| l.len() != cell) {
            return Err(Error::InvalidTarget(format!(
                "expected {} blocks of {cell} labels",
                set.len()
            )));
        }
        Ok(Self { set, layout: Layout::Periodic { period }, labels })
    }

    /// A non-periodic field given on `window`, with `outside` everywhere else.
    pub fn windowed(set: InteractionSet, window: BoxWindow, labels: Vec<Vec<Label>>, outside: Label) -> Result<Self> {
        if labels.len() != set.len() || labels.iter().any(|l| l.len() != window.len()) {
            return Err(Error::InvalidTarget(format!(
                "expected {} blocks of {} labels",
                set.len(),
                window.len()
            )));
        }
        Ok(Self { set, layout: Layout::Window { window, outside }, labels })
    }

    pub fn set(&self) -> &InteractionSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.layout, Layout::Periodic { .. })
    }

    pub fn period(&self) -> Option<usize> {
        match self.layout {
            Layout::Periodic { period } => Some(period),
            Layout::Window { .. } => None,
        }
    }

    pub fn window(&self) -> Option<BoxWindow> {
        match self.layout {
            Layout::Periodic { .. } => None,
            Layout::Window { window, .. } => Some(window),
        }
    }

    /// Label of every bond outside the window of a windowed field.
    pub fn outside_label(&self) -> Option<Label> {
        match self.layout {
            Layout::Periodic { .. } => None,
            Layout::Window { outside, .. } => Some(outside),
        }
    }

    /// Raw label blocks (cell order for periodic fields, window order otherwise).
    pub fn label_blocks(&self) -> &[Vec<Label>] {
        &self.labels
    }

    fn cell_index(&self, s: &Site, period: usize) -> usize {
        let t = period as i64;
        let mut idx = 0usize;
        for j in (0..self.dim()).rev() {
            idx = idx * period + s.0[j].rem_euclid(t) as usize;
        }
        idx
    }

    pub fn label(&self, s: &Site, k: usize) -> Label {
        match &self.layout {
            Layout::Periodic { period } => self.labels[k][self.cell_index(s, *period)],
            Layout::Window { window, outside } => match window.index(s) {
                Some(idx) => self.labels[k][idx],
                None => *outside,
            },
        }
    }

    /// c_{s, xi_k}; always alpha_k or beta_k.
    pub fn strength(&self, s: &Site, k: usize) -> Strength {
        self.set.strength(k, self.label(s, k))
    }

    /// The same geometry with new label blocks.
    pub fn with_labels(&self, labels: Vec<Vec<Label>>) -> Result<Self> {
        match &self.layout {
            Layout::Periodic { period } => Self::periodic(self.set.clone(), *period, labels),
            Layout::Window { window, outside } => Self::windowed(self.set.clone(), *window, labels, *outside),
        }
    }

    /// The periodic field translated by `shift`: c'_{i} = c_{i - shift}.
    pub fn translated(&self, shift: IVec) -> Result<Self> {
        let period = self
            .period()
            .ok_or_else(|| Error::Unsupported("translation is defined for periodic fields".into()))?;
        let cell = BoxWindow::cube(self.dim(), 0, period as i64);
        let labels = (0..self.set.len())
            .map(|k| cell.sites().map(|s| self.label(&(s - shift), k)).collect())
            .collect();
        Self::periodic(self.set.clone(), period, labels)
    }

    /// The same field re-expressed with period `multiple * T`.
    pub fn repeated(&self, multiple: usize) -> Result<Self> {
        let period = self
            .period()
            .ok_or_else(|| Error::Unsupported("repetition is defined for periodic fields".into()))?;
        let big = period * multiple;
        let cell = BoxWindow::cube(self.dim(), 0, big as i64);
        let labels = (0..self.set.len())
            .map(|k| cell.sites().map(|s| self.label(&s, k)).collect())
            .collect();
        Self::periodic(self.set.clone(), big, labels)
    }
}

/// Spin values on a finite window.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinState {
    window: BoxWindow,
    values: Vec<Spin>,
}

impl SpinState {
    pub fn constant(window: BoxWindow, spin: Spin) -> Self {
        Self { values: vec![spin; window.len()], window }
    }

    /// The trace restricted to the window.
    pub fn from_trace(window: BoxWindow, trace: &HalfSpaceTrace) -> Self {
        let values = window.sites().map(|s| trace.value(&s)).collect();
        Self { window, values }
    }

    pub fn from_values(window: BoxWindow, values: Vec<Spin>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::InvalidTarget(format!(
                "{} values for a window of {} sites",
                values.len(),
                window.len()
            )));
        }
        Ok(Self { window, values })
    }

    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    pub fn get(&self, s: &Site) -> Option<Spin> {
        self.window.index(s).map(|i| self.values[i])
    }

    pub fn set(&mut self, s: &Site, spin: Spin) {
        if let Some(i) = self.window.index(s) {
            self.values[i] = spin;
        }
    }

    pub fn values(&self) -> &[Spin] {
        &self.values
    }

    pub fn flipped(&self) -> Self {
        Self { window: self.window, values: self.values.iter().map(|&s| -s).collect() }
    }
}

/// The boundary datum u_{x,nu}: +1 strictly above the hyperplane through
/// `center` with normal `normal`, -1 strictly below, and `on_plane` on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceTrace {
    pub center: FVec,
    pub normal: FVec,
    pub on_plane: Spin,
}

const PLANE_TOL: f64 = 1e-10;

impl HalfSpaceTrace {
    /// Strict convention: sites on the hyperplane evaluate to -1.
    pub fn new(center: FVec, normal: FVec) -> Self {
        Self { center, normal, on_plane: Spin::Minus }
    }

    /// Orientation-antisymmetric convention: hyperplane sites take -1 when
    /// `normal` is lexicographically positive and +1 otherwise, so that the
    /// trace for -nu is exactly the negation of the trace for nu.
    pub fn oriented(center: FVec, normal: FVec) -> Self {
        let on_plane = if lex_positive(&normal, PLANE_TOL) { Spin::Minus } else { Spin::Plus };
        Self { center, normal, on_plane }
    }

    /// The negated trace: same plane, opposite normal and tie value.
    pub fn flipped(&self) -> Self {
        Self {
            center: self.center,
            normal: [-self.normal[0], -self.normal[1], -self.normal[2]],
            on_plane: -self.on_plane,
        }
    }

    /// Signed offset <y - x, nu> of a site.
    pub fn offset(&self, s: &Site) -> f64 {
        let y = s.to_fvec();
        let d = [y[0] - self.center[0], y[1] - self.center[1], y[2] - self.center[2]];
        fdot(&d, &self.normal)
    }

    pub fn value(&self, s: &Site) -> Spin {
        let y = s.to_fvec();
        let d = [y[0] - self.center[0], y[1] - self.center[1], y[2] - self.center[2]];
        let off = fdot(&d, &self.normal);
        let scale = 1.0 + fnorm(&d);
        if off.abs() <= PLANE_TOL * scale {
            self.on_plane
        } else if off > 0.0 {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }
}

/// Which bonds a region owns when summing the interface energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BondScope {
    /// Bonds (i, i + xi) with the base site i in the region.
    Based,
    /// Bonds with at least one endpoint in the region.
    Touching,
}

/// Interface energy (1/4) sum c_{i,xi} (u_i - u_{i+xi})^2 over the bonds the
/// region owns; each broken bond contributes exactly c_{i,xi}.
///
/// Values at sites outside the state window come from `trace`.
pub fn evaluate_energy(
    field: &BondField,
    state: &SpinState,
    trace: &HalfSpaceTrace,
    region: &[Site],
    scope: BondScope,
) -> Result<Strength> {
    let window = state.window();
    let mut in_region = vec![false; window.len()];
    for s in region {
        match window.index(s) {
            Some(i) => in_region[i] = true,
            None => return Err(Error::RegionOutsideWindow(format!("site {:?}", s.0))),
        }
    }
    let value = |s: &Site| state.get(s).unwrap_or_else(|| trace.value(s));
    let owned = |s: &Site| window.index(s).map(|i| in_region[i]).unwrap_or(false);
    let set = field.set();
    let mut total = Strength::zero();
    for (idx, &inside) in in_region.iter().enumerate() {
        if !inside {
            continue;
        }
        let s = window.site(idx);
        let us = value(&s);
        for (k, xi) in set.directions().iter().enumerate() {
            let fwd = s + *xi;
            if value(&fwd) != us {
                total += field.strength(&s, k);
            }
            if scope == BondScope::Touching {
                let back = s - *xi;
                if !owned(&back) && value(&back) != us {
                    total += field.strength(&back, k);
                }
            }
        }
    }
    Ok(total)
}

/// Per-direction and total volume fractions of beta bonds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeFractions {
    pub per_direction: Vec<Ratio<i64>>,
    pub total: Ratio<i64>,
}

impl VolumeFractions {
    pub fn from_per_direction(per_direction: Vec<Ratio<i64>>) -> Self {
        let n = per_direction.len().max(1) as i64;
        let sum = per_direction.iter().fold(Ratio::zero(), |a, b| a + b);
        Self { total: sum / n, per_direction }
    }

    pub fn total_f64(&self) -> f64 {
        strength_f64(&self.total)
    }

    pub fn per_direction_f64(&self) -> Vec<f64> {
        self.per_direction.iter().map(strength_f64).collect()
    }
}

pub fn volume_fractions(field: &BondField) -> Result<VolumeFractions> {
    let period = field
        .period()
        .ok_or_else(|| Error::Unsupported("volume fractions need a periodic field; coarse-grain windowed fields".into()))?;
    let cell = period.pow(field.dim() as u32) as i64;
    let per = field
        .label_blocks()
        .iter()
        .map(|block| Ratio::new(block.iter().filter(|l| l.is_beta()).count() as i64, cell))
        .collect();
    Ok(VolumeFractions::from_per_direction(per))
}

/// Recipes for periodic fields.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    HomogeneousAlpha,
    HomogeneousBeta,
    /// Layers normal to `axis`; for direction k the beta labels occupy the
    /// layers with `i_axis mod T` in `[T - beta_width[k], T)`.
    Laminate { axis: usize, beta_width: Vec<usize> },
    /// Exactly round(T^d theta_k) beta labels per direction, placed by a
    /// seeded ChaCha generator.
    Random { fractions: Vec<f64>, seed: u64 },
    Explicit(Vec<Vec<Label>>),
}

pub fn make_field(kind: FieldKind, set: &InteractionSet, period: usize) -> Result<BondField> {
    if period == 0 {
        return Err(Error::InvalidTarget("period must be at least 1".into()));
    }
    let dim = set.dim();
    let cell = period.pow(dim as u32);
    let n = set.len();
    let labels = match kind {
        FieldKind::HomogeneousAlpha => vec![vec![Label::Alpha; cell]; n],
        FieldKind::HomogeneousBeta => vec![vec![Label::Beta; cell]; n],
        FieldKind::Laminate { axis, beta_width } => {
            if axis >= dim {
                return Err(Error::InvalidTarget(format!("laminate axis {axis} outside dimension {dim}")));
            }
            if beta_width.len() != n || beta_width.iter().any(|&w| w > period) {
                return Err(Error::InvalidTarget("laminate widths must be given per direction and fit in T".into()));
            }
            let window = BoxWindow::cube(dim, 0, period as i64);
            beta_width
                .iter()
                .map(|&w| {
                    window
                        .sites()
                        .map(|s| if s.0[axis] as usize >= period - w { Label::Beta } else { Label::Alpha })
                        .collect()
                })
                .collect()
        }
        FieldKind::Random { fractions, seed } => {
            if fractions.len() != n {
                return Err(Error::InvalidTarget(format!("{} fractions for {n} directions", fractions.len())));
            }
            if let Some(bad) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                return Err(Error::InvalidTarget(format!("volume fraction {bad} outside [0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            fractions
                .iter()
                .map(|&f| {
                    let count = (f * cell as f64).round() as usize;
                    let mut block = vec![Label::Alpha; cell];
                    for idx in sample(&mut rng, cell, count.min(cell)) {
                        block[idx] = Label::Beta;
                    }
                    block
                })
                .collect()
        }
        FieldKind::Explicit(labels) => labels,
    };
    BondField::periodic(set.clone(), period, labels)
}

/// Z^d intersected with the open ball |y - center| < radius.
pub fn ball_sites(dim: usize, center: &FVec, radius: f64) -> Vec<Site> {
    let lo: Vec<i64> = (0..dim).map(|j| (center[j] - radius).floor() as i64 - 1).collect();
    let hi: Vec<i64> = (0..dim).map(|j| (center[j] + radius).ceil() as i64 + 2).collect();
    let window = BoxWindow::new(dim, ivec(&lo), ivec(&hi));
    let r2 = radius * radius;
    window
        .sites()
        .filter(|s| {
            let y = s.to_fvec();
            let d2: f64 = (0..dim).map(|j| (y[j] - center[j]).powi(2)).sum();
            d2 < r2
        })
        .collect()
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Alpha => "0",
            Label::Beta => "1",
        })
    }
}
