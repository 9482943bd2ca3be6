//! Exact ground states of pinned Ising problems via minimum s-t cuts.
//!
//! A broken bond between spins costs its strength, so the interface energy
//! of a binary configuration is a cut in the graph whose nodes are the free
//! sites. Sites outside the region are folded into terminal capacities.
//! Capacities are rational; the solver rescales them to integers so values
//! are exact.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    ball_sites, BondField, BondScope, BoxWindow, FVec, HalfSpaceTrace, Site, Spin, SpinState, Strength,
};

/// Lattice geometry attached to an instance built from a field.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub window: BoxWindow,
    pub sites: Vec<Site>,
    pub trace: HalfSpaceTrace,
}

/// A binary pairwise problem: minimize over spins the sum of broken
/// undirected edges plus unary terminal costs.
///
/// Node v in state Minus pays `source_cap[v]`, in state Plus pays
/// `sink_cap[v]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutInstance {
    pub node_count: usize,
    pub edges: Vec<(usize, usize, Strength)>,
    pub source_cap: Vec<Strength>,
    pub sink_cap: Vec<Strength>,
    pub pins: Vec<Option<Spin>>,
    pub embedding: Option<Embedding>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub pushes: usize,
    pub relabels: usize,
    /// Assignments visited by exhaustive enumeration.
    pub enumerated: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutResult {
    /// Exact minimum energy.
    pub value: Strength,
    pub spins: Vec<Spin>,
    /// Optimal configuration on the embedding window (trace outside the region).
    pub state: Option<SpinState>,
    pub stats: SolverStats,
}

impl CutResult {
    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

impl CutInstance {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
            source_cap: vec![Strength::zero(); node_count],
            sink_cap: vec![Strength::zero(); node_count],
            pins: vec![None; node_count],
            embedding: None,
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cap: Strength) {
        self.edges.push((u, v, cap));
    }

    /// Adds the cost of `v` disagreeing with a fixed neighbour of spin `other`.
    pub fn add_fixed_neighbor(&mut self, v: usize, other: Spin, cap: Strength) {
        match other {
            Spin::Plus => self.source_cap[v] += cap,
            Spin::Minus => self.sink_cap[v] += cap,
        }
    }

    pub fn pin(&mut self, v: usize, spin: Spin) {
        self.pins[v] = Some(spin);
    }

    /// Every capacity multiplied by `factor`.
    pub fn scaled(&self, factor: Strength) -> Self {
        let mut out = self.clone();
        for e in &mut out.edges {
            e.2 *= factor;
        }
        for c in out.source_cap.iter_mut().chain(out.sink_cap.iter_mut()) {
            *c *= factor;
        }
        out
    }

    /// Energy of an explicit assignment (pins ignored).
    pub fn energy(&self, spins: &[Spin]) -> Strength {
        let mut total = Strength::zero();
        for &(u, v, c) in &self.edges {
            if spins[u] != spins[v] {
                total += c;
            }
        }
        for (v, s) in spins.iter().enumerate() {
            total += match s {
                Spin::Minus => self.source_cap[v],
                Spin::Plus => self.sink_cap[v],
            };
        }
        total
    }

    fn check(&self) -> Result<()> {
        let neg = |c: &Strength| *c < Strength::zero();
        if self.edges.iter().any(|e| neg(&e.2) || e.0 >= self.node_count || e.1 >= self.node_count)
            || self.source_cap.iter().chain(self.sink_cap.iter()).any(neg)
        {
            return Err(Error::CapacityAccounting("negative capacity or dangling edge".into()));
        }
        Ok(())
    }

    fn scale(&self) -> Result<i64> {
        let mut l = 1i64;
        for c in self.edges.iter().map(|e| &e.2).chain(self.source_cap.iter()).chain(self.sink_cap.iter()) {
            l = num_integer::lcm(l, *c.denom());
        }
        Ok(l)
    }

    /// Text dump: node count (terminals 0 = source, 1 = sink, site k is
    /// node k + 2), then one `u v cap` line per arc with exact capacities.
    /// Undirected edges appear once; pins appear with their pin capacity.
    pub fn dump(&self) -> String {
        let total: Strength = self
            .edges
            .iter()
            .map(|e| e.2)
            .chain(self.source_cap.iter().copied())
            .chain(self.sink_cap.iter().copied())
            .fold(Strength::zero(), |a, b| a + b);
        let pin_cap = total + Strength::from_integer(1);
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.node_count + 2);
        for v in 0..self.node_count {
            let (mut s, mut t) = (self.source_cap[v], self.sink_cap[v]);
            match self.pins[v] {
                Some(Spin::Plus) => s += pin_cap,
                Some(Spin::Minus) => t += pin_cap,
                None => {}
            }
            if !s.is_zero() {
                let _ = writeln!(out, "0 {} {}", v + 2, s);
            }
            if !t.is_zero() {
                let _ = writeln!(out, "{} 1 {}", v + 2, t);
            }
        }
        for &(u, v, c) in &self.edges {
            let _ = writeln!(out, "{} {} {}", u + 2, v + 2, c);
        }
        out
    }
}

/// Builds the cut instance for minimizing the energy of `region` with all
/// other sites fixed to `trace`.
///
/// Bonds are owned according to `scope`; bonds with both endpoints outside
/// the region never enter.
pub fn build_instance(
    field: &BondField,
    region: &[Site],
    trace: &HalfSpaceTrace,
    scope: BondScope,
) -> Result<CutInstance> {
    let set = field.set();
    let dim = field.dim();
    let mut window = BoxWindow::bounding(dim, region);
    let pad = set.range();
    for j in 0..dim {
        window.lo[j] -= pad;
        window.hi[j] += pad;
    }
    let mut index = vec![usize::MAX; window.len()];
    let mut sites = Vec::with_capacity(region.len());
    for s in region {
        let w = window.index(s).expect("padded bounding box contains the region");
        if index[w] == usize::MAX {
            index[w] = sites.len();
            sites.push(*s);
        }
    }
    let node_of = |s: &Site| window.index(s).map(|w| index[w]).filter(|&v| v != usize::MAX);
    let mut inst = CutInstance::new(sites.len());
    for (v, s) in sites.iter().enumerate() {
        for (k, xi) in set.directions().iter().enumerate() {
            let fwd = *s + *xi;
            let c = field.strength(s, k);
            match node_of(&fwd) {
                Some(w) => inst.add_edge(v, w, c),
                None => inst.add_fixed_neighbor(v, trace.value(&fwd), c),
            }
            if scope == BondScope::Touching {
                let back = *s - *xi;
                if node_of(&back).is_none() {
                    inst.add_fixed_neighbor(v, trace.value(&back), field.strength(&back, k));
                }
            }
        }
    }
    inst.embedding = Some(Embedding { window, sites, trace: *trace });
    Ok(inst)
}

/// The pinned ball problem on Z^d ∩ B_R(center) with every bond touching
/// the ball counted.
pub fn ball_instance(field: &BondField, center: &FVec, radius: f64, trace: &HalfSpaceTrace) -> Result<CutInstance> {
    let range = field.set().range() as f64;
    if !(radius > range) {
        return Err(Error::DegenerateRegion(format!("radius {radius} does not exceed the interaction range {range}")));
    }
    let region = ball_sites(field.dim(), center, radius);
    build_instance(field, &region, trace, BondScope::Touching)
}

/// Residual network for integer max flow in compressed adjacency form.
struct Network {
    head: Vec<usize>,
    to: Vec<u32>,
    cap: Vec<i64>,
    rev: Vec<usize>,
}

impl Network {
    /// Arcs are `(u, v, cap, reverse cap)`.
    fn new(nodes: usize, arcs: &[(usize, usize, i64, i64)]) -> Self {
        let mut head = vec![0usize; nodes + 1];
        for &(u, v, _, _) in arcs {
            head[u + 1] += 1;
            head[v + 1] += 1;
        }
        for v in 0..nodes {
            head[v + 1] += head[v];
        }
        let m = head[nodes];
        let mut fill = head.clone();
        let mut to = vec![0u32; m];
        let mut cap = vec![0i64; m];
        let mut rev = vec![0usize; m];
        for &(u, v, c, rc) in arcs {
            let a = fill[u];
            fill[u] += 1;
            let b = fill[v];
            fill[v] += 1;
            to[a] = v as u32;
            cap[a] = c;
            to[b] = u as u32;
            cap[b] = rc;
            rev[a] = b;
            rev[b] = a;
        }
        Self { head, to, cap, rev }
    }
}

/// Highest-label push-relabel (preflow phase only) with periodic global
/// relabelling and the gap heuristic. Node `n` is the source, `n + 1` the
/// sink. Returns the flow value and, per node, whether it lies on the source
/// side of the minimum cut (cannot reach the sink in the final residual).
fn max_flow(n: usize, terminal: &[i64], arcs: &[(usize, usize, i64, i64)]) -> (i64, Vec<bool>, SolverStats) {
    let s = n;
    let t = n + 1;
    let total = n + 2;
    let mut all = Vec::with_capacity(arcs.len() + n);
    for (v, &c) in terminal.iter().enumerate() {
        if c > 0 {
            all.push((s, v, c, 0));
        } else if c < 0 {
            all.push((v, t, -c, 0));
        }
    }
    all.extend_from_slice(arcs);
    let Network { head, to, mut cap, rev } = Network::new(total, &all);
    let mut stats = SolverStats::default();

    let mut excess = vec![0i64; total];
    let mut height = vec![0usize; total];
    let mut cur = head[..total].to_vec();
    let mut count = vec![0usize; 2 * total + 1];
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); total + 1];
    let mut queue = VecDeque::with_capacity(total);

    for a in head[s]..head[s + 1] {
        let v = to[a] as usize;
        let c = cap[a];
        if c > 0 {
            cap[a] = 0;
            cap[rev[a]] += c;
            excess[v] += c;
            excess[s] -= c;
        }
    }

    // Exact distances to the sink in the residual graph; unreachable nodes
    // get height `total` and drop out of the preflow phase.
    let global_relabel = |height: &mut Vec<usize>,
                          count: &mut Vec<usize>,
                          buckets: &mut Vec<Vec<usize>>,
                          cur: &mut Vec<usize>,
                          queue: &mut VecDeque<usize>,
                          cap: &Vec<i64>,
                          excess: &Vec<i64>|
     -> usize {
        height.iter_mut().for_each(|h| *h = total);
        count.iter_mut().for_each(|c| *c = 0);
        buckets.iter_mut().for_each(|b| b.clear());
        height[t] = 0;
        queue.clear();
        queue.push_back(t);
        while let Some(u) = queue.pop_front() {
            for a in head[u]..head[u + 1] {
                let v = to[a] as usize;
                if height[v] == total && v != s && cap[rev[a]] > 0 {
                    height[v] = height[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut top = 0;
        for v in 0..n {
            cur[v] = head[v];
            if height[v] < total {
                count[height[v]] += 1;
                if excess[v] > 0 {
                    buckets[height[v]].push(v);
                    top = top.max(height[v]);
                }
            }
        }
        top
    };

    let mut top = global_relabel(&mut height, &mut count, &mut buckets, &mut cur, &mut queue, &cap, &excess);
    let relabel_budget = 6 * total + all.len();
    let mut work = 0usize;
    loop {
        while top > 0 && buckets[top].is_empty() {
            top -= 1;
        }
        let Some(u) = buckets[top].pop() else { break };
        if height[u] != top || excess[u] == 0 {
            continue;
        }
        // Discharge u.
        while excess[u] > 0 {
            let hu = height[u];
            while cur[u] < head[u + 1] {
                let a = cur[u];
                let v = to[a] as usize;
                if cap[a] > 0 && height[v] + 1 == hu {
                    let d = excess[u].min(cap[a]);
                    cap[a] -= d;
                    cap[rev[a]] += d;
                    excess[u] -= d;
                    if excess[v] == 0 && v != t {
                        buckets[height[v]].push(v);
                        top = top.max(height[v]);
                    }
                    excess[v] += d;
                    stats.pushes += 1;
                    if excess[u] == 0 {
                        break;
                    }
                }
                cur[u] += 1;
            }
            if excess[u] == 0 {
                break;
            }
            // Relabel.
            stats.relabels += 1;
            let mut best = total;
            for a in head[u]..head[u + 1] {
                if cap[a] > 0 {
                    best = best.min(height[to[a] as usize] + 1);
                }
            }
            work += head[u + 1] - head[u] + 12;
            count[hu] -= 1;
            if count[hu] == 0 {
                // Gap: nothing above hu can reach the sink any more.
                for v in 0..n {
                    if height[v] > hu && height[v] < total {
                        count[height[v]] -= 1;
                        height[v] = total;
                    }
                }
                height[u] = total;
                break;
            }
            height[u] = best;
            if best >= total {
                break;
            }
            count[best] += 1;
            cur[u] = head[u];
            if work > relabel_budget {
                break;
            }
        }
        if excess[u] > 0 && height[u] < total {
            buckets[height[u]].push(u);
            top = top.max(height[u]);
        }
        if work > relabel_budget {
            work = 0;
            top = global_relabel(&mut height, &mut count, &mut buckets, &mut cur, &mut queue, &cap, &excess);
        }
    }

    // Source side: nodes that cannot reach the sink in the residual graph.
    let mut reach = vec![false; total];
    reach[t] = true;
    queue.clear();
    queue.push_back(t);
    while let Some(u) = queue.pop_front() {
        for a in head[u]..head[u + 1] {
            let v = to[a] as usize;
            if !reach[v] && cap[rev[a]] > 0 {
                reach[v] = true;
                queue.push_back(v);
            }
        }
    }
    let side = (0..n).map(|v| !reach[v]).collect();
    (excess[t], side, stats)
}

fn to_int(c: &Strength, scale: i64) -> Result<i64> {
    c.numer()
        .checked_mul(scale / c.denom())
        .ok_or_else(|| Error::Numeric("capacity overflow after integer scaling".into()))
}

/// Exact minimum of the instance energy. Pinned nodes never change side.
pub fn solve_min_cut(instance: &CutInstance) -> Result<CutResult> {
    instance.check()?;
    let start = Instant::now();
    let n = instance.node_count;
    let scale = instance.scale()?;
    let mut edges = Vec::with_capacity(instance.edges.len());
    let mut total: i64 = 0;
    let add = |total: &mut i64, c: i64| -> Result<()> {
        *total = total.checked_add(c).ok_or_else(|| Error::Numeric("capacity sum overflow".into()))?;
        Ok(())
    };
    for &(u, v, c) in &instance.edges {
        let c = to_int(&c, scale)?;
        add(&mut total, c)?;
        if u != v && c > 0 {
            edges.push((u, v, c));
        }
    }
    let mut src = Vec::with_capacity(n);
    let mut snk = Vec::with_capacity(n);
    for v in 0..n {
        let a = to_int(&instance.source_cap[v], scale)?;
        let b = to_int(&instance.sink_cap[v], scale)?;
        add(&mut total, a)?;
        add(&mut total, b)?;
        src.push(a);
        snk.push(b);
    }
    let cap_pin = total
        .checked_add(1)
        .ok_or_else(|| Error::Numeric("pin capacity overflow".into()))?;
    for v in 0..n {
        match instance.pins[v] {
            Some(Spin::Plus) => src[v] += cap_pin,
            Some(Spin::Minus) => snk[v] += cap_pin,
            None => {}
        }
    }
    // Common terminal capacity is paid on either side.
    let mut constant = 0i64;
    let mut terminal = Vec::with_capacity(n);
    for v in 0..n {
        constant += src[v].min(snk[v]);
        terminal.push(src[v] - snk[v]);
    }
    let arcs: Vec<_> = edges.iter().map(|&(u, v, c)| (u, v, c, c)).collect();
    let (flow, side, mut stats) = max_flow(n, &terminal, &arcs);
    let raw = flow + constant;
    let spins: Vec<Spin> = (0..n).map(|v| if side[v] { Spin::Plus } else { Spin::Minus }).collect();
    for v in 0..n {
        if let Some(p) = instance.pins[v] {
            if spins[v] != p {
                return Err(Error::CapacityAccounting(format!("pin on node {v} was cut")));
            }
        }
    }
    let value = instance.energy(&spins);
    if to_int(&value, scale)? != raw {
        return Err(Error::CapacityAccounting(format!(
            "flow {raw} disagrees with the energy of the cut"
        )));
    }
    stats.wall_time = start.elapsed();
    let state = instance.embedding.as_ref().map(|e| {
        let mut st = SpinState::from_trace(e.window, &e.trace);
        for (s, spin) in e.sites.iter().zip(&spins) {
            st.set(s, *spin);
        }
        st
    });
    Ok(CutResult { value, spins, state, stats })
}

/// Largest free-site count accepted by [`brute_force_ground_state`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Exhaustive minimization over all 2^n assignments of the region, with its
/// own bond bookkeeping (independent of [`build_instance`]).
pub fn brute_force_ground_state(
    field: &BondField,
    region: &[Site],
    trace: &HalfSpaceTrace,
    scope: BondScope,
) -> Result<CutResult> {
    let start = Instant::now();
    let mut sites: Vec<Site> = region.to_vec();
    sites.sort();
    sites.dedup();
    let n = sites.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit { free: n, limit: BRUTE_FORCE_LIMIT });
    }
    let set = field.set();
    let scale = set.common_denominator();
    let idx = |s: &Site| sites.binary_search(s).ok();
    let int = |c: Strength| c.numer() * (scale / c.denom());

    // Bonds as (a, b, cost) where an endpoint is a free index or a fixed spin.
    enum End {
        Free(usize),
        Fixed(Spin),
    }
    let end = |s: &Site| match idx(s) {
        Some(i) => End::Free(i),
        None => End::Fixed(trace.value(s)),
    };
    let mut pair: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    let mut unary: Vec<[i64; 2]> = vec![[0, 0]; n];
    let mut push = |a: End, b: End, c: i64| match (a, b) {
        (End::Free(i), End::Free(j)) => {
            pair[i].push((j, c));
            pair[j].push((i, c));
        }
        (End::Free(i), End::Fixed(sp)) | (End::Fixed(sp), End::Free(i)) => {
            // unary[i][0]: cost when i is Minus, [1]: when Plus.
            match sp {
                Spin::Plus => unary[i][0] += c,
                Spin::Minus => unary[i][1] += c,
            }
        }
        (End::Fixed(_), End::Fixed(_)) => {}
    };
    for s in &sites {
        for (k, xi) in set.directions().iter().enumerate() {
            let fwd = *s + *xi;
            push(end(s), end(&fwd), int(field.strength(s, k)));
            if scope == BondScope::Touching {
                let back = *s - *xi;
                if idx(&back).is_none() {
                    push(end(&back), end(s), int(field.strength(&back, k)));
                }
            }
        }
    }

    // Gray-code walk starting from all Minus.
    let mut bits = vec![false; n];
    let mut energy: i64 = unary.iter().map(|u| u[0]).sum();
    let mut best = energy;
    let mut best_bits = bits.clone();
    let total: u64 = 1u64 << n;
    for g in 1..total {
        let flip = g.trailing_zeros() as usize;
        let was = bits[flip];
        // Edges incident to `flip` change broken/unbroken status.
        let mut delta = 0i64;
        for &(j, c) in &pair[flip] {
            if bits[j] == was {
                delta += c;
            } else {
                delta -= c;
            }
        }
        let (from, to) = if was { (1, 0) } else { (0, 1) };
        delta += unary[flip][to] - unary[flip][from];
        bits[flip] = !was;
        energy += delta;
        if energy < best {
            best = energy;
            best_bits.clone_from(&bits);
        }
    }
    let spins: Vec<Spin> = best_bits.iter().map(|&b| if b { Spin::Plus } else { Spin::Minus }).collect();
    let value = Strength::new(best, scale);
    let dim = field.dim();
    let mut window = BoxWindow::bounding(dim, &sites);
    let pad = set.range();
    for j in 0..dim {
        window.lo[j] -= pad;
        window.hi[j] += pad;
    }
    let mut state = SpinState::from_trace(window, trace);
    for (s, sp) in sites.iter().zip(&spins) {
        state.set(s, *sp);
    }
    let stats = SolverStats { enumerated: total, wall_time: start.elapsed(), ..Default::default() };
    Ok(CutResult { value, spins, state: Some(state), stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{evaluate_energy, make_field, FieldKind, InteractionSet, Label};
    use proptest::prelude::*;

    fn r(n: i64) -> Strength {
        Strength::from_integer(n)
    }

    fn nn(alpha: i64, beta: i64) -> InteractionSet {
        InteractionSet::nearest_neighbor(2, r(alpha), r(beta)).unwrap()
    }

    fn square(lo: i64, hi: i64) -> Vec<Site> {
        BoxWindow::cube(2, lo, hi).sites().collect()
    }

    #[test]
    fn empty_region_costs_nothing() {
        let field = make_field(FieldKind::HomogeneousAlpha, &nn(1, 2), 1).unwrap();
        let trace = HalfSpaceTrace::oriented([0.0; 3], [0.0, 1.0, 0.0]);
        let inst = build_instance(&field, &[], &trace, BondScope::Touching).unwrap();
        assert_eq!(inst.node_count, 0);
        assert_eq!(solve_min_cut(&inst).unwrap().value, Strength::zero());
        let bf = brute_force_ground_state(&field, &[], &trace, BondScope::Touching).unwrap();
        assert_eq!(bf.value, Strength::zero());
    }

    #[test]
    fn small_balls_are_degenerate() {
        let field = make_field(FieldKind::HomogeneousAlpha, &nn(1, 2), 1).unwrap();
        let trace = HalfSpaceTrace::oriented([0.0; 3], [1.0, 0.0, 0.0]);
        assert!(matches!(ball_instance(&field, &[0.0; 3], 1.0, &trace), Err(Error::DegenerateRegion(_))));
        assert!(ball_instance(&field, &[0.0; 3], 1.5, &trace).is_ok());
    }

    #[test]
    fn single_free_site_by_hand() {
        // The origin sits on the plane of u_{0,e2}: its trace value is -1.
        // Neighbours: (0,1) is +1, the other three are -1. Staying -1 costs
        // alpha (the bond to (0,1)); flipping costs 3 alpha.
        let field = make_field(FieldKind::HomogeneousAlpha, &nn(2, 5), 1).unwrap();
        let trace = HalfSpaceTrace::new([0.0; 3], [0.0, 1.0, 0.0]);
        let region = [Site::origin()];
        for scope in [BondScope::Based, BondScope::Touching] {
            let bf = brute_force_ground_state(&field, &region, &trace, scope).unwrap();
            assert_eq!(bf.value, r(2));
            assert_eq!(bf.spins, vec![Spin::Minus]);
            let cut = solve_min_cut(&build_instance(&field, &region, &trace, scope).unwrap()).unwrap();
            assert_eq!(cut.value, bf.value);
        }
    }

    #[test]
    fn flat_interface_ball_matches_enumeration() {
        let field = make_field(FieldKind::HomogeneousAlpha, &nn(1, 2), 1).unwrap();
        for nu in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            let trace = HalfSpaceTrace::oriented([0.0; 3], nu);
            let inst = ball_instance(&field, &[0.0; 3], 2.2, &trace).unwrap();
            assert_eq!(inst.node_count, 13);
            let cut = solve_min_cut(&inst).unwrap();
            let region = ball_sites(2, &[0.0; 3], 2.2);
            let bf = brute_force_ground_state(&field, &region, &trace, BondScope::Touching).unwrap();
            assert_eq!(cut.value, bf.value);
            // Five columns of the ball each cross the plane once.
            assert_eq!(cut.value, r(5));
        }
    }

    #[test]
    fn brute_force_refuses_large_regions() {
        let field = make_field(FieldKind::HomogeneousAlpha, &nn(1, 2), 1).unwrap();
        let trace = HalfSpaceTrace::oriented([0.0; 3], [1.0, 0.0, 0.0]);
        let err = brute_force_ground_state(&field, &square(0, 5), &trace, BondScope::Based);
        assert_eq!(err.unwrap_err(), Error::SizeLimit { free: 25, limit: BRUTE_FORCE_LIMIT });
    }

    #[test]
    fn zero_capacities_give_zero() {
        let mut inst = CutInstance::new(3);
        inst.add_edge(0, 1, Strength::zero());
        inst.add_edge(1, 2, Strength::zero());
        assert_eq!(solve_min_cut(&inst).unwrap().value, Strength::zero());
    }

    #[test]
    fn pins_are_never_cut() {
        // A chain pinned + at one end and - at the other must break once,
        // at its cheapest edge.
        let mut inst = CutInstance::new(4);
        inst.add_edge(0, 1, r(5));
        inst.add_edge(1, 2, Strength::new(3, 2));
        inst.add_edge(2, 3, r(4));
        inst.pin(0, Spin::Plus);
        inst.pin(3, Spin::Minus);
        let res = solve_min_cut(&inst).unwrap();
        assert_eq!(res.value, Strength::new(3, 2));
        assert_eq!(res.spins, vec![Spin::Plus, Spin::Plus, Spin::Minus, Spin::Minus]);
        // Without opposite pins the constant state is free.
        inst.pins[3] = None;
        assert_eq!(solve_min_cut(&inst).unwrap().value, Strength::zero());
    }

    #[test]
    fn dump_lists_terminal_and_pair_arcs() {
        let mut inst = CutInstance::new(2);
        inst.add_edge(0, 1, Strength::new(1, 2));
        inst.add_fixed_neighbor(0, Spin::Plus, r(1));
        inst.add_fixed_neighbor(1, Spin::Minus, r(2));
        assert_eq!(inst.dump(), "4\n0 2 1\n3 1 2\n2 3 1/2\n");
    }

    #[test]
    fn result_state_reproduces_the_value() {
        let set = InteractionSet::nn_diagonal(r(1), r(3)).unwrap();
        let field = make_field(FieldKind::Random { fractions: vec![0.5; 4], seed: 9 }, &set, 4).unwrap();
        let trace = HalfSpaceTrace::oriented([0.3, -0.2, 0.0], [0.6, 0.8, 0.0]);
        let region = ball_sites(2, &[0.3, -0.2, 0.0], 9.0);
        let inst = build_instance(&field, &region, &trace, BondScope::Touching).unwrap();
        let res = solve_min_cut(&inst).unwrap();
        let state = res.state.clone().unwrap();
        let e = evaluate_energy(&field, &state, &trace, &region, BondScope::Touching).unwrap();
        assert_eq!(e, res.value);
    }

    fn random_field(set: &InteractionSet, seed: u64, period: usize) -> BondField {
        let n = set.len();
        make_field(FieldKind::Random { fractions: vec![0.5; n], seed }, set, period).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solver_matches_enumeration(seed in 0u64..10_000, angle in 0.0f64..6.3, diag in any::<bool>(), based in any::<bool>()) {
            let set = if diag {
                InteractionSet::nn_diagonal(r(1), Strength::new(5, 2)).unwrap()
            } else {
                nn(2, 7)
            };
            let field = random_field(&set, seed, 4);
            let trace = HalfSpaceTrace::oriented([0.5, 0.25, 0.0], [angle.cos(), angle.sin(), 0.0]);
            let region = square(-1, 3);
            let scope = if based { BondScope::Based } else { BondScope::Touching };
            let cut = solve_min_cut(&build_instance(&field, &region, &trace, scope).unwrap()).unwrap();
            let bf = brute_force_ground_state(&field, &region, &trace, scope).unwrap();
            prop_assert_eq!(cut.value, bf.value);
        }

        #[test]
        fn complement_and_scaling(seed in 0u64..10_000, angle in 0.0f64..6.3) {
            let set = InteractionSet::nn_diagonal(r(1), r(4)).unwrap();
            let field = random_field(&set, seed, 4);
            let trace = HalfSpaceTrace::oriented([0.0; 3], [angle.cos(), angle.sin(), 0.0]);
            let a = solve_min_cut(&ball_instance(&field, &[0.0; 3], 6.5, &trace).unwrap()).unwrap();
            let b = solve_min_cut(&ball_instance(&field, &[0.0; 3], 6.5, &trace.flipped()).unwrap()).unwrap();
            prop_assert_eq!(a.value, b.value);
            let inst = ball_instance(&field, &[0.0; 3], 6.5, &trace).unwrap();
            let doubled = solve_min_cut(&inst.scaled(r(2))).unwrap();
            prop_assert_eq!(doubled.value, a.value * r(2));
        }

        #[test]
        fn raising_a_bond_never_lowers_the_minimum(seed in 0u64..10_000, k in 0usize..2, idx in 0usize..16) {
            let set = nn(1, 3);
            let field = random_field(&set, seed, 4);
            let mut labels = field.label_blocks().to_vec();
            labels[k][idx] = Label::Beta;
            let raised = field.with_labels(labels).unwrap();
            let trace = HalfSpaceTrace::oriented([0.0; 3], [0.8, 0.6, 0.0]);
            let lo = solve_min_cut(&ball_instance(&field, &[0.0; 3], 5.0, &trace).unwrap()).unwrap();
            let hi = solve_min_cut(&ball_instance(&raised, &[0.0; 3], 5.0, &trace).unwrap()).unwrap();
            prop_assert!(lo.value <= hi.value);
        }
    }
}
