//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use bondmix::bounds::{averaging_bound, projection_bound_all_cosets, OrthogonalBasis};
use bondmix::celltension::{direction_sweep, sweep_directions, Schedule, Sweep};
use bondmix::designer::{design_microstructure, verify_design, DesignTarget, DEFAULT_T_MAX};
use bondmix::lattice::{
    make_field, BondField, BondScope, BoxWindow, FVec, FieldKind, HalfSpaceTrace, InteractionSet, Label, Site,
    Strength,
};
use bondmix::localizer::{localize, m_regularity_probe, synthesize_field, LocalField, MacroProfile};
use bondmix::mincut::{ball_instance, brute_force_ground_state, build_instance, solve_min_cut};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: f64 = 128.0;
const SWEEP: usize = 64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, name: &str, start: Instant, limit: Option<Duration>, out: Outcome) -> bool {
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = out.pass && in_time;
    let budget = limit.map(|l| format!(", limit {}s", l.as_secs())).unwrap_or_default();
    println!(
        "{} criterion {n}: {name}: {} [{:.1}s{budget}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn int(n: i64) -> Strength {
    Strength::from_integer(n)
}

fn nn() -> InteractionSet {
    InteractionSet::nearest_neighbor(2, int(1), int(3)).unwrap()
}

fn diag() -> InteractionSet {
    InteractionSet::nn_diagonal(int(1), int(2)).unwrap()
}

fn random_field(rng: &mut ChaCha8Rng, set: &InteractionSet, period: usize) -> BondField {
    let fractions = (0..set.len()).map(|_| rng.random_range(0.1..0.9)).collect();
    make_field(FieldKind::Random { fractions, seed: rng.random() }, set, period).unwrap()
}

/// Exact negation symmetry of the raw cut values of a sweep whose
/// directions come in +-nu pairs.
fn antipodal_violations(sweep: &Sweep) -> usize {
    let est = &sweep.estimates;
    let half = est.len() / 2;
    (0..half)
        .filter(|&i| {
            let (a, b) = (&est[i], &est[i + half]);
            a.samples.iter().zip(&b.samples).any(|(x, y)| x.raw != y.raw)
        })
        .count()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let shapes = [(3, 3), (4, 4), (3, 6), (6, 3), (2, 9), (4, 3)];
    let (mut checked, mut mismatches) = (0usize, 0usize);
    for f in 0..100 {
        let set = if f % 2 == 0 { nn() } else { diag() };
        let period = [1, 2, 3, 4][f % 4];
        let field = random_field(&mut rng, &set, period);
        for p in 0..4 {
            let (w, h) = shapes[rng.random_range(0..shapes.len())];
            let lo = [rng.random_range(-3..3), rng.random_range(-3..3), 0];
            let window = BoxWindow::new(2, lo, [lo[0] + w, lo[1] + h, 1]);
            let region: Vec<Site> = window.sites().collect();
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let center = [
                lo[0] as f64 + rng.random_range(0.0..w as f64),
                lo[1] as f64 + rng.random_range(0.0..h as f64),
                0.0,
            ];
            let trace = HalfSpaceTrace::oriented(center, [angle.cos(), angle.sin(), 0.0]);
            let scope = if p % 2 == 0 { BondScope::Touching } else { BondScope::Based };
            let fast = solve_min_cut(&build_instance(&field, &region, &trace, scope).unwrap()).unwrap();
            let slow = brute_force_ground_state(&field, &region, &trace, scope).unwrap();
            checked += 1;
            if fast.value != slow.value {
                mismatches += 1;
            }
        }
    }
    Outcome { pass: mismatches == 0, detail: format!("{checked} windows, {mismatches} mismatches") }
}

/// Returns (outcome, c_slack, antipodal violations).
fn criterion_2() -> (Outcome, f64, usize) {
    let schedule = Schedule::default_for(2, sweep_directions(SWEEP)).unwrap();
    let mut c_slack: f64 = 0.0;
    let mut worst_r: f64 = 0.0;
    let mut worst_hat: f64 = 0.0;
    let mut asym = 0;
    for (kind, beta) in [(FieldKind::HomogeneousAlpha, false), (FieldKind::HomogeneousBeta, true)] {
        let set = nn();
        let field = make_field(kind, &set, 1).unwrap();
        let sweep = direction_sweep(&field, &schedule).unwrap();
        asym += antipodal_violations(&sweep);
        for e in &sweep.estimates {
            let exact = if beta { set.beta_density(&e.direction) } else { set.alpha_density(&e.direction) };
            worst_r = worst_r.max((e.last_normalized() - exact).abs() / exact);
            worst_hat = worst_hat.max((e.phi_hat - exact).abs() / exact);
            for s in &e.samples {
                c_slack = c_slack.max(s.radius * (s.normalized - exact).abs());
            }
        }
    }
    // The slack constant also covers the diagonal set used in later criteria.
    for kind in [FieldKind::HomogeneousAlpha, FieldKind::HomogeneousBeta] {
        let set = diag();
        let beta = matches!(kind, FieldKind::HomogeneousBeta);
        let field = make_field(kind, &set, 1).unwrap();
        let sweep = direction_sweep(&field, &schedule).unwrap();
        asym += antipodal_violations(&sweep);
        for e in &sweep.estimates {
            let exact = if beta { set.beta_density(&e.direction) } else { set.alpha_density(&e.direction) };
            for s in &e.samples {
                c_slack = c_slack.max(s.radius * (s.normalized - exact).abs());
            }
        }
    }
    let pass = worst_r <= 0.05 && worst_hat <= 0.05;
    let detail = format!(
        "max rel. error at R = {R}: {worst_r:.4}, extrapolated: {worst_hat:.4} (tol 0.05); calibrated C_slack = {c_slack:.4}"
    );
    (Outcome { pass, detail }, c_slack, asym)
}

fn criterion_3(c_slack: f64) -> (Outcome, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let schedule = Schedule::new(vec![R], sweep_directions(SWEEP), 0).unwrap();
    let canon = OrthogonalBasis::canonical(2);
    let slack = c_slack / R;
    let (mut violations, mut checks, mut asym) = (0usize, 0usize, 0usize);
    let mut min_margin = f64::INFINITY;
    for f in 0..20 {
        let set = if f % 2 == 0 { nn() } else { diag() };
        let period = [2, 4, 8][f % 3];
        let field = random_field(&mut rng, &set, period);
        let sweep = direction_sweep(&field, &schedule).unwrap();
        asym += antipodal_violations(&sweep);
        for e in &sweep.estimates {
            let lo = projection_bound_all_cosets(&field, &canon, &e.direction).unwrap();
            let hi = averaging_bound(&field, &e.direction).unwrap();
            let v = e.last_normalized();
            checks += 1;
            min_margin = min_margin.min((v - (lo - slack)).min(hi + slack - v));
            if v < lo - slack || v > hi + slack {
                violations += 1;
            }
        }
    }
    let detail = format!("{checks} direction checks, {violations} violations, slack {slack:.5}, min margin {min_margin:.5}");
    (Outcome { pass: violations == 0, detail }, asym)
}

fn criterion_4() -> Outcome {
    let set = nn();
    let values = [Ratio::new(1, 4), Ratio::new(1, 2), Ratio::new(3, 4)];
    let (mut designs, mut failures) = (0, Vec::new());
    let mut worst: f64 = 0.0;
    for a in values {
        for b in values {
            let target = DesignTarget::new(vec![a, b], vec![a, b]).unwrap();
            let result = design_microstructure(&target, &set, DEFAULT_T_MAX).unwrap();
            let rep = verify_design(&result, &[R], 0.10).unwrap();
            designs += 1;
            worst = rep.directions.iter().fold(worst, |w, d| w.max(d.relative_error));
            if !rep.fractions_exact || rep.directions.iter().any(|d| !d.lower_ok || !d.estimate_ok) {
                failures.push(format!("({a}, {b})"));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{designs} designs, worst rel. error at V-directions {worst:.4} (tol 0.10), failing: {failures:?}"),
    }
}

fn criterion_5(c_slack: f64) -> (Outcome, usize) {
    let set = diag();
    let target = DesignTarget::uniform(4, Ratio::new(1, 2)).unwrap();
    let result = design_microstructure(&target, &set, DEFAULT_T_MAX).unwrap();
    let schedule = Schedule::new(vec![R], sweep_directions(SWEEP), 0).unwrap();
    let sweep = direction_sweep(&result.field, &schedule).unwrap();
    let asym = antipodal_violations(&sweep);
    let poly = sweep.polygon.clone().unwrap();
    let n = poly.len();
    let radius = |p: &[f64; 2]| (p[0] * p[0] + p[1] * p[1]).sqrt();
    // Radial containment between the octagons {beta density <= 1} and {alpha density <= 1}.
    let mut outside = 0;
    for (p, e) in poly.iter().zip(&sweep.estimates) {
        let r = radius(p);
        let r_in = 1.0 / set.beta_density(&e.direction);
        let r_out = 1.0 / set.alpha_density(&e.direction);
        if r < r_in / 1.02 || r > r_out * 1.02 {
            outside += 1;
        }
    }
    // Evenness: the vertex for -nu is the negated vertex for nu.
    let half = n / 2;
    let odd = (0..half).filter(|&i| poly[i + half] != [-poly[i][0], -poly[i][1]]).count();
    // Convexity: phi_hat(nu_b) <= l phi_hat(nu_a) + m phi_hat(nu_c) for
    // nu_b = l nu_a + m nu_c, up to the calibrated error of each estimate.
    let slack = c_slack / R;
    let (mut concave, mut strict_turns) = (0, 0);
    for i in 0..n {
        let (a, b, c) = (&sweep.estimates[(i + n - 1) % n], &sweep.estimates[i], &sweep.estimates[(i + 1) % n]);
        let (na, nb, nc) = (a.direction, b.direction, c.direction);
        let det = na[0] * nc[1] - na[1] * nc[0];
        let l = (nb[0] * nc[1] - nb[1] * nc[0]) / det;
        let m = (na[0] * nb[1] - na[1] * nb[0]) / det;
        let (pa, pb, pc) = (a.last_normalized(), b.last_normalized(), c.last_normalized());
        if pb > l * pa + m * pc + (1.0 + l + m) * slack {
            concave += 1;
        }
        if pb > l * pa + m * pc {
            strict_turns += 1;
        }
    }
    let pass = outside == 0 && odd == 0 && concave == 0;
    let detail = format!(
        "T = {} (field period {}), {n} vertices: {outside} outside the octagon band (2%), {odd} uneven, \
         {concave} nonconvex beyond estimator error ({strict_turns} raw reflex turns)",
        result.period, result.field_period
    );
    (Outcome { pass, detail }, asym)
}

fn criterion_6(c_slack: f64) -> Outcome {
    let set = nn();
    let profile = MacroProfile::new(2, vec![0.0, 0.0], vec![2.0, 1.0], 0, vec![0.0, 1.0]).unwrap();
    let synth = synthesize_field(&profile, &set, 128, 0.1, None).unwrap();
    let rho = 32.0 * synth.local.eps;
    let dirs = sweep_directions(16);
    let rep = localize(&synth, &dirs, rho, c_slack).unwrap();
    let mut off = 0;
    let mut worst: f64 = 0.0;
    for p in &rep.probes {
        let nu: FVec = [p.nu[0], p.nu[1], 0.0];
        let exact = if p.x[0] < 1.0 { set.alpha_density(&nu) } else { set.beta_density(&nu) };
        let rel = (p.value - exact).abs() / exact;
        worst = worst.max(rel);
        if rel > 0.05 {
            off += 1;
        }
    }
    let failed = rep.probes.iter().filter(|p| !p.ok).count();
    Outcome {
        pass: off == 0 && failed == 0,
        detail: format!(
            "{} probes at rho/eps = 32: worst rel. error vs phase tension {worst:.4} (tol 0.05), {failed} sandwich violations",
            rep.probes.len()
        ),
    }
}

fn criterion_7(asym: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    for p in 0..50 {
        let set = if p % 2 == 0 { nn() } else { diag() };
        let period = [2, 3, 4][p % 3];
        let field = random_field(&mut rng, &set, period);
        // Raise a random subset of alpha bonds to beta.
        let raised: Vec<Vec<Label>> = field
            .label_blocks()
            .iter()
            .map(|b| b.iter().map(|&l| if rng.random_bool(0.3) { Label::Beta } else { l }).collect())
            .collect();
        let stronger = field.with_labels(raised).unwrap();
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let center = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), 0.0];
        let trace = HalfSpaceTrace::oriented(center, [angle.cos(), angle.sin(), 0.0]);
        let radius = rng.random_range(4.0..24.0);
        let weak = solve_min_cut(&ball_instance(&field, &center, radius, &trace).unwrap()).unwrap();
        let strong = solve_min_cut(&ball_instance(&stronger, &center, radius, &trace).unwrap()).unwrap();
        if strong.value < weak.value {
            violations += 1;
        }
    }
    Outcome {
        pass: asym == 0 && violations == 0,
        detail: format!("{asym} antipodal mismatches over all sweeps, {violations} monotonicity violations in 50 pairs"),
    }
}

fn criterion_8() -> Outcome {
    let eps = 1.0 / 64.0;
    let rhos = [0.25, 0.375, 0.5];
    let angles = [0.0, 0.1, 0.3, 0.7, 1.2, 2.0];
    let nu = |a: f64| [a.cos(), a.sin(), 0.0];
    let mut pairs = Vec::new();
    for (i, &a) in angles.iter().enumerate() {
        for &b in &angles[i..] {
            pairs.push((nu(a), nu(b)));
        }
    }
    let (mut rows, mut bad, mut worst) = (0, 0, 0.0f64);
    for set in [nn(), diag()] {
        let c = 4.0
            * set
                .directions()
                .iter()
                .enumerate()
                .map(|(k, xi)| bondmix::lattice::strength_f64(&set.beta(k)) * bondmix::lattice::inorm(xi))
                .sum::<f64>();
        for kind in [FieldKind::HomogeneousAlpha, FieldKind::HomogeneousBeta] {
            let local = LocalField::periodic(make_field(kind, &set, 1).unwrap(), eps);
            let rep = m_regularity_probe(&local, &[0.0, 0.0], &pairs, &rhos, c).unwrap();
            for r in &rep.angular {
                rows += 1;
                if r.bound > 0.0 {
                    worst = worst.max(r.modulus / r.bound);
                }
                if !r.ok {
                    bad += 1;
                }
            }
        }
    }
    Outcome {
        pass: bad == 0,
        detail: format!("{rows} (pair, rho) rows, {bad} above C arccos + 8 eps/rho, max ratio {worst:.4}"),
    }
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "min-cut equals brute force", t, Some(Duration::from_secs(120)), criterion_1());

    let t = Instant::now();
    let (out, c_slack, asym2) = criterion_2();
    all &= report(2, "degenerate-theta exactness", t, Some(Duration::from_secs(300)), out);

    let t = Instant::now();
    let (out, asym3) = criterion_3(c_slack);
    all &= report(3, "sandwich between projection and averaging bounds", t, None, out);

    let t = Instant::now();
    all &= report(4, "designer round trip", t, Some(Duration::from_secs(600)), criterion_4());

    let t = Instant::now();
    let (out, asym5) = criterion_5(c_slack);
    all &= report(5, "theta = 1/2 design between the octagons", t, None, out);

    let t = Instant::now();
    all &= report(6, "localization sandwich", t, None, criterion_6(c_slack));

    let t = Instant::now();
    all &= report(7, "symmetry and monotonicity", t, None, criterion_7(asym2 + asym3 + asym5));

    let t = Instant::now();
    all &= report(8, "angular regularity of m", t, None, criterion_8());

    if !all {
        std::process::exit(1);
    }
}
