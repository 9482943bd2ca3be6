//! Subcommand bodies.

use std::fmt::Write as _;
use std::path::Path;

use bondmix::bounds::{
    averaging_density, crystalline_approx, default_samples, membership_test, projection_bound_all_cosets,
    CrystallineDensity, Density, FnDensity, OrthogonalBasis,
};
use bondmix::celltension::{direction_sweep, sphere_directions, sweep_directions, Schedule, Sweep};
use bondmix::designer::{design_microstructure, verify_design, DesignTarget, DEFAULT_T_MAX};
use bondmix::io::{field_digest, read_field, write_field};
use bondmix::lattice::{
    fnorm, fvec, make_field, BondField, BondScope, BoxWindow, FVec, FieldKind, HalfSpaceTrace, InteractionSet, Site,
};
use bondmix::localizer::{localize, synthesize_field, MacroProfile};
use bondmix::mincut::{brute_force_ground_state, build_instance, solve_min_cut};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bundled;
use crate::config::{cfg, rational, ratios, RunConfig};
use crate::output::Emitter;
use crate::CliError;

/// Slack constant calibrated on homogeneous fields at radii 16..128.
pub const DEFAULT_C_SLACK: f64 = 4.01;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn core(e: bondmix::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn directions(dim: usize, n: usize) -> Vec<FVec> {
    if dim == 2 {
        sweep_directions(n)
    } else {
        sphere_directions(n)
    }
}

fn schedule(config: &RunConfig, dim: usize) -> Result<Schedule, CliError> {
    let spec = config.schedule();
    let dirs = directions(dim, spec.directions.unwrap_or(if dim == 2 { 64 } else { 26 }));
    let built = match (&spec.radii, spec.order) {
        (None, None) => Schedule::default_for(dim, dirs),
        (radii, order) => {
            let radii = radii.clone().unwrap_or_else(|| if dim == 2 { vec![16.0, 32.0, 64.0, 128.0] } else { vec![8.0, 12.0, 16.0] });
            Schedule::new(radii, dirs, order.unwrap_or(1))
        }
    };
    built.map_err(|e| cfg(e.to_string()))
}

fn emit_sweep(out: &mut Emitter, sweep: &Sweep, field: &BondField, prefix: &str) -> Result<(), CliError> {
    out.write(&format!("{prefix}sweep.csv"), sweep.to_csv().as_bytes())?;
    if let Some(p) = sweep.polygon_text() {
        out.write(&format!("{prefix}polygon.txt"), p.as_bytes())?;
    }
    out.write_json(&format!("{prefix}summary.json"), &sweep.summary_json(&field_digest(field)))
}

pub fn tension(config: &RunConfig, base: &Path, out: &mut Emitter) -> Result<bool, CliError> {
    let field = config.field(base)?;
    let sched = schedule(config, field.dim())?;
    out.write("field.txt", write_field(&field).as_bytes())?;
    let sweep = direction_sweep(&field, &sched).map_err(core)?;
    emit_sweep(out, &sweep, &field, "")?;
    let Some(check) = &config.check else {
        return Ok(true);
    };
    let set = field.set();
    let tol = check.tolerance.unwrap_or(0.05);
    let slack = check.c_slack.unwrap_or(DEFAULT_C_SLACK) / sched.max_radius();
    let canon = OrthogonalBasis::canonical(field.dim());
    let mut rows = Vec::new();
    let mut passed = true;
    for e in &sweep.estimates {
        let v = e.last_normalized();
        let (ok, lower, upper) = match check.reference.as_str() {
            "alpha" | "beta" => {
                let exact = if check.reference == "alpha" { set.alpha_density(&e.direction) } else { set.beta_density(&e.direction) };
                ((v - exact).abs() <= tol * exact, exact * (1.0 - tol), exact * (1.0 + tol))
            }
            "bounds" => {
                let lo = projection_bound_all_cosets(&field, &canon, &e.direction).map_err(core)? - slack;
                let hi = bondmix::bounds::averaging_bound(&field, &e.direction).map_err(core)? + slack;
                (lo <= v && v <= hi, lo, hi)
            }
            other => return Err(cfg(format!("unknown check.reference {other:?}"))),
        };
        passed &= ok;
        rows.push(json!({ "direction": &e.direction[..field.dim()], "value": v, "lower": lower, "upper": upper, "ok": ok }));
    }
    out.write_json("check.json", &json!({ "reference": check.reference, "tolerance": tol, "passed": passed, "rows": rows }))?;
    Ok(passed)
}

fn phi_density(config: &RunConfig, base: &Path, set: &InteractionSet) -> Result<Box<dyn Density>, CliError> {
    let spec = &config.bounds.as_ref().ok_or_else(|| cfg("missing [bounds]"))?.phi;
    let scale = spec.scale.unwrap_or(1.0);
    let dim = set.dim();
    let ones = |c: &[bondmix::lattice::Strength]| c.iter().map(bondmix::lattice::strength_f64).collect::<Vec<_>>();
    let density: Box<dyn Density> = match spec.kind.as_str() {
        "crystalline" => {
            let terms = spec.terms.as_ref().ok_or_else(|| cfg("crystalline phi needs terms"))?;
            let terms = terms.iter().map(|t| (t.c * scale, fvec(&t.nu))).collect();
            Box::new(CrystallineDensity::new(dim, terms).map_err(|e| cfg(e.to_string()))?)
        }
        "euclidean" => Box::new(FnDensity { dim, f: move |nu: &FVec| scale * fnorm(nu) }),
        "alpha" => Box::new(CrystallineDensity::from_interaction(set, &ones(set.alphas())).scaled(scale)),
        "beta" => Box::new(CrystallineDensity::from_interaction(set, &ones(set.betas())).scaled(scale)),
        "averaging" => Box::new(averaging_density(&config.field(base)?).map_err(core)?.scaled(scale)),
        other => return Err(cfg(format!("unknown phi.kind {other:?}"))),
    };
    Ok(density)
}

pub fn bounds(config: &RunConfig, base: &Path, out: &mut Emitter) -> Result<bool, CliError> {
    let spec = config.bounds.as_ref().ok_or_else(|| cfg("missing [bounds]"))?;
    let set = config.interaction_set()?;
    if !(0.0..=1.0).contains(&spec.theta) {
        return Err(cfg("bounds.theta must lie in [0, 1]"));
    }
    let phi = phi_density(config, base, &set)?;
    let samples = spec.samples.unwrap_or_else(|| default_samples(set.dim()));
    let report = membership_test(phi.as_ref(), spec.theta, &set, samples).map_err(core)?;
    out.write_json("bounds.json", &report.to_json())?;
    if let Some(n) = spec.approx {
        let approx = crystalline_approx(phi.as_ref(), &set, n).map_err(core)?;
        out.write_json("approx.json", &serde_json::to_value(&approx).expect("json serializes"))?;
    }
    Ok(true)
}

fn design_target(config: &RunConfig, set: &InteractionSet) -> Result<DesignTarget, CliError> {
    let spec = config.design.as_ref().ok_or_else(|| cfg("missing [design]"))?;
    let built = match (&spec.uniform, &spec.t, &spec.theta) {
        (Some(u), None, None) => DesignTarget::uniform(set.len(), rational(u)?),
        (None, Some(t), Some(theta)) => DesignTarget::new(ratios(t)?, ratios(theta)?),
        _ => return Err(cfg("design needs either uniform or both t and theta")),
    };
    built.map_err(|e| cfg(e.to_string()))
}

pub fn design(config: &RunConfig, _base: &Path, out: &mut Emitter) -> Result<bool, CliError> {
    let set = config.interaction_set()?;
    let target = design_target(config, &set)?;
    let spec = config.design.as_ref().expect("checked by design_target");
    let result = design_microstructure(&target, &set, spec.t_max.unwrap_or(DEFAULT_T_MAX)).map_err(core)?;
    out.write("field.txt", write_field(&result.field).as_bytes())?;
    out.write_json("audit.json", &result.audit_json())?;
    let radii = spec.radii.clone().unwrap_or_else(|| vec![128.0]);
    let report = verify_design(&result, &radii, spec.tolerance.unwrap_or(0.10)).map_err(core)?;
    out.write_json("verify.json", &serde_json::to_value(&report).expect("json serializes"))?;
    let n = spec.polygon_directions.unwrap_or(64);
    if n > 0 && set.dim() == 2 {
        let sched = Schedule::new(vec![spec.polygon_radius.unwrap_or(128.0)], sweep_directions(n), 0).map_err(|e| cfg(e.to_string()))?;
        let sweep = direction_sweep(&result.field, &sched).map_err(core)?;
        emit_sweep(out, &sweep, &result.field, "")?;
    }
    Ok(report.passed)
}

pub fn localize_cmd(config: &RunConfig, _base: &Path, out: &mut Emitter) -> Result<bool, CliError> {
    let spec = config.localize.as_ref().ok_or_else(|| cfg("missing [localize]"))?;
    let set = config.interaction_set()?;
    let profile = MacroProfile::new(set.dim(), spec.lo.clone(), spec.hi.clone(), spec.level.unwrap_or(0), spec.theta.clone())
        .map_err(|e| cfg(e.to_string()))?;
    let synth = synthesize_field(&profile, &set, spec.sites_per_cell.unwrap_or(128), spec.delta.unwrap_or(0.1), None).map_err(core)?;
    let rho = spec.rho_sites.unwrap_or(32.0) * synth.local.eps;
    let dirs = directions(set.dim(), spec.directions.unwrap_or(16));
    let report = localize(&synth, &dirs, rho, spec.c_slack.unwrap_or(DEFAULT_C_SLACK)).map_err(core)?;
    out.write("probes.csv", report.to_csv().as_bytes())?;
    out.write_json(
        "report.json",
        &json!({
            "profile": profile,
            "periods": synth.periods,
            "targets": synth.targets,
            "report": report,
        }),
    )?;
    Ok(report.passed)
}

struct Case {
    field: String,
    field_ref: BondField,
    window: BoxWindow,
    trace: HalfSpaceTrace,
}

pub fn verify(config: &RunConfig, _base: &Path, out: &mut Emitter) -> Result<bool, CliError> {
    let default = Default::default();
    let spec = config.verify.as_ref().unwrap_or(&default);
    let mut cases = Vec::new();
    match spec.suite.as_deref().unwrap_or("bundled") {
        "bundled" => {
            let suite = bundled::verify_suite();
            for name in &suite.fields {
                let field = read_field(bundled::field_text(name).expect("bundled suite names bundled fields")).map_err(core)?;
                for off in &suite.offsets {
                    let lo = [off[0], off[1], 0];
                    let window = BoxWindow::new(2, lo, [lo[0] + suite.window[0], lo[1] + suite.window[1], 1]);
                    for deg in &suite.angles_deg {
                        let a = deg.to_radians();
                        let center = [lo[0] as f64 + 1.0, lo[1] as f64 + 1.0, 0.0];
                        let trace = HalfSpaceTrace::oriented(center, [a.cos(), a.sin(), 0.0]);
                        cases.push(Case { field: name.clone(), field_ref: field.clone(), window, trace });
                    }
                }
            }
        }
        "random" => {
            let seed = config.seed.ok_or_else(|| cfg("seed is required for the random suite"))?;
            let set = config.interaction_set()?;
            if set.dim() != 2 {
                return Err(cfg("the random suite is two-dimensional"));
            }
            let size = spec.window.clone().unwrap_or_else(|| vec![3, 3]);
            if size.len() != 2 || size.iter().any(|&s| s < 1) || size[0] * size[1] > 18 {
                return Err(cfg("verify.window must be two positive extents with at most 18 sites"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let max_period = spec.max_period.unwrap_or(4).max(1);
            for f in 0..spec.fields.unwrap_or(20) {
                let period = rng.random_range(1..=max_period);
                let fractions = (0..set.len()).map(|_| rng.random_range(0.0..1.0)).collect();
                let field = make_field(FieldKind::Random { fractions, seed: rng.random() }, &set, period).map_err(core)?;
                for _ in 0..spec.windows_per_field.unwrap_or(4) {
                    let lo = [rng.random_range(-4..4), rng.random_range(-4..4), 0];
                    let window = BoxWindow::new(2, lo, [lo[0] + size[0], lo[1] + size[1], 1]);
                    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    let center = [lo[0] as f64 + size[0] as f64 / 2.0, lo[1] as f64 + size[1] as f64 / 2.0, 0.0];
                    let trace = HalfSpaceTrace::oriented(center, [a.cos(), a.sin(), 0.0]);
                    cases.push(Case { field: format!("random_{f}"), field_ref: field.clone(), window, trace });
                }
            }
        }
        other => return Err(cfg(format!("unknown verify.suite {other:?}"))),
    }
    let mut csv = String::from("field,window_lo,normal,scope,min_cut,brute_force,ok\n");
    let mut failures = 0;
    for case in &cases {
        let region: Vec<Site> = case.window.sites().collect();
        for scope in [BondScope::Touching, BondScope::Based] {
            let fast = solve_min_cut(&build_instance(&case.field_ref, &region, &case.trace, scope).map_err(core)?).map_err(core)?;
            let slow = brute_force_ground_state(&case.field_ref, &region, &case.trace, scope).map_err(core)?;
            let ok = fast.value == slow.value;
            failures += usize::from(!ok);
            let _ = writeln!(
                csv,
                "{},{} {},{} {},{scope:?},{},{},{ok}",
                case.field,
                case.window.lo[0],
                case.window.lo[1],
                num(case.trace.normal[0]),
                num(case.trace.normal[1]),
                fast.value,
                slow.value
            );
        }
    }
    out.write("verify.csv", csv.as_bytes())?;
    out.write_json("verify.json", &json!({ "comparisons": 2 * cases.len(), "failures": failures, "passed": failures == 0 }))?;
    Ok(failures == 0)
}

/// Designs at every total fraction of the grid on the configured set and
/// their sublevel polygons, with the all-alpha and all-beta polygons for
/// reference.
pub fn sweep(config: &RunConfig, _base: &Path, out: &mut Emitter) -> Result<bool, CliError> {
    let set = config.interaction_set()?;
    if set.dim() != 2 {
        return Err(cfg("sweep draws planar polygons and needs dim = 2"));
    }
    let default = Default::default();
    let spec = config.sweep.as_ref().unwrap_or(&default);
    let thetas = match &spec.thetas {
        Some(t) => ratios(t)?,
        None => vec![Ratio::new(1, 4), Ratio::new(1, 2), Ratio::new(3, 4)],
    };
    let n = spec.directions.unwrap_or(64);
    let dirs = sweep_directions(n);
    let sched = Schedule::new(vec![spec.radius.unwrap_or(128.0)], dirs.clone(), 0).map_err(|e| cfg(e.to_string()))?;
    let reference = |f: &dyn Fn(&FVec) -> f64| {
        dirs.iter().fold(String::new(), |mut s, nu| {
            let r = 1.0 / f(nu);
            let _ = writeln!(s, "{} {}", num(nu[0] * r), num(nu[1] * r));
            s
        })
    };
    out.write("polygon_alpha.txt", reference(&|nu| set.alpha_density(nu)).as_bytes())?;
    out.write("polygon_beta.txt", reference(&|nu| set.beta_density(nu)).as_bytes())?;
    let mut family = Vec::new();
    for (i, theta) in thetas.iter().enumerate() {
        let target = DesignTarget::uniform(set.len(), *theta).map_err(|e| cfg(e.to_string()))?;
        let result = design_microstructure(&target, &set, spec.t_max.unwrap_or(DEFAULT_T_MAX)).map_err(core)?;
        let sweep = direction_sweep(&result.field, &sched).map_err(core)?;
        let name = format!("polygon_{i:02}.txt");
        out.write(&name, sweep.polygon_text().expect("planar sweep has a polygon").as_bytes())?;
        family.push(json!({
            "theta": theta.to_string(),
            "period": result.period,
            "field_period": result.field_period,
            "field_hash": field_digest(&result.field),
            "polygon": name,
        }));
    }
    out.write_json("family.json", &json!({ "radius": sched.max_radius(), "directions": n, "designs": family }))?;
    Ok(true)
}
