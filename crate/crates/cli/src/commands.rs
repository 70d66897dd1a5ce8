use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gfix_core::{
    attach_bounds, check_applicability, check_axioms as core_check_axioms, check_condition as core_check_condition,
    check_convexity as core_check_convexity, check_derived, delta_for, make_affine_contraction, product_bound,
    resolve, run_mann, verify_bound, AdditiveStructure, ConditionKind, ContractionSpec, ConvexStructure, Error,
    LinearInterpolation, Mapping, SamplePlan, SpaceCatalogEntry, StepSchedule, StoppingRule, TerminalStatus,
    Translation, DEFAULT_TOL,
};
use serde_json::json;

use crate::config::{parse_coeffs, parse_point, parse_reals, ConfigError, ConfigResult, FileConfig};
use crate::output::{emit, real, summary_text, trace_csv};
use crate::{
    BoundArgs, CheckArgs, CommonArgs, ConditionArgs, ConditionCheckArgs, ConvexityArgs, IterateArgs, MappingArgs,
    SampleArgs, ScheduleArgs,
};

const DEFAULT_SAMPLES: usize = 1000;
const DEFAULT_BOUND_TOL: f64 = 1e-9;
const DEFAULT_BOUND_STEPS: usize = 100;
const SEED_ENV: &str = "GFIX_SEED";

/// Resolved settings, echoed into every report and summary.
type Resolved = BTreeMap<&'static str, String>;

fn seed(common: &CommonArgs, file: &FileConfig) -> ConfigResult<u64> {
    if let Some(s) = file.pick(common.seed, "seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer"))),
        Err(_) => Ok(0),
    }
}

fn space_entry(flag: &Option<String>, file: &FileConfig, cfg: &mut Resolved) -> ConfigResult<SpaceCatalogEntry> {
    let key: String = file
        .pick(flag.clone(), "space")?
        .ok_or_else(|| ConfigError("--space is required".into()))?;
    let entry = resolve(&key)?;
    cfg.insert("space", entry.key.to_string());
    Ok(entry)
}

fn sample_plan(
    args: &SampleArgs,
    common: &CommonArgs,
    file: &FileConfig,
    dim: usize,
    cfg: &mut Resolved,
) -> ConfigResult<(SamplePlan, f64)> {
    let seed = seed(common, file)?;
    let count = file.pick(args.samples, "samples")?.unwrap_or(DEFAULT_SAMPLES);
    let tol = file.pick(args.tol, "tol")?.unwrap_or(DEFAULT_TOL);
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(ConfigError(format!("tolerance {tol} must be a finite nonnegative real")));
    }
    let mut plan = SamplePlan::new(seed, count, dim);
    if let Some(b) = file.pick(args.bbox.clone(), "box")? {
        match parse_reals(&b)?[..] {
            [lo, hi] => plan = plan.with_box(lo, hi),
            _ => return Err(ConfigError(format!("box `{b}` must be `low,high`"))),
        }
    }
    if let Some(m) = file.pick(args.min_sep, "min-sep")? {
        plan = plan.with_min_separation(m);
    }
    plan.validate(dim)?;
    let (lo, hi) = plan.bounds[0];
    cfg.insert("seed", seed.to_string());
    cfg.insert("samples", count.to_string());
    cfg.insert("tol", real(tol));
    cfg.insert("box", format!("{},{}", real(lo), real(hi)));
    cfg.insert("min-sep", real(plan.min_separation));
    Ok((plan, tol))
}

fn mapping(args: &MappingArgs, file: &FileConfig, dim: usize, cfg: &mut Resolved) -> ConfigResult<Box<dyn Mapping>> {
    let kind = file.pick(args.mapping.clone(), "mapping")?.unwrap_or_else(|| "affine".into());
    let center = file.pick(args.center.clone(), "center")?.unwrap_or_else(|| "0".into());
    cfg.insert("mapping", kind.clone());
    let m: Box<dyn Mapping> = match kind.as_str() {
        "affine" => {
            let k = file.pick(args.factor, "factor")?.unwrap_or(0.5);
            let c = parse_point(&center, dim)?;
            cfg.insert("factor", real(k));
            cfg.insert("center", c.coords().iter().map(|v| real(*v)).collect::<Vec<_>>().join(","));
            Box::new(make_affine_contraction(c, k)?)
        }
        "identity" => Box::new(make_affine_contraction(gfix_core::Point::zeros(dim), 1.0)?),
        "constant" => {
            let c = parse_point(&center, dim)?;
            cfg.insert("center", c.coords().iter().map(|v| real(*v)).collect::<Vec<_>>().join(","));
            Box::new(make_affine_contraction(c, 0.0)?)
        }
        "translation" => {
            let s = file.pick(args.shift, "shift")?.unwrap_or(1.0);
            cfg.insert("shift", real(s));
            Box::new(Translation::new(s)?)
        }
        other => {
            return Err(ConfigError(format!(
                "unknown mapping `{other}` (expected affine, identity, constant or translation)"
            )))
        }
    };
    Ok(m)
}

fn condition(args: &ConditionArgs, file: &FileConfig, cfg: &mut Resolved) -> ConfigResult<Option<ContractionSpec>> {
    let Some(name) = file.pick(args.condition.clone(), "condition")? else {
        return Ok(None);
    };
    let kind: ConditionKind = name.parse()?;
    let coeffs = parse_coeffs(&file.pick(args.coeff.clone(), "coeff")?.unwrap_or_default())?;
    let pairs: Vec<(&str, f64)> = coeffs.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let spec = ContractionSpec::from_pairs(kind, &pairs)?;
    spec.validate()?;
    cfg.insert("condition", kind.as_str().to_string());
    cfg.insert(
        "coeff",
        spec.coefficients().iter().map(|(k, v)| format!("{k}={}", real(*v))).collect::<Vec<_>>().join(","),
    );
    Ok(Some(spec))
}

fn schedule(args: &ScheduleArgs, file: &FileConfig, cfg: &mut Resolved) -> ConfigResult<StepSchedule> {
    let kind = file.pick(args.schedule.clone(), "schedule")?.unwrap_or_else(|| "constant".into());
    let alpha = file.pick(args.alpha.clone(), "alpha")?;
    let single = |s: Option<String>| -> ConfigResult<f64> {
        match s {
            None => Ok(0.5),
            Some(s) => match parse_reals(&s)?[..] {
                [a] => Ok(a),
                _ => Err(ConfigError(format!("alpha `{s}` must be a single real for this schedule"))),
            },
        }
    };
    let sched = match kind.as_str() {
        "constant" => StepSchedule::Constant(single(alpha)?),
        "harmonic" => StepSchedule::Harmonic,
        "power" => StepSchedule::Power(file.pick(args.power, "power")?.unwrap_or(2.0)),
        "explicit" => {
            let list = alpha.ok_or_else(|| ConfigError("explicit schedule needs --alpha a0,a1,...".into()))?;
            StepSchedule::Explicit(parse_reals(&list)?)
        }
        other => {
            return Err(ConfigError(format!(
                "unknown schedule `{other}` (expected constant, harmonic, power or explicit)"
            )))
        }
    };
    sched.validate()?;
    cfg.insert("schedule", kind);
    match &sched {
        StepSchedule::Constant(a) => {
            cfg.insert("alpha", real(*a));
        }
        StepSchedule::Power(p) => {
            cfg.insert("power", real(*p));
        }
        StepSchedule::Explicit(v) => {
            cfg.insert("alpha", v.iter().map(|a| real(*a)).collect::<Vec<_>>().join(","));
        }
        StepSchedule::Harmonic => {}
    }
    Ok(sched)
}

fn write_report(command: &str, out: Option<&Path>, cfg: &Resolved, body: serde_json::Value, passed: bool) -> ConfigResult<bool> {
    let mut doc = json!({ "command": command, "config": cfg });
    if let (Some(doc), serde_json::Value::Object(body)) = (doc.as_object_mut(), body) {
        doc.extend(body);
    }
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| ConfigError(e.to_string()))?;
    text.push('\n');
    emit(out, &text)?;
    eprintln!("{command}: {}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}

pub fn check_axioms(args: &CheckArgs, command: &str) -> ConfigResult<bool> {
    let file = FileConfig::load(args.common.config.as_deref(), command)?;
    let mut cfg = Resolved::new();
    let entry = space_entry(&args.sample.space, &file, &mut cfg)?;
    let (plan, tol) = sample_plan(&args.sample, &args.common, &file, entry.dim(), &mut cfg)?;
    let report = if command == "check-derived" {
        check_derived(&*entry.space, &plan, tol)?
    } else {
        core_check_axioms(&*entry.space, &plan, tol)?
    };
    let passed = report.passed;
    write_report(command, args.common.out.as_deref(), &cfg, json!({ "report": report }), passed)
}

pub fn check_convexity(args: &ConvexityArgs) -> ConfigResult<bool> {
    let command = "check-convexity";
    let file = FileConfig::load(args.common.config.as_deref(), command)?;
    let mut cfg = Resolved::new();
    let entry = space_entry(&args.sample.space, &file, &mut cfg)?;
    let cs = entry
        .convex
        .clone()
        .ok_or_else(|| ConfigError(format!("space `{}` has no convex structure", entry.key)))?;
    let structure = file.pick(args.structure.clone(), "structure")?.unwrap_or_else(|| "linear".into());
    let w: Arc<dyn ConvexStructure> = match structure.as_str() {
        "linear" => Arc::new(LinearInterpolation),
        "additive" => Arc::new(AdditiveStructure),
        other => return Err(ConfigError(format!("unknown structure `{other}` (expected linear or additive)"))),
    };
    cfg.insert("structure", structure);
    let cs = cs.with_structure(w);
    let (plan, tol) = sample_plan(&args.sample, &args.common, &file, entry.dim(), &mut cfg)?;
    let report = core_check_convexity(&cs, &plan, tol)?;
    let passed = report.passed;
    write_report(command, args.common.out.as_deref(), &cfg, json!({ "report": report }), passed)
}

pub fn check_condition(args: &ConditionCheckArgs) -> ConfigResult<bool> {
    let command = "check-condition";
    let file = FileConfig::load(args.common.config.as_deref(), command)?;
    let mut cfg = Resolved::new();
    let entry = space_entry(&args.sample.space, &file, &mut cfg)?;
    let t = mapping(&args.mapping, &file, entry.dim(), &mut cfg)?;
    let spec = condition(&args.condition, &file, &mut cfg)?
        .ok_or_else(|| ConfigError("--condition is required".into()))?;
    let (plan, tol) = sample_plan(&args.sample, &args.common, &file, entry.dim(), &mut cfg)?;
    let report = core_check_condition(&spec, &*entry.space, &*t, &plan, tol)?;
    let verdict = check_applicability(&spec);
    let passed = report.passed;
    write_report(
        command,
        args.common.out.as_deref(),
        &cfg,
        json!({ "applicability": verdict, "report": report }),
        passed,
    )
}

fn summary_path(explicit: &Option<PathBuf>, file: &FileConfig, out: Option<&Path>) -> ConfigResult<Option<PathBuf>> {
    if let Some(p) = file.pick(explicit.clone(), "summary")? {
        return Ok(Some(p));
    }
    Ok(out.map(|o| {
        let mut s = o.as_os_str().to_owned();
        s.push(".summary.txt");
        PathBuf::from(s)
    }))
}

fn emit_summary(path: Option<&Path>, text: &str) -> ConfigResult<()> {
    match path {
        Some(p) => emit(Some(p), text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

pub fn iterate(args: &IterateArgs) -> ConfigResult<bool> {
    let command = "iterate";
    let file = FileConfig::load(args.common.config.as_deref(), command)?;
    let mut cfg = Resolved::new();
    let entry = space_entry(&args.space, &file, &mut cfg)?;
    let cs = entry
        .convex
        .clone()
        .ok_or_else(|| ConfigError(format!("space `{}` has no convex structure; iteration needs one", entry.key)))?;
    let dim = entry.dim();
    let t = mapping(&args.mapping, &file, dim, &mut cfg)?;
    let spec = condition(&args.condition, &file, &mut cfg)?;
    let sched = schedule(&args.schedule, &file, &mut cfg)?;
    let x0 = parse_point(&file.pick(args.x0.clone(), "x0")?.unwrap_or_else(|| "1".into()), dim)?;
    let mut stop = StoppingRule::default();
    if let Some(n) = file.pick(args.max_iters, "max-iters")? {
        stop = stop.with_max_iters(n);
    }
    if let Some(r) = file.pick(args.residual_tol, "residual-tol")? {
        stop = stop.with_residual_tol(r);
    }
    if let Some(e) = file.pick(args.error_tol, "error-tol")? {
        stop = stop.with_error_tol(e);
    }
    stop.validate()?;
    let bound_tol = file.pick(args.bound_tol, "bound-tol")?.unwrap_or(DEFAULT_BOUND_TOL);
    let seed = seed(&args.common, &file)?;
    cfg.insert("x0", x0.coords().iter().map(|v| real(*v)).collect::<Vec<_>>().join(","));
    cfg.insert("max-iters", stop.max_iters.to_string());
    cfg.insert("residual-tol", real(stop.residual_tol));
    cfg.insert("error-tol", stop.error_tol.map(real).unwrap_or_default());
    cfg.insert("bound-tol", real(bound_tol));
    cfg.insert("seed", seed.to_string());

    let mut trace = run_mann(&cs, &*t, &x0, &sched, &stop)?;
    let mut warnings = Vec::new();
    let mut fields: Vec<(&str, String)> = Vec::new();
    let mut bound_ok = true;
    let mut slack = None;

    let delta = match &spec {
        None => {
            warnings.push("no condition given; bound columns omitted".to_string());
            None
        }
        Some(spec) => {
            let verdict = check_applicability(spec);
            fields.push(("theorem", verdict.theorem.clone()));
            fields.push(("applicable", verdict.satisfied.to_string()));
            if let Some(c) = &verdict.caveat {
                warnings.push(c.clone());
            }
            if !verdict.satisfied {
                let failed: Vec<String> = verdict
                    .residuals
                    .iter()
                    .filter(|r| !(r.value > 0.0))
                    .map(|r| format!("{} = {}", r.name, real(r.value)))
                    .collect();
                warnings.push(format!("condition not applicable ({}); bound columns omitted", failed.join(", ")));
                None
            } else {
                let f = delta_for(spec)?;
                fields.push(("delta", real(f.delta)));
                if f.vacuous {
                    warnings.push(format!("delta = {} >= 1: the product bound is vacuous; bound columns omitted", real(f.delta)));
                    None
                } else {
                    Some(f.delta)
                }
            }
        }
    };

    match (delta, trace.fixed_point.is_some()) {
        (Some(delta), true) => {
            let report = verify_bound(&trace, delta, bound_tol)?;
            attach_bounds(&mut trace, &report);
            bound_ok = report.holds;
            fields.push(("bound_verdict", if report.holds { "holds" } else { "violated" }.into()));
            fields.push(("min_slack", real(report.min_slack)));
            if let Some(i) = report.first_violation {
                fields.push(("first_violation", i.to_string()));
            }
            slack = Some(report.slack);
        }
        (Some(_), false) => {
            warnings.push("mapping has no known fixed point; bound columns omitted".into());
            fields.push(("bound_verdict", "omitted".into()));
        }
        (None, _) => fields.push(("bound_verdict", "omitted".into())),
    }

    let last = trace.last();
    let diverged = trace.status == TerminalStatus::Diverged;
    fields.insert(0, ("status", trace.status.as_str().into()));
    fields.insert(1, ("iterations", last.n.to_string()));
    fields.insert(2, ("final_residual", real(last.residual)));
    fields.insert(3, ("final_true_error", last.true_error.map(real).unwrap_or_default()));
    fields.insert(4, ("divergent_sum", format!("{:?}", sched.divergent_sum()).to_lowercase()));
    for w in &warnings {
        eprintln!("warning: {w}");
        fields.push(("warning", w.clone()));
    }

    let csv = trace_csv(&trace, slack.as_deref());
    let out = args.common.out.as_deref();
    emit(out, &csv)?;
    let summary = summary_text(command, &cfg, &fields);
    emit_summary(summary_path(&args.summary, &file, out)?.as_deref(), &summary)?;
    Ok(!diverged && bound_ok)
}

pub const BOUND_HEADER: &str = "n,alpha_n,factor,bound,log_bound";

pub fn bound(args: &BoundArgs) -> ConfigResult<bool> {
    let command = "bound";
    let file = FileConfig::load(args.common.config.as_deref(), command)?;
    let mut cfg = Resolved::new();
    let spec = condition(&args.condition, &file, &mut cfg)?
        .ok_or_else(|| ConfigError("--condition is required".into()))?;
    let sched = schedule(&args.schedule, &file, &mut cfg)?;
    let n = file.pick(args.max_iters, "max-iters")?.unwrap_or(DEFAULT_BOUND_STEPS);
    cfg.insert("max-iters", n.to_string());
    let out = args.common.out.as_deref();
    let summary_out = summary_path(&args.summary, &file, out)?;

    let verdict = check_applicability(&spec);
    let mut fields: Vec<(&str, String)> = vec![
        ("theorem", verdict.theorem.clone()),
        ("applicable", verdict.satisfied.to_string()),
        ("divergent_sum", format!("{:?}", sched.divergent_sum()).to_lowercase()),
    ];
    for r in &verdict.residuals {
        fields.push(("residual", format!("{} = {}", r.name, real(r.value))));
    }
    if !verdict.satisfied {
        eprintln!("warning: condition not applicable; no bound tabulated");
        emit_summary(summary_out.as_deref(), &summary_text(command, &cfg, &fields))?;
        return Ok(false);
    }
    let f = delta_for(&spec)?;
    fields.push(("delta", real(f.delta)));
    let rb = match product_bound(f.delta, &sched, n) {
        Ok(rb) => rb,
        Err(Error::VacuousBound { .. }) => {
            eprintln!("warning: delta = {} >= 1; the product bound is vacuous", real(f.delta));
            fields.push(("vacuous", "true".into()));
            emit_summary(summary_out.as_deref(), &summary_text(command, &cfg, &fields))?;
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = format!("{BOUND_HEADER}\n");
    for (m, (b, lb)) in rb.products.iter().zip(&rb.log_products).enumerate() {
        let (alpha, factor) = match rb.factors.get(m) {
            Some(fac) => (sched.alpha(m).map(real).unwrap_or_default(), real(*fac)),
            None => (String::new(), String::new()),
        };
        csv.push_str(&format!("{m},{alpha},{factor},{},{}\n", real(*b), real(*lb)));
    }
    emit(out, &csv)?;
    fields.push(("steps", (rb.products.len() - 1).to_string()));
    fields.push(("final_bound", real(rb.last())));
    fields.push(("final_log_bound", rb.log_products.last().copied().map(real).unwrap_or_default()));
    fields.push(("log_space", rb.log_space.to_string()));
    emit_summary(summary_out.as_deref(), &summary_text(command, &cfg, &fields))?;
    Ok(true)
}
