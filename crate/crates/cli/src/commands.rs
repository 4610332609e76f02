//! Implementations of the four subcommands.
//!
//! Report payloads go to `--out` when given, otherwise to stdout; human
//! summary lines go to stdout when the payload went to a file, otherwise to
//! stderr, so stdout always carries exactly one machine-readable document.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use eprop_core::{
    cesaro_profile, check_contradiction_bound, choose_k, continuity_scan, decompose,
    default_candidate_balls, eproperty_profile, find_lemma_ball, kernel_continuity_table,
    liminf_ball_mass, stability_trace, verify_telescoping, Ball, BigRational, ContinuityScan,
    ContradictionOutcome, DecompositionConfig, DecompositionTree, DiagnosticReport,
    DiscreteMeasure, MetricModel, Observable, ProbePlan, StateId, Weight,
};
use serde_json::{json, Value};

use crate::observable::load_observable;
use crate::report::{fmt_sig12, report_to_json, rows_to_csv, trace_to_csv, trace_to_json};
use crate::{
    build_builtin, BuiltinName, CheckStabilityArgs, DecomposeArgs, DiagnoseArgs, Format, Profile,
    RunExampleArgs,
};

/// Writes the payload to `--out` or stdout; summary lines go to the other
/// stream (stdout when the payload went to a file, stderr otherwise).
fn emit(out: &Option<PathBuf>, payload: &str, summary: &[String]) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, payload)
                .with_context(|| format!("cannot write {}", path.display()))?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{payload}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn json_payload(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

/// One probe per distinct positive distance to the target, farthest first;
/// ties resolved toward the lowest state id.
fn default_probe_ladder(model: &MetricModel, target: StateId) -> Vec<StateId> {
    let mut by_distance: Vec<(f64, StateId)> = model
        .state_ids()
        .filter(|&s| s != target)
        .map(|s| (model.distance(s, target), s))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    by_distance.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).expect("distances are finite").then(a.1.index().cmp(&b.1.index()))
    });
    let mut out: Vec<StateId> = Vec::new();
    let mut last = f64::INFINITY;
    for (d, s) in by_distance {
        if d < last {
            out.push(s);
            last = d;
        }
    }
    out
}

fn state_ids_from(model: &MetricModel, ids: &[usize], what: &str) -> Result<Vec<StateId>> {
    let n = model.num_states();
    ids.iter()
        .map(|&id| {
            ensure!(id < n, "{what} state id {id} out of range (model has {n} states)");
            Ok(StateId(id))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// run-example
// ---------------------------------------------------------------------------

struct GapExpectation {
    /// Expected verdict label.
    label: &'static str,
    /// When set, `|gap - .0| <= .1` must hold.
    near: Option<(f64, f64)>,
    /// When set, `gap >= .0` must hold.
    at_least: Option<f64>,
}

struct Bundle {
    model: MetricModel,
    f: Observable,
    eprop_plan: ProbePlan,
    eprop_tol: f64,
    eprop_expect: GapExpectation,
    cesaro_plan: ProbePlan,
    cesaro_tol: f64,
    cesaro_expect: GapExpectation,
    start: StateId,
    n_max: usize,
    final_max: f64,
}

fn bundle_for(name: BuiltinName, m_max: usize, primes: &[u64], j_max: usize) -> Result<Bundle> {
    let model = build_builtin(name, m_max, primes, j_max)?;
    let bundle = match name {
        BuiltinName::Example1 => {
            // Probes 1/m for m >= 2; each dual trajectory climbs back to the
            // point 1 before absorption, so every tail-sup gap equals 1.
            let probes: Vec<StateId> = (2..=m_max).map(StateId).collect();
            let f = eprop_core::identity_on_norm(&model);
            Bundle {
                f,
                eprop_plan: ProbePlan {
                    target: StateId(0),
                    probes: probes.clone(),
                    horizon: 200.max(m_max + 10),
                    tail_start: 1,
                },
                eprop_tol: 1e-6,
                eprop_expect: GapExpectation {
                    label: "FAILS",
                    near: Some((1.0, 1e-6)),
                    at_least: None,
                },
                cesaro_plan: ProbePlan {
                    target: StateId(0),
                    probes,
                    horizon: 10_000,
                    tail_start: 5_000,
                },
                cesaro_tol: 1e-2,
                cesaro_expect: GapExpectation {
                    label: "HOLDS-AT-HORIZON",
                    near: None,
                    at_least: None,
                },
                start: StateId(m_max),
                n_max: m_max + 10,
                final_max: 1e-9,
                model,
            }
        }
        BuiltinName::Example2 => {
            let probes: Vec<StateId> = primes
                .iter()
                .map(|&k| {
                    eprop_core::example2_state(primes, k, 1)
                        .expect("level-1 state exists for every listed prime")
                })
                .collect();
            let k_max = *primes.last().expect("the builder rejected empty prime lists") as usize;
            let f = eprop_core::min1_2norm(&model);
            Bundle {
                f,
                eprop_plan: ProbePlan {
                    target: StateId(0),
                    probes: probes.clone(),
                    horizon: 50.max(k_max + 2),
                    tail_start: 1,
                },
                eprop_tol: 1e-6,
                eprop_expect: GapExpectation {
                    label: "FAILS",
                    near: Some((1.0, 1e-6)),
                    at_least: None,
                },
                cesaro_plan: ProbePlan {
                    target: StateId(0),
                    probes: probes.clone(),
                    horizon: k_max,
                    tail_start: 1,
                },
                cesaro_tol: 1e-6,
                cesaro_expect: GapExpectation {
                    label: "FAILS",
                    near: None,
                    at_least: Some(0.5 - 1e-9),
                },
                start: *probes.last().expect("at least one prime"),
                n_max: k_max + 5,
                final_max: 1e-9,
                model,
            }
        }
        BuiltinName::Doeblin3 => {
            let probes = default_probe_ladder(&model, StateId(0));
            let f = eprop_core::identity_on_norm(&model);
            Bundle {
                f,
                eprop_plan: ProbePlan {
                    target: StateId(0),
                    probes: probes.clone(),
                    horizon: 200,
                    tail_start: 100,
                },
                eprop_tol: 1e-6,
                eprop_expect: GapExpectation {
                    label: "HOLDS-AT-HORIZON",
                    near: None,
                    at_least: None,
                },
                cesaro_plan: ProbePlan {
                    target: StateId(0),
                    probes,
                    horizon: 200,
                    tail_start: 100,
                },
                // Cesàro averages decay like 1/n, not geometrically, so the
                // level distinguishing "settled" from "drifting" is coarser.
                cesaro_tol: 0.05,
                cesaro_expect: GapExpectation {
                    label: "HOLDS-AT-HORIZON",
                    near: None,
                    at_least: None,
                },
                start: StateId(1),
                n_max: 80,
                final_max: 1e-9,
                model,
            }
        }
        BuiltinName::Halfmap => {
            let probes = default_probe_ladder(&model, StateId(0));
            let f = eprop_core::identity_on_norm(&model);
            Bundle {
                f,
                eprop_plan: ProbePlan {
                    target: StateId(0),
                    probes: probes.clone(),
                    horizon: 200,
                    tail_start: 20,
                },
                eprop_tol: 1e-6,
                eprop_expect: GapExpectation {
                    label: "HOLDS-AT-HORIZON",
                    near: None,
                    at_least: None,
                },
                cesaro_plan: ProbePlan {
                    target: StateId(0),
                    probes,
                    horizon: 2_000,
                    tail_start: 1_000,
                },
                cesaro_tol: 1e-6,
                cesaro_expect: GapExpectation {
                    label: "HOLDS-AT-HORIZON",
                    near: None,
                    at_least: None,
                },
                start: StateId(1),
                n_max: j_max + 10,
                final_max: 1e-9,
                model,
            }
        }
    };
    Ok(bundle)
}

fn check_report(report: &DiagnosticReport, expect: &GapExpectation) -> (bool, String) {
    let mut ok = report.verdict.label() == expect.label;
    let mut note = String::new();
    let gap = report.verdict.gap();
    if let Some((target, tol)) = expect.near {
        if (gap - target).abs() > tol {
            ok = false;
            note = format!(" (gap {gap} not within {tol} of {target})");
        }
    }
    if let Some(min) = expect.at_least {
        if gap < min {
            ok = false;
            note = format!(" (gap {gap} below {min})");
        }
    }
    let line = format!(
        "{} [expected {}] {}{}",
        report.verdict,
        expect.label,
        if ok { "ok" } else { "MISMATCH" },
        note
    );
    (ok, line)
}

fn write_report_file(
    dir: &Path,
    model: &MetricModel,
    kind: &str,
    format: Format,
    payload_csv: impl FnOnce() -> String,
    payload_json: impl FnOnce() -> Value,
) -> Result<PathBuf> {
    let path = dir.join(format!("{}-{}.{}", model.name(), kind, format.extension()));
    let text = match format {
        Format::Csv => payload_csv(),
        Format::Json => json_payload(&payload_json()),
    };
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn run_example(args: &RunExampleArgs) -> Result<u8> {
    let bundle = bundle_for(args.name, args.m_max, &args.primes, args.j_max)?;
    let model = &bundle.model;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;

    let eprop = eproperty_profile(model, &bundle.f, &bundle.eprop_plan, bundle.eprop_tol)?;
    let cesaro = cesaro_profile(model, &bundle.f, &bundle.cesaro_plan, bundle.cesaro_tol)?;
    let trace = stability_trace(model, &DiscreteMeasure::<f64>::dirac(bundle.start), bundle.n_max)?;

    let (eprop_ok, eprop_line) = check_report(&eprop, &bundle.eprop_expect);
    let (cesaro_ok, cesaro_line) = check_report(&cesaro, &bundle.cesaro_expect);
    let &(final_n, final_d) = trace.last().expect("traces contain n = 0");
    let stab_ok = final_d <= bundle.final_max;
    let stab_line = format!(
        "final flat distance {} at n={} [expected <= {}] {}",
        fmt_sig12(final_d),
        final_n,
        bundle.final_max,
        if stab_ok { "ok" } else { "MISMATCH" }
    );

    let p1 = write_report_file(
        &args.out,
        model,
        "eproperty",
        args.format,
        || rows_to_csv(&eprop.rows),
        || report_to_json(model, &eprop),
    )?;
    let p2 = write_report_file(
        &args.out,
        model,
        "cesaro",
        args.format,
        || rows_to_csv(&cesaro.rows),
        || report_to_json(model, &cesaro),
    )?;
    let p3 = write_report_file(
        &args.out,
        model,
        "stability",
        args.format,
        || trace_to_csv(&trace),
        || trace_to_json(model, bundle.start.index(), &trace),
    )?;

    println!("{} eproperty: {}", model.name(), eprop_line);
    println!("{} cesaro: {}", model.name(), cesaro_line);
    println!("{} stability: {}", model.name(), stab_line);
    println!("wrote {}, {}, {}", p1.display(), p2.display(), p3.display());
    let all_ok = eprop_ok && cesaro_ok && stab_ok;
    println!(
        "run-example {}: {}",
        model.name(),
        if all_ok { "OK" } else { "MISMATCH" }
    );
    Ok(if all_ok { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

pub fn diagnose(args: &DiagnoseArgs) -> Result<u8> {
    let model = args.source.resolve()?;
    let horizon = args.horizon as usize;
    let tail_start = args.tail_start.map(|t| t as usize).unwrap_or((horizon / 2).max(1));

    match args.profile {
        Profile::Eproperty | Profile::Cesaro => {
            let f = load_observable(&model, &args.f)?;
            let z = require_z(args)?;
            let probes = resolve_probes(&model, args, z)?;
            let plan = ProbePlan { target: z, probes, horizon, tail_start };
            let report = match args.profile {
                Profile::Eproperty => eproperty_profile(&model, &f, &plan, args.tol)?,
                _ => cesaro_profile(&model, &f, &plan, args.tol)?,
            };
            let payload = match args.format {
                Format::Csv => rows_to_csv(&report.rows),
                Format::Json => json_payload(&report_to_json(&model, &report)),
            };
            let summary =
                vec![format!("{} on {}: {}", report.profile, model.name(), report.verdict)];
            emit(&args.out, &payload, &summary)?;
            Ok(0)
        }
        Profile::Stability => {
            let x0 = resolve_x0(&model, args.x0)?;
            let trace = stability_trace(&model, &DiscreteMeasure::<f64>::dirac(x0), horizon)?;
            let payload = match args.format {
                Format::Csv => trace_to_csv(&trace),
                Format::Json => json_payload(&trace_to_json(&model, x0.index(), &trace)),
            };
            let &(final_n, final_d) = trace.last().expect("traces contain n = 0");
            let summary = vec![format!(
                "stability on {}: flat distance {} at n={} (start {})",
                model.name(),
                fmt_sig12(final_d),
                final_n,
                model.state(x0).label
            )];
            emit(&args.out, &payload, &summary)?;
            Ok(0)
        }
        Profile::LiminfBall => {
            let z = require_z(args)?;
            let r = args.r.context("--r is required for the liminf-ball profile")?;
            ensure!(r.is_finite() && r > 0.0, "--r must be finite and positive, got {r}");
            ensure!(
                tail_start <= horizon,
                "--tail-start {tail_start} must not exceed --horizon {horizon}"
            );
            let x0 = resolve_x0(&model, args.x0)?;
            let mass = liminf_ball_mass(
                &model,
                &DiscreteMeasure::<f64>::dirac(x0),
                Ball::new(z, r),
                (tail_start, horizon),
            );
            let payload = match args.format {
                Format::Csv => format!(
                    "start_id,center_id,radius,n_lo,n_hi,liminf_mass\n{},{},{},{},{},{}\n",
                    x0.index(),
                    z.index(),
                    fmt_sig12(r),
                    tail_start,
                    horizon,
                    fmt_sig12(mass)
                ),
                Format::Json => json_payload(&json!({
                    "profile": "liminf-ball",
                    "model": model.name(),
                    "start": x0.index(),
                    "start_label": model.state(x0).label,
                    "center": z.index(),
                    "center_label": model.state(z).label,
                    "radius": r,
                    "n_lo": tail_start,
                    "n_hi": horizon,
                    "liminf_mass": mass,
                })),
            };
            let summary = vec![format!(
                "liminf-ball on {}: mass {} over window [{}, {}] (center {}, radius {})",
                model.name(),
                fmt_sig12(mass),
                tail_start,
                horizon,
                model.state(z).label,
                r
            )];
            emit(&args.out, &payload, &summary)?;
            Ok(0)
        }
        Profile::LemmaBall => {
            let f = load_observable(&model, &args.f)?;
            ensure!(
                args.epsilon.is_finite() && args.epsilon > 0.0,
                "--epsilon must be finite and positive, got {}",
                args.epsilon
            );
            let candidates = default_candidate_balls(&model)?;
            let search = find_lemma_ball(&model, &f, args.epsilon, &candidates, horizon)?;
            let mut csv = String::from("center_id,radius,stable_from,osc_level\n");
            if let Some(found) = &search.found {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    found.ball.center.index(),
                    fmt_sig12(found.ball.radius),
                    found.stable_from,
                    fmt_sig12(found.osc_level)
                ));
            }
            let payload = match args.format {
                Format::Csv => csv,
                Format::Json => json_payload(&json!({
                    "profile": "lemma-ball",
                    "model": model.name(),
                    "epsilon": args.epsilon,
                    "n_max": horizon,
                    "found": search.found.as_ref().map(|b| json!({
                        "center": b.ball.center.index(),
                        "center_label": model.state(b.ball.center).label,
                        "radius": b.ball.radius,
                        "stable_from": b.stable_from,
                        "osc_level": b.osc_level,
                    })),
                    "notes": search.notes,
                })),
            };
            let summary = vec![match &search.found {
                Some(b) => format!(
                    "lemma-ball on {}: FOUND center {} radius {} (stable from {}, oscillation level {})",
                    model.name(),
                    model.state(b.ball.center).label,
                    b.ball.radius,
                    b.stable_from,
                    fmt_sig12(b.osc_level)
                ),
                None => format!(
                    "lemma-ball on {}: NONE ({} candidates examined)",
                    model.name(),
                    search.notes.len()
                ),
            }];
            emit(&args.out, &payload, &summary)?;
            Ok(0)
        }
        Profile::Feller => {
            let z = require_z(args)?;
            let probes = resolve_probes(&model, args, z)?;
            let rows = kernel_continuity_table(&model, z, &probes)?;
            let mut csv = String::from("probe_id,distance,kernel_flat\n");
            for row in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    row.probe.index(),
                    fmt_sig12(row.distance),
                    fmt_sig12(row.gap)
                ));
            }
            let payload = match args.format {
                Format::Csv => csv,
                Format::Json => json_payload(&json!({
                    "profile": "feller",
                    "model": model.name(),
                    "target": z.index(),
                    "target_label": model.state(z).label,
                    "rows": rows.iter().map(|row| json!({
                        "probe": row.probe.index(),
                        "label": model.state(row.probe).label,
                        "distance": row.distance,
                        "kernel_flat": row.gap,
                    })).collect::<Vec<_>>(),
                    "note": "kernel rows on a finite state set; table reported without a verdict",
                })),
            };
            let summary = vec![format!(
                "feller on {}: {} kernel rows compared against target {} (no verdict)",
                model.name(),
                rows.len(),
                model.state(z).label
            )];
            emit(&args.out, &payload, &summary)?;
            Ok(0)
        }
    }
}

fn require_z(args: &DiagnoseArgs) -> Result<StateId> {
    let z = args.z.context("--z is required for this profile")?;
    Ok(StateId(z))
}

fn resolve_x0(model: &MetricModel, x0: Option<usize>) -> Result<StateId> {
    let id = x0.unwrap_or(0);
    let n = model.num_states();
    ensure!(id < n, "--x0 {id} out of range (model has {n} states)");
    Ok(StateId(id))
}

fn resolve_probes(model: &MetricModel, args: &DiagnoseArgs, z: StateId) -> Result<Vec<StateId>> {
    match &args.probes {
        Some(ids) => state_ids_from(model, ids, "probe"),
        None => Ok(default_probe_ladder(model, z)),
    }
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

struct TreeRender {
    levels: Value,
    total_steps: usize,
    deviation: f64,
    deviation_exact: Option<String>,
    deviation_is_zero: bool,
}

fn atoms_json<W: Weight>(
    mu: &DiscreteMeasure<W>,
    exact: &dyn Fn(&W) -> Option<String>,
) -> Value {
    Value::Array(
        mu.atoms()
            .iter()
            .map(|(s, w)| {
                let mut obj = json!({"state": s.index(), "w": Weight::to_f64(w)});
                if let Some(text) = exact(w) {
                    obj["w_exact"] = Value::String(text);
                }
                obj
            })
            .collect(),
    )
}

fn build_and_verify<W: Weight>(
    model: &MetricModel,
    cfg: &DecompositionConfig,
    exact: &dyn Fn(&W) -> Option<String>,
) -> Result<TreeRender> {
    let tree: DecompositionTree<W> = decompose(model, cfg)?;
    let deviation = verify_telescoping(model, cfg, &tree);
    let levels = Value::Array(
        tree.levels
            .iter()
            .enumerate()
            .map(|(i, level)| {
                json!({
                    "level": i + 1,
                    "n": level.n,
                    "radius": level.radius,
                    "nu": atoms_json(&level.nu, exact),
                    "mu": atoms_json(&level.mu, exact),
                })
            })
            .collect(),
    );
    Ok(TreeRender {
        levels,
        total_steps: tree.total_steps(),
        deviation: Weight::to_f64(&deviation),
        deviation_exact: exact(&deviation),
        deviation_is_zero: Weight::is_zero(&deviation),
    })
}

fn continuity_json(model: &MetricModel, scan: &ContinuityScan) -> Value {
    Value::Array(
        scan.rows
            .iter()
            .map(|row| {
                json!({
                    "probe": row.probe.index(),
                    "label": model.state(row.probe).label,
                    "distance": row.distance,
                    "level": row.level,
                    "close_enough": row.close_enough,
                    "nu_flat": row.nu_flat,
                    "mu_flat": row.mu_flat,
                })
            })
            .collect(),
    )
}

fn contradiction_json(model: &MetricModel, outcome: &ContradictionOutcome) -> Value {
    match outcome {
        ContradictionOutcome::NotApplicable { reason } => {
            json!({"status": "not-applicable", "reason": reason})
        }
        ContradictionOutcome::Checked { ball, stable_from, osc_level, base_bound, rows } => {
            json!({
                "status": "checked",
                "ball_center": ball.center.index(),
                "ball_center_label": model.state(ball.center).label,
                "ball_radius": ball.radius,
                "stable_from": stable_from,
                "oscillation_level": osc_level,
                "base_bound": base_bound,
                "rows": rows.iter().map(|row| json!({
                    "probe": row.probe.index(),
                    "label": model.state(row.probe).label,
                    "distance": row.distance,
                    "measured": row.measured,
                    "bound": row.bound,
                    "pass": row.pass,
                })).collect::<Vec<_>>(),
            })
        }
    }
}

pub fn decompose_cmd(args: &DecomposeArgs) -> Result<u8> {
    if args.format != Format::Json {
        bail!("the decomposition record is always JSON; drop --format or pass --format json");
    }
    let model = args.source.resolve()?;
    let f = load_observable(&model, &args.f)?;
    let n = model.num_states();

    ensure!(args.z < n, "--z {} out of range (model has {n} states)", args.z);
    let z = StateId(args.z);

    let r = match args.r {
        Some(r) => {
            ensure!(r.is_finite() && r > 0.0, "--r must be finite and positive, got {r}");
            r
        }
        None => {
            let min_positive = model
                .state_ids()
                .map(|s| model.distance(s, z))
                .filter(|d| *d > 0.0)
                .fold(f64::INFINITY, f64::min);
            ensure!(
                min_positive.is_finite(),
                "every state coincides with the ball center; pass --r explicitly"
            );
            0.5 * min_positive
        }
    };

    let invariant = model.require_invariant()?;
    let ball = Ball::new(z, r);
    let gamma = invariant.mass_where(|s| ball.contains(&model, s));
    let alpha = args.alpha.unwrap_or(0.5 * gamma);
    if !(alpha.is_finite() && alpha > 0.0 && alpha < gamma) {
        eprintln!(
            "error: alpha={alpha} does not satisfy the ball-mass precondition: the ball at {} \
             with radius {r} carries invariant mass gamma={gamma}. Choose α ∈ (0, γ).",
            model.state(z).label
        );
        return Ok(2);
    }

    let x0 = match args.x0 {
        Some(id) => {
            ensure!(id < n, "--x0 {id} out of range (model has {n} states)");
            StateId(id)
        }
        None => model
            .state_ids()
            .max_by(|a, b| {
                let da = model.distance(*a, z);
                let db = model.distance(*b, z);
                da.partial_cmp(&db)
                    .expect("distances are finite")
                    .then(b.index().cmp(&a.index()))
            })
            .expect("models are nonempty"),
    };

    ensure!(
        args.epsilon.is_finite() && args.epsilon > 0.0,
        "--epsilon must be finite and positive, got {}",
        args.epsilon
    );
    ensure!(
        1.0 - alpha < 1.0,
        "alpha={alpha} is too small to make floating-point progress; pass a larger --alpha"
    );
    let k = match args.k {
        Some(k) => k as usize,
        None => choose_k(alpha, f.sup_bound(), args.epsilon),
    };
    let cfg = DecompositionConfig {
        x0,
        z,
        r,
        alpha,
        k,
        n_search: args.n_search as usize,
        epsilon: args.epsilon,
    };

    // Continuity probes: explicit list, or the nearest distinct neighbor of
    // the start state.
    let probes: Vec<StateId> = match &args.probes {
        Some(ids) => state_ids_from(&model, ids, "probe")?,
        None => model
            .state_ids()
            .filter(|&s| s != x0 && model.distance(s, x0) > 0.0)
            .min_by(|a, b| {
                let da = model.distance(*a, x0);
                let db = model.distance(*b, x0);
                da.partial_cmp(&db)
                    .expect("distances are finite")
                    .then(a.index().cmp(&b.index()))
            })
            .into_iter()
            .collect(),
    };

    let render = if args.rational {
        build_and_verify::<BigRational>(&model, &cfg, &|w| Some(w.to_string()))?
    } else {
        build_and_verify::<f64>(&model, &cfg, &|_| None)?
    };
    let gate = if args.rational { 0.0 } else { 1e-10 };
    let deviation_ok = if args.rational {
        render.deviation_is_zero
    } else {
        render.deviation.abs() <= gate
    };

    let scan = continuity_scan(&model, &cfg, &probes)?;
    let drifts: Vec<Value> = probes
        .iter()
        .map(|&p| {
            json!({
                "probe": p.index(),
                "label": model.state(p).label,
                "total_drift": scan.total_drift(p, cfg.k),
            })
        })
        .collect();

    // The contradiction check needs a probe ladder with strictly decreasing
    // distances to the start state.
    let mut ladder: Vec<(f64, StateId)> = probes
        .iter()
        .map(|&p| (model.distance(p, x0), p))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    ladder.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).expect("distances are finite").then(a.1.index().cmp(&b.1.index()))
    });
    ladder.dedup_by(|a, b| a.0 == b.0);
    let plan_probes: Vec<StateId> = ladder.into_iter().map(|(_, p)| p).collect();
    let contradiction = if plan_probes.is_empty() {
        None
    } else {
        let plan = ProbePlan {
            target: x0,
            probes: plan_probes,
            horizon: 200,
            tail_start: 100,
        };
        Some(check_contradiction_bound(&model, &cfg, &f, &plan)?)
    };

    let mut record = json!({
        "model": model.name(),
        "arithmetic": if args.rational { "rational" } else { "float" },
        "x0": x0.index(),
        "x0_label": model.state(x0).label,
        "z": z.index(),
        "z_label": model.state(z).label,
        "r": r,
        "alpha": alpha,
        "gamma": gamma,
        "k": cfg.k,
        "n_search": cfg.n_search,
        "epsilon": cfg.epsilon,
        "total_steps": render.total_steps,
        "levels": render.levels,
        "telescoping_deviation": render.deviation,
        "deviation_gate": gate,
        "deviation_ok": deviation_ok,
        "continuity": continuity_json(&model, &scan),
        "drifts": drifts,
        "contradiction": match &contradiction {
            Some(outcome) => contradiction_json(&model, outcome),
            None => json!({"status": "skipped", "reason": "no probe at positive distance from the start state"}),
        },
    });
    if let Some(exact) = &render.deviation_exact {
        record["telescoping_deviation_exact"] = Value::String(exact.clone());
    }

    let mut summary = vec![
        format!(
            "decomposition on {}: x0={} z={} r={} alpha={} k={} ({} arithmetic), total steps {}",
            model.name(),
            model.state(x0).label,
            model.state(z).label,
            r,
            alpha,
            cfg.k,
            if args.rational { "rational" } else { "float" },
            render.total_steps
        ),
        format!(
            "telescoping deviation: {} (gate {}) {}",
            fmt_sig12(render.deviation),
            gate,
            if deviation_ok { "OK" } else { "EXCEEDS GATE" }
        ),
    ];
    for &p in &probes {
        let captured =
            scan.rows.iter().filter(|row| row.probe == p && row.close_enough).count();
        let line = match scan.total_drift(p, cfg.k) {
            Some(drift) => format!(
                "continuity probe {} (distance {}): {}/{} levels captured, total drift {}",
                model.state(p).label,
                model.distance(p, x0),
                captured,
                cfg.k,
                fmt_sig12(drift)
            ),
            None => format!(
                "continuity probe {} (distance {}): stopped after {}/{} levels (advanced mass \
                 not captured at the level radius)",
                model.state(p).label,
                model.distance(p, x0),
                captured,
                cfg.k
            ),
        };
        summary.push(line);
    }
    summary.push(match &contradiction {
        None => String::from("contradiction check: SKIPPED (no probe at positive distance)"),
        Some(ContradictionOutcome::NotApplicable { reason }) => {
            format!("contradiction check: NOT-APPLICABLE ({reason})")
        }
        Some(ContradictionOutcome::Checked { ball, stable_from, rows, .. }) => {
            let all_pass = rows.iter().all(|row| row.pass != Some(false));
            format!(
                "contradiction check: {} at ball center {} radius {} (stable from {})",
                if all_pass { "PASS" } else { "BOUND VIOLATED" },
                model.state(ball.center).label,
                ball.radius,
                stable_from
            )
        }
    });

    emit(&args.out, &json_payload(&record), &summary)?;
    Ok(if deviation_ok { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// check-stability
// ---------------------------------------------------------------------------

pub fn check_stability(args: &CheckStabilityArgs) -> Result<u8> {
    let model = args.source.resolve()?;
    let x0 = resolve_x0(&model, Some(args.x0))?;
    let trace = stability_trace(
        &model,
        &DiscreteMeasure::<f64>::dirac(x0),
        args.horizon as usize,
    )?;
    let payload = match args.format {
        Format::Csv => trace_to_csv(&trace),
        Format::Json => json_payload(&trace_to_json(&model, x0.index(), &trace)),
    };
    let &(final_n, final_d) = trace.last().expect("traces contain n = 0");
    let summary = vec![format!(
        "stability on {}: flat distance {} at n={} (start {})",
        model.name(),
        fmt_sig12(final_d),
        final_n,
        model.state(x0).label
    )];
    emit(&args.out, &payload, &summary)?;
    Ok(0)
}
