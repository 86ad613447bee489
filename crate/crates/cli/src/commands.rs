//! Command implementations. Each returns a report and the exit code it
//! implies; hard failures come back as [`CliError`].

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use affdim_core::attractor::{
    box_dimension, correlation_dimension, dyadic_scales, generate_exhaustive, generate_random, histogram,
    local_dimensions, log_radii, PointCloud, WindowPolicy,
};
use affdim_core::furstenberg::{
    furstenberg_limit_residual, grassmann_orbit, projected_svf_limit_residual, transversality_delta,
    transversality_tail, typical_subspace, TransversalityDelta,
};
use affdim_core::ifs::{membership_margin, projection_depth, ssc_certificate};
use affdim_core::linalg::Subspace;
use affdim_core::lyapunov::{
    domination_test, exponents_mc, lyapunov_dimension, pinching_twisting_search, DominationMode,
};
use affdim_core::pressure::{affinity_upper, dimension_bracket, DimensionBracket, McParams, PRESSURE_WORD_LIMIT};
use affdim_core::rng::stream;
use affdim_core::symbolic::word_count;
use affdim_core::{fixtures, AffineIfs, LyapunovSpectrum, StepMeasure, Word};
use serde_json::{json, Value};

use crate::args::{
    AttractorArgs, Certificate, CheckArgs, Cli, Command, DimensionArgs, FurstenbergArgs, McArgs, TransversalityArgs,
    VerifyArgs,
};
use crate::error::{CliError, CliResult, ExitCode};
use crate::report::{CommandEcho, Inputs, Report, Timing, SCHEMA_VERSION};
use crate::spec::{sha256_hex, IfsSpecFile};

/// Random clouds are truncated where the tail is below this.
const PROJECTION_TOL: f64 = 1e-12;
const MAX_RANDOM_DEPTH: usize = 10_000;
/// Domination runs exhaustively up to this many words per level.
const DOMINATION_EXHAUSTIVE: u128 = 1 << 20;
const DOMINATION_SAMPLES: usize = 4096;

pub struct Outcome {
    pub report: Report,
    pub code: ExitCode,
}

struct Loaded {
    path: PathBuf,
    sha256: String,
    ifs: AffineIfs,
}

fn load(path: &Path) -> CliResult<Loaded> {
    let (spec, sha256) = IfsSpecFile::load(path)?;
    let ifs = spec
        .to_ifs()
        .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))?;
    Ok(Loaded {
        path: path.to_path_buf(),
        sha256,
        ifs,
    })
}

struct ReportBuilder<'a> {
    cli: &'a Cli,
    argv: &'a [String],
    started: Instant,
}

impl ReportBuilder<'_> {
    fn finish(&self, spec: Option<&Loaded>, sha256: Option<String>, params: Value, results: Value) -> Report {
        Report {
            version: SCHEMA_VERSION.to_string(),
            command: CommandEcho {
                name: self.cli.command.name().to_string(),
                args: self.argv.to_vec(),
            },
            inputs: Inputs {
                spec: spec.map(|s| s.path.display().to_string()),
                sha256: spec.map(|s| s.sha256.clone()).or(sha256).unwrap_or_default(),
                seed: self.cli.seed,
                threads: rayon::current_num_threads(),
                params,
            },
            results,
            timing: Timing {
                wall_seconds: self.started.elapsed().as_secs_f64(),
            },
        }
    }
}

/// Runs the parsed command. `argv` is echoed into the report.
pub fn execute(cli: &Cli, argv: &[String]) -> CliResult<Outcome> {
    let rb = ReportBuilder {
        cli,
        argv,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Check(a) => check(&rb, a),
        Command::Dimension(a) => dimension(&rb, a),
        Command::Attractor(a) => attractor(&rb, a),
        Command::Verify(a) => verify(&rb, a),
        Command::Furstenberg(a) => furstenberg(&rb, a),
        Command::Transversality(a) => transversality(&rb, a),
    }
}

fn words_json(w: &Option<Word>) -> Value {
    w.as_ref().map_or(Value::Null, |w| json!(w.to_string()))
}

fn spectrum_json(s: &LyapunovSpectrum) -> Value {
    json!({
        "chi": s.chi(),
        "stderr": s.stderr(),
        "steps": s.steps(),
        "trials": s.trials(),
    })
}

fn bracket_json(b: &DimensionBracket, tol: f64, mc: &McArgs) -> Value {
    json!({
        "n": b.n,
        "tol": tol,
        "mc_steps": mc.mc_steps,
        "trials": mc.trials,
        "upper": b.upper,
        "lower": b.lower,
        "lower_stderr": b.lower_stderr,
        "midpoint": b.midpoint(),
        "entropy": b.entropy,
        "spectrum": spectrum_json(&b.spectrum),
    })
}

fn conditions_json(ifs: &AffineIfs) -> (Value, bool, bool) {
    let membership = match membership_margin(ifs) {
        Ok(r) => json!({
            "member": r.is_member(),
            "margin": r.membership_margin,
            "threshold": r.threshold_used,
            "separation_ratio": r.separation_ratio,
            "contractive": r.contractive,
        }),
        Err(e) => json!({ "member": false, "error": e.to_string() }),
    };
    let member = membership["member"].as_bool().unwrap_or(false);
    let (ssc, certified) = match ssc_certificate(ifs) {
        Ok(gap) => (json!({ "gap": gap, "certified": gap > 0.0 }), gap > 0.0),
        Err(e) => (json!({ "certified": false, "error": e.to_string() }), false),
    };
    (json!({ "membership": membership, "ssc": ssc }), member, certified)
}

fn check(rb: &ReportBuilder, a: &CheckArgs) -> CliResult<Outcome> {
    let spec = load(&a.spec)?;
    let ifs = &spec.ifs;
    let (conditions, member, ssc) = conditions_json(ifs);
    let mut results = conditions;
    let mut dominated = false;
    if ifs.dim() >= 2 && ifs.is_contractive() {
        let exhaustive = word_count(ifs.len(), a.domination_n).is_some_and(|c| c <= DOMINATION_EXHAUSTIVE);
        let mode = if exhaustive {
            DominationMode::Exhaustive
        } else {
            DominationMode::Sampled {
                count: DOMINATION_SAMPLES,
                seed: rb.cli.seed,
            }
        };
        let report = domination_test(ifs, a.domination_n, mode)?;
        dominated = report.all_dominated();
        let gaps: Vec<Value> = report
            .gaps
            .iter()
            .map(|g| {
                json!({
                    "gap": g.gap,
                    "class": g.class.as_str(),
                    "decay_rate": g.decay_rate,
                    "r2": g.r2,
                    "min_ratio": g.min_ratio,
                    "max_ratio": g.max_ratio,
                })
            })
            .collect();
        results["domination"] = json!({
            "n_max": report.n_max,
            "sampled": report.sampled,
            "samples": if report.sampled { json!(DOMINATION_SAMPLES) } else { Value::Null },
            "gaps": gaps,
        });
    } else {
        results["domination"] = json!({ "skipped": "needs d >= 2 and a contractive system" });
    }
    let mut pinching = false;
    if ifs.dim() == 2 {
        let pt = pinching_twisting_search(ifs, a.pinch_len)?;
        pinching = pt.pinching.is_some() && pt.twisting.is_some();
        results["pinching_twisting"] = json!({
            "max_len": a.pinch_len,
            "pinching": words_json(&pt.pinching),
            "twisting": words_json(&pt.twisting),
        });
    }
    let holds = |c: Certificate| match c {
        Certificate::Member => member,
        Certificate::Ssc => ssc,
        Certificate::Domination => dominated,
        Certificate::Pinching => pinching,
    };
    let pass = a.require.iter().all(|&c| holds(c));
    results["certificates"] = json!({
        "member": member,
        "ssc": ssc,
        "domination": dominated,
        "pinching": pinching,
        "required": a.require.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
        "pass": pass,
    });
    let params = json!({
        "domination_n": a.domination_n,
        "pinch_len": a.pinch_len,
    });
    Ok(Outcome {
        report: rb.finish(Some(&spec), None, params, results),
        code: if pass { ExitCode::Pass } else { ExitCode::Fail },
    })
}

fn level_schedule(n: usize) -> Vec<usize> {
    let mut levels: Vec<usize> = std::iter::successors(Some(2usize), |l| l.checked_mul(2))
        .take_while(|&l| l < n)
        .collect();
    levels.push(n);
    levels
}

fn check_level(ifs: &AffineIfs, n: usize) -> CliResult<()> {
    match word_count(ifs.len(), n) {
        Some(c) if c <= PRESSURE_WORD_LIMIT => Ok(()),
        c => Err(CliError::new(
            ExitCode::Budget,
            format!(
                "--level {n} needs {} words, limit is {PRESSURE_WORD_LIMIT}",
                c.map_or("more than 2^128".to_string(), |c| c.to_string())
            ),
        )),
    }
}

fn mc_params(mc: &McArgs, seed: u64) -> McParams {
    McParams {
        steps: mc.mc_steps,
        trials: mc.trials,
        seed,
    }
}

fn bernoulli_json(ifs: &AffineIfs, mc: &McArgs, seed: u64) -> CliResult<Value> {
    let p = ifs.weights_or_uniform();
    let measure = StepMeasure::bernoulli(&p)?;
    let spectrum = exponents_mc(ifs, &measure, mc.mc_steps, mc.trials, seed)?;
    let h = measure.entropy();
    Ok(json!({
        "weights": p,
        "entropy": h,
        "mc_steps": mc.mc_steps,
        "trials": mc.trials,
        "spectrum": spectrum_json(&spectrum),
        "lyapunov_dimension": lyapunov_dimension(h, spectrum.chi(), ifs.dim()),
    }))
}

fn dimension(rb: &ReportBuilder, a: &DimensionArgs) -> CliResult<Outcome> {
    let spec = load(&a.spec)?;
    let ifs = &spec.ifs;
    if a.level == 0 {
        return Err(CliError::input("--level must be at least 1"));
    }
    check_level(ifs, a.level)?;
    let mut levels = Vec::new();
    for n in level_schedule(a.level) {
        levels.push(json!({ "n": n, "tol": a.tol, "s_n": affinity_upper(ifs, n, a.tol)? }));
    }
    let seed = rb.cli.seed;
    let bracket = dimension_bracket(ifs, a.level, a.tol, mc_params(&a.mc, seed))?;
    let results = json!({
        "bracket": bracket_json(&bracket, a.tol, &a.mc),
        "levels": levels,
        "bernoulli": bernoulli_json(ifs, &a.mc, seed)?,
    });
    let params = json!({
        "level": a.level,
        "tol": a.tol,
        "mc_steps": a.mc.mc_steps,
        "trials": a.mc.trials,
    });
    Ok(Outcome {
        report: rb.finish(Some(&spec), None, params, results),
        code: ExitCode::Pass,
    })
}

fn default_depth(ifs: &AffineIfs) -> CliResult<usize> {
    Ok(projection_depth(ifs, PROJECTION_TOL)?.clamp(1, MAX_RANDOM_DEPTH))
}

fn box_json(cloud: &PointCloud, radius: f64, max_exp: i32) -> CliResult<Value> {
    let scales = dyadic_scales(radius, 0, max_exp);
    let curve = box_dimension(cloud, &scales, WindowPolicy::Auto { radius })?;
    Ok(json!({
        "slope": curve.slope,
        "intercept": curve.intercept,
        "r2": curve.r2,
        "fit_window": [curve.fit_window.0, curve.fit_window.1],
        "resolution": curve.resolution,
        "scales": curve.scales,
        "counts": curve.counts,
    }))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn attractor(rb: &ReportBuilder, a: &AttractorArgs) -> CliResult<Outcome> {
    let spec = load(&a.spec)?;
    let ifs = &spec.ifs;
    ifs.require_contractive()?;
    let radius = ifs.radius()?;
    let seed = rb.cli.seed;
    let (cloud, depth) = if a.exhaustive {
        let depth = a
            .depth
            .ok_or_else(|| CliError::input("--exhaustive needs --depth"))?;
        (generate_exhaustive(ifs, depth)?, depth)
    } else {
        if a.points == 0 {
            return Err(CliError::input("--points must be positive: the cloud would be empty"));
        }
        let depth = match a.depth {
            Some(d) => d,
            None => default_depth(ifs)?,
        };
        (generate_random(ifs, a.points, depth, seed)?, depth)
    };
    let mut results = json!({
        "cloud": {
            "mode": if a.exhaustive { "exhaustive" } else { "random" },
            "points": cloud.len(),
            "depth": depth,
            "radius": radius,
        }
    });
    if let Some(path) = &a.csv {
        cloud
            .write_csv(create(path)?)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        results["csv"] = json!(path.display().to_string());
    }
    if let Some(path) = &a.render {
        cloud
            .write_ppm(create(path)?, a.width, a.height)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        results["render"] = json!({ "path": path.display().to_string(), "width": a.width, "height": a.height });
    }
    if a.box_dim {
        results["box_dimension"] = box_json(&cloud, radius, a.max_scale_exp)?;
    }
    if a.correlation {
        let radii = log_radii(radius, 30, 4.0);
        let c = correlation_dimension(&cloud, &radii, WindowPolicy::Auto { radius })?;
        results["correlation_dimension"] = json!({
            "slope": c.slope,
            "r2": c.r2,
            "proxy": c.proxy,
            "points_used": c.points_used,
            "fit_window": [c.fit_window.0, c.fit_window.1],
            "radii": c.radii,
            "fraction": c.fraction,
        });
    }
    if a.local_dim {
        let (lo, hi) = (radius * 1e-3, radius * 1e-2);
        let dims = local_dimensions(&cloud, lo, hi, 1000, seed)?;
        let bins = 20;
        results["local_dimension"] = json!({
            "r_lo": lo,
            "r_hi": hi,
            "queries": dims.len(),
            "bins": bins,
            "range": [0.0, ifs.dim() as f64],
            "histogram": histogram(&dims, 0.0, ifs.dim() as f64, bins),
            "mean": dims.iter().sum::<f64>() / dims.len() as f64,
        });
    }
    let params = json!({
        "points": a.points,
        "depth": depth,
        "exhaustive": a.exhaustive,
        "max_scale_exp": a.max_scale_exp,
    });
    Ok(Outcome {
        report: rb.finish(Some(&spec), None, params, results),
        code: ExitCode::Pass,
    })
}

fn delta_json(d: &TransversalityDelta) -> Value {
    json!({
        "delta_hat": d.delta_hat,
        "raw_min": d.raw_min,
        "correction": d.correction,
        "samples": d.samples,
        "depth": d.depth,
        "member": d.member,
        "worst_pair": [d.worst_pair.0.to_string(), d.worst_pair.1.to_string()],
    })
}

struct VerifyParams<'a> {
    args: &'a VerifyArgs,
    points: usize,
}

/// The full pipeline for one system: `(results, pass)`.
fn verify_system(ifs: &AffineIfs, p: &VerifyParams, seed: u64) -> CliResult<(Value, bool)> {
    let a = p.args;
    let (conditions, member, _) = conditions_json(ifs);
    if !member {
        return Ok((json!({ "check": conditions, "verdict": "FAIL", "stopped_at": "check" }), false));
    }
    check_level(ifs, a.level).map_err(|e| e.in_stage("dimension"))?;
    let bracket =
        dimension_bracket(ifs, a.level, a.tol, mc_params(&a.mc, seed)).map_err(|e| CliError::from(e).in_stage("dimension"))?;
    let radius = ifs.radius()?;
    let depth = default_depth(ifs)?;
    let cloud = generate_random(ifs, p.points, depth, seed).map_err(|e| CliError::from(e).in_stage("attractor"))?;
    let boxes = box_json(&cloud, radius, 24).map_err(|e| e.in_stage("attractor"))?;
    drop(cloud);
    let furstenberg = furstenberg_stage(ifs, a, seed).map_err(|e| e.in_stage("furstenberg"))?;
    let transversality = if ifs.dim() == 2 {
        let d = transversality_delta(ifs, a.delta_samples, a.depth, seed)
            .map_err(|e| CliError::from(e).in_stage("transversality"))?;
        delta_json(&d)
    } else {
        json!({ "skipped": "the rotated translation family is planar" })
    };
    let box_slope = boxes["slope"].as_f64().unwrap_or(f64::NAN);
    let diff = box_slope - bracket.midpoint();
    let pass = diff.abs() <= a.tolerance;
    Ok((
        json!({
            "check": conditions,
            "bracket": bracket_json(&bracket, a.tol, &a.mc),
            "box_dimension": boxes,
            "points": p.points,
            "depth": depth,
            "furstenberg": furstenberg,
            "transversality": transversality,
            "difference": diff,
            "tolerance": a.tolerance,
            "verdict": if pass { "PASS" } else { "FAIL" },
        }),
        pass,
    ))
}

fn furstenberg_stage(ifs: &AffineIfs, a: &VerifyArgs, seed: u64) -> CliResult<Value> {
    if ifs.dim() < 2 {
        return Ok(json!({ "skipped": "needs d >= 2" }));
    }
    let measure = StepMeasure::bernoulli(&ifs.weights_or_uniform())?;
    let chi = exponents_mc(ifs, &measure, a.mc.mc_steps, a.mc.trials, seed)?;
    let orbit = grassmann_orbit(ifs, &measure, 1, a.orbit_steps, seed)?;
    let r = furstenberg_limit_residual(&orbit, &chi, 1)?;
    let d = ifs.dim();
    let v = typical_subspace(ifs, &measure, d - 1, seed)?;
    let proj = projected_svf_limit_residual(ifs, &measure, &v, 1.0, a.orbit_steps, &chi, seed)?;
    Ok(json!({
        "steps": a.orbit_steps,
        "k": 1,
        "s": 1.0,
        "limit_residual": r.last(),
        "projected_residual": proj.last(),
        "spectrum": spectrum_json(&chi),
    }))
}

fn verify(rb: &ReportBuilder, a: &VerifyArgs) -> CliResult<Outcome> {
    let seed = rb.cli.seed;
    let base = json!({
        "level": a.level,
        "tol": a.tol,
        "mc_steps": a.mc.mc_steps,
        "trials": a.mc.trials,
        "tolerance": a.tolerance,
        "delta_samples": a.delta_samples,
        "depth": a.depth,
        "orbit_steps": a.orbit_steps,
    });
    if a.random_ensemble {
        if a.spec.is_some() {
            return Err(CliError::input("--random-ensemble does not take a spec file"));
        }
        let boundary = 6f64.sqrt() / (4.0 + 6f64.sqrt());
        if !(a.target_norm > 0.0 && a.target_norm < boundary) {
            return Err(CliError::input(format!(
                "--target-norm must lie in (0, {boundary:.6}) for the samples to be members"
            )));
        }
        if a.ensemble_size == 0 {
            return Err(CliError::input("--ensemble-size must be positive"));
        }
        let p = VerifyParams {
            args: a,
            points: a.points.unwrap_or(100_000),
        };
        let mut params = base;
        params["ensemble_size"] = json!(a.ensemble_size);
        params["target_norm"] = json!(a.target_norm);
        params["min_pass_rate"] = json!(a.min_pass_rate);
        params["points"] = json!(p.points);
        let mut rng = stream(seed, u64::MAX);
        let mut members = Vec::with_capacity(a.ensemble_size);
        let mut passes = 0usize;
        for i in 0..a.ensemble_size {
            let ifs = fixtures::random_member(a.target_norm, &mut rng);
            let (res, pass) = verify_system(&ifs, &p, seed.wrapping_add(i as u64 + 1))
                .map_err(|e| CliError::new(e.code, format!("ensemble member {i}: {}", e.message)))?;
            passes += usize::from(pass);
            members.push(json!({
                "index": i,
                "spec": serde_json::to_value(IfsSpecFile::from_ifs(&ifs, None)).expect("spec serializes"),
                "box_dimension": res["box_dimension"]["slope"],
                "midpoint": res["bracket"]["midpoint"],
                "difference": res["difference"],
                "verdict": res["verdict"],
            }));
        }
        let rate = passes as f64 / a.ensemble_size as f64;
        let ok = rate >= a.min_pass_rate;
        let results = json!({
            "members": members,
            "passes": passes,
            "pass_rate": rate,
            "verdict": if ok { "PASS" } else { "FAIL" },
        });
        let hash = sha256_hex(crate::report::to_json(&params).as_bytes());
        return Ok(Outcome {
            report: rb.finish(None, Some(hash), params, results),
            code: if ok { ExitCode::Pass } else { ExitCode::Fail },
        });
    }
    let path = a
        .spec
        .as_ref()
        .ok_or_else(|| CliError::input("verify needs a spec file or --random-ensemble"))?;
    let spec = load(path)?;
    let p = VerifyParams {
        args: a,
        points: a.points.unwrap_or(1_000_000),
    };
    if p.points == 0 {
        return Err(CliError::input("--points must be positive"));
    }
    let mut params = base;
    params["points"] = json!(p.points);
    let (results, pass) = verify_system(&spec.ifs, &p, seed)?;
    Ok(Outcome {
        report: rb.finish(Some(&spec), None, params, results),
        code: if pass { ExitCode::Pass } else { ExitCode::Fail },
    })
}

fn furstenberg(rb: &ReportBuilder, a: &FurstenbergArgs) -> CliResult<Outcome> {
    let spec = load(&a.spec)?;
    let ifs = &spec.ifs;
    let d = ifs.dim();
    if d < 2 {
        return Err(CliError::input("furstenberg needs d >= 2"));
    }
    if a.steps == 0 {
        return Err(CliError::input("--steps must be positive"));
    }
    let seed = rb.cli.seed;
    let measure = StepMeasure::bernoulli(&ifs.weights_or_uniform())?;
    let chi = exponents_mc(ifs, &measure, a.mc_steps, a.trials, seed)?;
    let orbit = grassmann_orbit(ifs, &measure, a.k, a.steps, seed)?;
    let r = furstenberg_limit_residual(&orbit, &chi, a.k)?;
    let checkpoints: Vec<Value> = std::iter::successors(Some(10usize), |n| n.checked_mul(10))
        .take_while(|&n| n < a.steps)
        .chain(std::iter::once(a.steps))
        .map(|n| json!({ "n": n, "residual": r[n - 1] }))
        .collect();
    let tail_start = a.steps - a.steps.div_ceil(10);
    let tail_max = r[tail_start..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let v = typical_subspace(ifs, &measure, a.k, seed)?;
    let last_plane: &Subspace = orbit.last();
    let projected = projected_svf_limit_residual(ifs, &measure, &v, a.s, a.steps, &chi, seed)?;
    let results = json!({
        "spectrum": spectrum_json(&chi),
        "limit_residual": {
            "k": a.k,
            "n": a.steps,
            "final": r.last(),
            "max_abs_last_tenth": tail_max,
            "checkpoints": checkpoints,
            "final_basis": last_plane.basis().as_slice(),
        },
        "projected_residual": {
            "s": a.s,
            "subspace_dim": v.dim(),
            "n": a.steps,
            "final": projected.last(),
        },
    });
    let params = json!({
        "k": a.k,
        "steps": a.steps,
        "s": a.s,
        "mc_steps": a.mc_steps,
        "trials": a.trials,
    });
    Ok(Outcome {
        report: rb.finish(Some(&spec), None, params, results),
        code: ExitCode::Pass,
    })
}

fn transversality(rb: &ReportBuilder, a: &TransversalityArgs) -> CliResult<Outcome> {
    let spec = load(&a.spec)?;
    let ifs = &spec.ifs;
    let seed = rb.cli.seed;
    let delta = transversality_delta(ifs, a.samples, a.depth, seed)?;
    let mut results = json!({ "delta": delta_json(&delta) });
    if a.stability {
        let doubled = transversality_delta(ifs, 2 * a.samples, a.depth, seed)?;
        let change = if delta.delta_hat > 0.0 {
            (doubled.delta_hat - delta.delta_hat).abs() / delta.delta_hat
        } else {
            f64::NAN
        };
        results["doubled"] = delta_json(&doubled);
        results["relative_change"] = json!(change);
    }
    if a.tail {
        let mut rng = stream(seed, u64::MAX);
        let v = Subspace::random(ifs.dim(), 1, &mut rng)?;
        let radius = ifs.radius()?;
        let t: Vec<f64> = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1].iter().map(|x| x * radius).collect();
        let (wi, wj) = &delta.worst_pair;
        let tail = transversality_tail(ifs, &v, (wi, wj), &t, a.tail_samples, seed)?;
        results["tail"] = json!({
            "pair": [wi.to_string(), wj.to_string()],
            "subspace": v.basis().as_slice(),
            "t": tail.t,
            "p": tail.p,
            "bound": tail.bound,
            "c_hat": tail.c_hat,
            "samples": tail.samples,
        });
    }
    let params = json!({
        "samples": a.samples,
        "depth": a.depth,
        "stability": a.stability,
        "tail_samples": a.tail_samples,
    });
    Ok(Outcome {
        report: rb.finish(Some(&spec), None, params, results),
        code: ExitCode::Pass,
    })
}
