//! The `run`, `sweep-T`, `ancilla-check` and `preset` commands.

use std::path::PathBuf;
use std::time::Instant;

use qfames::acquisition::ancilla::ancilla_free_reconstruct;
use qfames::acquisition::observable::{observable_exact_signal, observable_shot_sample};
use qfames::dods::{default_params, landscape, run_on_landscape, DodsDoc};
use qfames::experiment::{sweep_t, trial_tensor, DataMode, SweepRecord};
use qfames::models::builders::Boundary;
use qfames::models::evolution::Propagator;
use qfames::observables::{observable_spectra, ObservableSpectrum};
use qfames::oracle::GroundTruth;
use qfames::{QfamesConfig, QfamesError};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Assumptions, DataSpec, ExperimentConfig, ModelSpec, ObservableSpec, OperatorSpec, OracleSpec, StateSpec, SCHEMA};
use crate::output::{csv_text, num, Staging};
use crate::pipeline::{build_model, build_states, exact_model, illustrative_phi, observable, signal_source, truth, Model};
use crate::Failure;

#[derive(Serialize)]
struct SeedRun {
    seed: u64,
    #[serde(flatten)]
    doc: DodsDoc,
}

#[derive(Serialize)]
struct SeedObservable {
    seed: u64,
    observable: String,
    spectra: Vec<PhysicalSpectrum>,
}

#[derive(Serialize)]
struct PhysicalSpectrum {
    theta_star_physical: f64,
    #[serde(flatten)]
    spectrum: ObservableSpectrum,
}

struct SeedResult {
    run: SeedRun,
    landscape: Vec<Vec<String>>,
    singular: Vec<Vec<String>>,
    lowest: Vec<f64>,
    observable: Option<SeedObservable>,
    truth: Option<GroundTruth>,
    families: (usize, usize),
}

fn one_seed(cfg: &ExperimentConfig, model: &Model, seed: u64) -> Result<SeedResult, Failure> {
    let qc = &cfg.qfames;
    let scale = model.norm_scale();
    let (left, right) = build_states(cfg, model, seed)?;
    let (source, mode) = signal_source(cfg, model, &left, &right)?;
    let tensor = trial_tensor(source.as_ref(), qc, mode, seed)?;
    let land = landscape(&tensor, qc)?;
    let est = run_on_landscape(&tensor, qc, &land)?;

    let landscape_rows = land
        .values
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let th = land.theta(j);
            vec![seed.to_string(), num(th), num(th / scale), num(*w)]
        })
        .collect();
    let mut singular = Vec::new();
    let mut candidates: Vec<_> = est.clusters.iter().chain(&est.discarded).collect();
    candidates.sort_by(|a, b| a.theta_star.total_cmp(&b.theta_star));
    for (c, cand) in candidates.iter().enumerate() {
        for (i, s) in cand.singular_values.iter().enumerate() {
            singular.push(vec![
                seed.to_string(),
                c.to_string(),
                num(cand.theta_star),
                num(cand.theta_star / scale),
                i.to_string(),
                num(*s),
                (*s > qc.tau).to_string(),
            ]);
        }
    }
    let lowest = candidates.first().map(|c| c.singular_values.clone()).unwrap_or_default();

    let observable = match &cfg.observable {
        Some(spec) => Some(observable_stage(cfg, model, spec, &left, &right, &est.clusters, seed)?),
        None => None,
    };
    let truth = match (&cfg.oracle, &model.spectrum) {
        (Some(_), Some(_)) => Some(truth(cfg, model, &left, &right)?),
        _ => None,
    };
    Ok(SeedResult {
        run: SeedRun {
            seed,
            doc: est.to_doc(scale),
        },
        landscape: landscape_rows,
        singular,
        lowest,
        observable,
        truth,
        families: (left.len(), right.len()),
    })
}

fn observable_stage(
    cfg: &ExperimentConfig,
    model: &Model,
    spec: &ObservableSpec,
    left: &qfames::StateSet,
    right: &qfames::StateSet,
    clusters: &[qfames::ClusterEstimate],
    seed: u64,
) -> Result<SeedObservable, Failure> {
    let spectrum = model
        .spectrum
        .as_ref()
        .ok_or_else(|| Failure::validation("observable: needs an oracle spectrum spanning the states"))?;
    let op = observable(&spec.operator, model)?;
    let qc = &cfg.qfames;
    let exact = observable_exact_signal(spectrum, left, right, &op, qc.t, qc.sigma, qc.n, spec.pairing, seed)?;
    let tensor = if spec.shots {
        observable_shot_sample(&exact, seed)?
    } else {
        exact
    };
    let spectra = observable_spectra(clusters, &tensor)?;
    let scale = model.norm_scale();
    Ok(SeedObservable {
        seed,
        observable: op.label(),
        spectra: spectra
            .into_iter()
            .map(|s| PhysicalSpectrum {
                theta_star_physical: s.theta_star / scale,
                spectrum: s,
            })
            .collect(),
    })
}

/// The parameter report: gap, tail and count from the oracle of the first
/// seed when available, else from the config's assumptions.
fn parameter_report(cfg: &ExperimentConfig, first: &SeedResult) -> serde_json::Value {
    let (l, r) = first.families;
    let (source, guess) = match (&first.truth, &cfg.assumptions) {
        (Some(t), _) if t.valid => {
            let gap = if t.gap.is_finite() { t.gap } else { 2.0 * std::f64::consts::PI };
            ("oracle", Some((gap, t.p_tail, t.k())))
        }
        (_, Some(a)) => ("assumptions", Some((a.gap, a.p_tail, a.k))),
        _ => ("none", None),
    };
    match guess {
        None => json!({"source": source, "note": "no oracle or assumptions given"}),
        Some((gap, p_tail, k)) => match default_params(gap, p_tail, l, r, k) {
            Ok(d) => json!({
                "source": source,
                "gap": gap,
                "p_tail": p_tail,
                "k": k,
                "suggested": d.config,
                "conditions": d.report,
                "warnings": d.warnings,
            }),
            Err(e) => json!({"source": source, "error": e.to_string()}),
        },
    }
}

fn manifest(cfg: &ExperimentConfig, command: &str, model: &Model, wall: f64, files: &[String]) -> serde_json::Value {
    json!({
        "schema": "qfames-manifest/1",
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "seeds": cfg.seeds,
        "norm_scale": model.norm_scale(),
        "dimension": model.hamiltonian.dimension(),
        "oracle_levels": model.spectrum.as_ref().map(|s| s.len()),
        "workers": rayon::current_num_threads(),
        "wall_time_s": wall,
        "files": files,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<PathBuf, Failure> {
    let start = Instant::now();
    let model = build_model(cfg)?;
    let results: Vec<SeedResult> = cfg
        .seeds
        .par_iter()
        .map(|&s| one_seed(cfg, &model, s))
        .collect::<Result<_, Failure>>()?;

    let mut out = Staging::new(&cfg.output_dir)?;
    let runs: Vec<&SeedRun> = results.iter().map(|r| &r.run).collect();
    out.write_json(
        "dods.json",
        &json!({"schema": "qfames-dods/1", "norm_scale": model.norm_scale(), "runs": runs}),
    )?;
    let rows: Vec<Vec<String>> = results.iter().flat_map(|r| r.landscape.iter().cloned()).collect();
    out.write(
        "landscape.csv",
        &csv_text(&["seed", "theta", "theta_physical", "frobenius_norm"], &rows)?,
    )?;
    let mut rows: Vec<Vec<String>> = results.iter().flat_map(|r| r.singular.iter().cloned()).collect();
    let width = results.iter().map(|r| r.lowest.len()).min().unwrap_or(0);
    for i in 0..width {
        let mean = results.iter().map(|r| r.lowest[i]).sum::<f64>() / results.len() as f64;
        rows.push(vec![
            "mean".into(),
            "0".into(),
            String::new(),
            String::new(),
            i.to_string(),
            num(mean),
            (mean > cfg.qfames.tau).to_string(),
        ]);
    }
    out.write(
        "singular_values.csv",
        &csv_text(
            &["seed", "candidate", "theta_star", "theta_star_physical", "index", "singular_value", "above_tau"],
            &rows,
        )?,
    )?;
    if cfg.observable.is_some() {
        let obs: Vec<&SeedObservable> = results.iter().filter_map(|r| r.observable.as_ref()).collect();
        out.write_json("observable.json", &json!({"schema": "qfames-observable/1", "runs": obs}))?;
    }
    let truths: Vec<_> = results
        .iter()
        .filter_map(|r| r.truth.as_ref().map(|t| json!({"seed": r.run.seed, "truth": t})))
        .collect();
    let mut m = manifest(cfg, "run", &model, 0.0, out.files());
    m["default_params"] = parameter_report(cfg, &results[0]);
    if !truths.is_empty() {
        m["oracle"] = json!(truths);
    }
    m["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    out.write_json("manifest.json", &m)?;
    out.commit()
}

pub fn sweep(cfg: &ExperimentConfig, ts: &[f64]) -> Result<PathBuf, Failure> {
    if ts.is_empty() {
        return Err(Failure::validation("--T: at least one value is required"));
    }
    if let Some(bad) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Failure::validation(format!("--T: values must be positive, got {bad}")));
    }
    for &t in ts {
        QfamesConfig { t, ..cfg.qfames }
            .validate()
            .map_err(|e| Failure::validation(format!("--T {t}: {e}")))?;
    }
    let start = Instant::now();
    let model = build_model(cfg)?;
    let [el, er] = cfg.qmegs_entry;
    let mode = match cfg.data {
        DataSpec::Exact => DataMode::Exact,
        DataSpec::Shots { shots_per_entry } => DataMode::Shots(shots_per_entry),
        DataSpec::Reconstructed { .. } => {
            return Err(Failure::validation("data: sweeps support exact and shot data only"));
        }
    };
    let records: Vec<Vec<SweepRecord>> = cfg
        .seeds
        .iter()
        .map(|&seed| {
            let (left, right) = build_states(cfg, &model, seed)?;
            if el >= left.len() || er >= right.len() {
                return Err(Failure::validation(format!("qmegs_entry ({el}, {er}) outside the families")));
            }
            let t = truth(cfg, &model, &left, &right)?;
            let source = exact_model(cfg, &model, &left, &right)?;
            Ok(sweep_t(&source, &t, &cfg.qfames, ts, &[seed], mode, (el, er))?)
        })
        .collect::<Result<_, Failure>>()?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .flatten()
        .map(|r| {
            vec![
                r.seed.to_string(),
                r.method.to_string(),
                num(r.t),
                num(r.t_max),
                num(r.t_total),
                r.n.to_string(),
                num(r.error),
                r.multiplicities.clone(),
            ]
        })
        .collect();
    let mut out = Staging::new(&cfg.output_dir)?;
    out.write(
        "sweep.csv",
        &csv_text(&["seed", "method", "T", "T_max", "T_total", "N", "error", "multiplicities"], &rows)?,
    )?;
    let mut m = manifest(cfg, "sweep-T", &model, 0.0, out.files());
    m["T"] = json!(ts);
    m["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    out.write_json("manifest.json", &m)?;
    out.commit()
}

#[derive(Serialize)]
struct PairReport {
    l: usize,
    r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error_halved: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn ancilla_check(cfg: &ExperimentConfig, h: f64, dt: f64) -> Result<PathBuf, Failure> {
    if !(h > 0.0 && dt > 0.0 && h.is_finite() && dt.is_finite()) {
        return Err(Failure::validation(format!("--h and --dt must be positive, got {h}, {dt}")));
    }
    let start = Instant::now();
    let model = build_model(cfg)?;
    let seed = cfg.seeds[0];
    let (left, right) = build_states(cfg, &model, seed)?;
    let reference = exact_model(cfg, &model, &left, &right)?;
    let prop = Propagator::auto(&model.hamiltonian)?;
    let t_max = cfg.qfames.max_time();
    let errors = |l: usize, r: usize, h: f64, dt: f64| -> Result<(f64, f64), QfamesError> {
        let probe = ancilla_free_reconstruct(&prop, &left.states()[l], &right.states()[r], t_max, dt, h)?;
        let errs: Vec<f64> = probe
            .times
            .iter()
            .zip(probe.reconstructed())
            .map(|(t, z)| (z - reference.eval(l, r, *t)).norm())
            .collect();
        let max = errs.iter().cloned().fold(0.0, f64::max);
        Ok((max, errs.iter().sum::<f64>() / errs.len() as f64))
    };
    let pairs: Vec<(usize, usize)> = (0..left.len()).flat_map(|l| (0..right.len()).map(move |r| (l, r))).collect();
    let reports: Vec<PairReport> = pairs
        .par_iter()
        .map(|&(l, r)| {
            let blank = PairReport {
                l,
                r,
                max_error: None,
                mean_error: None,
                max_error_halved: None,
                ratio: None,
                error: None,
            };
            let full = match errors(l, r, h, dt) {
                Ok(v) => v,
                Err(e @ QfamesError::ZeroCrossing { .. }) => {
                    return Ok(PairReport {
                        error: Some(e.to_string()),
                        ..blank
                    })
                }
                Err(e) => return Err(Failure::from(e)),
            };
            let half = errors(l, r, h / 2.0, dt / 2.0).map_err(Failure::from)?;
            Ok(PairReport {
                max_error: Some(full.0),
                mean_error: Some(full.1),
                max_error_halved: Some(half.0),
                ratio: Some(full.0 / half.0),
                ..blank
            })
        })
        .collect::<Result<_, Failure>>()?;
    let ok: Vec<&PairReport> = reports.iter().filter(|p| p.error.is_none()).collect();
    let max = ok.iter().filter_map(|p| p.max_error).fold(0.0, f64::max);
    let max_half = ok.iter().filter_map(|p| p.max_error_halved).fold(0.0, f64::max);
    let mut out = Staging::new(&cfg.output_dir)?;
    out.write_json(
        "reconstruction_report.json",
        &json!({
            "schema": "qfames-reconstruction/1",
            "seed": seed,
            "h": h,
            "dt": dt,
            "t_max": t_max,
            "max_error": max,
            "max_error_halved": max_half,
            "ratio": if max_half > 0.0 { json!(max / max_half) } else { json!(null) },
            "failed_pairs": reports.len() - ok.len(),
            "pairs": reports,
        }),
    )?;
    let mut m = manifest(cfg, "ancilla-check", &model, 0.0, out.files());
    m["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    out.write_json("manifest.json", &m)?;
    out.commit()
}

pub const PRESETS: [&str; 4] = ["illustrative", "tfim", "toric-torus-2x4", "toric-cyl-2x4"];

pub fn preset(name: &str, output_dir: Option<PathBuf>) -> Result<ExperimentConfig, Failure> {
    let dir = output_dir.unwrap_or_else(|| PathBuf::from(format!("qfames-{name}")));
    let base = |model, states, qfames, seeds: Vec<u64>| ExperimentConfig {
        schema: SCHEMA.into(),
        model,
        states,
        qfames,
        data: DataSpec::Shots { shots_per_entry: 1 },
        observable: None,
        oracle: None,
        assumptions: None,
        qmegs_entry: [0, 0],
        seeds,
        output_dir: dir.clone(),
    };
    let toric = |boundary: Boundary, gap: f64, k: usize| {
        let mut c = base(
            ModelSpec::Toric { rows: 2, cols: 4, boundary },
            StateSpec::HaarBoost { beta: 10.0, count: 15 },
            QfamesConfig {
                n: 300,
                t: 10.0,
                sigma: 1.0,
                i_tilde: 1,
                tau: 1.0,
                q: 0.005,
                alpha: 5.0,
            },
            (0..10).collect(),
        );
        c.assumptions = Some(Assumptions { gap, p_tail: 1e-3, k });
        c
    };
    let cfg = match name {
        "illustrative" => {
            let mut c = base(
                ModelSpec::Illustrative,
                StateSpec::OverlapMatrix {
                    phi: illustrative_phi(),
                    psi: None,
                },
                QfamesConfig {
                    n: 2000,
                    t: 60.0,
                    sigma: 4.0,
                    i_tilde: 2,
                    tau: 0.3,
                    q: 0.005,
                    alpha: 5.0,
                },
                (0..5).collect(),
            );
            c.oracle = Some(OracleSpec {
                levels: None,
                c_p: 10.0,
                gap: 0.05,
                width: 1e-9,
            });
            c
        }
        "tfim" => {
            let mut c = base(
                ModelSpec::Tfim { l: 10, g: 0.5 },
                StateSpec::LowestK { k: 5, count: 5 },
                QfamesConfig {
                    n: 10_000,
                    t: 40.0,
                    sigma: 3.0,
                    i_tilde: 5,
                    tau: 0.2,
                    q: 0.005,
                    alpha: 3.0,
                },
                (0..3).collect(),
            );
            c.observable = Some(ObservableSpec {
                operator: OperatorSpec::Magnetization,
                pairing: qfames::acquisition::observable::Pairing::ProductGrid,
                shots: false,
            });
            c.oracle = Some(OracleSpec {
                levels: None,
                c_p: 10.0,
                gap: 0.01,
                width: 1e-3,
            });
            c
        }
        // Gaps in normalized units: 0.707 on the torus and 0.314 on the cylinder.
        "toric-torus-2x4" => toric(Boundary::Torus, 0.7, 4),
        "toric-cyl-2x4" => toric(Boundary::Cylinder, 0.3, 2),
        other => {
            return Err(Failure::validation(format!(
                "unknown preset {other}; choose one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
