use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::checkpoint::load_field;
use super::config::{Experiment, InitialCondition, RunConfig};
use super::output::{fmt_f64, fmt_opt, OutputDir};
use crate::averaging::{
    n_search, sa_operator_norm, verify_cone_inequality, CertificateOptions, DifferenceInput,
    NSearchOptions,
};
use crate::dynamics::{absorbing_samples, integrate};
use crate::error::{Error, Result};
use crate::manifold::{
    invariance_check, manifold_value, smoothness_probe, tracking_experiment, ManifoldGraph,
};
use crate::parallel::{map_range, Execution};
use crate::sampling::smooth_field;
use crate::spectral::{project, Lattice, Projector, SpectralField};
use crate::truncation::Model;

/// Package version stamped into every output directory.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a finished run wrote.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub code_version: &'static str,
    pub seed: u64,
    pub files: Vec<String>,
    pub metrics: serde_json::Value,
}

/// Independent generator for work item `stream` of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn build_model(cfg: &RunConfig) -> Result<(Arc<Lattice>, Model)> {
    let lat = Lattice::new(cfg.grid_radius);
    let model = Model::new(cfg.model, &lat, cfg.forcing)?.with_dealias(cfg.integrator.dealias);
    Ok((lat, model))
}

fn low_point(model: &Model, seed: u64, stream: u64, h_norm: f64) -> Result<SpectralField> {
    let u = smooth_field(model.lattice(), &mut stream_rng(seed, stream), 1.0, h_norm);
    let p = project(&u, Projector::Lower(model.n()))?;
    let n = p.norm();
    Ok(if n > 0.0 { p.scale_re(h_norm / n) } else { p })
}

/// Runs the selected experiment, writing its tables, the resolved config and
/// a manifest into `out`.
pub fn run_experiment(cfg: &RunConfig, out: impl AsRef<Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let experiment = cfg
        .experiment
        .ok_or_else(|| Error::invalid("experiment", "no experiment selected"))?;
    let mut dir = OutputDir::create(out)?;
    dir.text("config.toml", &cfg.to_toml()?)?;
    let metrics = match experiment {
        Experiment::Simulate => simulate(cfg, &mut dir)?,
        Experiment::ConeCheck => cone_check(cfg, &mut dir)?,
        Experiment::NSearch => search(cfg, &mut dir)?,
        Experiment::BuildManifold => build_manifold(cfg, &mut dir)?,
        Experiment::Track => track(cfg, &mut dir)?,
        Experiment::ProbeSmoothness => probe_smoothness(cfg, &mut dir)?,
        Experiment::CalibrateRadii => calibrate_radii(cfg, &mut dir)?,
    };
    dir.json("summary.json", &metrics)?;
    let mut files = dir.files().to_vec();
    files.push("manifest.json".into());
    let summary = RunSummary {
        experiment,
        code_version: CODE_VERSION,
        seed: cfg.seed,
        files,
        metrics,
    };
    dir.json("manifest.json", &summary)?;
    Ok(summary)
}

fn initial_field(cfg: &RunConfig, lat: &Arc<Lattice>) -> Result<SpectralField> {
    match &cfg.simulate.initial {
        InitialCondition::Smooth { decay, h_norm } => Ok(smooth_field(
            lat,
            &mut stream_rng(cfg.seed, 0),
            *decay,
            *h_norm,
        )),
        InitialCondition::Mode { k, l, m, amplitude } => {
            Ok(SpectralField::basis(lat, *k, *l, *m)?.scale_re(*amplitude))
        }
        InitialCondition::Checkpoint { path } => {
            let (_, u) = load_field(path)?;
            if u.radius() != lat.radius() {
                return Err(Error::LatticeMismatch {
                    left: u.radius(),
                    right: lat.radius(),
                });
            }
            Ok(SpectralField::from_coeffs(lat, u.coeffs().to_vec())?)
        }
    }
}

fn simulate(cfg: &RunConfig, dir: &mut OutputDir) -> Result<serde_json::Value> {
    let (lat, model) = build_model(cfg)?;
    let u0 = initial_field(cfg, &lat)?;
    let traj = integrate(&model, &u0, &cfg.integrator)?;
    let n = model.n();
    let last = traj.len() - 1;
    let picks: Vec<usize> = (0..=last)
        .step_by(cfg.simulate.stride)
        .chain((last % cfg.simulate.stride != 0).then_some(last))
        .collect();
    let rows = picks.iter().map(|&j| {
        let u = &traj.states[j];
        let low = project(u, Projector::Lower(n)).expect("model lattice holds P_N");
        let high = u.sub(&low);
        vec![
            fmt_f64(traj.time(j)),
            fmt_f64(u.norm_sqr()),
            fmt_f64(low.norm_sqr()),
            fmt_f64(high.norm_sqr()),
            fmt_f64(u.sobolev_norm(1.0)),
        ]
    });
    dir.csv(
        "energy.csv",
        &["t", "energy", "low_energy", "high_energy", "h1_norm"],
        rows,
    )?;
    dir.field("initial.imcg", &u0, &cfg.model)?;
    dir.field("final.imcg", traj.last(), &cfg.model)?;
    let energies: Vec<f64> = traj.states.iter().map(|u| u.norm_sqr()).collect();
    Ok(json!({
        "steps": last,
        "initial_energy": energies[0],
        "final_energy": energies[last],
        "max_energy": energies.iter().copied().fold(0.0, f64::max),
    }))
}

fn cone_check(cfg: &RunConfig, dir: &mut OutputDir) -> Result<serde_json::Value> {
    let c = &cfg.cone_check;
    let (lat, model) = build_model(cfg)?;
    let samples = absorbing_samples(
        &model,
        &mut stream_rng(cfg.seed, 0),
        c.samples.count,
        c.samples.h_norm,
        c.samples.relax,
        &cfg.integrator,
    )?;
    let report = sa_operator_norm(&model, &samples, model.n(), model.k(), c.epsilon)?;
    let record = report.admissibility();
    dir.json("admissibility.json", &report)?;
    let opts = CertificateOptions {
        kappa: c.kappa,
        qims_bound: c.qims_bound,
        tol_scale: c.tol_scale,
        band: c.band,
        exec: Execution::Sequential,
    };
    let results = map_range(c.pairs, Execution::Parallel, |i| {
        let mut rng = stream_rng(cfg.seed, i as u64 + 1);
        let u1 = smooth_field(&lat, &mut rng, 1.0, c.h_norm);
        let u2 = u1.add(&smooth_field(&lat, &mut rng, 1.0, c.perturbation));
        let t1 = integrate(&model, &u1, &cfg.integrator)?;
        let t2 = integrate(&model, &u2, &cfg.integrator)?;
        match verify_cone_inequality(&model, &record, DifferenceInput::Pair(&t1, &t2), &opts) {
            Ok(cert) => Ok(Some(cert)),
            Err(Error::MonitorViolated(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows = results.iter().enumerate().map(|(i, r)| match r {
        Some(c) => vec![
            i.to_string(),
            "certified".into(),
            c.verdict.to_string(),
            fmt_f64(c.max_excess),
            c.exit_events.to_string(),
            fmt_f64(c.alpha_min),
            fmt_f64(c.alpha_max),
            fmt_f64(c.max_transform_factor),
        ],
        None => vec![
            i.to_string(),
            "monitor_violated".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ],
    });
    dir.csv(
        "cone.csv",
        &[
            "pair",
            "status",
            "verdict",
            "max_excess",
            "exit_events",
            "alpha_min",
            "alpha_max",
            "max_transform_factor",
        ],
        rows,
    )?;
    let certs: Vec<_> = results.iter().flatten().collect();
    dir.ndjson("certificates.ndjson", &certs)?;
    Ok(json!({
        "n": model.n(),
        "k": model.k(),
        "admissibility_norm": record.norm,
        "pairs": c.pairs,
        "certified": certs.len(),
        "passed": certs.iter().filter(|c| c.verdict).count(),
        "exit_events": certs.iter().map(|c| c.exit_events).sum::<usize>(),
    }))
}

fn search(cfg: &RunConfig, dir: &mut OutputDir) -> Result<serde_json::Value> {
    let s = &cfg.n_search;
    let (_, model) = build_model(cfg)?;
    let k = s.k.unwrap_or(model.k());
    let samples = absorbing_samples(
        &model,
        &mut stream_rng(cfg.seed, 0),
        s.samples.count,
        s.samples.h_norm,
        s.samples.relax,
        &cfg.integrator,
    )?;
    let opts = NSearchOptions {
        method: s.method,
        stop_at_first: s.stop_at_first,
        seed: cfg.seed,
        ..NSearchOptions::default()
    };
    let res = n_search(&model, &samples, k, s.epsilon, s.n_min..=s.n_max, &opts)?;
    let rows = res.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            r.k.to_string(),
            fmt_f64(r.norm),
            r.annulus_dim.to_string(),
            r.samples.to_string(),
            fmt_f64(r.epsilon),
            r.method.to_string(),
            r.admissible.to_string(),
        ]
    });
    dir.csv(
        "n_search.csv",
        &[
            "n",
            "k",
            "norm",
            "annulus_dim",
            "samples",
            "epsilon",
            "method",
            "admissible",
        ],
        rows,
    )?;
    if let Some(&first) = res.admissible.first() {
        dir.json("admissibility.json", &res.record(first))?;
    }
    Ok(json!({
        "k": k,
        "epsilon": s.epsilon,
        "rows": res.rows.len(),
        "admissible": res.admissible,
    }))
}

fn coefficient_rows(
    point: usize,
    u: &SpectralField,
    side: &str,
    keep: impl Fn(u32) -> bool,
) -> Vec<Vec<String>> {
    let lat = u.lattice();
    (0..lat.len())
        .filter(|&i| keep(lat.a_eig(i)))
        .map(|i| {
            let m = lat.mode(i);
            let c = u.coeffs()[i];
            vec![
                point.to_string(),
                side.to_string(),
                m.k.to_string(),
                m.l.to_string(),
                m.m.to_string(),
                fmt_f64(c.re),
                fmt_f64(c.im),
            ]
        })
        .collect()
}

fn build_manifold(cfg: &RunConfig, dir: &mut OutputDir) -> Result<serde_json::Value> {
    let b = &cfg.build_manifold;
    let (_, model) = build_model(cfg)?;
    let n = model.n();
    let evals = map_range(b.points, Execution::Parallel, |i| {
        let u = low_point(&model, cfg.seed, i as u64 + 1, b.h_norm)?;
        let p = manifold_value(&model, &u, &b.graph)?;
        let inv = if b.invariance_horizon > 0.0 {
            Some(invariance_check(
                &model,
                &p,
                b.invariance_horizon,
                b.invariance_every,
                &b.graph,
            )?)
        } else {
            None
        };
        Ok((p, inv))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let points = evals.iter().enumerate().map(|(i, (p, inv))| {
        vec![
            i.to_string(),
            fmt_f64(p.u_plus.norm()),
            fmt_f64(p.m_value.norm()),
            fmt_f64(p.t_used),
            fmt_f64(p.shooting_residual),
            fmt_f64(p.cauchy_gap),
            fmt_opt(p.gap_rate),
            fmt_opt(inv.as_ref().map(|r| r.max_distance)),
        ]
    });
    dir.csv(
        "points.csv",
        &[
            "point",
            "u_plus_norm",
            "m_norm",
            "t_used",
            "shooting_residual",
            "cauchy_gap",
            "gap_rate",
            "invariance_max",
        ],
        points,
    )?;
    let ladder = evals.iter().enumerate().flat_map(|(i, (p, _))| {
        p.ladder.iter().map(move |s| {
            vec![
                i.to_string(),
                fmt_f64(s.t),
                fmt_f64(s.shooting_residual),
                s.iterations.to_string(),
                fmt_opt(s.gap),
            ]
        })
    });
    dir.csv(
        "ladder.csv",
        &["point", "t", "shooting_residual", "iterations", "gap"],
        ladder,
    )?;
    let graph = evals.iter().enumerate().flat_map(|(i, (p, _))| {
        let mut rows = coefficient_rows(i, &p.u_plus, "u_plus", |a| a <= n);
        rows.extend(coefficient_rows(i, &p.m_value, "m", |a| a > n));
        rows
    });
    dir.csv(
        "graph.csv",
        &["point", "side", "k", "l", "m", "re", "im"],
        graph,
    )?;
    Ok(json!({
        "points": b.points,
        "max_cauchy_gap": evals.iter().map(|e| e.0.cauchy_gap).fold(0.0, f64::max),
        "max_t_used": evals.iter().map(|e| e.0.t_used).fold(0.0, f64::max),
        "max_invariance_distance": evals
            .iter()
            .filter_map(|e| e.1.as_ref().map(|r| r.max_distance))
            .reduce(f64::max),
    }))
}

fn track(cfg: &RunConfig, dir: &mut OutputDir) -> Result<serde_json::Value> {
    let t = &cfg.track;
    let (lat, model) = build_model(cfg)?;
    let reports = map_range(t.starts, Execution::Parallel, |i| {
        let u0 = smooth_field(&lat, &mut stream_rng(cfg.seed, i as u64 + 1), 1.0, t.h_norm);
        tracking_experiment(&model, &u0, t.horizon, &t.graph)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let series = reports.iter().enumerate().flat_map(|(i, r)| {
        r.times
            .iter()
            .zip(&r.distances)
            .map(move |(t, d)| vec![i.to_string(), fmt_f64(*t), fmt_f64(*d)])
    });
    dir.csv("tracking.csv", &["start", "t", "distance"], series)?;
    let rows = reports.iter().enumerate().map(|(i, r)| {
        vec![
            i.to_string(),
            fmt_f64(r.rate),
            fmt_f64(r.intercept),
            fmt_f64(r.fit_residual),
            fmt_f64(r.t_used),
            fmt_f64(r.sensitivity),
            r.accepted.to_string(),
        ]
    });
    dir.csv(
        "tracking_summary.csv",
        &[
            "start",
            "rate",
            "intercept",
            "fit_residual",
            "t_used",
            "sensitivity",
            "accepted",
        ],
        rows,
    )?;
    Ok(json!({
        "starts": t.starts,
        "accepted": reports.iter().filter(|r| r.accepted).count(),
        "min_rate": reports.iter().map(|r| r.rate).reduce(f64::min),
        "max_fit_residual": reports.iter().map(|r| r.fit_residual).reduce(f64::max),
    }))
}

fn probe_smoothness(cfg: &RunConfig, dir: &mut OutputDir) -> Result<serde_json::Value> {
    let p = &cfg.probe_smoothness;
    let (_, model) = build_model(cfg)?;
    let center = low_point(&model, cfg.seed, 0, p.h_norm)?;
    let directions = (0..p.directions)
        .map(|i| low_point(&model, cfg.seed, i as u64 + 1, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let graph = ManifoldGraph {
        model: &model,
        cfg: p.graph,
    };
    let rep = smoothness_probe(&graph, &center, &directions, &p.hs, Execution::Parallel)?;
    let rows = rep.directions.iter().enumerate().flat_map(|(i, d)| {
        d.hs.iter()
            .zip(&d.defects)
            .map(move |(h, e)| vec![i.to_string(), fmt_f64(*h), fmt_f64(*e)])
    });
    dir.csv("smoothness.csv", &["direction", "h", "defect"], rows)?;
    Ok(json!({
        "exponent": rep.exponent,
        "direction_exponents": rep.directions.iter().map(|d| d.exponent).collect::<Vec<_>>(),
    }))
}

#[derive(Serialize)]
struct SuggestedRadii {
    r0: f64,
    r1: f64,
    rtilde: f64,
}

#[derive(Serialize)]
struct SuggestedModel {
    model: SuggestedRadii,
}

fn calibrate_radii(cfg: &RunConfig, dir: &mut OutputDir) -> Result<serde_json::Value> {
    let c = &cfg.calibrate_radii;
    let (lat, model) = build_model(cfg)?;
    let n = model.n();
    let s = model.params().s;
    let sups = map_range(c.starts, Execution::Parallel, |i| {
        let u0 = smooth_field(&lat, &mut stream_rng(cfg.seed, i as u64 + 1), 1.0, c.h_norm);
        let traj = integrate(&model, &u0, &cfg.integrator)?;
        let from = ((traj.len() - 1) as f64 * c.transient).floor() as usize;
        let mut sup = [0.0f64; 4];
        for u in &traj.states[from..] {
            let low = project(u, Projector::Lower(n))?;
            let vals = [
                u.norm(),
                u.sobolev_norm(1.0),
                low.sobolev_norm(1.0),
                u.sobolev_norm(s),
            ];
            for (m, v) in sup.iter_mut().zip(vals) {
                *m = m.max(v);
            }
        }
        Ok(sup)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows = sups.iter().enumerate().map(|(i, v)| {
        let mut row = vec![i.to_string()];
        row.extend(v.iter().map(|x| fmt_f64(*x)));
        row
    });
    dir.csv(
        "radii.csv",
        &["start", "sup_h", "sup_h1", "sup_low_h1", "sup_hs"],
        rows,
    )?;
    let max = |j: usize| sups.iter().map(|v| v[j]).fold(0.0, f64::max);
    let r1 = c.margin * max(2);
    let suggested = SuggestedRadii {
        r0: c.margin * max(0),
        r1,
        rtilde: 4.0 * r1,
    };
    let text = toml::to_string(&SuggestedModel { model: suggested })
        .map_err(|e| Error::ConfigParse(e.to_string()))?;
    dir.text("suggested_radii.toml", &text)?;
    Ok(json!({
        "sup_h": max(0),
        "sup_h1": max(1),
        "sup_low_h1": max(2),
        "sup_hs": max(3),
        "r0": c.margin * max(0),
        "r1": r1,
        "rtilde": 4.0 * r1,
    }))
}
