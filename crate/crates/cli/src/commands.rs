use std::path::Path;

use anyhow::{anyhow, bail, ensure, Result};
use rand::Rng;
use rayon::prelude::*;
use resistor_sep::exclusion::{simulate, Configuration, ExclusionSystem, SimOptions, Snapshots};
use resistor_sep::graph::{
    generate, path_exhaustion, sg_exhaustion, BoundaryEntry, Family, GraphDocument, GraphExhaustion, Vertex,
    WeightedGraph, DEFAULT_VERTEX_BUDGET,
};
use resistor_sep::harness::suites::{run_suite, Suite, SuiteOptions, IDENTITY_TOLERANCE, PSD_TOLERANCE};
use resistor_sep::harness::{boundary_experiment, ergodicity_experiment, Bundle};
use resistor_sep::potential::{
    effective_resistance_pair, exit_times, hitting_times, scaling_report, stationary_marginal, trace_network, ExitMode,
    ScalingOptions, VolumeMode, DUALITY_TOL,
};
use resistor_sep::rng::{stream_rng, RNG_ALGORITHM};
use serde_json::{json, Value};

use crate::config::{load_config, LoadedConfig};
use crate::output::{fmt_f64, graph_hash, load_graph, Csv, LoadedGraph, RunManifest, Sink};
use crate::{
    Command, ExitArg, ExitTimeArgs, ExperimentArgs, FamilyName, GenerateArgs, MarginalArgs, ObserveArg,
    ResistanceArgs, ScalingArgs, SimulateArgs, TraceArgs, VerifyArgs, VolumeArg,
};

pub enum Outcome {
    Passed,
    Failed,
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Generate(a) => generate_cmd(a),
        Command::Resistance(a) => resistance_cmd(a),
        Command::ExitTime(a) => exit_time_cmd(a),
        Command::Trace(a) => trace_cmd(a),
        Command::Marginal(a) => marginal_cmd(a),
        Command::Scaling(a) => scaling_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
    }
}

fn vertex(g: &WeightedGraph, id: u64) -> Result<Vertex> {
    Ok(g.index_of(id)?)
}

/// Writes the JSON body to `out` (or prints it) and any CSV, then the manifest.
fn emit(mut sink: Sink, out: Option<&Path>, body: Value, csv: Option<(&Path, String)>) -> Result<()> {
    match out {
        Some(path) => sink.write_json(path, body)?,
        None => println!("{}", serde_json::to_string_pretty(&body)?),
    }
    if let Some((path, text)) = csv {
        sink.write(path, &text)?;
    }
    sink.finish()
}

fn graph_sink(lg: &LoadedGraph, seed: Option<u64>, tolerances: Value) -> Sink {
    Sink::new(RunManifest::new(seed, Some(lg.hash.clone()), tolerances))
}

fn generate_cmd(a: GenerateArgs) -> Result<Outcome> {
    let family = match a.family {
        FamilyName::Path => Family::Path(a.n),
        FamilyName::Sg => Family::Sg(a.n),
        FamilyName::Box => Family::LatticeBox { dim: a.dim, side: a.n },
        FamilyName::Vicsek => Family::Vicsek(a.n),
        FamilyName::Carpet => Family::Carpet(a.n),
    };
    let fam = generate(family, DEFAULT_VERTEX_BUDGET)?;
    let boundary = match a.corner_reservoirs {
        None => None,
        Some((plus, minus)) => {
            ensure!(!fam.corners.is_empty(), "this family has no corners");
            Some(fam.corners.iter().map(|&c| BoundaryEntry { lambda_minus: minus, lambda_plus: plus, v: fam.graph.id(c) }).collect())
        }
    };
    let doc = GraphDocument::from_graph(&fam.graph, boundary);
    let text = doc.to_json() + "\n";
    match &a.out {
        Some(path) => {
            let mut sink = Sink::new(RunManifest::new(None, Some(graph_hash(&doc)), json!({})));
            sink.write(path, &text)?;
            sink.finish()?;
            println!("{} vertices, {} edges -> {}", fam.graph.vertex_count(), fam.graph.edge_count(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(Outcome::Passed)
}

fn resistance_cmd(a: ResistanceArgs) -> Result<Outcome> {
    let lg = load_graph(&a.graph)?;
    let g = &lg.graph;
    let x = match a.x {
        Some(id) => vertex(g, id)?,
        None => 0,
    };
    let targets: Vec<Vertex> = match a.y {
        Some(id) => vec![vertex(g, id)?],
        None => (0..g.vertex_count()).filter(|&y| y != x).collect(),
    };
    let values = targets
        .par_iter()
        .map(|&y| effective_resistance_pair(g, x, y).map(|r| (y, r)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(&["x", "y", "r_eff"]);
    for &(y, r) in &values {
        csv.row(&[g.id(x).to_string(), g.id(y).to_string(), fmt_f64(r)]);
    }
    let pairs: Vec<Value> = values.iter().map(|&(y, r)| json!({"x": g.id(x), "y": g.id(y), "r_eff": r})).collect();
    if let [(y, r)] = values[..] {
        println!("R_eff({}, {}) = {}", g.id(x), g.id(y), r);
    } else {
        println!("{} resistances from vertex {}", values.len(), g.id(x));
    }
    let sink = graph_sink(&lg, None, json!({}));
    emit(sink, a.out.as_deref(), json!({ "pairs": pairs }), a.csv.as_deref().map(|p| (p, csv.into_string())))?;
    Ok(Outcome::Passed)
}

fn exit_time_cmd(a: ExitTimeArgs) -> Result<Outcome> {
    let lg = load_graph(&a.graph)?;
    let g = &lg.graph;
    let set = a.set.iter().map(|&id| vertex(g, id)).collect::<Result<Vec<_>>>()?;
    let t = exit_times(g, &set)?;
    let mut csv = Csv::new(&["vertex", "exit_time"]);
    for (v, &tv) in t.iter().enumerate() {
        csv.row(&[g.id(v).to_string(), fmt_f64(tv)]);
    }
    let max = t.iter().copied().fold(0.0, f64::max);
    println!("max exit time {max}");
    let body = json!({
        "set": a.set,
        "max": max,
        "exit_times": (0..g.vertex_count()).map(|v| json!({"vertex": g.id(v), "time": t[v]})).collect::<Vec<_>>(),
    });
    emit(graph_sink(&lg, None, json!({})), a.out.as_deref(), body, a.csv.as_deref().map(|p| (p, csv.into_string())))?;
    Ok(Outcome::Passed)
}

fn trace_cmd(a: TraceArgs) -> Result<Outcome> {
    let lg = load_graph(&a.graph)?;
    let g = &lg.graph;
    let boundary: Vec<Vertex> = if a.boundary.is_empty() {
        lg.boundary.as_ref().ok_or_else(|| anyhow!("no --boundary given and the graph has no reservoirs"))?.vertices().to_vec()
    } else {
        a.boundary.iter().map(|&id| vertex(g, id)).collect::<Result<_>>()?
    };
    let tr = trace_network(g, &boundary)?;
    let rows = tr.row_sum_residual();
    let unity = tr.partition_of_unity_residual();
    let passed = rows <= a.tol && unity <= a.tol;
    let n = boundary.len();
    let c_hat: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| tr.c_hat[(i, j)]).collect()).collect();
    println!("trace on {n} vertices: row-sum residual {rows:e}, partition-of-unity residual {unity:e}");
    let body = json!({
        "boundary": boundary.iter().map(|&v| g.id(v)).collect::<Vec<_>>(),
        "c_hat": c_hat,
        "weights": tr.weights,
        "row_sum_residual": rows,
        "partition_of_unity_residual": unity,
        "passed": passed,
    });
    emit(graph_sink(&lg, None, json!({ "tol": a.tol })), a.out.as_deref(), body, None)?;
    Ok(if passed { Outcome::Passed } else { Outcome::Failed })
}

fn marginal_cmd(a: MarginalArgs) -> Result<Outcome> {
    let lg = load_graph(&a.graph)?;
    let g = &lg.graph;
    let spec = lg.boundary.as_ref().ok_or_else(|| anyhow!("the graph file has no boundary reservoirs"))?;
    let p = stationary_marginal(g, spec)?;
    let passed = p.agreement <= a.tol && p.bound_violation() == 0.0;
    let mut csv = Csv::new(&["vertex", "rho", "rho_dtn"]);
    for v in 0..g.vertex_count() {
        csv.row(&[g.id(v).to_string(), fmt_f64(p.rho[v]), fmt_f64(p.rho_dtn[v])]);
    }
    println!("agreement {:e}, Robin residual {:e}, energy {}", p.agreement, p.residual, p.energy);
    let body = json!({
        "rho": (0..g.vertex_count()).map(|v| json!({"vertex": g.id(v), "rho": p.rho[v], "rho_dtn": p.rho_dtn[v]})).collect::<Vec<_>>(),
        "agreement": p.agreement,
        "residual": p.residual,
        "flows": spec.vertices().iter().zip(&p.flows).map(|(&v, &i)| json!({"vertex": g.id(v), "flow": i})).collect::<Vec<_>>(),
        "energy": p.energy,
        "bounds": [p.bounds.0, p.bounds.1],
        "bound_violation": p.bound_violation(),
        "passed": passed,
    });
    let tolerances = json!({ "tol": a.tol, "default": DUALITY_TOL });
    emit(graph_sink(&lg, None, tolerances), a.out.as_deref(), body, a.csv.as_deref().map(|p| (p, csv.into_string())))?;
    Ok(if passed { Outcome::Passed } else { Outcome::Failed })
}

fn scaling_cmd(a: ScalingArgs) -> Result<Outcome> {
    let (ex, hash): (GraphExhaustion, Option<String>) = match &a.graph {
        Some(path) => {
            let lg = load_graph(path)?;
            let origin = vertex(&lg.graph, a.origin.ok_or_else(|| anyhow!("--graph needs --origin"))?)?;
            ensure!(!a.radii.is_empty(), "--graph needs --radii");
            (GraphExhaustion::new(&lg.graph, origin, &a.radii)?, Some(lg.hash))
        }
        None => match a.family.as_str() {
            "sg" => (sg_exhaustion(a.levels)?, None),
            "path" => (path_exhaustion(a.levels)?, None),
            other => bail!("unknown exhaustion family `{other}` (expected sg or path)"),
        },
    };
    let opts = ScalingOptions {
        volume_mode: match a.volume_mode {
            VolumeArg::Measure => VolumeMode::Measure,
            VolumeArg::Count => VolumeMode::Count,
        },
        exit_mode: match a.exit_mode {
            ExitArg::Max => ExitMode::Max,
            ExitArg::Origin => ExitMode::Origin,
        },
        eps: a.eps.clone(),
        seed: a.seed,
        ..ScalingOptions::default()
    };
    let report = scaling_report(&ex, &opts)?;
    let mut csv = Csv::new(&["level", "radius", "volume", "cardinality", "exit_time", "ratio", "einstein"]);
    for l in &report.levels {
        csv.row(&[
            l.level.to_string(),
            l.radius.to_string(),
            fmt_f64(l.volume),
            l.cardinality.to_string(),
            fmt_f64(l.exit_time),
            fmt_f64(l.ratio),
            fmt_f64(l.einstein),
        ]);
    }
    println!(
        "volume exponent {:.4}, time exponent {:.4}, T/V increasing: {}",
        report.alpha.slope,
        report.beta.slope,
        report.ratio_increasing()
    );
    let body = json!({ "report": report, "ratio_increasing": report.ratio_increasing() });
    let sink = Sink::new(RunManifest::new(Some(a.seed), hash, json!({})));
    emit(sink, a.out.as_deref(), body, a.csv.as_deref().map(|p| (p, csv.into_string())))?;
    Ok(Outcome::Passed)
}

fn simulate_cmd(a: SimulateArgs) -> Result<Outcome> {
    let lg = load_graph(&a.graph)?;
    let g = &lg.graph;
    let n = g.vertex_count();
    ensure!(a.alpha >= 0.0 && a.alpha <= 1.0, "alpha = {} is outside [0, 1]", a.alpha);
    ensure!(a.trajectories > 0, "need at least one trajectory");
    ensure!(a.snapshots >= 2, "need at least two snapshots");
    let time_scale = match a.time_scale.as_str() {
        "auto" => {
            let target: Vec<Vertex> = lg.boundary.as_ref().map_or_else(|| vec![0], |s| s.vertices().to_vec());
            let t = hitting_times(g, &target)?.into_iter().fold(0.0, f64::max);
            if t > 0.0 { t } else { 1.0 }
        }
        text => text.parse::<f64>().map_err(|_| anyhow!("--time-scale must be `auto` or a number, got `{text}`"))?,
    };
    let sys = ExclusionSystem::from_graph(g, lg.boundary.as_ref());
    let times: Vec<f64> = (0..a.snapshots).map(|i| a.horizon * i as f64 / (a.snapshots - 1) as f64).collect();
    let observables: Vec<(String, Vec<Vertex>)> = match a.observe {
        ObserveArg::Occupation => (0..n).map(|v| (g.id(v).to_string(), vec![v])).collect(),
        ObserveArg::BlockAverages => {
            let mut out = Vec::new();
            let mut r = 1;
            loop {
                let ball = g.ball(0, r)?;
                let full = ball.len() == n;
                out.push((format!("B{r}"), ball));
                if full {
                    break;
                }
                r *= 2;
            }
            out
        }
    };
    let opts = SimOptions { time_scale, horizon: a.horizon, record_events: false };
    let runs = (0..a.trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(a.seed, "simulate", i);
            let bits: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < a.alpha).collect();
            let eta0 = Configuration::from_bools(&bits);
            let mut snaps = Snapshots::new(times.clone());
            let tr = simulate(&sys, &eta0, opts, &mut snaps, &mut rng)?;
            Ok((snaps.states, tr))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["trajectory", "time", "observable", "value"]);
    for (i, (states, _)) in runs.iter().enumerate() {
        for (t, eta) in times.iter().zip(states) {
            for (name, set) in &observables {
                csv.row(&[i.to_string(), fmt_f64(*t), name.clone(), fmt_f64(eta.average(set))]);
            }
        }
    }
    let summary: Vec<Value> = runs
        .iter()
        .map(|(_, tr)| {
            json!({
                "events": tr.event_count,
                "initial_particles": tr.initial.particle_count(),
                "final_particles": tr.final_state.particle_count(),
                "absorbed": tr.absorbed,
            })
        })
        .collect();
    let mean_events = runs.iter().map(|r| r.1.event_count as f64).sum::<f64>() / runs.len() as f64;
    println!("{} trajectories, time scale {time_scale}, mean events {mean_events}", a.trajectories);
    let body = json!({
        "alpha": a.alpha,
        "time_scale": time_scale,
        "horizon": a.horizon,
        "trajectories": a.trajectories,
        "rng": RNG_ALGORITHM,
        "snapshot_times": times,
        "observables": observables.iter().map(|(name, set)| json!({"id": name, "vertices": set.iter().map(|&v| g.id(v)).collect::<Vec<_>>()})).collect::<Vec<_>>(),
        "runs": summary,
    });
    emit(graph_sink(&lg, Some(a.seed), json!({})), a.out.as_deref(), body, a.csv.as_deref().map(|p| (p, csv.into_string())))?;
    Ok(Outcome::Passed)
}

fn verify_cmd(a: VerifyArgs) -> Result<Outcome> {
    let suite = Suite::parse(&a.suite).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        anyhow!("unknown suite `{}` (expected one of {})", a.suite, names.join(", "))
    })?;
    let bundle = Bundle::parse(&a.bundle).ok_or_else(|| anyhow!("unknown bundle `{}`", a.bundle))?;
    let lg = load_graph(&a.graph)?;
    let center = match a.center {
        Some(id) => vertex(&lg.graph, id)?,
        None => 0,
    };
    let opts = SuiteOptions { alphas: a.alpha.clone(), seed: a.seed, samples: a.samples, bundle, center, ..SuiteOptions::default() };
    let report = run_suite(suite, &lg.graph, lg.boundary.as_ref(), &opts)?;
    for c in &report.checks {
        println!("{} {} (value {:e}, {} evaluations)", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.evaluations);
    }
    let tolerances = json!({ "psd": PSD_TOLERANCE, "identity": IDENTITY_TOLERANCE });
    let body = json!({ "options": opts, "report": report, "passed": report.passed });
    emit(graph_sink(&lg, Some(a.seed), tolerances), a.out.as_deref(), body, None)?;
    Ok(if report.passed { Outcome::Passed } else { Outcome::Failed })
}

fn experiment_cmd(a: ExperimentArgs) -> Result<Outcome> {
    let config = load_config(&a.config)?;
    let mut sink = Sink::new(RunManifest::new(Some(config.seed()), None, json!({})));
    let (csv, report) = match &config {
        LoadedConfig::Ergodicity(cfg) => {
            let rep = ergodicity_experiment(cfg)?;
            let mut csv = Csv::new(&[
                "level", "eps", "sites", "volume", "time_scale", "worst_probe", "exceedances", "trials", "estimate",
                "wilson_low", "wilson_high", "upper_bound", "value", "curve",
            ]);
            let opt = |x: Option<f64>| x.map_or_else(String::new, fmt_f64);
            for r in &rep.rows {
                let e = &r.estimate;
                csv.row(&[
                    r.level.to_string(),
                    fmt_f64(r.eps),
                    r.sites.to_string(),
                    fmt_f64(r.volume),
                    fmt_f64(r.time_scale),
                    r.worst_probe.to_string(),
                    e.exceedances.to_string(),
                    e.trials.to_string(),
                    opt(e.estimate),
                    fmt_f64(e.wilson.0),
                    fmt_f64(e.wilson.1),
                    opt(e.upper_bound),
                    fmt_f64(e.value()),
                    fmt_f64(r.curve),
                ]);
                println!("N = {} eps = {}: {} of {} exceed, value {}", r.level, r.eps, e.exceedances, e.trials, e.value());
            }
            let decreasing: Vec<Value> = cfg.eps.iter().map(|&e| json!({"eps": e, "decreasing": rep.decreasing_in_level(e)})).collect();
            (csv, json!({ "report": rep, "decreasing_in_level": decreasing }))
        }
        LoadedConfig::Boundary(cfg) => {
            let rep = boundary_experiment(cfg)?;
            let mut csv = Csv::new(&[
                "level", "vertex", "reservoir_density", "mean", "std_error", "z_score", "exceedances", "trials", "value",
            ]);
            for r in &rep.rows {
                csv.row(&[
                    r.level.to_string(),
                    r.vertex.to_string(),
                    fmt_f64(r.reservoir_density),
                    fmt_f64(r.mean),
                    fmt_f64(r.std_error),
                    fmt_f64(r.z_score),
                    r.estimate.exceedances.to_string(),
                    r.estimate.trials.to_string(),
                    fmt_f64(r.estimate.value()),
                ]);
                println!("N = {} vertex {}: mean {} (z = {:.3})", r.level, r.vertex, r.mean, r.z_score);
            }
            (csv, json!({ "report": rep }))
        }
    };
    sink.write(&a.out, &csv.into_string())?;
    if let Some(path) = &a.report {
        sink.write_json(path, json!({ "config": config, "result": report }))?;
    }
    sink.finish()?;
    Ok(Outcome::Passed)
}
