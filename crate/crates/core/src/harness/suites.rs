//! Named verification suites over a single graph, with uniform reports.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::ensembles::bfs_prefixes;
use super::forms::check_sites;
use super::{
    build_partition, mpl_psd_check, spectral_estimate, two_block_comparison,
    verify_boundary_lemmas, verify_equivalence_of_ensembles, verify_two_block_bound, Anchor, Bundle, HarnessError,
    Result, UContext, MAX_BALL, TWO_BLOCK_LIMIT,
};
use crate::exclusion::{generator_matrix, BoundarySpec, Configuration, ExclusionSystem, MeasureSpec};
use crate::graph::{Vertex, WeightedGraph};
use crate::rng::labelled_rng;

/// Tolerance for operator positivity checks.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Tolerance for exact identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Mpl,
    Ensembles,
    TwoBlock,
    Averaging,
    Boundary,
    Spectral,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Mpl, Suite::Ensembles, Suite::TwoBlock, Suite::Averaging, Suite::Boundary, Suite::Spectral];

    pub fn parse(text: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == text)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Mpl => "mpl",
            Suite::Ensembles => "ensembles",
            Suite::TwoBlock => "two-block",
            Suite::Averaging => "averaging",
            Suite::Boundary => "boundary",
            Suite::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOptions {
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    /// Largest two-block size checked exhaustively.
    pub max_block: usize,
    pub bundle: Bundle,
    /// Vertex the local checks are centred at.
    pub center: Vertex,
    pub kappas: Vec<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            alphas: vec![0.3, 0.5],
            seed: 0,
            samples: super::DEFAULT_DENSITY_SAMPLES,
            max_block: TWO_BLOCK_LIMIT,
            bundle: Bundle::NeighbourPairs { conductance: true },
            center: 0,
            kappas: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteCheck {
    pub name: String,
    pub passed: bool,
    /// The worst value seen (a residual, or a smallest eigenvalue).
    pub value: f64,
    pub tolerance: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<SuiteCheck>,
    pub detail: Value,
}

fn report(suite: Suite, checks: Vec<SuiteCheck>, detail: Value) -> SuiteReport {
    SuiteReport { suite, passed: checks.iter().all(|c| c.passed), checks, detail }
}

/// `value >= -tolerance`.
fn lower(name: &str, value: f64, tolerance: f64, evaluations: usize) -> SuiteCheck {
    SuiteCheck { name: name.into(), passed: value >= -tolerance, value, tolerance, evaluations }
}

/// `value <= tolerance`.
fn upper(name: &str, value: f64, tolerance: f64, evaluations: usize) -> SuiteCheck {
    SuiteCheck { name: name.into(), passed: value <= tolerance, value, tolerance, evaluations }
}

fn flag(name: &str, passed: bool, evaluations: usize) -> SuiteCheck {
    SuiteCheck { name: name.into(), passed, value: if passed { 0.0 } else { 1.0 }, tolerance: 0.0, evaluations }
}

pub fn run_suite(
    suite: Suite,
    g: &WeightedGraph,
    spec: Option<&BoundarySpec>,
    opts: &SuiteOptions,
) -> Result<SuiteReport> {
    if opts.center >= g.vertex_count() {
        return Err(HarnessError::InvalidConfig(format!("centre {} is not a vertex", opts.center)));
    }
    if opts.alphas.is_empty() || opts.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(HarnessError::InvalidConfig("densities must lie in (0, 1)".into()));
    }
    match suite {
        Suite::Mpl => mpl_suite(g, opts),
        Suite::Ensembles => ensembles_suite(g, opts),
        Suite::TwoBlock => two_block_suite(g, opts),
        Suite::Averaging => averaging_suite(g, opts),
        Suite::Boundary => {
            let spec = spec.ok_or_else(|| HarnessError::InvalidConfig("the boundary suite needs boundary entries".into()))?;
            boundary_suite(g, spec, opts)
        }
        Suite::Spectral => spectral_suite(g, opts),
    }
}

fn mpl_suite(g: &WeightedGraph, opts: &SuiteOptions) -> Result<SuiteReport> {
    let n = g.vertex_count();
    check_sites(n)?;
    let jobs: Vec<(Vertex, Vertex, f64)> = opts
        .alphas
        .iter()
        .flat_map(|&a| (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y, a))))
        .collect();
    let results = jobs.par_iter().map(|&(x, y, a)| mpl_psd_check(g, x, y, a)).collect::<Result<Vec<_>>>()?;
    let worst = results.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let checks = vec![lower("moving particle form difference", worst, PSD_TOLERANCE, results.len())];
    Ok(report(Suite::Mpl, checks, json!({ "pairs": results })))
}

fn ensembles_suite(g: &WeightedGraph, opts: &SuiteOptions) -> Result<SuiteReport> {
    let p = opts.center;
    let anchor = if opts.bundle.is_edge() {
        Anchor::Edge(p, g.neighbors(p).first().ok_or(HarnessError::InvalidConfig("isolated centre".into()))?.0)
    } else {
        Anchor::Vertex(p)
    };
    let support = opts.bundle.support(g, anchor)?;
    let sizes: Vec<usize> = (support.len()..=g.vertex_count()).collect();
    let sets = bfs_prefixes(g, p, &sizes)?;
    let table = verify_equivalence_of_ensembles(g, opts.bundle, anchor, &sets, f64::INFINITY)?;
    let enumerated: Vec<f64> = table.rows.iter().filter_map(|r| r.enumeration_error).collect();
    let worst = enumerated.iter().copied().fold(0.0, f64::max);
    let checks = vec![
        upper("closed form against enumeration", worst, IDENTITY_TOLERANCE, enumerated.len()),
        flag("gap eventually decreasing", table.eventually_decreasing, table.rows.len()),
    ];
    Ok(report(Suite::Ensembles, checks, serde_json::to_value(&table).expect("serializable")))
}

fn two_block_suite(g: &WeightedGraph, opts: &SuiteOptions) -> Result<SuiteReport> {
    let sizes: Vec<usize> = (1..=opts.max_block).collect();
    let table = verify_two_block_bound(&sizes)?;
    let worst_identity = table
        .rows
        .iter()
        .map(|r| r.enumeration_error.max(r.mean_error).max(r.variance_error))
        .fold(0.0, f64::max);
    let mut checks = vec![
        flag("gap below the two-block bound", table.rows.iter().all(|r| r.within_bound), table.rows.len()),
        upper("moment and enumeration identities", worst_identity, table.tolerance, table.rows.len()),
    ];
    let mut comparisons = Vec::new();
    if g.vertex_count() <= super::FORM_STATE_CAP {
        for r in 1..=g.eccentricity(opts.center) + 1 {
            let Ok(part) = build_partition(g, opts.center, r, g.vertex_count() + 1) else { break };
            for i in 1..part.block_count() {
                for &a in &opts.alphas {
                    comparisons.push((r, i, two_block_comparison(g, part.block(0), part.block(i), a)?));
                }
            }
        }
        let worst = comparisons.iter().map(|c| c.2.min_eigenvalue).fold(f64::INFINITY, f64::min);
        checks.push(lower("two-block comparison form difference", worst, PSD_TOLERANCE, comparisons.len()));
    }
    let detail = json!({
        "table": table,
        "comparisons": comparisons.iter().map(|(r, i, c)| json!({"block_radius": r, "block": i, "result": c})).collect::<Vec<_>>(),
    });
    Ok(report(Suite::TwoBlock, checks, detail))
}

fn averaging_suite(g: &WeightedGraph, opts: &SuiteOptions) -> Result<SuiteReport> {
    let n = g.vertex_count();
    let p = opts.center;
    let mut rng = labelled_rng(opts.seed, "suite/averaging");
    let ball_radius = g.eccentricity(p) + 1;
    let mut identity = 0.0f64;
    let mut partitions = Vec::new();
    for r in 1..ball_radius {
        let part = match build_partition(g, p, r, ball_radius) {
            Ok(part) => part,
            Err(HarnessError::BallTooSmall { .. }) => break,
            Err(e) => return Err(e),
        };
        part.check()?;
        for _ in 0..opts.samples.max(1) {
            let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            identity = identity.max(part.averaging_residual(&values)?);
        }
        partitions.push(part);
    }
    let mut checks = vec![upper("block averaging identity", identity, IDENTITY_TOLERANCE, partitions.len() * opts.samples.max(1))];
    let mut decomposition = 0.0f64;
    let mut evaluations = 0;
    if n <= MAX_BALL && g.degree(p) > 0 {
        let ball: Vec<Vertex> = (0..n).collect();
        let anchor = if opts.bundle.is_edge() { Anchor::Edge(p, g.neighbors(p)[0].0) } else { Anchor::Vertex(p) };
        let radius = opts.bundle.radius().max(1);
        let block = g.ball(p, radius)?;
        let ctx = UContext::new(g, opts.bundle, anchor, &block, &ball)?;
        for _ in 0..opts.samples.max(1) {
            let bits: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            decomposition = decomposition.max(ctx.fields(g, &Configuration::from_bools(&bits))?.decomposition_residual());
            evaluations += 1;
        }
        checks.push(upper("field decomposition", decomposition, IDENTITY_TOLERANCE, evaluations));
    }
    Ok(report(Suite::Averaging, checks, json!({ "partitions": partitions })))
}

fn boundary_suite(g: &WeightedGraph, spec: &BoundarySpec, opts: &SuiteOptions) -> Result<SuiteReport> {
    let reports = opts
        .alphas
        .iter()
        .map(|&a| verify_boundary_lemmas(g, spec, opts.samples, opts.seed, a))
        .collect::<Result<Vec<_>>>()?;
    let mut checks: Vec<SuiteCheck> = Vec::new();
    for rep in &reports {
        for c in &rep.checks {
            let name = format!("{} (alpha = {})", c.name, rep.alpha);
            checks.push(SuiteCheck { name, passed: c.passed, value: c.worst_slack, tolerance: 0.0, evaluations: c.evaluations });
        }
    }
    Ok(report(Suite::Boundary, checks, json!({ "reports": reports })))
}

fn spectral_suite(g: &WeightedGraph, opts: &SuiteOptions) -> Result<SuiteReport> {
    let n = g.vertex_count();
    check_sites(n)?;
    let p = opts.center;
    let block = g.ball(p, 2)?;
    let q = generator_matrix(&ExclusionSystem::from_graph(g, None), super::FORM_STATE_CAP)?;
    let volume = g.total_volume();
    let mut rows = Vec::new();
    let (mut zero_ok, mut monotone, mut bounded) = (true, true, true);
    for &alpha in &opts.alphas {
        let measure = MeasureSpec::Bernoulli(alpha);
        let weights: Vec<f64> = q.states.iter().map(|&s| measure.probability(n, s)).collect();
        let potential: Vec<f64> = q
            .states
            .iter()
            .map(|&s| {
                let eta = Configuration::from_index(n, s);
                eta.occupancy(p) - eta.average(&block)
            })
            .collect();
        let mut last = f64::NEG_INFINITY;
        for &kappa in &opts.kappas {
            let est = spectral_estimate(&q, &weights, &potential, 1.0, kappa, volume, 1.0)?;
            if kappa == 0.0 {
                zero_ok &= est.lambda == 0.0;
            }
            monotone &= est.lambda >= last - 1e-12;
            last = est.lambda;
            if let Some(v) = est.normalized {
                bounded &= v <= est.potential_sup * (1.0 + 1e-12);
            }
            rows.push(json!({ "alpha": alpha, "kappa": kappa, "estimate": est }));
        }
    }
    let evals = rows.len();
    let checks = vec![
        flag("zero at kappa = 0", zero_ok, opts.alphas.len()),
        flag("nondecreasing in kappa", monotone, evals),
        flag("normalized value below sup |U|", bounded, evals),
    ];
    Ok(report(Suite::Spectral, checks, json!({ "block": block, "rows": rows })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, DEFAULT_VERTEX_BUDGET};

    fn sg1() -> WeightedGraph {
        generate(Family::Sg(1), DEFAULT_VERTEX_BUDGET).unwrap().graph
    }

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()), Some(s));
        }
        assert_eq!(Suite::parse("nope"), None);
    }

    #[test]
    fn graph_suites_pass_on_sg1() {
        let g = sg1();
        let opts = SuiteOptions { samples: 16, max_block: 6, ..Default::default() };
        for s in [Suite::Mpl, Suite::TwoBlock, Suite::Averaging, Suite::Spectral] {
            let rep = run_suite(s, &g, None, &opts).unwrap();
            assert!(rep.passed, "{}: {:?}", s.name(), rep.checks);
        }
    }

    #[test]
    fn boundary_suite_needs_entries() {
        let g = sg1();
        let err = run_suite(Suite::Boundary, &g, None, &SuiteOptions::default()).unwrap_err();
        assert!(matches!(err, HarnessError::InvalidConfig(_)));
        let c = generate(Family::Sg(1), DEFAULT_VERTEX_BUDGET).unwrap().corners;
        let spec = BoundarySpec::new(&g, &[(c[0], 1.0, 1.0), (c[1], 1.0, 1.0)]).unwrap();
        let opts = SuiteOptions { samples: 8, ..Default::default() };
        let rep = run_suite(Suite::Boundary, &g, Some(&spec), &opts).unwrap();
        assert_eq!(rep.checks.len(), 12);
    }

    #[test]
    fn ensembles_suite_on_a_path() {
        let g = generate(Family::Path(14), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        let opts = SuiteOptions { center: 2, ..Default::default() };
        let rep = run_suite(Suite::Ensembles, &g, None, &opts).unwrap();
        assert!(rep.checks[0].passed, "{:?}", rep.checks);
    }
}
