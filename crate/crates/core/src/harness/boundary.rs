//! Change-of-measure inequalities for the boundary-driven process, checked
//! against the product measure built from the stationary density profile.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::forms::{count_classes, min_eigenvalue};
use super::{HarnessError, Result};
use crate::exclusion::{radon_nikodym_ratio, BoundarySpec, Configuration, MeasureSpec, Transition};
use crate::graph::{Vertex, WeightedGraph};
use crate::potential::{effective_resistance_pair, stationary_marginal};
use crate::rng::labelled_rng;

pub const DEFAULT_DENSITY_SAMPLES: usize = 256;

/// Largest graph for the boundary suite.
const BOUNDARY_SITE_CAP: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    /// `min (RHS - LHS)` over everything tested; negative means a violation.
    pub worst_slack: f64,
    pub evaluations: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryLemmaReport {
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
    pub rho: Vec<f64>,
    pub flows: Vec<f64>,
    pub energy: f64,
    /// `sup_eta |sum_xy c_xy (d nu(eta^xy) / d nu(eta) - 1)|`.
    pub ratio_sup: f64,
    /// `(1/delta^2) sum |i_rho| + (2/delta^3) E(rho)`.
    pub ratio_bound: f64,
    pub checks: Vec<LemmaCheck>,
    pub passed: bool,
}

struct Space<'a> {
    g: &'a WeightedGraph,
    /// `nu_lambda` and `nu_alpha` over all states.
    lambda: Vec<f64>,
    alpha: Vec<f64>,
}

impl Space<'_> {
    fn swap(s: usize, x: Vertex, y: Vertex) -> usize {
        if (s >> x & 1) != (s >> y & 1) {
            s ^ (1 << x) ^ (1 << y)
        } else {
            s
        }
    }

    /// `sum_s mu(s) (f(s^xy) - f(s))^2`.
    fn grad_sq(mu: &[f64], f: &[f64], x: Vertex, y: Vertex) -> f64 {
        (0..f.len()).map(|s| mu[s] * (f[Self::swap(s, x, y)] - f[s]).powi(2)).sum()
    }

    /// `sum_xy c_xy mu[(nabla_xy f)^2]`.
    fn edge_energy(&self, mu: &[f64], f: &[f64]) -> f64 {
        self.g.edges().iter().map(|&(x, y, c)| c * Self::grad_sq(mu, f, x, y)).sum()
    }

    /// `mu[f (-L f)]` for the exclusion generator.
    fn generator_form(&self, mu: &[f64], f: &[f64]) -> f64 {
        (0..f.len())
            .map(|s| {
                let lf: f64 = self.g.edges().iter().map(|&(x, y, c)| c * (f[Self::swap(s, x, y)] - f[s])).sum();
                -mu[s] * f[s] * lf
            })
            .sum()
    }
}

fn tally(name: &str, slacks: impl IntoIterator<Item = f64>, tolerance: f64) -> LemmaCheck {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    let mut violations = 0;
    for s in slacks {
        worst = worst.min(s);
        count += 1;
        if s < -tolerance {
            violations += 1;
        }
    }
    LemmaCheck { name: name.into(), passed: violations == 0, worst_slack: worst, evaluations: count, violations }
}

/// Runs the boundary checks on `(g, spec)`:
/// the exhaustive density-ratio supremum bound, the positivity defect of the
/// exclusion form under `nu_lambda` (exact operator check and samples), the
/// change of measure to `nu_alpha`, the boundary moving-particle bound, and
/// the density box bounds.
pub fn verify_boundary_lemmas(
    g: &WeightedGraph,
    spec: &BoundarySpec,
    samples: usize,
    seed: u64,
    alpha: f64,
) -> Result<BoundaryLemmaReport> {
    let n = g.vertex_count();
    if n > BOUNDARY_SITE_CAP {
        return Err(HarnessError::StateSpaceTooLarge { sites: n, cap: BOUNDARY_SITE_CAP });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarnessError::InvalidConfig(format!("density {alpha} is not in (0, 1)")));
    }
    let profile = stationary_marginal(g, spec)?;
    let rho = profile.rho.clone();
    let gamma = spec.gamma();
    let delta = spec.delta();
    let flow_sum: f64 = profile.flows.iter().map(|i| i.abs()).sum();
    let energy = profile.energy;
    let ratio_bound = flow_sum / delta.powi(2) + 2.0 * energy / delta.powi(3);
    let space = Space {
        g,
        lambda: MeasureSpec::Profile(rho.clone()).weights(n),
        alpha: MeasureSpec::Bernoulli(alpha).weights(n),
    };
    let states = 1usize << n;

    // Exhaustive supremum of the weighted density-ratio sum.
    let mut ratio_sup = 0.0f64;
    for s in 0..states {
        let eta = Configuration::from_index(n, s);
        let mut sum = 0.0;
        for &(x, y, c) in g.edges() {
            sum += c * (radon_nikodym_ratio(&rho, &eta, Transition::Swap(x, y))? - 1.0);
        }
        ratio_sup = ratio_sup.max(sum.abs());
    }
    let mut checks = vec![tally("density-ratio supremum", [ratio_bound - ratio_sup], 0.0)];

    // Positivity defect as an operator inequality, class by class:
    // nu[f(-Lf)] - (1/2) sum c nu[(grad f)^2] + (1/2) sup * nu[f^2] >= 0.
    let operator_min = count_classes(n)
        .iter()
        .map(|class| {
            let d = class.len();
            let mut m = DMatrix::zeros(d, d);
            for (i, &s) in class.iter().enumerate() {
                let w = space.lambda[s];
                m[(i, i)] += 0.5 * ratio_sup * w;
                for &(x, y, c) in g.edges() {
                    let t = Space::swap(s, x, y);
                    if t == s {
                        continue;
                    }
                    let j = class.binary_search(&t).expect("swaps keep the particle number");
                    // Generator part, symmetrized.
                    m[(i, i)] += c * w;
                    m[(i, j)] -= 0.5 * c * w;
                    m[(j, i)] -= 0.5 * c * w;
                    // Minus the gradient part.
                    m[(i, i)] -= 0.5 * c * w;
                    m[(j, j)] -= 0.5 * c * w;
                    m[(i, j)] += 0.5 * c * w;
                    m[(j, i)] += 0.5 * c * w;
                }
            }
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] /= (space.lambda[class[i]] * space.lambda[class[j]]).sqrt();
                }
            }
            min_eigenvalue(m)
        })
        .fold(f64::INFINITY, f64::min);
    let scale = 1.0 + ratio_sup + g.edges().iter().map(|e| e.2).sum::<f64>();
    checks.push(tally("exclusion form positivity defect (operator)", [operator_min], 1e-12 * scale));

    let mut rng = labelled_rng(seed, "boundary-densities");
    let densities: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let raw: Vec<f64> = (0..states).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).collect();
            let mass: f64 = raw.iter().zip(&space.lambda).map(|(f, w)| f * w).sum();
            raw.into_iter().map(|f| f / mass).collect()
        })
        .collect();
    let sqrt_f: Vec<Vec<f64>> = densities.iter().map(|f| f.iter().map(|v| v.sqrt()).collect()).collect();

    checks.push(tally(
        "exclusion form positivity defect (sampled)",
        sqrt_f.iter().map(|f| {
            let lhs = space.generator_form(&space.lambda, f);
            let mass: f64 = f.iter().zip(&space.lambda).map(|(v, w)| v * v * w).sum();
            lhs - 0.5 * space.edge_energy(&space.lambda, f) + 0.5 * ratio_sup * mass
        }),
        1e-12 * scale,
    ));

    // sqrt(f d nu_lambda / d nu_alpha) for each sampled density.
    let tilted: Vec<Vec<f64>> =
        densities.iter().map(|f| (0..states).map(|s| (f[s] * space.lambda[s] / space.alpha[s]).sqrt()).collect()).collect();

    let change_of_measure_penalty = (1.0 / delta - 2.0) * ratio_bound;
    checks.push(tally(
        "change of measure to nu_alpha",
        sqrt_f.iter().zip(&tilted).map(|(f, t)| {
            let lhs = space.edge_energy(&space.lambda, f);
            let rhs = 0.5 * space.edge_energy(&space.alpha, t) - change_of_measure_penalty;
            lhs - rhs
        }),
        1e-12 * scale,
    ));

    let mpl_penalty =
        0.5 * (1.0 / delta - 1.0) * (flow_sum / (2.0 * delta.powi(2)) + energy / delta.powi(3));
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            pairs.push((x, y, effective_resistance_pair(g, x, y)?));
        }
    }
    let generator_terms: Vec<f64> = sqrt_f.iter().map(|f| space.generator_form(&space.lambda, f)).collect();
    checks.push(tally(
        "boundary moving particle bound",
        tilted.iter().zip(&generator_terms).flat_map(|(t, gen)| {
            let space = &space;
            pairs.iter().map(move |&(x, y, r)| {
                // nu_alpha[sqrt g (-nabla_xy sqrt g)] = (1/2) nu_alpha[(nabla_xy sqrt g)^2].
                let lhs = 0.5 * Space::grad_sq(&space.alpha, t, x, y);
                2.0 * r * (gen + mpl_penalty) - lhs
            })
        }),
        1e-12 * scale,
    ));

    let (lo, hi) = profile.bounds;
    checks.push(tally("density box bounds", rho.iter().flat_map(|&r| [r - lo, hi - r]), 0.0));

    let passed = checks.iter().all(|c| c.passed);
    Ok(BoundaryLemmaReport {
        gamma,
        delta,
        alpha,
        rho,
        flows: profile.flows,
        energy,
        ratio_sup,
        ratio_bound,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, DEFAULT_VERTEX_BUDGET};

    fn path(n: usize) -> WeightedGraph {
        generate(Family::Path(n), DEFAULT_VERTEX_BUDGET).unwrap().graph
    }

    #[test]
    fn symmetric_rates_have_zero_ratio_sum() {
        let g = path(3);
        let spec = BoundarySpec::new(&g, &[(0, 2.0, 2.0), (3, 1.0, 1.0)]).unwrap();
        let rep = verify_boundary_lemmas(&g, &spec, 16, 1, 0.5).unwrap();
        assert_eq!(rep.ratio_sup, 0.0);
        assert_eq!(rep.ratio_bound, 0.0);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn asymmetric_path_three() {
        let g = path(2);
        let spec = BoundarySpec::new(&g, &[(0, 3.0, 1.0), (2, 1.0, 2.0)]).unwrap();
        let rep = verify_boundary_lemmas(&g, &spec, DEFAULT_DENSITY_SAMPLES, 7, 0.5).unwrap();
        assert!(rep.ratio_sup > 0.0 && rep.ratio_sup <= rep.ratio_bound);
        for c in &rep.checks {
            assert!(c.evaluations > 0, "{}", c.name);
        }
        assert_eq!(rep.gamma, 3.0);
        assert!(rep.rho.iter().all(|&r| (0.25..=0.75).contains(&r)));
        assert!(rep.checks.iter().find(|c| c.name == "density-ratio supremum").unwrap().passed);
        assert!(rep.checks.iter().find(|c| c.name.ends_with("(operator)")).unwrap().passed);
        assert!(rep.checks.iter().find(|c| c.name == "density box bounds").unwrap().passed);
    }

    #[test]
    fn too_many_sites() {
        let g = path(10);
        let spec = BoundarySpec::new(&g, &[(0, 1.0, 1.0)]).unwrap();
        assert!(matches!(verify_boundary_lemmas(&g, &spec, 1, 0, 0.5), Err(HarnessError::StateSpaceTooLarge { .. })));
    }
}
