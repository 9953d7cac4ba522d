//! Product Bernoulli and explicit measures, detailed balance and density ratios.

use super::{Configuration, ExclusionError, Generator, Transition};

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// Product Bernoulli with constant density.
    Bernoulli(f64),
    /// Product Bernoulli with per-site densities.
    Profile(Vec<f64>),
    /// Explicit weights over `{0,1}^V`, indexed by state.
    Explicit(Vec<f64>),
}

impl MeasureSpec {
    pub fn validate(&self, n_sites: usize) -> Result<(), ExclusionError> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            MeasureSpec::Bernoulli(a) if !in_unit(*a) => Err(ExclusionError::InvalidMeasure(format!("density {a}"))),
            MeasureSpec::Profile(p) if p.len() != n_sites => {
                Err(ExclusionError::InvalidMeasure(format!("profile has {} entries for {n_sites} sites", p.len())))
            }
            MeasureSpec::Profile(p) if !p.iter().all(|&v| in_unit(v)) => {
                Err(ExclusionError::InvalidMeasure("profile entry outside [0, 1]".into()))
            }
            MeasureSpec::Explicit(w) => {
                let total: f64 = w.iter().sum();
                if w.len() != 1usize << n_sites || (total - 1.0).abs() > 1e-12 || w.iter().any(|&v| v < 0.0) {
                    Err(ExclusionError::InvalidMeasure("explicit weights must be a distribution on 2^n states".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Density of site `x`, for product measures.
    pub fn site_density(&self, x: usize) -> Option<f64> {
        match self {
            MeasureSpec::Bernoulli(a) => Some(*a),
            MeasureSpec::Profile(p) => Some(p[x]),
            MeasureSpec::Explicit(_) => None,
        }
    }

    /// Probability of the state with index `s` on `n_sites` sites.
    pub fn probability(&self, n_sites: usize, s: usize) -> f64 {
        match self {
            MeasureSpec::Explicit(w) => w[s],
            _ => (0..n_sites)
                .map(|x| {
                    let p = self.site_density(x).expect("product measure");
                    if s >> x & 1 == 1 {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .product(),
        }
    }

    /// Weights of all `2^n` states.
    pub fn weights(&self, n_sites: usize) -> Vec<f64> {
        (0..1usize << n_sites).map(|s| self.probability(n_sites, s)).collect()
    }
}

/// `max |mu(eta) q(eta, eta') - mu(eta') q(eta', eta)|` over all transitions.
pub fn detailed_balance_check(q: &Generator, measure: &MeasureSpec) -> f64 {
    let n = q.n_sites;
    let mu: Vec<f64> = q.states.iter().map(|&s| measure.probability(n, s)).collect();
    let mut worst = 0.0f64;
    for (i, row) in q.rows.iter().enumerate() {
        for &(j, r) in row {
            let back = q.rows[j].iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
            worst = worst.max((mu[i] * r - mu[j] * back).abs());
        }
    }
    worst
}

/// `d nu_h(T eta) / d nu_h(eta)` for a product measure with marginals `h`.
pub fn radon_nikodym_ratio(h: &[f64], eta: &Configuration, transform: Transition) -> Result<f64, ExclusionError> {
    let weight = |x: usize, b: bool| -> Result<f64, ExclusionError> {
        let p = h[x];
        if p <= 0.0 || p >= 1.0 {
            return Err(ExclusionError::DegenerateMarginal(x));
        }
        Ok(if b { p } else { 1.0 - p })
    };
    match transform {
        Transition::Swap(x, y) => {
            let (ex, ey) = (eta.get(x), eta.get(y));
            if ex == ey {
                return Ok(1.0);
            }
            // One quotient of products, so equal marginals give exactly 1.
            let num = weight(x, ey)? * weight(y, ex)?;
            let den = weight(x, ex)? * weight(y, ey)?;
            Ok(num / den)
        }
        Transition::Flip(a) => Ok(weight(a, !eta.get(a))? / weight(a, eta.get(a))?),
    }
}
