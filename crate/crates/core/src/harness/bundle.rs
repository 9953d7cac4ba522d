//! Local function bundles, their global averages, and the U-fields.

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::exclusion::Configuration;
use crate::graph::{Vertex, WeightedGraph};

/// Largest support enumerated when computing a global average.
pub const MAX_BALL: usize = 20;

/// The three canonical bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bundle {
    /// `eta(x)`.
    Occupation,
    /// `sum_{y ~ x} b_xy eta(x) eta(y)` with `b = 1` or `b = c`.
    NeighbourPairs { conductance: bool },
    /// `c_e eta(tail) eta(head)`.
    EdgeProduct,
}

/// Where a bundle member sits: a vertex, or an oriented edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anchor {
    Vertex(Vertex),
    Edge(Vertex, Vertex),
}

impl Anchor {
    pub fn tail(&self) -> Vertex {
        match *self {
            Anchor::Vertex(x) | Anchor::Edge(x, _) => x,
        }
    }
}

impl Bundle {
    pub fn parse(text: &str) -> Option<Bundle> {
        match text {
            "occupation" | "eta" => Some(Bundle::Occupation),
            "pairs" => Some(Bundle::NeighbourPairs { conductance: false }),
            "pairs-c" => Some(Bundle::NeighbourPairs { conductance: true }),
            "edge" => Some(Bundle::EdgeProduct),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Bundle::Occupation => "occupation",
            Bundle::NeighbourPairs { conductance: false } => "pairs",
            Bundle::NeighbourPairs { conductance: true } => "pairs-c",
            Bundle::EdgeProduct => "edge",
        }
    }

    /// `r_phi` for the open ball `B(tail, r_phi)`.
    pub fn radius(&self) -> usize {
        match self {
            Bundle::Occupation => 1,
            _ => 2,
        }
    }

    pub fn is_edge(&self) -> bool {
        matches!(self, Bundle::EdgeProduct)
    }

    fn check_anchor(&self, g: &WeightedGraph, anchor: Anchor) -> Result<()> {
        let n = g.vertex_count();
        match (self.is_edge(), anchor) {
            (false, Anchor::Vertex(x)) if x < n => Ok(()),
            (true, Anchor::Edge(x, y)) if x < n && y < n && g.conductance(x, y) > 0.0 => Ok(()),
            _ => Err(HarnessError::InvalidConfig(format!("anchor {anchor:?} does not fit bundle {}", self.name()))),
        }
    }

    /// The vertices the bundle member depends on, sorted.
    pub fn support(&self, g: &WeightedGraph, anchor: Anchor) -> Result<Vec<Vertex>> {
        self.check_anchor(g, anchor)?;
        Ok(g.ball(anchor.tail(), self.radius())?)
    }

    /// `phi_p` evaluated through an occupancy oracle.
    pub fn evaluate_with(&self, g: &WeightedGraph, anchor: Anchor, occ: impl Fn(Vertex) -> bool) -> f64 {
        let x = anchor.tail();
        match *self {
            Bundle::Occupation => f64::from(u8::from(occ(x))),
            Bundle::NeighbourPairs { conductance } => {
                if !occ(x) {
                    return 0.0;
                }
                g.neighbors(x)
                    .iter()
                    .filter(|&&(y, _)| occ(y))
                    .map(|&(_, c)| if conductance { c } else { 1.0 })
                    .sum()
            }
            Bundle::EdgeProduct => {
                let Anchor::Edge(_, y) = anchor else { return 0.0 };
                if occ(x) && occ(y) {
                    g.conductance(x, y)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn evaluate(&self, g: &WeightedGraph, anchor: Anchor, eta: &Configuration) -> f64 {
        self.evaluate_with(g, anchor, |v| eta.get(v))
    }
}

/// `Phi_p(alpha) = nu_alpha[phi_p]`, stored as the sums `S_k` of `phi_p` over
/// support configurations with `k` particles.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalAverage {
    pub support: Vec<Vertex>,
    pub sums_by_count: Vec<f64>,
}

impl GlobalAverage {
    pub fn new(g: &WeightedGraph, bundle: Bundle, anchor: Anchor) -> Result<Self> {
        let support = bundle.support(g, anchor)?;
        let s = support.len();
        if s > MAX_BALL {
            return Err(HarnessError::BallTooLarge { size: s, cap: MAX_BALL });
        }
        let mut sums = vec![0.0; s + 1];
        for mask in 0usize..1 << s {
            let occ = |v: Vertex| support.binary_search(&v).is_ok_and(|i| mask >> i & 1 == 1);
            sums[mask.count_ones() as usize] += bundle.evaluate_with(g, anchor, occ);
        }
        Ok(Self { support, sums_by_count: sums })
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        let s = self.support.len() as i32;
        self.sums_by_count
            .iter()
            .enumerate()
            .map(|(k, &sk)| sk * alpha.powi(k as i32) * (1.0 - alpha).powi(s - k as i32))
            .sum()
    }

    /// `nu_{*,k}[phi_p]` on any set of `n` sites containing the support.
    pub fn canonical(&self, n: usize, k: usize) -> Result<f64> {
        let s = self.support.len();
        if k > n || n < s {
            return Err(HarnessError::KOutOfRange { k, n });
        }
        let total = binomial(n, k);
        Ok(self
            .sums_by_count
            .iter()
            .enumerate()
            .filter(|&(j, _)| j <= k && k - j <= n - s)
            .map(|(j, &sj)| sj * binomial(n - s, k - j) / total)
            .sum())
    }

    /// Largest difference quotient of `Phi` on a uniform grid of `[0, 1]`.
    pub fn lipschitz(&self, grid: usize) -> f64 {
        let h = 1.0 / grid.max(1) as f64;
        (0..grid.max(1))
            .map(|i| (self.eval((i + 1) as f64 * h) - self.eval(i as f64 * h)).abs() / h)
            .fold(0.0, f64::max)
    }

    /// `Phi(k / len)` for `k = 0..=len`.
    pub fn table(&self, len: usize) -> Vec<f64> {
        (0..=len).map(|k| self.eval(k as f64 / len as f64)).collect()
    }
}

/// `C(n, k)` as a float; exact while the value fits in 53 bits.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// The local field `phi_p` together with its block and ball averages.
#[derive(Debug, Clone)]
pub struct UContext {
    pub bundle: Bundle,
    pub anchor: Anchor,
    pub average: GlobalAverage,
    /// `Lambda_j(p)`.
    pub block: Vec<Vertex>,
    /// `B(p, r_{eps N})`.
    pub ball: Vec<Vertex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UFields {
    /// `phi_p - Phi(avg over the ball)`.
    pub u: f64,
    /// `phi_p - Phi(avg over the block)`.
    pub u1: f64,
    /// `Phi(avg over the block) - Phi(avg over the ball)`.
    pub u2: f64,
}

impl UFields {
    pub fn decomposition_residual(&self) -> f64 {
        (self.u - (self.u1 + self.u2)).abs()
    }
}

impl UContext {
    pub fn new(g: &WeightedGraph, bundle: Bundle, anchor: Anchor, block: &[Vertex], ball: &[Vertex]) -> Result<Self> {
        let average = GlobalAverage::new(g, bundle, anchor)?;
        let mut block = block.to_vec();
        let mut ball = ball.to_vec();
        block.sort_unstable();
        ball.sort_unstable();
        if block.is_empty() || block.binary_search(&anchor.tail()).is_err() {
            return Err(HarnessError::InconsistentPartition("block does not contain the anchor".into()));
        }
        if let Some(v) = block.iter().chain(&ball).find(|&&v| v >= g.vertex_count()) {
            return Err(HarnessError::InconsistentPartition(format!("vertex {v} is not in the graph")));
        }
        if block.iter().any(|v| ball.binary_search(v).is_err()) {
            return Err(HarnessError::InconsistentPartition("block is not inside the ball".into()));
        }
        Ok(Self { bundle, anchor, average, block, ball })
    }

    pub fn fields(&self, g: &WeightedGraph, eta: &Configuration) -> Result<UFields> {
        if eta.len() != g.vertex_count() {
            return Err(HarnessError::InconsistentPartition("configuration length differs from the graph".into()));
        }
        let phi = self.bundle.evaluate(g, self.anchor, eta);
        let block_avg = self.average.eval(eta.average(&self.block));
        let ball_avg = self.average.eval(eta.average(&self.ball));
        Ok(UFields { u: phi - ball_avg, u1: phi - block_avg, u2: block_avg - ball_avg })
    }
}

/// `avg over lx - avg over ly`.
pub fn u_tilde(eta: &Configuration, lx: &[Vertex], ly: &[Vertex]) -> f64 {
    eta.average(lx) - eta.average(ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, DEFAULT_VERTEX_BUDGET};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sg(n: usize) -> WeightedGraph {
        generate(Family::Sg(n), DEFAULT_VERTEX_BUDGET).unwrap().graph
    }

    fn weighted() -> WeightedGraph {
        WeightedGraph::from_indexed(5, &[(0, 1, 2.0), (0, 2, 0.5), (1, 3, 1.5), (2, 3, 1.0), (3, 4, 3.0)]).unwrap()
    }

    #[test]
    fn global_average_examples() {
        let g = weighted();
        for alpha in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let occ = GlobalAverage::new(&g, Bundle::Occupation, Anchor::Vertex(3)).unwrap();
            assert_relative_eq!(occ.eval(alpha), alpha, epsilon = 1e-14);
            let pairs = GlobalAverage::new(&g, Bundle::NeighbourPairs { conductance: false }, Anchor::Vertex(3)).unwrap();
            assert_relative_eq!(pairs.eval(alpha), 3.0 * alpha * alpha, epsilon = 1e-14);
            let cpairs = GlobalAverage::new(&g, Bundle::NeighbourPairs { conductance: true }, Anchor::Vertex(3)).unwrap();
            assert_relative_eq!(cpairs.eval(alpha), 5.5 * alpha * alpha, epsilon = 1e-14);
            let edge = GlobalAverage::new(&g, Bundle::EdgeProduct, Anchor::Edge(3, 4)).unwrap();
            assert_relative_eq!(edge.eval(alpha), 3.0 * alpha * alpha, epsilon = 1e-14);
        }
        let pairs = GlobalAverage::new(&g, Bundle::NeighbourPairs { conductance: false }, Anchor::Vertex(3)).unwrap();
        assert!((pairs.lipschitz(1000) - 6.0).abs() < 1e-2);
    }

    #[test]
    fn canonical_matches_pair_closed_form() {
        let g = weighted();
        let pairs = GlobalAverage::new(&g, Bundle::NeighbourPairs { conductance: false }, Anchor::Vertex(0)).unwrap();
        for n in 3usize..9 {
            for k in 0..=n {
                let expect = 2.0 * (k * k.saturating_sub(1)) as f64 / (n * (n - 1)) as f64;
                assert_relative_eq!(pairs.canonical(n, k).unwrap(), expect, epsilon = 1e-14);
            }
        }
        assert!(matches!(pairs.canonical(4, 5), Err(HarnessError::KOutOfRange { .. })));
    }

    #[test]
    fn anchors_are_checked() {
        let g = weighted();
        assert!(Bundle::EdgeProduct.support(&g, Anchor::Edge(0, 4)).is_err());
        assert!(Bundle::Occupation.support(&g, Anchor::Edge(0, 1)).is_err());
        assert_eq!(Bundle::EdgeProduct.support(&g, Anchor::Edge(0, 1)).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn ball_cap() {
        let star: Vec<(usize, usize, f64)> = (1..25).map(|i| (0, i, 1.0)).collect();
        let g = WeightedGraph::from_indexed(25, &star).unwrap();
        let err = GlobalAverage::new(&g, Bundle::NeighbourPairs { conductance: false }, Anchor::Vertex(0));
        assert_eq!(err, Err(HarnessError::BallTooLarge { size: 25, cap: MAX_BALL }));
    }

    #[test]
    fn u_field_examples() {
        let g = sg(2);
        let ball: Vec<Vertex> = (0..g.vertex_count()).collect();
        let ctx = UContext::new(&g, Bundle::Occupation, Anchor::Vertex(0), &[0, 1], &ball).unwrap();
        let f = ctx.fields(&g, &Configuration::full(g.vertex_count())).unwrap();
        assert_eq!((f.u, f.u1, f.u2), (0.0, 0.0, 0.0));
        let eta = Configuration::from_bools(&[true, false]);
        assert_eq!(u_tilde(&eta, &[0], &[1]), 1.0);
        assert!(UContext::new(&g, Bundle::Occupation, Anchor::Vertex(0), &[1, 2], &ball).is_err());
        assert!(UContext::new(&g, Bundle::Occupation, Anchor::Vertex(0), &[0, 1], &[0, 2]).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(28, 14), 40_116_600.0);
        assert_eq!(binomial(5, 7), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
    }

    proptest! {
        #[test]
        fn locality(bits in proptest::collection::vec(any::<bool>(), 15), flips in proptest::collection::vec(0usize..15, 1..6), which in 0usize..4) {
            let g = sg(2);
            let bundles = [Bundle::Occupation, Bundle::NeighbourPairs { conductance: false }, Bundle::NeighbourPairs { conductance: true }, Bundle::EdgeProduct];
            let bundle = bundles[which];
            let anchor = if bundle.is_edge() { Anchor::Edge(4, g.neighbors(4)[0].0) } else { Anchor::Vertex(4) };
            let support = bundle.support(&g, anchor).unwrap();
            let eta = Configuration::from_bools(&bits);
            let mut mutated = eta.clone();
            for v in flips.into_iter().filter(|v| support.binary_search(v).is_err()) {
                mutated.flip(v);
            }
            prop_assert_eq!(bundle.evaluate(&g, anchor, &eta), bundle.evaluate(&g, anchor, &mutated));
        }

        #[test]
        fn decomposition(bits in proptest::collection::vec(any::<bool>(), 15), conductance in any::<bool>()) {
            let g = sg(2);
            let ball = g.ball(0, 4).unwrap();
            let block = g.ball(0, 2).unwrap();
            let ctx = UContext::new(&g, Bundle::NeighbourPairs { conductance }, Anchor::Vertex(0), &block, &ball).unwrap();
            let f = ctx.fields(&g, &Configuration::from_bools(&bits)).unwrap();
            prop_assert!(f.decomposition_residual() <= 4.0 * f64::EPSILON * (1.0 + f.u.abs()));
        }
    }
}
