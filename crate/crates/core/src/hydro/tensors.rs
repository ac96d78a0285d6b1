use serde::{Deserialize, Serialize};

use super::HydroError;
use crate::symexpr::{ScalarExpr, ZeroTestError, ZeroTester, ZeroVerdict};

/// `diag(+1, −1, …, −1)` in `dim` spacetime dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinkowskiMetric {
    pub dim: usize,
}

impl Default for MinkowskiMetric {
    fn default() -> Self {
        MinkowskiMetric { dim: 4 }
    }
}

impl MinkowskiMetric {
    pub fn new(dim: usize) -> Self {
        MinkowskiMetric { dim }
    }

    /// `g_{μμ}` (equal to `g^{μμ}`).
    pub fn sign(&self, mu: usize) -> i64 {
        if mu == 0 {
            1
        } else {
            -1
        }
    }

    pub fn component(&self, mu: usize, nu: usize) -> i64 {
        if mu == nu {
            self.sign(mu)
        } else {
            0
        }
    }

    pub fn lower(&self, v: &[ScalarExpr]) -> Vec<ScalarExpr> {
        v.iter().enumerate().map(|(mu, c)| self.scale(mu, c)).collect()
    }

    pub fn dot(&self, a: &[ScalarExpr], b: &[ScalarExpr]) -> ScalarExpr {
        ScalarExpr::sum(a.iter().zip(b).enumerate().map(|(mu, (x, y))| self.scale(mu, &(x * y))))
    }

    fn scale(&self, mu: usize, e: &ScalarExpr) -> ScalarExpr {
        if self.sign(mu) == 1 {
            e.clone()
        } else {
            -e.clone()
        }
    }
}

/// Four-velocity and temperature; `β^μ = u^μ / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidTensors {
    pub u: Vec<ScalarExpr>,
    pub temperature: ScalarExpr,
}

impl FluidTensors {
    pub fn new(u: Vec<ScalarExpr>, temperature: ScalarExpr) -> Self {
        FluidTensors { u, temperature }
    }

    pub fn k(&self) -> usize {
        self.u.len()
    }

    pub fn metric(&self) -> MinkowskiMetric {
        MinkowskiMetric::new(self.k())
    }

    pub fn beta(&self) -> Vec<ScalarExpr> {
        self.u.iter().map(|c| c / &self.temperature).collect()
    }

    /// Verdict for `u_μ u^μ − 1 ≡ 0`.
    pub fn normalization(&self, tester: &ZeroTester) -> Result<ZeroVerdict, ZeroTestError> {
        tester.verdict(&(self.metric().dot(&self.u, &self.u) - ScalarExpr::one()))
    }
}

/// `Δ^{μν} = g^{μν} − u^μ u^ν`.
pub fn delta_projector(u: &[ScalarExpr]) -> Vec<Vec<ScalarExpr>> {
    let g = MinkowskiMetric::new(u.len());
    (0..u.len())
        .map(|mu| (0..u.len()).map(|nu| ScalarExpr::int(g.component(mu, nu)) - &u[mu] * &u[nu]).collect())
        .collect()
}

/// `Δ^{μν}_{αβ} = ½(Δ^μ_α Δ^ν_β + Δ^μ_β Δ^ν_α − ⅔ Δ^{μν} Δ_{αβ})` for `k = 4`.
#[derive(Debug, Clone)]
pub struct Rank4Projector {
    entries: Vec<ScalarExpr>,
}

impl Rank4Projector {
    /// Upper `μ, ν`, lower `α, β`.
    pub fn component(&self, mu: usize, nu: usize, alpha: usize, beta: usize) -> &ScalarExpr {
        &self.entries[((mu * 4 + nu) * 4 + alpha) * 4 + beta]
    }

    /// `Δ^{μν}_{αβ} X^{αβ}`.
    pub fn apply(&self, x: &[Vec<ScalarExpr>]) -> Vec<Vec<ScalarExpr>> {
        (0..4)
            .map(|mu| {
                (0..4)
                    .map(|nu| {
                        ScalarExpr::sum((0..4).flat_map(|a| (0..4).map(move |b| (a, b))).filter_map(|(a, b)| {
                            let c = self.component(mu, nu, a, b);
                            (!c.is_zero_const() && !x[a][b].is_zero_const()).then(|| c * &x[a][b])
                        }))
                    })
                    .collect()
            })
            .collect()
    }
}

/// `(Δ^{μν}, Δ^{μν}_{αβ})`. The rank-4 projector carries the 3-space trace
/// factor ⅔ and is only built for `k = 4`.
pub fn projectors(f: &FluidTensors) -> Result<(Vec<Vec<ScalarExpr>>, Rank4Projector), HydroError> {
    let k = f.k();
    if k != 4 {
        return Err(HydroError::DimensionNot4(k));
    }
    let g = f.metric();
    let delta = delta_projector(&f.u);
    let sg = |i: usize| ScalarExpr::int(g.sign(i));
    // Δ^μ_α = Δ^{μα} g_{αα};  Δ_{αβ} = g_{αα} g_{ββ} Δ^{αβ}
    let mixed = |mu: usize, a: usize| &delta[mu][a] * sg(a);
    let lower = |a: usize, b: usize| &delta[a][b] * ScalarExpr::int(g.sign(a) * g.sign(b));
    let half = ScalarExpr::rational(1, 2);
    let two_thirds = ScalarExpr::rational(2, 3);
    let mut entries = Vec::with_capacity(256);
    for mu in 0..4 {
        for nu in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let e = mixed(mu, a) * mixed(nu, b) + mixed(mu, b) * mixed(nu, a)
                        - &two_thirds * &delta[mu][nu] * lower(a, b);
                    entries.push(&half * e);
                }
            }
        }
    }
    Ok((delta, Rank4Projector { entries }))
}
