//! Contact thermodynamics: equations of state `E = f(S, V, N)` as Legendrian
//! submanifolds of `(E, P, V, T, S, mu, N)`.

use serde::{Deserialize, Serialize};

use super::LegendrianError;
use crate::forms::{Chart, FormsError, SmoothMap, VectorField};
use crate::kcontact::thermo_structure;
use crate::symexpr::{ScalarExpr, ZeroTester, ZeroVerdict};

/// Ideal-gas constants. The defaults set every reference constant to one.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealGas {
    pub cv: ScalarExpr,
    pub u0: ScalarExpr,
    pub v0: ScalarExpr,
    pub s0: ScalarExpr,
    pub r: ScalarExpr,
}

impl Default for IdealGas {
    fn default() -> Self {
        IdealGas {
            cv: ScalarExpr::rational(3, 2),
            u0: ScalarExpr::one(),
            v0: ScalarExpr::one(),
            s0: ScalarExpr::zero(),
            r: ScalarExpr::one(),
        }
    }
}

/// `U = U0 (V/V0)^(−1/cv) exp((S/N − s0)/(cv R))`.
pub fn ideal_gas_energy(gas: &IdealGas) -> ScalarExpr {
    let v = ScalarExpr::var("V");
    let s = ScalarExpr::var("S");
    let n = ScalarExpr::var("N");
    let cv = gas.cv.as_constant().cloned();
    let ratio = &v / &gas.v0;
    let volume = match cv {
        Some(c) => ScalarExpr::pow(&ratio, -c.recip()),
        // symbolic cv: write the power through exp/log
        None => (-(ratio.ln()) / &gas.cv).exp(),
    };
    let entropy = ((s / n - &gas.s0) / (&gas.cv * &gas.r)).exp();
    &gas.u0 * volume * entropy
}

#[derive(Debug, Clone)]
pub struct ThermoParametrization {
    pub map: SmoothMap,
    pub f: ScalarExpr,
}

/// `(S, V, N) ↦ (E, P, V, T, S, mu, N) = (f, −f_V, V, f_S, S, f_N, N)`.
pub fn thermo_parametrization(f: &ScalarExpr) -> Result<ThermoParametrization, LegendrianError> {
    let source = Chart::new(&["S", "V", "N"])
        .expect("valid names")
        .with_range("S", 0.5, 2.0)
        .with_range("V", 0.5, 2.0)
        .with_range("N", 0.5, 2.0)
        .shared();
    let target = thermo_structure().chart().clone();
    let var = ScalarExpr::var;
    let comps = vec![
        f.clone(),
        -f.differentiate("V"),
        var("V"),
        f.differentiate("S"),
        var("S"),
        f.differentiate("N"),
        var("N"),
    ];
    let map = SmoothMap::new(&source, &target, comps)?;
    Ok(ThermoParametrization { map, f: f.clone() })
}

/// `⟨∂_T, ∂_P, ∂_mu⟩`: the momentum directions of the Darboux form
/// `dE − T dS − (−P) dV − μ dN`, an isotropic complement to any graph over
/// `(S, V, N)`.
pub fn thermo_complement(chart: &std::sync::Arc<Chart>) -> Result<Vec<VectorField>, FormsError> {
    ["T", "P", "mu"].iter().map(|c| VectorField::from_named(chart, &[(c, ScalarExpr::one())])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsReport {
    pub euler_residual: f64,
    pub verdict: ZeroVerdict,
    pub max_residual: f64,
}

impl GibbsReport {
    pub fn holds(&self) -> bool {
        self.verdict == ZeroVerdict::Zero
    }
}

/// `E + PV − TS − μN` on the image, for `f` homogeneous of degree one.
/// `tester` samples the `(S, V, N)` chart.
pub fn check_gibbs_equality(
    f: &ScalarExpr,
    l: &ThermoParametrization,
    tester: &ZeroTester,
) -> Result<GibbsReport, LegendrianError> {
    let var = ScalarExpr::var;
    let euler = var("S") * f.differentiate("S") + var("V") * f.differentiate("V") + var("N") * f.differentiate("N")
        - f;
    let (v, euler_residual) = tester.verdict_with_residual(&euler)?;
    if v != ZeroVerdict::Zero {
        return Err(LegendrianError::NotHomogeneous { residual: euler_residual });
    }
    let gibbs = var("E") + var("P") * var("V") - var("T") * var("S") - var("mu") * var("N");
    let (verdict, max_residual) = tester.verdict_with_residual(&l.map.compose(&gibbs))?;
    Ok(GibbsReport { euler_residual, verdict, max_residual })
}
