//! k-contact structures: pointwise verification of the defining rank
//! conditions, symbolic Reeb frames, the canonical model and polarizations.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{Chart, DifferentialForm, FormsError, RkValuedOneForm, VectorField};
use crate::linalg::{self, EliminationError};
use crate::symexpr::{SamplePoint, ScalarExpr, ZeroTestError, ZeroTester, ZeroVerdict};
use crate::{par, Config};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KContactError {
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("zero test inconclusive while choosing a pivot in column `{0}`")]
    ZeroTestInconclusive(String),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

impl From<crate::symexpr::EvalError> for KContactError {
    fn from(e: crate::symexpr::EvalError) -> Self {
        KContactError::ZeroTest(e.into())
    }
}

#[derive(Debug, Clone)]
pub struct KContactStructure {
    eta: RkValuedOneForm,
    d_eta: Vec<DifferentialForm>,
}

impl KContactStructure {
    pub fn new(eta: RkValuedOneForm) -> Self {
        let d_eta = eta.forms().iter().map(DifferentialForm::exterior_derivative).collect();
        KContactStructure { eta, d_eta }
    }

    pub fn from_forms(chart: &Arc<Chart>, forms: Vec<DifferentialForm>) -> Result<Self, FormsError> {
        Ok(Self::new(RkValuedOneForm::new(chart, forms)?))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.eta.chart()
    }

    pub fn k(&self) -> usize {
        self.eta.k()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn eta(&self) -> &[DifferentialForm] {
        self.eta.forms()
    }

    pub fn d_eta(&self) -> &[DifferentialForm] {
        &self.d_eta
    }

    pub fn zero_tester(&self, cfg: &Config) -> Result<ZeroTester, ZeroTestError> {
        self.chart().zero_tester(cfg)
    }

    /// `k × dim` matrix of η-coefficients at a point.
    pub fn eta_matrix(&self, p: &SamplePoint) -> Result<DMatrix<f64>, FormsError> {
        let mut m = DMatrix::zeros(self.k(), self.dim());
        for (a, f) in self.eta().iter().enumerate() {
            m.set_row(a, &f.covector_at(p)?.transpose());
        }
        Ok(m)
    }

    /// The `dim × dim` matrices `dη^α(∂_i, ∂_j)` stacked vertically.
    pub fn d_eta_stack(&self, p: &SamplePoint) -> Result<DMatrix<f64>, FormsError> {
        let n = self.dim();
        let mut m = DMatrix::zeros(self.k() * n, n);
        for (a, f) in self.d_eta.iter().enumerate() {
            m.view_mut((a * n, 0), (n, n)).copy_from(&f.matrix_at(p)?);
        }
        Ok(m)
    }

    /// The three rank conditions at one point.
    pub fn point_ranks(&self, index: usize, p: &SamplePoint, rel: f64) -> Result<PointRanks, FormsError> {
        let (k, n) = (self.k(), self.dim());
        let eta = self.eta_matrix(p)?;
        let omega = self.d_eta_stack(p)?;
        let eta_rank = linalg::rank(&eta, rel);
        let ker_d_eta_dim = n - linalg::rank(&omega, rel);
        let mut stacked = DMatrix::zeros(k + omega.nrows(), n);
        stacked.view_mut((0, 0), (k, n)).copy_from(&eta);
        stacked.view_mut((k, 0), (omega.nrows(), n)).copy_from(&omega);
        let intersection_dim = n - linalg::rank(&stacked, rel);
        let condition1 = eta_rank == k;
        let condition2 = ker_d_eta_dim == k;
        let condition3 = intersection_dim == 0;
        let ok = condition1 && condition2 && condition3;
        Ok(PointRanks {
            index,
            eta_rank,
            ker_d_eta_dim,
            intersection_dim,
            condition1,
            condition2,
            condition3,
            point: if ok { None } else { Some(p.floats.clone()) },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRanks {
    pub index: usize,
    pub eta_rank: usize,
    pub ker_d_eta_dim: usize,
    pub intersection_dim: usize,
    pub condition1: bool,
    pub condition2: bool,
    pub condition3: bool,
    /// Coordinates, recorded only where a condition fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<std::collections::BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub k: usize,
    pub dim: usize,
    pub condition1: bool,
    pub condition2: bool,
    pub condition3: bool,
    /// Indices of points where some condition fails. The structure is not
    /// classified there, only reported.
    pub degenerate_points: Vec<usize>,
    pub points: Vec<PointRanks>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.condition1 && self.condition2 && self.condition3
    }
}

impl PointRanks {
    pub fn passed(&self) -> bool {
        self.condition1 && self.condition2 && self.condition3
    }
}

/// Check the three rank conditions at `n_points` sampled points.
pub fn verify_kcontact(s: &KContactStructure, n_points: usize, cfg: &Config) -> Result<StructureReport, KContactError> {
    let points = s.chart().sample_domain().sample(n_points, cfg.seed, cfg.max_retries)?;
    let indexed: Vec<(usize, SamplePoint)> = points.into_iter().enumerate().collect();
    let (k, n) = (s.k(), s.dim());
    let ranks = par::try_map(cfg.parallel, &indexed, |(index, p)| s.point_ranks(*index, p, cfg.rank_threshold))?;
    let degenerate_points =
        ranks.iter().filter(|r| !(r.condition1 && r.condition2 && r.condition3)).map(|r| r.index).collect();
    Ok(StructureReport {
        k,
        dim: n,
        condition1: ranks.iter().all(|r| r.condition1),
        condition2: ranks.iter().all(|r| r.condition2),
        condition3: ranks.iter().all(|r| r.condition3),
        degenerate_points,
        points: ranks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReebFrame {
    pub fields: Vec<VectorField>,
}

/// Solve `ι_{R_α}η^β = δ_α^β`, `ι_{R_α}dη^β = 0` by symbolic elimination.
///
/// All `k` right-hand sides share one coefficient matrix, so a single
/// elimination produces the whole frame.
pub fn compute_reeb(s: &KContactStructure, tester: &ZeroTester) -> Result<ReebFrame, KContactError> {
    let (k, n) = (s.k(), s.dim());
    let mut a = Vec::with_capacity(k + k * n);
    let mut b = Vec::with_capacity(k + k * n);
    for (beta, f) in s.eta().iter().enumerate() {
        a.push((0..n).map(|j| f.coeff(&[j])).collect());
        b.push((0..k).map(|alpha| if alpha == beta { ScalarExpr::one() } else { ScalarExpr::zero() }).collect());
    }
    for f in s.d_eta() {
        // component l of ι_R dη is Σ_i R^i dη(∂_i, ∂_l)
        for l in 0..n {
            let row: Vec<ScalarExpr> = (0..n).map(|i| f.component(&[i, l])).collect();
            if row.iter().all(ScalarExpr::is_zero_const) {
                continue;
            }
            a.push(row);
            b.push(vec![ScalarExpr::zero(); k]);
        }
    }
    let x = linalg::symbolic_solve(a, b, tester).map_err(|e| match e {
        EliminationError::Singular(m) => KContactError::SingularSystem(m),
        EliminationError::Inconclusive { column } => {
            KContactError::ZeroTestInconclusive(s.chart().coords()[column].clone())
        }
        EliminationError::ZeroTest(z) => KContactError::ZeroTest(z),
    })?;
    let fields = (0..k)
        .map(|alpha| VectorField::new(s.chart(), x.iter().map(|row| row[alpha].clone()).collect()))
        .collect::<Result<_, _>>()?;
    Ok(ReebFrame { fields })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReebCheck {
    pub duality: ZeroVerdict,
    pub annihilates_d_eta: ZeroVerdict,
    pub lie_derivative_eta: ZeroVerdict,
    pub max_residual: f64,
}

fn worst(a: ZeroVerdict, b: ZeroVerdict) -> ZeroVerdict {
    use ZeroVerdict::*;
    match (a, b) {
        (NonZero, _) | (_, NonZero) => NonZero,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => Zero,
    }
}

fn verdict_of_form(f: &DifferentialForm, tester: &ZeroTester) -> Result<(ZeroVerdict, f64), ZeroTestError> {
    let mut v = ZeroVerdict::Zero;
    let mut r: f64 = 0.0;
    for c in f.coeffs().values() {
        let (cv, cr) = tester.verdict_with_residual(c)?;
        v = worst(v, cv);
        r = r.max(cr);
    }
    Ok((v, r))
}

/// Check a frame against the defining equations and `L_{R_α}η^β = 0`.
pub fn check_reeb(s: &KContactStructure, frame: &ReebFrame, tester: &ZeroTester) -> Result<ReebCheck, KContactError> {
    let mut out = ReebCheck {
        duality: ZeroVerdict::Zero,
        annihilates_d_eta: ZeroVerdict::Zero,
        lie_derivative_eta: ZeroVerdict::Zero,
        max_residual: 0.0,
    };
    if frame.fields.len() != s.k() {
        return Err(FormsError::KMismatch { expected: s.k(), found: frame.fields.len() }.into());
    }
    for (alpha, r) in frame.fields.iter().enumerate() {
        for (beta, (eta, deta)) in s.eta().iter().zip(s.d_eta()).enumerate() {
            let delta = if alpha == beta { ScalarExpr::one() } else { ScalarExpr::zero() };
            let (v, res) = tester.verdict_with_residual(&(eta.interior_product(r)?.coeff(&[]) - delta))?;
            out.duality = worst(out.duality, v);
            out.max_residual = out.max_residual.max(res);
            let (v, res) = verdict_of_form(&deta.interior_product(r)?, tester)?;
            out.annihilates_d_eta = worst(out.annihilates_d_eta, v);
            out.max_residual = out.max_residual.max(res);
            let (v, res) = verdict_of_form(&eta.lie_derivative(r)?, tester)?;
            out.lie_derivative_eta = worst(out.lie_derivative_eta, v);
            out.max_residual = out.max_residual.max(res);
        }
    }
    Ok(out)
}

/// Every pairwise bracket of the frame vanishes.
pub fn check_reeb_commutation(frame: &ReebFrame, tester: &ZeroTester) -> Result<bool, KContactError> {
    for a in 0..frame.fields.len() {
        for b in a + 1..frame.fields.len() {
            if !frame.fields[a].lie_bracket(&frame.fields[b])?.is_zero(tester)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Coordinate names of the canonical chart: `s_α`, `q_i`, `p_α_i` (1-based).
pub fn canonical_coords(n: usize, k: usize) -> Vec<String> {
    let mut c: Vec<String> = (1..=k).map(|a| format!("s_{a}")).collect();
    c.extend((1..=n).map(|i| format!("q_{i}")));
    for a in 1..=k {
        c.extend((1..=n).map(|i| format!("p_{a}_{i}")));
    }
    c
}

/// `η^α = ds^α − Σ_i p^α_i dq^i` on `R^{k + n + nk}`.
pub fn canonical_structure(n: usize, k: usize) -> KContactStructure {
    assert!(n >= 1 && k >= 1, "canonical structure needs n, k >= 1");
    let chart = Chart::new(&canonical_coords(n, k)).expect("valid names").shared();
    let forms = (0..k)
        .map(|a| {
            let mut terms = vec![(vec![a], ScalarExpr::one())];
            for i in 0..n {
                let p = chart.coord(k + n + a * n + i);
                terms.push((vec![k + i], -p));
            }
            DifferentialForm::from_terms(&chart, 1, terms).expect("valid indices")
        })
        .collect();
    KContactStructure::from_forms(&chart, forms).expect("shared chart")
}

/// `⟨∂/∂p^α_i⟩` for the canonical structure.
pub fn canonical_polarization(n: usize, k: usize, chart: &Arc<Chart>) -> Vec<VectorField> {
    (0..n * k).map(|j| VectorField::coordinate(chart, k + n + j)).collect()
}

/// Thermodynamic phase space `(E, P, V, T, S, mu, N)` with
/// `η = dE − T dS − μ dN + P dV`; `V > 0` and `T > 0` on the sampling domain.
pub fn thermo_structure() -> KContactStructure {
    let chart = Chart::new(&["E", "P", "V", "T", "S", "mu", "N"])
        .expect("valid names")
        .with_range("V", 0.5, 2.0)
        .with_range("T", 0.5, 2.0)
        .with_range("N", 0.5, 2.0)
        .with_range("S", 0.5, 2.0)
        .shared();
    let v = |name: &str| ScalarExpr::var(name);
    let idx = |name: &str| vec![chart.index_of(name).expect("thermo coordinate")];
    let eta = DifferentialForm::from_terms(
        &chart,
        1,
        [(idx("E"), ScalarExpr::one()), (idx("S"), -v("T")), (idx("N"), -v("mu")), (idx("V"), v("P"))],
    )
    .expect("valid indices");
    KContactStructure::from_forms(&chart, vec![eta]).expect("shared chart")
}

/// For `k = 1`: the top-degree coefficient of `η ∧ (dη)^n`.
pub fn contact_volume(s: &KContactStructure) -> Result<ScalarExpr, KContactError> {
    if s.k() != 1 || s.dim() % 2 == 0 {
        return Err(FormsError::KMismatch { expected: 1, found: s.k() }.into());
    }
    let n = (s.dim() - 1) / 2;
    let mut vol = s.eta()[0].clone();
    for _ in 0..n {
        vol = vol.wedge(&s.d_eta()[0])?;
    }
    let top: Vec<usize> = (0..s.dim()).collect();
    Ok(vol.coeff(&top))
}

/// `|e| > atol` at every sample point.
pub fn is_nonvanishing(e: &ScalarExpr, tester: &ZeroTester) -> Result<bool, KContactError> {
    for p in &tester.points {
        if e.eval_f64(&p.lookup())?.abs() <= tester.atol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub fields: usize,
    /// `nk` with `n = (dim − k)/(k + 1)`; `None` if the dimension does not fit.
    pub expected_rank: Option<usize>,
    pub annihilates_eta: bool,
    pub min_rank: usize,
    pub max_rank: usize,
    pub rank_ok: bool,
    pub involutive: bool,
    pub isotropic: bool,
}

impl PolarizationReport {
    pub fn passed(&self) -> bool {
        self.annihilates_eta && self.rank_ok && self.involutive && self.isotropic
    }
}

/// Check that `fields` span an integrable, `dη`-isotropic subbundle of
/// `ker η` of rank `nk`.
pub fn check_polarization(
    s: &KContactStructure,
    fields: &[VectorField],
    tester: &ZeroTester,
    rank_threshold: f64,
) -> Result<PolarizationReport, KContactError> {
    for f in fields {
        if !crate::forms::same_chart(f.chart(), s.chart()) {
            return Err(FormsError::ChartMismatch("polarization field".into()).into());
        }
    }
    let (k, dim) = (s.k(), s.dim());
    let expected_rank = ((dim - k) % (k + 1) == 0).then(|| (dim - k) / (k + 1) * k);

    let mut annihilates_eta = true;
    'outer: for f in fields {
        for eta in s.eta() {
            if !tester.is_zero(&eta.interior_product(f)?.coeff(&[]))? {
                annihilates_eta = false;
                break 'outer;
            }
        }
    }

    let mut isotropic = true;
    let mut brackets = Vec::new();
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            if isotropic {
                for deta in s.d_eta() {
                    let pairing = deta.interior_product(&fields[i])?.interior_product(&fields[j])?;
                    if !tester.is_zero(&pairing.coeff(&[]))? {
                        isotropic = false;
                        break;
                    }
                }
            }
            let b = fields[i].lie_bracket(&fields[j])?;
            if !b.components().iter().all(ScalarExpr::is_zero_const) {
                brackets.push(b);
            }
        }
    }

    let per_point = par::try_map(tester.parallel, &tester.points, |p| -> Result<(usize, bool), FormsError> {
        let mut m = DMatrix::zeros(fields.len(), dim);
        for (r, f) in fields.iter().enumerate() {
            m.set_row(r, &f.values_at(p)?.transpose());
        }
        let r = linalg::rank(&m, rank_threshold);
        if brackets.is_empty() {
            return Ok((r, true));
        }
        let mut aug = DMatrix::zeros(fields.len() + brackets.len(), dim);
        aug.view_mut((0, 0), (fields.len(), dim)).copy_from(&m);
        for (r, b) in brackets.iter().enumerate() {
            aug.set_row(fields.len() + r, &b.values_at(p)?.transpose());
        }
        Ok((r, linalg::rank(&aug, rank_threshold) == r))
    })?;
    let min_rank = per_point.iter().map(|x| x.0).min().unwrap_or(0);
    let max_rank = per_point.iter().map(|x| x.0).max().unwrap_or(0);
    let rank_ok = expected_rank.is_some_and(|e| min_rank == e && max_rank == e);
    let involutive = per_point.iter().all(|x| x.1);
    Ok(PolarizationReport {
        fields: fields.len(),
        expected_rank,
        annihilates_eta,
        min_rank,
        max_rank,
        rank_ok,
        involutive,
        isotropic,
    })
}

#[cfg(test)]
mod tests;
