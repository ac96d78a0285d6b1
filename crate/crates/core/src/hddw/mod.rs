//! k-contact Hamiltonian systems and the Hamilton–de Donder–Weyl equations
//!
//! `ι_X dη = dH − (R_α H) η^α`, `ι_X η = −H`, with `ι_X ω = Σ_α ι_{X_α} ω^α`.
//! The geometric equations are linear in the `k·dim` components of `X`, so
//! they are solved pointwise: least-norm particular solution plus an SVD
//! nullspace (the pseudo-gauge directions).

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::forms::{prolongation, same_chart, Chart, DifferentialForm, FormsError, SmoothMap};
use crate::kcontact::{compute_reeb, KContactError, KContactStructure, ReebFrame};
use crate::legendrian::{verify_isotropic, LegendrianError};
use crate::symexpr::{EvalError, SamplePoint, ScalarExpr, ZeroTestError, ZeroTester, ZeroVerdict};
use crate::{linalg, par, Config};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HddwError {
    #[error("k-contact conditions fail at {point:?}")]
    StructureDegenerateAtPoint { point: BTreeMap<String, f64> },
    #[error("HdDW system is inconsistent (residual {residual:.3e}); the input is not k-contact")]
    InconsistentSystem { residual: f64 },
    #[error("expected {expected} shift coefficients, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("contact flow needs k = 1, got k = {0}")]
    NotContact(usize),
    #[error("invalid integration parameters: {0}")]
    InvalidStep(String),
    #[error("evaluation failed at t = {t}: {message}")]
    Domain { t: f64, message: String },
    #[error("the submanifold is not isotropic")]
    NotIsotropic,
    #[error("Hamiltonian uses `{0}`, which is not a chart coordinate")]
    UnknownVariable(String),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    KContact(#[from] KContactError),
    #[error(transparent)]
    Legendrian(#[from] LegendrianError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

impl From<EvalError> for HddwError {
    fn from(e: EvalError) -> Self {
        HddwError::ZeroTest(e.into())
    }
}

/// Symbolic entries of the `(dim + 1) × (k·dim)` system, evaluated per point.
#[derive(Debug, Clone)]
struct Assembly {
    /// `(row, column, entry)`; column `α·dim + j` is `X_α^j`.
    entries: Vec<(usize, usize, ScalarExpr)>,
    rhs: Vec<ScalarExpr>,
}

#[derive(Debug, Clone)]
pub struct KContactHamiltonianSystem {
    structure: KContactStructure,
    reeb: ReebFrame,
    h: ScalarExpr,
    assembly: Assembly,
}

/// Right-hand sides of the geometric equations.
#[derive(Debug, Clone)]
pub struct HddwRhs {
    /// `dH − Σ_α (R_α H) η^α`.
    pub one_form: DifferentialForm,
    /// `−H`.
    pub scalar: ScalarExpr,
}

impl KContactHamiltonianSystem {
    /// Computes the Reeb frame with `tester`.
    pub fn new(structure: KContactStructure, h: ScalarExpr, tester: &ZeroTester) -> Result<Self, HddwError> {
        let reeb = compute_reeb(&structure, tester)?;
        Self::with_reeb(structure, reeb, h)
    }

    /// Uses a precomputed Reeb frame as is.
    pub fn with_reeb(structure: KContactStructure, reeb: ReebFrame, h: ScalarExpr) -> Result<Self, HddwError> {
        if let Some(v) = h.free_variables().into_iter().find(|v| structure.chart().index_of(v).is_none()) {
            return Err(HddwError::UnknownVariable(v));
        }
        let assembly = assemble(&structure, &reeb, &h)?;
        Ok(KContactHamiltonianSystem { structure, reeb, h, assembly })
    }

    pub fn structure(&self) -> &KContactStructure {
        &self.structure
    }

    pub fn reeb(&self) -> &ReebFrame {
        &self.reeb
    }

    pub fn hamiltonian(&self) -> &ScalarExpr {
        &self.h
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.structure.chart()
    }

    pub fn k(&self) -> usize {
        self.structure.k()
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    /// `(k − 1)·m + k² − 1` with `m = dim − k`.
    pub fn expected_nullity(&self) -> usize {
        let (k, m) = (self.k(), self.dim() - self.k());
        (k - 1) * m + k * k - 1
    }

    fn system_at(&self, p: &SamplePoint) -> Result<(DMatrix<f64>, DVector<f64>), EvalError> {
        let (k, n) = (self.k(), self.dim());
        let look = p.lookup();
        let mut a = DMatrix::zeros(n + 1, k * n);
        for (r, c, e) in &self.assembly.entries {
            a[(*r, *c)] = e.eval_f64(&look)?;
        }
        let b = DVector::from_iterator(
            n + 1,
            self.assembly.rhs.iter().map(|e| e.eval_f64(&look)).collect::<Result<Vec<_>, _>>()?,
        );
        Ok((a, b))
    }
}

pub fn hddw_rhs(sys: &KContactHamiltonianSystem) -> Result<HddwRhs, HddwError> {
    rhs_of(&sys.structure, &sys.reeb, &sys.h)
}

fn rhs_of(s: &KContactStructure, reeb: &ReebFrame, h: &ScalarExpr) -> Result<HddwRhs, HddwError> {
    let chart = s.chart();
    let mut one_form = DifferentialForm::function(chart, h.clone()).exterior_derivative();
    for (r, eta) in reeb.fields.iter().zip(s.eta()) {
        let rh = r.apply(h);
        if !rh.is_zero_const() {
            one_form = one_form.sub(&eta.scale(&rh))?;
        }
    }
    if one_form.is_structurally_zero() {
        one_form = DifferentialForm::zero(chart, 1);
    }
    Ok(HddwRhs { one_form, scalar: -h.clone() })
}

fn assemble(s: &KContactStructure, reeb: &ReebFrame, h: &ScalarExpr) -> Result<Assembly, HddwError> {
    let n = s.dim();
    let mut entries = Vec::new();
    for (alpha, deta) in s.d_eta().iter().enumerate() {
        // equation i: Σ_j X_α^j dη^α(∂_j, ∂_i)
        for (idx, c) in deta.coeffs() {
            let (j, i) = (idx[0], idx[1]);
            entries.push((i, alpha * n + j, c.clone()));
            entries.push((j, alpha * n + i, -c.clone()));
        }
    }
    for (alpha, eta) in s.eta().iter().enumerate() {
        for (idx, c) in eta.coeffs() {
            entries.push((n, alpha * n + idx[0], c.clone()));
        }
    }
    let rhs = rhs_of(s, reeb, h)?;
    let mut b: Vec<ScalarExpr> = (0..n).map(|i| rhs.one_form.coeff(&[i])).collect();
    b.push(rhs.scalar);
    Ok(Assembly { entries, rhs: b })
}

fn serialize_rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

fn serialize_row_list<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
    let all: Vec<Vec<Vec<f64>>> = ms.iter().map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect()).collect();
    all.serialize(s)
}

/// Pointwise solution: row `α` of each matrix holds the components of `X_α`.
#[derive(Debug, Clone, Serialize)]
pub struct HdDWPointSolution {
    pub point: BTreeMap<String, f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub particular: DMatrix<f64>,
    #[serde(serialize_with = "serialize_row_list")]
    pub nullspace: Vec<DMatrix<f64>>,
    pub residual_norm: f64,
    pub tolerance: f64,
    #[serde(skip)]
    system: DMatrix<f64>,
    #[serde(skip)]
    rhs: DVector<f64>,
}

impl HdDWPointSolution {
    pub fn nullity(&self) -> usize {
        self.nullspace.len()
    }

    /// `‖A x − b‖` for a candidate `k × dim` solution.
    pub fn residual_of(&self, x: &DMatrix<f64>) -> f64 {
        (&self.system * flatten(x) - &self.rhs).norm()
    }
}

fn flatten(x: &DMatrix<f64>) -> DVector<f64> {
    // row-major: X_α^j at α·dim + j
    DVector::from_iterator(x.len(), x.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()))
}

fn unflatten(v: &DVector<f64>, k: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(k, n, v.as_slice())
}

fn tolerance(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>, cfg: &Config) -> f64 {
    cfg.atol.max(cfg.rank_threshold * (1.0 + a.norm() * x.norm() + b.norm()))
}

pub fn solve_hddw_at_point(
    sys: &KContactHamiltonianSystem,
    p: &SamplePoint,
    cfg: &Config,
) -> Result<HdDWPointSolution, HddwError> {
    if !sys.structure.point_ranks(0, p, cfg.rank_threshold)?.passed() {
        return Err(HddwError::StructureDegenerateAtPoint { point: p.floats.clone() });
    }
    solve_unchecked(sys, p, cfg)
}

fn solve_unchecked(sys: &KContactHamiltonianSystem, p: &SamplePoint, cfg: &Config) -> Result<HdDWPointSolution, HddwError> {
    let (k, n) = (sys.k(), sys.dim());
    let (a, b) = sys.system_at(p)?;
    let x = linalg::min_norm_solve(&a, &b, cfg.rank_threshold);
    let residual_norm = (&a * &x - &b).norm();
    let tol = tolerance(&a, &x, &b, cfg);
    if !(residual_norm <= tol) {
        return Err(HddwError::InconsistentSystem { residual: residual_norm });
    }
    let nullspace = linalg::nullspace(&a, cfg.rank_threshold).iter().map(|v| unflatten(v, k, n)).collect();
    let point = sys.chart().coords().iter().filter_map(|c| p.floats.get(c).map(|v| (c.clone(), *v))).collect();
    Ok(HdDWPointSolution { point, particular: unflatten(&x, k, n), nullspace, residual_norm, tolerance: tol, system: a, rhs: b })
}

/// Solve at every sample point of `tester`, in parallel when enabled.
pub fn solve_at_samples(
    sys: &KContactHamiltonianSystem,
    points: &[SamplePoint],
    cfg: &Config,
) -> Result<Vec<HdDWPointSolution>, HddwError> {
    par::try_map(cfg.parallel, points, |p| solve_hddw_at_point(sys, p, cfg))
}

/// `particular + Σ_i coeffs_i · nullspace_i`, with the residual recomputed.
pub fn pseudo_gauge_shift(sol: &HdDWPointSolution, coeffs: &[f64]) -> Result<HdDWPointSolution, HddwError> {
    if coeffs.len() != sol.nullspace.len() {
        return Err(HddwError::LengthMismatch { expected: sol.nullspace.len(), found: coeffs.len() });
    }
    let mut x = sol.particular.clone();
    for (c, v) in coeffs.iter().zip(&sol.nullspace) {
        x += v * *c;
    }
    let residual_norm = sol.residual_of(&x);
    Ok(HdDWPointSolution { particular: x, residual_norm, ..sol.clone() })
}

/// Residuals of the HdDW equations along `ψ: R^k → M`, in the source
/// variables. `first[i]` is the `dx^i` component of
/// `ι_{ψ'} dη − (dH − (R_α H) η^α)` on the image.
#[derive(Debug, Clone)]
pub struct SectionResidual {
    pub first: Vec<ScalarExpr>,
    pub second: ScalarExpr,
    pub first_verdicts: Vec<ZeroVerdict>,
    pub second_verdict: ZeroVerdict,
    pub max_first: f64,
    pub max_second: f64,
}

impl SectionResidual {
    pub fn vanishes(&self) -> bool {
        self.second_verdict == ZeroVerdict::Zero && self.first_verdicts.iter().all(|v| *v == ZeroVerdict::Zero)
    }

    pub fn max_residual(&self) -> f64 {
        self.max_first.max(self.max_second)
    }

    /// Chart coordinates whose `d`-component of the first equation is non-zero.
    pub fn nonzero_components<'a>(&self, chart: &'a Chart) -> Vec<&'a str> {
        self.first_verdicts
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ZeroVerdict::Zero)
            .map(|(i, _)| chart.coords()[i].as_str())
            .collect()
    }
}

/// `tester` samples the section's source chart.
pub fn section_residual(
    sys: &KContactHamiltonianSystem,
    psi: &SmoothMap,
    tester: &ZeroTester,
) -> Result<SectionResidual, HddwError> {
    if !same_chart(psi.target(), sys.chart()) {
        return Err(FormsError::ChartMismatch("section target vs system chart".into()).into());
    }
    let (k, n) = (sys.k(), sys.dim());
    let pro = prolongation(psi, k)?;
    let mut first: Vec<Vec<ScalarExpr>> = vec![Vec::new(); n];
    let mut second = Vec::new();
    for (r, c, e) in &sys.assembly.entries {
        let (alpha, j) = (c / n, c % n);
        let col = &pro.columns[alpha][j];
        if col.is_zero_const() {
            continue;
        }
        let term = psi.compose(e) * col;
        if *r < n {
            first[*r].push(term);
        } else {
            second.push(term);
        }
    }
    let first: Vec<ScalarExpr> = first
        .into_iter()
        .zip(&sys.assembly.rhs)
        .map(|(mut terms, b)| {
            terms.push(-psi.compose(b));
            ScalarExpr::sum(terms)
        })
        .collect();
    second.push(-psi.compose(&sys.assembly.rhs[n]));
    let second = ScalarExpr::sum(second);
    let checked = par::try_map(tester.parallel, &first, |e| tester.verdict_with_residual(e))?;
    let (second_verdict, max_second) = tester.verdict_with_residual(&second)?;
    Ok(SectionResidual {
        first_verdicts: checked.iter().map(|(v, _)| *v).collect(),
        max_first: checked.iter().map(|(_, r)| *r).fold(0.0, f64::max),
        first,
        second,
        second_verdict,
        max_second,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub coords: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.coords.iter().position(|c| c == name)?;
        Some(self.states.iter().map(|s| s[i]).collect())
    }

    /// Header `t,<coords>`, then one row per step; 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,{}", self.coords.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in s {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Classic RK4 for the unique contact Hamiltonian field (`k = 1`).
pub fn integrate_contact_flow(
    sys: &KContactHamiltonianSystem,
    x0: &BTreeMap<String, f64>,
    t_end: f64,
    dt: f64,
    cfg: &Config,
) -> Result<Trajectory, HddwError> {
    if sys.k() != 1 {
        return Err(HddwError::NotContact(sys.k()));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(HddwError::InvalidStep(format!("need dt > 0 and t_end ≥ 0, got dt = {dt}, t_end = {t_end}")));
    }
    let coords = sys.chart().coords().to_vec();
    let mut x = DVector::from_iterator(
        coords.len(),
        coords
            .iter()
            .map(|c| x0.get(c).copied().ok_or_else(|| HddwError::InvalidStep(format!("initial point lacks `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?,
    );
    let field = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>, HddwError> {
        let floats = coords.iter().cloned().zip(x.iter().copied()).collect();
        let p = SamplePoint::from_floats(floats);
        if let Some(c) = sys.chart().constraints().iter().find(|c| !matches!(c.eval_f64(&p.lookup()), Ok(v) if v > 0.0)) {
            return Err(HddwError::Domain { t, message: format!("left the chart domain ({c} > 0 fails)") });
        }
        let sol = solve_unchecked(sys, &p, cfg).map_err(|e| match e {
            HddwError::ZeroTest(z) => HddwError::Domain { t, message: z.to_string() },
            other => other,
        })?;
        let v = sol.particular.row(0).transpose();
        if v.iter().any(|c| !c.is_finite()) {
            return Err(HddwError::Domain { t, message: "non-finite vector field".into() });
        }
        Ok(v)
    };
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut t = 0.0;
    times.push(t);
    states.push(x.iter().copied().collect());
    for step in 0..steps {
        let h = if step + 1 == steps { t_end - t } else { dt };
        let k1 = field(t, &x)?;
        let k2 = field(t + h / 2.0, &(&x + &k1 * (h / 2.0)))?;
        let k3 = field(t + h / 2.0, &(&x + &k2 * (h / 2.0)))?;
        let k4 = field(t + h, &(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t = if step + 1 == steps { t_end } else { (step + 1) as f64 * dt };
        times.push(t);
        states.push(x.iter().copied().collect());
    }
    Ok(Trajectory { coords, times, states })
}

/// `H_S = −(P + ∂f/∂V)·V` on the thermodynamic phase space.
pub fn isentropic_system(f: &ScalarExpr, cfg: &Config) -> Result<KContactHamiltonianSystem, HddwError> {
    let s = crate::kcontact::thermo_structure();
    let h = -((ScalarExpr::var("P") + f.differentiate("V")) * ScalarExpr::var("V"));
    let tester = s.zero_tester(cfg)?;
    KContactHamiltonianSystem::new(s, h, &tester)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstrainedReport {
    pub dimension: usize,
    /// Verdict for `H ∘ φ ≡ 0`.
    pub hamiltonian_restricted: ZeroVerdict,
    pub hamiltonian_residual: f64,
    /// `None` when `H|_L` is not zero and no tangent solution was sought.
    pub feasible: Option<bool>,
    /// Nullity of the tangent-restricted system at each sample point.
    pub constrained_nullity: Vec<usize>,
    /// `k·dim L − (n(k+1) − dim L)` for `dim M = k + nk + n`.
    pub expected_nullity: Option<usize>,
    pub max_residual: f64,
}

/// Necessity (`H|_L = 0`) and tangent solvability along an isotropic
/// parametrization `map` (`tester` samples its source chart).
pub fn check_constrained_solution(
    sys: &KContactHamiltonianSystem,
    map: &SmoothMap,
    tester: &ZeroTester,
    cfg: &Config,
) -> Result<ConstrainedReport, HddwError> {
    let iso = verify_isotropic(map, &sys.structure, None, tester, cfg.rank_threshold)?;
    if !iso.isotropic {
        return Err(HddwError::NotIsotropic);
    }
    let (k, n) = (sys.k(), sys.dim());
    let dim_l = map.source().dim();
    let expected_nullity = {
        let rest = n - k;
        if rest % (k + 1) == 0 {
            let nn = rest / (k + 1);
            (nn * (k + 1)).checked_sub(dim_l).and_then(|rk_f| (k * dim_l).checked_sub(rk_f))
        } else {
            None
        }
    };
    let (hv, hamiltonian_residual) = tester.verdict_with_residual(&map.compose(&sys.h))?;
    if hv != ZeroVerdict::Zero {
        return Ok(ConstrainedReport {
            dimension: dim_l,
            hamiltonian_restricted: hv,
            hamiltonian_residual,
            feasible: None,
            constrained_nullity: Vec::new(),
            expected_nullity,
            max_residual: hamiltonian_residual,
        });
    }
    let jac = map.jacobian();
    let per_point = par::try_map(tester.parallel, &tester.points, |p| -> Result<(bool, usize, f64), HddwError> {
        let image = map.image_point(p)?;
        let (a, b) = sys.system_at(&image)?;
        let look = p.lookup();
        let mut j = DMatrix::zeros(n, dim_l);
        for i in 0..n {
            for u in 0..dim_l {
                j[(i, u)] = jac[i][u].eval_f64(&look)?;
            }
        }
        // X_α = J c_α
        let mut restricted = DMatrix::zeros(n + 1, k * dim_l);
        for alpha in 0..k {
            let block = a.columns(alpha * n, n) * &j;
            restricted.columns_mut(alpha * dim_l, dim_l).copy_from(&block);
        }
        let c = linalg::min_norm_solve(&restricted, &b, cfg.rank_threshold);
        let residual = (&restricted * &c - &b).norm();
        let ok = residual <= tolerance(&restricted, &c, &b, cfg);
        let nullity = k * dim_l - linalg::rank(&restricted, cfg.rank_threshold);
        Ok((ok, nullity, residual))
    })?;
    Ok(ConstrainedReport {
        dimension: dim_l,
        hamiltonian_restricted: hv,
        hamiltonian_residual,
        feasible: Some(per_point.iter().all(|(ok, _, _)| *ok)),
        constrained_nullity: per_point.iter().map(|(_, m, _)| *m).collect(),
        expected_nullity,
        max_residual: per_point.iter().map(|(_, _, r)| *r).fold(hamiltonian_residual, f64::max),
    })
}
