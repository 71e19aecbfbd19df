//! Residual checks of the curvature identities, on exact jets and on grid
//! data, plus detection of static structures.
//!
//! On exact jets the residuals are round-off. Finite-difference jets obey
//! `J² = −1`, `g(J·,J·) = g` and `dω = 0` only up to truncation error, so on
//! grid data sampled from a smooth structure the residuals decay at the
//! stencil order instead.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{self, FlowKind, GridState, Tendency};
use crate::geometry;
use crate::grid::{self, JetGather, Reduce};
use crate::hermitian::{self, AlmostHermitianJet, Lifted};
use crate::homogeneous::{self, ExpCoordinates, Preset};
use crate::mat::{self, Mat};
use crate::monitor::StaticResiduals;
use crate::samples::{AnalyticStructure, ExactPerturbation};
use crate::scalar::Scalar;
use crate::geometry::MetricJet2;
use crate::tensor;
use crate::tol::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Identity {
    /// `ρ* − 2ρ = D*Dω − Δ_dω`
    Weitzenbock,
    /// `P = ρ* − ½N¹ + ½W`
    PDecomposition,
    /// `P^{(2,0)+(0,2)} = D*Dω − N² + (−Δ_dω − ½N¹ + ½W)^{(2,0)+(0,2)}`
    P11Split,
    /// induced `∂ω` of the symplectic curvature flow equals `−P`; needs `dω = 0`
    FlowConsistency,
    /// `⟨ω, N²⟩ = tr_g B² = |DJ|²`
    TraceIdentity,
    /// `D_{JX}J = −J D_XJ`; needs `dω = 0`
    DjxRelation,
    /// `JK + KJ = 0` and `(∂ω)^{(2,0)+(0,2)} = ½[ω(K·,J·) + ω(J·,K·)]` for the
    /// symplectic curvature flow variation; the second needs `dω = 0`
    VariationCompat,
}

impl Identity {
    pub const ALL: [Identity; 7] = [
        Identity::Weitzenbock,
        Identity::PDecomposition,
        Identity::P11Split,
        Identity::FlowConsistency,
        Identity::TraceIdentity,
        Identity::DjxRelation,
        Identity::VariationCompat,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::Weitzenbock => "weitzenbock",
            Identity::PDecomposition => "p_decomposition",
            Identity::P11Split => "p11_split",
            Identity::FlowConsistency => "flow_consistency",
            Identity::TraceIdentity => "trace_identity",
            Identity::DjxRelation => "djx_relation",
            Identity::VariationCompat => "variation_compat",
        }
    }

    /// Whether the identity assumes a closed `ω`.
    pub fn needs_closed(&self) -> bool {
        matches!(self, Identity::FlowConsistency | Identity::DjxRelation | Identity::VariationCompat)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub identity: String,
    pub input: String,
    pub sup: f64,
    pub l2: f64,
    pub tolerance: f64,
    /// Observed convergence order, for refinement rows.
    pub order: Option<f64>,
    pub pass: bool,
}

pub const REPORT_COLUMNS: [&str; 7] = ["identity", "input", "sup", "l2", "tolerance", "order", "pass"];

impl IdentityReport {
    /// Pass iff `sup ≤ tolerance`.
    pub fn new(identity: &str, input: &str, sup: f64, l2: f64, tolerance: f64) -> Self {
        Self {
            identity: identity.into(),
            input: input.into(),
            sup,
            l2,
            tolerance,
            order: None,
            pass: sup.is_finite() && sup <= tolerance,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{:.3e},{},{}",
            self.identity,
            self.input,
            self.sup,
            self.l2,
            self.tolerance,
            self.order.map(|o| format!("{o:.4}")).unwrap_or_default(),
            self.pass
        )
    }
}

pub fn write_reports(w: &mut impl std::io::Write, reports: &[IdentityReport]) -> Result<()> {
    writeln!(w, "{}", REPORT_COLUMNS.join(","))?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Residuals of both linearized compatibility conditions for a variation
/// `(∂g, K)` at `(g, J)`: `(|JK + KJ|, |(∂ω)^{2,0+0,2} − ψ|)`.
pub fn variation_residuals<T: Scalar, const N: usize>(
    g: &Mat<T, N>,
    j: &Mat<T, N>,
    dg: &Mat<T, N>,
    k: &Mat<T, N>,
) -> (f64, f64) {
    let anti = hermitian::anticommutator_defect(j, k).as_f64();
    let omega = hermitian::omega_of(g, j);
    let dw = hermitian::induced_domega(dg, k, g, j);
    let jt = mat::transpose(j);
    // anti-invariant part ½(∂ω − Jᵀ∂ωJ) against ψ = ½(KᵀωJ + JᵀωK)
    let lhs = mat::scale(T::of(0.5), &mat::sub(&dw, &mat::mul(&jt, &mat::mul(&dw, j))));
    let psi = mat::scale(
        T::of(0.5),
        &mat::add(&mat::mul(&mat::transpose(k), &mat::mul(&omega, j)), &mat::mul(&jt, &mat::mul(&omega, k))),
    );
    (anti, mat::max_abs(&mat::sub(&lhs, &psi)).as_f64())
}

/// All identity residuals (sup over components) at one point, in the order
/// of [`Identity::ALL`].
pub fn point_residuals<T: Scalar, const N: usize>(l: &Lifted<T, N>, tol: &Tolerances) -> Result<[f64; 7]> {
    let half = T::of(0.5);
    let curv = l.curvature();
    let (rho, rho_star) = hermitian::rho_and_rho_star(&curv, &l.j);
    let q = l.quadratic();
    let (_, p, _) = l.hermitian_curvature(0.0);
    let rough = l.rough_laplacian_omega();
    let hodge = l.hodge_laplacian_omega();
    let r = |a: &Mat<T, N>| mat::max_abs(a).as_f64();

    let weitz = mat::sub(&mat::sub(&rho_star, &mat::scale(T::of(2.0), &rho)), &mat::sub(&rough, &hodge));
    // ρ* − ½N¹ + ½W
    let mut decomp = rho_star;
    mat::axpy(&mut decomp, -half, &q.n1);
    mat::axpy(&mut decomp, half, &q.w);
    let pdec = mat::sub(&p, &decomp);

    let mut lower = mat::scale(-T::one(), &hodge);
    mat::axpy(&mut lower, -half, &q.n1);
    mat::axpy(&mut lower, half, &q.w);
    let (_, p20) = tensor::j_split(&p, &l.j, tol)?;
    let (_, lower20) = tensor::j_split(&lower, &l.j, tol)?;
    let p11 = mat::sub(&p20, &mat::add(&mat::sub(&rough, &q.n2), &lower20));

    let (dg, dj) = hermitian::scf_rhs(l);
    let consistency = mat::add(&hermitian::induced_domega(&dg, &dj, &l.g.g, &l.j), &p);

    let mut dj2 = T::zero();
    for a in 0..N {
        for b in 0..N {
            dj2 += l.g.ginv[a][b] * geometry::endo_inner(&l.nabla_j[a], &l.nabla_j[b], &l.g);
        }
    }
    let om_n2 = mat::dot(&l.omega_up, &q.n2);
    let tr_b2 = mat::dot(&l.g.ginv, &q.b2);
    let trace = (om_n2 - dj2).abs().max((tr_b2 - dj2).abs()).as_f64();

    let mut djx = 0.0f64;
    for x in 0..N {
        let mut a = mat::mul(&l.j, &l.nabla_j[x]);
        for pp in 0..N {
            mat::axpy(&mut a, l.j[pp][x], &l.nabla_j[pp]);
        }
        djx = djx.max(r(&a));
    }
    let (va, vb) = variation_residuals(&l.g.g, &l.j, &dg, &dj);
    Ok([r(&weitz), r(&pdec), r(&p11), r(&consistency), trace, djx, va.max(vb)])
}

/// Identity-check input: an exact jet or a grid state.
pub enum Input<'a, T, const N: usize> {
    Jet { name: String, jet: AlmostHermitianJet<T, N> },
    Grid { name: String, state: &'a GridState<T> },
}

impl<T: Scalar, const N: usize> Input<'_, T, N> {
    pub fn name(&self) -> &str {
        match self {
            Input::Jet { name, .. } | Input::Grid { name, .. } => name,
        }
    }
}

/// Per-point residual rows over a grid state, from finite-difference jets.
fn grid_map<T: Scalar, const N: usize, R: Send>(
    s: &GridState<T>,
    f: impl Fn(&AlmostHermitianJet<T, N>) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let spec = s.spec();
    let gather = JetGather::new(spec);
    let gm = s.g.mats::<N>();
    let jm = s.j.mats::<N>();
    let tol = Tolerances { almost_complex: flow::J_DRIFT_GUARD, ..Tolerances::for_scalar::<T>() };
    (0..spec.npts())
        .into_par_iter()
        .map(|p| {
            let (g, dg, ddg) = gather.mats_jet2::<T, N>(&gm, p);
            let (j, dj, ddj) = gather.mats_jet2::<T, N>(&jm, p);
            let jet = AlmostHermitianJet::with_tol(MetricJet2::new(mat::sym(&g), dg, ddg)?, j, dj, ddj, &tol)?;
            f(&jet)
        })
        .collect()
}

/// Reports for every identity on one input, with a common tolerance.
pub fn check_all<T: Scalar, const N: usize>(input: &Input<T, N>, tolerance: f64) -> Result<Vec<IdentityReport>> {
    let tol = Tolerances::for_scalar::<T>();
    let (sup, l2) = match input {
        Input::Jet { jet, .. } => {
            let r = point_residuals(&jet.lifted(), &tol)?;
            (r, r)
        }
        Input::Grid { state, .. } => {
            let rows = grid_map::<T, N, [f64; 7]>(state, |jet| point_residuals(&jet.lifted(), &tol))?;
            let spec = state.spec();
            let mut sup = [0.0; 7];
            let mut l2 = [0.0; 7];
            for k in 0..7 {
                let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                sup[k] = grid::reduce(&spec, &col, Reduce::Sup);
                l2[k] = grid::reduce(&spec, &col, Reduce::L2);
            }
            (sup, l2)
        }
    };
    Ok(Identity::ALL.iter().enumerate().map(|(k, id)| IdentityReport::new(id.name(), input.name(), sup[k], l2[k], tolerance)).collect())
}

pub fn check<T: Scalar, const N: usize>(identity: Identity, input: &Input<T, N>, tolerance: f64) -> Result<IdentityReport> {
    let all = check_all(input, tolerance)?;
    Ok(all.into_iter().find(|r| r.identity == identity.name()).expect("every identity is reported"))
}

pub fn check_weitzenbock<T: Scalar, const N: usize>(input: &Input<T, N>) -> Result<IdentityReport> {
    check(Identity::Weitzenbock, input, crate::tol::DEFAULT.identity_exact)
}

pub fn check_p_decomposition<T: Scalar, const N: usize>(input: &Input<T, N>) -> Result<IdentityReport> {
    check(Identity::PDecomposition, input, crate::tol::DEFAULT.identity_exact)
}

pub fn check_p11_split<T: Scalar, const N: usize>(input: &Input<T, N>) -> Result<IdentityReport> {
    check(Identity::P11Split, input, crate::tol::DEFAULT.identity_exact)
}

pub fn check_flow_consistency<T: Scalar, const N: usize>(input: &Input<T, N>) -> Result<IdentityReport> {
    check(Identity::FlowConsistency, input, crate::tol::DEFAULT.identity_exact)
}

pub fn check_trace_identity<T: Scalar, const N: usize>(input: &Input<T, N>) -> Result<IdentityReport> {
    check(Identity::TraceIdentity, input, crate::tol::DEFAULT.identity_exact)
}

pub fn check_djx<T: Scalar, const N: usize>(input: &Input<T, N>) -> Result<IdentityReport> {
    check(Identity::DjxRelation, input, crate::tol::DEFAULT.identity_exact)
}

/// Both linearized compatibility conditions for a grid tendency.
pub fn check_variation_compat<T: Scalar, const N: usize>(
    tendency: &Tendency<T>,
    state: &GridState<T>,
    tolerance: f64,
) -> IdentityReport {
    let spec = state.spec();
    let col: Vec<f64> = (0..spec.npts())
        .into_par_iter()
        .map(|p| {
            let (a, b) = variation_residuals(
                &state.g.mat_at::<N>(p),
                &state.j.mat_at::<N>(p),
                &tendency.dg.mat_at::<N>(p),
                &tendency.dj.mat_at::<N>(p),
            );
            a.max(b)
        })
        .collect();
    IdentityReport::new(
        Identity::VariationCompat.name(),
        &format!("grid tendency m={}", spec.m),
        grid::reduce(&spec, &col, Reduce::Sup),
        grid::reduce(&spec, &col, Reduce::L2),
        tolerance,
    )
}

/// `λ_best`, `‖P − λω‖`, `‖Ric^{−J}‖` and (dimension 4) the W⁺ eigenvector
/// defect of `ω`. Grid inputs are integrated against the Riemannian volume
/// and reported as root-mean-square norms.
pub fn static_residuals<T: Scalar, const N: usize>(input: &Input<T, N>) -> Result<StaticResiduals<f64>> {
    match input {
        Input::Jet { jet, .. } => {
            let l = jet.lifted();
            let c = l.curvature();
            let (_, p, _) = l.hermitian_curvature(0.0);
            let wplus = if N == 4 { Some(wplus_defect(jet)?) } else { None };
            let s = StaticResiduals::from_parts(&p, &l.omega, &c.ric, &l.j, &l.g, wplus.map(T::of));
            Ok(StaticResiduals {
                lambda: s.lambda.as_f64(),
                p_minus_lambda_omega: s.p_minus_lambda_omega.as_f64(),
                ric_anti: s.ric_anti.as_f64(),
                wplus_defect: s.wplus_defect.map(|x| x.as_f64()),
            })
        }
        Input::Grid { state, .. } => {
            let m = flow::monitor::<T, N>(state, FlowKind::Scf, 0, 0.0)?;
            Ok(StaticResiduals {
                lambda: m.lambda,
                p_minus_lambda_omega: m.static_p,
                ric_anti: m.static_ric,
                wplus_defect: (N == 4).then_some(m.static_wplus),
            })
        }
    }
}

/// `|W⁺(ω) − μω|` at a point; dimension 4 only.
pub fn wplus_defect<T: Scalar, const N: usize>(jet: &AlmostHermitianJet<T, N>) -> Result<f64> {
    if N != 4 {
        return Err(Error::WrongDimension(N));
    }
    let l = jet.lifted();
    let c = l.curvature();
    Ok(geometry::weyl_plus(&c, &l.g, &l.omega, geometry::Orientation::Omega)?.defect.as_f64())
}

/// Exact jet of a preset in exponential coordinates at `x`.
pub fn preset_jet<const N: usize>(
    algebra: homogeneous::LieAlgebraData<f64, N>,
    structure: homogeneous::InvariantStructure<f64, N>,
    x: &[f64; N],
) -> Result<AlmostHermitianJet<f64, N>> {
    ExpCoordinates::new(algebra, structure)?.jet(x)
}

/// Every identity on one preset at [`SAMPLE_POINT`].
pub fn preset_reports(preset: Preset, tolerance: f64) -> Result<Vec<IdentityReport>> {
    let name = preset.name().to_string();
    let x4: [f64; 4] = std::array::from_fn(|i| SAMPLE_POINT[i]);
    match preset {
        Preset::Abelian4 => {
            let (l, s) = homogeneous::abelian4_preset::<f64>();
            check_all(&Input::Jet { name, jet: preset_jet(l, s, &x4)? }, tolerance)
        }
        Preset::KodairaThurston => {
            let (l, s) = homogeneous::kodaira_thurston_preset::<f64>();
            check_all(&Input::Jet { name, jet: preset_jet(l, s, &x4)? }, tolerance)
        }
        Preset::Iwasawa => {
            let (l, s) = homogeneous::iwasawa_preset::<f64>();
            check_all(&Input::Jet { name, jet: preset_jet(l, s, &SAMPLE_POINT)? }, tolerance)
        }
    }
}

/// A point away from the origin of exponential coordinates, so that the
/// checks also see the coordinate dependence of the fields.
pub const SAMPLE_POINT: [f64; 6] = [0.3, -0.2, 0.5, 0.1, -0.4, 0.25];

/// Every identity on the three presets at [`SAMPLE_POINT`], tolerance 1e-9.
pub fn verify_presets() -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for preset in Preset::ALL {
        out.extend(preset_reports(preset, crate::tol::DEFAULT.identity_exact)?);
    }
    Ok(out)
}

/// Grid rows: smooth almost Kähler data sampled at `m` and `2m`, reported
/// at the finer grid with the observed order. A row passes when the order
/// reaches `stencil order − 0.5`, or when both residuals are at round-off
/// (identities that hold for every 2-jet).
pub fn verify_grid(m: usize, order: usize, amplitude: f64, seed: u64) -> Result<Vec<IdentityReport>> {
    let src = ExactPerturbation::<4>::random(seed, 2, amplitude);
    let run = |m: usize| -> Result<Vec<IdentityReport>> {
        let spec = grid::GridSpec::new(4, m, order)?;
        let s = GridState::<f64>::from_analytic(spec, &src);
        check_all::<f64, 4>(&Input::Grid { name: format!("torus4 m={m}"), state: &s }, 0.0)
    };
    let coarse = run(m)?;
    let fine = run(2 * m)?;
    let floor = 1e-11;
    Ok(coarse
        .into_iter()
        .zip(fine)
        .map(|(c, mut f)| {
            let o = (c.sup / f.sup).log2();
            f.input = format!("torus4 m={}->{}", m, 2 * m);
            f.order = Some(o);
            f.tolerance = order as f64 - 0.5;
            f.pass = (c.sup <= floor && f.sup <= floor) || (f.sup.is_finite() && o >= f.tolerance);
            f
        })
        .collect())
}

/// Startup self-check on the Kodaira-Thurston preset: every identity must
/// hold to 1e-9, otherwise the sign conventions are inconsistent.
pub fn conventions_check() -> Result<Vec<IdentityReport>> {
    let reports = preset_reports(Preset::KodairaThurston, crate::tol::DEFAULT.identity_exact)?;
    if let Some(bad) = reports.iter().find(|r| !r.pass) {
        return Err(Error::ConventionCheck(format!("{} residual {:e}", bad.identity, bad.sup)));
    }
    Ok(reports)
}

/// λ of `ω ↦ cω, g ↦ cg`: the pointwise `λ_best` scales like `1/c`.
pub fn lambda_scaling<const N: usize>(jet: &AlmostHermitianJet<f64, N>, c: f64) -> Result<(f64, f64)> {
    let base = static_residuals(&Input::Jet { name: String::new(), jet: jet.clone() })?.lambda;
    let m = &jet.metric;
    let scaled = AlmostHermitianJet::new(
        MetricJet2::new(mat::scale(c, &m.g.g), m.dg.map(|d| mat::scale(c, &d)), m.ddg.map(|r| r.map(|d| mat::scale(c, &d))))?,
        jet.j,
        jet.dj,
        jet.ddj,
    )?;
    let s = static_residuals(&Input::Jet { name: String::new(), jet: scaled })?.lambda;
    Ok((base, s))
}

#[cfg(test)]
mod tests;
