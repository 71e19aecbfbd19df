//! Explicit time integration of the flows on periodic grids.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, MetricJet2};
use crate::grid::{self, GridField, GridSpec, JetGather, Reduce};
use crate::hermitian::{self, AlmostHermitianJet};
use crate::mat::{self, Mat};
use crate::monitor::{self, MonitorRecord};
use crate::samples::AnalyticStructure;
use crate::scalar::Scalar;
use crate::tensor::{self, MetricPoint, Variance};
use crate::tol::Tolerances;

pub const FORM: [Variance; 2] = [Variance::Co, Variance::Co];
pub const ENDO: [Variance; 2] = [Variance::Contra, Variance::Co];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowKind {
    /// Symplectic curvature flow.
    Scf,
    /// Almost-Hermitian curvature flow with vanishing extra terms.
    Ahcf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridState<T> {
    pub g: GridField<T>,
    pub j: GridField<T>,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tendency<T> {
    pub dg: GridField<T>,
    pub dj: GridField<T>,
    pub domega: GridField<T>,
}

/// Per-point quantities gathered alongside a tendency.
#[derive(Clone, Copy, Debug, Default)]
struct PointStats {
    rm: f64,
    dj2: f64,
}

impl<T: Scalar> GridState<T> {
    pub fn spec(&self) -> GridSpec {
        self.g.spec
    }

    pub fn from_analytic<const N: usize, S: AnalyticStructure<N>>(spec: GridSpec, s: &S) -> Self {
        let pairs: Vec<(Mat<T, N>, Mat<T, N>)> = (0..spec.npts())
            .into_par_iter()
            .map(|p| {
                let x: [f64; N] = spec.coords(p);
                let (g, j) = s.eval::<f64>(&x);
                (mat::map(&g, T::of), mat::map(&j, T::of))
            })
            .collect();
        let g: Vec<_> = pairs.iter().map(|x| x.0).collect();
        let j: Vec<_> = pairs.iter().map(|x| x.1).collect();
        Self { g: GridField::from_mats(spec, FORM, &g), j: GridField::from_mats(spec, ENDO, &j), t: 0.0 }
    }

    pub fn from_mats<const N: usize>(spec: GridSpec, g: &[Mat<T, N>], j: &[Mat<T, N>]) -> Self {
        Self { g: GridField::from_mats(spec, FORM, g), j: GridField::from_mats(spec, ENDO, j), t: 0.0 }
    }

    pub fn flat<const N: usize>(spec: GridSpec) -> Self {
        let g = vec![mat::identity::<T, N>(); spec.npts()];
        let j = vec![hermitian::standard_j::<T, N>(); spec.npts()];
        Self::from_mats(spec, &g, &j)
    }

    /// `ω = g(J·, ·)` as a form field.
    pub fn omega<const N: usize>(&self) -> GridField<T> {
        let spec = self.spec();
        GridField::from_points(spec, &FORM, |p| {
            hermitian::omega_of(&self.g.mat_at::<N>(p), &self.j.mat_at::<N>(p)).iter().flatten().copied().collect()
        })
    }

    /// `(‖dω‖∞, ‖J² + 1‖∞, ‖g − g(J·,J·)‖∞)`
    pub fn drifts<const N: usize>(&self) -> (T, T, T) {
        let dw = grid::exterior_d(&self.omega::<N>()).max_abs();
        let npts = self.spec().npts();
        let (a, b) = (0..npts)
            .into_par_iter()
            .map(|p| {
                let j = self.j.mat_at::<N>(p);
                (tensor::almost_complex_defect(&j), hermitian::compat_defect(&self.g.mat_at::<N>(p), &j))
            })
            .reduce(|| (T::zero(), T::zero()), |x, y| (x.0.max(y.0), x.1.max(y.1)));
        (dw, a, b)
    }

    /// `‖J² + 1‖∞`
    pub fn j_defect<const N: usize>(&self) -> T {
        (0..self.spec().npts())
            .into_par_iter()
            .map(|p| tensor::almost_complex_defect(&self.j.mat_at::<N>(p)))
            .reduce(T::zero, |x, y| x.max(y))
    }

    pub fn check_finite(&self) -> Result<()> {
        self.g.check_finite("metric")?;
        self.j.check_finite("almost complex structure")
    }

    fn add_scaled(&self, k: &Tendency<T>, h: f64) -> Self {
        let mut g = self.g.clone();
        g.axpy(T::of(h), &k.dg);
        let mut j = self.j.clone();
        j.axpy(T::of(h), &k.dj);
        Self { g, j, t: self.t + h }
    }
}

/// Exact 2-jet built from finite differences at point `p`.
pub fn point_jet<T: Scalar, const N: usize>(
    gather: &JetGather,
    s: &GridState<T>,
    p: usize,
    tol: &Tolerances,
) -> Result<AlmostHermitianJet<T, N>> {
    let (g, dg, ddg) = gather.mat_jet2::<T, N>(&s.g, p);
    let (j, dj, ddj) = gather.mat_jet2::<T, N>(&s.j, p);
    // FD jets of a symmetric field are symmetric, but the value may carry
    // round-off asymmetry from the time stepper
    let g = mat::sym(&g);
    AlmostHermitianJet::with_tol(MetricJet2::new(g, dg, ddg)?, j, dj, ddj, tol)
}

fn assemble<T: Scalar, const N: usize>(spec: GridSpec, vals: Vec<(Mat<T, N>, Mat<T, N>, Mat<T, N>)>) -> Tendency<T> {
    let dg: Vec<_> = vals.iter().map(|v| v.0).collect();
    let dj: Vec<_> = vals.iter().map(|v| v.1).collect();
    let dw: Vec<_> = vals.iter().map(|v| v.2).collect();
    Tendency {
        dg: GridField::from_mats(spec, FORM, &dg),
        dj: GridField::from_mats(spec, ENDO, &dj),
        domega: GridField::from_mats(spec, FORM, &dw),
    }
}

/// `½(K + JKJ)`, the part of `K` anticommuting with `J` (for `J² = −1`).
/// Finite-difference jets miss the product rule, so the raw `J`-tendency on
/// a grid anticommutes with `J` only up to truncation error; without this
/// `J² + 1` drifts at `O(h⁴)` instead of `O(dt⁴)`. The metric tendency is
/// left as computed: slaving its `J`-anti-invariant part to `K` as well
/// makes the discrete system unstable.
pub fn anticommuting_part<T: Scalar, const N: usize>(j: &Mat<T, N>, k: &Mat<T, N>) -> Mat<T, N> {
    mat::scale(T::of(0.5), &mat::add(k, &mat::mul(j, &mat::mul(k, j))))
}

/// Largest `|J² + 1|` tolerated on an accepted state before the run counts
/// as broken down. Intermediate Runge-Kutta stages are not checked: they
/// leave the constraint set at `O(dt²)` by construction.
pub const J_DRIFT_GUARD: f64 = 1e-2;

/// Tendency at every point; with `want_stats` also the maxima of `|Rm|` and
/// `|DJ|²` used by the step-size rule.
fn tendency_with_stats<T: Scalar, const N: usize>(
    s: &GridState<T>,
    kind: FlowKind,
    want_stats: bool,
) -> Result<(Tendency<T>, PointStats)> {
    let spec = s.spec();
    assert_eq!(spec.dim, N);
    let gather = JetGather::new(spec);
    let gm = s.g.mats::<N>();
    let jm = s.j.mats::<N>();
    let tol = Tolerances { almost_complex: f64::INFINITY, ..Tolerances::for_scalar::<T>() };
    let out: Vec<Result<((Mat<T, N>, Mat<T, N>, Mat<T, N>), PointStats)>> = (0..spec.npts())
        .into_par_iter()
        .map(|p| {
            let (g, dg, ddg) = gather.mats_jet2::<T, N>(&gm, p);
            let (j, dj, ddj) = gather.mats_jet2::<T, N>(&jm, p);
            // FD jets of a symmetric field are symmetric, but the value may
            // carry round-off asymmetry from the time stepper
            let g = mat::sym(&g);
            let mut stats = PointStats::default();
            let (dgt, djt) = match kind {
                FlowKind::Scf => {
                    let k = kernel::scf_point(&g, &dg, &ddg, &j, &dj, &ddj)?;
                    if want_stats {
                        // also rejects indefinite metrics, which the kernel's plain inverse lets through
                        MetricPoint::new(g)?;
                        let rm = geometry::rm_norm_from_endos(&k.curvature_endos(), &k.ginv);
                        stats = PointStats { rm: rm.as_f64(), dj2: k.dj2.as_f64() };
                    }
                    (k.dg, k.dj)
                }
                FlowKind::Ahcf => {
                    let jet = AlmostHermitianJet::with_tol(MetricJet2::new(g, dg, ddg)?, j, dj, ddj, &tol)?;
                    let l = jet.lifted();
                    if want_stats {
                        stats = PointStats { rm: geometry::rm_norm(&l.curvature(), &l.g).as_f64(), dj2: dj_norm2(&l).as_f64() };
                    }
                    let (dg, k, _) = hermitian::ahcf_rhs(&l);
                    (dg, k)
                }
            };
            let djt = anticommuting_part(&j, &djt);
            let dw = hermitian::induced_domega(&dgt, &djt, &g, &j);
            if [dgt, djt].iter().flatten().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("tendency at point {p}")));
            }
            Ok(((dgt, djt, dw), stats))
        })
        .collect();
    let mut vals = Vec::with_capacity(out.len());
    let mut st = PointStats::default();
    for r in out {
        let (v, s) = r?;
        st.rm = st.rm.max(s.rm);
        st.dj2 = st.dj2.max(s.dj2);
        vals.push(v);
    }
    Ok((assemble(spec, vals), st))
}

fn dj_norm2<T: Scalar, const N: usize>(l: &hermitian::Lifted<T, N>) -> T {
    let mut s = T::zero();
    for k in 0..N {
        for m in 0..N {
            let w = l.g.ginv[k][m];
            if w != T::zero() {
                s += w * geometry::endo_inner(&l.nabla_j[k], &l.nabla_j[m], &l.g);
            }
        }
    }
    s
}

/// `∂g = −2Ric + ½B¹ − B²`, `∂J = −D*DJ + 𝒩 + ℛ` at every grid point.
pub fn scf_tendency<T: Scalar, const N: usize>(s: &GridState<T>) -> Result<Tendency<T>> {
    Ok(tendency_with_stats::<T, N>(s, FlowKind::Scf, false)?.0)
}

/// `∂ω = −S + H`, `∂J = −𝒦` and the induced `∂g` at every grid point.
pub fn ahcf_tendency<T: Scalar, const N: usize>(s: &GridState<T>) -> Result<Tendency<T>> {
    Ok(tendency_with_stats::<T, N>(s, FlowKind::Ahcf, false)?.0)
}

/// Classical RK4 with an arbitrary tendency.
pub fn rk4_step_with<T: Scalar>(
    s: &GridState<T>,
    dt: f64,
    k1: Option<Tendency<T>>,
    f: impl Fn(&GridState<T>) -> Result<Tendency<T>>,
) -> Result<GridState<T>> {
    if !(dt > 0.0) {
        return Err(Error::Config("dt must be positive".into()));
    }
    let k1 = match k1 {
        Some(k) => k,
        None => f(s)?,
    };
    let k2 = f(&s.add_scaled(&k1, 0.5 * dt))?;
    let k3 = f(&s.add_scaled(&k2, 0.5 * dt))?;
    let k4 = f(&s.add_scaled(&k3, dt))?;
    let mut out = s.clone();
    for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
        out.g.axpy(T::of(dt * w / 6.0), &k.dg);
        out.j.axpy(T::of(dt * w / 6.0), &k.dj);
    }
    out.t = s.t + dt;
    out.check_finite()?;
    Ok(out)
}

pub fn rk4_step<T: Scalar, const N: usize>(s: &GridState<T>, dt: f64, kind: FlowKind) -> Result<GridState<T>> {
    rk4_step_with(s, dt, None, |x| Ok(tendency_with_stats::<T, N>(x, kind, false)?.0))
}

/// Pointwise retraction onto compatible pairs: `J` by the polar
/// construction against the current metric applied to `ω = g(J·,·)`
/// averaged to be antisymmetric, then `g ← ½(g + g(J·,J·))`.
pub fn project_compatible<T: Scalar, const N: usize>(s: &GridState<T>) -> Result<GridState<T>> {
    let spec = s.spec();
    let tol = Tolerances::for_scalar::<T>();
    let out: Vec<Result<(Mat<T, N>, Mat<T, N>)>> = (0..spec.npts())
        .into_par_iter()
        .map(|p| {
            let g = mat::sym(&s.g.mat_at::<N>(p));
            let j = s.j.mat_at::<N>(p);
            let w = mat::skew(&hermitian::omega_of(&g, &j));
            let j2 = hermitian::compatible_j_from_omega(&w, &g, &tol)?;
            let g2 = mat::scale(T::of(0.5), &mat::add(&g, &mat::congruence(&j2, &g)));
            MetricPoint::new(g2)?;
            Ok((g2, j2))
        })
        .collect();
    let pairs: Vec<(Mat<T, N>, Mat<T, N>)> = out.into_iter().collect::<Result<_>>()?;
    let g: Vec<_> = pairs.iter().map(|x| x.0).collect();
    let j: Vec<_> = pairs.iter().map(|x| x.1).collect();
    let mut st = GridState::from_mats(spec, &g, &j);
    st.t = s.t;
    Ok(st)
}

/// Full diagnostic record at the current state.
pub fn monitor<T: Scalar, const N: usize>(s: &GridState<T>, kind: FlowKind, step: usize, dt: f64) -> Result<MonitorRecord> {
    let spec = s.spec();
    let gather = JetGather::new(spec);
    let tol = Tolerances { almost_complex: J_DRIFT_GUARD, ..Tolerances::for_scalar::<T>() };
    let gm = s.g.mats::<N>();
    let jm = s.j.mats::<N>();
    struct Pt {
        rm: f64,
        dj2: f64,
        vol: f64,
        ric2: f64,
        p_omega: f64,
        omega2: f64,
        p2: f64,
        ric_anti2: f64,
        wplus: f64,
        consistency: f64,
    }
    let pts: Vec<Result<Pt>> = (0..spec.npts())
        .into_par_iter()
        .map(|p| {
            let (g, dg, ddg) = gather.mats_jet2::<T, N>(&gm, p);
            let (j, dj, ddj) = gather.mats_jet2::<T, N>(&jm, p);
            let jet = AlmostHermitianJet::with_tol(MetricJet2::new(mat::sym(&g), dg, ddg)?, j, dj, ddj, &tol)?;
            let l = jet.lifted();
            let c = l.curvature();
            let gi = &l.g.ginv;
            let (_, pf, _) = l.hermitian_curvature(0.0);
            let ra = monitor::ric_anti_part(&c.ric, &l.j);
            let wplus = if N == 4 {
                geometry::weyl_plus(&c, &l.g, &l.omega, geometry::Orientation::Omega).map(|w| w.defect.as_f64()).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            let consistency = match kind {
                FlowKind::Scf => {
                    let (dg, dj) = hermitian::scf_rhs(&l);
                    let dw = hermitian::induced_domega(&dg, &dj, &l.g.g, &l.j);
                    mat::max_abs(&mat::add(&dw, &pf)).as_f64()
                }
                FlowKind::Ahcf => {
                    let (dg, k, dw) = hermitian::ahcf_rhs(&l);
                    mat::max_abs(&mat::sub(&hermitian::induced_domega(&dg, &k, &l.g.g, &l.j), &dw)).as_f64()
                }
            };
            Ok(Pt {
                rm: geometry::rm_norm(&c, &l.g).as_f64(),
                dj2: dj_norm2(&l).as_f64(),
                vol: mat::det(&l.g.g).sqrt().as_f64(),
                ric2: monitor::form_inner(&c.ric, &c.ric, gi).as_f64(),
                p_omega: monitor::form_inner(&pf, &l.omega, gi).as_f64(),
                omega2: monitor::form_inner(&l.omega, &l.omega, gi).as_f64(),
                p2: monitor::form_inner(&pf, &pf, gi).as_f64(),
                ric_anti2: monitor::form_inner(&ra, &ra, gi).as_f64(),
                wplus,
                consistency,
            })
        })
        .collect();
    let pts: Vec<Pt> = pts.into_iter().collect::<Result<_>>()?;
    let col = |f: &dyn Fn(&Pt) -> f64| -> Vec<f64> { pts.iter().map(f).collect() };
    let cell = spec.cell_volume();
    let integral = |f: &dyn Fn(&Pt) -> f64| grid::fixed_sum(&col(&|p| f(p) * p.vol)) * cell;
    let volume = integral(&|_| 1.0);
    let (dw, j2, compat) = s.drifts::<N>();
    let lambda = integral(&|p| p.p_omega) / integral(&|p| p.omega2);
    // ‖P − λω‖² = |P|² − 2λ⟨P,ω⟩ + λ²|ω|², integrated
    let pl2 = integral(&|p| (p.p2 - 2.0 * lambda * p.p_omega + lambda * lambda * p.omega2).max(0.0));
    let energy = integral(&|p| p.dj2);
    let wplus = if N == 4 { (integral(&|p| p.wplus * p.wplus) / volume).sqrt() } else { f64::NAN };
    Ok(MonitorRecord {
        step,
        t: s.t,
        dt,
        sup_rm: grid::reduce(&spec, &col(&|p| p.rm), Reduce::Sup),
        sup_dj2: grid::reduce(&spec, &col(&|p| p.dj2), Reduce::Sup),
        l2_dj2: (energy / volume).sqrt(),
        domega_inf: dw.as_f64(),
        j2_inf: j2.as_f64(),
        compat: compat.as_f64(),
        energy,
        l2_ric: (integral(&|p| p.ric2) / volume).sqrt(),
        static_p: (pl2 / volume).sqrt(),
        static_ric: (integral(&|p| p.ric_anti2) / volume).sqrt(),
        static_wplus: wplus,
        lambda,
        consistency: grid::reduce(&spec, &col(&|p| p.consistency), Reduce::Sup),
    })
}

/// Settings of a grid run.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSettings {
    pub kind: FlowKind,
    pub cfl: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub monitor_every: usize,
    pub blow_up: f64,
    pub projection: bool,
    /// Overrides the adaptive step.
    pub fixed_dt: Option<f64>,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            kind: FlowKind::Scf,
            cfl: 0.1,
            t_end: 1.0,
            max_steps: 1000,
            monitor_every: 10,
            blow_up: 1e6,
            projection: false,
            fixed_dt: None,
        }
    }
}

impl FlowSettings {
    /// `dt = cfl·h² / max(1, sup|Rm| + sup|DJ|²)`
    pub fn step_size(&self, h: f64, sup_rm: f64, sup_dj2: f64) -> f64 {
        self.fixed_dt.unwrap_or(self.cfl * h * h / (1.0f64).max(sup_rm + sup_dj2))
    }
}

#[derive(Debug)]
pub struct Trajectory<T> {
    pub monitors: Vec<MonitorRecord>,
    pub final_state: GridState<T>,
    pub steps: usize,
    pub blow_up: Option<Error>,
}

/// Integrates until `t_end`, `max_steps` or the blow-up guard. `observe` is
/// called with every state that gets a monitor record (for snapshots).
pub fn run<T: Scalar, const N: usize>(
    initial: GridState<T>,
    settings: &FlowSettings,
    mut observe: impl FnMut(usize, &GridState<T>, &MonitorRecord) -> Result<()>,
) -> Result<Trajectory<T>> {
    if !(settings.cfl > 0.0) || !(settings.t_end >= 0.0) || settings.monitor_every == 0 {
        return Err(Error::Config("invalid flow settings".into()));
    }
    let h = initial.spec().h();
    let mut s = initial;
    let mut monitors = Vec::new();
    let first = monitor::<T, N>(&s, settings.kind, 0, 0.0)?;
    observe(0, &s, &first)?;
    let mut blow_up = None;
    if first.sup_rm > settings.blow_up || !first.is_finite() {
        blow_up = Some(Error::BlowUpDetected { step: 0, time: s.t, what: format!("sup|Rm| = {:e}", first.sup_rm) });
    }
    monitors.push(first);
    let mut step = 0;
    let eps = 1e-12 * settings.t_end.max(1.0);
    while blow_up.is_none() && step < settings.max_steps && s.t < settings.t_end - eps {
        let k1 = tendency_with_stats::<T, N>(&s, settings.kind, true);
        let (k1, stats) = match k1 {
            Ok(x) => x,
            Err(e) => {
                blow_up = Some(guard_error(e, step, s.t)?);
                break;
            }
        };
        if stats.rm > settings.blow_up {
            match monitors.last_mut() {
                Some(last) if last.step == step => last.sup_rm = last.sup_rm.max(stats.rm),
                _ => {
                    let mut m = monitor::<T, N>(&s, settings.kind, step, 0.0).unwrap_or_default();
                    m.sup_rm = m.sup_rm.max(stats.rm);
                    monitors.push(m);
                }
            }
            blow_up = Some(Error::BlowUpDetected { step, time: s.t, what: format!("sup|Rm| = {:e}", stats.rm) });
            break;
        }
        let dt = settings.step_size(h, stats.rm, stats.dj2).min(settings.t_end - s.t);
        let next = rk4_step_with(&s, dt, Some(k1), |x| Ok(tendency_with_stats::<T, N>(x, settings.kind, false)?.0));
        let next = match next.and_then(|x| if settings.projection { project_compatible::<T, N>(&x) } else { Ok(x) }) {
            Ok(x) => x,
            Err(e) => {
                blow_up = Some(guard_error(e, step, s.t)?);
                break;
            }
        };
        s = next;
        step += 1;
        let jd = s.j_defect::<N>().as_f64();
        if !(jd <= J_DRIFT_GUARD) {
            blow_up = Some(Error::BlowUpDetected { step, time: s.t, what: format!("J² + 1 drift {jd:e}") });
            break;
        }
        let last = step >= settings.max_steps || s.t >= settings.t_end - eps;
        if step % settings.monitor_every == 0 || last {
            let m = match monitor::<T, N>(&s, settings.kind, step, dt) {
                Ok(m) => m,
                Err(e) => {
                    blow_up = Some(guard_error(e, step, s.t)?);
                    break;
                }
            };
            observe(step, &s, &m)?;
            let big = m.sup_rm > settings.blow_up || !m.is_finite();
            monitors.push(m);
            if big {
                blow_up = Some(Error::BlowUpDetected { step, time: s.t, what: "sup|Rm| above threshold".into() });
                break;
            }
        }
    }
    Ok(Trajectory { monitors, final_state: s, steps: step, blow_up })
}

/// Degenerate metrics and non-finite values end a run as a blow-up; other
/// errors propagate.
fn guard_error(e: Error, step: usize, time: f64) -> Result<Error> {
    match e {
        Error::DegenerateMetric(w) | Error::NonFinite(w) => Ok(Error::BlowUpDetected { step, time, what: w }),
        Error::NotAlmostComplex(d) => Ok(Error::BlowUpDetected { step, time, what: format!("J² + 1 drift {d:e}") }),
        other => Err(other),
    }
}

/// Kähler initial data `ω = ω₀ + d d^c φ` with the standard `J`, built with
/// the discrete operators so that `ω` is exactly closed and of type (1,1)
/// on the grid. `φ = Σ amp sin(k·x + phase)/|k|²` with `|k_a| ≤ 1`.
pub fn kahler_initial<T: Scalar, const N: usize>(spec: GridSpec, amplitude: f64, seed: u64, n_modes: usize) -> Result<GridState<T>> {
    let pot = crate::samples::KahlerPotential::<N>::random(seed, n_modes, amplitude);
    let phi = GridField::<T>::scalar_from_fn::<N>(spec, |x| {
        pot.modes.iter().map(|m| m.amp * m.arg(x).sin() / m.k.iter().map(|v| v * v).sum::<f64>()).sum()
    });
    let j0 = hermitian::standard_j::<T, N>();
    // d^cφ = −dφ ∘ J
    let dphi = grid::exterior_d(&phi);
    let dc = GridField::from_points(spec, &[Variance::Co], |p| {
        let v: [T; N] = dphi.vec_at(p);
        (0..N).map(|jj| -(0..N).fold(T::zero(), |s, a| s + v[a] * j0[a][jj])).collect()
    });
    let ddc = grid::exterior_d(&dc);
    let w0 = mat::transpose(&j0);
    let mut g = Vec::with_capacity(spec.npts());
    for p in 0..spec.npts() {
        let w = mat::add(&w0, &ddc.mat_at::<N>(p));
        let gm = mat::mul(&w, &j0);
        MetricPoint::new(gm).map_err(|_| Error::Config("Kähler potential too large: metric not positive".into()))?;
        g.push(gm);
    }
    Ok(GridState::from_mats(spec, &g, &vec![j0; spec.npts()]))
}

/// Almost Kähler initial data `ω = ω₀ + dα` with the discrete `d` (so
/// `dω = 0` to round-off), `J` from the polar construction against the flat
/// metric and `g = ω(·, J·)`.
pub fn almost_kahler_initial<T: Scalar, const N: usize>(
    spec: GridSpec,
    amplitude: f64,
    seed: u64,
    n_modes: usize,
) -> Result<GridState<T>> {
    let src = crate::samples::ExactPerturbation::<N>::random(seed, n_modes, amplitude);
    let alpha = GridField::<T>::from_points(spec, &[Variance::Co], |p| {
        let x: [f64; N] = spec.coords(p);
        let mut a = vec![T::zero(); N];
        for (m, dir) in &src.modes {
            let c = m.amp * m.arg(&x).cos();
            for i in 0..N {
                a[i] += T::of(c * dir[i]);
            }
        }
        a
    });
    let da = grid::exterior_d(&alpha);
    let w0 = mat::transpose(&hermitian::standard_j::<T, N>());
    let tol = Tolerances::for_scalar::<T>();
    let id = mat::identity::<T, N>();
    let pairs: Vec<Result<(Mat<T, N>, Mat<T, N>)>> = (0..spec.npts())
        .into_par_iter()
        .map(|p| {
            let w = mat::add(&w0, &da.mat_at::<N>(p));
            let j = hermitian::compatible_j_from_omega(&w, &id, &tol)?;
            let g = mat::sym(&mat::mul(&w, &j));
            MetricPoint::new(g)?;
            Ok((g, j))
        })
        .collect();
    let pairs: Vec<_> = pairs.into_iter().collect::<Result<Vec<_>>>()?;
    let g: Vec<_> = pairs.iter().map(|x| x.0).collect();
    let j: Vec<_> = pairs.iter().map(|x| x.1).collect();
    Ok(GridState::from_mats(spec, &g, &j))
}

#[cfg(test)]
mod tests;

pub mod kernel;
