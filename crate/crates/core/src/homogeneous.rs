//! Left-invariant structures on Lie groups.
//!
//! Everything is expressed in a basis `e_1..e_N` of the Lie algebra with
//! `[e_i, e_j] = c^k_{ij} e_k`. Invariant tensors are constant in this frame,
//! so covariant derivatives reduce to algebra on structure constants and the
//! flow becomes an ODE for the matrices `(g, J)`.
//!
//! Frame conventions match the pointwise engine: `Γ_i` is the matrix of
//! `∇_{e_i}` on frame vectors, `R(e_i, e_j) = [Γ_i, Γ_j] − c^m_{ij} Γ_m`.

use crate::error::{Error, Result};
use crate::geometry::{self, Coeffs, CurvatureBundle, Form3, Quad};
use crate::hermitian::{self, omega_of, raise2, standard_j};
use crate::mat::{self, Mat};
use crate::monitor::{MonitorRecord, StaticResiduals};
use crate::samples::AnalyticStructure;
use crate::scalar::{Analytic, Scalar};
use crate::tensor::{self, MetricPoint};
use crate::tol::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraData<T, const N: usize> {
    pub name: String,
    /// `c[k][i][j] = c^k_{ij}`
    pub c: Form3<T, N>,
}

impl<T: Scalar, const N: usize> LieAlgebraData<T, N> {
    pub fn new(name: &str, c: Form3<T, N>) -> Result<Self> {
        let l = Self { name: name.into(), c };
        let mut asym = T::zero();
        for k in 0..N {
            for i in 0..N {
                for j in 0..N {
                    asym = asym.max((c[k][i][j] + c[k][j][i]).abs());
                }
            }
        }
        if asym.as_f64() > 0.0 {
            return Err(Error::NotAntisymmetric(asym.as_f64()));
        }
        let jac = l.jacobi_residual().as_f64();
        if jac > 1e-13 {
            return Err(Error::Config(format!("structure constants violate Jacobi by {jac:e}")));
        }
        Ok(l)
    }

    /// Builds constants from a list of brackets `[e_i, e_j] = Σ coeff e_k`.
    pub fn from_brackets(name: &str, brackets: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut c = [[[T::zero(); N]; N]; N];
        for &(i, j, k, v) in brackets {
            c[k][i][j] += T::of(v);
            c[k][j][i] -= T::of(v);
        }
        Self::new(name, c)
    }

    pub fn bracket(&self, u: &[T; N], v: &[T; N]) -> [T; N] {
        std::array::from_fn(|k| {
            let mut s = T::zero();
            for i in 0..N {
                for j in 0..N {
                    s += self.c[k][i][j] * u[i] * v[j];
                }
            }
            s
        })
    }

    /// `max |[[e_i,e_j],e_k] + cyclic|`
    pub fn jacobi_residual(&self) -> T {
        let e = |i: usize| -> [T; N] { std::array::from_fn(|a| if a == i { T::one() } else { T::zero() }) };
        let mut r = T::zero();
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    let a = self.bracket(&self.bracket(&e(i), &e(j)), &e(k));
                    let b = self.bracket(&self.bracket(&e(j), &e(k)), &e(i));
                    let c = self.bracket(&self.bracket(&e(k), &e(i)), &e(j));
                    for m in 0..N {
                        r = r.max((a[m] + b[m] + c[m]).abs());
                    }
                }
            }
        }
        r
    }

    /// `(ad_x)^a_i = x^k c^a_{ki}`
    pub fn ad<X: Analytic>(&self, x: &[X; N]) -> Mat<X, N> {
        let mut m = mat::zero::<X, N>();
        for a in 0..N {
            for i in 0..N {
                for k in 0..N {
                    let c = self.c[a][k][i].as_f64();
                    if c != 0.0 {
                        m[a][i] += x[k] * X::cst(c);
                    }
                }
            }
        }
        m
    }

    /// `(ad_x)² = 0` for every `x`, checked on the basis.
    pub fn is_two_step_nilpotent(&self) -> bool {
        for i in 0..N {
            for j in 0..N {
                let e = |i: usize| -> [T; N] { std::array::from_fn(|a| if a == i { T::one() } else { T::zero() }) };
                for k in 0..N {
                    let v = self.bracket(&e(i), &self.bracket(&e(j), &e(k)));
                    if v.iter().any(|x| *x != T::zero()) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// A left-invariant almost-Hermitian structure, as constant matrices in the
/// Lie algebra basis.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantStructure<T, const N: usize> {
    pub g: Mat<T, N>,
    pub j: Mat<T, N>,
    pub t: T,
}

impl<T: Scalar, const N: usize> InvariantStructure<T, N> {
    pub fn omega(&self) -> Mat<T, N> {
        omega_of(&self.g, &self.j)
    }

    /// `(|J² + 1|, |g − g(J·,J·)|, |dω|)`
    pub fn defects(&self, l: &LieAlgebraData<T, N>) -> (T, T, T) {
        let d = invariant_d2(l, &self.omega());
        let dw = d.iter().flatten().flatten().fold(T::zero(), |m, x| m.max(x.abs()));
        (tensor::almost_complex_defect(&self.j), hermitian::compat_defect(&self.g, &self.j), dw)
    }

    pub fn validate(&self, l: &LieAlgebraData<T, N>, tol: &Tolerances) -> Result<()> {
        MetricPoint::with_tol(self.g, tol)?;
        let (a, b, c) = self.defects(l);
        if a.as_f64() > tol.almost_complex {
            return Err(Error::NotAlmostComplex(a.as_f64()));
        }
        if b.as_f64() > tol.almost_complex {
            return Err(Error::DegenerateMetric(format!("metric is not J-invariant, defect {:e}", b.as_f64())));
        }
        if c.as_f64() > tol.almost_complex {
            return Err(Error::Config(format!("invariant ω is not closed, |dω| = {:e}", c.as_f64())));
        }
        Ok(())
    }
}

/// Koszul formula on invariant fields:
/// `2g(∇_{e_i}e_j, e_k) = g([e_i,e_j],e_k) − g([e_j,e_k],e_i) + g([e_k,e_i],e_j)`.
pub fn invariant_levi_civita<T: Scalar, const N: usize>(l: &LieAlgebraData<T, N>, g: &MetricPoint<T, N>) -> Coeffs<T, N> {
    let c = &l.c;
    let gg = &g.g;
    let half = T::of(0.5);
    // cl[k][i][j] = g([e_i, e_j], e_k)
    let mut cl = [[[T::zero(); N]; N]; N];
    for k in 0..N {
        for i in 0..N {
            for j in 0..N {
                let mut s = T::zero();
                for m in 0..N {
                    s += c[m][i][j] * gg[m][k];
                }
                cl[k][i][j] = s;
            }
        }
    }
    let mut gamma = [mat::zero::<T, N>(); N];
    for i in 0..N {
        for j in 0..N {
            let low: [T; N] = std::array::from_fn(|k| half * (cl[k][i][j] - cl[i][j][k] + cl[j][k][i]));
            for m in 0..N {
                let mut s = T::zero();
                for k in 0..N {
                    s += g.ginv[m][k] * low[k];
                }
                gamma[i][m][j] = s;
            }
        }
    }
    gamma
}

/// `R(e_i,e_j) = [Γ_i, Γ_j] − c^m_{ij} Γ_m` for any invariant connection.
pub fn invariant_curvature_endos<T: Scalar, const N: usize>(gamma: &Coeffs<T, N>, l: &LieAlgebraData<T, N>) -> Quad<T, N> {
    let mut r = [[mat::zero::<T, N>(); N]; N];
    for i in 0..N {
        for j in 0..N {
            let mut m = mat::commutator(&gamma[i], &gamma[j]);
            for k in 0..N {
                let c = l.c[k][i][j];
                if c != T::zero() {
                    mat::axpy(&mut m, -c, &gamma[k]);
                }
            }
            r[i][j] = m;
        }
    }
    r
}

pub fn invariant_curvature<T: Scalar, const N: usize>(
    gamma: &Coeffs<T, N>,
    l: &LieAlgebraData<T, N>,
    g: &MetricPoint<T, N>,
) -> CurvatureBundle<T, N> {
    geometry::curvature_from_endos(invariant_curvature_endos(gamma, l), g)
}

/// `N(X,Y) = [JX,JY] − J[JX,Y] − J[X,JY] − [X,Y]`, stored as `n[i][j][k] = N^i_{jk}`.
pub fn invariant_nijenhuis<T: Scalar, const N: usize>(l: &LieAlgebraData<T, N>, j: &Mat<T, N>) -> Form3<T, N> {
    let col = |m: &Mat<T, N>, a: usize| -> [T; N] { std::array::from_fn(|r| m[r][a]) };
    let e = |i: usize| -> [T; N] { std::array::from_fn(|a| if a == i { T::one() } else { T::zero() }) };
    let mut n = [[[T::zero(); N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            let (x, y) = (e(a), e(b));
            let (jx, jy) = (col(j, a), col(j, b));
            let t1 = l.bracket(&jx, &jy);
            let t2 = mat::apply(j, &l.bracket(&jx, &y));
            let t3 = mat::apply(j, &l.bracket(&x, &jy));
            let t4 = l.bracket(&x, &y);
            for i in 0..N {
                n[i][a][b] = t1[i] - t2[i] - t3[i] - t4[i];
            }
        }
    }
    n
}

/// Exterior derivative of an invariant 1-form: `dα(e_i,e_j) = −α([e_i,e_j])`.
pub fn invariant_d1<T: Scalar, const N: usize>(l: &LieAlgebraData<T, N>, a: &[T; N]) -> Mat<T, N> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = T::zero();
            for k in 0..N {
                s -= a[k] * l.c[k][i][j];
            }
            s
        })
    })
}

/// `dφ(e_i,e_j,e_k) = −φ([e_i,e_j],e_k) − φ([e_j,e_k],e_i) − φ([e_k,e_i],e_j)`
pub fn invariant_d2<T: Scalar, const N: usize>(l: &LieAlgebraData<T, N>, phi: &Mat<T, N>) -> Form3<T, N> {
    // b[i][j][k] = φ([e_i, e_j], e_k)
    let mut b = [[[T::zero(); N]; N]; N];
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                let mut s = T::zero();
                for m in 0..N {
                    s += l.c[m][i][j] * phi[m][k];
                }
                b[i][j][k] = s;
            }
        }
    }
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| -(b[i][j][k] + b[j][k][i] + b[k][i][j]))))
}

/// Derivatives of invariant tensors in the frame: `∇_k A = [Γ_k, A]` for
/// endomorphisms and `∇_k w = −Γ_kᵀ w − w Γ_k` for bilinear forms.
fn nabla_endo<T: Scalar, const N: usize>(gamma: &Coeffs<T, N>, a: &Mat<T, N>) -> [Mat<T, N>; N] {
    std::array::from_fn(|k| mat::commutator(&gamma[k], a))
}

fn nabla_form<T: Scalar, const N: usize>(gamma: &Coeffs<T, N>, w: &Mat<T, N>) -> [Mat<T, N>; N] {
    std::array::from_fn(|k| mat::scale(-T::one(), &mat::add(&mat::mul(&mat::transpose(&gamma[k]), w), &mat::mul(w, &gamma[k]))))
}

/// Everything the flow and the identity checks need, computed from
/// structure constants alone.
#[derive(Clone, Debug)]
pub struct InvariantGeometry<T, const N: usize> {
    pub g: MetricPoint<T, N>,
    pub j: Mat<T, N>,
    pub omega: Mat<T, N>,
    pub omega_up: Mat<T, N>,
    pub gamma: Coeffs<T, N>,
    pub curv: CurvatureBundle<T, N>,
    pub nabla_j: [Mat<T, N>; N],
    pub rough_j: Mat<T, N>,
    pub rough_omega: Mat<T, N>,
    pub hodge_omega: Mat<T, N>,
    pub domega: Form3<T, N>,
    /// Curvature endomorphisms of the canonical Hermitian connection.
    pub canonical_curv: Quad<T, N>,
    pub nijenhuis: Form3<T, N>,
}

impl<T: Scalar, const N: usize> InvariantGeometry<T, N> {
    pub fn new(l: &LieAlgebraData<T, N>, s: &InvariantStructure<T, N>) -> Result<Self> {
        let g = MetricPoint::new(s.g)?;
        let gamma = invariant_levi_civita(l, &g);
        let curv = invariant_curvature(&gamma, l, &g);
        let j = s.j;
        let omega = s.omega();
        let omega_up = raise2(&omega, &g.ginv);
        let nabla_j = nabla_endo(&gamma, &j);
        // D*DJ = −g^{kl}([Γ_k, ∇_lJ] − Γ^m_{kl} ∇_mJ)
        let mut rough_j = mat::zero::<T, N>();
        let nabla_w = nabla_form(&gamma, &omega);
        let mut rough_omega = mat::zero::<T, N>();
        for k in 0..N {
            for l2 in 0..N {
                let w = g.ginv[k][l2];
                if w == T::zero() {
                    continue;
                }
                let mut h = mat::commutator(&gamma[k], &nabla_j[l2]);
                let mut hw = mat::scale(
                    -T::one(),
                    &mat::add(&mat::mul(&mat::transpose(&gamma[k]), &nabla_w[l2]), &mat::mul(&nabla_w[l2], &gamma[k])),
                );
                for m in 0..N {
                    mat::axpy(&mut h, -gamma[k][m][l2], &nabla_j[m]);
                    mat::axpy(&mut hw, -gamma[k][m][l2], &nabla_w[m]);
                }
                mat::axpy(&mut rough_j, -w, &h);
                mat::axpy(&mut rough_omega, -w, &hw);
            }
        }
        let domega = invariant_d2(l, &omega);
        let hodge_omega = invariant_hodge2(l, &g, &gamma, &omega);
        let can: Coeffs<T, N> =
            std::array::from_fn(|k| mat::add(&gamma[k], &mat::scale(T::of(0.5), &mat::mul(&nabla_j[k], &j))));
        let canonical_curv = invariant_curvature_endos(&can, l);
        let nijenhuis = invariant_nijenhuis(l, &j);
        Ok(Self {
            g,
            j,
            omega,
            omega_up,
            gamma,
            curv,
            nabla_j,
            rough_j,
            rough_omega,
            hodge_omega,
            domega,
            canonical_curv,
            nijenhuis,
        })
    }

    pub fn p(&self) -> Mat<T, N> {
        hermitian::p_form(&self.canonical_curv, &self.j)
    }

    pub fn quadratic(&self) -> hermitian::QuadraticOps<T, N> {
        hermitian::quadratic_operators(&self.nabla_j, &self.j, &self.g.g, &self.g.ginv)
    }

    pub fn rho_and_rho_star(&self) -> (Mat<T, N>, Mat<T, N>) {
        hermitian::rho_and_rho_star(&self.curv, &self.j)
    }

    /// `(∂g, ∂J)` of symplectic curvature flow.
    pub fn scf_rhs(&self) -> (Mat<T, N>, Mat<T, N>) {
        let q = self.quadratic();
        let mut dg = mat::scale(T::of(-2.0), &self.curv.ric);
        mat::axpy(&mut dg, T::of(0.5), &q.b1);
        mat::axpy(&mut dg, -T::one(), &q.b2);
        let mut dj = mat::scale(-T::one(), &self.rough_j);
        dj = mat::add(&dj, &q.script_n);
        dj = mat::add(&dj, &hermitian::script_r(&self.curv.ric, &self.j, &self.g.ginv));
        (dg, dj)
    }

    pub fn static_residuals(&self) -> StaticResiduals<T> {
        let p = self.p();
        let w4 = if N == 4 {
            geometry::weyl_plus(&self.curv, &self.g, &self.omega, geometry::Orientation::Omega).ok().map(|w| w.defect)
        } else {
            None
        };
        StaticResiduals::from_parts(&p, &self.omega, &self.curv.ric, &self.j, &self.g, w4)
    }
}

/// Hodge Laplacian of an invariant 2-form.
fn invariant_hodge2<T: Scalar, const N: usize>(
    l: &LieAlgebraData<T, N>,
    g: &MetricPoint<T, N>,
    gamma: &Coeffs<T, N>,
    w: &Mat<T, N>,
) -> Mat<T, N> {
    // d*φ = −g^{ka} (∇_k φ)(e_a, ...)
    let nw = nabla_form(gamma, w);
    let dstar: [T; N] = std::array::from_fn(|b| {
        let mut s = T::zero();
        for k in 0..N {
            for a in 0..N {
                s += g.ginv[k][a] * nw[k][a][b];
            }
        }
        -s
    });
    let dd_star = invariant_d1(l, &dstar);
    let dw = invariant_d2(l, w);
    // ∇_k of the 3-form dω
    let mut out = mat::zero::<T, N>();
    for b in 0..N {
        for c in 0..N {
            let mut s = T::zero();
            for k in 0..N {
                for a in 0..N {
                    let gi = g.ginv[k][a];
                    if gi == T::zero() {
                        continue;
                    }
                    let mut h = T::zero();
                    for m in 0..N {
                        h -= gamma[k][m][a] * dw[m][b][c] + gamma[k][m][b] * dw[a][m][c] + gamma[k][m][c] * dw[a][b][m];
                    }
                    s += gi * h;
                }
            }
            out[b][c] = -s;
        }
    }
    mat::add(&dd_star, &out)
}

/// Right-hand side of symplectic curvature flow on an invariant structure.
pub fn invariant_scf_rhs<T: Scalar, const N: usize>(
    s: &InvariantStructure<T, N>,
    l: &LieAlgebraData<T, N>,
) -> Result<(Mat<T, N>, Mat<T, N>)> {
    Ok(InvariantGeometry::new(l, s)?.scf_rhs())
}

/// Monitor values for an invariant structure.
pub fn invariant_monitor<T: Scalar, const N: usize>(
    s: &InvariantStructure<T, N>,
    l: &LieAlgebraData<T, N>,
    dt: T,
) -> Result<MonitorRecord> {
    let geo = InvariantGeometry::new(l, s)?;
    let rm = geometry::rm_norm(&geo.curv, &geo.g).as_f64();
    let mut dj2 = T::zero();
    for k in 0..N {
        for m in 0..N {
            dj2 += geo.g.ginv[k][m] * geometry::endo_inner(&geo.nabla_j[k], &geo.nabla_j[m], &geo.g);
        }
    }
    let (a, b, c) = s.defects(l);
    let st = geo.static_residuals();
    let (dg, dj) = geo.scf_rhs();
    let dw = hermitian::induced_domega(&dg, &dj, &geo.g.g, &geo.j);
    let consistency = mat::max_abs(&mat::add(&dw, &geo.p())).as_f64();
    let vol = mat::det(&s.g).sqrt();
    Ok(MonitorRecord {
        step: 0,
        t: s.t.as_f64(),
        dt: dt.as_f64(),
        sup_rm: rm,
        sup_dj2: dj2.as_f64(),
        l2_dj2: dj2.as_f64(),
        domega_inf: c.as_f64(),
        j2_inf: a.as_f64(),
        compat: b.as_f64(),
        energy: (dj2 * vol).as_f64(),
        l2_ric: crate::monitor::form_inner(&geo.curv.ric, &geo.curv.ric, &geo.g.ginv).sqrt().as_f64(),
        static_p: st.p_minus_lambda_omega.as_f64(),
        static_ric: st.ric_anti.as_f64(),
        static_wplus: st.wplus_defect.map(|x| x.as_f64()).unwrap_or(f64::NAN),
        lambda: st.lambda.as_f64(),
        consistency,
    })
}

#[derive(Clone, Debug)]
pub struct OdeTrajectory<T, const N: usize> {
    pub states: Vec<InvariantStructure<T, N>>,
    pub monitors: Vec<MonitorRecord>,
    pub blow_up: Option<String>,
}

/// Classical RK4 on `(g, J)` with fixed step.
pub fn ode_step<T: Scalar, const N: usize>(
    s: &InvariantStructure<T, N>,
    l: &LieAlgebraData<T, N>,
    dt: T,
) -> Result<InvariantStructure<T, N>> {
    let f = |st: &InvariantStructure<T, N>| invariant_scf_rhs(st, l);
    let add = |st: &InvariantStructure<T, N>, k: &(Mat<T, N>, Mat<T, N>), h: T| InvariantStructure {
        g: mat::add(&st.g, &mat::scale(h, &k.0)),
        j: mat::add(&st.j, &mat::scale(h, &k.1)),
        t: st.t + h,
    };
    let half = dt * T::of(0.5);
    let k1 = f(s)?;
    let k2 = f(&add(s, &k1, half))?;
    let k3 = f(&add(s, &k2, half))?;
    let k4 = f(&add(s, &k3, dt))?;
    let six = dt / T::of(6.0);
    let two = T::of(2.0);
    let comb = |a: &Mat<T, N>, b: &Mat<T, N>, c: &Mat<T, N>, d: &Mat<T, N>| {
        let mut m = mat::add(a, d);
        mat::axpy(&mut m, two, b);
        mat::axpy(&mut m, two, c);
        m
    };
    let out = InvariantStructure {
        g: mat::add(&s.g, &mat::scale(six, &comb(&k1.0, &k2.0, &k3.0, &k4.0))),
        j: mat::add(&s.j, &mat::scale(six, &comb(&k1.1, &k2.1, &k3.1, &k4.1))),
        t: s.t + dt,
    };
    if out.g.iter().chain(out.j.iter()).flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("ode state".into()));
    }
    Ok(out)
}

/// Integrates to `t_end`, recording a monitor every `every` steps.
pub fn ode_run<T: Scalar, const N: usize>(
    s0: &InvariantStructure<T, N>,
    l: &LieAlgebraData<T, N>,
    dt: T,
    t_end: T,
    every: usize,
    rm_threshold: f64,
) -> Result<OdeTrajectory<T, N>> {
    if !(dt > T::zero()) {
        return Err(Error::Config("dt must be positive".into()));
    }
    let mut s = s0.clone();
    let mut states = vec![s.clone()];
    let mut monitors = vec![invariant_monitor(&s, l, dt)?];
    let n = ((t_end - s0.t) / dt).round().to_usize().unwrap_or(0);
    let every = every.max(1);
    let mut blow_up = None;
    for step in 1..=n {
        s = match ode_step(&s, l, dt) {
            Ok(x) => x,
            Err(e @ (Error::DegenerateMetric(_) | Error::NonFinite(_))) => {
                blow_up = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        states.push(s.clone());
        if step % every == 0 || step == n {
            let mut m = invariant_monitor(&s, l, dt)?;
            m.step = step;
            let big = m.sup_rm > rm_threshold;
            monitors.push(m);
            if big {
                blow_up = Some(format!("sup|Rm| exceeded {rm_threshold:e}"));
                break;
            }
        }
    }
    Ok(OdeTrajectory { states, monitors, blow_up })
}

/// Registered presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Abelian4,
    KodairaThurston,
    Iwasawa,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Abelian4, Preset::KodairaThurston, Preset::Iwasawa];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Abelian4 => "abelian4",
            Preset::KodairaThurston => "kodaira-thurston",
            Preset::Iwasawa => "iwasawa",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Preset::Iwasawa => 6,
            _ => 4,
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// Flat `R⁴` with the standard Kähler structure.
pub fn abelian4_preset<T: Scalar>() -> (LieAlgebraData<T, 4>, InvariantStructure<T, 4>) {
    let l = LieAlgebraData::new("abelian4", [[[T::zero(); 4]; 4]; 4]).expect("abelian");
    (l, InvariantStructure { g: mat::identity(), j: standard_j(), t: T::zero() })
}

/// `[e₁, e₂] = e₃`, `J e₁ = e₃`, `J e₂ = e₄`, `g = 1`, so `ω = e¹³ + e²⁴`.
pub fn kodaira_thurston_preset<T: Scalar>() -> (LieAlgebraData<T, 4>, InvariantStructure<T, 4>) {
    let l = LieAlgebraData::from_brackets("kodaira-thurston", &[(0, 1, 2, 1.0)]).expect("Kodaira-Thurston algebra");
    let mut j = mat::zero::<T, 4>();
    j[2][0] = T::one();
    j[0][2] = -T::one();
    j[3][1] = T::one();
    j[1][3] = -T::one();
    (l, InvariantStructure { g: mat::identity(), j, t: T::zero() })
}

/// Iwasawa-type nilpotent algebra `de⁵ = e¹³ − e²⁴`, `de⁶ = e¹⁴ + e²³`, with
/// `ω = e¹⁶ + e²⁵ + e³⁴` (closed), `g = 1`, `J e₁ = e₆`, `J e₂ = e₅`, `J e₃ = e₄`.
pub fn iwasawa_preset<T: Scalar>() -> (LieAlgebraData<T, 6>, InvariantStructure<T, 6>) {
    // de^k(e_i, e_j) = −c^k_{ij}
    let l = LieAlgebraData::from_brackets(
        "iwasawa",
        &[(0, 2, 4, -1.0), (1, 3, 4, 1.0), (0, 3, 5, -1.0), (1, 2, 5, -1.0)],
    )
    .expect("Iwasawa algebra");
    let mut w = mat::zero::<T, 6>();
    for (a, b) in [(0, 5), (1, 4), (2, 3)] {
        w[a][b] = T::one();
        w[b][a] = -T::one();
    }
    // g = 1 and ω = Jᵀ g give J = ωᵀ
    let j = mat::transpose(&w);
    (l, InvariantStructure { g: mat::identity(), j, t: T::zero() })
}

/// Pulls an invariant structure back to exponential coordinates of the
/// group. For 2-step nilpotent algebras the Maurer-Cartan form is
/// `θ(x) = 1 − ½ ad_x` exactly, and `θ⁻¹ = 1 + ½ ad_x`, so `g` and `J` are
/// quadratic polynomials in `x`.
#[derive(Clone, Debug)]
pub struct ExpCoordinates<T, const N: usize> {
    pub algebra: LieAlgebraData<T, N>,
    pub structure: InvariantStructure<T, N>,
}

impl<T: Scalar, const N: usize> ExpCoordinates<T, N> {
    pub fn new(algebra: LieAlgebraData<T, N>, structure: InvariantStructure<T, N>) -> Result<Self> {
        if !algebra.is_two_step_nilpotent() {
            return Err(Error::Config(format!("{} is not 2-step nilpotent", algebra.name)));
        }
        Ok(Self { algebra, structure })
    }
}

impl<T: Scalar, const N: usize> AnalyticStructure<N> for ExpCoordinates<T, N> {
    fn eval<X: Analytic>(&self, x: &[X; N]) -> (Mat<X, N>, Mat<X, N>) {
        let ad = self.algebra.ad(x);
        let half = X::cst(0.5);
        let theta = mat::sub(&mat::identity(), &mat::scale(half, &ad));
        let theta_inv = mat::add(&mat::identity(), &mat::scale(half, &ad));
        let g0 = mat::map(&self.structure.g, |v| X::cst(v.as_f64()));
        let j0 = mat::map(&self.structure.j, |v| X::cst(v.as_f64()));
        (mat::congruence(&theta, &g0), mat::mul(&theta_inv, &mat::mul(&j0, &theta)))
    }
}
