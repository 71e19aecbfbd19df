//! Almost-Hermitian operators at a point.
//!
//! Conventions on top of those in [`crate::geometry`]:
//!
//! * `J[a][b] = J^a_b`, so `(JX)^a = J^a_b X^b`.
//! * `ω(X, Y) = g(JX, Y)`, i.e. `ω = Jᵀ g` as matrices, and `g = ω(·, J·)`.
//! * `ω^{kl} = g^{ka} g^{lb} ω_{ab}` (indices raised with the metric).
//! * `⟨A, B⟩ = g_{mn} g^{kl} A^m_k B^n_l` on endomorphisms.
//! * `DJ` is the Levi-Civita derivative, `(D_k J) = ∂_k J + [Γ_k, J]`.
//!
//! With these, the curvature form of a Hermitian connection is
//! `P_{ij} = tr(J R(e_i, e_j)) = -Ω_{ijkl} ω^{kl}`, the analogous trace of
//! the Levi-Civita curvature is `ρ*_{ij} = tr(J R(e_i, e_j))`, and on Kähler
//! points `P = ρ* = 2ρ`.

use crate::error::{Error, Result};
use crate::geometry::{
    self, christoffel_coeffs, cov_endo, curvature_endos, curvature_from_endos, d2, lift, unlift_coeffs, ConnectionData,
    ConnectionSource, Coeffs, CurvatureBundle, Deriv, Deriv2, Form3, LiftedMetric, MetricJet2, Quad, J1,
};
use crate::jet::{seed2, Jet1, Jet2};
use crate::mat::{self, Mat};
use crate::scalar::{Field, Scalar};
use crate::tensor::{self, apply_slot, form_type_parts, MetricPoint};
use crate::tol::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostHermitianJet<T, const N: usize> {
    pub metric: MetricJet2<T, N>,
    pub j: Mat<T, N>,
    pub dj: Deriv<T, N>,
    pub ddj: Deriv2<T, N>,
}

impl<T: Scalar, const N: usize> AlmostHermitianJet<T, N> {
    pub fn new(metric: MetricJet2<T, N>, j: Mat<T, N>, dj: Deriv<T, N>, ddj: Deriv2<T, N>) -> Result<Self> {
        Self::with_tol(metric, j, dj, ddj, &Tolerances::for_scalar::<T>())
    }

    pub fn with_tol(
        metric: MetricJet2<T, N>,
        j: Mat<T, N>,
        dj: Deriv<T, N>,
        ddj: Deriv2<T, N>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let s = Self { metric, j, dj, ddj };
        let d = tensor::almost_complex_defect(&s.j).as_f64();
        if d > tol.almost_complex {
            return Err(Error::NotAlmostComplex(d));
        }
        let c = compat_defect(&s.metric.g.g, &s.j).as_f64();
        if c > tol.almost_complex * (1.0 + mat::max_abs(&s.metric.g.g).as_f64()) {
            return Err(Error::DegenerateMetric(format!("metric is not J-invariant, defect {c:e}")));
        }
        Ok(s)
    }

    /// Exact 2-jet at `x` of analytic `(g, J)`.
    pub fn from_fn(
        x: &[T; N],
        f: impl Fn(&[Jet2<T, N>; N]) -> (Mat<Jet2<T, N>, N>, Mat<Jet2<T, N>, N>),
    ) -> Result<Self> {
        let (g, j) = f(&seed2(x));
        let (g0, dg, ddg) = geometry::split2(&g);
        let (j0, dj, ddj) = geometry::split2(&j);
        Self::new(MetricJet2::new(g0, dg, ddg)?, j0, dj, ddj)
    }

    /// The flat standard structure.
    pub fn flat_standard() -> Self {
        let z = [mat::zero(); N];
        Self::new(MetricJet2::flat(), standard_j(), z, [z; N]).expect("standard structure")
    }

    pub fn omega(&self) -> Mat<T, N> {
        omega_of(&self.metric.g.g, &self.j)
    }

    /// `(g, J)` as matrices of 2-jets.
    pub fn jet2(&self) -> (Mat<Jet2<T, N>, N>, Mat<Jet2<T, N>, N>) {
        (lift2(&self.metric.g.g, &self.metric.dg, &self.metric.ddg), lift2(&self.j, &self.dj, &self.ddj))
    }

    /// Everything derived from the jet: connections, curvatures, operators.
    pub fn lifted(&self) -> Lifted<T, N> {
        Lifted::new(self)
    }
}

/// Packs value, gradient and Hessian into a matrix of 2-jets.
pub fn lift2<F: Field, const N: usize>(v: &Mat<F, N>, d: &Deriv<F, N>, dd: &Deriv2<F, N>) -> Mat<Jet2<F, N>, N> {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| Jet1 {
            v: Jet1 { v: v[a][b], d: std::array::from_fn(|k| d[k][a][b]) },
            d: std::array::from_fn(|k| Jet1 { v: d[k][a][b], d: std::array::from_fn(|l| dd[k][l][a][b]) }),
        })
    })
}

/// Splits a 2-jet matrix into a first-order jet of the value and first-order
/// jets of each partial derivative.
pub fn lower2<F: Field, const N: usize>(m: &Mat<Jet2<F, N>, N>) -> (Mat<J1<F, N>, N>, Deriv<J1<F, N>, N>) {
    (mat::map(m, |x| x.v), std::array::from_fn(|k| mat::map(m, |x| x.d[k])))
}

/// Standard structure `J e_{2i+1} = e_{2i+2}`.
pub fn standard_j<F: Field, const N: usize>() -> Mat<F, N> {
    let mut j = mat::zero::<F, N>();
    for p in 0..N / 2 {
        j[2 * p + 1][2 * p] = F::ONE;
        j[2 * p][2 * p + 1] = -F::ONE;
    }
    j
}

/// `ω = Jᵀ g`
#[inline]
pub fn omega_of<F: Field, const N: usize>(g: &Mat<F, N>, j: &Mat<F, N>) -> Mat<F, N> {
    mat::mul(&mat::transpose(j), g)
}

/// `|g - g(J·, J·)|_inf`
pub fn compat_defect<T: Scalar, const N: usize>(g: &Mat<T, N>, j: &Mat<T, N>) -> T {
    mat::max_abs(&mat::sub(g, &mat::congruence(j, g)))
}

/// `ω^{kl}` raised with the metric.
#[inline]
pub fn raise2<F: Field, const N: usize>(w: &Mat<F, N>, ginv: &Mat<F, N>) -> Mat<F, N> {
    mat::mul(ginv, &mat::mul(w, ginv))
}

/// Nijenhuis tensor `n[i][j][k] = N^i_{jk}`:
/// `N^i_{jk} = J^p_j ∂_pJ^i_k − J^p_k ∂_pJ^i_j − J^i_p ∂_jJ^p_k + J^i_p ∂_kJ^p_j`.
pub fn nijenhuis_coeffs<E: Field, const N: usize>(j: &Mat<E, N>, dj: &Deriv<E, N>) -> Form3<E, N> {
    // jdj[k] = J ∂_k J
    let jdj: [Mat<E, N>; N] = std::array::from_fn(|k| mat::mul(j, &dj[k]));
    let mut n = [[[E::ZERO; N]; N]; N];
    for jj in 0..N {
        for k in jj + 1..N {
            for i in 0..N {
                let mut s = E::ZERO;
                for p in 0..N {
                    s += j[p][jj] * dj[p][i][k] - j[p][k] * dj[p][i][jj];
                }
                s += jdj[k][i][jj] - jdj[jj][i][k];
                n[i][jj][k] = s;
                n[i][k][jj] = -s;
            }
        }
    }
    n
}

pub fn nijenhuis<T: Scalar, const N: usize>(j: &AlmostHermitianJet<T, N>) -> Form3<T, N> {
    nijenhuis_coeffs(&j.j, &j.dj)
}

/// Canonical Hermitian connection `Γ^C_k = Γ_k + ½ (D_k J) J`.
pub fn canonical_coeffs<E: Field, const N: usize>(gamma: &Coeffs<E, N>, dj: &Deriv<E, N>, j: &Mat<E, N>) -> Coeffs<E, N> {
    let half = E::cst(0.5);
    std::array::from_fn(|k| mat::add(&gamma[k], &mat::scale(half, &mat::mul(&dj[k], j))))
}

/// `(d^cω)(X,Y,Z) = −dω(JX, JY, JZ)`
pub fn dc_omega<E: Field, const N: usize>(domega3: &Form3<E, N>, j: &Mat<E, N>) -> Form3<E, N> {
    let x = apply_slot(&apply_slot(&apply_slot(domega3, j, 0), j, 1), j, 2);
    x.map(|a| a.map(|b| b.map(|c| -c)))
}

/// Gauduchon family: adds `(t/4)[(d^cω)⁺(X,Y,Z) + (d^cω)⁺(X,JY,JZ)]` to
/// `g(∇_X Y, Z)` of the canonical connection.
pub fn gauduchon_coeffs<E: Field, const N: usize>(
    t: f64,
    canonical: &Coeffs<E, N>,
    ginv: &Mat<E, N>,
    j: &Mat<E, N>,
    domega3: &Form3<E, N>,
) -> Coeffs<E, N> {
    if t == 0.0 {
        return *canonical;
    }
    let (plus, _) = form_type_parts(&dc_omega(domega3, j), j);
    let pjj = apply_slot(&apply_slot(&plus, j, 1), j, 2);
    let s = E::cst(t / 4.0);
    let mut out = *canonical;
    for k in 0..N {
        for jj in 0..N {
            for m in 0..N {
                let mut acc = E::ZERO;
                for l in 0..N {
                    acc += ginv[m][l] * (plus[k][jj][l] + pjj[k][jj][l]);
                }
                out[k][m][jj] += s * acc;
            }
        }
    }
    out
}

/// Curvature form `P_{ij} = tr(J R(e_i, e_j))` of a Hermitian connection.
pub fn p_form<F: Field, const N: usize>(r: &Quad<F, N>, j: &Mat<F, N>) -> Mat<F, N> {
    std::array::from_fn(|a| std::array::from_fn(|b| mat::dot(&mat::transpose(j), &r[a][b])))
}

/// `S_{ij} = −Ω_{klij} ω^{kl}`, the trace over the first index pair.
pub fn s_form<T: Scalar, const N: usize>(omega_curv: &Quad<T, N>, omega_up: &Mat<T, N>) -> Mat<T, N> {
    let mut s = mat::zero::<T, N>();
    for k in 0..N {
        for l in 0..N {
            mat::axpy(&mut s, -omega_up[k][l], &omega_curv[k][l]);
        }
    }
    s
}

/// Lowered curvature `Ω_{ijkl} = g(R(e_i,e_j)e_k, e_l)` of any connection.
pub fn lower_curvature<T: Scalar, const N: usize>(r: &Quad<T, N>, g: &Mat<T, N>) -> Quad<T, N> {
    std::array::from_fn(|i| std::array::from_fn(|j| mat::mul(&mat::transpose(&r[i][j]), g)))
}

/// The quadratic first-order operators built from `DJ`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticOps<T, const N: usize> {
    pub n1: Mat<T, N>,
    pub n2: Mat<T, N>,
    pub b1: Mat<T, N>,
    pub b2: Mat<T, N>,
    pub w: Mat<T, N>,
    /// The endomorphism `𝒩` with `g(𝒩X, Y) = N²(X, Y)`.
    pub script_n: Mat<T, N>,
}

/// `B¹_{ij} = ⟨D_iJ, D_jJ⟩`, `N¹_{ab} = J^p_a ⟨D_pJ, D_bJ⟩`,
/// `N²_{ab} = g^{ij} g_{mn} (D_iJ J)^m_a (D_jJ)^n_b`,
/// `B²_{ij} = g^{kl} g_{mn} (D_kJ)^m_i (D_lJ)^n_j`,
/// `W_{ab} = ⟨J^p_a D_pJ + J D_aJ, D_bJ⟩`.
pub fn quadratic_operators<T: Scalar, const N: usize>(
    dj: &Deriv<T, N>,
    j: &Mat<T, N>,
    g: &Mat<T, N>,
    ginv: &Mat<T, N>,
) -> QuadraticOps<T, N> {
    // Gram matrix of the D_kJ
    let gdj: [Mat<T, N>; N] = std::array::from_fn(|k| mat::mul(g, &mat::mul(&dj[k], ginv)));
    let mut gram = mat::zero::<T, N>();
    for a in 0..N {
        for b in a..N {
            let v = mat::dot(&dj[a], &gdj[b]);
            gram[a][b] = v;
            gram[b][a] = v;
        }
    }
    let b1 = gram;
    let n1 = mat::mul(&mat::transpose(j), &gram);
    // X^k := g^{kl} D_lJ ; B² = Σ_k (D_kJ)ᵀ g X^k
    let mut b2 = mat::zero::<T, N>();
    let mut n2 = mat::zero::<T, N>();
    for k in 0..N {
        let mut up = mat::zero::<T, N>();
        for l in 0..N {
            mat::axpy(&mut up, ginv[k][l], &dj[l]);
        }
        let gup = mat::mul(g, &up);
        let t = mat::mul(&mat::transpose(&dj[k]), &gup);
        b2 = mat::add(&b2, &t);
        // N² = Σ (D_kJ J)ᵀ g (g^{kl} D_lJ)
        n2 = mat::add(&n2, &mat::mul(&mat::transpose(&mat::mul(&dj[k], j)), &gup));
    }
    // W
    let mut w = mat::zero::<T, N>();
    for a in 0..N {
        let mut x = mat::mul(j, &dj[a]);
        for p in 0..N {
            mat::axpy(&mut x, j[p][a], &dj[p]);
        }
        for b in 0..N {
            w[a][b] = mat::dot(&x, &gdj[b]);
        }
    }
    let script_n = mat::mul(ginv, &mat::transpose(&n2));
    QuadraticOps { n1, n2, b1, b2, w, script_n }
}

/// `Ric^J = ½(Ric + Ric(J·,J·))`, `ρ = Ric^J(J·, ·)`, `ρ*_{ij} = tr(J R(e_i,e_j))`.
pub fn rho_and_rho_star<T: Scalar, const N: usize>(
    curv: &CurvatureBundle<T, N>,
    j: &Mat<T, N>,
) -> (Mat<T, N>, Mat<T, N>) {
    let ric_j = mat::scale(T::of(0.5), &mat::add(&curv.ric, &mat::congruence(j, &curv.ric)));
    let rho = mat::mul(&mat::transpose(j), &ric_j);
    let rho_star = p_form(&curv.rm31, j);
    (rho, rho_star)
}

/// `ℛ = Rc J − J Rc` with `Rc = g^{-1} Ric`.
pub fn script_r<F: Field, const N: usize>(ric: &Mat<F, N>, j: &Mat<F, N>, ginv: &Mat<F, N>) -> Mat<F, N> {
    let rc = mat::mul(ginv, ric);
    mat::commutator(&rc, j)
}

/// Covariant derivative of a (1,2)-tensor `n[i][j][k] = N^i_{jk}`:
/// returns `out[k][i][l][j] = ∇_k N^i_{lj}`.
pub fn cov_12<F: Field, const N: usize>(gamma: &Coeffs<F, N>, n: &Form3<F, N>, dn: &[Form3<F, N>; N]) -> [Form3<F, N>; N] {
    std::array::from_fn(|k| {
        let g = &gamma[k];
        std::array::from_fn(|i| {
            std::array::from_fn(|l| {
                std::array::from_fn(|jj| {
                    let mut v = dn[k][i][l][jj];
                    for m in 0..N {
                        v += g[i][m] * n[m][l][jj] - g[m][l] * n[i][m][jj] - g[m][jj] * n[i][l][m];
                    }
                    v
                })
            })
        })
    })
}

/// `𝒦^i_j = ω^{kl} ∇_k N^i_{lj}`
pub fn k_from_nabla_n<F: Field, const N: usize>(nabla_n: &[Form3<F, N>; N], omega_up: &Mat<F, N>) -> Mat<F, N> {
    let mut out = mat::zero::<F, N>();
    for k in 0..N {
        for l in 0..N {
            let w = omega_up[k][l];
            for i in 0..N {
                for jj in 0..N {
                    out[i][jj] += w * nabla_n[k][i][l][jj];
                }
            }
        }
    }
    out
}

/// `H = ½[ω(K·, J·) + ω(J·, K·)]` for a J-anticommuting variation `K = ∂J`.
/// This is the (2,0)+(0,2) part that a variation of ω must have for the
/// pair to stay compatible.
pub fn h_from_k<T: Scalar, const N: usize>(
    k: &Mat<T, N>,
    omega: &Mat<T, N>,
    j: &Mat<T, N>,
    tol: &Tolerances,
) -> Result<Mat<T, N>> {
    let skew = anticommutator_defect(j, k).as_f64();
    if skew > tol.j_skew * (1.0 + mat::max_abs(k).as_f64()) {
        return Err(Error::NotJSkew(skew));
    }
    Ok(h_raw(k, omega, j))
}

#[inline]
pub fn h_raw<F: Field, const N: usize>(k: &Mat<F, N>, omega: &Mat<F, N>, j: &Mat<F, N>) -> Mat<F, N> {
    let a = mat::mul(&mat::transpose(k), &mat::mul(omega, j));
    let b = mat::mul(&mat::transpose(j), &mat::mul(omega, k));
    mat::scale(F::cst(0.5), &mat::add(&a, &b))
}

/// `|JK + KJ|_inf`
pub fn anticommutator_defect<T: Scalar, const N: usize>(j: &Mat<T, N>, k: &Mat<T, N>) -> T {
    mat::max_abs(&mat::add(&mat::mul(j, k), &mat::mul(k, j)))
}

/// Polar construction of an ω-compatible J against a reference metric:
/// `A = −g_ref⁻¹ ω`, `J = A (−A²)^{−1/2}`.
pub fn compatible_j_from_omega<T: Scalar, const N: usize>(
    omega: &Mat<T, N>,
    g_ref: &Mat<T, N>,
    tol: &Tolerances,
) -> Result<Mat<T, N>> {
    let scale = mat::max_abs(omega).as_f64();
    let det = mat::det(omega).as_f64();
    if !(scale > 0.0) || det.abs() <= tol.degenerate_form * scale.powi(N as i32) {
        return Err(Error::DegenerateForm);
    }
    // Symmetrize through s = g_ref^{1/2}: b = −s⁻¹ ω s⁻¹ is antisymmetric.
    let sinv = geometry::orthonormal_frame(g_ref);
    let s = mat::inverse(&sinv).ok_or_else(|| Error::DegenerateMetric("reference metric".into()))?;
    let b = mat::scale(-T::one(), &mat::mul(&sinv, &mat::mul(omega, &sinv)));
    let b = mat::skew(&b);
    let neg_b2 = mat::mul(&mat::transpose(&b), &b);
    let (lam, v) = mat::sym_eigen(&neg_b2);
    let mut d = mat::zero::<T, N>();
    for i in 0..N {
        let l = lam[i].max(T::of(tol.eigen_floor));
        d[i][i] = T::one() / l.sqrt();
    }
    let root_inv = mat::mul(&v, &mat::mul(&d, &mat::transpose(&v)));
    let jb = mat::mul(&b, &root_inv);
    Ok(mat::mul(&sinv, &mat::mul(&jb, &s)))
}

/// Connection coefficients together with torsion type and Nijenhuis tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianConnectionData<T, const N: usize> {
    pub conn: ConnectionData<T, N>,
    /// `T^{1,1}(X, Y) = ½(T(X,Y) + T(JX,JY))`, stored like `torsion`.
    pub torsion11: Form3<T, N>,
    pub torsion20: Form3<T, N>,
    pub nijenhuis: Form3<T, N>,
}

impl<T: Scalar, const N: usize> HermitianConnectionData<T, N> {
    fn new(conn: ConnectionData<T, N>, j: &Mat<T, N>, nijenhuis: Form3<T, N>) -> Self {
        let t = &conn.torsion;
        let mut t11 = [[[T::zero(); N]; N]; N];
        let mut t20 = t11;
        for k in 0..N {
            for a in 0..N {
                for b in 0..N {
                    let mut jj = T::zero();
                    for p in 0..N {
                        for q in 0..N {
                            jj += j[p][a] * j[q][b] * t[k][p][q];
                        }
                    }
                    t11[k][a][b] = T::of(0.5) * (t[k][a][b] + jj);
                    t20[k][a][b] = t[k][a][b] - t11[k][a][b];
                }
            }
        }
        Self { conn, torsion11: t11, torsion20: t20, nijenhuis }
    }

    /// `(|∇g|, |∇J|)` at the point.
    pub fn metricity(&self, g: &Mat<T, N>, dg: &Deriv<T, N>, j: &Mat<T, N>, dj: &Deriv<T, N>) -> (T, T) {
        let ng = geometry::cov_form(&self.conn.gamma, g, dg);
        let nj = cov_endo(&self.conn.gamma, j, dj);
        let a = ng.iter().fold(T::zero(), |m, x| m.max(mat::max_abs(x)));
        let b = nj.iter().fold(T::zero(), |m, x| m.max(mat::max_abs(x)));
        (a, b)
    }
}

/// All pointwise objects derived from an almost-Hermitian 2-jet.
///
/// Every quantity that needs one more derivative is computed on [`Jet1`]
/// values first; the plain values are read off afterwards.
#[derive(Clone, Debug)]
pub struct Lifted<T, const N: usize> {
    pub lm: LiftedMetric<T, N>,
    pub j1: Mat<J1<T, N>, N>,
    pub dj1: Deriv<J1<T, N>, N>,
    pub omega1: Mat<J1<T, N>, N>,
    pub domega1: Deriv<J1<T, N>, N>,
    /// Levi-Civita `DJ`, with its derivatives.
    pub nabla_j1: Deriv<J1<T, N>, N>,
    pub g: MetricPoint<T, N>,
    pub dg: Deriv<T, N>,
    pub j: Mat<T, N>,
    pub dj: Deriv<T, N>,
    pub omega: Mat<T, N>,
    pub domega: Deriv<T, N>,
    pub omega_up: Mat<T, N>,
    pub levi_civita: ConnectionData<T, N>,
    pub nabla_j: Deriv<T, N>,
}

impl<T: Scalar, const N: usize> Lifted<T, N> {
    pub fn new(a: &AlmostHermitianJet<T, N>) -> Self {
        let lm = a.metric.lift();
        let (g2, j2) = a.jet2();
        let om2 = omega_of(&g2, &j2);
        let (omega1, domega1) = lower2(&om2);
        let j1 = lift(&a.j, &a.dj);
        let dj1: Deriv<J1<T, N>, N> = std::array::from_fn(|k| lift(&a.dj[k], &a.ddj[k]));
        let nabla_j1 = cov_endo(&lm.gamma, &j1, &dj1);
        let omega = mat::map(&omega1, |x| x.v);
        let domega = std::array::from_fn(|k| mat::map(&domega1[k], |x| x.v));
        let g = a.metric.g.clone();
        let omega_up = raise2(&omega, &g.ginv);
        let levi_civita = ConnectionData::from_lifted(&lm.gamma, ConnectionSource::LeviCivita);
        let nabla_j = std::array::from_fn(|k| mat::map(&nabla_j1[k], |x| x.v));
        Self {
            lm,
            j1,
            dj1,
            omega1,
            domega1,
            nabla_j1,
            g,
            dg: a.metric.dg,
            j: a.j,
            dj: a.dj,
            omega,
            domega,
            omega_up,
            levi_civita,
            nabla_j,
        }
    }

    pub fn curvature(&self) -> CurvatureBundle<T, N> {
        geometry::riemann(&self.levi_civita, &self.g)
    }

    /// `dω` with one more derivative.
    pub fn domega3_lifted(&self) -> Form3<J1<T, N>, N> {
        d2(&self.domega1)
    }

    pub fn domega3(&self) -> Form3<T, N> {
        d2(&self.domega)
    }

    /// Lifted coefficients of the Gauduchon connection (`t = 0` is canonical).
    pub fn gauduchon_lifted(&self, t: f64) -> Coeffs<J1<T, N>, N> {
        let can = canonical_coeffs(&self.lm.gamma, &self.nabla_j1, &self.j1);
        if t == 0.0 {
            return can;
        }
        gauduchon_coeffs(t, &can, &self.lm.ginv, &self.j1, &self.domega3_lifted())
    }

    pub fn hermitian_connection(&self, t: f64) -> HermitianConnectionData<T, N> {
        let src = if t == 0.0 { ConnectionSource::Canonical } else { ConnectionSource::Gauduchon(t) };
        let conn = ConnectionData::from_lifted(&self.gauduchon_lifted(t), src);
        HermitianConnectionData::new(conn, &self.j, nijenhuis_coeffs(&self.j, &self.dj))
    }

    /// `(Ω, P, S)` of the Gauduchon connection with parameter `t`.
    pub fn hermitian_curvature(&self, t: f64) -> (Quad<T, N>, Mat<T, N>, Mat<T, N>) {
        let conn = ConnectionData::from_lifted(&self.gauduchon_lifted(t), ConnectionSource::Gauduchon(t));
        hermitian_curvature(&conn, &self.g, &self.j, &self.omega_up)
    }

    pub fn rough_laplacian_j(&self) -> Mat<T, N> {
        geometry::rough_laplacian_endo(&self.nabla_j1, &self.levi_civita.gamma, &self.g.ginv)
    }

    pub fn rough_laplacian_omega(&self) -> Mat<T, N> {
        let nw = geometry::cov_form(&self.lm.gamma, &self.omega1, &self.domega1);
        geometry::rough_laplacian_form(&nw, &self.levi_civita.gamma, &self.g.ginv)
    }

    pub fn hodge_laplacian_omega(&self) -> Mat<T, N> {
        geometry::hodge_laplacian2(&self.lm, &self.omega1, &self.domega1)
    }

    /// `d*ω`
    pub fn codiff_omega(&self) -> [T; N] {
        geometry::codiff2(&self.g.ginv, &self.levi_civita.gamma, &self.omega, &self.domega)
    }

    pub fn quadratic(&self) -> QuadraticOps<T, N> {
        quadratic_operators(&self.nabla_j, &self.j, &self.g.g, &self.g.ginv)
    }

    /// `𝒦` computed with the Chern connection.
    pub fn k_operator(&self) -> Mat<T, N> {
        let chern = unlift_coeffs(&self.gauduchon_lifted(1.0)).0;
        let n1 = nijenhuis_coeffs(&self.j1, &self.dj1);
        let n = n1.map(|a| a.map(|b| b.map(|c| c.v)));
        let dn = std::array::from_fn(|k| n1.map(|a| a.map(|b| b.map(|c| c.d[k]))));
        k_from_nabla_n(&cov_12(&chern, &n, &dn), &self.omega_up)
    }

    /// Evaluates every flow operator at the point.
    pub fn flow_operators(&self) -> FlowOperators<T, N> {
        let curv = self.curvature();
        let (rho, rho_star) = rho_and_rho_star(&curv, &self.j);
        let q = self.quadratic();
        let (_, p, _) = self.hermitian_curvature(0.0);
        let (_, _, s) = self.hermitian_curvature(1.0);
        let script_r = script_r(&curv.ric, &self.j, &self.g.ginv);
        let script_k = self.k_operator();
        let h = h_raw(&mat::scale(-T::one(), &script_k), &self.omega, &self.j);
        FlowOperators {
            p,
            s,
            rho,
            rho_star,
            n1: q.n1,
            n2: q.n2,
            b1: q.b1,
            b2: q.b2,
            w: q.w,
            script_n: q.script_n,
            script_r,
            script_k,
            h,
        }
    }
}

/// Curvature and its two ω-traces for any connection compatible with `(g, J)`.
pub fn hermitian_curvature<T: Scalar, const N: usize>(
    conn: &ConnectionData<T, N>,
    g: &MetricPoint<T, N>,
    j: &Mat<T, N>,
    omega_up: &Mat<T, N>,
) -> (Quad<T, N>, Mat<T, N>, Mat<T, N>) {
    let r = conn.curvature_endos();
    let om = lower_curvature(&r, &g.g);
    let p = p_form(&r, j);
    let s = s_form(&om, omega_up);
    (om, p, s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowOperators<T, const N: usize> {
    pub p: Mat<T, N>,
    pub s: Mat<T, N>,
    pub rho: Mat<T, N>,
    pub rho_star: Mat<T, N>,
    pub n1: Mat<T, N>,
    pub n2: Mat<T, N>,
    pub b1: Mat<T, N>,
    pub b2: Mat<T, N>,
    pub w: Mat<T, N>,
    pub script_n: Mat<T, N>,
    pub script_r: Mat<T, N>,
    pub script_k: Mat<T, N>,
    pub h: Mat<T, N>,
}

/// Symplectic curvature flow right-hand side at a point:
/// `∂g = −2Ric + ½B¹ − B²`, `∂J = −D*DJ + 𝒩 + ℛ`.
pub fn scf_rhs<T: Scalar, const N: usize>(l: &Lifted<T, N>) -> (Mat<T, N>, Mat<T, N>) {
    let curv_endos = l.levi_civita.curvature_endos();
    let ric = ricci_from_endos(&curv_endos);
    let q = l.quadratic();
    let mut dg = mat::scale(T::of(-2.0), &ric);
    mat::axpy(&mut dg, T::of(0.5), &q.b1);
    mat::axpy(&mut dg, -T::one(), &q.b2);
    let mut dj = mat::scale(-T::one(), &l.rough_laplacian_j());
    dj = mat::add(&dj, &q.script_n);
    dj = mat::add(&dj, &script_r(&ric, &l.j, &l.g.ginv));
    (dg, dj)
}

/// General flow (with vanishing extra terms) at a point:
/// `∂ω = −S + H`, `∂J = −𝒦`, and the metric variation they induce.
pub fn ahcf_rhs<T: Scalar, const N: usize>(l: &Lifted<T, N>) -> (Mat<T, N>, Mat<T, N>, Mat<T, N>) {
    let (_, _, s) = l.hermitian_curvature(1.0);
    let k = mat::scale(-T::one(), &l.k_operator());
    let h = h_raw(&k, &l.omega, &l.j);
    let domega = mat::add(&mat::scale(-T::one(), &s), &h);
    let dg = induced_dg(&domega, &k, &l.omega, &l.j);
    (dg, k, domega)
}

/// `∂g(X,Y) = ∂ω(X, JY) + ω(X, KY)`
pub fn induced_dg<F: Field, const N: usize>(domega: &Mat<F, N>, k: &Mat<F, N>, omega: &Mat<F, N>, j: &Mat<F, N>) -> Mat<F, N> {
    mat::add(&mat::mul(domega, j), &mat::mul(omega, k))
}

/// `∂ω(X,Y) = ∂g(JX, Y) + g(KX, Y)`
pub fn induced_domega<F: Field, const N: usize>(dg: &Mat<F, N>, k: &Mat<F, N>, g: &Mat<F, N>, j: &Mat<F, N>) -> Mat<F, N> {
    mat::add(&mat::mul(&mat::transpose(j), dg), &mat::mul(&mat::transpose(k), g))
}

pub fn ricci_from_endos<F: Field, const N: usize>(r: &Quad<F, N>) -> Mat<F, N> {
    std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let mut s = F::ZERO;
            for i in 0..N {
                s += r[i][j][i][k];
            }
            s
        })
    })
}

/// Levi-Civita curvature bundle at the point (convenience).
pub fn levi_civita_curvature<T: Scalar, const N: usize>(a: &AlmostHermitianJet<T, N>) -> CurvatureBundle<T, N> {
    let lm = a.metric.lift();
    let (gamma, dgamma) = unlift_coeffs(&lm.gamma);
    curvature_from_endos(curvature_endos(&gamma, &dgamma), &a.metric.g)
}

/// Levi-Civita coefficients from a metric value and derivatives (no jets).
pub fn levi_civita_values<T: Scalar, const N: usize>(ginv: &Mat<T, N>, dg: &Deriv<T, N>) -> Coeffs<T, N> {
    christoffel_coeffs(ginv, dg)
}
