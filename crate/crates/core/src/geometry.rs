//! Levi-Civita geometry at a point, computed from 2-jets of the metric.
//!
//! Conventions (all indices are coordinate indices):
//!
//! * `gamma[i]` is the matrix `(Γ_i)^k_j = Γ^k_{ij}`, i.e. `∇_{e_i} e_j = Γ^k_{ij} e_k`.
//! * `R(e_i, e_j) = ∂_i Γ_j - ∂_j Γ_i + [Γ_i, Γ_j]` as an endomorphism, which
//!   is `∇_X∇_Y - ∇_Y∇_X - ∇_{[X,Y]}` on coordinate fields.
//! * `R_{ijkl} = g(R(e_i,e_j)e_k, e_l)`, `Ric_{jk} = R^i_{ijk}`; the round
//!   sphere has `Ric = +g`.
//! * `D*D = -g^{kl}∇_k∇_l` is the nonnegative rough Laplacian.
//! * `(dφ)_{ijk} = ∂_iφ_{jk} + ∂_jφ_{ki} + ∂_kφ_{ij}` and
//!   `(d*φ)_{b..} = -g^{ka}∇_kφ_{ab..}`.
//!
//! Most kernels are generic over [`Field`], so feeding them [`Jet1`] values
//! returns one extra derivative for free. That is how `∂Γ`, `∂(∇J)` and
//! `∂(d*ω)` are produced without writing out their formulas.

use crate::error::{Error, Result};
use crate::jet::{Jet1, Jet2};
use crate::mat::{self, Mat};
use crate::scalar::{Field, Scalar};
use crate::tensor::{DenseTensor, MetricPoint, Variance};
use crate::tol::Tolerances;

/// First-order jet type used to carry one derivative through a kernel.
pub type J1<F, const N: usize> = Jet1<F, N>;

/// Derivative arrays: `d[k]` is `∂_k` of a matrix-valued quantity.
pub type Deriv<F, const N: usize> = [Mat<F, N>; N];
/// Second derivatives: `dd[k][l] = ∂_k∂_l`.
pub type Deriv2<F, const N: usize> = [[Mat<F, N>; N]; N];
/// Christoffel-type arrays, `c[i]` is the matrix `Γ_i`.
pub type Coeffs<F, const N: usize> = [Mat<F, N>; N];
/// A 4-index array, `r[i][j]` is a matrix.
pub type Quad<F, const N: usize> = [[Mat<F, N>; N]; N];
pub type Form3<F, const N: usize> = [[[F; N]; N]; N];

#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet2<T, const N: usize> {
    pub g: MetricPoint<T, N>,
    pub dg: Deriv<T, N>,
    pub ddg: Deriv2<T, N>,
}

impl<T: Scalar, const N: usize> MetricJet2<T, N> {
    pub fn new(g: Mat<T, N>, dg: Deriv<T, N>, ddg: Deriv2<T, N>) -> Result<Self> {
        Ok(Self { g: MetricPoint::new(g)?, dg, ddg })
    }

    /// Flat metric with vanishing derivatives.
    pub fn flat() -> Self {
        Self::new(mat::identity(), [mat::zero(); N], [[mat::zero(); N]; N]).expect("identity metric")
    }

    /// Exact 2-jet at `x` of an analytic metric given in closed form.
    pub fn from_fn(x: &[T; N], f: impl Fn(&[Jet2<T, N>; N]) -> Mat<Jet2<T, N>, N>) -> Result<Self> {
        let (g, dg, ddg) = split2(&f(&crate::jet::seed2(x)));
        Self::new(g, dg, ddg)
    }

    /// Lifts `(g, ∂g)` to jets carrying one more derivative.
    pub fn lift(&self) -> LiftedMetric<T, N> {
        let g = lift(&self.g.g, &self.dg);
        let dg = std::array::from_fn(|k| lift(&self.dg[k], &self.ddg[k]));
        let ginv = mat::inverse_nopivot(&g);
        let gamma = christoffel_coeffs(&ginv, &dg);
        LiftedMetric { g, dg, ginv, gamma }
    }
}

/// Splits a matrix of 2-jets into value, gradient and Hessian arrays.
pub fn split2<F: Field, const N: usize>(m: &Mat<Jet2<F, N>, N>) -> (Mat<F, N>, Deriv<F, N>, Deriv2<F, N>) {
    let v = mat::map(m, |x| x.v.v);
    let d = std::array::from_fn(|k| mat::map(m, |x| x.v.d[k]));
    let dd = std::array::from_fn(|k| std::array::from_fn(|l| mat::map(m, |x| x.d[k].d[l])));
    (v, d, dd)
}

/// Packs a value and its first derivatives into a matrix of jets.
pub fn lift<F: Field, const N: usize>(v: &Mat<F, N>, d: &Deriv<F, N>) -> Mat<J1<F, N>, N> {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| Jet1 { v: v[a][b], d: std::array::from_fn(|k| d[k][a][b]) })
    })
}

/// Inverse of [`lift`].
pub fn unlift<F: Field, const N: usize>(m: &Mat<J1<F, N>, N>) -> (Mat<F, N>, Deriv<F, N>) {
    (mat::map(m, |x| x.v), std::array::from_fn(|k| mat::map(m, |x| x.d[k])))
}

pub fn unlift_coeffs<F: Field, const N: usize>(c: &Coeffs<J1<F, N>, N>) -> (Coeffs<F, N>, [Coeffs<F, N>; N]) {
    let v = std::array::from_fn(|i| mat::map(&c[i], |x| x.v));
    let d = std::array::from_fn(|l| std::array::from_fn(|i| mat::map(&c[i], |x| x.d[l])));
    (v, d)
}

/// Metric data with one derivative carried along.
#[derive(Clone, Debug)]
pub struct LiftedMetric<F, const N: usize> {
    pub g: Mat<J1<F, N>, N>,
    pub dg: Deriv<J1<F, N>, N>,
    pub ginv: Mat<J1<F, N>, N>,
    pub gamma: Coeffs<J1<F, N>, N>,
}

/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} - ∂_l g_{ij})`
pub fn christoffel_coeffs<E: Field, const N: usize>(ginv: &Mat<E, N>, dg: &Deriv<E, N>) -> Coeffs<E, N> {
    let half = E::cst(0.5);
    let mut low = [[[E::ZERO; N]; N]; N]; // low[l][i][j] = Γ_{l,ij}
    for l in 0..N {
        for i in 0..N {
            for j in i..N {
                let v = half * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                low[l][i][j] = v;
                low[l][j][i] = v;
            }
        }
    }
    let mut gamma = [mat::zero::<E, N>(); N];
    for i in 0..N {
        for j in i..N {
            for k in 0..N {
                let mut s = E::ZERO;
                for l in 0..N {
                    s += ginv[k][l] * low[l][i][j];
                }
                gamma[i][k][j] = s;
                gamma[j][k][i] = s;
            }
        }
    }
    gamma
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConnectionSource {
    LeviCivita,
    Canonical,
    Gauduchon(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionData<T, const N: usize> {
    pub gamma: Coeffs<T, N>,
    /// `dgamma[l][i] = ∂_l Γ_i`
    pub dgamma: [Coeffs<T, N>; N],
    /// `torsion[k][i][j] = T^k_{ij} = Γ^k_{ij} - Γ^k_{ji}`
    pub torsion: Form3<T, N>,
    pub source: ConnectionSource,
}

impl<T: Scalar, const N: usize> ConnectionData<T, N> {
    pub fn from_lifted(c: &Coeffs<J1<T, N>, N>, source: ConnectionSource) -> Self {
        let (gamma, dgamma) = unlift_coeffs(c);
        let torsion = std::array::from_fn(|k| {
            std::array::from_fn(|i| std::array::from_fn(|j| gamma[i][k][j] - gamma[j][k][i]))
        });
        Self { gamma, dgamma, torsion, source }
    }

    /// Curvature endomorphisms `R(e_i, e_j)`.
    pub fn curvature_endos(&self) -> Quad<T, N> {
        curvature_endos(&self.gamma, &self.dgamma)
    }
}

/// Levi-Civita connection of a metric 2-jet.
pub fn christoffel<T: Scalar, const N: usize>(j: &MetricJet2<T, N>) -> ConnectionData<T, N> {
    ConnectionData::from_lifted(&j.lift().gamma, ConnectionSource::LeviCivita)
}

/// `R(e_i,e_j) = ∂_iΓ_j − ∂_jΓ_i + Γ_iΓ_j − Γ_jΓ_i`
pub fn curvature_endos<F: Field, const N: usize>(gamma: &Coeffs<F, N>, dgamma: &[Coeffs<F, N>; N]) -> Quad<F, N> {
    let mut r = [[mat::zero::<F, N>(); N]; N];
    for i in 0..N {
        for j in i + 1..N {
            let m = mat::add(&mat::sub(&dgamma[i][j], &dgamma[j][i]), &mat::commutator(&gamma[i], &gamma[j]));
            r[j][i] = mat::scale(-F::ONE, &m);
            r[i][j] = m;
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureBundle<T, const N: usize> {
    /// `rm[i][j][k][l] = R_{ijkl}`
    pub rm: Quad<T, N>,
    pub ric: Mat<T, N>,
    pub scal: T,
    /// `rm31[i][j]` is the endomorphism `R(e_i, e_j)`, entry `[l][k] = R^l_{ijk}`.
    pub rm31: Quad<T, N>,
}

pub fn riemann<T: Scalar, const N: usize>(c: &ConnectionData<T, N>, g: &MetricPoint<T, N>) -> CurvatureBundle<T, N> {
    curvature_from_endos(c.curvature_endos(), g)
}

pub fn curvature_from_endos<T: Scalar, const N: usize>(rm31: Quad<T, N>, g: &MetricPoint<T, N>) -> CurvatureBundle<T, N> {
    let mut rm = [[mat::zero::<T, N>(); N]; N];
    for i in 0..N {
        for j in 0..N {
            // R_{ijkl} = R^m_{ijk} g_{ml}
            rm[i][j] = mat::mul(&mat::transpose(&rm31[i][j]), &g.g);
        }
    }
    let mut ric = mat::zero::<T, N>();
    for j in 0..N {
        for k in 0..N {
            let mut s = T::zero();
            for i in 0..N {
                s += rm31[i][j][i][k];
            }
            ric[j][k] = s;
        }
    }
    let scal = mat::dot(&g.ginv, &ric);
    CurvatureBundle { rm, ric, scal, rm31 }
}

/// `|Rm|` straight from metric-skew curvature endomorphisms:
/// `|Rm|² = −Σ g^{ia} g^{jb} tr(R_{ij} R_{ab})`, summed over ordered pairs.
pub fn rm_norm_from_endos<T: Scalar, const N: usize>(r: &Quad<T, N>, ginv: &Mat<T, N>) -> T {
    let mut s = T::zero();
    for i in 0..N {
        for j in i + 1..N {
            let mut c = mat::zero::<T, N>();
            for a in 0..N {
                for b in a + 1..N {
                    let w = ginv[i][a] * ginv[j][b] - ginv[i][b] * ginv[j][a];
                    c = mat::add(&c, &mat::scale(w, &r[a][b]));
                }
            }
            s += mat::trace(&mat::mul(&r[i][j], &c));
        }
    }
    (-(s + s)).max(T::zero()).sqrt()
}

/// Norm `|Rm|` computed with the metric.
pub fn rm_norm<T: Scalar, const N: usize>(c: &CurvatureBundle<T, N>, g: &MetricPoint<T, N>) -> T {
    let gi = &g.ginv;
    // raise one index at a time
    let mut up = c.rm;
    for slot in 0..4 {
        let src = up;
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    for l in 0..N {
                        let mut s = T::zero();
                        for m in 0..N {
                            s += match slot {
                                0 => gi[i][m] * src[m][j][k][l],
                                1 => gi[j][m] * src[i][m][k][l],
                                2 => gi[k][m] * src[i][j][m][l],
                                _ => gi[l][m] * src[i][j][k][m],
                            };
                        }
                        up[i][j][k][l] = s;
                    }
                }
            }
        }
    }
    let mut s = T::zero();
    for i in 0..N {
        for j in 0..N {
            s += mat::dot(&up[i][j], &c.rm[i][j]);
        }
    }
    s.max(T::zero()).sqrt()
}

/// `⟨A, B⟩ = g_{mn} g^{kl} A^m_k B^n_l`
#[inline]
pub fn endo_inner<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>, g: &MetricPoint<F, N>) -> F {
    endo_inner_raw(a, b, &g.g, &g.ginv)
}

#[inline]
pub fn endo_inner_raw<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>, g: &Mat<F, N>, ginv: &Mat<F, N>) -> F {
    // tr(A^T g B g^-1)
    let gb = mat::mul(g, b);
    let gbgi = mat::mul(&gb, ginv);
    mat::dot(a, &gbgi)
}

/// `∇_k A = ∂_k A + [Γ_k, A]` for an endomorphism field.
pub fn cov_endo<E: Field, const N: usize>(gamma: &Coeffs<E, N>, a: &Mat<E, N>, da: &Deriv<E, N>) -> Deriv<E, N> {
    std::array::from_fn(|k| mat::add(&da[k], &mat::commutator(&gamma[k], a)))
}

/// `∇_k w = ∂_k w - Γ_k^T w - w Γ_k` for a covariant 2-tensor.
pub fn cov_form<E: Field, const N: usize>(gamma: &Coeffs<E, N>, w: &Mat<E, N>, dw: &Deriv<E, N>) -> Deriv<E, N> {
    std::array::from_fn(|k| {
        mat::sub(&mat::sub(&dw[k], &mat::mul(&mat::transpose(&gamma[k]), w)), &mat::mul(w, &gamma[k]))
    })
}

/// General covariant derivative of a tensor given its coordinate derivatives
/// `dt[k] = ∂_k T`. The new (covariant) slot is placed first.
pub fn covariant_derivative<T: Scalar, const N: usize>(
    t: &DenseTensor<T>,
    dt: &[DenseTensor<T>],
    c: &ConnectionData<T, N>,
) -> Result<DenseTensor<T>> {
    if t.dim != N || dt.len() != N || dt.iter().any(|d| d.variance != t.variance) {
        return Err(Error::SlotMismatch("derivative jet does not match tensor".into()));
    }
    let r = t.rank();
    let mut variance = vec![Variance::Co];
    variance.extend_from_slice(&t.variance);
    let mut out = DenseTensor::zeros(N, &variance);
    let stride = t.data.len();
    let mut idx = vec![0usize; r];
    for k in 0..N {
        for flat in 0..stride {
            let mut rem = flat;
            for s in (0..r).rev() {
                idx[s] = rem % N;
                rem /= N;
            }
            let mut v = dt[k].data[flat];
            for s in 0..r {
                let orig = idx[s];
                for m in 0..N {
                    idx[s] = m;
                    let x = t.get(&idx);
                    match t.variance[s] {
                        // Γ^a_{km} T^{..m..}
                        Variance::Contra => v += c.gamma[k][orig][m] * x,
                        // -Γ^m_{kb} T_{..m..}
                        Variance::Co => v -= c.gamma[k][m][orig] * x,
                    }
                }
                idx[s] = orig;
            }
            out.data[k * stride + flat] = v;
        }
    }
    Ok(out)
}

/// `D*D f = -g^{kl}(∂_k∂_l f - Γ^m_{kl} ∂_m f)` for a scalar 2-jet.
pub fn rough_laplacian_scalar<T: Scalar, const N: usize>(
    df: &[T; N],
    ddf: &Mat<T, N>,
    gamma: &Coeffs<T, N>,
    ginv: &Mat<T, N>,
) -> T {
    let mut s = T::zero();
    for k in 0..N {
        for l in 0..N {
            let mut h = ddf[k][l];
            for m in 0..N {
                h -= gamma[k][m][l] * df[m];
            }
            s += ginv[k][l] * h;
        }
    }
    -s
}

/// `D*D A = -g^{kl}(∂_k(∇_l A) - Γ^m_{kl}∇_m A + [Γ_k, ∇_l A])`, given `∇A`
/// lifted to first-order jets.
pub fn rough_laplacian_endo<F: Field, const N: usize>(
    nabla_a: &Deriv<J1<F, N>, N>,
    gamma: &Coeffs<F, N>,
    ginv: &Mat<F, N>,
) -> Mat<F, N> {
    let na: Deriv<F, N> = std::array::from_fn(|k| mat::map(&nabla_a[k], |x| x.v));
    let mut out = mat::zero::<F, N>();
    for k in 0..N {
        for l in 0..N {
            let w = ginv[k][l];
            let mut h = mat::map(&nabla_a[l], |x| x.d[k]);
            h = mat::add(&h, &mat::commutator(&gamma[k], &na[l]));
            for m in 0..N {
                mat::axpy(&mut h, -gamma[k][m][l], &na[m]);
            }
            mat::axpy(&mut out, -w, &h);
        }
    }
    out
}

/// Rough Laplacian of a covariant 2-tensor from its lifted covariant derivative.
pub fn rough_laplacian_form<F: Field, const N: usize>(
    nabla_w: &Deriv<J1<F, N>, N>,
    gamma: &Coeffs<F, N>,
    ginv: &Mat<F, N>,
) -> Mat<F, N> {
    let nw: Deriv<F, N> = std::array::from_fn(|k| mat::map(&nabla_w[k], |x| x.v));
    let mut out = mat::zero::<F, N>();
    for k in 0..N {
        for l in 0..N {
            let w = ginv[k][l];
            let mut h = mat::map(&nabla_w[l], |x| x.d[k]);
            h = mat::sub(&h, &mat::mul(&mat::transpose(&gamma[k]), &nw[l]));
            h = mat::sub(&h, &mat::mul(&nw[l], &gamma[k]));
            for m in 0..N {
                mat::axpy(&mut h, -gamma[k][m][l], &nw[m]);
            }
            mat::axpy(&mut out, -w, &h);
        }
    }
    out
}

/// `(dα)_{ij} = ∂_iα_j - ∂_jα_i`, with `da[k][j] = ∂_kα_j`.
pub fn d1<E: Field, const N: usize>(da: &Mat<E, N>) -> Mat<E, N> {
    std::array::from_fn(|i| std::array::from_fn(|j| da[i][j] - da[j][i]))
}

/// `(dφ)_{ijk} = ∂_iφ_{jk} + ∂_jφ_{ki} + ∂_kφ_{ij}`
pub fn d2<E: Field, const N: usize>(dphi: &Deriv<E, N>) -> Form3<E, N> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| std::array::from_fn(|k| dphi[i][j][k] + dphi[j][k][i] + dphi[k][i][j]))
    })
}

/// `d*` of a 1-form.
pub fn codiff1<E: Field, const N: usize>(ginv: &Mat<E, N>, gamma: &Coeffs<E, N>, a: &[E; N], da: &Mat<E, N>) -> E {
    let mut s = E::ZERO;
    for k in 0..N {
        for b in 0..N {
            let mut h = da[k][b];
            for m in 0..N {
                h -= gamma[k][m][b] * a[m];
            }
            s += ginv[k][b] * h;
        }
    }
    -s
}

/// `d*` of a 2-form, `dphi[k] = ∂_kφ`.
pub fn codiff2<E: Field, const N: usize>(
    ginv: &Mat<E, N>,
    gamma: &Coeffs<E, N>,
    phi: &Mat<E, N>,
    dphi: &Deriv<E, N>,
) -> [E; N] {
    let nab = cov_form(gamma, phi, dphi);
    std::array::from_fn(|b| {
        let mut s = E::ZERO;
        for k in 0..N {
            for a in 0..N {
                s += ginv[k][a] * nab[k][a][b];
            }
        }
        -s
    })
}

/// `d*` of a 3-form, `dphi[k] = ∂_kφ`.
pub fn codiff3<E: Field, const N: usize>(
    ginv: &Mat<E, N>,
    gamma: &Coeffs<E, N>,
    phi: &Form3<E, N>,
    dphi: &[Form3<E, N>; N],
) -> Mat<E, N> {
    let mut out = mat::zero::<E, N>();
    for b in 0..N {
        for c in 0..N {
            let mut s = E::ZERO;
            for k in 0..N {
                for a in 0..N {
                    let w = ginv[k][a];
                    let mut h = dphi[k][a][b][c];
                    for m in 0..N {
                        h -= gamma[k][m][a] * phi[m][b][c]
                            + gamma[k][m][b] * phi[a][m][c]
                            + gamma[k][m][c] * phi[a][b][m];
                    }
                    s += w * h;
                }
            }
            out[b][c] = -s;
        }
    }
    out
}

/// Pointwise Hodge Laplacian `Δ_d ω = dd*ω + d*dω` of a 2-form from its
/// lifted jets (`w` carries `∂ω`, `dw[k]` carries `∂∂ω`).
pub fn hodge_laplacian2<F: Field, const N: usize>(lm: &LiftedMetric<F, N>, w: &Mat<J1<F, N>, N>, dw: &Deriv<J1<F, N>, N>) -> Mat<F, N> {
    // d d*ω
    let dstar = codiff2(&lm.ginv, &lm.gamma, w, dw);
    let grad: Mat<F, N> = std::array::from_fn(|k| std::array::from_fn(|b| dstar[b].d[k]));
    let dds = d1(&grad);
    // d* dω
    let dw3 = d2(dw);
    let phi = std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| dw3[i][j][k].v)));
    let dphi = std::array::from_fn(|l| std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| dw3[i][j][k].d[l]))));
    let ginv = mat::map(&lm.ginv, |x| x.v);
    let gamma: Coeffs<F, N> = std::array::from_fn(|i| mat::map(&lm.gamma[i], |x| x.v));
    let sdd = codiff3(&ginv, &gamma, &phi, &dphi);
    mat::add(&dds, &sdd)
}

/// Symmetric positive square-root inverse `g^{-1/2}`: its columns form a
/// g-orthonormal, positively oriented frame.
pub fn orthonormal_frame<T: Scalar, const N: usize>(g: &Mat<T, N>) -> Mat<T, N> {
    let (lam, v) = mat::sym_eigen(g);
    let mut d = mat::zero::<T, N>();
    for i in 0..N {
        d[i][i] = T::one() / lam[i].sqrt();
    }
    mat::mul(&v, &mat::mul(&d, &mat::transpose(&v)))
}

/// Orientation used to define self-dual forms in dimension four.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `dx¹∧dx²∧dx³∧dx⁴ > 0`
    Coordinate,
    /// `ω∧ω > 0`
    Omega,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylPlus<T> {
    /// Self-dual Weyl block in an orthonormal basis of Λ⁺.
    pub block: [[T; 3]; 3],
    /// Components of ω in that basis.
    pub omega: [T; 3],
    /// Components of W⁺(ω).
    pub w_omega: [T; 3],
    /// Best eigenvalue estimate `μ = ⟨W⁺ω, ω⟩ / |ω|²`.
    pub mu: T,
    /// `|W⁺(ω) - μω|`
    pub defect: T,
}

/// Weyl tensor `W_{ijkl}` in the curvature convention of this module.
pub fn weyl<T: Scalar, const N: usize>(c: &CurvatureBundle<T, N>, g: &MetricPoint<T, N>) -> Quad<T, N> {
    let n = T::of(N as f64);
    let a = T::one() / (n - T::of(2.0));
    let b = c.scal / ((n - T::one()) * (n - T::of(2.0)));
    let (gg, ric) = (&g.g, &c.ric);
    let mut w = c.rm;
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                for l in 0..N {
                    let kn = ric[j][k] * gg[i][l] + gg[j][k] * ric[i][l] - ric[i][k] * gg[j][l] - gg[i][k] * ric[j][l];
                    let gg2 = gg[j][k] * gg[i][l] - gg[i][k] * gg[j][l];
                    w[i][j][k][l] -= a * kn - b * gg2;
                }
            }
        }
    }
    w
}

pub fn weyl_plus<T: Scalar, const N: usize>(
    c: &CurvatureBundle<T, N>,
    g: &MetricPoint<T, N>,
    omega: &Mat<T, N>,
    orientation: Orientation,
) -> Result<WeylPlus<T>> {
    if N != 4 {
        return Err(Error::WrongDimension(N));
    }
    let w = weyl(c, g);
    let f = orthonormal_frame(&g.g);
    // W and ω in the orthonormal frame f
    let mut wo = [[[[T::zero(); 4]; 4]; 4]; 4];
    let mut om = [[T::zero(); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut s = T::zero();
            for i in 0..N {
                for j in 0..N {
                    s += f[i][a] * f[j][b] * omega[i][j];
                }
            }
            om[a][b] = s;
        }
    }
    // one slot at a time: W_{abcd} = f^i_a f^j_b f^k_c f^l_d W_{ijkl}
    for (i, wi) in w.iter().enumerate() {
        for (j, wij) in wi.iter().enumerate() {
            for (k, wijk) in wij.iter().enumerate() {
                for d in 0..4 {
                    wo[i][j][k][d] = (0..N).map(|l| f[l][d] * wijk[l]).sum();
                }
            }
        }
    }
    for slot in 0..3 {
        let src = wo;
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        wo[a][b][cc][d] = (0..4)
                            .map(|m| match slot {
                                0 => f[m][cc] * src[a][b][m][d],
                                1 => f[m][b] * src[a][m][cc][d],
                                _ => f[m][a] * src[m][b][cc][d],
                            })
                            .sum();
                    }
                }
            }
        }
    }
    let sign = match orientation {
        Orientation::Coordinate => T::one(),
        Orientation::Omega => {
            let pf = om[0][1] * om[2][3] - om[0][2] * om[1][3] + om[0][3] * om[1][2];
            if pf >= T::zero() {
                T::one()
            } else {
                -T::one()
            }
        }
    };
    let basis = self_dual_basis(sign);
    let mut block = [[T::zero(); 3]; 3];
    for (al, sa) in basis.iter().enumerate() {
        for (be, sb) in basis.iter().enumerate() {
            // ⟨W(σ_α), σ_β⟩ = ¼ σ_α^{ij} σ_β^{kl} W_{ijlk}
            let mut s = T::zero();
            for i in 0..4 {
                for j in 0..4 {
                    if sa[i][j] == T::zero() {
                        continue;
                    }
                    for k in 0..4 {
                        for l in 0..4 {
                            s += sa[i][j] * sb[k][l] * wo[i][j][l][k];
                        }
                    }
                }
            }
            block[al][be] = s * T::of(0.25);
        }
    }
    let omega_c: [T; 3] = std::array::from_fn(|al| form_inner4(&om, &basis[al]));
    let w_omega: [T; 3] = std::array::from_fn(|al| (0..3).map(|be| block[al][be] * omega_c[be]).sum());
    let nn: T = omega_c.iter().map(|x| *x * *x).sum();
    let mu = if nn > T::zero() { (0..3).map(|a| w_omega[a] * omega_c[a]).sum::<T>() / nn } else { T::zero() };
    let defect = (0..3).map(|a| (w_omega[a] - mu * omega_c[a]).powi(2)).sum::<T>().sqrt();
    Ok(WeylPlus { block, omega: omega_c, w_omega, mu, defect })
}

/// Orthonormal basis of Λ⁺ in an oriented orthonormal frame, as component
/// matrices; `sign = -1` selects the opposite orientation.
pub fn self_dual_basis<T: Scalar>(sign: T) -> [[[T; 4]; 4]; 3] {
    let r = T::one() / T::of(2.0).sqrt();
    let mut b = [[[T::zero(); 4]; 4]; 3];
    let put = |m: &mut [[T; 4]; 4], i: usize, j: usize, v: T| {
        m[i][j] = v;
        m[j][i] = -v;
    };
    // e12 + e34, e13 + e42, e14 + e23
    put(&mut b[0], 0, 1, r);
    put(&mut b[0], 2, 3, sign * r);
    put(&mut b[1], 0, 2, r);
    put(&mut b[1], 3, 1, sign * r);
    put(&mut b[2], 0, 3, r);
    put(&mut b[2], 1, 2, sign * r);
    b
}

/// Form inner product `½ Σ a_ij b_ij` in an orthonormal frame.
fn form_inner4<T: Scalar>(a: &[[T; 4]; 4], b: &[[T; 4]; 4]) -> T {
    let mut s = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            s += a[i][j] * b[i][j];
        }
    }
    s * T::of(0.5)
}

/// Checks that a metric jet has the symmetries it should.
pub fn check_metric_jet<T: Scalar, const N: usize>(j: &MetricJet2<T, N>, tol: &Tolerances) -> Result<()> {
    let mut defect = T::zero();
    for k in 0..N {
        defect = defect.max(mat::max_abs(&mat::skew(&j.dg[k])));
        for l in 0..N {
            defect = defect.max(mat::max_abs(&mat::skew(&j.ddg[k][l])));
            defect = defect.max(mat::max_abs(&mat::sub(&j.ddg[k][l], &j.ddg[l][k])));
        }
    }
    if defect.as_f64() > tol.antisymmetry.max(1e-10) {
        return Err(Error::SlotMismatch(format!("metric jet symmetry defect {:e}", defect.as_f64())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Analytic;

    #[test]
    fn flat_jet_is_flat() {
        let j = MetricJet2::<f64, 4>::flat();
        let c = christoffel(&j);
        assert!(c.gamma.iter().all(|m| mat::max_abs(m) == 0.0));
        let r = riemann(&c, &j.g);
        assert_eq!(r.scal, 0.0);
    }

    #[test]
    fn conformal_2d_matches_closed_form() {
        // g = e^{2φ} δ with φ = a x + b y
        let (a, b) = (0.3, -0.7);
        let x = [0.4f64, 0.9];
        let j = MetricJet2::from_fn(&x, |x| {
            let e = (x[0] * Jet1::cst(2.0 * a) + x[1] * Jet1::cst(2.0 * b)).fexp();
            [[e, Jet1::ZERO], [Jet1::ZERO, e]]
        })
        .unwrap();
        let c = christoffel(&j);
        let dphi = [a, b];
        for k in 0..2 {
            for i in 0..2 {
                for jj in 0..2 {
                    let dk = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
                    let want = dk(k, i) * dphi[jj] + dk(k, jj) * dphi[i] - dk(i, jj) * dphi[k];
                    assert!((c.gamma[i][k][jj] - want).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn sphere_has_ricci_equal_metric() {
        let x = [std::f64::consts::FRAC_PI_3, 0.2];
        let j = MetricJet2::from_fn(&x, |x| {
            let s = x[0].fsin();
            [[Jet1::ONE, Jet1::ZERO], [Jet1::ZERO, s * s]]
        })
        .unwrap();
        let c = christoffel(&j);
        let r = riemann(&c, &j.g);
        assert!(mat::max_abs(&mat::sub(&r.ric, &j.g.g)) < 1e-13);
        assert!((r.scal - 2.0).abs() < 1e-13);
    }

    #[test]
    fn scalar_rough_laplacian_of_sine() {
        // D*D sin(x1) = sin(x1) on flat space
        let x1 = 0.37f64;
        let c = christoffel(&MetricJet2::<f64, 4>::flat());
        let mut ddf = mat::zero::<f64, 4>();
        ddf[0][0] = -x1.sin();
        let df = [x1.cos(), 0.0, 0.0, 0.0];
        let v = rough_laplacian_scalar(&df, &ddf, &c.gamma, &mat::identity());
        assert!((v - x1.sin()).abs() < 1e-15);
    }

    #[test]
    fn general_covariant_derivative_of_metric_vanishes() {
        let x = [0.3f64, -0.2, 0.5, 0.1];
        let j = MetricJet2::from_fn(&x, |x| {
            let mut g = mat::identity::<Jet2<f64, 4>, 4>();
            g[0][0] = (x[1] * Jet1::cst(0.4)).fexp();
            g[0][2] = x[3].fsin() * Jet1::cst(0.2);
            g[2][0] = g[0][2];
            g[3][3] = Jet1::cst(1.5) + (x[0] + x[2]).fcos() * Jet1::cst(0.3);
            g
        })
        .unwrap();
        let c = christoffel(&j);
        let t = j.g.dense();
        let dt: Vec<_> = (0..4).map(|k| DenseTensor::from_form(&j.dg[k])).collect();
        let ng = covariant_derivative(&t, &dt, &c).unwrap();
        assert!(ng.max_abs() < 1e-14);
        assert_eq!(ng.rank(), 3);
    }
}
