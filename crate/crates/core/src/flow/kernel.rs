//! Direct evaluation of the symplectic curvature flow right-hand side from
//! a 2-jet of `(g, J)`, without forward-mode lifting. Agrees with
//! [`hermitian::scf_rhs`] to round-off; used on grids where the lifted path
//! is too slow.

use crate::error::{Error, Result};
use crate::geometry::{Coeffs, Deriv, Deriv2};
use crate::hermitian;
use crate::mat::{self, Mat};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScfPoint<T, const N: usize> {
    pub dg: Mat<T, N>,
    pub dj: Mat<T, N>,
    pub ric: Mat<T, N>,
    /// `|DJ|²`
    pub dj2: T,
    pub ginv: Mat<T, N>,
    pub gamma: Coeffs<T, N>,
    pub dgamma: [Coeffs<T, N>; N],
}

pub fn scf_point<T: Scalar, const N: usize>(
    g: &Mat<T, N>,
    dg: &Deriv<T, N>,
    ddg: &Deriv2<T, N>,
    j: &Mat<T, N>,
    dj: &Deriv<T, N>,
    ddj: &Deriv2<T, N>,
) -> Result<ScfPoint<T, N>> {
    let ginv = mat::inverse(g).ok_or_else(|| Error::DegenerateMetric("singular metric in flow kernel".into()))?;
    let half = T::of(0.5);
    // Γ_{b,ij} and Γ^a_{ij} stored as gamma[i][a][j]
    let mut low = [[[T::zero(); N]; N]; N];
    for b in 0..N {
        for i in 0..N {
            for jj in i..N {
                let v = half * (dg[i][b][jj] + dg[jj][b][i] - dg[b][i][jj]);
                low[b][i][jj] = v;
                low[b][jj][i] = v;
            }
        }
    }
    let mut gamma = [mat::zero::<T, N>(); N];
    for i in 0..N {
        for jj in i..N {
            for a in 0..N {
                let mut s = T::zero();
                for b in 0..N {
                    s += ginv[a][b] * low[b][i][jj];
                }
                gamma[i][a][jj] = s;
                gamma[jj][a][i] = s;
            }
        }
    }
    // ∂_kΓ^a_{ij} = g^{ab}(∂_kΓ_{b,ij} − ∂_k g_{bc} Γ^c_{ij})
    let mut dgamma = [[mat::zero::<T, N>(); N]; N];
    for k in 0..N {
        for i in 0..N {
            for jj in i..N {
                let mut tmp = [T::zero(); N];
                for b in 0..N {
                    let mut s = half * (ddg[k][i][b][jj] + ddg[k][jj][b][i] - ddg[k][b][i][jj]);
                    for c in 0..N {
                        s -= dg[k][b][c] * gamma[i][c][jj];
                    }
                    tmp[b] = s;
                }
                for a in 0..N {
                    let mut s = T::zero();
                    for b in 0..N {
                        s += ginv[a][b] * tmp[b];
                    }
                    dgamma[k][i][a][jj] = s;
                    dgamma[k][jj][a][i] = s;
                }
            }
        }
    }
    // Ric_{jk} = ∂_iΓ^i_{jk} − ∂_jΓ^i_{ik} + Γ^i_{ip}Γ^p_{jk} − Γ^i_{jp}Γ^p_{ik}
    let mut trg = [T::zero(); N];
    for p in 0..N {
        for i in 0..N {
            trg[p] += gamma[i][i][p];
        }
    }
    let mut ric = mat::zero::<T, N>();
    for jj in 0..N {
        for k in jj..N {
            let mut s = T::zero();
            for i in 0..N {
                s += dgamma[i][jj][i][k] - dgamma[jj][i][i][k];
            }
            for p in 0..N {
                s += trg[p] * gamma[jj][p][k];
                for i in 0..N {
                    s -= gamma[jj][i][p] * gamma[i][p][k];
                }
            }
            ric[jj][k] = s;
            ric[k][jj] = s;
        }
    }
    // ∇_kJ = ∂_kJ + [Γ_k, J]
    let nabla_j: Deriv<T, N> = std::array::from_fn(|k| mat::add(&dj[k], &mat::commutator(&gamma[k], j)));
    // D*DJ = −g^{kl}(∂_l∇_kJ + [Γ_l, ∇_kJ] − Γ^m_{lk}∇_mJ)
    let mut up: Coeffs<T, N> = [mat::zero(); N];
    let mut gsum = mat::zero::<T, N>();
    let mut hess = mat::zero::<T, N>();
    let mut cm = [T::zero(); N];
    for k in 0..N {
        for l in 0..N {
            let w = ginv[k][l];
            mat::axpy(&mut up[l], w, &gamma[k]);
            mat::axpy(&mut gsum, w, &dgamma[l][k]);
            mat::axpy(&mut hess, w, &ddj[l][k]);
            for m in 0..N {
                cm[m] += w * gamma[l][m][k];
            }
        }
    }
    let mut lap = mat::add(&hess, &mat::commutator(&gsum, j));
    for l in 0..N {
        lap = mat::add(&lap, &mat::commutator(&up[l], &dj[l]));
        lap = mat::add(&lap, &mat::commutator(&up[l], &nabla_j[l]));
        mat::axpy(&mut lap, -cm[l], &nabla_j[l]);
    }
    let rough = mat::scale(-T::one(), &lap);
    let q = hermitian::quadratic_operators(&nabla_j, j, g, &ginv);
    let mut dgt = mat::scale(T::of(-2.0), &ric);
    mat::axpy(&mut dgt, half, &q.b1);
    mat::axpy(&mut dgt, -T::one(), &q.b2);
    let mut djt = mat::scale(-T::one(), &rough);
    djt = mat::add(&djt, &q.script_n);
    djt = mat::add(&djt, &hermitian::script_r(&ric, j, &ginv));
    Ok(ScfPoint { dg: dgt, dj: djt, ric, dj2: mat::dot(&ginv, &q.b1), ginv, gamma, dgamma })
}

impl<T: Scalar, const N: usize> ScfPoint<T, N> {
    /// Levi-Civita curvature endomorphisms `R(e_i, e_j)`.
    pub fn curvature_endos(&self) -> crate::geometry::Quad<T, N> {
        crate::geometry::curvature_endos(&self.gamma, &self.dgamma)
    }
}
