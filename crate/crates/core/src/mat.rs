//! Fixed-size square matrices over a [`Field`].
//!
//! `m[a][b]` is row `a`, column `b`. Endomorphisms act on column vectors,
//! so `m[a][b] = T^a_b`; bilinear forms store `m[a][b] = B(e_a, e_b)`.

use crate::scalar::{Field, Scalar};

pub type Mat<F, const N: usize> = [[F; N]; N];
pub type Vector<F, const N: usize> = [F; N];

#[inline]
pub fn zero<F: Field, const N: usize>() -> Mat<F, N> {
    [[F::ZERO; N]; N]
}

#[inline]
pub fn identity<F: Field, const N: usize>() -> Mat<F, N> {
    let mut m = zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = F::ONE;
    }
    m
}

#[inline]
pub fn mul<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>) -> Mat<F, N> {
    let mut c = zero();
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            for j in 0..N {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

#[inline]
pub fn add<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>) -> Mat<F, N> {
    let mut c = *a;
    for i in 0..N {
        for j in 0..N {
            c[i][j] += b[i][j];
        }
    }
    c
}

#[inline]
pub fn sub<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>) -> Mat<F, N> {
    let mut c = *a;
    for i in 0..N {
        for j in 0..N {
            c[i][j] -= b[i][j];
        }
    }
    c
}

#[inline]
pub fn scale<F: Field, const N: usize>(s: F, a: &Mat<F, N>) -> Mat<F, N> {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x = s * *x;
        }
    }
    c
}

/// `a += s * b`
#[inline]
pub fn axpy<F: Field, const N: usize>(a: &mut Mat<F, N>, s: F, b: &Mat<F, N>) {
    for i in 0..N {
        for j in 0..N {
            a[i][j] += s * b[i][j];
        }
    }
}

#[inline]
pub fn transpose<F: Field, const N: usize>(a: &Mat<F, N>) -> Mat<F, N> {
    let mut t = zero();
    for i in 0..N {
        for j in 0..N {
            t[j][i] = a[i][j];
        }
    }
    t
}

/// `ab - ba`
#[inline]
pub fn commutator<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>) -> Mat<F, N> {
    sub(&mul(a, b), &mul(b, a))
}

#[inline]
pub fn trace<F: Field, const N: usize>(a: &Mat<F, N>) -> F {
    let mut t = F::ZERO;
    for (i, row) in a.iter().enumerate() {
        t += row[i];
    }
    t
}

/// Frobenius pairing `sum a_ij b_ij`.
#[inline]
pub fn dot<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>) -> F {
    let mut s = F::ZERO;
    for i in 0..N {
        for j in 0..N {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

/// `m v`
#[inline]
pub fn apply<F: Field, const N: usize>(m: &Mat<F, N>, v: &Vector<F, N>) -> Vector<F, N> {
    let mut r = [F::ZERO; N];
    for i in 0..N {
        for j in 0..N {
            r[i] += m[i][j] * v[j];
        }
    }
    r
}

/// `a^T b a`, the pullback of the bilinear form `b` by `a`.
#[inline]
pub fn congruence<F: Field, const N: usize>(a: &Mat<F, N>, b: &Mat<F, N>) -> Mat<F, N> {
    mul(&transpose(a), &mul(b, a))
}

pub fn sym<F: Field, const N: usize>(a: &Mat<F, N>) -> Mat<F, N> {
    let h = F::cst(0.5);
    let mut c = zero();
    for i in 0..N {
        for j in 0..N {
            c[i][j] = h * (a[i][j] + a[j][i]);
        }
    }
    c
}

pub fn skew<F: Field, const N: usize>(a: &Mat<F, N>) -> Mat<F, N> {
    let h = F::cst(0.5);
    let mut c = zero();
    for i in 0..N {
        for j in 0..N {
            c[i][j] = h * (a[i][j] - a[j][i]);
        }
    }
    c
}

/// Gauss-Jordan inverse without pivoting.
///
/// Works over jets as well as floats, which is the point: differentiating
/// through it gives `d(g^-1) = -g^-1 dg g^-1` for free. Only safe for
/// matrices with nonsingular leading minors (SPD metrics and their
/// perturbations), which is how it is used.
pub fn inverse_nopivot<F: Field, const N: usize>(a: &Mat<F, N>) -> Mat<F, N> {
    let mut m = *a;
    let mut inv = identity::<F, N>();
    for c in 0..N {
        let p = F::ONE / m[c][c];
        for j in 0..N {
            m[c][j] *= p;
            inv[c][j] *= p;
        }
        for r in 0..N {
            if r == c {
                continue;
            }
            let f = m[r][c];
            for j in 0..N {
                let mc = m[c][j];
                let ic = inv[c][j];
                m[r][j] -= f * mc;
                inv[r][j] -= f * ic;
            }
        }
    }
    inv
}

/// Partial-pivot inverse for plain floats. `None` if singular to working precision.
pub fn inverse<T: Scalar, const N: usize>(a: &Mat<T, N>) -> Option<Mat<T, N>> {
    let mut m = *a;
    let mut inv = identity::<T, N>();
    let scale_ref = max_abs(a);
    for c in 0..N {
        let mut piv = c;
        for r in c + 1..N {
            if m[r][c].abs() > m[piv][c].abs() {
                piv = r;
            }
        }
        if m[piv][c].abs() <= T::epsilon() * scale_ref * T::of(N as f64) {
            return None;
        }
        m.swap(c, piv);
        inv.swap(c, piv);
        let p = T::one() / m[c][c];
        for j in 0..N {
            m[c][j] *= p;
            inv[c][j] *= p;
        }
        for r in 0..N {
            if r == c {
                continue;
            }
            let f = m[r][c];
            if f == T::zero() {
                continue;
            }
            for j in 0..N {
                let mc = m[c][j];
                let ic = inv[c][j];
                m[r][j] -= f * mc;
                inv[r][j] -= f * ic;
            }
        }
    }
    Some(inv)
}

pub fn det<T: Scalar, const N: usize>(a: &Mat<T, N>) -> T {
    let mut m = *a;
    let mut d = T::one();
    for c in 0..N {
        let mut piv = c;
        for r in c + 1..N {
            if m[r][c].abs() > m[piv][c].abs() {
                piv = r;
            }
        }
        if m[piv][c] == T::zero() {
            return T::zero();
        }
        if piv != c {
            m.swap(c, piv);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..N {
            let f = m[r][c] / m[c][c];
            for j in c..N {
                let mc = m[c][j];
                m[r][j] -= f * mc;
            }
        }
    }
    d
}

pub fn max_abs<T: Scalar, const N: usize>(a: &Mat<T, N>) -> T {
    let mut s = T::zero();
    for row in a {
        for x in row {
            s = s.max(x.abs());
        }
    }
    s
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Returns eigenvalues (ascending) and the orthogonal matrix whose columns
/// are the corresponding eigenvectors.
pub fn sym_eigen<T: Scalar, const N: usize>(a: &Mat<T, N>) -> ([T; N], Mat<T, N>) {
    let mut m = sym(a);
    let mut v = identity::<T, N>();
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..N {
            for j in i + 1..N {
                off += m[i][j] * m[i][j];
            }
        }
        let norm = dot(&m, &m);
        if off <= T::epsilon() * T::epsilon() * norm * T::of(1e-2) || off == T::zero() {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if m[p][q] == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::of(2.0) * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..N {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: [usize; N] = std::array::from_fn(|i| i);
    idx.sort_by(|&a, &b| m[a][a].partial_cmp(&m[b][b]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = std::array::from_fn(|i| m[idx[i]][idx[i]]);
    let mut vecs = zero();
    for (c, &src) in idx.iter().enumerate() {
        for r in 0..N {
            vecs[r][c] = v[r][src];
        }
    }
    (vals, vecs)
}

/// Maps every entry through `f`.
pub fn map<A: Copy, B: Copy, const N: usize>(a: &[[A; N]; N], f: impl Fn(A) -> B) -> [[B; N]; N] {
    std::array::from_fn(|i| std::array::from_fn(|j| f(a[i][j])))
}
