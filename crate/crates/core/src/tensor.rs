//! Dense tensors at a single point.
//!
//! [`DenseTensor`] is the general container used at module boundaries and in
//! reports. The hot kernels work on fixed-size [`Mat`] arrays instead; the
//! conversions between the two are lossless.

use crate::error::{Error, Result};
use crate::mat::{self, Mat};
use crate::scalar::{Field, Scalar};
use crate::tol::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variance {
    Co,
    Contra,
}

/// Symmetry flag for the first two slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Symmetry {
    #[default]
    None,
    Symmetric,
    Antisymmetric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    pub dim: usize,
    pub variance: Vec<Variance>,
    pub symmetry: Symmetry,
    pub data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn zeros(dim: usize, variance: &[Variance]) -> Self {
        Self {
            dim,
            variance: variance.to_vec(),
            symmetry: Symmetry::None,
            data: vec![T::zero(); dim.pow(variance.len() as u32)],
        }
    }

    pub fn scalar(x: T) -> Self {
        Self { dim: 0, variance: vec![], symmetry: Symmetry::None, data: vec![x] }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let k = self.index(idx);
        self.data[k] = v;
    }

    /// Covariant 2-tensor from a matrix `m[a][b] = B(e_a, e_b)`.
    pub fn from_form<const N: usize>(m: &Mat<T, N>) -> Self {
        Self::from_mat(m, [Variance::Co, Variance::Co])
    }

    /// (1,1)-tensor from a matrix `m[a][b] = T^a_b`.
    pub fn from_endo<const N: usize>(m: &Mat<T, N>) -> Self {
        Self::from_mat(m, [Variance::Contra, Variance::Co])
    }

    pub fn from_mat<const N: usize>(m: &Mat<T, N>, v: [Variance; 2]) -> Self {
        let mut t = Self::zeros(N, &v);
        for a in 0..N {
            for b in 0..N {
                t.data[a * N + b] = m[a][b];
            }
        }
        t.symmetry = t.detect_symmetry();
        t
    }

    pub fn to_mat<const N: usize>(&self) -> Result<Mat<T, N>> {
        if self.rank() != 2 || self.dim != N {
            return Err(Error::SlotMismatch(format!(
                "expected rank 2 in dimension {N}, got rank {} in dimension {}",
                self.rank(),
                self.dim
            )));
        }
        Ok(std::array::from_fn(|a| std::array::from_fn(|b| self.data[a * N + b])))
    }

    /// Exact symmetry of the first slot pair, if any.
    fn detect_symmetry(&self) -> Symmetry {
        if self.rank() < 2 {
            return Symmetry::None;
        }
        let n = self.dim;
        let tail = self.data.len() / (n * n);
        let (mut s, mut a) = (true, true);
        for i in 0..n {
            for j in 0..n {
                for r in 0..tail {
                    let x = self.data[(i * n + j) * tail + r];
                    let y = self.data[(j * n + i) * tail + r];
                    s &= x == y;
                    a &= x == -y;
                }
            }
        }
        match (a, s) {
            (true, _) if self.data.iter().any(|x| *x != T::zero()) => Symmetry::Antisymmetric,
            (_, true) => Symmetry::Symmetric,
            _ => Symmetry::None,
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|x| *x *= c);
        t
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

/// A Riemannian metric at a point with its cached inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricPoint<T, const N: usize> {
    pub g: Mat<T, N>,
    pub ginv: Mat<T, N>,
}

impl<T: Scalar, const N: usize> MetricPoint<T, N> {
    pub fn new(g: Mat<T, N>) -> Result<Self> {
        Self::with_tol(g, &Tolerances::for_scalar::<T>())
    }

    pub fn with_tol(g: Mat<T, N>, tol: &Tolerances) -> Result<Self> {
        let asym = mat::max_abs(&mat::skew(&g));
        if asym.as_f64() > tol.antisymmetry * (1.0 + mat::max_abs(&g).as_f64()) {
            return Err(Error::DegenerateMetric(format!("not symmetric, defect {:e}", asym.as_f64())));
        }
        let ginv = metric_inverse(&g, tol)?;
        Ok(Self { g, ginv })
    }

    pub fn dense(&self) -> DenseTensor<T> {
        DenseTensor::from_form(&self.g)
    }
}

/// Inverse of an SPD metric, with the degeneracy and residual checks.
pub fn metric_inverse<T: Scalar, const N: usize>(g: &Mat<T, N>, tol: &Tolerances) -> Result<Mat<T, N>> {
    if g.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("metric".into()));
    }
    let (lam, _) = mat::sym_eigen(g);
    if lam[0].as_f64() <= tol.eps_metric {
        return Err(Error::DegenerateMetric(format!("min eigenvalue {:e}", lam[0].as_f64())));
    }
    let inv = mat::inverse(g).ok_or_else(|| Error::DegenerateMetric("singular".into()))?;
    let res = mat::max_abs(&mat::sub(&mat::mul(g, &inv), &mat::identity()));
    // Residual scales with the condition number; only reject clear failures.
    let cond = (lam[N - 1] / lam[0]).as_f64();
    if res.as_f64() > tol.inverse_residual * cond.max(1.0) {
        return Err(Error::DegenerateMetric(format!("inverse residual {:e}", res.as_f64())));
    }
    Ok(inv)
}

/// How a pair of slots is contracted.
#[derive(Clone, Copy, Debug)]
pub enum Pairing<'a, T, const N: usize> {
    /// One upper and one lower slot.
    Natural,
    /// Two like slots, contracted through the metric (inverse for lower slots).
    Metric(&'a MetricPoint<T, N>),
}

/// Contracts slots `a` and `b` of `t`.
pub fn contract<T: Scalar, const N: usize>(
    t: &DenseTensor<T>,
    a: usize,
    b: usize,
    pairing: Pairing<'_, T, N>,
) -> Result<DenseTensor<T>> {
    let r = t.rank();
    if a == b || a >= r || b >= r || t.dim != N {
        return Err(Error::SlotMismatch(format!("slots ({a},{b}) of a rank {r} tensor in dim {}", t.dim)));
    }
    let (a, b) = (a.min(b), a.max(b));
    let factor: Option<&Mat<T, N>> = match (pairing, t.variance[a], t.variance[b]) {
        (Pairing::Natural, x, y) if x != y => None,
        (Pairing::Metric(m), Variance::Co, Variance::Co) => Some(&m.ginv),
        (Pairing::Metric(m), Variance::Contra, Variance::Contra) => Some(&m.g),
        _ => {
            return Err(Error::SlotMismatch(format!(
                "variances {:?}/{:?} do not match the pairing",
                t.variance[a], t.variance[b]
            )))
        }
    };
    let variance: Vec<Variance> =
        t.variance.iter().enumerate().filter(|(i, _)| *i != a && *i != b).map(|(_, v)| *v).collect();
    let mut out = DenseTensor::zeros(N, &variance);
    let mut idx = vec![0usize; r];
    let mut oidx = vec![0usize; r - 2];
    for (k, slot) in out.data.iter_mut().enumerate() {
        // decode output multi-index
        let mut rem = k;
        for s in (0..r - 2).rev() {
            oidx[s] = rem % N;
            rem /= N;
        }
        let mut o = 0;
        for (s, v) in idx.iter_mut().enumerate() {
            if s != a && s != b {
                *v = oidx[o];
                o += 1;
            }
        }
        let mut acc = T::zero();
        for i in 0..N {
            idx[a] = i;
            match factor {
                None => {
                    idx[b] = i;
                    acc += t.get(&idx);
                }
                Some(f) => {
                    for j in 0..N {
                        idx[b] = j;
                        acc += f[i][j] * t.get(&idx);
                    }
                }
            }
        }
        *slot = acc;
    }
    Ok(out)
}

/// `|J^2 + 1|_inf`.
pub fn almost_complex_defect<T: Scalar, const N: usize>(j: &Mat<T, N>) -> T {
    mat::max_abs(&mat::add(&mat::mul(j, j), &mat::identity()))
}

fn check_j<T: Scalar, const N: usize>(j: &Mat<T, N>, tol: &Tolerances) -> Result<()> {
    let d = almost_complex_defect(j).as_f64();
    if d > tol.almost_complex {
        return Err(Error::NotAlmostComplex(d));
    }
    Ok(())
}

/// `W(J., J.)` for a bilinear form.
pub fn pull_jj<T: Scalar, const N: usize>(w: &Mat<T, N>, j: &Mat<T, N>) -> Mat<T, N> {
    mat::congruence(j, w)
}

/// Splits a bilinear form into its J-invariant and J-anti-invariant parts.
pub fn j_split<T: Scalar, const N: usize>(
    w: &Mat<T, N>,
    j: &Mat<T, N>,
    tol: &Tolerances,
) -> Result<(Mat<T, N>, Mat<T, N>)> {
    check_j(j, tol)?;
    let wj = pull_jj(w, j);
    let half = T::of(0.5);
    let plus = mat::scale(half, &mat::add(w, &wj));
    // w - plus keeps plus + minus == w up to one rounding per entry
    let minus = mat::sub(w, &plus);
    Ok((plus, minus))
}

/// Fully antisymmetric 3-form in dimension `N`, stored densely.
pub type Form3<T, const N: usize> = [[[T; N]; N]; N];

pub fn antisymmetry_defect3<T: Scalar, const N: usize>(phi: &Form3<T, N>) -> T {
    let mut d = T::zero();
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                let x = phi[a][b][c];
                d = d.max((x + phi[b][a][c]).abs()).max((x + phi[a][c][b]).abs()).max((x + phi[c][b][a]).abs());
            }
        }
    }
    d
}

/// `φ(J., J., .) + φ(J., ., J.) + φ(., J., J.)`
pub fn three_form_m<T: Field, const N: usize>(phi: &Form3<T, N>, j: &Mat<T, N>) -> Form3<T, N> {
    let one = apply_slot(&apply_slot(phi, j, 0), j, 1);
    let two = apply_slot(&apply_slot(phi, j, 0), j, 2);
    let three = apply_slot(&apply_slot(phi, j, 1), j, 2);
    let mut out = [[[T::ZERO; N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                out[a][b][c] = one[a][b][c] + two[a][b][c] + three[a][b][c];
            }
        }
    }
    out
}

/// Inserts `J` into one slot: `(φ ∘ J)(..., X, ...) = φ(..., JX, ...)`.
pub fn apply_slot<T: Field, const N: usize>(phi: &Form3<T, N>, j: &Mat<T, N>, slot: usize) -> Form3<T, N> {
    let mut out = [[[T::ZERO; N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                let mut s = T::ZERO;
                for p in 0..N {
                    s += match slot {
                        0 => j[p][a] * phi[p][b][c],
                        1 => j[p][b] * phi[a][p][c],
                        _ => j[p][c] * phi[a][b][p],
                    };
                }
                out[a][b][c] = s;
            }
        }
    }
    out
}

/// `(φ⁺, φ⁻)` without input validation; usable on jets.
pub fn form_type_parts<T: Field, const N: usize>(phi: &Form3<T, N>, j: &Mat<T, N>) -> (Form3<T, N>, Form3<T, N>) {
    let m = three_form_m(phi, j);
    let q = T::cst(0.25);
    let three = T::cst(3.0);
    let mut plus = [[[T::ZERO; N]; N]; N];
    let mut minus = plus;
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                plus[a][b][c] = q * (m[a][b][c] + three * phi[a][b][c]);
                minus[a][b][c] = phi[a][b][c] - plus[a][b][c];
            }
        }
    }
    (plus, minus)
}

/// Splits a 3-form into its (2,1)+(1,2) part `φ⁺` and its (3,0)+(0,3) part `φ⁻`.
///
/// The operator `M` above acts as `+1` on the first type and `-3` on the
/// second, so `φ⁺ = (M + 3) φ / 4`.
pub fn form_type_split<T: Scalar, const N: usize>(
    phi: &Form3<T, N>,
    j: &Mat<T, N>,
    tol: &Tolerances,
) -> Result<(Form3<T, N>, Form3<T, N>)> {
    check_j(j, tol)?;
    let scale = phi.iter().flatten().flatten().fold(T::one(), |m, x| m.max(x.abs()));
    let d = antisymmetry_defect3(phi).as_f64();
    if d > tol.antisymmetry * scale.as_f64() {
        return Err(Error::NotAntisymmetric(d));
    }
    let (plus, minus) = form_type_parts(phi, j);
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{identity, zero};

    fn std_j() -> Mat<f64, 4> {
        // J e1 = e2, J e3 = e4
        let mut j = zero();
        j[1][0] = 1.0;
        j[0][1] = -1.0;
        j[3][2] = 1.0;
        j[2][3] = -1.0;
        j
    }

    #[test]
    fn identity_inverse_and_trace() {
        let g = MetricPoint::new(identity::<f64, 4>()).unwrap();
        assert_eq!(g.ginv, identity());
        let g2 = MetricPoint::new(mat::scale(2.0, &identity::<f64, 4>())).unwrap();
        assert!(g2.ginv.iter().enumerate().all(|(i, r)| (r[i] - 0.5).abs() < 1e-15));
        let id = DenseTensor::from_endo(&identity::<f64, 4>());
        let tr = contract(&id, 0, 1, Pairing::<f64, 4>::Natural).unwrap();
        assert_eq!(tr.data, vec![4.0]);
        let gt = contract(&g2.dense(), 0, 1, Pairing::Metric(&g2)).unwrap();
        assert!((gt.data[0] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn omega_raised_contracts_to_dimension() {
        let g = MetricPoint::new(identity::<f64, 4>()).unwrap();
        let j = std_j();
        // ω_ab = g(J e_a, e_b)
        let om = mat::mul(&mat::transpose(&j), &g.g);
        let mut sum = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                sum += om[a][b] * om[a][b];
            }
        }
        let mut t = DenseTensor::zeros(4, &[Variance::Co; 4]);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        t.set(&[a, b, c, d], om[a][b] * om[c][d]);
                    }
                }
            }
        }
        let once = contract(&t, 0, 2, Pairing::Metric(&g)).unwrap();
        let twice = contract(&once, 0, 1, Pairing::Metric(&g)).unwrap();
        assert!((twice.data[0] - sum).abs() < 1e-14);
        assert_eq!(sum, 4.0);
    }

    #[test]
    fn slot_mismatch() {
        let g = MetricPoint::new(identity::<f64, 4>()).unwrap();
        let t = g.dense();
        assert!(contract(&t, 0, 1, Pairing::<f64, 4>::Natural).is_err());
        assert!(contract(&t, 0, 0, Pairing::Metric(&g)).is_err());
        assert!(contract(&t, 0, 3, Pairing::Metric(&g)).is_err());
    }

    #[test]
    fn degenerate_metric_rejected() {
        let mut g = identity::<f64, 4>();
        g[3][3] = 1e-10;
        assert!(matches!(MetricPoint::new(g), Err(Error::DegenerateMetric(_))));
    }

    #[test]
    fn j_split_of_compatible_pair() {
        let j = std_j();
        let g = identity::<f64, 4>();
        let om = mat::mul(&mat::transpose(&j), &g);
        let tol = Tolerances::default();
        let (p, m) = j_split(&om, &j, &tol).unwrap();
        assert_eq!(p, om);
        assert_eq!(m, zero());
        let (p, m) = j_split(&g, &j, &tol).unwrap();
        assert_eq!(p, g);
        assert_eq!(m, zero());
        assert!(j_split(&g, &identity(), &tol).is_err());
    }

    #[test]
    fn three_form_split_of_e123() {
        let j = std_j();
        let mut phi = [[[0.0f64; 4]; 4]; 4];
        let perms = [([0, 1, 2], 1.0), ([1, 2, 0], 1.0), ([2, 0, 1], 1.0), ([1, 0, 2], -1.0), ([0, 2, 1], -1.0), ([2, 1, 0], -1.0)];
        for (p, s) in perms {
            phi[p[0]][p[1]][p[2]] = s;
        }
        let tol = Tolerances::default();
        let (plus, minus) = form_type_split(&phi, &j, &tol).unwrap();
        let (pp, pm) = form_type_split(&plus, &j, &tol).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    assert!((pp[a][b][c] - plus[a][b][c]).abs() < 1e-15);
                    assert!(pm[a][b][c].abs() < 1e-15);
                    assert_eq!(plus[a][b][c] + minus[a][b][c], phi[a][b][c]);
                }
            }
        }
        // in real dimension 4 there are no (3,0)-forms
        assert!(minus.iter().flatten().flatten().all(|x| x.abs() < 1e-15));
    }
}
