//! Periodic fields on the flat torus `(R/2πZ)^N` and finite differences.
//!
//! Storage is component-major: component `c` of point `p` lives at
//! `data[c * npts + p]`, with `p = Σ_a i_a m^a`. All derivatives are built
//! from one 1d central-difference operator per axis; second derivatives are
//! compositions of it, so mixed partials commute exactly and the discrete
//! exterior derivative squares to zero up to round-off.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Deriv, Deriv2};
use crate::mat::{self, Mat};
use crate::scalar::Scalar;
use crate::tensor::Variance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub dim: usize,
    pub m: usize,
    pub order: usize,
}

impl GridSpec {
    pub fn new(dim: usize, m: usize, order: usize) -> Result<Self> {
        if dim != 4 && dim != 6 {
            return Err(Error::WrongDimension(dim));
        }
        if m < 8 {
            return Err(Error::Config(format!("grid needs m >= 8, got {m}")));
        }
        if order != 2 && order != 4 {
            return Err(Error::Config(format!("stencil order must be 2 or 4, got {order}")));
        }
        Ok(Self { dim, m, order })
    }

    pub fn h(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn npts(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn multi_index(&self, mut p: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for o in out.iter_mut() {
            *o = p % self.m;
            p /= self.m;
        }
        out
    }

    pub fn point(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * self.m + i % self.m)
    }

    pub fn coords<const N: usize>(&self, p: usize) -> [f64; N] {
        assert_eq!(N, self.dim);
        let idx = self.multi_index(p);
        std::array::from_fn(|a| idx[a] as f64 * self.h())
    }

    /// Cell volume `h^N` of the flat torus.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn stencil(&self) -> Stencil {
        Stencil::new(self.order, self.h())
    }

    fn check<const N: usize>(&self) {
        assert_eq!(N, self.dim, "field dimension does not match const parameter");
    }
}

/// First-derivative weights and their self-composition, stored as
/// half-stencils so constants are annihilated exactly in floating point:
/// `Df(0) = Σ_{s>0} w_s (f(s) − f(−s))`,
/// `DDf(0) = Σ_{s>0} v_s ((f(s) − f(0)) + (f(−s) − f(0)))`.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub d1: Vec<(isize, f64)>,
    pub d11: Vec<(isize, f64)>,
    pub reach: isize,
}

impl Stencil {
    pub fn new(order: usize, h: f64) -> Self {
        let d1: Vec<(isize, f64)> = match order {
            2 => vec![(1, 0.5 / h)],
            _ => vec![(1, 8.0 / (12.0 * h)), (2, -1.0 / (12.0 * h))],
        };
        let reach = d1.iter().map(|x| x.0).max().unwrap();
        // full D weights, then the composition
        let full: Vec<(isize, f64)> = d1.iter().flat_map(|&(o, w)| [(o, w), (-o, -w)]).collect();
        let mut w = vec![0.0; (4 * reach + 1) as usize];
        for &(a, wa) in &full {
            for &(b, wb) in &full {
                w[(a + b + 2 * reach) as usize] += wa * wb;
            }
        }
        let d11 = (1..=2 * reach)
            .map(|o| (o, w[(o + 2 * reach) as usize]))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        Self { d1, d11, reach }
    }

    /// Full `(offset, weight)` list of `D∘D` including the centre.
    pub fn d11_full(&self) -> Vec<(isize, f64)> {
        let c: f64 = -2.0 * self.d11.iter().map(|x| x.1).sum::<f64>();
        let mut out = vec![(0, c)];
        for &(o, w) in &self.d11 {
            out.push((o, w));
            out.push((-o, w));
        }
        out
    }

    #[inline]
    fn apply1<T: Scalar>(&self, f: impl Fn(isize) -> T) -> T {
        self.d1.iter().fold(T::zero(), |s, &(o, w)| s + T::of(w) * (f(o) - f(-o)))
    }

    #[inline]
    fn apply11<T: Scalar>(&self, f: impl Fn(isize) -> T) -> T {
        let c = f(0);
        self.d11.iter().fold(T::zero(), |s, &(o, w)| s + T::of(w) * ((f(o) - c) + (f(-o) - c)))
    }
}

/// Index arithmetic around one point. Stack-only: at most 6 axes and
/// offsets up to ±4.
struct Neighbors {
    base: isize,
    /// `shift[a][s + 4] = index change for offset s along axis a`
    shift: [[isize; 9]; 6],
}

impl Neighbors {
    fn new(spec: &GridSpec, p: usize, r: isize) -> Self {
        debug_assert!(r <= 4 && spec.dim <= 6);
        let m = spec.m as isize;
        let mut stride = 1isize;
        let mut shift = [[0isize; 9]; 6];
        let mut q = p;
        for row in shift.iter_mut().take(spec.dim) {
            let i = (q % spec.m) as isize;
            q /= spec.m;
            for s in -r..=r {
                row[(s + 4) as usize] = ((i + s).rem_euclid(m) - i) * stride;
            }
            stride *= m;
        }
        Self { base: p as isize, shift }
    }

    #[inline(always)]
    fn at(&self, a: usize, s: isize) -> usize {
        (self.base + self.shift[a][(s + 4) as usize]) as usize
    }

    #[inline(always)]
    fn at2(&self, a: usize, s: isize, b: usize, t: isize) -> usize {
        (self.base + self.shift[a][(s + 4) as usize] + self.shift[b][(t + 4) as usize]) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    pub spec: GridSpec,
    pub variance: Vec<Variance>,
    pub data: Vec<T>,
}

impl<T: Scalar> GridField<T> {
    pub fn zeros(spec: GridSpec, variance: &[Variance]) -> Self {
        let comps = spec.dim.pow(variance.len() as u32);
        Self { spec, variance: variance.to_vec(), data: vec![T::zero(); comps * spec.npts()] }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn comps(&self) -> usize {
        self.spec.dim.pow(self.rank() as u32)
    }

    pub fn npts(&self) -> usize {
        self.spec.npts()
    }

    pub fn comp(&self, c: usize) -> &[T] {
        let n = self.npts();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.npts();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, p: usize) -> T {
        self.data[c * self.npts() + p]
    }

    /// Fills every point from per-point component vectors, in parallel.
    pub fn from_points(spec: GridSpec, variance: &[Variance], f: impl Fn(usize) -> Vec<T> + Sync) -> Self {
        let mut out = Self::zeros(spec, variance);
        let comps = out.comps();
        let npts = spec.npts();
        let vals: Vec<Vec<T>> = (0..npts).into_par_iter().map(&f).collect();
        for (p, v) in vals.into_iter().enumerate() {
            assert_eq!(v.len(), comps);
            for (c, x) in v.into_iter().enumerate() {
                out.data[c * npts + p] = x;
            }
        }
        out
    }

    pub fn scalar_from_fn<const N: usize>(spec: GridSpec, f: impl Fn(&[f64; N]) -> f64 + Sync) -> Self {
        spec.check::<N>();
        Self::from_points(spec, &[], |p| vec![T::of(f(&spec.coords::<N>(p)))])
    }

    pub fn from_mat_fn<const N: usize>(
        spec: GridSpec,
        variance: [Variance; 2],
        f: impl Fn(&[f64; N]) -> Mat<T, N> + Sync,
    ) -> Self {
        spec.check::<N>();
        Self::from_points(spec, &variance, |p| f(&spec.coords::<N>(p)).iter().flatten().copied().collect())
    }

    pub fn from_mats<const N: usize>(spec: GridSpec, variance: [Variance; 2], mats: &[Mat<T, N>]) -> Self {
        spec.check::<N>();
        let mut out = Self::zeros(spec, &variance);
        let n = spec.npts();
        assert_eq!(mats.len(), n);
        for (c, col) in out.data.chunks_exact_mut(n).enumerate() {
            let (a, b) = (c / N, c % N);
            for (x, m) in col.iter_mut().zip(mats) {
                *x = m[a][b];
            }
        }
        out
    }

    pub fn vec_at<const N: usize>(&self, p: usize) -> [T; N] {
        std::array::from_fn(|a| self.get(a, p))
    }

    pub fn mat_at<const N: usize>(&self, p: usize) -> Mat<T, N> {
        std::array::from_fn(|a| std::array::from_fn(|b| self.get(a * N + b, p)))
    }

    pub fn set_mat<const N: usize>(&mut self, p: usize, m: &Mat<T, N>) {
        let n = self.npts();
        for a in 0..N {
            for b in 0..N {
                self.data[(a * N + b) * n + p] = m[a][b];
            }
        }
    }

    pub fn mats<const N: usize>(&self) -> Vec<Mat<T, N>> {
        let n = self.npts();
        assert_eq!(self.data.len(), N * N * n);
        let mut out = vec![mat::zero::<T, N>(); n];
        for (c, col) in self.data.chunks_exact(n).enumerate() {
            let (a, b) = (c / N, c % N);
            for (m, x) in out.iter_mut().zip(col) {
                m[a][b] = *x;
            }
        }
        out
    }

    /// Errors with `NonFinite` naming the first bad component.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        if let Some(i) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{what}: component {} at point {}", i / self.npts(), i % self.npts())));
        }
        Ok(())
    }

    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!(self.data.len(), other.data.len());
        self.data.par_iter_mut().zip(other.data.par_iter()).for_each(|(a, b)| *a += s * *b);
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { spec: self.spec, variance: self.variance.clone(), data: self.data.iter().map(|x| *x * s).collect() }
    }

    pub fn max_abs(&self) -> T {
        sup(&self.data)
    }

    /// `D_axis` applied to every component.
    pub fn derivative(&self, axis: usize) -> Self {
        let st = self.spec.stencil();
        let npts = self.npts();
        let mut out = Self::zeros(self.spec, &self.variance);
        for c in 0..self.comps() {
            let src = self.comp(c);
            let vals: Vec<T> = (0..npts)
                .into_par_iter()
                .map(|p| {
                    let nb = Neighbors::new(&self.spec, p, st.reach);
                    st.apply1(|o| src[nb.at(axis, o)])
                })
                .collect();
            out.comp_mut(c).copy_from_slice(&vals);
        }
        out
    }
}

/// Reusable per-point gather of first and second differences.
pub struct JetGather {
    spec: GridSpec,
    st: Stencil,
}

impl JetGather {
    pub fn new(spec: GridSpec) -> Self {
        Self { spec, st: spec.stencil() }
    }

    /// Value, gradient and Hessian of each listed component slice at `p`.
    fn comp_jet<T: Scalar, const N: usize>(&self, nb: &Neighbors, src: &[T], out_d: &mut [T; N], out_dd: &mut [[T; N]; N]) {
        let st = &self.st;
        for a in 0..N {
            out_d[a] = st.apply1(|o| src[nb.at(a, o)]);
            out_dd[a][a] = st.apply11(|o| src[nb.at(a, o)]);
            for b in a + 1..N {
                let s = st.apply1(|o| st.apply1(|q| src[nb.at2(a, o, b, q)]));
                out_dd[a][b] = s;
                out_dd[b][a] = s;
            }
        }
    }

    /// 2-jet of a matrix-valued field at a point: `(A, ∂A, ∂∂A)`.
    pub fn mat_jet2<T: Scalar, const N: usize>(&self, f: &GridField<T>, p: usize) -> (Mat<T, N>, Deriv<T, N>, Deriv2<T, N>) {
        let nb = Neighbors::new(&self.spec, p, 2 * self.st.reach);
        let mut v = mat::zero::<T, N>();
        let mut d = [mat::zero::<T, N>(); N];
        let mut dd = [[mat::zero::<T, N>(); N]; N];
        let mut gd = [T::zero(); N];
        let mut gdd = [[T::zero(); N]; N];
        for r in 0..N {
            for c in 0..N {
                let src = f.comp(r * N + c);
                v[r][c] = src[p];
                self.comp_jet(&nb, src, &mut gd, &mut gdd);
                for a in 0..N {
                    d[a][r][c] = gd[a];
                    for b in 0..N {
                        dd[a][b][r][c] = gdd[a][b];
                    }
                }
            }
        }
        (v, d, dd)
    }

    /// 2-jet at `p` of a point-major matrix field (see [`GridField::mats`]).
    /// Same numbers as [`Self::mat_jet2`], with whole-matrix reads.
    pub fn mats_jet2<T: Scalar, const N: usize>(&self, f: &[Mat<T, N>], p: usize) -> (Mat<T, N>, Deriv<T, N>, Deriv2<T, N>) {
        let nb = Neighbors::new(&self.spec, p, 2 * self.st.reach);
        let st = &self.st;
        let v = f[p];
        let mut d = [mat::zero::<T, N>(); N];
        let mut dd = [[mat::zero::<T, N>(); N]; N];
        for a in 0..N {
            for &(o, w) in &st.d1 {
                let w = T::of(w);
                let (x, y) = (&f[nb.at(a, o)], &f[nb.at(a, -o)]);
                for r in 0..N {
                    for c in 0..N {
                        d[a][r][c] += w * (x[r][c] - y[r][c]);
                    }
                }
            }
            for &(o, w) in &st.d11 {
                let w = T::of(w);
                let (x, y) = (&f[nb.at(a, o)], &f[nb.at(a, -o)]);
                for r in 0..N {
                    for c in 0..N {
                        dd[a][a][r][c] += w * ((x[r][c] - v[r][c]) + (y[r][c] - v[r][c]));
                    }
                }
            }
            for b in a + 1..N {
                let mut acc = mat::zero::<T, N>();
                for &(o, wo) in &st.d1 {
                    let mut inner = [mat::zero::<T, N>(); 2];
                    for (k, so) in [o, -o].into_iter().enumerate() {
                        for &(q, wq) in &st.d1 {
                            let wq = T::of(wq);
                            let (x, y) = (&f[nb.at2(a, so, b, q)], &f[nb.at2(a, so, b, -q)]);
                            for r in 0..N {
                                for c in 0..N {
                                    inner[k][r][c] += wq * (x[r][c] - y[r][c]);
                                }
                            }
                        }
                    }
                    let wo = T::of(wo);
                    for r in 0..N {
                        for c in 0..N {
                            acc[r][c] += wo * (inner[0][r][c] - inner[1][r][c]);
                        }
                    }
                }
                dd[a][b] = acc;
                dd[b][a] = acc;
            }
        }
        (v, d, dd)
    }

    /// First derivatives of a point-major matrix field at every point.
    pub fn mats_deriv<T: Scalar, const N: usize>(&self, f: &[Mat<T, N>]) -> Vec<Deriv<T, N>> {
        (0..f.len())
            .into_par_iter()
            .map(|p| {
                let nb = Neighbors::new(&self.spec, p, self.st.reach);
                let mut d = [mat::zero::<T, N>(); N];
                for (a, da) in d.iter_mut().enumerate() {
                    for &(o, w) in &self.st.d1 {
                        let w = T::of(w);
                        let (x, y) = (&f[nb.at(a, o)], &f[nb.at(a, -o)]);
                        for r in 0..N {
                            for c in 0..N {
                                da[r][c] += w * (x[r][c] - y[r][c]);
                            }
                        }
                    }
                }
                d
            })
            .collect()
    }

    /// [`Self::mats_jet2`] reusing precomputed first derivatives `df` from
    /// [`Self::mats_deriv`]; bitwise identical result.
    pub fn mats_jet2_pre<T: Scalar, const N: usize>(
        &self,
        f: &[Mat<T, N>],
        df: &[Deriv<T, N>],
        p: usize,
    ) -> (Mat<T, N>, Deriv<T, N>, Deriv2<T, N>) {
        let nb = Neighbors::new(&self.spec, p, 2 * self.st.reach);
        let st = &self.st;
        let v = f[p];
        let d = df[p];
        let mut dd = [[mat::zero::<T, N>(); N]; N];
        for a in 0..N {
            for &(o, w) in &st.d11 {
                let w = T::of(w);
                let (x, y) = (&f[nb.at(a, o)], &f[nb.at(a, -o)]);
                for r in 0..N {
                    for c in 0..N {
                        dd[a][a][r][c] += w * ((x[r][c] - v[r][c]) + (y[r][c] - v[r][c]));
                    }
                }
            }
            for b in a + 1..N {
                let mut acc = mat::zero::<T, N>();
                for &(o, wo) in &st.d1 {
                    let wo = T::of(wo);
                    let (x, y) = (&df[nb.at(a, o)][b], &df[nb.at(a, -o)][b]);
                    for r in 0..N {
                        for c in 0..N {
                            acc[r][c] += wo * (x[r][c] - y[r][c]);
                        }
                    }
                }
                dd[a][b] = acc;
                dd[b][a] = acc;
            }
        }
        (v, d, dd)
    }

    /// 1-jet of a matrix-valued field at a point.
    pub fn mat_jet1<T: Scalar, const N: usize>(&self, f: &GridField<T>, p: usize) -> (Mat<T, N>, Deriv<T, N>) {
        let nb = Neighbors::new(&self.spec, p, self.st.reach);
        let mut v = mat::zero::<T, N>();
        let mut d = [mat::zero::<T, N>(); N];
        for r in 0..N {
            for c in 0..N {
                let src = f.comp(r * N + c);
                v[r][c] = src[p];
                for a in 0..N {
                    d[a][r][c] = self.st.apply1(|o| src[nb.at(a, o)]);
                }
            }
        }
        (v, d)
    }

    /// Gradient of one component at a point.
    pub fn grad<T: Scalar, const N: usize>(&self, src: &[T], p: usize) -> [T; N] {
        let nb = Neighbors::new(&self.spec, p, self.st.reach);
        std::array::from_fn(|a| self.st.apply1(|o| src[nb.at(a, o)]))
    }
}

fn variance_all_co(rank: usize) -> Vec<Variance> {
    vec![Variance::Co; rank]
}

/// Enumerates the index tuples of a rank-`k` tensor in component order.
fn tuples(dim: usize, k: usize) -> Vec<Vec<usize>> {
    let n = dim.pow(k as u32);
    (0..n)
        .map(|mut c| {
            let mut t = vec![0; k];
            for s in (0..k).rev() {
                t[s] = c % dim;
                c /= dim;
            }
            t
        })
        .collect()
}

fn comp_index(dim: usize, t: &[usize]) -> usize {
    t.iter().fold(0, |acc, &i| acc * dim + i)
}

/// Coordinate exterior derivative of a `k`-form field (all lower indices,
/// antisymmetric components): `(dφ)_{i₀…i_k} = Σ_s (−1)^s ∂_{i_s} φ_{…î_s…}`.
pub fn exterior_d<T: Scalar>(phi: &GridField<T>) -> GridField<T> {
    let dim = phi.spec.dim;
    let k = phi.rank();
    let derivs: Vec<GridField<T>> = (0..dim).map(|a| phi.derivative(a)).collect();
    let mut out = GridField::zeros(phi.spec, &variance_all_co(k + 1));
    for t in tuples(dim, k + 1) {
        let c = comp_index(dim, &t);
        let mut acc = vec![T::zero(); phi.npts()];
        for s in 0..=k {
            let mut rest = t.clone();
            let a = rest.remove(s);
            let sign = if s % 2 == 0 { T::one() } else { -T::one() };
            let src = derivs[a].comp(comp_index(dim, &rest));
            for (x, y) in acc.iter_mut().zip(src) {
                *x += sign * *y;
            }
        }
        out.comp_mut(c).copy_from_slice(&acc);
    }
    out
}

/// `d*φ = −g^{ka} ∇_k φ_{a…}` for a `k`-form field, `k ≥ 1`, with the
/// Levi-Civita connection of the metric field `g`.
pub fn codifferential<T: Scalar, const N: usize>(phi: &GridField<T>, g: &GridField<T>) -> Result<GridField<T>> {
    phi.spec.check::<N>();
    let k = phi.rank();
    if k == 0 {
        return Err(Error::SlotMismatch("codifferential of a function".into()));
    }
    let gather = JetGather::new(phi.spec);
    let ttail = tuples(N, k - 1);
    let ncomp = N.pow(k as u32);
    let vals: Vec<Result<Vec<T>>> = (0..phi.npts())
        .into_par_iter()
        .map(|p| {
            let (gv, dg) = gather.mat_jet1::<T, N>(g, p);
            let ginv = crate::tensor::metric_inverse(&gv, &crate::tol::Tolerances::for_scalar::<T>())?;
            let gamma = crate::geometry::christoffel_coeffs(&ginv, &dg);
            let vals: Vec<T> = (0..ncomp).map(|c| phi.get(c, p)).collect();
            let grads: Vec<[T; N]> = (0..ncomp).map(|c| gather.grad::<T, N>(phi.comp(c), p)).collect();
            // ∇_k φ_{a b…}
            let nabla = |kk: usize, idx: &[usize]| -> T {
                let mut s = grads[comp_index(N, idx)][kk];
                let mut tmp = idx.to_vec();
                for slot in 0..idx.len() {
                    let orig = tmp[slot];
                    for m in 0..N {
                        tmp[slot] = m;
                        s -= gamma[kk][m][orig] * vals[comp_index(N, &tmp)];
                    }
                    tmp[slot] = orig;
                }
                s
            };
            Ok(ttail
                .iter()
                .map(|tail| {
                    let mut s = T::zero();
                    for kk in 0..N {
                        for a in 0..N {
                            let w = ginv[kk][a];
                            if w == T::zero() {
                                continue;
                            }
                            let mut idx = vec![a];
                            idx.extend_from_slice(tail);
                            s += w * nabla(kk, &idx);
                        }
                    }
                    -s
                })
                .collect())
        })
        .collect();
    let vals: Vec<Vec<T>> = vals.into_iter().collect::<Result<_>>()?;
    let mut out = GridField::zeros(phi.spec, &variance_all_co(k - 1));
    let npts = phi.npts();
    for (p, v) in vals.into_iter().enumerate() {
        for (c, x) in v.into_iter().enumerate() {
            out.data[c * npts + p] = x;
        }
    }
    Ok(out)
}

/// `Δ_d = d d* + d* d`
pub fn hodge_laplacian<T: Scalar, const N: usize>(phi: &GridField<T>, g: &GridField<T>) -> Result<GridField<T>> {
    let dphi = exterior_d(phi);
    let mut out = codifferential::<T, N>(&dphi, g)?;
    if phi.rank() > 0 {
        let dd = exterior_d(&codifferential::<T, N>(phi, g)?);
        out.axpy(T::one(), &dd);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Sup,
    /// `(∫ f² dV)^{1/2}` with the flat volume `h^N` per cell.
    L2,
    Mean,
}

const BLOCK: usize = 1024;

/// Sum with a fixed blocking and a fixed pairwise tree, independent of the
/// number of worker threads.
pub fn fixed_sum<T: Scalar>(v: &[T]) -> T {
    let mut partial: Vec<T> = v.par_chunks(BLOCK).map(|c| c.iter().fold(T::zero(), |s, x| s + *x)).collect();
    if partial.is_empty() {
        return T::zero();
    }
    while partial.len() > 1 {
        partial = partial.chunks(2).map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] }).collect();
    }
    partial[0]
}

pub fn sup<T: Scalar>(v: &[T]) -> T {
    v.par_chunks(BLOCK).map(|c| c.iter().fold(T::zero(), |s, x| s.max(x.abs()))).reduce(T::zero, |a, b| a.max(b))
}

pub fn reduce<T: Scalar>(spec: &GridSpec, v: &[T], kind: Reduce) -> T {
    match kind {
        Reduce::Sup => sup(v),
        Reduce::Mean => fixed_sum(v) / T::of(v.len() as f64),
        Reduce::L2 => {
            let sq: Vec<T> = v.par_iter().map(|x| *x * *x).collect();
            (fixed_sum(&sq) * T::of(spec.cell_volume())).sqrt()
        }
    }
}

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"AKFLOW01";

/// Writes one field: 64-byte header then little-endian `f64` data.
pub fn write_snapshot<T: Scalar>(path: &Path, f: &GridField<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = [0u8; 64];
    header[..8].copy_from_slice(SNAPSHOT_MAGIC);
    let mask = f.variance.iter().enumerate().fold(0u64, |m, (i, v)| if *v == Variance::Contra { m | (1 << i) } else { m });
    let fields = [f.spec.dim as u64, f.spec.m as u64, f.rank() as u64, mask, f.comps() as u64, f.spec.order as u64];
    for (i, x) in fields.iter().enumerate() {
        header[8 + 8 * i..16 + 8 * i].copy_from_slice(&x.to_le_bytes());
    }
    w.write_all(&header)?;
    for x in &f.data {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<T: Scalar>(path: &Path) -> Result<GridField<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 64];
    r.read_exact(&mut header)?;
    if &header[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Config(format!("{}: not a snapshot file", path.display())));
    }
    let word = |i: usize| u64::from_le_bytes(header[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
    let order = if word(5) == 0 { 4 } else { word(5) };
    let spec = GridSpec::new(word(0), word(1), order)?;
    let rank = word(2);
    let mask = word(3);
    let variance: Vec<Variance> =
        (0..rank).map(|i| if mask & (1 << i) != 0 { Variance::Contra } else { Variance::Co }).collect();
    let mut f = GridField::zeros(spec, &variance);
    if word(4) != f.comps() {
        return Err(Error::Config(format!("{}: component count mismatch", path.display())));
    }
    let mut buf = [0u8; 8];
    for x in f.data.iter_mut() {
        r.read_exact(&mut buf)?;
        *x = T::of(f64::from_le_bytes(buf));
    }
    f.check_finite("snapshot")?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize) -> GridSpec {
        GridSpec::new(4, m, 4).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(5, 16, 4).is_err());
        assert!(GridSpec::new(4, 4, 4).is_err());
        assert!(GridSpec::new(4, 16, 3).is_err());
        let s = spec(8);
        for p in [0, 17, 4095] {
            assert_eq!(s.point(&s.multi_index(p)), p);
        }
    }

    #[test]
    fn stencil_composition() {
        let st = Stencil::new(4, 1.0);
        let full = st.d11_full();
        // D∘D annihilates constants and linear functions, maps x² to 2 and x⁴ to 12x²
        let mom = |k: i32| full.iter().map(|x| x.1 * (x.0 as f64).powi(k)).sum::<f64>();
        assert!(mom(0).abs() < 1e-15 && mom(1).abs() < 1e-15 && (mom(2) - 2.0).abs() < 1e-14);
        assert!(mom(3).abs() < 1e-14 && mom(4).abs() < 1e-13);
        assert_eq!(full.len(), 9);
    }

    #[test]
    fn derivative_of_sine_is_fourth_order() {
        let err = |m: usize| {
            let s = spec(m);
            let f = GridField::<f64>::scalar_from_fn::<4>(s, |x| x[0].sin());
            let d = f.derivative(0);
            (0..s.npts()).map(|p| (d.get(0, p) - s.coords::<4>(p)[0].cos()).abs()).fold(0.0, f64::max)
        };
        let (a, b) = (err(8), err(16));
        assert!((a / b).log2() > 3.5, "{a} {b}");
        assert!(b < 1e-3);
    }

    #[test]
    fn constant_field_has_zero_jets() {
        let s = spec(8);
        let f = GridField::<f64>::from_mat_fn::<4>(s, [Variance::Co; 2], |_| mat::identity());
        let (_, d, dd) = JetGather::new(s).mat_jet2::<f64, 4>(&f, 123);
        assert!(d.iter().chain(dd.iter().flatten()).all(|m| mat::max_abs(m) == 0.0));
    }

    #[test]
    fn mixed_partials_commute_exactly() {
        let s = spec(8);
        let f = GridField::<f64>::from_mat_fn::<4>(s, [Variance::Co; 2], |x| {
            let v = (x[0] + 2.0 * x[1]).sin() * x[2].cos() + (x[3] - x[1]).cos();
            std::array::from_fn(|a| std::array::from_fn(|b| v * (1.0 + a as f64) + b as f64))
        });
        let gather = JetGather::new(s);
        let (_, _, dd) = gather.mat_jet2::<f64, 4>(&f, 777);
        let d01 = f.derivative(0).derivative(1);
        assert!((dd[0][1][2][3] - d01.get(2 * 4 + 3, 777)).abs() < 1e-13);
        assert_eq!(dd[0][1], dd[1][0]);
        let d22 = f.derivative(2).derivative(2);
        assert!((dd[2][2][1][1] - d22.get(5, 777)).abs() < 1e-13);
    }

    #[test]
    fn d_squared_vanishes() {
        let s = spec(8);
        let a = GridField::<f64>::from_points(s, &[Variance::Co], |p| {
            let x = s.coords::<4>(p);
            vec![x[1].sin() * x[2].cos(), (x[0] + x[3]).cos(), (2.0 * x[1]).sin(), x[0].sin() * x[1].sin()]
        });
        let da = exterior_d(&a);
        assert!(da.max_abs() > 0.1);
        assert!(exterior_d(&da).max_abs() < 1e-13);
        let f = GridField::<f64>::scalar_from_fn::<4>(s, |x| (x[0] - x[2]).sin() * x[3].cos());
        assert!(exterior_d(&exterior_d(&f)).max_abs() < 1e-13);
    }

    #[test]
    fn hodge_laplacian_of_sine_form() {
        let err = |m: usize| {
            let s = spec(m);
            let flat = GridField::<f64>::from_mat_fn::<4>(s, [Variance::Co; 2], |_| mat::identity());
            let w = GridField::<f64>::from_mat_fn::<4>(s, [Variance::Co; 2], |x| {
                let mut w = mat::zero();
                w[1][2] = x[0].sin();
                w[2][1] = -x[0].sin();
                w
            });
            let l = hodge_laplacian::<f64, 4>(&w, &flat).unwrap();
            let mut e = l.clone();
            e.axpy(-1.0, &w);
            e.max_abs()
        };
        let (a, b) = (err(8), err(16));
        assert!(b < 2e-3 && (a / b).log2() > 3.5, "{a} {b}");
    }

    #[test]
    fn codifferential_is_adjoint_of_d() {
        let s = spec(8);
        let g = GridField::<f64>::from_mat_fn::<4>(s, [Variance::Co; 2], |x| {
            let mut g = mat::identity();
            g[0][0] = 1.0 + 0.2 * x[1].sin();
            g[1][1] = 1.0 + 0.1 * (x[0] + x[2]).cos();
            g[0][1] = 0.05 * x[3].sin();
            g[1][0] = g[0][1];
            g
        });
        let a = GridField::<f64>::from_points(s, &[Variance::Co], |p| {
            let x = s.coords::<4>(p);
            vec![x[2].sin(), x[0].cos() * x[3].sin(), 0.0, (x[1] - x[0]).sin()]
        });
        let mut b = exterior_d(&a);
        b.axpy(1.0, &GridField::<f64>::from_mat_fn::<4>(s, [Variance::Co; 2], |x| {
            let mut b = mat::zero();
            b[0][1] = x[2].cos();
            b[1][0] = -b[0][1];
            b
        }));
        // ⟨dα, β⟩ and ⟨α, d*β⟩ with the Riemannian volume
        let da = exterior_d(&a);
        let dsb = codifferential::<f64, 4>(&b, &g).unwrap();
        let gm = g.mats::<4>();
        let lhs: Vec<f64> = (0..s.npts())
            .map(|p| {
                let gi = mat::inverse(&gm[p]).unwrap();
                let vol = mat::det(&gm[p]).sqrt();
                0.5 * crate::monitor::form_inner(&da.mat_at::<4>(p), &b.mat_at::<4>(p), &gi) * vol
            })
            .collect();
        let rhs: Vec<f64> = (0..s.npts())
            .map(|p| {
                let gi = mat::inverse(&gm[p]).unwrap();
                let vol = mat::det(&gm[p]).sqrt();
                let av: [f64; 4] = a.vec_at(p);
                let bv: [f64; 4] = dsb.vec_at(p);
                mat::apply(&gi, &bv).iter().zip(av).map(|(x, y)| x * y).sum::<f64>() * vol
            })
            .collect();
        let (l, r) = (fixed_sum(&lhs), fixed_sum(&rhs));
        assert!(l.abs() > 1.0);
        assert!((l - r).abs() / l.abs() < 1e-2, "{l} {r}");
    }

    #[test]
    fn reductions() {
        let s = spec(8);
        let one = GridField::<f64>::scalar_from_fn::<4>(s, |_| 1.0);
        assert_eq!(reduce(&s, &one.data, Reduce::Mean), 1.0);
        let f = GridField::<f64>::scalar_from_fn::<4>(s, |x| x[0].sin());
        let l2 = reduce(&s, &f.data, Reduce::L2);
        let want = (2.0 * PI).powi(2) / 2f64.sqrt();
        assert!((l2 - want).abs() < 1e-10);
        let f = GridField::<f64>::scalar_from_fn::<4>(s, |x| (x[0] + 0.1).sin());
        let m = reduce(&s, &f.data, Reduce::Sup);
        assert!(m < 1.0 && m > 1.0 - s.h() * s.h());
    }

    #[test]
    fn reduction_is_thread_count_invariant() {
        let v: Vec<f64> = (0..100_003).map(|i| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64)).collect();
        let run = |n: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| fixed_sum(&v)).to_bits()
        };
        assert_eq!(run(1), run(4));
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn snapshot_round_trip() {
        let s = spec(8);
        let f = GridField::<f64>::from_mat_fn::<4>(s, [Variance::Contra, Variance::Co], |x| {
            std::array::from_fn(|a| std::array::from_fn(|b| (x[a] * (b as f64 + 1.0)).sin()))
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.bin");
        write_snapshot(&path, &f).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"AKFLOW01");
        assert_eq!(bytes.len(), 64 + 8 * f.data.len());
        let g: GridField<f64> = read_snapshot(&path).unwrap();
        assert_eq!(g, f);
    }
}
