//! Closed-form almost-Hermitian structures.
//!
//! Each sample evaluates `(g, J)` at a point for any [`Analytic`] scalar, so
//! the same definition yields exact 2-jets (through [`Jet2`]) and grid
//! samples (through plain floats). They serve as test inputs and as initial
//! data for runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::MetricJet2;
use crate::hermitian::{standard_j, AlmostHermitianJet};
use crate::jet::{seed2, Jet2};
use crate::mat::{self, Mat};
use crate::scalar::{Analytic, Field, Scalar};

/// An almost-Hermitian structure known in closed form.
pub trait AnalyticStructure<const N: usize>: Sync {
    /// `(g, J)` at `x`.
    fn eval<X: Analytic>(&self, x: &[X; N]) -> (Mat<X, N>, Mat<X, N>);

    /// Exact 2-jet at `x`.
    fn jet<T: Scalar>(&self, x: &[T; N]) -> Result<AlmostHermitianJet<T, N>> {
        let (g, j) = self.eval::<Jet2<T, N>>(&seed2(x));
        let (g0, dg, ddg) = crate::geometry::split2(&g);
        let (j0, dj, ddj) = crate::geometry::split2(&j);
        AlmostHermitianJet::new(MetricJet2::new(g0, dg, ddg)?, j0, dj, ddj)
    }
}

/// One Fourier mode `amp · sin(k·x + phase)` with integer wave vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<const N: usize> {
    pub k: [f64; N],
    pub phase: f64,
    pub amp: f64,
}

impl<const N: usize> Mode<N> {
    #[inline]
    pub fn arg<X: Analytic>(&self, x: &[X; N]) -> X {
        let mut a = X::cst(self.phase);
        for i in 0..N {
            if self.k[i] != 0.0 {
                a += X::cst(self.k[i]) * x[i];
            }
        }
        a
    }

    /// Random integer wave vector with entries in `-kmax..=kmax`, not all zero.
    pub fn random(rng: &mut impl Rng, kmax: i32, amp: f64) -> Self {
        loop {
            let k: [f64; N] = std::array::from_fn(|_| rng.gen_range(-kmax..=kmax) as f64);
            if k.iter().any(|&x| x != 0.0) {
                return Self { k, phase: rng.gen_range(0.0..std::f64::consts::TAU), amp };
            }
        }
    }
}

/// Flat torus with the standard structure.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlatStandard;

impl<const N: usize> AnalyticStructure<N> for FlatStandard {
    fn eval<X: Analytic>(&self, _x: &[X; N]) -> (Mat<X, N>, Mat<X, N>) {
        (mat::identity(), standard_j())
    }
}

/// Kähler data `ω = ω₀ + dd^cφ` with the standard J and
/// `φ = Σ amp · sin(k·x + phase) / |k|²`.
///
/// With `d^cφ = −dφ∘J`, each mode contributes
/// `amp · sin(θ) (k ⊗ Jᵀk − Jᵀk ⊗ k) / |k|²` to ω.
#[derive(Clone, Debug)]
pub struct KahlerPotential<const N: usize> {
    pub modes: Vec<Mode<N>>,
}

impl<const N: usize> KahlerPotential<N> {
    pub fn random(seed: u64, n_modes: usize, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..n_modes).map(|_| Mode::random(&mut rng, 1, amplitude / n_modes as f64)).collect();
        Self { modes }
    }

    /// `ω` at `x`.
    pub fn omega<X: Analytic>(&self, x: &[X; N]) -> Mat<X, N> {
        let j0 = standard_j::<f64, N>();
        let mut w = mat::transpose(&standard_j::<X, N>());
        for m in &self.modes {
            let k2: f64 = m.k.iter().map(|v| v * v).sum();
            let jk: [f64; N] = std::array::from_fn(|j| (0..N).map(|b| j0[b][j] * m.k[b]).sum());
            let s = m.arg(x).fsin() * X::cst(m.amp / k2);
            for a in 0..N {
                for b in 0..N {
                    let c = m.k[a] * jk[b] - m.k[b] * jk[a];
                    if c != 0.0 {
                        w[a][b] += s * X::cst(c);
                    }
                }
            }
        }
        w
    }
}

impl<const N: usize> AnalyticStructure<N> for KahlerPotential<N> {
    fn eval<X: Analytic>(&self, x: &[X; N]) -> (Mat<X, N>, Mat<X, N>) {
        let j = standard_j::<X, N>();
        let w = self.omega(x);
        (mat::mul(&w, &j), j)
    }
}

/// Almost Kähler data: `ω = ω₀ + dα` for a trigonometric 1-form α, with
/// `J` the polar ω-compatible structure relative to the flat metric and
/// `g = ω(·, J·)`.
#[derive(Clone, Debug)]
pub struct ExactPerturbation<const N: usize> {
    /// Each mode carries a direction `a`: `α = Σ amp · a · cos(k·x + phase)`.
    pub modes: Vec<(Mode<N>, [f64; N])>,
}

impl<const N: usize> ExactPerturbation<N> {
    pub fn random(seed: u64, n_modes: usize, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..n_modes)
            .map(|_| {
                let m = Mode::random(&mut rng, 1, amplitude / n_modes as f64);
                let a: [f64; N] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                (m, a)
            })
            .collect();
        Self { modes }
    }

    /// `ω = ω₀ + dα`, with `(dα)_{ij} = −Σ amp sin(θ)(k_i a_j − k_j a_i)`.
    pub fn omega<X: Analytic>(&self, x: &[X; N]) -> Mat<X, N> {
        let mut w = mat::transpose(&standard_j::<X, N>());
        for (m, a) in &self.modes {
            let s = m.arg(x).fsin() * X::cst(-m.amp);
            for i in 0..N {
                for j in 0..N {
                    let c = m.k[i] * a[j] - m.k[j] * a[i];
                    if c != 0.0 {
                        w[i][j] += s * X::cst(c);
                    }
                }
            }
        }
        w
    }
}

impl<const N: usize> AnalyticStructure<N> for ExactPerturbation<N> {
    fn eval<X: Analytic>(&self, x: &[X; N]) -> (Mat<X, N>, Mat<X, N>) {
        let w = self.omega(x);
        let j = polar_j_newton(&w, 40);
        (mat::mul(&w, &j), j)
    }
}

/// ω-compatible J relative to the flat metric by the Newton iteration
/// `X ← ½(X − X⁻¹)` started at `−ω`. Differentiable, so it works on jets.
pub fn polar_j_newton<X: Field, const N: usize>(omega: &Mat<X, N>, iters: usize) -> Mat<X, N> {
    let mut x = mat::scale(-X::ONE, omega);
    for _ in 0..iters {
        // X⁻¹ = X (X²)⁻¹ and −X² is positive definite
        let neg_sq = mat::scale(-X::ONE, &mat::mul(&x, &x));
        let inv = mat::scale(-X::ONE, &mat::mul(&x, &mat::inverse_nopivot(&neg_sq)));
        x = mat::scale(X::cst(0.5), &mat::sub(&x, &inv));
    }
    x
}

/// Generic almost-Hermitian data with non-closed ω:
/// `J = A J₀ A⁻¹`, `g = A⁻ᵀ G A⁻¹` with `G` J₀-invariant and
/// `A = 1 + Σ amp · B sin(k·x + phase)`.
#[derive(Clone, Debug)]
pub struct RandomHermitian<const N: usize> {
    pub base: Mat<f64, N>,
    pub modes: Vec<(Mode<N>, Mat<f64, N>)>,
}

impl<const N: usize> RandomHermitian<N> {
    pub fn random(seed: u64, n_modes: usize, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: Mat<f64, N> = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-0.3..0.3)));
        let spd = mat::add(&mat::mul(&mat::transpose(&m), &m), &mat::identity());
        let j0 = standard_j::<f64, N>();
        let base = mat::scale(0.5, &mat::add(&spd, &mat::congruence(&j0, &spd)));
        let modes = (0..n_modes)
            .map(|_| {
                let md = Mode::random(&mut rng, 1, amplitude);
                let b: Mat<f64, N> = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
                (md, b)
            })
            .collect();
        Self { base, modes }
    }
}

impl<const N: usize> AnalyticStructure<N> for RandomHermitian<N> {
    fn eval<X: Analytic>(&self, x: &[X; N]) -> (Mat<X, N>, Mat<X, N>) {
        let mut a = mat::identity::<X, N>();
        for (m, b) in &self.modes {
            let s = m.arg(x).fsin() * X::cst(m.amp);
            for i in 0..N {
                for j in 0..N {
                    a[i][j] += s * X::cst(b[i][j]);
                }
            }
        }
        let ainv = mat::inverse_nopivot(&a);
        let j = mat::mul(&a, &mat::mul(&standard_j(), &ainv));
        let g0 = mat::map(&self.base, X::cst);
        let g = mat::congruence(&ainv, &g0);
        (g, j)
    }
}

/// `J` pulled back from the standard structure by the map
/// `x ↦ x + Σ amp · c sin(k·x + phase)`: integrable, with flat-ish metric
/// `g = Φᵀ Φ` where `Φ` is the Jacobian (so the pair is Kähler-isometric to
/// the standard one).
#[derive(Clone, Debug)]
pub struct PulledBackStandard<const N: usize> {
    pub modes: Vec<(Mode<N>, [f64; N])>,
}

impl<const N: usize> PulledBackStandard<N> {
    pub fn random(seed: u64, n_modes: usize, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..n_modes)
            .map(|_| {
                let m = Mode::random(&mut rng, 1, amplitude);
                let c: [f64; N] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                (m, c)
            })
            .collect();
        Self { modes }
    }
}

impl<const N: usize> AnalyticStructure<N> for PulledBackStandard<N> {
    fn eval<X: Analytic>(&self, x: &[X; N]) -> (Mat<X, N>, Mat<X, N>) {
        let mut phi = mat::identity::<X, N>();
        for (m, c) in &self.modes {
            let co = m.arg(x).fcos() * X::cst(m.amp);
            for a in 0..N {
                for b in 0..N {
                    let v = c[a] * m.k[b];
                    if v != 0.0 {
                        phi[a][b] += co * X::cst(v);
                    }
                }
            }
        }
        let inv = mat::inverse_nopivot(&phi);
        let j = mat::mul(&inv, &mat::mul(&standard_j(), &phi));
        (mat::mul(&mat::transpose(&phi), &phi), j)
    }
}

/// Conformally flat Hermitian data `g = e^{2f} δ`, standard J.
#[derive(Clone, Debug)]
pub struct ConformallyFlat<const N: usize> {
    pub modes: Vec<Mode<N>>,
}

impl<const N: usize> ConformallyFlat<N> {
    pub fn random(seed: u64, n_modes: usize, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { modes: (0..n_modes).map(|_| Mode::random(&mut rng, 1, amplitude)).collect() }
    }
}

impl<const N: usize> AnalyticStructure<N> for ConformallyFlat<N> {
    fn eval<X: Analytic>(&self, x: &[X; N]) -> (Mat<X, N>, Mat<X, N>) {
        let mut f = X::ZERO;
        for m in &self.modes {
            f += m.arg(x).fsin() * X::cst(m.amp);
        }
        let e = (f * X::cst(2.0)).fexp();
        (mat::scale(e, &mat::identity()), standard_j())
    }
}

/// Product of two round unit 2-spheres in stereographic charts: Kähler and
/// Einstein with `Ric = g`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SpherePair;

impl AnalyticStructure<4> for SpherePair {
    fn eval<X: Analytic>(&self, x: &[X; 4]) -> (Mat<X, 4>, Mat<X, 4>) {
        let four = X::cst(4.0);
        let f = |a: X, b: X| {
            let d = X::ONE + a * a + b * b;
            four / (d * d)
        };
        let f1 = f(x[0], x[1]);
        let f2 = f(x[2], x[3]);
        let mut g = mat::zero::<X, 4>();
        g[0][0] = f1;
        g[1][1] = f1;
        g[2][2] = f2;
        g[3][3] = f2;
        (g, standard_j())
    }
}
