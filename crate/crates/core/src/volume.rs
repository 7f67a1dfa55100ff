//! Exact Euler characteristics of `Sp(2n, Z)`, the volume formula for
//! Seifert-like quotients, and a Monte-Carlo check that the extended action
//! preserves the product of the invariant base measure and the fiber
//! Lebesgue measure.

use nalgebra::SMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{GeomError, Result};
use crate::rng::substream;
use crate::symplectic::SymplecticMatrix;
use crate::{RMat, C64};

/// Exact rational numbers.
pub type Rational = BigRational;

/// Renders `p/q` (the denominator is always written).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| GeomError::Domain(format!("not a rational number: {s:?}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(GeomError::Domain(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(parse_int(p)?, q))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// `B_m` for even `m ≥ 2` (Akiyama–Tanigawa).
pub fn bernoulli(m: u32) -> Result<Rational> {
    if m < 2 || m % 2 == 1 {
        return Err(GeomError::Domain(format!("bernoulli expects an even index m ≥ 2, got {m}")));
    }
    let m = m as usize;
    let mut a: Vec<Rational> = (0..=m)
        .map(|j| Rational::new(BigInt::one(), BigInt::from(j + 1)))
        .collect();
    for top in (1..=m).rev() {
        for j in 0..top {
            let diff = &a[j] - &a[j + 1];
            a[j] = diff * Rational::from_integer(BigInt::from(j + 1));
        }
    }
    Ok(a[0].clone())
}

/// `ζ(1 − 2k) = −B_{2k} / 2k`.
pub fn zeta_neg(k: u32) -> Result<Rational> {
    if k == 0 {
        return Err(GeomError::Domain("zeta_neg expects k ≥ 1".into()));
    }
    Ok(-bernoulli(2 * k)? / Rational::from_integer(BigInt::from(2 * k)))
}

/// `χ(Sp(2n, Z)) = ∏_{k=1}^{n} ζ(1 − 2k)`.
pub fn euler_char_sp(n: u32) -> Result<Rational> {
    if n == 0 {
        return Err(GeomError::Domain("n must be positive".into()));
    }
    (1..=n).try_fold(Rational::one(), |acc, k| Ok(acc * zeta_neg(k)?))
}

/// Summary data of a Seifert-like subgroup `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeifertDescriptor {
    /// Covolume of `Γ ∩ ker η` in the fiber line, normalized units.
    pub fiber_covolume: Rational,
    /// `χ(η(Γ))`.
    pub base_euler: Rational,
    pub arises_from_psp: bool,
}

impl SeifertDescriptor {
    pub fn new(fiber_covolume: Rational, base_euler: Rational, arises_from_psp: bool) -> Result<Self> {
        if !fiber_covolume.is_positive() {
            return Err(GeomError::Domain(format!(
                "fiber covolume must be positive, got {}",
                format_rational(&fiber_covolume)
            )));
        }
        if arises_from_psp && !fiber_covolume.is_one() {
            return Err(GeomError::Invariant(format!(
                "a subgroup arising from PSp has fiber covolume 1, got {}",
                format_rational(&fiber_covolume)
            )));
        }
        Ok(Self {
            fiber_covolume,
            base_euler,
            arises_from_psp,
        })
    }

    /// The descriptor of a subgroup arising from `PSp`, with covolume 1.
    pub fn from_psp(base_euler: Rational) -> Self {
        Self {
            fiber_covolume: Rational::one(),
            base_euler,
            arises_from_psp: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeResult {
    /// `|fiber_covolume × base_euler|`.
    pub volume: Rational,
    /// `fiber_covolume × base_euler` before the sign is fixed.
    pub signed: Rational,
    pub sign_convention_applied: bool,
}

pub fn seifert_volume(d: &SeifertDescriptor) -> VolumeResult {
    let signed = &d.fiber_covolume * &d.base_euler;
    VolumeResult {
        volume: signed.abs(),
        signed,
        sign_convention_applied: true,
    }
}

/// A box `E` in chart coordinates times a fiber interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureBox {
    /// Intervals for the upper triangle of `X` then of `Y`.
    pub base: Vec<(f64, f64)>,
    pub fiber: (f64, f64),
}

impl MeasureBox {
    /// `X ∈ [-½, ½]`, `diag Y ∈ [1, 1.5]`, off-diagonal `Y ∈ [-0.2, 0.2]`,
    /// fiber `[0, 1]`.
    pub fn standard(n: usize) -> Self {
        let mut base = Vec::with_capacity(n * (n + 1));
        for _ in 0..n * (n + 1) / 2 {
            base.push((-0.5, 0.5));
        }
        for i in 0..n {
            for j in i..n {
                base.push(if i == j { (1.0, 1.5) } else { (-0.2, 0.2) });
            }
        }
        Self { base, fiber: (0.0, 1.0) }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.base.len() != n * (n + 1) {
            return Err(GeomError::Domain(format!(
                "box has {} base intervals, expected {}",
                self.base.len(),
                n * (n + 1)
            )));
        }
        for &(lo, hi) in self.base.iter().chain(std::iter::once(&self.fiber)) {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(GeomError::Domain(format!("degenerate interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Lebesgue volume of the box, fiber included.
    pub fn volume(&self) -> f64 {
        self.base
            .iter()
            .chain(std::iter::once(&self.fiber))
            .map(|(lo, hi)| hi - lo)
            .product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCheck {
    /// Estimate of `λ(E)`.
    pub lambda: f64,
    /// Estimate of `λ(h⁻¹E)`, from an independent sample stream.
    pub lambda_preimage: f64,
    /// `|λ(E) − λ(h⁻¹E)| / λ(E)`.
    pub residual: f64,
    /// `3/√samples + 10⁻³`.
    pub allowance: f64,
    pub samples: usize,
}

/// Finite-difference step of the base Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-5;

struct Fixed<const N: usize> {
    a: SMatrix<C64, N, N>,
    b: SMatrix<C64, N, N>,
    c: SMatrix<C64, N, N>,
    d: SMatrix<C64, N, N>,
}

impl<const N: usize> Fixed<N> {
    fn new(m: &RMat) -> Self {
        let block = |r0: usize, c0: usize| SMatrix::<C64, N, N>::from_fn(|i, j| C64::from(m[(r0 + i, c0 + j)]));
        Self {
            a: block(0, 0),
            b: block(0, N),
            c: block(N, 0),
            d: block(N, N),
        }
    }

    fn mobius(&self, z: &SMatrix<C64, N, N>) -> Option<SMatrix<C64, N, N>> {
        let inv = (self.c * z + self.d).try_inverse()?;
        Some((self.a * z + self.b) * inv)
    }
}

fn from_chart<const N: usize>(q: &[f64]) -> SMatrix<C64, N, N> {
    let half = N * (N + 1) / 2;
    let mut z = SMatrix::<C64, N, N>::zeros();
    let mut k = 0;
    for i in 0..N {
        for j in i..N {
            let c = C64::new(q[k], q[half + k]);
            z[(i, j)] = c;
            z[(j, i)] = c;
            k += 1;
        }
    }
    z
}

fn chart_into<const N: usize>(z: &SMatrix<C64, N, N>, out: &mut [f64]) {
    let half = N * (N + 1) / 2;
    let mut k = 0;
    for i in 0..N {
        for j in i..N {
            let c = (z[(i, j)] + z[(j, i)]) * 0.5;
            out[k] = c.re;
            out[half + k] = c.im;
            k += 1;
        }
    }
}

/// `det(Im Z)^{-(n+1)}` when `Im Z > 0`, else zero.
fn density<const N: usize>(z: &SMatrix<C64, N, N>) -> f64 {
    let y = z.map(|c| c.im);
    let y = (y + y.transpose()) * 0.5;
    let Some(chol) = y.cholesky() else { return 0.0 };
    let l = chol.l_dirty();
    let det: f64 = (0..N).map(|i| l[(i, i)] * l[(i, i)]).product();
    det.powi(-(N as i32 + 1))
}

fn sample_box<R: Rng + ?Sized>(b: &MeasureBox, rng: &mut R, q: &mut [f64]) {
    for (x, &(lo, hi)) in q.iter_mut().zip(&b.base) {
        *x = rng.random_range(lo..hi);
    }
}

fn estimate<const N: usize>(minv: &RMat, b: &MeasureBox, samples: usize, seed: u64) -> (f64, f64) {
    let dim = N * (N + 1);
    let g = Fixed::<N>::new(minv);
    let mut q = vec![0.0; dim];
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    let mut jac = RMat::zeros(dim, dim);

    let mut direct = substream(seed, 0);
    let mut sum = 0.0;
    for _ in 0..samples {
        sample_box(b, &mut direct, &mut q);
        sum += density(&from_chart::<N>(&q));
    }

    let mut pulled = substream(seed, 1);
    let mut sum_pre = 0.0;
    'outer: for _ in 0..samples {
        sample_box(b, &mut pulled, &mut q);
        let z = from_chart::<N>(&q);
        if density(&z) == 0.0 {
            continue;
        }
        let Some(w) = g.mobius(&z) else { continue };
        let rho = density(&w);
        if rho == 0.0 {
            continue;
        }
        for k in 0..dim {
            let qk = q[k];
            q[k] = qk + JACOBIAN_STEP;
            let Some(wp) = g.mobius(&from_chart::<N>(&q)) else { continue 'outer };
            q[k] = qk - JACOBIAN_STEP;
            let Some(wm) = g.mobius(&from_chart::<N>(&q)) else { continue 'outer };
            q[k] = qk;
            chart_into(&wp, &mut plus);
            chart_into(&wm, &mut minus);
            for r in 0..dim {
                jac[(r, k)] = (plus[r] - minus[r]) / (2.0 * JACOBIAN_STEP);
            }
        }
        sum_pre += rho * jac.determinant().abs();
    }
    let vol = b.volume();
    (vol * sum / samples as f64, vol * sum_pre / samples as f64)
}

/// Compares `λ(E)` with `λ(h⁻¹E)` for `h = (lift(M), r)`.
///
/// The fiber part of `h⁻¹` is `t ↦ t + (function of Z)`, so its Jacobian is
/// block triangular with unit fiber block and `λ(h⁻¹E)` reduces to the
/// integral over `E` of `density(M⁻¹·Z) · |J_{M⁻¹}(Z)|`. The fiber
/// translation `r` therefore drops out. The two estimates use independent
/// substreams of `seed`.
pub fn product_measure_check(
    m: &SymplecticMatrix,
    _r: f64,
    b: &MeasureBox,
    samples: usize,
    seed: u64,
) -> Result<MeasureCheck> {
    let n = m.n();
    b.validate(n)?;
    if samples == 0 {
        return Err(GeomError::Domain("samples must be positive".into()));
    }
    let minv = m.inverse().into_matrix();
    let (lambda, lambda_preimage) = match n {
        1 => estimate::<1>(&minv, b, samples, seed),
        2 => estimate::<2>(&minv, b, samples, seed),
        3 => estimate::<3>(&minv, b, samples, seed),
        4 => estimate::<4>(&minv, b, samples, seed),
        _ => {
            return Err(GeomError::UnsupportedDimension {
                n,
                reason: "the Monte-Carlo measure check is compiled for n ≤ 4",
            })
        }
    };
    if lambda <= 0.0 {
        return Err(GeomError::Domain("box does not meet the Siegel space".into()));
    }
    Ok(MeasureCheck {
        lambda,
        lambda_preimage,
        residual: (lambda - lambda_preimage).abs() / lambda,
        allowance: 3.0 / (samples as f64).sqrt() + 1e-3,
        samples,
    })
}
