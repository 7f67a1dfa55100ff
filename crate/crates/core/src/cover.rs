//! The universal cover of `Sp(2n, R)`.
//!
//! An element is a pair `(M, w)` where `w` is a real number with
//! `e^{2πiw} = ρ(M)`. Since `ρ` induces an isomorphism on `π₁`, the pair is
//! the pullback of the exponential covering `R → S¹` along `ρ`, and it names a
//! unique point of the cover. Products carry a continuous cocycle obtained by
//! tracking `arg ρ` along a fixed path from `I` to the right factor.

use std::f64::consts::{PI, TAU};

use nalgebra::{DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{GeomError, Result};
use crate::symplectic::{
    circle_map, embed_unitary, polar, random_symplectic_wide, unitary_from_blocks, SymplecticMatrix,
    UnitaryMatrix,
};
use crate::{CMat, RMat, C64};

/// Smallest accepted step of the cocycle path tracker.
pub const MIN_STEP: f64 = 1.0 / 16384.0;
const INITIAL_STEP: f64 = 1.0 / 16.0;
const MAX_STEP: f64 = 1.0 / 4.0;

/// An element `(M, w)` of the universal cover.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverElement {
    m: SymplecticMatrix,
    w: f64,
}

impl CoverElement {
    /// Validates `e^{2πiw} = ρ(M)` within `tau_cov`.
    pub fn new(m: SymplecticMatrix, w: f64, tau_cov: f64) -> Result<Self> {
        let g = Self { m, w };
        let residual = g.invariant_residual()?;
        if residual > tau_cov {
            return Err(GeomError::Invariant(format!(
                "w = {w} is not a lift of ρ(M): |e^{{2πiw}} − ρ(M)| = {residual:e}"
            )));
        }
        Ok(g)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: SymplecticMatrix::identity(n),
            w: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    /// The projection `π(g)`.
    pub fn matrix(&self) -> &SymplecticMatrix {
        &self.m
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// `|e^{2πiw} − ρ(M)|`.
    pub fn invariant_residual(&self) -> Result<f64> {
        let rho = circle_map(&self.m)?;
        Ok((C64::from_polar(1.0, TAU * self.w) - rho).norm())
    }

    /// The same matrix with `w` shifted by an integer, i.e. multiplied by an
    /// element of `ker π`.
    pub fn shifted(&self, turns: i64) -> Self {
        Self {
            m: self.m.clone(),
            w: self.w + turns as f64,
        }
    }
}

/// The lift with `w` the principal value of `arg ρ(M) / 2π` in `(-½, ½]`.
pub fn lift(m: &SymplecticMatrix) -> Result<CoverElement> {
    let rho = circle_map(m)?;
    Ok(CoverElement {
        m: m.clone(),
        w: rho.arg() / TAU,
    })
}

/// The path `t ↦ P^t K(t)` from `I` to `M = PK`, with `K(t)` a one-parameter
/// subgroup of `U(n)` through `K`.
#[derive(Debug, Clone)]
pub struct CanonicalPath {
    n: usize,
    p_vecs: RMat,
    p_log: DVector<f64>,
    k_vecs: CMat,
    k_angles: Vec<f64>,
}

/// Places the branch cut in the middle of the widest gap of the spectrum when
/// an eigenvalue sits close to `-1`.
fn choose_branch(angles: &mut [f64]) {
    if angles.iter().all(|a| a.abs() < PI - 1e-3) {
        return;
    }
    let mut sorted: Vec<f64> = angles.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut cut = sorted[0] - (TAU - (sorted[sorted.len() - 1] - sorted[0])) / 2.0;
    let mut widest = TAU - (sorted[sorted.len() - 1] - sorted[0]);
    for pair in sorted.windows(2) {
        let gap = pair[1] - pair[0];
        if gap > widest {
            widest = gap;
            cut = pair[0] + gap / 2.0;
        }
    }
    for a in angles.iter_mut() {
        while *a > cut {
            *a -= TAU;
        }
        while *a <= cut - TAU {
            *a += TAU;
        }
    }
}

impl CanonicalPath {
    pub fn new(m: &SymplecticMatrix) -> Result<Self> {
        let n = m.n();
        let pol = polar(m)?;
        let eig = SymmetricEigen::new(pol.positive);
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(GeomError::Invariant("polar factor is not positive definite".into()));
        }
        let u = UnitaryMatrix::from_trusted(unitary_from_blocks(&pol.orthogonal));
        let (k_vecs, mut k_angles) = u.eigen()?;
        choose_branch(&mut k_angles);
        Ok(Self {
            n,
            p_vecs: eig.eigenvectors,
            p_log: eig.eigenvalues.map(f64::ln),
            k_vecs,
            k_angles,
        })
    }

    /// `P^t`.
    pub fn positive_power(&self, t: f64) -> RMat {
        let d = RMat::from_diagonal(&self.p_log.map(|l| (l * t).exp()));
        &self.p_vecs * d * self.p_vecs.transpose()
    }

    /// `U(t) = V diag(e^{itφ}) V*`.
    pub fn unitary_at(&self, t: f64) -> UnitaryMatrix {
        let d = CMat::from_diagonal(&DVector::from_iterator(
            self.n,
            self.k_angles.iter().map(|&a| C64::from_polar(1.0, a * t)),
        ));
        UnitaryMatrix::from_trusted(&self.k_vecs * d * self.k_vecs.adjoint())
    }

    pub fn at(&self, t: f64) -> SymplecticMatrix {
        let k = embed_unitary(&self.unitary_at(t));
        SymplecticMatrix::from_trusted(self.positive_power(t) * k.as_matrix())
    }

    /// `arg ρ(γ(t))`, continuous in `t` and zero at `t = 0`.
    pub fn phase(&self, t: f64) -> f64 {
        t * self.k_angles.iter().sum::<f64>()
    }
}

pub fn canonical_path(m: &SymplecticMatrix, t: f64) -> Result<SymplecticMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeomError::Domain(format!("path parameter {t} outside [0, 1]")));
    }
    Ok(CanonicalPath::new(m)?.at(t))
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// The continuous cocycle `β(M₁, M₂)`, in turns.
///
/// It is the winding of `ρ(M₁γ(t)) / ρ(γ(t))` along the canonical path `γ`
/// of `M₂`. The ratio extends to a map `Sp × Sp → S¹` that is trivial on
/// `Sp × {I}`, so its winding does not depend on the path chosen.
pub fn cocycle(m1: &SymplecticMatrix, m2: &SymplecticMatrix) -> Result<f64> {
    if m1.n() != m2.n() {
        return Err(GeomError::Dimension(format!("block sizes {} and {} differ", m1.n(), m2.n())));
    }
    if m1.exact_sign_identity().is_some() || m2.exact_sign_identity().is_some() {
        return Ok(0.0);
    }
    let path = CanonicalPath::new(m2)?;
    let ratio = |t: f64| -> Result<f64> {
        let moved = m1 * &path.at(t);
        Ok(circle_map(&moved)?.arg() - path.phase(t))
    };
    let mut t = 0.0;
    let mut h = INITIAL_STEP;
    let mut current = ratio(0.0)?;
    let mut total = 0.0;
    let mut subdivisions = 0usize;
    while t < 1.0 {
        let step = h.min(1.0 - t);
        let mid = ratio(t + step / 2.0)?;
        let end = ratio(t + step)?;
        let d1 = wrap(mid - current);
        let d2 = wrap(end - mid);
        let d = wrap(end - current);
        if d1.abs() < PI / 4.0 && d2.abs() < PI / 4.0 && d.abs() < PI / 2.0 && (d1 + d2 - d).abs() < 1e-9 {
            total += d;
            current = end;
            t += step;
            h = (h * 2.0).min(MAX_STEP);
        } else {
            h /= 2.0;
            subdivisions += 1;
            if h < MIN_STEP {
                return Err(GeomError::PathTracking {
                    subdivisions,
                    detail: format!("phase jump {d:e} rad at t = {t}"),
                });
            }
        }
    }
    Ok(total / TAU)
}

/// `(M₁M₂, w₁ + w₂ + β(M₁, M₂))`.
pub fn cover_mul(g1: &CoverElement, g2: &CoverElement) -> Result<CoverElement> {
    let beta = cocycle(&g1.m, &g2.m)?;
    Ok(CoverElement {
        m: &g1.m * &g2.m,
        w: g1.w + g2.w + beta,
    })
}

/// `(M⁻¹, -w - β(M, M⁻¹))`.
pub fn cover_inverse(g: &CoverElement) -> Result<CoverElement> {
    let inv = g.m.inverse();
    let beta = cocycle(&g.m, &inv)?;
    Ok(CoverElement { m: inv, w: -g.w - beta })
}

/// A central element `(±I, k)`; `k` is stored as the integer `2k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CenterElement {
    pub sign: i8,
    k2: i64,
}

impl CenterElement {
    /// Validates the parity constraint tying `sign` to `k` for the given `n`.
    pub fn new(sign: i8, k2: i64, n: usize) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(GeomError::Domain(format!("sign must be ±1, got {sign}")));
        }
        let k_is_integer = k2 % 2 == 0;
        let ok = if n.is_multiple_of(2) {
            k_is_integer
        } else {
            k_is_integer == (sign == 1)
        };
        if !ok {
            return Err(GeomError::Invariant(format!(
                "no central element of sign {sign} with index {}/2 for n = {n}",
                k2
            )));
        }
        Ok(Self { sign, k2 })
    }

    pub fn identity() -> Self {
        Self { sign: 1, k2: 0 }
    }

    /// Twice the lift index.
    pub fn k2(&self) -> i64 {
        self.k2
    }

    pub fn k(&self) -> f64 {
        self.k2 as f64 / 2.0
    }

    /// Group law in the center, which is abelian.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            sign: self.sign * other.sign,
            k2: self.k2 + other.k2,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            sign: self.sign,
            k2: -self.k2,
        }
    }

    pub fn to_cover(&self, n: usize) -> CoverElement {
        let m = SymplecticMatrix::identity(n);
        CoverElement {
            m: if self.sign == 1 { m } else { m.neg() },
            w: self.k(),
        }
    }
}

/// All central elements with lift index in `[k_min, k_max]`, ordered by index
/// and then by sign (`+` first).
pub fn center_elements(n: usize, k_min: f64, k_max: f64) -> Result<Vec<CenterElement>> {
    if n == 0 {
        return Err(GeomError::Domain("n must be positive".into()));
    }
    if !(k_min.is_finite() && k_max.is_finite()) {
        return Err(GeomError::Domain("index range must be finite".into()));
    }
    let lo = (2.0 * k_min).ceil() as i64;
    let hi = (2.0 * k_max).floor() as i64;
    let mut out = Vec::new();
    for k2 in lo..=hi {
        for sign in [1i8, -1] {
            if let Ok(z) = CenterElement::new(sign, k2, n) {
                out.push(z);
            }
        }
    }
    Ok(out)
}

/// `(embed(e^{ia} Iₙ), na / 2π)`.
pub fn scalar_lift(a: f64, n: usize) -> CoverElement {
    CoverElement {
        m: embed_unitary(&UnitaryMatrix::scalar(n, a)),
        w: n as f64 * a / TAU,
    }
}

/// Splits a lifted unitary as `scalar_lift(a) · h` with `h` a lift of an
/// `SU(n)` matrix at `w = 0`; returns `(a, SU-part)`.
pub fn factor_unitary_lift(g: &CoverElement, tau: f64) -> Result<(f64, UnitaryMatrix)> {
    let u = unitary_from_blocks(g.m.as_matrix());
    let u = UnitaryMatrix::new(u, tau)?;
    if embed_unitary(&u).max_abs_diff(&g.m) > tau {
        return Err(GeomError::Invariant("element does not lie over U(n)".into()));
    }
    let n = g.n();
    let a = TAU * g.w / n as f64;
    Ok((a, u.rotate(-a)))
}

/// `U = e^{ia} V` with `a ∈ [0, 2π/n)` and `det V = 1`.
pub fn factor_unitary(u: &UnitaryMatrix) -> (f64, UnitaryMatrix) {
    let n = u.n() as f64;
    let a = (u.det().arg() / n).rem_euclid(TAU / n);
    (a, u.rotate(-a))
}

/// `(M, w)` with `M = embed(U₁) exp(S) embed(U₂)` and `w` the principal lift
/// shifted by a uniform integer in `[-2, 2]`.
pub fn random_cover_element<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CoverElement> {
    let m = random_symplectic_wide(n, rng);
    Ok(lift(&m)?.shifted(rng.random_range(-2..=2)))
}
