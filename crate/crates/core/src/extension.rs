//! The central extension `𝒢 ×_{Z(𝒢)} ℝ` of `PSp(2n, R)` by the line and its
//! action on the model space `𝔥ₙ × ℝ`.
//!
//! The fiber of the model space over `Z` is rotated by the lifted argument of
//! the automorphy factor `det(CZ + D)` raised to a configurable exponent.
//! Writing `L(g, Z)` for the continuous lift of `arg det(CZ + D) / 2π` over
//! `𝒢 × 𝔥ₙ` with `L(1, iI) = 0`, the action is
//!
//! ```text
//! (g, r) · (Z, t) = (g·Z, t − e·L(g, Z)/ℓ + r)
//! ```
//!
//! where `e` is the fiber exponent and `ℓ` the raw length of the generator of
//! `ι(Z(𝒢))`, so fiber coordinates are in covolume-normalized units.

use std::f64::consts::{PI, TAU};

use crate::cover::{center_elements, cover_mul, lift, CenterElement, CoverElement};
use crate::error::{GeomError, Result};
use crate::siegel::{automorphy_matrix, mobius, transitivity_witness, SiegelPoint};
use crate::symplectic::{embed_unitary, polar, SymplecticMatrix, UnitaryMatrix};
use crate::{RMat, C64};

const INITIAL_STEP: f64 = 1.0 / 8.0;
const MIN_STEP: f64 = 1.0 / 16384.0;

/// The pair `(g, r)` reduced to normal form `r ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtElement {
    pub g: CoverElement,
    pub r: f64,
}

/// A point `(Z, t)` of the model space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint {
    pub z: SiegelPoint,
    pub t: f64,
}

impl ModelPoint {
    pub fn basepoint(n: usize) -> Self {
        Self {
            z: SiegelPoint::basepoint(n),
            t: 0.0,
        }
    }

    /// Max of the base and fiber coordinate differences.
    pub fn distance(&self, other: &Self) -> f64 {
        self.z.max_abs_diff(&other.z).max((self.t - other.t).abs())
    }
}

/// The bundle projection `(Z, t) ↦ Z`.
pub fn bundle_projection(p: &ModelPoint) -> &SiegelPoint {
    &p.z
}

/// A class in `PSp(2n, R)`, stored with the sign that makes the first
/// significant entry in row-major order positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMatrix(RMat);

impl ProjectiveMatrix {
    pub fn new(m: &SymplecticMatrix) -> Self {
        let a = m.as_matrix();
        let scale = a.amax();
        let mut sign = 1.0;
        for i in 0..a.nrows() {
            if let Some(x) = (0..a.ncols()).map(|j| a[(i, j)]).find(|x| x.abs() > 1e-12 * scale) {
                sign = x.signum();
                break;
            }
        }
        Self(a * sign)
    }

    pub fn as_matrix(&self) -> &RMat {
        &self.0
    }

    /// `min(‖A − B‖_max, ‖A + B‖_max)`.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).amax().min((&self.0 + &other.0).amax())
    }

    pub fn is_identity(&self, tau: f64) -> bool {
        let n = self.0.nrows();
        self.distance(&Self(RMat::identity(n, n))) <= tau
    }
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Total change of `arg f(s)` over `s ∈ [0, 1]`, in radians, by adaptive
/// stepping with every accepted half-step below `π/4`.
fn track_arg(f: impl Fn(f64) -> C64, what: &str) -> Result<f64> {
    let mut s = 0.0;
    let mut h = INITIAL_STEP;
    let mut current = f(0.0).arg();
    let mut total = 0.0;
    let mut subdivisions = 0usize;
    while s < 1.0 {
        let step = h.min(1.0 - s);
        let mid = f(s + step / 2.0).arg();
        let end = f(s + step).arg();
        let d1 = wrap(mid - current);
        let d2 = wrap(end - mid);
        if d1.abs() < PI / 4.0 && d2.abs() < PI / 4.0 {
            total += d1 + d2;
            current = end;
            s += step;
            h = (h * 2.0).min(0.5);
        } else {
            h /= 2.0;
            subdivisions += 1;
            if h < MIN_STEP {
                return Err(GeomError::PathTracking {
                    subdivisions,
                    detail: format!("{what}: phase jump at s = {s}"),
                });
            }
        }
    }
    Ok(total)
}

/// `arg det(C_P i + D_P) / 2π` for the positive polar factor `P` of `M`,
/// continued along `t ↦ P^t` from `P^0 = I`.
pub fn positive_part_phase(m: &SymplecticMatrix) -> Result<f64> {
    let n = m.n();
    let eig = polar(m)?.positive.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(GeomError::Invariant("polar factor is not positive definite".into()));
    }
    let logs = eig.eigenvalues.map(f64::ln);
    let vecs = eig.eigenvectors;
    let j = |t: f64| {
        let pt = &vecs * RMat::from_diagonal(&logs.map(|l| (l * t).exp())) * vecs.transpose();
        let c = pt.view((n, 0), (n, n));
        let d = pt.view((n, n), (n, n));
        crate::CMat::from_fn(n, n, |i, k| C64::new(d[(i, k)], c[(i, k)])).determinant()
    };
    Ok(track_arg(j, "positive part phase")? / TAU)
}

/// The fiber structure for a fixed `n` and fiber exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fiber {
    n: usize,
    exponent: i64,
    generator_length: f64,
}

impl Fiber {
    pub fn new(n: usize, exponent: i64) -> Result<Self> {
        if n == 0 {
            return Err(GeomError::Domain("n must be positive".into()));
        }
        if exponent == 0 {
            return Err(GeomError::Domain("fiber exponent must be nonzero".into()));
        }
        // The image of the center in raw units is e·(lattice of lift indices);
        // its positive generator is read off the enumeration.
        let generator_length = center_elements(n, -2.0, 2.0)?
            .iter()
            .map(|z| (exponent as f64 * z.k()).abs())
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            n,
            exponent,
            generator_length,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    /// Raw length of the generator of `ι(Z(𝒢))`.
    pub fn generator_length(&self) -> f64 {
        self.generator_length
    }

    /// `ι(z) = -e·k` in raw units.
    pub fn iota_raw(&self, z: &CenterElement) -> f64 {
        -(self.exponent as f64) * z.k()
    }

    /// `ι(z)` in normalized units.
    pub fn iota(&self, z: &CenterElement) -> f64 {
        self.iota_raw(z) / self.generator_length
    }

    /// The central element of `ι`-value `m` of the form `generator^m`.
    pub fn central_with_iota(&self, m: i64) -> CenterElement {
        let s = self.exponent.signum();
        if self.n % 2 == 1 {
            let sign = if m.rem_euclid(2) == 0 { 1 } else { -1 };
            CenterElement::new(sign, -m * s, self.n).expect("parity holds by construction")
        } else {
            CenterElement::new(1, -2 * m * s, self.n).expect("parity holds by construction")
        }
    }

    /// The generator of `Z(𝒢)` modulo torsion with `ι = 1`.
    pub fn generator(&self) -> CenterElement {
        self.central_with_iota(1)
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(GeomError::Dimension(format!("element has n = {n}, fiber has n = {}", self.n)));
        }
        Ok(())
    }

    pub fn identity(&self) -> ExtElement {
        ExtElement {
            g: CoverElement::identity(self.n),
            r: 0.0,
        }
    }

    /// The quotient map `θ`: reduces `(g, r)` to normal form.
    pub fn make(&self, g: &CoverElement, r: f64) -> Result<ExtElement> {
        self.check(g.n())?;
        if !r.is_finite() {
            return Err(GeomError::Domain(format!("fiber translation {r} is not finite")));
        }
        let m = r.floor();
        let mut g = cover_mul(g, &self.central_with_iota(m as i64).to_cover(self.n))?;
        let mut r = r - m;
        if r >= 1.0 {
            r -= 1.0;
            g = cover_mul(&g, &self.central_with_iota(1).to_cover(self.n))?;
        }
        if self.n.is_multiple_of(2) && ProjectiveMatrix::new(g.matrix()).as_matrix() != g.matrix().as_matrix() {
            g = cover_mul(&g, &CenterElement::new(-1, 0, self.n)?.to_cover(self.n))?;
        }
        Ok(ExtElement { g, r })
    }

    /// Componentwise product, reduced.
    pub fn mul(&self, a: &ExtElement, b: &ExtElement) -> Result<ExtElement> {
        self.make(&cover_mul(&a.g, &b.g)?, a.r + b.r)
    }

    pub fn inverse(&self, a: &ExtElement) -> Result<ExtElement> {
        self.make(&crate::cover::cover_inverse(&a.g)?, -a.r)
    }

    /// Distance between two elements modulo the central identification.
    pub fn distance(&self, a: &ExtElement, b: &ExtElement) -> Result<f64> {
        let shift = (b.r - a.r).round();
        let b_g = cover_mul(&b.g, &self.central_with_iota(shift as i64).to_cover(self.n))?;
        let b_r = b.r - shift;
        let mut best = f64::INFINITY;
        let signs: &[i8] = if self.n.is_multiple_of(2) { &[1, -1] } else { &[1] };
        for &sign in signs {
            let cand = if sign == 1 {
                b_g.clone()
            } else {
                cover_mul(&b_g, &CenterElement::new(-1, 0, self.n)?.to_cover(self.n))?
            };
            let d = cand
                .matrix()
                .max_abs_diff(a.g.matrix())
                .max((cand.w() - a.g.w()).abs())
                .max((b_r - a.r).abs());
            best = best.min(d);
        }
        Ok(best)
    }

    /// The continuous lift `L(g, Z)` of `arg det(CZ + D) / 2π`.
    pub fn automorphy_lift(&self, g: &CoverElement, z: &SiegelPoint) -> Result<f64> {
        self.check(g.n())?;
        self.check(z.n())?;
        let m = g.matrix();
        let anchor = g.w() + positive_part_phase(m)?;
        let base = SiegelPoint::basepoint(self.n);
        let dz = z.z() - base.z();
        if dz.iter().all(|c| c.norm() == 0.0) {
            return Ok(anchor);
        }
        let det_at = |s: f64| {
            let zs = base.z() + &dz * C64::from(s);
            automorphy_matrix(m, &zs).determinant()
        };
        let total = track_arg(det_at, "automorphy factor")?;
        Ok(anchor + total / TAU)
    }

    /// `Δ(g, Z) = e·L(g, Z)` in normalized units.
    pub fn automorphy_phase(&self, g: &CoverElement, z: &SiegelPoint) -> Result<f64> {
        Ok(self.exponent as f64 * self.automorphy_lift(g, z)? / self.generator_length)
    }

    /// Action of an unreduced pair `(g, r)`.
    pub fn act_pair(&self, g: &CoverElement, r: f64, p: &ModelPoint) -> Result<ModelPoint> {
        let z = mobius(g.matrix(), &p.z)?;
        let t = p.t - self.automorphy_phase(g, &p.z)? + r;
        Ok(ModelPoint { z, t })
    }

    pub fn act(&self, e: &ExtElement, p: &ModelPoint) -> Result<ModelPoint> {
        self.act_pair(&e.g, e.r, p)
    }

    /// The projection to `PSp(2n, R)`.
    pub fn eta(&self, e: &ExtElement) -> ProjectiveMatrix {
        ProjectiveMatrix::new(e.g.matrix())
    }

    /// Whether `e` fixes the base point `(iI, 0)` within `tau_act`.
    pub fn stabilizer_check(&self, e: &ExtElement, tau_act: f64) -> Result<bool> {
        let base = ModelPoint::basepoint(self.n);
        Ok(self.act(e, &base)?.distance(&base) <= tau_act)
    }

    /// The element over `U ∈ U(n)` fixing the base point.
    pub fn stabilizing_element(&self, u: &UnitaryMatrix) -> Result<ExtElement> {
        let g = lift(&embed_unitary(u))?;
        let r = self.automorphy_phase(&g, &SiegelPoint::basepoint(self.n))?;
        self.make(&g, r)
    }

    /// An element mapping the base point to `p`.
    pub fn transitivity_element(&self, p: &ModelPoint) -> Result<ExtElement> {
        let g = lift(&transitivity_witness(&p.z)?)?;
        let r = p.t + self.automorphy_phase(&g, &SiegelPoint::basepoint(self.n))?;
        self.make(&g, r)
    }
}
