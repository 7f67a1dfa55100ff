//! The Siegel upper half-space `𝔥ₙ = {Z = X + iY : Z = Zᵀ, Y > 0}`, the
//! fractional-linear action of `Sp(2n, R)`, the Lagrangian-Grassmannian chart
//! and the tangent map.

use rand::Rng;

use crate::error::{GeomError, Result};
use crate::symplectic::{gen_d, gen_n, unitary_from_blocks, SymplecticMatrix, UnitaryMatrix};
use crate::{CMat, RMat, C64};

/// Smallest admissible Cholesky pivot when testing `Im Z > 0`.
pub const CHOLESKY_PIVOT: f64 = 1e-12;
/// Largest condition number of `CZ + D` accepted by [`mobius`].
pub const MAX_CONDITION: f64 = 1e12;

fn cmax(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn to_complex(m: &RMat) -> CMat {
    m.map(C64::from)
}

/// Lower-triangular `L` with `Y = LLᵀ`, or `None` when a pivot drops below
/// [`CHOLESKY_PIVOT`].
pub fn cholesky_lower(y: &RMat) -> Option<RMat> {
    let n = y.nrows();
    let mut l = RMat::zeros(n, n);
    for j in 0..n {
        let mut d = y[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > CHOLESKY_PIVOT) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = y[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// A point `Z = X + iY` of `𝔥ₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    z: CMat,
}

impl SiegelPoint {
    pub fn new(z: CMat, tau_sym: f64) -> Result<Self> {
        if !z.is_square() || z.nrows() == 0 {
            return Err(GeomError::Shape(format!(
                "Siegel point must be a non-empty square matrix, got {}×{}",
                z.nrows(),
                z.ncols()
            )));
        }
        let asym = cmax(&(&z - z.transpose()));
        if asym > tau_sym {
            return Err(GeomError::Invariant(format!("Z is not symmetric (‖Z − Zᵀ‖_max = {asym:e})")));
        }
        let z = (&z + z.transpose()) * C64::from(0.5);
        let y = z.map(|c| c.im);
        if cholesky_lower(&y).is_none() {
            return Err(GeomError::Invariant("Im Z is not positive definite".into()));
        }
        Ok(Self { z })
    }

    pub fn from_parts(x: &RMat, y: &RMat, tau_sym: f64) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(GeomError::Shape(format!(
                "X is {}×{} but Y is {}×{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        Self::new(CMat::from_fn(x.nrows(), x.ncols(), |i, j| C64::new(x[(i, j)], y[(i, j)])), tau_sym)
    }

    /// The base point `iIₙ`.
    pub fn basepoint(n: usize) -> Self {
        Self {
            z: CMat::identity(n, n) * C64::i(),
        }
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn z(&self) -> &CMat {
        &self.z
    }

    pub fn x(&self) -> RMat {
        self.z.map(|c| c.re)
    }

    pub fn y(&self) -> RMat {
        self.z.map(|c| c.im)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        cmax(&(&self.z - &other.z))
    }

    /// Real chart coordinates: upper triangle of `X` then upper triangle of `Y`.
    pub fn chart_coords(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n + 1));
        for part in [0, 1] {
            for i in 0..n {
                for j in i..n {
                    let c = self.z[(i, j)];
                    out.push(if part == 0 { c.re } else { c.im });
                }
            }
        }
        out
    }
}

/// Symmetric complex matrix with the given chart coordinates (not validated).
pub fn matrix_from_chart(n: usize, coords: &[f64]) -> CMat {
    assert_eq!(coords.len(), n * (n + 1), "chart coordinate count");
    let half = n * (n + 1) / 2;
    let mut z = CMat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let c = C64::new(coords[k], coords[half + k]);
            z[(i, j)] = c;
            z[(j, i)] = c;
            k += 1;
        }
    }
    z
}

/// `Z = X + iY` with `X` entries uniform in `[-1, 1]` and `Y = LLᵀ + ½I`.
pub fn random_siegel_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SiegelPoint {
    let mut x = RMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..=1.0);
            x[(i, j)] = v;
            x[(j, i)] = v;
        }
    }
    let l = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0) / (n as f64).sqrt());
    let y = &l * l.transpose() + RMat::identity(n, n) * 0.5;
    SiegelPoint::from_parts(&x, &y, 1e-9).expect("constructed point is valid")
}

/// Outcome of [`mobius_report`].
#[derive(Debug, Clone)]
pub struct Mobius {
    pub point: SiegelPoint,
    /// 2-norm condition number of `CZ + D`.
    pub condition: f64,
    /// `‖W − Wᵀ‖_max` before symmetrization.
    pub drift: f64,
}

fn complex_condition(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / min
    }
}

/// `CZ + D`.
pub fn automorphy_matrix(m: &SymplecticMatrix, z: &CMat) -> CMat {
    let b = m.blocks();
    to_complex(&b.c) * z + to_complex(&b.d)
}

/// `det(CZ + D)`.
pub fn automorphy_factor(m: &SymplecticMatrix, z: &SiegelPoint) -> C64 {
    automorphy_matrix(m, &z.z).determinant()
}

fn check_dims(m: &SymplecticMatrix, n: usize) -> Result<()> {
    if m.n() != n {
        return Err(GeomError::Dimension(format!(
            "matrix acts on 𝔥_{} but the point lies in 𝔥_{}",
            m.n(),
            n
        )));
    }
    Ok(())
}

fn inverse_checked(den: CMat) -> Result<(CMat, f64)> {
    let condition = complex_condition(&den);
    if !(condition <= MAX_CONDITION) {
        return Err(GeomError::Singular { condition });
    }
    let inv = den.try_inverse().ok_or(GeomError::Singular { condition })?;
    Ok((inv, condition))
}

/// `(AZ + B)(CZ + D)⁻¹` together with conditioning diagnostics.
pub fn mobius_report(m: &SymplecticMatrix, z: &SiegelPoint) -> Result<Mobius> {
    check_dims(m, z.n())?;
    let b = m.blocks();
    let num = to_complex(&b.a) * &z.z + to_complex(&b.b);
    let den = to_complex(&b.c) * &z.z + to_complex(&b.d);
    let (inv, condition) = inverse_checked(den)?;
    let w = num * inv;
    let drift = cmax(&(&w - w.transpose()));
    let w = (&w + w.transpose()) * C64::from(0.5);
    if cholesky_lower(&w.map(|c| c.im)).is_none() {
        return Err(GeomError::Invariant("image point has Im Z not positive definite".into()));
    }
    Ok(Mobius {
        point: SiegelPoint { z: w },
        condition,
        drift,
    })
}

pub fn mobius(m: &SymplecticMatrix, z: &SiegelPoint) -> Result<SiegelPoint> {
    Ok(mobius_report(m, z)?.point)
}

/// A point of the Lagrangian Grassmannian, the column space of `[top; bottom]`.
#[derive(Debug, Clone)]
pub struct GrassmannPoint {
    pub top: CMat,
    pub bottom: CMat,
}

impl GrassmannPoint {
    pub fn new(top: CMat, bottom: CMat) -> Result<Self> {
        if !top.is_square() || top.shape() != bottom.shape() || top.nrows() == 0 {
            return Err(GeomError::Shape("Grassmann blocks must be equal non-empty squares".into()));
        }
        let p = Self { top, bottom };
        let sv = p.stacked().singular_values();
        if !(sv.min() > 1e-10 * sv.max()) {
            return Err(GeomError::Invariant("stacked matrix is rank deficient".into()));
        }
        Ok(p)
    }

    /// `[Z; I]`.
    pub fn from_siegel(z: &SiegelPoint) -> Self {
        let n = z.n();
        Self {
            top: z.z.clone(),
            bottom: CMat::identity(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.top.nrows()
    }

    fn stacked(&self) -> CMat {
        let n = self.n();
        let mut s = CMat::zeros(2 * n, n);
        s.view_mut((0, 0), (n, n)).copy_from(&self.top);
        s.view_mut((n, 0), (n, n)).copy_from(&self.bottom);
        s
    }

    /// `top · bottom⁻¹` when the bottom block is well conditioned.
    pub fn chart(&self) -> Option<CMat> {
        if complex_condition(&self.bottom) > 1e10 {
            return None;
        }
        self.bottom.clone().try_inverse().map(|inv| &self.top * inv)
    }

    /// Distance between the spanned subspaces, `‖P₁ − P₂‖_max` for the
    /// orthogonal projectors.
    pub fn subspace_distance(&self, other: &Self) -> f64 {
        let proj = |p: &Self| {
            let q = p.stacked().qr().q();
            &q * q.adjoint()
        };
        cmax(&(proj(self) - proj(other)))
    }

    /// Equality modulo the right `GL(n, C)` action.
    pub fn equivalent(&self, other: &Self, tau: f64) -> bool {
        if self.n() != other.n() {
            return false;
        }
        match (self.chart(), other.chart()) {
            (Some(a), Some(b)) => cmax(&(a - b)) <= tau,
            _ => self.subspace_distance(other) < 1e-8,
        }
    }
}

/// `[M₁; M₂] ↦ [AM₁ + BM₂; CM₁ + DM₂]`.
pub fn grassmann_act(m: &SymplecticMatrix, p: &GrassmannPoint) -> Result<GrassmannPoint> {
    if m.n() != p.n() {
        return Err(GeomError::Dimension(format!("matrix block size {} vs point size {}", m.n(), p.n())));
    }
    let b = m.blocks();
    let (a, bb, c, d) = (to_complex(&b.a), to_complex(&b.b), to_complex(&b.c), to_complex(&b.d));
    GrassmannPoint::new(&a * &p.top + &bb * &p.bottom, &c * &p.top + &d * &p.bottom)
}

/// `M` with `mobius(M, iI) = Z`: `gen_N(X) · gen_D(S)` where `Y = SSᵀ`.
pub fn transitivity_witness(z: &SiegelPoint) -> Result<SymplecticMatrix> {
    let s = cholesky_lower(&z.y()).ok_or_else(|| GeomError::Invariant("Im Z is not positive definite".into()))?;
    Ok(&gen_n(&z.x(), f64::INFINITY)? * &gen_d(&s)?)
}

/// The unitary `U` with `embed_unitary(U) = M` when `M` fixes `iI`, else `None`.
pub fn stabilizer_test(m: &SymplecticMatrix, tau_act: f64) -> Option<UnitaryMatrix> {
    let base = SiegelPoint::basepoint(m.n());
    let image = mobius(m, &base).ok()?;
    if image.max_abs_diff(&base) <= tau_act {
        Some(UnitaryMatrix::from_trusted(unitary_from_blocks(m.as_matrix())))
    } else {
        None
    }
}

/// A tangent vector `V ∈ Mₙ(C)` at a point of `𝔥ₙ`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub v: CMat,
    pub base: SiegelPoint,
}

/// `vec₁ = [[0, 1], [-1, 0]]`.
pub fn vec1() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::from(0.0), C64::from(1.0), C64::from(-1.0), C64::from(0.0)])
}

/// `W = (CZ + D)⁻ᵀ V (CZ + D)⁻¹` at `mobius(M, Z)`.
pub fn pushforward(m: &SymplecticMatrix, tv: &TangentVector) -> Result<TangentVector> {
    if tv.v.shape() != (tv.base.n(), tv.base.n()) {
        return Err(GeomError::Shape("tangent vector and base point sizes differ".into()));
    }
    let base = mobius(m, &tv.base)?;
    let (inv, _) = inverse_checked(automorphy_matrix(m, &tv.base.z))?;
    Ok(TangentVector {
        v: inv.transpose() * &tv.v * inv,
        base,
    })
}

/// Span coefficient and off-span residual of `pushforward(M, vec₁)`.
#[derive(Debug, Clone, Copy)]
pub struct NormalBundle {
    pub coefficient: C64,
    pub residual: f64,
}

pub fn normal_bundle_check(m: &SymplecticMatrix, z: &SiegelPoint) -> Result<NormalBundle> {
    if z.n() != 2 || m.n() != 2 {
        return Err(GeomError::UnsupportedDimension {
            n: z.n(),
            reason: "the normal-bundle section vec₁ is defined for n = 2",
        });
    }
    let w = pushforward(m, &TangentVector { v: vec1(), base: z.clone() })?.v;
    let c = (w[(0, 1)] - w[(1, 0)]) * 0.5;
    let residual = (w - vec1() * c).norm();
    Ok(NormalBundle { coefficient: c, residual })
}

/// `det(Im Z)^{-(n+1)}`.
pub fn invariant_density(z: &SiegelPoint) -> f64 {
    let n = z.n() as i32;
    z.y().determinant().powi(-(n + 1))
}

/// `|det|` of the real Jacobian of `Z ↦ mobius(M, Z)` in chart coordinates,
/// by central differences with step `h`.
pub fn mobius_jacobian_fd(m: &SymplecticMatrix, z: &SiegelPoint, h: f64) -> Result<f64> {
    let n = z.n();
    let dim = n * (n + 1);
    let q = z.chart_coords();
    let mut jac = RMat::zeros(dim, dim);
    for k in 0..dim {
        let mut plus = q.clone();
        let mut minus = q.clone();
        plus[k] += h;
        minus[k] -= h;
        let fp = mobius(m, &SiegelPoint::new(matrix_from_chart(n, &plus), f64::INFINITY)?)?.chart_coords();
        let fm = mobius(m, &SiegelPoint::new(matrix_from_chart(n, &minus), f64::INFINITY)?)?.chart_coords();
        for r in 0..dim {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(jac.determinant().abs())
}
