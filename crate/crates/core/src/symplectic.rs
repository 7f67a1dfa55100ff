//! The real symplectic group `Sp(2n, R)` and its maximal compact subgroup.
//!
//! Matrices act on `R^{2n}` with the standard form
//! `Ω = [[0, I], [-I, 0]]`; a `2n × 2n` matrix `M` is symplectic when
//! `MᵀΩM = Ω`. The unitary group `U(n)` sits inside as `Sp ∩ O(2n)` through
//! `A + iB ↦ [[A, -B], [B, A]]`. The circle map `ρ = det ∘ unitary_part`
//! induces an isomorphism `π₁(Sp(2n, R)) ≅ Z` and is the coordinate used by
//! [`crate::cover`] to unwrap the universal cover.

use std::ops::Mul;

use nalgebra::SymmetricEigen;
use rand::Rng;

use crate::error::{GeomError, Result};
use crate::{CMat, RMat, C64};

/// Convergence threshold for the Newton polar iteration.
pub const POLAR_TOL: f64 = 1e-13;
/// Iteration cap for the Newton polar iteration.
pub const POLAR_MAX_ITER: usize = 100;

/// A `2n × 2n` real matrix known to satisfy `MᵀΩM = Ω` up to tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    m: RMat,
}

/// The `n × n` blocks of a `2n × 2n` matrix, top-left/top-right/bottom-left/bottom-right.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    pub d: RMat,
}

impl SymplecticMatrix {
    /// Validates `m` against `tau` in the max norm.
    pub fn new(m: RMat, tau: f64) -> Result<Self> {
        let residual = symplectic_residual(&m)?;
        if residual > tau {
            return Err(GeomError::Invariant(format!(
                "matrix is not symplectic: ‖MᵀΩM − Ω‖_max = {residual:e} > {tau:e}"
            )));
        }
        Ok(Self::from_trusted(m))
    }

    /// Wraps a matrix that is symplectic by construction.
    pub(crate) fn from_trusted(m: RMat) -> Self {
        debug_assert!(m.is_square() && m.nrows().is_multiple_of(2));
        Self { n: m.nrows() / 2, m }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_trusted(RMat::identity(2 * n, 2 * n))
    }

    /// Block size `n` (the matrix is `2n × 2n`).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_matrix(&self) -> &RMat {
        &self.m
    }

    pub fn into_matrix(self) -> RMat {
        self.m
    }

    pub fn blocks(&self) -> Blocks {
        let n = self.n;
        Blocks {
            a: self.m.view((0, 0), (n, n)).into_owned(),
            b: self.m.view((0, n), (n, n)).into_owned(),
            c: self.m.view((n, 0), (n, n)).into_owned(),
            d: self.m.view((n, n), (n, n)).into_owned(),
        }
    }

    /// `M⁻¹ = -Ω Mᵀ Ω`, exact for symplectic `M`.
    pub fn inverse(&self) -> Self {
        let omega = omega_matrix(self.n);
        Self::from_trusted(-(&omega * self.m.transpose() * &omega))
    }

    pub fn neg(&self) -> Self {
        Self::from_trusted(-&self.m)
    }

    pub fn residual(&self) -> f64 {
        residual_unchecked(&self.m)
    }

    /// `Some(+1)` / `Some(-1)` when the matrix is exactly `±I`.
    pub fn exact_sign_identity(&self) -> Option<i8> {
        let dim = 2 * self.n;
        for sign in [1i8, -1] {
            let s = f64::from(sign);
            let hit = (0..dim).all(|i| (0..dim).all(|j| self.m[(i, j)] == if i == j { s } else { 0.0 }));
            if hit {
                return Some(sign);
            }
        }
        None
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.m - &other.m).amax()
    }
}

impl Mul for &SymplecticMatrix {
    type Output = SymplecticMatrix;

    fn mul(self, rhs: &SymplecticMatrix) -> SymplecticMatrix {
        assert_eq!(self.n, rhs.n, "block sizes differ");
        SymplecticMatrix::from_trusted(&self.m * &rhs.m)
    }
}

fn omega_matrix(n: usize) -> RMat {
    let mut o = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        o[(i, n + i)] = 1.0;
        o[(n + i, i)] = -1.0;
    }
    o
}

/// The standard symplectic form `Ω = [[0, I_n], [-I_n, 0]]`.
pub fn omega(n: usize) -> SymplecticMatrix {
    assert!(n >= 1, "block size must be positive");
    SymplecticMatrix::from_trusted(omega_matrix(n))
}

fn residual_unchecked(m: &RMat) -> f64 {
    let omega = omega_matrix(m.nrows() / 2);
    (m.transpose() * &omega * m - omega).amax()
}

/// `‖MᵀΩM − Ω‖_max`.
pub fn symplectic_residual(m: &RMat) -> Result<f64> {
    if !m.is_square() {
        return Err(GeomError::Dimension(format!(
            "expected a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(GeomError::Dimension(format!(
            "expected an even positive dimension, got {}",
            m.nrows()
        )));
    }
    Ok(residual_unchecked(m))
}

/// True iff `‖MᵀΩM − Ω‖_max ≤ tau`.
pub fn is_symplectic(m: &RMat, tau: f64) -> Result<bool> {
    Ok(symplectic_residual(m)? <= tau)
}

/// 2-norm condition number `σ_max / σ_min`.
pub fn condition_number(a: &RMat) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `[[A, 0], [0, A⁻ᵀ]]` for invertible `A`.
pub fn gen_d(a: &RMat) -> Result<SymplecticMatrix> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(GeomError::Shape(format!(
            "gen_D expects a non-empty square block, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let condition = condition_number(a);
    if !condition.is_finite() || condition > 1e14 {
        return Err(GeomError::Singular { condition });
    }
    let inv = a
        .clone()
        .try_inverse()
        .ok_or(GeomError::Singular { condition })?;
    let n = a.nrows();
    let mut m = RMat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((n, n), (n, n)).copy_from(&inv.transpose());
    Ok(SymplecticMatrix::from_trusted(m))
}

/// `[[I, B], [0, I]]` for symmetric `B`.
pub fn gen_n(b: &RMat, tau: f64) -> Result<SymplecticMatrix> {
    if !b.is_square() || b.nrows() == 0 {
        return Err(GeomError::Shape(format!(
            "gen_N expects a non-empty square block, got {}×{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let asym = (b - b.transpose()).amax();
    if asym > tau {
        return Err(GeomError::Shape(format!(
            "gen_N expects a symmetric block, ‖B − Bᵀ‖_max = {asym:e}"
        )));
    }
    let n = b.nrows();
    let mut m = RMat::identity(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(&((b + b.transpose()) * 0.5));
    Ok(SymplecticMatrix::from_trusted(m))
}

/// An `n × n` complex matrix with `U*U = I` up to tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMat);

impl UnitaryMatrix {
    pub fn new(u: CMat, tau: f64) -> Result<Self> {
        if !u.is_square() || u.nrows() == 0 {
            return Err(GeomError::Shape(format!(
                "unitary matrix must be non-empty and square, got {}×{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let residual = unitarity_residual(&u);
        if residual > tau {
            return Err(GeomError::Invariant(format!(
                "matrix is not unitary: ‖U*U − I‖_max = {residual:e} > {tau:e}"
            )));
        }
        Ok(Self(u))
    }

    pub(crate) fn from_trusted(u: CMat) -> Self {
        Self(u)
    }

    pub fn identity(n: usize) -> Self {
        Self(CMat::identity(n, n))
    }

    /// `diag(e^{iθ₁}, …, e^{iθₙ})`.
    pub fn diagonal(phases: &[f64]) -> Self {
        let n = phases.len();
        let mut u = CMat::zeros(n, n);
        for (k, &theta) in phases.iter().enumerate() {
            u[(k, k)] = C64::from_polar(1.0, theta);
        }
        Self(u)
    }

    /// `e^{ia} · I_n`.
    pub fn scalar(n: usize, a: f64) -> Self {
        Self(CMat::identity(n, n) * C64::from_polar(1.0, a))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn det(&self) -> C64 {
        self.0.clone().determinant()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Multiplies by a unit scalar.
    pub fn rotate(&self, phase: f64) -> Self {
        Self(&self.0 * C64::from_polar(1.0, phase))
    }

    pub fn residual(&self) -> f64 {
        unitarity_residual(&self.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral decomposition `U = V diag(e^{iθ}) V*` with `θ ∈ (-π, π]`.
    ///
    /// The eigenvectors come from a generic real combination of the commuting
    /// Hermitian parts `(U + U*)/2` and `(U − U*)/2i`; a combination that
    /// fails to separate the spectrum is detected through the reconstruction
    /// residual and the next one is tried.
    pub fn eigen(&self) -> Result<(CMat, Vec<f64>)> {
        const MIXES: [f64; 4] = [0.577_215_664_9, std::f64::consts::SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::E];
        let u = &self.0;
        let uh = u.adjoint();
        let cos_part = (u + &uh) * C64::from(0.5);
        let sin_part = (u - &uh) * C64::new(0.0, -0.5);
        let mut best = f64::INFINITY;
        for mix in MIXES {
            let h = &cos_part + &sin_part * C64::from(mix);
            let h = (&h + h.adjoint()) * C64::from(0.5);
            let vecs = SymmetricEigen::new(h).eigenvectors;
            let rayleigh = vecs.adjoint() * u * &vecs;
            let angles: Vec<f64> = (0..self.n()).map(|k| rayleigh[(k, k)].arg()).collect();
            let recon = &vecs
                * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                    angles.len(),
                    angles.iter().map(|&t| C64::from_polar(1.0, t)),
                ))
                * vecs.adjoint();
            let residual = (&recon - u).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if residual <= 1e-10 {
                return Ok((vecs, angles));
            }
            best = best.min(residual);
        }
        Err(GeomError::NoConvergence {
            what: "unitary eigendecomposition",
            iterations: MIXES.len(),
            residual: best,
        })
    }
}

impl Mul for &UnitaryMatrix {
    type Output = UnitaryMatrix;

    fn mul(self, rhs: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(&self.0 * &rhs.0)
    }
}

fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMat::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `A + iB ↦ [[A, -B], [B, A]]`.
pub fn embed_unitary(u: &UnitaryMatrix) -> SymplecticMatrix {
    let n = u.n();
    let mut m = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u.0[(i, j)];
            m[(i, j)] = z.re;
            m[(n + i, n + j)] = z.re;
            m[(i, n + j)] = -z.im;
            m[(n + i, j)] = z.im;
        }
    }
    SymplecticMatrix::from_trusted(m)
}

/// Reads `A + iB` off the first block column of a matrix in `Sp ∩ O(2n)`.
pub(crate) fn unitary_from_blocks(m: &RMat) -> CMat {
    let n = m.nrows() / 2;
    CMat::from_fn(n, n, |i, j| C64::new(m[(i, j)], m[(n + i, j)]))
}

/// Polar decomposition `M = P K`, `P` symmetric positive definite, `K` orthogonal.
/// For symplectic `M` both factors are symplectic.
#[derive(Debug, Clone)]
pub struct Polar {
    pub positive: RMat,
    pub orthogonal: RMat,
    pub iterations: usize,
}

/// Orthogonal polar factor by the Newton iteration `X ↦ ½(X + X⁻ᵀ)`.
pub fn newton_polar_factor(m: &RMat) -> Result<(RMat, usize)> {
    let mut x = m.clone();
    let mut step = f64::INFINITY;
    for it in 1..=POLAR_MAX_ITER {
        let inv = x.clone().try_inverse().ok_or(GeomError::Singular {
            condition: f64::INFINITY,
        })?;
        let next = (&x + inv.transpose()) * 0.5;
        step = (&next - &x).amax();
        x = next;
        if step <= POLAR_TOL {
            return Ok((x, it));
        }
    }
    Err(GeomError::NoConvergence {
        what: "Newton polar iteration",
        iterations: POLAR_MAX_ITER,
        residual: step,
    })
}

pub fn polar(m: &SymplecticMatrix) -> Result<Polar> {
    let (k, iterations) = newton_polar_factor(&m.m)?;
    let p = &m.m * k.transpose();
    let positive = (&p + p.transpose()) * 0.5;
    Ok(Polar {
        positive,
        orthogonal: k,
        iterations,
    })
}

/// The `U(n)` element whose embedding is the orthogonal polar factor of `M`.
pub fn unitary_part(m: &SymplecticMatrix) -> Result<UnitaryMatrix> {
    let polar = polar(m)?;
    Ok(UnitaryMatrix(unitary_from_blocks(&polar.orthogonal)))
}

/// `ρ(M) = det(unitary_part(M))`.
pub fn circle_map(m: &SymplecticMatrix) -> Result<C64> {
    Ok(unitary_part(m)?.det())
}

/// An element of the Lie algebra `sp(2n, R)`: `ΩX` is symmetric.
#[derive(Debug, Clone)]
pub struct LieAlgebraElement(RMat);

impl LieAlgebraElement {
    pub fn new(x: RMat, tau: f64) -> Result<Self> {
        symplectic_residual(&x).map_err(|_| {
            GeomError::Dimension(format!("expected an even square matrix, got {}×{}", x.nrows(), x.ncols()))
        })?;
        let ox = omega_matrix(x.nrows() / 2) * &x;
        let asym = (&ox - ox.transpose()).amax();
        if asym > tau {
            return Err(GeomError::Invariant(format!(
                "ΩX is not symmetric (‖ΩX − (ΩX)ᵀ‖_max = {asym:e})"
            )));
        }
        Ok(Self(x))
    }

    /// `X = -ΩS` for symmetric `S`, so that `ΩX = S`.
    pub fn from_symmetric(s: &RMat) -> Self {
        let sym = (s + s.transpose()) * 0.5;
        Self(-(omega_matrix(s.nrows() / 2) * sym))
    }

    pub fn as_matrix(&self) -> &RMat {
        &self.0
    }

    pub fn exp(&self) -> SymplecticMatrix {
        SymplecticMatrix::from_trusted(self.0.exp())
    }
}

fn random_symmetric<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> RMat {
    let mut s = RMat::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = rng.random_range(-1.0..=1.0) * scale;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// `exp(X)` for `X ∈ sp(2n)` with `ΩX` entries uniform in `[-1, 1]/(2n)`.
pub fn random_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymplecticMatrix {
    let s = random_symmetric(2 * n, 1.0 / (2 * n) as f64, rng);
    LieAlgebraElement::from_symmetric(&s).exp()
}

/// `exp(S)` for `S ∈ sp(2n) ∩ Sym`, written `S = [[a, b], [b, -a]]` with `a, b`
/// symmetric and entries uniform in `[-scale, scale]`.
pub fn random_positive_symplectic<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> SymplecticMatrix {
    let a = random_symmetric(n, scale, rng);
    let b = random_symmetric(n, scale, rng);
    let mut s = RMat::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&a);
    s.view_mut((0, n), (n, n)).copy_from(&b);
    s.view_mut((n, 0), (n, n)).copy_from(&b);
    s.view_mut((n, n), (n, n)).copy_from(&(-&a));
    SymplecticMatrix::from_trusted(s.exp())
}

/// A unitary matrix `exp(K)` with `K` skew-Hermitian, entries of order `spread`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, spread: f64, rng: &mut R) -> UnitaryMatrix {
    // K = Ar + iBr with Ar antisymmetric, Br symmetric; exponentiated in the
    // real picture [[Ar, -Br], [Br, Ar]] ∈ sp ∩ so.
    let mut ar = RMat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(-1.0..=1.0) * spread;
            ar[(i, j)] = v;
            ar[(j, i)] = -v;
        }
    }
    let br = random_symmetric(n, spread, rng);
    let mut k = RMat::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&ar);
    k.view_mut((n, n), (n, n)).copy_from(&ar);
    k.view_mut((0, n), (n, n)).copy_from(&(-&br));
    k.view_mut((n, 0), (n, n)).copy_from(&br);
    UnitaryMatrix(unitary_from_blocks(&k.exp()))
}

/// A generic symplectic matrix `embed(U₁) · exp(S) · embed(U₂)` that winds
/// around the whole maximal compact subgroup.
pub fn random_symplectic_wide<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymplecticMatrix {
    let u1 = embed_unitary(&random_unitary(n, 2.0, rng));
    let p = random_positive_symplectic(n, 0.4, rng);
    let u2 = embed_unitary(&random_unitary(n, 2.0, rng));
    &(&u1 * &p) * &u2
}

/// One letter of a word in the generating set `D(n) ∪ N(n) ∪ {Ω}`.
#[derive(Debug, Clone)]
pub enum Generator {
    D(RMat),
    N(RMat),
    Omega,
}

impl Generator {
    pub fn matrix(&self, n: usize) -> Result<SymplecticMatrix> {
        match self {
            Generator::D(a) => gen_d(a),
            Generator::N(b) => gen_n(b, crate::tol::SYM),
            Generator::Omega => Ok(omega(n)),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        match rng.random_range(0..3) {
            0 => loop {
                let a = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
                if condition_number(&a) < 20.0 {
                    break Generator::D(a);
                }
            },
            1 => Generator::N(random_symmetric(n, 1.0, rng)),
            _ => Generator::Omega,
        }
    }
}

/// A random word of length `1..=max_len` in the generators, multiplied out.
pub fn random_generator_word<R: Rng + ?Sized>(n: usize, max_len: usize, rng: &mut R) -> Result<SymplecticMatrix> {
    let len = rng.random_range(1..=max_len.max(1));
    let mut m = SymplecticMatrix::identity(n);
    for _ in 0..len {
        m = &m * &Generator::random(n, rng).matrix(n)?;
    }
    Ok(m)
}
