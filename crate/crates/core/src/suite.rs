//! A seeded battery of property checks over every layer of the library.
//!
//! Each check draws from its own substream, so the set of checks can grow
//! without changing the samples of existing ones.

use rand::Rng;

use crate::cli::Config;
use crate::cover::{center_elements, cover_mul, random_cover_element, CenterElement, CoverElement};
use crate::error::Result;
use crate::extension::{Fiber, ModelPoint};
use crate::rng::{substream, StreamRng};
use crate::siegel::{
    automorphy_factor, grassmann_act, invariant_density, mobius, mobius_jacobian_fd, normal_bundle_check,
    pushforward, random_siegel_point, stabilizer_test, GrassmannPoint, TangentVector,
};
use crate::symplectic::{
    embed_unitary, random_generator_word, random_positive_symplectic, random_symplectic_wide, random_unitary,
};
use crate::volume::{euler_char_sp, format_rational, product_measure_check, MeasureBox};
use crate::{CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub samples: usize,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        self.residual <= self.threshold
    }
}

fn cmax(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_ext(fiber: &Fiber, rng: &mut StreamRng) -> Result<crate::extension::ExtElement> {
    let g = random_cover_element(fiber.n(), rng)?;
    fiber.make(&g, rng.random_range(-2.0..2.0))
}

fn random_model_point(n: usize, rng: &mut StreamRng) -> ModelPoint {
    ModelPoint {
        z: random_siegel_point(n, rng),
        t: rng.random_range(-1.0..1.0),
    }
}

/// Runs every check and returns their results in a fixed order.
pub fn run_suite(cfg: &Config) -> Result<Vec<CheckResult>> {
    let n = cfg.n;
    let s = cfg.samples;
    let fiber = Fiber::new(n, cfg.fiber_exponent)?;
    let stream = |k: u64| substream(cfg.seed, k);
    let mut out = Vec::new();
    let mut push = |name, residual: f64, threshold, samples| {
        out.push(CheckResult {
            name,
            residual,
            threshold,
            samples,
        })
    };

    let mut rng = stream(0);
    let mut worst = 0.0f64;
    for _ in 0..s {
        worst = worst.max(random_generator_word(n, 6, &mut rng)?.residual());
    }
    push("symplectic_generators", worst, cfg.tau_sym, s);

    let mut rng = stream(1);
    let (mut comp, mut chart) = (0.0f64, 0.0f64);
    for _ in 0..s {
        let m1 = random_symplectic_wide(n, &mut rng);
        let m2 = random_symplectic_wide(n, &mut rng);
        let z = random_siegel_point(n, &mut rng);
        let lhs = mobius(&(&m1 * &m2), &z)?;
        comp = comp.max(lhs.max_abs_diff(&mobius(&m1, &mobius(&m2, &z)?)?));
        let g = grassmann_act(&m1, &GrassmannPoint::from_siegel(&z))?;
        let w = mobius(&m1, &z)?;
        chart = chart.max(match g.chart() {
            Some(c) => cmax(&(c - w.z())),
            None => g.subspace_distance(&GrassmannPoint::from_siegel(&w)),
        });
    }
    push("mobius_composition", comp, cfg.tau_act, s);
    push("chart_equivariance", chart, cfg.tau_act, s);

    let mut rng = stream(2);
    let mut chain = 0.0f64;
    for _ in 0..s {
        let m1 = random_symplectic_wide(n, &mut rng);
        let m2 = random_symplectic_wide(n, &mut rng);
        let z = random_siegel_point(n, &mut rng);
        let v = CMat::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let tv = TangentVector { v, base: z };
        let lhs = pushforward(&(&m1 * &m2), &tv)?;
        let rhs = pushforward(&m1, &pushforward(&m2, &tv)?)?;
        chain = chain.max(cmax(&(lhs.v - rhs.v)));
    }
    push("pushforward_chain_rule", chain, cfg.tau_act, s);

    if n == 2 {
        let mut rng = stream(3);
        let mut worst = 0.0f64;
        for _ in 0..s {
            let m = random_generator_word(2, 6, &mut rng)?;
            let z = random_siegel_point(2, &mut rng);
            let nb = normal_bundle_check(&m, &z)?;
            let expected = C64::from(1.0) / automorphy_factor(&m, &z);
            worst = worst
                .max(nb.residual)
                .max((nb.coefficient - expected).norm() / expected.norm());
        }
        push("normal_bundle", worst, cfg.tau_act, s);
    }

    let mut rng = stream(4);
    let mut wrong = 0usize;
    for _ in 0..s {
        let u = random_unitary(n, 2.0, &mut rng);
        let m = embed_unitary(&u);
        match stabilizer_test(&m, cfg.tau_act) {
            Some(back) if back.max_abs_diff(&u) <= cfg.tau_act => {}
            _ => wrong += 1,
        }
        let p = random_positive_symplectic(n, 0.5, &mut rng);
        let moved = &(&m * &p) * &embed_unitary(&random_unitary(n, 2.0, &mut rng));
        if (p.as_matrix() - crate::RMat::identity(2 * n, 2 * n)).norm() >= 0.1 && stabilizer_test(&moved, cfg.tau_act).is_some() {
            wrong += 1;
        }
    }
    push("stabilizer_misclassified", wrong as f64, 0.0, s);

    let mut rng = stream(5);
    let density_samples = (s / 10).max(5);
    let mut worst = 0.0f64;
    for _ in 0..density_samples {
        let m = random_symplectic_wide(n, &mut rng);
        let z = random_siegel_point(n, &mut rng);
        let lhs = invariant_density(&mobius(&m, &z)?) * mobius_jacobian_fd(&m, &z, 1e-5)?;
        let rhs = invariant_density(&z);
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    push("density_invariance", worst, 1e-4, density_samples);

    let mut rng = stream(6);
    let (mut inv, mut assoc) = (0.0f64, 0.0f64);
    for _ in 0..s {
        let a = random_cover_element(n, &mut rng)?;
        let b = random_cover_element(n, &mut rng)?;
        let c = random_cover_element(n, &mut rng)?;
        let ab = cover_mul(&a, &b)?;
        inv = inv.max(ab.invariant_residual()?);
        let lhs = cover_mul(&ab, &c)?;
        let rhs = cover_mul(&a, &cover_mul(&b, &c)?)?;
        assoc = assoc.max((lhs.w() - rhs.w()).abs());
    }
    push("cover_invariant", inv, cfg.tau_cov, s);
    push("associativity", assoc, 1e-7, s);

    let mut rng = stream(7);
    let centers = center_elements(n, -2.0, 2.0)?;
    let central_samples = (s / 5).max(1);
    let mut worst = 0.0f64;
    for _ in 0..central_samples {
        let g = random_cover_element(n, &mut rng)?;
        for z in &centers {
            let z = z.to_cover(n);
            let a = cover_mul(&z, &g)?;
            let b = cover_mul(&g, &z)?;
            worst = worst.max(a.matrix().max_abs_diff(b.matrix())).max((a.w() - b.w()).abs());
        }
    }
    push("centrality", worst, cfg.tau_cov, central_samples);

    let relation = if n % 2 == 1 {
        let half = CenterElement::new(-1, 1, n)?.to_cover(n);
        let sq = cover_mul(&half, &half)?;
        let one = CenterElement::new(1, 2, n)?.to_cover(n);
        sq.matrix().max_abs_diff(one.matrix()).max((sq.w() - one.w()).abs())
    } else {
        let t = CenterElement::new(-1, 0, n)?.to_cover(n);
        let sq = cover_mul(&t, &t)?;
        sq.matrix().max_abs_diff(CoverElement::identity(n).matrix()).max(sq.w().abs())
    };
    push("center_relations", relation, 0.0, 1);

    let mut rng = stream(8);
    let ext_samples = (s / 5).max(1);
    let (mut axiom, mut well, mut hom, mut equi, mut kernel) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..ext_samples {
        let a = random_ext(&fiber, &mut rng)?;
        let b = random_ext(&fiber, &mut rng)?;
        let p = random_model_point(n, &mut rng);
        let ab = fiber.mul(&a, &b)?;
        axiom = axiom.max(fiber.act(&ab, &p)?.distance(&fiber.act(&a, &fiber.act(&b, &p)?)?));

        let z = centers[rng.random_range(0..centers.len())];
        let lhs = fiber.act_pair(&cover_mul(&a.g, &z.to_cover(n))?, a.r - fiber.iota(&z), &p)?;
        well = well.max(lhs.distance(&fiber.act(&a, &p)?));

        hom = hom.max(fiber.eta(&ab).distance(&crate::extension::ProjectiveMatrix::new(
            &(a.g.matrix() * b.g.matrix()),
        )));
        let image = fiber.act(&a, &p)?;
        equi = equi.max(image.z.max_abs_diff(&mobius(a.g.matrix(), &p.z)?));

        let r: f64 = rng.random_range(-3.0..3.0);
        let fiber_only = fiber.make(&CoverElement::identity(n), r)?;
        kernel = kernel.max(if fiber.eta(&fiber_only).is_identity(1e-12) { 0.0 } else { 1.0 });
        let central = fiber.make(&z.to_cover(n), r)?;
        kernel = kernel.max(fiber.distance(&central, &fiber.make(&CoverElement::identity(n), r + fiber.iota(&z))?)?);
    }
    push("action_axiom", axiom, cfg.tau_act, ext_samples);
    push("well_definedness", well, cfg.tau_act, ext_samples);
    push("eta_homomorphism", hom, 1e-8, ext_samples);
    push("descended_equivariance", equi, cfg.tau_act, ext_samples);
    push("exact_sequence_kernel", kernel, 1e-8, ext_samples);

    let chi_ok = format_rational(&euler_char_sp(1)?) == "-1/12" && format_rational(&euler_char_sp(2)?) == "-1/1440";
    push("euler_characteristic", if chi_ok { 0.0 } else { 1.0 }, 0.0, 2);

    if n <= 4 {
        let mut rng = stream(9);
        let mc_samples = 200 * s;
        let m = random_symplectic_wide(n, &mut rng);
        let mc = product_measure_check(&m, rng.random(), &MeasureBox::standard(n), mc_samples, cfg.seed ^ 0x5eed)?;
        push("measure_invariance", mc.residual, mc.allowance, mc_samples);
    }

    Ok(out)
}
