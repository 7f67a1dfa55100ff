//! Acceptance battery. Prints one line per criterion and exits nonzero if any
//! criterion fails.
//!
//! Run with `cargo test --release --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::Signed;
use rand::Rng;

use siegel_fiber::cover::{
    center_elements, cover_inverse, cover_mul, lift, random_cover_element, CenterElement, CoverElement,
};
use siegel_fiber::extension::{Fiber, ModelPoint, ProjectiveMatrix};
use siegel_fiber::rng::substream;
use siegel_fiber::siegel::{
    mobius, normal_bundle_check, random_siegel_point, stabilizer_test, SiegelPoint,
};
use siegel_fiber::symplectic::{
    circle_map, embed_unitary, gen_d, gen_n, omega, random_generator_word, random_positive_symplectic,
    random_symplectic_wide, random_unitary, SymplecticMatrix,
};
use siegel_fiber::volume::{
    euler_char_sp, format_rational, parse_rational, product_measure_check, seifert_volume, MeasureBox,
    SeifertDescriptor,
};
use siegel_fiber::{cli, CMat, RMat, C64};

const SEED: u64 = 20_240_601;
const TAU: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn cmax(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_point(n: usize, rng: &mut impl Rng) -> ModelPoint {
    ModelPoint {
        z: random_siegel_point(n, rng),
        t: rng.random_range(-1.0..1.0),
    }
}

/// `det(CZ + D)` straight from the blocks, independent of the library's
/// automorphy code.
fn det_cz_plus_d(m: &SymplecticMatrix, z: &CMat) -> C64 {
    let n = m.n();
    let mm = m.as_matrix();
    let c = CMat::from_fn(n, n, |i, j| C64::from(mm[(n + i, j)]));
    let d = CMat::from_fn(n, n, |i, j| C64::from(mm[(n + i, n + j)]));
    (c * z + d).determinant()
}

/// `(AZ + B)(CZ + D)⁻¹` from the blocks.
fn mobius_direct(m: &SymplecticMatrix, z: &CMat) -> CMat {
    let n = m.n();
    let mm = m.as_matrix().map(C64::from);
    let blk = |r: usize, c: usize| mm.view((r, c), (n, n)).into_owned();
    let num = blk(0, 0) * z + blk(0, n);
    let den = blk(n, 0) * z + blk(n, n);
    num * den.try_inverse().expect("CZ + D is invertible on the Siegel space")
}

fn euler_characteristic() -> Outcome {
    let mut worst = Duration::ZERO;
    let mut ok = true;
    for (n, want) in [("2", "-1/1440"), ("1", "-1/12")] {
        let start = Instant::now();
        let (code, out) = cli::run(["spgeom", "euler-char", "--n", n]);
        worst = worst.max(start.elapsed());
        ok &= code == cli::EXIT_PASS && out.contains(&format!("\"chi\": \"{want}\""));
    }
    // Independent route through the library.
    ok &= format_rational(&euler_char_sp(2).unwrap()) == "-1/1440";
    ok &= format_rational(&euler_char_sp(1).unwrap()) == "-1/12";
    let fast = worst < Duration::from_millis(1);
    outcome(ok && fast, format!("chi(Sp4Z) = -1/1440, chi(Sp2Z) = -1/12, slowest call {worst:?}"))
}

fn normal_bundle() -> Outcome {
    let mut rng = substream(SEED, 2);
    let start = Instant::now();
    let points: Vec<SiegelPoint> = (0..100).map(|_| random_siegel_point(2, &mut rng)).collect();
    let (mut off, mut rel) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = random_generator_word(2, 6, &mut rng).unwrap();
        for z in &points {
            let nb = normal_bundle_check(&m, z).unwrap();
            let want = C64::from(1.0) / det_cz_plus_d(&m, z.z());
            off = off.max(nb.residual / nb.coefficient.norm().max(1.0));
            rel = rel.max((nb.coefficient - want).norm() / want.norm());
        }
    }
    let t = start.elapsed();
    outcome(
        off < 1e-8 && rel < 1e-8 && t < Duration::from_secs(10),
        format!("1000 words x 100 points: off-span {off:.2e}, coefficient rel {rel:.2e}, {t:?}"),
    )
}

fn generator_coefficients() -> Outcome {
    let mut rng = substream(SEED, 3);
    let (mut om, mut dd, mut nn) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let z = random_siegel_point(2, &mut rng);
        let c = normal_bundle_check(&omega(2), &z).unwrap().coefficient;
        let want = C64::from(1.0) / z.z().determinant();
        om = om.max((c - want).norm() / want.norm());

        let a = loop {
            let a = RMat::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
            if a.determinant().abs() > 0.1 {
                break a;
            }
        };
        let c = normal_bundle_check(&gen_d(&a).unwrap(), &z).unwrap().coefficient;
        let want = a.determinant();
        dd = dd.max((c - want).norm() / want.abs());

        let b = RMat::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
        let b = (&b + b.transpose()) * 0.5;
        let c = normal_bundle_check(&gen_n(&b, 1e-12).unwrap(), &z).unwrap().coefficient;
        nn = nn.max((c - 1.0).norm());
    }
    outcome(
        om < 1e-10 && dd < 1e-10 && nn < 1e-10,
        format!("Omega -> 1/det Z {om:.2e}, gen_D -> det A {dd:.2e}, gen_N -> 1 {nn:.2e}"),
    )
}

fn mobius_axioms() -> Outcome {
    let mut rng = substream(SEED, 4);
    let mut comp = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=3);
        let m1 = random_symplectic_wide(n, &mut rng);
        let m2 = random_symplectic_wide(n, &mut rng);
        let z = random_siegel_point(n, &mut rng);
        let lhs = mobius(&(&m1 * &m2), &z).unwrap();
        let rhs = mobius(&m1, &mobius(&m2, &z).unwrap()).unwrap();
        comp = comp.max(lhs.max_abs_diff(&rhs) / cmax(lhs.z()).max(1.0));
    }
    let (mut false_neg, mut false_pos, mut recovered) = (0usize, 0usize, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(1..=3);
        let u = random_unitary(n, 3.0, &mut rng);
        match stabilizer_test(&embed_unitary(&u), TAU) {
            Some(back) => recovered = recovered.max(back.max_abs_diff(&u)),
            None => false_neg += 1,
        }
        let p = loop {
            let p = random_positive_symplectic(n, 0.5, &mut rng);
            if (p.as_matrix() - RMat::identity(2 * n, 2 * n)).norm() > 0.1 {
                break p;
            }
        };
        let v = random_unitary(n, 3.0, &mut rng);
        let moved = &(&embed_unitary(&u) * &p) * &embed_unitary(&v);
        if stabilizer_test(&moved, TAU).is_some() {
            false_pos += 1;
        }
    }
    outcome(
        comp < TAU && recovered < TAU && false_neg == 0 && false_pos == 0,
        format!(
            "composition {comp:.2e}; stabilizer false-neg {false_neg}, false-pos {false_pos}, recovery {recovered:.2e}"
        ),
    )
}

fn cover_soundness() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 3] {
        let mut rng = substream(SEED, 50 + n as u64);
        let (mut inv, mut assoc, mut inverse) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..500 {
            let a = random_cover_element(n, &mut rng).unwrap();
            let b = random_cover_element(n, &mut rng).unwrap();
            let c = random_cover_element(n, &mut rng).unwrap();
            let ab = cover_mul(&a, &b).unwrap();
            // Oracle: the invariant from the circle map of the raw product.
            let phase = circle_map(ab.matrix()).unwrap();
            inv = inv.max((C64::from_polar(1.0, std::f64::consts::TAU * ab.w()) - phase).norm());
            let lhs = cover_mul(&ab, &c).unwrap();
            let rhs = cover_mul(&a, &cover_mul(&b, &c).unwrap()).unwrap();
            assoc = assoc.max((lhs.w() - rhs.w()).abs());
            let e = cover_mul(&a, &cover_inverse(&a).unwrap()).unwrap();
            inverse = inverse.max(e.w().abs());
        }

        let centers = center_elements(n, -2.0, 2.0).unwrap();
        let mut central = 0.0f64;
        for _ in 0..100 {
            let g = random_cover_element(n, &mut rng).unwrap();
            for z in &centers {
                let z = z.to_cover(n);
                let zg = cover_mul(&z, &g).unwrap();
                let gz = cover_mul(&g, &z).unwrap();
                central = central.max(zg.matrix().max_abs_diff(gz.matrix())).max((zg.w() - gz.w()).abs());
            }
        }

        let relation = if n % 2 == 1 {
            let half = CenterElement::new(-1, 1, n).unwrap().to_cover(n);
            let sq = cover_mul(&half, &half).unwrap();
            sq.matrix().max_abs_diff(CoverElement::identity(n).matrix()).max((sq.w() - 1.0).abs())
        } else {
            let t = CenterElement::new(-1, 0, n).unwrap().to_cover(n);
            let sq = cover_mul(&t, &t).unwrap();
            sq.matrix().max_abs_diff(CoverElement::identity(n).matrix()).max(sq.w().abs())
        };
        ok &= inv < TAU && assoc < 1e-7 && inverse < 1e-7 && central < TAU && relation == 0.0;
        parts.push(format!(
            "n={n}: invariant {inv:.1e} assoc {assoc:.1e} central {central:.1e} relation {relation}"
        ));
    }
    let t = start.elapsed();
    outcome(ok && t < Duration::from_secs(60), format!("{}; {t:?}", parts.join("; ")))
}

fn exact_sequence() -> Outcome {
    let n = 2;
    let fiber = Fiber::new(n, 1).unwrap();
    let mut rng = substream(SEED, 6);
    let centers = center_elements(n, -2.0, 2.0).unwrap();
    let (mut kernel_miss, mut hom, mut descend) = (0usize, 0.0f64, 0.0f64);
    for _ in 0..500 {
        let r: f64 = rng.random_range(-3.0..3.0);
        // Fiber subgroup lies in ker eta.
        let f = fiber.make(&CoverElement::identity(n), r).unwrap();
        if !fiber.eta(&f).is_identity(1e-12) {
            kernel_miss += 1;
        }
        // ker eta lies in the fiber subgroup: anything over ±I is (id, r').
        let z = centers[rng.random_range(0..centers.len())];
        let e = fiber.make(&z.to_cover(n), r).unwrap();
        if !fiber.eta(&e).is_identity(1e-12) {
            kernel_miss += 1;
        }
        let as_fiber = fiber.make(&CoverElement::identity(n), r + fiber.iota(&z)).unwrap();
        if fiber.distance(&e, &as_fiber).unwrap() > TAU {
            kernel_miss += 1;
        }
        // Elements off the kernel are detected.
        let g = random_cover_element(n, &mut rng).unwrap();
        let a = fiber.make(&g, r).unwrap();
        if fiber.eta(&a).is_identity(1e-6) {
            kernel_miss += 1;
        }

        let b = fiber.make(&random_cover_element(n, &mut rng).unwrap(), rng.random_range(-3.0..3.0)).unwrap();
        let ab = fiber.mul(&a, &b).unwrap();
        let raw = ProjectiveMatrix::new(&(a.g.matrix() * b.g.matrix()));
        hom = hom.max(fiber.eta(&ab).distance(&raw) / raw.as_matrix().norm());

        let p = random_point(n, &mut rng);
        let image = fiber.act(&a, &p).unwrap();
        let want = mobius_direct(a.g.matrix(), p.z.z());
        descend = descend.max(cmax(&(image.z.z() - &want)) / cmax(&want).max(1.0));
    }
    outcome(
        kernel_miss == 0 && hom < 1e-8 && descend < 1e-8,
        format!("kernel misses {kernel_miss}, eta hom {hom:.2e}, descended action {descend:.2e}"),
    )
}

fn well_definedness() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 3] {
        let fiber = Fiber::new(n, 1).unwrap();
        let mut rng = substream(SEED, 70 + n as u64);
        let centers = center_elements(n, -2.0, 2.0).unwrap();
        let base = ModelPoint::basepoint(n);
        let (mut right_h, mut axiom, mut central) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..200 {
            let g = random_cover_element(n, &mut rng).unwrap();
            let r: f64 = rng.random_range(-3.0..3.0);

            // (g, r)·(x h) = (g, r)·x with h over SU(n) at w = 0.
            let x = random_cover_element(n, &mut rng).unwrap();
            let u = random_unitary(n, 3.0, &mut rng);
            let su = u.rotate(-u.det().arg() / n as f64);
            let h = lift(&embed_unitary(&su)).unwrap();
            let x_pt = fiber.act_pair(&x, 0.0, &base).unwrap();
            let xh_pt = fiber.act_pair(&cover_mul(&x, &h).unwrap(), 0.0, &base).unwrap();
            let lhs = fiber.act_pair(&g, r, &xh_pt).unwrap();
            let rhs = fiber.act_pair(&g, r, &x_pt).unwrap();
            right_h = right_h.max(lhs.distance(&rhs));

            // ((g2, r2)(g1, r1))·p = (g2, r2)·((g1, r1)·p) on raw pairs.
            let g1 = random_cover_element(n, &mut rng).unwrap();
            let r1: f64 = rng.random_range(-3.0..3.0);
            let p = random_point(n, &mut rng);
            let lhs = fiber.act_pair(&cover_mul(&g, &g1).unwrap(), r + r1, &p).unwrap();
            let rhs = fiber.act_pair(&g, r, &fiber.act_pair(&g1, r1, &p).unwrap()).unwrap();
            axiom = axiom.max(lhs.distance(&rhs));

            // (z, ι(z)⁻¹) acts trivially.
            let z = centers[rng.random_range(0..centers.len())];
            let moved = fiber.act_pair(&z.to_cover(n), -fiber.iota(&z), &p).unwrap();
            central = central.max(moved.distance(&p));
        }
        ok &= right_h < TAU && axiom < TAU && central < TAU;
        parts.push(format!("n={n}: right-H {right_h:.1e} axiom {axiom:.1e} central {central:.1e}"));
    }
    outcome(ok, parts.join("; "))
}

fn measure_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = substream(SEED, 8);
    let b = MeasureBox::standard(2);
    let (mut worst, mut sq_big, mut sq_small) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..20u64 {
        let m = random_symplectic_wide(2, &mut rng);
        let r: f64 = rng.random();
        let big = product_measure_check(&m, r, &b, 1_000_000, SEED + k).unwrap();
        let small = product_measure_check(&m, r, &b, 250_000, SEED + 1000 + k).unwrap();
        worst = worst.max(big.residual);
        sq_big += big.residual * big.residual;
        sq_small += small.residual * small.residual;
    }
    let ratio = (sq_small / sq_big).sqrt();
    let t = start.elapsed();
    outcome(
        worst < 5e-3 && (1.0..=4.0).contains(&ratio) && t < Duration::from_secs(120),
        format!("20 elements x 1e6: worst {worst:.2e}, RMS(2.5e5)/RMS(1e6) = {ratio:.2} (expect ~2), {t:?}"),
    )
}

fn volume_pipeline() -> Outcome {
    let q = |s: &str| parse_rational(s).unwrap();
    let mut rng = substream(SEED, 9);
    let mut ok = true;
    for _ in 0..200 {
        let cov = q(&format!("{}/{}", rng.random_range(1..500), rng.random_range(1..500)));
        let chi = q(&format!("{}/{}", rng.random_range(-500..500), rng.random_range(1..500)));
        let d = SeifertDescriptor::new(cov.clone(), chi.clone(), false).unwrap();
        let v = seifert_volume(&d);
        ok &= v.volume == (&cov * &chi).abs() && v.signed == &cov * &chi;
    }
    let chi = euler_char_sp(2).unwrap();
    let psp = seifert_volume(&SeifertDescriptor::from_psp(chi.clone()));
    ok &= psp.volume == chi.abs();
    ok &= SeifertDescriptor::new(q("2"), chi.clone(), true).is_err();
    ok &= SeifertDescriptor::new(q("1"), chi, true).is_ok();
    outcome(ok, "200 exact products; psp path forces covolume 1".to_string())
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 9] = [
        ("1 euler characteristic", euler_characteristic),
        ("2 normal-bundle invariance", normal_bundle),
        ("3 generator coefficients", generator_coefficients),
        ("4 mobius axioms and stabilizer", mobius_axioms),
        ("5 universal cover soundness", cover_soundness),
        ("6 exact sequence", exact_sequence),
        ("7 extended-action well-definedness", well_definedness),
        ("8 product-measure invariance", measure_invariance),
        ("9 volume pipeline", volume_pipeline),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{verdict} [{name}] {} ({:.2?})", o.detail, start.elapsed());
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
