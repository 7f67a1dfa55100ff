//! The `spgeom` command-line surface.
//!
//! Every subcommand emits a JSON [`Report`]. Exit codes: 0 pass, 1 report
//! produced but not passing, 2 usage error, 3 JSON or I/O error, 4 geometry
//! error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cover::{center_elements, cover_mul, lift};
use crate::error::GeomError;
use crate::extension::{bundle_projection, Fiber, ProjectiveMatrix};
use crate::io::{
    ComplexJson, ComplexMatrixJson, CoverJson, DescriptorJson, ExtJson, MatrixJson, ModelPointJson, Report,
    SiegelJson,
};
use crate::rng::substream;
use crate::siegel::{automorphy_factor, mobius_report, normal_bundle_check, pushforward, TangentVector};
use crate::suite::run_suite;
use crate::symplectic::{random_generator_word, symplectic_residual};
use crate::volume::{
    euler_char_sp, format_rational, parse_rational, product_measure_check, seifert_volume, MeasureBox,
};
use crate::C64;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "SPGEOM_CONFIG";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_GEOM: i32 = 4;

/// Run configuration; file values are overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub tau_sym: f64,
    pub tau_act: f64,
    pub tau_cov: f64,
    pub fiber_exponent: i64,
    pub seed: u64,
    pub samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 2,
            tau_sym: crate::tol::SYM,
            tau_act: crate::tol::ACT,
            tau_cov: crate::tol::COV,
            fiber_exponent: 1,
            seed: 42,
            samples: 500,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n must be positive".into());
        }
        for (name, v) in [("tau_sym", self.tau_sym), ("tau_act", self.tau_act), ("tau_cov", self.tau_cov)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a positive number"));
            }
        }
        if self.fiber_exponent == 0 {
            return Err("fiber_exponent must be nonzero".into());
        }
        if self.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "spgeom", version, about = "Symplectic group, Siegel space and central extension toolkit")]
struct Cli {
    /// Configuration file (JSON); defaults to $SPGEOM_CONFIG.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    tau_sym: Option<f64>,
    #[arg(long, global = true)]
    tau_act: Option<f64>,
    #[arg(long, global = true)]
    tau_cov: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    fiber_exponent: Option<i64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Also write the report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// JSON-valued arguments are inline when they start with `{` or `[`, and file
/// paths otherwise.
#[derive(Debug, Subcommand)]
enum Command {
    /// Test MᵀΩM = Ω.
    VerifySymplectic {
        #[arg(long)]
        matrix: String,
    },
    /// Möbius action on a Siegel point.
    Act {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        point: String,
    },
    /// Tangent map of the action.
    Pushforward {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        point: String,
        #[arg(long)]
        vector: String,
    },
    /// Invariance of span{vec₁} under the tangent map (n = 2).
    CheckNormalBundle {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        point: String,
    },
    /// Principal lift to the universal cover.
    Lift {
        #[arg(long)]
        matrix: String,
    },
    /// Product in the universal cover.
    CoverMul {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Enumerate central elements with lift index in a range `a..b`.
    Center {
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
    /// Product in the central extension.
    ExtMul {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Action of an extension element on a model-space point.
    ExtAct {
        #[arg(long)]
        element: String,
        #[arg(long)]
        point: String,
    },
    /// Projection to PSp(2n, R).
    Eta {
        #[arg(long)]
        element: String,
    },
    /// Bundle projection of a model-space point.
    Project {
        #[arg(long)]
        point: String,
    },
    /// Exact Euler characteristic of Sp(2n, Z).
    EulerChar,
    /// Volume of a Seifert-like quotient from its descriptor.
    Volume {
        #[arg(long)]
        descriptor: String,
    },
    /// Monte-Carlo product-measure invariance check.
    MeasureCheck {
        /// Check parameters (JSON): matrix, r, box, samples, seed.
        #[arg(long = "config", value_name = "JSON")]
        params: Option<String>,
    },
    /// Run the full verification battery.
    Suite,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Parse(String),
    Geom(GeomError),
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        Failure::Geom(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Parse(format!("invalid JSON: {e}"))
    }
}

fn read_json_arg<T: for<'de> Deserialize<'de>>(arg: &str) -> Result<(T, Value), Failure> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Parse(format!("cannot read {arg}: {e}")))?
    };
    let value: Value = serde_json::from_str(&text)?;
    let parsed = serde_json::from_value(value.clone())?;
    Ok((parsed, value))
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env_path) {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Failure::Parse(format!("cannot read config {}: {e}", p.display())))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxJson {
    base: Vec<(f64, f64)>,
    fiber: (f64, f64),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MeasureParams {
    matrix: Option<MatrixJson>,
    r: f64,
    #[serde(rename = "box")]
    region: Option<BoxJson>,
    samples: Option<usize>,
    seed: Option<u64>,
}

fn parse_bound(s: &str) -> Result<f64, Failure> {
    use num_traits::ToPrimitive;
    if let Ok(x) = s.trim().parse::<f64>() {
        return Ok(x);
    }
    parse_rational(s)
        .ok()
        .and_then(|q| q.to_f64())
        .ok_or_else(|| Failure::Usage(format!("invalid range bound {s:?}")))
}

fn execute(cli: &Cli, cfg: &Config) -> Result<Report, Failure> {
    let tau_sym = cfg.tau_sym;
    let report = match &cli.command {
        Command::VerifySymplectic { matrix } => {
            let (mj, input): (MatrixJson, _) = read_json_arg(matrix)?;
            let residual = symplectic_residual(&mj.to_matrix()?)?;
            let mut r = Report::new("verify-symplectic", json!({ "matrix": input }));
            r.outputs = json!({ "symplectic": residual <= tau_sym });
            r.residual("symplectic", residual, tau_sym);
            r
        }
        Command::Act { matrix, point } => {
            let (mj, mi): (MatrixJson, _) = read_json_arg(matrix)?;
            let (pj, pi): (SiegelJson, _) = read_json_arg(point)?;
            let out = mobius_report(&mj.to_symplectic(tau_sym)?, &pj.to_point(tau_sym)?)?;
            let mut r = Report::new("act", json!({ "matrix": mi, "point": pi }));
            r.outputs = json!({ "point": SiegelJson::from_point(&out.point), "condition": out.condition });
            r.residual("symmetry_drift", out.drift, cfg.tau_act);
            r
        }
        Command::Pushforward { matrix, point, vector } => {
            let (mj, mi): (MatrixJson, _) = read_json_arg(matrix)?;
            let (pj, pi): (SiegelJson, _) = read_json_arg(point)?;
            let (vj, vi): (ComplexMatrixJson, _) = read_json_arg(vector)?;
            let tv = TangentVector {
                v: vj.to_matrix()?,
                base: pj.to_point(tau_sym)?,
            };
            let out = pushforward(&mj.to_symplectic(tau_sym)?, &tv)?;
            let mut r = Report::new("pushforward", json!({ "matrix": mi, "point": pi, "vector": vi }));
            r.outputs = json!({
                "vector": ComplexMatrixJson::from_matrix(&out.v),
                "base": SiegelJson::from_point(&out.base),
            });
            r
        }
        Command::CheckNormalBundle { matrix, point } => {
            let (mj, mi): (MatrixJson, _) = read_json_arg(matrix)?;
            let (pj, pi): (SiegelJson, _) = read_json_arg(point)?;
            let m = mj.to_symplectic(tau_sym)?;
            let z = pj.to_point(tau_sym)?;
            let nb = normal_bundle_check(&m, &z)?;
            let expected = C64::from(1.0) / automorphy_factor(&m, &z);
            let mut r = Report::new("check-normal-bundle", json!({ "matrix": mi, "point": pi }));
            r.outputs = json!({
                "coefficient": ComplexJson::from(nb.coefficient),
                "expected": ComplexJson::from(expected),
            });
            r.residual("off_span", nb.residual, cfg.tau_act);
            r.residual(
                "coefficient_error",
                (nb.coefficient - expected).norm() / expected.norm(),
                cfg.tau_act,
            );
            r
        }
        Command::Lift { matrix } => {
            let (mj, mi): (MatrixJson, _) = read_json_arg(matrix)?;
            let g = lift(&mj.to_symplectic(tau_sym)?)?;
            let mut r = Report::new("lift", json!({ "matrix": mi }));
            r.outputs = json!({ "element": CoverJson::from_element(&g) });
            r.residual("cover_invariant", g.invariant_residual()?, cfg.tau_cov);
            r
        }
        Command::CoverMul { left, right } => {
            let (a, ai): (CoverJson, _) = read_json_arg(left)?;
            let (b, bi): (CoverJson, _) = read_json_arg(right)?;
            let g = cover_mul(&a.to_element(tau_sym, cfg.tau_cov)?, &b.to_element(tau_sym, cfg.tau_cov)?)?;
            let mut r = Report::new("cover-mul", json!({ "left": ai, "right": bi }));
            r.outputs = json!({ "element": CoverJson::from_element(&g) });
            r.residual("cover_invariant", g.invariant_residual()?, cfg.tau_cov);
            r
        }
        Command::Center { range } => {
            let (lo, hi) = range
                .split_once("..")
                .ok_or_else(|| Failure::Usage(format!("range must look like a..b, got {range:?}")))?;
            let (lo, hi) = (parse_bound(lo)?, parse_bound(hi)?);
            let fiber = Fiber::new(cfg.n, cfg.fiber_exponent)?;
            let elements: Vec<Value> = center_elements(cfg.n, lo, hi)?
                .iter()
                .map(|z| {
                    json!({
                        "sign": z.sign,
                        "k": format_rational(&num_rational::BigRational::new(z.k2().into(), 2.into())),
                        "w": z.k(),
                        "iota": fiber.iota(z),
                    })
                })
                .collect();
            let mut r = Report::new("center", json!({ "n": cfg.n, "range": range }));
            r.outputs = json!({ "elements": elements });
            r
        }
        Command::ExtMul { left, right } => {
            let fiber = Fiber::new(cfg.n, cfg.fiber_exponent)?;
            let (a, ai): (ExtJson, _) = read_json_arg(left)?;
            let (b, bi): (ExtJson, _) = read_json_arg(right)?;
            let e = fiber.mul(
                &a.to_element(&fiber, tau_sym, cfg.tau_cov)?,
                &b.to_element(&fiber, tau_sym, cfg.tau_cov)?,
            )?;
            let mut r = Report::new("ext-mul", json!({ "left": ai, "right": bi }));
            r.outputs = json!({ "element": ExtJson::from_element(&e) });
            r.residual("cover_invariant", e.g.invariant_residual()?, cfg.tau_cov);
            r
        }
        Command::ExtAct { element, point } => {
            let fiber = Fiber::new(cfg.n, cfg.fiber_exponent)?;
            let (ej, ei): (ExtJson, _) = read_json_arg(element)?;
            let (pj, pi): (ModelPointJson, _) = read_json_arg(point)?;
            let p = fiber.act(&ej.to_element(&fiber, tau_sym, cfg.tau_cov)?, &pj.to_point(tau_sym)?)?;
            let mut r = Report::new("ext-act", json!({ "element": ei, "point": pi }));
            r.outputs = json!({ "point": ModelPointJson::from_point(&p) });
            r
        }
        Command::Eta { element } => {
            let fiber = Fiber::new(cfg.n, cfg.fiber_exponent)?;
            let (ej, ei): (ExtJson, _) = read_json_arg(element)?;
            let class: ProjectiveMatrix = fiber.eta(&ej.to_element(&fiber, tau_sym, cfg.tau_cov)?);
            let mut r = Report::new("eta", json!({ "element": ei }));
            r.outputs = json!({
                "matrix": MatrixJson::from_matrix(class.as_matrix()),
                "is_identity": class.is_identity(tau_sym),
            });
            r
        }
        Command::Project { point } => {
            let (pj, pi): (ModelPointJson, _) = read_json_arg(point)?;
            let p = pj.to_point(tau_sym)?;
            let mut r = Report::new("project", json!({ "point": pi }));
            r.outputs = json!({ "point": SiegelJson::from_point(bundle_projection(&p)) });
            r
        }
        Command::EulerChar => {
            let n = u32::try_from(cfg.n).map_err(|_| Failure::Usage("n too large".into()))?;
            let chi = euler_char_sp(n)?;
            let mut r = Report::new("euler-char", json!({ "n": cfg.n }));
            r.outputs = json!({ "chi": format_rational(&chi) });
            r
        }
        Command::Volume { descriptor } => {
            let (dj, di): (DescriptorJson, _) = read_json_arg(descriptor)?;
            let d = dj.to_descriptor()?;
            let v = seifert_volume(&d);
            let mut r = Report::new("volume", json!({ "descriptor": di }));
            r.outputs = json!({
                "volume": format_rational(&v.volume),
                "signed_volume": format_rational(&v.signed),
                "sign_convention_applied": v.sign_convention_applied,
                "fiber_covolume": format_rational(&d.fiber_covolume),
            });
            r
        }
        Command::MeasureCheck { params } => {
            let (mp, input): (MeasureParams, Value) = match params {
                Some(p) => read_json_arg(p)?,
                None => (MeasureParams::default(), json!({})),
            };
            let seed = mp.seed.unwrap_or(cfg.seed);
            let m = match &mp.matrix {
                Some(mj) => mj.to_symplectic(tau_sym)?,
                None => random_generator_word(cfg.n, 3, &mut substream(seed, 0))?,
            };
            let region = match mp.region {
                Some(b) => MeasureBox {
                    base: b.base,
                    fiber: b.fiber,
                },
                None => MeasureBox::standard(m.n()),
            };
            let samples = mp.samples.unwrap_or(cfg.samples);
            let chk = product_measure_check(&m, mp.r, &region, samples, seed)?;
            let mut r = Report::new("measure-check", json!({ "config": input, "seed": seed, "samples": samples }));
            r.outputs = json!({
                "matrix": MatrixJson::from_matrix(m.as_matrix()),
                "lambda": chk.lambda,
                "lambda_preimage": chk.lambda_preimage,
                "allowance": chk.allowance,
            });
            r.residual("measure", chk.residual, chk.allowance);
            r
        }
        Command::Suite => {
            let checks = run_suite(cfg)?;
            let mut r = Report::new("suite", serde_json::to_value(cfg)?);
            let rows: Vec<Value> = checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "residual": c.residual,
                        "threshold": c.threshold,
                        "samples": c.samples,
                        "pass": c.pass(),
                    })
                })
                .collect();
            r.outputs = json!({ "checks": rows });
            for c in &checks {
                r.residual(c.name, c.residual, c.threshold);
            }
            r
        }
    };
    Ok(report)
}

/// Runs the tool on `args` (including the program name); returns the exit
/// code and the text destined for standard output (a report) or standard
/// error (a diagnostic).
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            return (code, e.to_string());
        }
    };
    let outcome = load_config(cli.config.as_deref()).and_then(|mut cfg| {
        if let Some(v) = cli.n {
            cfg.n = v;
        }
        if let Some(v) = cli.tau_sym {
            cfg.tau_sym = v;
        }
        if let Some(v) = cli.tau_act {
            cfg.tau_act = v;
        }
        if let Some(v) = cli.tau_cov {
            cfg.tau_cov = v;
        }
        if let Some(v) = cli.fiber_exponent {
            cfg.fiber_exponent = v;
        }
        if let Some(v) = cli.seed {
            cfg.seed = v;
        }
        if let Some(v) = cli.samples {
            cfg.samples = v;
        }
        cfg.validate().map_err(Failure::Usage)?;
        execute(&cli, &cfg)
    });
    match outcome {
        Ok(report) => {
            let text = report.to_json();
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                    return (EXIT_PARSE, format!("cannot write {}: {e}", path.display()));
                }
            }
            (if report.pass { EXIT_PASS } else { EXIT_FAIL }, text)
        }
        Err(Failure::Usage(msg)) => (EXIT_USAGE, format!("usage error: {msg}")),
        Err(Failure::Parse(msg)) => (EXIT_PARSE, format!("parse error: {msg}")),
        Err(Failure::Geom(e)) => (EXIT_GEOM, format!("error: {e}")),
    }
}
