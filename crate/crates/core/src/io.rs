//! JSON schemas shared by the command-line tool and the reports it emits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cover::CoverElement;
use crate::error::{GeomError, Result};
use crate::extension::{ExtElement, Fiber, ModelPoint};
use crate::siegel::SiegelPoint;
use crate::symplectic::SymplecticMatrix;
use crate::volume::{format_rational, parse_rational, SeifertDescriptor};
use crate::{CMat, RMat, C64};

/// `{"n": block size, "rows": [[...], ...]}`; `n` may be omitted on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub rows: Vec<Vec<f64>>,
}

/// `{"re": rows, "im": rows}`; a missing `im` means zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiegelJson {
    pub n: usize,
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    #[serde(rename = "Y")]
    pub y: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverJson {
    pub matrix: MatrixJson,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtJson {
    pub g: CoverJson,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPointJson {
    #[serde(rename = "Z")]
    pub z: SiegelJson,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorJson {
    pub fiber_covolume: String,
    pub base_euler: String,
    pub arises_from_psp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<RMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(GeomError::Shape("matrix has no entries".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(GeomError::Shape("matrix rows have different lengths".into()));
    }
    Ok(RMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl MatrixJson {
    pub fn from_matrix(m: &RMat) -> Self {
        Self {
            n: Some(m.nrows() / 2),
            rows: matrix_to_rows(m),
        }
    }

    /// A plain square block, `n` being its size.
    pub fn from_block(m: &RMat) -> Self {
        Self {
            n: Some(m.nrows()),
            rows: matrix_to_rows(m),
        }
    }

    pub fn to_matrix(&self) -> Result<RMat> {
        rows_to_matrix(&self.rows)
    }

    /// Validates symplecticity within `tau_sym` and the declared block size.
    pub fn to_symplectic(&self, tau_sym: f64) -> Result<SymplecticMatrix> {
        let m = self.to_matrix()?;
        let s = SymplecticMatrix::new(m, tau_sym)?;
        if let Some(n) = self.n {
            if n != s.n() {
                return Err(GeomError::Dimension(format!(
                    "declared n = {n} but the matrix is {0}×{0}",
                    2 * s.n()
                )));
            }
        }
        Ok(s)
    }
}

impl ComplexMatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        Self {
            re: matrix_to_rows(&m.map(|c| c.re)),
            im: matrix_to_rows(&m.map(|c| c.im)),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let re = rows_to_matrix(&self.re)?;
        let im = if self.im.is_empty() {
            RMat::zeros(re.nrows(), re.ncols())
        } else {
            rows_to_matrix(&self.im)?
        };
        if re.shape() != im.shape() {
            return Err(GeomError::Shape("real and imaginary parts differ in shape".into()));
        }
        Ok(CMat::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)])))
    }
}

impl SiegelJson {
    pub fn from_point(p: &SiegelPoint) -> Self {
        Self {
            n: p.n(),
            x: matrix_to_rows(&p.x()),
            y: matrix_to_rows(&p.y()),
        }
    }

    pub fn to_point(&self, tau_sym: f64) -> Result<SiegelPoint> {
        let p = SiegelPoint::from_parts(&rows_to_matrix(&self.x)?, &rows_to_matrix(&self.y)?, tau_sym)?;
        if p.n() != self.n {
            return Err(GeomError::Dimension(format!("declared n = {} but Z is {}×{}", self.n, p.n(), p.n())));
        }
        Ok(p)
    }
}

impl CoverJson {
    pub fn from_element(g: &CoverElement) -> Self {
        Self {
            matrix: MatrixJson::from_matrix(g.matrix().as_matrix()),
            w: g.w(),
        }
    }

    pub fn to_element(&self, tau_sym: f64, tau_cov: f64) -> Result<CoverElement> {
        CoverElement::new(self.matrix.to_symplectic(tau_sym)?, self.w, tau_cov)
    }
}

impl ExtJson {
    pub fn from_element(e: &ExtElement) -> Self {
        Self {
            g: CoverJson::from_element(&e.g),
            r: e.r,
        }
    }

    /// Parses and reduces to normal form.
    pub fn to_element(&self, fiber: &Fiber, tau_sym: f64, tau_cov: f64) -> Result<ExtElement> {
        fiber.make(&self.g.to_element(tau_sym, tau_cov)?, self.r)
    }
}

impl ModelPointJson {
    pub fn from_point(p: &ModelPoint) -> Self {
        Self {
            z: SiegelJson::from_point(&p.z),
            t: p.t,
        }
    }

    pub fn to_point(&self, tau_sym: f64) -> Result<ModelPoint> {
        Ok(ModelPoint {
            z: self.z.to_point(tau_sym)?,
            t: self.t,
        })
    }
}

impl DescriptorJson {
    pub fn from_descriptor(d: &SeifertDescriptor) -> Self {
        Self {
            fiber_covolume: format_rational(&d.fiber_covolume),
            base_euler: format_rational(&d.base_euler),
            arises_from_psp: d.arises_from_psp,
        }
    }

    pub fn to_descriptor(&self) -> Result<SeifertDescriptor> {
        SeifertDescriptor::new(
            parse_rational(&self.fiber_covolume)?,
            parse_rational(&self.base_euler)?,
            self.arises_from_psp,
        )
    }
}

/// The result document of every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub outputs: Value,
    pub residuals: BTreeMap<String, f64>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, inputs: Value) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            outputs: Value::Null,
            residuals: BTreeMap::new(),
            pass: true,
        }
    }

    /// Records a residual; the report fails unless `value ≤ threshold`.
    pub fn residual(&mut self, name: &str, value: f64, threshold: f64) {
        self.pass &= value <= threshold;
        self.residuals.insert(name.to_string(), value);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
