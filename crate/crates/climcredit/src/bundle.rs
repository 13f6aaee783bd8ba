//! Calibrated parameter bundle, serialized as JSON and identified by the
//! SHA-256 of that serialization.

use climcredit_core::economy::{EconomyParams, ReturnsToScale};
use climcredit_core::linalg::{Matrix, Vector};
use climcredit_core::transition::{IntensityCurve, IntensitySet};
use climcredit_core::var_process::VarParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub y0: f64,
    pub g0: f64,
    pub theta: f64,
    /// Fit diagnostic: `ok`, `non_monotone`, `degenerate_flat`,
    /// `theta_floored` or `zero` for an all-zero series.
    pub flag: String,
}

impl CurveParams {
    pub fn curve(&self) -> climcredit_core::Result<IntensityCurve> {
        if self.flag == "zero" {
            return Ok(IntensityCurve::constant(0.0).with_freeze(i64::MAX));
        }
        IntensityCurve::new(self.y0, self.g0, self.theta, i64::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityParams {
    /// Calendar year of curve time 0.
    pub origin_year: i32,
    pub tau: Vec<CurveParams>,
    /// `zeta[j][i]`, input `j` into sector `i`.
    pub zeta: Vec<Vec<CurveParams>>,
    pub kappa: Vec<CurveParams>,
}

impl IntensityParams {
    pub fn set(&self) -> climcredit_core::Result<IntensitySet> {
        let curves = |v: &[CurveParams]| v.iter().map(CurveParams::curve).collect::<climcredit_core::Result<Vec<_>>>();
        IntensitySet::new(
            curves(&self.tau)?,
            self.zeta.iter().map(|r| curves(r)).collect::<climcredit_core::Result<_>>()?,
            curves(&self.kappa)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarBundle {
    pub mu: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub mu_se: Vec<f64>,
    pub gamma_se: Vec<Vec<f64>>,
    /// `(re, im)` pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    pub spectral_radius: f64,
    pub stationary: bool,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub name: String,
    /// Loadings on output growth, when fitted from cash flows.
    pub a_tilde: Option<Vec<f64>>,
    pub a_tilde_se: Option<Vec<f64>>,
    /// Loadings on productivity growth used by valuation.
    pub a: Vec<f64>,
    pub sigma_b: f64,
    pub sigma_b_source: String,
    pub b_ratio: Option<f64>,
    pub barrier_flag: Option<String>,
    pub log_likelihood: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Hash over all input files in a fixed order.
    pub data_sha256: String,
    pub files: Vec<FileHash>,
    /// `ψ^i + Σ_j λ^{ji}` before any renormalization.
    pub elasticity_coverage: Vec<f64>,
    pub panel_years: (i32, i32),
    pub emission_years: (i32, i32),
    pub discount_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBundle {
    pub sectors: Vec<String>,
    pub psi: Vec<f64>,
    /// `lambda[j][i]`, input `j` into sector `i`, as used by the model.
    pub lambda: Vec<Vec<f64>>,
    pub renormalized: bool,
    pub var: VarBundle,
    pub intensities: IntensityParams,
    pub groups: Vec<GroupParams>,
    pub provenance: Provenance,
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

pub fn from_rows(r: &[Vec<f64>]) -> Matrix {
    let n = r.len();
    let c = r.first().map(|x| x.len()).unwrap_or(0);
    Matrix::from_fn(n, c, |i, j| r[i][j])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ParameterBundle {
    pub fn dim(&self) -> usize {
        self.sectors.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle is plain data")
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    /// Checks that every `I`-sized object agrees on `I`.
    pub fn check_dims(&self) -> Result<(), String> {
        let n = self.dim();
        let sq = |m: &[Vec<f64>]| m.len() == n && m.iter().all(|r| r.len() == n);
        let mut bad = Vec::new();
        if self.psi.len() != n {
            bad.push("psi");
        }
        if !sq(&self.lambda) {
            bad.push("lambda");
        }
        if self.var.mu.len() != n || !sq(&self.var.gamma) || !sq(&self.var.sigma) {
            bad.push("var");
        }
        let i = &self.intensities;
        if i.tau.len() != n || i.kappa.len() != n || i.zeta.len() != n || i.zeta.iter().any(|r| r.len() != n) {
            bad.push("intensities");
        }
        if self.groups.iter().any(|g| g.a.len() != n) {
            bad.push("group loadings");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(format!("bundle dimensions disagree with {n} sectors: {}", bad.join(", ")))
        }
    }

    /// λ is stored after any renormalization, so it is used as is.
    pub fn economy(&self) -> climcredit_core::Result<EconomyParams> {
        EconomyParams::new(
            Vector::from_vec(self.psi.clone()),
            from_rows(&self.lambda),
            1.0,
            ReturnsToScale::KeepRaw,
        )
    }

    pub fn var_params(&self) -> climcredit_core::Result<VarParams> {
        VarParams::new(
            Vector::from_vec(self.var.mu.clone()),
            from_rows(&self.var.gamma),
            from_rows(&self.var.sigma),
            self.var.epsilon,
        )
    }
}
