//! The built-in open hyperbolic systems and their exact oracles.
//!
//! Every model here is exactly solvable: primitive cycles, Poincare matrices,
//! trace values, and resonance locations all have closed forms, so each
//! numerical pipeline stage can be validated against an independent route.

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::matrix::{IMat2, SqMatrix};
use crate::orbit::PrimitiveCycle;
use crate::orbits::{self, EnumError};
use crate::traces::cexpm1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("not a hyperbolic unimodular automorphism: {reason}")]
    NonHyperbolic { reason: String },
    #[error("parameter out of range: {reason}")]
    ParameterOutOfRange { reason: String },
    #[error("model '{model}' has no {what} oracle")]
    NoOracle { model: String, what: String },
    #[error("oracle evaluated at a pole: lambda = {lambda}")]
    OracleAtPole { lambda: Complex64 },
    #[error("lambda = {lambda} outside the oracle validity region: {reason}")]
    OutsideValidity { lambda: Complex64, reason: String },
    #[error("orbit enumeration unsupported for model '{model}': {reason}")]
    EnumerationUnsupported { model: String, reason: String },
    #[error(transparent)]
    Enumeration(#[from] EnumError),
    #[error("config error: {0}")]
    Config(String),
}

/// Evaluations closer than this to a known pole are refused; residues near
/// poles are the resonances module's job (contour quadrature), not direct
/// evaluation.
pub const POLE_GUARD: f64 = 1e-8;

/// Closed rectangle in the spectral plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        assert!(
            re_min < re_max && im_min < im_max,
            "degenerate region [{re_min},{re_max}]x[{im_min},{im_max}]"
        );
        Region { re_min, re_max, im_min, im_max }
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        lambda.re >= self.re_min
            && lambda.re <= self.re_max
            && lambda.im >= self.im_min
            && lambda.im <= self.im_max
    }
}

/// An exact resonance predicted by a model oracle: location and rank (which
/// equals the residue of the continued trace).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OraclePole {
    pub location: Complex64,
    pub rank: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// Open linear flow on the solid torus {x1^2 + x2^2 < 1} x S^1 with
    /// vector field x1 d1 - x2 d2 + d3.
    Basic,
    /// Unit-roof suspension of the hyperbolic toral automorphism x -> Ax mod 1.
    Cat { a: [[i64; 2]; 2] },
    /// Unit-roof suspension of a linear full-shift horseshoe with branch
    /// differentials diag(lambda_u, lambda_s).
    Horseshoe { lambda_u: f64, lambda_s: f64 },
    /// Negative control: pure drift d3 on the basic domain. Not hyperbolic,
    /// no oracle; exists so certification checks have something to fail on.
    DegenerateDrift,
}

#[derive(Clone, Debug)]
pub struct ModelDescriptor {
    pub name: String,
    /// Ambient dimension n (3 for all built-ins); Poincare matrices act on
    /// the (n-1)-dimensional transversal.
    pub dimension: usize,
    /// dim E_s; its parity is the orientation sign beta.
    pub stable_dim: usize,
    /// (C, gamma) with |d phi^t restricted to E_s| <= C e^{-gamma t}.
    /// C = 1 exactly for these linear models.
    pub hyperbolicity: (f64, f64),
    pub kind: ModelKind,
}

pub fn basic_example() -> ModelDescriptor {
    ModelDescriptor {
        name: "basic".into(),
        dimension: 3,
        stable_dim: 1,
        hyperbolicity: (1.0, 1.0),
        kind: ModelKind::Basic,
    }
}

pub fn cat_suspension(a: [[i64; 2]; 2]) -> Result<ModelDescriptor, ModelError> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det != 1 {
        return Err(ModelError::NonHyperbolic {
            reason: format!("det A = {det}, must be 1"),
        });
    }
    let tr = a[0][0] + a[1][1];
    if tr.abs() <= 2 {
        return Err(ModelError::NonHyperbolic {
            reason: format!("|tr A| = {} <= 2 (not hyperbolic)", tr.abs()),
        });
    }
    let t = tr.abs() as f64;
    let lambda_plus = 0.5 * (t + (t * t - 4.0).sqrt());
    Ok(ModelDescriptor {
        name: "cat".into(),
        dimension: 3,
        stable_dim: 1,
        hyperbolicity: (1.0, lambda_plus.ln()),
        kind: ModelKind::Cat { a },
    })
}

pub fn horseshoe_suspension(lambda_u: f64, lambda_s: f64) -> Result<ModelDescriptor, ModelError> {
    if !(lambda_u > 1.0) || !lambda_u.is_finite() {
        return Err(ModelError::ParameterOutOfRange {
            reason: format!("lambda_u = {lambda_u}, need lambda_u > 1"),
        });
    }
    if !(lambda_s > 0.0 && lambda_s < 1.0) {
        return Err(ModelError::ParameterOutOfRange {
            reason: format!("lambda_s = {lambda_s}, need 0 < lambda_s < 1"),
        });
    }
    Ok(ModelDescriptor {
        name: "horseshoe".into(),
        dimension: 3,
        stable_dim: 1,
        hyperbolicity: (1.0, lambda_u.ln().min(-(lambda_s.ln()))),
        kind: ModelKind::Horseshoe { lambda_u, lambda_s },
    })
}

pub fn degenerate_drift() -> ModelDescriptor {
    ModelDescriptor {
        name: "degenerate-drift".into(),
        dimension: 3,
        stable_dim: 0,
        hyperbolicity: (1.0, 0.0),
        kind: ModelKind::DegenerateDrift,
    }
}

impl ModelDescriptor {
    /// Orientation parity: (-1)^beta det(I - P) = |det(I - P)| on all orbits.
    pub fn beta(&self) -> u32 {
        (self.stable_dim % 2) as u32
    }

    /// Period unit: primitive periods are integer multiples of this.
    pub fn roof(&self) -> f64 {
        match self.kind {
            ModelKind::Basic => 2.0 * std::f64::consts::PI,
            ModelKind::Cat { .. } | ModelKind::Horseshoe { .. } => 1.0,
            ModelKind::DegenerateDrift => 2.0 * std::f64::consts::PI,
        }
    }

    /// Boundary function with U = {rho > 0}. The suspensions are compact
    /// (no boundary); their rho is identically 1.
    pub fn rho(&self, x: [f64; 3]) -> f64 {
        match self.kind {
            ModelKind::Basic | ModelKind::DegenerateDrift => 1.0 - x[0] * x[0] - x[1] * x[1],
            ModelKind::Cat { .. } | ModelKind::Horseshoe { .. } => 1.0,
        }
    }

    /// Generator X at a point.
    pub fn vector_field(&self, x: [f64; 3]) -> [f64; 3] {
        match self.kind {
            ModelKind::Basic => [x[0], -x[1], 1.0],
            ModelKind::DegenerateDrift => [0.0, 0.0, 1.0],
            ModelKind::Cat { .. } | ModelKind::Horseshoe { .. } => [0.0, 0.0, 1.0],
        }
    }

    /// All primitive cycles with primitive period <= t_max, deterministic
    /// (period, label) order.
    pub fn primitive_cycles(&self, t_max: f64) -> Result<Vec<PrimitiveCycle>, ModelError> {
        match &self.kind {
            ModelKind::Basic => {
                let period = 2.0 * std::f64::consts::PI;
                if t_max < period {
                    return Ok(vec![]);
                }
                Ok(vec![PrimitiveCycle {
                    label: "gamma".into(),
                    primitive_period: period,
                    primitive_poincare: SqMatrix::diag(&[(-period).exp(), period.exp()]),
                    primitive_potential_average: Complex64::new(0.0, 0.0),
                }])
            }
            ModelKind::Cat { a } => {
                let n_max = t_max.floor() as usize;
                if n_max == 0 {
                    return Ok(vec![]);
                }
                Ok(orbits::cat_primitive_cycles(*a, n_max)?)
            }
            ModelKind::Horseshoe { lambda_u, lambda_s } => {
                let n_max = t_max.floor() as usize;
                if n_max == 0 {
                    return Ok(vec![]);
                }
                Ok(orbits::lyndon_cycles(n_max, *lambda_u, *lambda_s)?)
            }
            ModelKind::DegenerateDrift => Err(ModelError::EnumerationUnsupported {
                model: self.name.clone(),
                reason: "every point is periodic under pure drift; cycles are not isolated".into(),
            }),
        }
    }

    /// Closed-form trace oracle, independent of the orbit-enumeration code.
    ///
    /// Validity: basic requires Re lambda > -0.95 (series route; the exact
    /// continuation lives in the traces module); horseshoe requires
    /// Re lambda > log(2 lambda_s) + 0.05; cat is global off 2 pi i Z.
    pub fn oracle_trace(&self, lambda: Complex64) -> Result<Complex64, ModelError> {
        match &self.kind {
            ModelKind::Basic => {
                let near_int = (lambda.im - lambda.im.round()).abs() < POLE_GUARD;
                if (lambda.re + 1.0).abs() < POLE_GUARD && near_int {
                    return Err(ModelError::OracleAtPole { lambda });
                }
                if lambda.re <= -0.95 {
                    return Err(ModelError::OutsideValidity {
                        lambda,
                        reason: "direct series needs Re lambda > -0.95".into(),
                    });
                }
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 1..=5000 {
                    let mf = m as f64;
                    // 2 pi e^{-2 pi m (lambda+1)} / (1 - e^{-2 pi m})^2
                    let damp = (-two_pi * mf).exp();
                    let term = two_pi * (-(lambda + 1.0) * two_pi * mf).exp()
                        / ((1.0 - damp) * (1.0 - damp));
                    acc += term;
                    if term.norm() < 1e-17 * acc.norm().max(1e-300) {
                        break;
                    }
                }
                Ok(acc)
            }
            ModelKind::Cat { .. } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let k = (lambda.im / two_pi).round();
                let dist = Complex64::new(lambda.re, lambda.im - two_pi * k).norm();
                if dist < POLE_GUARD {
                    return Err(ModelError::OracleAtPole { lambda });
                }
                Ok(cexpm1(lambda).inv())
            }
            ModelKind::Horseshoe { lambda_u, lambda_s } => {
                let abscissa = (2.0 * lambda_s).ln();
                if lambda.re <= abscissa + 0.05 {
                    return Err(ModelError::OutsideValidity {
                        lambda,
                        reason: format!(
                            "direct series needs Re lambda > log(2 lambda_s) + 0.05 = {:.6}",
                            abscissa + 0.05
                        ),
                    });
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 1..=5000 {
                    let nf = n as f64;
                    let det = (1.0 - lambda_u.powf(-nf)) * (lambda_s.powf(-nf) - 1.0);
                    let term = (nf * (2.0f64.ln()) - lambda * nf).exp() / det;
                    acc += term;
                    if term.norm() < 1e-17 * acc.norm().max(1e-300) {
                        break;
                    }
                }
                Ok(acc)
            }
            ModelKind::DegenerateDrift => Err(ModelError::NoOracle {
                model: self.name.clone(),
                what: "trace".into(),
            }),
        }
    }

    /// Exact resonances in the region, sorted by (Re, Im); coincident lattice
    /// values (possible for rationally related horseshoe rates) are merged
    /// with their ranks summed.
    pub fn resonance_oracle(&self, region: &Region) -> Result<Vec<OraclePole>, ModelError> {
        let mut poles: Vec<OraclePole> = Vec::new();
        match &self.kind {
            ModelKind::Basic => {
                // lambda_{l,k} = -1 - l + i k, rank l + 1
                let mut l = 0u32;
                loop {
                    let re = -1.0 - l as f64;
                    if re < region.re_min {
                        break;
                    }
                    if re <= region.re_max {
                        let k_lo = region.im_min.ceil() as i64;
                        let k_hi = region.im_max.floor() as i64;
                        for k in k_lo..=k_hi {
                            poles.push(OraclePole {
                                location: Complex64::new(re, k as f64),
                                rank: l + 1,
                            });
                        }
                    }
                    l += 1;
                }
            }
            ModelKind::Cat { .. } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                if region.re_min <= 0.0 && region.re_max >= 0.0 {
                    let k_lo = (region.im_min / two_pi).ceil() as i64;
                    let k_hi = (region.im_max / two_pi).floor() as i64;
                    for k in k_lo..=k_hi {
                        poles.push(OraclePole {
                            location: Complex64::new(0.0, two_pi * k as f64),
                            rank: 1,
                        });
                    }
                }
            }
            ModelKind::Horseshoe { lambda_u, lambda_s } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let log2 = 2.0f64.ln();
                let lu = lambda_u.ln();
                let ls = lambda_s.ln(); // negative
                let m_lo = (region.im_min / two_pi).ceil() as i64;
                let m_hi = (region.im_max / two_pi).floor() as i64;
                let mut j = 0u32;
                loop {
                    let best_j = log2 - j as f64 * lu + ls; // k = 0 value
                    if best_j < region.re_min {
                        break;
                    }
                    let mut k = 0u32;
                    loop {
                        let re = log2 - j as f64 * lu + (k as f64 + 1.0) * ls;
                        if re < region.re_min {
                            break;
                        }
                        if re <= region.re_max {
                            for m in m_lo..=m_hi {
                                poles.push(OraclePole {
                                    location: Complex64::new(re, two_pi * m as f64),
                                    rank: 1,
                                });
                            }
                        }
                        k += 1;
                    }
                    j += 1;
                }
            }
            ModelKind::DegenerateDrift => {
                return Err(ModelError::NoOracle {
                    model: self.name.clone(),
                    what: "resonance".into(),
                })
            }
        }
        poles.sort_by(|a, b| {
            (a.location.re, a.location.im)
                .partial_cmp(&(b.location.re, b.location.im))
                .unwrap()
        });
        // merge exact lattice collisions, summing ranks
        let mut merged: Vec<OraclePole> = Vec::with_capacity(poles.len());
        for p in poles {
            match merged.last_mut() {
                Some(last) if (last.location - p.location).norm() < 1e-9 => {
                    last.rank += p.rank;
                }
                _ => merged.push(p),
            }
        }
        Ok(merged)
    }

    /// Exact integer form of the cat matrix, when this is a cat suspension.
    pub fn cat_matrix(&self) -> Option<IMat2> {
        match &self.kind {
            ModelKind::Cat { a } => Some(IMat2::new([
                [a[0][0] as i128, a[0][1] as i128],
                [a[1][0] as i128, a[1][1] as i128],
            ])),
            _ => None,
        }
    }
}

#[derive(Deserialize)]
struct ModelConfig {
    model: String,
    #[serde(rename = "A")]
    a: Option<[[i64; 2]; 2]>,
    lambda_u: Option<f64>,
    lambda_s: Option<f64>,
}

/// Build a model from a JSON config string:
/// {"model": "basic"|"cat"|"horseshoe"|"degenerate-drift", "A": [[..]], "lambda_u": .., "lambda_s": ..}.
/// Missing parameters take the standard defaults A = [[2,1],[1,1]],
/// lambda_u = 3, lambda_s = 1/4.
pub fn model_from_config(json: &str) -> Result<ModelDescriptor, ModelError> {
    let cfg: ModelConfig =
        serde_json::from_str(json).map_err(|e| ModelError::Config(e.to_string()))?;
    match cfg.model.as_str() {
        "basic" => Ok(basic_example()),
        "cat" => cat_suspension(cfg.a.unwrap_or([[2, 1], [1, 1]])),
        "horseshoe" => {
            horseshoe_suspension(cfg.lambda_u.unwrap_or(3.0), cfg.lambda_s.unwrap_or(0.25))
        }
        "degenerate-drift" => Ok(degenerate_drift()),
        other => Err(ModelError::Config(format!(
            "unknown model '{other}' (expected basic, cat, horseshoe, degenerate-drift)"
        ))),
    }
}
