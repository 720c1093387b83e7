//! Run configuration. One JSON document fully determines a run.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::certificates::FormulaChoice;
use crate::error::{KmError, Result};
use crate::moduli::{Nat, RateFn, RateKind};
use crate::operators::{catalog_make, NormKind, Operator, OperatorSpec, Space};
use crate::schedules::{
    make_anchor, make_classical_km, make_example1, make_example2, verify_hypotheses, AnalyticTails,
    FamilyTag, Perturbation, Schedule, ScheduleParts, RANGE_TOL,
};

/// Output file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    #[serde(default = "default_norm")]
    pub norm_kind: NormKind,
}

fn default_norm() -> NormKind {
    NormKind::Euclidean
}

/// `k ↦ mul·k + add`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineRate {
    pub mul: u64,
    pub add: u64,
}

impl AffineRate {
    fn rate(&self, kind: RateKind) -> RateFn {
        RateFn::affine(kind, Nat::from(self.mul), Nat::from(self.add))
    }
}

fn one() -> u64 {
    1
}

fn two() -> u64 {
    2
}

/// Schedule families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `α_n = 1-β`, `β_n = β`, `r_n = 0`.
    ClassicalKm { beta: f64 },
    /// `α_n = 1-λ`, `β_n = λ`, `r_n = r*/(n+L)²`.
    Example1 {
        lambda: f64,
        #[serde(default = "one")]
        l: u64,
        #[serde(default)]
        r_star: Option<Vec<f64>>,
    },
    /// `α_n = λ`, `β_n = 1-λ-1/(n+J)²`, `r_n = r*/(n+L)²`.
    Example2 {
        lambda: f64,
        #[serde(default = "two")]
        j: u64,
        #[serde(default = "one")]
        l: u64,
        #[serde(default)]
        r_star: Option<Vec<f64>>,
    },
    /// Example 2 coefficients with `r_n = (1-α_n-β_n)u`.
    Anchor {
        lambda: f64,
        #[serde(default = "two")]
        j: u64,
        u: Vec<f64>,
    },
    /// Explicit coefficient lists; the last entry repeats beyond the list.
    /// `r_n = 0`. `sigma1` defaults to 0, `sigma2` must be supplied.
    Custom {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        #[serde(default)]
        sigma1: Option<AffineRate>,
        sigma2: AffineRate,
        #[serde(default)]
        m_ab: u64,
    },
}

/// Replacement moduli and bounds. Bounds may only grow.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<AffineRate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<AffineRate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma3: Option<AffineRate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_ab: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_r: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub family: FamilySpec,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    #[serde(default)]
    pub formula: FormulaChoice,
    /// Replaces Φ by a constant; a negative control for `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_constant: Option<u64>,
}

fn default_k_max() -> u64 {
    5
}

fn default_l_max() -> u64 {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// `None` sizes the horizon from Φ.
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    /// Liminf grid is `k, L ≤ l_max`.
    #[serde(default = "default_l_max")]
    pub l_max: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            horizon: None,
            k_max: default_k_max(),
            l_max: default_l_max(),
            seed: 0,
        }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub operator: OperatorSpec,
    pub start: Vec<f64>,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub certificate: CertificateConfig,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Window on which schedule hypotheses are checked before a run.
pub const VALIDATION_WINDOW: u64 = 2000;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KmError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_space(&self) -> Result<Space> {
        Space::new(self.space.dim, self.space.norm_kind)
    }

    pub fn build_operator(&self, space: &Space) -> Result<Operator> {
        catalog_make(&self.operator, space)
    }

    pub fn start(&self, space: &Space) -> Result<Vec<f64>> {
        space.check_vector(&self.start, "start")?;
        if let Some(i) = self.start.iter().position(|v| !v.is_finite()) {
            return Err(KmError::Config(format!("start[{i}] is not finite")));
        }
        Ok(self.start.clone())
    }

    /// Builds the schedule, applies overrides and rejects it if a
    /// hypothesis fails on the validation window.
    pub fn build_schedule(&self, space: &Space) -> Result<Schedule> {
        let zeros = || vec![0.0; space.dim()];
        let s = match &self.schedule.family {
            FamilySpec::ClassicalKm { beta } => make_classical_km(*beta)?,
            FamilySpec::Example1 { lambda, l, r_star } => {
                make_example1(*lambda, *l, r_star.clone().unwrap_or_else(zeros), space)?
            }
            FamilySpec::Example2 {
                lambda,
                j,
                l,
                r_star,
            } => make_example2(*lambda, *j, *l, r_star.clone().unwrap_or_else(zeros), space)?,
            FamilySpec::Anchor { lambda, j, u } => {
                let base = make_example2(*lambda, *j, 1, zeros(), space)?;
                make_anchor(&base, u.clone(), space)?
            }
            FamilySpec::Custom {
                alpha,
                beta,
                sigma1,
                sigma2,
                m_ab,
            } => custom_schedule(alpha, beta, *sigma1, *sigma2, *m_ab)?,
        };
        let s = apply_overrides(s, &self.schedule.overrides)?;
        let report = verify_hypotheses(&s, VALIDATION_WINDOW)?;
        if !report.pass() {
            let lines: Vec<String> = report
                .findings
                .iter()
                .take(5)
                .map(|f| match f.index {
                    Some(i) => format!("{} at {i}: {}", f.check, f.detail),
                    None => format!("{}: {}", f.check, f.detail),
                })
                .collect();
            return Err(KmError::Config(format!(
                "schedule violates its hypotheses ({} findings): {}",
                report.findings.len(),
                lines.join("; ")
            )));
        }
        Ok(s)
    }
}

fn custom_schedule(
    alpha: &[f64],
    beta: &[f64],
    sigma1: Option<AffineRate>,
    sigma2: AffineRate,
    m_ab: u64,
) -> Result<Schedule> {
    if alpha.is_empty() || beta.is_empty() {
        return Err(KmError::Config(
            "custom alpha and beta lists must be nonempty".into(),
        ));
    }
    let n = alpha.len().max(beta.len());
    for i in 0..n {
        let (a, b) = (alpha[i.min(alpha.len() - 1)], beta[i.min(beta.len() - 1)]);
        let ok = |v: f64| (-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v);
        if !ok(a) || !ok(b) || a + b > 1.0 + RANGE_TOL || !(a + b > 0.0) {
            return Err(KmError::Config(format!(
                "custom schedule at n = {i}: alpha = {a}, beta = {b} is not admissible"
            )));
        }
    }
    let unit_sum = (0..n).all(|i| {
        (alpha[i.min(alpha.len() - 1)] + beta[i.min(beta.len() - 1)] - 1.0).abs() <= RANGE_TOL
    });
    let a: Arc<[f64]> = alpha.into();
    let b: Arc<[f64]> = beta.into();
    let pick = |v: Arc<[f64]>| move |n: u64| v[(n as usize).min(v.len() - 1)];
    Ok(Schedule::from_parts(
        ScheduleParts {
            alpha: Arc::new(pick(a)),
            beta: Arc::new(pick(b)),
            perturbation: Perturbation::Zero,
            sigma1: sigma1
                .map(|r| r.rate(RateKind::CauchyModulus))
                .unwrap_or_else(|| RateFn::constant(RateKind::CauchyModulus, 0)),
            sigma2: sigma2.rate(RateKind::RateOfDivergence),
            sigma3: RateFn::constant(RateKind::CauchyModulus, 0),
            m_ab: Nat::from(m_ab),
            m_r: 0,
            unit_sum,
            tails: AnalyticTails::default(),
        },
        FamilyTag::Custom,
    ))
}

fn apply_overrides(mut s: Schedule, o: &Overrides) -> Result<Schedule> {
    if let Some(r) = o.sigma1 {
        s = s.with_sigma1(r.rate(RateKind::CauchyModulus));
    }
    if let Some(r) = o.sigma2 {
        s = s.with_sigma2(r.rate(RateKind::RateOfDivergence));
    }
    if let Some(r) = o.sigma3 {
        s = s.with_sigma3(r.rate(RateKind::CauchyModulus));
    }
    if o.m_ab.is_some() || o.m_r.is_some() {
        let m_ab = o.m_ab.map(Nat::from).unwrap_or(s.m_ab());
        let m_r = o.m_r.map(Nat::from).unwrap_or(s.m_r());
        s = s
            .with_bounds(m_ab, m_r)
            .map_err(|e| KmError::Config(e.to_string()))?;
    }
    Ok(s)
}

/// Schedule families accepted in configs.
pub const FAMILIES: &[(&str, &str)] = &[
    (
        "classical_km",
        "alpha = 1-beta, constant beta, no perturbation",
    ),
    (
        "example1",
        "alpha = 1-lambda, beta = lambda, r_n = r*/(n+L)^2",
    ),
    (
        "example2",
        "alpha = lambda, beta = 1-lambda-1/(n+J)^2, r_n = r*/(n+L)^2",
    ),
    (
        "anchor",
        "example2 coefficients with r_n = (1-alpha_n-beta_n) u",
    ),
    (
        "custom",
        "explicit alpha/beta lists with affine sigma1, sigma2",
    ),
];
