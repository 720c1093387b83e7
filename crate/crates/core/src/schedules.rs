//! Parameter schedules `(α_n, β_n, r_n)` with the moduli that witness the
//! quantitative hypotheses:
//!
//! * σ1: Cauchy modulus of `Σ (1 - α_n - β_n)`
//! * σ2: rate of divergence of `Σ α_nβ_n / (α_n + β_n)` (with `α_n + β_n > 0`)
//! * σ3: Cauchy modulus of `Σ ‖r_n‖`
//!
//! and integer bounds `M_ab ≥ Σ (1 - α_n - β_n)`, `M_r ≥ Σ ‖r_n‖`.
//!
//! Schedules are evaluated lazily by index. Moduli are never inferred from
//! samples: every constructor either derives them in closed form or takes
//! them from the caller.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KmError, Result};
use crate::moduli::{
    ceil_plain, check_divergence_rate, checked_add, checked_mul, inverse_square_modulus, Nat,
    RateFn, RateKind, MAX_CHECK_INDEX, REAL_TOL,
};
use crate::operators::Space;

/// Slack allowed on `α_n + β_n ≤ 1` and on the `[0, 1]` ranges, which absorbs
/// the rounding in e.g. `(1 - λ) + λ`.
pub const RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    GeneralKM,
    InexactKM,
    ClassicalKM,
    Anchor,
    Example1,
    Example2,
    Custom,
}

type IndexFn = dyn Fn(u64) -> f64 + Send + Sync;
type VectorFn = dyn Fn(u64) -> Vec<f64> + Send + Sync;

/// The perturbation sequence `r_n`.
#[derive(Clone)]
pub enum Perturbation {
    Zero,
    /// `r_n = scale(n)·direction`, with `scale(n) ≥ 0`.
    Scaled {
        direction: Vec<f64>,
        direction_norm: f64,
        scale: Arc<IndexFn>,
    },
    /// Arbitrary `r_n` together with its norm sequence.
    Custom {
        r: Arc<VectorFn>,
        norm: Arc<IndexFn>,
    },
}

impl Perturbation {
    pub fn norm(&self, n: u64) -> f64 {
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::Scaled {
                direction_norm,
                scale,
                ..
            } => scale(n) * direction_norm,
            Perturbation::Custom { norm, .. } => norm(n),
        }
    }

    /// `x += r_n`
    pub fn add_to(&self, n: u64, x: &mut [f64]) {
        match self {
            Perturbation::Zero => {}
            Perturbation::Scaled {
                direction, scale, ..
            } => {
                let s = scale(n);
                if s != 0.0 {
                    for (xi, di) in x.iter_mut().zip(direction) {
                        *xi += s * di;
                    }
                }
            }
            Perturbation::Custom { r, .. } => {
                for (xi, ri) in x.iter_mut().zip(r(n)) {
                    *xi += ri;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Perturbation::Zero => true,
            Perturbation::Scaled { direction_norm, .. } => *direction_norm == 0.0,
            Perturbation::Custom { .. } => false,
        }
    }

    /// `r_n = direction / (n + L)²`
    pub fn inverse_square(direction: Vec<f64>, l: u64, space: &Space) -> Result<Self> {
        space.check_vector(&direction, "perturbation direction")?;
        let direction_norm = space.norm(&direction);
        if direction_norm == 0.0 {
            return Ok(Perturbation::Zero);
        }
        let lf = l as f64;
        Ok(Perturbation::Scaled {
            direction,
            direction_norm,
            scale: Arc::new(move |n| 1.0 / (n as f64 + lf).powi(2)),
        })
    }
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Zero => write!(f, "Zero"),
            Perturbation::Scaled {
                direction,
                direction_norm,
                ..
            } => f
                .debug_struct("Scaled")
                .field("direction", direction)
                .field("direction_norm", direction_norm)
                .finish(),
            Perturbation::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Analytic upper bounds `T(N) ≥ Σ_{i > N} a_i` for the convergent series of
/// a schedule, used to close finite-window Cauchy checks.
#[derive(Clone, Default)]
pub struct AnalyticTails {
    pub defect: Option<Arc<IndexFn>>,
    pub perturbation: Option<Arc<IndexFn>>,
}

/// `Λ = ⌈1/(λ(1-λ))⌉`, taken as the least integer with `Λ·λ(1-λ) ≥ 1` in
/// double precision.
pub fn big_lambda(lambda: f64) -> Result<Nat> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(KmError::domain(format!(
            "lambda must lie in (0,1), got {lambda}"
        )));
    }
    let prod = lambda * (1.0 - lambda);
    let mut l = ceil_plain(1.0 / prod, "Lambda")?;
    while (l as f64) * prod < 1.0 {
        l += 1;
    }
    Ok(l)
}

/// Parameters of the concrete schedule families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleParams {
    pub lambda: f64,
    pub big_lambda: Nat,
    pub j: Option<u64>,
    pub l: u64,
    pub r_star: Vec<f64>,
    pub r_star_norm: f64,
}

impl ExampleParams {
    /// `⌈‖r*‖⌉`
    pub fn r_star_ceil(&self) -> Result<Nat> {
        ceil_plain(self.r_star_norm, "ceil(|r*|)")
    }
}

/// Caller-assembled schedule pieces, for [`Schedule::from_parts`].
pub struct ScheduleParts {
    pub alpha: Arc<IndexFn>,
    pub beta: Arc<IndexFn>,
    pub perturbation: Perturbation,
    pub sigma1: RateFn,
    pub sigma2: RateFn,
    pub sigma3: RateFn,
    pub m_ab: Nat,
    pub m_r: Nat,
    /// `α_n + β_n = 1` for every `n`.
    pub unit_sum: bool,
    pub tails: AnalyticTails,
}

/// A parameter schedule together with its moduli and bounds.
#[derive(Clone)]
pub struct Schedule {
    alpha: Arc<IndexFn>,
    beta: Arc<IndexFn>,
    perturbation: Perturbation,
    sigma1: RateFn,
    sigma2: RateFn,
    sigma3: RateFn,
    m_ab: Nat,
    m_r: Nat,
    unit_sum: bool,
    family: FamilyTag,
    tails: AnalyticTails,
    params: Option<ExampleParams>,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Schedule")
            .field("family", &self.family)
            .field("sigma1", &self.sigma1.description())
            .field("sigma2", &self.sigma2.description())
            .field("sigma3", &self.sigma3.description())
            .field("m_ab", &self.m_ab)
            .field("m_r", &self.m_r)
            .field("perturbation", &self.perturbation)
            .field("params", &self.params)
            .finish()
    }
}

impl Schedule {
    pub fn from_parts(parts: ScheduleParts, family: FamilyTag) -> Self {
        Schedule {
            alpha: parts.alpha,
            beta: parts.beta,
            perturbation: parts.perturbation,
            sigma1: parts.sigma1,
            sigma2: parts.sigma2,
            sigma3: parts.sigma3,
            m_ab: parts.m_ab,
            m_r: parts.m_r,
            unit_sum: parts.unit_sum,
            family,
            tails: parts.tails,
            params: None,
        }
    }

    pub fn alpha(&self, n: u64) -> f64 {
        (self.alpha)(n)
    }

    pub fn beta(&self, n: u64) -> f64 {
        (self.beta)(n)
    }

    /// `1 - α_n - β_n`
    pub fn defect(&self, n: u64) -> f64 {
        if self.unit_sum {
            0.0
        } else {
            1.0 - self.alpha(n) - self.beta(n)
        }
    }

    /// `α_nβ_n / (α_n + β_n)`, the summand of (C2).
    pub fn divergence_summand(&self, n: u64) -> f64 {
        let (a, b) = (self.alpha(n), self.beta(n));
        if a + b > 0.0 {
            a * b / (a + b)
        } else {
            f64::NAN
        }
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn r_norm(&self, n: u64) -> f64 {
        self.perturbation.norm(n)
    }

    pub fn sigma1(&self) -> &RateFn {
        &self.sigma1
    }

    pub fn sigma2(&self) -> &RateFn {
        &self.sigma2
    }

    pub fn sigma3(&self) -> &RateFn {
        &self.sigma3
    }

    pub fn m_ab(&self) -> Nat {
        self.m_ab
    }

    pub fn m_r(&self) -> Nat {
        self.m_r
    }

    pub fn unit_sum(&self) -> bool {
        self.unit_sum
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn params(&self) -> Option<&ExampleParams> {
        self.params.as_ref()
    }

    pub fn tails(&self) -> &AnalyticTails {
        &self.tails
    }

    /// Replaces `M_ab`, `M_r` by larger values.
    pub fn with_bounds(mut self, m_ab: Nat, m_r: Nat) -> Result<Self> {
        if m_ab < self.m_ab || m_r < self.m_r {
            return Err(KmError::domain(format!(
                "bound overrides ({m_ab}, {m_r}) are below the derived ({}, {})",
                self.m_ab, self.m_r
            )));
        }
        self.m_ab = m_ab;
        self.m_r = m_r;
        Ok(self)
    }

    pub fn with_sigma1(mut self, s: RateFn) -> Self {
        self.sigma1 = s.with_kind(RateKind::CauchyModulus);
        self
    }

    pub fn with_sigma2(mut self, s: RateFn) -> Self {
        self.sigma2 = s.with_kind(RateKind::RateOfDivergence);
        self
    }

    pub fn with_sigma3(mut self, s: RateFn) -> Self {
        self.sigma3 = s.with_kind(RateKind::CauchyModulus);
        self
    }
}

fn zero_modulus() -> RateFn {
    RateFn::constant(RateKind::CauchyModulus, 0)
}

fn inverse_square_tail(scale: f64, offset: u64) -> Arc<IndexFn> {
    // Σ_{i>N} s/(i+L)² ≤ s/(N+L)
    Arc::new(move |n| scale / (n as f64 + offset as f64))
}

/// Example 1: `α_n = 1-λ`, `β_n = λ`, `r_n = r*/(n+L)²`.
pub fn make_example1(lambda: f64, l: u64, r_star: Vec<f64>, space: &Space) -> Result<Schedule> {
    let big = big_lambda(lambda)?;
    if l == 0 {
        return Err(KmError::domain("L must be >= 1"));
    }
    let perturbation = Perturbation::inverse_square(r_star.clone(), l, space)?;
    let r_norm = space.norm(&r_star);
    let c = ceil_plain(r_norm, "ceil(|r*|)")?;
    let sigma3 = if c == 0 {
        zero_modulus()
    } else {
        RateFn::affine(RateKind::CauchyModulus, c, c).with_description(format!("{c}(k+1)"))
    };
    let sigma2 =
        RateFn::affine(RateKind::RateOfDivergence, big, 0).with_description(format!("{big}k"));
    let tails = AnalyticTails {
        defect: None,
        perturbation: Some(inverse_square_tail(r_norm, l)),
    };
    let mut s = Schedule::from_parts(
        ScheduleParts {
            alpha: Arc::new(move |_| 1.0 - lambda),
            beta: Arc::new(move |_| lambda),
            perturbation,
            sigma1: zero_modulus(),
            sigma2,
            sigma3,
            m_ab: 0,
            m_r: checked_mul(2, c, "M_r")?,
            unit_sum: true,
            tails,
        },
        FamilyTag::Example1,
    );
    s.params = Some(ExampleParams {
        lambda,
        big_lambda: big,
        j: None,
        l,
        r_star,
        r_star_norm: r_norm,
    });
    Ok(s)
}

/// Example 2: `α_n = λ`, `β_n = 1-λ-1/(n+J)²`, `r_n = r*/(n+L)²`.
pub fn make_example2(
    lambda: f64,
    j: u64,
    l: u64,
    r_star: Vec<f64>,
    space: &Space,
) -> Result<Schedule> {
    if j < 2 {
        return Err(KmError::domain(format!("J must be >= 2, got {j}")));
    }
    if l == 0 {
        return Err(KmError::domain("L must be >= 1"));
    }
    let jf = j as f64;
    let upper = (jf * jf - 1.0) / (jf * jf);
    if !(lambda > 0.0 && lambda < upper) {
        return Err(KmError::domain(format!(
            "lambda must lie in (0, {upper}) for J = {j}, got {lambda}"
        )));
    }
    let big = big_lambda(lambda)?;
    let perturbation = Perturbation::inverse_square(r_star.clone(), l, space)?;
    let r_norm = space.norm(&r_star);
    let c = ceil_plain(r_norm, "ceil(|r*|)")?;
    let sigma3 = if c == 0 {
        zero_modulus()
    } else {
        RateFn::affine(RateKind::CauchyModulus, c, c).with_description(format!("{c}(k+1)"))
    };
    // σ1(k) = k+1 from the inverse-square moduli with t = 1, L = J. The
    // bound ⌈1/J + 1/J²⌉ is 1 for J ≥ 2; the certificate uses M_ab = 2,
    // which is larger and hence also valid.
    let one = inverse_square_modulus(1.0, Nat::from(j))?;
    let sigma2 = RateFn::new(
        RateKind::RateOfDivergence,
        format!("{big}(n+2)-1"),
        move |n| {
            let v = checked_mul(big, checked_add(n, 2, "sigma2")?, "sigma2")?;
            Ok(v - 1)
        },
    );
    let tails = AnalyticTails {
        defect: Some(inverse_square_tail(1.0, j)),
        perturbation: Some(inverse_square_tail(r_norm, l)),
    };
    let mut s = Schedule::from_parts(
        ScheduleParts {
            alpha: Arc::new(move |_| lambda),
            beta: Arc::new(move |n| 1.0 - lambda - 1.0 / (n as f64 + jf).powi(2)),
            perturbation,
            sigma1: one.phi,
            sigma2,
            sigma3,
            m_ab: one.m_t.max(2),
            m_r: checked_mul(2, c, "M_r")?,
            unit_sum: false,
            tails,
        },
        FamilyTag::Example2,
    );
    s.params = Some(ExampleParams {
        lambda,
        big_lambda: big,
        j: Some(j),
        l,
        r_star,
        r_star_norm: r_norm,
    });
    Ok(s)
}

/// Inexact KM: `α_n = 1 - β_n`. The caller supplies σ2 for
/// `Σ β_n(1-β_n)` and σ3, `M_r` for the perturbations.
pub fn make_inexact_km<B>(
    beta: B,
    sigma2: RateFn,
    perturbation: Perturbation,
    sigma3: RateFn,
    m_r: Nat,
) -> Schedule
where
    B: Fn(u64) -> f64 + Send + Sync + 'static,
{
    let beta: Arc<IndexFn> = Arc::new(beta);
    let b2 = Arc::clone(&beta);
    Schedule::from_parts(
        ScheduleParts {
            alpha: Arc::new(move |n| 1.0 - b2(n)),
            beta,
            perturbation,
            sigma1: zero_modulus(),
            sigma2: sigma2.with_kind(RateKind::RateOfDivergence),
            sigma3: sigma3.with_kind(RateKind::CauchyModulus),
            m_ab: 0,
            m_r,
            unit_sum: true,
            tails: AnalyticTails::default(),
        },
        FamilyTag::InexactKM,
    )
}

/// Classical KM with constant `β ∈ (0,1)`: `σ2(k) = Λk`, `Λ = ⌈1/(β(1-β))⌉`.
pub fn make_classical_km(beta: f64) -> Result<Schedule> {
    let big = big_lambda(beta)?;
    let sigma2 =
        RateFn::affine(RateKind::RateOfDivergence, big, 0).with_description(format!("{big}k"));
    let mut s = make_inexact_km(move |_| beta, sigma2, Perturbation::Zero, zero_modulus(), 0);
    s.family = FamilyTag::ClassicalKM;
    s.params = Some(ExampleParams {
        lambda: beta,
        big_lambda: big,
        j: None,
        l: 1,
        r_star: Vec::new(),
        r_star_norm: 0.0,
    });
    Ok(s)
}

/// Anchored variant `r_n = (1 - α_n - β_n)u` of a base schedule:
/// `σ3(k) = σ1(⌈‖u‖⌉(k+1) - 1)`, `M_r = M_ab·⌈‖u‖⌉`.
pub fn make_anchor(base: &Schedule, u: Vec<f64>, space: &Space) -> Result<Schedule> {
    space.check_vector(&u, "anchor u")?;
    let u_norm = space.norm(&u);
    if u_norm == 0.0 {
        return Err(KmError::domain(
            "anchor needs u != 0; use a zero perturbation instead",
        ));
    }
    if !base.perturbation.is_zero() {
        return Err(KmError::domain("anchor base must carry no perturbation"));
    }
    let cu = ceil_plain(u_norm, "ceil(|u|)")?;
    let s1 = base.sigma1.clone();
    let sigma3 = RateFn::new(
        RateKind::CauchyModulus,
        format!("sigma1({cu}(k+1)-1)"),
        move |k| {
            let i = checked_mul(cu, checked_add(k, 1, "anchor sigma3")?, "anchor sigma3")? - 1;
            s1.eval(i)
        },
    );
    let (alpha, beta) = (Arc::clone(&base.alpha), Arc::clone(&base.beta));
    let unit = base.unit_sum;
    let scale: Arc<IndexFn> = Arc::new(move |n| {
        if unit {
            0.0
        } else {
            (1.0 - alpha(n) - beta(n)).max(0.0)
        }
    });
    let tails = AnalyticTails {
        defect: base.tails.defect.clone(),
        perturbation: base
            .tails
            .defect
            .clone()
            .map(|t| Arc::new(move |n| u_norm * t(n)) as Arc<IndexFn>),
    };
    let mut s = Schedule::from_parts(
        ScheduleParts {
            alpha: Arc::clone(&base.alpha),
            beta: Arc::clone(&base.beta),
            perturbation: Perturbation::Scaled {
                direction: u,
                direction_norm: u_norm,
                scale,
            },
            sigma1: base.sigma1.clone(),
            sigma2: base.sigma2.clone(),
            sigma3,
            m_ab: base.m_ab,
            m_r: checked_mul(base.m_ab, cu, "M_r")?,
            unit_sum: base.unit_sum,
            tails,
        },
        FamilyTag::Anchor,
    );
    s.params = base.params.clone();
    Ok(s)
}

/// Minimal `M_ab`, `M_r` of the form `⌈Σ_{i ≤ σ(0)} a_i⌉ + 1`, or 0 when the
/// series vanishes identically.
pub fn bound_constants_from_moduli(s: &Schedule) -> Result<(Nat, Nat)> {
    let partial = |f: &dyn Fn(u64) -> f64, sigma: &RateFn| -> Result<Nat> {
        let n0 = u64::try_from(sigma.eval(0)?)
            .ok()
            .filter(|&n| n <= MAX_CHECK_INDEX)
            .ok_or_else(|| KmError::overflow("sigma(0) index"))?;
        let sum: f64 = (0..=n0).map(f).sum();
        checked_add(ceil_plain(sum.max(0.0), "series bound")?, 1, "series bound")
    };
    let m_ab = if s.unit_sum {
        0
    } else {
        partial(&|n| s.defect(n), &s.sigma1)?
    };
    let m_r = if s.perturbation.is_zero() {
        0
    } else {
        partial(&|n| s.r_norm(n), &s.sigma3)?
    };
    Ok((m_ab, m_r))
}

#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub check: String,
    pub index: Option<u64>,
    pub detail: String,
}

/// Outcome of [`verify_hypotheses`] on the window `[0, n_max]`.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub window: (u64, u64),
    pub findings: Vec<Finding>,
    /// `(k, σ(k))` pairs whose Cauchy contract was checked.
    pub sigma1_checked: Vec<(u64, Nat)>,
    pub sigma3_checked: Vec<(u64, Nat)>,
    pub sigma2_checked_up_to: Option<u64>,
    pub tails_used: bool,
}

impl HypothesisReport {
    pub fn pass(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Largest `k` for which Cauchy contracts are examined.
pub const HYPOTHESIS_K_MAX: u64 = 100;

fn check_cauchy_on_window(
    name: &str,
    terms: &[f64],
    sigma: &RateFn,
    tail: Option<&Arc<IndexFn>>,
    findings: &mut Vec<Finding>,
) -> Result<Vec<(u64, Nat)>> {
    let n_max = terms.len() as u64 - 1;
    // suffix[i] = Σ_{j ≥ i, j ≤ n_max} terms[j]
    let mut suffix = vec![0.0; terms.len() + 1];
    for i in (0..terms.len()).rev() {
        suffix[i] = suffix[i + 1] + terms[i];
    }
    let closing = tail.map(|t| t(n_max)).unwrap_or(0.0);
    let mut checked = Vec::new();
    for k in 0..=HYPOTHESIS_K_MAX {
        let m = sigma.eval(Nat::from(k))?;
        if m >= Nat::from(n_max) {
            break;
        }
        let rest = suffix[m as usize + 1] + closing;
        if rest > 1.0 / (k as f64 + 1.0) + REAL_TOL {
            findings.push(Finding {
                check: format!("{name} Cauchy modulus"),
                index: Some(k),
                detail: format!("tail beyond {name}({k}) = {m} is {rest}"),
            });
        }
        checked.push((k, m));
    }
    Ok(checked)
}

/// Checks the ranges of `α, β`, the hypotheses (C1)–(C3) and the bounds
/// `M_ab`, `M_r` on `[0, n_max]`. All findings go into the report.
pub fn verify_hypotheses(s: &Schedule, n_max: u64) -> Result<HypothesisReport> {
    let mut findings = Vec::new();
    let mut defects = Vec::with_capacity(n_max as usize + 1);
    let mut r_norms = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let (a, b) = (s.alpha(n), s.beta(n));
        let mut bad = |detail: String| {
            findings.push(Finding {
                check: "range".into(),
                index: Some(n),
                detail,
            })
        };
        if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&a) {
            bad(format!("alpha = {a} outside [0,1]"));
        }
        if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&b) {
            bad(format!("beta = {b} outside [0,1]"));
        }
        if a + b > 1.0 + RANGE_TOL {
            bad(format!("alpha + beta = {} > 1", a + b));
        }
        if !(a + b > 0.0) {
            bad(format!("alpha + beta = {} not > 0", a + b));
        }
        let rn = s.r_norm(n);
        if !(rn >= 0.0) {
            bad(format!("|r_n| = {rn}"));
        }
        defects.push(s.defect(n));
        r_norms.push(rn);
    }
    let sigma1_checked = check_cauchy_on_window(
        "sigma1",
        &defects,
        &s.sigma1,
        s.tails.defect.as_ref(),
        &mut findings,
    )?;
    let sigma3_checked = check_cauchy_on_window(
        "sigma3",
        &r_norms,
        &s.sigma3,
        s.tails.perturbation.as_ref(),
        &mut findings,
    )?;

    let sum_defect: f64 = defects.iter().sum();
    if sum_defect > s.m_ab as f64 + REAL_TOL {
        findings.push(Finding {
            check: "M_ab".into(),
            index: None,
            detail: format!("partial sum {sum_defect} exceeds M_ab = {}", s.m_ab),
        });
    }
    let sum_r: f64 = r_norms.iter().sum();
    if sum_r > s.m_r as f64 + REAL_TOL {
        findings.push(Finding {
            check: "M_r".into(),
            index: None,
            detail: format!("partial sum {sum_r} exceeds M_r = {}", s.m_r),
        });
    }

    // divergence contract, as far as σ2 stays inside the check window
    let range_ok = findings.iter().all(|f| f.check != "range");
    let mut sigma2_checked_up_to = None;
    if range_ok {
        let mut top = n_max;
        while top > 0 && s.sigma2.eval(Nat::from(top))? > Nat::from(MAX_CHECK_INDEX) {
            top /= 2;
        }
        let rep = check_divergence_rate(|i| s.divergence_summand(i), &s.sigma2, top)?;
        if let Some(f) = rep.first_failure() {
            findings.push(Finding {
                check: "sigma2 divergence rate".into(),
                index: Some(f.n),
                detail: format!(
                    "sum up to sigma2({}) = {} is {}, theta(n) >= n: {:?}",
                    f.n, f.theta_n, f.partial_sum, f.theta_ge_n
                ),
            });
        }
        sigma2_checked_up_to = Some(top);
    }

    Ok(HypothesisReport {
        window: (0, n_max),
        findings,
        sigma1_checked,
        sigma3_checked,
        sigma2_checked_up_to,
        tails_used: s.tails.defect.is_some() || s.tails.perturbation.is_some(),
    })
}
