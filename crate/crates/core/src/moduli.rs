//! Rate functions, Cauchy moduli, rates of divergence, moduli of liminf and
//! moduli of uniform convexity, together with the quantitative combinators
//! that turn one kind of modulus into another.
//!
//! All integer-valued moduli evaluate in checked `u128` arithmetic. Overflow
//! is reported as [`KmError::Overflow`]; a wrapped value would silently forge
//! a certificate.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{KmError, Result};

/// Natural numbers as used by every rate function.
pub type Nat = u128;

/// Absolute tolerance for real-valued inequality checks in this module.
pub const REAL_TOL: f64 = 1e-10;

/// Number of ulps around an integer inside which a real quotient is treated
/// as ambiguous and rounded one step further up.
pub const CEIL_GUARD_ULPS: f64 = 8.0;

pub(crate) fn checked_add(a: Nat, b: Nat, ctx: &str) -> Result<Nat> {
    a.checked_add(b).ok_or_else(|| KmError::overflow(ctx))
}

pub(crate) fn checked_mul(a: Nat, b: Nat, ctx: &str) -> Result<Nat> {
    a.checked_mul(b).ok_or_else(|| KmError::overflow(ctx))
}

pub(crate) fn checked_pow(a: Nat, e: u32, ctx: &str) -> Result<Nat> {
    a.checked_pow(e).ok_or_else(|| KmError::overflow(ctx))
}

/// `ceil(num / den)` for `den > 0`.
pub(crate) fn ceil_div(num: Nat, den: Nat) -> Nat {
    num / den + Nat::from(!num.is_multiple_of(den))
}

/// Ceiling of a nonnegative real with the upward guard: when `q` sits within
/// [`CEIL_GUARD_ULPS`] ulps of an integer, one is added to the ceiling.
pub fn ceil_guarded(q: f64, ctx: &str) -> Result<Nat> {
    if !q.is_finite() {
        return Err(KmError::overflow(format!("{ctx}: non-finite quotient {q}")));
    }
    if q < 0.0 {
        return Err(KmError::domain(format!("{ctx}: negative quotient {q}")));
    }
    let ulp = f64::EPSILON * q.max(1.0);
    let near_integer = (q - q.round()).abs() <= CEIL_GUARD_ULPS * ulp;
    let c = q.ceil();
    // 2^127 keeps the +1 below inside u128
    if c >= 1.7014118346046923e38 {
        return Err(KmError::overflow(ctx.to_string()));
    }
    let base = c as Nat;
    checked_add(base, Nat::from(near_integer), ctx)
}

/// Ceiling of a nonnegative real without the guard. Used where the value is a
/// norm that is exact in double precision on the catalog instances.
pub fn ceil_plain(q: f64, ctx: &str) -> Result<Nat> {
    if !q.is_finite() || q < 0.0 {
        return Err(KmError::domain(format!(
            "{ctx}: cannot take ceiling of {q}"
        )));
    }
    if q >= 1.7014118346046923e38 {
        return Err(KmError::overflow(ctx.to_string()));
    }
    Ok(q.ceil() as Nat)
}

/// Semantic contract carried by a [`RateFn`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RateKind {
    /// Rate of convergence towards 0 of the named sequence.
    RateOfConvergence(String),
    CauchyModulus,
    RateOfDivergence,
}

type NatFn = dyn Fn(Nat) -> Result<Nat> + Send + Sync;
type NatFn2 = dyn Fn(Nat, Nat) -> Result<Nat> + Send + Sync;

/// A function ℕ → ℕ together with what it claims to be.
#[derive(Clone)]
pub struct RateFn {
    eval: Arc<NatFn>,
    kind: RateKind,
    description: String,
}

impl RateFn {
    pub fn new<F>(kind: RateKind, description: impl Into<String>, f: F) -> Self
    where
        F: Fn(Nat) -> Result<Nat> + Send + Sync + 'static,
    {
        RateFn {
            eval: Arc::new(f),
            kind,
            description: description.into(),
        }
    }

    pub fn constant(kind: RateKind, value: Nat) -> Self {
        RateFn::new(kind, format!("{value}"), move |_| Ok(value))
    }

    /// `k ↦ mul·k + add`.
    pub fn affine(kind: RateKind, mul: Nat, add: Nat) -> Self {
        RateFn::new(kind, format!("{mul}k+{add}"), move |k| {
            checked_add(checked_mul(mul, k, "affine rate")?, add, "affine rate")
        })
    }

    pub fn eval(&self, k: Nat) -> Result<Nat> {
        (self.eval)(k)
    }

    pub fn kind(&self) -> &RateKind {
        &self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn with_kind(mut self, kind: RateKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    /// Tabulates `k = 0..=k_max`.
    pub fn table(&self, k_max: Nat) -> Result<Vec<Nat>> {
        (0..=k_max).map(|k| self.eval(k)).collect()
    }
}

impl fmt::Debug for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateFn")
            .field("kind", &self.kind)
            .field("description", &self.description)
            .finish()
    }
}

/// A modulus of liminf: every window `[L, eval(k, L)]` holds an index where
/// the sequence is below `1/(k+1)`.
#[derive(Clone)]
pub struct LiminfModulus {
    eval: Arc<NatFn2>,
    description: String,
}

impl LiminfModulus {
    pub fn new<F>(description: impl Into<String>, f: F) -> Self
    where
        F: Fn(Nat, Nat) -> Result<Nat> + Send + Sync + 'static,
    {
        LiminfModulus {
            eval: Arc::new(f),
            description: description.into(),
        }
    }

    pub fn eval(&self, k: Nat, l: Nat) -> Result<Nat> {
        (self.eval)(k, l)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl fmt::Debug for LiminfModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiminfModulus")
            .field("description", &self.description)
            .finish()
    }
}

/// `coeff_num / coeff_den · ε^power`, the shape of every closed-form modulus
/// in the catalog. Lets Ω be computed in exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Monomial {
    pub coeff_num: Nat,
    pub coeff_den: Nat,
    pub power: u32,
}

impl Monomial {
    pub fn eval(&self, eps: f64) -> f64 {
        self.coeff_num as f64 / self.coeff_den as f64 * eps.powi(self.power as i32)
    }
}

type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Modulus of uniform convexity η : (0, 2] → (0, 1], optionally factored as
/// η(ε) = ε·η̃(ε).
#[derive(Clone)]
pub struct UcModulus {
    eta: Arc<RealFn>,
    eta_tilde: Option<Arc<RealFn>>,
    tilde_increasing: bool,
    exact: Option<Monomial>,
    exact_tilde: Option<Monomial>,
    description: String,
}

impl fmt::Debug for UcModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UcModulus")
            .field("description", &self.description)
            .field("factored", &self.eta_tilde.is_some())
            .field("tilde_increasing", &self.tilde_increasing)
            .field("exact", &self.exact)
            .finish()
    }
}

impl UcModulus {
    /// A modulus given only by its real-valued evaluation.
    pub fn custom<F>(description: impl Into<String>, eta: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        UcModulus {
            eta: Arc::new(eta),
            eta_tilde: None,
            tilde_increasing: false,
            exact: None,
            exact_tilde: None,
            description: description.into(),
        }
    }

    /// Attaches the factor η̃ with η(ε) = ε·η̃(ε).
    pub fn with_tilde<F>(mut self, eta_tilde: F, increasing: bool) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.eta_tilde = Some(Arc::new(eta_tilde));
        self.tilde_increasing = increasing;
        self
    }

    /// η(ε) = coeff·ε^power with exact rational coefficient; the factor
    /// η̃(ε) = coeff·ε^(power-1) is attached when `power ≥ 1`.
    pub fn monomial(description: impl Into<String>, m: Monomial) -> Self {
        let mut u = UcModulus::custom(description, move |e| m.eval(e));
        u.exact = Some(m);
        if m.power >= 1 {
            let t = Monomial {
                power: m.power - 1,
                ..m
            };
            u.eta_tilde = Some(Arc::new(move |e| t.eval(e)));
            u.tilde_increasing = true;
            u.exact_tilde = Some(t);
        }
        u
    }

    /// η(ε) = ε²/8 with η̃(ε) = ε/8.
    pub fn hilbert() -> Self {
        UcModulus::monomial(
            "eps^2/8",
            Monomial {
                coeff_num: 1,
                coeff_den: 8,
                power: 2,
            },
        )
    }

    /// The modulus η_p of ℓ_p / L_p. Exact when `p` is an integer ≥ 2.
    pub fn lp(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(KmError::domain(format!("eta_p needs p > 1, got {p}")));
        }
        if p >= 2.0 && p.fract() == 0.0 && p <= 64.0 {
            let pi = p as u32;
            let den = checked_mul(Nat::from(pi), checked_pow(2, pi, "eta_p")?, "eta_p")?;
            return Ok(UcModulus::monomial(
                format!("eps^{pi}/({pi}*2^{pi})"),
                Monomial {
                    coeff_num: 1,
                    coeff_den: den,
                    power: pi,
                },
            ));
        }
        let u = UcModulus::custom(format!("eta_p with p={p}"), move |e| {
            eta_lp(p, e).unwrap_or(f64::NAN)
        });
        let tilde = move |e: f64| eta_lp(p, e).unwrap_or(f64::NAN) / e;
        Ok(u.with_tilde(tilde, true))
    }

    /// Degenerate η ≡ `value`; only useful as a test modulus.
    pub fn constant(value: f64) -> Self {
        UcModulus::custom(format!("constant {value}"), move |_| value)
    }

    /// The test modulus with η̃ ≡ 1/2, i.e. η(ε) = ε/2.
    pub fn half_tilde() -> Self {
        UcModulus::monomial(
            "eps/2",
            Monomial {
                coeff_num: 1,
                coeff_den: 2,
                power: 1,
            },
        )
    }

    pub fn eval(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        Ok((self.eta)(eps))
    }

    pub fn eval_tilde(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        match &self.eta_tilde {
            Some(t) => Ok(t(eps)),
            None => Err(KmError::domain("modulus carries no factorization")),
        }
    }

    pub fn is_factored(&self) -> bool {
        self.eta_tilde.is_some()
    }

    pub fn tilde_increasing(&self) -> bool {
        self.tilde_increasing
    }

    pub fn exact(&self) -> Option<Monomial> {
        self.exact
    }

    pub fn exact_tilde(&self) -> Option<Monomial> {
        self.exact_tilde
    }

    /// True for the exact Hilbert modulus ε²/8.
    pub fn is_hilbert(&self) -> bool {
        matches!(self.exact, Some(m) if m.power == 2 && m.coeff_num * 8 == m.coeff_den)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Checks range, factorization and monotonicity on an evenly spaced grid
    /// of `points` values of ε in (0, 2].
    pub fn check_invariants(&self, points: usize) -> Result<()> {
        let mut prev_tilde = f64::NEG_INFINITY;
        for i in 1..=points {
            let eps = 2.0 * i as f64 / points as f64;
            let v = self.eval(eps)?;
            if !(v > 0.0 && v <= 1.0) {
                return Err(KmError::domain(format!("eta({eps}) = {v} outside (0,1]")));
            }
            if let Some(t) = &self.eta_tilde {
                let tv = t(eps);
                if (v - eps * tv).abs() > 1e-12 {
                    return Err(KmError::domain(format!(
                        "eta({eps}) = {v} but eps*eta_tilde = {}",
                        eps * tv
                    )));
                }
                if self.tilde_increasing && tv < prev_tilde {
                    return Err(KmError::domain(format!("eta_tilde decreases at {eps}")));
                }
                prev_tilde = tv;
            }
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 2.0 {
        Ok(())
    } else {
        Err(KmError::domain(format!("eps must lie in (0,2], got {eps}")))
    }
}

/// The η_p table: `(p-1)ε²/8` for `1 < p < 2`, `ε^p/(p·2^p)` for `p ≥ 2`.
pub fn eta_lp(p: f64, eps: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(KmError::domain(format!("eta_p needs p > 1, got {p}")));
    }
    check_eps(eps)?;
    if p < 2.0 {
        Ok((p - 1.0) * eps * eps / 8.0)
    } else {
        Ok(eps.powf(p) / (p * 2f64.powf(p)))
    }
}

/// Checks the convex-combination bound that a modulus of uniform convexity
/// transfers to balls of radius `r`:
/// `‖(1-λ)x + λy - a‖ ≤ (1 - 2λ(1-λ)η(ε))·r`.
///
/// Returns `Err(Precondition)` when the inputs are not admissible, `Ok(false)`
/// when the inequality fails beyond [`REAL_TOL`].
#[allow(clippy::too_many_arguments)]
pub fn check_uc_transfer(
    eta: &UcModulus,
    norm: impl Fn(&[f64]) -> f64,
    a: &[f64],
    x: &[f64],
    y: &[f64],
    r: f64,
    eps: f64,
    lambda: f64,
) -> Result<bool> {
    if a.len() != x.len() || a.len() != y.len() {
        return Err(KmError::Precondition("dimension mismatch".into()));
    }
    if !(r > 0.0) {
        return Err(KmError::Precondition(format!("r must be > 0, got {r}")));
    }
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(KmError::Precondition(format!("eps {eps} outside (0,2]")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(KmError::Precondition(format!(
            "lambda {lambda} outside [0,1]"
        )));
    }
    let diff = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(p, q)| p - q).collect() };
    let dxa = norm(&diff(x, a));
    let dya = norm(&diff(y, a));
    let dxy = norm(&diff(x, y));
    if dxa > r + REAL_TOL || dya > r + REAL_TOL {
        return Err(KmError::Precondition(format!(
            "points outside the ball: |x-a|={dxa}, |y-a|={dya}, r={r}"
        )));
    }
    if dxy < eps * r - REAL_TOL {
        return Err(KmError::Precondition(format!(
            "|x-y|={dxy} below eps*r={}",
            eps * r
        )));
    }
    let comb: Vec<f64> = x
        .iter()
        .zip(y)
        .zip(a)
        .map(|((xi, yi), ai)| (1.0 - lambda) * xi + lambda * yi - ai)
        .collect();
    let lhs = norm(&comb);
    let rhs = (1.0 - 2.0 * lambda * (1.0 - lambda) * eta.eval(eps)?) * r;
    Ok(lhs <= rhs + REAL_TOL)
}

/// From a Cauchy modulus φ of a nonnegative series, the rate of convergence
/// `ψ(k) = φ(k) + 1` of its terms towards 0.
pub fn cauchy_to_rate(phi: &RateFn) -> RateFn {
    let phi = phi.clone();
    let desc = format!("{}+1", phi.description());
    RateFn::new(RateKind::RateOfConvergence("a_n".into()), desc, move |k| {
        checked_add(phi.eval(k)?, 1, "cauchy_to_rate")
    })
}

/// Integer upper bound `⌈S_{φ(0)}⌉ + 1` of a convergent nonnegative series,
/// where `partial_sum_at(n) = Σ_{i ≤ n} a_i`.
pub fn series_upper_bound(partial_sum_at: impl Fn(u64) -> f64, phi: &RateFn) -> Result<Nat> {
    let n0 = u64::try_from(phi.eval(0)?)
        .map_err(|_| KmError::overflow("series_upper_bound: phi(0) index"))?;
    let s = partial_sum_at(n0);
    if s < 0.0 {
        return Err(KmError::domain(format!("negative partial sum {s}")));
    }
    checked_add(
        ceil_plain(s, "series_upper_bound")?,
        1,
        "series_upper_bound",
    )
}

/// Cauchy modulus of `s·a_n + t·b_n` from moduli of `(a_n)` and `(b_n)`:
/// `k ↦ max{φ₁(2s(k+1)-1), φ₂(2t(k+1)-1)}`.
pub fn combine_cauchy_moduli(phi1: &RateFn, phi2: &RateFn, s: Nat, t: Nat) -> Result<RateFn> {
    if s == 0 || t == 0 {
        return Err(KmError::domain("combine_cauchy_moduli needs s, t >= 1"));
    }
    let (p1, p2) = (phi1.clone(), phi2.clone());
    let desc = format!(
        "max{{{}(2*{s}(k+1)-1), {}(2*{t}(k+1)-1)}}",
        p1.description(),
        p2.description()
    );
    Ok(RateFn::new(RateKind::CauchyModulus, desc, move |k| {
        const CTX: &str = "combine_cauchy_moduli";
        let k1 = checked_add(k, 1, CTX)?;
        let i1 = checked_mul(checked_mul(2, s, CTX)?, k1, CTX)? - 1;
        let i2 = checked_mul(checked_mul(2, t, CTX)?, k1, CTX)? - 1;
        Ok(p1.eval(i1)?.max(p2.eval(i2)?))
    }))
}

/// Rate of convergence of `(a_n)` from a modulus of liminf δ of `(a_n)` and
/// a Cauchy modulus ψ of `Σ b_n`, given `a_{n+1} ≤ a_n + b_n`:
/// `k ↦ δ(2k+1, ψ(2k+1)+1)`.
pub fn rate_from_liminf(delta: &LiminfModulus, psi: &RateFn) -> RateFn {
    let (d, p) = (delta.clone(), psi.clone());
    let desc = format!("{}(2k+1, {}(2k+1)+1)", d.description(), p.description());
    RateFn::new(RateKind::RateOfConvergence("a_n".into()), desc, move |k| {
        const CTX: &str = "rate_from_liminf";
        let k2 = checked_add(checked_mul(2, k, CTX)?, 1, CTX)?;
        let l = checked_add(p.eval(k2)?, 1, CTX)?;
        d.eval(k2, l)
    })
}

/// Cauchy moduli and integer bound of `Σ t/(n+L)²`.
#[derive(Debug, Clone)]
pub struct InverseSquareModuli {
    /// `⌈t⌉(k+1)`
    pub phi: RateFn,
    /// `max{⌈t⌉(k+1) - L, 0}`
    pub phi_star: RateFn,
    /// `0` if `t = 0`, else `⌈t(1/L + 1/L²)⌉`.
    pub m_t: Nat,
}

pub fn inverse_square_modulus(t: f64, l: Nat) -> Result<InverseSquareModuli> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(KmError::domain(format!(
            "t must be a finite real >= 0, got {t}"
        )));
    }
    if l == 0 {
        return Err(KmError::domain("L must be >= 1"));
    }
    let ct = ceil_plain(t, "ceil(t)")?;
    let phi =
        RateFn::affine(RateKind::CauchyModulus, ct, ct).with_description(format!("{ct}(k+1)"));
    let phi_star = RateFn::new(
        RateKind::CauchyModulus,
        format!("max{{{ct}(k+1)-{l}, 0}}"),
        move |k| {
            let v = checked_mul(ct, checked_add(k, 1, "phi*")?, "phi*")?;
            Ok(v.saturating_sub(l))
        },
    );
    let m_t = if t == 0.0 {
        0
    } else {
        let lf = l as f64;
        ceil_plain(t * (1.0 / lf + 1.0 / (lf * lf)), "M_t")?
    };
    Ok(InverseSquareModuli { phi, phi_star, m_t })
}

/// One row of a [`DivergenceReport`].
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceRow {
    pub n: u64,
    pub theta_n: Nat,
    pub partial_sum: f64,
    pub sum_ok: bool,
    /// `None` when some summand lies outside `[0, 1)`.
    pub theta_ge_n: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    /// First summand index found outside `[0, 1)`, if any.
    pub summand_out_of_range: Option<u64>,
}

impl DivergenceReport {
    pub fn all_pass(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.sum_ok && r.theta_ge_n.unwrap_or(true))
    }

    pub fn first_failure(&self) -> Option<&DivergenceRow> {
        self.rows
            .iter()
            .find(|r| !r.sum_ok || r.theta_ge_n == Some(false))
    }
}

/// Largest index a finite-window check will materialize.
pub const MAX_CHECK_INDEX: u64 = 50_000_000;

/// Checks that θ is a rate of divergence of `Σ summand(i)` for every
/// `n ≤ n_max`, and (when all summands used lie in `[0,1)`) that `θ(n) ≥ n`.
pub fn check_divergence_rate(
    summand: impl Fn(u64) -> f64,
    theta: &RateFn,
    n_max: u64,
) -> Result<DivergenceReport> {
    let thetas: Vec<Nat> = (0..=n_max)
        .map(|n| theta.eval(Nat::from(n)))
        .collect::<Result<_>>()?;
    let top = thetas.iter().copied().max().unwrap_or(0);
    let top = u64::try_from(top)
        .ok()
        .filter(|&t| t <= MAX_CHECK_INDEX)
        .ok_or_else(|| {
            KmError::Precondition(format!("theta reaches {top}, beyond the check window"))
        })?;
    let mut prefix = Vec::with_capacity(top as usize + 1);
    let mut acc = 0.0;
    let mut out_of_range = None;
    for i in 0..=top {
        let a = summand(i);
        if out_of_range.is_none() && !(0.0..1.0).contains(&a) {
            out_of_range = Some(i);
        }
        acc += a;
        prefix.push(acc);
    }
    let rows = thetas
        .iter()
        .enumerate()
        .map(|(n, &th)| {
            let n = n as u64;
            let s = prefix[th as usize];
            DivergenceRow {
                n,
                theta_n: th,
                partial_sum: s,
                sum_ok: s >= n as f64 - REAL_TOL,
                theta_ge_n: out_of_range.is_none().then_some(th >= Nat::from(n)),
            }
        })
        .collect();
    Ok(DivergenceReport {
        rows,
        summand_out_of_range: out_of_range,
    })
}

/// One row of a [`CauchyReport`].
#[derive(Debug, Clone, Serialize)]
pub struct CauchyRow {
    pub k: u64,
    pub modulus: Nat,
    /// Largest observed `|c_{n+p} - c_n|` (plus analytic tail, if any) over
    /// the verified window.
    pub max_oscillation: f64,
    pub pass: bool,
    /// `[φ(k), last index examined]`
    pub window: (u64, u64),
    pub tail_used: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    pub rows: Vec<CauchyRow>,
}

impl CauchyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Checks that φ is a Cauchy modulus of the partial sums of a nonnegative
/// series. For each `k ≤ k_max` the oscillation beyond `n = φ(k)` equals the
/// tail `Σ_{i > φ(k)} a_i`, which is summed up to `φ(k) + window` and then
/// closed with `tail_bound(N) ≥ Σ_{i > N} a_i` when supplied.
pub fn check_cauchy_modulus_series(
    term: impl Fn(u64) -> f64,
    phi: &RateFn,
    k_max: u64,
    window: u64,
    tail_bound: Option<&dyn Fn(u64) -> f64>,
) -> Result<CauchyReport> {
    let mut rows = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let m = phi.eval(Nat::from(k))?;
        let n0 = u64::try_from(m)
            .ok()
            .filter(|&n| n <= MAX_CHECK_INDEX)
            .ok_or_else(|| KmError::Precondition(format!("phi({k}) = {m} beyond check window")))?;
        let end = n0 + window;
        let mut tail: f64 = (n0 + 1..=end).map(&term).sum();
        if let Some(tb) = tail_bound {
            tail += tb(end);
        }
        let bound = 1.0 / (k as f64 + 1.0);
        rows.push(CauchyRow {
            k,
            modulus: m,
            max_oscillation: tail,
            pass: tail <= bound + REAL_TOL,
            window: (n0, end),
            tail_used: tail_bound.is_some(),
        });
    }
    Ok(CauchyReport { rows })
}

/// Brute-force check that φ is a Cauchy modulus of an arbitrary real
/// sequence: `|c_{n+p} - c_n| ≤ 1/(k+1)` for `n ∈ [φ(k), φ(k) + n_span]`
/// and `p ≤ p_max`.
pub fn check_cauchy_modulus_sequence(
    seq: impl Fn(u64) -> f64,
    phi: &RateFn,
    k_max: u64,
    n_span: u64,
    p_max: u64,
) -> Result<CauchyReport> {
    let moduli: Vec<u64> = (0..=k_max)
        .map(|k| {
            let m = phi.eval(Nat::from(k))?;
            u64::try_from(m)
                .ok()
                .filter(|&n| n <= MAX_CHECK_INDEX)
                .ok_or_else(|| KmError::Precondition(format!("phi({k}) = {m} beyond check window")))
        })
        .collect::<Result<_>>()?;
    let top = moduli.iter().copied().max().unwrap_or(0) + n_span + p_max;
    let values: Vec<f64> = (0..=top).map(seq).collect();
    let mut rows = Vec::with_capacity(moduli.len());
    for (k, &n0) in moduli.iter().enumerate() {
        let mut worst = 0.0f64;
        for n in n0..=n0 + n_span {
            let cn = values[n as usize];
            let w = &values[n as usize..=(n + p_max) as usize];
            for &c in w {
                worst = worst.max((c - cn).abs());
            }
        }
        let bound = 1.0 / (k as f64 + 1.0);
        rows.push(CauchyRow {
            k: k as u64,
            modulus: Nat::from(n0),
            max_oscillation: worst,
            pass: worst <= bound + REAL_TOL,
            window: (n0, n0 + n_span + p_max),
            tail_used: false,
        });
    }
    Ok(CauchyReport { rows })
}
