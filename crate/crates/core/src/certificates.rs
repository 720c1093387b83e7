//! Rate certificates for the generalized KM iteration.
//!
//! Given integer constants `b, M_ab, M_r` (with `M0 = b + M_ab·b + M_r`,
//! `M = M0 + b`), a modulus of uniform convexity η and the schedule moduli
//! σ1, σ2, σ3:
//!
//! ```text
//! Ω(k) = ⌈(M0 + M_ab·b + M_r + 1)(k+1) / η(1/(M0(k+1)))⌉
//! Ω̃(k) = ⌈(M0 + M_ab·b + M_r + 1)(k+1) / (2η̃(1/(M0(k+1))))⌉     (η = ε·η̃, η̃ increasing)
//! Φ(k) = σ2(Ω(2k+1) + max{σ1(8M(k+1)-1), σ3(8k+7)} + 1)          rate for ‖x_n - Tx_n‖
//! Ψ(k) = Φ(2k+1)                                                 rate for ‖x_{n+1} - x_n‖
//! Δ(k, L) = σ2(Ω(k) + L)                                         modulus of liminf
//! ```
//!
//! Closed-form specializations for Hilbert spaces, the inexact/classical KM
//! iteration and the two concrete schedule families are provided as
//! independent code paths so that they can be cross-checked against the
//! general composition.
//!
//! Where the modulus is a monomial with rational coefficient, Ω and Ω̃ are
//! computed in exact integer arithmetic. Otherwise the quotient is evaluated
//! in double precision and rounded up with [`ceil_guarded`]; any pointwise
//! larger rate is still a rate.

use serde::Serialize;

use crate::error::{KmError, Result};
use crate::moduli::{
    ceil_div, ceil_guarded, ceil_plain, checked_add, checked_mul, checked_pow, LiminfModulus,
    Monomial, Nat, RateFn, RateKind, UcModulus,
};
use crate::operators::Space;
use crate::schedules::{big_lambda, FamilyTag, Schedule};

/// Integer constants `b, M0, M, M_ab, M_r` of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceConstants {
    pub b: Nat,
    pub m0: Nat,
    pub m: Nat,
    pub m_ab: Nat,
    pub m_r: Nat,
}

impl InstanceConstants {
    /// `M0 = b + M_ab·b + M_r`, `M = M0 + b`.
    pub fn new(b: Nat, m_ab: Nat, m_r: Nat) -> Result<Self> {
        if b == 0 {
            return Err(KmError::domain("b must be >= 1"));
        }
        const CTX: &str = "instance constants";
        let m0 = checked_add(checked_add(b, checked_mul(m_ab, b, CTX)?, CTX)?, m_r, CTX)?;
        let m = checked_add(m0, b, CTX)?;
        Ok(InstanceConstants {
            b,
            m0,
            m,
            m_ab,
            m_r,
        })
    }

    /// `M0 + M_ab·b + M_r + 1`, the numerator coefficient of Ω.
    pub fn omega_coefficient(&self) -> Result<Nat> {
        const CTX: &str = "omega coefficient";
        let t = checked_add(self.m0, checked_mul(self.m_ab, self.b, CTX)?, CTX)?;
        checked_add(checked_add(t, self.m_r, CTX)?, 1, CTX)
    }
}

/// `b = max(1, ⌈max{‖x - z‖, ‖z‖}⌉)` with the schedule's `M_ab`, `M_r`.
pub fn instance_constants(
    space: &Space,
    x: &[f64],
    z: &[f64],
    schedule: &Schedule,
) -> Result<InstanceConstants> {
    space.check_vector(x, "start point")?;
    space.check_vector(z, "fixed point")?;
    let r = space.dist(x, z).max(space.norm(z));
    let b = ceil_plain(r, "b")?.max(1);
    InstanceConstants::new(b, schedule.m_ab(), schedule.m_r())
}

/// Which formula produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormulaTag {
    General,
    Factored,
    Hilbert,
    InexactKM,
    ClassicalKM,
    Anchor,
    Example1,
    Example2,
}

/// The rates Φ, Ψ with the Ω and Δ they were assembled from.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub omega: RateFn,
    pub phi: RateFn,
    pub psi: RateFn,
    pub liminf: LiminfModulus,
    pub formula_tag: FormulaTag,
    pub constants: InstanceConstants,
    /// A second derivation of `(Φ, Ψ)` when a closed form and the general
    /// composition both apply. Both are valid rates.
    pub alternate: Option<(RateFn, RateFn)>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRow {
    pub k: Nat,
    pub omega: Nat,
    pub phi: Nat,
    pub psi: Nat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternate_phi: Option<Nat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternate_psi: Option<Nat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateTable {
    pub formula_tag: FormulaTag,
    pub constants: InstanceConstants,
    pub omega: String,
    pub phi: String,
    pub psi: String,
    pub notes: Vec<String>,
    pub rows: Vec<CertificateRow>,
}

impl Certificate {
    pub fn tabulate(&self, k_max: Nat) -> Result<CertificateTable> {
        let rows = (0..=k_max)
            .map(|k| {
                let (ap, aq) = match &self.alternate {
                    Some((p, q)) => (Some(p.eval(k)?), Some(q.eval(k)?)),
                    None => (None, None),
                };
                Ok(CertificateRow {
                    k,
                    omega: self.omega.eval(k)?,
                    phi: self.phi.eval(k)?,
                    psi: self.psi.eval(k)?,
                    alternate_phi: ap,
                    alternate_psi: aq,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CertificateTable {
            formula_tag: self.formula_tag,
            constants: self.constants,
            omega: self.omega.description().to_string(),
            phi: self.phi.description().to_string(),
            psi: self.psi.description().to_string(),
            notes: self.notes.clone(),
            rows,
        })
    }
}

const OMEGA_CTX: &str = "Omega";

/// `⌈A(k+1)·(M0(k+1))^m·den / (scale·num)⌉` for `η(ε) = (num/den)ε^m` at
/// `ε = 1/(M0(k+1))`.
fn omega_exact(a: Nat, m0: Nat, mono: Monomial, scale: Nat, k: Nat) -> Result<Nat> {
    let k1 = checked_add(k, 1, OMEGA_CTX)?;
    let inv_eps = checked_mul(m0, k1, OMEGA_CTX)?;
    let num = checked_mul(
        checked_mul(
            checked_mul(a, k1, OMEGA_CTX)?,
            checked_pow(inv_eps, mono.power, OMEGA_CTX)?,
            OMEGA_CTX,
        )?,
        mono.coeff_den,
        OMEGA_CTX,
    )?;
    let den = checked_mul(scale, mono.coeff_num, OMEGA_CTX)?;
    Ok(ceil_div(num, den))
}

fn omega_float(
    a: Nat,
    m0: Nat,
    eval: impl Fn(f64) -> Result<f64>,
    scale: f64,
    k: Nat,
) -> Result<Nat> {
    let k1 = (k as f64) + 1.0;
    let eps = 1.0 / (m0 as f64 * k1);
    let e = eval(eps)?;
    if !(e > 0.0) {
        return Err(KmError::domain(format!(
            "modulus value {e} at eps = {eps} is not positive"
        )));
    }
    ceil_guarded(a as f64 * k1 / (scale * e), OMEGA_CTX)
}

/// Ω from the unfactored modulus η.
pub fn omega(c: &InstanceConstants, eta: &UcModulus) -> Result<RateFn> {
    let a = c.omega_coefficient()?;
    let m0 = c.m0;
    let eta = eta.clone();
    let desc = format!("ceil({a}(k+1)/eta(1/({m0}(k+1)))) [{}]", eta.description());
    Ok(
        RateFn::new(RateKind::CauchyModulus, desc, move |k| match eta.exact() {
            Some(mono) => omega_exact(a, m0, mono, 1, k),
            None => omega_float(a, m0, |e| eta.eval(e), 1.0, k),
        })
        .with_kind(RateKind::RateOfConvergence("Omega".into())),
    )
}

/// Ω̃ from the factor η̃ of `η(ε) = ε·η̃(ε)`; needs η̃ increasing.
pub fn omega_factored(c: &InstanceConstants, eta: &UcModulus) -> Result<RateFn> {
    if !eta.is_factored() {
        return Err(KmError::domain(format!(
            "modulus {} carries no factorization eta = eps*eta_tilde",
            eta.description()
        )));
    }
    if !eta.tilde_increasing() {
        return Err(KmError::domain("eta_tilde is not declared increasing"));
    }
    let a = c.omega_coefficient()?;
    let m0 = c.m0;
    let eta = eta.clone();
    let desc = format!(
        "ceil({a}(k+1)/(2 eta_tilde(1/({m0}(k+1))))) [{}]",
        eta.description()
    );
    Ok(RateFn::new(
        RateKind::RateOfConvergence("Omega~".into()),
        desc,
        move |k| match eta.exact_tilde() {
            Some(mono) => omega_exact(a, m0, mono, 2, k),
            None => omega_float(a, m0, |e| eta.eval_tilde(e), 2.0, k),
        },
    ))
}

/// Ω̃ in a Hilbert space: `4·M0·(M0 + M_ab·b + M_r + 1)(k+1)²`.
pub fn hilbert_omega_closed_form(c: &InstanceConstants) -> Result<RateFn> {
    let a = c.omega_coefficient()?;
    let coeff = checked_mul(checked_mul(4, c.m0, OMEGA_CTX)?, a, OMEGA_CTX)?;
    Ok(RateFn::new(
        RateKind::RateOfConvergence("Omega~".into()),
        format!("{coeff}(k+1)^2"),
        move |k| {
            let k1 = checked_add(k, 1, OMEGA_CTX)?;
            checked_mul(coeff, checked_mul(k1, k1, OMEGA_CTX)?, OMEGA_CTX)
        },
    ))
}

/// The Cauchy modulus `k ↦ max{σ1(4M(k+1)-1), σ3(4k+3)}` of
/// `b_n = 2M(1-α_n-β_n) + 2‖r_n‖`.
pub fn perturbation_cauchy_modulus(c: &InstanceConstants, s: &Schedule) -> RateFn {
    let (s1, s3, m) = (s.sigma1().clone(), s.sigma3().clone(), c.m);
    RateFn::new(
        RateKind::CauchyModulus,
        format!("max{{sigma1(4*{m}(k+1)-1), sigma3(4k+3)}}"),
        move |k| {
            const CTX: &str = "psi";
            let k1 = checked_add(k, 1, CTX)?;
            let i1 = checked_mul(checked_mul(4, m, CTX)?, k1, CTX)? - 1;
            let i3 = checked_add(checked_mul(4, k, CTX)?, 3, CTX)?;
            Ok(s1.eval(i1)?.max(s3.eval(i3)?))
        },
    )
}

/// Φ(k) = σ2(Ω(2k+1) + max{σ1(8M(k+1)-1), σ3(8k+7)} + 1).
pub fn phi(c: &InstanceConstants, s: &Schedule, omega: &RateFn) -> RateFn {
    let (s1, s2, s3, om, m) = (
        s.sigma1().clone(),
        s.sigma2().clone(),
        s.sigma3().clone(),
        omega.clone(),
        c.m,
    );
    RateFn::new(
        RateKind::RateOfConvergence("|x_n - Tx_n|".into()),
        format!(
            "sigma2(Omega(2k+1) + max{{sigma1(8*{m}(k+1)-1), sigma3(8k+7)}} + 1) [Omega = {}]",
            om.description()
        ),
        move |k| {
            const CTX: &str = "Phi";
            let k1 = checked_add(k, 1, CTX)?;
            let w = om.eval(checked_add(checked_mul(2, k, CTX)?, 1, CTX)?)?;
            let i1 = checked_mul(checked_mul(8, m, CTX)?, k1, CTX)? - 1;
            let i3 = checked_add(checked_mul(8, k, CTX)?, 7, CTX)?;
            let inner = s1.eval(i1)?.max(s3.eval(i3)?);
            s2.eval(checked_add(checked_add(w, inner, CTX)?, 1, CTX)?)
        },
    )
}

/// Ψ(k) = Φ(2k+1).
pub fn psi(phi: &RateFn) -> RateFn {
    let p = phi.clone();
    RateFn::new(
        RateKind::RateOfConvergence("|x_{n+1} - x_n|".into()),
        "Phi(2k+1)",
        move |k| p.eval(checked_add(checked_mul(2, k, "Psi")?, 1, "Psi")?),
    )
}

/// Δ(k, L) = σ2(Ω(k) + L).
pub fn liminf_modulus(s: &Schedule, omega: &RateFn) -> LiminfModulus {
    let (s2, om) = (s.sigma2().clone(), omega.clone());
    LiminfModulus::new(format!("sigma2({} + L)", om.description()), move |k, l| {
        s2.eval(checked_add(om.eval(k)?, l, "Delta")?)
    })
}

/// Which Ω the general pipeline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OmegaVariant {
    /// Ω from η.
    General,
    /// Ω̃ from η̃.
    Factored,
    /// Ω̃ as the Hilbert polynomial.
    HilbertClosedForm,
}

/// Φ, Ψ, Δ from the general composition with the chosen Ω.
pub fn general_certificate(
    c: &InstanceConstants,
    s: &Schedule,
    eta: &UcModulus,
    variant: OmegaVariant,
) -> Result<Certificate> {
    let (om, tag) = match variant {
        OmegaVariant::General => (omega(c, eta)?, FormulaTag::General),
        OmegaVariant::Factored => (omega_factored(c, eta)?, FormulaTag::Factored),
        OmegaVariant::HilbertClosedForm => (hilbert_omega_closed_form(c)?, FormulaTag::Hilbert),
    };
    let ph = phi(c, s, &om);
    let ps = psi(&ph);
    let lim = liminf_modulus(s, &om);
    let mut alternate = None;
    if variant == OmegaVariant::HilbertClosedForm && eta.is_factored() && eta.tilde_increasing() {
        let of = omega_factored(c, eta)?;
        let ph2 = phi(c, s, &of);
        alternate = Some((ph2.clone(), psi(&ph2)));
    }
    Ok(Certificate {
        omega: om,
        phi: ph,
        psi: ps,
        liminf: lim,
        formula_tag: tag,
        constants: *c,
        alternate,
        notes: Vec::new(),
    })
}

/// Ω* in a Hilbert space: `4(b + M_r)(b + 2M_r + 1)(k+1)²`.
pub fn inexact_km_hilbert_omega(b: Nat, m_r: Nat) -> Result<RateFn> {
    const CTX: &str = "Omega*";
    let coeff = checked_mul(
        checked_mul(4, checked_add(b, m_r, CTX)?, CTX)?,
        checked_add(checked_add(b, checked_mul(2, m_r, CTX)?, CTX)?, 1, CTX)?,
        CTX,
    )?;
    Ok(RateFn::new(
        RateKind::RateOfConvergence("Omega*".into()),
        format!("{coeff}(k+1)^2"),
        move |k| {
            let k1 = checked_add(k, 1, CTX)?;
            checked_mul(coeff, checked_mul(k1, k1, CTX)?, CTX)
        },
    ))
}

/// Φ*(k) = σ2(Ω*(2k+1) + σ3(8k+7) + 1).
fn inexact_phi(sigma2: &RateFn, sigma3: &RateFn, omega: &RateFn) -> RateFn {
    let (s2, s3, om) = (sigma2.clone(), sigma3.clone(), omega.clone());
    RateFn::new(
        RateKind::RateOfConvergence("|x_n - Tx_n|".into()),
        format!(
            "sigma2(Omega*(2k+1) + sigma3(8k+7) + 1) [Omega* = {}]",
            om.description()
        ),
        move |k| {
            const CTX: &str = "Phi*";
            let w = om.eval(checked_add(checked_mul(2, k, CTX)?, 1, CTX)?)?;
            let r = s3.eval(checked_add(checked_mul(8, k, CTX)?, 7, CTX)?)?;
            s2.eval(checked_add(checked_add(w, r, CTX)?, 1, CTX)?)
        },
    )
}

/// Certificate of the inexact KM iteration `x_{n+1} = (1-β_n)x_n + β_nTx_n + r_n`.
///
/// Uses Ω* from η (or from η̃ when `factored`); in a Hilbert space the
/// polynomial Ω* is recorded as the alternate derivation.
pub fn inexact_km_certificate(
    b: Nat,
    m_r: Nat,
    sigma2: &RateFn,
    sigma3: &RateFn,
    eta: &UcModulus,
    factored: bool,
) -> Result<Certificate> {
    let c = InstanceConstants::new(b, 0, m_r)?;
    let om = if factored {
        omega_factored(&c, eta)?
    } else {
        omega(&c, eta)?
    };
    let ph = inexact_phi(sigma2, sigma3, &om);
    let ps = psi(&ph);
    let s2 = sigma2.clone();
    let om2 = om.clone();
    let lim = LiminfModulus::new("sigma2(Omega*(k) + L)", move |k, l| {
        s2.eval(checked_add(om2.eval(k)?, l, "Delta*")?)
    });
    let alternate = if eta.is_hilbert() {
        let h = inexact_km_hilbert_omega(b, m_r)?;
        let ph2 = inexact_phi(sigma2, sigma3, &h);
        Some((ph2.clone(), psi(&ph2)))
    } else {
        None
    };
    Ok(Certificate {
        omega: om,
        phi: ph,
        psi: ps,
        liminf: lim,
        formula_tag: FormulaTag::InexactKM,
        constants: c,
        alternate,
        notes: Vec::new(),
    })
}

/// Classical KM: the inexact certificate with `σ3 = 0`, `M_r = 0`.
pub fn classical_km_certificate(
    b: Nat,
    sigma2: &RateFn,
    eta: &UcModulus,
    factored: bool,
) -> Result<Certificate> {
    let zero = RateFn::constant(RateKind::CauchyModulus, 0);
    let mut cert = inexact_km_certificate(b, 0, sigma2, &zero, eta, factored)?;
    cert.formula_tag = FormulaTag::ClassicalKM;
    Ok(cert)
}

fn poly_rate(name: &str, quad: Nat, lin: Nat, constant: Nat, minus_one: bool) -> RateFn {
    let ctx = name.to_string();
    let desc = format!(
        "{quad}(k+1)^2 + {lin}(k+1) + {constant}{}",
        if minus_one { " - 1" } else { "" }
    );
    RateFn::new(RateKind::RateOfConvergence(name.into()), desc, move |k| {
        let k1 = checked_add(k, 1, &ctx)?;
        let q = checked_mul(quad, checked_mul(k1, k1, &ctx)?, &ctx)?;
        let l = checked_mul(lin, k1, &ctx)?;
        let v = checked_add(checked_add(q, l, &ctx)?, constant, &ctx)?;
        Ok(if minus_one { v - 1 } else { v })
    })
}

/// Example 1 (`α_n = 1-λ`, `β_n = λ`, `r_n = r*/(n+L)²`), with
/// `M_r = 2⌈‖r*‖⌉` and `σ2(k) = Λk`:
///
/// ```text
/// Φ*(k) = Λ(Ω*(2k+1) + 8⌈‖r*‖⌉(k+1) + 1)
/// Ψ*(k) = Λ(Ω*(4k+3) + 16⌈‖r*‖⌉(k+1) + 1)
/// ```
///
/// With `hilbert` set the polynomial forms are primary and the composition
/// through the Hilbert Ω* is the alternate.
pub fn example1_certificate(
    b: Nat,
    lambda: f64,
    r_star_norm: f64,
    eta: &UcModulus,
    hilbert: bool,
) -> Result<Certificate> {
    const CTX: &str = "Example 1";
    let big = big_lambda(lambda)?;
    let cr = ceil_plain(r_star_norm, "ceil(|r*|)")?;
    let m_r = checked_mul(2, cr, CTX)?;
    let c = InstanceConstants::new(b, 0, m_r)?;
    let om = if hilbert {
        inexact_km_hilbert_omega(b, m_r)?
    } else {
        omega(&c, eta)?
    };

    let compose = |om: &RateFn| -> (RateFn, RateFn) {
        let (o1, o2) = (om.clone(), om.clone());
        let ph = RateFn::new(
            RateKind::RateOfConvergence("|x_n - Tx_n|".into()),
            format!("{big}(Omega*(2k+1) + {}(k+1) + 1)", 8 * cr),
            move |k| {
                let w = o1.eval(checked_add(checked_mul(2, k, CTX)?, 1, CTX)?)?;
                let r = checked_mul(checked_mul(8, cr, CTX)?, checked_add(k, 1, CTX)?, CTX)?;
                checked_mul(big, checked_add(checked_add(w, r, CTX)?, 1, CTX)?, CTX)
            },
        );
        let ps = RateFn::new(
            RateKind::RateOfConvergence("|x_{n+1} - x_n|".into()),
            format!("{big}(Omega*(4k+3) + {}(k+1) + 1)", 16 * cr),
            move |k| {
                let w = o2.eval(checked_add(checked_mul(4, k, CTX)?, 3, CTX)?)?;
                let r = checked_mul(checked_mul(16, cr, CTX)?, checked_add(k, 1, CTX)?, CTX)?;
                checked_mul(big, checked_add(checked_add(w, r, CTX)?, 1, CTX)?, CTX)
            },
        );
        (ph, ps)
    };

    let (composed_phi, composed_psi) = compose(&om);
    let (ph, ps, alternate) = if hilbert {
        // 16Λ(b+2c)(b+4c+1)(k+1)² + 8Λc(k+1) + Λ and the 64Λ/16Λc analogue
        let p = checked_mul(
            checked_add(b, checked_mul(2, cr, CTX)?, CTX)?,
            checked_add(checked_add(b, checked_mul(4, cr, CTX)?, CTX)?, 1, CTX)?,
            CTX,
        )?;
        let lc = checked_mul(big, cr, CTX)?;
        let ph = poly_rate(
            "|x_n - Tx_n|",
            checked_mul(checked_mul(16, big, CTX)?, p, CTX)?,
            checked_mul(8, lc, CTX)?,
            big,
            false,
        );
        let ps = poly_rate(
            "|x_{n+1} - x_n|",
            checked_mul(checked_mul(64, big, CTX)?, p, CTX)?,
            checked_mul(16, lc, CTX)?,
            big,
            false,
        );
        (ph, ps, Some((composed_phi, composed_psi)))
    } else {
        (composed_phi, composed_psi, None)
    };

    let om2 = om.clone();
    let lim = LiminfModulus::new(format!("{big}(Omega*(k) + L)"), move |k, l| {
        checked_mul(big, checked_add(om2.eval(k)?, l, CTX)?, CTX)
    });
    Ok(Certificate {
        omega: om,
        phi: ph,
        psi: ps,
        liminf: lim,
        formula_tag: FormulaTag::Example1,
        constants: c,
        alternate,
        notes: Vec::new(),
    })
}

/// Example 2 (`α_n = λ`, `β_n = 1-λ-1/(n+J)²`, `r_n = r*/(n+L)²`), with
/// `M_ab = 2`, `M_r = 2⌈‖r*‖⌉`, `σ2(n) = Λ(n+2)-1`:
///
/// ```text
/// Φ(k) = ΛΩ(2k+1) + 16Λ(2b + ⌈‖r*‖⌉)(k+1) + 3Λ - 1
/// Ψ(k) = ΛΩ(4k+3) + 32Λ(2b + ⌈‖r*‖⌉)(k+1) + 3Λ - 1
/// ```
///
/// In a Hilbert space (`hilbert`), Ω is the polynomial Ω̃ and the primary
/// rates are `16ΛM1(k+1)² + 16ΛM2(k+1) + 3Λ - 1` (resp. `64ΛM1`, `32ΛM2`)
/// with `M1 = (3b+2c)(5b+4c+1)`, `M2 = 2b+c`.
pub fn example2_certificate(
    b: Nat,
    lambda: f64,
    j: u64,
    r_star_norm: f64,
    eta: &UcModulus,
    hilbert: bool,
) -> Result<Certificate> {
    const CTX: &str = "Example 2";
    if j < 2 {
        return Err(KmError::domain("J must be >= 2"));
    }
    let jf = j as f64;
    if !(lambda > 0.0 && lambda < (jf * jf - 1.0) / (jf * jf)) {
        return Err(KmError::domain(format!(
            "lambda {lambda} inadmissible for J = {j}"
        )));
    }
    let big = big_lambda(lambda)?;
    let cr = ceil_plain(r_star_norm, "ceil(|r*|)")?;
    let c = InstanceConstants::new(b, 2, checked_mul(2, cr, CTX)?)?;
    let om = if hilbert {
        hilbert_omega_closed_form(&c)?
    } else {
        omega(&c, eta)?
    };
    let m2 = checked_add(checked_mul(2, b, CTX)?, cr, CTX)?;
    let tail = checked_mul(3, big, CTX)? - 1;

    let compose = |om: &RateFn| -> (RateFn, RateFn) {
        let (o1, o2) = (om.clone(), om.clone());
        let ph = RateFn::new(
            RateKind::RateOfConvergence("|x_n - Tx_n|".into()),
            format!("{big}*Omega(2k+1) + {}(k+1) + {tail}", 16 * big * m2),
            move |k| {
                let w = checked_mul(
                    big,
                    o1.eval(checked_add(checked_mul(2, k, CTX)?, 1, CTX)?)?,
                    CTX,
                )?;
                let lin = checked_mul(
                    checked_mul(checked_mul(16, big, CTX)?, m2, CTX)?,
                    checked_add(k, 1, CTX)?,
                    CTX,
                )?;
                checked_add(checked_add(w, lin, CTX)?, tail, CTX)
            },
        );
        let ps = RateFn::new(
            RateKind::RateOfConvergence("|x_{n+1} - x_n|".into()),
            format!("{big}*Omega(4k+3) + {}(k+1) + {tail}", 32 * big * m2),
            move |k| {
                let w = checked_mul(
                    big,
                    o2.eval(checked_add(checked_mul(4, k, CTX)?, 3, CTX)?)?,
                    CTX,
                )?;
                let lin = checked_mul(
                    checked_mul(checked_mul(32, big, CTX)?, m2, CTX)?,
                    checked_add(k, 1, CTX)?,
                    CTX,
                )?;
                checked_add(checked_add(w, lin, CTX)?, tail, CTX)
            },
        );
        (ph, ps)
    };

    let (composed_phi, composed_psi) = compose(&om);
    let (ph, ps, alternate) = if hilbert {
        let m1 = checked_mul(
            checked_add(checked_mul(3, b, CTX)?, checked_mul(2, cr, CTX)?, CTX)?,
            checked_add(
                checked_add(checked_mul(5, b, CTX)?, checked_mul(4, cr, CTX)?, CTX)?,
                1,
                CTX,
            )?,
            CTX,
        )?;
        let ph = poly_rate(
            "|x_n - Tx_n|",
            checked_mul(checked_mul(16, big, CTX)?, m1, CTX)?,
            checked_mul(checked_mul(16, big, CTX)?, m2, CTX)?,
            checked_mul(3, big, CTX)?,
            true,
        );
        let ps = poly_rate(
            "|x_{n+1} - x_n|",
            checked_mul(checked_mul(64, big, CTX)?, m1, CTX)?,
            checked_mul(checked_mul(32, big, CTX)?, m2, CTX)?,
            checked_mul(3, big, CTX)?,
            true,
        );
        (ph, ps, Some((composed_phi, composed_psi)))
    } else {
        (composed_phi, composed_psi, None)
    };

    let om2 = om.clone();
    let lim = LiminfModulus::new(format!("{big}(Omega(k) + L + 2) - 1"), move |k, l| {
        let v = checked_add(checked_add(om2.eval(k)?, l, CTX)?, 2, CTX)?;
        Ok(checked_mul(big, v, CTX)? - 1)
    });
    Ok(Certificate {
        omega: om,
        phi: ph,
        psi: ps,
        liminf: lim,
        formula_tag: FormulaTag::Example2,
        constants: c,
        alternate,
        notes: Vec::new(),
    })
}

/// Requested certificate formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaChoice {
    /// Family closed form in Hilbert spaces, the general Ω otherwise.
    #[default]
    Auto,
    General,
    Factored,
    Hilbert,
    /// The family's own formula (inexact/classical KM, anchor, examples).
    Family,
}

/// Picks and builds the certificate for an instance.
///
/// `Auto` uses the Hilbert closed forms when the space is Euclidean and the
/// family has one, and the general Ω from η otherwise.
pub fn certify(
    choice: FormulaChoice,
    c: &InstanceConstants,
    s: &Schedule,
    space: &Space,
) -> Result<Certificate> {
    let eta = space.uc_modulus();
    let hilbert = space.is_hilbert();
    let family_cert = |hilbert_form: bool| -> Result<Option<Certificate>> {
        let p = s.params();
        Ok(match (s.family(), p) {
            (FamilyTag::Example1, Some(p)) => Some(example1_certificate(
                c.b,
                p.lambda,
                p.r_star_norm,
                eta,
                hilbert_form,
            )?),
            (FamilyTag::Example2, Some(p)) => Some(example2_certificate(
                c.b,
                p.lambda,
                p.j.unwrap_or(2),
                p.r_star_norm,
                eta,
                hilbert_form,
            )?),
            (FamilyTag::ClassicalKM, _) => {
                let mut cert = classical_km_certificate(c.b, s.sigma2(), eta, hilbert_form)?;
                if hilbert_form {
                    swap_to_alternate(&mut cert);
                }
                Some(cert)
            }
            (FamilyTag::InexactKM, _) => {
                let mut cert =
                    inexact_km_certificate(c.b, c.m_r, s.sigma2(), s.sigma3(), eta, hilbert_form)?;
                if hilbert_form {
                    swap_to_alternate(&mut cert);
                }
                Some(cert)
            }
            (FamilyTag::Anchor, _) => {
                let v = if hilbert_form {
                    OmegaVariant::HilbertClosedForm
                } else {
                    OmegaVariant::General
                };
                let mut cert = general_certificate(c, s, eta, v)?;
                cert.formula_tag = FormulaTag::Anchor;
                Some(cert)
            }
            _ => None,
        })
    };
    let cert = match choice {
        FormulaChoice::General => general_certificate(c, s, eta, OmegaVariant::General)?,
        FormulaChoice::Factored => general_certificate(c, s, eta, OmegaVariant::Factored)?,
        FormulaChoice::Hilbert => {
            if !hilbert {
                return Err(KmError::Config(
                    "Hilbert closed forms need a Euclidean space".into(),
                ));
            }
            general_certificate(c, s, eta, OmegaVariant::HilbertClosedForm)?
        }
        FormulaChoice::Family => match family_cert(hilbert)? {
            Some(cert) => cert,
            None => general_certificate(c, s, eta, OmegaVariant::General)?,
        },
        FormulaChoice::Auto => {
            if hilbert {
                match family_cert(true)? {
                    Some(cert) => cert,
                    None => general_certificate(c, s, eta, OmegaVariant::HilbertClosedForm)?,
                }
            } else {
                general_certificate(c, s, eta, OmegaVariant::General)?
            }
        }
    };
    Ok(cert)
}

/// Makes the Hilbert polynomial derivation primary and the η̃ composition
/// the alternate. Both produce identical values.
fn swap_to_alternate(cert: &mut Certificate) {
    if let Some((p, q)) = cert.alternate.take() {
        let old = (
            std::mem::replace(&mut cert.phi, p),
            std::mem::replace(&mut cert.psi, q),
        );
        cert.alternate = Some(old);
    }
}
