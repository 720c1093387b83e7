//! The iteration `x_{n+1} = α_n x_n + β_n T x_n + r_n`, its residual streams
//! and the audit of the pointwise inequalities that hold along it.

use std::io::Write;

use serde::Serialize;

use crate::certificates::InstanceConstants;
use crate::error::{KmError, Result};
use crate::operators::{Operator, Space};
use crate::schedules::Schedule;

/// Absolute tolerance of every audited inequality.
pub const AUDIT_TOL: f64 = 1e-9;
/// Defects `‖Tz - z‖` below this are treated as 0 in `K_{z,n}`.
pub const FIXED_POINT_CLAMP: f64 = 1e-12;
/// Horizons above this run in streaming mode (no stored points).
pub const MAX_STORED_POINTS: u64 = 100_000;
/// Largest horizon accepted at all.
pub const MAX_HORIZON: u64 = 10_000_000;

/// Identifiers of the instance a trajectory was produced from.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InstanceIds {
    pub space: String,
    pub operator: String,
    pub schedule: String,
    pub start: Vec<f64>,
}

/// Per-index scalar record, as written to the trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub n: u64,
    pub res_t: f64,
    /// `None` at the final index.
    pub res_step: Option<f64>,
    pub k_zn: f64,
    pub norm_xn: f64,
    pub dist_xz: f64,
}

/// A computed trajectory. Scalar streams are indexed by `n`: the `*_n`
/// streams have `horizon + 1` entries, the step streams (`alpha`, `beta`,
/// `defect`, `r_norm`, `res_step`) have `horizon`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub horizon: u64,
    /// `x_0, …, x_horizon`; `None` in streaming mode.
    pub points: Option<Vec<Vec<f64>>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub defect: Vec<f64>,
    pub r_norm: Vec<f64>,
    pub res_t: Vec<f64>,
    pub res_step: Vec<f64>,
    pub k_z: Vec<f64>,
    pub norm_x: Vec<f64>,
    pub dist_xz: Vec<f64>,
    pub z: Vec<f64>,
    pub norm_z: f64,
    /// `‖Tz - z‖` as computed.
    pub tz_defect: f64,
    pub ids: InstanceIds,
}

impl Trajectory {
    pub fn is_streamed(&self) -> bool {
        self.points.is_none()
    }

    pub fn row(&self, n: u64) -> Row {
        let i = n as usize;
        Row {
            n,
            res_t: self.res_t[i],
            res_step: self.res_step.get(i).copied(),
            k_zn: self.k_z[i],
            norm_xn: self.norm_x[i],
            dist_xz: self.dist_xz[i],
        }
    }
}

pub const CSV_HEADER: &str = "n,res_T,res_step,K_zn,norm_xn,dist_xz";

/// One CSV line with 17 significant digits per real.
pub fn csv_line(r: &Row) -> String {
    let step = r.res_step.map(|v| format!("{v:.16e}")).unwrap_or_default();
    format!(
        "{},{:.16e},{},{:.16e},{:.16e},{:.16e}",
        r.n, r.res_t, step, r.k_zn, r.norm_xn, r.dist_xz
    )
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for n in 0..=traj.horizon {
        writeln!(w, "{}", csv_line(&traj.row(n)))?;
    }
    w.flush()
}

type Hook<'a> = &'a mut dyn FnMut(u64, &mut Vec<f64>);
pub type Sink<'a> = &'a mut dyn FnMut(&Row) -> Result<()>;

/// Optional callbacks for [`iterate_with`].
#[derive(Default)]
pub struct IterateOptions<'a> {
    /// Called with each freshly computed `x_n` before it is recorded; may
    /// modify it. Used for corrupted-trajectory controls.
    pub hook: Option<Hook<'a>>,
    /// Receives every row as soon as it is complete.
    pub sink: Option<Sink<'a>>,
}

/// Runs the iteration from `x0` with `z = T.fixed_point_for(space, x0)`.
pub fn iterate(
    space: &Space,
    op: &Operator,
    x0: &[f64],
    s: &Schedule,
    horizon: u64,
) -> Result<Trajectory> {
    let z = op.fixed_point_for(space, x0);
    iterate_with(space, op, x0, &z, s, horizon, IterateOptions::default())
}

fn finite_or(n: u64, what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KmError::NonFinite {
            index: n as usize,
            what: format!("{what} = {v}"),
        })
    }
}

fn check_point(n: u64, what: &str, x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(KmError::NonFinite {
            index: n as usize,
            what: format!("{what}[{i}] = {}", x[i]),
        }),
        None => Ok(()),
    }
}

/// Runs the iteration against the reference point `z`.
pub fn iterate_with(
    space: &Space,
    op: &Operator,
    x0: &[f64],
    z: &[f64],
    s: &Schedule,
    horizon: u64,
    mut opts: IterateOptions<'_>,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(KmError::domain("horizon must be >= 1"));
    }
    if horizon > MAX_HORIZON {
        return Err(KmError::domain(format!(
            "horizon {horizon} exceeds {MAX_HORIZON}"
        )));
    }
    space.check_vector(x0, "start point")?;
    space.check_vector(z, "fixed point")?;
    let store = horizon <= MAX_STORED_POINTS;
    let cap = horizon as usize + 1;

    let tz = op.apply(z);
    let tz_defect = space.dist(&tz, z);
    let tz_clamped = if tz_defect < FIXED_POINT_CLAMP {
        0.0
    } else {
        tz_defect
    };
    let norm_z = space.norm(z);

    let mut t = Trajectory {
        horizon,
        points: store.then(|| Vec::with_capacity(cap)),
        alpha: Vec::with_capacity(cap - 1),
        beta: Vec::with_capacity(cap - 1),
        defect: Vec::with_capacity(cap - 1),
        r_norm: Vec::with_capacity(cap - 1),
        res_t: Vec::with_capacity(cap),
        res_step: Vec::with_capacity(cap - 1),
        k_z: Vec::with_capacity(cap),
        norm_x: Vec::with_capacity(cap),
        dist_xz: Vec::with_capacity(cap),
        z: z.to_vec(),
        norm_z,
        tz_defect,
        ids: InstanceIds {
            space: format!("{:?}(dim={})", space.norm_kind(), space.dim()),
            operator: op.tag().to_string(),
            schedule: format!("{:?}", s.family()),
            start: x0.to_vec(),
        },
    };

    let mut x = x0.to_vec();
    if let Some(h) = opts.hook.as_mut() {
        h(0, &mut x);
    }
    check_point(0, "x", &x)?;
    let mut tx = op.apply(&x);
    let mut k = space.dist(&x, z);

    for n in 0..=horizon {
        let res_t = finite_or(n, "res_T", space.dist(&x, &tx))?;
        t.res_t.push(res_t);
        t.k_z.push(finite_or(n, "K_z", k)?);
        t.norm_x.push(space.norm(&x));
        t.dist_xz.push(space.dist(&x, z));
        if n == horizon {
            if let Some(points) = t.points.as_mut() {
                points.push(x);
            }
            break;
        }

        let (a, b) = (s.alpha(n), s.beta(n));
        let d = s.defect(n);
        let rn = s.r_norm(n);
        let mut next: Vec<f64> = x.iter().zip(&tx).map(|(xi, ti)| a * xi + b * ti).collect();
        s.perturbation().add_to(n, &mut next);
        if let Some(h) = opts.hook.as_mut() {
            h(n + 1, &mut next);
        }
        check_point(n + 1, "x", &next)?;
        let step = space.dist(&next, &x);
        t.alpha.push(a);
        t.beta.push(b);
        t.defect.push(d);
        t.r_norm.push(rn);
        t.res_step.push(step);
        if let Some(sink) = opts.sink.as_mut() {
            sink(&t.row(n))?;
        }
        k += b * tz_clamped + d * norm_z + rn;
        tx = op.apply(&next);
        if let Some(points) = t.points.as_mut() {
            points.push(std::mem::replace(&mut x, next));
        } else {
            x = next;
        }
    }
    if let Some(sink) = opts.sink.as_mut() {
        sink(&t.row(horizon))?;
    }
    log::debug!(
        "iterated {} steps (streamed: {}), final res_T = {:e}",
        horizon,
        !store,
        t.res_t[horizon as usize]
    );
    Ok(t)
}

/// Moves `x` away from `z` by `amount` along the ray from `z` (along the
/// first axis when `x = z`).
pub fn push_away(space: &Space, x: &mut [f64], z: &[f64], amount: f64) {
    let d = space.dist(x, z);
    if d > 0.0 {
        let scale = amount / d;
        for (xi, zi) in x.iter_mut().zip(z) {
            *xi += (*xi - zi) * scale;
        }
    } else if let Some(first) = x.first_mut() {
        *first += amount;
    }
}

/// Runs the iteration with `x_index` pushed away from `z` by `amount`.
pub fn iterate_perturbed(
    space: &Space,
    op: &Operator,
    x0: &[f64],
    s: &Schedule,
    horizon: u64,
    index: u64,
    amount: f64,
) -> Result<Trajectory> {
    let z = op.fixed_point_for(space, x0);
    let zc = z.clone();
    let mut hook = |n: u64, x: &mut Vec<f64>| {
        if n == index {
            push_away(space, x, &zc, amount);
        }
    };
    iterate_with(
        space,
        op,
        x0,
        &z,
        s,
        horizon,
        IterateOptions {
            hook: Some(&mut hook),
            sink: None,
        },
    )
}

/// The audited inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Inequality {
    /// `‖x_{n+1}-z‖ ≤ (α_n+β_n)‖x_n-z‖ + β_n‖Tz-z‖ + (1-α_n-β_n)‖z‖ + ‖r_n‖`
    StepDistance,
    /// `‖x_n-z‖ ≤ K_{z,n}`
    DistanceBound,
    /// `‖x_{n+1}-x_n‖ ≤ 2K_{z,n+1}`
    StepBound,
    /// `‖x_n-Tx_n‖ ≤ 2‖x_n-z‖ + ‖z-Tz‖`
    ResidualTriangle,
    /// `‖x_n-Tx_n‖ ≤ 2‖x_n-z‖ ≤ 2K_{z,n}` for a fixed point `z`
    ResidualBound,
    /// `‖x_{n+1}-x_n‖ ≤ β_n‖x_n-Tx_n‖ + (1-α_n-β_n)‖x_n‖ + ‖r_n‖`
    StepResidual,
    /// `‖x_{n+1}-Tx_{n+1}‖ ≤ ‖x_n-Tx_n‖ + 2(1-α_n-β_n)‖x_n‖ + 2‖r_n‖`
    ResidualGrowth,
    /// `‖x_n-z‖ ≤ ‖x-z‖ + M_ab‖z‖ + M_r`
    UniformDistance,
    /// `‖x_n-z‖ ≤ M0` and `‖x_n‖ ≤ M`
    UniformBounds,
}

impl Inequality {
    pub const ALL: [Inequality; 9] = [
        Inequality::StepDistance,
        Inequality::DistanceBound,
        Inequality::StepBound,
        Inequality::ResidualTriangle,
        Inequality::ResidualBound,
        Inequality::StepResidual,
        Inequality::ResidualGrowth,
        Inequality::UniformDistance,
        Inequality::UniformBounds,
    ];
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub inequality: Inequality,
    pub index: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`, positive beyond tolerance.
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalitySummary {
    pub inequality: Inequality,
    pub checked: u64,
    pub violations: u64,
    /// Largest `lhs - rhs` seen (negative when every instance has slack).
    pub max_excess: f64,
}

/// Stored violation rows are capped; counts in the summaries are complete.
pub const MAX_VIOLATION_ROWS: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub horizon: u64,
    pub streamed: bool,
    pub tolerance: f64,
    pub constants: InstanceConstants,
    pub summaries: Vec<InequalitySummary>,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn total_violations(&self) -> u64 {
        self.summaries.iter().map(|s| s.violations).sum()
    }

    pub fn pass(&self) -> bool {
        self.total_violations() == 0
    }

    /// Indices of stored violations of `which`.
    pub fn indices(&self, which: Inequality) -> Vec<u64> {
        self.violations
            .iter()
            .filter(|v| v.inequality == which)
            .map(|v| v.index)
            .collect()
    }
}

struct Auditor {
    summaries: Vec<InequalitySummary>,
    violations: Vec<Violation>,
}

impl Auditor {
    fn check(&mut self, which: Inequality, index: u64, lhs: f64, rhs: f64) {
        let excess = lhs - rhs;
        let s = &mut self.summaries[which as usize];
        s.checked += 1;
        if excess > s.max_excess || s.checked == 1 {
            s.max_excess = excess;
        }
        if !(excess <= AUDIT_TOL) {
            s.violations += 1;
            if self.violations.len() < MAX_VIOLATION_ROWS {
                self.violations.push(Violation {
                    inequality: which,
                    index,
                    lhs,
                    rhs,
                    excess,
                });
            }
        }
    }
}

/// Checks every audited inequality at every index of the trajectory. Works
/// on the scalar streams only, so streamed trajectories are covered fully.
pub fn audit_inequalities(t: &Trajectory, c: &InstanceConstants) -> AuditReport {
    let mut a = Auditor {
        summaries: Inequality::ALL
            .iter()
            .map(|&inequality| InequalitySummary {
                inequality,
                checked: 0,
                violations: 0,
                max_excess: f64::NEG_INFINITY,
            })
            .collect(),
        violations: Vec::new(),
    };
    let h = t.horizon as usize;
    let tzd = t.tz_defect;
    let nz = t.norm_z;
    let uniform_bound = t.dist_xz[0] + c.m_ab as f64 * nz + c.m_r as f64;
    for i in 0..=h {
        let n = i as u64;
        let dist = t.dist_xz[i];
        a.check(Inequality::DistanceBound, n, dist, t.k_z[i]);
        a.check(
            Inequality::ResidualTriangle,
            n,
            t.res_t[i],
            2.0 * dist + tzd,
        );
        a.check(Inequality::ResidualBound, n, t.res_t[i], 2.0 * dist);
        a.check(Inequality::ResidualBound, n, 2.0 * dist, 2.0 * t.k_z[i]);
        a.check(Inequality::UniformDistance, n, dist, uniform_bound);
        a.check(Inequality::UniformBounds, n, dist, c.m0 as f64);
        a.check(Inequality::UniformBounds, n, t.norm_x[i], c.m as f64);
        if i == h {
            break;
        }
        let (al, be, d, r) = (t.alpha[i], t.beta[i], t.defect[i], t.r_norm[i]);
        a.check(
            Inequality::StepDistance,
            n,
            t.dist_xz[i + 1],
            (al + be) * dist + be * tzd + d * nz + r,
        );
        a.check(Inequality::StepBound, n, t.res_step[i], 2.0 * t.k_z[i + 1]);
        a.check(
            Inequality::StepResidual,
            n,
            t.res_step[i],
            be * t.res_t[i] + d * t.norm_x[i] + r,
        );
        a.check(
            Inequality::ResidualGrowth,
            n,
            t.res_t[i + 1],
            t.res_t[i] + 2.0 * d * t.norm_x[i] + 2.0 * r,
        );
    }
    AuditReport {
        horizon: t.horizon,
        streamed: t.is_streamed(),
        tolerance: AUDIT_TOL,
        constants: *c,
        summaries: a.summaries,
        violations: a.violations,
    }
}
