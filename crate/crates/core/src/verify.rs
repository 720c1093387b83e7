//! Empirical checks of certificates against computed trajectories.
//!
//! "For all `n ≥ Φ(k)`" can only be checked up to the horizon; every report
//! states the window it examined, and rows whose bound lies beyond the
//! horizon are marked truncated and carry no verdict.

use std::io::Write;

use serde::Serialize;

use crate::engine::Trajectory;
use crate::error::Result;
use crate::moduli::{LiminfModulus, Nat, RateFn};

/// Tolerance of the rate and liminf contracts.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    /// `‖x_n - Tx_n‖`
    #[serde(rename = "res_T")]
    ResT,
    /// `‖x_{n+1} - x_n‖`
    #[serde(rename = "res_step")]
    ResStep,
}

impl Quantity {
    pub fn values<'a>(&self, t: &'a Trajectory) -> &'a [f64] {
        match self {
            Quantity::ResT => &t.res_t,
            Quantity::ResStep => &t.res_step,
        }
    }
}

fn threshold(k: Nat) -> f64 {
    1.0 / (k as f64 + 1.0)
}

/// `suffix[n] = max_{m ≥ n} values[m]`; nonincreasing in `n`.
fn suffix_max(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

fn first_index_from_suffix(suffix: &[f64], k: Nat) -> Option<u64> {
    let lim = threshold(k) + VERIFY_TOL;
    let n = suffix.partition_point(|&v| v > lim);
    (n < suffix.len()).then_some(n as u64)
}

/// Least `n` with `values[m] ≤ 1/(k+1) + 1e-9` for every recorded `m ≥ n`.
pub fn empirical_first_index(values: &[f64], k: Nat) -> Option<u64> {
    first_index_from_suffix(&suffix_max(values), k)
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessRow {
    pub k: Nat,
    pub bound: Nat,
    /// `[bound, last recorded index]`, absent when truncated.
    pub window: Option<(u64, u64)>,
    pub max_excess: Option<f64>,
    pub pass: Option<bool>,
    pub empirical_first_index: Option<u64>,
    pub truncated: bool,
    /// `bound / max(1, empirical_first_index)`.
    pub slack_factor: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    pub quantity: Quantity,
    pub rate: String,
    pub horizon: u64,
    pub tolerance: f64,
    pub rows: Vec<SoundnessRow>,
}

impl SoundnessReport {
    /// No checked row failed.
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> Vec<&SoundnessRow> {
        self.rows.iter().filter(|r| r.pass == Some(false)).collect()
    }

    pub fn checked(&self) -> usize {
        self.rows.iter().filter(|r| !r.truncated).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,bound,empirical_first_index,max_excess,pass,truncated")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.k,
                r.bound,
                r.empirical_first_index
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                r.max_excess
                    .map(|v| format!("{v:.16e}"))
                    .unwrap_or_default(),
                r.pass.map(|v| v.to_string()).unwrap_or_default(),
                r.truncated
            )?;
        }
        w.flush()
    }
}

/// Checks `values[n] ≤ 1/(k+1)` for `n ∈ [rate(k), last]`, `k ≤ k_max`.
pub fn check_rate_soundness_values(
    values: &[f64],
    rate: &RateFn,
    quantity: Quantity,
    k_max: Nat,
) -> Result<SoundnessReport> {
    let suffix = suffix_max(values);
    let last = values.len() as u64 - 1;
    let mut rows = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let bound = rate.eval(k)?;
        let efi = first_index_from_suffix(&suffix, k);
        let slack = efi.map(|e| bound as f64 / (e.max(1) as f64));
        let row = if bound > Nat::from(last) {
            SoundnessRow {
                k,
                bound,
                window: None,
                max_excess: None,
                pass: None,
                empirical_first_index: efi,
                truncated: true,
                slack_factor: slack,
            }
        } else {
            let excess = suffix[bound as usize] - threshold(k);
            SoundnessRow {
                k,
                bound,
                window: Some((bound as u64, last)),
                max_excess: Some(excess),
                pass: Some(excess <= VERIFY_TOL),
                empirical_first_index: efi,
                truncated: false,
                slack_factor: slack,
            }
        };
        rows.push(row);
    }
    Ok(SoundnessReport {
        quantity,
        rate: rate.description().to_string(),
        horizon: last,
        tolerance: VERIFY_TOL,
        rows,
    })
}

pub fn check_rate_soundness(
    t: &Trajectory,
    rate: &RateFn,
    quantity: Quantity,
    k_max: Nat,
) -> Result<SoundnessReport> {
    let mut r = check_rate_soundness_values(quantity.values(t), rate, quantity, k_max)?;
    r.horizon = t.horizon;
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct LiminfCell {
    pub k: Nat,
    pub l: Nat,
    pub bound: Nat,
    /// Least `N ∈ [L, min(bound, last)]` with `a_N < 1/(k+1) + 1e-9`.
    pub witness: Option<u64>,
    pub pass: Option<bool>,
    /// No witness in the recorded part of a window reaching past the horizon.
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiminfReport {
    pub modulus: String,
    pub horizon: u64,
    pub tolerance: f64,
    pub cells: Vec<LiminfCell>,
}

impl LiminfReport {
    pub fn pass(&self) -> bool {
        self.cells.iter().all(|c| c.pass != Some(false))
    }

    pub fn violations(&self) -> Vec<&LiminfCell> {
        self.cells
            .iter()
            .filter(|c| c.pass == Some(false))
            .collect()
    }

    pub fn truncated(&self) -> usize {
        self.cells.iter().filter(|c| c.truncated).count()
    }
}

/// Checks that every window `[L, Δ(k, L)]` contains an index `N` with
/// `values[N] < 1/(k+1)`, for `k ≤ k_max`, `L ≤ l_max`.
pub fn check_liminf_contract_values(
    values: &[f64],
    lim: &LiminfModulus,
    k_max: Nat,
    l_max: Nat,
) -> Result<LiminfReport> {
    let last = values.len() as u64 - 1;
    let mut cells = Vec::new();
    for k in 0..=k_max {
        let lim_k = threshold(k) + VERIFY_TOL;
        // next_below[i] = least N ≥ i with values[N] below the threshold
        let mut next_below = vec![u64::MAX; values.len() + 1];
        for i in (0..values.len()).rev() {
            next_below[i] = if values[i] < lim_k {
                i as u64
            } else {
                next_below[i + 1]
            };
        }
        for l in 0..=l_max {
            let bound = lim.eval(k, l)?;
            let start = l.min(Nat::from(last) + 1) as usize;
            let cand = next_below[start];
            let in_window = cand != u64::MAX && Nat::from(cand) <= bound;
            let witness = in_window.then_some(cand);
            let (pass, truncated) = if witness.is_some() {
                (Some(true), false)
            } else if bound > Nat::from(last) {
                (None, true)
            } else {
                (Some(false), false)
            };
            cells.push(LiminfCell {
                k,
                l,
                bound,
                witness,
                pass,
                truncated,
            });
        }
    }
    Ok(LiminfReport {
        modulus: lim.description().to_string(),
        horizon: last,
        tolerance: VERIFY_TOL,
        cells,
    })
}

pub fn check_liminf_contract(
    t: &Trajectory,
    lim: &LiminfModulus,
    k_max: Nat,
    l_max: Nat,
) -> Result<LiminfReport> {
    check_liminf_contract_values(&t.res_t, lim, k_max, l_max)
}
