//! Finite-horizon diagnostics for equicontinuity and stability.
//!
//! The operator-level notions under study are limits over an infinite time
//! axis and over states approaching a target, neither of which a numerical
//! run can exhaust. These diagnostics replace them by auditable finite
//! proxies: a ladder of probe states at strictly decreasing distances from
//! the target, a tail window `[N0, N]` of iterate indices, and per-probe
//! tail-sup gaps. Verdicts are horizon-relative: a failure verdict is
//! rigorous (the gap is realized at explicit finite times), while a holding
//! verdict only certifies behavior up to the horizon and is labelled
//! accordingly.
//!
//! Included here: pointwise dual-iterate gaps ([`eproperty_profile`]),
//! Cesàro-averaged gaps ([`cesaro_profile`]), flat-metric convergence
//! traces toward the invariant measure ([`stability_trace`]), windowed
//! lower proxies of asymptotic ball masses ([`liminf_ball_mass`]), a search
//! for a ball inside the invariant support on which dual iterates
//! eventually oscillate below a given level ([`find_lemma_ball`]), and a
//! verdict-free table of kernel-row flat distances along a probe ladder
//! ([`kernel_continuity_table`]).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::flatmetric::{flat_distance, FlatMetricError};
use crate::measure::DiscreteMeasure;
use crate::operator::{apply_rows, dual_apply_raw, Observable};
use crate::space::{Ball, MetricModel, ModelError, StateId};

/// Default verdict tolerance: gaps at or below this are treated as closed.
pub const DEFAULT_VERDICT_TOL: f64 = 1e-6;

/// Errors from diagnostic runs.
#[derive(Clone, Debug, PartialEq)]
pub enum DiagnosticsError {
    /// The probe plan or a parameter is malformed.
    BadPlan {
        /// What is wrong.
        reason: String,
    },
    /// A model-level failure (bad id, missing invariant measure, ...).
    Model(ModelError),
    /// A flat-metric solve failed.
    Flat(FlatMetricError),
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::BadPlan { reason } => write!(f, "bad probe plan: {reason}"),
            DiagnosticsError::Model(e) => write!(f, "{e}"),
            DiagnosticsError::Flat(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DiagnosticsError {}

impl From<ModelError> for DiagnosticsError {
    fn from(e: ModelError) -> Self {
        DiagnosticsError::Model(e)
    }
}

impl From<FlatMetricError> for DiagnosticsError {
    fn from(e: FlatMetricError) -> Self {
        DiagnosticsError::Flat(e)
    }
}

/// A probe ladder with a time window.
///
/// Probes approach the target at strictly decreasing distances; gaps are
/// tail-sups over iterate indices `tail_start..=horizon`.
#[derive(Clone, Debug)]
pub struct ProbePlan {
    /// The state the probes approach.
    pub target: StateId,
    /// Probe states, ordered by strictly decreasing distance to the target.
    pub probes: Vec<StateId>,
    /// Largest iterate index examined (`N`).
    pub horizon: usize,
    /// First iterate index counted in tail statistics (`N0`), at least 1.
    pub tail_start: usize,
}

impl ProbePlan {
    /// Validates the plan against a model.
    pub fn validate(&self, model: &MetricModel) -> Result<(), DiagnosticsError> {
        model.try_state(self.target)?;
        if self.probes.is_empty() {
            return Err(DiagnosticsError::BadPlan { reason: String::from("no probes") });
        }
        if self.tail_start < 1 || self.tail_start > self.horizon {
            return Err(DiagnosticsError::BadPlan {
                reason: format!(
                    "tail window needs 1 <= tail_start <= horizon, got tail_start={} horizon={}",
                    self.tail_start, self.horizon
                ),
            });
        }
        let mut prev: Option<f64> = None;
        for &p in &self.probes {
            let d = model.try_distance(p, self.target)?;
            if let Some(dp) = prev {
                if d >= dp {
                    return Err(DiagnosticsError::BadPlan {
                        reason: format!(
                            "probe distances must strictly decrease toward the target \
                             ({dp} then {d})"
                        ),
                    });
                }
            }
            prev = Some(d);
        }
        Ok(())
    }
}

/// One probe's result: its distance to the target and its tail-sup gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportRow {
    /// The probe state.
    pub probe: StateId,
    /// Distance from the probe to the target.
    pub distance: f64,
    /// Tail-sup gap observed at this probe.
    pub gap: f64,
}

/// Horizon-relative verdict over a probe ladder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    /// Every probe, however close, keeps a gap above tolerance; the field
    /// is the floor the gaps never go below.
    Fails {
        /// Smallest gap over the ladder.
        gap_floor: f64,
    },
    /// The closest quarter of the ladder is within tolerance at this
    /// horizon; the field is the largest gap in that quarter.
    HoldsAtHorizon {
        /// Largest gap among the closest probes.
        tail_gap: f64,
    },
    /// Mixed evidence: some probe is within tolerance but the closest
    /// quarter is not uniformly so.
    Inconclusive {
        /// Smallest gap over the ladder.
        gap_floor: f64,
    },
}

impl Verdict {
    /// Stable machine-readable tag.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Fails { .. } => "FAILS",
            Verdict::HoldsAtHorizon { .. } => "HOLDS-AT-HORIZON",
            Verdict::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }

    /// The headline gap value the verdict carries.
    pub fn gap(&self) -> f64 {
        match self {
            Verdict::Fails { gap_floor } => *gap_floor,
            Verdict::HoldsAtHorizon { tail_gap } => *tail_gap,
            Verdict::Inconclusive { gap_floor } => *gap_floor,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.label(), self.gap())
    }
}

/// A finished diagnostic run: parameters, per-probe rows, verdict.
#[derive(Clone, Debug)]
pub struct DiagnosticReport {
    /// Which profile produced this report.
    pub profile: &'static str,
    /// The target state.
    pub target: StateId,
    /// Largest iterate index examined.
    pub horizon: usize,
    /// First iterate index counted.
    pub tail_start: usize,
    /// Verdict tolerance used.
    pub tol: f64,
    /// Per-probe results, ordered by decreasing distance.
    pub rows: Vec<ReportRow>,
    /// Horizon-relative verdict.
    pub verdict: Verdict,
}

fn verdict_from_rows(rows: &[ReportRow], tol: f64) -> Verdict {
    let gap_floor = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    if gap_floor > tol {
        return Verdict::Fails { gap_floor };
    }
    let tail_len = rows.len().div_ceil(4);
    let tail_gap =
        rows[rows.len() - tail_len..].iter().map(|r| r.gap).fold(0.0f64, f64::max);
    if tail_gap <= tol {
        Verdict::HoldsAtHorizon { tail_gap }
    } else {
        Verdict::Inconclusive { gap_floor }
    }
}

fn sweep_profile(
    model: &MetricModel,
    f: &Observable,
    plan: &ProbePlan,
    tol: f64,
    cesaro: bool,
) -> Result<DiagnosticReport, DiagnosticsError> {
    plan.validate(model)?;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(DiagnosticsError::BadPlan {
            reason: format!("tolerance must be finite and nonnegative, got {tol}"),
        });
    }
    if f.values().len() != model.num_states() {
        return Err(DiagnosticsError::BadPlan {
            reason: String::from("observable does not match the model's state count"),
        });
    }

    let zi = plan.target.index();
    let mut values = f.values().to_vec();
    let mut sums = alloc::vec![0.0f64; values.len()];
    let mut gaps = alloc::vec![0.0f64; plan.probes.len()];
    for n in 1..=plan.horizon {
        values = dual_apply_raw(model.kernel_rows(), &values);
        if cesaro {
            for (s, v) in sums.iter_mut().zip(values.iter()) {
                *s += v;
            }
        }
        if n >= plan.tail_start {
            let inv_n = 1.0 / n as f64;
            for (g, p) in gaps.iter_mut().zip(plan.probes.iter()) {
                let gap = if cesaro {
                    ((sums[p.index()] - sums[zi]) * inv_n).abs()
                } else {
                    (values[p.index()] - values[zi]).abs()
                };
                if gap > *g {
                    *g = gap;
                }
            }
        }
    }

    let rows: Vec<ReportRow> = plan
        .probes
        .iter()
        .zip(gaps.iter())
        .map(|(&p, &gap)| {
            let distance = model.distance(p, plan.target);
            assert!(
                gap >= 0.0 && gap <= 2.0 * f.sup_bound() + 1e-9,
                "gap {gap} escapes [0, 2*sup] at probe {p}"
            );
            ReportRow { probe: p, distance, gap }
        })
        .collect();
    let verdict = verdict_from_rows(&rows, tol);
    Ok(DiagnosticReport {
        profile: if cesaro { "cesaro" } else { "eproperty" },
        target: plan.target,
        horizon: plan.horizon,
        tail_start: plan.tail_start,
        tol,
        rows,
        verdict,
    })
}

/// Tail-sup gaps of dual iterates along a probe ladder:
/// `gap(x) = max_{N0 <= n <= N} |(U^n f)(x) - (U^n f)(z)|`.
pub fn eproperty_profile(
    model: &MetricModel,
    f: &Observable,
    plan: &ProbePlan,
    tol: f64,
) -> Result<DiagnosticReport, DiagnosticsError> {
    sweep_profile(model, f, plan, tol, false)
}

/// Tail-sup gaps of Cesàro means of dual iterates along a probe ladder:
/// `gap(x) = max_{N0 <= n <= N} |(A_n f)(x) - (A_n f)(z)|` with
/// `A_n = (U^1 + ... + U^n)/n`.
pub fn cesaro_profile(
    model: &MetricModel,
    f: &Observable,
    plan: &ProbePlan,
    tol: f64,
) -> Result<DiagnosticReport, DiagnosticsError> {
    sweep_profile(model, f, plan, tol, true)
}

/// Flat distances `(n, flat(P^n mu, mu*))` for `n = 0..=n_max`.
///
/// Requires the model to carry its invariant measure.
pub fn stability_trace(
    model: &MetricModel,
    mu: &DiscreteMeasure<f64>,
    n_max: usize,
) -> Result<Vec<(usize, f64)>, DiagnosticsError> {
    let target = model.require_invariant()?.clone();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut current = mu.clone();
    for n in 0..=n_max {
        if n > 0 {
            current = apply_rows(model.kernel_rows(), &current, model.num_states());
        }
        out.push((n, flat_distance(model, &current, &target)?.value));
    }
    Ok(out)
}

/// Smallest mass the pushed-forward measure gives the ball over a window:
/// `min_{n_lo <= n <= n_hi} (P^n mu)(B)` — a finite-window lower proxy for
/// the asymptotic ball mass.
///
/// # Panics
///
/// Panics if `n_lo > n_hi`.
pub fn liminf_ball_mass(
    model: &MetricModel,
    mu: &DiscreteMeasure<f64>,
    ball: Ball,
    n_range: (usize, usize),
) -> f64 {
    let (n_lo, n_hi) = n_range;
    assert!(n_lo <= n_hi, "window must satisfy n_lo <= n_hi, got ({n_lo}, {n_hi})");
    let member: Vec<bool> =
        model.state_ids().map(|s| ball.contains(model, s)).collect();
    let mut current = mu.clone();
    let mut best = f64::INFINITY;
    for n in 0..=n_hi {
        if n > 0 {
            current = apply_rows(model.kernel_rows(), &current, model.num_states());
        }
        if n >= n_lo {
            let mass = current.mass_where(|s| member[s.index()]);
            if mass < best {
                best = mass;
            }
        }
    }
    best
}

/// A ball on which dual iterates stay uniformly close from some time on.
#[derive(Clone, Debug)]
pub struct LemmaBall {
    /// The qualifying ball.
    pub ball: Ball,
    /// Smallest `N` such that oscillations stay at or below the level for
    /// all examined `n >= N`.
    pub stable_from: usize,
    /// The realized oscillation level over `n >= stable_from` (at most the
    /// requested level).
    pub osc_level: f64,
}

/// Result of [`find_lemma_ball`]: the first qualifying ball if any, plus
/// notes about skipped candidates.
#[derive(Clone, Debug)]
pub struct LemmaBallSearch {
    /// First qualifying candidate, in candidate order.
    pub found: Option<LemmaBall>,
    /// One note per skipped candidate.
    pub notes: Vec<String>,
}

/// Searches candidate balls inside the support of the invariant measure for
/// one whose dual-iterate oscillation `max_{x,y in B} |(U^n f)(x) -
/// (U^n f)(y)|` stays at or below `eps` for all `n` from some `N <= n_max`
/// on.
///
/// Candidates whose member states are not all inside the invariant support
/// are skipped with a note. Returns the first qualifying candidate with the
/// smallest such `N`.
pub fn find_lemma_ball(
    model: &MetricModel,
    f: &Observable,
    eps: f64,
    candidates: &[Ball],
    n_max: usize,
) -> Result<LemmaBallSearch, DiagnosticsError> {
    let invariant = model.require_invariant()?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(DiagnosticsError::BadPlan {
            reason: format!("oscillation level must be finite and positive, got {eps}"),
        });
    }
    if n_max < 1 {
        return Err(DiagnosticsError::BadPlan {
            reason: String::from("search horizon must be at least 1"),
        });
    }
    let mut in_support = alloc::vec![false; model.num_states()];
    for s in invariant.support() {
        in_support[s.index()] = true;
    }

    let mut notes = Vec::new();
    let mut kept: Vec<(usize, Vec<StateId>)> = Vec::new();
    for (idx, ball) in candidates.iter().enumerate() {
        model.try_state(ball.center)?;
        let members = model.ball_members(*ball);
        if members.iter().all(|s| in_support[s.index()]) {
            kept.push((idx, members));
        } else {
            notes.push(format!(
                "ball(center={}, radius={}) skipped: members leave the invariant support",
                ball.center, ball.radius
            ));
        }
    }

    // One dual sweep; record each kept candidate's oscillation at every n.
    let mut osc: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(n_max); kept.len()];
    let mut values = f.values().to_vec();
    for _ in 1..=n_max {
        values = dual_apply_raw(model.kernel_rows(), &values);
        for ((_, members), series) in kept.iter().zip(osc.iter_mut()) {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in members {
                let v = values[s.index()];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            series.push(hi - lo);
        }
    }

    for ((idx, _), series) in kept.iter().zip(osc.iter()) {
        // Suffix maxima: stable_from is the first n whose entire tail stays
        // at or below eps.
        let mut suffix = alloc::vec![0.0f64; series.len()];
        let mut run = f64::NEG_INFINITY;
        for n in (0..series.len()).rev() {
            run = run.max(series[n]);
            suffix[n] = run;
        }
        if let Some(pos) = suffix.iter().position(|&s| s <= eps) {
            return Ok(LemmaBallSearch {
                found: Some(LemmaBall {
                    ball: candidates[*idx],
                    stable_from: pos + 1,
                    osc_level: suffix[pos],
                }),
                notes,
            });
        }
    }
    Ok(LemmaBallSearch { found: None, notes })
}

/// Default candidate balls: centered at each invariant-support atom, with
/// radii at midpoints between consecutive realized distances plus one
/// radius beyond the largest distance (the enclosing ball).
///
/// The smallest midpoint — the one that would isolate the center alone —
/// is omitted: on truncations of infinite spaces a singleton ball is an
/// artifact of the truncation, not a ball of the underlying space.
pub fn default_candidate_balls(model: &MetricModel) -> Result<Vec<Ball>, DiagnosticsError> {
    let invariant = model.require_invariant()?;
    let mut out = Vec::new();
    for center in invariant.support() {
        let mut ds: Vec<f64> =
            model.state_ids().map(|s| model.distance(s, center)).collect();
        ds.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        ds.dedup();
        for w in ds.windows(2).skip(1) {
            out.push(Ball::new(center, 0.5 * (w[0] + w[1])));
        }
        if let Some(&dmax) = ds.last() {
            out.push(Ball::new(center, dmax + 1.0));
        }
    }
    Ok(out)
}

/// Flat distances between kernel rows along a probe ladder: row `x` of the
/// table is `(x, d(x, z), flat(P(x, .), P(z, .)))`. A small distance column
/// paired with a small flat column is evidence of kernel continuity near
/// `z`; no verdict is attached.
pub fn kernel_continuity_table(
    model: &MetricModel,
    target: StateId,
    probes: &[StateId],
) -> Result<Vec<ReportRow>, DiagnosticsError> {
    model.try_state(target)?;
    let mut rows = Vec::with_capacity(probes.len());
    for &p in probes {
        model.try_state(p)?;
        let sol = flat_distance(model, model.kernel_row(p), model.kernel_row(target))?;
        rows.push(ReportRow {
            probe: p,
            distance: model.distance(p, target),
            gap: sol.value,
        });
    }
    Ok(rows)
}
