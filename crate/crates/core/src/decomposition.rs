//! Inductive two-sequence measure decompositions and their verification.
//!
//! Starting from a point mass at `x0`, the construction repeatedly advances
//! the current measure until a target ball `B(z, r)` captures more than a
//! fraction `alpha` of its mass, splits off the ball-conditioned part, and
//! renormalizes the remainder:
//!
//! * `n_i` — the smallest step count at which the advanced measure gives
//!   `B(z, r)` mass strictly above `alpha`;
//! * `r_i` — a radius strictly between realized atom distances (so the
//!   sphere of radius `r_i` carries exactly zero mass) at which the
//!   captured mass still exceeds `alpha`;
//! * `nu_i` — the advanced measure conditioned on `B(z, r_i)`;
//! * `mu_i` — the residual `(advanced - alpha*nu_i) / (1 - alpha)`.
//!
//! Unrolling the recursion yields an exact algebraic identity: the measure
//! advanced by `n_1 + ... + n_k` steps equals the mixture of the `nu_i`
//! advanced by the remaining steps, with geometric coefficients
//! `alpha*(1-alpha)^(i-1)`, plus `(1-alpha)^k` times the final residual.
//! [`verify_telescoping`] recomputes both sides independently and reports
//! the largest atomwise deviation — exactly zero in rational arithmetic,
//! tiny in floating point. [`continuity_scan`] replays the construction
//! from probe states with the `(n_i, r_i)` schedule held fixed and measures
//! how far the probe's split measures drift from the base ones, and
//! [`check_contradiction_bound`] combines those drifts with a ball
//! oscillation level into an explicit upper bound that measured gaps must
//! respect wherever the construction's hypotheses hold.
//!
//! All arithmetic is generic over the weight type: floating point for
//! speed, arbitrary-precision rationals for bit-exact verification. Ball
//! membership is always decided on `f64` distances; lifting weights is
//! order-preserving, so both modes see the same geometry.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::diagnostics::{
    default_candidate_balls, eproperty_profile, find_lemma_ball, liminf_ball_mass,
    DiagnosticsError, ProbePlan,
};
use crate::flatmetric::{flat_distance, FlatMetricError};
use crate::measure::DiscreteMeasure;
use crate::operator::{apply_rows, Observable};
use crate::space::{Ball, MetricModel, ModelError, StateId};
use crate::weight::Weight;

/// Errors from the decomposition pipeline.
#[derive(Clone, Debug, PartialEq)]
pub enum DecompositionError {
    /// A model-level failure (bad id, missing invariant measure, ...).
    Model(ModelError),
    /// A flat-metric solve failed during a continuity scan.
    Flat(FlatMetricError),
    /// A diagnostic step (probe plan, ball search) failed.
    Diagnostics(DiagnosticsError),
    /// A configuration field is out of its domain.
    BadConfig {
        /// What is wrong.
        reason: String,
    },
    /// `alpha` does not lie strictly between 0 and the invariant ball mass.
    AlphaOutOfRange {
        /// Requested mass fraction.
        alpha: f64,
        /// Invariant mass of the target ball.
        gamma: f64,
    },
    /// The windowed lower proxy of the ball mass does not exceed `alpha`,
    /// so the level searches are not justified.
    LiminfBelowAlpha {
        /// Windowed minimum of the pushed-forward ball mass.
        proxy: f64,
        /// Requested mass fraction.
        alpha: f64,
    },
    /// No step count within the search horizon pushed enough mass into the
    /// ball.
    SearchHorizon {
        /// Level (1-based) at which the search ran out.
        level: usize,
        /// The horizon that was exhausted.
        horizon: usize,
    },
    /// No radius strictly between realized distances could be placed
    /// (adjacent realized distances collide in floating point).
    RadiusSeparation {
        /// Level (1-based) at which the selection failed.
        level: usize,
    },
    /// A residual measure came out negative beyond rounding dust.
    ResidualNegative {
        /// Level (1-based) of the offending residual.
        level: usize,
        /// State carrying the negative weight.
        state: usize,
        /// The offending weight.
        value: f64,
    },
}

impl fmt::Display for DecompositionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecompositionError::Model(e) => write!(f, "{e}"),
            DecompositionError::Flat(e) => write!(f, "{e}"),
            DecompositionError::Diagnostics(e) => write!(f, "{e}"),
            DecompositionError::BadConfig { reason } => write!(f, "bad configuration: {reason}"),
            DecompositionError::AlphaOutOfRange { alpha, gamma } => write!(
                f,
                "alpha must lie strictly between 0 and the invariant ball mass gamma \
                 (choose alpha in (0, gamma)): alpha={alpha}, gamma={gamma}"
            ),
            DecompositionError::LiminfBelowAlpha { proxy, alpha } => write!(
                f,
                "windowed ball-mass proxy {proxy} does not exceed alpha={alpha}; \
                 the level searches are not justified from this start"
            ),
            DecompositionError::SearchHorizon { level, horizon } => write!(
                f,
                "no step count up to {horizon} pushes ball mass above alpha at level {level}"
            ),
            DecompositionError::RadiusSeparation { level } => write!(
                f,
                "realized distances at level {level} are too close to separate by a radius"
            ),
            DecompositionError::ResidualNegative { level, state, value } => write!(
                f,
                "residual at level {level} is negative at state {state} (weight {value})"
            ),
        }
    }
}

impl core::error::Error for DecompositionError {}

impl From<ModelError> for DecompositionError {
    fn from(e: ModelError) -> Self {
        DecompositionError::Model(e)
    }
}

impl From<FlatMetricError> for DecompositionError {
    fn from(e: FlatMetricError) -> Self {
        DecompositionError::Flat(e)
    }
}

impl From<DiagnosticsError> for DecompositionError {
    fn from(e: DiagnosticsError) -> Self {
        DecompositionError::Diagnostics(e)
    }
}

/// Parameters of a decomposition run.
#[derive(Clone, Copy, Debug)]
pub struct DecompositionConfig {
    /// Starting state (the construction decomposes iterates of its point
    /// mass).
    pub x0: StateId,
    /// Center of the target ball.
    pub z: StateId,
    /// Radius of the target ball.
    pub r: f64,
    /// Mass fraction split off per level; must lie in `(0, gamma)` where
    /// `gamma` is the invariant mass of the target ball.
    pub alpha: f64,
    /// Number of levels.
    pub k: usize,
    /// Per-level search horizon for the step counts `n_i`.
    pub n_search: usize,
    /// Accuracy goal driving the `k`-selection rule and the ball search.
    pub epsilon: f64,
}

impl DecompositionConfig {
    /// Validates the configuration on a model and returns the invariant
    /// mass `gamma` of the target ball.
    pub fn validate(&self, model: &MetricModel) -> Result<f64, DecompositionError> {
        model.try_state(self.x0)?;
        model.try_state(self.z)?;
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(DecompositionError::BadConfig {
                reason: format!("ball radius must be finite and positive, got {}", self.r),
            });
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DecompositionError::BadConfig {
                reason: format!("alpha must lie in (0, 1), got {}", self.alpha),
            });
        }
        if self.k < 1 {
            return Err(DecompositionError::BadConfig {
                reason: String::from("at least one level is required"),
            });
        }
        if self.n_search < 1 {
            return Err(DecompositionError::BadConfig {
                reason: String::from("search horizon must be at least 1"),
            });
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(DecompositionError::BadConfig {
                reason: format!("epsilon must be finite and positive, got {}", self.epsilon),
            });
        }
        let invariant = model.require_invariant()?;
        let ball = Ball::new(self.z, self.r);
        let gamma = invariant.mass_where(|s| ball.contains(model, s));
        if gamma <= 0.0 {
            return Err(DecompositionError::BadConfig {
                reason: format!(
                    "target ball around state {} with radius {} carries no invariant mass",
                    self.z, self.r
                ),
            });
        }
        if self.alpha >= gamma {
            return Err(DecompositionError::AlphaOutOfRange { alpha: self.alpha, gamma });
        }
        Ok(gamma)
    }
}

/// One level of a decomposition: step count, separating radius, the
/// ball-conditioned part, and the renormalized residual.
#[derive(Clone, Debug)]
pub struct DecompositionLevel<W: Weight> {
    /// Steps advanced at this level.
    pub n: usize,
    /// Separating radius `r_i` (the sphere at this radius carries no mass).
    pub radius: f64,
    /// The advanced measure conditioned on `B(z, r_i)`; a probability
    /// measure supported strictly inside the target ball.
    pub nu: DiscreteMeasure<W>,
    /// The renormalized residual; a probability measure.
    pub mu: DiscreteMeasure<W>,
}

/// The full decomposition: one entry per level.
#[derive(Clone, Debug)]
pub struct DecompositionTree<W: Weight> {
    /// Levels in construction order.
    pub levels: Vec<DecompositionLevel<W>>,
}

impl<W: Weight> DecompositionTree<W> {
    /// Total number of steps advanced across all levels.
    pub fn total_steps(&self) -> usize {
        self.levels.iter().map(|l| l.n).sum()
    }
}

/// The smallest `k >= 1` with `2 * (1 - alpha)^k * sup_bound < eps`.
///
/// # Panics
///
/// Panics unless `0 < alpha < 1` and `eps > 0`, or if `alpha` is so small
/// that `1 - alpha` rounds to 1 (no floating-point progress is possible).
pub fn choose_k(alpha: f64, sup_bound: f64, eps: f64) -> usize {
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "mass fraction must lie in (0, 1), got {alpha}"
    );
    assert!(eps > 0.0, "accuracy goal must be positive, got {eps}");
    assert!(sup_bound >= 0.0, "sup bound must be nonnegative, got {sup_bound}");
    let q = 1.0 - alpha;
    assert!(q < 1.0, "alpha={alpha} is too small to make floating-point progress");
    let mut factor = q;
    let mut k = 1usize;
    while 2.0 * factor * sup_bound >= eps {
        factor *= q;
        k += 1;
    }
    k
}

fn pow_usize(base: f64, exp: usize) -> f64 {
    let mut acc = 1.0f64;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

fn pow_weight<W: Weight>(base: &W, exp: usize) -> W {
    let mut acc = W::one();
    for _ in 0..exp {
        acc = acc * base.clone();
    }
    acc
}

fn advance<W: Weight>(
    rows: &[DiscreteMeasure<W>],
    mut mu: DiscreteMeasure<W>,
    steps: usize,
    num_states: usize,
) -> DiscreteMeasure<W> {
    for _ in 0..steps {
        mu = apply_rows(rows, &mu, num_states);
    }
    mu
}

struct LevelSplit<W: Weight> {
    n: usize,
    radius: f64,
    advanced: DiscreteMeasure<W>,
    nu: DiscreteMeasure<W>,
}

/// Advances `mu` until the base ball captures mass above `alpha`, then
/// selects the separating radius and the conditioned part. Shared by the
/// base construction and the probe replays (which pin `n` instead of
/// searching).
fn split_level<W: Weight>(
    rows: &[DiscreteMeasure<W>],
    dz: &[f64],
    r: f64,
    alpha_w: &W,
    mu: &DiscreteMeasure<W>,
    fixed_n: Option<usize>,
    n_search: usize,
    level: usize,
) -> Result<Option<LevelSplit<W>>, DecompositionError> {
    let num_states = dz.len();
    let (n, advanced) = match fixed_n {
        Some(n) => {
            let advanced = advance(rows, mu.clone(), n, num_states);
            let mass = advanced.mass_where(|s| dz[s.index()] < r);
            if !(mass > *alpha_w) {
                return Ok(None);
            }
            (n, advanced)
        }
        None => {
            let mut current = mu.clone();
            let mut found = None;
            for n in 1..=n_search {
                current = apply_rows(rows, &current, num_states);
                let mass = current.mass_where(|s| dz[s.index()] < r);
                if mass > *alpha_w {
                    found = Some(n);
                    break;
                }
            }
            match found {
                Some(n) => (n, current),
                None => {
                    return Err(DecompositionError::SearchHorizon {
                        level,
                        horizon: n_search,
                    })
                }
            }
        }
    };

    // Distinct realized distances inside the base ball, each with its
    // accumulated mass; the separating radius goes through the first gap
    // after the accumulated mass exceeds alpha.
    let mut in_ball: Vec<(f64, W)> = advanced
        .atoms()
        .iter()
        .filter(|(s, _)| dz[s.index()] < r)
        .map(|(s, w)| (dz[s.index()], w.clone()))
        .collect();
    in_ball.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("distances are finite"));
    let mut grouped: Vec<(f64, W)> = Vec::with_capacity(in_ball.len());
    for (d, w) in in_ball {
        match grouped.last_mut() {
            Some((last, acc)) if *last == d => *acc = acc.clone() + w,
            _ => grouped.push((d, w)),
        }
    }
    let mut cumulative = W::zero();
    let mut threshold_idx = None;
    for (idx, (_, w)) in grouped.iter().enumerate() {
        cumulative = cumulative + w.clone();
        if cumulative > *alpha_w {
            threshold_idx = Some(idx);
            break;
        }
    }
    let t = threshold_idx.expect("ball mass exceeds alpha, so the cumulative sum crosses it");
    let d_t = grouped[t].0;
    let next = grouped.get(t + 1).map(|(d, _)| *d).unwrap_or(r);
    let radius = 0.5 * (d_t + next);
    if !(radius > d_t && radius < next) {
        return Err(DecompositionError::RadiusSeparation { level });
    }

    let nu = advanced
        .restrict_normalize(|s| dz[s.index()] < radius)
        .expect("mass inside the separating radius exceeds alpha > 0");
    Ok(Some(LevelSplit { n, radius, advanced, nu }))
}

fn residual<W: Weight>(
    advanced: &DiscreteMeasure<W>,
    nu: &DiscreteMeasure<W>,
    alpha_w: &W,
    level: usize,
) -> Result<DiscreteMeasure<W>, DecompositionError> {
    let one_minus = W::one() - alpha_w.clone();
    let resid = advanced
        .sub(&nu.scale(alpha_w))
        .map_weights(|w| w.clone() / one_minus.clone());
    for (s, w) in resid.atoms() {
        if *w < W::zero() {
            return Err(DecompositionError::ResidualNegative {
                level,
                state: s.index(),
                value: w.to_f64(),
            });
        }
    }
    Ok(resid)
}

/// Runs the full construction from `cfg.x0`.
///
/// The windowed ball-mass proxy over the second half of the search horizon
/// must exceed `alpha` before any level is attempted; each level then
/// searches for its `n_i`, places its separating radius, and splits. See
/// the module docs for the level rules.
pub fn decompose<W: Weight>(
    model: &MetricModel,
    cfg: &DecompositionConfig,
) -> Result<DecompositionTree<W>, DecompositionError> {
    cfg.validate(model)?;
    let ball = Ball::new(cfg.z, cfg.r);
    let window = (cfg.n_search.div_ceil(2), cfg.n_search);
    let proxy = liminf_ball_mass(
        model,
        &DiscreteMeasure::dirac(cfg.x0),
        ball,
        window,
    );
    if proxy <= cfg.alpha {
        return Err(DecompositionError::LiminfBelowAlpha { proxy, alpha: cfg.alpha });
    }

    let rows: Vec<DiscreteMeasure<W>> =
        model.kernel_rows().iter().map(|row| row.lift()).collect();
    let dz: Vec<f64> = model.state_ids().map(|s| model.distance(s, cfg.z)).collect();
    let alpha_w = W::from_f64(cfg.alpha);

    let mut mu: DiscreteMeasure<W> = DiscreteMeasure::dirac(cfg.x0);
    let mut levels = Vec::with_capacity(cfg.k);
    for level in 1..=cfg.k {
        let split = split_level(&rows, &dz, cfg.r, &alpha_w, &mu, None, cfg.n_search, level)?
            .expect("searched split always reports a step count or errors");
        let mu_next = residual(&split.advanced, &split.nu, &alpha_w, level)?;
        levels.push(DecompositionLevel {
            n: split.n,
            radius: split.radius,
            nu: split.nu,
            mu: mu_next.clone(),
        });
        mu = mu_next;
    }
    Ok(DecompositionTree { levels })
}

/// Recomputes both sides of the unrolled identity independently and
/// returns the largest atomwise deviation.
///
/// The left side advances the point mass at `cfg.x0` by the total step
/// count; the right side mixes the per-level conditioned parts, advanced by
/// the steps that remain after their level, with geometric coefficients,
/// plus the final residual. Exact arithmetic yields exactly zero.
pub fn verify_telescoping<W: Weight>(
    model: &MetricModel,
    cfg: &DecompositionConfig,
    tree: &DecompositionTree<W>,
) -> W {
    let rows: Vec<DiscreteMeasure<W>> =
        model.kernel_rows().iter().map(|row| row.lift()).collect();
    let num_states = model.num_states();
    let alpha_w = W::from_f64(cfg.alpha);
    let one_minus = W::one() - alpha_w.clone();

    let lhs = advance(
        &rows,
        DiscreteMeasure::dirac(cfg.x0),
        tree.total_steps(),
        num_states,
    );

    let k = tree.levels.len();
    let mut rhs = DiscreteMeasure::zero_measure();
    for (i, level) in tree.levels.iter().enumerate() {
        if i > 0 {
            rhs = advance(&rows, rhs, level.n, num_states);
        }
        let coeff = alpha_w.clone() * pow_weight(&one_minus, i);
        rhs = rhs.add(&level.nu.scale(&coeff));
    }
    rhs = rhs.add(&tree.levels[k - 1].mu.scale(&pow_weight(&one_minus, k)));

    lhs.max_atom_diff(&rhs)
}

/// One row of a continuity scan: a probe's split measures at one level,
/// compared against the base construction's.
#[derive(Clone, Debug)]
pub struct ContinuityRow {
    /// The probe state.
    pub probe: StateId,
    /// Distance from the probe to the base starting state.
    pub distance: f64,
    /// Level (1-based).
    pub level: usize,
    /// Whether the pinned `(n_i, r_i)` still captured mass above `alpha`
    /// from this probe.
    pub close_enough: bool,
    /// Flat distance between the probe's conditioned part and the base
    /// one; absent when not close enough.
    pub nu_flat: Option<f64>,
    /// Flat distance between the probe's residual and the base one; absent
    /// when not close enough.
    pub mu_flat: Option<f64>,
}

/// A completed continuity scan over probe states.
#[derive(Clone, Debug)]
pub struct ContinuityScan {
    /// Rows grouped by probe (in the given probe order), then by level. A
    /// probe's rows stop at its first level that is not close enough.
    pub rows: Vec<ContinuityRow>,
}

impl ContinuityScan {
    /// Sum of all flat distances recorded for a probe, or `None` if any of
    /// its levels was not close enough (or the probe is absent).
    pub fn total_drift(&self, probe: StateId, k: usize) -> Option<f64> {
        let rows: Vec<&ContinuityRow> =
            self.rows.iter().filter(|row| row.probe == probe).collect();
        if rows.len() != k || rows.iter().any(|row| !row.close_enough) {
            return None;
        }
        let mut total = 0.0;
        for row in rows {
            total += row.nu_flat? + row.mu_flat?;
        }
        Some(total)
    }
}

/// Replays the construction from each probe with the base schedule
/// `(n_i, r_i)` pinned, and measures the flat-metric drift of the split
/// measures from the base ones, level by level.
///
/// A probe whose advanced measure fails the mass test at some level is
/// flagged there and not continued further; this realizes the construction
/// requirement that probes be close enough to the base point.
pub fn continuity_scan(
    model: &MetricModel,
    cfg: &DecompositionConfig,
    probes: &[StateId],
) -> Result<ContinuityScan, DecompositionError> {
    let base: DecompositionTree<f64> = decompose(model, cfg)?;
    let rows_f: Vec<DiscreteMeasure<f64>> = model.kernel_rows().to_vec();
    let dz: Vec<f64> = model.state_ids().map(|s| model.distance(s, cfg.z)).collect();

    let mut rows = Vec::new();
    for &probe in probes {
        model.try_state(probe)?;
        let distance = model.distance(probe, cfg.x0);
        let mut mu = DiscreteMeasure::dirac(probe);
        for (i, level) in base.levels.iter().enumerate() {
            let level_no = i + 1;
            // The probe replay pins n_i and tests capture at the base
            // separating radius r_i (a stricter ball than the base ball, so
            // the residual stays well-defined whenever the flag is set).
            let split = split_level(
                &rows_f,
                &dz,
                level.radius,
                &cfg.alpha,
                &mu,
                Some(level.n),
                cfg.n_search,
                level_no,
            )?;
            let Some(split) = split else {
                rows.push(ContinuityRow {
                    probe,
                    distance,
                    level: level_no,
                    close_enough: false,
                    nu_flat: None,
                    mu_flat: None,
                });
                break;
            };
            let mu_next = residual(&split.advanced, &split.nu, &cfg.alpha, level_no)?;
            let nu_flat = flat_distance(model, &split.nu, &level.nu)?.value;
            let mu_flat = flat_distance(model, &mu_next, &level.mu)?.value;
            rows.push(ContinuityRow {
                probe,
                distance,
                level: level_no,
                close_enough: true,
                nu_flat: Some(nu_flat),
                mu_flat: Some(mu_flat),
            });
            mu = mu_next;
        }
    }
    Ok(ContinuityScan { rows })
}

/// The closed-form oscillation bound produced by a `k`-level construction
/// whose conditioned parts live on a ball with oscillation level
/// `eps_ball`:
///
/// `eps_ball * (1 - (1-alpha)^k) + 2 * (1-alpha)^k * sup_bound(f)`.
///
/// The geometric factor is `alpha * sum_{i<k} (1-alpha)^i`, which always
/// stays below 1, so the bound never exceeds
/// `eps_ball + 2*(1-alpha)^k*sup_bound(f)`.
///
/// # Panics
///
/// Panics if `eps_ball` is negative or not finite.
pub fn oscillation_bound(cfg: &DecompositionConfig, f: &Observable, eps_ball: f64) -> f64 {
    assert!(
        eps_ball.is_finite() && eps_ball >= 0.0,
        "ball oscillation level must be finite and nonnegative, got {eps_ball}"
    );
    let qk = pow_usize(1.0 - cfg.alpha, cfg.k);
    eps_ball * (1.0 - qk) + 2.0 * qk * f.sup_bound()
}

/// One probe's entry in a contradiction-bound check.
#[derive(Clone, Debug)]
pub struct ContradictionRow {
    /// The probe state.
    pub probe: StateId,
    /// Distance from the probe to the starting state.
    pub distance: f64,
    /// Measured tail-sup gap `max_n |U^n f(probe) - U^n f(x0)|`.
    pub measured: f64,
    /// The bound the gap must respect: oscillation bound plus the probe's
    /// continuity drift scaled by `2 * sup_bound(f)`. Absent when the probe
    /// was not close enough.
    pub bound: Option<f64>,
    /// `Some(true)` = PASS, `Some(false)` = FAIL, `None` = the probe was
    /// not close enough for the bound to apply.
    pub pass: Option<bool>,
}

/// Outcome of a contradiction-bound check.
#[derive(Clone, Debug)]
pub enum ContradictionOutcome {
    /// The check's hypotheses are not met on this model (no qualifying
    /// ball inside the invariant support), so no bound applies.
    NotApplicable {
        /// Why the check does not apply.
        reason: String,
    },
    /// The check ran; per-probe results.
    Checked {
        /// The qualifying ball.
        ball: Ball,
        /// Time from which the ball's oscillation stays at the level.
        stable_from: usize,
        /// Realized oscillation level on the ball.
        osc_level: f64,
        /// The probe-independent part of the bound.
        base_bound: f64,
        /// Per-probe comparisons.
        rows: Vec<ContradictionRow>,
    },
}

/// Compares measured dual-iterate gaps against the oscillation bound that
/// the decomposition machinery predicts.
///
/// A qualifying ball is searched at level `cfg.epsilon` among the default
/// candidates; absent one, the outcome is `NotApplicable` (the machinery's
/// hypotheses fail on such models). Otherwise each close-enough probe must
/// keep its measured gap within the bound plus its own continuity drift
/// scaled by `2 * sup_bound(f)`.
pub fn check_contradiction_bound(
    model: &MetricModel,
    cfg: &DecompositionConfig,
    f: &Observable,
    plan: &ProbePlan,
) -> Result<ContradictionOutcome, DecompositionError> {
    plan.validate(model)?;
    if plan.target != cfg.x0 {
        return Err(DecompositionError::BadConfig {
            reason: format!(
                "the probe plan targets state {} but the construction starts at {}",
                plan.target, cfg.x0
            ),
        });
    }
    cfg.validate(model)?;

    let candidates = default_candidate_balls(model)?;
    let search = find_lemma_ball(model, f, cfg.epsilon, &candidates, plan.horizon)?;
    let Some(hit) = search.found else {
        return Ok(ContradictionOutcome::NotApplicable {
            reason: format!(
                "no candidate ball inside the invariant support reaches oscillation level \
                 {} by step {}",
                cfg.epsilon, plan.horizon
            ),
        });
    };

    let scan = continuity_scan(model, cfg, &plan.probes)?;
    let profile = eproperty_profile(model, f, plan, cfg.epsilon)?;
    let base_bound = oscillation_bound(cfg, f, hit.osc_level);

    let rows = profile
        .rows
        .iter()
        .map(|row| {
            let (bound, pass) = match scan.total_drift(row.probe, cfg.k) {
                Some(drift) => {
                    let bound = base_bound + 2.0 * f.sup_bound() * drift;
                    (Some(bound), Some(row.gap <= bound))
                }
                None => (None, None),
            };
            ContradictionRow {
                probe: row.probe,
                distance: row.distance,
                measured: row.gap,
                bound,
                pass,
            }
        })
        .collect();

    Ok(ContradictionOutcome::Checked {
        ball: hit.ball,
        stable_from: hit.stable_from,
        osc_level: hit.osc_level,
        base_bound,
        rows,
    })
}
