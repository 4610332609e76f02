//! The transition operator and its dual action on observables.
//!
//! The kernel of a [`MetricModel`] acts on measures by push-forward
//! ([`iterate`]) and on observables by averaging over successor states
//! ([`dual_apply`], [`dual_iterate`]). The two actions are adjoint: the
//! integral of an observable against the pushed measure equals the integral
//! of the dually-advanced observable against the original measure, up to
//! floating-point rounding that grows at most linearly in the step count.
//! [`cesaro_average`] forms running means of dual iterates, the smoothed
//! quantity used by the Cesàro diagnostics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::measure::DiscreteMeasure;
use crate::space::{MetricModel, StateId, EXHAUSTIVE_CHECK_LIMIT, VALIDATION_TOL};
use crate::weight::Weight;

/// Slack for checking a declared Lipschitz constant against value pairs;
/// generous against metric rounding, far below any diagnostic tolerance.
const LIP_CHECK_SLACK: f64 = 1e-9;

/// A bounded Lipschitz observable: one value per state plus declared
/// bounds.
///
/// `sup_bound` bounds the absolute values and `lip_const` bounds the ratio
/// of value differences to distances; [`Observable::new`] verifies both
/// against the model. Observables produced by the dual operator carry
/// recomputed bounds: a tight sup and an empirical Lipschitz constant
/// measured on state pairs (all pairs on small models, a deterministic
/// sample on large ones).
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    values: Vec<f64>,
    sup_bound: f64,
    lip_const: f64,
}

/// Validation errors for observables.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableError {
    /// The value table does not have one entry per state.
    WrongLength {
        /// Expected number of values.
        expected: usize,
        /// Actual number of values.
        got: usize,
    },
    /// A value or declared bound is NaN or infinite.
    NonFinite {
        /// Where the offending number was found.
        context: String,
    },
    /// A declared bound is negative.
    NegativeBound {
        /// Name of the offending bound.
        bound: &'static str,
    },
    /// A value exceeds the declared sup bound.
    SupBoundViolated {
        /// Offending state.
        state: usize,
        /// Value found there.
        value: f64,
        /// Declared bound.
        bound: f64,
    },
    /// A value pair exceeds the declared Lipschitz constant.
    LipBoundViolated {
        /// First state of the offending pair.
        a: usize,
        /// Second state of the offending pair.
        b: usize,
        /// Required constant for this pair.
        needed: f64,
        /// Declared constant.
        declared: f64,
    },
}

impl fmt::Display for ObservableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableError::WrongLength { expected, got } => {
                write!(f, "observable has {got} values, model has {expected} states")
            }
            ObservableError::NonFinite { context } => {
                write!(f, "non-finite number in {context}")
            }
            ObservableError::NegativeBound { bound } => {
                write!(f, "declared {bound} is negative")
            }
            ObservableError::SupBoundViolated { state, value, bound } => write!(
                f,
                "value {value} at state {state} exceeds declared sup bound {bound}"
            ),
            ObservableError::LipBoundViolated { a, b, needed, declared } => write!(
                f,
                "states {a}, {b} need Lipschitz constant {needed}, declared {declared}"
            ),
        }
    }
}

impl core::error::Error for ObservableError {}

impl Observable {
    /// Builds an observable and verifies the declared bounds on the model.
    pub fn new(
        model: &MetricModel,
        values: Vec<f64>,
        sup_bound: f64,
        lip_const: f64,
    ) -> Result<Self, ObservableError> {
        let n = model.num_states();
        if values.len() != n {
            return Err(ObservableError::WrongLength { expected: n, got: values.len() });
        }
        if !sup_bound.is_finite() {
            return Err(ObservableError::NonFinite { context: String::from("sup bound") });
        }
        if !lip_const.is_finite() {
            return Err(ObservableError::NonFinite {
                context: String::from("Lipschitz constant"),
            });
        }
        if sup_bound < 0.0 {
            return Err(ObservableError::NegativeBound { bound: "sup bound" });
        }
        if lip_const < 0.0 {
            return Err(ObservableError::NegativeBound { bound: "Lipschitz constant" });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ObservableError::NonFinite {
                    context: format!("value at state {i}"),
                });
            }
            if v.abs() > sup_bound + VALIDATION_TOL {
                return Err(ObservableError::SupBoundViolated {
                    state: i,
                    value: *v,
                    bound: sup_bound,
                });
            }
        }
        let step = if n <= EXHAUSTIVE_CHECK_LIMIT { 1 } else { n / EXHAUSTIVE_CHECK_LIMIT + 1 };
        let mut i = 0;
        while i < n {
            let mut j = i + step;
            while j < n {
                let d = model.distance(StateId(i), StateId(j));
                let gap = (values[i] - values[j]).abs();
                if gap > lip_const * d + LIP_CHECK_SLACK {
                    let needed = if d > 0.0 { gap / d } else { f64::INFINITY };
                    return Err(ObservableError::LipBoundViolated {
                        a: i,
                        b: j,
                        needed,
                        declared: lip_const,
                    });
                }
                j += step;
            }
            i += step;
        }
        Ok(Observable { values, sup_bound, lip_const })
    }

    fn from_computed(model: &MetricModel, values: Vec<f64>) -> Self {
        let sup_bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lip_const = empirical_lip(model, &values);
        Observable { values, sup_bound, lip_const }
    }

    /// The value at a state.
    ///
    /// # Panics
    ///
    /// Panics when the id is out of range.
    pub fn value(&self, s: StateId) -> f64 {
        self.values[s.index()]
    }

    /// All values, indexed by state id.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Declared (or recomputed) bound on absolute values.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Declared (or empirically recomputed) Lipschitz constant.
    pub fn lip_const(&self) -> f64 {
        self.lip_const
    }
}

/// The distance to the state with id 0, as an observable.
///
/// On models whose points carry a norm-like metric anchored at state 0 this
/// is the norm itself. Lipschitz constant 1 by the triangle inequality; the
/// sup bound is the largest distance realized.
pub fn identity_on_norm(model: &MetricModel) -> Observable {
    let values: Vec<f64> =
        model.state_ids().map(|s| model.distance(s, StateId(0))).collect();
    let sup_bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Observable { values, sup_bound, lip_const: 1.0 }
}

/// The observable `min(1, 2 * distance to state 0)`: a sup bound of 1 with
/// Lipschitz constant 2.
pub fn min1_2norm(model: &MetricModel) -> Observable {
    let values: Vec<f64> = model
        .state_ids()
        .map(|s| (2.0 * model.distance(s, StateId(0))).min(1.0))
        .collect();
    Observable { values, sup_bound: 1.0, lip_const: 2.0 }
}

fn empirical_lip(model: &MetricModel, values: &[f64]) -> f64 {
    let n = model.num_states();
    let step = if n <= EXHAUSTIVE_CHECK_LIMIT { 1 } else { n / EXHAUSTIVE_CHECK_LIMIT + 1 };
    let mut best = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + step;
        while j < n {
            let d = model.distance(StateId(i), StateId(j));
            if d > 0.0 {
                best = best.max((values[i] - values[j]).abs() / d);
            }
            j += step;
        }
        i += step;
    }
    best
}

/// One dual sweep on raw values: at each state, the kernel-weighted average
/// of the values at its successors.
pub(crate) fn dual_apply_raw(rows: &[DiscreteMeasure<f64>], values: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|row| {
            let mut acc = 0.0f64;
            for &(t, p) in row.atoms() {
                acc += p * values[t.index()];
            }
            acc
        })
        .collect()
}

/// The dual operator applied once: `(U f)(x)` is the expectation of `f` at
/// the successor of `x`.
pub fn dual_apply(model: &MetricModel, f: &Observable) -> Observable {
    let values = dual_apply_raw(model.kernel_rows(), f.values());
    Observable::from_computed(model, values)
}

/// The dual operator applied `n` times.
pub fn dual_iterate(model: &MetricModel, f: &Observable, n: usize) -> Observable {
    let mut values = f.values().to_vec();
    for _ in 0..n {
        values = dual_apply_raw(model.kernel_rows(), &values);
    }
    Observable::from_computed(model, values)
}

/// The running mean of the first `n` dual iterates (from step 1 through
/// step `n`), the smoothing used by Cesàro diagnostics.
///
/// # Panics
///
/// Panics when `n == 0`: a mean of no iterates is undefined.
pub fn cesaro_average(model: &MetricModel, f: &Observable, n: usize) -> Observable {
    assert!(n > 0, "Cesàro average needs at least one dual iterate");
    let mut current = f.values().to_vec();
    let mut sums = alloc::vec![0.0f64; current.len()];
    for _ in 0..n {
        current = dual_apply_raw(model.kernel_rows(), &current);
        for (s, c) in sums.iter_mut().zip(current.iter()) {
            *s += c;
        }
    }
    let inv = 1.0 / n as f64;
    let values: Vec<f64> = sums.iter().map(|s| s * inv).collect();
    Observable::from_computed(model, values)
}

/// Push-forward of a measure through kernel rows: each atom's mass is
/// redistributed along its row. Generic over the weight type so exact
/// rational kernels reuse the same sweep.
pub fn apply_rows<W: Weight>(
    rows: &[DiscreteMeasure<W>],
    mu: &DiscreteMeasure<W>,
    num_states: usize,
) -> DiscreteMeasure<W> {
    let mut dense: Vec<W> = alloc::vec![W::zero(); num_states];
    for &(s, ref w) in mu.atoms() {
        for &(t, ref p) in rows[s.index()].atoms() {
            let cell = &mut dense[t.index()];
            *cell = cell.clone() + w.clone() * p.clone();
        }
    }
    DiscreteMeasure::from_atoms(
        dense
            .into_iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, w)| (StateId(i), w))
            .collect(),
    )
}

/// The measure pushed forward `n` times through the model's kernel.
pub fn iterate(
    model: &MetricModel,
    mu: &DiscreteMeasure<f64>,
    n: usize,
) -> DiscreteMeasure<f64> {
    let mut current = mu.clone();
    for _ in 0..n {
        current = apply_rows(model.kernel_rows(), &current, model.num_states());
    }
    current
}

/// The integral of an observable against a measure.
pub fn integrate(f: &Observable, mu: &DiscreteMeasure<f64>) -> f64 {
    let mut acc = 0.0f64;
    for &(s, w) in mu.atoms() {
        acc += f.value(s) * w;
    }
    acc
}
