//! Finite metric state spaces carrying a Markov transition kernel.
//!
//! A [`MetricModel`] owns an explicit list of states, a metric rule, one
//! kernel row (a probability measure over successor states) per state, and
//! optionally the invariant measure of the kernel. Construction validates
//! everything: metric axioms, row masses, and invariance of a supplied
//! invariant measure. For matrix models without a supplied invariant
//! measure, construction attempts to solve the fixed-point equation by
//! Gaussian elimination and silently leaves the field empty when the system
//! is singular (for example on reducible chains).
//!
//! Infinite state sets are represented by explicit truncations chosen so
//! that every trajectory stays inside the truncation (see the builders
//! below); the truncated dynamics are then exact, not approximate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::measure::DiscreteMeasure;

/// Tolerance for validation comparisons (row masses, invariance residuals,
/// metric identities).
pub const VALIDATION_TOL: f64 = 1e-12;

/// Above this state count, metric and observable validation samples triples
/// and pairs on a deterministic stride instead of checking exhaustively.
pub const EXHAUSTIVE_CHECK_LIMIT: usize = 200;

/// Opaque handle of a state inside a [`MetricModel`].
///
/// Valid ids are `0..num_states`; the numeric value doubles as the index
/// into kernel and observable tables.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StateId(pub usize);

impl StateId {
    /// The id as a table index.
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Descriptive data attached to a state.
#[derive(Clone, Debug)]
pub struct StateInfo {
    /// Human-readable label used in reports.
    pub label: String,
    /// Coordinates of the state; interpreted by the model's [`MetricRule`].
    pub coords: Vec<f64>,
}

impl StateInfo {
    /// A state with a label and coordinates.
    pub fn new(label: impl Into<String>, coords: Vec<f64>) -> Self {
        StateInfo { label: label.into(), coords }
    }
}

/// How distances between states are computed.
#[derive(Clone, Debug)]
pub enum MetricRule {
    /// Dense row-major matrix of pairwise distances.
    Explicit(Vec<f64>),
    /// Sup-norm distance between the coordinate vectors of the states.
    CoordsLinf,
    /// Absolute difference of one-dimensional state coordinates.
    RealAbs,
}

/// An open metric ball: all states strictly within `radius` of `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    /// Center state.
    pub center: StateId,
    /// Strictly positive radius; membership uses a strict inequality.
    pub radius: f64,
}

impl Ball {
    /// A ball with a strictly positive radius.
    ///
    /// # Panics
    ///
    /// Panics if `radius` is not a finite positive number.
    pub fn new(center: StateId, radius: f64) -> Self {
        assert!(
            radius.is_finite() && radius > 0.0,
            "ball radius must be finite and positive, got {radius}"
        );
        Ball { center, radius }
    }

    /// Whether `state` lies strictly inside the ball.
    pub fn contains(&self, model: &MetricModel, state: StateId) -> bool {
        model.distance(state, self.center) < self.radius
    }
}

/// Validation and construction errors for models.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    /// The state list is empty.
    EmptyStateSet,
    /// A number in the given context is NaN or infinite.
    NonFinite {
        /// Where the offending number was found.
        context: String,
    },
    /// The explicit metric matrix does not have `num_states^2` entries.
    MetricShape {
        /// Expected entry count.
        expected: usize,
        /// Actual entry count.
        got: usize,
    },
    /// A state is missing the coordinates required by the metric rule.
    CoordDimension {
        /// Offending state.
        state: usize,
        /// Required coordinate dimension.
        expected: usize,
        /// Actual coordinate dimension.
        got: usize,
    },
    /// `d(s, s)` is nonzero.
    MetricDiagonal {
        /// Offending state.
        state: usize,
    },
    /// The metric is not symmetric at a pair of states.
    MetricNotSymmetric {
        /// First state.
        a: usize,
        /// Second state.
        b: usize,
    },
    /// Two distinct states are at distance zero or less.
    MetricNotPositive {
        /// First state.
        a: usize,
        /// Second state.
        b: usize,
    },
    /// The triangle inequality fails on a triple of states.
    TriangleViolation {
        /// First endpoint.
        a: usize,
        /// Intermediate state.
        b: usize,
        /// Second endpoint.
        c: usize,
    },
    /// The kernel does not have one row per state.
    KernelShape {
        /// Expected row count.
        expected: usize,
        /// Actual row count.
        got: usize,
    },
    /// A state id is out of range.
    InvalidStateId {
        /// Offending id.
        id: usize,
        /// Number of states in the model.
        num_states: usize,
    },
    /// A kernel row's mass differs from 1 beyond tolerance.
    RowMass {
        /// Row state.
        state: usize,
        /// Actual mass.
        mass: f64,
    },
    /// The supplied invariant measure's mass differs from 1.
    InvariantMass {
        /// Actual mass.
        mass: f64,
    },
    /// Applying the kernel to the supplied invariant measure moves an atom.
    InvariantNotFixed {
        /// State where the largest deviation occurs.
        state: usize,
        /// Size of the deviation.
        delta: f64,
    },
    /// The model carries no invariant measure but the operation needs one.
    NoInvariant,
    /// The linear solve for the invariant measure is singular.
    SingularSolve,
    /// A size parameter of a builder is too small.
    InvalidSizeParam {
        /// Parameter name.
        param: &'static str,
        /// Minimum allowed value.
        min: usize,
        /// Actual value.
        got: usize,
    },
    /// A value passed as a prime is not prime.
    NotPrime {
        /// Offending value.
        value: u64,
    },
    /// The prime list is not strictly increasing.
    PrimesNotIncreasing,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::EmptyStateSet => write!(f, "state set is empty"),
            ModelError::NonFinite { context } => {
                write!(f, "non-finite number in {context}")
            }
            ModelError::MetricShape { expected, got } => {
                write!(f, "metric matrix has {got} entries, expected {expected}")
            }
            ModelError::CoordDimension { state, expected, got } => write!(
                f,
                "state {state} has {got} coordinates, metric rule needs {expected}"
            ),
            ModelError::MetricDiagonal { state } => {
                write!(f, "metric not zero on the diagonal at state {state}")
            }
            ModelError::MetricNotSymmetric { a, b } => {
                write!(f, "metric not symmetric at states {a}, {b}")
            }
            ModelError::MetricNotPositive { a, b } => {
                write!(f, "distinct states {a}, {b} are at non-positive distance")
            }
            ModelError::TriangleViolation { a, b, c } => {
                write!(f, "triangle inequality fails for states {a}, {b}, {c}")
            }
            ModelError::KernelShape { expected, got } => {
                write!(f, "kernel has {got} rows, expected {expected}")
            }
            ModelError::InvalidStateId { id, num_states } => {
                write!(f, "state id {id} out of range (model has {num_states} states)")
            }
            ModelError::RowMass { state, mass } => {
                write!(f, "kernel row mass != 1 at state {state} (mass = {mass})")
            }
            ModelError::InvariantMass { mass } => {
                write!(f, "invariant measure mass != 1 (mass = {mass})")
            }
            ModelError::InvariantNotFixed { state, delta } => write!(
                f,
                "invariant measure is not kernel-fixed (deviation {delta} at state {state})"
            ),
            ModelError::NoInvariant => write!(f, "model has no invariant measure"),
            ModelError::SingularSolve => write!(
                f,
                "invariant-measure solve is singular (chain may be reducible)"
            ),
            ModelError::InvalidSizeParam { param, min, got } => {
                write!(f, "{param} must be at least {min}, got {got}")
            }
            ModelError::NotPrime { value } => write!(f, "{value} is not prime"),
            ModelError::PrimesNotIncreasing => {
                write!(f, "prime list must be strictly increasing")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// A finite metric state space with a Markov kernel.
#[derive(Clone, Debug)]
pub struct MetricModel {
    name: String,
    states: Vec<StateInfo>,
    metric: MetricRule,
    kernel: Vec<DiscreteMeasure<f64>>,
    invariant: Option<DiscreteMeasure<f64>>,
}

impl MetricModel {
    /// Builds and validates a model.
    ///
    /// `kernel` holds one probability measure per state (row-stochastic
    /// within [`VALIDATION_TOL`]). If `invariant` is supplied it is checked
    /// to be a kernel-fixed probability measure; if it is `None` a linear
    /// solve is attempted and the field stays empty when the solve fails.
    pub fn new(
        name: impl Into<String>,
        states: Vec<StateInfo>,
        metric: MetricRule,
        kernel: Vec<DiscreteMeasure<f64>>,
        invariant: Option<DiscreteMeasure<f64>>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if states.is_empty() {
            return Err(ModelError::EmptyStateSet);
        }
        let n = states.len();
        for (i, s) in states.iter().enumerate() {
            if s.coords.iter().any(|c| !c.is_finite()) {
                return Err(ModelError::NonFinite { context: format!("coordinates of state {i}") });
            }
        }
        check_metric_shape(&states, &metric)?;
        if kernel.len() != n {
            return Err(ModelError::KernelShape { expected: n, got: kernel.len() });
        }
        for (i, row) in kernel.iter().enumerate() {
            for &(t, p) in row.atoms() {
                if t.index() >= n {
                    return Err(ModelError::InvalidStateId { id: t.index(), num_states: n });
                }
                if !p.is_finite() {
                    return Err(ModelError::NonFinite { context: format!("kernel row of state {i}") });
                }
            }
            let mass: f64 = row.total_mass();
            if (mass - 1.0).abs() > VALIDATION_TOL {
                return Err(ModelError::RowMass { state: i, mass });
            }
        }

        let model = MetricModel { name, states, metric, kernel, invariant: None };
        model.check_metric_axioms()?;

        let invariant = match invariant {
            Some(m) => {
                model.check_invariant(&m)?;
                Some(m)
            }
            None => model.solve_invariant().ok(),
        };
        Ok(MetricModel { invariant, ..model })
    }

    /// Model name as used by reports and the CLI.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of states.
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// All state ids, in order.
    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states()).map(StateId)
    }

    /// Descriptive data of a state.
    ///
    /// # Panics
    ///
    /// Panics when the id is out of range; see [`MetricModel::try_state`].
    pub fn state(&self, id: StateId) -> &StateInfo {
        &self.states[id.index()]
    }

    /// Descriptive data of a state, or an error for an invalid id.
    pub fn try_state(&self, id: StateId) -> Result<&StateInfo, ModelError> {
        self.states
            .get(id.index())
            .ok_or(ModelError::InvalidStateId { id: id.index(), num_states: self.num_states() })
    }

    /// Finds the state with the given label.
    pub fn find_label(&self, label: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.label == label).map(StateId)
    }

    /// Exact metric value between two states per the model's metric rule.
    ///
    /// # Panics
    ///
    /// Panics when an id is out of range; see [`MetricModel::try_distance`].
    pub fn distance(&self, a: StateId, b: StateId) -> f64 {
        let (i, j) = (a.index(), b.index());
        match &self.metric {
            MetricRule::Explicit(m) => m[i * self.states.len() + j],
            MetricRule::CoordsLinf => {
                let (ca, cb) = (&self.states[i].coords, &self.states[j].coords);
                let mut d = 0.0f64;
                for (x, y) in ca.iter().zip(cb.iter()) {
                    d = d.max((x - y).abs());
                }
                d
            }
            MetricRule::RealAbs => {
                (self.states[i].coords[0] - self.states[j].coords[0]).abs()
            }
        }
    }

    /// Metric value, or an error for an invalid id.
    pub fn try_distance(&self, a: StateId, b: StateId) -> Result<f64, ModelError> {
        self.try_state(a)?;
        self.try_state(b)?;
        Ok(self.distance(a, b))
    }

    /// The kernel row of a state: the distribution of its successor.
    ///
    /// # Panics
    ///
    /// Panics when the id is out of range.
    pub fn kernel_row(&self, s: StateId) -> &DiscreteMeasure<f64> {
        &self.kernel[s.index()]
    }

    /// All kernel rows, indexed by state id.
    pub fn kernel_rows(&self) -> &[DiscreteMeasure<f64>] {
        &self.kernel
    }

    /// The invariant measure, when known.
    pub fn invariant_measure(&self) -> Option<&DiscreteMeasure<f64>> {
        self.invariant.as_ref()
    }

    /// The invariant measure, or [`ModelError::NoInvariant`].
    pub fn require_invariant(&self) -> Result<&DiscreteMeasure<f64>, ModelError> {
        self.invariant.as_ref().ok_or(ModelError::NoInvariant)
    }

    /// States strictly inside the ball, in id order.
    pub fn ball_members(&self, ball: Ball) -> Vec<StateId> {
        self.state_ids().filter(|&s| ball.contains(self, s)).collect()
    }

    /// Solves `mu = mu P` with unit mass by Gaussian elimination.
    ///
    /// Fails with [`ModelError::SingularSolve`] when the fixed point is not
    /// unique (e.g. reducible chains) and with the usual validation errors
    /// when the solution is not a nonnegative invariant probability vector.
    pub fn solve_invariant(&self) -> Result<DiscreteMeasure<f64>, ModelError> {
        let n = self.num_states();
        // Rows 0..n-1: transpose(P) - I; the last equation is replaced by
        // the normalization sum(mu) = 1 so the system has a unique solution
        // exactly when the stationary distribution is unique.
        let mut a = vec![0.0f64; n * n];
        let mut b = vec![0.0f64; n];
        for s in 0..n {
            for &(t, p) in self.kernel[s].atoms() {
                a[t.index() * n + s] += p;
            }
        }
        for i in 0..n {
            a[i * n + i] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1) * n + j] = 1.0;
        }
        b[n - 1] = 1.0;

        // Gaussian elimination with partial pivoting.
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            if a[piv * n + col].abs() < 1e-10 {
                return Err(ModelError::SingularSolve);
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                b.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / d;
                if factor != 0.0 {
                    for j in col..n {
                        a[r * n + j] -= factor * a[col * n + j];
                    }
                    b[r] -= factor * b[col];
                }
            }
        }
        let mut w = vec![0.0f64; n];
        for col in (0..n).rev() {
            let mut acc = b[col];
            for j in col + 1..n {
                acc -= a[col * n + j] * w[j];
            }
            w[col] = acc / a[col * n + col];
        }

        for (i, x) in w.iter().enumerate() {
            if *x < -VALIDATION_TOL {
                return Err(ModelError::InvariantNotFixed { state: i, delta: -*x });
            }
        }
        let atoms: Vec<(StateId, f64)> = w
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > VALIDATION_TOL)
            .map(|(i, x)| (StateId(i), *x))
            .collect();
        let mu = DiscreteMeasure::from_atoms(atoms);
        self.check_invariant(&mu)?;
        Ok(mu)
    }

    fn check_invariant(&self, mu: &DiscreteMeasure<f64>) -> Result<(), ModelError> {
        let n = self.num_states();
        for &(s, w) in mu.atoms() {
            if s.index() >= n {
                return Err(ModelError::InvalidStateId { id: s.index(), num_states: n });
            }
            if !w.is_finite() {
                return Err(ModelError::NonFinite { context: String::from("invariant measure") });
            }
        }
        let mass: f64 = mu.total_mass();
        if (mass - 1.0).abs() > VALIDATION_TOL {
            return Err(ModelError::InvariantMass { mass });
        }
        let pushed = crate::operator::apply_rows(&self.kernel, mu, n);
        let dev = pushed.max_atom_diff(mu);
        if dev > VALIDATION_TOL {
            let state = worst_atom(&pushed, mu);
            return Err(ModelError::InvariantNotFixed { state, delta: dev });
        }
        Ok(())
    }

    fn check_metric_axioms(&self) -> Result<(), ModelError> {
        let n = self.num_states();
        for i in 0..n {
            let d = self.distance(StateId(i), StateId(i));
            if d != 0.0 {
                return Err(ModelError::MetricDiagonal { state: i });
            }
        }
        let step = if n <= EXHAUSTIVE_CHECK_LIMIT { 1 } else { n / EXHAUSTIVE_CHECK_LIMIT + 1 };
        let mut i = 0;
        while i < n {
            let mut j = 0;
            while j < n {
                if i != j {
                    let dij = self.distance(StateId(i), StateId(j));
                    if !dij.is_finite() {
                        return Err(ModelError::NonFinite {
                            context: format!("distance between states {i} and {j}"),
                        });
                    }
                    if dij <= 0.0 {
                        return Err(ModelError::MetricNotPositive { a: i, b: j });
                    }
                    if (dij - self.distance(StateId(j), StateId(i))).abs() > VALIDATION_TOL {
                        return Err(ModelError::MetricNotSymmetric { a: i, b: j });
                    }
                    let mut k = 0;
                    while k < n {
                        if k != i && k != j {
                            let dik = self.distance(StateId(i), StateId(k));
                            let dkj = self.distance(StateId(k), StateId(j));
                            if dij > dik + dkj + VALIDATION_TOL {
                                return Err(ModelError::TriangleViolation { a: i, b: k, c: j });
                            }
                        }
                        k += step;
                    }
                }
                j += step;
            }
            i += step;
        }
        Ok(())
    }
}

fn check_metric_shape(states: &[StateInfo], metric: &MetricRule) -> Result<(), ModelError> {
    let n = states.len();
    match metric {
        MetricRule::Explicit(m) => {
            if m.len() != n * n {
                return Err(ModelError::MetricShape { expected: n * n, got: m.len() });
            }
            if let Some(_bad) = m.iter().find(|x| !x.is_finite()) {
                return Err(ModelError::NonFinite { context: String::from("metric matrix") });
            }
        }
        MetricRule::CoordsLinf => {
            let dim = states[0].coords.len();
            if dim == 0 {
                return Err(ModelError::CoordDimension { state: 0, expected: 1, got: 0 });
            }
            for (i, s) in states.iter().enumerate() {
                if s.coords.len() != dim {
                    return Err(ModelError::CoordDimension {
                        state: i,
                        expected: dim,
                        got: s.coords.len(),
                    });
                }
            }
        }
        MetricRule::RealAbs => {
            for (i, s) in states.iter().enumerate() {
                if s.coords.len() != 1 {
                    return Err(ModelError::CoordDimension {
                        state: i,
                        expected: 1,
                        got: s.coords.len(),
                    });
                }
            }
        }
    }
    Ok(())
}

fn worst_atom(a: &DiscreteMeasure<f64>, b: &DiscreteMeasure<f64>) -> usize {
    let mut worst = (0usize, 0.0f64);
    for s in a.support().chain(b.support()) {
        let d = (a.weight(s) - b.weight(s)).abs();
        if d > worst.1 {
            worst = (s.index(), d);
        }
    }
    worst.0
}

/// The countable contraction chain on `{0} ∪ {1/m : 1 <= m <= m_max}`.
///
/// State `0` is the point `0` and state `m` is the point `1/m`. The map
/// sends `0` and `1` to `0`, and `1/m` to `1/(m-1)` for `m >= 2`, so every
/// trajectory walks up to `1` and is absorbed at `0`: the truncation is
/// exact. The metric is the absolute difference of the point values and the
/// invariant measure is the unit mass at `0`.
pub fn build_example1(m_max: usize) -> Result<MetricModel, ModelError> {
    if m_max < 2 {
        return Err(ModelError::InvalidSizeParam { param: "m_max", min: 2, got: m_max });
    }
    let mut states = Vec::with_capacity(m_max + 1);
    states.push(StateInfo::new("0", vec![0.0]));
    for m in 1..=m_max {
        states.push(StateInfo::new(format!("1/{m}"), vec![1.0 / m as f64]));
    }
    let mut kernel = Vec::with_capacity(m_max + 1);
    kernel.push(DiscreteMeasure::dirac(StateId(0)));
    kernel.push(DiscreteMeasure::dirac(StateId(0)));
    for m in 2..=m_max {
        kernel.push(DiscreteMeasure::dirac(StateId(m - 1)));
    }
    let invariant = DiscreteMeasure::dirac(StateId(0));
    MetricModel::new("example1", states, MetricRule::RealAbs, kernel, Some(invariant))
}

/// The prime-indexed cycling chain whose states are sparse sequences.
///
/// For each prime `k` in `primes` and level `i` in `1..=k` there is a state
/// representing the sup-norm-bounded sequence whose single nonzero entry is
/// `i/k`, placed at position `k^i - 1`; all level-0 sequences are the zero
/// sequence, represented once as state `0`. Positions of distinct nonzero
/// states never collide (unique factorization), so the sup-norm distance
/// between two distinct states is `max` of their nonzero values, and the
/// distance to the zero state is the state's own value. States are kept
/// symbolically as (prime, level) pairs; positions are never materialized,
/// which keeps arbitrarily large primes representable.
///
/// The map raises the level by one and wraps level `k` to the zero state,
/// which is absorbing, so the truncation to the listed primes is exact. The
/// invariant measure is the unit mass at the zero state.
pub fn build_example2(primes: &[u64]) -> Result<MetricModel, ModelError> {
    if primes.is_empty() {
        return Err(ModelError::InvalidSizeParam { param: "primes", min: 1, got: 0 });
    }
    for pair in primes.windows(2) {
        if pair[0] >= pair[1] {
            return Err(ModelError::PrimesNotIncreasing);
        }
    }
    for &k in primes {
        if !is_prime(k) {
            return Err(ModelError::NotPrime { value: k });
        }
    }

    let mut states = vec![StateInfo::new("0", vec![0.0])];
    let mut kernel = vec![DiscreteMeasure::dirac(StateId(0))];
    for &k in primes {
        for i in 1..=k {
            let value = i as f64 / k as f64;
            states.push(StateInfo::new(format!("({k},{i})"), vec![value]));
            let next = if i < k { StateId(states.len()) } else { StateId(0) };
            kernel.push(DiscreteMeasure::dirac(next));
        }
    }

    let n = states.len();
    let mut matrix = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                matrix[i * n + j] = states[i].coords[0].max(states[j].coords[0]);
            }
        }
    }
    let invariant = DiscreteMeasure::dirac(StateId(0));
    MetricModel::new("example2", states, MetricRule::Explicit(matrix), kernel, Some(invariant))
}

/// The id of the level-`i` state of prime `k` inside [`build_example2`]'s
/// layout, or `None` when `(k, i)` is not part of the model. Level `0` is
/// the zero state for every prime.
pub fn example2_state(primes: &[u64], k: u64, i: u64) -> Option<StateId> {
    if i > k {
        return None;
    }
    if i == 0 {
        return primes.contains(&k).then_some(StateId(0));
    }
    let mut offset = 1u64;
    for &p in primes {
        if p == k {
            return Some(StateId((offset + i - 1) as usize));
        }
        offset += p;
    }
    None
}

/// A matrix model: explicit metric, explicit row-stochastic matrix.
///
/// States are labeled `s0, s1, ...`; the invariant measure is computed by a
/// linear solve when the chain has a unique stationary distribution.
pub fn build_doeblin(
    name: &str,
    matrix: &[Vec<f64>],
    metric: MetricRule,
) -> Result<MetricModel, ModelError> {
    let n = matrix.len();
    if n == 0 {
        return Err(ModelError::EmptyStateSet);
    }
    let states: Vec<StateInfo> =
        (0..n).map(|i| StateInfo::new(format!("s{i}"), Vec::new())).collect();
    let mut kernel = Vec::with_capacity(n);
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(ModelError::KernelShape { expected: n, got: row.len() });
        }
        for &p in row.iter() {
            if !p.is_finite() {
                return Err(ModelError::NonFinite { context: format!("kernel row of state {i}") });
            }
            if p < 0.0 {
                return Err(ModelError::RowMass { state: i, mass: p });
            }
        }
        let atoms: Vec<(StateId, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(j, p)| (StateId(j), *p))
            .collect();
        kernel.push(DiscreteMeasure::from_atoms(atoms));
    }
    MetricModel::new(name, states, metric, kernel, None)
}

/// The canonical 3-state chain with strong diagonal and uniform leakage:
/// rows `(0.8, 0.1, 0.1)` cyclically, discrete metric, uniform invariant
/// measure.
pub fn build_doeblin3() -> MetricModel {
    let matrix = vec![
        vec![0.8, 0.1, 0.1],
        vec![0.1, 0.8, 0.1],
        vec![0.1, 0.1, 0.8],
    ];
    let metric = discrete_metric(3);
    build_doeblin("doeblin3", &matrix, metric).expect("canonical 3-state chain is valid")
}

/// The discrete metric on `n` states: distance 1 between distinct states.
pub fn discrete_metric(n: usize) -> MetricRule {
    let mut m = vec![1.0f64; n * n];
    for i in 0..n {
        m[i * n + i] = 0.0;
    }
    MetricRule::Explicit(m)
}

/// The halving chain on `{2^-j : 0 <= j <= j_max} ∪ {0}`.
///
/// State `0` is the point `0` and state `j + 1` is the point `2^-j`. Each
/// point maps to its half; the smallest listed point maps to `0`, which
/// keeps the truncation closed under the dynamics. The metric is the
/// absolute difference and the invariant measure is the unit mass at `0`.
pub fn build_halfmap(j_max: usize) -> Result<MetricModel, ModelError> {
    if j_max < 1 {
        return Err(ModelError::InvalidSizeParam { param: "j_max", min: 1, got: j_max });
    }
    let mut states = Vec::with_capacity(j_max + 2);
    states.push(StateInfo::new("0", vec![0.0]));
    let mut value = 1.0f64;
    for j in 0..=j_max {
        states.push(StateInfo::new(format!("2^-{j}"), vec![value]));
        value *= 0.5;
    }
    let mut kernel = Vec::with_capacity(j_max + 2);
    kernel.push(DiscreteMeasure::dirac(StateId(0)));
    for j in 0..=j_max {
        let next = if j < j_max { StateId(j + 2) } else { StateId(0) };
        kernel.push(DiscreteMeasure::dirac(next));
    }
    let invariant = DiscreteMeasure::dirac(StateId(0));
    MetricModel::new("halfmap", states, MetricRule::RealAbs, kernel, Some(invariant))
}

fn is_prime(v: u64) -> bool {
    if v < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= v {
        if v % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
