//! Exact flat-metric (bounded-Lipschitz) distances via linear programming.
//!
//! The flat distance between two probability measures is the supremum of
//! the difference of their integrals over test functions bounded by 1 in
//! absolute value and 1-Lipschitz for the model metric. On finitely
//! supported measures this supremum is a finite-dimensional linear program:
//! one variable per state in the union support, box constraints `|f| <= 1`,
//! and pair constraints `|f(x) - f(y)| <= d(x, y)`.
//!
//! Restricting to the union support is exact, not an approximation: any
//! feasible test function on the support extends to the full space with the
//! same Lipschitz constant (take at each point the infimum of
//! `f(s) + d(·, s)` over support states, then clamp to `[-1, 1]`; both
//! steps preserve the constraints), and states outside the support carry no
//! mass, so they cannot change the objective. States where the two measures
//! agree exactly are dropped for the same reason.
//!
//! Constraints are pruned before solving: a pair at distance 2 or more is
//! implied by the boxes, and a pair whose distance is reached through an
//! intermediate support state is implied by the two shorter pairs (such a
//! derivation is never circular because both shorter distances are strictly
//! smaller). The program is solved by a dense primal simplex after the
//! substitution `g = f + 1`, which makes the origin feasible: Dantzig
//! pricing first, an automatic switch to Bland's rule (which cannot cycle)
//! if the pivot count suggests degeneracy, and a hard iteration cap that
//! fails loudly with a dump of the offending program.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::measure::DiscreteMeasure;
use crate::space::{MetricModel, StateId};

/// Reduced-cost threshold: a column enters only if its reduced cost is
/// below `-ENTER_EPS`.
const ENTER_EPS: f64 = 1e-12;
/// A row is eligible for the ratio test only if its pivot entry exceeds
/// this.
const PIVOT_EPS: f64 = 1e-12;

/// Failure modes of the flat-metric solver.
#[derive(Clone, Debug, PartialEq)]
pub enum FlatMetricError {
    /// The pivot cap was hit; the dump describes the offending program.
    CyclingGuard {
        /// Pivots performed before giving up.
        iterations: usize,
        /// Compact rendering of the program for offline inspection.
        dump: String,
    },
    /// No ratio-test row was available for an entering column. The flat
    /// program is bounded by construction, so this indicates numerical
    /// corruption of the tableau.
    Unbounded {
        /// Structural-or-slack index of the entering column.
        column: usize,
    },
}

impl fmt::Display for FlatMetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlatMetricError::CyclingGuard { iterations, dump } => {
                write!(f, "simplex pivot cap hit after {iterations} iterations; program: {dump}")
            }
            FlatMetricError::Unbounded { column } => {
                write!(f, "tableau reports an unbounded direction at column {column}")
            }
        }
    }
}

impl core::error::Error for FlatMetricError {}

/// The optimum of a flat-metric program.
#[derive(Clone, Debug)]
pub struct LpSolution {
    /// The flat distance.
    pub value: f64,
    /// An optimal test function on the union support, in state-id order.
    pub potential: Vec<(StateId, f64)>,
    /// Simplex pivots performed.
    pub iterations: usize,
    /// Whether the anti-cycling rule was engaged.
    pub used_blands: bool,
}

/// A flat-metric program: objective coefficients on the union support plus
/// the surviving pair constraints.
#[derive(Clone, Debug)]
pub struct FlatMetricProblem {
    states: Vec<StateId>,
    coeffs: Vec<f64>,
    /// `(i, j, d)` with `i < j` indexing into `states`.
    pairs: Vec<(usize, usize, f64)>,
    flipped: bool,
}

impl FlatMetricProblem {
    /// Assembles the program for the difference `mu - nu` on `model`.
    pub fn new(
        model: &MetricModel,
        mu: &DiscreteMeasure<f64>,
        nu: &DiscreteMeasure<f64>,
    ) -> Self {
        let diff = mu.sub(nu);
        let mut states: Vec<StateId> = Vec::with_capacity(diff.num_atoms());
        let mut coeffs: Vec<f64> = Vec::with_capacity(diff.num_atoms());
        for &(s, c) in diff.atoms() {
            if c != 0.0 {
                states.push(s);
                coeffs.push(c);
            }
        }

        // Canonical orientation: the leading coefficient is positive, so
        // the program for (mu, nu) and for (nu, mu) is bit-identical and
        // the reported distance is exactly symmetric.
        let flipped = matches!(coeffs.first(), Some(c) if *c < 0.0);
        if flipped {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
        }

        let n = states.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let dij = model.distance(states[i], states[j]);
                if dij >= 2.0 {
                    continue;
                }
                let implied = (0..n).any(|k| {
                    k != i
                        && k != j
                        && model.distance(states[i], states[k])
                            + model.distance(states[k], states[j])
                            <= dij
                });
                if !implied {
                    pairs.push((i, j, dij));
                }
            }
        }
        FlatMetricProblem { states, coeffs, pairs, flipped }
    }

    /// Number of test-function variables (union-support states with a
    /// nonzero coefficient).
    pub fn num_vars(&self) -> usize {
        self.states.len()
    }

    /// Number of pair constraints that survived pruning.
    pub fn num_pair_constraints(&self) -> usize {
        self.pairs.len()
    }

    fn dump(&self) -> String {
        let mut out = String::from("coeffs=[");
        for (k, (s, c)) in self.states.iter().zip(self.coeffs.iter()).enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}:{}", s.index(), c));
        }
        out.push_str("] pairs=[");
        for (k, (i, j, d)) in self.pairs.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("({i},{j}):{d}"));
        }
        out.push(']');
        out
    }

    /// Solves the program to optimality.
    pub fn solve(&self) -> Result<LpSolution, FlatMetricError> {
        let n = self.states.len();
        if n == 0 {
            return Ok(LpSolution {
                value: 0.0,
                potential: Vec::new(),
                iterations: 0,
                used_blands: false,
            });
        }

        // Substitute g = f + 1 in [0, 2]: maximize sum(c*g) - sum(c) under
        // g_i <= 2, g_i - g_j <= d_ij, g_j - g_i <= d_ij, g >= 0. The
        // origin is feasible, so no phase-1 is needed.
        let m = n + 2 * self.pairs.len();
        let width = n + m + 1;
        let mut a = alloc::vec![0.0f64; (m + 1) * width];
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        {
            let mut row = 0;
            let mut push_row = |coeffs: &[(usize, f64)], rhs: f64, a: &mut Vec<f64>| {
                for &(col, v) in coeffs {
                    a[row * width + col] = v;
                }
                a[row * width + n + row] = 1.0;
                a[row * width + width - 1] = rhs;
                basis.push(n + row);
                row += 1;
            };
            for i in 0..n {
                push_row(&[(i, 1.0)], 2.0, &mut a);
            }
            for &(i, j, d) in &self.pairs {
                push_row(&[(i, 1.0), (j, -1.0)], d, &mut a);
                push_row(&[(i, -1.0), (j, 1.0)], d, &mut a);
            }
        }
        for (i, c) in self.coeffs.iter().enumerate() {
            a[m * width + i] = -c;
        }

        let switch_at = 10 * (m + n);
        let cap = 1000 * (m + n) + 10_000;
        let mut iterations = 0usize;
        let mut used_blands = false;
        loop {
            // Entering column.
            let col = if used_blands {
                (0..n + m).find(|&j| a[m * width + j] < -ENTER_EPS)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..n + m {
                    let rc = a[m * width + j];
                    if rc < -ENTER_EPS && best.is_none_or(|(_, b)| rc < b) {
                        best = Some((j, rc));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = col else { break };

            iterations += 1;
            if iterations > cap {
                return Err(FlatMetricError::CyclingGuard { iterations, dump: self.dump() });
            }
            if iterations > switch_at {
                used_blands = true;
            }

            // Ratio test; under Bland's rule ties leave the smallest basis
            // variable.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let arc = a[r * width + col];
                if arc > PIVOT_EPS {
                    let ratio = a[r * width + width - 1] / arc;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_EPS
                                || (ratio < lratio + PIVOT_EPS
                                    && used_blands
                                    && basis[r] < basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(FlatMetricError::Unbounded { column: col });
            };

            // Pivot.
            let piv = a[row * width + col];
            for jj in 0..width {
                a[row * width + jj] /= piv;
            }
            for r in 0..=m {
                if r != row {
                    let factor = a[r * width + col];
                    if factor != 0.0 {
                        for jj in 0..width {
                            a[r * width + jj] -= factor * a[row * width + jj];
                        }
                    }
                }
            }
            basis[row] = col;
        }

        let mut g = alloc::vec![0.0f64; n];
        for (r, &b) in basis.iter().enumerate() {
            if b < n {
                g[b] = a[r * width + width - 1];
            }
        }
        let coeff_sum: f64 = self.coeffs.iter().sum();
        let z = a[m * width + width - 1];
        let value = (z - coeff_sum).max(0.0);
        let sign = if self.flipped { -1.0 } else { 1.0 };
        let potential: Vec<(StateId, f64)> = self
            .states
            .iter()
            .zip(g.iter())
            .map(|(s, gi)| (*s, sign * (gi - 1.0)))
            .collect();
        Ok(LpSolution { value, potential, iterations, used_blands })
    }
}

/// The flat distance between two finitely supported probability measures,
/// with the optimal test function as a witness.
pub fn flat_distance(
    model: &MetricModel,
    mu: &DiscreteMeasure<f64>,
    nu: &DiscreteMeasure<f64>,
) -> Result<LpSolution, FlatMetricError> {
    FlatMetricProblem::new(model, mu, nu).solve()
}
