//! Discrete measures: finitely supported weighted sums of point masses.
//!
//! [`DiscreteMeasure`] stores `(state, weight)` atoms sorted by state id
//! with no duplicate states and no dust atoms (weights whose magnitude is
//! below the weight type's dust threshold are dropped on construction, so
//! exact cancellations stay exact in rational arithmetic and rounding
//! residue disappears in floating point). Weights may be negative; the type
//! represents signed combinations as they arise in residual constructions,
//! and probability constraints are enforced by the callers that need them.

use alloc::vec::Vec;

use crate::space::StateId;
use crate::weight::Weight;

/// A finitely supported signed measure over states.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<W: Weight> {
    /// Sorted by state id; weights nonzero above the dust threshold.
    atoms: Vec<(StateId, W)>,
}

impl<W: Weight> DiscreteMeasure<W> {
    /// The zero measure.
    pub fn zero_measure() -> Self {
        DiscreteMeasure { atoms: Vec::new() }
    }

    /// The unit point mass at `s`.
    pub fn dirac(s: StateId) -> Self {
        DiscreteMeasure { atoms: alloc::vec![(s, W::one())] }
    }

    /// Builds a measure from raw atoms: sorts by state, merges duplicates
    /// by adding their weights, and drops dust.
    pub fn from_atoms(mut atoms: Vec<(StateId, W)>) -> Self {
        atoms.sort_by_key(|(s, _)| *s);
        let mut merged: Vec<(StateId, W)> = Vec::with_capacity(atoms.len());
        for (s, w) in atoms {
            match merged.last_mut() {
                Some((last, acc)) if *last == s => {
                    *acc = acc.clone() + w;
                }
                _ => merged.push((s, w)),
            }
        }
        merged.retain(|(_, w)| !is_dust(w));
        DiscreteMeasure { atoms: merged }
    }

    /// The atoms, sorted by state id.
    pub fn atoms(&self) -> &[(StateId, W)] {
        &self.atoms
    }

    /// Number of atoms in the support.
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// Whether this is the zero measure.
    pub fn is_zero_measure(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The weight at `s`; zero off the support.
    pub fn weight(&self, s: StateId) -> W {
        match self.atoms.binary_search_by_key(&s, |(t, _)| *t) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => W::zero(),
        }
    }

    /// Sum of all weights.
    pub fn total_mass(&self) -> W {
        let mut acc = W::zero();
        for (_, w) in &self.atoms {
            acc = acc + w.clone();
        }
        acc
    }

    /// The support, in id order.
    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.atoms.iter().map(|(s, _)| *s)
    }

    /// The measure scaled by `c`.
    pub fn scale(&self, c: &W) -> Self {
        DiscreteMeasure::from_atoms(
            self.atoms.iter().map(|(s, w)| (*s, w.clone() * c.clone())).collect(),
        )
    }

    /// Atomwise sum.
    pub fn add(&self, other: &Self) -> Self {
        self.merge_with(other, |a, b| a + b)
    }

    /// Atomwise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        self.merge_with(other, |a, b| a - b)
    }

    fn merge_with(&self, other: &Self, combine: impl Fn(W, W) -> W) -> Self {
        let mut out: Vec<(StateId, W)> =
            Vec::with_capacity(self.atoms.len() + other.atoms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let take_left = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some((a, _)), Some((b, _))) => {
                    if a == b {
                        let (s, wa) = self.atoms[i].clone();
                        let (_, wb) = other.atoms[j].clone();
                        out.push((s, combine(wa, wb)));
                        i += 1;
                        j += 1;
                        continue;
                    }
                    a < b
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!(),
            };
            if take_left {
                let (s, w) = self.atoms[i].clone();
                out.push((s, combine(w, W::zero())));
                i += 1;
            } else {
                let (s, w) = other.atoms[j].clone();
                out.push((s, combine(W::zero(), w)));
                j += 1;
            }
        }
        out.retain(|(_, w)| !is_dust(w));
        DiscreteMeasure { atoms: out }
    }

    /// Largest absolute difference of weights over all states.
    pub fn max_atom_diff(&self, other: &Self) -> W {
        let mut best = W::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let d = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some((a, wa)), Some((b, wb))) => {
                    if a == b {
                        let d = (wa.clone() - wb.clone()).abs();
                        i += 1;
                        j += 1;
                        d
                    } else if a < b {
                        i += 1;
                        wa.abs()
                    } else {
                        j += 1;
                        wb.abs()
                    }
                }
                (Some((_, wa)), None) => {
                    i += 1;
                    wa.abs()
                }
                (None, Some((_, wb))) => {
                    j += 1;
                    wb.abs()
                }
                (None, None) => unreachable!(),
            };
            if d > best {
                best = d;
            }
        }
        best
    }

    /// Total weight on the states accepted by `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(StateId) -> bool) -> W {
        let mut acc = W::zero();
        for (s, w) in &self.atoms {
            if pred(*s) {
                acc = acc + w.clone();
            }
        }
        acc
    }

    /// The measure restricted to the states accepted by `pred`.
    pub fn restrict(&self, mut pred: impl FnMut(StateId) -> bool) -> Self {
        DiscreteMeasure {
            atoms: self.atoms.iter().filter(|(s, _)| pred(*s)).cloned().collect(),
        }
    }

    /// Restriction to `pred` rescaled to unit mass, or `None` when the
    /// restricted mass vanishes (at or below dust).
    pub fn restrict_normalize(&self, pred: impl FnMut(StateId) -> bool) -> Option<Self> {
        self.restrict(pred).normalize()
    }

    /// The measure rescaled to unit mass, or `None` when the mass vanishes.
    pub fn normalize(&self) -> Option<Self> {
        let mass = self.total_mass();
        if is_dust(&mass) {
            return None;
        }
        Some(DiscreteMeasure::from_atoms(
            self.atoms.iter().map(|(s, w)| (*s, w.clone() / mass.clone())).collect(),
        ))
    }

    /// Applies `f` to every weight, producing a measure over another weight
    /// type. Dust filtering applies in the target type.
    pub fn map_weights<V: Weight>(&self, f: impl Fn(&W) -> V) -> DiscreteMeasure<V> {
        DiscreteMeasure::from_atoms(self.atoms.iter().map(|(s, w)| (*s, f(w))).collect())
    }
}

impl DiscreteMeasure<f64> {
    /// Embeds every weight exactly into another weight type.
    pub fn lift<W: Weight>(&self) -> DiscreteMeasure<W> {
        self.map_weights(|w| W::from_f64(*w))
    }
}

/// The weighted sum of measures: `sum_i c_i * m_i`.
pub fn combine<W: Weight>(parts: &[(W, DiscreteMeasure<W>)]) -> DiscreteMeasure<W> {
    let mut acc = DiscreteMeasure::zero_measure();
    for (c, m) in parts {
        acc = acc.add(&m.scale(c));
    }
    acc
}

fn is_dust<W: Weight>(w: &W) -> bool {
    w.is_zero() || w.abs() < W::dust_threshold()
}
