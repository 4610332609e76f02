//! Property-based checks of the crate's algebraic and metric invariants:
//! measure-space linearity, flat-metric axioms, operator duality, verdict
//! monotonicity in the horizon, and the closed-form selection rules.

use eprop_core::{
    cesaro_average, choose_k, combine, dual_iterate, eproperty_profile, flat_distance, integrate,
    iterate, oscillation_bound, DecompositionConfig, DiscreteMeasure, MetricModel, MetricRule,
    Observable, ProbePlan, StateId, StateInfo,
};
use proptest::prelude::*;

/// A chain of states on the real line with strictly positive gaps, a
/// strictly positive row-stochastic kernel, and a solvable invariant
/// measure. Distinct coordinates make the induced metric a true metric.
fn line_model(gaps: Vec<f64>, raw_rows: Vec<Vec<f64>>) -> MetricModel {
    let n = gaps.len() + 1;
    let mut coord = 0.0;
    let mut states = Vec::with_capacity(n);
    states.push(StateInfo::new("p0", vec![0.0]));
    for (i, g) in gaps.iter().enumerate() {
        coord += g;
        states.push(StateInfo::new(format!("p{}", i + 1), vec![coord]));
    }
    let kernel = raw_rows
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            DiscreteMeasure::from_atoms(
                row.iter().enumerate().map(|(j, u)| (StateId(j), u / total)).collect(),
            )
        })
        .collect();
    MetricModel::new("line", states, MetricRule::RealAbs, kernel, None)
        .expect("construction satisfies the model axioms")
}

fn arb_line_model(max_states: usize, spread: f64) -> impl Strategy<Value = MetricModel> {
    (2..=max_states)
        .prop_flat_map(move |n| {
            (
                prop::collection::vec(0.01..spread, n - 1),
                prop::collection::vec(prop::collection::vec(0.01..1.0f64, n), n),
            )
        })
        .prop_map(|(gaps, rows)| line_model(gaps, rows))
}

fn arb_observable(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

fn observable_on(model: &MetricModel, values: Vec<f64>) -> Observable {
    let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut lip = 0.0f64;
    for a in model.state_ids() {
        for b in model.state_ids() {
            if a.index() < b.index() {
                let d = model.distance(a, b);
                if d > 0.0 {
                    lip = lip.max((values[a.index()] - values[b.index()]).abs() / d);
                }
            }
        }
    }
    Observable::new(model, values, sup, lip * (1.0 + 1e-9) + 1e-12)
        .expect("bounds computed from the values themselves")
}

fn pow(base: f64, exp: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_algebra_is_linear(
        m in arb_line_model(6, 1.0),
        w1 in prop::collection::vec(0.0..1.0f64, 6),
        w2 in prop::collection::vec(0.0..1.0f64, 6),
        c in 0.0..4.0f64,
    ) {
        let n = m.num_states();
        let a = DiscreteMeasure::from_atoms(
            w1[..n].iter().enumerate().map(|(i, x)| (StateId(i), *x)).collect(),
        );
        let b = DiscreteMeasure::from_atoms(
            w2[..n].iter().enumerate().map(|(i, x)| (StateId(i), *x)).collect(),
        );
        let sum = a.add(&b);
        prop_assert!((sum.total_mass() - (a.total_mass() + b.total_mass())).abs() <= 1e-12);
        prop_assert!((a.scale(&c).total_mass() - c * a.total_mass()).abs() <= 1e-12);
        // Adding then subtracting recovers the original atoms.
        prop_assert!(sum.sub(&b).max_atom_diff(&a) <= 1e-12);
    }

    #[test]
    fn combine_matches_manual_mixture(
        m in arb_line_model(5, 1.0),
        seeds in prop::collection::vec(0.0..1.0f64, 10),
        c1 in 0.01..2.0f64,
        c2 in 0.01..2.0f64,
    ) {
        let n = m.num_states();
        let a = DiscreteMeasure::from_atoms(
            seeds[..n].iter().enumerate().map(|(i, x)| (StateId(i), *x)).collect(),
        );
        let b = DiscreteMeasure::from_atoms(
            seeds[5..5 + n].iter().enumerate().map(|(i, x)| (StateId(i), *x)).collect(),
        );
        let mixed = combine(&[(c1, a.clone()), (c2, b.clone())]);
        let manual = a.scale(&c1).add(&b.scale(&c2));
        prop_assert!(mixed.max_atom_diff(&manual) <= 1e-15);
    }

    #[test]
    fn residual_split_reconstructs_the_measure(
        m in arb_line_model(5, 1.0),
        seeds in prop::collection::vec(0.0..1.0f64, 10),
        alpha in 0.05..0.95f64,
    ) {
        let n = m.num_states();
        let mu = DiscreteMeasure::from_atoms(
            seeds[..n].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        let nu = DiscreteMeasure::from_atoms(
            seeds[5..5 + n].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        // The split residual, remixed with the split part, recovers mu even
        // when the residual is a signed measure.
        let resid = mu.sub(&nu.scale(&alpha)).map_weights(|w| w / (1.0 - alpha));
        let remixed = combine(&[(alpha, nu), (1.0 - alpha, resid)]);
        prop_assert!(remixed.max_atom_diff(&mu) <= 1e-12);
    }

    #[test]
    fn flat_metric_satisfies_the_axioms(
        m in arb_line_model(5, 1.5),
        seeds in prop::collection::vec(0.0..1.0f64, 15),
    ) {
        let n = m.num_states();
        let pick = |offset: usize| {
            DiscreteMeasure::from_atoms(
                seeds[offset..offset + n]
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (StateId(i), x + 0.01))
                    .collect(),
            )
            .normalize()
            .unwrap()
        };
        let (mu, nu, rho) = (pick(0), pick(5), pick(10));

        let d_mn = flat_distance(&m, &mu, &nu).unwrap().value;
        let d_nm = flat_distance(&m, &nu, &mu).unwrap().value;
        let d_mr = flat_distance(&m, &mu, &rho).unwrap().value;
        let d_nr = flat_distance(&m, &nu, &rho).unwrap().value;

        prop_assert!(d_mn >= 0.0);
        prop_assert!(d_mn <= 2.0 + 1e-9);
        prop_assert_eq!(d_mn.to_bits(), d_nm.to_bits(), "symmetry must be bit-exact");
        prop_assert_eq!(flat_distance(&m, &mu, &mu).unwrap().value, 0.0);
        prop_assert!(d_mr <= d_mn + d_nr + 1e-9, "triangle: {d_mr} vs {d_mn} + {d_nr}");
    }

    #[test]
    fn flat_metric_distinguishes_distinct_measures(
        m in arb_line_model(4, 1.0),
        seeds in prop::collection::vec(0.0..1.0f64, 8),
    ) {
        let n = m.num_states();
        let mu = DiscreteMeasure::from_atoms(
            seeds[..n].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        let nu = DiscreteMeasure::from_atoms(
            seeds[4..4 + n].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        let d = flat_distance(&m, &mu, &nu).unwrap().value;
        let gap = mu.max_atom_diff(&nu);
        if gap > 1e-6 {
            // Atomwise separation forces metric separation: the function
            // that is the min of the distance to the heavier state and the
            // smallest positive gap witnesses a positive value.
            prop_assert!(d > 0.0, "measures differ by {gap} but flat distance is 0");
        } else {
            prop_assert!(d <= 1e-4);
        }
    }

    #[test]
    fn flat_metric_is_convex_in_mixtures(
        m in arb_line_model(4, 1.0),
        seeds in prop::collection::vec(0.0..1.0f64, 16),
        lambda in 0.0..1.0f64,
    ) {
        let n = m.num_states();
        let pick = |offset: usize| {
            DiscreteMeasure::from_atoms(
                seeds[offset..offset + n]
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (StateId(i), x + 0.01))
                    .collect(),
            )
            .normalize()
            .unwrap()
        };
        let (a, b, c, d) = (pick(0), pick(4), pick(8), pick(12));
        let left = combine(&[(lambda, a.clone()), (1.0 - lambda, b.clone())]);
        let right = combine(&[(lambda, c.clone()), (1.0 - lambda, d.clone())]);
        let mixed = flat_distance(&m, &left, &right).unwrap().value;
        let ac = flat_distance(&m, &a, &c).unwrap().value;
        let bd = flat_distance(&m, &b, &d).unwrap().value;
        prop_assert!(mixed <= lambda * ac + (1.0 - lambda) * bd + 1e-9);
    }

    #[test]
    fn lp_potential_witnesses_its_own_value(
        m in arb_line_model(5, 1.5),
        seeds in prop::collection::vec(0.0..1.0f64, 10),
    ) {
        let n = m.num_states();
        let mu = DiscreteMeasure::from_atoms(
            seeds[..n].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        let nu = DiscreteMeasure::from_atoms(
            seeds[5..5 + n].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        let sol = flat_distance(&m, &mu, &nu).unwrap();
        // The potential must be feasible for the defining program...
        for &(s, fs) in &sol.potential {
            prop_assert!(fs.abs() <= 1.0 + 1e-9);
            for &(t, ft) in &sol.potential {
                prop_assert!((fs - ft).abs() <= m.distance(s, t) + 1e-9);
            }
        }
        // ... and integrate against mu - nu to exactly the reported value.
        let diff = mu.sub(&nu);
        let attained: f64 =
            sol.potential.iter().map(|&(s, fs)| fs * diff.weight(s)).sum();
        prop_assert!((attained - sol.value).abs() <= 1e-9);
    }

    #[test]
    fn duality_holds_on_random_chains(
        m in arb_line_model(5, 1.0),
        fv in arb_observable(5),
        seeds in prop::collection::vec(0.0..1.0f64, 5),
        n in 1usize..30,
    ) {
        let k = m.num_states();
        let f = observable_on(&m, fv[..k].to_vec());
        let mu = DiscreteMeasure::from_atoms(
            seeds[..k].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        let forward = integrate(&f, &iterate(&m, &mu, n));
        let backward = integrate(&dual_iterate(&m, &f, n), &mu);
        prop_assert!((forward - backward).abs() <= 1e-12 * n as f64 + 1e-13);
    }

    #[test]
    fn push_forward_preserves_mass(
        m in arb_line_model(6, 1.0),
        seeds in prop::collection::vec(0.0..1.0f64, 6),
        n in 1usize..40,
    ) {
        let k = m.num_states();
        let mu = DiscreteMeasure::from_atoms(
            seeds[..k].iter().enumerate().map(|(i, x)| (StateId(i), x + 0.01)).collect(),
        )
        .normalize()
        .unwrap();
        let pushed = iterate(&m, &mu, n);
        prop_assert!((pushed.total_mass() - 1.0).abs() <= 1e-9);
        for (_, w) in pushed.atoms() {
            prop_assert!(*w >= 0.0);
        }
    }

    #[test]
    fn dual_iteration_contracts_within_bounds(
        m in arb_line_model(5, 1.0),
        fv in arb_observable(5),
        n in 1usize..30,
    ) {
        // Dual iterates of a row-stochastic kernel are averages, so they
        // never leave the value range of the original observable.
        let k = m.num_states();
        let f = observable_on(&m, fv[..k].to_vec());
        let lo = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let un = dual_iterate(&m, &f, n);
        for &v in un.values() {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
        let an = cesaro_average(&m, &f, n);
        for &v in an.values() {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn profile_gaps_grow_with_the_horizon(
        m in arb_line_model(5, 1.0),
        fv in arb_observable(5),
        h1 in 5usize..40,
        extra in 0usize..40,
    ) {
        // The tail-sup over a window can only grow when the window grows.
        let k = m.num_states();
        let f = observable_on(&m, fv[..k].to_vec());
        let target = StateId(0);
        let mut probes: Vec<StateId> = m.state_ids().skip(1).collect();
        probes.sort_by(|a, b| {
            m.distance(*b, target).partial_cmp(&m.distance(*a, target)).unwrap()
        });
        let plan1 = ProbePlan { target, probes: probes.clone(), horizon: h1, tail_start: 1 };
        let plan2 = ProbePlan { target, probes, horizon: h1 + extra, tail_start: 1 };
        let r1 = eproperty_profile(&m, &f, &plan1, 1e-6).unwrap();
        let r2 = eproperty_profile(&m, &f, &plan2, 1e-6).unwrap();
        for (a, b) in r1.rows.iter().zip(r2.rows.iter()) {
            prop_assert!(b.gap >= a.gap - 1e-15);
        }
    }

    #[test]
    fn k_selection_is_minimal(
        alpha in 0.02..0.98f64,
        sup in 0.0..3.0f64,
        eps in 1e-6..3.0f64,
    ) {
        let k = choose_k(alpha, sup, eps);
        prop_assert!(k >= 1);
        prop_assert!(2.0 * pow(1.0 - alpha, k) * sup < eps);
        if k > 1 {
            prop_assert!(2.0 * pow(1.0 - alpha, k - 1) * sup >= eps);
        }
    }

    #[test]
    fn oscillation_bound_interpolates_its_extremes(
        alpha in 0.02..0.98f64,
        k in 1usize..20,
        eps_ball in 0.0..2.0f64,
        sup in 0.0..2.0f64,
    ) {
        let m = eprop_core::build_doeblin3();
        let f = Observable::new(&m, vec![0.0, sup, sup], sup, sup + 1e-12).unwrap();
        let cfg = DecompositionConfig {
            x0: StateId(1),
            z: StateId(0),
            r: 0.5,
            alpha,
            k,
            n_search: 10,
            epsilon: 0.05,
        };
        let b = oscillation_bound(&cfg, &f, eps_ball);
        let twos = 2.0 * sup;
        let lo = eps_ball.min(twos);
        let hi = eps_ball.max(twos);
        prop_assert!(b >= lo - 1e-12 && b <= hi + 1e-12);
    }
}
