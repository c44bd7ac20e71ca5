//! Property tests for the spectral layer on randomly generated primitive
//! subshifts and locally constant potentials: enumeration identities,
//! measure consistency, normalization, and partition-sum bounds.

use std::sync::Arc;

use escapelab_core::symbolic::{Primitivity, Subshift};
use escapelab_core::thermo::{GibbsState, Potential, PressureMethod, TransferMatrix};
use proptest::prelude::*;

/// Random primitive subshift on up to four letters with a random potential
/// of depth one or two.
fn instances() -> impl Strategy<Value = Potential> {
    (1usize..=4)
        .prop_flat_map(|k| {
            proptest::collection::vec(proptest::bool::ANY, k * k).prop_map(move |bits| {
                let rows: Vec<Vec<bool>> = bits.chunks(k).map(|c| c.to_vec()).collect();
                Subshift::new(rows)
            })
        })
        .prop_filter_map("not a primitive subshift", |r| {
            let s = r.ok()?;
            let max_p = s.alphabet_size() * s.alphabet_size() + 2;
            match s.is_finitely_primitive(max_p) {
                Primitivity::Primitive { .. } => Some(Arc::new(s)),
                _ => None,
            }
        })
        .prop_flat_map(|shift| {
            (1usize..=2).prop_flat_map(move |depth| {
                let n = shift.cylinder_index(depth).unwrap().len();
                let shift = shift.clone();
                proptest::collection::vec(-2.0f64..1.0, n)
                    .prop_map(move |values| Potential::new(shift.clone(), depth, values).unwrap())
            })
        })
}

fn matvec(m: &TransferMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.states()];
    for i in 0..m.states() {
        for (j, v) in m.row(i) {
            y[i] += v * x[j];
        }
    }
    y
}

fn log_power_sum(m: &TransferMatrix, n: usize) -> f64 {
    let mut v = vec![1.0; m.states()];
    let mut log_scale = 0.0;
    for _ in 0..n {
        v = matvec(m, &v);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for x in v.iter_mut() {
            *x /= max;
        }
        log_scale += max.ln();
    }
    log_scale + v.iter().sum::<f64>().ln()
}

fn log_enumeration_sum(p: &Potential, n: usize) -> f64 {
    let index = p.subshift().cylinder_index(n + p.depth()).unwrap();
    let sums: Vec<f64> = index.words().map(|v| p.birkhoff(&v, n).unwrap()).collect();
    let max = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + sums.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

proptest! {
    #[test]
    fn birkhoff_enumeration_matches_matrix_powers(p in instances(), n in 1usize..=5) {
        let m = p.transfer_matrix().unwrap();
        let via_powers = log_power_sum(&m, n);
        let via_words = log_enumeration_sum(&p, n);
        prop_assert!((via_powers - via_words).abs() < 1e-11 * (1.0 + via_powers.abs()));
    }

    #[test]
    fn cylinder_measures_are_markov_consistent(p in instances()) {
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        let shift = p.subshift();
        for len in 1..=3usize {
            let index = shift.cylinder_index(len).unwrap();
            let total: f64 = index.words().map(|w| g.cylinder_measure(&w).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-11);
            for w in index.words() {
                let direct = g.cylinder_measure(&w).unwrap();
                let raw: Vec<u32> = w.letters().iter().map(|l| l.0).collect();
                let refined: f64 = shift
                    .successors(w.last().unwrap())
                    .iter()
                    .map(|&e| {
                        let mut v = raw.clone();
                        v.push(e.0);
                        g.cylinder_measure(&shift.word(&v).unwrap()).unwrap()
                    })
                    .sum();
                prop_assert!((refined - direct).abs() < 1e-12);
                let extended: f64 = shift
                    .letters()
                    .filter(|&e| shift.admits(e, w.first().unwrap()))
                    .map(|e| {
                        let mut v = vec![e.0];
                        v.extend_from_slice(&raw);
                        g.cylinder_measure(&shift.word(&v).unwrap()).unwrap()
                    })
                    .sum();
                prop_assert!((extended - direct).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn normalization_invariants(p in instances()) {
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        let tilde = g.normalize().unwrap();
        // Pressure drops to zero and the operator fixes constants: the
        // incoming weights of every state sum to one.
        prop_assert!(tilde.pressure(PressureMethod::Spectral).unwrap().abs() < 1e-10);
        let m = tilde.transfer_matrix().unwrap();
        let mut incoming = vec![0.0; m.states()];
        for i in 0..m.states() {
            for (j, v) in m.row(i) {
                incoming[j] += v;
            }
        }
        for (j, sum) in incoming.iter().enumerate() {
            prop_assert!((sum - 1.0).abs() < 1e-10, "state {} receives {}", j, sum);
        }
        // Same Gibbs measure, and a second normalization changes nothing.
        let gt = GibbsState::compute(&tilde, 1e-13).unwrap();
        let index = p.subshift().cylinder_index(2).unwrap();
        for w in index.words() {
            let a = g.cylinder_measure(&w).unwrap();
            let b = gt.cylinder_measure(&w).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
        let tilde2 = gt.normalize().unwrap();
        prop_assert!(tilde2.agrees_with(&tilde, 1e-9).unwrap());
    }

    #[test]
    fn partition_pressure_bounds_spectral_from_above(p in instances(), n in 1usize..=6) {
        // The sup-partition sums are submultiplicative, so every finite-n
        // value sits at or above the limit, which the spectral method
        // computes exactly.
        let spectral = p.pressure(PressureMethod::Spectral).unwrap();
        let partition = p.pressure(PressureMethod::Partition { n }).unwrap();
        prop_assert!(partition >= spectral - 1e-9);
    }

    #[test]
    fn extend_depth_preserves_spectral_data(p in instances()) {
        let deeper = p.extend_depth(p.depth() + 1).unwrap();
        let a = p.pressure(PressureMethod::Spectral).unwrap();
        let b = deeper.pressure(PressureMethod::Spectral).unwrap();
        prop_assert!((a - b).abs() < 1e-11);
        let ga = GibbsState::compute(&p, 1e-13).unwrap();
        let gb = GibbsState::compute(&deeper, 1e-13).unwrap();
        let index = p.subshift().cylinder_index(3).unwrap();
        for w in index.words() {
            let x = ga.cylinder_measure(&w).unwrap();
            let y = gb.cylinder_measure(&w).unwrap();
            prop_assert!((x - y).abs() < 1e-11);
        }
    }
}
