//! Geometric cross-checks for the shipped conformal systems: projection
//! diameters, box-counting dimension against the pressure root, convexity
//! and monotonicity of the pressure curve, and derivative consistency.

use std::collections::HashSet;
use std::sync::Arc;

use escapelab_core::gdms::Gdms;
use escapelab_core::thermo::GibbsState;

fn shipped() -> Vec<(&'static str, Gdms)> {
    vec![
        ("cantor-thirds", Gdms::cantor_thirds()),
        ("half-quarter", Gdms::half_quarter()),
        ("golden-mean-thirds", Gdms::golden_mean_thirds()),
        ("doubling-halves", Gdms::doubling_halves()),
    ]
}

#[test]
fn projection_diameters_shrink_geometrically() {
    for (name, g) in shipped() {
        let s = g.contraction_bound();
        for n in 1..=12usize {
            let index = g.subshift().cylinder_index(n).unwrap();
            // Endpoints carry absolute rounding error at the domain scale,
            // so the slack must be absolute, not relative to the tiny length.
            let bound = s.powi(n as i32) * g.domain().len() + 1e-13;
            for w in index.words() {
                let iv = g.project(&w).unwrap();
                assert!(iv.len() <= bound, "{name}: cylinder {w} has length {}", iv.len());
            }
        }
    }
}

/// Counts boxes of size `delta` hit by the depth-`n` cylinder intervals.
fn box_count(g: &Gdms, n: usize, delta: f64) -> usize {
    let index = g.subshift().cylinder_index(n).unwrap();
    let mut boxes: HashSet<i64> = HashSet::new();
    for w in index.words() {
        let iv = g.project(&w).unwrap();
        let j0 = (iv.lo() / delta).floor() as i64;
        let j1 = (iv.hi() / delta).floor() as i64;
        for j in j0..=j1 {
            boxes.insert(j);
        }
    }
    boxes.len()
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn box_counting_matches_pressure_root() {
    for (name, g) in shipped() {
        let b = g.bowen_parameter(1e-12).unwrap().value;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for n in 6..=12usize {
            // Scale set by the largest cylinder at this depth, so every
            // cylinder spans a bounded number of boxes.
            let index = g.subshift().cylinder_index(n).unwrap();
            let delta = index
                .words()
                .map(|w| g.project(&w).unwrap().len())
                .fold(0.0f64, f64::max);
            let count = box_count(&g, n, delta);
            xs.push((1.0 / delta).ln());
            ys.push((count as f64).ln());
        }
        let slope = ols_slope(&xs, &ys);
        assert!(
            (slope - b).abs() <= 0.02,
            "{name}: box-counting slope {slope} vs pressure root {b}"
        );
    }
}

#[test]
fn pressure_curve_is_decreasing_and_convex() {
    for (name, g) in shipped() {
        let values: Vec<f64> =
            (0..50).map(|i| g.pressure(i as f64 * 0.04).unwrap()).collect();
        for w in values.windows(2) {
            assert!(w[1] < w[0], "{name}: pressure failed to decrease");
        }
        for w in values.windows(3) {
            let second = w[2] - 2.0 * w[1] + w[0];
            assert!(second >= -1e-9, "{name}: convexity defect {second}");
        }
    }
}

#[test]
fn lyapunov_agrees_with_measure_weighted_contraction() {
    // Independent form of the exponent: the Gibbs-measure average of
    // −log|φ'| over depth-m cylinders.
    for (name, g) in shipped() {
        for t in [0.3, 0.8, 1.2] {
            let chi = g.lyapunov(t, 1e-14).unwrap();
            let state = g.gibbs_state(t, 1e-14).unwrap();
            let index = g.subshift().cylinder_index(g.log_derivative().depth()).unwrap();
            let averaged: f64 = index
                .words()
                .enumerate()
                .map(|(rank, w)| {
                    -g.log_derivative().values()[rank] * state.cylinder_measure(&w).unwrap()
                })
                .sum();
            assert!(chi > 0.0);
            assert!(
                (chi - averaged).abs() < 1e-11,
                "{name} at t={t}: eigen {chi} vs averaged {averaged}"
            );
        }
    }
}

#[test]
fn family_derivative_matches_finite_differences() {
    let h = 1e-5;
    for (name, g) in shipped() {
        let g = Arc::new(g);
        let fam = g.geometric_family();
        for t in [0.4, 1.0] {
            let state = GibbsState::compute(&fam.at(t).unwrap(), 1e-14).unwrap();
            let analytic = state.pressure_derivative(fam.derivative()).unwrap();
            let lam = |t: f64| GibbsState::compute(&fam.at(t).unwrap(), 1e-14).unwrap().lambda();
            let fd = (lam(t + h) - lam(t - h)) / (2.0 * h);
            assert!(
                (analytic - fd).abs() <= 1e-6 * fd.abs(),
                "{name} at t={t}: analytic {analytic} vs finite difference {fd}"
            );
        }
    }
}
