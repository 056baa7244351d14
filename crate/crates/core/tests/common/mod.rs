//! Finite-difference oracle shared by the gradient and acceptance suites.
#![allow(dead_code)]

use deepokan::linalg::Matrix;
use deepokan::network::Network;
use deepokan::operator::OperatorModel;
use deepokan::rng::{stream, uniform, Stream};
use rand_xoshiro::SplitMix64;

pub const STEP: f64 = 1e-6;
pub const TOL: f64 = 1e-6;
pub const SEEDS: u64 = 20;

pub fn rng(seed: u64) -> SplitMix64 {
    stream(seed, Stream::Data, 99)
}

pub fn randn(rng: &mut SplitMix64, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, -scale, scale)).collect()
}

/// Central differences of `f` at `x`.
pub fn numeric_gradient(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + STEP;
            let up = f(&probe);
            probe[i] = x[i] - STEP;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

/// Norm-wise relative error `‖a − n‖ / max(‖a‖, ‖n‖)`, after asserting that no
/// single entry is off by more than 1e-4 relative (denominator floored at 1e-3 of
/// the largest entry, below which central differences are dominated by roundoff).
pub fn worst_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let e = (a - n).abs() / a.abs().max(n.abs()).max(1e-3 * scale).max(f64::MIN_POSITIVE);
        assert!(e < 1e-4, "entry {i}: analytic {a} numeric {n}");
    }
    let diff = analytic.iter().zip(numeric).map(|(a, n)| (a - n) * (a - n)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = norm(analytic).max(norm(numeric));
    if denom == 0.0 {
        0.0
    } else {
        diff / denom
    }
}

/// Checks `dL/dθ` and `dL/dx` for `L = u · net(x)`.
pub fn check_network<N: Network>(net: &N, x: &[f64], u: &[f64]) -> (f64, f64) {
    let (_, tape) = net.forward(x).unwrap();
    let mut analytic = vec![0.0; net.param_count()];
    let dx = net.backward_into(&tape, u, &mut analytic).unwrap();
    let dot = |y: Vec<f64>| y.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();

    let theta = net.params();
    let mut probe = net.clone();
    let numeric = numeric_gradient(&theta, |p| {
        probe.set_params(p).unwrap();
        dot(probe.predict(x).unwrap())
    });
    let numeric_dx = numeric_gradient(x, |xp| dot(net.predict(xp).unwrap()));
    (worst_relative_error(&analytic, &numeric), worst_relative_error(&dx, &numeric_dx))
}

pub fn check_operator<N: Network>(model: &OperatorModel<N>, q: &[f64], coords: &Matrix, u: &[f64]) -> f64 {
    let (_, tape) = model.forward(q, coords).unwrap();
    let analytic = model.backward(&tape, u).unwrap().to_flat();
    let mut probe = model.clone();
    let numeric = numeric_gradient(&model.params(), |p| {
        probe.set_params(p).unwrap();
        let y = probe.predict(q, coords).unwrap();
        y.values().iter().zip(u).map(|(a, b)| a * b).sum()
    });
    worst_relative_error(&analytic, &numeric)
}
