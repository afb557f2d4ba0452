//! Small quadrature toolbox: fixed Gauss–Legendre panels and an adaptive
//! panel-doubling driver.
//!
//! The solver-facing energies use trapezoid sums on the solution grid (that
//! is part of their contract); the rules here back the analytic integrals —
//! adhered-edge costs, the boundary-layer phase-plane integrals, and the
//! independent oracles used in tests.

/// 8-point Gauss–Legendre nodes on (-1, 1), positive half (rule is symmetric).
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_328_99,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// 8-point Gauss–Legendre on [a, b].
pub fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for k in 0..4 {
        let dx = half * GL8_NODES[k];
        sum += GL8_WEIGHTS[k] * (f(mid - dx) + f(mid + dx));
    }
    half * sum
}

/// Composite 8-point Gauss–Legendre with `panels` equal panels on [a, b].
pub fn gauss8_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(1);
    let w = (b - a) / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let x0 = a + i as f64 * w;
        sum += gauss8(f, x0, x0 + w);
    }
    sum
}

/// Panel-doubling adaptive quadrature: doubles the composite panel count
/// until two successive refinements agree to `tol` (absolute, scaled by the
/// magnitude of the value), then returns the finer value.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut panels = 1;
    let mut prev = gauss8_composite(f, a, b, panels);
    loop {
        panels *= 2;
        let next = gauss8_composite(f, a, b, panels);
        if (next - prev).abs() <= tol * next.abs().max(1.0) || panels >= 1 << 14 {
            return next;
        }
        prev = next;
    }
}
