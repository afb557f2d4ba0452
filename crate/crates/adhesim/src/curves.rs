//! Geometric energies of planar W^{2,1}-curves: length, bending, boundary
//! warp angles and the boundary warp energy, together with the rigid-motion
//! machinery the invariance suite exercises.
//!
//! Curves carry explicit derivative samples (analytic for presets, spline
//! derivatives for random test curves) instead of differenced positions;
//! that keeps the bending integrand accurate near high curvature.

use crate::error::{AdhesimError, Result};
use crate::spline::CubicSpline;

/// A sampled regular planar curve on the parameter interval [0, 1].
#[derive(Debug, Clone)]
pub struct ParametricCurve {
    pub t: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub d1: Vec<[f64; 2]>,
    pub d2: Vec<[f64; 2]>,
}

/// The five quantities of a curve: length L, bending B, boundary warp
/// angles θ⁰/θ¹ against the chord, and warp energy
/// W = 4(2√2 − √(1+cos θ⁰) − √(1+cos θ¹)).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CurveEnergies {
    pub length: f64,
    pub bending: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub warp: f64,
}

impl ParametricCurve {
    /// Builds a curve by sampling `f(t) -> (point, d1, d2)` at `n+1`
    /// uniformly spaced parameters.
    pub fn from_fn<F>(n: usize, f: F) -> Result<ParametricCurve>
    where
        F: Fn(f64) -> ([f64; 2], [f64; 2], [f64; 2]),
    {
        let n = n.max(2);
        let mut t = Vec::with_capacity(n + 1);
        let mut points = Vec::with_capacity(n + 1);
        let mut d1 = Vec::with_capacity(n + 1);
        let mut d2 = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let ti = i as f64 / n as f64;
            let (p, v, a) = f(ti);
            t.push(ti);
            points.push(p);
            d1.push(v);
            d2.push(a);
        }
        let curve = ParametricCurve { t, points, d1, d2 };
        curve.check_regular()?;
        Ok(curve)
    }

    /// Straight segment between two points.
    pub fn segment(from: [f64; 2], to: [f64; 2], n: usize) -> Result<ParametricCurve> {
        let v = [to[0] - from[0], to[1] - from[1]];
        ParametricCurve::from_fn(n, |t| {
            (
                [from[0] + t * v[0], from[1] + t * v[1]],
                v,
                [0.0, 0.0],
            )
        })
    }

    /// Circular arc of the given radius and half-angle, endpoints on a
    /// horizontal chord, traversed left to right. Both warp angles equal
    /// `half_angle`.
    pub fn arc(radius: f64, half_angle: f64, n: usize) -> Result<ParametricCurve> {
        if radius <= 0.0 || half_angle <= 0.0 {
            return Err(AdhesimError::Degenerate(
                "arc needs positive radius and half-angle".into(),
            ));
        }
        ParametricCurve::from_fn(n, |t| {
            let phi = (2.0 * t - 1.0) * half_angle;
            let (s, c) = phi.sin_cos();
            let rate = 2.0 * half_angle;
            (
                [radius * s, -radius * c],
                [radius * rate * c, radius * rate * s],
                [-radius * rate * rate * s, radius * rate * rate * c],
            )
        })
    }

    /// Curve through the graph of a natural cubic spline pair
    /// (x(t), y(t)) fitted to control points at uniform parameters.
    pub fn from_control_points(control: &[[f64; 2]], n: usize) -> Result<ParametricCurve> {
        if control.len() < 2 {
            return Err(AdhesimError::Degenerate(
                "spline curve needs at least 2 control points".into(),
            ));
        }
        let ts: Vec<f64> = (0..control.len())
            .map(|i| i as f64 / (control.len() - 1) as f64)
            .collect();
        let xs: Vec<f64> = control.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = control.iter().map(|p| p[1]).collect();
        let sx = CubicSpline::natural(&ts, &xs)
            .ok_or_else(|| AdhesimError::Degenerate("spline fit failed".into()))?;
        let sy = CubicSpline::natural(&ts, &ys)
            .ok_or_else(|| AdhesimError::Degenerate("spline fit failed".into()))?;
        ParametricCurve::from_fn(n, |t| {
            let (x, dx, ddx) = sx.eval2(t);
            let (y, dy, ddy) = sy.eval2(t);
            ([x, y], [dx, dy], [ddx, ddy])
        })
    }

    fn check_regular(&self) -> Result<()> {
        if self.t.len() < 2
            || self.t[0] != 0.0
            || (*self.t.last().expect("nonempty") - 1.0).abs() > 1e-12
        {
            return Err(AdhesimError::Degenerate(
                "parameter samples must cover [0,1]".into(),
            ));
        }
        for (i, v) in self.d1.iter().enumerate() {
            let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if speed <= 0.0 || !speed.is_finite() {
                return Err(AdhesimError::Degenerate(format!(
                    "curve is not regular: |γ'| = {speed} at t = {}",
                    self.t[i]
                )));
            }
        }
        Ok(())
    }

    pub fn start(&self) -> [f64; 2] {
        self.points[0]
    }

    pub fn end(&self) -> [f64; 2] {
        *self.points.last().expect("nonempty")
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle in [0, π] between two nonzero vectors, with the normalized inner
/// product clamped to [−1, 1] before arccos.
fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    let c = (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0);
    c.acos()
}

/// Warp energy of a pair of boundary angles.
pub fn warp_energy(theta0: f64, theta1: f64) -> f64 {
    4.0 * (2.0 * std::f64::consts::SQRT_2
        - (1.0 + theta0.cos()).sqrt()
        - (1.0 + theta1.cos()).sqrt())
}

/// Computes {L, B, θ⁰, θ¹, W} by trapezoid quadrature over the parameter.
///
/// The chord is the segment from γ(0) to γ(1); coincident endpoints leave it
/// undefined and are rejected.
pub fn curve_energies(curve: &ParametricCurve) -> Result<CurveEnergies> {
    curve.check_regular()?;
    let chord = [
        curve.end()[0] - curve.start()[0],
        curve.end()[1] - curve.start()[1],
    ];
    if norm(chord) < 1e-14 {
        return Err(AdhesimError::Degenerate(
            "coincident endpoints: chord undefined".into(),
        ));
    }
    let n = curve.t.len();
    let mut length = 0.0;
    let mut bending = 0.0;
    let mut prev_speed = 0.0;
    let mut prev_bend = 0.0;
    for i in 0..n {
        let v = curve.d1[i];
        let a = curve.d2[i];
        let speed = norm(v);
        let cross = (v[0] * a[1] - v[1] * a[0]).abs();
        let kappa = cross / (speed * speed * speed);
        let bend = kappa * kappa * speed;
        if i > 0 {
            let dt = curve.t[i] - curve.t[i - 1];
            length += 0.5 * dt * (prev_speed + speed);
            bending += 0.5 * dt * (prev_bend + bend);
        }
        prev_speed = speed;
        prev_bend = bend;
    }
    let theta0 = angle_between(curve.d1[0], chord);
    let theta1 = angle_between(*curve.d1.last().expect("nonempty"), chord);
    Ok(CurveEnergies {
        length,
        bending,
        theta0,
        theta1,
        warp: warp_energy(theta0, theta1),
    })
}

/// Applies reflection (across the x-axis), then rotation, then translation.
/// Derivative samples transform by the same linear map, so the energies are
/// preserved to roundoff.
pub fn rigid_transform(
    curve: &ParametricCurve,
    rotation: f64,
    translation: [f64; 2],
    reflect: bool,
) -> ParametricCurve {
    let (s, c) = rotation.sin_cos();
    let refl = if reflect { -1.0 } else { 1.0 };
    let lin = |v: [f64; 2]| -> [f64; 2] {
        let y = refl * v[1];
        [c * v[0] - s * y, s * v[0] + c * y]
    };
    ParametricCurve {
        t: curve.t.clone(),
        points: curve
            .points
            .iter()
            .map(|&p| {
                let q = lin(p);
                [q[0] + translation[0], q[1] + translation[1]]
            })
            .collect(),
        d1: curve.d1.iter().map(|&v| lin(v)).collect(),
        d2: curve.d2.iter().map(|&v| lin(v)).collect(),
    }
}
