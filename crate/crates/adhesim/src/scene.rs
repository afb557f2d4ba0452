//! Problem instances: domain, obstacle, adhesion coefficient, boundary
//! conditions, and instance-level constants derived from them.
//!
//! A [`Scene`] is immutable after construction and cheap to share across
//! solver instances. The obstacle must be evaluable with two derivatives
//! (curvature terms need them); the adhesion coefficient must take values
//! in (0, 1). Both constraints are checked on a dense validation grid by
//! [`validate_scene`] rather than being silently assumed.

use crate::error::{AdhesimError, Result};
use crate::spline::CubicSpline;

/// Obstacle function ψ on [a, b] with first and second derivatives.
#[derive(Debug, Clone)]
pub enum Obstacle {
    /// ψ ≡ c.
    Flat(f64),
    /// ψ(x) = amplitude · sin(wavenumber · x) + offset.
    Sine {
        amplitude: f64,
        wavenumber: f64,
        offset: f64,
    },
    /// ψ(x) = Σ coeffs[k] x^k.
    Polynomial(Vec<f64>),
    /// C² natural cubic interpolation of tabulated values.
    Tabulated(CubicSpline),
}

impl Obstacle {
    /// Value, first and second derivative at `x`.
    pub fn eval2(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Obstacle::Flat(c) => (*c, 0.0, 0.0),
            Obstacle::Sine {
                amplitude,
                wavenumber,
                offset,
            } => {
                let (s, c) = (wavenumber * x).sin_cos();
                (
                    amplitude * s + offset,
                    amplitude * wavenumber * c,
                    -amplitude * wavenumber * wavenumber * s,
                )
            }
            Obstacle::Polynomial(coeffs) => {
                let mut v = 0.0;
                let mut d = 0.0;
                let mut dd = 0.0;
                for &c in coeffs.iter().rev() {
                    dd = dd * x + 2.0 * d;
                    d = d * x + v;
                    v = v * x + c;
                }
                (v, d, dd)
            }
            Obstacle::Tabulated(sp) => sp.eval2(x),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval2(x).0
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.eval2(x).1
    }
}

/// Adhesion coefficient α on [a, b], expected in (0, 1).
#[derive(Debug, Clone)]
pub enum Adhesion {
    Constant(f64),
    /// α(x) = base + amplitude · sin(wavenumber · x).
    Sine {
        base: f64,
        amplitude: f64,
        wavenumber: f64,
    },
    Tabulated(CubicSpline),
}

impl Adhesion {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Adhesion::Constant(a) => *a,
            Adhesion::Sine {
                base,
                amplitude,
                wavenumber,
            } => base + amplitude * (wavenumber * x).sin(),
            Adhesion::Tabulated(sp) => sp.eval(x),
        }
    }
}

/// Boundary condition at one endpoint of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// u = g at the endpoint; requires g ≥ ψ there.
    Dirichlet(f64),
    /// No constraint; solvers optimize the endpoint value.
    Free,
}

/// Default density of the validation grid used for invariant checks and
/// sup/inf approximations over continuous intervals.
pub const DEFAULT_VALIDATION_GRID: usize = 4096;

/// A problem instance. Immutable after construction; safe to share
/// read-only across concurrent solver instances.
#[derive(Debug, Clone)]
pub struct Scene {
    a: f64,
    b: f64,
    obstacle: Obstacle,
    adhesion: Adhesion,
    left: Boundary,
    right: Boundary,
    validation_grid: usize,
}

impl Scene {
    pub fn new(
        domain: (f64, f64),
        obstacle: Obstacle,
        adhesion: Adhesion,
        left: Boundary,
        right: Boundary,
    ) -> Result<Scene> {
        let (a, b) = domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(AdhesimError::SceneConfig(format!(
                "domain endpoints must be finite with a < b, got [{a}, {b}]"
            )));
        }
        if let Obstacle::Polynomial(c) = &obstacle {
            if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                return Err(AdhesimError::SceneConfig(
                    "polynomial obstacle needs at least one finite coefficient".into(),
                ));
            }
        }
        Ok(Scene {
            a,
            b,
            obstacle,
            adhesion,
            left,
            right,
            validation_grid: DEFAULT_VALIDATION_GRID,
        })
    }

    /// Overrides the validation grid density (default 4096).
    pub fn with_validation_grid(mut self, n: usize) -> Scene {
        self.validation_grid = n.max(16);
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn obstacle(&self) -> &Obstacle {
        &self.obstacle
    }

    pub fn adhesion(&self) -> &Adhesion {
        &self.adhesion
    }

    pub fn boundary(&self) -> (Boundary, Boundary) {
        (self.left, self.right)
    }

    pub fn validation_grid(&self) -> usize {
        self.validation_grid
    }

    /// ψ(x).
    pub fn psi(&self, x: f64) -> f64 {
        self.obstacle.value(x)
    }

    /// ψ, ψ_x, ψ_xx at x.
    pub fn psi2(&self, x: f64) -> (f64, f64, f64) {
        self.obstacle.eval2(x)
    }

    /// α(x).
    pub fn alpha(&self, x: f64) -> f64 {
        self.adhesion.value(x)
    }

    /// Tangent angle of the obstacle, θ_ψ(x) = arctan ψ_x(x).
    pub fn psi_angle(&self, x: f64) -> f64 {
        self.obstacle.slope(x).atan()
    }

    /// Uniform validation grid over [a, b], inclusive of both endpoints.
    pub fn validation_xs(&self) -> Vec<f64> {
        let n = self.validation_grid;
        (0..=n)
            .map(|i| self.a + (self.b - self.a) * i as f64 / n as f64)
            .collect()
    }

    /// max α over the validation grid.
    pub fn alpha_max(&self) -> f64 {
        self.validation_xs()
            .iter()
            .map(|&x| self.alpha(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// min α over the validation grid.
    pub fn alpha_min(&self) -> f64 {
        self.validation_xs()
            .iter()
            .map(|&x| self.alpha(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// sup |ψ| over the validation grid.
    pub fn psi_sup(&self) -> f64 {
        self.validation_xs()
            .iter()
            .map(|&x| self.psi(x).abs())
            .fold(0.0, f64::max)
    }

    /// Coincidence tolerance: solver-produced contact is recognized when
    /// u − ψ ≤ τ_adh. Floating-point contact is never exact, so the switch
    /// in the redefined adhesion coefficient uses this tolerance instead of
    /// an exact zero.
    pub fn tau_adh(&self) -> f64 {
        1e-9 * self.psi_sup().max(1.0)
    }

    /// Bundled preset scenes.
    ///
    /// * `flat` — flat obstacle, α ≡ 0.5 on (0,1), Dirichlet 0.1 both ends;
    ///   the minimizer is the analytic tent with contact angle π/3.
    /// * `ripple` — ψ = 0.05 sin(8πx), α ≡ 0.6, Dirichlet 0.1 both ends.
    /// * `twin` — flat obstacle with Dirichlet height ½√((1−α)/(1+α)) chosen
    ///   so a fully detached chord ties the two-contact tent exactly.
    /// * `adhered` — flat obstacle, Dirichlet on the obstacle; the minimizer
    ///   adheres everywhere.
    pub fn preset(name: &str) -> Result<Scene> {
        match name {
            "flat" => Scene::new(
                (0.0, 1.0),
                Obstacle::Flat(0.0),
                Adhesion::Constant(0.5),
                Boundary::Dirichlet(0.1),
                Boundary::Dirichlet(0.1),
            ),
            "ripple" => Scene::new(
                (0.0, 1.0),
                Obstacle::Sine {
                    amplitude: 0.05,
                    wavenumber: 8.0 * std::f64::consts::PI,
                    offset: 0.0,
                },
                Adhesion::Constant(0.6),
                Boundary::Dirichlet(0.1),
                Boundary::Dirichlet(0.1),
            ),
            "twin" => {
                let alpha = 0.5_f64;
                let h = 0.5 * ((1.0 - alpha) / (1.0 + alpha)).sqrt();
                Scene::new(
                    (0.0, 1.0),
                    Obstacle::Flat(0.0),
                    Adhesion::Constant(alpha),
                    Boundary::Dirichlet(h),
                    Boundary::Dirichlet(h),
                )
            }
            "adhered" => Scene::new(
                (0.0, 1.0),
                Obstacle::Flat(0.0),
                Adhesion::Constant(0.5),
                Boundary::Dirichlet(0.0),
                Boundary::Dirichlet(0.0),
            ),
            other => Err(AdhesimError::Config(format!(
                "unknown preset scene '{other}' (available: flat, ripple, twin, adhered)"
            ))),
        }
    }
}

/// One violated invariant, with a location when that makes sense.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Violation {
    pub message: String,
    pub location: Option<f64>,
}

/// Result of [`validate_scene`]: empty iff the scene satisfies every
/// instance invariant.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every Scene invariant on the validation grid and reports each
/// violation with its location. A valid scene yields an empty report.
pub fn validate_scene(scene: &Scene) -> ValidationReport {
    let mut report = ValidationReport::default();
    let xs = scene.validation_xs();

    for &x in &xs {
        let (v, d, dd) = scene.psi2(x);
        if !(v.is_finite() && d.is_finite() && dd.is_finite()) {
            report.violations.push(Violation {
                message: "obstacle not evaluable with two derivatives".into(),
                location: Some(x),
            });
            break;
        }
    }
    let mut alpha_bad = None;
    for &x in &xs {
        let a = scene.alpha(x);
        if !a.is_finite() || a <= 0.0 || a >= 1.0 {
            alpha_bad = Some((x, a));
            break;
        }
    }
    if let Some((x, a)) = alpha_bad {
        report.violations.push(Violation {
            message: format!("adhesion out of (0,1): alpha({x:.6}) = {a}"),
            location: Some(x),
        });
    }
    let (a, b) = scene.domain();
    for (x, bc, side) in [(a, scene.left, "left"), (b, scene.right, "right")] {
        if let Boundary::Dirichlet(g) = bc {
            let psi = scene.psi(x);
            if !g.is_finite() {
                report.violations.push(Violation {
                    message: format!("{side} boundary value not finite"),
                    location: Some(x),
                });
            } else if g < psi {
                report.violations.push(Violation {
                    message: format!(
                        "boundary value below obstacle: {side} g = {g} < psi({x:.6}) = {psi}"
                    ),
                    location: Some(x),
                });
            }
        }
    }
    report
}

/// Largest width δ (on a dyadic search grid, capped at b − a) such that every
/// subinterval I ⊂ (a, b) of width δ keeps the adhesion–tension margin
///
///   inf_I √(1+ψ_x²) − ᾱ · sup_I √(1+ψ_x²) ≥ (1 − ᾱ)/2,
///
/// with sup/inf approximated by extrema over the dense validation grid.
/// Such a δ always exists for valid scenes: as the window shrinks the margin
/// tends to (1 − ᾱ)√(1+ψ_x²) ≥ 1 − ᾱ.
pub fn coupling_margin_width(scene: &Scene) -> f64 {
    let xs = scene.validation_xs();
    let speeds: Vec<f64> = xs
        .iter()
        .map(|&x| (1.0 + scene.psi2(x).1.powi(2)).sqrt())
        .collect();
    let alpha_bar = scene.alpha_max();
    let need = 0.5 * (1.0 - alpha_bar);
    let width = scene.width();
    let n = xs.len();
    let h = width / (n - 1) as f64;

    // Window check on the sample grid: windows of `k` cells, slid over all
    // admissible offsets.
    let window_ok = |k: usize| -> bool {
        if k >= n {
            return margin_of(&speeds, 0, n - 1, alpha_bar) >= need;
        }
        // Sliding min/max via monotone deques would be O(n); the validation
        // grid is small enough that a simple two-pointer rescan is fine.
        let mut lo = speeds[0];
        let mut hi = speeds[0];
        let mut start = 0usize;
        for end in 0..n {
            if end - start > k {
                start = end - k;
                lo = speeds[start];
                hi = speeds[start];
                for &s in &speeds[start + 1..=end] {
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            } else {
                lo = lo.min(speeds[end]);
                hi = hi.max(speeds[end]);
            }
            if end >= k && lo - alpha_bar * hi < need {
                return false;
            }
        }
        true
    };

    if window_ok(n - 1) {
        return width;
    }
    // Dyadic bisection on the cell count.
    let mut ok = 1usize; // single-cell windows always pass (see doc comment)
    let mut bad = n - 1;
    while bad - ok > 1 {
        let mid = ok + (bad - ok) / 2;
        if window_ok(mid) {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    ok as f64 * h
}

fn margin_of(speeds: &[f64], i: usize, j: usize, alpha_bar: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &s in &speeds[i..=j] {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    lo - alpha_bar * hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_scene() -> Scene {
        Scene::preset("flat").unwrap()
    }

    #[test]
    fn valid_flat_scene_has_empty_report() {
        let report = validate_scene(&flat_scene());
        assert!(report.is_valid(), "unexpected: {:?}", report.violations);
    }

    #[test]
    fn adhesion_above_one_is_reported() {
        let scene = Scene::new(
            (0.0, 1.0),
            Obstacle::Flat(0.0),
            Adhesion::Constant(1.2),
            Boundary::Dirichlet(0.1),
            Boundary::Dirichlet(0.1),
        )
        .unwrap();
        let report = validate_scene(&scene);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("adhesion out of (0,1)")));
    }

    #[test]
    fn dirichlet_below_obstacle_is_reported() {
        let scene = Scene::new(
            (0.0, 1.0),
            Obstacle::Flat(0.0),
            Adhesion::Constant(0.5),
            Boundary::Dirichlet(-1.0),
            Boundary::Dirichlet(0.1),
        )
        .unwrap();
        let report = validate_scene(&scene);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("boundary value below obstacle")));
    }

    #[test]
    fn inverted_domain_is_a_config_error() {
        assert!(Scene::new(
            (1.0, 0.0),
            Obstacle::Flat(0.0),
            Adhesion::Constant(0.5),
            Boundary::Free,
            Boundary::Free,
        )
        .is_err());
    }

    #[test]
    fn flat_obstacle_margin_width_is_full_domain() {
        // inf = sup = 1, margin = 1 − 0.5 = 0.5 ≥ 0.25 everywhere.
        assert_eq!(coupling_margin_width(&flat_scene()), 1.0);
    }

    #[test]
    fn constant_obstacle_margin_width_is_full_domain() {
        let scene = Scene::new(
            (-2.0, 3.0),
            Obstacle::Flat(7.5),
            Adhesion::Constant(0.9),
            Boundary::Free,
            Boundary::Free,
        )
        .unwrap();
        assert_eq!(coupling_margin_width(&scene), 5.0);
    }

    /// Brute-force oracle: scan every window of width δ at fine resolution
    /// and verify the margin inequality directly.
    fn window_scan_holds(scene: &Scene, delta: f64, resolution: f64) -> bool {
        let (a, b) = scene.domain();
        let alpha_bar = scene.alpha_max();
        let speed = |x: f64| (1.0 + scene.psi2(x).1.powi(2)).sqrt();
        let mut x0 = a;
        while x0 + delta <= b + 1e-12 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut x = x0;
            while x <= x0 + delta + 1e-15 {
                let s = speed(x);
                lo = lo.min(s);
                hi = hi.max(s);
                x += resolution;
            }
            if lo - alpha_bar * hi < 0.5 * (1.0 - alpha_bar) - 1e-9 {
                return false;
            }
            x0 += resolution;
        }
        true
    }

    #[test]
    fn sine_obstacle_margin_width_matches_window_scan() {
        let scene = Scene::new(
            (0.0, 1.0),
            Obstacle::Sine {
                amplitude: 0.1,
                wavenumber: 10.0,
                offset: 0.0,
            },
            Adhesion::Constant(0.5),
            Boundary::Free,
            Boundary::Free,
        )
        .unwrap();
        let delta = coupling_margin_width(&scene);
        assert!(delta > 0.0);
        assert!(
            window_scan_holds(&scene, delta, 1e-4),
            "returned width {delta} fails the exhaustive window scan"
        );
    }

    #[test]
    fn margin_width_monotone_in_alpha() {
        // Pointwise larger ᾱ tightens the inequality, so δ cannot grow.
        let mk = |alpha: f64| {
            Scene::new(
                (0.0, 1.0),
                Obstacle::Sine {
                    amplitude: 0.15,
                    wavenumber: 12.0,
                    offset: 0.0,
                },
                Adhesion::Constant(alpha),
                Boundary::Free,
                Boundary::Free,
            )
            .unwrap()
        };
        let mut prev = f64::INFINITY;
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            let delta = coupling_margin_width(&mk(alpha));
            assert!(delta <= prev + 1e-12, "width grew when alpha rose");
            assert!(delta > 0.0);
            prev = delta;
        }
    }

    #[test]
    fn margin_inequality_holds_on_validation_grid_for_returned_width() {
        for name in ["flat", "ripple", "twin"] {
            let scene = Scene::preset(name).unwrap();
            let delta = coupling_margin_width(&scene);
            let xs = scene.validation_xs();
            let alpha_bar = scene.alpha_max();
            let speeds: Vec<f64> = xs
                .iter()
                .map(|&x| (1.0 + scene.psi2(x).1.powi(2)).sqrt())
                .collect();
            let h = scene.width() / (xs.len() - 1) as f64;
            let k = (delta / h).round() as usize;
            for start in 0..xs.len().saturating_sub(k) {
                let m = margin_of(&speeds, start, start + k, alpha_bar);
                assert!(
                    m >= 0.5 * (1.0 - alpha_bar) - 1e-12,
                    "margin {m} fails in window starting at {}",
                    xs[start]
                );
            }
        }
    }

    #[test]
    fn tabulated_obstacle_evaluates_through_spline() {
        let xs: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.1 * (3.0 * x).cos()).collect();
        let scene = Scene::new(
            (0.0, 1.0),
            Obstacle::Tabulated(CubicSpline::natural(&xs, &ys).unwrap()),
            Adhesion::Constant(0.5),
            Boundary::Dirichlet(0.2),
            Boundary::Dirichlet(0.2),
        )
        .unwrap();
        assert!(validate_scene(&scene).is_valid());
        assert!((scene.psi(0.5) - 0.1 * 1.5f64.cos()).abs() < 1e-3);
    }
}
