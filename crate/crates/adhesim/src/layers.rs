//! Boundary-layer machinery: the slope-transition cost function, the layer
//! ODE solved by phase-plane quadrature, and the recovery-profile builder
//! that glues layers, radius-ε circular arcs and a segment into an
//! admissible profile.
//!
//! The layer profile solves
//!
//! ```text
//! U'' = (1/ε)(1+(U')²)^{5/4} √(√(1+(U')²) − 1),   U(0) = 0, U'(0) = tan θ,
//! ```
//!
//! on (−∞, 0]. Along solutions the ε-weighted bending density equals the
//! (1/ε)-weighted excess-length density exactly (equipartition), so the
//! energy of a truncated layer telescopes to a difference of the transition
//! cost function at the end slopes. With p = U' the solution is recovered
//! from two one-dimensional quadratures,
//!
//! ```text
//! x(p) = −ε ∫_p^{tan θ} dq/g(q),    U(p) = −ε ∫_p^{tan θ} q dq/g(q),
//! ```
//!
//! where g is the right-hand side of the ODE at slope q. The integrands
//! behave like √2/q and √2 near q = 0, so the substitution q = e^t makes
//! both integrals smooth and cheap to evaluate to machine precision.

use crate::e0::{PiecewiseMinimizer, SpanState};
use crate::energy::GridProfile;
use crate::error::{AdhesimError, Result};
use crate::quad;
use crate::scene::{Boundary, Scene};

/// √(1+p²) − 1 in a form that survives small p (the naive difference
/// underflows to zero below p ≈ 1e-8).
fn excess_length_density(p: f64) -> f64 {
    p * p / ((1.0 + p * p).sqrt() + 1.0)
}

/// Right-hand side of the slope equation: ε·U'' = g(U').
fn slope_rate(p: f64) -> f64 {
    let w = 1.0 + p * p;
    w.powf(1.25) * excess_length_density(p).sqrt()
}

/// Transition cost f(y): the exact energy of an untruncated boundary layer
/// whose end slope is y, as an integral over slopes. Odd in y; agrees with
/// the closed form `transition_cost_closed(atan(y))`.
pub fn transition_cost(y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let magnitude = quad::adaptive(
        &|z: f64| {
            let w = 1.0 + z * z;
            2.0 * excess_length_density(z).sqrt() / w.powf(1.25)
        },
        0.0,
        y.abs(),
        1e-14,
    );
    magnitude.copysign(y)
}

/// Closed form of the transition cost at contact angle θ:
/// 4(√2 − √(1+cos θ)).
pub fn transition_cost_closed(theta: f64) -> f64 {
    4.0 * (std::f64::consts::SQRT_2 - (1.0 + theta.cos()).sqrt())
}

/// ∫_lo^hi dq/g(q) and ∫_lo^hi q·dq/g(q), evaluated after the substitution
/// q = e^t that removes the 1/q blow-up of the first integrand.
fn phase_integrals(lo: f64, hi: f64) -> (f64, f64) {
    debug_assert!(0.0 < lo && lo < hi);
    let t0 = lo.ln();
    let t1 = hi.ln();
    // 16 panels per logarithmic decade keep both integrals at machine
    // precision (the integrands are flat near t → −∞).
    let panels = (((t1 - t0) * 16.0).ceil() as usize).clamp(8, 4096);
    let ix = quad::gauss8_composite(
        &|t: f64| {
            let q = t.exp();
            q / slope_rate(q)
        },
        t0,
        t1,
        panels,
    );
    let iu = quad::gauss8_composite(
        &|t: f64| {
            let q = t.exp();
            q * q / slope_rate(q)
        },
        t0,
        t1,
        panels,
    );
    (ix, iu)
}

/// Unit-layer width in x between slope `p` and the initial slope tan θ.
fn unit_width(p: f64, tan_theta: f64) -> f64 {
    phase_integrals(p, tan_theta).0
}

/// Unit-layer end slope at distance `t_width` behind the contact,
/// i.e. the solution of x(p) = −t_width for the ε = 1 layer.
pub fn unit_end_slope_at_width(theta: f64, t_width: f64) -> f64 {
    let tan_theta = theta.tan();
    if t_width <= 0.0 {
        return tan_theta;
    }
    // Widen the lower bracket until it overshoots the requested width
    // (the end slope decays like exp(−T/√2), so deep layers need tiny p).
    let mut lo = (tan_theta * 1e-6).min(1e-6);
    while unit_width(lo, tan_theta) < t_width {
        lo *= 1e-12;
        if lo < 1e-280 {
            return lo; // layer is numerically complete at this depth
        }
    }
    let mut hi = tan_theta * (1.0 - 1e-12);
    // unit_width decreases in p; bisect on ln p.
    for _ in 0..200 {
        let mid = (lo.ln() + hi.ln()) / 2.0;
        let p = mid.exp();
        if unit_width(p, tan_theta) > t_width {
            lo = p;
        } else {
            hi = p;
        }
        if (hi / lo).ln().abs() < 1e-15 {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// A boundary-layer profile U_{θ,ε} truncated at slope `p_min`, sampled on
/// a slope-logarithmic grid (dense in x near the contact at x = 0).
#[derive(Debug, Clone)]
pub struct LayerProfile {
    pub theta: f64,
    pub eps: f64,
    /// Increasing grid on [x_min, 0].
    pub xs: Vec<f64>,
    /// Values U ≤ 0.
    pub us: Vec<f64>,
    /// Slopes U' ∈ [p_min, tan θ], increasing with x.
    pub slopes: Vec<f64>,
}

impl LayerProfile {
    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    /// Depth |U(x_min)| of the truncated layer.
    pub fn depth(&self) -> f64 {
        -self.us[0]
    }

    /// Second derivative at a node, from the ODE.
    pub fn curvature_numerator(&self, i: usize) -> f64 {
        slope_rate(self.slopes[i]) / self.eps
    }

    /// C¹ cubic Hermite evaluation of U at x ∈ [x_min, 0].
    pub fn eval_at(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let hseg = x1 - x0;
        let t = ((x - x0) / hseg).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.us[i]
            + h10 * hseg * self.slopes[i]
            + h01 * self.us[i + 1]
            + h11 * hseg * self.slopes[i + 1]
    }

    /// C¹ cubic Hermite evaluation of U' at x, using the ODE for the nodal
    /// second derivatives.
    pub fn slope_at(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let hseg = x1 - x0;
        let t = ((x - x0) / hseg).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.slopes[i]
            + h10 * hseg * self.curvature_numerator(i)
            + h01 * self.slopes[i + 1]
            + h11 * hseg * self.curvature_numerator(i + 1)
    }

    fn segment(&self, x: f64) -> usize {
        match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("finite"))
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Integrates the layer ODE backward from the contact by phase-plane
/// quadrature, truncating where the slope reaches `p_min`.
pub fn layer_profile(theta: f64, eps: f64, p_min: f64) -> Result<LayerProfile> {
    if !(0.0 < theta && theta < std::f64::consts::FRAC_PI_2) {
        return Err(AdhesimError::Degenerate(format!(
            "layer angle must lie in (0, π/2), got {theta}"
        )));
    }
    if eps <= 0.0 {
        return Err(AdhesimError::Degenerate("layer needs eps > 0".into()));
    }
    let tan_theta = theta.tan();
    if p_min <= 0.0 || p_min >= tan_theta {
        return Err(AdhesimError::Degenerate(format!(
            "empty layer: slope floor {p_min} outside (0, tan θ = {tan_theta})"
        )));
    }
    // Slope nodes logarithmically spaced between p_min and tan θ; the layer
    // is then sampled exactly at those slopes.
    let t0 = p_min.ln();
    let t1 = tan_theta.ln();
    let n = (((t1 - t0) * 48.0).ceil() as usize).clamp(64, 2048);
    let mut ps = Vec::with_capacity(n + 1);
    for k in 0..=n {
        ps.push((t0 + (t1 - t0) * k as f64 / n as f64).exp());
    }
    // Cumulative integrals from the contact (p = tan θ, x = 0) downward.
    let mut xs = vec![0.0; n + 1];
    let mut us = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let (ix, iu) = phase_integrals(ps[k], ps[k + 1]);
        xs[k] = xs[k + 1] - eps * ix;
        us[k] = us[k + 1] - eps * iu;
    }
    Ok(LayerProfile {
        theta,
        eps,
        xs,
        us,
        slopes: ps,
    })
}

/// Energy of the truncated layer,
/// ∫ [ε κ² √(1+U'²) + (1/ε)(√(1+U'²) − 1)] dx, evaluated by quadrature
/// along the solution. Equals the transition-cost difference
/// f(tan θ) − f(p_min) up to quadrature slack.
pub fn layer_truncated_energy(layer: &LayerProfile) -> f64 {
    let eps = layer.eps;
    let tan_theta = layer.theta.tan();
    let p_min = layer.slopes[0];
    let t0 = p_min.ln();
    let t1 = tan_theta.ln();
    let panels = (((t1 - t0) * 16.0).ceil() as usize).clamp(8, 4096);
    quad::gauss8_composite(
        &|t: f64| {
            let p = t.exp();
            let w = 1.0 + p * p;
            let u_xx = slope_rate(p) / eps;
            let kappa = u_xx / w.powf(1.5);
            let density = eps * kappa * kappa * w.sqrt() + excess_length_density(p) / eps;
            // dx = ε dq / g(q), dq = p dt
            density * eps * p / slope_rate(p)
        },
        t0,
        t1,
        panels,
    )
}

// ---------------------------------------------------------------------------
// Recovery construction
// ---------------------------------------------------------------------------

/// How to pick the layer truncation slope.
#[derive(Debug, Clone, Copy)]
pub enum LayerTruncation {
    /// Truncate at slope `coeff · ε^{1/3}` (capped at half the contact
    /// slope). The tangent-matching arcs then turn by O(ε^{1/3}), which is
    /// the rate the segment estimate of the construction exhibits.
    SlopeFloor { coeff: f64 },
    /// Truncate at the slope the unit layer reaches at distance ε^{-1/3}
    /// behind the contact (layer width ε^{2/3}). The end slope decays like
    /// exp(−ε^{-1/3}/√2), so the residual gap is dominated by O(ε) terms.
    WidthRule,
}

#[derive(Debug, Clone, Copy)]
pub struct RecoveryOptions {
    pub truncation: LayerTruncation,
    /// Output grid spacing; `None` picks ε^{4/3}/32 clamped to sane node
    /// counts, so that stencil errors at curvature jumps stay subordinate
    /// to the O(ε^{1/3}) construction terms.
    pub target_h: Option<f64>,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            truncation: LayerTruncation::SlopeFloor { coeff: 0.35 },
            target_h: None,
        }
    }
}

/// One graph piece of the glued curve in the chord frame. Every piece is a
/// graph ξ ↦ V(ξ) with an exact (or C¹-Hermite) pointwise evaluation, so the
/// output grid never sees interpolation corners.
enum Piece {
    /// Layer whose contact sits at (xi_contact, eta), detached side to the
    /// right: V(ξ) = eta + U(xi_contact − ξ) on [xi_contact, xi_contact + w].
    LayerLeftAt {
        profile: LayerProfile,
        xi_contact: f64,
        eta: f64,
    },
    /// Layer whose contact sits at (xi_contact, eta), detached side to the
    /// left: V(ξ) = eta + U(ξ − xi_contact) on [xi_contact − w, xi_contact].
    LayerRightAt {
        profile: LayerProfile,
        xi_contact: f64,
        eta: f64,
    },
    /// Lower branch of a radius-r circle, traversed over directions
    /// [chi0, chi1] (signed sweep).
    Arc {
        cx: f64,
        cy: f64,
        r: f64,
        chi0: f64,
        chi1: f64,
    },
    Seg {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
}

impl Piece {
    /// ξ-interval covered by the piece.
    fn x_range(&self) -> (f64, f64) {
        match self {
            Piece::LayerLeftAt {
                profile,
                xi_contact,
                ..
            } => (*xi_contact, xi_contact - profile.x_min()),
            Piece::LayerRightAt {
                profile,
                xi_contact,
                ..
            } => (xi_contact + profile.x_min(), *xi_contact),
            Piece::Arc { cx, r, chi0, chi1, .. } => {
                let a = cx + r * chi0.sin();
                let b = cx + r * chi1.sin();
                (a.min(b), a.max(b))
            }
            Piece::Seg { x0, x1, .. } => (*x0, *x1),
        }
    }

    /// (V, V') at chord-frame abscissa ξ (assumed inside the range).
    fn eval(&self, xi: f64) -> (f64, f64) {
        match self {
            Piece::LayerLeftAt {
                profile,
                xi_contact,
                eta,
            } => (
                eta + profile.eval_at(xi_contact - xi),
                -profile.slope_at(xi_contact - xi),
            ),
            Piece::LayerRightAt {
                profile,
                xi_contact,
                eta,
            } => (
                eta + profile.eval_at(xi - xi_contact),
                profile.slope_at(xi - xi_contact),
            ),
            Piece::Arc { cx, cy, r, .. } => {
                let dx = xi - cx;
                let root = (r * r - dx * dx).max(0.0).sqrt();
                (cy - root, if root > 0.0 { dx / root } else { 0.0 })
            }
            Piece::Seg { x0, y0, x1, y1 } => {
                let slope = (y1 - y0) / (x1 - x0);
                (y0 + slope * (xi - x0), slope)
            }
        }
    }

    fn start(&self) -> (f64, f64, f64) {
        let (x0, _) = self.x_range();
        let (v, s) = self.eval(x0);
        (x0, v, s)
    }

    fn end(&self) -> (f64, f64, f64) {
        let (_, x1) = self.x_range();
        let (v, s) = self.eval(x1);
        (x1, v, s)
    }
}

/// Which end of a chord span a corner sits at.
#[derive(Debug, Clone, Copy, PartialEq)]
enum CornerSide {
    Left,
    Right,
}

/// One assembled corner: the boundary layer anchored tangent to the obstacle
/// at a contact shifted into the adhered side, plus the radius-ε arc that
/// lands the curve exactly on the chord line.
struct CornerAssembly {
    /// World abscissa of the shifted contact point.
    contact_x: f64,
    /// ξ of the arc/segment junction on the chord line (where y = 0).
    junction_xi: f64,
    /// Pieces in travel order (left corner: layer then arc; right corner:
    /// arc then layer).
    pieces: Vec<Piece>,
}

/// Picks the truncation slope for a corner: the configured rule, raised if
/// necessary until the layer width fits the available room.
fn truncation_slope(
    theta: f64,
    eps: f64,
    room: f64,
    truncation: LayerTruncation,
) -> Option<f64> {
    let tan_theta = theta.tan();
    let nominal = match truncation {
        LayerTruncation::SlopeFloor { coeff } => (coeff * eps.cbrt()).min(0.5 * tan_theta),
        LayerTruncation::WidthRule => unit_end_slope_at_width(theta, eps.powf(-1.0 / 3.0)),
    };
    let width_of = |p: f64| eps * unit_width(p, tan_theta);
    let mut p = nominal.max(tan_theta * 1e-14).min(0.9 * tan_theta);
    if width_of(p) <= room {
        return Some(p);
    }
    let mut lo = p;
    let mut hi = tan_theta * 0.95;
    if width_of(hi) > room {
        return None;
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if width_of(mid) > room {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    p = hi;
    Some(p)
}

/// Builds one corner in the chord-line frame.
///
/// The construction aligns the layer's asymptote with the chord line: the
/// contact moves into the adhered side by O(ε) until the truncated layer
/// end, turned through a radius-ε arc, lands on the chord line with matching
/// tangent. The middle segment then runs along the original chord, so the
/// only energy above the transition cost is the O(ε^{1/3}) arc turn minus
/// the truncated tail.
#[allow(clippy::too_many_arguments)]
fn assemble_corner(
    scene: &Scene,
    origin: (f64, f64),
    phi_c: f64,
    x_bar: f64,
    side: CornerSide,
    eps: f64,
    opts: &RecoveryOptions,
    room: f64,
    shift_limit: f64,
) -> Result<CornerAssembly> {
    let (cos_c, sin_c) = (phi_c.cos(), phi_c.sin());
    let to_chord = |wx: f64, wy: f64| -> (f64, f64) {
        let dx = wx - origin.0;
        let dy = wy - origin.1;
        (dx * cos_c + dy * sin_c, -dx * sin_c + dy * cos_c)
    };
    let contact_angle_at = |c: f64| -> f64 {
        match side {
            CornerSide::Right => scene.psi_angle(c) - phi_c,
            CornerSide::Left => phi_c - scene.psi_angle(c),
        }
    };
    let theta0 = contact_angle_at(x_bar);
    if !(0.0 < theta0 && theta0 < std::f64::consts::FRAC_PI_2 * (1.0 - 1e-9)) {
        return Err(AdhesimError::RecoveryGeometry {
            corner: x_bar,
            reason: format!("contact angle {theta0:.6} outside (0, π/2)"),
            eps_max: 0.0,
        });
    }
    let p = truncation_slope(theta0, eps, room, opts.truncation).ok_or_else(|| {
        AdhesimError::RecoveryGeometry {
            corner: x_bar,
            reason: format!("layer window does not fit in room {room:.4}"),
            eps_max: eps * room / (eps * unit_width(0.45 * theta0.tan(), theta0.tan())).max(eps),
        }
    })?;

    // Required chord-frame height of the contact so that the arc's far
    // tangency point lands exactly on the chord line:
    //   η = ε·D(p, θ̃) + ε(1 − 1/√(1+p²)),
    // with D the unit depth of the truncated layer.
    let eta_required = |theta: f64| -> f64 {
        let (_, d_unit) = phase_integrals(p.min(0.98 * theta.tan()), theta.tan());
        eps * d_unit + eps * (1.0 - 1.0 / (1.0 + p * p).sqrt())
    };
    let residual = |c: f64| -> f64 {
        let theta = contact_angle_at(c);
        if theta <= 0.0 {
            return f64::INFINITY;
        }
        let (_, eta_obs) = to_chord(c, scene.psi(c));
        eta_obs - eta_required(theta)
    };

    // Bracket the shift: at the refined contact the residual is negative
    // (the contact sits on the chord line); it grows like sin θ per unit
    // shift into the adhered side.
    let dir = match side {
        CornerSide::Right => 1.0,
        CornerSide::Left => -1.0,
    };
    let mut step = eps;
    let mut hi = x_bar;
    let mut found = false;
    for _ in 0..60 {
        let cand = hi + dir * step;
        if (cand - x_bar).abs() > shift_limit {
            break;
        }
        hi = cand;
        if residual(hi) > 0.0 {
            found = true;
            break;
        }
        step *= 1.5;
    }
    if !found {
        return Err(AdhesimError::RecoveryGeometry {
            corner: x_bar,
            reason: format!(
                "adhered neighbour too short for the O(ε) contact shift \
                 (needs ≈ {:.3e}, has {shift_limit:.3e})",
                2.9 * eps
            ),
            eps_max: eps * shift_limit / (3.0 * eps),
        });
    }
    let mut lo = x_bar;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let contact = 0.5 * (lo + hi);
    let theta = contact_angle_at(contact);
    let p_eff = p.min(0.98 * theta.tan());
    let layer = layer_profile(theta, eps, p_eff)?;
    let (xi_c, eta_c) = to_chord(contact, scene.psi(contact));
    let w_ext = -layer.x_min();
    let depth = layer.depth();
    let root = (1.0 + p_eff * p_eff).sqrt();

    let mut pieces = Vec::with_capacity(2);
    let junction_xi;
    match side {
        CornerSide::Right => {
            // Layer end (left of the contact), arc centre above it, lower
            // tangency point on the chord line.
            let end = (xi_c - w_ext, eta_c - depth);
            let center = (end.0 - eps * p_eff / root, end.1 + eps / root);
            let t = (center.0, center.1 - eps);
            junction_xi = t.0;
            pieces.push(Piece::Arc {
                cx: center.0,
                cy: center.1,
                r: eps,
                chi0: 0.0,
                chi1: p_eff.atan(),
            });
            pieces.push(Piece::LayerRightAt {
                profile: layer,
                xi_contact: xi_c,
                eta: eta_c,
            });
        }
        CornerSide::Left => {
            let end = (xi_c + w_ext, eta_c - depth);
            let center = (end.0 + eps * p_eff / root, end.1 + eps / root);
            let t = (center.0, center.1 - eps);
            junction_xi = t.0;
            pieces.push(Piece::LayerLeftAt {
                profile: layer,
                xi_contact: xi_c,
                eta: eta_c,
            });
            pieces.push(Piece::Arc {
                cx: center.0,
                cy: center.1,
                r: eps,
                chi0: (-p_eff).atan(),
                chi1: 0.0,
            });
        }
    }
    Ok(CornerAssembly {
        contact_x: contact,
        junction_xi,
        pieces,
    })
}

/// Builds the recovery profile for a refined minimizer at the given ε.
///
/// Per detached chord, the obstacle-touching corners are replaced by
/// boundary-layer graphs whose asymptotes align with the chord line, joined
/// to the chord by radius-ε arcs with tangent matching; the result is
/// sampled as an admissible grid profile. Fully adhered structures return
/// ψ sampled.
pub fn build_recovery(scene: &Scene, pm: &PiecewiseMinimizer, eps: f64) -> Result<GridProfile> {
    build_recovery_with(scene, pm, eps, &RecoveryOptions::default())
}

pub fn build_recovery_with(
    scene: &Scene,
    pm: &PiecewiseMinimizer,
    eps: f64,
    opts: &RecoveryOptions,
) -> Result<GridProfile> {
    if eps <= 0.0 {
        return Err(AdhesimError::Degenerate("recovery needs eps > 0".into()));
    }
    let (a, b) = scene.domain();
    let span_total = b - a;
    let h_out = match opts.target_h {
        Some(h) => h,
        None => {
            let h = eps.powf(4.0 / 3.0) / 32.0;
            h.clamp(span_total / 2_097_152.0, span_total / 512.0)
        }
    };
    let n_out = (span_total / h_out).round().max(512.0) as usize;

    // Glued chord-frame curve per chord span; evaluated pointwise on the
    // output grid by inverting the world-x map (strictly increasing along
    // the curve whenever the graph condition holds).
    struct SpanCurve {
        x0: f64,
        x1: f64,
        xl: f64,
        lh: f64,
        cos_c: f64,
        sin_c: f64,
        xi_lo: f64,
        xi_hi: f64,
        pieces: Vec<Piece>,
    }
    impl SpanCurve {
        fn chord_eval(&self, xi: f64) -> (f64, f64) {
            let last = self.pieces.len() - 1;
            for (k, p) in self.pieces.iter().enumerate() {
                let (r0, r1) = p.x_range();
                if xi <= r1 || k == last {
                    return p.eval(xi.clamp(r0, r1));
                }
            }
            unreachable!("piece ranges cover the span");
        }

        /// World height at world abscissa x; `xi_hint` carries the chord
        /// position of the previous (smaller) x.
        fn world_y(&self, x: f64, xi_hint: &mut f64) -> f64 {
            let world_x = |xi: f64| {
                let (v, _) = self.chord_eval(xi);
                self.xl + self.cos_c * xi - self.sin_c * v
            };
            let mut lo = xi_hint.clamp(self.xi_lo, self.xi_hi);
            if world_x(lo) > x {
                lo = self.xi_lo;
            }
            let mut hi = self.xi_hi;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if world_x(mid) < x {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let xi = 0.5 * (lo + hi);
            *xi_hint = lo;
            let (v, _) = self.chord_eval(xi);
            self.lh + self.sin_c * xi + self.cos_c * v
        }
    }
    let mut curves: Vec<SpanCurve> = Vec::new();

    for (k, st) in pm.states.iter().enumerate() {
        let (xl, xr) = (pm.partition[k], pm.partition[k + 1]);
        let (lh, rh) = match *st {
            SpanState::Adhered => continue,
            SpanState::Chord {
                left_height,
                right_height,
            } => (left_height, right_height),
        };
        let left_contact = xl > a;
        let right_contact = xr < b;
        let ell = (xr - xl).hypot(rh - lh);
        let phi_c = (rh - lh).atan2(xr - xl);
        let (cos_c, sin_c) = (phi_c.cos(), phi_c.sin());

        if !left_contact && !right_contact {
            // Boundary-to-boundary chord: the chord itself is the recovery.
            curves.push(SpanCurve {
                x0: xl,
                x1: xr,
                xl,
                lh,
                cos_c,
                sin_c,
                xi_lo: 0.0,
                xi_hi: ell,
                pieces: vec![Piece::Seg {
                    x0: 0.0,
                    y0: 0.0,
                    x1: ell,
                    y1: 0.0,
                }],
            });
            continue;
        }

        // Room per layer window in the chord frame, and how far each contact
        // may shift into its adhered neighbour.
        let corners = (left_contact as usize) + (right_contact as usize);
        let room = if corners == 2 { 0.38 * ell } else { 0.6 * ell };
        let left_shift_limit = if k > 0 {
            0.8 * (pm.partition[k] - pm.partition[k - 1])
        } else {
            0.0
        };
        let right_shift_limit = if k + 2 < pm.partition.len() {
            0.8 * (pm.partition[k + 2] - pm.partition[k + 1])
        } else {
            0.0
        };

        let corner_left = if left_contact {
            Some(assemble_corner(
                scene,
                (xl, lh),
                phi_c,
                xl,
                CornerSide::Left,
                eps,
                opts,
                room,
                left_shift_limit,
            )?)
        } else {
            None
        };
        let corner_right = if right_contact {
            Some(assemble_corner(
                scene,
                (xl, lh),
                phi_c,
                xr,
                CornerSide::Right,
                eps,
                opts,
                room,
                right_shift_limit,
            )?)
        } else {
            None
        };

        // Segment along the chord line between the junction points (or the
        // pinned endpoints, which lie on the line by definition).
        let seg_start = corner_left.as_ref().map_or(0.0, |c| c.junction_xi);
        let seg_end = corner_right.as_ref().map_or(ell, |c| c.junction_xi);
        if seg_end - seg_start < 1e-3 * ell {
            return Err(AdhesimError::RecoveryGeometry {
                corner: xl,
                reason: format!(
                    "no room left for the central segment (junctions at ξ = \
                     {seg_start:.4} and {seg_end:.4})"
                ),
                eps_max: eps / 4.0,
            });
        }

        let mut pieces: Vec<Piece> = Vec::new();
        let mut x0 = xl;
        let mut x1 = xr;
        let mut xi_lo = 0.0;
        let mut xi_hi = ell;
        if let Some(cl) = corner_left {
            x0 = cl.contact_x;
            xi_lo = cl.pieces[0].x_range().0;
            pieces.extend(cl.pieces);
        }
        pieces.push(Piece::Seg {
            x0: seg_start,
            y0: 0.0,
            x1: seg_end,
            y1: 0.0,
        });
        if let Some(cr) = corner_right {
            x1 = cr.contact_x;
            xi_hi = cr.pieces[1].x_range().1;
            pieces.extend(cr.pieces);
        }

        // C¹ junction check (positions and slopes).
        for w in pieces.windows(2) {
            let (x_end, y_end, s_end) = w[0].end();
            let (x_sta, y_sta, s_sta) = w[1].start();
            if (x_end - x_sta).abs() > 1e-8 * ell.max(1.0)
                || (y_end - y_sta).abs() > 1e-8 * ell.max(1.0)
                || (s_end - s_sta).abs() > 1e-8 * (1.0 + s_end.abs())
            {
                return Err(AdhesimError::RecoveryGeometry {
                    corner: xl,
                    reason: format!(
                        "junction mismatch at ξ = {x_end:.6}: Δpos = ({:.2e}, {:.2e}), Δslope = {:.2e}",
                        x_end - x_sta,
                        y_end - y_sta,
                        s_end - s_sta
                    ),
                    eps_max: eps / 4.0,
                });
            }
        }

        // Graph condition after rotation into world coordinates: the curve
        // direction φ_c + arctan V' must stay clear of vertical. Slopes are
        // monotone along every piece, so the extremes sit at piece ends.
        for piece in &pieces {
            for (_, _, s) in [piece.start(), piece.end()] {
                let dir = phi_c + s.atan();
                if dir.abs() >= std::f64::consts::FRAC_PI_2 * (1.0 - 1e-9) {
                    return Err(AdhesimError::RecoveryGeometry {
                        corner: xl,
                        reason: format!("glued curve is not a graph: direction {dir:.4} rad"),
                        eps_max: eps / 4.0,
                    });
                }
            }
        }

        curves.push(SpanCurve {
            x0,
            x1,
            xl,
            lh,
            cos_c,
            sin_c,
            xi_lo,
            xi_hi,
            pieces,
        });
    }

    // Assemble the output grid profile by exact pointwise evaluation.
    let mut profile = GridProfile::sample(a, b, n_out, |x| scene.psi(x))?;
    {
        let xs: Vec<f64> = profile.xs().to_vec();
        let us = profile.us_mut();
        for c in &curves {
            let mut xi_hint = c.xi_lo;
            for (i, &x) in xs.iter().enumerate() {
                if x < c.x0 || x > c.x1 {
                    continue;
                }
                us[i] = c.world_y(x, &mut xi_hint);
            }
        }
    }

    // Dirichlet endpoints byte-exact, then verify admissibility: the layers
    // are convex with obstacle-tangent contact, so only curved obstacles can
    // produce genuine penetration (reported), while sampling slop is clamped.
    {
        let n = profile.len();
        let (left, right) = scene.boundary();
        if let Boundary::Dirichlet(g) = left {
            profile.us_mut()[0] = g;
        }
        if let Boundary::Dirichlet(g) = right {
            profile.us_mut()[n - 1] = g;
        }
    }
    let tol = 1e-10 * scene.psi_sup().max(1.0);
    let xs: Vec<f64> = profile.xs().to_vec();
    for (i, &x) in xs.iter().enumerate() {
        let psi = scene.psi(x);
        let u = profile.us()[i];
        if u < psi {
            if psi - u > tol.max(1e-7 * eps) {
                let corner = curves
                    .iter()
                    .find(|c| x >= c.x0 && x <= c.x1)
                    .map(|c| if (x - c.x0) < (c.x1 - x) { c.x0 } else { c.x1 })
                    .unwrap_or(x);
                return Err(AdhesimError::RecoveryGeometry {
                    corner,
                    reason: format!("obstacle penetration {:.3e} at x = {x:.6}", psi - u),
                    eps_max: eps / 4.0,
                });
            }
            profile.us_mut()[i] = psi;
        }
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e0::{refine_young, solve_e0_dp};
    use crate::energy::{eval_e0, eval_feps};

    const F_TAN60: f64 = 0.757_874_763_926_024; // 4(√2 − √1.5)
    const F_ONE: f64 = 0.430_602_389_986_874_1; // 4(√2 − √(1+cos π/4))

    #[test]
    fn transition_cost_matches_closed_form() {
        assert_eq!(transition_cost(0.0), 0.0);
        let f60 = transition_cost(3.0f64.sqrt());
        assert!((f60 - F_TAN60).abs() < 1e-10, "f(√3) = {f60}");
        let f45 = transition_cost(1.0);
        assert!((f45 - F_ONE).abs() < 1e-10, "f(1) = {f45}");
        // Odd extension.
        assert!((transition_cost(-1.0) + F_ONE).abs() < 1e-10);
    }

    #[test]
    fn transition_cost_closed_form_agrees_on_a_grid() {
        for k in 1..50 {
            let theta = k as f64 * std::f64::consts::FRAC_PI_2 / 50.0;
            let by_quadrature = transition_cost(theta.tan());
            let closed = transition_cost_closed(theta);
            assert!(
                (by_quadrature - closed).abs() <= 1e-10,
                "θ = {theta}: {by_quadrature} vs {closed}"
            );
        }
    }

    #[test]
    fn transition_cost_is_monotone_and_bounded() {
        // f is strictly increasing on [0, ∞), bounded by 4(√2 − 1).
        let bound = 4.0 * (std::f64::consts::SQRT_2 - 1.0);
        let mut prev = 0.0;
        for k in 1..=60 {
            let y = k as f64 * 0.5;
            let f = transition_cost(y);
            assert!(f > prev, "not increasing at y = {y}");
            assert!(f < bound, "f({y}) = {f} exceeds the bound {bound}");
            prev = f;
        }
    }

    #[test]
    fn layer_profile_has_ode_initial_data_and_shape() {
        let theta = std::f64::consts::FRAC_PI_3;
        let layer = layer_profile(theta, 1.0, 1e-3).unwrap();
        let n = layer.xs.len();
        assert_eq!(layer.us[n - 1], 0.0);
        assert!((layer.slopes[n - 1] - theta.tan()).abs() < 1e-14);
        for i in 0..n - 1 {
            assert!(layer.us[i] < 0.0, "U must be negative behind the contact");
            assert!(layer.slopes[i] > 0.0 && layer.slopes[i] < layer.slopes[i + 1]);
            assert!(layer.xs[i] < layer.xs[i + 1]);
        }
    }

    #[test]
    fn layer_satisfies_the_slope_ode_in_finite_differences() {
        // dp/dx = g(p)/ε checked against central differences of the samples.
        let layer = layer_profile(1.0, 0.5, 1e-2).unwrap();
        for i in 1..layer.xs.len() - 1 {
            let dp = (layer.slopes[i + 1] - layer.slopes[i - 1])
                / (layer.xs[i + 1] - layer.xs[i - 1]);
            let rhs = slope_rate(layer.slopes[i]) / 0.5;
            assert!(
                (dp - rhs).abs() < 2e-2 * rhs.max(1.0),
                "ODE residual at node {i}: {dp} vs {rhs}"
            );
        }
    }

    #[test]
    fn equipartition_residual_is_quadrature_exact() {
        // ε κ² √(1+p²) = (1/ε)(√(1+p²) − 1) holds algebraically along the
        // ODE; with the nodal second derivative taken from the ODE the
        // residual is pure roundoff.
        for (theta, eps) in [(0.3, 1.0), (1.0, 0.1), (1.2, 1e-3), (0.7, 1e-2)] {
            let layer = layer_profile(theta, eps, 1e-3 * theta.tan()).unwrap();
            for i in 0..layer.xs.len() {
                let p = layer.slopes[i];
                let w = 1.0 + p * p;
                let kappa = layer.curvature_numerator(i) / w.powf(1.5);
                let lhs = eps * kappa * kappa * w.sqrt();
                let rhs = (w.sqrt() - 1.0) / eps;
                assert!(
                    (lhs - rhs).abs() <= 1e-9 * (1.0f64).max(1.0 / eps),
                    "equipartition residual {:.3e} at θ={theta}, ε={eps}",
                    lhs - rhs
                );
            }
        }
    }

    #[test]
    fn layer_scaling_identity() {
        // U_{θ,ε}(x) = ε U_{θ,1}(x/ε) on common points, via Hermite
        // interpolation of the unit layer.
        let theta = std::f64::consts::FRAC_PI_3;
        let eps = 1e-2;
        let p_min = 1e-3;
        let unit = layer_profile(theta, 1.0, p_min).unwrap();
        let scaled = layer_profile(theta, eps, p_min).unwrap();
        for i in 0..scaled.xs.len() {
            let x = scaled.xs[i];
            let expect = eps * unit.eval_at(x / eps);
            assert!(
                (scaled.us[i] - expect).abs() < 1e-8,
                "scaling mismatch at x = {x}: {} vs {expect}",
                scaled.us[i]
            );
        }
    }

    #[test]
    fn truncated_layer_energy_telescopes_to_transition_cost() {
        for (theta, eps, p_min) in [
            (std::f64::consts::FRAC_PI_3, 1.0, 1e-3),
            (0.5, 0.3, 1e-2),
            (1.3, 1e-2, 1e-4),
        ] {
            let layer = layer_profile(theta, eps, p_min).unwrap();
            let energy = layer_truncated_energy(&layer);
            let expect = transition_cost(theta.tan()) - transition_cost(p_min);
            assert!(
                (energy - expect).abs() < 1e-9,
                "θ={theta}, ε={eps}: {energy} vs {expect}"
            );
        }
    }

    #[test]
    fn width_rule_layer_energy_approaches_full_transition_cost() {
        // Layer truncated at width ε^{2/3}: energy = f(tanθ) − f(U'(−ε^{-1/3})),
        // which converges to 4(√2 − √(1+cos θ)) as ε ↓ 0; at ε = 10⁻⁶ and
        // θ = π/3 the value is the closed-form constant to 1e-4.
        let theta = std::f64::consts::FRAC_PI_3;
        let eps: f64 = 1e-6;
        let p_end = unit_end_slope_at_width(theta, eps.powf(-1.0 / 3.0));
        let layer = layer_profile(theta, eps, p_end).unwrap();
        let energy = layer_truncated_energy(&layer);
        assert!(
            (energy - F_TAN60).abs() < 1e-4,
            "truncated energy {energy} vs {F_TAN60}"
        );
        // The unit end slope itself decays exponentially.
        assert!(p_end < 1e-3, "end slope {p_end} not small");
    }

    #[test]
    fn recovery_of_fully_adhered_structure_is_psi() {
        let scene = Scene::preset("adhered").unwrap();
        let pm = solve_e0_dp(&scene, 100).unwrap();
        let rec = build_recovery(&scene, &pm, 1e-2).unwrap();
        for (&x, &u) in rec.xs().iter().zip(rec.us()) {
            assert_eq!(u, scene.psi(x), "recovery differs from ψ at {x}");
        }
        let f = eval_feps(&scene, &rec, 1e-2, pm.energy).unwrap();
        assert!(f.abs() < 1e-12, "F_eps = {f} on the adhered minimizer");
    }

    #[test]
    fn recovery_on_flat_tent_is_admissible_and_close_to_limit() {
        let scene = Scene::preset("flat").unwrap();
        let (pm, _) = refine_young(&scene, &solve_e0_dp(&scene, 800).unwrap());
        let eps = 1e-2;
        let rec = build_recovery(&scene, &pm, eps).unwrap();
        assert!(eval_e0(&scene, &rec).is_ok(), "recovery is inadmissible");
        let f_limit = 8.0 * (2.0f64.sqrt() - 1.5f64.sqrt());
        let f_eps = eval_feps(&scene, &rec, eps, pm.energy).unwrap();
        assert!(
            (f_eps - f_limit).abs() < 0.2,
            "F_eps = {f_eps} vs limit {f_limit}"
        );
    }

    #[test]
    fn recovery_gap_decreases_with_eps() {
        let scene = Scene::preset("flat").unwrap();
        let (pm, _) = refine_young(&scene, &solve_e0_dp(&scene, 800).unwrap());
        let f_limit = 8.0 * (2.0f64.sqrt() - 1.5f64.sqrt());
        let mut prev_gap = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let rec = build_recovery(&scene, &pm, eps).unwrap();
            let f_eps = eval_feps(&scene, &rec, eps, pm.energy).unwrap();
            let gap = (f_eps - f_limit).abs();
            assert!(
                gap < prev_gap,
                "gap did not decrease at ε = {eps}: {gap} vs {prev_gap}"
            );
            prev_gap = gap;
        }
    }


    #[test]
    fn empty_layer_is_rejected() {
        assert!(layer_profile(0.5, 1.0, 0.5f64.tan()).is_err());
        assert!(layer_profile(0.5, 1.0, 1.0).is_err());
        assert!(layer_profile(1.6, 1.0, 1e-3).is_err()); // θ ≥ π/2
    }
}
