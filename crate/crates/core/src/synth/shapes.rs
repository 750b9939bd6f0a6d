use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_3, TAU};

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{bail, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Geometry of one cluster in one view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeKind {
    /// Disk with radius `radius·√ξ` sampling.
    Circle { radius: f64 },
    /// Filled ellipse with semi-axes `a` (x) and `b` (y).
    Ellipse { a: f64, b: f64 },
    /// Two concentric-ish arcs over `t ∈ [-half_angle, half_angle]`; the
    /// inner arc is shifted right by `shift`.
    Crescent { outer: f64, inner: f64, shift: f64, half_angle: f64 },
    /// Closed curve `r = base + amp·sin(freq·t)`.
    SCurve { base: f64, amp: f64, freq: f64 },
    /// Closed curve `r = base + amp·|cos(petals·θ)|`.
    Diamond { base: f64, amp: f64, petals: f64 },
    /// Annulus between `inner` and `outer`.
    Ring { inner: f64, outer: f64 },
    /// Plus sign: bars of half-length `half_length` whose thickness is a
    /// Gaussian with deviation `bar_sigma`.
    Cross { half_length: f64, bar_sigma: f64 },
    /// Classic parametric heart scaled by `scale`.
    Heart { scale: f64 },
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Circle { .. } => "circle",
            ShapeKind::Ellipse { .. } => "ellipse",
            ShapeKind::Crescent { .. } => "crescent",
            ShapeKind::SCurve { .. } => "scurve",
            ShapeKind::Diamond { .. } => "diamond",
            ShapeKind::Ring { .. } => "ring",
            ShapeKind::Cross { .. } => "cross",
            ShapeKind::Heart { .. } => "heart",
        }
    }
}

/// A shape, where it sits and how much noise it gets.
///
/// What `noise_sigma` perturbs depends on the shape: the radius and the arc
/// parameter for crescents, the radius (and half as much of the parameter)
/// for the S-curve, the radius for the diamond, the parameter and both
/// coordinates for the heart. Circle, ellipse, ring and cross get isotropic
/// additive noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub center: [f64; 2],
    pub noise_sigma: f64,
}

impl ShapeSpec {
    pub fn circle() -> Self {
        Self { kind: ShapeKind::Circle { radius: 0.5 }, center: [2.0, 2.0], noise_sigma: 0.0 }
    }
    pub fn ellipse() -> Self {
        Self { kind: ShapeKind::Ellipse { a: 1.5, b: 0.4 }, center: [8.0, 2.0], noise_sigma: 0.0 }
    }
    pub fn crescent() -> Self {
        Self {
            kind: ShapeKind::Crescent { outer: 1.2, inner: 0.6, shift: 0.4, half_angle: FRAC_PI_3 },
            center: [2.0, 8.0],
            noise_sigma: 0.1,
        }
    }
    pub fn scurve() -> Self {
        Self {
            kind: ShapeKind::SCurve { base: 0.3, amp: 0.3, freq: 3.0 },
            center: [8.0, 8.0],
            noise_sigma: 0.1,
        }
    }
    pub fn diamond() -> Self {
        Self {
            kind: ShapeKind::Diamond { base: 0.5, amp: 0.3, petals: 4.0 },
            center: [2.0, 2.0],
            noise_sigma: 0.1,
        }
    }
    pub fn ring() -> Self {
        Self { kind: ShapeKind::Ring { inner: 0.8, outer: 1.3 }, center: [6.0, 6.0], noise_sigma: 0.0 }
    }
    pub fn cross() -> Self {
        Self {
            kind: ShapeKind::Cross { half_length: 1.0, bar_sigma: 0.3 },
            center: [6.0, -3.0],
            noise_sigma: 0.0,
        }
    }
    pub fn heart() -> Self {
        Self { kind: ShapeKind::Heart { scale: 0.3 }, center: [-2.0, -2.0], noise_sigma: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: &[(&str, f64)] = match self.kind {
            ShapeKind::Circle { radius } => &[("radius", radius)],
            ShapeKind::Ellipse { a, b } => &[("a", a), ("b", b)],
            ShapeKind::Crescent { outer, inner, shift, half_angle } => {
                if shift < 0.0 {
                    bail!(InvalidConfig, "crescent shift must be >= 0");
                }
                &[("outer", outer), ("inner", inner), ("half_angle", half_angle)]
            }
            ShapeKind::SCurve { base, amp, freq } => {
                if amp < 0.0 {
                    bail!(InvalidConfig, "scurve amp must be >= 0");
                }
                &[("base", base), ("freq", freq)]
            }
            ShapeKind::Diamond { base, amp, petals } => {
                if amp < 0.0 {
                    bail!(InvalidConfig, "diamond amp must be >= 0");
                }
                &[("base", base), ("petals", petals)]
            }
            ShapeKind::Ring { inner, outer } => {
                if outer <= inner {
                    bail!(InvalidConfig, "ring outer radius must exceed the inner one");
                }
                &[("inner", inner), ("outer", outer)]
            }
            ShapeKind::Cross { half_length, bar_sigma } => {
                &[("half_length", half_length), ("bar_sigma", bar_sigma)]
            }
            ShapeKind::Heart { scale } => &[("scale", scale)],
        };
        for (name, v) in positive {
            if !(*v > 0.0 && v.is_finite()) {
                bail!(InvalidConfig, "{} {} must be positive, got {}", self.kind.name(), name, v);
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            bail!(InvalidConfig, "noise_sigma must be >= 0, got {}", self.noise_sigma);
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            bail!(InvalidConfig, "shape center must be finite");
        }
        Ok(())
    }

    /// Rows of the first sub-population (outer arc, horizontal bar) when
    /// the shape has two; the rest belong to the second.
    pub fn first_part(&self, n: usize) -> usize {
        match self.kind {
            ShapeKind::Crescent { .. } | ShapeKind::Cross { .. } => n.div_ceil(2),
            _ => n,
        }
    }
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn uniform(rng: &mut Rng) -> f64 {
    rng.random::<f64>()
}

/// Draws `n` points of `spec`.
pub fn generate_shape(spec: &ShapeSpec, n: usize, rng: &mut Rng) -> Result<Matrix> {
    if n < 1 {
        bail!(InvalidInput, "a shape needs at least one sample");
    }
    spec.validate()?;
    let [cx, cy] = spec.center;
    let s = spec.noise_sigma;
    let mut out = Matrix::zeros(n, 2);
    let first = spec.first_part(n);
    for i in 0..n {
        let (x, y) = match spec.kind {
            ShapeKind::Circle { radius } => {
                let th = TAU * uniform(rng);
                let r = radius * math::sqrt(uniform(rng));
                (cx + r * math::cos(th), cy + r * math::sin(th))
            }
            ShapeKind::Ellipse { a, b } => {
                let th = TAU * uniform(rng);
                let r = math::sqrt(uniform(rng));
                (cx + a * r * math::cos(th), cy + b * r * math::sin(th))
            }
            ShapeKind::Crescent { outer, inner, shift, half_angle } => {
                let t = -half_angle + 2.0 * half_angle * uniform(rng) + s * normal(rng);
                if i < first {
                    let r = outer + s * normal(rng);
                    (cx + r * math::cos(t), cy + r * math::sin(t))
                } else {
                    let r = inner + s * normal(rng);
                    (cx + shift + r * math::cos(t), cy + r * math::sin(t))
                }
            }
            ShapeKind::SCurve { base, amp, freq } => {
                let t = TAU * uniform(rng) + 0.5 * s * normal(rng);
                let r = base + amp * math::sin(freq * t) + s * normal(rng);
                (cx + r * math::cos(t), cy + r * math::sin(t))
            }
            ShapeKind::Diamond { base, amp, petals } => {
                let th = TAU * uniform(rng);
                let r = base + amp * math::cos(petals * th).abs() + s * normal(rng);
                (cx + r * math::cos(th), cy + r * math::sin(th))
            }
            ShapeKind::Ring { inner, outer } => {
                let th = TAU * uniform(rng);
                let r = inner + (outer - inner) * uniform(rng);
                (cx + r * math::cos(th), cy + r * math::sin(th))
            }
            ShapeKind::Cross { half_length, bar_sigma } => {
                let along = 2.0 * half_length * (uniform(rng) - 0.5);
                let across = bar_sigma * normal(rng);
                if i < first {
                    (cx + along, cy + across)
                } else {
                    (cx + across, cy + along)
                }
            }
            ShapeKind::Heart { scale } => {
                let t = TAU * uniform(rng) + s * normal(rng);
                let (hx, hy) = heart(t);
                (cx + scale * hx + s * normal(rng), cy + scale * hy + s * normal(rng))
            }
        };
        let (x, y) = match spec.kind {
            ShapeKind::Circle { .. } | ShapeKind::Ellipse { .. } | ShapeKind::Ring { .. } | ShapeKind::Cross { .. }
                if s > 0.0 =>
            {
                (x + s * normal(rng), y + s * normal(rng))
            }
            _ => (x, y),
        };
        out.set(i, 0, x);
        out.set(i, 1, y);
    }
    Ok(out)
}

/// Unit heart curve; shapes scale it and move it to their center.
pub fn heart(t: f64) -> (f64, f64) {
    let st = math::sin(t);
    (
        16.0 * st * st * st,
        13.0 * math::cos(t) - 5.0 * math::cos(2.0 * t) - 2.0 * math::cos(3.0 * t) - math::cos(4.0 * t),
    )
}

/// Noiseless reference geometry used to measure how far generated points
/// stray from the intended shape.
pub(crate) enum Template {
    Disk { c: [f64; 2], r: f64 },
    Annulus { c: [f64; 2], inner: f64, outer: f64 },
    FilledEllipse { c: [f64; 2], a: f64, b: f64, boundary: Vec<[f64; 2]> },
    /// Union of axis-aligned rectangles `[x0, x1] × [y0, y1]`.
    Boxes(Vec<[f64; 4]>),
    /// Polylines (open or closed) densely sampled from a curve.
    Curves(Vec<Vec<[f64; 2]>>),
}

pub(crate) const TEMPLATE_POINTS: usize = 1000;

/// Half-width, in bar deviations, of the strips that stand in for the
/// cross's Gaussian bars.
pub(crate) const CROSS_STRIP_SIGMAS: f64 = 5.0;

fn sampled(count: usize, closed: bool, f: impl Fn(f64) -> [f64; 2]) -> Vec<[f64; 2]> {
    let steps = if closed { count } else { count - 1 };
    let mut pts: Vec<[f64; 2]> = (0..count).map(|k| f(k as f64 / steps as f64)).collect();
    if closed {
        pts.push(pts[0]);
    }
    pts
}

impl Template {
    pub fn of(spec: &ShapeSpec) -> Self {
        let [cx, cy] = spec.center;
        let c = spec.center;
        match spec.kind {
            ShapeKind::Circle { radius } => Template::Disk { c, r: radius },
            ShapeKind::Ring { inner, outer } => Template::Annulus { c, inner, outer },
            ShapeKind::Ellipse { a, b } => Template::FilledEllipse {
                c,
                a,
                b,
                boundary: sampled(TEMPLATE_POINTS, true, |u| {
                    [cx + a * math::cos(TAU * u), cy + b * math::sin(TAU * u)]
                }),
            },
            ShapeKind::Cross { half_length, bar_sigma } => {
                let w = CROSS_STRIP_SIGMAS * bar_sigma;
                Template::Boxes(alloc::vec![
                    [cx - half_length, cx + half_length, cy - w, cy + w],
                    [cx - w, cx + w, cy - half_length, cy + half_length],
                ])
            }
            ShapeKind::Crescent { outer, inner, shift, half_angle } => {
                let half = TEMPLATE_POINTS / 2;
                let arc = |r: f64, dx: f64| {
                    sampled(half, false, move |u| {
                        let t = -half_angle + 2.0 * half_angle * u;
                        [cx + dx + r * math::cos(t), cy + r * math::sin(t)]
                    })
                };
                Template::Curves(alloc::vec![arc(outer, 0.0), arc(inner, shift)])
            }
            ShapeKind::SCurve { base, amp, freq } => Template::Curves(alloc::vec![sampled(
                TEMPLATE_POINTS,
                true,
                |u| {
                    let t = TAU * u;
                    let r = base + amp * math::sin(freq * t);
                    [cx + r * math::cos(t), cy + r * math::sin(t)]
                }
            )]),
            ShapeKind::Diamond { base, amp, petals } => Template::Curves(alloc::vec![sampled(
                TEMPLATE_POINTS,
                true,
                |u| {
                    let t = TAU * u;
                    let r = base + amp * math::cos(petals * t).abs();
                    [cx + r * math::cos(t), cy + r * math::sin(t)]
                }
            )]),
            ShapeKind::Heart { scale } => Template::Curves(alloc::vec![sampled(
                TEMPLATE_POINTS,
                true,
                |u| {
                    let (hx, hy) = heart(TAU * u);
                    [cx + scale * hx, cy + scale * hy]
                }
            )]),
        }
    }

    pub fn distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Template::Disk { c, r } => (dist(p, *c) - r).max(0.0),
            Template::Annulus { c, inner, outer } => {
                let d = dist(p, *c);
                if d < *inner {
                    inner - d
                } else {
                    (d - outer).max(0.0)
                }
            }
            Template::FilledEllipse { c, a, b, boundary } => {
                let (u, v) = ((p[0] - c[0]) / a, (p[1] - c[1]) / b);
                if u * u + v * v <= 1.0 {
                    0.0
                } else {
                    polyline_distance(boundary, p)
                }
            }
            Template::Boxes(boxes) => boxes
                .iter()
                .map(|&[x0, x1, y0, y1]| {
                    let dx = (x0 - p[0]).max(p[0] - x1).max(0.0);
                    let dy = (y0 - p[1]).max(p[1] - y1).max(0.0);
                    math::hypot(dx, dy)
                })
                .fold(f64::INFINITY, f64::min),
            Template::Curves(curves) => curves
                .iter()
                .map(|c| polyline_distance(c, p))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    math::hypot(p[0] - q[0], p[1] - q[1])
}

fn polyline_distance(pts: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        best = best.min(dist(p, [a[0] + t * ex, a[1] + t * ey]));
    }
    best
}

/// Standardized noise residuals that can be read back from the points
/// alone: radial offsets from the crescent arcs and the diamond outline.
/// Empty for shapes without such a residual or without noise.
pub(crate) fn recoverable_residuals(spec: &ShapeSpec, points: &Matrix) -> Vec<f64> {
    let s = spec.noise_sigma;
    if s <= 0.0 {
        return Vec::new();
    }
    let [cx, cy] = spec.center;
    let n = points.rows();
    match spec.kind {
        ShapeKind::Crescent { outer, inner, shift, .. } => {
            let first = spec.first_part(n);
            (0..n)
                .map(|i| {
                    let p = points.row(i);
                    if i < first {
                        (math::hypot(p[0] - cx, p[1] - cy) - outer) / s
                    } else {
                        (math::hypot(p[0] - cx - shift, p[1] - cy) - inner) / s
                    }
                })
                .collect()
        }
        ShapeKind::Diamond { base, amp, petals } => (0..n)
            .map(|i| {
                let p = points.row(i);
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                let th = math::atan2(dy, dx);
                (math::hypot(dx, dy) - base - amp * math::cos(petals * th).abs()) / s
            })
            .collect(),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn generators_return_n_rows() {
        let mut rng = seeded(1);
        for spec in [
            ShapeSpec::circle(),
            ShapeSpec::ellipse(),
            ShapeSpec::crescent(),
            ShapeSpec::scurve(),
            ShapeSpec::diamond(),
            ShapeSpec::ring(),
            ShapeSpec::cross(),
            ShapeSpec::heart(),
        ] {
            for n in [1, 7, 50] {
                assert_eq!(generate_shape(&spec, n, &mut rng).unwrap().rows(), n);
            }
        }
        assert!(generate_shape(&ShapeSpec::circle(), 0, &mut rng).is_err());
    }

    #[test]
    fn circle_stays_within_radius() {
        let mut rng = seeded(2);
        let x = generate_shape(&ShapeSpec::circle(), 2000, &mut rng).unwrap();
        for p in x.iter_rows() {
            assert!(math::hypot(p[0] - 2.0, p[1] - 2.0) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn heart_spot_check() {
        let (hx, hy) = heart(core::f64::consts::FRAC_PI_2);
        let p = [-2.0 + 0.3 * hx, -2.0 + 0.3 * hy];
        assert!((p[0] - 2.8).abs() < 1e-12 && (p[1] + 0.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_radius() {
        let mut s = ShapeSpec::circle();
        s.kind = ShapeKind::Circle { radius: -1.0 };
        assert!(s.validate().is_err());
        let mut r = ShapeSpec::ring();
        r.kind = ShapeKind::Ring { inner: 2.0, outer: 1.0 };
        assert!(r.validate().is_err());
    }

    #[test]
    fn template_distances() {
        let disk = Template::of(&ShapeSpec::circle());
        assert_eq!(disk.distance([2.0, 2.0]), 0.0);
        assert!((disk.distance([3.0, 2.0]) - 0.5).abs() < 1e-12);
        let ring = Template::of(&ShapeSpec::ring());
        assert!((ring.distance([6.0, 6.0]) - 0.8).abs() < 1e-12);
        assert_eq!(ring.distance([7.0, 6.0]), 0.0);
        let ell = Template::of(&ShapeSpec::ellipse());
        assert_eq!(ell.distance([9.0, 2.1]), 0.0);
        assert!((ell.distance([10.0, 2.0]) - 0.5).abs() < 1e-6);
        let cross = Template::of(&ShapeSpec::cross());
        assert_eq!(cross.distance([6.0, -3.0]), 0.0);
        // the vertical strip reaches x = 7.5
        assert!((cross.distance([8.0, -3.0]) - 0.5).abs() < 1e-12);
    }
}
