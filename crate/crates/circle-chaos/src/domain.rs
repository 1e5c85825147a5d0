//! Planar domain geometry: Green functions, conformal radii, clipped circles,
//! chords of convex bodies and the metric on lines.
//!
//! Points are complex numbers. A [`Domain`] is a translated and scaled copy of
//! a canonical shape (the unit disk centred at the origin or the unit square
//! `[0,1]^2`). The Green function is conformally invariant, so it is evaluated
//! in canonical coordinates; the conformal radius scales linearly.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane.
pub type Point = Complex64;

/// Shorthand constructor for a [`Point`].
#[inline]
pub fn pt(x: f64, y: f64) -> Point {
    Complex64::new(x, y)
}

/// Relative tolerance for boundary membership.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Number of terms of the theta series used by the square's Green function.
/// Eight terms reach machine precision on the whole square.
pub const DEFAULT_THETA_TERMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    UnitDisk,
    UnitSquare,
}

/// A supported domain: a canonical shape moved by `z -> offset + scale * z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    offset: [f64; 2],
    scale: f64,
    #[serde(default = "default_theta_terms")]
    theta_terms: usize,
}

fn default_theta_terms() -> usize {
    DEFAULT_THETA_TERMS
}

impl Domain {
    pub fn new(kind: DomainKind, offset: [f64; 2], scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        if !offset.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("offset must be finite".into()));
        }
        Ok(Self { kind, offset, scale, theta_terms: DEFAULT_THETA_TERMS })
    }

    pub fn unit_disk() -> Self {
        Self { kind: DomainKind::UnitDisk, offset: [0.0, 0.0], scale: 1.0, theta_terms: DEFAULT_THETA_TERMS }
    }

    pub fn unit_square() -> Self {
        Self { kind: DomainKind::UnitSquare, offset: [0.0, 0.0], scale: 1.0, theta_terms: DEFAULT_THETA_TERMS }
    }

    /// Overrides the truncation order of the square's theta series.
    pub fn with_series_terms(mut self, terms: usize) -> Self {
        self.theta_terms = terms.clamp(1, MAX_THETA_TERMS);
        self
    }

    pub fn offset(&self) -> Point {
        pt(self.offset[0], self.offset[1])
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn series_terms(&self) -> usize {
        self.theta_terms
    }

    #[inline]
    pub fn to_canonical(&self, p: Point) -> Point {
        (p - self.offset()) / self.scale
    }

    #[inline]
    pub fn from_canonical(&self, z: Point) -> Point {
        self.offset() + z * self.scale
    }

    /// Geometric centre (the base point used by IFS constructions).
    pub fn center(&self) -> Point {
        match self.kind {
            DomainKind::UnitDisk => self.offset(),
            DomainKind::UnitSquare => self.from_canonical(pt(0.5, 0.5)),
        }
    }

    /// Axis-aligned bounding box as `(min corner, max corner)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let o = self.offset();
        let s = self.scale;
        match self.kind {
            DomainKind::UnitDisk => (o - pt(s, s), o + pt(s, s)),
            DomainKind::UnitSquare => (o, o + pt(s, s)),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => 2.0 * self.scale,
            DomainKind::UnitSquare => std::f64::consts::SQRT_2 * self.scale,
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => PI * self.scale * self.scale,
            DomainKind::UnitSquare => self.scale * self.scale,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => TAU * self.scale,
            DomainKind::UnitSquare => 4.0 * self.scale,
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn depth(&self, p: Point) -> f64 {
        let z = self.to_canonical(p);
        let d = match self.kind {
            DomainKind::UnitDisk => 1.0 - z.norm(),
            DomainKind::UnitSquare => z.re.min(1.0 - z.re).min(z.im).min(1.0 - z.im),
        };
        d * self.scale
    }

    /// Strict interior membership with the boundary tolerance.
    pub fn is_interior(&self, p: Point) -> bool {
        self.depth(p) > BOUNDARY_TOL * self.scale
    }

    /// Membership in the closed domain with the boundary tolerance.
    pub fn contains_closed(&self, p: Point) -> bool {
        self.depth(p) >= -BOUNDARY_TOL * self.scale
    }

    fn require_interior(&self, p: Point) -> Result<()> {
        if self.is_interior(p) {
            Ok(())
        } else {
            Err(Error::PointOutsideDomain { x: p.re, y: p.im })
        }
    }

    /// Dirichlet Green function normalized so that `G(x,y) = -log|x-y| + O(1)`.
    pub fn green_function(&self, x: Point, y: Point) -> Result<f64> {
        self.require_interior(x)?;
        self.require_interior(y)?;
        if (x - y).norm() <= f64::EPSILON * self.scale {
            return Err(Error::GreenSingularity);
        }
        Ok(self.green_unchecked(x, y))
    }

    /// Green function without validation. Points on the boundary give values
    /// close to zero; coincident points give `+inf`.
    #[inline]
    pub(crate) fn green_unchecked(&self, x: Point, y: Point) -> f64 {
        let z = self.to_canonical(x);
        let w = self.to_canonical(y);
        match self.kind {
            DomainKind::UnitDisk => 0.5 * ((Complex64::new(1.0, 0.0) - z * w.conj()).norm_sqr() / (z - w).norm_sqr()).ln(),
            DomainKind::UnitSquare => {
                let t = self.theta_terms;
                -log_abs(theta_f(z - w, t)) - log_abs(theta_f(z + w, t))
                    + log_abs(theta_f(z - w.conj(), t))
                    + log_abs(theta_f(z + w.conj(), t))
            }
        }
    }

    /// Regular part `H(x,y) = G(x,y) + log|x-y|` in physical coordinates.
    /// Smooth on the interior, including the diagonal where it equals `log R(x)`.
    pub(crate) fn regular_part(&self, x: Point, y: Point) -> f64 {
        let z = self.to_canonical(x);
        let w = self.to_canonical(y);
        let canonical = match self.kind {
            DomainKind::UnitDisk => (Complex64::new(1.0, 0.0) - z * w.conj()).norm().ln(),
            DomainKind::UnitSquare => {
                let t = self.theta_terms;
                -log_abs(theta_f_over(z - w, t)) - log_abs(theta_f(z + w, t))
                    + log_abs(theta_f(z - w.conj(), t))
                    + log_abs(theta_f(z + w.conj(), t))
            }
        };
        canonical + self.scale.ln()
    }

    /// Conformal radius `R(x, D)`.
    pub fn conformal_radius(&self, x: Point) -> Result<f64> {
        self.require_interior(x)?;
        Ok(self.regular_part(x, x).exp())
    }

    /// Image charges of `y`: `G(x,y) = sum_k s_k log|x - P_k| + smooth(x,y)` with
    /// `P_0 = y`, `s_0 = -1`. The remaining images lie outside the domain and
    /// carry every singularity of `G(., y)` within unit canonical distance of
    /// the domain, so the remainder is smooth across the closed domain.
    pub(crate) fn images(&self, y: Point) -> Vec<(Point, f64)> {
        let w = self.to_canonical(y);
        let mut out = vec![(y, -1.0)];
        match self.kind {
            DomainKind::UnitDisk => {
                let r2 = w.norm_sqr();
                // The inverse point sits far away when w is near the centre;
                // there the correction log|1 - x conj(w)| is smooth without it.
                if r2 > 0.0625 {
                    out.push((self.from_canonical(w / r2), 1.0));
                }
            }
            DomainKind::UnitSquare => {
                let c = w.conj();
                let two = pt(2.0, 0.0);
                let two_i = pt(0.0, 2.0);
                for p in [c, -c, two - c, c + two_i] {
                    out.push((self.from_canonical(p), 1.0));
                }
                for p in [-w, two - w, two_i - w, two + two_i - w] {
                    out.push((self.from_canonical(p), -1.0));
                }
            }
        }
        out
    }

    /// `G(x,y) - sum_k s_k log|x - P_k|` over the images of `y`.
    pub(crate) fn green_smooth(&self, x: Point, y: Point, images: &[(Point, f64)]) -> f64 {
        let mut v = self.regular_part(x, y);
        for &(p, s) in &images[1..] {
            v -= s * (x - p).norm().ln();
        }
        v
    }

    /// Angular intervals `(start, end)` of the circle `|p - x| = eps` lying in
    /// the closed domain. A full circle is returned as `[(0, 2 pi)]`.
    pub fn circle_arcs(&self, x: Point, eps: f64) -> Vec<(f64, f64)> {
        let z = self.to_canonical(x);
        let r = eps / self.scale;
        // Excluded intervals are written as (centre angle, half width).
        let mut excluded: Vec<(f64, f64)> = Vec::new();
        match self.kind {
            DomainKind::UnitDisk => {
                let rho = z.norm();
                if rho < 1e-15 {
                    if r >= 1.0 {
                        return Vec::new();
                    }
                } else {
                    let kappa = (1.0 - rho * rho - r * r) / (2.0 * r * rho);
                    if kappa <= -1.0 {
                        return Vec::new();
                    }
                    if kappa < 1.0 {
                        excluded.push((z.arg(), kappa.acos()));
                    }
                }
            }
            DomainKind::UnitSquare => {
                let sides = [(z.re, PI), (1.0 - z.re, 0.0), (z.im, 1.5 * PI), (1.0 - z.im, FRAC_PI_2)];
                for (dist, dir) in sides {
                    let c = dist / r;
                    if c < 1.0 {
                        excluded.push((dir, c.max(-1.0).acos()));
                    }
                }
            }
        }
        complement_arcs(&excluded)
    }

    /// True when the whole circle lies in the closed domain.
    pub fn circle_is_full(&self, x: Point, eps: f64) -> bool {
        self.depth(x) >= eps * (1.0 - 1e-14)
    }

    /// Range of displacements `u` for which the line of direction `theta` meets
    /// the closed domain.
    pub fn support_interval(&self, theta: f64) -> (f64, f64) {
        let n = Line::new(theta, 0.0).normal();
        let dot = |p: Point| p.re * n.re + p.im * n.im;
        match self.kind {
            DomainKind::UnitDisk => {
                let c = dot(self.offset());
                (c - self.scale, c + self.scale)
            }
            DomainKind::UnitSquare => {
                let (lo, hi) = self.bounding_box();
                let v = [lo, pt(hi.re, lo.im), hi, pt(lo.re, hi.im)].map(dot);
                let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (min, max)
            }
        }
    }

    /// Intersection of a line with the closed domain.
    pub fn chord_of(&self, line: Line) -> Result<Chord> {
        let d = line.direction();
        let n = line.normal();
        let base = n * line.u;
        let tol = BOUNDARY_TOL * self.scale;
        let (v0, v1) = match self.kind {
            DomainKind::UnitDisk => {
                let o = self.offset();
                let delta = line.u - (o.re * n.re + o.im * n.im);
                let s = self.scale;
                if delta.abs() > s + tol {
                    return Err(Error::NoIntersection);
                }
                let half = (s * s - delta * delta).max(0.0).sqrt();
                let vc = o.re * d.re + o.im * d.im;
                (vc - half, vc + half)
            }
            DomainKind::UnitSquare => {
                let (lo, hi) = self.bounding_box();
                let mut v0 = f64::NEG_INFINITY;
                let mut v1 = f64::INFINITY;
                for (p, dd, a, b) in [(base.re, d.re, lo.re, hi.re), (base.im, d.im, lo.im, hi.im)] {
                    if dd.abs() < 1e-15 {
                        if p < a - tol || p > b + tol {
                            return Err(Error::NoIntersection);
                        }
                    } else {
                        let (t0, t1) = ((a - p) / dd, (b - p) / dd);
                        v0 = v0.max(t0.min(t1));
                        v1 = v1.min(t0.max(t1));
                    }
                }
                if v0 > v1 + tol {
                    return Err(Error::NoIntersection);
                }
                (v0, v1.max(v0))
            }
        };
        let endpoints = [base + d * v0, base + d * v1];
        Ok(Chord { line, endpoints, v_range: (v0, v1), length: v1 - v0 })
    }

    /// Quadrature nodes on the circle `|y - x| = eps` clipped to the domain.
    ///
    /// `m` equally spaced angles `2 pi k / m` are tested; nodes outside the open
    /// domain are dropped and the survivors share weight equally.
    pub fn circle_nodes(&self, x: Point, eps: f64, m: usize) -> Result<Vec<(Point, f64)>> {
        self.circle_nodes_with_phase(x, eps, m, 0.0)
    }

    /// As [`Domain::circle_nodes`] with all angles shifted by `phase`.
    pub fn circle_nodes_with_phase(&self, x: Point, eps: f64, m: usize, phase: f64) -> Result<Vec<(Point, f64)>> {
        self.require_interior(x)?;
        if m < 4 {
            return Err(Error::InvalidInput(format!("circle quadrature needs at least 4 nodes, got {m}")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {eps}")));
        }
        let mut nodes: Vec<Point> = (0..m)
            .map(|k| x + Complex64::from_polar(eps, phase + TAU * k as f64 / m as f64))
            .filter(|&p| self.is_interior(p))
            .collect();
        if nodes.is_empty() {
            return Err(Error::EmptyCircle { x: x.re, y: x.im, radius: eps });
        }
        let w = 1.0 / nodes.len() as f64;
        Ok(nodes.drain(..).map(|p| (p, w)).collect())
    }
}

/// Complement on the circle of a union of closed angular intervals given as
/// (centre, half width). Output intervals start in `[0, 2 pi)`.
fn complement_arcs(excluded: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if excluded.is_empty() {
        return vec![(0.0, TAU)];
    }
    let mut iv: Vec<(f64, f64)> = Vec::new();
    for &(c, h) in excluded {
        if h >= PI {
            return Vec::new();
        }
        let a = (c - h).rem_euclid(TAU);
        let b = a + 2.0 * h;
        if b > TAU {
            iv.push((a, TAU));
            iv.push((0.0, b - TAU));
        } else {
            iv.push((a, b));
        }
    }
    iv.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let mut gaps = Vec::new();
    for i in 0..merged.len() {
        let start = merged[i].1;
        let end = if i + 1 < merged.len() { merged[i + 1].0 } else { merged[0].0 + TAU };
        if end - start > 1e-15 {
            gaps.push((start, end));
        }
    }
    // Normalize starts into [0, 2 pi).
    gaps.into_iter()
        .map(|(a, b)| if a >= TAU { (a - TAU, b - TAU) } else { (a, b) })
        .collect()
}

#[inline]
fn log_abs(z: Complex64) -> f64 {
    0.5 * z.norm_sqr().ln()
}

const MAX_THETA_TERMS: usize = 16;

/// Coefficients `2 (-1)^n q^{(n + 1/2)^2}` of the theta series with nome `q = e^{-pi}`.
static THETA_COEFFS: std::sync::LazyLock<[f64; MAX_THETA_TERMS]> = std::sync::LazyLock::new(|| {
    std::array::from_fn(|n| {
        let k = n as f64 + 0.5;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        2.0 * sign * (-PI * k * k).exp()
    })
});

/// `F(zeta) = theta_1(pi zeta / 2 | q = e^{-pi})`, zeros on the lattice `2Z + 2iZ`.
#[inline]
fn theta_f(zeta: Complex64, terms: usize) -> Complex64 {
    let v = zeta * FRAC_PI_2;
    let mut sum = Complex64::new(0.0, 0.0);
    for (n, c) in THETA_COEFFS.iter().take(terms).enumerate() {
        sum += (v * (2 * n + 1) as f64).sin() * *c;
    }
    sum
}

/// `F(zeta) / zeta`, evaluated stably at the origin.
#[inline]
fn theta_f_over(zeta: Complex64, terms: usize) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (n, c) in THETA_COEFFS.iter().take(terms).enumerate() {
        let freq = (2 * n + 1) as f64 * FRAC_PI_2;
        let u = zeta * freq;
        let sinc = if u.norm() < 1e-4 { Complex64::new(1.0, 0.0) - u * u / 6.0 } else { u.sin() / u };
        sum += sinc * (c * freq);
    }
    sum
}

/// A straight line `{u n + v d : v real}` with `d = (cos theta, sin theta)` and
/// `n = (-sin theta, cos theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub theta: f64,
    pub u: f64,
}

impl Line {
    /// Builds a line; `theta` is reduced modulo pi.
    pub fn new(theta: f64, u: f64) -> Self {
        let mut t = theta.rem_euclid(PI);
        if t >= PI {
            t = 0.0;
        }
        Self { theta: t, u }
    }

    pub fn direction(&self) -> Point {
        pt(self.theta.cos(), self.theta.sin())
    }

    pub fn normal(&self) -> Point {
        pt(-self.theta.sin(), self.theta.cos())
    }

    /// The point at signed position `v` along the line.
    pub fn point(&self, v: f64) -> Point {
        self.normal() * self.u + self.direction() * v
    }
}

/// The metric `|u - u'| + min(|theta - theta'|, pi - |theta - theta'|)`.
pub fn line_metric(l: &Line, l2: &Line) -> f64 {
    let dt = (l.theta - l2.theta).abs();
    (l.u - l2.u).abs() + dt.min(PI - dt).max(0.0)
}

/// Intersection of a line with the closed domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub line: Line,
    pub endpoints: [Point; 2],
    /// Positions of the endpoints along the line.
    pub v_range: (f64, f64),
    pub length: f64,
}

/// Shape of a curve, traversed at unit speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveShape {
    Segment { start: [f64; 2], end: [f64; 2] },
    /// Arc of `radius` about `center` starting at `start_angle` and sweeping
    /// `sweep` radians (negative sweeps run clockwise).
    Arc { center: [f64; 2], radius: f64, start_angle: f64, sweep: f64 },
    Polyline { nodes: Vec<[f64; 2]> },
}

/// A curve parameterized by arc length over `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    shape: CurveShape,
    a: f64,
    b: f64,
    cumulative: Vec<f64>,
}

impl Curve {
    /// Builds the curve starting at parameter `a`; the end parameter is `a`
    /// plus the arc length. Every point must lie in the closed domain.
    pub fn new(domain: &Domain, shape: CurveShape, a: f64) -> Result<Self> {
        let cumulative = match &shape {
            CurveShape::Segment { start, end } => {
                vec![0.0, (pt(end[0], end[1]) - pt(start[0], start[1])).norm()]
            }
            CurveShape::Arc { radius, sweep, .. } => {
                if !(*radius > 0.0) || !sweep.is_finite() {
                    return Err(Error::InvalidInput("arc needs positive radius and finite sweep".into()));
                }
                vec![0.0, radius * sweep.abs()]
            }
            CurveShape::Polyline { nodes } => {
                if nodes.len() < 2 {
                    return Err(Error::InvalidInput("polyline needs at least two nodes".into()));
                }
                let mut acc = vec![0.0];
                for w in nodes.windows(2) {
                    let step = (pt(w[1][0], w[1][1]) - pt(w[0][0], w[0][1])).norm();
                    acc.push(acc.last().unwrap() + step);
                }
                acc
            }
        };
        let length = *cumulative.last().unwrap();
        if !(length > 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput("curve must have positive finite length".into()));
        }
        let curve = Self { shape, a, b: a + length, cumulative };
        // Polygonal pieces of a convex domain stay inside once their vertices do;
        // arcs are checked on a dense sample.
        let checks: Vec<Point> = match &curve.shape {
            CurveShape::Arc { .. } => (0..=1024).map(|i| curve.point_at(a + length * i as f64 / 1024.0)).collect(),
            CurveShape::Segment { start, end } => vec![pt(start[0], start[1]), pt(end[0], end[1])],
            CurveShape::Polyline { nodes } => nodes.iter().map(|p| pt(p[0], p[1])).collect(),
        };
        if let Some(p) = checks.into_iter().find(|&p| !domain.contains_closed(p)) {
            return Err(Error::PointOutsideDomain { x: p.re, y: p.im });
        }
        Ok(curve)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    /// The point at arc-length parameter `s`, clamped to the interval.
    pub fn point_at(&self, s: f64) -> Point {
        let t = (s - self.a).clamp(0.0, self.length());
        match &self.shape {
            CurveShape::Segment { start, end } => {
                let p0 = pt(start[0], start[1]);
                let p1 = pt(end[0], end[1]);
                p0 + (p1 - p0) * (t / self.length())
            }
            CurveShape::Arc { center, radius, start_angle, sweep } => {
                let phi = start_angle + sweep.signum() * t / radius;
                pt(center[0], center[1]) + Complex64::from_polar(*radius, phi)
            }
            CurveShape::Polyline { nodes } => {
                let k = match self.cumulative.binary_search_by(|c| c.total_cmp(&t)) {
                    Ok(i) => i.min(nodes.len() - 2),
                    Err(i) => (i.max(1) - 1).min(nodes.len() - 2),
                };
                let seg = self.cumulative[k + 1] - self.cumulative[k];
                let p0 = pt(nodes[k][0], nodes[k][1]);
                let p1 = pt(nodes[k + 1][0], nodes[k + 1][1]);
                if seg == 0.0 {
                    p0
                } else {
                    p0 + (p1 - p0) * ((t - self.cumulative[k]) / seg)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn disk_green_at_center() {
        let d = Domain::unit_disk();
        let g = d.green_function(pt(0.0, 0.0), pt(0.5, 0.0)).unwrap();
        assert!(close(g, 2f64.ln(), 1e-14));
    }

    #[test]
    fn green_errors() {
        let d = Domain::unit_disk();
        assert!(matches!(d.green_function(pt(0.1, 0.1), pt(0.1, 0.1)), Err(Error::GreenSingularity)));
        assert!(matches!(d.green_function(pt(1.2, 0.0), pt(0.1, 0.1)), Err(Error::PointOutsideDomain { .. })));
        let s = Domain::unit_square();
        assert!(matches!(s.green_function(pt(0.0, 0.5), pt(0.5, 0.5)), Err(Error::PointOutsideDomain { .. })));
    }

    /// Discrete Dirichlet Green function of the 1025-point grid, expanded in the
    /// sine eigenbasis of the five-point Laplacian.
    fn discrete_square_green(x: Point, y: Point) -> f64 {
        let n = 1024usize;
        let mut sum = 0.0;
        for j in 1..n {
            let sj = (j as f64 * PI / (2.0 * n as f64)).sin().powi(2);
            let fx = 2.0 * (j as f64 * PI * x.re).sin() * (j as f64 * PI * y.re).sin();
            for k in 1..n {
                let sk = (k as f64 * PI / (2.0 * n as f64)).sin().powi(2);
                let lambda = 4.0 * (n * n) as f64 * (sj + sk);
                let fy = 2.0 * (k as f64 * PI * x.im).sin() * (k as f64 * PI * y.im).sin();
                sum += fx * fy / lambda;
            }
        }
        TAU * sum
    }

    #[test]
    fn square_green_matches_discrete_laplacian() {
        let s = Domain::unit_square();
        let x = pt(0.5, 0.5);
        let y = pt(0.25, 0.5);
        let g = s.green_function(x, y).unwrap();
        let oracle = discrete_square_green(x, y);
        assert!(close(g, oracle, 1e-4), "{g} vs {oracle}");
    }

    #[test]
    fn square_green_converges_in_series_terms() {
        let x = pt(0.13, 0.71);
        let y = pt(0.92, 0.08);
        let full = Domain::unit_square().green_function(x, y).unwrap();
        let short = Domain::unit_square().with_series_terms(4).green_function(x, y).unwrap();
        assert!(close(full, short, 1e-12));
    }

    /// Conformal radius at the centre of the unit square from the
    /// Schwarz-Christoffel map: `1 / (sqrt 2 * int_0^1 (1 - t^4)^{-1/2} dt)`.
    /// With `t = sin(phi)` the integral becomes `int_0^{pi/2} (1 + sin^2 phi)^{-1/2}`,
    /// a smooth periodic integrand for which the midpoint rule converges fast.
    fn schwarz_christoffel_center_radius() -> f64 {
        let n = 2000;
        let h = FRAC_PI_2 / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let phi = (i as f64 + 0.5) * h;
                h / (1.0 + phi.sin().powi(2)).sqrt()
            })
            .sum();
        1.0 / (std::f64::consts::SQRT_2 * integral)
    }

    #[test]
    fn square_center_conformal_radius() {
        let r = Domain::unit_square().conformal_radius(pt(0.5, 0.5)).unwrap();
        assert!((0.5..=2.0).contains(&r));
        let oracle = schwarz_christoffel_center_radius();
        assert!(close(r, oracle, 1e-6), "{r} vs {oracle}");
    }

    #[test]
    fn disk_conformal_radius() {
        let d = Domain::unit_disk();
        assert!(close(d.conformal_radius(pt(0.0, 0.0)).unwrap(), 1.0, 1e-15));
        assert!(close(d.conformal_radius(pt(0.5, 0.0)).unwrap(), 0.75, 1e-15));
        let moved = Domain::new(DomainKind::UnitDisk, [2.0, -1.0], 3.0).unwrap();
        assert!(close(moved.conformal_radius(pt(3.5, -1.0)).unwrap(), 3.0 * 0.75, 1e-13));
        assert!(matches!(d.conformal_radius(pt(1.0, 0.0)), Err(Error::PointOutsideDomain { .. })));
    }

    #[test]
    fn green_logarithmic_singularity() {
        for d in [Domain::unit_disk(), Domain::unit_square()] {
            let x = d.center() + pt(0.1, 0.05);
            let log_r = d.conformal_radius(x).unwrap().ln();
            for r in [1e-4, 1e-6, 1e-8] {
                let g = d.green_function(x, x + pt(r, 0.0)).unwrap();
                assert!((g / (-r.ln() + log_r) - 1.0).abs() < 0.01);
                assert!(g > 0.0);
            }
        }
    }

    #[test]
    fn circle_nodes_examples() {
        let d = Domain::unit_disk();
        let nodes = d.circle_nodes(pt(0.0, 0.0), 0.5, 4).unwrap();
        assert_eq!(nodes.len(), 4);
        for (k, (p, w)) in nodes.iter().enumerate() {
            let expect = Complex64::from_polar(0.5, FRAC_PI_2 * k as f64);
            assert!((p - expect).norm() < 1e-15);
            assert_eq!(*w, 0.25);
        }
        assert!(matches!(d.circle_nodes(pt(0.0, 0.0), 1.5, 16), Err(Error::EmptyCircle { .. })));
    }

    #[test]
    fn clipped_fraction_matches_intersection_angles() {
        let d = Domain::unit_disk();
        let (x, eps): (f64, f64) = (0.9, 0.2);
        // Law of cosines: the circle leaves the disk where the angle at x between
        // the outward radius and the node satisfies cos = (1 - x^2 - eps^2) / (2 x eps).
        let half_out = ((1.0 - x * x - eps * eps) / (2.0 * x * eps)).acos();
        let fraction = 1.0 - half_out / PI;
        for m in [16usize, 64, 256] {
            let nodes = d.circle_nodes(pt(x, 0.0), eps, m).unwrap();
            let kept = nodes.len() as f64 / m as f64;
            assert!((kept - fraction).abs() <= 2.0 / m as f64);
        }
        let arcs = d.circle_arcs(pt(x, 0.0), eps);
        let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
        assert!(close(total / TAU, fraction, 1e-13));
    }

    #[test]
    fn square_arcs_corner() {
        let s = Domain::unit_square();
        // Quarter circle about a corner-adjacent point: radius exceeds both distances.
        let arcs = s.circle_arcs(pt(0.05, 0.05), 0.5);
        let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
        // Brute force count on a fine angular grid.
        let n = 400_000;
        let inside = (0..n)
            .filter(|k| s.is_interior(pt(0.05, 0.05) + Complex64::from_polar(0.5, TAU * (*k as f64 + 0.5) / n as f64)))
            .count();
        assert!(close(total, TAU * inside as f64 / n as f64, 1e-4));
    }

    #[test]
    fn chords() {
        let d = Domain::unit_disk();
        assert!(close(d.chord_of(Line::new(0.0, 0.0)).unwrap().length, 2.0, 1e-15));
        let tangent = d.chord_of(Line::new(0.0, 1.0)).unwrap();
        assert!(close(tangent.length, 0.0, 1e-7));
        assert!(matches!(d.chord_of(Line::new(0.3, 1.01)), Err(Error::NoIntersection)));
        let c = d.chord_of(Line::new(1.1, 0.4)).unwrap();
        for p in c.endpoints {
            assert!((p.norm() - 1.0).abs() < 1e-10);
        }
        assert!(close((c.endpoints[1] - c.endpoints[0]).norm(), c.length, 1e-14));

        let s = Domain::unit_square();
        let diag = s.chord_of(Line::new(PI / 4.0, 0.0)).unwrap();
        assert!(close(diag.length, 2f64.sqrt(), 1e-14));
        assert!(matches!(s.chord_of(Line::new(0.0, 1.5)), Err(Error::NoIntersection)));
        let edge = s.chord_of(Line::new(0.0, 0.3)).unwrap();
        assert!(close(edge.length, 1.0, 1e-14));
    }

    #[test]
    fn support_intervals() {
        let d = Domain::unit_disk();
        for t in [0.0, 0.7, 2.9] {
            assert_eq!(d.support_interval(t), (-1.0, 1.0));
        }
        let s = Domain::unit_square();
        let (a, b) = s.support_interval(0.0);
        assert!(close(a, 0.0, 1e-15) && close(b, 1.0, 1e-15));
        // Vertex projections onto n = (-sin, cos) at pi/4.
        let n = pt(-(PI / 4.0).sin(), (PI / 4.0).cos());
        let proj: Vec<f64> = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)]
            .iter()
            .map(|p| p.re * n.re + p.im * n.im)
            .collect();
        let (a, b) = s.support_interval(PI / 4.0);
        assert!(close(a, proj.iter().cloned().fold(f64::INFINITY, f64::min), 1e-15));
        assert!(close(b, proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1e-15));
        assert!(close(a, -(0.5f64).sqrt(), 1e-15));
    }

    #[test]
    fn metric_example() {
        let a = Line::new(0.05, 0.0);
        let b = Line::new(PI - 0.05, 0.0);
        assert!(close(line_metric(&a, &b), 0.1, 1e-14));
        assert_eq!(line_metric(&a, &a), 0.0);
        assert!(close(Line::new(PI + 0.2, 0.0).theta, 0.2, 1e-15));
    }

    #[test]
    fn curve_points() {
        let d = Domain::unit_disk();
        let arc = Curve::new(&d, CurveShape::Arc { center: [0.0, 0.0], radius: 0.5, start_angle: 0.0, sweep: PI }, 0.0).unwrap();
        assert!(close(arc.length(), PI / 2.0, 1e-15));
        assert!((arc.point_at(PI / 4.0) - pt(0.0, 0.5)).norm() < 1e-15);
        let poly = Curve::new(&d, CurveShape::Polyline { nodes: vec![[0.0, 0.0], [0.5, 0.0], [0.5, 0.5]] }, 1.0).unwrap();
        assert_eq!(poly.interval(), (1.0, 2.0));
        assert!((poly.point_at(1.75) - pt(0.5, 0.25)).norm() < 1e-15);
        assert!(Curve::new(&d, CurveShape::Segment { start: [0.0, 0.0], end: [1.5, 0.0] }, 0.0).is_err());
    }

    fn line_strategy() -> impl Strategy<Value = Line> {
        (0.0..PI, -1.2f64..1.2).prop_map(|(t, u)| Line::new(t, u))
    }

    proptest! {
        #[test]
        fn green_symmetric(ax in 0.02f64..0.98, ay in 0.02f64..0.98, bx in 0.02f64..0.98, by in 0.02f64..0.98) {
            let s = Domain::unit_square();
            let (x, y) = (pt(ax, ay), pt(bx, by));
            prop_assume!((x - y).norm() > 1e-6);
            let g1 = s.green_function(x, y).unwrap();
            let g2 = s.green_function(y, x).unwrap();
            prop_assert!((g1 - g2).abs() <= 1e-12 * (1.0 + g1.abs()));
            let d = Domain::unit_disk();
            let (x, y) = (x - pt(0.5, 0.5), y - pt(0.5, 0.5));
            let g1 = d.green_function(x, y).unwrap();
            let g2 = d.green_function(y, x).unwrap();
            prop_assert!((g1 - g2).abs() <= 1e-12 * (1.0 + g1.abs()));
            prop_assert!(g1 > 0.0);
        }

        #[test]
        fn koebe_bounds(r in 0.0f64..0.999, phi in 0.0..TAU, sx in 0.001f64..0.999, sy in 0.001f64..0.999) {
            let d = Domain::unit_disk();
            let x = Complex64::from_polar(r, phi);
            let rr = d.conformal_radius(x).unwrap();
            let dist = d.depth(x);
            prop_assert!(dist <= rr * (1.0 + 1e-12) && rr <= 4.0 * dist * (1.0 + 1e-12));
            let s = Domain::unit_square();
            let x = pt(sx, sy);
            let rr = s.conformal_radius(x).unwrap();
            let dist = s.depth(x);
            prop_assert!(dist <= rr * (1.0 + 1e-9) && rr <= 4.0 * dist * (1.0 + 1e-9));
        }

        #[test]
        fn circle_weights_sum_to_one(r in 0.0f64..0.99, phi in 0.0..TAU, eps in 0.01f64..1.5, m in 8usize..200) {
            let d = Domain::unit_disk();
            if let Ok(nodes) = d.circle_nodes(Complex64::from_polar(r, phi), eps, m) {
                let total: f64 = nodes.iter().map(|n| n.1).sum();
                prop_assert!((total - 1.0).abs() < 1e-14);
                prop_assert!(nodes.iter().all(|n| n.1 > 0.0 && d.is_interior(n.0)));
            }
        }

        #[test]
        fn metric_axioms(a in line_strategy(), b in line_strategy(), c in line_strategy()) {
            let ab = line_metric(&a, &b);
            prop_assert!((ab - line_metric(&b, &a)).abs() < 1e-15);
            prop_assert!(ab >= 0.0);
            prop_assert!(line_metric(&a, &c) <= ab + line_metric(&b, &c) + 1e-12);
        }

        #[test]
        fn chord_length_lipschitz_in_u(t in 0.0..PI, u in -0.9f64..0.9, du in -0.05f64..0.05) {
            let d = Domain::unit_disk();
            let u2 = (u + du).clamp(-0.9, 0.9);
            let l1 = d.chord_of(Line::new(t, u)).unwrap().length;
            let l2 = d.chord_of(Line::new(t, u2)).unwrap().length;
            // |d/du 2 sqrt(1-u^2)| = 2|u| / sqrt(1-u^2) peaks at 1.8 / sqrt(0.19).
            let lip = 1.8 / 0.19f64.sqrt();
            prop_assert!((l1 - l2).abs() <= lip * (u - u2).abs() + 1e-12);
        }

        #[test]
        fn chord_holder_constant(a in line_strategy(), b in line_strategy()) {
            let d = Domain::unit_disk();
            let len = |l: Line| d.chord_of(l).map(|c| c.length).unwrap_or(0.0);
            let bound = 4.0 * 2f64.sqrt() * line_metric(&a, &b).sqrt();
            prop_assert!((len(a) - len(b)).abs() <= bound + 1e-12);
        }
    }
}
