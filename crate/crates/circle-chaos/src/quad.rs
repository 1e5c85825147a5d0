//! Quadrature on circular arcs.
//!
//! The logarithmic kernel is integrated exactly over arcs through the complex
//! dilogarithm; only smooth remainders are left to Gauss-Legendre rules.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use polylog::Li2;

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};

const MAX_GL: usize = 32;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(q: usize) -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..=MAX_GL).map(gl_rule).collect());
    &table[q.clamp(1, MAX_GL)]
}

fn gl_rule(q: usize) -> Vec<(f64, f64)> {
    if q == 0 {
        return Vec::new();
    }
    let n = q as f64;
    (0..q)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=q {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// The part of a circle lying in the closed domain, as angular intervals.
#[derive(Debug, Clone)]
pub(crate) struct ArcSet {
    pub center: Point,
    pub radius: f64,
    pub arcs: Vec<(f64, f64)>,
    pub total: f64,
    pub full: bool,
}

impl ArcSet {
    pub fn new(domain: &Domain, center: Point, radius: f64) -> Result<Self> {
        if domain.circle_is_full(center, radius) {
            return Ok(Self { center, radius, arcs: vec![(0.0, TAU)], total: TAU, full: true });
        }
        let arcs = domain.circle_arcs(center, radius);
        let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
        if !(total > 1e-13) {
            return Err(Error::EmptyCircle { x: center.re, y: center.im, radius });
        }
        Ok(Self { center, radius, arcs, total, full: false })
    }

    #[inline]
    pub fn point(&self, phi: f64) -> Point {
        self.center + Complex64::from_polar(self.radius, phi)
    }

    /// Gauss-Legendre rule on the arcs, `q` nodes per piece of angle at most
    /// `max_piece`, with optional extra breakpoints. Weights sum to one.
    pub fn rule(&self, max_piece: f64, q: usize, breaks: &[f64]) -> Vec<(Point, f64)> {
        let gl = gauss_legendre(q);
        let mut out = Vec::new();
        for piece in self.pieces(max_piece, breaks) {
            let (a, b) = piece;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for &(x, w) in gl {
                out.push((self.point(mid + half * x), w * half / self.total));
            }
        }
        out
    }

    /// The arcs cut at the given angles and subdivided to at most `max_piece`.
    pub fn pieces(&self, max_piece: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &(a, b) in &self.arcs {
            let mut cuts = vec![a, b];
            for &t in breaks {
                // Place the break in the window [a, a + 2 pi).
                let t = a + (t - a).rem_euclid(TAU);
                if t > a + 1e-14 && t < b - 1e-14 {
                    cuts.push(t);
                }
            }
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                let len = w[1] - w[0];
                if len <= 0.0 {
                    continue;
                }
                let k = (len / max_piece).ceil().max(1.0) as usize;
                let step = len / k as f64;
                for i in 0..k {
                    out.push((w[0] + step * i as f64, w[0] + step * (i + 1) as f64));
                }
            }
        }
        out
    }

    /// Normalized average of `log|z - p|` over the arcs, exact.
    pub fn log_average(&self, p: Point) -> f64 {
        let a = p - self.center;
        if self.full {
            return a.norm().max(self.radius).ln();
        }
        let mut s = 0.0;
        for &(p0, p1) in &self.arcs {
            s += log_integral(a, self.radius, p0, p1);
        }
        s / self.total
    }

    /// Angles on this circle where it meets the circle `|z - c| = r`.
    pub fn crossings(&self, c: Point, r: f64) -> Vec<f64> {
        circle_crossings(self.center, self.radius, c, r)
    }
}

/// `int_{p0}^{p1} log|r e^{i phi} - a| d phi`, exact.
pub(crate) fn log_integral(a: Complex64, r: f64, p0: f64, p1: f64) -> f64 {
    let rho = a.norm();
    let len = p1 - p0;
    if rho <= r {
        // log|r e^{i phi} - a| = log r + Re log(1 - s e^{-i phi}), s = a / r.
        let s = a / r;
        if s.norm() < 1e-300 {
            return len * r.ln();
        }
        let d = li2(s * Complex64::from_polar(1.0, -p1)) - li2(s * Complex64::from_polar(1.0, -p0));
        len * r.ln() + d.im
    } else {
        // log|a - r e^{i phi}| = log rho + Re log(1 - t e^{i phi}), t = r / a.
        let t = Complex64::new(r, 0.0) / a;
        let d = li2(t * Complex64::from_polar(1.0, p1)) - li2(t * Complex64::from_polar(1.0, p0));
        len * rho.ln() - d.im
    }
}

#[inline]
fn li2(z: Complex64) -> Complex64 {
    z.li2()
}

/// Angles on circle `(c1, r1)` where it meets circle `(c2, r2)`.
pub(crate) fn circle_crossings(c1: Point, r1: f64, c2: Point, r2: f64) -> Vec<f64> {
    let d = c2 - c1;
    let dist = d.norm();
    if dist == 0.0 || dist > r1 + r2 || dist < (r1 - r2).abs() {
        return Vec::new();
    }
    // |c1 + r1 e^{i phi} - c2| = r2 gives cos(phi - arg d) = (r1^2 + dist^2 - r2^2) / (2 r1 dist).
    let c = ((r1 * r1 + dist * dist - r2 * r2) / (2.0 * r1 * dist)).clamp(-1.0, 1.0);
    let base = d.arg();
    let h = c.acos();
    vec![base - h, base + h]
}
