//! Exact backend: covariance of circle averages and Cholesky sampling.
//!
//! For circle measures `rho_a`, `rho_b` the covariance is
//! `int int G(z, w) rho_a(dz) rho_b(dw)`. It is evaluated semi-analytically:
//!
//! * averaging `G(., w)` over a full circle is exact by the mean-value property,
//!   `-log max(|w - x|, eps) + H(x, w)`;
//! * over a clipped arc the logarithmic part of every image charge is integrated
//!   in closed form, leaving a smooth remainder for Gauss-Legendre;
//! * the outer integral is split where the two circles cross, so every rule
//!   sees a smooth integrand.

use std::f64::consts::{FRAC_PI_2, TAU};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch};
use faer::{Mat, Par};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{replicate_rng, CircleAverages, FieldSample, FieldSource, NodeSet};
use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::quad::ArcSet;

/// Node with its clipped arcs and cached far-field rules.
struct Prepared {
    arc: ArcSet,
    far: [Vec<(Point, f64)>; 3],
}

const FAR_ORDERS: [usize; 3] = [4, 6, 8];

impl Prepared {
    fn new(domain: &Domain, center: Point, radius: f64) -> Result<Self> {
        let arc = ArcSet::new(domain, center, radius)?;
        let far = if arc.full {
            Default::default()
        } else {
            FAR_ORDERS.map(|q| arc.rule(FRAC_PI_2, q, &[]))
        };
        Ok(Self { arc, far })
    }

    fn far_rule(&self, ratio: f64) -> &[(Point, f64)] {
        let i = if ratio >= 8.0 {
            0
        } else if ratio >= 4.0 {
            1
        } else {
            2
        };
        &self.far[i]
    }

    fn order_key(&self) -> (f64, f64, f64) {
        (self.arc.center.re, self.arc.center.im, self.arc.radius)
    }
}

/// Covariance `E[Gamma(rho_a) Gamma(rho_b)]` of two circle averages.
///
/// `m` sets the resolution of the near-field rules: arcs are cut into pieces
/// of at most `2 pi / (m / 8)` radians carrying eight Gauss-Legendre nodes.
pub fn cov_circle_avg(domain: &Domain, a: (Point, f64), b: (Point, f64), m: usize) -> Result<f64> {
    for (c, _) in [a, b] {
        if !domain.is_interior(c) {
            return Err(Error::PointOutsideDomain { x: c.re, y: c.im });
        }
    }
    let pa = Prepared::new(domain, a.0, a.1)?;
    let pb = Prepared::new(domain, b.0, b.1)?;
    Ok(cov_prepared(domain, &pa, &pb, m))
}

fn cov_prepared(domain: &Domain, a: &Prepared, b: &Prepared, m: usize) -> f64 {
    // A fixed order makes the result exactly symmetric.
    let (a, b) = if a.order_key().partial_cmp(&b.order_key()) == Some(std::cmp::Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    };
    let near_piece = TAU / (m / 8).max(1) as f64;
    if a.arc.full && b.arc.full {
        return full_full(domain, &a.arc, &b.arc);
    }
    let (inner, outer) = if a.arc.full || !b.arc.full { (a, b) } else { (b, a) };
    let (xi, ri) = (inner.arc.center, inner.arc.radius);
    let (xo, ro) = (outer.arc.center, outer.arc.radius);
    let dist = (xi - xo).norm();
    let rmax = ri.max(ro);
    let far = dist >= ri + ro + rmax;
    let ratio = dist / rmax;
    match (inner.arc.full, far) {
        (true, true) => outer.far_rule(ratio).iter().map(|&(w, wt)| wt * domain.green_unchecked(w, xi)).sum(),
        (true, false) => near_full(domain, &inner.arc, &outer.arc, near_piece),
        (false, true) => {
            let ra = inner.far_rule(ratio);
            let rb = outer.far_rule(ratio);
            ra.iter()
                .map(|&(z, wz)| wz * rb.iter().map(|&(w, ww)| ww * domain.green_unchecked(z, w)).sum::<f64>())
                .sum()
        }
        (false, false) => near_clipped(domain, &inner.arc, &outer.arc, near_piece),
    }
}

/// Average of `-log max(|w - x_a|, eps_a)` over the full circle `b`, plus the
/// harmonic correction at the two centres.
fn full_full(domain: &Domain, a: &ArcSet, b: &ArcSet) -> f64 {
    let breaks = b.crossings(a.center, a.radius);
    let rel = a.center - b.center;
    let mut s = 0.0;
    if breaks.is_empty() {
        let d = rel.norm();
        let v = if d >= a.radius + b.radius {
            d.ln()
        } else if d + b.radius <= a.radius {
            // b inside the disk of a.
            a.radius.ln()
        } else {
            // a inside the disk of b.
            b.radius.ln()
        };
        s = -v * TAU;
    } else {
        for (p0, p1) in b.pieces(TAU, &breaks) {
            let mid = b.point(0.5 * (p0 + p1));
            if (mid - a.center).norm() < a.radius {
                s -= a.radius.ln() * (p1 - p0);
            } else {
                s -= crate::quad::log_integral(rel, b.radius, p0, p1);
            }
        }
    }
    s / TAU + domain.regular_part(a.center, b.center)
}

/// Inner circle full, outer clipped, circles close.
fn near_full(domain: &Domain, inner: &ArcSet, outer: &ArcSet, piece: f64) -> f64 {
    let breaks = outer.crossings(inner.center, inner.radius);
    let rel = inner.center - outer.center;
    let gl = crate::quad::gauss_legendre(8);
    let mut s = 0.0;
    for (p0, p1) in outer.pieces(piece, &breaks) {
        let half = 0.5 * (p1 - p0);
        let mid = 0.5 * (p0 + p1);
        if (outer.point(mid) - inner.center).norm() < inner.radius {
            s -= inner.radius.ln() * (p1 - p0);
        } else {
            s -= crate::quad::log_integral(rel, outer.radius, p0, p1);
        }
        for &(x, w) in gl {
            let pnt = outer.point(mid + half * x);
            s += w * half * domain.regular_part(pnt, inner.center);
        }
    }
    s / outer.total
}

/// Both circles clipped and close.
fn near_clipped(domain: &Domain, inner: &ArcSet, outer: &ArcSet, piece: f64) -> f64 {
    let breaks = outer.crossings(inner.center, inner.radius);
    let outer_rule = outer.rule(piece, 8, &breaks);
    let inner_rule = inner.rule(FRAC_PI_2, 8, &[]);
    outer_rule
        .iter()
        .map(|&(w, ww)| {
            let images = domain.images(w);
            let singular: f64 = images.iter().map(|&(p, sign)| sign * inner.log_average(p)).sum();
            let smooth: f64 = inner_rule.iter().map(|&(z, wz)| wz * domain.green_smooth(z, w, &images)).sum();
            ww * (singular + smooth)
        })
        .sum()
}

/// Covariance matrix of a node set with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    matrix: Mat<f64>,
    factor: Mat<f64>,
    jitter: f64,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// Lower-triangular factor of `matrix + jitter * I`.
    pub fn factor(&self) -> &Mat<f64> {
        &self.factor
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Factorizes a given symmetric matrix, escalating diagonal jitter
    /// geometrically from `1e-12` up to `1e-6` times the largest diagonal entry.
    pub fn from_matrix(matrix: Mat<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::InvalidInput("covariance matrix must be square".into()));
        }
        let max_diag = (0..n).map(|i| matrix[(i, i)]).fold(0.0f64, f64::max);
        let cap = 1e-6 * max_diag;
        let mut jitter = 1e-12;
        let mut scratch = MemBuffer::new(cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
        loop {
            let mut l = Mat::<f64>::zeros(n, n);
            for j in 0..n {
                for i in j..n {
                    l[(i, j)] = matrix[(i, j)];
                }
                l[(j, j)] += jitter;
            }
            let ok = cholesky_in_place(
                l.as_mut(),
                Default::default(),
                Par::Seq,
                MemStack::new(&mut scratch),
                Default::default(),
            )
            .is_ok();
            if ok {
                for j in 0..n {
                    for i in 0..j {
                        l[(i, j)] = 0.0;
                    }
                }
                return Ok(Self { matrix, factor: l, jitter });
            }
            jitter *= 10.0;
            if jitter > cap {
                return Err(Error::CovarianceNotPsd { jitter });
            }
        }
    }
}

/// Assembles the full covariance matrix of a node set and factorizes it.
pub fn build_covariance(nodeset: &NodeSet, m: usize) -> Result<CovarianceMatrix> {
    let domain = *nodeset.domain();
    let prepared: Vec<Prepared> = nodeset
        .nodes()
        .par_iter()
        .map(|n| Prepared::new(&domain, n.center, n.radius))
        .collect::<Result<_>>()?;
    let n = prepared.len();
    let mut matrix = Mat::<f64>::zeros(n, n);
    const BLOCK: usize = 256;
    for start in (0..n).step_by(BLOCK) {
        let end = (start + BLOCK).min(n);
        let cols: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|j| (0..=j).map(|i| cov_prepared(&domain, &prepared[i], &prepared[j], m)).collect())
            .collect();
        for (j, col) in (start..end).zip(cols) {
            for (i, v) in col.into_iter().enumerate() {
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
    }
    CovarianceMatrix::from_matrix(matrix)
}

/// One replicate: `L z` with `z` standard normal from the replicate's stream.
pub fn sample_one(cov: &CovarianceMatrix, seed: u64, replicate_index: u64) -> FieldSample {
    let n = cov.dim();
    let mut rng = replicate_rng(seed, replicate_index);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut values = vec![0.0; n];
    for (j, &zj) in z.iter().enumerate() {
        let col = &cov.factor.col_as_slice(j)[j..];
        for (v, l) in values[j..].iter_mut().zip(col) {
            *v += l * zj;
        }
    }
    FieldSample { values, seed, replicate_index }
}

/// Replicates `0..n_reps`, each a pure function of `(seed, replicate_index)`.
pub fn sample_exact(cov: &CovarianceMatrix, n_reps: usize, seed: u64) -> Vec<FieldSample> {
    (0..n_reps as u64).into_par_iter().map(|r| sample_one(cov, seed, r)).collect()
}

/// Circle averages read from an exact-backend sample by node lookup.
pub struct ExactField<'a> {
    pub nodes: &'a NodeSet,
    pub sample: FieldSample,
}

impl CircleAverages for ExactField<'_> {
    fn circle_averages(&self, points: &[Point], radius: f64) -> Result<Vec<f64>> {
        if self.sample.values.len() != self.nodes.len() {
            return Err(Error::NodeMismatch(format!(
                "sample has {} values for {} nodes",
                self.sample.values.len(),
                self.nodes.len()
            )));
        }
        points
            .iter()
            .map(|&p| {
                self.nodes
                    .position(p, radius)
                    .map(|i| self.sample.values[i])
                    .ok_or_else(|| Error::NodeMismatch(format!("no node at ({}, {}) radius {radius}", p.re, p.im)))
            })
            .collect()
    }

    fn replicate(&self) -> (u64, u64) {
        (self.sample.seed, self.sample.replicate_index)
    }
}

/// Largest node set the exact backend accepts: the dense factor of this many
/// nodes takes about 1.2 GB.
pub const EXACT_NODE_BUDGET: usize = 12_000;

/// A node set with its factorized covariance, ready to draw replicates.
pub struct ExactEnsemble {
    nodes: NodeSet,
    cov: CovarianceMatrix,
}

impl ExactEnsemble {
    pub fn new(nodes: NodeSet, m: usize) -> Result<Self> {
        if nodes.len() > EXACT_NODE_BUDGET {
            return Err(Error::LadderTooLarge { nodes: nodes.len(), budget: EXACT_NODE_BUDGET });
        }
        let cov = build_covariance(&nodes, m)?;
        Ok(Self { nodes, cov })
    }

    /// Every (point, radius) pair; the budget is checked before any work.
    pub fn ladder(domain: Domain, points: &[Point], radii: &[f64], m: usize) -> Result<Self> {
        let count = points.len() * radii.len();
        if count > EXACT_NODE_BUDGET {
            return Err(Error::LadderTooLarge { nodes: count, budget: EXACT_NODE_BUDGET });
        }
        Self::new(NodeSet::ladder(domain, points, radii)?, m)
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn sample(&self, seed: u64, replicate_index: u64) -> FieldSample {
        sample_one(&self.cov, seed, replicate_index)
    }
}

impl FieldSource for ExactEnsemble {
    type Field<'a> = ExactField<'a>;

    fn draw(&self, seed: u64, replicate_index: u64) -> Result<ExactField<'_>> {
        Ok(ExactField { nodes: &self.nodes, sample: self.sample(seed, replicate_index) })
    }
}
