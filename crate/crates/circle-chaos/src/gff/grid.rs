//! Spectral grid backend on the unit square `[0,1]^2`.
//!
//! The field is synthesized in the sine eigenbasis of the five-point Laplacian
//! on a grid with `N` intervals per side:
//!
//! `Gamma(i/N, j/N) = c * sum_{a,b} 2 sqrt(2 pi / lambda_ab) xi_ab sin(a pi i/N) sin(b pi j/N)`
//!
//! with `lambda_ab = 4 N^2 (sin^2(a pi / 2N) + sin^2(b pi / 2N))` and an empirical
//! calibration factor `c`. Averaging a mode `sin(a pi x) sin(b pi y)` over a full
//! circle of radius `eps` multiplies it by `J0(pi eps sqrt(a^2 + b^2))`, so circle
//! averages of interior circles are one more sine transform.

use std::sync::{Arc, OnceLock};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustdct::{Dst1, DctPlanner};

use super::{replicate_rng, CircleAverages, FieldSource, DEFAULT_QUADRATURE};
use crate::domain::{Domain, Point};
use crate::error::{Error, Result};

/// Grid values on `(N+1) x (N+1)` points `(i/N, j/N)`, boundary included.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    values: Vec<f64>,
    pub calibration: f64,
    pub seed: u64,
    pub replicate_index: u64,
}

impl GridField {
    /// Wraps raw grid values, indexed `values[i * (N+1) + j]` for the point `(i/N, j/N)`.
    pub fn from_values(n: usize, values: Vec<f64>, calibration: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidInput(format!("grid size must be at least 16, got {n}")));
        }
        if values.len() != (n + 1) * (n + 1) {
            return Err(Error::InvalidInput(format!("expected {} grid values, got {}", (n + 1) * (n + 1), values.len())));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        Ok(Self { n, values, calibration, seed: 0, replicate_index: 0 })
    }

    /// Samples a function at every grid point, boundary included.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            for j in 0..=n {
                values.push(f(i as f64 / n as f64, j as f64 / n as f64));
            }
        }
        Self::from_values(n, values, 1.0)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.n + 1) + j]
    }

    /// Bilinear interpolation at a point of the closed square.
    pub fn interpolate(&self, p: Point) -> f64 {
        let n = self.n as f64;
        let x = (p.re * n).clamp(0.0, n);
        let y = (p.im * n).clamp(0.0, n);
        let i = (x.floor() as usize).min(self.n - 1);
        let j = (y.floor() as usize).min(self.n - 1);
        let (fx, fy) = (x - i as f64, y - j as f64);
        (1.0 - fx) * ((1.0 - fy) * self.at(i, j) + fy * self.at(i, j + 1))
            + fx * ((1.0 - fy) * self.at(i + 1, j) + fy * self.at(i + 1, j + 1))
    }
}

/// Circle average of bilinearly interpolated grid values over
/// [`Domain::circle_nodes`] of the unit square.
pub fn circle_average_on_grid(field: &GridField, x: Point, eps: f64) -> Result<f64> {
    let nodes = Domain::unit_square().circle_nodes(x, eps, DEFAULT_QUADRATURE)?;
    Ok(nodes.iter().map(|&(p, w)| w * field.interpolate(p)).sum())
}

/// Reusable sampler for one grid size and calibration.
pub struct GridSampler {
    n: usize,
    calibration: f64,
    weights: Arc<Vec<f64>>,
    plan: Arc<dyn Dst1<f64>>,
}

impl GridSampler {
    pub fn new(n: usize, calibration: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidInput(format!("grid size must be at least 16, got {n}")));
        }
        if !(calibration > 0.0 && calibration.is_finite()) {
            return Err(Error::InvalidInput(format!("calibration must be positive, got {calibration}")));
        }
        let m = n - 1;
        let s2: Vec<f64> = (1..n)
            .map(|a| (a as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin().powi(2))
            .collect();
        let nn = 4.0 * (n * n) as f64;
        let mut weights = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                let lambda = nn * (s2[a] + s2[b]);
                weights[a * m + b] = 2.0 * (std::f64::consts::TAU / lambda).sqrt();
            }
        }
        let plan = DctPlanner::new().plan_dst1(m);
        Ok(Self { n, calibration, weights: Arc::new(weights), plan })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    /// Draws the sine coefficients of one replicate.
    pub fn spectrum(&self, seed: u64, replicate_index: u64) -> GridSpectrum {
        let mut rng = replicate_rng(seed, replicate_index);
        let coeffs = self
            .weights
            .iter()
            .map(|w| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                self.calibration * w * xi
            })
            .collect();
        GridSpectrum {
            n: self.n,
            coeffs,
            calibration: self.calibration,
            seed,
            replicate_index,
            plan: self.plan.clone(),
            raw: OnceLock::new(),
        }
    }

    /// Monte Carlo variance of the centre circle average of radius `eps`.
    /// Only odd modes contribute at the centre, so only those are drawn.
    pub fn center_variance(&self, eps: f64, n_reps: usize, seed: u64) -> f64 {
        let m = self.n - 1;
        let mut kernel = Vec::new();
        for a in (1..=m).step_by(2) {
            for b in (1..=m).step_by(2) {
                let sa = if (a / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let sb = if (b / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let k = std::f64::consts::PI * eps * ((a * a + b * b) as f64).sqrt();
                kernel.push(self.calibration * self.weights[(a - 1) * m + (b - 1)] * sa * sb * libm::j0(k));
            }
        }
        let total: f64 = (0..n_reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = replicate_rng(seed, r);
                let v: f64 = kernel
                    .iter()
                    .map(|k| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        k * z
                    })
                    .sum();
                v * v
            })
            .sum();
        total / n_reps as f64
    }
}

/// Sine coefficients of one grid replicate.
pub struct GridSpectrum {
    n: usize,
    coeffs: Vec<f64>,
    calibration: f64,
    pub seed: u64,
    pub replicate_index: u64,
    plan: Arc<dyn Dst1<f64>>,
    raw: OnceLock<GridField>,
}

impl GridSpectrum {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// The sampled field on the grid.
    pub fn field(&self) -> &GridField {
        self.raw.get_or_init(|| self.synthesize(&self.coeffs))
    }

    /// Field of full-circle averages of radius `eps` at every grid point.
    pub fn smoothed(&self, eps: f64) -> GridField {
        let m = self.n - 1;
        let mut c = self.coeffs.clone();
        for a in 0..m {
            for b in 0..m {
                let k = std::f64::consts::PI * eps * (((a + 1) * (a + 1) + (b + 1) * (b + 1)) as f64).sqrt();
                c[a * m + b] *= libm::j0(k);
            }
        }
        self.synthesize(&c)
    }

    fn synthesize(&self, coeffs: &[f64]) -> GridField {
        let n = self.n;
        let m = n - 1;
        let mut buf = coeffs.to_vec();
        let mut scratch = vec![0.0; self.plan.get_scratch_len()];
        // Transform along b, transpose, transform along a: v[j][i].
        for row in buf.chunks_exact_mut(m) {
            self.plan.process_dst1_with_scratch(row, &mut scratch);
        }
        let mut t = vec![0.0; m * m];
        transpose(&buf, &mut t, m);
        for row in t.chunks_exact_mut(m) {
            self.plan.process_dst1_with_scratch(row, &mut scratch);
        }
        let mut values = vec![0.0; (n + 1) * (n + 1)];
        for j in 0..m {
            for i in 0..m {
                values[(i + 1) * (n + 1) + (j + 1)] = t[j * m + i];
            }
        }
        GridField { n, values, calibration: self.calibration, seed: self.seed, replicate_index: self.replicate_index }
    }
}

fn transpose(src: &[f64], dst: &mut [f64], m: usize) {
    const B: usize = 32;
    for ib in (0..m).step_by(B) {
        for jb in (0..m).step_by(B) {
            for i in ib..(ib + B).min(m) {
                for j in jb..(jb + B).min(m) {
                    dst[j * m + i] = src[i * m + j];
                }
            }
        }
    }
}

impl CircleAverages for GridSpectrum {
    /// Full circles use the Bessel multiplier; clipped circles fall back to
    /// [`circle_average_on_grid`] on the raw field.
    fn circle_averages(&self, points: &[Point], radius: f64) -> Result<Vec<f64>> {
        let square = Domain::unit_square();
        let smooth = if points.iter().any(|&p| square.circle_is_full(p, radius)) {
            Some(self.smoothed(radius))
        } else {
            None
        };
        points
            .iter()
            .map(|&p| {
                if !square.is_interior(p) {
                    return Err(Error::PointOutsideDomain { x: p.re, y: p.im });
                }
                match &smooth {
                    Some(f) if square.circle_is_full(p, radius) => Ok(f.interpolate(p)),
                    _ => circle_average_on_grid(self.field(), p, radius),
                }
            })
            .collect()
    }

    fn replicate(&self) -> (u64, u64) {
        (self.seed, self.replicate_index)
    }
}

impl FieldSource for GridSampler {
    type Field<'a> = GridSpectrum;

    fn draw(&self, seed: u64, replicate_index: u64) -> Result<GridSpectrum> {
        Ok(self.spectrum(seed, replicate_index))
    }
}

/// One grid replicate (replicate index 0) with the given calibration factor.
pub fn sample_grid(n: usize, seed: u64, calibration: f64) -> Result<GridField> {
    Ok(GridSampler::new(n, calibration)?.spectrum(seed, 0).field().clone())
}

/// Factor matching the grid's centre circle-average variance to
/// `-log eps + log R(centre)`.
pub fn calibrate_grid(n: usize, eps: f64, n_reps: usize, seed: u64) -> Result<f64> {
    if !(eps >= 4.0 / n as f64 && eps <= 0.25) {
        return Err(Error::InvalidInput(format!("calibration radius {eps} outside [4/N, 1/4]")));
    }
    if n_reps < 2 {
        return Err(Error::InvalidInput("calibration needs at least two replicates".into()));
    }
    let sampler = GridSampler::new(n, 1.0)?;
    let var = sampler.center_variance(eps, n_reps, seed);
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::CalibrationFailed(format!("centre variance estimate {var}")));
    }
    Ok((center_target(eps) / var).sqrt())
}

/// `-log eps + log R(centre of the unit square)`.
pub fn center_target(eps: f64) -> f64 {
    let square = Domain::unit_square();
    -eps.ln() + square.conformal_radius(square.center()).expect("centre is interior").ln()
}
