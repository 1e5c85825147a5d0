//! Estimators run on simulated chaos measures.
//!
//! Everything here consumes atoms and field draws produced elsewhere and fits a
//! scaling law: ball masses against radius, Fourier envelopes against
//! frequency, or increments of a parameterized mass against parameter distance.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand_distr::Distribution;
use serde::Serialize;

use crate::domain::{line_metric, Curve, Domain, Line, Point};
use crate::error::{Error, Result};
use crate::gff::{replicate_rng, CircleAverages, ExactEnsemble, FieldSource, Node, NodeSet, DEFAULT_QUADRATURE};
use crate::gmc::{dyadic_radius, gmc_weight, total_mass, GmcApproximant};
use crate::measures::{chord_atoms, curve_atoms, lebesgue_atoms, linear_fit, AtomList, BallIndex};

/// Per-point local dimension estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub radii: Vec<f64>,
    pub slopes: Vec<f64>,
    /// `(bin centre, fraction)`; fractions sum to one.
    pub histogram: Vec<(f64, f64)>,
    pub mean: f64,
    pub median: f64,
    pub target: f64,
}

/// Mesh of an atom list in length units, for radius checks.
fn mesh(atoms: &AtomList) -> f64 {
    let p = atoms.provenance();
    if p.measure == "ifs" {
        p.position_error
    } else {
        p.resolution
    }
}

/// Local dimension by size-biased sampling: centres are drawn from the
/// approximant itself and `log nu(B(x, r))` is regressed on `log r` per centre.
pub fn local_dimension(
    approx: &GmcApproximant,
    radii: &[f64],
    sample_points: usize,
    seed: u64,
    target: f64,
) -> Result<DimensionReport> {
    local_dimension_within(approx, radii, sample_points, seed, target, |_| true)
}

/// [`local_dimension`] with centres drawn from the approximant restricted to
/// `region`; balls still see every atom.
pub fn local_dimension_within(
    approx: &GmcApproximant,
    radii: &[f64],
    sample_points: usize,
    seed: u64,
    target: f64,
    region: impl Fn(Point) -> bool,
) -> Result<DimensionReport> {
    let atoms = &approx.atoms;
    if radii.len() < 2 || sample_points == 0 {
        return Err(Error::FitFailed("need at least two radii and one sample point".into()));
    }
    let h = mesh(atoms);
    if let Some(r) = radii.iter().find(|r| !(**r >= 2.0 * h * (1.0 - 1e-12) && **r <= 0.25)) {
        return Err(Error::ParameterOutOfRange(format!("radius {r} outside [2 mesh, 1/4] with mesh {h}")));
    }
    let weights: Vec<f64> = atoms
        .points()
        .iter()
        .zip(atoms.weights())
        .map(|(p, w)| if region(*p) { *w } else { 0.0 })
        .collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::FitFailed(format!("cannot sample centres: {e}")))?;
    let mut rng = replicate_rng(seed, 0);
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let index = BallIndex::new(atoms.points(), atoms.weights(), rmax);
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mut slopes = Vec::with_capacity(sample_points);
    for _ in 0..sample_points {
        let x = atoms.points()[dist.sample(&mut rng)];
        let lm: Vec<f64> = index.masses(x, radii).iter().map(|m| m.ln()).collect();
        slopes.push(linear_fit(&lr, &lm)?.0);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let mut sorted = slopes.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    Ok(DimensionReport { radii: radii.to_vec(), histogram: histogram(&sorted, 20), slopes, mean, median, target })
}

fn histogram(sorted: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &s in sorted {
        let k = (((s - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, c)| (lo + (k as f64 + 0.5) * width, *c as f64 / sorted.len() as f64))
        .collect()
}

/// Chord measures over a `(theta, u)` grid, sharing one node set per level.
pub struct ChordFamily {
    pub thetas: Vec<f64>,
    pub us: Vec<f64>,
    /// `chords[i][j]` is the chord measure of `Line::new(thetas[i], us[j])`.
    pub chords: Vec<Vec<AtomList>>,
}

impl ChordFamily {
    pub fn new(domain: &Domain, thetas: &[f64], us: &[f64], h: f64) -> Result<Self> {
        if thetas.is_empty() || us.is_empty() {
            return Err(Error::InvalidInput("theta and u grids must be nonempty".into()));
        }
        let chords = thetas
            .iter()
            .map(|&t| {
                us.iter()
                    .map(|&u| match chord_atoms(domain, Line::new(t, u), h) {
                        Err(Error::NoIntersection) => Ok(AtomList::empty(crate::measures::Provenance::new(
                            "chord",
                            h,
                            0.0,
                            "no intersection".into(),
                        ))),
                        other => other,
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { thetas: thetas.to_vec(), us: us.to_vec(), chords })
    }

    /// Every atom position, without repeats.
    pub fn points(&self) -> Vec<Point> {
        unique_points(self.chords.iter().flatten().flat_map(|a| a.points().iter().copied()))
    }

    /// Chaos masses `Y_{(theta, u)}` at `level` from one field draw.
    pub fn masses(&self, field: &impl CircleAverages, gamma: f64, level: u32) -> Result<Vec<Vec<f64>>> {
        self.chords
            .iter()
            .map(|row| {
                row.iter()
                    .map(|a| if a.is_empty() { Ok(0.0) } else { Ok(total_mass(&gmc_weight(a, field, level, gamma)?)) })
                    .collect()
            })
            .collect()
    }

    /// `(Line, Y)` pairs for [`holder_exponent`].
    pub fn samples(&self, masses: &[Vec<f64>]) -> Vec<(Line, f64)> {
        let mut out = Vec::new();
        for (i, &t) in self.thetas.iter().enumerate() {
            for (j, &u) in self.us.iter().enumerate() {
                out.push((Line::new(t, u), masses[i][j]));
            }
        }
        out
    }
}

fn unique_points(points: impl Iterator<Item = Point>) -> Vec<Point> {
    let mut seen = HashSet::new();
    points.filter(|p| seen.insert((p.re.to_bits(), p.im.to_bits()))).collect()
}

/// Node set of all given points at one radius.
pub fn nodes_at(domain: &Domain, points: &[Point], radius: f64) -> Result<NodeSet> {
    NodeSet::new(*domain, unique_points(points.iter().copied()).into_iter().map(|p| Node::new(p, radius)).collect())
}

/// Slice masses of a planar chaos measure and the planar mass from the same draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionField {
    pub thetas: Vec<f64>,
    pub us: Vec<f64>,
    /// `values[i][j] = Y_{(thetas[i], us[j])}`.
    pub values: Vec<Vec<f64>>,
    pub support: Vec<(f64, f64)>,
    pub planar_mass: f64,
    /// `int Y_{(theta, u)} du` per direction.
    pub slice_integrals: Vec<f64>,
    /// `|slice integral / planar mass - 1|` per direction.
    pub fubini_error: Vec<f64>,
}

/// Voronoi cell widths of sorted `us`, with the outer cells clipped to `[lo, hi]`.
fn cell_widths(us: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    (0..us.len())
        .map(|j| {
            let left = if j == 0 { lo } else { 0.5 * (us[j - 1] + us[j]) };
            let right = if j + 1 == us.len() { hi } else { 0.5 * (us[j] + us[j + 1]) };
            (right.min(hi) - left.max(lo)).max(0.0)
        })
        .collect()
}

/// Projection densities on a `(theta, u)` grid, checked against the planar
/// mass by Fubini on one coupled field.
///
/// Chords use step `h_chord`, the planar measure mesh `h_planar`; every atom of
/// both is a node of one exact field at radius `2^{-level}`. At `gamma = 0` no
/// field is drawn and `Y` is the chord length.
#[allow(clippy::too_many_arguments)]
pub fn projection_field(
    domain: &Domain,
    gamma: f64,
    thetas: &[f64],
    us: &[f64],
    h_chord: f64,
    h_planar: f64,
    level: u32,
    seed: u64,
) -> Result<ProjectionField> {
    if !(gamma >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!("gamma = {gamma} must be nonnegative")));
    }
    if us.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("u grid must be strictly increasing".into()));
    }
    let family = ChordFamily::new(domain, thetas, us, h_chord)?;
    let planar = lebesgue_atoms(domain, h_planar)?;
    let (values, planar_mass) = if gamma == 0.0 {
        let v = family.chords.iter().map(|row| row.iter().map(|a| a.total_mass()).collect()).collect();
        (v, planar.total_mass())
    } else {
        let mut points = family.points();
        points.extend_from_slice(planar.points());
        let ensemble = ExactEnsemble::new(nodes_at(domain, &points, dyadic_radius(level))?, DEFAULT_QUADRATURE)?;
        let field = ensemble.draw(seed, 0)?;
        let v = family.masses(&field, gamma, level)?;
        (v, total_mass(&gmc_weight(&planar, &field, level, gamma)?))
    };
    let support: Vec<(f64, f64)> = thetas.iter().map(|&t| domain.support_interval(Line::new(t, 0.0).theta)).collect();
    let slice_integrals: Vec<f64> = values
        .iter()
        .zip(&support)
        .map(|(row, &(lo, hi))| row.iter().zip(cell_widths(us, lo, hi)).map(|(y, w)| y * w).sum())
        .collect();
    let fubini_error = slice_integrals.iter().map(|s| (s / planar_mass - 1.0).abs()).collect();
    Ok(ProjectionField {
        thetas: thetas.to_vec(),
        us: us.to_vec(),
        values,
        support,
        planar_mass,
        slice_integrals,
        fubini_error,
    })
}

/// Envelope decay fit along one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionFit {
    pub angle: f64,
    pub beta: f64,
    /// `(log |xi|, log envelope)` pairs.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierReport {
    pub directions: Vec<DirectionFit>,
    /// Fit over the pooled points of all directions.
    pub pooled_beta: f64,
}

/// `|sum_i w_i e^{i xi . x_i}|`.
pub fn fourier_transform(atoms: &AtomList, xi: Point) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (p, w) in atoms.points().iter().zip(atoms.weights()) {
        let (s, c) = (xi.re * p.re + xi.im * p.im).sin_cos();
        re += w * c;
        im += w * s;
    }
    re.hypot(im)
}

/// Decay exponent of the Fourier transform along each direction.
///
/// `[lo, hi]` is cut into `n_freqs` log-spaced bins; the envelope in a bin is
/// the largest modulus over 16 equally spaced frequencies, which removes the
/// zeros of oscillating transforms. `beta` is minus the log-log slope.
pub fn fourier_decay(
    approx: &GmcApproximant,
    directions: &[f64],
    freq_range: (f64, f64),
    n_freqs: usize,
) -> Result<FourierReport> {
    let (lo, hi) = freq_range;
    if !(lo >= std::f64::consts::TAU * (1.0 - 1e-12) && hi > lo) || n_freqs < 2 || directions.is_empty() {
        return Err(Error::InvalidInput(format!(
            "need 2 pi <= lo < hi, at least two frequencies and one direction; got ({lo}, {hi}), {n_freqs}"
        )));
    }
    const PER_BIN: usize = 16;
    let edges: Vec<f64> = (0..=n_freqs).map(|k| lo * (hi / lo).powf(k as f64 / n_freqs as f64)).collect();
    let mut fits = Vec::with_capacity(directions.len());
    let (mut px, mut py) = (Vec::new(), Vec::new());
    for &angle in directions {
        let dir = Point::from_polar(1.0, angle);
        let points: Vec<(f64, f64)> = edges
            .windows(2)
            .map(|e| {
                let env = (0..PER_BIN)
                    .map(|k| e[0] + (e[1] - e[0]) * (k as f64 + 0.5) / PER_BIN as f64)
                    .map(|f| fourier_transform(&approx.atoms, dir * f))
                    .fold(0.0, f64::max);
                ((e[0] * e[1]).sqrt().ln(), env.ln())
            })
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        let (slope, _) = linear_fit(&x, &y)?;
        px.extend_from_slice(&x);
        py.extend_from_slice(&y);
        fits.push(DirectionFit { angle, beta: -slope, points });
    }
    let (pooled, _) = linear_fit(&px, &py)?;
    Ok(FourierReport { directions: fits, pooled_beta: -pooled })
}

/// Sup-increment scaling of a parameterized mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub scales: Vec<f64>,
    pub sup_increments: Vec<f64>,
    pub pair_counts: Vec<usize>,
    /// Fitted exponent; absent when every increment vanishes.
    pub beta_hat: Option<f64>,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub degenerate: bool,
}

/// Hölder exponent from the largest increment `|Y_s - Y_t|` among pairs with
/// `d(s, t)` in each bucket `(scale/2, scale]`.
pub fn holder_exponent<P>(samples: &[(P, f64)], metric: impl Fn(&P, &P) -> f64, scales: &[f64]) -> Result<HolderReport> {
    if scales.len() < 3 {
        return Err(Error::FitFailed(format!("need at least 3 scales, got {}", scales.len())));
    }
    let mut sup = vec![0.0f64; scales.len()];
    let mut count = vec![0usize; scales.len()];
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let d = metric(&samples[i].0, &samples[j].0);
            let inc = (samples[i].1 - samples[j].1).abs();
            for (k, &s) in scales.iter().enumerate() {
                if d > s / 2.0 && d <= s {
                    sup[k] = sup[k].max(inc);
                    count[k] += 1;
                }
            }
        }
    }
    if let Some(k) = count.iter().position(|c| *c < 30) {
        return Err(Error::FitFailed(format!("scale {} has only {} pairs", scales[k], count[k])));
    }
    let report = HolderReport {
        scales: scales.to_vec(),
        sup_increments: sup.clone(),
        pair_counts: count,
        beta_hat: None,
        residual: 0.0,
        degenerate: true,
    };
    if sup.iter().all(|s| *s == 0.0) {
        return Ok(report);
    }
    if sup.contains(&0.0) {
        return Err(Error::FitFailed("increments vanish at some scales only".into()));
    }
    let x: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = sup.iter().map(|s| s.ln()).collect();
    let (beta, c) = linear_fit(&x, &y)?;
    let residual = (x.iter().zip(&y).map(|(a, b)| (b - beta * a - c).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    Ok(HolderReport { beta_hat: Some(beta), residual, degenerate: false, ..report })
}

/// [`holder_exponent`] for chord masses under the line metric.
pub fn chord_holder(samples: &[(Line, f64)], scales: &[f64]) -> Result<HolderReport> {
    holder_exponent(samples, line_metric, scales)
}

/// Arc-length atoms of a whole curve with their parameter cells.
pub struct CurveFamily {
    pub atoms: AtomList,
    cells: Vec<(f64, f64)>,
}

impl CurveFamily {
    pub fn new(curve: &Curve, h: f64) -> Result<Self> {
        let (a, b) = curve.interval();
        let atoms = curve_atoms(curve, b, h)?;
        let mut s = a;
        let cells = atoms
            .weights()
            .iter()
            .map(|w| {
                let c = (s, s + w);
                s += w;
                c
            })
            .collect();
        Ok(Self { atoms, cells })
    }

    /// `L(t)` for each `t`: the chaos mass of the prefix `[a, t]`, with a cut
    /// cell contributing in proportion to its covered length.
    pub fn lengths(&self, field: &impl CircleAverages, gamma: f64, level: u32, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        let approx = gmc_weight(&self.atoms, field, level, gamma)?;
        Ok(self.prefix_masses(approx.atoms.weights(), t_grid))
    }

    fn prefix_masses(&self, weights: &[f64], t_grid: &[f64]) -> Vec<(f64, f64)> {
        t_grid
            .iter()
            .map(|&t| {
                let l: f64 = self
                    .cells
                    .iter()
                    .zip(weights)
                    .map(|(&(s0, s1), w)| w * ((t - s0) / (s1 - s0)).clamp(0.0, 1.0))
                    .sum();
                (t, l)
            })
            .collect()
    }
}

/// Quantum length `L(t)` of curve prefixes from one exact field draw at radius
/// `2^{-level}`.
pub fn quantum_length(
    domain: &Domain,
    curve: &Curve,
    gamma: f64,
    t_grid: &[f64],
    h: f64,
    level: u32,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let (a, b) = curve.interval();
    if let Some(t) = t_grid.iter().find(|t| !(**t >= a && **t <= b)) {
        return Err(Error::ParameterOutOfRange(format!("t = {t} outside [{a}, {b}]")));
    }
    let family = CurveFamily::new(curve, h)?;
    if gamma == 0.0 {
        return Ok(family.prefix_masses(family.atoms.weights(), t_grid));
    }
    let ensemble = ExactEnsemble::new(nodes_at(domain, family.atoms.points(), dyadic_radius(level))?, DEFAULT_QUADRATURE)?;
    family.lengths(&ensemble.draw(seed, 0)?, gamma, level, t_grid)
}

/// Endpoints `((sqrt 2 - gamma/sqrt 2)^2, (sqrt 2 + gamma/sqrt 2)^2)` of the
/// support of the multifractal spectrum.
pub fn multifractal_interval(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!("gamma = {gamma} must be nonnegative")));
    }
    // Expanded so that rational gamma gives exact endpoints.
    let mid = 2.0 + gamma * gamma / 2.0;
    Ok((mid - 2.0 * gamma, mid + 2.0 * gamma))
}
