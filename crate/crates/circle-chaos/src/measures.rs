//! Base measures discretized to weighted atoms.
//!
//! Every measure the chaos pipeline consumes is reduced here to an
//! [`AtomList`]: Lebesgue measure on the domain, arc length on a chord or a
//! curve prefix, and self-similar measures of an iterated function system.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{pt, Curve, Domain, Line, Point};
use crate::error::{Error, Result};

/// Largest number of words [`ifs_atoms`] will enumerate.
pub const IFS_WORD_BUDGET: f64 = 1e7;

/// Where an atom list came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Short name of the source measure, e.g. `lebesgue` or `chord`.
    pub measure: String,
    /// Mesh size, arc-length step or IFS depth.
    pub resolution: f64,
    /// Bound on how far an atom sits from the mass it represents.
    pub position_error: f64,
    #[serde(default)]
    pub detail: String,
}

impl Provenance {
    pub fn new(measure: &str, resolution: f64, position_error: f64, detail: String) -> Self {
        Self { measure: measure.to_string(), resolution, position_error, detail }
    }
}

/// A finite measure `sum_i w_i delta_{x_i}` with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomList {
    points: Vec<Point>,
    weights: Vec<f64>,
    total: f64,
    provenance: Provenance,
}

impl AtomList {
    pub fn new(points: Vec<Point>, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!("{} points but {} weights", points.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("atom weight {w} is not positive and finite")));
        }
        if let Some(p) = points.iter().find(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::InvalidInput(format!("atom position ({}, {}) is not finite", p.re, p.im)));
        }
        let total = kahan_sum(&weights);
        Ok(Self { points, weights, total, provenance })
    }

    pub fn empty(provenance: Provenance) -> Self {
        Self { points: Vec::new(), weights: Vec::new(), total: 0.0, provenance }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Same positions and provenance, new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), weights, self.provenance.clone())
    }

    /// Atoms in `keep`, in order.
    pub fn filter(&self, keep: impl Fn(Point) -> bool) -> Self {
        let (points, weights): (Vec<Point>, Vec<f64>) = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| keep(**p))
            .map(|(p, w)| (*p, *w))
            .unzip();
        let total = kahan_sum(&weights);
        Self { points, weights, total, provenance: self.provenance.clone() }
    }

    /// CSV with header `x,y,weight` and 17 significant digits.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "y", "weight"]).map_err(csv_error)?;
        for (p, wt) in self.points.iter().zip(&self.weights) {
            out.write_record([fmt17(p.re), fmt17(p.im), fmt17(*wt)]).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl std::io::Read, provenance: Provenance) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let (mut points, mut weights) = (Vec::new(), Vec::new());
        for rec in rdr.deserialize::<(f64, f64, f64)>() {
            let (x, y, w) = rec.map_err(csv_error)?;
            points.push(pt(x, y));
            weights.push(w);
        }
        Self::new(points, weights, provenance)
    }

    /// JSON lines: a provenance header, then one `{"x", "y", "w"}` object per atom.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        let header = serde_json::json!({ "provenance": self.provenance, "total_mass": self.total, "atoms": self.len() });
        writeln!(w, "{header}")?;
        for (p, wt) in self.points.iter().zip(&self.weights) {
            writeln!(w, "{}", serde_json::json!({ "x": p.re, "y": p.im, "w": wt }))?;
        }
        Ok(())
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            provenance: Provenance,
        }
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            y: f64,
            w: f64,
        }
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::Format("empty atom file".into()))??;
        let header: Header = serde_json::from_str(&first).map_err(|e| Error::Format(e.to_string()))?;
        let (mut points, mut weights) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(&line).map_err(|e| Error::Format(e.to_string()))?;
            points.push(pt(row.x, row.y));
            weights.push(row.w);
        }
        Self::new(points, weights, header.provenance)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Shortest-round-trip-safe decimal rendering with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn kahan_sum(xs: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for &x in xs {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Lebesgue measure on the domain: one atom of weight `h^2` at every interior
/// cell centre of the mesh anchored at the bounding box corner. Meshes up to
/// `h = 1/2` are accepted.
pub fn lebesgue_atoms(domain: &Domain, h: f64) -> Result<AtomList> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::ParameterOutOfRange(format!("mesh size {h} outside (0, 1/2]")));
    }
    let (lo, hi) = domain.bounding_box();
    let nx = ((hi.re - lo.re) / h).round() as usize;
    let ny = ((hi.im - lo.im) / h).round() as usize;
    let mut points = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let p = pt(lo.re + (i as f64 + 0.5) * h, lo.im + (j as f64 + 0.5) * h);
            if domain.is_interior(p) {
                points.push(p);
            }
        }
    }
    let weights = vec![h * h; points.len()];
    let prov = Provenance::new("lebesgue", h, h / std::f64::consts::SQRT_2, format!("{:?}", domain.kind));
    AtomList::new(points, weights, prov)
}

/// Arc length on the chord `line ∩ D`.
///
/// Cells are `[k h, (k+1) h]` in the coordinate `v` along the line measured from
/// the foot of the perpendicular, so the lattice moves continuously with the
/// line. End cells are truncated and carry their truncated length.
pub fn chord_atoms(domain: &Domain, line: Line, h: f64) -> Result<AtomList> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("step {h} must be positive")));
    }
    let chord = domain.chord_of(line)?;
    let prov = Provenance::new(
        "chord",
        h,
        h / 2.0,
        format!("theta={} u={}", line.theta, line.u),
    );
    let (v0, v1) = chord.v_range;
    let (points, weights) = lattice_cells(v0, v1, h, |v| line.point(v));
    let keep: Vec<usize> = (0..points.len()).filter(|&i| domain.is_interior(points[i])).collect();
    if keep.is_empty() {
        return Ok(AtomList::empty(prov));
    }
    AtomList::new(keep.iter().map(|&i| points[i]).collect(), keep.iter().map(|&i| weights[i]).collect(), prov)
}

/// Cells `[k h, (k+1) h] ∩ [s0, s1]` of positive length, as (midpoint image, length).
fn lattice_cells(s0: f64, s1: f64, h: f64, map: impl Fn(f64) -> Point) -> (Vec<Point>, Vec<f64>) {
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    if !(s1 > s0) {
        return (points, weights);
    }
    let k0 = (s0 / h).floor() as i64;
    let k1 = (s1 / h).ceil() as i64;
    for k in k0..k1 {
        let a = (k as f64 * h).max(s0);
        let b = ((k + 1) as f64 * h).min(s1);
        if b - a > 1e-14 * h {
            points.push(map(0.5 * (a + b)));
            weights.push(b - a);
        }
    }
    (points, weights)
}

/// Arc length on the prefix `f([a, t])` of a curve, in cells of length `h`
/// anchored at `a`.
pub fn curve_atoms(curve: &Curve, t: f64, h: f64) -> Result<AtomList> {
    let (a, b) = curve.interval();
    if !(t >= a && t <= b) {
        return Err(Error::ParameterOutOfRange(format!("t = {t} outside [{a}, {b}]")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("step {h} must be positive")));
    }
    let prov = Provenance::new("curve", h, h / 2.0, format!("prefix [{a}, {t}]"));
    let (points, weights) = lattice_cells(0.0, t - a, h, |s| curve.point_at(a + s));
    if points.is_empty() {
        return Ok(AtomList::empty(prov));
    }
    AtomList::new(points, weights, prov)
}

/// One similarity `z -> ratio e^{i rotation} z + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfsMap {
    pub ratio: f64,
    #[serde(default)]
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl IfsMap {
    #[inline]
    pub fn apply(&self, z: Point) -> Point {
        Complex64::from_polar(self.ratio, self.rotation) * z + pt(self.translation[0], self.translation[1])
    }
}

/// A self-similar measure: similarities, their probabilities and the depth at
/// which the coding map is truncated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub maps: Vec<IfsMap>,
    pub probabilities: Vec<f64>,
    pub depth: u32,
}

impl IfsSpec {
    /// Checks the probability vector, the ratios and that each map sends the
    /// domain's bounding box into the closed domain.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let m = self.maps.len();
        if m < 2 || self.probabilities.len() != m {
            return Err(Error::InvalidInput(format!(
                "need at least two maps with one probability each, got {m} maps and {} probabilities",
                self.probabilities.len()
            )));
        }
        if self.probabilities.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidInput("IFS probabilities must be positive".into()));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("IFS probabilities sum to {sum}, not 1")));
        }
        let (lo, hi) = domain.bounding_box();
        let corners = [lo, pt(hi.re, lo.im), hi, pt(lo.re, hi.im)];
        for (i, map) in self.maps.iter().enumerate() {
            if !(map.ratio > 0.0 && map.ratio < 1.0) {
                return Err(Error::InvalidInput(format!("map {i} has ratio {} outside (0, 1)", map.ratio)));
            }
            // The image of the box is the convex hull of its corner images and
            // the domain is convex.
            if let Some(c) = corners.iter().map(|&c| map.apply(c)).find(|&c| !domain.contains_closed(c)) {
                return Err(Error::InvalidInput(format!(
                    "map {i} sends the bounding box outside the domain, e.g. to ({}, {})",
                    c.re, c.im
                )));
            }
        }
        Ok(())
    }

    /// Largest contraction ratio.
    pub fn max_ratio(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio).fold(0.0, f64::max)
    }

    /// Heuristic separation check: the depth-one images of the bounding box
    /// have pairwise disjoint axis-aligned hulls. This does not verify the
    /// open set condition.
    pub fn first_level_disjoint(&self, domain: &Domain) -> bool {
        let (lo, hi) = domain.bounding_box();
        let corners = [lo, pt(hi.re, lo.im), hi, pt(lo.re, hi.im)];
        let boxes: Vec<(Point, Point)> = self
            .maps
            .iter()
            .map(|m| {
                let img = corners.map(|c| m.apply(c));
                let fold = |f: fn(f64, f64) -> f64, part: fn(&Point) -> f64, init: f64| {
                    img.iter().map(part).fold(init, f)
                };
                (
                    pt(fold(f64::min, |p| p.re, f64::INFINITY), fold(f64::min, |p| p.im, f64::INFINITY)),
                    pt(fold(f64::max, |p| p.re, f64::NEG_INFINITY), fold(f64::max, |p| p.im, f64::NEG_INFINITY)),
                )
            })
            .collect();
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                let (a, b) = (boxes[i], boxes[j]);
                let overlap_x = a.0.re < b.1.re && b.0.re < a.1.re;
                let overlap_y = a.0.im < b.1.im && b.0.im < a.1.im;
                if overlap_x && overlap_y {
                    return false;
                }
            }
        }
        true
    }
}

/// All depth-`d` cylinder images of the domain centre, weighted by word probability.
pub fn ifs_atoms(domain: &Domain, spec: &IfsSpec) -> Result<AtomList> {
    spec.validate(domain)?;
    let words = (spec.maps.len() as f64).powi(spec.depth as i32);
    if words > IFS_WORD_BUDGET {
        return Err(Error::IfsTooDeep { words, budget: IFS_WORD_BUDGET });
    }
    let mut points = vec![domain.center()];
    let mut weights = vec![1.0];
    // Applying the outer map last keeps words in lexicographic order.
    for _ in 0..spec.depth {
        let mut np = Vec::with_capacity(points.len() * spec.maps.len());
        let mut nw = Vec::with_capacity(points.len() * spec.maps.len());
        for (map, p) in spec.maps.iter().zip(&spec.probabilities) {
            for (z, w) in points.iter().zip(&weights) {
                np.push(map.apply(*z));
                nw.push(w * p);
            }
        }
        points = np;
        weights = nw;
    }
    let err = spec.max_ratio().powi(spec.depth as i32) * domain.diameter();
    let prov = Provenance::new("ifs", spec.depth as f64, err, format!("{} maps", spec.maps.len()));
    AtomList::new(points, weights, prov)
}

/// `min_i log p_i / log r_i`.
pub fn growth_exponent(spec: &IfsSpec) -> f64 {
    spec.maps
        .iter()
        .zip(&spec.probabilities)
        .map(|(m, p)| p.ln() / m.ratio.ln())
        .fold(f64::INFINITY, f64::min)
}

/// Uniform grid bucketing of weighted points for ball-mass queries.
pub(crate) struct BallIndex<'a> {
    points: &'a [Point],
    weights: &'a [f64],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> BallIndex<'a> {
    pub fn new(points: &'a [Point], weights: &'a [f64], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(*p, cell)).or_default().push(i);
        }
        Self { points, weights, cell, buckets }
    }

    fn key(p: Point, cell: f64) -> (i64, i64) {
        ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64)
    }

    /// Masses of the closed balls `B(x, r)` for each radius in `radii`.
    pub fn masses(&self, x: Point, radii: &[f64]) -> Vec<f64> {
        let rmax = radii.iter().cloned().fold(0.0, f64::max);
        let (i0, j0) = Self::key(x - pt(rmax, rmax), self.cell);
        let (i1, j1) = Self::key(x + pt(rmax, rmax), self.cell);
        let mut out = vec![0.0; radii.len()];
        for i in i0..=i1 {
            for j in j0..=j1 {
                if let Some(idx) = self.buckets.get(&(i, j)) {
                    for &k in idx {
                        let d = (self.points[k] - x).norm();
                        for (o, r) in out.iter_mut().zip(radii) {
                            if d <= *r {
                                *o += self.weights[k];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Ordinary least squares `y = slope x + intercept`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::FitFailed(format!("need at least two paired values, got {}", x.len())));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::FitFailed("degenerate regression".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fits `max_x nu(B(x, r)) ≈ C1 r^alpha1` over atom centres; returns `(C1, alpha1)`.
#[allow(non_snake_case)]
pub fn estimate_A1(atoms: &AtomList, radii: &[f64]) -> Result<(f64, f64)> {
    if radii.len() < 2 || atoms.len() < 10 {
        return Err(Error::FitFailed(format!(
            "need at least 2 radii and 10 atoms, got {} and {}",
            radii.len(),
            atoms.len()
        )));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::FitFailed("radii must be positive".into()));
    }
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let index = BallIndex::new(atoms.points(), atoms.weights(), rmax);
    let mut best = vec![0.0f64; radii.len()];
    for &x in atoms.points() {
        for (b, m) in best.iter_mut().zip(index.masses(x, radii)) {
            *b = b.max(m);
        }
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = best.iter().map(|m| m.ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly)?;
    Ok((intercept.exp(), slope))
}

/// Parameterized families of base measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Chords `nu_{(theta, u)}` of lines crossing the domain.
    Chords,
    /// Arc length on prefixes `f([a, t])` of one curve.
    CurvePrefix,
    /// Self-similar measures along a path of IFS parameters.
    IfsPath,
}

/// Hölder regularity of a family in its parameter, with the parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    /// One list of grid values per parameter coordinate.
    pub grid: Vec<Vec<f64>>,
    pub alpha2: f64,
    pub alpha2prime: f64,
    pub k: u32,
    pub c2: f64,
}

impl FamilySpec {
    /// Family with the documented analytic regularity for its kind.
    pub fn builtin(kind: FamilyKind, grid: Vec<Vec<f64>>) -> Self {
        let (alpha2, alpha2prime, k) = match kind {
            FamilyKind::Chords => (1.0, 0.5, 2),
            FamilyKind::CurvePrefix => (1.0, 1.0, 1),
            FamilyKind::IfsPath => (1.0, 1.0, 1),
        };
        Self { kind, grid, alpha2, alpha2prime, k, c2: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidInput("family parameter grid must be nonempty".into()));
        }
        if self.grid.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("family parameter grid must be finite".into()));
        }
        if !(self.alpha2 > 0.0 && self.alpha2prime > 0.0 && self.c2 > 0.0 && self.k >= 1) {
            return Err(Error::InvalidInput("family Hölder metadata must be positive".into()));
        }
        Ok(())
    }

    /// Threshold input for this family given the base growth exponent and `gamma`.
    pub fn threshold_input(&self, alpha1: f64, gamma: f64) -> crate::criteria::ThresholdInput {
        crate::criteria::ThresholdInput {
            alpha1,
            alpha2: self.alpha2,
            alpha2prime: self.alpha2prime,
            k: self.k,
            gamma,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CurveShape;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn lebesgue_examples() {
        let sq = lebesgue_atoms(&Domain::unit_square(), 0.5).unwrap();
        assert_eq!(sq.len(), 4);
        assert!((sq.total_mass() - 1.0).abs() < 1e-15);
        let d = Domain::unit_disk();
        let fine = lebesgue_atoms(&d, 1.0 / 128.0).unwrap();
        let finer = lebesgue_atoms(&d, 1.0 / 256.0).unwrap();
        assert!((fine.total_mass() - PI).abs() < 0.02 * PI);
        assert!((fine.total_mass() - finer.total_mass()).abs() < 0.02 * PI);
        assert!(fine.points().iter().all(|&p| d.is_interior(p)));
        assert!(lebesgue_atoms(&d, 0.6).is_err());
    }

    #[test]
    fn lebesgue_refinement_within_perimeter_bound() {
        let d = Domain::unit_disk();
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let a = lebesgue_atoms(&d, h).unwrap().total_mass();
            let b = lebesgue_atoms(&d, h / 2.0).unwrap().total_mass();
            assert!((a - b).abs() <= h * d.perimeter());
        }
    }

    #[test]
    fn chord_examples() {
        let d = Domain::unit_disk();
        let diam = chord_atoms(&d, Line::new(0.3, 0.0), 0.01).unwrap();
        assert!((diam.total_mass() - 2.0).abs() < 0.01);
        let tangent = chord_atoms(&d, Line::new(0.3, 1.0), 0.01).unwrap();
        assert!(tangent.is_empty());
        assert_eq!(tangent.total_mass(), 0.0);
        assert!(matches!(chord_atoms(&d, Line::new(0.3, 1.5), 0.01), Err(Error::NoIntersection)));
        for i in 0..41 {
            let u = -0.99 + 1.98 * i as f64 / 40.0;
            let m = chord_atoms(&d, Line::new(1.1, u), 0.02).unwrap().total_mass();
            assert!((m - 2.0 * (1.0 - u * u).sqrt()).abs() < 0.02);
        }
    }

    #[test]
    fn chord_atoms_move_continuously() {
        let d = Domain::unit_disk();
        let a = chord_atoms(&d, Line::new(0.4, 0.3), 0.1).unwrap();
        let b = chord_atoms(&d, Line::new(0.4, 0.3 + 1e-9), 0.1).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.points().iter().zip(b.points()) {
            assert!((p - q).norm() < 1e-8);
        }
    }

    #[test]
    fn curve_examples() {
        let d = Domain::unit_disk();
        let seg = Curve::new(&d, CurveShape::Segment { start: [-0.5, 0.0], end: [0.5, 0.0] }, 0.0).unwrap();
        assert!(curve_atoms(&seg, 0.0, 0.01).unwrap().is_empty());
        assert!((curve_atoms(&seg, 0.5, 0.01).unwrap().total_mass() - 0.5).abs() < 0.01);
        assert!(matches!(curve_atoms(&seg, 1.5, 0.01), Err(Error::ParameterOutOfRange(_))));
        let arc = Curve::new(
            &d,
            CurveShape::Arc { center: [0.0, 0.0], radius: 0.5, start_angle: 0.0, sweep: PI },
            0.0,
        )
        .unwrap();
        let prefix = curve_atoms(&arc, 0.5 * PI / 2.0, 0.01).unwrap();
        assert!((prefix.total_mass() - PI / 4.0).abs() < 0.01);
        assert!(prefix.points().iter().all(|p| (p.norm() - 0.5).abs() < 1e-12));
    }

    fn halves() -> IfsSpec {
        IfsSpec {
            maps: vec![
                IfsMap { ratio: 0.5, rotation: 0.0, translation: [0.0, 0.0] },
                IfsMap { ratio: 0.5, rotation: 0.0, translation: [0.5, 0.0] },
            ],
            probabilities: vec![0.5, 0.5],
            depth: 3,
        }
    }

    #[test]
    fn ifs_binary_subdivision() {
        let sq = Domain::unit_square();
        let atoms = ifs_atoms(&sq, &halves()).unwrap();
        assert_eq!(atoms.len(), 8);
        assert_eq!(atoms.total_mass(), 1.0);
        for (k, (p, w)) in atoms.points().iter().zip(atoms.weights()).enumerate() {
            assert!((p.re - (k as f64 / 8.0 + 1.0 / 16.0)).abs() < 1e-15);
            assert!((p.im - 1.0 / 16.0).abs() < 1e-15);
            assert_eq!(*w, 0.125);
        }
        assert!(halves().first_level_disjoint(&sq));
    }

    #[test]
    fn ifs_depth_refinement_is_contractive() {
        let sq = Domain::unit_square();
        let mut spec = IfsSpec {
            maps: vec![
                IfsMap { ratio: 0.4, rotation: 0.3, translation: [0.15, 0.05] },
                IfsMap { ratio: 0.3, rotation: -0.2, translation: [0.6, 0.3] },
                IfsMap { ratio: 0.35, rotation: 0.0, translation: [0.2, 0.6] },
            ],
            probabilities: vec![0.2, 0.5, 0.3],
            depth: 4,
        };
        spec.validate(&sq).unwrap();
        let coarse = ifs_atoms(&sq, &spec).unwrap();
        spec.depth = 5;
        let fine = ifs_atoms(&sq, &spec).unwrap();
        assert!((fine.total_mass() - 1.0).abs() < 1e-12);
        // The word w at depth d and its extension w 0 .. w m at depth d+1.
        let bound = spec.max_ratio().powi(4) * sq.diameter();
        let m = spec.maps.len();
        for (i, p) in coarse.points().iter().enumerate() {
            for j in 0..m {
                // Extending the innermost map: index i * m + j in lexicographic order.
                let q = fine.points()[i * m + j];
                assert!((p - q).norm() <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn ifs_budget_and_validation() {
        let mut spec = halves();
        spec.depth = 24;
        assert!(matches!(ifs_atoms(&Domain::unit_square(), &spec), Err(Error::IfsTooDeep { .. })));
        let mut bad = halves();
        bad.probabilities = vec![0.6, 0.6];
        assert!(bad.validate(&Domain::unit_square()).is_err());
        let mut outside = halves();
        outside.maps[1].translation = [0.9, 0.0];
        assert!(outside.validate(&Domain::unit_square()).is_err());
    }

    #[test]
    fn growth_exponent_examples() {
        assert!((growth_exponent(&halves()) - 1.0).abs() < 1e-15);
        let mut s = halves();
        s.probabilities = vec![0.25, 0.75];
        assert!((growth_exponent(&s) - (0.75f64).ln() / 0.5f64.ln()).abs() < 1e-15);
        let third = IfsSpec {
            maps: (0..3).map(|i| IfsMap { ratio: 1.0 / 3.0, rotation: 0.0, translation: [i as f64 / 3.0, 0.0] }).collect(),
            probabilities: vec![1.0 / 3.0; 3],
            depth: 2,
        };
        assert!((growth_exponent(&third) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a1_estimates() {
        let radii: Vec<f64> = (3..=6).map(|k| 2f64.powi(-k)).collect();
        let leb = lebesgue_atoms(&Domain::unit_square(), 1.0 / 256.0).unwrap();
        let (_, a) = estimate_A1(&leb, &radii).unwrap();
        assert!((a - 2.0).abs() < 0.15, "{a}");
        let chord = chord_atoms(&Domain::unit_disk(), Line::new(0.7, 0.2), 1.0 / 512.0).unwrap();
        let (_, a) = estimate_A1(&chord, &radii).unwrap();
        assert!((a - 1.0).abs() < 0.15, "{a}");
        let mut spec = halves();
        spec.depth = 12;
        let ifs = ifs_atoms(&Domain::unit_square(), &spec).unwrap();
        let (_, a) = estimate_A1(&ifs, &radii).unwrap();
        assert!((a - growth_exponent(&spec)).abs() < 0.2, "{a}");
        assert!(estimate_A1(&ifs, &radii[..1]).is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let atoms = lebesgue_atoms(&Domain::unit_disk(), 0.25).unwrap();
        let mut csv_buf = Vec::new();
        atoms.write_csv(&mut csv_buf).unwrap();
        let back = AtomList::read_csv(&csv_buf[..], atoms.provenance().clone()).unwrap();
        assert_eq!(back, atoms);
        let mut json_buf = Vec::new();
        atoms.write_jsonl(&mut json_buf).unwrap();
        assert_eq!(AtomList::read_jsonl(&json_buf[..]).unwrap(), atoms);
    }

    #[test]
    fn family_metadata() {
        let f = FamilySpec::builtin(FamilyKind::Chords, vec![vec![0.0, 1.0], vec![0.0]]);
        f.validate().unwrap();
        let input = f.threshold_input(1.0, 0.25);
        assert_eq!(input.lambda(), 1.0);
        assert!(FamilySpec::builtin(FamilyKind::CurvePrefix, vec![]).validate().is_err());
    }

    proptest! {
        #[test]
        fn chord_mass_is_half_holder(theta in 0.0f64..PI, u in -0.99f64..0.99, du in -0.05f64..0.05) {
            let d = Domain::unit_disk();
            let u2 = (u + du).clamp(-0.99, 0.99);
            let m1 = chord_atoms(&d, Line::new(theta, u), 1e-3).unwrap().total_mass();
            let m2 = chord_atoms(&d, Line::new(theta, u2), 1e-3).unwrap().total_mass();
            // Exact chord lengths are within 1e-9 of the atom masses.
            prop_assert!((m1 - m2).abs() <= 2.0 * 2f64.sqrt() * (u - u2).abs().sqrt() + 1e-8);
        }

        #[test]
        fn ifs_weights_are_a_probability_vector(p in 0.05f64..0.95, depth in 1u32..8) {
            let mut spec = halves();
            spec.probabilities = vec![p, 1.0 - p];
            spec.depth = depth;
            let atoms = ifs_atoms(&Domain::unit_square(), &spec).unwrap();
            prop_assert!((atoms.total_mass() - 1.0).abs() < 1e-12);
            prop_assert!(atoms.weights().iter().all(|w| *w > 0.0));
        }
    }
}
