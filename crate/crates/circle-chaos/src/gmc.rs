//! Chaos approximants at dyadic radii and their total masses.
//!
//! At level `n` every atom `(x, w)` of a base measure is reweighted to
//! `w 2^{-n gamma^2/2} exp(gamma Gamma(rho_{x, 2^{-n}}))`. Ladders evaluate all
//! levels on one coupled field per replicate, so level increments of the total
//! mass can be studied replicate by replicate.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::s_exponent;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gff::{CircleAverages, ExactEnsemble, FieldSource, DEFAULT_QUADRATURE};
use crate::measures::{fmt17, kahan_sum, linear_fit, AtomList};

/// Default slack added to the theoretical moment-decay slope.
pub const DEFAULT_SLACK: f64 = 0.3;

/// `2^{-n}`.
pub fn dyadic_radius(n: u32) -> f64 {
    (-(n as f64)).exp2()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..2.0).contains(&gamma) {
        return Err(Error::ParameterOutOfRange(format!("gamma = {gamma} outside [0, 2)")));
    }
    Ok(())
}

/// The reweighted measure at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct GmcApproximant {
    pub level: u32,
    pub gamma: f64,
    pub atoms: AtomList,
    pub seed: u64,
    pub replicate_index: u64,
}

impl GmcApproximant {
    /// The `gamma = 0` approximant, which is the base measure itself.
    pub fn identity(atoms: &AtomList, level: u32) -> Self {
        Self { level, gamma: 0.0, atoms: atoms.clone(), seed: 0, replicate_index: 0 }
    }
}

/// Reweights `atoms` by the circle averages of radius `2^{-n}` drawn from `field`.
pub fn gmc_weight(atoms: &AtomList, field: &impl CircleAverages, n: u32, gamma: f64) -> Result<GmcApproximant> {
    check_gamma(gamma)?;
    let values = field.circle_averages(atoms.points(), dyadic_radius(n))?;
    let (seed, replicate_index) = field.replicate();
    let weights = if gamma == 0.0 {
        atoms.weights().to_vec()
    } else {
        let norm = (-(n as f64) * gamma * gamma / 2.0).exp2();
        atoms.weights().iter().zip(&values).map(|(w, g)| w * norm * (gamma * g).exp()).collect()
    };
    Ok(GmcApproximant { level: n, gamma, atoms: atoms.reweighted(weights)?, seed, replicate_index })
}

pub fn total_mass(approx: &GmcApproximant) -> f64 {
    approx.atoms.total_mass()
}

/// Total masses `Y[r][n]` of coupled approximants, replicates by levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassLadder {
    pub n0: u32,
    pub n1: u32,
    pub gamma: f64,
    pub seed: u64,
    /// Short description of the base measure.
    pub tag: String,
    pub masses: Vec<Vec<f64>>,
}

impl MassLadder {
    pub fn reps(&self) -> usize {
        self.masses.len()
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.n0..=self.n1
    }

    /// Masses of all replicates at level `n`.
    pub fn level(&self, n: u32) -> Vec<f64> {
        let k = (n - self.n0) as usize;
        self.masses.iter().map(|row| row[k]).collect()
    }

    /// CSV of `(replicate, level, mass)` after a `#`-prefixed JSON header line.
    pub fn write_csv(&self, mut w: impl Write, header: &serde_json::Value) -> Result<()> {
        let mut head = header.clone();
        if let Some(obj) = head.as_object_mut() {
            obj.insert("seed".into(), self.seed.into());
            obj.insert("gamma".into(), self.gamma.into());
            obj.insert("measure".into(), self.tag.clone().into());
        }
        writeln!(w, "# {head}")?;
        writeln!(w, "replicate,level,mass")?;
        for (r, row) in self.masses.iter().enumerate() {
            for (n, y) in self.levels().zip(row) {
                writeln!(w, "{r},{n},{}", fmt17(*y))?;
            }
        }
        Ok(())
    }
}

fn check_ladder(n0: u32, n1: u32, reps: usize) -> Result<()> {
    if !(n0 >= 1 && n1 >= n0) {
        return Err(Error::ParameterOutOfRange(format!("levels need 1 <= n0 <= n1, got {n0}..{n1}")));
    }
    if reps < 1 {
        return Err(Error::ParameterOutOfRange("at least one replicate is required".into()));
    }
    Ok(())
}

/// Coupled ladders for several `gamma` values from the same draws.
///
/// Replicates run in parallel; each is a pure function of `(seed, replicate)`.
pub fn mass_ladders<S: FieldSource>(
    source: &S,
    atoms: &AtomList,
    gammas: &[f64],
    n0: u32,
    n1: u32,
    reps: usize,
    seed: u64,
) -> Result<Vec<MassLadder>> {
    check_ladder(n0, n1, reps)?;
    for &g in gammas {
        check_gamma(g)?;
    }
    let rows: Vec<Vec<Vec<f64>>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let field = source.draw(seed, r)?;
            let mut per_gamma = vec![Vec::with_capacity((n1 - n0 + 1) as usize); gammas.len()];
            for n in n0..=n1 {
                let values = field.circle_averages(atoms.points(), dyadic_radius(n))?;
                for (row, &g) in per_gamma.iter_mut().zip(gammas) {
                    row.push(weighted_mass(atoms, &values, n, g));
                }
            }
            Ok(per_gamma)
        })
        .collect::<Result<_>>()?;
    Ok(gammas
        .iter()
        .enumerate()
        .map(|(k, &gamma)| MassLadder {
            n0,
            n1,
            gamma,
            seed,
            tag: atoms.provenance().measure.clone(),
            masses: rows.iter().map(|r| r[k].clone()).collect(),
        })
        .collect())
}

/// Same total as [`gmc_weight`] followed by [`total_mass`].
fn weighted_mass(atoms: &AtomList, values: &[f64], n: u32, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return atoms.total_mass();
    }
    let norm = (-(n as f64) * gamma * gamma / 2.0).exp2();
    let w: Vec<f64> = atoms.weights().iter().zip(values).map(|(w, g)| w * norm * (gamma * g).exp()).collect();
    kahan_sum(&w)
}

/// Exact-backend ladder over levels `n0..=n1` with one joint node set.
pub fn mass_ladder(
    atoms: &AtomList,
    domain: &Domain,
    gamma: f64,
    n0: u32,
    n1: u32,
    reps: usize,
    seed: u64,
) -> Result<MassLadder> {
    check_ladder(n0, n1, reps)?;
    check_gamma(gamma)?;
    let radii: Vec<f64> = (n0..=n1).map(dyadic_radius).collect();
    let ensemble = ExactEnsemble::ladder(*domain, atoms.points(), &radii, DEFAULT_QUADRATURE)?;
    Ok(mass_ladders(&ensemble, atoms, &[gamma], n0, n1, reps, seed)?.remove(0))
}

/// Moment-decay regression of ladder increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub p: f64,
    pub alpha1: f64,
    pub gamma: f64,
    /// Levels `n` of the increments `Y_{n+1} - Y_n`.
    pub levels: Vec<u32>,
    /// Empirical `E|Y_{n+1} - Y_n|^p`.
    pub moments: Vec<f64>,
    /// Fitted slope of `log2` moments against `n`; absent when degenerate.
    pub slope: Option<f64>,
    /// `s_{alpha1, gamma}(p)`.
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    /// Every increment is exactly zero.
    pub degenerate: bool,
}

pub fn convergence_report(ladder: &MassLadder, alpha1: f64, p: f64, slack: f64) -> Result<ConvergenceReport> {
    if !(p >= 1.0) {
        return Err(Error::InvalidP(p));
    }
    if ladder.n1 < ladder.n0 + 3 {
        return Err(Error::FitFailed(format!("need at least 4 levels, got {}", ladder.n1 - ladder.n0 + 1)));
    }
    if ladder.reps() < 100 {
        return Err(Error::FitFailed(format!("need at least 100 replicates, got {}", ladder.reps())));
    }
    let bound = s_exponent(alpha1, ladder.gamma, p)?;
    let levels: Vec<u32> = (ladder.n0..ladder.n1).collect();
    let moments: Vec<f64> = levels
        .iter()
        .map(|&n| {
            let k = (n - ladder.n0) as usize;
            let m: f64 = ladder.masses.iter().map(|row| (row[k + 1] - row[k]).abs().powf(p)).sum();
            m / ladder.reps() as f64
        })
        .collect();
    let base = ConvergenceReport {
        p,
        alpha1,
        gamma: ladder.gamma,
        levels: levels.clone(),
        moments: moments.clone(),
        slope: None,
        bound,
        slack,
        pass: true,
        degenerate: true,
    };
    if moments.iter().all(|m| *m == 0.0) {
        return Ok(base);
    }
    if moments.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::FitFailed("some but not all increment moments vanish".into()));
    }
    let x: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = moments.iter().map(|m| m.log2()).collect();
    let (slope, _) = linear_fit(&x, &y)?;
    Ok(ConvergenceReport { slope: Some(slope), pass: slope <= -bound + slack, degenerate: false, ..base })
}
