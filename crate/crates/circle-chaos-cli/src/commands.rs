//! Subcommand implementations. Each returns a one-line summary and a verdict.

use std::f64::consts::PI;
use std::io::Write;

use circle_chaos::analysis::{
    chord_holder, fourier_decay, local_dimension_within, nodes_at, projection_field, ChordFamily, CurveFamily,
};
use circle_chaos::criteria::{threshold_report, ThresholdInput};
use circle_chaos::domain::{Curve, Domain, Line, Point};
use circle_chaos::gff::{calibrate_grid, CircleAverages, ExactEnsemble, FieldSource, GridSampler};
use circle_chaos::gmc::{convergence_report, dyadic_radius, gmc_weight, mass_ladders, GmcApproximant};
use circle_chaos::measures::AtomList;
use circle_chaos::{Error, Result};
use serde_json::json;

use crate::config::{BackendKind, RunConfig};
use crate::output::Outputs;

/// Summary line and whether the configured check passed; `None` means no check applies.
pub struct Outcome {
    pub summary: String,
    pub pass: Option<bool>,
}

impl Outcome {
    fn checked(pass: bool, summary: String) -> Self {
        let verdict = if pass { "PASS" } else { "FAIL" };
        Self { summary: format!("{summary}, {verdict}"), pass: Some(pass) }
    }

    fn info(summary: String) -> Self {
        Self { summary, pass: None }
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Grid sampler on the canonical unit square, calibrated unless the config fixes the factor.
fn grid_sampler(cfg: &RunConfig, domain: &Domain, seed: u64) -> Result<GridSampler> {
    if *domain != Domain::unit_square() {
        return Err(Error::InvalidInput("the grid backend needs the unit square with offset 0 and scale 1".into()));
    }
    let n = cfg.backend.grid_size;
    let calibration = match cfg.backend.calibration {
        Some(c) => c,
        None => calibrate_grid(n, 0.125, 2000, seed)?,
    };
    GridSampler::new(n, calibration)
}

fn exact_at(cfg: &RunConfig, domain: &Domain, points: &[Point], level: u32) -> Result<ExactEnsemble> {
    ExactEnsemble::new(nodes_at(domain, points, dyadic_radius(level))?, cfg.quadrature)
}

fn base_atoms(cfg: &RunConfig, domain: &Domain) -> Result<AtomList> {
    cfg.section(&cfg.measure, "measure")?.atoms(domain)
}

pub fn thresholds(cfg: &RunConfig, out: &Outputs) -> Result<Outcome> {
    let t = cfg.section(&cfg.thresholds, "thresholds")?;
    let input = ThresholdInput { alpha1: t.alpha1, alpha2: t.alpha2, alpha2prime: t.alpha2prime, k: t.k, gamma: cfg.gamma };
    let report = threshold_report(&input)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?);
    out.write_json(&report)?;
    Ok(Outcome::info(format!(
        "mcond {} (margin {:.6}), critical gamma {}",
        report.mcond,
        report.margin,
        report.critical_gamma.map_or("none".to_string(), |g| format!("{g:.8}"))
    )))
}

pub fn simulate(cfg: &RunConfig, seed: u64, out: &Outputs) -> Result<Outcome> {
    let domain = cfg.domain.build()?;
    let atoms = base_atoms(cfg, &domain)?;
    let [n0, n1] = cfg.levels;
    let ladder = match cfg.backend.kind {
        BackendKind::Exact => {
            let radii: Vec<f64> = (n0..=n1).map(dyadic_radius).collect();
            let ens = ExactEnsemble::ladder(domain, atoms.points(), &radii, cfg.quadrature)?;
            mass_ladders(&ens, &atoms, &[cfg.gamma], n0, n1, cfg.reps, seed)?
        }
        BackendKind::Grid => {
            let sampler = grid_sampler(cfg, &domain, seed)?;
            mass_ladders(&sampler, &atoms, &[cfg.gamma], n0, n1, cfg.reps, seed)?
        }
    }
    .remove(0);
    let path = out.path("csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    ladder.write_csv(&mut w, &out.header().to_json())?;
    w.flush()?;
    let alpha1 = cfg.tolerances.alpha1.or(cfg.measure.as_ref().and_then(|m| m.alpha1())).unwrap_or(2.0);
    match convergence_report(&ladder, alpha1, cfg.tolerances.p, cfg.tolerances.slack) {
        Ok(report) => {
            out.write_json(&report)?;
            let slope = report.slope.map_or("degenerate".to_string(), |s| format!("{s:.3}"));
            Ok(Outcome::checked(
                report.pass,
                format!("slope {slope} vs bound {:.3}", -report.bound + report.slack),
            ))
        }
        Err(Error::FitFailed(why)) => {
            out.write_json(&json!({ "fit": why }))?;
            Ok(Outcome::info(format!("ladder of {} replicates written, no convergence fit ({why})", ladder.reps())))
        }
        Err(e) => Err(e),
    }
}

pub fn dimension(cfg: &RunConfig, seed: u64, out: &Outputs) -> Result<Outcome> {
    let d = cfg.section(&cfg.dimension, "dimension")?;
    let domain = cfg.domain.build()?;
    let atoms = base_atoms(cfg, &domain)?;
    let level = cfg.levels[1];
    let radii: Vec<f64> = (d.radius_levels[0]..=d.radius_levels[1]).map(dyadic_radius).collect();
    let alpha1 = cfg.tolerances.alpha1.or(cfg.measure.as_ref().and_then(|m| m.alpha1())).unwrap_or(2.0);
    let target = alpha1 - cfg.gamma * cfg.gamma / 2.0;
    let window = d.centre_window;
    let inside = move |p: Point| match window {
        Some([[x0, x1], [y0, y1]]) => p.re >= x0 && p.re <= x1 && p.im >= y0 && p.im <= y1,
        None => true,
    };
    let estimate = |approx: &GmcApproximant, r: u64| {
        local_dimension_within(approx, &radii, d.sample_points, seed.wrapping_add(r), target, inside)
    };
    let reports = if cfg.gamma == 0.0 {
        vec![estimate(&GmcApproximant::identity(&atoms, level), 0)?]
    } else {
        let run = |field: &dyn Fn(u64) -> Result<GmcApproximant>| -> Result<Vec<_>> {
            (0..cfg.reps as u64).map(|r| estimate(&field(r)?, r)).collect()
        };
        match cfg.backend.kind {
            BackendKind::Exact => {
                let ens = exact_at(cfg, &domain, atoms.points(), level)?;
                run(&|r| gmc_weight(&atoms, &ens.draw(seed, r)?, level, cfg.gamma))?
            }
            BackendKind::Grid => {
                let sampler = grid_sampler(cfg, &domain, seed)?;
                run(&|r| gmc_weight(&atoms, &sampler.draw(seed, r)?, level, cfg.gamma))?
            }
        }
    };
    let means: Vec<f64> = reports.iter().map(|r| r.mean).collect();
    let (m, se) = mean_se(&means);
    out.write_table(&["replicate", "mean_slope"], means.iter().enumerate().map(|(r, v)| vec![r as f64, *v]))?;
    out.write_json(&json!({ "target": target, "mean": m, "standard_error": se, "replicates": reports }))?;
    Ok(Outcome::checked(
        (m - target).abs() <= cfg.tolerances.dimension,
        format!("mean slope {m:.2} ± {se:.2} vs {target:.3}"),
    ))
}

/// `count` directions `k pi / count`.
fn directions(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 * PI / count as f64).collect()
}

/// `count` cell midpoints spanning the support of every direction.
fn offsets(domain: &Domain, thetas: &[f64], count: usize) -> Vec<f64> {
    let (lo, hi) = thetas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
        let (a, b) = domain.support_interval(t);
        (lo.min(a), hi.max(b))
    });
    (0..count).map(|j| lo + (hi - lo) * (j as f64 + 0.5) / count as f64).collect()
}

pub fn project(cfg: &RunConfig, seed: u64, out: &Outputs) -> Result<Outcome> {
    let p = cfg.section(&cfg.project, "project")?;
    let domain = cfg.domain.build()?;
    let thetas = directions(p.thetas);
    let us = offsets(&domain, &thetas, p.us);
    let field = projection_field(&domain, cfg.gamma, &thetas, &us, p.h_chord, p.h_planar, p.level, seed)?;
    let mut rows = Vec::new();
    for (i, row) in field.values.iter().enumerate() {
        for (j, y) in row.iter().enumerate() {
            rows.push(vec![thetas[i], us[j], *y]);
        }
    }
    out.write_table(&["theta", "u", "mass"], rows)?;
    out.write_json(&field)?;
    if cfg.gamma == 0.0 {
        let mut worst: f64 = 0.0;
        for (i, row) in field.values.iter().enumerate() {
            for (j, y) in row.iter().enumerate() {
                let exact = match domain.chord_of(Line::new(thetas[i], us[j])) {
                    Ok(c) => c.length,
                    Err(Error::NoIntersection) => 0.0,
                    Err(e) => return Err(e),
                };
                worst = worst.max((y - exact).abs());
            }
        }
        Ok(Outcome::checked(worst <= cfg.tolerances.chord_length, format!("max |Y - chord length| = {worst:.1e}")))
    } else {
        let worst = field.fubini_error.iter().cloned().fold(0.0, f64::max);
        Ok(Outcome::checked(
            worst <= cfg.tolerances.fubini,
            format!("worst Fubini error {:.3}% over {} directions", 100.0 * worst, thetas.len()),
        ))
    }
}

pub fn fourier(cfg: &RunConfig, seed: u64, out: &Outputs) -> Result<Outcome> {
    let f = cfg.section(&cfg.fourier, "fourier")?;
    let domain = cfg.domain.build()?;
    let atoms = base_atoms(cfg, &domain)?;
    let approx = if cfg.gamma == 0.0 {
        GmcApproximant::identity(&atoms, f.level)
    } else {
        match cfg.backend.kind {
            BackendKind::Exact => {
                let ens = exact_at(cfg, &domain, atoms.points(), f.level)?;
                gmc_weight(&atoms, &ens.draw(seed, 0)?, f.level, cfg.gamma)?
            }
            BackendKind::Grid => {
                let sampler = grid_sampler(cfg, &domain, seed)?;
                gmc_weight(&atoms, &sampler.draw(seed, 0)?, f.level, cfg.gamma)?
            }
        }
    };
    let report = fourier_decay(&approx, &directions(f.directions), (f.freq_range[0], f.freq_range[1]), f.n_freqs)?;
    let mut rows = Vec::new();
    for d in &report.directions {
        for (x, y) in &d.points {
            rows.push(vec![d.angle, *x, *y]);
        }
    }
    out.write_table(&["angle", "log_frequency", "log_envelope"], rows)?;
    out.write_json(&report)?;
    Ok(Outcome::checked(
        report.pooled_beta > cfg.tolerances.fourier_min_beta,
        format!("pooled beta {:.3} vs minimum {}", report.pooled_beta, cfg.tolerances.fourier_min_beta),
    ))
}

pub fn holder(cfg: &RunConfig, seed: u64, out: &Outputs) -> Result<Outcome> {
    let h = cfg.section(&cfg.holder, "holder")?;
    let domain = cfg.domain.build()?;
    let thetas = directions(h.thetas);
    let us = offsets(&domain, &thetas, h.us);
    let family = ChordFamily::new(&domain, &thetas, &us, h.h)?;
    let scales: Vec<f64> = (h.scale_exponents[0]..=h.scale_exponents[1]).map(|k| 2f64.powi(-(k as i32))).collect();
    let mut reports = Vec::new();
    if cfg.gamma == 0.0 {
        let lengths: Vec<Vec<f64>> = family.chords.iter().map(|row| row.iter().map(|a| a.total_mass()).collect()).collect();
        reports.push(chord_holder(&family.samples(&lengths), &scales)?);
    } else {
        let ens = exact_at(cfg, &domain, &family.points(), h.level)?;
        for r in 0..cfg.reps as u64 {
            let field = ens.draw(seed, r)?;
            reports.push(chord_holder(&family.samples(&family.masses(&field, cfg.gamma, h.level)?), &scales)?);
        }
    }
    let betas: Vec<f64> = reports.iter().map(|r| r.beta_hat.unwrap_or(0.0)).collect();
    let positive = betas.iter().filter(|b| **b > 0.0).count();
    out.write_table(&["replicate", "beta_hat"], betas.iter().enumerate().map(|(r, b)| vec![r as f64, *b]))?;
    out.write_json(&reports)?;
    let fraction = positive as f64 / betas.len() as f64;
    let (m, _) = mean_se(&betas);
    Ok(Outcome::checked(
        fraction >= cfg.tolerances.holder_positive_fraction,
        format!("beta > 0 in {positive}/{} replicates, mean beta {m:.3}", betas.len()),
    ))
}

pub fn quantum_length(cfg: &RunConfig, seed: u64, out: &Outputs) -> Result<Outcome> {
    let q = cfg.section(&cfg.quantum_length, "quantum_length")?;
    let domain = cfg.domain.build()?;
    let curve = Curve::new(&domain, q.curve.clone(), q.start)?;
    let (a, b) = curve.interval();
    if q.t_points < 2 {
        return Err(Error::InvalidInput("quantum_length.t_points must be at least 2".into()));
    }
    let ts: Vec<f64> = (0..q.t_points).map(|i| a + (b - a) * i as f64 / (q.t_points - 1) as f64).collect();
    let family = CurveFamily::new(&curve, q.h)?;
    let runs: Vec<Vec<(f64, f64)>> = if cfg.gamma == 0.0 {
        vec![family.lengths(&Flat, 0.0, q.level, &ts)?]
    } else {
        let ens = exact_at(cfg, &domain, family.atoms.points(), q.level)?;
        (0..cfg.reps as u64)
            .map(|r| family.lengths(&ens.draw(seed, r)?, cfg.gamma, q.level, &ts))
            .collect::<Result<_>>()?
    };
    let increasing = runs.iter().filter(|l| l.windows(2).all(|w| w[1].1 > w[0].1)).count();
    let mut rows = Vec::new();
    for (r, l) in runs.iter().enumerate() {
        rows.extend(l.iter().map(|(t, v)| vec![r as f64, *t, *v]));
    }
    out.write_table(&["replicate", "t", "length"], rows)?;
    let totals: Vec<f64> = runs.iter().map(|l| l.last().map_or(0.0, |x| x.1)).collect();
    let (m, se) = mean_se(&totals);
    out.write_json(&json!({ "t": ts, "lengths": runs, "mean_total": m, "standard_error": se }))?;
    Ok(Outcome::checked(
        increasing == runs.len(),
        format!("{increasing}/{} strictly increasing, mean L(b) = {m:.5} ± {se:.5}", runs.len()),
    ))
}

/// Zero field, for the `gamma = 0` base measure.
struct Flat;

impl CircleAverages for Flat {
    fn circle_averages(&self, points: &[Point], _radius: f64) -> Result<Vec<f64>> {
        Ok(vec![0.0; points.len()])
    }
}

pub fn calibrate(cfg: &RunConfig, seed: u64, out: &Outputs) -> Result<Outcome> {
    let c = cfg.section(&cfg.calibrate, "calibrate")?;
    let factor = calibrate_grid(c.grid_size, c.eps, cfg.reps, seed)?;
    out.write_json(&json!({ "grid_size": c.grid_size, "eps": c.eps, "reps": cfg.reps, "calibration": factor }))?;
    Ok(Outcome::info(format!("calibration factor {factor:.6} for N = {} at eps = {}", c.grid_size, c.eps)))
}
