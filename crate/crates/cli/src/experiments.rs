//! Drivers for each subcommand. Work items are evaluated in parameter order
//! and aggregated in that order, so outputs do not depend on scheduling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use fraclat::dynamics::{continuum_limit_study, simulate};
use fraclat::lattice::{forward_dft, inverse_dft};
use fraclat::manifold::{
    classify, curve_b, fold_proxy, hessian_w, isolating_bump, sample_curve, verify_asymptotics, Branch, PointClass,
};
use fraclat::oscillatory::{
    band_classify, constant_scan, eta, lp_sup, w, BumpSpec, Cutoff, LocalBump, QuadOptions, TauWindow,
};
use fraclat::{fit_power_law, Error, Grid, LatticeField};

use crate::config::{
    AsymptoticsParams, DispersionParams, ExperimentConfig, LimitParams, ManifoldParams, Params, SimulateParams,
};
use crate::output::{num, OutputDir};
use crate::svg::{FitLine, Plot, Series};
use crate::CliError;

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    match &cfg.params {
        Params::Simulate(p) => run_simulate(p, cfg.run.plot, out),
        Params::LimitStudy(p) => run_limit(p, cfg.run.plot, out),
        Params::DispersionScan(p) => run_dispersion(p, cfg.run.plot, out),
        Params::ManifoldScan(p) => run_manifold(p, cfg.run.plot, out),
        Params::Asymptotics(p) => run_asymptotics(p, cfg.run.plot, out),
        Params::Selftest => run_selftest(cfg.run.seed, out),
    }
}

fn run_simulate(p: &SimulateParams, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let cfg = &p.cfg;
    let (field, obs) = match simulate(cfg) {
        Ok(r) => r,
        Err(e) => {
            out.fail("simulate", &e);
            return Ok(());
        }
    };
    let rows: Vec<Vec<String>> = (0..obs.len())
        .map(|k| {
            vec![
                num(obs.times[k]),
                num(obs.mass[k]),
                num(obs.energy[k]),
                num(obs.supnorm[k]),
                num(obs.boundary_fraction[k]),
            ]
        })
        .collect();
    out.csv("observables.csv", &["t", "mass", "energy", "supnorm", "boundary_fraction"], &rows)?;
    if p.write_field {
        let g = field.grid();
        let rows: Vec<Vec<String>> = field
            .values()
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let x = g.site(k);
                vec![num(x[0]), num(x[1]), num(z.re), num(z.im)]
            })
            .collect();
        out.csv("field.csv", &["x1", "x2", "re", "im"], &rows)?;
    }
    out.json(
        "summary.json",
        json!({
            "steps": cfg.steps(),
            "dt": cfg.effective_dt(),
            "mass_drift": obs.mass_drift(),
            "energy_drift": obs.energy_drift(),
            "max_boundary_fraction": obs.max_boundary_fraction(),
        }),
    )?;
    if plot {
        let mut pl = Plot::new("sup norm of the solution", "t", "sup |u|", false, false);
        pl.series.push(Series {
            label: "sup |u|".into(),
            points: obs.times.iter().copied().zip(obs.supnorm.iter().copied()).collect(),
            line: true,
        });
        out.svg("observables.svg", &pl.render())?;
    }
    Ok(())
}

fn run_limit(p: &LimitParams, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let study = match continuum_limit_study(&p.base, &p.hs, p.h_ref, p.quad_order) {
        Ok(s) => s,
        Err(e) => {
            out.fail("limit-study", &e);
            return Ok(());
        }
    };
    let rows: Vec<Vec<String>> = study
        .rows
        .iter()
        .map(|r| vec![num(r.h), r.n.to_string(), num(r.error), num(r.mass_drift), num(r.boundary_fraction)])
        .collect();
    out.csv("errors.csv", &["h", "n", "l2_error", "mass_drift", "boundary_fraction"], &rows)?;
    let alpha = p.base.alpha;
    out.json(
        "fit.json",
        json!({
            "order": study.fit.slope,
            "constant": study.fit.constant,
            "residual": study.fit.residual,
            "rate_upper_bound": alpha / (2.0 + alpha),
            "h_ref": study.h_ref,
            "dt": study.dt,
            "reference_boundary_fraction": study.reference_boundary_fraction,
            "strictly_decreasing": study.rows.windows(2).all(|w| w[1].error < w[0].error),
        }),
    )?;
    if plot {
        let mut pl = Plot::new("continuum-limit error", "h", "L2 error at T", true, true);
        pl.series.push(Series {
            label: "error".into(),
            points: study.rows.iter().map(|r| (r.h, r.error)).collect(),
            line: false,
        });
        pl.fits.push(FitLine {
            label: format!("fit, order {:.3}", study.fit.slope),
            slope: study.fit.slope,
            constant: study.fit.constant,
        });
        out.svg("plot.svg", &pl.render())?;
    }
    Ok(())
}

struct SupItem {
    alpha: f64,
    scale: f64,
    band: String,
    samples: Vec<(f64, f64, [i64; 2])>,
    fit: Option<fraclat::DecayFit>,
    status: String,
}

fn run_dispersion(p: &DispersionParams, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let mut items = Vec::new();
    for &alpha in &p.alphas {
        for &scale in &p.scales {
            let band = band_classify(scale, alpha).map(|b| b.name().to_string()).unwrap_or_else(|_| "-".into());
            // Large τ needs large FFT grids; the τ loop stays sequential and each
            // transform parallelizes internally.
            let samples: Result<Vec<_>, Error> =
                p.taus.iter().map(|&t| lp_sup(alpha, scale, t).map(|(s, m)| (t, s, m))).collect();
            let item = match samples {
                Ok(samples) => {
                    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.0, s.1)).collect();
                    match fit_power_law(&pts) {
                        Ok(fit) => SupItem { alpha, scale, band, samples, fit: Some(fit), status: "ok".into() },
                        Err(e) => SupItem { alpha, scale, band, samples, fit: None, status: format!("failed: {e}") },
                    }
                }
                Err(e) => SupItem { alpha, scale, band, samples: Vec::new(), fit: None, status: format!("failed: {e}") },
            };
            if item.status != "ok" {
                out.fail(format!("alpha={alpha} N={scale}"), &item.status);
            }
            items.push(item);
        }
    }
    let mut rows = Vec::new();
    for it in &items {
        let (sigma, c, res) = match &it.fit {
            Some(f) => (num(f.sigma()), num(f.constant), num(f.residual)),
            None => (String::new(), String::new(), String::new()),
        };
        if it.samples.is_empty() {
            rows.push(vec![num(it.alpha), num(it.scale), it.band.clone(), String::new(), String::new(), sigma.clone(), c.clone(), res.clone(), String::new(), String::new(), it.status.clone()]);
        }
        for (t, s, m) in &it.samples {
            rows.push(vec![
                num(it.alpha),
                num(it.scale),
                it.band.clone(),
                num(*t),
                num(*s),
                sigma.clone(),
                c.clone(),
                res.clone(),
                m[0].to_string(),
                m[1].to_string(),
                it.status.clone(),
            ]);
        }
    }
    out.csv("scan.csv", &["alpha", "N", "band", "tau", "sup_abs_j", "sigma", "C", "residual", "m1", "m2", "status"], &rows)?;

    let mut consts = Vec::new();
    let opts = QuadOptions { tol: p.tol, budget: p.budget, ..Default::default() };
    let window = TauWindow::Isolation { base: p.band_base, count: p.band_count };
    let jobs: Vec<(fraclat::oscillatory::Band, f64)> =
        p.bands.iter().flat_map(|&b| p.alphas.iter().map(move |&a| (b, a))).collect();
    let results: Vec<_> = jobs.par_iter().map(|&(b, a)| constant_scan(&[a], b, &window, &opts)).collect();
    for ((band, alpha), r) in jobs.iter().zip(results) {
        match r {
            Ok(mut v) => {
                let r = v.remove(0);
                consts.push(vec![
                    num(*alpha),
                    band.name().into(),
                    num(r.scale),
                    num(r.point.xi[0]),
                    num(r.point.xi[1]),
                    num(r.point.sigma0),
                    num(r.fit.sigma()),
                    num(r.prefactor),
                    num(r.constant),
                    num(r.d0),
                    r.samples.iter().map(|s| num(s.0)).collect::<Vec<_>>().join(" "),
                    "ok".into(),
                ]);
            }
            Err(e) => {
                out.fail(format!("band {} alpha={alpha}", band.name()), &e);
                let mut row = vec![num(*alpha), band.name().into()];
                row.extend(std::iter::repeat(String::new()).take(9));
                row.push(format!("failed: {e}"));
                consts.push(row);
            }
        }
    }
    if !p.bands.is_empty() {
        out.csv(
            "constants.csv",
            &["alpha", "band", "N", "xi1", "xi2", "sigma0", "sigma", "prefactor", "constant", "abs_d0", "taus", "status"],
            &consts,
        )?;
    }
    let fits: Vec<_> = items
        .iter()
        .map(|it| {
            json!({
                "alpha": it.alpha,
                "N": it.scale,
                "band": it.band,
                "sigma": it.fit.map(|f| f.sigma()),
                "C": it.fit.map(|f| f.constant),
                "residual": it.fit.map(|f| f.residual),
                "status": it.status,
            })
        })
        .collect();
    out.json("summary.json", json!({ "fits": fits, "band_constants": consts.len() }))?;
    if plot {
        let mut pl = Plot::new("lattice kernel supremum", "tau", "sup |J|", true, true);
        for it in items.iter().filter(|it| !it.samples.is_empty()) {
            pl.series.push(Series {
                label: format!("a={} N={}", it.alpha, it.scale),
                points: it.samples.iter().map(|s| (s.0, s.1)).collect(),
                line: false,
            });
        }
        out.svg("decay.svg", &pl.render())?;
    }
    Ok(())
}

fn run_manifold(p: &ManifoldParams, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for &alpha in &p.alphas {
        for branch in [Branch::Gamma1, Branch::Gamma2] {
            let samples = match sample_curve(branch, alpha, p.samples) {
                Ok(s) => s,
                Err(e) => {
                    out.fail(format!("alpha={alpha} {}", branch.name()), &e);
                    continue;
                }
            };
            curves.push((format!("a={alpha} {}", branch.name()), samples.iter().map(|s| (s.a, s.b)).collect()));
            let classified: Vec<_> = samples.par_iter().map(|s| classify(s.xi(), alpha)).collect();
            for (s, c) in samples.iter().zip(classified) {
                let xi = s.xi();
                let mut row = vec![num(alpha), branch.name().into(), num(s.a), num(s.b), num(xi[0]), num(xi[1]), num(s.residual)];
                match c {
                    Ok(pt) => {
                        let proxy = if pt.class == PointClass::K2 { fold_proxy(xi, alpha).ok() } else { None };
                        row.extend([
                            pt.class.name().to_string(),
                            num(pt.sigma0),
                            pt.d3.map(num).unwrap_or_default(),
                            num(pt.d0.norm()),
                            proxy.map(num).unwrap_or_default(),
                            "ok".into(),
                        ]);
                    }
                    Err(e) => {
                        out.fail(format!("alpha={alpha} {} a={}", branch.name(), s.a), &e);
                        row.extend(std::iter::repeat(String::new()).take(5));
                        row.push(format!("failed: {e}"));
                    }
                }
                rows.push(row);
            }
        }
    }
    out.csv(
        "curves.csv",
        &["alpha", "branch", "a", "b", "xi1", "xi2", "residual", "class", "sigma0", "d3", "abs_d0", "fold_proxy", "status"],
        &rows,
    )?;
    if plot {
        let mut pl = Plot::new("degenerate curves", "a = cos xi1", "b = cos xi2", false, false);
        for (label, pts) in curves {
            pl.series.push(Series { label, points: pts, line: true });
        }
        out.svg("curves.svg", &pl.render())?;
    }
    Ok(())
}

fn run_asymptotics(p: &AsymptoticsParams, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let point = classify(p.xi, p.alpha).map_err(CliError::from_core)?;
    let bump = match p.radii {
        Some(r) => LocalBump::new(point.xi, point.frame, r, p.flat).map_err(CliError::from_core)?,
        None => isolating_bump(&point).map_err(CliError::from_core)?.bump,
    };
    let opts = QuadOptions { tol: p.tol, budget: p.budget, ..Default::default() };
    let report = match verify_asymptotics(&point, &Cutoff::Localized(bump), &p.taus, &opts) {
        Ok(r) => r,
        Err(e) => {
            out.fail("asymptotics", &e);
            return Ok(());
        }
    };
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![num(r.tau), num(r.j.re), num(r.j.im), num(r.j.norm()), num(r.error), num(r.scaled)])
        .collect();
    out.csv("asymptotics.csv", &["tau", "re_j", "im_j", "abs_j", "quad_error", "scaled"], &rows)?;
    out.json(
        "summary.json",
        json!({
            "xi": point.xi,
            "class": point.class.name(),
            "sigma0": point.sigma0,
            "newton_distance": point.normal_form.newton_distance,
            "d3": point.d3,
            "abs_d0": report.d0,
            "ratio_at_largest_tau": report.ratio,
            "cauchy": report.cauchy,
            "fitted_sigma": report.fit.sigma(),
            "fit_constant": report.fit.constant,
            "fit_residual": report.fit.residual,
            "bump_radii": bump.radii,
            "bump_flat": bump.flat,
        }),
    )?;
    if plot {
        let mut pl = Plot::new(&format!("decay at a {} point", point.class.name()), "tau", "|J|", true, true);
        pl.series.push(Series { label: "|J|".into(), points: report.rows.iter().map(|r| (r.tau, r.j.norm())).collect(), line: false });
        pl.fits.push(FitLine {
            label: format!("fit, sigma {:.3}", report.fit.sigma()),
            slope: report.fit.slope,
            constant: report.fit.constant,
        });
        pl.fits.push(FitLine { label: "|d0| tau^-sigma0".into(), slope: -point.sigma0, constant: report.d0 });
        out.svg("decay.svg", &pl.render())?;
    }
    Ok(())
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

/// Quick consistency checks at seeded random inputs.
fn selftest_checks(seed: u64) -> Vec<(&'static str, Result<Check, Error>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(&'static str, Result<Check, Error>)> = Vec::new();

    let partition = (|| {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let r = PI * (1.0 - rng.gen::<f64>());
            let th = 2.0 * PI * rng.gen::<f64>();
            let xi = [r * th.cos(), r * th.sin()];
            let mut sum = 0.0;
            for k in 0..64 {
                sum += eta(xi, &BumpSpec::new(2f64.powi(-k))?);
            }
            worst = worst.max((sum - 1.0).abs());
        }
        Ok(Check { name: "partition", value: worst, tolerance: 1e-10 })
    })();
    out.push(("Littlewood-Paley pieces sum to one", partition));

    let dft = (|| {
        let g = Grid::new(0.5, 16)?;
        let vals: Vec<Complex64> = (0..g.len()).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let f = LatticeField::new(g, vals)?;
        let back = inverse_dft(&forward_dft(&f));
        let err = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        Ok(Check { name: "dft", value: err, tolerance: 1e-12 })
    })();
    out.push(("DFT round trip on 16x16", dft));

    let curve = (|| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let alpha = 1.0 + 1e-3 + 0.998 * rng.gen::<f64>();
            let c = (2.0 - alpha) / alpha;
            worst = worst.max((curve_b(1.0, alpha)? - c).abs());
        }
        Ok(Check { name: "curve", value: worst, tolerance: 1e-12 })
    })();
    out.push(("fold curve endpoint B(1) = (2-a)/a", curve));

    let hess = (|| {
        let alpha = 1.1 + 0.8 * rng.gen::<f64>();
        let xi = [0.3 + 2.5 * rng.gen::<f64>(), 0.3 + 2.5 * rng.gen::<f64>()];
        let m = hessian_w(xi, alpha)?;
        let e = 1e-4;
        let f = |dx: f64, dy: f64| w([xi[0] + dx, xi[1] + dy], alpha);
        let fd = [
            (f(e, 0.0) - 2.0 * f(0.0, 0.0) + f(-e, 0.0)) / (e * e),
            (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e),
            (f(0.0, e) - 2.0 * f(0.0, 0.0) + f(0.0, -e)) / (e * e),
        ];
        let err = (m[0][0] - fd[0]).abs().max((m[0][1] - fd[1]).abs()).max((m[1][1] - fd[2]).abs());
        Ok(Check { name: "hessian", value: err, tolerance: 1e-6 })
    })();
    out.push(("Hessian of w against finite differences", hess));

    let mass = (|| {
        let mut cfg = fraclat::dynamics::SimConfig::new(1.5, 3.0, 1.0, 0.25, 32)?;
        cfg.t_final = 50.0 * cfg.dt;
        let drift = simulate(&cfg)?.1.mass_drift();
        Ok(Check { name: "mass", value: drift, tolerance: 1e-10 })
    })();
    out.push(("mass conservation over 50 split steps", mass));

    let stationary = (|| {
        let point = classify([0.6, 2.6], 1.5)?;
        let iso = isolating_bump(&point)?;
        let r = verify_asymptotics(&point, &Cutoff::Localized(iso.bump), &[200.0, 400.0], &QuadOptions::default())?;
        Ok(Check { name: "stationary", value: (r.ratio - 1.0).abs(), tolerance: 0.1 })
    })();
    out.push(("non-degenerate |J| tau against 2 pi / sqrt|det|", stationary));
    out
}

fn run_selftest(seed: u64, out: &mut OutputDir) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (label, r) in selftest_checks(seed) {
        let row = match r {
            Ok(c) => {
                let pass = c.value <= c.tolerance;
                let st = if pass { "PASS" } else { "FAIL" };
                println!("{st} {label}: {:.3e} (tolerance {:.0e})", c.value, c.tolerance);
                if !pass {
                    out.fail(c.name, format!("{} exceeds {}", c.value, c.tolerance));
                }
                vec![c.name.to_string(), label.to_string(), num(c.value), num(c.tolerance), st.to_string()]
            }
            Err(e) => {
                println!("FAIL {label}: {e}");
                out.fail(label, &e);
                vec![String::new(), label.to_string(), String::new(), String::new(), format!("failed: {e}")]
            }
        };
        rows.push(row);
    }
    out.csv("selftest.csv", &["check", "description", "value", "tolerance", "status"], &rows)
}
