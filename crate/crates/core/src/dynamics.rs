//! Split-step integration of `i u̇ = A u + μ|u|^{p−1}u` on a periodic box,
//! with `A` the lattice fractional Laplacian or any other symbol, plus the
//! conserved functionals and the continuum-limit comparison.

use num_complex::Complex64;

use crate::discretize::{discretize_dh, interpolate_ph, sample, spectral_l2_error, ContinuumFunction};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_power_law, DecayFit};
use crate::lattice::{Grid, LatticeField, Multiplier, SymbolSpec};

/// Initial data, either a continuum function (discretized with `d_h`) or a
/// stored field on the simulation grid.
#[derive(Debug, Clone)]
pub enum InitialData {
    Continuum { u: ContinuumFunction, quad_order: usize },
    Field(LatticeField),
}

impl InitialData {
    pub fn gaussian(amplitude: f64, k: [f64; 2]) -> Self {
        InitialData::Continuum { u: ContinuumFunction::gaussian(amplitude, k), quad_order: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub alpha: f64,
    pub p: f64,
    /// Sign of the nonlinearity, `+1` defocusing or `−1` focusing.
    pub mu: f64,
    pub h: f64,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub symbol: SymbolSpec,
    pub initial: InitialData,
    /// When false the nonlinear sub-steps are skipped.
    pub nonlinear: bool,
    /// Observables are recorded every `sample_stride` steps and at the end.
    pub sample_stride: usize,
    /// Relative mass drift that aborts the run.
    pub mass_abort: f64,
}

impl SimConfig {
    /// Discrete fractional symbol, Gaussian data, `T = 0.5` and the default
    /// time step.
    pub fn new(alpha: f64, p: f64, mu: f64, h: f64, n: usize) -> Result<Self> {
        let symbol = SymbolSpec::discrete(alpha);
        let dt = default_dt(&symbol, h)?;
        Ok(SimConfig {
            alpha,
            p,
            mu,
            h,
            n,
            dt,
            t_final: 0.5,
            symbol,
            initial: InitialData::gaussian(1.0, [0.0, 0.0]),
            nonlinear: true,
            sample_stride: 1,
            mass_abort: 1e-6,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.h, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alpha;
        if !(a > 1.0 && a < 2.0) {
            return Err(invalid(format!("alpha must lie in (1, 2), got {a}")));
        }
        if !(self.p >= 3.0 && self.p.is_finite()) {
            return Err(invalid(format!("nonlinearity power p must be at least 3, got {}", self.p)));
        }
        if self.mu != 1.0 && self.mu != -1.0 {
            return Err(invalid(format!("mu must be +1 or -1, got {}", self.mu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(invalid(format!("final time {} is below the time step {}", self.t_final, self.dt)));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample stride must be at least 1"));
        }
        let g = self.grid()?;
        self.symbol.validate(g.h())?;
        if let InitialData::Field(f) = &self.initial {
            if f.grid() != &g {
                return Err(invalid("stored initial field lives on a different grid"));
            }
        }
        Ok(())
    }

    /// Range of `α` for which the continuum-limit estimate is stated:
    /// `max(8/7, 2(p−1)/(p+1)) < α < 2`.
    pub fn validate_limit_hypothesis(&self) -> Result<()> {
        let lo = limit_alpha_floor(self.p);
        if !(self.alpha > lo && self.alpha < 2.0) {
            return Err(invalid(format!(
                "continuum-limit runs need alpha in ({lo:.6}, 2) for p = {}, got {}",
                self.p, self.alpha
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Step actually taken, `T / steps`, never above `dt`.
    pub fn effective_dt(&self) -> f64 {
        self.t_final / self.steps() as f64
    }

    /// Initial field on the simulation grid.
    pub fn initial_field(&self) -> Result<LatticeField> {
        let g = self.grid()?;
        match &self.initial {
            InitialData::Continuum { u, quad_order } => discretize_dh(u, g, *quad_order),
            InitialData::Field(f) => Ok(f.clone()),
        }
    }
}

pub fn limit_alpha_floor(p: f64) -> f64 {
    (8.0f64 / 7.0).max(2.0 * (p - 1.0) / (p + 1.0))
}

/// Largest step with `dt·sup σ ≤ 1/2` on the grid of mesh `h`.
pub fn default_dt(symbol: &SymbolSpec, h: f64) -> Result<f64> {
    symbol.validate(h)?;
    let corner = std::f64::consts::PI / h;
    let sup = symbol.value([corner, corner], h)?;
    Ok(0.5 / sup.max(1.0))
}

/// Precomputed linear propagator and nonlinearity for one configuration.
#[derive(Debug, Clone)]
pub struct Propagator {
    mult: Multiplier,
    dt: f64,
    p: f64,
    mu: f64,
    nonlinear: bool,
}

impl Propagator {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Propagator {
            mult: Multiplier::new(&cfg.symbol, cfg.grid()?)?,
            dt: cfg.effective_dt(),
            p: cfg.p,
            mu: cfg.mu,
            nonlinear: cfg.nonlinear,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.mult.grid()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `u ← u·e^{−iμ|u|^{p−1}τ}`; leaves every modulus unchanged.
    pub fn nonlinear_phase(&self, buf: &mut [Complex64], tau: f64) {
        let c = -self.mu * tau;
        let half = (self.p - 1.0) / 2.0;
        for z in buf.iter_mut() {
            let r2 = z.norm_sqr();
            let a = if self.p == 3.0 { r2 } else { r2.powf(half) };
            let (s, co) = (c * a).sin_cos();
            *z = Complex64::new(z.re * co - z.im * s, z.re * s + z.im * co);
        }
    }

    /// `u ← F⁻¹ e^{−iτ·symbol} F u`.
    pub fn linear(&self, buf: &mut [Complex64], tau: f64) {
        self.mult.propagate(buf, tau);
    }

    /// One Strang step of size `dt`.
    pub fn step(&self, buf: &mut [Complex64]) -> Result<()> {
        if self.nonlinear {
            self.nonlinear_phase(buf, 0.5 * self.dt);
        }
        self.linear(buf, self.dt);
        if self.nonlinear {
            self.nonlinear_phase(buf, 0.5 * self.dt);
        }
        if buf.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("non-finite value after a split step".into()));
        }
        Ok(())
    }

    /// `E_h = ½ L^{−2}Σ σ|f̂|² + μ/(p+1)·h²Σ|f|^{p+1}`.
    pub fn energy(&self, f: &[Complex64]) -> f64 {
        let g = *self.grid();
        let h2 = g.h() * g.h();
        let mut buf = f.to_vec();
        self.mult.dft().fft2(&mut buf, false);
        let kin: f64 = buf.iter().zip(self.mult.natural()).map(|(z, m)| m * z.norm_sqr()).sum();
        let kin = 0.5 * kin * h2 / g.len() as f64;
        let pot: f64 = if self.nonlinear {
            f.iter().map(|z| z.norm().powf(self.p + 1.0)).sum::<f64>() * h2 * self.mu / (self.p + 1.0)
        } else {
            0.0
        };
        kin + pot
    }
}

/// One Strang step of `cfg` applied to `f`.
pub fn step_strang(f: &LatticeField, cfg: &SimConfig) -> Result<LatticeField> {
    let prop = Propagator::new(cfg)?;
    if f.grid() != prop.grid() {
        return Err(invalid("field and configuration grids differ"));
    }
    let mut buf = f.values().to_vec();
    prop.step(&mut buf)?;
    LatticeField::new(*f.grid(), buf)
}

/// `M_h = ‖f‖²_{L²_h}`.
pub fn mass(f: &LatticeField) -> f64 {
    mass_of(f.values(), f.grid().h())
}

fn mass_of(f: &[Complex64], h: f64) -> f64 {
    h * h * f.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub fn energy(f: &LatticeField, cfg: &SimConfig) -> Result<f64> {
    let prop = Propagator::new(cfg)?;
    if f.grid() != prop.grid() {
        return Err(invalid("field and configuration grids differ"));
    }
    Ok(prop.energy(f.values()))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observables {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub supnorm: Vec<f64>,
    /// Share of the mass outside the disk `|x| ≤ L/4`.
    pub boundary_fraction: Vec<f64>,
}

impl Observables {
    fn record(&mut self, t: f64, f: &[Complex64], grid: &Grid, prop: &Propagator) {
        let m = mass_of(f, grid.h());
        let r = grid.side() / 4.0;
        let outside: f64 = f
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let x = grid.site(*k);
                x[0].hypot(x[1]) > r
            })
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            * grid.h()
            * grid.h();
        self.times.push(t);
        self.mass.push(m);
        self.energy.push(prop.energy(f));
        self.supnorm.push(f.iter().map(|z| z.norm()).fold(0.0, f64::max));
        self.boundary_fraction.push(if m > 0.0 { outside / m } else { 0.0 });
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|M(t) − M(0)|/M(0)` over the samples.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(&self.mass)
    }

    /// Largest `|E(t) − E(0)|` over the samples.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    pub fn max_boundary_fraction(&self) -> f64 {
        self.boundary_fraction.iter().cloned().fold(0.0, f64::max)
    }
}

fn relative_drift(v: &[f64]) -> f64 {
    let m0 = v.first().copied().unwrap_or(0.0);
    if m0 == 0.0 {
        return 0.0;
    }
    v.iter().map(|m| ((m - m0) / m0).abs()).fold(0.0, f64::max)
}

/// Evolves the initial data to `T`. Mass is checked after every step and a
/// relative drift above `mass_abort` stops the run.
pub fn simulate(cfg: &SimConfig) -> Result<(LatticeField, Observables)> {
    let prop = Propagator::new(cfg)?;
    let f0 = cfg.initial_field()?;
    run(&prop, cfg, f0)
}

fn run(prop: &Propagator, cfg: &SimConfig, f0: LatticeField) -> Result<(LatticeField, Observables)> {
    let grid = *f0.grid();
    let mut buf = f0.into_values();
    let mut obs = Observables::default();
    obs.record(0.0, &buf, &grid, prop);
    let m0 = obs.mass[0];
    let steps = cfg.steps();
    let dt = prop.dt();
    for k in 1..=steps {
        prop.step(&mut buf).map_err(|e| Error::Numerical(format!("{e} at step {k}")))?;
        let m = mass_of(&buf, grid.h());
        if m0 > 0.0 && ((m - m0) / m0).abs() > cfg.mass_abort {
            return Err(Error::Numerical(format!(
                "relative mass drift {:.3e} exceeds {:.1e} at step {k}; refine dt or the grid",
                ((m - m0) / m0).abs(),
                cfg.mass_abort
            )));
        }
        if k % cfg.sample_stride == 0 || k == steps {
            obs.record(k as f64 * dt, &buf, &grid, prop);
        }
    }
    Ok((LatticeField::new(grid, buf)?, obs))
}

/// Same scheme with the symbol `|ξ|^α` on a grid of mesh `h_ref` over the
/// box of `cfg`; continuum data are sampled pointwise.
pub fn continuum_reference(cfg: &SimConfig, h_ref: f64) -> Result<(LatticeField, Observables)> {
    let side = cfg.grid()?.side();
    let n = (side / h_ref).round() as usize;
    if ((n as f64) * h_ref - side).abs() > 1e-9 * side {
        return Err(invalid(format!("reference mesh {h_ref} does not divide the box side {side}")));
    }
    let mut rc = cfg.clone();
    rc.h = h_ref;
    rc.n = n;
    rc.symbol = SymbolSpec::continuum(cfg.alpha);
    let g = rc.grid()?;
    let f0 = match &cfg.initial {
        InitialData::Continuum { u, .. } => sample(u, g),
        InitialData::Field(_) => return Err(invalid("continuum reference needs continuum initial data")),
    };
    rc.initial = InitialData::Field(f0.clone());
    let prop = Propagator::new(&rc)?;
    run(&prop, &rc, f0)
}

/// One row of a continuum-limit study.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub h: f64,
    pub n: usize,
    pub error: f64,
    pub mass_drift: f64,
    pub boundary_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitStudy {
    pub rows: Vec<LimitRow>,
    pub fit: DecayFit,
    pub h_ref: f64,
    pub dt: f64,
    pub reference_boundary_fraction: f64,
}

/// Runs the lattice equation at each mesh in `hs` over the box and time step
/// of `base`, interpolates with `p_h`, and measures the L² distance to the
/// continuum reference at `T`. The error-vs-h fit gives the observed order.
pub fn continuum_limit_study(base: &SimConfig, hs: &[f64], h_ref: f64, quad_order: usize) -> Result<LimitStudy> {
    if hs.len() < 4 {
        return Err(invalid(format!("limit study needs at least 4 mesh sizes, got {}", hs.len())));
    }
    for &h in hs {
        let l = h.log2();
        if (l - l.round()).abs() > 1e-12 {
            return Err(invalid(format!("mesh sizes must be dyadic, got {h}")));
        }
    }
    base.validate_limit_hypothesis()?;
    let coarsest = hs.iter().cloned().fold(0.0, f64::max);
    if h_ref > coarsest / 4.0 + 1e-15 {
        return Err(invalid(format!("reference mesh {h_ref} must be at most a quarter of the coarsest mesh {coarsest}")));
    }
    let side = base.grid()?.side();
    let (reference, ref_obs) = continuum_reference(base, h_ref)?;
    let ref_spec = crate::lattice::forward_dft(&reference);
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let mut cfg = base.clone();
        cfg.h = h;
        cfg.n = (side / h).round() as usize;
        cfg.symbol = SymbolSpec { alpha: base.alpha, ..base.symbol };
        let (f, obs) = simulate(&cfg).map_err(|e| match e {
            Error::Numerical(m) => Error::Numerical(format!("h = {h}: {m}")),
            other => other,
        })?;
        let error = spectral_l2_error(&interpolate_ph(&f), &ref_spec, quad_order)?;
        rows.push(LimitRow {
            h,
            n: cfg.n,
            error,
            mass_drift: obs.mass_drift(),
            boundary_fraction: obs.max_boundary_fraction(),
        });
    }
    if rows.iter().all(|r| r.error == 0.0) {
        return Err(invalid("all errors vanish; the fit is degenerate"));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.error)).collect();
    let fit = fit_power_law(&pts)?;
    Ok(LimitStudy {
        rows,
        fit,
        h_ref,
        dt: base.effective_dt(),
        reference_boundary_fraction: ref_obs.max_boundary_fraction(),
    })
}
