//! Plain-text `key = value` configuration with `[section]` headers.
//!
//! Keys outside any section belong to `[run]`. Every key must be known to
//! the section it appears in; each experiment reads `[run]` and its own
//! section and rejects all others.

use std::collections::BTreeMap;
use std::fmt;

use fraclat::dynamics::{default_dt, InitialData, SimConfig};
use fraclat::oscillatory::Band;
use fraclat::SymbolSpec;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Simulate,
    LimitStudy,
    DispersionScan,
    ManifoldScan,
    Asymptotics,
    Selftest,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::LimitStudy => "limit-study",
            Experiment::DispersionScan => "dispersion-scan",
            Experiment::ManifoldScan => "manifold-scan",
            Experiment::Asymptotics => "asymptotics",
            Experiment::Selftest => "selftest",
        }
    }

    pub const ALL: [Experiment; 6] = [
        Experiment::Simulate,
        Experiment::LimitStudy,
        Experiment::DispersionScan,
        Experiment::ManifoldScan,
        Experiment::Asymptotics,
        Experiment::Selftest,
    ];
}

/// Raw document: section name to `key -> (value, line)`.
#[derive(Debug, Default, Clone)]
pub struct Document {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut doc = Document::default();
        let mut current = "run".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("line {line_no}: unterminated section header")))?
                    .trim();
                if name != "run" && !Experiment::ALL.iter().any(|e| e.name() == name) {
                    return Err(CliError::Config(format!("line {line_no}: unknown section [{name}]")));
                }
                current = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line_no}: expected key = value")))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                return Err(CliError::Config(format!("line {line_no}: empty key")));
            }
            let sec = doc.sections.entry(current.clone()).or_default();
            if sec.insert(k.clone(), (v, line_no)).is_some() {
                return Err(CliError::Config(format!("line {line_no}: duplicate key [{current}] {k}")));
            }
        }
        Ok(doc)
    }

    fn section(&self, name: &str) -> Section {
        Section { name: name.to_string(), entries: self.sections.get(name).cloned().unwrap_or_default(), echo: Vec::new() }
    }
}

/// Typed access to one section; keys are consumed as they are read and any
/// left over are reported as unknown.
struct Section {
    name: String,
    entries: BTreeMap<String, (String, usize)>,
    echo: Vec<(String, String)>,
}

impl Section {
    fn err(&self, key: &str, msg: impl fmt::Display) -> CliError {
        CliError::Config(format!("[{}] {key}: {msg}", self.name))
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn parse_f64(&self, key: &str, v: &str) -> Result<f64, CliError> {
        let x: f64 = v.parse().map_err(|_| self.err(key, format!("expected a number, got '{v}'")))?;
        if !x.is_finite() {
            return Err(self.err(key, "value must be finite"));
        }
        Ok(x)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = match self.raw(key) {
            Some(v) => self.parse_f64(key, &v)?,
            None => default,
        };
        self.echo.push((key.into(), fmt_f64(v)));
        Ok(v)
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            Some(v) => Ok(Some(self.parse_f64(key, &v)?)),
            None => Ok(None),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = match self.raw(key) {
            Some(v) => v.parse().map_err(|_| self.err(key, format!("expected a non-negative integer, got '{v}'")))?,
            None => default,
        };
        self.echo.push((key.into(), v.to_string()));
        Ok(v)
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        let v = match self.raw(key).as_deref() {
            Some("true") => true,
            Some("false") => false,
            Some(other) => return Err(self.err(key, format!("expected true or false, got '{other}'"))),
            None => default,
        };
        self.echo.push((key.into(), v.to_string()));
        Ok(v)
    }

    fn string_or(&mut self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or_else(|| default.to_string());
        self.echo.push((key.into(), v.clone()));
        v
    }

    fn list_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let v = match self.raw(key) {
            Some(v) => {
                let items: Result<Vec<f64>, CliError> =
                    v.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(|s| self.parse_f64(key, s)).collect();
                let items = items?;
                if items.is_empty() {
                    return Err(self.err(key, "list is empty"));
                }
                items
            }
            None => default.to_vec(),
        };
        self.echo.push((key.into(), v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")));
        Ok(v)
    }

    fn finish(self) -> Result<Vec<(String, String)>, CliError> {
        if let Some((k, (_, line))) = self.entries.iter().next() {
            return Err(CliError::Config(format!("line {line}: unknown key [{}] {k}", self.name)));
        }
        Ok(self.echo)
    }
}

pub fn fmt_f64(x: f64) -> String {
    crate::output::num(x)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub threads: usize,
    pub out: String,
    pub plot: bool,
}

/// Command-line flags that override `[run]`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub plot: bool,
}

#[derive(Debug, Clone)]
pub struct SimulateParams {
    pub cfg: SimConfig,
    pub write_field: bool,
}

#[derive(Debug, Clone)]
pub struct LimitParams {
    pub base: SimConfig,
    pub hs: Vec<f64>,
    pub h_ref: f64,
    pub quad_order: usize,
}

#[derive(Debug, Clone)]
pub struct DispersionParams {
    pub alphas: Vec<f64>,
    pub scales: Vec<f64>,
    pub taus: Vec<f64>,
    pub bands: Vec<Band>,
    pub band_base: f64,
    pub band_count: usize,
    pub tol: f64,
    pub budget: u64,
}

#[derive(Debug, Clone)]
pub struct ManifoldParams {
    pub alphas: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct AsymptoticsParams {
    pub alpha: f64,
    pub xi: [f64; 2],
    pub taus: Vec<f64>,
    /// Bump radii along `k₁`, `k₂`; `None` picks the isolating bump.
    pub radii: Option<[f64; 2]>,
    pub flat: f64,
    pub tol: f64,
    pub budget: u64,
}

#[derive(Debug, Clone)]
pub enum Params {
    Simulate(SimulateParams),
    LimitStudy(LimitParams),
    DispersionScan(DispersionParams),
    ManifoldScan(ManifoldParams),
    Asymptotics(AsymptoticsParams),
    Selftest,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub run: RunOptions,
    pub params: Params,
    /// Resolved `(section, key, value)` triples including defaults.
    pub echo: Vec<(String, String, String)>,
}

impl ExperimentConfig {
    /// The resolved configuration in the input format.
    pub fn echo_text(&self) -> String {
        let mut out = String::new();
        let mut last = "";
        for (sec, k, v) in &self.echo {
            if sec != last {
                out.push_str(&format!("[{sec}]\n"));
                last = sec;
            }
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

const DEFAULT_SIDE: f64 = 16.0;

fn check_alpha_open(sec: &Section, key: &str, alpha: f64) -> Result<(), CliError> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(sec.err(key, format!("alpha must lie in (1, 2), got {alpha}")))
    }
}

fn dyadic(sec: &Section, key: &str, x: f64) -> Result<(), CliError> {
    let l = x.log2();
    if !(x > 0.0) || (l - l.round()).abs() > 1e-12 {
        return Err(sec.err(key, format!("{x} is not a power of two")));
    }
    Ok(())
}

/// Reads the equation, grid and data keys. `fixed_h` pins the mesh instead of
/// reading `h`; the default step is the stability step on mesh `dt_mesh`.
fn sim_block(sec: &mut Section, fixed_h: Option<f64>, dt_mesh: Option<f64>) -> Result<SimConfig, CliError> {
    let alpha = sec.f64_or("alpha", 1.5)?;
    check_alpha_open(sec, "alpha", alpha)?;
    let p = sec.f64_or("p", 3.0)?;
    if p < 3.0 {
        return Err(sec.err("p", format!("nonlinearity power must be at least 3, got {p}")));
    }
    let mu = sec.f64_or("mu", 1.0)?;
    if mu != 1.0 && mu != -1.0 {
        return Err(sec.err("mu", format!("must be 1 or -1, got {mu}")));
    }
    let h = match fixed_h {
        Some(h) => h,
        None => sec.f64_or("h", 1.0 / 32.0)?,
    };
    if !(h > 0.0 && h <= 1.0) {
        return Err(sec.err("h", format!("mesh size must lie in (0, 1], got {h}")));
    }
    let side = sec.f64_or("side", DEFAULT_SIDE)?;
    let n = if fixed_h.is_some() {
        (side / h).round() as usize
    } else {
        let n = (side / h).round() as usize;
        sec.usize_or("n", n + n % 2)?
    };
    if n < 4 || n % 2 == 1 {
        return Err(sec.err("n", format!("points per dimension must be even and at least 4, got {n}")));
    }
    let kind = sec.string_or("symbol", "discrete");
    let symbol = match kind.as_str() {
        "discrete" => SymbolSpec::discrete(alpha),
        "continuum" => SymbolSpec::continuum(alpha),
        "long-range" => {
            let q = match sec.raw("q").as_deref() {
                None => 2.0,
                Some("inf") => f64::INFINITY,
                Some(v) => sec.parse_f64("q", v)?,
            };
            sec.echo.push(("q".into(), fmt_f64(q)));
            let radius = sec.f64_or("radius", 8.0 * h)?;
            SymbolSpec::long_range(alpha, q, radius)
        }
        other => return Err(sec.err("symbol", format!("expected discrete, continuum or long-range, got '{other}'"))),
    };
    symbol.validate(h).map_err(|e| sec.err("symbol", e))?;
    let dt_default = default_dt(&symbol, dt_mesh.unwrap_or(h)).map_err(|e| sec.err("dt", e))?;
    let dt = sec.f64_or("dt", dt_default)?;
    let t_final = sec.f64_or("t_final", 0.5)?;
    let amplitude = sec.f64_or("amplitude", 1.0)?;
    let k = [sec.f64_or("kx", 0.0)?, sec.f64_or("ky", 0.0)?];
    let sample_stride = sec.usize_or("stride", 1)?;
    let mass_abort = sec.f64_or("mass_abort", 1e-6)?;
    let nonlinear = sec.bool_or("nonlinear", true)?;
    let cfg = SimConfig {
        alpha,
        p,
        mu,
        h,
        n,
        dt,
        t_final,
        symbol,
        initial: InitialData::gaussian(amplitude, k),
        nonlinear,
        sample_stride,
        mass_abort,
    };
    cfg.validate().map_err(|e| CliError::Config(format!("[{}] {e}", sec.name)))?;
    Ok(cfg)
}

fn parse_band(sec: &Section, s: &str) -> Result<Band, CliError> {
    match s.trim() {
        "S1" | "s1" => Ok(Band::S1),
        "S2" | "s2" => Ok(Band::S2),
        "S3" | "s3" => Ok(Band::S3),
        other => Err(sec.err("bands", format!("expected S1, S2 or S3, got '{other}'"))),
    }
}

/// Resolves a document for one experiment, applying flag overrides.
pub fn resolve(doc: &Document, experiment: Experiment, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    for name in doc.sections.keys() {
        if name != "run" && name != experiment.name() {
            return Err(CliError::Config(format!("section [{name}] does not apply to {}", experiment.name())));
        }
    }
    let mut run = doc.section("run");
    let seed = match ov.seed {
        Some(s) => {
            run.raw("seed");
            s
        }
        None => match run.raw("seed") {
            Some(v) => v.parse().map_err(|_| run.err("seed", format!("expected an unsigned integer, got '{v}'")))?,
            None => 0,
        },
    };
    run.echo.push(("seed".into(), seed.to_string()));
    let threads = match ov.threads {
        Some(t) => {
            run.raw("threads");
            t
        }
        None => match run.raw("threads") {
            Some(v) => v.parse().map_err(|_| run.err("threads", format!("expected a positive integer, got '{v}'")))?,
            None => 1,
        },
    };
    if threads == 0 {
        return Err(run.err("threads", "must be at least 1"));
    }
    run.echo.push(("threads".into(), threads.to_string()));
    let out = match &ov.out {
        Some(o) => {
            run.raw("out");
            o.clone()
        }
        None => run.raw("out").unwrap_or_else(|| format!("fraclat-out/{}", experiment.name())),
    };
    run.echo.push(("out".into(), out.clone()));
    let plot_cfg = run.bool_or("plot", false)?;
    let plot = ov.plot || plot_cfg;
    if let Some(last) = run.echo.last_mut() {
        last.1 = plot.to_string();
    }
    let mut echo: Vec<(String, String, String)> =
        run.finish()?.into_iter().map(|(k, v)| ("run".to_string(), k, v)).collect();

    let mut sec = doc.section(experiment.name());
    let params = match experiment {
        Experiment::Simulate => {
            let cfg = sim_block(&mut sec, None, None)?;
            let write_field = sec.bool_or("write_field", true)?;
            Params::Simulate(SimulateParams { cfg, write_field })
        }
        Experiment::LimitStudy => {
            let hs = sec.list_or("hs", &[0.125, 0.0625, 0.03125, 0.015625])?;
            for &h in &hs {
                dyadic(&sec, "hs", h)?;
            }
            if hs.len() < 4 {
                return Err(sec.err("hs", format!("need at least 4 mesh sizes, got {}", hs.len())));
            }
            let coarsest = hs.iter().cloned().fold(0.0, f64::max);
            let h_ref = sec.f64_or("h_ref", coarsest / 4.0)?;
            dyadic(&sec, "h_ref", h_ref)?;
            if h_ref > coarsest / 4.0 {
                return Err(sec.err("h_ref", format!("must be at most a quarter of the coarsest mesh {coarsest}")));
            }
            // One step for every run: the stability step of the finest grid.
            let finest = hs.iter().cloned().fold(h_ref, f64::min);
            let base = sim_block(&mut sec, Some(coarsest), Some(finest))?;
            let quad_order = sec.usize_or("quad_order", 4)?;
            if quad_order < 2 {
                return Err(sec.err("quad_order", "must be at least 2"));
            }
            base.validate_limit_hypothesis().map_err(|e| sec.err("alpha", e))?;
            Params::LimitStudy(LimitParams { base, hs, h_ref, quad_order })
        }
        Experiment::DispersionScan => {
            let alphas = sec.list_or("alphas", &[1.3, 1.5, 1.7])?;
            for &a in &alphas {
                if !(a > 1.0 && a <= 2.0) {
                    return Err(sec.err("alphas", format!("alpha must lie in (1, 2], got {a}")));
                }
            }
            let scales = sec.list_or("scales", &[1.0, 0.5, 0.25, 0.125])?;
            for &n in &scales {
                dyadic(&sec, "scales", n)?;
                if n > 1.0 {
                    return Err(sec.err("scales", format!("scale must be at most 1, got {n}")));
                }
            }
            let taus = sec.list_or("taus", &[50.0, 100.0, 200.0, 400.0, 800.0])?;
            if taus.iter().any(|t| !(*t > 0.0)) {
                return Err(sec.err("taus", "times must be positive"));
            }
            let bands_raw = sec.string_or("bands", "");
            let bands = bands_raw
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_band(&sec, s))
                .collect::<Result<Vec<_>, _>>()?;
            if !bands.is_empty() && alphas.iter().any(|a| *a >= 2.0) {
                return Err(sec.err("alphas", "band constants need alpha in (1, 2)"));
            }
            let band_base = sec.f64_or("band_base", 1600.0)?;
            let band_count = sec.usize_or("band_count", 3)?;
            if band_count < 2 {
                return Err(sec.err("band_count", "need at least 2 times per band constant"));
            }
            let tol = sec.f64_or("tol", 1e-7)?;
            let budget = sec.f64_or("budget", (1u64 << 28) as f64)? as u64;
            Params::DispersionScan(DispersionParams { alphas, scales, taus, bands, band_base, band_count, tol, budget })
        }
        Experiment::ManifoldScan => {
            let alphas = sec.list_or("alphas", &[1.2, 1.5, 1.8])?;
            for &a in &alphas {
                check_alpha_open(&sec, "alphas", a)?;
            }
            let samples = sec.usize_or("samples", 64)?;
            if samples == 0 {
                return Err(sec.err("samples", "need at least one sample per branch"));
            }
            Params::ManifoldScan(ManifoldParams { alphas, samples })
        }
        Experiment::Asymptotics => {
            let alpha = sec.f64_or("alpha", 1.5)?;
            check_alpha_open(&sec, "alpha", alpha)?;
            let xi = [
                sec.f64_or("xi1", std::f64::consts::FRAC_PI_2)?,
                sec.f64_or("xi2", std::f64::consts::FRAC_PI_2)?,
            ];
            let taus = sec.list_or("taus", &[50.0, 70.7, 100.0, 141.4, 200.0, 282.8, 400.0, 565.7, 800.0])?;
            if taus.len() < 2 || taus.iter().any(|t| !(*t > 0.0)) {
                return Err(sec.err("taus", "need at least two positive times"));
            }
            let r1 = sec.opt_f64("radius1")?;
            let r2 = sec.opt_f64("radius2")?;
            let radii = match (r1, r2) {
                (Some(a), Some(b)) => {
                    sec.echo.push(("radius1".into(), fmt_f64(a)));
                    sec.echo.push(("radius2".into(), fmt_f64(b)));
                    Some([a, b])
                }
                (None, None) => None,
                _ => return Err(sec.err("radius1", "give both radius1 and radius2 or neither")),
            };
            let flat = sec.f64_or("flat", 0.0)?;
            let tol = sec.f64_or("tol", 1e-7)?;
            let budget = sec.f64_or("budget", (1u64 << 26) as f64)? as u64;
            Params::Asymptotics(AsymptoticsParams { alpha, xi, taus, radii, flat, tol, budget })
        }
        Experiment::Selftest => Params::Selftest,
    };
    let name = experiment.name().to_string();
    echo.extend(sec.finish()?.into_iter().map(|(k, v)| (name.clone(), k, v)));
    Ok(ExperimentConfig { experiment, run: RunOptions { seed, threads, out, plot }, params, echo })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(text: &str, e: Experiment) -> Result<ExperimentConfig, CliError> {
        resolve(&Document::parse(text).unwrap(), e, &Overrides::default())
    }

    #[test]
    fn minimal_simulate_fills_defaults() {
        let c = resolve_text("[simulate]\nalpha = 1.5\np = 3\nh = 0.03125\n", Experiment::Simulate).unwrap();
        let Params::Simulate(s) = &c.params else { panic!() };
        assert_eq!(s.cfg.n, 512);
        assert_eq!(s.cfg.dt, default_dt(&SymbolSpec::discrete(1.5), 0.03125).unwrap());
        assert!(c.echo_text().contains("dt = "));
        assert!(c.echo_text().contains("n = 512"));
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        let e = resolve_text("[simulate]\nalpha = 2.5\n", Experiment::Simulate).unwrap_err();
        assert!(e.to_string().contains("alpha must lie in (1, 2)"), "{e}");
        assert!(e.to_string().contains("[simulate] alpha"));
    }

    #[test]
    fn limit_hypothesis_is_enforced() {
        let e = resolve_text("[limit-study]\nalpha = 1.1\np = 3\n", Experiment::LimitStudy).unwrap_err();
        assert!(e.to_string().contains("continuum-limit runs need alpha"), "{e}");
        assert!(resolve_text("[simulate]\nalpha = 1.1\np = 3\n", Experiment::Simulate).is_ok());
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(resolve_text("[simulate]\nalpah = 1.5\n", Experiment::Simulate).unwrap_err().to_string().contains("unknown key [simulate] alpah"));
        assert!(Document::parse("[nope]\n").is_err());
        assert!(resolve_text("[asymptotics]\nalpha = 1.5\n", Experiment::Simulate).is_err());
        assert!(resolve_text("bogus = 1\n", Experiment::Simulate).is_err());
        assert!(Document::parse("[simulate]\nh = 1\nh = 2\n").is_err());
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let e = resolve_text("[simulate]\nh = fine\n", Experiment::Simulate).unwrap_err();
        assert!(e.to_string().contains("[simulate] h"), "{e}");
    }

    #[test]
    fn flags_override_config() {
        let doc = Document::parse("seed = 3\nthreads = 2\nout = a\n").unwrap();
        let ov = Overrides { seed: Some(9), threads: None, out: Some("b".into()), plot: true };
        let c = resolve(&doc, Experiment::ManifoldScan, &ov).unwrap();
        assert_eq!((c.run.seed, c.run.threads, c.run.out.as_str(), c.run.plot), (9, 2, "b", true));
        assert!(c.echo_text().contains("seed = 9"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = resolve_text("# top\n\n[manifold-scan] \nalphas = 1.3, 1.4 # two\n", Experiment::ManifoldScan).unwrap();
        let Params::ManifoldScan(m) = c.params else { panic!() };
        assert_eq!(m.alphas, vec![1.3, 1.4]);
    }
}
