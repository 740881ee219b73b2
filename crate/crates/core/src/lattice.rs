//! Periodic lattice grids, the h²-scaled Fourier transform, lattice norms and
//! Fourier multipliers.
//!
//! Sites are `x = h·(j − n/2)` and dual frequencies `ξ = (2π/L)·(k − n/2)`,
//! both stored row-major with the first coordinate as the slow index. The
//! forward transform is `f̂(ξ) = h² Σ_x f(x) e^{−ix·ξ}` and its inverse is
//! `f(x) = L^{−2} Σ_ξ f̂(ξ) e^{ix·ξ}`, so Parseval reads
//! `‖f‖²_{L²_h} = L^{−2} Σ_ξ |f̂(ξ)|²`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::special::gamma;

/// Periodic truncation of `hZ²` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    h: f64,
    n: usize,
}

impl Grid {
    pub fn new(h: f64, n: usize) -> Result<Grid> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("mesh size must be positive, got h = {h}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(invalid(format!("points per axis must be even and at least 4, got n = {n}")));
        }
        Ok(Grid { h, n })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Box side `L = n·h`.
    pub fn side(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Dual grid spacing `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.side()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Site coordinate along one axis for index `j`.
    pub fn coord(&self, j: usize) -> f64 {
        self.h * (j as f64 - (self.n / 2) as f64)
    }

    /// Dual frequency along one axis for index `k`.
    pub fn freq(&self, k: usize) -> f64 {
        self.dk() * (k as f64 - (self.n / 2) as f64)
    }

    pub fn site(&self, idx: usize) -> [f64; 2] {
        [self.coord(idx / self.n), self.coord(idx % self.n)]
    }

    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        [self.freq(idx / self.n), self.freq(idx % self.n)]
    }

    /// Index of the cell `x′ + [0,h)²` containing `x`, with periodic wrap, and
    /// the offset `x − x′`.
    pub fn locate(&self, x: [f64; 2]) -> ([usize; 2], [f64; 2]) {
        let mut idx = [0usize; 2];
        let mut off = [0.0; 2];
        let n = self.n as i64;
        for a in 0..2 {
            let s = x[a] / self.h + (self.n / 2) as f64;
            let fl = s.floor();
            idx[a] = (fl as i64).rem_euclid(n) as usize;
            off[a] = (s - fl) * self.h;
        }
        (idx, off)
    }
}

/// Complex field on the sites of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("field contains non-finite values".into()));
        }
        Ok(LatticeField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        LatticeField { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.site(i))).collect();
        LatticeField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Fourier coefficients on the dual grid, centered like the sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(invalid("coefficient count does not match the grid"));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn at(&self, k1: usize, k2: usize) -> Complex64 {
        self.coeffs[k1 * self.grid.n + k2]
    }
}

/// Planned two-dimensional FFT of one size. Rows are transformed in parallel;
/// each row transform is independent, so results do not depend on the thread
/// count.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized transform in natural index order, in place.
    pub fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.n * self.n);
        let plan = if inverse { &self.inv } else { &self.fwd };
        let rows = |buf: &mut [Complex64]| {
            let scratch_len = plan.get_inplace_scratch_len();
            buf.par_chunks_mut(self.n).for_each_init(
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, row| plan.process_with_scratch(row, scratch),
            );
        };
        rows(buf);
        transpose(buf, self.n);
        rows(buf);
        transpose(buf, self.n);
    }

    pub fn forward(&self, f: &LatticeField) -> SpectralField {
        let grid = *f.grid();
        assert_eq!(grid.n, self.n);
        let mut buf = f.values.clone();
        checker(&mut buf, self.n, 1.0);
        self.fft2(&mut buf, false);
        checker(&mut buf, self.n, grid.h * grid.h);
        SpectralField { grid, coeffs: buf }
    }

    pub fn inverse(&self, s: &SpectralField) -> LatticeField {
        let grid = *s.grid();
        assert_eq!(grid.n, self.n);
        let mut buf = s.coeffs.clone();
        checker(&mut buf, self.n, 1.0);
        self.fft2(&mut buf, true);
        let l = grid.side();
        checker(&mut buf, self.n, 1.0 / (l * l));
        LatticeField { grid, values: buf }
    }
}

/// Multiply by `scale·(−1)^{j1+j2}`, which moves between centered and natural
/// index order for even `n`.
fn checker(buf: &mut [Complex64], n: usize, scale: f64) {
    buf.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, z) in row.iter_mut().enumerate() {
            let s = if (i + j) % 2 == 0 { scale } else { -scale };
            *z *= s;
        }
    });
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Forward transform with the h² convention.
pub fn forward_dft(f: &LatticeField) -> SpectralField {
    Dft::new(f.grid().n()).forward(f)
}

pub fn inverse_dft(s: &SpectralField) -> LatticeField {
    Dft::new(s.grid().n()).inverse(s)
}

/// `‖f‖_{L^p_h}`; pass `f64::INFINITY` for the sup norm.
pub fn lp_norm(f: &LatticeField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.values.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let h2 = f.grid.h * f.grid.h;
    if p == 2.0 {
        return Ok((h2 * f.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt());
    }
    let s: f64 = f.values.iter().map(|z| z.norm().powf(p)).sum();
    Ok((h2 * s).powf(1.0 / p))
}

/// `⟨f, g⟩ = h² Σ f·conj(g)`.
pub fn inner(f: &LatticeField, g: &LatticeField) -> Complex64 {
    let h2 = f.grid.h * f.grid.h;
    f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() * h2
}

/// `‖⟨ξ⟩^s f̂‖` in the Parseval normalization, `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
pub fn sobolev_norm(f: &LatticeField, s: f64) -> f64 {
    let spec = forward_dft(f);
    let g = f.grid;
    let l = g.side();
    let sum: f64 = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = g.frequency(i);
            (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(s) * c.norm_sqr()
        })
        .sum();
    sum.sqrt() / l
}

/// Which Fourier multiplier acts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolKind {
    /// `σ_h(ξ) = ((4/h²) Σ sin²(hξ_i/2))^{α/2}`.
    DiscreteFractional,
    /// `|ξ|^α`.
    ContinuumFractional,
    /// `m_h^q(ξ) = h² Σ_{0<|z|_q≤R} (1 − cos ξ·z)/|z|_q^{2+α}`, scaled by
    /// `c_{2,α}` when `q = 2`.
    LongRange { q: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSpec {
    pub kind: SymbolKind,
    pub alpha: f64,
}

impl SymbolSpec {
    pub fn discrete(alpha: f64) -> Self {
        SymbolSpec { kind: SymbolKind::DiscreteFractional, alpha }
    }

    pub fn continuum(alpha: f64) -> Self {
        SymbolSpec { kind: SymbolKind::ContinuumFractional, alpha }
    }

    pub fn long_range(alpha: f64, q: f64, radius: f64) -> Self {
        SymbolSpec { kind: SymbolKind::LongRange { q, radius }, alpha }
    }

    /// Checks the parameters against a mesh size.
    pub fn validate(&self, h: f64) -> Result<()> {
        let a = self.alpha;
        if !(a > 0.0 && a <= 2.0) {
            return Err(invalid(format!("alpha must lie in (0, 2], got {a}")));
        }
        if let SymbolKind::LongRange { q, radius } = self.kind {
            if a >= 2.0 {
                return Err(invalid("long-range coupling needs alpha < 2"));
            }
            if q.is_nan() || q < 1.0 {
                return Err(invalid(format!("q must lie in [1, inf], got {q}")));
            }
            if !(radius >= 8.0 * h) {
                return Err(invalid(format!(
                    "truncation radius {radius} is below 8h = {}",
                    8.0 * h
                )));
            }
        }
        Ok(())
    }

    /// Symbol at a single frequency. The long-range case sums the lattice
    /// directly.
    pub fn value(&self, xi: [f64; 2], h: f64) -> Result<f64> {
        self.validate(h)?;
        let a = self.alpha;
        Ok(match self.kind {
            SymbolKind::DiscreteFractional => discrete_symbol(xi, h, a),
            SymbolKind::ContinuumFractional => (xi[0] * xi[0] + xi[1] * xi[1]).powf(a / 2.0),
            SymbolKind::LongRange { q, radius } => {
                let c = if q == 2.0 { long_range_coeff(a)? } else { 1.0 };
                let m = (radius / h).floor() as i64;
                let mut s = 0.0;
                for i in -m..=m {
                    for j in -m..=m {
                        if i == 0 && j == 0 {
                            continue;
                        }
                        let z = [i as f64 * h, j as f64 * h];
                        let r = qnorm(z, q);
                        if r <= radius {
                            s += (1.0 - (xi[0] * z[0] + xi[1] * z[1]).cos()) / r.powf(2.0 + a);
                        }
                    }
                }
                c * h * h * s
            }
        })
    }

    /// Symbol on the dual grid, centered order. The long-range case folds the
    /// truncated kernel onto residues mod `n` and takes one DFT, which equals
    /// the periodic lattice sum exactly.
    pub fn on_grid(&self, grid: &Grid) -> Result<Vec<f64>> {
        self.validate(grid.h)?;
        let a = self.alpha;
        let h = grid.h;
        match self.kind {
            SymbolKind::DiscreteFractional => {
                Ok((0..grid.len()).map(|i| discrete_symbol(grid.frequency(i), h, a)).collect())
            }
            SymbolKind::ContinuumFractional => Ok((0..grid.len())
                .map(|i| {
                    let xi = grid.frequency(i);
                    (xi[0] * xi[0] + xi[1] * xi[1]).powf(a / 2.0)
                })
                .collect()),
            SymbolKind::LongRange { q, radius } => {
                let n = grid.n;
                let kernel = folded_kernel(grid, a, q, radius)?;
                let total: f64 = kernel.iter().sum();
                // Kernel is indexed by z/h mod n; a natural-order FFT gives
                // Σ k(z) e^{−iξ·z} at ξ index (k + n/2) mod n.
                let mut buf: Vec<Complex64> = kernel.iter().map(|&k| Complex64::new(k, 0.0)).collect();
                Dft::new(n).fft2(&mut buf, false);
                let mut out = vec![0.0; grid.len()];
                for k1 in 0..n {
                    for k2 in 0..n {
                        let nat = ((k1 + n / 2) % n) * n + (k2 + n / 2) % n;
                        out[k1 * n + k2] = (total - buf[nat].re).max(0.0);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Upper bound on the omitted tail `h²Σ_{|z|>R}` of the long-range sum,
    /// `2c·2πR^{−α}/α` up to lattice corrections; zero for the other kinds.
    pub fn tail_bound(&self) -> f64 {
        match self.kind {
            SymbolKind::LongRange { q, radius } => {
                let c = if q == 2.0 { long_range_coeff(self.alpha).unwrap_or(1.0) } else { 1.0 };
                2.0 * c * 2.0 * PI * radius.powf(-self.alpha) / self.alpha
            }
            _ => 0.0,
        }
    }
}

fn discrete_symbol(xi: [f64; 2], h: f64, alpha: f64) -> f64 {
    let s0 = (0.5 * h * xi[0]).sin();
    let s1 = (0.5 * h * xi[1]).sin();
    (4.0 / (h * h) * (s0 * s0 + s1 * s1)).powf(alpha / 2.0)
}

pub(crate) fn qnorm(z: [f64; 2], q: f64) -> f64 {
    let (x, y) = (z[0].abs(), z[1].abs());
    if q.is_infinite() {
        x.max(y)
    } else if q == 2.0 {
        x.hypot(y)
    } else if q == 1.0 {
        x + y
    } else {
        (x.powf(q) + y.powf(q)).powf(1.0 / q)
    }
}

/// Weights `c·h²/|z|_q^{2+α}` of the truncated coupling, summed by residue
/// class of `z/h` mod `n`, natural order.
fn folded_kernel(grid: &Grid, alpha: f64, q: f64, radius: f64) -> Result<Vec<f64>> {
    let n = grid.n as i64;
    let h = grid.h;
    let c = if q == 2.0 { long_range_coeff(alpha)? } else { 1.0 };
    let m = (radius / h).floor() as i64;
    let mut kernel = vec![0.0; grid.len()];
    for i in -m..=m {
        for j in -m..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let z = [i as f64 * h, j as f64 * h];
            let r = qnorm(z, q);
            if r <= radius {
                let idx = (i.rem_euclid(n) * n + j.rem_euclid(n)) as usize;
                kernel[idx] += c * h * h / r.powf(2.0 + alpha);
            }
        }
    }
    Ok(kernel)
}

/// `c_{2,α} = 4^{α/2} Γ((2+α)/2) / (π |Γ(−α/2)|)`.
pub fn long_range_coeff(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!("long-range coefficient needs alpha in (0, 2), got {alpha}")));
    }
    Ok(4f64.powf(alpha / 2.0) * gamma((2.0 + alpha) / 2.0) / (PI * gamma(-alpha / 2.0).abs()))
}

/// A symbol tabulated in natural FFT order for repeated application.
#[derive(Debug, Clone)]
pub struct Multiplier {
    grid: Grid,
    natural: Vec<f64>,
    dft: Dft,
}

impl Multiplier {
    pub fn new(spec: &SymbolSpec, grid: Grid) -> Result<Self> {
        let centered = spec.on_grid(&grid)?;
        Ok(Self::from_centered(grid, &centered))
    }

    /// Builds from symbol values in centered order.
    pub fn from_centered(grid: Grid, centered: &[f64]) -> Self {
        let n = grid.n;
        let mut natural = vec![0.0; grid.len()];
        for k1 in 0..n {
            for k2 in 0..n {
                natural[((k1 + n / 2) % n) * n + (k2 + n / 2) % n] = centered[k1 * n + k2];
            }
        }
        Multiplier { grid, natural, dft: Dft::new(n) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Values in natural FFT order.
    pub fn natural(&self) -> &[f64] {
        &self.natural
    }

    pub fn dft(&self) -> &Dft {
        &self.dft
    }

    /// Largest symbol value on the grid.
    pub fn sup(&self) -> f64 {
        self.natural.iter().cloned().fold(0.0, f64::max)
    }

    /// `F⁻¹(m·F f)`.
    pub fn apply(&self, f: &LatticeField) -> LatticeField {
        let mut buf = f.values.clone();
        self.dft.fft2(&mut buf, false);
        let norm = 1.0 / (self.grid.len() as f64);
        for (z, m) in buf.iter_mut().zip(&self.natural) {
            *z *= m * norm;
        }
        self.dft.fft2(&mut buf, true);
        LatticeField { grid: self.grid, values: buf }
    }

    /// `F⁻¹(e^{−i·t·m}·F f)` in place.
    pub fn propagate(&self, buf: &mut [Complex64], t: f64) {
        self.dft.fft2(buf, false);
        let norm = 1.0 / (self.grid.len() as f64);
        for (z, m) in buf.iter_mut().zip(&self.natural) {
            *z *= Complex64::from_polar(norm, -t * m);
        }
        self.dft.fft2(buf, true);
    }
}

/// `F_h⁻¹(symbol · F_h f)`.
pub fn apply_multiplier(spec: &SymbolSpec, f: &LatticeField) -> Result<LatticeField> {
    Ok(Multiplier::new(spec, *f.grid())?.apply(f))
}
