//! Oscillatory integrals `J(τ) = ∫ e^{iτΦ_v(ξ)} ζ(ξ) dξ` with
//! `Φ_v(ξ) = v·ξ − w(ξ)`, the lattice dispersion `w(ξ) = (Σ sin²(ξ_i/2))^{α/2}`,
//! Littlewood-Paley cutoffs, the dispersive kernel `K_{t,N,h}`, frequency
//! bands, and constant scans across `α`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_power_law, DecayFit};
use crate::lattice::{Dft, Grid, SpectralField};
use crate::manifold::{self, CriticalPoint};

/// `S(s) = g(s)/(g(s) + g(1−s))` with `g(s) = e^{−1/s}`; 0 below 0 and 1 above 1.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// Even cutoff, 1 on `[−π, π]`, 0 outside `(−2π, 2π)`.
pub fn psi(r: f64) -> f64 {
    let r = r.abs();
    if r <= PI {
        1.0
    } else if r >= 2.0 * PI {
        0.0
    } else {
        smooth_step((2.0 * PI - r) / PI)
    }
}

/// Littlewood-Paley bump at dyadic scale `N`: `ξ ↦ η(ξ/N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    pub scale: f64,
}

impl BumpSpec {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) || (scale.log2() - scale.log2().round()).abs() > 1e-12 {
            return Err(invalid(format!("scale must be dyadic and at most 1, got {scale}")));
        }
        Ok(BumpSpec { scale })
    }

    /// Outer radius of the support, `2πN`.
    pub fn outer(&self) -> f64 {
        2.0 * PI * self.scale
    }
}

/// `η(ξ/N)` with `η(ξ) = ψ(|ξ|) − ψ(2|ξ|)`.
pub fn eta(xi: [f64; 2], b: &BumpSpec) -> f64 {
    let r = xi[0].hypot(xi[1]) / b.scale;
    psi(r) - psi(2.0 * r)
}

/// `w(ξ) = (sin²(ξ₁/2) + sin²(ξ₂/2))^{α/2}`.
pub fn w(xi: [f64; 2], alpha: f64) -> f64 {
    base(xi).powf(alpha / 2.0)
}

#[inline]
fn base(xi: [f64; 2]) -> f64 {
    0.5 * (2.0 - xi[0].cos() - xi[1].cos())
}

/// `∇w(ξ) = (α/4) w^{1−2/α} (sin ξ₁, sin ξ₂)`, extended by 0 at the origin.
pub fn group_velocity(xi: [f64; 2], alpha: f64) -> [f64; 2] {
    let b = base(xi);
    if b == 0.0 {
        return [0.0, 0.0];
    }
    let c = 0.25 * alpha * b.powf(alpha / 2.0 - 1.0);
    [c * xi[0].sin(), c * xi[1].sin()]
}

/// Upper estimate of the group speed `sup |∇w|`: a grid maximum over the
/// quarter torus, padded by 0.1%.
pub fn max_group_speed(alpha: f64) -> f64 {
    let speed = |xi: [f64; 2]| {
        let g = group_velocity(xi, alpha);
        g[0].hypot(g[1])
    };
    let mut best = 0.0f64;
    let m = 256;
    for i in 0..=m {
        for j in 0..=i {
            let xi = [PI * i as f64 / m as f64, PI * j as f64 / m as f64];
            best = best.max(speed(xi));
        }
    }
    best * (1.0 + 1e-3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpec {
    pub alpha: f64,
    pub v: [f64; 2],
}

impl PhaseSpec {
    pub fn new(alpha: f64, v: [f64; 2]) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(invalid(format!("phase needs alpha in (1, 2], got {alpha}")));
        }
        Ok(PhaseSpec { alpha, v })
    }

    /// Phase with `v = ∇w(ξ*)`, stationary at `ξ*`.
    pub fn stationary_at(alpha: f64, xi: [f64; 2]) -> Result<Self> {
        Self::new(alpha, group_velocity(xi, alpha))
    }

    pub fn value(&self, xi: [f64; 2]) -> f64 {
        self.v[0] * xi[0] + self.v[1] * xi[1] - w(xi, self.alpha)
    }

    pub fn gradient(&self, xi: [f64; 2]) -> [f64; 2] {
        let g = group_velocity(xi, self.alpha);
        [self.v[0] - g[0], self.v[1] - g[1]]
    }
}

/// Smooth bump with an elliptical footprint in a rotated frame:
/// `S((1 − r)/(1 − flat))` with `r = |(s/r_x, t/r_y)|` where `(s, t)` are the
/// coordinates of `ξ − center` along `frame[0]` and `frame[1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBump {
    pub center: [f64; 2],
    /// Orthonormal axes `k₁`, `k₂`.
    pub frame: [[f64; 2]; 2],
    pub radii: [f64; 2],
    /// Relative radius of the plateau where the bump equals 1, in `[0, 1)`.
    pub flat: f64,
}

impl LocalBump {
    pub fn new(center: [f64; 2], frame: [[f64; 2]; 2], radii: [f64; 2], flat: f64) -> Result<Self> {
        if !(radii[0] > 0.0 && radii[1] > 0.0) {
            return Err(invalid("bump radii must be positive"));
        }
        if !(0.0..1.0).contains(&flat) {
            return Err(invalid(format!("plateau fraction must lie in [0, 1), got {flat}")));
        }
        let dot = frame[0][0] * frame[1][0] + frame[0][1] * frame[1][1];
        let n0 = frame[0][0].hypot(frame[0][1]);
        let n1 = frame[1][0].hypot(frame[1][1]);
        if dot.abs() > 1e-10 || (n0 - 1.0).abs() > 1e-10 || (n1 - 1.0).abs() > 1e-10 {
            return Err(invalid("bump frame must be orthonormal"));
        }
        Ok(LocalBump { center, frame, radii, flat })
    }

    #[inline]
    fn local(&self, s: f64, t: f64) -> f64 {
        let r = (s / self.radii[0]).hypot(t / self.radii[1]);
        if r >= 1.0 {
            0.0
        } else if r <= self.flat {
            1.0
        } else {
            smooth_step((1.0 - r) / (1.0 - self.flat))
        }
    }

    pub fn value(&self, xi: [f64; 2]) -> f64 {
        let d = [xi[0] - self.center[0], xi[1] - self.center[1]];
        let s = d[0] * self.frame[0][0] + d[1] * self.frame[0][1];
        let t = d[0] * self.frame[1][0] + d[1] * self.frame[1][1];
        self.local(s, t)
    }
}

/// Amplitude `ζ` of an oscillatory integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// `η(ξ/N)` restricted to the torus `[−π, π]²`.
    LittlewoodPaley(BumpSpec),
    Localized(LocalBump),
}

impl Cutoff {
    pub fn value(&self, xi: [f64; 2]) -> f64 {
        match self {
            Cutoff::LittlewoodPaley(b) => {
                if xi[0].abs() > PI || xi[1].abs() > PI {
                    0.0
                } else {
                    eta(xi, b)
                }
            }
            Cutoff::Localized(b) => b.value(xi),
        }
    }

    /// Integration rectangle: center, axes and half-widths.
    fn rectangle(&self) -> ([f64; 2], [[f64; 2]; 2], [f64; 2]) {
        match self {
            Cutoff::LittlewoodPaley(b) => {
                let r = b.outer().min(PI);
                ([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], [r, r])
            }
            Cutoff::Localized(b) => (b.center, b.frame, b.radii),
        }
    }

    #[inline]
    fn at_local(&self, xi: [f64; 2], s: f64, t: f64) -> f64 {
        match self {
            Cutoff::LittlewoodPaley(_) => self.value(xi),
            Cutoff::Localized(b) => b.local(s, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Target absolute error of `J`.
    pub tol: f64,
    /// Largest number of grid points for one evaluation.
    pub budget: u64,
    /// Points per period of the fastest phase oscillation.
    pub points_per_period: f64,
    /// Least number of intervals across the support in each direction.
    pub min_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: 1e-7, budget: 1 << 26, points_per_period: 10.0, min_intervals: 64 }
    }
}

/// An evaluated oscillatory integral and its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JValue {
    pub value: Complex64,
    /// `|J_h − J_{2h}|`, the change against the grid with every other point.
    pub error: f64,
    pub points: u64,
    pub step: [f64; 2],
}

/// `J_{Φ_v,ζ}(τ)`; negative `τ` is allowed.
pub fn eval_j(phase: &PhaseSpec, cutoff: &Cutoff, tau: f64, opts: &QuadOptions) -> Result<JValue> {
    let lin = [tau * phase.v[0], tau * phase.v[1]];
    eval_general(phase.alpha, lin, tau, cutoff, opts)
}

/// `∫ e^{i(ℓ·ξ − s·w(ξ))} ζ(ξ) dξ` by tensor trapezoid on the support
/// rectangle. The step resolves the fastest oscillation with the requested
/// points per period and is halved until the error estimate meets `tol`.
pub(crate) fn eval_general(alpha: f64, lin: [f64; 2], s: f64, cutoff: &Cutoff, opts: &QuadOptions) -> Result<JValue> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    if !(s.is_finite() && lin[0].is_finite() && lin[1].is_finite()) {
        return Err(invalid("non-finite phase parameters"));
    }
    let (center, frame, half) = cutoff.rectangle();
    // Largest phase gradient over the support.
    let probe = 96;
    let mut g = 0.0f64;
    for i in 0..=probe {
        let a = -half[0] + 2.0 * half[0] * i as f64 / probe as f64;
        for j in 0..=probe {
            let b = -half[1] + 2.0 * half[1] * j as f64 / probe as f64;
            let xi = [center[0] + a * frame[0][0] + b * frame[1][0], center[1] + a * frame[0][1] + b * frame[1][1]];
            if cutoff.at_local(xi, a, b) == 0.0 {
                continue;
            }
            let gw = group_velocity(xi, alpha);
            g = g.max((lin[0] - s * gw[0]).hypot(lin[1] - s * gw[1]));
        }
    }
    let mut steps = [0.0; 2];
    let mut counts = [0usize; 2];
    for a in 0..2 {
        let side = 2.0 * half[a];
        let mut st = side / opts.min_intervals as f64;
        if g > 0.0 {
            st = st.min(2.0 * PI / (opts.points_per_period * g));
        }
        let mut m = (side / st).ceil() as usize;
        m += m % 2;
        counts[a] = m;
        steps[a] = side / m as f64;
    }
    loop {
        let needed = (counts[0] as u64 + 1) * (counts[1] as u64 + 1);
        if needed > opts.budget {
            return Err(Error::Budget { needed, budget: opts.budget });
        }
        let (fine, coarse) = trapezoid(alpha, lin, s, cutoff, center, frame, half, counts);
        let error = (fine - coarse).norm();
        if error <= opts.tol {
            return Ok(JValue { value: fine, error, points: needed, step: steps });
        }
        counts = [counts[0] * 2, counts[1] * 2];
        steps = [steps[0] / 2.0, steps[1] / 2.0];
    }
}

#[allow(clippy::too_many_arguments)]
fn trapezoid(
    alpha: f64,
    lin: [f64; 2],
    s: f64,
    cutoff: &Cutoff,
    center: [f64; 2],
    frame: [[f64; 2]; 2],
    half: [f64; 2],
    counts: [usize; 2],
) -> (Complex64, Complex64) {
    let (m0, m1) = (counts[0], counts[1]);
    let h0 = 2.0 * half[0] / m0 as f64;
    let h1 = 2.0 * half[1] / m1 as f64;
    let e = alpha / 2.0;
    let rows: Vec<(Complex64, Complex64)> = (0..=m0)
        .into_par_iter()
        .map(|i| {
            let a = -half[0] + h0 * i as f64;
            let wi = if i == 0 || i == m0 { 0.5 } else { 1.0 };
            let (mut fine, mut coarse) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for j in 0..=m1 {
                let b = -half[1] + h1 * j as f64;
                let xi = [center[0] + a * frame[0][0] + b * frame[1][0], center[1] + a * frame[0][1] + b * frame[1][1]];
                let z = cutoff.at_local(xi, a, b);
                if z == 0.0 {
                    continue;
                }
                let ph = lin[0] * xi[0] + lin[1] * xi[1] - s * base(xi).powf(e);
                let (sn, cs) = ph.sin_cos();
                let val = Complex64::new(cs, sn) * z;
                let wj = if j == 0 || j == m1 { 0.5 } else { 1.0 };
                fine += val * wj;
                if j % 2 == 0 {
                    coarse += val * wj;
                }
            }
            let coarse = if i % 2 == 0 { coarse * wi } else { Complex64::new(0.0, 0.0) };
            (fine * wi, coarse)
        })
        .collect();
    let mut fine = Complex64::new(0.0, 0.0);
    let mut coarse = Complex64::new(0.0, 0.0);
    for (f, c) in rows {
        fine += f;
        coarse += c;
    }
    (fine * (h0 * h1), coarse * (4.0 * h0 * h1))
}

/// `K_{t,N,h}(x) = (2πh)^{−2} J` with `τ = 2^α t/h^α`, `v = x/(hτ)` and
/// `ζ = η(·/N)`, evaluated at a lattice point `x ∈ hZ²`.
pub fn kernel_k(x: [f64; 2], t: f64, scale: f64, h: f64, alpha: f64, opts: &QuadOptions) -> Result<Complex64> {
    let b = BumpSpec::new(scale)?;
    if !(h > 0.0) {
        return Err(invalid("mesh size must be positive"));
    }
    let m = [x[0] / h, x[1] / h];
    if (m[0] - m[0].round()).abs() > 1e-9 || (m[1] - m[1].round()).abs() > 1e-9 {
        return Err(invalid(format!("({}, {}) is not a lattice point of mesh {h}", x[0], x[1])));
    }
    let tau = 2f64.powf(alpha) * t / h.powf(alpha);
    let j = eval_general(alpha, m, tau, &Cutoff::LittlewoodPaley(b), opts)?;
    Ok(j.value / (2.0 * PI * h).powi(2))
}

/// `sup_{m ∈ Z²} |∫_{T²} e^{i(m·ξ − s·w(ξ))} η(ξ/N) dξ|` and the maximizing
/// `m`, from one FFT on a grid wide enough to hold the light cone `|m| ≤ s·sup|∇w|`.
pub fn lp_sup(alpha: f64, scale: f64, s: f64) -> Result<(f64, [i64; 2])> {
    let b = BumpSpec::new(scale)?;
    let reach = s.abs() * max_group_speed(alpha);
    let need = (4.0 * reach + 64.0).max(10.0 * reach / PI + 64.0).ceil() as usize;
    let m = need.next_power_of_two();
    let grid = Grid::new(1.0, m)?;
    // Unit mesh in x, so the dual grid spans [−π, π) with spacing 2π/m.
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    coeffs.par_chunks_mut(m).enumerate().for_each(|(k1, row)| {
        let x1 = grid.freq(k1);
        for (k2, c) in row.iter_mut().enumerate() {
            let xi = [x1, grid.freq(k2)];
            let z = eta(xi, &b);
            if z != 0.0 {
                *c = Complex64::from_polar(z, -s * w(xi, alpha));
            }
        }
    });
    // The inverse transform returns m^{−2}Σ; the integral needs (2π/m)²Σ.
    let field = Dft::new(m).inverse(&SpectralField::new(grid, coeffs)?);
    let scale_out = (2.0 * PI).powi(2);
    let mut best = (0.0, [0i64, 0i64]);
    for (k, v) in field.values().iter().enumerate() {
        let a = v.norm() * scale_out;
        if a > best.0 {
            let site = grid.site(k);
            best = (a, [site[0].round() as i64, site[1].round() as i64]);
        }
    }
    Ok(best)
}

/// `sup_{x ∈ hZ²} |K_{t,N,h}(x)|` and the maximizing site.
pub fn kernel_sup(t: f64, scale: f64, h: f64, alpha: f64) -> Result<(f64, [f64; 2])> {
    let tau = 2f64.powf(alpha) * t / h.powf(alpha);
    let (v, m) = lp_sup(alpha, scale, tau)?;
    Ok((v / (2.0 * PI * h).powi(2), [m[0] as f64 * h, m[1] as f64 * h]))
}

/// Frequency band of a dyadic scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    /// Support meets only non-degenerate critical points.
    S1,
    /// Support meets fold points but no cusp.
    S2,
    /// Support meets the cusps `(±π/2, ±π/2)`.
    S3,
}

impl Band {
    /// Sharp decay rate of the band.
    pub fn sigma0(&self) -> f64 {
        match self {
            Band::S1 => 1.0,
            Band::S2 => 5.0 / 6.0,
            Band::S3 => 0.75,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Band::S1 => "S1",
            Band::S2 => "S2",
            Band::S3 => "S3",
        }
    }
}

/// `r_α = arccos((2−α)/α)`, the radius where the fold curve meets the axes.
pub fn r_alpha(alpha: f64) -> f64 {
    ((2.0 - alpha) / alpha).acos()
}

/// Largest dyadic `N` with `2πN < r_α`.
pub fn n_alpha(alpha: f64) -> f64 {
    let r = r_alpha(alpha);
    let mut k = (r / (2.0 * PI)).log2().floor() as i32;
    while 2.0 * PI * 2f64.powi(k) >= r {
        k -= 1;
    }
    while 2.0 * PI * 2f64.powi(k + 1) < r {
        k += 1;
    }
    2f64.powi(k)
}

/// Band of the dyadic scale `N ≤ 1` for `α ∈ (1, 2]`.
pub fn band_classify(scale: f64, alpha: f64) -> Result<Band> {
    BumpSpec::new(scale)?;
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(invalid(format!("band classification needs alpha in (1, 2], got {alpha}")));
    }
    if scale == 1.0 || scale == 0.5 {
        return Ok(Band::S3);
    }
    let r = r_alpha(alpha);
    if scale >= r / (2.0 * PI) && scale <= 2.0 * 2f64.sqrt() * r / PI {
        return Ok(Band::S2);
    }
    Ok(Band::S1)
}

/// How the `τ` samples of a scan are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum TauWindow {
    Fixed(Vec<f64>),
    /// `τ_k = base/d²·2^k` for `k < count`, where `d` is the distance to the
    /// nearest other critical point of the phase.
    Isolation { base: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub alpha: f64,
    pub band: Band,
    /// Dyadic scale `N` the representative point stands for.
    pub scale: f64,
    pub point: CriticalPoint,
    pub bump: LocalBump,
    /// `(τ, |J(τ)|)`.
    pub samples: Vec<(f64, f64)>,
    /// Geometric mean of `|J|τ^{σ₀}` over the samples.
    pub prefactor: f64,
    /// `prefactor·N^{σ₀α−2}`, the band constant normalized by its scale.
    pub constant: f64,
    /// Free-slope fit of the samples.
    pub fit: DecayFit,
    /// Modulus of the leading coefficient predicted at the point.
    pub d0: f64,
}

/// Representative critical point of a band and the scale it stands for: the
/// cusp `(π/2, π/2)` at `N = 1` for S3, the diagonal fold `(r_α, r_α)` at the
/// dyadic nearest `|ξ|/π` for S2, and the diagonal point with `|ξ| = N_απ` at
/// `N = N_α` for S1.
pub fn representative_point(band: Band, alpha: f64) -> Result<(CriticalPoint, f64)> {
    let (xi, scale) = match band {
        Band::S3 => ([PI / 2.0, PI / 2.0], 1.0),
        Band::S2 => {
            let r = r_alpha(alpha);
            ([r, r], 2f64.powi((2f64.sqrt() * r / PI).log2().round() as i32))
        }
        Band::S1 => {
            let n = n_alpha(alpha);
            let c = n * PI / 2f64.sqrt();
            ([c, c], n)
        }
    };
    Ok((manifold::classify(xi, alpha)?, scale))
}

/// For each `α`: `|J|` at the band's representative point with an isolating
/// bump, the decay fit, and the prefactor `|J|τ^{σ₀}` to compare with the
/// predicted blow-up laws.
pub fn constant_scan(alphas: &[f64], band: Band, window: &TauWindow, opts: &QuadOptions) -> Result<Vec<ScanRow>> {
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let (point, scale) = representative_point(band, alpha)?;
        let iso = manifold::isolating_bump(&point)?;
        let taus: Vec<f64> = match window {
            TauWindow::Fixed(t) => t.clone(),
            TauWindow::Isolation { base, count } => {
                let t0 = base / (iso.distance * iso.distance);
                (0..*count).map(|k| t0 * 2f64.powi(k as i32)).collect()
            }
        };
        let phase = PhaseSpec::stationary_at(alpha, point.xi)?;
        let cutoff = Cutoff::Localized(iso.bump);
        let samples = taus
            .iter()
            .map(|&t| Ok((t, eval_j(&phase, &cutoff, t, opts)?.value.norm())))
            .collect::<Result<Vec<_>>>()?;
        let s0 = point.sigma0;
        let prefactor = (samples.iter().map(|(t, j)| (j * t.powf(s0)).ln()).sum::<f64>() / samples.len() as f64).exp();
        let constant = prefactor * scale.powf(s0 * alpha - 2.0);
        let fit = fit_power_law(&samples)?;
        let d0 = manifold::leading_d0(&point, 1.0)?.norm();
        rows.push(ScanRow { alpha, band, scale, point, bump: iso.bump, samples, prefactor, constant, fit, d0 });
    }
    Ok(rows)
}

/// Polar-coordinate phase of the small-scale regime, with `x = r(cos θ, sin θ)`
/// and `z = ρ(cos φ, sin φ)`.
pub mod polar {
    use std::f64::consts::PI;

    use crate::error::{invalid, Result};

    /// `Φ_G(φ) = (2/(ρN))(cos θ·asin(Nρ cos φ/2) + sin θ·asin(Nρ sin φ/2))`.
    pub fn phase(rho: f64, phi: f64, theta: f64, n: f64) -> f64 {
        let a = n * rho / 2.0;
        2.0 / (rho * n) * (theta.cos() * (a * phi.cos()).asin() + theta.sin() * (a * phi.sin()).asin())
    }

    pub fn d_phase(rho: f64, phi: f64, theta: f64, n: f64) -> f64 {
        let a = n * rho / 2.0;
        let (s, c) = phi.sin_cos();
        -theta.cos() * s / (1.0 - (a * c).powi(2)).sqrt() + theta.sin() * c / (1.0 - (a * s).powi(2)).sqrt()
    }

    pub fn d2_phase(rho: f64, phi: f64, theta: f64, n: f64) -> f64 {
        let a = n * rho / 2.0;
        let (s, c) = phi.sin_cos();
        -(1.0 - a * a)
            * (theta.cos() * c / (1.0 - (a * c).powi(2)).powf(1.5) + theta.sin() * s / (1.0 - (a * s).powi(2)).powf(1.5))
    }

    /// `g(ρ, φ) = ((1 − (Nρ sin φ/2)²)/(1 − (Nρ cos φ/2)²))^{1/2}`.
    pub fn g(rho: f64, phi: f64, n: f64) -> f64 {
        let a = n * rho / 2.0;
        ((1.0 - (a * phi.sin()).powi(2)) / (1.0 - (a * phi.cos()).powi(2))).sqrt()
    }

    /// The critical angle `φ₊ ∈ [0, π/2]` solving `g(ρ, φ) tan φ = tan θ` for
    /// `θ ∈ [0, π/2]`, by bisection on `g sin φ cos θ − cos φ sin θ`.
    pub fn critical_angle(rho: f64, theta: f64, n: f64) -> Result<f64> {
        if !(0.0..=PI / 2.0).contains(&theta) {
            return Err(invalid(format!("theta must lie in [0, pi/2], got {theta}")));
        }
        if !(n * rho / 2.0 < 1.0 / 2f64.sqrt() + 1e-12) {
            return Err(invalid("N*rho/2 must stay below 1/sqrt(2)"));
        }
        let f = |phi: f64| g(rho, phi, n) * phi.sin() * theta.cos() - phi.cos() * theta.sin();
        let (mut lo, mut hi) = (0.0f64, PI / 2.0);
        if f(lo) >= 0.0 {
            return Ok(lo);
        }
        if f(hi) <= 0.0 {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `∂_ρ φ₊` by implicit differentiation of `g(ρ, φ) tan φ = tan θ`.
    pub fn d_rho_critical_angle(rho: f64, phi: f64, n: f64) -> f64 {
        let nr2 = (n * rho).powi(2);
        -n * n * rho * (4.0 * phi).sin() / ((1.0 - nr2 / 4.0) * (16.0 - nr2 * (1.0 - (4.0 * phi).cos())))
    }

    /// `∂_φ(g tan φ)` at `φ = π/4`, equal to `4 − 16/(8 − N²ρ²)`.
    pub fn slope_at_diagonal(rho: f64, n: f64) -> f64 {
        4.0 - 16.0 / (8.0 - (n * rho).powi(2))
    }
}
