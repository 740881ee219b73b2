//! Cell-average discretization `d_h`, piecewise-linear interpolation `p_h`,
//! and continuum-side L² errors.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::{Dft, Grid, LatticeField, SpectralField};
use crate::special::gauss_legendre_unit;

type Evaluator = dyn Fn([f64; 2]) -> Complex64 + Send + Sync;

/// A function on the plane together with its claimed Sobolev regularity.
#[derive(Clone)]
pub struct ContinuumFunction {
    eval: Arc<Evaluator>,
    /// Sobolev index reported alongside results; not used numerically.
    pub smoothness: f64,
}

impl fmt::Debug for ContinuumFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumFunction").field("smoothness", &self.smoothness).finish()
    }
}

impl ContinuumFunction {
    pub fn new(smoothness: f64, eval: impl Fn([f64; 2]) -> Complex64 + Send + Sync + 'static) -> Self {
        ContinuumFunction { eval: Arc::new(eval), smoothness }
    }

    /// `A·e^{−|x|² + i x·k}`.
    pub fn gaussian(amplitude: f64, k: [f64; 2]) -> Self {
        Self::new(f64::INFINITY, move |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            Complex64::from_polar(amplitude * (-r2).exp(), x[0] * k[0] + x[1] * k[1])
        })
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(f64::INFINITY, move |_| c)
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        (self.eval)(x)
    }
}

/// Point values of `u` at the grid sites.
pub fn sample(u: &ContinuumFunction, grid: Grid) -> LatticeField {
    let n = grid.n();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = u.eval([grid.coord(i), grid.coord(j)]);
        }
    });
    LatticeField::new(grid, values).expect("sampled values have the grid size")
}

/// `d_h u(x) = h^{−2}∫_{x+[0,h)²} u`, by tensor Gauss-Legendre of the given
/// order in each cell.
pub fn discretize_dh(u: &ContinuumFunction, grid: Grid, quad_order: usize) -> Result<LatticeField> {
    if quad_order < 2 {
        return Err(invalid(format!("cell quadrature order must be at least 2, got {quad_order}")));
    }
    let (nodes, weights) = gauss_legendre_unit(quad_order);
    let h = grid.h();
    let n = grid.n();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x0 = grid.coord(i);
        for (j, v) in row.iter_mut().enumerate() {
            let y0 = grid.coord(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, ws) in nodes.iter().zip(&weights) {
                for (t, wt) in nodes.iter().zip(&weights) {
                    acc += u.eval([x0 + s * h, y0 + t * h]) * (ws * wt);
                }
            }
            *v = acc;
        }
    });
    LatticeField::new(grid, values)
}

/// `p_h f(x) = f(x′) + D⁺_h f(x′)·(x − x′)` on each cell `x′ + [0,h)²`, with
/// periodic forward differences at the box edge.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearInterpolant {
    field: LatticeField,
    diff: [Vec<Complex64>; 2],
}

impl PiecewiseLinearInterpolant {
    pub fn field(&self) -> &LatticeField {
        &self.field
    }

    /// Forward differences `D⁺_h f` along each axis.
    pub fn differences(&self) -> &[Vec<Complex64>; 2] {
        &self.diff
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        let g = self.field.grid();
        let (idx, off) = g.locate(x);
        let k = idx[0] * g.n() + idx[1];
        self.field.values()[k] + self.diff[0][k] * off[0] + self.diff[1][k] * off[1]
    }

    /// Value at cell `k` and in-cell offset `s`.
    fn at_offset(&self, k: usize, s: [f64; 2]) -> Complex64 {
        self.field.values()[k] + self.diff[0][k] * s[0] + self.diff[1][k] * s[1]
    }
}

pub fn interpolate_ph(f: &LatticeField) -> PiecewiseLinearInterpolant {
    let g = *f.grid();
    let n = g.n();
    let h = g.h();
    let v = f.values();
    let mut d0 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut d1 = vec![Complex64::new(0.0, 0.0); g.len()];
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            d0[k] = (v[((i + 1) % n) * n + j] - v[k]) / h;
            d1[k] = (v[i * n + (j + 1) % n] - v[k]) / h;
        }
    }
    PiecewiseLinearInterpolant { field: f.clone(), diff: [d0, d1] }
}

/// `‖a − u‖_{L²(box)}` by per-cell tensor Gauss-Legendre.
pub fn continuum_l2_error(a: &PiecewiseLinearInterpolant, u: &ContinuumFunction, quad_order: usize) -> Result<f64> {
    if quad_order < 1 {
        return Err(invalid("quadrature order must be positive"));
    }
    let g = *a.field.grid();
    let (nodes, weights) = gauss_legendre_unit(quad_order);
    let h = g.h();
    let n = g.n();
    let sum: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                let k = i * n + j;
                let base = [g.coord(i), g.coord(j)];
                for (s, ws) in nodes.iter().zip(&weights) {
                    for (t, wt) in nodes.iter().zip(&weights) {
                        let off = [s * h, t * h];
                        let d = a.at_offset(k, off) - u.eval([base[0] + off[0], base[1] + off[1]]);
                        acc += ws * wt * d.norm_sqr();
                    }
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok((sum * h * h).sqrt())
}

/// `‖a − u‖_{L²(box)}` where `u` is the trigonometric interpolant of the
/// spectrum `reference` (same box, any resolution). The Gauss nodes of all
/// cells form shifted copies of the coarse lattice, so `u` is evaluated
/// exactly there by a phase shift followed by folding or zero padding onto
/// the coarse dual grid and one inverse transform per node.
pub fn spectral_l2_error(a: &PiecewiseLinearInterpolant, reference: &SpectralField, quad_order: usize) -> Result<f64> {
    let g = *a.field.grid();
    let rg = *reference.grid();
    if (g.side() - rg.side()).abs() > 1e-12 * g.side() {
        return Err(invalid(format!(
            "boxes differ: lattice side {} vs reference side {}",
            g.side(),
            rg.side()
        )));
    }
    let (nodes, weights) = gauss_legendre_unit(quad_order);
    let (n, nr) = (g.n(), rg.n());
    let h = g.h();
    let dft = Dft::new(n);
    let mut total = 0.0;
    let mut buf = vec![Complex64::new(0.0, 0.0); g.len()];
    for (s, ws) in nodes.iter().zip(&weights) {
        for (t, wt) in nodes.iter().zip(&weights) {
            let shift = [s * h, t * h];
            // Coarse centered spectrum of u(· + shift).
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for k1 in 0..nr {
                let xi1 = rg.freq(k1);
                let c1 = coarse_index(k1, nr, n);
                for k2 in 0..nr {
                    let xi2 = rg.freq(k2);
                    let c2 = coarse_index(k2, nr, n);
                    let phase = Complex64::from_polar(1.0, xi1 * shift[0] + xi2 * shift[1]);
                    buf[c1 * n + c2] += reference.at(k1, k2) * phase;
                }
            }
            let spec = SpectralField::new(g, std::mem::take(&mut buf))?;
            let vals = dft.inverse(&spec);
            let mut acc = 0.0;
            for (k, u) in vals.values().iter().enumerate() {
                acc += (a.at_offset(k, shift) - u).norm_sqr();
            }
            total += ws * wt * acc;
            buf = vals.into_values();
        }
    }
    Ok((total * h * h).sqrt())
}

/// Centered index on an `n`-point dual grid of the frequency with centered
/// index `k` on an `nr`-point dual grid of the same box; aliases when `n < nr`.
fn coarse_index(k: usize, nr: usize, n: usize) -> usize {
    let m = k as i64 - (nr / 2) as i64;
    (m + (n / 2) as i64).rem_euclid(n as i64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_power_law;
    use crate::lattice::{forward_dft, sobolev_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn gauss() -> ContinuumFunction {
        ContinuumFunction::gaussian(1.0, [0.0, 0.0])
    }

    #[test]
    fn constants_and_linear_functions() {
        let g = Grid::new(0.25, 8).unwrap();
        let c = Complex64::new(1.5, -0.5);
        let f = discretize_dh(&ContinuumFunction::constant(c), g, 2).unwrap();
        assert!(f.values().iter().all(|v| (v - c).norm() < 1e-15));
        let lin = ContinuumFunction::new(1.0, |x| Complex64::new(x[0], 0.0));
        let f = discretize_dh(&lin, g, 2).unwrap();
        for (k, v) in f.values().iter().enumerate() {
            assert!((v.re - (g.site(k)[0] + 0.125)).abs() < 1e-14);
        }
        assert!(discretize_dh(&lin, g, 1).is_err());
    }

    #[test]
    fn gaussian_cell_averages_converge_in_order() {
        let g = Grid::new(0.125, 64).unwrap();
        let lo = discretize_dh(&gauss(), g, 4).unwrap();
        let hi = discretize_dh(&gauss(), g, 8).unwrap();
        let err = lo.values().iter().zip(hi.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn interpolant_reproduces_sites_and_linears() {
        let g = Grid::new(0.25, 16).unwrap();
        let c = Complex64::new(0.3, 0.7);
        let p = interpolate_ph(&LatticeField::from_fn(g, |_| c));
        assert!((p.eval([0.13, -1.71]) - c).norm() == 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = LatticeField::from_fn(g, |_| Complex64::new(rng.gen(), rng.gen()));
        let p = interpolate_ph(&f);
        let worst = (0..g.len()).map(|k| (p.eval(g.site(k)) - f.values()[k]).norm()).fold(0.0, f64::max);
        assert_eq!(worst, 0.0);

        let lin = sample(&ContinuumFunction::new(1.0, |x| Complex64::new(x[0], 0.0)), g);
        let p = interpolate_ph(&lin);
        for &x in &[[0.1, 0.3], [-1.3, 0.77], [1.6, -1.9]] {
            assert!((p.eval(x).re - x[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_function_has_zero_error() {
        let g = Grid::new(0.25, 8).unwrap();
        let zero = ContinuumFunction::constant(Complex64::new(0.0, 0.0));
        let p = interpolate_ph(&discretize_dh(&zero, g, 4).unwrap());
        assert_eq!(continuum_l2_error(&p, &zero, 4).unwrap(), 0.0);
    }

    #[test]
    fn l2_error_matches_monte_carlo() {
        let g = Grid::new(1.0 / 32.0, 256).unwrap();
        let u = gauss();
        let p = interpolate_ph(&discretize_dh(&u, g, 4).unwrap());
        let e = continuum_l2_error(&p, &u, 4).unwrap();
        let l = g.side();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let m = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let x = [rng.gen_range(-l / 2.0..l / 2.0), rng.gen_range(-l / 2.0..l / 2.0)];
            let d = (p.eval(x) - u.eval(x)).norm_sqr();
            s1 += d;
            s2 += d * d;
        }
        let mean = s1 / m as f64;
        let sd = ((s2 / m as f64 - mean * mean) / m as f64).sqrt();
        let (est, sd) = (mean * l * l, sd * l * l);
        assert!((e * e - est).abs() <= 3.0 * sd, "{} vs {} ± {}", e * e, est, sd);
    }

    fn composition_errors(u: &ContinuumFunction, quad: usize) -> Vec<(f64, f64)> {
        (3..=7)
            .map(|k| {
                let h = 2f64.powi(-k);
                let g = Grid::new(h, (8.0 / h) as usize).unwrap();
                let p = interpolate_ph(&discretize_dh(u, g, quad).unwrap());
                (h, continuum_l2_error(&p, u, quad).unwrap())
            })
            .collect()
    }

    #[test]
    fn composition_error_rates() {
        let errs = composition_errors(&gauss(), 4);
        assert!(errs.windows(2).all(|w| w[1].1 < w[0].1));
        let fit = fit_power_law(&errs).unwrap();
        assert!(fit.slope >= 0.9, "smooth data slope {}", fit.slope);

        // A disk indicator sits just below H^{1/2}.
        let disk = ContinuumFunction::new(0.5, |x| Complex64::new(if x[0].hypot(x[1]) < 1.3 { 1.0 } else { 0.0 }, 0.0));
        let fit = fit_power_law(&composition_errors(&disk, 6)).unwrap();
        assert!(fit.slope >= 0.4, "rough data slope {}", fit.slope);
    }

    #[test]
    fn discretization_is_bounded_in_sobolev_norms() {
        // ‖e^{−|x|²}‖²_{H^β} = (π/2)∫_0^∞ (1 + r²)^β e^{−r²/2} r dr, done by
        // the substitution q = r²/2 and a Gauss rule on a truncated range.
        let exact = |beta: f64| {
            let (x, w) = gauss_legendre_unit(40);
            let mut s = 0.0;
            for seg in 0..10 {
                for (x, w) in x.iter().zip(&w) {
                    let q = 4.0 * (seg as f64 + x);
                    s += 4.0 * w * (1.0 + 2.0 * q).powf(beta) * (-q).exp();
                }
            }
            (PI / 2.0 * s).sqrt()
        };
        assert!((exact(1.0) - (1.5 * PI).sqrt()).abs() < 1e-12);
        for beta in [0.5, 1.0] {
            let ratios: Vec<(f64, f64)> = (3..=7)
                .map(|k| {
                    let h = 2f64.powi(-k);
                    let g = Grid::new(h, (8.0 / h) as usize).unwrap();
                    let f = discretize_dh(&gauss(), g, 4).unwrap();
                    (h, sobolev_norm(&f, beta) / exact(beta))
                })
                .collect();
            assert!(ratios.iter().all(|r| r.1 < 1.0 + 1e-9));
            let slope = fit_power_law(&ratios).unwrap().slope;
            assert!(slope.abs() <= 0.05, "beta {beta}: slope {slope}");
        }
    }

    #[test]
    fn spectral_error_matches_cell_quadrature() {
        let u = ContinuumFunction::gaussian(1.0, [1.0, -0.5]);
        let l = 8.0;
        let fine = Grid::new(l / 128.0, 128).unwrap();
        let reference = forward_dft(&sample(&u, fine));
        for n in [32usize, 64, 256] {
            let g = Grid::new(l / n as f64, n).unwrap();
            let p = interpolate_ph(&discretize_dh(&u, g, 4).unwrap());
            let a = spectral_l2_error(&p, &reference, 4).unwrap();
            let b = continuum_l2_error(&p, &u, 4).unwrap();
            assert!((a - b).abs() < 1e-9 * (1.0 + b) + 1e-12, "n={n}: {a} vs {b}");
        }
    }
}
