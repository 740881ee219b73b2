//! The degenerate set `E_α` of the dispersion `w`: curve parametrizations in
//! the variables `(a, b) = (cos ξ₁, cos ξ₂)`, the Hessian and its null
//! direction, transverse third derivatives, Newton-diagram normal forms and
//! leading asymptotic coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_decay, fit_power_law, DecayFit};
use crate::oscillatory::{eval_j, group_velocity, Cutoff, LocalBump, PhaseSpec, QuadOptions};
use crate::special::{beta, gamma};

/// `h(a, b) = αab(a+b) − 4ab + (2−α)(a+b)`; `det D²w` vanishes exactly where `h` does.
pub fn h_poly(a: f64, b: f64, alpha: f64) -> f64 {
    // Products and sums are grouped symmetrically so that h(a,b) == h(b,a) bitwise.
    let p = a * b;
    let s = a + b;
    alpha * p * s - 4.0 * p + (2.0 - alpha) * s
}

/// Branch of `E_α` in the `(a, b)` square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `b = B_P(a)` for `a ∈ [−1, 0)`, through `(0, 0)`.
    Gamma1,
    /// `b = B(a)` for `a ∈ [(2−α)/α, 1]`.
    Gamma2,
}

impl Branch {
    pub fn domain(&self, alpha: f64) -> (f64, f64) {
        match self {
            Branch::Gamma1 => (-1.0, 0.0),
            Branch::Gamma2 => ((2.0 - alpha) / alpha, 1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Branch::Gamma1 => "gamma1",
            Branch::Gamma2 => "gamma2",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (1, 2), got {alpha}")))
    }
}

/// Root of `h(a, ·) = 0` of smaller modulus, from the cancellation-free form
/// of the quadratic formula.
fn small_root(a: f64, alpha: f64) -> Result<f64> {
    let qa = alpha * a;
    let qb = alpha * a * a - 4.0 * a + 2.0 - alpha;
    let qc = (2.0 - alpha) * a;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Err(Error::Numerical(format!("negative discriminant {disc} at a = {a}")));
    }
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    Ok(qc / q)
}

/// `B_P(a)` on `[−1, 0)`.
pub fn curve_bp(a: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(-1.0..0.0).contains(&a) {
        return Err(invalid(format!("B_P is defined for a in [-1, 0), got {a}")));
    }
    small_root(a, alpha)
}

/// `B(a)` on `[(2−α)/α, 1]`.
pub fn curve_b(a: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let lo = (2.0 - alpha) / alpha;
    if !(a >= lo && a <= 1.0) {
        return Err(invalid(format!("B is defined for a in [{lo}, 1], got {a}")));
    }
    if a == 1.0 {
        return Ok(lo);
    }
    small_root(a, alpha)
}

/// Minimizer `a_m = ((2−α)/α)^{1/2}` of `B`. The branch meets the diagonal at
/// `a = b = (2−α)/α`.
pub fn a_min(alpha: f64) -> f64 {
    ((2.0 - alpha) / alpha).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub alpha: f64,
    pub branch: Branch,
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

impl CurveSample {
    /// The frequency `(arccos a, arccos b)` in `[0, π]²`.
    pub fn xi(&self) -> [f64; 2] {
        [self.a.acos(), self.b.acos()]
    }
}

/// Curve samples at Chebyshev-Gauss nodes of the branch domain.
pub fn sample_curve(branch: Branch, alpha: f64, count: usize) -> Result<Vec<CurveSample>> {
    check_alpha(alpha)?;
    if count == 0 {
        return Err(invalid("need at least one curve sample"));
    }
    let (lo, hi) = branch.domain(alpha);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    (0..count)
        .map(|k| {
            let a = mid - half * ((2 * k + 1) as f64 * PI / (2 * count) as f64).cos();
            let b = match branch {
                Branch::Gamma1 => curve_bp(a, alpha)?,
                Branch::Gamma2 => curve_b(a, alpha)?,
            };
            Ok(CurveSample { alpha, branch, a, b, residual: h_poly(a, b, alpha).abs() })
        })
        .collect()
}

type Mat2 = [[f64; 2]; 2];

#[inline]
fn base(xi: [f64; 2]) -> f64 {
    0.5 * (2.0 - xi[0].cos() - xi[1].cos())
}

fn check_point(xi: [f64; 2]) -> Result<f64> {
    let b = base(xi);
    if !(b > 1e-14) {
        return Err(invalid(format!("({}, {}) is the origin of the torus, where D^2 w blows up", xi[0], xi[1])));
    }
    Ok(b)
}

/// The polynomial matrix `M` with `D²w = −α/(16 w^{4/α−1})·M`.
fn m_matrix(xi: [f64; 2], alpha: f64) -> Mat2 {
    let (s1, a) = xi[0].sin_cos();
    let (s2, b) = xi[1].sin_cos();
    let m11 = alpha * a * a + 2.0 * (b - 2.0) * a + 2.0 - alpha;
    let m22 = alpha * b * b + 2.0 * (a - 2.0) * b + 2.0 - alpha;
    let m12 = (2.0 - alpha) * s1 * s2;
    [[m11, m12], [m12, m22]]
}

/// Closed-form Hessian of `w`.
pub fn hessian_w(xi: [f64; 2], alpha: f64) -> Result<Mat2> {
    let b = check_point(xi)?;
    let m = m_matrix(xi, alpha);
    let f = -alpha / 16.0 * b.powf(alpha / 2.0 - 2.0);
    Ok([[f * m[0][0], f * m[0][1]], [f * m[1][0], f * m[1][1]]])
}

/// `h̃ = α²/(128 w^{8/α−2})·(a + b − 2)`, so that `det D²w = h̃·h`.
pub fn h_tilde(xi: [f64; 2], alpha: f64) -> Result<f64> {
    let b = check_point(xi)?;
    Ok(alpha * alpha / 128.0 * b.powf(alpha - 4.0) * (xi[0].cos() + xi[1].cos() - 2.0))
}

/// `h` evaluated at `(cos ξ₁, cos ξ₂)`.
pub fn h_at(xi: [f64; 2], alpha: f64) -> f64 {
    h_poly(xi[0].cos(), xi[1].cos(), alpha)
}

/// Unit null direction `k₂` of `D²w` at a point of `E_α`.
pub fn degenerate_direction(xi: [f64; 2], alpha: f64) -> Result<[f64; 2]> {
    check_point(xi)?;
    let r = h_at(xi, alpha);
    if r.abs() > 1e-8 {
        return Err(invalid(format!("point is not on the degenerate set (|h| = {r:e})")));
    }
    let m = m_matrix(xi, alpha);
    let c1 = [-m[0][1], m[0][0]];
    let c2 = [m[1][1], -m[0][1]];
    let (n1, n2) = (c1[0].hypot(c1[1]), c2[0].hypot(c2[1]));
    let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
    if n < 1e-12 {
        return Err(Error::Numerical("both null-vector candidates vanish".into()));
    }
    let mut k = [v[0] / n, v[1] / n];
    if k[1] < 0.0 || (k[1] == 0.0 && k[0] < 0.0) {
        k = [-k[0], -k[1]];
    }
    Ok(k)
}

fn quad_form(m: &Mat2, u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * (m[0][0] * v[0] + m[0][1] * v[1]) + u[1] * (m[1][0] * v[0] + m[1][1] * v[1])
}

/// `∂_y³w = h̃·∂_y h / Tr D²w` along the null direction, for folds.
pub fn d3_formula(xi: [f64; 2], alpha: f64) -> Result<f64> {
    let k2 = degenerate_direction(xi, alpha)?;
    if is_cusp(xi) {
        return Err(invalid("the third-derivative formula excludes the cusps"));
    }
    let d2 = hessian_w(xi, alpha)?;
    let tr = d2[0][0] + d2[1][1];
    if tr.abs() < 1e-12 {
        return Err(Error::Numerical(format!("trace of the Hessian is {tr:e}")));
    }
    let (s1, a) = xi[0].sin_cos();
    let (s2, b) = xi[1].sin_cos();
    let ha = alpha * (2.0 * a * b + b * b) - 4.0 * b + (2.0 - alpha);
    let hb = alpha * (2.0 * a * b + a * a) - 4.0 * a + (2.0 - alpha);
    let dyh = -s1 * ha * k2[0] - s2 * hb * k2[1];
    Ok(h_tilde(xi, alpha)? * dyh / tr)
}

/// `j`-th derivative of `s ↦ w(ξ + s·dir)` at 0 for `j ∈ {2, 3, 4}` by central
/// differences with one Richardson level.
pub fn directional_fd(xi: [f64; 2], alpha: f64, dir: [f64; 2], order: u32, step: f64) -> Result<f64> {
    check_point(xi)?;
    let f = |s: f64| crate::oscillatory::w([xi[0] + s * dir[0], xi[1] + s * dir[1]], alpha);
    let d = |h: f64| -> f64 {
        match order {
            2 => (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h),
            3 => {
                (-f(3.0 * h) + 8.0 * f(2.0 * h) - 13.0 * f(h) + 13.0 * f(-h) - 8.0 * f(-2.0 * h) + f(-3.0 * h))
                    / (8.0 * h * h * h)
            }
            _ => {
                (-f(3.0 * h) + 12.0 * f(2.0 * h) - 39.0 * f(h) + 56.0 * f(0.0) - 39.0 * f(-h) + 12.0 * f(-2.0 * h)
                    - f(-3.0 * h))
                    / (6.0 * h.powi(4))
            }
        }
    };
    if !(2..=4).contains(&order) {
        return Err(invalid(format!("directional derivatives of order {order} are not supported")));
    }
    Ok((16.0 * d(step / 2.0) - d(step)) / 15.0)
}

/// `∂_y³w` along the null direction by finite differences, step `1e−2`
/// (`5e−3` near the cusps).
pub fn d3_fd(xi: [f64; 2], alpha: f64) -> Result<f64> {
    let k2 = degenerate_direction(xi, alpha)?;
    let near = xi[0].cos().abs() < 0.05 && xi[1].cos().abs() < 0.05;
    directional_fd(xi, alpha, k2, 3, if near { 5e-3 } else { 1e-2 })
}

fn is_cusp(xi: [f64; 2]) -> bool {
    xi[0].cos().abs() < 1e-9 && xi[1].cos().abs() < 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    /// Non-degenerate Hessian.
    K1,
    /// Fold: rank-one Hessian with non-vanishing transverse third derivative.
    K2,
    /// Cusp at `(±π/2, ±π/2)`.
    K3,
}

impl PointClass {
    pub fn sigma0(&self) -> f64 {
        match self {
            PointClass::K1 => 1.0,
            PointClass::K2 => 5.0 / 6.0,
            PointClass::K3 => 0.75,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PointClass::K1 => "K1",
            PointClass::K2 => "K2",
            PointClass::K3 => "K3",
        }
    }
}

/// `coeff·x^px·y^py` in the adapted frame `(x, y)` along `(k₁, k₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub px: u32,
    pub py: u32,
    pub coeff: f64,
}

/// Principal part of `Φ_v(ξ* + x k₁ + y k₂) − Φ_v(ξ*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub monomials: Vec<Monomial>,
    /// Distance where the bisectrix meets the Newton diagram.
    pub newton_distance: f64,
    pub sigma0: f64,
}

/// Bisectrix distance of the Newton polygon spanned by the exponents.
pub fn newton_distance(exponents: &[(u32, u32)]) -> Result<f64> {
    if exponents.is_empty() {
        return Err(invalid("empty Newton polygon"));
    }
    let mut best = f64::INFINITY;
    for (i, &(p1, q1)) in exponents.iter().enumerate() {
        let (p1, q1) = (p1 as f64, q1 as f64);
        best = best.min(p1.max(q1));
        for &(p2, q2) in &exponents[i + 1..] {
            let (p2, q2) = (p2 as f64, q2 as f64);
            // λ(p1, q1) + (1−λ)(p2, q2) on the diagonal.
            let den = (p1 - q1) - (p2 - q2);
            if den != 0.0 {
                let lam = (q2 - p2) / den;
                if (0.0..=1.0).contains(&lam) {
                    best = best.min(lam * p1 + (1.0 - lam) * p2);
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub xi: [f64; 2],
    pub alpha: f64,
    /// `(cos ξ₁, cos ξ₂)`.
    pub ab: [f64; 2],
    pub class: PointClass,
    pub hessian: Mat2,
    /// Adapted frame: `k₂` is the null direction for degenerate points, the
    /// eigenvectors of the Hessian otherwise.
    pub frame: [[f64; 2]; 2],
    /// `∂_y³w` at folds.
    pub d3: Option<f64>,
    pub normal_form: NormalForm,
    pub sigma0: f64,
    /// Leading coefficient for a cutoff equal to 1 at the point.
    pub d0: Complex64,
}

impl CriticalPoint {
    pub fn k2(&self) -> [f64; 2] {
        self.frame[1]
    }
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn sym_eigen(m: &Mat2) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let l = [mean + rad, mean - rad];
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    (l, [[co, s], [-s, co]])
}

/// Classify `ξ` as a critical point of `Φ_v` with `v = ∇w(ξ)`.
pub fn classify(xi: [f64; 2], alpha: f64) -> Result<CriticalPoint> {
    check_alpha(alpha)?;
    let xi = [wrap(xi[0]), wrap(xi[1])];
    let hessian = hessian_w(xi, alpha)?;
    let ab = [xi[0].cos(), xi[1].cos()];
    let degenerate = h_poly(ab[0], ab[1], alpha).abs() <= 1e-9;
    let (class, frame, d3) = if !degenerate {
        let (_, vecs) = sym_eigen(&hessian);
        (PointClass::K1, vecs, None)
    } else {
        let k2 = degenerate_direction(xi, alpha)?;
        let k1 = [k2[1], -k2[0]];
        if is_cusp(xi) {
            (PointClass::K3, [k1, k2], None)
        } else {
            (PointClass::K2, [k1, k2], Some(d3_formula(xi, alpha)?))
        }
    };
    let monomials = match class {
        PointClass::K1 => {
            let l1 = quad_form(&hessian, frame[0], frame[0]);
            let l2 = quad_form(&hessian, frame[1], frame[1]);
            vec![Monomial { px: 2, py: 0, coeff: -0.5 * l1 }, Monomial { px: 0, py: 2, coeff: -0.5 * l2 }]
        }
        PointClass::K2 => {
            let tr = hessian[0][0] + hessian[1][1];
            vec![
                Monomial { px: 2, py: 0, coeff: -0.5 * tr },
                Monomial { px: 0, py: 3, coeff: -d3.unwrap_or(0.0) / 6.0 },
            ]
        }
        PointClass::K3 => {
            let a = quad_form(&hessian, frame[0], frame[0]);
            let mixed = d_xyy(xi, alpha, frame)?;
            vec![Monomial { px: 2, py: 0, coeff: -0.5 * a }, Monomial { px: 1, py: 2, coeff: -0.5 * mixed }]
        }
    };
    let exps: Vec<(u32, u32)> = monomials.iter().map(|m| (m.px, m.py)).collect();
    let dist = newton_distance(&exps)?;
    let normal_form = NormalForm { monomials, newton_distance: dist, sigma0: 1.0 / dist };
    let mut point = CriticalPoint {
        xi,
        alpha,
        ab,
        class,
        hessian,
        frame,
        d3,
        sigma0: class.sigma0(),
        normal_form,
        d0: Complex64::new(0.0, 0.0),
    };
    point.d0 = leading_d0(&point, 1.0)?;
    Ok(point)
}

/// `∂_x∂_y²w`: central difference of `k₂ᵀD²w k₂` along `k₁` with one Richardson level.
pub fn d_xyy(xi: [f64; 2], alpha: f64, frame: [[f64; 2]; 2]) -> Result<f64> {
    let (k1, k2) = (frame[0], frame[1]);
    let g = |s: f64| -> Result<f64> {
        let m = hessian_w([xi[0] + s * k1[0], xi[1] + s * k1[1]], alpha)?;
        Ok(quad_form(&m, k2, k2))
    };
    let d = |h: f64| -> Result<f64> { Ok((g(h)? - g(-h)?) / (2.0 * h)) };
    let h = 1e-3;
    Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
}

/// Leading coefficient `d₀` of `J(τ) e^{−iτΦ_v(ξ*)} ~ d₀ τ^{−σ₀}` for a cutoff
/// with value `zeta` at the point.
///
/// Degenerate points use the quasi-homogeneous formula
/// `d₀ = σ₀Γ(σ₀)(e^{iπσ₀/2}c₀ + e^{−iπσ₀/2}C₀)` where `c₀, C₀` carry the
/// weight factor `κ_y/σ₀` of the `y` variable; non-degenerate points use
/// `a₀ = 2π|det D²w|^{−1/2} e^{iπ sgn/4}`.
pub fn leading_d0(point: &CriticalPoint, zeta: f64) -> Result<Complex64> {
    let s0 = point.sigma0;
    let greenblatt = |c0: f64, cc0: f64, flip: bool| {
        let (c0, cc0) = if flip { (cc0, c0) } else { (c0, cc0) };
        let e = Complex64::from_polar(1.0, PI * s0 / 2.0);
        (e * c0 + e.conj() * cc0) * (s0 * gamma(s0) * zeta)
    };
    match point.class {
        PointClass::K1 => {
            let h = &point.hessian;
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if det.abs() < 1e-12 {
                return Err(invalid("non-degenerate formula needs a regular Hessian"));
            }
            let (l, _) = sym_eigen(h);
            // Signature of D²Φ = −D²w.
            let sgn = l.iter().map(|&x| if x < 0.0 { 1.0 } else { -1.0 }).sum::<f64>();
            Ok(Complex64::from_polar(2.0 * PI / det.abs().sqrt() * zeta, PI * sgn / 4.0))
        }
        PointClass::K2 => {
            let p = point.normal_form.monomials[0].coeff;
            let q = point.normal_form.monomials[1].coeff;
            let k = 0.4 * p.abs().powf(-0.5) * q.abs().powf(-1.0 / 3.0);
            let c0 = k * (beta(0.5, 1.0 / 3.0) + beta(1.0 / 3.0, 1.0 / 6.0));
            let cc0 = k * beta(0.5, 1.0 / 6.0);
            Ok(greenblatt(c0, cc0, p < 0.0))
        }
        PointClass::K3 => {
            let a = point.normal_form.monomials[0].coeff;
            let b = point.normal_form.monomials[1].coeff;
            let k = a.abs().powf(-0.25) * b.abs().powf(-0.5);
            let c0 = 4.0 / 3.0 * beta(0.25, 0.5) * k;
            let cc0 = 2.0 / 3.0 * beta(0.25, 0.25) * k;
            Ok(greenblatt(c0, cc0, a < 0.0))
        }
    }
}

/// `|h̃·∂_y h|^{−1/3}|Tr D²w|^{−1/6}`, the `ξ`- and `α`-dependent part of
/// `|d₀|` at a fold.
pub fn fold_proxy(xi: [f64; 2], alpha: f64) -> Result<f64> {
    let d3 = d3_formula(xi, alpha)?;
    let m = hessian_w(xi, alpha)?;
    let tr = m[0][0] + m[1][1];
    // h̃·∂_y h = ∂_y³w·Tr.
    Ok((d3 * tr).abs().powf(-1.0 / 3.0) * tr.abs().powf(-1.0 / 6.0))
}

/// The fold on a branch at parameter `a`.
pub fn fold_point(branch: Branch, a: f64, alpha: f64) -> Result<CriticalPoint> {
    let b = match branch {
        Branch::Gamma1 => curve_bp(a, alpha)?,
        Branch::Gamma2 => curve_b(a, alpha)?,
    };
    let p = classify([a.acos(), b.acos()], alpha)?;
    if p.class == PointClass::K1 {
        return Err(Error::Numerical(format!("curve point at a = {a} classified as non-degenerate")));
    }
    Ok(p)
}

fn torus_distance(x: [f64; 2], y: [f64; 2]) -> f64 {
    wrap(x[0] - y[0]).hypot(wrap(x[1] - y[1]))
}

/// All solutions of `∇w(ξ) = v` on the torus, by damped Newton from a grid of seeds.
pub fn critical_points(alpha: f64, v: [f64; 2]) -> Result<Vec<[f64; 2]>> {
    check_alpha(alpha)?;
    let resid = |x: [f64; 2]| {
        let g = group_velocity(x, alpha);
        [g[0] - v[0], g[1] - v[1]]
    };
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let seeds = 32;
    let mut found: Vec<[f64; 2]> = Vec::new();
    for i in 0..seeds {
        for j in 0..seeds {
            let mut x = [
                -PI + 2.0 * PI * (i as f64 + 0.37) / seeds as f64,
                -PI + 2.0 * PI * (j as f64 + 0.61) / seeds as f64,
            ];
            let mut r = resid(x);
            for _ in 0..200 {
                if norm(r) < 1e-15 {
                    break;
                }
                let Ok(m) = hessian_w(x, alpha) else { break };
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                let dir = if det.abs() > 1e-300 {
                    [-(m[1][1] * r[0] - m[0][1] * r[1]) / det, -(m[0][0] * r[1] - m[1][0] * r[0]) / det]
                } else {
                    [-r[0], -r[1]]
                };
                let mut t = 1.0;
                let mut moved = false;
                for _ in 0..40 {
                    let y = [wrap(x[0] + t * dir[0]), wrap(x[1] + t * dir[1])];
                    if base(y) > 1e-14 {
                        let ry = resid(y);
                        if norm(ry) < norm(r) {
                            x = y;
                            r = ry;
                            moved = true;
                            break;
                        }
                    }
                    t *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            if norm(r) < 1e-10 && !found.iter().any(|p| torus_distance(*p, x) < 1e-3) {
                found.push(x);
            }
        }
    }
    found.sort_by(|p, q| p.partial_cmp(q).unwrap());
    Ok(found)
}

/// A localized cutoff around a critical point whose support excludes every
/// other critical point of the same phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isolation {
    pub bump: LocalBump,
    /// Distance to the nearest other critical point or the origin.
    pub distance: f64,
}

/// Bump radii (along `k₁`, `k₂`) capped at half the distance `d` to the
/// nearest other critical point or to the origin, where `w` is not smooth: cusps `[min(d/2, 0.6), 0.6]` with a plateau
/// of half the radius, folds `[min(d/2, 1), min(d/2, 2.4)]`, non-degenerate
/// points `min(d/2, 0.8)` in both directions.
pub fn isolating_bump(point: &CriticalPoint) -> Result<Isolation> {
    let v = group_velocity(point.xi, point.alpha);
    let others = critical_points(point.alpha, v)?;
    let distance = others
        .iter()
        .map(|p| torus_distance(*p, point.xi))
        .filter(|&d| d > 1e-3)
        .fold(f64::INFINITY, f64::min)
        .min(torus_distance(point.xi, [0.0, 0.0]));
    let half = 0.5 * distance;
    let (radii, flat) = match point.class {
        PointClass::K3 => ([half.min(0.6), 0.6], 0.5),
        PointClass::K2 => ([half.min(1.0), half.min(2.4)], 0.0),
        PointClass::K1 => ([half.min(0.8), half.min(0.8)], 0.0),
    };
    Ok(Isolation { bump: LocalBump::new(point.xi, point.frame, radii, flat)?, distance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticsRow {
    pub tau: f64,
    pub j: Complex64,
    pub error: f64,
    /// `|J(τ)|·τ^{σ₀}`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub rows: Vec<AsymptoticsRow>,
    /// `|d₀|` for the cutoff value at the point.
    pub d0: f64,
    /// Last scaled value over `|d₀|`.
    pub ratio: f64,
    /// `|s_{k+1} − s_k|` for consecutive scaled values.
    pub cauchy: Vec<f64>,
    pub fit: DecayFit,
}

/// `|J(τ)|τ^{σ₀}` along `taus` for a cutoff isolating the point.
pub fn verify_asymptotics(point: &CriticalPoint, cutoff: &Cutoff, taus: &[f64], opts: &QuadOptions) -> Result<AsymptoticsReport> {
    if taus.len() < 2 || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("need at least two positive tau values"));
    }
    let phase = PhaseSpec::stationary_at(point.alpha, point.xi)?;
    let rows = taus
        .iter()
        .map(|&tau| {
            let j = eval_j(&phase, cutoff, tau, opts)?;
            Ok(AsymptoticsRow { tau, j: j.value, error: j.error, scaled: j.value.norm() * tau.powf(point.sigma0) })
        })
        .collect::<Result<Vec<_>>>()?;
    let d0 = leading_d0(point, cutoff.value(point.xi))?.norm();
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.tau, r.j.norm())).collect();
    let span = samples.last().unwrap().0 / samples[0].0;
    let fit = if samples.len() >= 6 && span >= 10.0 { fit_decay(&samples, None)? } else { fit_power_law(&samples)? };
    let ratio = rows.last().unwrap().scaled / d0;
    let cauchy = rows.windows(2).map(|p| (p[1].scaled - p[0].scaled).abs()).collect();
    Ok(AsymptoticsReport { rows, d0, ratio, cauchy, fit })
}
