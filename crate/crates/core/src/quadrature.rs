//! Gauss-Legendre rules, barycentric interpolation on Legendre grids and the
//! composite rules that discretize the horizontal plane-wave integrals.
//!
//! A [`QuadratureRule`] discretizes integrals over `λ ∈ (0, L]` of the form
//! `ρ(λ) e^{-κX} e^{iλY}` with `κ = √(λ² + β²)`, for every offset `(X, Y)` the
//! east/west operators can see. It is a composite rule: dyadic panels that
//! resolve the branch points at `±iβ` near the origin, followed by panels
//! whose width follows the local decay and oscillation of the integrand.

use crate::cell::{Periodicity, UnitCell};
use crate::error::{Error, Result};
use crate::kernels::Pde;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::PathBuf;

/// Environment variable naming a directory used to cache quadrature rules.
pub const CACHE_ENV: &str = "PERFMM_QUADRATURE_CACHE";

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

/// Nodes and weights in `f64` by Newton iteration on the three-term recurrence.
pub(crate) fn gauss_legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[n - 1 - i] = z;
        x[i] = -z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `n`-point Gauss-Legendre rule, `1 <= n <= 64`.
pub fn gauss_legendre<T: Real>(n: usize) -> Result<GaussRule<T>> {
    if !(1..=64).contains(&n) {
        return Err(Error::OrderOutOfRange(n));
    }
    let (x, w) = gauss_legendre_f64(n);
    Ok(GaussRule { nodes: x.into_iter().map(T::c).collect(), weights: w.into_iter().map(T::c).collect() })
}

/// Legendre nodes on `[-halfwidth, halfwidth]` with barycentric weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycentricGrid<T> {
    pub nodes: Vec<T>,
    /// `σ_i = 1/Π_{j≠i}(t_i - t_j)`.
    pub sigma: Vec<T>,
    pub halfwidth: T,
}

pub fn barycentric_grid<T: Real>(count: usize, halfwidth: T) -> Result<BarycentricGrid<T>> {
    if !(2..=64).contains(&count) {
        return Err(Error::OrderOutOfRange(count));
    }
    let (x, _) = gauss_legendre_f64(count);
    let h = halfwidth.f64();
    let t: Vec<f64> = x.iter().map(|&v| v * h).collect();
    let sigma = (0..count)
        .map(|i| {
            let p: f64 = (0..count).filter(|&j| j != i).map(|j| t[i] - t[j]).product();
            T::c(1.0 / p)
        })
        .collect();
    Ok(BarycentricGrid { nodes: t.into_iter().map(T::c).collect(), sigma, halfwidth })
}

impl<T: Real> BarycentricGrid<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Writes the interpolation coefficients `γ(t, ·)` into `out`.
    #[inline]
    pub fn coeffs_into(&self, t: T, out: &mut [T]) {
        for (i, &ti) in self.nodes.iter().enumerate() {
            if t == ti {
                out.iter_mut().for_each(|v| *v = T::zero());
                out[i] = T::one();
                return;
            }
        }
        let mut s = T::zero();
        for ((o, &ti), &si) in out.iter_mut().zip(&self.nodes).zip(&self.sigma) {
            *o = si / (t - ti);
            s += *o;
        }
        let inv = T::one() / s;
        out.iter_mut().for_each(|v| *v *= inv);
    }

    /// Interpolates nodal values at `t` (second barycentric form).
    pub fn interpolate(&self, values: &[T], t: T) -> T {
        let mut g = vec![T::zero(); self.len()];
        self.coeffs_into(t, &mut g);
        g.iter().zip(values).fold(T::zero(), |a, (&c, &v)| a + c * v)
    }
}

/// Barycentric interpolation coefficients at `t`: `Σ_n γ(t, n) f(t_n) ≈ f(t)`.
pub fn interp_coeffs<T: Real>(t: T, grid: &BarycentricGrid<T>) -> Result<Vec<T>> {
    if !(t.abs() <= grid.halfwidth * (T::one() + T::c(64.0) * T::epsilon())) {
        return Err(Error::OutOfInterval { t: t.f64(), half: grid.halfwidth.f64() });
    }
    let mut out = vec![T::zero(); grid.len()];
    grid.coeffs_into(t, &mut out);
    Ok(out)
}

/// Extra polynomial growth of the spectral density with `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderGrowth {
    None,
    /// `((κ + λ)/β)^l`, modified Helmholtz multipoles.
    Modified(u32),
    /// `λ^{l-1}/(l-1)!`, Laplace multipoles.
    Laplace(u32),
}

impl OrderGrowth {
    fn log_factor(self, lambda: f64, beta: f64) -> f64 {
        match self {
            OrderGrowth::None => 0.0,
            OrderGrowth::Modified(l) => {
                let k = lambda.hypot(beta);
                l as f64 * ((k + lambda) / beta).ln().max(0.0)
            }
            OrderGrowth::Laplace(l) => {
                if l <= 1 || lambda <= 0.0 {
                    0.0
                } else {
                    let lf: f64 = (1..l).map(|k| (k as f64).ln()).sum();
                    (l as f64 - 1.0) * lambda.ln() - lf
                }
            }
        }
    }
}

/// Parameters a rule was built for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleMeta {
    pub pde: Pde,
    pub beta: f64,
    pub d: f64,
    pub xi: f64,
    pub eta: f64,
    pub eps: f64,
    pub periodicity: Periodicity,
    pub growth: OrderGrowth,
    /// Gauss-Legendre order per panel.
    pub order: usize,
}

impl RuleMeta {
    /// Whether this rule serves an operator with the given parameters.
    pub fn matches<T: Real>(&self, beta: T, cell: &UnitCell<T>, eps: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        close(self.beta, beta.f64())
            && close(self.d, cell.d.f64())
            && (self.xi - cell.xi.f64()).abs() <= 1e-12 * self.d
            && close(self.eta, cell.eta.f64())
            && self.periodicity == cell.periodicity
            && self.eps <= eps * (1.0 + 1e-12)
    }
}

/// Nodes and weights on `(0, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<T> {
    pub lambdas: Vec<T>,
    pub weights: Vec<T>,
    /// Panel endpoints, kept so the rule can be refined for certification.
    pub panels: Vec<(f64, f64)>,
    pub meta: RuleMeta,
}

impl<T: Real> QuadratureRule<T> {
    pub fn count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Truncation point `L` (zero for an empty rule).
    pub fn cutoff(&self) -> f64 {
        self.panels.last().map(|p| p.1).unwrap_or(0.0)
    }

    /// Same panels with a different per-panel order.
    pub fn with_order(&self, order: usize) -> Self {
        let mut meta = self.meta;
        meta.order = order;
        from_panels(&self.panels, meta)
    }

    /// `Σ w_n f(λ_n)`.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.lambdas.iter().zip(&self.weights).fold(T::zero(), |a, (&l, &w)| a + w * f(l))
    }
}

fn from_panels<T: Real>(panels: &[(f64, f64)], meta: RuleMeta) -> QuadratureRule<T> {
    let (x, w) = gauss_legendre_f64(meta.order);
    let mut lambdas = Vec::with_capacity(panels.len() * meta.order);
    let mut weights = Vec::with_capacity(panels.len() * meta.order);
    for &(a, b) in panels {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&w) {
            lambdas.push(T::c(c + h * xi));
            weights.push(T::c(h * wi));
        }
    }
    QuadratureRule { lambdas, weights, panels: panels.to_vec(), meta }
}

/// Range of offsets `X = x - x' + shift > 0` and `|Y|` the rule must cover.
pub fn offset_ranges<T: Real>(cell: &UnitCell<T>) -> (f64, f64, f64) {
    let d = cell.d.f64();
    let xi = cell.xi.f64().abs();
    let eta = cell.eta.f64();
    match cell.periodicity {
        Periodicity::Singly => (d, 3.0 * d, eta),
        Periodicity::Doubly => {
            let m0 = cell.m0 as f64;
            ((m0 * d - 2.0 * xi).max(d), (m0 + 2.0) * d + 2.0 * xi, 2.0 * eta)
        }
    }
}

/// Gauss-Legendre order per panel for a target precision.
pub fn panel_order(eps: f64) -> usize {
    if eps <= 1e-9 {
        16
    } else {
        10
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (1e-13..=1e-3).contains(&eps) {
        Ok(())
    } else {
        Err(Error::PrecisionOutOfRange(eps))
    }
}

/// Rule for the east/west integrals of the charge (or force) kernels.
pub fn sommerfeld_rule<T: Real>(pde: Pde, beta: T, cell: &UnitCell<T>, eps: f64) -> Result<QuadratureRule<T>> {
    sommerfeld_rule_with_growth(pde, beta, cell, eps, OrderGrowth::None)
}

/// As [`sommerfeld_rule`], for densities with extra growth in `λ`.
pub fn sommerfeld_rule_with_growth<T: Real>(
    pde: Pde,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    growth: OrderGrowth,
) -> Result<QuadratureRule<T>> {
    check_eps(eps)?;
    let b = beta.f64();
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::MissingBeta);
    }
    let meta = RuleMeta {
        pde,
        beta: b,
        d: cell.d.f64(),
        xi: cell.xi.f64(),
        eta: cell.eta.f64(),
        eps,
        periodicity: cell.periodicity,
        growth,
        order: panel_order(eps),
    };
    let cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    if let Some(dir) = &cache {
        if let Some(panels) = read_cached(dir, &meta) {
            return Ok(from_panels(&panels, meta));
        }
    }
    let panels = design_panels(&meta, offset_ranges(cell));
    if let Some(dir) = &cache {
        // A failed cache write only costs a rebuild next time.
        let _ = write_cached(dir, &meta, &panels);
    }
    Ok(from_panels(&panels, meta))
}

/// Largest half-width times complex frequency a panel of the given order
/// integrates to the given precision (measured on `e^{iωx}` and `e^{ωx}`).
fn panel_budget(order: usize, eps: f64) -> f64 {
    match (order >= 16, eps <= 1e-11, eps <= 1e-7) {
        (true, true, _) => 8.5,
        (true, false, _) => 10.5,
        (false, _, true) => 4.8,
        (false, _, false) => 6.0,
    }
}

fn design_panels(meta: &RuleMeta, (x_min, x_max, y_max): (f64, f64, f64)) -> Vec<(f64, f64)> {
    let beta = meta.beta;
    let eps = meta.eps;
    let target = (10.0 / eps).ln();
    // The modified Stokeslet rule also carries the β-free family, which
    // decays like e^{-λX} and is never negligible.
    let two_family = meta.pde == Pde::ModStokes;
    // Whole integrand below ε: nothing to integrate.
    if !two_family && beta * x_min - meta.growth.log_factor(0.0, beta) - (1.0 + beta * x_max).ln() >= target {
        return Vec::new();
    }
    // Otherwise truncate relative to the size e^{-βX} of the integral itself.
    let margin = |l: f64| {
        let k = l.hypot(beta);
        (k - beta) * x_min - meta.growth.log_factor(l, beta) - (1.0 + k * x_max).ln()
    };
    let mut hi = 1.0 / x_min;
    while margin(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    let cutoff = hi;

    let c = panel_budget(meta.order, eps);
    let log_eps = (1.0 / eps).ln();
    let width_at = |a: f64| {
        let k = if two_family { a } else { a.hypot(beta) };
        let x_eff = if k > 0.0 { x_max.min(x_min + log_eps / k) } else { x_max };
        let z = x_eff.hypot(y_max);
        (2.0 * c / z).min(6.0 / meta.d)
    };

    let mut panels = Vec::new();
    let h0 = width_at(0.0).min(cutoff);
    if beta > 0.0 {
        let mut ends = vec![h0];
        let mut w = h0;
        while w > 0.5 * beta {
            w *= 0.5;
            ends.push(w);
        }
        ends.reverse();
        panels.push((0.0, ends[0]));
        for win in ends.windows(2) {
            panels.push((win[0], win[1]));
        }
    } else {
        panels.push((0.0, h0));
    }
    let mut a = h0;
    while a < cutoff {
        let b = (a + width_at(a)).min(cutoff);
        // Avoid a sliver panel at the end.
        let b = if cutoff - b < 0.25 * (b - a) { cutoff } else { b };
        panels.push((a, b));
        a = b;
    }
    panels
}

fn cache_path(dir: &std::path::Path, meta: &RuleMeta) -> PathBuf {
    let key = format!(
        "{}_b{:.17e}_d{:.17e}_xi{:.17e}_eta{:.17e}_e{:.3e}_{:?}_{:?}_o{}",
        meta.pde.name(),
        meta.beta,
        meta.d,
        meta.xi,
        meta.eta,
        meta.eps,
        meta.periodicity,
        meta.growth,
        meta.order
    );
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    dir.join(format!("rule_{h:016x}.txt"))
}

fn header(meta: &RuleMeta) -> String {
    format!("# {}", serde_json::to_string(meta).unwrap_or_default())
}

fn read_cached(dir: &std::path::Path, meta: &RuleMeta) -> Option<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(cache_path(dir, meta)).ok()?;
    let mut lines = text.lines();
    if lines.next()? != header(meta) {
        return None;
    }
    let mut panels = Vec::new();
    for line in lines {
        let mut it = line.split_whitespace().map(|s| s.parse::<f64>());
        match (it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b))) => panels.push((a, b)),
            _ => return None,
        }
    }
    Some(panels)
}

fn write_cached(dir: &std::path::Path, meta: &RuleMeta, panels: &[(f64, f64)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(cache_path(dir, meta))?;
    writeln!(f, "{}", header(meta))?;
    for (a, b) in panels {
        writeln!(f, "{a:.17e} {b:.17e}")?;
    }
    Ok(())
}
