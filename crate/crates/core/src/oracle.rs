//! Independent references: brute-force lattice sums and the periodicity
//! residual used to score a total field.
//!
//! Exponentially decaying kernels (and the decaying part of the modified
//! Stokeslet) are summed image by image over square shells
//! `max(|m|, |n|) ≤ S`, adding `l` and `-l` together. Kernels that decay
//! algebraically are summed row by row: every row `{s + m e1 + n e2 : m ∈ ℤ}`
//! has a closed form in `log|2 sin(πw/d)|`, `cot(πw/d)` and its derivatives,
//! and the rows are added in pairs `±n`. The row-first sum is periodic in `x`
//! but may drift linearly in `y`; the drift is measured from the two
//! outermost rows and removed, which leaves the periodic field.
//!
//! The oracle works in `f64` only.

use crate::bessel::{k0_k1, kn_all};
use crate::cell::{near_translations, ParticleSystem, Periodicity, Strengths, UnitCell};
use crate::error::{Error, Result};
use crate::kernels::{
    laplace_raw, mod_helmholtz_raw, mod_stokeslet_raw, multipole_laplace_raw, multipole_mh_raw, pressurelet_raw,
    stokeslet_raw, stresslet_raw, Pde,
};
use crate::scalar::{Cx, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Kernel summed by the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OracleKernel {
    /// Potential of charges (Poisson or modified Helmholtz).
    Charge { pde: Pde, beta: f64 },
    /// Velocity of point forces (Stokes or modified Stokes).
    Velocity { pde: Pde, beta: f64 },
    /// Pressure of point forces.
    Pressure,
    /// Double-layer velocity; needs one unit normal per source.
    DoubleLayer,
    /// Multipoles of order `order` (Poisson or modified Helmholtz).
    Multipole { pde: Pde, order: u32, beta: f64 },
}

impl OracleKernel {
    pub fn out_components(self) -> usize {
        match self {
            OracleKernel::Velocity { .. } | OracleKernel::DoubleLayer => 2,
            _ => 1,
        }
    }

    pub fn id(self) -> String {
        match self {
            OracleKernel::Charge { pde, .. } => pde.name().to_string(),
            OracleKernel::Velocity { pde, .. } => format!("{}-velocity", pde.name()),
            OracleKernel::Pressure => "pressure".into(),
            OracleKernel::DoubleLayer => "double-layer".into(),
            OracleKernel::Multipole { pde, order, .. } => format!("{}-multipole-{}", pde.name(), order),
        }
    }

    /// Whether the kernel has an image-summed, exponentially decaying part.
    fn beta(self) -> f64 {
        match self {
            OracleKernel::Charge { beta, .. } | OracleKernel::Velocity { beta, .. } | OracleKernel::Multipole { beta, .. } => beta,
            _ => 0.0,
        }
    }

    fn has_decaying_part(self) -> bool {
        match self {
            OracleKernel::Charge { pde, .. } | OracleKernel::Multipole { pde, .. } => pde == Pde::ModHelmholtz,
            OracleKernel::Velocity { pde, .. } => pde == Pde::ModStokes,
            _ => false,
        }
    }

    /// Whether the kernel has a row-summed, algebraically decaying part.
    fn has_row_part(self) -> bool {
        match self {
            OracleKernel::Charge { pde, .. } | OracleKernel::Multipole { pde, .. } => pde == Pde::Poisson,
            _ => true,
        }
    }
}

type Out = [Cx<f64>; 2];

/// Images with `βr` beyond this are left out of the exponentially decaying
/// sums: `K0(50) ≈ 3.4e-23`, and even `K40(50)` is below `1e-15` while the
/// order-40 near field is astronomically larger.
const DECAY_CUTOFF: f64 = 50.0;

const ZERO: Cx<f64> = Cx::new(0.0, 0.0);

fn scalar_out(v: Cx<f64>) -> Out {
    [v, ZERO]
}

/// Full free-space kernel applied to the strength of source `j`.
pub fn kernel_apply(kernel: OracleKernel, dx: f64, dy: f64, strengths: &Strengths<f64>, j: usize, normal: Option<Point<f64>>) -> Out {
    let f = |c: usize| strengths.get(j, c);
    match kernel {
        OracleKernel::Charge { pde: Pde::Poisson, .. } => scalar_out(f(0) * laplace_raw(dx * dx + dy * dy)),
        OracleKernel::Charge { beta, .. } => scalar_out(f(0) * mod_helmholtz_raw(beta, dx.hypot(dy))),
        OracleKernel::Velocity { pde, beta } => {
            let g = if pde == Pde::Stokes { stokeslet_raw(dx, dy) } else { mod_stokeslet_raw(beta, dx, dy) };
            [f(0) * g[0][0] + f(1) * g[0][1], f(0) * g[1][0] + f(1) * g[1][1]]
        }
        OracleKernel::Pressure => {
            let p = pressurelet_raw(dx, dy);
            scalar_out(f(0) * p[0] + f(1) * p[1])
        }
        OracleKernel::DoubleLayer => {
            let g = stresslet_raw(dx, dy, normal.unwrap_or([0.0, 0.0]));
            [f(0) * g[0][0] + f(1) * g[0][1], f(0) * g[1][0] + f(1) * g[1][1]]
        }
        OracleKernel::Multipole { pde: Pde::Poisson, order, .. } => scalar_out(f(0) * multipole_laplace_raw(order as i32, dx, dy)),
        OracleKernel::Multipole { order, beta, .. } => scalar_out(f(0) * multipole_mh_raw(order as usize, beta, dx, dy)),
    }
}

/// Exponentially decaying part of the kernel (zero for algebraic kernels).
fn decaying_apply(kernel: OracleKernel, dx: f64, dy: f64, strengths: &Strengths<f64>, j: usize) -> Out {
    match kernel {
        OracleKernel::Velocity { pde: Pde::ModStokes, beta } => {
            // G - algebraic part = (1/(2πβ²r²))[(z²K0 + zK1)(I - r̂r̂) - zK1 r̂r̂].
            let r2 = dx * dx + dy * dy;
            let z = beta * r2.sqrt();
            let (k0, k1) = k0_k1(z);
            let b = z * z * k0 + z * k1;
            let a = -z * k1;
            let c = 1.0 / (2.0 * PI * beta * beta * r2);
            let (xx, xy, yy) = (dx * dx / r2, dx * dy / r2, dy * dy / r2);
            let g = [[c * (b + (a - b) * xx), c * (a - b) * xy], [c * (a - b) * xy, c * (b + (a - b) * yy)]];
            let f = |c: usize| strengths.get(j, c);
            [f(0) * g[0][0] + f(1) * g[0][1], f(0) * g[1][0] + f(1) * g[1][1]]
        }
        OracleKernel::Velocity { .. } => [ZERO, ZERO],
        OracleKernel::Multipole { pde: Pde::ModHelmholtz, order, beta } => {
            let r = dx.hypot(dy);
            let k = kn_all(order as usize, beta * r)[order as usize];
            scalar_out(strengths.get(j, 0) * Cx::from_polar(k, order as f64 * dy.atan2(dx)))
        }
        OracleKernel::Charge { pde: Pde::ModHelmholtz, beta } => scalar_out(strengths.get(j, 0) * mod_helmholtz_raw(beta, dx.hypot(dy))),
        _ => [ZERO, ZERO],
    }
}

/// `sinh(a)/a`.
fn sinhc(a: f64) -> f64 {
    if a.abs() < 1e-4 {
        1.0 + a * a / 6.0
    } else {
        a.sinh() / a
    }
}

/// Closed-form row sums over `m ∈ ℤ` for an offset `w = t - s - n e2`.
struct Row {
    /// `Σ log r` up to a constant: `log|2 sin(πw/d)|`.
    log: f64,
    /// `F = Σ 1/(w - md) = (π/d) cot(πw/d)`.
    f: Cx<f64>,
    /// `F' = -(π/d)² csc²(πw/d)`.
    fp: Cx<f64>,
    /// `Σ 1/r²`.
    s2: f64,
    /// `Σ x/r⁴ = -(1/2) ∂x Σ 1/r²`.
    x4: f64,
}

fn row(d: f64, x: f64, y: f64) -> Row {
    let k = PI / d;
    let u = Cx::new(k * x, k * y);
    let s = u.sin();
    let c = u.cos();
    let f = c / s * k;
    let fp = -(s * s).inv() * (k * k);
    let sh = (k * y).sinh();
    let sn = (k * x).sin();
    let den = 2.0 * (sh * sh + sn * sn);
    let num = k * 2.0 * k * sinhc(2.0 * k * y);
    let s2 = num / den;
    let ddx = 2.0 * k * (2.0 * k * x).sin();
    let x4 = 0.5 * num * ddx / (den * den);
    Row { log: (2.0 * s).norm().ln(), f, fp, s2, x4 }
}

/// `Σ_m 1/(w - md)^l` from derivatives of `cot`.
fn laplace_multipole_row(d: f64, w: Cx<f64>, l: u32) -> Cx<f64> {
    let k = PI / d;
    let u = w * k;
    let s = u.sin();
    let c = u.cos() / s;
    let sigma = (s * s).inv();
    // cot^{(j)}(u) as Σ coef · c^a σ^b, using c' = -σ and σ' = -2σc.
    let mut poly: Vec<((u32, u32), f64)> = vec![((1, 0), 1.0)];
    for _ in 1..l {
        let mut next: Vec<((u32, u32), f64)> = Vec::new();
        let mut add = |key: (u32, u32), v: f64| {
            if let Some(e) = next.iter_mut().find(|e| e.0 == key) {
                e.1 += v;
            } else {
                next.push((key, v));
            }
        };
        for &((a, b), v) in &poly {
            if a > 0 {
                add((a - 1, b + 1), -(a as f64) * v);
            }
            if b > 0 {
                add((a + 1, b), -2.0 * b as f64 * v);
            }
        }
        poly = next;
    }
    let mut deriv = ZERO;
    for &((a, b), v) in &poly {
        deriv += c.powu(a) * sigma.powu(b) * v;
    }
    // Σ 1/(w - md)^l = ((-1)^{l-1}/(l-1)!) (d/dw)^{l-1} (π/d) cot(πw/d).
    let fact: f64 = (1..l).map(|j| j as f64).product();
    let sign = if (l - 1) % 2 == 0 { 1.0 } else { -1.0 };
    deriv * (sign * k.powi(l as i32) / fact)
}

/// `Σ_{m ∉ skip} 1/(w - md)^l`, accurate when `w` sits next to a skipped pole.
///
/// The pole nearest to `w` is split off and the remainder of the cotangent
/// derivative is summed from its Laurent series, so no huge term is added
/// and then subtracted again.
fn laplace_multipole_row_far(d: f64, w: Cx<f64>, l: u32, skip: std::ops::RangeInclusive<i64>) -> Cx<f64> {
    let near = (w.re / d).round() as i64;
    let wr = w - near as f64 * d;
    let u = wr * (PI / d);
    let mut total;
    let mut pole_in_total = true;
    if u.norm() < 1.5 {
        // cot u - 1/u = -Σ_k c_k u^{2k-1}, c_k = 2ζ(2k)/π^{2k}.
        let li = l as i64;
        let mut deriv = ZERO;
        for k in 1..400i64 {
            let p = 2 * k - 1;
            if p < li - 1 {
                continue;
            }
            let falling: f64 = ((p - li + 2)..=p).map(|v| v as f64).product();
            let term = u.powi((p - li + 1) as i32) * (2.0 * zeta_even(k) / PI.powi(2 * k as i32) * falling);
            deriv -= term;
            if term.norm() < 1e-18 * deriv.norm().max(1e-300) && p > li + 4 {
                break;
            }
        }
        let fact: f64 = (1..l).map(|j| j as f64).product();
        let sign = if (l - 1) % 2 == 0 { 1.0 } else { -1.0 };
        total = deriv * (sign * (PI / d).powi(l as i32) / fact);
        pole_in_total = false;
    } else {
        total = laplace_multipole_row(d, w, l);
    }
    if !pole_in_total && !skip.contains(&near) {
        total += wr.powi(l as i32).inv();
    }
    for m in skip {
        if m == near && !pole_in_total {
            continue;
        }
        total -= (w - m as f64 * d).powi(l as i32).inv();
    }
    total
}

/// `ζ(2k)` from a partial sum and its Euler-Maclaurin tail.
fn zeta_even(k: i64) -> f64 {
    let s = 2.0 * k as f64;
    let n = 50.0f64;
    let head: f64 = (1..50).map(|j| (j as f64).powf(-s)).sum();
    let p = |e: f64| n.powf(-e);
    head + p(s - 1.0) / (s - 1.0) + 0.5 * p(s) + s * p(s + 1.0) / 12.0 - s * (s + 1.0) * (s + 2.0) * p(s + 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * p(s + 5.0) / 30240.0
}

/// Row sum of the algebraic part of the kernel for source `j`.
fn row_apply(kernel: OracleKernel, d: f64, x: f64, y: f64, strengths: &Strengths<f64>, j: usize, normal: Option<Point<f64>>) -> Out {
    let f = |c: usize| strengths.get(j, c);
    match kernel {
        OracleKernel::Charge { .. } => scalar_out(f(0) * (-row(d, x, y).log / (2.0 * PI))),
        OracleKernel::Velocity { pde: Pde::Stokes, .. } => {
            let r = row(d, x, y);
            let c = 1.0 / (4.0 * PI);
            let g = [[c * (-r.log + y * r.f.im), c * y * r.f.re], [c * y * r.f.re, c * (-r.log - y * r.f.im)]];
            [f(0) * g[0][0] + f(1) * g[0][1], f(0) * g[1][0] + f(1) * g[1][1]]
        }
        OracleKernel::Velocity { beta, .. } => {
            let r = row(d, x, y);
            let c = 1.0 / (2.0 * PI * beta * beta);
            let g = [[-c * r.fp.re, c * r.fp.im], [c * r.fp.im, c * r.fp.re]];
            [f(0) * g[0][0] + f(1) * g[0][1], f(0) * g[1][0] + f(1) * g[1][1]]
        }
        OracleKernel::Pressure => {
            let r = row(d, x, y);
            scalar_out((f(0) * r.f.re - f(1) * r.f.im) / (2.0 * PI))
        }
        OracleKernel::DoubleLayer => {
            let r = row(d, x, y);
            let x2 = 0.5 * (r.s2 - r.fp.re);
            let y2 = 0.5 * (r.s2 + r.fp.re);
            let xy = 0.5 * r.fp.im;
            // Σ r_a r_b r_c / r⁴ indexed by the number of y factors.
            let t = [r.f.re - y * y * r.x4, y * x2, y * xy, y * y2];
            let n = normal.unwrap_or([0.0, 0.0]);
            let tt = |a: usize, b: usize, c: usize| t[a + b + c];
            let mut g = [[0.0; 2]; 2];
            for (i, gi) in g.iter_mut().enumerate() {
                for (jj, gij) in gi.iter_mut().enumerate() {
                    *gij = (n[0] * tt(0, i, jj) + n[1] * tt(1, i, jj)) / PI;
                }
            }
            [f(0) * g[0][0] + f(1) * g[0][1], f(0) * g[1][0] + f(1) * g[1][1]]
        }
        OracleKernel::Multipole { order, .. } => scalar_out(f(0) * laplace_multipole_row(d, Cx::new(x, y), order)),
    }
}

fn check_system(kernel: OracleKernel, sys: &ParticleSystem<f64>, normals: Option<&[Point<f64>]>) -> Result<()> {
    if kernel == OracleKernel::DoubleLayer && normals.map(|n| n.len()) != Some(sys.sources.len()) {
        return Err(Error::DimensionMismatch("double-layer oracle needs one normal per source".into()));
    }
    Ok(())
}

/// One evaluation of the far-field sum at a given truncation.
fn far_sum(
    kernel: OracleKernel,
    cell: &UnitCell<f64>,
    sys: &ParticleSystem<f64>,
    normals: Option<&[Point<f64>]>,
    shells: i64,
) -> Vec<Cx<f64>> {
    let nc = kernel.out_components();
    let doubly = cell.periodicity == Periodicity::Doubly;
    let near = near_translations(cell);
    let d = cell.d;
    let cutoff2 = (DECAY_CUTOFF / kernel.beta()).powi(2);
    let mut out = vec![ZERO; sys.targets.len() * nc];
    out.par_chunks_mut(nc).zip(sys.targets.par_iter()).for_each(|(u, &t)| {
        let mut acc = [ZERO, ZERO];
        let mut push = |v: Out| {
            acc[0] += v[0];
            acc[1] += v[1];
        };
        for (j, s) in sys.sources.iter().enumerate() {
            let nj = normals.map(|n| n[j]);
            if kernel.has_decaying_part() {
                let nmax = if doubly { shells } else { 0 };
                for n in -nmax..=nmax {
                    for m in -shells..=shells {
                        // Each pair ±l once, from the lexicographically positive member.
                        if (n, m) <= (0, 0) || cell.is_near(m, n) {
                            continue;
                        }
                        for sgn in [1i64, -1] {
                            let l = cell.translation(sgn * m, sgn * n).vector;
                            let (x, y) = (t[0] - s[0] - l[0], t[1] - s[1] - l[1]);
                            if x * x + y * y > cutoff2 {
                                continue;
                            }
                            push(decaying_apply(kernel, x, y, &sys.strengths, j));
                        }
                    }
                }
            }
            if kernel.has_row_part() {
                let rows = if doubly { shells } else { 0 };
                // Laplace multipole rows drop their near columns themselves.
                let split = matches!(kernel, OracleKernel::Multipole { pde: Pde::Poisson, .. });
                for n in 0..=rows {
                    for sgn in if n == 0 { &[1i64][..] } else { &[1i64, -1][..] } {
                        let l = cell.translation(0, sgn * n).vector;
                        let (x, y) = (t[0] - s[0] - l[0], t[1] - s[1] - l[1]);
                        match kernel {
                            OracleKernel::Multipole { order, .. } if split => {
                                let skip = if cell.is_near(0, sgn * n) { -cell.m0..=cell.m0 } else { 1..=0 };
                                let w = laplace_multipole_row_far(d, Cx::new(x, y), order, skip);
                                push(scalar_out(sys.strengths.get(j, 0) * w));
                            }
                            _ => push(row_apply(kernel, d, x, y, &sys.strengths, j, nj)),
                        }
                    }
                }
                for tr in near.iter().filter(|_| !split) {
                    let (x, y) = (t[0] - s[0] - tr.vector[0], t[1] - s[1] - tr.vector[1]);
                    let v = row_kernel_direct(kernel, x, y, &sys.strengths, j, nj);
                    push([-v[0], -v[1]]);
                }
                if doubly {
                    // Linear drift of the row-first sum in y.
                    let lo = cell.translation(0, -rows - 1).vector;
                    let hi = cell.translation(0, rows).vector;
                    let a = row_apply(kernel, d, t[0] - s[0] - lo[0], t[1] - s[1] - lo[1], &sys.strengths, j, nj);
                    let b = row_apply(kernel, d, t[0] - s[0] - hi[0], t[1] - s[1] - hi[1], &sys.strengths, j, nj);
                    let w = t[1] / cell.eta;
                    push([-(a[0] - b[0]) * w, -(a[1] - b[1]) * w]);
                }
            }
        }
        u.copy_from_slice(&acc[..nc]);
    });
    out
}

/// Algebraic part evaluated at one image (to remove near images from rows).
fn row_kernel_direct(kernel: OracleKernel, dx: f64, dy: f64, strengths: &Strengths<f64>, j: usize, normal: Option<Point<f64>>) -> Out {
    match kernel {
        OracleKernel::Velocity { pde: Pde::ModStokes, beta } => {
            let r2 = dx * dx + dy * dy;
            let c = 1.0 / (2.0 * PI * beta * beta * r2 * r2);
            let g = [[c * (dx * dx - dy * dy), c * 2.0 * dx * dy], [c * 2.0 * dx * dy, c * (dy * dy - dx * dx)]];
            let f = |c: usize| strengths.get(j, c);
            [f(0) * g[0][0] + f(1) * g[0][1], f(0) * g[1][0] + f(1) * g[1][1]]
        }
        _ => kernel_apply(kernel, dx, dy, strengths, j, normal),
    }
}

/// Brute-force far field `Σ_{l ∈ Λ_far} G(t, s + l) q` at the targets of
/// `sys`, certified by comparing truncations `shells` and `2·shells`.
///
/// Kernels that need neutral strengths are summed with whatever strengths
/// are given; their results are only meaningful up to the gauge of the
/// kernel (an additive constant for potentials and Stokes velocities).
pub fn brute_force_far(
    kernel: OracleKernel,
    cell: &UnitCell<f64>,
    sys: &ParticleSystem<f64>,
    normals: Option<&[Point<f64>]>,
    shells: i64,
    tol: f64,
) -> Result<Vec<Cx<f64>>> {
    if shells < 2 {
        return Err(Error::Config(format!("shells must be at least 2, got {shells}")));
    }
    check_system(kernel, sys, normals)?;
    let a = far_sum(kernel, cell, sys, normals, shells);
    if !kernel.has_row_part() && beyond_cutoff(kernel, cell, sys, shells) {
        // Every image past `shells` is cut off, so doubling adds nothing.
        return Ok(a);
    }
    let b = far_sum(kernel, cell, sys, normals, 2 * shells);
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if diff >= tol / 10.0 {
        return Err(Error::NotConverged { diff, tol });
    }
    Ok(b)
}

/// Whether every image outside `shells` lies beyond the decay cutoff for
/// every source-target pair.
fn beyond_cutoff(kernel: OracleKernel, cell: &UnitCell<f64>, sys: &ParticleSystem<f64>, shells: i64) -> bool {
    let spread = |f: fn(&Point<f64>) -> f64| {
        let pts = sys.sources.iter().chain(&sys.targets);
        let lo = pts.clone().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.map(f).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let diam = spread(|p| p[0]).hypot(spread(|p| p[1]));
    // Spacing of the lattice lines parallel to e1 and to e2.
    let gap = match cell.periodicity {
        Periodicity::Doubly => cell.eta.min(cell.d * cell.eta / cell.xi.hypot(cell.eta)),
        Periodicity::Singly => cell.d,
    };
    (shells + 1) as f64 * gap - diam > DECAY_CUTOFF / kernel.beta()
}

/// Direct sum over the near block; the untranslated source is skipped for
/// targets that coincide with it.
pub fn near_field(
    kernel: OracleKernel,
    cell: &UnitCell<f64>,
    sys: &ParticleSystem<f64>,
    normals: Option<&[Point<f64>]>,
) -> Vec<Cx<f64>> {
    let nc = kernel.out_components();
    let near = near_translations(cell);
    let mut out = vec![ZERO; sys.targets.len() * nc];
    out.par_chunks_mut(nc).zip(sys.targets.par_iter()).for_each(|(u, &t)| {
        let mut acc = [ZERO, ZERO];
        for (j, s) in sys.sources.iter().enumerate() {
            for tr in &near {
                let (dx, dy) = (t[0] - s[0] - tr.vector[0], t[1] - s[1] - tr.vector[1]);
                if dx == 0.0 && dy == 0.0 {
                    continue;
                }
                let v = kernel_apply(kernel, dx, dy, &sys.strengths, j, normals.map(|n| n[j]));
                acc[0] += v[0];
                acc[1] += v[1];
            }
        }
        u.copy_from_slice(&acc[..nc]);
    });
    out
}

/// Periodicity residuals of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub kernel: String,
    /// `‖u(t + e_i) - u(t)‖₂ / ‖u‖₂` for `e1` and, for doubly periodic cells, `e2`.
    pub directional: Vec<f64>,
    /// Targets per face.
    pub samples: usize,
    /// Root-sum-square of the directional residuals.
    pub total: f64,
    /// Plain sum of the directional residuals.
    pub sum: f64,
}

impl ResidualReport {
    /// The larger of the two aggregates, used for pass/fail decisions.
    pub fn gate(&self) -> f64 {
        self.total.max(self.sum)
    }
}

/// Equispaced targets on the lower faces and their images on the opposite
/// faces: `(t, t + e_i)` for each periodic direction.
pub fn boundary_pairs(cell: &UnitCell<f64>, samples: usize) -> Vec<(Vec<Point<f64>>, Vec<Point<f64>>)> {
    let s = |k: usize| -0.5 + (k as f64 + 0.5) / samples as f64;
    let mut out = Vec::new();
    let left: Vec<_> = (0..samples).map(|k| cell.point(-0.5, s(k))).collect();
    let right: Vec<_> = left.iter().map(|p| [p[0] + cell.d, p[1]]).collect();
    out.push((left, right));
    if cell.periodicity == Periodicity::Doubly {
        let bottom: Vec<_> = (0..samples).map(|k| cell.point(s(k), -0.5)).collect();
        let top: Vec<_> = bottom.iter().map(|p| [p[0] + cell.xi, p[1] + cell.eta]).collect();
        out.push((bottom, top));
    }
    out
}

/// Relative l² periodicity residual of a field evaluated by `eval`, which
/// maps targets to `N_T × components` values.
pub fn periodicity_residual<F>(id: &str, eval: F, cell: &UnitCell<f64>, samples: usize) -> Result<ResidualReport>
where
    F: Fn(&[Point<f64>]) -> Result<Vec<Cx<f64>>>,
{
    if samples < 10 {
        return Err(Error::Config(format!("need at least 10 samples per face, got {samples}")));
    }
    let pairs = boundary_pairs(cell, samples);
    let mut all = Vec::new();
    for (a, b) in &pairs {
        all.extend_from_slice(a);
        all.extend_from_slice(b);
    }
    let u = eval(&all)?;
    let nc = u.len() / all.len().max(1);
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut directional = Vec::new();
    let mut off = 0;
    for _ in &pairs {
        let n = samples * nc;
        let (lo, hi) = (&u[off..off + n], &u[off + n..off + 2 * n]);
        let diff = lo.iter().zip(hi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        directional.push(if norm > 0.0 { diff / norm } else { 0.0 });
        off += 2 * n;
    }
    let total = directional.iter().map(|r| r * r).sum::<f64>().sqrt();
    let sum = directional.iter().sum();
    Ok(ResidualReport { kernel: id.to_string(), directional, samples, total, sum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::make_unit_cell;

    fn sys(src: Vec<Point<f64>>, q: Strengths<f64>, tgt: Vec<Point<f64>>) -> ParticleSystem<f64> {
        ParticleSystem::new(src, q, tgt).unwrap()
    }

    #[test]
    fn row_closed_forms_match_long_sums() {
        // Pairwise symmetric partial sums of the absolutely convergent pieces.
        let (d, x, y) = (1.3, 0.37, 0.21);
        let r = row(d, x, y);
        let (mut s2, mut x4, mut f, mut fp) = (0.0, 0.0, ZERO, ZERO);
        for m in -200000i64..=200000 {
            let dx = x - m as f64 * d;
            let q = dx * dx + y * y;
            s2 += 1.0 / q;
            x4 += dx / (q * q);
            let w = Cx::new(dx, y);
            f += w.inv();
            fp -= (w * w).inv();
        }
        // Tail Σ_{|m| > M} 1/(md)² ≈ 2/(d²(M + 1/2)).
        let s2 = s2 + 2.0 / (d * d * 200000.5);
        assert!((r.s2 - s2).abs() < 1e-9 * s2.abs(), "{} vs {}", r.s2, s2);
        assert!((r.x4 - x4).abs() < 1e-9);
        assert!((r.f - f).norm() < 1e-5);
        let fp = fp - 2.0 / (d * d * 200000.5);
        assert!((r.fp - fp).norm() < 1e-9, "{} vs {}", r.fp, fp);
        for l in 2..6 {
            let mut s = ZERO;
            for m in -20000i64..=20000 {
                s += Cx::new(x - m as f64 * d, y).inv().powu(l);
            }
            if l == 2 {
                s += 2.0 / (d * d * 20000.5);
            }
            let got = laplace_multipole_row(d, Cx::new(x, y), l);
            assert!((got - s).norm() < 1e-7, "l = {l}: {got} vs {s}");
        }
        assert!((laplace_multipole_row(d, Cx::new(x, y), 1) - r.f).norm() < 1e-14);
    }

    #[test]
    fn log_row_differences_match_sum() {
        let d = 1.0;
        let (a, b) = ((0.3, 0.4), (-0.2, 0.1));
        let exact = row(d, a.0, a.1).log - row(d, b.0, b.1).log;
        let mut s = 0.0;
        for m in -400000i64..=400000 {
            let md = m as f64 * d;
            s += 0.5 * (((a.0 - md) * (a.0 - md) + a.1 * a.1) / ((b.0 - md) * (b.0 - md) + b.1 * b.1)).ln();
        }
        assert!((exact - s).abs() < 1e-6);
    }

    #[test]
    fn zero_strengths_give_zero() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let s = sys(vec![[0.1, 0.2]], Strengths::Scalar(vec![0.0]), vec![[0.0, 0.0]]);
        let k = OracleKernel::Charge { pde: Pde::ModHelmholtz, beta: 1.0 };
        let u = brute_force_far(k, &cell, &s, None, 10, 1e-12).unwrap();
        assert_eq!(u[0], ZERO);
    }

    #[test]
    fn mhelm_certifies_at_sixty_shells() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let s = sys(vec![[0.1, 0.2], [-0.3, 0.1]], Strengths::Scalar(vec![1.0, 0.5]), vec![[0.0, 0.0]]);
        let k = OracleKernel::Charge { pde: Pde::ModHelmholtz, beta: 1.0 };
        assert!(brute_force_far(k, &cell, &s, None, 60, 1e-13).is_ok());
        assert!(matches!(brute_force_far(k, &cell, &s, None, 3, 1e-13), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn laplace_dipole_self_certifies() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let s = sys(vec![[0.0, 0.1], [0.0, -0.1]], Strengths::Scalar(vec![1.0, -1.0]), vec![[0.3, 0.2]]);
        let k = OracleKernel::Charge { pde: Pde::Poisson, beta: 0.0 };
        assert!(brute_force_far(k, &cell, &s, None, 300, 1e-10).is_ok());
    }

    #[test]
    fn periodic_test_field_has_tiny_residual() {
        let cell = make_unit_cell(1.0, 0.3, 0.8, Periodicity::Doubly).unwrap();
        // A finite Fourier series on the dual lattice.
        let f = |p: &[Point<f64>]| -> Result<Vec<Cx<f64>>> {
            Ok(p.iter()
                .map(|&q| {
                    let (x1, x2) = cell.coordinates(q);
                    Cx::new((2.0 * PI * x1).cos() + 0.3 * (2.0 * PI * (x1 + 2.0 * x2)).sin() + 0.1, 0.0)
                })
                .collect())
        };
        let r = periodicity_residual("fourier", f, &cell, 100).unwrap();
        assert!(r.gate() < 1e-14, "{r:?}");
        assert_eq!(r.directional.len(), 2);
    }

    #[test]
    fn residual_is_scale_invariant() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let src = vec![[0.1, 0.2], [-0.3, 0.1]];
        let k = OracleKernel::Charge { pde: Pde::ModHelmholtz, beta: 1.0 };
        let run = |scale: f64| {
            let eval = |t: &[Point<f64>]| -> Result<Vec<Cx<f64>>> {
                let s = sys(src.clone(), Strengths::Scalar(vec![scale, -0.5 * scale]), t.to_vec());
                Ok(near_field(k, &cell, &s, None))
            };
            periodicity_residual("mhelm", eval, &cell, 20).unwrap().total
        };
        let (a, b) = (run(1.0), run(1e3));
        assert!((a - b).abs() < 1e-12 * a);
        // Near field alone is far from periodic.
        assert!(a > 1e-9);
    }

    #[test]
    fn split_rows_match_closed_form() {
        assert!((zeta_even(1) - PI * PI / 6.0).abs() < 1e-15);
        assert!((zeta_even(2) - PI.powi(4) / 90.0).abs() < 1e-15);
        for &(x, y) in &[(0.3, 0.1), (0.05, 0.4), (2.3, 0.01), (-0.45, -0.3)] {
            let w = Cx::new(x, y);
            for l in 1..=5u32 {
                let full = laplace_multipole_row(1.0, w, l);
                let split = laplace_multipole_row_far(1.0, w, l, 1..=0);
                assert!((full - split).norm() < 1e-12 * full.norm().max(1.0), "{w} {l}");
                let mut cut = full;
                for m in -2..=2 {
                    cut -= (w - m as f64).powi(l as i32).inv();
                }
                let far = laplace_multipole_row_far(1.0, w, l, -2..=2);
                assert!((cut - far).norm() < 1e-12 * full.norm().max(1.0), "{w} {l}");
            }
        }
    }
}
