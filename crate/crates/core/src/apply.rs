//! Applying periodizers: the direct right-to-left path, the NUFFT path, and
//! the total periodic field (near images summed directly plus the far part).
//!
//! The accelerated path never forms `L` or `R`. Along the decaying axis `ν`
//! the exponentials `e^{±κν}` are interpolated from `M_GL` Legendre nodes;
//! along the oscillatory axis `τ` the sums are Fourier sums, done by type 1
//! and type 2 transforms for the uniform vertical frequencies `2πm/d` and by
//! type 3 transforms for the quadrature nodes of the horizontal parts.

use crate::cell::{near_translations, ParticleSystem, Periodicity, Strengths, UnitCell};
use crate::error::{Error, Result};
use crate::factorization::{FactorKind, PlaneWaveFactorization};
use crate::kernels::{
    laplace_raw, mod_helmholtz_raw, mod_stokeslet_raw, multipole_laplace_raw, multipole_mh_raw, pressurelet_raw,
    stokeslet_raw, stresslet_raw, Pde,
};
use crate::multipole::build_multipole_periodizer;
use crate::nufft::{type3, Backend, NdftPlan};
use crate::periodizer::{assemble, FieldKind, Periodizer};
use crate::quadrature::{barycentric_grid, BarycentricGrid};
use crate::scalar::{Cx, Point, Real};
use crate::stokes::{assemble_velocity, build_pressure_periodizer, build_stresslet_periodizer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// How a factorization is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApplyPath {
    Direct,
    Accelerated,
    /// Decided per part by [`choose_path`].
    Auto,
}

/// Rank above which acceleration can pay off.
pub const RANK_THRESHOLD: usize = 256;
/// Combined source and target count above which acceleration can pay off.
pub const POINT_THRESHOLD: usize = 4096;

/// `3 + √8`, the Bernstein ellipse parameter of the scaled far-field kernels.
pub const RHO0: f64 = 5.828_427_124_746_19;

/// Whether the accelerated path exists for a part.
pub fn supports_acceleration<T: Real>(part: &PlaneWaveFactorization<T>, periodicity: Periodicity) -> bool {
    match part.kind {
        FactorKind::DiscreteVertical => true,
        // Doubly periodic east/west ranks are small.
        FactorKind::QuadratureHorizontal => periodicity == Periodicity::Singly,
    }
}

/// Resolves `requested` for one part. `Auto` accelerates iff the rank
/// exceeds [`RANK_THRESHOLD`] and `N_S + N_T` exceeds [`POINT_THRESHOLD`].
pub fn choose_path<T: Real>(
    part: &PlaneWaveFactorization<T>,
    periodicity: Periodicity,
    n_sources: usize,
    n_targets: usize,
    requested: ApplyPath,
) -> ApplyPath {
    if !supports_acceleration(part, periodicity) {
        return ApplyPath::Direct;
    }
    match requested {
        ApplyPath::Auto => {
            if part.rank() > RANK_THRESHOLD && n_sources + n_targets > POINT_THRESHOLD {
                ApplyPath::Accelerated
            } else {
                ApplyPath::Direct
            }
        }
        p => p,
    }
}

/// Legendre node count for a precision: 8 down to `1e-6`, 16 below.
pub fn grid_nodes(eps: f64) -> usize {
    if eps >= 1e-6 {
        8
    } else {
        16
    }
}

/// Smallest precision an `n`-node grid is certified for. Interpolation
/// errors scale like `ρ₀^{-n}` and the accelerated path is held to within
/// `10ε` of the direct one, so this is `ρ₀^{-n}/10`.
pub fn certified_precision(nodes: usize) -> f64 {
    RHO0.powi(-(nodes as i32)) / 10.0
}

fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::c(2.0) * T::PI();
    let w = x - two_pi * (x / two_pi).round();
    // Rounding can leave w a hair outside [-π, π].
    w.max(-T::PI()).min(T::PI())
}

/// Accelerated apply with the default grid for `eps`.
pub fn apply_accelerated<T: Real>(
    part: &PlaneWaveFactorization<T>,
    sources: &[Point<T>],
    strengths: &Strengths<T>,
    normals: Option<&[Point<T>]>,
    targets: &[Point<T>],
    eps: f64,
) -> Result<Vec<Cx<T>>> {
    apply_accelerated_with_grid(part, sources, strengths, normals, targets, eps, grid_nodes(eps))
}

/// Accelerated apply on an explicit `nodes`-point Legendre grid.
pub fn apply_accelerated_with_grid<T: Real>(
    part: &PlaneWaveFactorization<T>,
    sources: &[Point<T>],
    strengths: &Strengths<T>,
    normals: Option<&[Point<T>]>,
    targets: &[Point<T>],
    eps: f64,
    nodes: usize,
) -> Result<Vec<Cx<T>>> {
    if eps < certified_precision(nodes) {
        return Err(Error::GridTooCoarse { nodes, eps });
    }
    accelerated_on_grid(part, sources, strengths, normals, targets, eps, nodes)
}

#[allow(clippy::too_many_arguments)]
fn accelerated_on_grid<T: Real>(
    part: &PlaneWaveFactorization<T>,
    sources: &[Point<T>],
    strengths: &Strengths<T>,
    normals: Option<&[Point<T>]>,
    targets: &[Point<T>],
    eps: f64,
    nodes: usize,
) -> Result<Vec<Cx<T>>> {
    let vals = part.channel_values(sources, strengths, normals)?;
    let zero = Cx::new(T::zero(), T::zero());
    let nc = part.out_components;
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    let (n_in, n_out) = (part.n_in(), part.n_out());
    let h = part.half_extent;
    let grid = barycentric_grid(nodes, h)?;
    let src: Vec<(T, T)> = sources.iter().map(|&s| part.nu_tau(part.frame(s))).collect();
    let tgt: Vec<(T, T)> = targets.iter().map(|&t| part.nu_tau(part.frame(t))).collect();
    let gs = interpolation_weights(&grid, &src)?;
    let gt = interpolation_weights(&grid, &tgt)?;
    let tol = (eps / 3.0).max(crate::nufft::TOLERANCE_RANGE.0);

    let spectral = Spectral::new(part, &src, &tgt, tol)?;

    // Anterpolation: moments per grid line, then the e^{κ(ȳ - h)} weights.
    let rank = part.rank();
    let mut moments = vec![zero; rank * n_in];
    for c in 0..n_in {
        let lines: Vec<Vec<Cx<T>>> = (0..nodes)
            .into_par_iter()
            .map(|g| {
                let coeffs: Vec<Cx<T>> = (0..src.len()).map(|j| vals[j * n_in + c] * gs[j * nodes + g]).collect();
                spectral.forward(&coeffs)
            })
            .collect::<Result<_>>()?;
        for k in 0..rank {
            let kappa = part.decays[k];
            let mut acc = zero;
            for (g, line) in lines.iter().enumerate() {
                acc += line[k] * (kappa * (grid.nodes[g] - h)).exp();
            }
            moments[k * n_in + c] = acc;
        }
    }
    let mut totals = vec![zero; n_in];
    for j in 0..src.len() {
        for c in 0..n_in {
            totals[c] += vals[j * n_in + c];
        }
    }
    let (v, v0) = part.diagonal_multiply(&moments, &totals);

    // Evaluation: one backward transform per grid line and output channel.
    let mut acc: Vec<Cx<T>> = (0..tgt.len()).flat_map(|_| v0.iter().copied()).collect();
    for o in 0..n_out {
        let lines: Vec<Vec<Cx<T>>> = (0..nodes)
            .into_par_iter()
            .map(|g| {
                let coeffs: Vec<Cx<T>> =
                    (0..rank).map(|k| v[k * n_out + o] * (-part.decays[k] * (grid.nodes[g] + h)).exp()).collect();
                spectral.backward(&coeffs)
            })
            .collect::<Result<_>>()?;
        for (i, a) in acc.chunks_mut(n_out).enumerate() {
            for (g, line) in lines.iter().enumerate() {
                a[o] += line[i] * gt[i * nodes + g];
            }
        }
    }
    let mut out = vec![zero; targets.len() * nc];
    for (i, &t) in targets.iter().enumerate() {
        part.finish_target(t, &acc[i * n_out..(i + 1) * n_out], &mut out[i * nc..(i + 1) * nc]);
    }
    Ok(out)
}

fn interpolation_weights<T: Real>(grid: &BarycentricGrid<T>, pts: &[(T, T)]) -> Result<Vec<T>> {
    let n = grid.len();
    let slack = grid.halfwidth * (T::one() + T::c(1e-12));
    let mut out = vec![T::zero(); pts.len() * n];
    for (i, &(nu, _)) in pts.iter().enumerate() {
        if !(nu.abs() <= slack) {
            return Err(Error::OutOfInterval { t: nu.f64(), half: grid.halfwidth.f64() });
        }
        grid.coeffs_into(nu.max(-grid.halfwidth).min(grid.halfwidth), &mut out[i * n..(i + 1) * n]);
    }
    Ok(out)
}

/// Fourier sums along `τ` for one part.
enum Spectral<'a, T: Real> {
    /// Uniform frequencies `2πm/d`: type 1 at the sources, type 2 at the targets.
    Uniform { src: NdftPlan<T>, tgt: NdftPlan<T>, order: usize, index: Vec<usize> },
    /// Quadrature frequencies: type 3 both ways.
    Nonuniform { part: &'a PlaneWaveFactorization<T>, src_tau: Vec<T>, tgt_tau: Vec<T>, tol: f64 },
}

impl<'a, T: Real> Spectral<'a, T> {
    fn new(part: &'a PlaneWaveFactorization<T>, src: &[(T, T)], tgt: &[(T, T)], tol: f64) -> Result<Self> {
        match part.kind {
            FactorKind::DiscreteVertical => {
                let order = part.mode_index.iter().map(|m| m.unsigned_abs() as usize).max().unwrap_or(0);
                let index = part.mode_index.iter().map(|&m| (m + order as i64) as usize).collect();
                // α_m = 2πm/d, so e^{iα_m τ} = e^{imθ} with θ = 2πτ/d wrapped.
                let period = freq_period(part)?;
                let phase = |tau: T| wrap_phase(tau * period);
                let sp = src.iter().map(|&(_, t)| phase(t)).collect();
                // Targets enter with e^{+imθ}; type 2 carries e^{-imx}.
                let tp = tgt.iter().map(|&(_, t)| -phase(t)).collect();
                Ok(Spectral::Uniform {
                    src: NdftPlan::new(sp, order, tol, Backend::Accelerated)?,
                    tgt: NdftPlan::new(tp, order, tol, Backend::Accelerated)?,
                    order,
                    index,
                })
            }
            FactorKind::QuadratureHorizontal => Ok(Spectral::Nonuniform {
                part,
                src_tau: src.iter().map(|p| p.1).collect(),
                tgt_tau: tgt.iter().map(|p| p.1).collect(),
                tol,
            }),
        }
    }

    /// `Σ_j c_j e^{-iω_k τ_j}` for every mode `k`.
    fn forward(&self, coeffs: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        match self {
            Spectral::Uniform { src, order, index, .. } => {
                let f = src.type1(coeffs)?;
                // e^{-imθ} is entry -m of the type 1 output.
                Ok(index.iter().map(|&i| f[2 * order - i]).collect())
            }
            Spectral::Nonuniform { part, src_tau, tol, .. } => {
                let neg: Vec<T> = part.freqs.iter().map(|&w| -w).collect();
                type3(src_tau, coeffs, &neg, *tol, Backend::Accelerated)
            }
        }
    }

    /// `Σ_k F_k e^{iω_k τ_t}` for every target.
    fn backward(&self, modes: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        match self {
            Spectral::Uniform { tgt, order, index, .. } => {
                let mut f = vec![Cx::new(T::zero(), T::zero()); 2 * order + 1];
                for (&i, &m) in index.iter().zip(modes) {
                    f[i] += m;
                }
                tgt.type2(&f)
            }
            Spectral::Nonuniform { part, tgt_tau, tol, .. } => type3(&part.freqs, modes, tgt_tau, *tol, Backend::Accelerated),
        }
    }
}

/// `2π/d` recovered from the stored frequencies and mode indices.
fn freq_period<T: Real>(part: &PlaneWaveFactorization<T>) -> Result<T> {
    part.mode_index
        .iter()
        .zip(&part.freqs)
        .find(|(&m, _)| m != 0)
        .map(|(&m, &w)| w / T::n(m))
        .ok_or_else(|| Error::Config("vertical part without nonzero modes".into()))
}

/// One part along the resolved path.
pub fn apply_part<T: Real>(
    part: &PlaneWaveFactorization<T>,
    periodicity: Periodicity,
    sources: &[Point<T>],
    strengths: &Strengths<T>,
    normals: Option<&[Point<T>]>,
    targets: &[Point<T>],
    eps: f64,
    path: ApplyPath,
) -> Result<Vec<Cx<T>>> {
    match choose_path(part, periodicity, sources.len(), targets.len(), path) {
        ApplyPath::Accelerated if part.rank() > 0 && !sources.is_empty() => {
            apply_accelerated(part, sources, strengths, normals, targets, eps)
        }
        _ => part.apply_direct(sources, strengths, normals, targets),
    }
}

/// Far field of a periodizer, each part along its resolved path.
pub fn apply_periodizer<T: Real>(
    p: &Periodizer<T>,
    sources: &[Point<T>],
    strengths: &Strengths<T>,
    targets: &[Point<T>],
    path: ApplyPath,
) -> Result<Vec<Cx<T>>> {
    p.check_neutrality(strengths)?;
    let normals = p.check_normals(sources.len())?;
    let nc = p.out_components();
    let mut out = vec![Cx::new(T::zero(), T::zero()); targets.len() * nc];
    if sources.is_empty() || targets.is_empty() {
        return Ok(out);
    }
    for part in &p.parts {
        let u = apply_part(part, p.cell.periodicity, sources, strengths, normals, targets, p.eps, path)?;
        for (o, v) in out.iter_mut().zip(u) {
            *o += v;
        }
    }
    if p.is_real() {
        out.iter_mut().for_each(|o| o.im = T::zero());
    }
    Ok(out)
}

/// Field produced by sources, as the free-space evaluator sees it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSpec<T> {
    pub pde: Pde,
    pub beta: T,
    pub kind: FieldKind,
}

impl<T: Real> FieldSpec<T> {
    pub fn out_components(&self) -> usize {
        match self.kind {
            FieldKind::Velocity | FieldKind::DoubleLayer => 2,
            _ => 1,
        }
    }
}

/// Free-space summation for the near images. A hierarchical evaluator can
/// replace [`DirectSum`] without changing any caller.
pub trait FreeSpaceEvaluator<T: Real>: Sync {
    /// Adds `Σ_j G(t - s_j) q_j` into `out` (`N_T × out_components`),
    /// skipping pairs with `t = s_j` exactly.
    fn accumulate(
        &self,
        field: &FieldSpec<T>,
        sources: &[Point<T>],
        strengths: &Strengths<T>,
        normals: Option<&[Point<T>]>,
        targets: &[Point<T>],
        out: &mut [Cx<T>],
    ) -> Result<()>;
}

/// `O(N_S N_T)` direct summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirectSum;

impl<T: Real> FreeSpaceEvaluator<T> for DirectSum {
    fn accumulate(
        &self,
        field: &FieldSpec<T>,
        sources: &[Point<T>],
        strengths: &Strengths<T>,
        normals: Option<&[Point<T>]>,
        targets: &[Point<T>],
        out: &mut [Cx<T>],
    ) -> Result<()> {
        let nc = field.out_components();
        if out.len() != targets.len() * nc {
            return Err(Error::LengthMismatch { expected: targets.len() * nc, got: out.len() });
        }
        if strengths.len() != sources.len() {
            return Err(Error::LengthMismatch { expected: sources.len(), got: strengths.len() });
        }
        if field.kind == FieldKind::DoubleLayer && normals.map(|n| n.len()) != Some(sources.len()) {
            return Err(Error::DimensionMismatch("double-layer sources need one normal each".into()));
        }
        out.par_chunks_mut(nc).zip(targets.par_iter()).for_each(|(u, &t)| {
            for (j, &s) in sources.iter().enumerate() {
                let (dx, dy) = (t[0] - s[0], t[1] - s[1]);
                if dx == T::zero() && dy == T::zero() {
                    continue;
                }
                let q = |c: usize| strengths.get(j, c);
                match field.kind {
                    FieldKind::Potential => {
                        let r2 = dx * dx + dy * dy;
                        let g = match field.pde {
                            Pde::Poisson => laplace_raw(r2),
                            _ => mod_helmholtz_raw(field.beta, r2.sqrt()),
                        };
                        u[0] += q(0) * g;
                    }
                    FieldKind::Velocity => {
                        let g = match field.pde {
                            Pde::Stokes => stokeslet_raw(dx, dy),
                            _ => mod_stokeslet_raw(field.beta, dx, dy),
                        };
                        u[0] += q(0) * g[0][0] + q(1) * g[0][1];
                        u[1] += q(0) * g[1][0] + q(1) * g[1][1];
                    }
                    FieldKind::Pressure => {
                        let p = pressurelet_raw(dx, dy);
                        u[0] += q(0) * p[0] + q(1) * p[1];
                    }
                    FieldKind::DoubleLayer => {
                        let n = normals.map(|n| n[j]).unwrap_or([T::zero(), T::zero()]);
                        let g = stresslet_raw(dx, dy, n);
                        u[0] += q(0) * g[0][0] + q(1) * g[0][1];
                        u[1] += q(0) * g[1][0] + q(1) * g[1][1];
                    }
                    FieldKind::Multipole(l) => {
                        u[0] += q(0)
                            * match field.pde {
                                Pde::Poisson => multipole_laplace_raw(l as i32, dx, dy),
                                _ => multipole_mh_raw(l as usize, field.beta, dx, dy),
                            };
                    }
                }
            }
        });
        Ok(())
    }
}

/// Builds the periodizer for a field.
pub fn build_periodizer<T: Real>(
    field: &FieldSpec<T>,
    cell: &UnitCell<T>,
    eps: f64,
    normals: Option<&[Point<T>]>,
) -> Result<Periodizer<T>> {
    match field.kind {
        FieldKind::Potential => assemble(field.pde, field.beta, cell, eps),
        FieldKind::Velocity => assemble_velocity(field.pde, field.beta, cell, eps),
        FieldKind::Pressure => build_pressure_periodizer(field.pde, cell, eps),
        FieldKind::DoubleLayer => {
            let n = normals.ok_or_else(|| Error::DimensionMismatch("double-layer periodizer needs normals".into()))?;
            build_stresslet_periodizer(cell, eps, n)
        }
        FieldKind::Multipole(l) => build_multipole_periodizer(field.pde, l, field.beta, cell, eps),
    }
}

/// Wall-clock split of a total-field evaluation, in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Building the periodizer (series, quadrature, diagonals).
    pub build: f64,
    /// Applying the periodizer.
    pub per: f64,
    /// Direct near-field summation.
    pub near: f64,
}

/// Near-image sum plus far field for a prebuilt periodizer.
pub fn total_field_with<T: Real, E: FreeSpaceEvaluator<T>>(
    p: &Periodizer<T>,
    system: &ParticleSystem<T>,
    path: ApplyPath,
    evaluator: &E,
) -> Result<(Vec<Cx<T>>, Timings)> {
    let field = FieldSpec { pde: p.pde, beta: p.beta, kind: p.kind };
    let t0 = Instant::now();
    let mut out = apply_periodizer(p, &system.sources, &system.strengths, &system.targets, path)?;
    let per = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let normals = p.normals.as_deref();
    let mut shifted = vec![[T::zero(); 2]; system.sources.len()];
    for tr in near_translations(&p.cell) {
        for (s, &src) in shifted.iter_mut().zip(&system.sources) {
            *s = [src[0] + tr.vector[0], src[1] + tr.vector[1]];
        }
        evaluator.accumulate(&field, &shifted, &system.strengths, normals, &system.targets, &mut out)?;
    }
    if p.is_real() {
        out.iter_mut().for_each(|o| o.im = T::zero());
    }
    let near = t1.elapsed().as_secs_f64();
    Ok((out, Timings { build: 0.0, per, near }))
}

/// Options for [`total_field`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOptions {
    pub path: ApplyPath,
    /// Also evaluate the pressure (Stokes and modified Stokes only).
    pub with_pressure: bool,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions { path: ApplyPath::Auto, with_pressure: false }
    }
}

/// Periodic field at the targets of `system`, with optional pressure.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalField<T> {
    pub values: Vec<Cx<T>>,
    pub pressure: Option<Vec<Cx<T>>>,
    pub timings: Timings,
    /// Rank of every part of the main periodizer.
    pub ranks: Vec<usize>,
}

/// Periodic potential (Poisson, modified Helmholtz) or velocity (Stokes,
/// modified Stokes) of a particle system, near images summed directly.
pub fn total_field<T: Real>(
    pde: Pde,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    system: &ParticleSystem<T>,
    options: FieldOptions,
) -> Result<TotalField<T>> {
    let kind = if pde.is_vector() { FieldKind::Velocity } else { FieldKind::Potential };
    let t0 = Instant::now();
    let p = build_periodizer(&FieldSpec { pde, beta, kind }, cell, eps, None)?;
    let build = t0.elapsed().as_secs_f64();
    let (values, mut timings) = total_field_with(&p, system, options.path, &DirectSum)?;
    timings.build = build;
    let pressure = if options.with_pressure {
        if !pde.is_vector() {
            return Err(Error::Unsupported(format!("no pressure for {}", pde.name())));
        }
        let q = build_pressure_periodizer(pde, cell, eps)?;
        Some(total_field_with(&q, system, options.path, &DirectSum)?.0)
    } else {
        None
    };
    Ok(TotalField { values, pressure, timings, ranks: p.parts.iter().map(|x| x.rank()).collect() })
}

/// Errors of barycentric interpolation in the target `y` of the south part,
/// one per node count in `nodes`: the part is evaluated directly on the grid
/// lines and at the targets, and the interpolant compared with the latter.
/// Errors are relative to the largest direct value.
pub fn interpolation_errors<T: Real>(
    part: &PlaneWaveFactorization<T>,
    sources: &[Point<T>],
    strengths: &Strengths<T>,
    targets: &[Point<T>],
    nodes: &[usize],
) -> Result<Vec<f64>> {
    let exact = part.apply_direct(sources, strengths, None, targets)?;
    let scale = exact.iter().map(|z| z.norm().f64()).fold(0.0, f64::max);
    let nc = part.out_components;
    let mut errs = Vec::with_capacity(nodes.len());
    for &n in nodes {
        let grid = barycentric_grid(n, part.half_extent)?;
        let lines: Vec<Point<T>> = targets.iter().flat_map(|t| grid.nodes.iter().map(move |&y| [t[0], y])).collect();
        let on_grid = part.apply_direct(sources, strengths, None, &lines)?;
        let mut g = vec![T::zero(); n];
        let mut err = 0.0f64;
        for (i, t) in targets.iter().enumerate() {
            grid.coeffs_into(t[1], &mut g);
            for c in 0..nc {
                let mut v = Cx::new(T::zero(), T::zero());
                for (k, &w) in g.iter().enumerate() {
                    v += on_grid[(i * n + k) * nc + c] * w;
                }
                err = err.max((v - exact[i * nc + c]).norm().f64());
            }
        }
        errs.push(if scale > 0.0 { err / scale } else { err });
    }
    Ok(errs)
}
