//! Channelized plane-wave factorizations `L · D · R` of one directional
//! far-field operator, and their direct right-to-left application.
//!
//! Every directional operator is written in a canonical frame in which the
//! image sources lie on the negative side of the normal axis `ν` (south:
//! `ν = y`, west: `ν = x`). Mode `k` has frequency `ω_k` along the tangential
//! axis `τ` and decay `κ_k` along `ν`:
//!
//! ```text
//! L_k(t) = exp(-κ_k (t_ν + h) + i ω_k t_τ)
//! R_k(s) = exp( κ_k (s_ν - h) - i ω_k s_τ)
//! ```
//!
//! with `h` the half-extent of the cell along `ν`, so that every stored
//! exponential has a non-positive real exponent. The north and east operators
//! are the south and west operators evaluated at `(-t, -s)` times the parity
//! of the kernel under `r → -r`.
//!
//! Strengths enter through input channels (strength component, optional
//! normal factor, optional positional weight) and results leave through
//! output channels (component, optional positional weight); the per-mode
//! diagonal is a small dense block between them. Positional weights carry the
//! `y`- or `x`-linear terms of the Stokes-type kernels and the `m = 0` terms
//! of the neutral kernels.

use crate::cell::{Periodicity, Strengths, UnitCell};
use crate::error::{Error, Result};
use crate::scalar::{cexp, cis, inv_one_minus_exp, Cx, Point, Real};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    South,
    North,
    West,
    East,
}

impl Direction {
    pub fn is_vertical(self) -> bool {
        matches!(self, Direction::South | Direction::North)
    }

    /// North and east are evaluated as 180° rotations of south and west.
    pub fn is_rotated(self) -> bool {
        matches!(self, Direction::North | Direction::East)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    /// Discrete Fourier modes `α_m = 2πm/d`.
    DiscreteVertical,
    /// Quadrature nodes of a Sommerfeld integral.
    QuadratureHorizontal,
}

/// Positional weight of a channel, in the (possibly rotated) Cartesian frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Weight {
    One,
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormalFactor {
    One,
    N1,
    N2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InChannel {
    pub comp: usize,
    pub normal: NormalFactor,
    pub weight: Weight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutChannel {
    pub comp: usize,
    pub weight: Weight,
}

/// One directional far-field operator.
#[derive(Clone, Debug)]
pub struct PlaneWaveFactorization<T> {
    pub direction: Direction,
    pub kind: FactorKind,
    /// `ω_k`: `α_m` (vertical) or `λ_n` (horizontal).
    pub freqs: Vec<T>,
    /// `κ_k`: `χ_m`, `|α_m|`, `√(λ_n² + β²)` or `|λ_n|`.
    pub decays: Vec<T>,
    /// Fourier index `m` of vertical modes; node index for horizontal ones.
    pub mode_index: Vec<i64>,
    /// Half-extent `h` of the cell along the normal axis.
    pub half_extent: T,
    pub in_channels: Vec<InChannel>,
    pub out_channels: Vec<OutChannel>,
    /// Number of output components (1 for potentials and pressure, 2 for velocity).
    pub out_components: usize,
    /// Number of strength components expected.
    pub in_components: usize,
    /// Row-major `n_out × n_in` block per mode.
    pub blocks: Vec<Cx<T>>,
    /// Mode-free term with `L = R = 1` (the `m = 0` terms of neutral kernels).
    pub special_m0: Vec<(usize, usize, Cx<T>)>,
    pub take_real_part: bool,
    /// Horizontal modes for negative `λ` are stored explicitly (complex kernels).
    pub pair_with_negative: bool,
    /// Kernel parity under `r → -r`, applied to rotated directions.
    pub parity: T,
    /// Nonzero `(out, in)` entries per mode.
    sparsity: Vec<Vec<(u16, u16)>>,
}

impl<T: Real> PlaneWaveFactorization<T> {
    pub fn rank(&self) -> usize {
        self.freqs.len()
    }

    pub fn n_in(&self) -> usize {
        self.in_channels.len()
    }

    pub fn n_out(&self) -> usize {
        self.out_channels.len()
    }

    /// Diagonal block of mode `k`.
    pub fn block(&self, k: usize) -> &[Cx<T>] {
        let s = self.n_in() * self.n_out();
        &self.blocks[k * s..(k + 1) * s]
    }

    pub fn needs_normals(&self) -> bool {
        self.in_channels.iter().any(|c| c.normal != NormalFactor::One)
    }

    /// Maps a point to the frame the canonical formulas are written in.
    #[inline]
    pub(crate) fn frame(&self, p: Point<T>) -> Point<T> {
        if self.direction.is_rotated() {
            [-p[0], -p[1]]
        } else {
            p
        }
    }

    /// `(ν, τ)` of a point already mapped by [`Self::frame`].
    #[inline]
    pub(crate) fn nu_tau(&self, p: Point<T>) -> (T, T) {
        if self.direction.is_vertical() {
            (p[1], p[0])
        } else {
            (p[0], p[1])
        }
    }

    #[inline]
    pub(crate) fn left(&self, k: usize, nu: T, tau: T) -> Cx<T> {
        let e = -self.decays[k] * (nu + self.half_extent);
        debug_assert!(e <= T::c(1e-10) * (T::one() + self.decays[k] * self.half_extent));
        cis(self.freqs[k] * tau) * e.exp()
    }

    #[inline]
    pub(crate) fn right(&self, k: usize, nu: T, tau: T) -> Cx<T> {
        let e = self.decays[k] * (nu - self.half_extent);
        debug_assert!(e <= T::c(1e-10) * (T::one() + self.decays[k] * self.half_extent));
        cis(-self.freqs[k] * tau) * e.exp()
    }

    /// Input-channel values, `N_S × n_in`, in the rotated frame.
    pub(crate) fn channel_values(
        &self,
        sources: &[Point<T>],
        strengths: &Strengths<T>,
        normals: Option<&[Point<T>]>,
    ) -> Result<Vec<Cx<T>>> {
        check_inputs(self, sources, strengths, normals)?;
        let n_in = self.n_in();
        let mut vals = vec![Cx::new(T::zero(), T::zero()); sources.len() * n_in];
        for (j, &s) in sources.iter().enumerate() {
            let p = self.frame(s);
            for (c, ch) in self.in_channels.iter().enumerate() {
                let mut v = strengths.get(j, ch.comp);
                v = v * match ch.normal {
                    NormalFactor::One => T::one(),
                    NormalFactor::N1 => normals.map(|n| n[j][0]).unwrap_or(T::zero()),
                    NormalFactor::N2 => normals.map(|n| n[j][1]).unwrap_or(T::zero()),
                };
                v = v * weight_value(ch.weight, p);
                vals[j * n_in + c] = v;
            }
        }
        Ok(vals)
    }

    /// Folds per-target output-channel accumulators into components.
    pub(crate) fn finish_target(&self, t: Point<T>, acc: &[Cx<T>], out: &mut [Cx<T>]) {
        let p = self.frame(t);
        for (o, ch) in self.out_channels.iter().enumerate() {
            out[ch.comp] += acc[o] * (weight_value(ch.weight, p) * self.parity_factor());
        }
    }

    #[inline]
    pub(crate) fn parity_factor(&self) -> T {
        if self.direction.is_rotated() {
            self.parity
        } else {
            T::one()
        }
    }

    /// `V_k = D_k S_k` for all modes, plus the special term.
    pub(crate) fn diagonal_multiply(&self, moments: &[Cx<T>], totals: &[Cx<T>]) -> (Vec<Cx<T>>, Vec<Cx<T>>) {
        let (n_in, n_out) = (self.n_in(), self.n_out());
        let mut v = vec![Cx::new(T::zero(), T::zero()); self.rank() * n_out];
        for k in 0..self.rank() {
            let b = self.block(k);
            for &(o, i) in &self.sparsity[k] {
                let (o, i) = (o as usize, i as usize);
                v[k * n_out + o] += b[o * n_in + i] * moments[k * n_in + i];
            }
        }
        let mut v0 = vec![Cx::new(T::zero(), T::zero()); n_out];
        for &(o, i, c) in &self.special_m0 {
            v0[o] += c * totals[i];
        }
        (v, v0)
    }

    /// Applies the operator right to left in `O(r (N_S + N_T))` operations.
    ///
    /// Returns `N_T × out_components` complex values; callers take the real
    /// part when [`Self::take_real_part`] is set.
    pub fn apply_direct(
        &self,
        sources: &[Point<T>],
        strengths: &Strengths<T>,
        normals: Option<&[Point<T>]>,
        targets: &[Point<T>],
    ) -> Result<Vec<Cx<T>>> {
        let vals = self.channel_values(sources, strengths, normals)?;
        let (n_in, n_out) = (self.n_in(), self.n_out());
        let coords: Vec<(T, T)> = sources.iter().map(|&s| self.nu_tau(self.frame(s))).collect();
        let zero = Cx::new(T::zero(), T::zero());

        let mut moments = vec![zero; self.rank() * n_in];
        moments.par_chunks_mut(n_in.max(1)).enumerate().for_each(|(k, m)| {
            let used = used_inputs(&self.sparsity[k], n_in);
            if used.is_empty() {
                return;
            }
            for (j, &(nu, tau)) in coords.iter().enumerate() {
                let r = self.right(k, nu, tau);
                let row = &vals[j * n_in..(j + 1) * n_in];
                for &c in &used {
                    m[c] += r * row[c];
                }
            }
        });
        let mut totals = vec![zero; n_in];
        for j in 0..sources.len() {
            for c in 0..n_in {
                totals[c] += vals[j * n_in + c];
            }
        }
        let (v, v0) = self.diagonal_multiply(&moments, &totals);

        let nc = self.out_components;
        let mut out = vec![zero; targets.len() * nc];
        out.par_chunks_mut(nc).zip(targets.par_iter()).for_each(|(u, &t)| {
            let (nu, tau) = self.nu_tau(self.frame(t));
            let mut acc = v0.clone();
            for k in 0..self.rank() {
                let l = self.left(k, nu, tau);
                for o in 0..n_out {
                    acc[o] += l * v[k * n_out + o];
                }
            }
            self.finish_target(t, &acc, u);
        });
        Ok(out)
    }
}

fn used_inputs(sp: &[(u16, u16)], n_in: usize) -> Vec<usize> {
    let mut used = vec![false; n_in];
    for &(_, i) in sp {
        used[i as usize] = true;
    }
    (0..n_in).filter(|&i| used[i]).collect()
}

#[inline]
fn weight_value<T: Real>(w: Weight, p: Point<T>) -> T {
    match w {
        Weight::One => T::one(),
        Weight::X => p[0],
        Weight::Y => p[1],
    }
}

fn check_inputs<T: Real>(
    part: &PlaneWaveFactorization<T>,
    sources: &[Point<T>],
    strengths: &Strengths<T>,
    normals: Option<&[Point<T>]>,
) -> Result<()> {
    if sources.len() != strengths.len() {
        return Err(Error::LengthMismatch { expected: sources.len(), got: strengths.len() });
    }
    if !sources.is_empty() && strengths.components() < part.in_components {
        return Err(Error::DimensionMismatch(format!(
            "operator needs {} strength components, got {}",
            part.in_components,
            strengths.components()
        )));
    }
    if part.needs_normals() {
        match normals {
            Some(n) if n.len() == sources.len() => {}
            Some(n) => return Err(Error::LengthMismatch { expected: sources.len(), got: n.len() }),
            None => return Err(Error::DimensionMismatch("operator needs one normal per source".into())),
        }
    }
    Ok(())
}

/// Spectral density `A + Z·B` of one mode, `Z` being the offset along the
/// normal axis. Blocks are row-major `n_out_base × n_in_base`.
#[derive(Clone, Debug)]
pub(crate) struct Density<T> {
    pub a: Vec<Cx<T>>,
    pub b: Option<Vec<Cx<T>>>,
}

/// Base channels before positional expansion.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub base_in: Vec<(usize, NormalFactor)>,
    pub base_out: Vec<usize>,
    pub out_components: usize,
    pub in_components: usize,
    /// Whether positional (`Z`-weighted) channels exist.
    pub weighted: bool,
}

impl Layout {
    fn channels(&self, w: Weight) -> (Vec<InChannel>, Vec<OutChannel>) {
        let mut ins = Vec::new();
        for &(comp, normal) in &self.base_in {
            ins.push(InChannel { comp, normal, weight: Weight::One });
            if self.weighted {
                ins.push(InChannel { comp, normal, weight: w });
            }
        }
        let mut outs = Vec::new();
        for &comp in &self.base_out {
            outs.push(OutChannel { comp, weight: Weight::One });
            if self.weighted {
                outs.push(OutChannel { comp, weight: w });
            }
        }
        (ins, outs)
    }

    fn stride(&self) -> usize {
        if self.weighted {
            2
        } else {
            1
        }
    }
}

/// Special-term entry: `(out base, out weighted, in base, in weighted, coefficient)`.
pub(crate) type SpecialEntry<T> = (usize, bool, usize, bool, Cx<T>);

/// Common construction shared by the vertical and horizontal builders.
struct Builder<T> {
    layout: Layout,
    n_in: usize,
    n_out: usize,
    freqs: Vec<T>,
    decays: Vec<T>,
    mode_index: Vec<i64>,
    blocks: Vec<Cx<T>>,
}

impl<T: Real> Builder<T> {
    fn new(layout: Layout) -> Self {
        let s = layout.stride();
        let n_in = layout.base_in.len() * s;
        let n_out = layout.base_out.len() * s;
        Self { layout, n_in, n_out, freqs: Vec::new(), decays: Vec::new(), mode_index: Vec::new(), blocks: Vec::new() }
    }

    /// Pushes one mode given the coefficients of `A` (`c_a`), of `B` in the
    /// unweighted entry (`c_b`) and of `B` in the weighted entries (`c_w`).
    fn push(&mut self, m: i64, freq: T, decay: T, dens: &Density<T>, c_a: Cx<T>, c_b: Cx<T>, c_w: Cx<T>) {
        let s = self.layout.stride();
        let nbi = self.layout.base_in.len();
        let zero = Cx::new(T::zero(), T::zero());
        let mut blk = vec![zero; self.n_in * self.n_out];
        for o in 0..self.layout.base_out.len() {
            for i in 0..nbi {
                let a = dens.a[o * nbi + i];
                let b = dens.b.as_ref().map(|b| b[o * nbi + i]).unwrap_or(zero);
                blk[(o * s) * self.n_in + i * s] = a * c_a + b * c_b;
                if self.layout.weighted {
                    blk[(o * s + 1) * self.n_in + i * s] = b * c_w;
                    blk[(o * s) * self.n_in + i * s + 1] = -b * c_w;
                }
            }
        }
        self.freqs.push(freq);
        self.decays.push(decay);
        self.mode_index.push(m);
        self.blocks.extend(blk);
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        direction: Direction,
        kind: FactorKind,
        half_extent: T,
        w: Weight,
        special: &[SpecialEntry<T>],
        take_real_part: bool,
        pair_with_negative: bool,
        parity: T,
    ) -> PlaneWaveFactorization<T> {
        let (in_channels, out_channels) = self.layout.channels(w);
        let s = self.layout.stride();
        let special_m0 = special
            .iter()
            .map(|&(o, ow, i, iw, c)| (o * s + usize::from(ow), i * s + usize::from(iw), c))
            .collect();
        let per = self.n_in * self.n_out;
        let sparsity = self
            .blocks
            .chunks(per.max(1))
            .map(|b| {
                let mut v = Vec::new();
                for o in 0..self.n_out {
                    for i in 0..self.n_in {
                        if b[o * self.n_in + i] != Cx::new(T::zero(), T::zero()) {
                            v.push((o as u16, i as u16));
                        }
                    }
                }
                v
            })
            .collect();
        PlaneWaveFactorization {
            direction,
            kind,
            freqs: self.freqs,
            decays: self.decays,
            mode_index: self.mode_index,
            half_extent,
            in_channels,
            out_channels,
            out_components: self.layout.out_components,
            in_components: self.layout.in_components,
            blocks: self.blocks,
            special_m0,
            take_real_part,
            pair_with_negative,
            parity,
            sparsity,
        }
    }
}

/// Vertical (south or north) operator from per-mode densities.
///
/// For mode `(α, κ)` the south images `n = -p`, `p ≥ 2`, contribute
/// `e^{iα(x-x')} e^{-κ(y-y')} Σ_p e^{-pQ}(A + (y - y' + pη)B)` with
/// `Q = κη - iαξ`; the geometric sums are done in closed form.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_vertical<T: Real>(
    cell: &UnitCell<T>,
    direction: Direction,
    layout: Layout,
    modes: &[(i64, T, T, Density<T>)],
    special: &[SpecialEntry<T>],
    take_real_part: bool,
    parity: T,
) -> Result<PlaneWaveFactorization<T>> {
    if cell.periodicity != Periodicity::Doubly {
        return Err(Error::NotDoubly);
    }
    debug_assert!(direction.is_vertical());
    let eta = cell.eta;
    let xi = cell.xi;
    let mut b = Builder::new(layout);
    for (m, alpha, kappa, dens) in modes {
        let (alpha, kappa) = (*alpha, *kappa);
        // e^{-Q}, 1 - e^{-Q} without cancellation, and the shifted sums
        // G0 e^{κη} = e^{-κη + 2iαξ}/(1 - e^{-Q}), G1 e^{κη} = G0 e^{κη}(2 - e^{-Q})/(1 - e^{-Q}).
        let phase = alpha * xi;
        let emq = cis(phase) * (-kappa * eta).exp();
        let one_minus = if phase == T::zero() {
            Cx::new(-(-kappa * eta).exp_m1(), T::zero())
        } else {
            Cx::new(T::one(), T::zero()) - emq
        };
        let g0 = cexp(Cx::new(-kappa * eta, T::c(2.0) * phase)) / one_minus;
        let g1 = g0 * (Cx::new(T::c(2.0), T::zero()) - emq) / one_minus;
        let c_a = g0;
        let c_b = g1 * eta;
        b.push(*m, alpha, kappa, dens, c_a, c_b, g0);
    }
    Ok(b.finish(
        direction,
        FactorKind::DiscreteVertical,
        eta * T::c(0.5),
        Weight::Y,
        special,
        take_real_part,
        false,
        parity,
    ))
}

/// Horizontal (west or east) operator from per-node densities.
///
/// The west images `k ≥ K = m0 + 1`, `n ∈ {-1, 0, 1}` (doubly) or `n = 0`
/// (singly) sit at offset `X = x - x' + kd - nξ`, `Y = y - y' - nη`. Each
/// node `(ω, κ, w)` contributes `w e^{-κX + iωY}(A + X·B)`; the sum over `k`
/// is geometric and done in closed form.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_horizontal<T: Real>(
    cell: &UnitCell<T>,
    direction: Direction,
    layout: Layout,
    nodes: &[(i64, T, T, T, Density<T>)],
    take_real_part: bool,
    pair_with_negative: bool,
    parity: T,
) -> PlaneWaveFactorization<T> {
    debug_assert!(!direction.is_vertical());
    let d = cell.d;
    let xi = cell.xi;
    let eta = cell.eta;
    let hx = cell.half_width();
    let kk = T::n(cell.m0 + 1);
    let rows: &[i64] = match cell.periodicity {
        Periodicity::Singly => &[0],
        Periodicity::Doubly => &[-1, 0, 1],
    };
    let mut b = Builder::new(layout);
    for (idx, omega, kappa, w, dens) in nodes {
        let (omega, kappa, w) = (*omega, *kappa, *w);
        let inv = inv_one_minus_exp(kappa * d);
        // T1/T0 = (K - (K-1)e^{-κd})/(1 - e^{-κd}).
        let r1 = (kk - (kk - T::one()) * (-kappa * d).exp()) * inv;
        let mut c_a = Cx::new(T::zero(), T::zero());
        let mut c_b = c_a;
        for &n in rows {
            let nf = T::n(n);
            let e = cexp(Cx::new(kappa * (T::c(2.0) * hx - kk * d + nf * xi), -omega * nf * eta)) * (inv * w);
            c_a += e;
            c_b += e * (d * r1 - nf * xi);
        }
        b.push(*idx, omega, kappa, dens, c_a, c_b, c_a);
    }
    b.finish(
        direction,
        FactorKind::QuadratureHorizontal,
        hx,
        Weight::X,
        &[],
        take_real_part,
        pair_with_negative,
        parity,
    )
}

/// Dense `N_T × N_S` matrix of one output/input component pair, by applying
/// the operator to unit strengths. Used by tests and small diagnostics.
pub fn materialize<T: Real>(
    part: &PlaneWaveFactorization<T>,
    sources: &[Point<T>],
    normals: Option<&[Point<T>]>,
    targets: &[Point<T>],
    out_comp: usize,
    in_comp: usize,
) -> Result<Vec<Cx<T>>> {
    let mut m = vec![Cx::new(T::zero(), T::zero()); targets.len() * sources.len()];
    for (j, &s) in sources.iter().enumerate() {
        let mut q = [T::zero(); 2];
        q[in_comp] = T::one();
        let st = if part.in_components == 2 { Strengths::Vector(vec![q]) } else { Strengths::Scalar(vec![T::one()]) };
        let nj = normals.map(|n| vec![n[j]]);
        let u = part.apply_direct(&[s], &st, nj.as_deref(), targets)?;
        for l in 0..targets.len() {
            m[l * sources.len() + j] = u[l * part.out_components + out_comp];
        }
    }
    Ok(m)
}
