//! Directional far-field operators for the modified Helmholtz and Poisson
//! kernels, and the [`Periodizer`] that groups the parts of any kernel.
//!
//! Vertical (south/north) parts are Fourier series in `x` truncated at
//! `|m| ≤ M`; horizontal (west/east) parts discretize the Sommerfeld
//! integral in `λ` with a [`QuadratureRule`]. See [`crate::factorization`]
//! for the exponent conventions.

use crate::cell::{Periodicity, Strengths, UnitCell};
use crate::error::{Error, Result};
use crate::factorization::{
    assemble_horizontal, assemble_vertical, Density, Direction, Layout, NormalFactor, PlaneWaveFactorization,
    SpecialEntry,
};
use crate::kernels::Pde;
use crate::quadrature::{sommerfeld_rule, QuadratureRule};
use crate::scalar::{Cx, Point, Real};
use serde::{Deserialize, Serialize};

/// Quantity a periodizer produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Potential,
    Velocity,
    Pressure,
    /// Velocity of a double-layer (stresslet) density.
    DoubleLayer,
    /// Field of multipole sources of a fixed order.
    Multipole(u32),
}

/// All directional far-field parts of one kernel on one cell.
#[derive(Clone, Debug)]
pub struct Periodizer<T> {
    pub pde: Pde,
    pub beta: T,
    pub cell: UnitCell<T>,
    pub eps: f64,
    pub kind: FieldKind,
    pub parts: Vec<PlaneWaveFactorization<T>>,
    pub requires_neutrality: bool,
    /// Per-source unit normals of a double-layer periodizer.
    pub normals: Option<Vec<Point<T>>>,
}

impl<T: Real> Periodizer<T> {
    /// Output components per target.
    pub fn out_components(&self) -> usize {
        self.parts.first().map(|p| p.out_components).unwrap_or(match self.kind {
            FieldKind::Velocity | FieldKind::DoubleLayer => 2,
            _ => 1,
        })
    }

    /// Total rank over all parts.
    pub fn rank(&self) -> usize {
        self.parts.iter().map(|p| p.rank()).sum()
    }

    pub fn part(&self, direction: Direction) -> Option<&PlaneWaveFactorization<T>> {
        self.parts.iter().find(|p| p.direction == direction)
    }

    /// Whether the output is real (every kernel except the multipoles).
    pub fn is_real(&self) -> bool {
        self.parts.iter().all(|p| p.take_real_part)
    }

    /// Rejects strengths with a nonzero net sum when the kernel needs neutrality.
    pub fn check_neutrality(&self, strengths: &Strengths<T>) -> Result<()> {
        if !self.requires_neutrality {
            return Ok(());
        }
        let tol = T::epsilon().sqrt().f64() * 1e-2;
        let imb = strengths.relative_imbalance();
        if imb > tol {
            let net = strengths.net().iter().map(|z| z.norm().f64()).fold(0.0, f64::max);
            return Err(Error::NotNeutral(net));
        }
        Ok(())
    }

    pub(crate) fn check_normals(&self, n_sources: usize) -> Result<Option<&[Point<T>]>> {
        match &self.normals {
            Some(n) if n.len() != n_sources => Err(Error::LengthMismatch { expected: n.len(), got: n_sources }),
            Some(n) => Ok(Some(n.as_slice())),
            None => Ok(None),
        }
    }

    /// Far field at `targets`, every part applied directly. Returns
    /// `N_T × out_components` values; real kernels have zero imaginary parts.
    pub fn apply_direct(&self, sources: &[Point<T>], strengths: &Strengths<T>, targets: &[Point<T>]) -> Result<Vec<Cx<T>>> {
        self.check_neutrality(strengths)?;
        let normals = self.check_normals(sources.len())?;
        let nc = self.out_components();
        let mut out = vec![Cx::new(T::zero(), T::zero()); targets.len() * nc];
        if sources.is_empty() || targets.is_empty() {
            return Ok(out);
        }
        for part in &self.parts {
            let u = part.apply_direct(sources, strengths, normals, targets)?;
            for (o, v) in out.iter_mut().zip(u) {
                *o += v;
            }
        }
        if self.is_real() {
            for o in out.iter_mut() {
                o.im = T::zero();
            }
        }
        Ok(out)
    }
}

/// Number of Fourier modes `M` kept on each side of `m = 0`:
/// `M = ⌈(d/2πη) ln(1/((1 - e^{-2πη/d}) ε))⌉`.
pub fn truncation_order<T: Real>(cell: &UnitCell<T>, eps: f64) -> Result<i64> {
    if cell.periodicity != Periodicity::Doubly {
        return Err(Error::NotDoubly);
    }
    Ok(closed_form_order(cell.d.f64(), cell.eta.f64(), eps))
}

pub(crate) fn closed_form_order(d: f64, eta: f64, eps: f64) -> i64 {
    let r = 2.0 * std::f64::consts::PI * eta / d;
    let v = (d / (2.0 * std::f64::consts::PI * eta)) * (1.0 / (-(-r).exp_m1() * eps)).ln();
    v.ceil().max(0.0) as i64
}

/// Analytic bound on the south-kernel truncation error at order `M`:
/// `e^{-2π(M+1)η/d} / (2π(M+1)(1 - e^{-2π(M+1)η/d})(1 - e^{-2πη/d}))`.
pub fn truncation_tail_bound(d: f64, eta: f64, m: i64) -> f64 {
    let r = 2.0 * std::f64::consts::PI * eta / d;
    let k = (m + 1) as f64;
    (-r * k).exp() / (2.0 * std::f64::consts::PI * k * (-(-r * k).exp_m1()) * (-(-r).exp_m1()))
}

/// Order `M` when the densities grow like `e^{g(α)}` relative to the
/// charge case: the closed form plus enough modes to absorb the growth.
pub(crate) fn truncation_order_with_growth<T: Real>(
    cell: &UnitCell<T>,
    eps: f64,
    log_growth: impl Fn(f64) -> f64,
) -> Result<i64> {
    let m0 = truncation_order(cell, eps)?;
    let (d, eta) = (cell.d.f64(), cell.eta.f64());
    let rate = 2.0 * std::f64::consts::PI * eta / d;
    let mut m = m0;
    for _ in 0..50 {
        let alpha = 2.0 * std::f64::consts::PI * (m + 1) as f64 / d;
        let next = m0 + (log_growth(alpha).max(0.0) / rate).ceil() as i64;
        if next <= m {
            break;
        }
        m = next;
    }
    Ok(m)
}

/// `(m, α_m, κ_m)` for `|m| ≤ M`, with `κ_m = √(α_m² + β²)`.
pub(crate) fn vertical_modes<T: Real>(cell: &UnitCell<T>, beta: T, order: i64) -> Vec<(i64, T, T)> {
    let two_pi_d = T::c(2.0) * T::PI() / cell.d;
    (-order..=order)
        .map(|m| {
            let a = two_pi_d * T::n(m);
            (m, a, a.hypot(beta))
        })
        .collect()
}

fn scalar_layout(weighted: bool) -> Layout {
    Layout {
        base_in: vec![(0, NormalFactor::One)],
        base_out: vec![0],
        out_components: 1,
        in_components: 1,
        weighted,
    }
}

fn scalar_density<T: Real>(a: T) -> Density<T> {
    Density { a: vec![Cx::new(a, T::zero())], b: None }
}

pub(crate) fn check_modified<T: Real>(pde: Pde, beta: T) -> Result<()> {
    if pde.is_modified() && !(beta > T::zero() && beta.is_finite()) {
        return Err(Error::MissingBeta);
    }
    Ok(())
}

pub(crate) fn check_rule<T: Real>(rule: &QuadratureRule<T>, pde: Pde, beta: T, cell: &UnitCell<T>, eps: f64) -> Result<()> {
    if rule.meta.pde != pde || !rule.meta.matches(beta, cell, eps) {
        return Err(Error::RuleMismatch(format!(
            "rule for {} beta={} eps={:e}, operator needs {} beta={} eps={:e}",
            rule.meta.pde.name(),
            rule.meta.beta,
            rule.meta.eps,
            pde.name(),
            beta,
            eps
        )));
    }
    Ok(())
}

/// `-1/(2dη)` coupling of the `y`-weighted channels of the `m = 0` mode.
pub(crate) fn m0_coefficient<T: Real>(cell: &UnitCell<T>) -> T {
    -T::one() / (T::c(2.0) * cell.d * cell.eta)
}

/// South or north part for the charge kernels.
pub fn build_vertical<T: Real>(
    pde: Pde,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    direction: Direction,
) -> Result<PlaneWaveFactorization<T>> {
    if !direction.is_vertical() {
        return Err(Error::Config(format!("{direction:?} is not a vertical direction")));
    }
    let order = truncation_order(cell, eps)?;
    let two_d = T::c(2.0) * cell.d;
    match pde {
        Pde::ModHelmholtz => {
            check_modified(pde, beta)?;
            let modes: Vec<_> = vertical_modes(cell, beta, order)
                .into_iter()
                .map(|(m, a, k)| (m, a, k, scalar_density(T::one() / (two_d * k))))
                .collect();
            assemble_vertical(cell, direction, scalar_layout(false), &modes, &[], true, T::one())
        }
        Pde::Poisson => {
            let modes: Vec<_> = vertical_modes(cell, T::zero(), order)
                .into_iter()
                .filter(|&(m, _, _)| m != 0)
                .map(|(m, a, k)| (m, a, k, scalar_density(T::one() / (two_d * k))))
                .collect();
            let special: [SpecialEntry<T>; 1] = [(0, true, 0, true, Cx::new(m0_coefficient(cell), T::zero()))];
            assemble_vertical(cell, direction, scalar_layout(true), &modes, &special, true, T::one())
        }
        _ => Err(Error::Unsupported(format!("{} is not a scalar kernel", pde.name()))),
    }
}

/// Nodes `(index, λ, κ, weight)` of a real-kernel rule, each weight doubled
/// because the negative half-line is folded in by taking real parts.
pub(crate) fn folded_nodes<T: Real>(rule: &QuadratureRule<T>, beta: T) -> Vec<(i64, T, T, T)> {
    rule.lambdas
        .iter()
        .zip(&rule.weights)
        .enumerate()
        .map(|(n, (&l, &w))| (n as i64, l, l.hypot(beta), w * T::c(2.0)))
        .collect()
}

/// West or east part for the charge kernels.
pub fn build_horizontal<T: Real>(
    pde: Pde,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    direction: Direction,
    rule: &QuadratureRule<T>,
) -> Result<PlaneWaveFactorization<T>> {
    if direction.is_vertical() {
        return Err(Error::Config(format!("{direction:?} is not a horizontal direction")));
    }
    check_modified(pde, beta)?;
    let beta_eff = if pde == Pde::Poisson { T::zero() } else { beta };
    check_rule(rule, pde, beta_eff, cell, eps)?;
    if !matches!(pde, Pde::Poisson | Pde::ModHelmholtz) {
        return Err(Error::Unsupported(format!("{} is not a scalar kernel", pde.name())));
    }
    let four_pi = T::c(4.0) * T::PI();
    let nodes: Vec<_> = folded_nodes(rule, beta_eff)
        .into_iter()
        .map(|(n, l, k, w)| (n, l, k, w, scalar_density(T::one() / (four_pi * k))))
        .collect();
    Ok(assemble_horizontal(cell, direction, scalar_layout(false), &nodes, true, false, T::one()))
}

/// Directions present for a periodicity, vertical ones first.
pub fn directions(periodicity: Periodicity) -> &'static [Direction] {
    match periodicity {
        Periodicity::Singly => &[Direction::West, Direction::East],
        Periodicity::Doubly => &[Direction::South, Direction::North, Direction::West, Direction::East],
    }
}

/// Builds every directional part of the Poisson or modified Helmholtz kernel.
pub fn assemble<T: Real>(pde: Pde, beta: T, cell: &UnitCell<T>, eps: f64) -> Result<Periodizer<T>> {
    check_modified(pde, beta)?;
    let beta = if pde == Pde::Poisson { T::zero() } else { beta };
    let rule = sommerfeld_rule(pde, beta, cell, eps)?;
    let mut parts = Vec::new();
    for &dir in directions(cell.periodicity) {
        parts.push(if dir.is_vertical() {
            build_vertical(pde, beta, cell, eps, dir)?
        } else {
            build_horizontal(pde, beta, cell, eps, dir, &rule)?
        });
    }
    Ok(Periodizer {
        pde,
        beta,
        cell: *cell,
        eps,
        kind: FieldKind::Potential,
        parts,
        requires_neutrality: pde.needs_neutrality(),
        normals: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::make_unit_cell;
    use crate::factorization::materialize;
    use crate::kernels::{laplace_raw, mod_helmholtz_raw};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(cell: &UnitCell<f64>, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
        (0..n).map(|_| cell.point(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect()
    }

    #[test]
    fn closed_form_examples() {
        let sq = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        assert_eq!(truncation_order(&sq, 1e-12).unwrap(), 5);
        let wide = make_unit_cell(10.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        assert_eq!(truncation_order(&wide, 1e-12).unwrap(), 46);
        let s = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Singly).unwrap();
        assert_eq!(truncation_order(&s, 1e-12), Err(Error::NotDoubly));
    }

    #[test]
    fn tail_bound_below_eps() {
        for (d, eta, eps) in [(1.0, 1.0, 1e-12), (10.0, 1.0, 1e-6), (1.0, 0.001, 1e-9)] {
            let m = closed_form_order(d, eta, eps);
            assert!(truncation_tail_bound(d, eta, m) <= eps);
        }
    }

    /// Brute-force south sum `Σ_{n ≤ -2, |m| ≤ 60} G(t - s - l_mn)`.
    fn brute_south(cell: &UnitCell<f64>, beta: f64, t: [f64; 2], s: [f64; 2]) -> f64 {
        let mut acc = 0.0;
        for n in -60..=-2 {
            for m in -60..=60 {
                let l = cell.translation(m, n).vector;
                let r = (t[0] - s[0] - l[0]).hypot(t[1] - s[1] - l[1]);
                acc += mod_helmholtz_raw(beta, r);
            }
        }
        acc
    }

    #[test]
    fn mhelm_south_matches_lattice_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for cell in [
            make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap(),
            make_unit_cell(1.0, 0.3, 0.8, Periodicity::Doubly).unwrap(),
        ] {
            for dir in [Direction::South, Direction::North] {
                let part = build_vertical(Pde::ModHelmholtz, 1.0, &cell, 1e-12, dir).unwrap();
                let src = random_points(&cell, 4, &mut rng);
                let tgt = random_points(&cell, 20, &mut rng);
                let m = materialize(&part, &src, None, &tgt, 0, 0).unwrap();
                for (i, &t) in tgt.iter().enumerate() {
                    for (j, &s) in src.iter().enumerate() {
                        // North images of (t, s) are the south images of (-t, -s).
                        let want = match dir {
                            Direction::South => brute_south(&cell, 1.0, t, s),
                            _ => brute_south(&cell, 1.0, [-t[0], -t[1]], [-s[0], -s[1]]),
                        };
                        let got = m[i * src.len() + j];
                        assert!((got.re - want).abs() < 1e-12, "{dir:?} {} vs {}", got.re, want);
                        assert!(got.im.abs() < 1e-14);
                    }
                }
            }
        }
    }

    /// Row sum `Σ_{2 ≤ |m| ≤ 200} G(t - s - m d e1)`.
    fn brute_row(beta: f64, d: f64, t: [f64; 2], s: [f64; 2]) -> f64 {
        (2..=200)
            .flat_map(|m| [m, -m])
            .map(|m| mod_helmholtz_raw(beta, (t[0] - s[0] - m as f64 * d).hypot(t[1] - s[1])))
            .sum()
    }

    #[test]
    fn singly_west_east_match_row_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for eta in [1.0, 4.0] {
            let cell = make_unit_cell(1.0, 0.0, eta, Periodicity::Singly).unwrap();
            let p = assemble(Pde::ModHelmholtz, 1.0, &cell, 1e-12).unwrap();
            assert_eq!(p.parts.len(), 2);
            let src = random_points(&cell, 5, &mut rng);
            let q: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tgt = random_points(&cell, 20, &mut rng);
            let u = p.apply_direct(&src, &Strengths::Scalar(q.clone()), &tgt).unwrap();
            for (i, &t) in tgt.iter().enumerate() {
                let want: f64 = src.iter().zip(&q).map(|(&s, &qj)| qj * brute_row(1.0, 1.0, t, s)).sum();
                assert!((u[i].re - want).abs() < 1e-12, "{} vs {}", u[i].re, want);
            }
        }
    }

    #[test]
    fn west_at_ts_equals_east_at_st() {
        let cell = make_unit_cell(1.0, 0.4, 0.7, Periodicity::Doubly).unwrap();
        let rule = sommerfeld_rule(Pde::ModHelmholtz, 1.0, &cell, 1e-10).unwrap();
        let w = build_horizontal(Pde::ModHelmholtz, 1.0, &cell, 1e-10, Direction::West, &rule).unwrap();
        let e = build_horizontal(Pde::ModHelmholtz, 1.0, &cell, 1e-10, Direction::East, &rule).unwrap();
        let pts: [[f64; 2]; 3] = [[0.1, 0.2], [-0.3, 0.05], [0.35, -0.3]];
        let mw = materialize(&w, &pts, None, &pts, 0, 0).unwrap();
        let me = materialize(&e, &pts, None, &pts, 0, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((mw[i * 3 + j].re - me[j * 3 + i].re).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn large_beta_gives_zero_horizontal_operator() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let p = assemble(Pde::ModHelmholtz, 60.0, &cell, 1e-6).unwrap();
        let w = p.part(Direction::West).unwrap();
        assert_eq!(w.rank(), 0);
        let u = w.apply_direct(&[[0.1, 0.1]], &Strengths::Scalar(vec![1.0]), None, &[[0.0, 0.0]]).unwrap();
        assert_eq!(u[0], Cx::new(0.0, 0.0));
    }

    #[test]
    fn beta_zero_mhelm_is_rejected() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        assert_eq!(assemble(Pde::ModHelmholtz, 0.0, &cell, 1e-9).unwrap_err(), Error::MissingBeta);
    }

    #[test]
    fn poisson_needs_neutral_charges() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let p = assemble(Pde::Poisson, 0.0, &cell, 1e-9).unwrap();
        let err = p.apply_direct(&[[0.0, 0.0]], &Strengths::Scalar(vec![1.0]), &[[0.1, 0.1]]);
        assert!(matches!(err, Err(Error::NotNeutral(_))));
        let v = p.part(Direction::South).unwrap();
        assert!(!v.mode_index.contains(&0));
        assert_eq!(v.special_m0.len(), 1);
    }

    /// Poisson far field vs the β → 0 modified Helmholtz far field, on
    /// differences between targets (the two differ by a gauge constant).
    #[test]
    fn poisson_is_small_beta_limit() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let src: [[f64; 2]; 2] = [[0.0, 0.1], [0.0, -0.1]];
        let q = Strengths::Scalar(vec![1.0, -1.0]);
        let tgt = [[0.3, 0.2], [-0.4, -0.1], [0.1, 0.45], [-0.2, 0.3]];
        let p = assemble(Pde::Poisson, 0.0, &cell, 1e-12).unwrap();
        let m = assemble(Pde::ModHelmholtz, 1e-6, &cell, 1e-12).unwrap();
        let up = p.apply_direct(&src, &q, &tgt).unwrap();
        let um = m.apply_direct(&src, &q, &tgt).unwrap();
        for i in 1..tgt.len() {
            let dp = up[i].re - up[0].re;
            let dm = um[i].re - um[0].re;
            assert!((dp - dm).abs() < 1e-5, "{dp} vs {dm}");
        }
    }

    /// Poisson far field against closed-form row sums
    /// `Σ_m log|z - md| = log|2 sin(πz/d)| + const`, on differences between
    /// targets. Rows are summed first, then paired as `±n`; the linear term
    /// `-y Σ q y'/(dη)` that makes the result periodic in `y` is added.
    #[test]
    fn poisson_matches_row_sums() {
        let cell = make_unit_cell(1.0, 0.2, 0.9, Periodicity::Doubly).unwrap();
        let p = assemble(Pde::Poisson, 0.0, &cell, 1e-12).unwrap();
        let src = [[0.1, 0.3], [-0.2, -0.25], [0.3, 0.0]];
        let q = [1.0, -0.4, -0.6];
        let tgt = [[0.0, 0.0], [0.2, -0.3], [-0.35, 0.4]];
        let u = p.apply_direct(&src, &Strengths::Scalar(q.to_vec()), &tgt).unwrap();
        let pi = std::f64::consts::PI;
        let field = |t: [f64; 2]| {
            let mut acc = 0.0;
            for n in -40i64..=40 {
                for (s, &qj) in src.iter().zip(&q) {
                    let l = cell.translation(0, n).vector;
                    let w = Cx::new(t[0] - s[0] - l[0], t[1] - s[1] - l[1]);
                    let row = -(2.0 * (w * (pi / cell.d)).sin()).norm().ln() / (2.0 * pi);
                    acc += qj * row;
                    if n.abs() <= 1 {
                        for m in -cell.m0..=cell.m0 {
                            let l = cell.translation(m, n).vector;
                            let (dx, dy) = (t[0] - s[0] - l[0], t[1] - s[1] - l[1]);
                            acc -= qj * laplace_raw(dx * dx + dy * dy);
                        }
                    }
                }
            }
            let dip: f64 = src.iter().zip(&q).map(|(s, qj)| s[1] * qj).sum();
            acc - t[1] * dip / (cell.d * cell.eta)
        };
        let f0 = field(tgt[0]);
        for i in 1..3 {
            let want = field(tgt[i]) - f0;
            let got = u[i].re - u[0].re;
            assert!((got - want).abs() < 1e-11, "{got} vs {want}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn order_matches_closed_form(d in 0.1f64..10.0, ar in 0.05f64..1.0, le in 3.0f64..13.0) {
            let eta = d * ar;
            let eps = 10f64.powf(-le);
            let cell = make_unit_cell(d, 0.0, eta, Periodicity::Doubly).unwrap();
            let m = truncation_order(&cell, eps).unwrap();
            let r = 2.0 * std::f64::consts::PI * eta / d;
            let exact = ((d / (2.0 * std::f64::consts::PI * eta)) * (1.0 / ((1.0 - (-r).exp()) * eps)).ln()).ceil();
            prop_assert!((m as f64 - exact).abs() <= 1.0);
            prop_assert!(truncation_tail_bound(d, eta, m) <= eps);
        }

        #[test]
        fn zero_charges_give_zero(x in -0.5f64..0.5, y in -0.5f64..0.5) {
            let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
            let p = assemble(Pde::ModHelmholtz, 1.0, &cell, 1e-8).unwrap();
            let u = p.apply_direct(&[[x, y]], &Strengths::Scalar(vec![0.0]), &[[y, x]]).unwrap();
            prop_assert_eq!(u[0], Cx::new(0.0, 0.0));
        }
    }
}
