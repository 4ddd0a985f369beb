//! Far-field operators for Stokes-type kernels: the modified Stokeslet,
//! the Stokeslet, the pressurelet and the double-layer (stresslet) kernel.
//!
//! Velocity kernels act on 2-vector forces through 2×2 spectral blocks. The
//! Stokeslet blocks have the form `e^{-κZ}(A + Z·B)` in the offset `Z` along
//! the normal axis; the `Z·B` term is carried by `y`- (or `x`-) weighted
//! channels. The modified Stokeslet is a difference of a `χ`-family and a
//! `|α|`-family of pure exponentials, stacked in one factorization.

use crate::cell::UnitCell;
use crate::error::{Error, Result};
use crate::factorization::{
    assemble_horizontal, assemble_vertical, Density, Direction, Layout, NormalFactor, PlaneWaveFactorization,
    SpecialEntry,
};
use crate::kernels::Pde;
use crate::periodizer::{
    check_modified, check_rule, directions, folded_nodes, m0_coefficient, truncation_order_with_growth,
    vertical_modes, FieldKind, Periodizer,
};
use crate::quadrature::{sommerfeld_rule, sommerfeld_rule_with_growth, OrderGrowth, QuadratureRule};
use crate::scalar::{Cx, Point, Real};

fn velocity_layout(weighted: bool) -> Layout {
    Layout {
        base_in: vec![(0, NormalFactor::One), (1, NormalFactor::One)],
        base_out: vec![0, 1],
        out_components: 2,
        in_components: 2,
        weighted,
    }
}

fn pressure_layout() -> Layout {
    Layout {
        base_in: vec![(0, NormalFactor::One), (1, NormalFactor::One)],
        base_out: vec![0],
        out_components: 1,
        in_components: 2,
        weighted: true,
    }
}

/// Inputs `n_a μ_b`, base index `2a + b`.
fn stresslet_layout() -> Layout {
    Layout {
        base_in: vec![(0, NormalFactor::N1), (1, NormalFactor::N1), (0, NormalFactor::N2), (1, NormalFactor::N2)],
        base_out: vec![0, 1],
        out_components: 2,
        in_components: 2,
        weighted: true,
    }
}

fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Cx::new(re, im)
}

fn re<T: Real>(v: T) -> Cx<T> {
    Cx::new(v, T::zero())
}

fn sgn<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

fn log_growth_linear(eta: f64) -> impl Fn(f64) -> f64 {
    move |a| (1.0 + 2.0 * a * eta).ln()
}

/// Spectral pieces of the Stokeslet for one mode: `(A, B, A_L)` with `A_L`
/// the Laplace density, used by the stresslet.
struct StokesMode<T> {
    a: [[Cx<T>; 2]; 2],
    b: [[Cx<T>; 2]; 2],
    a_laplace: Cx<T>,
}

fn stokes_vertical_mode<T: Real>(d: T, alpha: T) -> StokesMode<T> {
    let k = alpha.abs();
    let s = sgn(alpha);
    let a0 = T::one() / (T::c(4.0) * d * k);
    let b0 = -T::one() / (T::c(4.0) * d);
    let z = T::zero();
    StokesMode {
        a: [[re(a0), re(z)], [re(z), re(a0)]],
        b: [[re(b0), cx(z, b0 * s)], [cx(z, b0 * s), re(-b0)]],
        a_laplace: re(T::one() / (T::c(2.0) * d * k)),
    }
}

fn stokes_horizontal_mode<T: Real>(lambda: T) -> StokesMode<T> {
    let k = lambda.abs();
    let s = sgn(lambda);
    let pi8 = T::c(8.0) * T::PI();
    let a0 = T::one() / (pi8 * k);
    let b0 = -T::one() / pi8;
    let z = T::zero();
    StokesMode {
        a: [[re(a0), re(z)], [re(z), re(a0)]],
        b: [[re(-b0), cx(z, b0 * s)], [cx(z, b0 * s), re(b0)]],
        a_laplace: re(T::one() / (T::c(4.0) * T::PI() * k)),
    }
}

fn flat2<T: Real>(m: [[Cx<T>; 2]; 2]) -> Vec<Cx<T>> {
    vec![m[0][0], m[0][1], m[1][0], m[1][1]]
}

/// Stresslet density from the Stokeslet one: source derivatives `c`, and
/// `bstar` the index of the normal axis (the only coordinate `Z` depends on).
fn stresslet_density<T: Real>(m: &StokesMode<T>, c: [Cx<T>; 2], bstar: usize) -> Density<T> {
    let zero = re(T::zero());
    let mut a = vec![zero; 8];
    let mut b = vec![zero; 8];
    for i in 0..2 {
        for aa in 0..2 {
            for bb in 0..2 {
                let col = 2 * aa + bb;
                let mut v = c[aa] * m.a[i][bb] + c[bb] * m.a[i][aa];
                if aa == bstar {
                    v -= m.b[i][bb];
                }
                if bb == bstar {
                    v -= m.b[i][aa];
                }
                if aa == bb {
                    v += c[i] * m.a_laplace;
                }
                a[i * 4 + col] = v;
                b[i * 4 + col] = c[aa] * m.b[i][bb] + c[bb] * m.b[i][aa];
            }
        }
    }
    Density { a, b: Some(b) }
}

/// South or north part of the modified Stokeslet.
pub fn build_mstokes_vertical<T: Real>(
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    direction: Direction,
) -> Result<PlaneWaveFactorization<T>> {
    check_modified(Pde::ModStokes, beta)?;
    vertical_direction(direction)?;
    let order = truncation_order_with_growth(cell, eps, log_growth_linear(cell.eta.f64()))?;
    let c = T::one() / (T::c(2.0) * cell.d * beta * beta);
    let mut modes = Vec::new();
    for (m, a, chi) in vertical_modes(cell, beta, order) {
        let dens = Density { a: vec![re(c * chi), cx(T::zero(), c * a), cx(T::zero(), c * a), re(-c * a * a / chi)], b: None };
        modes.push((m, a, chi, dens));
    }
    for (m, a, _) in vertical_modes(cell, T::zero(), order) {
        if m == 0 {
            continue;
        }
        let k = a.abs();
        let dens = Density { a: vec![re(-c * k), cx(T::zero(), -c * a), cx(T::zero(), -c * a), re(c * k)], b: None };
        modes.push((m, a, k, dens));
    }
    assemble_vertical(cell, direction, velocity_layout(false), &modes, &[], true, T::one())
}

/// West or east part of the modified Stokeslet; both families share `rule`.
pub fn build_mstokes_horizontal<T: Real>(
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    direction: Direction,
    rule: &QuadratureRule<T>,
) -> Result<PlaneWaveFactorization<T>> {
    check_modified(Pde::ModStokes, beta)?;
    horizontal_direction(direction)?;
    check_rule(rule, Pde::ModStokes, beta, cell, eps)?;
    let c = T::one() / (T::c(4.0) * T::PI() * beta * beta);
    let mut nodes = Vec::new();
    let folded = folded_nodes(rule, beta);
    for &(n, l, chi, w) in &folded {
        let dens = Density { a: vec![re(-c * l * l / chi), cx(T::zero(), c * l), cx(T::zero(), c * l), re(c * chi)], b: None };
        nodes.push((n, l, chi, w, dens));
    }
    for &(n, l, _, w) in &folded {
        let k = l.abs();
        let dens = Density { a: vec![re(c * k), cx(T::zero(), -c * l), cx(T::zero(), -c * l), re(-c * k)], b: None };
        nodes.push((n, l, k, w, dens));
    }
    Ok(assemble_horizontal(cell, direction, velocity_layout(false), &nodes, true, false, T::one()))
}

/// South or north part of the Stokeslet (neutral forces).
pub fn build_stokes_vertical<T: Real>(cell: &UnitCell<T>, eps: f64, direction: Direction) -> Result<PlaneWaveFactorization<T>> {
    vertical_direction(direction)?;
    let order = truncation_order_with_growth(cell, eps, log_growth_linear(cell.eta.f64()))?;
    let modes: Vec<_> = vertical_modes(cell, T::zero(), order)
        .into_iter()
        .filter(|&(m, _, _)| m != 0)
        .map(|(m, a, k)| {
            let sm = stokes_vertical_mode(cell.d, a);
            (m, a, k, Density { a: flat2(sm.a), b: Some(flat2(sm.b)) })
        })
        .collect();
    let special: [SpecialEntry<T>; 1] = [(0, true, 0, true, re(m0_coefficient(cell)))];
    assemble_vertical(cell, direction, velocity_layout(true), &modes, &special, true, T::one())
}

/// West or east part of the Stokeslet (neutral forces).
pub fn build_stokes_horizontal<T: Real>(
    cell: &UnitCell<T>,
    eps: f64,
    direction: Direction,
    rule: &QuadratureRule<T>,
) -> Result<PlaneWaveFactorization<T>> {
    horizontal_direction(direction)?;
    check_rule(rule, Pde::Stokes, T::zero(), cell, eps)?;
    let nodes: Vec<_> = folded_nodes(rule, T::zero())
        .into_iter()
        .map(|(n, l, k, w)| {
            let sm = stokes_horizontal_mode(l);
            (n, l, k, w, Density { a: flat2(sm.a), b: Some(flat2(sm.b)) })
        })
        .collect();
    Ok(assemble_horizontal(cell, direction, velocity_layout(true), &nodes, true, false, T::one()))
}

fn vertical_direction(direction: Direction) -> Result<()> {
    if direction.is_vertical() {
        Ok(())
    } else {
        Err(Error::Config(format!("{direction:?} is not a vertical direction")))
    }
}

fn horizontal_direction(direction: Direction) -> Result<()> {
    if direction.is_vertical() {
        Err(Error::Config(format!("{direction:?} is not a horizontal direction")))
    } else {
        Ok(())
    }
}

/// Rule for the velocity kernels: `β`-rule for the modified Stokeslet,
/// `β = 0` rule for the Stokeslet.
pub fn velocity_rule<T: Real>(pde: Pde, beta: T, cell: &UnitCell<T>, eps: f64) -> Result<QuadratureRule<T>> {
    match pde {
        Pde::ModStokes => sommerfeld_rule(Pde::ModStokes, beta, cell, eps),
        Pde::Stokes => sommerfeld_rule(Pde::Stokes, T::zero(), cell, eps),
        _ => Err(Error::Unsupported(format!("{} is not a velocity kernel", pde.name()))),
    }
}

/// Velocity periodizer for the Stokeslet or the modified Stokeslet.
pub fn assemble_velocity<T: Real>(pde: Pde, beta: T, cell: &UnitCell<T>, eps: f64) -> Result<Periodizer<T>> {
    check_modified(pde, beta)?;
    let rule = velocity_rule(pde, beta, cell, eps)?;
    let mut parts = Vec::new();
    for &dir in directions(cell.periodicity) {
        parts.push(match (pde, dir.is_vertical()) {
            (Pde::ModStokes, true) => build_mstokes_vertical(beta, cell, eps, dir)?,
            (Pde::ModStokes, false) => build_mstokes_horizontal(beta, cell, eps, dir, &rule)?,
            (_, true) => build_stokes_vertical(cell, eps, dir)?,
            (_, false) => build_stokes_horizontal(cell, eps, dir, &rule)?,
        });
    }
    let beta = if pde == Pde::Stokes { T::zero() } else { beta };
    Ok(Periodizer {
        pde,
        beta,
        cell: *cell,
        eps,
        kind: FieldKind::Velocity,
        parts,
        requires_neutrality: pde.needs_neutrality(),
        normals: None,
    })
}

/// Pressure periodizer, shared by the Stokeslet and the modified Stokeslet
/// since both have the pressurelet `(1/2π) r/r²`. Forces must be neutral.
pub fn build_pressure_periodizer<T: Real>(pde: Pde, cell: &UnitCell<T>, eps: f64) -> Result<Periodizer<T>> {
    if !pde.is_vector() {
        return Err(Error::Unsupported(format!("{} has no pressure", pde.name())));
    }
    let rule = sommerfeld_rule_with_growth(Pde::Stokes, T::zero(), cell, eps, OrderGrowth::Laplace(2))?;
    let growth = log_growth_linear(cell.eta.f64());
    let mut parts = Vec::new();
    let layout = pressure_layout;
    for &dir in directions(cell.periodicity) {
        if dir.is_vertical() {
            let order = truncation_order_with_growth(cell, eps, &growth)?;
            let two_d = T::c(2.0) * cell.d;
            let modes: Vec<_> = vertical_modes(cell, T::zero(), order)
                .into_iter()
                .filter(|&(m, _, _)| m != 0)
                .map(|(m, a, k)| (m, a, k, Density { a: vec![cx(T::zero(), -sgn(a) / two_d), re(T::one() / two_d)], b: None }))
                .collect();
            let special: [SpecialEntry<T>; 1] = [(0, true, 1, false, re(m0_coefficient(cell)))];
            parts.push(assemble_vertical(cell, dir, layout(), &modes, &special, true, -T::one())?);
        } else {
            let c = T::one() / (T::c(4.0) * T::PI());
            let nodes: Vec<_> = folded_nodes(&rule, T::zero())
                .into_iter()
                .map(|(n, l, k, w)| (n, l, k, w, Density { a: vec![re(c), cx(T::zero(), -c * sgn(l))], b: None }))
                .collect();
            parts.push(assemble_horizontal(cell, dir, layout(), &nodes, true, false, -T::one()));
        }
    }
    Ok(Periodizer {
        pde,
        beta: T::zero(),
        cell: *cell,
        eps,
        kind: FieldKind::Pressure,
        parts,
        requires_neutrality: true,
        normals: None,
    })
}

/// Double-layer periodizer for sources with the given unit normals.
pub fn build_stresslet_periodizer<T: Real>(cell: &UnitCell<T>, eps: f64, normals: &[Point<T>]) -> Result<Periodizer<T>> {
    for (index, n) in normals.iter().enumerate() {
        if ((n[0] * n[0] + n[1] * n[1]) - T::one()).abs() > T::c(1e3) * T::epsilon() {
            return Err(Error::NonUnitNormal { index });
        }
    }
    let rule = sommerfeld_rule_with_growth(Pde::Stokes, T::zero(), cell, eps, OrderGrowth::Laplace(2))?;
    let eta = cell.eta.f64();
    let growth = move |a: f64| 2.0 * (1.0 + 2.0 * a * eta).ln();
    let mut parts = Vec::new();
    for &dir in directions(cell.periodicity) {
        if dir.is_vertical() {
            let order = truncation_order_with_growth(cell, eps, growth)?;
            let modes: Vec<_> = vertical_modes(cell, T::zero(), order)
                .into_iter()
                .filter(|&(m, _, _)| m != 0)
                .map(|(m, a, k)| {
                    let sm = stokes_vertical_mode(cell.d, a);
                    (m, a, k, stresslet_density(&sm, [cx(T::zero(), -a), re(k)], 1))
                })
                .collect();
            // m = 0: -(y/(2dη)) [[n2, n1], [n1, n2]] μ.
            let c = re(m0_coefficient(cell));
            let special: Vec<SpecialEntry<T>> = vec![
                (0, true, 2, false, c), // u_x ← n2 μ1
                (0, true, 1, false, c), // u_x ← n1 μ2
                (1, true, 0, false, c), // u_y ← n1 μ1
                (1, true, 3, false, c), // u_y ← n2 μ2
            ];
            parts.push(assemble_vertical(cell, dir, stresslet_layout(), &modes, &special, true, -T::one())?);
        } else {
            let nodes: Vec<_> = folded_nodes(&rule, T::zero())
                .into_iter()
                .map(|(n, l, k, w)| {
                    let sm = stokes_horizontal_mode(l);
                    (n, l, k, w, stresslet_density(&sm, [re(k), cx(T::zero(), -l)], 0))
                })
                .collect();
            parts.push(assemble_horizontal(cell, dir, stresslet_layout(), &nodes, true, false, -T::one()));
        }
    }
    Ok(Periodizer {
        pde: Pde::Stokes,
        beta: T::zero(),
        cell: *cell,
        eps,
        kind: FieldKind::DoubleLayer,
        parts,
        requires_neutrality: false,
        normals: Some(normals.to_vec()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{make_unit_cell, ParticleSystem, Periodicity, Strengths};
    use crate::oracle::{brute_force_far, OracleKernel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Case {
        src: Vec<[f64; 2]>,
        f: Strengths<f64>,
        tgt: Vec<[f64; 2]>,
    }

    fn case(cell: &UnitCell<f64>, ns: usize, nt: usize, neutral: bool, seed: u64) -> Case {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = |rng: &mut ChaCha8Rng| cell.point(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let src: Vec<_> = (0..ns).map(|_| pt(&mut rng)).collect();
        let tgt: Vec<_> = (0..nt).map(|_| pt(&mut rng)).collect();
        let mut f: Vec<[f64; 2]> = (0..ns).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        if neutral {
            for c in 0..2 {
                let mean = f.iter().map(|v| v[c]).sum::<f64>() / ns as f64;
                f.iter_mut().for_each(|v| v[c] -= mean);
            }
        }
        Case { src, f: Strengths::Vector(f), tgt }
    }

    fn oracle(kernel: OracleKernel, cell: &UnitCell<f64>, c: &Case, normals: Option<&[[f64; 2]]>, shells: i64) -> Vec<Cx<f64>> {
        let sys = ParticleSystem::new(c.src.clone(), c.f.clone(), c.tgt.clone()).unwrap();
        brute_force_far(kernel, cell, &sys, normals, shells, 1e-9).unwrap()
    }

    /// Largest deviation, either absolute or after removing the value at target 0.
    fn max_dev(a: &[Cx<f64>], b: &[Cx<f64>], nc: usize, differences: bool) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..a.len() {
            let c = i % nc;
            let (x, y) = if differences { (a[i] - a[c], b[i] - b[c]) } else { (a[i], b[i]) };
            m = m.max((x.re - y.re).abs());
        }
        m
    }

    fn cells() -> Vec<UnitCell<f64>> {
        vec![
            make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap(),
            make_unit_cell(1.0, 0.35, 0.7, Periodicity::Doubly).unwrap(),
            make_unit_cell(1.0, 0.0, 1.0, Periodicity::Singly).unwrap(),
            make_unit_cell(1.0, 0.0, 3.0, Periodicity::Singly).unwrap(),
        ]
    }

    #[test]
    fn mstokes_matches_lattice_sum() {
        for (k, cell) in cells().iter().enumerate() {
            let c = case(cell, 6, 12, false, 10 + k as u64);
            let p = assemble_velocity(Pde::ModStokes, 1.0, cell, 1e-12).unwrap();
            let u = p.apply_direct(&c.src, &c.f, &c.tgt).unwrap();
            let want = oracle(OracleKernel::Velocity { pde: Pde::ModStokes, beta: 1.0 }, cell, &c, None, 40);
            let dev = max_dev(&u, &want, 2, false);
            assert!(dev < 1e-10, "cell {k}: {dev:e}");
        }
    }

    #[test]
    fn stokes_matches_row_sums() {
        for (k, cell) in cells().iter().enumerate() {
            let c = case(cell, 6, 12, true, 20 + k as u64);
            let p = assemble_velocity(Pde::Stokes, 0.0, cell, 1e-12).unwrap();
            let u = p.apply_direct(&c.src, &c.f, &c.tgt).unwrap();
            let want = oracle(OracleKernel::Velocity { pde: Pde::Stokes, beta: 0.0 }, cell, &c, None, 40);
            let dev = max_dev(&u, &want, 2, true);
            assert!(dev < 1e-10, "cell {k}: {dev:e}");
        }
    }

    #[test]
    fn pressure_matches_row_sums() {
        for (k, cell) in cells().iter().enumerate() {
            let c = case(cell, 6, 12, true, 30 + k as u64);
            let p = build_pressure_periodizer(Pde::Stokes, cell, 1e-12).unwrap();
            let u = p.apply_direct(&c.src, &c.f, &c.tgt).unwrap();
            let want = oracle(OracleKernel::Pressure, cell, &c, None, 40);
            let dev = max_dev(&u, &want, 1, true);
            assert!(dev < 1e-10, "cell {k}: {dev:e}");
        }
    }

    #[test]
    fn stresslet_matches_row_sums() {
        for (k, cell) in cells().iter().enumerate() {
            let c = case(cell, 6, 12, false, 40 + k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            let normals: Vec<[f64; 2]> = (0..6)
                .map(|_| {
                    let a: f64 = rng.gen_range(0.0..6.28);
                    [a.cos(), a.sin()]
                })
                .collect();
            let p = build_stresslet_periodizer(cell, 1e-12, &normals).unwrap();
            let u = p.apply_direct(&c.src, &c.f, &c.tgt).unwrap();
            let want = oracle(OracleKernel::DoubleLayer, cell, &c, Some(&normals), 40);
            let dev = max_dev(&u, &want, 2, false);
            assert!(dev < 1e-9, "cell {k}: {dev:e}");
        }
    }

    #[test]
    fn stresslet_rejects_non_unit_normals() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let err = build_stresslet_periodizer(&cell, 1e-6, &[[1.0, 0.0], [0.5, 0.5]]).unwrap_err();
        assert_eq!(err, Error::NonUnitNormal { index: 1 });
    }

    #[test]
    fn zero_forces_give_zero() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let f = Strengths::Vector(vec![[0.0, 0.0]]);
        for p in [
            assemble_velocity(Pde::ModStokes, 1.0, &cell, 1e-8).unwrap(),
            assemble_velocity(Pde::Stokes, 0.0, &cell, 1e-8).unwrap(),
            build_pressure_periodizer(Pde::Stokes, &cell, 1e-8).unwrap(),
        ] {
            let u = p.apply_direct(&[[0.1, 0.1]], &f, &[[0.2, -0.3]]).unwrap();
            assert!(u.iter().all(|z| *z == Cx::new(0.0, 0.0)));
        }
    }

    /// Central differences of a far field at a point.
    fn derivs(p: &Periodizer<f64>, c: &Case, t: [f64; 2], h: f64) -> Vec<[f64; 6]> {
        // u, ∂x u, ∂y u, ∂xx u, ∂yy u, ∂xy u per component.
        let pts = [
            t,
            [t[0] + h, t[1]],
            [t[0] - h, t[1]],
            [t[0], t[1] + h],
            [t[0], t[1] - h],
            [t[0] + h, t[1] + h],
            [t[0] - h, t[1] - h],
            [t[0] + h, t[1] - h],
            [t[0] - h, t[1] + h],
        ];
        let u = p.apply_direct(&c.src, &c.f, &pts).unwrap();
        let nc = p.out_components();
        (0..nc)
            .map(|k| {
                let v = |i: usize| u[i * nc + k].re;
                [
                    v(0),
                    (v(1) - v(2)) / (2.0 * h),
                    (v(3) - v(4)) / (2.0 * h),
                    (v(1) - 2.0 * v(0) + v(2)) / (h * h),
                    (v(3) - 2.0 * v(0) + v(4)) / (h * h),
                    (v(5) + v(6) - v(7) - v(8)) / (4.0 * h * h),
                ]
            })
            .collect()
    }

    #[test]
    fn velocity_far_fields_are_divergence_free() {
        let cell = make_unit_cell(1.0, 0.2, 0.8, Periodicity::Doubly).unwrap();
        let c = case(&cell, 5, 0, true, 7);
        let h = 1e-4 * 0.8;
        for p in [
            assemble_velocity(Pde::Stokes, 0.0, &cell, 1e-12).unwrap(),
            assemble_velocity(Pde::ModStokes, 1.0, &cell, 1e-12).unwrap(),
        ] {
            for t in [[0.1, 0.2], [-0.3, -0.1], [0.25, -0.3]] {
                let d = derivs(&p, &c, t, h);
                let grad = d[0][1].abs() + d[1][2].abs() + d[0][2].abs() + d[1][1].abs();
                let div = d[0][1] + d[1][2];
                assert!(div.abs() <= 1e-6 * grad, "{:?}: {div:e} vs {grad:e}", p.pde);
            }
        }
    }

    #[test]
    fn mstokes_momentum_balance() {
        let cell = make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap();
        let beta = 2.0;
        let c = case(&cell, 5, 0, true, 9);
        let u = assemble_velocity(Pde::ModStokes, beta, &cell, 1e-12).unwrap();
        let p = build_pressure_periodizer(Pde::ModStokes, &cell, 1e-12).unwrap();
        let h = 1e-3;
        for t in [[0.1, 0.2], [-0.3, -0.1]] {
            let du = derivs(&u, &c, t, h);
            let dp = derivs(&p, &c, t, h);
            for k in 0..2 {
                let lap = du[k][3] + du[k][4];
                let r = beta * beta * du[k][0] - lap + dp[0][1 + k];
                let scale = (beta * beta * du[k][0]).abs() + lap.abs() + dp[0][1 + k].abs();
                assert!(r.abs() <= 1e-4 * scale, "component {k}: {r:e} vs {scale:e}");
            }
        }
    }

    #[test]
    fn stokes_is_small_beta_limit() {
        for cell in [
            make_unit_cell(1.0, 0.0, 1.0, Periodicity::Doubly).unwrap(),
            make_unit_cell(1.0, 0.0, 2.0, Periodicity::Singly).unwrap(),
        ] {
            let c = case(&cell, 6, 8, true, 3);
            let s = assemble_velocity(Pde::Stokes, 0.0, &cell, 1e-12).unwrap().apply_direct(&c.src, &c.f, &c.tgt).unwrap();
            let m = assemble_velocity(Pde::ModStokes, 1e-4, &cell, 1e-12).unwrap().apply_direct(&c.src, &c.f, &c.tgt).unwrap();
            let dev = max_dev(&s, &m, 2, true);
            assert!(dev < 1e-5, "{dev:e}");
        }
    }
}
