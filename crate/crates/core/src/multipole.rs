//! Far-field operators for multipole sources of a fixed order `l`:
//! `K_l(βr) e^{ilθ}` for modified Helmholtz and `1/z^l` for Laplace.
//!
//! Both are derivatives of the charge kernel in the target,
//!
//! ```text
//! K_l(βr) e^{ilθ} = 2π (-(∂x + i∂y)/β)^l G_β,
//! 1/z^l           = (-1)^l 2π / ((l-1)! 2^{l-1}) (∂x - i∂y)^l G_0,
//! ```
//!
//! so every plane wave of the charge factorization is multiplied by the
//! symbol of the derivative. The bases, mode sets and lattice coefficients
//! are the charge ones; only the diagonals change. The growing symbol
//! `((κ+|α|)/β)^l` raises the truncation order and stretches the quadrature.

use crate::cell::{Strengths, UnitCell};
use crate::error::{Error, Result};
use crate::factorization::{assemble_horizontal, assemble_vertical, Density, Direction, Layout, NormalFactor, SpecialEntry};
use crate::kernels::Pde;
use crate::periodizer::{
    check_modified, directions, m0_coefficient, truncation_order, truncation_order_with_growth, vertical_modes,
    FieldKind, Periodizer,
};
use crate::quadrature::{sommerfeld_rule_with_growth, OrderGrowth, QuadratureRule};
use crate::scalar::{Cx, Point, Real};

/// Largest supported multipole order.
pub const MAX_ORDER: u32 = 40;

/// Orders carried by a [`MultipoleSourceSet`].
#[derive(Clone, Debug, PartialEq)]
pub enum Orders {
    Shared(u32),
    PerCenter(Vec<u32>),
}

/// Multipole sources: centers, orders and complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipoleSourceSet<T> {
    pub centers: Vec<Point<T>>,
    pub orders: Orders,
    pub coefficients: Vec<Cx<T>>,
}

impl<T: Real> MultipoleSourceSet<T> {
    pub fn order_of(&self, j: usize) -> u32 {
        match &self.orders {
            Orders::Shared(l) => *l,
            Orders::PerCenter(v) => v[j],
        }
    }

    /// Distinct orders, ascending.
    pub fn distinct_orders(&self) -> Vec<u32> {
        let mut v: Vec<u32> = match &self.orders {
            Orders::Shared(l) => vec![*l],
            Orders::PerCenter(v) => v.clone(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    fn validate(&self, pde: Pde) -> Result<()> {
        if self.coefficients.len() != self.centers.len() {
            return Err(Error::LengthMismatch { expected: self.centers.len(), got: self.coefficients.len() });
        }
        if let Orders::PerCenter(v) = &self.orders {
            if v.len() != self.centers.len() {
                return Err(Error::LengthMismatch { expected: self.centers.len(), got: v.len() });
            }
        }
        for l in self.distinct_orders() {
            check_order(pde, l as i64)?;
        }
        Ok(())
    }
}

fn check_order(pde: Pde, l: i64) -> Result<()> {
    let min = match pde {
        Pde::ModHelmholtz => 0,
        Pde::Poisson => 1,
        _ => return Err(Error::Unsupported(format!("no multipoles for {}", pde.name()))),
    };
    if l < min || l > MAX_ORDER as i64 {
        return Err(Error::InvalidOrder(l));
    }
    Ok(())
}

fn layout(weighted: bool) -> Layout {
    Layout {
        base_in: vec![(0, NormalFactor::One)],
        base_out: vec![0],
        out_components: 1,
        in_components: 1,
        weighted,
    }
}

fn density<T: Real>(z: Cx<T>) -> Density<T> {
    Density { a: vec![z], b: None }
}

/// `(1/(l-1)!)` without overflow for the supported orders.
fn inv_factorial<T: Real>(n: u32) -> T {
    (1..=n).fold(T::one(), |a, k| a / T::n(k as i64))
}

/// Quadrature growth tag for a multipole rule.
pub fn order_growth(pde: Pde, l: u32) -> OrderGrowth {
    match pde {
        Pde::Poisson => OrderGrowth::Laplace(l),
        _ => OrderGrowth::Modified(l),
    }
}

/// Sommerfeld rule for the horizontal parts of an order-`l` periodizer.
pub fn multipole_rule<T: Real>(pde: Pde, l: u32, beta: T, cell: &UnitCell<T>, eps: f64) -> Result<QuadratureRule<T>> {
    check_order(pde, l as i64)?;
    let beta = if pde == Pde::Poisson { T::zero() } else { beta };
    sommerfeld_rule_with_growth(pde, beta, cell, eps, order_growth(pde, l))
}

/// Truncation order for the vertical parts, raised for the growing branch.
pub fn multipole_order<T: Real>(pde: Pde, l: u32, beta: T, cell: &UnitCell<T>, eps: f64) -> Result<i64> {
    match pde {
        Pde::ModHelmholtz if l > 0 => {
            let b = beta.f64();
            truncation_order_with_growth(cell, eps, |a| l as f64 * ((a.hypot(b) + a) / b).ln())
        }
        Pde::Poisson if l > 1 => {
            // Laplace diagonals grow like α^{l-1}/(l-1)!.
            let lf: f64 = (1..l).map(|k| (k as f64).ln()).sum();
            truncation_order_with_growth(cell, eps, |a| (l as f64 - 1.0) * a.ln() - lf)
        }
        _ => truncation_order(cell, eps),
    }
}

/// South or north part of the order-`l` periodizer.
pub fn build_multipole_vertical<T: Real>(
    pde: Pde,
    l: u32,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    direction: Direction,
) -> Result<crate::factorization::PlaneWaveFactorization<T>> {
    check_order(pde, l as i64)?;
    if !direction.is_vertical() {
        return Err(Error::Config(format!("{direction:?} is not a vertical direction")));
    }
    let order = multipole_order(pde, l, beta, cell, eps)?;
    let parity = if l % 2 == 0 { T::one() } else { -T::one() };
    let two_d = T::c(2.0) * cell.d;
    let two_pi = T::c(2.0) * T::PI();
    let li = l as i32;
    match pde {
        Pde::ModHelmholtz => {
            check_modified(pde, beta)?;
            // Symbol of -(∂x + i∂y)/β on e^{-κy + iαx}: i(κ - α)/β.
            let modes: Vec<_> = vertical_modes(cell, beta, order)
                .into_iter()
                .map(|(m, a, k)| {
                    let sym = Cx::new(T::zero(), (k - a) / beta).powi(li);
                    (m, a, k, density(sym * (two_pi / (two_d * k))))
                })
                .collect();
            assemble_vertical(cell, direction, layout(false), &modes, &[], false, parity)
        }
        _ => {
            // (∂x - i∂y) annihilates the α < 0 waves; α > 0 leaves
            // 2π(-iα)^l α^{-1}/(d (l-1)!).
            let c = two_pi / cell.d * inv_factorial::<T>(l - 1);
            let modes: Vec<_> = vertical_modes(cell, T::zero(), order)
                .into_iter()
                .filter(|&(m, _, _)| m > 0)
                .map(|(m, a, k)| {
                    let sym = Cx::new(T::zero(), -a).powi(li) * (c / a);
                    (m, a, k, density(sym))
                })
                .collect();
            // The y y' term of the charge kernel survives one derivative.
            let special: Vec<SpecialEntry<T>> = if l == 1 {
                vec![(0, false, 0, true, Cx::new(T::zero(), two_pi * m0_coefficient(cell)))]
            } else {
                Vec::new()
            };
            assemble_vertical(cell, direction, layout(l == 1), &modes, &special, false, parity)
        }
    }
}

/// West or east part of the order-`l` periodizer.
pub fn build_multipole_horizontal<T: Real>(
    pde: Pde,
    l: u32,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    direction: Direction,
    rule: &QuadratureRule<T>,
) -> Result<crate::factorization::PlaneWaveFactorization<T>> {
    check_order(pde, l as i64)?;
    if direction.is_vertical() {
        return Err(Error::Config(format!("{direction:?} is not a horizontal direction")));
    }
    check_modified(pde, beta)?;
    let beta = if pde == Pde::Poisson { T::zero() } else { beta };
    if rule.meta.pde != pde || rule.meta.growth != order_growth(pde, l) || !rule.meta.matches(beta, cell, eps) {
        return Err(Error::RuleMismatch(format!(
            "rule for {} {:?}, operator needs {} {:?}",
            rule.meta.pde.name(),
            rule.meta.growth,
            pde.name(),
            order_growth(pde, l)
        )));
    }
    let parity = if l % 2 == 0 { T::one() } else { -T::one() };
    let li = l as i32;
    let four_pi = T::c(4.0) * T::PI();
    let n = rule.count() as i64;
    let mut nodes = Vec::with_capacity(2 * rule.count());
    for (i, (&lam, &w)) in rule.lambdas.iter().zip(&rule.weights).enumerate() {
        let k = lam.hypot(beta);
        match pde {
            Pde::ModHelmholtz => {
                // Symbol of -(∂x + i∂y)/β on e^{-κx + iωy}: (κ + ω)/β.
                for (idx, om) in [(i as i64, lam), (i as i64 + n, -lam)] {
                    let sym = ((k + om) / beta).powi(li);
                    let dens = sym * T::c(2.0) * T::PI() / (four_pi * k);
                    nodes.push((idx, om, k, w, density(Cx::new(dens, T::zero()))));
                }
            }
            _ => {
                // Only ω < 0 survives (∂x - i∂y); the density is λ^{l-1}/(l-1)!.
                let dens = lam.powi(li - 1) * inv_factorial::<T>(l - 1);
                nodes.push((i as i64, -lam, k, w, density(Cx::new(dens, T::zero()))));
            }
        }
    }
    Ok(assemble_horizontal(cell, direction, layout(false), &nodes, false, false, parity))
}

/// Every directional part of the order-`l` multipole periodizer.
pub fn build_multipole_periodizer<T: Real>(
    pde: Pde,
    l: u32,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
) -> Result<Periodizer<T>> {
    check_order(pde, l as i64)?;
    check_modified(pde, beta)?;
    let beta = if pde == Pde::Poisson { T::zero() } else { beta };
    let rule = multipole_rule(pde, l, beta, cell, eps)?;
    let mut parts = Vec::new();
    for &dir in directions(cell.periodicity) {
        parts.push(if dir.is_vertical() {
            build_multipole_vertical(pde, l, beta, cell, eps, dir)?
        } else {
            build_multipole_horizontal(pde, l, beta, cell, eps, dir, &rule)?
        });
    }
    Ok(Periodizer {
        pde,
        beta,
        cell: *cell,
        eps,
        kind: FieldKind::Multipole(l),
        parts,
        requires_neutrality: pde == Pde::Poisson && l == 1,
        normals: None,
    })
}

/// Far field of a mixed-order source set, one periodizer per order.
pub fn apply_multipoles<T: Real>(
    pde: Pde,
    beta: T,
    cell: &UnitCell<T>,
    eps: f64,
    sources: &MultipoleSourceSet<T>,
    targets: &[Point<T>],
) -> Result<Vec<Cx<T>>> {
    sources.validate(pde)?;
    let mut out = vec![Cx::new(T::zero(), T::zero()); targets.len()];
    for l in sources.distinct_orders() {
        let (pts, coeffs): (Vec<_>, Vec<_>) = (0..sources.centers.len())
            .filter(|&j| sources.order_of(j) == l)
            .map(|j| (sources.centers[j], sources.coefficients[j]))
            .unzip();
        let p = build_multipole_periodizer(pde, l, beta, cell, eps)?;
        let u = p.apply_direct(&pts, &Strengths::Complex(coeffs), targets)?;
        for (o, v) in out.iter_mut().zip(u) {
            *o += v;
        }
    }
    Ok(out)
}
