//! Unit cell, lattice translations and the near/far split of the lattice.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Point, Real};
use serde::{Deserialize, Serialize};

/// Number of periodic directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Periodicity {
    /// Periodic in x only.
    Singly,
    /// Periodic along both lattice vectors.
    Doubly,
}

/// Parallelogram cell spanned by `e1 = (d, 0)` and `e2 = (xi, eta)`.
///
/// Points of the cell are `x1 e1 + x2 e2` with `x1, x2` in `[-1/2, 1/2]`.
/// For singly periodic cells the cell is the `d x eta` rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitCell<T> {
    pub d: T,
    pub xi: T,
    pub eta: T,
    pub periodicity: Periodicity,
    /// Half-width (in units of `e1`) of the block of images summed directly.
    pub m0: i64,
    pub aspect: T,
}

/// Lattice vector `l_mn = m e1 + n e2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeTranslation<T> {
    pub m: i64,
    pub n: i64,
    pub vector: Point<T>,
}

/// Builds a cell, deriving `m0` and the aspect ratio.
pub fn make_unit_cell<T: Real>(d: T, xi: T, eta: T, periodicity: Periodicity) -> Result<UnitCell<T>> {
    if !(d > T::zero()) || !(eta > T::zero()) || !d.is_finite() || !eta.is_finite() || !xi.is_finite() {
        return Err(Error::NonPositiveDimension { d: d.f64(), eta: eta.f64() });
    }
    match periodicity {
        Periodicity::Singly => Ok(UnitCell {
            d,
            xi: T::zero(),
            eta,
            periodicity,
            m0: 1,
            aspect: (eta / d).max(T::one()),
        }),
        Periodicity::Doubly => {
            let e2 = xi.hypot(eta);
            // Tolerate rounding in cells built from an angle with d == |e2|.
            if d < e2 * (T::one() - T::c(8.0) * T::epsilon()) {
                return Err(Error::OrientationViolation { d: d.f64(), e2: e2.f64() });
            }
            let m0 = if xi == T::zero() {
                1
            } else {
                let v = (T::one() + T::c(2.0) * xi.abs() / d).ceil();
                (v.to_i64().unwrap_or(3)).clamp(1, 3)
            };
            Ok(UnitCell { d, xi, eta, periodicity, m0, aspect: d / eta })
        }
    }
}

/// Doubly periodic cell with `d = 1`, aspect ratio `A = 1/eta` and angle
/// `theta` between `e1` and `e2`.
pub fn cell_from_angle<T: Real>(aspect: T, theta: T) -> Result<UnitCell<T>> {
    if !(aspect > T::zero()) {
        return Err(Error::Config(format!("aspect must be positive, got {}", aspect)));
    }
    let eta = T::one() / aspect;
    let len = eta / theta.sin();
    let mut xi = len * theta.cos();
    if xi.abs() < T::c(1e-14) * len {
        xi = T::zero();
    }
    make_unit_cell(T::one(), xi, eta, Periodicity::Doubly)
}

impl<T: Real> UnitCell<T> {
    pub fn e1(&self) -> Point<T> {
        [self.d, T::zero()]
    }

    pub fn e2(&self) -> Point<T> {
        [self.xi, self.eta]
    }

    /// Lattice vector for indices `(m, n)`.
    pub fn translation(&self, m: i64, n: i64) -> LatticeTranslation<T> {
        let (mt, nt) = (T::n(m), T::n(n));
        LatticeTranslation { m, n, vector: [mt * self.d + nt * self.xi, nt * self.eta] }
    }

    /// Membership of `(m, n)` in the directly summed block.
    pub fn is_near(&self, m: i64, n: i64) -> bool {
        match self.periodicity {
            Periodicity::Doubly => m.abs() <= self.m0 && n.abs() <= 1,
            Periodicity::Singly => n == 0 && m.abs() <= 1,
        }
    }

    /// Half-extent of the cell along x: `(d + |xi|)/2`.
    pub fn half_width(&self) -> T {
        (self.d + self.xi.abs()) * T::c(0.5)
    }

    /// Half-extent of the cell along y.
    pub fn half_height(&self) -> T {
        self.eta * T::c(0.5)
    }

    /// Point `x1 e1 + x2 e2` (rectangle coordinates for singly periodic cells).
    pub fn point(&self, x1: T, x2: T) -> Point<T> {
        [x1 * self.d + x2 * self.xi, x2 * self.eta]
    }

    /// Cell coordinates `(x1, x2)` of a point.
    pub fn coordinates(&self, p: Point<T>) -> (T, T) {
        let x2 = p[1] / self.eta;
        let x1 = (p[0] - x2 * self.xi) / self.d;
        (x1, x2)
    }

    /// Whether `p` lies in the closed cell, up to a relative slack.
    pub fn contains(&self, p: Point<T>, slack: T) -> bool {
        let (x1, x2) = self.coordinates(p);
        let h = T::c(0.5) + slack;
        x1.abs() <= h && x2.abs() <= h
    }
}

/// Translations of the near block, `(0, 0)` included.
pub fn near_translations<T: Real>(cell: &UnitCell<T>) -> Vec<LatticeTranslation<T>> {
    let mut out = Vec::new();
    match cell.periodicity {
        Periodicity::Doubly => {
            for n in -1..=1 {
                for m in -cell.m0..=cell.m0 {
                    out.push(cell.translation(m, n));
                }
            }
        }
        Periodicity::Singly => {
            for m in -1..=1 {
                out.push(cell.translation(m, 0));
            }
        }
    }
    out
}

/// Lattice image of `p` in the axis-aligned `d x eta` rectangle centred at
/// the origin. Only multiples of `e1` are needed because cell points already
/// satisfy `|y| <= eta/2`.
pub fn wrap_to_rectangle<T: Real>(p: Point<T>, cell: &UnitCell<T>) -> Point<T> {
    let k = (p[0] / cell.d).round();
    let mut x = p[0] - k * cell.d;
    let h = cell.d * T::c(0.5);
    if x > h {
        x = x - cell.d;
    } else if x < -h {
        x = x + cell.d;
    }
    [x, p[1]]
}

/// Source strengths.
#[derive(Clone, Debug, PartialEq)]
pub enum Strengths<T> {
    /// Scalar charges.
    Scalar(Vec<T>),
    /// Two-component forces or double-layer densities.
    Vector(Vec<[T; 2]>),
    /// Complex multipole coefficients.
    Complex(Vec<Cx<T>>),
}

impl<T: Real> Strengths<T> {
    pub fn len(&self) -> usize {
        match self {
            Strengths::Scalar(v) => v.len(),
            Strengths::Vector(v) => v.len(),
            Strengths::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of components per source.
    pub fn components(&self) -> usize {
        match self {
            Strengths::Vector(_) => 2,
            _ => 1,
        }
    }

    /// Component `c` of source `j` as a complex number.
    #[inline]
    pub fn get(&self, j: usize, c: usize) -> Cx<T> {
        match self {
            Strengths::Scalar(v) => Cx::new(v[j], T::zero()),
            Strengths::Vector(v) => Cx::new(v[j][c], T::zero()),
            Strengths::Complex(v) => v[j],
        }
    }

    /// Componentwise sums (real and imaginary parts folded into magnitude).
    pub fn net(&self) -> Vec<Cx<T>> {
        let mut s = vec![Cx::new(T::zero(), T::zero()); self.components()];
        for j in 0..self.len() {
            for (c, acc) in s.iter_mut().enumerate() {
                *acc += self.get(j, c);
            }
        }
        s
    }

    /// Largest componentwise net strength relative to the total magnitude.
    pub fn relative_imbalance(&self) -> f64 {
        let mut tot = 0.0f64;
        for j in 0..self.len() {
            for c in 0..self.components() {
                tot += self.get(j, c).norm().f64();
            }
        }
        if tot == 0.0 {
            return 0.0;
        }
        self.net().iter().map(|z| z.norm().f64()).fold(0.0, f64::max) / tot
    }

    /// Multiplies every strength by `s`.
    pub fn scaled(&self, s: T) -> Self {
        match self {
            Strengths::Scalar(v) => Strengths::Scalar(v.iter().map(|&q| q * s).collect()),
            Strengths::Vector(v) => Strengths::Vector(v.iter().map(|&[a, b]| [a * s, b * s]).collect()),
            Strengths::Complex(v) => Strengths::Complex(v.iter().map(|&q| q * s).collect()),
        }
    }
}

/// Sources with strengths and evaluation targets, all in cell coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSystem<T> {
    pub sources: Vec<Point<T>>,
    pub strengths: Strengths<T>,
    pub targets: Vec<Point<T>>,
}

impl<T: Real> ParticleSystem<T> {
    pub fn new(sources: Vec<Point<T>>, strengths: Strengths<T>, targets: Vec<Point<T>>) -> Result<Self> {
        if sources.len() != strengths.len() {
            return Err(Error::LengthMismatch { expected: sources.len(), got: strengths.len() });
        }
        Ok(Self { sources, strengths, targets })
    }

    /// Checks that every point lies in the closed cell.
    pub fn check_in_cell(&self, cell: &UnitCell<T>) -> Result<()> {
        let slack = T::c(1e3) * T::epsilon();
        for (i, p) in self.sources.iter().chain(self.targets.iter()).enumerate() {
            if !cell.contains(*p, slack) {
                return Err(Error::Config(format!("point {} = ({}, {}) lies outside the unit cell", i, p[0], p[1])));
            }
        }
        Ok(())
    }
}
