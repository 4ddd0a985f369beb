//! Free-space Green's functions and multipole kernels.
//!
//! The `*_raw` functions take the offset `r = t - s` and skip validation; they
//! are the inner loops of the near-field sums and of the lattice-sum oracles.

use crate::bessel::{k0, k0_k1, kn_all, stokes_ab};
use crate::error::{Error, Result};
use crate::scalar::{cis, Cx, Point, Real};
use serde::{Deserialize, Serialize};

/// Partial differential equation whose fundamental solution is periodized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pde {
    /// `-Δu = f`, kernel `(1/2π) log(1/r)`.
    Poisson,
    /// `(β² - Δ)u = f`, kernel `(1/2π) K0(βr)`.
    ModHelmholtz,
    /// Stokes flow, velocity from point forces.
    Stokes,
    /// `(β² - Δ)u + ∇p = f`, `∇·u = 0`.
    ModStokes,
}

impl Pde {
    /// Whether the far-field operator needs neutral strengths.
    pub fn needs_neutrality(self) -> bool {
        matches!(self, Pde::Poisson | Pde::Stokes)
    }

    pub fn is_modified(self) -> bool {
        matches!(self, Pde::ModHelmholtz | Pde::ModStokes)
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Pde::Stokes | Pde::ModStokes)
    }

    pub fn name(self) -> &'static str {
        match self {
            Pde::Poisson => "poisson",
            Pde::ModHelmholtz => "mhelm",
            Pde::Stokes => "stokes",
            Pde::ModStokes => "mstokes",
        }
    }
}

impl std::str::FromStr for Pde {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "laplace" => Ok(Pde::Poisson),
            "mhelm" | "modhelmholtz" | "yukawa" => Ok(Pde::ModHelmholtz),
            "stokes" => Ok(Pde::Stokes),
            "mstokes" | "modstokes" | "brinkman" => Ok(Pde::ModStokes),
            other => Err(Error::Config(format!(
                "unknown pde '{other}' (expected poisson, mhelm, stokes or mstokes)"
            ))),
        }
    }
}

/// Value of a kernel at one source/target pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelValue<T> {
    Scalar(T),
    /// Row-major 2x2 block; `u_i = G_ij f_j`.
    Block([[T; 2]; 2]),
    Vector([T; 2]),
}

impl<T: Real> KernelValue<T> {
    pub fn as_scalar(&self) -> Option<T> {
        match *self {
            KernelValue::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_block(&self) -> Option<[[T; 2]; 2]> {
        match *self {
            KernelValue::Block(v) => Some(v),
            _ => None,
        }
    }
}

#[inline]
fn offset<T: Real>(t: Point<T>, s: Point<T>) -> Result<(T, T)> {
    let (dx, dy) = (t[0] - s[0], t[1] - s[1]);
    if dx == T::zero() && dy == T::zero() {
        return Err(Error::CoincidentPoints);
    }
    Ok((dx, dy))
}

fn need_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::MissingBeta)
    }
}

/// `(1/2π) log(1/r)` from `r²`.
#[inline]
pub fn laplace_raw<T: Real>(r2: T) -> T {
    -r2.ln() / (T::c(4.0) * T::PI())
}

/// `(1/2π) K0(βr)`.
#[inline]
pub fn mod_helmholtz_raw<T: Real>(beta: T, r: T) -> T {
    k0(beta * r) / (T::c(2.0) * T::PI())
}

/// Stokeslet `-(1/4π)(log r I - r⊗r/r²)`.
#[inline]
pub fn stokeslet_raw<T: Real>(dx: T, dy: T) -> [[T; 2]; 2] {
    let r2 = dx * dx + dy * dy;
    let c = -T::one() / (T::c(4.0) * T::PI());
    let l = T::c(0.5) * r2.ln();
    let (xx, xy, yy) = (dx * dx / r2, dx * dy / r2, dy * dy / r2);
    [[c * (l - xx), -c * xy], [-c * xy, c * (l - yy)]]
}

/// Modified Stokeslet `(∇⊗∇ - ΔI) G_MB` with
/// `G_MB = -(1/2πβ²)(K0(βr) + log r)`.
///
/// In closed form `(1/(2πβ²r²)) [B(βr)(I - r̂⊗r̂) + A(βr) r̂⊗r̂]`.
#[inline]
pub fn mod_stokeslet_raw<T: Real>(beta: T, dx: T, dy: T) -> [[T; 2]; 2] {
    let r2 = dx * dx + dy * dy;
    let (a, b) = stokes_ab(beta * r2.sqrt());
    let c = T::one() / (T::c(2.0) * T::PI() * beta * beta * r2);
    let (xx, xy, yy) = (dx * dx / r2, dx * dy / r2, dy * dy / r2);
    let amb = a - b;
    [[c * (b + amb * xx), c * amb * xy], [c * amb * xy, c * (b + amb * yy)]]
}

/// Pressurelet `(1/2π) r/r²`.
#[inline]
pub fn pressurelet_raw<T: Real>(dx: T, dy: T) -> [T; 2] {
    let c = T::one() / (T::c(2.0) * T::PI() * (dx * dx + dy * dy));
    [c * dx, c * dy]
}

/// Double-layer kernel `(1/π) r_i r_j (r·n)/r⁴`; `u_i = D_ij μ_j`.
#[inline]
pub fn stresslet_raw<T: Real>(dx: T, dy: T, n: Point<T>) -> [[T; 2]; 2] {
    let r2 = dx * dx + dy * dy;
    let c = (dx * n[0] + dy * n[1]) / (T::PI() * r2 * r2);
    [[c * dx * dx, c * dx * dy], [c * dx * dy, c * dy * dy]]
}

/// Free-space Green's function in the normalization used throughout the crate.
pub fn greens<T: Real>(pde: Pde, beta: T, t: Point<T>, s: Point<T>) -> Result<KernelValue<T>> {
    let (dx, dy) = offset(t, s)?;
    let r2 = dx * dx + dy * dy;
    Ok(match pde {
        Pde::Poisson => KernelValue::Scalar(laplace_raw(r2)),
        Pde::ModHelmholtz => {
            need_beta(beta)?;
            KernelValue::Scalar(mod_helmholtz_raw(beta, r2.sqrt()))
        }
        Pde::Stokes => KernelValue::Block(stokeslet_raw(dx, dy)),
        Pde::ModStokes => {
            need_beta(beta)?;
            KernelValue::Block(mod_stokeslet_raw(beta, dx, dy))
        }
    })
}

/// Pressure generated by a unit point force, shared by Stokes and modified Stokes.
pub fn pressurelet<T: Real>(t: Point<T>, s: Point<T>) -> Result<[T; 2]> {
    let (dx, dy) = offset(t, s)?;
    Ok(pressurelet_raw(dx, dy))
}

/// Multipole of order `l`: `K_l(β|t-s|) e^{ilθ}` (modified Helmholtz) or
/// `1/(z - z')^l` (Poisson), with `θ` the angle of `t - s`.
pub fn multipole_kernel<T: Real>(pde: Pde, l: i64, beta: T, t: Point<T>, s: Point<T>) -> Result<Cx<T>> {
    let (dx, dy) = offset(t, s)?;
    match pde {
        Pde::ModHelmholtz => {
            if l < 0 {
                return Err(Error::InvalidOrder(l));
            }
            need_beta(beta)?;
            Ok(multipole_mh_raw(l as usize, beta, dx, dy))
        }
        Pde::Poisson => {
            if l < 1 {
                return Err(Error::InvalidOrder(l));
            }
            Ok(multipole_laplace_raw(l as i32, dx, dy))
        }
        _ => Err(Error::Unsupported("multipoles exist for poisson and mhelm only".into())),
    }
}

#[inline]
pub fn multipole_mh_raw<T: Real>(l: usize, beta: T, dx: T, dy: T) -> Cx<T> {
    let r = dx.hypot(dy);
    let k = if l <= 1 {
        let (a, b) = k0_k1(beta * r);
        if l == 0 {
            a
        } else {
            b
        }
    } else {
        kn_all(l, beta * r)[l]
    };
    cis(T::n(l as i64) * dy.atan2(dx)) * k
}

#[inline]
pub fn multipole_laplace_raw<T: Real>(l: i32, dx: T, dy: T) -> Cx<T> {
    Cx::new(dx, dy).inv().powi(l)
}

/// Stokes double-layer kernel for a source with unit normal `n`.
pub fn stresslet_dlp<T: Real>(t: Point<T>, s: Point<T>, n: Point<T>) -> Result<[[T; 2]; 2]> {
    let (dx, dy) = offset(t, s)?;
    if ((n[0] * n[0] + n[1] * n[1]) - T::one()).abs() > T::c(1e3) * T::epsilon() {
        return Err(Error::NonUnitNormal { index: 0 });
    }
    Ok(stresslet_raw(dx, dy, n))
}
