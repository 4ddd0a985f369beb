//! One-dimensional nonuniform discrete Fourier transforms.
//!
//! ```text
//! type 1:  f_k = Σ_j c_j e^{+ik x_j},        k = -M..M
//! type 2:  v_j = Σ_k f_k e^{-ik x_j}
//! type 3:  v_n = Σ_j c_j e^{+i s_n y_j}
//! ```
//!
//! [`Backend::Reference`] sums directly and is the correctness oracle.
//! [`Backend::Accelerated`] spreads onto a twice oversampled grid with the
//! "exponential of semicircle" kernel `φ(z) = e^{β(√(1-z²) - 1)}` (width
//! `⌈log10(1/ε)⌉ + 2` grid points, `β = 2.30·width`), runs an
//! FFT and divides by the kernel transform. Type 3 spreads onto a fine
//! uniform grid in `y` and finishes with a type 2 transform.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_f64;
use crate::scalar::{cis, Cx, Real};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which implementation evaluates the sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Reference,
    Accelerated,
}

/// Tolerances the engine accepts.
pub const TOLERANCE_RANGE: (f64, f64) = (1e-14, 1e-2);

fn check_tolerance(tol: f64) -> Result<()> {
    if (TOLERANCE_RANGE.0..=TOLERANCE_RANGE.1).contains(&tol) {
        Ok(())
    } else {
        Err(Error::PrecisionOutOfRange(tol))
    }
}

/// Spreading kernel for a tolerance: width in grid points and shape `β`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct EsKernel {
    width: usize,
    beta: f64,
}

impl EsKernel {
    fn for_tolerance(tol: f64) -> Self {
        let width = ((1.0 / tol).log10().ceil() as usize + 2).clamp(3, 16);
        EsKernel { width, beta: 2.30 * width as f64 }
    }

    #[inline]
    fn eval<T: Real>(&self, z: T) -> T {
        let one = T::one();
        if z.abs() >= one {
            return T::zero();
        }
        (T::c(self.beta) * ((one - z * z).sqrt() - one)).exp()
    }

    /// `∫_{-1}^{1} φ(z) e^{iξz} dz` (real by symmetry).
    fn transform(&self, xi: &[f64]) -> Vec<f64> {
        let (x, w) = gauss_legendre_f64(4 * self.width + 30);
        let phi: Vec<f64> = x.iter().map(|&z| self.eval(z)).collect();
        xi.iter()
            .map(|&s| x.iter().zip(&w).zip(&phi).map(|((&z, &wi), &p)| wi * p * (s * z).cos()).sum())
            .collect()
    }
}

/// Smallest length `≥ n` whose only prime factors are 2, 3 and 5.
fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Oversampled periodic grid shared by the type 1 and type 2 transforms.
struct Grid<T: Real> {
    n: usize,
    kernel: EsKernel,
    /// Half-width of the kernel support in phase units.
    alpha: T,
    /// `1/φ̂(k)` scaled for `k = -M..M`.
    deconv: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Grid<T> {
    fn new(m: usize, tol: f64) -> Self {
        let kernel = EsKernel::for_tolerance(tol);
        let n = fft_friendly((2 * (2 * m + 1)).max(2 * kernel.width));
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let alpha = kernel.width as f64 * h / 2.0;
        let ks: Vec<f64> = (0..=2 * m).map(|i| alpha * (i as f64 - m as f64)).collect();
        let deconv = kernel.transform(&ks).into_iter().map(|v| T::c(h / (alpha * v))).collect();
        let mut planner = FftPlanner::new();
        Grid {
            n,
            kernel,
            alpha: T::c(alpha),
            deconv,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Grid indices and kernel values touched by the point `x`.
    #[inline]
    fn stencil(&self, x: T, out: &mut Vec<(usize, T)>) {
        out.clear();
        let n = self.n as i64;
        let h = T::c(2.0) * T::PI() / T::n(n);
        let first = ((x - self.alpha) / h).ceil().to_i64().unwrap_or(0);
        for l in first..first + self.kernel.width as i64 + 1 {
            let z = (x - T::n(l) * h) / self.alpha;
            let v = self.kernel.eval(z);
            if v > T::zero() {
                out.push((l.rem_euclid(n) as usize, v));
            }
        }
    }
}

/// A type 1 / type 2 plan: fixed phases `x_j ∈ [-π, π]` and modes `-M..M`.
pub struct NdftPlan<T: Real> {
    points: Vec<T>,
    modes: usize,
    tolerance: f64,
    backend: Backend,
    grid: Option<Grid<T>>,
}

impl<T: Real> std::fmt::Debug for NdftPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdftPlan")
            .field("points", &self.points.len())
            .field("modes", &self.modes)
            .field("tolerance", &self.tolerance)
            .field("backend", &self.backend)
            .finish()
    }
}

impl<T: Real> NdftPlan<T> {
    /// Phases must already be wrapped into `[-π, π]`.
    pub fn new(points: Vec<T>, modes: usize, tolerance: f64, backend: Backend) -> Result<Self> {
        check_tolerance(tolerance)?;
        let pi = T::PI() * (T::one() + T::c(4.0) * T::epsilon());
        if let Some(x) = points.iter().find(|x| !(x.abs() <= pi)) {
            return Err(Error::Config(format!("phase {x} outside [-pi, pi]")));
        }
        let grid = (backend == Backend::Accelerated).then(|| Grid::new(modes, tolerance));
        Ok(NdftPlan { points, modes, tolerance, backend, grid })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// `M`: modes run over `-M..M`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `f_k = Σ_j c_j e^{ik x_j}` for `k = -M..M`.
    pub fn type1(&self, coeffs: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        if coeffs.len() != self.points.len() {
            return Err(Error::LengthMismatch { expected: self.points.len(), got: coeffs.len() });
        }
        match &self.grid {
            None => Ok(self.type1_reference(coeffs)),
            Some(g) => Ok(self.type1_fast(g, coeffs)),
        }
    }

    /// `v_j = Σ_k f_k e^{-ik x_j}`.
    pub fn type2(&self, modes: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        if modes.len() != 2 * self.modes + 1 {
            return Err(Error::LengthMismatch { expected: 2 * self.modes + 1, got: modes.len() });
        }
        match &self.grid {
            None => Ok(self.type2_reference(modes)),
            Some(g) => Ok(self.type2_fast(g, modes)),
        }
    }

    fn type1_reference(&self, coeffs: &[Cx<T>]) -> Vec<Cx<T>> {
        let m = self.modes as i64;
        (-m..=m)
            .into_par_iter()
            .map(|k| {
                let kk = T::n(k);
                self.points.iter().zip(coeffs).fold(Cx::new(T::zero(), T::zero()), |a, (&x, &c)| a + c * cis(kk * x))
            })
            .collect()
    }

    fn type2_reference(&self, modes: &[Cx<T>]) -> Vec<Cx<T>> {
        let m = self.modes as i64;
        self.points
            .par_iter()
            .map(|&x| {
                (-m..=m).zip(modes).fold(Cx::new(T::zero(), T::zero()), |a, (k, &f)| a + f * cis(-T::n(k) * x))
            })
            .collect()
    }

    fn type1_fast(&self, g: &Grid<T>, coeffs: &[Cx<T>]) -> Vec<Cx<T>> {
        let zero = Cx::new(T::zero(), T::zero());
        let mut b = vec![zero; g.n];
        let mut st = Vec::with_capacity(g.kernel.width + 1);
        for (&x, &c) in self.points.iter().zip(coeffs) {
            g.stencil(x, &mut st);
            for &(l, v) in &st {
                b[l] += c * v;
            }
        }
        // Σ_l b_l e^{+ik l h}.
        g.inverse.process(&mut b);
        let m = self.modes as i64;
        let n = g.n as i64;
        (-m..=m).map(|k| b[k.rem_euclid(n) as usize] * g.deconv[(k + m) as usize]).collect()
    }

    fn type2_fast(&self, g: &Grid<T>, modes: &[Cx<T>]) -> Vec<Cx<T>> {
        let zero = Cx::new(T::zero(), T::zero());
        let mut b = vec![zero; g.n];
        let m = self.modes as i64;
        let n = g.n as i64;
        for k in -m..=m {
            b[k.rem_euclid(n) as usize] = modes[(k + m) as usize] * g.deconv[(k + m) as usize];
        }
        // Σ_k F_k e^{-ik l h}.
        g.forward.process(&mut b);
        self.points
            .par_iter()
            .map_init(
                || Vec::with_capacity(g.kernel.width + 1),
                |st, &x| {
                    g.stencil(x, st);
                    st.iter().fold(zero, |a, &(l, v)| a + b[l] * v)
                },
            )
            .collect()
    }
}

/// `v_n = Σ_j c_j e^{i s_n y_j}` for arbitrary real points and frequencies.
pub fn type3<T: Real>(points: &[T], coeffs: &[Cx<T>], freqs: &[T], tolerance: f64, backend: Backend) -> Result<Vec<Cx<T>>> {
    check_tolerance(tolerance)?;
    if coeffs.len() != points.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: coeffs.len() });
    }
    if points.iter().chain(freqs).any(|v| !v.is_finite()) {
        return Err(Error::Config("type-3 inputs must be finite".into()));
    }
    let zero = Cx::new(T::zero(), T::zero());
    let s_max = freqs.iter().fold(T::zero(), |a, s| a.max(s.abs()));
    let y_max = points.iter().fold(T::zero(), |a, y| a.max(y.abs()));
    if backend == Backend::Reference || points.is_empty() || s_max == T::zero() || y_max == T::zero() {
        return Ok(freqs
            .par_iter()
            .map(|&s| points.iter().zip(coeffs).fold(zero, |a, (&y, &c)| a + c * cis(s * y)))
            .collect());
    }
    // Fine grid in y with spacing π/(2S): the kernel transform is flat on
    // |s| ≤ S and negligible beyond the first alias at 3S.
    let kernel = EsKernel::for_tolerance(tolerance);
    let h = std::f64::consts::PI / (2.0 * s_max.f64());
    let alpha = kernel.width as f64 * h / 2.0;
    let half = (y_max.f64() / h).ceil() as usize + kernel.width;
    let mut b = vec![zero; 2 * half + 1];
    let (th, ta) = (T::c(h), T::c(alpha));
    for (&y, &c) in points.iter().zip(coeffs) {
        let first = ((y - ta) / th).ceil().to_i64().unwrap_or(0);
        for l in first..first + kernel.width as i64 + 1 {
            let v = kernel.eval((y - T::n(l) * th) / ta);
            if v > T::zero() {
                b[(l + half as i64) as usize] += c * v;
            }
        }
    }
    // Σ_l b_l e^{i s l h} is a type 2 sum at phase -s h ∈ [-π/2, π/2].
    let phases: Vec<T> = freqs.iter().map(|&s| -s * th).collect();
    // The inner sums are amplified by the deconvolution below.
    let inner = (tolerance * 0.1).max(TOLERANCE_RANGE.0);
    let plan = NdftPlan::new(phases, half, inner, Backend::Accelerated)?;
    let sums = plan.type2(&b)?;
    let xis: Vec<f64> = freqs.iter().map(|s| alpha * s.f64()).collect();
    let phi = kernel.transform(&xis);
    Ok(sums.into_iter().zip(phi).map(|(v, p)| v * T::c(h / (alpha * p))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> (Vec<f64>, Vec<Cx<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let c = (0..n).map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        (x, c)
    }

    fn l1(c: &[Cx<f64>]) -> f64 {
        c.iter().map(|z| z.norm()).sum()
    }

    fn max_diff(a: &[Cx<f64>], b: &[Cx<f64>]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_point_at_origin() {
        for backend in [Backend::Reference, Backend::Accelerated] {
            let p = NdftPlan::new(vec![0.0], 5, 1e-12, backend).unwrap();
            let f = p.type1(&[Cx::new(1.0, 0.0)]).unwrap();
            assert!(f.iter().all(|z| (z - Cx::new(1.0, 0.0)).norm() < 1e-12), "{backend:?}");
        }
    }

    #[test]
    fn delta_mode_gives_ones() {
        for backend in [Backend::Reference, Backend::Accelerated] {
            let (x, _) = random(7, 1);
            let p = NdftPlan::new(x, 3, 1e-12, backend).unwrap();
            let mut f = vec![Cx::new(0.0, 0.0); 7];
            f[3] = Cx::new(1.0, 0.0);
            let v = p.type2(&f).unwrap();
            assert!(v.iter().all(|z| (z - Cx::new(1.0, 0.0)).norm() < 1e-12), "{backend:?}");
        }
    }

    #[test]
    fn equispaced_points_give_dft() {
        let n = 16usize;
        let m = 7usize;
        let x: Vec<f64> = (0..n).map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect();
        let (_, c) = random(n, 2);
        let p = NdftPlan::new(x.clone(), m, 1e-12, Backend::Reference).unwrap();
        let f = p.type1(&c).unwrap();
        // Dense DFT matrix product.
        for (i, k) in (-(m as i64)..=m as i64).enumerate() {
            let mut want = Cx::new(0.0, 0.0);
            for j in 0..n {
                let ang = 2.0 * std::f64::consts::PI * (k * j as i64).rem_euclid(n as i64) as f64 / n as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                want += c[j] * Cx::from_polar(sign, ang);
            }
            assert!((f[i] - want).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn accelerated_matches_reference_small() {
        let (x, c) = random(3, 3);
        for tol in [1e-3, 1e-6, 1e-9, 1e-12, 1e-14] {
            let r = NdftPlan::new(x.clone(), 4, tol, Backend::Reference).unwrap();
            let a = NdftPlan::new(x.clone(), 4, tol, Backend::Accelerated).unwrap();
            let d = max_diff(&r.type1(&c).unwrap(), &a.type1(&c).unwrap());
            assert!(d <= tol * l1(&c), "type1 tol={tol:e}: {d:e}");
        }
    }

    #[test]
    fn accelerated_matches_reference() {
        let (x, c) = random(400, 4);
        let (_, f) = random(2 * 150 + 1, 5);
        for tol in [1e-4, 1e-8, 1e-12] {
            let r = NdftPlan::new(x.clone(), 150, tol, Backend::Reference).unwrap();
            let a = NdftPlan::new(x.clone(), 150, tol, Backend::Accelerated).unwrap();
            let d1 = max_diff(&r.type1(&c).unwrap(), &a.type1(&c).unwrap());
            assert!(d1 <= tol * l1(&c), "type1 tol={tol:e}: {d1:e}");
            let d2 = max_diff(&r.type2(&f).unwrap(), &a.type2(&f).unwrap());
            assert!(d2 <= tol * l1(&f), "type2 tol={tol:e}: {d2:e}");
        }
    }

    #[test]
    fn adjoint_identity() {
        let (x, c) = random(50, 6);
        let (_, f) = random(21, 7);
        let p = NdftPlan::new(x, 10, 1e-12, Backend::Reference).unwrap();
        let t1 = p.type1(&c).unwrap();
        let t2 = p.type2(&f).unwrap();
        // ⟨type1(c), f⟩ = Σ_k f_k^* Σ_j c_j e^{ikx_j} = ⟨c, type2(f)⟩.
        let lhs: Cx<f64> = t1.iter().zip(&f).map(|(a, b)| a * b.conj()).sum();
        let rhs: Cx<f64> = c.iter().zip(&t2).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(1.0));
    }

    #[test]
    fn type3_integer_frequencies_reduce_to_type1() {
        let (x, c) = random(30, 8);
        let freqs: Vec<f64> = (-6..=6).map(|k| k as f64).collect();
        let v = type3(&x, &c, &freqs, 1e-12, Backend::Reference).unwrap();
        let f = NdftPlan::new(x, 6, 1e-12, Backend::Reference).unwrap().type1(&c).unwrap();
        assert!(max_diff(&v, &f) < 1e-13);
    }

    #[test]
    fn type3_reference_matches_direct_sum() {
        let y = [0.3, -1.7, 2.25];
        let c = [Cx::new(1.0, 0.5), Cx::new(-0.25, 2.0), Cx::new(0.0, -1.0)];
        let s = [0.0, 1.5, -3.25, 10.0];
        let v = type3(&y, &c, &s, 1e-12, Backend::Reference).unwrap();
        for (n, &sn) in s.iter().enumerate() {
            let want: Cx<f64> = y.iter().zip(&c).map(|(&yj, cj)| cj * Cx::from_polar(1.0, sn * yj)).sum();
            assert!((v[n] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn type3_accelerated_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (ny, ns, ymax, smax) in [(300usize, 200usize, 2.0, 40.0), (50, 500, 0.1, 300.0), (500, 20, 30.0, 3.0)] {
            let y: Vec<f64> = (0..ny).map(|_| rng.gen_range(-ymax..ymax)).collect();
            let s: Vec<f64> = (0..ns).map(|_| rng.gen_range(-smax..smax)).collect();
            let c: Vec<Cx<f64>> = (0..ny).map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            for tol in [1e-5, 1e-9, 1e-12] {
                let r = type3(&y, &c, &s, tol, Backend::Reference).unwrap();
                let a = type3(&y, &c, &s, tol, Backend::Accelerated).unwrap();
                let d = max_diff(&r, &a);
                assert!(d <= tol * l1(&c), "ymax={ymax} smax={smax} tol={tol:e}: {d:e}");
            }
        }
    }

    #[test]
    fn length_and_tolerance_errors() {
        let p = NdftPlan::new(vec![0.1, 0.2], 3, 1e-8, Backend::Accelerated).unwrap();
        assert!(matches!(p.type1(&[Cx::new(1.0, 0.0)]), Err(Error::LengthMismatch { expected: 2, got: 1 })));
        assert!(matches!(p.type2(&[Cx::new(1.0, 0.0)]), Err(Error::LengthMismatch { expected: 7, got: 1 })));
        assert!(matches!(NdftPlan::<f64>::new(vec![], 3, 1e-16, Backend::Reference), Err(Error::PrecisionOutOfRange(_))));
        assert!(NdftPlan::<f64>::new(vec![4.0], 3, 1e-8, Backend::Reference).is_err());
    }

    #[test]
    fn f32_accelerated_reaches_single_precision() {
        let (x, c) = random(100, 10);
        let xs: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let cs: Vec<Cx<f32>> = c.iter().map(|z| Cx::new(z.re as f32, z.im as f32)).collect();
        let r = NdftPlan::new(xs.clone(), 40, 1e-5, Backend::Reference).unwrap().type1(&cs).unwrap();
        let a = NdftPlan::new(xs, 40, 1e-5, Backend::Accelerated).unwrap().type1(&cs).unwrap();
        let d = r.iter().zip(&a).map(|(p, q)| (p - q).norm()).fold(0.0f32, f32::max);
        assert!((d as f64) <= 1e-5 * l1(&c));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn type1_is_linear(seed in 0u64..1000, a in -2.0f64..2.0) {
            let (x, c) = random(20, seed);
            let (_, e) = random(20, seed + 1);
            let p = NdftPlan::new(x, 8, 1e-10, Backend::Accelerated).unwrap();
            let mix: Vec<Cx<f64>> = c.iter().zip(&e).map(|(u, v)| u * a + v).collect();
            let lhs = p.type1(&mix).unwrap();
            let u = p.type1(&c).unwrap();
            let v = p.type1(&e).unwrap();
            for k in 0..lhs.len() {
                prop_assert!((lhs[k] - (u[k] * a + v[k])).norm() < 1e-12);
            }
        }

        #[test]
        fn accelerated_is_deterministic(seed in 0u64..1000) {
            let (x, c) = random(30, seed);
            let p = NdftPlan::new(x, 12, 1e-9, Backend::Accelerated).unwrap();
            prop_assert_eq!(p.type1(&c).unwrap(), p.type1(&c).unwrap());
        }
    }
}
