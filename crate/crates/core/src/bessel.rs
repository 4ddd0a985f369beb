//! Modified Bessel functions of the second kind.

use crate::scalar::Real;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_TERMS: usize = 10_000;

/// `(K0(x), K1(x))` for `x > 0`.
///
/// Uses the power series for `x <= 2` and Steed's continued fraction
/// otherwise. Relative accuracy is a few ulps in both regimes.
pub fn k0_k1<T: Real>(x: T) -> (T, T) {
    debug_assert!(x > T::zero());
    let two = T::c(2.0);
    let eps = T::epsilon();
    if x <= two {
        let x2 = x * T::c(0.5);
        let d = -x2.ln();
        let mut ff = d - T::c(EULER_GAMMA);
        let mut sum = ff;
        let mut p = T::c(0.5);
        let mut q = T::c(0.5);
        let mut c = T::one();
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_TERMS {
            let fi = T::n(i as i64);
            ff = (fi * ff + p + q) / (fi * fi);
            c = c * dd / fi;
            p = p / fi;
            q = q / fi;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * eps {
                break;
            }
        }
        (sum, sum1 * two / x)
    } else {
        let a1 = T::c(0.25);
        let mut b = two * (T::one() + x);
        let mut d = T::one() / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = T::zero();
        let mut q2 = T::one();
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = T::one() + q * delh;
        for i in 1..MAX_TERMS {
            let fi = T::n(i as i64);
            a -= two * fi;
            c = -a * c / (fi + T::one());
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += two;
            d = T::one() / (b + a * d);
            delh = (b * d - T::one()) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < eps {
                break;
            }
        }
        h = a1 * h;
        let k0 = (T::PI() / (two * x)).sqrt() * (-x).exp() / s;
        let k1 = k0 * (x + T::c(0.5) - h) / x;
        (k0, k1)
    }
}

pub fn k0<T: Real>(x: T) -> T {
    k0_k1(x).0
}

pub fn k1<T: Real>(x: T) -> T {
    k0_k1(x).1
}

/// `K_0(x), ..., K_n(x)` by upward recurrence (stable for `K`).
pub fn kn_all<T: Real>(n: usize, x: T) -> Vec<T> {
    let (a, b) = k0_k1(x);
    let mut out = Vec::with_capacity(n + 1);
    out.push(a);
    if n >= 1 {
        out.push(b);
    }
    for k in 1..n {
        let next = out[k - 1] + T::n(2 * k as i64) / x * out[k];
        out.push(next);
    }
    out
}

/// `K_n(x)`.
pub fn kn<T: Real>(n: usize, x: T) -> T {
    match n {
        0 => k0(x),
        1 => k1(x),
        _ => *kn_all(n, x).last().unwrap(),
    }
}

/// `A(z) = 1 - z K1(z)` and `B(z) = z^2 K0(z) + z K1(z) - 1`.
///
/// Both vanish like `z^2 log z` at the origin, so small arguments use their
/// own power series instead of the cancelling closed forms.
pub fn stokes_ab<T: Real>(z: T) -> (T, T) {
    if z > T::c(2.0) {
        let (k0, k1) = k0_k1(z);
        return (T::one() - z * k1, z * z * k0 + z * k1 - T::one());
    }
    let u = z * z * T::c(0.25);
    let l = (z * T::c(0.5)).ln();
    let mut psi1 = -T::c(EULER_GAMMA); // psi(k+1)
    let mut fact_k = T::one(); // k!
    let mut fact_k1 = T::one(); // (k+1)!
    let mut upow = u;
    let mut a = T::zero();
    let mut b = T::zero();
    let eps = T::epsilon();
    for k in 0..MAX_TERMS {
        let fk = T::n(k as i64);
        let psi2 = psi1 + T::one() / (fk + T::one());
        let ta = upow * (T::c(2.0) * l - psi1 - psi2) / (fact_k * fact_k1);
        let tb = upow * T::c(4.0) * (psi1 - l) / (fact_k * fact_k);
        a -= ta;
        b += tb + ta;
        if ta.abs() + tb.abs() <= eps * (a.abs() + b.abs()) {
            break;
        }
        upow = upow * u;
        fact_k = fact_k * (fk + T::one());
        fact_k1 = fact_k1 * (fk + T::c(2.0));
        psi1 = psi2;
    }
    (a, b)
}
