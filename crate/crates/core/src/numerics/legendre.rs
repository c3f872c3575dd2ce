use std::f64::consts::PI;

use super::NumericsError;

/// Legendre polynomial `P_n(t)` by the three-term recurrence.
pub fn legendre_p(n: u32, t: f64) -> f64 {
    legendre_p_and_derivative(n, t).0
}

/// `(P_n(t), P_n'(t))`. The derivative uses
/// `(1 - t^2) P_n' = n (P_{n-1} - t P_n)`, falling back to the closed value at `t = ±1`.
pub fn legendre_p_and_derivative(n: u32, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = t;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * t * cur - (kf - 1.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    let one_minus = 1.0 - t * t;
    let deriv = if one_minus.abs() < 1e-300 {
        let sign = if t > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (prev - t * cur) / one_minus
    };
    (cur, deriv)
}

/// All of `P_0(t) ..= P_{n_max}(t)`.
pub fn legendre_table(n_max: u32, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(t);
    }
    for k in 2..=n_max as usize {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * t * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(next);
    }
    out
}

/// Associated Legendre function scaled so that
/// `sqrt((2n+1)/(4π) (n-m)!/(n+m)!) P_{n,m}(t)` is returned, computed by the
/// normalized column recurrence (no Condon–Shortley phase).
fn normalized_associated(n: u32, m: u32, t: f64) -> f64 {
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    if n == m {
        return pmm;
    }
    let mf = m as f64;
    let mut prev = pmm;
    let mut cur = (2.0 * mf + 3.0).sqrt() * t * pmm;
    for l in (m + 2)..=n {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (t * cur - b * prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Fully normalized real spherical harmonic `Y_{n,j}(φ, t)`, `t = cos ϑ`,
/// with `sin(jφ)` for `j > 0` and `cos(jφ)` for `j <= 0`.
pub fn sph_harmonic(n: u32, j: i32, phi: f64, t: f64) -> Result<f64, NumericsError> {
    if j.unsigned_abs() > n {
        return Err(NumericsError::Index(format!("|j| = {} exceeds n = {n}", j.abs())));
    }
    let m = j.unsigned_abs();
    let p = normalized_associated(n, m, t);
    Ok(if j == 0 {
        p
    } else if j > 0 {
        2f64.sqrt() * p * (j as f64 * phi).sin()
    } else {
        2f64.sqrt() * p * (j as f64 * phi).cos()
    })
}

/// `Y_{n,0}(t) = sqrt((2n+1)/(4π)) P_n(t)`.
pub fn zonal_harmonic(n: u32, t: f64) -> f64 {
    ((2 * n + 1) as f64 / (4.0 * PI)).sqrt() * legendre_p(n, t)
}
