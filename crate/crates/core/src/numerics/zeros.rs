use std::f64::consts::PI;

use super::bessel::sph_j_ext;
use super::NumericsError;

const SCAN_STEP: f64 = 0.25;
const ROOT_TOL: f64 = 1e-13;

/// Table of `λ_{n,m}`, the `m`-th positive zero of `j_{n-1}`, for
/// `0 <= n <= n_max` and `1 <= m <= m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroTable {
    n_max: u32,
    m_max: u32,
    lambda: Vec<f64>,
}

impl ZeroTable {
    /// Wraps a raw row-major table (`n` major) without verification.
    /// Intended for fault injection in self-checks.
    pub fn from_raw(n_max: u32, m_max: u32, lambda: Vec<f64>) -> Self {
        assert_eq!(lambda.len(), ((n_max + 1) * m_max) as usize);
        Self { n_max, m_max, lambda }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    pub fn contains(&self, m: u32, n: u32) -> bool {
        m >= 1 && m <= self.m_max && n <= self.n_max
    }

    /// `λ_{n,m}`; panics outside the table.
    pub fn lambda(&self, n: u32, m: u32) -> f64 {
        assert!(self.contains(m, n), "(m={m}, n={n}) outside zero table");
        self.lambda[(n * self.m_max + m - 1) as usize]
    }

    pub fn get(&self, n: u32, m: u32) -> Option<f64> {
        self.contains(m, n).then(|| self.lambda(n, m))
    }

    pub fn row(&self, n: u32) -> &[f64] {
        let start = (n * self.m_max) as usize;
        &self.lambda[start..start + self.m_max as usize]
    }

    /// Copy with every entry shifted by `delta`.
    pub fn perturbed(&self, delta: f64) -> Self {
        Self { lambda: self.lambda.iter().map(|l| l + delta).collect(), ..self.clone() }
    }
}

/// Tabulates the zeros of `j_{n-1}` for all `n <= n_max`, `m <= m_max`.
///
/// Rows `n = 0` and `n = 1` use the closed forms `(m - 1/2)π` and `mπ`.
/// Other rows are bracketed by a fixed-step sign-change scan starting at
/// `n - 1/2` (no zero of `j_{n-1}` lies below its order), refined by
/// bisection and then Newton steps.
pub fn find_bessel_zeros(n_max: u32, m_max: u32) -> Result<ZeroTable, NumericsError> {
    if m_max < 1 {
        return Err(NumericsError::Domain("m_max must be at least 1".into()));
    }
    let mut lambda = Vec::with_capacity(((n_max + 1) * m_max) as usize);
    for n in 0..=n_max {
        lambda.extend(zeros_of_order(n as i32 - 1, m_max as usize)?);
    }
    Ok(ZeroTable { n_max, m_max, lambda })
}

/// First `count` positive zeros of `j_k`, `k >= -1`.
pub fn zeros_of_order(k: i32, count: usize) -> Result<Vec<f64>, NumericsError> {
    match k {
        -1 => return Ok((1..=count).map(|m| (m as f64 - 0.5) * PI).collect()),
        0 => return Ok((1..=count).map(|m| m as f64 * PI).collect()),
        _ => {}
    }
    let f = |x: f64| sph_j_ext(k, x);
    let mut out = Vec::with_capacity(count);
    let mut a = (k as f64 + 0.5).max(0.1);
    let mut fa = f(a);
    let limit = (count as f64 + k as f64 + 4.0) * PI + 10.0;
    while out.len() < count {
        let b = a + SCAN_STEP;
        if b > limit {
            return Err(NumericsError::RootBracket(format!(
                "found {} of {count} zeros of j_{k} below {limit}",
                out.len()
            )));
        }
        let fb = f(b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            out.push(refine(k, a, b)?);
        }
        a = b;
        fa = fb;
    }
    for w in out.windows(2) {
        if w[1] - w[0] <= 1.0 {
            return Err(NumericsError::RootBracket(format!("zeros of j_{k} at {} and {} too close", w[0], w[1])));
        }
    }
    Ok(out)
}

fn refine(k: i32, mut lo: f64, mut hi: f64) -> Result<f64, NumericsError> {
    let f = |x: f64| sph_j_ext(k, x);
    let mut flo = f(lo);
    if flo * f(hi) > 0.0 {
        return Err(NumericsError::RootBracket(format!("no sign change of j_{k} on [{lo}, {hi}]")));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // j_k' = j_{k-1} - (k+1)/x j_k, k >= 1 here.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let fx = f(x);
        let dfx = sph_j_ext(k - 1, x) - (k as f64 + 1.0) / x * fx;
        let step = fx / dfx;
        let next = x - step;
        if !(lo..=hi).contains(&next) {
            break;
        }
        x = next;
        if step.abs() < ROOT_TOL * 0.01 {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_j1(mut lo: f64, mut hi: f64) -> f64 {
        let j1 = |x: f64| x.sin() / (x * x) - x.cos() / x;
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if (j1(mid) < 0.0) == (j1(lo) < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn closed_form_rows() {
        let z = find_bessel_zeros(3, 10).unwrap();
        assert_eq!(z.lambda(1, 1), PI);
        for m in 1..=10 {
            assert!((z.lambda(1, m) - m as f64 * PI).abs() < 1e-12);
            assert!((z.lambda(0, m) - (m as f64 - 0.5) * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn first_zero_of_j1() {
        let z = find_bessel_zeros(2, 3).unwrap();
        let oracle = bisect_j1(4.0, 5.0);
        assert!((z.lambda(2, 1) - oracle).abs() < 1e-12);
        assert!((z.lambda(2, 1) - 4.4934094579).abs() < 1e-10);
    }

    #[test]
    fn high_order_first_zero() {
        // first zero of j_11 from a 40-digit reference
        let z = zeros_of_order(11, 2).unwrap();
        assert!((z[0] - 16.144742942301341).abs() < 1e-12);
    }

    #[test]
    fn residual_and_interlacing() {
        let z = find_bessel_zeros(12, 60).unwrap();
        for n in 0..=12u32 {
            for m in 1..=60 {
                let l = z.lambda(n, m);
                let slope = crate::numerics::sph_bessel_j_prime((n as i32 - 1).max(0) as u32, l).abs().max(1e-3);
                assert!(sph_j_ext(n as i32 - 1, l).abs() / slope < 1e-12);
                if m < 60 {
                    assert!(z.lambda(n, m + 1) > l + 1.0);
                    assert!(z.lambda(n, m + 1) > l);
                }
                if n < 12 && m < 60 {
                    assert!(l < z.lambda(n + 1, m) && z.lambda(n + 1, m) < z.lambda(n, m + 1));
                }
            }
        }
    }

    #[test]
    fn asymptotic_gap() {
        // McMahon: λ = β - (μ-1)/(8β) - 4(μ-1)(7μ-31)/(3(8β)³) + O(β⁻⁵), μ = (2n-1)², β = (m + (n-1)/2)π
        let z = find_bessel_zeros(10, 100).unwrap();
        for n in 0..=10u32 {
            let mu = (2.0 * n as f64 - 1.0).powi(2);
            let beta = |m: u32| (m as f64 + (n as f64 - 1.0) / 2.0) * PI;
            let gap = |m: u32| (z.lambda(n, m) - beta(m)).abs();
            for m in 20..=100 {
                let b8 = 8.0 * beta(m);
                let mcmahon = beta(m) - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3));
                assert!((z.lambda(n, m) - mcmahon).abs() < 5e-4, "n={n} m={m}");
                if n <= 3 {
                    assert!(gap(m) < 1.0 / m as f64, "n={n} m={m} gap={}", gap(m));
                }
                if m > 20 {
                    assert!(gap(m) <= gap(m - 1) + 1e-12);
                }
            }
        }
    }
}
