//! Spherical Bessel functions of the first kind, `j_n(x)`, for integer order.
//!
//! Orders `-1`, `0` and `1` use closed trigonometric forms. Higher orders use
//! upward recurrence when `x > 1.5 n` and Miller's downward recurrence, normalized
//! against the closed forms, otherwise. A power series covers `x < 1`,
//! where both recurrences lose accuracy or underflow.

use super::NumericsError;

const SERIES_CUTOFF: f64 = 1.0;
/// Upward recurrence is used only for `x > UPWARD_RATIO * n`.
const UPWARD_RATIO: f64 = 1.5;

/// `j_n(x)` with the domain checks of the public contract.
///
/// `n = -1` yields `cos(x)/x` and is singular at the origin.
pub fn sph_bessel_j(n: i32, x: f64) -> Result<f64, NumericsError> {
    if n < -1 {
        return Err(NumericsError::Domain(format!("order {n} is below -1")));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(NumericsError::Domain(format!("argument {x} must be finite and >= 0")));
    }
    if n == -1 {
        if x == 0.0 {
            return Err(NumericsError::Domain("j_{-1} is singular at x = 0".into()));
        }
        return Ok(x.cos() / x);
    }
    Ok(sph_j(n as u32, x))
}

/// `j_n(x)` for `n >= 0` and `x >= 0`, without domain checks.
pub fn sph_j(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_CUTOFF {
        return series(n, x);
    }
    match n {
        0 => x.sin() / x,
        1 => (x.sin() / x - x.cos()) / x,
        _ if x > UPWARD_RATIO * n as f64 => upward(n, x),
        _ => miller(n, x),
    }
}

/// `j_{-1}(x) = cos(x)/x` for `x > 0`.
pub fn sph_j_minus_one(x: f64) -> f64 {
    x.cos() / x
}

/// `j_k(x)` for `k >= -1`; `x > 0` is required when `k = -1`.
pub(crate) fn sph_j_ext(k: i32, x: f64) -> f64 {
    if k == -1 {
        sph_j_minus_one(x)
    } else {
        sph_j(k as u32, x)
    }
}

/// `j_n'(x) = j_{n-1}(x) - (n+1)/x * j_n(x)`.
pub fn sph_bessel_j_prime(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 1 { 1.0 / 3.0 } else { 0.0 };
    }
    if n == 0 {
        return -sph_j(1, x);
    }
    sph_j(n - 1, x) - (n as f64 + 1.0) / x * sph_j(n, x)
}

/// Second derivative from the two first-order recurrences
/// `j_k' = j_{k-1} - (k+1)/x j_k` and `j_k' = (k/x) j_k - j_{k+1}`.
pub fn sph_bessel_j_second(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    let jn = sph_j(n, x);
    let jn1 = sph_j_ext(n as i32 - 1, x);
    let dj = jn1 - (nf + 1.0) / x * jn;
    let djn1 = (nf - 1.0) / x * jn1 - jn;
    djn1 + (nf + 1.0) / (x * x) * jn - (nf + 1.0) / x * dj
}

fn series(n: u32, x: f64) -> f64 {
    // x^n / (2n+1)!!  * sum_k (-x^2/2)^k / (k! (2n+3)(2n+5)...(2n+2k+1))
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= x / (2 * k + 1) as f64;
    }
    let z = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200u32 {
        term *= z / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn upward(n: u32, x: f64) -> f64 {
    let mut prev = x.sin() / x;
    let mut cur = (prev - x.cos()) / x;
    for k in 1..n {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn miller(n: u32, x: f64) -> f64 {
    let start = (n as f64).max(x) as u32 + 16 + (40.0 * (n as f64 + x)).sqrt() as u32;
    let mut above = 0.0_f64;
    let mut cur = 1e-300_f64;
    let mut at_n = 0.0;
    let mut k = start;
    while k > 0 {
        // cur = f_k, above = f_{k+1}; compute f_{k-1}
        let below = (2 * k + 1) as f64 / x * cur - above;
        above = cur;
        cur = below;
        k -= 1;
        if k == n {
            at_n = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            at_n *= 1e-250;
        }
    }
    // cur = f_0, above = f_1
    let j0 = x.sin() / x;
    let j1 = (j0 - x.cos()) / x;
    let scale = if j0.abs() >= j1.abs() { j0 / cur } else { j1 / above };
    at_n * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Reference values from a 40-digit evaluation of sqrt(pi/2x) J_{n+1/2}(x).
    const REFERENCE: &[(u32, f64, f64)] = &[
        (2, 0.3, 0.0059615248686202172803),
        (2, 4.4934094579, 0.21723362821253622811),
        (3, 10.0, -0.039495844984470324358),
        (5, 0.7, 0.000015866115512568321475),
        (5, 2.5, 0.0073576387377689362884),
        (8, 1.5, 7.0086477753043280884e-7),
        (10, 7.3, 0.0092331933854981510542),
        (12, 30.0, 0.032847427924271470037),
        (20, 5.0, 5.4277267607932083501e-12),
        (20, 19.5, 0.031542523549018132705),
        (20, 21.0, 0.051788416605743342169),
        (30, 45.0, 0.017774163828437106073),
        (40, 12.0, 9.4665918925204103617e-19),
        (64, 3.0, 1.5610785255832608913e-79),
        (64, 63.0, 0.011833681241322643596),
        (64, 65.0, 0.019277440874761901208),
        (64, 150.0, 0.0046790359101606093917),
        (7, 199.9, 0.0026111842275375878908),
        (64, 199.9, 0.00045410556925969007968),
        (33, 1.0, 2.0303886120403828933e-48),
        (2, 0.001, 6.6666661904762039813e-8),
        (15, 0.05, 1.59023530773052818e-37),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(n, x, want) in REFERENCE {
            let got = sph_j(n, x);
            let rel = ((got - want) / want).abs();
            assert!(rel < 1e-12, "j_{n}({x}) = {got}, want {want}, rel {rel:e}");
        }
    }

    #[test]
    fn closed_forms() {
        assert!(sph_j(0, PI).abs() < 1e-16);
        assert!((sph_j(1, PI) - 1.0 / PI).abs() < 1e-15);
        assert!((sph_bessel_j(-1, 2.0).unwrap() - 2f64.cos() / 2.0).abs() < 1e-16);
        assert!(sph_bessel_j(-1, 0.0).is_err());
        assert!(sph_bessel_j(2, -1.0).is_err());
    }

    #[test]
    fn order_two_matches_power_series() {
        // Power series of j_2 summed directly, independent of the code path above.
        let x: f64 = 4.4934094579;
        let mut sum = 0.0;
        let mut fact_k = 1.0;
        let mut double_fact = 15.0; // (2*2+1)!! * 1
        let mut pow = x * x;
        for k in 0..60 {
            if k > 0 {
                fact_k *= k as f64;
                double_fact *= (2 * 2 + 2 * k + 1) as f64;
                pow *= x * x;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * pow / (2f64.powi(k) * fact_k * double_fact);
        }
        assert!((sph_j(2, x) - sum).abs() < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let fd = |n: u32, x: f64| {
            let h = 1e-6;
            (sph_j(n, x + h) - sph_j(n, x - h)) / (2.0 * h)
        };
        let d = sph_bessel_j_prime(0, PI / 2.0);
        assert!((d + 0.4052847346).abs() < 1e-9);
        assert!((d - fd(0, PI / 2.0)).abs() < 1e-8);
        assert!((sph_bessel_j_prime(1, PI) + 2.0 / (PI * PI)).abs() < 1e-15);
        assert!((sph_bessel_j_prime(3, 10.0) - fd(3, 10.0)).abs() < 1e-8);
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        for &(n, x) in &[(0u32, 2.0), (1, 3.3), (4, 7.1), (9, 4.0)] {
            let h = 1e-4;
            let fd = (sph_j(n, x + h) - 2.0 * sph_j(n, x) + sph_j(n, x - h)) / (h * h);
            assert!((sph_bessel_j_second(n, x) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn continuity_across_strategy_switch() {
        for n in 2..64u32 {
            let x = UPWARD_RATIO * n as f64;
            assert!((upward(n, x) - miller(n, x)).abs() <= 1e-12 / x, "n={n}");
        }
    }

    #[test]
    fn recurrences_agree_where_both_apply() {
        for n in 2..40u32 {
            for i in 0..20 {
                let x = n as f64 * (1.5 + 0.1 * i as f64);
                let (a, b) = (upward(n, x), miller(n, x));
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-3), "n={n} x={x}: {a} vs {b}");
            }
        }
    }
}
