//! Distribution tails used by the group statistics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, cos, exp, ln, ln_gamma, normal_cdf, sqrt, PI};

const CF_EPS: f64 = 1e-16;
const CF_MAX_ITER: usize = 20_000;

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
    let tiny = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if abs(d) < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if abs(d) < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if abs(c) < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if abs(d) < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if abs(c) < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if abs(del - 1.0) < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::Statistics {
        reason: "incomplete beta continued fraction did not converge",
    })
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Statistics {
            reason: "incomplete beta requires a, b > 0 and x in [0, 1]",
        });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * ln(x) + b * ln(1.0 - x);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(exp(ln_front) * beta_continued_fraction(a, b, x)? / a)
    } else {
        Ok(1.0 - exp(ln_front) * beta_continued_fraction(b, a, 1.0 - x)? / b)
    }
}

/// Upper tail `P(X > f)` of the F distribution with `(d1, d2)` degrees of
/// freedom.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if f.is_nan() || !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::Statistics {
            reason: "F tail requires positive degrees of freedom",
        });
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
}

/// Two-sided Student t tail `P(|T| > t)`.
pub fn t_two_sided(t: f64, df: f64) -> Result<f64> {
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if abs(dx) < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn integrate<F: FnMut(f64) -> f64>(rule: &[(f64, f64)], lo: f64, hi: f64, panels: usize, mut f: F) -> f64 {
    let width = (hi - lo) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for &(x, w) in rule {
            sum += w * f(mid + 0.5 * width * x);
        }
    }
    0.5 * width * sum
}

/// `P(R > w)` for the range `R` of `k` standard normal samples.
fn range_survival(rule: &[(f64, f64)], w: f64, k: f64) -> f64 {
    if w <= 0.0 {
        return 1.0;
    }
    let inside = integrate(rule, -8.5, 8.5, 24, |z| {
        let d = normal_cdf(z) - normal_cdf(z - w);
        if d <= 0.0 {
            0.0
        } else {
            exp(-0.5 * z * z) * exp((k - 1.0) * ln(d))
        }
    });
    (1.0 - k * inside / sqrt(2.0 * PI)).clamp(0.0, 1.0)
}

/// Upper tail `P(Q > q)` of the studentized range for `k` means and `df`
/// error degrees of freedom.
pub fn studentized_range_survival(q: f64, k: usize, df: f64) -> Result<f64> {
    if k < 2 || !(df > 0.0) || q.is_nan() {
        return Err(Error::Statistics {
            reason: "studentized range requires k >= 2 and df > 0",
        });
    }
    if q <= 0.0 {
        return Ok(1.0);
    }
    if q.is_infinite() {
        return Ok(0.0);
    }
    let rule = gauss_legendre(20);
    let k = k as f64;
    // s = chi_df / sqrt(df)
    let ln_norm = 0.5 * df * ln(df) - ln_gamma(0.5 * df) - (0.5 * df - 1.0) * ln(2.0);
    let spread = 12.0 / sqrt(df);
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread + 4.0;
    let p = integrate(&rule, lo, hi, 48, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let density = exp(ln_norm + (df - 1.0) * ln(s) - 0.5 * df * s * s);
        if density < 1e-300 {
            0.0
        } else {
            density * range_survival(&rule, q * s, k)
        }
    });
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, b) = 1 - (1-x)^b ; I_x(a, 1) = x^a
        for &x in &[0.01, 0.3, 0.77, 0.999] {
            let v = regularized_incomplete_beta(x, 1.0, 3.5).unwrap();
            assert!((v - (1.0 - libm::pow(1.0 - x, 3.5))).abs() < 1e-13);
            let v = regularized_incomplete_beta(x, 2.5, 1.0).unwrap();
            assert!((v - libm::pow(x, 2.5)).abs() < 1e-13);
        }
        // I_{1/2}(a, a) = 1/2
        assert!((regularized_incomplete_beta(0.5, 7.3, 7.3).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn f_and_t_tables() {
        // F(0.95; 2, 10) = 4.102821, F(0.99; 3, 20) = 4.938193
        assert!((f_survival(4.102821, 2.0, 10.0).unwrap() - 0.05).abs() < 1e-6);
        assert!((f_survival(4.938193, 3.0, 20.0).unwrap() - 0.01).abs() < 1e-6);
        // t(0.975; 10) = 2.228139
        assert!((t_two_sided(2.228139, 10.0).unwrap() - 0.05).abs() < 1e-6);
        assert_eq!(f_survival(0.0, 2.0, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn studentized_range_tables() {
        // q(0.95; 3, 10) = 3.877, q(0.95; 4, 20) = 3.958, q(0.99; 3, 30) = 4.455
        assert!((studentized_range_survival(3.877, 3, 10.0).unwrap() - 0.05).abs() < 2e-4);
        assert!((studentized_range_survival(3.958, 4, 20.0).unwrap() - 0.05).abs() < 2e-4);
        assert!((studentized_range_survival(4.455, 3, 30.0).unwrap() - 0.01).abs() < 1e-4);
    }

    #[test]
    fn two_group_range_is_scaled_t() {
        for &(q, df) in &[(1.0, 5.0), (2.7, 12.0), (4.1, 40.0), (0.3, 3.0)] {
            let direct = studentized_range_survival(q, 2, df).unwrap();
            let via_t = t_two_sided(q / sqrt(2.0), df).unwrap();
            assert!((direct - via_t).abs() < 1e-8, "q={q} df={df}: {direct} vs {via_t}");
        }
    }
}
