//! Special functions for the fiber matrices and the elliptic identity.
//!
//! | Function | Description |
//! |----------|-------------|
//! | [`log_gamma`] | ln Γ(z) for Re z > 0 (Lanczos, g = 7, 9 terms) |
//! | [`gamma_abs2_half_line`] | \|Γ(½ − iu)\|² = π sech(πu) |
//! | [`beta_half_line`] | B(½ − ia, ½ + ib) |
//! | [`lattice_sech_sum`] | Σₙ (±1)ⁿ sech(π(2πn/τ + k)) |
//! | [`elliptic_k`] | complete elliptic integral K(k) by AGM |
//! | [`modulus_from_period`] | modulus with K'/K = τ/(2π) |
//! | [`jacobi_dn`], [`jacobi_cn`] | nome Fourier series on the real line |

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

const AGM_MAX_ITER: usize = 64;
const BISECTION_MAX_ITER: usize = 200;
const LATTICE_TERM_FLOOR: f64 = 1e-18;
const NOME_TERM_FLOOR: f64 = 1e-17;

/// Principal-strip logarithm of the Gamma function, valid for Re z > 0.
///
/// Only `exp(log_gamma(z))` is meaningful; the imaginary part is not
/// continued across branch cuts.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) || !z.im.is_finite() {
        return Err(Error::Domain(format!(
            "log_gamma requires Re z > 0, got {z}"
        )));
    }
    if z.re < 0.5 {
        // Γ(z) = Γ(z + 1) / z keeps the series away from its pole at 0.
        return Ok(lanczos_log_gamma(z + 1.0) - z.ln());
    }
    Ok(lanczos_log_gamma(z))
}

fn lanczos_log_gamma(z: Complex64) -> Complex64 {
    let zm1 = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (zm1 + i as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    HALF_LN_2PI + (zm1 + 0.5) * t.ln() - t + series.ln()
}

/// |Γ(½ − iu)|² = π sech(πu).
pub fn gamma_abs2_half_line(u: f64) -> f64 {
    PI / (PI * u).cosh()
}

/// B(½ − ia, ½ + ib) = Γ(½ − ia) Γ(½ + ib) / Γ(1 − ia + ib).
pub fn beta_half_line(a: f64, b: f64) -> Complex64 {
    let lg = |re: f64, im: f64| {
        log_gamma(Complex64::new(re, im)).expect("real part is positive by construction")
    };
    (lg(0.5, -a) + lg(0.5, b) - lg(1.0, b - a)).exp()
}

/// Σ_{n∈ℤ} sech(π(2πn/τ + k)), or the same sum weighted by (−1)ⁿ.
///
/// The sum starts at the term closest to the peak and walks outwards until
/// the terms drop below 1e−18 on each side.
pub fn lattice_sech_sum(tau: f64, k: f64, alternating: bool) -> f64 {
    assert!(tau > 0.0, "lattice period must be positive");
    let step = 2.0 * PI / tau;
    let center = (-k / step).round() as i64;
    let term = |n: i64| {
        let s = 1.0 / (PI * (step * n as f64 + k)).cosh();
        if alternating && n.rem_euclid(2) == 1 {
            -s
        } else {
            s
        }
    };

    let mut total = term(center);
    for dir in [1_i64, -1] {
        let mut n = center + dir;
        loop {
            let t = term(n);
            total += t;
            if t.abs() < LATTICE_TERM_FLOOR {
                break;
            }
            n += dir;
        }
    }
    total
}

fn agm(mut a: f64, mut b: f64) -> Result<f64> {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            return Ok(0.5 * (a + b));
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Err(Error::Convergence {
        what: "arithmetic-geometric mean",
        iterations: AGM_MAX_ITER,
    })
}

/// Complete elliptic integral of the first kind, K(k) = π / (2 AGM(1, k')).
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!(
            "elliptic modulus must lie in [0, 1), got {k}"
        )));
    }
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    Ok(0.5 * PI / agm(1.0, kp)?)
}

/// Modulus, complementary modulus, quarter periods and nome of one
/// Jacobi elliptic parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    pub k: f64,
    pub k_prime: f64,
    /// K(k)
    pub quarter_period: f64,
    /// K'(k) = K(k')
    pub complementary_quarter_period: f64,
    /// q = exp(−πK'/K)
    pub nome: f64,
}

impl EllipticParams {
    /// Builds the parameters from a modulus in (0, 1).
    pub fn from_modulus(k: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::Domain(format!(
                "elliptic modulus must lie in (0, 1), got {k}"
            )));
        }
        Self::from_angle(k.asin())
    }

    /// Parametrization by the modular angle θ, k = sin θ, k' = cos θ. Both
    /// moduli stay accurate at either end of the range.
    fn from_angle(theta: f64) -> Result<Self> {
        let (k, k_prime) = theta.sin_cos();
        let big_k = 0.5 * PI / agm(1.0, k_prime)?;
        let big_kp = 0.5 * PI / agm(1.0, k)?;
        Ok(Self {
            k,
            k_prime,
            quarter_period: big_k,
            complementary_quarter_period: big_kp,
            nome: (-PI * big_kp / big_k).exp(),
        })
    }

    /// K'/K.
    pub fn period_ratio(&self) -> f64 {
        self.complementary_quarter_period / self.quarter_period
    }
}

/// Solves K'(k)/K(k) = τ/(2π) for the modulus by bisection.
pub fn modulus_from_period(tau: f64) -> Result<EllipticParams> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("period must be positive, got {tau}")));
    }
    let target = tau / (2.0 * PI);
    let ratio = |theta: f64| EllipticParams::from_angle(theta).map(|p| p.period_ratio());

    // k ∈ [1e−12, 1 − 1e−12]; K'/K decreases strictly along this bracket.
    let mut lo = 1e-12_f64.asin();
    let mut hi = (1.0 - 1e-12_f64).asin();
    let (r_lo, r_hi) = (ratio(lo)?, ratio(hi)?);
    if !(r_hi <= target && target <= r_lo) {
        return Err(Error::Domain(format!(
            "tau = {tau} is outside the bracket: K'/K must lie in [{r_hi}, {r_lo}]"
        )));
    }

    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let r = ratio(mid)?;
        if (r - target).abs() <= 1e-14 * target.max(1.0) || mid <= lo || mid >= hi {
            let params = EllipticParams::from_angle(mid)?;
            if (params.period_ratio() - target).abs() > 1e-12 {
                break;
            }
            return Ok(params);
        }
        if r > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        what: "modulus bisection",
        iterations: BISECTION_MAX_ITER,
    })
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// dn(u, k) from its nome Fourier series.
pub fn jacobi_dn(u: f64, p: &EllipticParams) -> f64 {
    let big_k = p.quarter_period;
    let ratio = p.period_ratio();
    let mut sum = 0.0;
    let mut n = 1.0;
    loop {
        let c = sech(n * PI * ratio);
        if c < NOME_TERM_FLOOR {
            break;
        }
        sum += c * (n * PI * u / big_k).cos();
        n += 1.0;
    }
    PI / (2.0 * big_k) + PI / big_k * sum
}

/// cn(u, k) from its nome Fourier series.
pub fn jacobi_cn(u: f64, p: &EllipticParams) -> f64 {
    let big_k = p.quarter_period;
    let ratio = p.period_ratio();
    let mut sum = 0.0;
    let mut n = 0.0;
    loop {
        let odd = 2.0 * n + 1.0;
        let c = sech(odd * PI * ratio / 2.0);
        if c < NOME_TERM_FLOOR {
            break;
        }
        sum += c * (odd * PI * u / (2.0 * big_k)).cos();
        n += 1.0;
    }
    PI / (p.k * big_k) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent ln Γ: shift to Re z ≥ 20, then the Stirling series.
    fn stirling_log_gamma(z: Complex64) -> Complex64 {
        let mut shift = Complex64::new(0.0, 0.0);
        let mut w = z;
        while w.re < 20.0 {
            shift += w.ln();
            w += 1.0;
        }
        let inv = 1.0 / w;
        let inv2 = inv * inv;
        // Bernoulli terms B_{2j} / (2j (2j − 1) w^{2j−1})
        let coeffs = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360_360.0,
            1.0 / 156.0,
        ];
        let mut corr = Complex64::new(0.0, 0.0);
        let mut p = inv;
        for c in coeffs {
            corr += c * p;
            p *= inv2;
        }
        (w - 0.5) * w.ln() - w + HALF_LN_2PI + corr - shift
    }

    #[test]
    fn log_gamma_special_values() {
        assert!(log_gamma(Complex64::new(1.0, 0.0)).unwrap().norm() < 1e-14);
        let half = log_gamma(Complex64::new(0.5, 0.0)).unwrap();
        assert!((half.re - PI.sqrt().ln()).abs() < 1e-14);
        assert!(half.im.abs() < 1e-15);
        let w = log_gamma(Complex64::new(0.5, -1.0)).unwrap();
        let oracle = PI / PI.cosh();
        assert!(((2.0 * w.re).exp() - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn log_gamma_rejects_left_half_plane() {
        assert!(log_gamma(Complex64::new(0.0, 1.0)).is_err());
        assert!(log_gamma(Complex64::new(-0.5, 0.0)).is_err());
    }

    #[test]
    fn log_gamma_matches_stirling_oracle() {
        for &re in &[0.05, 0.3, 0.5, 1.0, 2.5, 7.0] {
            for &im in &[-40.0, -12.3, -1.0, 0.0, 0.7, 5.0, 25.0, 40.0] {
                let z = Complex64::new(re, im);
                let a = log_gamma(z).unwrap();
                let b = stirling_log_gamma(z);
                let rel = ((a - b).exp() - 1.0).norm();
                assert!(rel < 1e-12, "z = {z}: rel err {rel}");
            }
        }
    }

    #[test]
    fn gamma_abs2_identity() {
        assert!((gamma_abs2_half_line(0.0) - PI).abs() < 1e-15);
        assert!((gamma_abs2_half_line(1.0) - 0.271_014_951_399_418_35).abs() < 1e-15);
        assert_eq!(gamma_abs2_half_line(-1.0), gamma_abs2_half_line(1.0));
        for i in 0..=60 {
            let u = i as f64 * 0.1;
            let via_log = (2.0 * log_gamma(Complex64::new(0.5, -u)).unwrap().re).exp();
            let direct = gamma_abs2_half_line(u);
            assert!((via_log - direct).abs() <= 1e-11 * direct.max(1e-300));
            assert!((direct * (PI * u).cosh() - PI).abs() < 1e-11);
        }
    }

    #[test]
    fn beta_on_critical_lines() {
        let b00 = beta_half_line(0.0, 0.0);
        assert!((b00.re - PI).abs() < 1e-13 && b00.im.abs() < 1e-13);
        let b11 = beta_half_line(1.0, 1.0);
        assert!((b11.re - PI / PI.cosh()).abs() < 1e-13 && b11.im.abs() < 1e-13);
        let b10 = beta_half_line(1.0, 0.0);
        let oracle = (stirling_log_gamma(Complex64::new(0.5, -1.0))
            + stirling_log_gamma(Complex64::new(0.5, 0.0))
            - stirling_log_gamma(Complex64::new(1.0, -1.0)))
        .exp();
        assert!((b10 - oracle).norm() < 1e-12 * oracle.norm());
    }

    #[test]
    fn lattice_sums_at_two_pi() {
        let direct = |alt: bool| -> f64 {
            (-20_i64..=20)
                .map(|n| {
                    let s = 1.0 / (PI * n as f64).cosh();
                    if alt && n.rem_euclid(2) == 1 { -s } else { s }
                })
                .sum()
        };
        let tau = 2.0 * PI;
        let plain = lattice_sech_sum(tau, 0.0, false);
        let alt = lattice_sech_sum(tau, 0.0, true);
        assert!((plain - direct(false)).abs() < 1e-15);
        assert!((alt - direct(true)).abs() < 1e-15);
        // Γ(¼)² / (2π^{3/2}) with Γ(¼) = 3.6256099082219083
        let gamma_quarter = 3.625_609_908_221_908_3_f64;
        assert!((plain - gamma_quarter.powi(2) / (2.0 * PI.powf(1.5))).abs() < 1e-14);
        assert!((plain - 1.180_340_599_016_096_2).abs() < 1e-14);
        assert!((alt - 0.834_626_841_674_073_2).abs() < 1e-14);
    }

    #[test]
    fn lattice_sum_periodic_and_even() {
        for &tau in &[2.0, 2.0 * PI, 10.0] {
            let step = 2.0 * PI / tau;
            for &k in &[0.0, 0.13, 0.4, 1.7] {
                let base = lattice_sech_sum(tau, k, false);
                assert!((base - lattice_sech_sum(tau, -k, false)).abs() < 1e-15);
                assert!((base - lattice_sech_sum(tau, k + step, false)).abs() < 1e-15);
                // the alternating sum flips sign under a one-step shift
                let alt = lattice_sech_sum(tau, k, true);
                assert!((alt + lattice_sech_sum(tau, k + step, true)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lattice_sum_strictly_decreasing_on_half_cell() {
        for &tau in &[2.0, 2.0 * PI, 10.0] {
            let half = PI / tau;
            let vals: Vec<f64> = (1..=50)
                .map(|i| lattice_sech_sum(tau, half * i as f64 / 51.0, false))
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]), "tau = {tau}");
        }
    }

    /// Midpoint quadrature of the defining integral of K.
    fn k_by_quadrature(k: f64) -> f64 {
        let n = 200_000;
        let h = 0.5 * PI / n as f64;
        (0..n)
            .map(|i| {
                let th = (i as f64 + 0.5) * h;
                h / (1.0 - k * k * th.sin().powi(2)).sqrt()
            })
            .sum()
    }

    #[test]
    fn elliptic_k_values() {
        assert!((elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        let s = 0.5_f64.sqrt();
        assert!((elliptic_k(s).unwrap() - k_by_quadrature(s)).abs() < 1e-12);
        assert!((elliptic_k(s).unwrap() - 1.854_074_677_301_371_9).abs() < 1e-13);
        assert!((elliptic_k(0.5).unwrap() - k_by_quadrature(0.5)).abs() < 1e-12);
        assert!((elliptic_k(0.5).unwrap() - 1.685_750_354_812_596).abs() < 1e-13);
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(-0.1).is_err());
    }

    #[test]
    fn modulus_at_symmetric_point() {
        let p = modulus_from_period(2.0 * PI).unwrap();
        assert!((p.k - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!((p.k - p.k_prime).abs() < 1e-12);
        assert!((p.quarter_period - 1.854_074_677_301_371_9).abs() < 1e-12);
        let q = modulus_from_period(PI).unwrap();
        assert!((q.period_ratio() - 0.5).abs() <= 1e-12);
        assert!(modulus_from_period(0.0).is_err());
    }

    /// Theta-function route to the modulus: k = θ₂²/θ₃², k' = θ₄²/θ₃²,
    /// K = (π/2) θ₃², with q = exp(−τ/2).
    #[test]
    fn modulus_agrees_with_theta_functions() {
        for &tau in &[1.0, 2.0, PI, 2.0 * PI, 10.0, 30.0] {
            let q: f64 = (-tau / 2.0).exp();
            let (mut t2, mut t3, mut t4) = (0.0, 1.0, 1.0);
            for n in 0..200 {
                let nf = n as f64;
                t2 += 2.0 * q.powf((nf + 0.5).powi(2));
                if n > 0 {
                    t3 += 2.0 * q.powf(nf * nf);
                    t4 += 2.0 * if n % 2 == 1 { -1.0 } else { 1.0 } * q.powf(nf * nf);
                }
            }
            let p = modulus_from_period(tau).unwrap();
            assert!((p.k - t2 * t2 / (t3 * t3)).abs() < 1e-12, "tau = {tau}");
            assert!((p.k_prime - t4 * t4 / (t3 * t3)).abs() < 1e-12, "tau = {tau}");
            assert!((p.quarter_period - 0.5 * PI * t3 * t3).abs() < 1e-11, "tau = {tau}");
            assert!((p.nome - q).abs() < 1e-12);
        }
    }

    #[test]
    fn elliptic_params_invariants() {
        let a = EllipticParams::from_modulus(0.3).unwrap();
        let b = EllipticParams::from_modulus(0.8).unwrap();
        for p in [a, b] {
            assert!((p.k * p.k + p.k_prime * p.k_prime - 1.0).abs() < 1e-14);
            assert!(p.nome > 0.0 && p.nome < 1.0);
            assert!(p.quarter_period > 0.0 && p.complementary_quarter_period > 0.0);
        }
        assert!(b.quarter_period > a.quarter_period);
    }

    #[test]
    fn jacobi_boundary_values_and_identity() {
        let p = modulus_from_period(2.0 * PI).unwrap();
        assert!((jacobi_dn(0.0, &p) - 1.0).abs() < 1e-13);
        assert!((jacobi_cn(0.0, &p) - 1.0).abs() < 1e-13);
        for &u in &[0.3, 1.1, 2.7] {
            let dn = jacobi_dn(u, &p);
            let cn = jacobi_cn(u, &p);
            assert!((dn * dn - p.k * p.k * cn * cn - p.k_prime * p.k_prime).abs() < 1e-12);
            let shifted = jacobi_dn(u + 2.0 * p.quarter_period, &p);
            assert!((shifted - dn).abs() < 1e-12);
        }
    }

    #[test]
    fn dn_bounded_by_complementary_modulus() {
        for &k in &[0.2, 0.5_f64.sqrt(), 0.95] {
            let p = EllipticParams::from_modulus(k).unwrap();
            let span = 4.0 * p.quarter_period;
            for i in 0..1000 {
                let u = -span + 2.0 * span * i as f64 / 999.0;
                let dn = jacobi_dn(u, &p);
                assert!(dn >= p.k_prime - 1e-12 && dn <= 1.0 + 1e-12, "k={k} u={u} dn={dn}");
                let cn = jacobi_cn(u, &p);
                assert!(cn.abs() <= 1.0 + 1e-12);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gamma_recurrence(re in 0.3f64..3.0, im in -10.0f64..10.0) {
                let z = Complex64::new(re, im);
                let lhs = log_gamma(z + 1.0).unwrap();
                let rhs = log_gamma(z).unwrap() + z.ln();
                prop_assert!(((lhs - rhs).exp() - 1.0).norm() <= 1e-11);
            }

            #[test]
            fn elliptic_lemma_difference_of_squares(tau in 1.0f64..20.0, x in -3.0f64..3.0) {
                let p = modulus_from_period(tau).unwrap();
                let f = lattice_sech_sum(tau, x, false);
                let g = lattice_sech_sum(tau, x, true);
                let c = p.quarter_period * tau * p.k_prime / (PI * PI);
                prop_assert!((f * f - g * g - c * c).abs() <= 1e-10);
            }
        }
    }
}
