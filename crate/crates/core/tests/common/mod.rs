//! Independent reference values shared by the integration tests.
#![allow(dead_code)]

use nonlinear_levy::generator::SampledFunction;
use nonlinear_levy::levy::{Interval, JumpFamily, TripletFamily, Truncation};
use nonlinear_levy::quad::{adaptive_gauss_kronrod, adaptive_piecewise};

pub fn poisson_family(h: Truncation) -> TripletFamily {
    TripletFamily::new(
        Interval::point(0.0),
        Interval::point(0.0),
        JumpFamily::PoissonIntensity { intensity: Interval::new(0.5, 1.5).unwrap(), atom: 1.0 },
        h,
    )
    .unwrap()
}

pub fn heat_family() -> TripletFamily {
    TripletFamily::new(
        Interval::point(0.0),
        Interval::new(0.1, 0.2).unwrap(),
        JumpFamily::NoJumps,
        Truncation::Canonical,
    )
    .unwrap()
}

pub fn stable_family(k_lo: f64, k_hi: f64) -> TripletFamily {
    TripletFamily::new(
        Interval::point(0.0),
        Interval::point(0.0),
        JumpFamily::StableCoefficients {
            alpha: 1.5,
            k_plus: Interval::new(k_lo, k_hi).unwrap(),
            k_minus: Interval::new(k_lo, k_hi).unwrap(),
        },
        Truncation::Identity,
    )
    .unwrap()
}

pub fn clamp01() -> SampledFunction {
    SampledFunction::analytic(|x: f64| x.clamp(0.0, 1.0), 1.0, 0.0).with_kinks([0.0, 1.0])
}

pub fn capped_abs() -> SampledFunction {
    SampledFunction::analytic(|x: f64| x.abs().min(3.0), 3.0, 0.0).with_kinks([-3.0, 0.0, 3.0])
}

pub fn poisson_pmf(rate: f64, k: u64) -> f64 {
    let mut p = (-rate).exp();
    for j in 1..=k {
        p *= rate / j as f64;
    }
    p
}

/// `Σ_k e^{-r} r^k / k! · ψ(x + k)` truncated once the remaining mass is below 1e-12.
pub fn poisson_series(rate: f64, x: f64, psi: impl Fn(f64) -> f64) -> f64 {
    let mut term = (-rate).exp();
    let mut mass = 0.0;
    let mut sum = 0.0;
    let mut k = 0;
    while 1.0 - mass > 1e-12 {
        sum += term * psi(x + k as f64);
        mass += term;
        k += 1;
        term *= rate / k as f64;
    }
    sum
}

/// `E[min(|x + √(ct) Y|, 3)]` for standard normal `Y`.
pub fn heat_oracle(c: f64, t: f64, x: f64) -> f64 {
    let s = (c * t).sqrt();
    let phi = |y: f64| (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut b: Vec<f64> =
        [-12.0, (-3.0 - x) / s, -x / s, (3.0 - x) / s, 12.0].iter().map(|k| k.clamp(-12.0, 12.0)).collect();
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    adaptive_piecewise(|y| (x + s * y).abs().min(3.0) * phi(y), &b, 1e-14, 1e-12)
}

/// `∫_0^∞ (1 − cos y) y^{-α-1} dy` by quadrature over whole periods plus an
/// integration-by-parts tail.
pub fn stable_cos_constant(alpha: f64) -> f64 {
    let periods = 2000usize;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut sum = adaptive_gauss_kronrod(|y| (1.0 - y.cos()) * y.powf(-alpha - 1.0), 0.0, two_pi, 1e-15, 1e-13);
    for k in 1..periods {
        let (a, b) = (two_pi * k as f64, two_pi * (k + 1) as f64);
        sum += adaptive_gauss_kronrod(|y| (1.0 - y.cos()) * y.powf(-alpha - 1.0), a, b, 1e-17, 1e-13);
    }
    let y = two_pi * periods as f64;
    // ∫_Y^∞ y^{-a} dy − ∫_Y^∞ cos(y) y^{-a} dy with sin(Y) = 0, cos(Y) = 1
    let a = alpha + 1.0;
    sum + y.powf(1.0 - a) / (a - 1.0) - a * y.powf(-a - 1.0)
}

/// `∫_a^b z^e dz` for `0 ≤ a < b ≤ ∞` by adaptive quadrature in `s = ln z`.
///
/// An infinite end is cut where the integrand `e^{s(e+1)}` has fallen
/// below `1e-20` of its value at the finite end.
pub fn power_integral_oracle(e: f64, a: f64, b: f64) -> f64 {
    let rate = e + 1.0;
    let lo = if a > 0.0 {
        a.ln()
    } else {
        assert!(rate > 0.0 && b.is_finite(), "divergent at zero");
        b.ln() - 46.0 / rate
    };
    let hi = if b.is_finite() {
        b.ln()
    } else {
        assert!(rate < 0.0, "divergent tail");
        lo + 46.0 / -rate
    };
    // split into unit-length pieces in log scale so each stays well resolved
    let pieces = ((hi - lo).ceil() as usize).max(1);
    let breaks: Vec<f64> = (0..=pieces).map(|j| lo + (hi - lo) * j as f64 / pieces as f64).collect();
    adaptive_piecewise(|s| (s * rate).exp(), &breaks, 0.0, 1e-14)
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
}

/// Worst relative error of every stable moment functional against
/// [`power_integral_oracle`] for one parameter draw.
pub fn stable_moment_errors(alpha: f64, k_plus: f64, k_minus: f64, eps: f64) -> f64 {
    use nonlinear_levy::levy::{LevyMeasure, Side};
    let m = LevyMeasure::stable(alpha, k_plus, k_minus).unwrap();
    let k = k_plus + k_minus;
    let mut checks = vec![
        (m.small_jump_second_moment(eps), k * power_integral_oracle(1.0 - alpha, 0.0, eps)),
        (m.small_jump_third_moment(eps), k * power_integral_oracle(2.0 - alpha, 0.0, eps)),
        (m.tail_intensity(eps), k * power_integral_oracle(-alpha - 1.0, eps, f64::INFINITY)),
        (m.side_tail_intensity(Side::Positive, eps), k_plus * power_integral_oracle(-alpha - 1.0, eps, f64::INFINITY)),
        (
            m.side_power_moment(Side::Negative, 1.0, eps, 2.0 * eps + 1.0).unwrap(),
            k_minus * power_integral_oracle(-alpha, eps, 2.0 * eps + 1.0),
        ),
    ];
    if eps < 1.0 && k_plus != k_minus {
        let net = k_plus - k_minus;
        checks.push((
            m.compensator_drift(Truncation::Canonical, eps).unwrap(),
            net * power_integral_oracle(-alpha, eps, 1.0),
        ));
    }
    if alpha > 1.0 {
        let tfsm =
            k * (power_integral_oracle(1.0 - alpha, 0.0, 1.0) + power_integral_oracle(-alpha, 1.0, f64::INFINITY));
        checks.push((m.truncated_first_second_moment().unwrap(), tfsm));
        if k_plus != k_minus {
            let net = k_plus - k_minus;
            checks.push((
                m.compensator_drift(Truncation::Identity, eps).unwrap(),
                net * power_integral_oracle(-alpha, eps, f64::INFINITY),
            ));
        }
    }
    checks.iter().map(|&(v, r)| relative_error(v, r)).fold(0.0, f64::max)
}
