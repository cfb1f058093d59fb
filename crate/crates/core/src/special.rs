//! Bessel functions of integer order 0 and 1 and the Hankel function
//! `H_0^(1)` for real positive arguments.
//!
//! Three regimes:
//!
//! * `x < 8`: ascending power series,
//! * `8 <= x < 25`: Miller backward recurrence normalised by
//!   `J_0 + 2 sum J_2k = 1`, with `Y_0` from the Neumann series,
//! * `x >= 25`: Hankel asymptotic expansion, truncated at its smallest term.
//!
//! The asymptotic expansion alone cannot reach 1e-10 near `x = 8` (its
//! smallest term is about `exp(-2x)`), hence the middle band.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

#[derive(Debug, Clone, Copy)]
struct Bessel01 {
    j0: f64,
    j1: f64,
    y0: f64,
}

fn series(x: f64) -> Bessel01 {
    let q = 0.25 * x * x;
    let mut t0 = 1.0; // (-q)^k / (k!)^2
    let mut t1 = 1.0; // (-q)^k / (k! (k+1)!)
    let mut j0 = 1.0;
    let mut j1 = 1.0;
    let mut harmonic = 0.0;
    let mut ysum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        t0 *= -q / (kf * kf);
        t1 *= -q / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        j0 += t0;
        j1 += t1;
        ysum -= harmonic * t0;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 && k > 2 {
            break;
        }
    }
    let j1 = 0.5 * x * j1;
    let y0 = 2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + ysum);
    Bessel01 { j0, j1, y0 }
}

fn miller(x: f64) -> Bessel01 {
    let mut n = (1.2 * x) as usize + 40;
    if n % 2 == 1 {
        n += 1;
    }
    let mut above = 0.0; // J_{m+1}
    let mut current = 1e-30; // J_m
    let mut norm = 0.0;
    let mut ysum = 0.0;
    let mut j1 = 0.0;
    let mut m = n;
    loop {
        if m % 2 == 0 {
            if m == 0 {
                norm += current;
            } else {
                norm += 2.0 * current;
                let k = (m / 2) as f64;
                let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
                ysum += sign * current / k;
            }
        }
        if m == 1 {
            j1 = current;
        }
        if m == 0 {
            break;
        }
        let below = 2.0 * m as f64 / x * current - above;
        above = current;
        current = below;
        m -= 1;
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            ysum *= 1e-250;
            j1 *= 1e-250;
        }
    }
    let j0 = current / norm;
    let j1 = j1 / norm;
    let ysum = ysum / norm;
    let y0 = 2.0 / PI * ((0.5 * x).ln() + EULER_GAMMA) * j0 - 4.0 / PI * ysum;
    Bessel01 { j0, j1, y0 }
}

/// `H_order^(1)(x)` from the asymptotic expansion, `order` in {0, 1}.
fn hankel_asymptotic(order: u32, x: f64) -> Complex64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = 1.0_f64;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let factor = (mu - odd * odd) / (kf * 8.0 * x);
        let next = term * Complex64::new(0.0, factor);
        let mag = next.norm();
        if mag > last {
            break;
        }
        term = next;
        sum += term;
        last = mag;
        if mag < 1e-17 {
            break;
        }
    }
    let phase = x - order as f64 * PI / 2.0 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * Complex64::from_polar(1.0, phase) * sum
}

fn evaluate(x: f64) -> Bessel01 {
    if x < SERIES_LIMIT {
        series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        let h0 = hankel_asymptotic(0, x);
        let h1 = hankel_asymptotic(1, x);
        Bessel01 {
            j0: h0.re,
            j1: h1.re,
            y0: h0.im,
        }
    }
}

/// Bessel function `J_0(x)`, `x >= 0`.
pub fn bessel_j0(x: f64) -> f64 {
    evaluate(x.abs()).j0
}

/// Bessel function `J_1(x)`; odd in `x`.
pub fn bessel_j1(x: f64) -> f64 {
    let v = evaluate(x.abs()).j1;
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Bessel function of the second kind `Y_0(x)`, `x > 0`.
pub fn bessel_y0(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    evaluate(x).y0
}

/// Hankel function of the first kind `H_0^(1)(x) = J_0(x) + i Y_0(x)`, `x > 0`.
pub fn hankel1_0(x: f64) -> Complex64 {
    let b = evaluate(x);
    Complex64::new(b.j0, b.y0)
}
