//! Gamma and Bessel functions of real order.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Rising factorial `(a)_k = a(a+1)…(a+k−1)`.
pub fn rising(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |p, i| p * (a + i as f64))
}

pub fn factorial(k: usize) -> f64 {
    (2..=k).fold(1.0, |p, i| p * i as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |p, i| p * (n - i) as f64 / (i + 1) as f64)
}

// Taylor coefficients of 1/Γ(z) around 0 (c[k] multiplies z^k).
const RGAMMA: [f64; 27] = [
    0.0,
    1.0,
    0.577_215_664_901_532_860_6,
    -0.655_878_071_520_253_881_1,
    -0.042_002_635_034_095_235_53,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_75,
    -0.009_621_971_527_876_973_562,
    0.007_218_943_246_663_099_542,
    -0.001_165_167_591_859_065_112,
    -0.000_215_241_674_114_950_972_8,
    0.000_128_050_282_388_116_186_2,
    -2.013_485_478_078_823_866e-5,
    -1.250_493_482_142_670_657e-6,
    1.133_027_231_981_695_882e-6,
    -2.056_338_416_977_607_104e-7,
    6.116_095_104_481_415_818e-9,
    5.002_007_644_469_222_930e-9,
    -1.181_274_570_487_020_145e-9,
    1.043_426_711_691_100_511e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783e-14,
    -5.348_122_539_423_017_982e-15,
    1.226_778_628_238_260_790e-15,
    -1.181_259_301_697_458_770e-16,
];

/// Temme's auxiliary functions for |μ| ≤ 1/2:
/// (γ₁, γ₂, 1/Γ(1+μ), 1/Γ(1−μ)), with γ₁ = (1/Γ(1−μ) − 1/Γ(1+μ))/(2μ)
/// and γ₂ = (1/Γ(1−μ) + 1/Γ(1+μ))/2.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let (mut plus, mut minus) = (0.0, 0.0);
    let (mut pp, mut pm) = (1.0, 1.0);
    for &c in RGAMMA.iter().skip(1) {
        plus += c * pp;
        minus += c * pm;
        pp *= mu;
        pm *= -mu;
    }
    // Even coefficients cancel in the difference; sum them directly.
    let mut gam1 = 0.0;
    let mut pw = 1.0;
    for k in (2..RGAMMA.len()).step_by(2) {
        gam1 -= RGAMMA[k] * pw;
        pw *= mu * mu;
    }
    (gam1, 0.5 * (plus + minus), plus, minus)
}

/// Modified Bessel function `K_ν(x)` for real order and `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    const EPS: f64 = 1e-16;
    let (mut rkmu, mut rk1);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..500 {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= dd / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        rkmu = sum;
        rk1 = sum1 * xi2;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..2000 {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        rkmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
    }
    for i in 1..=nl {
        let t = (xmu + i as f64) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = t;
    }
    rkmu
}

fn bessel_j_series(nu: f64, z: f64) -> f64 {
    let h = 0.5 * z;
    let mut t = h.powf(nu) / gamma(nu + 1.0);
    let mut s = t;
    let q = -h * h;
    for k in 1..400 {
        let kf = k as f64;
        t *= q / (kf * (kf + nu));
        s += t;
        if t.abs() <= 1e-17 * s.abs() {
            break;
        }
    }
    s
}

// Hankel asymptotic expansion, valid for z ≥ 12 and small |μ|.
fn bessel_j_asymptotic(mu: f64, z: f64) -> f64 {
    let m4 = 4.0 * mu * mu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut t = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        t *= (m4 - odd * odd) / (kf * 8.0 * z);
        if t.abs() > last || t == 0.0 {
            break;
        }
        last = t.abs();
        match k % 4 {
            1 => q += t,
            2 => p -= t,
            3 => q -= t,
            _ => p += t,
        }
        if t.abs() < 1e-17 {
            break;
        }
    }
    let chi = z - (0.5 * mu + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function `J_ν(z)` for `ν ≥ −1/2`, `z ≥ 0`.
pub fn bessel_j(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if z < 12.0 || nu >= z {
        return bessel_j_series(nu, z);
    }
    let n0 = (nu + 0.5).floor();
    let mu = nu - n0;
    let mut jm = bessel_j_asymptotic(mu, z);
    if n0 == 0.0 {
        return jm;
    }
    let mut j = bessel_j_asymptotic(mu + 1.0, z);
    let mut order = mu + 1.0;
    for _ in 1..(n0 as usize) {
        let next = 2.0 * order / z * j - jm;
        jm = j;
        j = next;
        order += 1.0;
    }
    j
}

/// Normalized Hankel kernel `Λ_ν(z) = Γ(ν+1) J_ν(2√z) / z^{ν/2}`, entire in `z`.
///
/// `Λ_ν(0) = 1` and `Λ_ν'(z) = −Λ_{ν+1}(z)/(ν+1)`.
pub fn hankel_kernel(nu: f64, z: f64) -> f64 {
    if z < 36.0 {
        let mut t = 1.0;
        let mut s = 1.0;
        for k in 1..300 {
            let kf = k as f64;
            t *= -z / (kf * (kf + nu));
            s += t;
            if t.abs() <= 1e-17 * s.abs().max(1e-300) && kf * kf > z {
                break;
            }
        }
        return s;
    }
    let g = ln_gamma(nu + 1.0);
    let j = bessel_j(nu, 2.0 * z.sqrt());
    j * (g - 0.5 * nu * z.ln()).exp()
}

/// McMahon estimate of the k-th positive zero (k ≥ 1) of `J_ν`.
pub fn bessel_j_zero_estimate(nu: f64, k: usize) -> f64 {
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let m4 = 4.0 * nu * nu;
    beta - (m4 - 1.0) / (8.0 * beta)
}

/// Exponential integral `E₁(x)` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    // Series for small x, continued fraction for large x.
    const EULER: f64 = 0.577_215_664_901_532_9;
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x < 1.0 {
        let mut s = 0.0;
        let mut t = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            t *= -x / kf;
            let term = -t / kf;
            s += term;
            if term.abs() < 1e-17 * s.abs() {
                break;
            }
        }
        return -EULER - x.ln() + s;
    }
    // Lentz evaluation of e^{-x} / (x + 1/(1 + 1/(x + 2/(1 + ...))))
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}
