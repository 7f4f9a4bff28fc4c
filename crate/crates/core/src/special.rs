//! Special functions and small numerical kernels: Bessel functions of the
//! first kind, Gauss–Hermite rules, adaptive Gauss–Kronrod quadrature,
//! golden-section search, bisection and trigonometric interpolation.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Bessel function of the first kind J_n(x) for integer order n ≥ 0.
///
/// Uses Miller's backward recurrence normalised with
/// J₀ + 2ΣJ₂ₖ = 1. Accurate to ~1e-15 relative for |x| ≲ 100.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 1 { -v } else { v };
    }
    let n = n as usize;
    // start well above both n and x
    let start = 2 * ((n.max(x as usize) + 15 + (40.0 * x).sqrt() as usize) / 2);
    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut norm = 0.0;
    let mut want = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
        let order = k - 1;
        if order == n {
            want = j_cur;
        }
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * j_cur;
        }
    }
    norm += j_cur;
    want / norm
}

/// ηΩ-normalised saturation factor J₀(x) + J₂(x) = 2J₁(x)/x.
pub fn j0_plus_j2(x: f64) -> f64 {
    bessel_j(0, x) + bessel_j(2, x)
}

/// Gauss–Hermite nodes and weights for ∫ e^{−x²} f(x) dx.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Golub–Welsch: Jacobi matrix of the physicists' Hermite recurrence
    let jac = DMatrix::from_fn(n, n, |r, c| {
        if c == r + 1 {
            (c as f64 / 2.0).sqrt()
        } else if r == c + 1 {
            (r as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    // polish nodes with Newton steps on H_n
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (h, dh) = hermite_with_derivative(n, *x);
            *x -= h / dh;
        }
    }
    (nodes, weights)
}

/// Normalised (orthonormal) Hermite value and derivative at x.
fn hermite_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = PI.powf(-0.25);
    let mut p1 = 0.0;
    for j in 1..=n {
        let p2 = p1;
        p1 = p0;
        p0 = x * (2.0 / j as f64).sqrt() * p1 - ((j - 1) as f64 / j as f64).sqrt() * p2;
    }
    let dp = (2.0 * n as f64).sqrt() * p1;
    (p0, dp)
}

/// E[f(X)] for X ~ N(0, σ²) using a `points`-node Gauss–Hermite rule.
pub fn gaussian_expectation(sigma: f64, points: usize, f: impl Fn(f64) -> f64) -> f64 {
    if sigma == 0.0 {
        return f(0.0);
    }
    let (x, w) = gauss_hermite(points);
    let s = std::f64::consts::SQRT_2 * sigma;
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(s * xi)).sum::<f64>() / PI.sqrt()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_6,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        kron += s * GK_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += s * G_WEIGHTS[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Interval budget of [`integrate_complex`].
const MAX_INTERVALS: usize = 20_000;

/// Adaptive 7/15-point Gauss–Kronrod integral of a complex function.
///
/// Intervals are bisected until the local error estimate falls below
/// `abs_tol` scaled by the interval's share of [a, b].
pub fn integrate_complex(f: impl Fn(f64) -> C64, a: f64, b: f64, abs_tol: f64) -> C64 {
    if a == b {
        return C64::new(0.0, 0.0);
    }
    let total = (b - a).abs();
    let mut stack = vec![(a, b, 0usize)];
    let mut sum = C64::new(0.0, 0.0);
    let mut evaluated = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        evaluated += 1;
        let budget = abs_tol * ((hi - lo).abs() / total).max(1e-12);
        // an unreachable tolerance stops refining instead of bisecting 2^40 times
        if err <= budget || depth >= 40 || evaluated >= MAX_INTERVALS {
            sum += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    sum
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    integrate_complex(|t| C64::new(f(t), 0.0), a, b, abs_tol).re
}

/// Golden-section search for the maximum of a unimodal `f` on [a, b].
///
/// Stops when the bracket width falls below `rel_width` times its midpoint.
/// Returns the best abscissa visited and its value.
pub fn golden_max<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut a: f64,
    mut b: f64,
    rel_width: f64,
) -> Result<(f64, f64), E> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > rel_width * (0.5 * (a + b)).abs() {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Root of `f` on [a, b] by bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a).abs() < tol {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Band-limited interpolant of samples taken on a uniform grid over one
/// period [0, 2π).
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    coeffs: Vec<C64>,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let coeffs = (0..n)
            .map(|k| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(j, &s)| s * C64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64))
                    .sum::<C64>()
                    / n as f64
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let mut acc = self.coeffs[0].re;
        let half = n / 2;
        for k in 1..n {
            if 2 * k == n {
                // Nyquist term split symmetrically
                acc += self.coeffs[k].re * (half as f64 * x).cos();
                continue;
            }
            if k > half {
                break;
            }
            let c = self.coeffs[k];
            acc += 2.0 * (c * C64::from_polar(1.0, k as f64 * x)).re;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Power series oracle, independent of the recurrence.
    fn bessel_series(n: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= -(x * x / 4.0) / (m as f64 * (m + n) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    }

    #[test]
    fn bessel_matches_series() {
        for n in 0..5 {
            for i in 0..=100 {
                let x = 0.1 * i as f64;
                let a = bessel_j(n, x);
                let b = bessel_series(n, x);
                assert!((a - b).abs() < 1e-12, "J{n}({x}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_j(0, 2.404_825_557_695_773) ).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(1, 3.831_705_970_207_512)).abs() < 1e-14);
    }

    #[test]
    fn bessel_sum_identity() {
        for i in 1..=1000 {
            let x = 0.01 * i as f64;
            let lhs = j0_plus_j2(x);
            let rhs = 2.0 * bessel_series(1, x) / x;
            assert!((lhs - rhs).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(64);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-13);
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-13);
        assert!((m4 - 3.0 * PI.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_expectation_closed_forms() {
        let s = 0.3;
        let e_cos = gaussian_expectation(s, 64, f64::cos);
        assert!((e_cos - (-s * s / 2.0).exp()).abs() < 1e-14);
        let e4 = gaussian_expectation(s, 64, |x| x.powi(4));
        assert!((e4 - 3.0 * s.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn gauss_kronrod_integrals() {
        let v = integrate(f64::sin, 0.0, PI, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
        let w = 2.0 * PI * 1.27e6;
        let t = 15e-6;
        let v = integrate(|x| (w * x).cos(), 0.0, t, 1e-16);
        assert!((v - (w * t).sin() / w).abs() < 1e-15);
        let z = integrate_complex(|x| C64::from_polar(1.0, x), 0.0, PI / 2.0, 1e-13);
        assert!((z - C64::new(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, v) = golden_max(|x| Ok::<_, ()>(-(x - 1.3f64).powi(2) + 2.0), 0.0, 3.0, 1e-8).unwrap();
        assert!((x - 1.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }

    #[test]
    fn trig_interpolant_reproduces_band_limited() {
        let f = |x: f64| 0.3 + (x + 0.2).cos() - 0.5 * (3.0 * x).sin() + 0.1 * (7.0 * x).cos();
        let n = 32;
        let s: Vec<f64> = (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect();
        let it = TrigInterpolant::new(&s);
        for i in 0..50 {
            let x = 0.123 * i as f64;
            assert!((it.eval(x) - f(x)).abs() < 1e-12);
        }
    }
}
