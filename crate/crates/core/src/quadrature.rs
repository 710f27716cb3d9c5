//! One-dimensional quadrature: adaptive Gauss–Kronrod on intervals and
//! Gauss rules for the weights `(1 - x^2)^alpha` on `[-1, 1]`.

use nalgebra::{DMatrix, SymmetricEigen};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects until the Kronrod/Gauss difference on each piece falls below its
/// share of `abs_tol`. Reversed intervals give the negated integral.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate_adaptive(f, b, a, abs_tol);
    }
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let width = b - a;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        let share = abs_tol * (hi - lo) / width;
        if err <= share.max(f64::EPSILON * val.abs()) || depth >= 48 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Mass `∫_{-1}^{1} (1 - x^2)^alpha dx` for `alpha` a non-negative half-integer.
pub fn gegenbauer_mass(alpha: f64) -> f64 {
    let twice = (2.0 * alpha).round() as i64;
    assert!(twice >= 0 && (twice as f64 - 2.0 * alpha).abs() < 1e-12);
    let (mut mass, mut a) = if twice % 2 == 0 { (2.0, 0.0) } else { (std::f64::consts::FRAC_PI_2, 0.5) };
    while a < alpha - 1e-12 {
        mass *= (2.0 * a + 2.0) / (2.0 * a + 3.0);
        a += 1.0;
    }
    mass
}

/// Recurrence coefficient of the orthonormal polynomials for `(1-x^2)^alpha`:
/// `x p_k = b_{k+1} p_{k+1} + b_k p_{k-1}`, returns `b_k` for `k >= 1`.
pub fn gegenbauer_offdiag(alpha: f64, k: usize) -> f64 {
    let k = k as f64;
    let lam = alpha + 0.5;
    (k * (k + 2.0 * lam - 1.0) / (4.0 * (k + lam) * (k + lam - 1.0))).sqrt()
}

/// Orthonormal polynomials `p_0..=p_deg` for weight `(1-x^2)^alpha` and their
/// first and second derivatives at `x`.
pub fn orthonormal_poly_table(alpha: f64, deg: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; deg + 1];
    let mut dp = vec![0.0; deg + 1];
    let mut d2p = vec![0.0; deg + 1];
    p[0] = 1.0 / gegenbauer_mass(alpha).sqrt();
    for k in 0..deg {
        let bn = gegenbauer_offdiag(alpha, k + 1);
        let (pm, dpm, d2pm, bk) =
            if k == 0 { (0.0, 0.0, 0.0, 0.0) } else { (p[k - 1], dp[k - 1], d2p[k - 1], gegenbauer_offdiag(alpha, k)) };
        p[k + 1] = (x * p[k] - bk * pm) / bn;
        dp[k + 1] = (x * dp[k] + p[k] - bk * dpm) / bn;
        d2p[k + 1] = (x * d2p[k] + 2.0 * dp[k] - bk * d2pm) / bn;
    }
    (p, dp, d2p)
}

/// Gauss rule with `n` nodes for the weight `(1-x^2)^alpha` on `[-1, 1]`.
///
/// Nodes from the Jacobi matrix eigenvalues, polished by Newton on `p_n`;
/// weights are Christoffel numbers `1 / Σ p_k(x)^2`. Nodes ascend.
pub fn gauss_gegenbauer(alpha: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j {
            gegenbauer_offdiag(alpha, j)
        } else if j + 1 == i {
            gegenbauer_offdiag(alpha, i)
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_poly_table(alpha, n, *x);
            if dp[n] != 0.0 {
                *x -= p[n] / dp[n];
            }
        }
        let (p, _, _) = orthonormal_poly_table(alpha, n - 1, *x);
        weights.push(1.0 / p.iter().map(|v| v * v).sum::<f64>());
    }
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_gegenbauer(0.0, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let v = integrate_adaptive(|x| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
        let v = integrate_adaptive(|x| 1.0 / (1.0 + x * x), 0.0, 1.0, 1e-13);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-13);
        let back = integrate_adaptive(|x| x * x, 2.0, 0.0, 1e-13);
        assert!((back + 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_rule_is_exact_to_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(6);
        for deg in 0..12 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn chebyshev_second_kind_weight() {
        // ∫ x^2 sqrt(1-x^2) dx = π/8
        let (x, w) = gauss_gegenbauer(0.5, 5);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((q - std::f64::consts::PI / 8.0).abs() < 1e-14);
        assert!((gegenbauer_mass(1.5) - 3.0 * std::f64::consts::PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormality() {
        let (x, w) = gauss_gegenbauer(1.0, 12);
        for a in 0..8 {
            for b in 0..8 {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(x, w)| {
                        let (p, _, _) = orthonormal_poly_table(1.0, 8, *x);
                        w * p[a] * p[b]
                    })
                    .sum();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-13);
            }
        }
    }
}
