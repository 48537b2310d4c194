//! Quadrature backends: Gauss–Legendre rules, adaptive Gauss–Kronrod,
//! the trapezoid rule on the unit circle and weighted point rules.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::special::NeumaierSum;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n ≥ 1` nodes, by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for j in 0..7 {
        let dx = h * GK_X[j];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[j] * s;
        if j % 2 == 1 {
            g += GK_WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` on `[a, b]`.
///
/// Subdivides the interval with the largest error estimate until the total
/// estimate is below `max(abs_tol, rel_tol·|I|)` or 2000 intervals are used.
/// Integrable endpoint singularities (logarithmic, inverse square root) are
/// handled because nodes never touch the endpoints.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    pieces.iter().map(|p| p.2).collect::<NeumaierSum>().value()
}

/// Adaptive quadrature over `[a, b]` split at the given interior breakpoints.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().cloned().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut acc = NeumaierSum::new();
    let mut lo = a;
    for c in cuts.into_iter().chain(core::iter::once(b)) {
        if c > lo {
            acc.add(integrate_adaptive(&mut f, lo, c, abs_tol, rel_tol));
            lo = c;
        }
    }
    acc.value()
}

/// `∫_0^∞ f(r) dr` via the substitution `r = u/(1-u)` on `[0, 1)`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, abs_tol: f64, rel_tol: f64) -> f64 {
    integrate_adaptive(
        |u| {
            let r = u / (1.0 - u);
            let jac = 1.0 / ((1.0 - u) * (1.0 - u));
            f(r) * jac
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// The `m` points of the trapezoid rule on the unit circle, `e^{2πij/m}`.
pub fn circle_nodes(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
        .collect()
}

/// Trapezoid rule for `∫ f dν_S` with `m` equispaced nodes (normalized arc length).
pub fn circle_quadrature<F: FnMut(Complex64) -> f64>(f: F, m: usize) -> f64 {
    assert!(m >= 4, "circle quadrature needs at least 4 nodes");
    let s: NeumaierSum = circle_nodes(m).into_iter().map(f).collect();
    s.value() / m as f64
}

/// Complex-valued trapezoid rule on the unit circle.
pub fn circle_quadrature_complex<F: FnMut(Complex64) -> Complex64>(mut f: F, m: usize) -> Complex64 {
    assert!(m >= 4, "circle quadrature needs at least 4 nodes");
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for z in circle_nodes(m) {
        let v = f(z);
        re.add(v.re);
        im.add(v.im);
    }
    Complex64::new(re.value(), im.value()) / m as f64
}

/// `Σ w_p f(x_p)` over a weighted point rule (sphere or plane grid).
pub fn weighted_quadrature<P, F: FnMut(&P) -> f64>(points: &[P], weights: &[f64], mut f: F) -> f64 {
    assert_eq!(points.len(), weights.len(), "points and weights differ in length");
    points
        .iter()
        .zip(weights)
        .map(|(p, &w)| if w == 0.0 { 0.0 } else { w * f(p) })
        .collect::<NeumaierSum>()
        .value()
}
