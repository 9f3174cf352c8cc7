//! Adaptive Gauss–Kronrod quadrature and fixed panel rules.
//!
//! [`integrate`] is a globally adaptive G7/K15 scheme (bisect the interval
//! with the largest error estimate). [`PanelRule`] exposes the K15 nodes with
//! an integration matrix so a primitive can be sampled at the nodes of a
//! panel from integrand samples at the same nodes.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Values that can be integrated: reals, complex numbers, small vectors.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            abs: 1e-12,
            max_intervals: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub intervals: usize,
}

/// One G7/K15 application on `[a, b]`: (Kronrod value, |K15 − G7|).
pub fn gk15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[i];
        if i % 2 == 1 {
            g = g + s * WG[i / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).magnitude())
}

struct Seg<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Seg<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Seg<V> {}
impl<V> PartialOrd for Seg<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Seg<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<V: QuadValue, F: FnMut(f64) -> V>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<QuadResult<V>> {
    if a == b {
        return Ok(QuadResult { value: V::zero(), error: 0.0, intervals: 0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Seg { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    loop {
        if err <= tol.abs.max(tol.rel * total.magnitude()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature { a, b, estimate: err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval below floating-point resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        total = total - worst.value + v1 + v2;
        err = err - worst.error + e1 + e2;
        heap.push(Seg { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Seg { a: m, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the incremental updates.
    let mut value = V::zero();
    let mut error = 0.0;
    let n = heap.len();
    for s in heap.into_vec() {
        value = value + s.value;
        error += s.error;
    }
    Ok(QuadResult { value, error, intervals: n })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(q, x);
        nodes[q - 1 - i] = x;
        weights[q - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let vals = legendre_values(n, x);
    let p = vals[n];
    let pm1 = if n > 0 { vals[n - 1] } else { 0.0 };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

fn legendre_values(n: usize, x: f64) -> Vec<f64> {
    let mut v = vec![0.0; n + 2];
    v[0] = 1.0;
    if n + 1 >= 1 {
        v[1] = x;
    }
    for k in 1..=n {
        v[k + 1] = ((2 * k + 1) as f64 * x * v[k] - k as f64 * v[k - 1]) / (k + 1) as f64;
    }
    v
}

/// ∫_{-1}^{t} P_j(s) ds for j = 0..n-1.
fn legendre_primitives(n: usize, t: f64) -> Vec<f64> {
    let p = legendre_values(n + 1, t);
    (0..n)
        .map(|j| {
            if j == 0 {
                t + 1.0
            } else {
                (p[j + 1] - p[j - 1]) / (2 * j + 1) as f64
            }
        })
        .collect()
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// K15 panel rule with a spectral integration matrix.
#[derive(Clone, Debug)]
pub struct PanelRule {
    /// Nodes on `[-1, 1]`, ascending.
    pub nodes: Vec<f64>,
    pub kronrod: Vec<f64>,
    /// Gauss weights on the same node list (zero at Kronrod-only nodes).
    pub gauss: Vec<f64>,
    /// `integ[i][j] = ∫_{-1}^{t_i} ℓ_j`.
    pub integ: Vec<Vec<f64>>,
    /// Legendre coefficients of each Lagrange basis function, `lag[j][k]`.
    lag: Vec<Vec<f64>>,
}

impl PanelRule {
    pub fn k15() -> Self {
        let mut nodes = Vec::with_capacity(15);
        let mut kronrod = Vec::with_capacity(15);
        let mut gauss = Vec::with_capacity(15);
        for i in 0..7 {
            nodes.push(-XGK[i]);
            kronrod.push(WGK[i]);
            gauss.push(if i % 2 == 1 { WG[i / 2] } else { 0.0 });
        }
        nodes.push(0.0);
        kronrod.push(WGK[7]);
        gauss.push(WG[3]);
        for i in (0..7).rev() {
            nodes.push(XGK[i]);
            kronrod.push(WGK[i]);
            gauss.push(if i % 2 == 1 { WG[i / 2] } else { 0.0 });
        }
        let n = nodes.len();
        // Vandermonde in the Legendre basis: V[i][k] = P_k(t_i).
        let vand: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&t| legendre_values(n, t)[..n].to_vec())
            .collect();
        // Lagrange basis ℓ_j = Σ_k lag[j][k] P_k, i.e. V · lag[j] = e_j.
        let lag: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                solve_dense(vand.clone(), e)
            })
            .collect();
        let mut rule = PanelRule { nodes, kronrod, gauss, integ: Vec::new(), lag };
        rule.integ = rule.nodes.clone().iter().map(|&t| rule.primitive_weights(t)).collect();
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weights `w_j(t) = ∫_{-1}^{t} ℓ_j` for an arbitrary `t ∈ [-1, 1]`.
    pub fn primitive_weights(&self, t: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let prim = legendre_primitives(n, t);
        (0..n)
            .map(|j| (0..n).map(|k| self.lag[j][k] * prim[k]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - 0.0).abs() < 1e-14);
        let r = integrate(|x: f64| x * x, 0.0, 3.0, Tolerance::default()).unwrap();
        assert!((r.value - 9.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let r = integrate(|x: f64| (-x * x).exp(), -10.0, 10.0, Tolerance::default()).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_complex() {
        let k = 50.0;
        let r = integrate(
            |x: f64| Complex64::new(0.0, k * x).exp(),
            0.0,
            1.0,
            Tolerance { rel: 1e-12, abs: 1e-14, ..Default::default() },
        )
        .unwrap();
        let exact = (Complex64::new(0.0, k).exp() - 1.0) / Complex64::new(0.0, k);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 ln t dt = -1
        let r = integrate(|t: f64| t.ln(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_weights() {
        for q in [2usize, 5, 8, 16] {
            let (x, w) = gauss_legendre(q);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
            if q >= 3 {
                assert!((m4 - 0.4).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn panel_integration_matrix() {
        let rule = PanelRule::k15();
        // f = cos(3t): primitive sin(3t)/3 + sin(3)/3 from -1.
        let f: Vec<f64> = rule.nodes.iter().map(|t| (3.0 * t).cos()).collect();
        for (i, &t) in rule.nodes.iter().enumerate() {
            let approx: f64 = rule.integ[i].iter().zip(&f).map(|(w, v)| w * v).sum();
            let exact = ((3.0 * t).sin() + 3.0f64.sin()) / 3.0;
            assert!((approx - exact).abs() < 1e-11, "{i}: {approx} vs {exact}");
        }
        let total: f64 = rule.kronrod.iter().zip(&f).map(|(w, v)| w * v).sum();
        assert!((total - 2.0 * 3.0f64.sin() / 3.0).abs() < 1e-14);
        let g: f64 = rule.gauss.iter().sum();
        assert!((g - 2.0).abs() < 1e-14);
    }
}
