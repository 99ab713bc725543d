//! Lagrange bases on the unit square and the 3×3 Gauss rule.
//!
//! Q2 local node `(i, j)` sits at `(i/2, j/2)` and has local index `i + 3j`.
//! Q1 local nodes follow the cell vertex order `(0,0), (1,0), (1,1), (0,1)`.

use std::sync::OnceLock;

pub const NQ: usize = 9;

pub fn gauss3() -> ([f64; 3], [f64; 3]) {
    let d = 0.15f64.sqrt();
    ([0.5 - d, 0.5, 0.5 + d], [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
}

pub fn q2_1d(x: f64) -> [f64; 3] {
    [2.0 * (x - 0.5) * (x - 1.0), -4.0 * x * (x - 1.0), 2.0 * x * (x - 0.5)]
}

pub fn q2_1d_deriv(x: f64) -> [f64; 3] {
    [4.0 * x - 3.0, -8.0 * x + 4.0, 4.0 * x - 1.0]
}

/// Q2 values and parametric gradients at `xi`.
pub fn q2_shape(xi: [f64; 2]) -> ([f64; 9], [[f64; 2]; 9]) {
    let (fx, fy) = (q2_1d(xi[0]), q2_1d(xi[1]));
    let (dx, dy) = (q2_1d_deriv(xi[0]), q2_1d_deriv(xi[1]));
    let mut v = [0.0; 9];
    let mut g = [[0.0; 2]; 9];
    for j in 0..3 {
        for i in 0..3 {
            v[i + 3 * j] = fx[i] * fy[j];
            g[i + 3 * j] = [dx[i] * fy[j], fx[i] * dy[j]];
        }
    }
    (v, g)
}

/// Q1 values and parametric gradients at `xi`.
pub fn q1_shape(xi: [f64; 2]) -> ([f64; 4], [[f64; 2]; 4]) {
    let (s, t) = (xi[0], xi[1]);
    (
        [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t],
        [[-(1.0 - t), -(1.0 - s)], [1.0 - t, -s], [t, s], [-t, 1.0 - s]],
    )
}

/// Shape data tabulated at the quadrature points, point `q = a + 3b` at
/// `(x_a, x_b)`.
pub struct Tables {
    pub points: [[f64; 2]; NQ],
    pub weights: [f64; NQ],
    pub q2: [[f64; 9]; NQ],
    pub q2_grad: [[[f64; 2]; 9]; NQ],
    pub q1: [[f64; 4]; NQ],
    pub q1_grad: [[[f64; 2]; 4]; NQ],
}

pub fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let (x, w) = gauss3();
        let mut t = Tables {
            points: [[0.0; 2]; NQ],
            weights: [0.0; NQ],
            q2: [[0.0; 9]; NQ],
            q2_grad: [[[0.0; 2]; 9]; NQ],
            q1: [[0.0; 4]; NQ],
            q1_grad: [[[0.0; 2]; 4]; NQ],
        };
        for b in 0..3 {
            for a in 0..3 {
                let q = a + 3 * b;
                let xi = [x[a], x[b]];
                t.points[q] = xi;
                t.weights[q] = w[a] * w[b];
                (t.q2[q], t.q2_grad[q]) = q2_shape(xi);
                (t.q1[q], t.q1_grad[q]) = q1_shape(xi);
            }
        }
        t
    })
}
