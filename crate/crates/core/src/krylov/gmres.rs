use super::{axpy, dot, norm, residual, KrylovConfig, LinearOperator, SolveStats};
use crate::error::{FsiError, Result};

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}

/// Restarted flexible GMRES with right preconditioning. The preconditioner may
/// change from one iteration to the next. `x` holds the initial guess on entry
/// and the solution on return. Convergence is declared when the Euclidean norm
/// of `b - A x` drops below `cfg.tol`.
pub fn fgmres(
    op: &dyn LinearOperator,
    prec: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    cfg: &KrylovConfig,
) -> Result<SolveStats> {
    let n = b.len();
    let m = cfg.restart.max(1);
    let mut stats = SolveStats::default();
    let mut r = vec![0.0; n];
    residual(op, b, x, &mut r);
    let mut beta = norm(&r);
    stats.residuals.push(beta);
    if beta < cfg.tol {
        stats.converged = true;
        return Ok(stats);
    }
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
    loop {
        v.clear();
        z.clear();
        v.push(r.iter().map(|e| e / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut k = 0;
        let mut est = beta;
        while k < m && stats.iterations < cfg.max_iter {
            let mut zk = vec![0.0; n];
            prec.apply(&v[k], &mut zk);
            let mut w = vec![0.0; n];
            op.apply(&zk, &mut w);
            z.push(zk);
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                axpy(-h[i][k], &v[i], &mut w);
            }
            h[k + 1][k] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            let hk1 = h[k + 1][k];
            h[k][k] = c * h[k][k] + s * hk1;
            h[k + 1][k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            est = g[k + 1].abs();
            stats.iterations += 1;
            stats.residuals.push(est);
            k += 1;
            if est < cfg.tol || hk1 == 0.0 || !est.is_finite() {
                break;
            }
            v.push(w.iter().map(|e| e / hk1).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for i in 0..k {
            axpy(y[i], &z[i], x);
        }
        residual(op, b, x, &mut r);
        beta = norm(&r);
        if let Some(last) = stats.residuals.last_mut() {
            *last = beta;
        }
        if beta < cfg.tol {
            stats.converged = true;
            return Ok(stats);
        }
        if stats.iterations >= cfg.max_iter || !beta.is_finite() || !est.is_finite() {
            return Err(FsiError::SolverFailure {
                solver: "FGMRES",
                iterations: stats.iterations,
                residual: beta,
                history: stats.residuals,
            });
        }
    }
}
