use super::{axpy, dot, norm, residual, LinearOperator, SolveStats, Stop};
use crate::error::{FsiError, Result};

fn budget(stop: Stop) -> (f64, usize) {
    match stop {
        Stop::Tolerance { tol, max_iter } => (tol, max_iter),
        Stop::Fixed(n) => (-1.0, n),
    }
}

fn finish(name: &'static str, stop: Stop, stats: SolveStats) -> Result<SolveStats> {
    match stop {
        Stop::Tolerance { .. } if !stats.converged => Err(FsiError::SolverFailure {
            solver: name,
            iterations: stats.iterations,
            residual: stats.final_residual(),
            history: stats.residuals,
        }),
        _ => Ok(stats),
    }
}

/// Preconditioned conjugate gradients for symmetric positive definite systems.
pub fn cg(op: &dyn LinearOperator, prec: &dyn LinearOperator, b: &[f64], x: &mut [f64], stop: Stop) -> Result<SolveStats> {
    let (tol, max_iter) = budget(stop);
    let n = b.len();
    let mut stats = SolveStats::default();
    let mut r = vec![0.0; n];
    residual(op, b, x, &mut r);
    let mut rn = norm(&r);
    stats.residuals.push(rn);
    if rn < tol {
        stats.converged = true;
        return Ok(stats);
    }
    let mut z = vec![0.0; n];
    prec.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    while stats.iterations < max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap == 0.0 || rz == 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        rn = norm(&r);
        stats.iterations += 1;
        stats.residuals.push(rn);
        if rn < tol {
            stats.converged = true;
            break;
        }
        prec.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    if !rn.is_finite() {
        stats.converged = false;
    }
    finish("CG", stop, stats)
}

/// Preconditioned MINRES for symmetric (possibly indefinite) systems with a
/// symmetric positive definite preconditioner. The monitored residual is the
/// preconditioned one.
pub fn minres(op: &dyn LinearOperator, prec: &dyn LinearOperator, b: &[f64], x: &mut [f64], stop: Stop) -> Result<SolveStats> {
    let (tol, max_iter) = budget(stop);
    let n = b.len();
    let mut stats = SolveStats::default();
    let mut r1 = vec![0.0; n];
    residual(op, b, x, &mut r1);
    let mut y = vec![0.0; n];
    prec.apply(&r1, &mut y);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    stats.residuals.push(beta1);
    if beta1 == 0.0 || beta1 < tol {
        stats.converged = true;
        return Ok(stats);
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    while stats.iterations < max_iter {
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(vi, yi)| *vi = s * yi);
        op.apply(&v, &mut y);
        if stats.iterations >= 1 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        prec.apply(&r2, &mut y);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, x);
        stats.iterations += 1;
        stats.residuals.push(phibar);
        if phibar < tol {
            stats.converged = true;
            break;
        }
        if beta == 0.0 {
            stats.converged = true;
            break;
        }
    }
    finish("MINRES", stop, stats)
}

/// Right-preconditioned BiCGStab. A breakdown (`r̂·r ≈ 0`) restarts the
/// method once from the current iterate; a second breakdown stops it.
pub fn bicgstab(op: &dyn LinearOperator, prec: &dyn LinearOperator, b: &[f64], x: &mut [f64], stop: Stop) -> Result<SolveStats> {
    let (tol, max_iter) = budget(stop);
    let n = b.len();
    let mut stats = SolveStats::default();
    let mut r = vec![0.0; n];
    residual(op, b, x, &mut r);
    let mut rn = norm(&r);
    stats.residuals.push(rn);
    if rn < tol || rn == 0.0 {
        stats.converged = true;
        return Ok(stats);
    }
    let mut rhat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut restarted = false;
    let scale = norm(b).max(rn);
    while stats.iterations < max_iter {
        let rho_new = dot(&rhat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 || rho_new.abs() < 1e-30 * scale * scale {
            if restarted {
                break;
            }
            restarted = true;
            rhat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        prec.apply(&p, &mut phat);
        op.apply(&phat, &mut v);
        let rv = dot(&rhat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho / rv;
        axpy(-alpha, &v, &mut r);
        axpy(alpha, &phat, x);
        stats.iterations += 1;
        let sn = norm(&r);
        if sn < tol {
            stats.residuals.push(sn);
            stats.converged = true;
            break;
        }
        prec.apply(&r, &mut shat);
        op.apply(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &r) / tt } else { 0.0 };
        axpy(omega, &shat, x);
        axpy(-omega, &t, &mut r);
        rn = norm(&r);
        stats.residuals.push(rn);
        if rn < tol {
            stats.converged = true;
            break;
        }
        if !rn.is_finite() {
            break;
        }
    }
    finish("BiCGStab", stop, stats)
}
