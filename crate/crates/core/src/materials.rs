//! Constitutive relations: Newtonian fluid, the explicit part of the
//! incompressible Mooney–Rivlin solid with `μ₁ = 0`, and the effective
//! viscosity of the split stage problem.

use crate::mesh::Subdomain;

pub type Tensor = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub eta_f: f64,
    pub rho_f: f64,
}

/// Solid with shear modulus `mu_s = μ₂`; the `μ₁` term is not supported.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolidParams {
    pub mu_s: f64,
    pub rho_s: f64,
}

pub fn sym(a: &Tensor) -> Tensor {
    let off = 0.5 * (a[0][1] + a[1][0]);
    [[a[0][0], off], [off, a[1][1]]]
}

/// `2 η ε - p I`
pub fn fluid_stress(eps: &Tensor, p: f64, params: &FluidParams) -> Tensor {
    let e = 2.0 * params.eta_f;
    [[e * eps[0][0] - p, e * eps[0][1]], [e * eps[1][0], e * eps[1][1] - p]]
}

/// `μ_s (H - (∇u#)ᵀ ∇u#)` where `H` is the symmetric gradient term of the
/// explicitly known displacement supplied by the caller.
pub fn solid_explicit_stress(grad_u_sharp: &Tensor, history_term: &Tensor, params: &SolidParams) -> Tensor {
    let g = grad_u_sharp;
    let mut s = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let gtg = g[0][a] * g[0][b] + g[1][a] * g[1][b];
            s[a][b] = params.mu_s * (history_term[a][b] - gtg);
        }
    }
    s
}

/// Viscosity of the stage problem: `η_f` in the fluid and `γ τ μ_s` in the solid.
pub fn effective_viscosity(tag: Subdomain, gamma: f64, tau: f64, fluid: &FluidParams, solid: &SolidParams) -> f64 {
    match tag {
        Subdomain::Fluid => fluid.eta_f,
        Subdomain::Solid => gamma * tau * solid.mu_s,
    }
}

pub fn density(tag: Subdomain, fluid: &FluidParams, solid: &SolidParams) -> f64 {
    match tag {
        Subdomain::Fluid => fluid.rho_f,
        Subdomain::Solid => solid.rho_s,
    }
}

/// `det(I + ∇̂û)`
pub fn jacobian_det(grad_u_ref: &Tensor) -> f64 {
    let g = grad_u_ref;
    (1.0 + g[0][0]) * (1.0 + g[1][1]) - g[0][1] * g[1][0]
}

/// Total solid Cauchy stress of a stage, `p I + 2 η ε(v) + explicit part`.
pub fn combined_solid_stress(grad_v: &Tensor, p: f64, eta: f64, explicit: &Tensor) -> Tensor {
    let e = sym(grad_v);
    let mut s = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            s[a][b] = 2.0 * eta * e[a][b] + explicit[a][b];
        }
        s[a][a] += p;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FLUID: FluidParams = FluidParams { eta_f: 1.0, rho_f: 1000.0 };
    const SOLID: SolidParams = SolidParams { mu_s: 0.5e6, rho_s: 1e4 };

    fn frob(a: &Tensor) -> f64 {
        (a[0][0].powi(2) + a[0][1].powi(2) + a[1][0].powi(2) + a[1][1].powi(2)).sqrt()
    }

    #[test]
    fn fluid_stress_examples() {
        assert_eq!(fluid_stress(&[[0.0; 2]; 2], 3.0, &FLUID), [[-3.0, 0.0], [0.0, -3.0]]);
        assert_eq!(fluid_stress(&[[1.0, 0.0], [0.0, -1.0]], 0.0, &FLUID), [[2.0, 0.0], [0.0, -2.0]]);
    }

    proptest! {
        #[test]
        fn fluid_stress_trace(e00 in -5.0..5.0f64, e01 in -5.0..5.0f64, e11 in -5.0..5.0f64, p in -5.0..5.0f64, eta in 0.1..10.0f64) {
            let params = FluidParams { eta_f: eta, rho_f: 1.0 };
            let s = fluid_stress(&[[e00, e01], [e01, e11]], p, &params);
            prop_assert!((s[0][0] + s[1][1] - (2.0 * eta * (e00 + e11) - 2.0 * p)).abs() < 1e-12);
        }

        #[test]
        fn shear_preserves_volume(s in -10.0..10.0f64) {
            prop_assert_eq!(jacobian_det(&[[0.0, s], [0.0, 0.0]]), 1.0);
        }
    }

    #[test]
    fn explicit_stress_examples() {
        let z = [[0.0; 2]; 2];
        assert_eq!(solid_explicit_stress(&z, &z, &SOLID), z);
        let (a, b) = (0.1, -0.3);
        let s = solid_explicit_stress(&[[a, 0.0], [0.0, b]], &z, &SOLID);
        assert!((s[0][0] + SOLID.mu_s * a * a).abs() < 1e-9);
        assert!((s[1][1] + SOLID.mu_s * b * b).abs() < 1e-9);
        assert_eq!(s[0][1], 0.0);
    }

    #[test]
    fn rigid_rotation_is_nearly_stress_free() {
        // one implicit Euler step of a rotation started from rest:
        // v = u/τ, history displacement zero, u# = u
        let tau = 0.01;
        let eta = tau * SOLID.mu_s;
        for th in [0.2f64, 0.1, 0.05, 0.025] {
            let (c, s) = (th.cos(), th.sin());
            // spatial gradient of u = x - X is I - Rᵀ
            let grad_u = [[1.0 - c, -s], [s, 1.0 - c]];
            let grad_v = grad_u.map(|r| r.map(|e| e / tau));
            let explicit = solid_explicit_stress(&grad_u, &[[0.0; 2]; 2], &SOLID);
            let total = combined_solid_stress(&grad_v, 0.0, eta, &explicit);
            assert!(frob(&total) <= 1e-6 * SOLID.mu_s * th * th, "{}", frob(&total));
        }
    }

    #[test]
    fn viscosity_and_determinant() {
        assert_eq!(effective_viscosity(Subdomain::Fluid, 0.3, 0.1, &FLUID, &SOLID), 1.0);
        let eta = effective_viscosity(Subdomain::Solid, 2.0 / 3.0, 0.01, &FLUID, &SOLID);
        assert!((eta - 10000.0 / 3.0).abs() < 1e-9);
        assert!(effective_viscosity(Subdomain::Solid, 2.0 / 3.0, 1e-12, &FLUID, &SOLID) < 1e-5);
        assert_eq!(jacobian_det(&[[0.0; 2]; 2]), 1.0);
        assert!((jacobian_det(&[[0.1, 0.0], [0.0, -0.1]]) - 0.99).abs() < 1e-15);
    }
}
