//! Irreducible decompositions of 2- and 3-forms under the stabilizer of a
//! positive 3-form, and the p/s/r maps built from the 3-form type components.
//!
//! Under the stabilizer group, Λ² = Λ²₇ ⊕ Λ²₁₄ (ranks 7, 14) and
//! Λ³ = Λ³₁ ⊕ Λ³₇ ⊕ Λ³₂₇ (ranks 1, 7, 27), where
//!   Λ²₇  = {v⌟Ω},                Λ²₁₄ = {β : β∧Ω = −⋆β} (the Lie algebra 𝔤₂),
//!   Λ³₁  = R·Ω,                  Λ³₇  = {ξ⌟⋆Ω}.
//! Projections are realized by orthogonal expansion in explicit orthonormal
//! subspace bases, which makes every rank visible and checkable at run time;
//! the closed projection formula π²₁₄(α) = (2α − ⋆(α∧Ω))/3 seeds the Λ²₁₄
//! basis, and the vectors eᵢ⌟⋆Ω seed Λ³₇.

use crate::error::Error;
use crate::form::PForm;
use crate::structure::PositiveThreeForm;

/// Relative norm floor for discarding dependent vectors during
/// Gram–Schmidt; subspace ranks are asserted against the representation
/// theory, so a wrong count fails fast.
pub const ORTHONORMALIZE_TOL: f64 = 1e-10;

/// Components of a 3-form along Λ³₁ ⊕ Λ³₇ ⊕ Λ³₂₇.
#[derive(Debug, Clone)]
pub struct Decomposition3 {
    pub part1: PForm,
    pub part7: PForm,
    pub part27: PForm,
}

/// Components of a 2-form along Λ²₇ ⊕ Λ²₁₄.
#[derive(Debug, Clone)]
pub struct Decomposition2 {
    pub part7: PForm,
    pub part14: PForm,
}

/// Gram–Schmidt with respect to the induced inner product, discarding
/// vectors whose residual norm falls below `tol` relative to the largest
/// input norm.
pub fn orthonormalize(ctx: &PositiveThreeForm, vectors: &[PForm], tol: f64) -> Vec<PForm> {
    let mut basis: Vec<PForm> = Vec::new();
    let scale = vectors
        .iter()
        .map(|v| ctx.norm2(v).sqrt())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return basis;
    }
    for v in vectors {
        let mut w = v.clone();
        // re-orthogonalize once for numerical robustness
        for _ in 0..2 {
            for u in &basis {
                let c = ctx.inner(&w, u).expect("equal degrees");
                w = w.add_scaled(u, -c);
            }
        }
        let n = ctx.norm2(&w).sqrt();
        if n > tol * scale {
            basis.push(w.scale(1.0 / n));
        }
    }
    basis
}

/// Orthonormal basis of Λ³₇ = {ξ⌟⋆Ω : ξ ∈ Λ¹}; always rank 7.
pub fn lambda3_7_basis(ctx: &PositiveThreeForm) -> Vec<PForm> {
    let seeds: Vec<PForm> = (0..7)
        .map(|i| ctx.star_omega().interior_basis(i).expect("degree 4"))
        .collect();
    let basis = orthonormalize(ctx, &seeds, ORTHONORMALIZE_TOL);
    assert_eq!(basis.len(), 7, "Λ³₇ must have rank 7");
    basis
}

/// Orthonormal basis of Λ²₁₄, seeded by π²₁₄(α) = (2α − ⋆(α∧Ω))/3 applied to
/// all 21 basis monomials; always rank 14.
pub fn lambda2_14_basis(ctx: &PositiveThreeForm) -> Vec<PForm> {
    let mut seeds = Vec::with_capacity(21);
    for idx in 0..21 {
        let mut alpha = PForm::zero(2);
        alpha.coeffs_mut()[idx] = 1.0;
        seeds.push(pi2_14(ctx, &alpha));
    }
    let basis = orthonormalize(ctx, &seeds, ORTHONORMALIZE_TOL);
    assert_eq!(basis.len(), 14, "Λ²₁₄ must have rank 14");
    basis
}

/// Closed-formula projection onto Λ²₁₄.
fn pi2_14(ctx: &PositiveThreeForm, alpha: &PForm) -> PForm {
    let wedged = alpha.wedge(ctx.omega()).expect("2 + 3 = 5");
    alpha.scale(2.0).sub(&ctx.hodge(&wedged)).scale(1.0 / 3.0)
}

/// Split a 2-form into its Λ²₇ and Λ²₁₄ components.
pub fn decompose2(ctx: &PositiveThreeForm, b: &PForm) -> Result<Decomposition2, Error> {
    if b.degree() != 2 {
        return Err(Error::DegreeMismatch {
            left: b.degree(),
            right: 2,
        });
    }
    let mut part14 = PForm::zero(2);
    for u in lambda2_14_basis(ctx) {
        let c = ctx.inner(b, &u)?;
        part14 = part14.add_scaled(&u, c);
    }
    let part7 = b.sub(&part14);
    Ok(Decomposition2 { part7, part14 })
}

/// Split a 3-form into its Λ³₁, Λ³₇ and Λ³₂₇ components.
pub fn decompose3(ctx: &PositiveThreeForm, a: &PForm) -> Result<Decomposition3, Error> {
    if a.degree() != 3 {
        return Err(Error::DegreeMismatch {
            left: a.degree(),
            right: 3,
        });
    }
    let omega = ctx.omega();
    let part1 = omega.scale(ctx.inner(a, omega)? / ctx.norm2(omega));
    let mut part7 = PForm::zero(3);
    for u in lambda3_7_basis(ctx) {
        let c = ctx.inner(a, &u)?;
        part7 = part7.add_scaled(&u, c);
    }
    let part27 = a.sub(&part1).sub(&part7);
    Ok(Decomposition3 {
        part1,
        part7,
        part27,
    })
}

/// The maps p, s and r on 3-forms:
///   p(a) = (4/3)[a]₁ + [a]₇ − [a]₂₇,
///   s(a) =      [a]₁ − [a]₇ + [a]₂₇,
///   r(a) = a − p(a) = −(1/3)[a]₁ + 2[a]₂₇.
pub fn psr_maps(
    ctx: &PositiveThreeForm,
    a: &PForm,
) -> Result<(PForm, PForm, PForm), Error> {
    let d = decompose3(ctx, a)?;
    let p = d
        .part1
        .scale(4.0 / 3.0)
        .add(&d.part7)
        .add_scaled(&d.part27, -1.0);
    let s = d.part1.sub(&d.part7).add(&d.part27);
    let r = a.sub(&p);
    Ok((p, s, r))
}

/// Second derivative of the dual form Θ(Ω) = ⋆_Ω Ω along a curve
/// Ω_t = A_t*Ω with Ω̇, Ω̈ the curve derivatives at t = 0 and Ȧ the velocity
/// of the linear maps:
///
///   Θ̈ = ⅓ g(Ω,Ω̇) ⋆(p−s)Ω̇ + 2 ⋆(Ȧᵗ)*(Ȧᵗ)*Ω − ⋆sΩ̈ + ⅓ (g(Ω̈,Ω) − g(sΩ̇,Ω̇)) ⋆Ω,
///
/// where (Ȧᵗ)* is the derivation action of the transposed velocity (the
/// transpose converts the pullback convention of the curve into the
/// substitution convention of `endo_apply`).
///
/// The formula requires Ȧ to be self-adjoint for the metric induced by Ω
/// (g·Ȧ symmetric) — the metric-deformation directions. It then holds at
/// every basepoint; rotation generators are excluded, but curves through
/// them reduce to the equivariance Θ(A*Ω) = A*Θ(Ω) directly.
/// Sanity witness: along Ω_t = (1+t)Ω the terms contribute
/// (7/9 + 2 − 7/3)⋆Ω = (4/9)⋆Ω, the second derivative of (1+t)^{4/3}⋆Ω.
pub fn dual_second_derivative(
    ctx: &PositiveThreeForm,
    omega_dot: &PForm,
    omega_ddot: &PForm,
    a_dot: &nalgebra::DMatrix<f64>,
) -> Result<PForm, Error> {
    let omega = ctx.omega();
    let (p_dot, s_dot, _) = psr_maps(ctx, omega_dot)?;
    let (_, s_ddot, _) = psr_maps(ctx, omega_ddot)?;
    let at = a_dot.transpose();
    let twice = omega.endo_apply(&at).endo_apply(&at);
    let g_omega_dot = ctx.inner(omega, omega_dot)?;
    let g_ddot_omega = ctx.inner(omega_ddot, omega)?;
    let g_s_dot_dot = ctx.inner(&s_dot, omega_dot)?;
    Ok(ctx
        .hodge(&p_dot.sub(&s_dot))
        .scale(g_omega_dot / 3.0)
        .add(&ctx.hodge(&twice).scale(2.0))
        .sub(&ctx.hodge(&s_ddot))
        .add(&ctx.hodge(omega).scale((g_ddot_omega - g_s_dot_dot) / 3.0)))
}
