//! Linearized operators at a nearly parallel structure.
//!
//! A positive 3-form is nearly parallel when dΩ = τ₀⋆Ω and d⋆Ω = 0, i.e.
//! only the scalar torsion survives. At such a basepoint the derivative of
//! the flow field has the closed form
//!
//!   D_ΩQ(Ω̇) = −δdΩ̇ − pdδpΩ̇ − τ₀(⋆d(rΩ̇) + r(⋆dΩ̇))
//!              + τ₀²( (1/18)[Ω̇]₁ + (1/6)[Ω̇]₇ − (23/6)[Ω̇]₂₇ ),
//!
//! which factors as −pdδp − (⋆d + τ₀r)² + (1/6)τ₀²·id because
//! (⋆d)² = δd on 3-forms in seven dimensions and
//! −r² + (1/6)id = (1/18)π₁ + (1/6)π₇ − (23/6)π₂₇.
//!
//! This module assembles the operator on the invariant 3-form coefficients
//! three independent ways — the expanded formula, the factored formula, and
//! a finite-difference Jacobian of the gradient field — and requires the
//! routes to agree before any operator is returned. Built on top of it are
//! the linearized soliton operator DS = D_ΩQ + (5/6)τ₀²·id, the combination
//! P = DS − λ*λ (whose Gram-weighted matrix must be symmetric), the
//! deformation space ker DS ∩ ker λ, and the spectrum of ⋆d on the invariant
//! part of Λ³₂₇.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::decompose::{decompose3, orthonormalize, psr_maps, ORTHONORMALIZE_TOL};
use crate::error::Error;
use crate::form::PForm;
use crate::homogeneous::{HomogeneousModel, STANDARD_WEIGHTS};
use crate::structure::{metric_from_form, PositiveThreeForm};

/// Relative size of the non-scalar torsion above which a basepoint is
/// rejected as not nearly parallel. The closed formulas are only valid when
/// dΩ − τ₀⋆Ω and d⋆Ω vanish, so admission must be strict.
pub const NEARLY_PARALLEL_TOL: f64 = 1e-9;

/// Required agreement between independent assemblies of the same operator,
/// as a relative operator (spectral) norm.
pub const ASSEMBLY_AGREEMENT_TOL: f64 = 1e-6;

/// Singular values at or below this fraction of the largest are treated as
/// zero in rank and kernel decisions; the full spectrum is always reported
/// so the decision is auditable.
pub const KERNEL_RELATIVE_THRESHOLD: f64 = 1e-8;

/// Eigenvalues of ⋆d on the invariant Λ³₂₇ within this distance
/// (relative to max(1, |τ₀|)) of −τ₀ or −3τ₀ are flagged.
pub const SPECTRUM_FLAG_TOL: f64 = 1e-6;

/// Relative residual allowed when re-expressing an operator image in the
/// invariant basis; the pointwise formulas preserve the invariant span, so
/// anything larger signals a broken model.
const REEXPRESSION_TOL: f64 = 1e-8;

/// Relative step of the outer finite differences in the Jacobian route.
/// Wider than the gradient's own step: the dominant error here is the
/// gradient's round-off noise divided by the step, not truncation.
const JACOBIAN_RELATIVE_STEP: f64 = 1e-4;

/// A linear operator on the invariant 3-form coefficients, together with
/// everything needed to audit it: the L² Gram matrix of the basis, the
/// basepoint, its scalar torsion, and the singular spectrum.
#[derive(Debug, Clone)]
pub struct LinearOperatorOnInvariants {
    pub matrix: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    pub basepoint: Vec<f64>,
    pub tau0: f64,
    pub singular_values: Vec<f64>,
}

/// Serialization view of an operator (matrices in row-major nested arrays).
#[derive(Debug, Clone, Serialize)]
pub struct OperatorExport {
    pub schema_version: u32,
    pub matrix: Vec<Vec<f64>>,
    pub gram: Vec<Vec<f64>>,
    pub basepoint: Vec<f64>,
    pub tau0: f64,
    pub singular_values: Vec<f64>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn singular_values_of(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    s
}

fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |acc, s| acc.max(*s))
}

impl LinearOperatorOnInvariants {
    fn new(matrix: DMatrix<f64>, gram: DMatrix<f64>, basepoint: Vec<f64>, tau0: f64) -> Self {
        let singular_values = singular_values_of(&matrix);
        LinearOperatorOnInvariants {
            matrix,
            gram,
            basepoint,
            tau0,
            singular_values,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(coeffs);
        (&self.matrix * v).as_slice().to_vec()
    }

    /// Relative asymmetry of G·M, which vanishes exactly when the operator
    /// is self-adjoint for the L² inner product represented by G.
    pub fn gram_weighted_symmetry_defect(&self) -> f64 {
        let gm = &self.gram * &self.matrix;
        let skew = &gm - gm.transpose();
        let denom = gm.norm().max(1e-300);
        skew.norm() / denom
    }

    pub fn export(&self) -> OperatorExport {
        OperatorExport {
            schema_version: 1,
            matrix: matrix_rows(&self.matrix),
            gram: matrix_rows(&self.gram),
            basepoint: self.basepoint.clone(),
            tau0: self.tau0,
            singular_values: self.singular_values.clone(),
        }
    }
}

/// Verify that the invariant form at `coeffs` is nearly parallel: dΩ must be
/// τ₀⋆Ω and d⋆Ω must vanish, both within [`NEARLY_PARALLEL_TOL`] relative to
/// the size of dΩ. Returns the metric context and τ₀.
pub fn check_nearly_parallel(
    model: &HomogeneousModel,
    coeffs: &[f64],
) -> Result<(PositiveThreeForm, f64), Error> {
    let ctx = metric_from_form(&model.three_form(coeffs)?)?;
    let d_omega = model.d(ctx.omega());
    // |⋆Ω|² = |Ω|² = 7 for the induced metric
    let tau0 = ctx.inner(&d_omega, ctx.star_omega())? / 7.0;
    let scale = ctx.norm2(&d_omega).sqrt().max(1.0);
    let d_omega_residual =
        ctx.norm2(&d_omega.add_scaled(ctx.star_omega(), -tau0)).sqrt() / scale;
    let d_star_omega_norm = ctx.norm2(&model.d(ctx.star_omega())).sqrt() / scale;
    if d_omega_residual > NEARLY_PARALLEL_TOL || d_star_omega_norm > NEARLY_PARALLEL_TOL {
        return Err(Error::BasepointNotNearlyParallel {
            d_omega_residual,
            d_star_omega_norm,
        });
    }
    Ok((ctx, tau0))
}

/// The expanded closed formula applied pointwise to one 3-form.
fn expanded_image(
    model: &HomogeneousModel,
    ctx: &PositiveThreeForm,
    tau0: f64,
    chi: &PForm,
) -> Result<PForm, Error> {
    let d_chi = model.d(chi);
    let delta_d = model.codifferential(ctx, &d_chi);
    let (p_chi, _, r_chi) = psr_maps(ctx, chi)?;
    let (pd_delta_p, _, _) = psr_maps(ctx, &model.d(&model.codifferential(ctx, &p_chi)))?;
    let star_d_r = ctx.hodge(&model.d(&r_chi));
    let (_, _, r_star_d) = psr_maps(ctx, &ctx.hodge(&d_chi))?;
    let dec = decompose3(ctx, chi)?;
    let reaction = dec
        .part1
        .scale(1.0 / 18.0)
        .add(&dec.part7.scale(1.0 / 6.0))
        .add_scaled(&dec.part27, -23.0 / 6.0);
    Ok(delta_d
        .add(&pd_delta_p)
        .scale(-1.0)
        .add_scaled(&star_d_r.add(&r_star_d), -tau0)
        .add_scaled(&reaction, tau0 * tau0))
}

/// The factored formula −pdδp − (⋆d + τ₀r)² + shift·τ₀²·id applied pointwise;
/// shift is 1/6 for D_ΩQ and 1 for the linearized soliton operator.
fn factored_image(
    model: &HomogeneousModel,
    ctx: &PositiveThreeForm,
    tau0: f64,
    shift: f64,
    chi: &PForm,
) -> Result<PForm, Error> {
    let a_op = |w: &PForm| -> Result<PForm, Error> {
        let (_, _, r_w) = psr_maps(ctx, w)?;
        Ok(ctx.hodge(&model.d(w)).add_scaled(&r_w, tau0))
    };
    let (p_chi, _, _) = psr_maps(ctx, chi)?;
    let (pd_delta_p, _, _) = psr_maps(ctx, &model.d(&model.codifferential(ctx, &p_chi)))?;
    let a2 = a_op(&a_op(chi)?)?;
    Ok(pd_delta_p
        .add(&a2)
        .scale(-1.0)
        .add_scaled(chi, shift * tau0 * tau0))
}

/// Express a 3-form in the model's invariant basis, rejecting images that
/// leave the span.
fn express_in_basis(
    model: &HomogeneousModel,
    ctx: &PositiveThreeForm,
    image: &PForm,
) -> Result<DVector<f64>, Error> {
    let basis = model.inv3_basis();
    let n = basis.len();
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = ctx.inner(&basis[i], &basis[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        rhs[i] = ctx.inner(&basis[i], image)?;
    }
    let x = gram.lu().solve(&rhs).ok_or_else(|| Error::Dimension {
        context: "singular invariant-basis Gram matrix".to_string(),
    })?;
    let mut rebuilt = PForm::zero(3);
    for (c, b) in x.iter().zip(basis) {
        rebuilt = rebuilt.add_scaled(b, *c);
    }
    let rel = ctx.norm2(&rebuilt.sub(image)).sqrt() / ctx.norm2(image).sqrt().max(1.0);
    if rel > REEXPRESSION_TOL {
        return Err(Error::Domain {
            context: format!(
                "operator image leaves the invariant 3-form span \
                 (relative residual {rel:.3e})"
            ),
        });
    }
    Ok(x)
}

/// Jacobian of the standard-weights gradient field by central differences
/// with one Richardson extrapolation per column.
fn gradient_jacobian(model: &HomogeneousModel, coeffs: &[f64]) -> Result<DMatrix<f64>, Error> {
    let n = coeffs.len();
    let scale = 1.0 + coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let h = JACOBIAN_RELATIVE_STEP * scale;
    let mut jac = DMatrix::zeros(n, n);
    let mut work = coeffs.to_vec();
    for j in 0..n {
        let base = coeffs[j];
        let mut central = |step: f64| -> Result<DVector<f64>, Error> {
            work[j] = base + step;
            let plus = DVector::from_vec(model.gradient_q(&work, STANDARD_WEIGHTS)?);
            work[j] = base - step;
            let minus = DVector::from_vec(model.gradient_q(&work, STANDARD_WEIGHTS)?);
            work[j] = base;
            Ok((plus - minus) / (2.0 * step))
        };
        let d1 = central(h)?;
        let d2 = central(0.5 * h)?;
        jac.set_column(j, &((d2 * 4.0 - d1) / 3.0));
    }
    Ok(jac)
}

/// The three independent assemblies of D_ΩQ on the invariant coefficients.
#[derive(Debug, Clone)]
pub struct LinearizedAssemblies {
    pub expanded: DMatrix<f64>,
    pub factored: DMatrix<f64>,
    pub finite_difference: DMatrix<f64>,
    /// Worst pairwise disagreement, relative operator norm.
    pub max_route_disagreement: f64,
}

/// Assemble D_ΩQ by the expanded formula, the factored formula and the
/// finite-difference Jacobian, without enforcing agreement.
pub fn assemble_q_routes(
    model: &HomogeneousModel,
    coeffs: &[f64],
) -> Result<LinearizedAssemblies, Error> {
    let (ctx, tau0) = check_nearly_parallel(model, coeffs)?;
    let n = model.inv3_basis().len();
    let mut expanded = DMatrix::zeros(n, n);
    let mut factored = DMatrix::zeros(n, n);
    for (j, chi) in model.inv3_basis().iter().enumerate() {
        let img_e = expanded_image(model, &ctx, tau0, chi)?;
        let img_f = factored_image(model, &ctx, tau0, 1.0 / 6.0, chi)?;
        expanded.set_column(j, &express_in_basis(model, &ctx, &img_e)?);
        factored.set_column(j, &express_in_basis(model, &ctx, &img_f)?);
    }
    let finite_difference = gradient_jacobian(model, coeffs)?;
    let scale = operator_norm(&expanded)
        .max(operator_norm(&factored))
        .max(operator_norm(&finite_difference))
        .max(1e-300);
    let max_route_disagreement = operator_norm(&(&expanded - &factored))
        .max(operator_norm(&(&expanded - &finite_difference)))
        .max(operator_norm(&(&factored - &finite_difference)))
        / scale;
    Ok(LinearizedAssemblies {
        expanded,
        factored,
        finite_difference,
        max_route_disagreement,
    })
}

/// Linearization of the flow field at a nearly parallel basepoint. All three
/// assembly routes must agree within [`ASSEMBLY_AGREEMENT_TOL`]; the matrix
/// returned is the expanded-formula one.
pub fn linearize_q(
    model: &HomogeneousModel,
    coeffs: &[f64],
) -> Result<LinearOperatorOnInvariants, Error> {
    let routes = assemble_q_routes(model, coeffs)?;
    if routes.max_route_disagreement > ASSEMBLY_AGREEMENT_TOL {
        return Err(Error::IdentityViolation {
            name: "linearized flow field route agreement".to_string(),
            lhs: routes.max_route_disagreement,
            rhs: 0.0,
            rel: routes.max_route_disagreement,
        });
    }
    let (ctx, tau0) = check_nearly_parallel(model, coeffs)?;
    let gram = model.invariant_gram(&ctx);
    Ok(LinearOperatorOnInvariants::new(
        routes.expanded,
        gram,
        coeffs.to_vec(),
        tau0,
    ))
}

/// Linearized soliton operator DS = D_ΩQ + (5/6)τ₀²·id, cross-checked
/// against its own factored formula −pdδp − (⋆d + τ₀r)² + τ₀²·id.
pub fn linearize_soliton(
    model: &HomogeneousModel,
    coeffs: &[f64],
) -> Result<LinearOperatorOnInvariants, Error> {
    let dq = linearize_q(model, coeffs)?;
    let n = dq.dim();
    let shift = 5.0 / 6.0 * dq.tau0 * dq.tau0;
    let matrix = &dq.matrix + DMatrix::identity(n, n) * shift;

    let (ctx, tau0) = check_nearly_parallel(model, coeffs)?;
    let mut factored = DMatrix::zeros(n, n);
    for (j, chi) in model.inv3_basis().iter().enumerate() {
        let img = factored_image(model, &ctx, tau0, 1.0, chi)?;
        factored.set_column(j, &express_in_basis(model, &ctx, &img)?);
    }
    let scale = operator_norm(&matrix).max(operator_norm(&factored)).max(1e-300);
    let disagreement = operator_norm(&(&matrix - &factored)) / scale;
    if disagreement > ASSEMBLY_AGREEMENT_TOL {
        return Err(Error::IdentityViolation {
            name: "linearized soliton operator route agreement".to_string(),
            lhs: disagreement,
            rhs: 0.0,
            rel: disagreement,
        });
    }
    Ok(LinearOperatorOnInvariants::new(
        matrix,
        dq.gram,
        coeffs.to_vec(),
        tau0,
    ))
}

/// Matrix of the 1-form-valued map λ on the invariant basis: column j holds
/// the coefficients of λ(inv3ⱼ).
pub fn lambda_matrix(
    model: &HomogeneousModel,
    ctx: &PositiveThreeForm,
) -> Result<DMatrix<f64>, Error> {
    let basis = model.inv3_basis();
    let mut m = DMatrix::zeros(7, basis.len());
    for (j, b) in basis.iter().enumerate() {
        let l = model.lambda(ctx, b)?;
        m.set_column(j, &DVector::from_column_slice(l.coeffs()));
    }
    Ok(m)
}

/// P = DS − λ*λ on the invariant coefficients. λ*λ is assembled through the
/// Gram matrices — ⟨λ*λ χᵢ, χⱼ⟩ = ⟨λχᵢ, λχⱼ⟩_{L²(Λ¹)} — which makes the
/// adjointness exact at matrix level and P Gram-symmetric by construction
/// up to the symmetry defect of DS itself.
pub fn p_operator(
    model: &HomogeneousModel,
    coeffs: &[f64],
) -> Result<LinearOperatorOnInvariants, Error> {
    let ds = linearize_soliton(model, coeffs)?;
    let (ctx, tau0) = check_nearly_parallel(model, coeffs)?;
    let lam = lambda_matrix(model, &ctx)?;
    let h = ctx.vol_coeff() * model.vol_total();
    // bilinear form of λ*λ: Λᵀ·(1-form Gram)·Λ, volume-weighted
    let bilinear = lam.transpose() * ctx.gram(1) * &lam * h;
    let lstar_l = ds
        .gram
        .clone()
        .lu()
        .solve(&bilinear)
        .ok_or_else(|| Error::Dimension {
            context: "singular invariant Gram matrix in the adjoint solve".to_string(),
        })?;
    let matrix = &ds.matrix - lstar_l;
    Ok(LinearOperatorOnInvariants::new(
        matrix,
        ds.gram,
        coeffs.to_vec(),
        tau0,
    ))
}

/// Orthonormal kernel basis (columns) and the singular values of `m`,
/// obtained from the symmetric eigendecomposition of mᵀm. Every σ at or
/// below [`KERNEL_RELATIVE_THRESHOLD`]·σ_max counts as zero; a zero matrix
/// has full kernel.
fn kernel_of(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = m.ncols();
    let sym = m.transpose() * m;
    let eig = sym.symmetric_eigen();
    let mut svals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    let smax = svals.iter().fold(0.0f64, |a, s| a.max(*s));
    let mut cols = Vec::new();
    for i in 0..n {
        if svals[i] <= KERNEL_RELATIVE_THRESHOLD * smax {
            cols.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    svals.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    let mut kernel = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        kernel.set_column(j, c);
    }
    (kernel, svals)
}

/// Infinitesimal invariant soliton deformations at a nearly parallel
/// basepoint: the joint kernel of DS and λ, with the kernel of P as a
/// cross-check (the deformation space must lie inside it).
#[derive(Debug, Clone, Serialize)]
pub struct DeformationSpace {
    /// Coefficient vectors spanning ker DS ∩ ker λ (orthonormal in the
    /// Euclidean coefficient metric).
    pub basis: Vec<Vec<f64>>,
    /// Singular values of DS restricted to ker λ.
    pub singular_values: Vec<f64>,
    /// Singular values of the λ matrix itself.
    pub lambda_singular_values: Vec<f64>,
    pub p_kernel_dimension: usize,
    /// Every basis vector is annihilated by P within the kernel threshold.
    pub contained_in_p_kernel: bool,
}

pub fn deformation_space(
    model: &HomogeneousModel,
    coeffs: &[f64],
) -> Result<DeformationSpace, Error> {
    let ds = linearize_soliton(model, coeffs)?;
    let p = p_operator(model, coeffs)?;
    let (ctx, _) = check_nearly_parallel(model, coeffs)?;
    let lam = lambda_matrix(model, &ctx)?;

    let (lambda_kernel, lambda_singular_values) = kernel_of(&lam);
    let restricted = &ds.matrix * &lambda_kernel;
    let (inner_kernel, singular_values) = kernel_of(&restricted);
    let joint = &lambda_kernel * &inner_kernel;

    let p_norm = operator_norm(&p.matrix).max(1e-300);
    let mut contained = true;
    let mut basis = Vec::with_capacity(joint.ncols());
    for j in 0..joint.ncols() {
        let v = joint.column(j).into_owned();
        let pv = &p.matrix * &v;
        if pv.norm() > KERNEL_RELATIVE_THRESHOLD * p_norm * v.norm().max(1e-300) {
            contained = false;
        }
        basis.push(v.as_slice().to_vec());
    }
    let (p_kernel, _) = kernel_of(&p.matrix);
    Ok(DeformationSpace {
        basis,
        singular_values,
        lambda_singular_values,
        p_kernel_dimension: p_kernel.ncols(),
        contained_in_p_kernel: contained,
    })
}

/// Spectrum of ⋆d on the invariant part of Λ³₂₇.
#[derive(Debug, Clone, Serialize)]
pub struct StarDSpectrum {
    /// Eigenvalues as (re, im) pairs; imaginary parts are zero whenever the
    /// restricted operator is symmetric for the induced inner product.
    pub eigenvalues: Vec<[f64; 2]>,
    /// Indices of eigenvalues within [`SPECTRUM_FLAG_TOL`] of −τ₀.
    pub near_minus_tau0: Vec<usize>,
    /// Indices of eigenvalues within [`SPECTRUM_FLAG_TOL`] of −3τ₀.
    pub near_minus_three_tau0: Vec<usize>,
    pub tau0: f64,
}

/// Assemble ⋆d on an orthonormal basis of the invariant Λ³₂₇ part and return
/// its eigenvalues, flagging those near −τ₀ and −3τ₀. An empty invariant
/// Λ³₂₇ gives an empty spectrum.
pub fn star_d_spectrum_27(
    model: &HomogeneousModel,
    coeffs: &[f64],
) -> Result<StarDSpectrum, Error> {
    let (ctx, tau0) = check_nearly_parallel(model, coeffs)?;
    let mut projected = Vec::with_capacity(model.inv3_basis().len());
    for b in model.inv3_basis() {
        projected.push(decompose3(&ctx, b)?.part27);
    }
    let basis27 = orthonormalize(&ctx, &projected, ORTHONORMALIZE_TOL);
    let m = basis27.len();
    let mut mat = DMatrix::zeros(m, m);
    for j in 0..m {
        let image = ctx.hodge(&model.d(&basis27[j]));
        for i in 0..m {
            mat[(i, j)] = ctx.inner(&basis27[i], &image)?;
        }
    }
    let eigs = mat.complex_eigenvalues();
    let mut eigenvalues: Vec<[f64; 2]> = eigs.iter().map(|z| [z.re, z.im]).collect();
    eigenvalues.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).expect("finite"));
    let tol = SPECTRUM_FLAG_TOL * tau0.abs().max(1.0);
    let near = |target: f64, eigs: &[[f64; 2]]| -> Vec<usize> {
        eigs.iter()
            .enumerate()
            .filter(|(_, z)| ((z[0] - target).powi(2) + z[1].powi(2)).sqrt() <= tol)
            .map(|(i, _)| i)
            .collect()
    };
    let near_minus_tau0 = near(-tau0, &eigenvalues);
    let near_minus_three_tau0 = near(-3.0 * tau0, &eigenvalues);
    Ok(StarDSpectrum {
        eigenvalues,
        near_minus_tau0,
        near_minus_three_tau0,
        tau0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{squashed_family, squashed_s7};

    fn round_coeffs() -> Vec<f64> {
        squashed_family().coefficients(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn routes_agree_at_the_round_squashed_point() {
        let m = squashed_s7();
        let routes = assemble_q_routes(&m, &round_coeffs()).unwrap();
        assert!(
            routes.max_route_disagreement < ASSEMBLY_AGREEMENT_TOL,
            "disagreement {}",
            routes.max_route_disagreement
        );
    }

    #[test]
    fn dq_has_the_frozen_spectrum_and_eigenvector_action() {
        let m = squashed_s7();
        let c = round_coeffs();
        let dq = linearize_q(&m, &c).unwrap();
        // homogeneity: D_ΩQ(Ω) = (1/3)Q(Ω), and at this basepoint
        // Q(Ω) = −(5/6)τ₀²Ω, so D_ΩQ(Ω) = −(5/18)τ₀²Ω = −40Ω
        let image = dq.apply(&c);
        for (im, ci) in image.iter().zip(&c) {
            assert!((im + 40.0 * ci).abs() < 1e-5, "{im} vs {}", -40.0 * ci);
        }
        let mut eigs: Vec<f64> = dq
            .matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] + 460.0).abs() < 1e-4, "{}", eigs[0]);
        assert!((eigs[1] + 40.0).abs() < 1e-4, "{}", eigs[1]);
    }

    #[test]
    fn soliton_operator_shifts_the_spectrum() {
        let m = squashed_s7();
        let c = round_coeffs();
        let ds = linearize_soliton(&m, &c).unwrap();
        let image = ds.apply(&c);
        // DS(Ω̄) = (5/9)τ̄₀²Ω̄ = 80Ω̄
        for (im, ci) in image.iter().zip(&c) {
            assert!((im - 80.0 * ci).abs() < 1e-5, "{im} vs {}", 80.0 * ci);
        }
        let mut eigs: Vec<f64> = ds
            .matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] + 340.0).abs() < 1e-4, "{}", eigs[0]);
        assert!((eigs[1] - 80.0).abs() < 1e-4, "{}", eigs[1]);
    }

    #[test]
    fn p_equals_ds_without_invariant_one_forms_and_is_gram_symmetric() {
        let m = squashed_s7();
        let c = round_coeffs();
        let ds = linearize_soliton(&m, &c).unwrap();
        let p = p_operator(&m, &c).unwrap();
        assert!((&p.matrix - &ds.matrix).norm() < 1e-8 * ds.matrix.norm());
        assert!(
            p.gram_weighted_symmetry_defect() < 1e-8,
            "defect {}",
            p.gram_weighted_symmetry_defect()
        );
    }

    #[test]
    fn deformation_space_is_trivial_at_the_round_point() {
        let m = squashed_s7();
        let d = deformation_space(&m, &round_coeffs()).unwrap();
        assert!(d.basis.is_empty(), "unexpected deformations: {:?}", d.basis);
        assert!(d.contained_in_p_kernel);
        assert_eq!(d.p_kernel_dimension, 0);
        // λ ≡ 0 here (no invariant 1-forms), so its singular values vanish
        assert!(d.lambda_singular_values.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn star_d_on_invariant_27_part_has_eigenvalue_two() {
        let m = squashed_s7();
        let spec = star_d_spectrum_27(&m, &round_coeffs()).unwrap();
        assert_eq!(spec.eigenvalues.len(), 1);
        let [re, im] = spec.eigenvalues[0];
        assert!((re - 2.0).abs() < 1e-9 && im.abs() < 1e-12, "{re}+{im}i");
        // 2 is far from −τ₀ = 12 and −3τ₀ = 36: no flags
        assert!(spec.near_minus_tau0.is_empty());
        assert!(spec.near_minus_three_tau0.is_empty());
    }

    #[test]
    fn generic_squashed_point_is_rejected() {
        let m = squashed_s7();
        let c = squashed_family().coefficients(&[1.4, 0.7]).unwrap();
        match linearize_q(&m, &c) {
            Err(Error::BasepointNotNearlyParallel { .. }) => {}
            other => panic!("expected a basepoint rejection, got {other:?}"),
        }
    }
}
