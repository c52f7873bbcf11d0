//! Invariant-form calculus on homogeneous 7-manifolds.
//!
//! A [`HomogeneousModel`] packages the finite-dimensional data through which
//! every curved computation factors: structure constants of the coframe
//! (as the 2-forms de^i), the total volume of the underlying manifold, and
//! bases of the invariant 3-forms and invariant 1-forms. The exterior
//! derivative on invariant forms is the antiderivation extension of the
//! coframe table; it is cached as one matrix per degree.
//!
//! The table is only required to define a complex on the spans the model
//! declares (d∘d = 0 on the invariant 1- and 3-form bases). For reductive
//! quotients that are not Lie groups no global square-zero table exists in
//! coframe coordinates, so validation deliberately tests the invariant
//! complex rather than individual coframe legs; the reference-metric check
//! additionally confirms that d maps the invariant 3-form span into the
//! Hodge dual of that span, which is what every energy computation below
//! actually uses.
//!
//! Energies: with torsion components τ₀, τ₁, τ₂, τ₃ of the 3-form Ω,
//!
//! ```text
//! Dᵢ   = ½ ∫ |τᵢ|²,        𝒟_ν = ν₀D₀ + ν₁D₁ + ν₂D₂ + ν₃D₃,
//! 𝒟    = 𝒟_{(7,84,1,1)},   ℋ   = ∫ vol,
//! 𝒮    = ∫ ((21/8)τ₀² + 30|τ₁|² − ½|τ₂|² − ½|τ₃|²),
//! 𝒞    = 𝒟 − 𝒮 = ½ ∫ |∇Ω|²,   𝒞̃ = 4𝒟 + 7ℋ.
//! ```
//!
//! The flow field Q_ν is the negative L²-gradient of 𝒟_ν over the invariant
//! 3-form span, computed by central finite differences with one Richardson
//! extrapolation and the Gram matrix of the declared basis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{self, DIM, DIMS};
use crate::error::Error;
use crate::form::PForm;
use crate::structure::{metric_from_form, PositiveThreeForm};

/// Absolute tolerance for d∘d = 0 on the declared invariant bases. The
/// entries of a structure-constant table are exact rationals, so the
/// antiderivation extension is exact up to a few ulps of accumulation.
pub const MODEL_STRUCTURE_TOL: f64 = 1e-12;

/// Relative residual above which d of an invariant 3-form is considered to
/// leave the span of Hodge duals of the invariant 3-forms.
pub const MODEL_CLOSURE_TOL: f64 = 1e-10;

/// Relative disagreement between the two independent least-squares reads of
/// the vector torsion component (from dΩ and from d⋆Ω) above which the pair
/// of differentials cannot come from a single G₂-structure.
pub const TORSION_CONSISTENCY_TOL: f64 = 1e-8;

/// Condition-number ceiling for the invariant-basis Gram matrix; beyond this
/// the L²-gradient is numerically meaningless.
pub const BASIS_CONDITION_LIMIT: f64 = 1e12;

/// Relative step for the central finite differences behind the gradient.
pub const GRADIENT_RELATIVE_STEP: f64 = 1e-5;

/// Weights of the standard energy 𝒟 = 𝒟_{(7,84,1,1)}, whose gradient flow
/// the closed-form linearization and the soliton analysis refer to.
pub const STANDARD_WEIGHTS: [f64; 4] = [7.0, 84.0, 1.0, 1.0];

/// Serialized layout: forms are stored as plain coefficient vectors in the
/// lexicographic monomial bases (21 entries for 2-forms, etc.).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    coframe: Vec<String>,
    mc_table: Vec<Vec<f64>>,
    vol_total: f64,
    inv3_basis: Vec<Vec<f64>>,
    inv1_basis: Vec<Vec<f64>>,
}

/// A homogeneous model: coframe structure table, total volume, and bases of
/// invariant 1- and 3-forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct HomogeneousModel {
    coframe_names: Vec<String>,
    mc_table: Vec<PForm>,
    vol_total: f64,
    inv3_basis: Vec<PForm>,
    inv1_basis: Vec<PForm>,
    /// d_mats[k] maps degree-k coefficients to degree-(k+1) coefficients.
    d_mats: Vec<DMatrix<f64>>,
}

/// Squared torsion components extracted from (dΩ, d⋆Ω), plus the signed
/// scalar component.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TorsionSquares {
    pub tau0: f64,
    pub tau0_sq: f64,
    pub tau1_sq: f64,
    pub tau2_sq: f64,
    pub tau3_sq: f64,
}

/// Energy functionals of one invariant 3-form. Serialized keys match the
/// column names used in flow CSV output.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "D0")]
    pub d0: f64,
    #[serde(rename = "D1")]
    pub d1: f64,
    #[serde(rename = "D2")]
    pub d2: f64,
    #[serde(rename = "D3")]
    pub d3: f64,
    #[serde(rename = "D_nu")]
    pub d_nu: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Ct")]
    pub ct: f64,
}

fn check_weights(nu: [f64; 4]) -> Result<(), Error> {
    if nu.iter().all(|w| w.is_finite() && *w > 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidWeights { nu })
    }
}

/// Antiderivation extension of the coframe table, one matrix per degree.
fn build_d_matrices(mc_table: &[PForm]) -> Vec<DMatrix<f64>> {
    (0..=6)
        .map(|k| {
            let mut mat = DMatrix::zeros(DIMS[k + 1], DIMS[k]);
            if k == 0 {
                return mat; // invariant functions are constant
            }
            for (col, &mask) in basis::masks(k).iter().enumerate() {
                for i in basis::mask_indices(mask) {
                    let sign = basis::extract_sign(mask, i);
                    let rest_mask = mask & !(1u8 << i);
                    let mut rest = PForm::zero(k - 1);
                    rest.coeffs_mut()[basis::index_of(rest_mask)] = 1.0;
                    let term = mc_table[i as usize].wedge(&rest).expect("2 + (k-1) ≤ 7");
                    for (row, &c) in term.coeffs().iter().enumerate() {
                        mat[(row, col)] += sign * c;
                    }
                }
            }
            mat
        })
        .collect()
}

fn coeff_matrix(forms: &[PForm], degree: usize) -> DMatrix<f64> {
    DMatrix::from_fn(DIMS[degree], forms.len(), |r, c| forms[c].coeffs()[r])
}

/// Euclidean least squares of `target` against the columns of `mat`,
/// returning (solution, residual vector). Rank deficiency is tolerated via
/// SVD with a relative cutoff.
fn euclidean_least_squares(mat: &DMatrix<f64>, target: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let svd = mat.clone().svd(true, true);
    let cutoff = 1e-13 * svd.singular_values.max().max(1e-300);
    let sol = svd.solve(target, cutoff).expect("svd solve");
    let resid = target - mat * &sol;
    (sol, resid)
}

impl TryFrom<RawModel> for HomogeneousModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self, Error> {
        let to_forms = |vs: Vec<Vec<f64>>, degree: usize| -> Result<Vec<PForm>, Error> {
            vs.into_iter().map(|v| PForm::new(degree, v)).collect()
        };
        HomogeneousModel::new(
            raw.coframe,
            to_forms(raw.mc_table, 2)?,
            raw.vol_total,
            to_forms(raw.inv3_basis, 3)?,
            to_forms(raw.inv1_basis, 1)?,
        )
    }
}

impl From<HomogeneousModel> for RawModel {
    fn from(m: HomogeneousModel) -> RawModel {
        RawModel {
            coframe: m.coframe_names,
            mc_table: m.mc_table.into_iter().map(PForm::into_coeffs).collect(),
            vol_total: m.vol_total,
            inv3_basis: m.inv3_basis.into_iter().map(PForm::into_coeffs).collect(),
            inv1_basis: m.inv1_basis.into_iter().map(PForm::into_coeffs).collect(),
        }
    }
}

impl HomogeneousModel {
    pub fn new(
        coframe_names: Vec<String>,
        mc_table: Vec<PForm>,
        vol_total: f64,
        inv3_basis: Vec<PForm>,
        inv1_basis: Vec<PForm>,
    ) -> Result<Self, Error> {
        let mut issues = Vec::new();
        if coframe_names.len() != DIM {
            issues.push(format!("expected 7 coframe names, got {}", coframe_names.len()));
        }
        if mc_table.len() != DIM {
            issues.push(format!("expected 7 structure 2-forms, got {}", mc_table.len()));
        }
        for (i, f) in mc_table.iter().enumerate() {
            if f.degree() != 2 {
                issues.push(format!("structure entry {i} has degree {}", f.degree()));
            }
        }
        if !(vol_total.is_finite() && vol_total > 0.0) {
            issues.push(format!("total volume must be positive, got {vol_total}"));
        }
        if inv3_basis.is_empty() {
            issues.push("invariant 3-form basis is empty".to_string());
        }
        for (i, f) in inv3_basis.iter().enumerate() {
            if f.degree() != 3 {
                issues.push(format!("invariant 3-form {i} has degree {}", f.degree()));
            }
        }
        for (i, f) in inv1_basis.iter().enumerate() {
            if f.degree() != 1 {
                issues.push(format!("invariant 1-form {i} has degree {}", f.degree()));
            }
        }
        if !issues.is_empty() {
            return Err(Error::ModelInvalid { issues });
        }
        let d_mats = build_d_matrices(&mc_table);
        Ok(HomogeneousModel {
            coframe_names,
            mc_table,
            vol_total,
            inv3_basis,
            inv1_basis,
            d_mats,
        })
    }

    pub fn coframe_names(&self) -> &[String] {
        &self.coframe_names
    }

    pub fn mc_table(&self) -> &[PForm] {
        &self.mc_table
    }

    pub fn vol_total(&self) -> f64 {
        self.vol_total
    }

    pub fn inv3_basis(&self) -> &[PForm] {
        &self.inv3_basis
    }

    pub fn inv1_basis(&self) -> &[PForm] {
        &self.inv1_basis
    }

    /// The invariant 3-form with the given coefficients in `inv3_basis`.
    pub fn three_form(&self, coeffs: &[f64]) -> Result<PForm, Error> {
        if coeffs.len() != self.inv3_basis.len() {
            return Err(Error::Dimension {
                context: format!(
                    "expected {} coefficients for the invariant 3-form basis, got {}",
                    self.inv3_basis.len(),
                    coeffs.len()
                ),
            });
        }
        let mut out = PForm::zero(3);
        for (c, b) in coeffs.iter().zip(&self.inv3_basis) {
            out = out.add_scaled(b, *c);
        }
        Ok(out)
    }

    /// Exterior derivative of an invariant form (degree ≤ 6).
    pub fn d(&self, a: &PForm) -> PForm {
        let k = a.degree();
        assert!(k <= 6, "no 8-forms in dimension 7");
        let out = &self.d_mats[k] * DVector::from_column_slice(a.coeffs());
        PForm::new(k + 1, out.as_slice().to_vec()).expect("matrix output length")
    }

    /// Codifferential δ = (−1)^p ⋆d⋆ on p-forms (odd-dimensional convention),
    /// the formal L²-adjoint of d on invariant forms.
    pub fn codifferential(&self, ctx: &PositiveThreeForm, a: &PForm) -> PForm {
        let p = a.degree();
        if p == 0 {
            return PForm::zero(0);
        }
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        ctx.hodge(&self.d(&ctx.hodge(a))).scale(sign)
    }

    /// Structural validation that needs no metric: shapes, positivity of the
    /// total volume, linear independence of the 3-form basis, and d∘d = 0 on
    /// every declared invariant basis element.
    pub fn validate(&self) -> Result<(), Error> {
        let mut issues = Vec::new();
        let b3 = coeff_matrix(&self.inv3_basis, 3);
        let svals = b3.svd(false, false).singular_values;
        let smax = svals.max();
        if svals.min() <= 1e-10 * smax {
            issues.push(format!(
                "invariant 3-form basis is linearly dependent (singular values {:.3e} .. {:.3e})",
                svals.min(),
                smax
            ));
        }
        let mut check_dd = |label: &str, idx: usize, form: &PForm| {
            let da = self.d(form);
            let dda = self.d(&da);
            let scale = 1.0 + da.max_abs();
            if dda.max_abs() > MODEL_STRUCTURE_TOL * scale {
                issues.push(format!(
                    "d∘d ≠ 0 on {label} element {idx} (max entry {:.3e})",
                    dda.max_abs()
                ));
            }
        };
        for (i, f) in self.inv1_basis.iter().enumerate() {
            check_dd("inv1_basis", i, f);
        }
        for (i, f) in self.inv3_basis.iter().enumerate() {
            check_dd("inv3_basis", i, f);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::ModelInvalid { issues })
        }
    }

    /// Validation against a reference positive invariant 3-form: in addition
    /// to [`validate`](Self::validate), checks that d maps the invariant
    /// 3-form span into the span of Hodge duals of the invariant 3-forms.
    /// A corrupted structure table typically survives the metric-free checks
    /// but fails here with a large residual on a named basis element.
    pub fn validate_with_reference(&self, reference_coeffs: &[f64]) -> Result<(), Error> {
        self.validate()?;
        let ctx = metric_from_form(&self.three_form(reference_coeffs)?)?;
        let duals: Vec<PForm> = self.inv3_basis.iter().map(|b| ctx.hodge(b)).collect();
        let dual_mat = coeff_matrix(&duals, 4);
        let mut issues = Vec::new();
        for (i, b) in self.inv3_basis.iter().enumerate() {
            let db = self.d(b);
            let target = DVector::from_column_slice(db.coeffs());
            let (_, resid) = euclidean_least_squares(&dual_mat, &target);
            let rel = resid.norm() / target.norm().max(1.0);
            if rel > MODEL_CLOSURE_TOL {
                issues.push(format!(
                    "d(inv3_basis element {i}) leaves the span of dual invariant 3-forms \
                     (relative residual {rel:.3e})"
                ));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::ModelInvalid { issues })
        }
    }

    /// Torsion component norms of the invariant 3-form underlying `ctx`,
    /// read from (dΩ, d⋆Ω) by least squares. The scalar and vector
    /// components come out directly; the Λ²₁₄ and Λ³₂₇ norms are the exact
    /// least-squares residuals, since the three type components of dΩ (and
    /// the two of d⋆Ω) are mutually orthogonal. The vector component is read
    /// from both differentials independently and the two reads must agree.
    pub fn torsion_squares(&self, ctx: &PositiveThreeForm) -> Result<TorsionSquares, Error> {
        let omega = ctx.omega();
        let star_omega = ctx.star_omega();
        let d_omega = self.d(omega);
        let d_star_omega = self.d(star_omega);

        // dΩ = τ₀ ⋆Ω + 3 τ₁ ∧ Ω + ⋆τ₃, with pairwise orthogonal summands
        let mut cols4 = Vec::with_capacity(8);
        cols4.push(star_omega.clone());
        for i in 0..DIM {
            let mut e = PForm::zero(1);
            e.coeffs_mut()[i] = 1.0;
            cols4.push(e.wedge(omega).expect("1 + 3 = 4").scale(3.0));
        }
        let (x4, resid4_sq) = self.inner_least_squares(ctx, &cols4, &d_omega)?;
        let tau0 = x4[0];
        let tau1 = PForm::new(1, x4.as_slice()[1..8].to_vec()).expect("length 7");

        // d⋆Ω = 4 τ₁ ∧ ⋆Ω + τ₂ ∧ Ω, again orthogonal summands
        let mut cols5 = Vec::with_capacity(DIM);
        for i in 0..DIM {
            let mut e = PForm::zero(1);
            e.coeffs_mut()[i] = 1.0;
            cols5.push(e.wedge(star_omega).expect("1 + 4 = 5").scale(4.0));
        }
        let (x5, resid5_sq) = self.inner_least_squares(ctx, &cols5, &d_star_omega)?;
        let tau1_alt = PForm::new(1, x5.as_slice().to_vec()).expect("length 7");

        let diff = ctx.norm2(&tau1.sub(&tau1_alt)).sqrt();
        let tau1_norm = ctx.norm2(&tau1).sqrt();
        if diff > TORSION_CONSISTENCY_TOL * tau1_norm.max(1.0) {
            return Err(Error::InconsistentDifferentialData {
                residual: diff,
                tolerance: TORSION_CONSISTENCY_TOL,
            });
        }

        Ok(TorsionSquares {
            tau0,
            tau0_sq: tau0 * tau0,
            tau1_sq: ctx.norm2(&tau1),
            tau2_sq: resid5_sq.max(0.0),
            tau3_sq: resid4_sq.max(0.0),
        })
    }

    /// Least squares of `target` against `cols` in the metric of `ctx`;
    /// returns the solution and the squared norm of the residual.
    fn inner_least_squares(
        &self,
        ctx: &PositiveThreeForm,
        cols: &[PForm],
        target: &PForm,
    ) -> Result<(DVector<f64>, f64), Error> {
        let n = cols.len();
        let mut gram = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = ctx.inner(&cols[i], &cols[j])?;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            rhs[i] = ctx.inner(&cols[i], target)?;
        }
        let sol = gram
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .or_else(|| gram.lu().solve(&rhs))
            .ok_or_else(|| Error::Dimension {
                context: "singular least-squares system in torsion extraction".to_string(),
            })?;
        let mut proj = PForm::zero(target.degree());
        for (c, col) in sol.iter().zip(cols) {
            proj = proj.add_scaled(col, *c);
        }
        let resid_sq = ctx.norm2(&target.sub(&proj));
        Ok((sol, resid_sq))
    }

    /// Energy functionals at prescribed invariant coefficients.
    pub fn energies(&self, coeffs: &[f64], nu: [f64; 4]) -> Result<EnergyReport, Error> {
        let ctx = metric_from_form(&self.three_form(coeffs)?)?;
        Ok(self.energies_with_ctx(&ctx, nu)?.0)
    }

    /// Energies plus torsion squares, reusing a prebuilt metric context.
    pub fn energies_with_ctx(
        &self,
        ctx: &PositiveThreeForm,
        nu: [f64; 4],
    ) -> Result<(EnergyReport, TorsionSquares), Error> {
        check_weights(nu)?;
        let t = self.torsion_squares(ctx)?;
        let h = ctx.vol_coeff() * self.vol_total;
        let halves = [
            0.5 * t.tau0_sq * h,
            0.5 * t.tau1_sq * h,
            0.5 * t.tau2_sq * h,
            0.5 * t.tau3_sq * h,
        ];
        let d_nu = nu[0] * halves[0] + nu[1] * halves[1] + nu[2] * halves[2] + nu[3] * halves[3];
        let d_std = 7.0 * halves[0] + 84.0 * halves[1] + halves[2] + halves[3];
        let s = (21.0 / 8.0 * t.tau0_sq + 30.0 * t.tau1_sq - 0.5 * t.tau2_sq - 0.5 * t.tau3_sq) * h;
        let report = EnergyReport {
            d0: halves[0],
            d1: halves[1],
            d2: halves[2],
            d3: halves[3],
            d_nu,
            h,
            s,
            c: d_std - s,
            ct: 4.0 * d_std + 7.0 * h,
        };
        Ok((report, t))
    }

    /// L² Gram matrix of the invariant 3-form basis at the given metric,
    /// including the volume factor.
    pub fn invariant_gram(&self, ctx: &PositiveThreeForm) -> DMatrix<f64> {
        let n = self.inv3_basis.len();
        let h = ctx.vol_coeff() * self.vol_total;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = ctx
                    .inner(&self.inv3_basis[i], &self.inv3_basis[j])
                    .expect("equal degrees")
                    * h;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// The flow field Q_ν: negative L²-gradient of 𝒟_ν in invariant
    /// coefficients. Central differences with one Richardson extrapolation,
    /// then a solve against the basis Gram matrix.
    pub fn gradient_q(&self, coeffs: &[f64], nu: [f64; 4]) -> Result<Vec<f64>, Error> {
        check_weights(nu)?;
        let n = self.inv3_basis.len();
        if coeffs.len() != n {
            return Err(Error::Dimension {
                context: format!("expected {n} coefficients, got {}", coeffs.len()),
            });
        }
        let scale = 1.0 + coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let h = GRADIENT_RELATIVE_STEP * scale;
        let value = |c: &[f64]| -> Result<f64, Error> { Ok(self.energies(c, nu)?.d_nu) };
        let mut grad = DVector::zeros(n);
        let mut work = coeffs.to_vec();
        for i in 0..n {
            let base = coeffs[i];
            let mut central = |step: f64| -> Result<f64, Error> {
                work[i] = base + step;
                let plus = value(&work)?;
                work[i] = base - step;
                let minus = value(&work)?;
                work[i] = base;
                Ok((plus - minus) / (2.0 * step))
            };
            let d1 = central(h)?;
            let d2 = central(0.5 * h)?;
            grad[i] = (4.0 * d2 - d1) / 3.0;
        }
        let ctx = metric_from_form(&self.three_form(coeffs)?)?;
        let gram = self.invariant_gram(&ctx);
        let svals = gram.clone().svd(false, false).singular_values;
        let cond = svals.max() / svals.min();
        if !cond.is_finite() || cond > BASIS_CONDITION_LIMIT {
            return Err(Error::DegenerateBasis { cond });
        }
        let q = gram.lu().solve(&(-grad)).ok_or(Error::DegenerateBasis { cond })?;
        Ok(q.as_slice().to_vec())
    }

    /// Directional derivative of 𝒟_ν along the scaling direction, paired with
    /// the value (5/3)·𝒟_ν it must equal for the homogeneity degree 5/3.
    pub fn euler_check(&self, coeffs: &[f64], nu: [f64; 4]) -> Result<(f64, f64), Error> {
        let value = |eps: f64| -> Result<f64, Error> {
            let scaled: Vec<f64> = coeffs.iter().map(|c| c * (1.0 + eps)).collect();
            Ok(self.energies(&scaled, nu)?.d_nu)
        };
        let h = 1e-5;
        let central = |step: f64| -> Result<f64, Error> {
            Ok((value(step)? - value(-step)?) / (2.0 * step))
        };
        let d1 = central(h)?;
        let d2 = central(0.5 * h)?;
        let derivative = (4.0 * d2 - d1) / 3.0;
        Ok((derivative, 5.0 / 3.0 * value(0.0)?))
    }

    /// Lie derivative of an invariant form along a constant-coefficient
    /// vector field, by the Cartan formula L_X = d∘ι_X + ι_X∘d.
    pub fn lie_derivative(&self, x: &[f64; DIM], a: &PForm) -> PForm {
        let k = a.degree();
        if k == 0 {
            return PForm::zero(0);
        }
        let mut out = self.d(&a.interior(x).expect("degree ≥ 1"));
        if k <= 6 {
            out = out.add(&self.d(a).interior(x).expect("degree ≥ 1"));
        }
        out
    }

    /// The deformation map X ↦ L_X Ω taking vector fields to 3-forms.
    pub fn lambda_star(&self, x: &[f64; DIM], omega: &PForm) -> PForm {
        self.lie_derivative(x, omega)
    }

    /// The 1-form-valued adjoint construction on 3-form velocities,
    ///
    /// ```text
    /// λ_Ω(ȧ) = (δ_Ω ȧ) ⌟ Ω − ȧ ⌟ dΩ,
    /// ```
    ///
    /// whose kernel contains every velocity generated by the flow field and
    /// the scaling direction.
    pub fn lambda(&self, ctx: &PositiveThreeForm, a_dot: &PForm) -> Result<PForm, Error> {
        let delta = self.codifferential(ctx, a_dot);
        let first = ctx.form_contract(&delta, ctx.omega())?;
        let second = ctx.form_contract(a_dot, &self.d(ctx.omega()))?;
        Ok(first.sub(&second))
    }
}

/// A parametrized family of invariant 3-forms inside one model, such as a
/// two-parameter squashing family. `eval` maps parameters to coefficients in
/// the model's invariant 3-form basis.
pub struct InvariantFamily {
    pub model: HomogeneousModel,
    pub param_names: Vec<String>,
    /// Scale dividing the raw Lagrange multiplier of the constrained critical
    /// point search, fixed per family so that reported multipliers are
    /// comparable across parametrizations.
    pub lagrange_scale: f64,
    eval: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl InvariantFamily {
    pub fn new(
        model: HomogeneousModel,
        param_names: Vec<String>,
        lagrange_scale: f64,
        eval: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    ) -> Self {
        InvariantFamily {
            model,
            param_names,
            lagrange_scale,
            eval,
        }
    }

    pub fn param_dim(&self) -> usize {
        self.param_names.len()
    }

    /// Invariant-basis coefficients at the given parameters.
    pub fn coefficients(&self, params: &[f64]) -> Result<Vec<f64>, Error> {
        if params.len() != self.param_dim() {
            return Err(Error::Dimension {
                context: format!(
                    "family expects {} parameters, got {}",
                    self.param_dim(),
                    params.len()
                ),
            });
        }
        Ok((self.eval)(params))
    }
}
