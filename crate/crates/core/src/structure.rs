//! The metric, volume form, and Hodge star induced by a positive 3-form.
//!
//! A 3-form ω on R^7 induces a symmetric bilinear form B through
//! B(u,v)·e^{1…7} = (u⌟ω)∧(v⌟ω)∧ω. For the standard form Ω₀ this gives
//! B = 6·Id, so the metric is normalized as
//!
//! ```text
//! g = 6^{−2/9} · (det B)^{−1/9} · B,
//! ```
//!
//! which makes g_{Ω₀} Euclidean. ω is *positive* exactly when B is positive
//! definite; then √det g = 6^{−7/9}(det B)^{1/9} is the volume density and the
//! Hodge star on each degree is assembled from Gram matrices of g⁻¹ minors.
//!
//! Construction cost matters: flows evaluate energies thousands of times and
//! each evaluation builds one of these contexts. Minor determinants of degree
//! ≥ 4 therefore use the complementary-minor (Jacobi) identity
//! det(g⁻¹[S,T]) = (−1)^{Σ(S)+Σ(T)} det(g[T^c,S^c]) / det(g), so that no
//! determinant larger than 3×3 is ever evaluated directly.

use nalgebra::{DMatrix, DVector};

use crate::basis::{self, DIM, DIMS};
use crate::error::Error;
use crate::form::PForm;

/// Relative eigenvalue floor below which the induced bilinear form is
/// considered degenerate and the 3-form rejected as non-positive. Flows that
/// reach the boundary of the positive cone must fail loudly, not produce a
/// near-singular metric.
pub const POSITIVITY_EIGENVALUE_FLOOR: f64 = 1e-10;

/// Normalization constant 6^{−2/9} calibrating the metric so that the
/// standard form yields the Euclidean metric (B(Ω₀) = 6·Id).
fn metric_calibration() -> f64 {
    6.0_f64.powf(-2.0 / 9.0)
}

/// A Riemannian metric on R^7.
#[derive(Debug, Clone)]
pub struct Metric {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    det: f64,
}

impl Metric {
    /// Wrap a symmetric positive-definite matrix together with its inverse
    /// and determinant. Positivity is the caller's responsibility (the public
    /// constructor path is [`metric_from_form`], which checks it).
    fn new(g: DMatrix<f64>, g_inv: DMatrix<f64>, det: f64) -> Self {
        Metric { g, g_inv, det }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Columns form a g-orthonormal frame: Fᵀ g F = Id, built from the
    /// symmetric eigendecomposition g = EΛEᵀ as F = EΛ^{−1/2}.
    pub fn orthonormal_frame(&self) -> DMatrix<f64> {
        let eig = nalgebra::SymmetricEigen::new(self.g.clone());
        let scale = DVector::from_iterator(DIM, eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
        &eig.eigenvectors * DMatrix::from_diagonal(&scale)
    }

    /// Raise the index of a 1-form: the vector g⁻¹·ξ.
    pub fn sharp(&self, xi: &PForm) -> [f64; DIM] {
        assert_eq!(xi.degree(), 1, "sharp acts on 1-forms");
        let v = &self.g_inv * DVector::from_column_slice(xi.coeffs());
        let mut out = [0.0; DIM];
        out.copy_from_slice(v.as_slice());
        out
    }

    /// Lower the index of a vector: the 1-form g·v.
    pub fn flat(&self, v: &[f64; DIM]) -> PForm {
        let w = &self.g * DVector::from_column_slice(v);
        PForm::new(1, w.as_slice().to_vec()).expect("length 7")
    }
}

/// A 3-form validated as positive, bundled with its induced metric, volume
/// form, and per-degree Hodge-star and Gram tables.
#[derive(Debug, Clone)]
pub struct PositiveThreeForm {
    omega: PForm,
    metric: Metric,
    vol: PForm,
    vol_coeff: f64,
    /// star_tables[k] maps degree-k coefficients to degree-(7−k) coefficients.
    star_tables: Vec<DMatrix<f64>>,
    /// gram[k][(s,t)] = ⟨e^S, e^T⟩_g = det of the g⁻¹ minor on (S,T).
    gram: Vec<DMatrix<f64>>,
    star_omega: PForm,
}

/// Build the induced bilinear form B with B(u,v)·e^{1…7} = (u⌟ω)∧(v⌟ω)∧ω.
fn induced_bilinear(omega: &PForm) -> DMatrix<f64> {
    let contractions: Vec<PForm> = (0..DIM)
        .map(|i| omega.interior_basis(i).expect("degree 3 input"))
        .collect();
    let mut b = DMatrix::zeros(DIM, DIM);
    for i in 0..DIM {
        for j in i..DIM {
            let four = contractions[i]
                .wedge(&contractions[j])
                .expect("2 + 2 = 4");
            // coefficient of e^{1…7} in four ∧ ω, summed over complements
            let mut top = 0.0;
            for (s, &c4) in four.coeffs().iter().enumerate() {
                if c4 == 0.0 {
                    continue;
                }
                let m4 = basis::mask_of(4, s);
                let mc = !m4 & 0x7f;
                top += c4 * omega.coeffs()[basis::index_of(mc)] * basis::merge_sign(m4, mc);
            }
            b[(i, j)] = top;
            b[(j, i)] = top;
        }
    }
    b
}

/// Determinant of the minor m[rows, cols] with |rows| = |cols| ≤ 3, closed
/// form.
fn small_minor_det(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => m[(rows[0], cols[0])],
        2 => {
            m[(rows[0], cols[0])] * m[(rows[1], cols[1])]
                - m[(rows[0], cols[1])] * m[(rows[1], cols[0])]
        }
        3 => {
            let a = m[(rows[0], cols[0])];
            let b = m[(rows[0], cols[1])];
            let c = m[(rows[0], cols[2])];
            let d = m[(rows[1], cols[0])];
            let e = m[(rows[1], cols[1])];
            let f = m[(rows[1], cols[2])];
            let g = m[(rows[2], cols[0])];
            let h = m[(rows[2], cols[1])];
            let i = m[(rows[2], cols[2])];
            a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
        }
        _ => unreachable!("only minors up to 3×3 are evaluated directly"),
    }
}

/// Row/column index lists for every mask of every degree, plus the parity
/// (−1)^{Σ indices} used by the complementary-minor identity.
fn mask_rows(mask: u8) -> Vec<usize> {
    basis::mask_indices(mask).map(|i| i as usize).collect()
}

fn index_sum_parity(mask: u8) -> f64 {
    // 1-based index sum parity: Σ (i+1) over set bits i
    let s: u32 = basis::mask_indices(mask).map(|i| i as u32 + 1).sum();
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Gram matrices ⟨e^S, e^T⟩ = det(g⁻¹[S,T]) for every degree 0..=7. Degrees
/// ≤ 3 evaluate the g⁻¹ minors directly; degrees ≥ 4 use the
/// complementary-minor identity against g itself.
fn gram_tables(g: &DMatrix<f64>, g_inv: &DMatrix<f64>, det_g: f64) -> Vec<DMatrix<f64>> {
    (0..=7)
        .map(|k| {
            let masks = basis::masks(k);
            let n = DIMS[k];
            let rows: Vec<Vec<usize>> = masks.iter().map(|&m| mask_rows(m)).collect();
            if k <= 3 {
                DMatrix::from_fn(n, n, |s, t| small_minor_det(g_inv, &rows[s], &rows[t]))
            } else {
                let co_rows: Vec<Vec<usize>> = masks.iter().map(|&m| mask_rows(!m & 0x7f)).collect();
                let parity: Vec<f64> = masks.iter().map(|&m| index_sum_parity(m)).collect();
                DMatrix::from_fn(n, n, |s, t| {
                    parity[s] * parity[t] * small_minor_det(g, &co_rows[t], &co_rows[s]) / det_g
                })
            }
        })
        .collect()
}

/// Hodge-star matrices from the Gram tables: for β = Σ β_T e^T of degree k,
/// ⋆β = √det g · Σ_S sign(S, S^c) (Σ_T gram[S][T] β_T) e^{S^c}.
fn star_tables(gram: &[DMatrix<f64>], vol_coeff: f64) -> Vec<DMatrix<f64>> {
    (0..=7)
        .map(|k| {
            let masks = basis::masks(k);
            let mut table = DMatrix::zeros(DIMS[7 - k], DIMS[k]);
            for (s, &ms) in masks.iter().enumerate() {
                let complement = !ms & 0x7f;
                let sign = basis::merge_sign(ms, complement);
                let row = basis::index_of(complement);
                for t in 0..DIMS[k] {
                    table[(row, t)] += sign * vol_coeff * gram[k][(s, t)];
                }
            }
            table
        })
        .collect()
}

/// Validate positivity of a 3-form and construct its metric package.
///
/// Returns an error naming the minimal eigenvalue when the induced bilinear
/// form fails the positivity floor.
pub fn metric_from_form(omega: &PForm) -> Result<PositiveThreeForm, Error> {
    if omega.degree() != 3 {
        return Err(Error::DegreeMismatch {
            left: omega.degree(),
            right: 3,
        });
    }
    let b = induced_bilinear(omega);
    let eig = nalgebra::SymmetricEigen::new(b);
    let min_eig = eig.eigenvalues.min();
    let max_eig = eig.eigenvalues.max();
    if min_eig <= POSITIVITY_EIGENVALUE_FLOOR * max_eig || max_eig <= 0.0 {
        return Err(Error::NotPositive { min_eig, max_eig });
    }
    let det_b: f64 = eig.eigenvalues.iter().product();
    let scale = metric_calibration() * det_b.powf(-1.0 / 9.0);
    // g = scale·B and g⁻¹ from the same eigendecomposition
    let e = &eig.eigenvectors;
    let lam = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l * scale));
    let lam_inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / (l * scale)));
    let g = e * lam * e.transpose();
    let g_inv = e * lam_inv * e.transpose();
    let det_g = scale.powi(7) * det_b;
    let metric = Metric::new(g, g_inv, det_g);
    let vol_coeff = det_g.sqrt();
    let vol = PForm::new(7, vec![vol_coeff]).expect("length 1");
    let gram = gram_tables(metric.matrix(), metric.inverse(), det_g);
    let star = star_tables(&gram, vol_coeff);
    let star_omega = PForm::new(
        4,
        (&star[3] * DVector::from_column_slice(omega.coeffs()))
            .as_slice()
            .to_vec(),
    )
    .expect("length 35");
    Ok(PositiveThreeForm {
        omega: omega.clone(),
        metric,
        vol,
        vol_coeff,
        star_tables: star,
        gram,
        star_omega,
    })
}

impl PositiveThreeForm {
    pub fn omega(&self) -> &PForm {
        &self.omega
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn vol(&self) -> &PForm {
        &self.vol
    }

    /// Volume density √det g (the single coefficient of `vol`).
    pub fn vol_coeff(&self) -> f64 {
        self.vol_coeff
    }

    /// Cached ⋆ω.
    pub fn star_omega(&self) -> &PForm {
        &self.star_omega
    }

    /// Matrix of ⋆ on the given degree (maps degree k to degree 7−k).
    pub fn star_table(&self, degree: usize) -> &DMatrix<f64> {
        &self.star_tables[degree]
    }

    /// Gram matrix of basis monomials of the given degree.
    pub fn gram(&self, degree: usize) -> &DMatrix<f64> {
        &self.gram[degree]
    }

    /// Hodge star of a form of any degree.
    pub fn hodge(&self, a: &PForm) -> PForm {
        let k = a.degree();
        let out = &self.star_tables[k] * DVector::from_column_slice(a.coeffs());
        PForm::new(7 - k, out.as_slice().to_vec()).expect("table output length")
    }

    /// Induced inner product of two forms of equal degree; satisfies
    /// a ∧ ⋆b = inner(a,b)·vol.
    pub fn inner(&self, a: &PForm, b: &PForm) -> Result<f64, Error> {
        if a.degree() != b.degree() {
            return Err(Error::DegreeMismatch {
                left: a.degree(),
                right: b.degree(),
            });
        }
        let gram = &self.gram[a.degree()];
        let bv = gram * DVector::from_column_slice(b.coeffs());
        Ok(DVector::from_column_slice(a.coeffs()).dot(&bv))
    }

    /// Squared norm |a|².
    pub fn norm2(&self, a: &PForm) -> f64 {
        self.inner(a, a).expect("equal degrees")
    }

    /// Metric contraction of a degree-p form into a degree-q form (p ≤ q),
    /// defined by inner(contract(a,b), c) = inner(b, a∧c) for all c of degree
    /// q−p. For p = 1 this is interior multiplication by the sharp of a.
    pub fn form_contract(&self, a: &PForm, b: &PForm) -> Result<PForm, Error> {
        let (p, q) = (a.degree(), b.degree());
        if p > q {
            return Err(Error::DegreeMismatch { left: p, right: q });
        }
        let r = q - p;
        // W[t][s] = coefficient of (a ∧ e^S_r) on e^T_q
        let mut w = DMatrix::zeros(DIMS[q], DIMS[r]);
        for s in 0..DIMS[r] {
            let mut unit = PForm::zero(r);
            unit.coeffs_mut()[s] = 1.0;
            let col = a.wedge(&unit)?;
            for (t, &c) in col.coeffs().iter().enumerate() {
                w[(t, s)] = c;
            }
        }
        let rhs = w.transpose() * &self.gram[q] * DVector::from_column_slice(b.coeffs());
        let gram_r = self.gram[r].clone();
        let sol = gram_r.lu().solve(&rhs).ok_or_else(|| Error::Dimension {
            context: "singular Gram matrix in form contraction".to_string(),
        })?;
        PForm::new(r, sol.as_slice().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standard::standard_form;

    /// Reference Gram computation: direct determinant of the g⁻¹ minor via
    /// LU, any size.
    fn gram_direct(g_inv: &DMatrix<f64>, k: usize, s: usize, t: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let rows = mask_rows(basis::mask_of(k, s));
        let cols = mask_rows(basis::mask_of(k, t));
        DMatrix::from_fn(k, k, |a, b| g_inv[(rows[a], cols[b])]).determinant()
    }

    fn random_spd(seed: u64) -> (DMatrix<f64>, DMatrix<f64>, f64) {
        // deterministic, well-conditioned SPD matrix
        let a = DMatrix::from_fn(DIM, DIM, |i, j| {
            0.25 * (((seed as f64) + (i * 7 + j) as f64 * 1.37).sin())
        });
        let g = DMatrix::identity(DIM, DIM) + &a * a.transpose();
        let g_inv = g.clone().try_inverse().unwrap();
        let det = g.determinant();
        (g, g_inv, det)
    }

    #[test]
    fn complementary_minor_identity_matches_direct_determinants() {
        let (g, g_inv, det) = random_spd(3);
        let tables = gram_tables(&g, &g_inv, det);
        for k in 0..=7usize {
            for s in 0..DIMS[k] {
                for t in 0..DIMS[k] {
                    let direct = gram_direct(&g_inv, k, s, t);
                    assert!(
                        (tables[k][(s, t)] - direct).abs() < 1e-12 * (1.0 + direct.abs()),
                        "degree {k} entry ({s},{t}): {} vs {direct}",
                        tables[k][(s, t)]
                    );
                }
            }
        }
    }

    #[test]
    fn standard_form_gives_euclidean_metric() {
        let ctx = metric_from_form(&standard_form()).unwrap();
        let id = DMatrix::identity(7, 7);
        assert!((ctx.metric().matrix() - id).abs().max() < 1e-12);
        assert!((ctx.vol_coeff() - 1.0).abs() < 1e-12);
        assert!((ctx.inner(ctx.omega(), ctx.omega()).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_the_form_scales_metric_and_volume() {
        let omega = standard_form();
        for lambda in [0.5, 2.0, 10.0] {
            let ctx = metric_from_form(&omega.scale(lambda)).unwrap();
            let expected_g = lambda.powf(2.0 / 3.0);
            let expected_vol = lambda.powf(7.0 / 3.0);
            let id = DMatrix::identity(7, 7) * expected_g;
            assert!((ctx.metric().matrix() - id).abs().max() < 1e-12 * expected_g);
            assert!((ctx.vol_coeff() - expected_vol).abs() < 1e-12 * expected_vol);
        }
    }

    #[test]
    fn negative_form_is_rejected_with_min_eigenvalue() {
        let err = metric_from_form(&standard_form().scale(-1.0)).unwrap_err();
        match err {
            Error::NotPositive { min_eig, .. } => assert!(min_eig < 0.0),
            other => panic!("expected positivity error, got {other}"),
        }
    }

    #[test]
    fn degenerate_form_is_rejected() {
        // e^{123} alone has a rank-deficient induced bilinear form
        let err = metric_from_form(&PForm::monomial(&[1, 2, 3])).unwrap_err();
        assert!(matches!(err, Error::NotPositive { .. }));
    }

    #[test]
    fn pulled_back_form_induces_pulled_back_metric() {
        // metric of A*Ω₀ is Aᵀ·A for orientation-preserving A
        let a_mat = DMatrix::from_fn(DIM, DIM, |i, j| {
            if i == j {
                1.0
            } else {
                0.2 * (((i * 7 + j) as f64) * 0.9).cos()
            }
        });
        assert!(a_mat.determinant() > 0.0);
        let pulled = standard_form().pullback(&a_mat);
        let ctx = metric_from_form(&pulled).unwrap();
        let expected = a_mat.transpose() * &a_mat;
        assert!((ctx.metric().matrix() - expected).abs().max() < 1e-10);
    }

    #[test]
    fn hodge_square_is_identity_on_every_degree() {
        // at a non-diagonal metric, not just at Ω₀
        let a_mat = DMatrix::from_fn(DIM, DIM, |i, j| {
            if i == j {
                1.0
            } else {
                0.15 * (((i * 3 + j) as f64) * 1.7).sin()
            }
        });
        let ctx = metric_from_form(&standard_form().pullback(&a_mat)).unwrap();
        for k in 0..=7usize {
            for idx in 0..DIMS[k] {
                let mut a = PForm::zero(k);
                a.coeffs_mut()[idx] = 1.0;
                let round = ctx.hodge(&ctx.hodge(&a));
                assert!(round.sub(&a).max_abs() < 1e-10, "degree {k}");
            }
        }
    }

    #[test]
    fn vol_is_omega_wedge_star_omega_over_seven() {
        let ctx = metric_from_form(&standard_form()).unwrap();
        let w = ctx.omega().wedge(ctx.star_omega()).unwrap();
        assert!(w.sub(&ctx.vol().scale(7.0)).max_abs() < 1e-12);
    }

    #[test]
    fn inner_product_matches_wedge_against_star() {
        let a_mat = DMatrix::from_fn(DIM, DIM, |i, j| {
            if i == j {
                1.0
            } else {
                0.1 * ((i + 2 * j) as f64).sin()
            }
        });
        let ctx = metric_from_form(&standard_form().pullback(&a_mat)).unwrap();
        let a = PForm::monomial(&[1, 3]).add_scaled(&PForm::monomial(&[2, 7]), -0.8);
        let b = PForm::monomial(&[1, 3]).add_scaled(&PForm::monomial(&[4, 5]), 2.5);
        let lhs = a.wedge(&ctx.hodge(&b)).unwrap().coeffs()[0];
        let rhs = ctx.inner(&a, &b).unwrap() * ctx.vol_coeff();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn contract_is_adjoint_to_wedge() {
        let ctx = metric_from_form(&standard_form()).unwrap();
        let a = PForm::monomial(&[1])
            .add_scaled(&PForm::monomial(&[4]), -0.7)
            .add_scaled(&PForm::monomial(&[6]), 0.3);
        let b = ctx.star_omega().clone();
        let c = PForm::monomial(&[1, 2, 5]).add_scaled(&PForm::monomial(&[3, 4, 6]), 1.9);
        let lhs = ctx.inner(&ctx.form_contract(&a, &b).unwrap(), &c).unwrap();
        let rhs = ctx.inner(&b, &a.wedge(&c).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
