//! Exterior forms on R^7 as dense coefficient vectors.
//!
//! A degree-p form is a vector of C(7,p) coefficients over the basis monomials
//! e^{i1...ip}, i1 < ... < ip, in lexicographic order (see [`crate::basis`]).
//! All products and contractions here are metric-free; metric-dependent
//! operations (Hodge star, inner products, adjoint contractions) live in
//! [`crate::structure`].

use serde::{Deserialize, Serialize};

use crate::basis::{self, DIM, DIMS};
use crate::error::Error;

/// A homogeneous exterior form of fixed degree.
///
/// Serializes as `{"degree": p, "coeffs": [...]}` with the coefficient order
/// documented in [`crate::basis`]; deserialization re-validates the length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPForm", into = "RawPForm")]
pub struct PForm {
    degree: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPForm {
    degree: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawPForm> for PForm {
    type Error = String;
    fn try_from(raw: RawPForm) -> Result<Self, String> {
        PForm::new(raw.degree, raw.coeffs).map_err(|e| e.to_string())
    }
}

impl From<PForm> for RawPForm {
    fn from(f: PForm) -> RawPForm {
        RawPForm {
            degree: f.degree,
            coeffs: f.coeffs,
        }
    }
}

impl PForm {
    /// Form with the given coefficient vector; the length must be C(7, degree).
    pub fn new(degree: usize, coeffs: Vec<f64>) -> Result<Self, Error> {
        if degree > 7 {
            return Err(Error::InvalidDegree { degree });
        }
        if coeffs.len() != DIMS[degree] {
            return Err(Error::CoefficientLength {
                degree,
                expected: DIMS[degree],
                got: coeffs.len(),
            });
        }
        Ok(PForm { degree, coeffs })
    }

    /// The zero form of a degree.
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= 7, "degree out of range");
        PForm {
            degree,
            coeffs: vec![0.0; DIMS[degree]],
        }
    }

    /// Degree-0 form (scalar).
    pub fn scalar(value: f64) -> Self {
        PForm {
            degree: 0,
            coeffs: vec![value],
        }
    }

    /// Basis monomial e^{i1...ip} from 1-based, strictly increasing indices.
    pub fn monomial(indices: &[usize]) -> Self {
        let mut mask = 0u8;
        for &i in indices {
            assert!((1..=7).contains(&i), "indices are 1-based in 1..=7");
            assert_eq!(mask & (1 << (i - 1)), 0, "repeated index");
            mask |= 1 << (i - 1);
        }
        assert!(
            indices.windows(2).all(|w| w[0] < w[1]),
            "indices must increase"
        );
        let mut f = PForm::zero(indices.len());
        f.coeffs[basis::index_of(mask)] = 1.0;
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of e^{i1...ip} for 1-based indices in any order; the sign
    /// of the permutation sorting them is applied. Repeated indices give 0.
    pub fn coefficient(&self, indices: &[usize]) -> f64 {
        assert_eq!(indices.len(), self.degree, "index count must match degree");
        let mut idx: Vec<usize> = indices.to_vec();
        let mut sign = 1.0;
        // insertion sort, tracking transpositions
        for i in 1..idx.len() {
            let mut j = i;
            while j > 0 && idx[j - 1] > idx[j] {
                idx.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return 0.0;
        }
        let mask = idx.iter().fold(0u8, |m, &i| m | (1 << (i - 1)));
        sign * self.coeffs[basis::index_of(mask)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Largest absolute coefficient (l-infinity norm of the raw vector).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        PForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// self + s·other (degrees must match).
    pub fn add_scaled(&self, other: &PForm, s: f64) -> Self {
        assert_eq!(self.degree, other.degree, "degree mismatch in addition");
        PForm {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &PForm) -> Self {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &PForm) -> Self {
        self.add_scaled(other, -1.0)
    }

    /// Exterior product. Degrees must satisfy p + q ≤ 7.
    pub fn wedge(&self, other: &PForm) -> Result<PForm, Error> {
        let (p, q) = (self.degree, other.degree);
        if p + q > 7 {
            return Err(Error::DegreeOverflow { p, q });
        }
        let mut out = PForm::zero(p + q);
        for (ia, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            let ma = basis::mask_of(p, ia);
            for (ib, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                let mb = basis::mask_of(q, ib);
                if ma & mb != 0 {
                    continue;
                }
                let sign = basis::merge_sign(ma, mb);
                out.coeffs[basis::index_of(ma | mb)] += sign * ca * cb;
            }
        }
        Ok(out)
    }

    /// Interior product v ⌟ a with a coordinate vector v = Σ vᵢ eᵢ
    /// (contraction on the first slot). Degree-0 input is rejected.
    pub fn interior(&self, v: &[f64; DIM]) -> Result<PForm, Error> {
        if self.degree == 0 {
            return Err(Error::InvalidDegree { degree: 0 });
        }
        let mut out = PForm::zero(self.degree - 1);
        for (ia, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            let ma = basis::mask_of(self.degree, ia);
            for i in basis::mask_indices(ma) {
                let vi = v[i as usize];
                if vi == 0.0 {
                    continue;
                }
                let sign = basis::extract_sign(ma, i);
                out.coeffs[basis::index_of(ma & !(1 << i))] += sign * vi * ca;
            }
        }
        Ok(out)
    }

    /// Interior product with the basis vector e_{i+1} (0-based i).
    pub fn interior_basis(&self, i: usize) -> Result<PForm, Error> {
        let mut v = [0.0; DIM];
        v[i] = 1.0;
        self.interior(&v)
    }

    /// Derivation action of a gl(7) endomorphism: A·a = Σᵢⱼ Aᵢⱼ eⁱ∧(eⱼ⌟a).
    /// The identity matrix acts as multiplication by the degree, and for
    /// A = v⊗w this is v♭∧(w⌟a) with Euclidean index placement.
    pub fn endo_apply(&self, a_mat: &nalgebra::DMatrix<f64>) -> PForm {
        assert_eq!((a_mat.nrows(), a_mat.ncols()), (DIM, DIM));
        let p = self.degree;
        let mut out = PForm::zero(p);
        if p == 0 {
            return out;
        }
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mask = basis::mask_of(p, idx);
            // substitute e^j -> Σ_i A_ij e^i in one slot at a time
            for j in basis::mask_indices(mask) {
                let without = mask & !(1 << j);
                let sj = basis::extract_sign(mask, j);
                for i in 0..DIM as u8 {
                    let aij = a_mat[(i as usize, j as usize)];
                    if aij == 0.0 || without & (1 << i) != 0 {
                        continue;
                    }
                    let si = basis::merge_sign(1 << i, without);
                    out.coeffs[basis::index_of(without | (1 << i))] += sj * si * aij * c;
                }
            }
        }
        out
    }

    /// Pullback A*a along a linear map, (A*a)(v₁,…,vₚ) = a(Av₁,…,Avₚ);
    /// coefficientwise (A*a)_T = Σ_S a_S · det A[S,T] over row set S, column
    /// set T.
    pub fn pullback(&self, a_mat: &nalgebra::DMatrix<f64>) -> PForm {
        assert_eq!((a_mat.nrows(), a_mat.ncols()), (DIM, DIM));
        let p = self.degree;
        let mut out = PForm::zero(p);
        if p == 0 {
            out.coeffs[0] = self.coeffs[0];
            return out;
        }
        let masks = basis::masks(p);
        for (it, &mt) in masks.iter().enumerate() {
            let cols: Vec<usize> = basis::mask_indices(mt).map(|i| i as usize).collect();
            let mut acc = 0.0;
            for (is, &cs) in self.coeffs.iter().enumerate() {
                if cs == 0.0 {
                    continue;
                }
                let rows: Vec<usize> = basis::mask_indices(masks[is]).map(|i| i as usize).collect();
                let minor = nalgebra::DMatrix::from_fn(p, p, |r, c| a_mat[(rows[r], cols[c])]);
                acc += cs * minor.determinant();
            }
            out.coeffs[it] = acc;
        }
        out
    }
}
