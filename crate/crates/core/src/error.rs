//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid form degree {degree}; expected 0..=7")]
    InvalidDegree { degree: usize },

    #[error("degree-{degree} form needs {expected} coefficients, got {got}")]
    CoefficientLength {
        degree: usize,
        expected: usize,
        got: usize,
    },

    #[error("wedge degree overflow: {p} + {q} > 7")]
    DegreeOverflow { p: usize, q: usize },

    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    #[error(
        "not a positive 3-form: the induced bilinear form has minimal eigenvalue {min_eig:.6e} \
         (largest {max_eig:.6e})"
    )]
    NotPositive { min_eig: f64, max_eig: f64 },

    #[error(
        "inconsistent differential data: torsion reconstruction residual {residual:.6e} \
         exceeds {tolerance:.1e} relative"
    )]
    InconsistentDifferentialData { residual: f64, tolerance: f64 },

    #[error("degenerate invariant basis: Gram matrix condition number {cond:.6e} exceeds 1e12")]
    DegenerateBasis { cond: f64 },

    #[error("identity violation in {name}: {lhs:.12e} vs {rhs:.12e} (relative error {rel:.3e})")]
    IdentityViolation {
        name: String,
        lhs: f64,
        rhs: f64,
        rel: f64,
    },

    #[error("model validation failed:\n{}", issues.join("\n"))]
    ModelInvalid { issues: Vec<String> },

    #[error("energy weights must be positive, got ({0}, {1}, {2}, {3})", nu[0], nu[1], nu[2], nu[3])]
    InvalidWeights { nu: [f64; 4] },

    #[error("critical-point search did not converge within {iterations} iterations (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("domain error: {context}")]
    Domain { context: String },

    #[error(
        "basepoint is not nearly parallel: |dΩ − τ₀⋆Ω| residual {d_omega_residual:.3e}, \
         |d⋆Ω| = {d_star_omega_norm:.3e} (both must be ≤ 1e-9 relative)"
    )]
    BasepointNotNearlyParallel {
        d_omega_residual: f64,
        d_star_omega_norm: f64,
    },

    #[error("dimension mismatch: {context}")]
    Dimension { context: String },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
