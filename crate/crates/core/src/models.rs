//! Built-in homogeneous models.
//!
//! * `flat7`: the flat 7-torus quotient — every constant form is invariant,
//!   the differential vanishes identically, and the standard 3-form is a
//!   torsion-free point.
//! * `squashed_s7`: the 7-sphere as Sp(2)/Sp(1) with its two-parameter
//!   family of squashed metrics. The coframe splits into a 4-dimensional
//!   block e¹…e⁴ and a 3-dimensional block f¹…f³; writing
//!
//!   ```text
//!   ω₁ = e¹² + e³⁴,   ω₂ = e¹³ − e²⁴,   ω₃ = e¹⁴ + e²³,
//!   ```
//!
//!   the invariant 3-forms are spanned by Ω₁ = f¹²³ and
//!   Ω₂ = f¹∧ω₁ + f²∧ω₂ + f³∧ω₃, and the positive forms
//!
//!   ```text
//!   Ω(a,b) = a³ Ω₁ − a b² Ω₂,    a, b > 0,
//!   ```
//!
//!   induce the metric diag(b²,b²,b²,b²,a²,a²,a²) with volume density a³b⁴.
//!   The structure table is normalized so that, with
//!   ψ = f²³∧ω₁ − f¹³∧ω₂ + f¹²∧ω₃,
//!
//!   ```text
//!   dΩ₁ = 2ψ,   dΩ₂ = 12 e¹²³⁴ − 10ψ,   dψ = 0,   d e¹²³⁴ = 0,
//!   ```
//!
//!   all exactly in floating point (the table entries are 5/2 and 2).

use crate::form::PForm;
use crate::homogeneous::{HomogeneousModel, InvariantFamily};
use crate::standard::standard_form;

fn monomial_basis(degree: usize, len: usize) -> Vec<PForm> {
    (0..len)
        .map(|i| {
            let mut f = PForm::zero(degree);
            f.coeffs_mut()[i] = 1.0;
            f
        })
        .collect()
}

/// Flat torus model: zero structure table, all constant forms invariant.
pub fn flat7() -> HomogeneousModel {
    HomogeneousModel::new(
        (1..=7).map(|i| format!("e{i}")).collect(),
        vec![PForm::zero(2); 7],
        1.0,
        monomial_basis(3, 35),
        monomial_basis(1, 7),
    )
    .expect("flat model data is well-formed")
}

/// One-parameter family s ↦ s·Ω₀ through the torsion-free point of `flat7`.
pub fn flat7_family() -> InvariantFamily {
    InvariantFamily::new(
        flat7(),
        vec!["s".to_string()],
        1.0,
        Box::new(|p: &[f64]| standard_form().coeffs().iter().map(|c| c * p[0]).collect()),
    )
}

fn two_form(terms: &[(f64, [usize; 2])]) -> PForm {
    let mut f = PForm::zero(2);
    for &(c, idx) in terms {
        f = f.add_scaled(&PForm::monomial(&idx), c);
    }
    f
}

fn three_form(terms: &[(f64, [usize; 3])]) -> PForm {
    let mut f = PForm::zero(3);
    for &(c, idx) in terms {
        f = f.add_scaled(&PForm::monomial(&idx), c);
    }
    f
}

/// Squashed 7-sphere model. Coframe order: e¹,e²,e³,e⁴ (4-block), then
/// f¹,f²,f³ (3-block) in slots 5–7.
pub fn squashed_s7() -> HomogeneousModel {
    let table = vec![
        two_form(&[(2.5, [2, 5]), (2.5, [3, 6]), (2.5, [4, 7])]),
        two_form(&[(-2.5, [1, 5]), (2.5, [3, 7]), (-2.5, [4, 6])]),
        two_form(&[(-2.5, [1, 6]), (-2.5, [2, 7]), (2.5, [4, 5])]),
        two_form(&[(-2.5, [1, 7]), (2.5, [2, 6]), (-2.5, [3, 5])]),
        two_form(&[(2.0, [1, 2]), (2.0, [3, 4])]),
        two_form(&[(2.0, [1, 3]), (-2.0, [2, 4])]),
        two_form(&[(2.0, [1, 4]), (2.0, [2, 3])]),
    ];
    let names = ["e1", "e2", "e3", "e4", "f1", "f2", "f3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    HomogeneousModel::new(
        names,
        table,
        1.0,
        vec![squashed_omega1(), squashed_omega2()],
        vec![],
    )
    .expect("squashed model data is well-formed")
}

/// Ω₁ = f¹∧f²∧f³.
pub fn squashed_omega1() -> PForm {
    PForm::monomial(&[5, 6, 7])
}

/// Ω₂ = f¹∧ω₁ + f²∧ω₂ + f³∧ω₃.
pub fn squashed_omega2() -> PForm {
    three_form(&[
        (1.0, [1, 2, 5]),
        (1.0, [3, 4, 5]),
        (1.0, [1, 3, 6]),
        (-1.0, [2, 4, 6]),
        (1.0, [1, 4, 7]),
        (1.0, [2, 3, 7]),
    ])
}

/// ψ = f²³∧ω₁ − f¹³∧ω₂ + f¹²∧ω₃.
pub fn squashed_psi() -> PForm {
    let mut f = PForm::zero(4);
    for (c, idx) in [
        (1.0, [1, 2, 6, 7]),
        (1.0, [3, 4, 6, 7]),
        (-1.0, [1, 3, 5, 7]),
        (1.0, [2, 4, 5, 7]),
        (1.0, [1, 4, 5, 6]),
        (1.0, [2, 3, 5, 6]),
    ] {
        f = f.add_scaled(&PForm::monomial(&idx), c);
    }
    f
}

/// Two-parameter squashing family (a,b) ↦ a³Ω₁ − ab²Ω₂.
pub fn squashed_family() -> InvariantFamily {
    InvariantFamily::new(
        squashed_s7(),
        vec!["a".to_string(), "b".to_string()],
        60.0,
        Box::new(|p: &[f64]| {
            let (a, b) = (p[0], p[1]);
            vec![a.powi(3), -a * b * b]
        }),
    )
}

/// Look up a built-in model by name.
pub fn builtin(name: &str) -> Option<HomogeneousModel> {
    match name {
        "flat7" => Some(flat7()),
        "squashed_s7" => Some(squashed_s7()),
        _ => None,
    }
}

/// Look up the parameter family attached to a built-in model, if any.
pub fn builtin_family(name: &str) -> Option<InvariantFamily> {
    match name {
        "flat7" => Some(flat7_family()),
        "squashed_s7" => Some(squashed_family()),
        _ => None,
    }
}
