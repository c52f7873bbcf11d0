//! The standard positive 3-form on R^7 and the reference orientation.

use crate::form::PForm;

/// The standard positive 3-form
/// Ω₀ = e^{123} + e^{145} + e^{167} + e^{246} − e^{257} − e^{347} − e^{356}.
///
/// Its induced metric is Euclidean and its stabilizer inside GL(7,R) is the
/// compact exceptional group G₂. All identity tests are calibrated against
/// this convention; any other convention would work as long as the whole
/// suite is re-verified.
pub fn standard_form() -> PForm {
    let mut omega = PForm::zero(3);
    let terms: [(f64, [usize; 3]); 7] = [
        (1.0, [1, 2, 3]),
        (1.0, [1, 4, 5]),
        (1.0, [1, 6, 7]),
        (1.0, [2, 4, 6]),
        (-1.0, [2, 5, 7]),
        (-1.0, [3, 4, 7]),
        (-1.0, [3, 5, 6]),
    ];
    for (sign, idx) in terms {
        omega = omega.add_scaled(&PForm::monomial(&idx), sign);
    }
    omega
}

/// The reference volume form e^{1…7} fixing the orientation.
pub fn reference_volume() -> PForm {
    PForm::monomial(&[1, 2, 3, 4, 5, 6, 7])
}
