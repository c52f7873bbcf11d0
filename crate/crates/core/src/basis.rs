//! Multi-index bookkeeping for the exterior algebra of R^7.
//!
//! A basis monomial e^{i1...ik} with strictly increasing indices is stored as a
//! 7-bit mask (bit j set means the 1-form e^{j+1} participates). Public APIs
//! index coefficients by the position of the monomial in the lexicographic
//! order of its increasing index tuple, e.g. for degree 2:
//! (1,2), (1,3), ..., (1,7), (2,3), ..., (6,7).
//!
//! Everything here is exact integer combinatorics; floating point enters only
//! in the form/metric layers built on top.

use std::sync::LazyLock;

pub const DIM: usize = 7;

/// Binomial coefficients C(7, k) for k = 0..=7.
pub const DIMS: [usize; 8] = [1, 7, 21, 35, 35, 21, 7, 1];

/// `MASKS[k][i]` is the bitmask of the i-th degree-k basis monomial in
/// lexicographic tuple order; `INDEX[mask]` recovers i from the mask.
struct Tables {
    masks: [Vec<u8>; 8],
    index: [usize; 128],
}

static TABLES: LazyLock<Tables> = LazyLock::new(|| {
    let mut masks: [Vec<u8>; 8] = Default::default();
    let mut by_degree: Vec<Vec<Vec<u8>>> = vec![Vec::new(); 8];
    // enumerate increasing tuples in lex order by recursion
    fn rec(start: u8, remaining: usize, acc: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if remaining == 0 {
            out.push(acc.clone());
            return;
        }
        for i in start..DIM as u8 {
            acc.push(i);
            rec(i + 1, remaining - 1, acc, out);
            acc.pop();
        }
    }
    for k in 0..=7 {
        let mut tuples = Vec::new();
        rec(0, k, &mut Vec::new(), &mut tuples);
        by_degree[k] = tuples;
    }
    let mut index = [usize::MAX; 128];
    for k in 0..=7 {
        masks[k] = by_degree[k]
            .iter()
            .map(|t| t.iter().fold(0u8, |m, &i| m | (1 << i)))
            .collect();
        for (i, &m) in masks[k].iter().enumerate() {
            index[m as usize] = i;
        }
    }
    Tables { masks, index }
});

/// Bitmask of the i-th basis monomial of the given degree.
pub fn mask_of(degree: usize, i: usize) -> u8 {
    TABLES.masks[degree][i]
}

/// Position of a monomial mask within its degree's lexicographic order.
pub fn index_of(mask: u8) -> usize {
    TABLES.index[mask as usize]
}

/// All masks of one degree in coefficient order.
pub fn masks(degree: usize) -> &'static [u8] {
    &TABLES.masks[degree]
}

/// Sign (-1)^inversions of merging two disjoint ordered index sets, i.e. the
/// sign of sorting the concatenation (a_1..a_p, b_1..b_q). Zero overlap is the
/// caller's responsibility.
pub fn merge_sign(a: u8, b: u8) -> f64 {
    let mut inversions = 0u32;
    let mut bits = a;
    while bits != 0 {
        let i = bits.trailing_zeros();
        inversions += (b & ((1u8 << i) - 1)).count_ones();
        bits &= bits - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign (-1)^pos of extracting index `i` from the ordered set `mask`,
/// where pos counts the members of `mask` smaller than `i`.
pub fn extract_sign(mask: u8, i: u8) -> f64 {
    if (mask & ((1u8 << i) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Indices (0-based) contained in a mask, in increasing order.
pub fn mask_indices(mask: u8) -> impl Iterator<Item = u8> {
    (0..DIM as u8).filter(move |i| mask & (1 << i) != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_match_tables() {
        for k in 0..=7 {
            assert_eq!(masks(k).len(), DIMS[k]);
        }
    }

    #[test]
    fn degree_two_lex_order() {
        // (1,2), (1,3), ..., (1,7), (2,3): tuple-lex, not mask-numeric, order
        assert_eq!(mask_of(2, 0), 0b0000011);
        assert_eq!(mask_of(2, 1), 0b0000101);
        assert_eq!(mask_of(2, 5), 0b1000001);
        assert_eq!(mask_of(2, 6), 0b0000110);
        assert_eq!(index_of(0b0000110), 6);
    }

    #[test]
    fn merge_sign_antisymmetry() {
        // e2 ^ e1 = -e^{12}
        assert_eq!(merge_sign(0b10, 0b01), -1.0);
        assert_eq!(merge_sign(0b01, 0b10), 1.0);
        // e3 ^ e^{12} = +e^{123}
        assert_eq!(merge_sign(0b100, 0b011), 1.0);
    }

    #[test]
    fn extract_sign_positions() {
        // pulling e1 out of e^{123} costs nothing, e2 costs one transposition
        assert_eq!(extract_sign(0b111, 0), 1.0);
        assert_eq!(extract_sign(0b111, 1), -1.0);
        assert_eq!(extract_sign(0b111, 2), 1.0);
    }
}
