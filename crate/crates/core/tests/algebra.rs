//! Property tests for the exterior algebra layer and for the metric package
//! induced by a positive 3-form: graded commutativity and associativity of
//! the wedge, Hodge involution, interior/exterior adjointness, and the
//! homogeneity of the induced metric and volume under rescaling the form.

use g2flow_core::basis::DIMS;
use g2flow_core::form::PForm;
use g2flow_core::random::{random_form, random_positive_form, rng_from_seed};
use g2flow_core::standard::standard_form;
use g2flow_core::structure::metric_from_form;
use proptest::prelude::*;

fn coeff_vec(degree: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, DIMS[degree])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_is_graded_commutative(
        p in 0usize..=3,
        q in 0usize..=4,
        a_raw in coeff_vec(3),
        b_raw in coeff_vec(4),
    ) {
        let a = PForm::new(p, a_raw[..DIMS[p]].to_vec()).unwrap();
        let b = PForm::new(q, b_raw[..DIMS[q]].to_vec()).unwrap();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(ab.sub(&ba.scale(sign)).max_abs() < 1e-12);
    }

    #[test]
    fn wedge_is_associative(
        p in 1usize..=2,
        q in 1usize..=2,
        r in 1usize..=2,
        a_raw in coeff_vec(2),
        b_raw in coeff_vec(2),
        c_raw in coeff_vec(2),
    ) {
        let a = PForm::new(p, a_raw[..DIMS[p]].to_vec()).unwrap();
        let b = PForm::new(q, b_raw[..DIMS[q]].to_vec()).unwrap();
        let c = PForm::new(r, c_raw[..DIMS[r]].to_vec()).unwrap();
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert!(left.sub(&right).max_abs() < 1e-12);
    }

    #[test]
    fn interior_is_an_antiderivation(
        a_raw in coeff_vec(2),
        b_raw in coeff_vec(3),
        v in prop::array::uniform7(-1.0f64..1.0),
    ) {
        // v⌟(a∧b) = (v⌟a)∧b + (−1)^p a∧(v⌟b) for a of degree p
        let a = PForm::new(2, a_raw).unwrap();
        let b = PForm::new(3, b_raw).unwrap();
        let lhs = a.wedge(&b).unwrap().interior(&v).unwrap();
        let rhs = a
            .interior(&v)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(&a.wedge(&b.interior(&v).unwrap()).unwrap());
        prop_assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn hodge_star_is_an_involution_on_odd_dimension(
        seed in any::<u64>(),
        degree in 0usize..=7,
    ) {
        let mut rng = rng_from_seed(seed);
        let (_, ctx) = random_positive_form(&mut rng);
        let a = random_form(&mut rng, degree, 1.0);
        let twice = ctx.hodge(&ctx.hodge(&a));
        prop_assert!(twice.sub(&a).max_abs() < 1e-9 * (1.0 + a.max_abs()));
    }

    #[test]
    fn hodge_star_is_an_isometry(seed in any::<u64>(), degree in 0usize..=7) {
        let mut rng = rng_from_seed(seed);
        let (_, ctx) = random_positive_form(&mut rng);
        let a = random_form(&mut rng, degree, 1.0);
        let n = ctx.norm2(&a);
        let ns = ctx.norm2(&ctx.hodge(&a));
        prop_assert!((n - ns).abs() < 1e-9 * (1.0 + n.abs()));
    }

    #[test]
    fn wedge_with_star_computes_the_inner_product(
        seed in any::<u64>(),
        degree in 1usize..=6,
    ) {
        // a ∧ ⋆b = ⟨a,b⟩ vol for same-degree forms
        let mut rng = rng_from_seed(seed);
        let (_, ctx) = random_positive_form(&mut rng);
        let a = random_form(&mut rng, degree, 1.0);
        let b = random_form(&mut rng, degree, 1.0);
        let pairing = a.wedge(&ctx.hodge(&b)).unwrap().coeffs()[0];
        let inner = ctx.inner(&a, &b).unwrap() * ctx.vol_coeff();
        prop_assert!((pairing - inner).abs() < 1e-9 * (1.0 + inner.abs()));
    }

    #[test]
    fn metric_and_volume_scale_with_fixed_exponents(
        seed in any::<u64>(),
        lambda in 0.25f64..4.0,
    ) {
        let mut rng = rng_from_seed(seed);
        let (omega, ctx) = random_positive_form(&mut rng);
        let scaled = metric_from_form(&omega.scale(lambda)).unwrap();
        let factor = lambda.powf(2.0 / 3.0);
        let g = ctx.metric().matrix();
        let gs = scaled.metric().matrix();
        for i in 0..7 {
            for j in 0..7 {
                prop_assert!(
                    (gs[(i, j)] - factor * g[(i, j)]).abs()
                        < 1e-9 * (1.0 + factor * g[(i, j)].abs())
                );
            }
        }
        let vol_factor = lambda.powf(7.0 / 3.0);
        prop_assert!(
            (scaled.vol_coeff() - vol_factor * ctx.vol_coeff()).abs()
                < 1e-9 * vol_factor * ctx.vol_coeff()
        );
    }

    #[test]
    fn sharp_and_flat_are_mutually_inverse(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let (_, ctx) = random_positive_form(&mut rng);
        let xi = random_form(&mut rng, 1, 1.0);
        let back = ctx.metric().flat(&ctx.metric().sharp(&xi));
        prop_assert!(back.sub(&xi).max_abs() < 1e-9);
    }
}

#[test]
fn standard_form_induces_the_euclidean_package() {
    let ctx = metric_from_form(&standard_form()).unwrap();
    let g = ctx.metric().matrix();
    for i in 0..7 {
        for j in 0..7 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((g[(i, j)] - expect).abs() < 1e-14);
        }
    }
    assert!((ctx.vol_coeff() - 1.0).abs() < 1e-14);
    assert!((ctx.norm2(ctx.omega()) - 7.0).abs() < 1e-12);
    assert!((ctx.norm2(ctx.star_omega()) - 7.0).abs() < 1e-12);
}
