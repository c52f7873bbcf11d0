//! The shipped model files are byte-identical serializations of the built-in
//! constructors, load back into working models, and satisfy the adjointness
//! that the energy computations rely on.

use std::fs;
use std::path::PathBuf;

use g2flow_core::homogeneous::HomogeneousModel;
use g2flow_core::metric_from_form;
use g2flow_core::models::{flat7, squashed_family, squashed_s7};

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn pretty(m: &HomogeneousModel) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("serializable model");
    s.push('\n');
    s
}

#[test]
fn model_files_match_builders() {
    for (name, model) in [("flat7", flat7()), ("squashed_s7", squashed_s7())] {
        let path = models_dir().join(format!("{name}.json"));
        let expected = pretty(&model);
        if std::env::var_os("REGEN_MODEL_FILES").is_some() {
            fs::create_dir_all(models_dir()).expect("create models directory");
            fs::write(&path, &expected).expect("write model file");
        }
        let on_disk = fs::read_to_string(&path).unwrap_or_else(|e| {
            panic!(
                "{}: {e}; regenerate with REGEN_MODEL_FILES=1 cargo test",
                path.display()
            )
        });
        assert_eq!(on_disk, expected, "{name}.json drifted from its builder");
    }
}

#[test]
fn model_files_round_trip_and_validate() {
    for name in ["flat7", "squashed_s7"] {
        let text = fs::read_to_string(models_dir().join(format!("{name}.json")))
            .expect("model file present");
        let model: HomogeneousModel = serde_json::from_str(&text).expect("well-formed model");
        model.validate().expect("valid model");
        let again = serde_json::to_string_pretty(&model).expect("serializable");
        assert_eq!(text.trim_end(), again, "round trip must be the identity");
    }
}

#[test]
fn codifferential_is_adjoint_to_d_on_the_invariant_complex() {
    // ⟨dα, β⟩ = ⟨α, δβ⟩ pointwise for invariant forms: the integrands of the
    // compact integration-by-parts identity are constants here.
    let fam = squashed_family();
    for (a, b) in [(1.0, 1.0), (1.3, 0.8), (0.7, 1.6)] {
        let coeffs = fam.coefficients(&[a, b]).unwrap();
        let ctx = metric_from_form(&fam.model.three_form(&coeffs).unwrap()).unwrap();
        for alpha in fam.model.inv3_basis() {
            for gamma in fam.model.inv3_basis() {
                let beta = fam.model.d(gamma);
                let lhs = ctx.inner(&fam.model.d(alpha), &beta).unwrap();
                let rhs = ctx
                    .inner(alpha, &fam.model.codifferential(&ctx, &beta))
                    .unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()).max(1.0),
                    "adjointness failed at ({a}, {b}): {lhs} vs {rhs}"
                );
            }
        }
    }
}
