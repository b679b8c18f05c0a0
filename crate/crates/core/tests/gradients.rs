mod common;

use common::{lr_gradient_worst, pooled_gradient_worst, span_gradient_worst};
use propdetect::span_heads::Variant;

#[test]
fn logistic_regression_gradient() {
    let worst = lr_gradient_worst(100, 5);
    assert!(worst < 1e-4, "relative error {worst:e}");
}

#[test]
fn pooled_classifier_gradient() {
    let worst = pooled_gradient_worst(100, 6);
    assert!(worst < 1e-4, "relative error {worst:e}");
}

#[test]
fn span_head_gradients() {
    for variant in Variant::ALL {
        let worst = span_gradient_worst(variant, 100, 11);
        assert!(worst < 1e-4, "{variant}: relative error {worst:e}");
    }
}
