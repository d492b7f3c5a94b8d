//! Compares backpropagated gradients with central finite differences for
//! every encoder.

use finet::classifier;
use finet::corpus::EmbeddedInstance;
use finet::encoders::EncoderKind;
use finet::model::{forward, init_params, loss_and_grad, ModelDims};
use finet::numeric::{finite_diff_check, Rng, Tensor};

fn main() -> finet::Result<()> {
    let dims = ModelDims {
        embedding: 6,
        hidden: 4,
        attention: 3,
        types: 4,
    };
    let mut rng = Rng::new(0);
    let mut mat = |rows: usize| {
        Tensor::new(
            vec![rows, 6],
            (0..rows * 6).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        )
    };
    let input = EmbeddedInstance {
        left: mat(3)?,
        mention: mat(2)?,
        right: mat(3)?,
        gold: vec![1.0, 0.0, 0.0, 1.0],
    };

    for kind in EncoderKind::ALL {
        let params = init_params(kind, &dims, &mut Rng::new(7))?;
        let (loss, grads) = loss_and_grad(kind, &params, &input, None)?;
        let report = finite_diff_check(
            |p| Ok(classifier::loss(&forward(kind, p, &input, None)?.proba, &input.gold).value),
            &params,
            &grads,
            1e-5,
        )?;
        println!(
            "{:>9}: loss {:.5}, {} coordinates, max relative error {:.2e} at {:?}",
            kind.as_str(),
            loss.value,
            report.coordinates,
            report.max_rel_error,
            report.worst
        );
    }
    Ok(())
}
