//! Runs a fresh model with each context encoder over one instance and
//! prints the feature sizes and type probabilities.

use finet::corpus::{build_label_index, window, EmbeddedInstance, WindowSpec};
use finet::encoders::EncoderKind;
use finet::model::{Model, ModelDims};
use finet::numeric::Rng;
use finet::synthetic::separable;

fn main() -> finet::Result<()> {
    let data = separable(8, 10, 0);
    let labels = build_label_index(&data.instances)?;
    let inst = &data.instances[1];
    let (w, _) = window(inst, &WindowSpec::new(4, 2), &labels)?;
    let input = EmbeddedInstance::new(&w, &data.embeddings);
    println!("tokens {:?}, mention {:?}", inst.tokens, inst.mention());

    let dims = ModelDims {
        embedding: data.embeddings.dim(),
        hidden: 6,
        attention: 3,
        types: labels.len(),
    };
    for kind in EncoderKind::ALL {
        let model = Model::init(kind, dims, &mut Rng::new(1))?;
        let out = model.forward(&input)?;
        let decided = model.predict(&input, 0.5)?.decided;
        println!(
            "{:>9}: v_m {} + v_c {} -> p = {:.3?} -> {:?}",
            kind.as_str(),
            out.trace.mention.len(),
            out.trace.context.len(),
            out.proba,
            labels.names(&decided)
        );
    }
    Ok(())
}
