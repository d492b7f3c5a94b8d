//! Trains all three encoders on a small generated corpus and compares them
//! on held-out data.
//!
//!     cargo run --release --example train_synthetic

use finet::corpus::build_label_index;
use finet::encoders::EncoderKind;
use finet::synthetic::separable;
use finet::trainer::{evaluate_model, prepare, train, TrainConfig};

fn main() -> finet::Result<()> {
    let mut data = separable(600, 24, 11);
    let test = data.split_off(100);
    let dev = data.split_off(100);
    let labels = build_label_index(&data.instances)?;

    for kind in EncoderKind::ALL {
        let cfg = TrainConfig {
            encoder: kind,
            context_window: 8,
            mention_window: 2,
            hidden: 16,
            attention: 8,
            batch_size: 32,
            max_passes: 20,
            eval_every: 5,
            ..TrainConfig::default()
        };
        let out = train(&cfg, &data.instances, &dev.instances, &data.embeddings)?;
        for row in &out.history {
            println!(
                "{:>9} pass {:>2}: loss {:.4}  dev strict {:.3}  micro {:.3}",
                kind.as_str(),
                row.pass,
                row.loss,
                row.strict,
                row.loose_micro
            );
        }
        let held_out = prepare(
            &test.instances,
            &cfg.window_spec(),
            &labels,
            &data.embeddings,
        )?;
        let report = evaluate_model(&out.best.model()?, &held_out, cfg.threshold)?;
        println!(
            "{:>9} best pass {} -> test\n{report}",
            kind.as_str(),
            out.best.passes
        );
    }
    Ok(())
}
