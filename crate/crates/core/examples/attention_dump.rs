//! Trains the attentive encoder on the trigger-word task, where the label is
//! decided by one word a few tokens away from the mention, and shows where
//! the attention lands.
//!
//!     cargo run --release --example attention_dump

use finet::encoders::EncoderKind;
use finet::synthetic::{window_position, TriggerTask};
use finet::trainer::{prepare, train, TrainConfig};

fn main() -> finet::Result<()> {
    let task = TriggerTask {
        types: 6,
        triggers_per_type: 1,
        dim: 24,
        trigger_scale: 2.0,
        full_windows: true,
        ..TriggerTask::default()
    };
    let mut data = task.generate(3000, 100);
    let test = data.split_off(400);
    let dev = data.split_off(200);
    let cfg = TrainConfig {
        encoder: EncoderKind::Attentive,
        context_window: task.context,
        hidden: 6,
        attention: 16,
        batch_size: 32,
        max_passes: 10,
        eval_every: 5,
        ..TrainConfig::default()
    };
    let out = train(&cfg, &data.instances, &dev.instances, &data.embeddings)?;
    let model = out.best.model()?;
    let held_out = prepare(
        &test.instances,
        &cfg.window_spec(),
        &out.best.labels,
        &data.embeddings,
    )?;

    let c = task.context;
    let mut hits = 0;
    for (i, (inst, input)) in test.instances.iter().zip(&held_out.inputs).enumerate() {
        let trace = model.forward(input)?.trace;
        let att = trace.attention().expect("attentive encoder");
        let (left, pos) = window_position(inst, test.triggers[i].unwrap(), c).unwrap();
        let target = if left { pos } else { c + pos };
        let top = (0..att.weights.len())
            .max_by(|&a, &b| att.weights[a].total_cmp(&att.weights[b]))
            .unwrap();
        hits += usize::from(top == target);

        if i < 3 {
            println!("{}  [{}]", inst.tokens.join(" "), inst.labels.join(","));
            let row = |w: &[f64]| {
                w.iter()
                    .map(|a| format!("{a:.2}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            println!("  left  {}", row(att.left()));
            println!("  right {}", row(att.right()));
        }
    }
    println!(
        "argmax attention on the trigger for {hits}/{} held-out instances",
        test.instances.len()
    );
    Ok(())
}
