//! Saves a trained model, reads it back and confirms predictions and bytes
//! survive the trip.

use std::io::Cursor;

use finet::encoders::EncoderKind;
use finet::synthetic::separable;
use finet::trainer::{load_checkpoint, predict_all, prepare, save_checkpoint, train, TrainConfig};

fn main() -> finet::Result<()> {
    let mut data = separable(200, 12, 5);
    let dev = data.split_off(50);
    let cfg = TrainConfig {
        encoder: EncoderKind::Lstm,
        context_window: 6,
        mention_window: 2,
        hidden: 8,
        batch_size: 25,
        max_passes: 4,
        eval_every: 2,
        ..TrainConfig::default()
    };
    let ckpt = train(&cfg, &data.instances, &dev.instances, &data.embeddings)?.best;

    let mut bytes = Vec::new();
    save_checkpoint(&ckpt, &mut bytes)?;
    let header = bytes.split(|&b| b == b'\n').take(2).collect::<Vec<_>>();
    println!("{}", String::from_utf8_lossy(header[0]));
    println!(
        "{} byte header, {} bytes total",
        header[1].len(),
        bytes.len()
    );

    let loaded = load_checkpoint(Cursor::new(&bytes))?;
    let mut again = Vec::new();
    save_checkpoint(&loaded, &mut again)?;
    println!("re-saved identically: {}", again == bytes);

    let inputs = prepare(
        &dev.instances,
        &cfg.window_spec(),
        &ckpt.labels,
        &data.embeddings,
    )?
    .inputs;
    let before = predict_all(&ckpt.model()?, &inputs, cfg.threshold)?;
    let after = predict_all(&loaded.model()?, &inputs, cfg.threshold)?;
    println!("predictions identical: {}", before == after);
    Ok(())
}
