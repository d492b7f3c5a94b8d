//! Strict, loose-macro and loose-micro scores for a handful of predictions.

use std::collections::BTreeSet;

use finet::metrics::{evaluate, f1, per_type_counts};

fn set(types: &[usize]) -> BTreeSet<usize> {
    types.iter().copied().collect()
}

fn main() -> finet::Result<()> {
    let names = [
        "/person",
        "/person/politician",
        "/location",
        "/location/city",
    ];
    // (predicted, gold)
    let pairs = vec![
        (set(&[0, 1]), set(&[0, 1])),
        (set(&[0]), set(&[0, 1])),
        (set(&[2, 3]), set(&[2])),
        (set(&[0]), set(&[2, 3])),
    ];
    let report = evaluate(&pairs)?;
    println!("{report}");
    println!("{}", report.to_json());

    for (name, c) in names.iter().zip(per_type_counts(&pairs, names.len())) {
        println!("{name:<20} tp {} fp {} fn {}", c.tp, c.fp, c.fn_);
    }
    println!("f1(0.7363, 0.7629) = {:.2}%", 100.0 * f1(0.7363, 0.7629));
    Ok(())
}
