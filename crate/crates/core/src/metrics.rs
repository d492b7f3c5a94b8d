//! Strict, loose-macro and loose-micro evaluation over predicted and gold
//! type sets.
//!
//! For instance `i` with prediction `P_i` and gold `G_i`:
//!
//! * strict: fraction of instances with `P_i = G_i` (precision = recall),
//! * loose macro: mean of `|P_i ∩ G_i| / |P_i|` and of `|P_i ∩ G_i| / |G_i|`,
//! * loose micro: `Σ|P_i ∩ G_i| / Σ|P_i|` and `Σ|P_i ∩ G_i| / Σ|G_i|`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Harmonic mean, 0 when `p + r = 0`.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Measure {
    fn new(precision: f64, recall: f64) -> Self {
        Measure {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strict: Measure,
    pub loose_macro: Measure,
    pub loose_micro: Measure,
    pub n: usize,
}

/// Evaluates `(predicted, gold)` pairs.
pub fn evaluate<T: Ord>(pairs: &[(BTreeSet<T>, BTreeSet<T>)]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::Input("nothing to evaluate".into()));
    }
    let mut exact = 0usize;
    let mut macro_p = 0.0;
    let mut macro_r = 0.0;
    let (mut overlap, mut predicted, mut gold) = (0usize, 0usize, 0usize);
    for (i, (pred, truth)) in pairs.iter().enumerate() {
        if truth.is_empty() {
            return Err(Error::Input(format!(
                "instance {i} has an empty gold type set"
            )));
        }
        if pred.is_empty() {
            return Err(Error::Input(format!(
                "instance {i} has an empty predicted type set"
            )));
        }
        let hit = pred.intersection(truth).count();
        if hit == pred.len() && hit == truth.len() {
            exact += 1;
        }
        macro_p += hit as f64 / pred.len() as f64;
        macro_r += hit as f64 / truth.len() as f64;
        overlap += hit;
        predicted += pred.len();
        gold += truth.len();
    }
    let n = pairs.len() as f64;
    let strict = exact as f64 / n;
    Ok(EvalReport {
        strict: Measure::new(strict, strict),
        loose_macro: Measure::new(macro_p / n, macro_r / n),
        loose_micro: Measure::new(
            overlap as f64 / predicted as f64,
            overlap as f64 / gold as f64,
        ),
        n: pairs.len(),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    /// Percentages with two decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>9} {:>9} {:>9}", "measure", "P", "R", "F1")?;
        for (name, m) in [
            ("strict", self.strict),
            ("loose-macro", self.loose_macro),
            ("loose-micro", self.loose_micro),
        ] {
            writeln!(
                f,
                "{:<12} {:>9.2} {:>9.2} {:>9.2}",
                name,
                100.0 * m.precision,
                100.0 * m.recall,
                100.0 * m.f1
            )?;
        }
        write!(f, "N = {}", self.n)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Per-type true/false positive and false negative counts over `k` types.
pub fn per_type_counts(pairs: &[(BTreeSet<usize>, BTreeSet<usize>)], k: usize) -> Vec<TypeCounts> {
    let mut out = vec![TypeCounts::default(); k];
    for (pred, gold) in pairs {
        for &t in pred {
            if gold.contains(&t) {
                out[t].tp += 1;
            } else {
                out[t].fp += 1;
            }
        }
        for &t in gold.difference(pred) {
            out[t].fn_ += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[&'static str]) -> BTreeSet<&'static str> {
        v.iter().copied().collect()
    }

    #[test]
    fn perfect_predictions() {
        let pairs = vec![
            (set(&["a"]), set(&["a"])),
            (set(&["a", "b"]), set(&["a", "b"])),
        ];
        let r = evaluate(&pairs).unwrap();
        for m in [r.strict, r.loose_macro, r.loose_micro] {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn hand_example() {
        let pairs = vec![
            (set(&["a"]), set(&["a", "b"])),
            (set(&["a", "b"]), set(&["b"])),
        ];
        let r = evaluate(&pairs).unwrap();
        assert_eq!(r.strict.precision, 0.0);
        assert_eq!(r.strict.recall, 0.0);
        assert_eq!(r.loose_macro.precision, 0.75);
        assert_eq!(r.loose_macro.recall, 0.75);
        assert!((r.loose_micro.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.loose_micro.recall - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_predictions() {
        let pairs = vec![(set(&["a"]), set(&["b"])), (set(&["c", "d"]), set(&["a"]))];
        let r = evaluate(&pairs).unwrap();
        for m in [r.strict, r.loose_macro, r.loose_micro] {
            assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn input_errors() {
        assert!(evaluate::<u8>(&[]).is_err());
        assert!(evaluate(&[(set(&["a"]), set(&[]))]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert!((f1(0.42, 0.42) - 0.42).abs() < 1e-15);
        assert_eq!(f1(1.0, 0.0), 0.0);
        assert_eq!(f1(0.0, 0.0), 0.0);
        // Attentive encoder row of the published loose-micro table.
        let v = f1(0.7363, 0.7629);
        assert_eq!(format!("{:.2}", 100.0 * v), "74.94");
    }

    #[test]
    fn strict_precision_equals_recall() {
        let pairs = vec![(set(&["a"]), set(&["a"])), (set(&["b"]), set(&["a"]))];
        let r = evaluate(&pairs).unwrap();
        assert_eq!(r.strict.precision, 0.5);
        assert_eq!(r.strict.recall, 0.5);
        assert_eq!(r.strict.f1, 0.5);
    }

    #[test]
    fn table_formatting() {
        let pairs = vec![(set(&["a"]), set(&["a"]))];
        let text = evaluate(&pairs).unwrap().to_string();
        assert!(text.contains("100.00"), "{text}");
        assert!(text.contains("loose-micro"));
    }

    #[test]
    fn per_type_dump() {
        let pairs = vec![
            (BTreeSet::from([0, 1]), BTreeSet::from([0])),
            (BTreeSet::from([2]), BTreeSet::from([1])),
        ];
        let c = per_type_counts(&pairs, 3);
        assert_eq!(
            c[0],
            TypeCounts {
                tp: 1,
                fp: 0,
                fn_: 0
            }
        );
        assert_eq!(
            c[1],
            TypeCounts {
                tp: 0,
                fp: 1,
                fn_: 1
            }
        );
        assert_eq!(
            c[2],
            TypeCounts {
                tp: 0,
                fp: 1,
                fn_: 0
            }
        );
    }
}
