//! Parses JSON-lines instances, builds the label index and cuts each
//! instance into the fixed-width windows the encoders consume.

use finet::corpus::{build_label_index, read_corpus, window, WindowSpec};

const DATA: &str = r#"{"tokens":["Senator","Barack","Obama","spoke","in","Chicago","today"],"mention_start":1,"mention_end":3,"labels":["/person","/person/politician"]}
{"tokens":["He","flew","to","Paris"],"mention_start":3,"mention_end":4,"labels":["/location","/location/city"]}
{"tokens":["The","International","Business","Machines","Corporation","reported","earnings"],"mention_start":1,"mention_end":5,"labels":["/organization"]}
"#;

fn main() -> finet::Result<()> {
    let instances = read_corpus(DATA.as_bytes())?;
    let labels = build_label_index(&instances)?;
    println!("types: {:?}", labels.types());

    let spec = WindowSpec::new(3, 2);
    for inst in &instances {
        let (w, _) = window(inst, &spec, &labels)?;
        println!(
            "{:?} | {:?} | {:?}  gold {:?}",
            w.left,
            w.mention,
            w.right,
            labels.decode(&w.gold)
        );
    }
    Ok(())
}
