//! Export a learnt tree as nested-if C code and run the bundled
//! interpreter over it to confirm the text means what the tree means.
//!
//! ```bash
//! cargo run --example export_controller_code
//! ```

use stratree::codegen::{export_code, interp, Dialect};
use stratree::strategy::{FeatureSchema, StrategyTable};
use stratree::tree::learn;
use stratree::view::{Determinized, DeterminizeRule};

fn main() {
    // distance to the car ahead and the closing speed; too close means
    // brake, comfortably cruising means coast, lagging far behind with the
    // gap growing means the only sensible move is to catch up
    let schema = FeatureSchema::ordered(&[("distance", 0, 60), ("closing_speed", -20, 20)]);
    let mut table =
        StrategyTable::new(schema, vec!["dec".into(), "neu".into(), "acc".into()]).unwrap();
    for d in (2..60).step_by(3) {
        for v in (-18..=18).step_by(6) {
            let actions: &[&str] = if d < 10 || (d < 25 && v > 6) {
                &["dec"]
            } else if d < 35 {
                &["dec", "neu"]
            } else if v < 0 {
                &["acc"]
            } else {
                &["neu", "acc"]
            };
            table.insert_named(vec![d, v], actions).unwrap();
        }
    }

    let tree = learn(&table, 12).unwrap();
    let code = export_code(&tree, Dialect::CLike);
    println!("{code}");

    // round-trip: parse the emitted text and compare with the tree
    let controller = interp::parse(&code).unwrap();
    let mut lex = Determinized::new(&tree, DeterminizeRule::LexicographicFirst);
    let mut agreements = 0;
    for (config, _) in table.rows() {
        let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
        assert_eq!(
            controller.eval(&point).unwrap(),
            lex.pick(&point).unwrap()
        );
        agreements += 1;
    }
    println!("// interpreter agrees with the tree on all {agreements} training points");
}
