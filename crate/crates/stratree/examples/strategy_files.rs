//! The strategy file format: a JSON header line declaring features and the
//! action alphabet, then one JSON entry per line.
//!
//! ```bash
//! cargo run --example strategy_files
//! ```

use stratree::strategy::{
    load_strategy, read_strategy, save_strategy, FeatureSchema, StrategyTable,
};

fn main() {
    let schema = FeatureSchema::ordered(&[("distance", 0, 100), ("velocity", -10, 20)]);
    let mut table =
        StrategyTable::new(schema, vec!["dec".into(), "neu".into(), "acc".into()]).unwrap();
    table.insert_named(vec![4, 12], &["dec"]).unwrap();
    table.insert_named(vec![30, -3], &["dec", "neu", "acc"]).unwrap();
    table.insert_named(vec![17, 0], &["dec", "neu"]).unwrap();

    let mut bytes = Vec::new();
    stratree::strategy::write_strategy(&table, &mut bytes).unwrap();
    println!("--- file contents ---");
    print!("{}", String::from_utf8(bytes.clone()).unwrap());
    println!("---------------------");

    let reloaded = read_strategy(bytes.as_slice()).unwrap();
    assert_eq!(table, reloaded);
    println!("round trip: identical ({} entries)", reloaded.len());

    let path = std::env::temp_dir().join("demo.strat");
    save_strategy(&table, &path).unwrap();
    let from_disk = load_strategy(&path).unwrap();
    assert_eq!(table, from_disk);
    println!("saved and reloaded from {}", path.display());

    // malformed inputs fail with line numbers
    let bad = concat!(
        r#"{"features":[{"name":"x","kind":"ordered","min":0,"max":9}],"actions":["a"]}"#,
        "\n",
        r#"{"c":[1],"a":["a"]}"#,
        "\n",
        r#"{"c":[1],"a":["a"]}"#,
        "\n"
    );
    let err = read_strategy(bad.as_bytes()).unwrap_err();
    println!("duplicate entry rejected: {err}");
}
