//! The bundled benchmark stand-ins keep their documented shapes.

use std::path::Path;

use treeselect::dataset::{ColumnSelector, Dataset};

fn load(file: &str) -> Dataset {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file);
    Dataset::load_csv(path, &ColumnSelector::Name("class".into()), "?").unwrap()
}

#[test]
fn sonar_shape() {
    let ds = load("sonar.csv");
    assert_eq!(ds.n_rows(), 208);
    assert_eq!(ds.n_features(), 60);
    assert_eq!(ds.n_classes(), 2);
    assert!(ds.kinds().iter().all(|k| k.is_numeric()));
    assert!(!ds.has_missing());
}

#[test]
fn german_shape() {
    let ds = load("german.csv");
    assert_eq!(ds.n_rows(), 1000);
    assert_eq!(ds.n_features(), 20);
    assert_eq!(ds.n_classes(), 2);
    let categorical = ds.kinds().iter().filter(|k| !k.is_numeric()).count();
    assert_eq!(categorical, 13);
}

#[test]
fn vehicle_shape() {
    let ds = load("vehicle.csv");
    assert_eq!(ds.n_rows(), 846);
    assert_eq!(ds.n_features(), 18);
    assert_eq!(ds.n_classes(), 4);
}
