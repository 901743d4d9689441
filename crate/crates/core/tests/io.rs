//! Exchange-format roundtrips and parser robustness.

mod common;

use common::*;
use etope::io::{parse_set, read_set, to_json, write_set};
use etope::{Etope, Etope32, IndexSet, PNorm};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

/// Values spread over many magnitudes, including awkward decimals.
fn wide_value<R: Rng>(r: &mut R) -> f64 {
    let mantissa: f64 = r.random_range(-1.0..1.0);
    let exp = r.random_range(-30..30);
    if r.random_bool(0.1) {
        0.1 * r.random_range(-9..9) as f64
    } else {
        mantissa * 10f64.powi(exp)
    }
}

fn random_set(seed: u64) -> Etope {
    let mut r = rng(seed);
    let n = r.random_range(1..=4);
    let m = r.random_range(0..=6);
    let k = if m == 0 { 0 } else { r.random_range(0..=2) };
    let p = match r.random_range(0..3) {
        0 => PNorm::Inf,
        1 => PNorm::two(),
        _ => PNorm::Finite(r.random_range(1.0..8.0)),
    };
    let mut fill = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| wide_value(&mut r));
    let c = fill(n, 1).column(0).into_owned();
    let g = fill(n, m);
    let a = fill(k, m);
    let b = fill(k, 1).column(0).into_owned();
    let blocks = IndexSet::new(random_partition(&mut rng(seed ^ 0x5eed), m, 3), m).unwrap();
    Etope::new(p, c, g, a, b, blocks).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn text_roundtrip_is_lossless_and_stable(seed in any::<u64>()) {
        let e = random_set(seed);
        let text = to_json(&e);
        let back: Etope = parse_set(&text).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(to_json(&back), text);
    }

    #[test]
    fn parser_never_panics_on_arbitrary_text(text in ".{0,200}") {
        let _ = parse_set::<f64>(&text);
    }

    #[test]
    fn parser_never_panics_on_damaged_documents(seed in any::<u64>(), cuts in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..6)) {
        let mut bytes = to_json(&random_set(seed)).into_bytes();
        for (at, byte) in cuts {
            let i = at.index(bytes.len());
            match byte % 3 {
                0 => { bytes.remove(i); }
                1 => bytes[i] = b"[]{},:\"-e0.9"[byte as usize % 12],
                _ => bytes.insert(i, byte),
            }
        }
        if let Ok(text) = String::from_utf8(bytes) {
            let _ = parse_set::<f64>(&text);
        }
    }
}

#[test]
fn files_roundtrip_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let e = random_set(seed);
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        write_set(&e, &p1).unwrap();
        let back: Etope = read_set(&p1).unwrap();
        write_set(&back, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}

#[test]
fn missing_files_are_io_errors() {
    let err = read_set::<f64>(std::path::Path::new("/nonexistent/set.json")).unwrap_err();
    assert!(matches!(err, etope::EtopeError::Io(_)), "{err}");
}

#[test]
fn documents_load_in_single_precision() {
    let text = r#"{"p": 2, "center": [0.5, -1], "generators": [[1, 0], [0, 2]]}"#;
    let e: Etope32 = parse_set(text).unwrap();
    assert_eq!(e.center(), &DVector::from_vec(vec![0.5f32, -1.0]));
    assert_eq!(e.index_set().blocks(), &[vec![0, 1]]);
}
