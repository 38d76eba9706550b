use pepper_core::chess::Board;
use pepper_core::features::{extract_features, FEATURE_DIM, GLOBAL_RANGE, PIECE_RANGE, SQUARE_RANGE};

const GOLDEN: &str = include_str!("data/startpos_features.txt");

fn golden() -> Vec<f64> {
    let v: Vec<f64> = GOLDEN
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let (slot, value) = line.split_once(' ').expect("`slot value` lines");
            assert_eq!(slot.parse::<usize>().unwrap(), i);
            value.parse().unwrap()
        })
        .collect();
    assert_eq!(v.len(), 353);
    v
}

#[test]
fn initial_position_matches_golden_vector() {
    let f = extract_features(&Board::startpos());
    let want = golden();
    for (i, (got, want)) in f.as_slice().iter().zip(&want).enumerate() {
        assert_eq!(got.to_bits(), want.to_bits(), "slot {i}: {got} vs {want}");
    }
}

#[test]
fn section_sizes() {
    assert_eq!(FEATURE_DIM, 353);
    assert_eq!((GLOBAL_RANGE.len(), PIECE_RANGE.len(), SQUARE_RANGE.len()), (17, 208, 128));
    let f = extract_features(&Board::startpos());
    assert_eq!(f.global().len() + f.piece_centric().len() + f.square_centric().len(), 353);
}
