use proptest::prelude::*;
use ubiq::cgrid::{ball_cover_boxes, locate, neighbors, CAdicBox, GridGeometry};

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, d)
}

proptest! {
    #[test]
    fn locate_contains_point(c in 2u32..6, d in 1usize..4, seed in point(3), j in 0u32..20) {
        let geom = GridGeometry::new(c, d).unwrap();
        let x = &seed[..d];
        let j = j.min(geom.max_depth());
        let b = locate(x, j, geom).unwrap();
        prop_assert!(b.contains(x));
    }

    #[test]
    fn children_tile_parent(c in 2u32..5, d in 1usize..3, x in point(2), j in 0u32..12) {
        let geom = GridGeometry::new(c, d).unwrap();
        let x = &x[..d];
        let b = locate(x, j, geom).unwrap();
        let kids = b.children();
        prop_assert_eq!(kids.len() as u64, (c as u64).pow(d as u32));
        prop_assert!(kids.iter().all(|k| k.parent().as_ref() == Some(&b)));
        let fine = locate(x, j + 1, geom).unwrap();
        prop_assert_eq!(kids.iter().filter(|k| **k == fine).count(), 1);
        prop_assert_eq!(fine.parent(), Some(b));
    }

    #[test]
    fn neighbors_are_symmetric(c in 2u32..5, d in 1usize..3, x in point(2), j in 1u32..8) {
        let geom = GridGeometry::new(c, d).unwrap();
        let b = locate(&x[..d], j, geom).unwrap();
        for nb in neighbors(&b) {
            prop_assert!(neighbors(&nb).contains(&b));
        }
    }

    #[test]
    fn ball_cover_matches_exhaustive_scan(c in 2u32..4, d in 1usize..3, x in point(2), r in 0.001f64..0.4, j in 0u32..7) {
        let geom = GridGeometry::new(c, d).unwrap();
        let x = &x[..d];
        let mut got = ball_cover_boxes(x, r, j, geom).unwrap();
        got.sort();
        let h = geom.diameter(j);
        let mut want: Vec<CAdicBox> = (0..geom.box_count(j) as usize)
            .map(|i| CAdicBox::from_linear(geom, j, i))
            .filter(|b| b.k.iter().zip(x).all(|(&k, &xi)| (k as f64) * h < xi + r && (k as f64 + 1.0) * h > xi - r))
            .collect();
        want.sort();
        prop_assert_eq!(got, want);
    }
}
