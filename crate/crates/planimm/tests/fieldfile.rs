use planimm::fieldfile::{load, read_field, save, write_field, FieldData};
use planimm_core::{Grid2, MapField, Metric2, MetricField, ScalarField, Vector2};
use proptest::prelude::*;

fn round_trip(f: &FieldData) -> FieldData {
    let mut buf = Vec::new();
    write_field(&mut buf, f).unwrap();
    read_field(buf.as_slice()).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1.0..1.0f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

proptest! {
    #[test]
    fn scalar_fields_round_trip_exactly(nx in 3usize..7, ny in 3usize..7, vals in prop::collection::vec(finite(), 36)) {
        let g = Grid2::new(nx, ny, -0.3, 0.1, 2.7, 1.9).unwrap();
        let f = FieldData::Scalar(ScalarField::new(g, vals[..g.len()].to_vec()).unwrap());
        let back = round_trip(&f);
        prop_assert_eq!(&back, &f);
        let (FieldData::Scalar(a), FieldData::Scalar(b)) = (&f, &back) else { unreachable!() };
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn map_fields_round_trip_exactly(vals in prop::collection::vec((finite(), finite()), 12)) {
        let g = Grid2::new(4, 3, 0.0, 0.0, 1.0, 0.7).unwrap();
        let f = FieldData::Map(MapField::new(g, vals.iter().map(|(x, y)| Vector2::new(*x, *y)).collect()).unwrap());
        prop_assert_eq!(round_trip(&f), f);
    }

    #[test]
    fn metric_fields_round_trip_exactly(vals in prop::collection::vec((0.1..10.0f64, -0.5..0.5f64, 0.1..10.0f64), 9)) {
        let g = Grid2::unit_square(3).unwrap();
        let m = vals.iter().map(|(a, b, c)| Metric2::new(*a, b * a.min(*c), *c)).collect();
        let f = FieldData::Metric(MetricField::new(g, m).unwrap());
        prop_assert_eq!(round_trip(&f), f);
    }
}

#[test]
fn files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.field");
    let g = Grid2::unit_square(5).unwrap();
    let f = FieldData::Map(MapField::from_fn(g, |x, y| Vector2::new(x.sin(), 1.0 / 3.0 + y)).unwrap());
    save(&path, &f).unwrap();
    assert_eq!(load(&path).unwrap(), f);
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("# planimm field v1 5 5 0.0 0.0 1.0 1.0 2\n"));
}
