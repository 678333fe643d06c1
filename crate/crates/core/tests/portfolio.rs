use influence_core::portfolio::{
    descriptor_series, load_portfolio, performance_series, write_portfolio, Descriptor, OrderId, RawRecord, RawSlice,
    CSV_HEADER,
};
use influence_core::synth::{generate_synthetic, SyntheticSpec};
use influence_core::Error;
use proptest::prelude::*;

fn record(order: u32, values: Vec<f64>, pe: f64) -> RawRecord {
    RawRecord {
        order: OrderId(order),
        values: values.try_into().unwrap(),
        pe,
    }
}

fn slices_strategy() -> impl Strategy<Value = Vec<RawSlice>> {
    let rec = (proptest::collection::vec(-1e6f64..1e6, 7), -1e3f64..1e3);
    proptest::collection::btree_map(0u32..40, proptest::collection::btree_map(0u32..30, rec, 1..8), 0..10).prop_map(
        |by_slice| {
            by_slice
                .into_iter()
                .map(|(slice, orders)| RawSlice {
                    slice,
                    records: orders.into_iter().map(|(o, (v, pe))| record(o, v, pe)).collect(),
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn csv_round_trip(slices in slices_strategy()) {
        let mut buf = Vec::new();
        write_portfolio(&slices, &mut buf).unwrap();
        let back = load_portfolio(buf.as_slice()).unwrap();
        prop_assert_eq!(back, slices);
    }
}

#[test]
fn synthetic_portfolio_round_trips() {
    let spec = SyntheticSpec {
        orders: 40,
        slices: 30,
        seed: 3,
        ..SyntheticSpec::default()
    };
    let (slices, _) = generate_synthetic(&spec).unwrap();
    let mut buf = Vec::new();
    write_portfolio(&slices, &mut buf).unwrap();
    assert_eq!(load_portfolio(buf.as_slice()).unwrap(), slices);
}

#[test]
fn interleaved_rows_are_grouped_by_slice() {
    // each order is chronological, orders are interleaved
    let csv = format!(
        "{}\n0,5,1,1,1,1,1,1,1,0\n2,5,1,1,1,1,1,1,1,0\n2,3,2,2,2,2,2,2,2,1\n",
        CSV_HEADER.join(",")
    );
    let slices = load_portfolio(csv.as_bytes()).unwrap();
    assert_eq!(slices.len(), 2);
    assert_eq!(slices[1].slice, 2);
    assert_eq!(slices[1].orders().collect::<Vec<_>>(), vec![OrderId(3), OrderId(5)]);
    assert_eq!(
        descriptor_series(&slices, OrderId(5), Descriptor::Spread),
        vec![(0, 1.0), (2, 1.0)]
    );
    assert_eq!(performance_series(&slices, OrderId(3)), vec![(2, 1.0)]);
}

#[test]
fn malformed_inputs_are_reported() {
    let h = CSV_HEADER.join(",");
    let dup = format!("{h}\n0,1,1,1,1,1,1,1,1,0\n0,1,1,1,1,1,1,1,1,0\n");
    assert!(matches!(
        load_portfolio(dup.as_bytes()),
        Err(Error::DuplicateRecord { slice: 0, order: 1, .. })
    ));
    let back = format!("{h}\n3,1,1,1,1,1,1,1,1,0\n1,1,1,1,1,1,1,1,1,0\n");
    assert!(matches!(load_portfolio(back.as_bytes()), Err(Error::Ordering { .. })));
    let short = format!("{h}\n0,1,1,1\n");
    assert!(matches!(
        load_portfolio(short.as_bytes()),
        Err(Error::Parse { line: 2, .. })
    ));
    let inf = format!("{h}\n0,1,1,inf,1,1,1,1,1,0\n");
    assert!(matches!(load_portfolio(inf.as_bytes()), Err(Error::Parse { .. })));
    let wrong_header = "slice,order,pe\n0,1,0\n";
    assert!(matches!(
        load_portfolio(wrong_header.as_bytes()),
        Err(Error::Parse { line: 1, .. })
    ));
}
