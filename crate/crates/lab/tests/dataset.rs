use std::collections::BTreeMap;

use proptest::prelude::*;
use tokenlab::dataset::{
    append_record, export_dataset, import_dataset, read_records, read_trade_log, write_records, write_trade_log,
    DatasetError, TradeLogRow, BASE_COLUMNS,
};
use tokenlab_core::market::{ParticipantId, Side, Trade};
use tokenlab_core::{PerformanceRecord, TokenId};

fn record() -> impl Strategy<Value = PerformanceRecord> {
    (any::<u64>(), any::<u64>(), 0..7usize, any::<f64>().prop_filter("finite", |x| x.is_finite()), any::<u64>())
        .prop_map(|(r, s, t, p, seed)| PerformanceRecord::new(r, s, TokenId::ALL[t], p, seed))
}

fn with_extras() -> impl Strategy<Value = Vec<PerformanceRecord>> {
    (prop::collection::vec(record(), 0..40), prop::collection::btree_set("[a-z]{1,6}", 0..3)).prop_flat_map(
        |(records, keys)| {
            let n = records.len() * keys.len();
            prop::collection::vec(-1e12..1e12f64, n).prop_map(move |vals| {
                let mut out = records.clone();
                let mut it = vals.into_iter();
                for r in &mut out {
                    r.extra_features = keys.iter().map(|k| (k.clone(), it.next().unwrap())).collect::<BTreeMap<_, _>>();
                }
                out
            })
        },
    )
}

proptest! {
    #[test]
    fn csv_round_trip(records in with_extras()) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        prop_assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }
}

#[test]
fn header_and_rows() {
    let mut r = PerformanceRecord::new(0, 10, TokenId::ALL[3], -1250.5, 42);
    r.extra_features.insert("trades".into(), 7.0);
    let mut buf = Vec::new();
    write_records(&mut buf, &[r]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("{},trades", BASE_COLUMNS.join(",")));
    assert_eq!(lines.next().unwrap(), "0,10,T4,-1250.5,42,7");
    assert!(lines.next().is_none());
}

#[test]
fn bad_rows_report_their_line() {
    let text = "record_id,subject_id,token_label,net_profit,seed\n0,0,T1,1.0,0\n1,1,T9,2.0,0\n";
    match read_records(text.as_bytes()).unwrap_err() {
        DatasetError::Row { line, .. } => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(read_records("id,label\n".as_bytes()).is_err());
}

#[test]
fn files_and_appends() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let records: Vec<_> =
        (0..5).map(|i| PerformanceRecord::new(i, i, TokenId::ALL[i as usize], i as f64 * 1.5, i)).collect();
    export_dataset(&records, &path).unwrap();
    assert_eq!(import_dataset(&path).unwrap(), records);

    let live = dir.path().join("live.csv");
    for r in &records {
        append_record(&live, r).unwrap();
    }
    assert_eq!(import_dataset(&live).unwrap(), records);
    assert_eq!(std::fs::read_to_string(&live).unwrap().lines().count(), 6);

    let err = import_dataset(&dir.path().join("absent.csv")).unwrap_err();
    assert!(err.to_string().contains("absent.csv"));
}

#[test]
fn trade_log_layout() {
    let trades = [
        Trade {
            seq: 4,
            step: 0,
            price: 10_001,
            quantity: 20,
            buyer: ParticipantId(1),
            seller: ParticipantId(1003),
            maker_order_id: 1,
            taker_order_id: 2,
            aggressor: Side::Buy,
        },
        Trade {
            seq: 9,
            step: 2,
            price: 9_998,
            quantity: 5,
            buyer: ParticipantId(1010),
            seller: ParticipantId(1),
            maker_order_id: 3,
            taker_order_id: 5,
            aggressor: Side::Sell,
        },
    ];
    let mut buf = Vec::new();
    write_trade_log(&mut buf, &trades).unwrap();
    assert_eq!(
        String::from_utf8(buf.clone()).unwrap(),
        "seq,price_ticks,quantity,buyer_id,seller_id\n4,10001,20,1,1003\n9,9998,5,1010,1\n"
    );
    let rows = read_trade_log(buf.as_slice()).unwrap();
    assert_eq!(rows, trades.iter().map(TradeLogRow::from).collect::<Vec<_>>());
    assert!(read_trade_log("seq,price\n1,2\n".as_bytes()).is_err());
}
