//! Portfolio data model and the long-format CSV reader/writer.
//!
//! A portfolio is a sequence of slices. Each slice lists the orders active at
//! that slice with their seven raw descriptor columns and their performance
//! evaluation (PE). An order is either fully observed at a slice or absent.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DESCRIPTOR_COUNT: usize = 7;

/// Header of the long CSV format, in column order.
pub const CSV_HEADER: [&str; 10] = [
    "slice",
    "order",
    "volatility",
    "spread",
    "momentum_spread",
    "momentum_bp",
    "volume_score_raw",
    "volatility_score_raw",
    "spread_score_raw",
    "pe",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderId(pub u32);

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The seven market descriptors.
///
/// The last three are rarity scores. In raw data their column holds the
/// underlying series (volume, volatility, spread) that the score is computed
/// from, so a `Descriptor` also names a raw CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Descriptor {
    Volatility,
    Spread,
    MomentumSpread,
    MomentumBp,
    VolumeScore,
    VolatilityScore,
    SpreadScore,
}

impl Descriptor {
    pub const ALL: [Descriptor; DESCRIPTOR_COUNT] = [
        Descriptor::Volatility,
        Descriptor::Spread,
        Descriptor::MomentumSpread,
        Descriptor::MomentumBp,
        Descriptor::VolumeScore,
        Descriptor::VolatilityScore,
        Descriptor::SpreadScore,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Descriptor> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Descriptor::Volatility => "volatility",
            Descriptor::Spread => "spread",
            Descriptor::MomentumSpread => "momentum_spread",
            Descriptor::MomentumBp => "momentum_bp",
            Descriptor::VolumeScore => "volume_score",
            Descriptor::VolatilityScore => "volatility_score",
            Descriptor::SpreadScore => "spread_score",
        }
    }

    pub fn is_score(self) -> bool {
        matches!(
            self,
            Descriptor::VolumeScore | Descriptor::VolatilityScore | Descriptor::SpreadScore
        )
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Descriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Descriptor::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown descriptor `{s}`")))
    }
}

/// One order observed at one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub order: OrderId,
    /// Raw columns indexed by [`Descriptor::index`].
    pub values: [f64; DESCRIPTOR_COUNT],
    pub pe: f64,
}

/// All orders active at one slice, before enrichment. Records are sorted by order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSlice {
    pub slice: u32,
    pub records: Vec<RawRecord>,
}

impl RawSlice {
    pub fn active_count(&self) -> usize {
        self.records.len()
    }

    pub fn orders(&self) -> impl Iterator<Item = OrderId> + '_ {
        self.records.iter().map(|r| r.order)
    }
}

/// The `(slice, value)` series of one raw column for one order, gaps included.
pub fn descriptor_series(slices: &[RawSlice], order: OrderId, descriptor: Descriptor) -> Vec<(u32, f64)> {
    slices
        .iter()
        .filter_map(|s| {
            s.records
                .binary_search_by_key(&order, |r| r.order)
                .ok()
                .map(|i| (s.slice, s.records[i].values[descriptor.index()]))
        })
        .collect()
}

/// The `(slice, pe)` series of one order.
pub fn performance_series(slices: &[RawSlice], order: OrderId) -> Vec<(u32, f64)> {
    slices
        .iter()
        .filter_map(|s| {
            s.records
                .binary_search_by_key(&order, |r| r.order)
                .ok()
                .map(|i| (s.slice, s.records[i].pe))
        })
        .collect()
}

fn parse_finite(field: &str, column: &str, line: u64) -> Result<f64> {
    if field.is_empty() {
        return Err(Error::Parse {
            line,
            message: format!("missing value for `{column}`"),
        });
    }
    let value: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{column}`: cannot parse `{field}` as a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("`{column}`: non-finite value `{field}`"),
        });
    }
    Ok(value)
}

fn parse_index(field: &str, column: &str, line: u64) -> Result<u32> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{column}`: expected a non-negative integer, got `{field}`"),
    })
}

/// Reads a long-format portfolio CSV into slices ordered by slice index.
pub fn load_portfolio<R: Read>(source: R) -> Result<Vec<RawSlice>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }

    let mut by_slice: BTreeMap<u32, Vec<RawRecord>> = BTreeMap::new();
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut last_slice: HashMap<u32, u32> = HashMap::new();

    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| csv_error(e, 0))?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let slice = parse_index(&record[0], CSV_HEADER[0], line)?;
        let order = parse_index(&record[1], CSV_HEADER[1], line)?;
        let mut values = [0.0; DESCRIPTOR_COUNT];
        for (i, v) in values.iter_mut().enumerate() {
            *v = parse_finite(&record[2 + i], CSV_HEADER[2 + i], line)?;
        }
        let pe = parse_finite(&record[9], CSV_HEADER[9], line)?;

        if !seen.insert((slice, order)) {
            return Err(Error::DuplicateRecord { line, slice, order });
        }
        if let Some(&previous) = last_slice.get(&order) {
            if slice < previous {
                return Err(Error::Ordering {
                    line,
                    order,
                    slice,
                    previous,
                });
            }
        }
        last_slice.insert(order, slice);

        by_slice.entry(slice).or_default().push(RawRecord {
            order: OrderId(order),
            values,
            pe,
        });
    }

    Ok(by_slice
        .into_iter()
        .map(|(slice, mut records)| {
            records.sort_by_key(|r| r.order);
            RawSlice { slice, records }
        })
        .collect())
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(fallback_line);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Writes slices in the long CSV format, rows ordered by (slice, order).
pub fn write_portfolio<W: Write>(slices: &[RawSlice], mut sink: W) -> Result<()> {
    writeln!(sink, "{}", CSV_HEADER.join(","))?;
    for s in slices {
        for r in &s.records {
            write!(sink, "{},{}", s.slice, r.order)?;
            for v in r.values {
                write!(sink, ",{v}")?;
            }
            writeln!(sink, ",{}", r.pe)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        CSV_HEADER.join(",")
    }

    #[test]
    fn header_only_is_empty() {
        let slices = load_portfolio(format!("{}\n", header()).as_bytes()).unwrap();
        assert!(slices.is_empty());
    }

    #[test]
    fn activity_mask_from_rows() {
        let csv = format!(
            "{}\n0,1,1,2,3,4,5,6,7,0.5\n1,1,1,2,3,4,5,6,7,0.5\n1,2,1,2,3,4,5,6,7,-0.5\n2,1,1,2,3,4,5,6,7,0.1\n",
            header()
        );
        let slices = load_portfolio(csv.as_bytes()).unwrap();
        let counts: Vec<_> = slices.iter().map(|s| (s.slice, s.active_count())).collect();
        assert_eq!(counts, vec![(0, 1), (1, 2), (2, 1)]);
        assert_eq!(slices[1].orders().collect::<Vec<_>>(), vec![OrderId(1), OrderId(2)]);
    }

    #[test]
    fn nan_pe_is_a_parse_error_with_line() {
        let csv = format!("{}\n0,1,1,2,3,4,5,6,7,0.5\n0,2,1,2,3,4,5,6,7,NaN\n", header());
        match load_portfolio(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_descriptor_is_rejected() {
        let csv = format!("{}\n0,1,1,,3,4,5,6,7,0.5\n", header());
        assert!(matches!(
            load_portfolio(csv.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn short_row_is_rejected() {
        let csv = format!("{}\n0,1,1,2,3\n", header());
        assert!(matches!(
            load_portfolio(csv.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_and_ordering_errors() {
        let dup = format!("{}\n0,1,1,2,3,4,5,6,7,0.5\n0,1,1,2,3,4,5,6,7,0.5\n", header());
        assert!(matches!(
            load_portfolio(dup.as_bytes()),
            Err(Error::DuplicateRecord {
                line: 3,
                slice: 0,
                order: 1
            })
        ));
        let back = format!("{}\n3,1,1,2,3,4,5,6,7,0.5\n1,1,1,2,3,4,5,6,7,0.5\n", header());
        assert!(matches!(
            load_portfolio(back.as_bytes()),
            Err(Error::Ordering {
                line: 3,
                order: 1,
                slice: 1,
                previous: 3
            })
        ));
    }

    #[test]
    fn crlf_and_wrong_header() {
        let csv = format!("{}\r\n0,1,1,2,3,4,5,6,7,0.5\r\n", header());
        assert_eq!(load_portfolio(csv.as_bytes()).unwrap().len(), 1);
        assert!(load_portfolio("slice,order\n".as_bytes()).is_err());
    }

    #[test]
    fn series_extraction_follows_gaps() {
        let csv = format!("{}\n0,1,1,2,3,4,5,6,7,0.5\n2,1,9,2,3,4,5,6,7,0.25\n", header());
        let slices = load_portfolio(csv.as_bytes()).unwrap();
        assert_eq!(
            descriptor_series(&slices, OrderId(1), Descriptor::Volatility),
            vec![(0, 1.0), (2, 9.0)]
        );
        assert_eq!(performance_series(&slices, OrderId(1)), vec![(0, 0.5), (2, 0.25)]);
        assert!(descriptor_series(&slices, OrderId(7), Descriptor::Spread).is_empty());
    }

    #[test]
    fn descriptor_names_round_trip() {
        for d in Descriptor::ALL {
            assert_eq!(d.name().parse::<Descriptor>().unwrap(), d);
            assert_eq!(Descriptor::from_index(d.index()), Some(d));
        }
        assert_eq!(Descriptor::ALL.iter().filter(|d| d.is_score()).count(), 3);
    }
}
