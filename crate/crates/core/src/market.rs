//! Option-chain ingestion: CSV parsing with per-line reject bookkeeping,
//! trading-day counting and grouping of raw quotes into per-expiry chains.

use crate::pricing::OptionKind;
use crate::{Error, Result};
use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};

/// One validated quote row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteRecord {
    pub symbol: String,
    pub quote_date: NaiveDate,
    pub expiry_date: NaiveDate,
    pub strike: f64,
    pub kind: OptionKind,
    pub bid: f64,
    pub ask: f64,
    pub volume: u64,
    pub open_interest: u64,
}

impl QuoteRecord {
    pub fn mid(&self) -> f64 {
        (self.bid + self.ask) / 2.0
    }
}

/// A rejected input line and why it was dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseOutcome {
    pub records: Vec<QuoteRecord>,
    pub rejects: Vec<Reject>,
}

const COLUMNS: [&str; 9] = [
    "symbol",
    "quote_date",
    "expiry_date",
    "strike",
    "type",
    "bid",
    "ask",
    "volume",
    "open_interest",
];

/// Parse a chain CSV. Structural problems (missing header columns, I/O) are
/// errors; any defect confined to one row becomes a [`Reject`] so a single
/// bad quote cannot discard a whole file.
pub fn parse_chain_csv<R: Read>(reader: R) -> Result<ParseOutcome> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut index = [0usize; COLUMNS.len()];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for row in csv.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&row, &index) {
            Ok(record) => records.push(record),
            Err(reason) => rejects.push(Reject { line, reason }),
        }
    }
    Ok(ParseOutcome { records, rejects })
}

fn parse_row(row: &csv::StringRecord, index: &[usize; 9]) -> std::result::Result<QuoteRecord, String> {
    let field = |i: usize| -> std::result::Result<&str, String> {
        row.get(index[i])
            .ok_or_else(|| format!("missing field {}", COLUMNS[i]))
    };
    let date = |i: usize| -> std::result::Result<NaiveDate, String> {
        NaiveDate::parse_from_str(field(i)?, "%Y-%m-%d")
            .map_err(|e| format!("bad {}: {e}", COLUMNS[i]))
    };
    let number = |i: usize| -> std::result::Result<f64, String> {
        field(i)?
            .parse::<f64>()
            .map_err(|e| format!("bad {}: {e}", COLUMNS[i]))
    };
    let count = |i: usize| -> std::result::Result<u64, String> {
        field(i)?
            .parse::<u64>()
            .map_err(|e| format!("bad {}: {e}", COLUMNS[i]))
    };

    let symbol = field(0)?.to_string();
    if symbol.is_empty() {
        return Err("empty symbol".into());
    }
    let quote_date = date(1)?;
    let expiry_date = date(2)?;
    if expiry_date <= quote_date {
        return Err(format!("expiry {expiry_date} not after quote date {quote_date}"));
    }
    let strike = number(3)?;
    if !(strike > 0.0) {
        return Err(format!("non-positive strike {strike}"));
    }
    let kind = match field(4)? {
        k if k.eq_ignore_ascii_case("call") || k.eq_ignore_ascii_case("c") => OptionKind::Call,
        k if k.eq_ignore_ascii_case("put") || k.eq_ignore_ascii_case("p") => OptionKind::Put,
        other => return Err(format!("unknown option type {other:?}")),
    };
    let bid = number(5)?;
    let ask = number(6)?;
    if !(bid > 0.0) {
        return Err(format!("zero or negative bid {bid}"));
    }
    if !(ask >= bid) {
        return Err(format!("crossed market: bid {bid} over ask {ask}"));
    }
    Ok(QuoteRecord {
        symbol,
        quote_date,
        expiry_date,
        strike,
        kind,
        bid,
        ask,
        volume: count(7)?,
        open_interest: count(8)?,
    })
}

/// Write records back out in the same column layout [`parse_chain_csv`]
/// accepts.
pub fn write_chain_csv<W: Write>(records: &[QuoteRecord], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(COLUMNS)?;
    for r in records {
        let kind = match r.kind {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        };
        csv.write_record([
            r.symbol.as_str(),
            &r.quote_date.to_string(),
            &r.expiry_date.to_string(),
            &r.strike.to_string(),
            kind,
            &r.bid.to_string(),
            &r.ask.to_string(),
            &r.volume.to_string(),
            &r.open_interest.to_string(),
        ])?;
    }
    csv.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(())
}

/// Weekdays in `(quote, expiry]`, skipping listed holidays. This is the
/// day-count the density horizon is measured in.
pub fn trading_days_between(
    quote: NaiveDate,
    expiry: NaiveDate,
    holidays: &[NaiveDate],
) -> Result<u32> {
    if expiry <= quote {
        return Err(Error::NonPositiveSpan {
            quote_date: quote,
            expiry,
        });
    }
    let mut days = 0u32;
    let mut d = quote;
    while d < expiry {
        d = d.succ_opt().expect("date overflow");
        let weekday = d.weekday();
        if weekday != Weekday::Sat && weekday != Weekday::Sun && !holidays.contains(&d) {
            days += 1;
        }
    }
    Ok(days)
}

/// All quotes of one symbol and expiry observed on one date, split by side
/// and sorted by strike.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionChain {
    pub symbol: String,
    pub quote_date: NaiveDate,
    pub expiry_date: NaiveDate,
    pub calls: Vec<QuoteRecord>,
    pub puts: Vec<QuoteRecord>,
}

impl OptionChain {
    /// Assemble a chain from records that must all share symbol, quote date
    /// and expiry.
    pub fn new(records: Vec<QuoteRecord>) -> Result<Self> {
        let first = records.first().ok_or(Error::TooFewStrikes {
            needed: 1,
            found: 0,
        })?;
        let key = (
            first.symbol.clone(),
            first.quote_date,
            first.expiry_date,
        );
        if records
            .iter()
            .any(|r| (r.symbol.as_str(), r.quote_date, r.expiry_date) != (key.0.as_str(), key.1, key.2))
        {
            return Err(Error::MixedChain);
        }
        let mut calls: Vec<QuoteRecord> = Vec::new();
        let mut puts: Vec<QuoteRecord> = Vec::new();
        for r in records {
            let side = match r.kind {
                OptionKind::Call => &mut calls,
                OptionKind::Put => &mut puts,
            };
            match side.iter_mut().find(|q| q.strike == r.strike) {
                // duplicated strike: keep the more actively traded quote
                Some(existing) => {
                    if r.volume > existing.volume {
                        *existing = r;
                    }
                }
                None => side.push(r),
            }
        }
        calls.sort_by(|a, b| a.strike.total_cmp(&b.strike));
        puts.sort_by(|a, b| a.strike.total_cmp(&b.strike));
        Ok(Self {
            symbol: key.0,
            quote_date: key.1,
            expiry_date: key.2,
            calls,
            puts,
        })
    }

    pub fn days_to_expiry(&self, holidays: &[NaiveDate]) -> Result<u32> {
        trading_days_between(self.quote_date, self.expiry_date, holidays)
    }
}

/// Partition records into chains keyed by symbol, quote date and expiry,
/// ordered by key.
pub fn group_chains(records: Vec<QuoteRecord>) -> Result<Vec<OptionChain>> {
    let mut buckets: BTreeMap<(String, NaiveDate, NaiveDate), Vec<QuoteRecord>> = BTreeMap::new();
    for r in records {
        buckets
            .entry((r.symbol.clone(), r.quote_date, r.expiry_date))
            .or_default()
            .push(r);
    }
    buckets.into_values().map(OptionChain::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    const HEADER: &str = "symbol,quote_date,expiry_date,strike,type,bid,ask,volume,open_interest";

    #[test]
    fn parses_clean_rows() {
        let data = format!(
            "{HEADER}\nXYZ,2018-02-28,2018-03-16,100,call,2.10,2.30,15,120\n\
             XYZ,2018-02-28,2018-03-16,105,put,1.05,1.10,3,40\n"
        );
        let out = parse_chain_csv(data.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(out.rejects.is_empty());
        assert_eq!(out.records[0].kind, OptionKind::Call);
        assert_eq!(out.records[0].mid(), 2.2);
        assert_eq!(out.records[1].kind, OptionKind::Put);
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        let data = format!(
            "{HEADER}\n\
             XYZ,2018-02-28,2018-03-16,100,call,0.0,2.30,15,120\n\
             XYZ,2018-02-28,2018-03-16,100,call,2.50,2.30,15,120\n\
             XYZ,2018-02-28,2018-03-16,abc,call,2.10,2.30,15,120\n\
             XYZ,2018-02-28,2018-02-01,100,call,2.10,2.30,15,120\n\
             XYZ,2018-02-28,2018-03-16,100,straddle,2.10,2.30,15,120\n\
             XYZ,2018-02-28,2018-03-16,100,call,2.10,2.30,15,120\n"
        );
        let out = parse_chain_csv(data.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.rejects.len(), 5);
        assert_eq!(out.rejects[0].line, 2);
        assert!(out.rejects[0].reason.contains("bid"));
        assert!(out.rejects[1].reason.contains("crossed"));
        assert!(out.rejects[3].reason.contains("not after"));
    }

    #[test]
    fn missing_column_is_a_file_error() {
        let data = "symbol,quote_date,expiry_date,strike,type,bid,ask,volume\n";
        assert!(matches!(
            parse_chain_csv(data.as_bytes()),
            Err(Error::MissingColumn(c)) if c == "open_interest"
        ));
    }

    #[test]
    fn header_order_is_free() {
        let data = "bid,ask,symbol,type,strike,quote_date,expiry_date,open_interest,volume\n\
                    1.0,1.2,ABC,P,50,2018-02-28,2018-03-16,10,5\n";
        let out = parse_chain_csv(data.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].kind, OptionKind::Put);
        assert_eq!(out.records[0].strike, 50.0);
        assert_eq!(out.records[0].volume, 5);
    }

    #[test]
    fn trading_day_counts() {
        // Wed to Fri across a month boundary
        assert_eq!(
            trading_days_between(date("2018-02-28"), date("2018-03-02"), &[]).unwrap(),
            2
        );
        // Fri to Mon is a single trading day
        assert_eq!(
            trading_days_between(date("2018-03-02"), date("2018-03-05"), &[]).unwrap(),
            1
        );
        // a full calendar week holds five
        assert_eq!(
            trading_days_between(date("2018-03-02"), date("2018-03-09"), &[]).unwrap(),
            5
        );
        // holidays on weekdays drop out
        assert_eq!(
            trading_days_between(date("2018-03-02"), date("2018-03-09"), &[date("2018-03-07")])
                .unwrap(),
            4
        );
        assert!(matches!(
            trading_days_between(date("2018-03-02"), date("2018-03-02"), &[]),
            Err(Error::NonPositiveSpan { .. })
        ));
    }

    fn record(symbol: &str, expiry: &str, strike: f64, kind: OptionKind, volume: u64) -> QuoteRecord {
        QuoteRecord {
            symbol: symbol.to_string(),
            quote_date: date("2018-02-28"),
            expiry_date: date(expiry),
            strike,
            kind,
            bid: 1.0,
            ask: 1.2,
            volume,
            open_interest: 0,
        }
    }

    #[test]
    fn grouping_sorts_and_dedups() {
        let records = vec![
            record("XYZ", "2018-03-16", 105.0, OptionKind::Call, 5),
            record("XYZ", "2018-03-16", 100.0, OptionKind::Call, 7),
            record("XYZ", "2018-03-16", 100.0, OptionKind::Call, 9),
            record("XYZ", "2018-03-16", 100.0, OptionKind::Put, 1),
            record("XYZ", "2018-04-20", 100.0, OptionKind::Call, 2),
            record("ABC", "2018-03-16", 50.0, OptionKind::Call, 3),
        ];
        let chains = group_chains(records).unwrap();
        assert_eq!(chains.len(), 3);
        assert_eq!(chains[0].symbol, "ABC");
        let xyz = &chains[1];
        assert_eq!(xyz.symbol, "XYZ");
        assert_eq!(xyz.expiry_date, date("2018-03-16"));
        assert_eq!(xyz.calls.len(), 2);
        assert_eq!(xyz.calls[0].strike, 100.0);
        assert_eq!(xyz.calls[0].volume, 9);
        assert_eq!(xyz.puts.len(), 1);
        assert_eq!(chains[2].expiry_date, date("2018-04-20"));
    }

    #[test]
    fn mixed_chain_is_rejected() {
        let err = OptionChain::new(vec![
            record("XYZ", "2018-03-16", 100.0, OptionKind::Call, 1),
            record("ABC", "2018-03-16", 100.0, OptionKind::Call, 1),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::MixedChain));
    }

    #[test]
    fn bundled_fixture_parses_cleanly() {
        let data = include_str!("../tests/data/synthetic_chain.csv");
        let out = parse_chain_csv(data.as_bytes()).unwrap();
        assert!(out.rejects.is_empty());
        assert!(out.records.len() >= 18);
        let chains = group_chains(out.records).unwrap();
        assert!(!chains.is_empty());
        for chain in &chains {
            for w in chain.calls.windows(2) {
                assert!(w[0].strike < w[1].strike);
            }
        }
    }

    #[test]
    fn bundled_dirty_fixture_rejects_every_row() {
        let data = include_str!("../tests/data/dirty_chain.csv");
        let out = parse_chain_csv(data.as_bytes()).unwrap();
        assert!(out.records.is_empty());
        assert!(!out.rejects.is_empty());
    }

    prop_compose! {
        fn arb_record()(
            symbol in "[A-Z]{1,4}",
            expiry_offset in 1i64..400,
            strike in 1.0f64..500.0,
            is_call in any::<bool>(),
            bid in 0.01f64..50.0,
            spread in 0.0f64..5.0,
            volume in 0u64..10_000,
            open_interest in 0u64..100_000,
        ) -> QuoteRecord {
            QuoteRecord {
                symbol,
                quote_date: date("2018-02-28"),
                expiry_date: date("2018-02-28") + chrono::Days::new(expiry_offset as u64),
                strike,
                kind: if is_call { OptionKind::Call } else { OptionKind::Put },
                bid,
                ask: bid + spread,
                volume,
                open_interest,
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_preserves_records(records in prop::collection::vec(arb_record(), 0..40)) {
            let mut buf = Vec::new();
            write_chain_csv(&records, &mut buf).unwrap();
            let out = parse_chain_csv(buf.as_slice()).unwrap();
            prop_assert!(out.rejects.is_empty());
            prop_assert_eq!(out.records, records);
        }

        #[test]
        fn parsed_records_satisfy_invariants(records in prop::collection::vec(arb_record(), 0..40)) {
            let mut buf = Vec::new();
            write_chain_csv(&records, &mut buf).unwrap();
            let out = parse_chain_csv(buf.as_slice()).unwrap();
            for r in &out.records {
                prop_assert!(r.bid > 0.0);
                prop_assert!(r.ask >= r.bid);
                prop_assert!(r.strike > 0.0);
                prop_assert!(r.expiry_date > r.quote_date);
            }
            let chains = group_chains(out.records).unwrap();
            for chain in &chains {
                for side in [&chain.calls, &chain.puts] {
                    for w in side.windows(2) {
                        prop_assert!(w[0].strike < w[1].strike);
                    }
                }
            }
        }

        #[test]
        fn corrupted_numeric_fields_become_rejects(
            records in prop::collection::vec(arb_record(), 1..20),
            corrupt in ".*[^0-9.].*",
        ) {
            let mut buf = Vec::new();
            write_chain_csv(&records, &mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
            let fields: Vec<&str> = lines[1].split(',').collect();
            let mut broken = fields.clone();
            let owned = corrupt.replace([',', '"', '\n', '\r'], "x");
            broken[3] = &owned;
            lines[1] = broken.join(",");
            let rebuilt = lines.join("\n");
            let out = parse_chain_csv(rebuilt.as_bytes()).unwrap();
            prop_assert_eq!(out.records.len() + out.rejects.len(), records.len());
        }
    }
}
