//! Aggregation of simulation records into report tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConnectivityClass, MSAT_PER_SAT};
use crate::sim::SimRecord;
use crate::weights::ClientVariant;

pub const DEFAULT_MIN_COMMON_SUCCESSES: usize = 5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("bad bin `{0}`: expected `10^a-10^b` or `lo-hi` in sats")]
    Bin(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Half-open amount range `[lo, hi)` in msat; `hi = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmountBin {
    pub lo_msat: u64,
    pub hi_msat: Option<u64>,
}

impl AmountBin {
    pub fn contains(&self, amt_msat: u64) -> bool {
        amt_msat >= self.lo_msat && self.hi_msat.map_or(true, |h| amt_msat < h)
    }

    pub fn label(&self) -> String {
        let lo = decade_label(self.lo_msat).unwrap_or_else(|| format!("{}msat", self.lo_msat));
        let hi = match self.hi_msat {
            Some(h) => decade_label(h).unwrap_or_else(|| format!("{h}msat")),
            None => match default_bins().last() {
                Some(last) if last.lo_msat == self.lo_msat => "10^8".into(),
                _ => "inf".into(),
            },
        };
        format!("{lo}-{hi}")
    }
}

/// `10^k` for whole-sat powers of ten; 1 msat reads as `10^0`.
fn decade_label(msat: u64) -> Option<String> {
    if msat == 1 {
        return Some("10^0".into());
    }
    if msat % MSAT_PER_SAT != 0 {
        return None;
    }
    let mut sats = msat / MSAT_PER_SAT;
    let mut k = 0;
    while sats % 10 == 0 && sats > 1 {
        sats /= 10;
        k += 1;
    }
    (sats == 1).then(|| format!("10^{k}"))
}

/// Sat decades `[10^k, 10^(k+1))` for `k = 0..8`. The first bin starts at
/// 1 msat so sub-sat amounts are counted; the last bin is unbounded.
pub fn default_bins() -> Vec<AmountBin> {
    (0..8u32)
        .map(|k| AmountBin {
            lo_msat: if k == 0 { 1 } else { 10u64.pow(k) * MSAT_PER_SAT },
            hi_msat: (k < 7).then(|| 10u64.pow(k + 1) * MSAT_PER_SAT),
        })
        .collect()
}

impl FromStr for AmountBin {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(b) = default_bins().into_iter().find(|b| b.label() == s) {
            return Ok(b);
        }
        let err = || MetricsError::Bin(s.into());
        let (lo, hi) = s.split_once('-').ok_or_else(err)?;
        let sats = |t: &str| -> Result<Option<u64>, MetricsError> {
            let t = t.trim();
            if t == "inf" {
                return Ok(None);
            }
            let v = match t.split_once('^') {
                Some(("10", e)) => 10f64.powi(e.parse::<i32>().map_err(|_| err())?),
                _ => t.parse::<f64>().map_err(|_| err())?,
            };
            if !(v >= 0.0 && v.is_finite()) {
                return Err(err());
            }
            Ok(Some((v * MSAT_PER_SAT as f64).round() as u64))
        };
        let lo_msat = sats(lo)?.ok_or_else(err)?.max(1);
        let hi_msat = sats(hi)?;
        if hi_msat.is_some_and(|h| h <= lo_msat) {
            return Err(err());
        }
        Ok(AmountBin { lo_msat, hi_msat })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Success rate in percent.
    Rate,
    /// Fee ratio in percent.
    FeeRatio,
    Mean,
}

impl Unit {
    pub fn decimals(self) -> usize {
        match self {
            Unit::Rate | Unit::Mean => 3,
            Unit::FeeRatio => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<u64>,
    pub denominator: u64,
}

impl Cell {
    pub fn rate(successes: u64, attempts: u64) -> Option<Cell> {
        (attempts > 0).then(|| Cell {
            value: 100.0 * successes as f64 / attempts as f64,
            numerator: Some(successes),
            denominator: attempts,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub unit: Unit,
    /// One entry per column; `None` when there were no samples.
    pub cells: Vec<Option<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub title: String,
    pub row_header: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub metadata: BTreeMap<String, String>,
}

impl MetricsTable {
    fn new(title: &str, row_header: &str, columns: Vec<String>) -> Self {
        MetricsTable {
            title: title.into(),
            row_header: row_header.into(),
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Rate table built from labelled rows.
    pub fn transposed(title: &str, row_header: &str, columns: Vec<String>, rows: Vec<(String, Vec<Option<Cell>>)>) -> Self {
        let mut t = Self::new(title, row_header, columns);
        t.rows = rows.into_iter().map(|(label, cells)| Row { label, unit: Unit::Rate, cells }).collect();
        t
    }

    pub fn column(&self, i: usize) -> Vec<Option<Cell>> {
        self.rows.iter().map(|r| r.cells.get(i).copied().flatten()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn cell(&self, row: &str, column: &str) -> Option<Cell> {
        self.row(row)?.cells.get(self.column_index(column)?).copied().flatten()
    }
}

/// Configured clients in the canonical report order.
fn ordered(clients: &[ClientVariant]) -> Vec<ClientVariant> {
    ClientVariant::ALL.into_iter().filter(|c| clients.contains(c)).collect()
}

/// Clients present in the records, in canonical order.
pub fn clients_in(records: &[SimRecord]) -> Vec<ClientVariant> {
    let seen: Vec<ClientVariant> = records.iter().flat_map(|r| r.results.iter().map(|c| c.client)).collect();
    ordered(&seen)
}

fn rate_cells(records: &[&SimRecord], clients: &[ClientVariant]) -> Vec<Option<Cell>> {
    clients
        .iter()
        .map(|&c| {
            let (mut ok, mut n) = (0, 0);
            for r in records {
                if let Some(res) = r.result(c) {
                    n += 1;
                    ok += res.succeeded() as u64;
                }
            }
            Cell::rate(ok, n)
        })
        .collect()
}

fn names(clients: &[ClientVariant]) -> Vec<String> {
    clients.iter().map(|c| c.name().to_string()).collect()
}

/// Success rate per client for the transactions in each bin.
pub fn success_rates_by_bin(records: &[SimRecord], bins: &[AmountBin], clients: &[ClientVariant]) -> MetricsTable {
    let clients = ordered(clients);
    let mut t = MetricsTable::new("Success rate (%) by amount", "amount (sat)", names(&clients));
    for bin in bins {
        let in_bin: Vec<&SimRecord> = records.iter().filter(|r| bin.contains(r.amt_msat)).collect();
        t.rows.push(Row { label: bin.label(), unit: Unit::Rate, cells: rate_cells(&in_bin, &clients) });
    }
    t.metadata.insert("bins".into(), "half-open [lo, hi) in sat; first bin from 1 msat; last bin unbounded".into());
    t.metadata.insert("records".into(), records.len().to_string());
    t
}

fn lower_median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    Some(xs[(xs.len() - 1) / 2])
}

fn fee_ratio_cell(cohort: &[&SimRecord], client: ClientVariant) -> Option<Cell> {
    let ratios: Vec<f64> = cohort
        .iter()
        .filter_map(|r| {
            let res = r.result(client).filter(|x| x.succeeded())?;
            Some(res.fee_msat? as f64 / r.amt_msat as f64)
        })
        .collect();
    let n = ratios.len() as u64;
    lower_median(ratios).map(|m| Cell { value: 100.0 * m, numerator: None, denominator: n })
}

fn mean_cell(cohort: &[&SimRecord], client: ClientVariant, f: impl Fn(&crate::sim::ClientResult) -> Option<u64>) -> Option<Cell> {
    let xs: Vec<u64> =
        cohort.iter().filter_map(|r| r.result(client).filter(|x| x.succeeded()).and_then(&f)).collect();
    (!xs.is_empty()).then(|| {
        let total: u64 = xs.iter().sum();
        Cell { value: total as f64 / xs.len() as f64, numerator: Some(total), denominator: xs.len() as u64 }
    })
}

pub const FEE_RATIO_ROW: &str = "fee ratio (%)";
pub const PATH_LENGTH_ROW: &str = "path length";
pub const TIMELOCK_ROW: &str = "timelock";

/// Fee ratio, path length and timelock over the transactions on which at
/// least `min_common_successes` clients succeeded, followed by the fee
/// ratio per bin over the same cohort.
pub fn aggregate_metrics(
    records: &[SimRecord],
    clients: &[ClientVariant],
    min_common_successes: usize,
    bins: &[AmountBin],
) -> MetricsTable {
    let clients = ordered(clients);
    let cohort: Vec<&SimRecord> = records.iter().filter(|r| r.successes() >= min_common_successes).collect();
    let mut t = MetricsTable::new("Performance metrics", "metric", names(&clients));
    let row = |label: String, unit: Unit, f: &dyn Fn(ClientVariant) -> Option<Cell>| Row {
        label,
        unit,
        cells: clients.iter().map(|&c| f(c)).collect(),
    };
    t.rows.push(row(FEE_RATIO_ROW.into(), Unit::FeeRatio, &|c| fee_ratio_cell(&cohort, c)));
    t.rows.push(row(PATH_LENGTH_ROW.into(), Unit::Mean, &|c| mean_cell(&cohort, c, |x| x.path_len.map(|v| v as u64))));
    t.rows.push(row(TIMELOCK_ROW.into(), Unit::Mean, &|c| mean_cell(&cohort, c, |x| x.timelock)));
    for bin in bins {
        let sub: Vec<&SimRecord> = cohort.iter().copied().filter(|r| bin.contains(r.amt_msat)).collect();
        t.rows.push(row(format!("{FEE_RATIO_ROW} {}", bin.label()), Unit::FeeRatio, &|c| fee_ratio_cell(&sub, c)));
    }
    t.metadata.insert("cohort".into(), format!("transactions with >= {min_common_successes} successful clients"));
    t.metadata.insert("cohort_size".into(), cohort.len().to_string());
    t.metadata.insert("records".into(), records.len().to_string());
    t.metadata.insert("median".into(), "lower median".into());
    t
}

/// Success rates within `bin` for each (sender class, receiver class) pair.
pub fn connectivity_cross_table(records: &[SimRecord], bin: AmountBin, clients: &[ClientVariant]) -> MetricsTable {
    let clients = ordered(clients);
    let mut t = MetricsTable::new(&format!("Success rate (%) by endpoint class, {} sat", bin.label()), "sender->receiver", names(&clients));
    for s in ConnectivityClass::ALL {
        for r in ConnectivityClass::ALL {
            let sub: Vec<&SimRecord> = records
                .iter()
                .filter(|x| x.sender_class == s && x.receiver_class == r && bin.contains(x.amt_msat))
                .collect();
            t.rows.push(Row { label: format!("{s}->{r}"), unit: Unit::Rate, cells: rate_cells(&sub, &clients) });
        }
    }
    t.metadata.insert("bin".into(), bin.label());
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "md" | "markdown" => Ok(TableFormat::Markdown),
            other => Err(format!("unknown table format `{other}`")),
        }
    }
}

const CSV_HEADER: [&str; 6] = ["row", "unit", "column", "value", "numerator", "denominator"];

fn unit_name(u: Unit) -> &'static str {
    match u {
        Unit::Rate => "rate",
        Unit::FeeRatio => "fee_ratio",
        Unit::Mean => "mean",
    }
}

fn parse_unit(s: &str) -> Result<Unit, MetricsError> {
    match s {
        "rate" => Ok(Unit::Rate),
        "fee_ratio" => Ok(Unit::FeeRatio),
        "mean" => Ok(Unit::Mean),
        other => Err(MetricsError::Parse(format!("unknown unit `{other}`"))),
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub fn emit(table: &MetricsTable, format: TableFormat) -> String {
    match format {
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(table).expect("table serializes");
            s.push('\n');
            s
        }
        TableFormat::Csv => emit_csv(table),
        TableFormat::Markdown => emit_markdown(table),
    }
}

fn emit_csv(t: &MetricsTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# title: {}", one_line(&t.title));
    let _ = writeln!(out, "# row_header: {}", one_line(&t.row_header));
    let _ = writeln!(out, "# columns: {}", t.columns.iter().map(|c| one_line(c)).collect::<Vec<_>>().join("|"));
    for (k, v) in &t.metadata {
        let _ = writeln!(out, "# meta.{}: {}", one_line(k), one_line(v));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in &t.rows {
        for (col, cell) in t.columns.iter().zip(&row.cells) {
            let (v, n, d) = match cell {
                Some(c) => (c.value.to_string(), c.numerator.map(|x| x.to_string()).unwrap_or_default(), c.denominator.to_string()),
                None => Default::default(),
            };
            w.write_record([row.label.as_str(), unit_name(row.unit), col, &v, &n, &d]).expect("in-memory write");
        }
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
    out
}

fn emit_markdown(t: &MetricsTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "**{}**\n", t.title);
    let _ = writeln!(out, "| {} | {} |", t.row_header, t.columns.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(t.columns.len()));
    for row in &t.rows {
        let cells: Vec<String> = row
            .cells
            .iter()
            .map(|c| match c {
                Some(c) => format!("{:.*}", row.unit.decimals(), c.value),
                None => "-".into(),
            })
            .collect();
        let _ = writeln!(out, "| {} | {} |", row.label, cells.join(" | "));
    }
    if !t.metadata.is_empty() {
        out.push('\n');
        for (k, v) in &t.metadata {
            let _ = writeln!(out, "- {k}: {v}");
        }
    }
    out
}

/// Inverse of [`emit`] for CSV and JSON.
pub fn parse(text: &str, format: TableFormat) -> Result<MetricsTable, MetricsError> {
    match format {
        TableFormat::Json => serde_json::from_str(text).map_err(|e| MetricsError::Parse(e.to_string())),
        TableFormat::Csv => parse_csv(text),
        TableFormat::Markdown => Err(MetricsError::Parse("markdown tables are not parsed back".into())),
    }
}

fn parse_csv(text: &str) -> Result<MetricsTable, MetricsError> {
    let perr = |m: String| MetricsError::Parse(m);
    let mut t = MetricsTable::new("", "", Vec::new());
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ") {
            Some(meta) => {
                let (k, v) = meta.split_once(": ").unwrap_or((meta.trim_end_matches(':'), ""));
                match k {
                    "title" => t.title = v.into(),
                    "row_header" => t.row_header = v.into(),
                    "columns" => t.columns = if v.is_empty() { Vec::new() } else { v.split('|').map(String::from).collect() },
                    _ => match k.strip_prefix("meta.") {
                        Some(k) => {
                            t.metadata.insert(k.into(), v.into());
                        }
                        None => return Err(perr(format!("unknown header `{k}`"))),
                    },
                }
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let header = rd.headers().map_err(|e| perr(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(perr(format!("unexpected header {header:?}")));
    }
    for rec in rd.records() {
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        let (label, unit, col) = (&rec[0], parse_unit(&rec[1])?, &rec[2]);
        let ci = t.columns.iter().position(|c| c == col).ok_or_else(|| perr(format!("unknown column `{col}`")))?;
        if t.rows.last().map_or(true, |r| r.label != label) {
            t.rows.push(Row { label: label.into(), unit, cells: vec![None; t.columns.len()] });
        }
        let num = |s: &str| -> Result<Option<u64>, MetricsError> {
            if s.is_empty() { Ok(None) } else { s.parse().map(Some).map_err(|_| perr(format!("bad integer `{s}`"))) }
        };
        if !rec[3].is_empty() {
            let value = rec[3].parse::<f64>().map_err(|_| perr(format!("bad value `{}`", &rec[3])))?;
            let denominator = num(&rec[5])?.ok_or_else(|| perr("cell without denominator".into()))?;
            t.rows.last_mut().expect("row pushed").cells[ci] = Some(Cell { value, numerator: num(&rec[4])?, denominator });
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ClientResult, Outcome};
    use proptest::prelude::*;

    fn res(client: ClientVariant, fee: Option<u64>) -> ClientResult {
        ClientResult {
            client,
            outcome: if fee.is_some() { Outcome::Success } else { Outcome::NoPath },
            fee_msat: fee,
            path_len: fee.map(|_| 3),
            timelock: fee.map(|_| 120),
            cost: fee.map(|f| f as f64),
        }
    }

    fn rec(tx: u64, amt: u64, results: Vec<ClientResult>) -> SimRecord {
        SimRecord {
            tx,
            sender: "a".into(),
            receiver: "b".into(),
            sender_class: ConnectivityClass::Well,
            receiver_class: ConnectivityClass::Well,
            amt_msat: amt,
            results,
        }
    }

    #[test]
    fn bins_are_half_open_decades() {
        let bins = default_bins();
        assert_eq!(bins.len(), 8);
        assert_eq!(bins[0].label(), "10^0-10^1");
        assert_eq!(bins[7].label(), "10^7-10^8");
        let at = |amt: u64| bins.iter().position(|b| b.contains(amt)).unwrap();
        assert_eq!(at(1), 0);
        assert_eq!(at(10_000 - 1), 0);
        assert_eq!(at(10_000), 1);
        assert_eq!(at(100_000_000), 5);
        assert_eq!(at(u64::MAX), 7);
        for b in &bins {
            assert_eq!(b.label().parse::<AmountBin>().unwrap(), *b);
        }
        let custom: AmountBin = "1e4-1e5".parse().unwrap();
        assert_eq!(custom, bins[4]);
        assert!("5-3".parse::<AmountBin>().is_err());
    }

    proptest! {
        #[test]
        fn every_amount_lands_in_exactly_one_bin(amt in 1u64..u64::MAX) {
            prop_assert_eq!(default_bins().iter().filter(|b| b.contains(amt)).count(), 1);
        }
    }

    #[test]
    fn hand_counted_rates() {
        let c = [ClientVariant::Cln, ClientVariant::LndApriori];
        let recs = vec![
            rec(0, 5_000, vec![res(c[0], Some(1)), res(c[1], None)]),
            rec(1, 6_000, vec![res(c[0], Some(1)), res(c[1], Some(2))]),
            rec(2, 7_000, vec![res(c[0], None), res(c[1], Some(2))]),
            rec(3, 50_000, vec![res(c[0], Some(1)), res(c[1], Some(2))]),
        ];
        let t = success_rates_by_bin(&recs, &default_bins(), &c);
        // Canonical order puts LND-ap first.
        assert_eq!(t.columns, ["LND-ap", "CLN"]);
        let cell = t.cell("10^0-10^1", "CLN").unwrap();
        assert_eq!((cell.numerator, cell.denominator), (Some(2), 3));
        assert!((cell.value - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.cell("10^1-10^2", "LND-ap").unwrap().value, 100.0);
        assert!(t.cell("10^5-10^6", "CLN").is_none());
    }

    #[test]
    fn cohort_filter_and_lower_median() {
        let five: Vec<ClientVariant> = ClientVariant::ALL[..5].to_vec();
        let mk = |tx, amt, fee, n_ok: usize| {
            rec(tx, amt, five.iter().enumerate().map(|(i, &c)| res(c, (i < n_ok).then_some(fee))).collect())
        };
        let recs = vec![mk(0, 1000, 100, 5), mk(1, 1000, 200, 5), mk(2, 1000, 300, 5), mk(3, 1000, 999, 4)];
        let t = aggregate_metrics(&recs, &five, 5, &default_bins());
        assert_eq!(t.metadata["cohort_size"], "3");
        let f = t.cell(FEE_RATIO_ROW, five[0].name()).unwrap();
        assert!((f.value - 20.0).abs() < 1e-12);
        assert_eq!(f.denominator, 3);
        assert_eq!(lower_median(vec![4.0, 1.0, 3.0, 2.0]), Some(2.0));
        let reversed: Vec<ClientVariant> = five.iter().rev().copied().collect();
        assert_eq!(aggregate_metrics(&recs, &reversed, 5, &default_bins()), t);
    }

    #[test]
    fn cross_table_shape() {
        let c = [ClientVariant::Cln];
        let recs = vec![rec(0, 5_000, vec![res(c[0], Some(1))])];
        let t = connectivity_cross_table(&recs, default_bins()[0], &c);
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.cell("Well->Well", "CLN").unwrap().value, 100.0);
        assert_eq!(t.rows.iter().filter(|r| r.cells[0].is_none()).count(), 8);
    }

    #[test]
    fn emit_parse_emit_is_idempotent() {
        let c = ClientVariant::ALL.to_vec();
        let recs: Vec<SimRecord> = (0..40)
            .map(|i| rec(i, 1 + i * i * 7919, c.iter().enumerate().map(|(j, &v)| res(v, ((i + j as u64) % 3 != 0).then_some(i * 3 + j as u64))).collect()))
            .collect();
        for t in [
            success_rates_by_bin(&recs, &default_bins(), &c),
            aggregate_metrics(&recs, &c, 5, &default_bins()),
            connectivity_cross_table(&recs, default_bins()[2], &c),
        ] {
            for f in [TableFormat::Csv, TableFormat::Json] {
                let a = emit(&t, f);
                let back = parse(&a, f).unwrap();
                assert_eq!(back, t);
                assert_eq!(emit(&back, f), a);
            }
            let md = emit(&t, TableFormat::Markdown);
            let header = md.lines().nth(2).unwrap();
            assert_eq!(header, format!("| {} | {} |", t.row_header, c.iter().map(|v| v.name()).collect::<Vec<_>>().join(" | ")));
        }
    }

    #[test]
    fn markdown_precision() {
        let mut t = MetricsTable::new("t", "r", vec!["x".into()]);
        t.rows.push(Row { label: "a".into(), unit: Unit::Rate, cells: vec![Cell::rate(98103, 100000)] });
        t.rows.push(Row { label: "b".into(), unit: Unit::FeeRatio, cells: vec![Some(Cell { value: 0.01164, numerator: None, denominator: 1 })] });
        let md = emit(&t, TableFormat::Markdown);
        assert!(md.contains("| a | 98.103 |"), "{md}");
        assert!(md.contains("| b | 0.0116 |"), "{md}");
    }
}
