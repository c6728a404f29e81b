//! Snapshot ingestion and serialization.
//!
//! JSON: a top-level array of channel objects
//!
//! ```json
//! [{ "short_channel_id": 769658139648000000, "channel_id": "ab12..",
//!    "capacity_sat": 500000, "node1_id": "02..", "node2_id": "03..",
//!    "node1_policy": { "base_fee_msat": 1000, "fee_rate_ppm": 1,
//!                      "cltv_delta": 40, "htlc_min_msat": 1000,
//!                      "htlc_max_msat": 495000000 },
//!    "node2_policy": { ... } }]
//! ```
//!
//! `node1_policy` is the direction `node1_id -> node2_id`. The CSV variant has
//! one row per direction with the columns of [`CsvRow`]; each row is the
//! direction `node1_id -> node2_id`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    ChannelGraph, ChannelId, GraphBuilder, GraphError, NodeId, PolicyRecord, ShortChannelId,
    MSAT_PER_SAT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Json,
    Csv,
}

impl FromStr for SnapshotFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(SnapshotFormat::Json),
            "csv" => Ok(SnapshotFormat::Csv),
            other => Err(format!("unknown snapshot format `{other}`")),
        }
    }
}

impl SnapshotFormat {
    /// Guess from a file extension, defaulting to JSON.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => SnapshotFormat::Csv,
            _ => SnapshotFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DirectionJson {
    base_fee_msat: u64,
    fee_rate_ppm: u64,
    cltv_delta: u32,
    htlc_min_msat: u64,
    htlc_max_msat: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChannelJson {
    short_channel_id: u64,
    channel_id: String,
    capacity_sat: u64,
    node1_id: String,
    node2_id: String,
    node1_policy: DirectionJson,
    node2_policy: DirectionJson,
}

/// One CSV row: the direction `node1_id -> node2_id` of a channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvRow {
    pub short_channel_id: u64,
    pub channel_id: String,
    pub capacity_sat: u64,
    pub node1_id: String,
    pub node2_id: String,
    pub base_fee_msat: u64,
    pub fee_rate_ppm: u64,
    pub cltv_delta: u32,
    pub htlc_min_msat: u64,
    pub htlc_max_msat: u64,
}

fn to_record(
    scid: u64,
    channel_id: &str,
    capacity_sat: u64,
    source: &str,
    target: &str,
    d: &DirectionJson,
    location: &str,
) -> Result<PolicyRecord, GraphError> {
    let capacity_msat = capacity_sat.checked_mul(MSAT_PER_SAT).ok_or_else(|| GraphError::Malformed {
        location: location.to_owned(),
        field: "capacity_sat".into(),
        message: "overflows msat range".into(),
    })?;
    Ok(PolicyRecord {
        channel_id: ChannelId(channel_id.to_owned()),
        short_channel_id: ShortChannelId(scid),
        source: NodeId(source.to_owned()),
        target: NodeId(target.to_owned()),
        capacity_msat,
        base_fee_msat: d.base_fee_msat,
        fee_rate_ppm: d.fee_rate_ppm,
        cltv_delta: d.cltv_delta,
        htlc_min_msat: d.htlc_min_msat,
        htlc_max_msat: d.htlc_max_msat,
    })
}

/// Reads a snapshot. `tip_height` overrides the default tip (the largest
/// funding height in the snapshot).
pub fn load_snapshot(
    mut source: impl Read,
    format: SnapshotFormat,
    tip_height: Option<u32>,
) -> Result<ChannelGraph, GraphError> {
    let mut builder = GraphBuilder::new();
    if let Some(h) = tip_height {
        builder.tip_height(h);
    }
    match format {
        SnapshotFormat::Json => {
            let mut text = String::new();
            source.read_to_string(&mut text)?;
            let values: Vec<serde_json::Value> =
                serde_json::from_str(&text).map_err(|e| GraphError::Malformed {
                    location: format!("line {}, column {}", e.line(), e.column()),
                    field: "<document>".into(),
                    message: e.to_string(),
                })?;
            for (i, v) in values.into_iter().enumerate() {
                let location = format!("channel #{i}");
                let c: ChannelJson = serde_json::from_value(v).map_err(|e| GraphError::Malformed {
                    location: location.clone(),
                    field: missing_field(&e.to_string()),
                    message: e.to_string(),
                })?;
                builder.policy(to_record(
                    c.short_channel_id,
                    &c.channel_id,
                    c.capacity_sat,
                    &c.node1_id,
                    &c.node2_id,
                    &c.node1_policy,
                    &location,
                )?);
                builder.policy(to_record(
                    c.short_channel_id,
                    &c.channel_id,
                    c.capacity_sat,
                    &c.node2_id,
                    &c.node1_id,
                    &c.node2_policy,
                    &location,
                )?);
            }
        }
        SnapshotFormat::Csv => {
            let mut reader = csv::Reader::from_reader(source);
            let mut seen: BTreeMap<String, usize> = BTreeMap::new();
            for row in reader.deserialize::<CsvRow>() {
                let row = row.map_err(|e| {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    let field = match e.kind() {
                        csv::ErrorKind::Deserialize { err, .. } => err
                            .field()
                            .map(|f| CSV_COLUMNS.get(f as usize).copied().unwrap_or("?").to_owned())
                            .unwrap_or_else(|| "?".into()),
                        _ => "<row>".into(),
                    };
                    GraphError::Malformed {
                        location: format!("line {line}"),
                        field,
                        message: e.to_string(),
                    }
                })?;
                *seen.entry(row.channel_id.clone()).or_default() += 1;
                let d = DirectionJson {
                    base_fee_msat: row.base_fee_msat,
                    fee_rate_ppm: row.fee_rate_ppm,
                    cltv_delta: row.cltv_delta,
                    htlc_min_msat: row.htlc_min_msat,
                    htlc_max_msat: row.htlc_max_msat,
                };
                builder.policy(to_record(
                    row.short_channel_id,
                    &row.channel_id,
                    row.capacity_sat,
                    &row.node1_id,
                    &row.node2_id,
                    &d,
                    &row.channel_id,
                )?);
            }
            if let Some((id, _)) = seen.iter().find(|(_, &n)| n == 1) {
                return Err(GraphError::InvalidPolicy {
                    channel_id: id.clone(),
                    reason: "only one direction listed".into(),
                });
            }
        }
    }
    builder.build()
}

const CSV_COLUMNS: [&str; 10] = [
    "short_channel_id",
    "channel_id",
    "capacity_sat",
    "node1_id",
    "node2_id",
    "base_fee_msat",
    "fee_rate_ppm",
    "cltv_delta",
    "htlc_min_msat",
    "htlc_max_msat",
];

fn missing_field(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("<record>").to_owned()
}

fn direction(graph: &ChannelGraph, idx: super::PolicyIdx) -> DirectionJson {
    let p = graph.policy(idx);
    DirectionJson {
        base_fee_msat: p.base_fee_msat,
        fee_rate_ppm: p.fee_rate_ppm,
        cltv_delta: p.cltv_delta,
        htlc_min_msat: p.htlc_min_msat,
        htlc_max_msat: p.htlc_max_msat,
    }
}

/// Serializes a graph in channel-id order. Every channel needs both
/// directions and a whole-satoshi capacity.
pub fn write_snapshot(graph: &ChannelGraph, mut out: impl Write, format: SnapshotFormat) -> Result<(), GraphError> {
    let mut channels = Vec::with_capacity(graph.channel_count());
    for ch in graph.channels() {
        if ch.directions.len() != 2 {
            return Err(GraphError::InvalidPolicy {
                channel_id: ch.id.0.clone(),
                reason: "cannot serialize a one-directional channel".into(),
            });
        }
        if ch.capacity_msat % MSAT_PER_SAT != 0 {
            return Err(GraphError::InvalidPolicy {
                channel_id: ch.id.0.clone(),
                reason: "capacity is not a whole number of satoshis".into(),
            });
        }
        let (d1, d2) = (ch.directions[0], ch.directions[1]);
        let p1 = graph.policy(d1);
        channels.push(ChannelJson {
            short_channel_id: ch.short_channel_id.0,
            channel_id: ch.id.0.clone(),
            capacity_sat: ch.capacity_msat / MSAT_PER_SAT,
            node1_id: graph.node_id(p1.source).0.clone(),
            node2_id: graph.node_id(p1.target).0.clone(),
            node1_policy: direction(graph, d1),
            node2_policy: direction(graph, d2),
        });
    }
    match format {
        SnapshotFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &channels).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        SnapshotFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for c in &channels {
                for (a, b, d) in [
                    (&c.node1_id, &c.node2_id, &c.node1_policy),
                    (&c.node2_id, &c.node1_id, &c.node2_policy),
                ] {
                    w.serialize(CsvRow {
                        short_channel_id: c.short_channel_id,
                        channel_id: c.channel_id.clone(),
                        capacity_sat: c.capacity_sat,
                        node1_id: a.clone(),
                        node2_id: b.clone(),
                        base_fee_msat: d.base_fee_msat,
                        fee_rate_ppm: d.fee_rate_ppm,
                        cltv_delta: d.cltv_delta,
                        htlc_min_msat: d.htlc_min_msat,
                        htlc_max_msat: d.htlc_max_msat,
                    })
                    .map_err(|e| std::io::Error::other(e.to_string()))?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn snapshot_bytes(graph: &ChannelGraph, format: SnapshotFormat) -> Result<Vec<u8>, GraphError> {
    let mut buf = Vec::new();
    write_snapshot(graph, &mut buf, format)?;
    Ok(buf)
}
