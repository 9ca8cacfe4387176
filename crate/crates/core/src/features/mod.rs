//! Turns a closed [`FlowState`] into the named, ordered feature vector and
//! writes flow CSV files in dictionary order.

mod dictionary;

pub use dictionary::{
    feature_dictionary, learnable_index, learnable_names, lookup, ColumnKind, FeatureInfo,
    SCHEMA_VERSION,
};

use std::io::Write;

use crate::flow::{BulkTotals, FlowState};
use crate::numfmt::format_value;
use crate::packet::format_ipv4;

/// Identification columns, carried alongside the numeric vector but never
/// fed to a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowMeta {
    pub flow_id: String,
    pub src_ip: u32,
    pub src_port: u16,
    pub dst_ip: u32,
    pub dst_port: u16,
    pub protocol: u8,
    pub timestamp_us: i64,
}

#[derive(Debug, Clone)]
pub struct FeatureVector {
    pub meta: FlowMeta,
    /// Parallel to [`learnable_names`].
    pub values: Vec<f64>,
    pub label: String,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        learnable_index(name).map(|i| self.values[i])
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn bulk_bytes_avg(b: &BulkTotals) -> f64 {
    ratio(b.bytes as f64, b.bulks as f64)
}

fn bulk_pkts_avg(b: &BulkTotals) -> f64 {
    ratio(b.packets as f64, b.bulks as f64)
}

fn bulk_rate_avg(b: &BulkTotals) -> f64 {
    ratio(b.bytes as f64, b.duration_us as f64 / 1e6)
}

/// Pure finalization of a sealed flow into the canonical feature vector.
pub fn finalize(flow: &FlowState, label: &str) -> FeatureVector {
    let (src_ip, src_port) = flow.fwd_endpoint;
    let (dst_ip, dst_port) = if (flow.key.ip_a, flow.key.port_a) == flow.fwd_endpoint {
        (flow.key.ip_b, flow.key.port_b)
    } else {
        (flow.key.ip_a, flow.key.port_a)
    };
    let meta = FlowMeta {
        flow_id: format!(
            "{}:{}-{}:{}-{}-{}",
            format_ipv4(src_ip),
            src_port,
            format_ipv4(dst_ip),
            dst_port,
            flow.key.protocol,
            flow.start_ts_us
        ),
        src_ip,
        src_port,
        dst_ip,
        dst_port,
        protocol: flow.key.protocol,
        timestamp_us: flow.start_ts_us,
    };

    let subflows = flow.subflow_count as f64;
    let value_of = |name: &str| -> f64 {
        match name {
            "flow_duration" => (flow.last_ts_us - flow.start_ts_us) as f64,
            "fwd_pkt_cnt" => flow.fwd_pkts as f64,
            "bwd_pkt_cnt" => flow.bwd_pkts as f64,
            "fwd_pkt_len_tot" => flow.fwd_len.sum(),
            "fwd_pkt_len_max" => flow.fwd_len.max(),
            "fwd_pkt_len_min" => flow.fwd_len.min(),
            "fwd_pkt_len_mean" => flow.fwd_len.mean(),
            "fwd_pkt_len_std" => flow.fwd_len.std(),
            "bwd_pkt_len_tot" => flow.bwd_len.sum(),
            "bwd_pkt_len_max" => flow.bwd_len.max(),
            "bwd_pkt_len_min" => flow.bwd_len.min(),
            "bwd_pkt_len_mean" => flow.bwd_len.mean(),
            "bwd_pkt_len_std" => flow.bwd_len.std(),
            "iat_mean" => flow.iat.mean(),
            "iat_std" => flow.iat.std(),
            "iat_max" => flow.iat.max(),
            "iat_min" => flow.iat.min(),
            "fwd_iat_tot" => flow.fwd_iat.sum(),
            "fwd_iat_mean" => flow.fwd_iat.mean(),
            "fwd_iat_std" => flow.fwd_iat.std(),
            "fwd_iat_max" => flow.fwd_iat.max(),
            "fwd_iat_min" => flow.fwd_iat.min(),
            "bwd_iat_tot" => flow.bwd_iat.sum(),
            "bwd_iat_mean" => flow.bwd_iat.mean(),
            "bwd_iat_std" => flow.bwd_iat.std(),
            "bwd_iat_max" => flow.bwd_iat.max(),
            "bwd_iat_min" => flow.bwd_iat.min(),
            "fwd_psh_cnt" => flow.fwd_psh as f64,
            "fwd_urg_cnt" => flow.fwd_urg as f64,
            "bwd_psh_cnt" => flow.bwd_psh as f64,
            "bwd_urg_cnt" => flow.bwd_urg as f64,
            "flag_fin" => flow.flag_counts[0] as f64,
            "flag_syn" => flow.flag_counts[1] as f64,
            "flag_rst" => flow.flag_counts[2] as f64,
            "flag_psh" => flow.flag_counts[3] as f64,
            "flag_ack" => flow.flag_counts[4] as f64,
            "flag_urg" => flow.flag_counts[5] as f64,
            "flag_ece" => flow.flag_counts[6] as f64,
            "flag_cwe" => flow.flag_counts[7] as f64,
            "pkt_len_min" => flow.all_len.min(),
            "pkt_len_max" => flow.all_len.max(),
            "pkt_len_mean" => flow.all_len.mean(),
            "pkt_len_std" => flow.all_len.std(),
            "pkt_len_var" => flow.all_len.variance(),
            "pkt_size_avg" => ratio(flow.all_len.sum(), flow.packet_count() as f64),
            "down_up_ratio" => ratio(flow.bwd_pkts as f64, flow.fwd_pkts as f64),
            "fwd_header_len" => flow.fwd_header_bytes as f64,
            "bwd_header_len" => flow.bwd_header_bytes as f64,
            "fwd_seg_size_avg" => ratio(flow.fwd_payload_bytes as f64, flow.fwd_pkts as f64),
            "bwd_seg_size_avg" => ratio(flow.bwd_payload_bytes as f64, flow.bwd_pkts as f64),
            "fwd_bytes_per_bulk_avg" => bulk_bytes_avg(&flow.bulk_fwd),
            "fwd_pkts_per_bulk_avg" => bulk_pkts_avg(&flow.bulk_fwd),
            "fwd_bulk_rate_avg" => bulk_rate_avg(&flow.bulk_fwd),
            "bwd_bytes_per_bulk_avg" => bulk_bytes_avg(&flow.bulk_bwd),
            "bwd_pkts_per_bulk_avg" => bulk_pkts_avg(&flow.bulk_bwd),
            "bwd_bulk_rate_avg" => bulk_rate_avg(&flow.bulk_bwd),
            "fwd_subflow_pkts_mean" => ratio(flow.fwd_pkts as f64, subflows),
            "fwd_subflow_bytes_mean" => ratio(flow.fwd_payload_bytes as f64, subflows),
            "bwd_subflow_pkts_mean" => ratio(flow.bwd_pkts as f64, subflows),
            "bwd_subflow_bytes_mean" => ratio(flow.bwd_payload_bytes as f64, subflows),
            "init_win_bytes_fwd" => flow.init_win_fwd.unwrap_or(0) as f64,
            "init_win_bytes_bwd" => flow.init_win_bwd.unwrap_or(0) as f64,
            "active_mean" => flow.active.mean(),
            "active_std" => flow.active.std(),
            "active_max" => flow.active.max(),
            "active_min" => flow.active.min(),
            "idle_mean" => flow.idle.mean(),
            "idle_std" => flow.idle.std(),
            "idle_max" => flow.idle.max(),
            "idle_min" => flow.idle.min(),
            "inbound" => 0.0,
            "similar_http" => 0.0,
            other => unreachable!("no rule for learnable column {other}"),
        }
    };

    let values = learnable_names().iter().map(|n| value_of(n)).collect();
    FeatureVector {
        meta,
        values,
        label: label.to_string(),
    }
}

/// Write flow vectors as CSV in dictionary order, label last.
pub fn write_flows_csv<W: Write>(out: W, flows: &[FeatureVector]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = feature_dictionary().iter().map(|f| f.name).collect();
    w.write_record(&header)?;
    for fv in flows {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        record.push(fv.meta.flow_id.clone());
        record.push(format_ipv4(fv.meta.src_ip));
        record.push(fv.meta.src_port.to_string());
        record.push(format_ipv4(fv.meta.dst_ip));
        record.push(fv.meta.dst_port.to_string());
        record.push(fv.meta.protocol.to_string());
        record.push(fv.meta.timestamp_us.to_string());
        for v in &fv.values {
            record.push(format_value(*v));
        }
        record.push(fv.label.clone());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
