//! The canonical feature dictionary: fixed column names, order, units and
//! groups for every flow feature vector this crate emits or loads. The
//! schema is version-stamped; changing any column is a schema bump.

pub const SCHEMA_VERSION: &str = "flow-features-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// Carried for identification; excluded from learning.
    Metadata,
    /// Numeric model input.
    Learnable,
    /// Class label, always the last column.
    Label,
}

#[derive(Debug, Clone, Copy)]
pub struct FeatureInfo {
    pub name: &'static str,
    pub unit: &'static str,
    pub group: &'static str,
    pub description: &'static str,
    pub kind: ColumnKind,
}

use ColumnKind::{Label, Learnable, Metadata};

macro_rules! col {
    ($name:literal, $unit:literal, $group:literal, $kind:expr, $desc:literal) => {
        FeatureInfo {
            name: $name,
            unit: $unit,
            group: $group,
            description: $desc,
            kind: $kind,
        }
    };
}

/// Column order of the CSV schema. Packet "length" is the full length above
/// the link layer (IP header + transport header + payload); "segment" and
/// subflow byte counts use transport payload bytes only.
#[rustfmt::skip]
static DICTIONARY: &[FeatureInfo] = &[
    col!("flow_id", "", "Identification", Metadata, "Forward endpoint, backward endpoint, protocol and start time"),
    col!("src_ip", "", "Identification", Metadata, "Source address of the first packet"),
    col!("src_port", "", "Identification", Metadata, "Source port of the first packet"),
    col!("dst_ip", "", "Identification", Metadata, "Destination address of the first packet"),
    col!("dst_port", "", "Identification", Metadata, "Destination port of the first packet"),
    col!("protocol", "", "Identification", Metadata, "IP protocol number: 6 TCP, 17 UDP"),
    col!("timestamp", "µs", "Time", Metadata, "Flow start, microseconds since epoch"),

    col!("flow_duration", "µs", "Time", Learnable, "Last packet time minus first packet time"),
    col!("fwd_pkt_cnt", "count", "Fwd pkts", Learnable, "Packets in the forward direction"),
    col!("bwd_pkt_cnt", "count", "Bwd pkts", Learnable, "Packets in the backward direction"),
    col!("fwd_pkt_len_tot", "bytes", "Fwd pkts", Learnable, "Total forward packet length"),
    col!("fwd_pkt_len_max", "bytes", "Fwd pkts", Learnable, "Largest forward packet"),
    col!("fwd_pkt_len_min", "bytes", "Fwd pkts", Learnable, "Smallest forward packet"),
    col!("fwd_pkt_len_mean", "bytes", "Fwd pkts", Learnable, "Mean forward packet length"),
    col!("fwd_pkt_len_std", "bytes", "Fwd pkts", Learnable, "Population std of forward packet length"),
    col!("bwd_pkt_len_tot", "bytes", "Bwd pkts", Learnable, "Total backward packet length"),
    col!("bwd_pkt_len_max", "bytes", "Bwd pkts", Learnable, "Largest backward packet"),
    col!("bwd_pkt_len_min", "bytes", "Bwd pkts", Learnable, "Smallest backward packet"),
    col!("bwd_pkt_len_mean", "bytes", "Bwd pkts", Learnable, "Mean backward packet length"),
    col!("bwd_pkt_len_std", "bytes", "Bwd pkts", Learnable, "Population std of backward packet length"),
    col!("iat_mean", "µs", "IAT", Learnable, "Mean inter-arrival time over all packets"),
    col!("iat_std", "µs", "IAT", Learnable, "Population std of inter-arrival time"),
    col!("iat_max", "µs", "IAT", Learnable, "Largest inter-arrival gap"),
    col!("iat_min", "µs", "IAT", Learnable, "Smallest inter-arrival gap"),
    col!("fwd_iat_tot", "µs", "Fwd IAT", Learnable, "Sum of forward inter-arrival gaps"),
    col!("fwd_iat_mean", "µs", "Fwd IAT", Learnable, "Mean forward inter-arrival gap"),
    col!("fwd_iat_std", "µs", "Fwd IAT", Learnable, "Population std of forward inter-arrival gap"),
    col!("fwd_iat_max", "µs", "Fwd IAT", Learnable, "Largest forward inter-arrival gap"),
    col!("fwd_iat_min", "µs", "Fwd IAT", Learnable, "Smallest forward inter-arrival gap"),
    col!("bwd_iat_tot", "µs", "Bwd IAT", Learnable, "Sum of backward inter-arrival gaps"),
    col!("bwd_iat_mean", "µs", "Bwd IAT", Learnable, "Mean backward inter-arrival gap"),
    col!("bwd_iat_std", "µs", "Bwd IAT", Learnable, "Population std of backward inter-arrival gap"),
    col!("bwd_iat_max", "µs", "Bwd IAT", Learnable, "Largest backward inter-arrival gap"),
    col!("bwd_iat_min", "µs", "Bwd IAT", Learnable, "Smallest backward inter-arrival gap"),
    col!("fwd_psh_cnt", "count", "Fwd flags", Learnable, "Forward packets with PSH set"),
    col!("fwd_urg_cnt", "count", "Fwd flags", Learnable, "Forward packets with URG set"),
    col!("bwd_psh_cnt", "count", "Bwd flags", Learnable, "Backward packets with PSH set"),
    col!("bwd_urg_cnt", "count", "Bwd flags", Learnable, "Backward packets with URG set"),
    col!("flag_fin", "count", "Flags count", Learnable, "Packets with FIN set, both directions"),
    col!("flag_syn", "count", "Flags count", Learnable, "Packets with SYN set, both directions"),
    col!("flag_rst", "count", "Flags count", Learnable, "Packets with RST set, both directions"),
    col!("flag_psh", "count", "Flags count", Learnable, "Packets with PSH set, both directions"),
    col!("flag_ack", "count", "Flags count", Learnable, "Packets with ACK set, both directions"),
    col!("flag_urg", "count", "Flags count", Learnable, "Packets with URG set, both directions"),
    col!("flag_cwe", "count", "Flags count", Learnable, "Packets with CWR set, both directions"),
    col!("flag_ece", "count", "Flags count", Learnable, "Packets with ECE set, both directions"),
    col!("pkt_len_min", "bytes", "Pkts len/size", Learnable, "Smallest packet either direction"),
    col!("pkt_len_max", "bytes", "Pkts len/size", Learnable, "Largest packet either direction"),
    col!("pkt_len_mean", "bytes", "Pkts len/size", Learnable, "Mean packet length either direction"),
    col!("pkt_len_std", "bytes", "Pkts len/size", Learnable, "Population std of packet length"),
    col!("pkt_len_var", "bytes²", "Pkts len/size", Learnable, "Population variance of packet length"),
    col!("pkt_size_avg", "bytes", "Pkts len/size", Learnable, "Total bytes over total packets"),
    col!("down_up_ratio", "ratio", "Pkt loss", Learnable, "Backward packets over forward packets"),
    col!("fwd_header_len", "bytes", "Fwd pkt header", Learnable, "Total forward IP+transport header bytes"),
    col!("bwd_header_len", "bytes", "Bwd pkt header", Learnable, "Total backward IP+transport header bytes"),
    col!("fwd_seg_size_avg", "bytes", "Fwd pkt header", Learnable, "Forward payload bytes per forward packet"),
    col!("bwd_seg_size_avg", "bytes", "Bwd pkt header", Learnable, "Backward payload bytes per backward packet"),
    col!("fwd_bytes_per_bulk_avg", "bytes", "Fwd pkt header", Learnable, "Payload bytes per forward bulk"),
    col!("fwd_pkts_per_bulk_avg", "count", "Fwd pkt header", Learnable, "Packets per forward bulk"),
    col!("fwd_bulk_rate_avg", "bytes/s", "Fwd pkt header", Learnable, "Forward bulk bytes over bulk time"),
    col!("bwd_bytes_per_bulk_avg", "bytes", "Bwd pkt header", Learnable, "Payload bytes per backward bulk"),
    col!("bwd_pkts_per_bulk_avg", "count", "Bwd pkt header", Learnable, "Packets per backward bulk"),
    col!("bwd_bulk_rate_avg", "bytes/s", "Bwd pkt header", Learnable, "Backward bulk bytes over bulk time"),
    col!("fwd_subflow_pkts_mean", "count", "Subflow", Learnable, "Forward packets per subflow"),
    col!("fwd_subflow_bytes_mean", "bytes", "Subflow", Learnable, "Forward payload bytes per subflow"),
    col!("bwd_subflow_pkts_mean", "count", "Subflow", Learnable, "Backward packets per subflow"),
    col!("bwd_subflow_bytes_mean", "bytes", "Subflow", Learnable, "Backward payload bytes per subflow"),
    col!("init_win_bytes_fwd", "bytes", "Init win bytes", Learnable, "Advertised window of the first forward packet"),
    col!("init_win_bytes_bwd", "bytes", "Init win bytes", Learnable, "Advertised window of the first backward packet"),
    col!("active_mean", "µs", "Active/idle", Learnable, "Mean active segment length"),
    col!("active_std", "µs", "Active/idle", Learnable, "Population std of active segment length"),
    col!("active_max", "µs", "Active/idle", Learnable, "Largest active segment"),
    col!("active_min", "µs", "Active/idle", Learnable, "Smallest active segment"),
    col!("idle_mean", "µs", "Active/idle", Learnable, "Mean idle gap"),
    col!("idle_std", "µs", "Active/idle", Learnable, "Population std of idle gaps"),
    col!("idle_max", "µs", "Active/idle", Learnable, "Largest idle gap"),
    col!("idle_min", "µs", "Active/idle", Learnable, "Smallest idle gap"),
    // Carried for schema compatibility; always 0 here (no defining
    // procedure exists for them).
    col!("inbound", "flag", "Other labels", Learnable, "Constant 0"),
    col!("similar_http", "flag", "Other labels", Learnable, "Constant 0"),

    col!("label", "", "Label", Label, "Class name; benign maps to class 0"),
];

pub fn feature_dictionary() -> &'static [FeatureInfo] {
    DICTIONARY
}

pub fn lookup(name: &str) -> Option<&'static FeatureInfo> {
    DICTIONARY.iter().find(|f| f.name == name)
}

/// Names of the numeric model-input columns, in schema order.
pub fn learnable_names() -> Vec<&'static str> {
    DICTIONARY
        .iter()
        .filter(|f| f.kind == ColumnKind::Learnable)
        .map(|f| f.name)
        .collect()
}

/// Index of a column within the learnable block, if it is learnable.
pub fn learnable_index(name: &str) -> Option<usize> {
    learnable_names().iter().position(|&n| n == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_lookups() {
        let rst = lookup("flag_rst").unwrap();
        assert_eq!(rst.group, "Flags count");
        assert_eq!(rst.unit, "count");
        let idle = lookup("idle_mean").unwrap();
        assert_eq!(idle.group, "Active/idle");
        assert_eq!(idle.unit, "µs");
        assert!(lookup("no_such_col").is_none());
    }

    #[test]
    fn shape_and_ordering() {
        let dict = feature_dictionary();
        assert_eq!(dict.len(), 80);
        assert_eq!(dict[0].name, "flow_id");
        assert_eq!(dict.last().unwrap().name, "label");
        assert_eq!(dict.iter().filter(|f| f.kind == Metadata).count(), 7);
        assert_eq!(learnable_names().len(), 72);
        // no duplicate names
        let mut names: Vec<&str> = dict.iter().map(|f| f.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 80);
    }

    #[test]
    fn named_columns_from_downstream_reports_exist() {
        for name in [
            "flag_rst",
            "pkt_len_std",
            "fwd_subflow_bytes_mean",
            "flow_duration",
            "bwd_pkt_len_mean",
            "bwd_pkt_len_tot",
            "iat_max",
            "iat_mean",
            "iat_std",
            "fwd_iat_tot",
            "fwd_iat_max",
            "fwd_iat_min",
            "fwd_iat_mean",
            "fwd_iat_std",
            "bwd_iat_tot",
            "bwd_iat_max",
            "bwd_iat_mean",
            "bwd_iat_std",
            "idle_max",
            "idle_min",
            "idle_mean",
        ] {
            assert!(lookup(name).is_some(), "missing column {name}");
        }
    }
}
