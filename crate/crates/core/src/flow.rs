//! Bidirectional flow assembly. TCP flows close on the first FIN or RST
//! packet (which is included in the flow) and the key then sits on a
//! terminated list that swallows straggler packets until a fresh SYN; UDP
//! and idle TCP flows close on a configurable inactivity timeout.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packet::{PacketRecord, TcpFlags, PROTO_TCP};
use crate::stats::RunningStats;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowConfig {
    pub udp_timeout_us: i64,
    pub tcp_timeout_us: i64,
    pub terminated_retention_us: i64,
    /// Inter-packet gap above which time counts as idle rather than active.
    pub activity_threshold_us: i64,
    /// Packets may arrive at most this far behind the table clock.
    pub ooo_tolerance_us: i64,
    /// Gap that starts a new subflow.
    pub subflow_gap_us: i64,
    /// A bulk is at least this many consecutive same-direction payload
    /// packets with gaps of at most `bulk_gap_us`.
    pub bulk_min_packets: u64,
    pub bulk_gap_us: i64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            udp_timeout_us: 120_000_000,
            tcp_timeout_us: 120_000_000,
            terminated_retention_us: 120_000_000,
            activity_threshold_us: 5_000_000,
            ooo_tolerance_us: 1_000,
            subflow_gap_us: 1_000_000,
            bulk_min_packets: 4,
            bulk_gap_us: 1_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(
        "packet at {packet_ts_us}us is {behind_us}us behind the table clock \
         (tolerance {tolerance_us}us)"
    )]
    OutOfOrderPacket {
        packet_ts_us: i64,
        behind_us: i64,
        tolerance_us: i64,
    },
}

/// Endpoint pair in canonical order: both directions of a conversation map
/// to the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    pub ip_a: u32,
    pub port_a: u16,
    pub ip_b: u32,
    pub port_b: u16,
    pub protocol: u8,
}

impl FlowKey {
    pub fn from_packet(pkt: &PacketRecord) -> Self {
        let src = (pkt.src_ip, pkt.src_port);
        let dst = (pkt.dst_ip, pkt.dst_port);
        let (a, b) = if src <= dst { (src, dst) } else { (dst, src) };
        FlowKey {
            ip_a: a.0,
            port_a: a.1,
            ip_b: b.0,
            port_b: b.1,
            protocol: pkt.protocol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    Fin,
    Rst,
    Timeout,
    EndOfCapture,
}

impl CloseReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            CloseReason::Fin => "fin",
            CloseReason::Rst => "rst",
            CloseReason::Timeout => "timeout",
            CloseReason::EndOfCapture => "end_of_capture",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Fwd,
    Bwd,
}

/// Key of a recently FIN/RST-terminated TCP flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TerminatedEntry {
    pub key: FlowKey,
    pub closed_at_us: i64,
}

#[derive(Debug, Clone, Copy)]
struct BulkRun {
    packets: u64,
    bytes: u64,
    first_ts_us: i64,
    last_ts_us: i64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BulkTotals {
    pub bulks: u64,
    pub packets: u64,
    pub bytes: u64,
    pub duration_us: i64,
}

/// Per-direction accumulators for one live flow. Statistics are streamed in
/// as packets arrive; `features::finalize` turns the result into the named
/// feature vector.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub key: FlowKey,
    /// (ip, port) of the first packet's source; defines the forward
    /// direction.
    pub fwd_endpoint: (u32, u16),
    pub created_seq: u64,
    pub start_ts_us: i64,
    pub last_ts_us: i64,
    last_arrival_us: i64,
    last_fwd_ts_us: Option<i64>,
    last_bwd_ts_us: Option<i64>,
    pub fwd_pkts: u64,
    pub bwd_pkts: u64,
    pub fwd_len: RunningStats,
    pub bwd_len: RunningStats,
    pub all_len: RunningStats,
    pub fwd_header_bytes: u64,
    pub bwd_header_bytes: u64,
    pub fwd_payload_bytes: u64,
    pub bwd_payload_bytes: u64,
    pub iat: RunningStats,
    pub fwd_iat: RunningStats,
    pub bwd_iat: RunningStats,
    pub fwd_psh: u64,
    pub fwd_urg: u64,
    pub bwd_psh: u64,
    pub bwd_urg: u64,
    /// FIN, SYN, RST, PSH, ACK, URG, ECE, CWR packet counts over both
    /// directions.
    pub flag_counts: [u64; 8],
    pub init_win_fwd: Option<u16>,
    pub init_win_bwd: Option<u16>,
    pub active: RunningStats,
    pub idle: RunningStats,
    active_start_us: i64,
    pub subflow_count: u64,
    bulk_run_fwd: Option<BulkRun>,
    bulk_run_bwd: Option<BulkRun>,
    pub bulk_fwd: BulkTotals,
    pub bulk_bwd: BulkTotals,
}

impl FlowState {
    fn new(pkt: &PacketRecord, created_seq: u64, config: &FlowConfig) -> Self {
        let mut state = FlowState {
            key: FlowKey::from_packet(pkt),
            fwd_endpoint: (pkt.src_ip, pkt.src_port),
            created_seq,
            start_ts_us: pkt.ts_us,
            last_ts_us: pkt.ts_us,
            last_arrival_us: pkt.ts_us,
            last_fwd_ts_us: None,
            last_bwd_ts_us: None,
            fwd_pkts: 0,
            bwd_pkts: 0,
            fwd_len: RunningStats::new(),
            bwd_len: RunningStats::new(),
            all_len: RunningStats::new(),
            fwd_header_bytes: 0,
            bwd_header_bytes: 0,
            fwd_payload_bytes: 0,
            bwd_payload_bytes: 0,
            iat: RunningStats::new(),
            fwd_iat: RunningStats::new(),
            bwd_iat: RunningStats::new(),
            fwd_psh: 0,
            fwd_urg: 0,
            bwd_psh: 0,
            bwd_urg: 0,
            flag_counts: [0; 8],
            init_win_fwd: None,
            init_win_bwd: None,
            active: RunningStats::new(),
            idle: RunningStats::new(),
            active_start_us: pkt.ts_us,
            subflow_count: 1,
            bulk_run_fwd: None,
            bulk_run_bwd: None,
            bulk_fwd: BulkTotals::default(),
            bulk_bwd: BulkTotals::default(),
        };
        state.update(pkt, true, config);
        state
    }

    pub fn direction_of(&self, pkt: &PacketRecord) -> Direction {
        if (pkt.src_ip, pkt.src_port) == self.fwd_endpoint {
            Direction::Fwd
        } else {
            Direction::Bwd
        }
    }

    pub fn packet_count(&self) -> u64 {
        self.fwd_pkts + self.bwd_pkts
    }

    fn update(&mut self, pkt: &PacketRecord, first: bool, config: &FlowConfig) {
        let dir = self.direction_of(pkt);
        let ts = pkt.ts_us;
        let total_len = pkt.total_len_bytes() as f64;

        if !first {
            let gap = ts - self.last_arrival_us;
            self.iat.push(gap as f64);
            if gap > config.activity_threshold_us {
                self.idle.push(gap as f64);
                self.active
                    .push((self.last_arrival_us - self.active_start_us) as f64);
                self.active_start_us = ts;
            }
            if gap > config.subflow_gap_us {
                self.subflow_count += 1;
            }
        }

        match dir {
            Direction::Fwd => {
                self.fwd_pkts += 1;
                self.fwd_len.push(total_len);
                self.fwd_header_bytes += pkt.header_len_bytes as u64;
                self.fwd_payload_bytes += pkt.payload_len_bytes as u64;
                if let Some(prev) = self.last_fwd_ts_us {
                    self.fwd_iat.push((ts - prev) as f64);
                }
                self.last_fwd_ts_us = Some(ts);
                if self.init_win_fwd.is_none() {
                    self.init_win_fwd = Some(pkt.tcp_window);
                }
                if pkt.tcp_flags.has(TcpFlags::PSH) {
                    self.fwd_psh += 1;
                }
                if pkt.tcp_flags.has(TcpFlags::URG) {
                    self.fwd_urg += 1;
                }
            }
            Direction::Bwd => {
                self.bwd_pkts += 1;
                self.bwd_len.push(total_len);
                self.bwd_header_bytes += pkt.header_len_bytes as u64;
                self.bwd_payload_bytes += pkt.payload_len_bytes as u64;
                if let Some(prev) = self.last_bwd_ts_us {
                    self.bwd_iat.push((ts - prev) as f64);
                }
                self.last_bwd_ts_us = Some(ts);
                if self.init_win_bwd.is_none() {
                    self.init_win_bwd = Some(pkt.tcp_window);
                }
                if pkt.tcp_flags.has(TcpFlags::PSH) {
                    self.bwd_psh += 1;
                }
                if pkt.tcp_flags.has(TcpFlags::URG) {
                    self.bwd_urg += 1;
                }
            }
        }
        self.all_len.push(total_len);

        for (slot, bit) in [
            TcpFlags::FIN,
            TcpFlags::SYN,
            TcpFlags::RST,
            TcpFlags::PSH,
            TcpFlags::ACK,
            TcpFlags::URG,
            TcpFlags::ECE,
            TcpFlags::CWR,
        ]
        .iter()
        .enumerate()
        {
            if pkt.tcp_flags.has(*bit) {
                self.flag_counts[slot] += 1;
            }
        }

        self.update_bulk(pkt, dir, config);

        self.last_arrival_us = ts;
        if ts > self.last_ts_us {
            self.last_ts_us = ts;
        }
    }

    /// Bulk runs are tracked per direction over payload-carrying packets
    /// only; a gap above `bulk_gap_us` ends the current run. Traffic in the
    /// opposite direction is invisible to a run, so forward bulk features
    /// never depend on backward packets.
    fn update_bulk(&mut self, pkt: &PacketRecord, dir: Direction, config: &FlowConfig) {
        if pkt.payload_len_bytes == 0 {
            return;
        }
        let ts = pkt.ts_us;
        let (run_slot, totals) = match dir {
            Direction::Fwd => (&mut self.bulk_run_fwd, &mut self.bulk_fwd),
            Direction::Bwd => (&mut self.bulk_run_bwd, &mut self.bulk_bwd),
        };
        match run_slot {
            Some(run) if ts - run.last_ts_us <= config.bulk_gap_us => {
                run.packets += 1;
                run.bytes += pkt.payload_len_bytes as u64;
                run.last_ts_us = ts;
            }
            _ => {
                Self::commit_run(run_slot, totals, config);
                *run_slot = Some(BulkRun {
                    packets: 1,
                    bytes: pkt.payload_len_bytes as u64,
                    first_ts_us: ts,
                    last_ts_us: ts,
                });
            }
        }
    }

    fn commit_run(run_slot: &mut Option<BulkRun>, totals: &mut BulkTotals, config: &FlowConfig) {
        if let Some(run) = run_slot.take() {
            if run.packets >= config.bulk_min_packets {
                totals.bulks += 1;
                totals.packets += run.packets;
                totals.bytes += run.bytes;
                totals.duration_us += run.last_ts_us - run.first_ts_us;
            }
        }
    }

    /// Close the open active segment and bulk runs; called once when the
    /// flow is emitted.
    fn seal(&mut self, config: &FlowConfig) {
        self.active
            .push((self.last_arrival_us - self.active_start_us) as f64);
        Self::commit_run(&mut self.bulk_run_fwd, &mut self.bulk_fwd, config);
        Self::commit_run(&mut self.bulk_run_bwd, &mut self.bulk_bwd, config);
    }
}

#[derive(Debug, Clone)]
pub struct ClosedFlow {
    pub flow: FlowState,
    pub reason: CloseReason,
}

/// Single-writer flow table: one per capture stream.
#[derive(Debug)]
pub struct FlowTable {
    config: FlowConfig,
    flows: HashMap<FlowKey, FlowState>,
    terminated: HashMap<FlowKey, i64>,
    clock_us: Option<i64>,
    next_seq: u64,
    pub packets_assigned: u64,
    pub packets_dropped: u64,
}

impl FlowTable {
    pub fn new(config: FlowConfig) -> Self {
        FlowTable {
            config,
            flows: HashMap::new(),
            terminated: HashMap::new(),
            clock_us: None,
            next_seq: 0,
            packets_assigned: 0,
            packets_dropped: 0,
        }
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn live_flows(&self) -> usize {
        self.flows.len()
    }

    pub fn terminated_entries(&self) -> Vec<TerminatedEntry> {
        let mut entries: Vec<TerminatedEntry> = self
            .terminated
            .iter()
            .map(|(&key, &closed_at_us)| TerminatedEntry { key, closed_at_us })
            .collect();
        entries.sort_by_key(|e| (e.closed_at_us, e.key));
        entries
    }

    fn timeout_for(&self, protocol: u8) -> i64 {
        if protocol == PROTO_TCP {
            self.config.tcp_timeout_us
        } else {
            self.config.udp_timeout_us
        }
    }

    /// Feed one packet. Returns every flow this packet closed, in closing
    /// order (a timeout close can precede a FIN/RST close of the packet's
    /// own new flow).
    pub fn process_packet(&mut self, pkt: &PacketRecord) -> Result<Vec<ClosedFlow>, FlowError> {
        let now = pkt.ts_us;
        if let Some(clock) = self.clock_us {
            if now < clock - self.config.ooo_tolerance_us {
                return Err(FlowError::OutOfOrderPacket {
                    packet_ts_us: now,
                    behind_us: clock - now,
                    tolerance_us: self.config.ooo_tolerance_us,
                });
            }
        }
        let clock = self.clock_us.map_or(now, |c| c.max(now));
        self.clock_us = Some(clock);

        let retention = self.config.terminated_retention_us;
        self.terminated.retain(|_, &mut closed_at| clock - closed_at <= retention);

        let key = FlowKey::from_packet(pkt);
        let mut closed = Vec::new();

        if pkt.is_tcp() && self.terminated.contains_key(&key) {
            if pkt.tcp_flags.has(TcpFlags::SYN) {
                self.terminated.remove(&key);
            } else {
                self.packets_dropped += 1;
                return Ok(closed);
            }
        }

        let timeout = self.timeout_for(pkt.protocol);
        match self.flows.get_mut(&key) {
            Some(flow) if now - flow.last_ts_us > timeout => {
                let mut old = self.flows.remove(&key).unwrap();
                old.seal(&self.config);
                closed.push(ClosedFlow {
                    flow: old,
                    reason: CloseReason::Timeout,
                });
                self.start_flow(pkt);
            }
            Some(flow) => {
                flow.update(pkt, false, &self.config);
                self.packets_assigned += 1;
            }
            None => self.start_flow(pkt),
        }

        if pkt.is_tcp()
            && (pkt.tcp_flags.has(TcpFlags::FIN) || pkt.tcp_flags.has(TcpFlags::RST))
        {
            let mut flow = self.flows.remove(&key).expect("flow just updated");
            flow.seal(&self.config);
            let reason = if pkt.tcp_flags.has(TcpFlags::RST) {
                CloseReason::Rst
            } else {
                CloseReason::Fin
            };
            self.terminated.insert(key, now);
            closed.push(ClosedFlow { flow, reason });
        }

        Ok(closed)
    }

    fn start_flow(&mut self, pkt: &PacketRecord) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.flows
            .insert(FlowKey::from_packet(pkt), FlowState::new(pkt, seq, &self.config));
        self.packets_assigned += 1;
    }

    /// Emit every live flow in creation order and empty the table. A flow
    /// whose inactivity exceeds its timeout at `now_us` closes as a
    /// timeout, everything else as end-of-capture.
    pub fn flush(&mut self, now_us: i64) -> Vec<ClosedFlow> {
        let mut flows: Vec<FlowState> = self.flows.drain().map(|(_, f)| f).collect();
        flows.sort_by_key(|f| f.created_seq);
        self.terminated.clear();
        flows
            .into_iter()
            .map(|mut flow| {
                flow.seal(&self.config);
                let reason = if now_us - flow.last_ts_us > self.timeout_for(flow.key.protocol) {
                    CloseReason::Timeout
                } else {
                    CloseReason::EndOfCapture
                };
                ClosedFlow { flow, reason }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{parse_fixture, PROTO_UDP};

    fn tcp(ts_us: i64, src: u32, sport: u16, dst: u32, dport: u16, letters: &str) -> PacketRecord {
        PacketRecord {
            ts_us,
            src_ip: src,
            dst_ip: dst,
            src_port: sport,
            dst_port: dport,
            protocol: PROTO_TCP,
            tcp_flags: TcpFlags::from_letters(letters).unwrap(),
            header_len_bytes: 40,
            payload_len_bytes: 0,
            tcp_window: 1024,
        }
    }

    fn udp(ts_us: i64, src: u32, sport: u16, dst: u32, dport: u16, payload: u32) -> PacketRecord {
        PacketRecord {
            ts_us,
            src_ip: src,
            dst_ip: dst,
            src_port: sport,
            dst_port: dport,
            protocol: PROTO_UDP,
            tcp_flags: TcpFlags::empty(),
            header_len_bytes: 28,
            payload_len_bytes: payload,
            tcp_window: 0,
        }
    }

    const A: u32 = 0x0A00_0001;
    const B: u32 = 0x0A00_0002;

    fn feed(table: &mut FlowTable, pkts: &[PacketRecord]) -> Vec<ClosedFlow> {
        let mut closed = Vec::new();
        for p in pkts {
            closed.extend(table.process_packet(p).unwrap());
        }
        closed
    }

    #[test]
    fn key_is_direction_independent() {
        let p = tcp(0, A, 1234, B, 80, "S");
        let mut rev = p;
        std::mem::swap(&mut rev.src_ip, &mut rev.dst_ip);
        std::mem::swap(&mut rev.src_port, &mut rev.dst_port);
        assert_eq!(FlowKey::from_packet(&p), FlowKey::from_packet(&rev));
    }

    #[test]
    fn textbook_session_closes_on_fin() {
        let mut table = FlowTable::new(FlowConfig::default());
        let pkts = [
            tcp(0, A, 1234, B, 80, "S"),
            tcp(1_000, B, 80, A, 1234, "SA"),
            tcp(2_000, A, 1234, B, 80, "A"),
            tcp(3_000, A, 1234, B, 80, "PA"),
            tcp(4_000, A, 1234, B, 80, "FA"),
        ];
        let closed = feed(&mut table, &pkts);
        assert_eq!(closed.len(), 1);
        assert_eq!(closed[0].reason, CloseReason::Fin);
        assert_eq!(closed[0].flow.packet_count(), 5);
        assert_eq!(closed[0].flow.fwd_pkts, 4);
        assert_eq!(closed[0].flow.bwd_pkts, 1);
        assert_eq!(table.live_flows(), 0);
        assert_eq!(table.packets_assigned, 5);
    }

    #[test]
    fn rst_suppresses_until_new_syn() {
        let mut table = FlowTable::new(FlowConfig::default());
        let pkts = [
            tcp(0, A, 1234, B, 80, "S"),
            tcp(1_000_000, B, 80, A, 1234, "SA"),
            tcp(5_000_000, A, 1234, B, 80, "R"),
        ];
        let closed = feed(&mut table, &pkts);
        assert_eq!(closed.len(), 1);
        assert_eq!(closed[0].reason, CloseReason::Rst);
        assert_eq!(closed[0].flow.packet_count(), 3);

        // stray ACK on the terminated key is dropped
        let stray = table.process_packet(&tcp(6_000_000, A, 1234, B, 80, "A")).unwrap();
        assert!(stray.is_empty());
        assert_eq!(table.packets_dropped, 1);
        assert_eq!(table.live_flows(), 0);

        // a SYN removes the terminated entry and opens a second flow
        let syn = table.process_packet(&tcp(7_000_000, A, 1234, B, 80, "S")).unwrap();
        assert!(syn.is_empty());
        assert_eq!(table.live_flows(), 1);
        assert!(table.terminated_entries().is_empty());

        let flushed = table.flush(7_000_000);
        assert_eq!(flushed.len(), 1);
        assert_eq!(flushed[0].reason, CloseReason::EndOfCapture);
        assert_eq!(flushed[0].flow.packet_count(), 1);
    }

    #[test]
    fn udp_timeout_splits_flows() {
        let mut table = FlowTable::new(FlowConfig::default());
        let first = table.process_packet(&udp(0, A, 999, B, 53, 10)).unwrap();
        assert!(first.is_empty());
        let second = table
            .process_packet(&udp(121_000_000, A, 999, B, 53, 10))
            .unwrap();
        assert_eq!(second.len(), 1);
        assert_eq!(second[0].reason, CloseReason::Timeout);
        assert_eq!(second[0].flow.packet_count(), 1);
        let flushed = table.flush(121_000_000);
        assert_eq!(flushed.len(), 1);
        assert_eq!(flushed[0].flow.packet_count(), 1);
    }

    #[test]
    fn udp_within_timeout_stays_one_flow() {
        let mut table = FlowTable::new(FlowConfig::default());
        feed(
            &mut table,
            &[udp(0, A, 999, B, 53, 10), udp(120_000_000, A, 999, B, 53, 10)],
        );
        // gap exactly equal to the timeout does not split
        assert_eq!(table.live_flows(), 1);
        let flushed = table.flush(120_000_000);
        assert_eq!(flushed[0].flow.packet_count(), 2);
    }

    #[test]
    fn flush_empty_table() {
        let mut table = FlowTable::new(FlowConfig::default());
        assert!(table.flush(0).is_empty());
    }

    #[test]
    fn flush_reports_timeout_vs_end_of_capture() {
        let mut table = FlowTable::new(FlowConfig::default());
        table.process_packet(&tcp(0, A, 1, B, 80, "S")).unwrap();
        table.process_packet(&tcp(50_000_000, A, 2, B, 80, "S")).unwrap();
        // at t=130s the first flow is 130s idle (past 120s), the second 80s
        let closed = table.flush(130_000_000);
        assert_eq!(closed.len(), 2);
        assert_eq!(closed[0].reason, CloseReason::Timeout);
        assert_eq!(closed[1].reason, CloseReason::EndOfCapture);
    }

    #[test]
    fn terminated_entry_is_pruned_after_retention() {
        let mut table = FlowTable::new(FlowConfig::default());
        feed(
            &mut table,
            &[tcp(0, A, 1234, B, 80, "S"), tcp(1_000, A, 1234, B, 80, "R")],
        );
        assert_eq!(table.terminated_entries().len(), 1);
        // mid-stream ACK long after retention opens a fresh flow instead of
        // being dropped
        let closed = table
            .process_packet(&tcp(130_000_000, A, 1234, B, 80, "A"))
            .unwrap();
        assert!(closed.is_empty());
        assert!(table.terminated_entries().is_empty());
        assert_eq!(table.live_flows(), 1);
        assert_eq!(table.packets_dropped, 0);
    }

    #[test]
    fn midstream_packet_starts_flow() {
        let mut table = FlowTable::new(FlowConfig::default());
        let closed = table.process_packet(&tcp(0, A, 5, B, 80, "A")).unwrap();
        assert!(closed.is_empty());
        assert_eq!(table.live_flows(), 1);
    }

    #[test]
    fn fin_after_timeout_closes_twice_in_one_call() {
        let mut table = FlowTable::new(FlowConfig::default());
        table.process_packet(&tcp(0, A, 7, B, 80, "A")).unwrap();
        let closed = table
            .process_packet(&tcp(200_000_000, A, 7, B, 80, "F"))
            .unwrap();
        assert_eq!(closed.len(), 2);
        assert_eq!(closed[0].reason, CloseReason::Timeout);
        assert_eq!(closed[1].reason, CloseReason::Fin);
        assert_eq!(closed[1].flow.packet_count(), 1);
    }

    #[test]
    fn out_of_order_tolerance() {
        let mut table = FlowTable::new(FlowConfig::default());
        table.process_packet(&udp(10_000, A, 1, B, 2, 0)).unwrap();
        // 1ms behind is accepted
        table.process_packet(&udp(9_000, A, 1, B, 2, 0)).unwrap();
        // beyond tolerance errors
        let err = table.process_packet(&udp(8_999, A, 1, B, 2, 0));
        assert!(matches!(err, Err(FlowError::OutOfOrderPacket { .. })));
    }

    #[test]
    fn direction_follows_first_packet() {
        let mut table = FlowTable::new(FlowConfig::default());
        // first packet travels B->A, so B is the forward endpoint
        feed(
            &mut table,
            &[tcp(0, B, 80, A, 1234, "S"), tcp(1_000, A, 1234, B, 80, "A")],
        );
        let closed = table.flush(1_000);
        let flow = &closed[0].flow;
        assert_eq!(flow.fwd_endpoint, (B, 80));
        assert_eq!(flow.fwd_pkts, 1);
        assert_eq!(flow.bwd_pkts, 1);
    }

    #[test]
    fn conservation_over_fixture_stream() {
        let text = "\
0,10.0.0.1,1234,10.0.0.2,80,6,S,40,0,65535
1000,10.0.0.2,80,10.0.0.1,1234,6,SA,40,0,512
2000,10.0.0.1,1234,10.0.0.2,80,6,R,40,0,512
3000,10.0.0.1,1234,10.0.0.2,80,6,A,40,0,512
4000,10.0.0.3,5,10.0.0.4,53,17,,28,9,0
";
        let pkts = parse_fixture(text).unwrap();
        let mut table = FlowTable::new(FlowConfig::default());
        let mut closed = feed(&mut table, &pkts);
        closed.extend(table.flush(4_000));
        let assigned: u64 = closed.iter().map(|c| c.flow.packet_count()).sum();
        assert_eq!(assigned, table.packets_assigned);
        assert_eq!(
            table.packets_assigned + table.packets_dropped,
            pkts.len() as u64
        );
        assert_eq!(table.packets_dropped, 1);
    }

    #[test]
    fn deterministic_flush_order() {
        let pkts: Vec<PacketRecord> = (0..50)
            .map(|i| tcp(i * 10, A, 1000 + i as u16, B, 80, "S"))
            .collect();
        let run = |pkts: &[PacketRecord]| {
            let mut table = FlowTable::new(FlowConfig::default());
            feed(&mut table, pkts);
            table
                .flush(1_000)
                .iter()
                .map(|c| c.flow.key)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(&pkts), run(&pkts));
        // creation order, i.e. ascending source port here
        let keys = run(&pkts);
        assert_eq!(keys[0].port_a, 1000);
        assert_eq!(keys[49].port_a, 1049);
    }
}
