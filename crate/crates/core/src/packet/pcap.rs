//! Classic pcap (not pcapng) decoding for Ethernet captures. IPv4 TCP/UDP
//! packets become [`PacketRecord`]s; everything else is counted and skipped.

use std::path::Path;

use thiserror::Error;

use super::{PacketRecord, TcpFlags, PROTO_TCP, PROTO_UDP};

const MAGIC_US: u32 = 0xA1B2_C3D4;
const MAGIC_NS: u32 = 0xA1B2_3C4D;
const LINKTYPE_ETHERNET: u32 = 1;
const ETHERTYPE_IPV4: u16 = 0x0800;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("unsupported capture format: magic 0x{found:08X}")]
    UnsupportedFormat { found: u32 },
    #[error("unsupported link type {0} (only Ethernet captures are accepted)")]
    UnsupportedLinkType(u32),
    #[error("truncated capture at byte offset {offset}")]
    TruncatedCapture { offset: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-reason counts of pcap records that produced no PacketRecord.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkipCounters {
    /// Non-IPv4 ethertype (ARP, IPv6, VLAN, ...).
    pub non_ipv4: u64,
    /// IPv4 carrying something other than TCP or UDP.
    pub non_tcp_udp: u64,
    /// IP fragment with nonzero offset.
    pub fragment: u64,
    /// Headers inconsistent or cut short by the snap length.
    pub malformed: u64,
}

impl SkipCounters {
    pub fn total(&self) -> u64 {
        self.non_ipv4 + self.non_tcp_udp + self.fragment + self.malformed
    }
}

#[derive(Debug, Clone, Default)]
pub struct PcapCapture {
    pub records: Vec<PacketRecord>,
    pub skipped: SkipCounters,
}

#[derive(Clone, Copy)]
struct Layout {
    big_endian: bool,
    nanosecond: bool,
}

fn read_u32(b: &[u8], at: usize, be: bool) -> u32 {
    let raw = [b[at], b[at + 1], b[at + 2], b[at + 3]];
    if be {
        u32::from_be_bytes(raw)
    } else {
        u32::from_le_bytes(raw)
    }
}

fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

pub fn parse_pcap(bytes: &[u8]) -> Result<PcapCapture, PcapError> {
    if bytes.len() < 24 {
        if bytes.len() < 4 {
            return Err(PcapError::TruncatedCapture { offset: 0 });
        }
        // enough for the magic: classify before reporting truncation
        layout_for_magic(bytes)?;
        return Err(PcapError::TruncatedCapture { offset: 0 });
    }
    let layout = layout_for_magic(bytes)?;
    let linktype = read_u32(bytes, 20, layout.big_endian);
    if linktype != LINKTYPE_ETHERNET {
        return Err(PcapError::UnsupportedLinkType(linktype));
    }

    let mut capture = PcapCapture::default();
    let mut offset = 24usize;
    while offset < bytes.len() {
        let record_start = offset as u64;
        if bytes.len() - offset < 16 {
            return Err(PcapError::TruncatedCapture {
                offset: record_start,
            });
        }
        let ts_sec = read_u32(bytes, offset, layout.big_endian) as i64;
        let ts_frac = read_u32(bytes, offset + 4, layout.big_endian) as i64;
        let incl_len = read_u32(bytes, offset + 8, layout.big_endian) as usize;
        offset += 16;
        if bytes.len() - offset < incl_len {
            return Err(PcapError::TruncatedCapture {
                offset: record_start,
            });
        }
        let frame = &bytes[offset..offset + incl_len];
        offset += incl_len;

        let ts_us = if layout.nanosecond {
            ts_sec * 1_000_000 + ts_frac / 1_000
        } else {
            ts_sec * 1_000_000 + ts_frac
        };
        match decode_frame(frame, ts_us) {
            Ok(record) => capture.records.push(record),
            Err(skip) => match skip {
                Skip::NonIpv4 => capture.skipped.non_ipv4 += 1,
                Skip::NonTcpUdp => capture.skipped.non_tcp_udp += 1,
                Skip::Fragment => capture.skipped.fragment += 1,
                Skip::Malformed => capture.skipped.malformed += 1,
            },
        }
    }
    Ok(capture)
}

pub fn parse_pcap_file<P: AsRef<Path>>(path: P) -> Result<PcapCapture, PcapError> {
    let bytes = std::fs::read(path)?;
    parse_pcap(&bytes)
}

fn layout_for_magic(bytes: &[u8]) -> Result<Layout, PcapError> {
    let raw = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    match raw {
        MAGIC_US => Ok(Layout {
            big_endian: false,
            nanosecond: false,
        }),
        MAGIC_NS => Ok(Layout {
            big_endian: false,
            nanosecond: true,
        }),
        x if x == MAGIC_US.swap_bytes() => Ok(Layout {
            big_endian: true,
            nanosecond: false,
        }),
        x if x == MAGIC_NS.swap_bytes() => Ok(Layout {
            big_endian: true,
            nanosecond: true,
        }),
        found => Err(PcapError::UnsupportedFormat { found }),
    }
}

enum Skip {
    NonIpv4,
    NonTcpUdp,
    Fragment,
    Malformed,
}

fn decode_frame(frame: &[u8], ts_us: i64) -> Result<PacketRecord, Skip> {
    if frame.len() < 14 {
        return Err(Skip::Malformed);
    }
    if be16(frame, 12) != ETHERTYPE_IPV4 {
        return Err(Skip::NonIpv4);
    }
    let ip = &frame[14..];
    if ip.len() < 20 {
        return Err(Skip::Malformed);
    }
    if ip[0] >> 4 != 4 {
        return Err(Skip::NonIpv4);
    }
    let ihl = ((ip[0] & 0x0F) as usize) * 4;
    if ihl < 20 || ip.len() < ihl {
        return Err(Skip::Malformed);
    }
    let total_len = be16(ip, 2) as usize;
    if total_len < ihl {
        return Err(Skip::Malformed);
    }
    let frag_offset = be16(ip, 6) & 0x1FFF;
    if frag_offset != 0 {
        return Err(Skip::Fragment);
    }
    let protocol = ip[9];
    if protocol != PROTO_TCP && protocol != PROTO_UDP {
        return Err(Skip::NonTcpUdp);
    }
    let src_ip = u32::from_be_bytes([ip[12], ip[13], ip[14], ip[15]]);
    let dst_ip = u32::from_be_bytes([ip[16], ip[17], ip[18], ip[19]]);

    let transport = &ip[ihl..ip.len().min(total_len)];
    let transport_logical = total_len - ihl;

    if protocol == PROTO_TCP {
        if transport.len() < 20 {
            return Err(Skip::Malformed);
        }
        let data_off = ((transport[12] >> 4) as usize) * 4;
        if data_off < 20 || data_off > transport_logical || transport.len() < data_off {
            return Err(Skip::Malformed);
        }
        Ok(PacketRecord {
            ts_us,
            src_ip,
            dst_ip,
            src_port: be16(transport, 0),
            dst_port: be16(transport, 2),
            protocol,
            tcp_flags: TcpFlags(transport[13]),
            header_len_bytes: (ihl + data_off) as u32,
            payload_len_bytes: (transport_logical - data_off) as u32,
            tcp_window: be16(transport, 14),
        })
    } else {
        if transport.len() < 8 {
            return Err(Skip::Malformed);
        }
        let udp_len = be16(transport, 4) as usize;
        if udp_len < 8 || udp_len > transport_logical {
            return Err(Skip::Malformed);
        }
        Ok(PacketRecord {
            ts_us,
            src_ip,
            dst_ip,
            src_port: be16(transport, 0),
            dst_port: be16(transport, 2),
            protocol,
            tcp_flags: TcpFlags::empty(),
            header_len_bytes: (ihl + 8) as u32,
            payload_len_bytes: (udp_len - 8) as u32,
            tcp_window: 0,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;

    fn one_udp_capture(magic: u32, big_endian: bool) -> Vec<u8> {
        let frame = ethernet(
            ETHERTYPE_IPV4,
            &ipv4(
                PROTO_UDP,
                [10, 0, 0, 1],
                [10, 0, 0, 2],
                &udp(5353, 53, b"abcd"),
            ),
        );
        let mut bytes = global_header(magic, big_endian, LINKTYPE_ETHERNET);
        bytes.extend_from_slice(&record(1, 0, &frame, big_endian));
        bytes
    }

    #[test]
    fn empty_capture_yields_nothing() {
        let bytes = global_header(MAGIC_US, false, LINKTYPE_ETHERNET);
        let cap = parse_pcap(&bytes).unwrap();
        assert!(cap.records.is_empty());
        assert_eq!(cap.skipped.total(), 0);
    }

    #[test]
    fn single_udp_packet_field_by_field() {
        let cap = parse_pcap(&one_udp_capture(MAGIC_US, false)).unwrap();
        assert_eq!(cap.records.len(), 1);
        let r = cap.records[0];
        assert_eq!(r.ts_us, 1_000_000);
        assert_eq!(r.protocol, PROTO_UDP);
        assert_eq!(r.src_ip, u32::from_be_bytes([10, 0, 0, 1]));
        assert_eq!(r.dst_ip, u32::from_be_bytes([10, 0, 0, 2]));
        assert_eq!(r.src_port, 5353);
        assert_eq!(r.dst_port, 53);
        assert_eq!(r.payload_len_bytes, 4);
        assert_eq!(r.header_len_bytes, 28);
        assert_eq!(r.tcp_flags, TcpFlags::empty());
        assert_eq!(r.tcp_window, 0);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = global_header(MAGIC_US, false, LINKTYPE_ETHERNET);
        bytes[0..4].copy_from_slice(&0xDEAD_BEEF_u32.to_le_bytes());
        match parse_pcap(&bytes) {
            Err(PcapError::UnsupportedFormat { found }) => assert_eq!(found, 0xDEAD_BEEF),
            other => panic!("expected UnsupportedFormat, got {other:?}"),
        }
    }

    #[test]
    fn big_endian_and_nanosecond_variants() {
        let cap = parse_pcap(&one_udp_capture(MAGIC_US, true)).unwrap();
        assert_eq!(cap.records[0].ts_us, 1_000_000);

        // nanosecond fractional part truncates to microseconds
        let frame = ethernet(
            ETHERTYPE_IPV4,
            &ipv4(PROTO_UDP, [1, 1, 1, 1], [2, 2, 2, 2], &udp(1, 2, b"")),
        );
        let mut bytes = global_header(MAGIC_NS, false, LINKTYPE_ETHERNET);
        bytes.extend_from_slice(&record(1, 2_500, &frame, false));
        let cap = parse_pcap(&bytes).unwrap();
        assert_eq!(cap.records[0].ts_us, 1_000_002);
    }

    #[test]
    fn non_ethernet_linktype_is_rejected() {
        let bytes = global_header(MAGIC_US, false, 101);
        assert!(matches!(
            parse_pcap(&bytes),
            Err(PcapError::UnsupportedLinkType(101))
        ));
    }

    #[test]
    fn skip_counting_per_reason() {
        let tcp_frame = ethernet(
            ETHERTYPE_IPV4,
            &ipv4(
                PROTO_TCP,
                [10, 0, 0, 1],
                [10, 0, 0, 2],
                &tcp(1234, 80, TcpFlags::SYN, 1024, b""),
            ),
        );
        let arp_frame = ethernet(0x0806, &[0u8; 28]);
        let icmp_frame = ethernet(
            ETHERTYPE_IPV4,
            &ipv4(1, [10, 0, 0, 1], [10, 0, 0, 2], &[0u8; 8]),
        );
        let mut frag = ipv4(
            PROTO_UDP,
            [10, 0, 0, 1],
            [10, 0, 0, 2],
            &udp(1, 2, b"xyz"),
        );
        frag[6..8].copy_from_slice(&0x0010_u16.to_be_bytes()); // offset 16
        let frag_frame = ethernet(ETHERTYPE_IPV4, &frag);

        let mut bytes = global_header(MAGIC_US, false, LINKTYPE_ETHERNET);
        for (i, frame) in [&tcp_frame, &arp_frame, &icmp_frame, &frag_frame]
            .iter()
            .enumerate()
        {
            bytes.extend_from_slice(&record(i as u32, 0, frame, false));
        }
        let cap = parse_pcap(&bytes).unwrap();
        assert_eq!(cap.records.len(), 1);
        assert_eq!(cap.skipped.non_ipv4, 1);
        assert_eq!(cap.skipped.non_tcp_udp, 1);
        assert_eq!(cap.skipped.fragment, 1);
        // emitted + skipped covers every record in the file
        assert_eq!(cap.records.len() as u64 + cap.skipped.total(), 4);
    }

    #[test]
    fn truncated_record_reports_offset() {
        let mut bytes = one_udp_capture(MAGIC_US, false);
        let full = bytes.len();
        bytes.truncate(full - 3);
        match parse_pcap(&bytes) {
            Err(PcapError::TruncatedCapture { offset }) => assert_eq!(offset, 24),
            other => panic!("expected TruncatedCapture, got {other:?}"),
        }

        // cut inside the record header of a second packet
        let mut bytes = one_udp_capture(MAGIC_US, false);
        let second_start = bytes.len() as u64;
        bytes.extend_from_slice(&[0u8; 7]);
        match parse_pcap(&bytes) {
            Err(PcapError::TruncatedCapture { offset }) => assert_eq!(offset, second_start),
            other => panic!("expected TruncatedCapture, got {other:?}"),
        }
    }

    #[test]
    fn parser_preserves_file_order() {
        // deliberately non-monotone timestamps stay in file order
        let frame = ethernet(
            ETHERTYPE_IPV4,
            &ipv4(PROTO_UDP, [1, 1, 1, 1], [2, 2, 2, 2], &udp(1, 2, b"")),
        );
        let mut bytes = global_header(MAGIC_US, false, LINKTYPE_ETHERNET);
        for ts in [5u32, 2, 9] {
            bytes.extend_from_slice(&record(ts, 0, &frame, false));
        }
        let cap = parse_pcap(&bytes).unwrap();
        let stamps: Vec<i64> = cap.records.iter().map(|r| r.ts_us).collect();
        assert_eq!(stamps, vec![5_000_000, 2_000_000, 9_000_000]);
    }

    #[test]
    fn tcp_fields_decode() {
        let frame = ethernet(
            ETHERTYPE_IPV4,
            &ipv4(
                PROTO_TCP,
                [192, 168, 0, 1],
                [192, 168, 0, 2],
                &tcp(4000, 443, TcpFlags::SYN | TcpFlags::ACK, 29_200, b"hello"),
            ),
        );
        let mut bytes = global_header(MAGIC_US, false, LINKTYPE_ETHERNET);
        bytes.extend_from_slice(&record(10, 250_000, &frame, false));
        let r = parse_pcap(&bytes).unwrap().records[0];
        assert_eq!(r.ts_us, 10_250_000);
        assert!(r.tcp_flags.has(TcpFlags::SYN) && r.tcp_flags.has(TcpFlags::ACK));
        assert!(!r.tcp_flags.has(TcpFlags::FIN));
        assert_eq!(r.tcp_window, 29_200);
        assert_eq!(r.header_len_bytes, 40);
        assert_eq!(r.payload_len_bytes, 5);
    }
}
