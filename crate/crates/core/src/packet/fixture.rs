//! Text fixture format: one packet per line,
//! `ts_us,src_ip,src_port,dst_ip,dst_port,proto,flags,hdr,payload,window`,
//! `#` comments and blank lines ignored. Exists so flow tests can be
//! byte-exact and written by hand.

use std::path::Path;

use thiserror::Error;

use super::{parse_ipv4, PacketRecord, TcpFlags, PROTO_TCP, PROTO_UDP};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("fixture line {line}: {kind}")]
pub struct FixtureParseError {
    pub line: usize,
    pub kind: FixtureErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixtureErrorKind {
    #[error("expected 10 comma-separated fields, got {0}")]
    FieldCount(usize),
    #[error("field `{0}` is not a valid number")]
    Number(&'static str),
    #[error("field `{0}` is not a dotted-quad IPv4 address")]
    Address(&'static str),
    #[error("unknown flag letter '{0}'")]
    UnknownFlag(char),
    #[error("protocol {0} is not TCP (6) or UDP (17)")]
    Protocol(u32),
    #[error("UDP packets cannot carry TCP flags or a window")]
    UdpWithTcpFields,
}

fn err(line: usize, kind: FixtureErrorKind) -> FixtureParseError {
    FixtureParseError { line, kind }
}

pub fn parse_fixture_line(text: &str, line: usize) -> Result<PacketRecord, FixtureParseError> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != 10 {
        return Err(err(line, FixtureErrorKind::FieldCount(fields.len())));
    }
    let num = |idx: usize, name: &'static str| -> Result<u64, FixtureParseError> {
        fields[idx]
            .trim()
            .parse::<u64>()
            .map_err(|_| err(line, FixtureErrorKind::Number(name)))
    };
    let addr = |idx: usize, name: &'static str| -> Result<u32, FixtureParseError> {
        parse_ipv4(fields[idx].trim()).ok_or_else(|| err(line, FixtureErrorKind::Address(name)))
    };

    let ts_us = fields[0]
        .trim()
        .parse::<i64>()
        .map_err(|_| err(line, FixtureErrorKind::Number("ts_us")))?;
    let src_ip = addr(1, "src_ip")?;
    let src_port = num(2, "src_port")? as u16;
    let dst_ip = addr(3, "dst_ip")?;
    let dst_port = num(4, "dst_port")? as u16;
    let proto = num(5, "proto")?;
    if proto != PROTO_TCP as u64 && proto != PROTO_UDP as u64 {
        return Err(err(line, FixtureErrorKind::Protocol(proto as u32)));
    }
    let tcp_flags = TcpFlags::from_letters(fields[6].trim())
        .map_err(|c| err(line, FixtureErrorKind::UnknownFlag(c)))?;
    let header_len_bytes = num(7, "hdr")? as u32;
    let payload_len_bytes = num(8, "payload")? as u32;
    let tcp_window = num(9, "window")? as u16;

    if proto == PROTO_UDP as u64 && (tcp_flags != TcpFlags::empty() || tcp_window != 0) {
        return Err(err(line, FixtureErrorKind::UdpWithTcpFields));
    }

    Ok(PacketRecord {
        ts_us,
        src_ip,
        dst_ip,
        src_port,
        dst_port,
        protocol: proto as u8,
        tcp_flags,
        header_len_bytes,
        payload_len_bytes,
        tcp_window,
    })
}

/// Parse a whole fixture document; line numbers in errors are 1-based.
pub fn parse_fixture(text: &str) -> Result<Vec<PacketRecord>, FixtureParseError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        records.push(parse_fixture_line(line, idx + 1)?);
    }
    Ok(records)
}

pub fn parse_fixture_file<P: AsRef<Path>>(path: P) -> Result<Vec<PacketRecord>, std::io::Error> {
    let text = std::fs::read_to_string(path)?;
    parse_fixture(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syn_line_maps_directly() {
        let r = parse_fixture_line("0,10.0.0.1,1234,10.0.0.2,80,6,S,40,0,65535", 1).unwrap();
        assert_eq!(r.ts_us, 0);
        assert_eq!(r.src_port, 1234);
        assert_eq!(r.dst_port, 80);
        assert_eq!(r.protocol, 6);
        assert_eq!(r.tcp_flags, TcpFlags(TcpFlags::SYN));
        assert_eq!(r.header_len_bytes, 40);
        assert_eq!(r.tcp_window, 65535);
    }

    #[test]
    fn fin_ack_flags_any_order() {
        let a = parse_fixture_line("120000000,10.0.0.2,80,10.0.0.1,1234,6,FA,40,10,512", 1).unwrap();
        let b = parse_fixture_line("120000000,10.0.0.2,80,10.0.0.1,1234,6,AF,40,10,512", 1).unwrap();
        assert_eq!(a, b);
        assert!(a.tcp_flags.has(TcpFlags::FIN) && a.tcp_flags.has(TcpFlags::ACK));
        assert_eq!(a.payload_len_bytes, 10);
    }

    #[test]
    fn rejects_bad_protocol() {
        let e = parse_fixture_line("0,10.0.0.1,1,10.0.0.2,2,1,,20,0,0", 3).unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.kind, FixtureErrorKind::Protocol(1));
    }

    #[test]
    fn rejects_field_count_and_bad_numbers() {
        assert_eq!(
            parse_fixture_line("0,10.0.0.1,1", 1).unwrap_err().kind,
            FixtureErrorKind::FieldCount(3)
        );
        assert_eq!(
            parse_fixture_line("x,10.0.0.1,1,10.0.0.2,2,6,,20,0,0", 1)
                .unwrap_err()
                .kind,
            FixtureErrorKind::Number("ts_us")
        );
        assert_eq!(
            parse_fixture_line("0,10.0.0.1,1,10.0.0.2,2,6,Z,20,0,0", 1)
                .unwrap_err()
                .kind,
            FixtureErrorKind::UnknownFlag('Z')
        );
    }

    #[test]
    fn udp_with_flags_or_window_is_invalid() {
        assert_eq!(
            parse_fixture_line("0,10.0.0.1,1,10.0.0.2,2,17,S,28,0,0", 1)
                .unwrap_err()
                .kind,
            FixtureErrorKind::UdpWithTcpFields
        );
        assert_eq!(
            parse_fixture_line("0,10.0.0.1,1,10.0.0.2,2,17,,28,0,9", 1)
                .unwrap_err()
                .kind,
            FixtureErrorKind::UdpWithTcpFields
        );
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "# header comment\n\n0,10.0.0.1,1,10.0.0.2,2,17,,28,4,0\n# trailing\n";
        let records = parse_fixture(text).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].payload_len_bytes, 4);
    }

    #[test]
    fn round_trip_is_identity() {
        use crate::packet::{PROTO_TCP, PROTO_UDP};
        use proptest::prelude::*;
        proptest!(|(
            ts_us in -1_000_000_000i64..1_000_000_000_000,
            src_ip: u32,
            dst_ip: u32,
            src_port: u16,
            dst_port: u16,
            tcp in any::<bool>(),
            flags: u8,
            header in 20u32..120,
            payload in 0u32..65_000,
            window: u16,
        )| {
            let record = crate::packet::PacketRecord {
                ts_us,
                src_ip,
                dst_ip,
                src_port,
                dst_port,
                protocol: if tcp { PROTO_TCP } else { PROTO_UDP },
                tcp_flags: if tcp { crate::packet::TcpFlags(flags) } else { crate::packet::TcpFlags::empty() },
                header_len_bytes: header,
                payload_len_bytes: payload,
                tcp_window: if tcp { window } else { 0 },
            };
            let line = record.to_fixture_line();
            let back = parse_fixture_line(&line, 1).unwrap();
            prop_assert_eq!(back, record);
        });
    }

    #[test]
    fn error_reports_document_line_number() {
        let text = "# comment\n0,10.0.0.1,1,10.0.0.2,2,17,,28,4,0\nbroken";
        let e = parse_fixture(text).unwrap_err();
        assert_eq!(e.line, 3);
    }
}
