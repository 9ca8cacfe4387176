//! Packet ingest: classic pcap captures and a line-oriented text fixture
//! format both decode into the same canonical [`PacketRecord`] stream.

mod fixture;
mod pcap;

pub use fixture::{parse_fixture, parse_fixture_file, parse_fixture_line, FixtureParseError};
pub use pcap::{parse_pcap, parse_pcap_file, PcapCapture, PcapError, SkipCounters};

pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

/// TCP flag byte. UDP records always carry an empty set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct TcpFlags(pub u8);

impl TcpFlags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;
    pub const ECE: u8 = 0x40;
    pub const CWR: u8 = 0x80;

    pub fn empty() -> Self {
        TcpFlags(0)
    }

    pub fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }

    /// Letter encoding used by the fixture format, canonical order FSRPAUEC.
    pub fn to_letters(self) -> String {
        const LETTERS: [(u8, char); 8] = [
            (TcpFlags::FIN, 'F'),
            (TcpFlags::SYN, 'S'),
            (TcpFlags::RST, 'R'),
            (TcpFlags::PSH, 'P'),
            (TcpFlags::ACK, 'A'),
            (TcpFlags::URG, 'U'),
            (TcpFlags::ECE, 'E'),
            (TcpFlags::CWR, 'C'),
        ];
        LETTERS
            .iter()
            .filter(|(bit, _)| self.has(*bit))
            .map(|(_, c)| *c)
            .collect()
    }

    /// Order-insensitive parse of the letter encoding.
    pub fn from_letters(s: &str) -> Result<Self, char> {
        let mut flags = 0u8;
        for c in s.chars() {
            flags |= match c {
                'F' => TcpFlags::FIN,
                'S' => TcpFlags::SYN,
                'R' => TcpFlags::RST,
                'P' => TcpFlags::PSH,
                'A' => TcpFlags::ACK,
                'U' => TcpFlags::URG,
                'E' => TcpFlags::ECE,
                'C' => TcpFlags::CWR,
                other => return Err(other),
            };
        }
        Ok(TcpFlags(flags))
    }
}

/// One parsed IPv4 TCP or UDP packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    /// Microseconds since the epoch.
    pub ts_us: i64,
    pub src_ip: u32,
    pub dst_ip: u32,
    pub src_port: u16,
    pub dst_port: u16,
    /// 6 (TCP) or 17 (UDP); nothing else is ever emitted.
    pub protocol: u8,
    pub tcp_flags: TcpFlags,
    /// IP header plus transport header bytes.
    pub header_len_bytes: u32,
    pub payload_len_bytes: u32,
    pub tcp_window: u16,
}

impl PacketRecord {
    pub fn is_tcp(&self) -> bool {
        self.protocol == PROTO_TCP
    }

    /// Total length above the link layer (IP header + transport header +
    /// payload), the packet length used by the flow statistics.
    pub fn total_len_bytes(&self) -> u32 {
        self.header_len_bytes + self.payload_len_bytes
    }

    /// Serialize to one fixture line; `parse_fixture_line` inverts this.
    pub fn to_fixture_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.ts_us,
            format_ipv4(self.src_ip),
            self.src_port,
            format_ipv4(self.dst_ip),
            self.dst_port,
            self.protocol,
            self.tcp_flags.to_letters(),
            self.header_len_bytes,
            self.payload_len_bytes,
            self.tcp_window,
        )
    }
}

pub fn format_ipv4(ip: u32) -> String {
    std::net::Ipv4Addr::from(ip).to_string()
}

pub fn parse_ipv4(s: &str) -> Option<u32> {
    s.parse::<std::net::Ipv4Addr>().ok().map(u32::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_letters_round_trip() {
        let f = TcpFlags(TcpFlags::FIN | TcpFlags::ACK);
        assert_eq!(f.to_letters(), "FA");
        assert_eq!(TcpFlags::from_letters("AF").unwrap(), f);
        assert_eq!(TcpFlags::from_letters("").unwrap(), TcpFlags::empty());
        assert_eq!(TcpFlags::from_letters("X"), Err('X'));
    }

    #[test]
    fn ipv4_text_round_trip() {
        let ip = parse_ipv4("10.0.0.1").unwrap();
        assert_eq!(ip, 0x0A00_0001);
        assert_eq!(format_ipv4(ip), "10.0.0.1");
        assert!(parse_ipv4("10.0.0").is_none());
    }
}
