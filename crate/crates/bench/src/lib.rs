//! Shared input builders for the benchmarks.

use flowml_core::packet::{PacketRecord, TcpFlags, PROTO_TCP};
use flowml_core::rng::Rng;
use flowml_core::synth::{gen_blobs, BlobSpec};
use flowml_core::Dataset;

/// A packet stream alternating across `n_flows` TCP conversations.
pub fn packet_stream(n_flows: u16, packets_per_flow: usize) -> Vec<PacketRecord> {
    let mut out = Vec::with_capacity(n_flows as usize * packets_per_flow);
    let mut rng = Rng::from_seed(42);
    let mut ts = 0i64;
    for round in 0..packets_per_flow {
        for flow in 0..n_flows {
            ts += 10 + rng.below(200) as i64;
            let fwd = round % 2 == 0;
            let (src_port, dst_port) = if fwd { (1000 + flow, 80) } else { (80, 1000 + flow) };
            let (src_ip, dst_ip) = if fwd {
                (0x0A00_0001, 0x0A00_0002)
            } else {
                (0x0A00_0002, 0x0A00_0001)
            };
            out.push(PacketRecord {
                ts_us: ts,
                src_ip,
                dst_ip,
                src_port,
                dst_port,
                protocol: PROTO_TCP,
                tcp_flags: TcpFlags(TcpFlags::ACK),
                header_len_bytes: 40,
                payload_len_bytes: rng.below(1400) as u32,
                tcp_window: 8192,
            });
        }
    }
    out
}

pub fn bench_blobs(n_per_class: usize, d: usize) -> Dataset {
    gen_blobs(&BlobSpec {
        n_per_class,
        n_classes: 4,
        d,
        n_informative: d.min(4),
        separation: 8.0,
        noise: 1.0,
        seed: 42,
    })
    .expect("blob spec is valid")
}
