use alloc::vec::Vec;
use core::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Packet, TcpFlags};
use crate::time::SimTime;

fn offset(i: u64, rate: f64) -> u64 {
    (i as f64 * 1e9 / rate) as u64
}

/// `count` SYNs on a fixed 4-tuple with `seq = 100 + i`, evenly spaced at
/// `rate` packets per second from `start`.
pub fn gen_syn_flood(
    src: Ipv4Addr,
    sport: u16,
    dst: Ipv4Addr,
    dport: u16,
    count: u64,
    rate: f64,
    start: SimTime,
) -> Vec<Packet> {
    (0..count)
        .map(|i| {
            Packet::tcp(src, sport, dst, dport, TcpFlags::SYN)
                .with_seq(100u32.wrapping_add(i as u32), 0)
                .at(SimTime::from_nanos(start.as_nanos() + offset(i, rate)))
        })
        .collect()
}

/// Range forged destinations are drawn from: 172.16.0.0/12.
const FORGED_BASE: u32 = 0xAC10_0000;
const FORGED_SPAN: u32 = 1 << 20;

/// `rate * duration` UDP packets from `src` with random destination address
/// and ports. Destinations are drawn outside `known` so that no
/// address-specific rule can match them.
pub fn gen_table_miss_flood(
    src: Ipv4Addr,
    rate: f64,
    duration_s: f64,
    start: SimTime,
    known: &[Ipv4Addr],
    seed: u64,
) -> Vec<Packet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = (rate * duration_s) as u64;
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let dst = loop {
            let ip = Ipv4Addr::from(FORGED_BASE + rng.gen_range(0..FORGED_SPAN));
            if !known.contains(&ip) && ip != src {
                break ip;
            }
        };
        let sport = rng.gen_range(1024..=u16::MAX);
        let dport = rng.gen_range(1..=u16::MAX);
        out.push(
            Packet::udp(src, sport, dst, dport)
                .at(SimTime::from_nanos(start.as_nanos() + offset(i, rate))),
        );
    }
    out
}
