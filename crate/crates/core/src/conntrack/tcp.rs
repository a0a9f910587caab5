use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::TcpFlags;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TcpState {
    SynSent,
    SynRecv,
    Established,
    Closing,
    Closed,
}

impl TcpState {
    pub const ALL: [TcpState; 5] = [
        TcpState::SynSent,
        TcpState::SynRecv,
        TcpState::Established,
        TcpState::Closing,
        TcpState::Closed,
    ];

    pub fn is_half_open(self) -> bool {
        matches!(self, TcpState::SynSent | TcpState::SynRecv)
    }
}

impl fmt::Display for TcpState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TcpState::SynSent => "SYN_SENT",
            TcpState::SynRecv => "SYN_RECV",
            TcpState::Established => "ESTABLISHED",
            TcpState::Closing => "CLOSING",
            TcpState::Closed => "CLOSED",
        })
    }
}

/// Direction of a packet relative to the connection's originator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Original,
    Reply,
}

/// The flag combination that drives a transition. RST dominates, then
/// SYN(+ACK), then FIN, then a bare ACK.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Segment {
    Syn,
    SynAck,
    Ack,
    Fin,
    Rst,
    Other,
}

impl Segment {
    pub(crate) fn of(flags: TcpFlags) -> Segment {
        if flags.contains(TcpFlags::RST) {
            Segment::Rst
        } else if flags.contains(TcpFlags::SYN | TcpFlags::ACK) {
            Segment::SynAck
        } else if flags.contains(TcpFlags::SYN) {
            Segment::Syn
        } else if flags.contains(TcpFlags::FIN) {
            Segment::Fin
        } else if flags.contains(TcpFlags::ACK) {
            Segment::Ack
        } else {
            Segment::Other
        }
    }
}

/// The handshake-level TCP machine. Anything not listed leaves the state
/// unchanged.
///
/// | segment | direction | from        | to          |
/// |---------|-----------|-------------|-------------|
/// | RST     | either    | any         | CLOSED      |
/// | SYN     | original  | any         | SYN_SENT    |
/// | SYN+ACK | reply     | SYN_SENT    | SYN_RECV    |
/// | ACK     | original  | SYN_RECV    | ESTABLISHED |
/// | FIN     | either    | ESTABLISHED | CLOSING     |
pub fn next_tcp_state(state: TcpState, flags: TcpFlags, dir: Direction) -> TcpState {
    use Direction::*;
    use TcpState::*;
    match (Segment::of(flags), dir, state) {
        (Segment::Rst, _, _) => Closed,
        (Segment::Syn, Original, _) => SynSent,
        (Segment::SynAck, Reply, SynSent) => SynRecv,
        (Segment::Ack, Original, SynRecv) => Established,
        (Segment::Fin, _, Established) => Closing,
        (_, _, s) => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handshake() {
        let s = next_tcp_state(
            TcpState::SynSent,
            TcpFlags::SYN | TcpFlags::ACK,
            Direction::Reply,
        );
        assert_eq!(s, TcpState::SynRecv);
        let s = next_tcp_state(s, TcpFlags::ACK, Direction::Original);
        assert_eq!(s, TcpState::Established);
    }

    #[test]
    fn no_shortcut_to_established() {
        assert_eq!(
            next_tcp_state(TcpState::SynSent, TcpFlags::ACK, Direction::Original),
            TcpState::SynSent
        );
        assert_eq!(
            next_tcp_state(
                TcpState::SynSent,
                TcpFlags::SYN | TcpFlags::ACK,
                Direction::Original
            ),
            TcpState::SynSent
        );
    }

    #[test]
    fn reset_tears_down() {
        for s in TcpState::ALL {
            assert_eq!(
                next_tcp_state(s, TcpFlags::RST, Direction::Original),
                TcpState::Closed
            );
            assert_eq!(
                next_tcp_state(s, TcpFlags::RST | TcpFlags::ACK, Direction::Reply),
                TcpState::Closed
            );
        }
    }

    #[test]
    fn fin_only_closes_established() {
        assert_eq!(
            next_tcp_state(
                TcpState::Established,
                TcpFlags::FIN | TcpFlags::ACK,
                Direction::Reply
            ),
            TcpState::Closing
        );
        assert_eq!(
            next_tcp_state(TcpState::SynRecv, TcpFlags::FIN, Direction::Original),
            TcpState::SynRecv
        );
    }
}
