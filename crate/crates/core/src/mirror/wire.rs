//! Byte layout of the reputation broadcasts.
//!
//! Header: sender (u32), round (u16), pair count (u16). Each pair is a node
//! id (u32) and a value scaled by 1000 (u16). Big-endian throughout.

use num_rational::Ratio;
use thiserror::Error;

use crate::NodeId;

pub const HEADER_BYTES: usize = 8;
pub const PAIR_BYTES: usize = 6;

/// One `(node, value)` pair; `milli` is the value times 1000.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Report {
    pub node: NodeId,
    pub milli: u16,
}

impl Report {
    /// Rounds `value` to the nearest thousandth (halves away from zero).
    pub fn new(node: NodeId, value: Ratio<i128>) -> Self {
        let scaled = (value * 1000).round().to_integer();
        Report {
            node,
            milli: scaled.clamp(0, u16::MAX as i128) as u16,
        }
    }

    pub fn value(&self) -> Ratio<i128> {
        Ratio::new(self.milli as i128, 1000)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("truncated message: {got} bytes, need {need}")]
    Truncated { got: usize, need: usize },
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("too many pairs: {0}")]
    TooMany(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sender: NodeId,
    pub round: u16,
    pub reports: Vec<Report>,
}

pub fn encoded_len(pairs: usize) -> usize {
    HEADER_BYTES + PAIR_BYTES * pairs
}

pub fn encode(msg: &Message) -> Result<Vec<u8>, WireError> {
    let count = u16::try_from(msg.reports.len()).map_err(|_| WireError::TooMany(msg.reports.len()))?;
    let mut out = Vec::with_capacity(encoded_len(msg.reports.len()));
    out.extend_from_slice(&msg.sender.0.to_be_bytes());
    out.extend_from_slice(&msg.round.to_be_bytes());
    out.extend_from_slice(&count.to_be_bytes());
    for r in &msg.reports {
        out.extend_from_slice(&r.node.0.to_be_bytes());
        out.extend_from_slice(&r.milli.to_be_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Message, WireError> {
    if bytes.len() < HEADER_BYTES {
        return Err(WireError::Truncated {
            got: bytes.len(),
            need: HEADER_BYTES,
        });
    }
    let u32_at = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let u16_at = |i: usize| u16::from_be_bytes(bytes[i..i + 2].try_into().expect("2 bytes"));
    let count = u16_at(6) as usize;
    let need = encoded_len(count);
    if bytes.len() < need {
        return Err(WireError::Truncated {
            got: bytes.len(),
            need,
        });
    }
    if bytes.len() > need {
        return Err(WireError::Trailing(bytes.len() - need));
    }
    let reports = (0..count)
        .map(|k| {
            let at = HEADER_BYTES + k * PAIR_BYTES;
            Report {
                node: NodeId(u32_at(at)),
                milli: u16_at(at + 4),
            }
        })
        .collect();
    Ok(Message {
        sender: NodeId(u32_at(0)),
        round: u16_at(4),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_point_values() {
        assert_eq!(Report::new(NodeId(1), Ratio::new(3, 5)).milli, 600);
        assert_eq!(Report::new(NodeId(1), Ratio::new(2, 3)).milli, 667);
        assert_eq!(Report::new(NodeId(1), Ratio::from_integer(10)).milli, 10_000);
        assert_eq!(Report { node: NodeId(0), milli: 700 }.value(), Ratio::new(7, 10));
    }

    #[test]
    fn layout() {
        let msg = Message {
            sender: NodeId(0x0102_0304),
            round: 7,
            reports: vec![Report { node: NodeId(9), milli: 600 }],
        };
        let b = encode(&msg).unwrap();
        assert_eq!(b, vec![1, 2, 3, 4, 0, 7, 0, 1, 0, 0, 0, 9, 0x02, 0x58]);
        assert_eq!(b.len(), encoded_len(1));
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(matches!(decode(&[0; 5]), Err(WireError::Truncated { .. })));
        assert!(matches!(decode(&[0, 0, 0, 0, 0, 0, 0, 1]), Err(WireError::Truncated { .. })));
        assert_eq!(decode(&[0; 9]), Err(WireError::Trailing(1)));
    }

    proptest! {
        #[test]
        fn round_trip(sender in any::<u32>(), round in any::<u16>(),
                      pairs in proptest::collection::vec((any::<u32>(), any::<u16>()), 0..50)) {
            let msg = Message {
                sender: NodeId(sender),
                round,
                reports: pairs.into_iter().map(|(n, m)| Report { node: NodeId(n), milli: m }).collect(),
            };
            let bytes = encode(&msg).unwrap();
            prop_assert_eq!(bytes.len(), encoded_len(msg.reports.len()));
            prop_assert_eq!(decode(&bytes).unwrap(), msg);
        }
    }
}
