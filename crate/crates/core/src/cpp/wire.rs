//! Frame format shared with the generated programs: a 4-byte big-endian
//! length followed by the big-endian magnitude of the integer.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("frame shorter than its 4-byte header")]
    Truncated,
    #[error("frame declares {declared} byte(s) but carries {actual}")]
    Length { declared: usize, actual: usize },
}

pub fn encode(n: &BigUint) -> Vec<u8> {
    let body = if n.bits() == 0 { Vec::new() } else { n.to_bytes_be() };
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

/// Decodes one frame, returning the integer and the unread tail.
pub fn decode(frame: &[u8]) -> Result<(BigUint, &[u8]), WireError> {
    let header: [u8; 4] = frame.get(..4).ok_or(WireError::Truncated)?.try_into().expect("4 bytes");
    let len = u32::from_be_bytes(header) as usize;
    let rest = &frame[4..];
    if rest.len() < len {
        return Err(WireError::Length { declared: len, actual: rest.len() });
    }
    Ok((BigUint::from_bytes_be(&rest[..len]), &rest[len..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_frames() {
        assert_eq!(encode(&BigUint::from(0u8)), [0, 0, 0, 0]);
        assert_eq!(encode(&BigUint::from(258u32)), [0, 0, 0, 2, 1, 2]);
        assert_eq!(decode(&[0, 0, 0, 1]), Err(WireError::Length { declared: 1, actual: 0 }));
        assert_eq!(decode(&[0, 0]), Err(WireError::Truncated));
    }

    proptest! {
        #[test]
        fn round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..80), tail in proptest::collection::vec(any::<u8>(), 0..4)) {
            let n = BigUint::from_bytes_be(&bytes);
            let mut frame = encode(&n);
            frame.extend_from_slice(&tail);
            let (back, rest) = decode(&frame).unwrap();
            prop_assert_eq!(back, n);
            prop_assert_eq!(rest, &tail[..]);
        }
    }
}
