use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

const MAX_LINE: usize = 1 << 20;
const MAX_SYSTEM: usize = 64 << 20;

/// One protocol message.
#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Hello { version: u32 },
    System(Vec<u8>),
    Param { epoch: u64, value: f64 },
    Results {
        epoch: u64,
        samples: u64,
        errors: Vec<u64>,
        trials: Vec<u64>,
    },
    Idle,
    Quit,
}

impl Message {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            Message::Hello { version } => format!("HELLO SCS {version}\n").into_bytes(),
            Message::System(bytes) => {
                let mut out = format!("SYSTEM {}\n", bytes.len()).into_bytes();
                out.extend_from_slice(bytes);
                out
            }
            Message::Param { epoch, value } => format!("PARAM {epoch} {value}\n").into_bytes(),
            Message::Results {
                epoch,
                samples,
                errors,
                trials,
            } => {
                let mut line = format!("RESULTS {epoch} {samples} {}", errors.len());
                for (e, t) in errors.iter().zip(trials) {
                    line.push_str(&format!(" {e} {t}"));
                }
                line.push('\n');
                line.into_bytes()
            }
            Message::Idle => b"IDLE\n".to_vec(),
            Message::Quit => b"QUIT\n".to_vec(),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode()).map_err(Error::Network)?;
        w.flush().map_err(Error::Network)
    }

    /// Next message, or `None` at a clean end of stream.
    pub fn read_from(r: &mut impl BufRead) -> Result<Option<Message>> {
        let mut line = Vec::new();
        let n = r
            .by_ref()
            .take(MAX_LINE as u64)
            .read_until(b'\n', &mut line)
            .map_err(Error::Network)?;
        if n == 0 {
            return Ok(None);
        }
        if line.last() != Some(&b'\n') {
            return Err(Error::Protocol(if n >= MAX_LINE {
                "line too long".into()
            } else {
                "connection closed mid-message".into()
            }));
        }
        let line = std::str::from_utf8(&line[..line.len() - 1])
            .map_err(|_| Error::Protocol("non-ASCII message".into()))?;
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let bad = || Error::Protocol(format!("malformed message `{line}`"));
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
        let msg = match fields.as_slice() {
            ["HELLO", "SCS", v] => Message::Hello {
                version: v.parse().map_err(|_| bad())?,
            },
            ["SYSTEM", len] => {
                let len = num(len)? as usize;
                if len > MAX_SYSTEM {
                    return Err(Error::Protocol(format!("system of {len} bytes is too large")));
                }
                let mut bytes = vec![0; len];
                r.read_exact(&mut bytes).map_err(Error::Network)?;
                Message::System(bytes)
            }
            ["PARAM", epoch, value] => Message::Param {
                epoch: num(epoch)?,
                value: value.parse().map_err(|_| bad())?,
            },
            ["RESULTS", epoch, samples, k, rest @ ..] => {
                let k = num(k)? as usize;
                if rest.len() != 2 * k {
                    return Err(bad());
                }
                let values = rest.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                Message::Results {
                    epoch: num(epoch)?,
                    samples: num(samples)?,
                    errors: values.iter().step_by(2).copied().collect(),
                    trials: values.iter().skip(1).step_by(2).copied().collect(),
                }
            }
            ["IDLE"] => Message::Idle,
            ["QUIT"] => Message::Quit,
            _ => return Err(bad()),
        };
        Ok(Some(msg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn round_trip(m: Message) {
        let bytes = m.encode();
        let mut cur = Cursor::new(bytes);
        assert_eq!(Message::read_from(&mut cur).unwrap(), Some(m));
        assert_eq!(Message::read_from(&mut cur).unwrap(), None);
    }

    #[test]
    fn all_messages_round_trip() {
        round_trip(Message::Hello { version: 1 });
        round_trip(Message::System(b"uncoded<double>\n# x\n1 2 3\n".to_vec()));
        round_trip(Message::System(Vec::new()));
        round_trip(Message::Param { epoch: 3, value: 6.8 });
        round_trip(Message::Param { epoch: 0, value: 1e-5 });
        round_trip(Message::Results {
            epoch: 2,
            samples: 10,
            errors: vec![3, 1],
            trials: vec![1000, 10],
        });
        round_trip(Message::Idle);
        round_trip(Message::Quit);
    }

    #[test]
    fn exact_framing() {
        assert_eq!(Message::Hello { version: 1 }.encode(), b"HELLO SCS 1\n");
        assert_eq!(Message::Param { epoch: 4, value: 2.5 }.encode(), b"PARAM 4 2.5\n");
        assert_eq!(
            Message::Results {
                epoch: 1,
                samples: 2,
                errors: vec![5, 1],
                trials: vec![64, 2]
            }
            .encode(),
            b"RESULTS 1 2 2 5 64 1 2\n"
        );
        assert_eq!(Message::System(b"ab".to_vec()).encode(), b"SYSTEM 2\nab");
    }

    #[test]
    fn malformed_rejected() {
        for bad in ["HELLO XYZ 1\n", "RESULTS 1 2 2 5 64\n", "PARAM x 1\n", "BOGUS\n", "QUIT"] {
            assert!(Message::read_from(&mut Cursor::new(bad)).is_err(), "{bad}");
        }
        assert!(Message::read_from(&mut Cursor::new("SYSTEM 10\nabc")).is_err());
    }
}
