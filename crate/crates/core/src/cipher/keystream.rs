use std::fmt::Write as _;

use crate::analysis::detect_local_minima;
use crate::dynamics::Var;
use crate::error::{Error, Result};

pub const DEFAULT_DECIMATION: usize = 10;

/// Sign-coded local minima of an orbit, one bit kept per `decimation` minima.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keystream {
    /// Each entry is 0 or 1.
    pub bits: Vec<u8>,
    pub source_channel: Var,
    pub decimation: usize,
    /// Sample indices of the minima that produced `bits`.
    pub minima_indices: Vec<usize>,
}

impl Keystream {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Keystream file body: `#` metadata lines followed by one line of `0`/`1`.
    pub fn to_file_string(&self, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# source_channel = {}", self.source_channel);
        let _ = writeln!(out, "# decimation = {}", self.decimation);
        let _ = writeln!(out, "# config_sha256 = {config_hash}");
        let _ = writeln!(out, "# bits = {}", self.bits.len());
        out.extend(self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }));
        out.push('\n');
        out
    }
}

/// Minimum value to bit: positive → 1, otherwise 0.
#[inline]
fn sign_bit(v: f64) -> u8 {
    u8::from(v > 0.0)
}

/// Incremental keystream assembly from a stream of minima.
#[derive(Debug, Clone)]
pub struct KeystreamBuilder {
    ks: Keystream,
    seen: usize,
}

impl KeystreamBuilder {
    pub fn new(source_channel: Var, decimation: usize) -> Self {
        Self {
            ks: Keystream {
                bits: Vec::new(),
                source_channel,
                decimation: decimation.max(1),
                minima_indices: Vec::new(),
            },
            seen: 0,
        }
    }

    #[inline]
    pub fn push_minimum(&mut self, index: usize, value: f64) {
        if self.seen % self.ks.decimation == 0 {
            self.ks.bits.push(sign_bit(value));
            self.ks.minima_indices.push(index);
        }
        self.seen += 1;
    }

    pub fn minima_seen(&self) -> usize {
        self.seen
    }

    pub fn len(&self) -> usize {
        self.ks.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.bits.is_empty()
    }

    pub fn finish(self) -> Keystream {
        self.ks
    }
}

/// Sign-codes every strict local minimum of `series` and keeps minima
/// `0, d, 2d, …`, so the result has `⌈m / d⌉` bits for `m` minima.
pub fn extract_keystream(series: &[f64], decimation: usize, source_channel: Var) -> Result<Keystream> {
    if decimation < 1 {
        return Err(Error::InvalidArgument("decimation must be at least 1".into()));
    }
    let mut b = KeystreamBuilder::new(source_channel, decimation);
    for i in detect_local_minima(series) {
        b.push_minimum(i, series[i]);
    }
    Ok(b.finish())
}

/// XOR with the keystream, most significant bit first within each byte.
pub fn vernam(data: &[u8], ks: &Keystream) -> Result<Vec<u8>> {
    let needed = 8 * data.len();
    if ks.bits.len() < needed {
        return Err(Error::KeystreamExhausted {
            needed,
            available: ks.bits.len(),
        });
    }
    Ok(data
        .iter()
        .zip(ks.bits.chunks_exact(8))
        .map(|(&byte, bits)| {
            let pad = bits.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1));
            byte ^ pad
        })
        .collect())
}

/// Reads the format written by [`Keystream::to_file_string`]. Minima indices are not
/// stored and come back empty.
pub fn parse_keystream_file(text: &str) -> Result<Keystream> {
    let mut source = Var::ZA;
    let mut decimation = DEFAULT_DECIMATION;
    let mut bits = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once('=') {
                match k.trim() {
                    "source_channel" => source = v.trim().parse()?,
                    "decimation" => {
                        decimation = v.trim().parse().map_err(|_| Error::Parse {
                            line: ln + 1,
                            column: 1,
                            message: "bad decimation".into(),
                        })?
                    }
                    _ => {}
                }
            }
            continue;
        }
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => {
                    return Err(Error::Parse {
                        line: ln + 1,
                        column: col + 1,
                        message: format!("unexpected character {ch:?} in keystream"),
                    })
                }
            }
        }
    }
    Ok(Keystream {
        bits,
        source_channel: source,
        decimation,
        minima_indices: Vec::new(),
    })
}
