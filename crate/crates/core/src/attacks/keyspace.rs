use std::fmt;

use num_bigint::BigUint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySpaceStage {
    /// Ten unknown values: two coupling strengths and eight initial conditions.
    Naive,
    /// Both `z_A0` and `x_B0` sent in clear: eight values left.
    AfterPublicICs,
    /// Eve only needs Alice's side: `ε_x` and three initial conditions.
    OneSideOnly,
    /// `w_A0` recovered by bisearch to within two decimal digits of uncertainty.
    AfterWEstimate,
}

impl KeySpaceStage {
    pub const ALL: [KeySpaceStage; 4] = [
        KeySpaceStage::Naive,
        KeySpaceStage::AfterPublicICs,
        KeySpaceStage::OneSideOnly,
        KeySpaceStage::AfterWEstimate,
    ];
}

impl fmt::Display for KeySpaceStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeySpaceStage::Naive => "naive",
            KeySpaceStage::AfterPublicICs => "after-public-ics",
            KeySpaceStage::OneSideOnly => "one-side-only",
            KeySpaceStage::AfterWEstimate => "after-w-estimate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeySpaceAccount {
    pub digits_per_value: u32,
    pub stage: KeySpaceStage,
    pub cardinality: BigUint,
}

impl KeySpaceAccount {
    /// `Some(k)` when the cardinality is exactly `10^k`.
    pub fn log10_exact(&self) -> Option<u32> {
        let s = self.cardinality.to_str_radix(10);
        (s.starts_with('1') && s[1..].bytes().all(|b| b == b'0')).then(|| s.len() as u32 - 1)
    }
}

/// Exact number of candidate keys when every value is coded with `digits` decimal
/// digits.
pub fn key_space_cardinality(stage: KeySpaceStage, digits: u32) -> KeySpaceAccount {
    let per_value = BigUint::from(10u32).pow(digits);
    let cardinality = match stage {
        KeySpaceStage::Naive => per_value.pow(10),
        KeySpaceStage::AfterPublicICs => per_value.pow(8),
        KeySpaceStage::OneSideOnly => per_value.pow(4),
        KeySpaceStage::AfterWEstimate => per_value.pow(3) * BigUint::from(100u32),
    };
    KeySpaceAccount {
        digits_per_value: digits,
        stage,
        cardinality,
    }
}
