//! Hamming (SEC) and extended Hamming (SECDED) codes with exact post-decode
//! error analytics.
//!
//! Codes are short (n <= 16), so the output BER is computed by enumerating
//! all 2^n channel error patterns instead of sampling. Codeword bit i
//! corresponds to classic Hamming position i+1 (parity bits at power-of-two
//! positions); SECDED appends one overall parity bit. Shortened codes simply
//! truncate the high data positions.

use crate::error::{Result, RramError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EccKind {
    Sec,
    Secded,
}

/// Decode outcome. `MiscorrectedSilently` can only be assigned when the true
/// data is known (a real decoder cannot distinguish it from `Corrected`);
/// [`classify_pattern`] and the enumeration analytics use it, `decode` never
/// returns it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeStatus {
    Clean,
    Corrected,
    DetectedUncorrectable,
    MiscorrectedSilently,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EccCode {
    kind: EccKind,
    /// total codeword bits, including the overall parity bit for SECDED
    n: usize,
    /// data bits
    k: usize,
    /// Hamming positions 1..=hamming_n carry the SEC part
    hamming_n: usize,
    data_positions: Vec<usize>,
}

impl EccCode {
    /// Possibly-shortened Hamming code with `r` parity bits and `k` data bits.
    /// `k` may be at most 2^r - r - 1; smaller `k` shortens the code.
    pub fn hamming(r: usize, k: usize) -> Result<Self> {
        let full_k = (1usize << r) - r - 1;
        if r < 2 || k == 0 || k > full_k {
            return Err(RramError::InvalidParameter(format!(
                "hamming: r = {r}, k = {k} (max data bits {full_k})"
            )));
        }
        let hamming_n = r + k;
        let data_positions: Vec<usize> = (1..=hamming_n).filter(|p| !p.is_power_of_two()).collect();
        debug_assert_eq!(data_positions.len(), k);
        Ok(EccCode {
            kind: EccKind::Sec,
            n: hamming_n,
            k,
            hamming_n,
            data_positions,
        })
    }

    /// Extended (SECDED) variant: the Hamming code plus one overall parity bit.
    pub fn secded(r: usize, k: usize) -> Result<Self> {
        let mut code = Self::hamming(r, k)?;
        code.kind = EccKind::Secded;
        code.n += 1;
        Ok(code)
    }

    pub fn sec_7_4() -> Self {
        Self::hamming(3, 4).expect("(7,4) is valid")
    }

    pub fn secded_8_4() -> Self {
        Self::secded(3, 4).expect("(8,4) is valid")
    }

    pub fn sec_12_8() -> Self {
        Self::hamming(4, 8).expect("(12,8) is valid")
    }

    pub fn secded_13_8() -> Self {
        Self::secded(4, 8).expect("(13,8) is valid")
    }

    /// The four shipped redundancy variants.
    pub fn shipped() -> Vec<EccCode> {
        vec![
            Self::sec_7_4(),
            Self::secded_8_4(),
            Self::sec_12_8(),
            Self::secded_13_8(),
        ]
    }

    pub fn kind(&self) -> EccKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn name(&self) -> String {
        match self.kind {
            EccKind::Sec => format!("sec_{}_{}", self.n, self.k),
            EccKind::Secded => format!("secded_{}_{}", self.n, self.k),
        }
    }

    fn data_mask(&self) -> u32 {
        self.data_positions
            .iter()
            .fold(0u32, |m, &p| m | (1 << (p - 1)))
    }

    /// Encode `k` data bits (LSB-first) into an `n`-bit codeword.
    pub fn encode(&self, data: u16) -> u32 {
        debug_assert!(self.k == 16 || data < (1 << self.k));
        let mut word = 0u32;
        for (i, &pos) in self.data_positions.iter().enumerate() {
            if data >> i & 1 == 1 {
                word |= 1 << (pos - 1);
            }
        }
        // even parity per power-of-two position
        let mut r_bit = 1usize;
        while r_bit <= self.hamming_n {
            let mut parity = 0u32;
            for pos in 1..=self.hamming_n {
                if pos & r_bit != 0 {
                    parity ^= word >> (pos - 1) & 1;
                }
            }
            if parity == 1 {
                word |= 1 << (r_bit - 1);
            }
            r_bit <<= 1;
        }
        if self.kind == EccKind::Secded && (word.count_ones() & 1) == 1 {
            word |= 1 << (self.n - 1);
        }
        word
    }

    fn extract_data(&self, word: u32) -> u16 {
        let mut data = 0u16;
        for (i, &pos) in self.data_positions.iter().enumerate() {
            if word >> (pos - 1) & 1 == 1 {
                data |= 1 << i;
            }
        }
        data
    }

    fn syndrome(&self, word: u32) -> usize {
        let mut s = 0usize;
        for pos in 1..=self.hamming_n {
            if word >> (pos - 1) & 1 == 1 {
                s ^= pos;
            }
        }
        s
    }

    /// Decode an `n`-bit word. Corrects any single-bit error exactly; SECDED
    /// additionally flags (and never miscorrects) any double error.
    pub fn decode(&self, word: u32) -> (u16, DecodeStatus) {
        let s = self.syndrome(word);
        match self.kind {
            EccKind::Sec => {
                if s == 0 {
                    (self.extract_data(word), DecodeStatus::Clean)
                } else if s <= self.hamming_n {
                    let fixed = word ^ (1 << (s - 1));
                    (self.extract_data(fixed), DecodeStatus::Corrected)
                } else {
                    // syndrome points at a shortened position: >= 2 errors
                    (self.extract_data(word), DecodeStatus::DetectedUncorrectable)
                }
            }
            EccKind::Secded => {
                let odd = word.count_ones() & 1 == 1;
                match (s, odd) {
                    (0, false) => (self.extract_data(word), DecodeStatus::Clean),
                    (0, true) => {
                        // overall parity bit itself flipped; data intact
                        (self.extract_data(word), DecodeStatus::Corrected)
                    }
                    (s, true) if s <= self.hamming_n => {
                        let fixed = word ^ (1 << (s - 1));
                        (self.extract_data(fixed), DecodeStatus::Corrected)
                    }
                    _ => (self.extract_data(word), DecodeStatus::DetectedUncorrectable),
                }
            }
        }
    }

    /// Encode from a bit slice; length must equal `k`.
    pub fn encode_bits(&self, data: &[bool]) -> Result<Vec<bool>> {
        if data.len() != self.k {
            return Err(RramError::LengthMismatch {
                expected: self.k,
                got: data.len(),
            });
        }
        let word = self.encode(
            data.iter()
                .enumerate()
                .fold(0u16, |w, (i, &b)| w | ((b as u16) << i)),
        );
        Ok((0..self.n).map(|i| word >> i & 1 == 1).collect())
    }

    /// Decode from a bit slice; length must equal `n`.
    pub fn decode_bits(&self, word: &[bool]) -> Result<(Vec<bool>, DecodeStatus)> {
        if word.len() != self.n {
            return Err(RramError::LengthMismatch {
                expected: self.n,
                got: word.len(),
            });
        }
        let w = word
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
        let (data, status) = self.decode(w);
        Ok(((0..self.k).map(|i| data >> i & 1 == 1).collect(), status))
    }
}

/// Ground-truth classification of a channel error pattern (the code is
/// linear, so the all-zero codeword stands in for any codeword).
pub fn classify_pattern(code: &EccCode, error_pattern: u32) -> DecodeStatus {
    let (data, status) = code.decode(error_pattern);
    match status {
        DecodeStatus::DetectedUncorrectable => status,
        _ if data != 0 => DecodeStatus::MiscorrectedSilently,
        _ => status,
    }
}

/// Exact per-data-bit post-decode error probability at channel BER `p_in`,
/// by enumeration over all 2^n error patterns. Detected-uncorrectable words
/// pass their data bits through, so those bits stay erroneous at the channel
/// rate within the word.
pub fn ecc_output_ber(code: &EccCode, p_in: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&p_in) {
        return Err(RramError::InvalidParameter(format!(
            "channel BER {p_in} outside [0, 0.5]"
        )));
    }
    if code.n > 16 {
        return Err(RramError::CodeTooLong { n: code.n, max: 16 });
    }
    if p_in == 0.0 {
        return Ok(0.0);
    }
    let n = code.n;
    let k = code.k as f64;
    let data_mask = code.data_mask();
    // expected erroneous data bits per pattern weight class
    let mut bad_bits_by_weight = vec![0.0f64; n + 1];
    for e in 0u32..(1 << n) {
        let w = e.count_ones() as usize;
        let (decoded, status) = code.decode(e);
        let bad = match status {
            DecodeStatus::DetectedUncorrectable => (e & data_mask).count_ones(),
            _ => decoded.count_ones(),
        };
        bad_bits_by_weight[w] += bad as f64;
    }
    let q = 1.0 - p_in;
    let mut total = 0.0;
    for (w, &bad) in bad_bits_by_weight.iter().enumerate() {
        total += bad * p_in.powi(w as i32) * q.powi((n - w) as i32);
    }
    Ok(total / k)
}
