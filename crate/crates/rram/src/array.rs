//! The differential memory array: device-by-device programming with fresh
//! log-normal draws, XNOR readout through the sense amplifiers, and Monte
//! Carlo read-after-write error measurement with endurance sweeps.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::analytics::optimal_reference;
use crate::error::{Result, RramError};
use crate::rng::Stream;
use crate::sense::{pcsa_read, pcsa_xnor_read, SenseModel};
use crate::stats::{sample_resistance, ConditionEntry, ResistanceDistribution};

/// One 2T2R bit: complementary devices plus the pair's programming counter.
#[derive(Debug)]
pub struct CellPair {
    pub r_bl: f64,
    pub r_blb: f64,
    pub cycles: u64,
}

/// Readout structure under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellMode {
    /// Single device compared against the optimal reference resistance by an
    /// ideal comparator (the single-device BER is a property of the state
    /// populations, not of the sense amplifier).
    Single1T1R,
    /// Complementary pair read through the behavioral PCSA.
    Diff2T2R,
}

/// Grid of complementary pairs programmed under one condition. Devices are
/// formed once at construction; programming never verifies.
pub struct DiffArray {
    rows: usize,
    cols: usize,
    cells: Vec<CellPair>,
    entry: ConditionEntry,
    sense: SenseModel,
    formed: bool,
    program_energy_pj: f64,
    sense_events: AtomicU64,
}

impl DiffArray {
    pub fn new(rows: usize, cols: usize, entry: ConditionEntry, sense: SenseModel) -> Self {
        assert!(rows > 0 && cols > 0);
        let hrs_median = entry.hrs.median_ohms();
        let cells = (0..rows * cols)
            .map(|_| CellPair {
                // post-forming, pre-programming: both devices near the HRS median
                r_bl: hrs_median,
                r_blb: hrs_median,
                cycles: 0,
            })
            .collect();
        DiffArray {
            rows,
            cols,
            cells,
            entry,
            sense,
            formed: true,
            program_energy_pj: 0.0,
            sense_events: AtomicU64::new(0),
        }
    }

    /// The kilobit geometry of the measured die: 32x32 pairs, 2048 devices.
    pub fn kilobit(entry: ConditionEntry, sense: SenseModel) -> Self {
        Self::new(32, 32, entry, sense)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_formed(&self) -> bool {
        self.formed
    }

    pub fn cell(&self, row: usize, col: usize) -> Result<&CellPair> {
        self.check_index(row, col)?;
        Ok(&self.cells[row * self.cols + col])
    }

    /// Programming energy accumulated so far, in picojoules.
    pub fn program_energy_pj(&self) -> f64 {
        self.program_energy_pj
    }

    /// Number of sense-amplifier activations so far.
    pub fn sense_events(&self) -> u64 {
        self.sense_events.load(Ordering::Relaxed)
    }

    fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(RramError::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// Program one bit: fresh resistance draws for both devices, with the
    /// state populations aged by this pair's own cycle counter. One SET plus
    /// one RESET per programming.
    pub fn program_bit(
        &mut self,
        row: usize,
        col: usize,
        bit: bool,
        stream: &mut Stream,
    ) -> Result<()> {
        self.check_index(row, col)?;
        let cell = &mut self.cells[row * self.cols + col];
        let (lrs, hrs) = self.entry.aged(cell.cycles);
        let (bl_dist, blb_dist) = if bit { (hrs, lrs) } else { (lrs, hrs) };
        cell.r_bl = sample_resistance(&bl_dist, stream);
        cell.r_blb = sample_resistance(&blb_dist, stream);
        cell.cycles += 1;
        self.program_energy_pj += self.entry.set_energy_pj + self.entry.reset_energy_pj;
        Ok(())
    }

    /// Program the whole array in row-major order; `bits` is flat row-major
    /// with exactly rows*cols entries.
    pub fn program_matrix(&mut self, bits: &[bool], stream: &mut Stream) -> Result<()> {
        if bits.len() != self.rows * self.cols {
            return Err(RramError::ShapeMismatch {
                expected: (self.rows, self.cols),
                got: (bits.len() / self.cols.max(1), self.cols),
            });
        }
        for row in 0..self.rows {
            for col in 0..self.cols {
                self.program_bit(row, col, bits[row * self.cols + col], stream)?;
            }
        }
        Ok(())
    }

    /// Differential read of one cell through the PCSA.
    pub fn read_bit(&self, row: usize, col: usize, stream: &mut Stream) -> Result<bool> {
        self.check_index(row, col)?;
        let cell = &self.cells[row * self.cols + col];
        self.sense_events.fetch_add(1, Ordering::Relaxed);
        Ok(pcsa_read(cell.r_bl, cell.r_blb, &self.sense, stream))
    }

    /// Read an entire row through the XNOR-enriched sense amplifiers:
    /// element j is XNOR(stored bit j, x[j]), with per-read sensing errors.
    pub fn read_row_xnor(&self, row: usize, x: &[bool], stream: &mut Stream) -> Result<Vec<bool>> {
        self.check_index(row, 0)?;
        if x.len() != self.cols {
            return Err(RramError::LengthMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        self.sense_events
            .fetch_add(self.cols as u64, Ordering::Relaxed);
        let base = row * self.cols;
        Ok((0..self.cols)
            .map(|col| {
                let cell = &self.cells[base + col];
                pcsa_xnor_read(cell.r_bl, cell.r_blb, x[col], &self.sense, stream)
            })
            .collect())
    }

    /// Tabular dump: one line per cell with the nominal stored bit.
    pub fn dump(&self) -> String {
        let mut out = String::from("row\tcol\tbit\tr_bl\tr_blb\tcycles\n");
        for row in 0..self.rows {
            for col in 0..self.cols {
                let c = &self.cells[row * self.cols + col];
                out.push_str(&format!(
                    "{row}\t{col}\t{}\t{:?}\t{:?}\t{}\n",
                    (c.r_bl > c.r_blb) as u8,
                    c.r_bl,
                    c.r_blb,
                    c.cycles
                ));
            }
        }
        out
    }
}

/// Monte Carlo BER estimate with a binomial 95% interval.
#[derive(Clone, Copy, Debug)]
pub struct BerEstimate {
    pub ber: f64,
    pub ci95: (f64, f64),
    pub trials: u64,
    pub errors: u64,
}

impl BerEstimate {
    fn from_counts(errors: u64, trials: u64) -> Self {
        let p = errors as f64 / trials as f64;
        let half = 1.96 * (p * (1.0 - p) / trials as f64).sqrt();
        BerEstimate {
            ber: p,
            ci95: ((p - half).max(0.0), (p + half).min(1.0)),
            trials,
            errors,
        }
    }
}

fn measure_core(
    lrs: &ResistanceDistribution,
    hrs: &ResistanceDistribution,
    sense: &SenseModel,
    mode: CellMode,
    trials: u64,
    stream: &mut Stream,
) -> BerEstimate {
    let r_ref = match mode {
        CellMode::Single1T1R => optimal_reference(lrs, hrs),
        CellMode::Diff2T2R => 0.0,
    };
    let chunks = 64usize;
    let per_chunk = trials / chunks as u64;
    let remainder = trials % chunks as u64;
    let streams = stream.split(chunks);
    let errors: u64 = streams
        .into_par_iter()
        .enumerate()
        .map(|(i, mut s)| {
            let n = per_chunk + if (i as u64) < remainder { 1 } else { 0 };
            let mut errs = 0u64;
            for _ in 0..n {
                let bit = s.bit();
                let read = match mode {
                    CellMode::Single1T1R => {
                        let r = sample_resistance(if bit { hrs } else { lrs }, &mut s);
                        r > r_ref
                    }
                    CellMode::Diff2T2R => {
                        let (bl, blb) = if bit { (hrs, lrs) } else { (lrs, hrs) };
                        let r_bl = sample_resistance(bl, &mut s);
                        let r_blb = sample_resistance(blb, &mut s);
                        pcsa_read(r_bl, r_blb, sense, &mut s)
                    }
                };
                if read != bit {
                    errs += 1;
                }
            }
            errs
        })
        .sum();
    BerEstimate::from_counts(errors, trials)
}

/// Read-after-write error probability of a condition, measured by Monte
/// Carlo over fresh equiprobable bits. Trials are partitioned over derived
/// streams, so the result does not depend on worker scheduling.
pub fn measure_ber(
    entry: &ConditionEntry,
    sense: &SenseModel,
    mode: CellMode,
    trials: u64,
    stream: &mut Stream,
) -> Result<BerEstimate> {
    if trials < 10_000 {
        return Err(RramError::InvalidParameter(format!(
            "BER measurement needs at least 1e4 trials, got {trials}"
        )));
    }
    Ok(measure_core(
        &entry.lrs, &entry.hrs, sense, mode, trials, stream,
    ))
}

/// One checkpoint of an endurance sweep.
#[derive(Clone, Copy, Debug)]
pub struct EnduranceRow {
    pub cycles: u64,
    pub ber_1t1r: BerEstimate,
    pub ber_2t2r: BerEstimate,
}

/// Measure both readout modes at each cycle checkpoint, with the state
/// populations aged analytically (no cycle-by-cycle loop).
pub fn endurance_sweep(
    entry: &ConditionEntry,
    sense: &SenseModel,
    checkpoints: &[u64],
    trials: u64,
    stream: &mut Stream,
) -> Result<Vec<EnduranceRow>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RramError::InvalidParameter(
            "endurance checkpoints must be strictly increasing".into(),
        ));
    }
    checkpoints
        .iter()
        .map(|&cycles| {
            let (lrs, hrs) = entry.aged(cycles);
            let ber_1t1r = measure_core(
                &lrs,
                &hrs,
                sense,
                CellMode::Single1T1R,
                trials,
                &mut stream.clone(),
            );
            let ber_2t2r = measure_core(&lrs, &hrs, sense, CellMode::Diff2T2R, trials, stream);
            Ok(EnduranceRow {
                cycles,
                ber_1t1r,
                ber_2t2r,
            })
        })
        .collect()
}
