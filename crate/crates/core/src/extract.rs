//! Post-processing of outcome strings.
//!
//! Every extractor exists as an incremental state object (`feed` chunks, then
//! `finish`) and as a one-shot function. Splitting the input into chunks at any
//! boundary yields the same output as a single call.
//!
//! Yields on i.i.d. input:
//!
//! * von Neumann: `p(1-p)` output bits per input bit (¼ when unbiased).
//! * Peres at depth `d`: at least the von Neumann yield, approaching the binary
//!   entropy `h(p)` as `d` grows.
//! * Pair von Neumann on pair outcomes with single-pair law `q_c` (`c = 2a + b`):
//!   a position-pair is discarded with probability `Σ q_c²`, so the yield is
//!   `(1 - Σ q_c²) / 2` output bits per input position. With all `q_c = ¼` this is
//!   `3/8`; for `theta = pi/5` and efficiencies `(0.30, 0.33, 0.29, 0.30)` it is
//!   `0.36253`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{check_same_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionOutput {
    pub bits: BitString,
    /// Input positions read.
    pub consumed: usize,
    /// Input positions dropped without contributing to any output.
    pub discarded: usize,
}

impl ExtractionOutput {
    /// Output bits per consumed input position.
    pub fn yield_rate(&self) -> f64 {
        if self.consumed == 0 {
            0.0
        } else {
            self.bits.len() as f64 / self.consumed as f64
        }
    }
}

/// Offset XOR `z_i = x_i ^ y_(i+j)`; inputs of length `n + j` give `n` bits.
pub fn xor_offset(x: &BitString, y: &BitString, j: usize) -> Result<BitString> {
    check_same_len(x.len(), y.len())?;
    if j >= x.len() {
        return Err(Error::usage(format!(
            "offset {j} leaves no output from strings of length {}",
            x.len()
        )));
    }
    let n = x.len() - j;
    Ok((0..n).map(|i| x.get(i) ^ y.get(i + j)).collect())
}

/// Incremental offset XOR over paired chunks of equal length.
#[derive(Debug, Clone)]
pub struct XorOffset {
    j: usize,
    queued_x: VecDeque<bool>,
    consumed: usize,
}

impl XorOffset {
    pub fn new(j: usize) -> Self {
        Self {
            j,
            queued_x: VecDeque::with_capacity(j + 1),
            consumed: 0,
        }
    }

    pub fn feed(&mut self, x: &BitString, y: &BitString) -> Result<BitString> {
        check_same_len(x.len(), y.len())?;
        let mut out = BitString::with_capacity(x.len());
        for (a, b) in x.iter().zip(y.iter()) {
            self.queued_x.push_back(a);
            if self.consumed >= self.j {
                let xa = self.queued_x.pop_front().expect("queue holds j + 1 bits");
                out.push(xa ^ b);
            }
            self.consumed += 1;
        }
        Ok(out)
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// Number of trailing `x` bits that never met a partner.
    pub fn discarded(&self) -> usize {
        self.queued_x.len()
    }
}

/// Incremental von Neumann extractor: `01 -> 0`, `10 -> 1`, equal pairs dropped.
#[derive(Debug, Clone, Default)]
pub struct VonNeumann {
    pending: Option<bool>,
    consumed: usize,
    discarded: usize,
}

impl VonNeumann {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, z: &BitString) -> BitString {
        let mut out = BitString::with_capacity(z.len() / 4);
        for b in z.iter() {
            self.consumed += 1;
            match self.pending.take() {
                None => self.pending = Some(b),
                Some(a) if a != b => out.push(a),
                Some(_) => self.discarded += 2,
            }
        }
        out
    }

    /// Counts a trailing unpaired bit as discarded.
    pub fn finish(self) -> (usize, usize) {
        (
            self.consumed,
            self.discarded + self.pending.is_some() as usize,
        )
    }
}

/// Output is unbiased whenever the two bits of each pair share the same `P(1)`.
/// A bias that drifts slowly against the pair spacing leaves only a second-order
/// residue; a bias that differs between the first and second bit of every pair
/// passes straight through.
pub fn von_neumann(z: &BitString) -> ExtractionOutput {
    let mut vn = VonNeumann::new();
    let bits = vn.feed(z);
    let (consumed, discarded) = vn.finish();
    ExtractionOutput {
        bits,
        consumed,
        discarded,
    }
}

/// One level of the Peres recursion.
#[derive(Debug, Clone)]
struct PeresNode {
    pending: Option<bool>,
    out: BitString,
    discarded: usize,
    // Parity of every pair, and the value of every equal pair.
    children: Option<Box<(PeresNode, PeresNode)>>,
}

impl PeresNode {
    fn new(depth: usize) -> Self {
        Self {
            pending: None,
            out: BitString::new(),
            discarded: 0,
            children: (depth > 1)
                .then(|| Box::new((PeresNode::new(depth - 1), PeresNode::new(depth - 1)))),
        }
    }

    fn push(&mut self, b: bool) {
        let Some(a) = self.pending.take() else {
            self.pending = Some(b);
            return;
        };
        if a != b {
            self.out.push(a);
        }
        match self.children.as_deref_mut() {
            Some((parity, value)) => {
                parity.push(a ^ b);
                if a == b {
                    value.push(a);
                }
            }
            None if a == b => self.discarded += 2,
            None => {}
        }
    }

    fn finish_into(self, out: &mut BitString) -> usize {
        let mut discarded = self.discarded + self.pending.is_some() as usize;
        out.extend_from(&self.out);
        if let Some(children) = self.children {
            let (parity, value) = *children;
            discarded += parity.finish_into(out);
            discarded += value.finish_into(out);
        }
        discarded
    }
}

/// Iterated von Neumann extractor of Peres, with an explicit recursion depth.
///
/// `Ψ_1 = VN`; `Ψ_d(x) = VN(x) ++ Ψ_(d-1)(u) ++ Ψ_(d-1)(v)` where `u` holds the XOR
/// of every input pair and `v` the common value of every equal pair. Output
/// order requires buffering everything beyond the first level until `finish`.
#[derive(Debug, Clone)]
pub struct Peres {
    root: PeresNode,
    consumed: usize,
}

pub const DEFAULT_PERES_DEPTH: usize = 4;

impl Peres {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::usage("Peres depth must be at least 1"));
        }
        Ok(Self {
            root: PeresNode::new(depth),
            consumed: 0,
        })
    }

    pub fn feed(&mut self, z: &BitString) {
        for b in z.iter() {
            self.root.push(b);
        }
        self.consumed += z.len();
    }

    pub fn finish(self) -> ExtractionOutput {
        let mut bits = BitString::new();
        let discarded = self.root.finish_into(&mut bits);
        ExtractionOutput {
            bits,
            consumed: self.consumed,
            discarded,
        }
    }
}

pub fn peres(z: &BitString, depth: usize) -> Result<ExtractionOutput> {
    let mut p = Peres::new(depth)?;
    p.feed(z);
    Ok(p.finish())
}

/// Two-string debiaser: consecutive position-pairs `(a1 b1)`, `(a2 b2)` are compared
/// as two-bit words (`00 < 01 < 10 < 11`); smaller first gives 0, larger first
/// gives 1, equal is dropped.
#[derive(Debug, Clone, Default)]
pub struct PairVonNeumann {
    pending: Option<u8>,
    consumed: usize,
    discarded: usize,
}

impl PairVonNeumann {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, x: &BitString, y: &BitString) -> Result<BitString> {
        check_same_len(x.len(), y.len())?;
        let mut out = BitString::with_capacity(x.len() / 2);
        for (a, b) in x.iter().zip(y.iter()) {
            let word = ((a as u8) << 1) | b as u8;
            self.consumed += 1;
            match self.pending.take() {
                None => self.pending = Some(word),
                Some(first) if first < word => out.push(false),
                Some(first) if first > word => out.push(true),
                Some(_) => self.discarded += 2,
            }
        }
        Ok(out)
    }

    pub fn finish(self) -> (usize, usize) {
        (
            self.consumed,
            self.discarded + self.pending.is_some() as usize,
        )
    }
}

pub fn pair_von_neumann(x: &BitString, y: &BitString) -> Result<ExtractionOutput> {
    let mut pvn = PairVonNeumann::new();
    let bits = pvn.feed(x, y)?;
    let (consumed, discarded) = pvn.finish();
    Ok(ExtractionOutput {
        bits,
        consumed,
        discarded,
    })
}
