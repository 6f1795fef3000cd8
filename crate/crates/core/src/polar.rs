//! Polar transform, bit-channel synthesis and index classification.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::channel::DiscreteChannel;
use crate::error::{Error, Result};
use crate::estimator::{Estimator, StatMode, StepMis};

/// Computes `x = u G_N` with `G_N = B_N F^{(x)n}` over GF(2).
pub fn polar_encode(u: &[u8]) -> Result<Vec<u8>> {
    let mut x = u.to_vec();
    polar_encode_in_place(&mut x)?;
    Ok(x)
}

/// In-place polar transform. `G_N` is its own inverse, so this also decodes.
pub fn polar_encode_in_place(x: &mut [u8]) -> Result<()> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Size(format!("length {n} is not a power of two")));
    }
    bit_reverse_permute(x);
    let mut h = 1;
    while h < n {
        for block in x.chunks_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (p, q) in a.iter_mut().zip(b.iter()) {
                *p ^= q;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Inverse transform `u = x G_N^{-1}`.
pub fn polar_decode_transform(x: &[u8]) -> Result<Vec<u8>> {
    polar_encode(x)
}

fn bit_reverse_permute(x: &mut [u8]) {
    let n = x.len();
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let r = i.reverse_bits() >> (usize::BITS - bits);
        if i < r {
            x.swap(i, r);
        }
    }
}

/// Erasure probabilities of the `2^n` bit channels of a BEC, in index order.
pub fn bec_bit_channels(epsilon: f64, n: usize) -> Vec<f64> {
    let mut z = vec![epsilon];
    for _ in 0..n {
        let mut next = Vec::with_capacity(2 * z.len());
        for &e in &z {
            next.push(2.0 * e - e * e);
            next.push(e * e);
        }
        z = next;
    }
    z
}

/// Statistics of one synthesized bit channel; `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitChannelStat {
    pub index: usize,
    pub mi: f64,
    pub z: Option<f64>,
    pub mode: StatMode,
    pub sample_count: usize,
}

impl BitChannelStat {
    pub fn from_steps(steps: &StepMis) -> Vec<BitChannelStat> {
        steps
            .mi
            .iter()
            .enumerate()
            .map(|(i, &mi)| BitChannelStat {
                index: i + 1,
                mi,
                z: steps.z.get(i).copied(),
                mode: steps.mode,
                sample_count: steps.samples,
            })
            .collect()
    }
}

/// Bit-channel statistics for `2^n` uses of a binary-input channel.
pub fn synthesize_p2p(ch: &DiscreteChannel, n: usize, est: &Estimator) -> Result<Vec<BitChannelStat>> {
    if ch.input_arities() != [2] {
        return Err(Error::Unsupported("point-to-point synthesis needs a single binary input".into()));
    }
    let steps = vec![0usize; 1 << n];
    let out = est.step_mis(ch, n, &[0], &steps)?;
    Ok(BitChannelStat::from_steps(&out))
}

/// Good/bad thresholds on per-index mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub good: f64,
    pub bad: f64,
}

impl Thresholds {
    pub fn new(good: f64, bad: f64) -> Result<Self> {
        if !(0.0 < bad && bad < 1.0 && 0.0 < good && good < 1.0) {
            return Err(Error::Config(format!("thresholds ({good}, {bad}) must lie in (0, 1)")));
        }
        if bad > good {
            return Err(Error::Config(format!("bad threshold {bad} exceeds good threshold {good}")));
        }
        Ok(Self { good, bad })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { good: 0.99, bad: 0.01 }
    }
}

/// Four-set partition of indices with respect to two receivers.
///
/// Type I is good for both, II good for Y and bad for Z, III bad for Y and
/// good for Z, IV bad for both. Indices are 1-based. Residual indices are in
/// none of the four types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexClassification {
    pub len: usize,
    pub thresholds: Thresholds,
    pub good_y: BTreeSet<usize>,
    pub bad_y: BTreeSet<usize>,
    pub good_z: BTreeSet<usize>,
    pub bad_z: BTreeSet<usize>,
    pub type_i: BTreeSet<usize>,
    pub type_ii: BTreeSet<usize>,
    pub type_iii: BTreeSet<usize>,
    pub type_iv: BTreeSet<usize>,
}

impl IndexClassification {
    pub fn residual(&self) -> BTreeSet<usize> {
        (1..=self.len)
            .filter(|i| {
                !self.type_i.contains(i) && !self.type_ii.contains(i) && !self.type_iii.contains(i) && !self.type_iv.contains(i)
            })
            .collect()
    }

    pub fn incompatible(&self) -> usize {
        self.type_ii.len() + self.type_iii.len()
    }
}

/// Classifies indices from per-index mutual informations at two receivers.
pub fn classify(mi_y: &[f64], mi_z: &[f64], th: Thresholds) -> Result<IndexClassification> {
    Thresholds::new(th.good, th.bad)?;
    if mi_y.len() != mi_z.len() {
        return Err(Error::Dimension("stat lists differ in length".into()));
    }
    let sets = |mi: &[f64]| -> (BTreeSet<usize>, BTreeSet<usize>) {
        let good = (1..=mi.len()).filter(|&i| mi[i - 1] > th.good).collect();
        let bad = (1..=mi.len()).filter(|&i| mi[i - 1] < th.bad).collect();
        (good, bad)
    };
    let (good_y, bad_y) = sets(mi_y);
    let (good_z, bad_z) = sets(mi_z);
    Ok(IndexClassification {
        len: mi_y.len(),
        thresholds: th,
        type_i: good_y.intersection(&good_z).copied().collect(),
        type_ii: good_y.intersection(&bad_z).copied().collect(),
        type_iii: bad_y.intersection(&good_z).copied().collect(),
        type_iv: bad_y.intersection(&bad_z).copied().collect(),
        good_y,
        bad_y,
        good_z,
        bad_z,
    })
}

/// CSV with columns `index,mi,z,mode,samples`.
pub fn stats_to_csv(stats: &[BitChannelStat]) -> String {
    let mut s = String::from("index,mi,z,mode,samples\n");
    for st in stats {
        let z = st.z.map(|z| format!("{z:.12e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{:.12e},{},{},{}", st.index, st.mi, z, st.mode.as_str(), st.sample_count);
    }
    s
}
