//! Per-index mutual information along a decoding order.
//!
//! A query fixes a binary-input MAC, a blocklength `2^n`, a starting genie
//! state (how many leading indices of each user are known) and a sequence of
//! steps (which user decodes its next index). The answer is
//! `I(U_step; Y^N, everything known before the step)` for every step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{h2, DiscreteChannel, ErasureForm};
use crate::error::{Error, Result};
use crate::polar::{bec_bit_channels, polar_encode_in_place};
use crate::sc::{joint_of_mask, LeafModel, ScEngine};
use crate::util::{map_chunks, trial_seed};

const CHUNK: usize = 32;

/// How a statistic was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatMode {
    ExactErasure,
    ExactEnumeration,
    MonteCarlo,
}

impl StatMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatMode::ExactErasure => "exact-erasure",
            StatMode::ExactEnumeration => "exact-enumeration",
            StatMode::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Closed form when available, Monte Carlo otherwise.
    Auto,
    /// Closed form or full enumeration; never sampling.
    Exact,
    /// Always sample.
    MonteCarlo,
}

/// Result of a step query.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMis {
    pub mi: Vec<f64>,
    /// Bhattacharyya parameter of each step's bit channel.
    pub z: Vec<f64>,
    pub mode: StatMode,
    pub samples: usize,
}

/// Estimator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub mode: EstimatorMode,
    pub samples: usize,
    pub seed: u64,
    /// Maximum number of (input, output) sequences enumerated in exact mode.
    pub enumeration_limit: u64,
}

impl Default for Estimator {
    fn default() -> Self {
        Self { mode: EstimatorMode::Auto, samples: 10_000, seed: 0, enumeration_limit: 1 << 22 }
    }
}

impl Estimator {
    pub fn exact() -> Self {
        Self { mode: EstimatorMode::Exact, ..Self::default() }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { mode: EstimatorMode::MonteCarlo, samples, seed, ..Self::default() }
    }

    pub fn auto(samples: usize, seed: u64) -> Self {
        Self { mode: EstimatorMode::Auto, samples, seed, ..Self::default() }
    }

    /// Per-step mutual informations; see the module docs.
    pub fn step_mis(&self, mac: &DiscreteChannel, n: usize, start: &[usize], steps: &[usize]) -> Result<StepMis> {
        validate_steps(mac, n, start, steps)?;
        match (self.mode, mac.erasure_form()) {
            (EstimatorMode::Auto | EstimatorMode::Exact, Some(form)) => Ok(closed_form(form, n, start, steps)),
            (EstimatorMode::Exact, None) => exact_enumeration(mac, n, start, steps, self.enumeration_limit),
            _ => {
                if self.samples == 0 {
                    return Err(Error::Config("sampling budget is zero for a channel without closed form".into()));
                }
                Ok(monte_carlo(mac, n, start, steps, self.samples, self.seed, &[])?.0)
            }
        }
    }

    /// Monte Carlo run that also returns, for the steps listed in `keep`,
    /// the per-trial posterior probability of the true bit.
    pub fn step_posteriors(
        &self,
        mac: &DiscreteChannel,
        n: usize,
        start: &[usize],
        steps: &[usize],
        keep: &[usize],
    ) -> Result<(StepMis, Vec<Vec<f32>>)> {
        validate_steps(mac, n, start, steps)?;
        if self.samples == 0 {
            return Err(Error::Config("sampling budget is zero".into()));
        }
        if keep.iter().any(|&s| s >= steps.len()) {
            return Err(Error::Dimension("kept step out of range".into()));
        }
        monte_carlo(mac, n, start, steps, self.samples, self.seed, keep)
    }
}

fn validate_steps(mac: &DiscreteChannel, n: usize, start: &[usize], steps: &[usize]) -> Result<()> {
    let k = mac.senders();
    if !mac.is_binary_input() {
        return Err(Error::Unsupported("polar recursion needs binary inputs".into()));
    }
    if start.len() != k {
        return Err(Error::Dimension(format!("start state has {} users, channel has {k}", start.len())));
    }
    if n > 24 {
        return Err(Error::Size(format!("blocklength 2^{n} too large")));
    }
    let len = 1usize << n;
    let mut count = start.to_vec();
    for &j in steps {
        if j >= k {
            return Err(Error::Dimension(format!("step user {j} out of range")));
        }
        count[j] += 1;
    }
    if count.iter().any(|&c| c > len) {
        return Err(Error::Dimension("steps exceed the blocklength".into()));
    }
    Ok(())
}

fn closed_form(form: &ErasureForm, n: usize, start: &[usize], steps: &[usize]) -> StepMis {
    let mut prefix = start.to_vec();
    let mut mi = Vec::with_capacity(steps.len());
    let mut z = Vec::with_capacity(steps.len());
    let lists: Vec<Vec<f64>> = match form {
        ErasureForm::Bec { epsilon } | ErasureForm::XorErasure { epsilon } => vec![bec_bit_channels(*epsilon, n)],
        ErasureForm::IndependentErasures { epsilons } => epsilons.iter().map(|&e| bec_bit_channels(e, n)).collect(),
    };
    for &j in steps {
        prefix[j] += 1;
        let pos = prefix[j];
        let e = match form {
            ErasureForm::Bec { .. } => lists[0][pos - 1],
            ErasureForm::XorErasure { .. } => {
                if prefix[1 - j] >= pos {
                    0.0
                } else {
                    lists[0][pos - 1]
                }
            }
            ErasureForm::IndependentErasures { .. } => lists[j][pos - 1],
        };
        mi.push(1.0 - e);
        z.push(e);
    }
    StepMis { mi, z, mode: StatMode::ExactErasure, samples: 0 }
}

/// Encodes every user's `u` into `x` and returns joint kernel rows per use.
fn joint_inputs(u: &[Vec<u8>], scratch: &mut [Vec<u8>], k: usize) -> Vec<usize> {
    for j in 0..k {
        scratch[j].copy_from_slice(&u[j]);
        polar_encode_in_place(&mut scratch[j]).expect("power of two");
    }
    let len = u[0].len();
    (0..len)
        .map(|t| {
            let mask = (0..k).fold(0, |m, j| m | (scratch[j][t] as usize) << j);
            joint_of_mask(mask, k)
        })
        .collect()
}

fn monte_carlo(
    mac: &DiscreteChannel,
    n: usize,
    start: &[usize],
    steps: &[usize],
    samples: usize,
    seed: u64,
    keep: &[usize],
) -> Result<(StepMis, Vec<Vec<f32>>)> {
    let model = LeafModel::new(mac)?;
    let k = mac.senders();
    let len = 1usize << n;
    let ny = mac.output_arity();
    let cdf: Vec<Vec<f64>> = (0..mac.joint_inputs())
        .map(|r| {
            let mut acc = 0.0;
            mac.row(r).iter().map(|p| {
                acc += p;
                acc
            }).collect()
        })
        .collect();
    let mut keep_slot = vec![usize::MAX; steps.len()];
    for (i, &s) in keep.iter().enumerate() {
        keep_slot[s] = i;
    }
    let ns = steps.len();
    let parts = map_chunks(samples, CHUNK, |range| {
        let mut engine = ScEngine::new(&model, n);
        let mut h_sum = vec![0.0; ns];
        let mut z_sum = vec![0.0; ns];
        let mut kept: Vec<Vec<f32>> = vec![Vec::with_capacity(range.len()); keep.len()];
        let mut u = vec![vec![0u8; len]; k];
        let mut scratch = vec![vec![0u8; len]; k];
        let mut y = vec![0usize; len];
        for trial in range {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 0, trial as u64));
            for row in u.iter_mut() {
                for b in row.iter_mut() {
                    *b = rng.gen::<bool>() as u8;
                }
            }
            let rows = joint_inputs(&u, &mut scratch, k);
            for t in 0..len {
                let r: f64 = rng.gen();
                let c = &cdf[rows[t]];
                y[t] = c.iter().position(|&v| v > r).unwrap_or(ny - 1);
                while mac.prob(rows[t], y[t]) == 0.0 && y[t] > 0 {
                    y[t] -= 1;
                }
            }
            engine.load(&y).expect("sized");
            engine.jump(start, &u);
            for (si, &j) in steps.iter().enumerate() {
                let post = engine.advance(j);
                let pos = engine.prefix()[j];
                let bit = u[j][pos - 1];
                h_sum[si] += h2(post[1]);
                z_sum[si] += 2.0 * (post[0] * post[1]).sqrt();
                if keep_slot[si] != usize::MAX {
                    kept[keep_slot[si]].push(post[bit as usize] as f32);
                }
                engine.commit(j, bit);
            }
        }
        (h_sum, z_sum, kept)
    });
    let mut h = vec![0.0; ns];
    let mut z = vec![0.0; ns];
    let mut kept: Vec<Vec<f32>> = vec![Vec::with_capacity(samples); keep.len()];
    for (hs, zs, ks) in parts {
        h.iter_mut().zip(&hs).for_each(|(a, b)| *a += b);
        z.iter_mut().zip(&zs).for_each(|(a, b)| *a += b);
        kept.iter_mut().zip(ks).for_each(|(a, b)| a.extend(b));
    }
    let s = samples as f64;
    let mi = h.iter().map(|v| (1.0 - v / s).clamp(0.0, 1.0)).collect();
    let z = z.iter().map(|v| (v / s).clamp(0.0, 1.0)).collect();
    Ok((StepMis { mi, z, mode: StatMode::MonteCarlo, samples }, kept))
}

fn exact_enumeration(mac: &DiscreteChannel, n: usize, start: &[usize], steps: &[usize], limit: u64) -> Result<StepMis> {
    let model = LeafModel::new(mac)?;
    let k = mac.senders();
    let len = 1usize << n;
    let bits = k * len;
    if bits >= 40 {
        return Err(Error::Unsupported(format!("exact enumeration over 2^{bits} inputs")));
    }
    let supports: Vec<Vec<(usize, f64)>> = (0..mac.joint_inputs())
        .map(|r| (0..mac.output_arity()).filter(|&y| mac.prob(r, y) > 0.0).map(|y| (y, mac.prob(r, y))).collect())
        .collect();
    let widest = supports.iter().map(Vec::len).max().unwrap_or(1) as f64;
    let bound = (bits as f64).exp2() * widest.powi(len as i32);
    if bound > limit as f64 {
        return Err(Error::Unsupported(format!("exact enumeration needs up to {bound:.3e} sequences (limit {limit})")));
    }
    let ns = steps.len();
    let total = 1usize << bits;
    let parts = map_chunks(total, 256, |range| {
        let mut engine = ScEngine::new(&model, n);
        let mut h = vec![0.0; ns];
        let mut z = vec![0.0; ns];
        let mut u = vec![vec![0u8; len]; k];
        let mut scratch = vec![vec![0u8; len]; k];
        let mut y = vec![0usize; len];
        for word in range {
            for j in 0..k {
                for i in 0..len {
                    u[j][i] = (word >> (j * len + i) & 1) as u8;
                }
            }
            let rows = joint_inputs(&u, &mut scratch, k);
            let mut choice = vec![0usize; len];
            loop {
                let mut w = 1.0 / total as f64;
                for t in 0..len {
                    let (sym, p) = supports[rows[t]][choice[t]];
                    y[t] = sym;
                    w *= p;
                }
                engine.load(&y).expect("sized");
                engine.jump(start, &u);
                for (si, &j) in steps.iter().enumerate() {
                    let post = engine.advance(j);
                    let bit = u[j][engine.prefix()[j] - 1];
                    h[si] += w * h2(post[1]);
                    z[si] += w * 2.0 * (post[0] * post[1]).sqrt();
                    engine.commit(j, bit);
                }
                let mut t = 0;
                while t < len {
                    choice[t] += 1;
                    if choice[t] < supports[rows[t]].len() {
                        break;
                    }
                    choice[t] = 0;
                    t += 1;
                }
                if t == len {
                    break;
                }
            }
        }
        (h, z)
    });
    let mut h = vec![0.0; ns];
    let mut z = vec![0.0; ns];
    for (hs, zs) in parts {
        h.iter_mut().zip(&hs).for_each(|(a, b)| *a += b);
        z.iter_mut().zip(&zs).for_each(|(a, b)| *a += b);
    }
    Ok(StepMis {
        mi: h.iter().map(|v| (1.0 - v).clamp(0.0, 1.0)).collect(),
        z: z.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        mode: StatMode::ExactEnumeration,
        samples: 0,
    })
}
