//! Monotone chain rules for polar MAC coding and rate splits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{DiscreteChannel, InputDistribution};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, StatMode};
use crate::util::subsets_by_size;

/// Interleaving of users' indices into one decoding order. Each user
/// appears exactly `blocklength` times; the `k`-th occurrence of user `j`
/// decodes index `k` of that user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonotonePath {
    users: usize,
    blocklength: usize,
    sequence: Vec<usize>,
}

impl MonotonePath {
    pub fn new(users: usize, blocklength: usize, sequence: Vec<usize>) -> Result<Self> {
        let mut counts = vec![0usize; users];
        for &j in &sequence {
            if j >= users {
                return Err(Error::Dimension(format!("user {} out of range", j + 1)));
            }
            counts[j] += 1;
        }
        if counts.iter().any(|&c| c != blocklength) {
            return Err(Error::Dimension(format!("each user must appear {blocklength} times, counts {counts:?}")));
        }
        Ok(Self { users, blocklength, sequence })
    }

    /// Decodes users in the given order, one whole block each.
    pub fn sequential(users: usize, blocklength: usize, order: &[usize]) -> Result<Self> {
        let seq = order.iter().flat_map(|&j| std::iter::repeat(j).take(blocklength)).collect();
        Self::new(users, blocklength, seq)
    }

    /// Builds a path from `(user, count)` runs; users are 0-based.
    pub fn from_runs(users: usize, runs: &[(usize, usize)]) -> Result<Self> {
        let seq: Vec<usize> = runs.iter().flat_map(|&(j, c)| std::iter::repeat(j).take(c)).collect();
        let len = seq.len() / users.max(1);
        Self::new(users, len, seq)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn blocklength(&self) -> usize {
        self.blocklength
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    /// Run-length form, users 0-based.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &j in &self.sequence {
            match out.last_mut() {
                Some((u, c)) if *u == j => *c += 1,
                _ => out.push((j, 1)),
            }
        }
        out
    }

    /// `(user, index)` pairs in decoding order, both 0-based.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        let mut count = vec![0usize; self.users];
        self.sequence
            .iter()
            .map(|&j| {
                count[j] += 1;
                (j, count[j] - 1)
            })
            .collect()
    }

    /// Parses `"1^64 2^256 1^192"` (1-based users).
    pub fn parse(s: &str, users: usize) -> Result<Self> {
        let mut runs = Vec::new();
        for tok in s.split_whitespace() {
            let (u, c) = tok.split_once('^').unwrap_or((tok, "1"));
            let u: usize = u.parse().map_err(|_| Error::Config(format!("bad path token {tok:?}")))?;
            let c: usize = c.parse().map_err(|_| Error::Config(format!("bad path token {tok:?}")))?;
            if u == 0 || u > users {
                return Err(Error::Config(format!("path user {u} out of range 1..={users}")));
            }
            runs.push((u - 1, c));
        }
        Self::from_runs(users, &runs)
    }
}

impl fmt::Display for MonotonePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.runs().iter().map(|(j, c)| format!("{}^{}", j + 1, c)).collect();
        f.write_str(&parts.join(" "))
    }
}

impl Serialize for MonotonePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            users: usize,
            blocklength: usize,
            runs: &'a str,
        }
        Repr { users: self.users, blocklength: self.blocklength, runs: &self.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MonotonePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            users: usize,
            blocklength: usize,
            runs: String,
        }
        let r = Repr::deserialize(d)?;
        let p = MonotonePath::parse(&r.runs, r.users).map_err(serde::de::Error::custom)?;
        if p.blocklength != r.blocklength {
            return Err(serde::de::Error::custom("blocklength does not match runs"));
        }
        Ok(p)
    }
}

impl FromStr for MonotonePath {
    type Err = Error;

    /// Infers the user count from the largest user id.
    fn from_str(s: &str) -> Result<Self> {
        let users = s
            .split_whitespace()
            .filter_map(|t| t.split('^').next()?.parse::<usize>().ok())
            .max()
            .ok_or_else(|| Error::Config("empty path".into()))?;
        Self::parse(s, users)
    }
}

/// Repeats every element of the path `factor` times.
pub fn scale_path(path: &MonotonePath, factor: usize) -> Result<MonotonePath> {
    if factor == 0 {
        return Err(Error::Dimension("scale factor must be positive".into()));
    }
    let seq = path.sequence.iter().flat_map(|&j| std::iter::repeat(j).take(factor)).collect();
    MonotonePath::new(path.users, path.blocklength * factor, seq)
}

/// Source of per-step mutual informations (see [`Estimator::step_mis`]).
pub trait StepOracle {
    fn users(&self) -> usize;

    fn step_mis(&self, n: usize, start: &[usize], steps: &[usize]) -> Result<Vec<f64>>;

    /// Single-letter `I(X_set; Y | X_rest)` under uniform inputs.
    fn face_bound(&self, set: &[usize]) -> Result<f64>;
}

/// [`StepOracle`] backed by a channel and an estimator.
#[derive(Debug, Clone, Copy)]
pub struct ChannelOracle<'a> {
    pub mac: &'a DiscreteChannel,
    pub estimator: &'a Estimator,
}

impl StepOracle for ChannelOracle<'_> {
    fn users(&self) -> usize {
        self.mac.senders()
    }

    fn step_mis(&self, n: usize, start: &[usize], steps: &[usize]) -> Result<Vec<f64>> {
        Ok(self.estimator.step_mis(self.mac, n, start, steps)?.mi)
    }

    fn face_bound(&self, set: &[usize]) -> Result<f64> {
        let rest: Vec<usize> = (0..self.users()).filter(|j| !set.contains(j)).collect();
        self.mac.mutual_information(&InputDistribution::uniform(self.mac.input_arities()), set, &rest)
    }
}

/// Per-index mutual informations and rates achieved along a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRateProfile {
    pub path: MonotonePath,
    /// `per_index_mi[user][index]`, index 0-based.
    pub per_index_mi: Vec<Vec<f64>>,
    /// Bhattacharyya estimates in the same layout.
    pub per_index_z: Vec<Vec<f64>>,
    pub rates: Vec<f64>,
    pub mode: StatMode,
    pub samples: usize,
}

impl PathRateProfile {
    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Evaluates the exact or estimated rates along a path.
pub fn path_rates(mac: &DiscreteChannel, path: &MonotonePath, est: &Estimator) -> Result<PathRateProfile> {
    if mac.senders() != path.users {
        return Err(Error::Dimension("path and channel disagree on user count".into()));
    }
    let n = log2_exact(path.blocklength)?;
    let res = est.step_mis(mac, n, &vec![0; path.users], &path.sequence)?;
    let k = path.users;
    let mut mi = vec![Vec::with_capacity(path.blocklength); k];
    let mut z = vec![Vec::with_capacity(path.blocklength); k];
    for (s, &j) in path.sequence.iter().enumerate() {
        mi[j].push(res.mi[s]);
        z[j].push(res.z[s]);
    }
    let rates = mi.iter().map(|v| v.iter().sum::<f64>() / path.blocklength as f64).collect();
    Ok(PathRateProfile { path: path.clone(), per_index_mi: mi, per_index_z: z, rates, mode: res.mode, samples: res.samples })
}

pub(crate) fn log2_exact(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Size(format!("blocklength {n} is not a power of two")));
    }
    Ok(n.trailing_zeros() as usize)
}

/// A target moved onto the dominant face, with the original kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceTarget {
    pub target: Vec<f64>,
    pub projected_from: Option<Vec<f64>>,
}

/// Checks that `target` lies in the uniform-input region and moves it onto
/// the dominant face if it lies strictly inside. Coordinates are raised in
/// user order, each as far as the region allows.
pub fn dominant_face_target(oracle: &dyn StepOracle, target: &[f64], tol: f64) -> Result<FaceTarget> {
    let k = oracle.users();
    if target.len() != k {
        return Err(Error::Dimension(format!("target has {} entries for {k} users", target.len())));
    }
    if target.iter().any(|&r| r < -tol) {
        return Err(Error::Precondition("target has a negative rate".into()));
    }
    let subsets = subsets_by_size(k);
    let mut bound = vec![0.0; 1 << k];
    for &m in &subsets {
        bound[m] = oracle.face_bound(&mask_users(m))?;
    }
    let sum_over = |t: &[f64], m: usize| mask_users(m).iter().map(|&j| t[j]).sum::<f64>();
    for &m in &subsets {
        if sum_over(target, m) > bound[m] + tol {
            return Err(Error::Precondition(format!(
                "target violates the bound on users {:?}: {:.6} > {:.6}",
                mask_users(m).iter().map(|j| j + 1).collect::<Vec<_>>(),
                sum_over(target, m),
                bound[m]
            )));
        }
    }
    let full = (1 << k) - 1;
    let deficit = bound[full] - sum_over(target, full);
    if deficit <= tol {
        return Ok(FaceTarget { target: target.to_vec(), projected_from: None });
    }
    let mut t = target.to_vec();
    for j in 0..k {
        let slack = subsets
            .iter()
            .filter(|&&m| m >> j & 1 == 1)
            .map(|&m| bound[m] - sum_over(&t, m))
            .fold(f64::INFINITY, f64::min);
        t[j] += slack.max(0.0);
    }
    Ok(FaceTarget { target: t, projected_from: Some(target.to_vec()) })
}

pub(crate) fn mask_users(m: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|j| m >> j & 1 == 1).collect()
}

/// Rates along the family `U_1^i, U_2^N, U_1^{i+1..N}` for `i = 0..=N`,
/// starting from `base` with `lead` swept and `other` decoded in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoUserSweep {
    pub lead: usize,
    pub other: usize,
    pub base: Vec<usize>,
    /// Rate of `lead` (per channel use) for `i = base[lead]..=N`.
    pub lead_rates: Vec<f64>,
    /// Rate of `other` for the same range.
    pub other_rates: Vec<f64>,
}

impl TwoUserSweep {
    pub fn compute(oracle: &dyn StepOracle, n: usize, base: &[usize], lead: usize, other: usize) -> Result<Self> {
        let len = 1usize << n;
        let (bl, bo) = (base[lead], base[other]);
        let beta = oracle.step_mis(n, base, &vec![lead; len - bl])?;
        let mut alpha_steps = vec![other; len - bo];
        alpha_steps.extend(std::iter::repeat(lead).take(len - bl));
        let alpha = oracle.step_mis(n, base, &alpha_steps)?;
        let (first, rest) = alpha.split_at(len - bo);
        let g0: f64 = first.iter().sum();
        let tail_total: f64 = rest.iter().sum();
        let nf = len as f64;
        let mut lead_rates = Vec::with_capacity(len - bl + 1);
        let mut other_rates = Vec::with_capacity(len - bl + 1);
        let (mut head, mut diff, mut tail) = (0.0, 0.0, tail_total);
        lead_rates.push((head + tail) / nf);
        other_rates.push((g0 + diff) / nf);
        for k in 0..len - bl {
            head += beta[k];
            tail -= rest[k];
            diff += rest[k] - beta[k];
            lead_rates.push((head + tail) / nf);
            other_rates.push((g0 + diff) / nf);
        }
        Ok(Self { lead, other, base: base.to_vec(), lead_rates, other_rates })
    }

    /// Path for the split point `i` (absolute prefix of `lead`).
    pub fn path_runs(&self, i: usize, len: usize) -> Vec<(usize, usize)> {
        let bl = self.base[self.lead];
        vec![(self.lead, i - bl), (self.other, len - self.base[self.other]), (self.lead, len - i)]
    }

    /// Split point minimizing the worst per-user gap; ties go to the
    /// smallest `i`.
    pub fn best(&self, target_lead: f64, target_other: f64) -> (usize, f64) {
        let bl = self.base[self.lead];
        let mut best = (bl, f64::INFINITY);
        for (off, (&a, &b)) in self.lead_rates.iter().zip(&self.other_rates).enumerate() {
            let gap = (a - target_lead).abs().max((b - target_other).abs());
            if gap < best.1 - 1e-15 {
                best = (bl + off, gap);
            }
        }
        best
    }

    /// Smallest split point with both gaps below `eps`.
    pub fn first_within(&self, target_lead: f64, target_other: f64, eps: f64) -> Option<(usize, f64)> {
        let bl = self.base[self.lead];
        self.lead_rates
            .iter()
            .zip(&self.other_rates)
            .map(|(&a, &b)| (a - target_lead).abs().max((b - target_other).abs()))
            .enumerate()
            .find(|&(_, gap)| gap < eps)
            .map(|(off, gap)| (bl + off, gap))
    }
}

/// Output of a split search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub path: MonotonePath,
    pub target: FaceTarget,
    pub rates: Vec<f64>,
    pub gap: f64,
    pub decisions: Vec<TightnessDecision>,
}

/// Two-user split at a fixed blocklength `2^n`.
pub fn split_at_blocklength(oracle: &dyn StepOracle, target: &[f64], n: usize) -> Result<Split> {
    if oracle.users() != 2 {
        return Err(Error::Dimension("two-user split needs a two-user channel".into()));
    }
    let face = dominant_face_target(oracle, target, 1e-9)?;
    let t = &face.target;
    let sweep = TwoUserSweep::compute(oracle, n, &[0, 0], 0, 1)?;
    let (i, gap) = sweep.best(t[0], t[1]);
    let len = 1usize << n;
    let path = MonotonePath::from_runs(2, &sweep.path_runs(i, len))?;
    let off = i;
    let rates = vec![sweep.lead_rates[off], sweep.other_rates[off]];
    Ok(Split { path, target: face, rates, gap, decisions: Vec::new() })
}

/// Scans `N = 2, 4, ..., 2^max_n` and, at the first blocklength where one
/// exists, returns the smallest split point within `eps` of the target in
/// every coordinate.
pub fn find_two_user_split(oracle: &dyn StepOracle, target: &[f64], eps: f64, max_n: usize) -> Result<Split> {
    if oracle.users() != 2 {
        return Err(Error::Dimension("two-user split needs a two-user channel".into()));
    }
    let face = dominant_face_target(oracle, target, 1e-9)?;
    let t = face.target.clone();
    let mut best_gap = f64::INFINITY;
    for n in 1..=max_n {
        let sweep = TwoUserSweep::compute(oracle, n, &[0, 0], 0, 1)?;
        if let Some((i, gap)) = sweep.first_within(t[0], t[1], eps) {
            let path = MonotonePath::from_runs(2, &sweep.path_runs(i, 1 << n))?;
            let rates = vec![sweep.lead_rates[i], sweep.other_rates[i]];
            return Ok(Split { path, target: face, rates, gap, decisions: Vec::new() });
        }
        best_gap = best_gap.min(sweep.best(t[0], t[1]).1);
    }
    Err(Error::NotFound { best_gap })
}

/// One tightness decision of the recursive split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessDecision {
    pub active: Vec<usize>,
    pub base: Vec<usize>,
    pub lead: usize,
    /// Absolute prefix of `lead` at which a bound became tight.
    pub split: usize,
    /// The tight subset (excluding `lead`).
    pub tight: Vec<usize>,
    /// Rate of the tight subset at the split.
    pub value: f64,
    /// Target sum of the tight subset.
    pub target: f64,
}

/// Recursive split for any number of users at blocklength `2^n`.
pub fn find_k_user_split(oracle: &dyn StepOracle, target: &[f64], eps: f64, n: usize) -> Result<Split> {
    let k = oracle.users();
    let face = dominant_face_target(oracle, target, 1e-9)?;
    let mut decisions = Vec::new();
    let active: Vec<usize> = (0..k).collect();
    let mut runs = Vec::new();
    split_rec(oracle, n, &active, &vec![0; k], &face.target, &mut runs, &mut decisions)?;
    let path = MonotonePath::from_runs(k, &runs.into_iter().filter(|r| r.1 > 0).collect::<Vec<_>>())?;
    let mi = oracle.step_mis(n, &vec![0; k], path.sequence())?;
    let mut rates = vec![0.0; k];
    for (s, &j) in path.sequence().iter().enumerate() {
        rates[j] += mi[s];
    }
    let len = (1usize << n) as f64;
    rates.iter_mut().for_each(|r| *r /= len);
    let gap = rates.iter().zip(&face.target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap >= eps {
        return Err(Error::NotFound { best_gap: gap });
    }
    Ok(Split { path, target: face, rates, gap, decisions })
}

/// `targets[j]` is indexed by user id; only active users are read.
fn split_rec(
    oracle: &dyn StepOracle,
    n: usize,
    active: &[usize],
    base: &[usize],
    targets: &[f64],
    runs: &mut Vec<(usize, usize)>,
    log: &mut Vec<TightnessDecision>,
) -> Result<()> {
    let len = 1usize << n;
    let lead = active[0];
    if active.len() == 1 {
        runs.push((lead, len - base[lead]));
        return Ok(());
    }
    if active.len() == 2 {
        let other = active[1];
        let sweep = TwoUserSweep::compute(oracle, n, base, lead, other)?;
        let (i, _) = sweep.best(targets[lead], targets[other]);
        let off = i - base[lead];
        log.push(TightnessDecision {
            active: active.to_vec(),
            base: base.to_vec(),
            lead,
            split: i,
            tight: vec![other],
            value: sweep.other_rates[off],
            target: targets[other],
        });
        runs.extend(sweep.path_runs(i, len));
        return Ok(());
    }
    let others: Vec<usize> = active[1..].to_vec();
    let bl = base[lead];
    let beta = oracle.step_mis(n, base, &vec![lead; len - bl])?;
    let nf = len as f64;
    // g[s][i - bl] for each subset s of `others` (bitmask over positions in `others`).
    let subsets = subsets_by_size(others.len());
    let mut g: Vec<(usize, Vec<f64>)> = Vec::with_capacity(subsets.len());
    for &m in &subsets {
        let members: Vec<usize> = mask_users(m).iter().map(|&p| others[p]).collect();
        let mut steps = Vec::new();
        for &j in &members {
            steps.extend(std::iter::repeat(j).take(len - base[j]));
        }
        let head = steps.len();
        steps.extend(std::iter::repeat(lead).take(len - bl));
        let alpha = oracle.step_mis(n, base, &steps)?;
        let mut acc: f64 = alpha[..head].iter().sum();
        let mut vals = Vec::with_capacity(len - bl + 1);
        vals.push(acc / nf);
        for k in 0..len - bl {
            acc += alpha[head + k] - beta[k];
            vals.push(acc / nf);
        }
        g.push((m, vals));
    }
    // First crossing of any bound. Steps are at most 1/N, so the crossing
    // is tight to within 1/N.
    let tol = 1e-9;
    let mut choice = None;
    'outer: for off in 0..=len - bl {
        for (m, vals) in &g {
            let want: f64 = mask_users(*m).iter().map(|&p| targets[others[p]]).sum();
            if vals[off] >= want - tol {
                choice = Some((off, *m, vals[off], want));
                break 'outer;
            }
        }
    }
    let full = (1usize << others.len()) - 1;
    let (off, m, value, want) = choice.unwrap_or_else(|| {
        let vals = &g.iter().find(|(mm, _)| *mm == full).expect("full subset").1;
        let want = others.iter().map(|&j| targets[j]).sum();
        (len - bl, full, vals[len - bl], want)
    });
    let i0 = bl + off;
    let tight: Vec<usize> = mask_users(m).iter().map(|&p| others[p]).collect();
    let rest: Vec<usize> = others.iter().copied().filter(|j| !tight.contains(j)).collect();
    log.push(TightnessDecision { active: active.to_vec(), base: base.to_vec(), lead, split: i0, tight: tight.clone(), value, target: want });
    runs.push((lead, off));
    let mut base1 = base.to_vec();
    base1[lead] = i0;
    split_rec(oracle, n, &tight, &base1, targets, runs, log)?;
    let mut base2 = base1.clone();
    for &j in &tight {
        base2[j] = len;
    }
    let mut targets2 = targets.to_vec();
    targets2[lead] -= beta[..off].iter().sum::<f64>() / nf;
    let mut active2 = vec![lead];
    active2.extend(rest);
    split_rec(oracle, n, &active2, &base2, &targets2, runs, log)
}
