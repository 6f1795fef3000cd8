//! Compound-MAC polar codes: construction, encoding, successive
//! cancellation decoding and the achievability check.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::{build_schedule, AlignmentMode, AlignmentSchedule, BaseType, Node, VarRef};
use crate::chain::{
    find_k_user_split, log2_exact, path_rates, split_at_blocklength, ChannelOracle, FaceTarget, MonotonePath, PathRateProfile, Split,
    TightnessDecision,
};
use crate::channel::{h2, DiscreteChannel};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, StatMode};
use crate::polar::{classify, polar_encode_in_place, Thresholds};
use crate::sc::{joint_of_mask, LeafModel, ScEngine};
use crate::util::{map_chunks, trial_seed, wilson_interval};

/// How the two receivers' rate pairs relate to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// The target lies on both dominant faces.
    EqualSum,
    /// Each receiver gets its own point on its dominant face, dominating
    /// the target.
    UnequalSum,
}

/// Which jointly usable variables carry information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InfoSelection {
    /// Every variable good for both receivers.
    JointlyGood,
    /// The most reliable variables, `rates[j] * M` of them for user `j`.
    MostReliable { rates: Vec<f64> },
    /// The most reliable `fraction` of the jointly good variables, so the
    /// code runs below its design rate.
    Margin { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeConfig {
    pub blocklength: usize,
    /// Total number of alignment levels; the code has `2^levels` blocks.
    pub levels: usize,
    pub thresholds: Thresholds,
    pub strategy: Strategy,
    pub estimator: Estimator,
    pub info: InfoSelection,
    /// User aligned at the first level.
    pub first_user: usize,
    /// Seed of a pseudo-random frozen sequence shared by encoder and
    /// decoders; `None` freezes every bit to zero.
    pub frozen_seed: Option<u64>,
    /// Users each receiver decodes (0-based); the rest are treated as
    /// noise. `None` means both receivers decode every user.
    pub decode_sets: Option<[Vec<usize>; 2]>,
}

impl CodeConfig {
    pub fn new(blocklength: usize, levels: usize) -> Self {
        Self {
            blocklength,
            levels,
            thresholds: Thresholds::default(),
            strategy: Strategy::EqualSum,
            estimator: Estimator::default(),
            info: InfoSelection::JointlyGood,
            first_user: 0,
            frozen_seed: None,
            decode_sets: None,
        }
    }
}

/// Statistics of one aligned variable at both receivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedStat {
    pub mi: [f64; 2],
    pub z: [f64; 2],
}

/// Role of an aligned variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Info,
    FrozenBadBoth,
    FrozenMinus,
    FrozenLeftover,
    FrozenIncompatible,
    FrozenResidual,
    FrozenUnselected,
}

/// Complete description of a compound-MAC polar code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundCodeSpec {
    pub users: usize,
    pub blocklength: usize,
    pub levels: usize,
    pub total_length: usize,
    pub target: Vec<f64>,
    pub thresholds: Thresholds,
    pub strategy: Strategy,
    pub splits: Vec<Split>,
    pub base_rates: Vec<Vec<f64>>,
    pub schedule: AlignmentSchedule,
    /// `roles[user][pos]` over the aligned order of that user.
    pub roles: Vec<Vec<Role>>,
    pub stats: Vec<Vec<AlignedStat>>,
    pub rates: Vec<f64>,
    pub stat_mode: StatMode,
    pub frozen_seed: Option<u64>,
    pub decode_sets: [Vec<usize>; 2],
}

/// Builds a code for the compound channel `(y, z)` at `target`.
pub fn build_code(y: &DiscreteChannel, z: &DiscreteChannel, target: &[f64], cfg: &CodeConfig) -> Result<CompoundCodeSpec> {
    let k = y.senders();
    if z.senders() != k || target.len() != k {
        return Err(Error::Dimension("channels and target disagree on user count".into()));
    }
    Thresholds::new(cfg.thresholds.good, cfg.thresholds.bad)?;
    let n = log2_exact(cfg.blocklength)?;
    let sets = normalize_decode_sets(cfg.decode_sets.as_ref(), k)?;
    let owned = [effective_channel(y, &sets[0])?, effective_channel(z, &sets[1])?];
    let channels = [&owned[0], &owned[1]];
    let mut splits = Vec::with_capacity(2);
    for (r, ch) in [y, z].into_iter().enumerate() {
        let split = receiver_split(ch, &sets[r], target, n, &cfg.estimator)?;
        if cfg.strategy == Strategy::EqualSum && split.target.projected_from.is_some() {
            return Err(Error::Precondition("equal-sum strategy needs the target on both dominant faces".into()));
        }
        splits.push(split);
    }
    let profiles: Vec<PathRateProfile> = channels
        .iter()
        .zip(&splits)
        .map(|(ch, s)| path_rates(ch, &s.path, &cfg.estimator))
        .collect::<Result<_>>()?;
    let mut profiles = profiles;
    // A user decoded at one receiver only places no constraint on the
    // other, which reuses its statistics.
    for j in 0..k {
        for r in 0..2 {
            if !sets[r].contains(&j) {
                let (mi, zz) = (profiles[1 - r].per_index_mi[j].clone(), profiles[1 - r].per_index_z[j].clone());
                profiles[r].per_index_mi[j] = mi;
                profiles[r].per_index_z[j] = zz;
            }
        }
    }
    let stat_mode = profiles[0].mode;
    let classes = (0..k)
        .map(|j| classify(&profiles[0].per_index_mi[j], &profiles[1].per_index_mi[j], cfg.thresholds))
        .collect::<Result<Vec<_>>>()?;
    let mode = if k == 2 { AlignmentMode::CompoundTwoUser } else { AlignmentMode::KUserSequential };
    let paths = splits.iter().map(|s| s.path.clone()).collect();
    let schedule = build_schedule(&classes, paths, cfg.levels, mode, cfg.first_user)?;
    let combined = combined_stats(channels, &splits, &profiles, &schedule, &cfg.estimator)?;
    let mut roles = Vec::with_capacity(k);
    let mut stats = Vec::with_capacity(k);
    let mut rates = Vec::with_capacity(k);
    let m = schedule.total_length();
    for j in 0..k {
        let order = schedule.utilde_order(j);
        let st: Vec<AlignedStat> = order
            .iter()
            .map(|node| match *node {
                Node::Var(v) => base_stat(&profiles, v),
                Node::Minus(p) => combined[&p].0,
                Node::Plus(p) => combined[&p].1,
            })
            .collect();
        let mut r: Vec<Role> = order
            .iter()
            .zip(&st)
            .map(|(node, s)| match *node {
                Node::Minus(_) => Role::FrozenMinus,
                Node::Plus(_) => role_from_stat(s, cfg.thresholds),
                Node::Var(v) => {
                    if schedule.is_frozen_leftover(v) {
                        Role::FrozenLeftover
                    } else {
                        match schedule.base_type(v) {
                            BaseType::GoodBoth => role_from_stat(s, cfg.thresholds),
                            BaseType::BadBoth => Role::FrozenBadBoth,
                            BaseType::GoodYBadZ | BaseType::BadYGoodZ => Role::FrozenIncompatible,
                            BaseType::Residual => Role::FrozenResidual,
                        }
                    }
                }
            })
            .collect();
        if let InfoSelection::MostReliable { rates: want } = &cfg.info {
            let count = ((want.get(j).copied().unwrap_or(0.0) * m as f64).floor() as usize).min(m);
            let mut ranked: Vec<usize> = (0..m).filter(|&p| !matches!(r[p], Role::FrozenMinus | Role::FrozenLeftover)).collect();
            ranked.sort_by(|&a, &b| {
                let sa = (1.0 - st[a].mi[0]) + (1.0 - st[a].mi[1]);
                let sb = (1.0 - st[b].mi[0]) + (1.0 - st[b].mi[1]);
                sa.total_cmp(&sb).then(a.cmp(&b))
            });
            for (rank, &p) in ranked.iter().enumerate() {
                if rank < count {
                    r[p] = Role::Info;
                } else if r[p] == Role::Info {
                    r[p] = Role::FrozenUnselected;
                }
            }
        }
        if let InfoSelection::Margin { fraction } = cfg.info {
            let mut good: Vec<usize> = (0..m).filter(|&p| r[p] == Role::Info).collect();
            let keep = ((fraction.clamp(0.0, 1.0) * good.len() as f64).floor()) as usize;
            good.sort_by(|&a, &b| (st[a].z[0] + st[a].z[1]).total_cmp(&(st[b].z[0] + st[b].z[1])).then(a.cmp(&b)));
            for &p in &good[keep..] {
                r[p] = Role::FrozenUnselected;
            }
        }
        rates.push(r.iter().filter(|&&x| x == Role::Info).count() as f64 / m as f64);
        roles.push(r);
        stats.push(st);
    }
    Ok(CompoundCodeSpec {
        users: k,
        blocklength: cfg.blocklength,
        levels: cfg.levels,
        total_length: m,
        target: target.to_vec(),
        thresholds: cfg.thresholds,
        strategy: cfg.strategy,
        base_rates: profiles.iter().map(|p| p.rates.clone()).collect(),
        splits,
        schedule,
        roles,
        stats,
        rates,
        stat_mode,
        frozen_seed: cfg.frozen_seed,
        decode_sets: sets,
    })
}

fn normalize_decode_sets(sets: Option<&[Vec<usize>; 2]>, k: usize) -> Result<[Vec<usize>; 2]> {
    let Some(sets) = sets else { return Ok([(0..k).collect(), (0..k).collect()]) };
    let mut out = sets.clone();
    for s in out.iter_mut() {
        s.sort_unstable();
        s.dedup();
        if s.is_empty() || s.iter().any(|&j| j >= k) {
            return Err(Error::Config(format!("decode set {s:?} must be a nonempty subset of the {k} users")));
        }
    }
    if let Some(j) = (0..k).find(|j| !out[0].contains(j) && !out[1].contains(j)) {
        return Err(Error::Config(format!("user {} is decoded by no receiver", j + 1)));
    }
    Ok(out)
}

/// The channel a receiver's decoder assumes: undecoded users averaged out.
fn effective_channel(ch: &DiscreteChannel, set: &[usize]) -> Result<DiscreteChannel> {
    let noise: Vec<usize> = (0..ch.senders()).filter(|j| !set.contains(j)).collect();
    if noise.is_empty() {
        Ok(ch.clone())
    } else {
        ch.average_out(&noise)
    }
}

/// Split of the receiver's own MAC, lifted to all users with undecoded
/// users appended at the end of the path.
fn receiver_split(ch: &DiscreteChannel, set: &[usize], target: &[f64], n: usize, est: &Estimator) -> Result<Split> {
    let k = ch.senders();
    if set.len() == k {
        let oracle = ChannelOracle { mac: ch, estimator: est };
        return if k == 2 { split_at_blocklength(&oracle, target, n) } else { find_k_user_split(&oracle, target, f64::INFINITY, n) };
    }
    let reduced = ch.restrict_inputs(set)?;
    let sub: Vec<f64> = set.iter().map(|&j| target[j]).collect();
    let oracle = ChannelOracle { mac: &reduced, estimator: est };
    let s = if set.len() == 2 { split_at_blocklength(&oracle, &sub, n)? } else { find_k_user_split(&oracle, &sub, f64::INFINITY, n)? };
    let len = 1usize << n;
    let mut runs: Vec<(usize, usize)> = s.path.runs().into_iter().map(|(u, c)| (set[u], c)).collect();
    runs.extend((0..k).filter(|j| !set.contains(j)).map(|j| (j, len)));
    let lift = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; k];
        for (slot, &j) in set.iter().enumerate() {
            out[j] = v[slot];
        }
        out
    };
    let decisions = s
        .decisions
        .iter()
        .map(|d| {
            let mut base = vec![0; k];
            for (slot, &j) in set.iter().enumerate() {
                base[j] = d.base[slot];
            }
            TightnessDecision {
                active: d.active.iter().map(|&u| set[u]).collect(),
                base,
                lead: set[d.lead],
                split: d.split,
                tight: d.tight.iter().map(|&u| set[u]).collect(),
                value: d.value,
                target: d.target,
            }
        })
        .collect();
    Ok(Split {
        path: MonotonePath::from_runs(k, &runs)?,
        target: FaceTarget { target: lift(&s.target.target), projected_from: s.target.projected_from.as_deref().map(lift) },
        rates: lift(&s.rates),
        gap: s.gap,
        decisions,
    })
}

fn role_from_stat(s: &AlignedStat, th: Thresholds) -> Role {
    if s.mi[0] > th.good && s.mi[1] > th.good {
        Role::Info
    } else {
        Role::FrozenResidual
    }
}

fn base_stat(profiles: &[PathRateProfile], v: VarRef) -> AlignedStat {
    AlignedStat {
        mi: [profiles[0].per_index_mi[v.user][v.index - 1], profiles[1].per_index_mi[v.user][v.index - 1]],
        z: [profiles[0].per_index_z[v.user][v.index - 1], profiles[1].per_index_z[v.user][v.index - 1]],
    }
}

/// Minus and plus statistics of every pair.
fn combined_stats(
    channels: [&DiscreteChannel; 2],
    splits: &[Split],
    profiles: &[PathRateProfile],
    schedule: &AlignmentSchedule,
    est: &Estimator,
) -> Result<HashMap<usize, (AlignedStat, AlignedStat)>> {
    let mut out = HashMap::new();
    if profiles[0].mode == StatMode::ExactErasure && profiles[1].mode == StatMode::ExactErasure {
        for (p, pair) in schedule.pairs.iter().enumerate() {
            let (a, b) = (base_stat(profiles, pair.a), base_stat(profiles, pair.b));
            let mut minus = AlignedStat { mi: [0.0; 2], z: [0.0; 2] };
            let mut plus = minus;
            for r in 0..2 {
                let (ea, eb) = (1.0 - a.mi[r], 1.0 - b.mi[r]);
                let em = 1.0 - (1.0 - ea) * (1.0 - eb);
                let ep = ea * eb;
                minus.mi[r] = 1.0 - em;
                minus.z[r] = em;
                plus.mi[r] = 1.0 - ep;
                plus.z[r] = ep;
            }
            out.insert(p, (minus, plus));
        }
        return Ok(out);
    }
    // Sampled posteriors of the true bit for every paired base index.
    let mut wanted: Vec<(usize, usize)> = schedule.pairs.iter().flat_map(|p| [(p.a.user, p.a.index), (p.b.user, p.b.index)]).collect();
    wanted.sort_unstable();
    wanted.dedup();
    let mut samples: Vec<HashMap<(usize, usize), Vec<f32>>> = Vec::with_capacity(2);
    for r in 0..2 {
        let positions = splits[r].path.positions();
        let keep: Vec<usize> = positions
            .iter()
            .enumerate()
            .filter(|(_, (u, i))| wanted.binary_search(&(*u, i + 1)).is_ok())
            .map(|(s, _)| s)
            .collect();
        let n = log2_exact(schedule.blocklength)?;
        let mc = Estimator { samples: est.samples.max(1), ..est.clone() };
        let (_, kept) = mc.step_posteriors(channels[r], n, &vec![0; schedule.users], splits[r].path.sequence(), &keep)?;
        let mut map = HashMap::new();
        for (slot, &s) in keep.iter().enumerate() {
            let (u, i) = positions[s];
            map.insert((u, i + 1), kept[slot].clone());
        }
        samples.push(map);
    }
    for (p, pair) in schedule.pairs.iter().enumerate() {
        let mut minus = AlignedStat { mi: [0.0; 2], z: [0.0; 2] };
        let mut plus = minus;
        for r in 0..2 {
            let sa = &samples[r][&(pair.a.user, pair.a.index)];
            let sb = &samples[r][&(pair.b.user, pair.b.index)];
            let t = sa.len();
            let (mut hm, mut hp, mut zm, mut zp) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..t {
                let pa = sa[i] as f64;
                let pb = sb[(i + t / 2) % t] as f64;
                let m = pa * pb + (1.0 - pa) * (1.0 - pb);
                let q = if m > 0.0 { pa * pb / m } else { 0.5 };
                hm += h2(m);
                hp += h2(q);
                zm += 2.0 * (m * (1.0 - m)).max(0.0).sqrt();
                zp += 2.0 * (q * (1.0 - q)).max(0.0).sqrt();
            }
            let tf = t as f64;
            minus.mi[r] = 1.0 - hm / tf;
            plus.mi[r] = 1.0 - hp / tf;
            minus.z[r] = zm / tf;
            plus.z[r] = zp / tf;
        }
        out.insert(p, (minus, plus));
    }
    Ok(out)
}

impl CompoundCodeSpec {
    /// Positions of information bits in user `j`'s aligned order.
    pub fn info_positions(&self, j: usize) -> Vec<usize> {
        (0..self.total_length).filter(|&p| self.roles[j][p] == Role::Info).collect()
    }

    pub fn message_lengths(&self) -> Vec<usize> {
        (0..self.users).map(|j| self.info_positions(j).len()).collect()
    }

    /// Count of each role for user `j`.
    pub fn role_counts(&self, j: usize) -> Vec<(Role, usize)> {
        let mut counts: Vec<(Role, usize)> = Vec::new();
        for &r in &self.roles[j] {
            match counts.iter_mut().find(|(x, _)| *x == r) {
                Some((_, c)) => *c += 1,
                None => counts.push((r, 1)),
            }
        }
        counts
    }

    /// Union bound on the block error probability at each receiver, over
    /// the users it decodes.
    pub fn union_bound(&self) -> [f64; 2] {
        let mut b = [0.0; 2];
        for (r, acc) in b.iter_mut().enumerate() {
            for &j in &self.decode_sets[r] {
                *acc += self.info_positions(j).iter().map(|&p| self.stats[j][p].z[r]).sum::<f64>();
            }
        }
        b
    }

    /// The channel receiver `r`'s decoder assumes for the true channel `mac`.
    pub fn decoder_channel(&self, r: usize, mac: &DiscreteChannel) -> Result<DiscreteChannel> {
        effective_channel(mac, &self.decode_sets[r])
    }

    fn check_messages(&self, plan: &CodePlan, messages: &[Vec<u8>]) -> Result<()> {
        let lens: Vec<usize> = plan.info.iter().map(Vec::len).collect();
        if messages.len() != self.users || messages.iter().zip(&lens).any(|(m, &l)| m.len() != l) {
            return Err(Error::Size(format!("message lengths must be {lens:?}")));
        }
        Ok(())
    }

    /// Orders and lookup tables used by the encoder and decoders.
    pub fn plan(&self) -> Result<CodePlan> {
        let orders: Vec<Vec<Node>> = (0..self.users).map(|j| self.schedule.utilde_order(j)).collect();
        let info = (0..self.users).map(|j| self.info_positions(j)).collect();
        let mut pos: HashMap<Node, usize> = HashMap::new();
        for order in &orders {
            for (p, &node) in order.iter().enumerate() {
                pos.insert(node, p);
            }
        }
        let mut decode = Vec::with_capacity(2);
        for r in 0..2 {
            let steps = self
                .schedule
                .decoding_order(r)?
                .into_iter()
                .flatten()
                .map(|node| {
                    let p = pos[&node];
                    match node {
                        Node::Var(v) => Step::Var { block: v.block, user: v.user, pos: p, info: self.roles[v.user][p] == Role::Info },
                        Node::Minus(pair) => Step::Minus { pair, pos: p, info: self.roles[self.schedule.pairs[pair].user()][p] == Role::Info },
                        Node::Plus(pair) => Step::Plus { pair, pos: p, info: self.roles[self.schedule.pairs[pair].user()][p] == Role::Info },
                    }
                })
                .collect();
            decode.push(steps);
        }
        let frozen = (0..self.users)
            .map(|j| match self.frozen_seed {
                None => vec![0u8; self.total_length],
                Some(seed) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 2, j as u64));
                    (0..self.total_length).map(|_| rng.gen::<bool>() as u8).collect()
                }
            })
            .collect();
        Ok(CodePlan { orders, info, decode, frozen })
    }

    /// Codewords of all senders, each of length `2^levels * N`, block after
    /// block.
    pub fn encode(&self, messages: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
        self.encode_with(&self.plan()?, messages)
    }

    pub fn encode_with(&self, plan: &CodePlan, messages: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
        self.check_messages(plan, messages)?;
        let n = self.blocklength;
        let mut out = Vec::with_capacity(self.users);
        for j in 0..self.users {
            let mut aligned = plan.frozen[j].clone();
            for (&p, &bit) in plan.info[j].iter().zip(&messages[j]) {
                aligned[p] = bit & 1;
            }
            let mut x = vec![0u8; self.total_length];
            let mut minus = 0u8;
            for (node, &bit) in plan.orders[j].iter().zip(&aligned) {
                match *node {
                    Node::Var(v) => x[v.block * n + v.index - 1] = bit,
                    Node::Minus(_) => minus = bit,
                    Node::Plus(p) => {
                        let pr = self.schedule.pairs[p];
                        x[pr.b.block * n + pr.b.index - 1] = bit;
                        x[pr.a.block * n + pr.a.index - 1] = bit ^ minus;
                    }
                }
            }
            for b in x.chunks_mut(n) {
                polar_encode_in_place(b)?;
            }
            out.push(x);
        }
        Ok(out)
    }

    /// Successive cancellation decoding at `receiver` (0 for Y, 1 for Z).
    /// Estimates for users outside the receiver's decode set are returned
    /// but carry no meaning.
    pub fn sc_decode(&self, receiver: usize, mac: &DiscreteChannel, outputs: &[usize]) -> Result<Vec<Vec<u8>>> {
        if receiver > 1 {
            return Err(Error::Dimension(format!("receiver {receiver} out of range")));
        }
        let model = LeafModel::new(&self.decoder_channel(receiver, mac)?)?;
        let plan = self.plan()?;
        let mut dec = Decoder::new(&model, self)?;
        dec.run(self, &plan, receiver, outputs)
    }
}

/// Precomputed aligned orders, information positions and decoding steps.
#[derive(Debug, Clone)]
pub struct CodePlan {
    orders: Vec<Vec<Node>>,
    info: Vec<Vec<usize>>,
    decode: Vec<Vec<Step>>,
    frozen: Vec<Vec<u8>>,
}

impl CodePlan {
    /// Value of every aligned position of user `j` when all messages are
    /// zero.
    pub fn frozen_values(&self, j: usize) -> &[u8] {
        &self.frozen[j]
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Var { block: usize, user: usize, pos: usize, info: bool },
    Minus { pair: usize, pos: usize, info: bool },
    Plus { pair: usize, pos: usize, info: bool },
}

struct Decoder<'a> {
    engines: Vec<ScEngine<'a>>,
    aligned: Vec<Vec<u8>>,
    pending: Vec<([f64; 2], [f64; 2], u8)>,
    blocklength: usize,
}

impl<'a> Decoder<'a> {
    fn new(model: &'a LeafModel, spec: &CompoundCodeSpec) -> Result<Self> {
        if model.users() != spec.users {
            return Err(Error::Dimension("channel and code disagree on user count".into()));
        }
        let n = log2_exact(spec.blocklength)?;
        Ok(Self {
            engines: (0..spec.schedule.blocks).map(|_| ScEngine::new(model, n)).collect(),
            aligned: vec![vec![0; spec.total_length]; spec.users],
            pending: vec![([0.5; 2], [0.5; 2], 0); spec.schedule.pairs.len()],
            blocklength: spec.blocklength,
        })
    }

    /// The decoder only sees `outputs` and its own earlier decisions.
    fn run(&mut self, spec: &CompoundCodeSpec, plan: &CodePlan, receiver: usize, outputs: &[usize]) -> Result<Vec<Vec<u8>>> {
        if outputs.len() != spec.total_length {
            return Err(Error::Dimension(format!("expected {} outputs, got {}", spec.total_length, outputs.len())));
        }
        for (b, e) in self.engines.iter_mut().enumerate() {
            e.load(&outputs[b * self.blocklength..(b + 1) * self.blocklength])?;
        }
        for step in &plan.decode[receiver] {
            match *step {
                Step::Var { block, user, pos, info } => {
                    let post = self.engines[block].advance(user);
                    let bit = decide(post, info, plan.frozen[user][pos]);
                    self.aligned[user][pos] = bit;
                    self.engines[block].commit(user, bit);
                }
                Step::Minus { pair, pos, info } => {
                    let pr = spec.schedule.pairs[pair];
                    let pa = self.engines[pr.a.block].advance(pr.a.user);
                    let pb = self.engines[pr.b.block].advance(pr.b.user);
                    let one = pa[1] * pb[0] + pa[0] * pb[1];
                    let zero = pa[0] * pb[0] + pa[1] * pb[1];
                    let bit = decide([zero, one], info, plan.frozen[pr.user()][pos]);
                    self.aligned[pr.user()][pos] = bit;
                    self.pending[pair] = (pa, pb, bit);
                }
                Step::Plus { pair, pos, info } => {
                    let pr = spec.schedule.pairs[pair];
                    let (pa, pb, m) = self.pending[pair];
                    let l0 = pa[m as usize] * pb[0];
                    let l1 = pa[(m ^ 1) as usize] * pb[1];
                    let bit = decide([l0, l1], info, plan.frozen[pr.user()][pos]);
                    self.aligned[pr.user()][pos] = bit;
                    self.engines[pr.a.block].commit(pr.a.user, m ^ bit);
                    self.engines[pr.b.block].commit(pr.b.user, bit);
                }
            }
        }
        Ok(plan.info.iter().enumerate().map(|(j, info)| info.iter().map(|&p| self.aligned[j][p]).collect()).collect())
    }
}

fn decide(likelihood: [f64; 2], info: bool, frozen: u8) -> u8 {
    if !info {
        frozen
    } else {
        (likelihood[1] > likelihood[0]) as u8
    }
}

/// Passes codewords through a channel; `rng_draws[t]` in `[0, 1)`.
pub fn transmit(mac: &DiscreteChannel, codewords: &[Vec<u8>], rng: &mut impl Rng) -> Vec<usize> {
    let k = codewords.len();
    let m = codewords[0].len();
    (0..m)
        .map(|t| {
            let mask = (0..k).fold(0, |acc, j| acc | (codewords[j][t] as usize) << j);
            let row = mac.row(joint_of_mask(mask, k));
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut y = row.len() - 1;
            for (s, &p) in row.iter().enumerate() {
                acc += p;
                if r < acc {
                    y = s;
                    break;
                }
            }
            while row[y] == 0.0 && y > 0 {
                y -= 1;
            }
            y
        })
        .collect()
}

/// Per-receiver error counts of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub trials: u64,
    pub block_errors: [u64; 2],
    pub bit_errors: [u64; 2],
    /// Information bits per trial over each receiver's decode set.
    pub info_bits: [u64; 2],
    pub bler: [f64; 2],
    pub bler_ci: [(f64, f64); 2],
    pub ber: [f64; 2],
}

/// Monte Carlo block and bit error rates over the channel pair.
pub fn simulate(spec: &CompoundCodeSpec, channels: [&DiscreteChannel; 2], trials: u64, seed: u64) -> Result<TransmissionRecord> {
    let models = [LeafModel::new(&spec.decoder_channel(0, channels[0])?)?, LeafModel::new(&spec.decoder_channel(1, channels[1])?)?];
    let plan = spec.plan()?;
    let lens = spec.message_lengths();
    let info_bits = [0, 1].map(|r| spec.decode_sets[r].iter().map(|&j| lens[j] as u64).sum::<u64>());
    let parts = map_chunks(trials as usize, 16, |range| -> Result<([u64; 2], [u64; 2])> {
        let mut decoders = [Decoder::new(&models[0], spec)?, Decoder::new(&models[1], spec)?];
        let mut blk = [0u64; 2];
        let mut bits = [0u64; 2];
        for trial in range {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 1, trial as u64));
            let msgs: Vec<Vec<u8>> = lens.iter().map(|&l| (0..l).map(|_| rng.gen::<bool>() as u8).collect()).collect();
            let cw = spec.encode_with(&plan, &msgs)?;
            for r in 0..2 {
                let y = transmit(channels[r], &cw, &mut rng);
                let dec = decoders[r].run(spec, &plan, r, &y)?;
                let wrong: u64 = spec.decode_sets[r]
                    .iter()
                    .map(|&j| dec[j].iter().zip(&msgs[j]).filter(|(x, y)| x != y).count() as u64)
                    .sum();
                bits[r] += wrong;
                if wrong > 0 {
                    blk[r] += 1;
                }
            }
        }
        Ok((blk, bits))
    });
    let mut blk = [0u64; 2];
    let mut bits = [0u64; 2];
    for part in parts {
        let (b, e) = part?;
        for r in 0..2 {
            blk[r] += b[r];
            bits[r] += e[r];
        }
    }
    let t = trials.max(1) as f64;
    Ok(TransmissionRecord {
        trials,
        block_errors: blk,
        bit_errors: bits,
        info_bits,
        bler: [blk[0] as f64 / t, blk[1] as f64 / t],
        bler_ci: [wilson_interval(blk[0], trials), wilson_interval(blk[1], trials)],
        ber: [0, 1].map(|r| bits[r] as f64 / (t * info_bits[r].max(1) as f64)),
    })
}

/// Per-user quantities of the achievability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1User {
    pub target: f64,
    /// Average mutual information of the user's aligned variables at Y and Z.
    pub rate_y: f64,
    pub rate_z: f64,
    /// Fraction of aligned variables good for both receivers.
    pub jointly_good: f64,
    /// `|min(rate_y, rate_z) - target|`.
    pub gap_i: f64,
    /// `min(rate_y, rate_z) - jointly_good`.
    pub gap_ii: f64,
    pub holds_i: bool,
    pub holds_ii: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub epsilon: f64,
    pub users: Vec<Theorem1User>,
}

impl Theorem1Report {
    pub fn holds(&self) -> bool {
        self.users.iter().all(|u| u.holds_i && u.holds_ii)
    }
}

/// Checks both conditions of the achievability theorem for a built code.
pub fn theorem1_check(spec: &CompoundCodeSpec, epsilon: f64) -> Theorem1Report {
    let m = spec.total_length as f64;
    let users = (0..spec.users)
        .map(|j| {
            let st = &spec.stats[j];
            let rate_y = st.iter().map(|s| s.mi[0]).sum::<f64>() / m;
            let rate_z = st.iter().map(|s| s.mi[1]).sum::<f64>() / m;
            let good = st.iter().filter(|s| s.mi[0] > spec.thresholds.good && s.mi[1] > spec.thresholds.good).count() as f64 / m;
            let lo = rate_y.min(rate_z);
            let gap_i = (lo - spec.target[j]).abs();
            let gap_ii = lo - good;
            Theorem1User {
                target: spec.target[j],
                rate_y,
                rate_z,
                jointly_good: good,
                gap_i,
                gap_ii,
                holds_i: gap_i < epsilon,
                holds_ii: good > lo - epsilon,
            }
        })
        .collect();
    Theorem1Report { epsilon, users }
}
