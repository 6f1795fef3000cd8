//! Successive-cancellation recursion for several binary users sharing one
//! polar transform length, decoded along an arbitrary interleaving.
//!
//! Every user `j` has a decoded prefix `p_j`. At tree depth `d` all nodes see
//! the prefix `ceil(p_j / 2^d)`, so one prefix vector per depth describes the
//! whole tree. A node keeps a likelihood table indexed by the value of each
//! user's last decoded position (its "variable"); earlier positions are fixed
//! and enter only through partial sums.

use crate::channel::DiscreteChannel;
use crate::error::{Error, Result};

/// Largest number of users handled by the table recursion.
pub const MAX_USERS: usize = 6;

/// Per-output leaf likelihoods, marginalized over users not yet started.
#[derive(Debug, Clone)]
pub struct LeafModel {
    users: usize,
    width: usize,
    /// `tables[(y * width + known) * width + v]`.
    tables: Vec<f64>,
    outputs: usize,
}

impl LeafModel {
    pub fn new(mac: &DiscreteChannel) -> Result<Self> {
        let k = mac.senders();
        if !mac.is_binary_input() {
            return Err(Error::Unsupported("polar recursion needs binary inputs".into()));
        }
        if k > MAX_USERS {
            return Err(Error::Unsupported(format!("at most {MAX_USERS} users supported")));
        }
        let w = 1usize << k;
        let ny = mac.output_arity();
        let mut tables = vec![0.0; ny * w * w];
        for y in 0..ny {
            for known in 0..w {
                let unknown = (w - 1) & !known;
                let scale = 1.0 / (1u64 << unknown.count_ones()) as f64;
                for x in 0..w {
                    let v = x & known;
                    tables[(y * w + known) * w + v] += scale * mac.prob(joint_of_mask(x, k), y);
                }
            }
        }
        Ok(Self { users: k, width: w, tables, outputs: ny })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    fn leaf(&self, y: usize, known: usize) -> &[f64] {
        let base = (y * self.width + known) * self.width;
        &self.tables[base..base + self.width]
    }
}

/// Joint kernel row for a user bitmask (bit j is user j).
pub fn joint_of_mask(mask: usize, users: usize) -> usize {
    (0..users).fold(0, |acc, j| acc * 2 + (mask >> j & 1))
}

/// Incremental SC state for one block of `2^n` channel uses.
#[derive(Debug, Clone)]
pub struct ScEngine<'a> {
    model: &'a LeafModel,
    k: usize,
    n: usize,
    len: usize,
    w: usize,
    outputs: Vec<usize>,
    prefix: Vec<usize>,
    /// `bits[d * k + j][t * (len >> d) + pos]`.
    bits: Vec<Vec<u8>>,
    /// `tables[d][t * w + v]`.
    tables: Vec<Vec<f64>>,
}

impl<'a> ScEngine<'a> {
    pub fn new(model: &'a LeafModel, n: usize) -> Self {
        let k = model.users;
        let len = 1usize << n;
        let w = model.width;
        Self {
            model,
            k,
            n,
            len,
            w,
            outputs: vec![0; len],
            prefix: vec![0; k],
            bits: vec![vec![0; len]; (n + 1) * k],
            tables: (0..=n).map(|d| vec![0.0; (1usize << d) * w]).collect(),
        }
    }

    pub fn blocklength(&self) -> usize {
        self.len
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    /// Starts a new block with the given channel outputs.
    pub fn load(&mut self, outputs: &[usize]) -> Result<()> {
        if outputs.len() != self.len {
            return Err(Error::Dimension(format!("expected {} outputs, got {}", self.len, outputs.len())));
        }
        if let Some(&y) = outputs.iter().find(|&&y| y >= self.model.outputs) {
            return Err(Error::Dimension(format!("output symbol {y} out of range")));
        }
        self.outputs.copy_from_slice(outputs);
        self.prefix.iter_mut().for_each(|p| *p = 0);
        Ok(())
    }

    /// Jumps to a state where user `j` knows `u[j][..prefix[j]]`.
    pub fn jump(&mut self, prefix: &[usize], u: &[Vec<u8>]) {
        for j in 0..self.k {
            for pos in 1..=prefix[j] {
                self.set_bit(0, 0, j, pos, u[j][pos - 1]);
            }
        }
        self.prefix.copy_from_slice(prefix);
        self.recompute(self.n);
    }

    /// Moves user `j` to its next position and returns the posterior
    /// `[P(u=0), P(u=1)]` given the outputs and everything committed so far.
    pub fn advance(&mut self, j: usize) -> [f64; 2] {
        let old = self.prefix[j];
        debug_assert!(old < self.len);
        self.prefix[j] = old + 1;
        let top = if old == 0 { self.n } else { (old.trailing_zeros() as usize).min(self.n) };
        self.recompute(top);
        self.root_posterior(j)
    }

    /// Fixes the value of user `j` at its current position.
    pub fn commit(&mut self, j: usize, bit: u8) {
        let pos = self.prefix[j];
        self.set_bit(0, 0, j, pos, bit);
    }

    fn root_posterior(&self, j: usize) -> [f64; 2] {
        let mut v = 0;
        for (i, &p) in self.prefix.iter().enumerate() {
            if i != j && p > 0 && self.bits[i][p - 1] == 1 {
                v |= 1 << i;
            }
        }
        let root = &self.tables[0];
        let a = root[v];
        let b = root[v | 1 << j];
        let s = a + b;
        if s > 0.0 && s.is_finite() {
            [a / s, b / s]
        } else {
            [0.5, 0.5]
        }
    }

    fn set_bit(&mut self, d: usize, t: usize, j: usize, pos: usize, val: u8) {
        let l = self.len >> d;
        self.bits[d * self.k + j][t * l + pos - 1] = val;
        if d < self.n && pos % 2 == 0 {
            let a = self.bits[d * self.k + j][t * l + pos - 2] ^ val;
            let m = pos / 2;
            self.set_bit(d + 1, 2 * t, j, m, a);
            self.set_bit(d + 1, 2 * t + 1, j, m, val);
        }
    }

    fn recompute(&mut self, top: usize) {
        for d in (0..=top).rev() {
            if d == self.n {
                self.recompute_leaves();
            } else {
                self.recompute_depth(d);
            }
        }
    }

    fn recompute_leaves(&mut self) {
        let known = self.prefix.iter().enumerate().filter(|(_, &p)| p > 0).fold(0, |m, (j, _)| m | 1 << j);
        let w = self.w;
        let leaves = &mut self.tables[self.n];
        for t in 0..self.len {
            leaves[t * w..(t + 1) * w].copy_from_slice(self.model.leaf(self.outputs[t], known));
        }
    }

    fn recompute_depth(&mut self, d: usize) {
        let (k, w) = (self.k, self.w);
        let l = self.len >> d;
        let mut even = 0usize;
        let mut odd = 0usize;
        for j in 0..k {
            let p = ceil_shift(self.prefix[j], d);
            if p > 0 {
                if p % 2 == 0 {
                    even |= 1 << j;
                } else {
                    odd |= 1 << j;
                }
            }
        }
        let var = even | odd;
        let (upper, lower) = self.tables.split_at_mut(d + 1);
        let out = &mut upper[d];
        let child = &lower[0];
        for t in 0..(1usize << d) {
            let mut fixed = 0usize;
            let mut e = even;
            while e != 0 {
                let j = e.trailing_zeros() as usize;
                e &= e - 1;
                let p = ceil_shift(self.prefix[j], d);
                if self.bits[d * k + j][t * l + p - 2] == 1 {
                    fixed |= 1 << j;
                }
            }
            let (ta, tb) = child[2 * t * w..(2 * t + 2) * w].split_at(w);
            let dst = &mut out[t * w..(t + 1) * w];
            let masks = Masks { var, even, odd, fixed };
            match w {
                2 => combine::<2>(ta, tb, dst, masks),
                4 => combine::<4>(ta, tb, dst, masks),
                8 => combine::<8>(ta, tb, dst, masks),
                16 => combine::<16>(ta, tb, dst, masks),
                32 => combine::<32>(ta, tb, dst, masks),
                _ => combine::<64>(ta, tb, dst, masks),
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Masks {
    var: usize,
    even: usize,
    odd: usize,
    fixed: usize,
}

/// One node update: `T[v] = sum_s Ta[a(v, s)] * Tb[b(v, s)]`, normalized.
#[inline(always)]
fn combine<const W: usize>(ta: &[f64], tb: &[f64], dst: &mut [f64], m: Masks) {
    let ta: &[f64; W] = ta.try_into().expect("table width");
    let tb: &[f64; W] = tb.try_into().expect("table width");
    let dst: &mut [f64; W] = dst.try_into().expect("table width");
    let Masks { var, even, odd, fixed } = m;
    let mut total = 0.0;
    let mut v = var;
    loop {
        let ea = (v ^ fixed) & even;
        let eb = v & even;
        let mut acc = 0.0;
        let mut s = odd;
        loop {
            acc += ta[(ea | ((v ^ s) & odd)) & (W - 1)] * tb[(eb | s) & (W - 1)];
            if s == 0 {
                break;
            }
            s = (s - 1) & odd;
        }
        dst[v & (W - 1)] = acc;
        total += acc;
        if v == 0 {
            break;
        }
        v = (v - 1) & var;
    }
    if total > 0.0 && total.is_finite() {
        let inv = 1.0 / total;
        let mut v = var;
        loop {
            dst[v & (W - 1)] *= inv;
            if v == 0 {
                break;
            }
            v = (v - 1) & var;
        }
    }
}

fn ceil_shift(p: usize, d: usize) -> usize {
    (p + (1usize << d) - 1) >> d
}
