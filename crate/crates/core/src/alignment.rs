//! Polar alignment: recursive duplication of blocks and pairing of
//! incompatible indices so that the resulting code is good for both
//! receivers of a compound channel.
//!
//! At each level the current superblock `A` is copied into `B`. The type II
//! variables of the aligned user in `A` are paired, in a common decoding
//! order, with the type III variables of its copy in `B`. A pair `(a, b)` is
//! replaced by a minus variable `a xor b`, bad for both receivers, followed by
//! a plus variable `b`, good for both. Unpaired leftovers are frozen.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::chain::MonotonePath;
use crate::error::{Error, Result};
use crate::polar::IndexClassification;

/// One base variable: `index` is 1-based within the user's block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarRef {
    pub block: usize,
    pub user: usize,
    pub index: usize,
}

/// A combined pair: `a` is type II in superblock `A`, `b` is type III in the
/// copy superblock `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinePair {
    pub level: usize,
    pub a: VarRef,
    pub b: VarRef,
}

impl CombinePair {
    pub fn user(&self) -> usize {
        self.a.user
    }
}

/// Decoding-graph node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Var(VarRef),
    Minus(usize),
    Plus(usize),
}

/// Which users are aligned at which level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentMode {
    /// Two users, aligned alternately.
    CompoundTwoUser,
    /// Any number of users, aligned round robin.
    KUserSequential,
}

/// Summary of one alignment level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub user: usize,
    pub blocks_before: usize,
    pub pairs: usize,
    pub leftover_ii: usize,
    pub leftover_iii: usize,
    /// Incompatible variables of the aligned user before and after.
    pub incompatible_before: usize,
    pub incompatible_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Slot {
    Free,
    Paired(usize),
    Frozen,
}

/// Base variable type with respect to the two receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseType {
    GoodBoth,
    GoodYBadZ,
    BadYGoodZ,
    BadBoth,
    Residual,
}

/// A full alignment: blocks, pairs, frozen leftovers and per-receiver paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSchedule {
    pub users: usize,
    pub blocklength: usize,
    pub blocks: usize,
    pub mode: AlignmentMode,
    /// `base_types[user][index - 1]`.
    pub base_types: Vec<Vec<BaseType>>,
    pub receiver_paths: Vec<MonotonePath>,
    pub pairs: Vec<CombinePair>,
    pub frozen_leftovers: Vec<VarRef>,
    pub levels: Vec<LevelSummary>,
}

impl AlignmentSchedule {
    /// Schedule with a single block and nothing aligned.
    pub fn base(classes: &[IndexClassification], receiver_paths: Vec<MonotonePath>, mode: AlignmentMode) -> Result<Self> {
        let users = classes.len();
        if users == 0 {
            return Err(Error::Dimension("need at least one user".into()));
        }
        if receiver_paths.len() != 2 {
            return Err(Error::Unsupported(format!("alignment is built for two receivers, got {}", receiver_paths.len())));
        }
        let n = classes[0].len;
        if classes.iter().any(|c| c.len != n) {
            return Err(Error::Dimension("classifications differ in length".into()));
        }
        for p in &receiver_paths {
            if p.users() != users || p.blocklength() != n {
                return Err(Error::Dimension("receiver path does not match users or blocklength".into()));
            }
        }
        if mode == AlignmentMode::CompoundTwoUser && users != 2 {
            return Err(Error::Config("compound-two-user mode needs two users".into()));
        }
        let base_types = classes
            .iter()
            .map(|c| {
                (1..=n)
                    .map(|i| {
                        if c.type_i.contains(&i) {
                            BaseType::GoodBoth
                        } else if c.type_ii.contains(&i) {
                            BaseType::GoodYBadZ
                        } else if c.type_iii.contains(&i) {
                            BaseType::BadYGoodZ
                        } else if c.type_iv.contains(&i) {
                            BaseType::BadBoth
                        } else {
                            BaseType::Residual
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            users,
            blocklength: n,
            blocks: 1,
            mode,
            base_types,
            receiver_paths,
            pairs: Vec::new(),
            frozen_leftovers: Vec::new(),
            levels: Vec::new(),
        })
    }

    pub fn total_length(&self) -> usize {
        self.blocks * self.blocklength
    }

    pub fn base_type(&self, v: VarRef) -> BaseType {
        self.base_types[v.user][v.index - 1]
    }

    fn slot_id(&self, v: VarRef) -> usize {
        (v.block * self.users + v.user) * self.blocklength + v.index - 1
    }

    fn slots(&self) -> Vec<Slot> {
        let mut s = vec![Slot::Free; self.blocks * self.users * self.blocklength];
        for (p, pair) in self.pairs.iter().enumerate() {
            s[self.slot_id(pair.a)] = Slot::Paired(p);
            s[self.slot_id(pair.b)] = Slot::Paired(p);
        }
        for &v in &self.frozen_leftovers {
            s[self.slot_id(v)] = Slot::Frozen;
        }
        s
    }

    pub fn is_frozen_leftover(&self, v: VarRef) -> bool {
        self.frozen_leftovers.contains(&v)
    }

    /// Incompatible variables of `user` that are still uncombined.
    pub fn incompatible_count(&self, user: usize) -> usize {
        let slots = self.slots();
        let mut c = 0;
        for b in 0..self.blocks {
            for i in 1..=self.blocklength {
                let v = VarRef { block: b, user, index: i };
                if slots[self.slot_id(v)] == Slot::Free
                    && matches!(self.base_type(v), BaseType::GoodYBadZ | BaseType::BadYGoodZ)
                {
                    c += 1;
                }
            }
        }
        c
    }

    /// Duplicates the superblock and aligns `user`.
    pub fn align_level(&mut self, user: usize) -> Result<()> {
        if user >= self.users {
            return Err(Error::Dimension(format!("user {} out of range", user + 1)));
        }
        let h = self.blocks;
        let level = self.levels.len() + 1;
        let before = self.incompatible_count(user);
        let slots = self.slots();
        let free_of = |t: BaseType| -> Vec<VarRef> {
            let mut v: Vec<VarRef> = (0..h)
                .flat_map(|b| (1..=self.blocklength).map(move |i| VarRef { block: b, user, index: i }))
                .filter(|&v| slots[self.slot_id(v)] == Slot::Free && self.base_type(v) == t)
                .collect();
            v.sort_by_key(|v| (v.index, v.block));
            v
        };
        let ii = free_of(BaseType::GoodYBadZ);
        let iii = free_of(BaseType::BadYGoodZ);
        // Copy the superblock.
        let old_pairs = self.pairs.clone();
        for p in &old_pairs {
            self.pairs.push(CombinePair { level: p.level, a: shift(p.a, h), b: shift(p.b, h) });
        }
        let old_frozen = self.frozen_leftovers.clone();
        self.frozen_leftovers.extend(old_frozen.iter().map(|&v| shift(v, h)));
        self.blocks = 2 * h;
        let chosen = self.greedy_pairs(&ii, &iii, h);
        let mut used_a = BTreeSet::new();
        let mut used_b = BTreeSet::new();
        for &(a, b) in &chosen {
            self.pairs.push(CombinePair { level, a, b });
            used_a.insert(a);
            used_b.insert(b);
        }
        let q = chosen.len();
        self.frozen_leftovers.extend(ii.iter().copied().filter(|v| !used_a.contains(v)));
        self.frozen_leftovers.extend(iii.iter().map(|&v| shift(v, h)).filter(|v| !used_b.contains(v)));
        for r in 0..self.receiver_paths.len() {
            self.dag(r).topological_layers().map_err(|cycle| self.cycle_error(&cycle))?;
        }
        let after = self.incompatible_count(user);
        self.levels.push(LevelSummary {
            level,
            user,
            blocks_before: h,
            pairs: q,
            leftover_ii: ii.len() - q,
            leftover_iii: iii.len() - q,
            incompatible_before: before,
            incompatible_after: after,
        });
        Ok(())
    }

    /// First-fit pairing in `(index, block)` order. A candidate pair is taken
    /// only if neither member reaches the other in any receiver's decoding
    /// graph, so merging the two keeps every graph acyclic.
    fn greedy_pairs(&self, ii: &[VarRef], iii: &[VarRef], h: usize) -> Vec<(VarRef, VarRef)> {
        let dags: Vec<Dag> = (0..self.receiver_paths.len()).map(|r| self.dag(r)).collect();
        let nn = dags[0].nodes.len();
        let preds: Vec<Vec<Vec<usize>>> = dags
            .iter()
            .map(|d| {
                let mut p = vec![Vec::new(); nn];
                for (i, ss) in d.succ.iter().enumerate() {
                    for &s in ss {
                        p[s].push(i);
                    }
                }
                p
            })
            .collect();
        let mut dsu = Merged::new(nn);
        let mut taken = vec![false; iii.len()];
        let mut out = Vec::new();
        let mut mark = vec![usize::MAX; nn];
        let mut hit = vec![usize::MAX; nn];
        let mut tag = 0;
        for (t, &a) in ii.iter().enumerate() {
            let ia = self.slot_id(a);
            for (d, p) in dags.iter().zip(&preds) {
                for edges in [&d.succ, p] {
                    dsu.flood(ia, edges, &mut mark, tag, &mut hit, t);
                    tag += 1;
                }
            }
            let pick = iii.iter().enumerate().find(|&(k, &b)| {
                let ib = self.slot_id(shift(b, h));
                !taken[k] && hit[dsu.find(ib)] != t
            });
            if let Some((k, &b)) = pick {
                taken[k] = true;
                let b = shift(b, h);
                dsu.union(ia, self.slot_id(b));
                out.push((a, b));
            }
        }
        out
    }

    /// Adds explicit pairs after duplicating the superblock, without any
    /// ordering. Used to study improper pairings; fails on a cycle.
    pub fn align_with_pairs(&mut self, pairs: &[(VarRef, VarRef)]) -> Result<()> {
        let h = self.blocks;
        let level = self.levels.len() + 1;
        let old_pairs = self.pairs.clone();
        for p in &old_pairs {
            self.pairs.push(CombinePair { level: p.level, a: shift(p.a, h), b: shift(p.b, h) });
        }
        self.blocks = 2 * h;
        let slots = self.slots();
        let mut used = BTreeSet::new();
        for &(a, b) in pairs {
            if a.block >= h || b.block < h || b.block >= 2 * h || a.user != b.user {
                return Err(Error::Dimension("pair must join a variable of A with one of B for the same user".into()));
            }
            for v in [a, b] {
                if v.index == 0 || v.index > self.blocklength || slots[self.slot_id(v)] != Slot::Free || !used.insert(v) {
                    return Err(Error::Dimension(format!("variable {v:?} is not available for pairing")));
                }
            }
            self.pairs.push(CombinePair { level, a, b });
        }
        for r in 0..self.receiver_paths.len() {
            self.dag(r).topological_layers().map_err(|cycle| self.cycle_error(&cycle))?;
        }
        self.levels.push(LevelSummary {
            level,
            user: pairs.first().map(|p| p.0.user).unwrap_or(0),
            blocks_before: h,
            pairs: pairs.len(),
            leftover_ii: 0,
            leftover_iii: 0,
            incompatible_before: 0,
            incompatible_after: 0,
        });
        Ok(())
    }

    fn cycle_error(&self, cycle: &[Node]) -> Error {
        Error::Schedule { cycle: cycle.iter().map(|n| self.node_name(*n)).collect() }
    }

    pub fn node_name(&self, n: Node) -> String {
        match n {
            Node::Var(v) => format!("u{}[{}:{}]", v.user + 1, v.block, v.index),
            Node::Minus(p) => format!("minus{p}"),
            Node::Plus(p) => format!("plus{p}"),
        }
    }

    /// Decoding graph for receiver `r` over all blocks.
    pub fn dag(&self, r: usize) -> Dag {
        let slots = self.slots();
        let nvar = self.blocks * self.users * self.blocklength;
        let total = nvar + 2 * self.pairs.len();
        let mut nodes = Vec::with_capacity(total);
        for b in 0..self.blocks {
            for u in 0..self.users {
                for i in 1..=self.blocklength {
                    nodes.push(Node::Var(VarRef { block: b, user: u, index: i }));
                }
            }
        }
        for p in 0..self.pairs.len() {
            nodes.push(Node::Minus(p));
            nodes.push(Node::Plus(p));
        }
        let mut active = vec![true; total];
        let mut succ = vec![Vec::new(); total];
        for (p, _) in self.pairs.iter().enumerate() {
            succ[nvar + 2 * p].push(nvar + 2 * p + 1);
        }
        let positions = self.receiver_paths[r].positions();
        for b in 0..self.blocks {
            let mut prev: Option<usize> = None;
            for &(u, i) in &positions {
                let v = VarRef { block: b, user: u, index: i + 1 };
                let sid = self.slot_id(v);
                let (entry, exit) = match slots[sid] {
                    Slot::Paired(p) => {
                        active[sid] = false;
                        (nvar + 2 * p, nvar + 2 * p + 1)
                    }
                    _ => (sid, sid),
                };
                if let Some(pv) = prev {
                    succ[pv].push(entry);
                }
                prev = Some(exit);
            }
        }
        Dag { nodes, succ, active }
    }

    /// Receiver-specific decoding order as groups that may run in parallel.
    pub fn decoding_order(&self, receiver: usize) -> Result<Vec<Vec<Node>>> {
        if receiver >= self.receiver_paths.len() {
            return Err(Error::Dimension(format!("receiver {receiver} out of range")));
        }
        let dag = self.dag(receiver);
        dag.topological_layers().map_err(|c| self.cycle_error(&c))
    }

    /// Canonical order of the aligned variables of `user`: a topological
    /// order of the user's own blocks, earliest block first.
    pub fn utilde_order(&self, user: usize) -> Vec<Node> {
        let slots = self.slots();
        let n = self.blocklength;
        let mut succ: std::collections::HashMap<Node, Vec<Node>> = Default::default();
        let mut indeg: std::collections::HashMap<Node, usize> = Default::default();
        let mut add = |a: Node, b: Node, succ: &mut std::collections::HashMap<Node, Vec<Node>>| {
            succ.entry(a).or_default().push(b);
            *indeg.entry(b).or_default() += 1;
        };
        let mut all = Vec::new();
        for (p, pair) in self.pairs.iter().enumerate() {
            if pair.user() == user {
                add(Node::Minus(p), Node::Plus(p), &mut succ);
                all.push(Node::Minus(p));
                all.push(Node::Plus(p));
            }
        }
        for b in 0..self.blocks {
            let mut prev: Option<Node> = None;
            for i in 1..=n {
                let v = VarRef { block: b, user, index: i };
                let (entry, exit) = match slots[self.slot_id(v)] {
                    Slot::Paired(p) => (Node::Minus(p), Node::Plus(p)),
                    _ => {
                        all.push(Node::Var(v));
                        (Node::Var(v), Node::Var(v))
                    }
                };
                if let Some(pv) = prev {
                    add(pv, entry, &mut succ);
                }
                prev = Some(exit);
            }
        }
        let block_key = |x: &Node| match *x {
            Node::Var(v) => (v.block, 0usize, v.index),
            Node::Minus(p) => (self.pairs[p].a.block, 1, p),
            Node::Plus(p) => (self.pairs[p].a.block, 2, p),
        };
        let mut heap: BinaryHeap<Reverse<((usize, usize, usize), Node)>> = all
            .iter()
            .filter(|x| indeg.get(x).copied().unwrap_or(0) == 0)
            .map(|&x| Reverse((block_key(&x), x)))
            .collect();
        let mut out = Vec::with_capacity(all.len());
        while let Some(Reverse((_, x))) = heap.pop() {
            out.push(x);
            if let Some(ss) = succ.get(&x) {
                for &s in ss {
                    let d = indeg.get_mut(&s).expect("edge target");
                    *d -= 1;
                    if *d == 0 {
                        heap.push(Reverse((block_key(&s), s)));
                    }
                }
            }
        }
        out
    }

    /// Maps the per-block inputs of `user` to the aligned vector.
    pub fn align_encode(&self, user: usize, blocks: &[Vec<u8>]) -> Result<Vec<u8>> {
        self.check_blocks(blocks)?;
        Ok(self
            .utilde_order(user)
            .iter()
            .map(|node| match *node {
                Node::Var(v) => blocks[v.block][v.index - 1],
                Node::Minus(p) => {
                    let pr = self.pairs[p];
                    blocks[pr.a.block][pr.a.index - 1] ^ blocks[pr.b.block][pr.b.index - 1]
                }
                Node::Plus(p) => {
                    let pr = self.pairs[p];
                    blocks[pr.b.block][pr.b.index - 1]
                }
            })
            .collect())
    }

    /// Inverse of [`align_encode`](Self::align_encode).
    pub fn align_decode(&self, user: usize, aligned: &[u8]) -> Result<Vec<Vec<u8>>> {
        let order = self.utilde_order(user);
        if aligned.len() != order.len() {
            return Err(Error::Dimension(format!("aligned vector has {} entries, expected {}", aligned.len(), order.len())));
        }
        let mut blocks = vec![vec![0u8; self.blocklength]; self.blocks];
        let mut minus = vec![0u8; self.pairs.len()];
        for (node, &bit) in order.iter().zip(aligned) {
            match *node {
                Node::Var(v) => blocks[v.block][v.index - 1] = bit,
                Node::Minus(p) => minus[p] = bit,
                Node::Plus(p) => {
                    let pr = self.pairs[p];
                    blocks[pr.b.block][pr.b.index - 1] = bit;
                    blocks[pr.a.block][pr.a.index - 1] = bit ^ minus[p];
                }
            }
        }
        Ok(blocks)
    }

    fn check_blocks(&self, blocks: &[Vec<u8>]) -> Result<()> {
        if blocks.len() != self.blocks || blocks.iter().any(|b| b.len() != self.blocklength) {
            return Err(Error::Dimension(format!("expected {} blocks of length {}", self.blocks, self.blocklength)));
        }
        Ok(())
    }

    /// Fraction of incompatible variables of `user` after each level,
    /// starting with the base block.
    pub fn incompatible_fraction(&self, user: usize) -> Vec<Ratio<u64>> {
        let base = self.base_types[user]
            .iter()
            .filter(|t| matches!(t, BaseType::GoodYBadZ | BaseType::BadYGoodZ))
            .count();
        let mut out = vec![Ratio::new(base as u64, self.blocklength as u64)];
        let mut count = base as u64;
        for lvl in &self.levels {
            if lvl.user == user {
                count = lvl.incompatible_after as u64;
            } else {
                count *= 2;
            }
            let len = (2 * lvl.blocks_before * self.blocklength) as u64;
            out.push(Ratio::new(count, len));
        }
        out
    }

    /// Graphviz rendering of one receiver's decoding graph.
    pub fn to_dot(&self, receiver: usize) -> String {
        let dag = self.dag(receiver);
        let mut s = format!("digraph receiver{} {{\n  rankdir=LR;\n", receiver + 1);
        for (i, node) in dag.nodes.iter().enumerate() {
            if !dag.active[i] {
                continue;
            }
            let shape = match node {
                Node::Var(_) => "ellipse",
                Node::Minus(_) => "box",
                Node::Plus(_) => "doublecircle",
            };
            let _ = writeln!(s, "  n{i} [label=\"{}\", shape={shape}];", self.node_name(*node));
        }
        for (i, ss) in dag.succ.iter().enumerate() {
            for &j in ss {
                let _ = writeln!(s, "  n{i} -> n{j};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Disjoint sets of graph nodes merged by pairing.
struct Merged {
    parent: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Merged {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), members: (0..n).map(|i| vec![i]).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
            let moved = std::mem::take(&mut self.members[rb]);
            self.members[ra].extend(moved);
        }
    }

    /// Sets `hit` to `id` on every set reachable from the set of `start`;
    /// `mark` is scratch space and `tag` must be fresh.
    fn flood(&mut self, start: usize, edges: &[Vec<usize>], mark: &mut [usize], tag: usize, hit: &mut [usize], id: usize) {
        let root = self.find(start);
        let mut stack = vec![root];
        mark[root] = tag;
        hit[root] = id;
        while let Some(c) = stack.pop() {
            for mi in 0..self.members[c].len() {
                let m = self.members[c][mi];
                for &s in &edges[m] {
                    let r = self.find(s);
                    if mark[r] != tag {
                        mark[r] = tag;
                        hit[r] = id;
                        stack.push(r);
                    }
                }
            }
        }
    }
}

fn shift(v: VarRef, h: usize) -> VarRef {
    VarRef { block: v.block + h, ..v }
}

/// Builds an alignment with `levels` duplication levels, aligning users
/// round robin from `first_user`.
pub fn build_schedule(
    classes: &[IndexClassification],
    receiver_paths: Vec<MonotonePath>,
    levels: usize,
    mode: AlignmentMode,
    first_user: usize,
) -> Result<AlignmentSchedule> {
    let mut s = AlignmentSchedule::base(classes, receiver_paths, mode)?;
    if first_user >= s.users {
        return Err(Error::Config(format!("first user {} out of range", first_user + 1)));
    }
    for t in 0..levels {
        s.align_level((first_user + t) % s.users)?;
    }
    Ok(s)
}

/// Pairs the `j`-th type II variable with the `j`-th type III variable.
pub fn pair_indices<T: Copy>(type_ii: &[T], type_iii: &[T]) -> Vec<(T, T)> {
    type_ii.iter().copied().zip(type_iii.iter().copied()).collect()
}

/// Directed decoding graph. Paired base variables are inactive and
/// replaced by their minus and plus nodes.
#[derive(Debug, Clone)]
pub struct Dag {
    pub nodes: Vec<Node>,
    pub succ: Vec<Vec<usize>>,
    pub active: Vec<bool>,
}

impl Dag {
    fn indegrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for (i, ss) in self.succ.iter().enumerate() {
            if self.active[i] {
                for &s in ss {
                    d[s] += 1;
                }
            }
        }
        d
    }

    /// Kahn layers; on failure returns one cycle.
    pub fn topological_layers(&self) -> std::result::Result<Vec<Vec<Node>>, Vec<Node>> {
        let mut indeg = self.indegrees();
        let mut layer: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.active[i] && indeg[i] == 0).collect();
        let mut out = Vec::new();
        let mut seen = 0;
        let total = self.active.iter().filter(|&&a| a).count();
        while !layer.is_empty() {
            seen += layer.len();
            let mut next = Vec::new();
            for &x in &layer {
                for &s in &self.succ[x] {
                    indeg[s] -= 1;
                    if indeg[s] == 0 {
                        next.push(s);
                    }
                }
            }
            let mut nodes: Vec<Node> = layer.iter().map(|&i| self.nodes[i]).collect();
            nodes.sort();
            out.push(nodes);
            next.sort_unstable();
            layer = next;
        }
        if seen == total {
            Ok(out)
        } else {
            Err(self.find_cycle(&indeg))
        }
    }

    fn find_cycle(&self, indeg: &[usize]) -> Vec<Node> {
        // Every remaining node has a remaining predecessor; walk backwards.
        let n = self.nodes.len();
        let mut pred = vec![usize::MAX; n];
        for (i, ss) in self.succ.iter().enumerate() {
            if self.active[i] && indeg[i] > 0 {
                for &s in ss {
                    if indeg[s] > 0 {
                        pred[s] = i;
                    }
                }
            }
        }
        let Some(mut x) = (0..n).find(|&i| self.active[i] && indeg[i] > 0) else {
            return Vec::new();
        };
        let mut pos = vec![usize::MAX; n];
        let mut walk = Vec::new();
        while pos[x] == usize::MAX {
            pos[x] = walk.len();
            walk.push(x);
            x = pred[x];
        }
        let mut cycle: Vec<Node> = walk[pos[x]..].iter().map(|&i| self.nodes[i]).collect();
        cycle.reverse();
        cycle
    }
}
