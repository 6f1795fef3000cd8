//! Discrete memoryless channels with one or more senders.
//!
//! A kernel is stored row-major: one row per joint input, one column per
//! output symbol. Joint inputs are enumerated in mixed radix with sender 0 as
//! the most significant digit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest output alphabet produced by combining operations.
pub const MAX_OUTPUT_ALPHABET: usize = 1 << 20;

const PROB_TOL: f64 = 1e-9;

/// Closed-form description for channels whose polarization is tracked
/// exactly by erasure probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ErasureForm {
    /// Single binary input through an erasure channel.
    Bec { epsilon: f64 },
    /// Two binary inputs: the XOR is always seen, the first input is seen
    /// through an erasure channel. The binary adder is the case 1/2.
    XorErasure { epsilon: f64 },
    /// Each input is seen through its own erasure channel.
    IndependentErasures { epsilons: Vec<f64> },
}

/// Binary erasure channel described only by its erasure probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureChannel {
    pub epsilon: f64,
}

impl ErasureChannel {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_prob(epsilon, "erasure probability")?;
        Ok(Self { epsilon })
    }

    pub fn capacity(&self) -> f64 {
        1.0 - self.epsilon
    }

    pub fn bhattacharyya(&self) -> f64 {
        self.epsilon
    }

    pub fn minus(&self, other: &Self) -> Self {
        Self { epsilon: 1.0 - (1.0 - self.epsilon) * (1.0 - other.epsilon) }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self { epsilon: self.epsilon * other.epsilon }
    }

    pub fn to_discrete(&self) -> DiscreteChannel {
        DiscreteChannel::bec(self.epsilon).expect("validated epsilon")
    }
}

/// Product (optionally time-shared) distribution over the sender inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDistribution {
    /// Time-sharing weights p(q).
    pub weights: Vec<f64>,
    /// `components[q][sender][symbol]` is p(x_sender = symbol | q).
    pub components: Vec<Vec<Vec<f64>>>,
}

impl InputDistribution {
    pub fn product(marginals: Vec<Vec<f64>>) -> Result<Self> {
        Self::time_shared(vec![1.0], vec![marginals])
    }

    pub fn uniform(arities: &[usize]) -> Self {
        let marginals = arities.iter().map(|&a| vec![1.0 / a as f64; a]).collect();
        Self { weights: vec![1.0], components: vec![marginals] }
    }

    pub fn time_shared(weights: Vec<f64>, components: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::Dimension("time-sharing weights and components differ in length".into()));
        }
        check_simplex(&weights, "time-sharing weights")?;
        let senders = components[0].len();
        for comp in &components {
            if comp.len() != senders {
                return Err(Error::Dimension("components disagree on sender count".into()));
            }
            for (j, m) in comp.iter().enumerate() {
                if m.len() != components[0][j].len() {
                    return Err(Error::Dimension(format!("sender {j} alphabet differs across q")));
                }
                check_simplex(m, "input marginal")?;
            }
        }
        Ok(Self { weights, components })
    }

    pub fn senders(&self) -> usize {
        self.components[0].len()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.components[0].iter().map(Vec::len).collect()
    }
}

/// Discrete memoryless channel with `input_arities.len()` senders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteChannel {
    input_arities: Vec<usize>,
    output_arity: usize,
    kernel: Vec<f64>,
    erasure_form: Option<ErasureForm>,
}

impl DiscreteChannel {
    /// Builds a channel from a row-major kernel.
    pub fn new(input_arities: Vec<usize>, output_arity: usize, kernel: Vec<f64>) -> Result<Self> {
        if input_arities.is_empty() || input_arities.iter().any(|&a| a == 0) || output_arity == 0 {
            return Err(Error::Dimension("alphabets must be nonempty".into()));
        }
        let rows: usize = input_arities.iter().product();
        if kernel.len() != rows * output_arity {
            return Err(Error::Dimension(format!(
                "kernel has {} entries, expected {rows}x{output_arity}",
                kernel.len()
            )));
        }
        for (r, row) in kernel.chunks(output_arity).enumerate() {
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Dimension(format!("row {r} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > PROB_TOL {
                return Err(Error::Dimension(format!("row {r} sums to {s}")));
            }
        }
        let mut ch = Self { input_arities, output_arity, kernel, erasure_form: None };
        if let Some(eps) = ch.detect_bec() {
            ch.erasure_form = Some(ErasureForm::Bec { epsilon: eps });
        }
        Ok(ch)
    }

    pub fn from_rows(input_arities: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let out = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != out) {
            return Err(Error::Dimension("kernel rows differ in length".into()));
        }
        Self::new(input_arities, out, rows.concat())
    }

    /// Deterministic channel y = f(x).
    pub fn deterministic(input_arities: Vec<usize>, output_arity: usize, f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        let rows: usize = input_arities.iter().product();
        let mut kernel = vec![0.0; rows * output_arity];
        let mut digits = vec![0; input_arities.len()];
        for r in 0..rows {
            decode_mixed(r, &input_arities, &mut digits);
            let y = f(&digits);
            if y >= output_arity {
                return Err(Error::Dimension(format!("output {y} out of range")));
            }
            kernel[r * output_arity + y] = 1.0;
        }
        Self::new(input_arities, output_arity, kernel)
    }

    /// Outputs 0, 1 and 2 (erasure).
    pub fn bec(epsilon: f64) -> Result<Self> {
        check_prob(epsilon, "erasure probability")?;
        let k = vec![1.0 - epsilon, 0.0, epsilon, 0.0, 1.0 - epsilon, epsilon];
        let mut ch = Self::new(vec![2], 3, k)?;
        ch.erasure_form = Some(ErasureForm::Bec { epsilon });
        Ok(ch)
    }

    pub fn bsc(p: f64) -> Result<Self> {
        check_prob(p, "crossover probability")?;
        Self::new(vec![2], 2, vec![1.0 - p, p, p, 1.0 - p])
    }

    /// Real-sum adder over `users` binary inputs.
    pub fn binary_adder(users: usize) -> Result<Self> {
        if users == 0 {
            return Err(Error::Dimension("adder needs at least one user".into()));
        }
        let mut ch = Self::deterministic(vec![2; users], users + 1, |x| x.iter().sum())?;
        if users == 2 {
            ch.erasure_form = Some(ErasureForm::XorErasure { epsilon: 0.5 });
        }
        Ok(ch)
    }

    /// Output (x xor w, x or erasure); index `s * 3 + e`.
    pub fn xor_erasure(epsilon: f64) -> Result<Self> {
        check_prob(epsilon, "erasure probability")?;
        let mut kernel = vec![0.0; 4 * 6];
        for x in 0..2 {
            for w in 0..2 {
                let r = x * 2 + w;
                let s = x ^ w;
                kernel[r * 6 + s * 3 + x] += 1.0 - epsilon;
                kernel[r * 6 + s * 3 + 2] += epsilon;
            }
        }
        let mut ch = Self::new(vec![2, 2], 6, kernel)?;
        ch.erasure_form = Some(ErasureForm::XorErasure { epsilon });
        Ok(ch)
    }

    /// Each binary input through its own erasure channel; output digits in
    /// base 3 with sender 0 most significant, digit 2 meaning erased.
    pub fn independent_erasures(epsilons: &[f64]) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::Dimension("need at least one sender".into()));
        }
        for &e in epsilons {
            check_prob(e, "erasure probability")?;
        }
        let k = epsilons.len();
        let outs = 3usize.pow(k as u32);
        let rows = 1usize << k;
        let mut kernel = vec![0.0; rows * outs];
        let arities = vec![2; k];
        let mut x = vec![0; k];
        for r in 0..rows {
            decode_mixed(r, &arities, &mut x);
            for pattern in 0..rows {
                let mut y = 0;
                let mut p = 1.0;
                for j in 0..k {
                    let erased = pattern >> (k - 1 - j) & 1 == 1;
                    y = y * 3 + if erased { 2 } else { x[j] };
                    p *= if erased { epsilons[j] } else { 1.0 - epsilons[j] };
                }
                kernel[r * outs + y] += p;
            }
        }
        let mut ch = Self::new(arities, outs, kernel)?;
        ch.erasure_form = Some(ErasureForm::IndependentErasures { epsilons: epsilons.to_vec() });
        Ok(ch)
    }

    pub fn input_arities(&self) -> &[usize] {
        &self.input_arities
    }

    pub fn senders(&self) -> usize {
        self.input_arities.len()
    }

    pub fn output_arity(&self) -> usize {
        self.output_arity
    }

    pub fn joint_inputs(&self) -> usize {
        self.kernel.len() / self.output_arity
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn row(&self, joint: usize) -> &[f64] {
        &self.kernel[joint * self.output_arity..(joint + 1) * self.output_arity]
    }

    pub fn prob(&self, joint: usize, y: usize) -> f64 {
        self.kernel[joint * self.output_arity + y]
    }

    pub fn erasure_form(&self) -> Option<&ErasureForm> {
        self.erasure_form.as_ref()
    }

    pub fn is_binary_input(&self) -> bool {
        self.input_arities.iter().all(|&a| a == 2)
    }

    /// Joint index of a digit vector.
    pub fn joint_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.input_arities).fold(0, |acc, (&d, &a)| acc * a + d)
    }

    fn detect_bec(&self) -> Option<f64> {
        if self.input_arities != [2] {
            return None;
        }
        let mut eps = 0.0;
        for y in 0..self.output_arity {
            let (a, b) = (self.prob(0, y), self.prob(1, y));
            if (a - b).abs() <= 1e-15 {
                eps += a;
            } else if a > 0.0 && b > 0.0 {
                return None;
            }
        }
        Some(eps.clamp(0.0, 1.0))
    }

    /// Conditional mutual information I(X_senders; Y | X_given, Q).
    ///
    /// Senders outside both sets act as noise. Because the inputs are
    /// independent given Q this also equals I(X_senders; Y, X_given | Q).
    pub fn mutual_information(&self, p: &InputDistribution, senders: &[usize], given: &[usize]) -> Result<f64> {
        if p.arities() != self.input_arities {
            return Err(Error::Dimension("distribution does not match channel inputs".into()));
        }
        let k = self.senders();
        let mut seen = vec![false; k];
        for &j in senders.iter().chain(given) {
            if j >= k || seen[j] {
                return Err(Error::Dimension(format!("sender set invalid at {j}")));
            }
            seen[j] = true;
        }
        if senders.is_empty() {
            return Ok(0.0);
        }
        let mut both: Vec<usize> = given.to_vec();
        both.extend_from_slice(senders);
        let mut total = 0.0;
        for (q, comp) in p.components.iter().enumerate() {
            if p.weights[q] == 0.0 {
                continue;
            }
            let v = self.cond_entropy(comp, given) - self.cond_entropy(comp, &both);
            total += p.weights[q] * v;
        }
        Ok(total.max(0.0))
    }

    /// H(Y | X_set) under a product input distribution.
    fn cond_entropy(&self, marginals: &[Vec<f64>], set: &[usize]) -> f64 {
        let k = self.senders();
        let mut stride = vec![0usize; k];
        let mut keys = 1usize;
        for &j in set {
            stride[j] = keys;
            keys *= self.input_arities[j];
        }
        let ny = self.output_arity;
        let mut acc = vec![0.0; keys * ny];
        let mut digits = vec![0; k];
        for r in 0..self.joint_inputs() {
            decode_mixed(r, &self.input_arities, &mut digits);
            let mut w = 1.0;
            let mut key = 0;
            for j in 0..k {
                w *= marginals[j][digits[j]];
                key += stride[j] * digits[j];
            }
            if w == 0.0 {
                continue;
            }
            let row = self.row(r);
            let dst = &mut acc[key * ny..(key + 1) * ny];
            for y in 0..ny {
                dst[y] += w * row[y];
            }
        }
        let mut h = 0.0;
        for chunk in acc.chunks(ny) {
            let m: f64 = chunk.iter().sum();
            if m <= 0.0 {
                continue;
            }
            for &v in chunk {
                if v > 0.0 {
                    h -= v * (v / m).log2();
                }
            }
        }
        h
    }

    /// Mutual information under uniform inputs for a single binary sender.
    pub fn symmetric_capacity(&self) -> Result<f64> {
        self.require_binary_p2p("symmetric capacity")?;
        self.mutual_information(&InputDistribution::uniform(&[2]), &[0], &[])
    }

    /// Bhattacharyya parameter of a single binary-input channel.
    pub fn bhattacharyya(&self) -> Result<f64> {
        self.require_binary_p2p("Bhattacharyya parameter")?;
        Ok((0..self.output_arity).map(|y| (self.prob(0, y) * self.prob(1, y)).sqrt()).sum())
    }

    fn require_binary_p2p(&self, what: &str) -> Result<()> {
        if self.input_arities != [2] {
            return Err(Error::Unsupported(format!("{what} needs a single binary input")));
        }
        Ok(())
    }

    /// Same senders, with the kernel averaged over uniform inputs of the
    /// `noise` senders, so the output no longer depends on them.
    pub fn average_out(&self, noise: &[usize]) -> Result<DiscreteChannel> {
        let k = self.senders();
        if noise.iter().any(|&j| j >= k) {
            return Err(Error::Dimension("noise sender out of range".into()));
        }
        let rows = self.joint_inputs();
        let ny = self.output_arity;
        let mut kernel = vec![0.0; rows * ny];
        let mut d = vec![0; k];
        let weight = 1.0 / noise.iter().map(|&j| self.input_arities[j]).product::<usize>() as f64;
        for r in 0..rows {
            decode_mixed(r, &self.input_arities, &mut d);
            // Representative row with every noise sender at 0.
            let mut rep = d.clone();
            noise.iter().for_each(|&j| rep[j] = 0);
            let target = self.joint_index(&rep);
            for y in 0..ny {
                kernel[target * ny + y] += weight * self.prob(r, y);
            }
        }
        for r in 0..rows {
            decode_mixed(r, &self.input_arities, &mut d);
            let mut rep = d.clone();
            noise.iter().for_each(|&j| rep[j] = 0);
            let src = self.joint_index(&rep);
            if src != r {
                let row: Vec<f64> = kernel[src * ny..(src + 1) * ny].to_vec();
                kernel[r * ny..(r + 1) * ny].copy_from_slice(&row);
            }
        }
        DiscreteChannel::new(self.input_arities.clone(), ny, kernel)
    }

    /// Channel from the `keep` senders alone, the others uniform.
    pub fn restrict_inputs(&self, keep: &[usize]) -> Result<DiscreteChannel> {
        let k = self.senders();
        if keep.is_empty() || keep.iter().any(|&j| j >= k) {
            return Err(Error::Dimension("kept senders must be a nonempty subset".into()));
        }
        let noise: Vec<usize> = (0..k).filter(|j| !keep.contains(j)).collect();
        let avg = self.average_out(&noise)?;
        let arities: Vec<usize> = keep.iter().map(|&j| self.input_arities[j]).collect();
        let rows: usize = arities.iter().product();
        let ny = self.output_arity;
        let mut kernel = Vec::with_capacity(rows * ny);
        let mut d = vec![0; keep.len()];
        let mut full = vec![0; k];
        for r in 0..rows {
            decode_mixed(r, &arities, &mut d);
            for (slot, &j) in keep.iter().enumerate() {
                full[j] = d[slot];
            }
            kernel.extend_from_slice(avg.row(avg.joint_index(&full)));
        }
        DiscreteChannel::new(arities, ny, kernel)
    }

    /// Merges output symbols with proportional likelihood columns and drops
    /// zero-probability outputs. Mutual information is unchanged.
    pub fn canonicalize(&self) -> DiscreteChannel {
        let rows = self.joint_inputs();
        let mut groups: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for y in 0..self.output_arity {
            let col: Vec<f64> = (0..rows).map(|r| self.prob(r, y)).collect();
            let s: f64 = col.iter().sum();
            if s <= 0.0 {
                continue;
            }
            let normed: Vec<f64> = col.iter().map(|v| v / s).collect();
            match groups.iter_mut().find(|(n, _)| n.iter().zip(&normed).all(|(a, b)| (a - b).abs() <= 1e-12)) {
                Some((_, acc)) => acc.iter_mut().zip(&col).for_each(|(a, c)| *a += c),
                None => groups.push((normed, col)),
            }
        }
        let outs = groups.len();
        let mut kernel = vec![0.0; rows * outs];
        for (y, (_, col)) in groups.iter().enumerate() {
            for r in 0..rows {
                kernel[r * outs + y] = col[r];
            }
        }
        DiscreteChannel {
            input_arities: self.input_arities.clone(),
            output_arity: outs,
            kernel,
            erasure_form: self.erasure_form.clone(),
        }
    }
}

/// Channel seen by u1 when u2 is uniform and unknown: output (y1, y2), index
/// `y1 * |Y2| + y2`.
pub fn minus_combine(p: &DiscreteChannel, q: &DiscreteChannel) -> Result<DiscreteChannel> {
    p.require_binary_p2p("minus combine")?;
    q.require_binary_p2p("minus combine")?;
    let (a, b) = (p.output_arity, q.output_arity);
    if a * b > MAX_OUTPUT_ALPHABET {
        return Err(Error::Size(format!("combined alphabet {} exceeds cap", a * b)));
    }
    let mut kernel = vec![0.0; 2 * a * b];
    for u1 in 0..2 {
        for u2 in 0..2 {
            for y1 in 0..a {
                let pa = p.prob(u1 ^ u2, y1);
                if pa == 0.0 {
                    continue;
                }
                for y2 in 0..b {
                    kernel[u1 * a * b + y1 * b + y2] += 0.5 * pa * q.prob(u2, y2);
                }
            }
        }
    }
    let mut ch = DiscreteChannel::new(vec![2], a * b, kernel)?;
    if let (Some(ErasureForm::Bec { epsilon: e1 }), Some(ErasureForm::Bec { epsilon: e2 })) = (&p.erasure_form, &q.erasure_form) {
        ch.erasure_form = Some(ErasureForm::Bec { epsilon: 1.0 - (1.0 - e1) * (1.0 - e2) });
    }
    Ok(ch)
}

/// Channel seen by u2 given u1: output (y1, y2, u1), index
/// `(y1 * |Y2| + y2) * 2 + u1`.
pub fn plus_combine(p: &DiscreteChannel, q: &DiscreteChannel) -> Result<DiscreteChannel> {
    p.require_binary_p2p("plus combine")?;
    q.require_binary_p2p("plus combine")?;
    let (a, b) = (p.output_arity, q.output_arity);
    if 2 * a * b > MAX_OUTPUT_ALPHABET {
        return Err(Error::Size(format!("combined alphabet {} exceeds cap", 2 * a * b)));
    }
    let outs = 2 * a * b;
    let mut kernel = vec![0.0; 2 * outs];
    for u2 in 0..2 {
        for u1 in 0..2 {
            for y1 in 0..a {
                let pa = p.prob(u1 ^ u2, y1);
                if pa == 0.0 {
                    continue;
                }
                for y2 in 0..b {
                    kernel[u2 * outs + (y1 * b + y2) * 2 + u1] += 0.5 * pa * q.prob(u2, y2);
                }
            }
        }
    }
    let mut ch = DiscreteChannel::new(vec![2], outs, kernel)?;
    if let (Some(ErasureForm::Bec { epsilon: e1 }), Some(ErasureForm::Bec { epsilon: e2 })) = (&p.erasure_form, &q.erasure_form) {
        ch.erasure_form = Some(ErasureForm::Bec { epsilon: e1 * e2 });
    }
    Ok(ch)
}

/// Folds time sharing into the channel: inputs become auxiliary symbols x',
/// the output becomes (y, q) with index `y * |Q| + q`, and
/// `maps[sender][q][x']` gives the symbol actually sent.
pub fn coded_time_sharing_transform(ch: &DiscreteChannel, q_weights: &[f64], maps: &[Vec<Vec<usize>>]) -> Result<DiscreteChannel> {
    check_simplex(q_weights, "time-sharing weights")?;
    let k = ch.senders();
    if maps.len() != k {
        return Err(Error::Dimension(format!("need {k} symbol maps, got {}", maps.len())));
    }
    let nq = q_weights.len();
    let mut arities = Vec::with_capacity(k);
    for (j, m) in maps.iter().enumerate() {
        if m.len() != nq {
            return Err(Error::Dimension(format!("sender {j} map has {} time slots, expected {nq}", m.len())));
        }
        let a = m[0].len();
        if a == 0 || m.iter().any(|row| row.len() != a) {
            return Err(Error::Dimension(format!("sender {j} map has inconsistent auxiliary alphabet")));
        }
        if m.iter().flatten().any(|&x| x >= ch.input_arities[j]) {
            return Err(Error::Dimension(format!("sender {j} map points outside the input alphabet")));
        }
        arities.push(a);
    }
    let rows: usize = arities.iter().product();
    let ny = ch.output_arity;
    let outs = ny * nq;
    if outs > MAX_OUTPUT_ALPHABET {
        return Err(Error::Size(format!("output alphabet {outs} exceeds cap")));
    }
    let mut kernel = vec![0.0; rows * outs];
    let mut aux = vec![0; k];
    let mut x = vec![0; k];
    for r in 0..rows {
        decode_mixed(r, &arities, &mut aux);
        for q in 0..nq {
            for j in 0..k {
                x[j] = maps[j][q][aux[j]];
            }
            let src = ch.joint_index(&x);
            for y in 0..ny {
                kernel[r * outs + y * nq + q] = q_weights[q] * ch.prob(src, y);
            }
        }
    }
    DiscreteChannel::new(arities, outs, kernel)
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

pub(crate) fn decode_mixed(mut idx: usize, arities: &[usize], out: &mut [usize]) {
    for j in (0..arities.len()).rev() {
        out[j] = idx % arities[j];
        idx /= arities[j];
    }
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Dimension(format!("{what} {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_simplex(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() || v.iter().any(|&x| !(x >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > PROB_TOL {
        return Err(Error::Dimension(format!("{what} is not a probability vector")));
    }
    Ok(())
}

/// JSON channel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelDesc {
    Named(NamedChannel),
    Kernel { inputs: Vec<usize>, outputs: usize, kernel: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NamedChannel {
    Bec { epsilon: f64 },
    Bsc { p: f64 },
    Adder {
        #[serde(default = "two")]
        users: usize,
    },
    XorErasure { epsilon: f64 },
    IndependentErasures { epsilons: Vec<f64> },
}

fn two() -> usize {
    2
}

impl ChannelDesc {
    pub fn build(&self) -> Result<DiscreteChannel> {
        match self {
            ChannelDesc::Named(NamedChannel::Bec { epsilon }) => DiscreteChannel::bec(*epsilon),
            ChannelDesc::Named(NamedChannel::Bsc { p }) => DiscreteChannel::bsc(*p),
            ChannelDesc::Named(NamedChannel::Adder { users }) => DiscreteChannel::binary_adder(*users),
            ChannelDesc::Named(NamedChannel::XorErasure { epsilon }) => DiscreteChannel::xor_erasure(*epsilon),
            ChannelDesc::Named(NamedChannel::IndependentErasures { epsilons }) => DiscreteChannel::independent_erasures(epsilons),
            ChannelDesc::Kernel { inputs, outputs, kernel } => {
                if kernel.iter().any(|r| r.len() != *outputs) {
                    return Err(Error::Dimension("kernel row length differs from output count".into()));
                }
                DiscreteChannel::new(inputs.clone(), *outputs, kernel.concat())
            }
        }
    }

    pub fn from_json(s: &str) -> Result<DiscreteChannel> {
        let d: ChannelDesc = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        d.build()
    }
}

impl DiscreteChannel {
    pub fn to_desc(&self) -> ChannelDesc {
        ChannelDesc::Kernel {
            inputs: self.input_arities.clone(),
            outputs: self.output_arity,
            kernel: self.kernel.chunks(self.output_arity).map(<[f64]>::to_vec).collect(),
        }
    }
}
