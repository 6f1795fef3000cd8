#![allow(dead_code)]

pub mod geom;

use std::collections::HashMap;

use polarnet::channel::DiscreteChannel;

/// Reference polar transform by explicit matrix product with
/// G_N = B_N F^{(x)n}, built from Kronecker powers.
pub fn encode_by_matrix(u: &[u8]) -> Vec<u8> {
    let n = u.len();
    let bits = n.trailing_zeros();
    let mut g = vec![vec![1u8]];
    for _ in 0..bits {
        let m = g.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                next[i][j] = g[i][j];
                next[m + i][j] = g[i][j];
                next[m + i][m + j] = g[i][j];
            }
        }
        g = next;
    }
    let rev = |i: usize| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) };
    let mut x = vec![0u8; n];
    for j in 0..n {
        let mut acc = 0;
        for i in 0..n {
            acc ^= u[rev(i)] & g[i][j];
        }
        x[j] = acc;
    }
    x
}

pub fn entropy_of(map: &HashMap<Vec<u64>, f64>) -> f64 {
    map.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Brute-force per-step mutual information by enumerating the joint law of
/// (U, Y^N) for a binary-input MAC. Step `s` decodes user `steps[s]` given the
/// outputs and every index revealed earlier (including the start state).
pub fn brute_step_mis(mac: &DiscreteChannel, n: usize, start: &[usize], steps: &[usize]) -> Vec<f64> {
    let k = mac.senders();
    let len = 1usize << n;
    let bits = k * len;
    let mut samples: Vec<(Vec<Vec<u8>>, Vec<usize>, f64)> = Vec::new();
    for word in 0..(1u64 << bits) {
        let u: Vec<Vec<u8>> = (0..k).map(|j| (0..len).map(|i| (word >> (j * len + i) & 1) as u8).collect()).collect();
        let x: Vec<Vec<u8>> = u.iter().map(|r| encode_by_matrix(r)).collect();
        let rows: Vec<usize> = (0..len)
            .map(|t| {
                let digits: Vec<usize> = (0..k).map(|j| x[j][t] as usize).collect();
                mac.joint_index(&digits)
            })
            .collect();
        let mut ys: Vec<(Vec<usize>, f64)> = vec![(vec![], 1.0 / (1u64 << bits) as f64)];
        for t in 0..len {
            let mut next = Vec::new();
            for (y, p) in &ys {
                for sym in 0..mac.output_arity() {
                    let q = mac.prob(rows[t], sym);
                    if q > 0.0 {
                        let mut y2 = y.clone();
                        y2.push(sym);
                        next.push((y2, p * q));
                    }
                }
            }
            ys = next;
        }
        for (y, p) in ys {
            samples.push((u.clone(), y, p));
        }
    }
    let mut prefix = start.to_vec();
    let mut out = Vec::new();
    for &j in steps {
        prefix[j] += 1;
        let mut with: HashMap<Vec<u64>, f64> = HashMap::new();
        let mut without: HashMap<Vec<u64>, f64> = HashMap::new();
        let mut marg: HashMap<Vec<u64>, f64> = HashMap::new();
        for (u, y, p) in &samples {
            let mut key: Vec<u64> = y.iter().map(|&v| v as u64).collect();
            for jj in 0..k {
                let known = if jj == j { prefix[jj] - 1 } else { prefix[jj] };
                for i in 0..known {
                    key.push(u[jj][i] as u64 + 10 * (jj as u64 + 1));
                }
            }
            *without.entry(key.clone()).or_default() += p;
            let target = u[j][prefix[j] - 1] as u64;
            let mut k2 = key.clone();
            k2.push(target + 1000);
            *with.entry(k2).or_default() += p;
            *marg.entry(vec![target]).or_default() += p;
        }
        let h_cond = entropy_of(&with) - entropy_of(&without);
        out.push(entropy_of(&marg) - h_cond);
    }
    out
}

/// I(X_of; Y, X_given) for independent inputs with the given marginals,
/// from the joint law H(X_of) + H(Y, X_given) - H(X_of, Y, X_given).
pub fn joint_mi(mac: &DiscreteChannel, marginals: &[Vec<f64>], of: &[usize], given: &[usize]) -> f64 {
    let k = mac.senders();
    let arities: Vec<usize> = marginals.iter().map(Vec::len).collect();
    let rows: usize = arities.iter().product();
    let mut h_of: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut h_yg: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut h_all: HashMap<Vec<u64>, f64> = HashMap::new();
    for r in 0..rows {
        let mut digits = vec![0usize; k];
        let mut rem = r;
        for j in (0..k).rev() {
            digits[j] = rem % arities[j];
            rem /= arities[j];
        }
        let px: f64 = (0..k).map(|j| marginals[j][digits[j]]).product();
        if px == 0.0 {
            continue;
        }
        let xo: Vec<u64> = of.iter().map(|&j| digits[j] as u64).collect();
        let xg: Vec<u64> = given.iter().map(|&j| digits[j] as u64).collect();
        *h_of.entry(xo.clone()).or_default() += px;
        for y in 0..mac.output_arity() {
            let p = px * mac.prob(mac.joint_index(&digits), y);
            if p == 0.0 {
                continue;
            }
            let mut a = vec![y as u64];
            a.extend(&xg);
            *h_yg.entry(a.clone()).or_default() += p;
            a.push(u64::MAX);
            a.extend(&xo);
            *h_all.entry(a).or_default() += p;
        }
    }
    entropy_of(&h_of) + entropy_of(&h_yg) - entropy_of(&h_all)
}

/// Random row-stochastic kernel.
pub fn random_kernel(rng: &mut impl rand::Rng, rows: usize, outputs: usize) -> Vec<f64> {
    let mut k = Vec::with_capacity(rows * outputs);
    for _ in 0..rows {
        let raw: Vec<f64> = (0..outputs).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let fix: f64 = 1.0 - row.iter().sum::<f64>();
        row[0] += fix;
        k.extend(row);
    }
    k
}
