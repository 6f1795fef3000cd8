use std::ops::Range;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one trial of one stream, independent of how trials are scheduled.
pub fn trial_seed(master: u64, stream: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)) ^ trial)
}

/// Applies `f` to consecutive ranges of `0..count` and returns results in
/// range order. The ranges depend only on `count` and `chunk`, so reductions
/// over the returned vector do not depend on the thread count.
pub fn map_chunks<R, F>(count: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    let ranges: Vec<Range<usize>> = (0..count.div_ceil(chunk)).map(|c| c * chunk..((c + 1) * chunk).min(count)).collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ranges.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(f).collect()
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes >= trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Iterates over the nonempty subsets of `0..k` as bitmasks, by size then
/// lexicographically.
pub fn subsets_by_size(k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..(1usize << k)).collect();
    v.sort_by_key(|&m| (m.count_ones(), lex_key(m, k)));
    v
}

fn lex_key(m: usize, k: usize) -> Vec<usize> {
    (0..k).filter(|j| m >> j & 1 == 1).collect()
}
