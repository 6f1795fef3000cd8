//! Rate regions: MAC polymatroids, compound intersections, dominant faces,
//! the Han–Kobayashi projection, the strong-interference test and the four
//! superposition-coding decode-set cases.
//!
//! Strict inequalities are stored as closed ones. Unions over input
//! distributions are taken over whatever finite list the caller supplies.

use crate::channel::{decode_mixed, DiscreteChannel, InputDistribution};
use crate::error::{Error, Result};
use crate::linear::{fourier_motzkin, LinearSystem, LpOutcome, Scalar, GEOM_TOL};
use crate::util::subsets_by_size;
use serde::{Deserialize, Serialize};
use std::fmt;

/// One constraint `coeffs . R <= bound`. `subset` is set for polymatroid
/// rows `R(J) <= bound`, as a mask over the polytope's coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConstraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<usize>,
}

/// Polytope in rate space with implicit nonnegativity. Coordinates are
/// labeled by sender id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePolytope {
    pub labels: Vec<usize>,
    pub constraints: Vec<RateConstraint>,
}

/// The sum-rate-tight face of a polymatroid region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantFace {
    pub labels: Vec<usize>,
    pub sum_rate: f64,
    /// Greedy corners, one per distinct permutation outcome, sorted.
    pub vertices: Vec<Vec<f64>>,
}

impl RatePolytope {
    pub fn new(labels: Vec<usize>, constraints: Vec<RateConstraint>) -> Result<Self> {
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::Dimension("duplicate coordinate labels".into()));
        }
        if constraints.iter().any(|c| c.coeffs.len() != labels.len()) {
            return Err(Error::Dimension("constraint length differs from dimension".into()));
        }
        Ok(Self { labels, constraints })
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    /// Polymatroid region from a bound function on nonempty masks.
    pub fn from_bounds(labels: Vec<usize>, bound: impl Fn(usize) -> f64) -> Self {
        let k = labels.len();
        let constraints = subsets_by_size(k)
            .into_iter()
            .map(|m| RateConstraint { coeffs: (0..k).map(|j| (m >> j & 1) as f64).collect(), bound: bound(m), subset: Some(m) })
            .collect();
        Self { labels, constraints }
    }

    /// The system including `R >= 0`.
    pub fn system(&self) -> LinearSystem<f64> {
        let mut s = LinearSystem::new(self.dimension());
        for c in &self.constraints {
            s.push(c.coeffs.clone(), c.bound);
        }
        s.with_nonnegativity()
    }

    pub fn contains(&self, r: &[f64]) -> bool {
        r.len() == self.dimension() && self.system().contains(r)
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        self.system().vertices()
    }

    /// Largest value of `R(J)` over the region.
    pub fn rank(&self, mask: usize) -> Option<f64> {
        let c: Vec<f64> = (0..self.dimension()).map(|j| (mask >> j & 1) as f64).collect();
        match self.system().maximize(&c) {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Tight bound function of the region, if it is a polymatroid: the rank
    /// function is normalized, monotone and submodular and its greedy corners
    /// lie in the region.
    pub fn polymatroid_rank(&self) -> Result<Vec<f64>> {
        let k = self.dimension();
        let mut f = vec![0.0; 1 << k];
        for m in 1..(1usize << k) {
            f[m] = self.rank(m).ok_or_else(|| Error::Unsupported("region is empty or unbounded".into()))?;
        }
        if !is_polymatroid(&f, k, GEOM_TOL) {
            return Err(Error::Unsupported("rank function is not submodular".into()));
        }
        if greedy_corners(&f, k).iter().any(|v| !self.contains(v)) {
            return Err(Error::Unsupported("region is not a polymatroid".into()));
        }
        Ok(f)
    }

    pub fn dominant_face(&self) -> Result<DominantFace> {
        let k = self.dimension();
        let f = self.polymatroid_rank()?;
        Ok(DominantFace { labels: self.labels.clone(), sum_rate: f[(1 << k) - 1], vertices: greedy_corners(&f, k) })
    }

    /// Extreme points of the dominant face.
    pub fn corner_points(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.dominant_face()?.vertices)
    }

    /// Copies the region into a larger coordinate set. New coordinates are
    /// unconstrained apart from nonnegativity.
    pub fn embed(&self, labels: &[usize]) -> Result<Self> {
        let pos: Vec<usize> = self
            .labels
            .iter()
            .map(|l| labels.iter().position(|m| m == l).ok_or_else(|| Error::Dimension(format!("label {l} missing from target"))))
            .collect::<Result<_>>()?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let mut coeffs = vec![0.0; labels.len()];
                let mut subset = c.subset.map(|_| 0usize);
                for (j, &p) in pos.iter().enumerate() {
                    coeffs[p] = c.coeffs[j];
                    if let (Some(s), Some(m)) = (subset.as_mut(), c.subset) {
                        if m >> j & 1 == 1 {
                            *s |= 1 << p;
                        }
                    }
                }
                RateConstraint { coeffs, bound: c.bound, subset }
            })
            .collect();
        Self::new(labels.to_vec(), constraints)
    }

    /// Drops constraints implied by the others and nonnegativity.
    pub fn without_redundancy(&self) -> Self {
        let k = self.dimension();
        let mut keep: Vec<RateConstraint> = Vec::new();
        // Parallel duplicates keep the tightest bound.
        for c in &self.constraints {
            match keep.iter_mut().find(|o| o.coeffs.iter().zip(&c.coeffs).all(|(a, b)| (a - b).abs() <= GEOM_TOL)) {
                Some(o) => {
                    if c.bound < o.bound {
                        o.bound = c.bound;
                    }
                }
                None => keep.push(c.clone()),
            }
        }
        let mut i = 0;
        while i < keep.len() {
            let mut s = LinearSystem::new(k);
            for (j, c) in keep.iter().enumerate() {
                if j != i {
                    s.push(c.coeffs.clone(), c.bound);
                }
            }
            let s = s.with_nonnegativity();
            let redundant = match s.maximize(&keep[i].coeffs) {
                LpOutcome::Optimal { value, .. } => value <= keep[i].bound + GEOM_TOL,
                LpOutcome::Infeasible => false,
                LpOutcome::Unbounded => false,
            };
            if redundant {
                keep.remove(i);
            } else {
                i += 1;
            }
        }
        Self { labels: self.labels.clone(), constraints: keep }
    }
}

/// Intersection of regions over the same labels.
pub fn intersect(regions: &[RatePolytope]) -> Result<RatePolytope> {
    let first = regions.first().ok_or_else(|| Error::Dimension("nothing to intersect".into()))?;
    let mut constraints = Vec::new();
    for r in regions {
        if r.labels != first.labels {
            return Err(Error::Dimension(format!("labels {:?} do not match {:?}", r.labels, first.labels)));
        }
        constraints.extend(r.constraints.iter().cloned());
    }
    Ok(RatePolytope { labels: first.labels.clone(), constraints }.without_redundancy())
}

/// `R(J) <= I(X_J; Y, X_{A\J} | Q)` for every nonempty `J` in `decode_set`.
/// Senders outside the decode set are treated as noise.
pub fn mac_region(mac: &DiscreteChannel, p: &InputDistribution, decode_set: &[usize]) -> Result<RatePolytope> {
    let mut labels = decode_set.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() || labels.len() != decode_set.len() {
        return Err(Error::Dimension("decode set must be nonempty without repeats".into()));
    }
    let k = labels.len();
    let mut bounds = vec![0.0; 1 << k];
    for m in subsets_by_size(k) {
        let (inside, outside) = split_mask(&labels, m);
        bounds[m] = mac.mutual_information(p, &inside, &outside)?;
    }
    Ok(RatePolytope::from_bounds(labels, |m| bounds[m]))
}

fn split_mask(labels: &[usize], m: usize) -> (Vec<usize>, Vec<usize>) {
    let inside = labels.iter().enumerate().filter(|(j, _)| m >> j & 1 == 1).map(|(_, &l)| l).collect();
    let outside = labels.iter().enumerate().filter(|(j, _)| m >> j & 1 == 0).map(|(_, &l)| l).collect();
    (inside, outside)
}

/// Normalized, monotone and submodular within `tol`.
pub fn is_polymatroid(f: &[f64], k: usize, tol: f64) -> bool {
    let full = 1usize << k;
    if f.len() != full || f[0].abs() > tol {
        return false;
    }
    for a in 0..full {
        for j in 0..k {
            if a >> j & 1 == 0 && f[a | 1 << j] < f[a] - tol {
                return false;
            }
        }
        for b in 0..full {
            if f[a] + f[b] < f[a | b] + f[a & b] - tol {
                return false;
            }
        }
    }
    true
}

/// Greedy polymatroid vertices over all orders, deduplicated and sorted.
pub fn greedy_corners(f: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for perm in permutations(k) {
        let mut v = vec![0.0; k];
        let mut m = 0usize;
        for &j in &perm {
            v[j] = f[m | 1 << j] - f[m];
            m |= 1 << j;
        }
        if !out.iter().any(|o| o.iter().zip(&v).all(|(a, b)| (a - b).abs() <= GEOM_TOL)) {
            out.push(v);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Convex polygon in the `(R1, R2)` plane, counterclockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region2D {
    pub vertices: Vec<[f64; 2]>,
}

impl Region2D {
    /// Convex hull (Andrew's monotone chain), counterclockwise from the
    /// lowest-leftmost point, collinear points dropped.
    pub fn hull(points: &[[f64; 2]]) -> Self {
        let mut pts: Vec<[f64; 2]> = points.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= GEOM_TOL && (a[1] - b[1]).abs() <= GEOM_TOL);
        if pts.len() <= 2 {
            return Self { vertices: pts };
        }
        // Distance of `a` to the right of the line from `o` to `b`.
        let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
            let len = (b[0] - o[0]).hypot(b[1] - o[1]);
            ((b[0] - o[0]) * (a[1] - o[1]) - (b[1] - o[1]) * (a[0] - o[0])) / -len
        };
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= GEOM_TOL {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= GEOM_TOL {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    pub fn from_polytope(r: &RatePolytope) -> Result<Self> {
        Self::from_system(&r.system())
    }

    pub fn from_system(s: &LinearSystem<f64>) -> Result<Self> {
        if s.dim != 2 {
            return Err(Error::Dimension(format!("expected a planar system, got dimension {}", s.dim)));
        }
        let pts: Vec<[f64; 2]> = s.vertices().into_iter().map(|v| [v[0], v[1]]).collect();
        Ok(Self::hull(&pts))
    }

    /// Convex hull of a union of regions (time sharing between them).
    pub fn convex_union(regions: &[Region2D]) -> Self {
        let pts: Vec<[f64; 2]> = regions.iter().flat_map(|r| r.vertices.iter().copied()).collect();
        Self::hull(&pts)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => (v[0][0] - p[0]).abs() <= GEOM_TOL && (v[0][1] - p[1]).abs() <= GEOM_TOL,
            _ => (0..v.len()).all(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt().max(1.0);
                cross >= -GEOM_TOL * len
            }),
        }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        (0..v.len()).map(|i| v[i][0] * v[(i + 1) % v.len()][1] - v[(i + 1) % v.len()][0] * v[i][1]).sum::<f64>() / 2.0
    }

    /// Same vertex set within `tol`, ignoring order.
    pub fn same_as(&self, other: &Region2D, tol: f64) -> bool {
        let near = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol;
        self.vertices.len() == other.vertices.len()
            && self.vertices.iter().all(|a| other.vertices.iter().any(|b| near(a, b)))
            && other.vertices.iter().all(|a| self.vertices.iter().any(|b| near(a, b)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r1,r2\n");
        for v in &self.vertices {
            s.push_str(&format!("{},{}\n", v[0], v[1]));
        }
        s
    }
}

/// Region file contents: inequalities and vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionExport {
    pub labels: Vec<usize>,
    pub inequalities: Vec<RateConstraint>,
    pub vertices: Vec<Vec<f64>>,
}

impl From<&RatePolytope> for RegionExport {
    fn from(r: &RatePolytope) -> Self {
        Self { labels: r.labels.clone(), inequalities: r.constraints.clone(), vertices: r.vertices() }
    }
}

/// Compound MAC region `R_Y(p) ∩ R_Z(p)` for each listed distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundRegion {
    /// Number of distributions the union was taken over.
    pub grid_size: usize,
    pub per_distribution: Vec<Region2D>,
    /// Hull of the union, i.e. time sharing outside the intersection.
    pub convexified: Region2D,
}

pub fn compound_mac_region(y: &DiscreteChannel, z: &DiscreteChannel, grid: &[InputDistribution]) -> Result<CompoundRegion> {
    if y.senders() != 2 || z.senders() != 2 {
        return Err(Error::Dimension("compound region needs two-sender channels".into()));
    }
    let per = grid
        .iter()
        .map(|p| {
            let r = intersect(&[mac_region(y, p, &[0, 1])?, mac_region(z, p, &[0, 1])?])?;
            Region2D::from_polytope(&r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompoundRegion { grid_size: grid.len(), convexified: Region2D::convex_union(&per), per_distribution: per })
}

/// Interference channel given by the two receivers' marginal channels over
/// the same pair of inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceChannel {
    pub receivers: [DiscreteChannel; 2],
}

impl InterferenceChannel {
    pub fn new(y1: DiscreteChannel, y2: DiscreteChannel) -> Result<Self> {
        if y1.input_arities() != y2.input_arities() {
            return Err(Error::Dimension("receivers disagree on input alphabets".into()));
        }
        Ok(Self { receivers: [y1, y2] })
    }

    /// Splits a joint kernel whose output index is `y1 * arity2 + y2`.
    pub fn from_joint(joint: &DiscreteChannel, arity1: usize) -> Result<Self> {
        let ny = joint.output_arity();
        if arity1 == 0 || ny % arity1 != 0 {
            return Err(Error::Dimension(format!("output arity {ny} is not a multiple of {arity1}")));
        }
        let a2 = ny / arity1;
        let rows = joint.joint_inputs();
        let mut k1 = vec![0.0; rows * arity1];
        let mut k2 = vec![0.0; rows * a2];
        for r in 0..rows {
            for (y, &v) in joint.row(r).iter().enumerate() {
                k1[r * arity1 + y / a2] += v;
                k2[r * a2 + y % a2] += v;
            }
        }
        let ins = joint.input_arities().to_vec();
        Self::new(DiscreteChannel::new(ins.clone(), arity1, k1)?, DiscreteChannel::new(ins, a2, k2)?)
    }
}

/// Joint law of `(Q, V1..V4)` stored as `joint[q][v]` with `v` in mixed
/// radix over the four alphabets (V1 most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HkDistribution {
    pub arities: [usize; 4],
    pub joint: Vec<Vec<f64>>,
}

impl HkDistribution {
    pub fn product(q_weights: &[f64], marginals: &[[Vec<f64>; 4]]) -> Result<Self> {
        if q_weights.len() != marginals.len() || q_weights.is_empty() {
            return Err(Error::Dimension("one marginal set per time-sharing value".into()));
        }
        let arities = [0, 1, 2, 3].map(|j| marginals[0][j].len());
        let total: usize = arities.iter().product();
        let mut joint = Vec::new();
        let mut d = vec![0; 4];
        for (q, m) in marginals.iter().enumerate() {
            if (0..4).any(|j| m[j].len() != arities[j]) {
                return Err(Error::Dimension("alphabet sizes differ across q".into()));
            }
            let mut row = vec![0.0; total];
            for (v, slot) in row.iter_mut().enumerate() {
                decode_mixed(v, &arities, &mut d);
                *slot = q_weights[q] * (0..4).map(|j| m[j][d[j]]).product::<f64>();
            }
            joint.push(row);
        }
        Ok(Self { arities, joint })
    }

    /// `p(q)` and the per-q marginals, or a precondition error if the joint
    /// law is not a product given Q.
    pub fn factor(&self) -> Result<(Vec<f64>, Vec<Vec<Vec<f64>>>)> {
        let total: usize = self.arities.iter().product();
        let mut weights = Vec::new();
        let mut comps = Vec::new();
        let mut d = vec![0; 4];
        for row in &self.joint {
            if row.len() != total {
                return Err(Error::Dimension("joint law has the wrong size".into()));
            }
            let w: f64 = row.iter().sum();
            weights.push(w);
            let mut marg: Vec<Vec<f64>> = self.arities.iter().map(|&a| vec![0.0; a]).collect();
            if w > 0.0 {
                for (v, &pv) in row.iter().enumerate() {
                    decode_mixed(v, &self.arities, &mut d);
                    for j in 0..4 {
                        marg[j][d[j]] += pv / w;
                    }
                }
                for (v, &pv) in row.iter().enumerate() {
                    decode_mixed(v, &self.arities, &mut d);
                    let prod: f64 = (0..4).map(|j| marg[j][d[j]]).product();
                    if (pv / w - prod).abs() > 1e-9 {
                        return Err(Error::Precondition("V1..V4 are not independent given Q".into()));
                    }
                }
            } else {
                for m in marg.iter_mut() {
                    let a = m.len() as f64;
                    m.iter_mut().for_each(|x| *x = 1.0 / a);
                }
            }
            comps.push(marg);
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Dimension("joint law does not sum to one".into()));
        }
        Ok((weights, comps))
    }
}

/// Symbol maps `x1[q][v1][v2]` and `x2[q][v3][v4]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HkMaps {
    pub x1: Vec<Vec<Vec<usize>>>,
    pub x2: Vec<Vec<Vec<usize>>>,
}

/// The four-sender network seen by each receiver for one value of Q.
pub fn hk_network(ic: &InterferenceChannel, arities: [usize; 4], maps: &HkMaps, q: usize) -> Result<[DiscreteChannel; 2]> {
    let ins = ic.receivers[0].input_arities();
    if ins.len() != 2 {
        return Err(Error::Dimension("interference channel needs two senders".into()));
    }
    let (m1, m2) = (maps.x1.get(q), maps.x2.get(q));
    let (Some(m1), Some(m2)) = (m1, m2) else { return Err(Error::Dimension(format!("no map for q = {q}"))) };
    let nets = ic.receivers.clone().map(|ch| {
        let rows: usize = arities.iter().product();
        let ny = ch.output_arity();
        let mut kernel = vec![0.0; rows * ny];
        let mut d = vec![0; 4];
        for r in 0..rows {
            decode_mixed(r, &arities, &mut d);
            let x1 = *m1.get(d[0]).and_then(|v| v.get(d[1])).ok_or_else(|| Error::Dimension("x1 map too small".into()))?;
            let x2 = *m2.get(d[2]).and_then(|v| v.get(d[3])).ok_or_else(|| Error::Dimension("x2 map too small".into()))?;
            if x1 >= ins[0] || x2 >= ins[1] {
                return Err(Error::Dimension("map output outside the input alphabet".into()));
            }
            kernel[r * ny..(r + 1) * ny].copy_from_slice(ch.row(ch.joint_index(&[x1, x2])));
        }
        DiscreteChannel::new(arities.to_vec(), ny, kernel)
    });
    let [a, b] = nets;
    Ok([a?, b?])
}

/// Rate region of the four-sender network: receiver 1 decodes senders
/// `{0,1,2}`, receiver 2 decodes `{1,2,3}` (0-based), each with the remaining
/// sender as noise. Returned over the coordinates `R1'..R4'`.
pub fn hk_auxiliary_region(ic: &InterferenceChannel, p: &HkDistribution, maps: &HkMaps) -> Result<RatePolytope> {
    let (weights, comps) = p.factor()?;
    let mut b1 = vec![0.0; 8];
    let mut b2 = vec![0.0; 8];
    for (q, comp) in comps.iter().enumerate() {
        if weights[q] == 0.0 {
            continue;
        }
        let pq = InputDistribution::product(comp.clone())?;
        let [n1, n2] = hk_network(ic, p.arities, maps, q)?;
        for m in 1..8usize {
            let (i1, o1) = split_mask(&[0, 1, 2], m);
            let (i2, o2) = split_mask(&[1, 2, 3], m);
            b1[m] += weights[q] * n1.mutual_information(&pq, &i1, &o1)?;
            b2[m] += weights[q] * n2.mutual_information(&pq, &i2, &o2)?;
        }
    }
    let r1 = RatePolytope::from_bounds(vec![1, 2, 3], |m| b1[m]).embed(&[1, 2, 3, 4])?;
    let r2 = RatePolytope::from_bounds(vec![2, 3, 4], |m| b2[m]).embed(&[1, 2, 3, 4])?;
    let mut constraints = r1.constraints;
    constraints.extend(r2.constraints);
    RatePolytope::new(vec![1, 2, 3, 4], constraints)
}

/// Han–Kobayashi region for one input distribution: the auxiliary region
/// projected through `R1 = R1' + R2'`, `R2 = R3' + R4'`.
pub fn hk_region(ic: &InterferenceChannel, p: &HkDistribution, maps: &HkMaps) -> Result<Region2D> {
    let aux = hk_auxiliary_region(ic, p, maps)?;
    Region2D::from_system(&hk_projection(&aux.system()))
}

/// Substitutes `R1' = R1 - R2'` and `R4' = R2 - R3'` into a system over
/// `(R1', R2', R3', R4')` and eliminates `R2', R3'`.
pub fn hk_projection<S: Scalar>(aux: &LinearSystem<S>) -> LinearSystem<S> {
    // New coordinates: (R1, R2, R2', R3').
    let mut s = LinearSystem::new(4);
    for r in &aux.rows {
        let c = &r.coeffs;
        let coeffs = vec![c[0].clone(), c[3].clone(), c[1].clone() - c[0].clone(), c[2].clone() - c[3].clone()];
        s.push(coeffs, r.bound.clone());
    }
    fourier_motzkin(&s, &[2, 3])
}

/// Which inequality failed and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceWitness {
    /// Input marginals of the two senders.
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    /// 1 for `I(X1;Y1|X2) <= I(X1;Y2|X2)`, 2 for `I(X2;Y2|X1) <= I(X2;Y1|X1)`.
    pub condition: u8,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongInterferenceReport {
    pub strong: bool,
    /// Always "grid-verified": the check covers the listed grid only.
    pub label: String,
    pub grid_resolution: usize,
    pub grid_points: usize,
    pub witness: Option<InterferenceWitness>,
}

/// Checks both strong-interference inequalities on every product input
/// distribution whose marginals have entries in multiples of
/// `1 / grid_resolution`.
pub fn strong_interference_check(ic: &InterferenceChannel, grid_resolution: usize) -> Result<StrongInterferenceReport> {
    let ins = ic.receivers[0].input_arities().to_vec();
    if ins.len() != 2 {
        return Err(Error::Dimension("interference channel needs two senders".into()));
    }
    let g = grid_resolution.max(1);
    let g1 = simplex_grid(ins[0], g);
    let g2 = simplex_grid(ins[1], g);
    let [y1, y2] = &ic.receivers;
    let mut count = 0;
    for a in &g1 {
        for b in &g2 {
            count += 1;
            let p = InputDistribution::product(vec![a.clone(), b.clone()])?;
            let checks = [
                (1u8, y1.mutual_information(&p, &[0], &[1])?, y2.mutual_information(&p, &[0], &[1])?),
                (2u8, y2.mutual_information(&p, &[1], &[0])?, y1.mutual_information(&p, &[1], &[0])?),
            ];
            for (condition, lhs, rhs) in checks {
                if lhs > rhs + 1e-12 {
                    return Ok(StrongInterferenceReport {
                        strong: false,
                        label: "grid-verified".into(),
                        grid_resolution: g,
                        grid_points: count,
                        witness: Some(InterferenceWitness { p1: a.clone(), p2: b.clone(), condition, lhs, rhs }),
                    });
                }
            }
        }
    }
    Ok(StrongInterferenceReport { strong: true, label: "grid-verified".into(), grid_resolution: g, grid_points: count, witness: None })
}

/// Points of the probability simplex on `arity` symbols with denominators `g`.
fn simplex_grid(arity: usize, g: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, g: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / g as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, slots - 1, g, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, arity, g, &mut Vec::new(), &mut out);
    out
}

/// `I(V_of ; Y_receiver, V_given)` with 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiExpr {
    pub of: Vec<usize>,
    pub receiver: usize,
    pub given: Vec<usize>,
}

impl fmt::Display for MiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vs = |s: &[usize]| s.iter().map(|j| format!("V_{j}")).collect::<Vec<_>>().join(",");
        write!(f, "I({};Y_{}", vs(&self.of), self.receiver)?;
        if !self.given.is_empty() {
            write!(f, ",{}", vs(&self.given))?;
        }
        write!(f, ")")
    }
}

/// `sum_{j in rates} R_j <= mi`, with its numerical value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicConstraint {
    pub rates: Vec<usize>,
    pub mi: MiExpr,
    pub value: f64,
}

impl fmt::Display for SymbolicConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs = self.rates.iter().map(|j| format!("R_{j}")).collect::<Vec<_>>().join(" + ");
        write!(f, "{lhs} <= {}", self.mi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionCase {
    /// 1..=4.
    pub case: usize,
    /// Messages each receiver must decode, 1-based.
    pub decode_sets: [Vec<usize>; 2],
    pub constraints: Vec<SymbolicConstraint>,
    pub region: Region2D,
}

/// The decode-set pairs of the four cases.
pub const SUPERPOSITION_CASES: [(&[usize], &[usize]); 4] = [(&[1], &[2]), (&[1, 2], &[2]), (&[1], &[1, 2]), (&[1, 2], &[1, 2])];

/// Superposition regions for a broadcast channel given by its two receiver
/// channels from X, independent auxiliaries `V1 ~ p1`, `V2 ~ p2` and the map
/// `x = map[v1][v2]`.
pub fn superposition_regions(
    receivers: [&DiscreteChannel; 2],
    p1: &[f64],
    p2: &[f64],
    map: &[Vec<usize>],
) -> Result<[SuperpositionCase; 4]> {
    let arities = vec![p1.len(), p2.len()];
    let nets = receivers.map(|ch| -> Result<DiscreteChannel> {
        if ch.senders() != 1 {
            return Err(Error::Dimension("broadcast receivers take a single input".into()));
        }
        let ny = ch.output_arity();
        let mut kernel = Vec::with_capacity(p1.len() * p2.len() * ny);
        for v1 in 0..p1.len() {
            for v2 in 0..p2.len() {
                let x = *map.get(v1).and_then(|r| r.get(v2)).ok_or_else(|| Error::Dimension("map too small".into()))?;
                if x >= ch.input_arities()[0] {
                    return Err(Error::Dimension("map output outside the input alphabet".into()));
                }
                kernel.extend_from_slice(ch.row(x));
            }
        }
        DiscreteChannel::new(arities.clone(), ny, kernel)
    });
    let [n1, n2] = nets;
    let nets = [n1?, n2?];
    let p = InputDistribution::product(vec![p1.to_vec(), p2.to_vec()])?;
    let mut out = Vec::with_capacity(4);
    for (i, (a1, a2)) in SUPERPOSITION_CASES.iter().enumerate() {
        let mut constraints = Vec::new();
        for (r, set) in [*a1, *a2].iter().enumerate() {
            for m in subsets_by_size(set.len()) {
                let (of, given) = split_mask(set, m);
                let senders: Vec<usize> = of.iter().map(|j| j - 1).collect();
                let cond: Vec<usize> = given.iter().map(|j| j - 1).collect();
                let value = nets[r].mutual_information(&p, &senders, &cond)?;
                constraints.push(SymbolicConstraint { rates: of.clone(), mi: MiExpr { of, receiver: r + 1, given }, value });
            }
        }
        let mut s = LinearSystem::new(2);
        for c in &constraints {
            let mut coeffs = vec![0.0; 2];
            for &j in &c.rates {
                coeffs[j - 1] = 1.0;
            }
            s.push(coeffs, c.value);
        }
        let region = Region2D::from_system(&s.with_nonnegativity())?;
        out.push(SuperpositionCase { case: i + 1, decode_sets: [a1.to_vec(), a2.to_vec()], constraints, region });
    }
    out.try_into().map_err(|_| Error::Dimension("four cases expected".into()))
}
