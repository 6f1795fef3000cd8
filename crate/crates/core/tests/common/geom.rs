//! Independent geometry oracles: vertex enumeration by brute-force basis
//! solves and an exact planar hull.

/// Solves the square system by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn satisfies(rows: &[(Vec<f64>, f64)], x: &[f64], tol: f64) -> bool {
    rows.iter().all(|(a, b)| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= b + tol)
}

fn choose(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        choose(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Every feasible basic solution of `rows` in dimension `d`, deduplicated.
pub fn vertices(rows: &[(Vec<f64>, f64)], d: usize) -> Vec<Vec<f64>> {
    let mut combos = Vec::new();
    choose(rows.len(), d, 0, &mut Vec::new(), &mut combos);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for c in combos {
        let a = c.iter().map(|&i| rows[i].0.clone()).collect();
        let b = c.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve(a, b) {
            if satisfies(rows, &x, 1e-9) && !out.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9)) {
                out.push(x);
            }
        }
    }
    out
}

/// Nonnegativity rows for dimension `d`.
pub fn nonneg(d: usize) -> Vec<(Vec<f64>, f64)> {
    (0..d)
        .map(|j| {
            let mut a = vec![0.0; d];
            a[j] = -1.0;
            (a, 0.0)
        })
        .collect()
}

/// Extreme points of a planar point set, counterclockwise, computed with
/// exact rational arithmetic on the given floats.
pub fn hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};
    let q = |x: f64| BigRational::from_float(x + 0.0).unwrap();
    let mut pts: Vec<(BigRational, BigRational)> = points.iter().map(|p| (q(p[0]), q(p[1]))).collect();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts.iter().map(|(x, y)| [x.to_f64().unwrap(), y.to_f64().unwrap()]).collect();
    }
    type P = (BigRational, BigRational);
    let cross = |o: &P, a: &P, b: &P| (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0);
    let chain = |iter: &mut dyn Iterator<Item = &P>| {
        let mut h: Vec<P> = Vec::new();
        for p in iter {
            while h.len() >= 2 && cross(&h[h.len() - 2], &h[h.len() - 1], p) <= BigRational::zero() {
                h.pop();
            }
            h.push(p.clone());
        }
        h.pop();
        h
    };
    let mut h = chain(&mut pts.iter());
    h.extend(chain(&mut pts.iter().rev()));
    h.iter().map(|(x, y)| [x.to_f64().unwrap(), y.to_f64().unwrap()]).collect()
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Distance from `p` to the convex polygon `poly` (counterclockwise), zero
/// inside.
pub fn polygon_distance(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let inside = n >= 3
        && (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
        });
    if inside {
        return 0.0;
    }
    (0..n).map(|i| segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

/// The two polygons agree within `tol`: every vertex of `got` is within
/// `tol` of a vertex of `want`, and every vertex of `want` is within `tol`
/// of the polygon `got`. Clusters of vertices closer than `tol` may merge.
pub fn same_polygon(got: &[[f64; 2]], want: &[[f64; 2]], tol: f64) -> bool {
    let near = |p: &[f64; 2], q: &[f64; 2]| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol;
    !got.is_empty()
        && got.iter().all(|p| want.iter().any(|q| near(p, q)))
        && want.iter().all(|q| polygon_distance(*q, got) <= tol)
}

/// Same point sets within `tol`.
pub fn same_points(a: &[[f64; 2]], b: &[[f64; 2]], tol: f64) -> bool {
    let near = |p: &[f64; 2], q: &[f64; 2]| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol;
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| near(p, q))) && b.iter().all(|p| a.iter().any(|q| near(p, q)))
}

/// Vertices of the planar polygon `rows` (nonnegativity added).
pub fn polygon(rows: &[(Vec<f64>, f64)]) -> Vec<[f64; 2]> {
    let mut all = rows.to_vec();
    all.extend(nonneg(2));
    let pts: Vec<[f64; 2]> = vertices(&all, 2).into_iter().map(|v| [v[0], v[1]]).collect();
    hull(&pts)
}
