//! Brute-force reference implementations. They share nothing with the
//! library beyond the domain's coordinates and prior.

use geomoea::domain::Domain;

use super::euclid;

pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// `sum_x pi(x) sum_o f[x][o] d(x, o)`.
pub fn qloss(d: &Domain, f: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for x in 0..n {
        for o in 0..n {
            total += d.prior()[x] * f[x][o] * euclid(d, x, o);
        }
    }
    total
}

pub struct Attack {
    pub evidence: f64,
    pub error: f64,
    /// Every estimate whose expected error is within `1e-12` of the minimum.
    pub argmins: Vec<usize>,
}

/// Exhaustive Bayesian attack on output `o`; `None` if it is unreachable.
pub fn attack(d: &Domain, f: &[Vec<f64>], o: usize) -> Option<Attack> {
    let n = d.len();
    let evidence: f64 = (0..n).map(|x| d.prior()[x] * f[x][o]).sum();
    if evidence <= 0.0 {
        return None;
    }
    let cost: Vec<f64> = (0..n)
        .map(|c| (0..n).map(|x| d.prior()[x] * f[x][o] / evidence * euclid(d, c, x)).sum())
        .collect();
    let error = cost.iter().copied().fold(f64::INFINITY, f64::min);
    let argmins = (0..n).filter(|&c| cost[c] <= error + 1e-12).collect();
    Some(Attack { evidence, error, argmins })
}

pub fn exp_err(d: &Domain, f: &[Vec<f64>]) -> f64 {
    (0..d.len())
        .filter_map(|o| attack(d, f, o))
        .map(|a| a.evidence * a.error)
        .sum()
}

pub fn min_conditional_error(d: &Domain, f: &[Vec<f64>]) -> f64 {
    (0..d.len())
        .filter_map(|o| attack(d, f, o))
        .map(|a| a.error)
        .fold(f64::INFINITY, f64::min)
}

/// Smallest prior-weighted mean distance from any domain point to `members`.
pub fn e_prime(d: &Domain, members: &[usize]) -> f64 {
    let mass: f64 = members.iter().map(|&m| d.prior()[m]).sum();
    (0..d.len())
        .map(|c| members.iter().map(|&m| d.prior()[m] / mass * euclid(d, c, m)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Repeatedly peels off the non-dominated remainder. Each front ascending.
pub fn nondominated_sort(points: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Exact 2-D dominated area by summing the cells of the coordinate grid.
pub fn hypervolume(points: &[[f64; 2]], r: [f64; 2]) -> f64 {
    let axis = |k: usize| {
        let mut v: Vec<f64> = points.iter().map(|p| p[k]).filter(|&c| c <= r[k]).collect();
        v.push(r[k]);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (xs, ys) = (axis(0), axis(1));
    let mut area = 0.0;
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let covered = points.iter().any(|p| p[0] <= xs[i] && p[1] <= ys[j]);
            if covered {
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    area
}

/// Monte-Carlo estimate and its standard error.
pub fn hypervolume_mc(points: &[[f64; 2]], r: [f64; 2], samples: usize, rng: &mut impl rand::Rng) -> (f64, f64) {
    let lo = [
        points.iter().map(|p| p[0]).fold(r[0], f64::min),
        points.iter().map(|p| p[1]).fold(r[1], f64::min),
    ];
    let boxa = (r[0] - lo[0]) * (r[1] - lo[1]);
    let mut hits = 0usize;
    for _ in 0..samples {
        let s = [rng.gen_range(lo[0]..=r[0]), rng.gen_range(lo[1]..=r[1])];
        if points.iter().any(|p| p[0] <= s[0] && p[1] <= s[1]) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (boxa * p, boxa * (p * (1.0 - p) / samples as f64).sqrt())
}

/// Mean distance under `exp(-rate * d)` weights.
pub fn kernel_mean(dists: &[f64], rate: f64) -> f64 {
    let w: Vec<f64> = dists.iter().map(|&d| (-rate * d).exp()).collect();
    let t: f64 = w.iter().sum();
    dists.iter().zip(&w).map(|(d, w)| d * w).sum::<f64>() / t
}
