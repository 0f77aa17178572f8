#![allow(dead_code)]

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Fresnel integrals by adaptive Gauss–Legendre quadrature of
/// `cos(πt²/2)`, `sin(πt²/2)`.
///
/// `[0, |u|]` is cut where the phase crosses multiples of π/2 (at `t = √k`),
/// each piece is bisected until a 20-point rule and its two-half version
/// agree, and the pieces are accumulated along the sorted arguments so every
/// piece is integrated once.
pub struct FresnelOracle {
    rule: GaussLegendre,
}

impl FresnelOracle {
    pub fn new() -> Self {
        Self { rule: GaussLegendre::new(NonZeroUsize::new(20).unwrap()) }
    }

    fn rule_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let (mut c, mut s) = (0.0, 0.0);
        for (x, w) in self.rule.as_node_weight_pairs() {
            let t = mid + half * x;
            let ph = std::f64::consts::FRAC_PI_2 * t * t;
            c += w * ph.cos();
            s += w * ph.sin();
        }
        (c * half, s * half)
    }

    fn adaptive(&self, lo: f64, hi: f64, depth: u32) -> (f64, f64) {
        let whole = self.rule_on(lo, hi);
        let mid = 0.5 * (lo + hi);
        let (a, b) = (self.rule_on(lo, mid), self.rule_on(mid, hi));
        let split = (a.0 + b.0, a.1 + b.1);
        if depth >= 8 || (whole.0 - split.0).abs() + (whole.1 - split.1).abs() <= 4e-15 * (hi - lo) {
            split
        } else {
            let l = self.adaptive(lo, mid, depth + 1);
            let r = self.adaptive(mid, hi, depth + 1);
            (l.0 + r.0, l.1 + r.1)
        }
    }

    /// `(C(u), S(u))` for every argument, in input order.
    pub fn evaluate(&self, us: &[f64]) -> Vec<(f64, f64)> {
        let mut order: Vec<usize> = (0..us.len()).collect();
        order.sort_by(|a, b| us[*a].abs().total_cmp(&us[*b].abs()));
        let mut out = vec![(0.0, 0.0); us.len()];
        let (mut acc, mut comp) = ([0.0f64; 2], [0.0f64; 2]);
        let mut at = 0.0f64;
        let mut k = 1u64;
        let mut add = |v: (f64, f64), acc: &mut [f64; 2]| {
            for (i, x) in [v.0, v.1].into_iter().enumerate() {
                let y = x - comp[i];
                let t = acc[i] + y;
                comp[i] = (t - acc[i]) - y;
                acc[i] = t;
            }
        };
        for idx in order {
            let target = us[idx].abs();
            while (k as f64).sqrt() < target {
                let next = (k as f64).sqrt();
                add(self.adaptive(at, next, 0), &mut acc);
                at = next;
                k += 1;
            }
            let (c0, s0) = (acc[0], acc[1]);
            let tail = if target > at { self.adaptive(at, target, 0) } else { (0.0, 0.0) };
            let sign = us[idx].signum();
            out[idx] = (sign * (c0 + tail.0), sign * (s0 + tail.1));
        }
        out
    }
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|x, y| v[*x].total_cmp(&v[*y]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let m = (a.len() as f64 - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - m) * (y - m)).sum();
    let var: f64 = ra.iter().map(|x| (x - m) * (x - m)).sum();
    cov / var
}

/// Location of the largest sample, refined by a parabola through its neighbours.
pub fn peak_position(xs: &[f64], ys: &[f64]) -> f64 {
    let k = (1..ys.len() - 1).max_by(|a, b| ys[*a].total_cmp(&ys[*b])).unwrap();
    let (l, c, r) = (ys[k - 1], ys[k], ys[k + 1]);
    let h = xs[k + 1] - xs[k];
    xs[k] + 0.5 * h * (l - r) / (l - 2.0 * c + r)
}
