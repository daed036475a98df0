//! Symmetric banded matrices: LDLᵀ factorization, inertia and solves.

/// Lower band storage: `get(i, i−k)` for `k ≤ bw`.
#[derive(Clone, Debug)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `x` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, x: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += x;
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// `self − mu·diag(b)`.
    pub fn shifted(&self, mu: f64, b: &[f64]) -> SymBand {
        let mut out = self.clone();
        for i in 0..self.n {
            let k = out.idx(i, i);
            out.data[k] -= mu * b[i];
        }
        out
    }

    /// LDLᵀ without pivoting. Pivots that are tiny relative to their own row are
    /// nudged so the factorization always completes. The scale is per row: radial
    /// weights can span many decades along the diagonal.
    pub fn ldlt(&self) -> Ldlt {
        let (n, bw) = (self.n, self.bw);
        let mut l = SymBand::zeros(n, bw);
        let mut d = vec![0.0; n];
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let scale = (lo..=(j + bw).min(n - 1)).map(|k| self.get(j, k).abs()).fold(f64::MIN_POSITIVE, f64::max);
            let mut dj = self.get(j, j);
            for k in lo..j {
                let ljk = l.data[l.idx(j, k)];
                dj -= ljk * ljk * d[k];
            }
            if dj.abs() < f64::EPSILON * scale {
                dj = if dj < 0.0 { -f64::EPSILON } else { f64::EPSILON } * scale;
            }
            d[j] = dj;
            for i in (j + 1)..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = self.get(i, j);
                for k in lo_i..j {
                    s -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)] * d[k];
                }
                let k = l.idx(i, j);
                l.data[k] = s / dj;
            }
        }
        Ldlt { l, d }
    }
}

pub struct Ldlt {
    l: SymBand,
    d: Vec<f64>,
}

impl Ldlt {
    /// Number of negative pivots, equal to the number of negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let bw = self.l.bw;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                y[i] -= self.l.get(i, k) * y[k];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..(i + bw + 1).min(n) {
                y[i] -= self.l.get(k, i) * y[k];
            }
        }
        y
    }
}

/// Smallest eigenvalue of `Q x = λ diag(b) x` (`b > 0`) and its eigenvector.
///
/// `lower` must bound the spectrum from below. The eigenvalue is located by
/// inertia bisection and the vector by inverse iteration from `seed` (or ones);
/// the returned value is the Rayleigh quotient when that stays in the bracket.
pub fn min_generalized(q: &SymBand, b: &[f64], lower: f64, seed: Option<&[f64]>) -> (f64, Vec<f64>) {
    let m = b.len();
    let quad = |x: &[f64]| -> f64 { x.iter().zip(q.mul(x)).map(|(a, c)| a * c).sum() };
    let mass = |x: &[f64]| -> f64 { x.iter().zip(b).map(|(a, w)| w * a * a).sum() };
    let mut hi = (0..m).map(|i| q.diag(i) / b[i]).fold(f64::INFINITY, f64::min);
    let mut lo = lower - 1e-12 * lower.abs().max(hi.abs()) - f64::MIN_POSITIVE;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * lo.abs().max(hi.abs()) {
            break;
        }
        if q.shifted(mid, b).ldlt().negative_count() > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Just below the eigenvalue the shifted matrix is positive definite.
    let sigma = lo - 1e-9 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let f = q.shifted(sigma, b).ldlt();
    let mut x: Vec<f64> = seed.map_or_else(|| vec![1.0; m], |s| s.to_vec());
    for _ in 0..8 {
        let bx: Vec<f64> = x.iter().zip(b).map(|(a, w)| a * w).collect();
        let y = f.solve(&bx);
        let norm = mass(&y).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        x = y.into_iter().map(|v| v / norm).collect();
    }
    let big = x.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    if big < 0.0 {
        for xi in &mut x {
            *xi = -*xi;
        }
    }
    let rq = quad(&x) / mass(&x);
    let slack = 1e-8 * lo.abs().max(hi.abs());
    let lambda = if rq.is_finite() && rq >= lo - slack && rq <= hi + slack {
        rq
    } else {
        0.5 * (lo + hi)
    };
    (lambda, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SymBand {
        let mut a = SymBand::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn solve_and_inertia() {
        let n = 50;
        let a = laplacian_1d(n);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul(&x);
        let f = a.ldlt();
        let y = f.solve(&b);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi).abs() < 1e-10);
        }
        assert_eq!(f.negative_count(), 0);
        // eigenvalues 2 − 2cos(kπ/(n+1))
        let ones = vec![1.0; n];
        for mu in [0.3, 0.9, 1.7] {
            let below = a.shifted(mu, &ones).ldlt().negative_count();
            let expected = (1..=n)
                .filter(|k| 2.0 - 2.0 * (*k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < mu)
                .count();
            assert_eq!(below, expected, "shift {mu}");
        }
        // a shift landing exactly on an eigenvalue still factors to finite pivots
        let f = a.shifted(1.0, &ones).ldlt();
        assert!(f.d.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn pentadiagonal_matches_dense_product() {
        let n = 12;
        let mut a = SymBand::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 6.0 + i as f64);
            if i >= 1 {
                a.add(i, i - 1, -1.5);
            }
            if i >= 2 {
                a.add(i, i - 2, 0.7);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let y = a.mul(&x);
        for i in 0..n {
            let dense: f64 = (0..n).map(|j| a.get(i, j) * x[j]).sum();
            assert!((dense - y[i]).abs() < 1e-12);
        }
        let z = a.ldlt().solve(&y);
        for (xi, zi) in x.iter().zip(&z) {
            assert!((xi - zi).abs() < 1e-10);
        }
    }
}
