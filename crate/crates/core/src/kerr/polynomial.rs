//! Sparse multivariate polynomials keyed by exponent vectors.

use std::collections::BTreeMap;

/// `terms[exponents] = coefficient`; exponents has one entry per variable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub n_vars: usize,
    pub terms: BTreeMap<Vec<u8>, f64>,
}

impl Polynomial {
    pub fn new(n_vars: usize) -> Self {
        Polynomial { n_vars, terms: BTreeMap::new() }
    }

    pub fn add(&mut self, exponents: Vec<u8>, value: f64) {
        debug_assert_eq!(exponents.len(), self.n_vars);
        *self.terms.entry(exponents).or_insert(0.0) += value;
    }

    pub fn coefficient(&self, exponents: &[u8]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>()).sum()
    }

    /// Terms of total degree `k`.
    pub fn degree(&self, k: usize) -> impl Iterator<Item = (&Vec<u8>, &f64)> {
        self.terms.iter().filter(move |(e, _)| e.iter().map(|&x| x as usize).sum::<usize>() == k)
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }
}

/// All exponent vectors of `n` variables summing to `k`.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<u8>> {
    fn rec(n: usize, k: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == n {
            prefix.push(k as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=k).rev() {
            prefix.push(first as u8);
            rec(n, k - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, k, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Adds `scale * (sum_mu d_mu x_mu)^k` to `poly`.
pub fn add_linear_power(poly: &mut Polynomial, d: &[f64], k: usize, scale: f64) {
    let kf = factorial(k);
    for e in compositions(d.len(), k) {
        let mut c = scale * kf;
        for (&p, &dm) in e.iter().zip(d) {
            c *= dm.powi(p as i32) / factorial(p as usize);
        }
        if c != 0.0 {
            poly.add(e, c);
        }
    }
}

/// Coefficient of `(a^dag)^j a^j` in the normal-ordered `(a + a^dag)^(2m)`.
pub fn normal_order_coefficient(m: usize, j: usize) -> f64 {
    let k = m - j;
    factorial(2 * m) / (factorial(j) * factorial(j) * factorial(k) * 2f64.powi(k as i32))
}

/// Diagonal `<n|(a + a^dag)^(2m)|n>` as a polynomial in `n`, lowest power
/// first, via normal ordering and falling factorials.
pub fn diagonal_moment(m: usize) -> Vec<f64> {
    // Signed Stirling numbers of the first kind: n(n-1)...(n-j+1) = sum_i s[j][i] n^i.
    let mut stirling = vec![vec![1.0]];
    for j in 0..m {
        let prev = &stirling[j];
        let mut next = vec![0.0; j + 2];
        for (i, &s) in prev.iter().enumerate() {
            next[i + 1] += s;
            next[i] -= j as f64 * s;
        }
        stirling.push(next);
    }
    let mut out = vec![0.0; m + 1];
    for (j, falling) in stirling.iter().enumerate() {
        let c = normal_order_coefficient(m, j);
        for (i, &s) in falling.iter().enumerate() {
            out[i] += c * s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_and_sixth_moments() {
        assert_eq!(diagonal_moment(2), vec![3.0, 6.0, 6.0]);
        assert_eq!(diagonal_moment(3), vec![15.0, 40.0, 30.0, 20.0]);
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 4).len(), 15);
        assert!(compositions(3, 4).iter().all(|e| e.iter().map(|&x| x as usize).sum::<usize>() == 4));
    }

    #[test]
    fn linear_power_matches_direct_evaluation() {
        let d = [0.3, -1.2, 0.7];
        let mut p = Polynomial::new(3);
        add_linear_power(&mut p, &d, 5, 2.0);
        let x = [0.4, 0.1, -0.9];
        let s: f64 = d.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((p.evaluate(&x) - 2.0 * s.powi(5)).abs() < 1e-12);
    }
}
