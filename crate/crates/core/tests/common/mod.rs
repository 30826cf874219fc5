//! Brute-force reference for record probabilities.
//!
//! Deliberately shares nothing with the library's numerics: its own dense
//! row-major matrices, spin operators rebuilt from the ladder formula, a
//! Taylor-series matrix exponential with scaling and squaring, and every
//! history probability computed from an explicit product of the whole
//! operator string.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub data: Vec<C64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.n + c] = v;
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                for c in 0..n {
                    out.data[r * n + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Dense {
        Dense {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Dense) -> Dense {
        Dense {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|c| (0..self.n).map(|r| self.get(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `exp(a)` by Taylor series after scaling `a` below norm 1/2, then
/// repeated squaring.
pub fn expm_series(a: &Dense) -> Dense {
    let mut squarings = 0;
    let mut norm = a.norm1();
    while norm > 0.5 {
        norm /= 2.0;
        squarings += 1;
    }
    let scaled = a.scale(C64::new(0.5f64.powi(squarings), 0.0));
    let mut result = Dense::identity(a.n);
    let mut term = Dense::identity(a.n);
    for k in 1..40 {
        term = term.mul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        result = result.add(&term);
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// `(J_x, J_y, J_z)` for spin `twice_j / 2`, basis `m = j, j-1, ..., -j`.
pub fn spin_ops(twice_j: usize) -> (Dense, Dense, Dense) {
    let n = twice_j + 1;
    let j = twice_j as f64 / 2.0;
    let m = |k: usize| j - k as f64;
    let mut jx = Dense::zeros(n);
    let mut jy = Dense::zeros(n);
    let mut jz = Dense::zeros(n);
    for k in 0..n {
        jz.set(k, k, C64::new(m(k), 0.0));
    }
    for k in 1..n {
        // <m+1| J+ |m> with m = m(k), target row k - 1
        let up = (j * (j + 1.0) - m(k) * (m(k) + 1.0)).sqrt();
        jx.set(k - 1, k, C64::new(up / 2.0, 0.0));
        jx.set(k, k - 1, C64::new(up / 2.0, 0.0));
        jy.set(k - 1, k, C64::new(0.0, -up / 2.0));
        jy.set(k, k - 1, C64::new(0.0, up / 2.0));
    }
    (jx, jy, jz)
}

pub struct OracleTop {
    pub n: usize,
    pub u: Dense,
    pub projectors: [Dense; 2],
    jx: Dense,
    jy: Dense,
}

impl OracleTop {
    /// Kick strength `k`, rotation angle `p`. `projectors[1]` is `P+`.
    pub fn new(twice_j: usize, k: f64, p: f64) -> Self {
        let (jx, jy, jz) = spin_ops(twice_j);
        let j = twice_j as f64 / 2.0;
        let jz2 = jz.mul(&jz);
        let kick = expm_series(&jz2.scale(C64::new(0.0, -k / (2.0 * j))));
        let rotation = expm_series(&jy.scale(C64::new(0.0, -p)));
        let u = kick.mul(&rotation);
        let n = twice_j + 1;
        let mut plus = Dense::zeros(n);
        let mut minus = Dense::zeros(n);
        for idx in 0..n {
            if j - idx as f64 >= 0.0 {
                plus.set(idx, idx, C64::new(1.0, 0.0));
            } else {
                minus.set(idx, idx, C64::new(1.0, 0.0));
            }
        }
        Self {
            n,
            u,
            projectors: [minus, plus],
            jx,
            jy,
        }
    }

    pub fn coherent(&self, theta: f64, phi: f64) -> Vec<C64> {
        let g = self
            .jx
            .scale(C64::new(phi.cos(), 0.0))
            .add(&self.jy.scale(C64::new(-phi.sin(), 0.0)));
        let rot = expm_series(&g.scale(C64::new(0.0, theta)));
        (0..self.n).map(|r| rot.get(r, 0)).collect()
    }

    /// Probability of the history whose bits are `key` (first measurement in
    /// the most significant of `len` bits, 1 = `+`), from the product
    /// `P_{Z_len} U ... P_{Z_1} U`.
    pub fn probability(&self, psi: &[C64], key: u64, len: usize) -> f64 {
        let mut string = Dense::identity(self.n);
        for i in 0..len {
            let bit = ((key >> (len - 1 - i)) & 1) as usize;
            string = self.projectors[bit].mul(&self.u).mul(&string);
        }
        string.apply(psi).iter().map(|z| z.norm_sqr()).sum()
    }

    /// All `2^len` probabilities, indexed by key.
    pub fn enumerate(&self, psi: &[C64], len: usize) -> Vec<f64> {
        (0..1u64 << len).map(|key| self.probability(psi, key, len)).collect()
    }
}
