//! Dense linear algebra over MPFR complex numbers, sized for a few dozen modes.

use rug::Float;

use crate::error::{Error, Result};
use crate::precision::MpComplex;

#[derive(Debug, Clone)]
pub struct MpMatrix {
    n: usize,
    data: Vec<MpComplex>,
}

impl MpMatrix {
    pub fn zeros(n: usize, prec: u32) -> Self {
        Self {
            n,
            data: vec![MpComplex::zero(prec); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> MpComplex) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &MpComplex {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: MpComplex) {
        self.data[i * self.n + j] = v;
    }

    pub fn prec(&self) -> u32 {
        self.data.first().map(|z| z.prec()).unwrap_or(64)
    }

    pub fn mul_vec(&self, x: &[MpComplex]) -> Vec<MpComplex> {
        (0..self.n)
            .map(|i| {
                let mut acc = MpComplex::zero(self.prec());
                for (j, xj) in x.iter().enumerate() {
                    acc = acc.add(&self.get(i, j).mul(xj));
                }
                acc
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs().to_f64()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix with row/column `skip` removed.
    pub fn minor(&self, skip: usize) -> MpMatrix {
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != skip).collect();
        MpMatrix::from_fn(keep.len(), |i, j| self.get(keep[i], keep[j]).clone())
    }
}

/// P A P^T = L D L^H with diagonal pivoting, for Hermitian positive definite A.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    perm: Vec<usize>,
    l: MpMatrix,
    d: Vec<Float>,
}

impl LdlFactor {
    pub fn new(a: &MpMatrix) -> Result<Self> {
        let n = a.dim();
        let prec = a.prec();
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut l = MpMatrix::zeros(n, prec);
        let mut d = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if w.get(i, i).re > w.get(p, p).re {
                    p = i;
                }
            }
            if p != k {
                swap_sym(&mut w, k, p);
                perm.swap(k, p);
                for j in 0..k {
                    let t = l.get(k, j).clone();
                    l.set(k, j, l.get(p, j).clone());
                    l.set(p, j, t);
                }
            }
            let dk = w.get(k, k).re.clone();
            if dk <= 0 {
                return Err(Error::PrecisionInsufficient {
                    condition: f64::INFINITY,
                    digits: bits_to_digits(prec),
                });
            }
            l.set(k, k, MpComplex::real(Float::with_val(prec, 1)));
            for i in k + 1..n {
                l.set(i, k, w.get(i, k).div_real(&dk));
            }
            for i in k + 1..n {
                let lik_d = l.get(i, k).scale(&dk);
                for j in k + 1..n {
                    let upd = lik_d.mul(&l.get(j, k).conj());
                    let v = w.get(i, j).sub(&upd);
                    w.set(i, j, v);
                }
            }
            d.push(dk);
        }
        Ok(Self { perm, l, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn solve(&self, b: &[MpComplex]) -> Vec<MpComplex> {
        let n = self.dim();
        let mut y: Vec<MpComplex> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.l.get(i, j).mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
        }
        for i in 0..n {
            y[i] = y[i].div_real(&self.d[i]);
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.l.get(j, i).conj().mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
        }
        let mut x = vec![MpComplex::zero(y[0].prec()); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i].clone();
        }
        x
    }

    pub fn inverse(&self) -> MpMatrix {
        let n = self.dim();
        let prec = self.d[0].prec();
        let mut inv = MpMatrix::zeros(n, prec);
        for j in 0..n {
            let mut e = vec![MpComplex::zero(prec); n];
            e[j] = MpComplex::real(Float::with_val(prec, 1));
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }

    /// Smallest and largest pivot.
    pub fn pivot_range(&self) -> (f64, f64) {
        let lo = self.d.iter().map(|x| x.to_f64()).fold(f64::INFINITY, f64::min);
        let hi = self.d.iter().map(|x| x.to_f64()).fold(0.0, f64::max);
        (lo, hi)
    }
}

fn swap_sym(w: &mut MpMatrix, a: usize, b: usize) {
    let n = w.dim();
    for j in 0..n {
        let t = w.get(a, j).clone();
        w.set(a, j, w.get(b, j).clone());
        w.set(b, j, t);
    }
    for i in 0..n {
        let t = w.get(i, a).clone();
        w.set(i, a, w.get(i, b).clone());
        w.set(i, b, t);
    }
}

pub(crate) fn bits_to_digits(bits: u32) -> u32 {
    ((bits.saturating_sub(8)) as f64 / std::f64::consts::LOG2_10).floor() as u32
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &MpMatrix, b: &[MpComplex]) -> Result<Vec<MpComplex>> {
    let n = a.dim();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let mut p = k;
        let mut best = m.get(k, k).norm_sqr();
        for i in k + 1..n {
            let v = m.get(i, k).norm_sqr();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best.is_zero() {
            return Err(Error::PrecisionInsufficient {
                condition: f64::INFINITY,
                digits: bits_to_digits(a.prec()),
            });
        }
        if p != k {
            for j in 0..n {
                let t = m.get(k, j).clone();
                m.set(k, j, m.get(p, j).clone());
                m.set(p, j, t);
            }
            rhs.swap(k, p);
        }
        let piv = m.get(k, k).clone();
        for i in k + 1..n {
            let f = m.get(i, k).div(&piv);
            for j in k..n {
                let v = m.get(i, j).sub(&f.mul(m.get(k, j)));
                m.set(i, j, v);
            }
            let v = rhs[i].sub(&f.mul(&rhs[k]));
            rhs[i] = v;
        }
    }
    let mut x = vec![MpComplex::zero(a.prec()); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i].clone();
        for j in i + 1..n {
            acc = acc.sub(&m.get(i, j).mul(&x[j]));
        }
        x[i] = acc.div(m.get(i, i));
    }
    Ok(x)
}

/// Largest eigenpair of a Hermitian matrix via cyclic Jacobi on its real
/// symmetric embedding [[A, -B], [B, A]].
pub fn hermitian_max_eig(h: &MpMatrix) -> (Float, Vec<MpComplex>) {
    let n = h.dim();
    let prec = h.prec();
    let m = 2 * n;
    let mut a: Vec<Float> = vec![Float::new(prec); m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            a[i * m + j] = z.re.clone();
            a[(i + n) * m + j + n] = z.re.clone();
            a[i * m + j + n] = -z.im.clone();
            a[(i + n) * m + j] = z.im.clone();
        }
    }
    let mut v: Vec<Float> = vec![Float::new(prec); m * m];
    for i in 0..m {
        v[i * m + i] = Float::with_val(prec, 1);
    }
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 4));
    for _sweep in 0..60 {
        let mut off = Float::new(prec);
        let mut total = Float::new(prec);
        for i in 0..m {
            for j in 0..m {
                let sq = Float::with_val(prec, a[i * m + j].square_ref());
                if i != j {
                    off += &sq;
                }
                total += sq;
            }
        }
        if off <= Float::with_val(prec, &eps * &eps) * total {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q].clone();
                if apq.is_zero() {
                    continue;
                }
                let two_apq = Float::with_val(prec, &apq * 2u32);
                let theta = Float::with_val(prec, &a[q * m + q] - &a[p * m + p]) / two_apq;
                let root = (Float::with_val(prec, theta.square_ref()) + 1u32).sqrt();
                let mut t = Float::with_val(prec, theta.abs_ref()) + root;
                t.recip_mut();
                if theta.is_sign_negative() {
                    t = -t;
                }
                let c = (Float::with_val(prec, t.square_ref()) + 1u32).sqrt().recip();
                let s = Float::with_val(prec, &t * &c);
                for k in 0..m {
                    let akp = a[k * m + p].clone();
                    let akq = a[k * m + q].clone();
                    a[k * m + p] = Float::with_val(prec, &c * &akp) - Float::with_val(prec, &s * &akq);
                    a[k * m + q] = Float::with_val(prec, &s * &akp) + Float::with_val(prec, &c * &akq);
                }
                for k in 0..m {
                    let apk = a[p * m + k].clone();
                    let aqk = a[q * m + k].clone();
                    a[p * m + k] = Float::with_val(prec, &c * &apk) - Float::with_val(prec, &s * &aqk);
                    a[q * m + k] = Float::with_val(prec, &s * &apk) + Float::with_val(prec, &c * &aqk);
                }
                for k in 0..m {
                    let vkp = v[k * m + p].clone();
                    let vkq = v[k * m + q].clone();
                    v[k * m + p] = Float::with_val(prec, &c * &vkp) - Float::with_val(prec, &s * &vkq);
                    v[k * m + q] = Float::with_val(prec, &s * &vkp) + Float::with_val(prec, &c * &vkq);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..m {
        if a[i * m + i] > a[best * m + best] {
            best = i;
        }
    }
    let lam = a[best * m + best].clone();
    let mut vec: Vec<MpComplex> = (0..n)
        .map(|i| MpComplex {
            re: v[i * m + best].clone(),
            im: v[(i + n) * m + best].clone(),
        })
        .collect();
    let mut nrm = Float::new(prec);
    for z in &vec {
        nrm += z.norm_sqr();
    }
    let nrm = nrm.sqrt();
    for z in vec.iter_mut() {
        *z = z.div_real(&nrm);
    }
    (lam, vec)
}
