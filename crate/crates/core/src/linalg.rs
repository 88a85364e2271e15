//! Small complex linear-algebra toolkit shared by the rest of the crate.
//!
//! Every quadratic-form matrix in the precoder design is block diagonal in the
//! stacked precoder: one block per stream (satellite) or per terrestrial user
//! (BS). [`BlockDiag`] stores only the diagonal blocks, which keeps memory
//! linear in the number of streams and makes `B⁻¹A` a per-block solve.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Draws one sample of CN(0, `variance`).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Vector of i.i.d. CN(0, `variance`) entries.
pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVec {
    CVec::from_fn(len, |_, _| complex_normal(rng, variance))
}

/// `x xᴴ`
pub fn outer(x: &CVec) -> CMat {
    x * x.adjoint()
}

/// `Re(xᴴ A x)`; the imaginary part vanishes for Hermitian `A`.
pub fn quad(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

/// Replaces `a` by `(a + aᴴ)/2`.
pub fn hermitize(a: &mut CMat) {
    let h = a.adjoint();
    *a += h;
    *a *= C64::new(0.5, 0.0);
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && (a - a.adjoint()).camax() <= tol * a.camax().max(1.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let mut h = a.clone();
    hermitize(&mut h);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Unit-norm eigenvector of the largest eigenvalue of a Hermitian matrix,
/// with the phase fixed so that its largest-magnitude entry is real positive.
pub fn principal_eigvec(a: &CMat) -> CVec {
    let (_, vecs) = hermitian_eigen(a);
    let mut v = vecs.column(0).into_owned();
    fix_phase(&mut v);
    v
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    let (vals, _) = hermitian_eigen(a);
    vals.last().copied().unwrap_or(0.0)
}

/// Rotates `v` so that its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut CVec) {
    if let Some((idx, _)) = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())) {
        let p = v[idx];
        if p.norm() > 0.0 {
            let rot = p.conj() / p.norm();
            v.iter_mut().for_each(|x| *x *= rot);
        }
    }
}

/// Multiplies `next` by the unit phasor that maximises `Re⟨next, prev⟩`.
pub fn align_phase(next: &mut CVec, prev: &CVec) {
    let c = next.dotc(prev);
    if c.norm() > 0.0 {
        let rot = c / c.norm();
        next.iter_mut().for_each(|x| *x *= rot);
    }
}

/// Returns `x / ‖x‖`, or `None` when `x` is (numerically) zero.
pub fn normalized(x: &CVec) -> Option<CVec> {
    let n = x.norm();
    (n > f64::MIN_POSITIVE && n.is_finite()).then(|| x.unscale(n))
}

/// Solves `A x = b` for Hermitian positive (semi)definite `A`.
///
/// Falls back to a small diagonal ridge when the Cholesky factorisation fails,
/// which only happens for numerically singular matrices.
pub fn hpd_solve(a: &CMat, b: &CVec) -> CVec {
    let mut h = a.clone();
    hermitize(&mut h);
    if let Some(chol) = Cholesky::new(h.clone()) {
        return chol.solve(b);
    }
    let n = h.nrows().max(1) as f64;
    let scale = (h.trace().re.abs() / n).max(f64::MIN_POSITIVE);
    let mut ridge = 1e-12 * scale;
    loop {
        let mut r = h.clone();
        for i in 0..r.nrows() {
            r[(i, i)] += C64::new(ridge, 0.0);
        }
        if let Some(chol) = Cholesky::new(r) {
            return chol.solve(b);
        }
        ridge *= 100.0;
    }
}

/// Hermitian positive-definite inverse via Cholesky.
pub fn hpd_inverse(a: &CMat) -> Option<CMat> {
    let mut h = a.clone();
    hermitize(&mut h);
    Cholesky::new(h).map(|c| c.inverse())
}

/// `A + c·I`
pub fn add_identity(a: &CMat, c: f64) -> CMat {
    let mut out = a.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += C64::new(c, 0.0);
    }
    out
}

/// `Re⟨a, b⟩ / (‖a‖‖b‖)`
pub fn real_cosine(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).re / (a.norm() * b.norm())
}

/// Compensated (Neumaier) summation; the result depends only on the order of
/// the inputs.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Block-diagonal Hermitian matrix made of equally sized square blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiag {
    blocks: Vec<CMat>,
    block_dim: usize,
}

impl BlockDiag {
    pub fn zeros(n_blocks: usize, block_dim: usize) -> Self {
        Self {
            blocks: vec![CMat::zeros(block_dim, block_dim); n_blocks],
            block_dim,
        }
    }

    /// `Blkd[mask] ⊗ x`: `x` on every block whose mask entry is set.
    pub fn masked(mask: &[bool], x: &CMat) -> Self {
        let d = x.nrows();
        Self {
            blocks: mask
                .iter()
                .map(|&on| if on { x.clone() } else { CMat::zeros(d, d) })
                .collect(),
            block_dim: d,
        }
    }

    /// `I ⊗ x`
    pub fn repeated(n_blocks: usize, x: &CMat) -> Self {
        Self::masked(&vec![true; n_blocks], x)
    }

    /// `e_i e_iᴴ ⊗ x`
    pub fn single(n_blocks: usize, index: usize, x: &CMat) -> Self {
        let mask: Vec<bool> = (0..n_blocks).map(|b| b == index).collect();
        Self::masked(&mask, x)
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn dim(&self) -> usize {
        self.blocks.len() * self.block_dim
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn quad(&self, x: &CVec) -> f64 {
        let d = self.block_dim;
        self.blocks
            .iter()
            .enumerate()
            .map(|(b, m)| {
                let xb = x.rows(b * d, d);
                xb.dotc(&(m * xb)).re
            })
            .sum()
    }

    pub fn mul_vec(&self, x: &CVec) -> CVec {
        let d = self.block_dim;
        let mut out = CVec::zeros(self.dim());
        for (b, m) in self.blocks.iter().enumerate() {
            let xb = x.rows(b * d, d);
            out.rows_mut(b * d, d).copy_from(&(m * xb));
        }
        out
    }

    /// `self += c · other`
    pub fn axpy(&mut self, c: f64, other: &BlockDiag) {
        debug_assert_eq!(self.blocks.len(), other.blocks.len());
        let c = C64::new(c, 0.0);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * c;
        }
    }

    /// `self += c · I`
    pub fn add_identity(&mut self, c: f64) {
        for m in &mut self.blocks {
            for i in 0..m.nrows() {
                m[(i, i)] += C64::new(c, 0.0);
            }
        }
    }

    /// `self += c · Blkd[mask] ⊗ I`
    pub fn add_masked_identity(&mut self, mask: &[bool], c: f64) {
        for (m, &on) in self.blocks.iter_mut().zip(mask) {
            if on {
                for i in 0..m.nrows() {
                    m[(i, i)] += C64::new(c, 0.0);
                }
            }
        }
    }

    pub fn sub(&self, other: &BlockDiag) -> BlockDiag {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &BlockDiag) -> BlockDiag {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|m| m.trace().re).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|m| m.iter().all(|z| *z == ZERO))
    }

    pub fn is_finite(&self) -> bool {
        self.blocks
            .iter()
            .all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn hermitize(&mut self) {
        self.blocks.iter_mut().for_each(hermitize);
    }

    pub fn to_dense(&self) -> CMat {
        let d = self.block_dim;
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (b, m) in self.blocks.iter().enumerate() {
            out.view_mut((b * d, b * d), (d, d)).copy_from(m);
        }
        out
    }

    /// Solves `self · x = rhs` block by block.
    pub fn solve(&self, rhs: &CVec) -> CVec {
        let d = self.block_dim;
        let mut out = CVec::zeros(self.dim());
        for (b, m) in self.blocks.iter().enumerate() {
            let rb = rhs.rows(b * d, d).into_owned();
            out.rows_mut(b * d, d).copy_from(&hpd_solve(m, &rb));
        }
        out
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min)
    }
}
