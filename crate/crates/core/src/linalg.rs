//! Dense complex matrices over an enumerated basis.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{BasisState, Registry, StateVector};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Ordered list of basis states with a reverse index.
#[derive(Clone, Debug)]
pub struct DenseBasis {
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl DenseBasis {
    pub fn new(states: Vec<BasisState>) -> Self {
        let index = states
            .iter()
            .enumerate()
            .map(|(i, b)| (b.clone(), i))
            .collect();
        Self { states, index }
    }

    pub fn full(reg: &Registry, cap: usize) -> Result<Self> {
        Ok(Self::new(reg.enumerate_basis(cap)?))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, b: &BasisState) -> Option<usize> {
        self.index.get(b).copied()
    }

    pub fn to_vector(&self, s: &StateVector) -> Result<DVector<Complex64>> {
        let mut v = DVector::from_element(self.len(), ZERO);
        for (b, a) in s.iter() {
            let i = self
                .index_of(b)
                .ok_or_else(|| Error::Index("state has support outside the basis".into()))?;
            v[i] = *a;
        }
        Ok(v)
    }

    /// Exact zeros are omitted from the sparse result.
    pub fn from_vector(&self, v: &DVector<Complex64>) -> StateVector {
        StateVector::from_amplitudes(
            v.iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(i, a)| (self.states[i].clone(), *a)),
        )
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `max |M - M†|` entrywise.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm of `U†U - I`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Spectral decomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix, tol: f64) -> Result<Self> {
        let defect = hermitian_defect(h);
        if defect > tol {
            return Err(Error::Model(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        let eig = h.clone().symmetric_eigen();
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let phase = Complex64::from_polar(1.0, -self.values[j] * t);
            for i in 0..n {
                scaled[(i, j)] *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(A)` by Padé scaling-and-squaring (nalgebra's implementation).
pub fn expm_pade(a: &CMatrix) -> CMatrix {
    a.clone().exp()
}

/// `diag(d) * M`.
pub fn scale_rows(d: &[Complex64], m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for (i, f) in d.iter().enumerate() {
        for j in 0..m.ncols() {
            out[(i, j)] *= f;
        }
    }
    out
}

/// `M * diag(d)`.
pub fn scale_cols(m: &CMatrix, d: &[Complex64]) -> CMatrix {
    let mut out = m.clone();
    for (j, f) in d.iter().enumerate() {
        for i in 0..m.nrows() {
            out[(i, j)] *= f;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_hermitian() -> CMatrix {
        CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.3, 0.2),
                c(0.0, -0.5),
                c(0.3, -0.2),
                c(-0.4, 0.0),
                c(0.7, 0.1),
                c(0.0, 0.5),
                c(0.7, -0.1),
                c(2.0, 0.0),
            ],
        )
    }

    #[test]
    fn eigen_propagator_matches_pade() {
        let h = sample_hermitian();
        let eig = HermitianEigen::new(&h, 1e-12).unwrap();
        for t in [0.0, 0.37, 2.5, -4.0] {
            let u = eig.propagator(t);
            let pade = expm_pade(&(h.clone() * c(0.0, -t)));
            assert!(frobenius(&(u.clone() - pade)) < 1e-12, "t={t}");
            assert!(unitarity_defect(&u) < 1e-13);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = sample_hermitian();
        h[(0, 1)] = c(5.0, 0.0);
        assert!(matches!(HermitianEigen::new(&h, 1e-12), Err(Error::Model(_))));
    }

    #[test]
    fn kron_shapes_and_entries() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let b = identity(3);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(4, 1)], c(3.0, 0.0));
        assert_eq!(k[(4, 2)], c(0.0, 0.0));
    }
}
