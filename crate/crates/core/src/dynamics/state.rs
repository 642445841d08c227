use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::atomic::{CompositeLevel, CoreTerm};
use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Ordered, duplicate-free list of composite levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    levels: Vec<CompositeLevel>,
}

impl Basis {
    pub fn new(levels: impl IntoIterator<Item = CompositeLevel>) -> Self {
        let set: BTreeSet<CompositeLevel> = levels.into_iter().collect();
        Self { levels: set.into_iter().collect() }
    }

    /// Every 5s, 5p and 4d sublevel of each listed circular manifold.
    pub fn manifolds(ns: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut levels = Vec::new();
        for n in ns {
            for term in CoreTerm::ALL {
                for two_mj in term.two_mj_values() {
                    levels.push(CompositeLevel::new(n, term, two_mj)?);
                }
            }
        }
        Ok(Self::new(levels))
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[CompositeLevel] {
        &self.levels
    }

    pub fn index_of(&self, level: &CompositeLevel) -> Option<usize> {
        self.levels.binary_search(level).ok()
    }

    pub fn contains(&self, level: &CompositeLevel) -> bool {
        self.index_of(level).is_some()
    }

    pub fn ns(&self) -> BTreeSet<u32> {
        self.levels.iter().map(|l| l.n()).collect()
    }

    pub fn indices_where<F>(&self, pred: F) -> Vec<usize>
    where
        F: Fn(&CompositeLevel) -> bool,
    {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| pred(l))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Density matrix over an explicit basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    basis: Basis,
    rho: DMatrix<C64>,
}

impl QuantumState {
    pub fn from_matrix(basis: Basis, rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != basis.len() || rho.ncols() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "matrix is {}x{}, basis has {} levels",
                rho.nrows(),
                rho.ncols(),
                basis.len()
            )));
        }
        let state = Self { basis, rho };
        state.validate()?;
        Ok(state)
    }

    pub fn pure(basis: Basis, level: &CompositeLevel) -> Result<Self> {
        Self::mixture(basis, &[(*level, 1.0)])
    }

    /// Incoherent mixture; weights are normalized.
    pub fn mixture(basis: Basis, weights: &[(CompositeLevel, f64)]) -> Result<Self> {
        let total: f64 = weights.iter().map(|(_, w)| *w).sum();
        if !(total > 0.0) || weights.iter().any(|(_, w)| *w < 0.0) {
            return Err(Error::InvalidState("mixture weights must be >= 0 with positive sum".into()));
        }
        let d = basis.len();
        let mut rho = DMatrix::zeros(d, d);
        for (level, w) in weights {
            let i = basis
                .index_of(level)
                .ok_or_else(|| Error::BasisMismatch(format!("{level} not in basis")))?;
            rho[(i, i)] += C64::new(w / total, 0.0);
        }
        Ok(Self { basis, rho })
    }

    pub(crate) fn from_parts_unchecked(basis: Basis, rho: DMatrix<C64>) -> Self {
        Self { basis, rho }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn rho(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn into_rho(self) -> DMatrix<C64> {
        self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn population(&self, level: &CompositeLevel) -> f64 {
        self.basis.index_of(level).map(|i| self.rho[(i, i)].re).unwrap_or(0.0)
    }

    pub fn population_where<F>(&self, pred: F) -> f64
    where
        F: Fn(&CompositeLevel) -> bool,
    {
        self.basis
            .levels()
            .iter()
            .enumerate()
            .filter(|(_, l)| pred(l))
            .map(|(i, _)| self.rho[(i, i)].re)
            .sum()
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        let d = self.rho.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Check unit trace, Hermiticity and positivity.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let herm = self.max_hermitian_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("hermiticity defect {herm:e}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    /// Replace ρ by its Hermitian part.
    pub(crate) fn hermitize(&mut self) {
        let adj = self.rho.adjoint();
        self.rho = (&self.rho + adj) * C64::new(0.5, 0.0);
    }

    /// Embed into a larger basis that contains every current level.
    pub fn embed(&self, target: &Basis) -> Result<QuantumState> {
        let map: Vec<usize> = self
            .basis
            .levels()
            .iter()
            .map(|l| {
                target
                    .index_of(l)
                    .ok_or_else(|| Error::BasisMismatch(format!("{l} missing from target basis")))
            })
            .collect::<Result<_>>()?;
        let d = target.len();
        let mut rho = DMatrix::zeros(d, d);
        for (a, &ia) in map.iter().enumerate() {
            for (b, &ib) in map.iter().enumerate() {
                rho[(ia, ib)] = self.rho[(a, b)];
            }
        }
        Ok(QuantumState { basis: target.clone(), rho })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifold_basis_layout() {
        let b = Basis::manifolds([51, 49]).unwrap();
        assert_eq!(b.len(), 16);
        assert_eq!(b.ns().into_iter().collect::<Vec<_>>(), vec![49, 51]);
        let lvl = CompositeLevel::new(51, CoreTerm::D32, -3).unwrap();
        assert!(b.contains(&lvl));
        let idx = b.index_of(&lvl).unwrap();
        assert_eq!(b.levels()[idx], lvl);
    }

    #[test]
    fn mixture_is_valid() {
        let b = Basis::manifolds([51]).unwrap();
        let s = QuantumState::mixture(
            b.clone(),
            &[
                (CompositeLevel::new(51, CoreTerm::S12, 1).unwrap(), 1.0),
                (CompositeLevel::new(51, CoreTerm::S12, -1).unwrap(), 1.0),
            ],
        )
        .unwrap();
        s.validate().unwrap();
        assert!((s.population_where(|l| l.core.term == CoreTerm::S12) - 1.0).abs() < 1e-15);
        let bad = DMatrix::from_diagonal_element(b.len(), b.len(), C64::new(1.0, 0.0));
        assert!(QuantumState::from_matrix(b, bad).is_err());
    }

    #[test]
    fn embed_preserves_populations() {
        let small = Basis::manifolds([51]).unwrap();
        let big = Basis::manifolds([49, 50, 51]).unwrap();
        let lvl = CompositeLevel::new(51, CoreTerm::D32, 1).unwrap();
        let s = QuantumState::pure(small, &lvl).unwrap().embed(&big).unwrap();
        assert_eq!(s.population(&lvl), 1.0);
        assert!(QuantumState::pure(big.clone(), &lvl).unwrap().embed(&Basis::manifolds([51]).unwrap()).is_err());
    }
}
