use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::state::{Basis, QuantumState, TRACE_TOL};
use crate::error::{Error, Result};

pub const UNITARITY_TOL: f64 = 1e-10;

/// One block of a block-structured superoperator: acts on the submatrix
/// ρ[rows, cols], vectorized column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub map: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagatorKind {
    Unitary(DMatrix<C64>),
    /// ρ → P ∘ M(Q ∘ ρ) with diagonal phase frames P, Q and a block map M.
    Channel {
        pre_phase: Vec<C64>,
        blocks: Vec<SuperBlock>,
        post_phase: Vec<C64>,
    },
    /// Population transfer matrix; coherences are discarded.
    Incoherent(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub basis: Basis,
    pub kind: PropagatorKind,
}

impl Propagator {
    pub fn identity(basis: Basis) -> Self {
        let d = basis.len();
        Self { basis, kind: PropagatorKind::Unitary(DMatrix::identity(d, d)) }
    }

    pub fn unitary(basis: Basis, u: DMatrix<C64>) -> Self {
        Self { basis, kind: PropagatorKind::Unitary(u) }
    }

    /// diag(e^{-iφ_k}).
    pub fn diagonal_phases(basis: Basis, phases: &[f64]) -> Self {
        let u = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            phases.len(),
            phases.iter().map(|p| C64::from_polar(1.0, -p)),
        ));
        Self::unitary(basis, u)
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self.kind, PropagatorKind::Unitary(_))
    }

    pub fn unitary_matrix(&self) -> Option<&DMatrix<C64>> {
        match &self.kind {
            PropagatorKind::Unitary(u) => Some(u),
            _ => None,
        }
    }

    /// ‖U†U − 1‖_max, or `None` for non-unitary maps.
    pub fn unitarity_defect(&self) -> Option<f64> {
        self.unitary_matrix().map(|u| {
            let d = u.nrows();
            (u.adjoint() * u - DMatrix::<C64>::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
    }

    /// Apply without re-validating the output state.
    pub fn apply_unchecked(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.basis() != &self.basis {
            return Err(Error::BasisMismatch(format!(
                "propagator has {} levels, state has {}",
                self.basis.len(),
                state.basis().len()
            )));
        }
        let rho = state.rho();
        let out = match &self.kind {
            PropagatorKind::Unitary(u) => u * rho * u.adjoint(),
            PropagatorKind::Channel { pre_phase, blocks, post_phase } => {
                let framed = phase_frame(rho, pre_phase);
                let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
                for b in blocks {
                    let (nr, nc) = (b.rows.len(), b.cols.len());
                    let mut v = nalgebra::DVector::zeros(nr * nc);
                    for (cj, &j) in b.cols.iter().enumerate() {
                        for (ri, &i) in b.rows.iter().enumerate() {
                            v[cj * nr + ri] = framed[(i, j)];
                        }
                    }
                    let w = &b.map * v;
                    for (cj, &j) in b.cols.iter().enumerate() {
                        for (ri, &i) in b.rows.iter().enumerate() {
                            out[(i, j)] = w[cj * nr + ri];
                        }
                    }
                }
                phase_frame(&out, post_phase)
            }
            PropagatorKind::Incoherent(m) => {
                let pops = nalgebra::DVector::from_iterator(
                    rho.nrows(),
                    rho.diagonal().iter().map(|z| z.re),
                );
                let next = m * pops;
                DMatrix::from_diagonal(&next.map(|p| C64::new(p, 0.0)))
            }
        };
        let mut next = QuantumState::from_parts_unchecked(self.basis.clone(), out);
        next.hermitize();
        Ok(next)
    }

    /// ρ → UρU† (or the CP map). Trace is checked; positivity is checked by
    /// [`QuantumState::validate`].
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        let next = self.apply_unchecked(state)?;
        let tr = next.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("propagator changed trace to {tr}")));
        }
        Ok(next)
    }

    /// Apply and verify every QuantumState invariant.
    pub fn apply_validated(&self, state: &QuantumState) -> Result<QuantumState> {
        let next = self.apply(state)?;
        next.validate()?;
        Ok(next)
    }

    /// `other ∘ self` for two unitaries on the same basis.
    pub fn then(&self, other: &Propagator) -> Result<Propagator> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch("cannot compose over different bases".into()));
        }
        match (&self.kind, &other.kind) {
            (PropagatorKind::Unitary(a), PropagatorKind::Unitary(b)) => {
                Ok(Propagator::unitary(self.basis.clone(), b * a))
            }
            _ => Err(Error::Unsupported("composition is only implemented for unitaries".into())),
        }
    }
}

/// ρ_ij → d_i ρ_ij d_j*.
fn phase_frame(rho: &DMatrix<C64>, d: &[C64]) -> DMatrix<C64> {
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| d[i] * rho[(i, j)] * d[j].conj())
}

/// exp(−i·H·t) for Hermitian H (angular units × time), via eigendecomposition.
pub fn hermitian_exp(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Block-Lindblad channel for generator
/// dρ/dt = −i[H, ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}),
/// with H and every L_k block-diagonal in `groups` (a partition of the
/// basis indices). Units: H in rad/µs, L_k in µs^{-1/2}, t in µs.
pub fn lindblad_blocks(
    h: &DMatrix<C64>,
    jumps: &[DMatrix<C64>],
    groups: &[Vec<usize>],
    t: f64,
) -> Vec<SuperBlock> {
    let d = h.nrows();
    let mut k = DMatrix::<C64>::zeros(d, d);
    for l in jumps {
        k += l.adjoint() * l;
    }
    let sub = |m: &DMatrix<C64>, g: &[usize]| DMatrix::from_fn(g.len(), g.len(), |i, j| m[(g[i], g[j])]);
    let i = C64::new(0.0, 1.0);
    let half = C64::new(0.5, 0.0);
    let mut blocks = Vec::with_capacity(groups.len() * groups.len());
    for g in groups {
        for hgrp in groups {
            let (ng, nh) = (g.len(), hgrp.len());
            let id_g = DMatrix::<C64>::identity(ng, ng);
            let id_h = DMatrix::<C64>::identity(nh, nh);
            let hg = sub(h, g);
            let hh = sub(h, hgrp);
            let kg = sub(&k, g);
            let kh = sub(&k, hgrp);
            let mut gen = -(id_h.kronecker(&hg)) * i + hh.transpose().kronecker(&id_g) * i
                - id_h.kronecker(&kg) * half
                - kh.transpose().kronecker(&id_g) * half;
            for l in jumps {
                let lg = sub(l, g);
                let lh = sub(l, hgrp);
                if lg.iter().all(|z| z.norm() == 0.0) || lh.iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                gen += lh.map(|z| z.conj()).kronecker(&lg);
            }
            let map = (gen * C64::new(t, 0.0)).exp();
            blocks.push(SuperBlock { rows: g.clone(), cols: hgrp.clone(), map });
        }
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::{CompositeLevel, CoreTerm};

    fn two_level_basis() -> Basis {
        Basis::new([
            CompositeLevel::new(51, CoreTerm::S12, 1).unwrap(),
            CompositeLevel::new(49, CoreTerm::S12, 1).unwrap(),
        ])
    }

    #[test]
    fn identity_leaves_state() {
        let b = Basis::manifolds([51]).unwrap();
        let lvl = CompositeLevel::new(51, CoreTerm::D32, 3).unwrap();
        let s = QuantumState::pure(b.clone(), &lvl).unwrap();
        let out = Propagator::identity(b).apply_validated(&s).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn hermitian_exp_is_unitary() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.3, -0.7), C64::new(0.3, 0.7), C64::new(-2.0, 0.0)],
        );
        let u = hermitian_exp(&h, 3.7);
        let p = Propagator::unitary(two_level_basis(), u);
        assert!(p.unitarity_defect().unwrap() < 1e-13);
        let direct = (h * C64::new(0.0, -3.7)).exp();
        assert!((p.unitary_matrix().unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn pure_decay_channel() {
        // |0> -> |1> at rate 2 per µs, one group holding both levels.
        let b = two_level_basis();
        let h = DMatrix::<C64>::zeros(2, 2);
        let mut l = DMatrix::<C64>::zeros(2, 2);
        l[(1, 0)] = C64::new(2f64.sqrt(), 0.0);
        let blocks = lindblad_blocks(&h, &[l], &[vec![0, 1]], 0.5);
        let p = Propagator {
            basis: b.clone(),
            kind: PropagatorKind::Channel {
                pre_phase: vec![C64::new(1.0, 0.0); 2],
                blocks,
                post_phase: vec![C64::new(1.0, 0.0); 2],
            },
        };
        let s = QuantumState::pure(b.clone(), &b.levels()[0]).unwrap();
        let out = p.apply_validated(&s).unwrap();
        assert!((out.populations()[0] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn basis_mismatch_is_error() {
        let p = Propagator::identity(two_level_basis());
        let s = QuantumState::pure(
            Basis::manifolds([51]).unwrap(),
            &CompositeLevel::new(51, CoreTerm::S12, 1).unwrap(),
        )
        .unwrap();
        assert!(matches!(p.apply(&s), Err(Error::BasisMismatch(_))));
    }
}
