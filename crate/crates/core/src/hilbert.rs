//! Composite Hilbert space of up to two two-level spins and one truncated
//! harmonic oscillator.
//!
//! Basis ordering: spin-major, Fock-minor. A single spin uses |↓⟩ = 0 and
//! |↑⟩ = 1; for two ions ion 1 is the most significant spin bit, so the spin
//! index is `2 * s1 + s2`. The raising operator is σ₊ = |↑⟩⟨↓|.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FOCK_CUTOFF: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    n_ions: usize,
    fock_cutoff: usize,
}

/// Builds the space for `n_ions` spins and a mode truncated above Fock level
/// `fock_cutoff`.
pub fn build_space(n_ions: usize, fock_cutoff: usize) -> Result<SpaceDescriptor> {
    if !(1..=2).contains(&n_ions) {
        return Err(Error::invalid("n_ions", format!("must be 1 or 2, got {n_ions}")));
    }
    if fock_cutoff < 1 {
        return Err(Error::invalid("fock_cutoff", "must be at least 1"));
    }
    Ok(SpaceDescriptor { n_ions, fock_cutoff })
}

impl SpaceDescriptor {
    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    /// Number of spin basis states, 2^n_ions.
    pub fn spin_dim(&self) -> usize {
        1 << self.n_ions
    }

    /// Number of retained Fock levels, N + 1.
    pub fn mode_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.mode_dim()
    }

    pub fn index(&self, spin: usize, fock: usize) -> usize {
        debug_assert!(spin < self.spin_dim() && fock < self.mode_dim());
        spin * self.mode_dim() + fock
    }

    /// Fock index of a composite basis index.
    pub fn fock_of(&self, index: usize) -> usize {
        index % self.mode_dim()
    }

    pub fn spin_of(&self, index: usize) -> usize {
        index / self.mode_dim()
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<SpaceDescriptor> {
        build_space(self.n_ions, fock_cutoff)
    }
}

/// Single-spin Pauli matrices in the (↓, ↑) index order.
pub(crate) mod pauli {
    use super::C64;

    pub type M2 = [[C64; 2]; 2];

    const O: C64 = C64::new(0.0, 0.0);
    const I: C64 = C64::new(1.0, 0.0);

    pub fn identity() -> M2 {
        [[I, O], [O, I]]
    }

    /// σ₊ = |↑⟩⟨↓|
    pub fn plus() -> M2 {
        [[O, O], [I, O]]
    }

    pub fn minus() -> M2 {
        [[O, I], [O, O]]
    }

    /// σ_φ = σx cos φ + σy sin φ = e^{iφ}σ₊ + e^{−iφ}σ₋.
    pub fn phi(phase: f64) -> M2 {
        let e = C64::from_polar(1.0, phase);
        [[O, e.conj()], [e, O]]
    }
}

/// Dense operator on a [`SpaceDescriptor`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    space: SpaceDescriptor,
    entries: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn new(space: SpaceDescriptor, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != space.dim() || entries.ncols() != space.dim() {
            return Err(Error::SpaceMismatch(format!(
                "matrix is {}x{}, space dimension is {}",
                entries.nrows(),
                entries.ncols(),
                space.dim()
            )));
        }
        Ok(Self { space, entries })
    }

    pub fn zeros(space: SpaceDescriptor) -> Self {
        Self {
            space,
            entries: DMatrix::zeros(space.dim(), space.dim()),
        }
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        Self {
            space,
            entries: DMatrix::identity(space.dim(), space.dim()),
        }
    }

    /// Embeds `spin ⊗ mode` where `spin` is the full spin-register matrix.
    pub(crate) fn kron(space: SpaceDescriptor, spin: &DMatrix<C64>, mode: &DMatrix<C64>) -> Self {
        Self {
            space,
            entries: spin.kronecker(mode),
        }
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    /// Matrix element ⟨spin_r, n_r| O |spin_c, n_c⟩.
    pub fn element(&self, bra: (usize, usize), ket: (usize, usize)) -> C64 {
        self.entries[(self.space.index(bra.0, bra.1), self.space.index(ket.0, ket.1))]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            entries: self.entries.adjoint(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Max-norm distance ‖A − B‖_max.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) < tol
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let ab = &self.entries * &other.entries;
        let ba = &other.entries * &self.entries;
        Self {
            space: self.space,
            entries: ab - ba,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space,
            entries: &self.entries * factor,
        }
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        StateVector {
            space: self.space,
            amplitudes: &self.entries * &state.amplitudes,
        }
    }

    /// Expectation value ⟨ψ|O|ψ⟩.
    pub fn expectation(&self, state: &StateVector) -> C64 {
        state.amplitudes.dotc(&(&self.entries * &state.amplitudes))
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space,
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space,
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl std::ops::Mul for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space,
            entries: &self.entries * &rhs.entries,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: SpaceDescriptor,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(space: SpaceDescriptor, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::SpaceMismatch(format!(
                "vector has length {}, space dimension is {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    /// Product basis state |spin⟩ ⊗ |n⟩.
    pub fn basis(space: SpaceDescriptor, spin: usize, fock: usize) -> Self {
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[space.index(spin, fock)] = C64::new(1.0, 0.0);
        Self { space, amplitudes }
    }

    /// Product state of a spin-register vector and a Fock state.
    pub fn product(space: SpaceDescriptor, spin: &[C64], fock: usize) -> Result<Self> {
        if spin.len() != space.spin_dim() {
            return Err(Error::SpaceMismatch(format!(
                "spin vector has length {}, expected {}",
                spin.len(),
                space.spin_dim()
            )));
        }
        let mut amplitudes = DVector::zeros(space.dim());
        for (s, &c) in spin.iter().enumerate() {
            amplitudes[space.index(s, fock)] = c;
        }
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn as_slice(&self) -> &[C64] {
        self.amplitudes.as_slice()
    }

    pub(crate) fn from_vec(space: SpaceDescriptor, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), space.dim());
        Self {
            space,
            amplitudes: DVector::from_vec(data),
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.amplitudes - &other.amplitudes).norm()
    }

    /// Multiplies by a global phase e^{iθ}.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        Self {
            space: self.space,
            amplitudes: &self.amplitudes * C64::from_polar(1.0, theta),
        }
    }

    /// Population of each spin basis state, traced over the motion.
    pub fn spin_populations(&self) -> Vec<f64> {
        let m = self.space.mode_dim();
        (0..self.space.spin_dim())
            .map(|s| {
                self.amplitudes.as_slice()[s * m..(s + 1) * m]
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// Population of Fock level `n`, traced over the spins.
    pub fn fock_population(&self, n: usize) -> f64 {
        (0..self.space.spin_dim())
            .map(|s| self.amplitudes[self.space.index(s, n)].norm_sqr())
            .sum()
    }

    /// Population held in the two highest retained Fock levels.
    pub fn top_population(&self) -> f64 {
        let top = self.space.fock_cutoff();
        self.fock_population(top) + self.fock_population(top - 1)
    }

    /// Reduced spin density matrix ρ_spin = Tr_motion |ψ⟩⟨ψ|.
    pub fn reduced_spin_density(&self) -> DMatrix<C64> {
        let s = self.space.spin_dim();
        let m = self.space.mode_dim();
        let a = self.amplitudes.as_slice();
        DMatrix::from_fn(s, s, |r, c| {
            (0..m).map(|n| a[r * m + n] * a[c * m + n].conj()).sum()
        })
    }

    /// Re-expresses the state on a space with a larger Fock cutoff.
    pub fn embed(&self, target: SpaceDescriptor) -> Result<Self> {
        if target.n_ions() != self.space.n_ions() || target.fock_cutoff() < self.space.fock_cutoff() {
            return Err(Error::SpaceMismatch(
                "embedding requires the same ion count and a cutoff at least as large".into(),
            ));
        }
        let mut amplitudes = DVector::zeros(target.dim());
        for s in 0..self.space.spin_dim() {
            for n in 0..self.space.mode_dim() {
                amplitudes[target.index(s, n)] = self.amplitudes[self.space.index(s, n)];
            }
        }
        Ok(Self {
            space: target,
            amplitudes,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinOpKind {
    Plus,
    Minus,
    Phi,
}

/// Single-spin operator `op` acting on ion `ion` of an `n_ions` register.
pub(crate) fn embed_single_spin(n_ions: usize, ion: usize, op: &pauli::M2) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for i in 0..n_ions {
        let factor = if i == ion { *op } else { pauli::identity() };
        let f = DMatrix::from_fn(2, 2, |r, c| factor[r][c]);
        out = out.kronecker(&f);
    }
    out
}

/// Collective spin matrix Σᵢ σ⁽ⁱ⁾ on the spin register alone.
pub(crate) fn collective_spin(n_ions: usize, op: &pauli::M2) -> DMatrix<C64> {
    let dim = 1 << n_ions;
    (0..n_ions).fold(DMatrix::zeros(dim, dim), |acc, i| {
        acc + embed_single_spin(n_ions, i, op)
    })
}

/// Collective spin operator Σᵢ σ⁽ⁱ⁾ ⊗ 𝟙_motion. `phase` is used only for
/// [`SpinOpKind::Phi`].
pub fn spin_op(space: SpaceDescriptor, kind: SpinOpKind, phase: f64) -> OperatorMatrix {
    let single = match kind {
        SpinOpKind::Plus => pauli::plus(),
        SpinOpKind::Minus => pauli::minus(),
        SpinOpKind::Phi => pauli::phi(phase),
    };
    let spin = collective_spin(space.n_ions(), &single);
    OperatorMatrix::kron(space, &spin, &DMatrix::identity(space.mode_dim(), space.mode_dim()))
}

/// Truncated annihilation operator on the mode alone.
pub(crate) fn annihilation(mode_dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(mode_dim, mode_dim, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Returns (â, â†) embedded as 𝟙_spin ⊗ (·).
pub fn mode_ops(space: SpaceDescriptor) -> (OperatorMatrix, OperatorMatrix) {
    let a = annihilation(space.mode_dim());
    let id = DMatrix::identity(space.spin_dim(), space.spin_dim());
    let a_op = OperatorMatrix::kron(space, &id, &a);
    let ad_op = a_op.adjoint();
    (a_op, ad_op)
}

/// Eigen-decomposition of the quadrature X = â + â† on the truncated mode.
#[derive(Clone, Debug)]
pub(crate) struct Quadrature {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Quadrature {
    pub fn new(mode_dim: usize) -> Self {
        let x = DMatrix::from_fn(mode_dim, mode_dim, |r, c| {
            if c == r + 1 {
                (c as f64).sqrt()
            } else if r == c + 1 {
                (r as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = x.symmetric_eigen();
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// f(η X) evaluated exactly in the eigenbasis of X.
    pub fn function(&self, eta: f64, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&l| f(eta * l)).collect();
        DMatrix::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| fv[k] * (self.vectors[(r, k)] * self.vectors[(c, k)]))
                .sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dimensions() {
        assert_eq!(build_space(1, 5).unwrap().dim(), 12);
        assert_eq!(build_space(2, 20).unwrap().dim(), 84);
        assert!(build_space(1, 0).is_err());
        assert!(build_space(3, 4).is_err());
        assert!(build_space(0, 4).is_err());
    }

    #[test]
    fn phi_operator_limits() {
        let sp = build_space(1, 3).unwrap();
        let id = DMatrix::<C64>::identity(4, 4);
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|x| C64::new(x, 0.0)));
        let sy = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        );
        let x_ref = OperatorMatrix::kron(sp, &sx, &id);
        let y_ref = OperatorMatrix::kron(sp, &sy, &id);
        assert!(spin_op(sp, SpinOpKind::Phi, 0.0).max_abs_diff(&x_ref) < 1e-15);
        assert!(spin_op(sp, SpinOpKind::Phi, PI / 2.0).max_abs_diff(&y_ref) < 1e-15);
        let sum = &spin_op(sp, SpinOpKind::Plus, 0.0) + &spin_op(sp, SpinOpKind::Minus, 0.0);
        assert!(sum.max_abs_diff(&spin_op(sp, SpinOpKind::Phi, 0.0)) < 1e-15);
    }

    #[test]
    fn raising_is_up_from_down() {
        let sp = build_space(1, 2).unwrap();
        let plus = spin_op(sp, SpinOpKind::Plus, 0.0);
        assert_eq!(plus.element((1, 0), (0, 0)), C64::new(1.0, 0.0));
        assert_eq!(plus.element((0, 0), (1, 0)), C64::new(0.0, 0.0));
    }

    #[test]
    fn two_ion_collective_operator() {
        let sp = build_space(2, 1).unwrap();
        let plus = spin_op(sp, SpinOpKind::Plus, 0.0);
        // |↓↓⟩ -> |↓↑⟩ + |↑↓⟩
        assert_eq!(plus.element((1, 0), (0, 0)), C64::new(1.0, 0.0));
        assert_eq!(plus.element((2, 0), (0, 0)), C64::new(1.0, 0.0));
        assert_eq!(plus.element((3, 0), (0, 0)), C64::new(0.0, 0.0));
        assert_eq!(plus.element((3, 0), (1, 0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn ladder_elements() {
        let sp = build_space(1, 6).unwrap();
        let (a, ad) = mode_ops(sp);
        assert!((a.element((0, 0), (0, 1)) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((ad.element((0, 2), (0, 1)) - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(ad.element((0, 6), (0, 6)), C64::new(0.0, 0.0));
        let number = &ad * &a;
        let eig = number.entries().map(|z| z.re).symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // two spin copies of {0..N}
        for (k, v) in values.iter().enumerate() {
            assert!((v - (k / 2) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_commutator_below_top_level() {
        let sp = build_space(2, 8).unwrap();
        let (a, ad) = mode_ops(sp);
        let c = a.commutator(&ad);
        for r in 0..sp.dim() {
            if sp.fock_of(r) == sp.fock_cutoff() {
                continue;
            }
            for col in 0..sp.dim() {
                let expect = if r == col { 1.0 } else { 0.0 };
                assert!((c.get(r, col) - C64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn spin_and_mode_commute() {
        let sp = build_space(2, 5).unwrap();
        let (a, ad) = mode_ops(sp);
        for kind in [SpinOpKind::Plus, SpinOpKind::Minus, SpinOpKind::Phi] {
            let s = spin_op(sp, kind, 0.7);
            assert!(s.commutator(&a).max_abs() < 1e-14);
            assert!(s.commutator(&ad).max_abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_function_matches_series() {
        let q = Quadrature::new(12);
        let eta = 0.05;
        let x = {
            let a = annihilation(12);
            &a + a.adjoint()
        };
        let exact = q.function(eta, |v| C64::new(0.0, v).exp());
        // Taylor series of exp(iηX) to high order as reference
        let mut term = DMatrix::<C64>::identity(12, 12);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &x * C64::new(0.0, eta / k as f64);
            sum += &term;
        }
        let diff = (&exact - &sum).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn embedding_pads_with_zeros() {
        let small = build_space(1, 3).unwrap();
        let big = small.with_cutoff(7).unwrap();
        let psi = StateVector::basis(small, 1, 2);
        let e = psi.embed(big).unwrap();
        assert_eq!(e.space().dim(), 16);
        assert_eq!(e.amplitudes()[big.index(1, 2)], C64::new(1.0, 0.0));
        assert!((e.norm() - 1.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn phi_hermitian_and_antiperiodic(phase in -10.0f64..10.0, ions in 1usize..=2) {
                let sp = build_space(ions, 2).unwrap();
                let s = spin_op(sp, SpinOpKind::Phi, phase);
                prop_assert!(s.is_hermitian(1e-14));
                let shifted = spin_op(sp, SpinOpKind::Phi, phase + PI);
                prop_assert!((&s + &shifted).max_abs() < 1e-14);
            }

            #[test]
            fn plus_adjoint_is_minus(ions in 1usize..=2, cutoff in 1usize..6) {
                let sp = build_space(ions, cutoff).unwrap();
                let plus = spin_op(sp, SpinOpKind::Plus, 0.0);
                let minus = spin_op(sp, SpinOpKind::Minus, 0.0);
                prop_assert_eq!(plus.adjoint(), minus);
            }
        }
    }
}
