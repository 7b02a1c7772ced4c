//! Finite-dimensional Hilbert spaces, orthonormal bases, projectors, density
//! operators and cached unitary propagators.
//!
//! Tensor products order indices row-major: for `A ⊗ B` the joint index is
//! `i_a * dim(B) + i_b`, which matches `kronecker(a, b)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol::{TOL_ALGEBRA, TOL_PROB};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a * b - b * a))
}

/// `tr[a b]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `tr[k rho k^dag]`.
pub fn sandwich_trace(k: &CMatrix, rho: &CMatrix) -> f64 {
    let m = k * rho;
    let mut acc = 0.0;
    for (x, y) in m.iter().zip(k.iter()) {
        acc += (x * y.conj()).re;
    }
    acc
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    labels: Vec<String>,
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::InvalidSpace("duplicate basis labels".into()));
        }
        let d = labels.len();
        Ok(Self {
            labels,
            factor_dims: vec![d],
        })
    }

    /// Space with labels `"0"`, `"1"`, ...
    pub fn with_dim(dim: usize) -> Result<Self> {
        Self::new((0..dim).map(|i| i.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Splits a joint index into per-factor indices.
    pub fn factor_indices(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factor_dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.factor_dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn compose_index(&self, parts: &[usize]) -> usize {
        parts
            .iter()
            .zip(&self.factor_dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }
}

pub fn tensor_product(spaces: &[HilbertSpace]) -> Result<HilbertSpace> {
    let (first, rest) = spaces.split_first().ok_or(Error::NoFactors)?;
    let mut labels = first.labels.clone();
    let mut factor_dims = first.factor_dims.clone();
    for s in rest {
        labels = labels
            .iter()
            .flat_map(|a| s.labels.iter().map(move |b| format!("{a}⊗{b}")))
            .collect();
        factor_dims.extend_from_slice(&s.factor_dims);
    }
    Ok(HilbertSpace {
        labels,
        factor_dims,
    })
}

pub fn same_space(a: &Arc<HilbertSpace>, b: &Arc<HilbertSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Complete orthonormal basis of a space. `vectors == None` is the
/// computational basis.
#[derive(Clone, Debug)]
pub struct Basis {
    name: String,
    space: Arc<HilbertSpace>,
    labels: Vec<String>,
    vectors: Option<CMatrix>,
}

impl Basis {
    pub fn computational(space: &Arc<HilbertSpace>) -> Arc<Basis> {
        Arc::new(Basis {
            name: "computational".into(),
            space: space.clone(),
            labels: space.labels().to_vec(),
            vectors: None,
        })
    }

    /// Columns of `vectors` are the basis kets.
    pub fn from_vectors(
        name: impl Into<String>,
        space: &Arc<HilbertSpace>,
        labels: Vec<String>,
        vectors: CMatrix,
    ) -> Result<Arc<Basis>> {
        let d = space.dim();
        if vectors.nrows() != d || vectors.ncols() != d {
            return Err(Error::InvalidBasis(format!(
                "expected {d}x{d} vectors, got {}x{}",
                vectors.nrows(),
                vectors.ncols()
            )));
        }
        if labels.len() != d {
            return Err(Error::InvalidBasis(format!(
                "expected {d} labels, got {}",
                labels.len()
            )));
        }
        let defect = max_abs(&(vectors.adjoint() * &vectors - CMatrix::identity(d, d)));
        if defect > TOL_ALGEBRA {
            return Err(Error::InvalidBasis(format!(
                "vectors not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Arc::new(Basis {
            name: name.into(),
            space: space.clone(),
            labels,
            vectors: Some(vectors),
        }))
    }

    /// Product basis on the tensor product of the parts' spaces.
    pub fn tensor(name: impl Into<String>, parts: &[&Basis]) -> Result<Arc<Basis>> {
        let (first, rest) = parts.split_first().ok_or(Error::NoFactors)?;
        let spaces: Vec<HilbertSpace> = parts.iter().map(|b| (*b.space).clone()).collect();
        let space = Arc::new(tensor_product(&spaces)?);
        let mut labels = first.labels.clone();
        let mut m = first.matrix();
        for b in rest {
            labels = labels
                .iter()
                .flat_map(|a| b.labels.iter().map(move |l| format!("{a}⊗{l}")))
                .collect();
            m = m.kronecker(&b.matrix());
        }
        if parts.iter().all(|b| b.is_computational()) {
            return Ok(Arc::new(Basis {
                name: name.into(),
                space,
                labels,
                vectors: None,
            }));
        }
        Basis::from_vectors(name, &space, labels, m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_computational(&self) -> bool {
        self.vectors.is_none()
    }

    pub fn vector(&self, i: usize) -> CVector {
        match &self.vectors {
            Some(v) => v.column(i).into_owned(),
            None => {
                let mut e = CVector::zeros(self.dim());
                e[i] = ONE;
                e
            }
        }
    }

    /// Unitary whose columns are the basis kets.
    pub fn matrix(&self) -> CMatrix {
        match &self.vectors {
            Some(v) => v.clone(),
            None => CMatrix::identity(self.dim(), self.dim()),
        }
    }

    /// The `d x k` isometry spanned by the selected kets.
    pub fn isometry(&self, members: &BTreeSet<usize>) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, members.len());
        for (col, &i) in members.iter().enumerate() {
            match &self.vectors {
                Some(v) => out.set_column(col, &v.column(i)),
                None => out[(i, col)] = ONE,
            }
        }
        out
    }

    /// True when both describe the same kets with the same labels.
    pub fn same_assignment(&self, other: &Basis) -> bool {
        if std::ptr::eq(self, other) {
            return true;
        }
        self.name == other.name
            && self.space == other.space
            && self.labels == other.labels
            && match (&self.vectors, &other.vectors) {
                (None, None) => true,
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
    }
}

/// A set of basis kets `{phi_i : i in members}` in one basis.
#[derive(Clone, Debug)]
pub struct StationarySet {
    basis: Arc<Basis>,
    members: BTreeSet<usize>,
}

impl PartialEq for StationarySet {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members && self.basis.same_assignment(&other.basis)
    }
}

impl StationarySet {
    pub fn new(basis: &Arc<Basis>, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&i| i >= basis.dim()) {
            return Err(Error::InvalidArgument(format!(
                "member index {bad} out of range for basis of dimension {}",
                basis.dim()
            )));
        }
        Ok(Self {
            basis: basis.clone(),
            members,
        })
    }

    pub fn from_labels<S: AsRef<str>>(basis: &Arc<Basis>, labels: &[S]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| {
                basis.index_of(l.as_ref()).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "label '{}' not in basis '{}'",
                        l.as_ref(),
                        basis.name()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(basis, idx)
    }

    pub fn singleton(basis: &Arc<Basis>, i: usize) -> Result<Self> {
        Self::new(basis, [i])
    }

    pub fn full(basis: &Arc<Basis>) -> Self {
        Self {
            basis: basis.clone(),
            members: (0..basis.dim()).collect(),
        }
    }

    pub fn empty(basis: &Arc<Basis>) -> Self {
        Self {
            basis: basis.clone(),
            members: BTreeSet::new(),
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.basis.dim()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(&i)
    }

    pub fn is_subset(&self, other: &StationarySet) -> bool {
        self.basis.same_assignment(&other.basis) && self.members.is_subset(&other.members)
    }

    pub fn complement(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            members: (0..self.basis.dim())
                .filter(|i| !self.members.contains(i))
                .collect(),
        }
    }

    fn check_basis(&self, other: &StationarySet) -> Result<()> {
        if self.basis.same_assignment(&other.basis) {
            Ok(())
        } else {
            Err(Error::IncompatibleBases(format!(
                "'{}' vs '{}'",
                self.basis.name(),
                other.basis.name()
            )))
        }
    }

    pub fn intersect(&self, other: &StationarySet) -> Result<Self> {
        self.check_basis(other)?;
        Ok(Self {
            basis: self.basis.clone(),
            members: self.members.intersection(&other.members).copied().collect(),
        })
    }

    pub fn union(&self, other: &StationarySet) -> Result<Self> {
        self.check_basis(other)?;
        Ok(Self {
            basis: self.basis.clone(),
            members: self.members.union(&other.members).copied().collect(),
        })
    }

    pub fn isometry(&self) -> CMatrix {
        self.basis.isometry(&self.members)
    }

    pub fn projector_matrix(&self) -> CMatrix {
        if self.basis.is_computational() {
            let d = self.basis.dim();
            let mut p = CMatrix::zeros(d, d);
            for &i in &self.members {
                p[(i, i)] = ONE;
            }
            return p;
        }
        let v = self.isometry();
        &v * v.adjoint()
    }

    pub fn projector(&self) -> Projector {
        Projector {
            space: self.basis.space.clone(),
            matrix: self.projector_matrix(),
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(|&i| self.basis.label(i)).collect()
    }
}

impl fmt::Display for StationarySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{}}}", self.basis.name(), self.labels().join(","))
    }
}

pub enum SetOp<'a> {
    Complement,
    Intersect(&'a StationarySet),
    Union(&'a StationarySet),
}

pub fn set_algebra(a: &StationarySet, op: SetOp<'_>) -> Result<StationarySet> {
    match op {
        SetOp::Complement => Ok(a.complement()),
        SetOp::Intersect(b) => a.intersect(b),
        SetOp::Union(b) => a.union(b),
    }
}

#[derive(Clone, Debug)]
pub struct Projector {
    space: Arc<HilbertSpace>,
    matrix: CMatrix,
}

impl Projector {
    pub fn new(space: &Arc<HilbertSpace>, matrix: CMatrix) -> Result<Self> {
        check_dim(space, &matrix)?;
        let herm = hermiticity_defect(&matrix);
        if herm > TOL_ALGEBRA {
            return Err(Error::NotProjector(format!("hermiticity defect {herm:e}")));
        }
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        if idem > TOL_ALGEBRA {
            return Err(Error::NotProjector(format!("idempotency defect {idem:e}")));
        }
        Ok(Self {
            space: space.clone(),
            matrix,
        })
    }

    /// `|v><v| / <v|v>`.
    pub fn from_ket(space: &Arc<HilbertSpace>, ket: &CVector) -> Result<Self> {
        if ket.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: ket.len(),
            });
        }
        let n2 = ket.norm_squared();
        if n2 <= TOL_PROB {
            return Err(Error::InvalidArgument("zero ket".into()));
        }
        Ok(Self {
            space: space.clone(),
            matrix: ket * ket.adjoint() / c(n2, 0.0),
        })
    }

    pub fn identity(space: &Arc<HilbertSpace>) -> Self {
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }

    pub fn complement(&self) -> Projector {
        let d = self.space.dim();
        Projector {
            space: self.space.clone(),
            matrix: CMatrix::identity(d, d) - &self.matrix,
        }
    }
}

fn check_dim(space: &HilbertSpace, m: &CMatrix) -> Result<()> {
    let d = space.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct DensityOperator {
    space: Arc<HilbertSpace>,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(space: &Arc<HilbertSpace>, matrix: CMatrix) -> Result<Self> {
        check_dim(space, &matrix)?;
        let herm = hermiticity_defect(&matrix);
        if herm > TOL_ALGEBRA {
            return Err(Error::InvalidDensity(format!("hermiticity defect {herm:e}")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TOL_ALGEBRA {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let matrix = hermitize(&matrix);
        let min_eig = matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < -TOL_ALGEBRA {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self {
            space: space.clone(),
            matrix,
        })
    }

    /// Pure state of a ket, normalized.
    pub fn pure(space: &Arc<HilbertSpace>, ket: &CVector) -> Result<Self> {
        let p = Projector::from_ket(space, ket)?;
        Ok(Self {
            space: space.clone(),
            matrix: p.matrix,
        })
    }

    pub fn basis_state(space: &Arc<HilbertSpace>, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::InvalidArgument(format!(
                "index {index} out of range"
            )));
        }
        let d = space.dim();
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = ONE;
        Ok(Self {
            space: space.clone(),
            matrix: m,
        })
    }

    pub fn maximally_mixed(space: &Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(d, d) / c(d as f64, 0.0),
        }
    }

    pub(crate) fn from_matrix_unchecked(space: &Arc<HilbertSpace>, matrix: CMatrix) -> Self {
        Self {
            space: space.clone(),
            matrix,
        }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let space = Arc::new(tensor_product(&[
            (*self.space).clone(),
            (*other.space).clone(),
        ])?);
        Ok(Self {
            space,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// `u rho u^dag`.
    pub fn transformed(&self, u: &CMatrix) -> DensityOperator {
        Self {
            space: self.space.clone(),
            matrix: hermitize(&(u * &self.matrix * u.adjoint())),
        }
    }
}

/// `U(t) = exp(-i H t)` via one Hermitian eigendecomposition, with results
/// cached per time.
pub struct Propagator {
    space: Arc<HilbertSpace>,
    hamiltonian: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    trivial: bool,
    cache: Mutex<HashMap<u64, Arc<CMatrix>>>,
}

impl fmt::Debug for Propagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Propagator")
            .field("dim", &self.space.dim())
            .field("trivial", &self.trivial)
            .finish()
    }
}

impl Propagator {
    pub fn new(space: &Arc<HilbertSpace>, hamiltonian: CMatrix) -> Result<Self> {
        check_dim(space, &hamiltonian)?;
        let defect = hermiticity_defect(&hamiltonian);
        if defect > TOL_ALGEBRA {
            return Err(Error::NotHermitian(defect));
        }
        let hamiltonian = hermitize(&hamiltonian);
        if hamiltonian.iter().all(|z| *z == ZERO) {
            return Ok(Self::trivial(space, hamiltonian));
        }
        let eig = hamiltonian.clone().symmetric_eigen();
        Ok(Self {
            space: space.clone(),
            hamiltonian,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
            trivial: false,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Builds from a known spectral decomposition `H = V diag(E) V^dag`.
    pub fn from_eigen(
        space: &Arc<HilbertSpace>,
        eigenvalues: Vec<f64>,
        eigenvectors: CMatrix,
    ) -> Result<Self> {
        check_dim(space, &eigenvectors)?;
        if eigenvalues.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: eigenvalues.len(),
            });
        }
        let d = space.dim();
        let defect = max_abs(&(eigenvectors.adjoint() * &eigenvectors - CMatrix::identity(d, d)));
        if defect > TOL_ALGEBRA {
            return Err(Error::InvalidBasis(format!(
                "eigenvectors not unitary (defect {defect:e})"
            )));
        }
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            d,
            eigenvalues.iter().map(|&e| c(e, 0.0)),
        ));
        let hamiltonian = &eigenvectors * diag * eigenvectors.adjoint();
        Ok(Self {
            space: space.clone(),
            hamiltonian,
            eigenvalues,
            eigenvectors,
            trivial: false,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// `H = 0`.
    pub fn free(space: &Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        Self::trivial(space, CMatrix::zeros(d, d))
    }

    fn trivial(space: &Arc<HilbertSpace>, hamiltonian: CMatrix) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            hamiltonian,
            eigenvalues: vec![0.0; d],
            eigenvectors: CMatrix::identity(d, d),
            trivial: true,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Matrix element `<i| exp(-i H t) |j>` from the eigensystem, without
    /// forming the full propagator.
    pub fn amplitude(&self, i: usize, j: usize, t: f64) -> Complex64 {
        if self.trivial || t == 0.0 {
            return if i == j { ONE } else { ZERO };
        }
        let v = &self.eigenvectors;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &e)| v[(i, k)] * v[(j, k)].conj() * Complex64::from_polar(1.0, -e * t))
            .sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn at(&self, t: f64) -> Arc<CMatrix> {
        let key = t.to_bits();
        if let Some(u) = self.cache.lock().expect("propagator cache poisoned").get(&key) {
            return u.clone();
        }
        let u = Arc::new(self.compute(t));
        self.cache
            .lock()
            .expect("propagator cache poisoned")
            .entry(key)
            .or_insert(u)
            .clone()
    }

    fn compute(&self, t: f64) -> CMatrix {
        let d = self.dim();
        if self.trivial || t == 0.0 {
            return CMatrix::identity(d, d);
        }
        let mut left = self.eigenvectors.clone();
        for (j, &e) in self.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -e * t);
            for i in 0..d {
                left[(i, j)] *= phase;
            }
        }
        left * self.eigenvectors.adjoint()
    }

    /// Schrödinger-picture state at time `t`.
    pub fn evolve(&self, rho: &DensityOperator, t: f64) -> DensityOperator {
        if self.trivial {
            return rho.clone();
        }
        rho.transformed(&self.at(t))
    }

    /// Heisenberg-picture operator `U(t)^dag a U(t)`.
    pub fn heisenberg(&self, a: &CMatrix, t: f64) -> CMatrix {
        if self.trivial {
            return a.clone();
        }
        let u = self.at(t);
        u.adjoint() * a * &*u
    }
}

/// `tr[op rho]`, clamped to `[0, 1]`.
pub fn born_probability(op: &CMatrix, rho: &DensityOperator) -> Result<f64> {
    check_dim(rho.space(), op)?;
    Ok(trace_product(op, rho.matrix()).re.clamp(0.0, 1.0))
}

/// Conditional state `k rho k^dag / tr[k rho k^dag]` and the norm.
pub fn lueders_update(rho: &DensityOperator, k: &CMatrix) -> Result<(DensityOperator, f64)> {
    check_dim(rho.space(), k)?;
    let m = k * rho.matrix() * k.adjoint();
    let norm = m.trace().re;
    if norm <= TOL_PROB {
        return Err(Error::NullEvent { norm });
    }
    let m = hermitize(&m) / c(norm, 0.0);
    Ok((DensityOperator::from_matrix_unchecked(rho.space(), m), norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> Arc<HilbertSpace> {
        Arc::new(HilbertSpace::new(["0", "1"]).unwrap())
    }

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn tensor_labels_and_indices() {
        let a = HilbertSpace::new(["u", "d"]).unwrap();
        let b = HilbertSpace::with_dim(3).unwrap();
        let ab = tensor_product(&[a, b]).unwrap();
        assert_eq!(ab.dim(), 6);
        assert_eq!(ab.factor_dims(), &[2, 3]);
        assert_eq!(ab.label(4), "d⊗1");
        assert_eq!(ab.factor_indices(4), vec![1, 1]);
        assert_eq!(ab.compose_index(&[1, 2]), 5);
        assert_eq!(tensor_product(&[]), Err(Error::NoFactors));
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(HilbertSpace::with_dim(0).is_err());
        assert!(HilbertSpace::new(["a", "a"]).is_err());
    }

    #[test]
    fn rabi_oracle() {
        // H = (Omega/2) sigma_x: P(1, t) = sin^2(Omega t / 2).
        let omega = 1.7;
        let s = qubit();
        let prop = Propagator::new(&s, sigma_x() * c(omega / 2.0, 0.0)).unwrap();
        let rho0 = DensityOperator::basis_state(&s, 0).unwrap();
        for &t in &[0.0, 0.3, 1.1, 4.0] {
            let rho = prop.evolve(&rho0, t);
            let p1 = rho.matrix()[(1, 1)].re;
            assert!((p1 - (omega * t / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn propagator_cache_and_group_law() {
        let s = qubit();
        let h = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.1, -0.4), c(0.1, 0.4), c(-1.0, 0.0)]);
        let prop = Propagator::new(&s, h).unwrap();
        let a = prop.at(0.7);
        let b = prop.at(0.7);
        assert!(Arc::ptr_eq(&a, &b));
        let ab = &*prop.at(0.3) * &*prop.at(0.4);
        assert!(max_abs(&(ab - &*a)) < 1e-13);
        assert!(max_abs(&(a.adjoint() * &*a - CMatrix::identity(2, 2))) < 1e-13);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let s = qubit();
        let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(Propagator::new(&s, h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn basis_tensor_and_sets() {
        let s = qubit();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = Basis::from_vectors(
            "x",
            &s,
            vec!["+".into(), "-".into()],
            CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        )
        .unwrap();
        let z = Basis::computational(&s);
        let xz = Basis::tensor("xz", &[&x, &z]).unwrap();
        assert_eq!(xz.label(1), "+⊗1");
        let plus = StationarySet::from_labels(&x, &["+"]).unwrap();
        let p = plus.projector();
        assert!((p.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
        assert_eq!(p.rank(), 1);
        let zero = StationarySet::singleton(&z, 0).unwrap();
        assert!(matches!(
            set_algebra(&plus, SetOp::Intersect(&zero)),
            Err(Error::IncompatibleBases(_))
        ));
        assert!(set_algebra(&plus, SetOp::Complement).unwrap().contains(1));
    }

    #[test]
    fn density_validation() {
        let s = qubit();
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]);
        assert!(DensityOperator::new(&s, bad).is_err());
        let mm = DensityOperator::maximally_mixed(&s);
        assert!((mm.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lueders_null_event() {
        let s = qubit();
        let rho = DensityOperator::basis_state(&s, 0).unwrap();
        let p1 = StationarySet::singleton(&Basis::computational(&s), 1)
            .unwrap()
            .projector_matrix();
        assert!(matches!(lueders_update(&rho, &p1), Err(Error::NullEvent { .. })));
        let (post, norm) = lueders_update(&rho, &CMatrix::identity(2, 2)).unwrap();
        assert_eq!(norm, 1.0);
        assert_eq!(post.matrix(), rho.matrix());
    }
}
