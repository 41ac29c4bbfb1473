//! Dense row-major complex matrices and states, with eigensolvers on top of faer.

use faer::{MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

/// Structural tags carried by a matrix. Set only after the property has been checked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tags {
    pub hermitian: bool,
    pub unitary: bool,
}

impl Tags {
    pub fn to_bits(self) -> u32 {
        (self.hermitian as u32) | ((self.unitary as u32) << 1)
    }

    pub fn from_bits(bits: u32) -> Self {
        Tags {
            hermitian: bits & 1 != 0,
            unitary: bits & 2 != 0,
        }
    }
}

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    data: Vec<C64>,
    tags: Tags,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
            tags: Tags::default(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m.tags = Tags {
            hermitian: true,
            unitary: true,
        };
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        OperatorMatrix {
            dim,
            data,
            tags: Tags::default(),
        }
    }

    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(OperatorMatrix {
            dim,
            data,
            tags: Tags::default(),
        })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::from_diagonal(&diag.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
        m.tags.hermitian = true;
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let n = cols.len();
        Self::from_fn(n, |r, c| cols[c][r])
    }

    pub fn from_faer(m: MatRef<'_, C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        Self::from_fn(n, |r, c| m[(r, c)])
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.dim, self.dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn tags(&self) -> Tags {
        self.tags
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
        self.tags = Tags::default();
    }

    #[inline]
    pub(crate) fn add_at(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] += v;
        self.tags = Tags::default();
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.dim).map(|r| self.get(r, c)).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, other.dim);
        let prod = self.as_faer() * other.as_faer();
        Self::from_faer(prod.as_ref())
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        let n = self.dim;
        let mut out = Self::from_fn(n, |r, c| self.data[c * n + r].conj());
        out.tags = self.tags;
        out
    }

    pub fn add(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        OperatorMatrix {
            dim: self.dim,
            data,
            tags: Tags {
                hermitian: self.tags.hermitian && other.tags.hermitian,
                unitary: false,
            },
        }
    }

    pub fn sub(&self, other: &OperatorMatrix) -> OperatorMatrix {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> OperatorMatrix {
        OperatorMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
            tags: Tags {
                hermitian: self.tags.hermitian && s.im == 0.0,
                unitary: self.tags.unitary && (s.norm() - 1.0).abs() < 1e-15,
            },
        }
    }

    pub fn scale_real(&self, s: f64) -> OperatorMatrix {
        self.scale(C64::new(s, 0.0))
    }

    /// `[self, other] = self other - other self`
    pub fn commutator(&self, other: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let sv = self
            .as_faer()
            .singular_values()
            .expect("singular value decomposition did not converge");
        sv.into_iter().fold(0.0, f64::max)
    }

    /// `max |M - M^dagger|`
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut d: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                d = d.max((self.data[r * n + c] - self.data[c * n + r].conj()).norm());
            }
        }
        d
    }

    /// `max |M^dagger M - I|`
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        g.max_abs_diff(&Self::identity(self.dim))
    }

    /// Verifies Hermiticity to `HERMITIAN_TOL` and sets the tag.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let d = self.hermiticity_defect();
        if d > HERMITIAN_TOL {
            return Err(Error::Structure {
                what: "hermitian",
                defect: d,
                tol: HERMITIAN_TOL,
            });
        }
        self.tags.hermitian = true;
        Ok(self)
    }

    /// Verifies unitarity to `UNITARY_TOL` and sets the tag.
    pub fn into_unitary(mut self) -> Result<Self> {
        let d = self.unitarity_defect();
        if d > UNITARY_TOL {
            return Err(Error::Structure {
                what: "unitary",
                defect: d,
                tol: UNITARY_TOL,
            });
        }
        self.tags.unitary = true;
        Ok(self)
    }

    pub(crate) fn with_tags(mut self, tags: Tags) -> Self {
        self.tags = tags;
        self
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `<u| M |v>`
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let mv = self.mul_vec(v);
        inner(u, &mv)
    }
}

/// `<u|v>` (conjugate-linear in `u`)
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalized quantum state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; the zero vector is rejected.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        for z in &mut amplitudes {
            *z /= n;
        }
        Ok(StateVector { amplitudes })
    }

    /// Wraps amplitudes that must already have unit norm (checked to 1e-8).
    pub fn from_unit(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::Domain(format!("state norm {n} deviates from 1")));
        }
        Ok(StateVector { amplitudes })
    }

    pub fn basis(dim: usize, j: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); dim];
        a[j] = C64::new(1.0, 0.0);
        StateVector { amplitudes: a }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn apply(&self, op: &OperatorMatrix) -> Result<StateVector> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.dim(),
            });
        }
        StateVector::normalized(op.mul_vec(&self.amplitudes))
    }
}

/// Rotates `v` so that its largest-magnitude component is real and positive.
///
/// Components within a relative 1e-9 of the maximum count as ties; the lowest index wins.
pub fn fix_phase(v: &mut [C64]) {
    let m = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if m == 0.0 {
        return;
    }
    let k = v.iter().position(|z| z.norm() >= m * (1.0 - 1e-9)).unwrap();
    let ph = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z *= ph;
    }
    v[k] = C64::new(v[k].norm(), 0.0);
}

/// Replaces an orthonormal basis of a subspace by a canonical one that depends only
/// on the subspace: pivots are chosen greedily by largest remaining projector diagonal.
fn canonical_basis(cols: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let d = cols.len();
    let n = cols[0].len();
    let basis = orthonormalize(cols);
    // diagonal of the projector onto the subspace
    let mut w: Vec<f64> = (0..n).map(|i| basis.iter().map(|q| q[i].norm_sqr()).sum()).collect();
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut piv = 0;
        for i in 1..n {
            if w[i] > w[piv] * (1.0 + 1e-12) {
                piv = i;
            }
        }
        // remaining projector applied to e_piv
        let mut v = vec![C64::new(0.0, 0.0); n];
        for q in &basis {
            let c = q[piv].conj();
            for i in 0..n {
                v[i] += q[i] * c;
            }
        }
        for u in &out {
            let c = u[piv].conj();
            for i in 0..n {
                v[i] -= u[i] * c;
            }
        }
        let nv = norm(&v);
        for z in &mut v {
            *z /= nv;
        }
        for i in 0..n {
            w[i] -= v[i].norm_sqr();
        }
        out.push(v);
    }
    out
}

/// Modified Gram-Schmidt, two passes.
fn orthonormalize(cols: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for u in &out {
                let p = inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= ui * p;
                }
            }
        }
        let nv = norm(&v);
        for z in &mut v {
            *z /= nv;
        }
        out.push(v);
    }
    out
}

/// Consecutive runs (in the given order) whose neighbouring keys differ by less than `tol`.
fn clusters(keys: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=keys.len() {
        if i == keys.len() || (keys[i] - keys[i - 1]).abs() >= tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[j]` belongs to `values[j]`.
    pub vectors: Vec<Vec<C64>>,
}

impl HermitianEigen {
    pub fn vector_matrix(&self) -> OperatorMatrix {
        OperatorMatrix::from_columns(&self.vectors)
    }
}

/// Hermitian eigensolver with reproducible output: degenerate eigenspaces (eigenvalues
/// within 1e-10 relative) get a canonical basis and every vector gets a fixed phase.
pub fn hermitian_eigen(h: &OperatorMatrix) -> Result<HermitianEigen> {
    let d = h.hermiticity_defect();
    if d > HERMITIAN_TOL {
        return Err(Error::Structure {
            what: "hermitian",
            defect: d,
            tol: HERMITIAN_TOL,
        });
    }
    let n = h.dim();
    let evd = h.as_faer().self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen {
        dim: n,
        max_abs: h.max_abs(),
        unitarity: f64::NAN,
    })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let mut vectors: Vec<Vec<C64>> = (0..n).map(|j| (0..n).map(|i| u[(i, j)]).collect()).collect();
    let scale = values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for (a, b) in clusters(&values, 1e-10 * scale) {
        if b - a > 1 {
            let canon = canonical_basis(&vectors[a..b]);
            for (k, v) in canon.into_iter().enumerate() {
                vectors[a + k] = v;
            }
        }
    }
    for v in &mut vectors {
        fix_phase(v);
    }
    Ok(HermitianEigen { values, vectors })
}

/// `exp(-i t H)` for Hermitian `H`, via its eigen-decomposition.
pub fn expm_hermitian(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    let eig = hermitian_eigen(h)?;
    let n = h.dim();
    let v = eig.vector_matrix();
    let phases: Vec<C64> = eig.values.iter().map(|&e| C64::from_polar(1.0, -t * e)).collect();
    let vd = OperatorMatrix::from_fn(n, |r, c| v.get(r, c) * phases[c]);
    Ok(vd.matmul(&v.adjoint()).with_tags(Tags {
        hermitian: false,
        unitary: true,
    }))
}

/// Eigen-decomposition of a unitary matrix.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    /// Eigenphases in `(-pi, pi]`.
    pub phases: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

/// Principal argument mapped into `(-pi, pi]`.
pub fn principal_arg(z: C64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Eigensystem of a unitary matrix, with orthonormal eigenvectors.
///
/// Eigenvalues closer than 1e-5 on the unit circle form a cluster that is re-solved by
/// Rayleigh-Ritz on its orthonormalized span (Hermitian solve of the rotated
/// anti-Hermitian part), so near-degenerate vectors come out orthogonal. Within a
/// cluster, phases closer than 1e-10 get a canonical basis.
pub fn unitary_eigen(u: &OperatorMatrix) -> Result<UnitaryEigen> {
    use std::f64::consts::PI;
    let n = u.dim();
    let fail = || Error::Eigen {
        dim: n,
        max_abs: u.max_abs(),
        unitarity: u.unitarity_defect(),
    };
    let evd = u.as_faer().eigen().map_err(|_| fail())?;
    let s = evd.S().column_vector();
    let vm = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<f64> = (0..n).map(|i| principal_arg(s[i])).collect();
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(fail());
    }
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let mut phases: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let mut vectors: Vec<Vec<C64>> = order
        .iter()
        .map(|&j| {
            let v: Vec<C64> = (0..n).map(|i| vm[(i, j)]).collect();
            let nv = norm(&v);
            v.into_iter().map(|z| z / nv).collect()
        })
        .collect();

    // group clusters, including one that wraps across +-pi
    let tol = 1e-5;
    let mut groups = clusters(&phases, tol);
    if groups.len() > 1 {
        let first = groups[0];
        let last = *groups.last().unwrap();
        let gap = phases[first.0] + 2.0 * PI - phases[last.1 - 1];
        if gap < tol {
            groups.pop();
            groups[0] = (last.0, first.1 + n);
        }
    }
    for (a, b) in groups {
        if b - a < 2 {
            continue;
        }
        let idx: Vec<usize> = (a..b).map(|i| i % n).collect();
        let cols: Vec<Vec<C64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
        let (ph, vs) = ritz_cluster(u, &cols, phases[idx[0]])?;
        for ((&i, p), v) in idx.iter().zip(ph).zip(vs) {
            phases[i] = p;
            vectors[i] = v;
        }
    }
    for v in &mut vectors {
        fix_phase(v);
    }
    let mut pairs: Vec<(f64, Vec<C64>)> = phases.into_iter().zip(vectors).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (phases, vectors) = pairs.into_iter().unzip();
    Ok(UnitaryEigen { phases, vectors })
}

fn ritz_cluster(u: &OperatorMatrix, cols: &[Vec<C64>], theta0: f64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let q = orthonormalize(cols);
    let k = q.len();
    let uq: Vec<Vec<C64>> = q.iter().map(|v| u.mul_vec(v)).collect();
    let rot = C64::from_polar(1.0, -theta0);
    let m = OperatorMatrix::from_fn(k, |r, c| inner(&q[r], &uq[c]) * rot);
    // (M - M^dagger) / 2i is Hermitian with eigenvalues sin(lambda - theta0)
    let kh = OperatorMatrix::from_fn(k, |r, c| (m.get(r, c) - m.get(c, r).conj()) * C64::new(0.0, -0.5));
    let eig = hermitian_eigen(&kh)?;
    let n = cols[0].len();
    let mut vs: Vec<Vec<C64>> = eig
        .vectors
        .iter()
        .map(|y| {
            let mut v = vec![C64::new(0.0, 0.0); n];
            for (qb, yb) in q.iter().zip(y) {
                for (vi, qi) in v.iter_mut().zip(qb) {
                    *vi += qi * yb;
                }
            }
            v
        })
        .collect();
    for (a, b) in clusters(&eig.values, 1e-10) {
        if b - a > 1 {
            let canon = canonical_basis(&vs[a..b]);
            for (j, v) in canon.into_iter().enumerate() {
                vs[a + j] = v;
            }
        }
    }
    let ph = vs.iter().map(|v| principal_arg(u.sandwich(v, v))).collect();
    Ok((ph, vs))
}
