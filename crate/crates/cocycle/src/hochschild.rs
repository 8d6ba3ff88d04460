//! Finite-dimensional algebras by structure constants, bimodules, the
//! Hochschild cochain complex with its star structure, separability
//! idempotents, and the idempotent splitting of cocycles.
//!
//! The differential is the standard one:
//!
//! ```text
//! (d f)(a1, ..., a_{n+1}) = a1 f(a2, ..., a_{n+1})
//!                         + sum_i (-1)^i f(a1, ..., a_i a_{i+1}, ..., a_{n+1})
//!                         + (-1)^{n+1} f(a1, ..., a_n) a_{n+1}
//! ```
//!
//! and the splitting of a cocycle `a` through a separability idempotent
//! `e = sum_i e'_i (x) e''_i` is `b(a1, ..., an) = sum_i e'_i a(e''_i, a1,
//! ..., an)`, the algebra analogue of Haar averaging.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::abelcoh::CohomologyDims;
use crate::error::{Error, Result};
use crate::finitegroup::FiniteGroup;
use crate::matnum::{CMatrix, CVector, Field, Matrix, SparseOperator, ToleranceConfig};

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

// Basis-tuple enumeration over A^n, lexicographic with the leftmost slot
// most significant (same order as the group-side enumeration).
pub(crate) fn tuple_count(dim: usize, n: usize) -> usize {
    dim.pow(n as u32)
}

pub(crate) fn tuple_index(dim: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * dim + i)
}

pub(crate) fn tuple_at(dim: usize, n: usize, mut index: usize) -> Vec<usize> {
    let mut tuple = vec![0; n];
    for slot in (0..n).rev() {
        tuple[slot] = index % dim;
        index /= dim;
    }
    tuple
}

/// One matrix block of a semisimple algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub size: usize,
}

/// Structure constants, unit, and star of a block-diagonal sum of matrix
/// algebras, basis of matrix units `E_{kl}` row-major within each block.
fn block_structure(blocks: &[Block], d: usize) -> (Vec<Complex64>, CVector, CMatrix) {
    let mut structure = vec![Complex64::default(); d * d * d];
    let mut unit = CVector::zeros(d);
    let mut star = CMatrix::zeros(d, d);
    let mut offset = 0;
    for b in blocks {
        let n = b.size;
        let idx = |k: usize, l: usize| offset + k * n + l;
        for k in 0..n {
            unit[idx(k, k)] = c64(1.0);
            for l in 0..n {
                // E_{kl} E_{pq} = delta_{lp} E_{kq}.
                for q in 0..n {
                    structure[(idx(k, l) * d + idx(l, q)) * d + idx(k, q)] = c64(1.0);
                }
                // (E_{kl})* = E_{lk}.
                star[(idx(l, k), idx(k, l))] = c64(1.0);
            }
        }
        offset += n * n;
    }
    (structure, unit, star)
}

/// A unital finite-dimensional algebra: structure constants `c[i][j][k]`
/// with `e_i e_j = sum_k c[i][j][k] e_k`, a unit vector, and optional star,
/// block, and group-algebra data.
#[derive(Debug, Clone)]
pub struct FinDimAlgebra {
    dim: usize,
    field: Field,
    structure: Vec<Complex64>,
    unit: CVector,
    star: Option<CMatrix>,
    blocks: Option<Vec<Block>>,
    group_algebra: Option<Arc<FiniteGroup>>,
}

impl FinDimAlgebra {
    pub fn new(
        dim: usize,
        field: Field,
        structure: Vec<Complex64>,
        unit: CVector,
        star: Option<CMatrix>,
        blocks: Option<Vec<Block>>,
    ) -> Result<FinDimAlgebra> {
        if structure.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "structure constants need {} entries, got {}",
                dim * dim * dim,
                structure.len()
            )));
        }
        if unit.len() != dim {
            return Err(Error::BadUnit(format!(
                "unit vector has {} entries for dimension {dim}",
                unit.len()
            )));
        }
        if field == Field::Real {
            let worst = structure
                .iter()
                .chain(unit.iter())
                .map(|z| z.im.abs())
                .fold(0.0, f64::max);
            if worst != 0.0 {
                return Err(Error::InvalidInput(
                    "real algebra with complex structure data".into(),
                ));
            }
        }
        let algebra = FinDimAlgebra {
            dim,
            field,
            structure,
            unit,
            star,
            blocks,
            group_algebra: None,
        };
        algebra.validate()?;
        Ok(algebra)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        // Associativity, exhaustive at desk scale.
        for i in 0..d {
            for j in 0..d {
                let ij = self.mul_basis(i, j);
                for k in 0..d {
                    let jk = self.mul_basis(j, k);
                    let lhs = self.mul(&ij, &self.basis_vector(k));
                    let rhs = self.mul(&self.basis_vector(i), &jk);
                    if (lhs - rhs).norm() > 1e-12 {
                        return Err(Error::NotAssociativeAlgebra { i, j, k });
                    }
                }
            }
        }
        for i in 0..d {
            let e_i = self.basis_vector(i);
            if (self.mul(&self.unit, &e_i) - &e_i).norm() > 1e-12
                || (self.mul(&e_i, &self.unit) - &e_i).norm() > 1e-12
            {
                return Err(Error::BadUnit(format!("unit fails on basis element {i}")));
            }
        }
        if let Some(s) = &self.star {
            if s.nrows() != d || s.ncols() != d {
                return Err(Error::BadStar("star matrix has the wrong shape".into()));
            }
            for i in 0..d {
                let e_i = self.basis_vector(i);
                let twice = self.star_apply(&self.star_apply(&e_i));
                if (twice - &e_i).norm() > 1e-12 {
                    return Err(Error::BadStar(format!("star is not involutive at {i}")));
                }
                for j in 0..d {
                    let lhs = self.star_apply(&self.mul_basis(i, j));
                    let rhs = self.mul(
                        &self.star_apply(&self.basis_vector(j)),
                        &self.star_apply(&e_i),
                    );
                    if (lhs - rhs).norm() > 1e-12 {
                        return Err(Error::BadStar(format!(
                            "star is not anti-multiplicative at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        if let Some(blocks) = &self.blocks {
            let total: usize = blocks.iter().map(|b| b.size * b.size).sum();
            if total != d {
                return Err(Error::BadBlocks(format!(
                    "blocks cover dimension {total}, algebra has {d}"
                )));
            }
            let (structure, unit, _) = block_structure(blocks, d);
            let diff = self
                .structure
                .iter()
                .zip(structure.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let unit_diff = (&self.unit - &unit).norm();
            if diff > 1e-12 || unit_diff > 1e-12 {
                return Err(Error::BadBlocks(
                    "structure constants differ from the block-diagonal model".into(),
                ));
            }
        }
        Ok(())
    }

    /// `M_n` over the field, basis of matrix units `E_{kl}` in row-major
    /// order.
    pub fn matrix_algebra(n: usize, field: Field) -> FinDimAlgebra {
        FinDimAlgebra::matrix_blocks(&[Block { size: n }], field).expect("matrix algebra is valid")
    }

    /// A direct sum of matrix blocks, basis ordered block by block.
    pub fn matrix_blocks(blocks: &[Block], field: Field) -> Result<FinDimAlgebra> {
        let d: usize = blocks.iter().map(|b| b.size * b.size).sum();
        if d == 0 {
            return Err(Error::InvalidInput("empty block list".into()));
        }
        let (structure, unit, star) = block_structure(blocks, d);
        let algebra = FinDimAlgebra {
            dim: d,
            field,
            structure,
            unit,
            star: Some(star),
            blocks: Some(blocks.to_vec()),
            group_algebra: None,
        };
        algebra.validate()?;
        Ok(algebra)
    }

    /// The group algebra of a finite group, basis indexed by elements,
    /// star `g -> g^{-1}` (conjugate-linear).
    pub fn group_algebra(group: Arc<FiniteGroup>, field: Field) -> FinDimAlgebra {
        let d = group.order();
        let mut structure = vec![Complex64::default(); d * d * d];
        for i in 0..d {
            for j in 0..d {
                structure[(i * d + j) * d + group.mul(i, j)] = c64(1.0);
            }
        }
        let mut unit = CVector::zeros(d);
        unit[group.identity()] = c64(1.0);
        let mut star = CMatrix::zeros(d, d);
        for g in group.elements() {
            star[(group.inv(g), g)] = c64(1.0);
        }
        FinDimAlgebra {
            dim: d,
            field,
            structure,
            unit,
            star: Some(star),
            blocks: None,
            group_algebra: Some(group),
        }
    }

    /// Dual numbers `F[eps]/(eps^2)`, basis `{1, eps}`; not semisimple.
    pub fn dual_numbers(field: Field) -> FinDimAlgebra {
        let d = 2;
        let mut structure = vec![Complex64::default(); d * d * d];
        structure[(0 * d + 0) * d + 0] = c64(1.0); // 1 * 1 = 1
        structure[(0 * d + 1) * d + 1] = c64(1.0); // 1 * eps = eps
        structure[(1 * d + 0) * d + 1] = c64(1.0); // eps * 1 = eps
        let mut unit = CVector::zeros(d);
        unit[0] = c64(1.0);
        FinDimAlgebra {
            dim: d,
            field,
            structure,
            unit,
            star: None,
            blocks: None,
            group_algebra: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn unit(&self) -> &CVector {
        &self.unit
    }

    pub fn blocks(&self) -> Option<&[Block]> {
        self.blocks.as_deref()
    }

    pub fn group_algebra_of(&self) -> Option<&Arc<FiniteGroup>> {
        self.group_algebra.as_ref()
    }

    pub fn has_star(&self) -> bool {
        self.star.is_some()
    }

    pub fn basis_vector(&self, i: usize) -> CVector {
        let mut v = CVector::zeros(self.dim);
        v[i] = c64(1.0);
        v
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    fn mul_basis(&self, i: usize, j: usize) -> CVector {
        CVector::from_fn(self.dim, |k, _| self.structure_constant(i, j, k))
    }

    pub fn mul(&self, x: &CVector, y: &CVector) -> CVector {
        let d = self.dim;
        let mut out = CVector::zeros(d);
        for i in 0..d {
            if x[i] == Complex64::default() {
                continue;
            }
            for j in 0..d {
                let coeff = x[i] * y[j];
                if coeff == Complex64::default() {
                    continue;
                }
                for k in 0..d {
                    out[k] += coeff * self.structure_constant(i, j, k);
                }
            }
        }
        out
    }

    /// Matrix of left multiplication by `x` on the algebra.
    pub fn left_mult_matrix(&self, x: &CVector) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |k, j| {
            (0..d).map(|i| x[i] * self.structure_constant(i, j, k)).sum()
        })
    }

    /// Matrix of right multiplication by `x`.
    pub fn right_mult_matrix(&self, x: &CVector) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |k, i| {
            (0..d).map(|j| x[j] * self.structure_constant(i, j, k)).sum()
        })
    }

    /// Inverse through the left-regular representation.
    pub fn inverse(&self, x: &CVector) -> Result<CVector> {
        let l = self.left_mult_matrix(x);
        let inv = l.try_inverse().ok_or(Error::Singular { sigma_min: 0.0 })?;
        Ok(inv * &self.unit)
    }

    pub fn star_apply(&self, x: &CVector) -> CVector {
        let s = self.star.as_ref().expect("star_apply requires a star");
        s * x.map(|z| z.conj())
    }

    pub fn try_star_apply(&self, x: &CVector) -> Result<CVector> {
        match &self.star {
            Some(s) => Ok(s * x.map(|z| z.conj())),
            None => Err(Error::MissingStar("algebra has no star structure".into())),
        }
    }
}

/// An `A`-bimodule: commuting left and right actions on a vector space,
/// with an optional compatible star.
#[derive(Debug, Clone)]
pub struct Bimodule {
    algebra: Arc<FinDimAlgebra>,
    dim: usize,
    left: Vec<CMatrix>,
    right: Vec<CMatrix>,
    star: Option<CMatrix>,
}

impl Bimodule {
    pub fn new(
        algebra: Arc<FinDimAlgebra>,
        left: Vec<CMatrix>,
        right: Vec<CMatrix>,
        star: Option<CMatrix>,
    ) -> Result<Bimodule> {
        let d = algebra.dim();
        if left.len() != d || right.len() != d {
            return Err(Error::BadBimodule(format!(
                "need {d} left and right action matrices"
            )));
        }
        let e = left.first().map(|m| m.nrows()).unwrap_or(0);
        for m in left.iter().chain(right.iter()) {
            if m.nrows() != e || m.ncols() != e {
                return Err(Error::BadBimodule("action matrices differ in shape".into()));
            }
        }
        let module = Bimodule {
            algebra,
            dim: e,
            left,
            right,
            star,
        };
        module.validate()?;
        Ok(module)
    }

    fn validate(&self) -> Result<()> {
        let a = &self.algebra;
        let d = a.dim();
        let id = CMatrix::identity(self.dim, self.dim);
        let lu = self.left_of(a.unit());
        let ru = self.right_of(a.unit());
        if (&lu - &id).norm() > 1e-12 || (&ru - &id).norm() > 1e-12 {
            return Err(Error::BadBimodule("actions are not unital".into()));
        }
        for i in 0..d {
            for j in 0..d {
                let prod = a.mul_basis(i, j);
                let l_prod = self.left_of(&prod);
                if (&self.left[i] * &self.left[j] - &l_prod).norm() > 1e-12 {
                    return Err(Error::BadBimodule(format!(
                        "left action fails multiplicativity at ({i}, {j})"
                    )));
                }
                // Right action reverses: m (xy) = (m x) y.
                let r_prod = self.right_of(&prod);
                if (&self.right[j] * &self.right[i] - &r_prod).norm() > 1e-12 {
                    return Err(Error::BadBimodule(format!(
                        "right action fails anti-multiplicativity at ({i}, {j})"
                    )));
                }
                if (&self.left[i] * &self.right[j] - &self.right[j] * &self.left[i]).norm() > 1e-12
                {
                    return Err(Error::BadBimodule(format!(
                        "left and right actions fail to commute at ({i}, {j})"
                    )));
                }
            }
        }
        if let Some(s_e) = &self.star {
            if !self.algebra.has_star() {
                return Err(Error::BadStar(
                    "bimodule star requires an algebra star".into(),
                ));
            }
            for i in 0..d {
                let ai_star = self.algebra.star_apply(&self.algebra.basis_vector(i));
                for col in 0..self.dim {
                    let m = CVector::from_fn(self.dim, |r, _| if r == col { c64(1.0) } else { c64(0.0) });
                    // (a m)* = m* a* and (m a)* = a* m*.
                    let lhs = self.star_vec(&(&self.left[i] * &m));
                    let rhs = &self.right_of(&ai_star) * &self.star_vec(&m);
                    if (lhs - rhs).norm() > 1e-12 {
                        return Err(Error::BadStar(format!(
                            "(am)* = m* a* fails at basis ({i}, {col})"
                        )));
                    }
                    let lhs = self.star_vec(&(&self.right[i] * &m));
                    let rhs = &self.left_of(&ai_star) * &self.star_vec(&m);
                    if (lhs - rhs).norm() > 1e-12 {
                        return Err(Error::BadStar(format!(
                            "(ma)* = a* m* fails at basis ({i}, {col})"
                        )));
                    }
                }
            }
            let _ = s_e;
        }
        Ok(())
    }

    /// The regular bimodule: `A` acting on itself by multiplication.
    pub fn regular(algebra: Arc<FinDimAlgebra>) -> Bimodule {
        let d = algebra.dim();
        let left = (0..d)
            .map(|i| algebra.left_mult_matrix(&algebra.basis_vector(i)))
            .collect();
        let right = (0..d)
            .map(|i| algebra.right_mult_matrix(&algebra.basis_vector(i)))
            .collect();
        let star = algebra.star_matrix_clone();
        Bimodule {
            dim: d,
            left,
            right,
            star,
            algebra,
        }
    }

    pub fn algebra(&self) -> &Arc<FinDimAlgebra> {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_star(&self) -> bool {
        self.star.is_some()
    }

    pub fn left_basis(&self, i: usize) -> &CMatrix {
        &self.left[i]
    }

    pub fn right_basis(&self, i: usize) -> &CMatrix {
        &self.right[i]
    }

    /// Left action of an arbitrary algebra element.
    pub fn left_of(&self, x: &CVector) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (i, m) in self.left.iter().enumerate() {
            if x[i] != Complex64::default() {
                acc += m * x[i];
            }
        }
        acc
    }

    pub fn right_of(&self, x: &CVector) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (i, m) in self.right.iter().enumerate() {
            if x[i] != Complex64::default() {
                acc += m * x[i];
            }
        }
        acc
    }

    pub fn star_vec(&self, v: &CVector) -> CVector {
        let s = self.star.as_ref().expect("star_vec requires a star");
        s * v.map(|z| z.conj())
    }

    pub fn try_star_vec(&self, v: &CVector) -> Result<CVector> {
        match &self.star {
            Some(s) => Ok(s * v.map(|z| z.conj())),
            None => Err(Error::MissingStar("bimodule has no star structure".into())),
        }
    }

    /// Operator-norm bound for the two module actions on basis elements;
    /// the constant `C` reported alongside splittings.
    pub fn action_norm_bound(&self) -> f64 {
        self.left
            .iter()
            .chain(self.right.iter())
            .map(|m| Matrix::complex(m.clone()).spectral_norm())
            .fold(0.0, f64::max)
    }
}

impl FinDimAlgebra {
    fn star_matrix_clone(&self) -> Option<CMatrix> {
        self.star.clone()
    }
}

/// A Hochschild `n`-cochain: a multilinear map `A^n -> E` stored densely
/// over basis tuples.
#[derive(Debug, Clone)]
pub struct HochschildCochain {
    bimodule: Arc<Bimodule>,
    degree: usize,
    values: Vec<CVector>,
}

impl HochschildCochain {
    pub fn new(
        bimodule: Arc<Bimodule>,
        degree: usize,
        values: Vec<CVector>,
    ) -> Result<HochschildCochain> {
        let d = bimodule.algebra().dim();
        let expected = tuple_count(d, degree);
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "degree-{degree} cochain needs {expected} values, got {}",
                values.len()
            )));
        }
        for v in &values {
            if v.len() != bimodule.dim() {
                return Err(Error::DimensionMismatch(
                    "cochain value dimension differs from the bimodule".into(),
                ));
            }
        }
        Ok(HochschildCochain {
            bimodule,
            degree,
            values,
        })
    }

    pub fn zero(bimodule: Arc<Bimodule>, degree: usize) -> HochschildCochain {
        let d = bimodule.algebra().dim();
        let e = bimodule.dim();
        HochschildCochain {
            degree,
            values: vec![CVector::zeros(e); tuple_count(d, degree)],
            bimodule,
        }
    }

    pub fn from_fn(
        bimodule: Arc<Bimodule>,
        degree: usize,
        f: impl Fn(&[usize]) -> CVector,
    ) -> HochschildCochain {
        let d = bimodule.algebra().dim();
        let values = (0..tuple_count(d, degree))
            .map(|idx| f(&tuple_at(d, degree, idx)))
            .collect();
        HochschildCochain {
            bimodule,
            degree,
            values,
        }
    }

    pub fn random(bimodule: &Arc<Bimodule>, degree: usize, rng: &mut impl Rng) -> HochschildCochain {
        let d = bimodule.algebra().dim();
        let e = bimodule.dim();
        let field = bimodule.algebra().field();
        let values = (0..tuple_count(d, degree))
            .map(|_| {
                CVector::from_fn(e, |_, _| {
                    let im = if field == Field::Complex {
                        rng.gen_range(-1.0..1.0)
                    } else {
                        0.0
                    };
                    Complex64::new(rng.gen_range(-1.0..1.0), im)
                })
            })
            .collect();
        HochschildCochain {
            bimodule: bimodule.clone(),
            degree,
            values,
        }
    }

    pub fn bimodule(&self) -> &Arc<Bimodule> {
        &self.bimodule
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[CVector] {
        &self.values
    }

    pub fn value(&self, tuple: &[usize]) -> &CVector {
        &self.values[tuple_index(self.bimodule.algebra().dim(), tuple)]
    }

    /// Multilinear evaluation on arbitrary coordinate vectors.
    pub fn evaluate(&self, args: &[CVector]) -> CVector {
        assert_eq!(args.len(), self.degree);
        let d = self.bimodule.algebra().dim();
        let mut out = CVector::zeros(self.bimodule.dim());
        for (idx, value) in self.values.iter().enumerate() {
            let tuple = tuple_at(d, self.degree, idx);
            let mut coeff = c64(1.0);
            for (slot, &i) in tuple.iter().enumerate() {
                coeff *= args[slot][i];
                if coeff == Complex64::default() {
                    break;
                }
            }
            if coeff != Complex64::default() {
                out += value * coeff;
            }
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &HochschildCochain) -> HochschildCochain {
        assert_eq!(self.degree, other.degree);
        HochschildCochain {
            bimodule: self.bimodule.clone(),
            degree: self.degree,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &HochschildCochain) -> HochschildCochain {
        assert_eq!(self.degree, other.degree);
        HochschildCochain {
            bimodule: self.bimodule.clone(),
            degree: self.degree,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, z: Complex64) -> HochschildCochain {
        HochschildCochain {
            bimodule: self.bimodule.clone(),
            degree: self.degree,
            values: self.values.iter().map(|v| v * z).collect(),
        }
    }
}

fn sign(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The Hochschild differential `C^n(A, E) -> C^{n+1}(A, E)`.
pub fn hochschild_differential(f: &HochschildCochain) -> HochschildCochain {
    let bimodule = f.bimodule().clone();
    let algebra = bimodule.algebra().clone();
    let d = algebra.dim();
    let n = f.degree();
    let values = (0..tuple_count(d, n + 1))
        .map(|idx| {
            let gamma = tuple_at(d, n + 1, idx);
            let mut acc = bimodule.left_basis(gamma[0]) * f.value(&gamma[1..]);
            let mut merged = vec![0usize; n];
            for t in 1..=n {
                merged.clear();
                merged.extend_from_slice(&gamma[..t - 1]);
                merged.push(0);
                merged.extend_from_slice(&gamma[t + 1..]);
                let s = c64(sign(t));
                for k in 0..d {
                    let coeff = algebra.structure_constant(gamma[t - 1], gamma[t], k);
                    if coeff == Complex64::default() {
                        continue;
                    }
                    merged[t - 1] = k;
                    acc += f.value(&merged) * (coeff * s);
                }
            }
            acc += bimodule.right_basis(gamma[n]) * f.value(&gamma[..n]) * c64(sign(n + 1));
            acc
        })
        .collect();
    HochschildCochain {
        bimodule,
        degree: n + 1,
        values,
    }
}

/// `||d f||_sup`.
pub fn hochschild_cocycle_residual(f: &HochschildCochain) -> f64 {
    hochschild_differential(f).sup_norm()
}

/// The differential as a sparse operator on coordinates
/// `tuple_index * dim(E) + coordinate`.
pub fn hochschild_differential_operator(bimodule: &Bimodule, n: usize) -> SparseOperator {
    let algebra = bimodule.algebra();
    let d = algebra.dim();
    let e = bimodule.dim();
    let rows = tuple_count(d, n + 1) * e;
    let cols = tuple_count(d, n) * e;
    let mut op = SparseOperator::new(rows, cols);
    for idx in 0..tuple_count(d, n + 1) {
        let gamma = tuple_at(d, n + 1, idx);
        let row_base = idx * e;
        let left = bimodule.left_basis(gamma[0]);
        let col_base = tuple_index(d, &gamma[1..]) * e;
        for r in 0..e {
            for c in 0..e {
                op.add(row_base + r, col_base + c, left[(r, c)]);
            }
        }
        let mut merged = vec![0usize; n];
        for t in 1..=n {
            merged.clear();
            merged.extend_from_slice(&gamma[..t - 1]);
            merged.push(0);
            merged.extend_from_slice(&gamma[t + 1..]);
            let s = c64(sign(t));
            for k in 0..d {
                let coeff = algebra.structure_constant(gamma[t - 1], gamma[t], k);
                if coeff == Complex64::default() {
                    continue;
                }
                merged[t - 1] = k;
                let col = tuple_index(d, &merged) * e;
                for r in 0..e {
                    op.add(row_base + r, col + r, coeff * s);
                }
            }
        }
        let right = bimodule.right_basis(gamma[n]);
        let col_base = tuple_index(d, &gamma[..n]) * e;
        let s = c64(sign(n + 1));
        for r in 0..e {
            for c in 0..e {
                op.add(row_base + r, col_base + c, right[(r, c)] * s);
            }
        }
    }
    op
}

/// `dim Z^n`, `dim B^n`, `dim H^n` for the Hochschild complex.
pub fn hochschild_cohomology_dims(
    bimodule: &Bimodule,
    n: usize,
    tol: &ToleranceConfig,
) -> CohomologyDims {
    let (_, nullity) = hochschild_differential_operator(bimodule, n).rank_nullity(tol);
    let coboundaries = if n == 0 {
        0
    } else {
        hochschild_differential_operator(bimodule, n - 1)
            .rank_nullity(tol)
            .0
    };
    CohomologyDims {
        cocycles: nullity,
        coboundaries,
        cohomology: nullity - coboundaries.min(nullity),
    }
}

/// A separability idempotent `e = sum_i e'_i (x) e''_i` with `a e = e a`
/// and `mult(e) = 1`; constructed from declared block structure or the
/// group-algebra formula, never discovered.
#[derive(Debug, Clone)]
pub struct SeparabilityIdempotent {
    algebra: Arc<FinDimAlgebra>,
    pairs: Vec<(CVector, CVector)>,
}

impl SeparabilityIdempotent {
    pub fn for_algebra(algebra: &Arc<FinDimAlgebra>) -> Result<SeparabilityIdempotent> {
        if let Some(group) = algebra.group_algebra_of() {
            // e = (1/|G|) sum_g g (x) g^{-1}.
            let m = group.order();
            let weight = c64(1.0 / m as f64);
            let pairs = group
                .elements()
                .map(|g| {
                    (
                        algebra.basis_vector(g) * weight,
                        algebra.basis_vector(group.inv(g)),
                    )
                })
                .collect();
            let idem = SeparabilityIdempotent {
                algebra: algebra.clone(),
                pairs,
            };
            idem.validate(1e-12)?;
            return Ok(idem);
        }
        if let Some(blocks) = algebra.blocks() {
            // Per block M_n: e = sum_i E_{i1} (x) E_{1i}.
            let mut pairs = Vec::new();
            let mut offset = 0;
            for b in blocks {
                let n = b.size;
                let idx = |k: usize, l: usize| offset + k * n + l;
                for i in 0..n {
                    pairs.push((
                        algebra.basis_vector(idx(i, 0)),
                        algebra.basis_vector(idx(0, i)),
                    ));
                }
                offset += n * n;
            }
            let idem = SeparabilityIdempotent {
                algebra: algebra.clone(),
                pairs,
            };
            idem.validate(1e-12)?;
            return Ok(idem);
        }
        Err(Error::NotKnownSeparable(
            "algebra declares neither blocks nor a group-algebra tag".into(),
        ))
    }

    pub fn from_pairs(
        algebra: Arc<FinDimAlgebra>,
        pairs: Vec<(CVector, CVector)>,
        tol: f64,
    ) -> Result<SeparabilityIdempotent> {
        let idem = SeparabilityIdempotent { algebra, pairs };
        idem.validate(tol)?;
        Ok(idem)
    }

    pub fn pairs(&self) -> &[(CVector, CVector)] {
        &self.pairs
    }

    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    /// Checks `a e = e a` on every basis element and `mult(e) = 1`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let a = &self.algebra;
        let d = a.dim();
        // Coefficient matrix of the tensor: T[p][q] = sum_i x_i[p] y_i[q].
        let mut t = CMatrix::zeros(d, d);
        for (x, y) in &self.pairs {
            t += x * y.transpose();
        }
        for i in 0..d {
            let l = a.left_mult_matrix(&a.basis_vector(i));
            let r = a.right_mult_matrix(&a.basis_vector(i));
            let defect = (&l * &t - &t * r.transpose()).norm();
            if defect > tol * t.norm().max(1.0) {
                return Err(Error::NotKnownSeparable(format!(
                    "centrality a e = e a fails at basis {i} by {defect:.3e}"
                )));
            }
        }
        let mut mult = CVector::zeros(d);
        for (x, y) in &self.pairs {
            mult += a.mul(x, y);
        }
        let unit_defect = (mult - a.unit()).norm();
        if unit_defect > tol {
            return Err(Error::NotKnownSeparable(format!(
                "multiplication(e) differs from the unit by {unit_defect:.3e}"
            )));
        }
        Ok(())
    }
}

/// Statistics reported with a splitting: the realized norm ratio and the
/// action-norm bound `C` of the underlying bimodule.
#[derive(Debug, Clone, Copy)]
pub struct SplitStats {
    pub norm_ratio: f64,
    pub action_norm_bound: f64,
}

/// The idempotent splitting: for a cocycle `a` of degree `n + 1` returns
/// `b(a1, ..., an) = sum_i e'_i a(e''_i, a1, ..., an)` with `d b = a`.
pub fn hochschild_split(
    a: &HochschildCochain,
    idem: &SeparabilityIdempotent,
    tol: &ToleranceConfig,
) -> Result<(HochschildCochain, SplitStats)> {
    let residual = hochschild_cocycle_residual(a);
    if residual > tol.residual_tol {
        return Err(Error::NotACocycle {
            residual,
            tol: tol.residual_tol,
        });
    }
    let b = hochschild_split_unchecked(a, idem);
    let a_norm = a.sup_norm();
    let stats = SplitStats {
        norm_ratio: if a_norm > 0.0 { b.sup_norm() / a_norm } else { 0.0 },
        action_norm_bound: a.bimodule().action_norm_bound(),
    };
    Ok((b, stats))
}

/// The splitting formula without the cocycle precondition.
pub fn hochschild_split_unchecked(
    a: &HochschildCochain,
    idem: &SeparabilityIdempotent,
) -> HochschildCochain {
    assert!(a.degree() >= 1, "cannot split a degree-0 cochain");
    let bimodule = a.bimodule().clone();
    let d = bimodule.algebra().dim();
    let n = a.degree() - 1;
    let values = (0..tuple_count(d, n))
        .map(|idx| {
            let tau = tuple_at(d, n, idx);
            let mut extended = Vec::with_capacity(n + 1);
            extended.push(0usize);
            extended.extend_from_slice(&tau);
            let mut acc = CVector::zeros(bimodule.dim());
            for (e1, e2) in idem.pairs() {
                // a(e''_i, tau) by linearity in the first slot.
                let mut inner = CVector::zeros(bimodule.dim());
                for j in 0..d {
                    if e2[j] == Complex64::default() {
                        continue;
                    }
                    extended[0] = j;
                    inner += a.value(&extended) * e2[j];
                }
                acc += bimodule.left_of(e1) * inner;
            }
            acc
        })
        .collect();
    HochschildCochain {
        bimodule,
        degree: n,
        values,
    }
}

/// The star of a cochain, `f*(a1, ..., an) = f(an*, ..., a1*)*`; involutive,
/// and intertwining the differentials up to parity:
/// `d(f*) = (-1)^{n+1} (d f)*` for `f` of degree `n`, so exactly at odd
/// degrees. Kernels and images are preserved in every degree, which is what
/// self-adjoint cocycle spaces require.
pub fn cochain_star(f: &HochschildCochain) -> Result<HochschildCochain> {
    let bimodule = f.bimodule().clone();
    let algebra = bimodule.algebra().clone();
    if !algebra.has_star() || !bimodule.has_star() {
        return Err(Error::MissingStar(
            "cochain star needs star structures on the algebra and the bimodule".into(),
        ));
    }
    let d = algebra.dim();
    let n = f.degree();
    let starred_basis: Vec<CVector> = (0..d)
        .map(|i| algebra.star_apply(&algebra.basis_vector(i)))
        .collect();
    let values = (0..tuple_count(d, n))
        .map(|idx| {
            let tuple = tuple_at(d, n, idx);
            // Arguments reversed and starred, expanded multilinearly.
            let args: Vec<CVector> = tuple
                .iter()
                .rev()
                .map(|&i| starred_basis[i].clone())
                .collect();
            bimodule.star_vec(&f.evaluate(&args))
        })
        .collect();
    Ok(HochschildCochain {
        bimodule,
        degree: n,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testrng;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn m2() -> Arc<FinDimAlgebra> {
        Arc::new(FinDimAlgebra::matrix_algebra(2, Field::Complex))
    }

    #[test]
    fn matrix_algebra_axioms() {
        let a = m2();
        // E01 * E10 = E00, E10 * E01 = E11.
        let e01 = a.basis_vector(1);
        let e10 = a.basis_vector(2);
        let p = a.mul(&e01, &e10);
        assert!((p - a.basis_vector(0)).norm() < 1e-15);
        let q = a.mul(&e10, &e01);
        assert!((q - a.basis_vector(3)).norm() < 1e-15);
        assert!(a.has_star());
    }

    #[test]
    fn differential_degree_zero_is_commutator() {
        let a = m2();
        let bim = Arc::new(Bimodule::regular(a.clone()));
        // m = E01; d(m)(a) = a m - m a.
        let m = a.basis_vector(1);
        let f = HochschildCochain::new(bim.clone(), 0, vec![m.clone()]).unwrap();
        let df = hochschild_differential(&f);
        for i in 0..4 {
            let ei = a.basis_vector(i);
            let expected = a.mul(&ei, &m) - a.mul(&m, &ei);
            assert!((df.value(&[i]) - &expected).norm() < 1e-14);
        }
    }

    #[test]
    fn inner_derivation_is_a_cocycle() {
        // D = [E01, .] on M2: a derivation, so d(D) = 0.
        let a = m2();
        let bim = Arc::new(Bimodule::regular(a.clone()));
        let x = a.basis_vector(1);
        let d_cochain = HochschildCochain::from_fn(bim, 1, |t| {
            let ei = a.basis_vector(t[0]);
            a.mul(&x, &ei) - a.mul(&ei, &x)
        });
        assert!(hochschild_cocycle_residual(&d_cochain) < 1e-14);
    }

    #[test]
    fn differential_squares_to_zero() {
        let mut rng = testrng(137);
        let a = m2();
        let bim = Arc::new(Bimodule::regular(a));
        for degree in 0..3 {
            let f = HochschildCochain::random(&bim, degree, &mut rng);
            let ddf = hochschild_differential(&hochschild_differential(&f));
            assert!(ddf.sup_norm() < 1e-12 * f.sup_norm().max(1.0));
        }
    }

    #[test]
    fn cohomology_dims_match_hand_counts() {
        let t = tol();
        // M2 on itself: dim B^1 = 4 - 1 = 3 (center is scalar), H^1 = 0.
        let a = m2();
        let bim = Bimodule::regular(a);
        let dims = hochschild_cohomology_dims(&bim, 1, &t);
        assert_eq!((dims.cocycles, dims.coboundaries, dims.cohomology), (3, 3, 0));

        // C^2 regular: commutative separable, all three vanish.
        let c2 = Arc::new(FinDimAlgebra::matrix_blocks(
            &[Block { size: 1 }, Block { size: 1 }],
            Field::Complex,
        )
        .unwrap());
        let bim = Bimodule::regular(c2);
        let dims = hochschild_cohomology_dims(&bim, 1, &t);
        assert_eq!((dims.cocycles, dims.coboundaries, dims.cohomology), (0, 0, 0));

        // Dual numbers: eps d/d-eps is a non-inner derivation.
        let dual = Arc::new(FinDimAlgebra::dual_numbers(Field::Real));
        let bim = Bimodule::regular(dual);
        let dims = hochschild_cohomology_dims(&bim, 1, &t);
        assert_eq!(dims.coboundaries, 0);
        assert!(dims.cohomology >= 1);
        assert_eq!((dims.cocycles, dims.cohomology), (1, 1));
    }

    #[test]
    fn dual_numbers_non_inner_derivation_exhibited() {
        let dual = Arc::new(FinDimAlgebra::dual_numbers(Field::Real));
        let bim = Arc::new(Bimodule::regular(dual.clone()));
        // D(1) = 0, D(eps) = eps.
        let d_cochain = HochschildCochain::new(
            bim,
            1,
            vec![CVector::zeros(2), dual.basis_vector(1)],
        )
        .unwrap();
        assert!(hochschild_cocycle_residual(&d_cochain) < 1e-15);
    }

    #[test]
    fn separability_idempotents_validate() {
        // C^2: e = e1 (x) e1 + e2 (x) e2.
        let c2 = Arc::new(
            FinDimAlgebra::matrix_blocks(&[Block { size: 1 }, Block { size: 1 }], Field::Complex)
                .unwrap(),
        );
        let idem = SeparabilityIdempotent::for_algebra(&c2).unwrap();
        assert_eq!(idem.size(), 2);
        for (x, y) in idem.pairs() {
            assert!((x - y).norm() < 1e-15);
        }

        // M2: e = E00 (x) E00 + E10 (x) E01 (row-major indices 0 and 2, 1).
        let a = m2();
        let idem = SeparabilityIdempotent::for_algebra(&a).unwrap();
        assert_eq!(idem.size(), 2);
        idem.validate(1e-14).unwrap();

        // Group algebra C(Z/2): e = (1/2)(1 (x) 1 + s (x) s).
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let cz2 = Arc::new(FinDimAlgebra::group_algebra(z2, Field::Complex));
        let idem = SeparabilityIdempotent::for_algebra(&cz2).unwrap();
        assert_eq!(idem.size(), 2);
        for (g, (x, y)) in idem.pairs().iter().enumerate() {
            assert!((x[g].re - 0.5).abs() < 1e-15);
            assert!((y[g].re - 1.0).abs() < 1e-15);
        }

        // Dual numbers are not known separable.
        let dual = Arc::new(FinDimAlgebra::dual_numbers(Field::Real));
        assert!(matches!(
            SeparabilityIdempotent::for_algebra(&dual),
            Err(Error::NotKnownSeparable(_))
        ));
    }

    #[test]
    fn split_inverts_differential_on_random_cocycles() {
        let mut rng = testrng(139);
        let t = tol();
        let algebras: Vec<Arc<FinDimAlgebra>> = vec![
            Arc::new(
                FinDimAlgebra::matrix_blocks(&[Block { size: 1 }, Block { size: 1 }], Field::Complex)
                    .unwrap(),
            ),
            m2(),
            Arc::new(
                FinDimAlgebra::matrix_blocks(&[Block { size: 2 }, Block { size: 1 }], Field::Complex)
                    .unwrap(),
            ),
            Arc::new(FinDimAlgebra::group_algebra(
                Arc::new(FiniteGroup::cyclic(3)),
                Field::Complex,
            )),
        ];
        for a in &algebras {
            let idem = SeparabilityIdempotent::for_algebra(a).unwrap();
            let bim = Arc::new(Bimodule::regular(a.clone()));
            for degree in 1..=2 {
                for _ in 0..5 {
                    let seed = HochschildCochain::random(&bim, degree - 1, &mut rng);
                    let cocycle = hochschild_differential(&seed);
                    let (b, stats) = hochschild_split(&cocycle, &idem, &t).unwrap();
                    let err = hochschild_differential(&b).sub(&cocycle).sup_norm();
                    assert!(err < 1e-10, "split residual {err:.3e} at degree {degree}");
                    assert!(stats.norm_ratio.is_finite());
                }
            }
        }
    }

    #[test]
    fn split_of_zero_is_zero() {
        let a = m2();
        let idem = SeparabilityIdempotent::for_algebra(&a).unwrap();
        let bim = Arc::new(Bimodule::regular(a));
        let zero = HochschildCochain::zero(bim, 2);
        let (b, _) = hochschild_split(&zero, &idem, &tol()).unwrap();
        assert!(b.sup_norm() == 0.0);
    }

    #[test]
    fn split_rejects_non_cocycles() {
        let mut rng = testrng(149);
        let a = m2();
        let idem = SeparabilityIdempotent::for_algebra(&a).unwrap();
        let bim = Arc::new(Bimodule::regular(a));
        let junk = HochschildCochain::random(&bim, 1, &mut rng);
        assert!(matches!(
            hochschild_split(&junk, &idem, &tol()),
            Err(Error::NotACocycle { .. })
        ));
    }

    #[test]
    fn split_innerness_witness_for_derivations() {
        // For a derivation D, b = sum e'_i D(e''_i) satisfies d(b) = D;
        // check against the hand inner element for D = [E01, .].
        let a = m2();
        let idem = SeparabilityIdempotent::for_algebra(&a).unwrap();
        let bim = Arc::new(Bimodule::regular(a.clone()));
        let x = a.basis_vector(1);
        let d_cochain = HochschildCochain::from_fn(bim.clone(), 1, |t| {
            let ei = a.basis_vector(t[0]);
            a.mul(&x, &ei) - a.mul(&ei, &x)
        });
        let (b, _) = hochschild_split(&d_cochain, &idem, &tol()).unwrap();
        let db = hochschild_differential(&b);
        assert!(db.sub(&d_cochain).sup_norm() < 1e-12);
        // The witness differs from -x by a central element only.
        let diff = b.value(&[]) + &x;
        let off_center = (a.mul(&diff, &a.basis_vector(1)) - a.mul(&a.basis_vector(1), &diff)).norm();
        assert!(off_center < 1e-12);
    }

    #[test]
    fn star_is_involutive_and_intertwines_differential_up_to_parity() {
        let mut rng = testrng(151);
        let a = m2();
        let bim = Arc::new(Bimodule::regular(a));
        for degree in 0..3usize {
            let f = HochschildCochain::random(&bim, degree, &mut rng);
            let ff = cochain_star(&cochain_star(&f).unwrap()).unwrap();
            assert!(ff.sub(&f).sup_norm() < 1e-12);
            // d(f*) = (-1)^{n+1} (d f)*.
            let parity = if degree % 2 == 0 { -1.0 } else { 1.0 };
            let lhs = hochschild_differential(&cochain_star(&f).unwrap());
            let rhs = cochain_star(&hochschild_differential(&f))
                .unwrap()
                .scale(c64(parity));
            assert!(
                lhs.sub(&rhs).sup_norm() < 1e-12,
                "signed intertwining fails at degree {degree}"
            );
            // In particular stars of cocycles are cocycles.
            let z = hochschild_differential(&f);
            let dz_star = hochschild_differential(&cochain_star(&z).unwrap());
            assert!(dz_star.sup_norm() < 1e-11 * z.sup_norm().max(1.0));
        }
    }

    #[test]
    fn identity_cochain_is_self_adjoint() {
        let a = m2();
        let bim = Arc::new(Bimodule::regular(a.clone()));
        let id_cochain = HochschildCochain::from_fn(bim, 1, |t| a.basis_vector(t[0]));
        let starred = cochain_star(&id_cochain).unwrap();
        assert!(starred.sub(&id_cochain).sup_norm() < 1e-14);
    }

    #[test]
    fn star_requires_structure() {
        let dual = Arc::new(FinDimAlgebra::dual_numbers(Field::Real));
        let bim = Arc::new(Bimodule::regular(dual));
        let f = HochschildCochain::zero(bim, 1);
        assert!(matches!(cochain_star(&f), Err(Error::MissingStar(_))));
    }

    #[test]
    fn group_algebra_split_matches_group_split_on_z2_and_z3() {
        // The group-algebra idempotent specializes the Hochschild splitting
        // back to the group-cohomology averaging splitting under the
        // dictionary between the two complexes (trivial-module version:
        // both average over the group).
        let t = tol();
        let mut rng = testrng(157);
        for k in [2usize, 3] {
            let group = Arc::new(FiniteGroup::cyclic(k));
            let cg = Arc::new(FinDimAlgebra::group_algebra(group.clone(), Field::Complex));
            let idem = SeparabilityIdempotent::for_algebra(&cg).unwrap();
            let bim = Arc::new(Bimodule::regular(cg.clone()));
            let seed = HochschildCochain::random(&bim, 0, &mut rng);
            let cocycle = hochschild_differential(&seed);
            let (b, _) = hochschild_split(&cocycle, &idem, &t).unwrap();
            // Direct group-style average: b = sum_g (1/|G|) g a(g^{-1}).
            let direct = {
                let mut acc = CVector::zeros(cg.dim());
                for g in group.elements() {
                    let term = cg.mul(
                        &cg.basis_vector(g),
                        cocycle.value(&[group.inv(g)]),
                    );
                    acc += term / c64(k as f64);
                }
                acc
            };
            assert!((b.value(&[]) - &direct).norm() < 1e-12);
        }
    }
}
