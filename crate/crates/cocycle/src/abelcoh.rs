//! The abelian cochain complex `C^n(G, E)`: differential, cohomology
//! dimensions by rank computation, the averaging splitting, and the
//! normalized subcomplex.
//!
//! The differential convention is fixed once, inhomogeneous:
//!
//! ```text
//! (d f)(g1, ..., g_{n+1}) = g1 . f(g2, ..., g_{n+1})
//!                         + sum_i (-1)^i f(g1, ..., g_i g_{i+1}, ..., g_{n+1})
//!                         + (-1)^{n+1} f(g1, ..., g_n)
//! ```
//!
//! Under this convention the averaging splitting takes the form
//! `b(g1, ..., gn) = (1/|G|) sum_g g^{-1} . a(g, g1, ..., gn)`, and
//! `d(b) = a` holds exactly for cocycles `a`; the property suite pins this.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::finitegroup::FiniteGroup;
use crate::matnum::{CMatrix, CVector, Field, Matrix, SparseOperator, ToleranceConfig};

/// A finite-dimensional G-module: a vector space with a linear action by
/// invertible matrices, one per group element.
#[derive(Debug, Clone)]
pub struct GModule {
    group: Arc<FiniteGroup>,
    dim: usize,
    field: Field,
    action: Vec<Matrix>,
}

impl GModule {
    pub fn new(group: Arc<FiniteGroup>, field: Field, action: Vec<Matrix>) -> Result<GModule> {
        let m = group.order();
        if action.len() != m {
            return Err(Error::NotAModule(format!(
                "action table has {} matrices for a group of order {m}",
                action.len()
            )));
        }
        let dim = action[0].rows();
        for (g, rho) in action.iter().enumerate() {
            if rho.rows() != dim || rho.cols() != dim {
                return Err(Error::NotAModule(format!(
                    "action matrix at {} is {}x{}, expected {dim}x{dim}",
                    group.name(g),
                    rho.rows(),
                    rho.cols()
                )));
            }
            if field == Field::Real && rho.field() != Field::Real {
                return Err(Error::NotAModule(format!(
                    "real module with complex action matrix at {}",
                    group.name(g)
                )));
            }
        }
        let id_residual = (&action[group.identity()] - &Matrix::identity(dim, field)).fro_norm();
        if id_residual > 1e-12 {
            return Err(Error::NotAModule(format!(
                "action at the identity deviates from I by {id_residual:.3e}"
            )));
        }
        for g in 0..m {
            for h in 0..m {
                let lhs = &action[g] * &action[h];
                let residual = (&lhs - &action[group.mul(g, h)]).fro_norm();
                if residual > 1e-12 * lhs.fro_norm().max(1.0) {
                    return Err(Error::NotAModule(format!(
                        "action fails rho({g})rho({h}) = rho({g}{h}) by {residual:.3e}"
                    )));
                }
            }
        }
        Ok(GModule {
            group,
            dim,
            field,
            action,
        })
    }

    /// Construction without the action-law verification, for callers that
    /// build actions correct by construction (or only approximately, inside
    /// Newton loops).
    pub(crate) fn new_unchecked(
        group: Arc<FiniteGroup>,
        field: Field,
        action: Vec<Matrix>,
    ) -> Result<GModule> {
        if action.len() != group.order() || action.is_empty() {
            return Err(Error::NotAModule("action table length mismatch".into()));
        }
        let dim = action[0].rows();
        Ok(GModule {
            group,
            dim,
            field,
            action,
        })
    }

    /// The trivial action on a `dim`-dimensional space.
    pub fn trivial(group: Arc<FiniteGroup>, dim: usize, field: Field) -> GModule {
        let action = (0..group.order()).map(|_| Matrix::identity(dim, field)).collect();
        GModule {
            group,
            dim,
            field,
            action,
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn action(&self, g: usize) -> &Matrix {
        &self.action[g]
    }

    pub fn act(&self, g: usize, v: &CVector) -> CVector {
        self.action[g].data() * v
    }

    /// `sup_g ||rho(g)||` in the spectral norm; the splitting norm bound.
    pub fn sup_action_norm(&self) -> f64 {
        self.action.iter().map(|m| m.spectral_norm()).fold(0.0, f64::max)
    }
}

/// An `n`-cochain: a map `G^n -> E` stored densely over the fixed tuple
/// enumeration.
#[derive(Debug, Clone)]
pub struct AbelianCochain {
    module: Arc<GModule>,
    degree: usize,
    values: Vec<CVector>,
    normalized: bool,
}

impl AbelianCochain {
    pub fn new(
        module: Arc<GModule>,
        degree: usize,
        values: Vec<CVector>,
        normalized: bool,
    ) -> Result<AbelianCochain> {
        let expected = module.group().tuple_count(degree);
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "degree-{degree} cochain needs {expected} values, got {}",
                values.len()
            )));
        }
        for v in &values {
            if v.len() != module.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "cochain value has dim {}, module has dim {}",
                    v.len(),
                    module.dim()
                )));
            }
        }
        let cochain = AbelianCochain {
            module,
            degree,
            values,
            normalized,
        };
        if normalized {
            let worst = cochain.normalization_residual();
            if worst > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "cochain flagged normalized but has value {worst:.3e} on an identity argument"
                )));
            }
        }
        Ok(cochain)
    }

    pub fn zero(module: Arc<GModule>, degree: usize) -> AbelianCochain {
        let dim = module.dim();
        let count = module.group().tuple_count(degree);
        AbelianCochain {
            module,
            degree,
            values: vec![CVector::zeros(dim); count],
            normalized: true,
        }
    }

    pub fn from_fn(
        module: Arc<GModule>,
        degree: usize,
        f: impl Fn(&[usize]) -> CVector,
    ) -> AbelianCochain {
        let values: Vec<CVector> = module.group().tuples(degree).map(|t| f(&t)).collect();
        AbelianCochain::new(module, degree, values, false).expect("from_fn produces aligned values")
    }

    pub fn module(&self) -> &Arc<GModule> {
        &self.module
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn set_normalized(&mut self, flag: bool) {
        self.normalized = flag;
    }

    pub fn values(&self) -> &[CVector] {
        &self.values
    }

    pub fn value(&self, tuple: &[usize]) -> &CVector {
        &self.values[self.module.group().tuple_index(tuple)]
    }

    pub fn value_at(&self, index: usize) -> &CVector {
        &self.values[index]
    }

    /// Sup over tuples of the Euclidean norm of the value.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest value norm over tuples containing the identity.
    pub fn normalization_residual(&self) -> f64 {
        let e = self.module.group().identity();
        self.module
            .group()
            .tuples(self.degree)
            .enumerate()
            .filter(|(_, t)| t.contains(&e))
            .map(|(k, _)| self.values[k].norm())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &AbelianCochain) -> AbelianCochain {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &AbelianCochain) -> AbelianCochain {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, z: Complex64) -> AbelianCochain {
        AbelianCochain {
            module: self.module.clone(),
            degree: self.degree,
            values: self.values.iter().map(|v| v * z).collect(),
            normalized: self.normalized,
        }
    }

    fn zip(&self, other: &AbelianCochain, f: impl Fn(&CVector, &CVector) -> CVector) -> AbelianCochain {
        assert_eq!(self.degree, other.degree, "cochain degrees differ");
        assert!(
            Arc::ptr_eq(&self.module, &other.module) || self.module.dim() == other.module.dim(),
            "cochain modules differ"
        );
        AbelianCochain {
            module: self.module.clone(),
            degree: self.degree,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
            normalized: self.normalized && other.normalized,
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

/// The inhomogeneous differential `C^n -> C^{n+1}`.
pub fn differential(f: &AbelianCochain) -> AbelianCochain {
    let module = f.module().clone();
    let group = module.group().clone();
    let n = f.degree();
    let values = group
        .tuples(n + 1)
        .map(|gamma| {
            let mut acc = module.act(gamma[0], f.value(&gamma[1..]));
            let mut merged = Vec::with_capacity(n);
            for i in 1..=n {
                merged.clear();
                merged.extend_from_slice(&gamma[..i - 1]);
                merged.push(group.mul(gamma[i - 1], gamma[i]));
                merged.extend_from_slice(&gamma[i + 1..]);
                acc += f.value(&merged) * Complex64::new(sign(i), 0.0);
            }
            acc += f.value(&gamma[..n]) * Complex64::new(sign(n + 1), 0.0);
            acc
        })
        .collect();
    AbelianCochain {
        module,
        degree: n + 1,
        values,
        normalized: f.normalized(),
    }
}

/// `||d f||_sup`; zero for cocycles.
pub fn cocycle_residual(f: &AbelianCochain) -> f64 {
    differential(f).sup_norm()
}

/// The matrix of the differential `C^n -> C^{n+1}` as a sparse operator,
/// with coordinates `tuple_index * dim + coordinate` on both sides.
pub fn differential_operator(module: &GModule, n: usize) -> SparseOperator {
    let group = module.group();
    let d = module.dim();
    let rows = group.tuple_count(n + 1) * d;
    let cols = group.tuple_count(n) * d;
    let mut op = SparseOperator::new(rows, cols);
    for gamma in group.tuples(n + 1) {
        let row_base = group.tuple_index(&gamma) * d;
        let rho = module.action(gamma[0]);
        let col_base = group.tuple_index(&gamma[1..]) * d;
        for i in 0..d {
            for j in 0..d {
                op.add(row_base + i, col_base + j, rho.entry(i, j));
            }
        }
        let mut merged = Vec::with_capacity(n);
        for t in 1..=n {
            merged.clear();
            merged.extend_from_slice(&gamma[..t - 1]);
            merged.push(group.mul(gamma[t - 1], gamma[t]));
            merged.extend_from_slice(&gamma[t + 1..]);
            let col = group.tuple_index(&merged) * d;
            for i in 0..d {
                op.add(row_base + i, col + i, Complex64::new(sign(t), 0.0));
            }
        }
        let col = group.tuple_index(&gamma[..n]) * d;
        for i in 0..d {
            op.add(row_base + i, col + i, Complex64::new(sign(n + 1), 0.0));
        }
    }
    op
}

/// Cohomology dimensions at degree `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CohomologyDims {
    pub cocycles: usize,
    pub coboundaries: usize,
    pub cohomology: usize,
}

/// `dim Z^n`, `dim B^n`, `dim H^n` by rank computation on the differentials.
pub fn cohomology_dims(module: &GModule, n: usize, tol: &ToleranceConfig) -> CohomologyDims {
    let (_, nullity) = differential_operator(module, n).rank_nullity(tol);
    let coboundaries = if n == 0 {
        0
    } else {
        differential_operator(module, n - 1).rank_nullity(tol).0
    };
    CohomologyDims {
        cocycles: nullity,
        coboundaries,
        cohomology: nullity - coboundaries.min(nullity),
    }
}

/// The averaging splitting: for a cocycle `a` of degree `n + 1` produces a
/// degree-`n` cochain `b` with `d(b) = a`, linear in `a`, of norm at most
/// `sup_g ||rho(g)|| * ||a||`.
pub fn averaging_split(a: &AbelianCochain, tol: &ToleranceConfig) -> Result<AbelianCochain> {
    let residual = cocycle_residual(a);
    if residual > tol.residual_tol {
        return Err(Error::NotACocycle {
            residual,
            tol: tol.residual_tol,
        });
    }
    Ok(averaging_split_unchecked(a))
}

/// The splitting formula without the cocycle precondition; used inside
/// Newton loops where the input is a cocycle only to leading order.
pub fn averaging_split_unchecked(a: &AbelianCochain) -> AbelianCochain {
    let module = a.module().clone();
    let group = module.group().clone();
    debug_assert!(a.degree() >= 1, "cannot split a degree-0 cochain");
    let n = a.degree() - 1;
    let weight = Complex64::new(1.0 / group.order() as f64, 0.0);
    let values = group
        .tuples(n)
        .map(|tau| {
            let mut acc = CVector::zeros(module.dim());
            let mut extended = Vec::with_capacity(n + 1);
            for g in group.elements() {
                extended.clear();
                extended.push(g);
                extended.extend_from_slice(&tau);
                acc += module.act(group.inv(g), a.value(&extended));
            }
            acc * weight
        })
        .collect();
    AbelianCochain {
        module,
        degree: n,
        values,
        normalized: a.normalized(),
    }
}

/// Local section for abelian cocycles: given cocycles `u`, `u'` of the same
/// degree, returns `v` with `u' = u - d(v)`; `v = 0` when `u' = u`.
pub fn abelian_retraction(
    u: &AbelianCochain,
    u_prime: &AbelianCochain,
    tol: &ToleranceConfig,
) -> Result<AbelianCochain> {
    for (label, cochain) in [("u", u), ("u'", u_prime)] {
        let residual = cocycle_residual(cochain);
        if residual > tol.residual_tol {
            return Err(Error::NotACocycle {
                residual,
                tol: tol.residual_tol,
            })
            .map_err(|e| Error::InvalidInput(format!("{label}: {e}")));
        }
    }
    averaging_split(&u.sub(u_prime), tol)
}

// ---------------------------------------------------------------------------
// Random modules and cochains (shared by the test suites and the CLI).
// ---------------------------------------------------------------------------

/// A random `dim`-dimensional G-module over the requested field, built by
/// cutting a random invariant subspace out of copies of the regular
/// representation and conjugating by a bounded random basis change.
pub fn random_module(
    group: &Arc<FiniteGroup>,
    dim: usize,
    field: Field,
    rng: &mut impl Rng,
) -> GModule {
    assert!(dim >= 1);
    let m = group.order();
    let copies = dim;
    let big = m * copies;
    let slot = |h: usize, c: usize| h * copies + c;

    // Average a random hermitian matrix over the regular action; the result
    // commutes with it, so its eigenspaces are invariant subspaces.
    let permuted = |g: usize, idx: usize| {
        let (h, c) = (idx / copies, idx % copies);
        slot(group.mul(g, h), c)
    };

    let basis: Vec<CVector> = match field {
        Field::Complex => {
            let mut h = CMatrix::zeros(big, big);
            for i in 0..big {
                for j in 0..big {
                    h[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let h = (&h + &h.adjoint()) * Complex64::new(0.5, 0.0);
            let mut avg = CMatrix::zeros(big, big);
            for g in group.elements() {
                for a in 0..big {
                    for b in 0..big {
                        avg[(permuted(g, a), permuted(g, b))] += h[(a, b)];
                    }
                }
            }
            avg /= Complex64::new(m as f64, 0.0);
            let eig = nalgebra::SymmetricEigen::new(avg);
            let chosen = choose_eigenspaces(&eig.eigenvalues.as_slice().to_vec(), dim, rng);
            chosen
                .into_iter()
                .map(|k| eig.eigenvectors.column(k).into_owned())
                .collect()
        }
        Field::Real => {
            let mut h = DMatrix::<f64>::zeros(big, big);
            for i in 0..big {
                for j in 0..big {
                    h[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
            let h = (&h + &h.transpose()) * 0.5;
            let mut avg = DMatrix::<f64>::zeros(big, big);
            for g in group.elements() {
                for a in 0..big {
                    for b in 0..big {
                        avg[(permuted(g, a), permuted(g, b))] += h[(a, b)];
                    }
                }
            }
            avg /= m as f64;
            let eig = nalgebra::SymmetricEigen::new(avg);
            let chosen = choose_eigenspaces(&eig.eigenvalues.as_slice().to_vec(), dim, rng);
            chosen
                .into_iter()
                .map(|k| eig.eigenvectors.column(k).map(|x| Complex64::new(x, 0.0)))
                .collect()
        }
    };

    // rho_sub(g) = B^H R(g) B, evaluated by permuting the rows of B.
    let mut b = CMatrix::zeros(big, dim);
    for (col, v) in basis.iter().enumerate() {
        b.set_column(col, v);
    }
    let mut action = Vec::with_capacity(m);
    for g in group.elements() {
        let mut rb = CMatrix::zeros(big, dim);
        for idx in 0..big {
            let target = permuted(g, idx);
            for col in 0..dim {
                rb[(target, col)] = b[(idx, col)];
            }
        }
        let rho = b.adjoint() * rb;
        action.push(Matrix::complex(rho));
    }

    // Conjugate by a mildly non-orthogonal basis change so the module is not
    // secretly unitary.
    let mut y = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let im = if field == Field::Complex {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            };
            y[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), im);
        }
    }
    let norm = y.norm().max(1e-9);
    let y = y * Complex64::new(0.4 / norm, 0.0);
    let s = Matrix::complex(y).data().exp();
    let s_inv = s.clone().try_inverse().expect("exp is invertible");
    let action: Vec<Matrix> = action
        .into_iter()
        .map(|rho| {
            let mut conj = &s * rho.data() * &s_inv;
            if field == Field::Real {
                let worst = conj.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                assert!(worst < 1e-9, "real module drifted complex ({worst:.3e})");
                conj.apply(|z| *z = Complex64::new(z.re, 0.0));
                Matrix::from_cmatrix(conj, Field::Real).expect("imaginary parts truncated")
            } else {
                Matrix::complex(conj)
            }
        })
        .collect();

    GModule::new(group.clone(), field, action).expect("random module construction is valid")
}

/// Picks eigenvalue clusters whose dimensions sum exactly to `dim`.
fn choose_eigenspaces(eigenvalues: &[f64], dim: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = eigenvalues.len();
    let scale = eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max).max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalues[a].partial_cmp(&eigenvalues[b]).unwrap());
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        match clusters.last_mut() {
            Some(last)
                if (eigenvalues[idx] - eigenvalues[*last.last().unwrap()]).abs() <= 1e-9 * scale =>
            {
                last.push(idx)
            }
            _ => clusters.push(vec![idx]),
        }
    }
    // Shuffle, then subset-sum DP for an exact total of `dim`.
    for i in (1..clusters.len()).rev() {
        let j = rng.gen_range(0..=i);
        clusters.swap(i, j);
    }
    let mut reach: Vec<Option<(usize, usize)>> = vec![None; dim + 1]; // sum -> (cluster, prev sum)
    reach[0] = Some((usize::MAX, 0));
    for (ci, cluster) in clusters.iter().enumerate() {
        let size = cluster.len();
        if size > dim {
            continue;
        }
        for s in (0..=dim - size).rev() {
            if reach[s].is_some() && reach[s + size].is_none() {
                reach[s + size] = Some((ci, s));
            }
        }
    }
    let mut chosen = Vec::new();
    let mut s = dim;
    while s > 0 {
        let (ci, prev) = reach[s].expect("subset sum reachable by construction");
        chosen.extend(clusters[ci].iter().copied());
        s = prev;
    }
    chosen
}

/// Uniformly random cochain with entries in the unit box.
pub fn random_cochain(
    module: &Arc<GModule>,
    degree: usize,
    rng: &mut impl Rng,
) -> AbelianCochain {
    let dim = module.dim();
    let field = module.field();
    let values = (0..module.group().tuple_count(degree))
        .map(|_| {
            CVector::from_fn(dim, |_, _| {
                let im = if field == Field::Complex {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                };
                Complex64::new(rng.gen_range(-1.0..1.0), im)
            })
        })
        .collect();
    AbelianCochain {
        module: module.clone(),
        degree,
        values,
        normalized: false,
    }
}

/// Random cocycle of degree `n >= 1`, generated as the coboundary of a
/// random cochain (exhaustive for vector coefficients, where `H^n = 0`).
pub fn random_cocycle(module: &Arc<GModule>, degree: usize, rng: &mut impl Rng) -> AbelianCochain {
    assert!(degree >= 1);
    differential(&random_cochain(module, degree - 1, rng))
}
