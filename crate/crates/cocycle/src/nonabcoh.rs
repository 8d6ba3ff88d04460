//! Nonabelian 1-cocycles valued in matrix Lie groups: verification, twisted
//! actions on the Lie algebra, the exp/log chart, the Newton conjugation
//! retraction witnessing discrete first cohomology, and conjugacy testing of
//! morphisms into the target group.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::abelcoh::{averaging_split_unchecked, cocycle_residual, AbelianCochain, GModule};
use crate::error::{Error, Result};
use crate::finitegroup::FiniteGroup;
use crate::matnum::{
    mat_exp, mat_log, normal_eigenvalues, polar_unitary, CVector, Field, Matrix, ToleranceConfig,
};

/// Supported matrix group targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    GeneralLinear,
    Unitary,
    SpecialOrthogonal,
    /// The circle of unit scalars inside `n x n` matrices.
    UnitScalars,
}

/// A concrete matrix group: kind, matrix size, ground field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixGroupSpec {
    pub kind: GroupKind,
    pub size: usize,
    pub field: Field,
}

impl MatrixGroupSpec {
    pub fn general_linear(size: usize, field: Field) -> MatrixGroupSpec {
        MatrixGroupSpec {
            kind: GroupKind::GeneralLinear,
            size,
            field,
        }
    }

    pub fn unitary(size: usize) -> MatrixGroupSpec {
        MatrixGroupSpec {
            kind: GroupKind::Unitary,
            size,
            field: Field::Complex,
        }
    }

    pub fn special_orthogonal(size: usize) -> MatrixGroupSpec {
        MatrixGroupSpec {
            kind: GroupKind::SpecialOrthogonal,
            size,
            field: Field::Real,
        }
    }

    pub fn unit_scalars(size: usize) -> MatrixGroupSpec {
        MatrixGroupSpec {
            kind: GroupKind::UnitScalars,
            size,
            field: Field::Complex,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GroupKind::GeneralLinear => "general-linear",
            GroupKind::Unitary => "unitary",
            GroupKind::SpecialOrthogonal => "special-orthogonal",
            GroupKind::UnitScalars => "unit-scalars",
        }
    }

    /// Distance-like residual from the membership conditions of the kind.
    pub fn membership_residual(&self, m: &Matrix, tol: &ToleranceConfig) -> f64 {
        if m.rows() != self.size || m.cols() != self.size {
            return f64::INFINITY;
        }
        let n = self.size;
        match self.kind {
            GroupKind::GeneralLinear => {
                let sv = m.singular_values();
                let sigma_max = sv.iter().copied().fold(0.0, f64::max);
                let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
                if sigma_min > tol.effective_rank_tol(sigma_max, n, n) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GroupKind::Unitary => m.unitary_residual(),
            GroupKind::SpecialOrthogonal => {
                let ortho = m.unitary_residual();
                let realness = m.data().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                let det = m.data().clone().determinant();
                ortho + realness + (det - Complex64::new(1.0, 0.0)).norm()
            }
            GroupKind::UnitScalars => {
                let lambda = m.trace() / Complex64::new(n as f64, 0.0);
                let off = (m - &Matrix::scalar(n, lambda)).fro_norm();
                off + (lambda.norm() - 1.0).abs()
            }
        }
    }

    pub fn check_membership(&self, m: &Matrix, tol: &ToleranceConfig) -> Result<()> {
        let residual = self.membership_residual(m, tol);
        if residual > tol.residual_tol {
            return Err(Error::NotAMember {
                kind: self.kind_name().into(),
                residual,
            });
        }
        Ok(())
    }

    /// Projection of an arbitrary matrix onto the Lie algebra of the kind.
    pub fn lie_project(&self, x: &Matrix) -> Matrix {
        let n = self.size;
        match self.kind {
            GroupKind::GeneralLinear => {
                if self.field == Field::Real {
                    let data = x.data().map(|z| Complex64::new(z.re, 0.0));
                    Matrix::from_cmatrix(data, Field::Real).unwrap()
                } else {
                    x.clone()
                }
            }
            GroupKind::Unitary => (x - &x.adjoint()).scale(Complex64::new(0.5, 0.0)),
            GroupKind::SpecialOrthogonal => {
                let skew = (x - &x.transpose()).scale(Complex64::new(0.5, 0.0));
                let data = skew.data().map(|z| Complex64::new(z.re, 0.0));
                Matrix::from_cmatrix(data, Field::Real).unwrap()
            }
            GroupKind::UnitScalars => {
                let lambda = x.trace() / Complex64::new(n as f64, 0.0);
                Matrix::scalar(n, Complex64::new(0.0, lambda.im))
            }
        }
    }

    /// Nearest group element, used to keep iterates from drifting off the
    /// subgroup.
    pub fn project_to_group(&self, m: &Matrix, tol: &ToleranceConfig) -> Result<Matrix> {
        match self.kind {
            GroupKind::GeneralLinear => Ok(m.clone()),
            GroupKind::Unitary => polar_unitary(m, tol),
            GroupKind::SpecialOrthogonal => {
                let u = polar_unitary(m, tol)?;
                let det = u.data().clone().determinant();
                if (det - Complex64::new(1.0, 0.0)).norm() > 0.5 {
                    return Err(Error::NotAMember {
                        kind: self.kind_name().into(),
                        residual: (det - Complex64::new(1.0, 0.0)).norm(),
                    });
                }
                u.enforce_field(1e-9)
            }
            GroupKind::UnitScalars => {
                let lambda = m.trace() / Complex64::new(self.size as f64, 0.0);
                let r = lambda.norm();
                if r < 1e-12 {
                    return Err(Error::Singular { sigma_min: r });
                }
                Ok(Matrix::scalar(self.size, lambda / Complex64::new(r, 0.0)))
            }
        }
    }

    /// Real dimension of the Lie algebra.
    pub fn lie_dim(&self) -> usize {
        let n = self.size;
        match self.kind {
            GroupKind::GeneralLinear => {
                if self.field == Field::Real {
                    n * n
                } else {
                    2 * n * n
                }
            }
            GroupKind::Unitary => n * n,
            GroupKind::SpecialOrthogonal => n * (n - 1) / 2,
            GroupKind::UnitScalars => 1,
        }
    }

    /// A fixed orthogonal real basis of the Lie algebra.
    pub fn lie_basis(&self) -> Vec<Matrix> {
        let n = self.size;
        let mut basis = Vec::with_capacity(self.lie_dim());
        let unit = |i: usize, j: usize, z: Complex64| {
            let mut m = Matrix::zeros(n, n, Field::Complex).into_data();
            m[(i, j)] = z;
            Matrix::complex(m)
        };
        let one = Complex64::new(1.0, 0.0);
        let i_unit = Complex64::new(0.0, 1.0);
        match self.kind {
            GroupKind::GeneralLinear => {
                for i in 0..n {
                    for j in 0..n {
                        basis.push(unit(i, j, one));
                    }
                }
                if self.field == Field::Complex {
                    for i in 0..n {
                        for j in 0..n {
                            basis.push(unit(i, j, i_unit));
                        }
                    }
                }
            }
            GroupKind::Unitary => {
                for i in 0..n {
                    basis.push(unit(i, i, i_unit));
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let mut m = unit(i, j, one).into_data();
                        m[(j, i)] = -one;
                        basis.push(Matrix::complex(m));
                        let mut m = unit(i, j, i_unit).into_data();
                        m[(j, i)] = i_unit;
                        basis.push(Matrix::complex(m));
                    }
                }
            }
            GroupKind::SpecialOrthogonal => {
                for i in 0..n {
                    for j in i + 1..n {
                        let mut m = unit(i, j, one).into_data();
                        m[(j, i)] = -one;
                        basis.push(Matrix::complex(m));
                    }
                }
            }
            GroupKind::UnitScalars => {
                basis.push(Matrix::scalar(n, i_unit));
            }
        }
        debug_assert_eq!(basis.len(), self.lie_dim());
        basis
    }

    /// Coordinates of a Lie-algebra element in [`lie_basis`], as a real
    /// vector (stored with zero imaginary parts).
    ///
    /// [`lie_basis`]: MatrixGroupSpec::lie_basis
    pub fn lie_coords(&self, x: &Matrix) -> CVector {
        let basis = self.lie_basis();
        CVector::from_fn(basis.len(), |k, _| {
            let b = &basis[k];
            // Re tr(B* X) / Re tr(B* B); the basis is orthogonal.
            let ip = (b.adjoint().data() * x.data()).diagonal().sum().re;
            let nn = (b.adjoint().data() * b.data()).diagonal().sum().re;
            Complex64::new(ip / nn, 0.0)
        })
    }

    pub fn lie_from_coords(&self, coords: &CVector) -> Matrix {
        let basis = self.lie_basis();
        assert_eq!(coords.len(), basis.len(), "coordinate length mismatch");
        let mut acc = Matrix::zeros(self.size, self.size, Field::Complex);
        for (k, b) in basis.iter().enumerate() {
            acc = &acc + &b.scale(Complex64::new(coords[k].re, 0.0));
        }
        acc
    }

    /// Random Lie-algebra element of the given Frobenius norm.
    pub fn random_lie(&self, rng: &mut impl Rng, norm: f64) -> Matrix {
        let n = self.size;
        let mut data = Matrix::zeros(n, n, Field::Complex).into_data();
        for i in 0..n {
            for j in 0..n {
                data[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let x = self.lie_project(&Matrix::complex(data));
        let current = x.fro_norm();
        if current < 1e-12 {
            return x;
        }
        x.scale(Complex64::new(norm / current, 0.0))
    }

    /// Random group element `exp(X)` for a random Lie element of norm
    /// `lie_norm`.
    pub fn random_element(&self, rng: &mut impl Rng, lie_norm: f64) -> Matrix {
        mat_exp(&self.random_lie(rng, lie_norm)).expect("exp of a Lie element")
    }
}

/// How the finite group acts on the target: trivially, or by conjugation
/// with fixed target-group elements.
#[derive(Debug, Clone)]
pub enum ActionKind {
    Trivial,
    Conjugation(Vec<Matrix>),
}

/// A G-action on a matrix group by automorphisms.
#[derive(Debug, Clone)]
pub struct GroupAction {
    group: Arc<FiniteGroup>,
    target: MatrixGroupSpec,
    kind: ActionKind,
}

impl GroupAction {
    pub fn trivial(group: Arc<FiniteGroup>, target: MatrixGroupSpec) -> GroupAction {
        GroupAction {
            group,
            target,
            kind: ActionKind::Trivial,
        }
    }

    /// Conjugation action; the conjugators must be target-group members and
    /// must compose according to the group law as automorphisms.
    pub fn conjugation(
        group: Arc<FiniteGroup>,
        target: MatrixGroupSpec,
        conjugators: Vec<Matrix>,
        tol: &ToleranceConfig,
    ) -> Result<GroupAction> {
        if conjugators.len() != group.order() {
            return Err(Error::NotAnAction(format!(
                "{} conjugators for a group of order {}",
                conjugators.len(),
                group.order()
            )));
        }
        for (g, c) in conjugators.iter().enumerate() {
            target.check_membership(c, tol).map_err(|e| {
                Error::NotAnAction(format!("conjugator at {}: {e}", group.name(g)))
            })?;
        }
        let action = GroupAction {
            group,
            target,
            kind: ActionKind::Conjugation(conjugators),
        };
        action.validate_composition()?;
        Ok(action)
    }

    /// Checks that g -> (x -> gx) respects the group law, on the Lie basis.
    fn validate_composition(&self) -> Result<()> {
        let basis = self.target.lie_basis();
        let mut worst = 0.0f64;
        for g in self.group.elements() {
            for h in self.group.elements() {
                let gh = self.group.mul(g, h);
                for b in &basis {
                    let lhs = self.apply(g, &self.apply(h, b));
                    let rhs = self.apply(gh, b);
                    worst = worst.max((&lhs - &rhs).fro_norm());
                }
            }
        }
        if worst > 1e-12 {
            return Err(Error::NotAnAction(format!(
                "composition law fails by {worst:.3e} on the Lie algebra"
            )));
        }
        Ok(())
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn target(&self) -> &MatrixGroupSpec {
        &self.target
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, ActionKind::Trivial)
    }

    /// The automorphism at `g` applied to a target element (or Lie-algebra
    /// element; conjugation preserves both).
    pub fn apply(&self, g: usize, x: &Matrix) -> Matrix {
        match &self.kind {
            ActionKind::Trivial => x.clone(),
            ActionKind::Conjugation(c) => {
                let cg = &c[g];
                let inv = cg.try_inverse().expect("conjugators are invertible");
                &(cg * x) * &inv
            }
        }
    }
}

/// A map `G -> U` together with its action data; the cocycle condition is
/// `u_{gh} = u_g . (g u_h)` and is enforced at construction.
#[derive(Debug, Clone)]
pub struct NonabelianCocycle {
    action: Arc<GroupAction>,
    values: Vec<Matrix>,
}

/// `max_{g,h} || u_{gh} - u_g . (g u_h) ||` over all pairs.
pub fn check_cocycle(action: &GroupAction, values: &[Matrix]) -> f64 {
    let group = action.group();
    let mut worst = 0.0f64;
    for g in group.elements() {
        for h in group.elements() {
            let expected = &values[g] * &action.apply(g, &values[h]);
            worst = worst.max((&values[group.mul(g, h)] - &expected).fro_norm());
        }
    }
    worst
}

impl NonabelianCocycle {
    pub fn new(action: Arc<GroupAction>, values: Vec<Matrix>, tol: &ToleranceConfig) -> Result<Self> {
        if values.len() != action.group().order() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a group of order {}",
                values.len(),
                action.group().order()
            )));
        }
        for (g, v) in values.iter().enumerate() {
            action.target().check_membership(v, tol).map_err(|e| {
                Error::InvalidInput(format!("value at {}: {e}", action.group().name(g)))
            })?;
        }
        let residual = check_cocycle(&action, &values);
        if residual > tol.residual_tol {
            return Err(Error::NotACocycle {
                residual,
                tol: tol.residual_tol,
            });
        }
        Ok(NonabelianCocycle { action, values })
    }

    /// The trivial cocycle `u_g = I`.
    pub fn constant_identity(action: Arc<GroupAction>) -> NonabelianCocycle {
        let n = action.target().size;
        let field = action.target().field;
        let values = (0..action.group().order())
            .map(|_| Matrix::identity(n, field))
            .collect();
        NonabelianCocycle { action, values }
    }

    /// A group morphism `G -> U` as a cocycle under the trivial action.
    pub fn from_morphism(
        group: Arc<FiniteGroup>,
        target: MatrixGroupSpec,
        values: Vec<Matrix>,
        tol: &ToleranceConfig,
    ) -> Result<NonabelianCocycle> {
        let action = Arc::new(GroupAction::trivial(group, target));
        NonabelianCocycle::new(action, values, tol)
    }

    pub(crate) fn from_values_unchecked(action: Arc<GroupAction>, values: Vec<Matrix>) -> Self {
        NonabelianCocycle { action, values }
    }

    pub fn action(&self) -> &Arc<GroupAction> {
        &self.action
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        self.action.group()
    }

    pub fn target(&self) -> &MatrixGroupSpec {
        self.action.target()
    }

    pub fn value(&self, g: usize) -> &Matrix {
        &self.values[g]
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn residual(&self) -> f64 {
        check_cocycle(&self.action, &self.values)
    }

    /// `max_g ||u_g - u'_g||` in the Frobenius norm.
    pub fn sup_distance(&self, other: &NonabelianCocycle) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).fro_norm())
            .fold(0.0, f64::max)
    }

    /// The conjugate cocycle `g -> v^{-1} u_g (g v)`; exact construction
    /// used by tests and demos.
    pub fn conjugate_by(&self, v: &Matrix, tol: &ToleranceConfig) -> Result<NonabelianCocycle> {
        let v_inv = v.try_inverse()?;
        let values = self
            .group()
            .elements()
            .map(|g| &(&v_inv * &self.values[g]) * &self.action.apply(g, v))
            .collect();
        NonabelianCocycle::new(self.action.clone(), values, tol)
    }
}

/// The twisted G-module on the Lie algebra of the target: `g . X =
/// Ad(u_g) (g X)`, expressed in the fixed real basis.
///
/// The action axioms hold to roughly the cocycle residual of `u`; they are
/// re-verified here, with the threshold scaled accordingly.
pub fn twisted_module(u: &NonabelianCocycle, tol: &ToleranceConfig) -> Result<GModule> {
    let residual = u.residual();
    if residual > tol.residual_tol {
        return Err(Error::NotACocycle {
            residual,
            tol: tol.residual_tol,
        });
    }
    let module = twisted_module_unchecked(u.action(), u.values())?;
    let check_tol = (20.0 * residual).max(1e-12);
    let group = u.group();
    for g in group.elements() {
        for h in group.elements() {
            let lhs = module.action(g) * module.action(h);
            let err = (&lhs - module.action(group.mul(g, h))).fro_norm();
            if err > check_tol * lhs.fro_norm().max(1.0) {
                return Err(Error::NotAnAction(format!(
                    "twisted action fails composition by {err:.3e}"
                )));
            }
        }
    }
    Ok(module)
}

/// Twisted-module construction without the action re-verification; valid
/// for relative cocycles too (centrality makes Ad well defined), and used
/// inside Newton loops where values are cocycles only approximately.
pub(crate) fn twisted_module_unchecked(
    action: &Arc<GroupAction>,
    values: &[Matrix],
) -> Result<GModule> {
    let target = action.target();
    let basis = target.lie_basis();
    let dim = basis.len();
    let group = action.group().clone();
    let mut matrices = Vec::with_capacity(group.order());
    for g in group.elements() {
        let ug_inv = values[g].try_inverse()?;
        let mut rho = Matrix::zeros(dim, dim, Field::Real).into_data();
        for (col, b) in basis.iter().enumerate() {
            let moved = &(&values[g] * &action.apply(g, b)) * &ug_inv;
            let coords = target.lie_coords(&target.lie_project(&moved));
            for row in 0..dim {
                rho[(row, col)] = Complex64::new(coords[row].re, 0.0);
            }
        }
        matrices.push(Matrix::from_cmatrix(rho, Field::Real).expect("real coordinates"));
    }
    GModule::new_unchecked(group, Field::Real, matrices)
}

/// Converts a Lie-algebra-valued map `g -> X_g` into a degree-1 cochain of
/// coordinates in the twisted module.
fn lie_cochain(module: &Arc<GModule>, target: &MatrixGroupSpec, xs: &[Matrix]) -> AbelianCochain {
    AbelianCochain::from_fn(module.clone(), 1, |t| target.lie_coords(&xs[t[0]]))
}

/// Outcome bookkeeping for the Newton retractions.
#[derive(Debug, Clone, Copy)]
pub struct RetractInfo {
    pub newton_steps: usize,
    pub residual: f64,
}

/// The exp-chart of the cocycle manifold: given a cocycle `u` and a twisted
/// 1-cocycle `X` with `||X|| <= trust_radius`, produces the unique nearby
/// cocycle `u'_g = exp(X_g + Y_g) u_g` with a second-order correction `Y`
/// found by Newton iteration. At `X = 0` returns `u` exactly.
pub fn chart_to_cocycle(
    u: &NonabelianCocycle,
    x: &AbelianCochain,
    tol: &ToleranceConfig,
) -> Result<NonabelianCocycle> {
    let target = *u.target();
    let group = u.group().clone();
    let dim = target.lie_dim();
    if x.degree() != 1 || x.module().dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "chart direction must be a degree-1 cochain with {dim} coordinates"
        )));
    }
    let module = Arc::new(twisted_module_unchecked(u.action(), u.values())?);
    // Re-house the coordinates in the internally built twisted module, then
    // demand the tangency condition there.
    let x = AbelianCochain::new(module.clone(), 1, x.values().to_vec(), false)?;
    let x_residual = cocycle_residual(&x);
    if x_residual > tol.residual_tol.max(20.0 * u.residual()) {
        return Err(Error::NotACocycle {
            residual: x_residual,
            tol: tol.residual_tol,
        });
    }
    let x_mats: Vec<Matrix> = group
        .elements()
        .map(|g| target.lie_from_coords(x.value(&[g])))
        .collect();
    let x_norm = x_mats.iter().map(|m| m.fro_norm()).fold(0.0, f64::max);
    if x_norm == 0.0 {
        return Ok(u.clone());
    }
    if x_norm > tol.trust_radius {
        return Err(Error::InvalidInput(format!(
            "||X|| = {x_norm:.3e} exceeds the trust radius {:.3e}",
            tol.trust_radius
        )));
    }

    let mut z = x_mats;
    for step in 0..=tol.max_newton_iters {
        let candidate: Vec<Matrix> = group
            .elements()
            .map(|g| Ok(&mat_exp(&z[g])? * u.value(g)))
            .collect::<Result<_>>()?;
        let residual = check_cocycle(u.action(), &candidate);
        if residual <= tol.residual_tol {
            let values = candidate
                .iter()
                .map(|m| target.project_to_group(m, tol))
                .collect::<Result<Vec<_>>>()?;
            return NonabelianCocycle::new(u.action().clone(), values, tol);
        }
        if step == tol.max_newton_iters {
            return Err(Error::NoConvergence {
                iters: step,
                residual,
            });
        }
        // Lie-level defect E(g,h) = log(u'_g (g u'_h) u'_{gh}^{-1}), an
        // approximate twisted 2-cocycle; the Newton step solves d(W) = -E.
        let mut defect_values = Vec::with_capacity(group.tuple_count(2));
        for pair in group.tuples(2) {
            let (g, h) = (pair[0], pair[1]);
            let prod = &candidate[g] * &u.action().apply(g, &candidate[h]);
            let err = &prod * &candidate[group.mul(g, h)].try_inverse()?;
            let e = target.lie_project(&mat_log(&err)?);
            defect_values.push(target.lie_coords(&e));
        }
        let defect = AbelianCochain::new(module.clone(), 2, defect_values, false)?;
        let w = averaging_split_unchecked(&defect);
        for g in group.elements() {
            let wg = target.lie_from_coords(w.value(&[g]));
            z[g] = &z[g] - &wg;
        }
    }
    unreachable!("loop returns or errors");
}

/// Local section of the conjugation action: finds `v` in the target group
/// with `u'_g = v^{-1} u_g (g v)` for all `g`, by Newton iteration. Each
/// step solves the linearized equation `d0(Y) = defect` through the
/// averaging splitting in the module twisted at the current iterate, then
/// updates `v <- v exp(Y)`.
pub fn conjugation_retraction(
    u: &NonabelianCocycle,
    u_prime: &NonabelianCocycle,
    tol: &ToleranceConfig,
) -> Result<(Matrix, RetractInfo)> {
    conjugation_retraction_raw(u.action(), u.values(), u_prime.values(), tol)
}

/// The Newton loop on raw value tables; also serves relative cocycles,
/// whose values satisfy the cocycle condition only modulo the center.
pub(crate) fn conjugation_retraction_raw(
    action: &Arc<GroupAction>,
    base: &[Matrix],
    near: &[Matrix],
    tol: &ToleranceConfig,
) -> Result<(Matrix, RetractInfo)> {
    let target = *action.target();
    let group = action.group().clone();
    let distance = base
        .iter()
        .zip(near.iter())
        .map(|(a, b)| (a - b).fro_norm())
        .fold(0.0, f64::max);
    if distance > tol.locality_radius {
        return Err(Error::OutsideLocalityRadius {
            distance,
            radius: tol.locality_radius,
        });
    }
    let mut v = Matrix::identity(target.size, target.field);
    for step in 0..=tol.max_newton_iters {
        let v_inv = v.try_inverse()?;
        let conjugated: Vec<Matrix> = group
            .elements()
            .map(|g| &(&v_inv * &base[g]) * &action.apply(g, &v))
            .collect();
        let residual = near
            .iter()
            .zip(conjugated.iter())
            .map(|(a, b)| (a - b).fro_norm())
            .fold(0.0, f64::max);
        if residual <= tol.residual_tol {
            return Ok((
                v,
                RetractInfo {
                    newton_steps: step,
                    residual,
                },
            ));
        }
        if step == tol.max_newton_iters {
            return Err(Error::NoLocalConvergence {
                iters: step,
                residual,
            });
        }
        // Defect X_g = log(u'_g w_g^{-1}) against the current conjugate w;
        // solve d0(Y) = X in the module twisted at w (re-twisted each step).
        let module = Arc::new(twisted_module_unchecked(action, &conjugated)?);
        let mut defect = Vec::with_capacity(group.order());
        for g in group.elements() {
            let err = &near[g] * &conjugated[g].try_inverse()?;
            defect.push(target.lie_project(&mat_log(&err)?));
        }
        let x = lie_cochain(&module, &target, &defect);
        let y = averaging_split_unchecked(&x);
        let y_mat = target.lie_from_coords(y.value(&[]));
        let step_mat = mat_exp(&y_mat)?;
        v = target.project_to_group(&(&v * &step_mat), tol)?;
    }
    unreachable!("loop returns or errors");
}

/// Conjugacy of group morphisms `G -> U` (cocycles under the trivial
/// action): returns `v` with `psi(g) = v phi(g) v^{-1}` for all `g`.
pub fn morphism_conjugacy(
    phi: &NonabelianCocycle,
    psi: &NonabelianCocycle,
    tol: &ToleranceConfig,
) -> Result<(Matrix, RetractInfo)> {
    if !phi.action().is_trivial() || !psi.action().is_trivial() {
        return Err(Error::InvalidInput(
            "morphism conjugacy requires the trivial action".into(),
        ));
    }
    // The retraction returns v with psi_g = v^{-1} phi_g v; expose the
    // opposite side so that psi = v phi v^{-1}.
    let (v, info) = conjugation_retraction(phi, psi, tol)?;
    Ok((v.try_inverse()?, info))
}

/// Conjugation-invariant spectral data of a cocycle under the trivial
/// action on a unitary target: per-element sorted eigenvalues plus traces
/// of all words of length at most two.
#[derive(Debug, Clone)]
pub struct Signature {
    pub eigenvalues: Vec<Vec<Complex64>>,
    pub word_traces: Vec<Complex64>,
}

impl Signature {
    pub fn matches(&self, other: &Signature, tol: f64) -> bool {
        if self.eigenvalues.len() != other.eigenvalues.len()
            || self.word_traces.len() != other.word_traces.len()
        {
            return false;
        }
        let eigs_close = self
            .eigenvalues
            .iter()
            .zip(other.eigenvalues.iter())
            .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol));
        let traces_close = self
            .word_traces
            .iter()
            .zip(other.word_traces.iter())
            .all(|(x, y)| (x - y).norm() <= tol);
        eigs_close && traces_close
    }
}

fn sorted_eigenvalues(m: &Matrix, tol: &ToleranceConfig) -> Result<Vec<Complex64>> {
    let mut eigs = normal_eigenvalues(m, tol)?;
    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(eigs)
}

/// Spectral signature for class-counting experiments. Equal signatures are
/// strong conjugacy evidence; for abelian `G` under the trivial action they
/// are an exact invariant (commuting unitaries diagonalize simultaneously).
pub fn h1_invariant_signature(
    u: &NonabelianCocycle,
    tol: &ToleranceConfig,
) -> Result<Signature> {
    if !u.action().is_trivial() {
        return Err(Error::InvalidInput(
            "signatures are defined for the trivial action".into(),
        ));
    }
    if !matches!(u.target().kind, GroupKind::Unitary | GroupKind::UnitScalars) {
        return Err(Error::InvalidInput(
            "signatures are defined on unitary targets".into(),
        ));
    }
    let group = u.group();
    let eigenvalues = group
        .elements()
        .map(|g| sorted_eigenvalues(u.value(g), tol))
        .collect::<Result<Vec<_>>>()?;
    let mut word_traces: Vec<Complex64> = group.elements().map(|g| u.value(g).trace()).collect();
    for g in group.elements() {
        for h in group.elements() {
            word_traces.push((u.value(g) * u.value(h)).trace());
        }
    }
    Ok(Signature {
        eigenvalues,
        word_traces,
    })
}

/// Best-effort global conjugation for class-counting: under the trivial
/// action, averages a random seed into an intertwiner
/// `T = (1/|G|) sum_g phi_g X psi_g^{-1}` (so `phi_g T = T psi_g` exactly);
/// an invertible draw certifies conjugacy globally, with the unitary factor
/// as conjugator. Falls back to the local retraction otherwise.
pub fn global_align_then_retract(
    u: &NonabelianCocycle,
    u_prime: &NonabelianCocycle,
    rng: &mut impl Rng,
    restarts: usize,
    tol: &ToleranceConfig,
) -> Result<(Matrix, RetractInfo)> {
    if u.action().is_trivial() {
        let target = *u.target();
        let group = u.group().clone();
        let n = target.size;
        let weight = Complex64::new(1.0 / group.order() as f64, 0.0);
        let mut seeds = vec![Matrix::identity(n, target.field)];
        for _ in 0..restarts {
            seeds.push(target.random_element(rng, 1.0));
        }
        for seed in seeds {
            let mut t = Matrix::zeros(n, n, Field::Complex);
            let mut ok = true;
            for g in group.elements() {
                match u_prime.value(g).try_inverse() {
                    Ok(inv) => t = &t + &(&(u.value(g) * &seed) * &inv),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            t = t.scale(weight);
            let v = match target.project_to_group(&t, tol) {
                Ok(v) => v,
                Err(_) => continue, // singular intertwiner; try another seed
            };
            let v_inv = v.try_inverse()?;
            let residual = group
                .elements()
                .map(|g| {
                    let conj = &(&v_inv * u.value(g)) * &u.action().apply(g, &v);
                    (&conj - u_prime.value(g)).fro_norm()
                })
                .fold(0.0, f64::max);
            if residual <= tol.residual_tol {
                return Ok((
                    v,
                    RetractInfo {
                        newton_steps: 0,
                        residual,
                    },
                ));
            }
        }
    }
    conjugation_retraction(u, u_prime, tol)
}

/// Random twisted 1-cocycle of prescribed sup norm (a coboundary of a
/// random 0-cochain, which exhausts `Z^1` since vector-coefficient `H^1`
/// vanishes).
pub fn random_twisted_cocycle(
    u: &NonabelianCocycle,
    norm: f64,
    rng: &mut impl Rng,
    tol: &ToleranceConfig,
) -> Result<AbelianCochain> {
    let module = Arc::new(twisted_module(u, tol)?);
    for _ in 0..32 {
        let seed = crate::abelcoh::random_cochain(&module, 0, rng);
        let x = crate::abelcoh::differential(&seed);
        let target = u.target();
        let sup = u
            .group()
            .elements()
            .map(|g| target.lie_from_coords(x.value(&[g])).fro_norm())
            .fold(0.0, f64::max);
        if sup > 1e-9 {
            return Ok(x.scale(Complex64::new(norm / sup, 0.0)));
        }
    }
    Err(Error::InvalidInput(
        "could not draw a nonzero twisted cocycle (module may have no coboundaries)".into(),
    ))
}
