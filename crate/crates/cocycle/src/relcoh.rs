//! Relative cocycles for the central pair `K <= U` with `K` the circle of
//! unit scalars: the nonabelian coboundary into `Z^2(G, K)`, component and
//! fiber bookkeeping, the combined `(v, w)` retraction, and projective
//! representations as fibers.
//!
//! Conventions, fixed once:
//! - the relative coboundary of a degree-1 cochain is
//!   `du(g, h) = u_{gh} (u_g . (g u_h))^{-1}`, required to land in `K`;
//! - the coboundary of a K-valued cochain `x` uses the same orientation,
//!   `dK(x)(g, h) = x_{gh} (x_g (g x_h))^{-1}`, so that `d(u x) = du dK(x)`
//!   holds exactly by centrality; on phase logarithms `dK` is minus the
//!   additive differential;
//! - for an abelian ambient group (unit scalars) the same formulas apply in
//!   every degree.
//!
//! K-valued data is stored via logarithms (principal phases). Circle-valued
//! classes can differ from their real-log classes by the `2 pi Z` lattice;
//! class equality is decided exactly by an integer solvability check on that
//! lattice, cross-checked by the antisymmetrization invariant for abelian
//! groups.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::abelcoh::{
    averaging_split_unchecked, differential, differential_operator, AbelianCochain, GModule,
};
use crate::error::{Error, Result};
use crate::finitegroup::FiniteGroup;
use crate::intlat;
use crate::matnum::{least_squares_solve, CVector, Field, Matrix, ToleranceConfig};
use crate::nonabcoh::{
    conjugation_retraction_raw, GroupAction, GroupKind, MatrixGroupSpec, NonabelianCocycle,
    RetractInfo,
};

/// Wraps a phase into the principal range `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut x = theta % TAU;
    if x > PI {
        x -= TAU;
    } else if x <= -PI {
        x += TAU;
    }
    x
}

/// A central pair: the circle of unit scalars inside a complex matrix
/// group. The Lie algebra of `K` is `i R . I`, complemented by the
/// trace-free part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CentralPair {
    ambient: MatrixGroupSpec,
}

impl CentralPair {
    pub fn scalar_circle(ambient: MatrixGroupSpec) -> Result<CentralPair> {
        match ambient.kind {
            GroupKind::Unitary | GroupKind::UnitScalars => Ok(CentralPair { ambient }),
            GroupKind::GeneralLinear if ambient.field == Field::Complex => {
                Ok(CentralPair { ambient })
            }
            _ => Err(Error::Unsupported(format!(
                "unit scalars are central only in complex ambient groups, got {}",
                ambient.kind_name()
            ))),
        }
    }

    pub fn ambient(&self) -> &MatrixGroupSpec {
        &self.ambient
    }

    /// Distance from `m` to the unit-scalar circle.
    pub fn central_residual(&self, m: &Matrix) -> f64 {
        let n = self.ambient.size;
        let lambda = m.trace() / Complex64::new(n as f64, 0.0);
        let off = (m - &Matrix::scalar(n, lambda)).fro_norm();
        off + (lambda.norm() - 1.0).abs()
    }

    /// Principal phase of a central element.
    pub fn phase_of(&self, m: &Matrix, tol: &ToleranceConfig) -> Result<f64> {
        let residual = self.central_residual(m);
        if residual > tol.residual_tol {
            return Err(Error::NotAMember {
                kind: "unit-scalars (central)".into(),
                residual,
            });
        }
        let lambda = m.trace() / Complex64::new(self.ambient.size as f64, 0.0);
        Ok(lambda.arg())
    }

    pub fn from_phase(&self, theta: f64) -> Matrix {
        Matrix::scalar(self.ambient.size, Complex64::from_polar(1.0, theta))
    }

    /// Projection of the ambient Lie algebra onto `Lie(K) = i R . I` along
    /// the trace complement.
    pub fn lie_central_projection(&self, x: &Matrix) -> Matrix {
        let n = self.ambient.size;
        let lambda = x.trace() / Complex64::new(n as f64, 0.0);
        Matrix::scalar(n, Complex64::new(0.0, lambda.im))
    }
}

/// A K-valued cochain stored through its phase logarithms.
#[derive(Debug, Clone)]
pub struct CircleCochain {
    group: Arc<FiniteGroup>,
    degree: usize,
    phases: Vec<f64>,
}

impl CircleCochain {
    pub fn new(group: Arc<FiniteGroup>, degree: usize, phases: Vec<f64>) -> Result<CircleCochain> {
        if phases.len() != group.tuple_count(degree) {
            return Err(Error::DimensionMismatch(format!(
                "degree-{degree} circle cochain needs {} phases, got {}",
                group.tuple_count(degree),
                phases.len()
            )));
        }
        Ok(CircleCochain {
            group,
            degree,
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn trivial(group: Arc<FiniteGroup>, degree: usize) -> CircleCochain {
        let count = group.tuple_count(degree);
        CircleCochain {
            group,
            degree,
            phases: vec![0.0; count],
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase(&self, tuple: &[usize]) -> f64 {
        self.phases[self.group.tuple_index(tuple)]
    }

    pub fn matrix(&self, tuple: &[usize], size: usize) -> Matrix {
        Matrix::scalar(size, Complex64::from_polar(1.0, self.phase(tuple)))
    }

    pub fn scalar(&self, tuple: &[usize]) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(tuple))
    }

    pub fn inverse(&self) -> CircleCochain {
        CircleCochain {
            group: self.group.clone(),
            degree: self.degree,
            phases: self.phases.iter().map(|&p| wrap_phase(-p)).collect(),
        }
    }

    pub fn mul(&self, other: &CircleCochain) -> CircleCochain {
        assert_eq!(self.degree, other.degree);
        CircleCochain {
            group: self.group.clone(),
            degree: self.degree,
            phases: self
                .phases
                .iter()
                .zip(other.phases.iter())
                .map(|(&a, &b)| wrap_phase(a + b))
                .collect(),
        }
    }

    pub fn sup_phase(&self) -> f64 {
        self.phases.iter().map(|p| p.abs()).fold(0.0, f64::max)
    }

    /// Largest circle distance to another cochain.
    pub fn circle_distance(&self, other: &CircleCochain) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.phases
            .iter()
            .zip(other.phases.iter())
            .map(|(&a, &b)| wrap_phase(a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The K-valued coboundary in the relative orientation:
    /// `dK(x) = exp(-d(log x))`, wrapped.
    pub fn coboundary(&self) -> CircleCochain {
        let d = differential(&self.as_log_cochain());
        let phases = d.values().iter().map(|v| wrap_phase(-v[0].re)).collect();
        CircleCochain {
            group: self.group.clone(),
            degree: self.degree + 1,
            phases,
        }
    }

    /// Distance of the additive differential of the phases from the
    /// `2 pi Z` lattice; zero for multiplicative cocycles.
    pub fn multiplicative_cocycle_defect(&self) -> f64 {
        let d = differential(&self.as_log_cochain());
        d.values()
            .iter()
            .map(|v| {
                let x = v[0].re;
                (x - TAU * (x / TAU).round()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// The phases as a real cochain over the trivial one-dimensional module.
    pub fn as_log_cochain(&self) -> AbelianCochain {
        let module = Arc::new(GModule::trivial(self.group.clone(), 1, Field::Real));
        AbelianCochain::new(
            module,
            self.degree,
            self.phases
                .iter()
                .map(|&p| CVector::from_fn(1, |_, _| Complex64::new(p, 0.0)))
                .collect(),
            false,
        )
        .expect("phase vector is tuple-aligned")
    }

    fn from_log_cochain(group: Arc<FiniteGroup>, cochain: &AbelianCochain) -> CircleCochain {
        CircleCochain {
            group,
            degree: cochain.degree(),
            phases: cochain.values().iter().map(|v| wrap_phase(v[0].re)).collect(),
        }
    }

    /// Uniformly random phases bounded by `max_abs` radians.
    pub fn random(
        group: Arc<FiniteGroup>,
        degree: usize,
        max_abs: f64,
        rng: &mut impl Rng,
    ) -> CircleCochain {
        let count = group.tuple_count(degree);
        let phases = (0..count).map(|_| rng.gen_range(-max_abs..max_abs)).collect();
        CircleCochain {
            group,
            degree,
            phases,
        }
    }
}

/// A map `G^n -> U` whose coboundary lands in the central circle. For a
/// nonabelian ambient group the degree is 1; for the unit-scalar ambient
/// the degree may reach 3.
#[derive(Debug, Clone)]
pub struct RelativeCocycle {
    pair: CentralPair,
    action: Arc<GroupAction>,
    degree: usize,
    values: Vec<Matrix>,
    normalized: bool,
}

impl RelativeCocycle {
    pub fn new(
        pair: CentralPair,
        action: Arc<GroupAction>,
        degree: usize,
        values: Vec<Matrix>,
        normalized: bool,
        tol: &ToleranceConfig,
    ) -> Result<RelativeCocycle> {
        if action.target() != pair.ambient() {
            return Err(Error::InvalidInput(
                "action target differs from the ambient group of the pair".into(),
            ));
        }
        let abelian_ambient = pair.ambient().kind == GroupKind::UnitScalars;
        if !abelian_ambient && degree != 1 {
            return Err(Error::Unsupported(
                "nonabelian ambient groups support degree 1 only".into(),
            ));
        }
        if abelian_ambient && !(1..=3).contains(&degree) {
            return Err(Error::Unsupported(
                "unit-scalar ambient supports degrees 1 through 3".into(),
            ));
        }
        let group = action.group();
        if values.len() != group.tuple_count(degree) {
            return Err(Error::DimensionMismatch(format!(
                "degree-{degree} relative cocycle needs {} values, got {}",
                group.tuple_count(degree),
                values.len()
            )));
        }
        for v in &values {
            pair.ambient().check_membership(v, tol)?;
        }
        let cocycle = RelativeCocycle {
            pair,
            action: action.clone(),
            degree,
            values,
            normalized,
        };
        let residual = cocycle.relative_residual();
        if residual > tol.residual_tol {
            return Err(Error::NotACocycle {
                residual,
                tol: tol.residual_tol,
            });
        }
        if normalized {
            let worst = cocycle.normalization_residual();
            if worst > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "flagged normalized but deviates from I on identity arguments by {worst:.3e}"
                )));
            }
        }
        Ok(cocycle)
    }

    /// A genuine 1-cocycle viewed as a relative cocycle with trivial
    /// coboundary.
    pub fn from_nonabelian(
        pair: CentralPair,
        u: &NonabelianCocycle,
        tol: &ToleranceConfig,
    ) -> Result<RelativeCocycle> {
        RelativeCocycle::new(
            pair,
            u.action().clone(),
            1,
            u.values().to_vec(),
            false,
            tol,
        )
    }

    pub fn pair(&self) -> &CentralPair {
        &self.pair
    }

    pub fn action(&self) -> &Arc<GroupAction> {
        &self.action
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        self.action.group()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn value(&self, tuple: &[usize]) -> &Matrix {
        &self.values[self.group().tuple_index(tuple)]
    }

    /// Sup distance to another relative cocycle of the same shape.
    pub fn sup_distance(&self, other: &RelativeCocycle) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).fro_norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of values on identity-containing tuples from `I`.
    pub fn normalization_residual(&self) -> f64 {
        let group = self.group();
        let e = group.identity();
        let n = self.pair.ambient().size;
        let id = Matrix::identity(n, self.pair.ambient().field);
        group
            .tuples(self.degree)
            .filter(|t| t.contains(&e))
            .map(|t| (self.value(&t) - &id).fro_norm())
            .fold(0.0, f64::max)
    }

    /// The raw coboundary matrices over `G^{degree+1}` together with the
    /// largest distance of any of them from the central circle.
    fn coboundary_matrices(&self) -> (Vec<Matrix>, f64) {
        let group = self.group();
        let n = self.degree;
        let mut out = Vec::with_capacity(group.tuple_count(n + 1));
        let mut worst = 0.0f64;
        if n == 1 {
            for pair_t in group.tuples(2) {
                let (g, h) = (pair_t[0], pair_t[1]);
                let inner = &self.values[g] * &self.action.apply(g, &self.values[h]);
                let d = &self.values[group.mul(g, h)]
                    * &inner.try_inverse().expect("ambient values are invertible");
                worst = worst.max(self.pair.central_residual(&d));
                out.push(d);
            }
        } else {
            // Abelian ambient: all values are scalars (validated at
            // construction); the coboundary is exp(-d(log u)) in every
            // degree.
            let phases: Vec<f64> = self
                .values
                .iter()
                .map(|m| {
                    worst = worst.max(self.pair.central_residual(m));
                    (m.trace() / Complex64::new(self.pair.ambient().size as f64, 0.0)).arg()
                })
                .collect();
            let log_u = CircleCochain {
                group: group.clone(),
                degree: n,
                phases,
            };
            let db = log_u.coboundary();
            for t in group.tuples(n + 1) {
                out.push(db.matrix(&t, self.pair.ambient().size));
            }
        }
        (out, worst)
    }

    /// Largest distance of the coboundary from the central circle.
    pub fn relative_residual(&self) -> f64 {
        self.coboundary_matrices().1
    }

    /// Conjugation by an ambient element (degree 1): `g -> v^{-1} u_g (g v)`.
    /// Preserves the coboundary exactly, by centrality.
    pub fn conjugate_by(&self, v: &Matrix, tol: &ToleranceConfig) -> Result<RelativeCocycle> {
        if self.degree != 1 {
            return Err(Error::Unsupported(
                "conjugation applies to degree-1 relative cocycles".into(),
            ));
        }
        let v_inv = v.try_inverse()?;
        let values = self
            .group()
            .elements()
            .map(|g| &(&v_inv * &self.values[g]) * &self.action.apply(g, v))
            .collect();
        RelativeCocycle::new(self.pair, self.action.clone(), 1, values, false, tol)
    }
}

/// The coboundary `du` as a K-valued cochain of degree `n + 1`, stored via
/// logs and verified to be a multiplicative cocycle.
pub fn rel_coboundary(u: &RelativeCocycle, tol: &ToleranceConfig) -> Result<CircleCochain> {
    let (matrices, worst) = u.coboundary_matrices();
    if worst > tol.residual_tol {
        return Err(Error::NotAMember {
            kind: "unit-scalars (coboundary)".into(),
            residual: worst,
        });
    }
    let pair = u.pair();
    let phases = matrices
        .iter()
        .map(|m| pair.phase_of(m, tol))
        .collect::<Result<Vec<f64>>>()?;
    let sigma = CircleCochain {
        group: u.group().clone(),
        degree: u.degree() + 1,
        phases,
    };
    let defect = sigma.multiplicative_cocycle_defect();
    if defect > tol.residual_tol.max(1e-9) {
        return Err(Error::NotACocycle {
            residual: defect,
            tol: tol.residual_tol,
        });
    }
    Ok(sigma)
}

/// The coboundary scalar at one tuple, computed directly from the matrix
/// data (no phase round-trip): exact for exact inputs such as sign
/// matrices.
pub fn rel_coboundary_scalar(u: &RelativeCocycle, tuple: &[usize]) -> Result<Complex64> {
    let group = u.group();
    let n = u.pair().ambient().size;
    let d = if u.degree() == 1 {
        if tuple.len() != 2 {
            return Err(Error::DimensionMismatch(
                "degree-1 coboundary takes a pair".into(),
            ));
        }
        let (g, h) = (tuple[0], tuple[1]);
        let inner = u.value(&[g]) * &u.action().apply(g, u.value(&[h]));
        &u.values()[group.mul(g, h)] * &inner.try_inverse()?
    } else {
        let (matrices, _) = u.coboundary_matrices();
        matrices[group.tuple_index(tuple)].clone()
    };
    Ok(d.trace() / Complex64::new(n as f64, 0.0))
}

/// Outcome of the component (fiber-class) comparison.
#[derive(Debug, Clone)]
pub struct ComponentCheck {
    pub same: bool,
    /// When `same`, a K-valued cochain `x` with `du' = du . dK(x)`.
    pub witness: Option<CircleCochain>,
    /// Whether a nonzero `2 pi` lattice shift was involved in the decision.
    pub lattice_shift: bool,
    /// For abelian groups at degree-2 coboundaries: the antisymmetrization
    /// mismatch `max |d(g,h) - d(h,g)|` on the circle, a coboundary
    /// invariant that must vanish for cohomologous classes.
    pub antisym_mismatch: Option<f64>,
}

/// Integer matrix of the additive differential on trivial integer
/// coefficients, `C^n(G, Z) -> C^{n+1}(G, Z)`.
fn integer_differential(group: &FiniteGroup, n: usize) -> Vec<Vec<i64>> {
    let rows = group.tuple_count(n + 1);
    let cols = group.tuple_count(n);
    let mut d = vec![vec![0i64; cols]; rows];
    for gamma in group.tuples(n + 1) {
        let row = group.tuple_index(&gamma);
        d[row][group.tuple_index(&gamma[1..])] += 1;
        let mut merged = Vec::with_capacity(n);
        for i in 1..=n {
            merged.clear();
            merged.extend_from_slice(&gamma[..i - 1]);
            merged.push(group.mul(gamma[i - 1], gamma[i]));
            merged.extend_from_slice(&gamma[i + 1..]);
            d[row][group.tuple_index(&merged)] += if i % 2 == 0 { 1 } else { -1 };
        }
        d[row][group.tuple_index(&gamma[..n])] += if (n + 1) % 2 == 0 { 1 } else { -1 };
    }
    d
}

/// Largest problem size accepted by the exact lattice decision.
const LATTICE_CAP: usize = 20_000;

/// Decides whether `du` and `du'` are cohomologous in `Z^{n+1}(G, K)`,
/// exactly: the real-log classes always agree (vector-coefficient
/// cohomology vanishes), so the decision rests on the `2 pi Z` lattice,
/// settled by integer linear algebra.
pub fn same_component(
    u: &RelativeCocycle,
    u_prime: &RelativeCocycle,
    tol: &ToleranceConfig,
) -> Result<ComponentCheck> {
    if u.degree() != u_prime.degree() {
        return Err(Error::DimensionMismatch("relative cocycle degrees differ".into()));
    }
    if u.pair() != u_prime.pair() {
        return Err(Error::InvalidInput("central pairs differ".into()));
    }
    let sigma = rel_coboundary(u, tol)?;
    let sigma_prime = rel_coboundary(u_prime, tol)?;
    component_check_from_phases(u.group(), &sigma, &sigma_prime, tol)
}

fn component_check_from_phases(
    group: &Arc<FiniteGroup>,
    sigma: &CircleCochain,
    sigma_prime: &CircleCochain,
    tol: &ToleranceConfig,
) -> Result<ComponentCheck> {
    let degree = sigma.degree();
    let d_phases: Vec<f64> = sigma_prime
        .phases()
        .iter()
        .zip(sigma.phases().iter())
        .map(|(&a, &b)| wrap_phase(a - b))
        .collect();

    let antisym_mismatch = if degree == 2 && group.is_abelian() {
        let mut worst = 0.0f64;
        for g in group.elements() {
            for h in group.elements() {
                let diff = wrap_phase(
                    d_phases[group.tuple_index(&[g, h])] - d_phases[group.tuple_index(&[h, g])],
                );
                worst = worst.max(diff.abs());
            }
        }
        Some(worst)
    } else {
        None
    };

    // k = d(d_phases) / 2 pi must be an integer cochain since both sigmas
    // are multiplicative cocycles.
    let d_cochain = CircleCochain {
        group: group.clone(),
        degree,
        phases: d_phases.clone(),
    }
    .as_log_cochain();
    let delta_d = differential(&d_cochain);
    let mut k = Vec::with_capacity(delta_d.values().len());
    for v in delta_d.values() {
        let x = v[0].re / TAU;
        let r = x.round();
        if (x - r).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "coboundary difference is {x:.3e} * 2pi away from the lattice"
            )));
        }
        k.push(r as i64);
    }

    let mut lattice_shift = false;
    let m: Vec<i64> = if k.iter().all(|&x| x == 0) {
        vec![0; group.tuple_count(degree)]
    } else {
        lattice_shift = true;
        if group.tuple_count(degree + 1) > LATTICE_CAP {
            return Err(Error::Unsupported(format!(
                "lattice decision for |G|^{} = {} exceeds the supported size",
                degree + 1,
                group.tuple_count(degree + 1)
            )));
        }
        match intlat::solve(&integer_differential(group, degree), &k)? {
            Some(m) => m,
            None => {
                return Ok(ComponentCheck {
                    same: false,
                    witness: None,
                    lattice_shift: true,
                    antisym_mismatch,
                });
            }
        }
    };

    // d' = d - 2 pi m is now a closed real cochain, hence exact; solve
    // d(xi) = -d' for the witness phases.
    let trivial = GModule::trivial(group.clone(), 1, Field::Real);
    let op = differential_operator(&trivial, degree - 1).to_dense();
    let rhs = CVector::from_fn(d_phases.len(), |i, _| {
        Complex64::new(-(d_phases[i] - TAU * m[i] as f64), 0.0)
    });
    let (xi, residual) = least_squares_solve(&op, &rhs, tol)?;
    if residual > 1e-7 {
        return Err(Error::InvalidInput(format!(
            "closed phase difference failed to split (residual {residual:.3e}); \
             vector-coefficient cohomology should vanish"
        )));
    }
    let witness_phases: Vec<f64> = (0..group.tuple_count(degree - 1))
        .map(|i| wrap_phase(xi[i].re))
        .collect();
    let witness = CircleCochain {
        group: group.clone(),
        degree: degree - 1,
        phases: witness_phases,
    };
    if let Some(worst) = antisym_mismatch {
        if worst > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "lattice decision says cohomologous but the antisymmetrization \
                 invariant differs by {worst:.3e}"
            )));
        }
    }
    Ok(ComponentCheck {
        same: true,
        witness: Some(witness),
        lattice_shift,
        antisym_mismatch,
    })
}

/// Multiplies a relative cocycle by a K-valued cochain of the same degree:
/// the fiber transport `u -> u . x`, with `d(u x) = du . dK(x)`.
pub fn fiber_transport(
    u: &RelativeCocycle,
    x: &CircleCochain,
    tol: &ToleranceConfig,
) -> Result<RelativeCocycle> {
    if x.degree() != u.degree() {
        return Err(Error::DimensionMismatch(format!(
            "transport cochain has degree {}, cocycle has degree {}",
            x.degree(),
            u.degree()
        )));
    }
    let group = u.group().clone();
    let values = group
        .tuples(u.degree())
        .map(|t| u.value(&t).scale(x.scalar(&t)))
        .collect();
    RelativeCocycle::new(u.pair().clone(), u.action().clone(), u.degree(), values, false, tol)
}

/// The conjugating datum returned by the relative retraction: an ambient
/// element for nonabelian ambient groups, a K-valued `(n-1)`-cochain for
/// the abelian ambient.
#[derive(Debug, Clone)]
pub enum RelConjugator {
    Ambient(Matrix),
    Cochain(CircleCochain),
}

#[derive(Debug, Clone)]
pub struct RelativeRetraction {
    pub conjugator: RelConjugator,
    pub fiber_shift: CircleCochain,
    pub info: RetractInfo,
}

/// Two-stage local section: a K-valued cochain `w` moves `u'` into the
/// fiber of `du` (by the averaging splitting on K-logs), then a conjugation
/// within the fiber lands on `u`; the composite identity is
/// `v |> (u' . w) = u` with `|>` conjugation (nonabelian) or coboundary
/// shift (abelian ambient).
pub fn relative_retraction(
    u: &RelativeCocycle,
    u_prime: &RelativeCocycle,
    tol: &ToleranceConfig,
) -> Result<RelativeRetraction> {
    let stage1 = |e: Error| Error::RelativeStage {
        stage: "fiber alignment (w)",
        source: Box::new(e),
    };
    let stage2 = |e: Error| Error::RelativeStage {
        stage: "fiber conjugation (v)",
        source: Box::new(e),
    };

    let sigma = rel_coboundary(u, tol).map_err(stage1)?;
    let sigma_prime = rel_coboundary(u_prime, tol).map_err(stage1)?;
    let group = u.group().clone();
    let degree = u.degree();

    // Stage 1: w with dK(w) = sigma / sigma', i.e. d(log w) = d_phases.
    let d_phases: Vec<f64> = sigma_prime
        .phases()
        .iter()
        .zip(sigma.phases().iter())
        .map(|(&a, &b)| wrap_phase(a - b))
        .collect();
    let d_log = CircleCochain {
        group: group.clone(),
        degree: degree + 1,
        phases: d_phases,
    }
    .as_log_cochain();
    let closed_defect = differential(&d_log).sup_norm();
    let w = if closed_defect <= tol.residual_tol.max(1e-9) {
        // Nearby case: the phase difference is an exact real cocycle.
        let xi = averaging_split_unchecked(&d_log);
        CircleCochain::from_log_cochain(group.clone(), &xi)
    } else {
        // Wrapped around the lattice: fall back to the exact component
        // decision and use its witness.
        let check =
            component_check_from_phases(&group, &sigma, &sigma_prime, tol).map_err(stage1)?;
        if !check.same {
            return Err(stage1(Error::DifferentComponents));
        }
        check.witness.expect("witness accompanies a positive decision").inverse()
    };
    let aligned = fiber_transport(u_prime, &w, tol).map_err(stage1)?;

    // Stage 2: conjugate within the fiber.
    match u.pair().ambient().kind {
        GroupKind::UnitScalars => {
            // Abelian ambient: u = (u' w) . dK(v) for a (n-1)-cochain v.
            let tolc = tol;
            let pair = u.pair();
            let p: Vec<f64> = group
                .tuples(degree)
                .map(|t| {
                    let ratio = u.value(&t)
                        * &aligned.value(&t).try_inverse().expect("circle values invert");
                    pair.phase_of(&ratio, tolc)
                })
                .collect::<Result<_>>()
                .map_err(stage2)?;
            let p_log = CircleCochain {
                group: group.clone(),
                degree,
                phases: p.clone(),
            }
            .as_log_cochain();
            if differential(&p_log).sup_norm() > tol.residual_tol.max(1e-9) {
                return Err(stage2(Error::NotACocycle {
                    residual: differential(&p_log).sup_norm(),
                    tol: tol.residual_tol,
                }));
            }
            // dK(v) has phases -d(log v); we need phases p, so solve
            // d(xi_v) = -p.
            let xi = averaging_split_unchecked(&p_log.scale(Complex64::new(-1.0, 0.0)));
            let v = CircleCochain::from_log_cochain(group.clone(), &xi);
            let shifted = fiber_transport(&aligned, &v.coboundary(), tol).map_err(stage2)?;
            let residual = shifted.sup_distance(u);
            if residual > tol.residual_tol {
                return Err(stage2(Error::NoLocalConvergence {
                    iters: 0,
                    residual,
                }));
            }
            Ok(RelativeRetraction {
                conjugator: RelConjugator::Cochain(v),
                fiber_shift: w,
                info: RetractInfo {
                    newton_steps: 0,
                    residual,
                },
            })
        }
        _ => {
            // v |> u'' = u with (v |> x)_g = v x_g (g v)^{-1}; the Newton
            // retraction returns v with u''_g = v^{-1} u_g (g v), the same
            // element.
            let (v, info) =
                conjugation_retraction_raw(u.action(), u.values(), aligned.values(), tol)
                    .map_err(stage2)?;
            Ok(RelativeRetraction {
                conjugator: RelConjugator::Ambient(v),
                fiber_shift: w,
                info,
            })
        }
    }
}

/// Applies the composite `(v, w)` of [`relative_retraction`] to `u'` and
/// reports the distance to `u`; the certified identity of the theorem.
pub fn composite_identity_residual(
    u: &RelativeCocycle,
    u_prime: &RelativeCocycle,
    retraction: &RelativeRetraction,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let aligned = fiber_transport(u_prime, &retraction.fiber_shift, tol)?;
    let moved = match &retraction.conjugator {
        RelConjugator::Ambient(v) => {
            let v_inv = v.try_inverse()?;
            let group = u.group().clone();
            let values: Vec<Matrix> = group
                .elements()
                .map(|g| &(v * aligned.value(&[g])) * &u.action().apply(g, &v_inv))
                .collect();
            RelativeCocycle {
                pair: *u.pair(),
                action: u.action().clone(),
                degree: 1,
                values,
                normalized: false,
            }
        }
        RelConjugator::Cochain(v) => fiber_transport(&aligned, &v.coboundary(), tol)?,
    };
    Ok(moved.sup_distance(u))
}

/// Verification report for a projective representation: the two defining
/// identities, unitarity, and the multiplier (fiber label).
#[derive(Debug, Clone)]
pub struct ProjectiveRepReport {
    pub multiplier: CircleCochain,
    pub max_multiplier_residual: f64,
    pub max_star_residual: f64,
    pub max_membership_residual: f64,
    pub normalization_residual: f64,
    pub violations: Vec<(String, f64)>,
    pub passed: bool,
}

/// Checks `u(gh) = sigma(g,h) u(g) u(h)` and `u(g)* = sigma(g, g^{-1})
/// u(g^{-1})` for a normalized relative cocycle over the circle inside a
/// unitary group, under the trivial action.
pub fn projective_rep_check(
    u: &RelativeCocycle,
    tol: &ToleranceConfig,
) -> Result<ProjectiveRepReport> {
    if u.pair().ambient().kind != GroupKind::Unitary {
        return Err(Error::Unsupported(
            "projective representations live in unitary ambient groups".into(),
        ));
    }
    if !u.action().is_trivial() {
        return Err(Error::InvalidInput(
            "projective representations use the trivial action".into(),
        ));
    }
    if u.degree() != 1 {
        return Err(Error::InvalidInput("projective representations have degree 1".into()));
    }
    let sigma = rel_coboundary(u, tol)?;
    let group = u.group().clone();
    let normalization_residual = u.normalization_residual();
    let mut violations = Vec::new();
    let mut max_multiplier_residual = 0.0f64;
    let mut max_star_residual = 0.0f64;
    let mut max_membership_residual = 0.0f64;
    for g in group.elements() {
        let membership = u.value(&[g]).unitary_residual();
        if membership > tol.residual_tol {
            violations.push((format!("membership at {}", group.name(g)), membership));
        }
        max_membership_residual = max_membership_residual.max(membership);
        let ginv = group.inv(g);
        let expected = u.value(&[ginv]).scale(sigma.scalar(&[g, ginv]));
        let star_residual = (&u.value(&[g]).adjoint() - &expected).fro_norm();
        if star_residual > tol.residual_tol {
            violations.push((format!("star identity at {}", group.name(g)), star_residual));
        }
        max_star_residual = max_star_residual.max(star_residual);
        for h in group.elements() {
            let expected = (u.value(&[g]) * u.value(&[h])).scale(sigma.scalar(&[g, h]));
            let residual = (u.value(&[group.mul(g, h)]) - &expected).fro_norm();
            if residual > tol.residual_tol {
                violations.push((
                    format!("multiplier identity at ({}, {})", group.name(g), group.name(h)),
                    residual,
                ));
            }
            max_multiplier_residual = max_multiplier_residual.max(residual);
        }
    }
    let passed = violations.is_empty() && normalization_residual <= tol.residual_tol;
    Ok(ProjectiveRepReport {
        multiplier: sigma,
        max_multiplier_residual,
        max_star_residual,
        max_membership_residual,
        normalization_residual,
        violations,
        passed,
    })
}

/// The Pauli pair over the Klein four-group in `U(2)`: `x -> sigma_x`,
/// `z -> sigma_z`, `xz -> sigma_x sigma_z`, a projective representation
/// with antisymmetric multiplier `sigma(x,z)/sigma(z,x) = -1`.
pub fn pauli_relative_cocycle(tol: &ToleranceConfig) -> Result<RelativeCocycle> {
    let group = Arc::new(FiniteGroup::klein_four());
    let target = MatrixGroupSpec::unitary(2);
    let pair = CentralPair::scalar_circle(target)?;
    let action = Arc::new(GroupAction::trivial(group, target));
    let sx = Matrix::from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let sz = Matrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let sxz = &sx * &sz;
    let values = vec![Matrix::identity(2, Field::Complex), sx, sz, sxz];
    RelativeCocycle::new(pair, action, 1, values, true, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonabcoh::check_cocycle;
    use crate::testrng;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn genuine_z2xz2_rep() -> RelativeCocycle {
        // A genuine representation of the Klein group: diagonal signs.
        let group = Arc::new(FiniteGroup::klein_four());
        let target = MatrixGroupSpec::unitary(2);
        let pair = CentralPair::scalar_circle(target).unwrap();
        let action = Arc::new(GroupAction::trivial(group, target));
        let d = |a: f64, b: f64| Matrix::from_real_rows(2, 2, &[a, 0.0, 0.0, b]);
        let values = vec![d(1.0, 1.0), d(1.0, -1.0), d(-1.0, 1.0), d(-1.0, -1.0)];
        RelativeCocycle::new(pair, action, 1, values, true, &tol()).unwrap()
    }

    #[test]
    fn genuine_cocycle_has_trivial_coboundary() {
        let u = genuine_z2xz2_rep();
        assert!(check_cocycle(u.action(), u.values()) < 1e-15);
        let sigma = rel_coboundary(&u, &tol()).unwrap();
        assert!(sigma.sup_phase() < 1e-12);
    }

    #[test]
    fn pauli_coboundary_is_the_antisymmetric_multiplier() {
        let u = pauli_relative_cocycle(&tol()).unwrap();
        let sigma = rel_coboundary(&u, &tol()).unwrap();
        let group = u.group();
        let x = group.element_by_name("x").unwrap();
        let z = group.element_by_name("z").unwrap();
        // sigma(x, z) = 1, sigma(z, x) = -1, exactly (matrix route).
        assert_eq!(
            rel_coboundary_scalar(&u, &[x, z]).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            rel_coboundary_scalar(&u, &[z, x]).unwrap(),
            Complex64::new(-1.0, 0.0)
        );
        // And the stored phases are 0 and pi on the nose.
        assert_eq!(sigma.phase(&[x, z]), 0.0);
        assert_eq!(sigma.phase(&[z, x]), PI);
        assert!(sigma.multiplicative_cocycle_defect() < 1e-12);
    }

    #[test]
    fn coboundary_of_transported_cocycle_shifts_by_exactly_dk() {
        let mut rng = testrng(107);
        let u = pauli_relative_cocycle(&tol()).unwrap();
        let sigma = rel_coboundary(&u, &tol()).unwrap();
        for _ in 0..10 {
            let x = CircleCochain::random(u.group().clone(), 1, 1.0, &mut rng);
            let moved = fiber_transport(&u, &x, &tol()).unwrap();
            let sigma_moved = rel_coboundary(&moved, &tol()).unwrap();
            let expected = sigma.mul(&x.coboundary());
            assert!(sigma_moved.circle_distance(&expected) < 1e-10);
        }
    }

    #[test]
    fn transport_by_cocycle_preserves_the_fiber() {
        let u = pauli_relative_cocycle(&tol()).unwrap();
        let sigma = rel_coboundary(&u, &tol()).unwrap();
        // A K-valued 1-cocycle: a character of the Klein group as phases.
        let group = u.group().clone();
        let x = CircleCochain::new(
            group.clone(),
            1,
            // chi(e, x, z, xz) = (1, -1, 1, -1) has phases (0, pi, 0, pi).
            vec![0.0, PI, 0.0, PI],
        )
        .unwrap();
        assert!(x.coboundary().sup_phase() < 1e-12);
        let moved = fiber_transport(&u, &x, &tol()).unwrap();
        let sigma_moved = rel_coboundary(&moved, &tol()).unwrap();
        assert!(sigma_moved.circle_distance(&sigma) < 1e-12);
    }

    #[test]
    fn transport_by_trivial_cochain_is_identity() {
        let u = pauli_relative_cocycle(&tol()).unwrap();
        let x = CircleCochain::trivial(u.group().clone(), 1);
        let moved = fiber_transport(&u, &x, &tol()).unwrap();
        assert!(moved.sup_distance(&u) == 0.0);
    }

    #[test]
    fn same_component_separates_pauli_from_genuine() {
        let pauli = pauli_relative_cocycle(&tol()).unwrap();
        let genuine = genuine_z2xz2_rep();
        let check = same_component(&pauli, &genuine, &tol()).unwrap();
        assert!(!check.same);
        assert!(check.lattice_shift);
        // The antisymmetrization invariant detects it too.
        assert!(check.antisym_mismatch.unwrap() > 1.0);
    }

    #[test]
    fn same_component_accepts_fiber_transports() {
        let mut rng = testrng(109);
        let pauli = pauli_relative_cocycle(&tol()).unwrap();
        for _ in 0..5 {
            let x = CircleCochain::random(pauli.group().clone(), 1, 1.2, &mut rng);
            let moved = fiber_transport(&pauli, &x, &tol()).unwrap();
            let check = same_component(&pauli, &moved, &tol()).unwrap();
            assert!(check.same);
            // The witness reproduces the coboundary shift.
            let witness = check.witness.unwrap();
            let sigma = rel_coboundary(&pauli, &tol()).unwrap();
            let sigma_moved = rel_coboundary(&moved, &tol()).unwrap();
            let rebuilt = sigma.mul(&witness.coboundary());
            assert!(rebuilt.circle_distance(&sigma_moved) < 1e-8);
        }
    }

    #[test]
    fn same_component_of_equal_inputs_is_trivially_true() {
        let pauli = pauli_relative_cocycle(&tol()).unwrap();
        let check = same_component(&pauli, &pauli, &tol()).unwrap();
        assert!(check.same);
        assert!(!check.lattice_shift);
        assert!(check.witness.unwrap().coboundary().sup_phase() < 1e-10);
    }

    #[test]
    fn relative_retraction_fixed_point() {
        let pauli = pauli_relative_cocycle(&tol()).unwrap();
        let r = relative_retraction(&pauli, &pauli, &tol()).unwrap();
        assert_eq!(r.info.newton_steps, 0);
        assert!(r.fiber_shift.sup_phase() < 1e-12);
        match r.conjugator {
            RelConjugator::Ambient(v) => {
                assert!((&v - &Matrix::identity(2, Field::Complex)).fro_norm() < 1e-12)
            }
            RelConjugator::Cochain(_) => panic!("nonabelian ambient returns a matrix"),
        }
    }

    #[test]
    fn relative_retraction_recovers_constructed_perturbation() {
        let mut rng = testrng(113);
        let t = tol();
        let pauli = pauli_relative_cocycle(&t).unwrap();
        let target = *pauli.pair().ambient();
        for _ in 0..5 {
            let w_mat = crate::matnum::mat_exp(&target.random_lie(&mut rng, 0.1)).unwrap();
            let conjugated = pauli.conjugate_by(&w_mat, &t).unwrap();
            let shift = CircleCochain::random(pauli.group().clone(), 1, 0.1, &mut rng);
            let perturbed = fiber_transport(&conjugated, &shift, &t).unwrap();
            let r = relative_retraction(&pauli, &perturbed, &t).unwrap();
            let residual = composite_identity_residual(&pauli, &perturbed, &r, &t).unwrap();
            assert!(residual <= 1e-8, "composite residual {residual:.3e}");
        }
    }

    #[test]
    fn relative_retraction_rejects_different_components() {
        let pauli = pauli_relative_cocycle(&tol()).unwrap();
        let genuine = genuine_z2xz2_rep();
        match relative_retraction(&pauli, &genuine, &tol()) {
            Err(Error::RelativeStage { stage, source }) => {
                assert!(stage.contains("fiber alignment"));
                assert!(matches!(*source, Error::DifferentComponents));
            }
            other => panic!("expected a stage-1 error, got {other:?}"),
        }
    }

    #[test]
    fn relative_retraction_is_idempotent_at_the_repaired_point() {
        let mut rng = testrng(127);
        let t = tol();
        let pauli = pauli_relative_cocycle(&t).unwrap();
        let target = *pauli.pair().ambient();
        let w_mat = crate::matnum::mat_exp(&target.random_lie(&mut rng, 0.05)).unwrap();
        let perturbed = pauli.conjugate_by(&w_mat, &t).unwrap();
        let r = relative_retraction(&pauli, &perturbed, &t).unwrap();
        // Apply (v, w), then re-run: the second pass returns the identity
        // data immediately.
        let aligned = fiber_transport(&perturbed, &r.fiber_shift, &t).unwrap();
        let repaired = match &r.conjugator {
            RelConjugator::Ambient(v) => {
                aligned.conjugate_by(&v.try_inverse().unwrap(), &t).unwrap()
            }
            _ => unreachable!(),
        };
        let r2 = relative_retraction(&pauli, &repaired, &t).unwrap();
        assert_eq!(r2.info.newton_steps, 0);
        assert!(r2.fiber_shift.sup_phase() < 1e-7);
    }

    #[test]
    fn projective_check_passes_for_genuine_and_pauli() {
        let t = tol();
        let genuine = genuine_z2xz2_rep();
        let report = projective_rep_check(&genuine, &t).unwrap();
        assert!(report.passed);
        assert!(report.multiplier.sup_phase() < 1e-12);

        let pauli = pauli_relative_cocycle(&t).unwrap();
        let report = projective_rep_check(&pauli, &t).unwrap();
        assert!(report.passed, "violations: {:?}", report.violations);
        let group = pauli.group().clone();
        let x = group.element_by_name("x").unwrap();
        let z = group.element_by_name("z").unwrap();
        let ratio = rel_coboundary_scalar(&pauli, &[x, z]).unwrap()
            / rel_coboundary_scalar(&pauli, &[z, x]).unwrap();
        assert_eq!(ratio, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn projective_check_rejects_scaled_values() {
        let t = tol();
        let group = Arc::new(FiniteGroup::klein_four());
        let target = MatrixGroupSpec::unitary(2);
        let pair = CentralPair::scalar_circle(target).unwrap();
        let action = Arc::new(GroupAction::trivial(group, target));
        let sx = Matrix::from_real_rows(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let sz = Matrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let sxz = &sx * &sz;
        let values = vec![Matrix::identity(2, Field::Complex), sx, sz, sxz];
        // 2 sigma_x is not unitary; construction fails the membership check.
        assert!(matches!(
            RelativeCocycle::new(pair, action, 1, values, false, &t),
            Err(Error::NotAMember { .. })
        ));
    }

    #[test]
    fn abelian_ambient_relative_cocycles_work_in_degree_two() {
        // Unit-scalar ambient: every cochain is relative; the retraction
        // reduces to abelian splitting on phases.
        let mut rng = testrng(131);
        let t = tol();
        let group = Arc::new(FiniteGroup::cyclic(3));
        let target = MatrixGroupSpec::unit_scalars(1);
        let pair = CentralPair::scalar_circle(target).unwrap();
        let action = Arc::new(GroupAction::trivial(group.clone(), target));
        let make = |phases: &CircleCochain| {
            let values = group
                .tuples(2)
                .map(|tuple| phases.matrix(&tuple, 1))
                .collect::<Vec<_>>();
            RelativeCocycle::new(pair, action.clone(), 2, values, false, &t).unwrap()
        };
        let base = make(&CircleCochain::random(group.clone(), 2, 0.8, &mut rng));
        let shift = CircleCochain::random(group.clone(), 2, 0.1, &mut rng);
        let near = fiber_transport(&base, &shift, &t).unwrap();
        let r = relative_retraction(&base, &near, &t).unwrap();
        assert!(matches!(r.conjugator, RelConjugator::Cochain(_)));
        let residual = composite_identity_residual(&base, &near, &r, &t).unwrap();
        assert!(residual <= 1e-8, "abelian composite residual {residual:.3e}");
    }
}
