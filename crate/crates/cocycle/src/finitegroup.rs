//! Finite groups as multiplication tables, tuple enumeration over `G^n`,
//! and the uniform (Haar) average.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matnum::CVector;

/// A finite group given by its full Cayley table. Element `i * j` is
/// `mul[i][j]`; the identity and inverse tables are derived and validated at
/// construction.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    mul: Vec<Vec<usize>>,
    identity: usize,
    inv: Vec<usize>,
    names: Vec<String>,
}

impl FiniteGroup {
    /// Validates a raw table: closure, two-sided identity, inverses, and
    /// associativity (exhaustive up to order 64, randomized spot checks
    /// above).
    pub fn from_table(mul: Vec<Vec<usize>>, names: Option<Vec<String>>) -> Result<FiniteGroup> {
        let m = mul.len();
        if m == 0 {
            return Err(Error::InvalidInput("empty multiplication table".into()));
        }
        for row in &mul {
            if row.len() != m {
                return Err(Error::InvalidInput("multiplication table is not square".into()));
            }
            if row.iter().any(|&x| x >= m) {
                return Err(Error::InvalidInput("table entry out of range".into()));
            }
        }
        let identity = (0..m)
            .find(|&e| (0..m).all(|g| mul[e][g] == g && mul[g][e] == g))
            .ok_or(Error::MissingIdentity)?;
        let mut inv = vec![usize::MAX; m];
        for g in 0..m {
            let gi = (0..m)
                .find(|&h| mul[g][h] == identity && mul[h][g] == identity)
                .ok_or(Error::MissingInverse { index: g })?;
            inv[g] = gi;
        }
        if m <= 64 {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        if mul[mul[i][j]][k] != mul[i][mul[j][k]] {
                            return Err(Error::NotAssociative { i, j, k });
                        }
                    }
                }
            }
        } else {
            let mut state = 0x9e3779b97f4a7c15_u64;
            for _ in 0..200_000 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let i = (state >> 33) as usize % m;
                let j = (state >> 13) as usize % m;
                let k = state as usize % m;
                if mul[mul[i][j]][k] != mul[i][mul[j][k]] {
                    return Err(Error::NotAssociative { i, j, k });
                }
            }
        }
        let names = match names {
            Some(names) => {
                if names.len() != m {
                    return Err(Error::InvalidInput("names length differs from order".into()));
                }
                names
            }
            None => (0..m).map(|g| format!("g{g}")).collect(),
        };
        Ok(FiniteGroup {
            mul,
            identity,
            inv,
            names,
        })
    }

    /// Cyclic group of order `k`.
    pub fn cyclic(k: usize) -> FiniteGroup {
        let mul = (0..k).map(|i| (0..k).map(|j| (i + j) % k).collect()).collect();
        let names = (0..k)
            .map(|i| if i == 0 { "e".to_string() } else { format!("r{i}") })
            .collect();
        FiniteGroup::from_table(mul, Some(names)).expect("cyclic table is a group")
    }

    /// Klein four-group.
    pub fn klein_four() -> FiniteGroup {
        let mul = vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ];
        let names = vec!["e".into(), "x".into(), "z".into(), "xz".into()];
        FiniteGroup::from_table(mul, Some(names)).expect("klein table is a group")
    }

    /// Symmetric group on three letters, as permutation composition.
    pub fn symmetric3() -> FiniteGroup {
        // Permutations of {0,1,2} in a fixed order.
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [1, 2, 0],
            [2, 0, 1],
            [1, 0, 2],
            [0, 2, 1],
            [2, 1, 0],
        ];
        let compose = |p: &[usize; 3], q: &[usize; 3]| [p[q[0]], p[q[1]], p[q[2]]];
        let index_of = |r: [usize; 3]| perms.iter().position(|p| *p == r).unwrap();
        let mul = (0..6)
            .map(|i| (0..6).map(|j| index_of(compose(&perms[i], &perms[j]))).collect())
            .collect();
        let names = vec![
            "e".into(),
            "r1".into(),
            "r2".into(),
            "s0".into(),
            "s1".into(),
            "s2".into(),
        ];
        FiniteGroup::from_table(mul, Some(names)).expect("S3 table is a group")
    }

    /// Direct product, elements ordered `(a, b) -> a * |H| + b`.
    pub fn direct_product(g: &FiniteGroup, h: &FiniteGroup) -> FiniteGroup {
        let (m, n) = (g.order(), h.order());
        let mul = (0..m * n)
            .map(|x| {
                let (a, b) = (x / n, x % n);
                (0..m * n)
                    .map(|y| {
                        let (c, d) = (y / n, y % n);
                        g.mul(a, c) * n + h.mul(b, d)
                    })
                    .collect()
            })
            .collect();
        let names = (0..m * n)
            .map(|x| format!("({},{})", g.name(x / n), h.name(x % n)))
            .collect();
        FiniteGroup::from_table(mul, Some(names)).expect("product table is a group")
    }

    /// Named constructor used by the CLI: "cyclic-k", "klein-four",
    /// "symmetric-3" (aliases "z2", "z3", "z4", "s3", "z2xz2").
    pub fn named(spec: &str) -> Result<FiniteGroup> {
        match spec {
            "klein-four" | "z2xz2" => Ok(FiniteGroup::klein_four()),
            "symmetric-3" | "s3" => Ok(FiniteGroup::symmetric3()),
            other => {
                let k = other
                    .strip_prefix("cyclic-")
                    .or_else(|| other.strip_prefix('z'))
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&k| k >= 1 && k <= 64);
                match k {
                    Some(k) => Ok(FiniteGroup::cyclic(k)),
                    None => Err(Error::InvalidInput(format!("unknown group spec '{other}'"))),
                }
            }
        }
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inv[g]
    }

    pub fn name(&self, g: usize) -> &str {
        &self.names[g]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn element_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> {
        0..self.order()
    }

    pub fn is_abelian(&self) -> bool {
        let m = self.order();
        (0..m).all(|g| (0..m).all(|h| self.mul[g][h] == self.mul[h][g]))
    }

    pub fn table(&self) -> &Vec<Vec<usize>> {
        &self.mul
    }

    /// Number of tuples in `G^n`.
    pub fn tuple_count(&self, n: usize) -> usize {
        self.order().pow(n as u32)
    }

    /// Index of a tuple in the fixed lexicographic enumeration of `G^n`
    /// (leftmost component most significant).
    pub fn tuple_index(&self, tuple: &[usize]) -> usize {
        let m = self.order();
        tuple.iter().fold(0, |acc, &g| acc * m + g)
    }

    /// Tuple with the given index, inverse of [`tuple_index`].
    ///
    /// [`tuple_index`]: FiniteGroup::tuple_index
    pub fn tuple_at(&self, n: usize, mut index: usize) -> Vec<usize> {
        let m = self.order();
        let mut tuple = vec![0; n];
        for slot in (0..n).rev() {
            tuple[slot] = index % m;
            index /= m;
        }
        tuple
    }

    /// Iterates over `G^n` in the fixed enumeration order.
    pub fn tuples(&self, n: usize) -> TupleIter<'_> {
        TupleIter {
            group: self,
            n,
            next: 0,
            total: self.tuple_count(n),
        }
    }
}

/// Deterministic lexicographic enumeration of `G^n`.
pub struct TupleIter<'a> {
    group: &'a FiniteGroup,
    n: usize,
    next: usize,
    total: usize,
}

impl<'a> Iterator for TupleIter<'a> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.next >= self.total {
            return None;
        }
        let tuple = self.group.tuple_at(self.n, self.next);
        self.next += 1;
        Some(tuple)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total - self.next;
        (left, Some(left))
    }
}

/// Uniform average `(1/|G|) sum_g f(g)` of an element-indexed family of
/// vectors.
pub fn haar_average(group: &FiniteGroup, f: impl Fn(usize) -> CVector) -> Result<CVector> {
    let mut acc: Option<CVector> = None;
    for g in group.elements() {
        let v = f(g);
        match &mut acc {
            None => acc = Some(v),
            Some(sum) => {
                if sum.len() != v.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "haar_average: vector at {} has length {}, expected {}",
                        group.name(g),
                        v.len(),
                        sum.len()
                    )));
                }
                *sum += v;
            }
        }
    }
    let mut sum = acc.expect("group is non-empty");
    sum /= Complex64::new(group.order() as f64, 0.0);
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cyclic_two_is_xor() {
        let g = FiniteGroup::cyclic(2);
        assert_eq!(g.order(), 2);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.mul(i, j), i ^ j);
            }
        }
    }

    #[test]
    fn klein_four_every_element_self_inverse() {
        let g = FiniteGroup::klein_four();
        assert_eq!(g.order(), 4);
        for x in g.elements() {
            assert_eq!(g.inv(x), x);
        }
    }

    #[test]
    fn symmetric3_is_nonabelian() {
        let g = FiniteGroup::symmetric3();
        assert_eq!(g.order(), 6);
        assert!(!g.is_abelian());
        let witness = g
            .elements()
            .flat_map(|a| g.elements().map(move |b| (a, b)))
            .find(|&(a, b)| g.mul(a, b) != g.mul(b, a));
        assert!(witness.is_some());
    }

    #[test]
    fn inverse_and_identity_laws() {
        for g in [FiniteGroup::cyclic(5), FiniteGroup::symmetric3(), FiniteGroup::klein_four()] {
            for x in g.elements() {
                assert_eq!(g.inv(g.inv(x)), x);
                assert_eq!(g.mul(x, g.inv(x)), g.identity());
            }
        }
    }

    #[test]
    fn rejects_non_associative_table() {
        // A quasigroup table (Latin square) that is not associative.
        let mul = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(
            FiniteGroup::from_table(mul, None),
            Err(Error::NotAssociative { .. })
        ));
    }

    #[test]
    fn rejects_missing_identity() {
        // Left-zero semigroup: associative, no identity.
        let mul = vec![vec![0, 0], vec![0, 0]];
        assert!(matches!(
            FiniteGroup::from_table(mul, None),
            Err(Error::MissingIdentity)
        ));
    }

    #[test]
    fn tuple_enumeration_is_bijective_and_lexicographic() {
        let g = FiniteGroup::cyclic(3);
        let tuples: Vec<_> = g.tuples(2).collect();
        assert_eq!(tuples.len(), 9);
        assert_eq!(tuples[0], vec![0, 0]);
        assert_eq!(tuples[1], vec![0, 1]);
        assert_eq!(tuples[3], vec![1, 0]);
        for (k, t) in tuples.iter().enumerate() {
            assert_eq!(g.tuple_index(t), k);
            assert_eq!(g.tuple_at(2, k), *t);
        }
    }

    #[test]
    fn haar_average_of_constant_family() {
        let g = FiniteGroup::symmetric3();
        let v = CVector::from_fn(2, |i, _| c(i as f64 + 0.5, -1.0));
        let avg = haar_average(&g, |_| v.clone()).unwrap();
        assert!((avg - v).norm() < 1e-15);
    }

    #[test]
    fn haar_average_balanced_signs_vanishes() {
        let g = FiniteGroup::cyclic(2);
        let avg = haar_average(&g, |x| {
            CVector::from_fn(1, |_, _| c(if x == 0 { 1.0 } else { -1.0 }, 0.0))
        })
        .unwrap();
        assert!(avg.norm() < 1e-15);
    }

    #[test]
    fn haar_average_cube_roots_of_unity_vanishes() {
        let g = FiniteGroup::cyclic(3);
        let omega = c(-0.5, 3f64.sqrt() / 2.0);
        let avg = haar_average(&g, |x| CVector::from_fn(1, |_, _| omega.powu(x as u32))).unwrap();
        assert!(avg.norm() < 1e-15);
    }

    #[test]
    fn haar_average_is_translation_invariant() {
        let g = FiniteGroup::symmetric3();
        let values: Vec<CVector> = g
            .elements()
            .map(|x| CVector::from_fn(3, |i, _| c((x * 7 + i) as f64 % 5.0, (x + i) as f64 % 3.0)))
            .collect();
        let base = haar_average(&g, |x| values[x].clone()).unwrap();
        for h in g.elements() {
            let shifted = haar_average(&g, |x| values[g.mul(h, x)].clone()).unwrap();
            assert!((&shifted - &base).norm() < 1e-14);
        }
    }

    #[test]
    fn haar_average_rejects_dimension_mismatch() {
        let g = FiniteGroup::cyclic(2);
        let out = haar_average(&g, |x| CVector::zeros(if x == 0 { 1 } else { 2 }));
        assert!(matches!(out, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn named_constructors() {
        assert_eq!(FiniteGroup::named("z2").unwrap().order(), 2);
        assert_eq!(FiniteGroup::named("cyclic-6").unwrap().order(), 6);
        assert_eq!(FiniteGroup::named("klein-four").unwrap().order(), 4);
        assert_eq!(FiniteGroup::named("s3").unwrap().order(), 6);
        assert!(FiniteGroup::named("frobnicate").is_err());
    }

    #[test]
    fn direct_product_of_cyclics_matches_klein() {
        let z2 = FiniteGroup::cyclic(2);
        let p = FiniteGroup::direct_product(&z2, &z2);
        let k = FiniteGroup::klein_four();
        assert_eq!(p.order(), 4);
        for x in p.elements() {
            assert_eq!(p.inv(x), x);
        }
        // Same table up to the canonical ordering.
        assert_eq!(p.table(), k.table());
    }
}
