//! Permutation-symmetric and restricted symmetric projectors on small qudit
//! registers.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, C64};
use crate::operator::TruncatedOperator;

/// Largest total Hilbert-space dimension `d^m` accepted.
pub const MAX_TOTAL_DIM: usize = 1024;

/// Idempotency tolerance for restricted symmetric projectors.
pub const IDEMPOTENCY_TOL: f64 = 1e-10;

fn total_dim(d: usize, copies: usize) -> Result<usize> {
    if d < 2 {
        return Err(invalid(format!("local dimension must be at least 2, got {d}")));
    }
    if copies == 0 {
        return Err(invalid("at least one copy is required"));
    }
    let mut total: usize = 1;
    for _ in 0..copies {
        total = total.saturating_mul(d);
        if total > MAX_TOTAL_DIM {
            return Err(Error::Guard(format!(
                "{d}^{copies} exceeds the dense limit {MAX_TOTAL_DIM}"
            )));
        }
    }
    Ok(total)
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..m).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..m).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

fn digits(mut index: usize, d: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

/// Operator moving tensor factor `i` to position `perm[i]`.
pub fn permutation_operator(d: usize, perm: &[usize]) -> Result<TruncatedOperator> {
    let m = perm.len();
    let total = total_dim(d, m)?;
    let mut seen = vec![false; m];
    for &p in perm {
        if p >= m || seen[p] {
            return Err(invalid(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let mut out = DMatrix::<C64>::zeros(total, total);
    for col in 0..total {
        let src = digits(col, d, m);
        let mut dst = vec![0; m];
        for (i, &p) in perm.iter().enumerate() {
            dst[p] = src[i];
        }
        out[(undigits(&dst, d), col)] = C64::new(1.0, 0.0);
    }
    TruncatedOperator::new(out)
}

/// `(1/m!) Σ_π π` on `(C^d)^{⊗m}`.
pub fn sym_projector(d: usize, m: usize) -> Result<TruncatedOperator> {
    let total = total_dim(d, m)?;
    let perms = permutations(m);
    let weight = 1.0 / perms.len() as f64;
    let mut out = DMatrix::<C64>::zeros(total, total);
    for col in 0..total {
        let src = digits(col, d, m);
        for perm in &perms {
            let mut dst = vec![0; m];
            for (i, &p) in perm.iter().enumerate() {
                dst[p] = src[i];
            }
            out[(undigits(&dst, d), col)] += C64::new(weight, 0.0);
        }
    }
    Ok(TruncatedOperator::trusted(out, true, true))
}

/// Local dimension `d`, `n` reference copies and up to `k` exceptional
/// factors outside the range of `p0`.
#[derive(Clone, Debug)]
pub struct SymmetricSpec {
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub p0: TruncatedOperator,
}

impl SymmetricSpec {
    pub fn new(d: usize, n: usize, k: usize, p0: TruncatedOperator) -> Result<Self> {
        let spec = Self { d, n, k, p0 };
        spec.validate()?;
        Ok(spec)
    }

    /// `P₀ = |0⟩⟨0|` on `C^d`.
    pub fn ground(d: usize, n: usize, k: usize) -> Result<Self> {
        let mut diag = vec![0.0; d];
        if let Some(first) = diag.first_mut() {
            *first = 1.0;
        }
        Self::new(d, n, k, TruncatedOperator::from_real_diagonal(&diag))
    }

    pub fn copies(&self) -> usize {
        self.n + self.k
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        total_dim(self.d, self.copies())?;
        if self.p0.dim() != self.d {
            return Err(Error::DimensionMismatch {
                left: self.p0.dim(),
                right: self.d,
            });
        }
        if !self.p0.is_hermitian() || self.p0.idempotency_defect() > 1e-9 {
            return Err(invalid("P0 must be an orthogonal projector"));
        }
        Ok(())
    }
}

/// `Σ_b ⊗_i P_{b_i}` over bit strings of length `n + k` with at most `k` ones,
/// where `P₁ = I - P₀`.
pub fn restricted_projector(spec: &SymmetricSpec) -> Result<TruncatedOperator> {
    spec.validate()?;
    let p0 = spec.p0.clone();
    let p1 = spec.p0.complement();
    // by_ones[c] sums the strings read so far that contain c ones
    let mut by_ones: Vec<Option<TruncatedOperator>> = vec![Some(p0.clone()), Some(p1.clone())];
    for _ in 1..spec.copies() {
        let mut next: Vec<Option<TruncatedOperator>> = vec![None; by_ones.len() + 1];
        for (c, term) in by_ones.iter().enumerate() {
            let Some(term) = term else { continue };
            if c > spec.k {
                continue;
            }
            let zero = term.kron(&p0);
            next[c] = Some(match next[c].take() {
                Some(acc) => &acc + &zero,
                None => zero,
            });
            if c < spec.k {
                let one = term.kron(&p1);
                next[c + 1] = Some(match next[c + 1].take() {
                    Some(acc) => &acc + &one,
                    None => one,
                });
            }
        }
        by_ones = next;
    }
    let total = spec.d.pow(spec.copies() as u32);
    let mut out = DMatrix::<C64>::zeros(total, total);
    for term in by_ones.iter().take(spec.k + 1).flatten() {
        out += term.entries();
    }
    Ok(TruncatedOperator::trusted(linalg::hermitian_part(&out), true, true))
}

/// `P^{n+k}_{H̄} · P_Sym^{n+k}`, checked to be idempotent.
pub fn restricted_sym_projector(spec: &SymmetricSpec) -> Result<TruncatedOperator> {
    let restricted = restricted_projector(spec)?;
    let sym = sym_projector(spec.d, spec.copies())?;
    let product = restricted.entries() * sym.entries();
    let square = &product * &product;
    let defect = linalg::max_abs(&(&square - &product));
    if defect > IDEMPOTENCY_TOL {
        return Err(Error::NumericalConsistency(format!(
            "restricted symmetric product is not idempotent (defect {defect:.3e})"
        )));
    }
    Ok(TruncatedOperator::trusted(linalg::hermitian_part(&product), true, true))
}

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(5).len(), 120);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn sym_ranks_are_binomial() {
        for (d, m) in [(2, 2), (2, 3), (3, 2), (3, 3), (2, 5), (4, 3)] {
            let p = sym_projector(d, m).unwrap();
            assert_eq!(p.rank().unwrap(), binomial(d + m - 1, m), "d={d} m={m}");
            assert!(p.idempotency_defect() <= 1e-12);
        }
        assert_eq!(sym_projector(2, 2).unwrap().rank().unwrap(), 3);
        assert_eq!(sym_projector(2, 3).unwrap().rank().unwrap(), 4);
    }

    #[test]
    fn transpositions_fix_sym() {
        let (d, m) = (3, 3);
        let p = sym_projector(d, m).unwrap();
        for i in 0..m {
            for j in i + 1..m {
                let mut perm: Vec<usize> = (0..m).collect();
                perm.swap(i, j);
                let pi = permutation_operator(d, &perm).unwrap();
                assert!(linalg::max_abs(&((&pi * &p).entries() - p.entries())) <= 1e-13);
            }
        }
    }

    #[test]
    fn guard_limits() {
        assert!(matches!(sym_projector(4, 6), Err(Error::Guard(_))));
        assert!(matches!(sym_projector(1, 2), Err(Error::InvalidParameter(_))));
        assert!(permutation_operator(2, &[0, 0]).is_err());
    }

    #[test]
    fn restricted_single_exception() {
        // strings 00, 01, 10 sum to I⊗I - P₁⊗P₁
        let spec = SymmetricSpec::ground(2, 1, 1).unwrap();
        let got = restricted_projector(&spec).unwrap();
        let p1 = spec.p0.complement();
        let want = &TruncatedOperator::identity(4) - &p1.kron(&p1);
        assert!(linalg::max_abs(&(got.entries() - want.entries())) <= 1e-15);
    }

    #[test]
    fn restricted_without_exceptions_is_power_of_p0() {
        let spec = SymmetricSpec::ground(3, 3, 0).unwrap();
        let got = restricted_projector(&spec).unwrap();
        let want = spec.p0.kron(&spec.p0).kron(&spec.p0);
        assert!(linalg::max_abs(&(got.entries() - want.entries())) <= 1e-15);
    }

    #[test]
    fn restricted_commutes_with_sym_and_permutations() {
        let spec = SymmetricSpec::ground(2, 3, 1).unwrap();
        let r = restricted_projector(&spec).unwrap();
        let s = sym_projector(2, 4).unwrap();
        assert!(r.commutator(&s).unwrap().max_abs() <= 1e-12);
        for perm in permutations(4) {
            let pi = permutation_operator(2, &perm).unwrap();
            assert!(pi.commutator(&r).unwrap().max_abs() <= 1e-12);
        }
        assert!(r.idempotency_defect() <= 1e-12);
    }

    #[test]
    fn restricted_sym_examples() {
        let spec = SymmetricSpec::ground(2, 2, 1).unwrap();
        let p = restricted_sym_projector(&spec).unwrap();
        assert_eq!(p.rank().unwrap(), 2);
        assert!(p.idempotency_defect() <= 1e-10);

        // rank-one reference state gives the single product state |ν⟩^{⊗n}
        let nu = nalgebra::DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let p0 = TruncatedOperator::projector(&nu * nu.adjoint()).unwrap();
        let spec = SymmetricSpec::new(2, 3, 0, p0).unwrap();
        let p = restricted_sym_projector(&spec).unwrap();
        assert_eq!(p.rank().unwrap(), 1);
        let product = nu.kronecker(&nu).kronecker(&nu);
        let overlap = linalg::quad_form(p.entries(), &product).re;
        assert!((overlap - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn restricted_sym_rank_below_factors() {
        for (d, n, k) in [(2, 2, 1), (3, 2, 1), (2, 3, 2)] {
            let spec = SymmetricSpec::ground(d, n, k).unwrap();
            let both = restricted_sym_projector(&spec).unwrap().rank().unwrap();
            let r = restricted_projector(&spec).unwrap().rank().unwrap();
            let s = sym_projector(d, n + k).unwrap().rank().unwrap();
            assert!(both <= r.min(s));
            // symmetric states with at most k excitations outside |0⟩
            let count: usize = (0..=k).map(|j| binomial(d - 1 + j - 1, j)).sum();
            assert_eq!(both, count, "d={d} n={n} k={k}");
        }
    }

    #[test]
    fn spec_validation() {
        let bad = TruncatedOperator::from_real_diagonal(&[0.5, 0.0]);
        assert!(SymmetricSpec::new(2, 2, 1, bad).is_err());
        assert!(SymmetricSpec::ground(2, 0, 1).is_err());
        assert!(matches!(SymmetricSpec::ground(4, 5, 1), Err(Error::Guard(_))));
    }
}
