//! Sparse exact coefficient rings over one, two or three tensor slots.
//!
//! Variable layout, single slot (16 variables):
//!
//! ```text
//! index 0      : z            (Laurent: exponent may be negative)
//! index 1..=10 : g00 g01 g02 g03 g11 g12 g13 g22 g23 g33   (polynomial)
//! index 11..=14: P0 P1 P2 P3  (polynomial)
//! index 15     : E            (Laurent)
//! ```
//!
//! Tensor slots append further `(P0..P3, E)` blocks; `z` and the metric
//! entries are shared base-ring parameters.  Monomials are exponent vectors
//! compared lexicographically on this fixed list, so `BTreeMap` iteration is
//! the canonical term order.
//!
//! Key operations: ring arithmetic, the derivation [`MPoly::d_p0`] with
//! `d(P0) = 1`, `d(E) = z*E` and `d = 0` on everything else, the
//! contract-checked endomorphism [`CoeffScalar::substitute`], and the
//! slot-plumbing maps [`embed`] / [`collapse2`] that implement the tensor
//! widening and the multiplication map `U (x) U -> U` on coefficients.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ground::{Gaussian, Rational};

/// Number of independent symmetric metric entries.
pub const GVARS: usize = 10;
/// Variables per tensor slot: four momenta plus the group-like `E`.
pub const SLOT_VARS: usize = 5;

/// Total variable count for a ring with `slots` tensor slots.
pub const fn var_count(slots: usize) -> usize {
    1 + GVARS + SLOT_VARS * slots
}

/// Single-slot variable count.
pub const V1: usize = var_count(1);
/// Two-slot variable count.
pub const V2: usize = var_count(2);
/// Three-slot variable count.
pub const V3: usize = var_count(3);

/// Index of `z`.
pub const fn zvar() -> usize {
    0
}

/// Index of the metric entry `g^{mu nu}` (stored for `mu <= nu`).
pub const fn gvar(mu: usize, nu: usize) -> usize {
    let (a, b) = if mu <= nu { (mu, nu) } else { (nu, mu) };
    // Row-major upper triangle: offsets 0,4,7,9 for rows 0..3.
    let row_start = match a {
        0 => 0,
        1 => 4,
        2 => 7,
        _ => 9,
    };
    1 + row_start + (b - a)
}

/// Index of `P_mu` in the given slot.
pub const fn pvar(slot: usize, mu: usize) -> usize {
    1 + GVARS + SLOT_VARS * slot + mu
}

/// Index of `E` in the given slot.
pub const fn evar(slot: usize) -> usize {
    1 + GVARS + SLOT_VARS * slot + 4
}

/// Exponent vector; `i16` leaves ample headroom for every computed degree.
pub type Expo<const N: usize> = [i16; N];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    /// The image of `E` is not an invertible monomial `u * E^k` with `k != 0`.
    #[error("InvalidESubstitution: image of E must be a unit multiple of a nonzero power of E")]
    InvalidESubstitution,
    /// The images of `P0` and `E` contradict `E = exp(z*P0)`.
    #[error("InconsistentPair: images of P0 and E violate E = exp(z*P0)")]
    InconsistentPair,
    /// Division or a negative power of something that is not a unit monomial.
    #[error("NonInvertible: only unit multiples of z- and E-powers can be inverted")]
    NonInvertible,
}

/// Sparse multivariate Laurent polynomial with Gaussian-rational coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct MPoly<R, const N: usize> {
    terms: BTreeMap<Expo<N>, Gaussian<R>>,
}

/// Single-copy coefficient ring.
pub type CoeffScalar<R> = MPoly<R, V1>;
/// Coefficient ring of the tensor square.
pub type TensorCoeff<R> = MPoly<R, V2>;
/// Coefficient ring of the tensor cube.
pub type Tensor3Coeff<R> = MPoly<R, V3>;

impl<R: Rational, const N: usize> MPoly<R, N> {
    pub fn zero() -> Self {
        MPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Gaussian::one())
    }

    pub fn constant(c: Gaussian<R>) -> Self {
        let mut p = Self::zero();
        p.add_term([0; N], c);
        p
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Gaussian::from_int(n))
    }

    pub fn imag_unit() -> Self {
        Self::constant(Gaussian::i())
    }

    pub fn var(idx: usize) -> Self {
        Self::var_pow(idx, 1)
    }

    pub fn var_pow(idx: usize, k: i16) -> Self {
        let mut e = [0i16; N];
        e[idx] = k;
        Self::monomial(e, Gaussian::one())
    }

    pub fn monomial(expo: Expo<N>, c: Gaussian<R>) -> Self {
        let mut p = Self::zero();
        p.add_term(expo, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Expo<N>, &Gaussian<R>)> {
        self.terms.iter()
    }

    /// Merge a term in, dropping it if the total cancels.
    pub fn add_term(&mut self, expo: Expo<N>, c: Gaussian<R>) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(expo) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in other.terms.iter() {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in other.terms.iter() {
            out.add_term(*e, c.neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero();
        for (e, c) in self.terms.iter() {
            out.terms.insert(*e, c.neg());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ea, ca) in self.terms.iter() {
            for (eb, cb) in other.terms.iter() {
                let mut e = *ea;
                for (x, y) in e.iter_mut().zip(eb.iter()) {
                    *x += *y;
                }
                out.add_term(e, ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &Gaussian<R>) -> Self {
        let mut out = Self::zero();
        if c.is_zero() {
            return out;
        }
        for (e, q) in self.terms.iter() {
            out.add_term(*e, q.mul(c));
        }
        out
    }

    /// `self^k` for `k >= 0`; negative powers require a unit monomial.
    pub fn pow(&self, k: i32) -> Result<Self, ScalarError> {
        if k < 0 {
            let inv = self.try_invert().ok_or(ScalarError::NonInvertible)?;
            return inv.pow(-k);
        }
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        Ok(acc)
    }

    /// Inverse of a unit monomial: a single term whose polynomial variables
    /// (metric entries and momenta) all have exponent zero.
    pub fn try_invert(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next().unwrap();
        for (idx, k) in e.iter().enumerate() {
            if *k != 0 && !var_is_laurent::<N>(idx) {
                return None;
            }
        }
        let mut einv = [0i16; N];
        for (x, y) in einv.iter_mut().zip(e.iter()) {
            *x = -*y;
        }
        Some(Self::monomial(einv, c.inv()?))
    }

    /// The coefficient of the unit monomial.
    pub fn constant_part(&self) -> Gaussian<R> {
        self.terms.get(&[0; N]).cloned().unwrap_or_else(Gaussian::zero)
    }

    /// `Some(c)` when the value is the constant `c` (possibly zero).
    pub fn as_constant(&self) -> Option<Gaussian<R>> {
        match self.terms.len() {
            0 => Some(Gaussian::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                (*e == [0; N]).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// `Some((expo, c))` when the value is a single term.
    pub fn as_monomial(&self) -> Option<(Expo<N>, Gaussian<R>)> {
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            Some((*e, c.clone()))
        } else {
            None
        }
    }

    /// Derivation with `d(P0) = 1`, `d(E) = z*E`, zero on `z`, `g`, `P_k`.
    /// The `E` rule is the chain rule for `E = exp(z*P0)`.
    pub fn d_p0(&self, slot: usize) -> Self {
        let p0 = pvar(slot, 0);
        let e = evar(slot);
        let mut out = Self::zero();
        for (expo, c) in self.terms.iter() {
            if expo[p0] != 0 {
                let mut de = *expo;
                de[p0] -= 1;
                out.add_term(de, c.scale(&crate::ground::rat_int(expo[p0] as i64)));
            }
            if expo[e] != 0 {
                let mut de = *expo;
                de[zvar()] += 1;
                out.add_term(de, c.scale(&crate::ground::rat_int(expo[e] as i64)));
            }
        }
        out
    }

    /// Plain partial derivative with respect to `P_k` (`k` in 1..=3).
    pub fn d_pk(&self, slot: usize, k: usize) -> Self {
        debug_assert!((1..=3).contains(&k));
        let pk = pvar(slot, k);
        let mut out = Self::zero();
        for (expo, c) in self.terms.iter() {
            if expo[pk] != 0 {
                let mut de = *expo;
                de[pk] -= 1;
                out.add_term(de, c.scale(&crate::ground::rat_int(expo[pk] as i64)));
            }
        }
        out
    }

    /// Apply a ring homomorphism given by per-variable images.  Negative
    /// exponents require the corresponding image to be a unit monomial.
    pub fn map_vars<const M: usize>(
        &self,
        images: &[MPoly<R, M>; N],
    ) -> Result<MPoly<R, M>, ScalarError> {
        let mut out = MPoly::<R, M>::zero();
        for (expo, c) in self.terms.iter() {
            let mut term = MPoly::<R, M>::constant(c.clone());
            for (idx, k) in expo.iter().enumerate() {
                if *k != 0 {
                    term = term.mul(&images[idx].pow(*k as i32)?);
                }
            }
            out = out.add(&term);
        }
        Ok(out)
    }
}

/// Whether a variable index may carry negative exponents.
pub fn var_is_laurent<const N: usize>(idx: usize) -> bool {
    if idx == zvar() {
        return true;
    }
    let mut s = 0;
    while s * SLOT_VARS + 1 + GVARS < N {
        if idx == evar(s) {
            return true;
        }
        s += 1;
    }
    false
}

impl<R: Rational, const N: usize> fmt::Debug for MPoly<R, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c)?;
            for (idx, k) in e.iter().enumerate() {
                if *k != 0 {
                    write!(f, "*v{}^{}", idx, k)?;
                }
            }
        }
        Ok(())
    }
}

/// Identity images for [`MPoly::map_vars`] within the same layout.
pub fn identity_images<R: Rational, const N: usize>() -> [MPoly<R, N>; N] {
    std::array::from_fn(MPoly::var)
}

/// Substitution on the single-copy ring, checked against the `E = exp(z*P0)`
/// contract.  Unlisted variables map to themselves.
pub struct SubstMap<R: Rational> {
    images: [CoeffScalar<R>; V1],
}

impl<R: Rational> SubstMap<R> {
    pub fn new() -> Self {
        SubstMap { images: identity_images() }
    }

    pub fn set(mut self, idx: usize, image: CoeffScalar<R>) -> Self {
        self.images[idx] = image;
        self
    }

    pub fn set_p(self, mu: usize, image: CoeffScalar<R>) -> Self {
        let idx = pvar(0, mu);
        self.set(idx, image)
    }

    pub fn set_e(self, image: CoeffScalar<R>) -> Self {
        self.set(evar(0), image)
    }

    pub fn set_g(self, mu: usize, nu: usize, image: CoeffScalar<R>) -> Self {
        self.set(gvar(mu, nu), image)
    }

    pub fn image(&self, idx: usize) -> &CoeffScalar<R> {
        &self.images[idx]
    }

    /// Enforce the `(P0, E)` contract: the image of `E` must be `E^k` with
    /// `k != 0`, and when the image of `P0` is `a*P0` the exponent must
    /// satisfy `k = a` so that `sigma(E) = exp(z*sigma(P0))`.
    pub fn validate(&self) -> Result<(), ScalarError> {
        let e_img = &self.images[evar(0)];
        let (e_expo, e_coef) = e_img.as_monomial().ok_or(ScalarError::InvalidESubstitution)?;
        let mut k = 0i16;
        for (idx, x) in e_expo.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            if idx == evar(0) {
                k = *x;
            } else if idx != zvar() {
                return Err(ScalarError::InvalidESubstitution);
            }
        }
        if k == 0 {
            return Err(ScalarError::InvalidESubstitution);
        }

        let p0_img = &self.images[pvar(0, 0)];
        let (p_expo, p_coef) = p0_img.as_monomial().ok_or(ScalarError::InconsistentPair)?;
        let mut expect = [0i16; V1];
        expect[pvar(0, 0)] = 1;
        if p_expo != expect || !p_coef.is_real() {
            return Err(ScalarError::InconsistentPair);
        }
        // sigma(E) = exp(z * a * P0) = E^a forces a unit prefactor and an
        // integer exponent equal to a.
        let a = Gaussian::from_int(k as i64);
        if p_coef != a || e_expo[zvar()] != 0 || !e_coef.is_one() {
            return Err(ScalarError::InconsistentPair);
        }
        Ok(())
    }
}

impl<R: Rational> Default for SubstMap<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Rational> CoeffScalar<R> {
    /// Contract-checked ring endomorphism.
    pub fn substitute(&self, sigma: &SubstMap<R>) -> Result<Self, ScalarError> {
        sigma.validate()?;
        self.map_vars(&sigma.images)
    }
}

/// Number of tensor slots in a layout with `N` variables.
pub const fn slot_count(n: usize) -> usize {
    (n - 1 - GVARS) / SLOT_VARS
}

/// Reassign tensor slots: slot `i` of the source lands in slot `assign[i]`
/// of the target.  Two source slots may land on the same target slot (their
/// exponents add), which is legal because slot variables commute.
pub fn map_slots<R: Rational, const NS: usize, const NT: usize>(
    x: &MPoly<R, NS>,
    assign: &[usize],
) -> MPoly<R, NT> {
    assert_eq!(assign.len(), slot_count(NS));
    for &a in assign {
        assert!(a < slot_count(NT));
    }
    let mut out = MPoly::<R, NT>::zero();
    for (e, c) in x.iter() {
        let mut w = [0i16; NT];
        w[zvar()] = e[zvar()];
        for gi in 0..GVARS {
            w[1 + gi] = e[1 + gi];
        }
        for (s, &a) in assign.iter().enumerate() {
            for v in 0..SLOT_VARS {
                w[1 + GVARS + SLOT_VARS * a + v] += e[1 + GVARS + SLOT_VARS * s + v];
            }
        }
        out.add_term(w, c.clone());
    }
    out
}

/// Embed a single-copy coefficient into slot `slot` of a wider ring.
pub fn embed<R: Rational, const M: usize>(x: &CoeffScalar<R>, slot: usize) -> MPoly<R, M> {
    map_slots(x, &[slot])
}

/// Collapse both slots of a two-slot coefficient onto the single copy.
pub fn collapse2<R: Rational>(x: &TensorCoeff<R>) -> CoeffScalar<R> {
    map_slots(x, &[0, 0])
}

/// Split a two-slot monomial exponent into (shared, left, right) parts:
/// the shared part keeps z and g, the slot parts keep each slot's momenta
/// and E mapped onto single-copy indices.
pub fn split_tensor_monomial<const N2: usize>(e: &Expo<N2>) -> (Expo<V1>, Vec<Expo<V1>>) {
    let slots = (N2 - 1 - GVARS) / SLOT_VARS;
    let mut shared = [0i16; V1];
    shared[zvar()] = e[zvar()];
    for gi in 0..GVARS {
        shared[1 + gi] = e[1 + gi];
    }
    let mut parts = Vec::with_capacity(slots);
    for s in 0..slots {
        let mut part = [0i16; V1];
        for v in 0..SLOT_VARS {
            part[1 + GVARS + v] = e[1 + GVARS + SLOT_VARS * s + v];
        }
        parts.push(part);
    }
    (shared, parts)
}

// ---------------------------------------------------------------------------
// Convenience constructors used throughout the crate.
// ---------------------------------------------------------------------------

/// `z^k`.
pub fn zpow<R: Rational, const N: usize>(k: i16) -> MPoly<R, N> {
    MPoly::var_pow(zvar(), k)
}

/// `g^{mu nu}` as a single-copy scalar.
pub fn gmn<R: Rational>(mu: usize, nu: usize) -> CoeffScalar<R> {
    MPoly::var(gvar(mu, nu))
}

/// `P_mu` in slot 0 of the single-copy ring.
pub fn pmu<R: Rational>(mu: usize) -> CoeffScalar<R> {
    MPoly::var(pvar(0, mu))
}

/// `E^k` in slot 0 of the single-copy ring.
pub fn epow<R: Rational>(k: i16) -> CoeffScalar<R> {
    MPoly::var_pow(evar(0), k)
}

/// `(E^k - E^-k)/2`, i.e. `sinh(k*z*P0)` under the encoding.
pub fn sinh_pow<R: Rational>(k: i16) -> CoeffScalar<R> {
    epow::<R>(k).sub(&epow::<R>(-k)).scale(&Gaussian::frac(1, 2))
}

/// `(E^k + E^-k)/2`, i.e. `cosh(k*z*P0)` under the encoding.
pub fn cosh_pow<R: Rational>(k: i16) -> CoeffScalar<R> {
    epow::<R>(k).add(&epow::<R>(-k)).scale(&Gaussian::frac(1, 2))
}

/// `kappa = 1/(2z)` as a scalar.
pub fn kappa<R: Rational>() -> CoeffScalar<R> {
    zpow::<R, V1>(-1).scale(&Gaussian::frac(1, 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    type C = CoeffScalar<Rat>;
    type G = Gaussian<Rat>;

    fn i() -> C {
        C::imag_unit()
    }

    #[test]
    fn e_inverse_cancels() {
        let p = epow::<Rat>(1).mul(&epow::<Rat>(-1));
        assert_eq!(p, C::one());
    }

    #[test]
    fn square_of_mixed_sum() {
        // (z + i*P0)^2 = z^2 + 2*i*z*P0 - P0^2
        let s = zpow::<Rat, V1>(1).add(&i().mul(&pmu::<Rat>(0)));
        let sq = s.mul(&s);
        let expect = zpow::<Rat, V1>(2)
            .add(&zpow::<Rat, V1>(1).mul(&pmu(0)).scale(&G::frac_i(2, 1)))
            .sub(&pmu::<Rat>(0).mul(&pmu(0)));
        assert_eq!(sq, expect);
    }

    #[test]
    fn hyperbolic_product_identity() {
        // sinh(z*P0)*cosh(z*P0) = sinh(2*z*P0)/2 under the E-encoding.
        let lhs = sinh_pow::<Rat>(1).mul(&cosh_pow::<Rat>(1));
        let rhs = sinh_pow::<Rat>(2).scale(&G::frac(1, 2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn d_p0_on_e() {
        // d(E) = z*E
        let d = epow::<Rat>(1).d_p0(0);
        assert_eq!(d, zpow::<Rat, V1>(1).mul(&epow(1)));
    }

    #[test]
    fn d_p0_mixed_term() {
        // d(P0^2 * E^-2) = 2*P0*E^-2 - 2*z*P0^2*E^-2
        let x = pmu::<Rat>(0).mul(&pmu(0)).mul(&epow(-2));
        let d = x.d_p0(0);
        let expect = pmu::<Rat>(0)
            .mul(&epow(-2))
            .scale(&G::from_int(2))
            .sub(&zpow::<Rat, V1>(1).mul(&pmu(0)).mul(&pmu(0)).mul(&epow(-2)).scale(&G::from_int(2)));
        assert_eq!(d, expect);
    }

    #[test]
    fn d_p0_kills_spatial_momenta() {
        assert!(pmu::<Rat>(1).d_p0(0).is_zero());
        assert!(gmn::<Rat>(0, 1).d_p0(0).is_zero());
        assert!(zpow::<Rat, V1>(3).d_p0(0).is_zero());
    }

    #[test]
    fn d_p0_leibniz() {
        let a = pmu::<Rat>(0).mul(&epow(2)).add(&gmn(1, 1));
        let b = epow::<Rat>(-1).add(&pmu(2));
        let lhs = a.mul(&b).d_p0(0);
        let rhs = a.d_p0(0).mul(&b).add(&a.mul(&b.d_p0(0)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn substitution_checks_e_shape() {
        let bad = SubstMap::<Rat>::new().set_e(pmu(1));
        assert_eq!(epow::<Rat>(1).substitute(&bad), Err(ScalarError::InvalidESubstitution));
        // E -> 1 is also rejected: the exponent must be nonzero.
        let bad = SubstMap::<Rat>::new().set_e(C::one());
        assert_eq!(epow::<Rat>(1).substitute(&bad), Err(ScalarError::InvalidESubstitution));
    }

    #[test]
    fn substitution_checks_pair_consistency() {
        // P0 -> -P0 with E left alone contradicts E = exp(z*P0).
        let bad = SubstMap::<Rat>::new().set_p(0, pmu::<Rat>(0).neg());
        assert_eq!(pmu::<Rat>(0).substitute(&bad), Err(ScalarError::InconsistentPair));
        // The matching pair is accepted.
        let ok = SubstMap::<Rat>::new().set_p(0, pmu::<Rat>(0).neg()).set_e(epow(-1));
        assert_eq!(epow::<Rat>(2).substitute(&ok).unwrap(), epow(-2));
    }

    #[test]
    fn sinh_is_odd_under_energy_reflection() {
        let sigma = SubstMap::<Rat>::new().set_p(0, pmu::<Rat>(0).neg()).set_e(epow(-1));
        let s = sinh_pow::<Rat>(1);
        assert_eq!(s.substitute(&sigma).unwrap(), s.neg());
        let c = cosh_pow::<Rat>(2);
        assert_eq!(c.substitute(&sigma).unwrap(), c);
    }

    #[test]
    fn metric_binding_hits_g() {
        let sigma = SubstMap::<Rat>::new().set_g(0, 0, C::zero());
        assert!(gmn::<Rat>(0, 0).substitute(&sigma).unwrap().is_zero());
        assert_eq!(gmn::<Rat>(0, 1).substitute(&sigma).unwrap(), gmn(0, 1));
    }

    #[test]
    fn embed_then_collapse_is_identity() {
        let x = zpow::<Rat, V1>(1).mul(&gmn(0, 1)).mul(&pmu(2)).mul(&epow(-1));
        let left: TensorCoeff<Rat> = embed(&x, 0);
        let right: TensorCoeff<Rat> = embed(&x, 1);
        assert_eq!(collapse2(&left), x);
        assert_eq!(collapse2(&right), x);
    }

    #[test]
    fn collapse_merges_slots() {
        // P1^L * E_R collapses to P1 * E.
        let t: TensorCoeff<Rat> =
            MPoly::var(pvar(0, 1)).mul(&MPoly::var(evar(1)));
        assert_eq!(collapse2(&t), pmu::<Rat>(1).mul(&epow(1)));
    }

    #[test]
    fn invert_unit_monomials_only() {
        let u = zpow::<Rat, V1>(2).mul(&epow(-3)).scale(&G::frac_i(2, 3));
        let v = u.try_invert().unwrap();
        assert_eq!(u.mul(&v), C::one());
        assert!(pmu::<Rat>(1).try_invert().is_none());
        assert!(C::zero().try_invert().is_none());
        assert!(epow::<Rat>(1).add(&epow(-1)).try_invert().is_none());
    }

    #[test]
    fn gvar_indexing_is_symmetric_and_total() {
        let mut seen = std::collections::BTreeSet::new();
        for mu in 0..4 {
            for nu in mu..4 {
                assert_eq!(gvar(mu, nu), gvar(nu, mu));
                seen.insert(gvar(mu, nu));
            }
        }
        assert_eq!(seen.len(), GVARS);
        assert_eq!(*seen.iter().min().unwrap(), 1);
        assert_eq!(*seen.iter().max().unwrap(), GVARS);
    }

    #[test]
    fn map_vars_rejects_negative_power_of_non_unit() {
        let imgs: [C; V1] = {
            let mut a = identity_images::<Rat, V1>();
            a[evar(0)] = pmu(1);
            a
        };
        assert_eq!(epow::<Rat>(-1).map_vars(&imgs), Err(ScalarError::NonInvertible));
    }

    mod properties {
        use super::*;
        use crate::ground::rat_frac;
        use proptest::prelude::*;

        fn arb_gauss() -> impl Strategy<Value = G> {
            (-4i64..=4, 1i64..=3, -4i64..=4, 1i64..=3)
                .prop_map(|(a, b, c, d)| G::new(rat_frac(a, b), rat_frac(c, d)))
        }

        fn arb_expo() -> impl Strategy<Value = Expo<V1>> {
            (
                -2i16..=2,                    // z
                proptest::sample::select(vec![0usize, 1, 4, 8]), // one g slot
                0i16..=2,
                0i16..=2,                     // P0, P1 exponents
                -2i16..=2,                    // E
            )
                .prop_map(|(zk, gslot, p0, p1, ek)| {
                    let mut e = [0i16; V1];
                    e[zvar()] = zk;
                    if gslot > 0 {
                        e[gslot] = 1;
                    }
                    e[pvar(0, 0)] = p0;
                    e[pvar(0, 1)] = p1;
                    e[evar(0)] = ek;
                    e
                })
        }

        fn arb_poly() -> impl Strategy<Value = C> {
            proptest::collection::vec((arb_expo(), arb_gauss()), 0..4).prop_map(|ts| {
                let mut p = C::zero();
                for (e, c) in ts {
                    p.add_term(e, c);
                }
                p
            })
        }

        fn rat_int(n: i64) -> Rat {
            crate::ground::rat_int(n)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(250))]

            #[test]
            fn add_commutes(a in arb_poly(), b in arb_poly()) {
                prop_assert_eq!(a.add(&b), b.add(&a));
            }

            #[test]
            fn mul_commutes(a in arb_poly(), b in arb_poly()) {
                prop_assert_eq!(a.mul(&b), b.mul(&a));
            }

            #[test]
            fn mul_associates(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
                prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            }

            #[test]
            fn distributes(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
                prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            }

            #[test]
            fn additive_inverse(a in arb_poly()) {
                prop_assert!(a.add(&a.neg()).is_zero());
            }

            #[test]
            fn one_is_neutral(a in arb_poly()) {
                prop_assert_eq!(a.mul(&C::one()), a);
            }

            #[test]
            fn derivation_leibniz(a in arb_poly(), b in arb_poly()) {
                let lhs = a.mul(&b).d_p0(0);
                let rhs = a.d_p0(0).mul(&b).add(&a.mul(&b.d_p0(0)));
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn d_p0_exponent_rule(k in -4i16..=4) {
                // d(E^k) = k*z*E^k
                let d = epow::<Rat>(k).d_p0(0);
                let expect = zpow::<Rat, V1>(1)
                    .mul(&epow(k))
                    .scale(&G::new(rat_int(k as i64), rat_int(0)));
                prop_assert_eq!(d, expect);
            }

            #[test]
            fn substitution_is_homomorphic(a in arb_poly(), b in arb_poly()) {
                let sigma = SubstMap::<Rat>::new()
                    .set_p(0, pmu::<Rat>(0).neg())
                    .set_e(epow(-1))
                    .set_p(1, pmu::<Rat>(1).mul(&epow(1)).neg());
                let lhs = a.mul(&b).substitute(&sigma).unwrap();
                let rhs = a.substitute(&sigma).unwrap().mul(&b.substitute(&sigma).unwrap());
                prop_assert_eq!(lhs, rhs);
                let lhs = a.add(&b).substitute(&sigma).unwrap();
                let rhs = a.substitute(&sigma).unwrap().add(&b.substitute(&sigma).unwrap());
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn collapse_is_homomorphic(a in arb_poly(), b in arb_poly()) {
                let ta: TensorCoeff<Rat> = embed(&a, 0);
                let tb: TensorCoeff<Rat> = embed(&b, 1);
                prop_assert_eq!(collapse2(&ta.mul(&tb)), a.mul(&b));
            }
        }
    }
}
