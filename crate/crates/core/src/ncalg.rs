//! Ordered words in six noncommuting letters over the exact coefficient
//! rings, together with the rewriting engine that brings products into
//! canonical form.
//!
//! Canonical form: every element is a sum of terms `letters * coefficient`,
//! where the letters appear in nondecreasing `(slot, letter)` order and the
//! single coefficient sits on the right.  A [`RelationTable`] drives the
//! rewriting:
//!
//! * `comm` stores `[a, b] = a*b - b*a` for letter pairs with `a > b`; a
//!   missing pair commutes.  Entries must have letter degree at most one,
//!   which is what makes the rewriting terminate.
//! * `dtab` stores the derivations `[letter, P_mu]` as coefficients.  The
//!   action extends to all coefficients through the Leibniz rule, with the
//!   `E = exp(z*P0)` chain rule `[letter, E] = z*E*[letter, P0]`.
//!
//! Tensor powers use the same engine: letters in different slots commute,
//! and a letter only differentiates its own slot's momenta.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ground::{Gaussian, Rational};
use crate::scalars::{
    embed, evar, map_slots, pvar, zvar, CoeffScalar, MPoly, ScalarError, V1,
};

/// Every presentation uses exactly six letters.
pub const NUM_LETTERS: usize = 6;

/// A letter index in `0..6`; display names live with the presentation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Letter(pub u8);

impl Letter {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> [Letter; NUM_LETTERS] {
        std::array::from_fn(|i| Letter(i as u8))
    }
}

/// Exponent vector of an ordered letter product.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct LMono(pub [u8; NUM_LETTERS]);

impl LMono {
    pub fn empty() -> Self {
        LMono([0; NUM_LETTERS])
    }

    pub fn single(l: Letter) -> Self {
        let mut m = Self::empty();
        m.0[l.index()] = 1;
        m
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&k| k as u32).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = *self;
        for (x, y) in m.0.iter_mut().zip(other.0.iter()) {
            *x += *y;
        }
        m
    }

    /// The letters of the ordered product, in canonical order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat(Letter(i as u8)).take(k as usize))
    }
}

impl PartialOrd for LMono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LMono {
    /// Graded order: total degree first, then exponents compared from the
    /// last letter down, so `L0 < L1 < ... < L5` as single letters.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let mut a = self.0;
            let mut b = other.0;
            a.reverse();
            b.reverse();
            a.cmp(&b)
        })
    }
}

impl fmt::Debug for LMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        for (i, &k) in self.0.iter().enumerate() {
            if k == 1 {
                write!(f, "L{}", i)?;
            } else if k > 1 {
                write!(f, "L{}^{}", i, k)?;
            }
        }
        Ok(())
    }
}

/// One of the eleven distinguished generators of a presentation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gen {
    E,
    P(u8),
    Letter(Letter),
}

impl Gen {
    pub fn all() -> Vec<Gen> {
        let mut v = vec![Gen::E];
        for mu in 0..4 {
            v.push(Gen::P(mu));
        }
        for l in Letter::all() {
            v.push(Gen::Letter(l));
        }
        v
    }

    /// Fixed ordering used to orient commutator rows: `E < P_mu < letters`.
    pub fn sort_key(&self) -> u8 {
        match self {
            Gen::E => 0,
            Gen::P(mu) => 1 + mu,
            Gen::Letter(l) => 5 + l.0,
        }
    }
}

impl PartialOrd for Gen {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gen {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// Sum of canonical terms over `K` tensor slots with `N` coefficient
/// variables.
#[derive(Clone, PartialEq, Eq)]
pub struct Tensor<R: Rational, const K: usize, const N: usize> {
    terms: BTreeMap<[LMono; K], MPoly<R, N>>,
}

/// Single-copy element.
pub type Element<R> = Tensor<R, 1, V1>;

impl<R: Rational, const K: usize, const N: usize> Tensor<R, K, N> {
    pub fn zero() -> Self {
        Tensor { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::from_coeff(MPoly::one())
    }

    pub fn from_coeff(c: MPoly<R, N>) -> Self {
        let mut t = Self::zero();
        t.add_term([LMono::empty(); K], c);
        t
    }

    pub fn term(lms: [LMono; K], c: MPoly<R, N>) -> Self {
        let mut t = Self::zero();
        t.add_term(lms, c);
        t
    }

    pub fn add_term(&mut self, lms: [LMono; K], c: MPoly<R, N>) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(lms) {
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

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[LMono; K], &MPoly<R, N>)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(*m, c.neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms.iter() {
            out.terms.insert(*m, c.neg());
        }
        out
    }

    pub fn scale(&self, q: &Gaussian<R>) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms.iter() {
            out.add_term(*m, c.scale(q));
        }
        out
    }

    /// Multiply every coefficient on the right; legal because coefficients
    /// commute with each other.
    pub fn mul_coeff(&self, c: &MPoly<R, N>) -> Self {
        let mut out = Self::zero();
        for (m, q) in self.terms.iter() {
            out.add_term(*m, q.mul(c));
        }
        out
    }

    pub fn max_letter_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|lms| lms.iter().map(|m| m.degree()).sum())
            .max()
            .unwrap_or(0)
    }

    /// The word `letters... coefficient` representing one canonical term.
    pub fn term_word(lms: &[LMono; K], c: &MPoly<R, N>) -> Vec<Factor<R, N>> {
        let mut w = Vec::new();
        for (slot, lm) in lms.iter().enumerate() {
            for l in lm.letters() {
                w.push(Factor::Letter(slot, l));
            }
        }
        if !c.is_one_hint() {
            w.push(Factor::Coeff(c.clone()));
        }
        w
    }
}

impl<R: Rational> Tensor<R, 1, V1> {
    pub fn letter(l: Letter) -> Self {
        Self::term([LMono::single(l)], MPoly::one())
    }

    pub fn from_gen(g: Gen) -> Self {
        match g {
            Gen::E => Self::from_coeff(MPoly::var(evar(0))),
            Gen::P(mu) => Self::from_coeff(MPoly::var(pvar(0, mu as usize))),
            Gen::Letter(l) => Self::letter(l),
        }
    }
}

impl<R: Rational, const N: usize> MPoly<R, N> {
    /// Cheap test used to skip trivial word factors.
    fn is_one_hint(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }
}

impl<R: Rational, const K: usize, const N: usize> fmt::Debug for Tensor<R, K, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (ms, c) in self.terms.iter() {
            if !first {
                write!(f, "  +  ")?;
            }
            first = false;
            for (s, m) in ms.iter().enumerate() {
                if s > 0 {
                    write!(f, " (x) ")?;
                }
                write!(f, "{:?}", m)?;
            }
            write!(f, " * [{:?}]", c)?;
        }
        Ok(())
    }
}

/// One factor of a word being normal-ordered.
#[derive(Clone, Debug)]
pub enum Factor<R: Rational, const N: usize> {
    /// A letter acting in the given tensor slot.
    Letter(usize, Letter),
    /// A coefficient.
    Coeff(MPoly<R, N>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NcError {
    #[error("BadExponent: conjugation exponent must be a real rational multiple of z*P0")]
    BadExponent,
    #[error("NonTerminating: adjoint series did not terminate")]
    NonTerminating,
    #[error("InvalidTable: {0}")]
    InvalidTable(String),
}

/// Commutation data for the six letters of one presentation.
#[derive(Clone, Debug)]
pub struct RelationTable<R: Rational> {
    comm: BTreeMap<(u8, u8), Element<R>>,
    dtab: Vec<[CoeffScalar<R>; 4]>,
}

impl<R: Rational> RelationTable<R> {
    /// A table in which all letters commute with everything.
    pub fn commuting() -> Self {
        RelationTable {
            comm: BTreeMap::new(),
            dtab: (0..NUM_LETTERS)
                .map(|_| std::array::from_fn(|_| CoeffScalar::zero()))
                .collect(),
        }
    }

    /// Record `[a, b] = value` for letters `a > b`.
    pub fn set_comm(&mut self, a: Letter, b: Letter, value: Element<R>) {
        assert!(a > b, "commutators are stored with the larger letter first");
        if value.is_zero() {
            self.comm.remove(&(a.0, b.0));
        } else {
            self.comm.insert((a.0, b.0), value);
        }
    }

    /// Record `[l, P_mu] = value`.
    pub fn set_d(&mut self, l: Letter, mu: usize, value: CoeffScalar<R>) {
        self.dtab[l.index()][mu] = value;
    }

    pub fn d_row(&self, l: Letter) -> &[CoeffScalar<R>; 4] {
        &self.dtab[l.index()]
    }

    /// `[a, b]` as stored for `a > b`, zero when absent.
    pub fn comm_entry(&self, a: Letter, b: Letter) -> Element<R> {
        assert!(a > b);
        self.comm.get(&(a.0, b.0)).cloned().unwrap_or_else(Element::zero)
    }

    /// `[a, b]` for any letter pair, including the sign flip.
    pub fn comm_any(&self, a: Letter, b: Letter) -> Element<R> {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Greater => self.comm_entry(a, b),
            Equal => Element::zero(),
            Less => self.comm_entry(b, a).neg(),
        }
    }

    /// Check the shape constraints the rewriting relies on.
    pub fn validate(&self) -> Result<(), NcError> {
        for (&(a, b), v) in self.comm.iter() {
            if a <= b || a as usize >= NUM_LETTERS {
                return Err(NcError::InvalidTable(format!(
                    "commutator key ({}, {}) is not ordered",
                    a, b
                )));
            }
            if v.max_letter_degree() > 1 {
                return Err(NcError::InvalidTable(format!(
                    "commutator [{}, {}] has letter degree above one",
                    a, b
                )));
            }
        }
        Ok(())
    }

    /// `[l, c]` for a coefficient `c`, acting on the given tensor slot.
    pub fn d_apply<const N: usize>(
        &self,
        l: Letter,
        slot: usize,
        c: &MPoly<R, N>,
    ) -> MPoly<R, N> {
        let row = &self.dtab[l.index()];
        let mut out = c.d_p0(slot).mul(&embed(&row[0], slot));
        for k in 1..=3 {
            let dk = c.d_pk(slot, k);
            if !dk.is_zero() {
                out = out.add(&dk.mul(&embed(&row[k], slot)));
            }
        }
        out
    }
}

/// Safety net against a buggy table; validated tables always terminate.
const REWRITE_FUEL: usize = 10_000_000;

/// Normal-order one word and accumulate the result.
pub fn normal_order<R: Rational, const K: usize, const N: usize>(
    table: &RelationTable<R>,
    word: Vec<Factor<R, N>>,
    out: &mut Tensor<R, K, N>,
) {
    let mut stack = vec![word];
    let mut fuel = REWRITE_FUEL;
    'words: while let Some(mut w) = stack.pop() {
        fuel -= 1;
        assert!(fuel > 0, "normal ordering exceeded its fuel budget");
        let mut i = 0;
        while i + 1 < w.len() {
            let action = classify(&w[i], &w[i + 1]);
            match action {
                Action::Ok => {
                    i += 1;
                }
                Action::MergeCoeffs => {
                    let Factor::Coeff(b) = w.remove(i + 1) else { unreachable!() };
                    let Factor::Coeff(a) = &w[i] else { unreachable!() };
                    let p = a.mul(&b);
                    if p.is_zero() {
                        continue 'words;
                    }
                    w[i] = Factor::Coeff(p);
                    i = i.saturating_sub(1);
                }
                Action::SwapSlots => {
                    w.swap(i, i + 1);
                    i = i.saturating_sub(1);
                }
                Action::MoveCoeffRight => {
                    // c * l  ->  l * c - [l, c]
                    let (Factor::Coeff(c), Factor::Letter(slot, l)) = (&w[i], &w[i + 1]) else {
                        unreachable!()
                    };
                    let d = table.d_apply(*l, *slot, c);
                    if !d.is_zero() {
                        let mut branch = w.clone();
                        branch.splice(i..=i + 1, [Factor::Coeff(d.neg())]);
                        stack.push(branch);
                    }
                    w.swap(i, i + 1);
                    i = i.saturating_sub(1);
                }
                Action::SwapLetters => {
                    // a * b  ->  b * a + [a, b]
                    let (Factor::Letter(slot, a), Factor::Letter(_, b)) = (&w[i], &w[i + 1])
                    else {
                        unreachable!()
                    };
                    let (slot, a, b) = (*slot, *a, *b);
                    let bracket = table.comm_entry(a, b);
                    for (lms, c) in bracket.iter() {
                        let mut repl: Vec<Factor<R, N>> = lms[0]
                            .letters()
                            .map(|l| Factor::Letter(slot, l))
                            .collect();
                        repl.push(Factor::Coeff(embed(c, slot)));
                        let mut branch = w.clone();
                        branch.splice(i..=i + 1, repl);
                        stack.push(branch);
                    }
                    w.swap(i, i + 1);
                    i = i.saturating_sub(1);
                }
            }
        }
        // Violation-free: letters ascending, at most one trailing coefficient.
        let mut lms = [LMono::empty(); K];
        let mut coeff = MPoly::<R, N>::one();
        for f in w {
            match f {
                Factor::Letter(slot, l) => lms[slot].0[l.index()] += 1,
                Factor::Coeff(c) => coeff = coeff.mul(&c),
            }
        }
        out.add_term(lms, coeff);
    }
}

enum Action {
    Ok,
    MergeCoeffs,
    MoveCoeffRight,
    SwapSlots,
    SwapLetters,
}

fn classify<R: Rational, const N: usize>(x: &Factor<R, N>, y: &Factor<R, N>) -> Action {
    match (x, y) {
        (Factor::Coeff(_), Factor::Coeff(_)) => Action::MergeCoeffs,
        (Factor::Coeff(_), Factor::Letter(..)) => Action::MoveCoeffRight,
        (Factor::Letter(s, a), Factor::Letter(t, b)) => {
            if s > t {
                Action::SwapSlots
            } else if s == t && a > b {
                Action::SwapLetters
            } else {
                Action::Ok
            }
        }
        (Factor::Letter(..), Factor::Coeff(_)) => Action::Ok,
    }
}

/// Product of two canonical elements.
pub fn mul<R: Rational, const K: usize, const N: usize>(
    table: &RelationTable<R>,
    a: &Tensor<R, K, N>,
    b: &Tensor<R, K, N>,
) -> Tensor<R, K, N> {
    let mut out = Tensor::zero();
    for (ma, ca) in a.iter() {
        for (mb, cb) in b.iter() {
            let mut w = Tensor::term_word(ma, ca);
            w.extend(Tensor::term_word(mb, cb));
            normal_order(table, w, &mut out);
        }
    }
    out
}

/// `a*b - b*a`.
pub fn commutator<R: Rational, const K: usize, const N: usize>(
    table: &RelationTable<R>,
    a: &Tensor<R, K, N>,
    b: &Tensor<R, K, N>,
) -> Tensor<R, K, N> {
    mul(table, a, b).sub(&mul(table, b, a))
}

/// `[[a,b],c] + [[b,c],a] + [[c,a],b]`.
pub fn jacobi_residual<R: Rational, const K: usize, const N: usize>(
    table: &RelationTable<R>,
    a: &Tensor<R, K, N>,
    b: &Tensor<R, K, N>,
    c: &Tensor<R, K, N>,
) -> Tensor<R, K, N> {
    let ab = commutator(table, a, b);
    let bc = commutator(table, b, c);
    let ca = commutator(table, c, a);
    commutator(table, &ab, c)
        .add(&commutator(table, &bc, a))
        .add(&commutator(table, &ca, b))
}

/// `exp(alpha) * x * exp(-alpha)` for `alpha = r*z*P0` with `r` rational.
///
/// The adjoint series terminates because each application of `[alpha, -]`
/// lowers the letter degree: `alpha` commutes with every coefficient.
pub fn conj_exp<R: Rational>(
    table: &RelationTable<R>,
    alpha: &CoeffScalar<R>,
    x: &Element<R>,
) -> Result<Element<R>, NcError> {
    let (expo, q) = alpha.as_monomial().ok_or(NcError::BadExponent)?;
    let mut expect = [0i16; V1];
    expect[zvar()] = 1;
    expect[pvar(0, 0)] = 1;
    if expo != expect || !q.is_real() {
        return Err(NcError::BadExponent);
    }
    let alpha_el = Element::from_coeff(alpha.clone());
    let mut total = x.clone();
    let mut term = x.clone();
    let bound = x.max_letter_degree() + 2;
    for n in 1..=bound {
        term = commutator(table, &alpha_el, &term).scale(&Gaussian::frac(1, n as i64));
        if term.is_zero() {
            return Ok(total);
        }
        total = total.add(&term);
    }
    Err(NcError::NonTerminating)
}

/// Data for applying a (anti)homomorphism to single-copy elements.
///
/// Letters map to arbitrary elements of the target; the coefficient
/// variables map through `coeff_images`.  With `anti` set the letter factors
/// are reversed, which is the antipode's antimorphism rule.
pub struct HomData<'a, R: Rational, const KT: usize, const NT: usize> {
    pub table: &'a RelationTable<R>,
    pub letter_images: &'a [Tensor<R, KT, NT>; NUM_LETTERS],
    pub coeff_images: &'a [MPoly<R, NT>; V1],
    pub anti: bool,
}

/// Apply the map to one element.
pub fn apply_hom<R: Rational, const KT: usize, const NT: usize>(
    h: &HomData<'_, R, KT, NT>,
    x: &Element<R>,
) -> Result<Tensor<R, KT, NT>, ScalarError> {
    let mut out = Tensor::zero();
    for (lm, c) in x.iter() {
        let mapped = c.map_vars(h.coeff_images)?;
        if mapped.is_zero() {
            continue;
        }
        let letters: Vec<Letter> = lm[0].letters().collect();
        let acc = if h.anti {
            let mut acc = Tensor::from_coeff(mapped);
            for l in letters.iter().rev() {
                acc = mul(h.table, &acc, &h.letter_images[l.index()]);
            }
            acc
        } else {
            let mut acc = Tensor::one();
            for l in letters.iter() {
                acc = mul(h.table, &acc, &h.letter_images[l.index()]);
            }
            acc.mul_coeff(&mapped)
        };
        out = out.add(&acc);
    }
    Ok(out)
}

/// Reassign tensor slots of a whole element.
pub fn map_tensor_slots<
    R: Rational,
    const KS: usize,
    const NS: usize,
    const KT: usize,
    const NT: usize,
>(
    x: &Tensor<R, KS, NS>,
    assign: &[usize; KS],
) -> Tensor<R, KT, NT> {
    let mut out = Tensor::zero();
    for (lms, c) in x.iter() {
        let mut nl = [LMono::empty(); KT];
        for (s, &a) in assign.iter().enumerate() {
            nl[a] = nl[a].mul(&lms[s]);
        }
        out.add_term(nl, map_slots(c, assign));
    }
    out
}

/// Apply a single-copy map slot-by-slot to a tensor-power element.  Used to
/// push a homomorphism through tensor factors, e.g. as `phi (x) phi`.
pub fn apply_hom_slotwise<R: Rational, const K: usize, const NS: usize, const NT: usize>(
    target_table: &RelationTable<R>,
    letter_images: &[Element<R>; NUM_LETTERS],
    sigma: &[CoeffScalar<R>; V1],
    x: &Tensor<R, K, NS>,
) -> Result<Tensor<R, K, NT>, ScalarError> {
    debug_assert_eq!(crate::scalars::slot_count(NS), K);
    debug_assert_eq!(crate::scalars::slot_count(NT), K);
    // Widen the per-letter images and the coefficient images to each slot.
    let slot_images: Vec<[Tensor<R, K, NT>; NUM_LETTERS]> = (0..K)
        .map(|s| std::array::from_fn(|l| map_tensor_slots(&letter_images[l], &[s])))
        .collect();
    let coeff_images: [MPoly<R, NT>; NS] = std::array::from_fn(|idx| {
        if idx == zvar() || (1..=crate::scalars::GVARS).contains(&idx) {
            MPoly::var(idx)
        } else {
            let rel = idx - 1 - crate::scalars::GVARS;
            let slot = rel / crate::scalars::SLOT_VARS;
            let v = rel % crate::scalars::SLOT_VARS;
            let src = if v < 4 { pvar(0, v) } else { evar(0) };
            map_slots(&sigma[src], &[slot])
        }
    });
    let mut out = Tensor::zero();
    for (lms, c) in x.iter() {
        let mapped = c.map_vars(&coeff_images)?;
        if mapped.is_zero() {
            continue;
        }
        let mut acc = Tensor::one();
        for (s, lm) in lms.iter().enumerate() {
            for l in lm.letters() {
                acc = mul(target_table, &acc, &slot_images[s][l.index()]);
            }
        }
        out = out.add(&acc.mul_coeff(&mapped));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{epow, gmn, pmu, zpow};
    use crate::Rat;

    type El = Element<Rat>;
    type G = Gaussian<Rat>;

    const A: Letter = Letter(0);
    const B: Letter = Letter(1);
    const C: Letter = Letter(2);

    /// Angular-momentum style table: `[B,A] = -i*C`, `[C,A] = i*B`,
    /// `[C,B] = -i*A`.  Satisfies the Jacobi identity, so the rewriting is
    /// confluent and multiplication is associative.
    fn rot_table() -> RelationTable<Rat> {
        let mut t = RelationTable::commuting();
        t.set_comm(B, A, El::letter(C).scale(&G::frac_i(-1, 1)));
        t.set_comm(C, A, El::letter(B).scale(&G::frac_i(1, 1)));
        t.set_comm(C, B, El::letter(A).scale(&G::frac_i(-1, 1)));
        t.validate().unwrap();
        t
    }

    /// `[A, P0] = 1`, everything else commutes.
    fn shift_table() -> RelationTable<Rat> {
        let mut t = RelationTable::commuting();
        t.set_d(A, 0, CoeffScalar::one());
        t.validate().unwrap();
        t
    }

    #[test]
    fn lmono_order_is_graded() {
        let e = LMono::empty();
        let a = LMono::single(A);
        let c = LMono::single(C);
        let aa = a.mul(&a);
        assert!(e < a);
        assert!(a < c);
        assert!(c < aa, "degree dominates the letter comparison");
    }

    #[test]
    fn swap_inserts_commutator() {
        let t = rot_table();
        // B*A = A*B - i*C
        let p = mul(&t, &El::letter(B), &El::letter(A));
        let expect = El::term([LMono::single(A).mul(&LMono::single(B))], CoeffScalar::one())
            .add(&El::letter(C).scale(&G::frac_i(-1, 1)));
        assert_eq!(p, expect);
    }

    #[test]
    fn coefficient_moves_right_with_derivative() {
        let t = shift_table();
        // P0 * A = A*P0 - 1
        let p = mul(&t, &El::from_coeff(pmu(0)), &El::letter(A));
        let expect = El::term([LMono::single(A)], pmu(0)).sub(&El::one());
        assert_eq!(p, expect);
    }

    #[test]
    fn e_obeys_the_chain_rule() {
        let t = shift_table();
        // E * A = A*E - z*E
        let p = mul(&t, &El::from_coeff(epow(1)), &El::letter(A));
        let expect = El::term([LMono::single(A)], epow(1))
            .sub(&El::from_coeff(zpow::<Rat, V1>(1).mul(&epow(1))));
        assert_eq!(p, expect);
    }

    #[test]
    fn rot_jacobi_closes() {
        let t = rot_table();
        let r = jacobi_residual(&t, &El::letter(A), &El::letter(B), &El::letter(C));
        assert!(r.is_zero(), "residual: {:?}", r);
    }

    #[test]
    fn identity_is_neutral() {
        let t = rot_table();
        let x = El::letter(B)
            .mul_coeff(&pmu(1))
            .add(&El::term([LMono::single(A).mul(&LMono::single(C))], epow(-2)));
        assert_eq!(mul(&t, &x, &El::one()), x);
        assert_eq!(mul(&t, &El::one(), &x), x);
    }

    #[test]
    fn conj_exp_shifts_by_derivative() {
        let t = shift_table();
        // exp(2*z*P0) A exp(-2*z*P0) = A - 2*z
        let alpha = zpow::<Rat, V1>(1).mul(&pmu(0)).scale(&G::from_int(2));
        let out = conj_exp(&t, &alpha, &El::letter(A)).unwrap();
        let expect = El::letter(A).sub(&El::from_coeff(zpow(1).scale(&G::from_int(2))));
        assert_eq!(out, expect);
    }

    #[test]
    fn conj_exp_rejects_bad_exponents() {
        let t = shift_table();
        let p1 = zpow::<Rat, V1>(1).mul(&pmu(1));
        assert_eq!(conj_exp(&t, &p1, &El::letter(A)), Err(NcError::BadExponent));
        let zz = zpow::<Rat, V1>(2).mul(&pmu(0));
        assert_eq!(conj_exp(&t, &zz, &El::letter(A)), Err(NcError::BadExponent));
        let ip = zpow::<Rat, V1>(1).mul(&pmu(0)).scale(&G::i());
        assert_eq!(conj_exp(&t, &ip, &El::letter(A)), Err(NcError::BadExponent));
    }

    #[test]
    fn anti_map_reverses_letters() {
        // Table with [B, A] = 1 distinguishes the two orders.
        let mut t = RelationTable::commuting();
        t.set_comm(B, A, El::one());
        let identity_imgs: [El; NUM_LETTERS] = std::array::from_fn(|i| El::letter(Letter(i as u8)));
        let cimgs = crate::scalars::identity_images::<Rat, V1>();
        let x = El::term([LMono::single(A).mul(&LMono::single(B))], CoeffScalar::one());
        let h = HomData { table: &t, letter_images: &identity_imgs, coeff_images: &cimgs, anti: true };
        // anti(A*B) = B*A = A*B + 1
        assert_eq!(apply_hom(&h, &x).unwrap(), x.add(&El::one()));
        let h = HomData { table: &t, letter_images: &identity_imgs, coeff_images: &cimgs, anti: false };
        assert_eq!(apply_hom(&h, &x).unwrap(), x);
    }

    #[test]
    fn validate_rejects_deep_commutators() {
        let mut t = RelationTable::commuting();
        t.set_comm(B, A, El::term([LMono::single(C).mul(&LMono::single(C))], CoeffScalar::one()));
        assert!(matches!(t.validate(), Err(NcError::InvalidTable(_))));
    }

    #[test]
    fn tensor_slots_commute() {
        use crate::scalars::{TensorCoeff, V2};
        let t = rot_table();
        type T2 = Tensor<Rat, 2, V2>;
        let left = T2::term([LMono::single(C), LMono::empty()], TensorCoeff::one());
        let right = T2::term([LMono::empty(), LMono::single(A)], TensorCoeff::one());
        assert_eq!(mul(&t, &left, &right), mul(&t, &right, &left));
        // Same-slot letters still pick up the commutator.
        let both_left = T2::term([LMono::single(A), LMono::empty()], TensorCoeff::one());
        assert_ne!(mul(&t, &left, &both_left), mul(&t, &both_left, &left));
    }

    #[test]
    fn slotwise_map_matches_single_copy() {
        use crate::scalars::V2;
        let t = rot_table();
        let letter_imgs: [El; NUM_LETTERS] =
            std::array::from_fn(|i| El::letter(Letter(i as u8)).scale(&G::from_int(2)));
        let sigma = crate::scalars::identity_images::<Rat, V1>();
        let x = El::letter(A).mul_coeff(&pmu(2));
        let wide: Tensor<Rat, 2, V2> = map_tensor_slots(&x, &[1]);
        let mapped: Tensor<Rat, 2, V2> =
            apply_hom_slotwise(&t, &letter_imgs, &sigma, &wide).unwrap();
        let single = apply_hom(
            &HomData { table: &t, letter_images: &letter_imgs, coeff_images: &sigma, anti: false },
            &x,
        )
        .unwrap();
        assert_eq!(mapped, map_tensor_slots::<Rat, 1, V1, 2, V2>(&single, &[1]));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_coeff() -> impl Strategy<Value = CoeffScalar<Rat>> {
            (-2i64..=2, 0i16..=1, -1i16..=1).prop_map(|(n, p, e)| {
                if n == 0 {
                    return CoeffScalar::one();
                }
                MPoly::int(n)
                    .mul(&pmu::<Rat>(1).pow(p as i32).unwrap())
                    .mul(&epow::<Rat>(e))
            })
        }

        fn arb_element() -> impl Strategy<Value = El> {
            proptest::collection::vec(
                (proptest::sample::select(vec![0u8, 1, 2]), 0u8..=2, arb_coeff()),
                1..3,
            )
            .prop_map(|ts| {
                let mut x = El::zero();
                for (l, k, c) in ts {
                    let mut lm = LMono::empty();
                    lm.0[l as usize] = k;
                    x.add_term([lm], c);
                }
                x
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn rot_mul_associates(a in arb_element(), b in arb_element(), c in arb_element()) {
                let t = rot_table();
                let lhs = mul(&t, &mul(&t, &a, &b), &c);
                let rhs = mul(&t, &a, &mul(&t, &b, &c));
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn shift_mul_associates(a in arb_element(), b in arb_element(), c in arb_element()) {
                let t = shift_table();
                let p0 = El::from_coeff(pmu(0));
                let a = mul(&t, &a, &p0);
                let lhs = mul(&t, &mul(&t, &a, &b), &c);
                let rhs = mul(&t, &a, &mul(&t, &b, &c));
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn distributive(a in arb_element(), b in arb_element(), c in arb_element()) {
                let t = rot_table();
                let lhs = mul(&t, &a, &b.add(&c));
                let rhs = mul(&t, &a, &b).add(&mul(&t, &a, &c));
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn gen_enumeration_is_fixed() {
        let gens = Gen::all();
        assert_eq!(gens.len(), 11);
        let mut sorted = gens.clone();
        sorted.sort();
        assert_eq!(gens, sorted);
    }

    #[test]
    fn coefficient_with_metric_passes_letters_untouched() {
        let t = rot_table();
        // Metric entries never appear in dtab rows here, so they commute.
        let g = El::from_coeff(gmn(0, 3));
        let x = El::letter(B);
        assert_eq!(mul(&t, &g, &x), mul(&t, &x, &g));
    }
}
