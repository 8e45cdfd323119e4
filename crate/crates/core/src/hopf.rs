//! Coalgebra data and Hopf-axiom residuals.
//!
//! A [`HopfTables`] value specifies the coproduct, counit and antipode of a
//! presentation on its generators.  All operators here return *residuals*:
//! exact elements that are zero precisely when the axiom or morphism
//! property holds.  Nothing is approximated, so a residual either vanishes
//! identically or exhibits the failure.
//!
//! Conventions baked into the layout:
//!
//! * the counit fixes `z` and the metric entries, sends every `P_mu` to 0
//!   and `E` to 1;
//! * `Delta(P0)` is primitive, hence `Delta(E) = E (x) E` and
//!   `S(E) = E^-1`; the constructor checks these.

use thiserror::Error;

use crate::ground::{Gaussian, Rational};
use crate::ncalg::{
    apply_hom, commutator, conj_exp, map_tensor_slots, mul, normal_order, Element, Factor, Gen,
    HomData, LMono, NcError, RelationTable, Tensor, NUM_LETTERS,
};
use crate::scalars::{
    embed, evar, map_slots, pvar, split_tensor_monomial, zvar, CoeffScalar, MPoly, ScalarError,
    Tensor3Coeff, TensorCoeff, GVARS, V1, V2, V3,
};

/// Element of the tensor square.
pub type TensorElement<R> = Tensor<R, 2, V2>;
/// Element of the tensor cube.
pub type Tensor3Element<R> = Tensor<R, 3, V3>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HopfError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Nc(#[from] NcError),
    #[error("Inconsistent: {0}")]
    Inconsistent(String),
    #[error("NoConjForm: this presentation has no conjugation form of the antipode")]
    NoConjForm,
}

/// Generator images of the coproduct, counit and antipode.
#[derive(Clone, Debug)]
pub struct HopfTables<R: Rational> {
    pub delta_letter: [TensorElement<R>; NUM_LETTERS],
    pub delta_p: [TensorCoeff<R>; 4],
    pub delta_e: TensorCoeff<R>,
    pub eps_letter: [Gaussian<R>; NUM_LETTERS],
    pub s_letter: [Element<R>; NUM_LETTERS],
    pub s_p: [CoeffScalar<R>; 4],
    pub s_e: CoeffScalar<R>,
    /// When set to `alpha`, the antipode of letters and momenta is claimed
    /// to equal `-exp(alpha) x exp(-alpha)`.
    pub conj_alpha: Option<CoeffScalar<R>>,
}

impl<R: Rational> HopfTables<R> {
    /// Check the structural invariants of the encoding.
    pub fn validate(&self) -> Result<(), HopfError> {
        let primitive = embed::<R, V2>(&crate::scalars::pmu(0), 0)
            .add(&embed(&crate::scalars::pmu(0), 1));
        if self.delta_p[0] != primitive {
            return Err(HopfError::Inconsistent("Delta(P0) must be primitive".into()));
        }
        let ee = MPoly::<R, V2>::var(evar(0)).mul(&MPoly::var(evar(1)));
        if self.delta_e != ee {
            return Err(HopfError::Inconsistent(
                "Delta(E) must be E (x) E, as forced by Delta(P0)".into(),
            ));
        }
        if self.s_e != crate::scalars::epow(-1) {
            return Err(HopfError::Inconsistent("S(E) must be E^-1".into()));
        }
        if let Some(alpha) = &self.conj_alpha {
            let ok = alpha
                .as_monomial()
                .map(|(expo, q)| {
                    let mut expect = [0i16; V1];
                    expect[zvar()] = 1;
                    expect[pvar(0, 0)] = 1;
                    expo == expect && q.is_real()
                })
                .unwrap_or(false);
            if !ok {
                return Err(HopfError::Inconsistent(
                    "conjugation exponent must be a real rational multiple of z*P0".into(),
                ));
            }
        }
        Ok(())
    }

    fn delta_coeff_images(&self) -> [TensorCoeff<R>; V1] {
        std::array::from_fn(|idx| {
            if idx == zvar() || (1..=GVARS).contains(&idx) {
                MPoly::var(idx)
            } else if idx == evar(0) {
                self.delta_e.clone()
            } else {
                self.delta_p[idx - pvar(0, 0)].clone()
            }
        })
    }

    fn antipode_coeff_images(&self) -> [CoeffScalar<R>; V1] {
        std::array::from_fn(|idx| {
            if idx == zvar() || (1..=GVARS).contains(&idx) {
                MPoly::var(idx)
            } else if idx == evar(0) {
                self.s_e.clone()
            } else {
                self.s_p[idx - pvar(0, 0)].clone()
            }
        })
    }

    fn counit_coeff_images(&self) -> [CoeffScalar<R>; V1] {
        std::array::from_fn(|idx| {
            if idx == zvar() || (1..=GVARS).contains(&idx) {
                MPoly::var(idx)
            } else if idx == evar(0) {
                MPoly::one()
            } else {
                MPoly::zero()
            }
        })
    }

    fn eps_of_lmono(&self, lm: &LMono) -> Gaussian<R> {
        let mut out = Gaussian::one();
        for l in lm.letters() {
            out = out.mul(&self.eps_letter[l.index()]);
            if out.is_zero() {
                break;
            }
        }
        out
    }
}

/// `Delta(x)`.
pub fn coproduct<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
) -> Result<TensorElement<R>, HopfError> {
    let images = hopf.delta_coeff_images();
    Ok(apply_hom(
        &HomData { table, letter_images: &hopf.delta_letter, coeff_images: &images, anti: false },
        x,
    )?)
}

/// `epsilon(x)`; lands in the coefficient ring.
pub fn counit<R: Rational>(hopf: &HopfTables<R>, x: &Element<R>) -> CoeffScalar<R> {
    let images = hopf.counit_coeff_images();
    let mut out = CoeffScalar::zero();
    for (lms, c) in x.iter() {
        let f = hopf.eps_of_lmono(&lms[0]);
        if f.is_zero() {
            continue;
        }
        let mapped = c
            .map_vars(&images)
            .expect("counit images are invertible where needed");
        out = out.add(&mapped.scale(&f));
    }
    out
}

/// `S(x)`, applied as an antimorphism.
pub fn antipode<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
) -> Result<Element<R>, HopfError> {
    let images = hopf.antipode_coeff_images();
    Ok(apply_hom(
        &HomData { table, letter_images: &hopf.s_letter, coeff_images: &images, anti: true },
        x,
    )?)
}

/// Apply the coproduct to one slot of a tensor-square element, producing a
/// tensor-cube element.  `slot = 0` is `Delta (x) id`, `slot = 1` is
/// `id (x) Delta`.
fn coproduct_in_slot<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    t: &TensorElement<R>,
    slot: usize,
) -> Result<Tensor3Element<R>, HopfError> {
    assert!(slot < 2);
    let pair = if slot == 0 { [0usize, 1] } else { [1, 2] };
    let lone = if slot == 0 { 2usize } else { 0 };

    let letter_images: [[Tensor3Element<R>; NUM_LETTERS]; 2] = [0, 1].map(|s| {
        std::array::from_fn(|l| {
            if s == slot {
                map_tensor_slots(&hopf.delta_letter[l], &pair)
            } else {
                let mut lms = [LMono::empty(); 3];
                lms[lone] = LMono::single(crate::ncalg::Letter(l as u8));
                Tensor3Element::term(lms, MPoly::one())
            }
        })
    });
    let coeff_images: [Tensor3Coeff<R>; V2] = std::array::from_fn(|idx| {
        if idx == zvar() || (1..=GVARS).contains(&idx) {
            return MPoly::var(idx);
        }
        let rel = idx - 1 - GVARS;
        let s = rel / crate::scalars::SLOT_VARS;
        let v = rel % crate::scalars::SLOT_VARS;
        if s == slot {
            if v < 4 {
                map_slots(&hopf.delta_p[v], &pair)
            } else {
                map_slots(&hopf.delta_e, &pair)
            }
        } else if v < 4 {
            MPoly::var(pvar(lone, v))
        } else {
            MPoly::var(evar(lone))
        }
    });

    let mut out = Tensor3Element::zero();
    for (lms, c) in t.iter() {
        let mapped = c.map_vars(&coeff_images)?;
        if mapped.is_zero() {
            continue;
        }
        let mut acc = Tensor3Element::one();
        for (s, lm) in lms.iter().enumerate() {
            for l in lm.letters() {
                acc = mul(table, &acc, &letter_images[s][l.index()]);
            }
        }
        out = out.add(&acc.mul_coeff(&mapped));
    }
    Ok(out)
}

/// `(Delta (x) id) Delta(x) - (id (x) Delta) Delta(x)`.
pub fn coassoc_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
) -> Result<Tensor3Element<R>, HopfError> {
    let dx = coproduct(table, hopf, x)?;
    let left = coproduct_in_slot(table, hopf, &dx, 0)?;
    let right = coproduct_in_slot(table, hopf, &dx, 1)?;
    Ok(left.sub(&right))
}

/// Collapse one slot of a tensor-square element through the counit.
fn counit_in_slot<R: Rational>(
    hopf: &HopfTables<R>,
    t: &TensorElement<R>,
    slot: usize,
) -> Element<R> {
    assert!(slot < 2);
    let keep = 1 - slot;
    let images: [CoeffScalar<R>; V2] = std::array::from_fn(|idx| {
        if idx == zvar() || (1..=GVARS).contains(&idx) {
            return MPoly::var(idx);
        }
        let rel = idx - 1 - GVARS;
        let s = rel / crate::scalars::SLOT_VARS;
        let v = rel % crate::scalars::SLOT_VARS;
        if s == slot {
            if v < 4 {
                MPoly::zero()
            } else {
                MPoly::one()
            }
        } else if v < 4 {
            MPoly::var(pvar(0, v))
        } else {
            MPoly::var(evar(0))
        }
    });
    let mut out = Element::zero();
    for (lms, c) in t.iter() {
        let f = hopf.eps_of_lmono(&lms[slot]);
        if f.is_zero() {
            continue;
        }
        let mapped = c
            .map_vars(&images)
            .expect("counit images are invertible where needed");
        out.add_term([lms[keep]], mapped.scale(&f));
    }
    out
}

/// `(epsilon (x) id) Delta(x) - x`.
pub fn counit_left_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
) -> Result<Element<R>, HopfError> {
    let dx = coproduct(table, hopf, x)?;
    Ok(counit_in_slot(hopf, &dx, 0).sub(x))
}

/// `(id (x) epsilon) Delta(x) - x`.
pub fn counit_right_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
) -> Result<Element<R>, HopfError> {
    let dx = coproduct(table, hopf, x)?;
    Ok(counit_in_slot(hopf, &dx, 1).sub(x))
}

/// The multiplication map `U (x) U -> U`.
///
/// Coefficients are split per monomial into their left- and right-slot
/// parts, which are interleaved with the letter blocks in the order the
/// tensor factors dictate; collapsing the coefficient in one go would move
/// left-slot momenta past right-slot letters and is wrong.
pub fn multiply_slots<R: Rational>(
    table: &RelationTable<R>,
    t: &TensorElement<R>,
) -> Element<R> {
    let mut out = Element::zero();
    for (lms, c) in t.iter() {
        for (expo, q) in c.iter() {
            let (shared, parts) = split_tensor_monomial::<V2>(expo);
            let u = MPoly::<R, V1>::monomial(shared, q.clone())
                .mul(&MPoly::monomial(parts[0], Gaussian::one()));
            let v = MPoly::<R, V1>::monomial(parts[1], Gaussian::one());
            let mut w: Vec<Factor<R, V1>> = Vec::new();
            for l in lms[0].letters() {
                w.push(Factor::Letter(0, l));
            }
            w.push(Factor::Coeff(u));
            for l in lms[1].letters() {
                w.push(Factor::Letter(0, l));
            }
            w.push(Factor::Coeff(v));
            normal_order(table, w, &mut out);
        }
    }
    out
}

/// Apply the antipode to one slot of a tensor-square element.
fn antipode_in_slot<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    t: &TensorElement<R>,
    slot: usize,
) -> Result<TensorElement<R>, HopfError> {
    assert!(slot < 2);
    let keep = 1 - slot;
    let s_images = hopf.antipode_coeff_images();
    let mut out = TensorElement::zero();
    for (lms, c) in t.iter() {
        for (expo, q) in c.iter() {
            let (shared, parts) = split_tensor_monomial::<V2>(expo);
            let own = MPoly::<R, V1>::monomial(parts[slot], q.clone());
            let other = MPoly::<R, V1>::monomial(parts[keep], Gaussian::one())
                .mul(&MPoly::monomial(shared, Gaussian::one()));
            // S on the chosen slot: map the coefficient, then the letters in
            // reverse.
            let mut acc = Element::from_coeff(own.map_vars(&s_images)?);
            let letters: Vec<_> = lms[slot].letters().collect();
            for l in letters.iter().rev() {
                acc = mul(table, &acc, &hopf.s_letter[l.index()]);
            }
            for (alm, ac) in acc.iter() {
                let mut key = [LMono::empty(); 2];
                key[slot] = alm[0];
                key[keep] = lms[keep];
                let coeff = embed::<R, V2>(ac, slot).mul(&embed(&other, keep));
                out.add_term(key, coeff);
            }
        }
    }
    Ok(out)
}

/// `m (S (x) id) Delta(x) - epsilon(x) 1`.
pub fn antipode_left_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
) -> Result<Element<R>, HopfError> {
    let dx = coproduct(table, hopf, x)?;
    let sx = antipode_in_slot(table, hopf, &dx, 0)?;
    Ok(multiply_slots(table, &sx).sub(&Element::from_coeff(counit(hopf, x))))
}

/// `m (id (x) S) Delta(x) - epsilon(x) 1`.
pub fn antipode_right_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
) -> Result<Element<R>, HopfError> {
    let dx = coproduct(table, hopf, x)?;
    let sx = antipode_in_slot(table, hopf, &dx, 1)?;
    Ok(multiply_slots(table, &sx).sub(&Element::from_coeff(counit(hopf, x))))
}

/// `[Delta(x), Delta(y)] - Delta(rhs)`: zero iff the coproduct respects the
/// relation `[x, y] = rhs`.
pub fn delta_morphism_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
    y: &Element<R>,
    rhs: &Element<R>,
) -> Result<TensorElement<R>, HopfError> {
    let dx = coproduct(table, hopf, x)?;
    let dy = coproduct(table, hopf, y)?;
    Ok(commutator(table, &dx, &dy).sub(&coproduct(table, hopf, rhs)?))
}

/// `epsilon(rhs)`: must vanish for every commutation relation because the
/// counit is an algebra map into a commutative ring.
pub fn counit_morphism_residual<R: Rational>(
    hopf: &HopfTables<R>,
    rhs: &Element<R>,
) -> CoeffScalar<R> {
    counit(hopf, rhs)
}

/// `[S(y), S(x)] - S(rhs)`: zero iff the antipode antimorphs the relation
/// `[x, y] = rhs`.
pub fn antipode_antimorphism_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    x: &Element<R>,
    y: &Element<R>,
    rhs: &Element<R>,
) -> Result<Element<R>, HopfError> {
    let sx = antipode(table, hopf, x)?;
    let sy = antipode(table, hopf, y)?;
    Ok(commutator(table, &sy, &sx).sub(&antipode(table, hopf, rhs)?))
}

/// `S(x) + exp(alpha) x exp(-alpha)`: zero iff the antipode acts on `x` as
/// minus the conjugation.  Applies to letters and momenta, not to the
/// group-like `E`.
pub fn antipode_conj_residual<R: Rational>(
    table: &RelationTable<R>,
    hopf: &HopfTables<R>,
    g: Gen,
) -> Result<Element<R>, HopfError> {
    let alpha = hopf.conj_alpha.as_ref().ok_or(HopfError::NoConjForm)?;
    if matches!(g, Gen::E) {
        return Err(HopfError::Inconsistent(
            "the conjugation form applies to letters and momenta only".into(),
        ));
    }
    let x = Element::from_gen(g);
    let s = antipode(table, hopf, &x)?;
    Ok(s.add(&conj_exp(table, alpha, &x)?))
}
