//! Catalogue of the built-in presentations and of the generator maps between
//! them.
//!
//! A presentation bundles a relation table (letter-letter commutators plus
//! the derivation rows acting on momenta), the coproduct/counit/antipode
//! tables, an optional metric binding, and display names for its generators.
//! Three presentations are built in:
//!
//! * `kappa-original` — deformed boosts/rotations `M1..M3, N1..N3` over
//!   momenta `P0..P3`, written against a generic symmetric metric; its
//!   relation table is produced by expanding a single tensor-index template
//!   over all index tuples (see [`expand_tensor_relations`]).
//! * `kappa-new` — the same algebra in a rebased generator set with
//!   symmetrized coproducts.
//! * `null-plane` — a light-cone deformation with letters
//!   `E1, E2, J3, F1, F2, K3` over momenta `P+, P1, P2, P-`; its table is
//!   metric-free.
//!
//! Two generator maps are provided: `basis-change` (kappa-new into
//! kappa-original at the same metric) and `null-iso` (null-plane into
//! kappa-original bound to the light-cone metric preset).  Inverses are not
//! assumed: [`invert_map`] reconstructs them by back-substitution and the
//! round trips are checked at construction time.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ground::{Gaussian, Rational};
use crate::hopf::{HopfError, HopfTables, TensorElement};
use crate::ncalg::{
    apply_hom, apply_hom_slotwise, commutator, mul, Element, Gen, HomData, LMono, Letter, NcError,
    RelationTable, Tensor, NUM_LETTERS,
};
use crate::scalars::{
    cosh_pow, epow, evar, gmn, identity_images, kappa, pmu, pvar, sinh_pow, zpow,
    CoeffScalar, MPoly, ScalarError, GVARS, V1, V2,
};

// ---------------------------------------------------------------------------
// Identifiers and errors.
// ---------------------------------------------------------------------------

/// The built-in presentations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PresId {
    KappaOriginal,
    KappaNew,
    NullPlane,
}

impl PresId {
    pub fn name(self) -> &'static str {
        match self {
            PresId::KappaOriginal => "kappa-original",
            PresId::KappaNew => "kappa-new",
            PresId::NullPlane => "null-plane",
        }
    }

    pub fn all() -> [PresId; 3] {
        [PresId::KappaOriginal, PresId::KappaNew, PresId::NullPlane]
    }
}

/// The built-in generator maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MapId {
    BasisChange,
    NullIso,
}

impl MapId {
    pub fn name(self) -> &'static str {
        match self {
            MapId::BasisChange => "basis-change",
            MapId::NullIso => "null-iso",
        }
    }

    pub fn all() -> [MapId; 2] {
        [MapId::BasisChange, MapId::NullIso]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresError {
    #[error("UnknownPresentation: {0}")]
    UnknownPresentation(String),
    #[error("UnknownMap: {0}")]
    UnknownMap(String),
    #[error("metric is not symmetric at entry ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("metric file: expected 16 rational entries, found {0}")]
    MetricCount(usize),
    #[error("metric file: entry {0} is not a rational number: {1:?}")]
    MetricEntry(usize, String),
    #[error("NotTriangular: {0}")]
    NotTriangular(String),
    #[error("map inverse failed the round-trip check on {0}")]
    InverseCheck(String),
    #[error(transparent)]
    Nc(#[from] NcError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Hopf(#[from] HopfError),
}

// ---------------------------------------------------------------------------
// Metric specifications.
// ---------------------------------------------------------------------------

/// Either the ten generic symmetric entries `g^{mu nu}` left as variables,
/// or a concrete symmetric matrix substituted into every table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricSpec<R: Rational> {
    Generic,
    Concrete([[Gaussian<R>; 4]; 4]),
}

/// A 4×4 array of Gaussian zeros.
fn zero4<R: Rational>() -> [[Gaussian<R>; 4]; 4] {
    std::array::from_fn(|_| std::array::from_fn(|_| Gaussian::zero()))
}

/// Parse a decimal integer of unbounded size.
pub(crate) fn parse_integer<R: Rational>(s: &str) -> Option<R> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, s),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let ten = R::from_u8(10)?;
    let mut acc = R::zero();
    for b in digits.bytes() {
        acc = acc * ten.clone() + R::from_u8(b - b'0')?;
    }
    Some(if neg { R::zero() - acc } else { acc })
}

/// Parse `a` or `a/b` with integer parts.
pub(crate) fn parse_rational<R: Rational>(tok: &str) -> Option<R> {
    let (num_s, den_s) = match tok.split_once('/') {
        Some((a, b)) => (a, b),
        None => (tok, "1"),
    };
    let num = parse_integer::<R>(num_s)?;
    let den = parse_integer::<R>(den_s)?;
    if den == R::zero() {
        return None;
    }
    Some(num / den)
}

impl<R: Rational> MetricSpec<R> {
    /// `Diag(1, -1, -1, -1)`.
    pub fn minkowski() -> Self {
        let mut m = zero4();
        m[0][0] = Gaussian::one();
        for k in 1..4 {
            m[k][k] = Gaussian::from_int(-1);
        }
        MetricSpec::Concrete(m)
    }

    /// The light-cone preset: `g^{03} = g^{30} = 1`, `g^{11} = g^{22} = -1`,
    /// all other entries zero.
    pub fn null_plane() -> Self {
        let mut m = zero4();
        m[0][3] = Gaussian::one();
        m[3][0] = Gaussian::one();
        m[1][1] = Gaussian::from_int(-1);
        m[2][2] = Gaussian::from_int(-1);
        MetricSpec::Concrete(m)
    }

    /// A concrete matrix, validated for symmetry.
    pub fn concrete(m: [[Gaussian<R>; 4]; 4]) -> Result<Self, PresError> {
        for mu in 0..4 {
            for nu in (mu + 1)..4 {
                if m[mu][nu] != m[nu][mu] {
                    return Err(PresError::NotSymmetric(mu, nu));
                }
            }
        }
        Ok(MetricSpec::Concrete(m))
    }

    /// Parse 16 whitespace-separated rational entries, row-major.
    pub fn parse_entries(text: &str) -> Result<Self, PresError> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 16 {
            return Err(PresError::MetricCount(toks.len()));
        }
        let mut m = zero4();
        for (idx, tok) in toks.iter().enumerate() {
            let r = parse_rational::<R>(tok)
                .ok_or_else(|| PresError::MetricEntry(idx + 1, tok.to_string()))?;
            m[idx / 4][idx % 4] = Gaussian::new(r, R::zero());
        }
        Self::concrete(m)
    }

    pub fn is_generic(&self) -> bool {
        matches!(self, MetricSpec::Generic)
    }

    /// Exact determinant of a concrete metric; `None` in generic mode.
    pub fn determinant(&self) -> Option<Gaussian<R>> {
        let MetricSpec::Concrete(m) = self else {
            return None;
        };
        fn det3<R: Rational>(m: &[[Gaussian<R>; 3]; 3]) -> Gaussian<R> {
            let mut d = Gaussian::zero();
            for c in 0..3 {
                let minor = m[1][(c + 1) % 3]
                    .mul(&m[2][(c + 2) % 3])
                    .sub(&m[1][(c + 2) % 3].mul(&m[2][(c + 1) % 3]));
                d = d.add(&m[0][c].mul(&minor));
            }
            d
        }
        let mut d = Gaussian::zero();
        let mut sign = Gaussian::one();
        for c in 0..4 {
            let mut minor: [[Gaussian<R>; 3]; 3] =
                std::array::from_fn(|_| std::array::from_fn(|_| Gaussian::zero()));
            for (ri, row) in m.iter().enumerate().skip(1) {
                let mut cj = 0;
                for (ci, v) in row.iter().enumerate() {
                    if ci != c {
                        minor[ri - 1][cj] = v.clone();
                        cj += 1;
                    }
                }
            }
            d = d.add(&sign.mul(&m[0][c]).mul(&det3(&minor)));
            sign = sign.neg();
        }
        Some(d)
    }
}

/// Decode a metric variable index back into its `(mu, nu)` pair.
fn g_index_pair(idx: usize) -> (usize, usize) {
    let mut c = 1;
    for mu in 0..4 {
        for nu in mu..4 {
            if c == idx {
                return (mu, nu);
            }
            c += 1;
        }
    }
    unreachable!("not a metric variable index: {idx}")
}

/// Variable images substituting a concrete metric, identity elsewhere.
fn g_images<R: Rational, const N: usize>(m: &[[Gaussian<R>; 4]; 4]) -> [MPoly<R, N>; N] {
    std::array::from_fn(|idx| {
        if (1..=GVARS).contains(&idx) {
            let (mu, nu) = g_index_pair(idx);
            MPoly::constant(m[mu][nu].clone())
        } else {
            MPoly::var(idx)
        }
    })
}

fn bind_coeff<R: Rational, const N: usize>(
    x: &MPoly<R, N>,
    m: &[[Gaussian<R>; 4]; 4],
) -> Result<MPoly<R, N>, PresError> {
    Ok(x.map_vars(&g_images(m))?)
}

fn bind_tensor<R: Rational, const K: usize, const N: usize>(
    x: &Tensor<R, K, N>,
    m: &[[Gaussian<R>; 4]; 4],
) -> Result<Tensor<R, K, N>, PresError> {
    let mut out = Tensor::zero();
    for (lms, c) in x.iter() {
        out.add_term(*lms, bind_coeff(c, m)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Epsilon symbols and letter dictionaries.
// ---------------------------------------------------------------------------

fn perm_sign(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        (3, 2, 1) | (2, 1, 3) | (1, 3, 2) => -1,
        _ => 0,
    }
}

/// Upper-index epsilon of the kappa bases; the convention fixes
/// `eps^{123} = -1`.
fn eps_m(i: usize, j: usize, k: usize) -> i64 {
    -perm_sign(i, j, k)
}

/// Lower-index epsilon of the null-plane rows, `eps_{123} = +1`.
fn eps_p(i: usize, j: usize, k: usize) -> i64 {
    perm_sign(i, j, k)
}

/// Rotation letter `M<a>` for spatial `a` in `1..=3`.
fn ml(a: usize) -> Letter {
    Letter((a - 1) as u8)
}

/// Boost letter `N<a>` for spatial `a` in `1..=3`.
fn nl(a: usize) -> Letter {
    Letter((a + 2) as u8)
}

fn lt<R: Rational>(l: Letter) -> Element<R> {
    Element::letter(l)
}

fn term1<R: Rational>(l: Letter, c: CoeffScalar<R>) -> Element<R> {
    Element::term([LMono::single(l)], c)
}

fn gauss_i<R: Rational>() -> Gaussian<R> {
    Gaussian::i()
}

// ---------------------------------------------------------------------------
// kappa-original: tensor-index expansion.
// ---------------------------------------------------------------------------

/// The antisymmetric tensor generator `M^{mu nu}` as a letter combination:
/// spatial pairs fold onto rotations through the epsilon symbol, `(i, 0)`
/// pairs are boosts, and the diagonal vanishes.
fn m_tensor<R: Rational>(mu: usize, nu: usize) -> Element<R> {
    if mu == nu {
        return Element::zero();
    }
    if mu == 0 {
        return lt(nl(nu)).neg();
    }
    if nu == 0 {
        return lt(nl(mu));
    }
    for k in 1..=3 {
        let s = eps_m(mu, nu, k);
        if s != 0 {
            return lt(ml(k)).scale(&Gaussian::from_int(s));
        }
    }
    unreachable!()
}

/// Right-hand side of the tensor-index template
/// `[M^{mu nu}, M^{la si}] = i(g^{mu si}M^{nu la} - g^{nu si}M^{mu la}
///  + g^{nu la}M^{mu si} - g^{mu la}M^{nu si})`.
fn lorentz_rhs<R: Rational>(mu: usize, nu: usize, la: usize, si: usize) -> Element<R> {
    m_tensor(nu, la)
        .mul_coeff(&gmn(mu, si))
        .sub(&m_tensor(mu, la).mul_coeff(&gmn(nu, si)))
        .add(&m_tensor(mu, si).mul_coeff(&gmn(nu, la)))
        .sub(&m_tensor(nu, si).mul_coeff(&gmn(mu, la)))
        .scale(&gauss_i())
}

/// Each letter as a combination of tensor generators `M^{mu nu}`:
/// `M^a = (1/2) eps^{a i j} M^{ij}` and `N^a = M^{a 0}`.
fn tensor_rep<R: Rational>(l: Letter) -> Vec<(Gaussian<R>, (usize, usize))> {
    let idx = l.index();
    if idx < 3 {
        let a = idx + 1;
        let mut v = Vec::new();
        for p in 1..=3 {
            for q in 1..=3 {
                let s = eps_m(a, p, q);
                if s != 0 {
                    v.push((Gaussian::frac(s, 2), (p, q)));
                }
            }
        }
        v
    } else {
        vec![(Gaussian::one(), (idx - 2, 0))]
    }
}

/// Expand the tensor-index template over all index tuples into the
/// letter-letter commutator table and the four derivation rows per letter.
///
/// The result is metric-generic; concrete metrics are substituted afterwards.
pub fn expand_tensor_relations<R: Rational>() -> RelationTable<R> {
    let mut t = RelationTable::commuting();

    // Letter-letter entries, oriented with the higher letter first.
    for hi in 0..NUM_LETTERS as u8 {
        for lo in 0..hi {
            let (x, y) = (Letter(hi), Letter(lo));
            let mut value = Element::zero();
            for (cx, (a, b)) in tensor_rep::<R>(x) {
                for (cy, (c, d)) in tensor_rep::<R>(y) {
                    value = value.add(&lorentz_rhs(a, b, c, d).scale(&cx.mul(&cy)));
                }
            }
            if !value.is_zero() {
                t.set_comm(x, y, value);
            }
        }
    }

    // cap1 = (1 - E^-2)/(2z), the deformed step shared by several rows.
    let cap1 = kappa::<R>().mul(&MPoly::one().sub(&epow(-2)));

    // Rotations: [M^a, P_0] = 0 and
    // [M^a, P_k] = i eps^{ajk} ( cap1 g^{0j} + g^{js} P_s ).
    for a in 1..=3 {
        for k in 1..=3 {
            let mut d = MPoly::zero();
            for j in 1..=3 {
                let s_eps = eps_m(a, j, k);
                if s_eps == 0 {
                    continue;
                }
                let mut inner = cap1.mul(&gmn(0, j));
                for s in 1..=3 {
                    inner = inner.add(&gmn(j, s).mul(&pmu(s)));
                }
                d = d.add(&inner.scale(&Gaussian::frac_i(s_eps, 1)));
            }
            t.set_d(ml(a), k, d);
        }
    }

    // Boosts: [N^a, P_0] = i g^{a0} cap1 + i g^{ak} P_k and
    // [N^a, P_k] = -(i/2) g^{00} d^a_k (1 - E^-4) kappa
    //              - i d^a_k g^{0s} P_s E^-2 + i g^{0a} P_k (E^-2 - 1)
    //              + i z d^a_k g^{rs} P_r P_s - 2 i z g^{as} P_s P_k.
    for a in 1..=3 {
        let mut d0 = cap1.mul(&gmn(a, 0));
        for k in 1..=3 {
            d0 = d0.add(&gmn(a, k).mul(&pmu(k)));
        }
        t.set_d(nl(a), 0, d0.scale(&gauss_i()));

        for k in 1..=3 {
            let mut d = MPoly::zero();
            if a == k {
                let cap2 = kappa::<R>()
                    .mul(&MPoly::one().sub(&epow(-4)))
                    .scale(&Gaussian::frac(1, 2));
                d = d.add(&cap2.mul(&gmn(0, 0)).scale(&Gaussian::frac_i(-1, 1)));
                for s in 1..=3 {
                    d = d.add(
                        &gmn(0, s)
                            .mul(&pmu(s))
                            .mul(&epow(-2))
                            .scale(&Gaussian::frac_i(-1, 1)),
                    );
                }
                for r in 1..=3 {
                    for s in 1..=3 {
                        d = d.add(
                            &zpow(1)
                                .mul(&gmn(r, s))
                                .mul(&pmu(r))
                                .mul(&pmu(s))
                                .scale(&gauss_i()),
                        );
                    }
                }
            }
            d = d.add(
                &gmn(0, a)
                    .mul(&pmu(k))
                    .mul(&epow(-2).sub(&MPoly::one()))
                    .scale(&gauss_i()),
            );
            for s in 1..=3 {
                d = d.add(
                    &zpow(1)
                        .mul(&gmn(a, s))
                        .mul(&pmu(s))
                        .mul(&pmu(k))
                        .scale(&Gaussian::frac_i(-2, 1)),
                );
            }
            t.set_d(nl(a), k, d);
        }
    }

    t
}

fn primitive_letter<R: Rational>(l: Letter) -> TensorElement<R> {
    let mut te = Tensor::zero();
    te.add_term([LMono::single(l), LMono::empty()], MPoly::one());
    te.add_term([LMono::empty(), LMono::single(l)], MPoly::one());
    te
}

fn primitive_p<R: Rational>() -> MPoly<R, V2> {
    MPoly::var(pvar(0, 0)).add(&MPoly::var(pvar(1, 0)))
}

fn grouplike_e<R: Rational>() -> MPoly<R, V2> {
    MPoly::var(evar(0)).mul(&MPoly::var(evar(1)))
}

fn hopf_kappa_original<R: Rational>() -> HopfTables<R> {
    let delta_letter = std::array::from_fn(|li| {
        let l = Letter(li as u8);
        if li < 3 {
            primitive_letter(l)
        } else {
            let a = li - 2;
            let mut te: TensorElement<R> = Tensor::zero();
            te.add_term([LMono::empty(), LMono::single(l)], MPoly::one());
            te.add_term(
                [LMono::single(l), LMono::empty()],
                MPoly::var_pow(evar(1), -2),
            );
            for j in 1..=3 {
                for k in 1..=3 {
                    let s = eps_m(a, j, k);
                    if s != 0 {
                        te.add_term(
                            [LMono::single(ml(k)), LMono::empty()],
                            zpow::<R, V2>(1)
                                .mul(&MPoly::var(pvar(1, j)))
                                .scale(&Gaussian::from_int(-2 * s)),
                        );
                    }
                }
            }
            te
        }
    });

    let delta_p = std::array::from_fn(|mu| {
        if mu == 0 {
            primitive_p()
        } else {
            MPoly::var(pvar(0, mu))
                .mul(&MPoly::var_pow(evar(1), -2))
                .add(&MPoly::var(pvar(1, mu)))
        }
    });

    let s_letter = std::array::from_fn(|li| {
        let l = Letter(li as u8);
        if li < 3 {
            lt(l).neg()
        } else {
            let a = li - 2;
            let mut inner = lt(l);
            for j in 1..=3 {
                for k in 1..=3 {
                    let s = eps_m(a, j, k);
                    if s != 0 {
                        inner = inner.add(&term1(
                            ml(k),
                            zpow::<R, V1>(1)
                                .mul(&pmu(j))
                                .scale(&Gaussian::from_int(2 * s)),
                        ));
                    }
                }
            }
            inner.mul_coeff(&epow(2)).neg()
        }
    });

    let s_p = std::array::from_fn(|mu| {
        if mu == 0 {
            pmu::<R>(0).neg()
        } else {
            pmu::<R>(mu).mul(&epow(2)).neg()
        }
    });

    HopfTables {
        delta_letter,
        delta_p,
        delta_e: grouplike_e(),
        eps_letter: std::array::from_fn(|_| Gaussian::zero()),
        s_letter,
        s_p,
        s_e: epow(-1),
        conj_alpha: None,
    }
}

// ---------------------------------------------------------------------------
// kappa-new.
// ---------------------------------------------------------------------------

fn table_kappa_new<R: Rational>() -> RelationTable<R> {
    let mut t = RelationTable::commuting();
    let sinh1 = sinh_pow::<R>(1);
    let cosh1 = cosh_pow::<R>(1);
    let cosh2 = cosh_pow::<R>(2);

    // [M^b, M^a] = -i eps^{bak} g^{ks} M^s for b > a.
    for b in 1..=3usize {
        for a in 1..b {
            let mut v = Element::zero();
            for k in 1..=3 {
                let e = eps_m(b, a, k);
                if e == 0 {
                    continue;
                }
                for s in 1..=3 {
                    v = v.add(&term1(ml(s), gmn(k, s)).scale(&Gaussian::frac_i(-e, 1)));
                }
            }
            t.set_comm(ml(b), ml(a), v);
        }
    }

    // [N^b, M^a] = i eps^{ars} g^{br} N^s
    //              + i g^{b0} M^a cosh - i d^{ba} g^{k0} M^k cosh.
    for b in 1..=3usize {
        for a in 1..=3usize {
            let mut v = Element::zero();
            for r in 1..=3 {
                for s in 1..=3 {
                    let e = eps_m(a, r, s);
                    if e == 0 {
                        continue;
                    }
                    v = v.add(&term1(nl(s), gmn(b, r)).scale(&Gaussian::frac_i(e, 1)));
                }
            }
            v = v.add(&term1(ml(a), gmn(b, 0).mul(&cosh1)).scale(&gauss_i()));
            if b == a {
                for k in 1..=3 {
                    v = v.sub(&term1(ml(k), gmn(k, 0).mul(&cosh1)).scale(&gauss_i()));
                }
            }
            t.set_comm(nl(b), ml(a), v);
        }
    }

    // [N^b, N^a] = i g^{a0} N^b cosh - i g^{b0} N^a cosh
    //   - i z^2 eps^{bas} g^{kr} M^r P_s P_k
    //   + i z eps^{ars} g^{b0} M^r P_s sinh - i z eps^{brs} g^{a0} M^r P_s sinh
    //   - i eps^{bak} g^{00} M^k cosh(2) - 2 i z eps^{bak} g^{s0} M^k P_s sinh.
    for b in 1..=3usize {
        for a in 1..b {
            let mut v = Element::zero();
            v = v.add(&term1(nl(b), gmn(a, 0).mul(&cosh1)).scale(&gauss_i()));
            v = v.sub(&term1(nl(a), gmn(b, 0).mul(&cosh1)).scale(&gauss_i()));
            for s in 1..=3 {
                let e = eps_m(b, a, s);
                if e == 0 {
                    continue;
                }
                for k in 1..=3 {
                    for r in 1..=3 {
                        v = v.add(
                            &term1(
                                ml(r),
                                zpow::<R, V1>(2).mul(&gmn(k, r)).mul(&pmu(s)).mul(&pmu(k)),
                            )
                            .scale(&Gaussian::frac_i(-e, 1)),
                        );
                    }
                }
            }
            for r in 1..=3 {
                for s in 1..=3 {
                    let e1 = eps_m(a, r, s);
                    if e1 != 0 {
                        v = v.add(
                            &term1(
                                ml(r),
                                zpow::<R, V1>(1).mul(&gmn(b, 0)).mul(&pmu(s)).mul(&sinh1),
                            )
                            .scale(&Gaussian::frac_i(e1, 1)),
                        );
                    }
                    let e2 = eps_m(b, r, s);
                    if e2 != 0 {
                        v = v.add(
                            &term1(
                                ml(r),
                                zpow::<R, V1>(1).mul(&gmn(a, 0)).mul(&pmu(s)).mul(&sinh1),
                            )
                            .scale(&Gaussian::frac_i(-e2, 1)),
                        );
                    }
                }
            }
            for k in 1..=3 {
                let e = eps_m(b, a, k);
                if e == 0 {
                    continue;
                }
                v = v.add(&term1(ml(k), gmn(0, 0).mul(&cosh2)).scale(&Gaussian::frac_i(-e, 1)));
                for s in 1..=3 {
                    v = v.add(
                        &term1(
                            ml(k),
                            zpow::<R, V1>(1).mul(&gmn(s, 0)).mul(&pmu(s)).mul(&sinh1),
                        )
                        .scale(&Gaussian::frac_i(-2 * e, 1)),
                    );
                }
            }
            t.set_comm(nl(b), nl(a), v);
        }
    }

    // Derivation rows.  Rotations: [M^a, P_k] = i eps^{ajk}
    // ( g^{0j} sinh / z + g^{js} P_s ); boosts as printed below.
    let sinh_over_z = sinh1.mul(&zpow(-1));
    for a in 1..=3usize {
        for k in 1..=3usize {
            let mut d = MPoly::zero();
            for j in 1..=3 {
                let e = eps_m(a, j, k);
                if e == 0 {
                    continue;
                }
                let mut inner = sinh_over_z.mul(&gmn(0, j));
                for s in 1..=3 {
                    inner = inner.add(&gmn(j, s).mul(&pmu(s)));
                }
                d = d.add(&inner.scale(&Gaussian::frac_i(e, 1)));
            }
            t.set_d(ml(a), k, d);
        }
    }
    // [N^a, P_0] = i g^{a0} sinh / z + i g^{ak} P_k;
    // [N^a, P_k] = -i d^a_k ( g^{00} (E^2 - E^-2)/(4z) + g^{0s} P_s cosh ).
    for a in 1..=3usize {
        let mut d0 = sinh_over_z.mul(&gmn(a, 0));
        for k in 1..=3 {
            d0 = d0.add(&gmn(a, k).mul(&pmu(k)));
        }
        t.set_d(nl(a), 0, d0.scale(&gauss_i()));
        let diag = kappa::<R>()
            .mul(&sinh_pow(2))
            .mul(&gmn(0, 0))
            .scale(&Gaussian::frac_i(-1, 1));
        let mut rest = MPoly::zero();
        for s in 1..=3 {
            rest = rest.add(
                &gmn(0, s)
                    .mul(&pmu(s))
                    .mul(&cosh1)
                    .scale(&Gaussian::frac_i(-1, 1)),
            );
        }
        t.set_d(nl(a), a, diag.add(&rest));
    }

    t
}

fn hopf_kappa_new<R: Rational>() -> HopfTables<R> {
    let delta_letter = std::array::from_fn(|li| {
        let l = Letter(li as u8);
        if li < 3 {
            primitive_letter(l)
        } else {
            let a = li - 2;
            let mut te: TensorElement<R> = Tensor::zero();
            te.add_term([LMono::single(l), LMono::empty()], MPoly::var(evar(1)));
            te.add_term(
                [LMono::empty(), LMono::single(l)],
                MPoly::var_pow(evar(0), -1),
            );
            for j in 1..=3 {
                for k in 1..=3 {
                    let s = eps_m(a, j, k);
                    if s == 0 {
                        continue;
                    }
                    te.add_term(
                        [LMono::single(ml(j)), LMono::empty()],
                        zpow::<R, V2>(1)
                            .mul(&MPoly::var_pow(evar(0), -1))
                            .mul(&MPoly::var(pvar(1, k)))
                            .scale(&Gaussian::from_int(-s)),
                    );
                    te.add_term(
                        [LMono::empty(), LMono::single(ml(j))],
                        zpow::<R, V2>(1)
                            .mul(&MPoly::var(pvar(0, k)))
                            .mul(&MPoly::var(evar(1)))
                            .scale(&Gaussian::from_int(s)),
                    );
                }
            }
            te
        }
    });

    let delta_p = std::array::from_fn(|mu| {
        if mu == 0 {
            primitive_p()
        } else {
            MPoly::var(pvar(0, mu))
                .mul(&MPoly::var(evar(1)))
                .add(&MPoly::var_pow(evar(0), -1).mul(&MPoly::var(pvar(1, mu))))
        }
    });

    let s_letter = std::array::from_fn(|li| {
        let l = Letter(li as u8);
        if li < 3 {
            lt(l).neg()
        } else {
            let a = li - 2;
            let mut fix = sinh_pow::<R>(1)
                .mul(&gmn(a, 0))
                .scale(&Gaussian::frac_i(3, 1));
            for k in 1..=3 {
                fix = fix.add(
                    &zpow::<R, V1>(1)
                        .mul(&gmn(a, k))
                        .mul(&pmu(k))
                        .scale(&Gaussian::frac_i(3, 1)),
                );
            }
            lt(l).neg().add(&Element::from_coeff(fix))
        }
    });

    let conj_alpha = zpow::<R, V1>(1).mul(&pmu(0)).scale(&Gaussian::from_int(3));

    HopfTables {
        delta_letter,
        delta_p,
        delta_e: grouplike_e(),
        eps_letter: std::array::from_fn(|_| Gaussian::zero()),
        s_letter,
        s_p: std::array::from_fn(|mu| pmu::<R>(mu).neg()),
        s_e: epow(-1),
        conj_alpha: Some(conj_alpha),
    }
}

// ---------------------------------------------------------------------------
// null-plane.
// ---------------------------------------------------------------------------

const NE1: Letter = Letter(0);
const NE2: Letter = Letter(1);
const NJ3: Letter = Letter(2);
const NF1: Letter = Letter(3);
const NF2: Letter = Letter(4);
const NK3: Letter = Letter(5);

/// The conserved combination `E1 P2 - E2 P1 + J3 sinh(z P+)/z`.
fn w_plus<R: Rational>() -> Element<R> {
    term1(NE1, pmu(2))
        .sub(&term1(NE2, pmu(1)))
        .add(&term1(NJ3, sinh_pow::<R>(1).mul(&zpow(-1))))
}

fn table_null_plane<R: Rational>() -> RelationTable<R> {
    let mut t = RelationTable::commuting();
    let sinh1 = sinh_pow::<R>(1);
    let cosh1 = cosh_pow::<R>(1);
    let sinh_over_z = sinh1.mul(&zpow(-1));

    // Derivation rows first: the letter-letter entries below are normal
    // ordered with these rows in scope.
    for (i, l) in [(1usize, NE1), (2usize, NE2)] {
        t.set_d(l, i, sinh_over_z.clone());
        t.set_d(l, 3, pmu(i));
    }
    t.set_d(NJ3, 1, pmu::<R>(2).neg());
    t.set_d(NJ3, 2, pmu(1));
    for (i, l) in [(1usize, NF1), (2usize, NF2)] {
        t.set_d(l, 0, pmu(i));
        t.set_d(l, i, pmu(3).mul(&cosh1));
    }
    t.set_d(NK3, 0, sinh_over_z.clone());
    t.set_d(NK3, 3, pmu::<R>(3).mul(&cosh1).neg());

    // [J3, E_i] = -eps_{ij3} E_j and likewise for F_i, oriented to the
    // table's (higher, lower) storage order.
    t.set_comm(NJ3, NE1, lt::<R>(NE2).neg());
    t.set_comm(NJ3, NE2, lt(NE1));
    t.set_comm(NF1, NJ3, lt(NF2));
    t.set_comm(NF2, NJ3, lt::<R>(NF1).neg());

    // [E_i, F_j] = d_{ij} K3 + eps_{ij3} cosh(zP+), stored as [F_j, E_i].
    t.set_comm(NF1, NE1, lt::<R>(NK3).neg());
    t.set_comm(NF2, NE2, lt::<R>(NK3).neg());
    let mut cross = [Element::zero(), Element::zero()];
    for (slot, (i, j)) in [(0usize, (2usize, 1usize)), (1usize, (1usize, 2usize))] {
        let e = eps_p(i, j, 3);
        cross[slot] = Element::from_coeff(cosh1.scale(&Gaussian::from_int(-e)));
    }
    t.set_comm(NF1, NE2, cross[0].clone());
    t.set_comm(NF2, NE1, cross[1].clone());

    // [K3, E_i] = E_i cosh(zP+).
    t.set_comm(NK3, NE1, term1(NE1, cosh1.clone()));
    t.set_comm(NK3, NE2, term1(NE2, cosh1.clone()));

    // [K3, F_i] = -F_i cosh + z E_i P- sinh - z^2 P_{3-i} W+.
    let w = w_plus::<R>();
    let zp3sinh = zpow::<R, V1>(1).mul(&pmu(3)).mul(&sinh1);
    for (fl, el, pother) in [(NF1, NE1, 2usize), (NF2, NE2, 1usize)] {
        let wz = mul(
            &t,
            &Element::from_coeff(zpow::<R, V1>(2).mul(&pmu(pother))),
            &w,
        );
        let v = term1(fl, cosh1.clone())
            .neg()
            .add(&term1(el, zp3sinh.clone()))
            .sub(&wz);
        t.set_comm(NK3, fl, v);
    }

    // [F2, F1] = -( z^2 P- W+ + z P- J3 sinh ).
    let wz = mul(&t, &Element::from_coeff(zpow::<R, V1>(2).mul(&pmu(3))), &w);
    let jz = mul(
        &t,
        &Element::from_coeff(zpow::<R, V1>(1).mul(&pmu(3))),
        &term1(NJ3, sinh1.clone()),
    );
    t.set_comm(NF2, NF1, wz.add(&jz).neg());

    t
}

fn hopf_null_plane<R: Rational>() -> HopfTables<R> {
    // Twisted tensor term helpers over the two-slot coefficient ring.
    let el_inv = MPoly::<R, V2>::var_pow(evar(0), -1);
    let er = MPoly::<R, V2>::var(evar(1));
    let pl = |mu: usize| MPoly::<R, V2>::var(pvar(0, mu));
    let pr = |mu: usize| MPoly::<R, V2>::var(pvar(1, mu));
    let z2 = zpow::<R, V2>(1);

    // Coproduct of the translation-like letters: a twisted primitive part
    // plus paired letter (x) momentum corrections.
    let twisted = |l: Letter, pairs: &[(Letter, usize, i64)]| {
        let mut te: TensorElement<R> = Tensor::zero();
        te.add_term([LMono::empty(), LMono::single(l)], el_inv.clone());
        te.add_term([LMono::single(l), LMono::empty()], er.clone());
        for &(al, mu, sign) in pairs {
            te.add_term(
                [LMono::single(al), LMono::empty()],
                z2.mul(&el_inv)
                    .mul(&pr(mu))
                    .scale(&Gaussian::from_int(sign)),
            );
            te.add_term(
                [LMono::empty(), LMono::single(al)],
                z2.mul(&pl(mu)).mul(&er).scale(&Gaussian::from_int(-sign)),
            );
        }
        te
    };

    let delta_letter = [
        primitive_letter(NE1),
        primitive_letter(NE2),
        primitive_letter(NJ3),
        twisted(NF1, &[(NE1, 3, 1), (NJ3, 2, 1)]),
        twisted(NF2, &[(NE2, 3, 1), (NJ3, 1, -1)]),
        twisted(NK3, &[(NE1, 1, 1), (NE2, 2, 1)]),
    ];

    let delta_p = std::array::from_fn(|mu| {
        if mu == 0 {
            primitive_p()
        } else {
            pl(mu).mul(&er).add(&el_inv.mul(&pr(mu)))
        }
    });

    let s_letter = [
        lt::<R>(NE1).neg(),
        lt::<R>(NE2).neg(),
        lt::<R>(NJ3).neg(),
        lt::<R>(NF1)
            .neg()
            .add(&Element::from_coeff(zpow::<R, V1>(1).mul(&pmu(1)).scale(&Gaussian::from_int(3)))),
        lt::<R>(NF2)
            .neg()
            .add(&Element::from_coeff(zpow::<R, V1>(1).mul(&pmu(2)).scale(&Gaussian::from_int(3)))),
        lt::<R>(NK3)
            .neg()
            .add(&Element::from_coeff(sinh_pow::<R>(1).scale(&Gaussian::from_int(3)))),
    ];

    HopfTables {
        delta_letter,
        delta_p,
        delta_e: grouplike_e(),
        eps_letter: std::array::from_fn(|_| Gaussian::zero()),
        s_letter,
        s_p: std::array::from_fn(|mu| pmu::<R>(mu).neg()),
        s_e: epow(-1),
        conj_alpha: Some(zpow::<R, V1>(1).mul(&pmu(0)).scale(&Gaussian::from_int(3))),
    }
}

// ---------------------------------------------------------------------------
// Presentations.
// ---------------------------------------------------------------------------

/// One relation `[x, y] = rhs`, oriented by the generator order.
#[derive(Clone, Debug)]
pub struct RelationRow<R: Rational> {
    pub label: String,
    pub lhs: (Gen, Gen),
    pub rhs: Element<R>,
}

/// A fully constructed presentation.
#[derive(Clone, Debug)]
pub struct Presentation<R: Rational> {
    pub id: PresId,
    pub letter_names: [&'static str; NUM_LETTERS],
    pub momentum_names: [&'static str; 4],
    pub table: RelationTable<R>,
    pub hopf: HopfTables<R>,
    pub metric: MetricSpec<R>,
    /// Named element constants usable in the expression grammar.
    pub constants: BTreeMap<String, Element<R>>,
    pub warnings: Vec<String>,
}

impl<R: Rational> Presentation<R> {
    pub fn name(&self) -> &'static str {
        self.id.name()
    }

    /// Display name of a generator.
    pub fn gen_name(&self, g: Gen) -> &'static str {
        match g {
            Gen::E => "E",
            Gen::P(mu) => self.momentum_names[mu as usize],
            Gen::Letter(l) => self.letter_names[l.index()],
        }
    }

    /// Resolve a generator name; momentum synonyms `P0`/`P3` are accepted in
    /// the null-plane presentation alongside `P+`/`P-`.
    pub fn gen_by_name(&self, s: &str) -> Option<Gen> {
        if s == "E" {
            return Some(Gen::E);
        }
        for (mu, n) in self.momentum_names.iter().enumerate() {
            if *n == s {
                return Some(Gen::P(mu as u8));
            }
        }
        if self.id == PresId::NullPlane {
            if s == "P0" {
                return Some(Gen::P(0));
            }
            if s == "P3" {
                return Some(Gen::P(3));
            }
        }
        for (li, n) in self.letter_names.iter().enumerate() {
            if *n == s {
                return Some(Gen::Letter(Letter(li as u8)));
            }
        }
        None
    }

    /// All relations `[x, y] = rhs` over ordered generator pairs, with the
    /// right-hand sides read off the normal-ordering engine.
    pub fn rows(&self) -> Vec<RelationRow<R>> {
        let gens = Gen::all();
        let mut rows = Vec::new();
        for (ix, x) in gens.iter().enumerate() {
            for y in gens.iter().take(ix) {
                let rhs = commutator(
                    &self.table,
                    &Element::from_gen(*x),
                    &Element::from_gen(*y),
                );
                rows.push(RelationRow {
                    label: format!("[{},{}]", self.gen_name(*x), self.gen_name(*y)),
                    lhs: (*x, *y),
                    rhs,
                });
            }
        }
        rows
    }

    /// Look up a relation row by its ordered generator pair.
    pub fn row_for(&self, x: Gen, y: Gen) -> RelationRow<R> {
        let rhs = commutator(&self.table, &Element::from_gen(x), &Element::from_gen(y));
        RelationRow {
            label: format!("[{},{}]", self.gen_name(x), self.gen_name(y)),
            lhs: (x, y),
            rhs,
        }
    }
}

/// Resolve a presentation name.
pub fn presentation_by_name(name: &str) -> Result<PresId, PresError> {
    PresId::all()
        .into_iter()
        .find(|id| id.name() == name)
        .ok_or_else(|| PresError::UnknownPresentation(name.to_string()))
}

/// Resolve a map name.
pub fn map_by_name(name: &str) -> Result<MapId, PresError> {
    MapId::all()
        .into_iter()
        .find(|id| id.name() == name)
        .ok_or_else(|| PresError::UnknownMap(name.to_string()))
}

/// Build a presentation, substituting a concrete metric when given.
/// The null-plane table is metric-free and ignores the argument.
pub fn build_presentation<R: Rational>(
    id: PresId,
    metric: &MetricSpec<R>,
) -> Result<Presentation<R>, PresError> {
    let kappa_names: [&'static str; 6] = ["M1", "M2", "M3", "N1", "N2", "N3"];
    let (table, hopf, letter_names, momentum_names, constants) = match id {
        PresId::KappaOriginal => (
            expand_tensor_relations::<R>(),
            hopf_kappa_original::<R>(),
            kappa_names,
            ["P0", "P1", "P2", "P3"],
            BTreeMap::new(),
        ),
        PresId::KappaNew => (
            table_kappa_new::<R>(),
            hopf_kappa_new::<R>(),
            kappa_names,
            ["P0", "P1", "P2", "P3"],
            BTreeMap::new(),
        ),
        PresId::NullPlane => {
            let mut c = BTreeMap::new();
            c.insert("W+".to_string(), w_plus::<R>());
            (
                table_null_plane::<R>(),
                hopf_null_plane::<R>(),
                ["E1", "E2", "J3", "F1", "F2", "K3"],
                ["P+", "P1", "P2", "P-"],
                c,
            )
        }
    };

    let mut pres = Presentation {
        id,
        letter_names,
        momentum_names,
        table,
        hopf,
        metric: metric.clone(),
        constants,
        warnings: Vec::new(),
    };

    if id != PresId::NullPlane {
        if let MetricSpec::Concrete(m) = metric {
            pres = bind_metric(pres, m)?;
        }
    }

    if let Some(det) = pres.metric.determinant() {
        if det.is_zero() {
            pres.warnings
                .push("metric determinant is zero: the bilinear form is degenerate".to_string());
        }
    }

    pres.table.validate()?;
    pres.hopf.validate()?;
    Ok(pres)
}

/// Substitute a concrete metric into every table of a presentation.
fn bind_metric<R: Rational>(
    pres: Presentation<R>,
    m: &[[Gaussian<R>; 4]; 4],
) -> Result<Presentation<R>, PresError> {
    let mut table = RelationTable::commuting();
    for hi in 0..NUM_LETTERS as u8 {
        for lo in 0..hi {
            let v = pres.table.comm_entry(Letter(hi), Letter(lo));
            if !v.is_zero() {
                table.set_comm(Letter(hi), Letter(lo), bind_tensor(&v, m)?);
            }
        }
    }
    for l in Letter::all() {
        let row = pres.table.d_row(l);
        for mu in 0..4 {
            table.set_d(l, mu, bind_coeff(&row[mu], m)?);
        }
    }

    let hopf = HopfTables {
        delta_letter: std::array::from_fn(|li| {
            bind_tensor(&pres.hopf.delta_letter[li], m).expect("polynomial metric binding")
        }),
        delta_p: std::array::from_fn(|mu| {
            bind_coeff(&pres.hopf.delta_p[mu], m).expect("polynomial metric binding")
        }),
        delta_e: bind_coeff(&pres.hopf.delta_e, m)?,
        eps_letter: pres.hopf.eps_letter.clone(),
        s_letter: std::array::from_fn(|li| {
            bind_tensor(&pres.hopf.s_letter[li], m).expect("polynomial metric binding")
        }),
        s_p: std::array::from_fn(|mu| {
            bind_coeff(&pres.hopf.s_p[mu], m).expect("polynomial metric binding")
        }),
        s_e: bind_coeff(&pres.hopf.s_e, m)?,
        conj_alpha: match &pres.hopf.conj_alpha {
            Some(a) => Some(bind_coeff(a, m)?),
            None => None,
        },
    };

    let mut constants = BTreeMap::new();
    for (k, v) in &pres.constants {
        constants.insert(k.clone(), bind_tensor(v, m)?);
    }

    Ok(Presentation {
        table,
        hopf,
        constants,
        ..pres
    })
}

// ---------------------------------------------------------------------------
// Generator maps.
// ---------------------------------------------------------------------------

/// A generator map between two presentations: letter images in the target
/// plus a substitution on the momentum/exponential coefficient variables.
#[derive(Clone, Debug)]
pub struct GenMap<R: Rational> {
    pub name: String,
    pub source: PresId,
    pub target: PresId,
    pub letter_images: [Element<R>; NUM_LETTERS],
    pub sigma: [CoeffScalar<R>; V1],
}

impl<R: Rational> GenMap<R> {
    /// Apply the map to an element; products are normal ordered in the
    /// target table.
    pub fn apply(
        &self,
        target_table: &RelationTable<R>,
        x: &Element<R>,
    ) -> Result<Element<R>, PresError> {
        let h = HomData {
            table: target_table,
            letter_images: &self.letter_images,
            coeff_images: &self.sigma,
            anti: false,
        };
        Ok(apply_hom(&h, x)?)
    }

    /// Apply the map slotwise to a two-fold tensor, i.e. as `phi (x) phi`.
    pub fn apply_tensor(
        &self,
        target_table: &RelationTable<R>,
        x: &TensorElement<R>,
    ) -> Result<TensorElement<R>, PresError> {
        Ok(apply_hom_slotwise(
            target_table,
            &self.letter_images,
            &self.sigma,
            x,
        )?)
    }

    /// Apply the coefficient substitution alone.
    pub fn apply_scalar(&self, c: &CoeffScalar<R>) -> Result<CoeffScalar<R>, PresError> {
        Ok(c.map_vars(&self.sigma)?)
    }
}

/// A map together with its verified inverse and both presentations.
#[derive(Clone, Debug)]
pub struct MapBundle<R: Rational> {
    pub id: MapId,
    pub map: GenMap<R>,
    pub inverse: GenMap<R>,
    pub source: Presentation<R>,
    pub target: Presentation<R>,
}

/// Shared boost-image shape: `(N^a - z eps^{ajk} M^j P_k) E`.
fn boost_combination<R: Rational>(a: usize) -> Element<R> {
    let mut inner = lt(nl(a));
    for j in 1..=3 {
        for k in 1..=3 {
            let s = eps_m(a, j, k);
            if s != 0 {
                inner = inner.add(
                    &term1(ml(j), zpow::<R, V1>(1).mul(&pmu(k))).scale(&Gaussian::from_int(-s)),
                );
            }
        }
    }
    inner.mul_coeff(&epow(1))
}

/// The shared coefficient substitution of both maps:
/// `P0 -> -P0`, `P_k -> -P_k E`, `E -> E^-1`.
fn reflect_sigma<R: Rational>() -> [CoeffScalar<R>; V1] {
    let mut sigma = identity_images::<R, V1>();
    sigma[pvar(0, 0)] = pmu::<R>(0).neg();
    for k in 1..=3 {
        sigma[pvar(0, k)] = pmu::<R>(k).mul(&epow(1)).neg();
    }
    sigma[evar(0)] = epow(-1);
    sigma
}

/// Build a map bundle.  `basis-change` sends kappa-new into kappa-original
/// at the caller's metric; `null-iso` sends null-plane into kappa-original
/// bound to the light-cone preset regardless of the argument.
pub fn make_map<R: Rational>(
    id: MapId,
    metric: &MetricSpec<R>,
) -> Result<MapBundle<R>, PresError> {
    let (source, target, letter_images) = match id {
        MapId::BasisChange => {
            let source = build_presentation(PresId::KappaNew, metric)?;
            let target = build_presentation(PresId::KappaOriginal, metric)?;
            let images: [Element<R>; NUM_LETTERS] = std::array::from_fn(|li| {
                if li < 3 {
                    lt(Letter(li as u8))
                } else {
                    boost_combination(li - 2)
                }
            });
            (source, target, images)
        }
        MapId::NullIso => {
            let source = build_presentation(PresId::NullPlane, &MetricSpec::Generic)?;
            let target = build_presentation(PresId::KappaOriginal, &MetricSpec::null_plane())?;
            let i = gauss_i::<R>();
            let images: [Element<R>; NUM_LETTERS] = [
                lt(ml(2)).scale(&i),
                lt(ml(1)).scale(&i.neg()),
                lt(ml(3)).scale(&i.neg()),
                boost_combination(1).scale(&i),
                boost_combination(2).scale(&i),
                boost_combination(3).scale(&i.neg()),
            ];
            (source, target, images)
        }
    };

    let map = GenMap {
        name: id.name().to_string(),
        source: source.id,
        target: target.id,
        letter_images,
        sigma: reflect_sigma(),
    };
    let inverse = invert_map(&map, &source, &target)?;

    let bundle = MapBundle {
        id,
        map,
        inverse,
        source,
        target,
    };
    bundle.check_round_trips()?;
    Ok(bundle)
}

impl<R: Rational> MapBundle<R> {
    /// Exact round trips on every generator, both ways.
    fn check_round_trips(&self) -> Result<(), PresError> {
        for g in Gen::all() {
            let x = Element::from_gen(g);
            let there = self.map.apply(&self.target.table, &x)?;
            let back = self.inverse.apply(&self.source.table, &there)?;
            if back != x {
                return Err(PresError::InverseCheck(format!(
                    "{} of {}",
                    self.map.name,
                    self.source.gen_name(g)
                )));
            }
            let there = self.inverse.apply(&self.source.table, &x)?;
            let back = self.map.apply(&self.target.table, &there)?;
            if back != x {
                return Err(PresError::InverseCheck(format!(
                    "{} of {}",
                    self.inverse.name,
                    self.target.gen_name(g)
                )));
            }
        }
        Ok(())
    }
}

/// Invert the coefficient substitution.  Requires the shape
/// `P0 -> a P0`, `P_k -> r_k P_k E^{m_k}`, `E -> E^a` with `a = +-1` and
/// each `r_k` an invertible constant.
fn invert_sigma<R: Rational>(sigma: &[CoeffScalar<R>; V1]) -> Result<[CoeffScalar<R>; V1], PresError> {
    let bad = |what: &str| PresError::NotTriangular(format!("substitution is not invertible: {what}"));

    let (expo0, a0) = sigma[pvar(0, 0)]
        .as_monomial()
        .ok_or_else(|| bad("P0 image is not a monomial"))?;
    let mut expect = [0i16; V1];
    expect[pvar(0, 0)] = 1;
    if expo0 != expect || !a0.is_real() {
        return Err(bad("P0 image is not a real multiple of P0"));
    }
    let a_inv = a0.inv().ok_or_else(|| bad("P0 image vanishes"))?;
    // E -> E^a with integer a = +-1 is enforced by the table contract; read
    // the exponent off the image.
    let (expo_e, ce) = sigma[evar(0)]
        .as_monomial()
        .ok_or_else(|| bad("E image is not a monomial"))?;
    if !ce.is_one() || expo_e[evar(0)].abs() != 1 {
        return Err(bad("E image is not E^(+-1)"));
    }
    let a_exp = expo_e[evar(0)];

    let mut tau = identity_images::<R, V1>();
    tau[pvar(0, 0)] = pmu::<R>(0).scale(&a_inv);
    tau[evar(0)] = epow(a_exp);
    for k in 1..=3 {
        let (expo, r) = sigma[pvar(0, k)]
            .as_monomial()
            .ok_or_else(|| bad("P_k image is not a monomial"))?;
        let mut shape = expo;
        let m_k = shape[evar(0)];
        shape[evar(0)] = 0;
        let mut expect = [0i16; V1];
        expect[pvar(0, k)] = 1;
        if shape != expect {
            return Err(bad("P_k image is not r P_k E^m"));
        }
        let r_inv = r.inv().ok_or_else(|| bad("P_k image vanishes"))?;
        tau[pvar(0, k)] = pmu::<R>(k).mul(&epow(-a_exp * m_k)).scale(&r_inv);
    }
    Ok(tau)
}

/// Invert a generator map by back-substitution.
///
/// Every letter image must decompose as a coefficient-linear combination of
/// single letters plus a pure-coefficient part, and the resulting matrix
/// must reduce to the identity using only invertible-monomial pivots;
/// otherwise the map is reported as `NotTriangular`.
pub fn invert_map<R: Rational>(
    map: &GenMap<R>,
    source: &Presentation<R>,
    target: &Presentation<R>,
) -> Result<GenMap<R>, PresError> {
    let tau = invert_sigma(&map.sigma)?;

    // Decompose the images: image[s] = sum_t letter_t * a[s][t] + c0[s],
    // then pull every coefficient back through the inverse substitution.
    let mut a: Vec<Vec<CoeffScalar<R>>> = vec![vec![MPoly::zero(); NUM_LETTERS]; NUM_LETTERS];
    let mut b: Vec<Element<R>> = (0..NUM_LETTERS)
        .map(|s| lt(Letter(s as u8)))
        .collect();
    for s in 0..NUM_LETTERS {
        for (lm, c) in map.letter_images[s].iter() {
            let letters: Vec<Letter> = lm[0].letters().collect();
            match letters.len() {
                0 => {
                    let pulled = c.map_vars(&tau)?;
                    b[s] = b[s].sub(&Element::from_coeff(pulled));
                }
                1 => {
                    let t = letters[0].index();
                    a[s][t] = a[s][t].add(&c.map_vars(&tau)?);
                }
                _ => {
                    return Err(PresError::NotTriangular(format!(
                        "letter image {} contains a word of degree {}",
                        map.name,
                        letters.len()
                    )))
                }
            }
        }
    }

    // Solve sum_t y_t a[s][t] = b[s] by elimination with unit pivots.
    let mut pivot_row: [Option<usize>; NUM_LETTERS] = [None; NUM_LETTERS];
    let mut used = [false; NUM_LETTERS];
    for t in 0..NUM_LETTERS {
        let Some((s, inv)) = (0..NUM_LETTERS).find_map(|s| {
            if used[s] {
                return None;
            }
            a[s][t].try_invert().map(|inv| (s, inv))
        }) else {
            return Err(PresError::NotTriangular(format!(
                "no invertible pivot for letter column {t}"
            )));
        };
        used[s] = true;
        pivot_row[t] = Some(s);
        for tt in 0..NUM_LETTERS {
            a[s][tt] = a[s][tt].mul(&inv);
        }
        b[s] = b[s].mul_coeff(&inv);
        for ss in 0..NUM_LETTERS {
            if ss == s || a[ss][t].is_zero() {
                continue;
            }
            let f = a[ss][t].clone();
            for tt in 0..NUM_LETTERS {
                a[ss][tt] = a[ss][tt].sub(&a[s][tt].mul(&f));
            }
            b[ss] = b[ss].sub(&b[s].mul_coeff(&f));
        }
    }

    let letter_images: [Element<R>; NUM_LETTERS] = std::array::from_fn(|t| {
        let s = pivot_row[t].expect("all columns pivoted");
        b[s].clone()
    });

    let _ = (source, target);
    Ok(GenMap {
        name: format!("{}-inverse", map.name),
        source: map.target,
        target: map.source,
        letter_images,
        sigma: tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    type El = Element<Rat>;
    type G = Gaussian<Rat>;

    fn gen(pres: &Presentation<Rat>, name: &str) -> El {
        Element::from_gen(pres.gen_by_name(name).unwrap())
    }

    #[test]
    fn rotation_row_kills_aligned_momentum() {
        let p = build_presentation::<Rat>(PresId::KappaOriginal, &MetricSpec::Generic).unwrap();
        // [M^3, P_3] carries eps^{3 j 3} = 0 throughout.
        assert!(p.table.d_row(ml(3))[3].is_zero());
        assert!(p.table.d_row(ml(3))[0].is_zero());
    }

    #[test]
    fn rotation_pair_expansion_matches_hand_value() {
        let p = build_presentation::<Rat>(PresId::KappaOriginal, &MetricSpec::Generic).unwrap();
        // [M^3, M^1] = i g^{2s} M^s.
        let got = p.table.comm_entry(ml(3), ml(1));
        let mut want = El::zero();
        for s in 1..=3 {
            want = want.add(&term1(ml(s), gmn(2, s)).scale(&G::i()));
        }
        assert_eq!(got, want);
    }

    #[test]
    fn rotation_pairs_agree_between_kappa_presentations() {
        let po = build_presentation::<Rat>(PresId::KappaOriginal, &MetricSpec::Generic).unwrap();
        let pn = build_presentation::<Rat>(PresId::KappaNew, &MetricSpec::Generic).unwrap();
        for b in 2..=3 {
            for a in 1..b {
                assert_eq!(
                    po.table.comm_entry(ml(b), ml(a)),
                    pn.table.comm_entry(ml(b), ml(a)),
                    "rotation sector must coincide"
                );
            }
        }
    }

    #[test]
    fn minkowski_boost_momentum_rows() {
        let mink = MetricSpec::minkowski();
        for id in [PresId::KappaOriginal, PresId::KappaNew] {
            let p = build_presentation::<Rat>(id, &mink).unwrap();
            for a in 1..=3usize {
                let want = pmu::<Rat>(a).scale(&G::frac_i(-1, 1));
                assert_eq!(p.table.d_row(nl(a))[0], want, "{}", id.name());
            }
        }
    }

    #[test]
    fn minkowski_rotation_pair_sign() {
        let p = build_presentation::<Rat>(PresId::KappaNew, &MetricSpec::minkowski()).unwrap();
        let got = commutator(&p.table, &gen(&p, "M1"), &gen(&p, "M2"));
        assert_eq!(got, lt::<Rat>(ml(3)).scale(&G::frac_i(-1, 1)));
    }

    #[test]
    fn null_plane_cross_pair_as_built() {
        let p = build_presentation::<Rat>(PresId::NullPlane, &MetricSpec::Generic).unwrap();
        let got = commutator(&p.table, &gen(&p, "E1"), &gen(&p, "F2"));
        assert_eq!(got, Element::from_coeff(cosh_pow::<Rat>(1)));
        let diag = commutator(&p.table, &gen(&p, "E1"), &gen(&p, "F1"));
        assert_eq!(diag, lt::<Rat>(NK3));
    }

    #[test]
    fn null_plane_conserved_combination() {
        let p = build_presentation::<Rat>(PresId::NullPlane, &MetricSpec::Generic).unwrap();
        let w = p.constants.get("W+").unwrap();
        let want = term1::<Rat>(NE1, pmu(2))
            .sub(&term1(NE2, pmu(1)))
            .add(&term1(NJ3, sinh_pow::<Rat>(1).mul(&zpow(-1))));
        assert_eq!(*w, want);
    }

    #[test]
    fn metric_presets_and_parsing() {
        let null = MetricSpec::<Rat>::null_plane();
        let parsed =
            MetricSpec::<Rat>::parse_entries("0 0 0 1\n0 -1 0 0\n0 0 -1 0\n1 0 0 0").unwrap();
        assert_eq!(null, parsed);
        assert!(matches!(
            MetricSpec::<Rat>::parse_entries("1 2 3"),
            Err(PresError::MetricCount(3))
        ));
        assert!(matches!(
            MetricSpec::<Rat>::parse_entries(
                "0 1 0 0  0 0 0 0  0 0 0 0  0 0 0 0"
            ),
            Err(PresError::NotSymmetric(0, 1))
        ));
        assert!(matches!(
            MetricSpec::<Rat>::parse_entries(
                "q 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1"
            ),
            Err(PresError::MetricEntry(1, _))
        ));
        let mink = MetricSpec::<Rat>::minkowski();
        assert_eq!(mink.determinant().unwrap(), G::from_int(-1));
    }

    #[test]
    fn degenerate_metric_raises_a_warning_not_an_error() {
        let ones: [[G; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| G::one()));
        let ms = MetricSpec::concrete(ones).unwrap();
        assert!(ms.determinant().unwrap().is_zero());
        let p = build_presentation::<Rat>(PresId::KappaOriginal, &ms).unwrap();
        assert!(!p.warnings.is_empty());
    }

    #[test]
    fn basis_change_boost_image_expansion() {
        let b = make_map::<Rat>(MapId::BasisChange, &MetricSpec::Generic).unwrap();
        // N1 image: (N^1 + z(M^2 P_3 - M^3 P_2)) E.
        let want = lt::<Rat>(nl(1))
            .add(&term1(ml(2), zpow::<Rat, V1>(1).mul(&pmu(3))))
            .sub(&term1(ml(3), zpow::<Rat, V1>(1).mul(&pmu(2))))
            .mul_coeff(&epow(1));
        assert_eq!(b.map.letter_images[nl(1).index()], want);
    }

    #[test]
    fn basis_change_inverse_momentum_images() {
        let b = make_map::<Rat>(MapId::BasisChange, &MetricSpec::Generic).unwrap();
        assert_eq!(b.inverse.sigma[pvar(0, 0)], pmu::<Rat>(0).neg());
        for k in 1..=3 {
            assert_eq!(
                b.inverse.sigma[pvar(0, k)],
                pmu::<Rat>(k).mul(&epow(1)).neg()
            );
        }
        assert_eq!(b.inverse.sigma[evar(0)], epow::<Rat>(-1));
    }

    #[test]
    fn null_iso_inverse_rotation_image() {
        let b = make_map::<Rat>(MapId::NullIso, &MetricSpec::Generic).unwrap();
        // J3 maps to -i M3, so the inverse sends M3 to i J3.
        assert_eq!(
            b.inverse.letter_images[ml(3).index()],
            lt::<Rat>(NJ3).scale(&G::i())
        );
    }

    #[test]
    fn maps_round_trip_on_sample_words() {
        let b = make_map::<Rat>(MapId::BasisChange, &MetricSpec::Generic).unwrap();
        let p = &b.source;
        let x = mul(
            &p.table,
            &gen(p, "N2"),
            &mul(&p.table, &gen(p, "M1"), &gen(p, "P1")),
        );
        let there = b.map.apply(&b.target.table, &x).unwrap();
        let back = b.inverse.apply(&b.source.table, &there).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            presentation_by_name("kappa-weird"),
            Err(PresError::UnknownPresentation(_))
        ));
        assert!(matches!(
            map_by_name("identity"),
            Err(PresError::UnknownMap(_))
        ));
        assert_eq!(presentation_by_name("null-plane").unwrap(), PresId::NullPlane);
    }

    #[test]
    fn null_plane_momentum_synonyms() {
        let p = build_presentation::<Rat>(PresId::NullPlane, &MetricSpec::Generic).unwrap();
        assert_eq!(p.gen_by_name("P+"), Some(Gen::P(0)));
        assert_eq!(p.gen_by_name("P0"), Some(Gen::P(0)));
        assert_eq!(p.gen_by_name("P-"), Some(Gen::P(3)));
        assert_eq!(p.gen_by_name("P3"), Some(Gen::P(3)));
        let k = build_presentation::<Rat>(PresId::KappaNew, &MetricSpec::Generic).unwrap();
        assert_eq!(k.gen_by_name("P+"), None);
    }

    #[test]
    fn rows_cover_all_ordered_pairs() {
        let p = build_presentation::<Rat>(PresId::KappaNew, &MetricSpec::Generic).unwrap();
        let rows = p.rows();
        assert_eq!(rows.len(), 55);
        assert!(rows.iter().all(|r| r.lhs.0 > r.lhs.1));
        // Spot value: [P1, E] = 0 and [N1, P0] is the stored derivation row.
        let pe = rows
            .iter()
            .find(|r| r.label == "[P1,E]")
            .expect("row exists");
        assert!(pe.rhs.is_zero());
    }
}
