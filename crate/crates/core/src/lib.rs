//! Exact symbolic verification of three quantum Poincare Hopf algebra
//! presentations: the kappa-Poincare algebra in its original and rotated
//! bases, and the null-plane (light-cone) quantum Poincare algebra.
//!
//! Everything is computed over Gaussian rationals — there is no floating
//! point anywhere.  The deformation parameter is carried as `z = 1/(2*kappa)`
//! and the group-like combination `E = exp(z*P0)` is an independent Laurent
//! variable, so hyperbolic functions of the energy become Laurent
//! polynomials: `sinh(z*P0) = (E - E^-1)/2` and so on.
//!
//! The crate is generic over the backing rational type through the
//! [`ground::Rational`] bundle; the aliases below pin the arbitrary-precision
//! default used by the `verify` binary.  `num_rational::Rational64` also
//! satisfies the bundle for small fixed-width experiments.

pub mod exprio;
pub mod ground;
pub mod hopf;
pub mod ncalg;
pub mod presentations;
pub mod scalars;
pub mod verify;

/// Default exact scalar backend: arbitrary-precision rationals.
pub type Rat = num_rational::BigRational;

/// Gaussian rational over the default backend.
pub type Gauss = ground::Gaussian<Rat>;

/// Single-copy coefficient ring (z, metric entries, momenta, E).
pub type Coeff = scalars::CoeffScalar<Rat>;

/// Two-slot coefficient ring used under coproducts.
pub type TCoeff = scalars::TensorCoeff<Rat>;

/// Three-slot coefficient ring used by coassociativity checks.
pub type T3Coeff = scalars::Tensor3Coeff<Rat>;

/// Normal-ordered element of a presented algebra.
pub type Elem = ncalg::Element<Rat>;

/// Element of the two-fold tensor square.
pub type TElem = hopf::TensorElement<Rat>;

/// Element of the three-fold tensor cube.
pub type T3Elem = hopf::Tensor3Element<Rat>;

/// A presentation instantiated over the default backend.
pub type Pres = presentations::Presentation<Rat>;

/// A generator map between presentations over the default backend.
pub type Map = presentations::GenMap<Rat>;
