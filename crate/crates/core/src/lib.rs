//! Exact-arithmetic spectral sequences of exact couples, with operad actions
//! transported across every page.
//!
//! The engine is organized bottom-up:
//!
//! * [`linalg`] — rings as values ([`Integers`], [`Rationals`], [`PrimeField`]),
//!   dense matrices, canonical echelon forms, Smith normal form and
//!   subquotients with torsion/free normal forms.
//! * [`graded`] — bigraded modules, chain maps with Koszul signs, homology of
//!   (presented) complexes.
//! * [`operad`] — symmetric dg operads in finite bidegree windows, algebras
//!   over them, and the induced structure on homology.
//! * [`prop`] — finite PROPs and the endomorphism PROP of a bigraded module.
//! * [`couple`] — filtered towers of algebras, the exact couple of the tower,
//!   and the derived-couple step.
//! * [`pages`] — spectral-sequence pages via two independent routes (iterated
//!   derivation, and cycle/boundary submodules of the first page), page
//!   differentials, transported operad actions, Leibniz verification and
//!   stabilization certificates.
//! * [`converge`] — colimit homology, its filtration, the associated graded
//!   and the comparison with the stable page.
//!
//! Everything is generic over the coefficient ring through the [`Ring`]
//! trait; concrete aliases for the shipped rings are exported at the root.

pub mod converge;
pub mod couple;
pub mod graded;
pub mod linalg;
pub mod operad;
pub mod pages;
pub mod prop;

pub use converge::{
    associated_graded, bounded_below, check_gamma_iso, check_gamma_multiplicative, colimit,
    gamma_map, BoundedBelowCertificate, ConvergeError, ConvergenceData, GammaMap,
};
pub use couple::{
    check_tower, connecting, first_couple, AlgebraTower, Couple, CoupleError, ExtensionPolicy,
};
pub use graded::{bd, Bidegree, BigradedModule, Component, DgModule, GradedMap, Homology};
pub use linalg::{Field, Integers, PrimeField, Rationals, Ring, RingKind};
pub use pages::{
    cross_check_pages, cycle_representative, page_action, Page, PageRoute, PagesError,
    SpectralSequence, Stabilization,
};
pub use operad::{
    builtin_assoc, builtin_comm, builtin_lie, check_algebra, check_operad, homology_action,
    homology_operad, OpElem, Operad, OperadAlgebra, OperadError,
};
pub use prop::{
    check_prop, check_prop_algebra, endomorphism_prop, tautological_prop_algebra, Prop,
    PropAlgebra, PropElem, PropError, TensorElement,
};

/// Matrix over the integers.
pub type MatZ = linalg::Matrix<Integers>;
/// Matrix over the rationals.
pub type MatQ = linalg::Matrix<Rationals>;
/// Matrix over a prime field.
pub type MatFp = linalg::Matrix<PrimeField>;

/// Subquotient of a free module over the integers.
pub type SubquotientZ = linalg::Subquotient<Integers>;
/// Subquotient over the rationals.
pub type SubquotientQ = linalg::Subquotient<Rationals>;
/// Subquotient over a prime field.
pub type SubquotientFp = linalg::Subquotient<PrimeField>;
