//! Foundational numerics: special functions, quadrature, dense complex least
//! squares and rate-law regression.

pub mod bessel;
pub mod legendre;
pub mod lstsq;
pub mod quadrature;
pub mod rates;

pub use bessel::{bessel, BesselKind, CylTable, SphTable, DEFAULT_MAX_ORDER};
pub use legendre::{legendre_p, legendre_table, AssocLegendre};
pub use lstsq::{lstsq_tikhonov, CMatrix, LstsqSolution};
pub use quadrature::{gauss_legendre, periodic_trapezoid, QuadRule};
pub use rates::{fit_rates, linear_fit, PreferredLaw, RateFit};
