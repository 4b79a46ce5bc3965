//! N = 2 orbit-space reduction under O(2).

pub mod chebyshev;
pub mod driven;
pub mod flow;
pub mod invariants;
pub mod oracle;
pub mod point;
pub mod tuning;

pub use chebyshev::{chebyshev_fit, ChebyshevSeries};
pub use driven::{driven_pair, reflection_equilibria, DrivenEquilibrium, DrivenPair};
pub use flow::{orbit_continue, orbit_rhs, orbit_skeleton, OrbitBranch, OrbitSkeleton, OrbitSystem, RhsForm};
pub use invariants::{reduce_invariants, InvariantPoly, InvariantSet, InvariantValues};
pub use oracle::{invariant_oracle, oracle_at_state, oracle_model};
pub use point::{hilbert_pi, OrbitPoint, ORBIT_TOL};
pub use tuning::{count_peaks, tuning_curve_n2};
