//! Birkhoff normal forms of Taylor–Fourier Hamiltonians by a Newton-type
//! iteration, with the classical degree-by-degree elimination as a reference.

pub mod error;
pub mod engine;
pub mod homology;
pub mod lie;
pub mod random;
pub mod schedule;
pub mod series;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use homology::{solve_homological, solve_homological_with, HomologyOptions, HomologySolution, QuadraticForm};
pub use lie::{cbd_combine, flow_coordinates, lie_pullback, symplecticity_defect, CoordinateMap};
pub use schedule::{check_convergence_chain, majorant_recursion, ConstantsSchedule, Ledger};
pub use series::{ActionPolynomial, DomainBox, Key, MultiDegree, TFSeries, Term, WaveVector};
