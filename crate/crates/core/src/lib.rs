//! Effects, observables, instruments and measurement models on finite
//! dimensional Hilbert spaces, with part-of search and reductions.
//!
//! ```
//! use qparts::{find_part_map, random, Instrument, Tolerance};
//!
//! # fn main() -> qparts::Result<()> {
//! let tol = Tolerance::new(1e-9)?;
//! let mut rng = random::rng(7);
//! let a = random::observable::<f64>(&mut rng, 2, 2);
//! let b = random::observable::<f64>(&mut rng, 2, 3);
//!
//! let ab = a.seq_prod(&b)?;
//! let cert = find_part_map(&a, &ab, tol)?.unwrap();
//! assert!(cert.replay(tol)? <= tol.scaled(2));
//!
//! let luders = Instrument::luders(&ab);
//! assert!(luders.measured_observable().approx_eq(&ab, tol)?);
//! # Ok(())
//! # }
//! ```

pub mod effects;
pub mod error;
pub mod instruments;
pub mod io;
pub mod labels;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod parts;
pub mod random;
pub mod scalar;
pub mod surjection;
pub mod suite;

pub use effects::{DensityState, Effect, StateKind};
pub use error::{Error, Result};
pub use instruments::{Channel, Instrument, QuantumOperation};
pub use io::{emit_report, parse_spec, serialize_spec, Check, EntitySpec, Report, SpecError, Status};
pub use labels::OutcomeLabel;
pub use linalg::{CMatrix, CVector, DimPair, Factor, Tolerance};
pub use models::{MeasurementModel, SwapOperator};
pub use observables::{Observable, StochasticMatrix};
pub use parts::{
    coexist, enumerate_parts, equivalent, find_part_map, find_part_map_instr, part_of, CoexistenceWitness, Entity,
    PartCertificate,
};
pub use scalar::Real;
pub use suite::run_theorem_suite;
pub use surjection::Surjection;

pub type CMatrix64 = CMatrix<f64>;
pub type Tolerance64 = Tolerance<f64>;
pub type Effect64 = Effect<f64>;
pub type DensityState64 = DensityState<f64>;
pub type Observable64 = Observable<f64>;
pub type Instrument64 = Instrument<f64>;
pub type QuantumOperation64 = QuantumOperation<f64>;
pub type MeasurementModel64 = MeasurementModel<f64>;
pub type Entity64 = Entity<f64>;
