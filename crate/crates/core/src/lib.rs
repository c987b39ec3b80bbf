//! Lorenz-gauge Yang-Mills in 2+1 dimensions: exact plane-wave calculus,
//! pseudospectral evolution on the torus, and the pointwise estimates behind
//! the well-posedness argument.

pub mod algebra;
pub mod error;
pub mod estimates;
pub mod evolve;
pub mod field;
pub mod nullforms;
pub mod planewave;
pub mod spectral;
pub mod ym;

pub use algebra::{Algebra, AlgebraKind, AlgebraSpec, LieElement};
pub use error::{Result, YmError};
pub use estimates::{BoundReport, SampleConfig};
pub use evolve::{EvolveConfig, HalfWaveState, PicardConfig, Stepper};
pub use field::{Field, FieldState, Multiplier, ProductKind, SpacetimePair, Symbol};
pub use planewave::PlaneWaveField;
pub use spectral::{GridField, SpectralContext, TorusGrid};
