pub mod curves;
pub mod elliptic;
pub mod kz;
pub mod mzv;
pub mod ncalg;
pub mod numeric;
pub mod periodring;
pub mod periods;

pub use curves::{Branch, CurveError, GraphMove, MultiSeries, ResidueAssignment, StableGraph};
pub use elliptic::{EllipticError, EllipticTable, QSeriesPoly};
pub use kz::{Endpoint, KzConnection, KzError, TangentialPoint};
pub use ncalg::{Alphabet, CoeffJson, Coefficient, NCSeries, NcError, SeriesDoc, Word};
pub use numeric::BigComplex;
pub use periodring::{Composition, EllipticSymbol, LogSymbol, PeriodElem, PeriodError, PeriodMonomial};
pub use periods::{Move, PathSpec, PeriodAssignment, PeriodSeries, PeriodsError};
