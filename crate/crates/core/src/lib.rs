pub mod alias;
pub mod counting;
pub mod density;
pub mod downup;
pub mod error;
pub mod exact;
pub mod isotropic;
pub mod linalg;
pub mod logspace;
pub mod marginals;
pub mod rng;
pub mod subset;
pub mod suite;

pub use density::{
    DppDensity, ExplicitDensity, ForestDensity, Graph, LinearMatroidDensity, LogDensityOracle,
    QueryCounter, TiltedDensity, UniformDensity,
};
pub use alias::SamplingDistribution;
pub use counting::{count, CountEstimate};
pub use downup::DownUpChain;
pub use error::{Error, Result};
pub use exact::{DistTable, ExactTable};
pub use isotropic::{IsotropicChain, IsotropicConfig};
pub use marginals::{build_isotropy_oracle, CoolingSchedule, IsotropyOracle, PipelineConfig};
pub use subset::SubsetState;
