//! Edge-weighted online bipartite matching with a learned scoring policy
//! safeguarded by robust switching to an expert algorithm.

pub mod error;
pub mod experts;
pub mod harness;
pub mod instance;
pub mod ledger;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod switching;

pub use error::{Error, Result};
pub use experts::ExpertKind;
pub use instance::{GeneratorConfig, ProblemInstance, WeightCap};
pub use ledger::{Decision, MatchLedger, Setting};
pub use switching::{run_episode, RunTrace, SwitchConfig};
