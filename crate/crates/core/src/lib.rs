//! # herdsim
//!
//! A laboratory for sequential social learning. Agents receive bounded
//! binary signals about a hidden binary state and act one after another,
//! seeing only their predecessors' actions. The crate implements:
//!
//! * the deterministic tree-reveal protocol ([`tree`]), in which one agent
//!   per dyadic level plays her signal and the revealed signals themselves
//!   pick the next revealer;
//! * two baselines ([`baseline`]): a randomized scheme where agent `i`
//!   reveals with probability `1/i`, and rational Bayesian herding;
//! * exact oracles ([`exact`]): closed forms for the tree protocol, brute
//!   force over all signal vectors, and a public-belief chain for herding;
//! * a seeded parallel Monte Carlo engine ([`montecarlo`]);
//! * the reveal, vote-error and correctness bounds plus a verifier
//!   ([`bounds`]);
//! * a batch command-line front end ([`cli`]) with CSV/JSON output
//!   ([`report`]).
//!
//! See the `examples/` directory for one runnable program per capability.
//!
//! ```
//! use herdsim::{exact, SignalParams, StateOfNature};
//!
//! let params = SignalParams::new(0.4, 0.6).unwrap();
//! let early = exact::tree_correct_prob(1 << 16, &params, StateOfNature::One).unwrap();
//! let late = exact::tree_correct_prob(1 << 64, &params, StateOfNature::One).unwrap();
//! assert!(early < late && late > 0.94);
//! ```

pub mod baseline;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod protocol;
pub mod report;
pub mod signal;
pub mod tree;

pub use error::{Error, Result};
pub use protocol::{DeterministicProtocol, Protocol, ProtocolKind, Step, Trace};
pub use signal::{DerivedParams, SeededRng, SignalParams, StateOfNature};
