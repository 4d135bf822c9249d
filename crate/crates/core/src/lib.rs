//! Linear time-bound verification for one-tape nondeterministic Turing machines.
//!
//! The central question this crate answers: does a given one-tape NTM make at
//! most `C*n + D` steps on every computation on every input of length `n`?
//! The `decide` module reduces the question, via crossing-sequence analysis,
//! to finitely many checks on short inputs and short tape parts, and every
//! VIOLATES verdict carries a witness that replays by direct simulation.
//!
//! Module map:
//! - [`machine`]: machine definition, validation, the text format, composition
//! - [`codec`]: binary codes of machines and of compositions
//! - [`sim`]: full-input simulation, crossing sequences, the brute-force oracle
//! - [`parts`]: computations on a tape part with a prescribed boundary behavior
//! - [`decide`]: the decision procedure, crossing-sequence sets, violation search
//! - [`gadgets`]: hardness gadget machines (divisibility passes, step counters)
//!
//! ```
//! use tmtime::decide::{decide, DecideOptions, Verdict};
//!
//! let sweep = tmtime::machine::parse_machine(
//!     "ntm v1\n\
//!      input 0 1\n\
//!      tape 0 1 _\n\
//!      blank _\n\
//!      start s\naccept a\nreject r\n\
//!      s 0 -> s 0 R\n\
//!      s 1 -> s 1 R\n\
//!      s _ -> a _ L\n",
//! )?;
//! let opts = DecideOptions {
//!     bound_override: Some((4, 4)),
//!     ..DecideOptions::default()
//! };
//! // one rightward pass takes n+1 steps, within n+1
//! assert_eq!(decide(&sweep, 1, 1, &opts)?.verdict, Verdict::Runs);
//! // and outside n+0
//! let report = decide(&sweep, 1, 0, &opts)?;
//! assert_eq!(report.verdict, Verdict::Violates);
//! assert!(report.witness.is_some());
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod codec;
pub mod decide;
pub mod gadgets;
pub mod json;
pub mod machine;
pub mod parts;
pub mod rng;
pub mod sim;

pub use machine::{Direction, MachineError, OneTapeNTM, RawMachine, State, Symbol, TransitionRule};
pub use sim::{Computation, Configuration, CrossingSequence, RunViolation};
