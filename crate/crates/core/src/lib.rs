//! Simulator and experiment harness for oblivious dynamic data structures in
//! the cell-probe model, centered on approximate near-neighbor search over the
//! Hamming cube.
//!
//! * [`machine`]: the server/client cell-probe machine and the adversary's trace.
//! * [`ann`]: points, distances, the brute-force ANN oracle and cube neighborhoods.
//! * [`structures`]: linear-scan and bucketed structures, and the logarithmic
//!   dynamization that keeps an oblivious static structure oblivious.
//! * [`hard_dist`]: subcube families, epoch plans and update scripts.
//! * [`adversary`]: epoch tagging, per-epoch probe counts, the threshold
//!   distinguisher and total variation distance.
//! * [`analysis`]: reverse Pinsker checks, cell sampling, resolved queries and
//!   encoding-length arithmetic.
//! * [`experiments`]: configurable experiment runners behind the CLI.

pub mod adversary;
pub mod analysis;
pub mod ann;
pub mod experiments;
pub mod hard_dist;
pub mod machine;
pub mod seeding;
pub mod structures;
