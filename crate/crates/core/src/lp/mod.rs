//! Linear programming: a dense simplex core, the probing relaxation solved by
//! cut generation, and dual certificates for the unweighted LP pair.

pub mod dual;
pub mod probing;
pub mod simplex;

pub use dual::{check_dual, DualCertificate, DualCheck};
pub use probing::{
    check_claim_lp_opt, solve_probing_lp, solve_probing_lp_enumerated, Cut, CutSide,
    FractionalSolution,
};
