//! Föllmer pairs on the cemetery-extended tree: quantile-killing
//! construction, Kunita-Yoeurp verification and uniqueness diagnostics.

pub mod pair;
pub mod uniqueness;
pub mod verify;

pub use pair::{
    check_freeze_state, construct_follmer, pair_from_json, pair_to_json, ExtendedOutcome, FollmerPair, KillTime,
    Target,
};
pub use uniqueness::{
    admissible_freeze_state, nonuniqueness_witness, single_state_pairs, tau_hat, total_variation, uniqueness_report,
    PairVerdict, TauHat, UniquenessReport, Witness,
};
pub use verify::{verify_ky, verify_ky_all, verify_ky_constant_times, verify_ky_many, AtomRow, KyReport, OutcomeIndex};
