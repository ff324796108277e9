//! Renormalizers, test functions, weak-form residual ledgers and the weighted-`L¹` functional.

pub mod ledger;
pub mod renormalizer;
pub mod stability;
pub mod testfn;

pub use ledger::{
    residual_original, residual_renormalized, CovariationQuadrature, LedgerBuilder, Snapshot,
    Variant, WeakFormLedger, G_TERMS, ORIGINAL_TERMS, RENORMALIZED_TERMS,
};
pub use renormalizer::{make_renormalizer, RenormKind, Renormalizer};
pub use stability::{gronwall_envelope, weighted_l1, weighted_l1_stability, StabilityReport, Weight};
pub use testfn::{bump_test_function, TestFunction};
