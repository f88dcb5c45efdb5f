//! Linearization series of germs with a Siegel fixed point, their majorants
//! and the divergence witness.

pub mod certify;
pub mod estimators;
pub mod germ;
pub mod htilde;
pub mod majorant;
pub mod profile;
pub mod series;

pub use germ::{CoeffSource, Germ, NormClass};
pub use majorant::{majorant_coeffs, majorant_growth, MajorantGrowth};
pub use series::{linearize_coeffs, verify_conjugacy, ConjugacyReport, Path};
pub use htilde::{divergence_witness, htilde_coeffs, DivergenceWitness, HTilde, HTildeMode};
pub use certify::{certify_majorant_bound, certify_weight_bound, BoundCertificate, WeightCertificate};
pub use estimators::{default_window, euler_derivative, euler_inverse, gevrey_order_estimate, radius_estimate};
pub use profile::{build_profile, ProfileOptions, SeriesProfile};
