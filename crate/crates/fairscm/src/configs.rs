//! Shipped example models: schematic recreations of a law-school admission
//! setting, a credit-default setting, and a healthcare-needs setting.
//!
//! These are hand-built causal structures with Gaussian features, not fits
//! of any real dataset; they exist so the estimator comparison can run end
//! to end out of the box. The JSON files under `configs/` are the canonical
//! artifacts; this module embeds and parses them.

use crate::scm::StructuralModel;

pub const LAW_SCHOOL_JSON: &str = include_str!("../configs/law_school.json");
pub const CREDIT_DEFAULT_JSON: &str = include_str!("../configs/credit_default.json");
pub const HEALTHCARE_JSON: &str = include_str!("../configs/healthcare.json");

/// Law-school setting: race and sex influence GPA, LSAT, and first-year
/// average; a latent "knowledge" factor drives all three.
pub fn law_school() -> StructuralModel {
    StructuralModel::from_json(LAW_SCHOOL_JSON).expect("embedded config parses")
}

/// Credit setting: gender and a three-valued region influence income,
/// credit history, and debt ratio; a latent stability factor drives them.
pub fn credit_default() -> StructuralModel {
    StructuralModel::from_json(CREDIT_DEFAULT_JSON).expect("embedded config parses")
}

/// Healthcare setting: race influences prior cost and visit counts; a latent
/// health factor drives both and the true care need.
pub fn healthcare() -> StructuralModel {
    StructuralModel::from_json(HEALTHCARE_JSON).expect("embedded config parses")
}

/// All shipped configs with their names.
pub fn all() -> Vec<(&'static str, StructuralModel)> {
    vec![
        ("law_school", law_school()),
        ("credit_default", credit_default()),
        ("healthcare", healthcare()),
    ]
}
