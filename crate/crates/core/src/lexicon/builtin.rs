//! Bundled candidate lists for the name-like PHI types.
//!
//! The entries are fictional, assembled from common given names and surnames
//! with place and institution suffixes. They share no name tokens with the
//! synthetic site profiles.

use super::Lexicon;
use crate::corpus::PhiType;

pub const BUILTIN_LIST_TYPES: [PhiType; 5] = [
    PhiType::Organization,
    PhiType::Hospital,
    PhiType::Location,
    PhiType::Patient,
    PhiType::Doctor,
];

pub fn builtin_list(phi_type: PhiType) -> Option<Lexicon> {
    let text = match phi_type {
        PhiType::Organization => include_str!("../../data/lexicons/organization.txt"),
        PhiType::Hospital => include_str!("../../data/lexicons/hospital.txt"),
        PhiType::Location => include_str!("../../data/lexicons/location.txt"),
        PhiType::Patient => include_str!("../../data/lexicons/patient.txt"),
        PhiType::Doctor => include_str!("../../data/lexicons/doctor.txt"),
        _ => return None,
    };
    Lexicon::new(phi_type, text.lines()).ok()
}
