use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A PHI type name as it appears in labels: one of the eleven fine types or
/// one of the five coarse categories.
///
/// `ID` is both a fine type and a coarse category name, so it has a single
/// variant ([`PhiType::Id`]) that plays both roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhiType {
    Organization,
    Hospital,
    Location,
    Patient,
    Doctor,
    #[serde(rename = "ID")]
    Id,
    Username,
    Zip,
    Date,
    Phone,
    MedicalRecord,
    #[serde(rename = "NAME")]
    CoarseName,
    #[serde(rename = "LOCATION")]
    CoarseLocation,
    #[serde(rename = "DATE")]
    CoarseDate,
    #[serde(rename = "CONTACT")]
    CoarseContact,
}

/// The five coarse PHI categories kept after dataset preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "NAME")]
    Name,
    #[serde(rename = "LOCATION")]
    Location,
    #[serde(rename = "DATE")]
    Date,
    #[serde(rename = "ID")]
    Id,
    #[serde(rename = "CONTACT")]
    Contact,
}

pub const FINE_TYPES: [PhiType; 11] = [
    PhiType::Organization,
    PhiType::Hospital,
    PhiType::Location,
    PhiType::Patient,
    PhiType::Doctor,
    PhiType::Id,
    PhiType::Username,
    PhiType::Zip,
    PhiType::Date,
    PhiType::Phone,
    PhiType::MedicalRecord,
];

/// Fine types whose candidate lists are produced by pattern generators rather
/// than loaded from curated files.
pub const GENERATOR_BACKED: [PhiType; 6] = [
    PhiType::Id,
    PhiType::Username,
    PhiType::Zip,
    PhiType::Date,
    PhiType::Phone,
    PhiType::MedicalRecord,
];

pub const CATEGORIES: [Category; 5] = [
    Category::Name,
    Category::Location,
    Category::Date,
    Category::Id,
    Category::Contact,
];

impl PhiType {
    pub fn name(self) -> &'static str {
        match self {
            PhiType::Organization => "Organization",
            PhiType::Hospital => "Hospital",
            PhiType::Location => "Location",
            PhiType::Patient => "Patient",
            PhiType::Doctor => "Doctor",
            PhiType::Id => "ID",
            PhiType::Username => "Username",
            PhiType::Zip => "Zip",
            PhiType::Date => "Date",
            PhiType::Phone => "Phone",
            PhiType::MedicalRecord => "MedicalRecord",
            PhiType::CoarseName => "NAME",
            PhiType::CoarseLocation => "LOCATION",
            PhiType::CoarseDate => "DATE",
            PhiType::CoarseContact => "CONTACT",
        }
    }

    /// True for the eleven fine types (including the shared `ID`).
    pub fn is_fine(self) -> bool {
        !matches!(
            self,
            PhiType::CoarseName | PhiType::CoarseLocation | PhiType::CoarseDate | PhiType::CoarseContact
        )
    }

    /// True for the five category names (including the shared `ID`).
    pub fn is_coarse(self) -> bool {
        !self.is_fine() || self == PhiType::Id
    }

    pub fn is_generator_backed(self) -> bool {
        GENERATOR_BACKED.contains(&self)
    }

    pub fn category(self) -> Category {
        match self {
            PhiType::Patient | PhiType::Doctor | PhiType::Username | PhiType::CoarseName => Category::Name,
            PhiType::Hospital | PhiType::Location | PhiType::Zip | PhiType::Organization | PhiType::CoarseLocation => {
                Category::Location
            }
            PhiType::Date | PhiType::CoarseDate => Category::Date,
            PhiType::Id | PhiType::MedicalRecord => Category::Id,
            PhiType::Phone | PhiType::CoarseContact => Category::Contact,
        }
    }

    /// The coarse label this type maps to.
    pub fn coarse(self) -> PhiType {
        self.category().phi_type()
    }
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Name => "NAME",
            Category::Location => "LOCATION",
            Category::Date => "DATE",
            Category::Id => "ID",
            Category::Contact => "CONTACT",
        }
    }

    pub fn phi_type(self) -> PhiType {
        match self {
            Category::Name => PhiType::CoarseName,
            Category::Location => PhiType::CoarseLocation,
            Category::Date => PhiType::CoarseDate,
            Category::Id => PhiType::Id,
            Category::Contact => PhiType::CoarseContact,
        }
    }

    /// Fine types that merge into this category.
    pub fn members(self) -> impl Iterator<Item = PhiType> {
        FINE_TYPES.into_iter().filter(move |t| t.category() == self)
    }
}

impl fmt::Display for PhiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhiType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FINE_TYPES
            .iter()
            .chain(&[
                PhiType::CoarseName,
                PhiType::CoarseLocation,
                PhiType::CoarseDate,
                PhiType::CoarseContact,
            ])
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownPhiType(s.to_string()))
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CATEGORIES
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownPhiType(s.to_string()))
    }
}

/// The fixed fine-to-coarse PHI taxonomy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhiTaxonomy;

impl PhiTaxonomy {
    pub fn fine_types(&self) -> &'static [PhiType] {
        &FINE_TYPES
    }

    pub fn generator_backed(&self) -> &'static [PhiType] {
        &GENERATOR_BACKED
    }

    pub fn coarse_of(&self, fine: PhiType) -> Category {
        fine.category()
    }

    pub fn contains(&self, name: &str) -> bool {
        name.parse::<PhiType>().is_ok()
    }
}
