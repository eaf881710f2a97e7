//! The 16-entry symbol class map shared by the generator, detectors and
//! the grid reconstruction.

use serde::Serialize;

pub type ClassId = u8;

pub const NUM_CLASSES: usize = 16;

pub const PLUS: ClassId = 0;
pub const MINUS: ClassId = 1;
pub const EQUALS: ClassId = 12;
pub const LEFT_BRACKET: ClassId = 13;
pub const RIGHT_BRACKET: ClassId = 14;
pub const TIMES: ClassId = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassInfo {
    pub id: ClassId,
    /// Display glyph.
    pub glyph: &'static str,
    /// Folder name used by the raw handwritten-symbol dataset.
    pub folder: &'static str,
}

pub const CLASS_MAP: [ClassInfo; NUM_CLASSES] = [
    ClassInfo { id: 0, glyph: "+", folder: "+" },
    ClassInfo { id: 1, glyph: "−", folder: "-" },
    ClassInfo { id: 2, glyph: "0", folder: "0" },
    ClassInfo { id: 3, glyph: "1", folder: "1" },
    ClassInfo { id: 4, glyph: "2", folder: "2" },
    ClassInfo { id: 5, glyph: "3", folder: "3" },
    ClassInfo { id: 6, glyph: "4", folder: "4" },
    ClassInfo { id: 7, glyph: "5", folder: "5" },
    ClassInfo { id: 8, glyph: "6", folder: "6" },
    ClassInfo { id: 9, glyph: "7", folder: "7" },
    ClassInfo { id: 10, glyph: "8", folder: "8" },
    ClassInfo { id: 11, glyph: "9", folder: "9" },
    ClassInfo { id: 12, glyph: "=", folder: "=" },
    ClassInfo { id: 13, glyph: "[", folder: "[" },
    ClassInfo { id: 14, glyph: "]", folder: "]" },
    ClassInfo { id: 15, glyph: "×", folder: "times" },
];

pub fn glyph(id: ClassId) -> Option<&'static str> {
    CLASS_MAP.get(id as usize).map(|c| c.glyph)
}

/// Class id of a decimal digit.
pub fn digit_class(d: u8) -> ClassId {
    assert!(d < 10, "not a digit: {d}");
    d + 2
}

/// Decimal digit encoded by a class id, if it is a digit class.
pub fn class_digit(id: ClassId) -> Option<u8> {
    (2..=11).contains(&id).then(|| id - 2)
}

pub fn is_bracket(id: ClassId) -> bool {
    id == LEFT_BRACKET || id == RIGHT_BRACKET
}

/// Classes that never contribute to matrix cell content.
pub fn is_structural(id: ClassId) -> bool {
    is_bracket(id) || id == EQUALS || id == TIMES
}

/// Resolve an atlas folder name (raw dataset naming: `+`, `-`, `0`..`9`,
/// `=`, `[`, `]`, `times`).
pub fn class_for_folder(name: &str) -> Option<ClassId> {
    CLASS_MAP.iter().find(|c| c.folder == name).map(|c| c.id)
}
