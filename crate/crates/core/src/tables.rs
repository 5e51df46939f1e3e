//! Region and category tables.
//!
//! Two small TSV formats feed the region analysis:
//!
//! * region table: `region-id<TAB>region-name`, one row per region, `#`
//!   comment lines allowed — names the integer ids of a segmentation;
//! * category table: `region-name<TAB>C1|C2|C3` — assigns each region a
//!   pathology category. Category scores are fixed: C1→2, C2→1, C3→0.
//!   Looking up a region absent from the table resolves to C3 with a flag
//!   so reports can call out unmapped regions.
//!
//! A default category table covering the standard FastSurfer region
//! vocabulary ships with the crate (`CategoryTable::default_table`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nifti;
use crate::volume::LabelMap;

/// Pathology category of a brain region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    C1,
    C2,
    C3,
}

impl Category {
    /// Fixed disease-focus score: C1→2, C2→1, C3→0.
    pub fn score(self) -> u32 {
        match self {
            Category::C1 => 2,
            Category::C2 => 1,
            Category::C3 => 0,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::C1 => write!(f, "C1"),
            Category::C2 => write!(f, "C2"),
            Category::C3 => write!(f, "C3"),
        }
    }
}

impl FromStr for Category {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "C1" => Ok(Category::C1),
            "C2" => Ok(Category::C2),
            "C3" => Ok(Category::C3),
            _ => Err(()),
        }
    }
}

const DEFAULT_CATEGORIES_TSV: &str = include_str!("../assets/default_categories.tsv");

/// Map from region name to pathology category.
#[derive(Debug, Clone)]
pub struct CategoryTable {
    entries: BTreeMap<String, Category>,
}

impl CategoryTable {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, Category)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (name, cat) in entries {
            if map.insert(name.clone(), cat).is_some() {
                return Err(Error::DuplicateRegion(name));
            }
        }
        Ok(CategoryTable { entries: map })
    }

    /// Parse the TSV format from a string; line numbers are 1-based.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let name = fields.next().unwrap_or("").trim();
            let token = fields.next().map(str::trim).ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected region-name<TAB>category".to_string(),
            })?;
            if name.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty region name".to_string(),
                });
            }
            let category = token
                .parse::<Category>()
                .map_err(|_| Error::UnknownCategoryToken {
                    line: line_no,
                    token: token.to_string(),
                })?;
            if map.insert(name.to_string(), category).is_some() {
                return Err(Error::DuplicateRegion(name.to_string()));
            }
        }
        Ok(CategoryTable { entries: map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The table shipped with the crate.
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_CATEGORIES_TSV).expect("bundled category table parses")
    }

    /// Raw TSV text of the shipped default table.
    pub fn default_table_tsv() -> &'static str {
        DEFAULT_CATEGORIES_TSV
    }

    /// Category for a region; `known` is false when the region is absent
    /// from the table and fell back to C3.
    pub fn lookup(&self, region: &str) -> CategoryLookup {
        match self.entries.get(region) {
            Some(&category) => CategoryLookup {
                category,
                known: true,
            },
            None => CategoryLookup {
                category: Category::C3,
                known: false,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Category)> {
        self.entries.iter().map(|(n, c)| (n.as_str(), *c))
    }
}

/// Result of a category lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CategoryLookup {
    pub category: Category,
    pub known: bool,
}

/// Parse a region table (`region-id<TAB>region-name`) from a string.
pub fn parse_region_table(text: &str) -> Result<Vec<(u32, String)>> {
    let mut out = Vec::new();
    let mut seen_ids = BTreeMap::new();
    let mut seen_names = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id_text = fields.next().unwrap_or("").trim();
        let name = fields.next().map(str::trim).ok_or_else(|| Error::Parse {
            line: line_no,
            message: "expected region-id<TAB>region-name".to_string(),
        })?;
        let id: u32 = id_text.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad region id {id_text:?}"),
        })?;
        if id == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "region id 0 is reserved for background".to_string(),
            });
        }
        if name.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty region name".to_string(),
            });
        }
        if seen_ids.insert(id, line_no).is_some() {
            return Err(Error::DuplicateRegion(format!("region id {id}")));
        }
        if seen_names.insert(name.to_string(), line_no).is_some() {
            return Err(Error::DuplicateRegion(name.to_string()));
        }
        out.push((id, name.to_string()));
    }
    Ok(out)
}

/// Load a region table from a TSV file.
pub fn load_region_table(path: impl AsRef<Path>) -> Result<Vec<(u32, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_region_table(&text)
}

/// Serialize a region table to the TSV format.
pub fn region_table_to_tsv(regions: impl IntoIterator<Item = (u32, String)>) -> String {
    let mut out = String::from("# region-id\tregion-name\n");
    for (id, name) in regions {
        out.push_str(&format!("{id}\t{name}\n"));
    }
    out
}

/// Load a label map: a NIfTI label volume plus its region table.
pub fn load_label_map(
    volume_path: impl AsRef<Path>,
    table_path: impl AsRef<Path>,
) -> Result<LabelMap> {
    let grid = nifti::read_volume(volume_path)?;
    let regions = load_region_table(table_path)?;
    LabelMap::new(grid, regions)
}
