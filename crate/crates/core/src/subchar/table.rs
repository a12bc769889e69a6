use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use super::{SubcharLevel, TableError};
use crate::symbols::{is_reserved, is_single_grapheme, WORD_BOUNDARY};

/// Decomposition of one character at both levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharEntry {
    pub character: String,
    pub ideographs: Vec<String>,
    pub strokes: Vec<String>,
    pub ideo_tag: u32,
    pub stroke_tag: u32,
}

impl CharEntry {
    pub fn units(&self, level: SubcharLevel) -> &[String] {
        match level {
            SubcharLevel::Ideograph => &self.ideographs,
            SubcharLevel::Stroke => &self.strokes,
        }
    }

    pub fn tag(&self, level: SubcharLevel) -> u32 {
        match level {
            SubcharLevel::Ideograph => self.ideo_tag,
            SubcharLevel::Stroke => self.stroke_tag,
        }
    }
}

/// An immutable, injective character decomposition table.
#[derive(Debug, Clone)]
pub struct DecompositionTable {
    entries: BTreeMap<String, CharEntry>,
    reverse_ideo: HashMap<(Vec<String>, u32), String>,
    reverse_stroke: HashMap<(Vec<String>, u32), String>,
    ideo_inventory: BTreeSet<String>,
    stroke_inventory: BTreeSet<String>,
}

impl DecompositionTable {
    /// Parses the tab-separated table format.
    ///
    /// Each non-comment line is `character<TAB>ideographs<TAB>strokes`, with
    /// space-separated unit symbols. Tags are derived here: characters that
    /// share a unit sequence are numbered from 0 in code-point order.
    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut raw: BTreeMap<String, (Vec<String>, Vec<String>)> = BTreeMap::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(TableError::Malformed {
                    line: line_no,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let character = fields[0].trim();
            if !is_single_grapheme(character) || is_reserved(character) {
                return Err(TableError::Malformed {
                    line: line_no,
                    reason: format!("`{character}` is not a single usable grapheme"),
                });
            }
            let ideographs = parse_units(fields[1], line_no, "ideograph")?;
            let strokes = parse_units(fields[2], line_no, "stroke")?;
            if raw.contains_key(character) {
                return Err(TableError::Duplicate { line: line_no, character: character.to_string() });
            }
            raw.insert(character.to_string(), (ideographs, strokes));
        }
        Ok(Self::build(raw))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|e| TableError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&source)
    }

    fn build(raw: BTreeMap<String, (Vec<String>, Vec<String>)>) -> Self {
        // BTreeMap iteration is code-point order, which fixes the tags.
        let mut ideo_seen: HashMap<Vec<String>, u32> = HashMap::new();
        let mut stroke_seen: HashMap<Vec<String>, u32> = HashMap::new();
        let mut table = DecompositionTable {
            entries: BTreeMap::new(),
            reverse_ideo: HashMap::new(),
            reverse_stroke: HashMap::new(),
            ideo_inventory: BTreeSet::new(),
            stroke_inventory: BTreeSet::new(),
        };
        for (character, (ideographs, strokes)) in raw {
            let ideo_tag = next_tag(&mut ideo_seen, &ideographs);
            let stroke_tag = next_tag(&mut stroke_seen, &strokes);
            table.ideo_inventory.extend(ideographs.iter().cloned());
            table.stroke_inventory.extend(strokes.iter().cloned());
            table.reverse_ideo.insert((ideographs.clone(), ideo_tag), character.clone());
            table.reverse_stroke.insert((strokes.clone(), stroke_tag), character.clone());
            table.entries.insert(character.clone(), CharEntry { character, ideographs, strokes, ideo_tag, stroke_tag });
        }
        table
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, character: &str) -> Option<&CharEntry> {
        self.entries.get(character)
    }

    pub fn contains(&self, character: &str) -> bool {
        self.entries.contains_key(character)
    }

    /// Entries in code-point order.
    pub fn entries(&self) -> impl Iterator<Item = &CharEntry> {
        self.entries.values()
    }

    /// Character with the given unit sequence and tag.
    pub fn lookup(&self, level: SubcharLevel, units: &[String], tag: u32) -> Option<&str> {
        let reverse = match level {
            SubcharLevel::Ideograph => &self.reverse_ideo,
            SubcharLevel::Stroke => &self.reverse_stroke,
        };
        // HashMap<(Vec, u32)> cannot be probed with a borrowed slice.
        reverse.get(&(units.to_vec(), tag)).map(String::as_str)
    }

    /// Unit symbols used at `level`.
    pub fn inventory(&self, level: SubcharLevel) -> &BTreeSet<String> {
        match level {
            SubcharLevel::Ideograph => &self.ideo_inventory,
            SubcharLevel::Stroke => &self.stroke_inventory,
        }
    }

    /// All ideograph and stroke symbols.
    pub fn unit_inventory(&self) -> BTreeSet<String> {
        self.ideo_inventory.union(&self.stroke_inventory).cloned().collect()
    }

    /// Largest disambiguation tag at `level`.
    pub fn max_tag(&self, level: SubcharLevel) -> u32 {
        self.entries.values().map(|e| e.tag(level)).max().unwrap_or(0)
    }
}

fn next_tag(seen: &mut HashMap<Vec<String>, u32>, units: &[String]) -> u32 {
    let slot = seen.entry(units.to_vec()).or_insert(0);
    let tag = *slot;
    *slot += 1;
    tag
}

fn parse_units(field: &str, line: usize, name: &'static str) -> Result<Vec<String>, TableError> {
    let units: Vec<String> = field.split_whitespace().map(str::to_string).collect();
    if units.is_empty() {
        return Err(TableError::EmptySequence { line, field: name });
    }
    if let Some(bad) = units.iter().find(|u| !is_single_grapheme(u) || is_reserved(u) || u.as_str() == WORD_BOUNDARY) {
        return Err(TableError::Malformed {
            line,
            reason: format!("{name} symbol `{bad}` must be a single non-reserved grapheme"),
        });
    }
    Ok(units)
}
