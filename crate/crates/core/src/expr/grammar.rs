use std::path::Path;

use super::vocab::{Lexicon, WordBags};
use crate::catalog::CategoryTables;
use crate::error::Result;

/// Vocabulary shared by the generator and the parser.
#[derive(Clone, Debug)]
pub struct Grammar {
    tables: CategoryTables,
    bags: WordBags,
    lexicon: Lexicon,
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar::new(CategoryTables::default(), WordBags::default()).expect("embedded vocabulary is consistent")
    }
}

impl Grammar {
    pub fn new(tables: CategoryTables, bags: WordBags) -> Result<Self> {
        let lexicon = Lexicon::new(&tables, &bags)?;
        Ok(Grammar { tables, bags, lexicon })
    }

    /// Embedded defaults with the given overrides.
    pub fn load(tables: Option<&Path>, bags: Option<&Path>) -> Result<Self> {
        let tables = match tables {
            Some(p) => CategoryTables::load(p)?,
            None => CategoryTables::default(),
        };
        let bags = match bags {
            Some(p) => WordBags::load(p)?,
            None => WordBags::default(),
        };
        Grammar::new(tables, bags)
    }

    pub fn tables(&self) -> &CategoryTables {
        &self.tables
    }

    pub fn bags(&self) -> &WordBags {
        &self.bags
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}
