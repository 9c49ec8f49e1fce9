//! The `.gaf` source language: lexing, parsing, canonical printing and
//! linking into a [`LinkedModel`](crate::link::LinkedModel).

mod format;
pub mod lexer;
mod parser;

pub use format::{format_condition, format_literal, format_unit};
pub use parser::parse_unit;

use crate::model::{SoftwareConfiguration, SoftwareDatabase};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Database(SoftwareDatabase),
    Configuration(SoftwareConfiguration),
}

/// One parsed source file.
#[derive(Clone, Debug)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
    /// `//` comment lines before the first item, kept verbatim by the printer.
    pub header: Vec<String>,
    pub items: Vec<Item>,
}

impl SourceUnit {
    pub fn from_items(path: &str, items: Vec<Item>) -> Self {
        SourceUnit {
            path: path.to_string(),
            text: String::new(),
            header: Vec::new(),
            items,
        }
    }

    pub fn databases(&self) -> impl Iterator<Item = &SoftwareDatabase> {
        self.items.iter().filter_map(|i| match i {
            Item::Database(d) => Some(d),
            _ => None,
        })
    }

    pub fn configurations(&self) -> impl Iterator<Item = &SoftwareConfiguration> {
        self.items.iter().filter_map(|i| match i {
            Item::Configuration(c) => Some(c),
            _ => None,
        })
    }

    /// Structural equality: same header and items, regardless of layout.
    pub fn same_structure(&self, other: &SourceUnit) -> bool {
        self.header == other.header && self.items == other.items
    }
}
