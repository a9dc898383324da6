use std::fmt;

use crate::error::{Error, Result};

/// Incident label of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Negative,
    Positive,
    Unknown,
}

impl Label {
    /// Class index (0 or 1) for known labels.
    pub fn class(self) -> Option<usize> {
        match self {
            Label::Negative => Some(0),
            Label::Positive => Some(1),
            Label::Unknown => None,
        }
    }

    pub fn from_class(class: u8) -> Option<Label> {
        match class {
            0 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// Swaps positive and negative; unknown stays unknown.
    pub fn complement(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
            Label::Unknown => Label::Unknown,
        }
    }

    pub(crate) fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "0" => Some(Label::Negative),
            "1" => Some(Label::Positive),
            "?" => Some(Label::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Negative => "0",
            Label::Positive => "1",
            Label::Unknown => "?",
        })
    }
}

/// Per-node labels, one entry per graph node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector(Vec<Label>);

impl LabelVector {
    pub fn new(labels: Vec<Label>) -> Self {
        LabelVector(labels)
    }

    /// Builds a fully known vector from 0/1 classes. Panics on other values.
    pub fn from_classes(classes: &[u8]) -> Self {
        LabelVector(
            classes
                .iter()
                .map(|&c| Label::from_class(c).expect("class must be 0 or 1"))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Label {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, label: Label) {
        self.0[i] = label;
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.iter().copied()
    }

    pub fn count(&self, label: Label) -> usize {
        self.0.iter().filter(|&&l| l == label).count()
    }

    /// Fails with the first unknown node id.
    pub fn require_known(&self) -> Result<()> {
        match self.0.iter().position(|&l| l == Label::Unknown) {
            Some(i) => Err(Error::UnknownLabel(i)),
            None => Ok(()),
        }
    }

    pub fn complement(&self) -> LabelVector {
        LabelVector(self.0.iter().map(|l| l.complement()).collect())
    }

    pub(crate) fn ensure_len(&self, num_nodes: usize) -> Result<()> {
        if self.len() != num_nodes {
            return Err(Error::LengthMismatch(format!(
                "{} labels for {num_nodes} nodes",
                self.len()
            )));
        }
        Ok(())
    }
}

impl FromIterator<Label> for LabelVector {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        LabelVector(iter.into_iter().collect())
    }
}
