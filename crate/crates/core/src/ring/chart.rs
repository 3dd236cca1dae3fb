//! Trivialized charts `T^k x R^m`.

use super::RingError;
use std::collections::BTreeSet;

/// Coordinate names of a chart. Torus coordinates come first in every
/// coordinate index, fiber coordinates follow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub torus: Vec<String>,
    pub fiber: Vec<String>,
    /// Torus indices of the leaf directions. When there are as many leaf
    /// coordinates as fiber coordinates, fiber `a` is paired with leaf `a`.
    pub leaf_coords: Vec<usize>,
}

impl Chart {
    pub fn new(torus: Vec<String>, fiber: Vec<String>, leaf_coords: Vec<usize>) -> Result<Self, RingError> {
        let mut seen = BTreeSet::new();
        for n in torus.iter().chain(fiber.iter()) {
            if !valid_name(n) {
                return Err(RingError::InvalidChart(format!("bad coordinate name `{n}`")));
            }
            if !seen.insert(n.clone()) {
                return Err(RingError::InvalidChart(format!("duplicate coordinate `{n}`")));
            }
        }
        let mut leaf_seen = BTreeSet::new();
        for &l in &leaf_coords {
            if l >= torus.len() {
                return Err(RingError::InvalidChart(format!("leaf index {l} is not a torus coordinate")));
            }
            if !leaf_seen.insert(l) {
                return Err(RingError::InvalidChart(format!("leaf index {l} repeated")));
            }
        }
        Ok(Self { torus, fiber, leaf_coords })
    }

    /// `ph_1..ph_k`, `y_1..y_m`.
    pub fn standard(k: usize, m: usize, leaf_coords: Vec<usize>) -> Result<Self, RingError> {
        Self::new(
            (1..=k).map(|i| format!("ph_{i}")).collect(),
            (1..=m).map(|a| format!("y_{a}")).collect(),
            leaf_coords,
        )
    }

    pub fn k(&self) -> usize {
        self.torus.len()
    }

    pub fn m(&self) -> usize {
        self.fiber.len()
    }

    pub fn dim(&self) -> usize {
        self.k() + self.m()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k(), self.m())
    }

    /// Index in the combined coordinate order.
    pub fn coord_index(&self, name: &str) -> Result<usize, RingError> {
        if let Some(i) = self.torus.iter().position(|n| n == name) {
            return Ok(i);
        }
        if let Some(a) = self.fiber.iter().position(|n| n == name) {
            return Ok(self.k() + a);
        }
        Err(RingError::UnknownCoordinate(name.to_string()))
    }

    pub fn coord_name(&self, c: usize) -> &str {
        if c < self.k() {
            &self.torus[c]
        } else {
            &self.fiber[c - self.k()]
        }
    }

    /// Torus index of the leaf paired with fiber `a`, if the pairing exists.
    pub fn leaf_of_fiber(&self, a: usize) -> Option<usize> {
        if self.leaf_coords.len() == self.m() {
            self.leaf_coords.get(a).copied()
        } else {
            None
        }
    }

    pub fn has_leaf_pairing(&self) -> bool {
        self.leaf_coords.len() == self.m() && self.m() > 0
    }
}

fn valid_name(n: &str) -> bool {
    let mut chars = n.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    if n == "i" || n == "I" || n == "sin" || n == "cos" || n == "exp" {
        return false;
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
