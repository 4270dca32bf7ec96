use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Bosonic,
    Qubit,
    Qutrit,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Bosonic => "bosonic",
            ModeKind::Qubit => "qubit",
            ModeKind::Qutrit => "qutrit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub label: String,
    pub dim: usize,
    pub kind: ModeKind,
}

/// Ordered tensor product of labeled modes. The first mode is the most
/// significant index of the flattened basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    modes: Vec<Mode>,
}

pub type SpaceRef = Arc<HilbertSpace>;

impl HilbertSpace {
    pub fn new(modes: Vec<Mode>) -> Result<SpaceRef> {
        if modes.is_empty() {
            return Err(CatError::InvalidParameter("a Hilbert space needs at least one mode".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].iter().any(|o| o.label == m.label) {
                return Err(CatError::DuplicateMode(m.label.clone()));
            }
            let bad = match m.kind {
                ModeKind::Bosonic if m.dim < 2 => Some("bosonic modes need at least 2 levels"),
                ModeKind::Qubit if m.dim != 2 => Some("qubits have exactly 2 levels"),
                ModeKind::Qutrit if m.dim != 3 => Some("qutrits have exactly 3 levels"),
                _ => None,
            };
            if let Some(reason) = bad {
                return Err(CatError::InvalidDimension { label: m.label.clone(), dim: m.dim, reason });
            }
        }
        Ok(Arc::new(Self { modes }))
    }

    /// Shorthand for a space of bosonic modes given as `(label, dim)`.
    pub fn bosonic(modes: &[(&str, usize)]) -> Result<SpaceRef> {
        Self::new(
            modes
                .iter()
                .map(|&(label, dim)| Mode { label: label.to_string(), dim, kind: ModeKind::Bosonic })
                .collect(),
        )
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.dim).product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| CatError::UnknownMode(label.to_string()))
    }

    pub fn mode(&self, label: &str) -> Result<&Mode> {
        Ok(&self.modes[self.index_of(label)?])
    }

    pub fn has_mode(&self, label: &str) -> bool {
        self.modes.iter().any(|m| m.label == label)
    }

    pub(crate) fn require_kind(&self, label: &str, kinds: &[ModeKind]) -> Result<&Mode> {
        let m = self.mode(label)?;
        if !kinds.contains(&m.kind) {
            let expected = if kinds.len() == 1 { kinds[0].name() } else { "an ancilla" };
            return Err(CatError::WrongModeKind { label: label.to_string(), expected, found: m.kind.name() });
        }
        Ok(m)
    }

    /// Dimensions of the modes before and after `idx`.
    pub(crate) fn split_dims(&self, idx: usize) -> (usize, usize) {
        let left = self.modes[..idx].iter().map(|m| m.dim).product();
        let right = self.modes[idx + 1..].iter().map(|m| m.dim).product();
        (left, right)
    }

    /// Per-mode occupation index of a flattened basis index.
    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes.len()];
        for (k, m) in self.modes.iter().enumerate().rev() {
            out[k] = index % m.dim;
            index /= m.dim;
        }
        out
    }

    pub fn flatten(&self, levels: &[usize]) -> usize {
        levels.iter().zip(&self.modes).fold(0, |acc, (&n, m)| acc * m.dim + n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(HilbertSpace::bosonic(&[("a", 1)]).is_err());
        let q = Mode { label: "q".into(), dim: 3, kind: ModeKind::Qubit };
        assert!(HilbertSpace::new(vec![q]).is_err());
        assert!(HilbertSpace::bosonic(&[("a", 4), ("a", 4)]).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let s = HilbertSpace::bosonic(&[("a", 3), ("b", 4)]).unwrap();
        assert_eq!(s.dim(), 12);
        for i in 0..12 {
            assert_eq!(s.flatten(&s.unflatten(i)), i);
        }
        assert_eq!(s.unflatten(5), vec![1, 1]);
    }
}
