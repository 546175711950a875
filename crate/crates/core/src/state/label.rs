//! Basis labels of purified states and the register layout they follow.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relations::{Dim, KeyTriple, Relation, ZVectors};

/// Which relation registers a state carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    /// One database pair (S, T) in slots 0 and 1.
    Joint,
    /// Two database pairs (S₁, T₁, S₂, T₂) in slots 0..4.
    Split,
}

/// Which key registers a state carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyLayout {
    None,
    /// K₁ and K₃ only.
    Outer,
    /// K₁, K₂, K₃.
    Full,
}

/// Register schema shared by every label of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schema {
    pub dim: Dim,
    /// Dimension of the adversary's ancilla B.
    pub b_dim: u16,
    pub layout: Layout,
    pub keys: KeyLayout,
    /// Z_L and Z_R present.
    pub z: bool,
    /// Second query register A′ present.
    pub aux: bool,
}

impl Schema {
    pub fn joint(dim: Dim) -> Self {
        Schema { dim, b_dim: 1, layout: Layout::Joint, keys: KeyLayout::None, z: false, aux: false }
    }

    pub fn split(dim: Dim) -> Self {
        Schema { layout: Layout::Split, ..Schema::joint(dim) }
    }

    pub fn with_keys(self, keys: KeyLayout) -> Self {
        Schema { keys, ..self }
    }

    pub fn with_z(self, z: bool) -> Self {
        Schema { z, ..self }
    }

    pub fn with_aux(self, aux: bool) -> Self {
        Schema { aux, ..self }
    }

    pub fn with_ancilla(self, b_dim: u16) -> Self {
        Schema { b_dim, ..self }
    }

    pub fn expect(&self, want: &Schema, what: &str) -> Result<()> {
        if self == want {
            Ok(())
        } else {
            Err(Error::SchemaMismatch(format!("{what}: expected {want:?}, got {self:?}")))
        }
    }

    /// Checks that a label has exactly the registers this schema declares.
    pub fn admits(&self, l: &Label) -> bool {
        let keys_ok = match self.keys {
            KeyLayout::None => l.keys == [None; 3],
            KeyLayout::Outer => l.keys[0].is_some() && l.keys[1].is_none() && l.keys[2].is_some(),
            KeyLayout::Full => l.keys.iter().all(Option::is_some),
        };
        let rels_ok = match self.layout {
            Layout::Joint => l.rels[2].is_empty() && l.rels[3].is_empty(),
            Layout::Split => true,
        };
        keys_ok
            && rels_ok
            && l.z.is_some() == self.z
            && l.aux.is_some() == self.aux
            && (l.b as usize) < self.b_dim as usize
            && self.dim.contains(l.a)
    }
}

/// One basis vector |a⟩_A |a′⟩_{A′} |b⟩_B |relations⟩ |z⟩ |k⟩.
///
/// Relation slots: joint layout uses (S, T) = (0, 1); split layout uses
/// (S₁, T₁, S₂, T₂) = (0, 1, 2, 3).
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub a: u8,
    pub aux: Option<u8>,
    pub b: u16,
    pub rels: [Relation; 4],
    pub z: Option<ZVectors>,
    pub keys: [Option<u8>; 3],
}

impl Label {
    pub fn joint(a: u8, s: Relation, t: Relation) -> Self {
        Label { a, rels: [s, t, Relation::empty(), Relation::empty()], ..Default::default() }
    }

    pub fn split(a: u8, s1: Relation, t1: Relation, s2: Relation, t2: Relation) -> Self {
        Label { a, rels: [s1, t1, s2, t2], ..Default::default() }
    }

    pub fn with_keys(mut self, k: KeyTriple) -> Self {
        self.keys = [Some(k.k1), Some(k.k2), Some(k.k3)];
        self
    }

    pub fn with_b(mut self, b: u16) -> Self {
        self.b = b;
        self
    }

    /// Full key triple; `None` unless all three key registers are present.
    pub fn key_triple(&self) -> Option<KeyTriple> {
        match self.keys {
            [Some(k1), Some(k2), Some(k3)] => Some(KeyTriple { k1, k2, k3 }),
            _ => None,
        }
    }

    /// Relation register pair (S, T) of slot pair `p` (0 or 1).
    pub fn pair(&self, p: usize) -> (&Relation, &Relation) {
        (&self.rels[2 * p], &self.rels[2 * p + 1])
    }

    /// Total number of recorded pairs over all relation registers.
    pub fn rel_size(&self) -> usize {
        self.rels.iter().map(Relation::len).sum()
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|a={}", self.a)?;
        if let Some(x) = self.aux {
            write!(f, " a'={x}")?;
        }
        if self.b != 0 {
            write!(f, " b={}", self.b)?;
        }
        write!(f, " {:?} {:?}", self.rels[0], self.rels[1])?;
        if !self.rels[2].is_empty() || !self.rels[3].is_empty() {
            write!(f, " {:?} {:?}", self.rels[2], self.rels[3])?;
        }
        if let Some(z) = &self.z {
            write!(f, " zL={:?} zR={:?}", z.zl.as_slice(), z.zr.as_slice())?;
        }
        if self.keys.iter().any(Option::is_some) {
            write!(f, " k={:?}", self.keys)?;
        }
        write!(f, "⟩")
    }
}
