use indexmap::{IndexMap, IndexSet};

use crate::error::{Error, Result};
use crate::labels::OutcomeLabel;

/// A surjection between finite outcome spaces, `f: Ω_B → Ω_A`.
///
/// Domain and codomain are ordered; coarse-grainings list their outcomes in
/// codomain order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surjection {
    assignment: IndexMap<OutcomeLabel, OutcomeLabel>,
    codomain: IndexSet<OutcomeLabel>,
}

impl Surjection {
    /// Builds a surjection from `(domain, image)` pairs and an explicit
    /// codomain order.
    pub fn new(
        pairs: impl IntoIterator<Item = (OutcomeLabel, OutcomeLabel)>,
        codomain: impl IntoIterator<Item = OutcomeLabel>,
    ) -> Result<Self> {
        let mut assignment = IndexMap::new();
        for (x, y) in pairs {
            if assignment.contains_key(&x) {
                return Err(Error::DuplicateLabel(x.to_string()));
            }
            assignment.insert(x, y);
        }
        let mut order = IndexSet::new();
        for y in codomain {
            if !order.insert(y.clone()) {
                return Err(Error::DuplicateLabel(y.to_string()));
            }
        }
        for y in assignment.values() {
            if !order.contains(y) {
                return Err(Error::UnknownLabel(y.to_string()));
            }
        }
        for y in &order {
            if !assignment.values().any(|v| v == y) {
                return Err(Error::NotSurjective(y.to_string()));
            }
        }
        Ok(Self {
            assignment,
            codomain: order,
        })
    }

    /// Surjection onto the image of `f`, ordered by first occurrence.
    pub fn from_fn<'a>(
        domain: impl IntoIterator<Item = &'a OutcomeLabel>,
        f: impl Fn(&OutcomeLabel) -> OutcomeLabel,
    ) -> Self {
        let assignment: IndexMap<_, _> = domain.into_iter().map(|x| (x.clone(), f(x))).collect();
        let codomain = assignment.values().cloned().collect();
        Self {
            assignment,
            codomain,
        }
    }

    pub fn identity<'a>(domain: impl IntoIterator<Item = &'a OutcomeLabel>) -> Self {
        Self::from_fn(domain, Clone::clone)
    }

    /// Checks the map is total on `domain` (in any order) and nowhere else.
    pub fn check_domain<'a>(&self, domain: impl IntoIterator<Item = &'a OutcomeLabel>) -> Result<()> {
        let mut seen = 0;
        for x in domain {
            if !self.assignment.contains_key(x) {
                return Err(Error::NotTotal(x.to_string()));
            }
            seen += 1;
        }
        if seen != self.assignment.len() {
            let extra = self.assignment.len() - seen;
            return Err(Error::OutcomeSpaceMismatch(format!(
                "map has {extra} domain labels outside the outcome space"
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &OutcomeLabel) -> Option<&OutcomeLabel> {
        self.assignment.get(x)
    }

    pub fn domain(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.assignment.keys()
    }

    pub fn codomain(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.codomain.iter()
    }

    pub fn domain_len(&self) -> usize {
        self.assignment.len()
    }

    pub fn codomain_len(&self) -> usize {
        self.codomain.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&OutcomeLabel, &OutcomeLabel)> {
        self.assignment.iter()
    }

    /// `f⁻¹(y)` in domain order.
    pub fn fiber<'a>(&'a self, y: &'a OutcomeLabel) -> impl Iterator<Item = &'a OutcomeLabel> + 'a {
        self.assignment
            .iter()
            .filter(move |(_, v)| *v == y)
            .map(|(k, _)| k)
    }

    /// `f⁻¹(Y)` in domain order.
    pub fn preimage(&self, ys: &[OutcomeLabel]) -> Vec<OutcomeLabel> {
        self.assignment
            .iter()
            .filter(|(_, v)| ys.contains(v))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn is_bijective(&self) -> bool {
        self.assignment.len() == self.codomain.len()
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn after(&self, inner: &Surjection) -> Result<Surjection> {
        let pairs = inner
            .pairs()
            .map(|(x, y)| {
                self.apply(y)
                    .cloned()
                    .map(|z| (x.clone(), z))
                    .ok_or_else(|| Error::NotTotal(y.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Surjection::new(pairs, self.codomain.iter().cloned())
    }
}
