//! Complete assignments and partial evidence over discrete variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One value index per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, cardinalities: &[usize]) -> Result<()> {
        if self.0.len() != cardinalities.len() {
            return Err(Error::Evidence(format!(
                "assignment has {} values for {} variables",
                self.0.len(),
                cardinalities.len()
            )));
        }
        for (var, (&val, &card)) in self.0.iter().zip(cardinalities).enumerate() {
            if val >= card {
                return Err(Error::Evidence(format!(
                    "value {val} out of range for variable {var} (cardinality {card})"
                )));
            }
        }
        Ok(())
    }

    /// Iterates every complete assignment in lexicographic order, last
    /// variable fastest.
    pub fn enumerate(cardinalities: &[usize]) -> AssignmentIter<'_> {
        AssignmentIter {
            cards: cardinalities,
            fixed: None,
            current: Some(vec![0; cardinalities.len()]),
        }
    }
}

/// Partial map from variable id to observed value; unmapped variables are
/// marginalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Evidence {
    values: Vec<Option<usize>>,
}

impl Evidence {
    pub fn empty(num_vars: usize) -> Self {
        Evidence {
            values: vec![None; num_vars],
        }
    }

    pub fn from_values(values: Vec<Option<usize>>) -> Self {
        Evidence { values }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.values.get(var).copied().flatten()
    }

    pub fn set(&mut self, var: usize, val: Option<usize>) {
        self.values[var] = val;
    }

    pub fn values(&self) -> &[Option<usize>] {
        &self.values
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// The complete assignment, if every variable is observed.
    pub fn to_assignment(&self) -> Option<Assignment> {
        self.values
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .map(Assignment)
    }

    /// Indicator semantics: `var = val` is consistent with the evidence.
    #[inline]
    pub fn admits(&self, var: usize, val: usize) -> bool {
        match self.values[var] {
            None => true,
            Some(x) => x == val,
        }
    }

    pub fn validate(&self, cardinalities: &[usize]) -> Result<()> {
        if self.values.len() != cardinalities.len() {
            return Err(Error::Evidence(format!(
                "evidence covers {} variables, model has {}",
                self.values.len(),
                cardinalities.len()
            )));
        }
        for (var, (val, &card)) in self.values.iter().zip(cardinalities).enumerate() {
            if let Some(v) = *val {
                if v >= card {
                    return Err(Error::Evidence(format!(
                        "value {v} out of range for variable {var} (cardinality {card})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Every complete assignment consistent with this evidence.
    pub fn completions<'a>(&'a self, cardinalities: &'a [usize]) -> AssignmentIter<'a> {
        let start = self.values.iter().map(|v| v.unwrap_or(0)).collect();
        AssignmentIter {
            cards: cardinalities,
            fixed: Some(&self.values),
            current: Some(start),
        }
    }

    /// Parses `var=val` pairs separated by commas. Variables may be given by
    /// name (when `names` has one) or by index. An empty string or `*` means
    /// no evidence.
    pub fn parse(text: &str, cardinalities: &[usize], names: &[Option<String>]) -> Result<Self> {
        let mut ev = Evidence::empty(cardinalities.len());
        let text = text.trim();
        if text.is_empty() || text == "*" {
            return Ok(ev);
        }
        for pair in text.split(',') {
            let pair = pair.trim();
            let (lhs, rhs) = pair
                .split_once('=')
                .ok_or_else(|| Error::Evidence(format!("expected `var=val`, got `{pair}`")))?;
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            let var = names
                .iter()
                .position(|n| n.as_deref() == Some(lhs))
                .or_else(|| lhs.parse::<usize>().ok())
                .ok_or_else(|| Error::Evidence(format!("unknown variable `{lhs}`")))?;
            if var >= cardinalities.len() {
                return Err(Error::Evidence(format!("unknown variable `{lhs}`")));
            }
            let val: usize = rhs
                .parse()
                .map_err(|_| Error::Evidence(format!("bad value `{rhs}` for `{lhs}`")))?;
            if val >= cardinalities[var] {
                return Err(Error::Evidence(format!(
                    "value {val} out of range for `{lhs}` (cardinality {})",
                    cardinalities[var]
                )));
            }
            if ev.values[var].is_some_and(|old| old != val) {
                return Err(Error::Evidence(format!("conflicting values for `{lhs}`")));
            }
            ev.values[var] = Some(val);
        }
        Ok(ev)
    }
}

impl From<&Assignment> for Evidence {
    fn from(a: &Assignment) -> Self {
        Evidence {
            values: a.0.iter().map(|&v| Some(v)).collect(),
        }
    }
}

/// Odometer over complete assignments, optionally holding observed
/// variables fixed.
pub struct AssignmentIter<'a> {
    cards: &'a [usize],
    fixed: Option<&'a [Option<usize>]>,
    current: Option<Vec<usize>>,
}

impl Iterator for AssignmentIter<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let cur = self.current.take()?;
        let out = cur.clone();
        let mut next = cur;
        let mut advanced = false;
        for var in (0..next.len()).rev() {
            if self.fixed.is_some_and(|f| f[var].is_some()) {
                continue;
            }
            if next[var] + 1 < self.cards[var] {
                next[var] += 1;
                advanced = true;
                break;
            }
            next[var] = 0;
        }
        if advanced {
            self.current = Some(next);
        }
        Some(Assignment(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_all() {
        let all: Vec<_> = Assignment::enumerate(&[2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].0, vec![0, 0]);
        assert_eq!(all[5].0, vec![1, 2]);
    }

    #[test]
    fn completions_hold_evidence_fixed() {
        let ev = Evidence::from_values(vec![None, Some(1), None]);
        let all: Vec<_> = ev.completions(&[2, 2, 2]).collect();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|a| a.0[1] == 1));
        let complete = Evidence::from_values(vec![Some(1), Some(0)]);
        assert_eq!(complete.completions(&[2, 2]).count(), 1);
    }

    #[test]
    fn parse_by_name_and_index() {
        let names = vec![Some("K".into()), Some("T".into()), Some("G".into())];
        let ev = Evidence::parse("K=1, T=0,2=1", &[2, 2, 2], &names).unwrap();
        assert_eq!(ev.values(), &[Some(1), Some(0), Some(1)]);
        assert!(Evidence::parse("X=1", &[2, 2, 2], &names).is_err());
        assert!(Evidence::parse("K=2", &[2, 2, 2], &names).is_err());
        assert!(Evidence::parse("K=1,K=0", &[2, 2, 2], &names).is_err());
        assert!(Evidence::parse("", &[2, 2, 2], &names)
            .unwrap()
            .values()
            .iter()
            .all(Option::is_none));
    }
}
