use std::collections::BTreeMap;

use super::ast::UnaryFn;
use super::SpaceError;

/// Default sampling interval for coordinates when no box is declared.
pub const DEFAULT_BOX: (f64, f64) = (-1.0, 1.0);
/// Default sampling interval for parameters; parameters are positive reals.
pub const DEFAULT_PARAM_RANGE: (f64, f64) = (0.5, 2.0);

/// Darboux chart: `n` position coordinates followed by `n` momenta, plus named parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpace {
    coords: Vec<String>,
    params: BTreeMap<String, f64>,
    param_ranges: BTreeMap<String, (f64, f64)>,
    boxes: Vec<(f64, f64)>,
    domain_note: Option<String>,
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl PhaseSpace {
    pub fn new<S: AsRef<str>>(
        coords: &[S],
        params: &[(S, f64)],
    ) -> Result<PhaseSpace, SpaceError> {
        let coords: Vec<String> = coords.iter().map(|s| s.as_ref().to_string()).collect();
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(SpaceError::OddDimension(coords.len()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut param_map = BTreeMap::new();
        let names = coords
            .iter()
            .map(|c| c.as_str())
            .chain(params.iter().map(|(p, _)| p.as_ref()));
        for name in names {
            if !valid_identifier(name) || UnaryFn::from_name(name).is_some() {
                return Err(SpaceError::InvalidName(name.to_string()));
            }
            if !seen.insert(name.to_string()) {
                return Err(SpaceError::Duplicate(name.to_string()));
            }
        }
        for (p, v) in params {
            param_map.insert(p.as_ref().to_string(), *v);
        }
        let boxes = vec![DEFAULT_BOX; coords.len()];
        Ok(PhaseSpace {
            coords,
            params: param_map,
            param_ranges: BTreeMap::new(),
            boxes,
            domain_note: None,
        })
    }

    /// Canonical names `q1..qn, p1..pn`.
    pub fn canonical(n: usize, params: &[(&str, f64)]) -> Result<PhaseSpace, SpaceError> {
        let mut coords: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
        coords.extend((1..=n).map(|i| format!("p{i}")));
        let params: Vec<(String, f64)> =
            params.iter().map(|(n, v)| (n.to_string(), *v)).collect();
        PhaseSpace::new(&coords, &params)
    }

    pub fn with_box(mut self, coord: &str, lo: f64, hi: f64) -> Result<PhaseSpace, SpaceError> {
        let i = self
            .index_of(coord)
            .ok_or_else(|| SpaceError::UnknownCoordinate(coord.to_string()))?;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SpaceError::EmptyBox(coord.to_string()));
        }
        self.boxes[i] = (lo, hi);
        Ok(self)
    }

    pub fn with_param_range(
        mut self,
        param: &str,
        lo: f64,
        hi: f64,
    ) -> Result<PhaseSpace, SpaceError> {
        if !self.params.contains_key(param) {
            return Err(SpaceError::UnknownParameter(param.to_string()));
        }
        if lo > hi || !lo.is_finite() || !hi.is_finite() {
            return Err(SpaceError::EmptyBox(param.to_string()));
        }
        self.param_ranges.insert(param.to_string(), (lo, hi));
        Ok(self)
    }

    pub fn with_domain_note(mut self, note: impl Into<String>) -> PhaseSpace {
        self.domain_note = Some(note.into());
        self
    }

    /// Degrees of freedom.
    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn positions(&self) -> &[String] {
        &self.coords[..self.n()]
    }

    pub fn momenta(&self) -> &[String] {
        &self.coords[self.n()..]
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param_range(&self, name: &str) -> (f64, f64) {
        self.param_ranges
            .get(name)
            .copied()
            .unwrap_or(DEFAULT_PARAM_RANGE)
    }

    pub fn coord_box(&self, i: usize) -> (f64, f64) {
        self.boxes[i]
    }

    pub fn domain_note(&self) -> Option<&str> {
        self.domain_note.as_deref()
    }

    pub fn index_of(&self, coord: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == coord)
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.index_of(name).is_some() || self.params.contains_key(name)
    }

    /// Evaluation slot: coordinates first, then parameters in name order.
    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index_of(name)
            .or_else(|| self.params.keys().position(|p| p == name).map(|i| i + self.dim()))
    }

    pub fn num_slots(&self) -> usize {
        self.dim() + self.params.len()
    }

    /// Slot vector for a phase-space point at the declared parameter values.
    pub fn slots_at(&self, point: &[f64]) -> Vec<f64> {
        let mut v = point.to_vec();
        v.extend(self.params.values());
        v
    }

    /// Center of the sampling box; the default base point for potentials.
    pub fn box_center(&self) -> Vec<f64> {
        self.boxes.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_layouts() {
        assert!(matches!(
            PhaseSpace::new(&["q1", "q2", "p1"], &[]),
            Err(SpaceError::OddDimension(3))
        ));
        assert!(matches!(
            PhaseSpace::new(&["q", "q"], &[]),
            Err(SpaceError::Duplicate(_))
        ));
        assert!(matches!(
            PhaseSpace::new(&["q", "p"], &[("q", 1.0)]),
            Err(SpaceError::Duplicate(_))
        ));
        assert!(matches!(
            PhaseSpace::new(&["sin", "p"], &[]),
            Err(SpaceError::InvalidName(_))
        ));
    }

    #[test]
    fn slots_put_parameters_after_coordinates() {
        let s = PhaseSpace::canonical(1, &[("w", 2.0), ("a", 3.0)]).unwrap();
        assert_eq!(s.slot("q1"), Some(0));
        assert_eq!(s.slot("p1"), Some(1));
        assert_eq!(s.slot("a"), Some(2));
        assert_eq!(s.slot("w"), Some(3));
        assert_eq!(s.slots_at(&[0.1, 0.2]), vec![0.1, 0.2, 3.0, 2.0]);
    }
}
