//! System-definition files: a TOML document describing phase space, symplectic form,
//! Hamiltonian, candidate symmetries and an optional integration run.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use hamsym::classifier::SymmetryCandidate;
use hamsym::exterior::{KForm, VectorField};
use hamsym::hamiltonian::{make_system, HamiltonianSystem, SymplecticForm};
use hamsym::symexpr::{expr, Expr, PhaseSpace, ProbeConfig};
use hamsym::verify::Method;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub n: usize,
    /// Positions then momenta; defaults to `q1..qn, p1..pn`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    #[serde(default)]
    pub symplectic: Symplectic,
    pub hamiltonian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_note: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Sampling range per parameter used when probing; defaults to [0.5, 2].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameter_ranges: BTreeMap<String, [f64; 2]>,
    /// Sampling box per coordinate; defaults to [-1, 1].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub domain: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub symmetries: Vec<SymmetrySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<RunSpec>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Symplectic {
    /// Must be the string `"canonical"`.
    Named(String),
    Terms(Vec<SymplecticTerm>),
}

impl Default for Symplectic {
    fn default() -> Self {
        Symplectic::Named("canonical".into())
    }
}

/// `coeff * d(i) ^ d(j)`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SymplecticTerm {
    pub coeff: String,
    pub i: CoordRef,
    pub j: CoordRef,
}

/// A coordinate by name or by zero-based position.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum CoordRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    pub name: String,
    pub components: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub x0: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_method")]
    pub method: String,
}

fn default_method() -> String {
    Method::Rk4.to_string()
}

/// A validated system with its candidates.
pub struct Loaded {
    pub file: SystemFile,
    pub system: HamiltonianSystem,
    pub candidates: Vec<SymmetryCandidate>,
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<SystemFile> {
        toml::from_str(text).map_err(|e| anyhow!("{e}"))
    }

    pub fn read(path: &Path) -> Result<SystemFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        SystemFile::parse(&text).with_context(|| format!("invalid system file {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("system files always serialize")
    }

    fn coordinate_names(&self) -> Result<Vec<String>> {
        match &self.coordinates {
            Some(c) if c.len() != 2 * self.n => {
                bail!("coordinates: expected {} names for n = {}, found {}", 2 * self.n, self.n, c.len())
            }
            Some(c) => Ok(c.clone()),
            None => Ok((1..=self.n)
                .map(|i| format!("q{i}"))
                .chain((1..=self.n).map(|i| format!("p{i}")))
                .collect()),
        }
    }

    pub fn space(&self) -> Result<Arc<PhaseSpace>> {
        let coords = self.coordinate_names()?;
        let params: Vec<(String, f64)> =
            self.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let mut space = PhaseSpace::new(&coords, &params).context("phase space")?;
        for (c, [lo, hi]) in &self.domain {
            space = space.with_box(c, *lo, *hi).with_context(|| format!("domain.{c}"))?;
        }
        for (p, [lo, hi]) in &self.parameter_ranges {
            space = space
                .with_param_range(p, *lo, *hi)
                .with_context(|| format!("parameter_ranges.{p}"))?;
        }
        if let Some(note) = &self.domain_note {
            space = space.with_domain_note(note.clone());
        }
        Ok(Arc::new(space))
    }

    pub fn load(&self, cfg: &ProbeConfig) -> Result<Loaded> {
        let space = self.space()?;
        let h = parse_expr(&self.hamiltonian, &space, "hamiltonian")?;
        let omega = match &self.symplectic {
            Symplectic::Named(s) if s == "canonical" => SymplecticForm::canonical(space.clone()),
            Symplectic::Named(s) => bail!("symplectic: expected \"canonical\" or a term list, found \"{s}\""),
            Symplectic::Terms(terms) => {
                let mut items = Vec::new();
                for (k, t) in terms.iter().enumerate() {
                    let at = format!("symplectic[{k}]");
                    let c = parse_expr(&t.coeff, &space, &format!("{at}.coeff"))?;
                    let i = resolve(&t.i, &space).with_context(|| format!("{at}.i"))?;
                    let j = resolve(&t.j, &space).with_context(|| format!("{at}.j"))?;
                    items.push((vec![i, j], c));
                }
                let form = KForm::from_terms(space.clone(), 2, items).context("symplectic")?;
                SymplecticForm::new(form, cfg).context("symplectic")?
            }
        };
        let system = make_system(space.clone(), omega, h, cfg.clone()).context("hamiltonian system")?;
        let mut candidates = Vec::new();
        for (k, s) in self.symmetries.iter().enumerate() {
            let at = format!("symmetries[{k}] ({})", s.name);
            if s.components.len() != space.dim() {
                bail!("{at}: expected {} components, found {}", space.dim(), s.components.len());
            }
            let comps = s
                .components
                .iter()
                .enumerate()
                .map(|(c, text)| parse_expr(text, &space, &format!("{at}.components[{c}]")))
                .collect::<Result<Vec<_>>>()?;
            candidates.push(SymmetryCandidate {
                name: s.name.clone(),
                field: VectorField::new(space.clone(), comps)?,
            });
        }
        Ok(Loaded {
            file: self.clone(),
            system,
            candidates,
        })
    }
}

pub fn parse_expr(text: &str, space: &PhaseSpace, at: &str) -> Result<Expr> {
    expr(text, space).map_err(|e| anyhow!("{at}: `{text}`: {e}"))
}

fn resolve(c: &CoordRef, space: &PhaseSpace) -> Result<usize> {
    match c {
        CoordRef::Index(i) if *i < space.dim() => Ok(*i),
        CoordRef::Index(i) => bail!("coordinate index {i} out of range"),
        CoordRef::Name(n) => space.index_of(n).ok_or_else(|| anyhow!("unknown coordinate `{n}`")),
    }
}

impl RunSpec {
    pub fn method(&self) -> Result<Method> {
        self.method.parse().map_err(|e| anyhow!("verify.method: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_canonical_names_and_form() {
        let f = SystemFile::parse("name = \"free\"\nn = 1\nhamiltonian = \"p1^2/2\"\n").unwrap();
        let l = f.load(&ProbeConfig::default()).unwrap();
        assert_eq!(l.system.space().coords(), ["q1", "p1"]);
        assert!(l.system.omega().is_canonical());
    }

    #[test]
    fn explicit_terms_by_name_and_index() {
        let text = r#"
name = "scaled"
n = 1
hamiltonian = "p1^2/2 + q1^2/2"
symplectic = [{ coeff = "2", i = "q1", j = 1 }]
"#;
        let l = SystemFile::parse(text).unwrap().load(&ProbeConfig::default()).unwrap();
        let space = l.system.space();
        let expected: Vec<_> = ["p1/2", "-q1/2"].iter().map(|c| hamsym::symexpr::expr(c, space).unwrap()).collect();
        assert_eq!(l.system.x_h().components(), &expected[..]);
    }

    #[test]
    fn errors_name_the_offending_field() {
        let text = "name = \"x\"\nn = 1\nhamiltonian = \"p1^2/2\"\n[[symmetries]]\nname = \"Y\"\ncomponents = [\"1\", \"q1 +\"]\n";
        let err = SystemFile::parse(text).unwrap().load(&ProbeConfig::default()).err().unwrap();
        assert!(format!("{err:#}").contains("symmetries[0] (Y).components[1]"), "{err:#}");
        let err = SystemFile::parse("name = 1").err().unwrap();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn component_count_is_checked() {
        let text = "name = \"x\"\nn = 1\nhamiltonian = \"p1^2/2\"\n[[symmetries]]\nname = \"Y\"\ncomponents = [\"1\"]\n";
        let err = SystemFile::parse(text).unwrap().load(&ProbeConfig::default()).err().unwrap();
        assert!(err.to_string().contains("expected 2 components"), "{err}");
    }
}
