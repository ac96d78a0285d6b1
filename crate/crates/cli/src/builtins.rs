use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use kontact::forms::{DefinitionFile, SmoothMap, VectorField};
use kontact::hydro::{hydro_kcontact_form, hydro_polarization};
use kontact::kcontact::{canonical_polarization, canonical_structure, thermo_structure, KContactStructure};
use kontact::legendrian::thermo_complement;
use kontact::symexpr::ScalarExpr;

use crate::UsageError;

/// Named structures: `hydro4` (or `hydro:K`), `canonical:n,k`, `thermo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Hydro(usize),
    Canonical(usize, usize),
    Thermo,
}

impl FromStr for Builtin {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        let bad = || UsageError(format!("unknown builtin `{s}` (expected hydro4, hydro:K, canonical:n,k or thermo)"));
        if s == "thermo" {
            return Ok(Builtin::Thermo);
        }
        if let Some(k) = s.strip_prefix("hydro:").or_else(|| s.strip_prefix("hydro")) {
            let k: usize = k.parse().map_err(|_| bad())?;
            return if k >= 2 { Ok(Builtin::Hydro(k)) } else { Err(bad()) };
        }
        if let Some(rest) = s.strip_prefix("canonical:") {
            let (n, k) = rest.split_once(',').ok_or_else(bad)?;
            let (n, k): (usize, usize) = (n.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?);
            return if n >= 1 && k >= 1 { Ok(Builtin::Canonical(n, k)) } else { Err(bad()) };
        }
        Err(bad())
    }
}

/// A structure with whatever extra data its source provides.
pub struct Resolved {
    pub name: String,
    pub structure: KContactStructure,
    pub polarization: Option<Vec<VectorField>>,
    /// Chart indices of the expected Reeb frame `∂/∂x^i` (builtins only).
    pub expected_reeb: Option<Vec<usize>>,
    pub hamiltonian: Option<ScalarExpr>,
    pub maps: BTreeMap<String, SmoothMap>,
    pub builtin: Option<Builtin>,
}

pub fn resolve(builtin: Option<&str>, file: Option<&Path>) -> Result<Resolved> {
    match (builtin, file) {
        (Some(b), None) => from_builtin(b.parse()?, b),
        (None, Some(path)) => from_file(path),
        (Some(_), Some(_)) => Err(UsageError("give either --builtin or a definition file, not both".into()).into()),
        (None, None) => Err(UsageError("a structure is required: --builtin NAME or a definition file".into()).into()),
    }
}

fn from_builtin(b: Builtin, name: &str) -> Result<Resolved> {
    let (structure, polarization) = match b {
        Builtin::Hydro(k) => (hydro_kcontact_form(k)?, hydro_polarization(k)?),
        Builtin::Canonical(n, k) => {
            let s = canonical_structure(n, k);
            let p = canonical_polarization(n, k, s.chart());
            (s, p)
        }
        Builtin::Thermo => {
            let s = thermo_structure();
            let p = thermo_complement(s.chart())?;
            (s, p)
        }
    };
    // every builtin puts its Reeb directions (S^μ, s^α, E) first
    let expected_reeb = Some((0..structure.k()).collect());
    Ok(Resolved {
        name: name.into(),
        structure,
        polarization: Some(polarization),
        expected_reeb,
        hamiltonian: None,
        maps: BTreeMap::new(),
        builtin: Some(b),
    })
}

fn from_file(path: &Path) -> Result<Resolved> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let defs = DefinitionFile::load(&text).with_context(|| format!("in {}", path.display()))?;
    if defs.eta.is_empty() {
        return Err(UsageError(format!("{}: the file lists no `eta` forms", path.display())).into());
    }
    let structure = KContactStructure::from_forms(&defs.chart, defs.eta.clone())?;
    Ok(Resolved {
        name: path.display().to_string(),
        structure,
        polarization: None,
        expected_reeb: None,
        hamiltonian: defs.hamiltonian,
        maps: defs.maps,
        builtin: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("hydro4".parse::<Builtin>().unwrap(), Builtin::Hydro(4));
        assert_eq!("hydro:3".parse::<Builtin>().unwrap(), Builtin::Hydro(3));
        assert_eq!("canonical:2,3".parse::<Builtin>().unwrap(), Builtin::Canonical(2, 3));
        assert_eq!("thermo".parse::<Builtin>().unwrap(), Builtin::Thermo);
        for bad in ["hydro1", "canonical:0,1", "canonical:2", "sphere", "hydro"] {
            assert!(bad.parse::<Builtin>().is_err(), "{bad}");
        }
    }

    #[test]
    fn resolve_requires_exactly_one_source() {
        assert!(resolve(None, None).err().unwrap().downcast_ref::<UsageError>().is_some());
        assert!(resolve(Some("thermo"), Some(Path::new("x.json"))).is_err());
        let r = resolve(Some("canonical:1,2"), None).unwrap();
        assert_eq!(r.structure.dim(), 5);
        assert_eq!(r.expected_reeb, Some(vec![0, 1]));
    }
}
