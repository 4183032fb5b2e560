use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::join_multiword;
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};

/// Country token → demonym token, e.g. `canada → canadian`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NationalityMapping {
    pairs: BTreeMap<String, String>,
}

fn valid_token(t: &str) -> bool {
    !t.is_empty() && !t.chars().any(char::is_whitespace)
}

impl NationalityMapping {
    pub fn from_pairs<C, D>(pairs: impl IntoIterator<Item = (C, D)>) -> Result<Self>
    where
        C: Into<String>,
        D: Into<String>,
    {
        let mut mapping = NationalityMapping::default();
        for (c, d) in pairs {
            let (c, d) = (c.into(), d.into());
            if mapping.pairs.contains_key(&c) {
                return Err(Error::Contract(format!("country {c:?} mapped twice")));
            }
            mapping.insert(c, d)?;
        }
        Ok(mapping)
    }

    /// Adds or replaces a pair.
    pub fn insert(&mut self, country: String, demonym: String) -> Result<()> {
        if !valid_token(&country) || !valid_token(&demonym) {
            return Err(Error::Contract(format!(
                "mapping tokens must be non-empty and space-free: {country:?} → {demonym:?}"
            )));
        }
        if country == demonym {
            return Err(Error::Contract(format!("{country:?} mapped to itself")));
        }
        self.pairs.insert(country, demonym);
        Ok(())
    }

    pub fn demonym(&self, country: &str) -> Option<&str> {
        self.pairs.get(country).map(String::as_str)
    }

    pub fn contains(&self, country: &str) -> bool {
        self.pairs.contains_key(country)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in country order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(c, d)| (c.as_str(), d.as_str()))
    }

    /// Reads `country<TAB>demonym` lines. Values are joined and lowercased.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut mapping = NationalityMapping::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(Error::format(path, i + 1, "expected `country<TAB>demonym`"));
            }
            let (country, demonym) = (join_multiword(fields[0]), join_multiword(fields[1]));
            if mapping.contains(&country) {
                return Err(Error::format(path, i + 1, format!("country {country:?} mapped twice")));
            }
            mapping
                .insert(country, demonym)
                .map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        }
        Ok(mapping)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (c, d) in self.iter() {
            out.push_str(c);
            out.push('\t');
            out.push_str(d);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Outcome of [`build_mapping`].
#[derive(Debug, Clone, PartialEq)]
pub struct MappingReport {
    pub mapping: NationalityMapping,
    /// Countries absent from the vectors and from the overrides.
    pub unmapped: Vec<String>,
    /// Countries whose demonym came from the vector offset query.
    pub from_analogy: Vec<String>,
}

/// Derives demonyms by vector offset: for each country `c`, the word closest
/// to `vec(anchor_demonym) - vec(anchor_country) + vec(c)`.
///
/// Entries of `overrides` win over everything; the anchor pair itself is
/// known and never queried. Countries missing from the vectors are reported
/// as unmapped.
pub fn build_mapping(
    countries: &[String],
    vectors: &EmbeddingModel,
    anchor: (&str, &str),
    overrides: Option<&NationalityMapping>,
) -> Result<MappingReport> {
    let (anchor_country, anchor_demonym) = anchor;
    let mut mapping = NationalityMapping::default();
    let mut unmapped = Vec::new();
    let mut from_analogy = Vec::new();

    for country in countries {
        if let Some(d) = overrides.and_then(|o| o.demonym(country)) {
            mapping.insert(country.clone(), d.to_owned())?;
        } else if country == anchor_country {
            mapping.insert(country.clone(), anchor_demonym.to_owned())?;
        } else if vectors.contains(country)
            && vectors.contains(anchor_country)
            && vectors.contains(anchor_demonym)
        {
            let hit = vectors.analogy(anchor_demonym, anchor_country, country)?;
            mapping.insert(country.clone(), hit.word)?;
            from_analogy.push(country.clone());
        } else {
            log::warn!("no demonym for {country}: not in the vector vocabulary");
            unmapped.push(country.clone());
        }
    }
    Ok(MappingReport {
        mapping,
        unmapped,
        from_analogy,
    })
}
