//! Hamiltonian JSON files.
//!
//! ```json
//! {"n_qubits": 4, "identity_offset": -0.09,
//!  "terms": [{"pauli": "ZIII", "coeff": 0.17}, ...],
//!  "metadata": {"name": "H2", "e0_reference": -1.137}}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, HamiltonianMetadata, PauliString, PauliTerm};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermEntry {
    pub pauli: String,
    pub coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianFile {
    pub n_qubits: usize,
    #[serde(default)]
    pub identity_offset: f64,
    pub terms: Vec<TermEntry>,
    #[serde(default)]
    pub metadata: Option<FileMetadata>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FileMetadata {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub e0_reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_electrons: Option<usize>,
}

impl HamiltonianFile {
    pub fn into_hamiltonian(self) -> Result<Hamiltonian> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (index, entry) in self.terms.iter().enumerate() {
            let paulis: PauliString = entry.pauli.parse().map_err(|_| Error::Load {
                index,
                message: format!("invalid Pauli string {:?}", entry.pauli),
            })?;
            if paulis.n_qubits() != self.n_qubits {
                return Err(Error::Load {
                    index,
                    message: format!(
                        "Pauli string {:?} has length {}, expected {}",
                        entry.pauli,
                        paulis.n_qubits(),
                        self.n_qubits
                    ),
                });
            }
            terms.push(PauliTerm::new(paulis, entry.coeff));
        }
        let h = Hamiltonian::new(self.n_qubits, self.identity_offset, terms)?;
        Ok(match self.metadata {
            Some(m) => h.with_metadata(HamiltonianMetadata {
                name: m.name,
                e0_reference: m.e0_reference,
                n_electrons: m.n_electrons,
            }),
            None => h,
        })
    }

    pub fn from_hamiltonian(h: &Hamiltonian) -> Self {
        Self {
            n_qubits: h.n_qubits(),
            identity_offset: h.identity_offset(),
            terms: h
                .terms()
                .iter()
                .map(|t| TermEntry {
                    pauli: t.paulis.to_string(),
                    coeff: t.coefficient,
                })
                .collect(),
            metadata: h.metadata().map(|m| FileMetadata {
                name: m.name.clone(),
                e0_reference: m.e0_reference,
                n_electrons: m.n_electrons,
            }),
        }
    }
}

/// Parses a Hamiltonian from JSON text. Non-finite coefficients cannot be
/// written in JSON, so they surface as parse errors.
pub fn parse_hamiltonian(text: &str) -> Result<Hamiltonian> {
    let file: HamiltonianFile = serde_json::from_str(text)?;
    file.into_hamiltonian()
}

pub fn load_hamiltonian(path: impl AsRef<Path>) -> Result<Hamiltonian> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_hamiltonian(&text)
}

pub fn save_hamiltonian(h: &Hamiltonian, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&HamiltonianFile::from_hamiltonian(h))?;
    std::fs::write(path, text).map_err(|e| Error::file(path, e))
}

const BUNDLED: &[(&str, &str)] = &[
    (
        "h2",
        include_str!("../../data/hamiltonians/h2_sto3g_0.735.json"),
    ),
    (
        "h4",
        include_str!("../../data/hamiltonians/h4_chain_sto3g_1.0.json"),
    ),
    (
        "lih-active",
        include_str!("../../data/hamiltonians/lih_sto3g_1.595_cas2e3o.json"),
    ),
    (
        "lih",
        include_str!("../../data/hamiltonians/lih_sto3g_1.595.json"),
    ),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// One of the molecular Hamiltonians shipped in `data/hamiltonians/`
/// (`h2`, `h4`, `lih-active`, `lih`).
pub fn bundled(name: &str) -> Result<Hamiltonian> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Config(format!("no bundled Hamiltonian named {name:?}")))?;
    parse_hamiltonian(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_h2_shape() {
        let h = bundled("h2").unwrap();
        assert_eq!(h.n_qubits(), 4);
        // 14 Pauli strings plus the identity
        assert_eq!(h.terms().len() + 1, 15);
        let e0 = h.metadata().unwrap().e0_reference.unwrap();
        assert!((e0 + 1.137).abs() < 1e-3);
    }

    #[test]
    fn all_bundled_files_parse() {
        for name in bundled_names() {
            let h = bundled(name).unwrap();
            assert!(h.metadata().unwrap().e0_reference.is_some(), "{name}");
        }
    }

    #[test]
    fn duplicate_entries_merge() {
        let text = r#"{"n_qubits": 4, "identity_offset": 0.0,
            "terms": [{"pauli": "ZZII", "coeff": 0.3}, {"pauli": "ZZII", "coeff": 0.2}]}"#;
        let h = parse_hamiltonian(text).unwrap();
        assert_eq!(h.terms().len(), 1);
        assert!((h.terms()[0].coefficient - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bad_alphabet_names_term_index() {
        let text = r#"{"n_qubits": 2, "identity_offset": 0.0,
            "terms": [{"pauli": "ZZ", "coeff": 1.0}, {"pauli": "ZQ", "coeff": 0.2}]}"#;
        match parse_hamiltonian(text) {
            Err(Error::Load { index, message }) => {
                assert_eq!(index, 1);
                assert!(message.contains("ZQ"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_length_names_term_index() {
        let text = r#"{"n_qubits": 2, "terms": [{"pauli": "ZZZ", "coeff": 1.0}]}"#;
        assert!(matches!(
            parse_hamiltonian(text),
            Err(Error::Load { index: 0, .. })
        ));
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse_hamiltonian("{"), Err(Error::Json(_))));
        let nan = r#"{"n_qubits": 1, "terms": [{"pauli": "Z", "coeff": NaN}]}"#;
        assert!(parse_hamiltonian(nan).is_err());
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.json");
        let h = bundled("h2").unwrap();
        save_hamiltonian(&h, &path).unwrap();
        let back = load_hamiltonian(&path).unwrap();
        assert_eq!(back, h);
        assert!(matches!(
            load_hamiltonian(dir.path().join("missing.json")),
            Err(Error::File { .. })
        ));
    }
}
