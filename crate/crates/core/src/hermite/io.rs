//! JSON export and import of a built basis, guarded by a SHA-256 checksum.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{Arithmetic, BasisData, BasisElement, HermiteBasis};
use crate::error::HermiteError;
use crate::polyalg::{DunklOperators, MultiIndex, Polynomial, QuadSurd};
use crate::reflection::RootSystemConfig;

const FORMAT: &str = "dunkl-hermite-basis/1";

#[derive(Serialize, Deserialize)]
struct Constants {
    gamma: f64,
    c_kappa: f64,
    m_kappa: f64,
}

#[derive(Serialize, Deserialize)]
struct Element {
    index: MultiIndex,
    norm: Value,
    psi: Vec<(MultiIndex, Value)>,
    hermite: Vec<(MultiIndex, Value)>,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    format: String,
    root_system: RootSystemConfig,
    degree: u32,
    arithmetic: Arithmetic,
    constants: Constants,
    elements: Vec<Element>,
}

#[derive(Serialize, Deserialize)]
struct BasisFile {
    #[serde(flatten)]
    payload: Payload,
    checksum: String,
}

fn digest(payload: &Payload) -> Result<String, HermiteError> {
    let text = serde_json::to_string(payload).map_err(|e| HermiteError::Format(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn exact_terms(p: &Polynomial<QuadSurd>) -> Vec<(MultiIndex, Value)> {
    p.terms().map(|(m, c)| (m.clone(), Value::String(c.to_text()))).collect()
}

fn float_terms(p: &Polynomial<f64>) -> Vec<(MultiIndex, Value)> {
    p.terms().map(|(m, c)| (m.clone(), Value::from(*c))).collect()
}

fn parse_exact(v: &Value) -> Result<QuadSurd, HermiteError> {
    v.as_str()
        .and_then(QuadSurd::parse)
        .ok_or_else(|| HermiteError::Format(format!("bad exact coefficient {v}")))
}

fn parse_float(v: &Value) -> Result<f64, HermiteError> {
    v.as_f64().ok_or_else(|| HermiteError::Format(format!("bad coefficient {v}")))
}

fn poly<C: crate::polyalg::Scalar>(
    dim: usize,
    terms: &[(MultiIndex, Value)],
    parse: impl Fn(&Value) -> Result<C, HermiteError>,
) -> Result<Polynomial<C>, HermiteError> {
    let mut out = Vec::with_capacity(terms.len());
    for (m, v) in terms {
        if m.dim() != dim {
            return Err(HermiteError::Format(format!("multi-index {m} has wrong length")));
        }
        out.push((m.clone(), parse(v)?));
    }
    Ok(Polynomial::from_terms(dim, out))
}

fn elements<C: crate::polyalg::Scalar>(
    dim: usize,
    raw: &[Element],
    parse: impl Fn(&Value) -> Result<C, HermiteError> + Copy,
) -> Result<Vec<BasisElement<C>>, HermiteError> {
    raw.iter()
        .map(|e| {
            Ok(BasisElement {
                index: e.index.clone(),
                psi: poly(dim, &e.psi, parse)?,
                norm: parse(&e.norm)?,
                hermite: poly(dim, &e.hermite, parse)?,
            })
        })
        .collect()
}

impl HermiteBasis {
    /// Serialises the basis; coefficients are exact strings such as
    /// `"3/2 + 1/4*sqrt(3)"` in exact mode and numbers otherwise.
    pub fn to_json(&self) -> Result<String, HermiteError> {
        let elements = match &self.data {
            BasisData::Exact { elements, .. } => elements
                .iter()
                .map(|e| Element {
                    index: e.index.clone(),
                    norm: Value::String(e.norm.to_text()),
                    psi: exact_terms(&e.psi),
                    hermite: exact_terms(&e.hermite),
                })
                .collect(),
            BasisData::Float { elements, .. } => elements
                .iter()
                .map(|e| Element {
                    index: e.index.clone(),
                    norm: Value::from(e.norm),
                    psi: float_terms(&e.psi),
                    hermite: float_terms(&e.hermite),
                })
                .collect(),
        };
        let payload = Payload {
            format: FORMAT.to_string(),
            root_system: self.rs.config(),
            degree: self.degree,
            arithmetic: self.arithmetic(),
            constants: Constants { gamma: self.gamma, c_kappa: self.c_kappa, m_kappa: self.m_kappa },
            elements,
        };
        let checksum = digest(&payload)?;
        serde_json::to_string_pretty(&BasisFile { payload, checksum }).map_err(|e| HermiteError::Format(e.to_string()))
    }

    /// Reads a basis written by [`HermiteBasis::to_json`]. Any edit to the
    /// payload is rejected with [`HermiteError::Checksum`].
    pub fn from_json(text: &str) -> Result<Self, HermiteError> {
        let file: BasisFile = serde_json::from_str(text).map_err(|e| HermiteError::Format(e.to_string()))?;
        if digest(&file.payload)? != file.checksum {
            return Err(HermiteError::Checksum);
        }
        let p = file.payload;
        if p.format != FORMAT {
            return Err(HermiteError::Format(format!("unknown format {}", p.format)));
        }
        let rs = p.root_system.build()?;
        let dim = rs.dim();
        let expected = MultiIndex::up_to_order(dim, p.degree);
        if p.elements.len() != expected.len() || p.elements.iter().zip(&expected).any(|(e, m)| &e.index != m) {
            return Err(HermiteError::Format("element list does not match the degree".into()));
        }
        let data = match p.arithmetic {
            Arithmetic::Exact => {
                let ops = DunklOperators::exact(&rs)
                    .ok_or_else(|| HermiteError::Format("root system has no exact representation".into()))?;
                BasisData::Exact { ops, elements: elements(dim, &p.elements, parse_exact)? }
            }
            Arithmetic::Float => {
                BasisData::Float { ops: DunklOperators::float(&rs), elements: elements(dim, &p.elements, parse_float)? }
            }
        };
        Ok(Self::assemble(rs, p.degree, p.constants.c_kappa, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflection::{Catalogue, RootSystem};

    #[test]
    fn round_trip_exact_and_float() {
        let a2 = RootSystem::catalogue(Catalogue::A2, &[1.0]).unwrap();
        let b = HermiteBasis::build(&a2, 3).unwrap();
        let back = HermiteBasis::from_json(&b.to_json().unwrap()).unwrap();
        let x = [0.4, -0.2];
        assert_eq!(b.hermite_functions_at(&x).unwrap(), back.hermite_functions_at(&x).unwrap());

        let i5 = RootSystem::catalogue(Catalogue::Dihedral(5), &[0.5]).unwrap();
        let b = HermiteBasis::build(&i5, 2).unwrap();
        assert_eq!(b.arithmetic(), Arithmetic::Float);
        let back = HermiteBasis::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(b.hermite_functions_at(&x).unwrap(), back.hermite_functions_at(&x).unwrap());
    }

    #[test]
    fn tampering_is_detected() {
        let rs = RootSystem::z2_power(1, &[0.5]).unwrap();
        let text = HermiteBasis::build(&rs, 2).unwrap().to_json().unwrap();
        let bad = text.replacen("\"degree\": 2", "\"degree\": 1", 1);
        assert_ne!(bad, text);
        assert_eq!(HermiteBasis::from_json(&bad).unwrap_err(), HermiteError::Checksum);
    }
}
