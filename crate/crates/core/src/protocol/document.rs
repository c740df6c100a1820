//! JSON form of a protocol.
//!
//! ```json
//! { "d": 2, "lambdas": [..],
//!   "phi": [[[[re, im], ..d], ..d blocks], ..R outcomes],
//!   "corrections": [[[[[re, im], ..d cols], ..d rows], ..Kraus ops], ..R] }
//! ```
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! write/read cycle reproduces every bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AliceMeasurement, BobCorrections, Protocol};
use crate::error::{Error, Result};
use crate::qcore::{CMatrix, CVector, Operator, SchmidtDecomposition};

type Pair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDocument {
    pub d: usize,
    pub lambdas: Vec<f64>,
    pub phi: Vec<Vec<Vec<Pair>>>,
    pub corrections: Vec<Vec<Vec<Vec<Pair>>>>,
}

fn pair(z: &Complex64) -> Pair {
    [z.re, z.im]
}

fn complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl ProtocolDocument {
    pub fn from_protocol(proto: &Protocol) -> Self {
        let phi = proto
            .measurement()
            .outcomes()
            .iter()
            .map(|blocks| {
                blocks
                    .iter()
                    .map(|v| v.iter().map(pair).collect())
                    .collect()
            })
            .collect();
        let corrections = proto
            .corrections()
            .all()
            .iter()
            .map(|ops| {
                ops.iter()
                    .map(|op| {
                        let m = op.matrix();
                        (0..m.nrows())
                            .map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            d: proto.dim(),
            lambdas: proto.lambdas().to_vec(),
            phi,
            corrections,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn schmidt(&self) -> Result<SchmidtDecomposition> {
        if self.lambdas.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: self.lambdas.len(),
            });
        }
        SchmidtDecomposition::from_lambdas(self.lambdas.clone())
    }

    /// Measurement blocks, shape-checked but not checked for completeness.
    pub fn measurement(&self) -> Result<AliceMeasurement> {
        let phi = self
            .phi
            .iter()
            .map(|blocks| {
                blocks
                    .iter()
                    .map(|v| CVector::from_iterator(v.len(), v.iter().map(complex)))
                    .collect()
            })
            .collect();
        AliceMeasurement::new(self.d, phi)
    }

    /// Kraus lists, shape-checked but not checked for completeness.
    pub fn kraus(&self) -> Result<Vec<Vec<Operator>>> {
        let d = self.d;
        self.corrections
            .iter()
            .map(|ops| {
                ops.iter()
                    .map(|rows| {
                        if rows.len() != d || rows.iter().any(|row| row.len() != d) {
                            return Err(Error::Format(format!(
                                "correction operators must be {d}x{d}"
                            )));
                        }
                        Operator::new(CMatrix::from_fn(d, d, |i, j| complex(&rows[i][j])))
                    })
                    .collect()
            })
            .collect()
    }

    /// Fully validated protocol.
    pub fn into_protocol(self) -> Result<Protocol> {
        let corrections = BobCorrections::new(self.d, self.kraus()?)?;
        Protocol::new(self.schmidt()?, self.measurement()?, corrections)
    }
}

impl Protocol {
    pub fn to_json(&self) -> String {
        ProtocolDocument::from_protocol(self).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        ProtocolDocument::from_json(text)?.into_protocol()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_lambdas;
    use crate::SeededRng;
    use proptest::prelude::*;

    fn bits(proto: &Protocol) -> Vec<u64> {
        let doc = ProtocolDocument::from_protocol(proto);
        let mut out: Vec<u64> = doc.lambdas.iter().map(|x| x.to_bits()).collect();
        for blocks in &doc.phi {
            for v in blocks {
                out.extend(v.iter().flat_map(|p| [p[0].to_bits(), p[1].to_bits()]));
            }
        }
        for ops in &doc.corrections {
            for rows in ops {
                for row in rows {
                    out.extend(row.iter().flat_map(|p| [p[0].to_bits(), p[1].to_bits()]));
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn json_round_trip_is_bit_exact(seed in any::<u64>(), d in 2usize..5, extra in 0usize..3) {
            let mut rng = SeededRng::new(seed);
            let schmidt = SchmidtDecomposition::from_lambdas(random_lambdas(d, &mut rng)).unwrap();
            let meas = crate::search::random_povm(d, d * d + extra, &mut rng).unwrap();
            let proto = Protocol::with_optimal_corrections(schmidt, meas).unwrap();
            let back = Protocol::from_json(&proto.to_json()).unwrap();
            prop_assert_eq!(bits(&proto), bits(&back));
            prop_assert_eq!(&proto, &back);
        }
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(matches!(
            ProtocolDocument::from_json("{\"d\": 2}"),
            Err(Error::Format(_))
        ));
        let proto = Protocol::standard(vec![0.8, 0.6]).unwrap();
        let mut doc = ProtocolDocument::from_protocol(&proto);
        doc.corrections[0][0].pop();
        assert!(matches!(doc.kraus(), Err(Error::Format(_))));

        let mut doc = ProtocolDocument::from_protocol(&proto);
        doc.lambdas = vec![0.6, 0.8];
        assert!(matches!(doc.schmidt(), Err(Error::InvalidLambdas(_))));
    }
}
