use std::collections::BTreeSet;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{DeviceId, DeviceRecord};
use crate::error::{Error, Result};

/// Attributes encoded per device, in block order.
pub const ATTRIBUTE_NAMES: [&str; 4] = ["device_type", "brand", "mobility", "power_supply"];

/// Raw categorical values of one device (or of a request).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeValues {
    pub device_type: String,
    pub brand: String,
    pub mobility: String,
    pub power_supply: String,
}

impl AttributeValues {
    fn as_array(&self) -> [&str; 4] {
        [
            &self.device_type,
            &self.brand,
            &self.mobility,
            &self.power_supply,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeVocabulary {
    pub attribute: String,
    /// Category values, lexicographically sorted as produced by encoding.
    pub values: Vec<String>,
}

/// One-hot encoding of device attributes: one row per device in id order,
/// one contiguous block per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoding {
    device_ids: Vec<DeviceId>,
    vocabularies: Vec<AttributeVocabulary>,
    offsets: Vec<usize>,
    matrix: Array2<f64>,
}

impl FeatureEncoding {
    /// Encodes a non-empty catalog. Rows follow ascending device id, which is
    /// also the node order of [`super::SocialGraph`].
    pub fn encode(catalog: &[DeviceRecord]) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::InvalidConfig(
                "cannot encode an empty catalog".into(),
            ));
        }
        let mut devices: Vec<&DeviceRecord> = catalog.iter().collect();
        devices.sort_by_key(|d| d.device_id);
        let values: Vec<AttributeValues> = devices.iter().map(|d| d.attributes()).collect();

        let vocabularies: Vec<AttributeVocabulary> = ATTRIBUTE_NAMES
            .iter()
            .enumerate()
            .map(|(block, name)| {
                let set: BTreeSet<&str> = values.iter().map(|v| v.as_array()[block]).collect();
                AttributeVocabulary {
                    attribute: name.to_string(),
                    values: set.into_iter().map(String::from).collect(),
                }
            })
            .collect();
        let mut encoding = Self::with_vocabularies(vocabularies);
        encoding.device_ids = devices.iter().map(|d| d.device_id).collect();
        let mut matrix = Array2::zeros((devices.len(), encoding.width()));
        for (row, v) in values.iter().enumerate() {
            let encoded = encoding.encode_values(v)?;
            matrix
                .row_mut(row)
                .assign(&ndarray::ArrayView1::from(&encoded));
        }
        encoding.matrix = matrix;
        Ok(encoding)
    }

    fn with_vocabularies(vocabularies: Vec<AttributeVocabulary>) -> Self {
        let mut offsets = Vec::with_capacity(vocabularies.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for v in &vocabularies {
            acc += v.values.len();
            offsets.push(acc);
        }
        Self {
            device_ids: Vec::new(),
            offsets,
            matrix: Array2::zeros((0, acc)),
            vocabularies,
        }
    }

    /// Total one-hot width.
    pub fn width(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn attribute_count(&self) -> usize {
        self.vocabularies.len()
    }

    pub fn vocabularies(&self) -> &[AttributeVocabulary] {
        &self.vocabularies
    }

    pub fn device_ids(&self) -> &[DeviceId] {
        &self.device_ids
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn row(&self, index: usize) -> &[f64] {
        self.matrix
            .row(index)
            .to_slice()
            .expect("feature matrix is in standard layout")
    }

    pub fn row_of(&self, id: DeviceId) -> Option<&[f64]> {
        self.device_ids.binary_search(&id).ok().map(|i| self.row(i))
    }

    /// Column range of attribute block `block`.
    pub fn block(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// One-hot vector for raw attribute values, e.g. for a service request.
    pub fn encode_values(&self, values: &AttributeValues) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.width()];
        for (block, raw) in values.as_array().iter().enumerate() {
            let vocab = &self.vocabularies[block];
            let pos = vocab.values.iter().position(|v| v == raw).ok_or_else(|| {
                Error::UnknownAttributeValue {
                    attribute: ATTRIBUTE_NAMES[block],
                    value: raw.to_string(),
                }
            })?;
            out[self.offsets[block] + pos] = 1.0;
        }
        Ok(out)
    }

    /// Checks width and that every block holds exactly one 1 and zeros elsewhere.
    pub fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.width() {
            return Err(Error::FeatureWidth {
                expected: self.width(),
                got: features.len(),
            });
        }
        for block in 0..self.attribute_count() {
            let slice = &features[self.block(block)];
            let ones = slice.iter().filter(|&&x| x == 1.0).count();
            let zeros = slice.iter().filter(|&&x| x == 0.0).count();
            if ones != 1 || ones + zeros != slice.len() {
                return Err(Error::InvalidFeatures(format!(
                    "block {} is not one-hot",
                    self.vocabularies[block].attribute
                )));
            }
        }
        Ok(())
    }

    /// Active category position within each block (the argmax per block).
    pub fn active_categories(&self, features: &[f64]) -> Vec<usize> {
        (0..self.attribute_count())
            .map(|b| {
                let slice = &features[self.block(b)];
                slice
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
                        if x > best.1 {
                            (i, x)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }

    /// Number of attribute blocks on which two one-hot vectors agree.
    pub fn matching_blocks(&self, a: &[f64], b: &[f64]) -> usize {
        self.active_categories(a)
            .into_iter()
            .zip(self.active_categories(b))
            .filter(|(x, y)| x == y)
            .count()
    }

    /// Copy with an extra device row, inserted at its id-sorted position.
    pub fn with_device(&self, id: DeviceId, features: &[f64]) -> Result<Self> {
        self.check_features(features)?;
        let pos = match self.device_ids.binary_search(&id) {
            Ok(_) => return Err(Error::DuplicateDeviceId(id)),
            Err(p) => p,
        };
        let mut out = self.clone();
        out.device_ids.insert(pos, id);
        let mut matrix = Array2::zeros((self.device_ids.len() + 1, self.width()));
        for (i, row) in self.matrix.axis_iter(Axis(0)).enumerate() {
            let dst = if i < pos { i } else { i + 1 };
            matrix.row_mut(dst).assign(&row);
        }
        matrix
            .row_mut(pos)
            .assign(&ndarray::ArrayView1::from(features));
        out.matrix = matrix;
        Ok(out)
    }

    /// Copy without the given device row. Vocabularies are left untouched.
    pub fn without_device(&self, id: DeviceId) -> Result<Self> {
        let pos = self
            .device_ids
            .binary_search(&id)
            .map_err(|_| Error::UnknownDevice(id))?;
        let mut out = self.clone();
        out.device_ids.remove(pos);
        let keep: Vec<usize> = (0..self.device_ids.len()).filter(|&i| i != pos).collect();
        out.matrix = self.matrix.select(Axis(0), &keep);
        Ok(out)
    }

    /// Same encoding with each vocabulary's category order permuted: category
    /// `i` of block `b` moves to position `perms[b][i]`.
    pub fn permuted_categories(&self, perms: &[Vec<usize>]) -> Self {
        let mut out = self.clone();
        for (block, perm) in perms.iter().enumerate() {
            let start = self.offsets[block];
            for r in 0..self.matrix.nrows() {
                for (i, &p) in perm.iter().enumerate() {
                    out.matrix[[r, start + p]] = self.matrix[[r, start + i]];
                }
            }
            for (i, &p) in perm.iter().enumerate() {
                out.vocabularies[block].values[p] = self.vocabularies[block].values[i].clone();
            }
        }
        out
    }
}
