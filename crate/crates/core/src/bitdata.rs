//! Bit-packed datasets and binarization / encoding utilities.
//!
//! A [`BitDataset`] stores `n_samples` rows of `n_bits` binary features each.
//! Rows are packed LSB-first: feature `8*b + k` of a row lives in bit `k` of
//! byte `b`, and every row is padded to a whole number of bytes with the
//! padding bits held at zero. Keeping padding zeroed lets Hamming distances
//! run as plain XOR + popcount over the raw bytes.

use crate::error::{Error, Result};

/// Bit-packed matrix of binary samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitDataset {
    n_samples: usize,
    n_bits: usize,
    row_bytes: usize,
    data: Vec<u8>,
}

impl BitDataset {
    /// All-zero dataset with the given shape.
    pub fn zeros(n_samples: usize, n_bits: usize) -> Result<Self> {
        if n_samples == 0 || n_bits == 0 {
            return Err(Error::EmptyInput);
        }
        let row_bytes = n_bits.div_ceil(8);
        Ok(Self {
            n_samples,
            n_bits,
            row_bytes,
            data: vec![0u8; n_samples * row_bytes],
        })
    }

    /// Pack per-sample bit sequences into a dataset.
    ///
    /// All rows must have the same nonzero length.
    pub fn pack(rows: &[Vec<bool>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        if first.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n_bits = first.len();
        let mut ds = Self::zeros(rows.len(), n_bits)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_bits {
                return Err(Error::RaggedRows {
                    row: i,
                    got: row.len(),
                    expected: n_bits,
                });
            }
            for (j, &bit) in row.iter().enumerate() {
                if bit {
                    ds.set_bit(i, j, true);
                }
            }
        }
        Ok(ds)
    }

    /// Rebuild a dataset from packed storage. `data` must hold
    /// `n_samples * ceil(n_bits/8)` bytes with zeroed padding bits.
    pub fn from_packed(n_samples: usize, n_bits: usize, data: Vec<u8>) -> Result<Self> {
        if n_samples == 0 || n_bits == 0 {
            return Err(Error::EmptyInput);
        }
        let row_bytes = n_bits.div_ceil(8);
        if data.len() != n_samples * row_bytes {
            return Err(Error::Format(format!(
                "packed data has {} bytes, expected {}",
                data.len(),
                n_samples * row_bytes
            )));
        }
        let ds = Self {
            n_samples,
            n_bits,
            row_bytes,
            data,
        };
        if let Some(row) = (0..n_samples).find(|&i| !ds.padding_clear(i)) {
            return Err(Error::Format(format!("nonzero padding bits in row {row}")));
        }
        Ok(ds)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Bytes per packed row.
    pub fn row_bytes(&self) -> usize {
        self.row_bytes
    }

    /// Packed bytes of row `i`.
    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.row_bytes..(i + 1) * self.row_bytes]
    }

    /// Raw packed storage, row-major.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    /// Mutable packed storage; callers must keep padding bits zeroed.
    pub(crate) fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn get_bit(&self, i: usize, j: usize) -> bool {
        assert!(j < self.n_bits, "bit index out of range");
        self.data[i * self.row_bytes + j / 8] >> (j % 8) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize, j: usize, value: bool) {
        assert!(j < self.n_bits, "bit index out of range");
        let byte = &mut self.data[i * self.row_bytes + j / 8];
        let mask = 1u8 << (j % 8);
        if value {
            *byte |= mask;
        } else {
            *byte &= !mask;
        }
    }

    /// Unpack back to per-sample bit sequences.
    pub fn unpack(&self) -> Vec<Vec<bool>> {
        (0..self.n_samples)
            .map(|i| (0..self.n_bits).map(|j| self.get_bit(i, j)).collect())
            .collect()
    }

    /// Hamming distance between rows `i` and `j` of this dataset.
    pub fn hamming(&self, i: usize, j: usize) -> u64 {
        hamming_bytes(self.row(i), self.row(j))
    }

    /// Hamming distance between row `i` here and row `j` of `other`.
    ///
    /// Errors when the bit widths differ.
    pub fn hamming_between(&self, i: usize, other: &BitDataset, j: usize) -> Result<u64> {
        if self.n_bits != other.n_bits {
            return Err(Error::WidthMismatch {
                left: self.n_bits,
                right: other.n_bits,
            });
        }
        Ok(hamming_bytes(self.row(i), other.row(j)))
    }

    /// Row-wise concatenation: row `i` of the result is the concatenation of
    /// row `i` of every part. Parts must agree on `n_samples`.
    pub fn concat(parts: &[BitDataset]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput)?;
        let n_samples = first.n_samples;
        for p in parts {
            if p.n_samples != n_samples {
                return Err(Error::SampleCountMismatch {
                    left: n_samples,
                    right: p.n_samples,
                });
            }
        }
        let n_bits: usize = parts.iter().map(|p| p.n_bits).sum();
        let mut out = Self::zeros(n_samples, n_bits)?;
        for i in 0..n_samples {
            let mut offset = 0;
            for p in parts {
                for j in 0..p.n_bits {
                    if p.get_bit(i, j) {
                        out.set_bit(i, offset + j, true);
                    }
                }
                offset += p.n_bits;
            }
        }
        Ok(out)
    }

    fn padding_clear(&self, i: usize) -> bool {
        let spare = self.row_bytes * 8 - self.n_bits;
        if spare == 0 {
            return true;
        }
        let last = self.row(i)[self.row_bytes - 1];
        last >> (8 - spare) == 0
    }
}

/// XOR-popcount Hamming distance over equal-length packed rows.
///
/// Walks the slices in u64 chunks; padding bits are zero on both sides so the
/// byte-level count equals the bit-level distance.
pub(crate) fn hamming_bytes(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    let mut chunks_a = a.chunks_exact(8);
    let mut chunks_b = b.chunks_exact(8);
    let mut total: u64 = 0;
    for (ca, cb) in chunks_a.by_ref().zip(chunks_b.by_ref()) {
        let x = u64::from_le_bytes(ca.try_into().unwrap());
        let y = u64::from_le_bytes(cb.try_into().unwrap());
        total += (x ^ y).count_ones() as u64;
    }
    for (&x, &y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        total += (x ^ y).count_ones() as u64;
    }
    total
}

/// Real-valued sample matrix (activations), row-major, finite entries only.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    n_samples: usize,
    n_features: usize,
    values: Vec<f64>,
}

impl RealMatrix {
    /// Validates the shape and rejects NaN/Inf entries.
    pub fn new(n_samples: usize, n_features: usize, values: Vec<f64>) -> Result<Self> {
        if n_samples == 0 || n_features == 0 {
            return Err(Error::EmptyInput);
        }
        if values.len() != n_samples * n_features {
            return Err(Error::Format(format!(
                "value buffer has {} entries, expected {}",
                values.len(),
                n_samples * n_features
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_features,
                col: pos % n_features,
            });
        }
        Ok(Self {
            n_samples,
            n_features,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let n_features = first.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::RaggedRows {
                    row: i,
                    got: row.len(),
                    expected: n_features,
                });
            }
        }
        Self::new(
            rows.len(),
            n_features,
            rows.iter().flatten().copied().collect(),
        )
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Mean and standard deviation of a whole activation matrix, used by the
/// 2-bit quantizer and recorded in run manifests.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ActivationStats {
    pub mu: f64,
    pub sigma: f64,
}

impl ActivationStats {
    /// Population mean and standard deviation over every entry.
    pub fn from_matrix(m: &RealMatrix) -> Self {
        let n = m.values.len() as f64;
        let mu = m.values.iter().sum::<f64>() / n;
        let var = m.values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        Self {
            mu,
            sigma: var.sqrt(),
        }
    }
}

/// Sign binarization: bit = 1 iff value > 0, so sign(0) maps to 0.
pub fn binarize_sign(m: &RealMatrix) -> BitDataset {
    let mut ds = BitDataset::zeros(m.n_samples, m.n_features).expect("matrix is nonempty");
    for i in 0..m.n_samples {
        for j in 0..m.n_features {
            if m.get(i, j) > 0.0 {
                ds.set_bit(i, j, true);
            }
        }
    }
    ds
}

/// 2-bit quantization with thresholds (-sigma, 0, +sigma):
///
/// ```text
/// value <  -sigma        -> 00
/// -sigma <= value < 0    -> 01
/// 0 <= value < sigma     -> 10
/// value >= sigma         -> 11
/// ```
///
/// Boundary points go to the upper code so the map is total. Each feature
/// contributes two bits, high bit first; `n_bits = 2 * n_features`. Only
/// `stats.sigma` enters the thresholds; `stats.mu` is carried for reporting.
pub fn quantize_2bit(m: &RealMatrix, stats: &ActivationStats) -> Result<BitDataset> {
    if !(stats.sigma > 0.0) {
        return Err(Error::InvalidSigma(stats.sigma));
    }
    let sigma = stats.sigma;
    let mut ds = BitDataset::zeros(m.n_samples, 2 * m.n_features)?;
    for i in 0..m.n_samples {
        for j in 0..m.n_features {
            let v = m.get(i, j);
            let code: u8 = if v < -sigma {
                0b00
            } else if v < 0.0 {
                0b01
            } else if v < sigma {
                0b10
            } else {
                0b11
            };
            if code & 0b10 != 0 {
                ds.set_bit(i, 2 * j, true);
            }
            if code & 0b01 != 0 {
                ds.set_bit(i, 2 * j + 1, true);
            }
        }
    }
    Ok(ds)
}

/// Bits needed to write a state index in [0, q-1] in plain binary.
pub fn bits_per_state(q: u32) -> usize {
    debug_assert!(q >= 2);
    (32 - (q - 1).leading_zeros()) as usize
}

/// Encode per-site Potts states as plain binary, most-significant bit first.
///
/// Each site uses `ceil(log2 q)` bits; `n_bits = n_sites * ceil(log2 q)`.
pub fn potts_encode(states: &[Vec<u32>], q: u32) -> Result<BitDataset> {
    if q < 2 {
        return Err(Error::InvalidQ(q));
    }
    let first = states.first().ok_or(Error::EmptyInput)?;
    if first.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_sites = first.len();
    let width = bits_per_state(q);
    let mut ds = BitDataset::zeros(states.len(), n_sites * width)?;
    for (i, row) in states.iter().enumerate() {
        if row.len() != n_sites {
            return Err(Error::RaggedRows {
                row: i,
                got: row.len(),
                expected: n_sites,
            });
        }
        for (site, &s) in row.iter().enumerate() {
            if s >= q {
                return Err(Error::StateOutOfRange { state: s, q });
            }
            for k in 0..width {
                // MSB first: bit k of the site field carries 2^(width-1-k).
                if s >> (width - 1 - k) & 1 == 1 {
                    ds.set_bit(i, site * width + k, true);
                }
            }
        }
    }
    Ok(ds)
}

/// Inverse of [`potts_encode`]. Requires `n_bits` divisible by the per-site
/// width; decoded values above `q-1` are rejected.
pub fn potts_decode(ds: &BitDataset, q: u32) -> Result<Vec<Vec<u32>>> {
    if q < 2 {
        return Err(Error::InvalidQ(q));
    }
    let width = bits_per_state(q);
    if ds.n_bits() % width != 0 {
        return Err(Error::Format(format!(
            "n_bits={} is not a multiple of the {width}-bit state width",
            ds.n_bits()
        )));
    }
    let n_sites = ds.n_bits() / width;
    let mut out = Vec::with_capacity(ds.n_samples());
    for i in 0..ds.n_samples() {
        let mut row = Vec::with_capacity(n_sites);
        for site in 0..n_sites {
            let mut s = 0u32;
            for k in 0..width {
                s = s << 1 | u32::from(ds.get_bit(i, site * width + k));
            }
            if s >= q {
                return Err(Error::StateOutOfRange { state: s, q });
            }
            row.push(s);
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn pack_single_row() {
        let ds = BitDataset::pack(&[bits(&[0, 1, 1, 0])]).unwrap();
        assert_eq!(ds.n_samples(), 1);
        assert_eq!(ds.n_bits(), 4);
        assert_eq!(ds.row(0), &[0b0000_0110]);
    }

    #[test]
    fn pack_pads_second_byte() {
        let ds = BitDataset::pack(&[vec![true; 9]]).unwrap();
        assert_eq!(ds.row_bytes(), 2);
        assert_eq!(ds.row(0), &[0xFF, 0b0000_0001]);
    }

    #[test]
    fn pack_rejects_ragged_and_empty() {
        assert!(matches!(
            BitDataset::pack(&[bits(&[0, 1]), bits(&[1])]),
            Err(Error::RaggedRows { row: 1, .. })
        ));
        assert!(matches!(BitDataset::pack(&[]), Err(Error::EmptyInput)));
        assert!(matches!(
            BitDataset::pack(&[vec![]]),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn roundtrip_random_57_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<bool>> = (0..100)
            .map(|_| (0..57).map(|_| rng.random()).collect())
            .collect();
        let ds = BitDataset::pack(&rows).unwrap();
        assert_eq!(ds.unpack(), rows);
    }

    #[test]
    fn from_packed_rejects_dirty_padding() {
        let err = BitDataset::from_packed(1, 4, vec![0b0001_0110]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn hamming_identity_and_complement() {
        let ds = BitDataset::pack(&[bits(&[0, 0, 0, 0]), bits(&[1, 0, 1, 0]), bits(&[0, 1, 0, 1])])
            .unwrap();
        assert_eq!(ds.hamming(0, 0), 0);
        assert_eq!(ds.hamming(1, 2), 4);
        assert_eq!(ds.hamming(1, 2), ds.hamming(2, 1));
    }

    #[test]
    fn hamming_matches_bit_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n_bits = 10_000;
        let rows: Vec<Vec<bool>> = (0..40)
            .map(|_| (0..n_bits).map(|_| rng.random()).collect())
            .collect();
        let ds = BitDataset::pack(&rows).unwrap();
        for _ in 0..100 {
            let i = rng.random_range(0..rows.len());
            let j = rng.random_range(0..rows.len());
            let naive = rows[i]
                .iter()
                .zip(&rows[j])
                .filter(|(a, b)| a != b)
                .count() as u64;
            assert_eq!(ds.hamming(i, j), naive);
        }
    }

    #[test]
    fn hamming_between_checks_width() {
        let a = BitDataset::pack(&[bits(&[1, 0, 1])]).unwrap();
        let b = BitDataset::pack(&[bits(&[1, 0, 1, 1])]).unwrap();
        assert!(matches!(
            a.hamming_between(0, &b, 0),
            Err(Error::WidthMismatch { left: 3, right: 4 })
        ));
        assert_eq!(a.hamming_between(0, &a, 0).unwrap(), 0);
    }

    #[test]
    fn binarize_sign_convention() {
        let m = RealMatrix::from_rows(&[vec![-1.5, 0.0, 2.0]]).unwrap();
        let ds = binarize_sign(&m);
        assert_eq!(ds.unpack(), vec![bits(&[0, 0, 1])]);

        let neg = RealMatrix::from_rows(&[vec![-3.0, -0.1, -7.0]]).unwrap();
        assert!(binarize_sign(&neg).unpack()[0].iter().all(|b| !b));
    }

    #[test]
    fn real_matrix_rejects_non_finite() {
        assert!(matches!(
            RealMatrix::from_rows(&[vec![1.0, f64::NAN]]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            RealMatrix::from_rows(&[vec![1.0], vec![f64::INFINITY]]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn quantize_2bit_thresholds() {
        let sigma = 0.8;
        let m = RealMatrix::from_rows(&[vec![-2.0 * sigma, -sigma / 2.0, sigma / 2.0, 2.0 * sigma]])
            .unwrap();
        let ds = quantize_2bit(&m, &ActivationStats { mu: 0.0, sigma }).unwrap();
        assert_eq!(ds.n_bits(), 8);
        assert_eq!(ds.unpack(), vec![bits(&[0, 0, 0, 1, 1, 0, 1, 1])]);
    }

    #[test]
    fn quantize_2bit_zero_maps_to_10() {
        let m = RealMatrix::from_rows(&[vec![0.0]]).unwrap();
        let ds = quantize_2bit(&m, &ActivationStats { mu: 0.0, sigma: 1.0 }).unwrap();
        assert_eq!(ds.unpack(), vec![bits(&[1, 0])]);
    }

    #[test]
    fn quantize_rejects_bad_sigma() {
        let m = RealMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(
            quantize_2bit(&m, &ActivationStats { mu: 0.0, sigma: 0.0 }),
            Err(Error::InvalidSigma(_))
        ));
    }

    #[test]
    fn quantize_interval_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..500).map(|_| rng.random_range(-4.0..4.0)).collect();
        let m = RealMatrix::new(1, values.len(), values.clone()).unwrap();
        let stats = ActivationStats::from_matrix(&m);
        let ds = quantize_2bit(&m, &stats).unwrap();
        for (j, &v) in values.iter().enumerate() {
            let code =
                (u8::from(ds.get_bit(0, 2 * j)) << 1) | u8::from(ds.get_bit(0, 2 * j + 1));
            let s = stats.sigma;
            let ok = match code {
                0b00 => v < -s,
                0b01 => (-s..0.0).contains(&v),
                0b10 => (0.0..s).contains(&v),
                0b11 => v >= s,
                _ => unreachable!(),
            };
            assert!(ok, "value {v} got code {code:02b} with sigma {s}");
        }
    }

    #[test]
    fn potts_encode_binary_expansion() {
        let ds = potts_encode(&[vec![5]], 8).unwrap();
        assert_eq!(ds.unpack(), vec![bits(&[1, 0, 1])]);

        let zeros = potts_encode(&[vec![0; 10]], 8).unwrap();
        assert_eq!(zeros.n_bits(), 30);
        assert!(zeros.unpack()[0].iter().all(|b| !b));
    }

    #[test]
    fn potts_encode_rejects_out_of_range() {
        assert!(matches!(
            potts_encode(&[vec![8]], 8),
            Err(Error::StateOutOfRange { state: 8, q: 8 })
        ));
    }

    #[test]
    fn potts_roundtrip_random_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let states: Vec<Vec<u32>> = (0..20)
            .map(|_| (0..64).map(|_| rng.random_range(0..8)).collect())
            .collect();
        let ds = potts_encode(&states, 8).unwrap();
        assert_eq!(potts_decode(&ds, 8).unwrap(), states);
    }

    #[test]
    fn concat_identity_and_two_bits() {
        let a = BitDataset::pack(&[bits(&[0])]).unwrap();
        let b = BitDataset::pack(&[bits(&[1])]).unwrap();
        assert_eq!(BitDataset::concat(std::slice::from_ref(&a)).unwrap(), a);
        let ab = BitDataset::concat(&[a, b]).unwrap();
        assert_eq!(ab.unpack(), vec![bits(&[0, 1])]);
        assert_eq!(ab.row(0), &[0b0000_0010]);
    }

    #[test]
    fn concat_rejects_sample_mismatch() {
        let a = BitDataset::pack(&[bits(&[0]), bits(&[1])]).unwrap();
        let b = BitDataset::pack(&[bits(&[1])]).unwrap();
        assert!(matches!(
            BitDataset::concat(&[a, b]),
            Err(Error::SampleCountMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn prop_pack_unpack_roundtrip(rows in prop::collection::vec(
            prop::collection::vec(any::<bool>(), 13), 1..20)) {
            let ds = BitDataset::pack(&rows).unwrap();
            prop_assert_eq!(ds.unpack(), rows);
        }

        #[test]
        fn prop_hamming_additivity_under_concat(
            left in prop::collection::vec(prop::collection::vec(any::<bool>(), 11), 2..8),
            width in 1usize..17,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let right: Vec<Vec<bool>> = (0..left.len())
                .map(|_| (0..width).map(|_| rng.random()).collect())
                .collect();
            let a = BitDataset::pack(&left).unwrap();
            let b = BitDataset::pack(&right).unwrap();
            let ab = BitDataset::concat(&[a.clone(), b.clone()]).unwrap();
            for i in 0..a.n_samples() {
                for j in (i + 1)..a.n_samples() {
                    prop_assert_eq!(ab.hamming(i, j), a.hamming(i, j) + b.hamming(i, j));
                }
            }
        }

        #[test]
        fn prop_binarize_elementwise(rows in prop::collection::vec(
            prop::collection::vec(-1e3_f64..1e3, 9), 1..10)) {
            let m = RealMatrix::from_rows(&rows).unwrap();
            let ds = binarize_sign(&m);
            for (i, row) in rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    prop_assert_eq!(ds.get_bit(i, j), v > 0.0);
                }
            }
        }
    }
}
