//! Sequence kernels and clustering evaluation: bimer count kernels,
//! cosine-normalized Gram matrices, kernel k-means, the Adjusted Rand Index,
//! and a synthetic multi-class sequence generator.

mod ari;
mod cluster;
mod synth;

pub use ari::{adjusted_rand_index, AriValue};
pub use cluster::{kernel_kmeans, kernel_kmeans_detailed, KmeansStats, Partition};
pub use synth::{synth_dataset, SynthConfig, SynthDataset};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::SymMatrix;

/// Symbol alphabet for sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alphabet {
    /// A, C, G, T
    Nucleotide,
    /// The 20 standard amino acids.
    AminoAcid,
}

impl Alphabet {
    pub fn symbols(&self) -> &'static [u8] {
        match self {
            Alphabet::Nucleotide => b"ACGT",
            Alphabet::AminoAcid => b"ACDEFGHIKLMNPQRSTVWY",
        }
    }

    pub fn size(&self) -> usize {
        self.symbols().len()
    }

    pub fn index_of(&self, symbol: u8) -> Option<usize> {
        self.symbols().iter().position(|&s| s == symbol)
    }
}

/// A labeled sequence over a declared alphabet. At least two symbols long
/// (one bimer), every symbol a member of the alphabet.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub id: String,
    pub symbols: String,
    pub alphabet: Alphabet,
    pub class_label: Option<usize>,
}

impl Sequence {
    pub fn new(
        id: impl Into<String>,
        symbols: impl Into<String>,
        alphabet: Alphabet,
        class_label: Option<usize>,
    ) -> Result<Self> {
        let id = id.into();
        let symbols = symbols.into();
        if symbols.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "sequence {id} has length {} (need at least one bimer)",
                symbols.len()
            )));
        }
        for &b in symbols.as_bytes() {
            if alphabet.index_of(b).is_none() {
                return Err(Error::InvalidInput(format!(
                    "sequence {id} contains symbol {:?} outside the alphabet",
                    b as char
                )));
            }
        }
        Ok(Sequence {
            id,
            symbols,
            alphabet,
            class_label,
        })
    }

    /// Vector of overlapping 2-gram counts, alphabet^2 entries.
    pub fn bimer_counts(&self) -> Vec<f64> {
        let k = self.alphabet.size();
        let mut counts = vec![0.0; k * k];
        let bytes = self.symbols.as_bytes();
        for w in bytes.windows(2) {
            let a = self.alphabet.index_of(w[0]).expect("validated");
            let b = self.alphabet.index_of(w[1]).expect("validated");
            counts[a * k + b] += 1.0;
        }
        counts
    }
}

/// Second-order count kernel: the dot product of overlapping bimer counts.
pub fn bimer_kernel(a: &Sequence, b: &Sequence) -> Result<f64> {
    if a.alphabet != b.alphabet {
        return Err(Error::InvalidInput(format!(
            "alphabet mismatch between {} and {}",
            a.id, b.id
        )));
    }
    let ca = a.bimer_counts();
    let cb = b.bimer_counts();
    Ok(ca.iter().zip(&cb).map(|(x, y)| x * y).sum())
}

/// Gram matrix of the bimer kernel over a sequence set. With `normalize`,
/// entries become `k(i,j) / sqrt(k(i,i) k(j,j))` and the diagonal is exactly
/// one.
pub fn gram_matrix(seqs: &[Sequence], normalize: bool) -> Result<SymMatrix> {
    if seqs.is_empty() {
        return Err(Error::InvalidInput("no sequences".to_string()));
    }
    if seqs.iter().any(|s| s.alphabet != seqs[0].alphabet) {
        return Err(Error::InvalidInput(
            "sequences use mixed alphabets".to_string(),
        ));
    }
    let counts: Vec<Vec<f64>> = seqs.iter().map(|s| s.bimer_counts()).collect();
    let dot =
        |i: usize, j: usize| -> f64 { counts[i].iter().zip(&counts[j]).map(|(x, y)| x * y).sum() };
    if normalize {
        let selfs: Vec<f64> = (0..seqs.len()).map(|i| dot(i, i)).collect();
        for (i, &s) in selfs.iter().enumerate() {
            if s <= 0.0 {
                return Err(Error::DegenerateSample(seqs[i].id.clone()));
            }
        }
        Ok(SymMatrix::from_fn(seqs.len(), |i, j| {
            if i == j {
                1.0
            } else {
                dot(i, j) / (selfs[i] * selfs[j]).sqrt()
            }
        }))
    } else {
        Ok(SymMatrix::from_fn(seqs.len(), dot))
    }
}
