//! Multiplicity vectors of integer partitions.

/// One solution `(k_1, ..., k_s)` of `sum_j j * k_j = s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionMultiset {
    multiplicities: Vec<u32>,
}

impl PartitionMultiset {
    /// `k[j-1]` is the multiplicity of part `j`.
    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// The integer being partitioned, `sum_j j * k_j`.
    pub fn total(&self) -> usize {
        self.multiplicities
            .iter()
            .enumerate()
            .map(|(i, &k)| (i + 1) * k as usize)
            .sum()
    }

    /// Number of parts, `sum_j k_j`.
    pub fn parts(&self) -> usize {
        self.multiplicities.iter().map(|&k| k as usize).sum()
    }
}

/// All multiplicity vectors for `s`, each of length `s`.
///
/// Order is colexicographic: vectors compare from `k_s` down to `k_1`, so
/// for `s = 4` the sequence is `(4,0,0,0), (2,1,0,0), (0,2,0,0), (1,0,1,0),
/// (0,0,0,1)`. The order is fixed so partition sums are bit-reproducible.
pub fn enumerate_partitions(s: usize) -> Vec<PartitionMultiset> {
    let mut out = Vec::new();
    if s == 0 {
        out.push(PartitionMultiset {
            multiplicities: Vec::new(),
        });
        return out;
    }
    let mut k = vec![0u32; s];
    fill(s, s, &mut k, &mut out);
    out
}

fn fill(part: usize, remaining: usize, k: &mut [u32], out: &mut Vec<PartitionMultiset>) {
    if part == 1 {
        k[0] = remaining as u32;
        out.push(PartitionMultiset {
            multiplicities: k.to_vec(),
        });
        return;
    }
    for count in 0..=remaining / part {
        k[part - 1] = count as u32;
        fill(part - 1, remaining - count * part, k, out);
    }
    k[part - 1] = 0;
}
