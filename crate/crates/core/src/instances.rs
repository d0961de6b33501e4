//! Number partitioning instances, partition deltas and the exact oracle.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::BinaryAssignment;
use crate::rng::rng_from;
use crate::{Error, Result};

/// A partition of an instance: `x_i = 1` puts element `i` in subset A.
pub type Partition = BinaryAssignment;

/// Largest total for which `total²` still fits in an `i64`.
pub const MAX_TOTAL: u64 = 3_037_000_499;

/// Default table-size cap for [`optimal_delta`].
pub const DEFAULT_ORACLE_CAP: u64 = 10_000_000;

/// A multiset of positive integers to split into two subsets of equal sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct NppInstance {
    values: Vec<u64>,
    total: u64,
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    values: Vec<u64>,
    seed: u64,
    size_class: usize,
}

impl NppInstance {
    pub fn new(values: Vec<u64>, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("instance must contain at least one value"));
        }
        if let Some(pos) = values.iter().position(|&v| v == 0) {
            return Err(Error::invalid(format!("value at position {pos} is zero")));
        }
        let total = values
            .iter()
            .try_fold(0u64, |acc, &v| acc.checked_add(v))
            .filter(|&t| t <= MAX_TOTAL)
            .ok_or_else(|| Error::ResourceLimit(format!("instance total exceeds {MAX_TOTAL}")))?;
        Ok(NppInstance {
            values,
            total,
            seed,
        })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Sum of all values, written `c` in the QUBO coefficients.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn size_class(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl TryFrom<InstanceFile> for NppInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.size_class != file.values.len() {
            return Err(Error::invalid(format!(
                "size_class {} does not match {} values",
                file.size_class,
                file.values.len()
            )));
        }
        NppInstance::new(file.values, file.seed)
    }
}

impl From<NppInstance> for InstanceFile {
    fn from(inst: NppInstance) -> Self {
        InstanceFile {
            size_class: inst.values.len(),
            values: inst.values,
            seed: inst.seed,
        }
    }
}

/// Generate an instance that admits a perfect partition (delta 0).
///
/// The first `⌈n/2⌉` values are uniform in `[1, max_value]`; the remaining
/// `⌊n/2⌋` values are a uniformly random composition of the same sum.
/// The combined list is shuffled.
pub fn generate_perfect(n: usize, max_value: u64, seed: u64) -> Result<NppInstance> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "perfect instances need n >= 2, got {n}"
        )));
    }
    if max_value == 0 {
        return Err(Error::invalid("max_value must be at least 1"));
    }
    let first = n.div_ceil(2);
    let second = n / 2;
    let bound = (first as u128) * (max_value as u128) * 2;
    if bound > MAX_TOTAL as u128 {
        return Err(Error::ResourceLimit(format!(
            "n = {n} with max_value = {max_value} may exceed the total bound {MAX_TOTAL}"
        )));
    }

    let mut rng = rng_from(seed);
    let mut values: Vec<u64> = (0..first).map(|_| rng.gen_range(1..=max_value)).collect();
    let half: u64 = values.iter().sum();
    if half < second as u64 {
        // unreachable for first >= second, kept for odd splits with tiny totals
        return Err(Error::invalid(format!(
            "cannot split {half} into {second} positive parts"
        )));
    }

    // k parts of `half`: choose k-1 distinct cut points in 1..half
    let mut cuts: Vec<u64> = index::sample(&mut rng, half as usize - 1, second - 1)
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(half)) {
        values.push(c - prev);
        prev = c;
    }
    values.shuffle(&mut rng);
    NppInstance::new(values, seed)
}

/// `|Σ_{x_i=1} a_i − Σ_{x_i=0} a_i|`.
pub fn delta(instance: &NppInstance, partition: &[u8]) -> Result<u64> {
    if partition.len() != instance.len() {
        return Err(Error::invalid(format!(
            "partition has {} entries, instance has {}",
            partition.len(),
            instance.len()
        )));
    }
    Ok(delta_unchecked(instance.values(), partition))
}

pub(crate) fn delta_unchecked(values: &[u64], partition: &[u8]) -> u64 {
    let total: u64 = values.iter().sum();
    let in_a: u64 = values
        .iter()
        .zip(partition)
        .filter(|(_, &x)| x == 1)
        .map(|(v, _)| v)
        .sum();
    (2 * in_a).abs_diff(total)
}

/// Minimum delta over all partitions, using the default table cap.
pub fn optimal_delta(instance: &NppInstance) -> Result<u64> {
    optimal_delta_with_cap(instance, DEFAULT_ORACLE_CAP)
}

/// Minimum delta over all partitions via a bitset subset-sum table.
///
/// Fails with a resource-limit error when the instance total exceeds `cap`.
pub fn optimal_delta_with_cap(instance: &NppInstance, cap: u64) -> Result<u64> {
    let total = instance.total();
    if total > cap {
        return Err(Error::ResourceLimit(format!(
            "subset-sum table of size {total} exceeds cap {cap}"
        )));
    }
    let half = (total / 2) as usize;
    let words = half / 64 + 1;
    let mut reach = vec![0u64; words];
    reach[0] = 1;
    let tail_mask = if (half + 1).is_multiple_of(64) {
        u64::MAX
    } else {
        (1u64 << ((half + 1) % 64)) - 1
    };

    for &a in instance.values() {
        let a = a as usize;
        if a > half {
            continue;
        }
        let (ws, bs) = (a / 64, a % 64);
        for w in (ws..words).rev() {
            let mut shifted = reach[w - ws] << bs;
            if bs > 0 && w > ws {
                shifted |= reach[w - ws - 1] >> (64 - bs);
            }
            reach[w] |= shifted;
        }
        reach[words - 1] &= tail_mask;
    }

    let best = (0..words)
        .rev()
        .find(|&w| reach[w] != 0)
        .map(|w| w * 64 + 63 - reach[w].leading_zeros() as usize)
        .expect("empty sum is always reachable");
    Ok(total - 2 * best as u64)
}

/// Equal-width histogram of the instance values over `[min, max]`.
///
/// Returns `(lower_edge, count)` per bin. A degenerate range (all values
/// equal) is widened to `[min, min + 1]`.
pub fn histogram(instance: &NppInstance, bins: usize) -> Result<Vec<(f64, usize)>> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let lo = *instance
        .values()
        .iter()
        .min()
        .expect("instances are nonempty") as f64;
    let hi = *instance
        .values()
        .iter()
        .max()
        .expect("instances are nonempty") as f64;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let width = span / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in instance.values() {
        let b = (((v as f64 - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(values: &[u64]) -> NppInstance {
        NppInstance::new(values.to_vec(), 0).unwrap()
    }

    /// Exhaustive minimum over all 2^n partitions.
    fn brute_force_delta(values: &[u64]) -> u64 {
        let n = values.len();
        let total: u64 = values.iter().sum();
        (0u64..1 << n)
            .map(|mask| {
                let s: u64 = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| values[i])
                    .sum();
                (2 * s).abs_diff(total)
            })
            .min()
            .unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&inst(&[1, 2, 3]), &[0, 0, 1]).unwrap(), 0);
        assert_eq!(delta(&inst(&[5]), &[0]).unwrap(), 5);
        assert_eq!(delta(&inst(&[4, 5, 6, 7, 8]), &[0, 0, 0, 1, 1]).unwrap(), 0);
        assert_eq!(brute_force_delta(&[4, 5, 6, 7, 8]), 0);
        assert!(matches!(
            delta(&inst(&[1, 2]), &[1]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(optimal_delta(&inst(&[9, 9])).unwrap(), 0);
        assert_eq!(brute_force_delta(&[3, 1, 1]), 1);
        assert_eq!(optimal_delta(&inst(&[3, 1, 1])).unwrap(), 1);
        assert_eq!(optimal_delta(&inst(&[7])).unwrap(), 7);
    }

    #[test]
    fn oracle_handles_word_boundaries() {
        // totals around multiples of 128 exercise the cross-word shift
        for values in [
            vec![64, 64],
            vec![63, 65, 1, 1],
            vec![127, 129],
            vec![200, 56, 1],
        ] {
            assert_eq!(
                optimal_delta(&inst(&values)).unwrap(),
                brute_force_delta(&values)
            );
        }
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let i = inst(&[600, 600]);
        assert!(matches!(
            optimal_delta_with_cap(&i, 1000),
            Err(Error::ResourceLimit(_))
        ));
        assert_eq!(optimal_delta_with_cap(&i, 1200).unwrap(), 0);
    }

    #[test]
    fn generate_two_elements_gives_equal_pair() {
        let i = generate_perfect(2, 10, 7).unwrap();
        let v = i.values();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], v[1]);
        assert!((1..=10).contains(&v[0]));
    }

    #[test]
    fn generate_small_and_large_are_perfect() {
        let i = generate_perfect(4, 5, 3).unwrap();
        assert_eq!(i.total() % 2, 0);
        assert_eq!(brute_force_delta(i.values()), 0);
        let big = generate_perfect(100, 100, 1).unwrap();
        assert_eq!(optimal_delta(&big).unwrap(), 0);
        assert_eq!(big.size_class(), 100);
    }

    #[test]
    fn generate_rejects_bad_arguments() {
        assert!(matches!(
            generate_perfect(1, 10, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            generate_perfect(4, 0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            generate_perfect(10, u64::MAX / 4, 0),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn odd_sizes_are_supported() {
        for n in [3, 5, 11, 17] {
            let i = generate_perfect(n, 50, n as u64).unwrap();
            assert_eq!(i.len(), n);
            assert_eq!(brute_force_delta(i.values()), 0);
        }
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(histogram(&inst(&[1, 1, 1]), 1).unwrap(), vec![(1.0, 3)]);
        assert_eq!(
            histogram(&inst(&[1, 2, 3, 4]), 2).unwrap(),
            vec![(1.0, 2), (2.5, 2)]
        );
        let h = histogram(&inst(&[10]), 3).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h.iter().map(|b| b.1).sum::<usize>(), 1);
        assert!(histogram(&inst(&[1]), 0).is_err());
    }

    #[test]
    fn instance_file_validates() {
        let i = generate_perfect(6, 20, 11).unwrap();
        let json = i.to_json().unwrap();
        assert!(json.contains("\"size_class\":6"));
        assert_eq!(NppInstance::from_json(&json).unwrap(), i);
        assert!(NppInstance::from_json(r#"{"values":[1,2],"seed":0,"size_class":3}"#).is_err());
        assert!(NppInstance::from_json(r#"{"values":[0,2],"seed":0,"size_class":2}"#).is_err());
    }

    proptest! {
        #[test]
        fn oracle_matches_enumeration(values in prop::collection::vec(1u64..200, 1..=14)) {
            prop_assert_eq!(optimal_delta(&inst(&values)).unwrap(), brute_force_delta(&values));
        }

        #[test]
        fn delta_complement_and_parity(
            values in prop::collection::vec(1u64..1000, 1..40),
            bits in prop::collection::vec(0u8..=1, 40),
        ) {
            let i = inst(&values);
            let p = &bits[..values.len()];
            let d = delta(&i, p).unwrap();
            let comp: Vec<u8> = p.iter().map(|b| 1 - b).collect();
            prop_assert_eq!(d, delta(&i, &comp).unwrap());
            prop_assert_eq!(d % 2, i.total() % 2);
            prop_assert_eq!(optimal_delta(&i).unwrap() % 2, i.total() % 2);
        }

        #[test]
        fn generated_instances_are_perfect(n in 2usize..60, max in 1u64..500, seed: u64) {
            let i = generate_perfect(n, max, seed).unwrap();
            prop_assert_eq!(optimal_delta(&i).unwrap(), 0);
            prop_assert_eq!(&i, &generate_perfect(n, max, seed).unwrap());
        }
    }
}
