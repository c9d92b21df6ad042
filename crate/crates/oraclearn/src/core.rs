//! Finite domains, labelings, explicit and hidden concept classes, and the
//! exact brute-force dimension computations used as test oracles everywhere
//! else.
//!
//! Domains are index sets `[0, T)`. A hidden ordering over the domain is a
//! permutation `perm` where `perm[i]` is the rank of point `i`. Labelings are
//! fixed-width bit vectors; classes are sorted, deduplicated sets so that
//! equality is canonical.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A domain point is an index in `[0, T)` for the ambient trial length `T`.
pub type DomainPoint = usize;

/// Default cap on the number of labelings `expand` may materialize.
pub const DEFAULT_MAX_EXPAND: usize = 1 << 20;

/// Cap used by `expand`, overridable through `ORACLEARN_MAX_EXPAND`.
pub fn max_expand_cap() -> usize {
    std::env::var("ORACLEARN_MAX_EXPAND")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_EXPAND)
}

/// A total assignment of binary labels to a finite indexed domain. Doubles as
/// "concept restricted to the T instances".
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeling {
    bits: Vec<bool>,
}

impl Labeling {
    pub fn new(bits: Vec<bool>) -> Self {
        Labeling { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Labeling { bits: vec![false; len] }
    }

    pub fn constant(len: usize, value: bool) -> Self {
        Labeling { bits: vec![value; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, point: DomainPoint) -> bool {
        self.bits[point]
    }

    pub fn set(&mut self, point: DomainPoint, value: bool) {
        self.bits[point] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Labeling) -> usize {
        debug_assert_eq!(self.len(), other.len());
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// True iff the labeling agrees with every pair in the sample.
    pub fn is_consistent(&self, sample: &LabeledSample) -> bool {
        sample.pairs().iter().all(|&(p, y)| self.bits[p] == y)
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Labeling({self})")
    }
}

impl FromStr for Labeling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::InvalidConfig(format!("bad labeling char {c:?}"))),
            }
        }
        Ok(Labeling { bits })
    }
}

/// True iff `labeling` agrees with every pair in `sample`.
pub fn is_consistent(labeling: &Labeling, sample: &LabeledSample) -> bool {
    labeling.is_consistent(sample)
}

/// A set of labeled points. Conflicting duplicates are rejected at
/// construction; consistent duplicates are deduplicated. Pairs are kept sorted
/// by point so equality is canonical.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct LabeledSample {
    pairs: Vec<(DomainPoint, bool)>,
}

impl LabeledSample {
    pub fn new(mut pairs: Vec<(DomainPoint, bool)>) -> Result<Self> {
        pairs.sort_unstable();
        pairs.dedup();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::ConflictingSample(w[0].0));
            }
        }
        Ok(LabeledSample { pairs })
    }

    pub fn empty() -> Self {
        LabeledSample::default()
    }

    pub fn pairs(&self) -> &[(DomainPoint, bool)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, point: DomainPoint) -> Option<bool> {
        self.pairs
            .binary_search_by_key(&point, |&(p, _)| p)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn contains_point(&self, point: DomainPoint) -> bool {
        self.get(point).is_some()
    }

    /// Returns a copy extended by `(point, label)`.
    pub fn with(&self, point: DomainPoint, label: bool) -> Result<Self> {
        match self.get(point) {
            Some(y) if y != label => Err(Error::ConflictingSample(point)),
            _ => {
                let mut pairs = self.pairs.clone();
                let pos = pairs.partition_point(|&(p, _)| p < point);
                if pairs.get(pos).map(|&(p, _)| p) != Some(point) {
                    pairs.insert(pos, (point, label));
                }
                Ok(LabeledSample { pairs })
            }
        }
    }

    /// True iff every pair of `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &LabeledSample) -> bool {
        self.pairs.iter().all(|&(p, y)| other.get(p) == Some(y))
    }

    pub fn max_point(&self) -> Option<DomainPoint> {
        self.pairs.last().map(|&(p, _)| p)
    }
}

impl fmt::Debug for LabeledSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (p, y)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}:{}", u8::from(*y))?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for LabeledSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, y)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}:{}", u8::from(*y))?;
        }
        Ok(())
    }
}

/// A finite set of labelings of identical length, sorted and deduplicated.
#[derive(Clone, PartialEq, Eq)]
pub struct ExplicitClass {
    domain_size: usize,
    labelings: Vec<Labeling>,
}

impl ExplicitClass {
    pub fn new(mut labelings: Vec<Labeling>) -> Result<Self> {
        let domain_size = match labelings.first() {
            Some(l) => l.len(),
            None => return Err(Error::InvalidConfig("explicit class must be nonempty".into())),
        };
        if labelings.iter().any(|l| l.len() != domain_size) {
            return Err(Error::InvalidConfig(
                "labelings in a class must all have the same length".into(),
            ));
        }
        labelings.sort();
        labelings.dedup();
        Ok(ExplicitClass { domain_size, labelings })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn len(&self) -> usize {
        self.labelings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labelings.is_empty()
    }

    pub fn labelings(&self) -> &[Labeling] {
        &self.labelings
    }

    pub fn contains(&self, labeling: &Labeling) -> bool {
        self.labelings.binary_search(labeling).is_ok()
    }

    /// Indices of the labelings consistent with `sample`.
    pub fn consistent_indices(&self, sample: &LabeledSample) -> Vec<u32> {
        self.labelings
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_consistent(sample))
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Canonical serialization: newline-separated labeling strings in sorted
    /// order.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::with_capacity(self.labelings.len() * (self.domain_size + 1));
        for l in &self.labelings {
            out.push_str(&l.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_canonical_string(s: &str) -> Result<Self> {
        let labelings = s
            .lines()
            .filter(|l| !l.is_empty())
            .map(Labeling::from_str)
            .collect::<Result<Vec<_>>>()?;
        ExplicitClass::new(labelings)
    }
}

impl fmt::Debug for ExplicitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExplicitClass[T={}, n={}]", self.domain_size, self.labelings.len())
    }
}

/// A concept class described by hidden structure, whose realizability
/// questions are decided analytically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HiddenClassSpec {
    /// Thresholds over a hidden ordering: `c_j(x) = 1` iff `rank(x) >= j` for
    /// `j` in `[0, T]`. `perm[i]` is the rank of point `i`.
    Threshold { perm: Vec<usize> },
    /// Unions of at most `k` rank-intervals labeled 1.
    KIntervals { perm: Vec<usize>, k: usize },
    /// Concepts differing from `center` on at most `d` points.
    HammingBall { center: Labeling, d: usize },
    /// The nested-cell construction: `z` holds `T - 1` secret coordinates as
    /// 62-bit-grained uniform rationals, `b` the secret label bits.
    NestedCells { z: Vec<u64>, b: Vec<bool> },
}

impl HiddenClassSpec {
    pub fn domain_size(&self) -> usize {
        match self {
            HiddenClassSpec::Threshold { perm } => perm.len(),
            HiddenClassSpec::KIntervals { perm, .. } => perm.len(),
            HiddenClassSpec::HammingBall { center, .. } => center.len(),
            HiddenClassSpec::NestedCells { b, .. } => b.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HiddenClassSpec::Threshold { perm } | HiddenClassSpec::KIntervals { perm, .. } => {
                let mut seen = vec![false; perm.len()];
                for &r in perm {
                    if r >= perm.len() || seen[r] {
                        return Err(Error::InvalidConfig("perm must be a bijection on [0,T)".into()));
                    }
                    seen[r] = true;
                }
                if let HiddenClassSpec::KIntervals { k, .. } = self {
                    if *k == 0 {
                        return Err(Error::InvalidConfig("k must be >= 1".into()));
                    }
                }
                Ok(())
            }
            HiddenClassSpec::HammingBall { .. } => Ok(()),
            HiddenClassSpec::NestedCells { z, b } => {
                if z.len() + 1 != b.len() {
                    return Err(Error::InvalidConfig("z must have length T - 1".into()));
                }
                let mut sorted = z.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != z.len() {
                    return Err(Error::InvalidConfig("z entries must be pairwise distinct".into()));
                }
                Ok(())
            }
        }
    }
}

/// Materializes a hidden class on `[0, T)` for brute-force cross-checks. Only
/// legal for small `T`; `NestedCells` is not expandable.
pub fn expand(spec: &HiddenClassSpec, t: usize) -> Result<ExplicitClass> {
    let cap = max_expand_cap();
    match spec {
        HiddenClassSpec::NestedCells { .. } => {
            Err(Error::Unsupported("NestedCells cannot be expanded".into()))
        }
        HiddenClassSpec::Threshold { perm } => {
            check_expand_size(t, t + 1, cap)?;
            ensure_perm_len(perm, t)?;
            let labelings = (0..=t)
                .map(|j| Labeling::new((0..t).map(|i| perm[i] >= j).collect()))
                .collect();
            ExplicitClass::new(labelings)
        }
        HiddenClassSpec::KIntervals { perm, k } => {
            ensure_perm_len(perm, t)?;
            let rank_patterns = k_interval_rank_patterns(t, *k, cap)?;
            check_expand_size(t, rank_patterns.len(), cap)?;
            let labelings = rank_patterns
                .into_iter()
                .map(|rp| Labeling::new((0..t).map(|i| rp[perm[i]]).collect()))
                .collect();
            ExplicitClass::new(labelings)
        }
        HiddenClassSpec::HammingBall { center, d } => {
            if center.len() != t {
                return Err(Error::InvalidConfig("center length must equal T".into()));
            }
            let count = ball_size(t, *d);
            check_expand_size(t, count, cap)?;
            let mut labelings = Vec::with_capacity(count);
            let mut flips: Vec<usize> = Vec::new();
            collect_ball(center, *d, 0, &mut flips, &mut labelings);
            ExplicitClass::new(labelings)
        }
    }
}

fn ensure_perm_len(perm: &[usize], t: usize) -> Result<()> {
    if perm.len() != t {
        return Err(Error::InvalidConfig("perm length must equal T".into()));
    }
    Ok(())
}

fn check_expand_size(t: usize, count: usize, cap: usize) -> Result<()> {
    if t > 24 {
        return Err(Error::DomainTooLarge(format!("expand supports T <= 24, got {t}")));
    }
    if count > cap {
        return Err(Error::DomainTooLarge(format!(
            "expansion would produce {count} labelings, cap is {cap}"
        )));
    }
    Ok(())
}

/// Binomial-sum size of a radius-`d` Hamming ball on `t` points.
fn ball_size(t: usize, d: usize) -> usize {
    let mut total: usize = 0;
    let mut binom: usize = 1;
    for i in 0..=d.min(t) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul(t - i) / (i + 1);
    }
    total
}

fn collect_ball(center: &Labeling, d: usize, from: usize, flips: &mut Vec<usize>, out: &mut Vec<Labeling>) {
    let mut bits = center.bits().to_vec();
    for &f in flips.iter() {
        bits[f] = !bits[f];
    }
    out.push(Labeling::new(bits));
    if flips.len() == d {
        return;
    }
    for i in from..center.len() {
        flips.push(i);
        collect_ball(center, d, i + 1, flips, out);
        flips.pop();
    }
}

/// All bit patterns of length `t` (in rank space) whose 1s form at most `k`
/// maximal blocks.
/// All bit patterns of length `n` whose 1s form at most `k` maximal blocks.
pub fn k_interval_patterns(n: usize, k: usize) -> Result<Vec<Vec<bool>>> {
    k_interval_rank_patterns(n, k, max_expand_cap())
}

fn k_interval_rank_patterns(t: usize, k: usize, cap: usize) -> Result<Vec<Vec<bool>>> {
    let mut out: Vec<Vec<bool>> = Vec::new();
    let mut cur = vec![false; t];
    fn rec(
        pos: usize,
        t: usize,
        k: usize,
        blocks: usize,
        cur: &mut Vec<bool>,
        out: &mut Vec<Vec<bool>>,
        cap: usize,
    ) -> Result<()> {
        if out.len() > cap {
            return Err(Error::DomainTooLarge(format!(
                "k-interval expansion exceeds cap {cap}"
            )));
        }
        if pos == t {
            out.push(cur.clone());
            return Ok(());
        }
        let prev_one = pos > 0 && cur[pos - 1];
        cur[pos] = false;
        rec(pos + 1, t, k, blocks, cur, out, cap)?;
        let new_blocks = if prev_one { blocks } else { blocks + 1 };
        if new_blocks <= k {
            cur[pos] = true;
            rec(pos + 1, t, k, new_blocks, cur, out, cap)?;
            cur[pos] = false;
        }
        Ok(())
    }
    rec(0, t, k, 0, &mut cur, &mut out, cap)?;
    Ok(out)
}

/// Exact VC dimension by checking shattering of subsets in increasing size
/// with early termination.
pub fn vc_dimension(class: &ExplicitClass) -> Result<usize> {
    let t = class.domain_size();
    if t > 24 {
        return Err(Error::DomainTooLarge(format!("vc_dimension supports T <= 24, got {t}")));
    }
    let log_bound = usize::BITS as usize - 1 - (class.len().leading_zeros() as usize).min(usize::BITS as usize - 1);
    let max_m = t.min(floor_log2(class.len()));
    let _ = log_bound;
    let mut best = 0;
    for m in 1..=max_m {
        if !any_subset_shattered(class, m) {
            break;
        }
        best = m;
    }
    Ok(best)
}

fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

fn any_subset_shattered(class: &ExplicitClass, m: usize) -> bool {
    let t = class.domain_size();
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        if is_shattered(class, &subset) {
            return true;
        }
        // Advance to the next m-combination of [0, t).
        let mut i = m;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if subset[i] != i + t - m {
                subset[i] += 1;
                for j in i + 1..m {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn is_shattered(class: &ExplicitClass, subset: &[usize]) -> bool {
    let m = subset.len();
    if class.len() < (1usize << m) {
        return false;
    }
    let mut seen = vec![false; 1 << m];
    let mut count = 0usize;
    for l in class.labelings() {
        let mut pat = 0usize;
        for (b, &p) in subset.iter().enumerate() {
            if l.get(p) {
                pat |= 1 << b;
            }
        }
        if !seen[pat] {
            seen[pat] = true;
            count += 1;
            if count == 1 << m {
                return true;
            }
        }
    }
    false
}

/// Memoizing solver for the Littlestone-dimension game value over version
/// spaces of a fixed class. Version spaces are canonicalized as sorted index
/// lists into the class, so repeated subtrees are shared.
pub struct LittlestoneSolver<'a> {
    class: &'a ExplicitClass,
    memo: HashMap<Vec<u32>, usize>,
}

impl<'a> LittlestoneSolver<'a> {
    pub fn new(class: &'a ExplicitClass) -> Self {
        LittlestoneSolver { class, memo: HashMap::new() }
    }

    /// Game value of the version space given by `subset` (sorted indices into
    /// the class): `d(V) = max_x 1 + min(d(V|x=0), d(V|x=1))` over points
    /// where both restrictions are nonempty, else 0.
    pub fn dim(&mut self, subset: &[u32]) -> usize {
        if subset.len() <= 1 {
            return 0;
        }
        if let Some(&v) = self.memo.get(subset) {
            return v;
        }
        let t = self.class.domain_size();
        let labelings = self.class.labelings();
        let mut best = 0;
        let upper = floor_log2(subset.len());
        for x in 0..t {
            let (mut zeros, mut ones) = (Vec::new(), Vec::new());
            for &i in subset {
                if labelings[i as usize].get(x) {
                    ones.push(i);
                } else {
                    zeros.push(i);
                }
            }
            if zeros.is_empty() || ones.is_empty() {
                continue;
            }
            let v = 1 + self.dim(&zeros).min(self.dim(&ones));
            if v > best {
                best = v;
                if best == upper {
                    break;
                }
            }
        }
        self.memo.insert(subset.to_vec(), best);
        best
    }

    pub fn dim_full(&mut self) -> usize {
        let all: Vec<u32> = (0..self.class.len() as u32).collect();
        self.dim(&all)
    }
}

/// Exact Littlestone dimension via the memoized recursive game value.
pub fn littlestone_dimension(class: &ExplicitClass) -> Result<usize> {
    if class.domain_size() > 16 {
        return Err(Error::DomainTooLarge(format!(
            "littlestone_dimension supports T <= 16, got {}",
            class.domain_size()
        )));
    }
    if class.len() > 4096 {
        return Err(Error::DomainTooLarge(format!(
            "littlestone_dimension supports at most 4096 labelings, got {}",
            class.len()
        )));
    }
    Ok(LittlestoneSolver::new(class).dim_full())
}

/// Sauer-Shelah bound: sum_{i<=d} C(t, i).
pub fn sauer_bound(d: usize, t: usize) -> usize {
    ball_size(t, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_perm(t: usize) -> Vec<usize> {
        (0..t).collect()
    }

    #[test]
    fn threshold_expand_small() {
        let class = expand(&HiddenClassSpec::Threshold { perm: identity_perm(3) }, 3).unwrap();
        let got: Vec<String> = class.labelings().iter().map(|l| l.to_string()).collect();
        assert_eq!(got, vec!["000", "001", "011", "111"]);
    }

    #[test]
    fn hamming_radius_zero_is_singleton() {
        let spec = HiddenClassSpec::HammingBall { center: Labeling::zeros(4), d: 0 };
        let class = expand(&spec, 4).unwrap();
        assert_eq!(class.len(), 1);
        assert_eq!(class.labelings()[0].to_string(), "0000");
    }

    #[test]
    fn k_interval_count_t4_k1() {
        let spec = HiddenClassSpec::KIntervals { perm: identity_perm(4), k: 1 };
        let class = expand(&spec, 4).unwrap();
        // Frozen via independent enumeration: of the 16 labelings of 4 points,
        // 11 have their 1s in at most one contiguous block.
        assert_eq!(class.len(), 11);
    }

    #[test]
    fn nested_cells_not_expandable() {
        let spec = HiddenClassSpec::NestedCells { z: vec![1, 2, 3], b: vec![false; 4] };
        assert!(matches!(expand(&spec, 4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sample_rejects_conflicts() {
        assert!(LabeledSample::new(vec![(0, true), (0, false)]).is_err());
        let s = LabeledSample::new(vec![(2, true), (0, false), (2, true)]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(2), Some(true));
    }

    #[test]
    fn consistency_basics() {
        let l: Labeling = "0110".parse().unwrap();
        let s = LabeledSample::new(vec![(1, true), (2, true)]).unwrap();
        assert!(is_consistent(&l, &s));
        let s2 = LabeledSample::new(vec![(0, true)]).unwrap();
        assert!(!is_consistent(&l, &s2));
        assert!(is_consistent(&l, &LabeledSample::empty()));
    }

    #[test]
    fn vc_of_singleton_is_zero() {
        let class = ExplicitClass::new(vec![Labeling::zeros(4)]).unwrap();
        assert_eq!(vc_dimension(&class).unwrap(), 0);
    }

    #[test]
    fn littlestone_of_full_cube() {
        let mut labelings = Vec::new();
        for m in 0..16u32 {
            labelings.push(Labeling::new((0..4).map(|i| m >> i & 1 == 1).collect()));
        }
        let class = ExplicitClass::new(labelings).unwrap();
        assert_eq!(littlestone_dimension(&class).unwrap(), 4);
    }

    #[test]
    fn canonical_roundtrip() {
        let spec = HiddenClassSpec::Threshold { perm: identity_perm(5) };
        let class = expand(&spec, 5).unwrap();
        let s = class.to_canonical_string();
        let back = ExplicitClass::from_canonical_string(&s).unwrap();
        assert_eq!(class, back);
    }
}
