//! Block codecs between `2^ĥ`-bounded functions and bit sequences, plus the
//! doubling and interleaving maps.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::base::{nat, pow2, BitString, Nat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Geometric,
    Superexp,
    Explicit,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    kind: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    lens: Vec<usize>,
}

/// Block lengths `ĥ(0..N)` with partial sums `H(n) = Σ_{r≤n} ĥ(r)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct BlockProfile {
    kind: ProfileKind,
    k: Option<u32>,
    lens: Vec<usize>,
    cum: Vec<usize>,
}

impl TryFrom<ProfileRepr> for BlockProfile {
    type Error = Error;
    fn try_from(r: ProfileRepr) -> Result<Self> {
        BlockProfile::new(r.kind, r.k, r.lens)
    }
}

impl From<BlockProfile> for ProfileRepr {
    fn from(p: BlockProfile) -> Self {
        ProfileRepr {
            kind: p.kind,
            k: p.k,
            lens: p.lens,
        }
    }
}

impl BlockProfile {
    pub fn new(kind: ProfileKind, k: Option<u32>, lens: Vec<usize>) -> Result<Self> {
        if let Some(n) = lens.iter().position(|&l| l == 0) {
            return Err(Error::Invalid(format!("block length 0 at n={n}")));
        }
        if kind == ProfileKind::Geometric {
            if let Some(n) = lens.windows(2).position(|w| w[1] < w[0]) {
                return Err(Error::NonMonotone(n + 1));
            }
        }
        let cum = lens
            .iter()
            .scan(0usize, |acc, &l| {
                *acc += l;
                Some(*acc)
            })
            .collect();
        Ok(BlockProfile { kind, k, lens, cum })
    }

    pub fn explicit(lens: Vec<usize>) -> Result<Self> {
        BlockProfile::new(ProfileKind::Explicit, None, lens)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn k(&self) -> Option<u32> {
        self.k
    }

    pub fn lens(&self) -> &[usize] {
        &self.lens
    }

    pub fn len(&self) -> usize {
        self.lens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lens.is_empty()
    }

    /// `H(n)`.
    pub fn h_sum(&self, n: usize) -> usize {
        self.cum[n]
    }

    /// `H(n-1)`, the first position of block `n`.
    pub fn start(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            self.cum[n - 1]
        }
    }

    /// `H(N-1)`.
    pub fn total_len(&self) -> usize {
        self.cum.last().copied().unwrap_or(0)
    }

    pub fn block_range(&self, n: usize) -> std::ops::Range<usize> {
        self.start(n)..self.cum[n]
    }

    /// The value bound `2^ĥ(n)` per block.
    pub fn bounds(&self) -> Vec<Nat> {
        self.lens.iter().map(|&l| pow2(l as u64)).collect()
    }

    /// The first `n` blocks.
    pub fn truncate(&self, n: usize) -> BlockProfile {
        BlockProfile::new(self.kind, self.k, self.lens[..n].to_vec())
            .expect("prefix of a valid profile")
    }
}

/// A function with `values(n) < 2^ĥ(n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFunc {
    pub profile: BlockProfile,
    #[serde(with = "crate::base::dec_vec")]
    pub values: Vec<Nat>,
}

impl BlockFunc {
    pub fn new(profile: BlockProfile, values: Vec<Nat>) -> Result<Self> {
        if values.len() != profile.len() {
            return Err(Error::LengthMismatch(values.len(), profile.len()));
        }
        for (n, v) in values.iter().enumerate() {
            if v.bits() > profile.lens[n] as u64 {
                return Err(Error::BoundViolation {
                    n,
                    detail: format!("{v} >= 2^{}", profile.lens[n]),
                });
            }
        }
        Ok(BlockFunc { profile, values })
    }

    /// Block `n` as a string of length `ĥ(n)`.
    pub fn block(&self, n: usize) -> BitString {
        BitString::from_nat(&self.values[n], self.profile.lens[n])
    }
}

/// `L_h`: concatenate the blocks.
pub fn concat_l(x: &BlockFunc) -> BitString {
    let mut out = BitString::zeros(0);
    for n in 0..x.values.len() {
        out.extend(&x.block(n));
    }
    out
}

/// `K_h`: cut a string of length `H(N-1)` into blocks.
pub fn split_k(profile: &BlockProfile, z: &BitString) -> Result<BlockFunc> {
    if z.len() != profile.total_len() {
        return Err(Error::LengthMismatch(z.len(), profile.total_len()));
    }
    let values = (0..profile.len())
        .map(|n| {
            let r = profile.block_range(n);
            z.slice(r.start, r.end).to_nat()
        })
        .collect();
    Ok(BlockFunc {
        profile: profile.clone(),
        values,
    })
}

/// `[(a^m − 1)/(a − 1), (a^{m+1} − 1)/(a − 1))`, an interval of length `a^m`.
pub fn interval_bounds(a: u64, m: u32) -> Result<(Nat, Nat)> {
    if a < 2 || m < 2 {
        return Err(Error::Invalid(format!(
            "need a >= 2 and m >= 2, got a={a}, m={m}"
        )));
    }
    let a = nat(a);
    let lo = (a.pow(m) - 1u32) / (&a - 1u32);
    let hi = (a.pow(m + 1) - 1u32) / (&a - 1u32);
    Ok((lo, hi))
}

/// Least `k` with `(1 + 1/(2c))^k > 2`, i.e. `(2c+1)^k > 2·(2c)^k`.
pub fn geometric_k(c: u64) -> Result<u32> {
    if c == 0 {
        return Err(Error::Invalid("c must be >= 1".into()));
    }
    let num = nat(2 * c + 1);
    let den = nat(2 * c);
    let (mut pn, mut pd) = (nat(1), nat(1));
    for k in 1u32.. {
        pn *= &num;
        pd *= &den;
        if pn > &pd * 2u32 {
            return Ok(k);
        }
    }
    unreachable!()
}

/// `⌊2^(n/k)⌋` as the integer `k`-th root of `2^n`.
pub fn root_exp2(n: u64, k: u32) -> Result<usize> {
    pow2(n)
        .nth_root(k)
        .to_usize()
        .ok_or_else(|| Error::Invalid(format!("block length 2^({n}/{k}) overflows")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometricProfile {
    pub c: u64,
    pub k: u32,
    pub profile: BlockProfile,
    /// Least `n` with `H(n) ≥ n + 1 + 2c`.
    pub threshold: usize,
}

/// The profile `ĥ(n) = ⌊2^(n/k)⌋` for `n < N`, with the index beyond which
/// `c·ĥ(n+1) ≤ H(n)` is verified to hold.
pub fn geometric_profile(c: u64, n_blocks: usize) -> Result<GeometricProfile> {
    let k = geometric_k(c)?;
    let lens: Vec<usize> = (0..n_blocks as u64)
        .map(|n| root_exp2(n, k))
        .collect::<Result<_>>()?;
    let profile = BlockProfile::new(ProfileKind::Geometric, Some(k), lens)?;
    let two_c = 2 * c as usize;
    let threshold = (0..n_blocks)
        .find(|&n| profile.h_sum(n) >= n + 1 + two_c)
        .ok_or(Error::HorizonTooShort(n_blocks))?;
    for n in threshold..n_blocks.saturating_sub(1) {
        if profile.lens[n + 1] * c as usize > profile.h_sum(n) {
            return Err(Error::ProfileInequality(n));
        }
    }
    Ok(GeometricProfile {
        c,
        k,
        profile,
        threshold,
    })
}

/// `ĥ(m) = max(1, m^m)`, eventually above every `a^m`.
pub fn superexp_profile(n_blocks: usize) -> Result<BlockProfile> {
    let lens = (0..n_blocks)
        .map(|m| (m as u64).checked_pow(m as u32).unwrap_or(u64::MAX).max(1) as usize)
        .collect();
    BlockProfile::new(ProfileKind::Superexp, None, lens)
}

/// `ĥ(m) = a^m`; block `m ≥ 2` then occupies exactly the interval from
/// `interval_bounds(a, m)`.
pub fn power_profile(a: u64, n_blocks: usize) -> Result<BlockProfile> {
    let lens = (0..n_blocks as u32).map(|m| a.pow(m) as usize).collect();
    BlockProfile::explicit(lens)
}

/// `(p0 ⊕ p1)(2m+i) = p_i(m)`.
pub fn interleave(p0: &[Nat], p1: &[Nat]) -> Result<Vec<Nat>> {
    if p0.len() != p1.len() {
        return Err(Error::LengthMismatch(p0.len(), p1.len()));
    }
    Ok(p0
        .iter()
        .zip(p1)
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect())
}

/// `(n ↦ y(2n), n ↦ y(2n+1))`.
pub fn even_odd_split(y: &[Nat]) -> Result<(Vec<Nat>, Vec<Nat>)> {
    if !y.len().is_multiple_of(2) {
        return Err(Error::OddLength(y.len()));
    }
    Ok((
        y.iter().step_by(2).cloned().collect(),
        y.iter().skip(1).step_by(2).cloned().collect(),
    ))
}

/// `ŷ(2n+i) = y(n)`.
pub fn duplicate(y: &[Nat]) -> Vec<Nat> {
    y.iter().flat_map(|v| [v.clone(), v.clone()]).collect()
}
