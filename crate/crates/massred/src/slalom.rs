//! Slaloms: ball traces, index encoding, amplification and block
//! extraction/replication.

use serde::{Deserialize, Serialize};

use crate::base::{need_u64, pow2, Nat, Rat, MAX_BITS};
use crate::codec::{duplicate, BlockFunc};
use crate::error::{Error, Result};
use crate::listcode::{in_ball, CodeFamily};

#[derive(Serialize, Deserialize)]
struct SlalomRepr {
    #[serde(rename = "L")]
    l: usize,
    #[serde(with = "crate::base::dec_vec")]
    bound: Vec<Nat>,
    #[serde(with = "crate::base::dec_vec_vec")]
    entries: Vec<Vec<Nat>>,
}

/// `n ↦ s(n)`, a set of at most `L` values below `bound(n)`, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SlalomRepr", into = "SlalomRepr")]
pub struct Slalom {
    pub l: usize,
    pub bound: Vec<Nat>,
    pub entries: Vec<Vec<Nat>>,
}

impl TryFrom<SlalomRepr> for Slalom {
    type Error = Error;
    fn try_from(r: SlalomRepr) -> Result<Self> {
        Slalom::new(r.l, r.bound, r.entries)
    }
}

impl From<Slalom> for SlalomRepr {
    fn from(s: Slalom) -> Self {
        SlalomRepr {
            l: s.l,
            bound: s.bound,
            entries: s.entries,
        }
    }
}

impl Slalom {
    /// Sorts each entry; rejects duplicates, oversize sets and out-of-bound values.
    pub fn new(l: usize, bound: Vec<Nat>, mut entries: Vec<Vec<Nat>>) -> Result<Self> {
        if bound.len() != entries.len() {
            return Err(Error::LengthMismatch(entries.len(), bound.len()));
        }
        for (n, e) in entries.iter_mut().enumerate() {
            e.sort();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Invalid(format!("duplicate slalom element at n={n}")));
            }
            if e.len() > l {
                return Err(Error::BoundViolation {
                    n,
                    detail: format!("{} elements > L={l}", e.len()),
                });
            }
            if let Some(v) = e.last() {
                if *v >= bound[n] {
                    return Err(Error::BoundViolation {
                        n,
                        detail: format!("{v} >= {}", bound[n]),
                    });
                }
            }
        }
        Ok(Slalom { l, bound, entries })
    }

    /// `n ↦ {y(n)}`.
    pub fn singleton(y: &[Nat], bound: Vec<Nat>) -> Result<Self> {
        Slalom::new(1, bound, y.iter().map(|v| vec![v.clone()]).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, n: usize, v: &Nat) -> bool {
        self.entries[n].binary_search(v).is_ok()
    }

    /// Positions `n` with `y(n) ∈ s(n)`.
    pub fn captures(&self, y: &[Nat]) -> Vec<usize> {
        (0..self.len().min(y.len()))
            .filter(|&n| self.contains(n, &y[n]))
            .collect()
    }
}

/// `s(n) = {i < |C| : d(C_i, x(n)) < q}`.
pub fn ball_trace(x: &BlockFunc, codes: &CodeFamily, q: &Rat) -> Result<Slalom> {
    codes.check_certified(q)?;
    if x.profile.lens() != codes.lens() {
        return Err(Error::LengthMismatch(x.profile.len(), codes.len()));
    }
    let mut entries = Vec::with_capacity(codes.len());
    for (n, v) in x.values.iter().enumerate() {
        let code = codes.code(n);
        let v = need_u64(v, n)?;
        let e = code
            .masks()
            .iter()
            .enumerate()
            .filter(|(_, &w)| in_ball((w ^ v).count_ones(), q, code.r))
            .map(|(i, _)| Nat::from(i))
            .collect();
        entries.push(e);
    }
    let bound = codes.sizes().into_iter().map(Nat::from).collect();
    Slalom::new(codes.l, bound, entries)
}

/// `ỹ(n) = C_{y(n)}`, the `y(n)`-th codeword in increasing order.
pub fn encode_index(y: &[Nat], codes: &CodeFamily) -> Result<BlockFunc> {
    if y.len() != codes.len() {
        return Err(Error::LengthMismatch(y.len(), codes.len()));
    }
    let mut values = Vec::with_capacity(y.len());
    for (n, i) in y.iter().enumerate() {
        let code = codes.code(n);
        let idx = usize::try_from(i)
            .ok()
            .filter(|&i| i < code.size())
            .ok_or_else(|| Error::IndexOutOfRange {
                n,
                index: i.to_string(),
                size: code.size(),
            })?;
        values.push(Nat::from(code.masks()[idx]));
    }
    BlockFunc::new(codes.profile.clone(), values)
}

fn check_nondecreasing(u: &[Nat]) -> Result<()> {
    match u.windows(2).position(|w| w[1] < w[0]) {
        Some(n) => Err(Error::NonMonotone(n + 1)),
        None => Ok(()),
    }
}

/// Splits `s` over `u` into `s₁(n) = s(2n)` and `s₂(n) = s(2n+1) ∩ u(2n)`,
/// both over `w(n) = u(2n)`.
pub fn amplify_d(s: &Slalom) -> Result<(Slalom, Slalom)> {
    if !s.len().is_multiple_of(2) {
        return Err(Error::OddLength(s.len()));
    }
    check_nondecreasing(&s.bound)?;
    let w: Vec<Nat> = s.bound.iter().step_by(2).cloned().collect();
    let s1 = s.entries.iter().step_by(2).cloned().collect();
    let s2 = s
        .entries
        .chunks(2)
        .zip(&w)
        .map(|(pair, b)| pair[1].iter().filter(|v| *v < b).cloned().collect())
        .collect();
    Ok((Slalom::new(s.l, w.clone(), s1)?, Slalom::new(s.l, w, s2)?))
}

/// `ŷ(2n+i) = y(n)`, checking `y(n) < u(2n)` for nondecreasing `u`.
pub fn amplify_b(y: &[Nat], u: &[Nat]) -> Result<Vec<Nat>> {
    if u.len() != 2 * y.len() {
        return Err(Error::LengthMismatch(u.len(), 2 * y.len()));
    }
    check_nondecreasing(u)?;
    for (n, v) in y.iter().enumerate() {
        if *v >= u[2 * n] {
            return Err(Error::BoundViolation {
                n,
                detail: format!("{v} >= u({}) = {}", 2 * n, u[2 * n]),
            });
        }
    }
    Ok(duplicate(y))
}

/// Bits per block at index `n`, i.e. `2^n`.
fn block_width(n: usize) -> Result<u128> {
    if n >= 100 {
        return Err(Error::RangeExceeded(format!("2^{n}-bit blocks")));
    }
    Ok(1u128 << n)
}

/// `v` shifted right by `shift` bits, keeping the low `width` bits.
fn bit_field(v: &Nat, shift: u128, width: u128) -> Nat {
    if shift >= v.bits() as u128 {
        return Nat::default();
    }
    let w = v >> (shift as u64);
    if w.bits() as u128 <= width {
        w
    } else {
        w & (pow2(width as u64) - 1u32)
    }
}

/// Candidate `i` takes block `i` of the `i`-th smallest element of `s(n)`,
/// reading elements as `L` blocks of `2^n` bits, padded with zeros to `L` elements.
pub fn block_extract(s: &Slalom, l: usize) -> Result<Vec<Vec<Nat>>> {
    let widths = (0..s.len()).map(block_width).collect::<Result<Vec<_>>>()?;
    block_extract_widths(s, l, &widths)
}

/// `block_extract` with block width `widths[n]` at index `n`.
pub fn block_extract_widths(s: &Slalom, l: usize, widths: &[u128]) -> Result<Vec<Vec<Nat>>> {
    if widths.len() != s.len() {
        return Err(Error::LengthMismatch(widths.len(), s.len()));
    }
    let mut out = vec![Vec::with_capacity(s.len()); l];
    for (n, e) in s.entries.iter().enumerate() {
        let width = widths[n];
        let total = l as u128 * width;
        if e.len() > l {
            return Err(Error::BoundViolation {
                n,
                detail: format!("{} elements > L={l}", e.len()),
            });
        }
        if let Some(v) = e.iter().find(|v| v.bits() as u128 > total) {
            return Err(Error::BoundViolation {
                n,
                detail: format!("{v} >= 2^{total}"),
            });
        }
        for (i, cand) in out.iter_mut().enumerate() {
            let zero = Nat::default();
            let elem = e.get(i).unwrap_or(&zero);
            cand.push(bit_field(elem, (l - 1 - i) as u128 * width, width));
        }
    }
    Ok(out)
}

/// Same construction as `block_extract`, read as adversaries.
pub fn block_adversaries(s: &Slalom, l: usize) -> Result<Vec<Vec<Nat>>> {
    block_extract(s, l)
}

/// The number whose `L` blocks of `2^n` bits are `blocks[0], …, blocks[L-1]`.
pub fn block_concat(blocks: &[&Nat], n: usize) -> Result<Nat> {
    block_concat_width(blocks, block_width(n)?, n)
}

/// `block_concat` with an explicit block width.
pub fn block_concat_width(blocks: &[&Nat], width: u128, n: usize) -> Result<Nat> {
    let l = blocks.len();
    let mut acc = Nat::default();
    for (i, v) in blocks.iter().enumerate() {
        if v.bits() as u128 > width {
            return Err(Error::BoundViolation {
                n,
                detail: format!("{v} >= 2^{width}"),
            });
        }
        if v.bits() == 0 {
            continue;
        }
        let shift = (l - 1 - i) as u128 * width;
        if shift + width > MAX_BITS as u128 {
            return Err(Error::RangeExceeded(format!("{}-bit value", shift + width)));
        }
        acc |= *v << (shift as u64);
    }
    Ok(acc)
}

/// `y'(n)` has all `L` blocks of `2^n` bits equal to `y(n)`.
pub fn block_replicate(y: &[Nat], l: usize) -> Result<Vec<Nat>> {
    y.iter()
        .enumerate()
        .map(|(n, v)| block_concat(&vec![v; l], n))
        .collect()
}

/// `2^(k·2^n)` for one `n`, or `cap` when that is smaller.
pub fn block_bound_capped(n: usize, k: usize, cap: &Nat) -> Result<Nat> {
    let bits = k as u128 * block_width(n)?;
    if bits >= cap.bits() as u128 {
        Ok(cap.clone())
    } else {
        Ok(pow2(bits as u64))
    }
}

/// `n ↦ 2^(k·2^n)` for `n < len`.
pub fn block_bounds(len: usize, k: usize) -> Result<Vec<Nat>> {
    (0..len)
        .map(|n| {
            let bits = k as u128 * block_width(n)?;
            if bits > MAX_BITS as u128 {
                return Err(Error::RangeExceeded(format!("2^{bits}")));
            }
            Ok(pow2(bits as u64))
        })
        .collect()
}
