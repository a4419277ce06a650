//! Composed pipelines between density, block, slalom and function problems,
//! stage-wise adversary transforms, and agreement-density estimators.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::base::{
    check_co_relation, iff_seq, lower_density_estimate, nat, rat, rat_parts, BitString, Horizon,
    Nat, Operand, Rat, RelationKind,
};
use crate::codec::{concat_l, geometric_profile, interleave, split_k, BlockFunc, BlockProfile};
use crate::error::{Error, Result};
use crate::listcode::{ball_radius, code_family, CodeFamily, ListCode};
use crate::slalom::{
    amplify_b, amplify_d, ball_trace, block_bound_capped, block_concat, block_extract,
    block_replicate, encode_index, Slalom,
};

/// Experiment parameters: `q = p + 2/c`, `j` doublings, list size `L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(with = "crate::base::rat_json")]
    pub p: Rat,
    pub c: u64,
    pub j: u32,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(with = "crate::base::rat_json")]
    pub rate: Rat,
    pub horizon: Horizon,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    pub fn q(&self) -> Rat {
        &self.p + rat(2, self.c.max(1))
    }
}

/// A validated configuration with its profile and certified codes.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: PipelineConfig,
    pub q: Rat,
    pub profile: BlockProfile,
    pub threshold: Option<usize>,
    pub codes: CodeFamily,
}

fn family_cache() -> &'static Mutex<HashMap<String, CodeFamily>> {
    static CACHE: OnceLock<Mutex<HashMap<String, CodeFamily>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `code_family`, memoized across calls.
pub fn cached_code_family(
    profile: &BlockProfile,
    q: &Rat,
    l: usize,
    rate: &Rat,
) -> Result<CodeFamily> {
    let key = format!("{:?}|{q}|{l}|{rate}", profile.lens());
    if let Some(f) = family_cache().lock().unwrap().get(&key) {
        return Ok(f.clone());
    }
    let f = code_family(profile, q, l, rate)?;
    family_cache().lock().unwrap().insert(key, f.clone());
    Ok(f)
}

fn incompatible(msg: impl Into<String>) -> Error {
    Error::ConfigIncompatible(msg.into())
}

impl Setup {
    /// Geometric profile of `N` blocks for `c`, lex-greedy codes at radius `q`.
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        Self::check_params(&cfg)?;
        let g = geometric_profile(cfg.c, cfg.horizon.n)?;
        let q = cfg.q();
        let codes = cached_code_family(&g.profile, &q, cfg.l, &cfg.rate)?;
        let mut s = Self::custom(cfg, g.profile, codes)?;
        s.threshold = Some(g.threshold);
        Ok(s)
    }

    /// Any profile, with lex-greedy codes at radius `q`.
    pub fn with_profile(cfg: PipelineConfig, profile: BlockProfile) -> Result<Self> {
        Self::check_params(&cfg)?;
        let codes = cached_code_family(&profile, &cfg.q(), cfg.l, &cfg.rate)?;
        Self::custom(cfg, profile, codes)
    }

    /// Any profile, with a supplied family certified at `q`.
    pub fn custom(cfg: PipelineConfig, profile: BlockProfile, codes: CodeFamily) -> Result<Self> {
        Self::check_params(&cfg)?;
        let q = cfg.q();
        if profile.len() != cfg.horizon.n {
            return Err(incompatible(format!(
                "profile has {} blocks, horizon N={}",
                profile.len(),
                cfg.horizon.n
            )));
        }
        if codes.lens() != profile.lens() {
            return Err(incompatible("code family does not match profile"));
        }
        if codes.l != cfg.l {
            return Err(incompatible(format!(
                "codes have L={}, config L={}",
                codes.l, cfg.l
            )));
        }
        codes.check_certified(&q)?;
        Ok(Setup {
            cfg,
            q,
            profile,
            threshold: None,
            codes,
        })
    }

    fn check_params(cfg: &PipelineConfig) -> Result<()> {
        cfg.horizon.validate()?;
        let half = rat(1, 2);
        if cfg.p <= rat(0, 1) || cfg.p >= half {
            return Err(incompatible(format!("p={} outside (0, 1/2)", cfg.p)));
        }
        if cfg.c == 0 || cfg.q() >= half {
            return Err(incompatible(format!(
                "q = p + 2/c = {} is not below 1/2",
                cfg.q()
            )));
        }
        if cfg.l == 0 {
            return Err(incompatible("L must be >= 1"));
        }
        if cfg.j >= 16 || !cfg.horizon.n.is_multiple_of(1usize << cfg.j) {
            return Err(incompatible(format!(
                "N={} not divisible by 2^{}",
                cfg.horizon.n, cfg.j
            )));
        }
        Ok(())
    }

    pub fn doublings(&self) -> usize {
        1 << self.cfg.j
    }

    /// Length of final-side functions, `N / 2^j`.
    pub fn final_len(&self) -> usize {
        self.cfg.horizon.n >> self.cfg.j
    }

    /// First final index covering only tail blocks.
    pub fn final_tail(&self) -> usize {
        self.cfg.horizon.tail.div_ceil(self.doublings())
    }

    /// The horizon in bits: `[H(tail−1), H(N−1))`.
    pub fn bit_horizon(&self) -> Horizon {
        let h = &self.cfg.horizon;
        Horizon {
            n: self.profile.total_len(),
            tail: self.profile.start(h.tail),
            hits: h.hits,
        }
    }

    /// `u(n) = |C_{ĥ(n)}|`.
    pub fn sizes(&self) -> Vec<Nat> {
        self.codes.sizes().into_iter().map(Nat::from).collect()
    }

    /// Final adversaries must replicate below `u(2^j·m)` to reach the codes.
    pub fn check_compatible(&self, f: &[Nat]) -> Result<()> {
        if f.len() != self.final_len() {
            return Err(Error::LengthMismatch(f.len(), self.final_len()));
        }
        let rep = block_replicate(f, self.cfg.l)?;
        let u = self.sizes();
        for (m, v) in rep.iter().enumerate() {
            let b = &u[m << self.cfg.j];
            if v >= b {
                return Err(Error::BoundViolation {
                    n: m,
                    detail: format!("replicated value {v} >= u({}) = {b}", m << self.cfg.j),
                });
            }
        }
        Ok(())
    }

    /// Values `v < 2^(2^m)` whose replication fits below `u(2^j·m)`, in increasing order.
    pub fn compatible_values(&self, m: usize, limit: usize) -> Vec<Nat> {
        let u = &self.sizes()[m << self.cfg.j];
        let mut out = Vec::new();
        let mut v = 0u64;
        while out.len() < limit {
            let vn = nat(v);
            if vn.bits() as u128 > 1u128 << m.min(100) {
                break;
            }
            match block_concat(&vec![&vn; self.cfg.l], m) {
                Ok(r) if r < *u => out.push(vn),
                _ => break,
            }
            v += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub relation: String,
    pub output: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
}

/// Ordered audit log of one pipeline run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub direction: String,
    pub stages: Vec<StageRecord>,
}

impl PipelineTrace {
    /// `stage,relation,verdict,witnesses` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,relation,verdict,witnesses\n");
        for s in &self.stages {
            let verdict = match s.verdict {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "-",
            };
            let witnesses = s
                .output
                .get("witnesses")
                .map_or(String::new(), |w| w.to_string());
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.stage,
                s.relation,
                verdict,
                witnesses.replace(',', ";")
            ));
        }
        out
    }
}

fn nats_json(v: &[Nat]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(x.to_string())).collect())
}

fn sets_json(v: &[Vec<Nat>]) -> Value {
    Value::Array(v.iter().map(|e| nats_json(e)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    /// `n = 2^j·m + offset` feeds position `m` of this candidate.
    pub offset: usize,
    pub index: usize,
    #[serde(with = "crate::base::dec_vec")]
    pub values: Vec<Nat>,
}

#[derive(Debug, Clone)]
pub struct DRun {
    pub blocks: BlockFunc,
    pub trace_slalom: Slalom,
    pub amplified: Vec<(usize, Slalom)>,
    pub candidates: Vec<Candidate>,
}

/// Splits `j` times, returning `(offset, slalom)` with `s_o(m) ⊆ s(2^j·m + o)`.
pub fn amplify_all(s: &Slalom, j: u32) -> Result<Vec<(usize, Slalom)>> {
    if j == 0 {
        return Ok(vec![(0, s.clone())]);
    }
    let (a, b) = amplify_d(s)?;
    let mut out: Vec<(usize, Slalom)> = amplify_all(&a, j - 1)?
        .into_iter()
        .map(|(o, t)| (2 * o, t))
        .collect();
    out.extend(
        amplify_all(&b, j - 1)?
            .into_iter()
            .map(|(o, t)| (2 * o + 1, t)),
    );
    Ok(out)
}

/// Drops entries that are not `L·2^m`-bit numbers.
pub fn truncate_to_blocks(s: &Slalom, l: usize) -> Result<Slalom> {
    let mut bound = Vec::with_capacity(s.len());
    let mut entries = Vec::with_capacity(s.len());
    for (m, (u, e)) in s.bound.iter().zip(&s.entries).enumerate() {
        let b = block_bound_capped(m, l, u)?;
        entries.push(e.iter().filter(|v| **v < b).cloned().collect());
        bound.push(b);
    }
    Slalom::new(s.l, bound, entries)
}

/// Density side to function side: all `2^j·L` candidates.
pub fn pipeline_d(y: &BitString, setup: &Setup) -> Result<DRun> {
    let blocks = split_k(&setup.profile, y)?;
    let trace_slalom = ball_trace(&blocks, &setup.codes, &setup.q)?;
    let amplified = amplify_all(&trace_slalom, setup.cfg.j)?
        .into_iter()
        .map(|(o, s)| Ok((o, truncate_to_blocks(&s, setup.cfg.l)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut candidates = Vec::new();
    for (offset, s) in &amplified {
        for (index, values) in block_extract(s, setup.cfg.l)?.into_iter().enumerate() {
            candidates.push(Candidate {
                offset: *offset,
                index,
                values,
            });
        }
    }
    Ok(DRun {
        blocks,
        trace_slalom,
        amplified,
        candidates,
    })
}

impl DRun {
    pub fn trace(&self) -> PipelineTrace {
        let stages = vec![
            StageRecord {
                stage: "density-to-block".into(),
                relation: "agreement density -> block disagreement".into(),
                output: json!({ "blocks": nats_json(&self.blocks.values) }),
                verdict: None,
            },
            StageRecord {
                stage: "block-to-slalom".into(),
                relation: "block disagreement -> slalom capture".into(),
                output: json!({ "entries": sets_json(&self.trace_slalom.entries) }),
                verdict: None,
            },
            StageRecord {
                stage: "slalom-doubling".into(),
                relation: "slalom capture -> halved slalom capture".into(),
                output: Value::Array(
                    self.amplified
                        .iter()
                        .map(|(o, s)| json!({ "offset": o, "entries": sets_json(&s.entries) }))
                        .collect(),
                ),
                verdict: None,
            },
            StageRecord {
                stage: "slalom-to-function".into(),
                relation: "slalom capture -> infinitely-often equality".into(),
                output: serde_json::to_value(&self.candidates).unwrap_or(Value::Null),
                verdict: None,
            },
        ];
        PipelineTrace {
            direction: "D".into(),
            stages,
        }
    }

    /// First candidate with at least `hits` agreements from `from` against every member.
    pub fn contract_candidate(
        &self,
        family: &[Vec<Nat>],
        from: usize,
        hits: usize,
    ) -> Option<usize> {
        self.candidates.iter().position(|c| {
            family
                .iter()
                .all(|f| agreements(&c.values, f, from) >= hits)
        })
    }
}

/// `#{m ≥ from : a(m) = b(m)}`.
pub fn agreements(a: &[Nat], b: &[Nat], from: usize) -> usize {
    a.iter().zip(b).skip(from).filter(|(x, y)| x == y).count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BRun {
    pub replicated: Vec<Nat>,
    /// After each of the `j` doublings.
    pub doubled: Vec<Vec<Nat>>,
    pub encoded: BlockFunc,
    /// `K_h(1 − L_h(encoded))`.
    pub collapsed: BlockFunc,
    pub z: BitString,
}

fn doubling_bound(u: &[Nat], j: u32, level: u32) -> Vec<Nat> {
    let step = 1usize << (j - level);
    u.iter().step_by(step).cloned().collect()
}

/// Function side to density side, uniformly.
pub fn pipeline_b(y: &[Nat], setup: &Setup) -> Result<BRun> {
    let l = setup.cfg.l;
    if y.len() != setup.final_len() {
        return Err(Error::LengthMismatch(y.len(), setup.final_len()));
    }
    let replicated = block_replicate(y, l)?;
    let u = setup.sizes();
    let mut doubled: Vec<Vec<Nat>> = Vec::new();
    for level in 1..=setup.cfg.j {
        let prev = doubled.last().unwrap_or(&replicated);
        doubled.push(amplify_b(prev, &doubling_bound(&u, setup.cfg.j, level))?);
    }
    let indices = doubled.last().unwrap_or(&replicated);
    let encoded = encode_index(indices, &setup.codes)?;
    let collapsed = split_k(&setup.profile, &concat_l(&encoded).complement())?;
    let z = concat_l(&collapsed);
    Ok(BRun {
        replicated,
        doubled,
        encoded,
        collapsed,
        z,
    })
}

impl BRun {
    /// Recomputes every stage from the previous recorded one.
    pub fn replays(&self, y: &[Nat], setup: &Setup) -> Result<bool> {
        let u = setup.sizes();
        let mut ok = block_replicate(y, setup.cfg.l)? == self.replicated;
        let mut prev = &self.replicated;
        for (i, d) in self.doubled.iter().enumerate() {
            let bound = doubling_bound(&u, setup.cfg.j, i as u32 + 1);
            ok &= amplify_b(prev, &bound)? == *d;
            prev = d;
        }
        ok &= encode_index(prev, &setup.codes)? == self.encoded;
        ok &= split_k(&setup.profile, &concat_l(&self.encoded).complement())? == self.collapsed;
        ok &= concat_l(&self.collapsed) == self.z;
        Ok(ok)
    }

    pub fn trace(&self) -> PipelineTrace {
        let stages = vec![
            StageRecord {
                stage: "slalom-to-function".into(),
                relation: "almost-everywhere difference -> slalom avoidance".into(),
                output: json!({ "replicated": nats_json(&self.replicated) }),
                verdict: None,
            },
            StageRecord {
                stage: "slalom-doubling".into(),
                relation: "halved slalom avoidance -> slalom avoidance".into(),
                output: Value::Array(self.doubled.iter().map(|d| nats_json(d)).collect()),
                verdict: None,
            },
            StageRecord {
                stage: "block-to-slalom".into(),
                relation: "slalom avoidance -> block disagreement".into(),
                output: json!({ "encoded": nats_json(&self.encoded.values) }),
                verdict: None,
            },
            StageRecord {
                stage: "density-to-block".into(),
                relation: "block disagreement -> agreement density".into(),
                output: json!({
                    "collapsed": nats_json(&self.collapsed.values),
                    "z": self.z.to_string(),
                }),
                verdict: None,
            },
        ];
        PipelineTrace {
            direction: "B".into(),
            stages,
        }
    }
}

/// The density-side adversary induced by a function-side one.
pub fn induced_adversary(f: &[Nat], setup: &Setup) -> Result<BitString> {
    Ok(pipeline_b(f, setup)?.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageId {
    /// `x ↦ K_h(1 − L_h(x))`.
    DensityToBlock,
    /// `x ↦ s_x`, the ball trace.
    BlockToSlalom,
    /// `(x₁, x₂) ↦ x₁ ⊕ x₂`.
    Doubling,
    /// `(x_0, …, x_{L−1}) ↦ n ↦ x_0(n)⌢…⌢x_{L−1}(n)`.
    SlalomToFunction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Adversary {
    Block(BlockFunc),
    Slalom(Slalom),
    Pair(Vec<Nat>, Vec<Nat>),
    Tuple(Vec<Vec<Nat>>),
    Func(Vec<Nat>),
}

fn adv_name(a: &Adversary) -> &'static str {
    match a {
        Adversary::Block(_) => "block function",
        Adversary::Slalom(_) => "slalom",
        Adversary::Pair(..) => "pair",
        Adversary::Tuple(_) => "tuple",
        Adversary::Func(_) => "function",
    }
}

/// The computable-side map of one stage.
pub fn adversary_transform(stage: StageId, input: &Adversary, setup: &Setup) -> Result<Adversary> {
    let mismatch = || Error::TypeMismatch(format!("{stage:?} cannot take a {}", adv_name(input)));
    match (stage, input) {
        (StageId::DensityToBlock, Adversary::Block(x)) => Ok(Adversary::Block(split_k(
            &x.profile,
            &concat_l(x).complement(),
        )?)),
        (StageId::BlockToSlalom, Adversary::Block(x)) => {
            Ok(Adversary::Slalom(ball_trace(x, &setup.codes, &setup.q)?))
        }
        (StageId::Doubling, Adversary::Pair(a, b)) => Ok(Adversary::Func(interleave(a, b)?)),
        (StageId::SlalomToFunction, Adversary::Tuple(xs)) => {
            let len = xs.first().map_or(0, |x| x.len());
            if let Some(x) = xs.iter().find(|x| x.len() != len) {
                return Err(Error::LengthMismatch(x.len(), len));
            }
            let out = (0..len)
                .map(|n| block_concat(&xs.iter().map(|x| &x[n]).collect::<Vec<_>>(), n))
                .collect::<Result<Vec<_>>>()?;
            Ok(Adversary::Func(out))
        }
        _ => Err(mismatch()),
    }
}

/// `(max, min)` over the family of the agreement lower density with `a` from `from`.
pub fn estimate_gamma_delta(
    a: &BitString,
    family: &[BitString],
    from: usize,
) -> Result<(Rat, Rat)> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut gamma: Option<Rat> = None;
    let mut delta: Option<Rat> = None;
    for x in family {
        let d = lower_density_estimate(&iff_seq(a, x)?, from)?;
        if gamma.as_ref().is_none_or(|g| d > *g) {
            gamma = Some(d.clone());
        }
        if delta.as_ref().is_none_or(|g| d < *g) {
            delta = Some(d);
        }
    }
    Ok((gamma.unwrap(), delta.unwrap()))
}

/// A block string for codeword `idx` whose strict ball holds no smaller-index
/// codeword, closest to the codeword itself; falls back to the codeword.
fn rank_zero_block(code: &ListCode, idx: usize, q: &Rat) -> u64 {
    let c = code.masks()[idx];
    let Some(rad) = ball_radius(q, code.r) else {
        return c;
    };
    let smaller = &code.masks()[..idx];
    let clear = |s: u64| smaller.iter().all(|&w| (w ^ s).count_ones() > rad);
    if clear(c) {
        return c;
    }
    (0u64..1 << code.r)
        .filter(|&s| (s ^ c).count_ones() <= rad && clear(s))
        .min_by_key(|&s| ((s ^ c).count_ones(), s))
        .unwrap_or(c)
}

struct AdvState {
    bits: BitString,
    agree: u64,
    checkpoints: usize,
    final_hits: usize,
}

/// Diagonalizes against a family of function-side adversaries: each block of
/// the output is a string strictly `q`-close to the current adversary's
/// codeword and disagreeing with its induced density adversary as much as
/// possible. Adversaries are served in runs of final indices until each has
/// `hits` prefixes with agreement at most `p` and `hits` served final indices
/// on the tail.
#[allow(clippy::needless_range_loop)]
pub fn build_d_witness(family: &[Vec<Nat>], setup: &Setup) -> Result<BitString> {
    let total = setup.profile.total_len();
    if family.is_empty() {
        return Ok(BitString::zeros(total));
    }
    for f in family {
        setup.check_compatible(f)?;
    }
    let hz = setup.bit_horizon();
    let (pn, pd) = rat_parts(&setup.cfg.p);
    let per = setup.doublings();
    let final_tail = setup.final_tail();
    let mut states = family
        .iter()
        .map(|f| {
            Ok(AdvState {
                bits: induced_adversary(f, setup)?,
                agree: 0,
                checkpoints: 0,
                final_hits: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let replicated = family
        .iter()
        .map(|f| block_replicate(f, setup.cfg.l))
        .collect::<Result<Vec<_>>>()?;
    let done = |s: &AdvState| s.checkpoints >= hz.hits && s.final_hits >= hz.hits;
    let mut memo: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut out = BitString::zeros(0);
    let mut cur = 0usize;
    for m in 0..setup.final_len() {
        for o in 0..per {
            let n = m * per + o;
            let code = setup.codes.code(n);
            let idx = replicated[cur][m]
                .to_u64_digits()
                .first()
                .copied()
                .unwrap_or(0) as usize;
            let block = *memo
                .entry((code.r, idx))
                .or_insert_with(|| rank_zero_block(code, idx, &setup.q));
            for b in BitString::from_nat(&nat(block), code.r).bits() {
                out.push(*b);
                let len = out.len();
                for s in states.iter_mut() {
                    s.agree += (s.bits.get(len - 1) == *b) as u64;
                    if len >= hz.tail.max(1) && pn.clone() * len as u64 >= pd.clone() * s.agree {
                        s.checkpoints += 1;
                    }
                }
            }
        }
        if m >= final_tail {
            states[cur].final_hits += 1;
        }
        if done(&states[cur]) {
            let f = states.len();
            cur = (1..=f)
                .map(|d| (cur + d) % f)
                .find(|&a| !done(&states[a]))
                .unwrap_or((cur + 1) % f);
        }
    }
    if let Some(a) = states.iter().position(|s| !done(s)) {
        return Err(Error::Infeasible(format!(
            "adversary {a}: {} prefixes with agreement <= p, {} tail hits, need {}",
            states[a].checkpoints, states[a].final_hits, hz.hits
        )));
    }
    let bowtie = RelationKind::Bowtie {
        p: setup.cfg.p.clone(),
    };
    for (a, s) in states.iter().enumerate() {
        if !check_co_relation(&bowtie, Operand::Bits(&s.bits), Operand::Bits(&out), &hz)? {
            return Err(Error::Infeasible(format!(
                "adversary {a} fails the density check"
            )));
        }
    }
    Ok(out)
}
