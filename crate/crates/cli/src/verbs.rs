use std::collections::BTreeSet;

use massred::base::{
    dec_vec, floor_mul, nat, rat_parts, BitString, Horizon, Nat, OrderFuncExpr, Rat, RelationKind,
};
use massred::codec::{concat_l, geometric_profile, split_k, BlockFunc, BlockProfile};
use massred::error::Error;
use massred::forcing::{
    audit_run, fat_check_heights, full_branching_check, node_csv, parse_csv, run_forcing,
    thin_partition, FuncTable, Functional, HeightPolicy, PrunedTree, Rule,
};
use massred::listcode::{
    build_code, build_maximal, verify_list_max, CodeFamily, ListCode, Strategy,
};
use massred::reduction::{
    estimate_gamma_delta, pipeline_b as run_b, pipeline_d as run_d, PipelineConfig, Setup,
};
use massred::witness::{
    counterexample, is_witness, transform_witness_b, transform_witness_d, Role, Side, StepId,
    StepParams, Universe, WitnessFamily,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{Ctx, Failure, Outcome, Output};

/// A rational given as `"a/b"`, `"a"`, or `{"num": .., "den": ..}`.
#[derive(Debug, Clone, Deserialize)]
pub struct Q(#[serde(with = "massred::base::rat_json")] pub Rat);

pub fn rat_str(q: &Rat) -> String {
    let (n, d) = rat_parts(q);
    format!("{n}/{d}")
}

/// Decimal naturals, strings or integers.
#[derive(Debug, Clone, Deserialize)]
pub struct Nats(#[serde(with = "dec_vec")] pub Vec<Nat>);

fn strs(v: &[Nat]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(x.to_string())).collect())
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometricCfg {
    c: u64,
    #[serde(rename = "N")]
    n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CodecCfg {
    profile: Option<BlockProfile>,
    geometric: Option<GeometricCfg>,
    values: Option<Nats>,
    bits: Option<BitString>,
}

pub fn codec(ctx: &Ctx) -> Outcome<Output> {
    let cfg: CodecCfg = ctx.parse()?;
    let profile = match (cfg.profile, cfg.geometric) {
        (Some(p), None) => p,
        (None, Some(g)) => geometric_profile(g.c, g.n)?.profile,
        _ => {
            return Err(Failure::Usage(
                "give exactly one of profile, geometric".into(),
            ))
        }
    };
    let x = match (cfg.values, cfg.bits) {
        (Some(v), None) => BlockFunc::new(profile.clone(), v.0)?,
        (None, Some(b)) => split_k(&profile, &b)?,
        (None, None) => {
            let mut r = rng(ctx.seed()?);
            let values = profile
                .lens()
                .iter()
                .map(|&len| (0..len).fold(nat(0), |acc, _| (acc << 1u32) + nat(r.gen_range(0..2))))
                .collect();
            BlockFunc::new(profile.clone(), values)?
        }
        _ => return Err(Failure::Usage("give at most one of values, bits".into())),
    };
    let bits = concat_l(&x);
    let back = split_k(&profile, &bits)?;
    let round_trip = back == x && concat_l(&back) == bits;
    let mut out = Output::new(json!({
        "profile": to_json(&profile),
        "values": strs(&x.values),
        "bits": bits.to_string(),
        "round_trip": round_trip,
    }));
    if !round_trip {
        out.breach = Some("codec round trip failed".into());
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeBuildCfg {
    r: usize,
    q: Q,
    #[serde(rename = "L")]
    l: usize,
    target: Option<usize>,
    rate: Option<Q>,
    strategy: Option<String>,
}

fn log2_floor(n: usize) -> Option<u32> {
    (n > 0).then(|| usize::BITS - 1 - n.leading_zeros())
}

pub fn code_build(ctx: &Ctx) -> Outcome<Output> {
    let cfg: CodeBuildCfg = ctx.parse()?;
    let target = match (cfg.target, &cfg.rate) {
        (Some(t), None) => Some(t),
        (None, Some(rate)) => Some(1usize << floor_mul(&rate.0, cfg.r as u64).min(62)),
        (None, None) => None,
        _ => return Err(Failure::Usage("give at most one of target, rate".into())),
    };
    let strategy = match cfg.strategy.as_deref() {
        None | Some("lex_greedy") => Strategy::LexGreedy,
        Some("random_greedy") => Strategy::RandomGreedy { seed: ctx.seed()? },
        Some("exhaustive") => Strategy::Exhaustive,
        Some(s) => return Err(Failure::Usage(format!("unknown strategy {s:?}"))),
    };
    let code = match target {
        Some(t) => build_code(cfg.r, &cfg.q.0, cfg.l, t, strategy)?,
        None if strategy == Strategy::LexGreedy => build_maximal(cfg.r, &cfg.q.0, cfg.l)?,
        None => {
            return Err(Failure::Usage(
                "randomized and exhaustive builds need a target or rate".into(),
            ))
        }
    };
    ctx.log(format!("built {} words at r={}", code.size(), cfg.r));
    Ok(Output::new(json!({
        "r": cfg.r,
        "q": rat_str(&cfg.q.0),
        "L": cfg.l,
        "size": code.size(),
        "log2_size": log2_floor(code.size()),
        "target_log2": target.and_then(log2_floor),
        "max_list": code.certificate().map(|c| c.verified_max_list),
        "code": to_json(&code),
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeVerifyCfg {
    q: Q,
    #[serde(rename = "L")]
    l: Option<usize>,
    words: Option<Vec<BitString>>,
    code: Option<ListCode>,
}

pub fn code_verify(ctx: &Ctx) -> Outcome<Output> {
    let cfg: CodeVerifyCfg = ctx.parse()?;
    let words: Vec<BitString> = match (cfg.words, cfg.code) {
        (Some(w), None) => w,
        (None, Some(c)) => (0..c.size()).map(|i| c.word(i)).collect(),
        _ => return Err(Failure::Usage("give exactly one of words, code".into())),
    };
    let r = words.first().map_or(0, |w| w.len());
    if let Some(w) = words.iter().find(|w| w.len() != r) {
        return Err(Error::LengthMismatch(w.len(), r).into());
    }
    let masks: Vec<u64> = words
        .iter()
        .map(|w| (0..r).fold(0u64, |acc, i| (acc << 1) | w.get(i) as u64))
        .collect();
    if masks.iter().collect::<BTreeSet<_>>().len() != masks.len() {
        return Err(Error::Invalid("repeated code word".into()).into());
    }
    let max_list = verify_list_max(r, &masks, &cfg.q.0)?;
    let ok = cfg.l.is_none_or(|l| max_list <= l);
    let mut out = Output::new(json!({
        "r": r,
        "size": words.len(),
        "q": rat_str(&cfg.q.0),
        "L": cfg.l,
        "max_list": max_list,
        "ok": ok,
    }));
    if !ok {
        out.breach = Some(format!(
            "max list {max_list} exceeds L={}",
            cfg.l.unwrap_or(0)
        ));
    }
    Ok(out)
}

fn setup(
    mut cfg: PipelineConfig,
    profile: Option<BlockProfile>,
    seed: Option<u64>,
) -> Outcome<Setup> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(match profile {
        Some(p) => Setup::with_profile(cfg, p)?,
        None => Setup::new(cfg)?,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineDCfg {
    pipeline: PipelineConfig,
    profile: Option<BlockProfile>,
    y: Option<BitString>,
}

pub fn pipeline_d(ctx: &Ctx) -> Outcome<Output> {
    let cfg: PipelineDCfg = ctx.parse()?;
    let s = setup(cfg.pipeline, cfg.profile, ctx.seed)?;
    let y = match cfg.y {
        Some(y) => y,
        None => {
            let mut r = rng(ctx.seed()?);
            BitString::new(
                (0..s.profile.total_len())
                    .map(|_| r.gen_bool(0.5))
                    .collect(),
            )
        }
    };
    ctx.log(format!("{} bits over {} blocks", y.len(), s.profile.len()));
    let run = run_d(&y, &s)?;
    let trace = run.trace();
    let mut out = Output::new(json!({
        "y": y.to_string(),
        "trace": to_json(&trace),
        "candidates": to_json(&run.candidates),
    }));
    out.files.push(("pipeline-d.csv".into(), trace.to_csv()));
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineBCfg {
    pipeline: PipelineConfig,
    profile: Option<BlockProfile>,
    y: Option<Nats>,
}

pub fn pipeline_b(ctx: &Ctx) -> Outcome<Output> {
    let cfg: PipelineBCfg = ctx.parse()?;
    let s = setup(cfg.pipeline, cfg.profile, ctx.seed)?;
    let y = match cfg.y {
        Some(y) => y.0,
        None => {
            let mut r = rng(ctx.seed()?);
            (0..s.final_len())
                .map(|m| {
                    let vals = s.compatible_values(m, 1 << 10);
                    if vals.is_empty() {
                        return Err(
                            Error::Infeasible(format!("no compatible value at m={m}")).into()
                        );
                    }
                    Ok(vals[r.gen_range(0..vals.len())].clone())
                })
                .collect::<Outcome<Vec<_>>>()?
        }
    };
    s.check_compatible(&y)?;
    let run = run_b(&y, &s)?;
    let replays = run.replays(&y, &s)?;
    let trace = run.trace();
    let mut out = Output::new(json!({
        "y": strs(&y),
        "z": run.z.to_string(),
        "replays": replays,
        "trace": to_json(&trace),
    }));
    out.files.push(("pipeline-b.csv".into(), trace.to_csv()));
    if !replays {
        out.breach = Some("recorded stages do not replay".into());
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaCfg {
    a: BitString,
    family: Vec<BitString>,
    #[serde(default)]
    from: usize,
}

pub fn gamma(ctx: &Ctx) -> Outcome<Output> {
    let cfg: GammaCfg = ctx.parse()?;
    let (g, d) = estimate_gamma_delta(&cfg.a, &cfg.family, cfg.from)?;
    Ok(Output::new(json!({
        "gamma": rat_str(&g),
        "delta": rat_str(&d),
        "len": cfg.a.len(),
        "from": cfg.from,
    })))
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum UniverseCfg {
    Funcs {
        side: Side,
        bound: Nats,
    },
    Bits {
        side: Side,
        n: usize,
    },
    Slaloms {
        side: Side,
        #[serde(rename = "L")]
        l: usize,
        bound: Nats,
    },
}

impl UniverseCfg {
    fn build(&self) -> Outcome<Universe> {
        Ok(match self {
            UniverseCfg::Funcs { side, bound } => Universe::funcs(*side, &bound.0)?,
            UniverseCfg::Bits { side, n } => Universe::bits(*side, *n)?,
            UniverseCfg::Slaloms { side, l, bound } => Universe::slaloms(*side, *l, &bound.0)?,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessCheckCfg {
    family: WitnessFamily,
    universe: UniverseCfg,
    horizon: Horizon,
    expect: Option<bool>,
}

fn check_family(
    fam: &WitnessFamily,
    u: &UniverseCfg,
    hz: &Horizon,
) -> Outcome<(bool, Value, usize)> {
    let uni = u.build()?;
    let ok = is_witness(fam, &uni, hz)?;
    let cx = counterexample(fam, &uni, hz)?
        .map(to_json)
        .unwrap_or(Value::Null);
    Ok((ok, cx, uni.len()))
}

pub fn witness_check(ctx: &Ctx) -> Outcome<Output> {
    let cfg: WitnessCheckCfg = ctx.parse()?;
    let (ok, cx, size) = check_family(&cfg.family, &cfg.universe, &cfg.horizon)?;
    let mut out = Output::new(json!({
        "witness": ok,
        "counterexample": cx,
        "universe_size": size,
        "family_size": cfg.family.len(),
    }));
    if let Some(e) = cfg.expect.filter(|&e| e != ok) {
        out.breach = Some(format!("expected witness={e}, found {ok}"));
    }
    Ok(out)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ParamsCfg {
    target: Option<RelationKind>,
    profile: Option<BlockProfile>,
    codes: Option<CodeFamily>,
    q: Option<Q>,
    #[serde(rename = "L", default)]
    l: usize,
    widths: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckCfg {
    universe: UniverseCfg,
    horizon: Horizon,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessTransformCfg {
    step: StepId,
    family: WitnessFamily,
    #[serde(default)]
    params: ParamsCfg,
    check: Option<CheckCfg>,
}

pub fn witness_transform(ctx: &Ctx) -> Outcome<Output> {
    let cfg: WitnessTransformCfg = ctx.parse()?;
    let p = cfg.params;
    let widths = p
        .widths
        .map(|w| {
            w.iter()
                .map(|s| {
                    s.parse::<u128>()
                        .map_err(|_| Failure::Usage(format!("bad width {s:?}")))
                })
                .collect::<Outcome<Vec<_>>>()
        })
        .transpose()?;
    let params = StepParams {
        target: p.target,
        profile: p.profile,
        codes: p.codes,
        q: p.q.map(|q| q.0),
        l: p.l,
        widths,
    };
    let image = match cfg.family.role {
        Role::D => transform_witness_d(cfg.step, &cfg.family, &params)?,
        Role::B => transform_witness_b(cfg.step, &cfg.family, &params)?,
    };
    ctx.log(format!("{} members -> {}", cfg.family.len(), image.len()));
    let mut result = json!({ "family": to_json(&image), "size": image.len() });
    let mut breach = None;
    if let Some(c) = &cfg.check {
        let (ok, cx, size) = check_family(&image, &c.universe, &c.horizon)?;
        result["check"] = json!({ "witness": ok, "counterexample": cx, "universe_size": size });
        if !ok {
            breach = Some("image is not a witness family".into());
        }
    }
    let mut out = Output::new(result);
    out.breach = breach;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FunctionalCfg {
    Rule(Rule),
    Table { table: Value },
}

impl FunctionalCfg {
    fn build(&self) -> Outcome<Functional> {
        Ok(match self {
            FunctionalCfg::Rule(r) => Functional::Rule(r.clone()),
            FunctionalCfg::Table { table } => {
                Functional::Table(FuncTable::from_json(&table.to_string())?)
            }
        })
    }
}

fn default_fuel() -> usize {
    1 << 20
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ForceRunCfg {
    #[serde(rename = "F")]
    f: OrderFuncExpr,
    #[serde(rename = "G")]
    g: OrderFuncExpr,
    functional: FunctionalCfg,
    steps: usize,
    depth: usize,
    #[serde(default = "default_fuel")]
    fuel: usize,
    policy: Option<HeightPolicy>,
}

pub fn force_run(ctx: &Ctx) -> Outcome<Output> {
    let cfg: ForceRunCfg = ctx.parse()?;
    let phi = cfg.functional.build()?;
    let policy = cfg.policy.unwrap_or(HeightPolicy::Strict);
    let run = run_forcing(&cfg.f, &cfg.g, &phi, cfg.steps, cfg.depth, cfg.fuel, policy)?;
    run.cert.verify(&run.tree, &cfg.g)?;
    let audit = audit_run(&run, &phi, &cfg.g)?;
    ctx.log(format!(
        "{} leaves, {} halvings",
        run.tree.leaves().len(),
        run.ledger.len()
    ));
    let mut out = Output::new(json!({
        "run": to_json(&run),
        "leaves": run.tree.leaves().len(),
        "audit": audit,
    }));
    if !audit.is_empty() {
        out.breach = Some(format!("{} leaves agree with g", audit.len()));
    }
    Ok(out)
}

/// A tree given literally, or as the complete `F`-tree of `depth`.
fn build_tree(
    tree: Option<PrunedTree>,
    f: Option<OrderFuncExpr>,
    depth: Option<usize>,
) -> Outcome<PrunedTree> {
    match (tree, f, depth) {
        (Some(t), None, None) => Ok(t),
        (None, Some(f), Some(d)) => Ok(PrunedTree::complete(f, d)?),
        _ => Err(Failure::Usage("give either tree, or F and depth".into())),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FatCheckCfg {
    tree: Option<PrunedTree>,
    #[serde(rename = "F")]
    f: Option<OrderFuncExpr>,
    depth: Option<usize>,
    #[serde(rename = "G")]
    g: OrderFuncExpr,
    ns: Vec<u64>,
    heights: Option<Vec<Option<u64>>>,
}

pub fn fat_check(ctx: &Ctx) -> Outcome<Output> {
    let cfg: FatCheckCfg = ctx.parse()?;
    let t = build_tree(cfg.tree, cfg.f, cfg.depth)?;
    let heights = cfg.heights.unwrap_or_else(|| vec![None; cfg.ns.len()]);
    let cert = fat_check_heights(&t, &cfg.g, &cfg.ns, &heights)?;
    cert.verify(&t, &cfg.g)?;
    Ok(Output::new(
        json!({ "cert": to_json(&cert), "leaves": t.leaves().len() }),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThinCfg {
    tree: Option<PrunedTree>,
    #[serde(rename = "F")]
    f: Option<OrderFuncExpr>,
    depth: Option<usize>,
    #[serde(default)]
    sigma: String,
    n: usize,
    c1: Vec<String>,
    c2: Option<Vec<String>>,
}

pub fn thin(ctx: &Ctx) -> Outcome<Output> {
    let cfg: ThinCfg = ctx.parse()?;
    let t = build_tree(cfg.tree, cfg.f, cfg.depth)?;
    let sigma = parse_csv(&cfg.sigma)?;
    let nodes = |v: &[String]| {
        v.iter()
            .map(|s| parse_csv(s))
            .collect::<Result<BTreeSet<_>, _>>()
    };
    let c1 = nodes(&cfg.c1)?;
    let c2 = match &cfg.c2 {
        Some(c2) => nodes(c2)?,
        None => t
            .leaves_above(&sigma)
            .into_iter()
            .filter(|l| !c1.contains(l))
            .collect(),
    };
    let r = thin_partition(&t, &sigma, cfg.n, &c1, &c2)?;
    let full = full_branching_check(&r.tree, &r.tau, cfg.n)?;
    let mut out = Output::new(json!({
        "case": r.case,
        "tau": node_csv(&r.tau),
        "height": r.height,
        "leaves": r.tree.leaves().len(),
        "full_branching": full,
        "tree": to_json(&r.tree),
    }));
    if !full {
        out.breach = Some(format!("no full branching of height {} above tau", cfg.n));
    }
    Ok(out)
}
