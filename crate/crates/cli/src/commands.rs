use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rlc_core::badlists::{
    realize_list_decoding, tau_list_decoding, witness_list_decoding, LdParams, LrConstruction, LrParams, DEFAULT_ENUM_CAP,
};
use rlc_core::code::{sample_planted, sample_random_linear, LinearCode, DEFAULT_CODEWORD_CAP};
use rlc_core::decodability::{
    check_avg_radius, check_list_decoding, check_list_recovery_erasures, sampled_max_list_size, verify_witness, Caps, CheckVerdict,
    Claim, DecodeError, Witness,
};
use rlc_core::gf::make_field;
use rlc_core::linalg::{Mat, DEFAULT_SUBSPACE_CAP};
use rlc_core::mc::{mc_abundance, spearman, DEFAULT_NODE_CAP};
use rlc_core::potential::{
    check_entropy_sum_all, choose_lambda_at_rate, default_list_size, grow_code, lambda_for_eta, potential_s, verify_theorem_chain, BinCode,
    PotentialError, PotentialParams, DEFAULT_SPACE_CAP, TOL,
};
use rlc_core::typedist::{h2, h_q, implicit_rarity_search, min_normalized_entropy, RarityVerdict, TypeDist};

use crate::config::{f64_to_ratio, parse_ratio, ratio_f64, require};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violated,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Violated => 2,
            Status::Inconclusive => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub records: Vec<Value>,
    pub text: String,
}

impl Outcome {
    fn one(status: Status, record: Value, text: String) -> Self {
        Outcome { status, records: vec![record], text }
    }
}

type Res<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn read(path: &PathBuf) -> Res<String> {
    fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn write(path: &PathBuf, body: &str) -> Res<()> {
    fs::write(path, body).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn to_value<T: Serialize>(v: &T) -> Res<Value> {
    serde_json::to_value(v).map_err(err)
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct EntropyArgs {
    #[arg(long)]
    pub q: Option<u32>,
    /// Rational such as `1/4` or decimal such as `0.25`.
    #[arg(long)]
    pub x: Option<String>,
}

pub fn entropy(a: &EntropyArgs) -> Res<Outcome> {
    let q = a.q.unwrap_or(2);
    if q < 2 {
        return Err("--q must be at least 2".into());
    }
    let x = ratio_f64(parse_ratio(&require(&a.x, "x")?)?);
    if !(0.0..=1.0).contains(&x) {
        return Err("--x must lie in [0, 1]".into());
    }
    let h = h_q(q as f64, x);
    Ok(Outcome::one(Status::Pass, json!({ "q": q, "x": x, "entropy": h }), format!("{h}\n")))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct MakeFieldArgs {
    #[arg(long)]
    pub q: Option<u32>,
    /// Include the addition and multiplication tables.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub tables: Option<bool>,
}

pub fn make_field_cmd(a: &MakeFieldArgs) -> Res<Outcome> {
    let f = make_field(require(&a.q, "q")?).map_err(err)?;
    let q = f.order();
    let mut rec = json!({
        "q": q,
        "characteristic": f.characteristic(),
        "degree": f.degree(),
        "modulus": f.modulus(),
        "generator": f.generator(),
        "log": f.log_table(),
        "antilog": f.antilog_table(),
    });
    let mut text = format!(
        "GF({q}) = GF({}^{})\nmodulus (low to high): {:?}\ngenerator: {}\n",
        f.characteristic(),
        f.degree(),
        f.modulus(),
        f.generator()
    );
    if a.tables.unwrap_or(false) {
        let table = |op: &dyn Fn(usize, usize) -> u8| -> Vec<Vec<u8>> { (0..q).map(|i| (0..q).map(|j| op(i, j)).collect()).collect() };
        let el = |i: usize| f.elements().nth(i).expect("index below q");
        let add = table(&|i, j| f.add(el(i), el(j)).0);
        let mul = table(&|i, j| f.mul(el(i), el(j)).0);
        for (name, t) in [("addition", &add), ("multiplication", &mul)] {
            let _ = writeln!(text, "{name}:");
            for row in t.iter() {
                let _ = writeln!(text, "{}", row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
            }
        }
        rec["add"] = json!(add);
        rec["mul"] = json!(mul);
    }
    Ok(Outcome::one(Status::Pass, rec, text))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct SampleCodeArgs {
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rate: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stream: Option<u64>,
    /// Matrix file whose columns the code must contain.
    #[arg(long)]
    pub planted: Option<PathBuf>,
}

pub fn sample_code(a: &SampleCodeArgs) -> Res<Outcome> {
    let rate = parse_ratio(&require(&a.rate, "rate")?)?;
    let seed = require(&a.seed, "seed")?;
    let stream = a.stream.unwrap_or(0);
    let code = match &a.planted {
        Some(p) => sample_planted(&Mat::from_text(&read(p)?).map_err(err)?, rate, seed, stream).map_err(err)?,
        None => {
            let f = make_field(a.q.unwrap_or(2)).map_err(err)?;
            sample_random_linear(&f, require(&a.n, "n")?, rate, seed, stream).map_err(err)?
        }
    };
    let rec = json!({
        "n": code.n(),
        "dimension": code.dimension(),
        "parity_check": code.parity_check().to_text(),
        "generator": code.generator().to_text(),
    });
    Ok(Outcome::one(Status::Pass, rec, code.generator().to_text()))
}

/// Where a code comes from: a generator file, a parity-check file, or a fresh sample.
#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct CodeSource {
    #[arg(long)]
    pub generator: Option<PathBuf>,
    #[arg(long)]
    pub parity_check: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rate: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stream: Option<u64>,
}

impl CodeSource {
    fn load(&self) -> Res<LinearCode> {
        if let Some(p) = &self.generator {
            return Ok(LinearCode::from_generator(&Mat::from_text(&read(p)?).map_err(err)?));
        }
        if let Some(p) = &self.parity_check {
            return Ok(LinearCode::from_parity_check(Mat::from_text(&read(p)?).map_err(err)?));
        }
        let f = make_field(self.q.unwrap_or(2)).map_err(err)?;
        let rate = parse_ratio(&require(&self.rate, "rate (or --generator / --parity-check)")?)?;
        sample_random_linear(&f, require(&self.n, "n")?, rate, require(&self.seed, "seed")?, self.stream.unwrap_or(0)).map_err(err)
    }
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct CapArgs {
    #[arg(long)]
    pub codeword_cap: Option<u64>,
    #[arg(long)]
    pub center_cap: Option<u64>,
    #[arg(long)]
    pub subset_cap: Option<u64>,
}

impl CapArgs {
    fn caps(&self) -> Caps {
        let d = Caps::default();
        Caps {
            codewords: self.codeword_cap.map_or(d.codewords, u128::from),
            centers: self.center_cap.map_or(d.centers, u128::from),
            subsets: self.subset_cap.map_or(d.subsets, u128::from),
            work: d.work,
        }
    }
}

fn verdict_outcome(v: CheckVerdict, header: String) -> Res<Outcome> {
    let status = if v.satisfied { Status::Pass } else { Status::Violated };
    let mut text = format!("{header}\nsatisfied: {}\nstatistic: {:?}\n", v.satisfied, v.statistic);
    if let Some(w) = &v.witness {
        let _ = writeln!(text, "witness: {}", serde_json::to_string(w).map_err(err)?);
    }
    Ok(Outcome::one(status, to_value(&v)?, text))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct CheckLdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeSource,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub l: Option<usize>,
    /// Random centers to try when the exhaustive sweep is over the cap.
    #[arg(long)]
    pub samples: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub caps: CapArgs,
}

pub fn check_ld(a: &CheckLdArgs) -> Res<Outcome> {
    let code = a.code.load()?;
    let p = parse_ratio(&require(&a.p, "p")?)?;
    let l = require(&a.l, "l")?;
    let caps = a.caps.caps();
    match check_list_decoding(&code, p, l, &caps) {
        Ok(v) => verdict_outcome(v, format!("list decoding, p = {p}, L = {l}, n = {}, k = {}", code.n(), code.dimension())),
        Err(DecodeError::TooLarge { .. }) => {
            let seed = a.code.seed.ok_or("center sweep exceeds the cap; sampling centers needs --seed")?;
            let b = sampled_max_list_size(&code, p, a.samples.unwrap_or(4096), seed, &caps).map_err(err)?;
            let text = format!("{}: some ball holds {} codewords ({} sampled centers)\n", b.label, b.lower_bound, b.samples);
            let status = if b.lower_bound >= l { Status::Violated } else { Status::Inconclusive };
            Ok(Outcome::one(status, to_value(&b)?, text))
        }
        Err(e) => Err(err(e)),
    }
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct CheckArArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeSource,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub l: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub caps: CapArgs,
}

pub fn check_ar(a: &CheckArArgs) -> Res<Outcome> {
    let code = a.code.load()?;
    let p = parse_ratio(&require(&a.p, "p")?)?;
    let l = require(&a.l, "l")?;
    let v = check_avg_radius(&code, p, l, &a.caps.caps()).map_err(err)?;
    verdict_outcome(v, format!("average radius, p = {p}, L = {l}, n = {}, k = {}", code.n(), code.dimension()))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct CheckLrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeSource,
    /// Fraction of coordinates that must carry small lists.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub caps: CapArgs,
}

pub fn check_lr(a: &CheckLrArgs) -> Res<Outcome> {
    let code = a.code.load()?;
    let alpha = parse_ratio(&require(&a.alpha, "alpha")?)?;
    let ell = require(&a.ell, "ell")?;
    let l = require(&a.l, "l")?;
    let v = check_list_recovery_erasures(&code, alpha, ell, l, &a.caps.caps()).map_err(err)?;
    verdict_outcome(v, format!("list recovery, alpha = {alpha}, ell = {ell}, L = {l}, n = {}", code.n()))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct TypeEntropyArgs {
    #[arg(long)]
    pub tau: Option<PathBuf>,
}

fn load_tau(path: &Option<PathBuf>) -> Res<TypeDist> {
    TypeDist::from_text(&read(&require(path, "tau")?)?).map_err(err)
}

pub fn type_entropy(a: &TypeEntropyArgs) -> Res<Outcome> {
    let tau = load_tau(&a.tau)?;
    let (h, d) = (tau.entropy_q(), tau.dim());
    let normalized = if d > 0 { Some(h / d as f64) } else { None };
    let rec = json!({ "entropy": h, "dim": d, "normalized": normalized, "support_size": tau.support_size() });
    let text = format!("H_q = {h}\ndim = {d}\nnormalized = {}\n", normalized.map_or("undefined".into(), |x| x.to_string()));
    Ok(Outcome::one(Status::Pass, rec, text))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct RarityArgs {
    #[arg(long)]
    pub tau: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub cap: Option<u64>,
}

pub fn rarity(a: &RarityArgs) -> Res<Outcome> {
    let tau = load_tau(&a.tau)?;
    let gamma = ratio_f64(parse_ratio(&require(&a.gamma, "gamma")?)?);
    let tol = a.tol.unwrap_or(1e-9);
    let r = implicit_rarity_search(&tau, gamma, tol, a.cap.map_or(DEFAULT_SUBSPACE_CAP, u128::from)).map_err(err)?;
    Ok(match r.verdict {
        RarityVerdict::Rare { witness, entropy, dim } => Outcome::one(
            Status::Violated,
            json!({ "verdict": "Rare", "gamma": gamma, "witness": witness.to_text(), "entropy": entropy, "dim": dim, "examined": r.examined as u64 }),
            format!("Rare\nwitness map:\n{}entropy = {entropy}, dim = {dim}\n", witness.to_text()),
        ),
        RarityVerdict::NotRare { min_ratio, argmin, argmin_dim, near_threshold } => {
            let status = if near_threshold > 0 { Status::Inconclusive } else { Status::Pass };
            Outcome::one(
                status,
                json!({
                    "verdict": "NotRare",
                    "gamma": gamma,
                    "min_ratio": min_ratio,
                    "margin": min_ratio - gamma,
                    "argmin": argmin.to_text(),
                    "argmin_dim": argmin_dim,
                    "near_threshold": near_threshold,
                    "examined": r.examined as u64,
                    "skipped": r.skipped as u64,
                }),
                format!("NotRare\nmin ratio = {min_ratio}\nmargin = {}\nmaps examined = {}\n", min_ratio - gamma, r.examined),
            )
        }
    })
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct ConstructBadArgs {
    /// `lr` (list recovery) or `ld` (list decoding).
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub ell: Option<u32>,
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stream: Option<u64>,
    /// Also sample a code of this rate that contains the matrix, and check the witness against it.
    #[arg(long)]
    pub planted_rate: Option<String>,
    #[arg(long)]
    pub witness_out: Option<PathBuf>,
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
}

pub fn construct_bad(a: &ConstructBadArgs) -> Res<Outcome> {
    let n = require(&a.n, "n")?;
    let seed = require(&a.seed, "seed")?;
    let stream = a.stream.unwrap_or(0);
    let kind = require(&a.kind, "kind")?;
    let (m, witness, claim, provenance) = match kind.as_str() {
        "lr" => {
            let rho = parse_ratio(a.rho.as_deref().unwrap_or("0"))?;
            let params = LrParams::new(rho, require(&a.ell, "ell")?, require(&a.t, "t")?, require(&a.d, "d")?).map_err(err)?;
            let c = LrConstruction::new(&params, DEFAULT_ENUM_CAP).map_err(err)?;
            let r = c.realize(n, seed, stream).map_err(err)?;
            let w = c.witness(&r.m, Some(&r.provenance)).map_err(err)?;
            let claim = Claim::ListRecovery { alpha: Ratio::from_integer(1) - rho, ell: params.ell as usize, l: c.list_size() };
            (r.m.clone(), w.to_witness(&r.m), claim, to_value(&r.provenance)?)
        }
        "ld" => {
            let p = parse_ratio(&require(&a.p, "p")?)?;
            let params = LdParams::new(a.q.unwrap_or(2), p, require(&a.l, "l")?).map_err(err)?;
            let tau = tau_list_decoding(&params, DEFAULT_ENUM_CAP).map_err(err)?;
            let r = realize_list_decoding(&tau, n, seed, stream).map_err(err)?;
            let w = witness_list_decoding(&r.m, Some(&r.provenance), p).map_err(err)?;
            (r.m.clone(), w.to_witness(&r.m), Claim::ListDecoding { p, l: params.l }, to_value(&r.provenance)?)
        }
        other => return Err(format!("--kind must be `lr` or `ld`, got `{other}`")),
    };
    let mut valid = verify_witness(None, &witness, claim).map_err(err)?;
    let mut planted = Value::Null;
    if let Some(rs) = &a.planted_rate {
        let code = sample_planted(&m, parse_ratio(rs)?, seed, stream + 1).map_err(err)?;
        let in_code = verify_witness(Some(&code), &witness, claim).map_err(err)?;
        valid &= in_code;
        planted = json!({ "rate": rs, "dimension": code.dimension(), "generator": code.generator().to_text(), "witness_in_code": in_code });
    }
    if let Some(p) = &a.witness_out {
        write(p, &serde_json::to_string_pretty(&witness).map_err(err)?)?;
    }
    if let Some(p) = &a.matrix_out {
        write(p, &m.to_text())?;
    }
    let rec = json!({
        "kind": kind,
        "matrix": m.to_text(),
        "provenance": provenance,
        "witness": witness,
        "witness_valid": valid,
        "planted": planted,
    });
    let text = format!("{}witness valid: {valid}\n", m.to_text());
    Ok(Outcome::one(if valid { Status::Pass } else { Status::Violated }, rec, text))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct VerifyWitnessArgs {
    /// JSON witness as written by `construct-bad --witness-out`.
    #[arg(long)]
    pub witness: Option<PathBuf>,
    /// `ld`, `ar` or `lr`.
    #[arg(long)]
    pub claim: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub ell: Option<usize>,
    /// Generator file; when given, every witness word must be a codeword.
    #[arg(long)]
    pub generator: Option<PathBuf>,
}

pub fn verify_witness_cmd(a: &VerifyWitnessArgs) -> Res<Outcome> {
    let w: Witness = serde_json::from_str(&read(&require(&a.witness, "witness")?)?).map_err(|e| format!("witness: {e}"))?;
    let l = require(&a.l, "l")?;
    let claim = match require(&a.claim, "claim")?.as_str() {
        "ld" => Claim::ListDecoding { p: parse_ratio(&require(&a.p, "p")?)?, l },
        "ar" => Claim::AvgRadius { p: parse_ratio(&require(&a.p, "p")?)?, l },
        "lr" => Claim::ListRecovery { alpha: parse_ratio(&require(&a.alpha, "alpha")?)?, ell: require(&a.ell, "ell")?, l },
        other => return Err(format!("--claim must be `ld`, `ar` or `lr`, got `{other}`")),
    };
    let code = match &a.generator {
        Some(p) => Some(LinearCode::from_generator(&Mat::from_text(&read(p)?).map_err(err)?)),
        None => None,
    };
    let valid = verify_witness(code.as_ref(), &w, claim).map_err(err)?;
    let status = if valid { Status::Pass } else { Status::Violated };
    Ok(Outcome::one(status, json!({ "valid": valid }), format!("witness valid: {valid}\n")))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct PotentialParamArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<String>,
    /// Gap to capacity; alternatively give `--k` for rate exactly k/n.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub l: Option<usize>,
}

impl PotentialParamArgs {
    fn params(&self) -> Res<(PotentialParams, &'static str)> {
        let n = require(&self.n, "n")?;
        let p = parse_ratio(&require(&self.p, "p")?)?;
        let hp = h2(ratio_f64(p));
        let (rate, eps) = match (self.k, self.epsilon) {
            (Some(k), _) => (k as f64 / n as f64, 1.0 - hp - k as f64 / n as f64),
            (None, Some(e)) => (1.0 - hp - e, e),
            (None, None) => return Err("missing --epsilon or --k".into()),
        };
        if !(eps > 0.0 && rate > 0.0) {
            return Err(format!("epsilon = {eps} must lie in (0, 1 - h(p))"));
        }
        let l = self.l.unwrap_or_else(|| default_list_size(ratio_f64(p), eps));
        let (lambda, source) = match &self.lambda {
            Some(s) => (parse_ratio(s)?, "given"),
            None => match choose_lambda_at_rate(p, rate, eps, n, l) {
                Ok(c) => (c.lambda, "chosen"),
                Err(PotentialError::NoFeasibleLambda { smallest_n }) => {
                    eprintln!("note: no lambda meets the list-size condition at n = {n} (feasible from n = {smallest_n:?}); using eta = epsilon/2");
                    (lambda_for_eta(p, rate, eps / 2.0).map_err(err)?, "slack")
                }
                Err(e) => return Err(err(e)),
            },
        };
        let params = match self.k {
            Some(k) => PotentialParams::with_dimension(n, p, k, lambda, Some(l)),
            None => PotentialParams::new(n, p, eps, lambda, Some(l)),
        }
        .map_err(err)?;
        Ok((params, source))
    }
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct PotentialArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: PotentialParamArgs,
    /// Basis vectors as bit strings, coordinate 0 first.
    #[arg(long, value_delimiter = ',')]
    pub basis: Option<Vec<String>>,
    /// Binary generator matrix file.
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Without a basis or generator, grow a code from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stream: Option<u64>,
}

fn parse_bits(s: &str, n: usize) -> Res<u64> {
    if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(format!("basis vector `{s}` is not a bit string of length {n}"));
    }
    Ok(s.chars().enumerate().fold(0u64, |acc, (i, c)| if c == '1' { acc | 1 << i } else { acc }))
}

pub fn potential(a: &PotentialArgs) -> Res<Outcome> {
    let (params, source) = a.params.params()?;
    let n = params.n;
    let code = if let Some(b) = &a.basis {
        BinCode::from_basis(n, &b.iter().map(|s| parse_bits(s, n)).collect::<Res<Vec<_>>>()?)
    } else if let Some(p) = &a.generator {
        BinCode::from_linear(&LinearCode::from_generator(&Mat::from_text(&read(p)?).map_err(err)?)).map_err(err)?
    } else {
        let seed = a.seed.ok_or("give --basis, --generator or --seed")?;
        grow_code(&params, seed, a.stream.unwrap_or(0), false, DEFAULT_SPACE_CAP).map_err(err)?.code
    };
    if code.n() != n {
        return Err(format!("code length {} differs from --n {n}", code.n()));
    }
    let s = potential_s(&code, &params, DEFAULT_SPACE_CAP).map_err(err)?;
    let lemma = check_entropy_sum_all(&code, &params, DEFAULT_SPACE_CAP).map_err(err)?;
    let chain = verify_theorem_chain(&code, &params, DEFAULT_SPACE_CAP).map_err(err)?;
    let near = (s.s - 2.0).abs() <= TOL;
    let violated = (lemma.applicable && lemma.violations > 0)
        || (chain.applicable && chain.l_condition && (chain.conclusion_failures > 0 || chain.step_failures.iter().any(|&f| f > 0)))
        || !chain.agreement;
    let status = if violated {
        Status::Violated
    } else if near {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let rec = json!({
        "params": params,
        "lambda_source": source,
        "l_condition": params.l_condition(),
        "dim": code.dim(),
        "potential": s,
        "entropy_sum": lemma,
        "chain": chain,
    });
    let text = format!(
        "n = {n}, k = {}, lambda = {} ({source}), eta = {:.6}, L = {}\nS = {}\nmax A = {}\nS <= 2: {}\nL condition: {}\nentropy-sum violations: {} of {}\nmin average radius: {} (above p: {})\nchain conclusion failures: {}\n",
        code.dim(),
        params.lambda,
        params.eta,
        params.l,
        s.s,
        s.max_a,
        s.s <= 2.0,
        params.l_condition(),
        lemma.violations,
        lemma.x_checked,
        chain.min_avg_radius,
        chain.min_avg_above_p,
        chain.conclusion_failures
    );
    Ok(Outcome::one(status, rec, text))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct GrowArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: PotentialParamArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stream: Option<u64>,
    /// Also compute the exact next-step exceedance frequency at each step.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub markov: Option<bool>,
}

pub fn grow(a: &GrowArgs) -> Res<Outcome> {
    let (params, source) = a.params.params()?;
    let seed = require(&a.seed, "seed")?;
    let t = grow_code(&params, seed, a.stream.unwrap_or(0), a.markov.unwrap_or(false), DEFAULT_SPACE_CAP).map_err(err)?;
    let mut rec = to_value(&t)?;
    rec["lambda_source"] = json!(source);
    rec["basis"] = json!(t.code.basis().iter().map(|b| format!("{b:#x}")).collect::<Vec<_>>());
    Ok(Outcome::one(Status::Pass, rec, t.to_csv()))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct McArgs {
    /// Type file; without it the list-decoding type from `--ld-q`, `--ld-p`, `--ld-l` is used.
    #[arg(long)]
    pub tau: Option<PathBuf>,
    #[arg(long)]
    pub ld_q: Option<u32>,
    #[arg(long)]
    pub ld_p: Option<String>,
    #[arg(long)]
    pub ld_l: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<String>>,
    /// Rates given relative to the crossover `1 - min normalized entropy`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub offsets: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub codeword_cap: Option<u64>,
    #[arg(long)]
    pub node_cap: Option<u64>,
}

pub fn mc(a: &McArgs) -> Res<Outcome> {
    let tau = match &a.tau {
        Some(_) => load_tau(&a.tau)?,
        None => {
            let p = parse_ratio(&require(&a.ld_p, "ld-p (or --tau)")?)?;
            let params = LdParams::new(a.ld_q.unwrap_or(2), p, require(&a.ld_l, "ld-l")?).map_err(err)?;
            tau_list_decoding(&params, DEFAULT_ENUM_CAP).map_err(err)?
        }
    };
    let seed = require(&a.seed, "seed")?;
    let trials = a.trials.unwrap_or(100);
    let ns = require(&a.ns, "ns")?;
    if ns.is_empty() || trials == 0 {
        return Err("--ns must be nonempty and --trials positive".into());
    }
    let (min_ratio, _) = min_normalized_entropy(&tau, DEFAULT_SUBSPACE_CAP).map_err(err)?;
    let crossover = 1.0 - min_ratio;
    let mut rates: Vec<(String, Option<Ratio<i64>>)> = Vec::new();
    for r in a.rates.iter().flatten() {
        rates.push((r.clone(), Some(parse_ratio(r)?)));
    }
    for &o in a.offsets.iter().flatten() {
        let r = f64_to_ratio(crossover + o);
        let valid = r > Ratio::from_integer(0) && r < Ratio::from_integer(1);
        rates.push((format!("crossover{o:+}"), valid.then_some(r)));
    }
    if rates.is_empty() {
        return Err("give --rates or --offsets".into());
    }
    let cw_cap = a.codeword_cap.map_or(DEFAULT_CODEWORD_CAP, u128::from);
    let node_cap = a.node_cap.map_or(DEFAULT_NODE_CAP, u128::from);
    let mut records = Vec::new();
    let mut text = format!("crossover = {crossover}\nrate,n,trials,hits,frequency,ci_low,ci_high\n");
    let mut trends = Vec::new();
    for (label, rate) in &rates {
        let Some(rate) = rate else {
            records.push(json!({ "rate_label": label, "valid": false, "reason": "rate outside (0, 1)" }));
            let _ = writeln!(text, "{label},invalid rate");
            trends.push(json!({ "rate_label": label, "spearman": null }));
            continue;
        };
        let mut freqs = Vec::new();
        for &n in &ns {
            let r = mc_abundance(&tau, *rate, n, trials, seed, cw_cap, node_cap).map_err(err)?;
            let _ = writeln!(text, "{rate},{n},{},{},{},{},{}", r.trials, r.hits, r.frequency, r.ci95.0, r.ci95.1);
            freqs.push(r.frequency);
            let mut v = to_value(&r)?;
            v["rate_label"] = json!(label);
            v["valid"] = json!(true);
            records.push(v);
        }
        let nsf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let rho = spearman(&nsf, &freqs);
        let _ = writeln!(text, "# {label} ({rate}): spearman(n, frequency) = {}", rho.map_or("undefined".into(), |x| x.to_string()));
        trends.push(json!({ "rate_label": label, "rate": rate.to_string(), "spearman": rho }));
    }
    records.push(json!({ "summary": true, "crossover": crossover, "min_normalized_entropy": min_ratio, "trends": trends }));
    Ok(Outcome { status: Status::Pass, records, text })
}
