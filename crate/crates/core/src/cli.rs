//! The `hcc` command line: validation, evaluation, analysis, decomposition,
//! sampling and format conversion over the JSON interchange formats.
//!
//! Exit codes: 0 success, 1 validation failure (report on stdout), 2
//! malformed input or usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hcc::{Hcc, HccJson};
use crate::json;
use crate::mda::{Mda, TensorJson};
use crate::modemap::ModeMapJson;
use crate::network::Tem;
use crate::ops::{self, BaseOps, Op, Tom};
use crate::pwohg::{self, GenTensor, GtJson, Pwohg};
use crate::sampler::{self, SampleConstraints};

#[derive(Parser, Debug)]
#[command(name = "hcc", version, about = "Tensors, tensor operations and network blocks as combinatorial complexes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate one object; prints a JSON report.
    Check(CheckArgs),
    /// Evaluate a tensor operation.
    Eval(EvalArgs),
    /// Evaluate a tensor operation with the independent nested-loop oracle.
    Oracle(EvalArgs),
    /// Run a network block forward.
    Forward(ForwardArgs),
    /// Complexity signature of a network block.
    Signature(SignatureArgs),
    /// Split a tensor operation into a chain of binary operations.
    Decompose(DecomposeArgs),
    /// Substitute one tensor operation into an operand of another.
    Merge(MergeArgs),
    /// Sample random network blocks into a directory.
    Sample(SampleArgs),
    /// Convert between tensor, generalized tensor and complex formats.
    Convert(ConvertArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Target {
    #[arg(long)]
    pub hcc: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub tom: Option<PathBuf>,
    #[arg(long)]
    pub arch: Option<PathBuf>,
    #[arg(long)]
    pub modemap: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub target: Target,
    /// Operand tensors for `--tom`.
    #[arg(long, alias = "in", num_args = 1..)]
    pub operands: Vec<PathBuf>,
}

/// Base operations `star_diamond`, e.g. `mul_add` or `add_min`.
fn parse_ops(s: &str) -> std::result::Result<BaseOps, String> {
    let (a, b) = s.split_once('_').ok_or_else(|| format!("expected star_diamond, got {s}"))?;
    Ok(BaseOps::new(Op::parse(a).map_err(|e| e.to_string())?, Op::parse(b).map_err(|e| e.to_string())?))
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub tom: PathBuf,
    #[arg(long, alias = "in", num_args = 1.., required = true)]
    pub operands: Vec<PathBuf>,
    /// Override the operation's base operations.
    #[arg(long, value_parser = parse_ops)]
    pub ops: Option<BaseOps>,
}

#[derive(Args, Debug)]
pub struct ForwardArgs {
    #[arg(long)]
    pub arch: PathBuf,
    /// Inputs as `{"name": tensor, ..}`, or a bare tensor for a single input.
    /// Random inputs are drawn when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Weights as `{"name": tensor, ..}`; seeded initialization when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print every tensor rather than only the outputs.
    #[arg(long)]
    pub all: bool,
    /// Print shapes instead of values.
    #[arg(long)]
    pub shapes: bool,
}

#[derive(Args, Debug)]
pub struct SignatureArgs {
    #[arg(long)]
    pub arch: PathBuf,
    #[arg(long)]
    pub count_activations: bool,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub tom: PathBuf,
    #[arg(long, value_parser = parse_ops)]
    pub ops: Option<BaseOps>,
}

#[derive(Args, Debug)]
pub struct MergeArgs {
    /// Operation whose result is substituted.
    #[arg(long)]
    pub first: PathBuf,
    /// Operation receiving the substitution.
    #[arg(long)]
    pub second: PathBuf,
    /// Operand of `second` that `first` replaces.
    #[arg(long)]
    pub bind: usize,
    #[arg(long, value_parser = parse_ops)]
    pub ops: Option<BaseOps>,
}

fn parse_range(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{s}: {e}"));
    Ok([p(a)?, p(b.trim_start_matches('='))?])
}

fn parse_shape(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(['x', ',']).map(|d| d.trim().parse::<usize>().map_err(|e| format!("{s}: {e}"))).collect()
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_range, default_value = "2..5")]
    pub c_op: [usize; 2],
    #[arg(long, value_parser = parse_range, default_value = "5..16")]
    pub c_t: [usize; 2],
    #[arg(long, value_parser = parse_range, default_value = "2..4")]
    pub c_alpha: [usize; 2],
    #[arg(long, value_parser = parse_range, default_value = "2..4")]
    pub c_a: [usize; 2],
    #[arg(long, default_value_t = 11)]
    pub c_o_max: usize,
    /// Block input shape, e.g. `64x16x16`.
    #[arg(long, default_value = "64x16x16")]
    pub input: String,
    #[arg(long, default_value_t = 1 << 20)]
    pub max_elems: usize,
    #[arg(long, default_value_t = 1 << 22)]
    pub max_grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tensor,
    Gt,
    Hcc,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub from: Format,
    #[arg(long, value_enum)]
    pub to: Format,
    pub file: PathBuf,
    /// Strict mode check when reading a generalized tensor as an array.
    #[arg(long)]
    pub strict: bool,
}

/// A generalized tensor on disk: the graph plus optional per-vertex values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtFile {
    #[serde(flatten)]
    pub gt: GtJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

enum Outcome {
    Ok(Value),
    Invalid(Value),
}

fn load<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T> {
    json::load(p).map_err(|e| match e {
        Error::Io(m) => Error::Io(format!("{}: {m}", p.display())),
        Error::Malformed(m) => Error::Malformed(format!("{}: {m}", p.display())),
        other => Error::Malformed(format!("{}: {other}", p.display())),
    })
}

fn load_tensor(p: &Path) -> Result<Mda> {
    Mda::from_json(&load::<TensorJson>(p)?)
}

fn load_tom(p: &Path) -> Result<Tom> {
    let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    Tom::from_json_str(&text)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn check(a: &CheckArgs) -> Result<Outcome> {
    let t = &a.target;
    let (valid, report) = if let Some(p) = &t.hcc {
        let j: HccJson = load(p)?;
        match Hcc::from_json(&j) {
            Ok(h) => {
                let mut tensors = Vec::new();
                let mut ok = true;
                if h.rank() == 3 {
                    for &c in h.level(3) {
                        let r = pwohg::decode_rank3(&h, c).map(|g| g.check_socc());
                        let entry = match r {
                            Ok(s) => {
                                ok &= s.connected && s.consistent;
                                to_value(&s)?
                            }
                            Err(e) => {
                                ok = false;
                                json!({"error": e.to_string()})
                            }
                        };
                        tensors.push(entry);
                    }
                }
                (ok, json!({"valid": ok, "rank": h.rank(), "cells": h.num_cells(), "tensors": tensors}))
            }
            Err(e) => (false, json!({"valid": false, "errors": [e.to_string()]})),
        }
    } else if let Some(p) = &t.gt {
        let f: GtFile = load(p)?;
        let g = Pwohg::from_json(&f.gt)?;
        let s = g.check_socc();
        let ok = s.connected && s.consistent;
        let mut v = to_value(&s)?;
        v["valid"] = json!(ok);
        if ok {
            let m = g.assign_multi_indices(0)?;
            let labels = g.to_json().elements.unwrap_or_default();
            let idx: BTreeMap<&str, Vec<i64>> = labels
                .iter()
                .enumerate()
                .filter_map(|(u, l)| m.tuple_of(u).map(|t| (l.as_str(), m.from_origin(t))))
                .collect();
            v["indices"] = to_value(&idx)?;
        }
        (ok, v)
    } else if let Some(p) = &t.tom {
        let tom = load_tom(p)?;
        let r = if a.operands.is_empty() {
            let errors = tom.structure_errors();
            ops::TomReport { valid: errors.is_empty(), errors, column_sizes: tom.column_sizes().map(|s| s.into_iter().map(Some).collect()).unwrap_or_default() }
        } else {
            let xs = a.operands.iter().map(|p| load_tensor(p)).collect::<Result<Vec<_>>>()?;
            ops::validate_tom(&tom, &xs.iter().collect::<Vec<_>>())
        };
        let mut v = to_value(&r)?;
        v["complexity"] = to_value(&tom.complexity())?;
        (r.valid, v)
    } else if let Some(p) = &t.arch {
        let tem: Tem = load(p)?;
        let r = tem.validate();
        let mut v = to_value(&r)?;
        if r.valid {
            v["signature"] = to_value(&tem.signature(false))?;
            v["trace"] = to_value(&tem.shape_trace())?;
            v["parameters"] = json!(tem.parameter_count());
        }
        (r.valid, v)
    } else if let Some(p) = &t.modemap {
        let m: ModeMapJson = load(p)?;
        let r = m.build()?.verify();
        (r.valid, to_value(&r)?)
    } else {
        return Err(Error::Malformed("nothing to check".into()));
    };
    Ok(if valid { Outcome::Ok(report) } else { Outcome::Invalid(report) })
}

fn eval(a: &EvalArgs, oracle: bool) -> Result<Outcome> {
    let tom = load_tom(&a.tom)?;
    let xs = a.operands.iter().map(|p| load_tensor(p)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Mda> = xs.iter().collect();
    let r = ops::validate_tom(&tom, &refs);
    if !r.valid {
        return Ok(Outcome::Invalid(to_value(&r)?));
    }
    let base = a.ops.unwrap_or(tom.base_ops);
    let y = if oracle { crate::oracle::oracle_evaluate(&tom, &refs, base)? } else { ops::evaluate(&tom, &refs, base)? };
    Ok(Outcome::Ok(to_value(&y.to_json()?)?))
}

fn tensor_map(p: &Path, tem: &Tem, role: crate::network::Role) -> Result<BTreeMap<String, Mda>> {
    let v: Value = load(p)?;
    let names: Vec<&str> = tem.tensors.iter().filter(|t| t.role == role).map(|t| t.name.as_str()).collect();
    if v.get("shape").is_some() && names.len() == 1 {
        let t: TensorJson = serde_json::from_value(v).map_err(|e| Error::Malformed(e.to_string()))?;
        return Ok(BTreeMap::from([(names[0].to_string(), Mda::from_json(&t)?)]));
    }
    let m: BTreeMap<String, TensorJson> = serde_json::from_value(v).map_err(|e| Error::Malformed(e.to_string()))?;
    m.into_iter().map(|(k, t)| Ok((k, Mda::from_json(&t)?))).collect()
}

fn forward(a: &ForwardArgs) -> Result<Outcome> {
    let tem: Tem = load(&a.arch)?;
    let r = tem.validate();
    if !r.valid {
        return Ok(Outcome::Invalid(to_value(&r)?));
    }
    let inputs = match &a.input {
        Some(p) => tensor_map(p, &tem, crate::network::Role::Input)?,
        None => tem.random_inputs(a.seed)?,
    };
    let weights = match &a.weights {
        Some(p) => tensor_map(p, &tem, crate::network::Role::Weight)?,
        None => tem.init_weights(a.seed)?,
    };
    let mut b = inputs;
    b.extend(weights);
    let all = tem.forward_all(&b)?;
    let keep = |n: &str| a.all || tem.tensor(n).is_some_and(|t| t.role == crate::network::Role::Output);
    let mut out = serde_json::Map::new();
    for (k, m) in all.iter().filter(|(k, _)| keep(k)) {
        out.insert(k.clone(), if a.shapes { json!(m.shape()) } else { to_value(&m.to_json()?)? });
    }
    Ok(Outcome::Ok(Value::Object(out)))
}

fn convert(a: &ConvertArgs) -> Result<Outcome> {
    let gt = match a.from {
        Format::Tensor => pwohg::gt_from_mda(&load_tensor(&a.file)?)?,
        Format::Gt => {
            let f: GtFile = load(&a.file)?;
            GenTensor::from_pwohg(&Pwohg::from_json(&f.gt)?, f.values)?
        }
        Format::Hcc => {
            let h = Hcc::from_json(&load::<HccJson>(&a.file)?)?;
            let top = *h
                .level(3)
                .first()
                .ok_or_else(|| Error::Rank("complex has no rank-3 cell".into()))?;
            GenTensor::from_hcc(h, top)?
        }
    };
    let v = match a.to {
        Format::Tensor => to_value(&pwohg::mda_from_gt(&gt, a.strict)?.to_json()?)?,
        Format::Gt => to_value(&GtFile { gt: gt.graph.to_json(), values: gt.values.clone() })?,
        Format::Hcc => to_value(&gt.hcc.to_json())?,
    };
    Ok(Outcome::Ok(v))
}

fn sample(a: &SampleArgs) -> Result<Outcome> {
    let c = SampleConstraints {
        c_op: a.c_op,
        c_t: a.c_t,
        c_alpha: a.c_alpha,
        c_a: a.c_a,
        c_o_max: a.c_o_max,
        input: parse_shape(&a.input).map_err(Error::Malformed)?,
        max_elems: a.max_elems,
        max_grid: a.max_grid,
        ..SampleConstraints::default()
    };
    let m = sampler::emit_dataset(a.n, &c, a.seed, &a.out)?;
    Ok(Outcome::Ok(json!({"records": m.records.len(), "failures": m.failures.len(), "manifest": a.out.join("manifest.json")})))
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Check(a) => check(a),
        Command::Eval(a) => eval(a, false),
        Command::Oracle(a) => eval(a, true),
        Command::Forward(a) => forward(a),
        Command::Signature(a) => {
            let tem: Tem = load(&a.arch)?;
            Ok(Outcome::Ok(to_value(&tem.signature(a.count_activations))?))
        }
        Command::Decompose(a) => {
            let tom = load_tom(&a.tom)?;
            let chain = ops::decompose_to_binary(&tom, a.ops.unwrap_or(tom.base_ops))?;
            Ok(Outcome::Ok(to_value(&chain)?))
        }
        Command::Merge(a) => {
            let (t1, t2) = (load_tom(&a.first)?, load_tom(&a.second)?);
            let m = ops::merge_ops(&t1, &t2, a.bind, a.ops.unwrap_or(t2.base_ops))?;
            Ok(Outcome::Ok(to_value(&m)?))
        }
        Command::Sample(a) => sample(a),
        Command::Convert(a) => convert(a),
    }
}

/// Errors that describe bad input rather than a failed check.
fn is_malformed(e: &Error) -> bool {
    matches!(e, Error::Malformed(_) | Error::Io(_))
}

/// Run with explicit arguments and streams; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let emit = |out: &mut dyn Write, v: &Value| {
        let _ = writeln!(out, "{}", json::to_canonical(v).unwrap_or_default());
    };
    match dispatch(&cli.command) {
        Ok(Outcome::Ok(v)) => {
            emit(out, &v);
            0
        }
        Ok(Outcome::Invalid(v)) => {
            emit(out, &v);
            1
        }
        Err(e) if is_malformed(&e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
        Err(e) => {
            emit(out, &json!({"valid": false, "errors": [e.to_string()]}));
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
