//! `liesym` command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::{json, Value};

use liesym::detsys::{self, Ansatz, Verdict};
use liesym::dsl::{self, Document};
use liesym::jetspace::{JetContext, Pde};
use liesym::liealg::{self, StructureConstants};
use liesym::numcheck::{self, FlowVerdict};
use liesym::prolong::VectorField;
use liesym::ratfunc::Poly;
use liesym::sample::{Sampler, DEFAULT_SEED};
use liesym::structure::{self, Subspace};
use liesym::symexpr::{self, Expr};
use liesym::telegraph::{self, ReportOptions};

mod docs;

const SCHEMA: u32 = 1;

/// Lie point symmetries of scalar PDEs: determining systems, symmetry
/// checks, commutator tables, adjoint actions and algebra structure.
#[derive(Parser, Debug)]
#[command(name = "liesym", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Emit JSON: on stdout when given alone, otherwise written to FILE
    #[arg(long, value_name = "FILE", num_args = 0..=1, default_missing_value = "-")]
    json: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Sampling {
    /// Seed of the random sample points
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Numeric tolerance (> 0)
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
}

#[derive(Args, Debug, Clone)]
struct Assume {
    /// Assumption such as `a>0` or `2*a^2 - k != 0`; repeatable
    #[arg(long, value_name = "ASSUMPTION")]
    assume: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse documents and list the declared objects
    Parse {
        /// Documents, read in order as one
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Generate the determining system of a PDE
    Determining {
        /// Document declaring the PDE
        pde_file: PathBuf,
        /// PDE name when the document declares several
        #[arg(long)]
        pde: Option<String>,
        #[command(flatten)]
        assume: Assume,
        #[command(flatten)]
        output: Output,
    },
    /// Decide whether vector fields are point symmetries of a PDE
    Check {
        /// Document declaring the PDE
        pde_file: PathBuf,
        /// Document with the fields, read after the PDE document
        field_file: PathBuf,
        /// Check only this field
        #[arg(long)]
        field: Option<String>,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        assume: Assume,
        #[command(flatten)]
        output: Output,
    },
    /// Compute the commutator table of a list of fields
    Table {
        /// Document with the basis fields
        fields_file: PathBuf,
        /// Document with an entered table to compare against
        #[arg(long, value_name = "TABLE_FILE")]
        diff: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Truncated series of Ad(exp(eps v_i)) in the computed table
    Adjoint {
        /// Document with the basis fields, then documents with matrices
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Generator index, 1-based
        #[arg(long)]
        generator: usize,
        /// Series order; defaults to the nilpotency index, or 8
        #[arg(long)]
        order: Option<usize>,
        /// Check this closed-form matrix against M' = -M ad^T, M(0) = I
        #[arg(long, value_name = "MATRIX")]
        verify: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Apply Ad(exp(eps v_i)) numerically to an element
    AdjointApply {
        /// Coefficients, comma separated
        #[arg(long, allow_hyphen_values = true)]
        element: String,
        /// Generator index, 1-based
        #[arg(long)]
        generator: usize,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        /// Document with the basis fields; defaults to the telegraph fields
        #[arg(long)]
        fields: Option<PathBuf>,
        /// Parameter value `name=value`; repeatable, missing ones are sampled
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Derived and lower central series, radical, center, Killing form
    Structure {
        /// Document with the basis fields or an entered table
        fields_file: PathBuf,
        /// Use this entered table instead of computing one from fields
        #[arg(long)]
        table: Option<String>,
        #[command(flatten)]
        assume: Assume,
        #[command(flatten)]
        output: Output,
    },
    /// Classify closed-form group maps against the flows of the fields
    Flows {
        /// Document with the fields
        fields_file: PathBuf,
        /// Document with the group maps, paired with the fields in order
        #[arg(long, value_name = "GROUPS_FILE")]
        groups: PathBuf,
        /// Number of sample points
        #[arg(long, default_value_t = 12)]
        samples: usize,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Residual of a transformed solution built from a seed solution
    Residuals {
        /// Seed solution U, an expression in the variables and parameters
        #[arg(long = "seed", value_name = "EXPR")]
        seed_solution: String,
        /// Transform recipe name
        #[arg(long)]
        transform: String,
        /// Group parameter; sampled from [-0.2, 0.2] when omitted
        #[arg(long, allow_hyphen_values = true)]
        epsilon: Option<String>,
        /// Document with the PDE and transforms; defaults to the telegraph fixture
        #[arg(long)]
        file: Option<PathBuf>,
        /// Number of sample points
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Seed of the random sample points
        #[arg(long, default_value_t = DEFAULT_SEED)]
        rng_seed: u64,
        /// Numeric tolerance (> 0)
        #[arg(long, default_value_t = 1e-8, value_parser = positive)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Check every printed object of the telegraph fixture
    PaperReport {
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Print the command reference in Markdown
    GenDocs,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// Failure to run a command at all; maps to exit code 2.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Run = Result<bool, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn extend(doc: &mut Document, path: &Path) -> Result<(), Failure> {
    let text = read(path)?;
    doc.extend(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load(paths: &[&Path]) -> Result<Document, Failure> {
    let mut doc = Document::default();
    for p in paths {
        extend(&mut doc, p)?;
    }
    Ok(doc)
}

enum Assumption {
    Positive(String),
    Nonzero(Poly),
}

fn parse_assumptions(list: &[String], ctx: &symexpr::Context) -> Result<Vec<Assumption>, Failure> {
    list.iter()
        .map(|a| {
            if let Some((lhs, rhs)) = a.split_once("!=") {
                if rhs.trim() != "0" {
                    return Err(Failure(format!("assumption `{a}`: expected `expr != 0`")));
                }
                let e = symexpr::parse(lhs, ctx).map_err(|e| Failure(format!("assumption `{a}`: {e}")))?;
                let p = Poly::from_expr(&e)
                    .ok_or_else(|| Failure(format!("assumption `{a}` is not polynomial")))?;
                Ok(Assumption::Nonzero(p))
            } else if let Some((lhs, rhs)) = a.split_once('>') {
                let name = lhs.trim();
                if rhs.trim() != "0" || !(ctx.is_param(name) || ctx.is_var(name)) {
                    return Err(Failure(format!(
                        "assumption `{a}`: expected `name>0` for a declared symbol"
                    )));
                }
                Ok(Assumption::Positive(name.to_string()))
            } else {
                Err(Failure(format!("assumption `{a}`: expected `name>0` or `expr != 0`")))
            }
        })
        .collect()
}

/// Declares the positive symbols of the assumptions in the document.
fn apply_assumptions(doc: &mut Document, assume: &Assume) -> Result<Vec<Assumption>, Failure> {
    let list = parse_assumptions(&assume.assume, doc.context())?;
    for a in &list {
        if let Assumption::Positive(n) = a {
            doc.extend(&format!("positive {n};"))?;
        }
    }
    Ok(list)
}

/// Splits generic nonvanishing conditions into those still assumed and
/// those implied by the user's assumptions.
fn discharge(polys: &[Poly], given: &[Assumption]) -> (Vec<String>, Vec<String>) {
    let positive: Vec<&str> = given
        .iter()
        .filter_map(|a| if let Assumption::Positive(n) = a { Some(n.as_str()) } else { None })
        .collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for p in polys {
        let monomial = p.terms().count() == 1 && p.vars().iter().all(|v| positive.contains(&&**v));
        let listed = given.iter().any(|a| matches!(a, Assumption::Nonzero(q) if q.monic() == p.monic()));
        let s = structure::format_assumptions(std::slice::from_ref(p)).remove(0);
        if monomial || listed {
            dropped.push(s);
        } else {
            kept.push(s);
        }
    }
    kept.dedup();
    dropped.dedup();
    (kept, dropped)
}

fn emit(output: &Output, value: Value, text: &str) -> Result<(), Failure> {
    let mut value = value;
    if let Value::Object(m) = &mut value {
        let mut with_schema = serde_json::Map::new();
        with_schema.insert("schema".into(), json!(SCHEMA));
        with_schema.extend(std::mem::take(m));
        *m = with_schema;
    }
    let rendered = serde_json::to_string_pretty(&value)? + "\n";
    match output.json.as_deref() {
        Some(p) if p == Path::new("-") => print!("{rendered}"),
        Some(p) => {
            std::fs::write(p, rendered).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            print!("{text}");
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// The document's ansatz, or generic unknowns `xi1, …, xip, eta` of all
/// variables and the dependent variable.
fn ansatz_for(doc: &mut Document) -> Result<(JetContext, Ansatz), Failure> {
    let names: Vec<String> = match doc.ansatz() {
        Some(a) => a.to_vec(),
        None => {
            let ctx = doc.context();
            let dep = ctx.deps().first().ok_or_else(|| Failure("no dependent variable declared".into()))?;
            let mut args: Vec<String> = ctx.vars().iter().map(|v| v.to_string()).collect();
            args.push(dep.name.to_string());
            let args = args.join(", ");
            let mut names: Vec<String> = (1..=ctx.vars().len()).map(|i| format!("xi{i}")).collect();
            names.push("eta".into());
            let decl: Vec<String> = names.iter().map(|n| format!("{n}({args})")).collect();
            doc.extend(&format!("fun {}; ansatz {};", decl.join(", "), names.join(", ")))?;
            names
        }
    };
    let jc = doc.jet_context()?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let ansatz = Ansatz::declared(&jc, &refs)?;
    Ok((jc, ansatz))
}

fn cmd_parse(files: &[PathBuf], output: &Output) -> Run {
    let paths: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let doc = load(&paths)?;
    let ctx = doc.context();
    let names = |v: &[liesym::symexpr::Sym]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let jc = doc.jet_context()?;
    let fields: Vec<String> = doc.fields(&jc)?.iter().map(|f| format!("{}: {f}", f.name)).collect();
    let pdes: Vec<String> = doc
        .pde_decls()
        .iter()
        .map(|p| format!("{} [{}]: {} = {}", p.name, symexpr::format_jet(&p.lead), p.lhs, p.rhs))
        .collect();
    let value = json!({
        "params": names(ctx.params()),
        "vars": names(ctx.vars()),
        "deps": ctx.deps().iter().map(|d| d.name.to_string()).collect::<Vec<_>>(),
        "pdes": pdes,
        "fields": fields,
        "groups": doc.group_decls().iter().map(|g| g.name.clone()).collect::<Vec<_>>(),
        "transforms": doc.transforms().iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
        "equations": doc.equations().iter().map(|(n, e)| format!("{n}: {e} = 0")).collect::<Vec<_>>(),
        "tables": doc.table_names(),
        "matrices": doc.matrices().iter().map(|m| m.name.clone()).collect::<Vec<_>>(),
        "elements": doc.element_names(),
    });
    let mut text = String::new();
    if let Value::Object(m) = &value {
        for (k, v) in m {
            let items: Vec<String> =
                v.as_array().into_iter().flatten().filter_map(|s| s.as_str().map(str::to_string)).collect();
            if !items.is_empty() {
                writeln!(text, "{k}:")?;
                for i in items {
                    writeln!(text, "  {i}")?;
                }
            }
        }
    }
    emit(output, value, &text)?;
    Ok(true)
}

fn cmd_determining(file: &Path, pde: Option<&str>, assume: &Assume, output: &Output) -> Run {
    let mut doc = load(&[file])?;
    apply_assumptions(&mut doc, assume)?;
    let (jc, ansatz) = ansatz_for(&mut doc)?;
    let pde = doc.pde(pde)?;
    let system = detsys::determining_system(&jc, &pde, &ansatz)?;
    let mut text = String::new();
    writeln!(text, "# determining system of {}: {} equations", pde.name, system.equations.len())?;
    for (i, e) in system.equations.iter().enumerate() {
        writeln!(text, "equation d{}: {} = 0;", i + 1, e.expr)?;
    }
    let value = json!({
        "pde": pde.name,
        "ansatz": ansatz.funcs.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "count": system.equations.len(),
        "equations": system.equations,
    });
    emit(output, value, &text)?;
    Ok(true)
}

fn symmetry_json(c: &detsys::SymmetryCheck) -> Value {
    let mut v = json!({ "field": c.field, "residual": c.reduced.to_string(), "numeric_max": c.numeric_max });
    match &c.verdict {
        Verdict::Symmetry => v["verdict"] = json!("Symmetry"),
        Verdict::NotSymmetry { witness } => {
            v["verdict"] = json!("NotSymmetry");
            v["witness"] = json!(witness);
        }
        Verdict::Unresolved { .. } => v["verdict"] = json!("Unresolved"),
    }
    v
}

fn cmd_check(
    pde_file: &Path,
    field_file: &Path,
    field: Option<&str>,
    s: &Sampling,
    assume: &Assume,
    output: &Output,
) -> Run {
    let mut doc = load(&[pde_file])?;
    apply_assumptions(&mut doc, assume)?;
    extend(&mut doc, field_file)?;
    let jc = doc.jet_context()?;
    let pde = doc.pde(None)?;
    let fields = match field {
        Some(n) => vec![doc.field(&jc, n)?],
        None => doc.fields(&jc)?,
    };
    if fields.is_empty() {
        return Err(Failure(format!("{}: no fields declared", field_file.display())));
    }
    let mut all = true;
    let mut results = Vec::new();
    let mut text = String::new();
    for f in &fields {
        let c = detsys::check_symmetry(&jc, &pde, f, s.seed, s.tol)?;
        all &= c.verdict.is_symmetry();
        match &c.verdict {
            Verdict::Symmetry => writeln!(text, "{}: Symmetry", f.name)?,
            Verdict::NotSymmetry { witness } => writeln!(
                text,
                "{}: NotSymmetry, |pr v(Δ)| = {:.3e}\n  residual: {}",
                f.name,
                witness.value.abs(),
                c.reduced
            )?,
            Verdict::Unresolved { residual } => {
                writeln!(text, "{}: Unresolved\n  residual: {residual}", f.name)?
            }
        }
        results.push(symmetry_json(&c));
    }
    let value = if results.len() == 1 { results.remove(0) } else { json!({ "checks": results }) };
    emit(output, value, &text)?;
    Ok(all)
}

fn table_json(sc: &StructureConstants) -> Value {
    let rows: Vec<Vec<String>> = sc.c.iter().map(|row| row.iter().map(|e| sc.format(e)).collect()).collect();
    json!({ "labels": sc.labels, "rows": rows })
}

fn table_text(sc: &StructureConstants) -> String {
    let mut text = String::new();
    let n = sc.dim();
    for i in 0..n {
        for j in i + 1..n {
            if !liesym::linalg::is_zero_vec(&sc.c[i][j]) {
                let _ = writeln!(text, "[{}, {}] = {}", sc.labels[i], sc.labels[j], sc.format(&sc.c[i][j]));
            }
        }
    }
    text
}

fn fields_of(doc: &Document) -> Result<(JetContext, Vec<VectorField>), Failure> {
    let jc = doc.jet_context()?;
    let fields = doc.fields(&jc)?;
    if fields.is_empty() {
        return Err(Failure("no fields declared".into()));
    }
    Ok((jc, fields))
}

fn cmd_table(fields_file: &Path, diff: Option<&Path>, output: &Output) -> Run {
    let mut doc = load(&[fields_file])?;
    let (_, fields) = fields_of(&doc)?;
    let sc = liealg::commutator_table(&fields)?;
    let jac = structure::jacobi_check(&sc);
    let mut text = table_text(&sc);
    let mut value = table_json(&sc);
    value["antisymmetric"] = json!(sc.antisymmetry_failures().is_empty());
    value["jacobi_failures"] = json!(jac.failures);
    let mut ok = true;
    if let Some(path) = diff {
        let before = doc.table_names().len();
        extend(&mut doc, path)?;
        let name = doc
            .table_names()
            .get(before)
            .cloned()
            .ok_or_else(|| Failure(format!("{}: no table declared", path.display())))?;
        let printed = doc.table(&name)?;
        if printed.labels != sc.labels {
            return Err(Failure(format!("table `{name}` is not over the labels {:?}", sc.labels)));
        }
        let diffs = liealg::diff_tables(&printed, &sc);
        let clashes: Vec<(usize, usize)> = printed.antisymmetry_failures();
        writeln!(text, "\n{} entries of `{name}` differ from the computed table", diffs.len())?;
        for d in &diffs {
            writeln!(
                text,
                "  [{}, {}]: {name} has {}, computed {}",
                sc.labels[d.i], sc.labels[d.j], d.left, d.right
            )?;
        }
        if !clashes.is_empty() {
            writeln!(text, "antisymmetry fails in `{name}` at:")?;
            for (i, j) in &clashes {
                writeln!(text, "  ({},{})/({},{})", i + 1, j + 1, j + 1, i + 1)?;
            }
        }
        value["diff"] = json!({
            "table": name,
            "entries": diffs,
            "antisymmetry_failures": clashes.iter().map(|(i, j)| [i + 1, j + 1]).collect::<Vec<_>>(),
        });
        ok = diffs.is_empty();
    }
    emit(output, value, &text)?;
    Ok(ok)
}

fn generator_index(i: usize, n: usize) -> Result<usize, Failure> {
    if i == 0 || i > n {
        return Err(Failure(format!("--generator must be in 1..={n}")));
    }
    Ok(i - 1)
}

fn cmd_adjoint(
    files: &[PathBuf],
    generator: usize,
    order: Option<usize>,
    verify: Option<&str>,
    output: &Output,
) -> Run {
    let paths: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let doc = load(&paths)?;
    let (_, fields) = fields_of(&doc)?;
    let sc = liealg::commutator_table(&fields)?;
    let i = generator_index(generator, sc.dim())?;
    let nil = liealg::nilpotency_index(&sc, i)?;
    let order = order.or(nil).unwrap_or(8);
    let series = liealg::adjoint_series(&sc, i, order, &Expr::param("eps"))?;
    let mut text = format!(
        "Ad(exp(eps {})) to order {order}{}; row j gives the image of {}\n",
        sc.labels[i],
        if nil.is_some_and(|n| n <= order) { " (exact: ad is nilpotent)" } else { "" },
        "v_j"
    );
    for (j, row) in series.iter().enumerate() {
        let entries: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(k, e)| format!("{}: {e}", sc.labels[k]))
            .collect();
        writeln!(text, "  {} -> {}", sc.labels[j], entries.join(", "))?;
    }
    let mut value = json!({
        "generator": sc.labels[i],
        "order": order,
        "nilpotency_index": nil,
        "matrix": series.iter().map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    let mut ok = true;
    if let Some(name) = verify {
        let m = doc.matrix(name)?;
        if m.entries.len() != sc.dim() {
            return Err(Failure(format!(
                "matrix `{name}` has {} rows, expected {}",
                m.entries.len(),
                sc.dim()
            )));
        }
        let check = liealg::adjoint_verify_closed(&sc, i, &m.entries, &m.param)?;
        ok = check.passed();
        if ok {
            writeln!(text, "{name}: satisfies M(0) = I and M' = -M ad^T")?;
        } else {
            let rows: Vec<String> = check.failing_rows().iter().map(|r| (r + 1).to_string()).collect();
            writeln!(text, "{name}: fails in rows {}", rows.join(", "))?;
            for f in check.initial.iter().chain(&check.derivative) {
                writeln!(text, "  ({}, {}): residual {}", f.row + 1, f.col + 1, f.residual)?;
            }
        }
        value["verification"] = json!({ "matrix": name, "passed": ok, "check": check });
    }
    emit(output, value, &text)?;
    Ok(ok)
}

fn telegraph_fields() -> Result<(Document, Vec<VectorField>), Failure> {
    let fx = telegraph::Fixtures::load()?;
    Ok((fx.verbatim, fx.fields))
}

#[allow(clippy::too_many_arguments)]
fn cmd_adjoint_apply(
    element: &str,
    generator: usize,
    epsilon: f64,
    fields: Option<&Path>,
    params: &[String],
    s: &Sampling,
    output: &Output,
) -> Run {
    let (doc, basis) = match fields {
        Some(p) => {
            let doc = load(&[p])?;
            let (_, f) = fields_of(&doc)?;
            (doc, f)
        }
        None => telegraph_fields()?,
    };
    let sc = liealg::commutator_table(&basis)?;
    let i = generator_index(generator, sc.dim())?;
    let x = dsl::numeric_element(element).map_err(Failure)?;
    if x.len() != sc.dim() {
        return Err(Failure(format!("--element has {} entries, expected {}", x.len(), sc.dim())));
    }
    let mut values = BTreeMap::new();
    for p in params {
        let (k, v) =
            p.split_once('=').ok_or_else(|| Failure(format!("--param `{p}`: expected name=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| Failure(format!("--param `{p}`: bad value")))?;
        values.insert(k.trim().to_string(), v);
    }
    let mut sampler = Sampler::new(s.seed);
    for p in doc.context().params() {
        let v = sampler.param_value(p);
        values.entry(p.to_string()).or_insert(v);
    }
    let y = liealg::adjoint_apply_numeric(&sc, &x, i, epsilon, &values)?;
    let text = format!(
        "{}\n",
        y.iter()
            .zip(&sc.labels)
            .filter(|(c, _)| c.abs() > 1e-15)
            .map(|(c, l)| format!("{c:.12} {l}"))
            .collect::<Vec<_>>()
            .join(" + ")
    );
    let value =
        json!({ "generator": sc.labels[i], "epsilon": epsilon, "params": values, "element": x, "image": y });
    emit(output, value, &text)?;
    Ok(true)
}

fn subspace_json(sc: &StructureConstants, s: &Subspace) -> Value {
    json!(structure::format_subspace(sc, s))
}

fn cmd_structure(file: &Path, table: Option<&str>, assume: &Assume, output: &Output) -> Run {
    let mut doc = load(&[file])?;
    let given = apply_assumptions(&mut doc, assume)?;
    let sc = match table {
        Some(t) => doc.table(t)?,
        None => liealg::commutator_table(&fields_of(&doc)?.1)?,
    };
    let derived = structure::derived_series(&sc);
    let lower = structure::lower_central_series(&sc);
    let radical = structure::radical_via_killing(&sc);
    let killing = structure::killing_report(&sc);
    let center = structure::center(&sc);
    let jac = structure::jacobi_check(&sc);
    let mut polys = Vec::new();
    for s in derived.iter().chain(&lower) {
        polys.extend(s.assumptions.iter().cloned());
    }
    polys.extend(radical.radical.assumptions.iter().cloned());
    polys.extend(liealg::denominators(&sc));
    let (kept, dropped) = discharge(&polys, &given);
    let value = json!({
        "dimension": sc.dim(),
        "jacobi_failures": jac.failures.len(),
        "derived_series": structure::dims(&derived),
        "lower_central_series": structure::dims(&lower),
        "solvable": structure::is_solvable(&sc),
        "nilpotent": structure::is_nilpotent(&sc),
        "derived_algebra": subspace_json(&sc, &derived[1.min(derived.len() - 1)]),
        "center": subspace_json(&sc, &center),
        "radical": {
            "basis": subspace_json(&sc, &radical.radical),
            "is_ideal": radical.is_ideal,
            "solvable": radical.solvable,
            "quotient_semisimple": radical.quotient_semisimple,
        },
        "killing": killing,
        "assumptions": kept,
        "discharged": dropped,
    });
    let mut text = String::new();
    writeln!(text, "dimension {}", sc.dim())?;
    writeln!(text, "derived series {:?}", structure::dims(&derived))?;
    writeln!(text, "lower central series {:?}", structure::dims(&lower))?;
    writeln!(text, "solvable {}, nilpotent {}", structure::is_solvable(&sc), structure::is_nilpotent(&sc))?;
    writeln!(text, "center ⟨{}⟩", structure::format_subspace(&sc, &center).join(", "))?;
    writeln!(text, "radical ⟨{}⟩", structure::format_subspace(&sc, &radical.radical).join(", "))?;
    writeln!(text, "Killing determinant {}", killing.determinant)?;
    if !kept.is_empty() {
        writeln!(text, "assuming {}", kept.join(", "))?;
    }
    if jac.failures.is_empty() {
        emit(output, value, &text)?;
        Ok(true)
    } else {
        writeln!(text, "Jacobi identity fails for {} triples", jac.failures.len())?;
        emit(output, value, &text)?;
        Ok(false)
    }
}

fn cmd_flows(fields_file: &Path, groups_file: &Path, samples: usize, s: &Sampling, output: &Output) -> Run {
    let doc = load(&[fields_file, groups_file])?;
    let (jc, fields) = fields_of(&doc)?;
    let groups = doc.group_decls();
    if groups.is_empty() {
        return Err(Failure(format!("{}: no groups declared", groups_file.display())));
    }
    let mut text = String::new();
    let mut results = Vec::new();
    let mut all = true;
    for (g, f) in groups.iter().zip(&fields) {
        let map = doc.group(&jc, &g.name)?;
        let c = numcheck::flow_verify(&jc, f, &map, samples, s.tol, s.seed)?;
        let label = match &c.verdict {
            FlowVerdict::ExactFlow => "ExactFlow".to_string(),
            FlowVerdict::TangentOnly => "TangentOnly".to_string(),
            FlowVerdict::Mismatch { scale: Some(l) } => format!("Mismatch (tangent = {l} * {})", f.name),
            FlowVerdict::Mismatch { scale: None } => "Mismatch".to_string(),
        };
        all &= c.verdict == FlowVerdict::ExactFlow;
        writeln!(text, "{} vs {}: {label}, max deviation {:.3e}", g.name, f.name, c.max_deviation)?;
        results.push(c);
    }
    emit(output, json!({ "seed": s.seed, "tol": s.tol, "flows": results }), &text)?;
    Ok(all)
}

#[allow(clippy::too_many_arguments)]
fn cmd_residuals(
    seed_solution: &str,
    transform: &str,
    epsilon: Option<&str>,
    file: Option<&Path>,
    points: usize,
    rng_seed: u64,
    tol: f64,
    output: &Output,
) -> Run {
    let doc = match file {
        Some(p) => load(&[p])?,
        None => telegraph::Fixtures::load()?.verbatim,
    };
    let jc = doc.jet_context()?;
    let pde: Pde = doc.pde(None)?;
    let u = symexpr::parse(seed_solution, doc.context()).map_err(|e| Failure(format!("--seed: {e}")))?;
    let seed_residual = numcheck::substitute_solution(&pde, &u)?;
    let recipe = doc.transform(transform)?;
    let eps = match epsilon {
        Some(e) => {
            let v = symexpr::parse(e, doc.context()).map_err(|err| Failure(format!("--epsilon: {err}")))?;
            if v.as_rational().is_none() {
                return Err(Failure("--epsilon must be a number".into()));
            }
            v
        }
        None => Expr::param(&recipe.param),
    };
    let candidate = numcheck::transform_solution(&jc, recipe, &u, &eps)?;
    let check = numcheck::residual_sample(&jc, &pde, &candidate, points, tol, rng_seed)?;
    let mut text = String::new();
    if !seed_residual.is_zero() {
        writeln!(text, "warning: the seed is not an exact solution: Δ[U] = {seed_residual}")?;
    }
    if check.exact_zero {
        writeln!(text, "{transform}: pass, residual is identically zero")?;
    } else {
        writeln!(
            text,
            "{transform}: {}, max residual {:.3e} over {} points",
            if check.pass { "pass" } else { "fail" },
            check.max_residual,
            check.points
        )?;
    }
    let value = json!({
        "transform": transform,
        "seed_solution": u.to_string(),
        "seed_exact": seed_residual.is_zero(),
        "epsilon": epsilon,
        "rng_seed": rng_seed,
        "check": check,
    });
    emit(output, value, &text)?;
    Ok(check.pass && seed_residual.is_zero())
}

fn cmd_paper_report(s: &Sampling, output: &Output) -> Run {
    let report = telegraph::run_paper_report(ReportOptions { seed: s.seed, tol: s.tol })?;
    let value = serde_json::to_value(&report)?;
    emit(output, value, &report.render_text())?;
    Ok(!report.has_unresolved())
}

fn run(cli: Cli) -> Run {
    match &cli.command {
        Command::Parse { files, output } => cmd_parse(files, output),
        Command::Determining { pde_file, pde, assume, output } => {
            cmd_determining(pde_file, pde.as_deref(), assume, output)
        }
        Command::Check { pde_file, field_file, field, sampling, assume, output } => {
            cmd_check(pde_file, field_file, field.as_deref(), sampling, assume, output)
        }
        Command::Table { fields_file, diff, output } => cmd_table(fields_file, diff.as_deref(), output),
        Command::Adjoint { files, generator, order, verify, output } => {
            cmd_adjoint(files, *generator, *order, verify.as_deref(), output)
        }
        Command::AdjointApply { element, generator, epsilon, fields, params, sampling, output } => {
            cmd_adjoint_apply(element, *generator, *epsilon, fields.as_deref(), params, sampling, output)
        }
        Command::Structure { fields_file, table, assume, output } => {
            cmd_structure(fields_file, table.as_deref(), assume, output)
        }
        Command::Flows { fields_file, groups, samples, sampling, output } => {
            cmd_flows(fields_file, groups, *samples, sampling, output)
        }
        Command::Residuals { seed_solution, transform, epsilon, file, points, rng_seed, tol, output } => {
            cmd_residuals(
                seed_solution,
                transform,
                epsilon.as_deref(),
                file.as_deref(),
                *points,
                *rng_seed,
                *tol,
                output,
            )
        }
        Command::PaperReport { sampling, output } => cmd_paper_report(sampling, output),
        Command::GenDocs => {
            print!("{}", docs::markdown(&mut Cli::command()));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
