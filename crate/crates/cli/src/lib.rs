//! The `wlat` command line: argument parsing, dispatch, caching and output.

pub mod cache;

use cache::{Cache, Lookup};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use wlat::cayleymaps::{self, Classical, MapReport};
use wlat::cohomology::{self, CohomError, Guard};
use wlat::exactla::{AbelianInvariants, IntMat};
use wlat::fingroup::{FinGroup, GroupError, SignedPerm};
use wlat::glattice::{self, GLattice, LatticeError};
use wlat::qp::{self, QpError, Scope};
use wlat::resolutions::{self, ResolutionError};

/// Version of the JSON output layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_GUARD: i32 = 2;
pub const EXIT_NOT_QP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "wlat", version, about = "Exact cohomology, resolutions and stable Cayley checks for Weyl-group lattices")]
struct Cli {
    /// Emit machine-readable JSON on stdout
    #[arg(long, global = true)]
    json: bool,
    /// Cache directory (default: $WLAT_CACHE_DIR, else ./.wlat-cache)
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Neither read nor write the cache
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads (accepted; work runs sequentially)
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct LatticeArg {
    /// Catalog descriptor such as ZA:4, Q:8:4, X2m:2, G2, or an inline JSON lattice spec
    #[arg(long)]
    lattice: Option<String>,
    /// File holding a JSON lattice spec
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// List the catalog, or describe one lattice
    Catalog {
        #[arg(long)]
        lattice: Option<String>,
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
    },
    /// Tate cohomology of a lattice restricted to a subgroup
    Cohom {
        #[command(flatten)]
        lat: LatticeArg,
        /// full | cyclic:(1 2 3) | gens:(1 2);(3 4) | table:n:p | diag:p
        #[arg(long, default_value = "full")]
        subgroup: String,
        #[arg(long, allow_negative_numbers = true, value_parser = clap::value_parser!(i32).range(-1..=2))]
        degree: i32,
        /// Largest cochain coordinate count
        #[arg(long, default_value_t = cohomology::DEFAULT_SIZE_GUARD)]
        guard: usize,
    },
    /// Ш¹ or Ш² of a lattice restricted to a subgroup
    Sha {
        #[command(flatten)]
        lat: LatticeArg,
        #[arg(long, default_value = "full")]
        subgroup: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        degree: u8,
        #[arg(long, default_value_t = cohomology::DEFAULT_SIZE_GUARD)]
        guard: usize,
    },
    /// Flasque or coflasque resolution by permutation lattices
    Resolve {
        #[command(flatten)]
        lat: LatticeArg,
        #[arg(long, value_enum, default_value_t = KindArg::Flasque)]
        kind: KindArg,
    },
    /// Quasi-permutation obstruction check
    QpCheck {
        #[command(flatten)]
        lat: LatticeArg,
        #[arg(long, default_value = "full")]
        subgroup: String,
        #[arg(long, value_enum, default_value_t = ScopeArg::All)]
        scope: ScopeArg,
    },
    /// Rebuild the certificates for the main families
    Reproduce {
        #[command(subcommand)]
        what: Repro,
    },
    /// Randomized verification of an explicit Cayley-type map
    VerifyMap {
        #[arg(long, value_enum)]
        map: MapArg,
        /// Size parameter; each map has its own default
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Inspect or clear the result cache
    Cache {
        #[command(subcommand)]
        action: CacheCmd,
    },
}

#[derive(Subcommand, Debug)]
enum Repro {
    /// Q(n,d) for d | n, d not in {1, n}
    An {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
    /// the type D family through rank 2m
    Dn {
        #[arg(long)]
        m: usize,
    },
    /// the p x t table subgroup of Sym_n
    Table {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
    /// classification table up to a rank bound
    Classification {
        #[arg(long, default_value_t = 5)]
        max_rank: usize,
    },
    /// the rank-four half-spin witness
    HalfSpin,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum CacheCmd {
    Stats,
    Clear,
    Path,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KindArg {
    Flasque,
    Coflasque,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ScopeArg {
    Full,
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MapArg {
    So,
    Sp,
    Pgl,
    WeilSo,
    WeilSp,
    Unipotent,
    Torus,
    Sl3,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Guard(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Failure(_) => EXIT_USAGE,
            CliError::Guard(_) => EXIT_GUARD,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Guard(_) => "guard",
            CliError::Failure(_) => "failure",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Guard(m) | CliError::Failure(m) => m,
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::ClosureBound { .. } | GroupError::SubgroupBound { .. } => CliError::Guard(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::Group(g) => g.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CohomError> for CliError {
    fn from(e: CohomError) -> Self {
        match e {
            CohomError::Degree(_) => CliError::Usage(e.to_string()),
            CohomError::ForeignSubgroup => CliError::Failure(e.to_string()),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

impl From<ResolutionError> for CliError {
    fn from(e: ResolutionError) -> Self {
        match e {
            ResolutionError::Group(g) => g.into(),
            ResolutionError::Lattice(l) => l.into(),
            ResolutionError::Cohom(c) => c.into(),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<QpError> for CliError {
    fn from(e: QpError) -> Self {
        if e.is_guard() {
            return CliError::Guard(e.to_string());
        }
        match e {
            QpError::BadParams(m) => CliError::Usage(m),
            QpError::Group(g) => g.into(),
            QpError::Lattice(l) => l.into(),
            QpError::Cohom(c) => c.into(),
            QpError::Resolution(r) => r.into(),
        }
    }
}

/// Where the cache lives: `--cache-dir`, then `$WLAT_CACHE_DIR`, then `./.wlat-cache`.
pub fn cache_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("WLAT_CACHE_DIR").filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(".wlat-cache"))
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                    if e.exit_code() == 0 =>
                {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let command = command_name(&cli.cmd);
    let cache = if cli.no_cache { None } else { Some(Cache::new(cache_dir(cli.cache_dir.clone()))) };
    let ctx = Ctx { cache, json: cli.json };
    match dispatch(&cli.cmd, &ctx, err) {
        Ok(mut v) => {
            let code = exit_code_for(command, &v);
            if cli.json {
                let mut obj = Map::new();
                obj.insert("schema".into(), json!(SCHEMA_VERSION));
                obj.insert("command".into(), json!(command));
                if let Value::Object(m) = &mut v {
                    strip_timing(m);
                    obj.extend(std::mem::take(m));
                } else {
                    obj.insert("result".into(), v);
                }
                let _ = writeln!(out, "{}", serde_json::to_string(&Value::Object(obj)).expect("json output"));
            } else {
                let _ = write!(out, "{}", render_text(command, &v));
            }
            code
        }
        Err(e) => {
            if cli.json {
                let doc = json!({
                    "schema": SCHEMA_VERSION,
                    "command": command,
                    "error": {"kind": e.kind(), "message": e.message()},
                });
                let _ = writeln!(out, "{doc}");
            } else {
                let _ = writeln!(err, "wlat: {}: {}", e.kind(), e.message());
            }
            e.code()
        }
    }
}

struct Ctx {
    cache: Option<Cache>,
    json: bool,
}

impl Ctx {
    /// Looks `op` up in the cache, computing and storing it on a miss.
    fn cached(
        &self,
        op: &str,
        material: &[&str],
        err: &mut dyn Write,
        compute: impl FnOnce() -> Result<Value, CliError>,
    ) -> Result<Value, CliError> {
        let Some(cache) = &self.cache else {
            return compute();
        };
        let key = Cache::key(op, material);
        match cache.get(&key) {
            Lookup::Hit(v) => return Ok(v),
            Lookup::Corrupt if !self.json => {
                let _ = writeln!(err, "wlat: evicted unreadable cache entry {key}");
            }
            _ => {}
        }
        let v = compute()?;
        if let Err(e) = cache.put(&key, op, &v) {
            let _ = writeln!(err, "wlat: cache write failed: {e}");
        }
        Ok(v)
    }
}

fn command_name(c: &Cmd) -> &'static str {
    match c {
        Cmd::Catalog { .. } => "catalog",
        Cmd::Cohom { .. } => "cohom",
        Cmd::Sha { .. } => "sha",
        Cmd::Resolve { .. } => "resolve",
        Cmd::QpCheck { .. } => "qp-check",
        Cmd::Reproduce { .. } => "reproduce",
        Cmd::VerifyMap { .. } => "verify-map",
        Cmd::Cache { .. } => "cache",
    }
}

fn exit_code_for(command: &str, v: &Value) -> i32 {
    if v.get("verdict").and_then(|x| x.as_str()) == Some("notQuasiPermutation") {
        return EXIT_NOT_QP;
    }
    match command {
        "verify-map" if v.get("ok") == Some(&json!(false)) => EXIT_USAGE,
        "reproduce" if v.get("mismatches").and_then(|x| x.as_u64()).is_some_and(|m| m > 0) => EXIT_USAGE,
        _ => EXIT_OK,
    }
}

fn strip_timing(m: &mut Map<String, Value>) {
    m.remove("millis");
    for v in m.values_mut() {
        match v {
            Value::Object(o) => strip_timing(o),
            Value::Array(a) => a.iter_mut().filter_map(|x| x.as_object_mut()).for_each(strip_timing),
            _ => {}
        }
    }
}

fn load_lattice(lat: &LatticeArg) -> Result<GLattice, CliError> {
    if let Some(path) = &lat.spec {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return Ok(glattice::lattice_from_json(&v)?);
    }
    let d = lat.lattice.as_deref().unwrap_or_default().trim();
    if d.starts_with('{') {
        let v: Value = serde_json::from_str(d).map_err(|e| CliError::Usage(format!("lattice spec: {e}")))?;
        return Ok(glattice::lattice_from_json(&v)?);
    }
    Ok(glattice::catalog_from_descriptor(d)?)
}

/// Generators of the subgroup named by `desc`, or `None` for the whole group.
fn subgroup_perms(desc: &str, degree: usize) -> Result<Option<Vec<SignedPerm>>, CliError> {
    let desc = desc.trim();
    if desc == "full" {
        return Ok(None);
    }
    let (kind, rest) = desc.split_once(':').ok_or_else(|| CliError::Usage(format!("bad subgroup descriptor {desc:?}")))?;
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad integer in {desc:?}")));
    let perms = match kind {
        "cyclic" => vec![SignedPerm::parse_cycles(rest, degree)?],
        "gens" => rest.split(';').map(|c| SignedPerm::parse_cycles(c, degree)).collect::<Result<Vec<_>, _>>()?,
        "table" => {
            let (n, p) = rest.split_once(':').ok_or_else(|| CliError::Usage(format!("expected table:n:p, got {desc:?}")))?;
            let n = num(n)?;
            if n != degree {
                return Err(CliError::Usage(format!("table subgroup of Sym_{n} on a lattice of degree {degree}")));
            }
            qp::table_subgroup(n, num(p)?)?.generators
        }
        "diag" => {
            let p = num(rest)?;
            if p < 2 || degree % p != 0 {
                return Err(CliError::Usage(format!("diag:{p} needs p to divide the degree {degree}")));
            }
            qp::yp_generators(degree, p)
        }
        other => return Err(CliError::Usage(format!("unknown subgroup kind {other:?}"))),
    };
    Ok(Some(perms))
}

/// The lattice restricted to the described subgroup, which becomes its acting group.
fn restricted(l: &GLattice, desc: &str) -> Result<GLattice, CliError> {
    match subgroup_perms(desc, l.group().degree())? {
        None => {
            l.group().try_order()?;
            Ok(l.clone())
        }
        Some(perms) => {
            let h = FinGroup::lazy(l.group().degree(), perms, desc);
            h.try_order()?;
            Ok(l.restrict_to(&h)?)
        }
    }
}

fn inv_json(a: &AbelianInvariants) -> Value {
    serde_json::to_value(a).expect("invariants serialize")
}

fn mat_json(m: &IntMat) -> Value {
    match m.to_i64_rows() {
        Some(rows) => json!(rows),
        None => json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m.get(i, j).to_string()).collect::<Vec<_>>()).collect::<Vec<_>>()),
    }
}

/// Summary of a lattice; the group order is `null` when the group exceeds the closure bound.
fn lattice_info(l: &GLattice) -> Result<Value, CliError> {
    Ok(json!({
        "name": l.name(),
        "rank": l.rank(),
        "group": l.group().label(),
        "group_order": l.group().try_order().ok(),
        "degree": l.group().degree(),
        "generators": l.group().generators().iter().map(|g| g.to_string()).collect::<Vec<_>>(),
    }))
}

fn dispatch(cmd: &Cmd, ctx: &Ctx, err: &mut dyn Write) -> Result<Value, CliError> {
    match cmd {
        Cmd::Catalog { lattice, spec } => {
            if lattice.is_none() && spec.is_none() {
                let entries: Vec<Value> =
                    glattice::catalog_listing().into_iter().map(|(k, v)| json!({"name": k, "usage": v})).collect();
                return Ok(json!({ "entries": entries }));
            }
            let l = load_lattice(&LatticeArg { lattice: lattice.clone(), spec: spec.clone() })?;
            let mut info = lattice_info(&l)?;
            info["generator_matrices"] = json!(l.generator_actions().iter().map(mat_json).collect::<Vec<_>>());
            info["action_verified"] = json!(l.try_verify_action().ok());
            Ok(json!({ "lattice": info }))
        }
        Cmd::Cohom { lat, subgroup, degree, guard } => {
            let l = load_lattice(lat)?;
            let r = restricted(&l, subgroup)?;
            let key = r.canonical_key();
            let (deg, g) = (degree.to_string(), guard.to_string());
            ctx.cached("cohom", &[&key, subgroup, &deg, &g], err, || {
                let s = r.group().whole();
                let res = cohomology::tate(&r, &s, *degree, Guard { limit: *guard })?;
                Ok(json!({
                    "lattice": lattice_info(&l)?,
                    "subgroup": subgroup,
                    "subgroup_order": s.order(),
                    "degree": degree,
                    "invariants": inv_json(&res.invariants),
                    "method": res.method,
                }))
            })
        }
        Cmd::Sha { lat, subgroup, degree, guard } => {
            let l = load_lattice(lat)?;
            let r = restricted(&l, subgroup)?;
            let key = r.canonical_key();
            let (deg, g) = (degree.to_string(), guard.to_string());
            ctx.cached("sha", &[&key, subgroup, &deg, &g], err, || {
                let s = r.group().whole();
                let res = if *degree == 2 {
                    cohomology::sha2_auto(&r, &s, Guard { limit: *guard })?
                } else {
                    cohomology::sha(&r, &s, 1, Guard { limit: *guard })?
                };
                Ok(json!({
                    "lattice": lattice_info(&l)?,
                    "subgroup": subgroup,
                    "subgroup_order": s.order(),
                    "degree": degree,
                    "invariants": inv_json(&res.invariants),
                    "method": res.method,
                    "cyclic_subgroups": res.cyclic_subgroups,
                }))
            })
        }
        Cmd::Resolve { lat, kind } => {
            let l = load_lattice(lat)?;
            let key = l.canonical_key();
            let k = format!("{kind:?}");
            ctx.cached("resolve", &[&key, &k], err, || {
                let res = match kind {
                    KindArg::Flasque => resolutions::flasque_resolution(&l)?,
                    KindArg::Coflasque => resolutions::coflasque_resolution(&l)?,
                };
                let end = match kind {
                    KindArg::Flasque => &res.right,
                    KindArg::Coflasque => &res.left,
                };
                let fl = resolutions::flasqueness(end)?;
                let end_ok = match kind {
                    KindArg::Flasque => fl.is_flasque,
                    KindArg::Coflasque => fl.is_coflasque,
                };
                Ok(json!({
                    "lattice": lattice_info(&l)?,
                    "kind": k.to_lowercase(),
                    "ranks": [res.left.rank(), res.middle.rank(), res.right.rank()],
                    "permutation_summands": res.witness,
                    "left_map": mat_json(&res.left_map.matrix),
                    "right_map": mat_json(&res.right_map.matrix),
                    "exact": res.is_exact(),
                    "end_term_ok": end_ok,
                    "end_term_check": fl,
                }))
            })
        }
        Cmd::QpCheck { lat, subgroup, scope } => {
            let l = load_lattice(lat)?;
            let r = restricted(&l, subgroup)?;
            let key = r.canonical_key();
            let sc = match scope {
                ScopeArg::Full => Scope::FullGroup,
                ScopeArg::All => Scope::AllSubgroups,
            };
            let scs = format!("{sc:?}");
            ctx.cached("qp-check", &[&key, subgroup, &scs], err, || {
                let rep = qp::sha2_obstruction(&r, sc)?;
                let mut v = serde_json::to_value(&rep).expect("report serializes");
                v["subgroup"] = json!(subgroup);
                v["scope"] = json!(sc);
                Ok(v)
            })
        }
        Cmd::Reproduce { what } => reproduce(what, ctx, err),
        Cmd::VerifyMap { map, n, trials, seed } => verify_map(*map, *n, *trials, *seed),
        Cmd::Cache { action } => {
            let dir = match &ctx.cache {
                Some(c) => c.dir().to_path_buf(),
                None => return Err(CliError::Usage("the cache command cannot be combined with --no-cache".into())),
            };
            let c = Cache::new(&dir);
            let path = dir.display().to_string();
            match action {
                CacheCmd::Path => Ok(json!({ "path": path })),
                CacheCmd::Stats => Ok(json!({ "path": path, "stats": c.stats() })),
                CacheCmd::Clear => {
                    let removed = c.clear().map_err(|e| CliError::Failure(e.to_string()))?;
                    Ok(json!({ "path": path, "removed": removed }))
                }
            }
        }
    }
}

fn reproduce(what: &Repro, ctx: &Ctx, err: &mut dyn Write) -> Result<Value, CliError> {
    let report = |r: qp::ObstructionReport| serde_json::to_value(&r).expect("report serializes");
    match what {
        Repro::An { n, d } => {
            let p = format!("{n}:{d}");
            ctx.cached("reproduce-an", &[&p], err, || Ok(report(qp::reproduce_an(*n, *d)?)))
        }
        Repro::Dn { m } => {
            let p = m.to_string();
            ctx.cached("reproduce-dn", &[&p], err, || Ok(report(qp::reproduce_dn(*m)?)))
        }
        Repro::HalfSpin => ctx.cached("reproduce-half-spin", &[], err, || Ok(report(qp::half_spin_rank4_witness()?))),
        Repro::Table { n, p } => {
            let t = qp::table_subgroup(*n, *p)?;
            Ok(json!({
                "n": t.n,
                "p": t.p,
                "generators": t.generators.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
                "order": t.group.try_order()?,
                "orbits": t.orbits.iter().map(|o| o.iter().map(|x| x + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }))
        }
        Repro::Classification { max_rank } => {
            let p = max_rank.to_string();
            ctx.cached("reproduce-classification", &[&p], err, || {
                let rows = qp::classification_report(*max_rank)?;
                let mismatches = rows.iter().filter(|r| r.mismatch).count();
                Ok(json!({ "max_rank": max_rank, "rows": rows, "mismatches": mismatches }))
            })
        }
    }
}

fn verify_map(map: MapArg, n: Option<usize>, trials: usize, seed: u64) -> Result<Value, CliError> {
    let bad = |e: cayleymaps::CayleyError| CliError::Usage(e.to_string());
    let need = |lo: usize, default: usize| -> Result<usize, CliError> {
        let v = n.unwrap_or(default);
        if v < lo {
            return Err(CliError::Usage(format!("--n must be at least {lo}")));
        }
        Ok(v)
    };
    let mut extra = Map::new();
    let rep: MapReport = match map {
        MapArg::So => cayleymaps::verify_classical(Classical::So(need(2, 3)?), trials, seed),
        MapArg::Sp => cayleymaps::verify_classical(Classical::Sp(need(1, 2)?), trials, seed),
        MapArg::Pgl => cayleymaps::verify_pgl(need(2, 3)?, trials, seed),
        MapArg::WeilSo => cayleymaps::verify_weil(Classical::So(need(1, 2)?), trials, seed).map_err(bad)?,
        MapArg::WeilSp => cayleymaps::verify_weil(Classical::Sp(need(1, 1)?), trials, seed).map_err(bad)?,
        MapArg::Unipotent => cayleymaps::verify_unipotent(need(2, 4)?, trials, seed),
        MapArg::Torus => {
            let g: Arc<FinGroup> = wlat::fingroup::weyl_d(need(2, 4)?);
            cayleymaps::verify_torus(&g, trials, seed)
        }
        MapArg::Sl3 => {
            let s = cayleymaps::sl3_pipeline(trials, seed);
            extra.insert("rational_outputs".into(), json!(s.rational_outputs));
            extra.insert("phi_psi_identity".into(), json!(s.phi_psi_identity));
            extra.insert("zeta_basis_ok".into(), json!(s.zeta_basis_ok));
            extra.insert("fixed_point_degenerate".into(), json!(cayleymaps::sl3_fixed_point_is_degenerate()));
            s.report
        }
    };
    let ok = rep.ok() && extra.get("zeta_basis_ok").is_none_or(|v| v == &json!(true));
    let mut v = serde_json::to_value(&rep).expect("report serializes");
    if let Value::Object(m) = &mut v {
        m.extend(extra);
        m.insert("ok".into(), json!(ok));
    }
    Ok(v)
}

fn fmt_inv(v: &Value) -> String {
    let torsion: Vec<String> = v
        .get("torsion")
        .and_then(|t| t.as_array())
        .map(|a| a.iter().map(|x| x.as_str().map(String::from).unwrap_or_else(|| x.to_string())).collect())
        .unwrap_or_default();
    let free = v.get("free_rank").and_then(|x| x.as_u64()).unwrap_or(0);
    let mut parts: Vec<String> = torsion.iter().map(|t| format!("Z/{t}")).collect();
    match free {
        0 => {}
        1 => parts.push("Z".into()),
        k => parts.push(format!("Z^{k}")),
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn s(v: &Value, k: &str) -> String {
    match v.get(k) {
        Some(Value::String(x)) => x.clone(),
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

fn render_report(v: &Value) -> String {
    let mut o = format!("{}: {}\n", s(v, "lattice"), s(v, "verdict"));
    for st in v.get("steps").and_then(|x| x.as_array()).into_iter().flatten() {
        let mark = if st.get("holds") == Some(&json!(true)) { "ok " } else { "FAIL" };
        o.push_str(&format!("  [{mark}] {} ({}; {})\n", s(st, "claim"), s(st, "method"), s(st, "anchor")));
    }
    if let Some(ms) = v.get("millis") {
        o.push_str(&format!("  {ms} ms\n"));
    }
    o
}

fn render_text(command: &str, v: &Value) -> String {
    let lat = |v: &Value| v.get("lattice").map(|l| s(l, "name")).unwrap_or_default();
    match command {
        "cohom" => format!("H^{}({}, {}) = {}  [{}]\n", s(v, "degree"), s(v, "subgroup"), lat(v), fmt_inv(&v["invariants"]), s(v, "method")),
        "sha" => format!("Sha^{}({}, {}) = {}  [{}]\n", s(v, "degree"), s(v, "subgroup"), lat(v), fmt_inv(&v["invariants"]), s(v, "method")),
        "resolve" => format!(
            "{} resolution of {}: ranks {}, exact {}, end term ok {}\n",
            s(v, "kind"),
            lat(v),
            s(v, "ranks"),
            s(v, "exact"),
            s(v, "end_term_ok")
        ),
        "qp-check" => render_report(v),
        "catalog" => match v.get("entries").and_then(|e| e.as_array()) {
            Some(es) => es.iter().map(|e| format!("{}\n", s(e, "usage"))).collect(),
            None => format!("{}\n", serde_json::to_string_pretty(&v["lattice"]).unwrap_or_default()),
        },
        "reproduce" => {
            if let Some(rows) = v.get("rows").and_then(|r| r.as_array()) {
                let mut o = String::new();
                for r in rows {
                    o.push_str(&format!(
                        "{:<12} {:<22} rank {:<2} expected {:<16} verdict {:<20} {}{}\n",
                        s(r, "lattice"),
                        s(r, "group"),
                        s(r, "rank"),
                        s(r, "expected"),
                        s(r, "verdict"),
                        s(r, "evidence"),
                        if r.get("mismatch") == Some(&json!(true)) { "  MISMATCH" } else { "" }
                    ));
                }
                o.push_str(&format!("mismatches: {}\n", s(v, "mismatches")));
                o
            } else if v.get("steps").is_some() {
                render_report(v)
            } else {
                format!("{}\n", serde_json::to_string_pretty(v).unwrap_or_default())
            }
        }
        "verify-map" => {
            let mut o = format!(
                "{}: {}/{} trials passed, {} resampled, seed {}\n",
                s(v, "name"),
                s(v, "passed"),
                s(v, "trials"),
                s(v, "resampled"),
                s(v, "seed")
            );
            if let Some(m) = v.get("checks").and_then(|c| c.as_object()) {
                for (k, n) in m {
                    o.push_str(&format!("  {k}: {n}\n"));
                }
            }
            for f in v.get("failures").and_then(|f| f.as_array()).into_iter().flatten() {
                o.push_str(&format!("  failure: {}\n", f.as_str().unwrap_or_default()));
            }
            o
        }
        "cache" => {
            if let Some(st) = v.get("stats") {
                format!("{}: {} entries, {} bytes\n", s(v, "path"), s(st, "entries"), s(st, "bytes"))
            } else if let Some(r) = v.get("removed") {
                format!("{}: removed {r} files\n", s(v, "path"))
            } else {
                format!("{}\n", s(v, "path"))
            }
        }
        _ => format!("{}\n", serde_json::to_string_pretty(v).unwrap_or_default()),
    }
}
