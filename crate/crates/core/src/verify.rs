//! Check suite, overlay corrections, report rendering, and exit-code policy.
//!
//! A *check* is one exact zero-test (a Jacobi residual, a Hopf-axiom
//! residual, a morphism residual, or one row of a structure-map comparison).
//! Every check gets a stable, human-readable id; a run produces a [`Report`]
//! whose checks are sorted by id, so two runs over the same configuration are
//! byte-identical.
//!
//! An *overlay* is an ordered list of bracket overrides loaded from a text
//! file.  It never silently replaces the tables under test: each failing
//! check is first evaluated against the tables exactly as configured, and
//! only then re-evaluated against the overlaid tables.  A check that fails as
//! printed but passes after the overrides is reported as
//! `fail-with-overlay-pass`, keeping both facts visible.
//!
//! Overlay file grammar (line oriented):
//!
//! ```text
//! # comment
//! [presentation-name]
//! commutator A B = <expression> ; <justification>
//! ```
//!
//! `A` and `B` are generator names of the section's presentation; the
//! expression is parsed in that presentation's context.  Overridable targets
//! are letter-letter brackets and letter-momentum brackets (the stored table
//! entries); momenta commute among themselves by construction and cannot be
//! overridden.  The justification text is required.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::exprio::{self, ExprError};
use crate::ground::Rational;
use crate::hopf::{
    antipode, antipode_antimorphism_residual, antipode_conj_residual, antipode_left_residual,
    antipode_right_residual, coassoc_residual, coproduct, counit, counit_left_residual,
    counit_morphism_residual, counit_right_residual, delta_morphism_residual,
};
use crate::ncalg::{commutator, jacobi_residual, Element, Gen};
use crate::presentations::{
    build_presentation, make_map, map_by_name, presentation_by_name, MapBundle, MapId, MetricSpec,
    PresError, PresId, Presentation,
};

// ---------------------------------------------------------------------------
// Check kinds and results
// ---------------------------------------------------------------------------

/// The families of checks a suite can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckKind {
    /// Jacobi identity for every unordered generator triple.
    Jacobi,
    /// Coassociativity, both counit laws, and both antipode laws on each
    /// generator.
    HopfAxioms,
    /// The coproduct and counit respect every bracket relation.
    DeltaMorphism,
    /// The antipode reverses every bracket relation.
    AntipodeAntimorphism,
    /// The closed antipode form agrees with conjugation by the distinguished
    /// grouplike element on each generator.
    AntipodeEquivalence,
    /// A structure map is a Hopf-algebra isomorphism: bracket rows, coproduct,
    /// counit, antipode intertwining, and both round trips.
    MapMorphism,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Jacobi => "jacobi",
            CheckKind::HopfAxioms => "hopf-axioms",
            CheckKind::DeltaMorphism => "delta-morphism",
            CheckKind::AntipodeAntimorphism => "antipode-antimorphism",
            CheckKind::AntipodeEquivalence => "antipode-equivalence",
            CheckKind::MapMorphism => "map-morphism",
        }
    }

    pub fn from_name(s: &str) -> Option<CheckKind> {
        CheckKind::all().into_iter().find(|k| k.name() == s)
    }

    pub fn all() -> [CheckKind; 6] {
        [
            CheckKind::Jacobi,
            CheckKind::HopfAxioms,
            CheckKind::DeltaMorphism,
            CheckKind::AntipodeAntimorphism,
            CheckKind::AntipodeEquivalence,
            CheckKind::MapMorphism,
        ]
    }
}

/// Outcome of a single check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    FailWithOverlayPass,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::FailWithOverlayPass => "fail-with-overlay-pass",
        }
    }
}

/// One executed check.  `residual` is empty exactly when `status` is `pass`;
/// otherwise it is the canonically formatted nonzero residual of the tables
/// as configured (without overlay).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub target: String,
    pub status: Status,
    pub residual: String,
    pub ms: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub overlay: usize,
}

/// Echo of the configuration a report was produced from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub presentations: Vec<String>,
    pub metric: String,
    pub checks: Vec<String>,
    pub maps: Vec<String>,
    pub overlay: Option<String>,
    pub accept_overlay: bool,
    pub timings: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: ConfigEcho,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Overlay files are rejected with the line they fail on.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OverlayError {
    #[error("overlay line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("overlay line {line}: unknown target {what}")]
    UnknownTarget { line: usize, what: String },
}

/// Configuration problems detected before any check runs.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown presentation '{0}'")]
    UnknownPresentation(String),
    #[error("unknown check '{0}'")]
    UnknownCheck(String),
    #[error("unknown map '{0}'")]
    UnknownMap(String),
    #[error("the check list is empty")]
    EmptyChecks,
    #[error("metric: {0}")]
    Metric(String),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error(transparent)]
    Construction(#[from] PresError),
}

// ---------------------------------------------------------------------------
// Overlays
// ---------------------------------------------------------------------------

/// One bracket override: replace `[a, b]` of `presentation` with the element
/// denoted by `replacement` (parsed in that presentation's context).
#[derive(Clone, Debug)]
pub struct OverlayEntry {
    pub presentation: PresId,
    pub a: Gen,
    pub b: Gen,
    pub label: String,
    pub replacement: String,
    pub justification: String,
    pub line: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Overlay {
    pub entries: Vec<OverlayEntry>,
}

impl Overlay {
    pub fn touches(&self, id: PresId) -> bool {
        self.entries.iter().any(|e| e.presentation == id)
    }
}

fn overlay_expr_error(line: usize, err: &ExprError) -> OverlayError {
    OverlayError::Parse { line, message: format!("replacement expression: {err}") }
}

/// Parse and validate an overlay file.  Every entry is checked against a
/// generically built copy of its presentation: the generator names must
/// resolve, the pair must be an overridable table entry, and the replacement
/// expression must elaborate to a rank-one element (a pure coefficient when
/// the pair is letter-momentum).
pub fn load_overlay<R: Rational>(text: &str) -> Result<Overlay, OverlayError> {
    let mut entries = Vec::new();
    let mut section: Option<PresId> = None;
    let mut cache: BTreeMap<&'static str, Presentation<R>> = BTreeMap::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(h) => &raw_line[..h],
            None => raw_line,
        };
        let trimmed = stripped.trim();
        if trimmed.is_empty() {
            continue;
        }

        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(OverlayError::Parse {
                line,
                message: "section header must look like [presentation-name]".to_string(),
            })?;
            let id = presentation_by_name(name.trim()).map_err(|_| OverlayError::UnknownTarget {
                line,
                what: format!("presentation '{}'", name.trim()),
            })?;
            section = Some(id);
            continue;
        }

        let pres_id = section.ok_or(OverlayError::Parse {
            line,
            message: "entry appears before any [presentation-name] section".to_string(),
        })?;
        if !cache.contains_key(pres_id.name()) {
            let built = build_presentation(pres_id, &MetricSpec::Generic).map_err(|e| {
                OverlayError::Parse { line, message: format!("cannot build context: {e}") }
            })?;
            cache.insert(pres_id.name(), built);
        }
        let ctx = &cache[pres_id.name()];

        let rest = trimmed.strip_prefix("commutator").ok_or(OverlayError::Parse {
            line,
            message: "entry must start with the keyword 'commutator'".to_string(),
        })?;
        let (head, tail) = rest.split_once('=').ok_or(OverlayError::Parse {
            line,
            message: "entry is missing '=' before the replacement expression".to_string(),
        })?;
        let names: Vec<&str> = head.split_whitespace().collect();
        if names.len() != 2 {
            return Err(OverlayError::Parse {
                line,
                message: format!(
                    "expected exactly two generator names before '=', found {}",
                    names.len()
                ),
            });
        }
        let (expr_src, justification) = tail.split_once(';').ok_or(OverlayError::Parse {
            line,
            message: "entry is missing '; <justification>' after the expression".to_string(),
        })?;
        let justification = justification.trim();
        if justification.is_empty() {
            return Err(OverlayError::Parse {
                line,
                message: "the justification after ';' must not be empty".to_string(),
            });
        }

        let resolve = |n: &str| {
            ctx.gen_by_name(n).ok_or(OverlayError::UnknownTarget {
                line,
                what: format!("generator '{n}' in presentation '{}'", ctx.name()),
            })
        };
        let a = resolve(names[0])?;
        let b = resolve(names[1])?;
        let overridable = matches!(
            (a, b),
            (Gen::Letter(_), Gen::Letter(_)) | (Gen::Letter(_), Gen::P(_)) | (Gen::P(_), Gen::Letter(_))
        ) && a != b;
        if !overridable {
            return Err(OverlayError::UnknownTarget {
                line,
                what: format!(
                    "bracket [{}, {}]: only letter-letter and letter-momentum table \
                     entries can be overridden",
                    names[0], names[1]
                ),
            });
        }

        let expr_src = expr_src.trim().to_string();
        let parsed =
            exprio::parse::<R>(&expr_src, ctx).map_err(|e| overlay_expr_error(line, &e))?;
        let elem = parsed.into_element().ok_or(OverlayError::Parse {
            line,
            message: "replacement must be a rank-one element, not a tensor".to_string(),
        })?;
        if matches!((a, b), (Gen::Letter(_), Gen::P(_)) | (Gen::P(_), Gen::Letter(_)))
            && exprio::elem_as_scalar(&elem).is_none()
        {
            return Err(OverlayError::Parse {
                line,
                message: "a letter-momentum bracket must be replaced by a pure \
                          coefficient (no letters)"
                    .to_string(),
            });
        }

        entries.push(OverlayEntry {
            presentation: pres_id,
            a,
            b,
            label: format!("[{},{}]", names[0], names[1]),
            replacement: expr_src,
            justification: justification.to_string(),
            line,
        });
    }

    Ok(Overlay { entries })
}

/// Apply every entry targeting `p.id` to `p`, in file order.  Expressions are
/// re-elaborated in `p`'s own context so the overrides track the configured
/// metric.
pub fn apply_overlay<R: Rational>(
    p: &mut Presentation<R>,
    overlay: &Overlay,
) -> Result<(), OverlayError> {
    let mut staged = Vec::new();
    for e in overlay.entries.iter().filter(|e| e.presentation == p.id) {
        let parsed = exprio::parse::<R>(&e.replacement, p)
            .map_err(|err| overlay_expr_error(e.line, &err))?;
        let elem = parsed.into_element().ok_or(OverlayError::Parse {
            line: e.line,
            message: "replacement must be a rank-one element, not a tensor".to_string(),
        })?;
        staged.push((e, elem));
    }
    for (e, rhs) in staged {
        match (e.a, e.b) {
            (Gen::Letter(x), Gen::Letter(y)) => {
                if x > y {
                    p.table.set_comm(x, y, rhs);
                } else {
                    p.table.set_comm(y, x, rhs.neg());
                }
            }
            (Gen::Letter(l), Gen::P(mu)) => {
                let c = exprio::elem_as_scalar(&rhs).expect("validated at load");
                p.table.set_d(l, mu as usize, c);
            }
            (Gen::P(mu), Gen::Letter(l)) => {
                let c = exprio::elem_as_scalar(&rhs).expect("validated at load");
                p.table.set_d(l, mu as usize, c.neg());
            }
            _ => unreachable!("load_overlay admits only letter-letter and letter-momentum"),
        }
    }
    p.table.validate().map_err(|err| OverlayError::Parse {
        line: 0,
        message: format!("the overlaid relation table is not well formed: {err}"),
    })
}

// ---------------------------------------------------------------------------
// Suite configuration
// ---------------------------------------------------------------------------

/// Everything `run_suite` needs.  Labels are echoed verbatim into reports.
#[derive(Clone, Debug)]
pub struct SuiteConfig<R: Rational> {
    pub presentations: Vec<PresId>,
    pub metric: MetricSpec<R>,
    pub metric_label: String,
    pub checks: Vec<CheckKind>,
    pub maps: Vec<MapId>,
    pub overlay: Option<Overlay>,
    pub overlay_label: Option<String>,
    pub accept_overlay: bool,
    pub timings: bool,
}

impl<R: Rational> SuiteConfig<R> {
    /// All presentations, all checks, no maps, generic metric, no overlay.
    pub fn full_generic() -> Self {
        SuiteConfig {
            presentations: PresId::all().to_vec(),
            metric: MetricSpec::Generic,
            metric_label: "generic".to_string(),
            checks: CheckKind::all().to_vec(),
            maps: Vec::new(),
            overlay: None,
            overlay_label: None,
            accept_overlay: false,
            timings: false,
        }
    }
}

/// `"all"` or one presentation name.
pub fn parse_presentation_selection(s: &str) -> Result<Vec<PresId>, ConfigError> {
    if s == "all" {
        return Ok(PresId::all().to_vec());
    }
    presentation_by_name(s).map(|id| vec![id]).map_err(|_| {
        ConfigError::UnknownPresentation(s.to_string())
    })
}

/// `"all"` or a comma-separated list of check names.  Duplicates collapse;
/// the result keeps the canonical kind order.
pub fn parse_check_selection(s: &str) -> Result<Vec<CheckKind>, ConfigError> {
    if s == "all" {
        return Ok(CheckKind::all().to_vec());
    }
    let mut picked = BTreeSet::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let kind =
            CheckKind::from_name(part).ok_or_else(|| ConfigError::UnknownCheck(part.to_string()))?;
        picked.insert(kind);
    }
    if picked.is_empty() {
        return Err(ConfigError::EmptyChecks);
    }
    Ok(picked.into_iter().collect())
}

/// `"none"`, `"all"`, or one map name.
pub fn parse_map_selection(s: &str) -> Result<Vec<MapId>, ConfigError> {
    match s {
        "none" => Ok(Vec::new()),
        "all" => Ok(MapId::all().to_vec()),
        _ => map_by_name(s).map(|id| vec![id]).map_err(|_| ConfigError::UnknownMap(s.to_string())),
    }
}

/// Resolve a metric argument: `generic`, `null`, `minkowski`, or `file:PATH`
/// (sixteen whitespace-separated rationals, row-major).
pub fn metric_from_arg<R: Rational>(arg: &str) -> Result<MetricSpec<R>, ConfigError> {
    match arg {
        "generic" => Ok(MetricSpec::Generic),
        "null" => Ok(MetricSpec::null_plane()),
        "minkowski" => Ok(MetricSpec::minkowski()),
        other => {
            let path = other.strip_prefix("file:").ok_or_else(|| {
                ConfigError::Metric(format!(
                    "'{other}' is not one of generic, null, minkowski, or file:PATH"
                ))
            })?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Metric(format!("cannot read '{path}': {e}")))?;
            MetricSpec::parse_entries(&text).map_err(|e| ConfigError::Metric(e.to_string()))
        }
    }
}

// ---------------------------------------------------------------------------
// Check execution
// ---------------------------------------------------------------------------

/// A check evaluated against one set of tables, before overlay
/// classification.
struct Raw {
    id: String,
    zero: bool,
    residual: String,
    ms: u64,
}

struct Clock {
    start: Option<Instant>,
}

impl Clock {
    fn new(timings: bool) -> Self {
        Clock { start: timings.then(Instant::now) }
    }
    fn lap(&mut self) -> u64 {
        match &mut self.start {
            Some(t) => {
                let ms = t.elapsed().as_millis() as u64;
                *t = Instant::now();
                ms
            }
            None => 0,
        }
    }
}

fn gen_elem<R: Rational>(g: Gen) -> Element<R> {
    Element::from_gen(g)
}

fn jacobi_raws<R: Rational>(p: &Presentation<R>, timings: bool) -> Vec<Raw> {
    let gens = Gen::all();
    let elems: Vec<Element<R>> = gens.iter().map(|&g| gen_elem(g)).collect();
    let mut out = Vec::new();
    let mut clock = Clock::new(timings);
    for i in 0..gens.len() {
        for j in i..gens.len() {
            for k in j..gens.len() {
                let r = jacobi_residual(&p.table, &elems[i], &elems[j], &elems[k]);
                let zero = r.is_zero();
                out.push(Raw {
                    id: format!(
                        "jacobi/{}/{}.{}.{}",
                        p.name(),
                        p.gen_name(gens[i]),
                        p.gen_name(gens[j]),
                        p.gen_name(gens[k])
                    ),
                    zero,
                    residual: if zero { String::new() } else { exprio::format_element(p, &r) },
                    ms: clock.lap(),
                });
            }
        }
    }
    out
}

fn hopf_axiom_raws<R: Rational>(p: &Presentation<R>, timings: bool) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut clock = Clock::new(timings);
    for g in Gen::all() {
        let x = gen_elem::<R>(g);
        let ok = "hopf tables are validated at construction";

        let r3 = coassoc_residual(&p.table, &p.hopf, &x).expect(ok);
        let zero = r3.is_zero();
        out.push(Raw {
            id: format!("hopf-axioms/{}/{}/coassoc", p.name(), p.gen_name(g)),
            zero,
            residual: if zero { String::new() } else { exprio::format_tensor3(p, &r3) },
            ms: clock.lap(),
        });

        let one_sided: [(&str, Element<R>); 4] = [
            ("counit-left", counit_left_residual(&p.table, &p.hopf, &x).expect(ok)),
            ("counit-right", counit_right_residual(&p.table, &p.hopf, &x).expect(ok)),
            ("antipode-left", antipode_left_residual(&p.table, &p.hopf, &x).expect(ok)),
            ("antipode-right", antipode_right_residual(&p.table, &p.hopf, &x).expect(ok)),
        ];
        for (axiom, r) in one_sided {
            let zero = r.is_zero();
            out.push(Raw {
                id: format!("hopf-axioms/{}/{}/{}", p.name(), p.gen_name(g), axiom),
                zero,
                residual: if zero { String::new() } else { exprio::format_element(p, &r) },
                ms: clock.lap(),
            });
        }
    }
    out
}

fn delta_morphism_raws<R: Rational>(p: &Presentation<R>, timings: bool) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut clock = Clock::new(timings);
    for row in p.rows() {
        let x = gen_elem::<R>(row.lhs.0);
        let y = gen_elem::<R>(row.lhs.1);
        let rd = delta_morphism_residual(&p.table, &p.hopf, &x, &y, &row.rhs)
            .expect("hopf tables are validated at construction");
        let zero = rd.is_zero();
        out.push(Raw {
            id: format!("delta-morphism/{}/{}/coproduct", p.name(), row.label),
            zero,
            residual: if zero { String::new() } else { exprio::format_tensor2(p, &rd) },
            ms: clock.lap(),
        });

        let re = counit_morphism_residual(&p.hopf, &row.rhs);
        let zero = re.is_zero();
        out.push(Raw {
            id: format!("delta-morphism/{}/{}/counit", p.name(), row.label),
            zero,
            residual: if zero { String::new() } else { exprio::format_scalar(p, &re) },
            ms: clock.lap(),
        });
    }
    out
}

fn antimorphism_raws<R: Rational>(p: &Presentation<R>, timings: bool) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut clock = Clock::new(timings);
    for row in p.rows() {
        let x = gen_elem::<R>(row.lhs.0);
        let y = gen_elem::<R>(row.lhs.1);
        let r = antipode_antimorphism_residual(&p.table, &p.hopf, &x, &y, &row.rhs)
            .expect("hopf tables are validated at construction");
        let zero = r.is_zero();
        out.push(Raw {
            id: format!("antipode-antimorphism/{}/{}", p.name(), row.label),
            zero,
            residual: if zero { String::new() } else { exprio::format_element(p, &r) },
            ms: clock.lap(),
        });
    }
    out
}

fn conj_equivalence_raws<R: Rational>(p: &Presentation<R>, timings: bool) -> Vec<Raw> {
    if p.hopf.conj_alpha.is_none() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut clock = Clock::new(timings);
    for g in Gen::all() {
        if matches!(g, Gen::E) {
            continue;
        }
        let r = antipode_conj_residual(&p.table, &p.hopf, g)
            .expect("conjugation data is validated at construction");
        let zero = r.is_zero();
        out.push(Raw {
            id: format!("antipode-equivalence/{}/{}", p.name(), p.gen_name(g)),
            zero,
            residual: if zero { String::new() } else { exprio::format_element(p, &r) },
            ms: clock.lap(),
        });
    }
    out
}

fn map_raws<R: Rational>(b: &MapBundle<R>, timings: bool) -> Vec<Raw> {
    let s = &b.source;
    let t = &b.target;
    let name = b.id.name();
    let ok = "structure maps are validated at construction";
    let mut out = Vec::new();
    let mut clock = Clock::new(timings);

    for row in s.rows() {
        let fx = b.map.apply(&t.table, &gen_elem::<R>(row.lhs.0)).expect(ok);
        let fy = b.map.apply(&t.table, &gen_elem::<R>(row.lhs.1)).expect(ok);
        let frhs = b.map.apply(&t.table, &row.rhs).expect(ok);
        let r = commutator(&t.table, &fx, &fy).sub(&frhs);
        let zero = r.is_zero();
        out.push(Raw {
            id: format!("map-morphism/{name}/row{}", row.label),
            zero,
            residual: if zero { String::new() } else { exprio::format_element(t, &r) },
            ms: clock.lap(),
        });
    }

    for g in Gen::all() {
        let x = gen_elem::<R>(g);
        let fx = b.map.apply(&t.table, &x).expect(ok);
        let gname = s.gen_name(g);

        let lhs = coproduct(&t.table, &t.hopf, &fx).expect(ok);
        let rhs = b
            .map
            .apply_tensor(&t.table, &coproduct(&s.table, &s.hopf, &x).expect(ok))
            .expect(ok);
        let rd = lhs.sub(&rhs);
        let zero = rd.is_zero();
        out.push(Raw {
            id: format!("map-morphism/{name}/delta/{gname}"),
            zero,
            residual: if zero { String::new() } else { exprio::format_tensor2(t, &rd) },
            ms: clock.lap(),
        });

        let re = counit(&t.hopf, &fx).sub(&b.map.apply_scalar(&counit(&s.hopf, &x)).expect(ok));
        let zero = re.is_zero();
        out.push(Raw {
            id: format!("map-morphism/{name}/counit/{gname}"),
            zero,
            residual: if zero { String::new() } else { exprio::format_scalar(t, &re) },
            ms: clock.lap(),
        });

        let ra = antipode(&t.table, &t.hopf, &fx)
            .expect(ok)
            .sub(&b.map.apply(&t.table, &antipode(&s.table, &s.hopf, &x).expect(ok)).expect(ok));
        let zero = ra.is_zero();
        out.push(Raw {
            id: format!("map-morphism/{name}/antipode/{gname}"),
            zero,
            residual: if zero { String::new() } else { exprio::format_element(t, &ra) },
            ms: clock.lap(),
        });

        let back = b.inverse.apply(&s.table, &fx).expect(ok).sub(&x);
        let zero = back.is_zero();
        out.push(Raw {
            id: format!("map-morphism/{name}/roundtrip-fwd/{gname}"),
            zero,
            residual: if zero { String::new() } else { exprio::format_element(s, &back) },
            ms: clock.lap(),
        });

        let y = gen_elem::<R>(g);
        let fwd = b
            .map
            .apply(&t.table, &b.inverse.apply(&s.table, &y).expect(ok))
            .expect(ok)
            .sub(&y);
        let zero = fwd.is_zero();
        out.push(Raw {
            id: format!("map-morphism/{name}/roundtrip-bwd/{}", t.gen_name(g)),
            zero,
            residual: if zero { String::new() } else { exprio::format_element(t, &fwd) },
            ms: clock.lap(),
        });
    }
    out
}

fn presentation_raws<R: Rational>(
    p: &Presentation<R>,
    kinds: &BTreeSet<CheckKind>,
    timings: bool,
) -> Vec<Raw> {
    let mut out = Vec::new();
    if kinds.contains(&CheckKind::Jacobi) {
        out.extend(jacobi_raws(p, timings));
    }
    if kinds.contains(&CheckKind::HopfAxioms) {
        out.extend(hopf_axiom_raws(p, timings));
    }
    if kinds.contains(&CheckKind::DeltaMorphism) {
        out.extend(delta_morphism_raws(p, timings));
    }
    if kinds.contains(&CheckKind::AntipodeAntimorphism) {
        out.extend(antimorphism_raws(p, timings));
    }
    if kinds.contains(&CheckKind::AntipodeEquivalence) {
        out.extend(conj_equivalence_raws(p, timings));
    }
    out
}

/// Merge a printed-table run with an optional overlaid-table rerun.
fn classify(printed: Vec<Raw>, overlaid: Option<Vec<Raw>>, target: &str) -> Vec<CheckResult> {
    let rescue: BTreeMap<String, bool> = overlaid
        .map(|v| v.into_iter().map(|r| (r.id, r.zero)).collect())
        .unwrap_or_default();
    printed
        .into_iter()
        .map(|r| {
            let status = if r.zero {
                Status::Pass
            } else if rescue.get(&r.id).copied().unwrap_or(false) {
                Status::FailWithOverlayPass
            } else {
                Status::Fail
            };
            CheckResult {
                id: r.id,
                target: target.to_string(),
                status,
                residual: r.residual,
                ms: r.ms,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Suite driver
// ---------------------------------------------------------------------------

/// Run every configured check.  A failing check never aborts the run; it is
/// recorded and execution continues.  The returned report lists checks in
/// ascending id order, so equal configurations produce identical reports.
pub fn run_suite<R: Rational>(cfg: &SuiteConfig<R>) -> Result<Report, ConfigError> {
    if cfg.checks.is_empty() {
        return Err(ConfigError::EmptyChecks);
    }
    let kinds: BTreeSet<CheckKind> = cfg.checks.iter().copied().collect();
    let pres: Vec<PresId> =
        PresId::all().into_iter().filter(|id| cfg.presentations.contains(id)).collect();
    let maps: Vec<MapId> = MapId::all().into_iter().filter(|id| cfg.maps.contains(id)).collect();

    let mut checks: Vec<CheckResult> = Vec::new();

    for id in pres {
        let p = build_presentation(id, &cfg.metric)?;
        let printed = presentation_raws(&p, &kinds, cfg.timings);
        let overlaid = match &cfg.overlay {
            Some(ov) if ov.touches(id) => {
                let mut q = build_presentation(id, &cfg.metric)?;
                apply_overlay(&mut q, ov)?;
                Some(presentation_raws(&q, &kinds, cfg.timings))
            }
            _ => None,
        };
        checks.extend(classify(printed, overlaid, p.name()));
    }

    if kinds.contains(&CheckKind::MapMorphism) {
        for id in maps {
            let b = make_map(id, &cfg.metric)?;
            let printed = map_raws(&b, cfg.timings);
            let overlaid = match &cfg.overlay {
                Some(ov) if ov.touches(b.source.id) || ov.touches(b.target.id) => {
                    let mut b2 = make_map(id, &cfg.metric)?;
                    apply_overlay(&mut b2.source, ov)?;
                    apply_overlay(&mut b2.target, ov)?;
                    Some(map_raws(&b2, cfg.timings))
                }
                _ => None,
            };
            checks.extend(classify(printed, overlaid, b.id.name()));
        }
    }

    checks.sort_by(|a, b| a.id.cmp(&b.id));
    debug_assert!(checks.windows(2).all(|w| w[0].id != w[1].id), "check ids must be unique");

    let mut summary = Summary::default();
    for c in &checks {
        match c.status {
            Status::Pass => summary.pass += 1,
            Status::Fail => summary.fail += 1,
            Status::FailWithOverlayPass => summary.overlay += 1,
        }
    }

    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            presentations: cfg.presentations.iter().map(|p| p.name().to_string()).collect(),
            metric: cfg.metric_label.clone(),
            checks: cfg.checks.iter().map(|k| k.name().to_string()).collect(),
            maps: cfg.maps.iter().map(|m| m.name().to_string()).collect(),
            overlay: cfg.overlay_label.clone(),
            accept_overlay: cfg.accept_overlay,
            timings: cfg.timings,
        },
        checks,
        summary,
    })
}

// ---------------------------------------------------------------------------
// Rendering and exit policy
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Render a report.  Both formats are deterministic functions of the report.
pub fn render_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut s = String::new();
            let cfg = &report.config;
            s.push_str(&format!("verify {}\n", report.version));
            s.push_str(&format!("presentations: {}\n", cfg.presentations.join(", ")));
            s.push_str(&format!("metric: {}\n", cfg.metric));
            s.push_str(&format!("checks: {}\n", cfg.checks.join(", ")));
            s.push_str(&format!(
                "maps: {}\n",
                if cfg.maps.is_empty() { "none".to_string() } else { cfg.maps.join(", ") }
            ));
            if let Some(ov) = &cfg.overlay {
                s.push_str(&format!(
                    "overlay: {ov}{}\n",
                    if cfg.accept_overlay { " (accepted)" } else { "" }
                ));
            }
            s.push_str(&format!(
                "timings: {}\n\n",
                if cfg.timings { "on" } else { "off" }
            ));

            let id_w = report.checks.iter().map(|c| c.id.len()).max().unwrap_or(0);
            let st_w = report
                .checks
                .iter()
                .map(|c| c.status.as_str().len())
                .max()
                .unwrap_or(0);
            for c in &report.checks {
                let mut line = format!("{:<id_w$}  {:<st_w$}", c.id, c.status.as_str());
                if cfg.timings {
                    line.push_str(&format!("  {:>6} ms", c.ms));
                }
                if !c.residual.is_empty() {
                    line.push_str("  residual: ");
                    line.push_str(&c.residual);
                }
                while line.ends_with(' ') {
                    line.pop();
                }
                s.push_str(&line);
                s.push('\n');
            }
            s.push_str(&format!(
                "\nsummary: {} passed, {} failed, {} overlay-passed\n",
                report.summary.pass, report.summary.fail, report.summary.overlay
            ));
            s
        }
    }
}

/// Render and write a report to `out`, or to stdout when `out` is `None`.
pub fn emit_report(
    report: &Report,
    format: ReportFormat,
    out: Option<&std::path::Path>,
) -> Result<(), String> {
    let text = render_report(report, format);
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| format!("cannot write report to '{}': {e}", path.display())),
    }
}

/// Process exit code for a finished run: 0 when everything passed (counting
/// overlay-passes only if they were accepted), 1 otherwise.  Exit code 2 is
/// reserved for configuration and parse errors, which never reach a report.
pub fn exit_code(report: &Report, accept_overlay: bool) -> i32 {
    let ok = report.summary.fail == 0 && (accept_overlay || report.summary.overlay == 0);
    if ok {
        0
    } else {
        1
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn overlay_path() -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../overlays/null-plane.overlay")
    }

    fn shipped_overlay() -> Overlay {
        let text = std::fs::read_to_string(overlay_path()).expect("overlay file exists");
        load_overlay::<Rat>(&text).expect("shipped overlay loads")
    }

    #[test]
    fn empty_check_list_is_a_config_error() {
        let mut cfg = SuiteConfig::<Rat>::full_generic();
        cfg.checks.clear();
        assert!(matches!(run_suite(&cfg), Err(ConfigError::EmptyChecks)));
        assert!(matches!(parse_check_selection(" , "), Err(ConfigError::EmptyChecks)));
    }

    #[test]
    fn selection_parsers_resolve_names() {
        assert_eq!(parse_presentation_selection("all").unwrap().len(), 3);
        assert_eq!(
            parse_presentation_selection("kappa-new").unwrap(),
            vec![PresId::KappaNew]
        );
        assert!(matches!(
            parse_presentation_selection("septuagenarian"),
            Err(ConfigError::UnknownPresentation(_))
        ));
        assert_eq!(parse_check_selection("all").unwrap().len(), 6);
        assert_eq!(
            parse_check_selection("jacobi, jacobi ,hopf-axioms").unwrap(),
            vec![CheckKind::Jacobi, CheckKind::HopfAxioms]
        );
        assert!(matches!(
            parse_check_selection("jacobi,frobnicate"),
            Err(ConfigError::UnknownCheck(_))
        ));
        assert_eq!(parse_map_selection("none").unwrap(), vec![]);
        assert_eq!(parse_map_selection("all").unwrap().len(), 2);
        assert_eq!(parse_map_selection("null-iso").unwrap(), vec![MapId::NullIso]);
        assert!(matches!(parse_map_selection("warp"), Err(ConfigError::UnknownMap(_))));
    }

    #[test]
    fn overlay_rejects_malformed_and_unknown_entries() {
        let bad_expr = "[null-plane]\ncommutator E1 F2 = J3 *** 2 ; because\n";
        match load_overlay::<Rat>(bad_expr) {
            Err(OverlayError::Parse { line: 2, .. }) => {}
            other => panic!("expected a parse error on line 2, got {other:?}"),
        }

        let unknown_gen = "[null-plane]\ncommutator Q9 F2 = J3 ; because\n";
        match load_overlay::<Rat>(unknown_gen) {
            Err(OverlayError::UnknownTarget { line: 2, what }) => {
                assert!(what.contains("Q9"), "{what}");
            }
            other => panic!("expected an unknown-target error, got {other:?}"),
        }

        let not_a_table_entry = "[kappa-new]\ncommutator P0 P1 = z ; because\n";
        assert!(matches!(
            load_overlay::<Rat>(not_a_table_entry),
            Err(OverlayError::UnknownTarget { line: 2, .. })
        ));

        let missing_justification = "[null-plane]\ncommutator E1 F2 = J3 ;\n";
        assert!(matches!(
            load_overlay::<Rat>(missing_justification),
            Err(OverlayError::Parse { line: 2, .. })
        ));

        let orphan_entry = "commutator E1 F2 = J3 ; because\n";
        assert!(matches!(
            load_overlay::<Rat>(orphan_entry),
            Err(OverlayError::Parse { line: 1, .. })
        ));

        let bad_section = "[atlantean]\n";
        assert!(matches!(
            load_overlay::<Rat>(bad_section),
            Err(OverlayError::UnknownTarget { line: 1, .. })
        ));
    }

    #[test]
    fn overlay_respects_bracket_orientation() {
        // Writing the same override with the generators swapped and the sign
        // flipped must produce the same overlaid table.
        let fwd = "[kappa-new]\ncommutator M1 M2 = i*(g13*M1 + g23*M2 + g33*M3) ; orientation probe\n";
        let rev = "[kappa-new]\ncommutator M2 M1 = -i*(g13*M1 + g23*M2 + g33*M3) ; orientation probe\n";
        let mut a = build_presentation(PresId::KappaNew, &MetricSpec::<Rat>::Generic).unwrap();
        let mut b = build_presentation(PresId::KappaNew, &MetricSpec::<Rat>::Generic).unwrap();
        apply_overlay(&mut a, &load_overlay::<Rat>(fwd).unwrap()).unwrap();
        apply_overlay(&mut b, &load_overlay::<Rat>(rev).unwrap()).unwrap();
        for ra in a.rows() {
            let rb = b.row_for(ra.lhs.0, ra.lhs.1);
            assert_eq!(ra.rhs, rb.rhs, "row {}", ra.label);
        }
    }

    #[test]
    fn clean_presentations_pass_every_check() {
        let mut cfg = SuiteConfig::<Rat>::full_generic();
        cfg.presentations = vec![PresId::KappaOriginal, PresId::KappaNew];
        cfg.maps = vec![MapId::BasisChange];
        cfg.metric_label = "generic".into();
        let report = run_suite(&cfg).unwrap();
        assert_eq!(report.summary.fail, 0);
        assert_eq!(report.summary.overlay, 0);
        assert!(report.summary.pass > 700);
        assert_eq!(exit_code(&report, false), 0);
        for c in &report.checks {
            assert_eq!(c.status, Status::Pass, "{}", c.id);
            assert!(c.residual.is_empty(), "{}", c.id);
        }
        // ids are sorted and unique
        for w in report.checks.windows(2) {
            assert!(w[0].id < w[1].id);
        }
    }

    #[test]
    fn null_plane_defects_fail_without_an_overlay_and_rescue_with_it() {
        let mut cfg = SuiteConfig::<Rat>::full_generic();
        cfg.presentations = vec![PresId::NullPlane];
        cfg.maps = vec![MapId::NullIso];

        let plain = run_suite(&cfg).unwrap();
        assert_eq!(plain.summary.fail, 25, "13 jacobi + 7 coalgebra + 2 antipode + 3 map rows");
        assert_eq!(plain.summary.overlay, 0);
        assert_eq!(exit_code(&plain, false), 1);

        cfg.overlay = Some(shipped_overlay());
        cfg.overlay_label = Some("overlays/null-plane.overlay".into());
        let rescued = run_suite(&cfg).unwrap();
        assert_eq!(rescued.summary.fail, 0);
        assert_eq!(rescued.summary.overlay, 25);
        assert_eq!(rescued.summary.pass, plain.summary.pass);
        assert_eq!(exit_code(&rescued, false), 1, "overlay passes still fail unless accepted");
        assert_eq!(exit_code(&rescued, true), 0);

        // The same checks fail in both runs, with identical printed residuals.
        let failing: Vec<(&str, &str)> = plain
            .checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| (c.id.as_str(), c.residual.as_str()))
            .collect();
        let overlaid: Vec<(&str, &str)> = rescued
            .checks
            .iter()
            .filter(|c| c.status == Status::FailWithOverlayPass)
            .map(|c| (c.id.as_str(), c.residual.as_str()))
            .collect();
        assert_eq!(failing, overlaid);
        for (id, residual) in failing {
            assert!(!residual.is_empty(), "{id} must carry its exact residual");
        }
    }

    #[test]
    fn reports_render_deterministically_and_round_trip_through_json() {
        let mut cfg = SuiteConfig::<Rat>::full_generic();
        cfg.presentations = vec![PresId::NullPlane];
        cfg.checks = vec![CheckKind::Jacobi];
        cfg.maps = vec![];
        cfg.overlay = Some(shipped_overlay());
        cfg.overlay_label = Some("overlays/null-plane.overlay".into());

        let r1 = run_suite(&cfg).unwrap();
        let r2 = run_suite(&cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(
            render_report(&r1, ReportFormat::Text),
            render_report(&r2, ReportFormat::Text)
        );
        let j1 = render_report(&r1, ReportFormat::Json);
        assert_eq!(j1, render_report(&r2, ReportFormat::Json));

        let back: Report = serde_json::from_str(&j1).unwrap();
        assert_eq!(back, r1);

        let text = render_report(&r1, ReportFormat::Text);
        assert!(text.contains("fail-with-overlay-pass"));
        assert!(text.contains("summary: 273 passed, 0 failed, 13 overlay-passed"));
    }

    #[test]
    fn minkowski_metric_file_matches_the_builtin() {
        let from_text =
            MetricSpec::<Rat>::parse_entries("1 0 0 0\n0 -1 0 0\n0 0 -1 0\n0 0 0 -1").unwrap();
        let builtin = MetricSpec::<Rat>::minkowski();
        let a = build_presentation(PresId::KappaNew, &from_text).unwrap();
        let b = build_presentation(PresId::KappaNew, &builtin).unwrap();
        for ra in a.rows() {
            let rb = b.row_for(ra.lhs.0, ra.lhs.1);
            assert_eq!(ra.rhs, rb.rhs, "row {}", ra.label);
        }
    }
}
