//! Problem-spec files, result bundles and the `solve` / `entropy` commands.
//!
//! A spec file is TOML:
//!
//! ```toml
//! [domain]
//! a = 0.0
//! b = 5.0
//! nodes = 1024          # or: points = [0, 1, 2] for a discrete support
//!
//! [[constraint]]
//! kind = "power"        # power | indicator | tabulated
//! power = 1
//! target = 1.0          # or an interval: target = [0.4, 0.6]
//!
//! [[assessment]]        # alternative to constraints: U(x) = u
//! x = 0.5
//! u = 0.8
//!
//! [options]
//! tol = 1e-8
//! max_iter = 200
//! base = "natural"      # natural | base2
//! output = "table.csv"
//! ```
//!
//! Indicator constraints take `from` and `to`; tabulated ones take `values`
//! and optionally `derivative`, one entry per grid node. A `[density]` table
//! with `values` supplies a density directly to the `entropy` command.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::entropy::{differential_entropy, discrete_entropy, Base};
use crate::error::Error;
use crate::problem::{
    align_indicator_knots, validate_problem, ConstraintFunction, ConstraintSpec, MaxEntSolution,
    Problem, Support, Target, DEFAULT_NODES,
};
use crate::risk::risk_aversion_analytic;
use crate::solver::{solve_interval, SolverOptions, DEFAULT_MAX_ITER};
use crate::utility::{
    classify_family, density_to_curve, maxent_utility_from_assessments, Assessment, Family,
};

/// Exact header of the per-node table.
pub const TABLE_HEADER: &str = "x,u,U,gamma";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable file, parse or validation failure (exit 1).
    Input(String),
    /// Solver found the targets infeasible or failed to converge (exit 2).
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Infeasible(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_infeasible() {
            CliError::Infeasible(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

fn located(field: impl fmt::Display, e: Error) -> CliError {
    match CliError::from(e) {
        CliError::Input(m) => CliError::Input(format!("{field}: {m}")),
        other => other,
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub nodes: Option<usize>,
    pub points: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TargetSpec {
    Value(f64),
    Interval(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Power,
    Indicator,
    Tabulated,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    pub kind: ConstraintKind,
    pub power: Option<u32>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub derivative: Option<Vec<f64>>,
    pub target: TargetSpec,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AssessmentEntry {
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BaseSpec {
    #[default]
    Natural,
    Base2,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptionsSpec {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub base: Option<BaseSpec>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub values: Vec<f64>,
}

/// Parsed spec file.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub domain: DomainSpec,
    #[serde(default, rename = "constraint")]
    pub constraints: Vec<ConstraintEntry>,
    #[serde(default, rename = "assessment")]
    pub assessments: Vec<AssessmentEntry>,
    #[serde(default)]
    pub options: OptionsSpec,
    pub density: Option<DensitySpec>,
}

/// Command-line overrides for spec options.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub nodes: Option<usize>,
    pub base2: bool,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

pub fn parse_spec(text: &str) -> Result<ProblemSpecFile, CliError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().replace('\n', " ");
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                CliError::Input(format!("line {line}, column {col}: {msg}"))
            }
            None => CliError::Input(msg),
        }
    })
}

pub fn load_spec(path: &Path) -> Result<ProblemSpecFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// What a spec file asks to solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Run {
    Constraints(Problem),
    Assessments {
        support: Support,
        assessments: Vec<Assessment>,
    },
}

impl ProblemSpecFile {
    pub fn base(&self, flags: &Flags) -> Base {
        if flags.base2 || self.options.base == Some(BaseSpec::Base2) {
            Base::Base2
        } else {
            Base::Natural
        }
    }

    pub fn solver_options(&self, flags: &Flags) -> SolverOptions {
        SolverOptions {
            tol: flags.tol.or(self.options.tol),
            max_iter: flags
                .max_iter
                .or(self.options.max_iter)
                .unwrap_or(DEFAULT_MAX_ITER),
            ..SolverOptions::default()
        }
    }

    pub fn output(&self, flags: &Flags) -> Option<PathBuf> {
        flags.out.clone().or_else(|| self.options.output.clone())
    }

    /// The support before any knots are added.
    pub fn support(&self, flags: &Flags) -> Result<Support, CliError> {
        let d = &self.domain;
        match (&d.points, d.a, d.b) {
            (Some(points), None, None) => {
                if d.nodes.is_some() {
                    return Err(CliError::Input(
                        "domain.nodes: not allowed with domain.points".into(),
                    ));
                }
                Support::discrete(points.clone()).map_err(|e| located("domain.points", e))
            }
            (None, Some(a), Some(b)) => {
                let nodes = flags.nodes.or(d.nodes).unwrap_or(DEFAULT_NODES);
                Support::continuous(a, b, nodes).map_err(|e| located("domain", e))
            }
            (Some(_), _, _) => Err(CliError::Input(
                "domain: give either points or a/b, not both".into(),
            )),
            _ => Err(CliError::Input(
                "domain: need points, or both a and b".into(),
            )),
        }
    }

    pub fn constraint_specs(&self) -> Result<Vec<ConstraintSpec>, CliError> {
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.to_spec()
                    .map_err(|m| CliError::Input(format!("constraint[{i}].{m}")))
            })
            .collect()
    }

    pub fn build(&self, flags: &Flags) -> Result<Run, CliError> {
        if !self.constraints.is_empty() && !self.assessments.is_empty() {
            return Err(CliError::Input(
                "constraint and assessment blocks cannot both drive a run".into(),
            ));
        }
        let support = self.support(flags)?;
        if !self.assessments.is_empty() {
            if !support.is_continuous() {
                return Err(CliError::Input(
                    "assessment: needs a continuous domain (a, b)".into(),
                ));
            }
            return Ok(Run::Assessments {
                support,
                assessments: self
                    .assessments
                    .iter()
                    .map(|p| Assessment { x: p.x, u: p.u })
                    .collect(),
            });
        }
        let specs = self.constraint_specs()?;
        let support =
            align_indicator_knots(support, &specs).map_err(|e| located("constraint", e))?;
        let problem = validate_problem(support, specs).map_err(|e| match e {
            Error::InvalidConstraint { index, reason } => {
                CliError::Input(format!("constraint[{index}]: {reason}"))
            }
            other => located("domain", other),
        })?;
        Ok(Run::Constraints(problem))
    }
}

impl ConstraintEntry {
    fn to_spec(&self) -> Result<ConstraintSpec, String> {
        let function = match self.kind {
            ConstraintKind::Power => {
                let k = self.power.ok_or("power: missing for kind = \"power\"")?;
                ConstraintFunction::Power(k)
            }
            ConstraintKind::Indicator => ConstraintFunction::Indicator {
                lo: self.from.ok_or("from: missing for kind = \"indicator\"")?,
                hi: self.to.ok_or("to: missing for kind = \"indicator\"")?,
            },
            ConstraintKind::Tabulated => ConstraintFunction::Tabulated {
                values: self
                    .values
                    .clone()
                    .ok_or("values: missing for kind = \"tabulated\"")?,
                derivative: self.derivative.clone(),
            },
        };
        let target = match &self.target {
            TargetSpec::Value(v) => Target::Equal(*v),
            TargetSpec::Interval(v) if v.len() == 2 => {
                if v[0] > v[1] {
                    return Err(format!("target: interval lo > hi ({} > {})", v[0], v[1]));
                }
                Target::Between { lo: v[0], hi: v[1] }
            }
            TargetSpec::Interval(v) => {
                return Err(format!("target: interval needs 2 values, got {}", v.len()))
            }
        };
        Ok(ConstraintSpec { function, target })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub family: Family,
    pub continuous: bool,
    pub nodes: usize,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub log_partition: f64,
    pub entropy: f64,
    pub base: Base,
    pub gradient_max_norm: f64,
    pub multipliers: Vec<f64>,
    pub residuals: Vec<f64>,
    pub active: Vec<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub x: f64,
    pub u: f64,
    pub curve: f64,
    pub gamma: Option<f64>,
}

/// Everything one solve reports: the summary and one row per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub summary: Summary,
    pub rows: Vec<Row>,
}

/// 17 significant digits; round-trips any f64.
pub fn fmt_num(v: f64) -> String {
    // adding +0.0 folds −0 into +0 so zero columns print uniformly
    format!("{:.16e}", v + 0.0)
}

fn fmt_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| fmt_num(*v)).collect();
    format!("[{}]", items.join(","))
}

impl ResultBundle {
    pub fn from_solution(solution: &MaxEntSolution, base: Base) -> Self {
        let grid = solution.grid();
        let density = solution.density();
        let (curve, gamma): (Vec<f64>, Vec<Option<f64>>) = if grid.is_continuous() {
            let curve = density_to_curve(density, solution.support())
                .map(|c| c.values().to_vec())
                .unwrap_or_else(|_| vec![f64::NAN; density.len()]);
            let gamma = risk_aversion_analytic(solution)
                .map(|p| p.gamma().to_vec())
                .unwrap_or_else(|_| vec![None; density.len()]);
            (curve, gamma)
        } else {
            (grid.cumulative(density), vec![None; density.len()])
        };
        let rows = grid
            .nodes()
            .iter()
            .zip(density)
            .zip(curve.iter().zip(gamma))
            .map(|((x, u), (c, g))| Row {
                x: *x,
                u: *u,
                curve: *c,
                gamma: g,
            })
            .collect();
        let diag = solution.diagnostics();
        let entropy = match base {
            Base::Natural => solution.entropy(),
            Base::Base2 => solution.entropy() / std::f64::consts::LN_2,
        };
        ResultBundle {
            summary: Summary {
                family: classify_family(solution.problem().constraints()),
                continuous: grid.is_continuous(),
                nodes: grid.len(),
                iterations: diag.iterations,
                outer_iterations: diag.outer_iterations,
                log_partition: solution.log_partition(),
                entropy,
                base,
                gradient_max_norm: diag.gradient_max_norm,
                multipliers: solution.multipliers().to_vec(),
                residuals: diag.residuals.clone(),
                active: diag.active.iter().map(|s| s.as_str()).collect(),
            },
            rows,
        }
    }

    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "status = converged");
        let _ = writeln!(out, "family = {}", s.family.as_str());
        let _ = writeln!(
            out,
            "support = {}",
            if s.continuous {
                "continuous"
            } else {
                "discrete"
            }
        );
        let _ = writeln!(out, "nodes = {}", s.nodes);
        let _ = writeln!(out, "iterations = {}", s.iterations);
        let _ = writeln!(out, "outer_iterations = {}", s.outer_iterations);
        let _ = writeln!(out, "log_partition = {}", fmt_num(s.log_partition));
        let _ = writeln!(out, "entropy = {}", fmt_num(s.entropy));
        let _ = writeln!(out, "entropy_base = {}", s.base.name());
        let _ = writeln!(out, "gradient_max_norm = {}", fmt_num(s.gradient_max_norm));
        let _ = writeln!(out, "multipliers = {}", fmt_list(&s.multipliers));
        let _ = writeln!(out, "residuals = {}", fmt_list(&s.residuals));
        let _ = writeln!(out, "active = [{}]", s.active.join(","));
        out
    }

    pub fn table_csv(&self) -> String {
        let mut out = String::with_capacity(80 * (self.rows.len() + 1));
        out.push_str(TABLE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let gamma = r.gamma.map(fmt_num).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_num(r.x),
                fmt_num(r.u),
                fmt_num(r.curve),
                gamma
            );
        }
        out
    }
}

pub fn solve_run(run: &Run, options: &SolverOptions, base: Base) -> Result<ResultBundle, CliError> {
    let solution = match run {
        Run::Constraints(problem) => solve_interval(problem, options)?,
        Run::Assessments {
            support,
            assessments,
        } => maxent_utility_from_assessments(support, assessments, options)?.solution,
    };
    Ok(ResultBundle::from_solution(&solution, base))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
}

/// Solves a spec file. The summary goes to `out` (unless quiet); the table
/// goes to the output path when one is set, otherwise to `out` after a
/// blank line.
pub fn cmd_solve(
    spec_path: &Path,
    flags: &Flags,
    out: &mut dyn Write,
) -> Result<ResultBundle, CliError> {
    let spec = load_spec(spec_path)?;
    let run = spec.build(flags)?;
    let bundle = solve_run(&run, &spec.solver_options(flags), spec.base(flags))?;
    let table = bundle.table_csv();
    match spec.output(flags) {
        Some(path) => {
            std::fs::write(&path, &table)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
            if !flags.quiet {
                write_out(out, &bundle.summary_text())?;
            }
        }
        None => {
            if !flags.quiet {
                write_out(out, &bundle.summary_text())?;
                write_out(out, "\n")?;
            }
            write_out(out, &table)?;
        }
    }
    Ok(bundle)
}

/// Input for the `entropy` command.
#[derive(Debug, Clone, PartialEq)]
pub enum EntropyInput {
    Masses(Vec<f64>),
    /// A spec file: its `[density]` values, the `u` column of `table` when
    /// given, or else the density of its maximum-entropy solution.
    Spec {
        path: PathBuf,
        table: Option<PathBuf>,
    },
}

pub fn parse_masses(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("masses: cannot parse {t:?}")))
        })
        .collect()
}

/// Reads the `u` column of a table written by `solve`, checking its `x`
/// column against the grid.
pub fn read_table_density(path: &Path, nodes: &[f64]) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some(TABLE_HEADER) {
        return Err(CliError::Input(format!(
            "{}: line 1: expected header {TABLE_HEADER}",
            path.display()
        )));
    }
    let mut density = Vec::with_capacity(nodes.len());
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<f64, CliError> {
            fields
                .next()
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Input(format!("{}: line {}: bad {name}", path.display(), i + 2))
                })
        };
        let x = next("x")?;
        let u = next("u")?;
        match nodes.get(i) {
            Some(node) if *node == x => density.push(u),
            _ => {
                return Err(CliError::Input(format!(
                    "{}: line {}: x = {x} is not grid node {i}",
                    path.display(),
                    i + 2
                )))
            }
        }
    }
    if density.len() != nodes.len() {
        return Err(CliError::Input(format!(
            "{}: {} rows for {} grid nodes",
            path.display(),
            density.len(),
            nodes.len()
        )));
    }
    Ok(density)
}

pub fn cmd_entropy(
    input: &EntropyInput,
    flags: &Flags,
    out: &mut dyn Write,
) -> Result<f64, CliError> {
    let (value, base) = match input {
        EntropyInput::Masses(p) => {
            let base = if flags.base2 {
                Base::Base2
            } else {
                Base::Natural
            };
            (discrete_entropy(p, base)?.value, base)
        }
        EntropyInput::Spec { path, table } => {
            let spec = load_spec(path)?;
            let base = spec.base(flags);
            let run = spec.build(flags)?;
            let support = match &run {
                Run::Constraints(problem) => problem.support().clone(),
                Run::Assessments {
                    support,
                    assessments,
                } => {
                    let knots: Vec<f64> = assessments.iter().map(|p| p.x).collect();
                    support.clone().with_knots(&knots)?
                }
            };
            let given = match (table, &spec.density) {
                (Some(t), _) => Some(read_table_density(t, support.grid()?.nodes())?),
                (None, Some(d)) => Some(d.values.clone()),
                (None, None) => None,
            };
            let value = match given {
                Some(d) if support.is_continuous() => {
                    differential_entropy(&d, &support, base)?.value
                }
                Some(d) => discrete_entropy(&d, base)?.value,
                None => {
                    solve_run(&run, &spec.solver_options(flags), base)?
                        .summary
                        .entropy
                }
            };
            (value, base)
        }
    };
    print_entropy(value, base, out)?;
    Ok(value)
}

fn print_entropy(value: f64, base: Base, out: &mut dyn Write) -> Result<(), CliError> {
    write_out(
        out,
        &format!("entropy = {}\nbase = {}\n", fmt_num(value), base.name()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_is_located() {
        let err = parse_spec("[domain]\na = 0\nb = \n").unwrap_err();
        let CliError::Input(m) = err else { panic!() };
        assert!(m.starts_with("line 3"), "{m}");
        assert!(!m.contains('\n'));
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(parse_spec("[domain]\na = 0\nb = 1\nwidth = 3\n").is_err());
    }

    #[test]
    fn constraints_and_assessments_conflict() {
        let spec = parse_spec(
            "[domain]\na = 0\nb = 1\n[[constraint]]\nkind = \"power\"\npower = 1\ntarget = 0.4\n[[assessment]]\nx = 0.5\nu = 0.8\n",
        )
        .unwrap();
        assert!(matches!(
            spec.build(&Flags::default()),
            Err(CliError::Input(_))
        ));
    }

    #[test]
    fn constraint_errors_name_the_field() {
        let spec = parse_spec(
            "[domain]\na = 0\nb = 1\n[[constraint]]\nkind = \"power\"\npower = 1\ntarget = 0.4\n[[constraint]]\nkind = \"indicator\"\nfrom = 0.5\ntarget = 0.4\n",
        )
        .unwrap();
        let Err(CliError::Input(m)) = spec.build(&Flags::default()) else {
            panic!()
        };
        assert!(m.starts_with("constraint[1].to"), "{m}");

        let spec = parse_spec(
            "[domain]\na = 0\nb = 1\n[[constraint]]\nkind = \"indicator\"\nfrom = 0.5\nto = 1.5\ntarget = 0.4\n",
        )
        .unwrap();
        let Err(CliError::Input(m)) = spec.build(&Flags::default()) else {
            panic!()
        };
        assert!(m.contains("indicator exceeds support"), "{m}");

        let spec = parse_spec(
            "[domain]\na = 0\nb = 1\n[[constraint]]\nkind = \"power\"\npower = 1\ntarget = [0.6, 0.4]\n",
        )
        .unwrap();
        let Err(CliError::Input(m)) = spec.build(&Flags::default()) else {
            panic!()
        };
        assert!(m.starts_with("constraint[0].target"), "{m}");
    }

    #[test]
    fn integer_literals_are_accepted_as_reals() {
        let spec = parse_spec(
            "[domain]\na = 0\nb = 5\n[[constraint]]\nkind = \"power\"\npower = 1\ntarget = 1\n",
        )
        .unwrap();
        assert_eq!(spec.constraints[0].target, TargetSpec::Value(1.0));
    }

    #[test]
    fn flags_override_spec_options() {
        let spec = parse_spec(
            "[domain]\na = 0\nb = 1\nnodes = 64\n[options]\ntol = 1e-6\nmax_iter = 10\n",
        )
        .unwrap();
        let flags = Flags {
            tol: Some(1e-9),
            nodes: Some(128),
            ..Flags::default()
        };
        let opts = spec.solver_options(&flags);
        assert_eq!(opts.tol, Some(1e-9));
        assert_eq!(opts.max_iter, 10);
        assert_eq!(spec.support(&flags).unwrap().node_count(), 128);
    }

    #[test]
    fn masses_parse() {
        assert_eq!(parse_masses("0.5, 0.5").unwrap(), vec![0.5, 0.5]);
        assert!(parse_masses("0.5,x").is_err());
    }

    #[test]
    fn numbers_carry_17_significant_digits() {
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
        let v = std::f64::consts::LN_2;
        assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
    }
}
