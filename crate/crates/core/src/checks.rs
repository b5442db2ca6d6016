//! The symbolic check suite shared by the CLI and the acceptance tests.
//!
//! Every item evaluates one identity and keeps its residual verbatim. Items are
//! independent, so they may run on a worker pool; the report keeps the order in
//! which they were planned.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::conserved::{
    calibrate_screening, coboundary_check, coordinate_identity, display_in_v, involutivity_check,
    kdv_rewrite, miura_v, screening_action, variational_check, ConservedError,
};
use crate::diffpoly::{format_rational, DiffPoly, JetVar, Monomial};
use crate::hierarchy::{Hierarchy, HierarchyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Conserved(#[from] ConservedError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    ZeroCurvature,
    Commutativity,
    Involutivity,
    Equivalence,
    Variational,
    Coboundary,
    Miura,
    DegreeWindow,
}

impl CheckKind {
    pub const ALL: [CheckKind; 8] = [
        CheckKind::ZeroCurvature,
        CheckKind::Commutativity,
        CheckKind::Involutivity,
        CheckKind::Equivalence,
        CheckKind::Variational,
        CheckKind::Coboundary,
        CheckKind::Miura,
        CheckKind::DegreeWindow,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::ZeroCurvature => "zero-curvature",
            CheckKind::Commutativity => "commutativity",
            CheckKind::Involutivity => "involutivity",
            CheckKind::Equivalence => "equivalence",
            CheckKind::Variational => "variational",
            CheckKind::Coboundary => "coboundary",
            CheckKind::Miura => "miura",
            CheckKind::DegreeWindow => "degree-window",
        }
    }

    /// Checks that only exist for `A_1^(1)`.
    pub fn rank_one_only(&self) -> bool {
        matches!(
            self,
            CheckKind::Variational | CheckKind::Coboundary | CheckKind::Miura
        )
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = CheckError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| CheckError::UnknownCheck(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub check: CheckKind,
    pub label: String,
    pub status: Status,
    /// The residual exactly as computed, `0` when it vanishes.
    pub residual: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Conventions every reported number depends on.
#[derive(Clone, Debug, Serialize)]
pub struct Normalization {
    pub generators: String,
    pub pairing: String,
    pub integration_constants: String,
    pub dressing_gauge: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screening_scale: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variational_constant: Option<String>,
}

impl Normalization {
    pub fn for_rank(rank: usize) -> Self {
        Normalization {
            generators: "p_n = Λ^n, Λ = Σ E_{a,a+1} + λ E_{r+1,1}".into(),
            pairing: format!("(x, y) = res_λ tr(xy)/λ, (p_n, p_-n) = {}", rank + 1),
            integration_constants: "0".into(),
            dressing_gauge: "p_j-coordinate of log M vanishes in every degree".into(),
            screening_scale: None,
            variational_constant: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub algebra: String,
    pub flows: Vec<u32>,
    pub degree: i32,
    pub perturbed: bool,
    pub normalization: Normalization,
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| i.status == Status::Fail)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "checks for {} (flows {:?}, degree bound {})\n",
            self.algebra, self.flows, self.degree
        );
        for item in &self.items {
            let tag = match item.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            out.push_str(&format!("[{tag}] {} {}: {}", item.check, item.label, item.residual));
            if let Some(note) = &item.note {
                out.push_str(&format!("  ({note})"));
            }
            out.push('\n');
        }
        out.push_str("normalization:\n");
        let n = &self.normalization;
        out.push_str(&format!("  generators: {}\n  pairing: {}\n  integration constants: {}\n  dressing gauge: {}\n",
            n.generators, n.pairing, n.integration_constants, n.dressing_gauge));
        if let Some(k) = &n.screening_scale {
            out.push_str(&format!("  screening scale (e_0, e_1): {}\n", k.join(", ")));
        }
        if let Some(c) = &n.variational_constant {
            out.push_str(&format!("  variational constant: {c}\n"));
        }
        let failed = self.failures().count();
        out.push_str(&format!(
            "{} items, {} failed\n",
            self.items.len(),
            failed
        ));
        out
    }
}

#[derive(Clone, Debug)]
enum Task {
    ZeroCurvature(u32, u32),
    Commutator(u32, u32, usize),
    Involutivity(u32, u32),
    Coordinate(u32, u32),
    Equivalence(u32),
    Variational(u32),
    Coboundary(u32, usize),
    MiuraKernel,
    KdvRewrite(u32),
    DegreeWindow(u32),
    Skip(CheckKind, String),
}

fn plan(rank: usize, flows: &[u32], kinds: &[CheckKind]) -> Vec<Task> {
    let mut tasks = Vec::new();
    let pairs: Vec<(u32, u32)> = flows
        .iter()
        .enumerate()
        .flat_map(|(a, &m)| flows[a + 1..].iter().map(move |&n| (m, n)))
        .collect();
    for &kind in kinds {
        if kind.rank_one_only() && rank != 1 {
            tasks.push(Task::Skip(kind, format!("defined for rank 1 only, rank is {rank}")));
            continue;
        }
        match kind {
            CheckKind::ZeroCurvature => {
                tasks.extend(pairs.iter().map(|&(m, n)| Task::ZeroCurvature(m, n)))
            }
            CheckKind::Commutativity => {
                for &(m, n) in &pairs {
                    tasks.extend((1..=rank).map(|i| Task::Commutator(m, n, i)));
                }
            }
            CheckKind::Involutivity => {
                for (a, &m) in flows.iter().enumerate() {
                    for &n in &flows[a..] {
                        tasks.push(Task::Involutivity(m, n));
                    }
                }
                if rank == 1 {
                    for &k in flows {
                        tasks.extend(flows.iter().map(|&m| Task::Coordinate(k, m)));
                    }
                }
            }
            CheckKind::Equivalence => tasks.extend(flows.iter().map(|&n| Task::Equivalence(n))),
            CheckKind::Variational => tasks.extend(flows.iter().map(|&n| Task::Variational(n))),
            CheckKind::Coboundary => {
                for &n in flows {
                    tasks.extend((0..2).map(|i| Task::Coboundary(n, i)));
                }
            }
            CheckKind::Miura => {
                tasks.push(Task::MiuraKernel);
                tasks.extend(flows.iter().map(|&n| Task::KdvRewrite(n)));
            }
            CheckKind::DegreeWindow => tasks.extend(flows.iter().map(|&n| Task::DegreeWindow(n))),
        }
    }
    tasks
}

fn poly_item(check: CheckKind, label: String, residual: DiffPoly) -> CheckItem {
    let status = if residual.is_zero() { Status::Pass } else { Status::Fail };
    CheckItem {
        check,
        label,
        status,
        residual: residual.to_string(),
        note: None,
    }
}

fn error_item(check: CheckKind, label: String, err: impl fmt::Display) -> CheckItem {
    CheckItem {
        check,
        label,
        status: Status::Fail,
        residual: "error".into(),
        note: Some(err.to_string()),
    }
}

/// True when `p` has exactly the two monomials `v'''` and `v v'` (in `v`-jets).
fn is_kdv_form(p: &DiffPoly) -> bool {
    let v3 = Monomial::var(JetVar::new(1, 3));
    let vv1 = Monomial::from_factors([(JetVar::new(1, 0), 1), (JetVar::new(1, 1), 1)]);
    p.len() == 2 && !p.coefficient(&v3).is_zero() && !p.coefficient(&vv1).is_zero()
}

fn run_task(hier: &Hierarchy, degree: i32, task: &Task) -> CheckItem {
    match *task {
        Task::ZeroCurvature(m, n) => {
            let label = format!("(m, n) = ({m}, {n})");
            match hier.zero_curvature_residual(m, n, degree) {
                Ok(res) => CheckItem {
                    check: CheckKind::ZeroCurvature,
                    label,
                    status: if res.is_zero() { Status::Pass } else { Status::Fail },
                    residual: res.to_string(),
                    note: Some(format!(
                        "window: degrees <= {}",
                        degree - m.max(n) as i32 - 1
                    )),
                },
                Err(e) => error_item(CheckKind::ZeroCurvature, label, e),
            }
        }
        Task::Commutator(m, n, i) => {
            let label = if hier.ctx().rank() == 1 {
                format!("(m, n) = ({m}, {n}), probe u")
            } else {
                format!("(m, n) = ({m}, {n}), probe u{i}")
            };
            let probe = DiffPoly::jet(hier.ctx().rank(), i, 0);
            match hier.commutator_check(m, n, degree, &probe) {
                Ok(res) => poly_item(CheckKind::Commutativity, label, res),
                Err(e) => error_item(CheckKind::Commutativity, label, e),
            }
        }
        Task::Involutivity(n, m) => {
            let label = format!("(n, m) = ({n}, {m})");
            match involutivity_check(hier, n, m, degree) {
                Ok((a, b)) => {
                    let pass = a.is_zero() && b.is_zero();
                    CheckItem {
                        check: CheckKind::Involutivity,
                        label,
                        status: if pass { Status::Pass } else { Status::Fail },
                        residual: format!("{a}; {b}"),
                        note: Some("∂_n H_m − ∂_m H_n; ∂_n H_m − ∂_z H_{n,m}".into()),
                    }
                }
                Err(e) => error_item(CheckKind::Involutivity, label, e),
            }
        }
        Task::Coordinate(k, m) => {
            let label = format!("coordinate form (k, m) = ({k}, {m})");
            match coordinate_identity(hier, k, m, degree) {
                Ok(res) => poly_item(CheckKind::Involutivity, label, res),
                Err(e) => error_item(CheckKind::Involutivity, label, e),
            }
        }
        Task::Equivalence(n) => {
            let label = format!("n = {n}");
            match hier.equivalence_check(n, degree) {
                Ok(res) => CheckItem {
                    check: CheckKind::Equivalence,
                    label,
                    status: if res.is_zero() { Status::Pass } else { Status::Fail },
                    residual: res.to_string(),
                    note: Some(format!("window: degrees <= {}", degree - n as i32 - 1)),
                },
                Err(e) => error_item(CheckKind::Equivalence, label, e),
            }
        }
        Task::Variational(m) => {
            let label = format!("m = {m}");
            match variational_check(hier, m, degree) {
                Ok(rep) => {
                    let mut item = poly_item(CheckKind::Variational, label, rep.residual);
                    item.note = Some(match &rep.constant {
                        Some(c) => format!("constant {}", format_rational(c)),
                        None => "no constant".into(),
                    });
                    if rep.constant.is_none() {
                        item.status = Status::Fail;
                    }
                    item
                }
                Err(e) => error_item(CheckKind::Variational, label, e),
            }
        }
        Task::Coboundary(n, i) => {
            let label = format!("n = {n}, e_{i}");
            let result = calibrate_screening(hier)
                .and_then(|cal| coboundary_check(hier, &cal, n, i, degree));
            match result {
                Ok(res) => poly_item(CheckKind::Coboundary, label, res),
                Err(e) => error_item(CheckKind::Coboundary, label, e),
            }
        }
        Task::MiuraKernel => match screening_action(1, &miura_v()) {
            Ok(res) => poly_item(CheckKind::Miura, "e_1(u^2/2 + u')".into(), res),
            Err(e) => error_item(CheckKind::Miura, "e_1(u^2/2 + u')".into(), e),
        },
        Task::KdvRewrite(n) => {
            let label = format!("v-flow for n = {n}");
            let result = hier
                .flow(n, degree)
                .map_err(ConservedError::from)
                .and_then(|f| kdv_rewrite(&f.prolong(&miura_v())));
            match result {
                Ok(q) => {
                    let kdv = n != 3 || is_kdv_form(&q);
                    CheckItem {
                        check: CheckKind::Miura,
                        label,
                        status: if kdv { Status::Pass } else { Status::Fail },
                        residual: "0".into(),
                        note: Some(format!("∂_{n} v = {}", display_in_v(&q))),
                    }
                }
                Err(e) => error_item(CheckKind::Miura, label, e),
            }
        }
        Task::DegreeWindow(n) => {
            let label = format!("n = {n}, degree {degree} vs {}", degree + 2);
            match hier.degree_stability(n, degree) {
                Ok(diffs) => {
                    let mut sum = DiffPoly::zero(hier.ctx().rank());
                    for d in &diffs {
                        sum += d;
                    }
                    let mut item = poly_item(CheckKind::DegreeWindow, label, sum);
                    if !diffs.is_empty() {
                        item.status = Status::Fail;
                    }
                    item
                }
                Err(e) => error_item(CheckKind::DegreeWindow, label, e),
            }
        }
        Task::Skip(kind, ref why) => CheckItem {
            check: kind,
            label: String::new(),
            status: Status::Skipped,
            residual: "-".into(),
            note: Some(why.clone()),
        },
    }
}

#[cfg(feature = "parallel")]
fn run_all(hier: &Hierarchy, degree: i32, tasks: &[Task]) -> Vec<CheckItem> {
    use rayon::prelude::*;
    tasks.par_iter().map(|t| run_task(hier, degree, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(hier: &Hierarchy, degree: i32, tasks: &[Task]) -> Vec<CheckItem> {
    tasks.iter().map(|t| run_task(hier, degree, t)).collect()
}

/// Runs the selected checks for the given flows. `degree` must be at least
/// `max(flows) + 2`.
pub fn run_checks(
    hier: &Hierarchy,
    flows: &[u32],
    degree: i32,
    kinds: &[CheckKind],
) -> Result<CheckReport, CheckError> {
    let rank = hier.ctx().rank();
    for &n in flows {
        hier.flow(n, degree)?;
    }
    let tasks = plan(rank, flows, kinds);
    let mut items = run_all(hier, degree, &tasks);

    // The variational constant must be the same for every flow.
    let constants: Vec<String> = items
        .iter()
        .filter(|i| i.check == CheckKind::Variational && i.status == Status::Pass)
        .filter_map(|i| i.note.clone())
        .collect();
    if constants.windows(2).any(|w| w[0] != w[1]) {
        for item in items.iter_mut().filter(|i| i.check == CheckKind::Variational) {
            item.status = Status::Fail;
            item.note = Some(format!(
                "{}; constants differ across flows",
                item.note.clone().unwrap_or_default()
            ));
        }
    }

    let mut normalization = Normalization::for_rank(rank);
    if rank == 1 {
        let cal = calibrate_screening(hier)?;
        normalization.screening_scale = Some(cal.kappa.iter().map(format_rational).collect());
        if kinds.contains(&CheckKind::Variational) && !flows.is_empty() {
            normalization.variational_constant = variational_check(hier, flows[0], degree)?
                .constant
                .map(|c| format_rational(&c));
        }
    }
    Ok(CheckReport {
        algebra: hier.ctx().name(),
        flows: flows.to_vec(),
        degree,
        perturbed: hier.is_perturbed(),
        normalization,
        items,
    })
}
