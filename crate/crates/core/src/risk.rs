//! Applies risk rules to a concrete assignment.

use std::cell::RefCell;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Assignment, AssignmentError, Binding, CouplingRule, FactorCatalog, FactorScope, FactorValue,
    ProjectCharacterization,
};
use crate::rules::{evaluate_condition, FactorLookup, RiskRule, RuleError, RuleScope, RuleSet, Severity};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RiskError {
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

impl RiskError {
    pub fn code(&self) -> &'static str {
        match self {
            RiskError::Assignment(_) => "INFEASIBLE_ASSIGNMENT",
            RiskError::Rule(e) => e.code(),
        }
    }
}

/// One factor value consulted while evaluating a rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactorReading {
    pub factor: String,
    pub binding: Binding,
    pub value: FactorValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskFinding {
    pub rule: String,
    pub problem: String,
    pub severity: Severity,
    pub binding: Binding,
    pub explanation: String,
    pub readings: Vec<FactorReading>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityTotals {
    pub high: usize,
    pub medium: usize,
    pub low: usize,
}

impl SeverityTotals {
    pub fn total(&self) -> usize {
        self.high + self.medium + self.low
    }

    fn add(&mut self, severity: Severity) {
        match severity {
            Severity::High => self.high += 1,
            Severity::Medium => self.medium += 1,
            Severity::Low => self.low += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteRisks {
    pub site: String,
    pub findings: Vec<RiskFinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceRisks {
    pub sites: [String; 2],
    pub findings: Vec<RiskFinding>,
}

/// Findings of one assignment: project-wide, per occupied site (task and task-site findings
/// land at the task's site) and per active interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskReport {
    pub assignment: Assignment,
    pub project: Vec<RiskFinding>,
    pub sites: Vec<SiteRisks>,
    pub interfaces: Vec<InterfaceRisks>,
    pub totals: SeverityTotals,
}

impl RiskReport {
    pub fn findings(&self) -> impl Iterator<Item = &RiskFinding> {
        self.project
            .iter()
            .chain(self.sites.iter().flat_map(|s| &s.findings))
            .chain(self.interfaces.iter().flat_map(|i| &i.findings))
    }

    pub fn interface_findings(&self) -> usize {
        self.interfaces.iter().map(|i| i.findings.len()).sum()
    }
}

/// Values visible at one binding; records every value it hands out.
struct BindingLookup<'a> {
    project: &'a ProjectCharacterization,
    catalog: &'a FactorCatalog,
    /// Bindings visible per factor scope.
    visible: Vec<(FactorScope, Vec<Binding>)>,
    readings: RefCell<BTreeSet<FactorReading>>,
}

impl FactorLookup for BindingLookup<'_> {
    fn candidates(&self, factor: &str) -> Option<Vec<FactorValue>> {
        let def = self.catalog.get(factor)?;
        let bindings = self
            .visible
            .iter()
            .find(|(scope, _)| *scope == def.scope)
            .map(|(_, b)| b)?;
        let mut out = Vec::with_capacity(bindings.len());
        for b in bindings {
            let value = self.project.value(def, b)?;
            self.readings.borrow_mut().insert(FactorReading {
                factor: factor.to_string(),
                binding: b.clone(),
                value,
            });
            out.push(value);
        }
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }
}

struct Context<'a> {
    project: &'a ProjectCharacterization,
    catalog: &'a FactorCatalog,
    sites: Vec<usize>,
    coupled: Vec<(usize, usize)>,
}

impl Context<'_> {
    fn task(&self, t: usize) -> &str {
        &self.project.tasks[t].id
    }

    fn site(&self, s: usize) -> &str {
        &self.project.sites[s]
    }

    fn lookup(&self, visible: Vec<(FactorScope, Vec<Binding>)>) -> BindingLookup<'_> {
        let mut visible = visible;
        visible.push((FactorScope::Project, vec![Binding::Project]));
        BindingLookup {
            project: self.project,
            catalog: self.catalog,
            visible,
            readings: RefCell::new(BTreeSet::new()),
        }
    }

    fn task_scopes(&self, t: usize) -> Vec<(FactorScope, Vec<Binding>)> {
        vec![(FactorScope::Task, vec![Binding::task(self.task(t))])]
    }

    fn task_site_scopes(&self, t: usize) -> Vec<(FactorScope, Vec<Binding>)> {
        let s = self.sites[t];
        vec![
            (FactorScope::Task, vec![Binding::task(self.task(t))]),
            (FactorScope::Site, vec![Binding::site(self.site(s))]),
            (FactorScope::TaskSite, vec![Binding::task_site(self.task(t), self.site(s))]),
        ]
    }

    /// Coupled pairs split across sites `a` and `b`.
    fn crossing(&self, a: usize, b: usize) -> Vec<(usize, usize)> {
        self.coupled
            .iter()
            .copied()
            .filter(|&(t, u)| {
                let (st, su) = (self.sites[t], self.sites[u]);
                (st == a && su == b) || (st == b && su == a)
            })
            .collect()
    }

    /// Interface bindings: both sites, the crossing pairs and every task in them.
    fn interface_scopes(&self, a: usize, b: usize) -> Vec<(FactorScope, Vec<Binding>)> {
        let crossing = self.crossing(a, b);
        let mut tasks: Vec<usize> = crossing.iter().flat_map(|&(t, u)| [t, u]).collect();
        tasks.sort_unstable();
        tasks.dedup();
        vec![
            (FactorScope::SitePair, vec![Binding::site_pair(self.site(a), self.site(b))]),
            (FactorScope::Site, vec![Binding::site(self.site(a)), Binding::site(self.site(b))]),
            (
                FactorScope::TaskPair,
                crossing
                    .iter()
                    .map(|&(t, u)| Binding::task_pair(self.task(t), self.task(u)))
                    .collect(),
            ),
            (FactorScope::Task, tasks.iter().map(|&t| Binding::task(self.task(t))).collect()),
            (
                FactorScope::TaskSite,
                tasks
                    .iter()
                    .map(|&t| Binding::task_site(self.task(t), self.site(self.sites[t])))
                    .collect(),
            ),
        ]
    }

    /// Distinct site pairs sharing at least one split coupled pair.
    fn active_interfaces(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .coupled
            .iter()
            .filter_map(|&(t, u)| {
                let (a, b) = (self.sites[t], self.sites[u]);
                (a != b).then(|| (a.min(b), a.max(b)))
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn evaluate(rule: &RiskRule, binding: Binding, lookup: BindingLookup<'_>) -> Result<Option<RiskFinding>, RiskError> {
    let unbound = |e: RuleError| match e {
        RuleError::UnboundFactor { factor } => RuleError::UnboundFactor {
            factor: format!("{factor} ({binding})"),
        },
        other => other,
    };
    if !evaluate_condition(&rule.condition, &lookup).map_err(unbound)? {
        return Ok(None);
    }
    let readings: Vec<FactorReading> = lookup.readings.into_inner().into_iter().collect();
    let explanation = readings
        .iter()
        .map(|r| format!("{} = {} for {}", r.factor, r.value, r.binding))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Some(RiskFinding {
        rule: rule.id.clone(),
        problem: rule.problem.clone(),
        severity: rule.severity,
        binding,
        explanation,
        readings,
    }))
}

fn sort_findings(findings: &mut [RiskFinding]) {
    findings.sort_by(|a, b| {
        b.severity
            .cmp(&a.severity)
            .then_with(|| a.rule.cmp(&b.rule))
            .then_with(|| a.binding.cmp(&b.binding))
    });
}

/// Evaluates every rule at every binding its scope calls for under `assignment`.
pub fn predict_risks(
    assignment: &Assignment,
    project: &ProjectCharacterization,
    catalog: &FactorCatalog,
    rules: &RuleSet,
    coupling: &CouplingRule,
) -> Result<RiskReport, RiskError> {
    let scopes = rules.link(catalog)?;
    let ctx = Context {
        project,
        catalog,
        sites: assignment.to_indices(project)?,
        coupled: coupling.coupled_pairs(catalog, project),
    };
    let occupied: BTreeSet<usize> = ctx.sites.iter().copied().collect();
    let interfaces = ctx.active_interfaces();

    let mut project_findings = Vec::new();
    let mut by_site: Vec<Vec<RiskFinding>> = vec![Vec::new(); project.sites.len()];
    let mut by_interface: Vec<Vec<RiskFinding>> = vec![Vec::new(); interfaces.len()];
    for (rule, scope) in rules.rules.iter().zip(scopes) {
        match scope {
            RuleScope::Project => {
                if let Some(f) = evaluate(rule, Binding::Project, ctx.lookup(vec![]))? {
                    project_findings.push(f);
                }
            }
            RuleScope::Site => {
                for &s in &occupied {
                    let lookup = ctx.lookup(vec![(FactorScope::Site, vec![Binding::site(ctx.site(s))])]);
                    if let Some(f) = evaluate(rule, Binding::site(ctx.site(s)), lookup)? {
                        by_site[s].push(f);
                    }
                }
            }
            RuleScope::Task => {
                for t in 0..project.tasks.len() {
                    let lookup = ctx.lookup(ctx.task_scopes(t));
                    if let Some(f) = evaluate(rule, Binding::task(ctx.task(t)), lookup)? {
                        by_site[ctx.sites[t]].push(f);
                    }
                }
            }
            RuleScope::TaskSite => {
                for t in 0..project.tasks.len() {
                    let s = ctx.sites[t];
                    let lookup = ctx.lookup(ctx.task_site_scopes(t));
                    if let Some(f) = evaluate(rule, Binding::task_site(ctx.task(t), ctx.site(s)), lookup)? {
                        by_site[s].push(f);
                    }
                }
            }
            RuleScope::SitePair => {
                for (k, &(a, b)) in interfaces.iter().enumerate() {
                    let lookup = ctx.lookup(ctx.interface_scopes(a, b));
                    if let Some(f) = evaluate(rule, Binding::site_pair(ctx.site(a), ctx.site(b)), lookup)? {
                        by_interface[k].push(f);
                    }
                }
            }
        }
    }

    let mut totals = SeverityTotals::default();
    sort_findings(&mut project_findings);
    let sites = occupied
        .iter()
        .map(|&s| {
            let mut findings = std::mem::take(&mut by_site[s]);
            sort_findings(&mut findings);
            SiteRisks {
                site: ctx.site(s).to_string(),
                findings,
            }
        })
        .collect::<Vec<_>>();
    let interfaces = interfaces
        .iter()
        .zip(by_interface)
        .map(|(&(a, b), mut findings)| {
            sort_findings(&mut findings);
            InterfaceRisks {
                sites: [ctx.site(a).to_string(), ctx.site(b).to_string()],
                findings,
            }
        })
        .collect::<Vec<_>>();
    let mut report = RiskReport {
        assignment: assignment.clone(),
        project: project_findings,
        sites,
        interfaces,
        totals,
    };
    for f in report.findings() {
        totals.add(f.severity);
    }
    report.totals = totals;
    Ok(report)
}

/// Finding counts per assignment, in input order.
pub fn compare_assignments(
    assignments: &[Assignment],
    project: &ProjectCharacterization,
    catalog: &FactorCatalog,
    rules: &RuleSet,
    coupling: &CouplingRule,
) -> Result<Vec<SeverityTotals>, RiskError> {
    assignments
        .iter()
        .map(|a| predict_risks(a, project, catalog, rules, coupling).map(|r| r.totals))
        .collect()
}
