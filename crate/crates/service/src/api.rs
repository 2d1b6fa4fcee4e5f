use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use worksplit_core::io::{
    content_hash, export_decision, from_value, model_hash, parse_model, parse_project, project_hash,
    DecisionRecord, ExportFormat, RecordSettings,
};
use worksplit_core::model::{
    derive_causal_skeleton, validate_characterization, validate_model, Aggregation, Assignment, Binding,
    CausalModel, CouplingRule, FactorValues, Finding, FindingCode, GoalDeclarations, ProjectCharacterization,
    Sign, WeightPreset,
};
use worksplit_core::optimizer::{SimulationSettings, Suggestion, DEFAULT_RUNS};
use worksplit_core::pipeline::suggest;
use worksplit_core::risk::{compare_assignments, predict_risks, RiskReport, SeverityTotals};
use worksplit_core::rules::{extract_factors, format_condition, parse_rules, RuleSet};

use crate::error::ApiError;
use crate::store::{Kind, Store};

pub type AppState = Arc<Store>;
type ApiResult<T> = Result<T, ApiError>;

const DEFAULT_TOP: usize = 10;

fn parse_body<T: DeserializeOwned>(text: &str) -> ApiResult<T> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        let mut err = ApiError::bad_request("SCHEMA_ERROR", e.to_string());
        err.body.locus = Some(format!("line {} column {}", e.line(), e.column()));
        err
    })?;
    Ok(from_value(value)?)
}

/// Hex digest of a content hash; used as the id of content-addressed documents.
fn hash_id(hash: &str) -> String {
    hash.trim_start_matches("sha256:").to_string()
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

pub async fn health() -> Json<Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

// ---- models

#[derive(Debug, Serialize)]
pub struct ModelResource {
    pub id: String,
    pub hash: String,
    pub model: CausalModel,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<Finding>,
}

impl ModelResource {
    fn new(id: String, model: CausalModel) -> Self {
        ModelResource {
            id,
            hash: model_hash(&model),
            model,
            findings: Vec::new(),
        }
    }
}

fn check_model(model: &CausalModel) -> ApiResult<()> {
    let findings = validate_model(model);
    if findings.is_empty() {
        Ok(())
    } else {
        Err(ApiError::findings("INVALID_MODEL", findings))
    }
}

pub async fn create_model(State(store): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<ModelResource>)> {
    let model = parse_model(&body)?;
    check_model(&model)?;
    let id = new_id();
    store.write_model(&id, &model)?;
    Ok((StatusCode::CREATED, Json(ModelResource::new(id, model))))
}

pub async fn get_model(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ModelResource>> {
    let model = store.read_model(&id)?;
    Ok(Json(ModelResource::new(id, model)))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum WeightInput {
    Number(f64),
    Preset(WeightPreset),
}

impl WeightInput {
    fn value(&self) -> f64 {
        match self {
            WeightInput::Number(w) => *w,
            WeightInput::Preset(p) => p.value(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgePatch {
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub weight: Option<WeightInput>,
    #[serde(default)]
    pub sign: Option<Sign>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodePatch {
    pub id: String,
    #[serde(default)]
    pub noise_sigma: Option<f64>,
    #[serde(default)]
    pub aggregation: Option<Aggregation>,
}

/// Quantification edits on a stored model, applied only if `base_hash` is still current.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPatch {
    pub base_hash: String,
    #[serde(default)]
    pub edges: Vec<EdgePatch>,
    #[serde(default)]
    pub nodes: Vec<NodePatch>,
    #[serde(default)]
    pub goal_weights: Option<BTreeMap<String, f64>>,
}

fn apply_model_patch(model: &mut CausalModel, patch: ModelPatch) -> ApiResult<()> {
    for e in patch.edges {
        let edge = model.edge_mut(&e.source, &e.target).ok_or_else(|| {
            ApiError::bad_request("UNKNOWN_EDGE", format!("no edge {} -> {}", e.source, e.target))
        })?;
        if let Some(w) = e.weight {
            edge.weight = w.value();
        }
        if let Some(s) = e.sign {
            edge.sign = s;
        }
    }
    for n in patch.nodes {
        let node = model
            .node_mut(&n.id)
            .ok_or_else(|| ApiError::bad_request("UNKNOWN_NODE", format!("no node `{}`", n.id)))?;
        if n.noise_sigma.is_some() {
            node.noise_sigma = n.noise_sigma;
        }
        if n.aggregation.is_some() {
            node.aggregation = n.aggregation;
        }
    }
    if let Some(w) = patch.goal_weights {
        model.goal_weights = w;
    }
    Ok(())
}

pub async fn patch_model(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<ModelResource>> {
    let patch: ModelPatch = parse_body(&body)?;
    let _guard = store.lock();
    let mut model = store.read_model(&id)?;
    let current = model_hash(&model);
    if patch.base_hash != current {
        return Err(ApiError::conflict(current));
    }
    apply_model_patch(&mut model, patch)?;
    check_model(&model)?;
    store.write_model(&id, &model)?;
    Ok(Json(ModelResource::new(id, model)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveRequest {
    pub rules: String,
    pub goals: GoalDeclarations,
}

/// Stores the skeleton even when its goal weights still need normalizing; other findings
/// reject it.
pub async fn derive_model(State(store): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<ModelResource>)> {
    let req: DeriveRequest = parse_body(&body)?;
    let rules = parse_rules(&req.rules)?;
    let model = derive_causal_skeleton(&rules, &req.goals)
        .map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
    let findings = validate_model(&model);
    if findings.iter().any(|f| f.code != FindingCode::WeightsNotNormalized) {
        return Err(ApiError::findings("INVALID_MODEL", findings));
    }
    let id = new_id();
    store.write_model(&id, &model)?;
    let mut resource = ModelResource::new(id, model);
    resource.findings = findings;
    Ok((StatusCode::CREATED, Json(resource)))
}

// ---- rules

#[derive(Debug, Serialize)]
pub struct RuleSummary {
    pub id: String,
    pub problem: String,
    pub severity: String,
    pub condition: String,
}

#[derive(Debug, Serialize)]
pub struct RulesResource {
    pub rules_id: String,
    pub rules: Vec<RuleSummary>,
    pub factors: Vec<String>,
}

fn summarize(rules_id: String, rules: &RuleSet) -> RulesResource {
    RulesResource {
        rules_id,
        rules: rules
            .rules
            .iter()
            .map(|r| RuleSummary {
                id: r.id.clone(),
                problem: r.problem.clone(),
                severity: r.severity.as_str().to_string(),
                condition: format_condition(&r.condition),
            })
            .collect(),
        factors: extract_factors(rules).into_iter().collect(),
    }
}

pub async fn create_rules(State(store): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<RulesResource>)> {
    let rules = parse_rules(&body)?;
    let id = hash_id(&content_hash(&body));
    store.write_text(Kind::Rules, &id, &body)?;
    Ok((StatusCode::CREATED, Json(summarize(id, &rules))))
}

pub async fn get_rules(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RulesResource>> {
    let text = store.read_text(Kind::Rules, &id)?;
    let rules = parse_rules(&text)?;
    Ok(Json(summarize(id, &rules)))
}

// ---- projects

#[derive(Debug, Serialize)]
pub struct ProjectResource {
    pub id: String,
    pub hash: String,
    pub project: ProjectCharacterization,
}

impl ProjectResource {
    fn new(id: String, project: ProjectCharacterization) -> Self {
        ProjectResource {
            id,
            hash: project_hash(&project),
            project,
        }
    }
}

fn check_shape(project: &ProjectCharacterization) -> ApiResult<()> {
    let rows = project.availability.len();
    if rows != project.tasks.len() || project.availability.iter().any(|r| r.len() != project.sites.len()) {
        let finding = Finding::new(
            FindingCode::AvailabilityShape,
            vec!["availability".into()],
            format!("availability must be {} x {}", project.tasks.len(), project.sites.len()),
        );
        return Err(ApiError::findings("INVALID_CHARACTERIZATION", vec![finding]));
    }
    Ok(())
}

pub async fn create_project(
    State(store): State<AppState>,
    body: String,
) -> ApiResult<(StatusCode, Json<ProjectResource>)> {
    let project = parse_project(&body)?;
    check_shape(&project)?;
    let id = new_id();
    store.write_project(&id, &project)?;
    Ok((StatusCode::CREATED, Json(ProjectResource::new(id, project))))
}

pub async fn get_project(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ProjectResource>> {
    let project = store.read_project(&id)?;
    Ok(Json(ProjectResource::new(id, project)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueKey {
    pub factor: String,
    pub binding: Binding,
}

/// Characterization edits: values to set, values to remove, a replacement availability grid
/// and goal-weight overrides (`null` clears them).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectPatch {
    pub base_hash: String,
    #[serde(default)]
    pub values: FactorValues,
    #[serde(default)]
    pub remove: Vec<ValueKey>,
    #[serde(default)]
    pub availability: Option<Vec<Vec<bool>>>,
    #[serde(default, deserialize_with = "present")]
    pub goal_weight_overrides: Option<Option<BTreeMap<String, f64>>>,
}

/// Distinguishes an explicit `null` from an absent member.
fn present<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    T::deserialize(d).map(Some)
}

pub async fn patch_project(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<ProjectResource>> {
    let patch: ProjectPatch = parse_body(&body)?;
    let _guard = store.lock();
    let mut project = store.read_project(&id)?;
    let current = project_hash(&project);
    if patch.base_hash != current {
        return Err(ApiError::conflict(current));
    }
    for (factor, binding, value) in patch.values.iter() {
        project.values.set(factor, binding.clone(), value);
    }
    for key in &patch.remove {
        project.values.remove(&key.factor, &key.binding);
    }
    if let Some(grid) = patch.availability {
        project.availability = grid;
    }
    if let Some(overrides) = patch.goal_weight_overrides {
        project.goal_weight_overrides = overrides;
    }
    check_shape(&project)?;
    store.write_project(&id, &project)?;
    Ok(Json(ProjectResource::new(id, project)))
}

#[derive(Debug, Deserialize)]
pub struct FindingsQuery {
    pub model_id: String,
}

#[derive(Debug, Serialize)]
pub struct FindingsResource {
    pub complete: bool,
    pub findings: Vec<Finding>,
}

/// Characterization findings against a model; drives completeness displays.
pub async fn project_findings(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FindingsQuery>,
) -> ApiResult<Json<FindingsResource>> {
    let project = store.read_project(&id)?;
    let model = store.read_model(&q.model_id)?;
    let findings = validate_characterization(&project, &model);
    Ok(Json(FindingsResource {
        complete: findings.is_empty(),
        findings,
    }))
}

// ---- suggestions

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestionRequest {
    pub model_id: String,
    pub project_id: String,
    #[serde(default)]
    pub runs: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub top: Option<usize>,
    #[serde(default)]
    pub coupling: Option<CouplingRule>,
    #[serde(default)]
    pub exhaustive_limit: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct SuggestionResource {
    pub suggestion_id: String,
    pub model_hash: String,
    pub project_hash: String,
    pub runs: u64,
    pub seed: u64,
    pub total_entries: usize,
    pub entries: Vec<Suggestion>,
}

impl SuggestionResource {
    fn new(id: String, record: &DecisionRecord, top: usize) -> Self {
        SuggestionResource {
            suggestion_id: id,
            model_hash: record.model_hash.clone(),
            project_hash: project_hash(&record.characterization),
            runs: record.runs,
            seed: record.seed,
            total_entries: record.suggestions.entries.len(),
            entries: record.suggestions.top(top).to_vec(),
        }
    }
}

#[derive(Serialize)]
struct SuggestionKey<'a> {
    model_hash: &'a str,
    project_hash: &'a str,
    runs: u64,
    seed: u64,
    settings: &'a RecordSettings,
}

pub async fn create_suggestions(
    State(store): State<AppState>,
    body: String,
) -> ApiResult<Json<SuggestionResource>> {
    let req: SuggestionRequest = parse_body(&body)?;
    let model = store.read_model(&req.model_id)?;
    let project = store.read_project(&req.project_id)?;
    let runs = req.runs.unwrap_or(DEFAULT_RUNS);
    let seed = req.seed.unwrap_or_else(|| uuid::Uuid::new_v4().as_u64_pair().0);
    let top = req.top.unwrap_or(DEFAULT_TOP);
    let mut settings = RecordSettings::default();
    if let Some(c) = req.coupling {
        settings.coupling = c;
    }
    if let Some(limit) = req.exhaustive_limit {
        settings.exhaustive_limit = limit;
    }
    let (mh, ph) = (model_hash(&model), project_hash(&project));
    let id = hash_id(&content_hash(&SuggestionKey {
        model_hash: &mh,
        project_hash: &ph,
        runs,
        seed,
        settings: &settings,
    }));
    if store.contains(Kind::Suggestion, &id) {
        let record = store.read_record(Kind::Suggestion, &id)?;
        return Ok(Json(SuggestionResource::new(id, &record, top)));
    }
    let record = blocking(move || {
        let mut sim = SimulationSettings::new(runs, seed);
        sim.exhaustive_limit = settings.exhaustive_limit;
        let list = suggest(&model, &project, &settings.coupling, &sim)?;
        Ok(DecisionRecord::new(model, project, settings, list))
    })
    .await?;
    store.write_record(Kind::Suggestion, &id, &record)?;
    Ok(Json(SuggestionResource::new(id, &record, top)))
}

#[derive(Debug, Deserialize)]
pub struct TopQuery {
    #[serde(default)]
    pub top: Option<usize>,
}

pub async fn get_suggestions(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<TopQuery>,
) -> ApiResult<Json<SuggestionResource>> {
    let record = store.read_record(Kind::Suggestion, &id)?;
    let top = q.top.unwrap_or(DEFAULT_TOP);
    Ok(Json(SuggestionResource::new(id, &record, top)))
}

// ---- risks

/// Rules by stored id or inline text.
fn load_rules(store: &Store, rules_id: Option<&str>, rules: Option<&str>) -> ApiResult<(RuleSet, String)> {
    let text = match (rules_id, rules) {
        (Some(id), None) => store.read_text(Kind::Rules, id)?,
        (None, Some(text)) => text.to_string(),
        _ => return Err(ApiError::bad_request("BAD_REQUEST", "give exactly one of rules_id and rules")),
    };
    Ok((parse_rules(&text)?, text))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskRequest {
    pub model_id: String,
    pub project_id: String,
    pub assignment: Assignment,
    #[serde(default)]
    pub rules_id: Option<String>,
    #[serde(default)]
    pub rules: Option<String>,
    #[serde(default)]
    pub coupling: Option<CouplingRule>,
}

pub async fn risks(State(store): State<AppState>, body: String) -> ApiResult<Json<RiskReport>> {
    let req: RiskRequest = parse_body(&body)?;
    let model = store.read_model(&req.model_id)?;
    let project = store.read_project(&req.project_id)?;
    let (rules, _) = load_rules(&store, req.rules_id.as_deref(), req.rules.as_deref())?;
    let coupling = req.coupling.unwrap_or_default();
    let report = predict_risks(&req.assignment, &project, &model.factors, &rules, &coupling)
        .map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRequest {
    pub model_id: String,
    pub project_id: String,
    pub assignments: Vec<Assignment>,
    #[serde(default)]
    pub rules_id: Option<String>,
    #[serde(default)]
    pub rules: Option<String>,
    #[serde(default)]
    pub coupling: Option<CouplingRule>,
}

#[derive(Debug, Serialize)]
pub struct ComparedAssignment {
    pub assignment: Assignment,
    pub totals: SeverityTotals,
}

/// Finding counts for several alternatives, e.g. the rows of a suggestion table.
pub async fn compare(State(store): State<AppState>, body: String) -> ApiResult<Json<Vec<ComparedAssignment>>> {
    let req: CompareRequest = parse_body(&body)?;
    let model = store.read_model(&req.model_id)?;
    let project = store.read_project(&req.project_id)?;
    let (rules, _) = load_rules(&store, req.rules_id.as_deref(), req.rules.as_deref())?;
    let coupling = req.coupling.unwrap_or_default();
    let totals = compare_assignments(&req.assignments, &project, &model.factors, &rules, &coupling)
        .map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
    Ok(Json(
        req.assignments
            .into_iter()
            .zip(totals)
            .map(|(assignment, totals)| ComparedAssignment { assignment, totals })
            .collect(),
    ))
}

// ---- decisions

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub suggestion_id: String,
    pub selected_assignment: Assignment,
    #[serde(default)]
    pub rules_id: Option<String>,
    #[serde(default)]
    pub rules: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DecisionResource {
    pub id: String,
    pub record: DecisionRecord,
}

pub async fn create_decision(
    State(store): State<AppState>,
    body: String,
) -> ApiResult<(StatusCode, Json<DecisionResource>)> {
    let req: DecisionRequest = parse_body(&body)?;
    let mut record = store.read_record(Kind::Suggestion, &req.suggestion_id)?;
    req.selected_assignment
        .to_indices(&record.characterization)
        .map_err(|e| ApiError::bad_request("INFEASIBLE_ASSIGNMENT", e.to_string()))?;
    if req.rules_id.is_some() || req.rules.is_some() {
        let (rules, text) = load_rules(&store, req.rules_id.as_deref(), req.rules.as_deref())?;
        let report = predict_risks(
            &req.selected_assignment,
            &record.characterization,
            &record.model.factors,
            &rules,
            &record.settings.coupling,
        )
        .map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
        record.risk_report = Some(report);
        record.rules = Some(text);
    }
    record.selected = Some(req.selected_assignment);
    record.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let id = hash_id(&content_hash(&record));
    store.write_record(Kind::Decision, &id, &record)?;
    Ok((StatusCode::CREATED, Json(DecisionResource { id, record })))
}

#[derive(Debug, Deserialize)]
pub struct FormatQuery {
    #[serde(default)]
    pub format: Option<String>,
}

pub async fn get_decision(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let format: ExportFormat = q
        .format
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(|e: String| ApiError::bad_request("BAD_REQUEST", e))?;
    let record = store.read_record(Kind::Decision, &id)?;
    let doc = export_decision(&record, format)?;
    let mime = match format {
        ExportFormat::Json => "application/json",
        ExportFormat::Xml => "application/xml",
    };
    Ok(([(header::CONTENT_TYPE, mime)], doc).into_response())
}
