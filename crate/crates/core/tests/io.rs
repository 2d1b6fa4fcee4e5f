mod common;

use proptest::prelude::*;
use quick_xml::events::Event;
use quick_xml::Reader;
use serde_json::Value;

use common::{fixture, load, random_model, random_risk_case, seeded};
use worksplit_core::io::{
    decision_from_json, export_decision, model_hash, parse_model, parse_project, project_to_json, read_model,
    read_project, read_rules, replay_decision, to_json, write_model, write_project, write_rules, DecisionRecord,
    ExportFormat, RecordSettings,
};
use worksplit_core::model::CouplingRule;
use worksplit_core::optimizer::SimulationSettings;
use worksplit_core::pipeline::suggest;
use worksplit_core::risk::predict_risks;
use worksplit_core::rules::{format_rules, parse_rules};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_model_survives_a_file_round_trip(seed in any::<u64>()) {
        let model = random_model(&mut seeded(seed), 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model.json");
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(model_hash(&back), model_hash(&model));
    }

    #[test]
    fn random_project_survives_a_file_round_trip(seed in any::<u64>()) {
        let case = random_risk_case(&mut seeded(seed));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.project.json");
        write_project(&path, &case.project).unwrap();
        prop_assert_eq!(read_project(&path).unwrap(), case.project.clone());
        let rules_path = dir.path().join("r.grl");
        write_rules(&rules_path, &case.rules).unwrap();
        prop_assert_eq!(read_rules(&rules_path).unwrap(), case.rules);
    }
}

#[test]
fn unknown_schema_versions_are_rejected() {
    let text = std::fs::read_to_string(fixture("demo.model.json")).unwrap();
    let mut value: Value = serde_json::from_str(&text).unwrap();
    value["schema_version"] = 999.into();
    let err = parse_model(&value.to_string()).unwrap_err();
    assert_eq!(err.code(), "SCHEMA_ERROR");
    assert!(err.to_string().contains("$.schema_version"));

    let (_, project) = load("demo.model.json", "demo.project.json");
    let mut value: Value = serde_json::from_str(&project_to_json(&project)).unwrap();
    assert_eq!(value["schema_version"], 1);
    value["schema_version"] = 999.into();
    assert_eq!(parse_project(&value.to_string()).unwrap_err().code(), "SCHEMA_ERROR");
    value.as_object_mut().unwrap().remove("schema_version");
    assert_eq!(parse_project(&value.to_string()).unwrap(), project);
}

#[test]
fn schema_errors_name_the_failing_path() {
    let text = std::fs::read_to_string(fixture("demo.model.json")).unwrap();
    let mut value: Value = serde_json::from_str(&text).unwrap();
    value["nodes"][1]["colour"] = "red".into();
    match parse_model(&value.to_string()).unwrap_err() {
        worksplit_core::io::IoError::Schema { locus, .. } => assert!(locus.starts_with("$.nodes[1]"), "{locus}"),
        other => panic!("{other}"),
    }
    let err = read_model(fixture("missing.model.json")).unwrap_err();
    assert_eq!(err.code(), "IO_ERROR");
}

#[test]
fn rules_text_round_trips_through_the_formatter() {
    let rules = read_rules(fixture("demo.grl")).unwrap();
    assert_eq!(parse_rules(&format_rules(&rules)).unwrap(), rules);
}

fn record(runs: u64, seed: u64) -> DecisionRecord {
    let (model, project) = load("demo.model.json", "demo.project.json");
    let coupling = CouplingRule::default();
    let settings = SimulationSettings::new(runs, seed);
    let suggestions = suggest(&model, &project, &coupling, &settings).unwrap();
    let text = std::fs::read_to_string(fixture("demo.grl")).unwrap();
    let rules = parse_rules(&text).unwrap();
    let selected = suggestions.entries[0].assignment.clone();
    let report = predict_risks(&selected, &project, &model.factors, &rules, &coupling).unwrap();
    let mut rec = DecisionRecord::new(model, project, RecordSettings::default(), suggestions);
    rec.timestamp = Some("2024-05-01T10:00:00Z".into());
    rec.selected = Some(selected);
    rec.risk_report = Some(report);
    rec.rules = Some(text);
    rec
}

#[test]
fn json_export_is_a_fixed_point() {
    let rec = record(50, 3);
    let first = export_decision(&rec, ExportFormat::Json).unwrap();
    let back = decision_from_json(&first).unwrap();
    assert_eq!(back, rec);
    assert_eq!(export_decision(&back, ExportFormat::Json).unwrap(), first);
}

fn json_leaves(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Null => {}
        Value::Bool(b) => out.push(b.to_string()),
        Value::Number(n) => out.push(n.to_string()),
        Value::String(s) => out.push(s.clone()),
        Value::Array(items) => items.iter().for_each(|i| json_leaves(i, out)),
        Value::Object(map) => map.values().for_each(|i| json_leaves(i, out)),
    }
}

/// Attribute values of every element, except the member-name `key` of `<entry>`.
fn xml_leaves(xml: &str) -> Vec<String> {
    let mut reader = Reader::from_str(xml);
    let mut out = Vec::new();
    loop {
        match reader.read_event().unwrap() {
            Event::Eof => break,
            Event::Start(e) | Event::Empty(e) => {
                let entry = e.name().as_ref() == b"entry";
                for a in e.attributes() {
                    let a = a.unwrap();
                    if entry && a.key.as_ref() == b"key" {
                        continue;
                    }
                    out.push(a.unescape_value().unwrap().into_owned());
                }
            }
            Event::Text(t) => assert!(t.iter().all(u8::is_ascii_whitespace), "unexpected text node"),
            _ => {}
        }
    }
    out
}

#[test]
fn xml_and_json_exports_carry_the_same_leaves() {
    let rec = record(50, 3);
    let json: Value = serde_json::from_str(&export_decision(&rec, ExportFormat::Json).unwrap()).unwrap();
    let xml = export_decision(&rec, ExportFormat::Xml).unwrap();
    let mut a = Vec::new();
    json_leaves(&json, &mut a);
    let mut b = xml_leaves(&xml);
    a.sort();
    b.sort();
    assert_eq!(a, b);
    assert!(xml.starts_with("<?xml"));
}

#[test]
fn zero_variance_record_mentions_full_frequency() {
    let (model, project) = load("zero_variance.model.json", "zero_variance.project.json");
    let suggestions = suggest(&model, &project, &CouplingRule::default(), &SimulationSettings::new(20, 1)).unwrap();
    assert_eq!(suggestions.entries.len(), 1);
    let rec = DecisionRecord::new(model, project, RecordSettings::default(), suggestions);
    for format in [ExportFormat::Json, ExportFormat::Xml] {
        let doc = export_decision(&rec, format).unwrap();
        assert!(doc.contains("1.0"), "{doc}");
    }
    let json = export_decision(&rec, ExportFormat::Json).unwrap();
    assert!(json.contains("\"frequency\": 1.0"));
}

#[test]
fn replay_reproduces_the_embedded_suggestions() {
    let rec = record(120, 99);
    let text = to_json(&rec);
    let replayed = replay_decision(&decision_from_json(&text).unwrap()).unwrap();
    assert!(replayed.matches);
    assert_eq!(replayed.suggestions, rec.suggestions);
}

#[test]
fn tampered_model_fails_verification() {
    let mut rec = record(10, 1);
    rec.model.goal_weights.insert("quality".into(), 0.9);
    assert_eq!(rec.verify().unwrap_err().code(), "HASH_MISMATCH");
    assert_eq!(replay_decision(&rec).unwrap_err().code(), "HASH_MISMATCH");
}
