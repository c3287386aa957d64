use tabula_core::{EncryptedMessage, Mode, Verdict};
use tabula_net::{run_composition_scenario, ScenarioConfig, Transcript};

fn reparses(t: &Transcript) {
    let text = t.to_string();
    let again: Transcript = text.parse().unwrap();
    assert_eq!(&again, t);
    assert!(again.messages().count() > 0);
    for r in again.messages() {
        r.body.parse::<EncryptedMessage>().unwrap_or_else(|e| panic!("{}: {e}", r.body));
    }
}

#[tokio::test]
async fn honest_run_in_both_modes() {
    let mut finals = Vec::new();
    for (mode, prime) in [(Mode::St, false), (Mode::Tat, true)] {
        let mut config = ScenarioConfig::example();
        config.mode = mode;
        config.prime = prime;
        let expected = config.expected_document();
        let out = run_composition_scenario(config).await.unwrap();
        assert_eq!(out.halt, None);
        assert_eq!(out.final_document.as_ref(), Some(&expected));
        assert!(out
            .verdicts
            .iter()
            .flat_map(|(_, v)| v)
            .all(|v| v.verdict == Verdict::Accept));
        reparses(&out.transcript);
        finals.push(out.final_document.unwrap());
    }
    assert_eq!(finals[0], finals[1]);
    assert_eq!(
        tabula_core::doc::emit_xml(&finals[0]),
        r#"<root attr1="value1" attr2="value2"><name>indore</name><value>7</value><nv>b2</nv></root>"#
    );
}

#[tokio::test]
async fn tag_table_round_is_shorter_on_the_wire() {
    let mut config = ScenarioConfig::example();
    config.mode = Mode::Tat;
    config.prime = true;
    let out = run_composition_scenario(config).await.unwrap();
    let to_sp1: Vec<&str> = out
        .transcript
        .messages()
        .filter(|r| r.direction == "S->sp1")
        .map(|r| r.body.as_str())
        .collect();
    assert_eq!(to_sp1.len(), 2);
    assert!(to_sp1[1].len() < to_sp1[0].len());
    assert!(to_sp1[1].starts_with("2, 01 009 0002 003 0004 05 122122104122 0 "));
}

#[tokio::test]
async fn tampering_intermediary_is_rejected() {
    for mode in [Mode::St, Mode::Tat] {
        let mut config = ScenarioConfig::example();
        config.mode = mode;
        config.prime = mode == Mode::Tat;
        config.participant_mut("sp1").unwrap().tamper = Some(3);
        let out = run_composition_scenario(config).await.unwrap();
        let halt = out.halt.expect("pipeline halts");
        assert_eq!(halt.participant, "sp1");
        assert_eq!(halt.rejected, vec![Some(3)]);
        assert_eq!(out.final_document, None);
        // sp2 never saw the message
        assert!(out.transcript.records.iter().all(|r| !r.uri.contains("process") || !r.direction.contains("sp2")));
        reparses(&out.transcript);
    }
}

#[tokio::test]
async fn fresh_keys_work_too() {
    let mut config = ScenarioConfig::example();
    config.pinned_keys.clear();
    config.group_key = None;
    config.seed = Some(5);
    config.mode = Mode::Tat;
    config.prime = true;
    let expected = config.expected_document();
    let out = run_composition_scenario(config).await.unwrap();
    assert_eq!(out.final_document, Some(expected));
}

#[tokio::test]
async fn invalid_configs() {
    let mut config = ScenarioConfig::example();
    config.policy = config.policy.assign(4, "sp3");
    assert_eq!(run_composition_scenario(config).await.unwrap_err().name(), "InvalidScenario");
    let mut config = ScenarioConfig::example();
    config.participant_mut("sp2").unwrap().name = "sp1".into();
    assert!(run_composition_scenario(config).await.is_err());
}
