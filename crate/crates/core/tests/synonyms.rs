use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use phicon::synonyms::{load_tsv, load_wndb, PosTag, SynonymProvider, POS_TAGS};
use phicon::Error;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn wndb() -> SynonymProvider {
    load_wndb(fixture("wndb")).unwrap()
}

#[test]
fn wndb_offsets_point_at_their_lines() {
    for suffix in ["noun", "verb", "adj", "adv"] {
        let bytes = fs::read(fixture("wndb").join(format!("data.{suffix}"))).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        let mut pos = 0;
        for line in text.split_inclusive('\n') {
            if !line.starts_with(' ') {
                let off: usize = line[..8].parse().unwrap();
                assert_eq!(off, pos, "data.{suffix}");
            }
            pos += line.len();
        }
        assert_eq!(pos, bytes.len());
    }
}

#[test]
fn wndb_shared_synset_gives_synonyms() {
    let p = wndb();
    let doc = p.lookup_synonyms("doctor", PosTag::Noun);
    assert!(doc.contains(&"physician".to_string()));
    // union over both noun synsets of "doctor"
    assert!(doc.contains(&"doctor of the church".to_string()));
    assert!(!doc.contains(&"doctor".to_string()));
    assert_eq!(p.lookup_synonyms("Doctor", PosTag::Noun), doc);
    assert_eq!(p.lookup_synonyms("doctor", PosTag::Verb), ["doctor up", "sophisticate"]);
}

#[test]
fn wndb_singleton_synset_has_no_synonyms() {
    let p = wndb();
    assert!(p.lookup_synonyms("hermit", PosTag::Noun).is_empty());
    assert_eq!(p.lookup_pos("hermit"), BTreeSet::from([PosTag::Noun]));
}

#[test]
fn wndb_pos_index_and_markers() {
    let p = wndb();
    assert_eq!(p.lookup_pos("run"), BTreeSet::from([PosTag::Noun, PosTag::Verb]));
    assert_eq!(p.lookup_pos("quick"), BTreeSet::from([PosTag::Adjective]));
    assert_eq!(p.lookup_synonyms("quick", PosTag::Adjective), ["speedy"]);
    assert_eq!(p.lookup_synonyms("able", PosTag::Adjective), ["able-bodied"]);
    assert!(p.lookup_pos("the").is_empty());
    assert_eq!(p.lookup_synonyms("health center", PosTag::Noun), ["clinic"]);
    assert_eq!(
        p.lookup_synonyms("promptly", PosTag::Adverb),
        ["immediately", "quickly", "right away"]
    );
}

#[test]
fn wndb_synonymy_is_symmetric() {
    let p = wndb();
    let mut checked = 0;
    for pos in POS_TAGS {
        for line in p.dump().lines().filter(|l| l.starts_with("syn\t")) {
            let f: Vec<&str> = line.split('\t').collect();
            if f[2] != pos.name() {
                continue;
            }
            for b in f[3].split(',').filter(|s| !s.is_empty()) {
                assert!(p.lookup_synonyms(b, pos).contains(&f[1].to_string()), "{b} -> {}", f[1]);
                checked += 1;
            }
        }
    }
    assert!(checked > 20);
}

#[test]
fn wndb_load_is_deterministic() {
    assert_eq!(wndb().dump(), wndb().dump());
}

#[test]
fn wndb_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_wndb(dir.path()), Err(Error::Io { .. })));
}

#[test]
fn wndb_malformed_line_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixture("wndb")).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    let path = dir.path().join("index.verb");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("broken v two 0 1 0 00000001\n");
    let expected_line = text.lines().count();
    fs::write(&path, text).unwrap();
    match load_wndb(dir.path()) {
        Err(Error::SynonymParse { file, line, .. }) => {
            assert!(file.ends_with("index.verb"));
            assert_eq!(line, expected_line);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn tsv_fixture() {
    let p = load_tsv(fixture("synonyms.tsv")).unwrap();
    assert_eq!(p.lookup_synonyms("met", PosTag::Verb), ["encountered", "saw"]);
    assert_eq!(p.lookup_synonyms("quick", PosTag::Adjective), ["fast", "speedy"]);
    assert_eq!(p.lookup_pos("run"), BTreeSet::from([PosTag::Noun, PosTag::Verb]));
    assert!(p.lookup_pos("the").is_empty());
    assert!(p.lookup_synonyms("lonely", PosTag::Adjective).is_empty());
    assert_eq!(p.lookup_pos("lonely"), BTreeSet::from([PosTag::Adjective]));
    assert!(p.is_stopword("The"));
    assert!(!p.is_stopword("hospital"));
}

#[test]
fn fixtures_are_small() {
    let tsv = fs::read_to_string(fixture("synonyms.tsv")).unwrap();
    assert!(tsv.lines().count() <= 100);
    assert!(wndb().entry_count() <= 100);
}
