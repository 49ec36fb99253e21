//! The JSON files under `scenarios/` are generator output. Run with
//! `MATIC_BLESS=1` to rewrite them.

use std::path::PathBuf;

use matic_core::agents::scenarios::shipped_files;
use matic_core::logic::{apply_transference, parse_program, LogicError, TransferIssue};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn files_match_generators() {
    let bless = std::env::var_os("MATIC_BLESS").is_some();
    for (name, contents) in shipped_files() {
        let path = dir().join(name);
        if bless {
            std::fs::write(&path, &contents).unwrap();
            continue;
        }
        let on_disk = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(on_disk == contents, "{name} is stale; rerun with MATIC_BLESS=1");
    }
}

#[test]
fn formula_files_parse() {
    let mut found = 0;
    for entry in std::fs::read_dir(dir().join("logic")).unwrap() {
        let path = entry.unwrap().path();
        let src = std::fs::read_to_string(&path).unwrap();
        let prog = parse_program(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!prog.is_empty());
        found += 1;
    }
    assert!(found >= 3);
}

#[test]
fn transfer_fixtures() {
    let read = |n: &str| std::fs::read_to_string(dir().join("logic").join(n)).unwrap();
    let ok = parse_program(&read("archimedean.mtl")).unwrap();
    assert!(apply_transference(&ok[0].formula, &Default::default()).is_ok());
    let bad = parse_program(&read("limited.mtl")).unwrap();
    assert_eq!(
        apply_transference(&bad[0].formula, &Default::default()),
        Err(LogicError::IllegalTransfer(TransferIssue::ExternalFormula))
    );
}
