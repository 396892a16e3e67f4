#![allow(dead_code)]

use std::path::Path;

use quadgit_cli::Store;

pub const GRAPH1: &str = "http://example.org/graph1";
pub const GRAPH2: &str = "http://example.org/graph2";

pub fn insert(graph: &str, triples: &str) -> String {
    format!("INSERT DATA {{ GRAPH <{graph}> {{ {triples} }} }}")
}

pub fn delete(graph: &str, triples: &str) -> String {
    format!("DELETE DATA {{ GRAPH <{graph}> {{ {triples} }} }}")
}

pub fn president(who: &str) -> String {
    format!("<http://example.org/{who}> <http://example.org/presidentOf> <http://example.org/USA> .")
}

pub fn label(resource: &str, text: &str) -> String {
    format!("<{resource}> <http://www.w3.org/2000/01/rdf-schema#label> \"{text}\" .")
}

pub const OLD_LEIPZIG: &str = "http://example.org/Leipzig";
pub const NEW_LEIPZIG: &str = "http://aksw.org/Leipzig";

/// The two-branch fixture: a presidency conflict in graph 1 and a label fix
/// against a namespace move in graph 2.
pub fn presidency_updates() -> Vec<(&'static str, String)> {
    vec![
        ("master", insert(GRAPH2, &label(OLD_LEIPZIG, "Lepizig"))),
        ("master", insert(GRAPH1, &president("Obama"))),
        (
            "master",
            format!(
                "{} ; {}",
                delete(GRAPH2, &label(OLD_LEIPZIG, "Lepizig")),
                insert(GRAPH2, &label(OLD_LEIPZIG, "Leipzig"))
            ),
        ),
        ("develop", insert(GRAPH1, &president("Trump"))),
        (
            "develop",
            format!(
                "{} ; {}",
                delete(GRAPH2, &label(OLD_LEIPZIG, "Lepizig")),
                insert(GRAPH2, &label(NEW_LEIPZIG, "Lepizig"))
            ),
        ),
    ]
}

pub fn init_store(dir: &Path) -> Store {
    Store::init(dir, "master").unwrap()
}
