use serde_json::{json, Map, Value};

use super::Solutions;
use crate::rdf::{Term, XSD_STRING};

pub fn term_to_json(term: &Term) -> Value {
    match term {
        Term::Iri(iri) => json!({"type": "uri", "value": iri}),
        Term::Blank(label) => json!({"type": "bnode", "value": label}),
        Term::Literal(lit) => {
            let mut obj = Map::new();
            obj.insert("type".into(), "literal".into());
            obj.insert("value".into(), lit.lexical().into());
            if let Some(lang) = lit.lang() {
                obj.insert("xml:lang".into(), lang.into());
            } else if lit.datatype() != XSD_STRING {
                obj.insert("datatype".into(), lit.datatype().into());
            }
            Value::Object(obj)
        }
    }
}

/// SPARQL 1.1 Query Results JSON.
pub fn solutions_to_json(s: &Solutions) -> Value {
    let bindings: Vec<Value> = s
        .rows
        .iter()
        .map(|row| {
            Value::Object(
                row.iter()
                    .map(|(var, term)| (var.clone(), term_to_json(term)))
                    .collect(),
            )
        })
        .collect();
    json!({
        "head": {"vars": s.variables},
        "results": {"bindings": bindings},
    })
}
