//! Mapping between datasets and flat trees of per-graph N-Quads blobs.

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use super::{EntryMode, ObjectId, ObjectKind, ObjectStore, StoreError, TreeEntry, TreeRecord};
use crate::atomic::canonicalize_graph;
use crate::rdf::{parse_nquads, write_quad_line, Dataset, Graph};

/// RFC 3986 unreserved characters stay literal; everything else is escaped.
const GRAPH_NAME: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

pub fn graph_file_name(graph: &str) -> String {
    format!("{}.nq", encode_component(graph))
}

/// Percent-encodes everything except RFC 3986 unreserved characters.
pub fn encode_component(s: &str) -> String {
    utf8_percent_encode(s, GRAPH_NAME).to_string()
}

/// Inverse of [`graph_file_name`]; `None` for files that are not graph blobs.
pub fn graph_from_file_name(name: &str) -> Option<String> {
    let stem = name.strip_suffix(".nq")?;
    percent_decode_str(stem).decode_utf8().ok().map(|s| s.into_owned())
}

/// Sorted N-Quads lines of one graph, each carrying the graph label.
pub(crate) fn graph_blob(name: &str, graph: &Graph) -> Vec<u8> {
    let mut lines: Vec<String> = graph
        .iter()
        .map(|t| {
            let mut line = String::new();
            write_quad_line(&mut line, t, Some(name));
            line
        })
        .collect();
    lines.sort_unstable();
    lines.concat().into_bytes()
}

/// Writes one canonical blob per named graph and returns the tree id. The
/// default graph is not stored.
pub fn dataset_to_tree<S: ObjectStore + ?Sized>(
    store: &S,
    dataset: &Dataset,
) -> Result<ObjectId, StoreError> {
    let mut entries = Vec::new();
    for (name, graph) in dataset.named_graphs() {
        let canonical = canonicalize_graph(graph)?;
        if canonical.is_empty() {
            continue;
        }
        let id = store.put_object(ObjectKind::Blob, &graph_blob(name, &canonical))?;
        entries.push(TreeEntry {
            mode: EntryMode::Blob,
            name: graph_file_name(name),
            id,
        });
    }
    store.put_tree(&TreeRecord::new(entries))
}

/// Loads every `*.nq` blob of a tree. Statements without a graph label are
/// assigned to the graph named by the file.
pub fn tree_to_dataset<S: ObjectStore + ?Sized>(
    store: &S,
    tree: &ObjectId,
) -> Result<Dataset, StoreError> {
    let record = store.get_tree(tree)?;
    let mut out = Dataset::new();
    for entry in record.entries() {
        if entry.mode != EntryMode::Blob {
            continue;
        }
        let Some(graph_name) = graph_from_file_name(&entry.name) else {
            continue;
        };
        let bytes = store.get_typed(&entry.id, ObjectKind::Blob)?;
        let parsed = parse_nquads(&bytes).map_err(|error| StoreError::BlobParse {
            name: entry.name.clone(),
            error,
        })?;
        for mut quad in parsed.quads() {
            if quad.graph.is_none() {
                quad.graph = Some(graph_name.clone());
            }
            out.insert(quad);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{parse_nquads_str, Term, Triple};
    use crate::store::MemStore;

    #[test]
    fn file_names() {
        assert_eq!(graph_file_name("http://ex.org/g"), "http%3A%2F%2Fex.org%2Fg.nq");
        assert_eq!(
            graph_from_file_name("http%3A%2F%2Fex.org%2Fg.nq").as_deref(),
            Some("http://ex.org/g")
        );
        assert_eq!(graph_file_name("urn:a~b_c-d"), "urn%3Aa~b_c-d.nq");
        assert_eq!(graph_from_file_name("README.md"), None);
    }

    #[test]
    fn empty_dataset_is_empty_tree() {
        let s = MemStore::default();
        let id = dataset_to_tree(&s, &Dataset::new()).unwrap();
        assert_eq!(id.to_hex(), "4b825dc642cb6eb9a060e54bf8d69288fbee4904");
        assert_eq!(tree_to_dataset(&s, &id).unwrap(), Dataset::new());
    }

    #[test]
    fn single_graph_layout_and_round_trip() {
        let s = MemStore::default();
        let d = parse_nquads_str("<http://ex.org/s> <http://ex.org/p> \"o\" <http://ex.org/g> .\n")
            .unwrap();
        let id = dataset_to_tree(&s, &d).unwrap();
        let tree = s.get_tree(&id).unwrap();
        assert_eq!(tree.entries().len(), 1);
        assert_eq!(tree.entries()[0].name, "http%3A%2F%2Fex.org%2Fg.nq");
        let blob = s.get_typed(&tree.entries()[0].id, ObjectKind::Blob).unwrap();
        assert_eq!(
            blob,
            b"<http://ex.org/s> <http://ex.org/p> \"o\" <http://ex.org/g> .\n"
        );
        assert_eq!(tree_to_dataset(&s, &id).unwrap(), d);
    }

    #[test]
    fn unchanged_graph_reuses_blob() {
        let s = MemStore::default();
        let t = |o: &str| {
            Triple::new(Term::iri("http://ex.org/s"), Term::iri("http://ex.org/p"), Term::literal(o))
        };
        let mut d1 = Dataset::new();
        d1.set_graph("http://ex.org/a", [t("1")].into_iter().collect());
        d1.set_graph("http://ex.org/b", [t("2")].into_iter().collect());
        let mut d2 = d1.clone();
        d2.set_graph("http://ex.org/b", [t("3")].into_iter().collect());
        let t1 = s.get_tree(&dataset_to_tree(&s, &d1).unwrap()).unwrap();
        let t2 = s.get_tree(&dataset_to_tree(&s, &d2).unwrap()).unwrap();
        let a = |t: &TreeRecord| t.get("http%3A%2F%2Fex.org%2Fa.nq").unwrap().id;
        let b = |t: &TreeRecord| t.get("http%3A%2F%2Fex.org%2Fb.nq").unwrap().id;
        assert_eq!(a(&t1), a(&t2));
        assert_ne!(b(&t1), b(&t2));
    }

    #[test]
    fn blank_node_graphs_are_canonicalized() {
        let s = MemStore::default();
        let a = parse_nquads_str("_:x <http://ex.org/p> \"v\" <http://ex.org/g> .\n").unwrap();
        let b = parse_nquads_str("_:other <http://ex.org/p> \"v\" <http://ex.org/g> .\n").unwrap();
        assert_eq!(dataset_to_tree(&s, &a).unwrap(), dataset_to_tree(&s, &b).unwrap());
    }

    #[test]
    fn unparseable_blob_is_named() {
        let s = MemStore::default();
        let blob = s.put_object(ObjectKind::Blob, b"not nquads\n").unwrap();
        let tree = s
            .put_tree(&TreeRecord::new(vec![TreeEntry {
                mode: EntryMode::Blob,
                name: "bad.nq".into(),
                id: blob,
            }]))
            .unwrap();
        match tree_to_dataset(&s, &tree) {
            Err(StoreError::BlobParse { name, .. }) => assert_eq!(name, "bad.nq"),
            other => panic!("{other:?}"),
        }
    }
}
