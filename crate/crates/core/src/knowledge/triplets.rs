use std::collections::HashMap;
use std::path::Path;

use crate::error::Result;
use crate::knowledge::{KnowledgeSnippet, KnowledgeSource};
use crate::tsv;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

/// Relation name to its English verbalization (`AtLocation -> "is at location"`).
#[derive(Debug, Clone)]
pub struct RelationSurfaces {
    map: HashMap<String, String>,
}

const CONCEPTNET_SURFACES: &[(&str, &str)] = &[
    ("RelatedTo", "is related to"),
    ("FormOf", "is a form of"),
    ("IsA", "is a"),
    ("PartOf", "is part of"),
    ("HasA", "has a"),
    ("UsedFor", "is used for"),
    ("CapableOf", "is capable of"),
    ("AtLocation", "is at location"),
    ("Causes", "causes"),
    ("HasSubevent", "has subevent"),
    ("HasFirstSubevent", "has first subevent"),
    ("HasLastSubevent", "has last subevent"),
    ("HasPrerequisite", "has prerequisite"),
    ("HasProperty", "has property"),
    ("MotivatedByGoal", "is motivated by goal"),
    ("ObstructedBy", "is obstructed by"),
    ("Desires", "desires"),
    ("CreatedBy", "is created by"),
    ("Synonym", "is a synonym of"),
    ("Antonym", "is an antonym of"),
    ("DistinctFrom", "is distinct from"),
    ("DerivedFrom", "is derived from"),
    ("SymbolOf", "is a symbol of"),
    ("DefinedAs", "is defined as"),
    ("MannerOf", "is a manner of"),
    ("LocatedNear", "is located near"),
    ("HasContext", "has context"),
    ("SimilarTo", "is similar to"),
    ("EtymologicallyRelatedTo", "is etymologically related to"),
    ("EtymologicallyDerivedFrom", "is etymologically derived from"),
    ("CausesDesire", "causes desire"),
    ("MadeOf", "is made of"),
    ("ReceivesAction", "receives action"),
    ("NotDesires", "does not desire"),
    ("NotUsedFor", "is not used for"),
    ("NotCapableOf", "is not capable of"),
    ("NotHasProperty", "does not have property"),
];

impl Default for RelationSurfaces {
    fn default() -> Self {
        Self {
            map: CONCEPTNET_SURFACES
                .iter()
                .map(|(r, s)| (r.to_string(), s.to_string()))
                .collect(),
        }
    }
}

impl RelationSurfaces {
    pub fn empty() -> Self {
        Self {
            map: HashMap::new(),
        }
    }

    /// Loads `relation<TAB>surface` lines on top of the built-in table.
    pub fn load(path: &Path) -> Result<Self> {
        let mut out = Self::default();
        for (line_no, line) in tsv::content_lines(path)? {
            let f = tsv::fields(path, line_no, &line, 2)?;
            out.map.insert(f[0].to_string(), f[1].to_string());
        }
        Ok(out)
    }

    pub fn insert(&mut self, relation: &str, surface: &str) {
        self.map.insert(relation.to_string(), surface.to_string());
    }

    /// Unmapped relations are split at case boundaries and lowercased.
    pub fn surface(&self, relation: &str) -> String {
        if let Some(s) = self.map.get(relation) {
            return s.clone();
        }
        let mut out = String::new();
        for (i, ch) in relation.chars().enumerate() {
            if ch.is_uppercase() && i > 0 {
                out.push(' ');
            }
            if ch == '_' {
                out.push(' ');
            } else {
                out.extend(ch.to_lowercase());
            }
        }
        out
    }
}

/// Triples indexed on their unordered `{head, tail}` endpoint pair.
#[derive(Debug, Clone, Default)]
pub struct TripletStore {
    triples: Vec<Triple>,
    by_pair: HashMap<(String, String), Vec<usize>>,
    surfaces: RelationSurfaces,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl TripletStore {
    pub fn new(surfaces: RelationSurfaces) -> Self {
        Self {
            triples: Vec::new(),
            by_pair: HashMap::new(),
            surfaces,
        }
    }

    pub fn insert(&mut self, head: &str, relation: &str, tail: &str) {
        let triple = Triple {
            head: head.trim().to_lowercase(),
            relation: relation.trim().to_string(),
            tail: tail.trim().to_lowercase(),
        };
        let key = pair_key(&triple.head, &triple.tail);
        if let Some(ids) = self.by_pair.get(&key) {
            if ids.iter().any(|&i| self.triples[i] == triple) {
                return;
            }
        }
        self.by_pair.entry(key).or_default().push(self.triples.len());
        self.triples.push(triple);
    }

    /// Loads `head<TAB>relation<TAB>tail` lines.
    pub fn load(path: &Path, surfaces: RelationSurfaces) -> Result<Self> {
        let mut store = Self::new(surfaces);
        for (line_no, line) in tsv::content_lines(path)? {
            let f = tsv::fields(path, line_no, &line, 3)?;
            store.insert(f[0], f[1], f[2]);
        }
        Ok(store)
    }

    /// Stored triples whose endpoints are exactly `{a, b}`, in insertion order.
    pub fn between(&self, a: &str, b: &str) -> Vec<&Triple> {
        self.by_pair
            .get(&pair_key(a, b))
            .map(|ids| ids.iter().map(|&i| &self.triples[i]).collect())
            .unwrap_or_default()
    }

    pub fn verbalize(&self, t: &Triple) -> String {
        format!(
            "{} {} {}",
            t.head.replace('_', " "),
            self.surfaces.surface(&t.relation),
            t.tail.replace('_', " ")
        )
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// One snippet per stored triple linking each unordered pair of `words`,
/// pairs enumerated as `i < j` over the input order.
pub fn retrieve_triplets<S: AsRef<str>>(store: &TripletStore, words: &[S]) -> Vec<KnowledgeSnippet> {
    let linked: Vec<(&str, Option<(usize, usize)>)> = words.iter().map(|w| (w.as_ref(), None)).collect();
    retrieve_triplets_linked(store, &linked)
}

/// [`retrieve_triplets`] over words carrying their query span; each snippet
/// is linked to the span of the first word of its pair.
pub fn retrieve_triplets_linked<S: AsRef<str>>(
    store: &TripletStore,
    words: &[(S, Option<(usize, usize)>)],
) -> Vec<KnowledgeSnippet> {
    let mut out = Vec::new();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            let (a, b) = (words[i].0.as_ref(), words[j].0.as_ref());
            if a == b {
                continue;
            }
            for t in store.between(a, b) {
                let mut snippet = KnowledgeSnippet::new(KnowledgeSource::Triplet, store.verbalize(t));
                snippet.linked_span = words[i].1;
                out.push(snippet);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn store() -> TripletStore {
        let mut s = TripletStore::new(RelationSurfaces::default());
        s.insert("dog", "AtLocation", "kennel");
        s.insert("ice_cream", "IsA", "dessert");
        s
    }

    fn texts(v: Vec<KnowledgeSnippet>) -> Vec<String> {
        v.into_iter().map(|k| k.text).collect()
    }

    #[test]
    fn pair_lookup_is_unordered() {
        let s = store();
        assert_eq!(texts(retrieve_triplets(&s, &["dog", "kennel"])), ["dog is at location kennel"]);
        assert_eq!(texts(retrieve_triplets(&s, &["kennel", "dog"])), ["dog is at location kennel"]);
        assert!(retrieve_triplets(&s, &["dog", "cat"]).is_empty());
        assert_eq!(texts(retrieve_triplets(&s, &["ice_cream", "dessert"])), ["ice cream is a dessert"]);
    }

    #[test]
    fn unmapped_relation_is_split() {
        let r = RelationSurfaces::empty();
        assert_eq!(r.surface("HasSmallPart"), "has small part");
    }

    #[test]
    fn duplicate_triples_are_stored_once() {
        let mut s = store();
        s.insert("dog", "AtLocation", "kennel");
        assert_eq!(s.len(), 2);
    }

    proptest! {
        #[test]
        fn index_returns_exactly_matching_triples(
            triples in proptest::collection::vec(("[a-d]", "[RS]", "[a-d]"), 0..30),
            a in "[a-d]", b in "[a-d]",
        ) {
            let mut s = TripletStore::new(RelationSurfaces::empty());
            for (h, r, t) in &triples {
                s.insert(h, r, t);
            }
            let mut expected: Vec<Triple> = Vec::new();
            for (h, r, t) in &triples {
                let tr = Triple { head: h.clone(), relation: r.clone(), tail: t.clone() };
                let hit = (h == &a && t == &b) || (h == &b && t == &a);
                if hit && !expected.contains(&tr) {
                    expected.push(tr);
                }
            }
            let got: Vec<Triple> = s.between(&a, &b).into_iter().cloned().collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn swapping_a_pair_keeps_output(a in "[a-d]", b in "[a-d]") {
            let mut s = TripletStore::new(RelationSurfaces::empty());
            s.insert("a", "R", "b");
            s.insert("c", "S", "a");
            s.insert("b", "R", "d");
            prop_assert_eq!(
                retrieve_triplets(&s, &[a.as_str(), b.as_str()]),
                retrieve_triplets(&s, &[b.as_str(), a.as_str()])
            );
        }
    }
}
