use std::collections::HashMap;

/// Dense handle for a concept inside one [`ConceptTaxonomy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptKey(pub(crate) u32);

impl ConceptKey {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("concept `{0}` is listed more than once")]
    Duplicate(String),
    #[error("concept `{child}` names unknown parent `{parent}`")]
    UnknownParent { child: String, parent: String },
    #[error("parent links form a cycle through `{0}`")]
    Cycle(String),
}

/// A forest of concept ids with parent links.
#[derive(Debug, Clone, Default)]
pub struct ConceptTaxonomy {
    ids: Vec<String>,
    lookup: HashMap<String, ConceptKey>,
    parent: Vec<Option<ConceptKey>>,
    children: Vec<Vec<ConceptKey>>,
}

impl ConceptTaxonomy {
    /// Builds the forest from `(concept_id, parent_id)` rows.
    pub fn from_edges<I, S>(rows: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = (S, Option<S>)>,
        S: Into<String>,
    {
        let rows: Vec<(String, Option<String>)> =
            rows.into_iter().map(|(c, p)| (c.into(), p.map(Into::into))).collect();
        let mut tax = ConceptTaxonomy::default();
        for (id, _) in &rows {
            if tax.lookup.contains_key(id) {
                return Err(TaxonomyError::Duplicate(id.clone()));
            }
            tax.lookup.insert(id.clone(), ConceptKey(tax.ids.len() as u32));
            tax.ids.push(id.clone());
        }
        tax.parent = vec![None; tax.ids.len()];
        tax.children = vec![Vec::new(); tax.ids.len()];
        for (id, parent) in &rows {
            let Some(parent) = parent else { continue };
            let p = *tax.lookup.get(parent).ok_or_else(|| TaxonomyError::UnknownParent {
                child: id.clone(),
                parent: parent.clone(),
            })?;
            let c = tax.lookup[id];
            tax.parent[c.index()] = Some(p);
            tax.children[p.index()].push(c);
        }
        // every walk towards a root must terminate within |nodes| steps
        for start in 0..tax.ids.len() {
            let mut cur = tax.parent[start];
            let mut steps = 0;
            while let Some(p) = cur {
                steps += 1;
                if steps > tax.ids.len() {
                    return Err(TaxonomyError::Cycle(tax.ids[start].clone()));
                }
                cur = tax.parent[p.index()];
            }
        }
        Ok(tax)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn key(&self, concept_id: &str) -> Option<ConceptKey> {
        self.lookup.get(concept_id).copied()
    }

    pub fn contains(&self, concept_id: &str) -> bool {
        self.lookup.contains_key(concept_id)
    }

    pub fn id(&self, key: ConceptKey) -> &str {
        &self.ids[key.index()]
    }

    pub fn parent(&self, key: ConceptKey) -> Option<ConceptKey> {
        self.parent[key.index()]
    }

    pub fn children(&self, key: ConceptKey) -> &[ConceptKey] {
        &self.children[key.index()]
    }

    /// Concept ids in file order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }

    /// `key` and all of its descendants, in ascending key order.
    pub fn subtree(&self, key: ConceptKey) -> Vec<ConceptKey> {
        let mut out = vec![key];
        let mut stack = vec![key];
        while let Some(k) = stack.pop() {
            for &c in self.children(k) {
                out.push(c);
                stack.push(c);
            }
        }
        out.sort_unstable();
        out
    }
}
