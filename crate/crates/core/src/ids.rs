use std::collections::HashMap;

/// Two-way dictionary between opaque external ids and dense `u32` indices.
///
/// All datasets keep their user/item/supplier ids interned so that the
/// numeric kernels work on contiguous indices, while every file that leaves
/// the process is written with the original string ids.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    index_of: HashMap<String, u32>,
    ids: Vec<String>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Intern `id`, returning its dense index (stable across repeat calls).
    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(&idx) = self.index_of.get(id) {
            return idx;
        }
        let idx = self.ids.len() as u32;
        self.ids.push(id.to_owned());
        self.index_of.insert(id.to_owned(), idx);
        idx
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.index_of.get(id).copied()
    }

    /// External id for a dense index. Panics on an out-of-range index.
    pub fn id(&self, index: u32) -> &str {
        &self.ids[index as usize]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, s)| (i as u32, s.as_str()))
    }
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
    }
}
