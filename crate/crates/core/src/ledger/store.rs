use std::collections::BTreeMap;

use crate::crypto::{sha256, Hash32};

/// Off-chain payload store keyed by content digest. The ledger keeps only
/// the digests.
#[derive(Debug, Clone, Default)]
pub struct OffChainStore {
    blobs: BTreeMap<Hash32, Vec<u8>>,
}

impl OffChainStore {
    pub fn put(&mut self, payload: Vec<u8>) -> Hash32 {
        let key = sha256(&payload);
        self.blobs.insert(key, payload);
        key
    }

    pub fn get(&self, key: &Hash32) -> Option<&[u8]> {
        self.blobs.get(key).map(Vec::as_slice)
    }

    pub fn contains(&self, key: &Hash32) -> bool {
        self.blobs.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }
}
