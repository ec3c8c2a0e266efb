use serde::{Deserialize, Serialize};

use super::Block;
use crate::codec::{Decode, DecodeError, Decoder, Encode, Encoder};
use crate::crypto::Hash32;

const CHAIN_MAGIC: &[u8; 4] = b"TCv1";

/// Hash-linked sequence of blocks plus the recorded head hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    blocks: Vec<Block>,
    head: Hash32,
}

impl Default for Chain {
    fn default() -> Self {
        let genesis = Block::genesis();
        Chain {
            head: genesis.hash(),
            blocks: vec![genesis],
        }
    }
}

impl Chain {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Mutable access for tamper tests. Anything changed here shows up as a
    /// failed [`Chain::verify`].
    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn head(&self) -> Hash32 {
        self.head
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn height(&self) -> u64 {
        self.tip().height
    }

    pub(crate) fn push(&mut self, block: Block) {
        debug_assert_eq!(block.prev_hash, self.head);
        self.head = block.hash();
        self.blocks.push(block);
    }

    /// True iff every link and digest recomputes from genesis up to the
    /// recorded head.
    pub fn verify(&self) -> bool {
        let Some(genesis) = self.blocks.first() else {
            return false;
        };
        if genesis.prev_hash != Hash32::ZERO || !genesis.transactions.is_empty() {
            return false;
        }
        let mut prev: Option<Hash32> = None;
        for (i, block) in self.blocks.iter().enumerate() {
            if block.height != i as u64 || !block.is_internally_consistent() {
                return false;
            }
            if let Some(p) = prev {
                if block.prev_hash != p {
                    return false;
                }
            }
            prev = Some(block.hash());
        }
        prev == Some(self.head)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_canonical_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        Self::from_canonical_bytes(bytes)
    }
}

impl Encode for Chain {
    fn encode(&self, enc: &mut Encoder) {
        enc.raw(CHAIN_MAGIC).put(&self.head).seq(&self.blocks);
    }
}

impl Decode for Chain {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        if dec.take(4)? != CHAIN_MAGIC {
            return Err(DecodeError::InvalidValue("bad chain magic".into()));
        }
        Ok(Chain {
            head: dec.get()?,
            blocks: dec.seq()?,
        })
    }
}

/// Verifies an exported chain. Bytes that do not decode are not a valid
/// chain.
pub fn verify_chain_bytes(bytes: &[u8]) -> bool {
    Chain::from_bytes(bytes).is_ok_and(|c| c.verify())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genesis_only_verifies() {
        let c = Chain::default();
        assert!(c.verify());
        assert!(verify_chain_bytes(&c.to_bytes()));
        assert_eq!(c.height(), 0);
    }

    #[test]
    fn empty_blocks_link() {
        let mut c = Chain::default();
        for h in 1..5 {
            c.push(Block::new(h, c.head(), h, vec![]));
        }
        assert!(c.verify());
        let mut bad = c.clone();
        bad.blocks_mut()[4].timestamp += 1;
        assert!(!bad.verify(), "tip header change must break the recorded head");
        let mut bad = c.clone();
        bad.blocks_mut()[2].prev_hash = Hash32([1; 32]);
        assert!(!bad.verify());
    }

    #[test]
    fn corrupted_bytes_fail() {
        let c = Chain::default();
        let mut bytes = c.to_bytes();
        bytes[0] ^= 0xff;
        assert!(!verify_chain_bytes(&bytes));
        assert!(!verify_chain_bytes(&[]));
    }
}
