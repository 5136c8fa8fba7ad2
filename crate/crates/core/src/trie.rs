//! Word-level prefix tree over canonicalized keyword token sequences.
//!
//! Edges are labelled with interned token ids. Ids are assigned in ascending
//! surface order, so sorting children by id is the same as sorting them by
//! surface and comparing id sequences is the same as comparing token lists
//! lexicographically.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = u32;
pub type TokenId = u32;

const MAGIC: &[u8; 8] = b"KWTRIE\0\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Node {
    /// Sorted by token id.
    children: Vec<(TokenId, NodeId)>,
    terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordTrie {
    nodes: Vec<Node>,
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
    path_count: usize,
}

impl Default for KeywordTrie {
    fn default() -> Self {
        Self {
            nodes: vec![Node::default()],
            vocab: Vec::new(),
            index: HashMap::new(),
            path_count: 0,
        }
    }
}

/// Builds a trie from token sequences. Duplicates are idempotent.
pub fn build_trie<S: AsRef<str>>(sequences: &[Vec<S>]) -> Result<KeywordTrie> {
    KeywordTrie::build(sequences)
}

impl KeywordTrie {
    pub const ROOT: NodeId = 0;

    pub fn build<S: AsRef<str>>(sequences: &[Vec<S>]) -> Result<Self> {
        if let Some(index) = sequences.iter().position(Vec::is_empty) {
            return Err(Error::EmptySequence { index });
        }
        let surfaces: BTreeSet<&str> = sequences.iter().flatten().map(AsRef::as_ref).collect();
        let vocab: Vec<String> = surfaces.into_iter().map(str::to_string).collect();
        let index: HashMap<String, TokenId> = vocab
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as TokenId))
            .collect();

        let mut trie = Self {
            nodes: vec![Node::default()],
            vocab,
            index,
            path_count: 0,
        };
        for seq in sequences {
            let mut node = Self::ROOT;
            for token in seq {
                let id = trie.index[token.as_ref()];
                node = trie.child_or_insert(node, id);
            }
            let n = &mut trie.nodes[node as usize];
            if !n.terminal {
                n.terminal = true;
                trie.path_count += 1;
            }
        }
        Ok(trie)
    }

    fn child_or_insert(&mut self, node: NodeId, token: TokenId) -> NodeId {
        let next = self.nodes.len() as NodeId;
        let children = &mut self.nodes[node as usize].children;
        match children.binary_search_by_key(&token, |&(t, _)| t) {
            Ok(pos) => children[pos].1,
            Err(pos) => {
                children.insert(pos, (token, next));
                self.nodes.push(Node::default());
                next
            }
        }
    }

    fn node(&self, node: NodeId) -> Result<&Node> {
        self.nodes.get(node as usize).ok_or(Error::UnknownNode(node))
    }

    /// Child edge labels of `node` and whether it may terminate.
    pub fn valid_next(&self, node: NodeId) -> Result<(Vec<&str>, bool)> {
        let n = self.node(node)?;
        let tokens = n.children.iter().map(|&(t, _)| self.token(t)).collect();
        Ok((tokens, n.terminal))
    }

    /// `(token id, child node)` pairs in ascending token order.
    pub fn children(&self, node: NodeId) -> Result<&[(TokenId, NodeId)]> {
        Ok(&self.node(node)?.children)
    }

    pub fn is_terminal(&self, node: NodeId) -> Result<bool> {
        Ok(self.node(node)?.terminal)
    }

    pub fn child(&self, node: NodeId, token: &str) -> Option<NodeId> {
        let id = *self.index.get(token)?;
        let children = &self.nodes.get(node as usize)?.children;
        children
            .binary_search_by_key(&id, |&(t, _)| t)
            .ok()
            .map(|pos| children[pos].1)
    }

    /// Node reached by following `seq` from the root.
    pub fn walk<S: AsRef<str>>(&self, seq: &[S]) -> Option<NodeId> {
        seq.iter()
            .try_fold(Self::ROOT, |node, token| self.child(node, token.as_ref()))
    }

    /// True iff `seq` is a terminal root path.
    pub fn contains<S: AsRef<str>>(&self, seq: &[S]) -> bool {
        self.walk(seq)
            .is_some_and(|node| self.nodes[node as usize].terminal)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.vocab[id as usize]
    }

    pub fn token_id(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn path_count(&self) -> usize {
        self.path_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path_count == 0
    }

    /// All terminal paths in lexicographic order.
    pub fn paths(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.path_count);
        let mut prefix = Vec::new();
        self.collect_paths(Self::ROOT, &mut prefix, &mut out);
        out
    }

    fn collect_paths(&self, node: NodeId, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        let n = &self.nodes[node as usize];
        if n.terminal {
            out.push(prefix.clone());
        }
        for &(token, child) in &n.children {
            prefix.push(self.vocab[token as usize].clone());
            self.collect_paths(child, prefix, out);
            prefix.pop();
        }
    }

    /// Binary snapshot: magic, version, vocabulary, path count, node table.
    /// All integers little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.vocab.len() as u32).to_le_bytes());
        for token in &self.vocab {
            out.extend_from_slice(&(token.len() as u32).to_le_bytes());
            out.extend_from_slice(token.as_bytes());
        }
        out.extend_from_slice(&(self.path_count as u64).to_le_bytes());
        out.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        for node in &self.nodes {
            out.push(node.terminal as u8);
            out.extend_from_slice(&(node.children.len() as u32).to_le_bytes());
            for &(token, child) in &node.children {
                out.extend_from_slice(&token.to_le_bytes());
                out.extend_from_slice(&child.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Snapshot("not a trie snapshot".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported trie version {version}")));
        }
        let vocab_len = r.u32()? as usize;
        let mut vocab = Vec::with_capacity(vocab_len.min(bytes.len()));
        for _ in 0..vocab_len {
            let len = r.u32()? as usize;
            let token = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Snapshot("token is not UTF-8".into()))?;
            if vocab.last().is_some_and(|prev: &String| prev.as_str() >= token) {
                return Err(Error::Snapshot("vocabulary not strictly sorted".into()));
            }
            vocab.push(token.to_string());
        }
        let path_count = r.u64()? as usize;
        let node_count = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(node_count.min(bytes.len()));
        for _ in 0..node_count {
            let terminal = match r.take(1)?[0] {
                0 => false,
                1 => true,
                b => return Err(Error::Snapshot(format!("bad terminal flag {b}"))),
            };
            let child_count = r.u32()? as usize;
            let mut children = Vec::with_capacity(child_count.min(bytes.len()));
            for _ in 0..child_count {
                let token = r.u32()?;
                let child = r.u32()?;
                if token as usize >= vocab_len || child as usize >= node_count {
                    return Err(Error::Snapshot("edge out of range".into()));
                }
                if children.last().is_some_and(|&(prev, _)| prev >= token) {
                    return Err(Error::Snapshot("children not strictly sorted".into()));
                }
                children.push((token, child));
            }
            nodes.push(Node { children, terminal });
        }
        if r.pos != bytes.len() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        if nodes.is_empty() {
            return Err(Error::Snapshot("missing root".into()));
        }
        if nodes.iter().filter(|n| n.terminal).count() != path_count {
            return Err(Error::Snapshot("path count mismatch".into()));
        }
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as TokenId))
            .collect();
        Ok(Self {
            nodes,
            vocab,
            index,
            path_count,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Snapshot("truncated".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
