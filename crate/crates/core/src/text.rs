//! Tokenization, lexicon-driven POS tagging and the bag-of-core-words (BCW)
//! transform.
//!
//! A raw string goes through three steps:
//!
//! 1. [`tokenize`]: NFKC normalization, lowercasing, then greedy
//!    longest-match segmentation against a [`PosLexicon`].
//! 2. [`core_words`]: drop tokens whose tag is in the redundant set
//!    (interjections, auxiliary words, punctuation, modal particles).
//! 3. [`canonicalize`]: sort the surviving tokens, except tokens of an ordered
//!    category (locations, diseases, ...) that occurs at least twice; those
//!    keep their relative order.
//!
//! The resulting [`CanonicalForm`] is the join key between queries and
//! keywords, and [`InverseTable`] maps it back to the original keywords.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Separator between free tokens in a rendered key.
pub const FREE_SEPARATOR: char = '|';
/// Separator between the free and ordered parts of a rendered key. It is also
/// used as a token of its own inside trie sequences.
pub const ORDERED_SEPARATOR: char = '‖';
pub const ORDERED_SEPARATOR_TOKEN: &str = "‖";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosTag {
    Interjection,
    Auxiliary,
    Punct,
    Modal,
    Content,
    /// A token belonging to an ordered category such as `LOCATION`.
    Ordered(String),
}

impl PosTag {
    /// The four redundant classes removed by [`core_words`].
    pub fn default_redundant() -> BTreeSet<PosTag> {
        [
            PosTag::Interjection,
            PosTag::Auxiliary,
            PosTag::Punct,
            PosTag::Modal,
        ]
        .into_iter()
        .collect()
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosTag::Interjection => f.write_str("INTERJECTION"),
            PosTag::Auxiliary => f.write_str("AUXILIARY"),
            PosTag::Punct => f.write_str("PUNCT"),
            PosTag::Modal => f.write_str("MODAL"),
            PosTag::Content => f.write_str("CONTENT"),
            PosTag::Ordered(category) => write!(f, "ORDERED:{category}"),
        }
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "INTERJECTION" => Ok(PosTag::Interjection),
            "AUXILIARY" => Ok(PosTag::Auxiliary),
            "PUNCT" => Ok(PosTag::Punct),
            "MODAL" => Ok(PosTag::Modal),
            "CONTENT" => Ok(PosTag::Content),
            other => match other.strip_prefix("ORDERED:") {
                Some(category) if !category.is_empty() => {
                    Ok(PosTag::Ordered(category.to_string()))
                }
                _ => Err(format!("unknown POS tag {other:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: PosTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub raw: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// NFKC normalization followed by lowercasing.
pub fn normalize(raw: &str) -> String {
    raw.nfkc().flat_map(char::to_lowercase).collect()
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF   // kana
        | 0x3100..=0x312F // bopomofo
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xAC00..=0xD7AF // hangul
        | 0xF900..=0xFAFF
        | 0x20000..=0x2FA1F)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() && !is_cjk(c)
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || c == FREE_SEPARATOR || c == ORDERED_SEPARATOR
}

fn check_surface(surface: &str, line: usize) -> Result<()> {
    if surface.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty surface".into(),
        });
    }
    if surface.contains(FREE_SEPARATOR) || surface.contains(ORDERED_SEPARATOR) {
        return Err(Error::ReservedSeparator {
            line,
            surface: surface.to_string(),
        });
    }
    if surface.chars().any(char::is_whitespace) {
        return Err(Error::Parse {
            line,
            message: format!("surface {surface:?} contains whitespace"),
        });
    }
    Ok(())
}

/// Iterates `(line number, fields)` over a TSV text, skipping blank lines and
/// `#` comments.
fn tsv_records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

/// Surface → POS tag dictionary used for segmentation and tagging.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: HashMap<String, PosTag>,
    longest: usize,
}

impl PosLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `surface<TAB>TAG` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lexicon = Self::new();
        for (line, fields) in tsv_records(text) {
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 fields, found {}", fields.len()),
                });
            }
            let tag = fields[1]
                .trim()
                .parse::<PosTag>()
                .map_err(|message| Error::Parse { line, message })?;
            lexicon.insert_checked(fields[0], tag, line)?;
        }
        Ok(lexicon)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, surface: &str, tag: PosTag) -> Result<()> {
        self.insert_checked(surface, tag, 0)
    }

    fn insert_checked(&mut self, surface: &str, tag: PosTag, line: usize) -> Result<()> {
        let surface = normalize(surface.trim());
        check_surface(&surface, line)?;
        self.longest = self.longest.max(surface.chars().count());
        self.entries.insert(surface, tag);
        Ok(())
    }

    pub fn get(&self, surface: &str) -> Option<&PosTag> {
        self.entries.get(surface)
    }

    pub fn longest_entry(&self) -> usize {
        self.longest
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<'a> FromIterator<(&'a str, PosTag)> for PosLexicon {
    /// Panics on surfaces that [`PosLexicon::insert`] would reject.
    fn from_iter<I: IntoIterator<Item = (&'a str, PosTag)>>(iter: I) -> Self {
        let mut lexicon = Self::new();
        for (surface, tag) in iter {
            lexicon
                .insert(surface, tag)
                .unwrap_or_else(|e| panic!("invalid lexicon entry {surface:?}: {e}"));
        }
        lexicon
    }
}

/// Surface → ordered category (`LOCATION`, `DISEASE`, ...).
#[derive(Debug, Clone, Default)]
pub struct OrderedLexicon {
    entries: HashMap<String, String>,
}

impl OrderedLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `surface<TAB>CATEGORY` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lexicon = Self::new();
        for (line, fields) in tsv_records(text) {
            if fields.len() != 2 || fields[1].trim().is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "expected surface<TAB>CATEGORY".into(),
                });
            }
            lexicon.insert_checked(fields[0], fields[1].trim(), line)?;
        }
        Ok(lexicon)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, surface: &str, category: &str) -> Result<()> {
        self.insert_checked(surface, category, 0)
    }

    fn insert_checked(&mut self, surface: &str, category: &str, line: usize) -> Result<()> {
        let surface = normalize(surface.trim());
        check_surface(&surface, line)?;
        self.entries.insert(surface, category.to_string());
        Ok(())
    }

    pub fn category(&self, surface: &str) -> Option<&str> {
        self.entries.get(surface).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(s, c)| (s.as_str(), c.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for OrderedLexicon {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut lexicon = Self::new();
        for (surface, category) in iter {
            lexicon
                .insert(surface, category)
                .unwrap_or_else(|e| panic!("invalid lexicon entry {surface:?}: {e}"));
        }
        lexicon
    }
}

/// Greedy longest-match segmentation.
///
/// Lexicon entries are tried first at every position; a match that ends
/// inside a Latin/digit word is rejected. Unmatched CJK codepoints become
/// single-codepoint `CONTENT` tokens, unmatched Latin/digit runs become one
/// `CONTENT` token each, and any other non-space character is a `PUNCT`
/// token. The reserved key separators are treated as whitespace.
pub fn tokenize(raw: &str, lexicon: &PosLexicon) -> Sentence {
    let text = normalize(raw);
    let chars: Vec<char> = text.chars().collect();
    let mut offsets: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    offsets.push(text.len());

    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_separator(c) {
            i += 1;
            continue;
        }

        let max_len = lexicon.longest_entry().min(chars.len() - i);
        let matched = (1..=max_len).rev().find_map(|len| {
            let end = i + len;
            if end < chars.len() && is_word_char(chars[end - 1]) && is_word_char(chars[end]) {
                return None;
            }
            let candidate = &text[offsets[i]..offsets[end]];
            lexicon.get(candidate).map(|tag| (end, tag))
        });
        if let Some((end, tag)) = matched {
            tokens.push(Token {
                surface: text[offsets[i]..offsets[end]].to_string(),
                pos: tag.clone(),
            });
            i = end;
            continue;
        }

        let (end, pos) = if is_cjk(c) {
            (i + 1, PosTag::Content)
        } else if is_word_char(c) {
            let mut end = i + 1;
            while end < chars.len() && is_word_char(chars[end]) {
                end += 1;
            }
            (end, PosTag::Content)
        } else {
            (i + 1, PosTag::Punct)
        };
        tokens.push(Token {
            surface: text[offsets[i]..offsets[end]].to_string(),
            pos,
        });
        i = end;
    }

    Sentence {
        raw: raw.to_string(),
        tokens,
    }
}

/// Removes every token whose tag is in `redundant`, keeping survivor order.
pub fn core_words(sentence: &Sentence, redundant: &BTreeSet<PosTag>) -> Sentence {
    Sentence {
        raw: sentence.raw.clone(),
        tokens: sentence
            .tokens
            .iter()
            .filter(|t| !redundant.contains(&t.pos))
            .cloned()
            .collect(),
    }
}

/// The BCW key: sorted free tokens plus order-preserved exempt tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CanonicalForm {
    free: Vec<String>,
    ordered: Vec<String>,
}

impl CanonicalForm {
    /// Builds a form from unsorted free tokens and ordered tokens.
    pub fn new(mut free: Vec<String>, ordered: Vec<String>) -> Self {
        free.sort();
        Self { free, ordered }
    }

    /// A form that keeps every token in its given order. Used by strategies
    /// that do not reorder.
    pub fn verbatim(tokens: Vec<String>) -> Self {
        Self {
            free: Vec::new(),
            ordered: tokens,
        }
    }

    pub fn free(&self) -> &[String] {
        &self.free
    }

    pub fn ordered(&self) -> &[String] {
        &self.ordered
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty() && self.ordered.is_empty()
    }

    /// All tokens: free first, then ordered.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.free.iter().chain(&self.ordered).map(String::as_str)
    }

    pub fn token_count(&self) -> usize {
        self.free.len() + self.ordered.len()
    }

    /// `free` joined by `|`; when ordered tokens exist, followed by `‖` and
    /// `ordered` joined by `|`.
    pub fn rendered(&self) -> String {
        let mut key = self.free.join("|");
        if !self.ordered.is_empty() {
            key.push(ORDERED_SEPARATOR);
            key.push_str(&self.ordered.join("|"));
        }
        key
    }

    /// Token sequence for the trie: free tokens, then the `‖` token and the
    /// ordered tokens when there are any.
    pub fn to_sequence(&self) -> Vec<String> {
        let mut seq = self.free.clone();
        if !self.ordered.is_empty() {
            seq.push(ORDERED_SEPARATOR_TOKEN.to_string());
            seq.extend(self.ordered.iter().cloned());
        }
        seq
    }

    /// Inverse of [`CanonicalForm::to_sequence`].
    pub fn from_sequence<S: AsRef<str>>(seq: &[S]) -> Self {
        match seq.iter().position(|t| t.as_ref() == ORDERED_SEPARATOR_TOKEN) {
            Some(split) => Self::new(
                seq[..split].iter().map(|t| t.as_ref().to_string()).collect(),
                seq[split + 1..].iter().map(|t| t.as_ref().to_string()).collect(),
            ),
            None => Self::new(seq.iter().map(|t| t.as_ref().to_string()).collect(), Vec::new()),
        }
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered())
    }
}

fn ordered_category<'a>(token: &'a Token, ordered: &'a OrderedLexicon) -> Option<&'a str> {
    ordered
        .category(&token.surface)
        .or(match &token.pos {
            PosTag::Ordered(category) => Some(category.as_str()),
            _ => None,
        })
}

/// Splits a core-word sentence into sorted free tokens and exempt ordered
/// tokens. A category is exempt only when at least two of its tokens occur.
pub fn canonicalize(sentence: &Sentence, ordered: &OrderedLexicon) -> CanonicalForm {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for token in &sentence.tokens {
        if let Some(category) = ordered_category(token, ordered) {
            *counts.entry(category).or_default() += 1;
        }
    }
    let mut free = Vec::new();
    let mut kept = Vec::new();
    for token in &sentence.tokens {
        let exempt = ordered_category(token, ordered).is_some_and(|c| counts[c] >= 2);
        if exempt {
            kept.push(token.surface.clone());
        } else {
            free.push(token.surface.clone());
        }
    }
    CanonicalForm::new(free, kept)
}

/// `tokenize → core_words → canonicalize` with the default redundant tags.
pub fn bcw(raw: &str, lexicon: &PosLexicon, ordered: &OrderedLexicon) -> CanonicalForm {
    let sentence = tokenize(raw, lexicon);
    canonicalize(&core_words(&sentence, &PosTag::default_redundant()), ordered)
}

/// Lexicons plus the redundant tag set, bundled for repeated use.
///
/// Ordered-category entries are merged into the segmentation lexicon so that
/// multi-character entities segment as one token.
#[derive(Debug, Clone, Default)]
pub struct Canonicalizer {
    lexicon: PosLexicon,
    ordered: OrderedLexicon,
    redundant: BTreeSet<PosTag>,
}

impl Canonicalizer {
    pub fn new(lexicon: PosLexicon, ordered: OrderedLexicon) -> Self {
        let mut lexicon = lexicon;
        for (surface, category) in ordered.iter() {
            if lexicon.get(surface).is_none() {
                // surfaces were validated on insertion into `ordered`
                let _ = lexicon.insert(surface, PosTag::Ordered(category.to_string()));
            }
        }
        Self {
            lexicon,
            ordered,
            redundant: PosTag::default_redundant(),
        }
    }

    pub fn with_redundant(mut self, redundant: BTreeSet<PosTag>) -> Self {
        self.redundant = redundant;
        self
    }

    pub fn lexicon(&self) -> &PosLexicon {
        &self.lexicon
    }

    pub fn ordered(&self) -> &OrderedLexicon {
        &self.ordered
    }

    pub fn tokenize(&self, raw: &str) -> Sentence {
        tokenize(raw, &self.lexicon)
    }

    pub fn core_words(&self, raw: &str) -> Sentence {
        core_words(&self.tokenize(raw), &self.redundant)
    }

    pub fn bcw(&self, raw: &str) -> CanonicalForm {
        canonicalize(&self.core_words(raw), &self.ordered)
    }

    pub fn build_inverse_table<S: AsRef<str>>(&self, keywords: &[S]) -> InverseTable {
        let mut table = InverseTable::new();
        for keyword in keywords {
            let keyword = keyword.as_ref();
            table.insert(self.bcw(keyword).rendered(), keyword);
        }
        table
    }

    /// Applies a retrieval strategy's transform to `raw`.
    pub fn transform(&self, strategy: Strategy, raw: &str) -> Transformed {
        match strategy {
            Strategy::Base => {
                let tokens = self.tokenize(raw).surfaces();
                Transformed {
                    form: CanonicalForm::verbatim(tokens.clone()),
                    sequence: tokens,
                }
            }
            Strategy::Cw => {
                let tokens = self.core_words(raw).surfaces();
                Transformed {
                    form: CanonicalForm::verbatim(tokens.clone()),
                    sequence: tokens,
                }
            }
            Strategy::Bcw => {
                let form = self.bcw(raw);
                Transformed {
                    sequence: form.to_sequence(),
                    form,
                }
            }
        }
    }
}

/// Which transform is applied to both sides before training and decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Tokenization only.
    Base,
    /// Redundant-POS removal, order kept.
    Cw,
    /// Full bag-of-core-words.
    Bcw,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Base, Strategy::Cw, Strategy::Bcw];

    /// Recovers the form a decoded trie sequence stands for.
    pub fn form_from_sequence<S: AsRef<str>>(self, seq: &[S]) -> CanonicalForm {
        match self {
            Strategy::Base | Strategy::Cw => {
                CanonicalForm::verbatim(seq.iter().map(|t| t.as_ref().to_string()).collect())
            }
            Strategy::Bcw => CanonicalForm::from_sequence(seq),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Base => "BASE",
            Strategy::Cw => "CW",
            Strategy::Bcw => "BCW",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().trim_end_matches("-M") {
            "BASE" => Ok(Strategy::Base),
            "CW" => Ok(Strategy::Cw),
            "BCW" => Ok(Strategy::Bcw),
            _ => Err(format!("unknown strategy {s:?} (expected BASE, CW or BCW)")),
        }
    }
}

/// A strategy-transformed string: its join key and its trie path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transformed {
    pub form: CanonicalForm,
    pub sequence: Vec<String>,
}

impl Transformed {
    pub fn key(&self) -> String {
        self.form.rendered()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// Rendered key → original keyword strings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InverseTable {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl InverseTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: String, keyword: &str) {
        self.map.entry(key).or_default().insert(keyword.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.map.get(key)
    }

    /// Number of distinct keys.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// `key<TAB>keyword` lines, sorted by key then keyword.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (key, keywords) in &self.map {
            for keyword in keywords {
                out.push_str(key);
                out.push('\t');
                out.push_str(keyword);
                out.push('\n');
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut table = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (key, keyword) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected key<TAB>keyword".into(),
            })?;
            table.insert(key.to_string(), keyword);
        }
        Ok(table)
    }
}

/// Builds the table for `keywords` under [`bcw`].
pub fn build_inverse_table<S: AsRef<str>>(
    keywords: &[S],
    lexicon: &PosLexicon,
    ordered: &OrderedLexicon,
) -> InverseTable {
    Canonicalizer::new(lexicon.clone(), ordered.clone()).build_inverse_table(keywords)
}

/// Union of the keywords stored under each form; absent keys contribute
/// nothing.
pub fn inverse_bcw<'a, I>(forms: I, table: &InverseTable) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a CanonicalForm>,
{
    forms
        .into_iter()
        .filter_map(|f| table.get(&f.rendered()))
        .flat_map(|set| set.iter().cloned())
        .collect()
}
