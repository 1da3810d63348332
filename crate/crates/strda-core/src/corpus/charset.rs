use crate::error::{Error, Result};
use sha2::{Digest, Sha256};

/// The 36 recognizable symbols: `a`-`z` then `0`-`9`.
pub const SYMBOLS: [char; 36] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's',
    't', 'u', 'v', 'w', 'x', 'y', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9',
];

/// Class index of the end-of-sequence token.
pub const EOS: usize = 36;
/// Class index of the padding token.
pub const PAD: usize = 37;
/// Symbols plus EOS and PAD.
pub const NUM_CLASSES: usize = 38;
/// Longest label the pipeline accepts.
pub const MAX_WORD_LEN: usize = 8;
/// Output positions per image: up to 8 characters plus a terminal slot.
pub const SEQ_LEN: usize = 9;

/// The label alphabet, with encode/decode helpers and a content hash used to
/// guard checkpoints against alphabet drift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charset;

impl Charset {
    pub fn standard() -> Self {
        Charset
    }

    pub fn symbols(&self) -> &'static [char; 36] {
        &SYMBOLS
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        match c {
            'a'..='z' => Some(c as usize - 'a' as usize),
            '0'..='9' => Some(26 + c as usize - '0' as usize),
            _ => None,
        }
    }

    pub fn char_at(&self, idx: usize) -> Option<char> {
        SYMBOLS.get(idx).copied()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index_of(c).is_some()
    }

    /// Validate a label: non-empty, within length bound, all chars known.
    pub fn validate_word(&self, word: &str) -> Result<()> {
        let n = word.chars().count();
        if n == 0 || n > MAX_WORD_LEN {
            return Err(Error::invalid(format!(
                "label length {n} outside [1, {MAX_WORD_LEN}]: {word:?}"
            )));
        }
        if let Some(c) = word.chars().find(|&c| !self.contains(c)) {
            return Err(Error::invalid(format!(
                "character {c:?} not in charset: {word:?}"
            )));
        }
        Ok(())
    }

    /// Encode a label into `SEQ_LEN` class indices: characters, then EOS,
    /// then PAD to length. The empty string encodes as EOS followed by PADs.
    pub fn encode_label(&self, word: &str) -> Result<[usize; SEQ_LEN]> {
        let n = word.chars().count();
        if n > MAX_WORD_LEN {
            return Err(Error::invalid(format!(
                "label longer than {MAX_WORD_LEN}: {word:?}"
            )));
        }
        let mut out = [PAD; SEQ_LEN];
        for (i, c) in word.chars().enumerate() {
            out[i] = self
                .index_of(c)
                .ok_or_else(|| Error::invalid(format!("character {c:?} not in charset")))?;
        }
        out[n] = EOS;
        Ok(out)
    }

    /// Hex digest identifying the alphabet (symbols plus special tokens).
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        for c in SYMBOLS {
            h.update([c as u8]);
        }
        h.update(b"|EOS|PAD");
        let d = h.finalize();
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
