//! Text to sign plans: whole-word signs from a lexicon, fingerspelling for
//! everything else.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexiconMetadata {
    pub language: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignLexicon {
    pub metadata: LexiconMetadata,
    /// Normalized word to asset id.
    pub words: BTreeMap<String, String>,
    /// Letter `a`..`z` to asset id.
    pub letters: BTreeMap<char, String>,
}

fn is_letter(c: char) -> bool {
    c.is_ascii_lowercase()
}

impl SignLexicon {
    /// A lexicon with no words and `letters/<c>.png` for every letter.
    pub fn fingerspelling(language: &str) -> Self {
        Self {
            metadata: LexiconMetadata {
                language: language.to_string(),
                version: "1".into(),
            },
            words: BTreeMap::new(),
            letters: ('a'..='z').map(|c| (c, format!("letters/{c}.png"))).collect(),
        }
    }

    pub fn with_word(mut self, word: &str, asset: &str) -> Self {
        self.words.insert(word.to_string(), asset.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        for c in 'a'..='z' {
            if !self.letters.contains_key(&c) {
                return Err(Error::MissingLetter(c));
            }
        }
        if let Some(c) = self.letters.keys().find(|c| !is_letter(**c)) {
            return Err(Error::Decode {
                field: "letters".into(),
                detail: format!("key `{c}` is not a letter a-z"),
            });
        }
        if let Some(w) = self.words.keys().find(|w| w.is_empty() || !w.chars().all(is_letter)) {
            return Err(Error::Decode {
                field: "words".into(),
                detail: format!("key `{w}` is not normalized (lowercase letters a-z only)"),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lex: SignLexicon = serde_json::from_str(text)?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lexicon serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// A character removed during normalization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub character: char,
    /// The whitespace-separated token it came from, as typed.
    pub source_token: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalized {
    pub tokens: Vec<String>,
    /// Source token for each entry of `tokens`.
    pub sources: Vec<String>,
    pub warnings: Vec<Warning>,
}

/// Lowercases, splits on whitespace and keeps only the letters a-z of each
/// token; every dropped character is reported.
pub fn normalize(text: &str) -> Normalized {
    let mut out = Normalized::default();
    for raw in text.split_whitespace() {
        let mut token = String::new();
        for c in raw.chars().flat_map(char::to_lowercase) {
            if is_letter(c) {
                token.push(c);
            } else {
                out.warnings.push(Warning {
                    character: c,
                    source_token: raw.to_string(),
                });
            }
        }
        if !token.is_empty() {
            out.tokens.push(token);
            out.sources.push(raw.to_string());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Word,
    Letter,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanItem {
    pub kind: ItemKind,
    /// Index of the normalized token this item renders.
    pub position: usize,
    pub token: String,
    pub asset_id: String,
    pub source_token: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPlan {
    pub items: Vec<PlanItem>,
    pub warnings: Vec<Warning>,
}

pub fn translate(text: &str, lexicon: &SignLexicon) -> Result<SignPlan> {
    let norm = normalize(text);
    let mut items = Vec::new();
    for (position, (token, source)) in norm.tokens.iter().zip(&norm.sources).enumerate() {
        if let Some(asset) = lexicon.words.get(token) {
            items.push(PlanItem {
                kind: ItemKind::Word,
                position,
                token: token.clone(),
                asset_id: asset.clone(),
                source_token: source.clone(),
            });
            continue;
        }
        for c in token.chars() {
            let asset = lexicon.letters.get(&c).ok_or(Error::MissingLetter(c))?;
            items.push(PlanItem {
                kind: ItemKind::Letter,
                position,
                token: c.to_string(),
                asset_id: asset.clone(),
                source_token: source.clone(),
            });
        }
    }
    Ok(SignPlan {
        items,
        warnings: norm.warnings,
    })
}

impl SignPlan {
    /// Rebuilds the normalized tokens: word items whole, the letter items
    /// of one token joined.
    pub fn tokens(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut last = None;
        for item in &self.items {
            if last == Some(item.position) {
                out.last_mut().expect("open token").push_str(&item.token);
            } else {
                out.push(item.token.clone());
            }
            last = Some(item.position);
        }
        out
    }

    pub fn render_listing(&self) -> String {
        let mut out = String::new();
        for (i, item) in self.items.iter().enumerate() {
            let kind = match item.kind {
                ItemKind::Word => "word",
                ItemKind::Letter => "letter",
            };
            let _ = writeln!(out, "{}\t{kind}\t{}\t{}\t{}", i + 1, item.token, item.asset_id, item.source_token);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: skipped {:?} in {:?}", w.character, w.source_token);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> SignLexicon {
        SignLexicon::fingerspelling("isl").with_word("hello", "words/hello.mp4")
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("Hello, WORLD").tokens, ["hello", "world"]);
        assert!(normalize("").tokens.is_empty());
        let n = normalize("it's 2023");
        assert_eq!(n.tokens, ["its"]);
        let dropped: String = n.warnings.iter().map(|w| w.character).collect();
        assert_eq!(dropped, "'2023");
    }

    #[test]
    fn translate_examples() {
        let plan = translate("hello", &lex()).unwrap();
        assert_eq!(plan.items.len(), 1);
        assert_eq!(plan.items[0].kind, ItemKind::Word);
        let plan = translate("zzz", &lex()).unwrap();
        assert!(plan.items.iter().all(|i| i.kind == ItemKind::Letter && i.token == "z"));
        assert_eq!(plan.items.len(), 3);
        let plan = translate("hello zzz", &lex()).unwrap();
        let kinds: Vec<_> = plan.items.iter().map(|i| (i.kind, i.token.as_str())).collect();
        assert_eq!(
            kinds,
            [
                (ItemKind::Word, "hello"),
                (ItemKind::Letter, "z"),
                (ItemKind::Letter, "z"),
                (ItemKind::Letter, "z")
            ]
        );
    }

    #[test]
    fn missing_letter_named() {
        let mut l = lex();
        l.letters.remove(&'q');
        assert!(matches!(translate("quiz", &l), Err(Error::MissingLetter('q'))));
        assert!(matches!(SignLexicon::from_json(&l.to_json()), Err(Error::MissingLetter('q'))));
    }

    #[test]
    fn lexicon_json_round_trip() {
        let l = lex();
        assert_eq!(SignLexicon::from_json(&l.to_json()).unwrap(), l);
        let bad = l.clone().with_word("Hello!", "x");
        assert!(SignLexicon::from_json(&bad.to_json()).is_err());
    }

    #[test]
    fn adjacent_spelled_tokens_stay_apart() {
        let plan = translate("ab ab", &lex()).unwrap();
        assert_eq!(plan.tokens(), ["ab", "ab"]);
    }
}
