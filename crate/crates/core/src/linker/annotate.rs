//! Shallow English annotation: tokenization, suffix-rule lemmatization with
//! an exception lexicon, part-of-speech tagging by lexicon lookup with a
//! noun default, and the `ving` surface feature.

use std::collections::BTreeSet;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Num,
    Other,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
    pub features: BTreeSet<String>,
    /// byte range in the original question
    pub span: (usize, usize),
}

impl AnnotatedToken {
    pub fn has_feature(&self, f: &str) -> bool {
        self.features.contains(f)
    }
}

/// Irregular forms the suffix rules would get wrong.
const EXCEPTIONS: &[(&str, &str)] = &[
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("does", "do"),
    ("did", "do"),
    ("made", "make"),
    ("making", "make"),
    ("bought", "buy"),
    ("sold", "sell"),
    ("selling", "sell"),
    ("paid", "pay"),
    ("higher", "high"),
    ("highest", "high"),
    ("lower", "low"),
    ("lowest", "low"),
    ("larger", "large"),
    ("largest", "large"),
    ("smaller", "small"),
    ("smallest", "small"),
    ("more", "many"),
    ("most", "many"),
    ("less", "little"),
    ("least", "little"),
    ("better", "good"),
    ("best", "good"),
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "person"),
    ("placing", "place"),
    ("pricing", "price"),
    ("stored", "store"),
    ("storing", "store"),
];

const VERBS: &[&str] = &[
    "have", "be", "do", "make", "place", "contain", "belong", "own", "sell", "buy", "work",
    "manage", "supply", "store", "record", "include", "earn", "receive", "cost", "show", "list",
    "exceed", "report", "pay", "hold", "cover", "employ", "hire", "assign", "bill",
];

const ADJECTIVES: &[&str] = &[
    "many", "high", "low", "large", "small", "little", "good", "average", "total", "open",
    "outstanding", "new", "distinct", "expensive", "cheap",
];

const ADVERBS: &[&str] = &["how", "very", "only", "also"];

fn exception(word: &str) -> Option<&'static str> {
    EXCEPTIONS.iter().find(|(w, _)| *w == word).map(|(_, l)| *l)
}

fn known_verb(word: &str) -> bool {
    VERBS.contains(&word)
}

/// Suffix-stripping lemmatizer. Exceptions first, then the plural/verbal
/// suffix rules with e-restoration against the verb lexicon.
pub fn lemmatize(surface: &str) -> String {
    let word = surface.to_ascii_lowercase();
    if let Some(lemma) = exception(&word) {
        return lemma.to_string();
    }
    if word.len() > 4 && word.ends_with("ies") {
        return format!("{}y", &word[..word.len() - 3]);
    }
    if word.len() > 4 && (word.ends_with("ches") || word.ends_with("shes") || word.ends_with("sses") || word.ends_with("xes"))
    {
        return word[..word.len() - 2].to_string();
    }
    if word.len() > 5 && word.ends_with("ing") {
        let stem = &word[..word.len() - 3];
        let restored = format!("{stem}e");
        if known_verb(&restored) {
            return restored;
        }
        if known_verb(stem) {
            return stem.to_string();
        }
        return stem.to_string();
    }
    if word.len() > 4 && word.ends_with("ed") {
        let stem = &word[..word.len() - 2];
        let restored = format!("{stem}e");
        if known_verb(&restored) {
            return restored;
        }
        return stem.to_string();
    }
    if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        return word[..word.len() - 1].to_string();
    }
    word
}

fn pos_of(lemma: &str, surface: &str) -> Pos {
    if surface.chars().all(|c| c.is_ascii_digit() || c == '.') && surface.chars().any(|c| c.is_ascii_digit()) {
        return Pos::Num;
    }
    if known_verb(lemma) {
        return Pos::Verb;
    }
    if ADJECTIVES.contains(&lemma) {
        return Pos::Adj;
    }
    if ADVERBS.contains(&lemma) {
        return Pos::Adv;
    }
    if matches!(lemma, "of" | "the" | "a" | "an" | "in" | "on" | "for" | "to" | "than" | "with" | "at" | "by" | "or" | "and" | "all" | "any" | "each" | "which" | "what" | "who" | "whose" | "where" | "when") {
        return Pos::Other;
    }
    Pos::Noun
}

/// Annotate a question. Token spans are non-overlapping and ordered.
pub fn annotate(question: &str) -> Vec<AnnotatedToken> {
    let mut tokens = Vec::new();
    let bytes = question.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_alphanumeric() {
            let start = i;
            let numeric = c.is_ascii_digit();
            while i < bytes.len() {
                let c = bytes[i] as char;
                let more = if numeric {
                    c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_digit())
                } else {
                    c.is_ascii_alphanumeric() || c == '_' || c == '\''
                };
                if !more {
                    break;
                }
                i += 1;
            }
            let surface = &question[start..i];
            let lemma = if numeric { surface.to_string() } else { lemmatize(surface) };
            let mut features = BTreeSet::new();
            if surface.to_ascii_lowercase().ends_with("ing") {
                features.insert("ving".to_string());
            }
            tokens.push(AnnotatedToken {
                surface: surface.to_string(),
                lemma: lemma.clone(),
                pos: pos_of(&lemma, surface),
                features,
                span: (start, i),
            });
        } else {
            i += 1;
        }
    }
    tokens
}
