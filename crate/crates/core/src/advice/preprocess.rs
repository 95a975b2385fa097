//! Lowercase, strip punctuation, split, drop stopwords.

/// Embedded stopword list: 121 common English function words, kept sorted
/// for binary search. Directional words (up, down, on, off, over, under,
/// out of the usual lists) are deliberately absent — they carry meaning in
/// this domain.
pub const STOPWORDS: [&str; 121] = [
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "cannot",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "until",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Normalizes a raw utterance into content tokens: lowercase, map whitespace
/// runs to single separators, strip every other character outside
/// `[a-z0-9 ]`, split, drop stopwords. Order is preserved; the result may be
/// empty.
pub fn preprocess(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch.is_whitespace() {
            cleaned.push(' ');
        } else {
            for lc in ch.to_lowercase() {
                if lc.is_ascii_lowercase() || lc.is_ascii_digit() {
                    cleaned.push(lc);
                }
            }
        }
    }
    cleaned
        .split_whitespace()
        .filter(|t| !is_stopword(t))
        .map(str::to_owned)
        .collect()
}
