//! Dictionary-and-suffix POS tagger used when a corpus carries no tags.
//! Accuracy only affects error-type labels, never detection training.

use crate::corpus::Pos;

const DET: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "every", "each", "no",
    "my", "your", "his", "her", "its", "our", "their", "another", "either", "neither", "all",
    "both", "much", "many", "few", "several",
];
const PREP: &[&str] = &[
    "in", "on", "at", "of", "for", "with", "by", "from", "about", "into", "over", "under",
    "between", "through", "during", "without", "within", "among", "against", "upon", "after",
    "before", "behind", "below", "above", "across", "along", "around", "near", "towards",
    "toward", "onto", "off", "out", "per", "via", "despite", "except", "like", "since", "until",
    "till",
];
const PRON: &[&str] = &[
    "i", "me", "you", "he", "him", "she", "it", "we", "us", "they", "them", "myself",
    "yourself", "himself", "herself", "itself", "ourselves", "themselves", "who", "whom",
    "whose", "which", "what", "mine", "yours", "hers", "ours", "theirs", "someone", "anyone",
    "everyone", "nobody", "something", "anything", "everything", "nothing", "one",
];
const CONJ: &[&str] = &[
    "and", "or", "but", "nor", "so", "yet", "because", "although", "though", "if", "while",
    "whereas", "unless", "than", "whether", "when", "where", "as",
];
const PART: &[&str] = &["to", "not", "up", "down"];
const VERB: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "have", "has", "had", "do",
    "does", "did", "will", "would", "can", "could", "shall", "should", "may", "might", "must",
    "go", "goes", "went", "gone", "get", "got", "make", "made", "take", "took", "see", "saw",
    "seen", "know", "knew", "think", "thought", "come", "came", "give", "gave", "want", "say",
    "said", "tell", "told", "buy", "bought", "eat", "ate", "like", "need", "feel", "felt",
    "become", "became", "find", "found", "let", "put", "keep", "kept", "begin", "began",
];
const ADV: &[&str] = &[
    "very", "too", "also", "often", "always", "never", "sometimes", "here", "there", "now",
    "then", "just", "still", "already", "again", "soon", "even", "really", "quite", "almost",
    "only", "well", "however", "therefore", "yesterday", "today", "tomorrow", "ever",
];
const ADJ: &[&str] = &[
    "good", "bad", "big", "small", "new", "old", "great", "little", "long", "high", "young",
    "different", "important", "large", "happy", "sad", "other", "same", "last", "next", "own",
    "nice", "beautiful", "easy", "hard", "difficult",
];
const CONTRACTIONS: &[&str] = &["n't", "'ll", "'ve", "'re", "'m", "'s", "'d"];

/// Tags a single token from its surface form.
pub fn fallback_tag(token: &str) -> Pos {
    let lower = token.to_lowercase().replace('’', "'");
    let w = lower.as_str();
    if !w.is_empty() && w.chars().all(|c| c.is_ascii_punctuation() || "“”‘’«»…–—".contains(c)) {
        return if w == "'s" { Pos::Part } else { Pos::Punct };
    }
    if CONTRACTIONS.iter().any(|c| w.ends_with(c)) {
        return Pos::Contr;
    }
    if w.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return Pos::Num;
    }
    let table: [(&[&str], Pos); 8] = [
        (DET, Pos::Det),
        (PRON, Pos::Pron),
        (PART, Pos::Part),
        (PREP, Pos::Prep),
        (CONJ, Pos::Conj),
        (VERB, Pos::Verb),
        (ADV, Pos::Adv),
        (ADJ, Pos::Adj),
    ];
    for (words, pos) in table {
        if words.contains(&w) {
            return pos;
        }
    }
    let n = w.chars().count();
    let suffix = |s: &str| w.ends_with(s) && n > s.len() + 2;
    if suffix("ly") {
        Pos::Adv
    } else if suffix("ing") || suffix("ed") || suffix("ize") || suffix("ise") {
        Pos::Verb
    } else if ["ous", "ful", "able", "ible", "ive", "less", "ic", "al", "ish"]
        .iter()
        .any(|s| suffix(s))
    {
        Pos::Adj
    } else {
        Pos::Noun
    }
}

pub fn tag_tokens<S: AsRef<str>>(tokens: &[S]) -> Vec<Pos> {
    tokens.iter().map(|t| fallback_tag(t.as_ref())).collect()
}
