//! Small bundled lexicon of 1-8 character lowercase words. Corpus words are
//! drawn from here and from uniformly random charset strings.

pub const WORDS: &[&str] = &[
    "the", "and", "for", "are", "but", "not", "you", "all", "any", "can", "had", "her", "was",
    "one", "our", "out", "day", "get", "has", "him", "his", "how", "man", "new", "now", "old",
    "see", "two", "way", "who", "boy", "did", "its", "let", "put", "say", "she", "too", "use",
    "that", "with", "have", "this", "will", "your", "from", "they", "know", "want", "been",
    "good", "much", "some", "time", "very", "when", "come", "here", "just", "like", "long",
    "make", "many", "more", "only", "over", "such", "take", "than", "them", "well", "were",
    "what", "word", "work", "year", "back", "call", "came", "each", "even", "find", "give",
    "hand", "high", "keep", "last", "left", "life", "line", "look", "made", "most", "move",
    "must", "name", "need", "next", "open", "part", "play", "read", "said", "same", "seem",
    "show", "side", "tell", "turn", "used", "want", "ways", "week", "went", "about", "after",
    "again", "below", "could", "every", "first", "found", "great", "house", "large", "learn",
    "never", "other", "place", "plant", "point", "right", "small", "sound", "spell", "still",
    "study", "their", "there", "these", "thing", "think", "three", "water", "where", "which",
    "world", "would", "write", "years", "always", "animal", "answer", "around", "before",
    "change", "follow", "happen", "letter", "little", "mother", "number", "people", "picture",
    "second", "should", "through", "together", "thought", "between", "country", "example",
    "because", "another", "against", "nothing", "morning", "problem", "science", "station",
    "street", "strong", "summer", "system", "table", "town", "tree", "under", "until", "voice",
    "walk", "wall", "warm", "watch", "wheel", "while", "white", "whole", "wind", "window",
    "winter", "wish", "wood", "yard", "yellow", "young", "zero", "able", "acid", "aged", "also",
    "area", "army", "away", "baby", "base", "bear", "beat", "bell", "belt", "best", "bill",
    "bird", "blow", "blue", "boat", "body", "bone", "book", "born", "both", "bowl", "bulk",
    "burn", "bush", "busy", "card", "care", "case", "cash", "cast", "cell", "chat", "chip",
    "city", "club", "coal", "coat", "code", "cold", "cool", "cope", "copy", "core", "cost",
    "crew", "crop", "dark", "data", "date", "dawn", "days", "dead", "deal", "dean", "dear",
    "debt", "deep", "deny", "desk", "dial", "diet", "disc", "disk", "does", "done", "door",
    "dose", "down", "draw", "drew", "drop", "drug", "dual", "duke", "dust", "duty", "earn",
    "ease", "east", "easy", "edge", "else", "even", "ever", "exit", "face", "fact", "fail",
    "fair", "fall", "farm", "fast", "fate", "fear", "feed", "feel", "feet", "fell", "felt",
    "file", "fill", "film", "fine", "fire", "firm", "fish", "five", "flat", "flow", "food",
    "foot", "ford", "form", "fort", "four", "free", "fuel", "full", "fund", "gain", "game",
    "gate", "gave", "gear", "gift", "girl", "glad", "goal", "goes", "gold", "golf", "gone",
    "grew", "grey", "grow", "gulf", "hair", "half", "hall", "hang", "hard", "harm", "hate",
    "head", "hear", "heat", "held", "hell", "help", "hero", "hold", "hole", "holy", "home",
    "hope", "host", "hour", "huge", "hung", "hunt", "hurt", "idea", "inch", "iron", "item",
    "join", "jump", "jury", "kept", "kind", "king", "knee", "knew", "lack", "lady", "laid",
    "lake", "land", "lane", "late", "lead", "less", "lift", "list", "lose", "loss", "lost",
    "love", "luck",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::charset::{Charset, MAX_WORD_LEN};

    #[test]
    fn lexicon_words_are_valid_labels() {
        let cs = Charset::standard();
        for w in WORDS {
            assert!(!w.is_empty() && w.len() <= MAX_WORD_LEN, "bad length: {w}");
            assert!(cs.validate_word(w).is_ok(), "invalid word: {w}");
        }
        assert!(WORDS.len() >= 200);
    }
}
