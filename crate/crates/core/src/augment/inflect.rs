//! Suffix-transfer verb inflection with an irregular-verb table.

use alloc::format;
use alloc::string::{String, ToString};

/// Surface form of a verb relative to its lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbForm {
    Base,
    ThirdSingular,
    Past,
    PastParticiple,
    Gerund,
}

/// `(base, past, past participle)`
const IRREGULAR: &[(&str, &str, &str)] = &[
    ("arise", "arose", "arisen"),
    ("bear", "bore", "borne"),
    ("beat", "beat", "beaten"),
    ("become", "became", "become"),
    ("begin", "began", "begun"),
    ("bend", "bent", "bent"),
    ("bet", "bet", "bet"),
    ("bind", "bound", "bound"),
    ("bite", "bit", "bitten"),
    ("blow", "blew", "blown"),
    ("break", "broke", "broken"),
    ("bring", "brought", "brought"),
    ("build", "built", "built"),
    ("buy", "bought", "bought"),
    ("catch", "caught", "caught"),
    ("choose", "chose", "chosen"),
    ("come", "came", "come"),
    ("cost", "cost", "cost"),
    ("cut", "cut", "cut"),
    ("deal", "dealt", "dealt"),
    ("dig", "dug", "dug"),
    ("do", "did", "done"),
    ("draw", "drew", "drawn"),
    ("drink", "drank", "drunk"),
    ("drive", "drove", "driven"),
    ("eat", "ate", "eaten"),
    ("fall", "fell", "fallen"),
    ("feed", "fed", "fed"),
    ("feel", "felt", "felt"),
    ("fight", "fought", "fought"),
    ("find", "found", "found"),
    ("flee", "fled", "fled"),
    ("fly", "flew", "flown"),
    ("forbid", "forbade", "forbidden"),
    ("forget", "forgot", "forgotten"),
    ("forgive", "forgave", "forgiven"),
    ("freeze", "froze", "frozen"),
    ("get", "got", "gotten"),
    ("give", "gave", "given"),
    ("go", "went", "gone"),
    ("grow", "grew", "grown"),
    ("have", "had", "had"),
    ("hear", "heard", "heard"),
    ("hide", "hid", "hidden"),
    ("hit", "hit", "hit"),
    ("hold", "held", "held"),
    ("hurt", "hurt", "hurt"),
    ("keep", "kept", "kept"),
    ("know", "knew", "known"),
    ("lay", "laid", "laid"),
    ("lead", "led", "led"),
    ("leave", "left", "left"),
    ("lend", "lent", "lent"),
    ("let", "let", "let"),
    ("lie", "lay", "lain"),
    ("light", "lit", "lit"),
    ("lose", "lost", "lost"),
    ("make", "made", "made"),
    ("mean", "meant", "meant"),
    ("meet", "met", "met"),
    ("mislead", "misled", "misled"),
    ("overcome", "overcame", "overcome"),
    ("pay", "paid", "paid"),
    ("put", "put", "put"),
    ("quit", "quit", "quit"),
    ("read", "read", "read"),
    ("ride", "rode", "ridden"),
    ("ring", "rang", "rung"),
    ("rise", "rose", "risen"),
    ("run", "ran", "run"),
    ("say", "said", "said"),
    ("see", "saw", "seen"),
    ("seek", "sought", "sought"),
    ("sell", "sold", "sold"),
    ("send", "sent", "sent"),
    ("set", "set", "set"),
    ("shake", "shook", "shaken"),
    ("shoot", "shot", "shot"),
    ("shrink", "shrank", "shrunk"),
    ("shut", "shut", "shut"),
    ("sing", "sang", "sung"),
    ("sink", "sank", "sunk"),
    ("sit", "sat", "sat"),
    ("slide", "slid", "slid"),
    ("speak", "spoke", "spoken"),
    ("spend", "spent", "spent"),
    ("split", "split", "split"),
    ("spread", "spread", "spread"),
    ("stand", "stood", "stood"),
    ("steal", "stole", "stolen"),
    ("stick", "stuck", "stuck"),
    ("strike", "struck", "struck"),
    ("swear", "swore", "sworn"),
    ("swim", "swam", "swum"),
    ("swing", "swung", "swung"),
    ("take", "took", "taken"),
    ("teach", "taught", "taught"),
    ("tear", "tore", "torn"),
    ("tell", "told", "told"),
    ("think", "thought", "thought"),
    ("throw", "threw", "thrown"),
    ("understand", "understood", "understood"),
    ("undo", "undid", "undone"),
    ("wake", "woke", "woken"),
    ("wear", "wore", "worn"),
    ("win", "won", "won"),
    ("withdraw", "withdrew", "withdrawn"),
    ("withhold", "withheld", "withheld"),
    ("write", "wrote", "written"),
];

/// Two-syllable verbs stressed on the last syllable, which double their
/// final consonant.
const DOUBLE_FINAL: &[&str] = &[
    "admit", "commit", "compel", "control", "expel", "occur", "omit", "patrol", "permit", "prefer", "propel",
    "rebel", "refer", "regret", "submit", "transfer",
];

fn irregular(base: &str) -> Option<(&'static str, &'static str)> {
    IRREGULAR.iter().find(|e| e.0 == base).map(|e| (e.1, e.2))
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn doubles_final(word: &str) -> bool {
    if DOUBLE_FINAL.contains(&word) {
        return true;
    }
    let b = word.as_bytes();
    if b.len() < 3 || !word.is_ascii() {
        return false;
    }
    let (c1, v, c2) = (b[b.len() - 3], b[b.len() - 2], b[b.len() - 1]);
    let cvc = !is_vowel(c1) && is_vowel(v) && !is_vowel(c2) && !matches!(c2, b'w' | b'x' | b'y');
    let vowel_groups = b.windows(2).filter(|w| !is_vowel(w[0]) && is_vowel(w[1])).count() + is_vowel(b[0]) as usize;
    cvc && vowel_groups == 1
}

fn ends_consonant_y(word: &str) -> bool {
    let b = word.as_bytes();
    b.len() >= 2 && b[b.len() - 1] == b'y' && !is_vowel(b[b.len() - 2])
}

fn regular_past(w: &str) -> String {
    if w.ends_with('e') {
        format!("{w}d")
    } else if ends_consonant_y(w) {
        format!("{}ied", &w[..w.len() - 1])
    } else if doubles_final(w) {
        format!("{w}{}ed", &w[w.len() - 1..])
    } else {
        format!("{w}ed")
    }
}

fn gerund(w: &str) -> String {
    if w == "be" || w == "see" || w == "flee" {
        format!("{w}ing")
    } else if let Some(stem) = w.strip_suffix("ie") {
        format!("{stem}ying")
    } else if w.ends_with('e') && !w.ends_with("ee") && !w.ends_with("oe") && !w.ends_with("ye") {
        format!("{}ing", &w[..w.len() - 1])
    } else if doubles_final(w) {
        format!("{w}{}ing", &w[w.len() - 1..])
    } else {
        format!("{w}ing")
    }
}

fn third_singular(w: &str) -> String {
    match w {
        "be" => "is".to_string(),
        "have" => "has".to_string(),
        _ if ends_consonant_y(w) => format!("{}ies", &w[..w.len() - 1]),
        _ if ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| w.ends_with(s)) => format!("{w}es"),
        _ => format!("{w}s"),
    }
}

fn inflect_word(w: &str, form: VerbForm) -> String {
    match form {
        VerbForm::Base => w.to_string(),
        VerbForm::ThirdSingular => third_singular(w),
        VerbForm::Gerund => gerund(w),
        VerbForm::Past => irregular(w).map_or_else(|| regular_past(w), |(p, _)| p.to_string()),
        VerbForm::PastParticiple => irregular(w).map_or_else(|| regular_past(w), |(_, pp)| pp.to_string()),
    }
}

/// Which form `form` is of `lemma` (both compared lowercase).
pub fn verb_form(lemma: &str, form: &str) -> VerbForm {
    let (lemma, form) = (lemma.to_lowercase(), form.to_lowercase());
    if form == lemma {
        return VerbForm::Base;
    }
    if let Some((past, participle)) = irregular(&lemma) {
        if form == past {
            return VerbForm::Past;
        }
        if form == participle {
            return VerbForm::PastParticiple;
        }
    }
    if form.ends_with("ing") {
        VerbForm::Gerund
    } else if form.ends_with("ed") {
        VerbForm::Past
    } else if form.ends_with('s') {
        VerbForm::ThirdSingular
    } else if form.ends_with("en") || form.ends_with('n') {
        VerbForm::PastParticiple
    } else {
        VerbForm::Base
    }
}

/// Inflects a lemma (multiword lemmas joined by `_` or spaces inflect their
/// first word) into `form`.
pub fn inflect(lemma: &str, form: VerbForm) -> String {
    let lemma = lemma.to_lowercase().replace('_', " ");
    match lemma.split_once(' ') {
        Some((head, rest)) => format!("{} {rest}", inflect_word(head, form)),
        None => inflect_word(&lemma, form),
    }
}
