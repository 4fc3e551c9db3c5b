//! Brute-force recognizer over small EBNF grammars, kept independent of the
//! engine: grammars are generated here as plain data, rendered to notation
//! for the engine, and recognized here by memoized top-down search.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum Atom {
    Lit(char),
    Rule(usize),
    Group(Vec<Vec<Item>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quant {
    One,
    Opt,
    Star,
    Plus,
}

#[derive(Debug, Clone)]
pub struct Item {
    pub atom: Atom,
    pub quant: Quant,
}

/// Rule 0 is `start`; each rule is a list of alternatives.
#[derive(Debug, Clone)]
pub struct SmallGrammar {
    pub rules: Vec<Vec<Vec<Item>>>,
}

fn rule_name(r: usize) -> String {
    if r == 0 {
        "start".to_string()
    } else {
        format!("r{r}")
    }
}

fn render_seq(seq: &[Item]) -> String {
    seq.iter()
        .map(|it| {
            let a = match &it.atom {
                Atom::Lit(c) => format!("\"{c}\""),
                Atom::Rule(r) => rule_name(*r),
                Atom::Group(alts) => format!(
                    "({})",
                    alts.iter()
                        .map(|s| render_seq(s))
                        .collect::<Vec<_>>()
                        .join(" | ")
                ),
            };
            let q = match it.quant {
                Quant::One => "",
                Quant::Opt => "?",
                Quant::Star => "*",
                Quant::Plus => "+",
            };
            format!("{a}{q}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl SmallGrammar {
    pub fn to_notation(&self) -> String {
        let mut out = String::new();
        for (r, alts) in self.rules.iter().enumerate() {
            let body = alts
                .iter()
                .map(|s| render_seq(s))
                .collect::<Vec<_>>()
                .join("\n    | ");
            out.push_str(&format!("{}: {}\n", rule_name(r), body));
        }
        out
    }

    pub fn alphabet(&self) -> Vec<char> {
        fn walk(seq: &[Item], out: &mut Vec<char>) {
            for it in seq {
                match &it.atom {
                    Atom::Lit(c) => {
                        if !out.contains(c) {
                            out.push(*c)
                        }
                    }
                    Atom::Group(alts) => alts.iter().for_each(|s| walk(s, out)),
                    Atom::Rule(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        for alts in &self.rules {
            for s in alts {
                walk(s, &mut out);
            }
        }
        out.sort();
        out
    }

    pub fn production_count(&self) -> usize {
        self.rules.iter().map(|a| a.len()).sum()
    }

    /// Whether `input` is derivable from `start`.
    pub fn recognizes(&self, input: &str) -> bool {
        let chars: Vec<char> = input.chars().collect();
        let depth = self.rules.len() * (chars.len() + 2);
        let mut rec = Recognizer {
            g: self,
            s: &chars,
            memo: HashMap::new(),
        };
        rec.rule(0, 0, chars.len(), depth)
    }
}

struct Recognizer<'a> {
    g: &'a SmallGrammar,
    s: &'a [char],
    memo: HashMap<(usize, usize, usize, usize), bool>,
}

impl Recognizer<'_> {
    // A minimal derivation never repeats a (rule, span) pair on a root-to-leaf
    // path, and nested spans shrink at most n times, so rules * (n + 2) rule
    // expansions always suffice.
    fn rule(&mut self, r: usize, i: usize, j: usize, depth: usize) -> bool {
        if depth == 0 {
            return false;
        }
        if let Some(&v) = self.memo.get(&(r, i, j, depth)) {
            return v;
        }
        let alts = self.g.rules[r].clone();
        let v = alts.iter().any(|seq| self.seq(seq, i, j, depth - 1));
        self.memo.insert((r, i, j, depth), v);
        v
    }

    fn seq(&mut self, items: &[Item], i: usize, j: usize, depth: usize) -> bool {
        let Some((first, rest)) = items.split_first() else {
            return i == j;
        };
        (i..=j).any(|k| self.item(first, i, k, depth) && self.seq(rest, k, j, depth))
    }

    fn item(&mut self, it: &Item, i: usize, j: usize, depth: usize) -> bool {
        match it.quant {
            Quant::One => self.atom(&it.atom, i, j, depth),
            Quant::Opt => i == j || self.atom(&it.atom, i, j, depth),
            Quant::Star => {
                i == j
                    || (i + 1..=j)
                        .any(|k| self.atom(&it.atom, i, k, depth) && self.item(it, k, j, depth))
            }
            Quant::Plus => {
                self.atom(&it.atom, i, j, depth)
                    || (i + 1..j)
                        .any(|k| self.atom(&it.atom, i, k, depth) && self.item(it, k, j, depth))
            }
        }
    }

    fn atom(&mut self, a: &Atom, i: usize, j: usize, depth: usize) -> bool {
        match a {
            Atom::Lit(c) => j == i + 1 && self.s[i] == *c,
            Atom::Rule(r) => self.rule(*r, i, j, depth),
            Atom::Group(alts) => alts.iter().any(|seq| self.seq(seq, i, j, depth)),
        }
    }
}

fn random_quant(rng: &mut ChaCha8Rng) -> Quant {
    match rng.gen_range(0..10) {
        0..=5 => Quant::One,
        6 => Quant::Opt,
        7 => Quant::Star,
        _ => Quant::Plus,
    }
}

fn random_seq(
    rng: &mut ChaCha8Rng,
    n_rules: usize,
    letters: &[char],
    allow_group: bool,
) -> Vec<Item> {
    let len = rng.gen_range(1..=3);
    (0..len)
        .map(|_| {
            let roll = rng.gen_range(0..20);
            let atom = if roll < 10 {
                Atom::Lit(letters[rng.gen_range(0..letters.len())])
            } else if roll < 17 || !allow_group {
                Atom::Rule(rng.gen_range(0..n_rules))
            } else {
                let n = rng.gen_range(1..=2);
                Atom::Group(
                    (0..n)
                        .map(|_| random_seq(rng, n_rules, letters, false))
                        .collect(),
                )
            };
            Item {
                atom,
                quant: random_quant(rng),
            }
        })
        .collect()
}

/// Random grammar with at most 6 alternatives in total over at most 3
/// single-character literals.
pub fn random_grammar(rng: &mut ChaCha8Rng) -> SmallGrammar {
    let n_rules = rng.gen_range(1..=3);
    let n_letters = rng.gen_range(1..=3);
    let letters: Vec<char> = ['a', 'b', 'c'][..n_letters].to_vec();
    let mut budget = 6 - n_rules;
    let mut rules = Vec::new();
    for _ in 0..n_rules {
        let extra = rng.gen_range(0..=budget.min(2));
        budget -= extra;
        let alts = (0..=extra)
            .map(|_| random_seq(rng, n_rules, &letters, true))
            .collect();
        rules.push(alts);
    }
    SmallGrammar { rules }
}

/// All strings over `alphabet` with length at most `max_len`, shortest first.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let next: Vec<String> = frontier
            .iter()
            .flat_map(|w| alphabet.iter().map(move |c| format!("{w}{c}")))
            .collect();
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Sanity checks of the recognizer itself on hand-built grammars.
pub fn recognizer_self_check() {
    let lit = |c| Item {
        atom: Atom::Lit(c),
        quant: Quant::One,
    };
    // start: "a" start | <nothing else>  ==  a+ "b"
    let g = SmallGrammar {
        rules: vec![vec![
            vec![
                lit('a'),
                Item {
                    atom: Atom::Rule(0),
                    quant: Quant::One,
                },
            ],
            vec![lit('b')],
        ]],
    };
    assert!(g.recognizes("b"));
    assert!(g.recognizes("aaab"));
    assert!(!g.recognizes("aaa"));
    assert!(!g.recognizes(""));
    // Left recursion: start: start "a" | "a"
    let g = SmallGrammar {
        rules: vec![vec![
            vec![
                Item {
                    atom: Atom::Rule(0),
                    quant: Quant::One,
                },
                lit('a'),
            ],
            vec![lit('a')],
        ]],
    };
    assert!(g.recognizes("aaaaaa"));
    assert!(!g.recognizes(""));
    // start: "a"*
    let g = SmallGrammar {
        rules: vec![vec![vec![Item {
            atom: Atom::Lit('a'),
            quant: Quant::Star,
        }]]],
    };
    let accepted: Vec<String> = all_strings(&['a'], 3)
        .into_iter()
        .filter(|s| g.recognizes(s))
        .collect();
    assert_eq!(accepted, ["", "a", "aa", "aaa"]);
}

#[derive(Debug, Default)]
pub struct EquivalenceReport {
    /// Conflict-free grammars compared string by string.
    pub grammars: usize,
    pub strings: usize,
    /// (grammar text, input, engine verdict, oracle verdict)
    pub disagreements: Vec<(String, String, bool, bool)>,
    /// Grammars whose tables needed shift preference; only soundness
    /// (engine accepts => oracle accepts) is checked on those.
    pub conflicted: usize,
    pub unsound: Vec<(String, String)>,
    pub rejected: usize,
}

/// Generate grammars from `seed` until `want` conflict-free ones have been
/// compared on every string of length <= 6 over their alphabet.
pub fn check_equivalence(seed: u64, want: usize) -> EquivalenceReport {
    use grammar_infer::engine;
    use rand::SeedableRng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivalenceReport::default();
    for _ in 0..20_000 {
        if report.grammars >= want {
            break;
        }
        let g = random_grammar(&mut rng);
        assert!(g.production_count() <= 6);
        let text = g.to_notation();
        let compiled = match engine::compile(&text) {
            Ok(c) => c,
            Err(_) => {
                report.rejected += 1;
                continue;
            }
        };
        let alphabet = g.alphabet();
        let conflict_free = compiled.warnings.is_empty();
        for s in all_strings(&alphabet, 6) {
            let lalr = engine::parse(&compiled, &s).is_ok();
            let oracle = g.recognizes(&s);
            if conflict_free {
                report.strings += 1;
                if lalr != oracle {
                    report.disagreements.push((text.clone(), s, lalr, oracle));
                }
            } else if lalr && !oracle {
                report.unsound.push((text.clone(), s));
            }
        }
        if conflict_free {
            report.grammars += 1;
        } else {
            report.conflicted += 1;
        }
    }
    report
}
