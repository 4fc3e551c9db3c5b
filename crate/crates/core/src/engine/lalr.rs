//! LALR(1) table construction.
//!
//! LR(0) item sets first, then lookaheads by spontaneous generation and
//! propagation over kernel items. Shift/reduce collisions resolve to shift
//! and are recorded; reduce/reduce collisions are fatal.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::error::EngineError;
use super::lower::{Bnf, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Error,
    Shift(usize),
    /// Index into `Bnf::productions`.
    Reduce(usize),
    Accept,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictWarning {
    pub state: usize,
    pub terminal: String,
    /// Production whose reduction lost to the shift.
    pub production: String,
}

impl std::fmt::Display for ConflictWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Shift/Reduce conflict in state {} on {}: shift preferred over reducing {}",
            self.state, self.terminal, self.production
        )
    }
}

/// Action columns are the grammar's terminals followed by end of input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tables {
    pub action: Vec<Vec<Action>>,
    pub goto: Vec<Vec<Option<usize>>>,
    pub end_column: usize,
}

impl Tables {
    pub fn num_states(&self) -> usize {
        self.action.len()
    }
}

/// LR(0) item: (augmented production, dot position).
type Item = (usize, usize);

struct Augmented<'a> {
    bnf: &'a Bnf,
    /// Production 0 is `$accept -> start`; production p+1 is bnf production p.
    prods: Vec<(usize, Vec<Symbol>)>,
    by_lhs: Vec<Vec<usize>>,
    nullable: Vec<bool>,
    first: Vec<BTreeSet<usize>>,
    end: usize,
}

impl<'a> Augmented<'a> {
    fn new(bnf: &'a Bnf) -> Self {
        let nn = bnf.nonterminals.len();
        let accept = nn;
        let mut prods = vec![(accept, vec![Symbol::Nonterminal(0)])];
        prods.extend(bnf.productions.iter().map(|p| (p.lhs, p.rhs.clone())));
        let mut by_lhs = vec![Vec::new(); nn + 1];
        for (i, (lhs, _)) in prods.iter().enumerate() {
            by_lhs[*lhs].push(i);
        }
        let mut g = Augmented {
            bnf,
            prods,
            by_lhs,
            nullable: vec![false; nn + 1],
            first: vec![BTreeSet::new(); nn + 1],
            end: bnf.terminals.len(),
        };
        g.compute_first();
        g
    }

    fn compute_first(&mut self) {
        let mut changed = true;
        while changed {
            changed = false;
            for (lhs, rhs) in &self.prods {
                let (set, nullable) = first_of(&self.first, &self.nullable, rhs);
                if nullable && !self.nullable[*lhs] {
                    self.nullable[*lhs] = true;
                    changed = true;
                }
                let before = self.first[*lhs].len();
                self.first[*lhs].extend(set);
                changed |= self.first[*lhs].len() != before;
            }
        }
    }

    fn closure0(&self, kernel: &[Item]) -> BTreeSet<Item> {
        let mut set: BTreeSet<Item> = kernel.iter().copied().collect();
        let mut work: Vec<Item> = kernel.to_vec();
        while let Some((p, d)) = work.pop() {
            if let Some(Symbol::Nonterminal(b)) = self.prods[p].1.get(d) {
                for &q in &self.by_lhs[*b] {
                    if set.insert((q, 0)) {
                        work.push((q, 0));
                    }
                }
            }
        }
        set
    }

    /// LR(1) closure where each item carries a lookahead set.
    fn closure1(&self, kernel: Vec<(Item, BTreeSet<usize>)>) -> BTreeMap<Item, BTreeSet<usize>> {
        let mut map: BTreeMap<Item, BTreeSet<usize>> = BTreeMap::new();
        let mut work = Vec::new();
        for (item, la) in kernel {
            map.entry(item).or_default().extend(la);
            work.push(item);
        }
        while let Some((p, d)) = work.pop() {
            let rhs = &self.prods[p].1;
            let Some(Symbol::Nonterminal(b)) = rhs.get(d) else {
                continue;
            };
            let (mut la, nullable) = first_of(&self.first, &self.nullable, &rhs[d + 1..]);
            if nullable {
                la.extend(map[&(p, d)].iter().copied());
            }
            for &q in &self.by_lhs[*b] {
                let is_new = !map.contains_key(&(q, 0));
                let entry = map.entry((q, 0)).or_default();
                let before = entry.len();
                entry.extend(la.iter().copied());
                if is_new || entry.len() != before {
                    work.push((q, 0));
                }
            }
        }
        map
    }

    fn render(&self, p: usize) -> String {
        if p == 0 {
            "$accept -> start".to_string()
        } else {
            self.bnf.render_production(p - 1)
        }
    }

    fn terminal_name(&self, t: usize) -> String {
        if t == self.end {
            "$END".to_string()
        } else {
            self.bnf.terminals[t].name.clone()
        }
    }
}

fn first_of(
    first: &[BTreeSet<usize>],
    nullable: &[bool],
    seq: &[Symbol],
) -> (BTreeSet<usize>, bool) {
    let mut out = BTreeSet::new();
    for s in seq {
        match *s {
            Symbol::Terminal(t) => {
                out.insert(t);
                return (out, false);
            }
            Symbol::Nonterminal(n) => {
                out.extend(first[n].iter().copied());
                if !nullable[n] {
                    return (out, false);
                }
            }
        }
    }
    (out, true)
}

pub struct Built {
    pub tables: Tables,
    pub warnings: Vec<ConflictWarning>,
}

pub fn build(bnf: &Bnf) -> Result<Built, EngineError> {
    let g = Augmented::new(bnf);
    let nt = bnf.terminals.len();
    let nn = bnf.nonterminals.len();
    let dummy = nt + 1;

    // LR(0) collection.
    let mut kernels: Vec<Vec<Item>> = vec![vec![(0, 0)]];
    let mut index: HashMap<Vec<Item>, usize> = HashMap::from([(vec![(0, 0)], 0)]);
    let mut trans: Vec<BTreeMap<Symbol, usize>> = Vec::new();
    let mut s = 0;
    while s < kernels.len() {
        let closure = g.closure0(&kernels[s]);
        let mut moves: BTreeMap<Symbol, BTreeSet<Item>> = BTreeMap::new();
        for (p, d) in closure {
            if let Some(x) = g.prods[p].1.get(d) {
                moves.entry(*x).or_default().insert((p, d + 1));
            }
        }
        let mut row = BTreeMap::new();
        for (x, items) in moves {
            let kernel: Vec<Item> = items.into_iter().collect();
            let t = match index.get(&kernel) {
                Some(&t) => t,
                None => {
                    kernels.push(kernel.clone());
                    index.insert(kernel, kernels.len() - 1);
                    kernels.len() - 1
                }
            };
            row.insert(x, t);
        }
        trans.push(row);
        s += 1;
    }
    let n_states = kernels.len();

    // Lookaheads on kernel items.
    let mut la: Vec<Vec<BTreeSet<usize>>> = kernels
        .iter()
        .map(|k| vec![BTreeSet::new(); k.len()])
        .collect();
    la[0][0].insert(g.end);
    let mut propagate: Vec<Vec<Vec<(usize, usize)>>> =
        kernels.iter().map(|k| vec![Vec::new(); k.len()]).collect();
    for s in 0..n_states {
        for (ki, &item) in kernels[s].iter().enumerate() {
            let closure = g.closure1(vec![(item, BTreeSet::from([dummy]))]);
            for ((p, d), set) in closure {
                let Some(x) = g.prods[p].1.get(d) else {
                    continue;
                };
                let t = trans[s][x];
                let tk = kernels[t]
                    .binary_search(&(p, d + 1))
                    .expect("advanced item is in kernel");
                for &a in &set {
                    if a == dummy {
                        propagate[s][ki].push((t, tk));
                    } else {
                        la[t][tk].insert(a);
                    }
                }
            }
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..n_states {
            for ki in 0..kernels[s].len() {
                if la[s][ki].is_empty() {
                    continue;
                }
                let src = la[s][ki].clone();
                for &(t, tk) in &propagate[s][ki] {
                    let before = la[t][tk].len();
                    la[t][tk].extend(src.iter().copied());
                    changed |= la[t][tk].len() != before;
                }
            }
        }
    }

    // Tables.
    let mut action = vec![vec![Action::Error; nt + 1]; n_states];
    let mut goto = vec![vec![None; nn]; n_states];
    let mut warnings = Vec::new();
    for s in 0..n_states {
        let kernel: Vec<(Item, BTreeSet<usize>)> = kernels[s]
            .iter()
            .copied()
            .zip(la[s].iter().cloned())
            .collect();
        let closure = g.closure1(kernel);
        let mut reduces: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for ((p, d), set) in &closure {
            if *d == g.prods[*p].1.len() {
                for &a in set {
                    reduces.entry(a).or_default().insert(*p);
                }
            }
        }
        for (x, &t) in &trans[s] {
            match *x {
                Symbol::Terminal(a) => action[s][a] = Action::Shift(t),
                Symbol::Nonterminal(n) => goto[s][n] = Some(t),
            }
        }
        for (a, prods) in reduces {
            let prods: Vec<usize> = prods.into_iter().collect();
            if prods.len() > 1 {
                return Err(EngineError::ReduceReduceConflict {
                    state: s,
                    terminal: g.terminal_name(a),
                    productions: (g.render(prods[0]), g.render(prods[1])),
                });
            }
            let p = prods[0];
            if let Action::Shift(_) = action[s][a] {
                warnings.push(ConflictWarning {
                    state: s,
                    terminal: g.terminal_name(a),
                    production: g.render(p),
                });
                continue;
            }
            action[s][a] = if p == 0 {
                Action::Accept
            } else {
                Action::Reduce(p - 1)
            };
        }
    }

    Ok(Built {
        tables: Tables {
            action,
            goto,
            end_column: nt,
        },
        warnings,
    })
}
