//! Propositional conditions: literals, and/or trees, and the semi-CNF form
//! (clauses plus exactly-one groups) used for the initial belief formula.

use crate::bits::BitVec;

/// Index into a problem's proposition table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropId(pub u32);

impl PropId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Debug for PropId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub prop: PropId,
    pub negated: bool,
}

impl Literal {
    pub fn pos(prop: PropId) -> Self {
        Literal {
            prop,
            negated: false,
        }
    }

    pub fn neg(prop: PropId) -> Self {
        Literal {
            prop,
            negated: true,
        }
    }

    pub fn complement(self) -> Self {
        Literal {
            prop: self.prop,
            negated: !self.negated,
        }
    }

    #[inline]
    pub fn holds_in(self, state: &BitVec) -> bool {
        state.get(self.prop.index()) != self.negated
    }
}

impl std::fmt::Debug for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.negated {
            write!(f, "!{:?}", self.prop)
        } else {
            write!(f, "{:?}", self.prop)
        }
    }
}

/// True iff the set contains no complementary pair. Duplicates are fine.
pub fn literals_consistent(lits: &[Literal]) -> bool {
    for (i, a) in lits.iter().enumerate() {
        for b in &lits[i + 1..] {
            if a.prop == b.prop && a.negated != b.negated {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Formula {
    True,
    False,
    Lit(Literal),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    /// Exactly one of the literals holds.
    OneOf(Vec<Literal>),
}

impl Formula {
    pub fn conj(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(kids) => out.extend(kids),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn disj(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(kids) => out.extend(kids),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn lits_conj(lits: &[Literal]) -> Formula {
        Formula::conj(lits.iter().map(|&l| Formula::Lit(l)).collect())
    }

    /// Negation of a conjunction of literals.
    pub fn neg_lits_conj(lits: &[Literal]) -> Formula {
        Formula::disj(lits.iter().map(|&l| Formula::Lit(l.complement())).collect())
    }

    pub fn eval(&self, state: &BitVec) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Lit(l) => l.holds_in(state),
            Formula::And(kids) => kids.iter().all(|k| k.eval(state)),
            Formula::Or(kids) => kids.iter().any(|k| k.eval(state)),
            Formula::OneOf(lits) => lits.iter().filter(|l| l.holds_in(state)).count() == 1,
        }
    }

    /// Three-valued evaluation under a partial assignment: `None` when the
    /// assigned propositions do not determine the value yet.
    pub fn eval_partial(&self, lookup: &dyn Fn(PropId) -> Option<bool>) -> Option<bool> {
        match self {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Lit(l) => lookup(l.prop).map(|v| v != l.negated),
            Formula::And(kids) => {
                let mut all_true = true;
                for k in kids {
                    match k.eval_partial(lookup) {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all_true = false,
                    }
                }
                if all_true {
                    Some(true)
                } else {
                    None
                }
            }
            Formula::Or(kids) => {
                let mut all_false = true;
                for k in kids {
                    match k.eval_partial(lookup) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => all_false = false,
                    }
                }
                if all_false {
                    Some(false)
                } else {
                    None
                }
            }
            Formula::OneOf(lits) => {
                let mut true_count = 0usize;
                let mut unknown = 0usize;
                for l in lits {
                    match lookup(l.prop).map(|v| v != l.negated) {
                        Some(true) => true_count += 1,
                        Some(false) => {}
                        None => unknown += 1,
                    }
                }
                if true_count > 1 {
                    Some(false)
                } else if unknown == 0 {
                    Some(true_count == 1)
                } else {
                    None
                }
            }
        }
    }

    pub fn collect_props(&self, out: &mut Vec<PropId>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Lit(l) => out.push(l.prop),
            Formula::And(kids) | Formula::Or(kids) => {
                for k in kids {
                    k.collect_props(out);
                }
            }
            Formula::OneOf(lits) => out.extend(lits.iter().map(|l| l.prop)),
        }
    }

    /// Top-level unit literals of a conjunction (the formula itself if it is
    /// a single literal).
    pub fn unit_literals(&self) -> Vec<Literal> {
        match self {
            Formula::Lit(l) => vec![*l],
            Formula::And(kids) => kids
                .iter()
                .filter_map(|k| match k {
                    Formula::Lit(l) => Some(*l),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Substitute known literal values and simplify. `known` maps a
    /// proposition index to Some(value) when the value is fixed.
    pub fn simplify_with(&self, known: &dyn Fn(PropId) -> Option<bool>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Lit(l) => match known(l.prop) {
                Some(v) if v != l.negated => Formula::True,
                Some(_) => Formula::False,
                None => Formula::Lit(*l),
            },
            Formula::And(kids) => {
                Formula::conj(kids.iter().map(|k| k.simplify_with(known)).collect())
            }
            Formula::Or(kids) => {
                Formula::disj(kids.iter().map(|k| k.simplify_with(known)).collect())
            }
            Formula::OneOf(lits) => {
                // Expand only as far as the fixed values force.
                let mut true_count = 0usize;
                let mut open = Vec::new();
                for l in lits {
                    match known(l.prop) {
                        Some(v) if v != l.negated => true_count += 1,
                        Some(_) => {}
                        None => open.push(*l),
                    }
                }
                match (true_count, open.len()) {
                    (0, 0) => Formula::False,
                    (0, 1) => Formula::Lit(open[0]),
                    (0, _) => Formula::OneOf(open),
                    (1, 0) => Formula::True,
                    (1, _) => Formula::conj(
                        open.into_iter()
                            .map(|l| Formula::Lit(l.complement()))
                            .collect(),
                    ),
                    _ => Formula::False,
                }
            }
        }
    }
}

/// Clause list plus exactly-one groups. The empty formula is satisfiable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SemiCnf {
    pub clauses: Vec<Vec<Literal>>,
    pub oneofs: Vec<Vec<Literal>>,
}

impl SemiCnf {
    pub fn holds_in(&self, state: &BitVec) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.holds_in(state)))
            && self
                .oneofs
                .iter()
                .all(|g| g.iter().filter(|l| l.holds_in(state)).count() == 1)
    }

    pub fn props(&self) -> Vec<PropId> {
        let mut out: Vec<PropId> = self
            .clauses
            .iter()
            .chain(self.oneofs.iter())
            .flat_map(|c| c.iter().map(|l| l.prop))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Cap on the clause count produced by distribution before falling back to
/// auxiliary-variable encoding.
pub const CNF_DISTRIBUTION_CAP: usize = 10_000;

/// Result of converting a formula to clausal form. Auxiliary variables, when
/// present, are numbered from `aux_start` upward and are not part of P.
#[derive(Clone, Debug)]
pub struct CnfResult {
    pub clauses: Vec<Vec<Literal>>,
    pub aux_vars: u32,
}

/// Convert an and/or/literal formula to CNF by distribution with subsumption
/// elimination. Falls back to a Tseitin-style encoding (fresh variables from
/// `aux_start`) when distribution exceeds [`CNF_DISTRIBUTION_CAP`] clauses.
pub fn to_cnf(f: &Formula, aux_start: u32) -> CnfResult {
    match distribute(f, CNF_DISTRIBUTION_CAP) {
        Some(clauses) => CnfResult {
            clauses,
            aux_vars: 0,
        },
        None => tseitin(f, aux_start),
    }
}

fn distribute(f: &Formula, cap: usize) -> Option<Vec<Vec<Literal>>> {
    let clauses = match f {
        Formula::True => Vec::new(),
        Formula::False => vec![Vec::new()],
        Formula::Lit(l) => vec![vec![*l]],
        Formula::OneOf(lits) => {
            let mut cs = vec![lits.clone()];
            for (i, a) in lits.iter().enumerate() {
                for b in &lits[i + 1..] {
                    cs.push(vec![a.complement(), b.complement()]);
                }
            }
            cs
        }
        Formula::And(kids) => {
            let mut cs = Vec::new();
            for k in kids {
                cs.extend(distribute(k, cap)?);
                if cs.len() > cap {
                    return None;
                }
            }
            cs
        }
        Formula::Or(kids) => {
            let mut acc: Vec<Vec<Literal>> = vec![Vec::new()];
            for k in kids {
                let kc = distribute(k, cap)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &kc {
                        let mut c = a.clone();
                        c.extend(b.iter().copied());
                        next.push(c);
                        if next.len() > cap {
                            return None;
                        }
                    }
                }
                acc = next;
            }
            acc
        }
    };
    Some(normalize_clauses(clauses))
}

/// Drop tautologies and duplicate literals, then remove subsumed clauses.
pub fn normalize_clauses(clauses: Vec<Vec<Literal>>) -> Vec<Vec<Literal>> {
    let mut cleaned: Vec<Vec<Literal>> = Vec::new();
    'outer: for mut c in clauses {
        c.sort();
        c.dedup();
        if !literals_consistent(&c) {
            continue; // tautology: contains l and !l
        }
        for prev in &cleaned {
            if subsumes(prev, &c) {
                continue 'outer;
            }
        }
        cleaned.retain(|prev| !subsumes(&c, prev));
        cleaned.push(c);
    }
    cleaned
}

fn subsumes(small: &[Literal], big: &[Literal]) -> bool {
    small.len() <= big.len() && small.iter().all(|l| big.binary_search(l).is_ok())
}

fn tseitin(f: &Formula, aux_start: u32) -> CnfResult {
    let mut clauses = Vec::new();
    let mut next = aux_start;
    let root = tseitin_rec(f, &mut clauses, &mut next);
    clauses.push(vec![root]);
    CnfResult {
        clauses: normalize_clauses(clauses),
        aux_vars: next - aux_start,
    }
}

fn tseitin_rec(f: &Formula, clauses: &mut Vec<Vec<Literal>>, next: &mut u32) -> Literal {
    let fresh = |next: &mut u32| {
        let v = Literal::pos(PropId(*next));
        *next += 1;
        v
    };
    match f {
        Formula::Lit(l) => *l,
        Formula::True => {
            let v = fresh(next);
            clauses.push(vec![v]);
            v
        }
        Formula::False => {
            let v = fresh(next);
            clauses.push(vec![v.complement()]);
            v
        }
        Formula::And(kids) => {
            let v = fresh(next);
            let kid_lits: Vec<Literal> =
                kids.iter().map(|k| tseitin_rec(k, clauses, next)).collect();
            for &k in &kid_lits {
                clauses.push(vec![v.complement(), k]);
            }
            let mut big = vec![v];
            big.extend(kid_lits.iter().map(|k| k.complement()));
            clauses.push(big);
            v
        }
        Formula::Or(kids) => {
            let v = fresh(next);
            let kid_lits: Vec<Literal> =
                kids.iter().map(|k| tseitin_rec(k, clauses, next)).collect();
            for &k in &kid_lits {
                clauses.push(vec![v, k.complement()]);
            }
            let mut big = vec![v.complement()];
            big.extend(kid_lits.iter().copied());
            clauses.push(big);
            v
        }
        Formula::OneOf(lits) => {
            let expanded = Formula::disj(
                (0..lits.len())
                    .map(|i| {
                        Formula::conj(
                            lits.iter()
                                .enumerate()
                                .map(|(j, &l)| {
                                    Formula::Lit(if i == j { l } else { l.complement() })
                                })
                                .collect(),
                        )
                    })
                    .collect(),
            );
            tseitin_rec(&expanded, clauses, next)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(p: u32) -> Literal {
        Literal::pos(PropId(p))
    }

    fn nl(p: u32) -> Literal {
        Literal::neg(PropId(p))
    }

    #[test]
    fn conj_disj_flatten() {
        let f = Formula::conj(vec![
            Formula::True,
            Formula::Lit(l(0)),
            Formula::And(vec![Formula::Lit(l(1)), Formula::Lit(l(2))]),
        ]);
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::Lit(l(0)),
                Formula::Lit(l(1)),
                Formula::Lit(l(2))
            ])
        );
        assert_eq!(
            Formula::disj(vec![Formula::False, Formula::False]),
            Formula::False
        );
        assert_eq!(Formula::conj(vec![]), Formula::True);
    }

    #[test]
    fn oneof_eval() {
        let f = Formula::OneOf(vec![l(0), l(1)]);
        let mut s = BitVec::zeros(2);
        assert!(!f.eval(&s));
        s.set(0, true);
        assert!(f.eval(&s));
        s.set(1, true);
        assert!(!f.eval(&s));
    }

    #[test]
    fn simplify_oneof_under_fixed_values() {
        let f = Formula::OneOf(vec![l(0), l(1), l(2)]);
        // p0 fixed true: the rest must be false.
        let g = f.simplify_with(&|p| if p == PropId(0) { Some(true) } else { None });
        assert_eq!(
            g,
            Formula::And(vec![Formula::Lit(nl(1)), Formula::Lit(nl(2))])
        );
        // p0, p1 fixed false: forces p2.
        let g = f.simplify_with(&|p| if p.0 <= 1 { Some(false) } else { None });
        assert_eq!(g, Formula::Lit(l(2)));
    }

    #[test]
    fn distribution_produces_expected_clauses() {
        // (a | (b & c)) -> (a|b) & (a|c)
        let f = Formula::Or(vec![
            Formula::Lit(l(0)),
            Formula::And(vec![Formula::Lit(l(1)), Formula::Lit(l(2))]),
        ]);
        let cnf = to_cnf(&f, 10);
        assert_eq!(cnf.aux_vars, 0);
        assert_eq!(cnf.clauses.len(), 2);
        assert!(cnf.clauses.contains(&vec![l(0), l(1)]));
        assert!(cnf.clauses.contains(&vec![l(0), l(2)]));
    }

    #[test]
    fn subsumption_removes_weaker_clauses() {
        let clauses = vec![vec![l(0), l(1)], vec![l(0)], vec![l(1), l(0)]];
        let out = normalize_clauses(clauses);
        assert_eq!(out, vec![vec![l(0)]]);
    }

    #[test]
    fn tseitin_kicks_in_past_the_cap() {
        // A balanced or-of-ands grid big enough to overflow the cap:
        // distribution of (x0&y0)|(x1&y1)|... with 15 disjuncts is 2^15 clauses.
        let f = Formula::disj(
            (0..15)
                .map(|i| Formula::And(vec![Formula::Lit(l(2 * i)), Formula::Lit(l(2 * i + 1))]))
                .collect(),
        );
        let cnf = to_cnf(&f, 100);
        assert!(cnf.aux_vars > 0);
        assert!(!cnf.clauses.is_empty());
    }
}
