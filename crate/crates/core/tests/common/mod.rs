//! Random propositional micro-domains with a direct set-based semantics,
//! used as an oracle for the grounded transition system and the planner.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use aht_core::kernel::{Atom, Goal};
use aht_core::lang::{ground, parse_domain, Resolution, TransitionSystem};
use aht_core::State;

/// Literal over `p0..p{n-1}`; atom index `n` is the defined fluent `d`.
#[derive(Clone, Copy, Debug)]
pub struct Lit {
    pub atom: usize,
    pub pos: bool,
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub head: Lit,
    pub body: Vec<Lit>,
}

#[derive(Clone, Debug)]
pub struct Causal {
    pub action: usize,
    pub head: Lit,
    pub body: Vec<Lit>,
}

/// A micro-domain: `n` inertial fluents, optionally one defined fluent,
/// one agent `r` and `actions` nullary-argument action schemas `aK(agent)`.
///
/// State constraints have distinct heads and their bodies only mention
/// atoms that are never constraint heads, so the closure is unique.
#[derive(Clone, Debug)]
pub struct Micro {
    pub n: usize,
    /// Bodies of the definitions of `d`; `None` when there is no `d`.
    pub defined: Option<Vec<Vec<Lit>>>,
    pub rules: Vec<Rule>,
    pub causal: Vec<Causal>,
    /// (action, body) pairs.
    pub exec: Vec<(usize, Vec<Lit>)>,
    pub actions: usize,
}

fn random_body<R: Rng>(rng: &mut R, atoms: &[usize], max: usize) -> Vec<Lit> {
    let len = rng.gen_range(1..=max.min(atoms.len()));
    atoms
        .choose_multiple(rng, len)
        .map(|&atom| Lit {
            atom,
            pos: rng.gen_bool(0.5),
        })
        .collect()
}

impl Micro {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let n = rng.gen_range(3..=6);
        let has_d = n < 6 && rng.gen_bool(0.6);
        let inertial: Vec<usize> = (0..n).collect();
        let mut all = inertial.clone();
        if has_d {
            all.push(n);
        }
        let defined = has_d.then(|| {
            (0..rng.gen_range(1..=2))
                .map(|_| random_body(rng, &inertial, 2))
                .collect()
        });
        let n_rules = rng.gen_range(0..=2);
        let heads: Vec<usize> = inertial.choose_multiple(rng, n_rules).copied().collect();
        let base: Vec<usize> = inertial.iter().copied().filter(|a| !heads.contains(a)).collect();
        let rules = heads
            .iter()
            .map(|&h| Rule {
                head: Lit {
                    atom: h,
                    pos: rng.gen_bool(0.5),
                },
                body: random_body(rng, &base, 2),
            })
            .collect();
        let actions = rng.gen_range(1..=4);
        let mut causal = Vec::new();
        let mut exec = Vec::new();
        for a in 0..actions {
            for _ in 0..rng.gen_range(1..=2) {
                let body = if rng.gen_bool(0.4) { random_body(rng, &all, 1) } else { Vec::new() };
                causal.push(Causal {
                    action: a,
                    head: Lit {
                        atom: rng.gen_range(0..n),
                        pos: rng.gen_bool(0.5),
                    },
                    body,
                });
            }
            for _ in 0..rng.gen_range(0..=2) {
                exec.push((a, random_body(rng, &all, 2)));
            }
        }
        Micro {
            n,
            defined,
            rules,
            causal,
            exec,
            actions,
        }
    }

    pub fn name(&self, atom: usize) -> String {
        if atom == self.n {
            "d".into()
        } else {
            format!("p{atom}")
        }
    }

    pub fn lit_text(&self, l: Lit) -> String {
        format!("{}{}", if l.pos { "" } else { "-" }, self.name(l.atom))
    }

    fn body_text(&self, body: &[Lit]) -> String {
        body.iter().map(|l| self.lit_text(*l)).collect::<Vec<_>>().join(", ")
    }

    pub fn action_name(&self, a: usize) -> String {
        format!("a{a}")
    }

    /// The domain in `.ald` syntax.
    pub fn text(&self) -> String {
        let mut t = String::from("sorts\n  agent.\nobjects\n  r : agent.\nfluents inertial\n");
        for i in 0..self.n {
            let _ = writeln!(t, "  p{i}.");
        }
        if self.defined.is_some() {
            t.push_str("fluents defined\n  d.\n");
        }
        t.push_str("actions agent\n");
        for a in 0..self.actions {
            let _ = writeln!(t, "  a{a}(agent).");
        }
        t.push_str("axioms\n");
        for body in self.defined.iter().flatten() {
            let _ = writeln!(t, "  d if {}.", self.body_text(body));
        }
        for r in &self.rules {
            let _ = writeln!(t, "  {} if {}.", self.lit_text(r.head), self.body_text(&r.body));
        }
        for c in &self.causal {
            let _ = write!(t, "  a{}(A) causes {}", c.action, self.lit_text(c.head));
            if !c.body.is_empty() {
                let _ = write!(t, " if {}", self.body_text(&c.body));
            }
            t.push_str(".\n");
        }
        for (a, body) in &self.exec {
            let _ = writeln!(t, "  impossible a{a}(A) if {}.", self.body_text(body));
        }
        t
    }

    pub fn system(&self) -> TransitionSystem {
        let d = parse_domain(&self.text()).unwrap_or_else(|e| panic!("{e}\n{}", self.text()));
        ground(&d, Resolution::Coarse).unwrap_or_else(|e| panic!("{e}\n{}", self.text()))
    }

    pub fn d_value(&self, mask: u8) -> bool {
        self.defined
            .as_ref()
            .is_some_and(|defs| defs.iter().any(|b| b.iter().all(|l| self.eval(*l, mask))))
    }

    /// Truth of a literal; `d` is derived from the inertial part of `mask`.
    pub fn eval(&self, l: Lit, mask: u8) -> bool {
        let v = if l.atom == self.n {
            self.d_value(mask)
        } else {
            mask >> l.atom & 1 == 1
        };
        v == l.pos
    }

    fn all(&self, body: &[Lit], mask: u8) -> bool {
        body.iter().all(|l| self.eval(*l, mask))
    }

    fn set(mask: u8, l: Lit) -> u8 {
        if l.pos {
            mask | 1 << l.atom
        } else {
            mask & !(1 << l.atom)
        }
    }

    /// Forces the head of every constraint whose body holds.
    pub fn close(&self, mut mask: u8) -> u8 {
        for r in &self.rules {
            if self.all(&r.body, mask) {
                mask = Self::set(mask, r.head);
            }
        }
        mask
    }

    pub fn is_closed(&self, mask: u8) -> bool {
        self.rules.iter().all(|r| !self.all(&r.body, mask) || self.eval(r.head, mask))
    }

    pub fn executable(&self, mask: u8, a: usize) -> bool {
        !self.exec.iter().any(|(b, body)| *b == a && self.all(body, mask))
    }

    /// Direct effects of `a` in `mask`; `None` on contradictory effects.
    pub fn effects(&self, mask: u8, a: usize) -> Option<Vec<Lit>> {
        let mut out: Vec<Lit> = Vec::new();
        for c in self.causal.iter().filter(|c| c.action == a && self.all(&c.body, mask)) {
            match out.iter().find(|e| e.atom == c.head.atom) {
                Some(e) if e.pos != c.head.pos => return None,
                Some(_) => {}
                None => out.push(c.head),
            }
        }
        Some(out)
    }

    /// Successor of a closed state under `a`; `None` when `a` is not
    /// executable or no consistent successor exists.
    pub fn step(&self, mask: u8, a: usize) -> Option<u8> {
        if !self.executable(mask, a) {
            return None;
        }
        let effects = self.effects(mask, a)?;
        let mut next = mask;
        for e in &effects {
            next = Self::set(next, *e);
        }
        for r in &self.rules {
            if !self.all(&r.body, next) {
                continue;
            }
            if effects.iter().any(|e| e.atom == r.head.atom && e.pos != r.head.pos) {
                return None;
            }
            next = Self::set(next, r.head);
        }
        Some(next)
    }

    /// Length of a shortest action sequence reaching `goal`, searching up
    /// to `horizon` steps.
    pub fn bfs(&self, start: u8, goal: &[Lit], horizon: usize) -> Option<usize> {
        let mut dist = [usize::MAX; 64];
        let mut queue = VecDeque::from([start]);
        dist[start as usize] = 0;
        while let Some(m) = queue.pop_front() {
            if self.all(goal, m) {
                return Some(dist[m as usize]);
            }
            if dist[m as usize] == horizon {
                continue;
            }
            for a in 0..self.actions {
                if let Some(next) = self.step(m, a) {
                    if dist[next as usize] == usize::MAX {
                        dist[next as usize] = dist[m as usize] + 1;
                        queue.push_back(next);
                    }
                }
            }
        }
        None
    }

    pub fn random_closed_state<R: Rng>(&self, rng: &mut R) -> u8 {
        self.close(rng.gen_range(0..(1u16 << self.n)) as u8)
    }

    pub fn random_goal<R: Rng>(&self, rng: &mut R) -> Vec<Lit> {
        let mut atoms: Vec<usize> = (0..self.n).collect();
        if self.defined.is_some() {
            atoms.push(self.n);
        }
        random_body(rng, &atoms, 3)
    }

    pub fn goal(&self, lits: &[Lit]) -> Goal {
        let text: Vec<String> = lits.iter().map(|l| self.lit_text(*l)).collect();
        Goal::parse("g", &text).unwrap()
    }

    pub fn state(&self, ts: &TransitionSystem, mask: u8) -> State {
        let atoms: Vec<Atom> = (0..self.n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.name(i).parse().unwrap())
            .collect();
        ts.state_from(&atoms, false).unwrap()
    }

    /// Reads an oracle mask back from a state, checking `d` on the way.
    pub fn mask_of(&self, s: &State) -> Result<u8, String> {
        let mut mask = 0u8;
        for i in 0..self.n {
            let atom: Atom = self.name(i).parse().unwrap();
            if s.value(&atom).map_err(|e| e.to_string())? {
                mask |= 1 << i;
            }
        }
        if self.defined.is_some() {
            let d = s.value(&"d".parse().unwrap()).map_err(|e| e.to_string())?;
            if d != self.d_value(mask) {
                return Err(format!("d is {d} in state {mask:#b}"));
            }
        }
        Ok(mask)
    }

    pub fn action(&self, a: usize) -> aht_core::Action {
        aht_core::Action::new(self.action_name(a), &["r"])
    }
}
