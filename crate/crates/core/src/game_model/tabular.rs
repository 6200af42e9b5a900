use std::fmt::Write as _;
use std::path::Path;

use super::{ActionModel, Game, PolicyPair};
use crate::error::{Error, Result};

const ROW_SUM_SLACK: f64 = 1e-12;

/// One MIN action of a tabular game: reward and sparse discounted kernel row.
#[derive(Debug, Clone, PartialEq)]
pub struct MinActionSpec {
    pub id: usize,
    pub reward: f64,
    pub row: Vec<(usize, f64)>,
}

impl MinActionSpec {
    pub fn new(id: usize, reward: f64, row: Vec<(usize, f64)>) -> Self {
        MinActionSpec { id, reward, row }
    }
}

/// One MAX action together with MIN's replies `B(x, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxActionSpec {
    pub id: usize,
    pub min_actions: Vec<MinActionSpec>,
}

impl MaxActionSpec {
    pub fn new(id: usize, min_actions: Vec<MinActionSpec>) -> Self {
        MaxActionSpec { id, min_actions }
    }

    pub fn single(id: usize, b: MinActionSpec) -> Self {
        MaxActionSpec { id, min_actions: vec![b] }
    }
}

/// A game with finite action sets stored in flat arrays.
///
/// Policies index actions by position: `alpha[x]` is a position in `A(x)` and
/// `beta[x]` a position in `B(x, alpha[x])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    n: usize,
    max_start: Vec<usize>,
    max_ids: Vec<usize>,
    min_start: Vec<usize>,
    min_ids: Vec<usize>,
    rewards: Vec<f64>,
    row_start: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
}

impl GameInstance {
    /// Build from nested action lists, one entry per state.
    pub fn new(n_states: usize, states: Vec<Vec<MaxActionSpec>>) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::InvalidGame("a game needs at least one state".into()));
        }
        if states.len() != n_states {
            return Err(Error::DimensionMismatch { expected: n_states, found: states.len() });
        }
        let mut g = GameInstance {
            n: n_states,
            max_start: vec![0],
            max_ids: Vec::new(),
            min_start: vec![0],
            min_ids: Vec::new(),
            rewards: Vec::new(),
            row_start: vec![0],
            row_cols: Vec::new(),
            row_vals: Vec::new(),
        };
        for (x, acts) in states.into_iter().enumerate() {
            if acts.is_empty() {
                return Err(Error::InvalidGame(format!("state {x} has no MAX action")));
            }
            for a in acts {
                if a.min_actions.is_empty() {
                    return Err(Error::InvalidGame(format!("state {x}, MAX action {} has no MIN action", a.id)));
                }
                g.max_ids.push(a.id);
                for b in a.min_actions {
                    g.push_min(x, a.id, b)?;
                }
                g.min_start.push(g.min_ids.len());
            }
            g.max_start.push(g.max_ids.len());
        }
        Ok(g)
    }

    fn push_min(&mut self, x: usize, a: usize, b: MinActionSpec) -> Result<()> {
        let ctx = || format!("state {x}, actions ({a}, {})", b.id);
        if !b.reward.is_finite() {
            return Err(Error::InvalidGame(format!("{}: non-finite reward", ctx())));
        }
        let mut row = b.row;
        row.sort_by_key(|e| e.0);
        let mut sum = 0.0;
        let start = self.row_cols.len();
        for (y, q) in row {
            if y >= self.n {
                return Err(Error::InvalidGame(format!("{}: target state {y} out of range", ctx())));
            }
            if !(q >= 0.0) || !q.is_finite() {
                return Err(Error::InvalidGame(format!("{}: invalid weight {q}", ctx())));
            }
            sum += q;
            if q == 0.0 {
                continue;
            }
            if self.row_cols.len() > start && *self.row_cols.last().unwrap() == y {
                *self.row_vals.last_mut().unwrap() += q;
            } else {
                self.row_cols.push(y);
                self.row_vals.push(q);
            }
        }
        if sum > 1.0 + ROW_SUM_SLACK {
            return Err(Error::InvalidGame(format!("{}: kernel row sums to {sum} > 1", ctx())));
        }
        self.min_ids.push(b.id);
        self.rewards.push(b.reward);
        self.row_start.push(self.row_cols.len());
        Ok(())
    }

    /// One state, one action each, self-loop weight `q`, reward `r`.
    pub fn single_state(q: f64, r: f64) -> Self {
        GameInstance::new(1, vec![vec![MaxActionSpec::single(0, MinActionSpec::new(0, r, vec![(0, q)]))]])
            .expect("valid single-state game")
    }

    pub fn n_max(&self, x: usize) -> usize {
        self.max_start[x + 1] - self.max_start[x]
    }

    pub fn n_min(&self, x: usize, a: usize) -> usize {
        let g = self.max_start[x] + a;
        self.min_start[g + 1] - self.min_start[g]
    }

    /// Identifier of the `a`-th MAX action at `x`.
    pub fn max_id(&self, x: usize, a: usize) -> usize {
        self.max_ids[self.max_start[x] + a]
    }

    /// Identifier of the `b`-th MIN reply to the `a`-th MAX action at `x`.
    pub fn min_id(&self, x: usize, a: usize, b: usize) -> usize {
        self.min_ids[self.min_start[self.max_start[x] + a] + b]
    }

    /// Position of the MAX action with identifier `id` at `x`.
    pub fn max_position(&self, x: usize, id: usize) -> Option<usize> {
        (0..self.n_max(x)).find(|&a| self.max_id(x, a) == id)
    }

    /// Position of the MIN action with identifier `id` in `B(x, a)`.
    pub fn min_position(&self, x: usize, a: usize, id: usize) -> Option<usize> {
        (0..self.n_min(x, a)).find(|&b| self.min_id(x, a, b) == id)
    }

    #[inline]
    fn slot(&self, x: usize, a: usize, b: usize) -> usize {
        self.min_start[self.max_start[x] + a] + b
    }

    /// Reward and kernel row of `(x, a, b)` as borrowed slices.
    pub fn row(&self, x: usize, a: usize, b: usize) -> (f64, &[usize], &[f64]) {
        let s = self.slot(x, a, b);
        let (lo, hi) = (self.row_start[s], self.row_start[s + 1]);
        (self.rewards[s], &self.row_cols[lo..hi], &self.row_vals[lo..hi])
    }

    #[inline]
    fn value(&self, x: usize, a: usize, b: usize, v: &[f64]) -> f64 {
        let (r, cols, vals) = self.row(x, a, b);
        cols.iter().zip(vals).map(|(&y, &q)| q * v[y]).sum::<f64>() + r
    }

    fn min_over_b(&self, x: usize, a: usize, v: &[f64]) -> (usize, f64) {
        let mut best = (0, self.value(x, a, 0, v));
        for b in 1..self.n_min(x, a) {
            let val = self.value(x, a, b, v);
            if val < best.1 {
                best = (b, val);
            }
        }
        best
    }

    /// Largest kernel row sum over all action triples.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.rewards.len())
            .map(|s| self.row_vals[self.row_start[s]..self.row_start[s + 1]].iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Parse the plain-text tabular format.
    ///
    /// ```text
    /// game <n_states>
    /// state <x> <|A(x)|>
    /// maxact <a> <|B(x,a)|>
    /// minact <b> <reward> <nnz> <y> <q> ...
    /// ```
    ///
    /// Whitespace and line breaks between tokens are free; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut toks = Tokens::new(text);
        toks.keyword("game")?;
        let n = toks.usize()?;
        if n == 0 {
            return Err(toks.err("a game needs at least one state"));
        }
        let mut states: Vec<Option<Vec<MaxActionSpec>>> = vec![None; n];
        for _ in 0..n {
            toks.keyword("state")?;
            let x = toks.usize()?;
            if x >= n {
                return Err(toks.err(format!("state {x} out of range")));
            }
            if states[x].is_some() {
                return Err(toks.err(format!("state {x} defined twice")));
            }
            let na = toks.usize()?;
            let mut acts = Vec::with_capacity(na);
            for _ in 0..na {
                toks.keyword("maxact")?;
                let a = toks.usize()?;
                let nb = toks.usize()?;
                let mut mins = Vec::with_capacity(nb);
                for _ in 0..nb {
                    toks.keyword("minact")?;
                    let b = toks.usize()?;
                    let r = toks.f64()?;
                    let nnz = toks.usize()?;
                    let mut row = Vec::with_capacity(nnz);
                    let mut sum = 0.0;
                    for _ in 0..nnz {
                        let y = toks.usize()?;
                        let q = toks.f64()?;
                        sum += q;
                        row.push((y, q));
                    }
                    if sum > 1.0 + ROW_SUM_SLACK {
                        return Err(toks.err(format!("kernel row of state {x} sums to {sum} > 1")));
                    }
                    mins.push(MinActionSpec::new(b, r, row));
                }
                acts.push(MaxActionSpec::new(a, mins));
            }
            states[x] = Some(acts);
        }
        if let Some((line, t)) = toks.next() {
            return Err(Error::Parse { line, message: format!("unexpected trailing token {t:?}") });
        }
        GameInstance::new(n, states.into_iter().map(|s| s.unwrap()).collect())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serialize in the format accepted by [`GameInstance::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "game {}", self.n);
        for x in 0..self.n {
            let _ = writeln!(s, "state {x} {}", self.n_max(x));
            for a in 0..self.n_max(x) {
                let _ = writeln!(s, "maxact {} {}", self.max_id(x, a), self.n_min(x, a));
                for b in 0..self.n_min(x, a) {
                    let (r, cols, vals) = self.row(x, a, b);
                    let _ = write!(s, "minact {} {r:e} {}", self.min_id(x, a, b), cols.len());
                    for (y, q) in cols.iter().zip(vals) {
                        let _ = write!(s, " {y} {q:e}");
                    }
                    s.push('\n');
                }
            }
        }
        s
    }
}

impl Game for GameInstance {
    type Max = usize;
    type Min = usize;

    fn n_states(&self) -> usize {
        self.n
    }

    fn action_model(&self) -> ActionModel {
        ActionModel::FiniteEnumeration
    }

    fn transition(&self, x: usize, a: &usize, b: &usize, row: &mut Vec<(usize, f64)>) -> Result<f64> {
        self.check_max(x, a)?;
        self.check_min(x, a, b)?;
        let (r, cols, vals) = self.row(x, *a, *b);
        row.clear();
        row.extend(cols.iter().copied().zip(vals.iter().copied()));
        Ok(r)
    }

    fn one_step(&self, x: usize, a: &usize, b: &usize, v: &[f64]) -> Result<f64> {
        self.check_max(x, a)?;
        self.check_min(x, a, b)?;
        Ok(self.value(x, *a, *b, v))
    }

    fn best_min(&self, x: usize, a: &usize, v: &[f64]) -> Result<(usize, f64)> {
        self.check_max(x, a)?;
        Ok(self.min_over_b(x, *a, v))
    }

    fn best_max(&self, x: usize, v: &[f64]) -> Result<(usize, usize, f64)> {
        let (b0, v0) = self.min_over_b(x, 0, v);
        let mut best = (0, b0, v0);
        for a in 1..self.n_max(x) {
            let (b, val) = self.min_over_b(x, a, v);
            if val > best.2 {
                best = (a, b, val);
            }
        }
        Ok(best)
    }

    fn initial_policy(&self) -> PolicyPair<usize, usize> {
        PolicyPair { alpha: vec![0; self.n], beta: vec![0; self.n] }
    }

    fn check_max(&self, x: usize, a: &usize) -> Result<()> {
        if x >= self.n {
            return Err(Error::InvalidAction { state: x, reason: "state out of range".into() });
        }
        if *a >= self.n_max(x) {
            return Err(Error::InvalidAction { state: x, reason: format!("MAX action {a} of {}", self.n_max(x)) });
        }
        Ok(())
    }

    fn check_min(&self, x: usize, a: &usize, b: &usize) -> Result<()> {
        self.check_max(x, a)?;
        if *b >= self.n_min(x, *a) {
            return Err(Error::InvalidAction { state: x, reason: format!("MIN action {b} of {}", self.n_min(x, *a)) });
        }
        Ok(())
    }
}

struct Tokens<'a> {
    iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let iter = text.lines().enumerate().flat_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("");
            l.split_whitespace().map(move |t| (i + 1, t))
        });
        Tokens { iter: Box::new(iter), line: 1 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.iter.next();
        if let Some((l, _)) = t {
            self.line = l;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.next().map(|t| t.1).ok_or_else(|| self.err("unexpected end of input"))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let t = self.token()?;
        if t == kw {
            Ok(())
        } else {
            Err(self.err(format!("expected '{kw}', found {t:?}")))
        }
    }

    fn usize(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| self.err(format!("expected a non-negative integer, found {t:?}")))
    }

    fn f64(&mut self) -> Result<f64> {
        let t = self.token()?;
        t.parse().map_err(|_| self.err(format!("expected a number, found {t:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::bellman;

    const TWO_ACTIONS: &str = "game 1\nstate 0 1\nmaxact 0 2\nminact 0 3.0 0\nminact 1 2.0 0\n";

    #[test]
    fn selects_cheaper_min_action() {
        let g = GameInstance::parse(TWO_ACTIONS).unwrap();
        assert_eq!(g.best_min(0, &0, &[0.0]).unwrap(), (1, 2.0));
    }

    #[test]
    fn text_round_trip() {
        let text = "# comment\ngame 2\nstate 1 1\nmaxact 4 1\nminact 0 -1.5 1 0 0.25\nstate 0 2\nmaxact 0 1\nminact 7 1 2 0 0.5 1 0.5\nmaxact 1 1 minact 0 0 0\n";
        let g = GameInstance::parse(text).unwrap();
        assert_eq!(g.n_max(0), 2);
        assert_eq!(g.max_id(1, 0), 4);
        assert_eq!(g.min_id(0, 0, 0), 7);
        assert_eq!(GameInstance::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn rejects_superstochastic_rows() {
        let text = "game 1\nstate 0 1\nmaxact 0 1\nminact 0 0 2 0 0.6 0 0.5\n";
        assert!(matches!(GameInstance::parse(text), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(GameInstance::parse("game 1\nstate 0 0\n").is_err());
        assert!(GameInstance::parse("game 1\nstate 0 1\nmaxact 0 1\nminact 0 0 1 3 0.5\n").is_err());
        assert!(GameInstance::parse("game 1\nstate 0 1\nmaxact 0 1\nminact 0 0 1 0 -0.5\n").is_err());
        assert!(GameInstance::parse("game 2\nstate 0 1\nmaxact 0 1\nminact 0 0 0\n").is_err());
        assert!(GameInstance::parse("game 1\nstate 0 1\nmaxact 0 1\nminact 0 0 0\nextra").is_err());
    }

    #[test]
    fn invalid_policy_index_is_an_error() {
        let g = GameInstance::parse(TWO_ACTIONS).unwrap();
        assert!(matches!(g.best_min(0, &3, &[0.0]), Err(Error::InvalidAction { state: 0, .. })));
        assert!(g.one_step(0, &0, &2, &[0.0]).is_err());
    }

    #[test]
    fn max_picks_larger_guaranteed_value() {
        // a0: min(1, 5) = 1; a1: min(3, 4) = 3
        let text = "game 1\nstate 0 2\nmaxact 0 2\nminact 0 1 0\nminact 1 5 0\nmaxact 1 2\nminact 0 3 0\nminact 1 4 0\n";
        let g = GameInstance::parse(text).unwrap();
        assert_eq!(g.best_max(0, &[0.0]).unwrap(), (1, 0, 3.0));
        assert_eq!(bellman(&g, &[0.0]).unwrap(), vec![3.0]);
    }
}
