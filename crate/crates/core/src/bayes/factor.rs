//! Dense table factors over discrete variables.

/// Non-negative function over the joint states of `vars`.
///
/// `values` is row-major with the last variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

/// Advances a mixed-radix counter; false once it wraps to all zeros.
fn advance(state: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..state.len()).rev() {
        state[i] += 1;
        if state[i] < cards[i] {
            return true;
        }
        state[i] = 0;
    }
    false
}

impl Factor {
    pub fn scalar(value: f64) -> Self {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.contains(&var)
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.vars.iter().zip(&other.cards) {
            if !vars.contains(v) {
                vars.push(*v);
                cards.push(*c);
            }
        }
        let map_strides = |f: &Factor| {
            let own = strides(&f.cards);
            vars.iter()
                .map(|v| f.vars.iter().position(|u| u == v).map_or(0, |i| own[i]))
                .collect::<Vec<_>>()
        };
        let sa = map_strides(self);
        let sb = map_strides(other);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut state = vec![0; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        loop {
            values.push(self.values[ia] * other.values[ib]);
            // incremental odometer keeps both source offsets in step
            let mut i = vars.len();
            loop {
                if i == 0 {
                    return Factor { vars, cards, values };
                }
                i -= 1;
                state[i] += 1;
                ia += sa[i];
                ib += sb[i];
                if state[i] < cards[i] {
                    break;
                }
                ia -= sa[i] * cards[i];
                ib -= sb[i] * cards[i];
                state[i] = 0;
            }
        }
    }

    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        let card = cards.remove(pos);
        let size: usize = cards.iter().product();
        let mut values = vec![0.0; size];
        let mut state = vec![0; self.vars.len()];
        let mut flat = 0usize;
        loop {
            let dst: usize = state
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != pos)
                .fold(0, |acc, (i, &s)| acc * self.cards[i] + s);
            values[dst] += self.values[flat];
            flat += 1;
            if !advance(&mut state, &self.cards) {
                break;
            }
        }
        debug_assert_eq!(flat, size * card);
        Factor { vars, cards, values }
    }

    /// Fixes every observed variable in scope and drops it.
    pub fn reduce(&self, evidence: &[Option<usize>]) -> Factor {
        let keep: Vec<usize> = (0..self.vars.len())
            .filter(|&i| evidence[self.vars[i]].is_none())
            .collect();
        if keep.len() == self.vars.len() {
            return self.clone();
        }
        let src = strides(&self.cards);
        let base: usize = (0..self.vars.len())
            .filter_map(|i| evidence[self.vars[i]].map(|s| s * src[i]))
            .sum();
        let vars: Vec<usize> = keep.iter().map(|&i| self.vars[i]).collect();
        let cards: Vec<usize> = keep.iter().map(|&i| self.cards[i]).collect();
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut state = vec![0; keep.len()];
        loop {
            let off: usize = keep.iter().zip(&state).map(|(&i, &s)| s * src[i]).sum();
            values.push(self.values[base + off]);
            if !advance(&mut state, &cards) {
                break;
            }
        }
        Factor { vars, cards, values }
    }
}
